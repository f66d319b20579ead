//! Terminated rate-1/2 convolutional code, constraint length 7, generators
//! 133/171 (octal), optionally punctured to rate 3/4, with a max-log soft
//! Viterbi decoder.
//!
//! Bits are binary `0/1`. Soft inputs follow the detector convention: a
//! positive LLR means bipolar `+1`, i.e. binary `0`.

use crate::error::{Error, Result};

const CONSTRAINT: usize = 7;
const MEMORY: usize = CONSTRAINT - 1;
const STATES: usize = 1 << MEMORY;
const G0: u32 = 0o133;
const G1: u32 = 0o171;
/// Kept positions of the mother code output `A1 B1 A2 B2 A3 B3`.
const PUNCTURE_3_4: [bool; 6] = [true, true, true, false, false, true];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeRate {
    Half,
    ThreeQuarters,
}

impl CodeRate {
    pub fn value(self) -> f64 {
        match self {
            CodeRate::Half => 0.5,
            CodeRate::ThreeQuarters => 0.75,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CodeRate::Half => "1/2",
            CodeRate::ThreeQuarters => "3/4",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "1/2" => Ok(CodeRate::Half),
            "3/4" => Ok(CodeRate::ThreeQuarters),
            other => Err(Error::InvalidParameter(format!(
                "unsupported code rate {other:?} (expected \"1/2\" or \"3/4\")"
            ))),
        }
    }

    fn mask(self) -> &'static [bool] {
        match self {
            CodeRate::Half => &[true, true],
            CodeRate::ThreeQuarters => &PUNCTURE_3_4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeSpec {
    pub rate: CodeRate,
    /// Information bits per block, excluding the six tail bits.
    pub block_bits: usize,
}

#[inline]
fn parity(x: u32) -> u8 {
    (x.count_ones() & 1) as u8
}

#[inline]
fn outputs(state: usize, input: u8) -> (u8, u8) {
    let reg = (u32::from(input) << MEMORY) | state as u32;
    (parity(reg & G0), parity(reg & G1))
}

#[inline]
fn next_state(state: usize, input: u8) -> usize {
    ((usize::from(input) << MEMORY) | state) >> 1
}

impl CodeSpec {
    pub fn new(rate: CodeRate, block_bits: usize) -> Result<Self> {
        let spec = Self { rate, block_bits };
        let steps = block_bits + MEMORY;
        let period = rate.mask().len() / 2;
        if block_bits == 0 || !steps.is_multiple_of(period) {
            return Err(Error::InvalidParameter(format!(
                "block of {block_bits} bits plus {MEMORY} tail bits does not fill whole puncturing periods of {period}"
            )));
        }
        Ok(spec)
    }

    /// Largest block whose codeword is exactly `coded_len` bits.
    pub fn fit(rate: CodeRate, coded_len: usize) -> Result<Self> {
        let mask = rate.mask();
        let kept = mask.iter().filter(|&&b| b).count();
        if !coded_len.is_multiple_of(kept) {
            return Err(Error::InvalidParameter(format!(
                "{coded_len} coded bits is not a whole number of rate {} periods",
                rate.name()
            )));
        }
        let steps = coded_len / kept * (mask.len() / 2);
        if steps <= MEMORY {
            return Err(Error::InvalidParameter(format!(
                "{coded_len} coded bits cannot hold the {MEMORY} tail bits"
            )));
        }
        Self::new(rate, steps - MEMORY)
    }

    pub fn coded_len(&self) -> usize {
        let mask = self.rate.mask();
        let kept = mask.iter().filter(|&&b| b).count();
        (self.block_bits + MEMORY) / (mask.len() / 2) * kept
    }

    /// Terminated, punctured encoding.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.block_bits {
            return Err(Error::LengthMismatch {
                expected: self.block_bits,
                got: info.len(),
            });
        }
        let mask = self.rate.mask();
        let mut out = Vec::with_capacity(self.coded_len());
        let mut state = 0usize;
        let mut pos = 0usize;
        for &u in info.iter().chain(std::iter::repeat_n(&0, MEMORY)) {
            if u > 1 {
                return Err(Error::InvalidParameter(format!("bit value {u}")));
            }
            let (a, b) = outputs(state, u);
            for bit in [a, b] {
                if mask[pos % mask.len()] {
                    out.push(bit);
                }
                pos += 1;
            }
            state = next_state(state, u);
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }

    /// Max-log Viterbi decoding of a punctured codeword's LLRs; punctured
    /// positions are treated as erasures.
    pub fn decode_soft(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        if llrs.len() != self.coded_len() {
            return Err(Error::LengthMismatch {
                expected: self.coded_len(),
                got: llrs.len(),
            });
        }
        let mask = self.rate.mask();
        let steps = self.block_bits + MEMORY;
        let mut soft = vec![0.0; 2 * steps];
        let mut it = llrs.iter();
        for (pos, slot) in soft.iter_mut().enumerate() {
            if mask[pos % mask.len()] {
                *slot = *it.next().expect("length checked");
            }
        }

        // correlation metric x * L with x = +1 for binary 0
        let mut metric = vec![f64::NEG_INFINITY; STATES];
        let mut scratch = vec![0.0; STATES];
        metric[0] = 0.0;
        let mut decisions = vec![0u64; steps];
        let table: Vec<[(u8, u8); 2]> = (0..STATES)
            .map(|s| [outputs(s, 0), outputs(s, 1)])
            .collect();
        for (t, decision) in decisions.iter_mut().enumerate() {
            let (la, lb) = (soft[2 * t], soft[2 * t + 1]);
            let branch = |(a, b): (u8, u8)| -> f64 {
                (if a == 0 { la } else { -la }) + (if b == 0 { lb } else { -lb })
            };
            let forced_zero = t >= self.block_bits;
            let mut word = 0u64;
            for (next, slot) in scratch.iter_mut().enumerate() {
                let u = (next >> (MEMORY - 1)) as u8;
                if forced_zero && u == 1 {
                    *slot = f64::NEG_INFINITY;
                    continue;
                }
                let p0 = (next << 1) & (STATES - 1);
                let p1 = p0 | 1;
                let m0 = metric[p0] + branch(table[p0][usize::from(u)]);
                let m1 = metric[p1] + branch(table[p1][usize::from(u)]);
                if m1 > m0 {
                    *slot = m1;
                    word |= 1 << next;
                } else {
                    *slot = m0;
                }
            }
            *decision = word;
            std::mem::swap(&mut metric, &mut scratch);
        }

        let mut state = 0usize;
        let mut bits = vec![0u8; steps];
        for t in (0..steps).rev() {
            bits[t] = (state >> (MEMORY - 1)) as u8;
            let low = ((decisions[t] >> state) & 1) as usize;
            state = ((state << 1) & (STATES - 1)) | low;
        }
        bits.truncate(self.block_bits);
        Ok(bits)
    }
}
