//! Random channels, noise and symbol mapping for Monte-Carlo trials.
//!
//! SNR is per receive antenna with unit-energy symbols: with i.i.d. unit
//! power channel entries the received signal power per antenna is `K`, so
//! the noise variance is `sigma^2 = K / 10^(snr_db / 10)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::constellation::{Constellation, SymbolIndex};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Human-readable statement of the SNR convention, echoed into outputs.
pub const SNR_CONVENTION: &str =
    "per-receive-antenna SNR, unit-energy symbols, CN(0,1) channel entries: sigma^2 = K / 10^(snr_db/10)";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// `H = [I_K; 0]`, deterministic.
    Identity,
    RayleighFlat,
    /// Frequency response of `taps` i.i.d. `CN(0, 1/taps)` taps per antenna
    /// pair, sampled on `subcarriers` tones.
    RayleighMultitap,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Identity => "identity",
            ChannelKind::RayleighFlat => "rayleigh_flat",
            ChannelKind::RayleighMultitap => "rayleigh_multitap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(ChannelKind::Identity),
            "rayleigh_flat" => Ok(ChannelKind::RayleighFlat),
            "rayleigh_multitap" => Ok(ChannelKind::RayleighMultitap),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel {other:?} (expected identity, rayleigh_flat or rayleigh_multitap)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub taps: usize,
    pub subcarriers: usize,
    pub m: usize,
    pub k: usize,
}

impl ChannelModel {
    pub fn flat(m: usize, k: usize) -> Self {
        Self {
            kind: ChannelKind::RayleighFlat,
            taps: 1,
            subcarriers: 1,
            m,
            k,
        }
    }

    pub fn multitap(m: usize, k: usize, taps: usize, subcarriers: usize) -> Self {
        Self {
            kind: ChannelKind::RayleighMultitap,
            taps,
            subcarriers,
            m,
            k,
        }
    }

    pub fn identity(m: usize, k: usize) -> Self {
        Self {
            kind: ChannelKind::Identity,
            taps: 1,
            subcarriers: 1,
            m,
            k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m < self.k {
            return Err(Error::Underdetermined {
                m: self.m,
                k: self.k,
            });
        }
        if self.taps == 0 || self.subcarriers == 0 {
            return Err(Error::InvalidParameter(
                "taps and subcarriers must be at least 1".into(),
            ));
        }
        if self.kind != ChannelKind::RayleighMultitap && self.taps != 1 {
            return Err(Error::InvalidParameter(format!(
                "{} channel must have exactly one tap",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Number of per-tone matrices one draw produces.
    pub fn realizations_per_draw(&self) -> usize {
        match self.kind {
            ChannelKind::RayleighMultitap => self.subcarriers,
            _ => 1,
        }
    }
}

/// Noise variance for the given SNR under [`SNR_CONVENTION`].
pub fn noise_variance(snr_db: f64, k: usize) -> f64 {
    k as f64 / 10f64.powf(snr_db / 10.0)
}

/// Generator for `(seed, stream, index)`: every distinct triple gives an
/// independent ChaCha stream.
pub fn trial_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(stream)));
    rng.set_stream(index);
    rng
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Circularly-symmetric complex Gaussian with the given variance.
#[inline]
pub fn complex_normal(rng: &mut impl Rng, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// One channel draw: a single matrix for flat models, one per subcarrier for
/// the multitap model.
pub fn draw_channel(model: &ChannelModel, rng: &mut impl Rng) -> Result<Vec<CMatrix>> {
    model.validate()?;
    let (m, k) = (model.m, model.k);
    Ok(match model.kind {
        ChannelKind::Identity => {
            vec![CMatrix::from_fn(m, k, |r, c| {
                C64::new(f64::from(u8::from(r == c)), 0.0)
            })]
        }
        ChannelKind::RayleighFlat => vec![CMatrix::from_fn(m, k, |_, _| complex_normal(rng, 1.0))],
        ChannelKind::RayleighMultitap => {
            let (taps, n) = (model.taps, model.subcarriers);
            let tap_var = 1.0 / taps as f64;
            let impulse: Vec<C64> = (0..m * k * taps)
                .map(|_| complex_normal(rng, tap_var))
                .collect();
            (0..n)
                .map(|f| {
                    let twiddle: Vec<C64> = (0..taps)
                        .map(|t| C64::from_polar(1.0, -2.0 * PI * (f * t) as f64 / n as f64))
                        .collect();
                    CMatrix::from_fn(m, k, |r, c| {
                        let base = (r * k + c) * taps;
                        impulse[base..base + taps]
                            .iter()
                            .zip(&twiddle)
                            .map(|(h, w)| h * w)
                            .sum()
                    })
                })
                .collect()
        }
    })
}

/// Gray-maps `k` groups of bipolar bits to symbol indices.
pub fn map_bits(bits: &[i8], c: &Constellation, k: usize) -> Result<Vec<SymbolIndex>> {
    let bps = c.bits_per_symbol();
    if bits.len() != k * bps {
        return Err(Error::LengthMismatch {
            expected: k * bps,
            got: bits.len(),
        });
    }
    bits.chunks(bps).map(|chunk| c.map_label(chunk)).collect()
}

/// Gray-maps `k` groups of bipolar bits to constellation points.
pub fn transmit(bits: &[i8], c: &Constellation, k: usize) -> Result<CVector> {
    Ok(map_bits(bits, c, k)?
        .into_iter()
        .map(|s| c.point(s))
        .collect())
}

/// `x + n` with `n ~ CN(0, sigma^2 I)`.
pub fn add_awgn(x: &[C64], sigma: f64, rng: &mut impl Rng) -> Result<CVector> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise standard deviation must be finite and >= 0, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(x.to_vec());
    }
    let var = sigma * sigma;
    Ok(x.iter().map(|&v| v + complex_normal(rng, var)).collect())
}

/// Uniform random bipolar bits.
pub fn random_bits(n: usize, rng: &mut impl Rng) -> Vec<i8> {
    (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect()
}
