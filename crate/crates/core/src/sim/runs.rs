use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{add_awgn, draw_channel, map_bits, noise_variance, random_bits, transmit};
use crate::coding::CodeSpec;
use crate::complexity::{
    linear_filter_cost, max_complexity_bound, phase_bounds, ComplexityReport, Phase,
};
use crate::constellation::Constellation;
use crate::detect::{
    dare_detect, exclusion_probability_bound, labels_of, lmmse_detect, maxlog_llr_exact,
    ml_detect_indices, mmse_sic_detect, DareConfig, LlrVector,
};
use crate::error::{Error, Result};
use crate::linalg::{regularized_qr, CMatrix, CVector, C64};

use super::{binomial_stderr, run_trials, CurvePoint, DetectorKind, SimConfig};

const INTERLEAVER_SEED: u64 = 0x5eed_1ea7;

struct Detection {
    llrs: LlrVector,
    report: ComplexityReport,
}

fn detect(
    kind: DetectorKind,
    h: &CMatrix,
    y: &[C64],
    c: &Constellation,
    sigma: f64,
    dare: &DareConfig,
) -> Result<Detection> {
    Ok(match kind {
        DetectorKind::Dare => {
            let qr = regularized_qr(h, sigma, c.average_energy())?;
            let out = dare_detect(&qr, y, c, sigma, dare)?;
            Detection {
                llrs: out.llrs,
                report: out.report,
            }
        }
        DetectorKind::Lmmse => {
            let (llrs, report) = lmmse_detect(h, y, c, sigma)?;
            Detection { llrs, report }
        }
        DetectorKind::MmseSic => {
            let out = mmse_sic_detect(h, y, c, sigma)?;
            Detection {
                llrs: out.llrs,
                report: out.report,
            }
        }
        DetectorKind::Ml => {
            let labels = labels_of(c, &ml_detect_indices(h, y, c)?);
            Detection {
                llrs: LlrVector(
                    labels
                        .iter()
                        .map(|&b| f64::from(b) * dare.llr_clamp)
                        .collect(),
                ),
                report: ComplexityReport::default(),
            }
        }
        DetectorKind::Maxlog => Detection {
            llrs: maxlog_llr_exact(h, y, c, sigma)?,
            report: ComplexityReport::default(),
        },
    })
}

/// One uncoded channel use: channel, bits, noise, in that draw order.
struct Use {
    h: CMatrix,
    bits: Vec<i8>,
    y: CVector,
}

fn draw_use(cfg: &SimConfig, c: &Constellation, sigma: f64, rng: &mut ChaCha8Rng) -> Result<Use> {
    let h = draw_channel(&cfg.channel_model(), rng)?.swap_remove(0);
    let bits = random_bits(cfg.k * c.bits_per_symbol(), rng);
    let x = transmit(&bits, c, cfg.k)?;
    let y = add_awgn(&h.mul_vec(&x)?, sigma, rng)?;
    Ok(Use { h, bits, y })
}

fn bit_errors(llrs: &LlrVector, bits: &[i8]) -> u64 {
    llrs.hard_bits()
        .iter()
        .zip(bits)
        .filter(|(a, b)| a != b)
        .count() as u64
}

fn sigma_of(cfg: &SimConfig, snr_db: f64) -> f64 {
    noise_variance(snr_db, cfg.k).sqrt()
}

/// Uncoded bit error rate. Each trial is one received vector.
pub fn run_ber(cfg: &SimConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    if cfg.code.is_some() {
        return Err(Error::InvalidParameter(
            "ber runs are uncoded; remove the code section".into(),
        ));
    }
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let bits_per_vector = (cfg.k * c.bits_per_symbol()) as u64;
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let sigma = sigma_of(cfg, snr);
        let mut errors = 0u64;
        let (trials, capped) = run_trials(
            cfg,
            snr,
            cfg.max_trials,
            &mut errors,
            |rng| {
                let u = draw_use(cfg, &c, sigma, rng)?;
                let det = detect(cfg.detector, &u.h, &u.y, &c, sigma, &dare)?;
                Ok(bit_errors(&det.llrs, &u.bits))
            },
            |acc, e| *acc += e,
            |acc, n| n >= cfg.min_trials && *acc >= cfg.min_errors,
        )?;
        let units = trials * bits_per_vector;
        out.push(CurvePoint {
            snr_db: snr,
            metric: "ber",
            value: errors as f64 / units.max(1) as f64,
            trials,
            errors,
            stderr: binomial_stderr(errors, units),
            capped,
        });
    }
    Ok(out)
}

/// Fixed pseudo-random permutation spreading each codeword over all symbol
/// positions of a block.
fn interleaver(len: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..len).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(INTERLEAVER_SEED));
    perm
}

/// Coded throughput as a fraction of peak, `1 - FER`. Each trial is one
/// frame carrying one codeword per user; `trials` and `errors` in the output
/// count codewords.
pub fn run_throughput(cfg: &SimConfig) -> Result<Vec<CurvePoint>> {
    cfg.validate()?;
    let settings = cfg.code.ok_or_else(|| {
        Error::InvalidParameter("throughput runs need a code section (rate, block_symbols)".into())
    })?;
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let bps = c.bits_per_symbol();
    let uses = settings.block_symbols;
    let spec = CodeSpec::fit(settings.rate, uses * bps)?;
    let perm = interleaver(spec.coded_len());
    let model = cfg.channel_model();
    let k = cfg.k;
    let frame_cap = cfg.max_trials.div_ceil(k as u64);

    let frame = |rng: &mut ChaCha8Rng, sigma: f64| -> Result<u64> {
        let mut channels = Vec::with_capacity(uses);
        while channels.len() < uses {
            channels.extend(draw_channel(&model, rng)?);
        }
        channels.truncate(uses);
        let info: Vec<Vec<u8>> = (0..k)
            .map(|_| {
                (0..spec.block_bits)
                    .map(|_| u8::from(rng.random::<bool>()))
                    .collect()
            })
            .collect();
        // tx[user][position] in bipolar form, position = use * bps + bit
        let mut tx = vec![vec![0i8; uses * bps]; k];
        for (user, bits) in info.iter().enumerate() {
            for (i, &b) in spec.encode(bits)?.iter().enumerate() {
                tx[user][perm[i]] = if b == 0 { 1 } else { -1 };
            }
        }
        let mut rx = vec![vec![0.0; uses * bps]; k];
        let mut vector_bits = vec![0i8; k * bps];
        for (t, h) in channels.iter().enumerate() {
            for user in 0..k {
                vector_bits[user * bps..(user + 1) * bps]
                    .copy_from_slice(&tx[user][t * bps..(t + 1) * bps]);
            }
            let x = transmit(&vector_bits, &c, k)?;
            let y = add_awgn(&h.mul_vec(&x)?, sigma, rng)?;
            let det = detect(cfg.detector, h, &y, &c, sigma, &dare)?;
            for user in 0..k {
                rx[user][t * bps..(t + 1) * bps]
                    .copy_from_slice(&det.llrs[user * bps..(user + 1) * bps]);
            }
        }
        let mut errors = 0;
        for (user, bits) in info.iter().enumerate() {
            let llrs: Vec<f64> = perm.iter().map(|&p| rx[user][p]).collect();
            if &spec.decode_soft(&llrs)? != bits {
                errors += 1;
            }
        }
        Ok(errors)
    };

    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let sigma = sigma_of(cfg, snr);
        let mut errors = 0u64;
        let (frames, capped) = run_trials(
            cfg,
            snr,
            frame_cap,
            &mut errors,
            |rng| frame(rng, sigma),
            |acc, e| *acc += e,
            |acc, n| n * k as u64 >= cfg.min_trials && *acc >= cfg.min_errors,
        )?;
        let blocks = frames * k as u64;
        out.push(CurvePoint {
            snr_db: snr,
            metric: "throughput",
            value: 1.0 - errors as f64 / blocks.max(1) as f64,
            trials: blocks,
            errors,
            stderr: binomial_stderr(errors, blocks),
            capped,
        });
    }
    Ok(out)
}

/// Agreement of tree-detector and LMMSE LLRs with the exhaustive max-log
/// reference clamped to the same magnitude limit.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bits: u64,
    pub dare_sign_disagreements: u64,
    pub dare_abs_error_sum: f64,
    pub lmmse_sign_disagreements: u64,
    pub lmmse_abs_error_sum: f64,
}

impl FidelityPoint {
    pub fn dare_sign_agreement(&self) -> f64 {
        1.0 - self.dare_sign_disagreements as f64 / self.bits.max(1) as f64
    }

    pub fn lmmse_sign_agreement(&self) -> f64 {
        1.0 - self.lmmse_sign_disagreements as f64 / self.bits.max(1) as f64
    }

    pub fn dare_mae(&self) -> f64 {
        self.dare_abs_error_sum / self.bits.max(1) as f64
    }

    pub fn lmmse_mae(&self) -> f64 {
        self.lmmse_abs_error_sum / self.bits.max(1) as f64
    }

    /// CSV rows; for agreements `errors` counts disagreeing bits and
    /// `trials` counts compared bits.
    pub fn rows(&self) -> Vec<CurvePoint> {
        let agree = |metric, value, errors| CurvePoint {
            snr_db: self.snr_db,
            metric,
            value,
            trials: self.bits,
            errors,
            stderr: binomial_stderr(errors, self.bits),
            capped: false,
        };
        let mae = |metric, value| CurvePoint {
            snr_db: self.snr_db,
            metric,
            value,
            trials: self.bits,
            errors: 0,
            stderr: 0.0,
            capped: false,
        };
        vec![
            agree(
                "dare_sign_agreement",
                self.dare_sign_agreement(),
                self.dare_sign_disagreements,
            ),
            mae("dare_clamped_mae", self.dare_mae()),
            agree(
                "lmmse_sign_agreement",
                self.lmmse_sign_agreement(),
                self.lmmse_sign_disagreements,
            ),
            mae("lmmse_clamped_mae", self.lmmse_mae()),
        ]
    }
}

#[derive(Default)]
struct FidelityTally {
    bits: u64,
    dare_dis: u64,
    dare_abs: f64,
    lmmse_dis: u64,
    lmmse_abs: f64,
}

/// Runs exactly `min_trials` vectors per SNR point.
pub fn run_llr_fidelity(cfg: &SimConfig) -> Result<Vec<FidelityPoint>> {
    cfg.validate()?;
    crate::detect::check_enumerable(cfg.modulation, cfg.k)?;
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let clamp = dare.llr_clamp;
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let sigma = sigma_of(cfg, snr);
        let mut tally = FidelityTally::default();
        let (trials, _) = run_trials(
            cfg,
            snr,
            cfg.min_trials,
            &mut tally,
            |rng| {
                let u = draw_use(cfg, &c, sigma, rng)?;
                let exact = maxlog_llr_exact(&u.h, &u.y, &c, sigma)?;
                let tree = detect(DetectorKind::Dare, &u.h, &u.y, &c, sigma, &dare)?;
                let (lin, _) = lmmse_detect(&u.h, &u.y, &c, sigma)?;
                let mut t = FidelityTally {
                    bits: exact.len() as u64,
                    ..Default::default()
                };
                for (i, &e) in exact.iter().enumerate() {
                    let e = e.clamp(-clamp, clamp);
                    let (d, l) = (tree.llrs[i], lin[i].clamp(-clamp, clamp));
                    t.dare_dis += u64::from((d < 0.0) != (e < 0.0));
                    t.dare_abs += (d - e).abs();
                    t.lmmse_dis += u64::from((l < 0.0) != (e < 0.0));
                    t.lmmse_abs += (l - e).abs();
                }
                Ok(t)
            },
            |acc, t| {
                acc.bits += t.bits;
                acc.dare_dis += t.dare_dis;
                acc.dare_abs += t.dare_abs;
                acc.lmmse_dis += t.lmmse_dis;
                acc.lmmse_abs += t.lmmse_abs;
            },
            |_, n| n >= cfg.min_trials,
        )?;
        out.push(FidelityPoint {
            snr_db: snr,
            trials,
            bits: tally.bits,
            dare_sign_disagreements: tally.dare_dis,
            dare_abs_error_sum: tally.dare_abs,
            lmmse_sign_disagreements: tally.lmmse_dis,
            lmmse_abs_error_sum: tally.lmmse_abs,
        });
    }
    Ok(out)
}

/// Real-multiplication statistics of the tree detector at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexitySummary {
    pub snr_db: f64,
    pub trials: u64,
    pub mean: f64,
    /// Standard error of `mean`.
    pub mean_stderr: f64,
    pub max: u64,
    /// Largest count seen in each phase, ordered as [`Phase::ALL`].
    pub phase_max: [u64; 3],
    pub bound: u64,
    /// Per-vector cost of applying the LMMSE filter.
    pub lmmse: u64,
}

impl ComplexitySummary {
    pub fn ratio_max(&self) -> f64 {
        self.max as f64 / self.lmmse as f64
    }

    pub fn ratio_mean(&self) -> f64 {
        self.mean / self.lmmse as f64
    }

    pub fn rows(&self) -> Vec<CurvePoint> {
        let row = |metric, value, stderr| CurvePoint {
            snr_db: self.snr_db,
            metric,
            value,
            trials: self.trials,
            errors: 0,
            stderr,
            capped: false,
        };
        vec![
            row("dare_mean_real_mults", self.mean, self.mean_stderr),
            row("dare_max_real_mults", self.max as f64, 0.0),
            row("bound_real_mults", self.bound as f64, 0.0),
            row("lmmse_real_mults", self.lmmse as f64, 0.0),
            row("ratio_max_to_lmmse", self.ratio_max(), 0.0),
            row(
                "ratio_mean_to_lmmse",
                self.ratio_mean(),
                self.mean_stderr / self.lmmse as f64,
            ),
        ]
    }
}

#[derive(Default)]
struct OpsTally {
    sum: f64,
    sum_sq: f64,
    max: u64,
    phase_max: [u64; 3],
}

/// Runs exactly `min_trials` vectors per SNR point and fails if any vector
/// exceeds the worst-case formula, in total or per phase.
pub fn run_complexity(cfg: &SimConfig) -> Result<Vec<ComplexitySummary>> {
    cfg.validate()?;
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let bound = max_complexity_bound(cfg.m, cfg.k, dare.n_c)?;
    let phase_limits = phase_bounds(cfg.m, cfg.k, dare.n_c);
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let sigma = sigma_of(cfg, snr);
        let mut tally = OpsTally::default();
        let (trials, _) = run_trials(
            cfg,
            snr,
            cfg.min_trials,
            &mut tally,
            |rng| {
                let u = draw_use(cfg, &c, sigma, rng)?;
                let report = detect(DetectorKind::Dare, &u.h, &u.y, &c, sigma, &dare)?.report;
                for (phase, &limit) in Phase::ALL.iter().zip(&phase_limits) {
                    if report.phase(*phase) > limit {
                        return Err(Error::ComplexityBoundExceeded {
                            measured: report.phase(*phase),
                            bound: limit,
                        });
                    }
                }
                if report.real_mults() > bound {
                    return Err(Error::ComplexityBoundExceeded {
                        measured: report.real_mults(),
                        bound,
                    });
                }
                Ok(report)
            },
            |acc, r| {
                let v = r.real_mults();
                acc.sum += v as f64;
                acc.sum_sq += (v as f64) * (v as f64);
                acc.max = acc.max.max(v);
                for (slot, phase) in acc.phase_max.iter_mut().zip(Phase::ALL) {
                    *slot = (*slot).max(r.phase(phase));
                }
            },
            |_, n| n >= cfg.min_trials,
        )?;
        let n = trials as f64;
        let mean = tally.sum / n;
        let var = if trials > 1 {
            ((tally.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        out.push(ComplexitySummary {
            snr_db: snr,
            trials,
            mean,
            mean_stderr: (var / n).sqrt(),
            max: tally.max,
            phase_max: tally.phase_max,
            bound,
            lmmse: linear_filter_cost(cfg.m, cfg.k),
        });
    }
    Ok(out)
}

/// Empirical rate at which the transmitted vector is missing from the final
/// candidate list, alongside the mean closed-form bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub excluded: u64,
    pub mean_bound: f64,
    pub capped: bool,
}

impl ExclusionPoint {
    pub fn rate(&self) -> f64 {
        self.excluded as f64 / self.trials.max(1) as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.excluded, self.trials)
    }

    pub fn rows(&self) -> Vec<CurvePoint> {
        vec![
            CurvePoint {
                snr_db: self.snr_db,
                metric: "exclusion_rate",
                value: self.rate(),
                trials: self.trials,
                errors: self.excluded,
                stderr: self.stderr(),
                capped: self.capped,
            },
            CurvePoint {
                snr_db: self.snr_db,
                metric: "exclusion_bound",
                value: self.mean_bound,
                trials: self.trials,
                errors: 0,
                stderr: 0.0,
                capped: self.capped,
            },
        ]
    }
}

/// Stops on `min_trials` vectors and `min_errors` exclusions, or the cap.
pub fn run_exclusion(cfg: &SimConfig) -> Result<Vec<ExclusionPoint>> {
    cfg.validate()?;
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        let sigma = sigma_of(cfg, snr);
        let mut tally = (0u64, 0.0f64);
        let (trials, capped) = run_trials(
            cfg,
            snr,
            cfg.max_trials,
            &mut tally,
            |rng| {
                let h = draw_channel(&cfg.channel_model(), rng)?.swap_remove(0);
                let bits = random_bits(cfg.k * c.bits_per_symbol(), rng);
                let symbols = map_bits(&bits, &c, cfg.k)?;
                let x: CVector = symbols.iter().map(|&s| c.point(s)).collect();
                let y = add_awgn(&h.mul_vec(&x)?, sigma, rng)?;
                let qr = regularized_qr(&h, sigma, c.average_energy())?;
                let det = dare_detect(&qr, &y, &c, sigma, &dare)?;
                let bound = exclusion_probability_bound(&qr.r, sigma, dare.delta_d)?;
                Ok((!det.candidates.contains(&symbols), bound))
            },
            |acc, (excluded, bound)| {
                acc.0 += u64::from(excluded);
                acc.1 += bound;
            },
            |acc, n| n >= cfg.min_trials && acc.0 >= cfg.min_errors,
        )?;
        out.push(ExclusionPoint {
            snr_db: snr,
            trials,
            excluded: tally.0,
            mean_bound: tally.1 / trials.max(1) as f64,
            capped,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::CodeRate;
    use crate::sim::CodeSettings;

    fn small(detector: DetectorKind) -> SimConfig {
        let mut cfg = SimConfig::new(2, 2, 4, detector);
        cfg.min_trials = 200;
        cfg.min_errors = 0;
        cfg.batch_size = 64;
        cfg
    }

    #[test]
    fn noiseless_ber_is_zero() {
        for det in [
            DetectorKind::Dare,
            DetectorKind::Lmmse,
            DetectorKind::MmseSic,
            DetectorKind::Ml,
        ] {
            let mut cfg = small(det);
            cfg.m = 4;
            cfg.k = 3;
            cfg.modulation = 16;
            cfg.snr_grid_db = vec![60.0];
            let pts = run_ber(&cfg).unwrap();
            assert_eq!(pts[0].errors, 0, "{}", det.name());
            assert_eq!(pts[0].trials, 256);
        }
    }

    #[test]
    fn ber_is_reproducible_and_batch_bound() {
        let mut cfg = small(DetectorKind::Dare);
        cfg.snr_grid_db = vec![2.0, 6.0];
        cfg.min_errors = 50;
        let a = run_ber(&cfg).unwrap();
        let b = run_ber(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a[0].errors >= 50 && a[0].trials.is_multiple_of(64));
        assert!(a[0].value > a[1].value);
    }

    #[test]
    fn cap_is_flagged() {
        let mut cfg = small(DetectorKind::Lmmse);
        cfg.snr_grid_db = vec![40.0];
        cfg.min_errors = 10;
        cfg.max_trials = 300;
        let p = &run_ber(&cfg).unwrap()[0];
        assert!(p.capped);
        assert_eq!(p.trials, 300);
    }

    #[test]
    fn coded_noiseless_throughput_is_one() {
        let mut cfg = small(DetectorKind::Dare);
        cfg.code = Some(CodeSettings {
            rate: CodeRate::ThreeQuarters,
            block_symbols: 32,
        });
        cfg.channel = crate::channel::ChannelKind::RayleighMultitap;
        cfg.taps = 4;
        cfg.subcarriers = 16;
        cfg.min_trials = 20;
        cfg.batch_size = 8;
        cfg.snr_grid_db = vec![60.0];
        let p = &run_throughput(&cfg).unwrap()[0];
        assert_eq!(p.value, 1.0);
        assert!(p.trials >= 20);
        assert!(run_ber(&cfg).is_err());
    }

    #[test]
    fn fidelity_noiseless_agrees() {
        let mut cfg = small(DetectorKind::Dare);
        cfg.snr_grid_db = vec![60.0];
        let p = &run_llr_fidelity(&cfg).unwrap()[0];
        assert_eq!(p.trials, 200);
        assert_eq!(p.dare_sign_agreement(), 1.0);
        assert_eq!(p.lmmse_sign_agreement(), 1.0);
    }

    #[test]
    fn complexity_mean_below_max_below_bound() {
        let mut cfg = SimConfig::new(8, 4, 16, DetectorKind::Dare);
        cfg.min_trials = 300;
        cfg.snr_grid_db = vec![5.0, 20.0];
        for s in run_complexity(&cfg).unwrap() {
            assert!(s.mean <= s.max as f64);
            assert!(s.max <= s.bound);
            assert_eq!(s.lmmse, 4 * 8 * 4);
        }
    }

    #[test]
    fn exclusion_runs() {
        let mut cfg = SimConfig::new(4, 4, 16, DetectorKind::Dare);
        cfg.min_trials = 256;
        cfg.min_errors = 0;
        cfg.snr_grid_db = vec![25.0];
        let p = &run_exclusion(&cfg).unwrap()[0];
        assert_eq!(p.trials, 256);
        assert!(p.mean_bound > 0.0 && p.mean_bound <= 1.0);
    }
}
