//! Monte-Carlo link-level experiments.
//!
//! Every trial draws its randomness from its own ChaCha stream keyed by
//! `(seed, snr, trial index)`, trials run in fixed-size batches, and batch
//! results are folded in trial order. Outputs therefore depend only on the
//! configuration, never on thread count or scheduling. The stream key uses
//! the SNR value itself, so two detectors run with the same seed see the
//! same channels, bits and noise.

mod runs;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{trial_rng, ChannelKind, ChannelModel};
use crate::coding::CodeRate;
use crate::constellation::Constellation;
use crate::detect::{default_delta_d, DareConfig, DEFAULT_LLR_CLAMP};
use crate::error::{Error, Result};

pub use runs::{
    run_ber, run_complexity, run_exclusion, run_llr_fidelity, run_throughput, ComplexitySummary,
    ExclusionPoint, FidelityPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorKind {
    Dare,
    Lmmse,
    MmseSic,
    /// Exhaustive hard ML; soft outputs are the hard labels scaled to the
    /// clamp value.
    Ml,
    /// Exhaustive exact max-log LLRs.
    Maxlog,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Dare => "dare",
            DetectorKind::Lmmse => "lmmse",
            DetectorKind::MmseSic => "mmse_sic",
            DetectorKind::Ml => "ml",
            DetectorKind::Maxlog => "maxlog",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dare" => DetectorKind::Dare,
            "lmmse" => DetectorKind::Lmmse,
            "mmse_sic" => DetectorKind::MmseSic,
            "ml" => DetectorKind::Ml,
            "maxlog" => DetectorKind::Maxlog,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown detector {other:?} (expected dare, lmmse, mmse_sic, ml or maxlog)"
                )))
            }
        })
    }

    pub fn is_exhaustive(self) -> bool {
        matches!(self, DetectorKind::Ml | DetectorKind::Maxlog)
    }
}

/// Tree detector settings; unset values take the constellation defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareSettings {
    pub n_c: usize,
    pub delta_d: Option<f64>,
    pub llr_clamp: f64,
    pub region_threshold: Option<f64>,
}

impl Default for DareSettings {
    fn default() -> Self {
        Self {
            n_c: 4,
            delta_d: None,
            llr_clamp: DEFAULT_LLR_CLAMP,
            region_threshold: None,
        }
    }
}

impl DareSettings {
    pub fn resolve(&self, c: &Constellation) -> Result<DareConfig> {
        let cfg = DareConfig {
            n_c: self.n_c,
            delta_d: match self.delta_d {
                Some(v) => v,
                None => default_delta_d(c, self.n_c)?,
            },
            llr_clamp: self.llr_clamp,
            region_threshold: self
                .region_threshold
                .unwrap_or_else(|| c.default_region_threshold()),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeSettings {
    pub rate: CodeRate,
    /// Symbols each user sends per coded block.
    pub block_symbols: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub m: usize,
    pub k: usize,
    pub modulation: usize,
    pub detector: DetectorKind,
    pub dare: DareSettings,
    pub channel: ChannelKind,
    pub taps: usize,
    pub subcarriers: usize,
    pub snr_grid_db: Vec<f64>,
    pub min_trials: u64,
    pub min_errors: u64,
    /// Hard cap on trials per SNR point; points that hit it are flagged.
    pub max_trials: u64,
    /// Trials per parallel batch. Results depend on it, not on threads.
    pub batch_size: u64,
    pub seed: u64,
    pub code: Option<CodeSettings>,
}

impl SimConfig {
    pub fn new(m: usize, k: usize, modulation: usize, detector: DetectorKind) -> Self {
        Self {
            m,
            k,
            modulation,
            detector,
            dare: DareSettings::default(),
            channel: ChannelKind::RayleighFlat,
            taps: 1,
            subcarriers: 1,
            snr_grid_db: vec![10.0],
            min_trials: 1000,
            min_errors: 100,
            max_trials: 10_000_000,
            batch_size: 256,
            seed: 1,
            code: None,
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        ChannelModel {
            kind: self.channel,
            taps: self.taps,
            subcarriers: self.subcarriers,
            m: self.m,
            k: self.k,
        }
    }

    pub fn constellation(&self) -> Result<Constellation> {
        Constellation::build_qam(self.modulation)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m < self.k {
            return Err(Error::Underdetermined {
                m: self.m,
                k: self.k,
            });
        }
        self.channel_model().validate()?;
        let c = self.constellation()?;
        self.dare.resolve(&c)?;
        if self.snr_grid_db.is_empty() {
            return Err(Error::InvalidParameter("snr grid is empty".into()));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "snr grid has non-finite values".into(),
            ));
        }
        if self.min_trials == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "min_trials and batch_size must be at least 1".into(),
            ));
        }
        if self.max_trials < self.min_trials {
            return Err(Error::InvalidParameter(format!(
                "max_trials {} is below min_trials {}",
                self.max_trials, self.min_trials
            )));
        }
        if self.detector.is_exhaustive() {
            crate::detect::check_enumerable(self.modulation, self.k)?;
        }
        if let Some(code) = &self.code {
            if code.block_symbols == 0 {
                return Err(Error::InvalidParameter(
                    "block_symbols must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub metric: &'static str,
    pub value: f64,
    pub trials: u64,
    pub errors: u64,
    /// Binomial standard error of `value`.
    pub stderr: f64,
    /// Stopped by the trial cap before reaching `min_errors`.
    pub capped: bool,
}

/// Binomial standard error of an error rate estimated from `units` draws.
pub fn binomial_stderr(errors: u64, units: u64) -> f64 {
    if units == 0 {
        return 0.0;
    }
    let p = errors as f64 / units as f64;
    (p * (1.0 - p) / units as f64).sqrt()
}

/// SNR at which a curve crosses `level`, by linear interpolation between the
/// first pair of adjacent points that bracket it (in `log10` of the value when
/// `log` is set). Points must be sorted by SNR.
pub fn crossing_snr(points: &[(f64, f64)], level: f64, log: bool) -> Option<f64> {
    let tf = |v: f64| if log { v.max(1e-300).log10() } else { v };
    let target = tf(level);
    for pair in points.windows(2) {
        let (s0, v0) = (pair[0].0, tf(pair[0].1));
        let (s1, v1) = (pair[1].0, tf(pair[1].1));
        if (v0 - target) * (v1 - target) <= 0.0 && v0 != v1 {
            return Some(s0 + (target - v0) * (s1 - s0) / (v1 - v0));
        }
    }
    None
}

/// Runs trials of one SNR point in batches until `done` holds or `cap`
/// trials have run. Returns the number of trials and whether the cap stopped
/// it.
pub(crate) fn run_trials<T, S>(
    cfg: &SimConfig,
    snr_db: f64,
    cap: u64,
    state: &mut S,
    trial: impl Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    absorb: impl Fn(&mut S, T),
    done: impl Fn(&S, u64) -> bool,
) -> Result<(u64, bool)>
where
    T: Send,
{
    let stream = snr_db.to_bits();
    let mut trials = 0u64;
    loop {
        if done(state, trials) {
            return Ok((trials, false));
        }
        if trials >= cap {
            return Ok((trials, true));
        }
        let end = (trials + cfg.batch_size).min(cap);
        let batch: Vec<T> = (trials..end)
            .into_par_iter()
            .map(|t| trial(&mut trial_rng(cfg.seed, stream, t)))
            .collect::<Result<_>>()?;
        for outcome in batch {
            absorb(state, outcome);
        }
        trials = end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates() {
        let pts = [(0.0, 1e-1), (2.0, 1e-2), (4.0, 1e-3)];
        assert!((crossing_snr(&pts, 1e-2, true).unwrap() - 2.0).abs() < 1e-12);
        assert!((crossing_snr(&pts, 10f64.powf(-1.5), true).unwrap() - 1.0).abs() < 1e-12);
        assert!(crossing_snr(&pts, 1e-5, true).is_none());
        let tp = [(0.0, 0.0), (1.0, 0.2), (2.0, 0.6)];
        assert!((crossing_snr(&tp, 0.5, false).unwrap() - 1.75).abs() < 1e-12);
    }

    #[test]
    fn stderr_of_binomial() {
        assert_eq!(binomial_stderr(0, 0), 0.0);
        assert!((binomial_stderr(50, 100) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::new(4, 4, 16, DetectorKind::Dare);
        assert!(cfg.validate().is_ok());
        cfg.snr_grid_db.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(4, 6, 16, DetectorKind::Dare);
        assert!(cfg.validate().is_err());
        cfg.m = 6;
        cfg.detector = DetectorKind::Ml;
        assert!(matches!(cfg.validate(), Err(Error::TooLarge { .. })));
        let mut cfg = SimConfig::new(4, 4, 16, DetectorKind::Dare);
        cfg.dare.n_c = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn detector_names_round_trip() {
        for d in [
            DetectorKind::Dare,
            DetectorKind::Lmmse,
            DetectorKind::MmseSic,
            DetectorKind::Ml,
            DetectorKind::Maxlog,
        ] {
            assert_eq!(DetectorKind::parse(d.name()).unwrap(), d);
        }
        assert!(DetectorKind::parse("kbest").is_err());
    }
}
