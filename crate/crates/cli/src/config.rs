//! TOML run configuration.
//!
//! `m`, `k`, `modulation`, `snr_db` and `seed` are required; everything
//! else falls back to the simulator defaults. Unknown keys are rejected.

use std::path::Path;

use dare_core::channel::ChannelKind;
use dare_core::coding::CodeRate;
use dare_core::sim::{CodeSettings, DetectorKind, SimConfig};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub m: usize,
    pub k: usize,
    /// QAM order: 4, 16 or 64.
    pub modulation: usize,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    pub detector: Option<String>,
    pub channel: Option<String>,
    pub taps: Option<usize>,
    pub subcarriers: Option<usize>,
    pub min_trials: Option<u64>,
    pub min_errors: Option<u64>,
    pub max_trials: Option<u64>,
    pub batch_size: Option<u64>,
    #[serde(default)]
    pub dare: DareSection,
    pub code: Option<CodeSection>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DareSection {
    pub n_c: Option<usize>,
    pub delta_d: Option<f64>,
    pub llr_clamp: Option<f64>,
    pub region_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    /// `"1/2"` or `"3/4"`.
    pub rate: String,
    pub block_symbols: usize,
}

impl FileConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config {
            origin: origin.to_string(),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_sim(&self) -> Result<SimConfig, CliError> {
        let detector = match &self.detector {
            Some(name) => DetectorKind::parse(name)?,
            None => DetectorKind::Dare,
        };
        let mut cfg = SimConfig::new(self.m, self.k, self.modulation, detector);
        if let Some(name) = &self.channel {
            cfg.channel = ChannelKind::parse(name)?;
        }
        if let Some(v) = self.taps {
            cfg.taps = v;
        }
        if let Some(v) = self.subcarriers {
            cfg.subcarriers = v;
        }
        cfg.snr_grid_db = self.snr_db.clone();
        cfg.seed = self.seed;
        if let Some(v) = self.min_trials {
            cfg.min_trials = v;
        }
        if let Some(v) = self.min_errors {
            cfg.min_errors = v;
        }
        if let Some(v) = self.max_trials {
            cfg.max_trials = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.dare.n_c {
            cfg.dare.n_c = v;
        }
        cfg.dare.delta_d = self.dare.delta_d;
        if let Some(v) = self.dare.llr_clamp {
            cfg.dare.llr_clamp = v;
        }
        cfg.dare.region_threshold = self.dare.region_threshold;
        if let Some(code) = &self.code {
            cfg.code = Some(CodeSettings {
                rate: CodeRate::parse(&code.rate)?,
                block_symbols: code.block_symbols,
            });
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "m = 4\nk = 2\nmodulation = 16\nsnr_db = [10.0, 12.0]\nseed = 3\n";

    #[test]
    fn minimal_file_takes_defaults() {
        let cfg = FileConfig::parse(MINIMAL, "inline")
            .unwrap()
            .to_sim()
            .unwrap();
        assert_eq!((cfg.m, cfg.k, cfg.modulation, cfg.seed), (4, 2, 16, 3));
        assert_eq!(cfg.detector, DetectorKind::Dare);
        assert_eq!(cfg.snr_grid_db, vec![10.0, 12.0]);
        assert_eq!(cfg.dare.n_c, 4);
        assert!(cfg.code.is_none());
    }

    #[test]
    fn missing_field_is_named() {
        let err = FileConfig::parse("m = 4\nk = 2\nmodulation = 16\nsnr_db = [1.0]\n", "x.toml")
            .unwrap_err()
            .to_string();
        assert!(err.contains("seed"), "{err}");
        assert!(err.contains("x.toml"), "{err}");
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        let text = format!("{MINIMAL}colour = 1\n");
        assert!(FileConfig::parse(&text, "x").is_err());
        let text = format!("{MINIMAL}detector = \"sphere\"\n");
        assert!(FileConfig::parse(&text, "x").unwrap().to_sim().is_err());
        let text = format!("{MINIMAL}[code]\nrate = \"2/3\"\nblock_symbols = 8\n");
        assert!(FileConfig::parse(&text, "x").unwrap().to_sim().is_err());
    }

    #[test]
    fn sections_are_applied() {
        let text = format!(
            "{MINIMAL}channel = \"rayleigh_multitap\"\ntaps = 4\nsubcarriers = 32\n\
             [dare]\nn_c = 8\ndelta_d = 0.5\n[code]\nrate = \"3/4\"\nblock_symbols = 16\n"
        );
        let cfg = FileConfig::parse(&text, "x").unwrap().to_sim().unwrap();
        assert_eq!(cfg.channel, ChannelKind::RayleighMultitap);
        assert_eq!((cfg.taps, cfg.subcarriers), (4, 32));
        assert_eq!(cfg.dare.n_c, 8);
        assert_eq!(cfg.dare.delta_d, Some(0.5));
        assert_eq!(cfg.code.unwrap().rate, CodeRate::ThreeQuarters);
    }
}
