//! CSV output: `#` header lines echoing the resolved configuration, then one
//! row per curve point.

use dare_core::channel::SNR_CONVENTION;
use dare_core::sim::{CurvePoint, SimConfig};

use crate::CliError;

pub const COLUMNS: &str = "snr_db,metric,value,trials,errors,stderr,capped";

pub const CODE_NOTE: &str = "coded runs use a terminated K=7 (133,171) convolutional code with \
max-log Viterbi decoding in place of an LDPC code; throughput is 1 - FER per user codeword, \
normalized to peak";

/// Shortest decimal that round-trips the value at 12 significant digits, so
/// exact values print as such (`0.1`, not `0.09999999999999998`).
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn fmt_list(vs: &[f64]) -> String {
    let items: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
    format!("[{}]", items.join(", "))
}

/// Header lines for a run, values at full precision. Resolved detector
/// parameters are echoed, not the optional inputs.
pub fn header(command: &str, cfg: &SimConfig) -> Result<Vec<String>, CliError> {
    let c = cfg.constellation()?;
    let dare = cfg.dare.resolve(&c)?;
    let mut lines = vec![
        format!("dare {command}"),
        format!("m = {}", cfg.m),
        format!("k = {}", cfg.k),
        format!("modulation = {}", cfg.modulation),
        format!("detector = \"{}\"", cfg.detector.name()),
        format!("channel = \"{}\"", cfg.channel.name()),
        format!("taps = {}", cfg.taps),
        format!("subcarriers = {}", cfg.subcarriers),
        format!("snr_db = {}", fmt_list(&cfg.snr_grid_db)),
        format!("seed = {}", cfg.seed),
        format!("min_trials = {}", cfg.min_trials),
        format!("min_errors = {}", cfg.min_errors),
        format!("max_trials = {}", cfg.max_trials),
        format!("batch_size = {}", cfg.batch_size),
        format!("dare.n_c = {}", dare.n_c),
        format!("dare.delta_d = {}", dare.delta_d),
        format!("dare.llr_clamp = {}", dare.llr_clamp),
        format!("dare.region_threshold = {}", dare.region_threshold),
    ];
    match &cfg.code {
        Some(code) => {
            lines.push(format!("code.rate = \"{}\"", code.rate.name()));
            lines.push(format!("code.block_symbols = {}", code.block_symbols));
        }
        None => lines.push("code = none".into()),
    }
    lines.push(format!("snr_convention = {SNR_CONVENTION}"));
    lines.push(format!("code_note = {CODE_NOTE}"));
    Ok(lines)
}

pub fn render(header: &[String], rows: &[CurvePoint]) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str(COLUMNS);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_num(r.snr_db),
            r.metric,
            fmt_num(r.value),
            r.trials,
            r.errors,
            fmt_num(r.stderr),
            u8::from(r.capped)
        ));
    }
    out
}

/// A parsed data row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub snr_db: f64,
    pub metric: String,
    pub value: f64,
    pub trials: u64,
    pub errors: u64,
    pub stderr: f64,
    pub capped: bool,
}

/// Reads the data rows back, skipping comments and the column line.
pub fn parse_rows(text: &str) -> Result<Vec<Row>, String> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line == COLUMNS || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(format!(
                "line {}: expected 7 fields, got {}",
                n + 1,
                f.len()
            ));
        }
        let bad = |what: &str| format!("line {}: bad {what}", n + 1);
        rows.push(Row {
            snr_db: f[0].parse().map_err(|_| bad("snr_db"))?,
            metric: f[1].to_string(),
            value: f[2].parse().map_err(|_| bad("value"))?,
            trials: f[3].parse().map_err(|_| bad("trials"))?,
            errors: f[4].parse().map_err(|_| bad("errors"))?,
            stderr: f[5].parse().map_err(|_| bad("stderr"))?,
            capped: f[6] == "1",
        });
    }
    Ok(rows)
}
