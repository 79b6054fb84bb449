//! Run configuration and its precedence chain.
//!
//! Every knob resolves through four layers, strongest first: a command-line
//! flag, the key=value config file, the `HOROCYCLE_CACHE_DIR` environment
//! variable (cache directory only), and the built-in default. The config
//! file is strict: it must declare `format_version=1`, and unknown or
//! duplicated keys are errors rather than warnings.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

pub const CACHE_ENV: &str = "HOROCYCLE_CACHE_DIR";
pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Fully resolved settings shared by every subcommand.
#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Even weights to operate on; dimension-0 weights are skipped with a
    /// notice rather than rejected.
    pub weights: Vec<u32>,
    /// Requested table size; 0 defers to the per-weight default.
    pub table_len: usize,
    /// Mantissa width of the stored eigenvalues: 128 or 256, 0 = default.
    pub precision_bits: u32,
    /// Sweep grid exponent margin, 0 < delta < 1/2.
    pub delta: f64,
    /// Number of geometric grid points per sweep.
    pub grid_size: usize,
    /// Certified-tail target for truncation windows.
    pub epsilon: f64,
    pub cache_dir: PathBuf,
    pub output: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            weights: vec![12, 16, 24],
            table_len: 0,
            precision_bits: 0,
            delta: horocycle::tolerances::SWEEP_DELTA,
            grid_size: horocycle::tolerances::SWEEP_POINTS,
            epsilon: horocycle::tolerances::WINDOW_EPS_DEFAULT,
            cache_dir: PathBuf::from("cache"),
            output: OutputFormat::Csv,
        }
    }
}

/// Values a config file or the flag layer may contribute; `None` leaves
/// the lower layer's choice in place.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub weights: Option<Vec<u32>>,
    pub table_len: Option<usize>,
    pub precision_bits: Option<u32>,
    pub delta: Option<f64>,
    pub grid_size: Option<usize>,
    pub epsilon: Option<f64>,
    pub cache_dir: Option<PathBuf>,
    pub output: Option<OutputFormat>,
}

impl Overrides {
    fn apply(&self, onto: &mut RunConfig) {
        if let Some(w) = &self.weights {
            onto.weights = w.clone();
        }
        if let Some(n) = self.table_len {
            onto.table_len = n;
        }
        if let Some(b) = self.precision_bits {
            onto.precision_bits = b;
        }
        if let Some(d) = self.delta {
            onto.delta = d;
        }
        if let Some(g) = self.grid_size {
            onto.grid_size = g;
        }
        if let Some(e) = self.epsilon {
            onto.epsilon = e;
        }
        if let Some(p) = &self.cache_dir {
            onto.cache_dir = p.clone();
        }
        if let Some(o) = self.output {
            onto.output = o;
        }
    }
}

/// Parse a weight list: comma-separated items, each either one even
/// integer or an inclusive range `a..b` stepping by 2. Empty input is an
/// empty list (commands then emit empty reports).
pub fn parse_weights(text: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let lo: u32 = a.trim().parse().with_context(|| format!("bad weight range start {a:?}"))?;
            let hi: u32 = b.trim().parse().with_context(|| format!("bad weight range end {b:?}"))?;
            if lo % 2 != 0 || hi % 2 != 0 || lo > hi {
                bail!("weight range {item:?} must run upward through even integers");
            }
            out.extend((lo..=hi).step_by(2));
        } else {
            let w: u32 = item.parse().with_context(|| format!("bad weight {item:?}"))?;
            if w % 2 != 0 {
                bail!("weight {w} is odd; only even weights carry modular forms here");
            }
            out.push(w);
        }
    }
    Ok(out)
}

fn parse_config_text(text: &str, origin: &Path) -> Result<Overrides> {
    let mut over = Overrides::default();
    let mut seen = Vec::new();
    let mut version: Option<u32> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let at = || format!("{}:{}", origin.display(), lineno + 1);
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}: expected key=value, got {line:?}", at());
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.contains(&key.to_owned()) {
            bail!("{}: duplicate key {key:?}", at());
        }
        seen.push(key.to_owned());
        match key {
            "format_version" => {
                let v: u32 = value.parse().with_context(|| format!("{}: bad format_version", at()))?;
                if v != CONFIG_FORMAT_VERSION {
                    bail!("{}: config format_version {v} unsupported (expected {CONFIG_FORMAT_VERSION})", at());
                }
                version = Some(v);
            }
            "weights" => over.weights = Some(parse_weights(value)?),
            "table_len" => over.table_len = Some(value.parse().with_context(|| format!("{}: bad table_len", at()))?),
            "precision_bits" => over.precision_bits = Some(value.parse().with_context(|| format!("{}: bad precision_bits", at()))?),
            "delta" => over.delta = Some(value.parse().with_context(|| format!("{}: bad delta", at()))?),
            "grid_size" => over.grid_size = Some(value.parse().with_context(|| format!("{}: bad grid_size", at()))?),
            "epsilon" => over.epsilon = Some(value.parse().with_context(|| format!("{}: bad epsilon", at()))?),
            "cache_dir" => over.cache_dir = Some(PathBuf::from(value)),
            "output" => {
                over.output = Some(match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => bail!("{}: output must be csv or json, got {other:?}", at()),
                })
            }
            other => bail!("{}: unknown key {other:?}", at()),
        }
    }
    if version.is_none() {
        bail!("{}: config file must declare format_version={CONFIG_FORMAT_VERSION}", origin.display());
    }
    Ok(over)
}

/// Read and strictly parse a config file.
pub fn load_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config_text(&text, path)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    for &w in &cfg.weights {
        if w % 2 != 0 || w < 4 {
            bail!("weight {w} invalid: weights must be even and at least 4");
        }
    }
    if !(cfg.delta > 0.0 && cfg.delta < 0.5) {
        bail!("delta {} outside (0, 1/2)", cfg.delta);
    }
    if !(cfg.epsilon > 0.0 && cfg.epsilon < 1.0) {
        bail!("epsilon {} outside (0, 1)", cfg.epsilon);
    }
    if cfg.grid_size < 2 {
        bail!("grid_size {} too small; need at least 2", cfg.grid_size);
    }
    if !matches!(cfg.precision_bits, 0 | 128 | 256) {
        bail!("precision_bits {} unsupported; use 128 or 256", cfg.precision_bits);
    }
    Ok(())
}

/// Resolve the full chain: defaults, then `HOROCYCLE_CACHE_DIR`, then the
/// config file (if given), then command-line flags.
pub fn resolve(flags: &Overrides, config_path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Ok(dir) = std::env::var(CACHE_ENV) {
        if !dir.is_empty() {
            cfg.cache_dir = PathBuf::from(dir);
        }
    }
    if let Some(path) = config_path {
        load_config_file(path)?.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    validate(&cfg)?;
    Ok(cfg)
}

/// The eigenform request a config describes for one weight.
pub fn request_for(cfg: &RunConfig, weight: u32) -> horocycle::EigenformRequest {
    horocycle::EigenformRequest {
        table_len: cfg.table_len,
        nlimbs: (cfg.precision_bits / 64) as u8,
        ..horocycle::EigenformRequest::new(weight)
    }
}
