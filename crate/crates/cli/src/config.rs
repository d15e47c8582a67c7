//! Run configuration: command-line flags over config-file keys over defaults.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use lfboson::fock::Sector;

/// Problems with the configuration itself; reported with exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SectorChoice {
    Even,
    Odd,
    Both,
}

impl SectorChoice {
    pub fn sectors(self) -> Vec<Sector> {
        match self {
            SectorChoice::Even => vec![Sector::Even],
            SectorChoice::Odd => vec![Sector::Odd],
            SectorChoice::Both => vec![Sector::Odd, Sector::Even],
        }
    }
}

impl FromStr for SectorChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" => Ok(SectorChoice::Even),
            "odd" => Ok(SectorChoice::Odd),
            "both" => Ok(SectorChoice::Both),
            other => Err(format!("sector must be even, odd or both, got `{other}`")),
        }
    }
}

/// Flags shared by every subcommand. All are optional so that config-file
/// values can fill the gaps.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Total longitudinal momentum K
    #[arg(long = "K", value_name = "K")]
    pub k: Option<usize>,
    /// Dimensionless coupling λ/m²
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Mass parameter m² in MeV²
    #[arg(long)]
    pub m2: Option<f64>,
    /// even, odd or both
    #[arg(long)]
    pub sector: Option<SectorChoice>,
    /// Pivot state in caret syntax, e.g. "4^1" or "2^1,1^2"
    #[arg(long)]
    pub pivot: Option<String>,
    /// Krylov dimension (defaults to the sector dimension)
    #[arg(long = "krylov-dim")]
    pub krylov_dim: Option<usize>,
    /// Relative cutoff on overlap eigenvalues
    #[arg(long = "eps-rel")]
    pub eps_rel: Option<f64>,
    /// Estimate Chebyshev moments with this many Hadamard-test shots
    #[arg(long)]
    pub shots: Option<u64>,
    /// Seed of the shot sampler
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the result document as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write tables as CSV
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the walk unitary as a gate list
    #[arg(long = "export-circuit")]
    pub export_circuit: Option<PathBuf>,
    /// Flat key=value configuration file
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub lambda_over_m2: f64,
    pub m2: f64,
    pub sector: Option<SectorChoice>,
    pub pivot: Option<String>,
    pub krylov_dim: Option<usize>,
    pub eps_rel: f64,
    pub shots: Option<u64>,
    pub seed: u64,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub export_circuit: Option<PathBuf>,
}

pub const DEFAULT_K: usize = 4;
pub const DEFAULT_LAMBDA: f64 = 92.4746;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> anyhow::Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value", n + 1)))?;
        let key = k.trim().trim_start_matches('-').replace('_', "-");
        map.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(map)
}

fn read_config(path: &Path) -> anyhow::Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

struct Layer<'a>(&'a HashMap<String, String>);

impl Layer<'_> {
    fn get<T: FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| usage(format!("config key `{key}`: {e}"))),
        }
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => read_config(p)?,
            None => HashMap::new(),
        };
        let f = Layer(&file);
        let known = [
            "K", "lambda", "m2", "sector", "pivot", "krylov-dim", "eps-rel", "shots", "seed", "json", "csv",
            "export-circuit",
        ];
        if let Some(bad) = file.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(usage(format!("unknown config key `{bad}`")));
        }
        let cfg = RunConfig {
            k: args.k.or(f.get("K")?).unwrap_or(DEFAULT_K),
            lambda_over_m2: args.lambda.or(f.get("lambda")?).unwrap_or(DEFAULT_LAMBDA),
            m2: args.m2.or(f.get("m2")?).unwrap_or(1.0),
            sector: args.sector.or(f.get("sector")?),
            pivot: args.pivot.clone().or(f.get("pivot")?),
            krylov_dim: args.krylov_dim.or(f.get("krylov-dim")?),
            eps_rel: args.eps_rel.or(f.get("eps-rel")?).unwrap_or(lfboson::qksd::DEFAULT_EPS_REL),
            shots: args.shots.or(f.get("shots")?),
            seed: args.seed.or(f.get("seed")?).unwrap_or(0),
            json: args.json.clone().or(f.get("json")?),
            csv: args.csv.clone().or(f.get("csv")?),
            export_circuit: args.export_circuit.clone().or(f.get("export-circuit")?),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> anyhow::Result<()> {
        if self.k == 0 {
            return Err(usage("K must be at least 1"));
        }
        if !(self.lambda_over_m2 > 0.0 && self.lambda_over_m2.is_finite()) {
            return Err(usage(format!("lambda must be positive, got {}", self.lambda_over_m2)));
        }
        if !(self.m2 > 0.0 && self.m2.is_finite()) {
            return Err(usage(format!("m2 must be positive, got {}", self.m2)));
        }
        if self.krylov_dim == Some(0) {
            return Err(usage("krylov-dim must be at least 1"));
        }
        if !(self.eps_rel >= 0.0) {
            return Err(usage("eps-rel must be non-negative"));
        }
        if self.shots == Some(0) {
            return Err(usage("shots must be at least 1"));
        }
        Ok(())
    }
}
