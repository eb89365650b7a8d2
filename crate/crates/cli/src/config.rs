//! Run configuration: built-in defaults, then an optional TOML file, then
//! command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use serde::Deserialize;
use tritree::{Convention, ParamKind};

/// Keys accepted in the TOML config file. Every key is optional and is
/// overridden by the flag of the same name.
#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub prices: Option<PathBuf>,
    pub chain: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub label: Option<String>,
    pub convention: Option<String>,
    pub alpha: Option<f64>,
    pub dp_bp: Option<f64>,
    pub beta: Option<f64>,
    pub rf_daily: Option<f64>,
    pub window: Option<usize>,
    pub spot: Option<f64>,
    pub params: Option<Vec<String>>,
    pub bandwidth_t: Option<f64>,
    pub bandwidth_m: Option<f64>,
    pub t_axis: Option<Vec<f64>>,
    pub m_axis: Option<Vec<f64>>,
    pub strikes: Option<Vec<f64>>,
    pub steps: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// TOML file with default values for any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Adjusted-close history, `date,adj_close`.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Free-form label copied into the report.
    #[arg(long)]
    pub label: Option<String>,
    /// Return convention: arith or log.
    #[arg(long)]
    pub convention: Option<String>,
    /// Significance level of the threshold scan.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Scan increment in basis points.
    #[arg(long = "dp-bp")]
    pub dp_bp: Option<f64>,
    /// CVaR tail level.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Riskless rate per trading day.
    #[arg(long = "rf-daily")]
    pub rf_daily: Option<f64>,
    /// Use only the last N prices.
    #[arg(long)]
    pub window: Option<usize>,
    /// Spot price; defaults to the last close.
    #[arg(long)]
    pub spot: Option<f64>,
}

/// Flags of `implied`.
#[derive(Debug, Default, Clone, Args)]
pub struct ImpliedArgs {
    /// Option chain, `expiry_steps,strike,price`.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Parameters to invert: sigma,mu,rf,pd,pm,pdext,pmext.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub params: Option<Vec<String>>,
    /// Kernel width along maturity, in steps.
    #[arg(long = "bandwidth-T")]
    pub bandwidth_t: Option<f64>,
    /// Kernel width along moneyness.
    #[arg(long = "bandwidth-M")]
    pub bandwidth_m: Option<f64>,
    /// Maturity nodes of the output grid, in steps.
    #[arg(long = "t-axis", value_delimiter = ',')]
    pub t_axis: Option<Vec<f64>>,
    /// Moneyness nodes of the output grid.
    #[arg(long = "m-axis", value_delimiter = ',')]
    pub m_axis: Option<Vec<f64>>,
}

/// Flags of `price`.
#[derive(Debug, Default, Clone, Args)]
pub struct PriceArgs {
    /// Strikes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub strikes: Option<Vec<f64>>,
    /// Maturities in steps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub prices: PathBuf,
    pub chain: Option<PathBuf>,
    pub out: PathBuf,
    pub label: Option<String>,
    pub convention: Convention,
    pub alpha: f64,
    pub dp_bp: f64,
    pub beta: f64,
    pub rf_daily: f64,
    pub window: Option<usize>,
    pub spot: Option<f64>,
    pub params: Vec<ParamKind>,
    pub bandwidth_t: Option<f64>,
    pub bandwidth_m: Option<f64>,
    pub t_axis: Option<Vec<f64>>,
    pub m_axis: Option<Vec<f64>>,
    pub strikes: Option<Vec<f64>>,
    pub steps: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs, implied: &ImpliedArgs, price: &PriceArgs) -> Result<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let Some(prices) = common.prices.clone().or(file.prices) else {
            bail!("no price file given (use --prices or `prices` in the config)");
        };
        let convention = match common.convention.clone().or(file.convention) {
            Some(s) => s.parse::<Convention>().map_err(anyhow::Error::msg)?,
            None => Convention::Arithmetic,
        };
        let params = implied
            .params
            .clone()
            .or(file.params)
            .unwrap_or_default()
            .iter()
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.parse::<ParamKind>().map_err(anyhow::Error::msg))
            .collect::<Result<Vec<_>>>()?;
        let cfg = RunConfig {
            prices,
            chain: implied.chain.clone().or(file.chain),
            out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            label: common.label.clone().or(file.label),
            convention,
            alpha: common.alpha.or(file.alpha).unwrap_or(0.001),
            dp_bp: common.dp_bp.or(file.dp_bp).unwrap_or(1.0),
            beta: common.beta.or(file.beta).unwrap_or(0.01),
            rf_daily: common.rf_daily.or(file.rf_daily).unwrap_or(0.0),
            window: common.window.or(file.window),
            spot: common.spot.or(file.spot),
            params,
            bandwidth_t: implied.bandwidth_t.or(file.bandwidth_t),
            bandwidth_m: implied.bandwidth_m.or(file.bandwidth_m),
            t_axis: implied.t_axis.clone().or(file.t_axis),
            m_axis: implied.m_axis.clone().or(file.m_axis),
            strikes: price.strikes.clone().or(file.strikes),
            steps: price.steps.clone().or(file.steps),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.alpha > 0.0 && self.alpha < 0.5, "alpha = {} must lie in (0, 0.5)", self.alpha);
        ensure!(self.beta > 0.0 && self.beta < 0.5, "beta = {} must lie in (0, 0.5)", self.beta);
        ensure!(self.dp_bp > 0.0 && self.dp_bp.is_finite(), "dp-bp = {} must be positive", self.dp_bp);
        ensure!(self.rf_daily.is_finite(), "rf-daily must be finite");
        if let Some(w) = self.window {
            ensure!(w >= 3, "window = {w} must keep at least 3 prices");
        }
        if let Some(s) = self.spot {
            ensure!(s > 0.0 && s.is_finite(), "spot = {s} must be positive");
        }
        for (name, bw) in [("bandwidth-T", self.bandwidth_t), ("bandwidth-M", self.bandwidth_m)] {
            if let Some(b) = bw {
                ensure!(b > 0.0 && b.is_finite(), "{name} = {b} must be positive");
            }
        }
        if let Some(ks) = &self.strikes {
            ensure!(ks.iter().all(|k| *k >= 0.0 && k.is_finite()), "strikes must be non-negative");
        }
        if let Some(ns) = &self.steps {
            ensure!(ns.iter().all(|n| *n > 0), "steps must be positive");
        }
        if !self.prices.exists() {
            bail!("price file {} does not exist", self.prices.display());
        }
        if let Some(c) = &self.chain {
            ensure!(c.exists(), "chain file {} does not exist", c.display());
        }
        Ok(())
    }
}
