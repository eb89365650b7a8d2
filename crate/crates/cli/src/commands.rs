use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use tritree::marketdata::{load_chain, load_prices, to_returns, write_price_grid, write_surface, PriceCell};
use tritree::report::{calibration_report, CalibrationReport, ImpliedReport, SurfaceSummary, SWEEP_ALPHAS};
use tritree::{
    build_surfaces, CalibrationF64, CalibrationSettings, GridSpec, InversionSettings, ModelInputs, PricingModel,
};

use crate::config::RunConfig;

pub const CALIBRATION_FILE: &str = "calibration.json";
pub const PRICES_FILE: &str = "prices.csv";
pub const IMPLIED_REPORT_FILE: &str = "implied_report.json";

/// Default strikes of `price`, as multiples of the spot.
const DEFAULT_MONEYNESS: [f64; 9] = [0.8, 0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15, 1.2];
const DEFAULT_STEPS: [usize; 5] = [1, 5, 10, 20, 40];

pub struct Calibrated {
    pub calibration: CalibrationF64,
    pub report: CalibrationReport,
    pub spot: f64,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))
}

/// Loads the price file, applies the window and calibrates.
pub fn run_calibration(cfg: &RunConfig) -> Result<Calibrated> {
    let history = load_prices(&cfg.prices)?;
    let history = match cfg.window {
        Some(len) => history
            .window(None, len)
            .with_context(|| format!("window of {len} prices is longer than the file ({} rows)", history.len()))?,
        None => history,
    };
    let spot = match cfg.spot {
        Some(s) => s,
        None => history.last_close().context("price file is empty")?,
    };
    let returns = to_returns(&history, cfg.convention, 1.0)?;
    let settings = CalibrationSettings {
        alpha: cfg.alpha,
        delta_bp: cfg.dp_bp,
        beta: cfg.beta,
        rate: cfg.rf_daily,
        ..CalibrationSettings::default()
    };
    let (calibration, mut report) =
        calibration_report(&returns, &settings, spot, &SWEEP_ALPHAS).context("calibration failed")?;
    report.label = cfg.label.clone();
    Ok(Calibrated {
        calibration,
        report,
        spot,
    })
}

fn model(c: &Calibrated) -> PricingModel<f64> {
    PricingModel {
        spot: c.spot,
        convention: c.calibration.convention,
    }
}

pub fn calibrate(cfg: &RunConfig) -> Result<()> {
    let c = run_calibration(cfg)?;
    prepare_out(cfg)?;
    let path = cfg.out.join(CALIBRATION_FILE);
    write_json(&c.report, &path)?;
    let p = &c.report.parameters;
    println!(
        "mu = {:.6e}, sigma = {:.6e}, (p_d, p_m, p_u) = ({:.5}, {:.5}, {:.5})",
        p.mu, p.sigma, p.p_down, p.p_mid, p.p_up
    );
    for w in &c.report.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

/// Call prices over every (steps, strike) pair. Cells the lattice rejects
/// carry the error text.
pub fn price_cells(model: &PricingModel<f64>, c: &CalibrationF64, steps: &[usize], strikes: &[f64]) -> Vec<PriceCell> {
    let mut cells = Vec::with_capacity(steps.len() * strikes.len());
    for &n in steps {
        for &k in strikes {
            cells.push(PriceCell {
                steps: n,
                strike: k,
                moneyness: k / model.spot,
                price: model.call_price(&c.params, n, k).map_err(|e| e.to_string()),
            });
        }
    }
    cells
}

pub fn price(cfg: &RunConfig) -> Result<()> {
    let c = run_calibration(cfg)?;
    let strikes = cfg
        .strikes
        .clone()
        .unwrap_or_else(|| DEFAULT_MONEYNESS.iter().map(|m| m * c.spot).collect());
    let steps = cfg.steps.clone().unwrap_or_else(|| DEFAULT_STEPS.to_vec());
    let cells = price_cells(&model(&c), &c.calibration, &steps, &strikes);
    prepare_out(cfg)?;
    let path = cfg.out.join(PRICES_FILE);
    write_price_grid(&cells, &path)?;
    let failed = cells.iter().filter(|x| x.price.is_err()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} cells could not be priced; see the status column", cells.len());
    }
    println!("wrote {} ({} cells)", path.display(), cells.len());
    Ok(())
}

pub fn implied(cfg: &RunConfig) -> Result<()> {
    let chain_path = cfg.chain.as_ref().context("no option chain given (use --chain or `chain` in the config)")?;
    let c = run_calibration(cfg)?;
    let quotes = load_chain(chain_path, c.spot)?;
    let inputs = ModelInputs {
        model: model(&c),
        params: c.calibration.params,
        extreme: Some(c.calibration.extreme_params()),
    };
    let grid = GridSpec {
        t_axis: cfg.t_axis.clone(),
        m_axis: cfg.m_axis.clone(),
        bandwidth_t: cfg.bandwidth_t,
        bandwidth_m: cfg.bandwidth_m,
        m_nodes: None,
    };
    let settings = InversionSettings::default();
    let surfaces = build_surfaces(&quotes, &inputs, &cfg.params, &grid, &settings)
        .context("every quote failed for every requested parameter")?;

    prepare_out(cfg)?;
    let mut report = ImpliedReport {
        quotes: quotes.quotes().len(),
        surfaces: Vec::with_capacity(surfaces.len()),
        warnings: c.report.warnings.clone(),
    };
    for s in &surfaces {
        let file = match &s.surface {
            Some(sm) => {
                let name = format!("implied_{}.csv", s.kind);
                write_surface(&sm.grid, cfg.out.join(&name))?;
                if !sm.expanded_nodes.is_empty() {
                    report.warnings.push(format!(
                        "{}: bandwidth expanded locally at {} grid nodes",
                        s.kind,
                        sm.expanded_nodes.len()
                    ));
                }
                Some(name)
            }
            None => None,
        };
        let summary = SurfaceSummary::new(s, file);
        if summary.flagged > 0 {
            report.warnings.push(format!(
                "{}: {} of {} points fit worse than the tolerance",
                s.kind, summary.flagged, summary.inverted
            ));
        }
        if !s.failures.is_empty() {
            report
                .warnings
                .push(format!("{}: {} quotes could not be inverted", s.kind, s.failures.len()));
        }
        if !s.filtered.is_empty() {
            report
                .warnings
                .push(format!("{}: {} quotes under the price floor were skipped", s.kind, s.filtered.len()));
        }
        report.surfaces.push(summary);
    }
    let path = cfg.out.join(IMPLIED_REPORT_FILE);
    write_json(&report, &path)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} ({} surfaces)", path.display(), report.surfaces.len());
    Ok(())
}
