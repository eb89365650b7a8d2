//! Serializable run reports.
//!
//! Row types follow the column layout of the usual calibration tables:
//! one row of fitted parameters, one row of CVaR extremes, and one row per
//! significance level of the threshold scan. A `None` basis-point level
//! means the side was not significant (threshold forced to zero).

use serde::{Deserialize, Serialize};

use crate::calibrate::{
    calibrate, estimate_thresholds, Calibration, CalibrationSettings, ReturnSeries, ScanOutcome, ThresholdScan,
};
use crate::error::Result;
use crate::implied::{ParamKind, ParamSurface, PointFailure};
use crate::lattice::Convention;

/// Significance levels of the default threshold sweep.
pub const SWEEP_ALPHAS: [f64; 4] = [0.05, 0.01, 0.005, 0.001];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterRow {
    pub spot: f64,
    pub mu: f64,
    pub sigma: f64,
    pub p_down: f64,
    pub p_mid: f64,
    pub p_up: f64,
    /// Per-step riskless rate used by the run, if any.
    pub rate_daily: Option<f64>,
}

/// A quoted riskless yield and its per-step equivalent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateRow {
    pub tenor: String,
    pub yearly: f64,
    pub daily: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtremeRow {
    pub beta: f64,
    pub cvar_lower: f64,
    pub cvar_upper: f64,
    pub p_down_ext: f64,
    pub p_mid_ext: f64,
    pub p_up_ext: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRow {
    pub alpha: f64,
    /// Signed level `-J * delta_p` in basis points.
    pub p_j_minus: Option<f64>,
    pub r_thr_minus: f64,
    pub p_j_plus: Option<f64>,
    pub r_thr_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeRow {
    pub up_return: f64,
    pub down_return: f64,
    pub up: f64,
    pub down: f64,
    pub growth: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationReport {
    pub label: Option<String>,
    pub convention: Convention,
    pub window_len: usize,
    pub alpha: f64,
    pub delta_bp: f64,
    pub lower_outcome: ScanOutcome,
    pub upper_outcome: ScanOutcome,
    pub parameters: ParameterRow,
    pub extremes: ExtremeRow,
    pub lattice: LatticeRow,
    pub threshold_sweep: Vec<ThresholdRow>,
    pub warnings: Vec<String>,
}

fn threshold_row(t: &crate::calibrate::Thresholds<f64>) -> ThresholdRow {
    let ns = |outcome| outcome == ScanOutcome::NotSignificant;
    ThresholdRow {
        alpha: t.alpha,
        p_j_minus: if ns(t.lower.outcome) { None } else { t.p_j_minus() },
        r_thr_minus: t.r_minus,
        p_j_plus: if ns(t.upper.outcome) { None } else { t.p_j_plus() },
        r_thr_plus: t.r_plus,
    }
}

impl CalibrationReport {
    pub fn from_calibration(c: &Calibration<f64>, spot: f64, sweep: Vec<ThresholdRow>) -> Self {
        let p = &c.params;
        let f = &c.factors;
        let e = &c.extreme_probabilities;
        Self {
            label: None,
            convention: c.convention,
            window_len: c.window_len,
            alpha: c.thresholds.alpha,
            delta_bp: c.thresholds.delta_bp,
            lower_outcome: c.thresholds.lower.outcome,
            upper_outcome: c.thresholds.upper.outcome,
            parameters: ParameterRow {
                spot,
                mu: p.mu,
                sigma: p.sigma,
                p_down: p.p_down,
                p_mid: p.p_mid,
                p_up: p.p_up,
                rate_daily: Some(p.rate),
            },
            extremes: ExtremeRow {
                beta: c.cvar.beta,
                cvar_lower: c.cvar.lower,
                cvar_upper: c.cvar.upper,
                p_down_ext: e.down,
                p_mid_ext: e.mid,
                p_up_ext: e.up,
            },
            lattice: LatticeRow {
                up_return: c.up_return,
                down_return: c.down_return,
                up: f.up,
                down: f.down,
                growth: f.growth,
                gamma: f.gamma,
            },
            threshold_sweep: sweep,
            warnings: c.warnings.clone(),
        }
    }
}

/// Calibrates at `settings.alpha` and repeats the threshold scan at each of
/// `sweep_alphas`.
pub fn calibration_report(
    r: &ReturnSeries<f64>,
    settings: &CalibrationSettings<f64>,
    spot: f64,
    sweep_alphas: &[f64],
) -> Result<(Calibration<f64>, CalibrationReport)> {
    let c = calibrate(r, settings)?;
    let sweep = sweep_alphas
        .iter()
        .map(|&alpha| {
            let scan = ThresholdScan::new(alpha, settings.delta_bp).min_window(settings.min_window);
            estimate_thresholds(r, &scan).map(|t| threshold_row(&t))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = CalibrationReport::from_calibration(&c, spot, sweep);
    Ok((c, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub steps: usize,
    pub moneyness: f64,
    pub value: f64,
    pub objective: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub param: ParamKind,
    pub file: Option<String>,
    pub inverted: usize,
    pub flagged: usize,
    pub bandwidth_t: Option<f64>,
    pub bandwidth_m: Option<f64>,
    pub expanded_nodes: Vec<(usize, usize)>,
    pub points: Vec<PointRecord>,
    pub failures: Vec<PointFailure>,
    pub filtered: Vec<usize>,
}

impl SurfaceSummary {
    pub fn new(s: &ParamSurface<f64>, file: Option<String>) -> Self {
        Self {
            param: s.kind,
            file,
            inverted: s.points.len(),
            flagged: s.points.iter().filter(|p| p.flagged).count(),
            bandwidth_t: s.surface.as_ref().map(|x| x.grid.bandwidth.t),
            bandwidth_m: s.surface.as_ref().map(|x| x.grid.bandwidth.m),
            expanded_nodes: s.surface.as_ref().map(|x| x.expanded_nodes.clone()).unwrap_or_default(),
            points: s
                .points
                .iter()
                .map(|p| PointRecord {
                    steps: p.steps,
                    moneyness: p.moneyness,
                    value: p.value,
                    objective: p.objective,
                    flagged: p.flagged,
                })
                .collect(),
            failures: s.failures.clone(),
            filtered: s.filtered.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImpliedReport {
    pub quotes: usize,
    pub surfaces: Vec<SurfaceSummary>,
    pub warnings: Vec<String>,
}
