//! Natural-world calibration from a historical return window.
//!
//! The return band `(r_minus, r_plus)` that counts as "no significant change"
//! is found by scanning basis-point sub-samples with one-sided t-tests. The
//! band yields the branch probabilities, and the window's mean and variance
//! fix the up/down returns by moment matching. Extreme variants replace the
//! band with the CVaR tail means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{gamma_exponent, Convention, StepFactors};
use crate::scalar::{from_usize, lit, to_f64, Scalar};
use crate::stats::{mean_sd, one_sample_t_test, Tail};

/// Minimum window length accepted by the threshold scan unless overridden.
pub const DEFAULT_MIN_WINDOW: usize = 30;

/// Historical per-step returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries<T> {
    values: Vec<T>,
    pub convention: Convention,
    pub dt: T,
}

impl<T: Scalar> ReturnSeries<T> {
    pub fn new(values: Vec<T>, convention: Convention, dt: T) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "return",
                value: to_f64(*bad),
                reason: "returns must be finite",
            });
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: to_f64(dt),
                reason: "step length must be positive and finite",
            });
        }
        Ok(Self { values, convention, dt })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Settings for the sequential t-test scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScan<T> {
    pub alpha: T,
    /// Scan increment in basis points (positive; mirrored for the lower side).
    pub delta_bp: T,
    pub min_window: usize,
}

impl<T: Scalar> ThresholdScan<T> {
    pub fn new(alpha: T, delta_bp: T) -> Self {
        Self {
            alpha,
            delta_bp,
            min_window: DEFAULT_MIN_WINDOW,
        }
    }

    pub fn min_window(mut self, n: usize) -> Self {
        self.min_window = n;
        self
    }
}

/// How one side of the scan terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOutcome {
    /// `H0` held for `j = 1..=J` and was rejected at `J + 1`.
    Rejected,
    /// `H0` was rejected at the first testable sample; threshold set to 0.
    NotSignificant,
    /// The sample grew to the whole sign-restricted population without a
    /// rejection; threshold is the mean of the last accepted sample (0 if none).
    Exhausted,
}

/// One side of the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSide<T> {
    pub threshold: T,
    /// Last accepted `j` (so `p_J = ±j * delta_bp`).
    pub last_accepted: Option<usize>,
    pub outcome: ScanOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds<T> {
    pub r_minus: T,
    pub r_plus: T,
    pub alpha: T,
    pub delta_bp: T,
    pub lower: ScanSide<T>,
    pub upper: ScanSide<T>,
}

impl<T: Scalar> Thresholds<T> {
    /// Signed basis-point level `p_J-` of the accepted lower sample.
    pub fn p_j_minus(&self) -> Option<T> {
        self.lower
            .last_accepted
            .map(|j| -from_usize::<T>(j) * self.delta_bp)
    }

    pub fn p_j_plus(&self) -> Option<T> {
        self.upper
            .last_accepted
            .map(|j| from_usize::<T>(j) * self.delta_bp)
    }
}

/// Runs the t-test scan on one side. `population` is ordered by distance from
/// zero, so every sample is a prefix.
fn scan_side<T: Scalar>(population: &[T], tail: Tail, alpha: T, delta_bp: T) -> ScanSide<T> {
    let mut accepted: Option<(usize, T)> = None;
    let finish = |accepted: Option<(usize, T)>, outcome| ScanSide {
        threshold: accepted.map_or(T::zero(), |(_, m)| m),
        last_accepted: accepted.map(|(j, _)| j),
        outcome,
    };
    if population.is_empty() {
        return finish(None, ScanOutcome::Exhausted);
    }
    let bp = lit::<T>(1e-4);
    for j in 1usize.. {
        let bound = bp * from_usize::<T>(j) * delta_bp;
        let n = population.partition_point(|r| r.abs() <= bound);
        let sample = &population[..n];
        if sample.len() >= 2 {
            let test = one_sample_t_test(sample, tail, alpha);
            if test.reject {
                let outcome = if accepted.is_some() {
                    ScanOutcome::Rejected
                } else {
                    ScanOutcome::NotSignificant
                };
                return finish(accepted, outcome);
            }
            accepted = Some((j, test.mean));
        }
        if n == population.len() {
            return finish(accepted, ScanOutcome::Exhausted);
        }
    }
    unreachable!("scan terminates once the population is exhausted")
}

/// Estimates `(r_minus, r_plus)` by sequential one-sided t-tests.
pub fn estimate_thresholds<T: Scalar>(r: &ReturnSeries<T>, scan: &ThresholdScan<T>) -> Result<Thresholds<T>> {
    if r.len() < scan.min_window.max(2) {
        return Err(Error::InsufficientData {
            needed: scan.min_window.max(2),
            got: r.len(),
        });
    }
    if !(scan.alpha > T::zero() && scan.alpha < lit(0.5)) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: to_f64(scan.alpha),
            reason: "significance level must lie in (0, 0.5)",
        });
    }
    if !(scan.delta_bp > T::zero()) || !scan.delta_bp.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta_p",
            value: to_f64(scan.delta_bp),
            reason: "basis-point step must be positive",
        });
    }
    let mut positive: Vec<T> = r.values.iter().copied().filter(|&x| x >= T::zero()).collect();
    let mut negative: Vec<T> = r.values.iter().copied().filter(|&x| x <= T::zero()).collect();
    positive.sort_by(|a, b| a.partial_cmp(b).unwrap());
    negative.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let upper = scan_side(&positive, Tail::Greater, scan.alpha, scan.delta_bp);
    let lower = scan_side(&negative, Tail::Less, scan.alpha, scan.delta_bp);
    Ok(Thresholds {
        r_minus: lower.threshold,
        r_plus: upper.threshold,
        alpha: scan.alpha,
        delta_bp: scan.delta_bp,
        lower,
        upper,
    })
}

/// Natural-world branch probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchProbabilities<T> {
    pub up: T,
    pub mid: T,
    pub down: T,
}

/// Counts returns at or above `upper`, strictly inside the band, and assigns
/// the remainder to the down branch.
pub fn estimate_probabilities<T: Scalar>(r: &ReturnSeries<T>, lower: T, upper: T) -> Result<BranchProbabilities<T>> {
    if r.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let len = from_usize::<T>(r.len());
    let n_up = r.values.iter().filter(|&&x| x >= upper).count();
    let n_mid = r.values.iter().filter(|&&x| lower < x && x < upper).count();
    let up = from_usize::<T>(n_up) / len;
    let mid = from_usize::<T>(n_mid) / len;
    Ok(BranchProbabilities {
        up,
        mid,
        down: T::one() - up - mid,
    })
}

/// Return drift and volatility per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments<T> {
    pub mu: T,
    pub sigma: T,
}

/// Sample mean and unbiased standard deviation, rescaled so that
/// `mu * dt` and `sigma^2 * dt` are the per-step moments.
pub fn estimate_moments<T: Scalar>(r: &ReturnSeries<T>) -> Result<Moments<T>> {
    if r.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: r.len() });
    }
    let (mean, sd) = mean_sd(&r.values);
    // a constant series can leave rounding noise in the two-pass variance
    let first = r.values[0];
    if sd == T::zero() || r.values.iter().all(|&v| v == first) {
        return Err(Error::DegenerateVolatility);
    }
    Ok(Moments {
        mu: mean / r.dt,
        sigma: sd / r.dt.sqrt(),
    })
}

/// Per-step natural-world state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams<T> {
    pub p_up: T,
    pub p_mid: T,
    pub p_down: T,
    /// Return drift per unit time.
    pub mu: T,
    /// Return volatility per unit time.
    pub sigma: T,
    /// Riskless rate per unit time.
    pub rate: T,
    pub dt: T,
}

impl<T: Scalar> NaturalParams<T> {
    pub fn new(probs: BranchProbabilities<T>, moments: Moments<T>, rate: T, dt: T) -> Result<Self> {
        let p = Self {
            p_up: probs.up,
            p_mid: probs.mid,
            p_down: probs.down,
            mu: moments.mu,
            sigma: moments.sigma,
            rate,
            dt,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_u", self.p_up), ("p_m", self.p_mid), ("p_d", self.p_down)] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::InvalidParameter {
                    name,
                    value: to_f64(v),
                    reason: "probability must lie in [0, 1]",
                });
            }
        }
        let sum = self.p_up + self.p_mid + self.p_down;
        if (sum - T::one()).abs() > lit(1e-9) {
            return Err(Error::InvalidParameter {
                name: "p_u + p_m + p_d",
                value: to_f64(sum),
                reason: "probabilities must sum to 1",
            });
        }
        if self.sigma == T::zero() {
            return Err(Error::DegenerateVolatility);
        }
        if !(self.sigma > T::zero()) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: to_f64(self.sigma),
                reason: "volatility must be positive and finite",
            });
        }
        if !(self.dt > T::zero()) || !self.mu.is_finite() || !self.rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: to_f64(self.dt),
                reason: "dt must be positive; mu and r_f finite",
            });
        }
        Ok(())
    }

    pub fn probabilities(&self) -> BranchProbabilities<T> {
        BranchProbabilities {
            up: self.p_up,
            mid: self.p_mid,
            down: self.p_down,
        }
    }

    /// Up/down returns and lattice factors in one go.
    pub fn step_factors(&self, convention: Convention) -> Result<StepFactors<T>> {
        let (up, down) = compute_up_down(self)?;
        build_step_factors(self, up, down, convention)
    }
}

/// Moment-matched `(U, D)`:
///
/// ```text
/// U = [mu dt + sqrt(p_d / p_u) sqrt((1 - p_m) sigma^2 dt - p_m (mu dt)^2)] / (1 - p_m)
/// D = [mu dt - sqrt(p_u / p_d) sqrt((1 - p_m) sigma^2 dt - p_m (mu dt)^2)] / (1 - p_m)
/// ```
pub fn compute_up_down<T: Scalar>(p: &NaturalParams<T>) -> Result<(T, T)> {
    if !(p.p_up > T::zero() && p.p_down > T::zero()) {
        return Err(Error::DegenerateBranch {
            p_up: to_f64(p.p_up),
            p_down: to_f64(p.p_down),
        });
    }
    let drift = p.mu * p.dt;
    let keep = T::one() - p.p_mid;
    let radicand = keep * p.sigma * p.sigma * p.dt - p.p_mid * drift * drift;
    if !(radicand >= T::zero()) {
        return Err(Error::MomentInfeasible {
            radicand: to_f64(radicand),
        });
    }
    let spread = radicand.sqrt();
    let up = (drift + (p.p_down / p.p_up).sqrt() * spread) / keep;
    let down = (drift - (p.p_up / p.p_down).sqrt() * spread) / keep;
    Ok((up, down))
}

/// Lattice factors for calibrated returns. `gamma` is recomputed from
/// `(r_f, sigma)`; the price drift (`mu`, or `mu + sigma^2 / 2` for log
/// returns) is attached as metadata.
pub fn build_step_factors<T: Scalar>(
    p: &NaturalParams<T>,
    up_return: T,
    down_return: T,
    convention: Convention,
) -> Result<StepFactors<T>> {
    let gamma = gamma_exponent(p.rate, p.sigma)?;
    let drift = match convention {
        Convention::Arithmetic => p.mu,
        Convention::Log => p.mu + p.sigma * p.sigma / lit(2.0),
    };
    Ok(StepFactors::new(convention, up_return, down_return, p.rate * p.dt, gamma)?.with_asset_drift(drift))
}

/// Lower and upper CVaR tail means used as extreme thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvarThresholds<T> {
    pub beta: T,
    /// Mean of returns at or below the lower empirical beta-quantile (negative for losses).
    pub lower: T,
    /// Mean of returns at or above the mirrored upper quantile.
    pub upper: T,
    pub lower_quantile: T,
    pub upper_quantile: T,
    pub lower_count: usize,
    pub upper_count: usize,
}

/// Tail means at level `beta`.
///
/// The lower quantile is the order statistic of rank `ceil(beta L)` from the
/// bottom, the upper one the same rank from the top. Every return equal to a
/// quantile enters its tail.
pub fn cvar_thresholds<T: Scalar>(r: &ReturnSeries<T>, beta: T) -> Result<CvarThresholds<T>> {
    if !(beta > T::zero() && beta < lit(0.5)) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: to_f64(beta),
            reason: "tail level must lie in (0, 0.5)",
        });
    }
    let beta_len = beta * from_usize::<T>(r.len());
    // guard against beta * L landing a rounding error above an integer
    let rank = (beta_len - lit(1e-9)).ceil().to_usize().unwrap_or(0);
    if beta_len < lit::<T>(1.0 - 1e-9) || rank < 1 {
        return Err(Error::InsufficientTail {
            beta_len: to_f64(beta_len),
        });
    }
    let mut sorted = r.values.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lower_quantile = sorted[rank - 1];
    let upper_quantile = sorted[sorted.len() - rank];

    let tail_mean = |keep: &dyn Fn(T) -> bool| {
        let tail: Vec<T> = sorted.iter().copied().filter(|&x| keep(x)).collect();
        (tail.iter().copied().sum::<T>() / from_usize(tail.len()), tail.len())
    };
    let (lower, lower_count) = tail_mean(&|x| x <= lower_quantile);
    let (upper, upper_count) = tail_mean(&|x| x >= upper_quantile);
    Ok(CvarThresholds {
        beta,
        lower,
        upper,
        lower_quantile,
        upper_quantile,
        lower_count,
        upper_count,
    })
}

/// Knobs for a full calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings<T> {
    pub alpha: T,
    pub delta_bp: T,
    pub beta: T,
    /// Riskless rate per unit time (same unit as `dt`).
    pub rate: T,
    pub min_window: usize,
}

impl<T: Scalar> Default for CalibrationSettings<T> {
    fn default() -> Self {
        Self {
            alpha: lit(0.001),
            delta_bp: T::one(),
            beta: lit(0.01),
            rate: T::zero(),
            min_window: DEFAULT_MIN_WINDOW,
        }
    }
}

/// Everything estimated from one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    pub convention: Convention,
    pub window_len: usize,
    pub thresholds: Thresholds<T>,
    pub params: NaturalParams<T>,
    pub up_return: T,
    pub down_return: T,
    pub factors: StepFactors<T>,
    pub cvar: CvarThresholds<T>,
    pub extreme_probabilities: BranchProbabilities<T>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Calibration<T> {
    /// Natural parameters with the branch probabilities replaced by the
    /// CVaR-extreme ones.
    pub fn extreme_params(&self) -> NaturalParams<T> {
        NaturalParams {
            p_up: self.extreme_probabilities.up,
            p_mid: self.extreme_probabilities.mid,
            p_down: self.extreme_probabilities.down,
            ..self.params
        }
    }
}

/// Thresholds, probabilities, moments, lattice factors and CVaR extremes.
pub fn calibrate<T: Scalar>(r: &ReturnSeries<T>, settings: &CalibrationSettings<T>) -> Result<Calibration<T>> {
    let scan = ThresholdScan {
        alpha: settings.alpha,
        delta_bp: settings.delta_bp,
        min_window: settings.min_window,
    };
    let thresholds = estimate_thresholds(r, &scan)?;
    let moments = estimate_moments(r)?;
    let probs = estimate_probabilities(r, thresholds.r_minus, thresholds.r_plus)?;
    let params = NaturalParams::new(probs, moments, settings.rate, r.dt)?;
    let (up_return, down_return) = compute_up_down(&params)?;
    let factors = build_step_factors(&params, up_return, down_return, r.convention)?;
    let cvar = cvar_thresholds(r, settings.beta)?;
    let extreme_probabilities = estimate_probabilities(r, cvar.lower, cvar.upper)?;

    let mut warnings = Vec::new();
    for (side, s) in [("lower", &thresholds.lower), ("upper", &thresholds.upper)] {
        match s.outcome {
            ScanOutcome::Rejected => {}
            ScanOutcome::NotSignificant => warnings.push(format!(
                "{side} threshold: H0 rejected at the first testable sample (NS); threshold set to 0"
            )),
            ScanOutcome::Exhausted => warnings.push(format!(
                "{side} threshold: scan exhausted the population without rejection"
            )),
        }
    }
    Ok(Calibration {
        convention: r.convention,
        window_len: r.len(),
        thresholds,
        params,
        up_return,
        down_return,
        factors,
        cvar,
        extreme_probabilities,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn series(v: &[f64]) -> ReturnSeries<f64> {
        ReturnSeries::new(v.to_vec(), Convention::Arithmetic, 1.0).unwrap()
    }

    #[test]
    fn all_zero_window_gives_zero_band() {
        let r = series(&[0.0; 40]);
        let t = estimate_thresholds(&r, &ThresholdScan::new(0.001, 1.0)).unwrap();
        assert_eq!((t.r_minus, t.r_plus), (0.0, 0.0));
        assert_eq!(t.upper.outcome, ScanOutcome::Exhausted);
        assert_eq!(t.upper.last_accepted, Some(1));
    }

    #[test]
    fn short_window_rejected() {
        let r = series(&[0.001; 10]);
        assert_eq!(
            estimate_thresholds(&r, &ThresholdScan::new(0.01, 1.0)),
            Err(Error::InsufficientData { needed: 30, got: 10 })
        );
    }

    #[test]
    fn immediate_rejection_is_ns() {
        // two identical positive returns inside 1bp: zero variance, positive mean
        let mut v = vec![0.5e-4, 0.5e-4];
        v.extend(std::iter::repeat_n(-0.01, 30));
        let t = estimate_thresholds(&series(&v), &ThresholdScan::new(0.05, 1.0)).unwrap();
        assert_eq!(t.upper.outcome, ScanOutcome::NotSignificant);
        assert_eq!(t.r_plus, 0.0);
        assert_eq!(t.upper.last_accepted, None);
    }

    #[test]
    fn probabilities_by_hand() {
        let r = series(&[-2e-3, -1e-3, 0.0, 1e-3, 2e-3]);
        let p = estimate_probabilities(&r, -5e-4, 5e-4).unwrap();
        assert_abs_diff_eq!(p.up, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.mid, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.down, 0.4, epsilon = 1e-15);
        let all_up = estimate_probabilities(&series(&[0.01, 0.02]), -1e-3, 1e-3).unwrap();
        assert_eq!((all_up.up, all_up.mid, all_up.down), (1.0, 0.0, 0.0));
    }

    #[test]
    fn moments_examples() {
        let m = estimate_moments(&series(&[0.01, -0.01])).unwrap();
        assert_eq!(m.mu, 0.0);
        assert_abs_diff_eq!(m.sigma, 0.01 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(estimate_moments(&series(&[0.003; 5])), Err(Error::DegenerateVolatility));
        let half_day = ReturnSeries::new(vec![0.01, -0.01], Convention::Log, 0.5).unwrap();
        let m = estimate_moments(&half_day).unwrap();
        assert_abs_diff_eq!(m.sigma * m.sigma * 0.5, 2e-4, epsilon = 1e-15);
    }

    fn params(p_up: f64, p_mid: f64, mu: f64, sigma: f64) -> NaturalParams<f64> {
        NaturalParams {
            p_up,
            p_mid,
            p_down: 1.0 - p_up - p_mid,
            mu,
            sigma,
            rate: 0.0,
            dt: 1.0,
        }
    }

    #[test]
    fn symmetric_binomial_case() {
        let (u, d) = compute_up_down(&params(0.5, 0.0, 0.0, 0.02)).unwrap();
        assert_abs_diff_eq!(u, 0.02, epsilon = 1e-16);
        assert_abs_diff_eq!(d, -0.02, epsilon = 1e-16);
    }

    #[test]
    fn up_down_errors() {
        assert!(matches!(
            compute_up_down(&params(0.0, 0.5, 0.0, 0.02)),
            Err(Error::DegenerateBranch { .. })
        ));
        assert!(matches!(
            compute_up_down(&params(0.005, 0.99, 0.01, 0.005)),
            Err(Error::MomentInfeasible { .. })
        ));
    }

    #[test]
    fn aapl_inputs_round_trip_moments() {
        let p = params(0.517, 0.00995, 1.09e-3, 0.0212);
        let (u, d) = compute_up_down(&p).unwrap();
        let mean = u * p.p_up + d * p.p_down;
        let var = u * u * p.p_up + d * d * p.p_down - mean * mean;
        assert_abs_diff_eq!(mean, 1.09e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(var, 0.0212 * 0.0212, epsilon = 1e-15);
    }

    #[test]
    fn step_factor_drift_metadata() {
        let mut p = params(0.5, 0.0, 1e-3, 0.02);
        p.rate = 2e-4;
        let a = p.step_factors(Convention::Arithmetic).unwrap();
        let l = p.step_factors(Convention::Log).unwrap();
        assert_eq!(a.asset_drift, Some(1e-3));
        assert_abs_diff_eq!(l.asset_drift.unwrap(), 1e-3 + 2e-4, epsilon = 1e-16);
        assert_abs_diff_eq!(a.gamma, -1.0, epsilon = 1e-15);
        p.rate = 0.05;
        assert!(matches!(
            p.step_factors(Convention::Arithmetic),
            Err(Error::ArbitrageBounds { .. })
        ));
    }

    #[test]
    fn cvar_on_uniform_grid() {
        let r = series(&(1..=100).map(|i| i as f64 / 100.0).collect::<Vec<_>>());
        let c = cvar_thresholds(&r, 0.01).unwrap();
        assert_eq!(c.lower, 0.01);
        assert_eq!(c.upper, 1.0);
        assert_eq!((c.lower_count, c.upper_count), (1, 1));
    }

    #[test]
    fn cvar_symmetric_and_ties() {
        let v: Vec<f64> = (1..=50).flat_map(|i| [i as f64 * 1e-3, -(i as f64) * 1e-3]).collect();
        let c = cvar_thresholds(&series(&v), 0.05).unwrap();
        assert_eq!(c.lower, -c.upper);
        let tied = series(&[-0.05, -0.05, -0.05, 0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06]);
        let c = cvar_thresholds(&tied, 0.1).unwrap();
        assert_eq!(c.lower_count, 3);
        assert_eq!(
            cvar_thresholds(&series(&[0.1; 20]), 0.01),
            Err(Error::InsufficientTail { beta_len: 0.2 })
        );
    }
}
