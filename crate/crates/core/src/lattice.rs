//! Recombining trinomial lattice over the market {stock, perpetual derivative, bond}.
//!
//! Each step moves the stock by `u`, `1` or `d`. The perpetual derivative is
//! priced as `S^gamma` with `gamma = -2 r_f / sigma^2`, and the bond grows by
//! `R_f`. Those three assets pin down a unique one-step risk-neutral measure
//! `(q_u, q_m, q_d)`, which drives backward induction for European claims.
//! A dense replication solver is provided as an independent route to the
//! same node values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// How per-step returns map to price factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// `u = 1 + U`, `d = 1 + D`, `R_f = 1 + r_f dt`.
    Arithmetic,
    /// `u = e^U`, `d = e^D`, `R_f = e^(r_f dt)`.
    Log,
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Convention::Arithmetic => f.write_str("arith"),
            Convention::Log => f.write_str("log"),
        }
    }
}

impl FromStr for Convention {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "arith" | "arithmetic" => Ok(Convention::Arithmetic),
            "log" | "logarithmic" => Ok(Convention::Log),
            other => Err(format!("unknown return convention `{other}` (expected arith|log)")),
        }
    }
}

impl Convention {
    /// Price factor for a one-step return.
    pub fn factor<T: Scalar>(self, ret: T) -> T {
        match self {
            Convention::Arithmetic => T::one() + ret,
            Convention::Log => ret.exp(),
        }
    }

    /// `factor(ret) - 1`, evaluated without cancellation.
    pub fn factor_minus_one<T: Scalar>(self, ret: T) -> T {
        match self {
            Convention::Arithmetic => ret,
            Convention::Log => ret.exp_m1(),
        }
    }

    /// `ln(factor(ret))`.
    pub fn log_factor<T: Scalar>(self, ret: T) -> T {
        match self {
            Convention::Arithmetic => ret.ln_1p(),
            Convention::Log => ret,
        }
    }
}

/// Perpetual-derivative exponent `gamma = -2 r_f / sigma^2`.
///
/// `rate` and `sigma` must be expressed in the same time unit; the ratio is
/// unit-free.
pub fn gamma_exponent<T: Scalar>(rate: T, sigma: T) -> Result<T> {
    if sigma == T::zero() {
        return Err(Error::DegenerateVolatility);
    }
    if !sigma.is_finite() || sigma < T::zero() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: to_f64(sigma),
            reason: "volatility must be positive and finite",
        });
    }
    if !rate.is_finite() {
        return Err(Error::InvalidParameter {
            name: "r_f",
            value: to_f64(rate),
            reason: "rate must be finite",
        });
    }
    Ok(-lit::<T>(2.0) * rate / (sigma * sigma))
}

/// Lattice factors for one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepFactors<T> {
    /// Up return `U`.
    pub up_return: T,
    /// Down return `D`.
    pub down_return: T,
    /// Up factor `u`.
    pub up: T,
    /// Down factor `d`.
    pub down: T,
    /// Riskless gross growth `R_f` over the step.
    pub growth: T,
    /// Perpetual-derivative exponent.
    pub gamma: T,
    pub convention: Convention,
    /// Instantaneous drift of the price process implied by the return drift:
    /// `mu` for arithmetic returns, `mu + sigma^2 / 2` for log returns. Only
    /// set when the factors were calibrated from natural-world parameters.
    pub asset_drift: Option<T>,
}

impl<T: Scalar> StepFactors<T> {
    /// Builds factors from per-step returns, checking `D < 0 < U`,
    /// `D < r_f dt < U` and `d > 0`.
    pub fn new(
        convention: Convention,
        up_return: T,
        down_return: T,
        rate_step: T,
        gamma: T,
    ) -> Result<Self> {
        for (name, v) in [
            ("U", up_return),
            ("D", down_return),
            ("r_f*dt", rate_step),
            ("gamma", gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: to_f64(v),
                    reason: "must be finite",
                });
            }
        }
        let bounds = |violated| Error::ArbitrageBounds {
            down_return: to_f64(down_return),
            rate_step: to_f64(rate_step),
            up_return: to_f64(up_return),
            violated,
        };
        if !(down_return < rate_step) {
            return Err(bounds("D < r_f*dt"));
        }
        if !(rate_step < up_return) {
            return Err(bounds("r_f*dt < U"));
        }
        if !(down_return < T::zero() && T::zero() < up_return) {
            return Err(bounds("D < 0 < U"));
        }
        let down = convention.factor(down_return);
        if !(down > T::zero()) {
            return Err(Error::InvalidParameter {
                name: "d",
                value: to_f64(down),
                reason: "down factor must be positive",
            });
        }
        Ok(Self {
            up_return,
            down_return,
            up: convention.factor(up_return),
            down,
            growth: convention.factor(rate_step),
            gamma,
            convention,
            asset_drift: None,
        })
    }

    /// Attaches the price-process drift carried along as metadata.
    pub fn with_asset_drift(mut self, drift: T) -> Self {
        self.asset_drift = Some(drift);
        self
    }

    /// Per-step riskless rate `r_f dt` recovered from `R_f`.
    pub fn rate_step(&self) -> T {
        match self.convention {
            Convention::Arithmetic => self.growth - T::one(),
            Convention::Log => self.growth.ln(),
        }
    }

    fn up_minus_one(&self) -> T {
        self.convention.factor_minus_one(self.up_return)
    }

    fn down_minus_one(&self) -> T {
        self.convention.factor_minus_one(self.down_return)
    }

    fn growth_minus_one(&self) -> T {
        self.growth - T::one()
    }

    /// `u^gamma - 1`.
    fn up_pow_minus_one(&self) -> T {
        (self.gamma * self.convention.log_factor(self.up_return)).exp_m1()
    }

    /// `d^gamma - 1`.
    fn down_pow_minus_one(&self) -> T {
        (self.gamma * self.convention.log_factor(self.down_return)).exp_m1()
    }

    pub fn up_pow_gamma(&self) -> T {
        self.up.powf(self.gamma)
    }

    pub fn down_pow_gamma(&self) -> T {
        self.down.powf(self.gamma)
    }

    /// Denominator `D1 = (u - 1) d^gamma - (u - d) + (1 - d) u^gamma`,
    /// rewritten as `(u - 1)(d^gamma - 1) + (1 - d)(u^gamma - 1)`.
    pub fn denominator(&self) -> T {
        let um1 = self.up_minus_one();
        let dm1 = self.down_minus_one();
        um1 * self.down_pow_minus_one() - dm1 * self.up_pow_minus_one()
    }
}

/// One-step risk-neutral probabilities and the matching state-price deflators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskNeutralProbs<T> {
    pub q_up: T,
    pub q_mid: T,
    pub q_down: T,
    pub pi_up: T,
    pub pi_mid: T,
    pub pi_down: T,
}

impl<T: Scalar> RiskNeutralProbs<T> {
    /// Wraps probabilities and derives deflators `pi_x = q_x / R_f`.
    pub fn from_probs(q_up: T, q_mid: T, q_down: T, growth: T) -> Self {
        Self {
            q_up,
            q_mid,
            q_down,
            pi_up: q_up / growth,
            pi_mid: q_mid / growth,
            pi_down: q_down / growth,
        }
    }
}

/// Closed-form risk-neutral probabilities for one step.
///
/// `q_m` is taken as `1 - q_u - q_d`; [`q_mid_closed_form`] evaluates the
/// direct expression for cross-checking.
pub fn risk_neutral_probs<T: Scalar>(f: &StepFactors<T>) -> Result<RiskNeutralProbs<T>> {
    let d1 = f.denominator();
    if !(d1.abs() >= lit(1e-14)) {
        return Err(Error::SingularDenominator { value: to_f64(d1) });
    }
    let rm1 = f.growth_minus_one();
    // d^gamma - d = (d^gamma - 1) + (1 - d); u - u^gamma = (u - 1) - (u^gamma - 1)
    let q_up = (f.down_pow_minus_one() - f.down_minus_one()) * rm1 / d1;
    let q_down = (f.up_minus_one() - f.up_pow_minus_one()) * rm1 / d1;
    let q_mid = T::one() - q_up - q_down;

    debug_assert!({
        let printed = q_mid_closed_form(f);
        !printed.is_finite() || (printed - q_mid).abs() <= lit::<T>(1e-6).max(T::epsilon().sqrt()) * (T::one() + q_mid.abs())
    });

    let eps = T::probability_slack();
    let clamp = |q: T| -> Option<T> {
        if q.is_nan() || q < -eps || q > T::one() + eps {
            None
        } else {
            Some(q.max(T::zero()).min(T::one()))
        }
    };
    match (clamp(q_up), clamp(q_mid), clamp(q_down)) {
        (Some(u), Some(m), Some(d)) => Ok(RiskNeutralProbs::from_probs(u, m, d, f.growth)),
        _ => Err(Error::InvalidRiskNeutralMeasure {
            step: None,
            q_up: to_f64(q_up),
            q_mid: to_f64(q_mid),
            q_down: to_f64(q_down),
        }),
    }
}

/// Direct closed form
/// `q_m = [u^g (R - d) + R (d - u) + d^g (u - R)] / D1`.
pub fn q_mid_closed_form<T: Scalar>(f: &StepFactors<T>) -> T {
    let (u, d, r) = (f.up, f.down, f.growth);
    let (ug, dg) = (f.up_pow_gamma(), f.down_pow_gamma());
    let raw_d1 = (u - T::one()) * dg - (u - d) + (T::one() - d) * ug;
    (ug * (r - d) + r * (d - u) + dg * (u - r)) / raw_d1
}

/// Residuals of the deflator identities for bond, stock and perpetual
/// derivative: `|sum(pi) R_f - 1|`, `|pi_u u + pi_m + pi_d d - 1|`,
/// `|pi_u u^g + pi_m + pi_d d^g - 1|`.
pub fn deflator_identities<T: Scalar>(f: &StepFactors<T>, q: &RiskNeutralProbs<T>) -> [T; 3] {
    let bond = (q.pi_up + q.pi_mid + q.pi_down) * f.growth - T::one();
    let stock = q.pi_up * f.up + q.pi_mid + q.pi_down * f.down - T::one();
    let deriv =
        q.pi_up * f.up_pow_gamma() + q.pi_mid + q.pi_down * f.down_pow_gamma() - T::one();
    [bond.abs(), stock.abs(), deriv.abs()]
}

/// Spot price plus per-step factors of a recombining lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec<T> {
    pub spot: T,
    pub dt: T,
    steps: Vec<StepFactors<T>>,
}

impl<T: Scalar> LatticeSpec<T> {
    /// Per-step rates and exponents may vary; the price factors `u`, `d` must
    /// not, otherwise the tree does not recombine.
    pub fn new(spot: T, dt: T, steps: Vec<StepFactors<T>>) -> Result<Self> {
        if !(spot > T::zero()) || !spot.is_finite() {
            return Err(Error::InvalidParameter {
                name: "S0",
                value: to_f64(spot),
                reason: "spot must be positive and finite",
            });
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: to_f64(dt),
                reason: "step length must be positive and finite",
            });
        }
        let first = steps.first().ok_or(Error::InvalidParameter {
            name: "N",
            value: 0.0,
            reason: "lattice needs at least one step",
        })?;
        let tol = lit::<T>(1e-12);
        let same = |a: T, b: T| (a - b).abs() <= tol * a.abs().max(b.abs());
        for (k, s) in steps.iter().enumerate().skip(1) {
            if s.convention != first.convention
                || !same(s.up, first.up)
                || !same(s.down, first.down)
            {
                return Err(Error::NonRecombining { step: k });
            }
        }
        Ok(Self { spot, dt, steps })
    }

    /// Lattice repeating one set of factors `n` times.
    pub fn constant(spot: T, dt: T, factors: StepFactors<T>, n: usize) -> Result<Self> {
        Self::new(spot, dt, vec![factors; n])
    }

    pub fn steps(&self) -> &[StepFactors<T>] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Stock price after `ups` up moves and `downs` down moves.
    pub fn price_at(&self, ups: usize, downs: usize) -> T {
        let f = &self.steps[0];
        self.spot * f.up.powi(ups as i32) * f.down.powi(downs as i32)
    }

    /// Bond price at step `k` with `B_0 = 1`.
    pub fn bond_at(&self, k: usize) -> T {
        self.steps[..k].iter().fold(T::one(), |b, s| b * s.growth)
    }

    /// Risk-neutral probabilities for every step, tagging failures with the
    /// offending step index.
    pub fn risk_neutral(&self) -> Result<Vec<RiskNeutralProbs<T>>> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, f)| {
                risk_neutral_probs(f).map_err(|e| match e {
                    Error::InvalidRiskNeutralMeasure {
                        q_up, q_mid, q_down, ..
                    } => Error::InvalidRiskNeutralMeasure {
                        step: Some(k),
                        q_up,
                        q_mid,
                        q_down,
                    },
                    other => other,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// European claim on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec<T> {
    pub kind: OptionKind,
    pub strike: T,
    pub maturity_steps: usize,
}

impl<T: Scalar> OptionSpec<T> {
    pub fn call(strike: T, maturity_steps: usize) -> Self {
        Self {
            kind: OptionKind::Call,
            strike,
            maturity_steps,
        }
    }

    pub fn put(strike: T, maturity_steps: usize) -> Self {
        Self {
            kind: OptionKind::Put,
            strike,
            maturity_steps,
        }
    }

    pub fn payoff(&self, price: T) -> T {
        match self.kind {
            OptionKind::Call => (price - self.strike).max(T::zero()),
            OptionKind::Put => (self.strike - price).max(T::zero()),
        }
    }

    fn validate(&self, spec: &LatticeSpec<T>) -> Result<()> {
        if !(self.strike >= T::zero()) || !self.strike.is_finite() {
            return Err(Error::InvalidParameter {
                name: "K",
                value: to_f64(self.strike),
                reason: "strike must be non-negative and finite",
            });
        }
        if self.maturity_steps > spec.len() {
            return Err(Error::InvalidParameter {
                name: "maturity_steps",
                value: self.maturity_steps as f64,
                reason: "maturity exceeds the number of lattice steps",
            });
        }
        Ok(())
    }
}

/// Number of nodes in time slice `k`.
///
/// A node is identified by its move counts `(ups, downs)` with
/// `ups + downs <= k`; the price depends only on the counts, not on the
/// order of moves. When `u d = 1` nodes with equal `ups - downs` share a
/// price, but the layout does not rely on it.
pub fn slice_len(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Offset of the first node with `ups` up moves in slice `k`.
fn row_offset(k: usize, ups: usize) -> usize {
    ups * (k + 1) - ups * ups.saturating_sub(1) / 2
}

/// Flat index of node `(ups, downs)` in slice `k`; nodes are ordered by
/// `ups`, then `downs`.
pub fn node_index(k: usize, ups: usize, downs: usize) -> usize {
    debug_assert!(ups + downs <= k);
    row_offset(k, ups) + downs
}

/// Move counts of every node of slice `k`, in storage order.
pub fn slice_nodes(k: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=k).flat_map(move |a| (0..=k - a).map(move |b| (a, b)))
}

fn terminal_values<T: Scalar>(spec: &LatticeSpec<T>, opt: &OptionSpec<T>) -> Vec<T> {
    let f = &spec.steps[0];
    let n = opt.maturity_steps;
    let mut out = Vec::with_capacity(slice_len(n));
    let mut up_pow = spec.spot;
    for a in 0..=n {
        let mut price = up_pow;
        for _ in 0..=n - a {
            out.push(opt.payoff(price));
            price = price * f.down;
        }
        up_pow = up_pow * f.up;
    }
    out
}

/// One backward-induction step from slice `k + 1` to slice `k`.
fn roll_back<T: Scalar>(next: &[T], k: usize, q: &RiskNeutralProbs<T>, growth: T) -> Vec<T> {
    let mut out = Vec::with_capacity(slice_len(k));
    for a in 0..=k {
        let row = &next[row_offset(k + 1, a)..];
        let up_row = &next[row_offset(k + 1, a + 1)..];
        for b in 0..=k - a {
            out.push((q.q_up * up_row[b] + q.q_mid * row[b] + q.q_down * row[b + 1]) / growth);
        }
    }
    out
}

/// Price of a European claim by backward induction.
pub fn price_european<T: Scalar>(spec: &LatticeSpec<T>, opt: &OptionSpec<T>) -> Result<T> {
    opt.validate(spec)?;
    let probs = spec.risk_neutral()?;
    let mut values = terminal_values(spec, opt);
    for k in (0..opt.maturity_steps).rev() {
        values = roll_back(&values, k, &probs[k], spec.steps[k].growth);
    }
    Ok(values[0])
}

/// All option-value slices from `k = 0` to maturity, laid out as described
/// at [`slice_len`].
pub fn value_slices<T: Scalar>(spec: &LatticeSpec<T>, opt: &OptionSpec<T>) -> Result<Vec<Vec<T>>> {
    opt.validate(spec)?;
    let probs = spec.risk_neutral()?;
    let mut slices = vec![terminal_values(spec, opt)];
    for k in (0..opt.maturity_steps).rev() {
        let next = roll_back(slices.last().unwrap(), k, &probs[k], spec.steps[k].growth);
        slices.push(next);
    }
    slices.reverse();
    Ok(slices)
}

/// Holdings of stock, bond and perpetual derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioWeights<T> {
    pub stock: T,
    pub bond: T,
    pub derivative: T,
}

impl<T: Scalar> PortfolioWeights<T> {
    /// Portfolio value `a S + b B + c S^gamma` at a node.
    pub fn value(&self, stock_price: T, bond_price: T, gamma: T) -> T {
        self.stock * stock_price + self.bond * bond_price + self.derivative * stock_price.powf(gamma)
    }
}

/// Option values at the three successor nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Successors<T> {
    pub up: T,
    pub mid: T,
    pub down: T,
}

/// Solves the one-step replication system for the portfolio that matches
/// `next` in all three successor states.
pub fn solve_replication<T: Scalar>(
    stock_price: T,
    bond_price: T,
    next: Successors<T>,
    f: &StepFactors<T>,
) -> Result<PortfolioWeights<T>> {
    let r = f.growth;
    // unknowns: a S, b B, c S^gamma
    let a = [
        [f.up, r, f.up_pow_gamma()],
        [T::one(), r, T::one()],
        [f.down, r, f.down_pow_gamma()],
    ];
    let x = solve3(a, [next.up, next.mid, next.down])?;
    Ok(PortfolioWeights {
        stock: x[0] / stock_price,
        bond: x[1] / bond_price,
        derivative: x[2] / stock_price.powf(f.gamma),
    })
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3<T: Scalar>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Result<[T; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let scale: T = a
        .iter()
        .map(|row| row.iter().map(|v| *v * *v).sum::<T>().sqrt())
        .fold(T::one(), |acc, n| acc * n);
    if !(det.abs() > lit::<T>(1e-14) * scale) {
        return Err(Error::SingularReplication {
            determinant: to_f64(det),
        });
    }
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (k, x) in a[row].iter_mut().enumerate().skip(col) {
                *x = *x - m * pivot_row[k];
            }
            b[row] = b[row] - m * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let tail: T = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_factors() -> StepFactors<f64> {
        StepFactors::new(Convention::Arithmetic, 0.0215, -0.0212, 5.83e-4, -2.594).unwrap()
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_exponent(0.5, 1.0).unwrap(), -1.0);
        assert_eq!(gamma_exponent(0.0, 0.02).unwrap(), 0.0);
        let g = gamma_exponent(5.83e-4, 0.0212).unwrap();
        assert_abs_diff_eq!(g, -2.0 * 5.83e-4 / (0.0212 * 0.0212), epsilon = 1e-15);
        assert_abs_diff_eq!(g, -2.594_339_622_641_509, epsilon = 1e-12);
        assert_eq!(gamma_exponent(0.01, 0.0), Err(Error::DegenerateVolatility));
    }

    #[test]
    fn factors_follow_convention() {
        let a = StepFactors::new(Convention::Arithmetic, 0.01, -0.01, 0.0, -1.0).unwrap();
        assert_eq!((a.up, a.down, a.growth), (1.01, 0.99, 1.0));
        let l = StepFactors::new(Convention::Log, 0.01, -0.01, 0.0, -1.0).unwrap();
        assert_eq!((l.up, l.down, l.growth), (0.01f64.exp(), (-0.01f64).exp(), 1.0));
        assert!(matches!(
            StepFactors::new(Convention::Arithmetic, 0.01, 0.001, 0.0005, -1.0),
            Err(Error::ArbitrageBounds { .. })
        ));
        assert!(matches!(
            StepFactors::new(Convention::Arithmetic, 0.5, -1.2, 0.0, -1.0),
            Err(Error::InvalidParameter { name: "d", .. })
        ));
    }

    #[test]
    fn zero_rate_puts_all_mass_on_middle() {
        let f = StepFactors::new(Convention::Arithmetic, 0.02, -0.02, 0.0, -1.5).unwrap();
        let q = risk_neutral_probs(&f).unwrap();
        assert_eq!((q.q_up, q.q_mid, q.q_down), (0.0, 1.0, 0.0));
        assert_eq!(deflator_identities(&f, &q), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_gamma_is_singular() {
        let f = StepFactors::new(Convention::Arithmetic, 0.02, -0.02, 0.0, 0.0).unwrap();
        assert!(matches!(risk_neutral_probs(&f), Err(Error::SingularDenominator { .. })));
    }

    #[test]
    fn closed_form_middle_agrees() {
        let f = sample_factors();
        let q = risk_neutral_probs(&f).unwrap();
        assert_abs_diff_eq!(q.q_mid, q_mid_closed_form(&f), epsilon = 1e-9);
        let [b, s, d] = deflator_identities(&f, &q);
        assert!(b < 1e-14 && s < 1e-12 && d < 1e-12);
    }

    #[test]
    fn perturbed_probabilities_show_up_in_residual() {
        let f = sample_factors();
        let q = risk_neutral_probs(&f).unwrap();
        let bumped = RiskNeutralProbs::from_probs(q.q_up + 1e-3, q.q_mid, q.q_down, f.growth);
        let [b, _, _] = deflator_identities(&f, &bumped);
        assert_abs_diff_eq!(b, 1e-3, epsilon = 1e-12);
    }

    #[test]
    fn arbitrage_inconsistent_rate_rejected() {
        // large rate relative to the spread leaves q_m negative
        let f = StepFactors::new(Convention::Arithmetic, 0.01, -0.01, 0.009, -3.0).unwrap();
        assert!(matches!(
            risk_neutral_probs(&f),
            Err(Error::InvalidRiskNeutralMeasure { .. })
        ));
        let spec = LatticeSpec::constant(100.0, 1.0, f, 3).unwrap();
        match price_european(&spec, &OptionSpec::call(100.0, 3)) {
            Err(Error::InvalidRiskNeutralMeasure { step, .. }) => assert_eq!(step, Some(0)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_strike_call_is_spot() {
        let spec = LatticeSpec::constant(192.94, 1.0, sample_factors(), 30).unwrap();
        let p = price_european(&spec, &OptionSpec::call(0.0, 30)).unwrap();
        assert_abs_diff_eq!(p, 192.94, epsilon = 1e-10);
    }

    #[test]
    fn single_step_by_hand() {
        let f = sample_factors();
        let q = risk_neutral_probs(&f).unwrap();
        let spec = LatticeSpec::constant(100.0, 1.0, f, 1).unwrap();
        for k in [95.0, 100.0, 101.0] {
            let hand = ((100.0 * f.up - k).max(0.0) * q.q_up
                + (100.0 - k).max(0.0) * q.q_mid
                + (100.0 * f.down - k).max(0.0) * q.q_down)
                / f.growth;
            let p = price_european(&spec, &OptionSpec::call(k, 1)).unwrap();
            assert_abs_diff_eq!(p, hand, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_recombining_factors_rejected() {
        let a = sample_factors();
        let b = StepFactors::new(Convention::Arithmetic, 0.03, -0.0212, 5.83e-4, -2.594).unwrap();
        assert_eq!(
            LatticeSpec::new(100.0, 1.0, vec![a, b]),
            Err(Error::NonRecombining { step: 1 })
        );
        // varying rate with fixed factors is fine
        let c = StepFactors::new(Convention::Arithmetic, 0.0215, -0.0212, 1e-4, -0.4).unwrap();
        assert!(LatticeSpec::new(100.0, 1.0, vec![a, c]).is_ok());
    }

    #[test]
    fn replication_of_bond_and_stock() {
        let f = sample_factors();
        let (s, b) = (120.0, 1.3);
        let flat = solve_replication(s, b, Successors { up: 7.0, mid: 7.0, down: 7.0 }, &f).unwrap();
        assert_abs_diff_eq!(flat.stock, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(flat.derivative * s.powf(f.gamma), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(flat.bond * b * f.growth, 7.0, epsilon = 1e-10);

        let next = Successors { up: s * f.up, mid: s, down: s * f.down };
        let w = solve_replication(s, b, next, &f).unwrap();
        assert_abs_diff_eq!(w.stock, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.bond, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.derivative * s.powf(f.gamma), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn replication_matches_single_step_price() {
        let f = sample_factors();
        let spec = LatticeSpec::constant(100.0, 1.0, f, 1).unwrap();
        let opt = OptionSpec::call(100.5, 1);
        let next = Successors {
            up: opt.payoff(100.0 * f.up),
            mid: opt.payoff(100.0),
            down: opt.payoff(100.0 * f.down),
        };
        let w = solve_replication(100.0, 1.0, next, &f).unwrap();
        let p = price_european(&spec, &opt).unwrap();
        assert_abs_diff_eq!(w.value(100.0, 1.0, f.gamma), p, epsilon = 1e-10);
    }

    #[test]
    fn singular_replication_detected() {
        let f = StepFactors::new(Convention::Arithmetic, 0.02, -0.02, 0.0, 1.0).unwrap();
        // gamma = 1 makes the derivative column equal to the stock column
        let err = solve_replication(1.0, 1.0, Successors { up: 1.0, mid: 0.0, down: 0.0 }, &f);
        assert!(matches!(err, Err(Error::SingularReplication { .. })));
    }

    #[test]
    fn put_and_call_monotone_in_strike() {
        let spec = LatticeSpec::constant(100.0, 1.0, sample_factors(), 20).unwrap();
        let mut last_call = f64::INFINITY;
        let mut last_put = f64::NEG_INFINITY;
        for i in 0..60 {
            let k = 70.0 + i as f64;
            let c = price_european(&spec, &OptionSpec::call(k, 20)).unwrap();
            let p = price_european(&spec, &OptionSpec::put(k, 20)).unwrap();
            assert!(c >= 0.0 && p >= 0.0);
            assert!(c <= last_call + 1e-12 && p >= last_put - 1e-12);
            last_call = c;
            last_put = p;
        }
    }

    #[test]
    fn works_in_single_precision() {
        let f = StepFactors::<f32>::new(Convention::Log, 0.02, -0.02, 1e-3, -10.0).unwrap();
        let q = risk_neutral_probs(&f).unwrap();
        assert!((q.q_up + q.q_mid + q.q_down - 1.0).abs() < 1e-6);
        let spec = LatticeSpec::constant(50.0f32, 1.0, f, 10).unwrap();
        let p = price_european(&spec, &OptionSpec::call(0.0, 10)).unwrap();
        assert!((p - 50.0).abs() < 1e-3);
    }
}
