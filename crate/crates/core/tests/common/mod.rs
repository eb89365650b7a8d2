//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use tritree::{Convention, NaturalParams, OptionKind, StepFactors};

/// Deflators from the three one-step pricing equations, solved by Cramer's
/// rule: bond `sum(pi) R = 1`, stock `pi . (u, 1, d) = 1`, perpetual
/// `pi . (u^g, 1, d^g) = 1`. Returns `q = pi R`.
pub fn cramer_probs(u: f64, d: f64, r: f64, g: f64) -> [f64; 3] {
    let (ug, dg) = (u.powf(g), d.powf(g));
    let m = [[r, r, r], [u, 1.0, d], [ug, 1.0, dg]];
    let rhs = [1.0, 1.0, 1.0];
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let det = det3(m);
    let mut q = [0.0; 3];
    for (col, slot) in q.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *slot = det3(mc) / det * r;
    }
    q
}

/// Risk-neutral value by summing over all `3^n` paths.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_paths(spot: f64, u: f64, d: f64, q: [f64; 3], growth: f64, n: usize, kind: OptionKind, strike: f64) -> f64 {
    let mut total = 0.0;
    for code in 0..3usize.pow(n as u32) {
        let (mut c, mut price, mut prob) = (code, spot, 1.0);
        for _ in 0..n {
            match c % 3 {
                0 => {
                    price *= u;
                    prob *= q[0];
                }
                1 => prob *= q[1],
                _ => {
                    price *= d;
                    prob *= q[2];
                }
            }
            c /= 3;
        }
        let payoff = match kind {
            OptionKind::Call => (price - strike).max(0.0),
            OptionKind::Put => (strike - price).max(0.0),
        };
        total += prob * payoff;
    }
    total / growth.powi(n as i32)
}

/// Black-Scholes call on a non-dividend stock.
pub fn bsm_call(spot: f64, strike: f64, rate: f64, sigma: f64, t: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let sd = sigma * t.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * t) / sd;
    let d2 = d1 - sd;
    spot * n.cdf(d1) - strike * (-rate * t).exp() * n.cdf(d2)
}

/// Tail means over a sorted copy: the `ceil(beta L)` most extreme returns
/// on each side, extended by every value tied with the innermost one.
pub fn brute_cvar(values: &[f64], beta: f64) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let k = (beta * n as f64 - 1e-9).ceil() as usize;
    let mut end = k;
    while end < n && v[end] == v[k - 1] {
        end += 1;
    }
    let mut start = n - k;
    while start > 0 && v[start - 1] == v[n - k] {
        start -= 1;
    }
    let lower = v[..end].iter().sum::<f64>() / end as f64;
    let upper = v[start..].iter().sum::<f64>() / (n - start) as f64;
    (lower, upper)
}

/// One side of the reference scan: last accepted `j` (if any), the mean of
/// that sample, and whether the very first testable sample was rejected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefSide {
    pub j: Option<usize>,
    pub threshold: f64,
    pub not_significant: bool,
}

/// Straightforward re-implementation of the sequential t-test scan: for
/// `j = 1, 2, ...`, filter `{r : 0 <= s r <= j dp 1e-4}` from scratch and
/// test its mean with a Student t tail from `statrs`.
pub fn reference_scan(values: &[f64], positive: bool, alpha: f64, delta_bp: f64) -> RefSide {
    let sign = if positive { 1.0 } else { -1.0 };
    let population = values.iter().filter(|&&r| sign * r >= 0.0).count();
    let mut last: Option<(usize, f64)> = None;
    let mut j = 1usize;
    loop {
        let bound = 1e-4 * j as f64 * delta_bp;
        let sample: Vec<f64> = values.iter().copied().filter(|&r| sign * r >= 0.0 && sign * r <= bound).collect();
        if sample.len() >= 2 {
            let n = sample.len() as f64;
            let mean = sample.iter().sum::<f64>() / n;
            let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let reject = if var == 0.0 {
                sign * mean > 0.0
            } else {
                let t = mean / (var.sqrt() / n.sqrt());
                let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
                let p = if positive { 1.0 - dist.cdf(t) } else { dist.cdf(t) };
                p < alpha
            };
            if reject {
                return RefSide {
                    j: last.map(|l| l.0),
                    threshold: last.map_or(0.0, |l| l.1),
                    not_significant: last.is_none(),
                };
            }
            last = Some((j, mean));
        }
        if sample.len() == population {
            return RefSide {
                j: last.map(|l| l.0),
                threshold: last.map_or(0.0, |l| l.1),
                not_significant: false,
            };
        }
        j += 1;
    }
}

/// Draws step factors with a valid risk-neutral measure by rejection.
pub fn random_valid_factors<R: Rng>(rng: &mut R, convention: Convention) -> StepFactors<f64> {
    loop {
        let up: f64 = rng.gen_range(0.002..0.08);
        let down: f64 = -rng.gen_range(0.002..0.08);
        let rate = rng.gen_range(1e-6..0.5 * up.min(-down));
        let sigma = rng.gen_range(0.3..1.2) * up.max(-down);
        let gamma = -2.0 * rate / (sigma * sigma);
        if let Ok(f) = StepFactors::new(convention, up, down, rate, gamma) {
            if tritree::risk_neutral_probs(&f).is_ok() {
                return f;
            }
        }
    }
}

/// Random natural parameters with positive side branches and a
/// non-negative moment radicand.
pub fn random_feasible_params<R: Rng>(rng: &mut R) -> NaturalParams<f64> {
    loop {
        let p_mid = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..0.95) };
        let p_up = rng.gen_range(0.01..0.99) * (1.0 - p_mid);
        let p_down = 1.0 - p_mid - p_up;
        let dt = *[1.0, 1.0 / 252.0, 0.01].get(rng.gen_range(0..3)).unwrap();
        let mu = rng.gen_range(-0.5..0.5);
        let sigma = rng.gen_range(0.01..1.0);
        let p = NaturalParams {
            p_up,
            p_mid,
            p_down,
            mu,
            sigma,
            rate: 0.0,
            dt,
        };
        let m = mu * dt;
        if p_down > 1e-3 && (1.0 - p_mid) * sigma * sigma * dt - p_mid * m * m >= 0.0 {
            return p;
        }
    }
}
