//! Student t distribution via the regularized incomplete beta function.

use crate::scalar::{from_usize, lit, Scalar};

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let half = lit::<T>(0.5);
    if x < half {
        // reflection: Γ(x) Γ(1 - x) = π / sin(π x)
        let pi = lit::<T>(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut acc = lit::<T>(LANCZOS[0]);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + lit::<T>(*c) / (x + from_usize(i));
    }
    let t = x + lit(LANCZOS_G) + half;
    lit::<T>(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// Continued fraction (modified Lentz) with relative tolerance `1e-12`,
/// using the symmetry `I_x(a, b) = 1 - I_{1-x}(b, a)` where it converges
/// faster.
pub fn inc_beta<T: Scalar>(a: T, b: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (T::one() - x).ln();
    let front = ln_front.exp();
    let switch = (a + T::one()) / (a + b + lit(2.0));
    if x < switch {
        front * beta_cf(a, b, x) / a
    } else {
        T::one() - front * beta_cf(b, a, T::one() - x) / b
    }
}

fn beta_cf<T: Scalar>(a: T, b: T, x: T) -> T {
    let tiny = lit::<T>(1e-300).max(T::min_positive_value());
    let tol = lit::<T>(1e-12).max(T::epsilon() * lit(4.0));
    let one = T::one();
    let two = lit::<T>(2.0);
    let guard = |v: T| if v.abs() < tiny { tiny } else { v };

    let mut c = one;
    let mut d = one / guard(one - (a + b) * x / (a + one));
    let mut h = d;
    for m in 1..=10_000usize {
        let m = from_usize::<T>(m);
        let m2 = two * m;
        let even = m * (b - m) * x / ((a + m2 - one) * (a + m2));
        d = one / guard(one + even * d);
        c = guard(one + even / c);
        h = h * d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + one));
        d = one / guard(one + odd * d);
        c = guard(one + odd / c);
        let delta = d * c;
        h = h * delta;
        if (delta - one).abs() < tol {
            break;
        }
    }
    h
}

/// `P(T_dof > t)`.
pub fn student_t_sf<T: Scalar>(t: T, dof: T) -> T {
    if t.is_nan() {
        return t;
    }
    if t.is_infinite() {
        return if t > T::zero() { T::zero() } else { T::one() };
    }
    let half = lit::<T>(0.5);
    let x = dof / (dof + t * t);
    let tail = half * inc_beta(half * dof, half, x);
    if t > T::zero() {
        tail
    } else {
        T::one() - tail
    }
}

/// `P(T_dof <= t)`.
pub fn student_t_cdf<T: Scalar>(t: T, dof: T) -> T {
    student_t_sf(-t, dof)
}

/// Direction of the alternative hypothesis of a one-sided test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    /// `H_a: mu > 0`.
    Greater,
    /// `H_a: mu < 0`.
    Less,
}

/// Sample mean and unbiased standard deviation.
pub fn mean_sd<T: Scalar>(xs: &[T]) -> (T, T) {
    let n = from_usize::<T>(xs.len());
    let mean = xs.iter().copied().sum::<T>() / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - T::one())).sqrt())
}

/// Outcome of a one-sample t-test of `H0: mu = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest<T> {
    pub mean: T,
    pub sd: T,
    pub n: usize,
    /// `None` when the statistic is undefined because the sample variance is 0.
    pub p_value: Option<T>,
    pub reject: bool,
}

/// One-sided one-sample t-test with `n - 1` degrees of freedom.
///
/// Zero-variance samples: rejected iff the mean is non-zero and lies on the
/// alternative's side.
pub fn one_sample_t_test<T: Scalar>(xs: &[T], tail: Tail, alpha: T) -> TTest<T> {
    assert!(xs.len() >= 2, "t-test needs at least two observations");
    let (mean, sd) = mean_sd(xs);
    let n = xs.len();
    if sd == T::zero() {
        let reject = match tail {
            Tail::Greater => mean > T::zero(),
            Tail::Less => mean < T::zero(),
        };
        return TTest { mean, sd, n, p_value: None, reject };
    }
    let t = mean / (sd / from_usize::<T>(n).sqrt());
    let dof = from_usize::<T>(n - 1);
    let p = match tail {
        Tail::Greater => student_t_sf(t, dof),
        Tail::Less => student_t_cdf(t, dof),
    };
    TTest {
        mean,
        sd,
        n,
        p_value: Some(p),
        reject: p < alpha,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(ln_gamma(1.0f64), 0.0, epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(5.0f64), 24f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(ln_gamma(0.5f64), std::f64::consts::PI.sqrt().ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_gamma(100.5f64), 361.435_540_467_777_57, max_relative = 1e-13);
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 - (1 - x)^b
        for &x in &[0.01f64, 0.3, 0.5, 0.77, 0.99] {
            assert_relative_eq!(inc_beta(1.0, 1.0, x), x, max_relative = 1e-12);
            assert_relative_eq!(inc_beta(3.5, 1.0, x), x.powf(3.5), max_relative = 1e-12);
            assert_relative_eq!(inc_beta(1.0, 2.5, x), 1.0 - (1.0 - x).powf(2.5), max_relative = 1e-12);
        }
    }

    #[test]
    fn t_quantiles_from_tables() {
        // upper-tail critical values
        let cases = [(1.0, 6.313_751_514_800_938, 0.05), (5.0, 3.364_929_998_907_275_6, 0.01), (30.0, 3.385_184_866_818_216_5, 0.001)];
        for (dof, t, p) in cases {
            assert_relative_eq!(student_t_sf(t, dof), p, max_relative = 1e-9);
        }
        assert_relative_eq!(student_t_cdf(0.0f64, 7.0), 0.5, epsilon = 1e-15);
        // Cauchy: F(t) = 1/2 + atan(t)/π
        assert_relative_eq!(student_t_cdf(-2.0f64, 1.0), 0.5 + (-2.0f64).atan() / std::f64::consts::PI, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_samples() {
        let zeros = [0.0; 4];
        assert!(!one_sample_t_test(&zeros, Tail::Greater, 0.05).reject);
        assert!(!one_sample_t_test(&zeros, Tail::Less, 0.05).reject);
        let flat = [1e-4; 3];
        assert!(one_sample_t_test(&flat, Tail::Greater, 0.05).reject);
        assert!(!one_sample_t_test(&flat, Tail::Less, 0.05).reject);
    }
}
