//! Bounded scalar minimization: golden-section search with parabolic steps
//! (Brent), restarted over equal sub-intervals.

use crate::scalar::{from_usize, lit, Scalar};

const SCAN_POINTS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerSettings<T> {
    /// Absolute tolerance on the argument.
    pub x_tol: T,
    pub max_iter: usize,
    /// Number of equal sub-intervals searched independently.
    pub seeds: usize,
}

impl<T: Scalar> Default for MinimizerSettings<T> {
    fn default() -> Self {
        Self {
            x_tol: lit(1e-8),
            max_iter: 200,
            seeds: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: T,
    pub evaluations: usize,
}

/// Brent's method on `[lo, hi]`, converging to within
/// `sqrt(eps) |x| + x_tol` of a local minimum.
///
/// Non-finite objective values are allowed (treated as +inf); parabolic
/// steps are skipped whenever one of the interpolation points is non-finite.
/// If the first golden-section point is infeasible the interval is first
/// scanned on a coarse grid and narrowed around the best finite sample.
pub fn brent<T, F>(mut f: F, lo: T, hi: T, x_tol: T, max_iter: usize) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let golden = lit::<T>(0.381_966_011_250_105_1);
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let sqrt_eps = T::epsilon().sqrt();
    let sanitize = |v: T| if v.is_nan() { T::infinity() } else { v };

    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x = a + golden * (b - a);
    let mut fx = sanitize(f(x));
    let mut evaluations = 1;
    if !fx.is_finite() {
        let width = (b - a) / from_usize(SCAN_POINTS - 1);
        let mut best: Option<(usize, T, T)> = None;
        for i in 0..SCAN_POINTS {
            let xi = if i + 1 == SCAN_POINTS { b } else { a + width * from_usize(i) };
            let fi = sanitize(f(xi));
            evaluations += 1;
            if fi.is_finite() && best.is_none_or(|(_, _, fb)| fi < fb) {
                best = Some((i, xi, fi));
            }
        }
        let Some((i, xi, fi)) = best else {
            return Minimum { x, fx, evaluations };
        };
        let (lo0, hi0) = (a, b);
        a = if i == 0 { lo0 } else { lo0 + width * from_usize(i - 1) };
        b = if i + 1 >= SCAN_POINTS - 1 { hi0 } else { lo0 + width * from_usize(i + 1) };
        x = xi;
        fx = fi;
    }
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d = T::zero();
    let mut e = T::zero();

    for _ in 0..max_iter {
        let mid = half * (a + b);
        let tol1 = sqrt_eps * x.abs() + x_tol / lit(3.0);
        let tol2 = two * tol1;
        if (x - mid).abs() <= tol2 - half * (b - a) {
            break;
        }
        let mut golden_step = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = two * (q - r);
            if q > T::zero() {
                p = -p;
            }
            q = q.abs();
            let e_prev = e;
            if p.abs() < (half * q * e_prev).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < mid { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x < mid { b - x } else { a - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else if d > T::zero() {
            x + tol1
        } else {
            x - tol1
        };
        let fu = sanitize(f(u));
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, fx, evaluations }
}

/// Runs [`brent`] on each of `settings.seeds` equal sub-intervals of
/// `[lo, hi]` and returns every local result, ordered by interval.
pub fn multistart<T, F>(mut f: F, lo: T, hi: T, settings: &MinimizerSettings<T>) -> Vec<Minimum<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let seeds = settings.seeds.max(1);
    let width = (hi - lo) / from_usize(seeds);
    (0..seeds)
        .map(|i| {
            let a = lo + width * from_usize(i);
            let b = if i + 1 == seeds { hi } else { a + width };
            brent(&mut f, a, b, settings.x_tol, settings.max_iter)
        })
        .collect()
}

/// Evaluates `f` at the sorted sample points `xs`, then refines every
/// sampled local minimum with [`brent`] inside its neighbouring samples.
/// Infinite neighbours count as larger, so minima at the edge of a feasible
/// region are kept. Results are ordered by position.
pub fn grid_minima<T, F>(mut f: F, xs: &[T], x_tol: T, max_iter: usize) -> Vec<Minimum<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let fs: Vec<T> = xs
        .iter()
        .map(|&x| {
            let v = f(x);
            if v.is_nan() {
                T::infinity()
            } else {
                v
            }
        })
        .collect();
    let n = xs.len();
    let mut out = Vec::new();
    for i in 0..n {
        if !fs[i].is_finite() {
            continue;
        }
        let left_ok = i == 0 || fs[i] <= fs[i - 1];
        let right_ok = i + 1 == n || fs[i] <= fs[i + 1];
        if !(left_ok && right_ok) {
            continue;
        }
        let lo = xs[i.saturating_sub(1)];
        let hi = xs[(i + 1).min(n - 1)];
        let mut m = if lo < hi {
            brent(&mut f, lo, hi, x_tol, max_iter)
        } else {
            Minimum { x: xs[i], fx: fs[i], evaluations: 0 }
        };
        if !(m.fx <= fs[i]) {
            m = Minimum { x: xs[i], fx: fs[i], evaluations: m.evaluations };
        }
        m.evaluations += 1;
        out.push(m);
    }
    out
}

/// Roots of the signed function `g` bracketed by the sorted samples `xs`.
///
/// Non-finite values mark infeasible points. Each boundary between a
/// feasible and an infeasible sample is first located by bisection and the
/// last feasible point is added as a sample. Each sign change between
/// adjacent finite samples is then bisected down to `x_tol`. The endpoint
/// with the smaller `|g|` is reported, with `fx = g^2`.
pub fn bracket_roots<T, F>(mut g: F, xs: &[T], x_tol: T, max_iter: usize) -> Vec<Minimum<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let mut evaluations = 0usize;
    let mut eval = |x: T| {
        evaluations += 1;
        g(x)
    };
    let half = lit::<T>(0.5);
    let mut samples: Vec<(T, T)> = Vec::with_capacity(xs.len() + 8);
    for (i, &x) in xs.iter().enumerate() {
        let v = eval(x);
        if let Some(&(px, pv)) = samples.last() {
            if i > 0 && pv.is_finite() != v.is_finite() {
                let (mut ok, mut bad) = if pv.is_finite() { (px, x) } else { (x, px) };
                let mut ok_v = if pv.is_finite() { pv } else { v };
                for _ in 0..max_iter {
                    if (bad - ok).abs() <= x_tol {
                        break;
                    }
                    let mid = (ok + bad) * half;
                    let mv = eval(mid);
                    if mv.is_finite() {
                        ok = mid;
                        ok_v = mv;
                    } else {
                        bad = mid;
                    }
                }
                samples.push((ok, ok_v));
            }
        }
        samples.push((x, v));
    }
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite sample positions"));
    let mut out = Vec::new();
    for w in samples.windows(2) {
        let ((mut a, mut ga), (mut b, mut gb)) = (w[0], w[1]);
        if !(ga.is_finite() && gb.is_finite()) || ga.signum() == gb.signum() && ga != T::zero() && gb != T::zero() {
            continue;
        }
        for _ in 0..max_iter {
            if (b - a).abs() <= x_tol || ga == T::zero() || gb == T::zero() {
                break;
            }
            let mid = (a + b) * half;
            let gm = eval(mid);
            if !gm.is_finite() {
                break;
            }
            if gm.signum() == ga.signum() {
                a = mid;
                ga = gm;
            } else {
                b = mid;
                gb = gm;
            }
        }
        let (x, gx) = if ga.abs() <= gb.abs() { (a, ga) } else { (b, gb) };
        out.push(Minimum { x, fx: gx * gx, evaluations: 0 });
    }
    for m in &mut out {
        m.evaluations = evaluations;
    }
    out
}
