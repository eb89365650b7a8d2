//! Implied parameter surfaces.
//!
//! Each quote is inverted for one model parameter by minimizing the squared
//! relative pricing error `((G_th(theta) - G_emp) / G_emp)^2` over a bounded
//! interval. The sparse implied values are then spread over a dense
//! (maturity, moneyness) grid with a Nadaraya-Watson smoother.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibrate::NaturalParams;
use crate::error::{Error, Result};
use crate::lattice::{price_european, Convention, LatticeSpec, OptionSpec};
use crate::optimize::{bracket_roots, grid_minima, multistart, MinimizerSettings};
use crate::scalar::{from_usize, lit, to_f64, Scalar};

/// Parameter being inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Sigma,
    Mu,
    #[serde(rename = "rf")]
    RiskFree,
    Pd,
    Pm,
    #[serde(rename = "pdext")]
    PdExt,
    #[serde(rename = "pmext")]
    PmExt,
}

impl ParamKind {
    pub const ALL: [ParamKind; 7] = [
        ParamKind::Sigma,
        ParamKind::Mu,
        ParamKind::RiskFree,
        ParamKind::Pd,
        ParamKind::Pm,
        ParamKind::PdExt,
        ParamKind::PmExt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::Sigma => "sigma",
            ParamKind::Mu => "mu",
            ParamKind::RiskFree => "rf",
            ParamKind::Pd => "pd",
            ParamKind::Pm => "pm",
            ParamKind::PdExt => "pdext",
            ParamKind::PmExt => "pmext",
        }
    }

    pub fn is_probability(self) -> bool {
        !matches!(self, ParamKind::Sigma | ParamKind::Mu | ParamKind::RiskFree)
    }

    pub fn is_extreme(self) -> bool {
        matches!(self, ParamKind::PdExt | ParamKind::PmExt)
    }

    /// Current value of this parameter in `p`.
    pub fn get<T: Scalar>(self, p: &NaturalParams<T>) -> T {
        match self {
            ParamKind::Sigma => p.sigma,
            ParamKind::Mu => p.mu,
            ParamKind::RiskFree => p.rate,
            ParamKind::Pd | ParamKind::PdExt => p.p_down,
            ParamKind::Pm | ParamKind::PmExt => p.p_mid,
        }
    }

    /// Copy of `p` with this parameter set to `value`. Probability
    /// parameters hold the other non-up probability fixed and let `p_u`
    /// absorb the change.
    pub fn apply<T: Scalar>(self, p: &NaturalParams<T>, value: T) -> NaturalParams<T> {
        let mut out = *p;
        match self {
            ParamKind::Sigma => out.sigma = value,
            ParamKind::Mu => out.mu = value,
            ParamKind::RiskFree => out.rate = value,
            ParamKind::Pd | ParamKind::PdExt => {
                out.p_down = value;
                out.p_up = (T::one() - p.p_mid - value).max(T::zero());
            }
            ParamKind::Pm | ParamKind::PmExt => {
                out.p_mid = value;
                out.p_up = (T::one() - p.p_down - value).max(T::zero());
            }
        }
        out
    }

    /// Default search box. Per-step boxes: sigma `[1e-4, 1]`, mu and r_f
    /// `[-0.05, 0.05]`; probabilities `[0, 1 - held]`.
    pub fn default_bounds<T: Scalar>(self, p: &NaturalParams<T>) -> Bounds<T> {
        let per_step = |lo: f64, hi: f64, scale: T| Bounds {
            lo: lit::<T>(lo) / scale,
            hi: lit::<T>(hi) / scale,
        };
        match self {
            ParamKind::Sigma => per_step(1e-4, 1.0, p.dt.sqrt()),
            ParamKind::Mu | ParamKind::RiskFree => per_step(-0.05, 0.05, p.dt),
            ParamKind::Pd | ParamKind::PdExt => Bounds {
                lo: T::zero(),
                hi: T::one() - p.p_mid,
            },
            ParamKind::Pm | ParamKind::PmExt => Bounds {
                lo: T::zero(),
                hi: T::one() - p.p_down,
            },
        }
    }
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "σ" | "sigma" => Ok(ParamKind::Sigma),
            "μ" | "mu" => Ok(ParamKind::Mu),
            "rf" | "r_f" => Ok(ParamKind::RiskFree),
            "pd" | "p_d" => Ok(ParamKind::Pd),
            "pm" | "p_m" => Ok(ParamKind::Pm),
            "pdext" => Ok(ParamKind::PdExt),
            "pmext" => Ok(ParamKind::PmExt),
            other => Err(format!(
                "unknown parameter `{other}` (expected sigma|mu|rf|pd|pm|pdext|pmext)"
            )),
        }
    }
}

/// Closed search interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Bounds<T> {
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// One market call quote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote<T> {
    /// Maturity in lattice steps (trading days).
    pub steps: usize,
    pub strike: T,
    pub price: T,
}

/// Call quotes on one underlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteSet<T> {
    pub spot: T,
    quotes: Vec<Quote<T>>,
}

impl<T: Scalar> QuoteSet<T> {
    pub fn new(spot: T, quotes: Vec<Quote<T>>) -> Result<Self> {
        if !(spot > T::zero()) || !spot.is_finite() {
            return Err(Error::InvalidParameter {
                name: "S0",
                value: to_f64(spot),
                reason: "spot must be positive and finite",
            });
        }
        let mut seen = HashSet::new();
        for q in &quotes {
            if !(q.price > T::zero()) || !q.price.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "price",
                    value: to_f64(q.price),
                    reason: "quote prices must be positive",
                });
            }
            if !(q.strike > T::zero()) || !q.strike.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "strike",
                    value: to_f64(q.strike),
                    reason: "strikes must be positive",
                });
            }
            if !seen.insert((q.steps, to_f64(q.strike).to_bits())) {
                return Err(Error::InvalidParameter {
                    name: "strike",
                    value: to_f64(q.strike),
                    reason: "duplicate (T, K) quote",
                });
            }
        }
        Ok(Self { spot, quotes })
    }

    pub fn quotes(&self) -> &[Quote<T>] {
        &self.quotes
    }

    pub fn moneyness(&self, q: &Quote<T>) -> T {
        q.strike / self.spot
    }
}

/// Spot and return convention used to price candidate parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingModel<T> {
    pub spot: T,
    pub convention: Convention,
}

impl<T: Scalar> PricingModel<T> {
    /// Call price on a constant-parameter lattice with `steps` steps.
    pub fn call_price(&self, params: &NaturalParams<T>, steps: usize, strike: T) -> Result<T> {
        params.validate()?;
        let factors = params.step_factors(self.convention)?;
        let spec = LatticeSpec::constant(self.spot, params.dt, factors, steps.max(1))?;
        price_european(&spec, &OptionSpec::call(strike, steps))
    }
}

/// Squared relative pricing error; `+inf` for parameter sets the lattice
/// rejects.
pub fn relative_objective<T: Scalar>(model: &PricingModel<T>, params: &NaturalParams<T>, quote: &Quote<T>) -> T {
    let rel = relative_residual(model, params, quote);
    if rel.is_nan() {
        T::infinity()
    } else {
        rel * rel
    }
}

/// Signed relative pricing error; NaN for parameter sets the lattice rejects.
pub fn relative_residual<T: Scalar>(model: &PricingModel<T>, params: &NaturalParams<T>, quote: &Quote<T>) -> T {
    match model.call_price(params, quote.steps, quote.strike) {
        Ok(g) => (g - quote.price) / quote.price,
        Err(_) => T::nan(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionSettings<T> {
    pub x_tol: T,
    pub max_iter: usize,
    pub seeds: usize,
    /// Number of equal intervals of the coarse scan whose local minima are
    /// each refined. The price is not monotone in every parameter, so one
    /// quote can have several exact fits.
    pub grid_intervals: usize,
    /// Extra intervals of a fine scan centred on the held value, spanning
    /// `local_span` of the search interval.
    pub local_intervals: usize,
    pub local_span: T,
    /// Optima with a larger objective are flagged.
    pub fit_tolerance: T,
    /// Local optima within this objective distance of the best one count as
    /// ties; the one closest to the held value wins.
    pub tie_tolerance: T,
    /// Quotes below this price are not inverted.
    pub price_floor: T,
}

impl<T: Scalar> Default for InversionSettings<T> {
    fn default() -> Self {
        Self {
            x_tol: lit(1e-8),
            max_iter: 200,
            seeds: 8,
            grid_intervals: 128,
            local_intervals: 256,
            local_span: lit(0.05),
            fit_tolerance: lit(1e-6),
            tie_tolerance: lit(1e-12),
            price_floor: lit(0.01),
        }
    }
}

impl<T: Scalar> InversionSettings<T> {
    fn minimizer(&self) -> MinimizerSettings<T> {
        MinimizerSettings {
            x_tol: self.x_tol,
            max_iter: self.max_iter,
            seeds: self.seeds,
        }
    }
}

/// Implied value at one (T, M) site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedPoint<T> {
    pub steps: usize,
    pub moneyness: T,
    pub value: T,
    pub objective: T,
    /// Objective exceeds the fit tolerance.
    pub flagged: bool,
}

/// Inverts one quote for `kind`, holding the rest of `fixed`.
///
/// Candidates come from three sources: sign changes of the relative
/// residual on a coarse scan of `bounds` plus a fine scan around the held
/// value, Brent refinement of every sampled local minimum, and the
/// equispaced multistart. When several candidates fit equally well the one
/// nearest the held value is returned. A single quote does not always pin
/// the parameter down, so that answer need not be the value that generated it.
pub fn invert_point<T: Scalar>(
    model: &PricingModel<T>,
    quote: &Quote<T>,
    kind: ParamKind,
    fixed: &NaturalParams<T>,
    bounds: Bounds<T>,
    settings: &InversionSettings<T>,
) -> Result<ImpliedPoint<T>> {
    if !(bounds.lo < bounds.hi) || !bounds.lo.is_finite() || !bounds.hi.is_finite() {
        return Err(Error::InvalidParameter {
            name: "bounds",
            value: to_f64(bounds.lo),
            reason: "search interval must be non-empty and finite",
        });
    }
    if kind == ParamKind::Sigma && !(bounds.lo > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "bounds",
            value: to_f64(bounds.lo),
            reason: "volatility lower bound must be positive",
        });
    }
    if kind.is_probability() && !(bounds.lo >= T::zero() && bounds.hi <= kind.default_bounds(fixed).hi) {
        return Err(Error::InvalidParameter {
            name: "bounds",
            value: to_f64(bounds.hi),
            reason: "probability bounds must lie in [0, 1 - held value]",
        });
    }
    if !(quote.price > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "price",
            value: to_f64(quote.price),
            reason: "quote price must be positive",
        });
    }
    let objective = |theta: T| relative_objective(model, &kind.apply(fixed, theta), quote);

    let reference = kind.get(fixed);
    let mut xs: Vec<T> = (0..=settings.grid_intervals.max(1))
        .map(|i| bounds.lo + (bounds.hi - bounds.lo) * from_usize(i) / from_usize(settings.grid_intervals.max(1)))
        .collect();
    if bounds.contains(reference) {
        xs.push(reference);
        let half = (bounds.hi - bounds.lo) * settings.local_span * lit(0.5);
        let n = settings.local_intervals;
        xs.extend(
            (0..=n)
                .map(|i| reference - half + half * lit(2.0) * from_usize(i) / from_usize(n.max(1)))
                .filter(|&x| bounds.contains(x)),
        );
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite scan points"));
        xs.dedup();
    }
    let residual = |theta: T| relative_residual(model, &kind.apply(fixed, theta), quote);
    let mut candidates = bracket_roots(residual, &xs, settings.x_tol, settings.max_iter);
    candidates.extend(grid_minima(objective, &xs, settings.x_tol, settings.max_iter));
    candidates.extend(multistart(objective, bounds.lo, bounds.hi, &settings.minimizer()));
    let best = candidates
        .iter()
        .map(|m| m.fx)
        .fold(T::infinity(), |a, b| a.min(b));
    if !best.is_finite() {
        return Err(Error::NoFeasiblePoint);
    }
    let chosen = candidates
        .iter()
        .filter(|m| m.fx <= best + settings.tie_tolerance)
        .min_by(|a, b| {
            let da = (a.x - reference).abs();
            let db = (b.x - reference).abs();
            da.partial_cmp(&db).unwrap()
        })
        .expect("best candidate passes its own filter");
    Ok(ImpliedPoint {
        steps: quote.steps,
        moneyness: quote.strike / model.spot,
        value: chosen.x,
        objective: chosen.fx,
        flagged: chosen.fx > settings.fit_tolerance,
    })
}

/// Inversion for the CVaR-extreme probabilities, searching `[0, 1 - held]`.
pub fn invert_extreme<T: Scalar>(
    model: &PricingModel<T>,
    quote: &Quote<T>,
    kind: ParamKind,
    fixed_extreme: &NaturalParams<T>,
    settings: &InversionSettings<T>,
) -> Result<ImpliedPoint<T>> {
    if !kind.is_extreme() {
        return Err(Error::InvalidParameter {
            name: "param",
            value: f64::NAN,
            reason: "extreme inversion expects pdext or pmext",
        });
    }
    let bounds = kind.default_bounds(fixed_extreme);
    invert_point(model, quote, kind, fixed_extreme, bounds, settings)
}

/// `p_u = 1 - held - implied`, clamped to `[0, 1]`.
pub fn complement_pu<T: Scalar>(held: T, implied: T) -> T {
    (T::one() - held - implied).max(T::zero()).min(T::one())
}

/// Kernel widths along maturity (steps) and moneyness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidth<T> {
    pub t: T,
    pub m: T,
}

impl<T: Scalar> Bandwidth<T> {
    /// Median gap between consecutive distinct site coordinates on each
    /// axis. An axis with a single distinct value falls back to 1 step or
    /// 0.05 moneyness.
    pub fn median_spacing(points: &[ImpliedPoint<T>]) -> Self {
        let ts: Vec<T> = points.iter().map(|p| from_usize(p.steps)).collect();
        let ms: Vec<T> = points.iter().map(|p| p.moneyness).collect();
        Self {
            t: median_gap(ts).unwrap_or_else(T::one),
            m: median_gap(ms).unwrap_or_else(|| lit(0.05)),
        }
    }
}

fn median_gap<T: Scalar>(mut xs: Vec<T>) -> Option<T> {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    let mut gaps: Vec<T> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = gaps.len();
    Some(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) / lit(2.0)
    })
}

/// Dense values over maturity rows and moneyness columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid<T> {
    pub t_axis: Vec<T>,
    pub m_axis: Vec<T>,
    /// Row-major, `t_axis.len()` rows of `m_axis.len()` values.
    pub values: Vec<T>,
    pub bandwidth: Bandwidth<T>,
}

impl<T: Scalar> SurfaceGrid<T> {
    pub fn new(t_axis: Vec<T>, m_axis: Vec<T>, values: Vec<T>, bandwidth: Bandwidth<T>) -> Result<Self> {
        if values.len() != t_axis.len() * m_axis.len() {
            return Err(Error::InvalidParameter {
                name: "values",
                value: values.len() as f64,
                reason: "value count must equal |T axis| * |M axis|",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "values",
                value: f64::NAN,
                reason: "surface values must be finite",
            });
        }
        Ok(Self { t_axis, m_axis, values, bandwidth })
    }

    pub fn get(&self, ti: usize, mi: usize) -> T {
        self.values[ti * self.m_axis.len() + mi]
    }
}

/// Smoothed grid plus the nodes where the bandwidth had to be widened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSurface<T> {
    pub grid: SurfaceGrid<T>,
    pub expanded_nodes: Vec<(usize, usize)>,
}

/// Nadaraya-Watson estimate with a product Gaussian kernel on
/// bandwidth-standardized (T, M) distances. Where every weight underflows
/// the bandwidth is doubled locally until one exceeds `1e-300`.
pub fn smooth_surface<T: Scalar>(
    points: &[ImpliedPoint<T>],
    t_axis: &[T],
    m_axis: &[T],
    bandwidth: Bandwidth<T>,
) -> Result<SmoothedSurface<T>> {
    if points.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(bandwidth.t > T::zero() && bandwidth.m > T::zero()) {
        return Err(Error::InvalidParameter {
            name: "bandwidth",
            value: to_f64(bandwidth.t.min(bandwidth.m)),
            reason: "bandwidths must be positive",
        });
    }
    let floor = lit::<T>(1e-300);
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let sites: Vec<(T, T, T)> = points
        .iter()
        .map(|p| (from_usize(p.steps), p.moneyness, p.value))
        .collect();
    let mut values = Vec::with_capacity(t_axis.len() * m_axis.len());
    let mut expanded = Vec::new();
    for (ti, &t) in t_axis.iter().enumerate() {
        for (mi, &m) in m_axis.iter().enumerate() {
            let (mut ht, mut hm) = (bandwidth.t, bandwidth.m);
            let mut widened = false;
            loop {
                let weights: Vec<T> = sites
                    .iter()
                    .map(|&(st, sm, _)| {
                        let zt = (t - st) / ht;
                        let zm = (m - sm) / hm;
                        (-half * (zt * zt + zm * zm)).exp()
                    })
                    .collect();
                let max_w = weights.iter().copied().fold(T::zero(), T::max);
                if max_w > floor {
                    let total: T = weights.iter().copied().sum();
                    let acc: T = weights.iter().zip(&sites).map(|(&w, s)| w * s.2).sum();
                    values.push(acc / total);
                    break;
                }
                widened = true;
                ht = ht * two;
                hm = hm * two;
            }
            if widened {
                expanded.push((ti, mi));
            }
        }
    }
    Ok(SmoothedSurface {
        grid: SurfaceGrid::new(t_axis.to_vec(), m_axis.to_vec(), values, bandwidth)?,
        expanded_nodes: expanded,
    })
}

/// Natural-world inputs for a surface run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelInputs<T> {
    pub model: PricingModel<T>,
    pub params: NaturalParams<T>,
    /// Parameters with CVaR-extreme probabilities, needed for `pdext`/`pmext`.
    pub extreme: Option<NaturalParams<T>>,
}

/// Grid and smoother configuration; `None` fields take defaults derived
/// from the inverted sites.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub t_axis: Option<Vec<T>>,
    pub m_axis: Option<Vec<T>>,
    pub bandwidth_t: Option<T>,
    pub bandwidth_m: Option<T>,
    /// Number of moneyness nodes in the default axis.
    pub m_nodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub steps: usize,
    pub strike: f64,
    pub error: String,
}

/// Inversion results and smoothed surface for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSurface<T> {
    pub kind: ParamKind,
    pub points: Vec<ImpliedPoint<T>>,
    pub failures: Vec<PointFailure>,
    /// Indices of quotes skipped for lying under the price floor.
    pub filtered: Vec<usize>,
    pub surface: Option<SmoothedSurface<T>>,
}

fn default_axes<T: Scalar>(points: &[ImpliedPoint<T>], grid: &GridSpec<T>) -> (Vec<T>, Vec<T>) {
    let t_axis = grid.t_axis.clone().unwrap_or_else(|| {
        let lo = points.iter().map(|p| p.steps).min().unwrap_or(1);
        let hi = points.iter().map(|p| p.steps).max().unwrap_or(1);
        (lo..=hi).map(from_usize).collect()
    });
    let m_axis = grid.m_axis.clone().unwrap_or_else(|| {
        let lo = points.iter().map(|p| p.moneyness).fold(T::infinity(), T::min);
        let hi = points.iter().map(|p| p.moneyness).fold(T::neg_infinity(), T::max);
        let n = grid.m_nodes.unwrap_or(41).max(2);
        if lo == hi {
            vec![lo]
        } else {
            let step = (hi - lo) / from_usize(n - 1);
            (0..n).map(|i| lo + step * from_usize(i)).collect()
        }
    });
    (t_axis, m_axis)
}

/// Inverts every quote for every requested parameter and smooths each set
/// of implied values. Per-point failures are collected; the call fails only
/// if no point of any parameter could be inverted.
pub fn build_surfaces<T: Scalar>(
    quotes: &QuoteSet<T>,
    inputs: &ModelInputs<T>,
    params: &[ParamKind],
    grid: &GridSpec<T>,
    settings: &InversionSettings<T>,
) -> Result<Vec<ParamSurface<T>>> {
    if params.is_empty() {
        return Ok(Vec::new());
    }
    let (kept, filtered): (Vec<usize>, Vec<usize>) =
        (0..quotes.quotes.len()).partition(|&i| quotes.quotes[i].price >= settings.price_floor);

    let mut out = Vec::with_capacity(params.len());
    for &kind in params {
        let fixed = if kind.is_extreme() { inputs.extreme } else { Some(inputs.params) };
        let results: Vec<(usize, Result<ImpliedPoint<T>>)> = kept
            .par_iter()
            .map(|&i| {
                let q = &quotes.quotes[i];
                let r = match fixed {
                    Some(fixed) => invert_point(&inputs.model, q, kind, &fixed, kind.default_bounds(&fixed), settings),
                    None => Err(Error::InvalidParameter {
                        name: "extreme params",
                        value: f64::NAN,
                        reason: "extreme inversion needs CVaR-extreme probabilities",
                    }),
                };
                (i, r)
            })
            .collect();

        let mut points = Vec::new();
        let mut failures = Vec::new();
        for (i, r) in results {
            match r {
                Ok(p) => points.push(p),
                Err(e) => {
                    let q = &quotes.quotes[i];
                    failures.push(PointFailure {
                        index: i,
                        steps: q.steps,
                        strike: to_f64(q.strike),
                        error: e.to_string(),
                    });
                }
            }
        }
        let surface = if points.is_empty() {
            None
        } else {
            let default_bw = Bandwidth::median_spacing(&points);
            let bw = Bandwidth {
                t: grid.bandwidth_t.unwrap_or(default_bw.t),
                m: grid.bandwidth_m.unwrap_or(default_bw.m),
            };
            let (t_axis, m_axis) = default_axes(&points, grid);
            Some(smooth_surface(&points, &t_axis, &m_axis, bw)?)
        };
        out.push(ParamSurface {
            kind,
            points,
            failures,
            filtered: filtered.clone(),
            surface,
        });
    }
    if out.iter().all(|s| s.points.is_empty()) {
        return Err(Error::NoFeasiblePoint);
    }
    Ok(out)
}
