//! Trinomial-lattice option pricing with a perpetual completing asset.
//!
//! The core types are generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below are the instantiations used by the I/O layer and the CLI.

// negated comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod error;
pub mod implied;
pub mod lattice;
pub mod marketdata;
pub mod optimize;
pub mod report;
pub mod scalar;
pub mod stats;

pub use calibrate::{
    calibrate, compute_up_down, cvar_thresholds, estimate_moments, estimate_probabilities, estimate_thresholds,
    BranchProbabilities, Calibration, CalibrationSettings, CvarThresholds, Moments, NaturalParams, ReturnSeries,
    ScanOutcome, ThresholdScan, Thresholds,
};
pub use error::{Error, Result};
pub use implied::{
    build_surfaces, invert_extreme, invert_point, smooth_surface, Bandwidth, Bounds, GridSpec, ImpliedPoint,
    InversionSettings, ModelInputs, ParamKind, ParamSurface, PricingModel, Quote, QuoteSet, SurfaceGrid,
};
pub use lattice::{
    gamma_exponent, price_european, risk_neutral_probs, solve_replication, value_slices, Convention, LatticeSpec,
    OptionKind, OptionSpec, PortfolioWeights, RiskNeutralProbs, StepFactors, Successors,
};
pub use scalar::Scalar;

pub type StepFactorsF64 = StepFactors<f64>;
pub type RiskNeutralProbsF64 = RiskNeutralProbs<f64>;
pub type LatticeSpecF64 = LatticeSpec<f64>;
pub type OptionSpecF64 = OptionSpec<f64>;
pub type ReturnSeriesF64 = ReturnSeries<f64>;
pub type NaturalParamsF64 = NaturalParams<f64>;
pub type CalibrationF64 = Calibration<f64>;
pub type QuoteSetF64 = QuoteSet<f64>;
pub type SurfaceGridF64 = SurfaceGrid<f64>;

pub type StepFactorsF32 = StepFactors<f32>;
pub type LatticeSpecF32 = LatticeSpec<f32>;
