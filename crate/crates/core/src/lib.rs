//! Statistics and information-theoretic quantities of the drift-diffusion
//! first-arrival-position (FAP) channel.
//!
//! * [`special`]: `K1` in direct, scaled and log form.
//! * [`kernels`]: the noise densities, the critical scale `n_c = sigma2 / v`
//!   and the regime split around it.
//! * [`quadrature`] and [`cdf`]: adaptive Gauss-Kronrod integration and
//!   tabulated CDFs with analytic tail closure.
//! * [`montecarlo`]: exact first-passage sampler and goodness-of-fit statistics.
//! * [`infotheory`]: entropies, mutual information, capacity baselines and
//!   interference probabilities, plus the sweeps built on them.
//!
//! Everything is generic over the scalar type through [`Real`]; the `f64`
//! aliases at the bottom of this file are what the CLI and the acceptance
//! suite use.

// `!(x > 0)` is how NaN gets rejected alongside nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// published constants and reference values keep all their digits
#![allow(clippy::excessive_precision)]

pub mod cdf;
pub mod error;
pub mod infotheory;
pub mod kernels;
pub mod montecarlo;
pub mod quadrature;
pub mod scalar;
pub mod special;

pub use cdf::{build_cdf, build_cdf_with, quantile, upper_quantile, TabulatedCdf, TailClosure};
pub use error::{Error, Result};
pub use infotheory::{
    bivariate_interference, capacity_sweep, cauchy_capacity, cauchy_interference,
    gaussian_capacity, interference_probability, interference_sweep, log_spaced,
    mutual_information_from_cdf, mutual_information_uniform, noise_entropy, noise_variance,
    shaping_loss, total_mass, CapacityConfig, CapacityPoint, InterferencePoint, ShapingLoss,
};
pub use kernels::{
    bivariate_cauchy_pdf, classify_regime, classify_regime_with, critical_scale, fit_tail_rate,
    fitted_tail_rate, log_pdf, pdf, tail_decay_rate, ChannelParams, Kernel, Regime, RegimeKind,
    RegimeThresholds,
};
pub use montecarlo::{
    fitted_sample_tail_rate, ks_statistic, sample_fap, sample_fap_batch,
    sample_first_passage_batch, sample_first_passage_time, summarize, FapRng, McConfig,
    SampleStats,
};
pub use quadrature::{
    integrate, integrate_breakpoints, integrate_semi_infinite, integrate_semi_infinite_scaled,
    integrate_tail, QuadConfig, QuadResult,
};
pub use scalar::Real;
pub use special::{bessel_k1, bessel_k1_scaled, log_bessel_k1, BesselEval};

pub type Params = ChannelParams<f64>;
pub type Cdf = TabulatedCdf<f64>;
pub type Quad = QuadConfig<f64>;
pub type Capacity = CapacityConfig<f64>;
pub type CapacityRow = CapacityPoint<f64>;
pub type InterferenceRow = InterferencePoint<f64>;
pub type Stats = SampleStats<f64>;
