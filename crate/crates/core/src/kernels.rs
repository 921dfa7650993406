//! FAP noise densities and the regime structure around the critical scale.
//!
//! Lengths are in micrometres and times in seconds throughout the toolkit,
//! but nothing here depends on the unit choice as long as `lambda`, `sigma2`
//! and `v` are mutually consistent.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::special::{bessel_k1_scaled, log_bessel_k1};

/// Physical description of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams<T> {
    lambda: T,
    sigma2: T,
    v: T,
}

impl<T: Real> ChannelParams<T> {
    /// `lambda`: transmitter to receiver distance, `sigma2 = 2D`, `v`: drift
    /// speed toward the receiving plane.
    pub fn new(lambda: T, sigma2: T, v: T) -> Result<Self> {
        if !(lambda.is_finite() && lambda > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if !(sigma2.is_finite() && sigma2 > T::zero()) {
            return Err(Error::InvalidParams(format!(
                "sigma2 must be > 0, got {sigma2}"
            )));
        }
        if !v.is_finite() || v < T::zero() {
            // Drift away from the receiving plane is not modelled.
            return Err(Error::InvalidParams(format!("drift must be >= 0, got {v}")));
        }
        Ok(Self { lambda, sigma2, v })
    }

    /// Same as [`ChannelParams::new`] with `sigma2 = 2 * diffusion`.
    pub fn from_diffusion(lambda: T, diffusion: T, v: T) -> Result<Self> {
        Self::new(lambda, T::lit(2.0) * diffusion, v)
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn drift(&self) -> T {
        self.v
    }

    pub fn diffusion(&self) -> T {
        self.sigma2 / T::lit(2.0)
    }

    /// Copy of these parameters with a different drift.
    pub fn with_drift(&self, v: T) -> Result<Self> {
        Self::new(self.lambda, self.sigma2, v)
    }

    /// `sigma2 / v`, or `+inf` without drift.
    pub fn critical_scale(&self) -> T {
        if self.v == T::zero() {
            T::infinity()
        } else {
            self.sigma2 / self.v
        }
    }

    /// `sqrt(n^2 + lambda^2)`: distance from the release point to the impact point.
    pub fn path_length(&self, n: T) -> T {
        n.hypot(self.lambda)
    }

    /// Dimensionless Bessel argument `z(n) = v sqrt(n^2 + lambda^2) / sigma2`.
    pub fn bessel_argument(&self, n: T) -> T {
        self.v * self.path_length(n) / self.sigma2
    }
}

/// Which density model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// The closed form with `K1` and the trailing `exp(-z)` factor.
    ExactEq2,
    /// First-passage subordination mixture `N = sigma sqrt(T) Z`; the same
    /// closed form without the trailing `exp(-z)`.
    Subordination,
    /// Zero-drift Cauchy law with scale `lambda`.
    CauchyLimit,
    /// `K1(z) ~ 1/z` applied to [`Kernel::ExactEq2`].
    CoreAsymptotic,
    /// `C rho^{-3/2} exp(-2 v rho / sigma2)`, continuous with `ExactEq2` at `z = z_hi`.
    TailAsymptotic,
    /// Radial slice `(n, 0)` of the planar Cauchy core.
    BivariateCauchy,
}

impl Kernel {
    pub const ALL: [Kernel; 6] = [
        Kernel::ExactEq2,
        Kernel::Subordination,
        Kernel::CauchyLimit,
        Kernel::CoreAsymptotic,
        Kernel::TailAsymptotic,
        Kernel::BivariateCauchy,
    ];

    pub fn requires_drift(self) -> bool {
        matches!(
            self,
            Kernel::ExactEq2 | Kernel::Subordination | Kernel::TailAsymptotic
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::ExactEq2 => "eq2",
            Kernel::Subordination => "subordination",
            Kernel::CauchyLimit => "cauchy",
            Kernel::CoreAsymptotic => "core",
            Kernel::TailAsymptotic => "tail",
            Kernel::BivariateCauchy => "bivariate",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown kernel '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    CauchyCore,
    Transition,
    ExponentialTail,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::CauchyCore => "CauchyCore",
            RegimeKind::Transition => "Transition",
            RegimeKind::ExponentialTail => "ExponentialTail",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime<T> {
    pub kind: RegimeKind,
    pub z: T,
}

/// Bessel-argument thresholds separating the three regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeThresholds<T> {
    pub z_lo: T,
    pub z_hi: T,
}

impl<T: Real> Default for RegimeThresholds<T> {
    fn default() -> Self {
        Self {
            z_lo: T::lit(0.3),
            z_hi: T::lit(3.0),
        }
    }
}

impl<T: Real> RegimeThresholds<T> {
    pub fn new(z_lo: T, z_hi: T) -> Result<Self> {
        if !(z_lo > T::zero() && z_lo < z_hi && z_hi.is_finite()) {
            return Err(Error::Domain(format!(
                "regime thresholds need 0 < z_lo < z_hi, got {z_lo}, {z_hi}"
            )));
        }
        Ok(Self { z_lo, z_hi })
    }

    pub fn classify(&self, z: T) -> RegimeKind {
        if z < self.z_lo {
            RegimeKind::CauchyCore
        } else if z > self.z_hi {
            RegimeKind::ExponentialTail
        } else {
            RegimeKind::Transition
        }
    }
}

fn check_kernel<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> Result<()> {
    if kernel.requires_drift() && params.v == T::zero() {
        return Err(Error::IncompatibleKernel {
            kernel: kernel.name(),
        });
    }
    Ok(())
}

/// `v (lambda - rho) / sigma2` without cancellation.
fn drift_gain<T: Real>(params: &ChannelParams<T>, n: T, rho: T) -> T {
    -(params.v / params.sigma2) * (n * n / (rho + params.lambda))
}

fn log_cauchy<T: Real>(lambda: T, n: T) -> T {
    lambda.ln() - T::PI().ln() - (n * n + lambda * lambda).ln()
}

/// Log of the drifted closed form; `trailing` selects the extra `exp(-z)`.
fn log_bessel_form<T: Real>(params: &ChannelParams<T>, n: T, trailing: bool) -> Result<T> {
    let rho = params.path_length(n);
    let z = params.v * rho / params.sigma2;
    let prefactor = (params.v * params.lambda / (T::PI() * params.sigma2 * rho)).ln();
    // e^{v lambda/sigma2} K1(z) = e^{v(lambda - rho)/sigma2} * (e^z K1(z))
    let scaled = bessel_k1_scaled(z)?;
    let log_scaled = if scaled.is_finite() {
        scaled.ln()
    } else {
        // e^z K1 ~ 1/z overflows for vanishing z
        log_bessel_k1(z)? + z
    };
    let mut out = prefactor + log_scaled + drift_gain(params, n, rho);
    if trailing {
        out = out - z;
    }
    Ok(out)
}

/// Matching constant for [`Kernel::TailAsymptotic`]: `ln C` such that the
/// asymptotic form equals `ExactEq2` where `z = z_match`.
pub fn tail_log_constant<T: Real>(params: &ChannelParams<T>, z_match: T) -> Result<T> {
    check_kernel(params, Kernel::TailAsymptotic)?;
    let rho = (z_match * params.sigma2 / params.v).max(params.lambda);
    let n = (rho * rho - params.lambda * params.lambda)
        .max(T::zero())
        .sqrt();
    let z = params.v * rho / params.sigma2;
    Ok(log_bessel_form(params, n, true)? + T::lit(1.5) * rho.ln() + T::lit(2.0) * z)
}

/// `ln f_N(n)` for the chosen kernel, evaluated entirely in the log domain.
pub fn log_pdf<T: Real>(params: &ChannelParams<T>, kernel: Kernel, n: T) -> Result<T> {
    if !n.is_finite() {
        return Err(Error::Domain(format!("offset must be finite, got {n}")));
    }
    check_kernel(params, kernel)?;
    let n = n.abs();
    match kernel {
        Kernel::ExactEq2 => log_bessel_form(params, n, true),
        Kernel::Subordination => log_bessel_form(params, n, false),
        Kernel::CauchyLimit => Ok(log_cauchy(params.lambda, n)),
        Kernel::CoreAsymptotic => {
            let rho = params.path_length(n);
            Ok(log_cauchy(params.lambda, n) + drift_gain(params, n, rho))
        }
        Kernel::TailAsymptotic => {
            let log_c = tail_log_constant(params, RegimeThresholds::default().z_hi)?;
            let rho = params.path_length(n);
            Ok(log_c - T::lit(1.5) * rho.ln() - T::lit(2.0) * params.bessel_argument(n))
        }
        Kernel::BivariateCauchy => Ok(log_bivariate_cauchy(params.lambda, n, T::zero())),
    }
}

/// `exp(log_pdf)`; underflows to zero in the far tail.
pub fn pdf<T: Real>(params: &ChannelParams<T>, kernel: Kernel, n: T) -> Result<T> {
    log_pdf(params, kernel, n).map(T::exp)
}

fn log_bivariate_cauchy<T: Real>(lambda: T, n1: T, n2: T) -> T {
    let r2 = n1 * n1 + n2 * n2 + lambda * lambda;
    (lambda / (T::lit(2.0) * T::PI())).ln() - T::lit(1.5) * r2.ln()
}

/// Planar Cauchy core `lambda / (2 pi (n1^2 + n2^2 + lambda^2)^{3/2})`.
pub fn bivariate_cauchy_pdf<T: Real>(lambda: T, n1: T, n2: T) -> Result<T> {
    if !(lambda.is_finite() && lambda > T::zero()) {
        return Err(Error::InvalidParams(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    Ok(log_bivariate_cauchy(lambda, n1, n2).exp())
}

/// `n_c = sigma2 / v`; `+inf` when there is no drift.
pub fn critical_scale<T: Real>(params: &ChannelParams<T>) -> T {
    params.critical_scale()
}

pub fn classify_regime<T: Real>(params: &ChannelParams<T>, n: T) -> Result<Regime<T>> {
    classify_regime_with(params, n, &RegimeThresholds::default())
}

pub fn classify_regime_with<T: Real>(
    params: &ChannelParams<T>,
    n: T,
    thresholds: &RegimeThresholds<T>,
) -> Result<Regime<T>> {
    if params.v == T::zero() {
        return Err(Error::ZeroDrift(
            "without drift the whole line is Cauchy core".into(),
        ));
    }
    if !n.is_finite() {
        return Err(Error::Domain(format!("offset must be finite, got {n}")));
    }
    let z = params.bessel_argument(n);
    Ok(Regime {
        kind: thresholds.classify(z),
        z,
    })
}

/// Exponential decay rate of the tail: `2v/sigma2` for `ExactEq2`,
/// `v/sigma2` for `Subordination`.
pub fn tail_decay_rate<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> Result<T> {
    let base = params.v / params.sigma2;
    match kernel {
        Kernel::ExactEq2 => Ok(T::lit(2.0) * base),
        Kernel::Subordination => Ok(base),
        other => Err(Error::Domain(format!(
            "kernel {other} has no exponential tail rate"
        ))),
    }
}

/// Least-squares exponential rate of a tail sampled as `(n, ln f(n))`, after
/// removing the `n^{-3/2}` prefactor of the asymptotic tail form.
///
/// Returns `None` with fewer than two distinct abscissae.
pub fn fit_tail_rate<T: Real>(points: &[(T, T)]) -> Option<T> {
    let weighted: Vec<(T, T, T)> = points
        .iter()
        .map(|&(n, lf)| (n, lf + T::lit(1.5) * n.abs().ln(), T::one()))
        .collect();
    weighted_slope(&weighted).map(|s| -s)
}

/// Weighted least-squares slope of `(x, y, w)` triples.
pub(crate) fn weighted_slope<T: Real>(points: &[(T, T, T)]) -> Option<T> {
    let (mut sw, mut sx, mut sy) = (T::zero(), T::zero(), T::zero());
    for &(x, y, w) in points {
        sw = sw + w;
        sx = sx + w * x;
        sy = sy + w * y;
    }
    if sw <= T::zero() {
        return None;
    }
    let (mx, my) = (sx / sw, sy / sw);
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for &(x, y, w) in points {
        sxx = sxx + w * (x - mx) * (x - mx);
        sxy = sxy + w * (x - mx) * (y - my);
    }
    if sxx <= T::zero() {
        return None;
    }
    Some(sxy / sxx)
}

/// Fits [`fit_tail_rate`] to `points` evenly spaced samples of the kernel on `[from, to]`.
pub fn fitted_tail_rate<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    from: T,
    to: T,
    points: usize,
) -> Result<T> {
    if !(from > T::zero() && to > from) || points < 2 {
        return Err(Error::Domain(
            "tail fit needs 0 < from < to and >= 2 points".into(),
        ));
    }
    let step = (to - from) / T::from_usize(points - 1);
    let samples = (0..points)
        .map(|i| {
            let n = from + step * T::from_usize(i);
            log_pdf(params, kernel, n).map(|lf| (n, lf))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_tail_rate(&samples).ok_or_else(|| Error::Domain("degenerate tail fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn baseline(v: f64) -> ChannelParams<f64> {
        ChannelParams::new(10.0, 200.0, v).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(0.0, 200.0, 1.0).is_err());
        assert!(ChannelParams::new(10.0, -1.0, 1.0).is_err());
        assert!(ChannelParams::new(10.0, 200.0, -1.0).is_err());
        assert!(ChannelParams::new(10.0, 200.0, f64::NAN).is_err());
        let p = ChannelParams::from_diffusion(10.0, 100.0, 5.0).unwrap();
        assert_eq!(p.sigma2(), 200.0);
        assert_eq!(p.diffusion(), 100.0);
    }

    #[test]
    fn critical_scales() {
        assert_eq!(critical_scale(&baseline(5.0)), 40.0);
        assert_eq!(critical_scale(&baseline(0.1)), 2000.0);
        assert_eq!(critical_scale(&baseline(0.0)), f64::INFINITY);
    }

    #[test]
    fn cauchy_values() {
        let p = baseline(0.0);
        assert_relative_eq!(
            log_pdf(&p, Kernel::CauchyLimit, 0.0).unwrap(),
            (1.0 / (10.0 * PI)).ln(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            pdf(&p, Kernel::CauchyLimit, 10.0).unwrap(),
            1.0 / (20.0 * PI),
            max_relative = 1e-15
        );
        let n = 1e8;
        assert_relative_eq!(
            n * n * pdf(&p, Kernel::CauchyLimit, n).unwrap(),
            10.0 / PI,
            max_relative = 1e-12
        );
        assert_eq!(pdf(&p, Kernel::CauchyLimit, 1e300).unwrap(), 0.0);
    }

    #[test]
    fn drifted_kernels_refuse_zero_drift() {
        let p = baseline(0.0);
        for k in [
            Kernel::ExactEq2,
            Kernel::Subordination,
            Kernel::TailAsymptotic,
        ] {
            assert!(matches!(
                log_pdf(&p, k, 1.0),
                Err(Error::IncompatibleKernel { .. })
            ));
        }
        assert!(log_pdf(&p, Kernel::CoreAsymptotic, 1.0).is_ok());
        assert!(log_pdf(&baseline(1.0), Kernel::CauchyLimit, f64::NAN).is_err());
    }

    #[test]
    fn weak_drift_recovers_cauchy() {
        let p = baseline(1e-6);
        for n in [0.0, 5.0, 20.0] {
            let c = pdf(&p, Kernel::CauchyLimit, n).unwrap();
            let e = pdf(&p, Kernel::ExactEq2, n).unwrap();
            let s = pdf(&p, Kernel::Subordination, n).unwrap();
            assert_relative_eq!(e, c, max_relative = 1e-3);
            assert_relative_eq!(s, c, max_relative = 1e-3);
        }
    }

    #[test]
    fn kernels_differ_by_trailing_factor() {
        let p = baseline(5.0);
        for n in [0.0, 7.0, 40.0, 300.0] {
            let e = log_pdf(&p, Kernel::ExactEq2, n).unwrap();
            let s = log_pdf(&p, Kernel::Subordination, n).unwrap();
            assert_relative_eq!(s - e, p.bessel_argument(n), max_relative = 1e-12);
        }
    }

    #[test]
    fn exact_matches_direct_formula() {
        // straight transcription of the printed closed form
        let p = baseline(5.0);
        for n in [0.0, 3.0, 40.0, 120.0] {
            let rho: f64 = (n * n + 100.0f64).sqrt();
            let z = 5.0 * rho / 200.0;
            let k1 = crate::special::bessel_k1(z).unwrap();
            let direct =
                5.0 * 10.0 / (PI * 200.0 * rho) * (5.0f64 * 10.0 / 200.0).exp() * k1 * (-z).exp();
            assert_relative_eq!(
                pdf(&p, Kernel::ExactEq2, n).unwrap(),
                direct,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn tail_asymptotic_matches_exact() {
        let p = baseline(5.0);
        // continuity at z = z_hi = 3 (rho = 120)
        let n_match = (120.0f64 * 120.0 - 100.0).sqrt();
        assert_relative_eq!(
            log_pdf(&p, Kernel::TailAsymptotic, n_match).unwrap(),
            log_pdf(&p, Kernel::ExactEq2, n_match).unwrap(),
            max_relative = 1e-12
        );
        let n = 10.0 * 40.0;
        let ratio =
            pdf(&p, Kernel::TailAsymptotic, n).unwrap() / pdf(&p, Kernel::ExactEq2, n).unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn core_asymptotic_matches_exact() {
        let p = baseline(0.5);
        // z < 0.05 means rho < 20
        for n in [0.0, 5.0, 10.0, 17.0] {
            assert!(p.bessel_argument(n) < 0.05);
            let ratio =
                pdf(&p, Kernel::ExactEq2, n).unwrap() / pdf(&p, Kernel::CoreAsymptotic, n).unwrap();
            assert!((ratio - 1.0).abs() < 5e-2, "ratio {ratio} at {n}");
        }
    }

    #[test]
    fn bivariate_values() {
        assert_relative_eq!(
            bivariate_cauchy_pdf(10.0, 0.0, 0.0).unwrap(),
            1.0 / (200.0 * PI),
            max_relative = 1e-15
        );
        for r in [0.5, 3.0, 70.0] {
            assert_eq!(
                bivariate_cauchy_pdf(10.0, r, 0.0).unwrap(),
                bivariate_cauchy_pdf(10.0, 0.0, r).unwrap()
            );
        }
        assert!(bivariate_cauchy_pdf(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn regimes() {
        let p = baseline(5.0);
        let r = classify_regime(&p, 0.0).unwrap();
        assert_eq!(r.kind, RegimeKind::CauchyCore);
        assert_eq!(r.z, 0.25);
        let r = classify_regime(&p, 400.0).unwrap();
        assert_eq!(r.kind, RegimeKind::ExponentialTail);
        assert!((r.z - 10.0).abs() < 0.01);
        let r = classify_regime(&p, 40.0).unwrap();
        assert_eq!(r.kind, RegimeKind::Transition);
        assert!((r.z - 1.03).abs() < 0.005);
        assert!(matches!(
            classify_regime(&baseline(0.0), 1.0),
            Err(Error::ZeroDrift(_))
        ));
        assert!(RegimeThresholds::new(3.0, 0.3).is_err());
    }

    #[test]
    fn tail_rates() {
        let p = baseline(5.0);
        assert_eq!(tail_decay_rate(&p, Kernel::ExactEq2).unwrap(), 0.05);
        assert_eq!(tail_decay_rate(&p, Kernel::Subordination).unwrap(), 0.025);
        assert_eq!(
            tail_decay_rate(&baseline(0.0), Kernel::Subordination).unwrap(),
            0.0
        );
        assert!(tail_decay_rate(&p, Kernel::CauchyLimit).is_err());
    }

    #[test]
    fn fitted_rates_track_predictions() {
        for v in [1.0, 5.0] {
            let p = baseline(v);
            let nc = p.critical_scale();
            for k in [Kernel::ExactEq2, Kernel::Subordination] {
                let fitted = fitted_tail_rate(&p, k, 5.0 * nc, 10.0 * nc, 64).unwrap();
                let want = tail_decay_rate(&p, k).unwrap();
                assert!(
                    (fitted / want - 1.0).abs() < 0.05,
                    "{k} v={v}: {fitted} vs {want}"
                );
            }
        }
    }

    #[test]
    fn kernel_names_roundtrip() {
        for k in Kernel::ALL {
            assert_eq!(k.name().parse::<Kernel>().unwrap(), k);
        }
        assert!("gauss".parse::<Kernel>().is_err());
    }

    #[test]
    fn single_precision_kernels() {
        let p = ChannelParams::new(10.0f32, 200.0, 5.0).unwrap();
        let a = pdf(&p, Kernel::Subordination, 12.0).unwrap() as f64;
        let b = pdf(&baseline(5.0), Kernel::Subordination, 12.0).unwrap();
        assert!((a / b - 1.0).abs() < 1e-5);
    }

    proptest! {
        #[test]
        fn symmetric_in_offset(n in -1e4f64..1e4, v in 1e-3f64..20.0) {
            let p = baseline(v);
            for k in Kernel::ALL {
                prop_assert_eq!(log_pdf(&p, k, n).unwrap(), log_pdf(&p, k, -n).unwrap());
            }
        }

        #[test]
        fn nonincreasing_in_offset(a in 0f64..5e3, b in 0f64..5e3, v in 1e-3f64..20.0) {
            let p = baseline(v);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for k in Kernel::ALL {
                prop_assert!(pdf(&p, k, hi).unwrap() <= pdf(&p, k, lo).unwrap() * (1.0 + 1e-14));
            }
        }

        #[test]
        fn weak_drift_is_cauchy(n in -100f64..100.0, v in 1e-8f64..1e-4) {
            // v lambda / sigma2 < 1e-4 holds over this range
            let p = baseline(v);
            let c = pdf(&p, Kernel::CauchyLimit, n).unwrap();
            for k in [Kernel::ExactEq2, Kernel::Subordination] {
                prop_assert!((pdf(&p, k, n).unwrap() / c - 1.0).abs() < 1e-2);
            }
        }
    }
}
