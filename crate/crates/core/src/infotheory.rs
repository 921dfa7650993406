//! Entropies, mutual information, capacity baselines and interference
//! probabilities of the additive FAP noise channel `Y = X + N`.
//!
//! All information quantities are in nats.

use rayon::prelude::*;

use crate::cdf::{build_cdf, upper_quantile, TabulatedCdf, NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::kernels::{log_pdf, ChannelParams, Kernel};
use crate::quadrature::{integrate_breakpoints, integrate_tail, QuadConfig};
use crate::scalar::Real;

/// One-sided output mass ignored beyond `A + n_cut` in `h(Y)`.
pub const OUTPUT_TAIL_MASS: f64 = 1e-9;

/// Peak-amplitude constraint `|X| <= A` with a uniform input on `[-A, A]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityConfig<T> {
    amplitude: T,
}

impl<T: Real> CapacityConfig<T> {
    pub fn new(amplitude: T) -> Result<Self> {
        if !(amplitude > T::zero() && amplitude.is_finite()) {
            return Err(Error::Domain(format!(
                "amplitude must be > 0, got {amplitude}"
            )));
        }
        Ok(Self { amplitude })
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    /// `P_X = A^2 / 3`, the variance of the uniform input.
    pub fn signal_power(&self) -> T {
        self.amplitude * self.amplitude / T::lit(3.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityPoint<T> {
    pub v: T,
    pub mi_exact_nats: T,
    pub c_gauss_nats: T,
    pub c_cauchy_nats: T,
    pub noise_variance: T,
    pub n_c: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferencePoint<T> {
    /// Zero marks the closed-form zero-drift baseline.
    pub v: T,
    pub r: T,
    pub p_int: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingLoss<T> {
    /// `ln(2 pi)`, the high-amplitude limit.
    pub asymptotic: T,
    /// `ln(A / lambda) - I_uniform`.
    pub numeric: T,
}

/// `-f ln f` evaluated from the log density; zero where `f` underflows.
fn neg_f_log_f<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> impl Fn(T) -> T + '_ {
    move |n| match log_pdf(params, kernel, n) {
        Ok(lp) => {
            let f = lp.exp();
            if f == T::zero() {
                T::zero()
            } else {
                -f * lp
            }
        }
        Err(_) => T::nan(),
    }
}

fn density<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> impl Fn(T) -> T + '_ {
    move |n| log_pdf(params, kernel, n).map(T::exp).unwrap_or(T::nan())
}

/// `integral f` over the whole line, by quadrature.
pub fn total_mass<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    log_pdf(params, kernel, T::zero())?;
    let half =
        integrate_tail(density(params, kernel), T::zero(), params.lambda(), cfg)?.require()?;
    Ok(T::lit(2.0) * half)
}

fn require_normalized<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
) -> Result<()> {
    let mass = total_mass(params, kernel, cfg)?;
    if (mass - T::one()).abs() > T::lit(NORMALIZATION_TOL) {
        return Err(Error::Unnormalized(mass.as_f64()));
    }
    Ok(())
}

/// Differential entropy `h(N) = -integral f ln f`; refuses kernels that do
/// not integrate to one.
pub fn noise_entropy<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    require_normalized(params, kernel, cfg)?;
    let half =
        integrate_tail(neg_f_log_f(params, kernel), T::zero(), params.lambda(), cfg)?.require()?;
    Ok(T::lit(2.0) * half)
}

fn has_algebraic_tail<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> bool {
    match kernel {
        Kernel::CauchyLimit | Kernel::BivariateCauchy => true,
        Kernel::CoreAsymptotic => params.drift() == T::zero(),
        _ => false,
    }
}

/// `integral n^2 f(n) dn`. Infinite without drift, reported as `ZeroDrift`.
pub fn noise_variance<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    if params.drift() == T::zero() || has_algebraic_tail(params, kernel) {
        return Err(Error::ZeroDrift(format!(
            "{kernel} noise has infinite variance at v = {}",
            params.drift()
        )));
    }
    let f = density(params, kernel);
    let scale = params.lambda();
    let half = integrate_tail(|n: T| n * n * f(n), T::zero(), scale, cfg)?.require()?;
    Ok(T::lit(2.0) * half)
}

fn output_breakpoints<T: Real>(amplitude: T, lambda: T, n_cut: T) -> Vec<T> {
    let mut pts = vec![T::zero()];
    for k in [-5.0, -1.0, 0.0, 1.0] {
        let p = amplitude + T::lit(k) * lambda;
        if p > T::zero() {
            pts.push(p);
        }
    }
    let end = amplitude + n_cut;
    let mut width = T::lit(5.0) * lambda;
    let mut p = amplitude + width;
    while p < end {
        pts.push(p);
        width = width * T::lit(2.0);
        p = amplitude + width;
    }
    pts.push(end);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();
    pts
}

/// Output entropy `h(Y)` for `X ~ U[-A, A]`, from the noise CDF:
/// `f_Y(y) = (F(y + A) - F(y - A)) / 2A`.
pub fn output_entropy<T: Real>(
    cdf: &TabulatedCdf<T>,
    cap: &CapacityConfig<T>,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    cdf.require_normalized()?;
    let a = cap.amplitude();
    let two_a = T::lit(2.0) * a;
    let n_cut = upper_quantile(cdf, T::lit(OUTPUT_TAIL_MASS))?;
    let g = |y: T| {
        let f = cdf.mass_between(y - a, y + a) / two_a;
        if f > T::zero() {
            -f * f.ln()
        } else {
            T::zero()
        }
    };
    let pts = output_breakpoints(a, cdf.params().lambda(), n_cut);
    let half = integrate_breakpoints(g, &pts, cfg)?.require()?;
    Ok(T::lit(2.0) * half)
}

/// `I(X; Y) = h(Y) - h(N)` for a uniform input on `[-A, A]`.
pub fn mutual_information_uniform<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cap: &CapacityConfig<T>,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    let cdf = build_cdf(params, kernel, cfg)?;
    mutual_information_from_cdf(&cdf, cap, cfg)
}

/// As [`mutual_information_uniform`] with a prebuilt noise CDF.
pub fn mutual_information_from_cdf<T: Real>(
    cdf: &TabulatedCdf<T>,
    cap: &CapacityConfig<T>,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    cdf.require_normalized()?;
    let h_n = noise_entropy(cdf.params(), cdf.kernel(), cfg)?;
    let h_y = output_entropy(cdf, cap, cfg)?;
    Ok((h_y - h_n).max(T::zero()))
}

/// `1/2 ln(1 + P_X / variance)`.
pub fn gaussian_capacity<T: Real>(cap: &CapacityConfig<T>, variance: T) -> Result<T> {
    if !(variance > T::zero()) {
        return Err(Error::Domain(format!(
            "noise variance must be > 0, got {variance}"
        )));
    }
    Ok((cap.signal_power() / variance).ln_1p() / T::lit(2.0))
}

/// Zero-drift Cauchy baseline `ln(A / lambda)`.
pub fn cauchy_capacity<T: Real>(cap: &CapacityConfig<T>, lambda: T) -> Result<T> {
    if !(lambda > T::zero()) || cap.amplitude() <= lambda {
        return Err(Error::Domain(format!(
            "Cauchy baseline needs A > lambda, got A = {}, lambda = {lambda}",
            cap.amplitude()
        )));
    }
    Ok((cap.amplitude() / lambda).ln())
}

pub fn shaping_loss<T: Real>(
    cap: &CapacityConfig<T>,
    lambda: T,
    mi_exact: T,
) -> Result<ShapingLoss<T>> {
    if !(lambda.is_finite() && lambda > T::zero() && mi_exact.is_finite()) {
        return Err(Error::Domain("shaping loss needs finite inputs".into()));
    }
    Ok(ShapingLoss {
        asymptotic: (T::lit(2.0) * T::PI()).ln(),
        numeric: (cap.amplitude() / lambda).ln() - mi_exact,
    })
}

/// Lower and upper ends of `[ln(A / 2 pi lambda), ln(A / lambda)]`, the bracket
/// for the uniform-input information at low drift.
pub fn uniform_information_bracket<T: Real>(cap: &CapacityConfig<T>, lambda: T) -> (T, T) {
    let ratio = cap.amplitude() / lambda;
    ((ratio / (T::lit(2.0) * T::PI())).ln(), ratio.ln())
}

/// `P(|N| > r)` for the Cauchy law with scale `lambda`.
pub fn cauchy_interference<T: Real>(lambda: T, r: T) -> T {
    T::one() - T::lit(2.0) / T::PI() * (r / lambda).atan()
}

/// `P(|N| > r) = 2 integral_r^inf f`. `CauchyLimit` and `BivariateCauchy`
/// use their closed forms.
pub fn interference_probability<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    r: T,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    if !(r >= T::zero() && r.is_finite()) {
        return Err(Error::Domain(format!("separation must be >= 0, got {r}")));
    }
    log_pdf(params, kernel, r)?;
    match kernel {
        Kernel::CauchyLimit => Ok(cauchy_interference(params.lambda(), r)),
        Kernel::BivariateCauchy => bivariate_interference(params.lambda(), r),
        _ => {
            let scale = r.max(params.lambda());
            let half = integrate_tail(density(params, kernel), r, scale, cfg)?.require()?;
            Ok(T::lit(2.0) * half)
        }
    }
}

/// Radial exceedance of the planar Cauchy core: `lambda / sqrt(lambda^2 + r^2)`.
pub fn bivariate_interference<T: Real>(lambda: T, r: T) -> Result<T> {
    if !(lambda > T::zero()) || !(r >= T::zero()) {
        return Err(Error::Domain(format!(
            "bivariate interference needs lambda > 0 and r >= 0, got {lambda}, {r}"
        )));
    }
    Ok(lambda / lambda.hypot(r))
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_spaced<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if !(lo > T::zero() && hi > lo) || n < 2 {
        return Err(Error::Domain(format!(
            "log grid needs 0 < lo < hi and n >= 2, got {lo}, {hi}, {n}"
        )));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / T::from_usize(n - 1);
    let mut out: Vec<T> = (0..n)
        .map(|i| (a + step * T::from_usize(i)).exp())
        .collect();
    out[0] = lo;
    out[n - 1] = hi;
    Ok(out)
}

fn strictly_increasing<T: Real>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

/// One capacity row for drift `v`.
pub fn capacity_point<T: Real>(
    template: &ChannelParams<T>,
    kernel: Kernel,
    cap: &CapacityConfig<T>,
    v: T,
    cfg: &QuadConfig<T>,
) -> Result<CapacityPoint<T>> {
    let params = template.with_drift(v)?;
    let c_cauchy = cauchy_capacity(cap, params.lambda())?;
    let cdf = build_cdf(&params, kernel, cfg)?;
    let mi = mutual_information_from_cdf(&cdf, cap, cfg)?;
    let variance = noise_variance(&params, kernel, cfg)?;
    Ok(CapacityPoint {
        v,
        mi_exact_nats: mi,
        c_gauss_nats: gaussian_capacity(cap, variance)?,
        c_cauchy_nats: c_cauchy,
        noise_variance: variance,
        n_c: params.critical_scale(),
    })
}

/// Capacity rows for every drift in `v_grid`, in grid order. Rows are
/// computed in parallel; any failed row fails the sweep.
pub fn capacity_sweep<T: Real>(
    template: &ChannelParams<T>,
    kernel: Kernel,
    cap: &CapacityConfig<T>,
    v_grid: &[T],
    cfg: &QuadConfig<T>,
) -> Result<Vec<CapacityPoint<T>>> {
    if v_grid.is_empty() || !(v_grid[0] > T::zero()) || !strictly_increasing(v_grid) {
        return Err(Error::Domain(
            "drift grid must be positive and strictly increasing".into(),
        ));
    }
    v_grid
        .par_iter()
        .map(|&v| capacity_point(template, kernel, cap, v, cfg))
        .collect()
}

/// Interference rows for every `(v, r)`, drift-major. `v = 0` rows use the
/// Cauchy closed form regardless of `kernel`.
pub fn interference_sweep<T: Real>(
    template: &ChannelParams<T>,
    kernel: Kernel,
    r_grid: &[T],
    v_list: &[T],
    cfg: &QuadConfig<T>,
) -> Result<Vec<InterferencePoint<T>>> {
    if r_grid.is_empty() || !(r_grid[0] >= T::zero()) || !strictly_increasing(r_grid) {
        return Err(Error::Domain(
            "separation grid must be >= 0 and strictly increasing".into(),
        ));
    }
    if v_list.iter().any(|&v| !(v >= T::zero())) {
        return Err(Error::Domain("drift values must be >= 0".into()));
    }
    let jobs: Vec<(T, T)> = v_list
        .iter()
        .flat_map(|&v| r_grid.iter().map(move |&r| (v, r)))
        .collect();
    jobs.par_iter()
        .map(|&(v, r)| {
            let p_int = if v == T::zero() {
                cauchy_interference(template.lambda(), r)
            } else {
                interference_probability(&template.with_drift(v)?, kernel, r, cfg)?
            };
            Ok(InterferencePoint { v, r, p_int })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn baseline(v: f64) -> ChannelParams<f64> {
        ChannelParams::new(10.0, 200.0, v).unwrap()
    }

    fn cfg() -> QuadConfig<f64> {
        QuadConfig::default()
    }

    #[test]
    fn cauchy_entropy_closed_form() {
        let h = noise_entropy(&baseline(0.0), Kernel::CauchyLimit, &cfg()).unwrap();
        assert_relative_eq!(h, (40.0 * PI).ln(), max_relative = 1e-9);
        assert!((h - 4.83361).abs() < 1e-5);
    }

    #[test]
    fn weak_drift_entropy_is_cauchy() {
        let h = noise_entropy(&baseline(1e-4), Kernel::Subordination, &cfg()).unwrap();
        assert!((h - (40.0 * PI).ln()).abs() < 0.02, "{h}");
    }

    #[test]
    fn drifted_entropy_below_gaussian() {
        let h = noise_entropy(&baseline(5.0), Kernel::Subordination, &cfg()).unwrap();
        let gauss = 0.5 * (2.0 * PI * std::f64::consts::E * 400.0).ln();
        assert!(h < gauss, "{h} vs {gauss}");
    }

    #[test]
    fn entropy_refuses_unnormalized_kernel() {
        assert!(matches!(
            noise_entropy(&baseline(5.0), Kernel::ExactEq2, &cfg()),
            Err(Error::Unnormalized(_))
        ));
    }

    #[test]
    fn variance_law() {
        for (v, want) in [(5.0, 400.0), (1.0, 2000.0)] {
            let var = noise_variance(&baseline(v), Kernel::Subordination, &cfg()).unwrap();
            assert_relative_eq!(var, want, max_relative = 5e-3);
        }
        assert!(matches!(
            noise_variance(&baseline(0.0), Kernel::CauchyLimit, &cfg()),
            Err(Error::ZeroDrift(_))
        ));
        assert!(noise_variance(&baseline(0.0), Kernel::Subordination, &cfg()).is_err());
    }

    #[test]
    fn gaussian_capacity_values() {
        let cap = CapacityConfig::new(200.0).unwrap();
        let c = gaussian_capacity(&cap, 400.0).unwrap();
        assert_relative_eq!(
            c,
            0.5 * (1.0f64 + 40000.0 / 3.0 / 400.0).ln(),
            max_relative = 1e-14
        );
        assert!((c - 1.768).abs() < 1e-3);
        assert_relative_eq!(
            gaussian_capacity(&cap, cap.signal_power()).unwrap(),
            0.5 * 2f64.ln()
        );
        assert_eq!(gaussian_capacity(&cap, f64::INFINITY).unwrap(), 0.0);
        assert!(gaussian_capacity(&cap, 0.0).is_err());
    }

    #[test]
    fn cauchy_capacity_values() {
        let cap = CapacityConfig::new(200.0).unwrap();
        assert_eq!(cauchy_capacity(&cap, 10.0).unwrap(), 20f64.ln());
        let e = CapacityConfig::new(10.0 * std::f64::consts::E).unwrap();
        assert_relative_eq!(
            cauchy_capacity(&e, 10.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        assert!(cauchy_capacity(&CapacityConfig::new(10.0).unwrap(), 10.0).is_err());
        assert!(CapacityConfig::new(0.0).is_err());
    }

    #[test]
    fn shaping_loss_values() {
        let cap = CapacityConfig::new(200.0).unwrap();
        let s = shaping_loss(&cap, 10.0, 20f64.ln()).unwrap();
        assert_eq!(s.asymptotic, (2.0 * PI).ln());
        assert!(s.numeric.abs() < 1e-15);
        let (lo, hi) =
            uniform_information_bracket(&CapacityConfig::new(20.0 * PI * 10.0).unwrap(), 10.0);
        assert_relative_eq!(lo, 10f64.ln(), max_relative = 1e-14);
        assert!(hi > lo);
    }

    #[test]
    fn cauchy_interference_values() {
        let p = baseline(0.0);
        let at = |r| interference_probability(&p, Kernel::CauchyLimit, r, &cfg()).unwrap();
        assert_relative_eq!(at(10.0), 0.5, max_relative = 1e-15);
        assert_eq!(at(0.0), 1.0);
        let far = at(1000.0);
        assert!((far / (20.0 / (PI * 1000.0)) - 1.0).abs() < 1e-3);
        assert!(interference_probability(&p, Kernel::CauchyLimit, -1.0, &cfg()).is_err());
    }

    #[test]
    fn drift_truncates_interference() {
        let p = baseline(5.0);
        let sub = interference_probability(&p, Kernel::Subordination, 400.0, &cfg()).unwrap();
        let cauchy = cauchy_interference(10.0, 400.0);
        assert!(sub * 10.0 < cauchy);
        let whole = interference_probability(&p, Kernel::Subordination, 0.0, &cfg()).unwrap();
        assert!((whole - 1.0).abs() < 1e-8);
    }

    #[test]
    fn bivariate_interference_values() {
        assert_eq!(bivariate_interference(10.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            bivariate_interference(10.0, 10.0).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-15
        );
        let r = 1e6;
        assert_relative_eq!(
            bivariate_interference(10.0, r).unwrap(),
            10.0 / r,
            max_relative = 1e-9
        );
        assert!(bivariate_interference(10.0, -1.0).is_err());
    }

    #[test]
    fn mi_vanishes_with_amplitude() {
        let p = baseline(5.0);
        let mut prev = f64::INFINITY;
        for a in [1.0, 0.1, 0.01] {
            let mi = mutual_information_uniform(
                &p,
                Kernel::Subordination,
                &CapacityConfig::new(a).unwrap(),
                &cfg(),
            )
            .unwrap();
            assert!(mi >= 0.0 && mi < prev, "A = {a}: {mi}");
            prev = mi;
        }
        assert!(prev < 1e-4, "{prev}");
    }

    #[test]
    fn log_grid() {
        let g = log_spaced(1e-3, 20.0, 40).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[39], 20.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(log_spaced(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn sweeps_validate_grids() {
        let cap = CapacityConfig::new(200.0).unwrap();
        let p = baseline(1.0);
        assert!(capacity_sweep(&p, Kernel::Subordination, &cap, &[1.0, 0.5], &cfg()).is_err());
        assert!(capacity_sweep(&p, Kernel::Subordination, &cap, &[0.0, 1.0], &cfg()).is_err());
        assert!(
            interference_sweep(&p, Kernel::Subordination, &[2.0, 1.0], &[1.0], &cfg()).is_err()
        );
        assert!(interference_sweep(&p, Kernel::Subordination, &[1.0], &[-1.0], &cfg()).is_err());
    }
}
