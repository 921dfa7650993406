//! Tabulated cumulative distribution of a symmetric noise kernel.
//!
//! Only the half line is stored: survival masses `S(n) = P(N > n)` on a grid
//! `0 = n_0 < ... < n_max`, linear on `[0, lambda]` and log-spaced beyond.
//! Between nodes the survival function is a monotone cubic Hermite
//! interpolant whose node slopes are the exact density (Fritsch-Carlson
//! limited). Past `n_max` an analytic closure takes over: exponential with the
//! kernel's tail rate, or algebraic for the undrifted laws.
//!
//! Working with survival masses instead of `F` keeps full relative precision
//! in both tails, which the output-entropy integrals depend on.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{log_pdf, ChannelParams, Kernel};
use crate::quadrature::{integrate, integrate_tail, QuadConfig};
use crate::scalar::Real;

/// Default total node count across `[-n_max, n_max]`.
pub const DEFAULT_NODES: usize = 4096;
/// Two-sided probability mass allowed beyond the tabulated grid.
pub const TAIL_MASS_TARGET: f64 = 1e-10;
/// `|total_mass - 1|` below which a tabulation counts as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// How the survival function is continued past the last node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClosure<T> {
    /// `S(n) = S(n_max) exp(-rate (n - n_max))`
    Exponential(T),
    /// `S(n) = S(n_max) (n_max / n)^power`
    Algebraic(T),
}

impl<T: Real> TailClosure<T> {
    fn for_kernel(params: &ChannelParams<T>, kernel: Kernel) -> Self {
        let base = params.drift() / params.sigma2();
        let two = T::lit(2.0);
        match kernel {
            Kernel::ExactEq2 | Kernel::TailAsymptotic => TailClosure::Exponential(two * base),
            Kernel::Subordination => TailClosure::Exponential(base),
            Kernel::CoreAsymptotic if base > T::zero() => TailClosure::Exponential(base),
            Kernel::CoreAsymptotic | Kernel::CauchyLimit => TailClosure::Algebraic(T::one()),
            Kernel::BivariateCauchy => TailClosure::Algebraic(two),
        }
    }

    /// Decay rate for the exponential closure, zero for algebraic tails.
    pub fn rate(&self) -> T {
        match *self {
            TailClosure::Exponential(r) => r,
            TailClosure::Algebraic(_) => T::zero(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TabulatedCdf<T> {
    params: ChannelParams<T>,
    kernel: Kernel,
    nodes: Vec<T>,
    survival: Vec<T>,
    // Hermite slopes of S at the (left, right) end of each interval
    slopes: Vec<(T, T)>,
    closure: TailClosure<T>,
    total_mass: T,
}

fn density<T: Real>(params: &ChannelParams<T>, kernel: Kernel) -> impl Fn(T) -> T + Sync + '_ {
    move |n| log_pdf(params, kernel, n).map(T::exp).unwrap_or(T::nan())
}

/// One-sided mass beyond `n` by direct quadrature.
pub(crate) fn tail_mass<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    n: T,
    cfg: &QuadConfig<T>,
) -> Result<T> {
    let scale = n.abs().max(params.lambda());
    integrate_tail(density(params, kernel), n, scale, cfg)?.require()
}

/// Smallest `lambda * 2^k` whose two-sided residual mass is below `target`.
fn find_cutoff<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    target: T,
    cfg: &QuadConfig<T>,
) -> Result<(T, T)> {
    let mut n = params.lambda();
    for _ in 0..200 {
        let s = tail_mass(params, kernel, n, cfg)?;
        if T::lit(2.0) * s <= target {
            return Ok((n, s));
        }
        n = n * T::lit(2.0);
    }
    Err(Error::Domain(format!(
        "no finite cutoff leaves less than {target} of the {kernel} mass"
    )))
}

fn half_grid<T: Real>(lambda: T, n_max: T, half_nodes: usize) -> Vec<T> {
    let linear = if n_max <= T::lit(2.0) * lambda {
        half_nodes
    } else {
        (half_nodes / 8).max(2)
    };
    let linear_end = if linear == half_nodes { n_max } else { lambda };
    let mut nodes: Vec<T> = (0..linear)
        .map(|i| linear_end * T::from_usize(i) / T::from_usize(linear - 1))
        .collect();
    let log_count = half_nodes - linear;
    if log_count > 0 {
        let ratio = (n_max / lambda).ln() / T::from_usize(log_count);
        for i in 1..=log_count {
            nodes.push(lambda * (ratio * T::from_usize(i)).exp());
        }
        *nodes.last_mut().expect("non-empty grid") = n_max;
    }
    nodes
}

/// Fritsch-Carlson limited slopes for a decreasing sequence with exact node derivatives.
fn limited_slopes<T: Real>(nodes: &[T], values: &[T], derivs: &[T]) -> Vec<(T, T)> {
    (0..nodes.len() - 1)
        .map(|i| {
            let h = nodes[i + 1] - nodes[i];
            let delta = (values[i + 1] - values[i]) / h;
            let (mut dl, mut dr) = (derivs[i], derivs[i + 1]);
            if delta == T::zero() {
                return (T::zero(), T::zero());
            }
            // slopes must share the secant's sign
            if dl / delta < T::zero() {
                dl = T::zero();
            }
            if dr / delta < T::zero() {
                dr = T::zero();
            }
            let (a, b) = (dl / delta, dr / delta);
            let r2 = a * a + b * b;
            if r2 > T::lit(9.0) {
                let tau = T::lit(3.0) / r2.sqrt();
                dl = tau * a * delta;
                dr = tau * b * delta;
            }
            (dl, dr)
        })
        .collect()
}

/// Tabulates the kernel's CDF with the default node count.
pub fn build_cdf<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
) -> Result<TabulatedCdf<T>> {
    build_cdf_with(params, kernel, cfg, DEFAULT_NODES)
}

pub fn build_cdf_with<T: Real>(
    params: &ChannelParams<T>,
    kernel: Kernel,
    cfg: &QuadConfig<T>,
    nodes: usize,
) -> Result<TabulatedCdf<T>> {
    if nodes < 8 {
        return Err(Error::Domain(format!("need at least 8 nodes, got {nodes}")));
    }
    // surfaces incompatible kernel/params before any quadrature
    log_pdf(params, kernel, T::zero())?;

    let (n_max, s_max) = find_cutoff(params, kernel, T::lit(TAIL_MASS_TARGET), cfg)?;
    let grid = half_grid(params.lambda(), n_max, nodes / 2 + 1);
    let intervals = grid.len() - 1;
    let panel_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / T::from_usize(intervals),
        ..*cfg
    };
    let f = density(params, kernel);

    let pieces: Vec<T> = grid
        .par_windows(2)
        .map(|w| integrate(&f, w[0], w[1], &panel_cfg)?.require())
        .collect::<Result<_>>()?;

    let mut survival = vec![T::zero(); grid.len()];
    survival[intervals] = s_max;
    for i in (0..intervals).rev() {
        survival[i] = survival[i + 1] + pieces[i];
    }
    let derivs: Vec<T> = grid.iter().map(|&n| -f(n)).collect();
    let slopes = limited_slopes(&grid, &survival, &derivs);
    let total_mass = T::lit(2.0) * survival[0];

    Ok(TabulatedCdf {
        params: *params,
        kernel,
        nodes: grid,
        survival,
        slopes,
        closure: TailClosure::for_kernel(params, kernel),
        total_mass,
    })
}

impl<T: Real> TabulatedCdf<T> {
    pub fn params(&self) -> &ChannelParams<T> {
        &self.params
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn total_mass(&self) -> T {
        self.total_mass
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass - T::one()).abs() <= T::lit(NORMALIZATION_TOL)
    }

    /// `Err(Unnormalized)` unless the tabulated mass is within tolerance of one.
    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::Unnormalized(self.total_mass.as_f64()))
        }
    }

    /// Largest tabulated offset; beyond it the analytic closure applies.
    pub fn n_max(&self) -> T {
        *self.nodes.last().expect("non-empty grid")
    }

    pub fn tail_closure(&self) -> TailClosure<T> {
        self.closure
    }

    /// Exponential rate used past `n_max` (zero for algebraic closure).
    pub fn tail_rate(&self) -> T {
        self.closure.rate()
    }

    /// Non-negative half of the grid.
    pub fn half_grid(&self) -> &[T] {
        &self.nodes
    }

    /// Full grid over `[-n_max, n_max]`.
    pub fn grid(&self) -> Vec<T> {
        self.nodes
            .iter()
            .rev()
            .map(|&n| -n)
            .chain(self.nodes.iter().skip(1).copied())
            .collect()
    }

    /// `F` at every node of [`TabulatedCdf::grid`].
    pub fn values(&self) -> Vec<T> {
        self.grid().into_iter().map(|n| self.cdf(n)).collect()
    }

    /// `P(N > x)` for `x >= 0`.
    fn upper(&self, x: T) -> T {
        let n_max = self.n_max();
        let last = *self.survival.last().expect("non-empty grid");
        if x >= n_max {
            return match self.closure {
                TailClosure::Exponential(rate) => last * (-(rate * (x - n_max))).exp(),
                TailClosure::Algebraic(power) => last * (n_max / x).powf(power),
            };
        }
        let i = self.nodes.partition_point(|&n| n <= x).saturating_sub(1);
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.survival[i], self.survival[i + 1]);
        let (d0, d1) = self.slopes[i];
        let t2 = t * t;
        let t3 = t2 * t;
        let two = T::lit(2.0);
        let three = T::lit(3.0);
        let h00 = two * t3 - three * t2 + T::one();
        let h10 = t3 - two * t2 + t;
        let h01 = three * t2 - two * t3;
        let h11 = t3 - t2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// `P(N > n)`.
    pub fn survival(&self, n: T) -> T {
        if n >= T::zero() {
            self.upper(n)
        } else {
            self.total_mass - self.upper(-n)
        }
    }

    /// `F(n) = P(N <= n)` under the kernel's own normalization.
    pub fn cdf(&self, n: T) -> T {
        if n >= T::zero() {
            self.total_mass - self.upper(n)
        } else {
            self.upper(-n)
        }
    }

    /// `F(b) - F(a)` for `a <= b`, computed without cancellation in either tail.
    pub fn mass_between(&self, a: T, b: T) -> T {
        if a >= T::zero() {
            self.upper(a) - self.upper(b)
        } else if b <= T::zero() {
            self.upper(-b) - self.upper(-a)
        } else {
            self.total_mass - self.upper(b) - self.upper(-a)
        }
    }

    /// Explicitly rescaled copy with unit total mass.
    pub fn renormalized(&self) -> Self {
        let scale = T::one() / self.total_mass;
        let mut out = self.clone();
        for s in &mut out.survival {
            *s = *s * scale;
        }
        for (l, r) in &mut out.slopes {
            *l = *l * scale;
            *r = *r * scale;
        }
        out.total_mass = T::one();
        out
    }

    pub fn quantile(&self, p: T) -> Result<T> {
        quantile(self, p)
    }
}

/// Inverse of a normalized tabulated CDF by bisection on the interpolant.
pub fn quantile<T: Real>(cdf: &TabulatedCdf<T>, p: T) -> Result<T> {
    cdf.require_normalized()?;
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(format!("quantile needs 0 < p < 1, got {p}")));
    }
    let half = cdf.total_mass / T::lit(2.0);
    if p == half {
        return Ok(T::zero());
    }
    // solve P(N > x) = target on x >= 0, then mirror
    let (target, sign) = if p > half {
        (cdf.total_mass - p, T::one())
    } else {
        (p, -T::one())
    };
    Ok(sign * invert_upper(cdf, target)?)
}

/// Offset `x >= 0` with `P(N > x) = s`, for `0 < s <= total_mass / 2`.
///
/// Working in survival space keeps full relative precision far into the
/// tail, where `1 - s` is no longer representable.
pub fn upper_quantile<T: Real>(cdf: &TabulatedCdf<T>, s: T) -> Result<T> {
    cdf.require_normalized()?;
    if !(s > T::zero() && s <= cdf.total_mass / T::lit(2.0)) {
        return Err(Error::Domain(format!(
            "upper quantile needs 0 < s <= 1/2, got {s}"
        )));
    }
    invert_upper(cdf, s)
}

fn invert_upper<T: Real>(cdf: &TabulatedCdf<T>, target: T) -> Result<T> {
    let mut lo = T::zero();
    let mut hi = cdf.n_max();
    while cdf.upper(hi) > target {
        lo = hi;
        hi = hi * T::lit(2.0);
        if !hi.is_finite() {
            return Err(Error::Domain(format!(
                "survival {target} beyond representable range"
            )));
        }
    }
    for _ in 0..2000 {
        let mid = (lo + hi) / T::lit(2.0);
        if !(mid > lo && mid < hi) {
            break;
        }
        if cdf.upper(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}
