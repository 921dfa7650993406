//! Adaptive Gauss-Kronrod integration.
//!
//! Panels are integrated with the 15-point Kronrod rule and its embedded
//! 7-point Gauss rule; the panel with the largest error estimate is bisected
//! until the global estimate meets the tolerance or the subdivision budget
//! runs out. Error estimation follows QUADPACK's `qk15`.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::lit(1e-10),
            // never ask for less than the rule's roundoff floor
            rel_tol: T::lit(1e-8).max(T::lit(100.0) * T::epsilon()),
            max_subdivisions: 2000,
        }
    }
}

impl<T: Real> QuadConfig<T> {
    pub fn new(abs_tol: T, rel_tol: T, max_subdivisions: usize) -> Result<Self> {
        let ok = abs_tol >= T::zero()
            && rel_tol >= T::zero()
            && (abs_tol > T::zero() || rel_tol > T::zero())
            && max_subdivisions > 0;
        if !ok {
            return Err(Error::Domain(format!(
                "quadrature tolerances must be >= 0 with one > 0 (abs {abs_tol}, rel {rel_tol}, max {max_subdivisions})"
            )));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }

    pub fn tolerance(&self, value: T) -> T {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: T,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl<T: Real> QuadResult<T> {
    /// The value if converged, `Error::NonConvergence` otherwise.
    pub fn require(self) -> Result<T> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NonConvergence {
                value: self.value.as_f64(),
                error_estimate: self.error_estimate.as_f64(),
                subdivisions: self.subdivisions_used,
            })
        }
    }

    fn zero() -> Self {
        Self {
            value: T::zero(),
            error_estimate: T::zero(),
            subdivisions_used: 0,
            converged: true,
        }
    }

    fn add(self, other: Self) -> Self {
        Self {
            value: self.value + other.value,
            error_estimate: self.error_estimate + other.error_estimate,
            subdivisions_used: self.subdivisions_used + other.subdivisions_used,
            converged: self.converged && other.converged,
        }
    }
}

#[derive(Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn eval<T: Real, F: FnMut(T) -> T>(f: &mut F, x: T) -> Result<T> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFiniteIntegrand(x.as_f64()))
    }
}

fn kronrod15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Result<Panel<T>> {
    let center = (a + b) / T::lit(2.0);
    let half = (b - a) / T::lit(2.0);
    let f_center = eval(f, center)?;

    let mut res_k = f_center * T::lit(WGK[7]);
    let mut res_g = f_center * T::lit(WG[3]);
    let mut res_abs = res_k.abs();
    let mut fv = [(T::zero(), T::zero()); 7];

    for (j, slot) in fv.iter_mut().enumerate() {
        let dx = half * T::lit(XGK[j]);
        let f1 = eval(f, center - dx)?;
        let f2 = eval(f, center + dx)?;
        *slot = (f1, f2);
        let wk = T::lit(WGK[j]);
        res_k = res_k + wk * (f1 + f2);
        res_abs = res_abs + wk * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g = res_g + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }

    let mean = res_k / T::lit(2.0);
    let mut res_asc = T::lit(WGK[7]) * (f_center - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        res_asc = res_asc + T::lit(WGK[j]) * ((f1 - mean).abs() + (f2 - mean).abs());
    }

    let hl = half.abs();
    let value = res_k * half;
    let res_abs = res_abs * hl;
    let res_asc = res_asc * hl;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = res_asc * scale.min(T::one());
    }
    let floor = T::lit(50.0) * T::epsilon() * res_abs;
    if res_abs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        err = err.max(floor);
    }
    Ok(Panel {
        a,
        b,
        value,
        error: err,
    })
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Non-convergence is reported through `converged = false`, never as a
/// silently accepted value; a non-finite integrand value is an error.
pub fn integrate<T, F>(mut f: F, a: T, b: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!(
            "integration needs finite a < b, got [{a}, {b}]"
        )));
    }
    let first = kronrod15(&mut f, a, b)?;
    let mut panels = vec![first];
    let mut total = first.value;
    let mut total_err = first.error;
    let mut subdivisions = 1;

    while total_err > cfg.tolerance(total) && subdivisions < cfg.max_subdivisions {
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |acc, (i, p)| {
                if p.error > acc.1 {
                    (i, p.error)
                } else {
                    acc
                }
            });
        let p = panels[worst];
        let mid = (p.a + p.b) / T::lit(2.0);
        if !(mid > p.a && mid < p.b) {
            break;
        }
        let left = kronrod15(&mut f, p.a, mid)?;
        let right = kronrod15(&mut f, mid, p.b)?;
        total = total - p.value + left.value + right.value;
        total_err = total_err - p.error + left.error + right.error;
        panels[worst] = left;
        panels.push(right);
        subdivisions += 1;
    }

    // re-sum to shed drift from the running updates
    total = panels.iter().fold(T::zero(), |s, p| s + p.value);
    total_err = panels.iter().fold(T::zero(), |s, p| s + p.error);
    Ok(QuadResult {
        value: total,
        error_estimate: total_err,
        subdivisions_used: subdivisions,
        converged: total_err <= cfg.tolerance(total),
    })
}

/// `integral_a^inf f` through `x = a + t / (1 - t)`, `t in [0, 1)`.
pub fn integrate_semi_infinite<T, F>(f: F, a: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate_semi_infinite_scaled(f, a, T::one(), cfg)
}

/// As [`integrate_semi_infinite`] with `x = a + scale * t / (1 - t)`, which
/// keeps the mass away from `t = 1` when `f` varies on a length `scale`.
pub fn integrate_semi_infinite_scaled<T, F>(
    mut f: F,
    a: T,
    scale: T,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !a.is_finite() || !(scale > T::zero() && scale.is_finite()) {
        return Err(Error::Domain(format!(
            "semi-infinite integration needs finite a and scale > 0, got {a}, {scale}"
        )));
    }
    let one = T::one();
    let g = |t: T| {
        let s = one - t;
        let x = a + scale * t / s;
        if !x.is_finite() {
            return T::zero();
        }
        let jac = scale / (s * s);
        let y = f(x);
        if y == T::zero() {
            T::zero()
        } else {
            y * jac
        }
    };
    integrate(g, T::zero(), one, cfg)
}

/// Sum of [`integrate`] over consecutive panels `[p_i, p_{i+1}]`.
/// Duplicate or decreasing breakpoints are skipped.
pub fn integrate_breakpoints<T, F>(
    mut f: F,
    points: &[T],
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if points.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    let mut acc = QuadResult::zero();
    for w in points.windows(2) {
        if w[1] > w[0] {
            acc = acc.add(integrate(&mut f, w[0], w[1], cfg)?);
        }
    }
    Ok(acc)
}

/// `integral_a^inf f` for an eventually decaying `f` whose features sit on the
/// length `scale`: geometrically growing panels `a + scale (2^k - 1)` until a
/// panel contributes nothing measurable, then a scaled semi-infinite remainder.
pub fn integrate_tail<T, F>(mut f: F, a: T, scale: T, cfg: &QuadConfig<T>) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(scale > T::zero()) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "tail integration needs scale > 0, got {scale}"
        )));
    }
    let mut acc = QuadResult::zero();
    let mut lo = a;
    let mut width = scale;
    for _ in 0..200 {
        let hi = lo + width;
        let part = integrate(&mut f, lo, hi, cfg)?;
        acc = acc.add(part);
        lo = hi;
        let negligible = part.value.abs() <= T::epsilon() * acc.value.abs()
            || part.value.abs() <= cfg.abs_tol * T::lit(1e-6);
        if negligible {
            break;
        }
        width = width * T::lit(2.0);
    }
    let rest = integrate_semi_infinite_scaled(&mut f, lo, width, cfg)?;
    Ok(acc.add(rest))
}
