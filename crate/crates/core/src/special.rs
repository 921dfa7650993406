//! Modified Bessel function of the second kind, order one.
//!
//! Three evaluation regimes:
//!
//! * `z <= 2`: the convergent ascending series
//!   `K1(z) = 1/z + ln(z/2) I1(z) - (z/4) sum_k [psi(k+1) + psi(k+2)] (z^2/4)^k / (k! (k+1)!)`,
//!   kept in the form `1/z * (1 + z * rest)` so the log variant never forms `1/z`.
//! * `2 < z < 30`: Steed's continued fraction (Temme's CF2) for the scaled pair
//!   `e^z K0`, `e^z K1`.
//! * `z >= 30`: the Hankel asymptotic series for `e^z K1`, truncated at machine
//!   precision.
//!
//! Every variant returns `Err(Error::Domain)` for `z <= 0`, NaN or infinity.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Branch point between the ascending series and the continued fraction.
pub const SERIES_LIMIT: f64 = 2.0;
/// Start of the asymptotic branch.
pub const ASYMPTOTIC_LIMIT: f64 = 30.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
const MAX_ITER: usize = 10_000;

/// One evaluation of `K1` in all three representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval<T> {
    pub z: T,
    pub value: T,
    pub log_value: T,
    /// `e^z K1(z)`
    pub scaled_value: T,
}

impl<T: Real> BesselEval<T> {
    pub fn new(z: T) -> Result<Self> {
        check_domain(z)?;
        let scaled_value = bessel_k1_scaled(z)?;
        Ok(Self {
            z,
            value: bessel_k1(z)?,
            log_value: log_bessel_k1(z)?,
            scaled_value,
        })
    }
}

fn check_domain<T: Real>(z: T) -> Result<()> {
    if z.is_nan() || z.is_infinite() || z <= T::zero() {
        return Err(Error::Domain(format!(
            "K1 requires a positive finite argument, got {}",
            z
        )));
    }
    Ok(())
}

/// `K1(z)`. Underflows to zero once `e^-z` does; use the scaled or log
/// variants there.
pub fn bessel_k1<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        let zr = z * series_rest(z);
        Ok((T::one() + zr) / z)
    } else {
        Ok(large_scaled(z) * (-z).exp())
    }
}

/// `e^z K1(z)`.
pub fn bessel_k1_scaled<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        let zr = z * series_rest(z);
        Ok((T::one() + zr) / z * z.exp())
    } else {
        Ok(large_scaled(z))
    }
}

/// `ln K1(z)`, finite for every positive finite `z` representable in `T`.
pub fn log_bessel_k1<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    if z <= T::lit(SERIES_LIMIT) {
        Ok((z * series_rest(z)).ln_1p() - z.ln())
    } else {
        Ok(large_scaled(z).ln() - z)
    }
}

/// `K1(z) - 1/z` on `0 < z <= 2` from the ascending series.
fn series_rest<T: Real>(z: T) -> T {
    let two = T::lit(2.0);
    let quarter_z2 = z * z / T::lit(4.0);
    let gamma2 = T::lit(2.0 * EULER_GAMMA);

    // t_k = (z^2/4)^k / (k! (k+1)!); h_k is the k-th harmonic number.
    let mut term = T::one();
    let mut harmonic = T::zero();
    let mut s_i1 = T::zero();
    let mut s_psi = T::zero();
    for k in 0..MAX_ITER {
        let kf = T::from_usize(k);
        let next_harmonic = harmonic + T::one() / (kf + T::one());
        s_i1 = s_i1 + term;
        s_psi = s_psi + (harmonic + next_harmonic - gamma2) * term;
        if term.abs() <= T::epsilon() * T::lit(1e-3) * s_i1.abs() {
            break;
        }
        term = term * quarter_z2 / ((kf + T::one()) * (kf + two));
        harmonic = next_harmonic;
    }
    let half_z = z / two;
    half_z * (half_z.ln() * s_i1 - s_psi / two)
}

/// Ascending-series branch of `e^z K1(z)`, exposed so callers can check
/// agreement with the other branches on either side of a branch point.
pub fn k1_scaled_series<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    Ok((T::one() + z * series_rest(z)) / z * z.exp())
}

/// Continued-fraction branch of `e^z K1(z)`; accurate for `z >= 2`.
pub fn k1_scaled_continued_fraction<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    Ok(continued_fraction_scaled(z))
}

/// Asymptotic branch of `e^z K1(z)`; accurate for `z >= 30`.
pub fn k1_scaled_asymptotic<T: Real>(z: T) -> Result<T> {
    check_domain(z)?;
    Ok(asymptotic_scaled(z))
}

fn large_scaled<T: Real>(z: T) -> T {
    if z >= T::lit(ASYMPTOTIC_LIMIT) {
        asymptotic_scaled(z)
    } else {
        continued_fraction_scaled(z)
    }
}

/// Steed's method for `e^z K1(z)`, valid for `z >= 2`.
fn continued_fraction_scaled<T: Real>(x: T) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let a1 = T::lit(0.25);

    let mut b = two * (one + x);
    let mut d = one / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = T::zero();
    let mut q2 = one;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;

    for i in 2..MAX_ITER {
        let fi = T::from_usize(i);
        a = a - two * (fi - one);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = one / (b + a * d);
        delh = (b * d - one) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < T::epsilon() {
            break;
        }
    }
    let h = a1 * h;
    let k0_scaled = (T::PI() / (two * x)).sqrt() / s;
    k0_scaled * (x + half - h) / x
}

/// Hankel expansion `sqrt(pi / 2z) * sum_k a_k(1) / z^k`.
fn asymptotic_scaled<T: Real>(z: T) -> T {
    let mu = T::lit(4.0);
    let eight_z = T::lit(8.0) * z;
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..64 {
        let kf = T::from_usize(k);
        let odd = T::lit(2.0) * kf - T::one();
        let next = term * (mu - odd * odd) / (kf * eight_z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    (T::PI() / (T::lit(2.0) * z)).sqrt() * sum
}
