//! Exact sampling of the FAP noise by first-passage subordination.
//!
//! The longitudinal coordinate of a drifted Brownian particle first reaches
//! distance `lambda` after an inverse-Gaussian time `T` (Lévy when `v = 0`);
//! the lateral coordinate is an independent Brownian motion, so the arrival
//! offset is `N = sigma sqrt(T) Z`.
//!
//! Random numbers come from xoshiro256++ seeded through SplitMix64, with
//! uniforms built from the top 53 bits and normals from Marsaglia's polar
//! method. Large runs are split into fixed-size chunks, chunk `i` seeded with
//! `seed ^ i`, so a run is bit-identical regardless of thread count.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rayon::prelude::*;

use crate::cdf::TabulatedCdf;
use crate::error::{Error, Result};
use crate::kernels::{weighted_slope, ChannelParams};
use crate::scalar::Real;

/// Samples per independently seeded chunk.
pub const CHUNK_SIZE: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Domain(
                "Monte-Carlo run needs at least one sample".into(),
            ));
        }
        Ok(Self { samples, seed })
    }
}

/// Deterministic generator used by every sampler in the crate.
#[derive(Debug, Clone)]
pub struct FapRng {
    inner: Xoshiro256PlusPlus,
    spare_normal: Option<f64>,
}

impl FapRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    /// Generator for chunk `index` of a run seeded with `seed`.
    pub fn for_chunk(seed: u64, index: u64) -> Self {
        Self::seed_from_u64(seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal by the polar method; the second variate of each
    /// accepted pair is returned on the next call.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }
}

/// One first-passage time across distance `lambda`.
///
/// Inverse Gaussian with mean `lambda / v` and shape `lambda^2 / sigma2`
/// (Michael-Schucany-Haas) for `v > 0`; Lévy `lambda^2 / (sigma2 Z^2)` for `v = 0`.
pub fn sample_first_passage_time<T: Real>(params: &ChannelParams<T>, rng: &mut FapRng) -> T {
    let lambda = params.lambda();
    let sigma2 = params.sigma2();
    let v = params.drift();
    let z = T::lit(rng.normal());
    if v == T::zero() {
        return lambda * lambda / (sigma2 * z * z);
    }
    let mean = lambda / v;
    let shape = lambda * lambda / sigma2;
    // x = mu + mu^2 y / (2 shape) - (mu / (2 shape)) sqrt(4 mu shape y + mu^2 y^2),
    // rewritten as mu / (1 + w + sqrt(w (w + 2))) with w = mu y / (2 shape)
    let w = mean * z * z / (T::lit(2.0) * shape);
    let x = mean / (T::one() + w + (w * (w + T::lit(2.0))).sqrt());
    let u = T::lit(rng.uniform());
    if u <= mean / (mean + x) {
        x
    } else {
        mean * mean / x
    }
}

/// One lateral arrival offset `N = sigma sqrt(T) Z'`.
pub fn sample_fap<T: Real>(params: &ChannelParams<T>, rng: &mut FapRng) -> T {
    let t = sample_first_passage_time(params, rng);
    (params.sigma2() * t).sqrt() * T::lit(rng.normal())
}

fn run_chunks<T, F>(cfg: &McConfig, draw: F) -> Vec<T>
where
    T: Real,
    F: Fn(&mut FapRng) -> T + Sync,
{
    let chunks = cfg.samples.div_ceil(CHUNK_SIZE);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let len = CHUNK_SIZE.min(cfg.samples - i * CHUNK_SIZE);
            let mut rng = FapRng::for_chunk(cfg.seed, i as u64);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}

/// `cfg.samples` offsets in a reproducible order.
pub fn sample_fap_batch<T: Real>(params: &ChannelParams<T>, cfg: &McConfig) -> Vec<T> {
    run_chunks(cfg, |rng| sample_fap(params, rng))
}

/// `cfg.samples` first-passage times in a reproducible order.
pub fn sample_first_passage_batch<T: Real>(params: &ChannelParams<T>, cfg: &McConfig) -> Vec<T> {
    run_chunks(cfg, |rng| sample_first_passage_time(params, rng))
}

/// Empirical summary of a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStats<T> {
    pub count: usize,
    pub mean: T,
    pub variance: T,
    pub median_abs: T,
    /// Lower and upper quartile of the signed samples.
    pub quartiles: (T, T),
    /// `(r, #{|N| > r})` for every requested radius.
    pub exceedances: Vec<(T, usize)>,
    pub bin_edges: Vec<T>,
    /// `bin_edges.len() + 1` counts; the first and last bins are open-ended.
    pub counts: Vec<usize>,
}

impl<T: Real> SampleStats<T> {
    pub fn exceedance_fraction(&self, i: usize) -> T {
        T::from_usize(self.exceedances[i].1) / T::from_usize(self.count)
    }
}

fn sorted_copy<T: Real>(xs: impl Iterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = xs.collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    v
}

fn order_statistic<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn summarize<T: Real>(samples: &[T], bin_edges: &[T], radii: &[T]) -> Result<SampleStats<T>> {
    if samples.is_empty() {
        return Err(Error::Domain("cannot summarize an empty sample set".into()));
    }
    if !bin_edges.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain(
            "histogram edges must be strictly increasing".into(),
        ));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let count = samples.len();
    let n = T::from_usize(count);
    let mean = samples.iter().fold(T::zero(), |s, &x| s + x) / n;
    let variance = if count > 1 {
        samples
            .iter()
            .fold(T::zero(), |s, &x| s + (x - mean) * (x - mean))
            / T::from_usize(count - 1)
    } else {
        T::zero()
    };

    let sorted = sorted_copy(samples.iter().copied());
    let sorted_abs = sorted_copy(samples.iter().map(|x| x.abs()));
    let exceedances = radii
        .iter()
        .map(|&r| (r, count - sorted_abs.partition_point(|&a| a <= r)))
        .collect();

    let mut counts = vec![0usize; bin_edges.len() + 1];
    for &x in samples {
        counts[bin_edges.partition_point(|&e| e <= x)] += 1;
    }

    Ok(SampleStats {
        count,
        mean,
        variance,
        median_abs: order_statistic(&sorted_abs, 0.5),
        quartiles: (
            order_statistic(&sorted, 0.25),
            order_statistic(&sorted, 0.75),
        ),
        exceedances,
        bin_edges: bin_edges.to_vec(),
        counts,
    })
}

/// Kolmogorov-Smirnov distance between sorted samples and a normalized CDF.
pub fn ks_statistic<T: Real>(sorted: &[T], cdf: &TabulatedCdf<T>) -> Result<T> {
    cdf.require_normalized()?;
    if sorted.is_empty() {
        return Err(Error::Domain(
            "KS statistic needs at least one sample".into(),
        ));
    }
    if !sorted.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::Domain("KS statistic needs sorted samples".into()));
    }
    let n = T::from_usize(sorted.len());
    let d = sorted
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf.cdf(x);
            let below = f - T::from_usize(i) / n;
            let above = T::from_usize(i + 1) / n - f;
            below.max(above)
        })
        .reduce(T::zero, T::max);
    Ok(d)
}

/// Exponential tail rate fitted to the histogram of `|N|` on `[from, to]`,
/// with the `n^{-3/2}` prefactor of the asymptotic tail removed and each bin
/// weighted by its count. `None` when fewer than two bins are populated.
pub fn fitted_sample_tail_rate<T: Real>(samples: &[T], from: T, to: T, bins: usize) -> Option<T> {
    if !(from > T::zero() && to > from) || bins < 2 {
        return None;
    }
    let width = (to - from) / T::from_usize(bins);
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let a = x.abs();
        if a >= from && a < to {
            let i = ((a - from) / width)
                .to_usize()
                .unwrap_or(bins - 1)
                .min(bins - 1);
            counts[i] += 1;
        }
    }
    let points: Vec<(T, T, T)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| {
            let center = from + width * (T::from_usize(i) + T::lit(0.5));
            let c = T::from_usize(c);
            (center, c.ln() + T::lit(1.5) * center.ln(), c)
        })
        .collect();
    if points.len() < 2 {
        return None;
    }
    weighted_slope(&points).map(|s| -s)
}
