//! Seeded Monte Carlo draws from gridded densities, and histogramming.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

/// Derives an independent stream seed, so per-phase batches stay
/// reproducible whatever order they run in.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 of the pair
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Inverse-CDF sampler for a density tabulated on increasing nodes. The CDF
/// is built with the trapezoid rule and inverted linearly inside each bin.
#[derive(Debug, Clone)]
pub struct InverseCdfSampler<T> {
    nodes: Vec<T>,
    cdf: Vec<T>,
}

impl<T: Real> InverseCdfSampler<T> {
    pub fn new(nodes: &[T], density: &[T]) -> Result<Self> {
        if nodes.len() != density.len() || nodes.len() < 2 {
            return Err(Error::Malformed("sampler needs matching node and density arrays".into()));
        }
        if density.iter().any(|d| !d.is_finite() || *d < T::zero()) {
            return Err(Error::Malformed("density must be finite and nonnegative".into()));
        }
        let mut cdf = Vec::with_capacity(nodes.len());
        cdf.push(T::zero());
        for k in 1..nodes.len() {
            let w = nodes[k] - nodes[k - 1];
            if w <= T::zero() {
                return Err(Error::Malformed("sampler nodes must increase".into()));
            }
            let prev = cdf[k - 1];
            cdf.push(prev + (density[k] + density[k - 1]) * w * lit(0.5));
        }
        let total = *cdf.last().expect("non-empty");
        if !(total > T::zero()) {
            return Err(Error::Malformed("density integrates to zero".into()));
        }
        cdf.iter_mut().for_each(|c| *c = *c / total);
        Ok(Self {
            nodes: nodes.to_vec(),
            cdf,
        })
    }

    /// Sampler CDF at `x`, piecewise linear between nodes.
    pub fn cdf(&self, x: T) -> T {
        let n = self.nodes.len();
        if x <= self.nodes[0] {
            return T::zero();
        }
        if x >= self.nodes[n - 1] {
            return T::one();
        }
        let k = self.nodes.partition_point(|&v| v <= x);
        let (x0, x1) = (self.nodes[k - 1], self.nodes[k]);
        let t = (x - x0) / (x1 - x0);
        self.cdf[k - 1] + (self.cdf[k] - self.cdf[k - 1]) * t
    }

    pub fn quantile(&self, u: T) -> T {
        let n = self.nodes.len();
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, n - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { T::zero() };
        self.nodes[k - 1] + (self.nodes[k] - self.nodes[k - 1]) * t
    }

    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<T> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                self.quantile(lit(u))
            })
            .collect()
    }
}

/// `sup |F_n − F|` between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<T: Real>(samples: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = from_usize::<T>(sorted.len());
    let mut worst = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = from_usize::<T>(i) / n;
        let hi = from_usize::<T>(i + 1) / n;
        worst = worst.max((f - lo).abs()).max((hi - f).abs());
    }
    worst
}

/// Mean and unbiased variance.
pub fn sample_moments<T: Real>(samples: &[T]) -> (T, T) {
    let n = from_usize::<T>(samples.len());
    let mean = samples.iter().copied().sum::<T>() / n;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (n - T::one());
    (mean, var)
}

/// How histogram bins are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", deny_unknown_fields)]
pub enum Binning {
    /// Width `2 IQR n^{-1/3}`.
    FreedmanDiaconis,
    /// Fixed number of equal bins over the sample range.
    Count { bins: usize },
    /// Fixed equal bins over a given range.
    Range { min: f64, max: f64, bins: usize },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::FreedmanDiaconis
    }
}

/// Density-normalized histogram with equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub width: f64,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn from_samples<T: Real>(samples: &[T], binning: Binning) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Malformed("histogram needs at least two samples".into()));
        }
        let xs: Vec<f64> = samples.iter().map(|&x| to_f64(x)).collect();
        let (lo, hi) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (min, max, bins) = match binning {
            Binning::FreedmanDiaconis => {
                let mut sorted = xs.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
                let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
                let iqr = q(0.75) - q(0.25);
                let width = 2.0 * iqr / (xs.len() as f64).cbrt();
                let bins = if width > 0.0 { ((hi - lo) / width).ceil().max(1.0) as usize } else { 1 };
                (lo, hi, bins.min(100_000))
            }
            Binning::Count { bins } => (lo, hi, bins.max(1)),
            Binning::Range { min, max, bins } => {
                if !(max > min) || bins == 0 {
                    return Err(Error::param("binning", "range must be increasing with at least one bin"));
                }
                (min, max, bins)
            }
        };
        let width = if max > min { (max - min) / bins as f64 } else { 1.0 };
        let mut counts = vec![0usize; bins];
        let mut kept = 0usize;
        for &x in &xs {
            if x < min || x > max {
                continue;
            }
            let k = (((x - min) / width) as usize).min(bins - 1);
            counts[k] += 1;
            kept += 1;
        }
        let scale = 1.0 / (kept.max(1) as f64 * width);
        Ok(Self {
            min,
            width,
            density: counts.into_iter().map(|c| c as f64 * scale).collect(),
        })
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.density.len())
            .map(|k| self.min + (k as f64 + 0.5) * self.width)
            .collect()
    }

    /// Density at `x`, zero outside the binned range.
    pub fn value_at(&self, x: f64) -> f64 {
        let u = (x - self.min) / self.width;
        if u < 0.0 || u >= self.density.len() as f64 {
            if u == self.density.len() as f64 {
                return *self.density.last().unwrap_or(&0.0);
            }
            return 0.0;
        }
        self.density[u as usize]
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }
}
