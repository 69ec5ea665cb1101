//! Random streams, batch bookkeeping and proposal densities on the torus.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::greens::{norm, reduce, Point};

/// Number of batches behind every standard error.
pub const BATCHES: usize = 20;

pub(crate) fn torus_volume() -> f64 {
    (2.0 * PI).powi(4)
}

fn ball_volume(r: f64) -> f64 {
    0.5 * PI * PI * r.powi(4)
}

/// Independent stream for chunk `chunk` of a run seeded with `seed`.
pub(crate) fn stream(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

pub(crate) fn uniform_direction(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = norm(v);
        if n > 1e-12 {
            return v.map(|c| c / n);
        }
    }
}

pub(crate) fn uniform_cube(rng: &mut ChaCha8Rng) -> Point {
    std::array::from_fn(|_| rng.gen_range(-PI..PI))
}

/// Per-batch means and the overall mean of a scalar estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: f64,
    pub batches: Vec<f64>,
    pub samples: usize,
}

impl BatchStats {
    pub fn exact(value: f64) -> Self {
        BatchStats { mean: value, batches: vec![value; BATCHES], samples: 0 }
    }

    /// Standard error of the mean from the spread of batch means.
    pub fn stderr(&self) -> f64 {
        stderr_of(&self.batches)
    }

    /// Batchwise combination; the mean is combined from the overall means.
    pub fn combine(&self, other: &BatchStats, f: impl Fn(f64, f64) -> f64) -> BatchStats {
        BatchStats {
            mean: f(self.mean, other.mean),
            batches: self.batches.iter().zip(&other.batches).map(|(&a, &b)| f(a, b)).collect(),
            samples: self.samples.max(other.samples),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> BatchStats {
        BatchStats { mean: f(self.mean), batches: self.batches.iter().map(|&b| f(b)).collect(), samples: self.samples }
    }
}

pub(crate) fn stderr_of(batches: &[f64]) -> f64 {
    let k = batches.len() as f64;
    if batches.len() < 2 {
        return 0.0;
    }
    let m = batches.iter().sum::<f64>() / k;
    let var = batches.iter().map(|b| (b - m).powi(2)).sum::<f64>() / (k - 1.0);
    (var / k).sqrt()
}

/// Runs `samples` draws of `draw` in chunks of at most `chunk_size`, each
/// chunk on its own stream, and reduces chunk sums in chunk order.
pub(crate) fn run_batched<F>(samples: usize, chunk_size: usize, seed: u64, draw: F) -> BatchStats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let samples = samples.max(BATCHES);
    let chunk = chunk_size.max(1).min(samples.div_ceil(BATCHES));
    let chunks = samples.div_ceil(chunk);
    let sums: Vec<(f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, c as u64);
            let n = chunk.min(samples - c * chunk);
            let mut s = 0.0;
            for _ in 0..n {
                s += draw(&mut rng);
            }
            (s, n)
        })
        .collect();
    let mut batch_sum = vec![0.0; BATCHES];
    let mut batch_n = vec![0usize; BATCHES];
    let mut total = 0.0;
    for (c, &(s, n)) in sums.iter().enumerate() {
        batch_sum[c % BATCHES] += s;
        batch_n[c % BATCHES] += n;
        total += s;
    }
    BatchStats {
        mean: total / samples as f64,
        batches: batch_sum.iter().zip(&batch_n).map(|(s, &n)| s / n as f64).collect(),
        samples,
    }
}

/// Density on the torus used to place a vertex relative to its neighbour.
#[derive(Clone, Debug)]
pub(crate) enum Proposal {
    /// Half uniform on the cube, half log-uniform in radius on `[floor, π]`.
    Mixture { floor: f64 },
    /// Dyadic shells `2π 2^{-n-1} < |z| ≤ 2π 2^{-n}`, shell `n` drawn with
    /// probability proportional to its volume times `(2π 2^{-n} + s)^{-4}`.
    Shells { probs: Vec<f64>, cumulative: Vec<f64> },
}

/// Inner and outer radius of stratum `n` out of `count`; the last stratum is
/// the remaining core ball.
fn stratum_radii(n: usize, count: usize) -> (f64, f64) {
    let outer = 2.0 * PI * 0.5f64.powi(n as i32);
    if n + 1 == count {
        (0.0, outer)
    } else {
        (0.5 * outer, outer)
    }
}

/// Volume of the part of stratum `n` inside the torus.
fn stratum_volume(n: usize, count: usize) -> f64 {
    if n == 0 {
        return torus_volume() - ball_volume(PI);
    }
    let (a, b) = stratum_radii(n, count);
    ball_volume(b) - ball_volume(a)
}

/// Uniform point in stratum `n`.
fn sample_stratum(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Point {
    if n == 0 {
        loop {
            let z = uniform_cube(rng);
            if norm(z) > PI {
                return z;
            }
        }
    }
    let (a, b) = stratum_radii(n, count);
    let u: f64 = rng.gen();
    let r = (a.powi(4) + u * (b.powi(4) - a.powi(4))).powf(0.25);
    uniform_direction(rng).map(|c| c * r)
}

/// Stratum of a point of torus norm `r`.
fn stratum_of(r: f64, count: usize) -> usize {
    if r > PI {
        return 0;
    }
    let mut n = ((2.0 * PI / r).log2().floor().max(1.0)) as usize;
    while n > 1 && r > 2.0 * PI * 0.5f64.powi(n as i32) {
        n -= 1;
    }
    while r <= PI * 0.5f64.powi(n as i32) && n + 1 < count {
        n += 1;
    }
    n.min(count - 1)
}

impl Proposal {
    pub(crate) fn mixture(scale: f64) -> Self {
        Proposal::Mixture { floor: scale / 64.0 }
    }

    pub(crate) fn shells(scale: f64) -> Self {
        let count = ((1.0 / scale).log2().ceil().max(0.0) as usize) + 8;
        let weights: Vec<f64> = (0..count)
            .map(|n| stratum_volume(n, count) * (2.0 * PI * 0.5f64.powi(n as i32) + scale).powi(-4))
            .collect();
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let cumulative = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        Proposal::Shells { probs, cumulative }
    }

    /// Draws a displacement `z` and returns it with `1/q(z)`.
    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> (Point, f64) {
        match self {
            Proposal::Mixture { floor } => {
                let z = if rng.gen::<bool>() {
                    uniform_cube(rng)
                } else {
                    let r = floor * (PI / floor).powf(rng.gen::<f64>());
                    uniform_direction(rng).map(|c| c * r)
                };
                let weight = 1.0 / self.density(z);
                (z, weight)
            }
            Proposal::Shells { probs, cumulative } => {
                let u: f64 = rng.gen();
                let n = cumulative.partition_point(|&c| c < u).min(probs.len() - 1);
                let z = sample_stratum(rng, n, probs.len());
                (z, stratum_volume(n, probs.len()) / probs[n])
            }
        }
    }

    /// Density `q(z)` with respect to Lebesgue measure on the torus.
    pub(crate) fn density(&self, z: Point) -> f64 {
        let r = norm(reduce(z));
        match self {
            Proposal::Mixture { floor } => {
                let uniform = 0.5 / torus_volume();
                let radial = if r >= *floor && r <= PI {
                    0.5 / (2.0 * PI * PI * r.powi(4) * (PI / floor).ln())
                } else {
                    0.0
                };
                uniform + radial
            }
            Proposal::Shells { probs, .. } => {
                let n = stratum_of(r, probs.len());
                probs[n] / stratum_volume(n, probs.len())
            }
        }
    }
}

/// Volume of the dyadic shell `2π 2^{-n-1} < |x| ≤ 2π 2^{-n}` on the torus.
pub fn shell_volume(n: u32) -> f64 {
    if n == 0 {
        torus_volume() - ball_volume(PI)
    } else {
        let outer = 2.0 * PI * 0.5f64.powi(n as i32);
        ball_volume(outer) - ball_volume(0.5 * outer)
    }
}

/// Uniform point in the shell of index `n`.
pub fn sample_shell(rng: &mut ChaCha8Rng, n: u32) -> Point {
    let count = n as usize + 2;
    sample_stratum(rng, n as usize, count)
}
