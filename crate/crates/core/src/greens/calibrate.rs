//! Calibration of the constants in the kernel bounds.
//!
//! Each bound is sampled at random configurations and the largest observed
//! ratio is recorded. The frozen value is twice that, rounded up to two
//! significant digits, and lives in `fixtures/greens_constants.json`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::radial::{four_pi_sq, harmonic, logarithmic};
use super::{norm, sub, torus_norm, GreensEvaluator, Point};
use crate::error::{Error, Result};

const FROZEN: &str = include_str!("../../fixtures/greens_constants.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Inequality {
    /// `|G(x) − 1/(4π²|x|²) − log|x|/(8π²)| ≤ C`.
    LocalAsymptotic,
    /// `|G_ε(x)| ≤ C / (|x|² + ε²)`.
    MollifiedUpper,
    /// Two-sided bound on `G_ε` with `(|x| ± ε)` for `|x| ≥ 2ε`.
    MollifiedTwoSided,
    /// Second-order bound on the first-order Taylor remainder.
    TaylorRemainder,
}

impl Inequality {
    pub const ALL: [Inequality; 4] = [
        Inequality::LocalAsymptotic,
        Inequality::MollifiedUpper,
        Inequality::MollifiedTwoSided,
        Inequality::TaylorRemainder,
    ];

    fn stream(self) -> u64 {
        match self {
            Inequality::LocalAsymptotic => 1,
            Inequality::MollifiedUpper => 2,
            Inequality::MollifiedTwoSided => 3,
            Inequality::TaylorRemainder => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenConstant {
    pub value: f64,
    pub observed: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenConstants {
    pub version: String,
    pub generator: String,
    pub local_asymptotic: FrozenConstant,
    pub mollified_upper: FrozenConstant,
    pub mollified_two_sided: FrozenConstant,
    pub taylor_remainder: FrozenConstant,
}

impl FrozenConstants {
    /// The checked-in constants.
    pub fn frozen() -> Self {
        serde_json::from_str(FROZEN).expect("bundled constants file is valid JSON")
    }

    pub fn get(&self, which: Inequality) -> &FrozenConstant {
        match which {
            Inequality::LocalAsymptotic => &self.local_asymptotic,
            Inequality::MollifiedUpper => &self.mollified_upper,
            Inequality::MollifiedTwoSided => &self.mollified_two_sided,
            Inequality::TaylorRemainder => &self.taylor_remainder,
        }
    }
}

fn direction(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let v: Point = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = norm(v);
        if n > 1e-12 {
            return v.map(|c| c / n);
        }
    }
}

fn scaled(dir: Point, r: f64) -> Point {
    dir.map(|c| c * r)
}

fn log2_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    2f64.powf(rng.gen_range(lo..hi))
}

/// Largest ratio of the two sides of `which` over `samples` random draws.
pub fn observed_ratio(eval: &GreensEvaluator, which: Inequality, seed: u64, samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.stream());
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let ratio = match which {
            Inequality::LocalAsymptotic => {
                let x = scaled(direction(&mut rng), 10f64.powf(rng.gen_range(-3.0..std::f64::consts::PI.log10())));
                let r = torus_norm(x);
                (eval.greens(x)? - harmonic(r) - logarithmic(r)).abs()
            }
            Inequality::MollifiedUpper => {
                let eps = log2_uniform(&mut rng, -10.0, -2.0);
                let top = (std::f64::consts::PI / eps).log2();
                let x = scaled(direction(&mut rng), eps * log2_uniform(&mut rng, -6.0, top));
                let r = torus_norm(x);
                eval.greens_mollified(x, eps)?.abs() * (r * r + eps * eps)
            }
            Inequality::MollifiedTwoSided => {
                let eps = log2_uniform(&mut rng, -10.0, -2.0);
                let top = (std::f64::consts::PI / eps).log2();
                let x = scaled(direction(&mut rng), eps * log2_uniform(&mut rng, 1.0, top));
                let r = torus_norm(x);
                let g = eval.greens_mollified(x, eps)?;
                let lower = 1.0 / (four_pi_sq() * (r + eps).powi(2)) + logarithmic(r);
                let upper = 1.0 / (four_pi_sq() * (r - eps).powi(2)) + logarithmic(r);
                (lower - g).max(g - upper)
            }
            Inequality::TaylorRemainder => {
                let eps = log2_uniform(&mut rng, -8.0, -3.0);
                let delta = log2_uniform(&mut rng, -9.0, -4.0);
                let y: Point = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
                let x = add(y, scaled(direction(&mut rng), 10.0 * delta));
                let x_star = add(x, scaled(direction(&mut rng), delta));
                taylor_ratio(eval, x, y, x_star, eps)?
            }
        };
        worst = worst.max(ratio);
    }
    Ok(worst)
}

fn add(x: Point, y: Point) -> Point {
    std::array::from_fn(|i| x[i] + y[i])
}

/// `|ℋ| (|x−y|+ε)² (min(|x−y|, |x⋆−y|)+ε)² / |x−x⋆|²`.
pub fn taylor_ratio(eval: &GreensEvaluator, x: Point, y: Point, x_star: Point, eps: f64) -> Result<f64> {
    let h = eval.taylor_remainder(x, y, x_star, eps)?;
    let delta = torus_norm(sub(x, x_star));
    if delta == 0.0 {
        return Ok(0.0);
    }
    let far = torus_norm(sub(x, y));
    let near = far.min(torus_norm(sub(x_star, y)));
    Ok(h.abs() * (far + eps).powi(2) * (near + eps).powi(2) / (delta * delta))
}

fn round_up(v: f64) -> f64 {
    if v <= 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(v.log10().floor() as i32 - 1);
    (v / scale).ceil() * scale
}

/// Recomputes every constant from scratch.
pub fn calibrate(eval: &GreensEvaluator, seed: u64, samples: usize) -> Result<FrozenConstants> {
    if samples == 0 {
        return Err(Error::InvalidInput("calibration needs at least one sample".into()));
    }
    let entry = |which| -> Result<FrozenConstant> {
        let observed = observed_ratio(eval, which, seed, samples)?;
        Ok(FrozenConstant { value: round_up(2.0 * observed), observed, samples, seed })
    };
    Ok(FrozenConstants {
        version: "v1".into(),
        generator: format!("anderson calibrate --seed {seed} --samples {samples}"),
        local_asymptotic: entry(Inequality::LocalAsymptotic)?,
        mollified_upper: entry(Inequality::MollifiedUpper)?,
        mollified_two_sided: entry(Inequality::MollifiedTwoSided)?,
        taylor_remainder: entry(Inequality::TaylorRemainder)?,
    })
}
