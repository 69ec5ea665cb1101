//! Periodic Green's function of `1 − Δ` on the torus `[-π, π]^4`.
//!
//! The heat-kernel representation is split at `t = 1`. Small times give a
//! Gaussian image sum, written radially as `Σ_m J(|x + 2πm|)`; large times give
//! the Fourier series `(2π)^{-4} Σ_k e^{-(1+|k|²)} cos(k·x) / (1+|k|²)`.
//!
//! The mollified kernel convolves the central image exactly with the radial
//! bump. The remaining images and the Fourier part are smooth near the cube,
//! so they are corrected by the second-moment term `ε²E|y|²/8 · Δ` only.

mod calibrate;
mod quad;
mod radial;

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use radial::{harmonic, logarithmic, Radial, J_CUTOFF};

pub use calibrate::{calibrate, observed_ratio, taylor_ratio, FrozenConstant, FrozenConstants, Inequality};
pub use quad::symmetric_torus_integral;
pub use radial::Mollifier;

pub type Point = [f64; 4];

/// Largest admissible mollification scale.
pub const MAX_EPSILON: f64 = 0.25;

const FOURIER_CUTOFF_SQ: i32 = 16;
const LOCAL_CUTOFF: f64 = 0.5;
const LOCAL_BLEND_START: f64 = 0.375;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    ExactTorus,
    LeadingLocal,
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact_torus" => Ok(KernelMode::ExactTorus),
            "local" | "leading_local" => Ok(KernelMode::LeadingLocal),
            other => Err(Error::InvalidInput(format!("unknown kernel mode {other:?}"))),
        }
    }
}

/// Truncation parameters of the exact evaluator.
#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    pub image_radius: f64,
    pub fourier_cutoff_sq: i32,
    pub heat_split: f64,
    pub error_budget: f64,
}

struct FourierMode {
    k: [usize; 4],
    coeff: f64,
    k_sq: f64,
}

struct Shared {
    radial: Radial,
    mollifier: Mollifier,
    images: Vec<Point>,
    modes: Vec<FourierMode>,
}

fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| Shared {
        radial: Radial::new(),
        mollifier: Mollifier::standard(),
        images: images(),
        modes: fourier_modes(),
    })
}

/// Lattice shifts `2πm ≠ 0` that can come within `J_CUTOFF` of the cube.
fn images() -> Vec<Point> {
    let mut out = Vec::new();
    let range = -2i32..=2;
    for a in range.clone() {
        for b in range.clone() {
            for c in range.clone() {
                for d in range.clone() {
                    let m = [a, b, c, d];
                    if m == [0; 4] {
                        continue;
                    }
                    let closest: f64 =
                        m.iter().map(|&mi| ((2 * mi.abs() - 1).max(0) as f64 * PI).powi(2)).sum();
                    if closest < J_CUTOFF * J_CUTOFF {
                        out.push(m.map(|mi| 2.0 * PI * mi as f64));
                    }
                }
            }
        }
    }
    out
}

/// Non-negative wave vectors with `|k|² ≤ 16`, each weighted by the number of
/// sign patterns it represents.
fn fourier_modes() -> Vec<FourierMode> {
    let vol = (2.0 * PI).powi(4);
    let mut out = Vec::new();
    for a in 0..=4usize {
        for b in 0..=4usize {
            for c in 0..=4usize {
                for d in 0..=4usize {
                    let k = [a, b, c, d];
                    let k_sq: usize = k.iter().map(|&ki| ki * ki).sum();
                    if k_sq as i32 > FOURIER_CUTOFF_SQ {
                        continue;
                    }
                    let mult = (1u32 << k.iter().filter(|&&ki| ki > 0).count()) as f64;
                    let lam = 1.0 + k_sq as f64;
                    out.push(FourierMode { k, coeff: mult * (-lam).exp() / (lam * vol), k_sq: k_sq as f64 });
                }
            }
        }
    }
    out
}

/// `lim_{r→0} (J(r) − 1/(4π²r²) − log r/(8π²))`, the constant part of the
/// local expansion of the heat integral at the origin.
pub fn local_constant() -> f64 {
    radial::q_at_zero()
}

/// Representative of `x` in `[-π, π]^4`.
pub fn reduce(x: Point) -> Point {
    x.map(|xi| xi - 2.0 * PI * (xi / (2.0 * PI)).round())
}

/// Periodic distance of `x` to the origin.
pub fn torus_norm(x: Point) -> f64 {
    norm(reduce(x))
}

pub(crate) fn norm(x: Point) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn sub(x: Point, y: Point) -> Point {
    [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3]]
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= MAX_EPSILON {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon {eps} outside (0, 1/4]")))
    }
}

fn check_point(x: Point) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("non-finite coordinate".into()))
    }
}

/// Smooth step equal to 1 below `LOCAL_BLEND_START` and 0 above `LOCAL_CUTOFF`.
fn local_blend(r: f64) -> f64 {
    let t = (r - LOCAL_BLEND_START) / (LOCAL_CUTOFF - LOCAL_BLEND_START);
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let g = |s: f64| (-1.0 / s).exp();
    g(1.0 - t) / (g(1.0 - t) + g(t))
}

/// Read-only evaluator; cheap to copy and safe to share across threads.
#[derive(Clone, Copy)]
pub struct GreensEvaluator {
    mode: KernelMode,
    shared: &'static Shared,
}

impl std::fmt::Debug for GreensEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreensEvaluator").field("mode", &self.mode).finish()
    }
}

impl GreensEvaluator {
    pub fn new(mode: KernelMode) -> Self {
        GreensEvaluator { mode, shared: shared() }
    }

    pub fn exact() -> Self {
        Self::new(KernelMode::ExactTorus)
    }

    pub fn local() -> Self {
        Self::new(KernelMode::LeadingLocal)
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.shared.mollifier
    }

    pub fn truncation(&self) -> Truncation {
        Truncation {
            image_radius: J_CUTOFF,
            fourier_cutoff_sq: FOURIER_CUTOFF_SQ,
            heat_split: 1.0,
            error_budget: 1e-6,
        }
    }

    /// Image sum without the central term plus the Fourier part, together
    /// with its Laplacian.
    fn smooth_part(&self, x: Point) -> (f64, f64) {
        let radial = &self.shared.radial;
        let mut value = 0.0;
        let mut lap = 0.0;
        for shift in &self.shared.images {
            let d2: f64 = (0..4).map(|i| (x[i] + shift[i]).powi(2)).sum();
            if d2 < J_CUTOFF * J_CUTOFF {
                let d = d2.sqrt();
                value += radial.j(d);
                lap += radial.laplacian_j(d);
            }
        }
        let mut cosines = [[0.0f64; 5]; 4];
        for (i, row) in cosines.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = (j as f64 * x[i]).cos();
            }
        }
        for mode in &self.shared.modes {
            let term = mode.coeff
                * cosines[0][mode.k[0]]
                * cosines[1][mode.k[1]]
                * cosines[2][mode.k[2]]
                * cosines[3][mode.k[3]];
            value += term;
            lap -= mode.k_sq * term;
        }
        (value, lap)
    }

    fn local_profile(r: f64) -> f64 {
        harmonic(r) + logarithmic(r)
    }

    /// `G(x)`; singular at the lattice points.
    pub fn greens(&self, x: Point) -> Result<f64> {
        check_point(x)?;
        let x = reduce(x);
        let r = norm(x);
        if r == 0.0 {
            return Err(Error::SingularPoint);
        }
        Ok(match self.mode {
            KernelMode::ExactTorus => self.shared.radial.j(r) + self.smooth_part(x).0,
            KernelMode::LeadingLocal => {
                let chi = local_blend(r);
                chi * Self::local_profile(r) + (1.0 - chi) * Self::local_profile(LOCAL_CUTOFF)
            }
        })
    }

    /// `G_ε = ρ_ε ⋆ G` for `ε ∈ (0, 1/4]`.
    pub fn greens_mollified(&self, x: Point, eps: f64) -> Result<f64> {
        check_point(x)?;
        check_epsilon(eps)?;
        Ok(self.mollified(x, eps))
    }

    /// `G_ε(0)`, the value of a self-loop.
    pub fn greens_at_zero(&self, eps: f64) -> Result<f64> {
        self.greens_mollified([0.0; 4], eps)
    }

    /// Unchecked `G_ε` for inner loops; `eps` must already be validated.
    pub(crate) fn mollified(&self, x: Point, eps: f64) -> f64 {
        let x = reduce(x);
        let r = norm(x);
        let moll = &self.shared.mollifier;
        match self.mode {
            KernelMode::ExactTorus => {
                let (value, lap) = self.smooth_part(x);
                let kappa = eps * eps * moll.second_moment() / 8.0;
                moll.mollified_j(&self.shared.radial, r, eps) + value + kappa * lap
            }
            KernelMode::LeadingLocal => {
                let chi = local_blend(r);
                let inner = if chi > 0.0 { moll.mollified_local(r, eps) } else { 0.0 };
                chi * inner + (1.0 - chi) * moll.mollified_local(LOCAL_CUTOFF, eps)
            }
        }
    }

    /// Gradient of `G_ε` by central differences with step `ε/16`.
    pub fn gradient_mollified(&self, x: Point, eps: f64) -> Result<Point> {
        check_point(x)?;
        check_epsilon(eps)?;
        let h = eps / 16.0;
        let mut grad = [0.0; 4];
        for (i, g) in grad.iter_mut().enumerate() {
            let mut plus = x;
            let mut minus = x;
            plus[i] += h;
            minus[i] -= h;
            *g = (self.mollified(plus, eps) - self.mollified(minus, eps)) / (2.0 * h);
        }
        Ok(grad)
    }

    /// First-order Taylor remainder
    /// `G_ε(x−y) − G_ε(x⋆−y) − Σᵢ (x−x⋆)ⁱ ∂ᵢG_ε(x⋆−y)`.
    pub fn taylor_remainder(&self, x: Point, y: Point, x_star: Point, eps: f64) -> Result<f64> {
        for p in [x, y, x_star] {
            check_point(p)?;
        }
        check_epsilon(eps)?;
        let shift = reduce(sub(x, x_star));
        let delta = norm(shift);
        let near = torus_norm(sub(x, y)).min(torus_norm(sub(x_star, y)));
        if delta >= near {
            return Err(Error::PreconditionViolated(format!(
                "|x - x*| = {delta:.3e} is not below min(|x - y|, |x* - y|) = {near:.3e}"
            )));
        }
        if delta == 0.0 {
            return Ok(0.0);
        }
        let base = sub(x_star, y);
        let grad = self.gradient_mollified(base, eps)?;
        let linear: f64 = (0..4).map(|i| shift[i] * grad[i]).sum();
        // Evaluate at x⋆ − y + shift so that the increment is the reduced one.
        let moved = [base[0] + shift[0], base[1] + shift[1], base[2] + shift[2], base[3] + shift[3]];
        Ok(self.mollified(moved, eps) - self.mollified(base, eps) - linear)
    }
}
