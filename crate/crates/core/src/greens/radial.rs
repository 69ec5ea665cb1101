//! The truncated heat integral `J(r) = ∫₀¹ e^{-t} (4πt)^{-2} e^{-r²/4t} dt`
//! and its radial mollification.
//!
//! `J` is split as `1/(4π²r²) + log(r)/(8π²) + Q(r)` with `Q` continuous at
//! zero. `Q` is tabulated on `[0, 2]` and `log J` on `[2, 12.25]`; both tables
//! use four-point Lagrange interpolation on a uniform grid.

use std::f64::consts::{LN_2, PI};

use super::quad;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Beyond this radius `J` is below `1e-17` and treated as zero.
pub(crate) const J_CUTOFF: f64 = 12.0;
const SPLIT: f64 = 2.0;
const Q_STEP: f64 = 1.0 / 256.0;
const LN_J_STEP: f64 = 1.0 / 128.0;
const LN_J_END: f64 = 12.25;

pub(crate) fn four_pi_sq() -> f64 {
    4.0 * PI * PI
}

pub(crate) fn eight_pi_sq() -> f64 {
    8.0 * PI * PI
}

/// Leading singular part `1/(4π²r²)`.
pub(crate) fn harmonic(r: f64) -> f64 {
    1.0 / (four_pi_sq() * r * r)
}

/// Logarithmic part `log(r)/(8π²)`.
pub(crate) fn logarithmic(r: f64) -> f64 {
    r.ln() / eight_pi_sq()
}

/// Heat kernel at time one, `(4π)^{-2} e^{-r²/4}`.
pub(crate) fn heat_at_one(r: f64) -> f64 {
    (-r * r / 4.0).exp() / (16.0 * PI * PI)
}

/// `J(r)` by direct quadrature in `s = log t`; requires `r > 0`.
pub(crate) fn heat_integral(r: f64) -> f64 {
    let a = r * r / 4.0;
    let lo = (a / 60.0).ln();
    if lo >= 0.0 {
        return 0.0;
    }
    let n = ((-lo) / 0.5).ceil() as usize;
    let breaks = quad::panels(lo, 0.0, n.max(1));
    let integral = quad::composite(16, &breaks, |s| {
        let t = s.exp();
        (-t - a / t).exp() / t
    });
    integral / (16.0 * PI * PI)
}

/// `Q(0) = (γ − 1 + S − 2 log 2) / (16π²)` with `S = Σ_{j≥2} (−1)^j / (j! (j−1))`.
pub(crate) fn q_at_zero() -> f64 {
    let mut s = 0.0;
    let mut fact = 1.0;
    for j in 2..40 {
        fact *= j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        s += sign / (fact * (j - 1) as f64);
    }
    (EULER_GAMMA - 1.0 + s - 2.0 * LN_2) / (16.0 * PI * PI)
}

struct Table {
    x0: f64,
    step: f64,
    values: Vec<f64>,
}

impl Table {
    fn build(x0: f64, x1: f64, step: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = ((x1 - x0) / step).round() as usize;
        let values = (0..=n).map(|i| f(x0 + step * i as f64)).collect();
        Table { x0, step, values }
    }

    fn eval(&self, x: f64) -> f64 {
        let pos = (x - self.x0) / self.step;
        let last = self.values.len() - 3;
        let i = (pos.floor() as isize).clamp(1, last as isize) as usize;
        let t = pos - i as f64;
        let v = &self.values[i - 1..i + 3];
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        w0 * v[0] + w1 * v[1] + w2 * v[2] + w3 * v[3]
    }
}

/// Interpolated `J` and its pieces. Built once and shared read-only.
pub(crate) struct Radial {
    q: Table,
    ln_j: Table,
}

impl Radial {
    pub(crate) fn new() -> Self {
        let q0 = q_at_zero();
        let q = Table::build(0.0, SPLIT + 4.0 * Q_STEP, Q_STEP, |r| {
            if r == 0.0 {
                q0
            } else {
                heat_integral(r) - harmonic(r) - logarithmic(r)
            }
        });
        let ln_j = Table::build(SPLIT - 4.0 * LN_J_STEP, LN_J_END, LN_J_STEP, |r| heat_integral(r).ln());
        Radial { q, ln_j }
    }

    pub(crate) fn j(&self, r: f64) -> f64 {
        if r < SPLIT {
            harmonic(r) + logarithmic(r) + self.q.eval(r)
        } else if r >= J_CUTOFF {
            0.0
        } else {
            self.ln_j.eval(r).exp()
        }
    }

    pub(crate) fn q(&self, r: f64) -> f64 {
        if r < SPLIT {
            self.q.eval(r)
        } else {
            self.j(r) - harmonic(r) - logarithmic(r)
        }
    }

    /// `ΔJ(r) = J(r) + e^{-1} p₁(r)` away from the origin.
    pub(crate) fn laplacian_j(&self, r: f64) -> f64 {
        if r >= J_CUTOFF {
            0.0
        } else {
            self.j(r) + (-1.0f64).exp() * heat_at_one(r)
        }
    }

    /// `ΔQ = ΔJ − Δ(log r)/(8π²)`; the harmonic part has zero Laplacian.
    pub(crate) fn laplacian_q(&self, r: f64) -> f64 {
        self.laplacian_j(r) - 1.0 / (four_pi_sq() * r * r)
    }

    /// `Δ²Q = ΔJ + e^{-1} Δp₁` away from the origin.
    pub(crate) fn bilaplacian_q(&self, r: f64) -> f64 {
        if r >= J_CUTOFF {
            return 0.0;
        }
        self.laplacian_j(r) + (-1.0f64).exp() * heat_at_one(r) * (r * r / 4.0 - 2.0)
    }

    /// Average of `Q(|x − y|)` over the sphere `|y| = s` with `|x| = r`.
    fn sphere_mean_q(&self, r: f64, s: f64) -> f64 {
        if r == 0.0 || s == 0.0 {
            return self.q(r.max(s));
        }
        let sum = quad::integrate(16, 0.0, PI, |theta| {
            let d2 = (r * r + s * s - 2.0 * r * s * theta.cos()).max(0.0);
            theta.sin().powi(2) * self.q(d2.sqrt())
        });
        2.0 * sum / PI
    }
}

/// Radial bump profile and the mollified radial kernel.
#[derive(Clone, Debug)]
pub struct Mollifier {
    norm: f64,
    second_moment: f64,
    fourth_moment: f64,
}

fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn unit_panels() -> Vec<f64> {
    quad::panels(0.0, 1.0, 8)
}

impl Mollifier {
    /// `ρ(x) = c · exp(−1/(1−|x|²))` on the unit ball, with `c` fixed numerically.
    pub fn standard() -> Self {
        let raw = quad::composite(16, &unit_panels(), |s| 2.0 * PI * PI * s.powi(3) * bump(s));
        let norm = 1.0 / raw;
        let second = quad::composite(16, &unit_panels(), |s| norm * 2.0 * PI * PI * s.powi(5) * bump(s));
        let fourth = quad::composite(16, &unit_panels(), |s| norm * 2.0 * PI * PI * s.powi(7) * bump(s));
        Mollifier { norm, second_moment: second, fourth_moment: fourth }
    }

    /// Normalisation constant `c`.
    pub fn normalization(&self) -> f64 {
        self.norm
    }

    /// `ρ` at a point of norm `r`.
    pub fn density(&self, r: f64) -> f64 {
        self.norm * bump(r)
    }

    /// Density of `|y|` for `y ~ ρ`, i.e. `2π² σ³ ρ(σ)`.
    pub fn radial_density(&self, sigma: f64) -> f64 {
        2.0 * PI * PI * sigma.powi(3) * self.density(sigma)
    }

    /// `∫ρ` by quadrature in the radial variable.
    pub fn mass(&self) -> f64 {
        quad::composite(16, &unit_panels(), |s| self.radial_density(s))
    }

    /// `E|y|²` under `ρ`.
    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn support_radius(&self) -> f64 {
        1.0
    }

    /// Radial integral `∫₀¹ 2π²σ³ρ(σ) g(σ) dσ` split at `split ∈ [0, 1]`.
    fn average(&self, split: f64, mut g: impl FnMut(f64) -> f64) -> f64 {
        let mut breaks = unit_panels();
        if split > 0.0 && split < 1.0 {
            breaks.push(split);
            breaks.sort_by(f64::total_cmp);
        }
        quad::composite(12, &breaks, |s| self.radial_density(s) * g(s))
    }

    /// Mollified `J` at radius `r` for scale `eps`.
    pub(crate) fn mollified_j(&self, radial: &Radial, r: f64, eps: f64) -> f64 {
        let u = r / eps;
        let m2 = eps * eps * self.second_moment;
        if u >= 2.0 {
            let m4 = eps.powi(4) * self.fourth_moment;
            return radial.j(r)
                + m2 / (4.0 * eight_pi_sq() * r * r)
                + m2 / 8.0 * radial.laplacian_q(r)
                + m4 / 192.0 * radial.bilaplacian_q(r);
        }
        self.average(u.min(1.0), |sigma| {
            let s = eps * sigma;
            let (lo, hi) = if r < s { (r, s) } else { (s, r) };
            harmonic(hi) + (hi.ln() + lo * lo / (4.0 * hi * hi)) / eight_pi_sq() + radial.sphere_mean_q(r, s)
        })
    }

    /// Mollified leading local part `1/(4π²r²) + log(r)/(8π²)`.
    pub(crate) fn mollified_local(&self, r: f64, eps: f64) -> f64 {
        let u = r / eps;
        if u >= 1.0 {
            let m2 = eps * eps * self.second_moment;
            return harmonic(r) + logarithmic(r) + m2 / (4.0 * eight_pi_sq() * r * r);
        }
        self.average(u, |sigma| {
            let s = eps * sigma;
            let (lo, hi) = if r < s { (r, s) } else { (s, r) };
            harmonic(hi) + (hi.ln() + lo * lo / (4.0 * hi * hi)) / eight_pi_sq()
        })
    }
}
