//! Composite Gauss–Legendre rules and a cube quadrature for symmetric kernels.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use rayon::prelude::*;

const MAX_ORDER: usize = 32;

/// Nodes and weights on `[-1, 1]`.
pub(crate) fn rule(order: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        (1..=MAX_ORDER)
            .map(|n| {
                let n = NonZeroUsize::new(n).expect("order is positive");
                GaussLegendre::new(n).into_node_weight_pairs().into_vec()
            })
            .collect()
    });
    assert!((1..=MAX_ORDER).contains(&order), "quadrature order {order} out of range");
    &rules[order - 1]
}

pub(crate) fn integrate(order: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * rule(order).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Sum of `integrate` over consecutive breakpoints.
pub(crate) fn composite(order: usize, breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    breaks.windows(2).map(|w| integrate(order, w[0], w[1], &mut f)).sum()
}

/// `n` equal panels on `[a, b]`.
pub(crate) fn panels(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Integral over the torus `[-π, π]^4` of a kernel that is even in every
/// coordinate and invariant under coordinate permutations.
///
/// The cube `[0, π]^4` is split into the four pyramids where one coordinate
/// is largest; each pyramid is parametrised as `s · (1, u)` with `u ∈ [0, 1]^3`,
/// so the Jacobian `s³` tames an integrable singularity at the origin. Radial
/// panels are graded geometrically towards zero.
pub fn symmetric_torus_integral<F>(f: F) -> f64
where
    F: Fn([f64; 4]) -> f64 + Sync,
{
    const RADIAL_ORDER: usize = 8;
    const ANGULAR_ORDER: usize = 10;
    const GRADING: i32 = 30;
    let mut breaks: Vec<f64> = (0..=GRADING).rev().map(|k| PI * 0.5f64.powi(k)).collect();
    breaks.insert(0, 0.0);
    let ang = rule(ANGULAR_ORDER);
    let radial: Vec<(f64, f64)> = breaks
        .windows(2)
        .flat_map(|w| {
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[0] + w[1]);
            rule(RADIAL_ORDER).iter().map(move |&(x, wt)| (mid + half * x, half * wt))
        })
        .collect();
    let total: f64 = radial
        .par_iter()
        .map(|&(s, ws)| {
            let mut acc = 0.0;
            for &(a, wa) in ang {
                let u1 = 0.5 * (a + 1.0);
                for &(b, wb) in ang {
                    let u2 = 0.5 * (b + 1.0);
                    for &(c, wc) in ang {
                        let u3 = 0.5 * (c + 1.0);
                        acc += wa * wb * wc * f([s, s * u1, s * u2, s * u3]);
                    }
                }
            }
            ws * s.powi(3) * acc / 8.0
        })
        .sum();
    16.0 * 4.0 * total
}
