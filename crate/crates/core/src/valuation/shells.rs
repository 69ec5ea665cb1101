//! Shell integrals of `G_ε²` and sector-restricted integrals of `|W_εΓ|`.
//!
//! Sector integrals act on the internal part of a diagram: legs are dropped,
//! the smallest internal label is pinned at the origin and the remaining
//! vertices are integrated over the sector `D_(T,n)`.

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sampling::{run_batched, sample_shell, shell_volume, BatchStats};
use super::{check_budget, check_config, check_epsilon, n_eps, result_from, MCConfig, ValuationResult};
use crate::diagrams::{FeynmanDiagram, Label};
use crate::error::{Error, Result};
use crate::greens::{sub, GreensEvaluator, Point};
use crate::hepp::{compatible_assignments, in_sector, HeppTree, ScaleAssignment};

/// Smallest tolerated acceptance rate of the sector proposal.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
const PILOT_SAMPLES: usize = 20_000;
const PILOT_STREAM: u64 = 0x5EC7_0000;

/// `∫ G_ε(x)² dx` over the shell `2π 2^{-n-1} < |x| ≤ 2π 2^{-n}`.
pub fn shell_integral(n: u32, eps: f64, cfg: &MCConfig) -> Result<ValuationResult> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    let top = n_eps(eps);
    if top == 0 || n > top - 1 {
        return Err(Error::InvalidInput(format!("shell {n} outside 0..={}", top.saturating_sub(1))));
    }
    let eval = GreensEvaluator::new(cfg.kernel_mode);
    let vol = shell_volume(n);
    let stats = run_batched(cfg.samples, cfg.chunk_size, cfg.seed, |rng| {
        let z = sample_shell(rng, n);
        vol * eval.mollified(z, eps).powi(2)
    });
    Ok(result_from(&stats, eps, cfg, Vec::new()))
}

/// Internal edges of `d` as `(tail, head, mult)` plus the total self-loop multiplicity.
fn internal_edges(d: &FeynmanDiagram) -> (Vec<(Label, Label, i32)>, i32) {
    let mut edges = Vec::new();
    let mut loops = 0;
    for e in d.edges() {
        if e.is_loop() {
            loops += e.mult as i32;
        } else {
            edges.push((e.tail, e.head, e.mult as i32));
        }
    }
    (edges, loops)
}

/// Placement plan: for each inner node, the representative of its second
/// child is displaced from the representative of the node.
struct Plan {
    labels: Vec<Label>,
    /// `(index of rep(u), index of rep(b), n_u)` in root-first order.
    moves: Vec<(usize, usize, u32)>,
    volume: f64,
}

fn plan(t: &HeppTree, n: &ScaleAssignment) -> Plan {
    let labels = t.leaves().to_vec();
    let rep = |node: usize| crate::diagrams::members(t.below(node)).min().unwrap();
    let index = |l: Label| labels.iter().position(|&x| x == l).unwrap();
    let mut moves = Vec::new();
    let mut volume = 1.0;
    let mut stack = vec![t.root()];
    while let Some(u) = stack.pop() {
        if let Some((a, b)) = t.children(u) {
            let k = n.get(t, u);
            moves.push((index(rep(u)), index(rep(b)), k));
            volume *= shell_volume(k);
            stack.push(a);
            stack.push(b);
        }
    }
    Plan { labels, moves, volume }
}

fn place(plan: &Plan, rng: &mut ChaCha8Rng, x: &mut [Point]) {
    x[0] = [0.0; 4];
    for &(from, to, k) in &plan.moves {
        let z = sample_shell(rng, k);
        let p = x[from];
        x[to] = [p[0] + z[0], p[1] + z[1], p[2] + z[2], p[3] + z[3]];
    }
}

fn accepted(t: &HeppTree, n: &ScaleAssignment, labels: &[Label], x: &[Point]) -> bool {
    let pts: Vec<Vec<f64>> = x.iter().map(|p| p.to_vec()).collect();
    in_sector(t, n, labels, &pts).unwrap_or(false)
}

fn sector_stats(
    d: &FeynmanDiagram,
    t: &HeppTree,
    n: &ScaleAssignment,
    eps: f64,
    cfg: &MCConfig,
) -> Result<BatchStats> {
    check_budget(d)?;
    if t.leaves() != d.internal() {
        return Err(Error::InvalidInput("tree leaves must be the internal vertices".into()));
    }
    if n.values.len() != t.inner_count() || !n.is_compatible(t) {
        return Err(Error::PreconditionViolated("scale assignment is not compatible with the tree".into()));
    }
    let eval = GreensEvaluator::new(cfg.kernel_mode);
    let plan = plan(t, n);
    let (edges, loops) = internal_edges(d);
    let at = |l: Label| plan.labels.iter().position(|&x| x == l).unwrap();
    let edges: Vec<(usize, usize, i32)> = edges.into_iter().map(|(a, b, m)| (at(a), at(b), m)).collect();
    let constant = plan.volume * eval.mollified([0.0; 4], eps).abs().powi(loops);
    let m = plan.labels.len();

    let pilot = run_batched(PILOT_SAMPLES.min(cfg.samples.max(1000)), cfg.chunk_size, cfg.seed ^ PILOT_STREAM, |rng| {
        let mut x = vec![[0.0; 4]; m];
        place(&plan, rng, &mut x);
        f64::from(u8::from(accepted(t, n, &plan.labels, &x)))
    });
    if pilot.mean < MIN_ACCEPTANCE {
        return Err(Error::EmptySector(pilot.mean));
    }

    Ok(run_batched(cfg.samples, cfg.chunk_size, cfg.seed, |rng| {
        let mut x = vec![[0.0; 4]; m];
        place(&plan, rng, &mut x);
        if !accepted(t, n, &plan.labels, &x) {
            return 0.0;
        }
        let mut w = constant;
        for &(a, b, k) in &edges {
            w *= eval.mollified(sub(x[b], x[a]), eps).abs().powi(k);
        }
        w
    }))
}

/// `∫_{D_(T,n)} |W_εΓ|` with the smallest internal label pinned at the origin.
pub fn sector_integral(
    d: &FeynmanDiagram,
    t: &HeppTree,
    n: &ScaleAssignment,
    eps: f64,
    cfg: &MCConfig,
) -> Result<ValuationResult> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    let stats = sector_stats(d, t, n, eps, cfg)?;
    Ok(result_from(&stats, eps, cfg, Vec::new()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorSum {
    pub estimate: f64,
    pub stderr: f64,
    pub sectors: usize,
    /// Assignments skipped because their proposal acceptance was too small.
    pub empty: usize,
}

/// Sum of [`sector_integral`] over all compatible assignments with scales below `cap`.
pub fn sector_sum(d: &FeynmanDiagram, t: &HeppTree, cap: u32, eps: f64, cfg: &MCConfig) -> Result<SectorSum> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    let mut total = BatchStats::exact(0.0);
    let mut sectors = 0;
    let mut empty = 0;
    for n in compatible_assignments(t, cap, false)? {
        match sector_stats(d, t, &n, eps, cfg) {
            Ok(s) => {
                total = total.combine(&s, |a, b| a + b);
                sectors += 1;
            }
            Err(Error::EmptySector(_)) => empty += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SectorSum { estimate: total.mean, stderr: total.stderr(), sectors, empty })
}
