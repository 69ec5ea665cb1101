//! Monte Carlo valuation of small Anderson–Feynman diagrams.
//!
//! Each connected component is sampled along a spanning tree: the root is
//! uniform on the torus (or pinned at the origin for vacuum components) and
//! every other vertex is placed at a random displacement from its tree
//! parent. Displacements come from a proposal that puts log-uniform mass on
//! small radii, so that products of singular kernels keep bounded weights.
//!
//! Runs are split into chunks with independent counter-based streams keyed
//! by `(seed, chunk)`; chunk sums are reduced in chunk order, so results are
//! reproducible bit for bit. Standard errors come from 20 batch means.
//!
//! With `φ ≡ 1` a leaf attached by a single leg integrates to `∫G_ε = 1`;
//! this leg integration is on by default and can be switched off to sample
//! the leaves as well.

mod sampling;
mod scan;
mod shells;

use std::collections::HashMap;
use std::f64::consts::PI;

use num_traits::ToPrimitive;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bphz::{big_to_string, DiagramProduct, FormalSum};
use crate::diagrams::{anderson_type, FeynmanDiagram, Label};
use crate::error::{Error, Result};
use crate::greens::{reduce, sub, torus_norm, GreensEvaluator, KernelMode, Point, MAX_EPSILON};

pub use sampling::{shell_volume, BatchStats, BATCHES};
pub use scan::{write_increments_csv, write_scan_csv, weak_coupling_scan, Increment, ScanRow, ScanTable, ScanTarget};
pub use shells::{sector_integral, sector_sum, shell_integral, SectorSum};

use sampling::{run_batched, torus_volume, uniform_cube, Proposal};

/// Largest number of internal vertices accepted for sampling.
pub const MAX_INTERNAL_VERTICES: usize = 4;

/// Smooth bump `exp(−1/(1−s²))` in `s = |x − center| / width`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Point,
    pub width: f64,
}

impl Bump {
    pub fn value(&self, x: Point) -> f64 {
        let s = torus_norm(sub(x, self.center)) / self.width;
        if s < 1.0 {
            (-1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// `φ ≡ 1`.
    #[default]
    ConstantOne,
    /// `φ(x_L) = Π_ℓ bump_ℓ(x_ℓ)`, one bump per leaf in leaf order.
    ProductBump(Vec<Bump>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stratification {
    #[default]
    None,
    /// Dyadic shells for the internal edge of two-vertex diagrams.
    DyadicShells,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub samples: usize,
    pub seed: u64,
    pub chunk_size: usize,
    pub stratification: Stratification,
    pub kernel_mode: KernelMode,
    /// Integrate single-leg leaves exactly when `φ ≡ 1`.
    pub integrate_legs: bool,
    /// Scale of the proposal's small-radius mass; defaults to `ε`. Runs that
    /// share it share their random displacements.
    pub proposal_scale: Option<f64>,
    /// Bare coupling `λ̂`; when set, `λ_ε = λ̂ (log 1/ε)^{-1/2}` is reported.
    pub lambda_hat: Option<f64>,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig {
            samples: 1 << 16,
            seed: 0,
            chunk_size: 4096,
            stratification: Stratification::None,
            kernel_mode: KernelMode::ExactTorus,
            integrate_legs: true,
            proposal_scale: None,
            lambda_hat: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeakCoupling {
    pub lambda_hat: f64,
    pub lambda_eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermValue {
    pub coefficient: String,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValuationResult {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub epsilon: f64,
    /// `N_ε = ⌊log₂ 1/ε⌋`.
    pub n_eps: u32,
    pub weak_coupling: Option<WeakCoupling>,
    /// Per-term values of a formal sum; empty for a single diagram.
    pub terms: Vec<TermValue>,
}

/// `N_ε = ⌊log₂ 1/ε⌋`.
pub fn n_eps(eps: f64) -> u32 {
    let mut n = (1.0 / eps).log2().floor().max(0.0) as u32;
    while 2f64.powi(-(n as i32)) < eps && n > 0 {
        n -= 1;
    }
    while 2f64.powi(-(n as i32 + 1)) >= eps {
        n += 1;
    }
    n
}

/// `λ_ε = λ̂ (log 1/ε)^{-1/2}`.
pub fn lambda_eps(lambda_hat: f64, eps: f64) -> f64 {
    lambda_hat / (1.0 / eps).ln().sqrt()
}

/// The exponent `k` when `eps = 2^{-k}` exactly.
pub fn dyadic_exponent(eps: f64) -> Option<u32> {
    if !(eps > 0.0 && eps <= 1.0) {
        return None;
    }
    let k = n_eps(eps);
    (2f64.powi(-(k as i32)) == eps).then_some(k)
}

/// Parses a dyadic token `2^-k`.
pub fn parse_dyadic(token: &str) -> Result<f64> {
    let k = token
        .trim()
        .strip_prefix("2^-")
        .and_then(|k| k.parse::<u32>().ok())
        .ok_or_else(|| Error::InvalidInput(format!("'{token}' is not of the form 2^-k")))?;
    if k > 60 {
        return Err(Error::InvalidInput(format!("exponent in '{token}' is too large")));
    }
    Ok(2f64.powi(-(k as i32)))
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps <= MAX_EPSILON {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon {eps} outside (0, 1/4]")))
    }
}

fn check_config(cfg: &MCConfig) -> Result<()> {
    if cfg.samples == 0 || cfg.chunk_size == 0 {
        return Err(Error::InvalidInput("samples and chunk size must be positive".into()));
    }
    if let Some(s) = cfg.proposal_scale {
        check_epsilon(s)?;
    }
    Ok(())
}

fn check_budget(d: &FeynmanDiagram) -> Result<()> {
    if d.internal().len() > MAX_INTERNAL_VERTICES {
        return Err(Error::BudgetExceeded(format!(
            "{} internal vertices exceeds the sampling limit {MAX_INTERNAL_VERTICES}",
            d.internal().len()
        )));
    }
    if d.edges().iter().any(|e| e.ty != anderson_type()) {
        return Err(Error::InvalidInput("only Green's-function edges can be valued".into()));
    }
    Ok(())
}

/// One connected component prepared for sampling.
struct Component {
    vacuum: bool,
    single: bool,
    root: Label,
    steps: Vec<(Label, Label, Proposal)>,
    edges: Vec<(Label, Label, i32)>,
    loops: i32,
    leaves: Vec<(Label, usize)>,
}

struct Sampler<'a> {
    eval: GreensEvaluator,
    eps: f64,
    phi: &'a TestFunction,
    g_zero: f64,
}

impl Sampler<'_> {
    fn kernel(&self, z: Point) -> f64 {
        self.eval.mollified(z, self.eps)
    }

    fn draw(&self, c: &Component, rng: &mut ChaCha8Rng, pos: &mut [Point]) -> f64 {
        let mut weight = self.g_zero.powi(c.loops);
        if c.vacuum {
            pos[c.root] = [0.0; 4];
        } else {
            pos[c.root] = uniform_cube(rng);
            weight *= torus_volume();
        }
        for (v, parent, proposal) in &c.steps {
            let (z, w) = proposal.sample(rng);
            let p = pos[*parent];
            pos[*v] = [p[0] + z[0], p[1] + z[1], p[2] + z[2], p[3] + z[3]];
            weight *= w;
        }
        for &(a, b, m) in &c.edges {
            weight *= self.kernel(sub(pos[b], pos[a])).powi(m);
            if weight == 0.0 {
                return 0.0;
            }
        }
        if let TestFunction::ProductBump(bumps) = self.phi {
            for &(leaf, idx) in &c.leaves {
                weight *= bumps[idx].value(reduce(pos[leaf]));
            }
        }
        weight
    }

    fn value(&self, c: &Component, cfg: &MCConfig, bound: usize) -> BatchStats {
        if c.single {
            let base = if c.vacuum { 1.0 } else { torus_volume() };
            return BatchStats::exact(base * self.g_zero.powi(c.loops));
        }
        run_batched(cfg.samples, cfg.chunk_size, cfg.seed, |rng| {
            let mut pos = vec![[0.0; 4]; bound];
            self.draw(c, rng, &mut pos)
        })
    }
}

/// Connected components over internal vertices and leaves, joined by edges and legs.
fn components(d: &FeynmanDiagram) -> Vec<Vec<Label>> {
    let bound = d.label_bound();
    let mut parent: Vec<usize> = (0..bound).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let join = |a: usize, b: usize, p: &mut Vec<usize>| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    for e in d.edges() {
        join(e.tail, e.head, &mut parent);
    }
    for l in d.legs() {
        join(l.tail, l.head, &mut parent);
    }
    let mut groups: HashMap<usize, Vec<Label>> = HashMap::new();
    let mut vertices: Vec<Label> = d.internal().iter().chain(d.leaves()).copied().collect();
    vertices.sort_unstable();
    for v in vertices {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    let mut out: Vec<Vec<Label>> = groups.into_values().collect();
    out.sort();
    out
}

fn prepare(d: &FeynmanDiagram, eps: f64, phi: &TestFunction, cfg: &MCConfig, pin: Option<Label>) -> Result<Vec<Component>> {
    let scale = cfg.proposal_scale.unwrap_or(eps);
    let integrate = cfg.integrate_legs && matches!(phi, TestFunction::ConstantOne);
    if let TestFunction::ProductBump(b) = phi {
        if b.len() < d.leaves().len() {
            return Err(Error::InvalidInput(format!("{} bumps for {} leaves", b.len(), d.leaves().len())));
        }
    }
    let shells = cfg.stratification == Stratification::DyadicShells && d.internal().len() == 2;
    let mut out = Vec::new();
    for group in components(d) {
        let in_group = |v: Label| group.contains(&v);
        let vacuum = !group.iter().any(|&v| d.is_leaf(v));
        let mut vertices = group.clone();
        let mut edges: Vec<(Label, Label, i32)> = Vec::new();
        let mut loops = 0i32;
        for e in d.edges().iter().filter(|e| in_group(e.tail)) {
            if e.is_loop() {
                loops += e.mult as i32;
            } else {
                edges.push((e.tail, e.head, e.mult as i32));
            }
        }
        for l in d.legs().iter().filter(|l| in_group(l.tail)) {
            if integrate {
                // the leaf end integrates to one; keep the other end
                let drop = if d.is_leaf(l.head) { l.head } else { l.tail };
                vertices.retain(|&v| v != drop);
            } else {
                edges.push((l.tail, l.head, 1));
            }
        }
        let root = match pin.filter(|p| vertices.contains(p)) {
            Some(p) => p,
            None => *vertices.iter().find(|&&v| d.is_internal(v)).unwrap_or(&vertices[0]),
        };
        // heaviest-first spanning tree, so that high-multiplicity edges are
        // sampled directly by the proposal
        let mut weight: HashMap<(Label, Label), i32> = HashMap::new();
        for &(a, b, m) in &edges {
            *weight.entry((a.min(b), a.max(b))).or_insert(0) += m;
        }
        let mut steps = Vec::new();
        let mut seen = vec![root];
        loop {
            let best = weight
                .iter()
                .filter_map(|(&(a, b), &m)| match (seen.contains(&a), seen.contains(&b)) {
                    (true, false) => Some((m, a, b)),
                    (false, true) => Some((m, b, a)),
                    _ => None,
                })
                .min_by_key(|&(m, u, v)| (-m, v, u));
            let Some((_, u, v)) = best else { break };
            seen.push(v);
            let proposal = if shells && d.is_internal(u) && d.is_internal(v) {
                Proposal::shells(scale)
            } else {
                Proposal::mixture(scale)
            };
            steps.push((v, u, proposal));
        }
        let leaves = d
            .leaves()
            .iter()
            .enumerate()
            .filter(|(_, l)| vertices.contains(l))
            .map(|(i, &l)| (l, i))
            .collect();
        out.push(Component { vacuum, single: vertices.len() == 1, root, steps, edges, loops, leaves });
    }
    Ok(out)
}

fn diagram_stats(
    d: &FeynmanDiagram,
    eps: f64,
    phi: &TestFunction,
    cfg: &MCConfig,
    pin: Option<Label>,
) -> Result<BatchStats> {
    check_budget(d)?;
    let eval = GreensEvaluator::new(cfg.kernel_mode);
    let sampler = Sampler { eval, eps, phi, g_zero: eval.mollified([0.0; 4], eps) };
    let bound = d.label_bound();
    let mut total = BatchStats::exact(1.0);
    for c in prepare(d, eps, phi, cfg, pin)? {
        let s = sampler.value(&c, cfg, bound);
        total = total.combine(&s, |a, b| a * b);
    }
    Ok(total)
}

fn result_from(stats: &BatchStats, eps: f64, cfg: &MCConfig, terms: Vec<TermValue>) -> ValuationResult {
    ValuationResult {
        estimate: stats.mean,
        stderr: stats.stderr(),
        samples: stats.samples,
        epsilon: eps,
        n_eps: n_eps(eps),
        weak_coupling: cfg.lambda_hat.map(|l| WeakCoupling { lambda_hat: l, lambda_eps: lambda_eps(l, eps) }),
        terms,
    }
}

/// Monte Carlo estimate of `Π_εΓ(φ)`.
pub fn evaluate_diagram(d: &FeynmanDiagram, eps: f64, phi: &TestFunction, cfg: &MCConfig) -> Result<ValuationResult> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    let stats = diagram_stats(d, eps, phi, cfg, None)?;
    Ok(result_from(&stats, eps, cfg, Vec::new()))
}

/// As [`evaluate_diagram`], with the spanning-tree root of the component
/// containing `pin` placed at `pin`. For vacuum components this chooses the
/// vertex that is not integrated.
pub fn evaluate_diagram_pinned(
    d: &FeynmanDiagram,
    eps: f64,
    phi: &TestFunction,
    cfg: &MCConfig,
    pin: Label,
) -> Result<ValuationResult> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    if !d.is_internal(pin) && !d.is_leaf(pin) {
        return Err(Error::InvalidInput(format!("vertex {pin} is not in the diagram")));
    }
    let stats = diagram_stats(d, eps, phi, cfg, Some(pin))?;
    Ok(result_from(&stats, eps, cfg, Vec::new()))
}

fn product_stats(
    p: &DiagramProduct,
    eps: f64,
    phi: &TestFunction,
    cfg: &MCConfig,
    memo: &mut HashMap<FeynmanDiagram, BatchStats>,
) -> Result<BatchStats> {
    let mut total = BatchStats::exact(1.0);
    for f in &p.factors {
        let s = match memo.get(f) {
            Some(s) => s.clone(),
            None => {
                let s = diagram_stats(f, eps, phi, cfg, None)?;
                memo.insert(f.clone(), s.clone());
                s
            }
        };
        total = total.combine(&s, |a, b| a * b);
    }
    Ok(total)
}

/// Batch statistics of a formal sum together with per-term values. Every
/// factor uses the same seed, so terms share their random numbers.
pub(crate) fn formal_sum_stats(
    fs: &FormalSum,
    eps: f64,
    phi: &TestFunction,
    cfg: &MCConfig,
) -> Result<(BatchStats, Vec<TermValue>)> {
    if fs.is_formally_zero() {
        return Ok((BatchStats::exact(0.0), Vec::new()));
    }
    for (_, p) in fs.terms() {
        for f in &p.factors {
            check_budget(f)?;
        }
    }
    let mut memo = HashMap::new();
    let mut total = BatchStats::exact(0.0);
    let mut terms = Vec::new();
    for (c, p) in fs.terms() {
        let coeff = c.to_f64().ok_or_else(|| Error::InvalidInput("coefficient out of range".into()))?;
        let s = product_stats(p, eps, phi, cfg, &mut memo)?.map(|v| coeff * v);
        terms.push(TermValue { coefficient: big_to_string(c), estimate: s.mean, stderr: s.stderr() });
        total = total.combine(&s, |a, b| a + b);
    }
    Ok((total, terms))
}

/// `Σ coeff · Π factor valuations`; a formally zero sum is exactly zero.
pub fn evaluate_formal_sum(fs: &FormalSum, eps: f64, phi: &TestFunction, cfg: &MCConfig) -> Result<ValuationResult> {
    check_epsilon(eps)?;
    check_config(cfg)?;
    let (stats, terms) = formal_sum_stats(fs, eps, phi, cfg)?;
    Ok(result_from(&stats, eps, cfg, terms))
}

/// Random bump test function with one bump per leaf.
pub fn random_product_bump(d: &FeynmanDiagram, width: f64, rng: &mut impl Rng) -> TestFunction {
    TestFunction::ProductBump(
        d.leaves()
            .iter()
            .map(|_| Bump { center: std::array::from_fn(|_| rng.gen_range(-PI..PI)), width })
            .collect(),
    )
}

#[cfg(test)]
mod tests;
