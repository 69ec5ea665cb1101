//! Verification suites behind `anderson verify`.

use std::collections::BTreeSet;
use std::f64::consts::{LN_2, PI};

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bphz::{factorwise_assembly, renormalised_moment_expansion, zimmermann, Matching};
use crate::bubbles::{
    bijection_report, count_extraction_sequences, heap_orderings, hooklength_count, is_contributing,
    sigma_eff_closed_form, sigma_eff_coefficients, sigma_eff_partial_sums, Budget, CouplingSign, RootedTree,
};
use crate::degrees::{boundary_counts, classify, connected_subsets, full_degree, Class};
use crate::diagrams::{build, enumerate_pairings, ladder_tree, named, trees_from_sizes, FeynmanDiagram, PairingMode};
use crate::error::{Error, Result};
use crate::greens::{symmetric_torus_integral, GreensEvaluator, KernelMode};
use crate::hepp::{contributing_trees, locate_sector_for, null_count, sectors_containing, HeppTree, Point};
use crate::valuation::{n_eps, shell_integral, weak_coupling_scan, MCConfig, ScanTarget, TestFunction};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub computed: String,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, computed: impl ToString, expected: impl ToString, pass: bool) -> Self {
        Check { name: name.into(), computed: computed.to_string(), expected: expected.to_string(), pass }
    }

    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        format!("{verdict} {}: computed {} expected {}", self.name, self.computed, self.expected)
    }
}

#[derive(Clone, Debug)]
pub struct NumericOptions {
    pub eps: f64,
    pub samples: usize,
    pub seed: u64,
    pub kernel_mode: KernelMode,
}

/// Connected complete pairings of two ladder trees with `n₁ + n₂ ≤ max_total`.
pub fn connected_complete(max_total: usize) -> Result<Vec<FeynmanDiagram>> {
    let mut out = Vec::new();
    for total in (2..=max_total).step_by(2) {
        for n1 in 1..total {
            let trees = trees_from_sizes(&[n1, total - n1]);
            for p in enumerate_pairings(&trees, PairingMode::ConnectedComplete)? {
                out.push(build(&trees, &p)?);
            }
        }
    }
    Ok(out)
}

/// Unlabelled rooted trees with `n` nodes as parent arrays with `parent[v] < v`.
pub fn rooted_trees(n: usize) -> Vec<Vec<Option<usize>>> {
    fn canon(children: &[Vec<usize>], v: usize) -> String {
        let mut parts: Vec<String> = children[v].iter().map(|&c| canon(children, c)).collect();
        parts.sort();
        format!("({})", parts.concat())
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<Option<usize>>> = vec![vec![None]];
    while let Some(p) = stack.pop() {
        if p.len() == n {
            let mut children = vec![Vec::new(); n];
            for (v, q) in p.iter().enumerate() {
                if let Some(q) = q {
                    children[*q].push(v);
                }
            }
            if seen.insert(canon(&children, 0)) {
                out.push(p);
            }
            continue;
        }
        for q in 0..p.len() {
            let mut next = p.clone();
            next.push(Some(q));
            stack.push(next);
        }
    }
    out
}

/// Orderings with every parent before its children, by dynamic programming over subsets.
pub fn brute_force_orderings(parent: &[Option<usize>]) -> u128 {
    let n = parent.len();
    let mut count = vec![0u128; 1 << n];
    count[0] = 1;
    for mask in 0..(1usize << n) {
        if count[mask] == 0 {
            continue;
        }
        for v in 0..n {
            let free = mask & (1 << v) == 0;
            let ready = parent[v].map_or(true, |p| mask & (1 << p) != 0);
            if free && ready {
                count[mask | (1 << v)] += count[mask];
            }
        }
    }
    count[(1 << n) - 1]
}

pub fn identities(nmax: usize) -> Result<Vec<Check>> {
    let table = sigma_eff_coefficients(nmax, if nmax > 5 { Budget::Extended } else { Budget::Default })?;
    let mut checks = Vec::new();
    for c in &table.coefficients {
        checks.push(Check::new(
            format!("C_{} = 4^{}", c.n, c.n - 1),
            crate::bphz::big_to_string(&c.c_n),
            crate::bphz::big_to_string(&c.expected()),
            c.matches_geometric(),
        ));
    }
    if let Some(c2) = table.coefficients.iter().find(|c| c.n == 2) {
        checks.push(Check::new("contributing pairings at n = 2", c2.contributing, 4, c2.contributing == 4));
    }

    let mut bad = 0;
    let mut trees = 0;
    for n in 1..=9 {
        for p in rooted_trees(n) {
            let t = RootedTree::from_parents(p.clone())?;
            let brute = brute_force_orderings(&p);
            if heap_orderings(&t)? != brute || hooklength_count(&t) != brute {
                bad += 1;
            }
            trees += 1;
        }
    }
    checks.push(Check::new(format!("heap orderings on {trees} rooted trees up to 9 nodes"), format!("{bad} mismatches"), "0 mismatches", bad == 0));

    let total = (2 * nmax).min(10);
    let diagrams: Vec<FeynmanDiagram> = connected_complete(total)?.into_iter().filter(is_contributing).collect();
    let failures = diagrams.iter().filter(|d| !bijection_report(d).holds()).count();
    checks.push(Check::new(
        format!("|S| = sum of |T|!/T! over {} contributing diagrams (n1 + n2 <= {total})", diagrams.len()),
        format!("{failures} failures"),
        "0 failures",
        failures == 0,
    ));
    for (name, want) in [("c42", 1u128), ("cc42plain", 6)] {
        let got = count_extraction_sequences(&named(name)?);
        checks.push(Check::new(format!("|S({name})|"), got, want, got == want));
    }

    let lambda = PI;
    let limit = sigma_eff_closed_form(lambda, CouplingSign::Real)?;
    let sums = sigma_eff_partial_sums(lambda, CouplingSign::Real, &table.coefficients);
    let errors: Vec<f64> = sums.iter().map(|s| (limit - s).abs()).collect();
    let halving = errors.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() < 1e-9);
    checks.push(Check::new(
        "partial sums at lambda = pi halve their distance to the limit",
        format!("limit {limit}, errors {errors:?}"),
        "limit 2, ratio 1/2",
        halving && (limit - 2.0).abs() < 1e-12,
    ));
    let imaginary = sigma_eff_closed_form(lambda, CouplingSign::Imaginary)?;
    let alt = sigma_eff_partial_sums(lambda, CouplingSign::Imaginary, &table.coefficients);
    let alt_errors: Vec<f64> = alt.iter().map(|s| (imaginary - s).abs()).collect();
    let alt_halving = alt_errors.windows(2).all(|w| (w[1] / w[0] - 0.5).abs() < 1e-9);
    checks.push(Check::new(
        "imaginary coupling at lambda = pi",
        format!("limit {imaginary}, errors {alt_errors:?}"),
        "limit 2/3, ratio 1/2",
        alt_halving && (imaginary - 2.0 / 3.0).abs() < 1e-12,
    ));
    Ok(checks)
}

pub fn renorm(nmax: usize) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut loops = 0;
    let mut survivors = 0;
    for n in 0..=nmax {
        for k in enumerate_pairings(&[ladder_tree(n)], PairingMode::Internal)? {
            let d = build(&[ladder_tree(n)], &k)?;
            if d.has_self_loop() {
                loops += 1;
                if !zimmermann(&d).is_formally_zero() {
                    survivors += 1;
                }
            }
        }
    }
    checks.push(Check::new(
        format!("tadpole cancellation on {loops} self-loop diagrams (n <= {nmax})"),
        format!("{survivors} non-zero"),
        "0 non-zero",
        survivors == 0,
    ));

    let mut mismatches = Vec::new();
    let mut cases = 0;
    for total in 2..=8usize {
        for n in 1..=total / 2 {
            let m = total - n;
            let direct = renormalised_moment_expansion(&trees_from_sizes(&[n, m]))?;
            let glued = factorwise_assembly(n, m)?;
            cases += 1;
            if direct.signature(Matching::Strict) != glued.signature(Matching::Strict) {
                mismatches.push(format!("({n},{m})"));
            }
        }
    }
    checks.push(Check::new(
        format!("renormalised moments equal factorwise assembly ({cases} cases, n + m <= 8)"),
        format!("{} mismatches {:?}", mismatches.len(), mismatches),
        "0 mismatches",
        mismatches.is_empty(),
    ));

    let (subs, bad_degree, bad_neg) = structure_scan(10)?;
    checks.push(Check::new(
        format!("deg = -4 + (in + out) on {subs} connected full subdiagrams"),
        format!("{bad_degree} violations"),
        "0 violations",
        bad_degree == 0,
    ));
    checks.push(Check::new("deg = -2 iff one in and one out", format!("{bad_neg} violations"), "0 violations", bad_neg == 0));

    let mut not_negative = 0;
    let mut complete = 0;
    for n in (2..=10).step_by(2) {
        for k in enumerate_pairings(&[ladder_tree(n)], PairingMode::Complete)? {
            complete += 1;
            if classify(&build(&[ladder_tree(n)], &k)?) != Class::Negative {
                not_negative += 1;
            }
        }
    }
    checks.push(Check::new(
        format!("complete internal pairings classify Negative ({complete} diagrams)"),
        format!("{not_negative} exceptions"),
        "0 exceptions",
        not_negative == 0,
    ));
    Ok(checks)
}

/// Diagrams from every pairing of one or two ladder trees with at most `max_total` inner vertices.
pub fn small_diagrams(max_total: usize) -> Result<Vec<FeynmanDiagram>> {
    let mut out = Vec::new();
    for n in 1..=max_total {
        for k in enumerate_pairings(&[ladder_tree(n)], PairingMode::Internal)? {
            out.push(build(&[ladder_tree(n)], &k)?);
        }
    }
    for total in 2..=max_total {
        for n1 in 1..=total / 2 {
            let trees = trees_from_sizes(&[n1, total - n1]);
            for k in enumerate_pairings(&trees, PairingMode::Complete)? {
                out.push(build(&trees, &k)?);
            }
        }
    }
    Ok(out)
}

/// Counts connected full subdiagrams and violations of the two degree rules.
pub fn structure_scan(max_total: usize) -> Result<(usize, usize, usize)> {
    let mut subs = 0;
    let mut bad_degree = 0;
    let mut bad_neg = 0;
    for d in small_diagrams(max_total)? {
        for s in connected_subsets(&d) {
            subs += 1;
            let deg = full_degree(&d, s);
            let (i, o) = boundary_counts(&d, s);
            if deg != Rational64::from_integer(-4 + (i + o) as i64) {
                bad_degree += 1;
            }
            if (deg == Rational64::from_integer(-2)) != (i == 1 && o == 1) {
                bad_neg += 1;
            }
        }
    }
    Ok((subs, bad_degree, bad_neg))
}

fn random_configuration(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point> {
    (0..m).map(|_| (0..4).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()).collect()
}

/// Configurations whose pairwise distances are distinct.
pub fn distinct_distance_configuration(rng: &mut ChaCha8Rng, m: usize) -> Vec<Point> {
    loop {
        let x = random_configuration(rng, m);
        let mut dist: Vec<f64> = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                dist.push(crate::hepp::torus_distance(&x[i], &x[j]));
            }
        }
        dist.sort_by(f64::total_cmp);
        if dist.windows(2).all(|w| w[1] - w[0] > 1e-9) {
            return x;
        }
    }
}

pub fn sectors(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let d = named("nested4")?;
    let got: Vec<usize> = ["((1,2),(3,4))", "(((1,2),3),4)", "(1,(2,(3,4)))"]
        .iter()
        .map(|s| HeppTree::parse(s).map(|t| null_count(&t, &d).null))
        .collect::<Result<_>>()?;
    checks.push(Check::new("Null of the three nested4 trees", format!("{got:?}"), "[2, 3, 1]", got == [2, 3, 1]));
    let n = contributing_trees(&named("bubble4")?).len();
    checks.push(Check::new("contributing trees of bubble4", n, 1, n == 1));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = [1, 2, 3, 4];
    let mut covered = 0;
    let trials = 1000;
    for _ in 0..trials {
        let x = distinct_distance_configuration(&mut rng, labels.len());
        if let Ok((t, n)) = locate_sector_for(&labels, &x) {
            if crate::hepp::in_sector(&t, &n, &labels, &x)? {
                covered += 1;
            }
        }
    }
    checks.push(Check::new(
        "locate_sector covers random 4-point configurations",
        format!("{covered}/{trials}"),
        format!("{trials}/{trials}"),
        covered == trials,
    ));

    let mut violations = 0;
    let trials = 10_000;
    for _ in 0..trials {
        let x = random_configuration(&mut rng, labels.len());
        let hits = sectors_containing(&labels, &x)?.into_iter().filter(|(_, n)| n.is_distinct()).count();
        if hits > 1 {
            violations += 1;
        }
    }
    checks.push(Check::new(
        format!("distinct-scale co-membership over {trials} trials"),
        format!("{violations} violations"),
        "0 violations",
        violations == 0,
    ));
    Ok(checks)
}

pub fn numeric(opts: &NumericOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let g = GreensEvaluator::new(KernelMode::ExactTorus);
    let remainder = |r: f64| -> Result<f64> {
        let x = [r, 0.0, 0.0, 0.0];
        Ok(g.greens(x)? - 1.0 / (4.0 * PI * PI * r * r) - r.ln() / (8.0 * PI * PI))
    };
    let radii: Vec<f64> = (0..=20).map(|i| 1e-3 * 10f64.powf(i as f64 / 20.0)).collect();
    let values: Vec<f64> = radii.iter().map(|&r| remainder(r)).collect::<Result<_>>()?;
    let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
    checks.push(Check::new("local remainder variation on [1e-3, 1e-2]", spread, "< 0.1", spread < 0.1));

    let total = symmetric_torus_integral(|x| g.greens(x).unwrap_or(0.0));
    checks.push(Check::new("integral of G", total, "1 +- 1e-3", (total - 1.0).abs() < 1e-3));
    let total_eps = symmetric_torus_integral(|x| g.greens_mollified(x, 1.0 / 32.0).unwrap_or(0.0));
    checks.push(Check::new("integral of G_eps at eps = 2^-5", total_eps, "1 +- 1e-3", (total_eps - 1.0).abs() < 1e-3));

    let pts: Vec<(f64, f64)> = (3..=7)
        .map(|k| {
            let eps = 2f64.powi(-k);
            g.greens_at_zero(eps).map(|v| (eps.ln(), v.ln()))
        })
        .collect::<Result<_>>()?;
    let slope = fit_slope(&pts);
    checks.push(Check::new("log-log slope of G_eps(0)", slope, "-2 +- 0.05", (slope + 2.0).abs() <= 0.05));

    let cfg = MCConfig { samples: opts.samples, seed: opts.seed, kernel_mode: opts.kernel_mode, ..MCConfig::default() };
    let top = n_eps(opts.eps);
    if top < 2 {
        return Err(Error::InvalidInput("numeric suite needs eps <= 2^-2".into()));
    }
    let n = top / 2;
    let r = shell_integral(n, opts.eps, &cfg)?;
    let target = LN_2 / (8.0 * PI * PI);
    let envelope = shell_envelope(n, top);
    let dev = (r.estimate - target).abs();
    checks.push(Check::new(
        format!("shell {n} at eps = 2^-{top}"),
        format!("{:.7} +- {:.1e}", r.estimate, r.stderr),
        format!("{target:.7} within {:.1e}", envelope + 3.0 * r.stderr),
        dev <= envelope + 3.0 * r.stderr,
    ));

    let scan = weak_coupling_scan(
        &ScanTarget::Diagram(named("bubble4")?),
        &TestFunction::ConstantOne,
        1.0,
        &[2f64.powi(-8), 2f64.powi(-9)],
        &MCConfig { samples: opts.samples.min(1_000_000), ..cfg },
    )?;
    let inc = &scan.increments[0];
    let want = (2.0 * PI).powi(4) * target;
    checks.push(Check::new(
        "bubble increment B(2^-9) - B(2^-8)",
        format!("{:.3} +- {:.3}", inc.difference, inc.stderr),
        format!("{want:.3} within 15%"),
        (inc.difference - want).abs() <= 0.15 * want,
    ));
    Ok(checks)
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Deviation allowance `C (2^{-n} + 2^{-(N−n−1)})` for the shell constant.
///
/// `C` bounds `2^n |A(n)|`, where `A(n)` integrates the cross terms
/// `2H(L + Q₀) + (L + Q₀)²` of `G² ≈ (H + L + Q₀)²` over shell `n`, with
/// `H = 1/(4π²r²)`, `L = log r/(8π²)` and `Q₀` the constant part at the
/// origin. The maximum over the shells is doubled.
pub fn shell_envelope(n: u32, top: u32) -> f64 {
    let q0 = crate::greens::local_constant();
    let cross = |r: f64| {
        let h = 1.0 / (4.0 * PI * PI * r * r);
        let l = r.ln() / (8.0 * PI * PI) + q0;
        (2.0 * h * l + l * l) * 2.0 * PI * PI * r.powi(3)
    };
    let c = (1..top)
        .map(|k| {
            let b = 2.0 * PI * 2f64.powi(-(k as i32));
            let a = 0.5 * b;
            let steps = 400;
            let h = (b - a) / steps as f64;
            let simpson: f64 = (0..=steps)
                .map(|i| {
                    let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                    w * cross(a + h * i as f64)
                })
                .sum::<f64>()
                * h
                / 3.0;
            simpson.abs() * 2f64.powi(k as i32)
        })
        .fold(0.0, f64::max);
    2.0 * c * (2f64.powi(-(n as i32)) + 2f64.powi(-((top - n - 1) as i32)))
}
