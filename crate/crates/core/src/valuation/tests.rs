use std::f64::consts::{LN_2, PI};

use super::*;
use crate::bphz::{rational, zimmermann};
use crate::degrees::{classify, Class};
use crate::diagrams::{build, named, pairing_from, trees_from_sizes, Edge, Leg};
use crate::hepp::{HeppTree, ScaleAssignment};

fn cfg(samples: usize, seed: u64) -> MCConfig {
    MCConfig { samples, seed, ..MCConfig::default() }
}

fn edge_diagram() -> FeynmanDiagram {
    FeynmanDiagram::new(4, vec![], vec![1, 2], vec![], vec![Leg { tail: 1, head: 2 }]).unwrap()
}

fn vacuum_triangle() -> FeynmanDiagram {
    let edges = vec![Edge::new(1, 2, 1), Edge::new(2, 3, 1), Edge::new(1, 3, 2)];
    FeynmanDiagram::new(4, vec![1, 2, 3], vec![], edges, vec![]).unwrap()
}

fn within(est: f64, se: f64, target: f64, k: f64) -> bool {
    (est - target).abs() <= k * se
}

#[test]
fn edge_diagram_gives_torus_volume() {
    let vol = (2.0 * PI).powi(4);
    let exact = evaluate_diagram(&edge_diagram(), 1.0 / 16.0, &TestFunction::ConstantOne, &cfg(1000, 1)).unwrap();
    assert!((exact.estimate - vol).abs() < 1e-9);

    let sampled = MCConfig { integrate_legs: false, ..cfg(200_000, 2) };
    let r = evaluate_diagram(&edge_diagram(), 1.0 / 16.0, &TestFunction::ConstantOne, &sampled).unwrap();
    assert!(r.stderr > 0.0);
    assert!(within(r.estimate, r.stderr, vol, 3.0), "{} ± {}", r.estimate, r.stderr);
}

#[test]
fn star_gives_torus_volume() {
    let star = named("star").unwrap();
    let vol = (2.0 * PI).powi(4);
    let sampled = MCConfig { integrate_legs: false, ..cfg(200_000, 3) };
    let r = evaluate_diagram(&star, 1.0 / 16.0, &TestFunction::ConstantOne, &sampled).unwrap();
    assert!(within(r.estimate, r.stderr, vol, 3.0), "{} ± {}", r.estimate, r.stderr);
    let exact = evaluate_diagram(&star, 1.0 / 16.0, &TestFunction::ConstantOne, &cfg(100, 3)).unwrap();
    assert!((exact.estimate - vol).abs() < 1e-9);
}

#[test]
fn vacuum_self_loop_is_kernel_at_zero() {
    let d = FeynmanDiagram::new(4, vec![1], vec![], vec![Edge::new(1, 1, 1)], vec![]).unwrap();
    for k in [3, 6, 9] {
        let eps = 2f64.powi(-k);
        let r = evaluate_diagram(&d, eps, &TestFunction::ConstantOne, &cfg(100, 0)).unwrap();
        let g0 = GreensEvaluator::exact().greens_at_zero(eps).unwrap();
        assert!((r.estimate - g0).abs() < 1e-6);
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let d = named("bubble4").unwrap();
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
    let phi = random_product_bump(&d, 2.0, &mut rng);
    let c = MCConfig { chunk_size: 512, ..cfg(20_000, 17) };
    let a = evaluate_diagram(&d, 1.0 / 32.0, &phi, &c).unwrap();
    let b = evaluate_diagram(&d, 1.0 / 32.0, &phi, &c).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
}

#[test]
fn formal_sums_are_linear_under_common_random_numbers() {
    let eps = 1.0 / 32.0;
    let c = cfg(20_000, 9);
    let phi = TestFunction::ConstantOne;
    let f1 = zimmermann(&named("sunset2").unwrap());
    let f2 = FormalSum::single(named("bubble4").unwrap());
    let e1 = evaluate_formal_sum(&f1, eps, &phi, &c).unwrap().estimate;
    let e2 = evaluate_formal_sum(&f2, eps, &phi, &c).unwrap().estimate;
    let combo = f1.scale(&rational(3)).add(&f2.scale(&rational(-2)));
    let e = evaluate_formal_sum(&combo, eps, &phi, &c).unwrap().estimate;
    let expected = 3.0 * e1 - 2.0 * e2;
    assert!((e - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{e} vs {expected}");
}

#[test]
fn vacuum_value_does_not_depend_on_pin() {
    let d = vacuum_triangle();
    let eps = 1.0 / 16.0;
    let runs: Vec<ValuationResult> = [1, 2, 3]
        .iter()
        .map(|&p| evaluate_diagram_pinned(&d, eps, &TestFunction::ConstantOne, &cfg(200_000, 40 + p as u64), p).unwrap())
        .collect();
    for a in &runs {
        for b in &runs {
            let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.estimate - b.estimate).abs() <= 3.0 * se, "{} vs {}", a.estimate, b.estimate);
        }
    }
}

#[test]
fn reversing_edges_changes_nothing() {
    let eps = 1.0 / 16.0;
    let c = MCConfig { integrate_legs: false, ..cfg(20_000, 4) };
    for d in [named("sunset2").unwrap(), vacuum_triangle(), named("crossed4").unwrap()] {
        let a = evaluate_diagram(&d, eps, &TestFunction::ConstantOne, &c).unwrap();
        let b = evaluate_diagram(&d.reversed(), eps, &TestFunction::ConstantOne, &c).unwrap();
        assert!((a.estimate - b.estimate).abs() <= 1e-9 * a.estimate.abs(), "{} vs {}", a.estimate, b.estimate);
    }
}

#[test]
fn renormalised_tadpole_is_exactly_zero() {
    let fs = zimmermann(&named("tadpole").unwrap());
    let r = evaluate_formal_sum(&fs, 1.0 / 64.0, &TestFunction::ConstantOne, &cfg(1000, 0)).unwrap();
    assert_eq!(r.estimate, 0.0);
    assert_eq!(r.stderr, 0.0);
}

#[test]
fn positive_diagrams_are_unchanged_by_renormalisation() {
    let d = named("star").unwrap();
    assert_eq!(classify(&d), Class::Positive);
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
    let phi = random_product_bump(&d, 3.0, &mut rng);
    let c = cfg(20_000, 8);
    let raw = evaluate_diagram(&d, 1.0 / 32.0, &phi, &c).unwrap();
    let ren = evaluate_formal_sum(&zimmermann(&d), 1.0 / 32.0, &phi, &c).unwrap();
    assert_eq!(raw.estimate.to_bits(), ren.estimate.to_bits());
}

#[test]
fn subtraction_terms_are_reported() {
    let d = named("sunset2").unwrap();
    let fs = zimmermann(&d);
    assert_eq!(fs.len(), 2);
    let eps = 1.0 / 32.0;
    let c = cfg(20_000, 12);
    let r = evaluate_formal_sum(&fs, eps, &TestFunction::ConstantOne, &c).unwrap();
    assert_eq!(r.terms.len(), 2);
    let sum: f64 = r.terms.iter().map(|t| t.estimate).sum();
    assert!((r.estimate - sum).abs() <= 1e-12 * sum.abs().max(1.0));
    let raw = evaluate_diagram(&d, eps, &TestFunction::ConstantOne, &c).unwrap();
    let first = r.terms.iter().find(|t| t.coefficient == "1/1").unwrap();
    assert_eq!(first.estimate.to_bits(), raw.estimate.to_bits());
}

#[test]
fn mid_range_shell_matches_log_two_constant() {
    let eps = 2f64.powi(-10);
    let n = 5;
    let r = shell_integral(n, eps, &cfg(200_000, 21)).unwrap();
    let target = LN_2 / (8.0 * PI * PI);
    let envelope = 0.01 * (2f64.powi(-(n as i32)) + 2f64.powi(-(10 - n as i32 - 1)));
    assert!((r.estimate - target).abs() <= envelope + 3.0 * r.stderr, "{} ± {}", r.estimate, r.stderr);
}

#[test]
fn shell_index_is_checked() {
    let eps = 2f64.powi(-6);
    assert!(shell_integral(5, eps, &cfg(100, 0)).is_ok());
    assert!(matches!(shell_integral(6, eps, &cfg(100, 0)), Err(Error::InvalidInput(_))));
}

#[test]
fn single_node_sector_is_a_shell() {
    let d = named("bubble4").unwrap();
    let vacuum = d.restrict(d.internal_set());
    let labels = vacuum.internal().to_vec();
    let t = HeppTree::parse(&format!("({},{})", labels[0], labels[1])).unwrap();
    let eps = 2f64.powi(-8);
    for n in [1u32, 4] {
        let s = sector_integral(&vacuum, &t, &ScaleAssignment { values: vec![n] }, eps, &cfg(50_000, 30)).unwrap();
        let sh = shell_integral(n, eps, &cfg(50_000, 31)).unwrap();
        let se = (s.stderr.powi(2) + sh.stderr.powi(2)).sqrt();
        assert!((s.estimate - sh.estimate).abs() <= 3.0 * se, "{} vs {}", s.estimate, sh.estimate);
    }
}

#[test]
fn incompatible_sector_is_rejected() {
    let d = named("nested4").unwrap();
    let t = HeppTree::parse("(((1,2),3),4)").unwrap();
    let bad = ScaleAssignment { values: vec![1, 2, 3] };
    let r = sector_integral(&d, &t, &bad, 1.0 / 16.0, &cfg(100, 0));
    assert!(matches!(r, Err(Error::PreconditionViolated(_))));
}

#[test]
fn large_diagrams_exceed_budget() {
    let trees = trees_from_sizes(&[5, 5]);
    let pairs: Vec<_> = (1..=5).map(|i| ((0, i), (1, i))).collect();
    let d = build(&trees, &pairing_from(&trees, &pairs).unwrap()).unwrap();
    assert!(d.internal().len() > MAX_INTERNAL_VERTICES);
    let r = evaluate_diagram(&d, 1.0 / 16.0, &TestFunction::ConstantOne, &cfg(100, 0));
    assert!(matches!(r, Err(Error::BudgetExceeded(_))));
}

#[test]
fn bumps_must_cover_the_leaves() {
    let d = named("bubble4").unwrap();
    let phi = TestFunction::ProductBump(vec![Bump { center: [0.0; 4], width: 1.0 }]);
    let r = evaluate_diagram(&d, 1.0 / 16.0, &phi, &cfg(100, 0));
    assert!(matches!(r, Err(Error::InvalidInput(_))));
}

#[test]
fn epsilon_must_be_small() {
    let d = named("bubble4").unwrap();
    for eps in [0.0, 0.5, f64::NAN] {
        assert!(evaluate_diagram(&d, eps, &TestFunction::ConstantOne, &cfg(100, 0)).is_err());
    }
}

#[test]
fn dyadic_helpers() {
    assert_eq!(n_eps(2f64.powi(-10)), 10);
    assert_eq!(n_eps(0.3), 1);
    assert_eq!(dyadic_exponent(0.125), Some(3));
    assert_eq!(dyadic_exponent(0.1), None);
    assert_eq!(parse_dyadic("2^-8").unwrap(), 1.0 / 256.0);
    assert!(parse_dyadic("0.01").is_err());
    assert!((lambda_eps(2.0, (-4.0f64).exp()) - 1.0).abs() < 1e-12);
}

#[test]
fn scan_rejects_non_dyadic_epsilon() {
    let t = ScanTarget::Diagram(named("bubble4").unwrap());
    let r = weak_coupling_scan(&t, &TestFunction::ConstantOne, 1.0, &[0.1], &cfg(100, 0));
    assert!(matches!(r, Err(Error::InvalidInput(_))));
}

#[test]
fn scan_reports_rows_and_increments() {
    let t = ScanTarget::Diagram(named("bubble4").unwrap());
    let eps = [2f64.powi(-4), 2f64.powi(-5), 2f64.powi(-6)];
    let table = weak_coupling_scan(&t, &TestFunction::ConstantOne, 1.0, &eps, &cfg(50_000, 3)).unwrap();
    assert_eq!(table.rows.len(), 3);
    assert_eq!(table.increments.len(), 2);
    assert_eq!(table.edge_count, 2);
    let expected = (2.0 * PI).powi(4) * LN_2 / (8.0 * PI * PI);
    for inc in &table.increments {
        assert!((inc.predicted - expected).abs() < 1e-9);
        assert!(inc.difference > 0.0);
    }
    let mut buf = Vec::new();
    write_scan_csv(&table, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("epsilon,N_eps,estimate,stderr,lambda_eps,prediction,deviation"));
    assert_eq!(text.lines().count(), 4);
}

