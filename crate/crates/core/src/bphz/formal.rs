use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};

use crate::diagrams::{
    canonical_key, canonicalize, contains, DiagramKey, Edge, FeynmanDiagram, IsoOptions, Label, Leg, LegMode,
};
use crate::error::{Error, Result};

/// Product of diagrams. Factors without leaves are vacuum factors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiagramProduct {
    pub factors: Vec<FeynmanDiagram>,
}

impl DiagramProduct {
    pub fn single(d: FeynmanDiagram) -> Self {
        DiagramProduct { factors: vec![d] }
    }

    pub fn legged(&self) -> impl Iterator<Item = &FeynmanDiagram> {
        self.factors.iter().filter(|f| !f.is_vacuum())
    }

    pub fn vacuum(&self) -> impl Iterator<Item = &FeynmanDiagram> {
        self.factors.iter().filter(|f| f.is_vacuum())
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.factors.iter().map(FeynmanDiagram::to_json).collect())
    }
}

/// How legged factors are identified when merging terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Matching {
    /// Directed, leaves pinned by position.
    Strict,
    /// Undirected, leaves permutable. Identifies terms related by the
    /// reflection and leg-relabelling symmetries of the diagram.
    Symmetric,
}

impl Matching {
    fn legged_options(self) -> IsoOptions {
        match self {
            Matching::Strict => IsoOptions::STRICT,
            Matching::Symmetric => IsoOptions::LOOSE,
        }
    }
}

/// Vacuum factors are always compared undirected: their valuation only sees
/// even kernels and integrates every vertex but one.
const VACUUM_OPTIONS: IsoOptions = IsoOptions { directed: false, legs: LegMode::Free };

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductKey {
    legged: Option<DiagramKey>,
    vacuum: Vec<DiagramKey>,
}

/// Exact rational linear combination of diagram products.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FormalSum {
    terms: Vec<(BigRational, DiagramProduct)>,
}

pub fn rational(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn big_to_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Single vertex carrying one self-loop of the given type.
pub fn loop_factor(dim: i64, ty: Rational64) -> FeynmanDiagram {
    FeynmanDiagram::new(dim, vec![0], Vec::new(), vec![Edge::typed(0, 0, 1, ty)], Vec::new())
        .expect("loop factor is valid")
}

impl FormalSum {
    pub fn new() -> Self {
        FormalSum::default()
    }

    pub fn from_terms(terms: Vec<(BigRational, DiagramProduct)>) -> Self {
        FormalSum { terms }
    }

    pub fn single(d: FeynmanDiagram) -> Self {
        FormalSum { terms: vec![(BigRational::one(), DiagramProduct::single(d))] }
    }

    pub fn push(&mut self, coeff: BigRational, product: DiagramProduct) {
        self.terms.push((coeff, product));
    }

    pub fn terms(&self) -> &[(BigRational, DiagramProduct)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &FormalSum) -> FormalSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FormalSum { terms }
    }

    pub fn scale(&self, c: &BigRational) -> FormalSum {
        FormalSum { terms: self.terms.iter().map(|(k, p)| (k * c, p.clone())).collect() }
    }

    /// Canonical form with leg-respecting directed matching of legged factors.
    pub fn reduce(&self) -> FormalSum {
        self.reduce_with(Matching::Strict)
    }

    /// Canonical form identifying legged factors up to reflection and leaf permutation.
    pub fn reduce_up_to_symmetry(&self) -> FormalSum {
        self.reduce_with(Matching::Symmetric)
    }

    /// Merge isomorphic products and drop zero coefficients.
    ///
    /// Each product is first normalised: self-loops become separate loop
    /// factors (their kernel is the constant `G_ε(0)`), components without
    /// leaves become vacuum factors, and single-vertex vacuum factors without
    /// edges are dropped since their valuation is one.
    pub fn reduce_with(&self, mode: Matching) -> FormalSum {
        let mut acc: BTreeMap<ProductKey, (BigRational, DiagramProduct)> = BTreeMap::new();
        for (c, p) in &self.terms {
            if c.is_zero() {
                continue;
            }
            let (legged, vacuum) = normalise(p);
            let legged_opts = mode.legged_options();
            let mut vac: Vec<(DiagramKey, FeynmanDiagram)> = vacuum
                .iter()
                .map(|v| (canonical_key(v, VACUUM_OPTIONS), canonicalize(v, VACUUM_OPTIONS)))
                .collect();
            vac.sort_by(|a, b| a.0.cmp(&b.0));
            let key = ProductKey {
                legged: legged.as_ref().map(|l| canonical_key(l, legged_opts)),
                vacuum: vac.iter().map(|(k, _)| k.clone()).collect(),
            };
            let entry = acc.entry(key).or_insert_with(|| {
                let mut factors: Vec<FeynmanDiagram> = legged.iter().map(|l| canonicalize(l, legged_opts)).collect();
                factors.extend(vac.into_iter().map(|(_, d)| d));
                (BigRational::zero(), DiagramProduct { factors })
            });
            entry.0 += c;
        }
        FormalSum { terms: acc.into_values().filter(|(c, _)| !c.is_zero()).collect() }
    }

    pub fn is_formally_zero(&self) -> bool {
        self.reduce().is_empty()
    }

    /// Coefficient map keyed by canonical product keys.
    pub fn signature(&self, mode: Matching) -> BTreeMap<ProductKey, BigRational> {
        let mut out: BTreeMap<ProductKey, BigRational> = BTreeMap::new();
        for (c, p) in &self.reduce_with(mode).terms {
            let (legged, vacuum) = normalise(p);
            let mut vac: Vec<DiagramKey> = vacuum.iter().map(|v| canonical_key(v, VACUUM_OPTIONS)).collect();
            vac.sort();
            let key = ProductKey { legged: legged.map(|l| canonical_key(&l, mode.legged_options())), vacuum: vac };
            *out.entry(key).or_insert_with(BigRational::zero) += c;
        }
        out
    }

    /// JSON list of `{"coeff": "p/q", "factors": [...]}` in stored order.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(c, p)| {
                    let mut m = Map::new();
                    m.insert("coeff".into(), Value::from(big_to_string(c)));
                    m.insert("factors".into(), p.to_json());
                    Value::Object(m)
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Result<FormalSum> {
        let bad = || Error::InvalidInput("formal sum JSON".into());
        let mut terms = Vec::new();
        for t in v.as_array().ok_or_else(bad)? {
            let c = t.get("coeff").and_then(Value::as_str).ok_or_else(bad)?;
            let (p, q) = c.split_once('/').unwrap_or((c, "1"));
            let coeff = BigRational::new(p.parse().map_err(|_| bad())?, q.parse().map_err(|_| bad())?);
            let factors = t
                .get("factors")
                .and_then(Value::as_array)
                .ok_or_else(bad)?
                .iter()
                .map(FeynmanDiagram::from_json)
                .collect::<Result<Vec<_>>>()?;
            terms.push((coeff, DiagramProduct { factors }));
        }
        Ok(FormalSum { terms })
    }
}

impl fmt::Display for FormalSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, p)) in self.terms.iter().enumerate() {
            let sign = if c.is_negative() { "-" } else if i > 0 { "+" } else { "" };
            write!(f, "{sign}{} ", c.abs())?;
            let parts: Vec<String> = p.factors.iter().map(FeynmanDiagram::to_json_string).collect();
            writeln!(f, "{}", parts.join(" * "))?;
        }
        Ok(())
    }
}

/// Split a product into its legged part and its non-trivial vacuum factors.
pub fn normalise(p: &DiagramProduct) -> (Option<FeynmanDiagram>, Vec<FeynmanDiagram>) {
    let mut legged: Vec<FeynmanDiagram> = Vec::new();
    let mut vacuum = Vec::new();
    for f in &p.factors {
        let mut kept = Vec::new();
        for e in f.edges() {
            if e.is_loop() {
                for _ in 0..e.mult {
                    vacuum.push(loop_factor(f.dim(), e.ty));
                }
            } else {
                kept.push(e.clone());
            }
        }
        let stripped = f.with_edges(kept);
        for comp in stripped.split_components() {
            if comp.is_vacuum() {
                if comp.internal().len() > 1 || comp.edge_count() > 0 {
                    vacuum.push(comp);
                }
            } else {
                legged.push(comp);
            }
        }
    }
    let legged = legged.into_iter().reduce(|a, b| union_relabelled(&a, &b));
    (legged, vacuum)
}

/// Disjoint union, shifting labels of `b` when they collide with `a`.
fn union_relabelled(a: &FeynmanDiagram, b: &FeynmanDiagram) -> FeynmanDiagram {
    let used = a.internal().iter().chain(a.leaves()).fold(0u64, |s, &v| s | (1 << v));
    let clash = b.internal().iter().chain(b.leaves()).any(|&v| contains(used, v));
    if !clash {
        return a.disjoint_union(b).expect("disjoint labels");
    }
    let off = a.label_bound();
    let map: BTreeMap<Label, Label> = b.internal().iter().chain(b.leaves()).map(|&v| (v, v + off)).collect();
    a.disjoint_union(&b.relabel(&map).expect("shift is injective")).expect("disjoint after shift")
}

/// Legs and internal edges of a diagram after some leaves have been turned
/// into internal vertices.
pub(crate) fn reclassify(
    dim: i64,
    internal: Vec<Label>,
    leaves: Vec<Label>,
    noise: Vec<Label>,
    edges: Vec<Edge>,
    legs: Vec<Leg>,
) -> Result<FeynmanDiagram> {
    let mut all_edges = edges;
    let mut all_legs = Vec::new();
    for l in legs {
        if leaves.contains(&l.tail) || leaves.contains(&l.head) {
            all_legs.push(l);
        } else {
            all_edges.push(Edge::new(l.tail, l.head, 1));
        }
    }
    FeynmanDiagram::with_noise(dim, internal, leaves, all_edges, all_legs, noise)
}
