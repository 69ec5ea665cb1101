//! Symbolic variance weights `q · (8π²)^{-m}` and the effective variance.
//!
//! All sums are carried out on the exact pair `(q, m)`; π only enters when a
//! weight is rendered.

use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use super::{count_extraction_sequences, factorial};
use crate::bphz::big_to_string;
use crate::diagrams::{build, enumerate_pairings, trees_from_sizes, FeynmanDiagram, PairingMode};
use crate::error::{Error, Result};

const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899";

fn pi_rational() -> BigRational {
    let digits: String = PI_DIGITS.chars().filter(|c| *c != '.').collect();
    let scale = digits.len() - 1;
    BigRational::new(digits.parse().unwrap(), BigInt::from(10u8).pow(scale as u32))
}

/// Scientific rendering of a rational with `digits` significant digits,
/// rounding half away from zero.
fn decimal_string(r: &BigRational, digits: usize) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let digits = digits.max(1);
    let sign = if r.is_negative() { "-" } else { "" };
    let a = r.abs();
    let ten = BigRational::from_integer(BigInt::from(10u8));
    let (n, d) = (a.numer().to_string().len() as i64, a.denom().to_string().len() as i64);
    let mut k = n - d;
    while pow10(&ten, k) > a {
        k -= 1;
    }
    while pow10(&ten, k + 1) <= a {
        k += 1;
    }
    let scaled = &a * pow10(&ten, digits as i64 - 1 - k);
    let two = BigInt::from(2u8);
    let mut mant = (scaled.numer() * &two + scaled.denom()) / (scaled.denom() * &two);
    if mant.to_string().len() > digits {
        mant /= BigInt::from(10u8);
        k += 1;
    }
    let s = mant.to_string();
    let (head, tail) = s.split_at(1);
    if tail.is_empty() {
        format!("{sign}{head}e{k}")
    } else {
        format!("{sign}{head}.{tail}e{k}")
    }
}

fn pow10(ten: &BigRational, k: i64) -> BigRational {
    ten.pow(k as i32)
}

/// Exact weight `q · (8π²)^{-m}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicWeight {
    pub q: BigRational,
    pub m: u32,
}

impl SymbolicWeight {
    pub fn zero() -> Self {
        SymbolicWeight { q: BigRational::zero(), m: 0 }
    }

    pub fn new(q: BigRational, m: u32) -> Self {
        if q.is_zero() {
            return Self::zero();
        }
        SymbolicWeight { q, m }
    }

    pub fn is_zero(&self) -> bool {
        self.q.is_zero()
    }

    /// Sum of two weights of the same power; zero adds to anything.
    pub fn checked_add(&self, other: &SymbolicWeight) -> Result<SymbolicWeight> {
        match (self.is_zero(), other.is_zero()) {
            (true, _) => Ok(other.clone()),
            (_, true) => Ok(self.clone()),
            _ if self.m == other.m => Ok(SymbolicWeight::new(&self.q + &other.q, self.m)),
            _ => Err(Error::InvalidInput(format!("cannot add weights of powers {} and {}", self.m, other.m))),
        }
    }

    pub fn to_f64(&self) -> f64 {
        let base = 8.0 * std::f64::consts::PI * std::f64::consts::PI;
        self.q.to_f64().unwrap_or(f64::NAN) / base.powi(self.m as i32)
    }

    /// Exact value with π truncated to 80 digits.
    pub fn to_rational(&self) -> BigRational {
        let pi = pi_rational();
        let base = BigRational::from_integer(BigInt::from(8u8)) * &pi * &pi;
        &self.q / base.pow(self.m as i32)
    }

    /// Scientific notation with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        decimal_string(&self.to_rational(), digits)
    }
}

impl fmt::Display for SymbolicWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.m {
            _ if self.is_zero() => write!(f, "0"),
            0 => write!(f, "{}", self.q),
            m => write!(f, "{} (8π²)^-{m}", self.q),
        }
    }
}

impl Serialize for SymbolicWeight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            q: String,
            m: u32,
            value: String,
        }
        Repr { q: big_to_string(&self.q), m: self.m, value: self.to_decimal(50) }.serialize(s)
    }
}

/// Operational contributing test: connected, four legs, nested bubble.
pub fn is_contributing(d: &FeynmanDiagram) -> bool {
    d.is_connected() && d.legs().len() == 4 && count_extraction_sequences(d) > 0
}

/// `σ_Γ² = |𝕊(Γ)| / (|V⋆|−1)! · (8π²)^{-(|V⋆|−1)}`, zero for
/// non-contributing diagrams.
pub fn sigma_gamma_squared(d: &FeynmanDiagram) -> SymbolicWeight {
    if !d.is_connected() || d.legs().len() != 4 {
        return SymbolicWeight::zero();
    }
    let s = count_extraction_sequences(d);
    let m = d.internal().len().saturating_sub(1);
    let q = BigRational::new(BigInt::from(s), BigInt::from(factorial(m)));
    SymbolicWeight::new(q, m as u32)
}

/// Sum of `σ_Γ²` over the connected complete pairings of `(I_n, I_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaRow {
    pub n1: usize,
    pub n2: usize,
    pub pairings: usize,
    pub contributing: usize,
    pub weight: SymbolicWeight,
}

fn split_row(n1: usize, n2: usize) -> Result<SigmaRow> {
    let trees = trees_from_sizes(&[n1, n2]);
    let pairings = enumerate_pairings(&trees, PairingMode::ConnectedComplete)?;
    let weights: Vec<SymbolicWeight> =
        pairings.par_iter().map(|p| build(&trees, p).map(|d| sigma_gamma_squared(&d))).collect::<Result<_>>()?;
    let contributing = weights.iter().filter(|w| !w.is_zero()).count();
    let weight = weights.iter().try_fold(SymbolicWeight::zero(), |acc, w| acc.checked_add(w))?;
    Ok(SigmaRow { n1, n2, pairings: pairings.len(), contributing, weight })
}

/// `σ_{n,m}²`.
pub fn sigma_nm(n: usize, m: usize) -> Result<SymbolicWeight> {
    Ok(split_row(n, m)?.weight)
}

/// Enumeration budget for [`sigma_eff_coefficients`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Budget {
    /// Up to `n = 5`.
    #[default]
    Default,
    /// Up to `n = 6`.
    Extended,
}

impl Budget {
    pub fn limit(self) -> usize {
        match self {
            Budget::Default => 5,
            Budget::Extended => 6,
        }
    }
}

/// `σ_eff^{2,(2n)} = C_n (8π²)^{-(n-1)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EffectiveCoefficient {
    pub n: usize,
    #[serde(serialize_with = "ser_big")]
    pub c_n: BigRational,
    pub contributing: usize,
    pub weight: SymbolicWeight,
}

fn ser_big<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&big_to_string(r))
}

impl EffectiveCoefficient {
    pub fn expected(&self) -> BigRational {
        BigRational::from_integer(BigInt::from(4u8).pow(self.n as u32 - 1))
    }

    pub fn matches_geometric(&self) -> bool {
        self.c_n == self.expected()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SigmaTable {
    pub rows: Vec<SigmaRow>,
    pub coefficients: Vec<EffectiveCoefficient>,
}

impl SigmaTable {
    pub fn sigma_nm(&self, n: usize, m: usize) -> Option<&SymbolicWeight> {
        self.rows.iter().find(|r| r.n1 == n && r.n2 == m).map(|r| &r.weight)
    }

    /// `σ_n² = σ_{n,n}²`.
    pub fn sigma_n(&self, n: usize) -> Option<&SymbolicWeight> {
        self.sigma_nm(n, n)
    }

    /// Limiting correlation `σ_{n,m}² / (σ_n σ_m)`.
    pub fn correlation(&self, n: usize, m: usize) -> Option<f64> {
        let nm = self.sigma_nm(n, m)?.to_f64();
        let a = self.sigma_n(n)?.to_f64();
        let b = self.sigma_n(m)?.to_f64();
        Some(nm / (a * b).sqrt())
    }
}

/// Rows for every split `n₁ + n₂ = 2k`, `n₁, n₂ ≥ 1`, `k ≤ n_max`, and the
/// effective coefficients they sum to.
pub fn sigma_eff_coefficients(n_max: usize, budget: Budget) -> Result<SigmaTable> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be at least 1".into()));
    }
    if n_max > budget.limit() {
        return Err(Error::BudgetExceeded(format!("n_max = {n_max} exceeds the enumeration limit {}", budget.limit())));
    }
    let mut rows = Vec::new();
    let mut coefficients = Vec::new();
    for k in 1..=n_max {
        let split: Vec<SigmaRow> = (1..2 * k).map(|n1| split_row(n1, 2 * k - n1)).collect::<Result<_>>()?;
        let weight = split.iter().try_fold(SymbolicWeight::zero(), |acc, r| acc.checked_add(&r.weight))?;
        let c_n = if weight.is_zero() { BigRational::zero() } else { weight.q.clone() };
        let contributing = split.iter().map(|r| r.contributing).sum();
        coefficients.push(EffectiveCoefficient { n: k, c_n, contributing, weight });
        rows.extend(split);
    }
    Ok(SigmaTable { rows, coefficients })
}

/// Sign of `λ̂²` in the series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingSign {
    Real,
    Imaginary,
}

/// `2π² / (2π² ∓ λ̂²)`.
pub fn sigma_eff_closed_form(lambda: f64, sign: CouplingSign) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("coupling {lambda} is not finite")));
    }
    let two_pi2 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
    let l2 = lambda * lambda;
    match sign {
        CouplingSign::Real => {
            if lambda.abs() >= two_pi2.sqrt() {
                return Err(Error::OutOfRadius(lambda.abs()));
            }
            Ok(two_pi2 / (two_pi2 - l2))
        }
        CouplingSign::Imaginary => Ok(two_pi2 / (two_pi2 + l2)),
    }
}

/// Partial sums `Σ_{n ≤ N} σ_eff^{2,(2n)} (±λ̂²)^{n-1}` for `N = 1, 2, …`.
pub fn sigma_eff_partial_sums(lambda: f64, sign: CouplingSign, coefficients: &[EffectiveCoefficient]) -> Vec<f64> {
    let x = match sign {
        CouplingSign::Real => lambda * lambda,
        CouplingSign::Imaginary => -lambda * lambda,
    };
    let mut acc = 0.0;
    coefficients
        .iter()
        .map(|c| {
            acc += c.weight.to_f64() * x.powi(c.n as i32 - 1);
            acc
        })
        .collect()
}

/// Columns `n, C_n, sigma_eff_coeff_value, expected, match`.
pub fn write_sigma_csv<W: Write>(table: &SigmaTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "C_n", "sigma_eff_coeff_value", "expected", "match"])?;
    for c in &table.coefficients {
        out.write_record([
            c.n.to_string(),
            big_to_string(&c.c_n),
            c.weight.to_decimal(20),
            big_to_string(&c.expected()),
            c.matches_geometric().to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
