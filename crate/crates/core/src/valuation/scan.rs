//! Weak-coupling scans over dyadic `ε`.
//!
//! With `λ_ε = λ̂ (log 1/ε)^{-1/2}` the rescaled valuation `λ_ε^{|E⋆|} Π̂_εΓ`
//! converges only at rate `1/log(1/ε)`, so the scan also reports the
//! successive increments `Π̂(ε/2) − Π̂(ε)`. For a contributing diagram with
//! `k` internal vertices the leading behaviour is
//! `Π̂_εΓ ≈ σ_Γ² (2π)⁴ (log 1/ε)^{k−1}`, which fixes both predictions.
//! All rows share one proposal scale and seed, so increments are computed
//! batchwise from common random numbers.

use std::io::Write;

use serde::Serialize;

use super::{check_config, check_epsilon, dyadic_exponent, formal_sum_stats, lambda_eps, n_eps, MCConfig, TestFunction};
use crate::bphz::{zimmermann, FormalSum};
use crate::bubbles::sigma_gamma_squared;
use crate::diagrams::FeynmanDiagram;
use crate::error::{Error, Result};

use super::sampling::{stderr_of, torus_volume};

#[derive(Clone, Debug)]
pub enum ScanTarget {
    /// Renormalised with the forest formula before valuation.
    Diagram(FeynmanDiagram),
    /// Valued as given; no prediction is available.
    FormalSum(FormalSum),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub epsilon: f64,
    #[serde(rename = "N_eps")]
    pub n_eps: u32,
    pub estimate: f64,
    pub stderr: f64,
    pub lambda_eps: f64,
    /// `λ̂^{|E⋆|} σ_Γ² (2π)⁴`, or `NaN` without a diagram.
    pub prediction: f64,
    /// `λ_ε^{|E⋆|} · estimate − prediction`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Increment {
    pub epsilon: f64,
    pub next_epsilon: f64,
    pub difference: f64,
    pub stderr: f64,
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanTable {
    pub lambda_hat: f64,
    pub edge_count: u32,
    pub sigma_squared: f64,
    pub rows: Vec<ScanRow>,
    pub increments: Vec<Increment>,
}

/// Leading-order `σ_Γ² (2π)⁴ (log 1/ε)^{k−1}`.
fn leading(sigma: f64, k: usize, eps: f64) -> f64 {
    sigma * torus_volume() * (1.0 / eps).ln().powi(k as i32 - 1)
}

/// Scans `ε_list` (sorted from coarse to fine) and reports rescaled values and increments.
pub fn weak_coupling_scan(
    target: &ScanTarget,
    phi: &TestFunction,
    lambda_hat: f64,
    eps_list: &[f64],
    cfg: &MCConfig,
) -> Result<ScanTable> {
    check_config(cfg)?;
    if eps_list.is_empty() {
        return Err(Error::InvalidInput("empty epsilon list".into()));
    }
    let mut eps_list = eps_list.to_vec();
    for &e in &eps_list {
        check_epsilon(e)?;
        if dyadic_exponent(e).is_none() {
            return Err(Error::InvalidInput(format!("epsilon {e} is not a dyadic power 2^-k")));
        }
    }
    eps_list.sort_by(|a, b| b.total_cmp(a));
    eps_list.dedup();

    let (fs, edge_count, sigma, k) = match target {
        ScanTarget::Diagram(d) => {
            let sigma = match phi {
                TestFunction::ConstantOne => sigma_gamma_squared(d).to_f64(),
                TestFunction::ProductBump(_) => f64::NAN,
            };
            (zimmermann(d), d.edge_count(), sigma, d.internal().len())
        }
        ScanTarget::FormalSum(fs) => (fs.clone(), 0, f64::NAN, 0),
    };
    let mut cfg = cfg.clone();
    cfg.proposal_scale.get_or_insert(*eps_list.last().unwrap());

    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for &eps in &eps_list {
        let (s, _) = formal_sum_stats(&fs, eps, phi, &cfg)?;
        let lam = lambda_eps(lambda_hat, eps);
        let prediction = lambda_hat.powi(edge_count as i32) * sigma * torus_volume();
        let rescaled = lam.powi(edge_count as i32) * s.mean;
        rows.push(ScanRow {
            epsilon: eps,
            n_eps: n_eps(eps),
            estimate: s.mean,
            stderr: s.stderr(),
            lambda_eps: lam,
            prediction,
            deviation: rescaled - prediction,
        });
        stats.push(s);
    }
    let increments = (1..eps_list.len())
        .map(|i| {
            let diff = stats[i].combine(&stats[i - 1], |a, b| a - b);
            Increment {
                epsilon: eps_list[i - 1],
                next_epsilon: eps_list[i],
                difference: diff.mean,
                stderr: stderr_of(&diff.batches),
                predicted: leading(sigma, k, eps_list[i]) - leading(sigma, k, eps_list[i - 1]),
            }
        })
        .collect();
    Ok(ScanTable { lambda_hat, edge_count, sigma_squared: sigma, rows, increments })
}

/// Writes the scan rows with columns
/// `epsilon, N_eps, estimate, stderr, lambda_eps, prediction, deviation`.
pub fn write_scan_csv<W: Write>(table: &ScanTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in &table.rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_increments_csv<W: Write>(table: &ScanTable, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for inc in &table.increments {
        out.serialize(inc)?;
    }
    out.flush()?;
    Ok(())
}
