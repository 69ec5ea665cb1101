//! Diagrammatic machinery for the weak-coupling Anderson model on the
//! four-dimensional torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`diagrams`] builds ladder trees, pairings and Anderson–Feynman multigraphs.
//! * [`degrees`] computes power-counting degrees, divergences and forests.
//! * [`bphz`] implements contraction, extraction and the forest formula over
//!   exact rational formal sums.
//! * [`hepp`] covers Hepp trees, sectors, rewiring maps and safe/unsafe forests.
//! * [`bubbles`] counts nested-bubble extraction sequences and the effective
//!   variance coefficients.
//! * [`greens`] evaluates the periodic massive Green's function and its
//!   mollification.
//! * [`valuation`] integrates small diagrams by Monte Carlo.
//! * [`cli`] is the batch front end used by the `anderson` binary.

pub mod bphz;
pub mod bubbles;
pub mod cli;
pub mod degrees;
pub mod diagrams;
pub mod error;
pub mod greens;
pub mod hepp;
pub mod valuation;

pub use error::{Error, Result};
