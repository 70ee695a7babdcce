//! Consensus-based recursive multi-output Gaussian process inference.
//!
//! Every agent in a network keeps an information-form posterior over the latent
//! outputs at a shared, fixed set of basis inputs. Observations are folded in with
//! additive single-datum updates, agents average their information parameters with
//! neighbours using Metropolis weights, and each agent rescales the averaged
//! increments to recover the posterior implied by the union of all data.
//!
//! The crate is `no_std` (it needs `alloc`). Output-index layout is fixed across
//! all modules: a stacked vector over `p` points and `D` outputs is indexed by
//! `point * D + output`.

#![no_std]

extern crate alloc;

pub mod basis;
pub mod consensus;
mod error;
pub mod exact;
pub mod gaussian;
pub mod graph;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod partition;
pub mod points;
pub mod rmgp;
pub mod windfield;

pub use error::{Error, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;
