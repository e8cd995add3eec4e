//! Pseudospectral laboratory for the one-dimensional Landau-Lifshitz equation
//! with strong easy-axis anisotropy, its exact Schrodinger-type reformulation,
//! and the cubic Schrodinger limit.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod energetics;
pub mod error;
pub mod experiments;
pub mod fields;
pub mod snapshot;
pub mod solitons;
pub mod spectral;

pub use error::{AbortReason, AbortReport, Error, Result};
