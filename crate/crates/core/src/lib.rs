//! Exact arithmetic for discrete logarithms in small-characteristic finite
//! fields presented through elliptic curves.
//!
//! The crate is organised around the pipeline: build a field presentation on
//! an elliptic curve ([`presentation`]), enumerate the trap points
//! ([`divisors`]), descend divisors of lifted polynomials to a small factor
//! base ([`descent`]), and run the index-calculus driver ([`dlog`]).
//! Brute-force reference solvers live in [`oracle`] so the pipeline can be
//! checked independently at desk scale.
//!
//! Everything is deterministic given a seed: field moduli, curve enumeration
//! and root choices all follow one documented ordering (see [`ff`]).

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
mod rand_util;
pub mod ff;
pub mod ec;
pub mod curvefn;
pub mod divisors;
pub mod presentation;
pub mod descent;
pub mod dlog;
pub mod oracle;

pub use error::{Error, Result};
