//! Asymptotic limit model of a thin elastic plate joined to a thin elastic
//! rod, with a matching 3D St Venant–Kirchhoff verification harness.
//!
//! The crate is organised in layers:
//!
//! * [`model`] — elastic moduli, the stored-energy density, the scaling
//!   regime `(kappa, kappa', epsilon) -> (delta, q_eps)`, geometry and
//!   force data;
//! * [`limit`] — the coupled limit energy: reduced plate and rod densities,
//!   junction conditions, optimal cross-section warpings and limit strains;
//! * [`fem`] — conforming finite elements for the limit fields and the
//!   assembly of energies, gradients and Hessians;
//! * [`solver`] — Newton minimisation with line search and convexity
//!   safeguards, plus load continuation;
//! * [`decomp`] — plate/rod displacement decompositions of a 3D field and
//!   the associated rigidity estimates;
//! * [`bridge`] — recovery deformations and the rescaled 3D energy used to
//!   verify the limit model against the full St Venant–Kirchhoff functional;
//! * [`config`] / [`cli`] — TOML-driven runs and the `platerod` binary.

pub mod bridge;
pub mod cli;
pub mod config;
pub mod decomp;
pub mod error;
pub mod expr;
pub mod fem;
pub mod limit;
pub mod model;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
