//! Finite element discretization of the coupled plate/rod energy.
//!
//! The midsurface deflection `U3` uses Bogner-Fox-Schmit bicubic elements
//! (C^1, four dofs per node: value, both slopes, twist derivative), the
//! in-plane components `U1, U2` bilinear elements, the rod deflections
//! `W1, W2` Hermite cubics (C^1), and the rod stretch `W3` and twist `Q3`
//! quadratic Lagrange elements. Clamping and the junction conditions are
//! imposed strongly through a dof map; the stretch/deflection continuity
//! `W3(0) = U3(O)` is a dof alias, so the coupled energy is minimized over
//! a single reduced vector with no multipliers.

pub mod assemble;
pub mod basis;
pub mod dofs;
pub mod mesh;
pub mod reconstruct;

pub use assemble::{
    assemble_energy, assemble_gradient, assemble_hessian, assemble_load, Discretization, SymCoo,
};
pub use dofs::{build_dof_map, DofMap, DofTarget, Layout};
pub use mesh::{PlateMesh, RodMesh};
pub use reconstruct::{interpolate, FePlate, FeRod};
