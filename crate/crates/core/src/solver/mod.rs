//! Finite-difference solves of the weighted heat equations.

pub mod evolve;
pub mod grid;
pub mod operators;
pub mod stencil;

pub use evolve::{evolve, evolve_snapshots, kernel_column, HeatKernelSlice, KernelVariant, Schedule, SolverConfig};
pub use grid::{GridField, GridSpec};
pub use operators::{OperatorKind, Stencil, WeightedOperatorSet};
pub use stencil::{twisted_tau_derivative, twisted_tau_derivative_field, twisted_tau_derivative_fields, TwistedDerivativeStencil};
