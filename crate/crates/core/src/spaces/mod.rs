//! Finite element spaces: reference elements, global numbering, nodal
//! interpolation and the local projection machinery of the stabilization.

mod dofmap;
mod element;
mod projection;

pub use dofmap::{build_space, interpolate_nodal, interpolate_scalar, DofMap, FeFunction};
pub use element::{eval_basis, BasisValues, ElementKind, MAX_LOCAL};
pub use projection::{
    fluctuation_apply, local_infsup_check, LocalInfSup, LocalProjector, ProjectionKind,
};
