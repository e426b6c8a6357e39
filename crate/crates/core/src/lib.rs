//! Equal-order finite element eigenvalue solver for the Stokes problem with
//! local projection stabilization, plus the postprocessing and convergence
//! study tooling built on it.
//!
//! The guide under `book/` walks through the modules in order.

pub mod assembly;
pub mod eigensolver;
pub mod error;
pub mod harness;
pub mod linsolve;
pub mod mesh;
pub mod norms;
pub mod postprocess;
pub mod quadrature;
pub mod spaces;
pub mod sparse;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/elements.md")]
    mod elements {}
    #[doc = include_str!("../../../book/src/assembly.md")]
    mod assembly {}
    #[doc = include_str!("../../../book/src/eigensolver.md")]
    mod eigensolver {}
    #[doc = include_str!("../../../book/src/postprocessing.md")]
    mod postprocessing {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
}
