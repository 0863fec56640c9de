//! Two-dimensional simulator for a Cahn-Hilliard phase field coupled to
//! regularized finite viscoelasticity and quasi-static Stokes flow.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cahn_hilliard;
pub mod constitutive;
pub mod deformation;
pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod field;
pub mod grid;
pub mod linsolve;
pub mod ops;
pub mod params;
pub mod state;
pub mod stokes;
pub mod tensor;
pub mod verification;

pub use error::{Error, Result};
pub use field::{ScalarField, StaggeredVectorField, TensorField};
pub use grid::GridSpec;
pub use params::ModelParams;
pub use tensor::Tensor;
