//! Independent reference computations: dense operators, finite-difference
//! derivatives, manufactured solutions and exact discrete identities.

pub mod dense;
pub mod fd;
pub mod korteweg;
pub mod mms;
pub mod suite;
pub mod transport;

pub use dense::{dense_oracle_compare, DenseOracle, DenseReport};
pub use fd::{fd_check_chemical_potential, fd_check_det_cofactor, fd_check_elastic_stress, ElasticModel, FdReport};
pub use korteweg::{korteweg_force, korteweg_identity_check, KortewegReport};
pub use mms::{stokes_mms, MmsReport};
pub use suite::{run_suite, CheckOutcome, Suite};
pub use transport::{determinant_drift, determinant_study, DeterminantStudy};
