//! Finite-element realisation of the spectral fractional Laplacian of
//! variable order `s(·)` on `(0,1)^N`, `N ∈ {1, 2}`, through a degenerate
//! weighted extension problem posed on a truncated cylinder.

pub mod assembly;
pub mod error;
pub mod extension;
pub mod functionals;
pub mod mesh;
pub mod order_field;
pub mod quadrature;
pub mod sparse;
pub mod special;
pub mod spectral;

pub use assembly::{assemble, load_from_base_function, y_weight_moments, ExtensionSystem};
pub use error::{Result, VarfracError};
pub use extension::{
    apply_operator, harmonic_extension, penalty_extension, poincare_constant, solve_poisson, DtNResult,
    PoissonSolution, SolverOptions,
};
pub use mesh::{build_mesh, default_gamma, default_tau, CylinderMesh, Element, NodeKind};
pub use order_field::{check_h5, GsVariant, H5Outcome, OrderConfig, OrderField, OrderKind, StepCell, WeightSpec};
pub use sparse::{cg_solve, smallest_generalized_eig, smallest_generalized_eig_capped, CgOutcome, SparseMatrix};
pub use spectral::{analyze, mode_dtn_1d, SpectralField};
