//! Finite elements on a mesh with duplicated interface vertices.
//!
//! Each vertex of the contour polyline carries one unknown for the inner
//! side and one for the outer side, so the discrete space is exactly the
//! broken P1 space and the jump enters only through the interface term of
//! the form.

mod assemble;
mod eigen;
mod mesh;
mod solve;

pub use assemble::{
    assemble, assemble_with, evaluate_form, inner_indicator, CsrMatrix, DiscreteForm, OuterBoundary,
};
pub use eigen::{
    default_shift, lowest_eigenpair, lowest_eigenpair_with, richardson_error, EigenOptions, EigenRecord, Eigenpair,
};
pub use mesh::{build_mesh, InterfaceMesh, MeshStats, Region, GRADING, MIN_ANGLE_DEG};
pub use solve::{convergence_study, run, solve_lambda1, ConvergenceRow, FemRun, FemSolution};
