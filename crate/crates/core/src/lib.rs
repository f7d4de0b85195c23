//! Discrete optimal control of parabolic differential inclusions
//! `∂u/∂t - Δu ∈ F(u)` on a rectangle with Dirichlet data, together with
//! machine-checkable optimality certificates.
//!
//! The pieces, bottom up:
//!
//! - [`grid`]: the space-time lattice, fields, difference operators, boundary data.
//! - [`geometry`] and [`lp`]: convex sets with exact support functions and a dense simplex solver.
//! - [`inclusion`]: set-valued right-hand sides, Hamiltonians, argmax sets, locally adjoint maps.
//! - [`dynamics`]: the explicit scheme and admissibility checks.
//! - [`objective`] and [`adjoint`]: costs, the backward adjoint sweep, adjoint residuals.
//! - [`optimizer`]: conditional gradient, a monolithic LP for polyhedral maps, enumeration.
//! - [`certificate`]: assembling and checking sufficient optimality conditions.
//! - [`cli`]: problem files and the `pdfi` commands.
//!
//! ```
//! use parabolic_dfi::prelude::*;
//!
//! let spec = GridSpec::unit_square(5, 0.01, 0.1, 1).unwrap();
//! let map = InclusionMap::linear_control(
//!     Matrix::scalar(0.0),
//!     Matrix::scalar(1.0),
//!     ConvexSet::cube(1, -1.0, 1.0).unwrap(),
//! )
//! .unwrap();
//! let problem = Problem::new(map, Objective::linear(vec![1.0]), BoundaryData::zero(&spec)).unwrap();
//! let sol = solve_frank_wolfe(&problem, 50, 1e-12).unwrap();
//! assert!(sol.objective < 0.0);
//! ```

pub mod adjoint;
pub mod certificate;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod inclusion;
pub mod linalg;
pub mod lp;
pub mod objective;
pub mod optimizer;

pub use error::{Error, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::adjoint::{adjoint_for, adjoint_residual, adjoint_solve_linear, sbp_terms};
    pub use crate::certificate::{
        check_conditions_i_iii, check_maximum_principle, check_polyhedral, sufficiency_sampling, verify, Certificate,
        Tolerances, VerifyReport, DEFAULT_SEED,
    };
    pub use crate::dynamics::{cfl_margin, check_feasible, simulate, ControlField};
    pub use crate::error::{Error, Face, Result};
    pub use crate::geometry::{ConvexSet, ExtReal};
    pub use crate::grid::{BoundaryData, Field, GridPoint, GridSpec};
    pub use crate::inclusion::{GTransform, InclusionMap, LamResult};
    pub use crate::linalg::Matrix;
    pub use crate::objective::{objective_value, AffinePiece, Objective};
    pub use crate::optimizer::{adjoint_gradient, brute_force, solve_frank_wolfe, solve_polyhedral_lp, Problem, SolveResult};
}
