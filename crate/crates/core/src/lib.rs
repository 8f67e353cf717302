//! Global solver for quadratic programs with a single quadratic inequality
//! constraint:
//!
//! ```text
//!     inf  F(x) = xᵀAx − 2fᵀx
//!     s.t. G(x) = xᵀBx − 2gᵀx ≤ μ
//! ```
//!
//! Every instance is classified as infeasible, unbounded below, bounded but
//! unattained, or attained. The classification is driven by the matrix pencil
//! `A + σB`: the interval of σ on which it is positive semidefinite, its joint
//! null space, and the range conditions on `f + σg`.
//!
//! Attained solutions carry a [`KktCertificate`] (feasibility, dual
//! feasibility, complementarity and `A + σB ⪰ 0`), which is necessary and
//! sufficient for global optimality when a strictly feasible point exists.

pub mod cli;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod pencil;
pub mod slater;
pub mod solution;
pub mod solver;

pub use error::{Error, Result};
pub use instance::Qp1qcInstance;
pub use linalg::{Basis, EigDecomp, SymMatrix, Tolerance};
pub use pencil::{PencilInterval, ReducedPencil, SdcResult};
pub use solution::{CaseLabel, KktCertificate, Path, Solution, Status};
pub use solver::classify_and_solve;
