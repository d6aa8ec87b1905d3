//! Sparse storage, linear solvers and condition-number estimation.

pub mod condition;
pub mod csr;
pub mod direct;
pub mod krylov;
pub mod solve;

pub use condition::{dense_condition_number, estimate_condition_number, ConditionEstimate, ConditionOptions};
pub use csr::CsrMatrix;
pub use direct::DirectSolver;
pub use solve::{solve, SolverMethod, SolverOptions, SolverReport, DENSE_THRESHOLD};
