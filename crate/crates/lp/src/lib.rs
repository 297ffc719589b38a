//! Linear and mixed-integer programming backend.
//!
//! The solvers are generic over [`Scalar`] so the same code runs on `f64`
//! and `f32`. The aliases below fix the scalar to `f64`, which is what the
//! column-generation code uses.

mod mip;
mod problem;
mod scalar;
mod simplex;

pub use mip::{solve_mip, IncumbentCallback, MipOptions, MipSolution, MipStatus};
pub use problem::{Constraint, LinearProgram, LpError, RowSense, Variable};
pub use scalar::Scalar;
pub use simplex::{solve_lp, solve_lp_with, Basis, BasisVar, LpSolution, LpStatus, SimplexOptions};

pub type Lp = LinearProgram<f64>;
pub type Lp32 = LinearProgram<f32>;
pub type LpSol = LpSolution<f64>;
pub type MipSol = MipSolution<f64>;
