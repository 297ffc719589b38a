use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable by the simplex and branch-and-bound code.
///
/// Tolerances are tied to the precision of the type, so an `f32` solve uses
/// looser thresholds than an `f64` solve.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Primal feasibility tolerance.
    fn feasibility_tol() -> Self;
    /// Reduced-cost tolerance, applied relative to `1 + |c_j|`.
    fn optimality_tol() -> Self;
    /// Smallest pivot magnitude accepted in ratio tests and factorizations.
    fn pivot_tol() -> Self;
    /// Distance from an integer below which a value counts as integral.
    fn integrality_tol() -> Self;
    /// Relative optimality gap for branch-and-bound termination.
    fn gap_tol() -> Self;

    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every Scalar")
    }

    /// Lossy conversion to `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f64 {
    fn feasibility_tol() -> Self {
        1e-7
    }
    fn optimality_tol() -> Self {
        1e-9
    }
    fn pivot_tol() -> Self {
        1e-9
    }
    fn integrality_tol() -> Self {
        1e-6
    }
    fn gap_tol() -> Self {
        1e-6
    }
}

impl Scalar for f32 {
    fn feasibility_tol() -> Self {
        1e-4
    }
    fn optimality_tol() -> Self {
        1e-5
    }
    fn pivot_tol() -> Self {
        1e-5
    }
    fn integrality_tol() -> Self {
        1e-4
    }
    fn gap_tol() -> Self {
        1e-4
    }
}
