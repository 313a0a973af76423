//! Optimal alignment of paired vector sets under a matrix Lie group.
//!
//! * [`euclid`]: rotations of ℝᴺ by Kabsch (SVD) and of ℝ³ by Horn
//!   (quaternion eigenproblem).
//! * [`align`]: proper orthochronous Lorentz transformations, either by direct
//!   least squares over the six algebra coordinates or by projecting the
//!   pseudoinverse fit onto so(3,1) through the matrix logarithm.
//! * [`lie`]: the Lorentz algebra and group, including the closed-form
//!   exponential.
//! * [`linalg`]: the small dense kernels everything above is built on.
//! * [`bench`]: seeded Monte-Carlo accuracy/timing comparison of the two
//!   Lorentz solvers.
//!
//! Vector sets are passed as matrices whose **columns** are the vectors.

pub mod align;
pub mod bench;
pub mod error;
pub mod euclid;
pub mod lie;
pub mod linalg;
mod optimize;
pub mod sanity;

pub use align::{
    align, align_direct, align_direct_warm, align_lie, error_norms, lie_fit, objective, AlignmentResult, Diagnostic,
    ErrorNorms, LieFit, Method, SolverOptions,
};
pub use error::{Error, Result};
pub use euclid::{horn, kabsch, HornResult, KabschResult, Quaternion, RotationMatrix};
pub use lie::{
    apply, eta, exp_lorentz, lorentz_defect, minkowski_inner, project_to_algebra, FourVector, LorentzAlgebraElement,
    LorentzDefect, LorentzMatrix,
};
