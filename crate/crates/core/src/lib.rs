//! Certification toolkit for moment tensors of multivariate distributions.
//!
//! The library decides, numerically, whether the gap polynomial
//! `B^m ||v||^m - E<v,X>^m` of a distribution's order-`m` moment tensor is a
//! sum of squares, and searches for the smallest such `B`. The dual side of
//! every verdict is kept as a first-class object: a PSD Gram matrix when the
//! polynomial is SoS, a pseudomoment vector with negative value when it is
//! not. On top of the certifier sit a distribution zoo with known constants,
//! ground-truth oracles (injective norm, resilience), and robust mean
//! estimation filters that consume the certified degree-4 bound.
//!
//! Modules:
//! - [`tensor`]: multi-index enumeration, homogeneous polynomials, moment tensors
//! - [`sdp`]: dense primal-dual interior-point solver for the margin problem
//! - [`certify`]: SoS membership, minimal certifiable constants, profiles
//! - [`pexp`]: pseudoexpectations, substitution, pseudo-Holder
//! - [`distributions`]: samplers, known constants, contamination adversaries
//! - [`oracles`]: injective-norm and resilience ground truth
//! - [`robust_mean`]: degree-2 and degree-4 filters, error sweeps
//! - [`acceptance`]: the executable acceptance checklist used by `selftest`

pub mod acceptance;
pub mod certify;
pub mod distributions;
pub mod oracles;
pub mod pexp;
pub mod robust_mean;
pub mod sdp;
pub mod tensor;
