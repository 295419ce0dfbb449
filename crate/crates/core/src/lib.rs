//! Equal-weight (Chebyshev-type) quadrature on `[-1, 1]` and on the circle.
//!
//! - [`weight`]: weight functions, singular-aware integration and doubling estimates.
//! - [`trig`]: real trigonometric polynomials and the Fejér kernel.
//! - [`bounds`]: sharpness functionals, node-count upper bounds and lower-bound certificates.
//! - [`construct`]: moment-matching solvers, a convex-hull construction and verification.

pub mod quad;
pub mod weight;
pub mod trig;
pub mod bounds;
pub mod construct;
pub mod fit;
