//! Computational dyadic harmonic analysis on the line, verified at desk
//! scale on piecewise-constant functions.
//!
//! The library builds constructive atomic decompositions for the Hardy
//! space on the half-line ([`atoms`]), measures mean oscillation against
//! four interval families and the lambda pairing ([`bmo`]), evaluates the
//! oriented fractional integral and the dyadic maximal function exactly
//! ([`operators`]), audits discrete kernels against the T(1)-style
//! bracket and weak boundedness conditions ([`t1`]), and extends the
//! generator calculus to the plane ([`haar2d`]). Everything runs on
//! [`step::StepFunction`] grids with compensated summation, so the many
//! identities that hold exactly in dyadic arithmetic are asserted
//! bitwise rather than within a tolerance.
//!
//! [`suite::run_all`] evaluates the ten acceptance criteria on seeded
//! inputs and returns one report line per criterion.

pub mod atoms;
pub mod bmo;
pub mod error;
pub mod haar2d;
pub mod interval;
pub mod num;
pub mod operators;
pub mod sampling;
pub mod step;
pub mod suite;
pub mod t1;

pub use error::{Error, Result};
pub use interval::{DyadicInterval, GridInterval, SCALE_MAX, SCALE_MIN};
pub use num::DEFAULT_TOL;
pub use step::{HalfLine, StepFunction};
