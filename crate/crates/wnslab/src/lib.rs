//! Pseudo-spectral laboratory for mollified incompressible flow on a large
//! periodic box, with polynomially weighted norms, amplitude-threshold
//! splitting of initial data, integral-equation and energy diagnostics, and
//! scaling experiments.
//!
//! The box `[-L/2, L/2)^3` stands in for the whole space: all test data decay
//! well inside the box, and the weight `(1 + |x|^2)^{-1/2}` is sampled on the
//! unperiodized coordinates. Derivatives, the heat semigroup, the Leray
//! projection and Riesz transforms act as Fourier multipliers; pointwise
//! products are dealiased with the 2/3 rule.
//!
//! The crate is organized bottom-up:
//!
//! * [`grid`], [`field`], [`fft`] — discretization and transforms;
//! * [`spectral`] — multiplier operators on fields;
//! * [`weights`] — weighted Lebesgue/Sobolev norms and the smoothing-kernel
//!   bound check;
//! * [`mollifier`] — compactly supported mollifier and plateau cutoff;
//! * [`split`] — amplitude-threshold (Calderón-style) splitting of initial
//!   data into a bounded part and a finite-energy part;
//! * [`solver`] — integrating-factor RK4 time stepper for the mollified
//!   equations plus integral-equation residuals;
//! * [`estimates`] — star norms, the weighted energy budget, existence-time
//!   bounds, constant calibration, and rescaling experiments;
//! * [`testfields`], [`snapshot`], [`config`], [`manifest`], [`diagnostics`],
//!   [`pipeline`] — test data, file formats, and the end-to-end runner used by
//!   the `wnslab` binary.
//!
//! With the default `parallel` feature the grid-sized loops run on rayon;
//! results are bit-identical for any worker count because reductions combine
//! fixed-size chunks in index order. Disabling default features yields a
//! purely sequential build with the same results.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimates;
pub mod fft;
pub mod field;
pub mod grid;
pub mod manifest;
pub mod mollifier;
pub mod par;
pub mod pipeline;
pub mod rescale;
pub mod snapshot;
pub mod solver;
pub mod spectral;
pub mod split;
pub mod testfields;
pub mod weights;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, VectorField};
pub use grid::Grid;
