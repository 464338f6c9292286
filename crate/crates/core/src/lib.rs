//! JWKB quasimodes for non-self-adjoint Schrödinger operators
//! `H = -h^2 d^2/dx^2 + V_h(x)` with complex power-law potentials.
//!
//! For `z = eta^2 + V_h(a)` with `Im V_h'(a) != 0` the crate builds a compactly
//! supported approximate eigenfunction and returns a [`jwkb::Certificate`]:
//! a lower bound `1 / r` on `||(H - z)^{-1}||`, where `r` is the computed
//! residual ratio. The [`scaling`] module maps high-energy problems onto
//! this semiclassical form, and [`oracle`] cross-checks certificates against
//! the smallest singular value of a finite-difference discretization.

pub mod error;
pub mod jwkb;
pub mod oracle;
pub mod potential;
pub mod scaling;
pub mod series;

pub use error::{Error, ErrorClass, Result};
pub use jwkb::{Certificate, Quasimode, QuasimodeOptions};
pub use potential::{Anchor, Domain, PotentialFamily, Term};
pub use series::TruncatedSeries;
