//! Certificates of subellipticity for `L = d/dt + i (d phi / dt) d/dx` with a
//! quasihomogeneous symbol `phi(t, s)`.
//!
//! The pipeline is: parse a [`symbols::QhSymbol`], analyse its restriction to
//! the unit disto-circle ([`circle::check_h2`]), plan escape curves
//! ([`escape::plan_sectors`]), verify the curve family on a grid
//! ([`certify::certify`]) and measure the resulting decay
//! ([`decay::sweep_and_fit`]).

pub mod certify;
pub mod circle;
pub mod cli;
pub mod decay;
pub mod distgeo;
pub mod error;
pub mod escape;
pub mod quadrature;
pub mod symbols;

pub use error::{Error, Result};
