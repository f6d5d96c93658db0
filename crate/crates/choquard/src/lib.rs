//! Numerical laboratory for the nonlinear Choquard equation
//! `-Delta u + (1 + V)u = (|x|^{-alpha} * |u|^p) |u|^{p-2} u`
//! on exterior domains with finite symmetries.

pub mod error;
pub mod groundstate;
pub mod lemmas;
pub mod solver;
pub mod suites;
mod fft;
pub mod grid;
pub mod io;
pub mod energy;
pub mod potential;
pub mod riesz;
pub mod symmetry;
pub mod testfn;

pub use error::{Error, Result};
pub use grid::{DomainMask, Field, Grid, MaskShape};
