//! Symbol error rate of M-ary amplitude shift keying over Rician fading
//! channels, for receivers that know the fading amplitude but not its phase.
//!
//! The crate contains the special-function kernels, the channel model, the
//! detectors, several analytical SER engines and a Monte Carlo simulator.

pub mod analytic_ser;
pub mod channel;
pub mod cli;
pub mod detectors;
pub mod error;
pub mod mc_engine;
pub mod specfun;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/recipes.md")]
pub mod book_recipes {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/engines.md")]
pub mod book_engines {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod book_simulation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/validation.md")]
pub mod book_validation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/deviations.md")]
pub mod book_deviations {}
