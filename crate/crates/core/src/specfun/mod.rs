//! Special functions and numerical building blocks.

pub mod bessel;
pub mod hypergeometric;
pub mod marcum;
pub mod mp;
pub mod quadrature;
pub mod series;

pub use bessel::{bessel_i_asymptotic, bessel_i_scaled, ln_bessel_i};
pub use hypergeometric::{hyp2f1, kummer_1f1, laguerre};
pub use marcum::{TailPair, marcum_q, marcum_tails};
pub use quadrature::{QuadratureRule, gauss_chebyshev};
pub use series::{NeumaierSum, SeriesConfig};
