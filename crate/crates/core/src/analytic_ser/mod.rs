//! Analytical symbol error rate of the heuristic (energy threshold) detector.
//!
//! Every engine returns the two tails of the conditional distribution of the
//! normalized energy `zeta` given the transmitted energy `E_m`:
//!
//! * [`Engine::Numeric`] integrates the Marcum-Q conditional CDF against the
//!   density of `x = sum alpha_i^2` by adaptive quadrature and is the reference.
//! * [`Engine::ApproachI`] builds the density of `zeta` from a power series
//!   for the fading density and a large-argument expansion of the Bessel
//!   kernel, then integrates it.
//! * [`Engine::ApproachII`] averages the Laguerre-series form of the Marcum
//!   CDF in closed form, giving double series of `1F1` terms.
//! * [`Engine::Asymptotic`] keeps the leading high-SNR behaviour of the
//!   Approach II series.

mod approach1;
mod approach2;
mod asymptotic;
mod numeric;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::channel::{LinkBudget, MaskConstellation, RicianParams};
use crate::error::{Error, Result, domain};
use crate::specfun::{SeriesConfig, TailPair, ln_bessel_i};

pub use approach1::{cdf_zeta_approach1, pdf_zeta};
pub use approach2::cdf_zeta_approach2;
pub use asymptotic::cdf_zeta_asymptotic;
pub use numeric::{cdf_zeta_numeric, pdf_zeta_numeric};

/// Everything the analytical engines need about one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SerScenario {
    pub constellation: MaskConstellation,
    pub params: RicianParams,
    /// Number of receive antennas `N`.
    pub branches: usize,
    /// Noise variance per real dimension.
    pub sigma_n_sq: f64,
    pub series: SeriesConfig,
}

impl SerScenario {
    pub fn new(
        constellation: MaskConstellation,
        params: RicianParams,
        branches: usize,
        sigma_n_sq: f64,
        series: SeriesConfig,
    ) -> Result<Self> {
        if branches == 0 {
            return Err(domain("N", 0.0, "need at least one antenna"));
        }
        if !(sigma_n_sq > 0.0) || !sigma_n_sq.is_finite() {
            return Err(domain("sigma_n_sq", sigma_n_sq, "noise variance must be positive"));
        }
        series.validate()?;
        Ok(SerScenario {
            constellation,
            params,
            branches,
            sigma_n_sq,
            series,
        })
    }

    /// Unit channel power and unit average symbol energy at `snr_db`.
    pub fn at_snr(order: usize, branches: usize, k_factor: f64, snr_db: f64) -> Result<Self> {
        let c = MaskConstellation::new(order)?;
        let p = RicianParams::new(k_factor, 1.0)?;
        let link = LinkBudget::new(snr_db, 1.0, 1.0)?;
        Self::new(c, p, branches, link.sigma_n_sq, SeriesConfig::default())
    }

    /// The same scenario moved to another average SNR.
    pub fn with_snr_db(&self, snr_db: f64) -> Result<Self> {
        let link = LinkBudget::new(snr_db, self.params.omega, 1.0)?;
        Self::new(
            self.constellation.clone(),
            self.params,
            self.branches,
            link.sigma_n_sq,
            self.series,
        )
    }

    pub fn with_series(mut self, series: SeriesConfig) -> Self {
        self.series = series;
        self
    }

    /// `Omega / (2 sigma_n^2)`.
    pub fn snr_ratio(&self) -> f64 {
        self.params.omega / (2.0 * self.sigma_n_sq)
    }

    /// Noncentrality `2 K N` of `x / sigma_h^2`.
    pub fn noncentrality(&self) -> f64 {
        2.0 * self.params.k_factor * self.branches as f64
    }

    fn energy(&self, m: usize) -> Result<f64> {
        self.constellation.energy(m)
    }
}

/// Analytical SER engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Numeric,
    #[serde(rename = "approach-i")]
    ApproachI,
    #[serde(rename = "approach-ii")]
    ApproachII,
    Asymptotic,
}

impl Engine {
    pub const ALL: [Engine; 4] = [
        Engine::Numeric,
        Engine::ApproachI,
        Engine::ApproachII,
        Engine::Asymptotic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Numeric => "numeric",
            Engine::ApproachI => "approach-i",
            Engine::ApproachII => "approach-ii",
            Engine::Asymptotic => "asymptotic",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown engine `{s}`")))
    }
}

/// Both tails of `zeta` given symbol `m`, from the chosen engine.
pub fn cdf_zeta(engine: Engine, zeta: f64, m: usize, sc: &SerScenario) -> Result<TailPair> {
    match engine {
        Engine::Numeric => cdf_zeta_numeric(zeta, m, sc),
        Engine::ApproachI => cdf_zeta_approach1(zeta, m, sc),
        Engine::ApproachII => cdf_zeta_approach2(zeta, m, sc),
        Engine::Asymptotic => cdf_zeta_asymptotic(zeta, m, sc),
    }
}

/// An assembled SER with the number of tail evaluations that fell back to
/// the numeric engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticSer {
    pub ser: f64,
    pub fallbacks: usize,
}

/// SER of the heuristic detector; series engines that leave their validity
/// region fall back to [`Engine::Numeric`] (logged at `warn`).
pub fn ser_heuristic(sc: &SerScenario, engine: Engine) -> Result<f64> {
    Ok(ser_heuristic_with(sc, engine, true)?.ser)
}

/// As [`ser_heuristic`], but regime and convergence errors are returned.
pub fn ser_heuristic_strict(sc: &SerScenario, engine: Engine) -> Result<f64> {
    Ok(ser_heuristic_with(sc, engine, false)?.ser)
}

/// Error probabilities given each symbol, averaged with equal priors.
///
/// The lowest symbol errs above the first threshold, the highest below the
/// last one, and interior symbols on either side; each tail is evaluated
/// directly rather than as one minus the other.
pub fn ser_heuristic_with(sc: &SerScenario, engine: Engine, allow_fallback: bool) -> Result<AnalyticSer> {
    let c = &sc.constellation;
    let order = c.order();
    let eta = c.thresholds();
    let mut fallbacks = 0;
    let mut tail = |zeta: f64, m: usize| -> Result<TailPair> {
        match cdf_zeta(engine, zeta, m, sc) {
            Ok(t) => Ok(t),
            Err(e @ (Error::NonConvergence { .. } | Error::Regime { .. } | Error::Quadrature { .. }))
                if allow_fallback && engine != Engine::Numeric =>
            {
                log::warn!("{engine} engine unavailable at zeta = {zeta}, m = {m} ({e}); using numeric");
                fallbacks += 1;
                cdf_zeta_numeric(zeta, m, sc)
            }
            Err(e) => Err(e),
        }
    };
    let mut total = 0.0;
    for m in 0..order {
        if m > 0 {
            total += tail(eta[m - 1], m)?.lower;
        }
        if m + 1 < order {
            total += tail(eta[m], m)?.upper;
        }
    }
    let ser = (total / order as f64).clamp(0.0, 1.0);
    Ok(AnalyticSer { ser, fallbacks })
}

/// Density of `x = sum_i alpha_i^2`: `x / sigma_h^2` is noncentral chi-squared
/// with `2N` degrees of freedom and noncentrality `2KN`.
pub fn pdf_x(x: f64, sc: &SerScenario) -> f64 {
    ln_pdf_x(x, sc).exp()
}

pub(crate) fn ln_pdf_x(x: f64, sc: &SerScenario) -> f64 {
    let n = sc.branches as f64;
    let var_h = sc.params.diffuse_variance();
    let lambda = sc.noncentrality();
    if !(x > 0.0) {
        return if x == 0.0 && sc.branches == 1 {
            -(2.0 * var_h).ln() - 0.5 * lambda
        } else {
            f64::NEG_INFINITY
        };
    }
    let y = x / var_h;
    if lambda == 0.0 {
        // Gamma(N, 2 sigma_h^2)
        return (n - 1.0) * x.ln() - x / (2.0 * var_h) - ln_gamma(n) - n * (2.0 * var_h).ln();
    }
    let ln_i = ln_bessel_i(n - 1.0, (lambda * y).sqrt()).unwrap_or(f64::NAN);
    -(2.0 * var_h).ln() - 0.5 * (y + lambda) + 0.5 * (n - 1.0) * (y / lambda).ln() + ln_i
}

/// Conditional density of `zeta` given `x` and symbol `m`.
///
/// For `m > 0` it is the noncentral chi-squared law with `2N` degrees of
/// freedom, noncentrality `E_m` and component variance `sigma_n^2 / x`; for
/// `m = 0` it is the Erlang law with rate `x / (2 sigma_n^2)`.
pub fn pdf_zeta_cond(zeta: f64, x: f64, m: usize, sc: &SerScenario) -> Result<f64> {
    if !(zeta >= 0.0) {
        return Err(domain("zeta", zeta, "must be non-negative"));
    }
    if !(x > 0.0) {
        return Err(domain("x", x, "must be positive"));
    }
    let e = sc.energy(m)?;
    Ok(ln_pdf_zeta_cond(zeta, x, e, sc).exp())
}

pub(crate) fn ln_pdf_zeta_cond(zeta: f64, x: f64, e: f64, sc: &SerScenario) -> f64 {
    let n = sc.branches as f64;
    let s2 = sc.sigma_n_sq;
    if e == 0.0 {
        let rate = x / (2.0 * s2);
        if zeta == 0.0 {
            return if sc.branches == 1 { rate.ln() } else { f64::NEG_INFINITY };
        }
        return n * rate.ln() + (n - 1.0) * zeta.ln() - rate * zeta - ln_gamma(n);
    }
    if zeta == 0.0 {
        return if sc.branches == 1 {
            (x / (2.0 * s2)).ln() - x * e / (2.0 * s2)
        } else {
            f64::NEG_INFINITY
        };
    }
    let arg = x * (e * zeta).sqrt() / s2;
    let ln_i = ln_bessel_i(n - 1.0, arg).unwrap_or(f64::NAN);
    (x / (2.0 * s2)).ln() + 0.5 * (n - 1.0) * (zeta / e).ln() - x * (zeta + e) / (2.0 * s2) + ln_i
}

/// Poisson(`mean`) weights in the log domain, truncated once they are
/// negligible past the mode; `K = 0` yields the single weight `ln 1`.
///
/// Fails when the weights are still significant after `max_terms` entries.
pub(crate) fn ln_poisson_weights(mean: f64, cfg: &SeriesConfig) -> Result<Vec<f64>> {
    if mean == 0.0 {
        return Ok(vec![0.0]);
    }
    let negligible = cfg.term_rel_tol.ln() - 5.0;
    let mut out = Vec::new();
    for l in 0..cfg.max_terms {
        let lf = l as f64;
        let w = -mean + lf * mean.ln() - ln_gamma(lf + 1.0);
        out.push(w);
        if lf > mean && w < negligible {
            return Ok(out);
        }
    }
    Err(Error::NonConvergence {
        what: "Poisson mixture over the line-of-sight component",
        terms: cfg.max_terms,
    })
}

/// `ln C(n, k)` through Gamma functions.
pub(crate) fn ln_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Relative width of the band around `zeta = E_m` in which the series
/// engines defer to the numeric one.
pub const BRANCH_SLIVER: f64 = 1e-9;
