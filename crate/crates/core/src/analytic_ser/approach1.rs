//! Approach I: the density of `zeta` from series expansions, then its integral.
//!
//! For `m > 0` the fading density is expanded as a Poisson mixture of Gamma
//! laws (the power series of its Bessel factor) and the Bessel factor of the
//! conditional density is replaced by its large-argument expansion with
//! `Q` correction terms. The average over `x` is then a sum of Gamma
//! integrals:
//!
//! ```text
//! f(zeta) = (zeta/E)^{(N-1)/2} / (2 sigma^2 sqrt(2 pi w))
//!           sum_l pi_l / Gamma(N+l) sum_q c_q w^{-q} Gamma(N+l+1/2-q) / (D^{N+l} C^{1/2-q})
//! ```
//!
//! with `w = sqrt(E zeta) / sigma^2`, `C = (sqrt(zeta) - sqrt(E))^2 / (2 sigma^2)
//! + 1 / (2 sigma_h^2)`, `D = 2 sigma_h^2 C`, Poisson weights `pi_l` of mean
//! `KN` and Hankel coefficients `c_q` of order `N - 1`. Only `q <= N` keeps
//! every Gamma integral finite, so the expansion order is capped at `N`.
//!
//! The tail integrals over `zeta` use adaptive quadrature in
//! `y = sqrt(zeta)`. For `m = 0` the density is an exact Poisson mixture of
//! beta-prime laws and the tails are regularized incomplete beta functions.

use std::f64::consts::PI;

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use super::{SerScenario, ln_poisson_weights};
use crate::error::{Error, Result, domain};
use crate::specfun::bessel::hankel_coefficient;
use crate::specfun::quadrature::{Tolerance, integrate};
use crate::specfun::{NeumaierSum, TailPair, marcum_tails};

/// Argument of the Bessel kernel above which its truncated expansion is trusted.
pub const EXPANSION_THRESHOLD: f64 = 10.0;
/// Largest fading probability mass tolerated below the trusted argument.
pub const REGIME_MASS: f64 = 1e-3;

const TOLERANCE: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-9,
    max_panels: 4000,
};

/// Tails of `zeta` given symbol `m` by Approach I.
///
/// For `m > 0` the tail on the far side of `E_m` from `zeta` is integrated
/// directly and the other one is its complement. Fails with a regime error
/// when more than [`REGIME_MASS`] of the fading distribution puts the
/// Bessel argument below [`EXPANSION_THRESHOLD`] at `zeta`.
pub fn cdf_zeta_approach1(zeta: f64, m: usize, sc: &SerScenario) -> Result<TailPair> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    if zeta == 0.0 {
        return Ok(TailPair::from_lower(0.0));
    }
    if e == 0.0 {
        return central_tails(zeta, sc);
    }
    check_regime(zeta, e, sc)?;
    let kernel = SeriesDensity::new(e, sc)?;
    if zeta < e {
        // zeta = y^2 and y = t^2 smooths the algebraic behaviour at the origin
        let top = zeta.powf(0.25);
        let f = |t: f64| {
            let z = t * t * t * t;
            4.0 * t * t * t * kernel.eval(z)
        };
        let points: Vec<f64> = std::iter::once(0.0)
            .chain((0..40).map(|j| top * (1.0 - 0.5f64.powi(j + 1))))
            .chain(std::iter::once(top))
            .collect();
        let (v, _) = integrate("Approach I lower tail", f, &points, TOLERANCE)?;
        Ok(TailPair::from_lower(v.clamp(0.0, 1.0)))
    } else {
        let y0 = zeta.sqrt();
        let f = |y: f64| 2.0 * y * kernel.eval(y * y);
        let var_h = sc.params.diffuse_variance();
        let nf = sc.branches as f64;
        // the tail of the averaged density decays like zeta^{-N-1}
        let far = (sc.sigma_n_sq / var_h * (1e20f64).powf(1.0 / nf) + e).sqrt() + y0;
        let mut points = vec![y0];
        let mut step = 1e-3 * sc.sigma_n_sq.sqrt();
        while y0 + step < far {
            points.push(y0 + step);
            step *= 2.0;
        }
        points.push(far);
        let (v, _) = integrate("Approach I upper tail", f, &points, TOLERANCE)?;
        Ok(TailPair::from_upper(v.clamp(0.0, 1.0)))
    }
}

/// Density of `zeta` given symbol `m` by Approach I.
pub fn pdf_zeta(zeta: f64, m: usize, sc: &SerScenario) -> Result<f64> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    if e == 0.0 {
        return central_density(zeta, sc);
    }
    if zeta == 0.0 {
        return Ok(0.0);
    }
    check_regime(zeta, e, sc)?;
    Ok(SeriesDensity::new(e, sc)?.eval(zeta))
}

/// Probability that the Bessel argument `x sqrt(E zeta) / sigma^2` falls
/// below [`EXPANSION_THRESHOLD`].
pub fn expansion_deficit(zeta: f64, e: f64, sc: &SerScenario) -> Result<f64> {
    let x_crit = EXPANSION_THRESHOLD * sc.sigma_n_sq / (e * zeta).sqrt();
    let var_h = sc.params.diffuse_variance();
    let t = marcum_tails(
        sc.branches as u32,
        sc.noncentrality().sqrt(),
        (x_crit / var_h).sqrt(),
    )?;
    Ok(t.lower)
}

fn check_regime(zeta: f64, e: f64, sc: &SerScenario) -> Result<()> {
    let mass = expansion_deficit(zeta, e, sc)?;
    if mass > REGIME_MASS {
        return Err(Error::Regime {
            what: "Approach I",
            reason: format!(
                "fading mass {mass:.3e} puts the Bessel argument below {EXPANSION_THRESHOLD}"
            ),
        });
    }
    Ok(())
}

/// Precomputed `zeta`-independent parts of the Approach I series density.
struct SeriesDensity {
    energy: f64,
    sigma_sq: f64,
    var_h: f64,
    half_dof: f64,
    /// `(l, q, ln |coefficient|, sign)`.
    terms: Vec<(f64, f64, f64, f64)>,
}

impl SeriesDensity {
    fn new(energy: f64, sc: &SerScenario) -> Result<Self> {
        let nf = sc.branches as f64;
        let order = sc.series.asymp_order.min(sc.branches);
        let weights = ln_poisson_weights(nf * sc.params.k_factor, &sc.series)?;
        let mut terms = Vec::with_capacity(weights.len() * (order + 1));
        for (l, w) in weights.iter().enumerate() {
            let lf = l as f64;
            for q in 0..=order {
                let c = hankel_coefficient(nf - 1.0, q);
                if c == 0.0 {
                    continue;
                }
                let qf = q as f64;
                let ln = w - ln_gamma(nf + lf) + ln_gamma(nf + lf + 0.5 - qf) + c.abs().ln();
                terms.push((lf, qf, ln, c.signum()));
            }
        }
        Ok(SeriesDensity {
            energy,
            sigma_sq: sc.sigma_n_sq,
            var_h: sc.params.diffuse_variance(),
            half_dof: nf,
            terms,
        })
    }

    fn eval(&self, zeta: f64) -> f64 {
        if zeta <= 0.0 {
            return 0.0;
        }
        let nf = self.half_dof;
        let s2 = self.sigma_sq;
        let w = (self.energy * zeta).sqrt() / s2;
        let c = (zeta.sqrt() - self.energy.sqrt()).powi(2) / (2.0 * s2) + 1.0 / (2.0 * self.var_h);
        let ln_c = c.ln();
        let ln_d = (2.0 * self.var_h * c).ln();
        let ln_w = w.ln();
        let mut sum = NeumaierSum::new();
        for &(l, q, ln, sign) in &self.terms {
            let t = ln - (nf + l) * ln_d - (0.5 - q) * ln_c - q * ln_w;
            sum.add(sign * t.exp());
        }
        let ln_pref = 0.5 * (nf - 1.0) * (zeta / self.energy).ln()
            - (2.0 * s2).ln()
            - 0.5 * (2.0 * PI * w).ln();
        (ln_pref.exp() * sum.value()).max(0.0)
    }
}

/// `m = 0`: with `t = z / (z + c)`, `z = zeta / (2 sigma^2)` and
/// `c = 1 / (2 sigma_h^2)`, the CDF is `sum_l pi_l I_t(N, N + l)`.
fn central_tails(zeta: f64, sc: &SerScenario) -> Result<TailPair> {
    let nf = sc.branches as f64;
    let weights = ln_poisson_weights(nf * sc.params.k_factor, &sc.series)?;
    let a = zeta / (2.0 * sc.sigma_n_sq);
    let c = 1.0 / (2.0 * sc.params.diffuse_variance());
    let t = a / (a + c);
    let t_comp = c / (a + c);
    let mut lower = NeumaierSum::new();
    let mut upper = NeumaierSum::new();
    for (l, w) in weights.iter().enumerate() {
        let b = nf + l as f64;
        let pw = w.exp();
        lower.add(pw * beta_reg(nf, b, t));
        upper.add(pw * beta_reg(b, nf, t_comp));
    }
    let (lower, upper) = (lower.value(), upper.value());
    Ok(if lower <= upper {
        TailPair::from_lower(lower.clamp(0.0, 1.0))
    } else {
        TailPair::from_upper(upper.clamp(0.0, 1.0))
    })
}

/// `m = 0` density: a Poisson mixture of scaled beta-prime densities.
fn central_density(zeta: f64, sc: &SerScenario) -> Result<f64> {
    let nf = sc.branches as f64;
    let weights = ln_poisson_weights(nf * sc.params.k_factor, &sc.series)?;
    let rate = 1.0 / (2.0 * sc.sigma_n_sq);
    let c = 1.0 / (2.0 * sc.params.diffuse_variance());
    if zeta == 0.0 {
        if sc.branches > 1 {
            return Ok(0.0);
        }
        // N = 1: f(0) = sum_l pi_l (1 + l) rate / c
        let mut s = 0.0;
        for (l, w) in weights.iter().enumerate() {
            s += w.exp() * (1.0 + l as f64) * rate / c;
        }
        return Ok(s);
    }
    let mut s = NeumaierSum::new();
    for (l, w) in weights.iter().enumerate() {
        let lf = l as f64;
        let ln = w + nf * rate.ln() + (nf - 1.0) * zeta.ln() + (nf + lf) * c.ln()
            + ln_gamma(2.0 * nf + lf)
            - ln_gamma(nf)
            - ln_gamma(nf + lf)
            - (2.0 * nf + lf) * (rate * zeta + c).ln();
        s.add(ln.exp());
    }
    Ok(s.value())
}
