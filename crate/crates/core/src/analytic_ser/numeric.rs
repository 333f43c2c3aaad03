//! Reference engine: one-dimensional quadrature over the fading energy.

use super::{SerScenario, ln_pdf_x, ln_pdf_zeta_cond};
use crate::error::{Result, domain};
use crate::specfun::quadrature::{Tolerance, integrate};
use crate::specfun::{TailPair, marcum_tails};

const TOLERANCE: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 1e-10,
    max_panels: 4000,
};

/// Tails of `zeta` given symbol `m` as `int F(zeta | x, E_m) f(x) dx`, with
/// the conditional CDF given by the generalized Marcum Q function.
///
/// The tail that is small at the evaluation point is the one integrated, so
/// tiny error probabilities keep their relative accuracy.
pub fn cdf_zeta_numeric(zeta: f64, m: usize, sc: &SerScenario) -> Result<TailPair> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    if zeta == 0.0 {
        return Ok(TailPair::from_lower(0.0));
    }
    let order = sc.branches as u32;
    let s2 = sc.sigma_n_sq;
    let want_lower = e > 0.0 && zeta < e;
    let gap = (e.sqrt() - zeta.sqrt()).powi(2);
    let integrand = |x: f64| {
        if x <= 0.0 {
            // the conditional CDF vanishes at x = 0 unless m = 0 and zeta > 0
            return if want_lower { 0.0 } else { ln_pdf_x(0.0, sc).exp() };
        }
        let ln_f = ln_pdf_x(x, sc);
        if ln_f == f64::NEG_INFINITY {
            return 0.0;
        }
        let a = (x * e / s2).sqrt();
        let b = (x * zeta / s2).sqrt();
        let t = match marcum_tails(order, a, b) {
            Ok(t) => t,
            Err(_) => return f64::NAN,
        };
        let tail = if want_lower { t.lower } else { t.upper };
        ln_f.exp() * tail
    };
    let points = x_breakpoints(sc, gap.max(if e == 0.0 { zeta } else { 0.0 }));
    let (value, _) = integrate("conditional CDF average", integrand, &points, TOLERANCE)?;
    let value = value.clamp(0.0, 1.0);
    Ok(if want_lower {
        TailPair::from_lower(value)
    } else {
        TailPair::from_upper(value)
    })
}

/// Density of `zeta` given symbol `m` as `int f(zeta | x, E_m) f(x) dx`.
pub fn pdf_zeta_numeric(zeta: f64, m: usize, sc: &SerScenario) -> Result<f64> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    let gap = if e == 0.0 {
        zeta
    } else {
        (e.sqrt() - zeta.sqrt()).powi(2)
    };
    let integrand = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        (ln_pdf_x(x, sc) + ln_pdf_zeta_cond(zeta, x, e, sc)).exp()
    };
    let points = x_breakpoints(sc, gap);
    let (value, _) = integrate("conditional density average", integrand, &points, TOLERANCE)?;
    Ok(value.max(0.0))
}

/// Panel edges over `x`: geometric towards zero from a cut-off beyond which
/// either the fading density or the conditional factor `exp(-x gap / 2 sigma^2)`
/// has died out.
pub(crate) fn x_breakpoints(sc: &SerScenario, gap: f64) -> Vec<f64> {
    let n = sc.branches as f64;
    let var_h = sc.params.diffuse_variance();
    let lambda = sc.noncentrality();
    let fading_cut = var_h * (lambda.sqrt() + 12.0 + 2.0 * n.sqrt()).powi(2);
    let decay_cut = if gap > 0.0 {
        2.0 * sc.sigma_n_sq / gap * (100.0 + 4.0 * n)
    } else {
        f64::INFINITY
    };
    let top = fading_cut.min(decay_cut);
    let mut points: Vec<f64> = (0..60).map(|j| top * 0.5f64.powi(j)).collect();
    let mean = n * sc.params.omega;
    if mean < top {
        points.push(mean);
    }
    points.push(0.0);
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
}
