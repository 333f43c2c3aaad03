//! High-SNR closed forms of the Approach II tails.
//!
//! As `p = Omega / (2 sigma_n^2)` grows, every `1F1` factor tends to one and
//! the alternating inner sums collapse to
//! `sum_k (-1)^{n+k} C(N+n-1, N+k-1) (n+k+2N-1)! / k! = (n+2N-1)! (n+N)! / (n! N!)`,
//! after which the remaining series is a negative binomial expansion.

use super::{SerScenario, ln_binomial};
use crate::error::{Result, domain};
use crate::specfun::{TailPair, hyp2f1};

/// Tails of `zeta` given symbol `m` from the high-SNR closed forms.
///
/// The forms are singular at `zeta = E_m`, which is rejected.
pub fn cdf_zeta_asymptotic(zeta: f64, m: usize, sc: &SerScenario) -> Result<TailPair> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    if zeta == e {
        return Err(domain("zeta", zeta, "high-SNR forms are singular at zeta = E_m"));
    }
    if zeta == 0.0 {
        return Ok(TailPair::from_lower(0.0));
    }
    let nf = sc.branches as f64;
    let k1 = 1.0 + sc.params.k_factor;
    let lead = ln_binomial(2.0 * nf - 1.0, nf);
    if e == 0.0 {
        let upper = (lead + nf * ln_fading_factor(k1 / zeta, sc)).exp();
        return Ok(TailPair::from_upper(upper.min(1.0)));
    }
    if zeta < e {
        let lower = (lead + nf * (ln_fading_factor(k1 / e, sc) + ln_ratio_factor(zeta / e))).exp();
        Ok(TailPair::from_lower(lower.min(1.0)))
    } else {
        let swapped = (lead + nf * (ln_fading_factor(k1 / zeta, sc) + ln_ratio_factor(e / zeta))).exp();
        let upper = swapped + reflection_terms_limit(zeta, e, sc)?;
        Ok(TailPair::from_upper(upper.min(1.0)))
    }
}

/// `ln( k e^{-K} / (p + k) )`.
fn ln_fading_factor(kx: f64, sc: &SerScenario) -> f64 {
    (kx / (sc.snr_ratio() + kx)).ln() - sc.params.k_factor
}

/// `ln( r / (r - 1)^2 )`.
fn ln_ratio_factor(r: f64) -> f64 {
    r.ln() - 2.0 * (1.0 - r).abs().ln()
}

/// High-SNR limit of the Bessel part of the reflection identity, with the
/// `n` series summed by a Gauss hypergeometric function.
fn reflection_terms_limit(zeta: f64, e: f64, sc: &SerScenario) -> Result<f64> {
    let n = sc.branches as i64;
    let nf = n as f64;
    let k1 = 1.0 + sc.params.k_factor;
    let geo = (e * zeta).sqrt() / (e + zeta);
    let arg = 4.0 * geo * geo;
    let half_ratio = 0.5 * (e / zeta).ln();
    let mut sum = 0.0;
    for k in (1 - n)..n {
        let ak = k.unsigned_abs() as f64;
        let h = hyp2f1(0.5 * (ak + nf), 0.5 * (ak + nf + 1.0), ak + 1.0, arg)?;
        sum += (ln_binomial(nf + ak - 1.0, nf - 1.0) + ak * geo.ln() + k as f64 * half_ratio).exp() * h;
    }
    Ok((nf * ln_fading_factor(k1 / (e + zeta), sc)).exp() * sum)
}
