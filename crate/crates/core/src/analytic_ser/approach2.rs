//! Approach II: the Laguerre form of the Marcum CDF averaged term by term.
//!
//! For `zeta < E_m` the lower tail is
//!
//! ```text
//! F = sum_n sum_{k<=n} (-1)^{n+k} C(N+n-1, N+k-1) (n+k+2N-1)! / ((N-1)! (N+n)! k!)
//!     (zeta/E_m)^{n+N} (K_m e^{-K})^N p^{n+k+N} / (p + K_m)^{n+k+2N}
//!     1F1(n+k+2N; N; N K K_m / (p + K_m))
//! ```
//!
//! with `p = Omega / (2 sigma_n^2)` and `K_m = (1 + K) / E_m`. For
//! `zeta > E_m` the reflection identity of the Marcum function turns the upper
//! tail into the same series with the roles of `zeta` and `E_m` swapped plus
//! a finite sum of Bessel averages. The inner sum alternates; when it cancels
//! too deeply for double precision the series is re-summed in big-float
//! arithmetic.

use statrs::function::gamma::ln_gamma;

use super::{BRANCH_SLIVER, SerScenario, cdf_zeta_numeric, ln_binomial};
use crate::error::{Error, Result, domain};
use crate::specfun::hypergeometric::kummer_1f1_upper_sequence;
use crate::specfun::mp::BigFloat;
use crate::specfun::{NeumaierSum, SeriesConfig, TailPair, hyp2f1};

/// Largest ratio between the biggest term and the sum accepted from the
/// double-precision pass.
const CANCELLATION_LIMIT: f64 = 1e6;
/// Working precision ceiling for the big-float pass, in bits.
const MAX_PRECISION: u32 = 1 << 14;

/// Both tails of `zeta` given symbol `m` by the Approach II series.
///
/// Within a relative distance of [`BRANCH_SLIVER`] of `E_m` both series
/// diverge and the numeric engine answers instead.
pub fn cdf_zeta_approach2(zeta: f64, m: usize, sc: &SerScenario) -> Result<TailPair> {
    if !(zeta >= 0.0) || !zeta.is_finite() {
        return Err(domain("zeta", zeta, "must be finite and non-negative"));
    }
    let e = sc.energy(m)?;
    if zeta == 0.0 {
        return Ok(TailPair::from_lower(0.0));
    }
    let k1 = 1.0 + sc.params.k_factor;
    if e == 0.0 {
        return Ok(clamped_upper(central_upper_tail(zeta, sc)?));
    }
    if zeta <= e * (1.0 - BRANCH_SLIVER) {
        let lower = laguerre_double_series(zeta / e, k1 / e, sc)?;
        Ok(clamped_lower(lower))
    } else if zeta >= e * (1.0 + BRANCH_SLIVER) {
        let swapped = laguerre_double_series(e / zeta, k1 / zeta, sc)?;
        let bessel = reflection_terms(zeta, e, sc)?;
        Ok(clamped_upper(swapped + bessel))
    } else {
        cdf_zeta_numeric(zeta, m, sc)
    }
}

fn clamped_lower(x: f64) -> TailPair {
    TailPair::from_lower(x.clamp(0.0, 1.0))
}

fn clamped_upper(x: f64) -> TailPair {
    TailPair::from_upper(x.clamp(0.0, 1.0))
}

/// Shared quantities of one series: `u = p / (p + k)`, `v = k / (p + k)` and
/// the `1F1` argument `N K v`.
struct Weights {
    u: f64,
    ln_u: f64,
    ln_v: f64,
    z: f64,
}

fn weights(kx: f64, sc: &SerScenario) -> Weights {
    let p = sc.snr_ratio();
    let n = sc.branches as f64;
    let u = p / (p + kx);
    let v = kx / (p + kx);
    Weights {
        u,
        ln_u: u.ln(),
        ln_v: v.ln(),
        z: n * sc.params.k_factor * v,
    }
}

/// `1 - F(zeta | E_0)`: a finite sum, since the conditional CDF is a
/// regularized incomplete Gamma function.
fn central_upper_tail(zeta: f64, sc: &SerScenario) -> Result<f64> {
    let n = sc.branches;
    let nf = n as f64;
    let w = weights((1.0 + sc.params.k_factor) / zeta, sc);
    let hyp = kummer_1f1_upper_sequence(nf, nf, w.z, n)?;
    let mut sum = NeumaierSum::new();
    for (k, f) in hyp.iter().enumerate() {
        let kf = k as f64;
        let ln_t = ln_binomial(nf + kf - 1.0, kf) + nf * (w.ln_v - sc.params.k_factor)
            + kf * w.ln_u
            + f.ln();
        sum.add(ln_t.exp());
    }
    Ok(sum.value())
}

/// The Laguerre double series for `ratio < 1` and fading constant `kx`.
fn laguerre_double_series(ratio: f64, kx: f64, sc: &SerScenario) -> Result<f64> {
    let n = sc.branches;
    let nf = n as f64;
    let cfg = &sc.series;
    let w = weights(kx, sc);
    let ln_ratio = ratio.ln();
    let count = 2 * cfg.max_terms;
    let hyp = kummer_1f1_upper_sequence(2.0 * nf, nf, w.z, count)?;
    if hyp.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonConvergence {
            what: "1F1 sequence of the Laguerre series",
            terms: count,
        });
    }
    let ln_hyp: Vec<f64> = hyp.iter().map(|f| f.ln()).collect();

    let mut total = NeumaierSum::new();
    let mut biggest: f64 = 0.0;
    let mut quiet = 0;
    let mut terms_used = None;
    // ln of the coefficient at (n, 0)
    let mut ln_c_row = ln_binomial(2.0 * nf - 1.0, nf);
    for row in 0..cfg.max_terms {
        let rf = row as f64;
        let mut block = NeumaierSum::new();
        let mut ln_c = ln_c_row;
        for k in 0..=row {
            let kf = k as f64;
            let j = row + k;
            let ln_t = ln_c + j as f64 * w.ln_u + ln_hyp[j] + rf * ln_ratio;
            let t = if j % 2 == 0 { ln_t.exp() } else { -ln_t.exp() };
            biggest = biggest.max(t.abs());
            block.add(t);
            if k < row {
                ln_c += ((rf - kf) * (rf + kf + 2.0 * nf)).ln() - ((nf + kf) * (kf + 1.0)).ln();
            }
        }
        let b = block.value();
        total.add(b);
        ln_c_row += ((nf + rf) * (rf + 2.0 * nf)).ln() - ((rf + 1.0) * (nf + rf + 1.0)).ln();
        if row > 0 && b.abs() <= cfg.term_rel_tol * total.value().abs() {
            quiet += 1;
            if quiet >= 2 {
                terms_used = Some(row + 1);
                break;
            }
        } else {
            quiet = 0;
        }
    }
    let ln_prefactor = nf * (ln_ratio - sc.params.k_factor + w.ln_u + w.ln_v);
    let sum = total.value();
    if terms_used.is_some() && sum > 0.0 && biggest <= CANCELLATION_LIMIT * sum {
        return Ok(ln_prefactor.exp() * sum);
    }
    log::debug!(
        "Laguerre series cancels by {:.1e}; re-summing with big floats",
        biggest / sum.abs().max(f64::MIN_POSITIVE)
    );
    let sum = laguerre_double_series_mp(ratio, w.u, w.z, n, cfg, sum.abs(), biggest)?;
    Ok(ln_prefactor.exp() * sum)
}

/// The alternating part of [`laguerre_double_series`], summed with enough
/// working precision to absorb the cancellation.
fn laguerre_double_series_mp(
    ratio: f64,
    u: f64,
    z: f64,
    n: usize,
    cfg: &SeriesConfig,
    estimate: f64,
    biggest: f64,
) -> Result<f64> {
    let needed = (biggest / estimate.max(f64::MIN_POSITIVE)).log2().clamp(0.0, 4000.0);
    let mut prec = (needed as u32 + 96).max(160);
    loop {
        let (sum, top_bits, converged) = mp_sum(ratio, u, z, n, cfg, prec);
        let lost = match sum.log2_floor() {
            Some(b) => (top_bits - b).max(0) as u32,
            None => prec,
        };
        if lost + 64 <= prec {
            if converged {
                return Ok(sum.to_f64());
            }
            return Err(Error::NonConvergence {
                what: "Approach II Laguerre series",
                terms: cfg.max_terms,
            });
        }
        if prec >= MAX_PRECISION {
            return Err(Error::NonConvergence {
                what: "big-float Laguerre series",
                terms: cfg.max_terms,
            });
        }
        prec = (lost + 128).max(2 * prec).min(MAX_PRECISION);
    }
}

/// Returns the partial sum, `floor(log2)` of its largest term and whether the
/// rows settled. Rounding noise at too low a precision can keep the rows from
/// settling, so the caller judges convergence only once the lost bits fit.
fn mp_sum(
    ratio: f64,
    u: f64,
    z: f64,
    n: usize,
    cfg: &SeriesConfig,
    prec: u32,
) -> (BigFloat, i64, bool) {
    let nn = n as u64;
    let rows = cfg.max_terms;
    let hyp = mp_kummer_sequence(2 * nn, nn, z, 2 * rows, prec);
    let u = BigFloat::from_f64(u);
    let ratio = BigFloat::from_f64(ratio);
    let mut u_pow = Vec::with_capacity(2 * rows);
    let mut acc = BigFloat::from_u64(1);
    for _ in 0..2 * rows {
        u_pow.push(acc.clone());
        acc = acc.mul(&u, prec);
    }
    let mut total = BigFloat::zero();
    let mut top = i64::MIN;
    let mut ratio_pow = BigFloat::from_u64(1);
    let mut c_row = BigFloat::from_u64(binomial_u64(2 * nn - 1, nn));
    let mut quiet = 0;
    for row in 0..rows as u64 {
        let mut c = c_row.clone();
        let mut block = BigFloat::zero();
        for k in 0..=row {
            let j = (row + k) as usize;
            let t = c.mul(&u_pow[j], prec).mul(&hyp[j], prec).mul(&ratio_pow, prec);
            if let Some(b) = t.log2_floor() {
                top = top.max(b);
            }
            block = if j % 2 == 0 {
                block.add(&t, prec)
            } else {
                block.sub(&t, prec)
            };
            if k < row {
                c = c
                    .mul_u64((row - k) * (row + k + 2 * nn), prec)
                    .div_u64((nn + k) * (k + 1), prec);
            }
        }
        total = total.add(&block, prec);
        if row > 0 && block.to_f64().abs() <= cfg.term_rel_tol * total.to_f64().abs() {
            quiet += 1;
            if quiet >= 2 {
                return (total, top, true);
            }
        } else {
            quiet = 0;
        }
        c_row = c_row
            .mul_u64((nn + row) * (row + 2 * nn), prec)
            .div_u64((row + 1) * (nn + row + 1), prec);
        ratio_pow = ratio_pow.mul(&ratio, prec);
    }
    (total, top, false)
}

fn binomial_u64(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `1F1(a0 + j; b; z)` for `j < count` in big-float arithmetic: the first two
/// by their (positive) power series, the rest by the forward recurrence.
fn mp_kummer_sequence(a0: u64, b: u64, z: f64, count: usize, prec: u32) -> Vec<BigFloat> {
    let zb = BigFloat::from_f64(z);
    let series = |a: u64| {
        let mut sum = BigFloat::from_u64(1);
        let mut term = BigFloat::from_u64(1);
        let mut j = 0u64;
        loop {
            term = term
                .mul_u64(a + j, prec)
                .mul(&zb, prec)
                .div_u64((b + j) * (j + 1), prec);
            sum = sum.add(&term, prec);
            j += 1;
            let small = match (term.log2_floor(), sum.log2_floor()) {
                (Some(t), Some(s)) => t < s - prec as i64 - 8,
                _ => true,
            };
            if (j as f64) > z && small {
                return sum;
            }
        }
    };
    let mut out = Vec::with_capacity(count);
    out.push(series(a0));
    if count > 1 {
        out.push(series(a0 + 1));
    }
    for j in 1..count.saturating_sub(1) {
        let a = a0 + j as u64;
        let lead = zb.add(&BigFloat::from_u64(2 * a - b), prec).mul(&out[j], prec);
        let back = out[j - 1].mul_u64(a - b, prec);
        out.push(lead.sub(&back, prec).div_u64(a, prec));
    }
    out
}

/// The finite Bessel part of the reflection identity, averaged over the
/// fading:
/// `sum_{|k|<N} (E_m/zeta)^{k/2} E_x[exp(-x (zeta+E_m) / 2 sigma^2) I_k(x sqrt(E_m zeta) / sigma^2)]`.
///
/// Its double series over the Bessel index and the `1F1` terms decays only
/// like `(4 w^2)^n` with `w = sqrt(E_m zeta) / (E_m + zeta)`, which is close to
/// one near the decision boundary. Expanding each `1F1` in its own power
/// series and summing over `n` first gives
///
/// ```text
/// e^{-KN} v^N sum_k (E_m/zeta)^{k/2} (w u)^{|k|} / (|k|! (N-1)!)
///     sum_j (N K v)^j / ((N)_j j!) Gamma(a) 2F1(a/2, (a+1)/2; |k|+1; 4 w^2 u^2)
/// ```
///
/// with `a = |k| + N + j`; every term is positive and the `j` series
/// converges like that of `1F1(.; N; N K v)`.
fn reflection_terms(zeta: f64, e: f64, sc: &SerScenario) -> Result<f64> {
    let n = sc.branches as i64;
    let nf = n as f64;
    let cfg = &sc.series;
    let w = weights((1.0 + sc.params.k_factor) / (e + zeta), sc);
    let geo = (e * zeta).sqrt() / (e + zeta) * w.u;
    let arg = 4.0 * geo * geo;
    let ln_half_ratio = 0.5 * (e / zeta).ln();
    let ln_z = w.z.ln();
    let mut total = NeumaierSum::new();
    let mut quiet = 0;
    for j in 0..cfg.max_terms {
        let jf = j as f64;
        let mut block = NeumaierSum::new();
        for k in (1 - n)..n {
            let ak = k.unsigned_abs() as f64;
            let a = ak + nf + jf;
            let h = hyp2f1(0.5 * a, 0.5 * (a + 1.0), ak + 1.0, arg)?;
            let ln_t = k as f64 * ln_half_ratio + ak * geo.ln() - ln_gamma(ak + 1.0) + ln_gamma(a)
                + if j == 0 { 0.0 } else { jf * ln_z }
                - ln_gamma(nf + jf)
                - ln_gamma(jf + 1.0);
            block.add(ln_t.exp() * h);
        }
        let b = block.value();
        total.add(b);
        if w.z == 0.0 {
            break;
        }
        if jf > w.z && b <= cfg.term_rel_tol * total.value() {
            quiet += 1;
            if quiet >= 2 {
                break;
            }
        } else {
            quiet = 0;
        }
        if j + 1 == cfg.max_terms {
            return Err(Error::NonConvergence {
                what: "Approach II reflection terms",
                terms: cfg.max_terms,
            });
        }
    }
    // (N)_j j! Gamma(N) = Gamma(N + j) j!, so Gamma(N) is already folded in
    let ln_prefactor = nf * (w.ln_v - sc.params.k_factor);
    Ok(ln_prefactor.exp() * total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_float_kummer_matches_double() {
        let seq = mp_kummer_sequence(4, 2, 3.7, 30, 256);
        let dbl = kummer_1f1_upper_sequence(4.0, 2.0, 3.7, 30).unwrap();
        for (a, b) in seq.iter().zip(&dbl) {
            assert!((a.to_f64() / b - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_u64(7, 4), 35);
        assert_eq!(binomial_u64(1, 1), 1);
    }
}
