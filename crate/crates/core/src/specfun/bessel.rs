//! Modified Bessel functions of the first kind, evaluated in the log domain.

use statrs::function::gamma::ln_gamma;

use crate::error::{Result, domain};

/// Argument above which the Hankel expansion replaces the power series.
pub const HANKEL_SWITCH: f64 = 50.0;

/// `ln I_v(z)` for real order `v >= 0` and `z >= 0`.
///
/// Uses the power series for `z <= 50` (or when the order is large next to
/// `z`) and the Hankel asymptotic expansion above.
pub fn ln_bessel_i(v: f64, z: f64) -> Result<f64> {
    check(v, z)?;
    if z > HANKEL_SWITCH && v * v <= 0.25 * z {
        Ok(ln_bessel_i_hankel(v, z))
    } else {
        Ok(ln_bessel_i_series(v, z))
    }
}

/// `e^{-z} I_v(z)`.
pub fn bessel_i_scaled(v: f64, z: f64) -> Result<f64> {
    Ok((ln_bessel_i(v, z)? - z).exp())
}

fn check(v: f64, z: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(domain("v", v, "order must be finite and non-negative"));
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("z", z, "argument must be finite and non-negative"));
    }
    Ok(())
}

/// Power-series branch. Terms are summed outward from the largest one so the
/// routine never overflows, whatever the size of `z`.
pub fn ln_bessel_i_series(v: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if v == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let q = 0.25 * z * z;
    let lnq = q.ln();
    // index of the largest term: k (v + k) = z^2 / 4
    let kstar = (0.5 * ((v * v + z * z).sqrt() - v)).floor().max(0.0);
    let ln_term = |k: f64| k * lnq - ln_gamma(k + 1.0) - ln_gamma(v + k + 1.0);
    let peak = ln_term(kstar);

    let mut sum = 1.0;
    // walk upward
    let mut t = 1.0;
    let mut k = kstar;
    loop {
        k += 1.0;
        t *= q / (k * (v + k));
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
    }
    // walk downward
    let mut t = 1.0;
    let mut k = kstar;
    while k > 0.0 {
        t *= k * (v + k) / q;
        sum += t;
        if t < 1e-18 * sum {
            break;
        }
        k -= 1.0;
    }
    v * (0.5 * z).ln() + peak + sum.ln()
}

/// Hankel large-argument branch (accurate when `v^2` is small next to `z`).
pub fn ln_bessel_i_hankel(v: f64, z: f64) -> f64 {
    let mu = 4.0 * v * v;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * z);
        if term.abs() >= last {
            break;
        }
        sum += term;
        last = term.abs();
        if last < 1e-17 * sum.abs() {
            break;
        }
    }
    z - 0.5 * (2.0 * std::f64::consts::PI * z).ln() + sum.ln()
}

/// Coefficient of `z^{-q}` in the Hankel expansion of `e^{-z} sqrt(2 pi z) I_v(z)`.
pub fn hankel_coefficient(v: f64, q: usize) -> f64 {
    let mu = 4.0 * v * v;
    let mut c = 1.0;
    for k in 1..=q {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        c *= -(mu - odd * odd) / (8.0 * kf);
    }
    c
}

/// Truncated large-argument approximation of `e^{-z} I_v(z)` keeping the
/// first `terms + 1` terms of the Hankel expansion.
///
/// Refuses arguments below 10, where the truncated expansion is unreliable.
pub fn bessel_i_asymptotic(v: f64, z: f64, terms: usize) -> Result<f64> {
    check(v, z)?;
    if z < 10.0 {
        return Err(domain("z", z, "truncated Hankel expansion needs z >= 10"));
    }
    let s: f64 = (0..=terms)
        .map(|q| hankel_coefficient(v, q) * z.powi(-(q as i32)))
        .sum();
    Ok(s / (2.0 * std::f64::consts::PI * z).sqrt())
}

/// `ln(e^{-z} I_k(z))` for `k = 0..=k_max`.
///
/// Ratios `I_k / I_{k-1}` come from the backward recurrence of the continued
/// fraction, started deep enough that the error of the initial estimate is
/// damped below rounding; the sequence is anchored at `I_0`.
pub fn ln_scaled_bessel_i_sequence(z: f64, k_max: usize) -> Result<Vec<f64>> {
    check(0.0, z)?;
    let mut out = Vec::with_capacity(k_max + 1);
    if z == 0.0 {
        out.push(0.0);
        out.resize(k_max + 1, f64::NEG_INFINITY);
        return Ok(out);
    }
    out.push(ln_bessel_i(0.0, z)? - z);
    if k_max == 0 {
        return Ok(out);
    }
    // the error shrinks by (I_k / I_{k-1})^2 per step, about exp(-(s^2 - k^2) / z)
    let km = k_max as f64;
    let start = ((km * km + 40.0 * z).sqrt().ceil() as usize + 20).max(k_max + 20);
    let s = start as f64;
    let mut r = z / (s - 0.5 + ((s + 0.5) * (s + 0.5) + z * z).sqrt());
    let mut ratios = vec![0.0; k_max + 1];
    for k in (1..start).rev() {
        r = 1.0 / (2.0 * k as f64 / z + r);
        if k <= k_max {
            ratios[k] = r;
        }
    }
    let mut acc = out[0];
    for ratio in &ratios[1..] {
        acc += ratio.ln();
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn frozen_values() {
        assert!(rel(ln_bessel_i(0.0, 30.0).unwrap(), 27.38470143317193584992) < 1e-14);
        assert!(rel(ln_bessel_i(1.0, 5.0).unwrap(), 3.191942030545675463437) < 1e-14);
        assert!(rel(ln_bessel_i(3.0, 2.5).unwrap(), -0.745766809344353446192) < 1e-13);
        assert!(rel(ln_bessel_i(0.0, 700.0).unwrap(), 695.8056999984434490768) < 1e-14);
        assert!(rel(ln_bessel_i(2.0, 1e6).unwrap(), 999992.1733043128122527) < 1e-14);
    }

    #[test]
    fn branches_agree_in_crossover_band() {
        for v in [0.0, 1.0, 2.0, 3.0] {
            let mut z = 40.0;
            while z <= 60.0 {
                let a = ln_bessel_i_series(v, z);
                let b = ln_bessel_i_hankel(v, z);
                assert!(rel(a, b) < 1e-12, "v={v} z={z} {a} {b}");
                z += 0.25;
            }
        }
    }

    #[test]
    fn sequence_matches_direct() {
        for z in [0.3, 4.0, 37.0, 180.0, 5e4] {
            let seq = ln_scaled_bessel_i_sequence(z, 120).unwrap();
            for k in [0usize, 1, 2, 7, 30, 119, 120] {
                let direct = ln_bessel_i(k as f64, z).unwrap() - z;
                assert!(
                    (seq[k] - direct).abs() < 1e-11 * direct.abs().max(1.0),
                    "z={z} k={k} {} {}",
                    seq[k],
                    direct
                );
            }
        }
    }

    #[test]
    fn asymptotic_domain() {
        assert!(bessel_i_asymptotic(0.0, 9.9, 3).is_err());
        let a = bessel_i_asymptotic(1.0, 80.0, 6).unwrap();
        let b = bessel_i_scaled(1.0, 80.0).unwrap();
        assert!(rel(a, b) < 1e-9);
    }
}
