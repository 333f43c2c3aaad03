//! Confluent and Gauss hypergeometric functions, generalized Laguerre polynomials.

use crate::error::{Error, Result, domain};

const MAX_TERMS: usize = 200_000;

/// Kummer's `1F1(a; b; z)`.
///
/// Sums the power series directly for `z >= 0` or small `|z|`, otherwise
/// applies Kummer's transformation `1F1(a;b;z) = e^z 1F1(b-a;b;-z)`.
pub fn kummer_1f1(a: f64, b: f64, z: f64) -> Result<f64> {
    check_b(b)?;
    if z >= 0.0 || z > -8.0 || is_nonpositive_integer(a) {
        kummer_1f1_series(a, b, z)
    } else {
        Ok(z.exp() * kummer_1f1_series(b - a, b, -z)?)
    }
}

fn check_b(b: f64) -> Result<()> {
    if is_nonpositive_integer(b) || !b.is_finite() {
        return Err(domain("b", b, "lower parameter must not be a non-positive integer"));
    }
    Ok(())
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// Raw power series of `1F1(a; b; z)` with Neumaier-compensated summation.
pub fn kummer_1f1_series(a: f64, b: f64, z: f64) -> Result<f64> {
    check_b(b)?;
    let mut sum = super::series::NeumaierSum::new();
    let mut term = 1.0;
    sum.add(term);
    for j in 0..MAX_TERMS {
        let jf = j as f64;
        term *= (a + jf) / (b + jf) * z / (jf + 1.0);
        sum.add(term);
        if term == 0.0 {
            return Ok(sum.value());
        }
        // past the peak once the term ratio drops below one
        if jf > z.abs() && term.abs() <= 1e-17 * sum.value().abs() {
            return Ok(sum.value());
        }
    }
    Err(Error::NonConvergence {
        what: "1F1 power series",
        terms: MAX_TERMS,
    })
}

/// `1F1(a0 + j; b; z)` for `j = 0..count` using the forward contiguous
/// recurrence in the upper parameter, which is stable for `z > 0`.
pub fn kummer_1f1_upper_sequence(a0: f64, b: f64, z: f64, count: usize) -> Result<Vec<f64>> {
    if !(z >= 0.0) {
        return Err(domain("z", z, "forward recurrence needs z >= 0"));
    }
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    out.push(kummer_1f1(a0, b, z)?);
    if count == 1 {
        return Ok(out);
    }
    out.push(kummer_1f1(a0 + 1.0, b, z)?);
    for j in 1..count - 1 {
        let a = a0 + j as f64;
        let next = ((2.0 * a - b + z) * out[j] + (b - a) * out[j - 1]) / a;
        out.push(next);
    }
    Ok(out)
}

/// Gauss `2F1(a, b; c; z)` for `|z| < 1` by its power series.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(domain("z", z, "series needs |z| < 1"));
    }
    if is_nonpositive_integer(c) {
        return Err(domain("c", c, "lower parameter must not be a non-positive integer"));
    }
    let mut sum = super::series::NeumaierSum::new();
    let mut term = 1.0;
    sum.add(term);
    for j in 0..MAX_TERMS * 10 {
        let jf = j as f64;
        term *= (a + jf) * (b + jf) / ((c + jf) * (jf + 1.0)) * z;
        sum.add(term);
        if term == 0.0 || (jf > 10.0 && term.abs() <= 1e-17 * sum.value().abs()) {
            return Ok(sum.value());
        }
    }
    Err(Error::NonConvergence {
        what: "2F1 power series",
        terms: MAX_TERMS * 10,
    })
}

/// Generalized Laguerre polynomial `L_n^{(alpha)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
