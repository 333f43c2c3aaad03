//! Series truncation settings and compensated summation.

/// Truncation and accuracy controls shared by the series engines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Hard cap on the outer summation index.
    pub max_terms: usize,
    /// Stop once a new term changes the sum by less than this, relatively.
    pub term_rel_tol: f64,
    /// Number of correction terms kept in the large-argument Bessel expansion.
    pub asymp_order: usize,
    /// Gauss-Chebyshev order for phase averages.
    pub quad_order: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            max_terms: 200,
            term_rel_tol: 1e-12,
            asymp_order: 2,
            quad_order: 64,
        }
    }
}

impl SeriesConfig {
    /// The 20-term truncation used for the published curves.
    pub fn published() -> Self {
        SeriesConfig {
            max_terms: 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.max_terms == 0 || self.asymp_order == 0 || self.quad_order == 0 {
            return Err(crate::Error::Config(
                "series truncation orders must be positive".into(),
            ));
        }
        if !(self.term_rel_tol > 0.0) {
            return Err(crate::Error::Config(
                "series tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `ln(sum_i exp(x_i))`, returning `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + s.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = NeumaierSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp([1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
    }
}
