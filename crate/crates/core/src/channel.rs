//! Constellation, Rician channel model and the received-signal model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erfc;

use crate::error::{Error, Result, domain};
use crate::specfun::ln_bessel_i;

/// Unipolar M-ary ASK with uniform spacing and unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskConstellation {
    delta: f64,
    amplitudes: Vec<f64>,
    energies: Vec<f64>,
    thresholds: Vec<f64>,
}

impl MaskConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidOrder(order));
        }
        let m = order as f64;
        let delta_sq = 6.0 / ((2.0 * m - 1.0) * (m - 1.0));
        let delta = delta_sq.sqrt();
        let amplitudes: Vec<f64> = (0..order).map(|i| i as f64 * delta).collect();
        // squared from the exact spacing so that E_m = m^2 delta^2 carries no extra rounding
        let energies: Vec<f64> = (0..order).map(|i| (i * i) as f64 * delta_sq).collect();
        let thresholds = energies.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(MaskConstellation {
            delta,
            amplitudes,
            energies,
            thresholds,
        })
    }

    pub fn order(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Decision thresholds on the energy axis; entry `m` separates `m` and `m + 1`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn amplitude(&self, m: usize) -> Result<f64> {
        self.check_index(m)?;
        Ok(self.amplitudes[m])
    }

    pub fn energy(&self, m: usize) -> Result<f64> {
        self.check_index(m)?;
        Ok(self.energies[m])
    }

    pub fn check_index(&self, m: usize) -> Result<()> {
        if m >= self.order() {
            Err(Error::IndexOutOfRange {
                index: m,
                order: self.order(),
            })
        } else {
            Ok(())
        }
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.order() as f64
    }
}

/// Shorthand for [`MaskConstellation::new`].
pub fn build_constellation(order: usize) -> Result<MaskConstellation> {
    MaskConstellation::new(order)
}

/// Rician fading parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    pub k_factor: f64,
    pub omega: f64,
    pub los_phase: f64,
}

impl RicianParams {
    pub fn new(k_factor: f64, omega: f64) -> Result<Self> {
        Self::with_phase(k_factor, omega, 0.0)
    }

    pub fn with_phase(k_factor: f64, omega: f64, los_phase: f64) -> Result<Self> {
        if !(k_factor >= 0.0) || !k_factor.is_finite() {
            return Err(domain("K", k_factor, "Rician factor must be finite and >= 0"));
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(domain("omega", omega, "channel power must be positive"));
        }
        Ok(RicianParams {
            k_factor,
            omega,
            los_phase,
        })
    }

    /// Magnitude of the line-of-sight mean.
    pub fn mean_amplitude(&self) -> f64 {
        (self.omega * self.k_factor / (self.k_factor + 1.0)).sqrt()
    }

    /// Diffuse variance per real dimension.
    pub fn diffuse_variance(&self) -> f64 {
        self.omega / (2.0 * (self.k_factor + 1.0))
    }

    /// Complex line-of-sight mean.
    pub fn mean_gain(&self) -> Complex64 {
        Complex64::from_polar(self.mean_amplitude(), self.los_phase)
    }

    /// Concentration `2 sqrt(K (K + 1))` of the von Mises phase approximation.
    pub fn phase_concentration(&self) -> f64 {
        2.0 * (self.k_factor * (self.k_factor + 1.0)).sqrt()
    }
}

/// Operating point: average SNR and the resulting noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub snr_db: f64,
    /// Noise variance per real dimension.
    pub sigma_n_sq: f64,
}

impl LinkBudget {
    /// Average SNR `omega * Ps / (2 sigma_n^2)` with symbol energy `Ps`.
    pub fn new(snr_db: f64, omega: f64, symbol_energy: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(domain("snr_db", snr_db, "must be finite"));
        }
        let sigma_n_sq = omega * symbol_energy / (2.0 * 10f64.powf(snr_db / 10.0));
        Ok(LinkBudget { snr_db, sigma_n_sq })
    }

    pub fn unit(snr_db: f64) -> Self {
        LinkBudget {
            snr_db,
            sigma_n_sq: 0.5 * 10f64.powf(-snr_db / 10.0),
        }
    }
}

/// Envelopes and phases of the `N` branch gains.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelRealization {
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
}

impl ChannelRealization {
    pub fn branches(&self) -> usize {
        self.alpha.len()
    }

    pub fn gain(&self, i: usize) -> Complex64 {
        Complex64::from_polar(self.alpha[i], self.theta[i])
    }

    pub fn sum_sq_amplitude(&self) -> f64 {
        self.alpha.iter().map(|a| a * a).sum()
    }
}

/// One received block, one complex sample per branch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReceivedBlock {
    pub samples: Vec<Complex64>,
}

/// Draws `h_i ~ CN(mu_h e^{j phi}, 2 sigma_h^2)` independently for `branches` antennas.
pub fn sample_channel<R: Rng + ?Sized>(
    p: &RicianParams,
    branches: usize,
    rng: &mut R,
) -> ChannelRealization {
    let mut ch = ChannelRealization::default();
    sample_channel_into(p, branches, rng, &mut ch);
    ch
}

/// As [`sample_channel`], reusing the buffers of `out`.
pub fn sample_channel_into<R: Rng + ?Sized>(
    p: &RicianParams,
    branches: usize,
    rng: &mut R,
    out: &mut ChannelRealization,
) {
    let mean = p.mean_gain();
    let sd = p.diffuse_variance().sqrt();
    out.alpha.clear();
    out.theta.clear();
    for _ in 0..branches {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        let h = mean + Complex64::new(sd * re, sd * im);
        out.alpha.push(h.norm());
        out.theta.push(h.arg());
    }
}

/// `r_i = h_i s_m + n_i` with `n_i ~ CN(0, 2 sigma_n^2)`.
pub fn transmit<R: Rng + ?Sized>(
    c: &MaskConstellation,
    m: usize,
    ch: &ChannelRealization,
    sigma_n_sq: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    let mut block = ReceivedBlock::default();
    transmit_into(c, m, ch, sigma_n_sq, rng, &mut block)?;
    Ok(block)
}

/// As [`transmit`], reusing the buffer of `out`.
pub fn transmit_into<R: Rng + ?Sized>(
    c: &MaskConstellation,
    m: usize,
    ch: &ChannelRealization,
    sigma_n_sq: f64,
    rng: &mut R,
    out: &mut ReceivedBlock,
) -> Result<()> {
    let s = c.amplitude(m)?;
    if !(sigma_n_sq >= 0.0) {
        return Err(domain("sigma_n_sq", sigma_n_sq, "noise variance must be >= 0"));
    }
    let sd = sigma_n_sq.sqrt();
    out.samples.clear();
    for i in 0..ch.branches() {
        let mut r = ch.gain(i) * s;
        if sd > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            r += Complex64::new(sd * re, sd * im);
        }
        out.samples.push(r);
    }
    Ok(())
}

/// Rician envelope density of `alpha = |h|`.
pub fn rician_envelope_pdf(alpha: f64, p: &RicianParams) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    let k = p.k_factor;
    let w = p.omega;
    let arg = 2.0 * alpha * (k * (1.0 + k) / w).sqrt();
    let ln_i0 = ln_bessel_i(0.0, arg).unwrap_or(f64::NAN);
    let ln = (2.0 * (1.0 + k) / w * alpha).ln() - k - (1.0 + k) / w * alpha * alpha + ln_i0;
    ln.exp()
}

fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Rician phase density.
///
/// Follows the published closed form, whose argument is `theta + phi`; the
/// density therefore peaks at `theta = -phi`.
pub fn rician_phase_pdf(theta: f64, p: &RicianParams) -> f64 {
    let mu = p.mean_amplitude();
    let sigma = p.diffuse_variance().sqrt();
    let c = (theta + p.los_phase).cos();
    let s = (theta + p.los_phase).sin();
    let ratio = mu / sigma;
    (-0.5 * ratio * ratio).exp() / (2.0 * PI)
        + ratio * c / (2.0 * PI).sqrt() * (-0.5 * ratio * ratio * s * s).exp() * gaussian_q(-ratio * c)
}

/// Von Mises approximation of the Rician phase density.
pub fn von_mises_phase_pdf(theta: f64, p: &RicianParams) -> f64 {
    let kappa = p.phase_concentration();
    let ln_i0 = ln_bessel_i(0.0, kappa).unwrap_or(f64::NAN);
    (kappa * ((theta - p.los_phase).cos() - 1.0) + kappa - ln_i0).exp() / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constellations() {
        let c = MaskConstellation::new(2).unwrap();
        assert!((c.amplitudes()[1] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.thresholds(), &[1.0]);
        let c = MaskConstellation::new(4).unwrap();
        assert!((c.delta() - (2.0f64 / 7.0).sqrt()).abs() < 1e-15);
        for (e, x) in c.energies().iter().zip([0.0, 2.0 / 7.0, 8.0 / 7.0, 18.0 / 7.0]) {
            assert!((e - x).abs() < 1e-14);
        }
        for m in [2, 4, 8, 16] {
            let c = MaskConstellation::new(m).unwrap();
            assert!((c.mean_energy() - 1.0).abs() < 1e-12);
        }
        assert_eq!(MaskConstellation::new(1), Err(Error::InvalidOrder(1)));
    }

    #[test]
    fn rician_relations() {
        let p = RicianParams::new(4.0, 1.3).unwrap();
        let mu = p.mean_amplitude();
        let s2 = p.diffuse_variance();
        assert!((mu * mu + 2.0 * s2 - 1.3).abs() < 1e-12);
        assert!((mu * mu / (2.0 * s2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn envelope_rayleigh_value() {
        let p = RicianParams::new(0.0, 1.0).unwrap();
        assert!((rician_envelope_pdf(1.0, &p) - 2.0 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn phase_pdfs_uniform_at_zero_k() {
        let p = RicianParams::new(0.0, 1.0).unwrap();
        for t in [-3.0, -1.0, 0.0, 2.0] {
            assert!((rician_phase_pdf(t, &p) - 0.5 / PI).abs() < 1e-15);
            assert!((von_mises_phase_pdf(t, &p) - 0.5 / PI).abs() < 1e-15);
        }
    }

    #[test]
    fn transmit_examples() {
        let c = MaskConstellation::new(2).unwrap();
        let ch = ChannelRealization {
            alpha: vec![1.0],
            theta: vec![0.0],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = transmit(&c, 1, &ch, 0.0, &mut rng).unwrap();
        assert!((r.samples[0] - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        let r = transmit(&c, 0, &ch, 0.0, &mut rng).unwrap();
        assert_eq!(r.samples[0], Complex64::new(0.0, 0.0));
        assert!(transmit(&c, 2, &ch, 0.0, &mut rng).is_err());
    }

    #[test]
    fn snr_definition() {
        let lb = LinkBudget::new(20.0, 1.0, 1.0).unwrap();
        assert!((lb.sigma_n_sq - 0.005).abs() < 1e-15);
        assert_eq!(LinkBudget::unit(20.0).sigma_n_sq, lb.sigma_n_sq);
    }
}
