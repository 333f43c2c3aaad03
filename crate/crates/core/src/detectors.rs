//! Symbol detectors, from fully coherent down to envelope-only.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, MaskConstellation, ReceivedBlock, RicianParams};
use crate::error::{Error, Result, domain};
use crate::specfun::QuadratureRule;
use crate::specfun::bessel::ln_bessel_i;
use crate::specfun::quadrature::ln_mean_exp_cos;

/// The six receivers, ordered by how much channel knowledge they use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Knows the complex gains.
    Coherent,
    /// Knows only the fading statistics.
    Noncoherent,
    /// Knows the envelopes, the Rician factor and the line-of-sight phase.
    AcNearOptimum,
    /// Knows the envelopes; uniform-phase likelihood with a Bessel kernel.
    AcSuboptBessel,
    /// As `AcSuboptBessel` with the Bessel kernel replaced by quadrature.
    AcSuboptQuad,
    /// Knows the envelopes; thresholds the normalized received energy.
    AcHeuristic,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Coherent,
        DetectorKind::Noncoherent,
        DetectorKind::AcNearOptimum,
        DetectorKind::AcSuboptBessel,
        DetectorKind::AcSuboptQuad,
        DetectorKind::AcHeuristic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Coherent => "coherent",
            DetectorKind::Noncoherent => "noncoherent",
            DetectorKind::AcNearOptimum => "ac-near-optimum",
            DetectorKind::AcSuboptBessel => "ac-subopt-bessel",
            DetectorKind::AcSuboptQuad => "ac-subopt-quad",
            DetectorKind::AcHeuristic => "ac-heuristic",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector `{s}`")))
    }
}

/// What a detector computed on the way to its decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionStatistic {
    /// Normalized received energy (heuristic detector only, `NaN` otherwise).
    pub zeta: f64,
    /// Per-hypothesis metric, smaller is better (empty for the threshold detector).
    pub metric_values: Vec<f64>,
}

/// Index of the smallest metric; ties and `NaN` resolve to the lowest index.
fn argmin(metrics: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (i, v) in metrics.enumerate() {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if v < best_val || (i == 0 && v == f64::INFINITY) {
            best = i;
            best_val = v;
        }
    }
    best
}

/// `sum_i |r_i - h_i s|^2` for every hypothesis.
pub fn coherent_metrics(r: &ReceivedBlock, ch: &ChannelRealization, c: &MaskConstellation) -> Vec<f64> {
    c.amplitudes()
        .iter()
        .map(|&s| coherent_metric(r, ch, s))
        .collect()
}

fn coherent_metric(r: &ReceivedBlock, ch: &ChannelRealization, s: f64) -> f64 {
    r.samples
        .iter()
        .enumerate()
        .map(|(i, ri)| (ri - ch.gain(i) * s).norm_sqr())
        .sum()
}

pub fn detect_coherent(r: &ReceivedBlock, ch: &ChannelRealization, c: &MaskConstellation) -> usize {
    argmin(c.amplitudes().iter().map(|&s| coherent_metric(r, ch, s)))
}

/// Gaussian log-likelihood metric of the statistics-only receiver.
pub fn noncoherent_metrics(
    r: &ReceivedBlock,
    p: &RicianParams,
    sigma_n_sq: f64,
    c: &MaskConstellation,
) -> Vec<f64> {
    c.amplitudes()
        .iter()
        .map(|&s| noncoherent_metric(r, p.mean_gain(), p.diffuse_variance(), sigma_n_sq, s))
        .collect()
}

fn noncoherent_metric(r: &ReceivedBlock, mean: Complex64, var_h: f64, sigma_n_sq: f64, s: f64) -> f64 {
    let var = 2.0 * (var_h * s * s + sigma_n_sq);
    let dist: f64 = r.samples.iter().map(|ri| (ri - mean * s).norm_sqr()).sum();
    if var == 0.0 {
        return if dist == 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    r.samples.len() as f64 * (PI * var).ln() + dist / var
}

pub fn detect_noncoherent(
    r: &ReceivedBlock,
    p: &RicianParams,
    sigma_n_sq: f64,
    c: &MaskConstellation,
) -> usize {
    let mean = p.mean_gain();
    let var_h = p.diffuse_variance();
    argmin(
        c.amplitudes()
            .iter()
            .map(|&s| noncoherent_metric(r, mean, var_h, sigma_n_sq, s)),
    )
}

/// `ln` of the phase-averaged likelihood factor of one branch, by
/// Gauss-Chebyshev quadrature around the peak of the integrand.
///
/// The integrand `exp(X cos t + Y sin t)` with
/// `X = 2 sqrt(K(K+1)) cos(phi) + alpha s |r| cos(theta_r) / sigma^2` and
/// `Y` the matching sine combination peaks at `phi* = atan2(Y, X)`; shifting
/// the nodes there turns the exponent into `hypot(X, Y) cos t_l`.
#[allow(clippy::too_many_arguments)]
pub fn i_theta_gc(
    alpha_i: f64,
    s: f64,
    r_abs: f64,
    theta_r: f64,
    p: &RicianParams,
    sigma_n_sq: f64,
    rule: &QuadratureRule,
) -> f64 {
    let kbar = p.phase_concentration();
    let z = alpha_i * s * r_abs;
    let x = kbar * p.los_phase.cos() + theta_r.cos() / sigma_n_sq * z;
    let y = kbar * p.los_phase.sin() + theta_r.sin() / sigma_n_sq * z;
    let peak = y.atan2(x);
    let amplitude = x * peak.cos() + y * peak.sin();
    ln_mean_exp_cos(&rule.nodes, amplitude)
}

pub fn near_optimum_metrics(
    r: &ReceivedBlock,
    alpha: &[f64],
    p: &RicianParams,
    sigma_n_sq: f64,
    c: &MaskConstellation,
    rule: &QuadratureRule,
) -> Vec<f64> {
    c.amplitudes()
        .iter()
        .map(|&s| near_optimum_metric(r, alpha, p, sigma_n_sq, s, rule))
        .collect()
}

fn near_optimum_metric(
    r: &ReceivedBlock,
    alpha: &[f64],
    p: &RicianParams,
    sigma_n_sq: f64,
    s: f64,
    rule: &QuadratureRule,
) -> f64 {
    if sigma_n_sq == 0.0 {
        // noiseless limit of sigma^2 times the metric
        return envelope_limit_metric(r, alpha, s);
    }
    if s == 0.0 {
        let ln_i0 = ln_bessel_i(0.0, p.phase_concentration()).unwrap_or(0.0);
        return -(alpha.len() as f64) * ln_i0;
    }
    r.samples
        .iter()
        .zip(alpha)
        .map(|(ri, &a)| {
            a * a * s * s / (2.0 * sigma_n_sq)
                - i_theta_gc(a, s, ri.norm(), ri.arg(), p, sigma_n_sq, rule)
        })
        .sum()
}

pub fn detect_ac_near_optimum(
    r: &ReceivedBlock,
    alpha: &[f64],
    p: &RicianParams,
    sigma_n_sq: f64,
    c: &MaskConstellation,
    rule: &QuadratureRule,
) -> usize {
    argmin(
        c.amplitudes()
            .iter()
            .map(|&s| near_optimum_metric(r, alpha, p, sigma_n_sq, s, rule)),
    )
}

/// `sum_i alpha_i^2 s^2 / 2 - alpha_i s |r_i|`: the envelope metrics times
/// `sigma^2` as the noise vanishes.
fn envelope_limit_metric(r: &ReceivedBlock, alpha: &[f64], s: f64) -> f64 {
    r.samples
        .iter()
        .zip(alpha)
        .map(|(ri, &a)| 0.5 * a * a * s * s - a * s * ri.norm())
        .sum()
}

pub fn subopt_bessel_metrics(
    r: &ReceivedBlock,
    alpha: &[f64],
    sigma_n_sq: f64,
    c: &MaskConstellation,
) -> Vec<f64> {
    c.amplitudes()
        .iter()
        .map(|&s| subopt_metric(r, alpha, sigma_n_sq, s, None))
        .collect()
}

pub fn subopt_quad_metrics(
    r: &ReceivedBlock,
    alpha: &[f64],
    sigma_n_sq: f64,
    c: &MaskConstellation,
    rule: &QuadratureRule,
) -> Vec<f64> {
    c.amplitudes()
        .iter()
        .map(|&s| subopt_metric(r, alpha, sigma_n_sq, s, Some(rule)))
        .collect()
}

fn subopt_metric(
    r: &ReceivedBlock,
    alpha: &[f64],
    sigma_n_sq: f64,
    s: f64,
    rule: Option<&QuadratureRule>,
) -> f64 {
    if sigma_n_sq == 0.0 {
        return envelope_limit_metric(r, alpha, s);
    }
    r.samples
        .iter()
        .zip(alpha)
        .map(|(ri, &a)| {
            let z = a * s * ri.norm() / sigma_n_sq;
            let ln_kernel = match rule {
                Some(rule) => ln_mean_exp_cos(&rule.nodes, z),
                None => ln_bessel_i(0.0, z).unwrap_or(f64::NAN),
            };
            a * a * s * s / (2.0 * sigma_n_sq) - ln_kernel
        })
        .sum()
}

pub fn detect_ac_suboptimum_bessel(
    r: &ReceivedBlock,
    alpha: &[f64],
    sigma_n_sq: f64,
    c: &MaskConstellation,
) -> usize {
    argmin(
        c.amplitudes()
            .iter()
            .map(|&s| subopt_metric(r, alpha, sigma_n_sq, s, None)),
    )
}

pub fn detect_ac_suboptimum_quad(
    r: &ReceivedBlock,
    alpha: &[f64],
    sigma_n_sq: f64,
    c: &MaskConstellation,
    rule: &QuadratureRule,
) -> usize {
    argmin(
        c.amplitudes()
            .iter()
            .map(|&s| subopt_metric(r, alpha, sigma_n_sq, s, Some(rule))),
    )
}

/// `zeta = sum |r_i|^2 / sum alpha_i^2`.
pub fn heuristic_statistic(r: &ReceivedBlock, alpha: &[f64]) -> Result<f64> {
    let x: f64 = alpha.iter().map(|a| a * a).sum();
    if !(x >= 1e-30) {
        return Err(Error::DegenerateChannel(x));
    }
    let e: f64 = r.samples.iter().map(|ri| ri.norm_sqr()).sum();
    Ok(e / x)
}

/// Threshold rule: the number of thresholds strictly below `zeta`, so a
/// statistic sitting on a threshold goes to the lower symbol.
pub fn threshold_decision(zeta: f64, thresholds: &[f64]) -> usize {
    thresholds.partition_point(|&t| t < zeta)
}

pub fn detect_ac_heuristic(r: &ReceivedBlock, alpha: &[f64], c: &MaskConstellation) -> Result<usize> {
    Ok(threshold_decision(heuristic_statistic(r, alpha)?, c.thresholds()))
}

/// Runs any detector and reports its internal statistic alongside the decision.
pub fn decision_statistic(
    kind: DetectorKind,
    r: &ReceivedBlock,
    side: &SideInformation<'_>,
) -> Result<(usize, DecisionStatistic)> {
    let c = side.constellation;
    let metrics = match kind {
        DetectorKind::AcHeuristic => {
            let zeta = heuristic_statistic(r, &side.channel.alpha)?;
            return Ok((
                threshold_decision(zeta, c.thresholds()),
                DecisionStatistic {
                    zeta,
                    metric_values: Vec::new(),
                },
            ));
        }
        DetectorKind::Coherent => coherent_metrics(r, side.channel, c),
        DetectorKind::Noncoherent => noncoherent_metrics(r, side.params, side.sigma_n_sq, c),
        DetectorKind::AcNearOptimum => near_optimum_metrics(
            r,
            &side.channel.alpha,
            side.params,
            side.sigma_n_sq,
            c,
            side.rule,
        ),
        DetectorKind::AcSuboptBessel => {
            subopt_bessel_metrics(r, &side.channel.alpha, side.sigma_n_sq, c)
        }
        DetectorKind::AcSuboptQuad => {
            subopt_quad_metrics(r, &side.channel.alpha, side.sigma_n_sq, c, side.rule)
        }
    };
    let m = argmin(metrics.iter().copied());
    Ok((
        m,
        DecisionStatistic {
            zeta: f64::NAN,
            metric_values: metrics,
        },
    ))
}

/// Everything a detector may be told about the link. Each detector reads
/// only the part it is entitled to.
#[derive(Debug, Clone, Copy)]
pub struct SideInformation<'a> {
    pub constellation: &'a MaskConstellation,
    pub channel: &'a ChannelRealization,
    pub params: &'a RicianParams,
    pub sigma_n_sq: f64,
    pub rule: &'a QuadratureRule,
}

/// Dispatches to the detector of `kind`.
pub fn detect(kind: DetectorKind, r: &ReceivedBlock, side: &SideInformation<'_>) -> Result<usize> {
    let c = side.constellation;
    let alpha = &side.channel.alpha;
    Ok(match kind {
        DetectorKind::Coherent => detect_coherent(r, side.channel, c),
        DetectorKind::Noncoherent => detect_noncoherent(r, side.params, side.sigma_n_sq, c),
        DetectorKind::AcNearOptimum => {
            detect_ac_near_optimum(r, alpha, side.params, side.sigma_n_sq, c, side.rule)
        }
        DetectorKind::AcSuboptBessel => detect_ac_suboptimum_bessel(r, alpha, side.sigma_n_sq, c),
        DetectorKind::AcSuboptQuad => {
            detect_ac_suboptimum_quad(r, alpha, side.sigma_n_sq, c, side.rule)
        }
        DetectorKind::AcHeuristic => detect_ac_heuristic(r, alpha, c)?,
    })
}

/// Mean resultant length `I_1(k) / I_0(k)` of a von Mises law.
pub fn von_mises_mean_resultant(kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let l0 = ln_bessel_i(0.0, kappa).unwrap_or(f64::NAN);
    let l1 = ln_bessel_i(1.0, kappa).unwrap_or(f64::NAN);
    (l1 - l0).exp()
}

/// Concentration whose circular variance `1 - I_1(k)/I_0(k)` equals the target.
///
/// Returns infinity for zero variance and zero for variance one.
pub fn von_mises_concentration(circular_variance: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&circular_variance) {
        return Err(domain(
            "circular_variance",
            circular_variance,
            "must lie in [0, 1]",
        ));
    }
    if circular_variance == 0.0 {
        return Ok(f64::INFINITY);
    }
    if circular_variance == 1.0 {
        return Ok(0.0);
    }
    // the circular variance falls monotonically in kappa; bisect on ln kappa
    let target = 1.0 - circular_variance;
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if von_mises_mean_resultant(mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Draws from a zero-mean von Mises law (Best and Fisher's rejection sampler).
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa == 0.0 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    if kappa > 1e6 {
        // wrapped-normal limit, exact to the precision of the rejection test
        let g: f64 = rng.sample(rand_distr::StandardNormal);
        return g / kappa.sqrt();
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let angle = f.clamp(-1.0, 1.0).acos();
            return if u3 < 0.5 { -angle } else { angle };
        }
    }
}

/// Rotates each sample by an independent von Mises phase error whose
/// circular variance is `circular_variance`.
pub fn apply_phase_noise<R: Rng + ?Sized>(
    r: &ReceivedBlock,
    circular_variance: f64,
    rng: &mut R,
) -> Result<ReceivedBlock> {
    let mut out = r.clone();
    let kappa = von_mises_concentration(circular_variance)?;
    rotate_by_von_mises(&mut out, kappa, rng);
    Ok(out)
}

/// In-place rotation with a precomputed concentration; infinite concentration is a no-op.
pub fn rotate_by_von_mises<R: Rng + ?Sized>(r: &mut ReceivedBlock, kappa: f64, rng: &mut R) {
    if kappa.is_infinite() {
        return;
    }
    for ri in r.samples.iter_mut() {
        let psi = sample_von_mises(kappa, rng);
        *ri *= Complex64::from_polar(1.0, psi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn block(v: &[(f64, f64)]) -> ReceivedBlock {
        ReceivedBlock {
            samples: v.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
        }
    }

    #[test]
    fn threshold_ties_go_low() {
        let c = MaskConstellation::new(2).unwrap();
        assert_eq!(threshold_decision(1.0, c.thresholds()), 0);
        assert_eq!(threshold_decision(1.0 + 1e-15, c.thresholds()), 1);
        assert_eq!(threshold_decision(0.0, c.thresholds()), 0);
    }

    #[test]
    fn i_theta_reduces_to_bessel() {
        let rule = QuadratureRule::gauss_chebyshev(64);
        let p = RicianParams::new(0.0, 1.0).unwrap();
        assert!(i_theta_gc(1.0, 0.0, 0.0, 0.0, &p, 1.0, &rule).abs() < 1e-15);
        let v = i_theta_gc(1.0, 1.0, 2.0, 0.4, &p, 1.0, &rule);
        assert!((v - ln_bessel_i(0.0, 2.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn subopt_zero_hypothesis_is_zero() {
        let c = MaskConstellation::new(4).unwrap();
        let r = block(&[(0.3, -0.2), (1.0, 0.1)]);
        let m = subopt_bessel_metrics(&r, &[0.5, 1.2], 0.01, &c);
        assert_eq!(m[0], 0.0);
    }

    #[test]
    fn noncoherent_picks_top_for_huge_signal() {
        let c = MaskConstellation::new(2).unwrap();
        let p = RicianParams::new(4.0, 1.0).unwrap();
        let r = block(&[(1e3, 0.0)]);
        assert_eq!(detect_noncoherent(&r, &p, 0.01, &c), 1);
    }

    #[test]
    fn phase_noise_identity_and_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = block(&[(0.3, -0.2), (1.0, 0.1)]);
        assert_eq!(apply_phase_noise(&r, 0.0, &mut rng).unwrap(), r);
        let rotated = apply_phase_noise(&r, 0.2, &mut rng).unwrap();
        for (a, b) in r.samples.iter().zip(&rotated.samples) {
            assert!((a.norm() - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn concentration_inverts_circular_variance() {
        for v in [1e-4, 0.06, 0.2, 0.9, 0.999] {
            let k = von_mises_concentration(v).unwrap();
            assert!((1.0 - von_mises_mean_resultant(k) - v).abs() < 1e-12);
        }
        assert!(von_mises_concentration(1.5).is_err());
    }

    #[test]
    fn parse_names() {
        for k in DetectorKind::ALL {
            assert_eq!(k.name().parse::<DetectorKind>().unwrap(), k);
        }
        assert!("ac-h".parse::<DetectorKind>().is_err());
    }
}
