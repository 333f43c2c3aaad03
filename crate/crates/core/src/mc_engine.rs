//! Parallel Monte Carlo estimation of the symbol error rate.
//!
//! Trials are cut into chunks of [`CHUNK_TRIALS`]. Chunk `c` of a point draws
//! its main samples from ChaCha8 stream `2c` and its phase-noise angles from
//! stream `2c + 1`, both keyed by the point seed, so the tallies do not depend
//! on how chunks are spread over workers. Error counts are reduced by integer
//! addition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::analytic_ser::SerScenario;
use crate::channel::{ChannelRealization, ReceivedBlock, sample_channel_into, transmit_into};
use crate::detectors::{
    DetectorKind, SideInformation, detect, heuristic_statistic, rotate_by_von_mises, von_mises_concentration,
};
use crate::error::{Error, Result, domain};
use crate::specfun::QuadratureRule;

/// Trials per independently seeded chunk.
pub const CHUNK_TRIALS: u64 = 1 << 16;
/// Smallest trial count for which a confidence interval is reported.
pub const MIN_TRIALS: u64 = 1_000;
/// Phase-noise level that maps to a circular variance of one.
pub const PHASE_NOISE_FULL_SCALE: f64 = 50.0;

/// Simulation budget and randomness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub confidence_level: f64,
    /// Oscillator phase-noise level; divided by [`PHASE_NOISE_FULL_SCALE`]
    /// it is the circular variance of the von Mises phase error.
    pub phase_noise_level: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            trials: 1_000_000,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            confidence_level: 0.95,
            phase_noise_level: 0.0,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < MIN_TRIALS {
            return Err(Error::Config(format!(
                "trials = {} is below the minimum of {MIN_TRIALS}",
                self.trials
            )));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if !(self.confidence_level > 0.0 && self.confidence_level < 1.0) {
            return Err(Error::Config(format!(
                "confidence_level = {} must lie in (0, 1)",
                self.confidence_level
            )));
        }
        if !(0.0..=PHASE_NOISE_FULL_SCALE).contains(&self.phase_noise_level) {
            return Err(Error::Config(format!(
                "phase_noise_level = {} must lie in [0, {PHASE_NOISE_FULL_SCALE}]",
                self.phase_noise_level
            )));
        }
        Ok(())
    }

    /// Circular variance of the simulated phase error.
    pub fn phase_noise_variance(&self) -> f64 {
        self.phase_noise_level / PHASE_NOISE_FULL_SCALE
    }
}

/// One simulated operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerPoint {
    pub snr_db: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub errors: u64,
    pub trials: u64,
    /// Trials discarded because the channel was degenerate for the detector.
    pub rejected: u64,
    pub seed: u64,
}

impl SerPoint {
    /// Binomial standard error of [`SerPoint::ser`].
    pub fn standard_error(&self) -> f64 {
        (self.ser * (1.0 - self.ser) / self.trials as f64).sqrt()
    }

    /// Whether `value` lies within `k` standard errors of the estimate. With
    /// no errors observed the band is widened to the rule-of-three bound.
    pub fn within_se(&self, value: f64, k: f64) -> bool {
        let se = self.standard_error().max(1.0 / self.trials as f64);
        (value - self.ser).abs() <= k * se
    }
}

/// A simulated SER curve of one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerCurve {
    pub detector: DetectorKind,
    pub order: usize,
    pub branches: usize,
    pub k_factor: f64,
    pub omega: f64,
    pub phase_noise_level: f64,
    pub points: Vec<SerPoint>,
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, confidence_level: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * confidence_level);
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Murmur3 finalizer, used to spread point indices over the seed space.
pub fn fmix64(mut k: u64) -> u64 {
    k ^= k >> 33;
    k = k.wrapping_mul(0xff51_afd7_ed55_8ccd);
    k ^= k >> 33;
    k = k.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    k ^= k >> 33;
    k
}

/// Seed of point `index` of a curve started from `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ fmix64(index as u64)
}

#[derive(Default, Clone, Copy)]
struct Tally {
    errors: u64,
    trials: u64,
    rejected: u64,
}

/// Estimates the SER of detector `kind` at the operating point of `sc`.
///
/// The seed of `mc` keys every random stream; the result is identical for
/// any number of workers.
pub fn run_point(kind: DetectorKind, sc: &SerScenario, mc: &McConfig) -> Result<SerPoint> {
    mc.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| simulate(kind, sc, mc, mc.seed))
}

fn simulate(kind: DetectorKind, sc: &SerScenario, mc: &McConfig, seed: u64) -> Result<SerPoint> {
    let kappa = von_mises_concentration(mc.phase_noise_variance())?;
    let rule = QuadratureRule::gauss_chebyshev(sc.series.quad_order);
    let chunks = mc.trials.div_ceil(CHUNK_TRIALS);
    let tallies: Vec<Result<Tally>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_TRIALS.min(mc.trials - c * CHUNK_TRIALS);
            run_chunk(kind, sc, &rule, kappa, seed, c, n)
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        let t = t?;
        total.errors += t.errors;
        total.trials += t.trials;
        total.rejected += t.rejected;
    }
    if total.rejected > 0 {
        log::warn!("{kind}: {} trials rejected for degenerate channels", total.rejected);
    }
    if total.trials == 0 {
        return Err(Error::DegenerateChannel(0.0));
    }
    let (ci_low, ci_high) = wilson_interval(total.errors, total.trials, mc.confidence_level);
    Ok(SerPoint {
        snr_db: 10.0 * sc.snr_ratio().log10(),
        ser: total.errors as f64 / total.trials as f64,
        ci_low,
        ci_high,
        errors: total.errors,
        trials: total.trials,
        rejected: total.rejected,
        seed,
    })
}

fn run_chunk(
    kind: DetectorKind,
    sc: &SerScenario,
    rule: &QuadratureRule,
    kappa: f64,
    seed: u64,
    chunk: u64,
    trials: u64,
) -> Result<Tally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * chunk);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    noise_rng.set_stream(2 * chunk + 1);
    let order = sc.constellation.order();
    let mut ch = ChannelRealization::default();
    let mut block = ReceivedBlock::default();
    let mut tally = Tally::default();
    for _ in 0..trials {
        let m = rng.random_range(0..order);
        sample_channel_into(&sc.params, sc.branches, &mut rng, &mut ch);
        transmit_into(&sc.constellation, m, &ch, sc.sigma_n_sq, &mut rng, &mut block)?;
        rotate_by_von_mises(&mut block, kappa, &mut noise_rng);
        let side = SideInformation {
            constellation: &sc.constellation,
            channel: &ch,
            params: &sc.params,
            sigma_n_sq: sc.sigma_n_sq,
            rule,
        };
        match detect(kind, &block, &side) {
            Ok(decided) => {
                tally.trials += 1;
                if decided != m {
                    tally.errors += 1;
                }
            }
            Err(Error::DegenerateChannel(_)) => tally.rejected += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(tally)
}

/// Simulates detector `kind` over `snr_grid`, point `i` seeded with
/// [`point_seed`]`(mc.seed, i)`.
pub fn run_curve(
    kind: DetectorKind,
    template: &SerScenario,
    snr_grid: &[f64],
    mc: &McConfig,
) -> Result<SerCurve> {
    mc.validate()?;
    if snr_grid.is_empty() {
        return Err(Error::Config("SNR grid is empty".into()));
    }
    if let Some(w) = snr_grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(domain("snr_db", w[1], "SNR grid must be strictly increasing"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mc.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut points = Vec::with_capacity(snr_grid.len());
    for (i, &snr) in snr_grid.iter().enumerate() {
        let sc = template.with_snr_db(snr)?;
        let mut p = pool.install(|| simulate(kind, &sc, mc, point_seed(mc.seed, i)))?;
        p.snr_db = snr;
        points.push(p);
    }
    Ok(SerCurve {
        detector: kind,
        order: template.constellation.order(),
        branches: template.branches,
        k_factor: template.params.k_factor,
        omega: template.params.omega,
        phase_noise_level: mc.phase_noise_level,
        points,
    })
}

/// Draws `samples` values of the heuristic statistic `zeta` with symbol `m`
/// sent, chunked and seeded like [`run_point`]. Degenerate channels are
/// redrawn.
pub fn sample_statistic(
    sc: &SerScenario,
    m: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    sc.constellation.check_index(m)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let chunks = samples.div_ceil(CHUNK_TRIALS);
    let parts: Vec<Result<Vec<f64>>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let n = CHUNK_TRIALS.min(samples - c * CHUNK_TRIALS);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(2 * c);
                let mut ch = ChannelRealization::default();
                let mut block = ReceivedBlock::default();
                let mut out = Vec::with_capacity(n as usize);
                while (out.len() as u64) < n {
                    sample_channel_into(&sc.params, sc.branches, &mut rng, &mut ch);
                    transmit_into(&sc.constellation, m, &ch, sc.sigma_n_sq, &mut rng, &mut block)?;
                    match heuristic_statistic(&block, &ch.alpha) {
                        Ok(z) => out.push(z),
                        Err(Error::DegenerateChannel(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                Ok(out)
            })
            .collect()
    });
    let mut all = Vec::with_capacity(samples as usize);
    for p in parts {
        all.extend(p?);
    }
    Ok(all)
}

/// Normalized histogram of `values` on bins centred at the evenly spaced
/// `centres`; the first bin is clipped at zero. Values outside every bin
/// still count towards the normalization.
pub fn density_histogram(values: &[f64], centres: &[f64]) -> Vec<f64> {
    if centres.is_empty() || values.is_empty() {
        return vec![0.0; centres.len()];
    }
    let step = if centres.len() > 1 { centres[1] - centres[0] } else { 1.0 };
    let low = (centres[0] - 0.5 * step).max(0.0);
    let mut counts = vec![0u64; centres.len()];
    for &v in values {
        if v < low {
            continue;
        }
        let i = ((v - centres[0]) / step + 0.5).floor();
        if i >= 0.0 && (i as usize) < centres.len() {
            counts[i as usize] += 1;
        }
    }
    let total = values.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let left = if i == 0 { low } else { centres[i] - 0.5 * step };
            let width = centres[i] + 0.5 * step - left;
            c as f64 / (total * width)
        })
        .collect()
}
