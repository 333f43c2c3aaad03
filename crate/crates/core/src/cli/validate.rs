//! The self-check battery behind `ac-mask validate`.
//!
//! Each check belongs to one library module and returns a short failure
//! message. Checks run in registry order; the first failure decides the exit
//! code.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic_ser::{
    Engine, SerScenario, cdf_zeta, ser_heuristic_strict, ser_heuristic_with, pdf_x,
};
use crate::channel::{MaskConstellation, sample_channel, transmit};
use crate::detectors::{
    DetectorKind, SideInformation, decision_statistic, rotate_by_von_mises, threshold_decision,
    von_mises_concentration,
};
use crate::error::Error;
use crate::mc_engine::{McConfig, run_point};
use crate::specfun::quadrature::{Tolerance, integrate};
use crate::specfun::{
    QuadratureRule, bessel_i_scaled, gauss_chebyshev, kummer_1f1, marcum_tails,
    hypergeometric::kummer_1f1_upper_sequence,
};

/// Knobs for fault injection from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    /// Added to every threshold in the threshold-equivalence check.
    pub threshold_shift: f64,
}

type CheckFn = fn(&ValidateOptions) -> Result<(), String>;

/// One named check.
#[derive(Clone, Copy)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub run: CheckFn,
}

/// Outcome of one check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub result: Result<(), String>,
    pub elapsed: Duration,
}

/// Module names accepted by `--filter`.
pub const MODULES: [&str; 5] = ["specfun", "channel", "detectors", "analytic_ser", "mc_engine"];

pub fn registry() -> Vec<Check> {
    vec![
        Check { module: "specfun", name: "marcum-reflection-identity", run: marcum_reflection },
        Check { module: "specfun", name: "gauss-chebyshev-bessel-i0", run: chebyshev_bessel },
        Check { module: "specfun", name: "alternating-binomial-identity", run: alternating_identity },
        Check { module: "specfun", name: "kummer-recurrence", run: kummer_recurrence },
        Check { module: "channel", name: "constellation-geometry", run: constellation_geometry },
        Check { module: "channel", name: "fading-energy-moments", run: fading_moments },
        Check { module: "detectors", name: "threshold-equivalence", run: threshold_equivalence },
        Check { module: "detectors", name: "subopt-bessel-vs-quadrature", run: subopt_agreement },
        Check { module: "detectors", name: "phase-noise-rotation", run: phase_noise_rotation },
        Check { module: "analytic_ser", name: "frozen-tail-values", run: frozen_tails },
        Check { module: "analytic_ser", name: "engine-concordance", run: engine_concordance },
        Check { module: "analytic_ser", name: "high-snr-asymptote", run: asymptote },
        Check { module: "mc_engine", name: "worker-invariance", run: worker_invariance },
        Check { module: "mc_engine", name: "simulation-vs-numeric", run: simulation_vs_numeric },
    ]
}

/// Runs the checks of `filter` (all when `None`), in registry order.
pub fn run_checks(filter: Option<&str>, opts: &ValidateOptions) -> Vec<CheckOutcome> {
    registry()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.module == f))
        .map(|c| {
            let t = Instant::now();
            let result = (c.run)(opts);
            CheckOutcome {
                module: c.module,
                name: c.name,
                result,
                elapsed: t.elapsed(),
            }
        })
        .collect()
}

fn fail(msg: impl Into<String>) -> Result<(), String> {
    Err(msg.into())
}

fn err_text(e: Error) -> String {
    e.to_string()
}

/// `Q_N(a,b) + Q_N(b,a) = 1 + exp(-(a^2+b^2)/2) sum_{|k|<N} (a/b)^k I_k(ab)`.
fn marcum_reflection(_: &ValidateOptions) -> Result<(), String> {
    let values = [0.3, 1.0, 2.5, 4.0, 7.5, 12.0, 20.0];
    for n in 1..=4u32 {
        for &a in &values {
            for &b in &values {
                let q_ab = marcum_tails(n, a, b).map_err(err_text)?.upper;
                let q_ba = marcum_tails(n, b, a).map_err(err_text)?.upper;
                let mut rhs = 1.0;
                for k in (1 - n as i32)..(n as i32) {
                    let scaled = bessel_i_scaled(k.unsigned_abs() as f64, a * b).map_err(err_text)?;
                    rhs += (a / b).powi(k) * (-0.5 * (a - b) * (a - b)).exp() * scaled;
                }
                let gap = (q_ab + q_ba - rhs).abs();
                if gap > 1e-9 {
                    return fail(format!("N={n} a={a} b={b}: residual {gap:e}"));
                }
            }
        }
    }
    Ok(())
}

/// `pi I_0(z) = int_{-1}^{1} e^{z x} / sqrt(1 - x^2) dx` by the 64-point rule.
fn chebyshev_bessel(_: &ValidateOptions) -> Result<(), String> {
    let rule = QuadratureRule::gauss_chebyshev(64);
    for z in [0.0, 0.5, 1.0, 5.0, 10.0, 25.0, 40.0] {
        let approx = gauss_chebyshev(&rule, |x| (z * (x - 1.0)).exp());
        let exact = std::f64::consts::PI * bessel_i_scaled(0.0, z).map_err(err_text)?;
        let rel = (approx - exact).abs() / exact;
        if rel > 1e-8 {
            return fail(format!("z={z}: relative error {rel:e}"));
        }
    }
    Ok(())
}

/// `sum_k (-1)^{n+k} C(N+n-1, N+k-1) (n+k+2N-1)! / k! = (n+2N-1)! (n+N)! / (n! N!)`,
/// exactly, for `N <= 4` and `n <= 10`.
fn alternating_identity(_: &ValidateOptions) -> Result<(), String> {
    fn fact(n: u64) -> BigUint {
        (1..=n).fold(BigUint::from(1u32), |a, k| a * k)
    }
    fn binom(n: u64, k: u64) -> BigUint {
        fact(n) / (fact(k) * fact(n - k))
    }
    for big_n in 1..=4u64 {
        for n in 0..=10u64 {
            let (mut plus, mut minus) = (BigUint::from(0u32), BigUint::from(0u32));
            for k in 0..=n {
                let t = binom(big_n + n - 1, big_n + k - 1) * fact(n + k + 2 * big_n - 1) / fact(k);
                if (n + k) % 2 == 0 {
                    plus += t;
                } else {
                    minus += t;
                }
            }
            let rhs = fact(n + 2 * big_n - 1) * fact(n + big_n) / (fact(n) * fact(big_n));
            if plus < minus || plus - minus != rhs {
                return fail(format!("N={big_n} n={n}"));
            }
        }
    }
    Ok(())
}

fn kummer_recurrence(_: &ValidateOptions) -> Result<(), String> {
    for (a0, b, z) in [(2.0, 1.0, 0.3), (4.0, 2.0, 3.7), (8.0, 4.0, 12.0)] {
        let seq = kummer_1f1_upper_sequence(a0, b, z, 40).map_err(err_text)?;
        for (j, f) in seq.iter().enumerate() {
            let direct = kummer_1f1(a0 + j as f64, b, z).map_err(err_text)?;
            if ((f - direct) / direct).abs() > 1e-12 {
                return fail(format!("1F1({}; {b}; {z}) recurrence {f} vs series {direct}", a0 + j as f64));
            }
        }
    }
    Ok(())
}

fn constellation_geometry(_: &ValidateOptions) -> Result<(), String> {
    for m in [2, 4, 8, 16] {
        let c = MaskConstellation::new(m).map_err(err_text)?;
        if (c.mean_energy() - 1.0).abs() > 1e-14 {
            return fail(format!("M={m}: mean energy {}", c.mean_energy()));
        }
        let e = c.energies();
        for (i, t) in c.thresholds().iter().enumerate() {
            if !(e[i] < *t && *t < e[i + 1]) || (t - 0.5 * (e[i] + e[i + 1])).abs() > 1e-15 {
                return fail(format!("M={m}: threshold {i} = {t}"));
            }
        }
    }
    Ok(())
}

fn fading_moments(_: &ValidateOptions) -> Result<(), String> {
    let tol = Tolerance {
        abs: 1e-300,
        rel: 1e-12,
        max_panels: 2000,
    };
    for n in [1, 2, 4] {
        for k in [0.0, 4.0, 10.0] {
            let sc = SerScenario::at_snr(2, n, k, 20.0).map_err(err_text)?;
            let points = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 200.0];
            let (mass, _) = integrate("mass", |x| pdf_x(x, &sc), &points, tol).map_err(err_text)?;
            let (mean, _) = integrate("mean", |x| x * pdf_x(x, &sc), &points, tol).map_err(err_text)?;
            if (mass - 1.0).abs() > 1e-9 || (mean / n as f64 - 1.0).abs() > 1e-6 {
                return fail(format!("N={n} K={k}: mass {mass}, mean {mean}"));
            }
        }
    }
    Ok(())
}

/// The threshold rule equals the minimum-distance rule on `zeta` over a
/// million-point grid.
fn threshold_equivalence(opts: &ValidateOptions) -> Result<(), String> {
    const POINTS: usize = 1_000_000;
    for m in [2, 4, 8] {
        let c = MaskConstellation::new(m).map_err(err_text)?;
        let e = c.energies();
        let shifted: Vec<f64> = c.thresholds().iter().map(|t| t + opts.threshold_shift).collect();
        let top = 1.25 * e[m - 1];
        for i in 0..POINTS {
            let zeta = top * i as f64 / (POINTS - 1) as f64;
            let by_threshold = threshold_decision(zeta, &shifted);
            let mut best = 0;
            for j in 1..m {
                if (zeta - e[j]).powi(2) < (zeta - e[best]).powi(2) {
                    best = j;
                }
            }
            if by_threshold != best {
                return fail(format!("M={m} zeta={zeta}: threshold rule {by_threshold}, nearest energy {best}"));
            }
        }
    }
    Ok(())
}

fn subopt_agreement(_: &ValidateOptions) -> Result<(), String> {
    let sc = SerScenario::at_snr(4, 2, 4.0, 12.0).map_err(err_text)?;
    let rule = QuadratureRule::gauss_chebyshev(64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let m = rng.random_range(0..4);
        let ch = sample_channel(&sc.params, sc.branches, &mut rng);
        let r = transmit(&sc.constellation, m, &ch, sc.sigma_n_sq, &mut rng).map_err(err_text)?;
        let side = SideInformation {
            constellation: &sc.constellation,
            channel: &ch,
            params: &sc.params,
            sigma_n_sq: sc.sigma_n_sq,
            rule: &rule,
        };
        let (_, a) = decision_statistic(DetectorKind::AcSuboptBessel, &r, &side).map_err(err_text)?;
        let (_, b) = decision_statistic(DetectorKind::AcSuboptQuad, &r, &side).map_err(err_text)?;
        for (x, y) in a.metric_values.iter().zip(&b.metric_values) {
            if (x - y).abs() > 1e-9 * x.abs().max(1.0) {
                return fail(format!("metrics differ: {x} vs {y}"));
            }
        }
    }
    Ok(())
}

fn phase_noise_rotation(_: &ValidateOptions) -> Result<(), String> {
    let sc = SerScenario::at_snr(2, 1, 4.0, 20.0).map_err(err_text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let variance = 0.2;
    let draws = 200_000;
    let kappa = von_mises_concentration(variance).map_err(err_text)?;
    let (mut sum_cos, mut sum_cos2) = (0.0, 0.0);
    for _ in 0..draws {
        let ch = sample_channel(&sc.params, 1, &mut rng);
        let r = transmit(&sc.constellation, 1, &ch, sc.sigma_n_sq, &mut rng).map_err(err_text)?;
        let mut rotated = r.clone();
        rotate_by_von_mises(&mut rotated, kappa, &mut rng);
        let (a, b) = (r.samples[0], rotated.samples[0]);
        if (a.norm() - b.norm()).abs() > 1e-12 * a.norm().max(1e-300) {
            return fail("rotation changed a modulus");
        }
        let c = (b * a.conj()).arg().cos();
        sum_cos += c;
        sum_cos2 += c * c;
    }
    let mean = sum_cos / draws as f64;
    let se = ((sum_cos2 / draws as f64 - mean * mean) / draws as f64).sqrt();
    let measured = 1.0 - mean;
    if (measured - variance).abs() > 3.0 * se {
        return fail(format!("circular variance {measured} vs {variance} (SE {se:e})"));
    }
    Ok(())
}

fn frozen_tails(_: &ValidateOptions) -> Result<(), String> {
    let cases: [(usize, usize, f64, f64, usize, Option<usize>, bool, f64); 4] = [
        (2, 1, 4.0, 20.0, 1, None, true, 0.0016297906078082467),
        (2, 2, 4.0, 25.0, 1, None, true, 3.9856298455963384e-07),
        (4, 1, 10.0, 27.0, 2, Some(2), false, 1.5011322016588719e-05),
        (4, 1, 10.0, 27.0, 2, Some(1), true, 4.1326846365916551e-05),
    ];
    for (order, n, k, snr, m, threshold, lower, expected) in cases {
        let sc = SerScenario::at_snr(order, n, k, snr).map_err(err_text)?;
        let zeta = threshold.map_or(1.0, |t| sc.constellation.thresholds()[t]);
        for engine in [Engine::Numeric, Engine::ApproachII] {
            let t = cdf_zeta(engine, zeta, m, &sc).map_err(err_text)?;
            let got = if lower { t.lower } else { t.upper };
            if ((got - expected) / expected).abs() > 1e-8 {
                return fail(format!("{engine} M={order} N={n} K={k} {snr} dB m={m}: {got} vs {expected}"));
            }
        }
    }
    Ok(())
}

/// SER of a series engine, or `None` where it reports leaving its validity region.
pub fn valid_ser(sc: &SerScenario, engine: Engine) -> Result<Option<f64>, Error> {
    match ser_heuristic_strict(sc, engine) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Regime { .. } | Error::NonConvergence { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn engine_concordance(_: &ValidateOptions) -> Result<(), String> {
    for order in [2, 4] {
        for n in [1, 2, 4] {
            for k in [0.0, 4.0, 10.0] {
                for snr in [10.0, 20.0, 30.0] {
                    let sc = SerScenario::at_snr(order, n, k, snr).map_err(err_text)?;
                    let reference = ser_heuristic_strict(&sc, Engine::Numeric).map_err(err_text)?;
                    for (engine, tol) in [(Engine::ApproachII, 1e-6), (Engine::ApproachI, 1e-4)] {
                        if let Some(v) = valid_ser(&sc, engine).map_err(err_text)?
                            && (v - reference).abs() > tol
                        {
                            return fail(format!(
                                "{engine} M={order} N={n} K={k} {snr} dB: {v} vs numeric {reference}"
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn asymptote(_: &ValidateOptions) -> Result<(), String> {
    for n in [1, 2, 3] {
        for (snr, tol) in [(40.0, 0.10), (50.0, 0.03)] {
            let sc = SerScenario::at_snr(2, n, 4.0, snr).map_err(err_text)?;
            let exact = ser_heuristic_with(&sc, Engine::ApproachII, true).map_err(err_text)?.ser;
            let approx = ser_heuristic_strict(&sc, Engine::Asymptotic).map_err(err_text)?;
            let rel = (approx - exact).abs() / exact;
            if rel > tol {
                return fail(format!("N={n} {snr} dB: relative error {rel}"));
            }
        }
    }
    Ok(())
}

fn worker_invariance(_: &ValidateOptions) -> Result<(), String> {
    let sc = SerScenario::at_snr(4, 2, 4.0, 10.0).map_err(err_text)?;
    let base = McConfig {
        trials: 200_000,
        seed: 3,
        workers: 1,
        ..McConfig::default()
    };
    let a = run_point(DetectorKind::AcHeuristic, &sc, &base).map_err(err_text)?;
    let b = run_point(DetectorKind::AcHeuristic, &sc, &McConfig { workers: 4, ..base }).map_err(err_text)?;
    if a != b {
        return fail(format!("{a:?} vs {b:?}"));
    }
    Ok(())
}

fn simulation_vs_numeric(_: &ValidateOptions) -> Result<(), String> {
    let sc = SerScenario::at_snr(4, 2, 4.0, 15.0).map_err(err_text)?;
    let mc = McConfig {
        trials: 400_000,
        seed: 9,
        ..McConfig::default()
    };
    let p = run_point(DetectorKind::AcHeuristic, &sc, &mc).map_err(err_text)?;
    let reference = ser_heuristic_strict(&sc, Engine::Numeric).map_err(err_text)?;
    if !p.within_se(reference, 3.0) {
        return fail(format!("simulated {} vs numeric {reference}", p.ser));
    }
    Ok(())
}
