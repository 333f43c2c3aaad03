//! End-to-end acceptance criteria. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stdout, so the summary shows even when output is captured.

use std::io::Write;

use ac_mask::analytic_ser::{
    Engine, SerScenario, cdf_zeta, pdf_zeta, pdf_zeta_numeric, ser_heuristic, ser_heuristic_strict,
};
use ac_mask::cli::validate::{ValidateOptions, registry, valid_ser};
use ac_mask::detectors::DetectorKind;
use ac_mask::error::Error;
use ac_mask::mc_engine::{McConfig, SerPoint, run_point, sample_statistic};
use ac_mask::specfun::quadrature::{Tolerance, integrate};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn report(id: u32, title: &str, outcome: Result<String, String>) {
    let line = match &outcome {
        Ok(detail) => format!("criterion {id}: PASS {title}: {detail}"),
        Err(detail) => format!("criterion {id}: FAIL {title}: {detail}"),
    };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    if let Err(detail) = outcome {
        panic!("criterion {id} ({title}) failed: {detail}");
    }
}

fn mc_point(kind: DetectorKind, sc: &SerScenario, trials: u64, seed: u64, level: f64) -> SerPoint {
    let mc = McConfig {
        trials,
        seed,
        workers: 1,
        phase_noise_level: level,
        ..McConfig::default()
    };
    run_point(kind, sc, &mc).unwrap()
}

fn scenario(order: usize, n: usize, k: f64, snr: f64) -> SerScenario {
    SerScenario::at_snr(order, n, k, snr).unwrap()
}

/// SNR at which the analytical heuristic SER equals `target`, by bisection.
fn analytic_snr_at(order: usize, n: usize, k: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 80.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ser_heuristic(&scenario(order, n, k, mid), Engine::ApproachII).unwrap() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Where a decreasing curve sampled on `snr` crosses `target`, by linear
/// interpolation of `log10(ser)`.
fn crossing(snr: &[f64], ser: &[f64], target: f64) -> Option<f64> {
    (0..snr.len() - 1).find_map(|i| {
        (ser[i] >= target && ser[i + 1] < target && ser[i + 1] > 0.0).then(|| {
            let (a, b) = (ser[i].log10(), ser[i + 1].log10());
            snr[i] + (snr[i + 1] - snr[i]) * (a - target.log10()) / (a - b)
        })
    })
}

/// First SNR where `diff` changes sign from negative to non-negative.
fn sign_change(snr: &[f64], diff: &[f64]) -> Option<f64> {
    (0..snr.len() - 1).find_map(|i| {
        (diff[i] < 0.0 && diff[i + 1] >= 0.0)
            .then(|| snr[i] + (snr[i + 1] - snr[i]) * diff[i] / (diff[i] - diff[i + 1]))
    })
}

fn run_check(name: &str) -> Result<(), String> {
    let check = registry().into_iter().find(|c| c.name == name).expect("check is registered");
    (check.run)(&ValidateOptions::default())
}

const ORDERS: [usize; 2] = [2, 4];
const BRANCHES: [usize; 3] = [1, 2, 4];
const K_FACTORS: [f64; 3] = [0.0, 4.0, 10.0];
const SNRS: [f64; 3] = [10.0, 20.0, 30.0];

#[test]
fn criterion_01_engine_concordance() {
    let outcome = (|| {
        let (mut worst2, mut worst1, mut worst_se, mut skipped) = (0.0f64, 0.0f64, 0.0f64, 0);
        for order in ORDERS {
            for n in BRANCHES {
                for k in K_FACTORS {
                    for snr in SNRS {
                        let sc = scenario(order, n, k, snr);
                        let reference = ser_heuristic_strict(&sc, Engine::Numeric).map_err(|e| e.to_string())?;
                        let here = format!("M={order} N={n} K={k} {snr} dB");
                        match valid_ser(&sc, Engine::ApproachII).map_err(|e| e.to_string())? {
                            Some(v) => worst2 = worst2.max((v - reference).abs()),
                            None => skipped += 1,
                        }
                        match valid_ser(&sc, Engine::ApproachI).map_err(|e| e.to_string())? {
                            Some(v) => worst1 = worst1.max((v - reference).abs()),
                            None => skipped += 1,
                        }
                        let p = mc_point(DetectorKind::AcHeuristic, &sc, 1_000_000, 1, 0.0);
                        let z = (p.ser - reference).abs() / p.standard_error().max(1.0 / p.trials as f64);
                        worst_se = worst_se.max(z);
                        if !p.within_se(reference, 3.0) {
                            return Err(format!("{here}: simulated {} vs numeric {reference}", p.ser));
                        }
                    }
                }
            }
        }
        let detail = format!(
            "max |II-numeric| {worst2:.1e}, max |I-numeric| {worst1:.1e}, \
             {skipped} engine evaluations outside validity, worst MC deviation {worst_se:.2} SE"
        );
        if worst2 > 1e-6 || worst1 > 1e-4 {
            return Err(detail);
        }
        Ok(detail)
    })();
    report(1, "engine concordance", outcome);
}

/// Coherent SER on an integer grid starting `below` dB under `from`, until it
/// drops below `target`.
fn coherent_crossing(order: usize, from: f64, target: f64) -> Result<f64, String> {
    let (mut snr, mut ser) = (Vec::new(), Vec::new());
    let mut s = (from - 6.0).floor();
    while s <= from + 2.0 {
        let p = mc_point(DetectorKind::Coherent, &scenario(order, 1, 4.0, s), 10_000_000, 2, 0.0);
        snr.push(s);
        ser.push(p.ser);
        if p.ser < target && ser.len() > 1 {
            break;
        }
        s += 1.0;
    }
    crossing(&snr, &ser, target).ok_or_else(|| format!("coherent SER {ser:?} never crosses {target}"))
}

fn coherent_gap(id: u32, order: usize, expected: f64, tol: f64) {
    let target = 5e-5;
    let outcome = (|| {
        let heuristic = analytic_snr_at(order, 1, 4.0, target);
        let coherent = coherent_crossing(order, heuristic - expected, target)?;
        let gap = heuristic - coherent;
        let detail = format!(
            "M={order}: heuristic reaches {target:e} at {heuristic:.2} dB, coherent at {coherent:.2} dB, gap {gap:.2} dB (expected {expected} +/- {tol})"
        );
        if (gap - expected).abs() > tol { Err(detail) } else { Ok(detail) }
    })();
    report(id, "coherent advantage over the heuristic detector", outcome);
}

#[test]
fn criterion_02_coherent_gap_binary() {
    coherent_gap(2, 2, 3.0, 0.7);
}

#[test]
fn criterion_03_coherent_gap_four_level() {
    coherent_gap(3, 4, 1.4, 0.5);
}

#[test]
fn criterion_04_k_factor_gain() {
    let target = 4e-4;
    let mut details = Vec::new();
    let mut ok = true;
    for (order, expected) in [(2, 20.0), (4, 18.0)] {
        let gain = analytic_snr_at(order, 1, 1.0, target) - analytic_snr_at(order, 1, 20.0, target);
        ok &= (gain - expected).abs() <= 2.0;
        details.push(format!("M={order} gain {gain:.2} dB (expected {expected} +/- 2)"));
    }
    let detail = details.join(", ");
    report(4, "K = 1 to K = 20 gain at SER 4e-4", if ok { Ok(detail) } else { Err(detail) });
}

#[test]
fn criterion_05_amplitude_coherent_ordering() {
    let snr: Vec<f64> = (5..=15).map(|i| 2.0 * i as f64).collect();
    let mut heuristic = Vec::new();
    let mut subopt = Vec::new();
    let mut near_opt = Vec::new();
    for &s in &snr {
        let sc = scenario(2, 1, 4.0, s);
        heuristic.push(mc_point(DetectorKind::AcHeuristic, &sc, 1_000_000, 5, 0.0).ser);
        subopt.push(mc_point(DetectorKind::AcSuboptBessel, &sc, 1_000_000, 5, 0.0).ser);
        near_opt.push(mc_point(DetectorKind::AcNearOptimum, &sc, 1_000_000, 5, 0.0).ser);
    }
    let target = 1e-3;
    let outcome = (|| {
        let h = crossing(&snr, &heuristic, target).ok_or("heuristic curve misses the reference SER")?;
        let so = crossing(&snr, &subopt, target).ok_or("suboptimum curve misses the reference SER")?;
        let gap = so - h;
        let diff: Vec<f64> = near_opt.iter().zip(&heuristic).map(|(a, b)| a.log10() - b.log10()).collect();
        let cross = sign_change(&snr, &diff);
        let detail = format!(
            "at SER {target:e}: heuristic {h:.2} dB, suboptimum {so:.2} dB, heuristic advantage {gap:.2} dB \
             (expected 3.5 +/- 0.7); near-optimum/heuristic crossover {}",
            cross.map_or("none".into(), |c| format!("{c:.2} dB (expected 18 to 24)"))
        );
        let crossover_ok = cross.is_some_and(|c| (18.0..=24.0).contains(&c)) && diff[0] < 0.0;
        if (gap - 3.5).abs() > 0.7 || !crossover_ok { Err(detail) } else { Ok(detail) }
    })();
    report(5, "amplitude-coherent detector ordering", outcome);
}

#[test]
fn criterion_06_noncoherent_floor() {
    let outcome = (|| {
        let floor = mc_point(DetectorKind::Noncoherent, &scenario(4, 1, 4.0, 40.0), 1_000_000, 6, 0.0).ser;
        let mut details = vec![format!("M=4 noncoherent SER at 40 dB {floor:.3e} (expected 0.05 to 0.2)")];
        let mut ok = (0.05..=0.2).contains(&floor);
        for (order, expected) in [(2, 11.0), (4, 5.0)] {
            let snr: Vec<f64> = (0..=20).map(f64::from).collect();
            let diff: Vec<f64> = snr
                .iter()
                .map(|&s| {
                    let sc = scenario(order, 1, 4.0, s);
                    let nc = mc_point(DetectorKind::Noncoherent, &sc, 1_000_000, 6, 0.0).ser;
                    nc.log10() - ser_heuristic(&sc, Engine::ApproachII).unwrap().log10()
                })
                .collect();
            let cross = sign_change(&snr, &diff);
            ok &= cross.is_some_and(|c| (c - expected).abs() <= 2.0);
            details.push(format!(
                "M={order} crossover {} (expected {expected} +/- 2)",
                cross.map_or("none".into(), |c| format!("{c:.2} dB"))
            ));
        }
        let detail = details.join(", ");
        if ok { Ok(detail) } else { Err(detail) }
    })();
    report(6, "noncoherent error floor and crossovers", outcome);
}

#[test]
fn criterion_07_phase_noise() {
    let levels = [0.0, 3.0, 5.0, 7.0, 10.0];
    let outcome = (|| {
        let mut details = Vec::new();
        for order in [2, 4] {
            for snr in [20.0, 40.0] {
                let sc = scenario(order, 1, 4.0, snr);
                let clean = mc_point(DetectorKind::AcHeuristic, &sc, 1_000_000, 7, 0.0);
                for &level in &levels[1..] {
                    let noisy = mc_point(DetectorKind::AcHeuristic, &sc, 1_000_000, 7, level);
                    if !noisy.within_se(clean.ser, 3.0) {
                        return Err(format!("heuristic M={order} {snr} dB level {level}: {} vs {}", noisy.ser, clean.ser));
                    }
                }
            }
            for &level in &levels[1..] {
                let at = |snr| mc_point(DetectorKind::Coherent, &scenario(order, 1, 4.0, snr), 1_000_000, 7, level).ser;
                let (a, b) = (at(40.0), at(50.0));
                let change = (a - b).abs() / a;
                if change >= 0.2 {
                    return Err(format!("coherent M={order} level {level}: {a:e} at 40 dB, {b:e} at 50 dB"));
                }
            }
            let trials = if order == 2 { 40_000_000 } else { 4_000_000 };
            let at = |snr| mc_point(DetectorKind::Coherent, &scenario(order, 1, 4.0, snr), trials, 7, 0.0).ser;
            let (a, b) = (at(40.0), at(50.0));
            if !(a >= 5.0 * b) {
                return Err(format!("coherent M={order} without phase noise: {a:e} at 40 dB, {b:e} at 50 dB"));
            }
            details.push(format!("M={order} clean coherent drop {:.1}x", a / b));
        }
        Ok(format!("heuristic unchanged at every level; coherent floors below 20% change; {}", details.join(", ")))
    })();
    report(7, "phase-noise immunity and coherent floor", outcome);
}

#[test]
fn criterion_08_high_snr_asymptote() {
    report(8, "asymptotic SER at 40 and 50 dB", run_check("high-snr-asymptote").map(|()| "N = 1, 2, 3 within 10% and 3%".into()));
}

/// Analytical density with the numeric engine standing in outside the
/// series' regime.
fn density(zeta: f64, m: usize, sc: &SerScenario) -> f64 {
    match pdf_zeta(zeta, m, sc) {
        Ok(v) => v,
        Err(Error::Regime { .. }) => pdf_zeta_numeric(zeta, m, sc).unwrap(),
        Err(e) => panic!("{e}"),
    }
}

fn lower_tail(zeta: f64, m: usize, sc: &SerScenario) -> f64 {
    cdf_zeta(Engine::Numeric, zeta, m, sc).unwrap().lower
}

fn quantile(p: f64, m: usize, sc: &SerScenario, top: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, top);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if lower_tail(mid, m, sc) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_09_statistic_densities() {
    const SAMPLES: u64 = 1_000_000;
    const BINS: usize = 40;
    let sc = scenario(4, 1, 10.0, 27.0);
    let tol = Tolerance {
        abs: 1e-14,
        rel: 1e-10,
        max_panels: 400,
    };
    let outcome = (|| {
        let mut details = Vec::new();
        let top = 4.0 * sc.constellation.energies()[3] + 1.0;
        for m in 0..4 {
            let lo = if m == 0 { 0.0 } else { quantile(1e-3, m, &sc, top) };
            let hi = quantile(1.0 - 1e-3, m, &sc, top);
            let edges: Vec<f64> = (0..=BINS).map(|i| lo + (hi - lo) * i as f64 / BINS as f64).collect();
            let mut expected = Vec::with_capacity(BINS + 2);
            if m > 0 {
                let (p, _) = integrate("lower bin", |z| density(z, m, &sc), &[0.0, lo], tol).map_err(|e| e.to_string())?;
                expected.push(p);
            }
            for w in edges.windows(2) {
                let (p, _) = integrate("bin", |z| density(z, m, &sc), w, tol).map_err(|e| e.to_string())?;
                expected.push(p);
            }
            let covered: f64 = expected.iter().sum();
            expected.push((1.0 - covered).max(0.0));

            let z = sample_statistic(&sc, m, SAMPLES, 900 + m as u64, 1).map_err(|e| e.to_string())?;
            let mut counts = vec![0u64; expected.len()];
            let offset = usize::from(m > 0);
            for &v in &z {
                let slot = if v < lo {
                    0
                } else if v >= hi {
                    expected.len() - 1
                } else {
                    offset + (((v - lo) / (hi - lo) * BINS as f64) as usize).min(BINS - 1)
                };
                counts[slot] += 1;
            }
            let n = z.len() as f64;
            let stat: f64 = counts
                .iter()
                .zip(&expected)
                .map(|(&c, &p)| (c as f64 - n * p).powi(2) / (n * p))
                .sum();
            let dof = (expected.len() - 1) as f64;
            let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
            details.push(format!("m={m} chi2 {stat:.1} on {dof} dof, p {p_value:.3}"));
            if !(p_value > 0.01) {
                return Err(details.join(", "));
            }
        }
        let eta = sc.constellation.thresholds();
        let mut worst: f64 = 0.0;
        for m in 0..3 {
            let above = cdf_zeta(Engine::ApproachII, eta[m], m, &sc).map_err(|e| e.to_string())?.upper;
            let below = cdf_zeta(Engine::ApproachII, eta[m], m + 1, &sc).map_err(|e| e.to_string())?.lower;
            worst = worst.max(above + below);
        }
        details.push(format!("largest overlap across a shared threshold {worst:.2e}"));
        if worst >= 1e-3 {
            return Err(details.join(", "));
        }
        Ok(details.join(", "))
    })();
    report(9, "statistic densities against simulation", outcome);
}

#[test]
fn criterion_10_kernel_identities() {
    let names = [
        "marcum-reflection-identity",
        "gauss-chebyshev-bessel-i0",
        "alternating-binomial-identity",
        "threshold-equivalence",
    ];
    let outcome = names
        .iter()
        .try_for_each(|n| run_check(n).map_err(|e| format!("{n}: {e}")))
        .map(|()| names.join(", "));
    report(10, "kernel identities", outcome);
}
