//! Independent reference implementations checked against the library.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use voluma::distributions::{fit_mle, fit_powerlaw, sample, DistKind, DistributionModel};
use voluma::gof::{ks_statistic, llr_compare};
use voluma::provisioning::{capacity_meent, safety_margin};
use voluma::trace::SummaryStats;

use common::ks_brute;

fn random_model(rng: &mut ChaCha8Rng) -> DistributionModel {
    match rng.random_range(0..4) {
        0 => DistributionModel::log_normal(rng.random_range(-1.0..6.0), rng.random_range(0.1..2.0)),
        1 => DistributionModel::gaussian(rng.random_range(-10.0..10.0), rng.random_range(0.5..5.0)),
        2 => DistributionModel::weibull(rng.random_range(0.5..4.0), rng.random_range(0.5..50.0)),
        _ => DistributionModel::exponential(rng.random_range(0.05..5.0)),
    }
    .unwrap()
}

#[test]
fn ks_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let truth = random_model(&mut rng);
        let probe = random_model(&mut rng);
        let n = rng.random_range(5..300);
        let mut x = sample(&truth, n, case);
        if case % 5 == 0 {
            // ties
            x.iter_mut().for_each(|v| *v = (*v * 4.0).round() / 4.0);
        }
        for m in [&truth, &probe] {
            let fast = ks_statistic(&x, m);
            let slow = ks_brute(&x, m);
            assert!(
                (fast - slow).abs() <= 1e-12,
                "case {case} {m}: {fast} vs {slow}"
            );
        }
    }
}

/// Ascending exhaustive cutoff scan with a straightforward KS per candidate.
fn powerlaw_exhaustive(samples: &[f64], min_tail: usize, max_candidates: usize) -> (f64, f64, f64) {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let m = n - min_tail + 1;
    let count = m.min(max_candidates);
    let mut cutoffs: Vec<f64> = (0..count)
        .map(|j| {
            sorted[if count == 1 {
                0
            } else {
                j * (m - 1) / (count - 1)
            }]
        })
        .collect();
    cutoffs.dedup();
    let mut best: Option<(f64, f64, f64)> = None;
    for xmin in cutoffs {
        let tail: Vec<f64> = sorted.iter().copied().filter(|v| *v >= xmin).collect();
        let s: f64 = tail.iter().map(|v| (v / xmin).ln()).sum();
        if s <= 0.0 {
            continue;
        }
        let alpha = 1.0 + tail.len() as f64 / s;
        let model = DistributionModel::power_law(alpha, xmin).unwrap();
        let d = ks_brute(&tail, &model);
        if best.is_none_or(|b| d < b.0 - 1e-13) {
            best = Some((d, alpha, xmin));
        }
    }
    best.unwrap()
}

#[test]
fn powerlaw_scan_matches_exhaustive() {
    for seed in 0..12u64 {
        let truth = match seed % 3 {
            0 => DistributionModel::power_law(2.5, 1.0).unwrap(),
            1 => DistributionModel::log_normal(1.0, 1.0).unwrap(),
            _ => DistributionModel::weibull(0.7, 3.0).unwrap(),
        };
        let x = sample(&truth, 400 + 50 * seed as usize, seed);
        let fast = fit_powerlaw(&x).unwrap();
        let (d, alpha, xmin) = powerlaw_exhaustive(&x, 8, 500);
        let DistributionModel::PowerLaw { alpha: a, xmin: xm } = fast.model else {
            panic!("not a power law");
        };
        assert_eq!(xm, xmin, "seed {seed}");
        assert!(
            (a - alpha).abs() < 1e-9 * alpha,
            "seed {seed}: {a} vs {alpha}"
        );
        assert!(
            (fast.ks - d).abs() < 1e-12,
            "seed {seed}: {} vs {d}",
            fast.ks
        );
    }
}

#[test]
fn meent_direct_evaluation() {
    let stats = SummaryStats {
        n: 100,
        mean_rate: 100.0,
        volume_variance: 25.0,
        timescale: 1.0,
    };
    let c = capacity_meent(&stats, 0.01).unwrap();
    let direct = 100.0 + (-2.0 * 0.01f64.ln() * 25.0).sqrt();
    assert!((c - direct).abs() < 1e-12);
    assert!((c - 115.174).abs() < 1e-3);
    assert!(capacity_meent(&stats, 1.0).is_err());
    assert!((capacity_meent(&stats, 1.0 - 1e-12).unwrap() - 100.0).abs() < 1e-4);
    let e = (-0.5f64).exp();
    assert!((safety_margin(&stats, e).unwrap() - 5.0).abs() < 1e-12);
    let flat = SummaryStats {
        volume_variance: 0.0,
        ..stats
    };
    assert_eq!(capacity_meent(&flat, 1e-6).unwrap(), 100.0);
    let ratio = safety_margin(&stats, 1e-4).unwrap() / safety_margin(&stats, 1e-2).unwrap();
    assert!((ratio - 2f64.sqrt()).abs() < 1e-9);
}

/// Normal-theory LLR from scratch.
#[test]
fn llr_matches_direct_sum() {
    let x = sample(&DistributionModel::log_normal(2.0, 0.5).unwrap(), 500, 3);
    let a = fit_mle(DistKind::LogNormal, &x).unwrap();
    let b = fit_mle(DistKind::Exponential, &x).unwrap();
    let d: Vec<f64> = x.iter().map(|v| a.pdf(*v).ln() - b.pdf(*v).ln()).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let r = d.iter().sum::<f64>() / (sd * n.sqrt());
    let got = llr_compare(&x, &a, &b).unwrap();
    assert!((got.r_normalized - r).abs() < 1e-9 * r.abs());
    assert!(got.r_normalized > 0.0);
}
