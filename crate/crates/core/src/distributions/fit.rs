//! Maximum-likelihood fitting.
//!
//! Closed forms for the normal family and the exponential. Weibull solves the
//! profile score equation for the shape by bisection. The power law scans
//! candidate lower cutoffs and keeps the one whose tail fit has the smallest
//! Kolmogorov-Smirnov distance.

use serde::{Deserialize, Serialize};

use super::{DistKind, DistributionModel};
use crate::error::{Result, VolumaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Minimum sample count for any fit.
    pub min_samples: usize,
    /// Minimum number of samples at or above a power-law cutoff candidate.
    pub min_tail: usize,
    /// Upper bound on the number of cutoff candidates scanned.
    pub max_xmin_candidates: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_samples: 8,
            min_tail: 8,
            max_xmin_candidates: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub model: DistributionModel,
    /// KS distance between the tail and the fitted law.
    pub ks: f64,
    pub n_tail: usize,
    pub candidates: usize,
}

const WEIBULL_LO: f64 = 1e-3;
const WEIBULL_HI: f64 = 1e3;
const WEIBULL_TOL: f64 = 1e-10;

fn check_samples(kind: DistKind, samples: &[f64], opts: &FitOptions) -> Result<()> {
    if samples.len() < opts.min_samples.max(1) {
        return Err(VolumaError::InsufficientData {
            need: opts.min_samples.max(1),
            got: samples.len(),
        });
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(VolumaError::DomainError(format!("non-finite sample {bad}")));
    }
    if kind != DistKind::Gaussian {
        if let Some(bad) = samples.iter().find(|x| **x <= 0.0) {
            return Err(VolumaError::DomainError(format!(
                "{kind} requires positive samples, found {bad}"
            )));
        }
    }
    Ok(())
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (mut n, mut sum) = (0usize, 0.0);
    for v in values.clone() {
        n += 1;
        sum += v;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / n as f64).sqrt())
}

/// Fit any kind, dispatching the power law to the cutoff scan.
pub fn fit(kind: DistKind, samples: &[f64], opts: &FitOptions) -> Result<DistributionModel> {
    match kind {
        DistKind::PowerLaw => fit_powerlaw_with(samples, opts).map(|f| f.model),
        _ => fit_mle_with(kind, samples, opts),
    }
}

pub fn fit_mle(kind: DistKind, samples: &[f64]) -> Result<DistributionModel> {
    fit(kind, samples, &FitOptions::default())
}

pub fn fit_mle_with(
    kind: DistKind,
    samples: &[f64],
    opts: &FitOptions,
) -> Result<DistributionModel> {
    check_samples(kind, samples, opts)?;
    match kind {
        DistKind::Gaussian => {
            let (mean, sd) = mean_sd(samples.iter().copied());
            if sd <= 0.0 {
                return Err(VolumaError::DegenerateData("all samples are equal".into()));
            }
            DistributionModel::gaussian(mean, sd)
        }
        DistKind::LogNormal => {
            let (mu, sigma) = mean_sd(samples.iter().map(|x| x.ln()));
            if sigma <= 0.0 {
                return Err(VolumaError::DegenerateData("all samples are equal".into()));
            }
            DistributionModel::log_normal(mu, sigma)
        }
        DistKind::Exponential => {
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            DistributionModel::exponential(1.0 / mean)
        }
        DistKind::Weibull => fit_weibull(samples),
        DistKind::PowerLaw => fit_powerlaw_with(samples, opts).map(|f| f.model),
    }
}

fn fit_weibull(samples: &[f64]) -> Result<DistributionModel> {
    let xmax = samples.iter().copied().fold(f64::MIN, f64::max);
    let ly: Vec<f64> = samples.iter().map(|x| (x / xmax).ln()).collect();
    let n = ly.len() as f64;
    let mean_ly = ly.iter().sum::<f64>() / n;

    let score = |k: f64| {
        let (mut s0, mut s1) = (0.0, 0.0);
        for &l in &ly {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
        }
        s1 / s0 - 1.0 / k - mean_ly
    };

    let (mut lo, mut hi) = (WEIBULL_LO, WEIBULL_HI);
    let (g_lo, g_hi) = (score(lo), score(hi));
    if !(g_lo.is_finite() && g_hi.is_finite()) || g_lo.signum() == g_hi.signum() {
        return Err(VolumaError::FitFailure(format!(
            "weibull shape score has no sign change on [{WEIBULL_LO}, {WEIBULL_HI}]"
        )));
    }
    let mut k = lo;
    for _ in 0..400 {
        k = 0.5 * (lo + hi);
        let g = score(k);
        if g.abs() <= WEIBULL_TOL || hi - lo <= 4.0 * f64::EPSILON * k {
            break;
        }
        if g.signum() == g_lo.signum() {
            lo = k;
        } else {
            hi = k;
        }
    }
    let mean_yk = ly.iter().map(|l| (k * l).exp()).sum::<f64>() / n;
    let scale = xmax * mean_yk.powf(1.0 / k);
    DistributionModel::weibull(k, scale)
}

/// One step of the KS sup: the larger gap on either side of the `j`-th
/// order statistic (0-based) out of `n`.
#[inline]
pub(crate) fn ks_step(j: usize, n: f64, f: f64) -> f64 {
    let below = j as f64 / n;
    let above = (j + 1) as f64 / n;
    (above - f).max(f - below)
}

#[inline]
pub(crate) fn powerlaw_cdf_log(alpha: f64, ln_x: f64, ln_xmin: f64) -> f64 {
    -((1.0 - alpha) * (ln_x - ln_xmin)).exp_m1()
}

pub fn fit_powerlaw(samples: &[f64]) -> Result<PowerLawFit> {
    fit_powerlaw_with(samples, &FitOptions::default())
}

pub fn fit_powerlaw_with(samples: &[f64], opts: &FitOptions) -> Result<PowerLawFit> {
    check_samples(DistKind::PowerLaw, samples, opts)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    fit_powerlaw_sorted(&sorted, opts)
}

/// Cutoff scan over samples already sorted ascending. Candidates are up to
/// `max_xmin_candidates` order statistics spaced evenly in rank, each
/// leaving at least `min_tail` samples at or above it. Ties in KS distance
/// go to the smaller cutoff.
pub fn fit_powerlaw_sorted(sorted: &[f64], opts: &FitOptions) -> Result<PowerLawFit> {
    let n = sorted.len();
    let min_tail = opts.min_tail.max(1);
    let need = opts.min_samples.max(min_tail);
    if n < need {
        return Err(VolumaError::InsufficientData { need, got: n });
    }
    if !(sorted[0] > 0.0) || !sorted[n - 1].is_finite() {
        return Err(VolumaError::DomainError(
            "powerlaw requires positive finite samples".into(),
        ));
    }
    let logs: Vec<f64> = sorted.iter().map(|x| x.ln()).collect();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + logs[i];
    }

    let m = n - min_tail + 1;
    let count = m.min(opts.max_xmin_candidates.max(1));
    let mut starts: Vec<usize> = Vec::with_capacity(count);
    for j in 0..count {
        let pos = if count == 1 {
            0
        } else {
            j * (m - 1) / (count - 1)
        };
        let xmin = sorted[pos];
        let start = sorted.partition_point(|v| *v < xmin);
        if starts.last() != Some(&start) {
            starts.push(start);
        }
    }

    // Largest cutoffs first: short tails are cheap and usually set a tight
    // bound early, which lets most longer tails abort. Replacing on `<=`
    // while walking down keeps ties at the smaller cutoff.
    let mut best: Option<(f64, usize, f64)> = None;
    let mut scanned = 0;
    for &start in starts.iter().rev() {
        let nt = n - start;
        let lx = logs[start];
        let s = suffix[start] - nt as f64 * lx;
        if !(s > 0.0) {
            continue;
        }
        scanned += 1;
        let alpha = 1.0 + nt as f64 / s;
        let bound = best.map_or(f64::INFINITY, |b| b.0);
        if let Some(d) = tail_ks(&logs[start..], lx, alpha, bound) {
            best = Some((d, start, alpha));
        }
    }

    let (ks, start, alpha) = best.ok_or_else(|| {
        VolumaError::FitFailure("no cutoff candidate leaves a non-degenerate tail".into())
    })?;
    Ok(PowerLawFit {
        model: DistributionModel::power_law(alpha, sorted[start])?,
        ks,
        n_tail: n - start,
        candidates: scanned,
    })
}

/// KS distance of a sorted log-tail against the power law, or `None` once
/// it is certain to exceed `bound`. A strided pass over a few order
/// statistics gives a cheap lower bound before the full pass.
fn tail_ks(tail_logs: &[f64], ln_xmin: f64, alpha: f64, bound: f64) -> Option<f64> {
    let len = tail_logs.len();
    let nt = len as f64;
    let step = |j: usize| ks_step(j, nt, powerlaw_cdf_log(alpha, tail_logs[j], ln_xmin));
    if bound.is_finite() {
        let stride = (len / 64).max(1);
        if (stride - 1..len).step_by(stride).any(|j| step(j) > bound) {
            return None;
        }
    }
    let mut d: f64 = 0.0;
    for j in 0..len {
        d = d.max(step(j));
        if d > bound {
            return None;
        }
    }
    Some(d)
}

/// Exponent estimate for a fixed cutoff from the samples at or above it.
pub fn fit_powerlaw_at(samples: &[f64], xmin: f64) -> Result<DistributionModel> {
    if !(xmin > 0.0 && xmin.is_finite()) {
        return Err(VolumaError::DomainError(format!(
            "xmin must be positive and finite, got {xmin}"
        )));
    }
    let lx = xmin.ln();
    let (mut nt, mut s) = (0usize, 0.0);
    for &x in samples {
        if !x.is_finite() {
            return Err(VolumaError::DomainError(format!("non-finite sample {x}")));
        }
        if x >= xmin {
            nt += 1;
            s += x.ln() - lx;
        }
    }
    if nt == 0 {
        return Err(VolumaError::InsufficientData { need: 1, got: 0 });
    }
    if !(s > 0.0) {
        return Err(VolumaError::DegenerateData(
            "every tail sample equals the cutoff".into(),
        ));
    }
    DistributionModel::power_law(1.0 + nt as f64 / s, xmin)
}
