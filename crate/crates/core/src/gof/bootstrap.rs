use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{fit_powerlaw_sorted, DistributionModel, FitOptions, PowerLawFit};
use crate::error::{Result, VolumaError};
use crate::rng::{open01, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub p_value: f64,
    pub reps: usize,
    pub observed_ks: f64,
}

/// Fraction of replicate distances at or above the observed one.
pub fn pvalue_from(observed: f64, replicates: &[f64]) -> f64 {
    if replicates.is_empty() {
        return f64::NAN;
    }
    replicates.iter().filter(|d| **d >= observed).count() as f64 / replicates.len() as f64
}

/// Power-law goodness-of-fit p-value with default fitting options.
pub fn bootstrap_pvalue(samples: &[f64], reps: usize, seed: u64) -> Result<f64> {
    let opts = FitOptions::default();
    let fit = crate::distributions::fit_powerlaw_with(samples, &opts)?;
    Ok(bootstrap_pvalue_with(samples, &fit, reps, seed, &opts)?.p_value)
}

/// Semi-parametric bootstrap around an existing fit. Each replicate draws
/// `n` values: with probability `n_tail/n` from the fitted law, otherwise
/// uniformly from the observed values below the cutoff. The replicate is
/// refit from scratch and its KS distance recorded. Replicate `r` uses its
/// own generator stream, so the result does not depend on scheduling.
pub fn bootstrap_pvalue_with(
    samples: &[f64],
    fit: &PowerLawFit,
    reps: usize,
    seed: u64,
    opts: &FitOptions,
) -> Result<BootstrapResult> {
    if reps == 0 {
        return Err(VolumaError::DomainError(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    let DistributionModel::PowerLaw { xmin, .. } = fit.model else {
        return Err(VolumaError::DomainError(
            "bootstrap requires a power-law fit".into(),
        ));
    };
    let mut body: Vec<f64> = samples.iter().copied().filter(|x| *x < xmin).collect();
    body.sort_by(f64::total_cmp);
    let n = samples.len();
    let p_tail = fit.n_tail as f64 / n as f64;
    let model = fit.model;

    let distances = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut draw: Vec<f64> = (0..n)
                .map(|_| {
                    if body.is_empty() || open01(&mut rng) < p_tail {
                        model.quantile_unchecked(open01(&mut rng))
                    } else {
                        let k = (open01(&mut rng) * body.len() as f64) as usize;
                        body[k.min(body.len() - 1)]
                    }
                })
                .collect();
            draw.sort_by(f64::total_cmp);
            fit_powerlaw_sorted(&draw, opts).map(|f| f.ks)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(BootstrapResult {
        p_value: pvalue_from(fit.ks, &distances),
        reps,
        observed_ks: fit.ks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample;

    #[test]
    fn extreme_observed_values() {
        let reps = [0.1, 0.2, 0.3];
        assert_eq!(pvalue_from(0.01, &reps), 1.0);
        assert_eq!(pvalue_from(0.9, &reps), 0.0);
        assert_eq!(pvalue_from(0.2, &reps), 2.0 / 3.0);
    }

    #[test]
    fn reproducible() {
        let m = DistributionModel::power_law(2.5, 1.0).unwrap();
        let xs = sample(&m, 500, 21);
        let a = bootstrap_pvalue(&xs, 40, 5).unwrap();
        let b = bootstrap_pvalue(&xs, 40, 5).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a));
    }
}
