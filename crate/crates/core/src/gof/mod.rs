//! Goodness of fit and model selection.

mod anomaly;
mod bootstrap;
mod llr;
mod select;

use crate::distributions::DistributionModel;
use crate::error::{Result, VolumaError};

pub(crate) use crate::distributions::fit::ks_step;

pub use anomaly::{
    anomaly_screen, anomaly_screen_observed, anomaly_screen_with, AnomalyReport, AnomalyThresholds,
};
pub use bootstrap::{bootstrap_pvalue, bootstrap_pvalue_with, pvalue_from, BootstrapResult};
pub use llr::{llr_compare, llr_vs_powerlaw, LlrResult};
pub use select::{
    select_model, BestModel, FitReport, LlrAnchor, LlrEntry, ModelFit, PairwiseEntry,
    PowerLawSection, SelectionOptions,
};

fn sorted_copy(samples: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = samples.collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// `model`, taking the larger gap on both sides of every step. Power-law
/// models are scored on the tail `x >= xmin` only. An empty comparison set
/// yields 0.
pub fn ks_statistic(samples: &[f64], model: &DistributionModel) -> f64 {
    let xs = match *model {
        DistributionModel::PowerLaw { xmin, .. } => {
            sorted_copy(samples.iter().copied().filter(|x| *x >= xmin))
        }
        _ => sorted_copy(samples.iter().copied()),
    };
    ks_sorted(&xs, model)
}

pub(crate) fn ks_sorted(sorted: &[f64], model: &DistributionModel) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .fold(0.0, |d: f64, (j, &x)| d.max(ks_step(j, n, model.cdf(x))))
}

/// Plotting positions `i/(n+1)`, `i = 1..n`.
fn plotting_position(i: usize, n: usize) -> f64 {
    i as f64 / (n + 1) as f64
}

fn reference_quantiles(model: &DistributionModel, n: usize) -> Result<Vec<f64>> {
    (1..=n)
        .map(|i| {
            let q = model.quantile(plotting_position(i, n))?;
            if q.is_finite() {
                Ok(q)
            } else {
                Err(VolumaError::EvaluationError {
                    model: model.kind().to_string(),
                    message: format!("non-finite quantile at position {i} of {n}"),
                })
            }
        })
        .collect()
}

/// Q-Q pairs `(F^-1(i/(n+1)), S_(i))`.
pub fn qq_points(samples: &[f64], model: &DistributionModel) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 2 {
        return Err(VolumaError::InsufficientData {
            need: 2,
            got: samples.len(),
        });
    }
    let sorted = sorted_copy(samples.iter().copied());
    let theo = reference_quantiles(model, sorted.len())?;
    Ok(theo.into_iter().zip(sorted).collect())
}

/// Probability plot correlation coefficient: Pearson correlation between the
/// order statistics and the reference quantiles at `i/(n+1)`.
pub fn ppcc(samples: &[f64], model: &DistributionModel) -> Result<f64> {
    if samples.len() < 3 {
        return Err(VolumaError::InsufficientData {
            need: 3,
            got: samples.len(),
        });
    }
    let s = sorted_copy(samples.iter().copied());
    let x = reference_quantiles(model, s.len())?;
    let n = s.len() as f64;
    let mean_s = s.iter().sum::<f64>() / n;
    let mean_x = x.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in s.iter().zip(&x) {
        let (ds, dx) = (a - mean_s, b - mean_x);
        sxy += ds * dx;
        syy += ds * ds;
        sxx += dx * dx;
    }
    if !(syy > 0.0 && sxx > 0.0) {
        return Err(VolumaError::DegenerateData(
            "zero variance in samples or reference quantiles".into(),
        ));
    }
    Ok((sxy / (syy.sqrt() * sxx.sqrt())).clamp(-1.0, 1.0))
}

/// Spread of PPCC values across timescales: population standard deviation.
pub fn gamma_variation(gammas: &[f64]) -> Result<f64> {
    if gammas.len() < 2 {
        return Err(VolumaError::InsufficientData {
            need: 2,
            got: gammas.len(),
        });
    }
    let n = gammas.len() as f64;
    let mean = gammas.iter().sum::<f64>() / n;
    let var = gammas.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{fit_mle, sample, DistKind};

    #[test]
    fn ks_single_sample_at_median() {
        let m = DistributionModel::gaussian(0.0, 1.0).unwrap();
        assert_eq!(ks_statistic(&[0.0], &m), 0.5);
    }

    #[test]
    fn ks_at_midpoint_quantiles() {
        let m = DistributionModel::exponential(2.0).unwrap();
        let n = 40;
        let xs: Vec<f64> = (1..=n)
            .map(|i| m.quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        assert!((ks_statistic(&xs, &m) - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_powerlaw_uses_tail() {
        let m = DistributionModel::power_law(2.0, 10.0).unwrap();
        let tail = [10.0, 12.0, 20.0, 50.0];
        let mut with_body = tail.to_vec();
        with_body.extend([1.0, 2.0, 3.0]);
        assert_eq!(ks_statistic(&tail, &m), ks_statistic(&with_body, &m));
    }

    #[test]
    fn ppcc_examples() {
        let m = DistributionModel::log_normal(1.0, 0.4).unwrap();
        let q = reference_quantiles(&m, 50).unwrap();
        assert!((ppcc(&q, &m).unwrap() - 1.0).abs() < 1e-12);
        let affine: Vec<f64> = q.iter().map(|x| 2.0 * x + 7.0).collect();
        assert!((ppcc(&affine, &m).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            ppcc(&[3.0; 10], &m),
            Err(VolumaError::DegenerateData(_))
        ));
    }

    #[test]
    fn ppcc_lognormal_strong() {
        let truth = DistributionModel::log_normal(0.0, 1.0).unwrap();
        let xs = sample(&truth, 10_000, 5);
        let fitted = fit_mle(DistKind::LogNormal, &xs).unwrap();
        assert!(ppcc(&xs, &fitted).unwrap() > 0.95);
    }

    #[test]
    fn gamma_variation_examples() {
        assert_eq!(gamma_variation(&[0.97; 4]).unwrap(), 0.0);
        let v = gamma_variation(&[0.9, 0.9, 0.9, 1.0]).unwrap();
        assert!((v - 0.043_301_270_189_221_94).abs() < 1e-12);
        let w = gamma_variation(&[1.0, 0.9, 0.9, 0.9]).unwrap();
        assert!((v - w).abs() < 1e-15);
    }

    #[test]
    fn qq_shape() {
        let m = DistributionModel::weibull(1.5, 2.0).unwrap();
        let xs = sample(&m, 100, 1);
        let pts = qq_points(&xs, &m).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(pts.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}
