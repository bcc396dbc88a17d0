use serde::{Deserialize, Serialize};

use crate::distributions::{fit_mle_with, DistKind, DistributionModel, FitOptions};
use crate::error::{Result, VolumaError};

/// Normalized log-likelihood ratio with its Vuong p-value. Positive
/// `r_normalized` favours `first`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlrResult {
    pub first: DistKind,
    pub second: DistKind,
    pub r_normalized: f64,
    pub p_value: f64,
    pub n: usize,
}

fn ln_density(model: &DistributionModel, x: f64) -> Result<f64> {
    let l = model.ln_pdf(x);
    if l.is_finite() {
        Ok(l)
    } else {
        Err(VolumaError::EvaluationError {
            model: model.kind().to_string(),
            message: format!("density is {} at x = {x}", l.exp()),
        })
    }
}

/// Pointwise differences `ln f_a(x) - ln f_b(x)`, summed and normalized by
/// `sigma * sqrt(n)` with `sigma` the population standard deviation of the
/// differences. When either model is a power law the comparison runs over
/// `x >= xmin` only.
pub fn llr_compare(
    samples: &[f64],
    a: &DistributionModel,
    b: &DistributionModel,
) -> Result<LlrResult> {
    let cutoff = [a, b]
        .iter()
        .filter_map(|m| match **m {
            DistributionModel::PowerLaw { xmin, .. } => Some(xmin),
            _ => None,
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let mut d = Vec::with_capacity(samples.len());
    for &x in samples.iter().filter(|x| **x >= cutoff) {
        d.push(ln_density(a, x)? - ln_density(b, x)?);
    }
    if d.is_empty() {
        return Err(VolumaError::EmptyInput);
    }
    let n = d.len() as f64;
    let total: f64 = d.iter().sum();
    let mean = total / n;
    let sigma = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let (r_normalized, p_value) = if d.iter().all(|v| *v == 0.0) {
        (0.0, 1.0)
    } else if sigma == 0.0 {
        (total.signum() * f64::INFINITY, 0.0)
    } else {
        (
            total / (sigma * n.sqrt()),
            libm::erfc(total.abs() / (sigma * (2.0 * n).sqrt())),
        )
    };
    Ok(LlrResult {
        first: a.kind(),
        second: b.kind(),
        r_normalized,
        p_value,
        n: d.len(),
    })
}

/// Compare a power law against an alternative refit by plain MLE on the
/// samples at or above the power law's cutoff. Returns the alternative's
/// tail fit alongside the result.
pub fn llr_vs_powerlaw(
    samples: &[f64],
    power_law: &DistributionModel,
    alternative: DistKind,
    opts: &FitOptions,
) -> Result<(DistributionModel, LlrResult)> {
    let DistributionModel::PowerLaw { xmin, .. } = *power_law else {
        return Err(VolumaError::DomainError(format!(
            "expected a power-law model, got {}",
            power_law.kind()
        )));
    };
    if alternative == DistKind::PowerLaw {
        return Err(VolumaError::DomainError(
            "alternative must differ from the power law".into(),
        ));
    }
    let tail: Vec<f64> = samples.iter().copied().filter(|x| *x >= xmin).collect();
    let alt = fit_mle_with(alternative, &tail, opts)?;
    let result = llr_compare(&tail, power_law, &alt)?;
    Ok((alt, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{fit_mle, fit_powerlaw_at, sample};

    #[test]
    fn identical_models() {
        let m = DistributionModel::log_normal(0.0, 1.0).unwrap();
        let xs = sample(&m, 200, 3);
        let r = llr_compare(&xs, &m, &m).unwrap();
        assert_eq!((r.r_normalized, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn swap_negates() {
        let truth = DistributionModel::log_normal(0.0, 1.0).unwrap();
        let xs = sample(&truth, 500, 8);
        let a = fit_mle(DistKind::LogNormal, &xs).unwrap();
        let b = fit_mle(DistKind::Weibull, &xs).unwrap();
        let ab = llr_compare(&xs, &a, &b).unwrap();
        let ba = llr_compare(&xs, &b, &a).unwrap();
        assert_eq!(ab.r_normalized, -ba.r_normalized);
        assert_eq!(ab.p_value, ba.p_value);
    }

    #[test]
    fn zero_density_is_an_error() {
        let g = DistributionModel::gaussian(0.0, 1.0).unwrap();
        let e = DistributionModel::exponential(1.0).unwrap();
        match llr_compare(&[-1.0, 1.0], &g, &e) {
            Err(VolumaError::EvaluationError { model, .. }) => assert_eq!(model, "exponential"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lognormal_beats_anchored_powerlaw() {
        let truth = DistributionModel::log_normal(0.0, 1.0).unwrap();
        let xs = sample(&truth, 10_000, 11);
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let pl = fit_powerlaw_at(&xs, min).unwrap();
        let (_, r) =
            llr_vs_powerlaw(&xs, &pl, DistKind::LogNormal, &FitOptions::default()).unwrap();
        assert!(r.r_normalized < 0.0 && r.p_value < 0.1, "{r:?}");
    }
}
