//! Percentile billing: the actual nearest-rank percentile of grouped rates
//! against the same percentile of a model fitted to fine-grained rates.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{fit_mle_with, DistKind, DistributionModel, FitOptions};
use crate::error::{Result, VolumaError};
use crate::output::{num, opt_num};
use crate::trace::{rates, Trace, VolumeSeries};

fn check_pct(pct: f64) -> Result<()> {
    if pct > 0.0 && pct < 100.0 {
        Ok(())
    } else {
        Err(VolumaError::DomainError(format!(
            "percentile must lie in (0, 100), got {pct}"
        )))
    }
}

/// Nearest-rank percentile: the value at 1-based rank `ceil(pct/100 * n)`
/// of the ascending sort.
pub fn nearest_rank(values: &[f64], pct: f64) -> Result<f64> {
    check_pct(pct)?;
    if values.is_empty() {
        return Err(VolumaError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let r = pct * n as f64 / 100.0;
    // keep exact products such as 95 * 100 / 100 from rounding up a rank
    let r = if (r - r.round()).abs() < 1e-9 {
        r.round()
    } else {
        r
    };
    let rank = (r.ceil() as usize).clamp(1, n);
    Ok(sorted[rank - 1])
}

/// Rates of complete groups of `group_duration`. A trailing partial group of
/// binned input is dropped.
fn group_rates(trace: &Trace, group_duration: f64) -> Result<Vec<f64>> {
    let mut vs: VolumeSeries = trace.at_timescale(group_duration)?;
    if let Trace::Volumes(fine) = trace {
        let factor = (group_duration / fine.timescale).round() as usize;
        if factor > 1 && fine.volumes.len() % factor != 0 {
            vs.volumes.pop();
        }
    }
    Ok(rates(&vs))
}

/// Percentile of per-group rates, bytes/s.
pub fn actual_percentile(trace: &Trace, group_duration: f64, pct: f64) -> Result<f64> {
    check_pct(pct)?;
    let r = group_rates(trace, group_duration)?;
    if r.len() < 2 {
        return Err(VolumaError::InsufficientData {
            need: 2,
            got: r.len(),
        });
    }
    nearest_rank(&r, pct)
}

pub fn model_percentile(model: &DistributionModel, pct: f64) -> Result<f64> {
    check_pct(pct)?;
    model.quantile(pct / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalizer {
    #[default]
    Mean,
    Range,
}

impl FromStr for Normalizer {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Normalizer::Mean),
            "range" => Ok(Normalizer::Range),
            _ => Err(VolumaError::DomainError(format!(
                "unknown normalizer {s:?} (expected mean or range)"
            ))),
        }
    }
}

pub fn nrmse(predicted: &[f64], actual: &[f64]) -> Result<f64> {
    nrmse_with(predicted, actual, Normalizer::Mean)
}

/// Root mean squared error divided by the mean (or range) of `actual`.
pub fn nrmse_with(predicted: &[f64], actual: &[f64], normalizer: Normalizer) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(VolumaError::ShapeError {
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(VolumaError::EmptyInput);
    }
    let n = actual.len() as f64;
    let mse = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum::<f64>()
        / n;
    let scale = match normalizer {
        Normalizer::Mean => actual.iter().sum::<f64>() / n,
        Normalizer::Range => {
            let max = actual.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = actual.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        }
    };
    if !(scale > 0.0) {
        return Err(VolumaError::DegenerateData(format!(
            "{normalizer:?} of actual values is {scale}"
        )));
    }
    Ok(mse.sqrt() / scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: DistKind,
    /// bytes/s
    pub predicted: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingRecord {
    pub trace_label: String,
    /// bytes/s
    pub actual: Option<f64>,
    pub predictions: Vec<Prediction>,
    pub group_duration: f64,
    pub fit_timescale: f64,
    pub percentile: f64,
    pub error: Option<String>,
}

impl BillingRecord {
    pub fn predicted(&self, kind: DistKind) -> Option<f64> {
        self.predictions
            .iter()
            .find(|p| p.kind == kind)
            .and_then(|p| p.predicted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub kind: DistKind,
    pub nrmse: Option<f64>,
    /// Traces that contributed.
    pub traces: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingTable {
    pub records: Vec<BillingRecord>,
    pub scores: Vec<KindScore>,
    pub normalizer: Normalizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BillingConfig {
    pub kinds: Vec<DistKind>,
    /// Duration of the billing groups, seconds.
    pub group_duration: f64,
    /// Timescale the models are fitted at, seconds.
    pub fit_timescale: f64,
    pub percentile: f64,
    pub normalizer: Normalizer,
    pub fit: FitOptions,
}

impl Default for BillingConfig {
    fn default() -> Self {
        BillingConfig {
            kinds: vec![DistKind::LogNormal, DistKind::Weibull, DistKind::Gaussian],
            group_duration: 10.0,
            fit_timescale: 0.1,
            percentile: 95.0,
            normalizer: Normalizer::Mean,
            fit: FitOptions::default(),
        }
    }
}

fn predict(fine_rates: &[f64], kind: DistKind, cfg: &BillingConfig) -> Result<f64> {
    // A constant trace is a point mass; every model collapses onto it.
    if let Some(&first) = fine_rates.first() {
        if fine_rates.iter().all(|r| *r == first) {
            return Ok(first);
        }
    }
    let model = fit_mle_with(kind, fine_rates, &cfg.fit)?;
    model_percentile(&model, cfg.percentile)
}

fn bill_one(trace: &Trace, cfg: &BillingConfig) -> BillingRecord {
    let mut record = BillingRecord {
        trace_label: trace.label().to_string(),
        actual: None,
        predictions: Vec::new(),
        group_duration: cfg.group_duration,
        fit_timescale: cfg.fit_timescale,
        percentile: cfg.percentile,
        error: None,
    };
    match actual_percentile(trace, cfg.group_duration, cfg.percentile) {
        Ok(a) => record.actual = Some(a),
        Err(e) => record.error = Some(e.to_string()),
    }
    let fine = trace.at_timescale(cfg.fit_timescale).map(|vs| rates(&vs));
    record.predictions = cfg
        .kinds
        .iter()
        .map(|&kind| {
            match fine
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|r| predict(r, kind, cfg).map_err(|e| e.to_string()))
            {
                Ok(p) => Prediction {
                    kind,
                    predicted: Some(p),
                    error: None,
                },
                Err(e) => Prediction {
                    kind,
                    predicted: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    record
}

/// Bill every trace, then score each model kind by NRMSE over the traces
/// where both the actual and its prediction are available. Records are
/// ordered by trace label.
pub fn billing_experiment(traces: &[Trace], cfg: &BillingConfig) -> Result<BillingTable> {
    check_pct(cfg.percentile)?;
    let mut records: Vec<BillingRecord> = traces.par_iter().map(|t| bill_one(t, cfg)).collect();
    records.sort_by(|a, b| a.trace_label.cmp(&b.trace_label));

    let scores = cfg
        .kinds
        .iter()
        .map(|&kind| {
            let (pred, act): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter_map(|r| Some((r.predicted(kind)?, r.actual?)))
                .unzip();
            match nrmse_with(&pred, &act, cfg.normalizer) {
                Ok(v) => KindScore {
                    kind,
                    nrmse: Some(v),
                    traces: act.len(),
                    error: None,
                },
                Err(e) => KindScore {
                    kind,
                    nrmse: None,
                    traces: act.len(),
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    Ok(BillingTable {
        records,
        scores,
        normalizer: cfg.normalizer,
    })
}

impl BillingTable {
    pub fn score(&self, kind: DistKind) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.kind == kind)
            .and_then(|s| s.nrmse)
    }

    /// Columns: trace, actual_bps, predicted_bps, kind. Plot against y = x.
    pub fn scatter_tsv(&self) -> String {
        let mut s = String::from("trace\tactual_bps\tpredicted_bps\tkind\n");
        for r in &self.records {
            let Some(actual) = r.actual else { continue };
            for p in &r.predictions {
                if let Some(pred) = p.predicted {
                    s.push_str(&format!(
                        "{}\t{}\t{}\t{}\n",
                        r.trace_label.replace(['\t', '\n'], " "),
                        num(actual),
                        num(pred),
                        p.kind
                    ));
                }
            }
        }
        s
    }

    /// Columns: trace, actual_bps, then one predicted column per kind.
    pub fn to_tsv(&self) -> String {
        let kinds: Vec<DistKind> = self.scores.iter().map(|s| s.kind).collect();
        let mut s = String::from("trace\tactual_bps");
        for k in &kinds {
            s.push_str(&format!("\t{k}_bps"));
        }
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.trace_label.replace(['\t', '\n'], " "));
            s.push('\t');
            s.push_str(&opt_num(r.actual));
            for k in &kinds {
                s.push('\t');
                s.push_str(&opt_num(r.predicted(*k)));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_examples() {
        let v: Vec<f64> = (1..=100).rev().map(|i| i as f64).collect();
        assert_eq!(nearest_rank(&v, 95.0).unwrap(), 95.0);
        assert_eq!(nearest_rank(&v, 0.5).unwrap(), 1.0);
        assert_eq!(nearest_rank(&[7.0], 50.0).unwrap(), 7.0);
        assert!(nearest_rank(&v, 100.0).is_err());
    }

    #[test]
    fn constant_trace() {
        let vs = VolumeSeries::new(0.1, vec![250.0; 9000], 0.0, "flat").unwrap();
        let t = Trace::Volumes(vs);
        assert_eq!(actual_percentile(&t, 10.0, 95.0).unwrap(), 2500.0);
        assert_eq!(actual_percentile(&t, 10.0, 5.0).unwrap(), 2500.0);
        let table = billing_experiment(&[t], &BillingConfig::default()).unwrap();
        for p in &table.records[0].predictions {
            assert_eq!(p.predicted, Some(2500.0));
        }
    }

    #[test]
    fn ninety_groups() {
        let vs = VolumeSeries::new(
            0.1,
            (0..9000).map(|i| (i % 17) as f64 + 1.0).collect(),
            0.0,
            "",
        )
        .unwrap();
        assert_eq!(group_rates(&Trace::Volumes(vs), 10.0).unwrap().len(), 90);
        let short = VolumeSeries::new(0.1, vec![1.0; 150], 0.0, "").unwrap();
        assert!(matches!(
            actual_percentile(&Trace::Volumes(short), 10.0, 95.0),
            Err(VolumaError::InsufficientData { .. })
        ));
    }

    #[test]
    fn model_percentile_examples() {
        let ln = DistributionModel::log_normal(0.0, 1.0).unwrap();
        assert!((model_percentile(&ln, 50.0).unwrap() - 1.0).abs() < 1e-15);
        let g = DistributionModel::gaussian(10.0, 2.0).unwrap();
        assert!(
            (model_percentile(&g, 95.0).unwrap() - (10.0 + 2.0 * 1.644_853_626_951_472_7)).abs()
                < 1e-12
        );
        let w = DistributionModel::weibull(1.0, 3.0).unwrap();
        assert!((model_percentile(&w, 95.0).unwrap() - 3.0 * 20f64.ln()).abs() < 1e-12);
        assert!(model_percentile(&w, 0.0).is_err());
    }

    #[test]
    fn nrmse_examples() {
        assert_eq!(nrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(nrmse(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), 0.5);
        assert!(matches!(
            nrmse(&[1.0], &[1.0, 2.0]),
            Err(VolumaError::ShapeError { .. })
        ));
        assert!(matches!(
            nrmse(&[1.0], &[0.0]),
            Err(VolumaError::DegenerateData(_))
        ));
        assert_eq!(
            nrmse_with(&[2.0, 4.0], &[1.0, 3.0], Normalizer::Range).unwrap(),
            0.5
        );
    }
}
