//! Picking a best model for one trace.
//!
//! 1. Fit every candidate by MLE; fit the power law by cutoff scan and
//!    bootstrap its KS distance.
//! 2. Compare a power-law anchor against each alternative with the
//!    normalized LLR. Alternatives with `R < 0` and `p < significance`
//!    qualify.
//! 3. Qualifiers are compared pairwise on the full sample; one that loses a
//!    significant comparison is dropped. The survivor with the most negative
//!    `R` against the power law wins.
//! 4. With no qualifier the power law wins only if its bootstrap p-value
//!    exceeds the plausibility threshold; otherwise the result is
//!    inconclusive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    anomaly_screen_observed, anomaly_screen_with, bootstrap_pvalue_with, ks_statistic, llr_compare,
    llr_vs_powerlaw, ppcc, AnomalyReport, AnomalyThresholds, LlrResult,
};
use crate::distributions::{
    fit_mle_with, fit_powerlaw_at, fit_powerlaw_with, DistKind, DistributionModel, FitOptions,
};
use crate::error::{Result, VolumaError};
use crate::trace::VolumeSeries;

/// Where the power law used in LLR comparisons is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LlrAnchor {
    /// Cutoff at the sample minimum, so the comparison covers every sample.
    #[default]
    SampleMin,
    /// Cutoff chosen by the KS scan; only the tail is compared.
    KsCutoff,
}

impl FromStr for LlrAnchor {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" | "sample-min" => Ok(LlrAnchor::SampleMin),
            "tail" | "ks" | "ks-cutoff" => Ok(LlrAnchor::KsCutoff),
            _ => Err(VolumaError::DomainError(format!(
                "unknown LLR anchor {s:?} (expected min or tail)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub kinds: Vec<DistKind>,
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub fit: FitOptions,
    pub llr_anchor: LlrAnchor,
    /// LLR comparisons count only below this p-value.
    pub significance: f64,
    /// Bootstrap p-value above which the power law is plausible.
    pub plausibility: f64,
    /// Fit rates (bytes/s) instead of volumes (bytes per bin).
    pub use_rates: bool,
    pub anomaly: AnomalyThresholds,
    /// Link capacity in bytes/s for the anomaly screen; peak rate if unset.
    pub capacity: Option<f64>,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            kinds: DistKind::ALL.to_vec(),
            bootstrap_reps: 1000,
            seed: 42,
            fit: FitOptions::default(),
            llr_anchor: LlrAnchor::SampleMin,
            significance: 0.1,
            plausibility: 0.1,
            use_rates: false,
            anomaly: AnomalyThresholds::default(),
            capacity: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BestModel {
    Model(DistKind),
    Inconclusive,
}

impl BestModel {
    pub fn kind(self) -> Option<DistKind> {
        match self {
            BestModel::Model(k) => Some(k),
            BestModel::Inconclusive => None,
        }
    }
}

impl fmt::Display for BestModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BestModel::Model(k) => write!(f, "{k}"),
            BestModel::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

impl Serialize for BestModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BestModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inconclusive" {
            return Ok(BestModel::Inconclusive);
        }
        s.parse()
            .map(BestModel::Model)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub kind: DistKind,
    pub model: Option<DistributionModel>,
    pub ks: Option<f64>,
    pub ppcc: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawSection {
    pub model: DistributionModel,
    pub ks: f64,
    pub n_tail: usize,
    pub candidates: usize,
    pub bootstrap_reps: usize,
    /// Power law the LLR comparisons were run against.
    pub llr_anchor: Option<DistributionModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlrEntry {
    pub alternative: DistKind,
    /// Alternative refit on the comparison domain.
    pub refit: Option<DistributionModel>,
    pub result: Option<LlrResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEntry {
    pub result: LlrResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub source: String,
    pub timescale: f64,
    pub n: usize,
    pub sample: String,
    pub models: Vec<ModelFit>,
    pub power_law: Option<PowerLawSection>,
    pub bootstrap_p: Option<f64>,
    pub llr_vs_powerlaw: Vec<LlrEntry>,
    pub pairwise: Vec<PairwiseEntry>,
    pub best_model: BestModel,
    pub reason: String,
    pub anomaly: Option<AnomalyReport>,
}

impl FitReport {
    pub fn model(&self, kind: DistKind) -> Option<&DistributionModel> {
        self.models
            .iter()
            .find(|m| m.kind == kind)
            .and_then(|m| m.model.as_ref())
    }

    pub fn llr(&self, alternative: DistKind) -> Option<&LlrResult> {
        self.llr_vs_powerlaw
            .iter()
            .find(|e| e.alternative == alternative)
            .and_then(|e| e.result.as_ref())
    }

    /// Screen and select for one binned trace.
    pub fn for_series(vs: &VolumeSeries, opts: &SelectionOptions) -> Result<FitReport> {
        let samples: Vec<f64> = if opts.use_rates {
            vs.volumes.iter().map(|v| v / vs.timescale).collect()
        } else {
            vs.volumes.clone()
        };
        let mut report = select_model(&samples, opts)?;
        report.source = vs.source_label.clone();
        report.timescale = vs.timescale;
        report.sample = if opts.use_rates { "rates" } else { "volumes" }.to_string();
        report.anomaly = Some(match opts.capacity {
            Some(c) => anomaly_screen_with(vs, c, &opts.anomaly)?,
            None => anomaly_screen_observed(vs, &opts.anomaly),
        });
        Ok(report)
    }
}

fn dedup_kinds(kinds: &[DistKind]) -> Vec<DistKind> {
    let mut out: Vec<DistKind> = Vec::new();
    for k in kinds {
        if !out.contains(k) {
            out.push(*k);
        }
    }
    out
}

/// Run the selection procedure on raw samples.
pub fn select_model(samples: &[f64], opts: &SelectionOptions) -> Result<FitReport> {
    if samples.is_empty() {
        return Err(VolumaError::EmptyInput);
    }
    let kinds = dedup_kinds(&opts.kinds);
    let alternatives: Vec<DistKind> = kinds
        .iter()
        .copied()
        .filter(|k| *k != DistKind::PowerLaw)
        .collect();

    let pl_fit = fit_powerlaw_with(samples, &opts.fit);
    let mut models = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let fitted = if kind == DistKind::PowerLaw {
            pl_fit
                .as_ref()
                .map(|f| f.model)
                .map_err(ToString::to_string)
        } else {
            fit_mle_with(kind, samples, &opts.fit).map_err(|e| e.to_string())
        };
        models.push(match fitted {
            Ok(m) => {
                let ppcc_samples: Vec<f64> = match m {
                    DistributionModel::PowerLaw { xmin, .. } => {
                        samples.iter().copied().filter(|x| *x >= xmin).collect()
                    }
                    _ => samples.to_vec(),
                };
                let gamma = ppcc(&ppcc_samples, &m);
                ModelFit {
                    kind,
                    model: Some(m),
                    ks: Some(ks_statistic(samples, &m)),
                    ppcc: gamma.as_ref().ok().copied(),
                    error: gamma.err().map(|e| e.to_string()),
                }
            }
            Err(e) => ModelFit {
                kind,
                model: None,
                ks: None,
                ppcc: None,
                error: Some(e),
            },
        });
    }

    let (power_law, bootstrap_p) = match &pl_fit {
        Ok(fit) if opts.bootstrap_reps > 0 => {
            let boot =
                bootstrap_pvalue_with(samples, fit, opts.bootstrap_reps, opts.seed, &opts.fit)?;
            (Some(fit), Some(boot.p_value))
        }
        Ok(fit) => (Some(fit), None),
        Err(_) => (None, None),
    };

    let anchor = match opts.llr_anchor {
        LlrAnchor::KsCutoff => pl_fit
            .as_ref()
            .map(|f| f.model)
            .map_err(ToString::to_string),
        LlrAnchor::SampleMin => {
            let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
            fit_powerlaw_at(samples, min).map_err(|e| e.to_string())
        }
    };

    let mut llr_entries = Vec::with_capacity(alternatives.len());
    for &alt in &alternatives {
        let entry = match &anchor {
            Ok(pl) => match llr_vs_powerlaw(samples, pl, alt, &opts.fit) {
                Ok((refit, result)) => LlrEntry {
                    alternative: alt,
                    refit: Some(refit),
                    result: Some(result),
                    error: None,
                },
                Err(e) => LlrEntry {
                    alternative: alt,
                    refit: None,
                    result: None,
                    error: Some(e.to_string()),
                },
            },
            Err(e) => LlrEntry {
                alternative: alt,
                refit: None,
                result: None,
                error: Some(format!("no power-law anchor: {e}")),
            },
        };
        llr_entries.push(entry);
    }

    let qualifiers: Vec<(DistKind, f64)> = llr_entries
        .iter()
        .filter_map(|e| {
            let r = e.result?;
            (r.r_normalized < 0.0 && r.p_value < opts.significance)
                .then_some((e.alternative, r.r_normalized))
        })
        .collect();

    let full_fit = |k: DistKind| models.iter().find(|m| m.kind == k).and_then(|m| m.model);
    let mut pairwise = Vec::new();
    let mut dominated = vec![false; qualifiers.len()];
    for i in 0..qualifiers.len() {
        for j in i + 1..qualifiers.len() {
            let (Some(a), Some(b)) = (full_fit(qualifiers[i].0), full_fit(qualifiers[j].0)) else {
                continue;
            };
            let Ok(result) = llr_compare(samples, &a, &b) else {
                continue;
            };
            if result.p_value < opts.significance {
                if result.r_normalized > 0.0 {
                    dominated[j] = true;
                } else if result.r_normalized < 0.0 {
                    dominated[i] = true;
                }
            }
            pairwise.push(PairwiseEntry { result });
        }
    }

    let winner = qualifiers
        .iter()
        .zip(&dominated)
        .filter(|(_, d)| !**d)
        .map(|(q, _)| *q)
        .min_by(|a, b| a.1.total_cmp(&b.1));

    let (best_model, reason) = match (winner, qualifiers.is_empty()) {
        (Some((kind, r)), _) => (
            BestModel::Model(kind),
            format!("{kind} beats the power law (R = {r}) and no other qualifier beats it"),
        ),
        (None, false) => (
            BestModel::Inconclusive,
            "every qualifying alternative loses a pairwise comparison".to_string(),
        ),
        (None, true) => match bootstrap_p {
            Some(p) if p > opts.plausibility && kinds.contains(&DistKind::PowerLaw) => (
                BestModel::Model(DistKind::PowerLaw),
                format!("no alternative beats the power law and its bootstrap p = {p}"),
            ),
            Some(p) => (
                BestModel::Inconclusive,
                format!("no alternative beats the power law, which is implausible (p = {p})"),
            ),
            None => (
                BestModel::Inconclusive,
                "no significant comparison and no power-law bootstrap".to_string(),
            ),
        },
    };

    Ok(FitReport {
        source: String::new(),
        timescale: f64::NAN,
        n: samples.len(),
        sample: "values".to_string(),
        models,
        power_law: power_law.map(|f| PowerLawSection {
            model: f.model,
            ks: f.ks,
            n_tail: f.n_tail,
            candidates: f.candidates,
            bootstrap_reps: opts.bootstrap_reps,
            llr_anchor: anchor.as_ref().ok().copied(),
        }),
        bootstrap_p,
        llr_vs_powerlaw: llr_entries,
        pairwise,
        best_model,
        reason,
        anomaly: None,
    })
}
