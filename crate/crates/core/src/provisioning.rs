//! Link capacity under the transparency criterion `P(A(T) >= C T) <= eps`.
//!
//! Two estimators: Meent's Gaussian rule
//!
//! ```text
//! C1 = mu + (1/T) sqrt(-2 ln(eps) v(T))
//! ```
//!
//! with `mu` the mean rate and `v(T)` the volume variance, and the model
//! quantile `C2 = F^-1(1 - eps)` of a distribution fitted to rates.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{fit_mle_with, DistKind, DistributionModel, FitOptions};
use crate::error::{Result, VolumaError};
use crate::gof::AnomalyReport;
use crate::ingest::text::timescale_ms;
use crate::output::{num, opt_num};
use crate::trace::{rates, volume_stats, SummaryStats, Trace, VolumeSeries};

pub const DEFAULT_EPSILONS: [f64; 4] = [0.5, 0.1, 0.05, 0.01];
pub const DEFAULT_TIMESCALES: [f64; 3] = [0.1, 0.5, 1.0];

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(VolumaError::DomainError(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

/// Headroom above the mean rate in Meent's formula, bytes/s.
pub fn safety_margin(stats: &SummaryStats, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let t = stats.timescale;
    Ok((-2.0 * epsilon.ln()).sqrt() * (stats.volume_variance / (t * t)).sqrt())
}

/// Meent's Gaussian dimensioning rule, bytes/s.
pub fn capacity_meent(stats: &SummaryStats, epsilon: f64) -> Result<f64> {
    Ok(stats.mean_rate + safety_margin(stats, epsilon)?)
}

/// The `1 - eps` quantile of a model fitted to rates, bytes/s.
pub fn capacity_quantile(model: &DistributionModel, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    model.quantile(1.0 - epsilon)
}

/// Share of bins whose volume reaches `capacity * T`; ties count.
pub fn empirical_epsilon(vs: &VolumeSeries, capacity: f64) -> Result<f64> {
    if !(capacity > 0.0) {
        return Err(VolumaError::DomainError(format!(
            "capacity must be positive, got {capacity}"
        )));
    }
    let threshold = capacity * vs.timescale;
    let hits = vs.volumes.iter().filter(|v| **v >= threshold).count();
    Ok(hits as f64 / vs.volumes.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Meent,
    Quantile(DistKind),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Meent => f.write_str("meent"),
            Method::Quantile(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for Method {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("meent") {
            Ok(Method::Meent)
        } else {
            s.parse().map(Method::Quantile)
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningResult {
    pub dataset: String,
    pub model: Method,
    pub timescale: f64,
    pub epsilon: f64,
    /// bytes/s
    pub capacity: Option<f64>,
    pub epsilon_hat: Option<f64>,
    pub abs_err: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: Method,
    pub timescale: f64,
    pub epsilon: f64,
    pub traces: usize,
    pub mean_epsilon_hat: f64,
    pub mean_abs_err: f64,
    /// Sample standard deviation of `|eps - eps_hat|` over `sqrt(traces)`.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetScreen {
    pub dataset: String,
    pub anomaly: AnomalyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningTable {
    pub rows: Vec<ProvisioningResult>,
    pub summary: Vec<SummaryRow>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub screens: Vec<DatasetScreen>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvisioningConfig {
    pub methods: Vec<Method>,
    pub epsilons: Vec<f64>,
    pub timescales: Vec<f64>,
    pub fit: FitOptions,
}

impl Default for ProvisioningConfig {
    fn default() -> Self {
        ProvisioningConfig {
            methods: vec![
                Method::Meent,
                Method::Quantile(DistKind::LogNormal),
                Method::Quantile(DistKind::Weibull),
            ],
            epsilons: DEFAULT_EPSILONS.to_vec(),
            timescales: DEFAULT_TIMESCALES.to_vec(),
            fit: FitOptions::default(),
        }
    }
}

/// Capacities for every epsilon from one method on one binned series.
fn capacities(
    vs: &VolumeSeries,
    method: Method,
    epsilons: &[f64],
    fit: &FitOptions,
) -> Result<Vec<f64>> {
    match method {
        Method::Meent => {
            let stats = volume_stats(vs)?;
            epsilons
                .iter()
                .map(|&e| capacity_meent(&stats, e))
                .collect()
        }
        Method::Quantile(kind) => {
            let model = fit_mle_with(kind, &rates(vs), fit)?;
            epsilons
                .iter()
                .map(|&e| capacity_quantile(&model, e))
                .collect()
        }
    }
}

/// Every (method, epsilon, timescale) cell for each trace, in that order
/// within a trace. Failures are recorded per cell.
pub fn provisioning_experiment(
    traces: &[Trace],
    config: &ProvisioningConfig,
) -> Result<ProvisioningTable> {
    for &e in &config.epsilons {
        check_epsilon(e)?;
    }
    let cells: Vec<(usize, usize)> = (0..traces.len())
        .flat_map(|i| (0..config.timescales.len()).map(move |j| (i, j)))
        .collect();

    // per cell: [method][epsilon] -> (capacity, epsilon_hat) or error text
    type Cell = Vec<std::result::Result<Vec<(f64, f64)>, String>>;
    let computed: Vec<Cell> = cells
        .par_iter()
        .map(|&(i, j)| {
            let vs = traces[i].at_timescale(config.timescales[j]);
            config
                .methods
                .iter()
                .map(|&method| {
                    let vs = vs.as_ref().map_err(|e| e.to_string())?;
                    let caps = capacities(vs, method, &config.epsilons, &config.fit)
                        .map_err(|e| e.to_string())?;
                    caps.into_iter()
                        .map(|c| Ok((c, empirical_epsilon(vs, c)?)))
                        .collect::<Result<Vec<_>>>()
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let n_t = config.timescales.len();
    let mut rows = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        for (m, &method) in config.methods.iter().enumerate() {
            for (e, &epsilon) in config.epsilons.iter().enumerate() {
                for (j, &timescale) in config.timescales.iter().enumerate() {
                    let base = ProvisioningResult {
                        dataset: trace.label().to_string(),
                        model: method,
                        timescale,
                        epsilon,
                        capacity: None,
                        epsilon_hat: None,
                        abs_err: None,
                        error: None,
                    };
                    rows.push(match &computed[i * n_t + j][m] {
                        Ok(values) => {
                            let (c, hat) = values[e];
                            ProvisioningResult {
                                capacity: Some(c),
                                epsilon_hat: Some(hat),
                                abs_err: Some((epsilon - hat).abs()),
                                ..base
                            }
                        }
                        Err(msg) => ProvisioningResult {
                            error: Some(msg.clone()),
                            ..base
                        },
                    });
                }
            }
        }
    }

    let summary = summarize(&rows, config);
    Ok(ProvisioningTable {
        rows,
        summary,
        screens: Vec::new(),
    })
}

fn summarize(rows: &[ProvisioningResult], config: &ProvisioningConfig) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &method in &config.methods {
        for &epsilon in &config.epsilons {
            for &timescale in &config.timescales {
                let (hats, errs): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| {
                        r.model == method && r.epsilon == epsilon && r.timescale == timescale
                    })
                    .filter_map(|r| Some((r.epsilon_hat?, r.abs_err?)))
                    .unzip();
                if hats.is_empty() {
                    continue;
                }
                let k = hats.len() as f64;
                let mean_abs_err = errs.iter().sum::<f64>() / k;
                let stderr = (hats.len() >= 2).then(|| {
                    let ss: f64 = errs.iter().map(|e| (e - mean_abs_err).powi(2)).sum();
                    (ss / (k - 1.0)).sqrt() / k.sqrt()
                });
                out.push(SummaryRow {
                    model: method,
                    timescale,
                    epsilon,
                    traces: hats.len(),
                    mean_epsilon_hat: hats.iter().sum::<f64>() / k,
                    mean_abs_err,
                    stderr,
                });
            }
        }
    }
    out
}

impl ProvisioningTable {
    /// Columns: dataset, model, T_ms, epsilon, C_bps, epsilon_hat, abs_err.
    /// `C_bps` is bytes per second; failed cells print `NA`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("dataset\tmodel\tT_ms\tepsilon\tC_bps\tepsilon_hat\tabs_err\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.dataset.replace(['\t', '\n'], " "),
                r.model,
                timescale_ms(r.timescale),
                num(r.epsilon),
                opt_num(r.capacity),
                opt_num(r.epsilon_hat),
                opt_num(r.abs_err)
            ));
        }
        s
    }

    /// Columns: model, T_ms, epsilon, traces, mean_epsilon_hat, mean_abs_err, stderr.
    pub fn summary_tsv(&self) -> String {
        let mut s =
            String::from("model\tT_ms\tepsilon\ttraces\tmean_epsilon_hat\tmean_abs_err\tstderr\n");
        for r in &self.summary {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                r.model,
                timescale_ms(r.timescale),
                num(r.epsilon),
                r.traces,
                num(r.mean_epsilon_hat),
                num(r.mean_abs_err),
                opt_num(r.stderr)
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample;

    fn stats(mean_rate: f64, t: f64, v: f64) -> SummaryStats {
        SummaryStats {
            n: 100,
            mean_rate,
            volume_variance: v,
            timescale: t,
        }
    }

    #[test]
    fn meent_example() {
        let c = capacity_meent(&stats(100.0, 1.0, 25.0), 0.01).unwrap();
        let expected = 100.0 + (-2.0 * 0.01f64.ln() * 25.0).sqrt();
        assert!((c - expected).abs() < 1e-12);
        assert!((c - 115.174).abs() < 1e-3);
    }

    #[test]
    fn meent_limits() {
        let s = stats(80.0, 0.1, 0.0);
        assert_eq!(capacity_meent(&s, 0.01).unwrap(), 80.0);
        let s = stats(80.0, 0.1, 9.0);
        let near_one = capacity_meent(&s, 1.0 - 1e-15).unwrap();
        assert!((near_one - 80.0).abs() < 1e-5);
        assert!(capacity_meent(&s, 1.0).is_err());
        assert!(capacity_meent(&s, 0.0).is_err());
    }

    #[test]
    fn margin_identities() {
        let s = stats(50.0, 0.5, 16.0);
        let m = safety_margin(&s, (-0.5f64).exp()).unwrap();
        assert!((m - 4.0 / 0.5).abs() < 1e-12);
        for eps in [0.5, 0.1, 1e-3] {
            assert_eq!(
                capacity_meent(&s, eps).unwrap(),
                s.mean_rate + safety_margin(&s, eps).unwrap()
            );
        }
        let r = safety_margin(&s, 1e-4).unwrap() / safety_margin(&s, 1e-2).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn quantile_examples() {
        let ln = DistributionModel::log_normal(1.3, 0.4).unwrap();
        assert!((capacity_quantile(&ln, 0.5).unwrap() - 1.3f64.exp()).abs() < 1e-12);
        let ln = DistributionModel::log_normal(0.0, 1.0).unwrap();
        assert!((capacity_quantile(&ln, 0.05).unwrap() - 5.180_251_602_233).abs() < 1e-9);
        let w = DistributionModel::weibull(1.0, 1.0).unwrap();
        assert!((capacity_quantile(&w, 0.01).unwrap() - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empirical_examples() {
        let vs = VolumeSeries::new(1.0, vec![1.0, 2.0, 3.0, 10.0], 0.0, "").unwrap();
        assert_eq!(empirical_epsilon(&vs, 5.0).unwrap(), 0.25);
        assert_eq!(empirical_epsilon(&vs, 11.0).unwrap(), 0.0);
        let vs = VolumeSeries::new(0.5, vec![5.0, 5.0], 0.0, "").unwrap();
        assert_eq!(empirical_epsilon(&vs, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn experiment_shape_and_order() {
        let m = DistributionModel::log_normal(8.0, 0.5).unwrap();
        let vs = VolumeSeries::new(0.1, sample(&m, 3000, 3), 0.0, "a").unwrap();
        let cfg = ProvisioningConfig::default();
        let table = provisioning_experiment(&[Trace::Volumes(vs)], &cfg).unwrap();
        assert_eq!(table.rows.len(), 3 * 4 * 3);
        assert_eq!(table.rows[0].model, Method::Meent);
        assert_eq!(table.rows[1].timescale, 0.5);
        assert_eq!(table.rows[3].epsilon, 0.1);
        assert!(table.rows.iter().all(|r| r.error.is_none()));
        assert!(table.summary.iter().all(|s| s.stderr.is_none()));
        assert_eq!(table.to_tsv().lines().count(), 37);
    }

    #[test]
    fn failed_cells_do_not_sink_the_table() {
        let vs = VolumeSeries::new(0.1, vec![0.0; 40], 0.0, "dead").unwrap();
        let cfg = ProvisioningConfig {
            timescales: vec![0.1],
            epsilons: vec![0.1],
            ..ProvisioningConfig::default()
        };
        let table = provisioning_experiment(&[Trace::Volumes(vs)], &cfg).unwrap();
        assert_eq!(table.rows.len(), 3);
        assert!(table.rows[1].error.is_some());
        assert!(table.to_tsv().contains("NA"));
    }
}
