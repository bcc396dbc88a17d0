//! Command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 when any trace came out inconclusive or
//! was flagged by the anomaly screen.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::billing::{billing_experiment, BillingConfig, Normalizer};
use crate::distributions::{DistKind, DistributionModel, FitOptions};
use crate::error::{Result, VolumaError};
use crate::gof::{
    anomaly_screen_observed, anomaly_screen_with, gamma_variation, qq_points, AnomalyReport,
    AnomalyThresholds, BestModel, FitReport, LlrAnchor, SelectionOptions,
};
use crate::ingest::text::{timescale_ms, write_volume_tsv};
use crate::ingest::{load_trace, PcapReadOptions};
use crate::output::{num, opt_num, write_atomic};
use crate::provisioning::{provisioning_experiment, DatasetScreen, Method, ProvisioningConfig};
use crate::synthgen::{gen_volumes, write_pcap, AnomalyKind, AnomalySpec, SynthSpec};
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FLAGGED: i32 = 2;

/// Parse a duration such as `100ms`, `5s`, `250us` or a bare number of
/// seconds.
pub fn parse_duration(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("bad duration {s:?}"))?;
    let secs = match unit.trim() {
        "" | "s" => v,
        "ms" => v / 1e3,
        "us" => v / 1e6,
        "ns" => v / 1e9,
        "min" => v * 60.0,
        other => return Err(format!("unknown time unit {other:?} in {s:?}")),
    };
    if secs > 0.0 && secs.is_finite() {
        Ok(secs)
    } else {
        Err(format!("duration must be positive, got {s:?}"))
    }
}

fn parse_kind(s: &str) -> std::result::Result<DistKind, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

fn parse_model(s: &str) -> std::result::Result<DistributionModel, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

fn parse_anomaly(s: &str) -> std::result::Result<AnomalySpec, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

fn parse_anchor(s: &str) -> std::result::Result<LlrAnchor, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

fn parse_normalizer(s: &str) -> std::result::Result<Normalizer, String> {
    s.parse().map_err(|e: VolumaError| e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "voluma",
    version,
    about = "Fit traffic-volume distributions to packet traces and use them for provisioning and billing",
    after_help = "Set VOLUMA_THREADS to cap the number of worker threads.\n\
                  Exit status: 0 ok, 1 error, 2 inconclusive or anomalous trace."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit candidate distributions and select the best model per trace.
    ///
    /// Writes, per trace and timescale, fit_T<ms>ms.json (the fit report),
    /// qq_<model>_T<ms>ms.tsv (theoretical, observed) and pdf_T<ms>ms.tsv
    /// (x, empirical density, one density column per fitted model). With
    /// several timescales also gamma.tsv (model, one PPCC column per
    /// timescale, upsilon) and gamma.json.
    Fit(FitArgs),
    /// Compare capacity estimates against the empirical exceedance rate.
    ///
    /// Writes provision.tsv (dataset, model, T_ms, epsilon, C_bps,
    /// epsilon_hat, abs_err; C_bps in bytes/s), provision_summary.tsv
    /// (model, T_ms, epsilon, traces, mean_epsilon_hat, mean_abs_err,
    /// stderr) and provision.json.
    Provision(ProvisionArgs),
    /// Predict percentile bills from fitted models and score them by NRMSE.
    ///
    /// Writes billing.tsv (trace, actual_bps, one predicted column per
    /// model), billing_scatter.tsv (trace, actual_bps, predicted_bps, kind),
    /// nrmse.json ({model: nrmse}) and billing.json.
    Bill(BillArgs),
    /// Generate seeded synthetic traces as volume TSV and optionally pcap.
    Synth(SynthArgs),
    /// Flag traces dominated by outage or saturation.
    ///
    /// Writes screen.tsv (dataset, T_ms, capacity_bps, outage_fraction,
    /// saturation_fraction, flagged) and screen.json.
    Screen(ScreenArgs),
    /// Tabulate existing fit reports.
    ///
    /// Writes report.tsv (source, T_ms, n, best_model, bootstrap_p, then
    /// R and p against the power law and PPCC for every model).
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Json,
    Both,
}

impl Format {
    fn tsv(self) -> bool {
        matches!(self, Format::Tsv | Format::Both)
    }

    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Trace files: .pcap/.cap captures, .csv packet lists, anything else a volume TSV.
    #[arg(long, short, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Accept capture timestamps that step back by at most this many seconds.
    #[arg(long, default_value_t = 0.0)]
    pub reorder_slack: f64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory.
    #[arg(long, short, default_value = "voluma-out")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ScreenThresholds {
    /// Link capacity in bytes/s for the anomaly screen (default: peak observed rate).
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Bins at or below this fraction of capacity count as outage.
    #[arg(long, default_value_t = 0.01)]
    pub outage_threshold: f64,
    /// Bins at or above this fraction of capacity count as saturated.
    #[arg(long, default_value_t = 0.95)]
    pub saturation_threshold: f64,
    /// Flag a trace when either fraction exceeds this.
    #[arg(long, default_value_t = 0.05)]
    pub critical_fraction: f64,
}

impl ScreenThresholds {
    fn thresholds(&self) -> AnomalyThresholds {
        AnomalyThresholds {
            outage: self.outage_threshold,
            saturation: self.saturation_threshold,
            critical_fraction: self.critical_fraction,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Aggregation timescales, e.g. 5ms 100ms 1s 5s.
    #[arg(long, short, num_args = 1.., value_parser = parse_duration, default_values = ["100ms"])]
    pub timescale: Vec<f64>,
    /// Candidate distributions.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind,
          default_value = "lognormal,gaussian,weibull,exponential,powerlaw")]
    pub dists: Vec<DistKind>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap_reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Power-law cutoff for LLR comparisons: `min` (sample minimum) or `tail` (KS-selected).
    #[arg(long, value_parser = parse_anchor, default_value = "min")]
    pub llr_anchor: LlrAnchor,
    /// Fit rates (bytes/s) instead of volumes (bytes per bin).
    #[arg(long)]
    pub rates: bool,
    /// Minimum sample count for fitting.
    #[arg(long, default_value_t = 8)]
    pub min_samples: usize,
    /// Histogram bins in the PDF table.
    #[arg(long, default_value_t = 50)]
    pub pdf_bins: usize,
    #[command(flatten)]
    pub screen: ScreenThresholds,
}

#[derive(Debug, Args)]
pub struct ProvisionArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, short, num_args = 1.., value_parser = parse_duration,
          default_values = ["100ms", "500ms", "1s"])]
    pub timescale: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.1, 0.05, 0.01])]
    pub epsilon: Vec<f64>,
    /// Methods: meent and/or model names.
    #[arg(long, value_delimiter = ',', value_parser = parse_method, default_value = "meent,lognormal,weibull")]
    pub dists: Vec<Method>,
    #[arg(long, default_value_t = 8)]
    pub min_samples: usize,
    #[command(flatten)]
    pub screen: ScreenThresholds,
}

#[derive(Debug, Args)]
pub struct BillArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Timescale the models are fitted at.
    #[arg(long, short, value_parser = parse_duration, default_value = "100ms")]
    pub timescale: f64,
    /// Billing group length.
    #[arg(long, value_parser = parse_duration, default_value = "10s")]
    pub group: f64,
    #[arg(long, default_value_t = 95.0)]
    pub percentile: f64,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "lognormal,weibull,gaussian")]
    pub dists: Vec<DistKind>,
    /// NRMSE normalizer: mean or range of the actual values.
    #[arg(long, value_parser = parse_normalizer, default_value = "mean")]
    pub normalizer: Normalizer,
    #[arg(long, default_value_t = 8)]
    pub min_samples: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Model, e.g. lognormal:mu=2,sigma=0.5 or weibull:1.5,2.
    #[arg(long, value_parser = parse_model)]
    pub dist: DistributionModel,
    #[arg(long, default_value_t = 9000)]
    pub bins: usize,
    #[arg(long, short, value_parser = parse_duration, default_value = "100ms")]
    pub timescale: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Number of traces; trace k uses seed + k.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    /// Inject an anomaly block: outage:<fraction> or saturation:<fraction>.
    #[arg(long, value_parser = parse_anomaly)]
    pub anomaly: Option<AnomalySpec>,
    /// Link capacity in bytes/s for saturation blocks.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Round volumes to whole bytes.
    #[arg(long)]
    pub integer: bool,
    /// Also write a pcap per trace (implies --integer).
    #[arg(long)]
    pub pcap: bool,
    #[arg(long, default_value_t = 1500)]
    pub packet_size: u32,
    /// Timestamp of the first bin, seconds.
    #[arg(long, default_value_t = 0.0)]
    pub origin: f64,
    /// File name prefix.
    #[arg(long, default_value = "synth")]
    pub name: String,
    #[arg(long, short, default_value = "voluma-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, short, value_parser = parse_duration, default_value = "100ms")]
    pub timescale: f64,
    #[command(flatten)]
    pub screen: ScreenThresholds,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Fit report JSON files.
    #[arg(long, short, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, short, default_value = "voluma-out")]
    pub out: PathBuf,
}

/// Configure the global worker pool from `VOLUMA_THREADS`.
pub fn init_threads() {
    if let Some(n) = std::env::var("VOLUMA_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        // a pool may already exist when embedded; keep it
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn main() -> i32 {
    init_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("voluma: {e}");
            EXIT_ERROR
        }
    }
}

pub fn run(command: Command) -> Result<i32> {
    match command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Provision(a) => cmd_provision(&a),
        Command::Bill(a) => cmd_bill(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Screen(a) => cmd_screen(&a),
        Command::Report(a) => cmd_report(&a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| VolumaError::DomainError(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn load_all(inputs: &InputArgs) -> Result<Vec<Trace>> {
    let opts = PcapReadOptions {
        reorder_slack: inputs.reorder_slack,
    };
    inputs.input.iter().map(|p| load_trace(p, &opts)).collect()
}

/// Per-input directory names, unique even when stems collide.
fn trace_dirs(inputs: &[PathBuf]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    inputs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .filter(|s| !s.is_empty())
                .unwrap_or("trace")
                .to_string();
            if seen.insert(stem.clone()) {
                stem
            } else {
                format!("{stem}-{i}")
            }
        })
        .collect()
}

fn ms_tag(timescale: f64) -> String {
    format!("T{}ms", timescale_ms(timescale))
}

fn pdf_table(samples: &[f64], report: &FitReport, bins: usize) -> String {
    let models: Vec<(DistKind, DistributionModel)> = report
        .models
        .iter()
        .filter_map(|m| Some((m.kind, m.model?)))
        .collect();
    let mut out = String::from("x\tempirical");
    for (k, _) in &models {
        out.push_str(&format!("\t{k}"));
    }
    out.push('\n');
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = bins.max(1);
    if !(hi > lo) {
        return out;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    for (b, c) in counts.iter().enumerate() {
        let x = lo + (b as f64 + 0.5) * width;
        out.push_str(&format!("{}\t{}", num(x), num(*c as f64 / (n * width))));
        for (_, m) in &models {
            out.push_str(&format!("\t{}", num(m.pdf(x))));
        }
        out.push('\n');
    }
    out
}

fn qq_table(samples: &[f64], model: &DistributionModel) -> Result<String> {
    let domain: Vec<f64> = match *model {
        DistributionModel::PowerLaw { xmin, .. } => {
            samples.iter().copied().filter(|x| *x >= xmin).collect()
        }
        _ => samples.to_vec(),
    };
    let mut out = String::from("theoretical\tobserved\n");
    for (t, o) in qq_points(&domain, model)? {
        out.push_str(&format!("{}\t{}\n", num(t), num(o)));
    }
    Ok(out)
}

#[derive(Serialize)]
struct GammaRow {
    kind: DistKind,
    /// (timescale seconds, PPCC)
    gamma: Vec<(f64, Option<f64>)>,
    upsilon: Option<f64>,
}

fn cmd_fit(a: &FitArgs) -> Result<i32> {
    let traces = load_all(&a.inputs)?;
    let dirs = trace_dirs(&a.inputs.input);
    let opts = SelectionOptions {
        kinds: a.dists.clone(),
        bootstrap_reps: a.bootstrap_reps,
        seed: a.seed,
        fit: FitOptions {
            min_samples: a.min_samples,
            ..FitOptions::default()
        },
        llr_anchor: a.llr_anchor,
        use_rates: a.rates,
        anomaly: a.screen.thresholds(),
        capacity: a.screen.capacity,
        ..SelectionOptions::default()
    };
    let mut code = EXIT_OK;
    for (trace, dir) in traces.iter().zip(&dirs) {
        let dir = a.output.out.join(dir);
        let mut per_t = Vec::with_capacity(a.timescale.len());
        for &t in &a.timescale {
            let vs = trace.at_timescale(t)?;
            let report = FitReport::for_series(&vs, &opts)?;
            let samples: Vec<f64> = if a.rates {
                vs.volumes.iter().map(|v| v / t).collect()
            } else {
                vs.volumes.clone()
            };
            let tag = ms_tag(t);
            write_json(&dir.join(format!("fit_{tag}.json")), &report)?;
            write_atomic(
                &dir.join(format!("pdf_{tag}.tsv")),
                pdf_table(&samples, &report, a.pdf_bins).as_bytes(),
            )?;
            for m in &report.models {
                if let Some(model) = &m.model {
                    if let Ok(table) = qq_table(&samples, model) {
                        write_atomic(
                            &dir.join(format!("qq_{}_{tag}.tsv", m.kind)),
                            table.as_bytes(),
                        )?;
                    }
                }
            }
            let flagged = report.anomaly.is_some_and(|r| r.flagged);
            if report.best_model == BestModel::Inconclusive || flagged {
                code = EXIT_FLAGGED;
            }
            println!(
                "{}\tT={}ms\tbest={}\tanomalous={}",
                trace.label(),
                timescale_ms(t),
                report.best_model,
                flagged
            );
            per_t.push(report);
        }
        if per_t.len() >= 2 {
            write_gamma(&dir, &a.dists, &per_t, a.output.format)?;
        }
    }
    Ok(code)
}

fn write_gamma(
    dir: &Path,
    kinds: &[DistKind],
    reports: &[FitReport],
    format: Format,
) -> Result<()> {
    let mut rows = Vec::new();
    for &kind in kinds {
        if rows.iter().any(|r: &GammaRow| r.kind == kind) {
            continue;
        }
        let gamma: Vec<(f64, Option<f64>)> = reports
            .iter()
            .map(|r| {
                let g = r
                    .models
                    .iter()
                    .find(|m| m.kind == kind)
                    .and_then(|m| m.ppcc);
                (r.timescale, g)
            })
            .collect();
        let values: Option<Vec<f64>> = gamma.iter().map(|(_, g)| *g).collect();
        let upsilon = values.and_then(|v| gamma_variation(&v).ok());
        rows.push(GammaRow {
            kind,
            gamma,
            upsilon,
        });
    }
    if format.tsv() {
        let mut s = String::from("model");
        for r in reports {
            s.push_str(&format!("\t{}", ms_tag(r.timescale)));
        }
        s.push_str("\tupsilon\n");
        for row in &rows {
            s.push_str(&row.kind.to_string());
            for (_, g) in &row.gamma {
                s.push_str(&format!("\t{}", opt_num(*g)));
            }
            s.push_str(&format!("\t{}\n", opt_num(row.upsilon)));
        }
        write_atomic(&dir.join("gamma.tsv"), s.as_bytes())?;
    }
    if format.json() {
        write_json(&dir.join("gamma.json"), &rows)?;
    }
    Ok(())
}

fn screen_traces(
    traces: &[Trace],
    timescale: f64,
    screen: &ScreenThresholds,
) -> Result<Vec<DatasetScreen>> {
    let th = screen.thresholds();
    traces
        .iter()
        .map(|t| {
            let vs = t.at_timescale(timescale)?;
            let anomaly: AnomalyReport = match screen.capacity {
                Some(c) => anomaly_screen_with(&vs, c, &th)?,
                None => anomaly_screen_observed(&vs, &th),
            };
            Ok(DatasetScreen {
                dataset: t.label().to_string(),
                anomaly,
            })
        })
        .collect()
}

fn cmd_provision(a: &ProvisionArgs) -> Result<i32> {
    let traces = load_all(&a.inputs)?;
    let config = ProvisioningConfig {
        methods: a.dists.clone(),
        epsilons: a.epsilon.clone(),
        timescales: a.timescale.clone(),
        fit: FitOptions {
            min_samples: a.min_samples,
            ..FitOptions::default()
        },
    };
    let mut table = provisioning_experiment(&traces, &config)?;
    let mut code = EXIT_OK;
    if a.screen.capacity.is_some() {
        table.screens = screen_traces(&traces, a.timescale[0], &a.screen)?;
        if table.screens.iter().any(|s| s.anomaly.flagged) {
            code = EXIT_FLAGGED;
        }
    }
    for r in table.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "voluma: {} {} eps={} T={}ms: {}",
            r.dataset,
            r.model,
            r.epsilon,
            timescale_ms(r.timescale),
            r.error.as_deref().unwrap_or_default()
        );
    }
    let out = &a.output.out;
    if a.output.format.tsv() {
        write_atomic(&out.join("provision.tsv"), table.to_tsv().as_bytes())?;
        write_atomic(
            &out.join("provision_summary.tsv"),
            table.summary_tsv().as_bytes(),
        )?;
    }
    if a.output.format.json() {
        write_json(&out.join("provision.json"), &table)?;
    }
    Ok(code)
}

fn cmd_bill(a: &BillArgs) -> Result<i32> {
    let traces = load_all(&a.inputs)?;
    let config = BillingConfig {
        kinds: a.dists.clone(),
        group_duration: a.group,
        fit_timescale: a.timescale,
        percentile: a.percentile,
        normalizer: a.normalizer,
        fit: FitOptions {
            min_samples: a.min_samples,
            ..FitOptions::default()
        },
    };
    let table = billing_experiment(&traces, &config)?;
    for r in &table.records {
        if let Some(e) = &r.error {
            eprintln!("voluma: {}: {e}", r.trace_label);
        }
    }
    for s in &table.scores {
        println!("{}\tnrmse={}", s.kind, opt_num(s.nrmse));
    }
    let out = &a.output.out;
    if a.output.format.tsv() {
        write_atomic(&out.join("billing.tsv"), table.to_tsv().as_bytes())?;
        write_atomic(
            &out.join("billing_scatter.tsv"),
            table.scatter_tsv().as_bytes(),
        )?;
    }
    if a.output.format.json() {
        let scores: serde_json::Map<String, serde_json::Value> = table
            .scores
            .iter()
            .map(|s| (s.kind.to_string(), serde_json::json!(s.nrmse)))
            .collect();
        write_json(&out.join("nrmse.json"), &scores)?;
        write_json(&out.join("billing.json"), &table)?;
    }
    Ok(EXIT_OK)
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let anomaly = match a.anomaly {
        Some(spec) if spec.kind == AnomalyKind::Saturation => {
            let capacity = a.capacity.ok_or_else(|| {
                VolumaError::DomainError("saturation anomalies need --capacity".into())
            })?;
            Some(AnomalySpec { capacity, ..spec })
        }
        other => other,
    };
    for k in 0..a.count {
        let seed = a.seed.wrapping_add(k);
        let name = format!("{}-{k}", a.name);
        let spec = SynthSpec {
            anomaly,
            integer: a.integer || a.pcap,
            origin: a.origin,
            label: name.clone(),
            ..SynthSpec::new(a.dist, a.bins, a.timescale, seed)
        };
        let out = gen_volumes(&spec)?;
        write_volume_tsv(&out.series, &a.out.join(format!("{name}.tsv")))?;
        let mut line = format!("{name}\tbins={}\tclamped={}", out.series.len(), out.clamped);
        if let Some(start) = out.anomaly_start {
            line.push_str(&format!("\tanomaly_start={start}"));
        }
        if a.pcap {
            let packets = write_pcap(
                &out.series,
                &a.out.join(format!("{name}.pcap")),
                a.packet_size,
            )?;
            line.push_str(&format!("\tpackets={packets}"));
        }
        println!("{line}");
    }
    Ok(EXIT_OK)
}

fn cmd_screen(a: &ScreenArgs) -> Result<i32> {
    let traces = load_all(&a.inputs)?;
    let screens = screen_traces(&traces, a.timescale, &a.screen)?;
    let out = &a.output.out;
    if a.output.format.tsv() {
        let mut s = String::from(
            "dataset\tT_ms\tcapacity_bps\toutage_fraction\tsaturation_fraction\tflagged\n",
        );
        for d in &screens {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                d.dataset.replace(['\t', '\n'], " "),
                timescale_ms(a.timescale),
                num(d.anomaly.capacity_used),
                num(d.anomaly.outage_fraction),
                num(d.anomaly.saturation_fraction),
                d.anomaly.flagged
            ));
        }
        write_atomic(&out.join("screen.tsv"), s.as_bytes())?;
    }
    if a.output.format.json() {
        write_json(&out.join("screen.json"), &screens)?;
    }
    for d in &screens {
        println!(
            "{}\toutage={}\tsaturation={}\tflagged={}",
            d.dataset, d.anomaly.outage_fraction, d.anomaly.saturation_fraction, d.anomaly.flagged
        );
    }
    Ok(if screens.iter().any(|d| d.anomaly.flagged) {
        EXIT_FLAGGED
    } else {
        EXIT_OK
    })
}

fn cmd_report(a: &ReportArgs) -> Result<i32> {
    let mut reports = Vec::new();
    for path in &a.input {
        let text = std::fs::read_to_string(path).map_err(|e| VolumaError::io(path, e))?;
        let report: FitReport =
            serde_json::from_str(&text).map_err(|e| VolumaError::parse(e.line(), e.to_string()))?;
        reports.push(report);
    }
    let mut s = String::from("source\tT_ms\tn\tbest_model\tbootstrap_p");
    for k in DistKind::ALL.iter().filter(|k| **k != DistKind::PowerLaw) {
        s.push_str(&format!("\tR_{k}\tp_{k}"));
    }
    for k in DistKind::ALL {
        s.push_str(&format!("\tppcc_{k}"));
    }
    s.push('\n');
    let mut code = EXIT_OK;
    for r in &reports {
        if r.best_model == BestModel::Inconclusive || r.anomaly.is_some_and(|a| a.flagged) {
            code = EXIT_FLAGGED;
        }
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}",
            r.source.replace(['\t', '\n'], " "),
            timescale_ms(r.timescale),
            r.n,
            r.best_model,
            opt_num(r.bootstrap_p)
        ));
        for k in DistKind::ALL.iter().filter(|k| **k != DistKind::PowerLaw) {
            let l = r.llr(*k);
            s.push_str(&format!(
                "\t{}\t{}",
                opt_num(l.map(|l| l.r_normalized)),
                opt_num(l.map(|l| l.p_value))
            ));
        }
        for k in DistKind::ALL {
            let g = r.models.iter().find(|m| m.kind == k).and_then(|m| m.ppcc);
            s.push_str(&format!("\t{}", opt_num(g)));
        }
        s.push('\n');
    }
    print!("{s}");
    write_atomic(&a.out.join("report.tsv"), s.as_bytes())?;
    Ok(code)
}
