//! Packet traces and their aggregation into per-interval volumes.
//!
//! A trace is binned on half-open intervals `[origin + iT, origin + (i+1)T)`
//! where the origin is the first packet's timestamp. Every bin up to the one
//! holding the last packet is materialized, including empty interior bins.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VolumaError};

/// Packets closer than this (in seconds) below a bin edge are assigned to the
/// upper bin. Classic pcap timestamps have microsecond resolution and an
/// epoch-scale `f64` carries roughly a quarter microsecond of rounding, so
/// half a microsecond separates "on the edge" from "just before it".
pub const BIN_EDGE_TOLERANCE: f64 = 5e-7;

/// Refuse to materialize absurd bin counts (e.g. a nanosecond timescale over
/// an hour-long capture).
const MAX_BINS: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Packet {
    /// Seconds since the epoch.
    pub timestamp: f64,
    /// Length on the wire, in bytes.
    pub wire_bytes: u64,
}

/// Ordered packet records from one capture.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PacketSeries {
    pub records: Vec<Packet>,
    pub source_label: String,
}

impl PacketSeries {
    pub fn new(records: Vec<Packet>, source_label: impl Into<String>) -> Self {
        PacketSeries {
            records,
            source_label: source_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_bytes(&self) -> u64 {
        self.records.iter().map(|p| p.wire_bytes).sum()
    }
}

/// Per-bin traffic volumes `A(T)` at a fixed timescale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSeries {
    /// Bin width in seconds.
    pub timescale: f64,
    /// Bytes observed in each bin.
    pub volumes: Vec<f64>,
    /// Timestamp of the start of bin 0.
    pub origin: f64,
    pub source_label: String,
}

impl VolumeSeries {
    pub fn new(
        timescale: f64,
        volumes: Vec<f64>,
        origin: f64,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        validate_timescale(timescale)?;
        if volumes.is_empty() {
            return Err(VolumaError::EmptyInput);
        }
        if let Some(bad) = volumes.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(VolumaError::DomainError(format!(
                "volume {bad} is not a finite non-negative byte count"
            )));
        }
        Ok(VolumeSeries {
            timescale,
            volumes,
            origin,
            source_label: source_label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.volumes.iter().sum()
    }
}

/// Mean rate and volume variance of a series, the inputs to Gaussian
/// dimensioning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    /// Bytes per second.
    pub mean_rate: f64,
    /// Population variance of the per-bin volumes, bytes squared.
    pub volume_variance: f64,
    pub timescale: f64,
}

fn validate_timescale(timescale: f64) -> Result<()> {
    if timescale > 0.0 && timescale.is_finite() {
        Ok(())
    } else {
        Err(VolumaError::DomainError(format!(
            "timescale must be a positive number of seconds, got {timescale}"
        )))
    }
}

fn bin_index(offset: f64, timescale: f64) -> usize {
    let q = offset / timescale;
    let up = q.ceil();
    if (up - q) * timescale <= BIN_EDGE_TOLERANCE {
        up as usize
    } else {
        q.floor() as usize
    }
}

/// Sum packet bytes into bins of width `timescale` seconds.
pub fn aggregate(trace: &PacketSeries, timescale: f64) -> Result<VolumeSeries> {
    validate_timescale(timescale)?;
    let first = trace.records.first().ok_or(VolumaError::EmptyInput)?;
    let origin = first.timestamp;
    let mut bins: Vec<u64> = Vec::new();
    let mut previous = origin;
    for (idx, packet) in trace.records.iter().enumerate() {
        if !packet.timestamp.is_finite() {
            return Err(VolumaError::MalformedTrace(format!(
                "record {idx} has a non-finite timestamp"
            )));
        }
        if packet.timestamp < previous {
            return Err(VolumaError::MalformedTrace(format!(
                "timestamp regresses at record {idx} ({} < {previous})",
                packet.timestamp
            )));
        }
        if packet.wire_bytes == 0 {
            return Err(VolumaError::MalformedTrace(format!(
                "record {idx} has zero wire bytes"
            )));
        }
        previous = packet.timestamp;
        let bin = bin_index(packet.timestamp - origin, timescale);
        if bin >= MAX_BINS {
            return Err(VolumaError::DomainError(format!(
                "timescale {timescale} s would need more than {MAX_BINS} bins"
            )));
        }
        if bin >= bins.len() {
            bins.resize(bin + 1, 0);
        }
        bins[bin] += packet.wire_bytes;
    }
    Ok(VolumeSeries {
        timescale,
        volumes: bins.into_iter().map(|b| b as f64).collect(),
        origin,
        source_label: trace.source_label.clone(),
    })
}

pub fn volume_stats(vs: &VolumeSeries) -> Result<SummaryStats> {
    let n = vs.volumes.len();
    if n < 2 {
        return Err(VolumaError::InsufficientData { need: 2, got: n });
    }
    let total: f64 = vs.volumes.iter().sum();
    let mean_volume = total / n as f64;
    let volume_variance = vs
        .volumes
        .iter()
        .map(|v| (v - mean_volume).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(SummaryStats {
        n,
        mean_rate: total / (n as f64 * vs.timescale),
        volume_variance,
        timescale: vs.timescale,
    })
}

/// Per-bin rates in bytes per second.
pub fn rates(vs: &VolumeSeries) -> Vec<f64> {
    vs.volumes.iter().map(|v| v / vs.timescale).collect()
}

/// Merge consecutive groups of `factor` bins. A trailing partial group is kept,
/// matching what [`aggregate`] produces at the coarser timescale.
pub fn rebin(vs: &VolumeSeries, factor: usize) -> Result<VolumeSeries> {
    if factor == 0 {
        return Err(VolumaError::DomainError("rebin factor must be >= 1".into()));
    }
    Ok(VolumeSeries {
        timescale: vs.timescale * factor as f64,
        volumes: vs.volumes.chunks(factor).map(|c| c.iter().sum()).collect(),
        origin: vs.origin,
        source_label: vs.source_label.clone(),
    })
}

/// Either raw packets or an already-binned series. Analyses that sweep
/// timescales go through [`Trace::at_timescale`].
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    Packets(PacketSeries),
    Volumes(VolumeSeries),
}

impl Trace {
    pub fn label(&self) -> &str {
        match self {
            Trace::Packets(p) => &p.source_label,
            Trace::Volumes(v) => &v.source_label,
        }
    }

    /// Bin the trace at `timescale`. Binned input can only be coarsened by an
    /// integer factor.
    pub fn at_timescale(&self, timescale: f64) -> Result<VolumeSeries> {
        validate_timescale(timescale)?;
        match self {
            Trace::Packets(p) => aggregate(p, timescale),
            Trace::Volumes(v) => {
                let ratio = timescale / v.timescale;
                let factor = ratio.round();
                if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
                    return Err(VolumaError::DomainError(format!(
                        "timescale {timescale} s is not an integer multiple of the series' {} s",
                        v.timescale
                    )));
                }
                let mut out = rebin(v, factor as usize)?;
                out.timescale = timescale;
                Ok(out)
            }
        }
    }
}
