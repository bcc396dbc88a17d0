//! Seeded synthetic traces: i.i.d. volumes from a model, optional outage or
//! saturation blocks, and packet captures that bin back to the same volumes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{sample_with, DistributionModel};
use crate::error::{Result, VolumaError};
use crate::ingest::pcap::{write_pcap_records, PcapRecord, PcapWriteOptions};
use crate::rng::{open01, stream_rng};
use crate::trace::VolumeSeries;

const VOLUME_STREAM: u64 = 0;
const ANOMALY_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnomalyKind {
    Outage,
    Saturation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    pub kind: AnomalyKind,
    pub fraction: f64,
    /// bytes/s; saturated bins carry `capacity * T`.
    pub capacity: f64,
}

impl fmt::Display for AnomalySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            AnomalyKind::Outage => "outage",
            AnomalyKind::Saturation => "saturation",
        };
        write!(f, "{kind}:{}", self.fraction)
    }
}

/// `outage:0.1` or `saturation:0.1`. The capacity is filled in separately.
impl FromStr for AnomalySpec {
    type Err = VolumaError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || VolumaError::DomainError(format!("bad anomaly spec {s:?}"));
        let (kind, frac) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind.trim() {
            "outage" => AnomalyKind::Outage,
            "saturation" => AnomalyKind::Saturation,
            _ => return Err(bad()),
        };
        let fraction: f64 = frac.trim().parse().map_err(|_| bad())?;
        AnomalySpec {
            kind,
            fraction,
            capacity: 0.0,
        }
        .validated_fraction()
    }
}

impl AnomalySpec {
    fn validated_fraction(self) -> Result<Self> {
        if self.fraction > 0.0 && self.fraction <= 1.0 {
            Ok(self)
        } else {
            Err(VolumaError::DomainError(format!(
                "anomaly fraction must lie in (0, 1], got {}",
                self.fraction
            )))
        }
    }

    fn validated(self) -> Result<Self> {
        let s = self.validated_fraction()?;
        if s.kind == AnomalyKind::Saturation && !(s.capacity > 0.0 && s.capacity.is_finite()) {
            return Err(VolumaError::DomainError(format!(
                "saturation needs a positive capacity, got {}",
                s.capacity
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub model: DistributionModel,
    pub n_bins: usize,
    /// seconds
    pub timescale: f64,
    pub seed: u64,
    pub anomaly: Option<AnomalySpec>,
    /// Round volumes to whole bytes.
    pub integer: bool,
    pub origin: f64,
    pub label: String,
}

impl SynthSpec {
    pub fn new(model: DistributionModel, n_bins: usize, timescale: f64, seed: u64) -> Self {
        SynthSpec {
            model,
            n_bins,
            timescale,
            seed,
            anomaly: None,
            integer: false,
            origin: 0.0,
            label: format!("synth-{}-{seed}", model.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub series: VolumeSeries,
    /// Draws below zero that were clamped to zero.
    pub clamped: usize,
    /// First bin of the injected block, if any.
    pub anomaly_start: Option<usize>,
}

/// Draw `n_bins` volumes, clamp negatives to zero, optionally round, then
/// inject the anomaly block.
pub fn gen_volumes(spec: &SynthSpec) -> Result<SynthOutput> {
    if spec.n_bins == 0 {
        return Err(VolumaError::DomainError("n_bins must be at least 1".into()));
    }
    let model = spec.model.validated()?;
    let mut rng = stream_rng(spec.seed, VOLUME_STREAM);
    let mut volumes = sample_with(&model, spec.n_bins, &mut rng);
    let mut clamped = 0;
    for v in &mut volumes {
        if *v < 0.0 {
            *v = 0.0;
            clamped += 1;
        }
    }
    let mut series = VolumeSeries::new(spec.timescale, volumes, spec.origin, spec.label.clone())?;
    if spec.integer {
        series = integerize(&series);
    }
    let mut anomaly_start = None;
    if let Some(a) = spec.anomaly {
        let (s, start) = inject_anomaly(&series, &a, spec.seed)?;
        series = s;
        anomaly_start = Some(start);
    }
    Ok(SynthOutput {
        series,
        clamped,
        anomaly_start,
    })
}

/// Round every volume to the nearest whole byte.
pub fn integerize(vs: &VolumeSeries) -> VolumeSeries {
    VolumeSeries {
        volumes: vs.volumes.iter().map(|v| v.round()).collect(),
        ..vs.clone()
    }
}

/// Overwrite a contiguous block of `round(fraction * n)` bins, placed by
/// `seed`, with zero (outage) or `capacity * T` (saturation). Returns the
/// altered series and the block's first bin.
pub fn inject_anomaly(
    vs: &VolumeSeries,
    anomaly: &AnomalySpec,
    seed: u64,
) -> Result<(VolumeSeries, usize)> {
    let anomaly = anomaly.validated()?;
    let n = vs.volumes.len();
    let k = ((anomaly.fraction * n as f64).round() as usize).min(n);
    let slots = n - k + 1;
    let mut rng = stream_rng(seed, ANOMALY_STREAM);
    let start = ((open01(&mut rng) * slots as f64) as usize).min(slots - 1);
    let value = match anomaly.kind {
        AnomalyKind::Outage => 0.0,
        AnomalyKind::Saturation => anomaly.capacity * vs.timescale,
    };
    let mut out = vs.clone();
    out.volumes[start..start + k]
        .iter_mut()
        .for_each(|v| *v = value);
    Ok((out, start))
}

/// Packets for one bin of `volume` bytes: full packets of `packet_size`
/// plus one remainder packet.
fn split_volume(volume: u64, packet_size: u64) -> impl Iterator<Item = u64> {
    let full = volume / packet_size;
    let rem = volume % packet_size;
    (0..full)
        .map(move |_| packet_size)
        .chain((rem > 0).then_some(rem))
}

/// Emit the series as a little-endian microsecond pcap. Bin `i` spans
/// `[origin + i T, origin + (i+1) T)` rounded to microseconds and its `m`
/// packets sit at `start + floor(j * width / m)`. Volumes must be whole
/// bytes; reading the file back and binning at `T` reproduces them as long
/// as the first and last bins are non-empty. Returns the packet count.
pub fn write_pcap(vs: &VolumeSeries, path: &Path, packet_size: u32) -> Result<usize> {
    if packet_size == 0 {
        return Err(VolumaError::DomainError(
            "packet size must be at least 1".into(),
        ));
    }
    if let Some(bad) = vs
        .volumes
        .iter()
        .find(|v| v.fract() != 0.0 || **v < 0.0 || **v > 9.0e15)
    {
        return Err(VolumaError::DomainError(format!(
            "pcap output needs whole-byte volumes, found {bad}"
        )));
    }
    let base_us = (vs.origin * 1e6).round();
    if !(base_us >= 0.0) {
        return Err(VolumaError::DomainError(format!(
            "origin {} is before the pcap epoch",
            vs.origin
        )));
    }
    let edge = |i: usize| base_us as u64 + (i as f64 * vs.timescale * 1e6).round() as u64;
    let last_edge = edge(vs.volumes.len());
    if last_edge / 1_000_000 > u32::MAX as u64 {
        return Err(VolumaError::DomainError(
            "trace ends past the pcap time range".into(),
        ));
    }
    let size = packet_size as u64;
    let records = vs.volumes.iter().enumerate().flat_map(move |(i, &v)| {
        let start = edge(i);
        let width = edge(i + 1) - start;
        let volume = v as u64;
        let m = volume.div_ceil(size);
        split_volume(volume, size).enumerate().map(move |(j, len)| {
            let ts = start + (j as u128 * width as u128 / m as u128) as u64;
            PcapRecord {
                ts_sec: (ts / 1_000_000) as u32,
                ts_frac: (ts % 1_000_000) as u32,
                orig_len: len as u32,
            }
        })
    });
    write_pcap_records(path, records, PcapWriteOptions::default())
}
