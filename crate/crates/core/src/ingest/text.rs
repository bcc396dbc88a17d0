//! Plain-text packet lists and binned volume files.
//!
//! Packet CSV: `timestamp_seconds,wire_bytes` per line, `#` starts a comment.
//!
//! Volume TSV:
//!
//! ```text
//! # timescale_ms=100
//! # origin=1500000000.25
//! # source=capture-a
//! 1520
//! 0
//! 3040
//! ```
//!
//! The timescale line is mandatory and must come first; `origin` and
//! `source` are optional. Floats are written in shortest round-trip form.

use std::path::Path;

use crate::error::{Result, VolumaError};
use crate::output::write_atomic;
use crate::trace::{Packet, PacketSeries, VolumeSeries};

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| VolumaError::io(path, e))
}

pub fn read_packet_csv(path: &Path) -> Result<PacketSeries> {
    parse_packet_csv(&read_text(path)?, path.display().to_string())
}

pub fn parse_packet_csv(text: &str, source_label: String) -> Result<PacketSeries> {
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (Some(ts), Some(bytes), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(VolumaError::parse(
                line_no,
                "expected two comma-separated fields",
            ));
        };
        let timestamp: f64 = ts
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| VolumaError::parse(line_no, format!("bad timestamp {ts:?}")))?;
        let wire_bytes: u64 = bytes
            .parse()
            .map_err(|_| VolumaError::parse(line_no, format!("bad byte count {bytes:?}")))?;
        if wire_bytes < 1 {
            return Err(VolumaError::parse(line_no, "byte count must be at least 1"));
        }
        records.push(Packet {
            timestamp,
            wire_bytes,
        });
    }
    Ok(PacketSeries::new(records, source_label))
}

pub fn read_volume_tsv(path: &Path) -> Result<VolumeSeries> {
    let default_label = path.display().to_string();
    parse_volume_tsv(&read_text(path)?, default_label)
}

pub fn parse_volume_tsv(text: &str, default_label: String) -> Result<VolumeSeries> {
    let mut lines = text.lines().enumerate();
    let timescale_ms: f64 = lines
        .next()
        .and_then(|(_, l)| l.trim().strip_prefix("# timescale_ms="))
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| VolumaError::parse(1, "first line must be '# timescale_ms=<float>'"))?;
    let mut origin = 0.0;
    let mut label = default_label;
    let mut volumes = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("origin=") {
                origin = v
                    .trim()
                    .parse()
                    .map_err(|_| VolumaError::parse(line_no, format!("bad origin {v:?}")))?;
            } else if let Some(v) = comment.strip_prefix("source=") {
                label = v.to_string();
            }
            continue;
        }
        let field = line.split('\t').next().unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| VolumaError::parse(line_no, format!("bad volume {field:?}")))?;
        volumes.push(v);
    }
    VolumeSeries::new(timescale_ms / 1000.0, volumes, origin, label)
}

/// A millisecond value that divides back to exactly `timescale` seconds.
pub(crate) fn timescale_ms(timescale: f64) -> f64 {
    let mut ms = timescale * 1000.0;
    for _ in 0..8 {
        let back = ms / 1000.0;
        if back == timescale {
            break;
        }
        ms = if back < timescale {
            ms.next_up()
        } else {
            ms.next_down()
        };
    }
    ms
}

pub fn format_volume_tsv(vs: &VolumeSeries) -> String {
    let mut out = format!(
        "# timescale_ms={}\n# origin={}\n",
        timescale_ms(vs.timescale),
        vs.origin
    );
    if !vs.source_label.is_empty() && !vs.source_label.contains(['\n', '\r']) {
        out.push_str(&format!("# source={}\n", vs.source_label));
    }
    for v in &vs.volumes {
        out.push_str(&format!("{v}\n"));
    }
    out
}

pub fn write_volume_tsv(vs: &VolumeSeries, path: &Path) -> Result<()> {
    write_atomic(path, format_volume_tsv(vs).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let s = parse_packet_csv("0.05,100\n0.15,100", "x".into()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.records[1].timestamp, 0.15);
    }

    #[test]
    fn csv_comment_skipped() {
        let s = parse_packet_csv("# capture X\n0.05,100\n", "x".into()).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        match parse_packet_csv("1.0,abc", "x".into()) {
            Err(VolumaError::ParseError { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_packet_csv("# c\n1.0,10\n2.0,0\n", "x".into()) {
            Err(VolumaError::ParseError { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_packet_csv("1.0,-5", "x".into()).is_err());
        assert!(parse_packet_csv("1.0", "x".into()).is_err());
    }

    #[test]
    fn tsv_header_example() {
        let vs = parse_volume_tsv("# timescale_ms=100\n10\n20\n", "f".into()).unwrap();
        assert_eq!(vs.timescale, 0.1);
        assert_eq!(vs.volumes, vec![10.0, 20.0]);
        assert_eq!(vs.source_label, "f");
    }

    #[test]
    fn tsv_missing_header() {
        assert!(matches!(
            parse_volume_tsv("10\n20\n", "f".into()),
            Err(VolumaError::ParseError { line: 1, .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let vs = VolumeSeries::new(0.1, vec![1.5, 0.0, 3.0], 12.25, "a b").unwrap();
        let back = parse_volume_tsv(&format_volume_tsv(&vs), "other".into()).unwrap();
        assert_eq!(back, vs);
    }

    #[test]
    fn awkward_timescales_survive() {
        for t in [0.005, 0.3, 1.0 / 3.0, 7.77e-3, 123.456] {
            let vs = VolumeSeries::new(t, vec![1.0], 0.0, "").unwrap();
            let back = parse_volume_tsv(&format_volume_tsv(&vs), "".into()).unwrap();
            assert_eq!(back.timescale, t);
        }
    }
}
