//! Classic libpcap capture files.
//!
//! Layout: a 24-byte global header (magic, version, thiszone, sigfigs,
//! snaplen, linktype) followed by records of a 16-byte header (ts_sec,
//! ts_frac, incl_len, orig_len) and `incl_len` captured bytes. The magic
//! number selects byte order and whether `ts_frac` counts microseconds or
//! nanoseconds. pcapng is not handled.

use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VolumaError};
use crate::output::write_atomic;
use crate::trace::{Packet, PacketSeries};

pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
/// Larger captured lengths are treated as corruption rather than allocated.
const MAX_INCL_LEN: u32 = 256 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endianness {
    Big,
    Little,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TsResolution {
    Microsecond,
    Nanosecond,
}

impl TsResolution {
    fn ticks_per_second(self) -> f64 {
        match self {
            TsResolution::Microsecond => 1e6,
            TsResolution::Nanosecond => 1e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcapHeaderInfo {
    pub endianness: Endianness,
    pub ts_resolution: TsResolution,
    pub version_major: u16,
    pub version_minor: u16,
    pub snaplen: u32,
    pub linktype: u32,
}

impl PcapHeaderInfo {
    fn u32_from(&self, b: [u8; 4]) -> u32 {
        match self.endianness {
            Endianness::Little => u32::from_le_bytes(b),
            Endianness::Big => u32::from_be_bytes(b),
        }
    }
}

/// Parse the 24-byte global header.
pub fn parse_pcap_header(bytes: &[u8; GLOBAL_HEADER_LEN]) -> Result<PcapHeaderInfo> {
    let magic = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let (endianness, ts_resolution) = match magic {
        MAGIC_MICROS => (Endianness::Little, TsResolution::Microsecond),
        0xd4c3_b2a1 => (Endianness::Big, TsResolution::Microsecond),
        MAGIC_NANOS => (Endianness::Little, TsResolution::Nanosecond),
        0x4d3c_b2a1 => (Endianness::Big, TsResolution::Nanosecond),
        other => {
            return Err(VolumaError::UnsupportedFormat(format!(
                "unrecognized pcap magic 0x{other:08x}"
            )))
        }
    };
    let u16_at = |i: usize| match endianness {
        Endianness::Little => u16::from_le_bytes([bytes[i], bytes[i + 1]]),
        Endianness::Big => u16::from_be_bytes([bytes[i], bytes[i + 1]]),
    };
    let u32_at = |i: usize| {
        let b = [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
        match endianness {
            Endianness::Little => u32::from_le_bytes(b),
            Endianness::Big => u32::from_be_bytes(b),
        }
    };
    Ok(PcapHeaderInfo {
        endianness,
        ts_resolution,
        version_major: u16_at(4),
        version_minor: u16_at(6),
        snaplen: u32_at(16),
        linktype: u32_at(20),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcapReadOptions {
    /// How far (seconds) a timestamp may fall behind the latest one seen
    /// before the file is rejected. Out-of-order records within the slack are
    /// re-sorted.
    pub reorder_slack: f64,
}

impl Default for PcapReadOptions {
    fn default() -> Self {
        PcapReadOptions { reorder_slack: 0.0 }
    }
}

pub fn read_pcap(path: &Path) -> Result<PacketSeries> {
    read_pcap_with(path, &PcapReadOptions::default())
}

pub fn read_pcap_with(path: &Path, options: &PcapReadOptions) -> Result<PacketSeries> {
    let file = File::open(path).map_err(|e| VolumaError::io(path, e))?;
    let (_, series) = parse_pcap(BufReader::new(file), path.display().to_string(), options)
        .map_err(|e| match e {
            VolumaError::Io { source, .. } => VolumaError::io(path, source),
            other => other,
        })?;
    Ok(series)
}

/// Fill `buf` from `reader`, stopping early only at end of input.
fn read_up_to(reader: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Stream a capture from any reader. Never reads past a record's declared
/// captured length.
pub fn parse_pcap<R: Read>(
    mut reader: R,
    source_label: String,
    options: &PcapReadOptions,
) -> Result<(PcapHeaderInfo, PacketSeries)> {
    let io_err = |e| VolumaError::io(source_label.clone(), e);
    let mut header = [0u8; GLOBAL_HEADER_LEN];
    let got = read_up_to(&mut reader, &mut header).map_err(io_err)?;
    if got < 4 {
        return Err(VolumaError::UnsupportedFormat(
            "file too short for a pcap magic number".into(),
        ));
    }
    // check the magic before complaining about length
    let mut magic_only = [0u8; GLOBAL_HEADER_LEN];
    magic_only[..4].copy_from_slice(&header[..4]);
    parse_pcap_header(&magic_only)?;
    if got < GLOBAL_HEADER_LEN {
        return Err(VolumaError::TruncatedFile { offset: 0 });
    }
    let info = parse_pcap_header(&header)?;
    let ticks = info.ts_resolution.ticks_per_second();

    let mut records = Vec::new();
    let mut offset = GLOBAL_HEADER_LEN as u64;
    let mut latest = f64::NEG_INFINITY;
    let mut reordered = false;
    loop {
        let mut rec = [0u8; RECORD_HEADER_LEN];
        let got = read_up_to(&mut reader, &mut rec).map_err(io_err)?;
        if got == 0 {
            break;
        }
        if got < RECORD_HEADER_LEN {
            return Err(VolumaError::TruncatedFile { offset });
        }
        let field = |i: usize| info.u32_from([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]);
        let (ts_sec, ts_frac, incl_len, orig_len) = (field(0), field(4), field(8), field(12));
        if incl_len > MAX_INCL_LEN {
            return Err(VolumaError::MalformedTrace(format!(
                "record at byte {offset} claims {incl_len} captured bytes"
            )));
        }
        let skipped =
            io::copy(&mut (&mut reader).take(incl_len as u64), &mut io::sink()).map_err(io_err)?;
        if skipped < incl_len as u64 {
            return Err(VolumaError::TruncatedFile { offset });
        }
        if orig_len == 0 {
            return Err(VolumaError::MalformedTrace(format!(
                "record at byte {offset} has zero original length"
            )));
        }
        let timestamp = ts_sec as f64 + ts_frac as f64 / ticks;
        if timestamp < latest {
            if timestamp < latest - options.reorder_slack {
                return Err(VolumaError::MalformedTrace(format!(
                    "timestamp regresses at byte {offset} ({timestamp} < {latest})"
                )));
            }
            reordered = true;
        }
        latest = latest.max(timestamp);
        records.push(Packet {
            timestamp,
            wire_bytes: orig_len as u64,
        });
        offset += (RECORD_HEADER_LEN as u64) + incl_len as u64;
    }
    if records.is_empty() {
        return Err(VolumaError::EmptyInput);
    }
    if reordered {
        records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    }
    Ok((info, PacketSeries::new(records, source_label)))
}

/// One record as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcapRecord {
    pub ts_sec: u32,
    /// Microseconds or nanoseconds depending on the file's resolution.
    pub ts_frac: u32,
    pub orig_len: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PcapWriteOptions {
    pub endianness: Endianness,
    pub ts_resolution: TsResolution,
    pub snaplen: u32,
    pub linktype: u32,
}

impl Default for PcapWriteOptions {
    fn default() -> Self {
        PcapWriteOptions {
            endianness: Endianness::Little,
            ts_resolution: TsResolution::Microsecond,
            snaplen: 64,
            linktype: 1,
        }
    }
}

/// Streaming writer. Captured payloads are zero bytes truncated to `snaplen`.
pub struct PcapWriter<W: Write> {
    out: W,
    options: PcapWriteOptions,
    scratch: Vec<u8>,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut out: W, options: PcapWriteOptions) -> io::Result<Self> {
        let magic = match options.ts_resolution {
            TsResolution::Microsecond => MAGIC_MICROS,
            TsResolution::Nanosecond => MAGIC_NANOS,
        };
        let mut header = Vec::with_capacity(GLOBAL_HEADER_LEN);
        let put32 = |h: &mut Vec<u8>, v: u32| match options.endianness {
            Endianness::Little => h.extend_from_slice(&v.to_le_bytes()),
            Endianness::Big => h.extend_from_slice(&v.to_be_bytes()),
        };
        let put16 = |h: &mut Vec<u8>, v: u16| match options.endianness {
            Endianness::Little => h.extend_from_slice(&v.to_le_bytes()),
            Endianness::Big => h.extend_from_slice(&v.to_be_bytes()),
        };
        put32(&mut header, magic);
        put16(&mut header, 2);
        put16(&mut header, 4);
        put32(&mut header, 0);
        put32(&mut header, 0);
        put32(&mut header, options.snaplen);
        put32(&mut header, options.linktype);
        out.write_all(&header)?;
        Ok(PcapWriter {
            out,
            options,
            scratch: Vec::new(),
        })
    }

    pub fn write_record(&mut self, record: &PcapRecord) -> io::Result<()> {
        let incl = record.orig_len.min(self.options.snaplen);
        self.scratch.clear();
        for v in [record.ts_sec, record.ts_frac, incl, record.orig_len] {
            match self.options.endianness {
                Endianness::Little => self.scratch.extend_from_slice(&v.to_le_bytes()),
                Endianness::Big => self.scratch.extend_from_slice(&v.to_be_bytes()),
            }
        }
        self.scratch.resize(RECORD_HEADER_LEN + incl as usize, 0);
        self.out.write_all(&self.scratch)
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Write records to `path`, replacing any existing file atomically.
pub fn write_pcap_records(
    path: &Path,
    records: impl IntoIterator<Item = PcapRecord>,
    options: PcapWriteOptions,
) -> Result<usize> {
    let mut writer = PcapWriter::new(Vec::new(), options).map_err(|e| VolumaError::io(path, e))?;
    let mut count = 0;
    for r in records {
        writer
            .write_record(&r)
            .map_err(|e| VolumaError::io(path, e))?;
        count += 1;
    }
    let bytes = writer.finish().map_err(|e| VolumaError::io(path, e))?;
    write_atomic(path, &bytes)?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn capture(records: &[PcapRecord], options: PcapWriteOptions) -> Vec<u8> {
        let mut w = PcapWriter::new(Vec::new(), options).unwrap();
        for r in records {
            w.write_record(r).unwrap();
        }
        w.finish().unwrap()
    }

    fn parse(bytes: &[u8]) -> Result<PacketSeries> {
        parse_pcap(bytes, "mem".into(), &PcapReadOptions::default()).map(|(_, s)| s)
    }

    const TWO: [PcapRecord; 2] = [
        PcapRecord {
            ts_sec: 10,
            ts_frac: 250_000,
            orig_len: 60,
        },
        PcapRecord {
            ts_sec: 10,
            ts_frac: 750_000,
            orig_len: 1514,
        },
    ];

    #[test]
    fn little_endian_round_trip() {
        let bytes = capture(&TWO, PcapWriteOptions::default());
        assert_eq!(&bytes[..4], &[0xd4, 0xc3, 0xb2, 0xa1]);
        let s = parse(&bytes).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.records[0].wire_bytes, 60);
        assert_eq!(s.records[1].wire_bytes, 1514);
        assert_eq!(s.records[0].timestamp, 10.25);
    }

    #[test]
    fn big_endian_reads_identically() {
        let le = parse(&capture(&TWO, PcapWriteOptions::default())).unwrap();
        let be_bytes = capture(
            &TWO,
            PcapWriteOptions {
                endianness: Endianness::Big,
                ..Default::default()
            },
        );
        assert_eq!(&be_bytes[..4], &[0xa1, 0xb2, 0xc3, 0xd4]);
        assert_eq!(parse(&be_bytes).unwrap(), le);
    }

    #[test]
    fn nanosecond_magic() {
        let opts = PcapWriteOptions {
            ts_resolution: TsResolution::Nanosecond,
            ..Default::default()
        };
        let bytes = capture(
            &[PcapRecord {
                ts_sec: 1,
                ts_frac: 500,
                orig_len: 40,
            }],
            opts,
        );
        let (info, s) = parse_pcap(&bytes[..], "mem".into(), &PcapReadOptions::default()).unwrap();
        assert_eq!(info.ts_resolution, TsResolution::Nanosecond);
        assert!((s.records[0].timestamp - 1.0000005).abs() < 1e-15);
    }

    #[test]
    fn header_fields() {
        let bytes = capture(&TWO, PcapWriteOptions::default());
        let info = parse_pcap_header(bytes[..24].try_into().unwrap()).unwrap();
        assert_eq!(info.version_major, 2);
        assert_eq!(info.version_minor, 4);
        assert_eq!(info.snaplen, 64);
        assert_eq!(info.linktype, 1);
    }

    #[test]
    fn unknown_magic() {
        let mut bytes = capture(&TWO, PcapWriteOptions::default());
        bytes[0] = 0x0a;
        assert!(matches!(
            parse(&bytes),
            Err(VolumaError::UnsupportedFormat(_))
        ));
        // pcapng section header block
        assert!(matches!(
            parse(&[0x0a, 0x0d, 0x0d, 0x0a, 0, 0, 0, 0]),
            Err(VolumaError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn truncated_record_reports_offset() {
        let bytes = capture(&TWO, PcapWriteOptions::default());
        let first_len = 16 + 60;
        // cut inside the second record's payload
        let cut = &bytes[..24 + first_len + 16 + 10];
        match parse(cut) {
            Err(VolumaError::TruncatedFile { offset }) => {
                assert_eq!(offset, (24 + first_len) as u64)
            }
            other => panic!("unexpected {other:?}"),
        }
        // cut inside a record header
        assert!(matches!(
            parse(&bytes[..24 + 5]),
            Err(VolumaError::TruncatedFile { offset: 24 })
        ));
    }

    #[test]
    fn empty_capture() {
        let bytes = capture(&[], PcapWriteOptions::default());
        assert!(matches!(parse(&bytes), Err(VolumaError::EmptyInput)));
    }

    #[test]
    fn regressing_timestamps() {
        let recs = [TWO[1], TWO[0]];
        let bytes = capture(&recs, PcapWriteOptions::default());
        assert!(matches!(parse(&bytes), Err(VolumaError::MalformedTrace(_))));
        let (_, s) = parse_pcap(
            &bytes[..],
            "mem".into(),
            &PcapReadOptions { reorder_slack: 1.0 },
        )
        .unwrap();
        assert!(s.records[0].timestamp < s.records[1].timestamp);
    }
}
