//! Reading traces from disk.

pub mod pcap;
pub mod text;

use std::path::Path;

pub use pcap::{read_pcap, read_pcap_with, PcapHeaderInfo, PcapReadOptions};
pub use text::{read_packet_csv, read_volume_tsv, write_volume_tsv};

use crate::error::Result;
use crate::trace::Trace;

/// Load a trace, choosing the reader from the file extension: `.pcap`/`.cap`
/// for captures, `.csv` for packet lists, anything else as a volume TSV.
pub fn load_trace(path: &Path, options: &PcapReadOptions) -> Result<Trace> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("pcap") | Some("cap") => Ok(Trace::Packets(read_pcap_with(path, options)?)),
        Some("csv") => Ok(Trace::Packets(read_packet_csv(path)?)),
        _ => Ok(Trace::Volumes(read_volume_tsv(path)?)),
    }
}
