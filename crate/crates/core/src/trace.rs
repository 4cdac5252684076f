//! Memory-access traces at last-level-cache granularity.
//!
//! Two on-disk encodings are supported: a fixed-width little-endian binary
//! format (`EDRTRACE`, version 1) and a line-oriented CSV format for
//! hand-written fixtures. See `docs/FORMATS.md` for the byte layout.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 8] = *b"EDRTRACE";
pub const FORMAT_VERSION: u32 = 1;
pub const RECORD_BYTES: usize = 16;
pub const DEFAULT_PAGE_BYTES: u32 = 4096;

/// Block size used by the synthetic generator when laying out working sets.
pub const SYNTHETIC_BLOCK_BYTES: u64 = 64;
const RECENT_BLOCKS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    fn to_byte(self) -> u8 {
        match self {
            Op::Read => 0,
            Op::Write => 1,
        }
    }

    fn from_byte(b: u8) -> Option<Op> {
        match b {
            0 => Some(Op::Read),
            1 => Some(Op::Write),
            _ => None,
        }
    }
}

/// One memory access. `instr_gap` counts instructions retired since the
/// previous record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceRecord {
    pub instr_gap: u32,
    pub op: Op,
    pub address: u64,
}

impl TraceRecord {
    pub fn new(instr_gap: u32, op: Op, address: u64) -> Self {
        Self {
            instr_gap,
            op,
            address,
        }
    }

    pub fn read(instr_gap: u32, address: u64) -> Self {
        Self::new(instr_gap, Op::Read, address)
    }

    pub fn write(instr_gap: u32, address: u64) -> Self {
        Self::new(instr_gap, Op::Write, address)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub version: u32,
    pub record_count: u64,
    pub page_size_bytes: u32,
    pub description: String,
}

impl TraceHeader {
    pub fn new(record_count: u64, description: impl Into<String>) -> Self {
        Self {
            version: FORMAT_VERSION,
            record_count,
            page_size_bytes: DEFAULT_PAGE_BYTES,
            description: description.into(),
        }
    }

    /// Encoded length in bytes: magic, version, count, page size, string length, string.
    pub fn encoded_len(&self) -> usize {
        8 + 4 + 8 + 4 + 4 + self.description.len()
    }
}

/// Total instructions covered by a record sequence.
pub fn total_instructions(records: &[TraceRecord]) -> u64 {
    records.iter().map(|r| u64::from(r.instr_gap)).sum()
}

struct CountingWriter<W> {
    inner: W,
    offset: u64,
}

impl<W: Write> CountingWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.inner.write_all(bytes).map_err(|source| Error::Io {
            offset: self.offset,
            source,
        })?;
        self.offset += bytes.len() as u64;
        Ok(())
    }
}

/// Writes `header` followed by the fixed-width records. Returns the number
/// of bytes emitted.
pub fn write_trace<W: Write>(records: &[TraceRecord], header: &TraceHeader, sink: W) -> Result<u64> {
    if header.record_count != records.len() as u64 {
        return Err(Error::InvalidInput(format!(
            "header declares {} records but {} were supplied",
            header.record_count,
            records.len()
        )));
    }
    if !header.page_size_bytes.is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "page size {} is not a power of two",
            header.page_size_bytes
        )));
    }
    let desc_len = u32::try_from(header.description.len())
        .map_err(|_| Error::InvalidInput("description too long".into()))?;

    let mut w = CountingWriter {
        inner: sink,
        offset: 0,
    };
    w.put(&MAGIC)?;
    w.put(&header.version.to_le_bytes())?;
    w.put(&header.record_count.to_le_bytes())?;
    w.put(&header.page_size_bytes.to_le_bytes())?;
    w.put(&desc_len.to_le_bytes())?;
    w.put(header.description.as_bytes())?;

    let mut buf = [0u8; RECORD_BYTES];
    for r in records {
        buf[0..4].copy_from_slice(&r.instr_gap.to_le_bytes());
        buf[4] = r.op.to_byte();
        buf[5..8].fill(0);
        buf[8..16].copy_from_slice(&r.address.to_le_bytes());
        w.put(&buf)?;
    }
    w.inner.flush().map_err(|source| Error::Io {
        offset: w.offset,
        source,
    })?;
    Ok(w.offset)
}

fn read_exact_or<R: Read>(src: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    src.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated header ({what})"))
        } else {
            Error::Io {
                offset: 0,
                source: e,
            }
        }
    })
}

/// Lazily decoded record stream following a binary header.
pub struct Records<R> {
    source: R,
    remaining: u64,
    index: u64,
    failed: bool,
}

impl<R: Read> Iterator for Records<R> {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 || self.failed {
            return None;
        }
        let index = self.index;
        let mut buf = [0u8; RECORD_BYTES];
        let mut filled = 0;
        while filled < RECORD_BYTES {
            match self.source.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(source) => {
                    self.failed = true;
                    return Some(Err(Error::Io {
                        offset: index * RECORD_BYTES as u64,
                        source,
                    }));
                }
            }
        }
        self.failed = filled < RECORD_BYTES;
        if self.failed {
            return Some(Err(Error::Corrupt {
                index,
                reason: format!("truncated record ({filled} of {RECORD_BYTES} bytes)"),
            }));
        }
        let Some(op) = Op::from_byte(buf[4]) else {
            self.failed = true;
            return Some(Err(Error::Corrupt {
                index,
                reason: format!("unknown op byte {:#04x}", buf[4]),
            }));
        };
        if buf[5..8] != [0, 0, 0] {
            self.failed = true;
            return Some(Err(Error::Corrupt {
                index,
                reason: "non-zero padding".into(),
            }));
        }
        self.remaining -= 1;
        self.index += 1;
        Some(Ok(TraceRecord {
            instr_gap: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
            op,
            address: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
        }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (0, Some(n))
    }
}

/// Parses the header and returns a lazy iterator over the records.
pub fn read_trace<R: Read>(mut source: R) -> Result<(TraceHeader, Records<R>)> {
    let mut magic = [0u8; 8];
    read_exact_or(&mut source, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", String::from_utf8_lossy(&magic))));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    read_exact_or(&mut source, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    read_exact_or(&mut source, &mut b8, "record count")?;
    let record_count = u64::from_le_bytes(b8);
    read_exact_or(&mut source, &mut b4, "page size")?;
    let page_size_bytes = u32::from_le_bytes(b4);
    if !page_size_bytes.is_power_of_two() {
        return Err(Error::Format(format!("page size {page_size_bytes} is not a power of two")));
    }
    read_exact_or(&mut source, &mut b4, "description length")?;
    let desc_len = u32::from_le_bytes(b4) as usize;
    let mut desc = vec![0u8; desc_len];
    read_exact_or(&mut source, &mut desc, "description")?;
    let description =
        String::from_utf8(desc).map_err(|_| Error::Format("description is not UTF-8".into()))?;

    let header = TraceHeader {
        version,
        record_count,
        page_size_bytes,
        description,
    };
    let records = Records {
        source,
        remaining: record_count,
        index: 0,
        failed: false,
    };
    Ok((header, records))
}

/// Line iterator over `instr_gap,op,hex_address` text.
pub struct CsvRecords<R> {
    lines: io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Iterator for CsvRecords<R> {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(source) => return Some(Err(Error::Io { offset: 0, source })),
            };
            self.line_no += 1;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            return Some(parse_csv_line(text).map_err(|reason| Error::Parse {
                line: self.line_no,
                reason,
            }));
        }
    }
}

fn parse_csv_line(text: &str) -> std::result::Result<TraceRecord, String> {
    let fields: Vec<&str> = text.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(format!("expected 3 fields, found {}", fields.len()));
    }
    let instr_gap = fields[0]
        .parse::<u32>()
        .map_err(|e| format!("bad instr_gap {:?}: {e}", fields[0]))?;
    let op = match fields[1] {
        "R" | "r" => Op::Read,
        "W" | "w" => Op::Write,
        other => return Err(format!("bad op {other:?}, expected R or W")),
    };
    let hex = fields[2]
        .strip_prefix("0x")
        .or_else(|| fields[2].strip_prefix("0X"))
        .unwrap_or(fields[2]);
    let address =
        u64::from_str_radix(hex, 16).map_err(|e| format!("bad address {:?}: {e}", fields[2]))?;
    Ok(TraceRecord {
        instr_gap,
        op,
        address,
    })
}

pub fn read_csv_trace<R: BufRead>(source: R) -> CsvRecords<R> {
    CsvRecords {
        lines: source.lines(),
        line_no: 0,
    }
}

/// Loads a whole trace file, detecting binary vs CSV by the magic bytes.
pub fn load_trace_file(path: &Path) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let file = File::open(path).map_err(|source| Error::Io { offset: 0, source })?;
    let mut reader = BufReader::new(file);
    let is_binary = {
        let head = reader.fill_buf().map_err(|source| Error::Io { offset: 0, source })?;
        head.len() >= MAGIC.len() && head[..MAGIC.len()] == MAGIC
    };
    if is_binary {
        let (header, records) = read_trace(reader)?;
        let records = records.collect::<Result<Vec<_>>>()?;
        Ok((header, records))
    } else {
        let records = read_csv_trace(reader).collect::<Result<Vec<_>>>()?;
        let header = TraceHeader::new(records.len() as u64, path.display().to_string());
        Ok((header, records))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub instruction_count: u64,
    pub working_set_bytes: u64,
    #[serde(default)]
    pub write_fraction: f64,
    #[serde(default)]
    pub reuse_locality: f64,
}

/// Parameters of a phased synthetic workload. Each phase touches its own
/// contiguous, page-aligned working set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTraceSpec {
    #[serde(rename = "phase")]
    pub phases: Vec<PhaseSpec>,
    #[serde(default)]
    pub rng_seed: u64,
    pub accesses_per_kilo_instr: f64,
    #[serde(default)]
    pub description: String,
}

impl SyntheticTraceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InvalidSpec("at least one phase is required".into()));
        }
        if !(self.accesses_per_kilo_instr.is_finite() && self.accesses_per_kilo_instr > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "accesses_per_kilo_instr must be positive, got {}",
                self.accesses_per_kilo_instr
            )));
        }
        for (i, p) in self.phases.iter().enumerate() {
            if p.instruction_count == 0 {
                return Err(Error::InvalidSpec(format!("phase {i}: instruction_count is 0")));
            }
            if p.working_set_bytes == 0 {
                return Err(Error::InvalidSpec(format!("phase {i}: working_set_bytes is 0")));
            }
            for (name, v) in [("write_fraction", p.write_fraction), ("reuse_locality", p.reuse_locality)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidSpec(format!("phase {i}: {name} {v} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Base address of phase `index`'s working set. Phases live 4 GiB apart.
    pub fn phase_base(index: usize) -> u64 {
        (index as u64 + 1) << 32
    }

    pub fn header(&self, record_count: u64) -> TraceHeader {
        let description = if self.description.is_empty() {
            format!("synthetic, {} phases, seed {}", self.phases.len(), self.rng_seed)
        } else {
            self.description.clone()
        };
        TraceHeader::new(record_count, description)
    }
}

/// Generates the trace described by `spec`. Pure in the spec: the same spec
/// (including seed) always yields the same records.
pub fn generate_synthetic(spec: &SyntheticTraceSpec) -> Result<Vec<TraceRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut out = Vec::new();
    let mut recent: VecDeque<u64> = VecDeque::with_capacity(RECENT_BLOCKS);

    for (i, phase) in spec.phases.iter().enumerate() {
        let base = SyntheticTraceSpec::phase_base(i);
        let blocks = phase.working_set_bytes.div_ceil(SYNTHETIC_BLOCK_BYTES);
        let n = ((phase.instruction_count as f64) * spec.accesses_per_kilo_instr / 1000.0).round();
        let n = (n as u64).max(1);
        recent.clear();

        let instrs = u128::from(phase.instruction_count);
        let mut prev_pos = 0u128;
        for j in 0..n {
            let pos = (u128::from(j) + 1) * instrs / u128::from(n);
            let gap = u32::try_from(pos - prev_pos).map_err(|_| {
                Error::InvalidSpec(format!(
                    "phase {i}: access rate too low, instruction gap exceeds 32 bits"
                ))
            })?;
            prev_pos = pos;

            let block = if !recent.is_empty() && rng.gen_bool(phase.reuse_locality) {
                recent[rng.gen_range(0..recent.len())]
            } else {
                rng.gen_range(0..blocks)
            };
            if recent.len() == RECENT_BLOCKS {
                recent.pop_front();
            }
            recent.push_back(block);

            let op = if rng.gen_bool(phase.write_fraction) {
                Op::Write
            } else {
                Op::Read
            };
            out.push(TraceRecord {
                instr_gap: gap,
                op,
                address: base + block * SYNTHETIC_BLOCK_BYTES,
            });
        }
    }
    Ok(out)
}
