//! Self-describing container around the coder: a fixed header carrying
//! everything decompression needs (geometry, model mode, symbol count,
//! and the static model when there is one) in front of the packed digit
//! stream.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "ACS1"
//! 4       1     version (currently 1)
//! 5       1     geometry: bits 7..5 hold r-1 where the radix is 2^r,
//!               bits 4..0 hold P-1 where P is the register precision
//! 6       1     mode (0 static, 1 adaptive, 2 tree, 3 binary)
//! 7       4     alphabet size M
//! 11      8     symbol count N
//! 19      4     rebuild period R (0 means adapt on every symbol)
//! 23      4*M   scaled symbol widths, static mode only
//! rest          packed code digits (absent when N = 0)
//! ```
//!
//! Containers are deterministic: the same input and options always
//! produce byte-identical output, so both ends of a channel can verify
//! synchronization by hashing.

use acs_core::binary::DecisionTree;
use acs_core::coder::{self, CoderConfig, CoderError, Decoder, Encoder};
use acs_core::digits::{pack_digits, unpack_digits, DigitError};
use acs_core::model::{FrequencyModel, ModelError, ScaledDistribution};
use acs_core::search::{self, LookupTable, Strategy};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"ACS1";
pub const VERSION: u8 = 1;

/// Byte streams always code over the full byte alphabet.
pub const ALPHABET: usize = 256;

const FIXED_HEADER_LEN: usize = 23;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not an ACS container: bad magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("container header is truncated")]
    TruncatedHeader,
    #[error("unknown mode byte {0}")]
    BadMode(u8),
    #[error("container declares alphabet size {0}, only 256 is supported")]
    BadAlphabet(u32),
    #[error("static container carries an invalid model")]
    BadModel,
    #[error("a rebuild period only applies to the adaptive mode")]
    BadPeriod,
    #[error("payload ends after {decoded} of {expected} symbols")]
    TruncatedPayload { decoded: u64, expected: u64 },
    #[error(transparent)]
    Coder(CoderError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Digits(#[from] DigitError),
}

impl From<CoderError> for ContainerError {
    fn from(e: CoderError) -> Self {
        match e {
            CoderError::TruncatedStream { decoded, expected } => {
                ContainerError::TruncatedPayload { decoded, expected }
            }
            other => ContainerError::Coder(other),
        }
    }
}

/// How symbol probabilities are obtained on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Two-pass: count the input first, ship the scaled model.
    Static,
    /// Cumulative-vector counters updated on every symbol.
    Adaptive,
    /// Balanced-tree counters, same stream as adaptive at lower update
    /// cost.
    Tree,
    /// Byte coded as eight binary decisions with per-node counters.
    Binary,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Static => "static-two-pass",
            Mode::Adaptive => "adaptive-direct",
            Mode::Tree => "adaptive-tree",
            Mode::Binary => "binary-tree",
        }
    }

    fn to_byte(self) -> u8 {
        match self {
            Mode::Static => 0,
            Mode::Adaptive => 1,
            Mode::Tree => 2,
            Mode::Binary => 3,
        }
    }

    fn from_byte(b: u8) -> Result<Self, ContainerError> {
        match b {
            0 => Ok(Mode::Static),
            1 => Ok(Mode::Adaptive),
            2 => Ok(Mode::Tree),
            3 => Ok(Mode::Binary),
            other => Err(ContainerError::BadMode(other)),
        }
    }
}

/// Compression-time choices; everything here is reproduced in the header
/// so decompression takes no options.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub mode: Mode,
    pub radix: u64,
    pub precision: u32,
    /// Rebuild interval for adaptive mode; 0 adapts on every symbol.
    pub period: u32,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mode: Mode::Tree,
            radix: 256,
            precision: 4,
            period: 0,
        }
    }
}

/// Parsed container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub mode: Mode,
    pub radix: u64,
    pub precision: u32,
    pub alphabet: u32,
    pub symbols: u64,
    pub period: u32,
    /// Scaled symbol widths, present exactly in static mode.
    pub model_widths: Option<Vec<u64>>,
}

impl Header {
    /// Total header size in bytes, the container's fixed overhead.
    pub fn len(&self) -> usize {
        FIXED_HEADER_LEN + self.model_widths.as_ref().map_or(0, |w| 4 * w.len())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        let r = self.radix.trailing_zeros() as u8;
        out.push((r - 1) << 5 | (self.precision as u8 - 1));
        out.push(self.mode.to_byte());
        out.extend_from_slice(&self.alphabet.to_le_bytes());
        out.extend_from_slice(&self.symbols.to_le_bytes());
        out.extend_from_slice(&self.period.to_le_bytes());
        if let Some(widths) = &self.model_widths {
            for &w in widths {
                out.extend_from_slice(&(w as u32).to_le_bytes());
            }
        }
    }

    /// Parses a header, returning it with the payload offset.
    pub fn read(bytes: &[u8]) -> Result<(Header, usize), ContainerError> {
        if bytes.len() < FIXED_HEADER_LEN {
            return Err(if bytes.starts_with(&MAGIC) || bytes.len() < 4 {
                ContainerError::TruncatedHeader
            } else {
                ContainerError::BadMagic
            });
        }
        if bytes[..4] != MAGIC {
            return Err(ContainerError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(ContainerError::BadVersion(bytes[4]));
        }
        let radix = 1u64 << ((bytes[5] >> 5) + 1);
        let precision = (bytes[5] & 0x1f) as u32 + 1;
        let mode = Mode::from_byte(bytes[6])?;
        let alphabet = u32::from_le_bytes(bytes[7..11].try_into().unwrap());
        let symbols = u64::from_le_bytes(bytes[11..19].try_into().unwrap());
        let period = u32::from_le_bytes(bytes[19..23].try_into().unwrap());
        if alphabet as usize != ALPHABET {
            return Err(ContainerError::BadAlphabet(alphabet));
        }
        if period != 0 && mode != Mode::Adaptive {
            return Err(ContainerError::BadPeriod);
        }
        let mut offset = FIXED_HEADER_LEN;
        let model_widths = if mode == Mode::Static {
            let end = offset + 4 * ALPHABET;
            let Some(raw) = bytes.get(offset..end) else {
                return Err(ContainerError::TruncatedHeader);
            };
            offset = end;
            Some(
                raw.chunks_exact(4)
                    .map(|c| u64::from(u32::from_le_bytes(c.try_into().unwrap())))
                    .collect(),
            )
        } else {
            None
        };
        Ok((
            Header {
                mode,
                radix,
                precision,
                alphabet,
                symbols,
                period,
                model_widths,
            },
            offset,
        ))
    }
}

/// Occurrence counts of `input` plus one, so unseen byte values keep a
/// codable width.
fn smoothed_counts(input: &[u8]) -> Vec<u64> {
    let mut counts = vec![1u64; ALPHABET];
    for &b in input {
        counts[b as usize] += 1;
    }
    counts
}

fn to_symbols(input: &[u8]) -> Vec<usize> {
    input.iter().map(|&b| b as usize).collect()
}

fn to_bytes(symbols: Vec<usize>) -> Vec<u8> {
    symbols.into_iter().map(|s| s as u8).collect()
}

/// Compresses `input` into a container.
pub fn compress(input: &[u8], opts: &Options) -> Result<Vec<u8>, ContainerError> {
    if opts.period != 0 && opts.mode != Mode::Adaptive {
        return Err(ContainerError::BadPeriod);
    }
    let cfg = CoderConfig::new(opts.radix, opts.precision)?;
    let symbols = to_symbols(input);
    let mut header = Header {
        mode: opts.mode,
        radix: opts.radix,
        precision: opts.precision,
        alphabet: ALPHABET as u32,
        symbols: input.len() as u64,
        period: opts.period,
        model_widths: None,
    };

    let digits = if input.is_empty() && opts.mode != Mode::Static {
        Vec::new()
    } else {
        match opts.mode {
            Mode::Static => {
                let counts = smoothed_counts(input);
                let dist =
                    ScaledDistribution::from_counts(&counts, opts.radix, opts.precision)?;
                let widths = (0..ALPHABET).map(|s| dist.width(s)).collect();
                header.model_widths = Some(widths);
                if input.is_empty() {
                    Vec::new()
                } else {
                    coder::encode_all(cfg, &dist, &symbols)?.digits
                }
            }
            Mode::Adaptive if opts.period > 0 => {
                coder::encode_all_periodic(cfg, ALPHABET, &symbols, opts.period as usize)?
                    .digits
            }
            Mode::Adaptive => coder::encode_all_adaptive(cfg, ALPHABET, &symbols)?.digits,
            Mode::Tree => coder::encode_all_tree(cfg, ALPHABET, &symbols)?.digits,
            Mode::Binary => {
                let mut tree = DecisionTree::bisection(ALPHABET)?;
                let mut enc = Encoder::new(cfg);
                for &s in &symbols {
                    tree.encode_symbol(&mut enc, s)?;
                }
                enc.finish().digits
            }
        }
    };

    let mut out = Vec::with_capacity(header.len() + digits.len());
    header.write(&mut out);
    if !digits.is_empty() {
        out.extend_from_slice(&pack_digits(&digits, opts.radix)?);
    }
    Ok(out)
}

/// Restores the original bytes from a container.
///
/// `lookup` enables table-assisted symbol search on the decode side with
/// the given table size. It applies where the coding distribution holds
/// still long enough to amortize a table: static mode, and periodic
/// adaptive mode where the table is rebuilt at each period boundary.
/// Other modes change the distribution on every symbol and decode the
/// same either way.
pub fn decompress(bytes: &[u8], lookup: Option<u64>) -> Result<Vec<u8>, ContainerError> {
    let (header, offset) = Header::read(bytes)?;
    let cfg = CoderConfig::new(header.radix, header.precision)?;
    let n = header.symbols as usize;
    if n == 0 {
        return Ok(Vec::new());
    }
    let digits = unpack_digits(&bytes[offset..], header.radix)?;

    let symbols = match header.mode {
        Mode::Static => {
            let widths = header.model_widths.as_ref().ok_or(ContainerError::BadModel)?;
            let mut cum = Vec::with_capacity(widths.len() + 1);
            let mut acc = 0u64;
            cum.push(0);
            for &w in widths {
                acc = acc.checked_add(w).ok_or(ContainerError::BadModel)?;
                cum.push(acc);
            }
            let dist = ScaledDistribution::from_cumulative(cum, header.radix, header.precision)
                .map_err(|_| ContainerError::BadModel)?;
            match lookup {
                Some(size) => decode_static_lookup(cfg, &dist, n, &digits, size)?,
                None => coder::decode_all(cfg, &dist, n, &digits)?,
            }
        }
        Mode::Adaptive if header.period > 0 => {
            let period = header.period as usize;
            match lookup {
                Some(size) => decode_periodic_lookup(cfg, n, &digits, period, size)?,
                None => coder::decode_all_periodic(cfg, ALPHABET, n, &digits, period)?,
            }
        }
        Mode::Adaptive => coder::decode_all_adaptive(cfg, ALPHABET, n, &digits)?,
        Mode::Tree => coder::decode_all_tree(cfg, ALPHABET, n, &digits)?,
        Mode::Binary => {
            let mut tree = DecisionTree::bisection(ALPHABET)?;
            let mut dec = Decoder::new(cfg, &digits);
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let s = tree.decode_symbol(&mut dec)?;
                check_budget(&dec, cfg, i, n)?;
                out.push(s);
            }
            out
        }
    };
    Ok(to_bytes(symbols))
}

/// Flags streams that ran out of real digits: honest exhaustion shows up
/// as the decoder inventing more than a register's worth of padding.
fn check_budget(dec: &Decoder<'_>, cfg: CoderConfig, i: usize, n: usize) -> Result<(), ContainerError> {
    if dec.pads() > cfg.precision() as usize {
        return Err(ContainerError::TruncatedPayload {
            decoded: i as u64,
            expected: n as u64,
        });
    }
    Ok(())
}

fn decode_static_lookup(
    cfg: CoderConfig,
    dist: &ScaledDistribution,
    n: usize,
    digits: &[u8],
    size: u64,
) -> Result<Vec<usize>, ContainerError> {
    let table = LookupTable::build(dist, size)?;
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (s, _) = search::decode_with(&mut dec, dist, Strategy::Lookup(&table))?;
        check_budget(&dec, cfg, i, n)?;
        out.push(s);
    }
    Ok(out)
}

fn decode_periodic_lookup(
    cfg: CoderConfig,
    n: usize,
    digits: &[u8],
    period: usize,
    size: u64,
) -> Result<Vec<usize>, ContainerError> {
    let mut model = FrequencyModel::new(ALPHABET)?;
    let mut dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
    let mut table = LookupTable::build(&dist, size)?;
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 && i % period == 0 {
            dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
            table = LookupTable::build(&dist, size)?;
        }
        let (s, _) = search::decode_with(&mut dec, &dist, Strategy::Lookup(&table))?;
        check_budget(&dec, cfg, i, n)?;
        model.update(s);
        out.push(s);
    }
    Ok(out)
}

/// What `info` reports about a container without decoding it.
#[derive(Debug, Clone)]
pub struct Summary {
    pub mode: Mode,
    pub radix: u64,
    pub precision: u32,
    pub alphabet: u32,
    pub symbols: u64,
    pub period: u32,
    /// Header plus model bytes: the fixed overhead ahead of the payload.
    pub header_bytes: usize,
    pub payload_bytes: usize,
    /// Payload size over symbol count; `None` for an empty stream.
    pub bits_per_symbol: Option<f64>,
}

/// Reads a container's header and sizes.
pub fn inspect(bytes: &[u8]) -> Result<Summary, ContainerError> {
    let (header, offset) = Header::read(bytes)?;
    let payload_bytes = bytes.len().saturating_sub(offset);
    let bits_per_symbol = if header.symbols == 0 {
        None
    } else {
        Some(payload_bytes as f64 * 8.0 / header.symbols as f64)
    };
    Ok(Summary {
        mode: header.mode,
        radix: header.radix,
        precision: header.precision,
        alphabet: header.alphabet,
        symbols: header.symbols,
        period: header.period,
        header_bytes: offset,
        payload_bytes,
        bits_per_symbol,
    })
}
