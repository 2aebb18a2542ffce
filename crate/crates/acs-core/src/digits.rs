//! Digit stream management for the renormalizing coders.
//!
//! Encoders emit code digits most significant first, but a carry can still
//! increment digits that were already produced. This module provides two
//! interchangeable ways of holding digits until they are safe to release,
//! plus the byte packing used to store digit streams for radixes 2, 4, 16,
//! and 256.

use thiserror::Error;

/// Errors from digit packing and unpacking.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum DigitError {
    /// The radix is not one of the supported powers of two.
    #[error("unsupported radix {0}, expected 2, 4, 16, or 256")]
    UnsupportedRadix(u64),
    /// A digit value was out of range for the radix.
    #[error("digit {digit} out of range for radix {radix}")]
    DigitOutOfRange { digit: u8, radix: u64 },
}

/// Bits per digit for a supported radix.
pub fn digit_bits(radix: u64) -> Result<u32, DigitError> {
    match radix {
        2 => Ok(1),
        4 => Ok(2),
        16 => Ok(4),
        256 => Ok(8),
        other => Err(DigitError::UnsupportedRadix(other)),
    }
}

/// How emitted digits are held until no future carry can change them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CarryStrategy {
    /// Keep every digit in memory and walk backwards on carry.
    #[default]
    Buffer,
    /// Release digits as soon as they are settled, tracking the one
    /// still-mutable digit plus a run length of trailing D-1 digits.
    Counter,
}

/// An output digit buffer that absorbs carry propagation.
///
/// Digits pushed here may later be incremented by [`DigitBuffer::carry`],
/// which adds one to the number formed by the digits so far: trailing D-1
/// digits roll to zero and the first lower digit is incremented. Both
/// strategies produce byte-identical output; the counter strategy just
/// releases digits eagerly instead of keeping the whole stream in memory.
///
/// Eager release is sound because any given digit position can be
/// incremented at most once. When a position is created by renormalization
/// the remaining interval length is at most one digit unit, so the code
/// value can exceed the value of the digits written so far by less than two
/// units in that position. Each carry that touches the position consumes a
/// full unit, hence a second one is impossible. A digit is therefore
/// settled the moment a carry has touched it, or once a later digit below
/// D-1 shields it.
#[derive(Debug, Clone)]
pub struct DigitBuffer {
    radix: u64,
    strategy: CarryStrategy,
    settled: Vec<u8>,
    /// First still-mutable digit (always below D-1) and the count of D-1
    /// digits after it. Unused by the buffer strategy.
    pending: Option<(u8, u64)>,
    carries: u64,
}

impl DigitBuffer {
    pub fn new(radix: u64, strategy: CarryStrategy) -> Result<Self, DigitError> {
        digit_bits(radix)?;
        Ok(DigitBuffer {
            radix,
            strategy,
            settled: Vec::new(),
            pending: None,
            carries: 0,
        })
    }

    /// Total digits held, settled or not.
    pub fn len(&self) -> usize {
        let pending = match self.pending {
            Some((_, run)) => 1 + run as usize,
            None => 0,
        };
        self.settled.len() + pending
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of carries absorbed so far.
    pub fn carries(&self) -> u64 {
        self.carries
    }

    /// Append one digit.
    pub fn push(&mut self, digit: u8) {
        debug_assert!((digit as u64) < self.radix);
        let top = (self.radix - 1) as u8;
        match self.strategy {
            CarryStrategy::Buffer => self.settled.push(digit),
            CarryStrategy::Counter => match self.pending {
                None if digit == top => self.settled.push(digit),
                None => self.pending = Some((digit, 0)),
                Some((_, ref mut run)) if digit == top => *run += 1,
                Some((first, run)) => {
                    self.flush_pending(first, run);
                    self.pending = Some((digit, 0));
                }
            },
        }
    }

    /// Add one to the digit stream, rolling trailing D-1 digits to zero.
    pub fn carry(&mut self) {
        self.carries += 1;
        let top = (self.radix - 1) as u8;
        match self.strategy {
            CarryStrategy::Buffer => {
                let mut i = self.settled.len();
                loop {
                    assert!(i > 0, "carry propagated past the first digit");
                    i -= 1;
                    if self.settled[i] == top {
                        self.settled[i] = 0;
                    } else {
                        self.settled[i] += 1;
                        break;
                    }
                }
            }
            CarryStrategy::Counter => {
                let (first, run) = self
                    .pending
                    .take()
                    .expect("carry propagated past the first digit");
                self.flush_pending(first + 1, 0);
                for _ in 0..run {
                    self.settled.push(0);
                }
            }
        }
    }

    fn flush_pending(&mut self, first: u8, run: u64) {
        self.settled.push(first);
        let top = (self.radix - 1) as u8;
        for _ in 0..run {
            self.settled.push(top);
        }
    }

    /// Release all digits, pending ones included.
    pub fn finish(mut self) -> Vec<u8> {
        if let Some((first, run)) = self.pending.take() {
            self.flush_pending(first, run);
        }
        self.settled
    }
}

/// Pack a digit stream into bytes, most significant digit first within each
/// byte, zero-padding the tail to a whole byte.
pub fn pack_digits(digits: &[u8], radix: u64) -> Result<Vec<u8>, DigitError> {
    let bits = digit_bits(radix)?;
    for &d in digits {
        if (d as u64) >= radix {
            return Err(DigitError::DigitOutOfRange { digit: d, radix });
        }
    }
    if bits == 8 {
        return Ok(digits.to_vec());
    }
    let per_byte = (8 / bits) as usize;
    let mut out = Vec::with_capacity(digits.len().div_ceil(per_byte));
    for chunk in digits.chunks(per_byte) {
        let mut byte = 0u8;
        for (i, &d) in chunk.iter().enumerate() {
            byte |= d << (8 - bits as usize * (i + 1));
        }
        out.push(byte);
    }
    Ok(out)
}

/// Unpack bytes back into digits. The result length is always a multiple of
/// the digits-per-byte ratio; trailing zero padding is indistinguishable
/// from real zero digits, which the decoders tolerate by construction.
pub fn unpack_digits(bytes: &[u8], radix: u64) -> Result<Vec<u8>, DigitError> {
    let bits = digit_bits(radix)?;
    if bits == 8 {
        return Ok(bytes.to_vec());
    }
    let per_byte = (8 / bits) as usize;
    let mask = ((1u16 << bits) - 1) as u8;
    let mut out = Vec::with_capacity(bytes.len() * per_byte);
    for &byte in bytes {
        for i in 0..per_byte {
            out.push((byte >> (8 - bits as usize * (i + 1))) & mask);
        }
    }
    Ok(out)
}

/// A reader over a finite digit stream that keeps serving zeros past the
/// end, counting how many padding digits were consumed.
///
/// Decoders read a fixed distance ahead of the symbols they resolve, so a
/// healthy decode reads a couple of digits past the end of the stream. A
/// pad count that grows beyond the register size indicates a truncated
/// stream rather than normal lookahead.
#[derive(Debug, Clone)]
pub struct DigitReader<'a> {
    digits: &'a [u8],
    pos: usize,
    pads: usize,
}

impl<'a> DigitReader<'a> {
    pub fn new(digits: &'a [u8]) -> Self {
        DigitReader {
            digits,
            pos: 0,
            pads: 0,
        }
    }

    /// Next digit, or zero once the stream is exhausted.
    pub fn next_digit(&mut self) -> u8 {
        match self.digits.get(self.pos) {
            Some(&d) => {
                self.pos += 1;
                d
            }
            None => {
                self.pads += 1;
                0
            }
        }
    }

    /// Digits consumed, padding included.
    pub fn position(&self) -> usize {
        self.pos + self.pads
    }

    /// Zero digits served past the end of the stream.
    pub fn pads(&self) -> usize {
        self.pads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn buffer_from(radix: u64, strategy: CarryStrategy, digits: &[u8]) -> DigitBuffer {
        let mut buf = DigitBuffer::new(radix, strategy).unwrap();
        for &d in digits {
            buf.push(d);
        }
        buf
    }

    #[test]
    fn carry_rolls_trailing_ones() {
        for strategy in [CarryStrategy::Buffer, CarryStrategy::Counter] {
            let mut buf = buffer_from(2, strategy, &[1, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1]);
            buf.carry();
            assert_eq!(buf.finish(), vec![1, 0, 1, 1, 1, 1, 1, 0, 0, 0, 1, 0]);
        }
    }

    #[test]
    fn carry_increments_last_digit() {
        for strategy in [CarryStrategy::Buffer, CarryStrategy::Counter] {
            let mut buf = buffer_from(16, strategy, &[0xB, 0xD]);
            buf.carry();
            assert_eq!(buf.finish(), vec![0xB, 0xE]);
        }
    }

    #[test]
    fn carry_on_single_digit() {
        for strategy in [CarryStrategy::Buffer, CarryStrategy::Counter] {
            let mut buf = buffer_from(2, strategy, &[0]);
            buf.carry();
            assert_eq!(buf.finish(), vec![1]);
        }
    }

    #[test]
    fn counter_settles_leading_top_digits() {
        let mut buf = DigitBuffer::new(2, CarryStrategy::Counter).unwrap();
        buf.push(1);
        buf.push(1);
        assert_eq!(buf.len(), 2);
        buf.push(0);
        buf.push(1);
        buf.carry();
        assert_eq!(buf.finish(), vec![1, 1, 1, 0]);
    }

    #[test]
    fn carries_are_counted() {
        for strategy in [CarryStrategy::Buffer, CarryStrategy::Counter] {
            let mut buf = buffer_from(2, strategy, &[0, 1, 0]);
            buf.carry();
            buf.push(0);
            buf.carry();
            assert_eq!(buf.carries(), 2);
            assert_eq!(buf.finish(), vec![0, 1, 1, 1]);
        }
    }

    #[test]
    fn strategies_agree_on_random_streams() {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        for radix in [2u64, 4, 16, 256] {
            for _ in 0..200 {
                let mut a = DigitBuffer::new(radix, CarryStrategy::Buffer).unwrap();
                let mut b = DigitBuffer::new(radix, CarryStrategy::Counter).unwrap();
                // A second carry can never strike before a fresh digit
                // below D-1 arrives (each position absorbs at most one
                // increment), so generated streams respect that too.
                let mut carry_ok = false;
                for _ in 0..rng.gen_range(1..60) {
                    if carry_ok && rng.gen_bool(0.25) {
                        a.carry();
                        b.carry();
                        carry_ok = false;
                    } else {
                        let d = rng.gen_range(0..radix.min(256)) as u8;
                        a.push(d);
                        b.push(d);
                        if (d as u64) < radix - 1 {
                            carry_ok = true;
                        }
                    }
                }
                assert_eq!(a.len(), b.len());
                assert_eq!(a.carries(), b.carries());
                assert_eq!(a.finish(), b.finish());
            }
        }
    }

    #[test]
    fn pack_round_trips_all_radixes() {
        let mut rng = StdRng::seed_from_u64(42);
        for radix in [2u64, 4, 16, 256] {
            let bits = digit_bits(radix).unwrap() as usize;
            let per_byte = 8 / bits;
            for _ in 0..50 {
                let n = rng.gen_range(0..40);
                let digits: Vec<u8> =
                    (0..n).map(|_| rng.gen_range(0..radix.min(256)) as u8).collect();
                let packed = pack_digits(&digits, radix).unwrap();
                assert_eq!(packed.len(), digits.len().div_ceil(per_byte));
                let unpacked = unpack_digits(&packed, radix).unwrap();
                assert_eq!(&unpacked[..digits.len()], &digits[..]);
                assert!(unpacked[digits.len()..].iter().all(|&d| d == 0));
            }
        }
    }

    #[test]
    fn packing_is_most_significant_first() {
        assert_eq!(pack_digits(&[1, 0, 1, 1, 1, 1, 1, 0], 2).unwrap(), vec![0xBE]);
        assert_eq!(pack_digits(&[0xB, 0xE, 0x2, 0x0], 16).unwrap(), vec![0xBE, 0x20]);
        assert_eq!(pack_digits(&[2, 3, 0, 1], 4).unwrap(), vec![0b1011_0001]);
        assert_eq!(pack_digits(&[7, 255], 256).unwrap(), vec![7, 255]);
        // Tail padding fills the low bits of the final byte.
        assert_eq!(pack_digits(&[1], 2).unwrap(), vec![0x80]);
        assert_eq!(pack_digits(&[0xB, 0xE, 0x2], 16).unwrap(), vec![0xBE, 0x20]);
    }

    #[test]
    fn pack_rejects_out_of_range_digits() {
        assert_eq!(
            pack_digits(&[2], 2),
            Err(DigitError::DigitOutOfRange { digit: 2, radix: 2 })
        );
        assert_eq!(pack_digits(&[0], 3), Err(DigitError::UnsupportedRadix(3)));
    }

    #[test]
    fn reader_pads_with_zeros() {
        let digits = [3u8, 1];
        let mut r = DigitReader::new(&digits);
        assert_eq!(r.next_digit(), 3);
        assert_eq!(r.next_digit(), 1);
        assert_eq!(r.pads(), 0);
        assert_eq!(r.next_digit(), 0);
        assert_eq!(r.next_digit(), 0);
        assert_eq!(r.pads(), 2);
        assert_eq!(r.position(), 4);
    }
}
