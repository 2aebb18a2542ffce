//! Fixed-precision integer arithmetic coder with D-symbol output.
//!
//! Interval endpoints live in registers of P radix-D digits. Each symbol
//! costs one or two scaled products, a carry check on the base register,
//! and a renormalization loop that releases one digit at a time once the
//! length register drops below D^(P-1). The decoder mirrors the encoder
//! register for register, so correctness reduces to both sides computing
//! identical products from identical state.
//!
//! Three model flavors share the engine: fixed scaled distributions,
//! adaptive frequency counts joined by a one-division rescaling, and
//! binary-tree counters that fold the cumulative-count walk into the
//! selection walk. An adaptive encoder and its tree twin produce
//! bit-identical streams from the same counts.

use crate::bench::ops;
use crate::digits::{self, CarryStrategy, DigitBuffer, DigitError, DigitReader};
use crate::model::{
    BinaryFrequency, Child, FrequencyModel, ModelError, ScaledDistribution, TreeModel, TreeShape,
    COUNTER_RESCALE_LIMIT,
};
use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

/// Errors from encoding or decoding.
#[derive(Debug, Error)]
pub enum CoderError {
    #[error(transparent)]
    Digit(#[from] DigitError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("precision {precision} with radix {radix} needs more than 32 register bits")]
    InvalidPrecision { radix: u64, precision: u32 },
    #[error("symbol {symbol} out of range for alphabet of {alphabet} symbols")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("distribution scale {dist_radix}^{dist_precision} does not match coder scale {radix}^{precision}")]
    ScaleMismatch {
        dist_radix: u64,
        dist_precision: u32,
        radix: u64,
        precision: u32,
    },
    #[error("digit stream ended after {decoded} of {expected} symbols")]
    TruncatedStream { decoded: u64, expected: u64 },
    #[error("adaptive coding requires the standard length convention")]
    AdaptiveNeedsStandardMode,
    #[error("counts for {symbols} symbols cannot be rescaled under the precision bound {limit}")]
    CountsExceedPrecision { symbols: usize, limit: u64 },
    #[error("selected symbol does not contain the code value")]
    SelectionMismatch,
    #[error("radix {0} out of range, expected 2 through 256")]
    RadixOutOfRange(u64),
    #[error("value does not fit in {digits} digits of radix {radix}")]
    ValueTooWide { digits: usize, radix: u64 },
}

/// Register geometry shared by an encoder/decoder pair.
///
/// `radix` is the size D of the output digit alphabet and `precision` the
/// count P of digits held in a register, so interval endpoints live in
/// `[0, D^P)`. Radixes are powers of two with whole-bit digits, and D^P
/// is capped at 2^32 so every product fits comfortably in 128 bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoderConfig {
    radix: u64,
    precision: u32,
    digit_bits: u32,
    total_bits: u32,
}

impl CoderConfig {
    pub fn new(radix: u64, precision: u32) -> Result<Self, CoderError> {
        let digit_bits = digits::digit_bits(radix)?;
        let total_bits = precision.saturating_mul(digit_bits);
        if precision < 2 || total_bits > 32 {
            return Err(CoderError::InvalidPrecision { radix, precision });
        }
        Ok(CoderConfig {
            radix,
            precision,
            digit_bits,
            total_bits,
        })
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// D^P, one past the largest register value.
    pub fn total(&self) -> u64 {
        1u64 << self.total_bits
    }

    /// D^(P-1), the renormalization threshold for the length register.
    pub fn half(&self) -> u64 {
        1u64 << (self.total_bits - self.digit_bits)
    }

    fn mask(&self) -> u64 {
        self.total() - 1
    }

    /// floor(l * c / D^P). The division is a shift, so this counts as a
    /// single multiplication.
    pub(crate) fn product(&self, l: u64, c: u64) -> u64 {
        ops::count_mul();
        ((l as u128 * c as u128) >> self.total_bits) as u64
    }

    pub(crate) fn check_dist(&self, dist: &ScaledDistribution) -> Result<(), CoderError> {
        if dist.radix() != self.radix || dist.precision() != self.precision {
            return Err(CoderError::ScaleMismatch {
                dist_radix: dist.radix(),
                dist_precision: dist.precision(),
                radix: self.radix,
                precision: self.precision,
            });
        }
        Ok(())
    }
}

/// Interpretation of the length register.
///
/// `Standard` stores the interval length itself, computes both endpoints
/// as products of the length with cumulative counts, and closes the
/// stream with two digits. This is the production configuration.
///
/// `OffsetOne` stores length minus one, updates the length with a product
/// of the symbol width instead of a second endpoint, and closes with a
/// single digit. It reproduces classic fixed-point register tables bit
/// for bit and is kept for cross-checking; the adaptive paths reject it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthMode {
    #[default]
    Standard,
    OffsetOne,
}

/// Per-symbol encoder trace entry, recorded when tracing is enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    /// Scaled product giving the base increment.
    pub low_product: u64,
    /// Second scaled product of the step, when one was computed.
    pub high_product: Option<u64>,
    /// Whether the base update wrapped and carried into earlier digits.
    pub carry: bool,
    /// Digits released by renormalization during this step.
    pub digits: usize,
    /// Base register after renormalization.
    pub base: u64,
    /// Length register after renormalization.
    pub length: u64,
}

/// Output of a finished encode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    /// Code digits, most significant first.
    pub digits: Vec<u8>,
    /// Carries absorbed while encoding.
    pub carries: u64,
    /// Step trace, present when the encoder had tracing enabled.
    pub steps: Option<Vec<StepRecord>>,
}

/// Streaming arithmetic encoder.
#[derive(Debug, Clone)]
pub struct Encoder {
    cfg: CoderConfig,
    mode: LengthMode,
    b: u64,
    l: u64,
    buf: DigitBuffer,
    steps: Option<Vec<StepRecord>>,
}

impl Encoder {
    pub fn new(cfg: CoderConfig) -> Self {
        Self::with_mode(cfg, LengthMode::default())
    }

    pub fn with_mode(cfg: CoderConfig, mode: LengthMode) -> Self {
        Encoder {
            cfg,
            mode,
            b: 0,
            // Full range: the true length D^P in offset form, D^P - 1 in
            // standard form, where the missing bottom unit is harmless.
            l: cfg.mask(),
            buf: DigitBuffer::new(cfg.radix, CarryStrategy::Buffer).expect("radix was validated"),
            steps: None,
        }
    }

    /// Swaps the digit buffer for one with the given carry strategy.
    /// Only meaningful on a fresh encoder.
    pub fn with_carry_strategy(mut self, strategy: CarryStrategy) -> Self {
        debug_assert!(self.buf.is_empty());
        self.buf = DigitBuffer::new(self.cfg.radix, strategy).expect("radix was validated");
        self
    }

    /// Starts recording one [`StepRecord`] per encoded symbol.
    pub fn record_steps(&mut self) {
        self.steps = Some(Vec::new());
    }

    pub fn config(&self) -> CoderConfig {
        self.cfg
    }

    /// Current (base, length) register pair.
    pub fn registers(&self) -> (u64, u64) {
        (self.b, self.l)
    }

    /// Encodes one symbol under a fixed distribution.
    pub fn encode(&mut self, dist: &ScaledDistribution, s: usize) -> Result<(), CoderError> {
        self.cfg.check_dist(dist)?;
        let m = dist.len();
        if s >= m {
            return Err(CoderError::SymbolOutOfRange {
                symbol: s,
                alphabet: m,
            });
        }
        let (x, new_l, high) = match self.mode {
            LengthMode::Standard => {
                let x = self.cfg.product(self.l, dist.cumulative(s));
                if s == m - 1 {
                    (x, self.l - x, None)
                } else {
                    let y = self.cfg.product(self.l, dist.cumulative(s + 1));
                    (x, y - x, Some(y))
                }
            }
            LengthMode::OffsetOne => {
                let lt = self.l + 1;
                let x = self.cfg.product(lt, dist.cumulative(s));
                let w = self.cfg.product(lt, dist.width(s));
                (x, w - 1, Some(w))
            }
        };
        self.advance(x, new_l, high);
        Ok(())
    }

    /// Encodes one symbol under adaptive frequency counts, then records
    /// the occurrence. One division rescales the counts into the
    /// register frame; both endpoint products reuse its quotient.
    pub fn encode_adaptive(
        &mut self,
        model: &mut FrequencyModel,
        s: usize,
    ) -> Result<(), CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        let m = model.len();
        if s >= m {
            return Err(CoderError::SymbolOutOfRange {
                symbol: s,
                alphabet: m,
            });
        }
        fit_counts(self.cfg, m, model)?;
        ops::count_div();
        let gamma = self.l / model.total();
        ops::count_mul();
        let x = gamma * model.cumulative(s);
        let (new_l, high) = if s == m - 1 {
            (self.l - x, None)
        } else {
            ops::count_mul();
            let y = gamma * model.cumulative(s + 1);
            (y - x, Some(y))
        };
        self.advance(x, new_l, high);
        model.update(s);
        Ok(())
    }

    /// Encodes one symbol with tree-structured counters. The walk to the
    /// symbol's leaf accumulates the count mass on its left and bumps the
    /// branch counters it passes, using pre-update values throughout, so
    /// the stream matches [`Encoder::encode_adaptive`] digit for digit.
    pub fn encode_tree(&mut self, model: &mut TreeModel, s: usize) -> Result<(), CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        let m = model.len();
        if s >= m {
            return Err(CoderError::SymbolOutOfRange {
                symbol: s,
                alphabet: m,
            });
        }
        fit_counts(self.cfg, m, model)?;
        ops::count_div();
        let gamma = self.l / model.total();

        let mut below = 0u64;
        let mut span = model.total();
        let mut at = Child::Node(model.shape().root());
        while let Child::Node(k) = at {
            let left_count = model.counter(k);
            if s < k {
                span = left_count;
                at = model.shape().left(k);
                *model.counter_mut(k) += 1;
            } else {
                below += left_count;
                span -= left_count;
                at = model.shape().right(k);
            }
        }
        debug_assert_eq!(at, Child::Leaf(s));
        *model.counter_mut(0) += 1;
        if model.total() >= COUNTER_RESCALE_LIMIT {
            model.rescale_counters();
        }

        ops::count_mul();
        let x = gamma * below;
        let (new_l, high) = if s == m - 1 {
            (self.l - x, None)
        } else {
            ops::count_mul();
            let y = gamma * (below + span);
            (y - x, Some(y))
        };
        self.advance(x, new_l, high);
        Ok(())
    }

    /// Encodes one binary decision under a two-counter estimate, then
    /// records the outcome. The split point costs one multiplication and
    /// one true division; a zero bit keeps the lower part, a one bit the
    /// upper.
    pub fn encode_bit(
        &mut self,
        freq: &mut BinaryFrequency,
        bit: u8,
    ) -> Result<(), CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        fit_counts(self.cfg, 2, freq)?;
        ops::count_mul();
        ops::count_div();
        // freq.total() <= D^(P-1) <= l keeps x strictly inside (0, l).
        let x = self.l * freq.zeros() / freq.total();
        debug_assert!(x >= 1 && x < self.l);
        if bit == 0 {
            self.l = x;
        } else {
            ops::count_add();
            let old = self.b;
            self.b = (self.b + x) & self.cfg.mask();
            if self.b < old {
                self.buf.carry();
            }
            self.l -= x;
        }
        self.renormalize();
        freq.update(bit);
        Ok(())
    }

    fn advance(&mut self, x: u64, new_l: u64, high: Option<u64>) {
        ops::count_add();
        let old = self.b;
        self.b = (self.b + x) & self.cfg.mask();
        // The sum exceeds one register exactly when the masked result
        // moved backwards.
        let carry = self.b < old;
        if carry {
            self.buf.carry();
        }
        self.l = new_l;
        let emitted = self.renormalize();
        if let Some(steps) = &mut self.steps {
            steps.push(StepRecord {
                low_product: x,
                high_product: high,
                carry,
                digits: emitted,
                base: self.b,
                length: self.l,
            });
        }
    }

    fn renormalize(&mut self) -> usize {
        let half = self.cfg.half();
        let before = self.buf.len();
        while self.l < half {
            let d = (self.b >> (self.cfg.total_bits - self.cfg.digit_bits)) as u8;
            self.buf.push(d);
            self.b = (self.b << self.cfg.digit_bits) & self.cfg.mask();
            self.l = match self.mode {
                LengthMode::Standard => self.l << self.cfg.digit_bits,
                // True length scales by D; in offset form that is
                // D * (l + 1) - 1, with the low digit all ones.
                LengthMode::OffsetOne => (self.l << self.cfg.digit_bits) | (self.cfg.radix - 1),
            };
        }
        self.buf.len() - before
    }

    /// Selects the final code value and returns the finished stream.
    ///
    /// Standard mode rounds the base toward the middle of the interval
    /// and keeps two digits of it, which pins the value inside the final
    /// interval no matter what digits a reader consumes afterwards.
    /// Offset mode emits the single shortest digit that stays inside.
    pub fn finish(mut self) -> EncodedStream {
        match self.mode {
            LengthMode::Standard => {
                ops::count_add();
                let offset = self.cfg.half() >> 1;
                let old = self.b;
                self.b = (self.b + offset) & self.cfg.mask();
                if self.b < old {
                    self.buf.carry();
                }
                for _ in 0..2 {
                    let d = (self.b >> (self.cfg.total_bits - self.cfg.digit_bits)) as u8;
                    self.buf.push(d);
                    self.b = (self.b << self.cfg.digit_bits) & self.cfg.mask();
                }
            }
            LengthMode::OffsetOne => {
                let total = self.cfg.total();
                let end = self.b + self.l + 1;
                if self.b <= total / 2 && end > total / 2 {
                    // The midpoint is inside the interval; one digit names it.
                    self.buf.push((self.cfg.radix / 2) as u8);
                } else if end > total {
                    // The interval straddles the register top: the value
                    // rounds up to the next whole unit of the settled digits.
                    self.buf.carry();
                    self.buf.push(0);
                } else {
                    let d = (self.b * self.cfg.radix).div_ceil(total);
                    self.buf.push(d as u8);
                }
            }
        }
        let carries = self.buf.carries();
        EncodedStream {
            digits: self.buf.finish(),
            carries,
            steps: self.steps.take(),
        }
    }
}

/// Streaming decoder mirroring [`Encoder`] register for register.
///
/// The value register holds the code value's offset above the interval
/// base, scaled into the register frame, so selecting a symbol is a
/// search for the largest cumulative product at or below it.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    cfg: CoderConfig,
    mode: LengthMode,
    v: u64,
    l: u64,
    reader: DigitReader<'a>,
}

impl<'a> Decoder<'a> {
    pub fn new(cfg: CoderConfig, digits: &'a [u8]) -> Self {
        Self::with_mode(cfg, LengthMode::default(), digits)
    }

    pub fn with_mode(cfg: CoderConfig, mode: LengthMode, digits: &'a [u8]) -> Self {
        let mut reader = DigitReader::new(digits);
        let mut v = 0u64;
        for _ in 0..cfg.precision {
            v = (v << cfg.digit_bits) | reader.next_digit() as u64;
        }
        Decoder {
            cfg,
            mode,
            v,
            l: cfg.mask(),
            reader,
        }
    }

    pub fn config(&self) -> CoderConfig {
        self.cfg
    }

    /// Current (value, length) register pair.
    pub fn registers(&self) -> (u64, u64) {
        (self.v, self.l)
    }

    /// Zero digits invented past the end of the stream. Healthy decodes
    /// read at most P - 2 of them; more means the stream was cut short.
    pub fn pads(&self) -> usize {
        self.reader.pads()
    }

    pub(crate) fn value(&self) -> u64 {
        self.v
    }

    pub(crate) fn product_of(&self, c: u64) -> u64 {
        match self.mode {
            LengthMode::Standard => self.cfg.product(self.l, c),
            LengthMode::OffsetOne => self.cfg.product(self.l + 1, c),
        }
    }

    /// Scans symbols from the top of the alphabet down, probing each
    /// cumulative product until one lands at or below the value. Costs
    /// M - s probes for symbol s, counting the always-true final probe.
    pub fn select_sequential(
        &self,
        dist: &ScaledDistribution,
    ) -> Result<(usize, u32), CoderError> {
        self.cfg.check_dist(dist)?;
        let mut probes = 0;
        for s in (0..dist.len()).rev() {
            probes += 1;
            if self.product_of(dist.cumulative(s)) <= self.v {
                return Ok((s, probes));
            }
        }
        unreachable!("the cumulative count below symbol zero is zero")
    }

    /// Halves the candidate range around probed midpoints; at most
    /// ceil(log2 M) probes, following the balanced-tree depths.
    pub fn select_bisection(
        &self,
        dist: &ScaledDistribution,
    ) -> Result<(usize, u32), CoderError> {
        self.cfg.check_dist(dist)?;
        let mut lo = 0usize;
        let mut hi = dist.len();
        let mut probes = 0;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            probes += 1;
            if self.product_of(dist.cumulative(mid)) <= self.v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo, probes))
    }

    /// Consumes a previously selected symbol: subtracts its low product,
    /// installs the new length, and renormalizes.
    pub fn apply(&mut self, dist: &ScaledDistribution, s: usize) -> Result<(), CoderError> {
        self.cfg.check_dist(dist)?;
        let m = dist.len();
        if s >= m {
            return Err(CoderError::SymbolOutOfRange {
                symbol: s,
                alphabet: m,
            });
        }
        let (x, new_l) = match self.mode {
            LengthMode::Standard => {
                let x = self.cfg.product(self.l, dist.cumulative(s));
                if s == m - 1 {
                    (x, self.l - x)
                } else {
                    (x, self.cfg.product(self.l, dist.cumulative(s + 1)) - x)
                }
            }
            LengthMode::OffsetOne => {
                let lt = self.l + 1;
                let x = self.cfg.product(lt, dist.cumulative(s));
                (x, self.cfg.product(lt, dist.width(s)) - 1)
            }
        };
        self.v = self.v.checked_sub(x).ok_or(CoderError::SelectionMismatch)?;
        ops::count_add();
        self.l = new_l;
        self.renormalize();
        Ok(())
    }

    /// Decodes one symbol under a fixed distribution.
    pub fn decode(&mut self, dist: &ScaledDistribution) -> Result<usize, CoderError> {
        let (s, _) = self.select_bisection(dist)?;
        self.apply(dist, s)?;
        Ok(s)
    }

    /// Decodes one symbol under adaptive frequency counts, mirroring
    /// [`Encoder::encode_adaptive`]. The rescaled value is compared
    /// against cumulative counts directly, which selects the same symbol
    /// as the product search at two divisions per symbol.
    pub fn decode_adaptive(&mut self, model: &mut FrequencyModel) -> Result<usize, CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        let m = model.len();
        fit_counts(self.cfg, m, model)?;
        ops::count_div();
        let gamma = self.l / model.total();
        ops::count_div();
        let w = self.v / gamma;
        let cum = model.cumulative_slice();
        let mut lo = 0usize;
        let mut hi = m;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if cum[mid] <= w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = lo;
        ops::count_mul();
        let x = gamma * cum[s];
        let new_l = if s == m - 1 {
            self.l - x
        } else {
            ops::count_mul();
            gamma * cum[s + 1] - x
        };
        debug_assert!(x <= self.v);
        self.v -= x;
        ops::count_add();
        self.l = new_l;
        self.renormalize();
        model.update(s);
        Ok(s)
    }

    /// Decodes one symbol with tree-structured counters, mirroring
    /// [`Encoder::encode_tree`] including its counter updates.
    pub fn decode_tree(&mut self, model: &mut TreeModel) -> Result<usize, CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        let m = model.len();
        fit_counts(self.cfg, m, model)?;
        ops::count_div();
        let gamma = self.l / model.total();
        ops::count_div();
        let w = self.v / gamma;

        let mut below = 0u64;
        let mut span = model.total();
        let mut at = Child::Node(model.shape().root());
        while let Child::Node(k) = at {
            let left_count = model.counter(k);
            if w < below + left_count {
                span = left_count;
                at = model.shape().left(k);
                *model.counter_mut(k) += 1;
            } else {
                below += left_count;
                span -= left_count;
                at = model.shape().right(k);
            }
        }
        let s = match at {
            Child::Leaf(s) => s,
            Child::Node(_) => unreachable!(),
        };
        *model.counter_mut(0) += 1;
        if model.total() >= COUNTER_RESCALE_LIMIT {
            model.rescale_counters();
        }

        ops::count_mul();
        let x = gamma * below;
        let new_l = if s == m - 1 {
            self.l - x
        } else {
            ops::count_mul();
            gamma * (below + span) - x
        };
        debug_assert!(x <= self.v);
        self.v -= x;
        ops::count_add();
        self.l = new_l;
        self.renormalize();
        Ok(s)
    }

    /// Decodes one binary decision, mirroring [`Encoder::encode_bit`].
    pub fn decode_bit(&mut self, freq: &mut BinaryFrequency) -> Result<u8, CoderError> {
        if self.mode != LengthMode::Standard {
            return Err(CoderError::AdaptiveNeedsStandardMode);
        }
        fit_counts(self.cfg, 2, freq)?;
        ops::count_mul();
        ops::count_div();
        let x = self.l * freq.zeros() / freq.total();
        let bit = if self.v < x { 0 } else { 1 };
        if bit == 0 {
            self.l = x;
        } else {
            ops::count_add();
            self.v -= x;
            self.l -= x;
        }
        self.renormalize();
        freq.update(bit);
        Ok(bit)
    }

    fn renormalize(&mut self) {
        let half = self.cfg.half();
        while self.l < half {
            // The mask only matters on corrupt input, where it keeps the
            // value register bounded instead of overflowing.
            self.v = ((self.v << self.cfg.digit_bits) | self.reader.next_digit() as u64)
                & self.cfg.mask();
            self.l = match self.mode {
                LengthMode::Standard => self.l << self.cfg.digit_bits,
                LengthMode::OffsetOne => (self.l << self.cfg.digit_bits) | (self.cfg.radix - 1),
            };
        }
    }
}

/// Adaptively counted models that can shrink their totals on demand.
trait Rescalable {
    fn current_total(&self) -> u64;
    fn shrink(&mut self);
}

impl Rescalable for FrequencyModel {
    fn current_total(&self) -> u64 {
        self.total()
    }

    fn shrink(&mut self) {
        self.rescale_counters();
    }
}

impl Rescalable for TreeModel {
    fn current_total(&self) -> u64 {
        self.total()
    }

    fn shrink(&mut self) {
        self.rescale_counters();
    }
}

impl Rescalable for BinaryFrequency {
    fn current_total(&self) -> u64 {
        self.total()
    }

    fn shrink(&mut self) {
        self.rescale();
    }
}

/// Rescales adaptive counts until the total fits under D^(P-1), the bound
/// that keeps every scaled width at least one register unit.
fn fit_counts(
    cfg: CoderConfig,
    symbols: usize,
    model: &mut impl Rescalable,
) -> Result<(), CoderError> {
    let limit = cfg.half();
    while model.current_total() > limit {
        let before = model.current_total();
        model.shrink();
        if model.current_total() == before {
            return Err(CoderError::CountsExceedPrecision { symbols, limit });
        }
    }
    Ok(())
}

/// Encodes a whole sequence under a fixed distribution.
pub fn encode_all(
    cfg: CoderConfig,
    dist: &ScaledDistribution,
    symbols: &[usize],
) -> Result<EncodedStream, CoderError> {
    let mut enc = Encoder::new(cfg);
    for &s in symbols {
        enc.encode(dist, s)?;
    }
    Ok(enc.finish())
}

/// Decodes exactly `count` symbols under a fixed distribution, flagging
/// streams that ran out of real digits along the way.
pub fn decode_all(
    cfg: CoderConfig,
    dist: &ScaledDistribution,
    count: usize,
    digits: &[u8],
) -> Result<Vec<usize>, CoderError> {
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let s = dec.decode(dist)?;
        if dec.pads() > cfg.precision as usize {
            return Err(CoderError::TruncatedStream {
                decoded: i as u64,
                expected: count as u64,
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Encodes a whole sequence adaptively from flat initial counts.
pub fn encode_all_adaptive(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    symbols: &[usize],
) -> Result<EncodedStream, CoderError> {
    let mut model = FrequencyModel::new(symbols_in_alphabet)?;
    let mut enc = Encoder::new(cfg);
    for &s in symbols {
        enc.encode_adaptive(&mut model, s)?;
    }
    Ok(enc.finish())
}

/// Inverse of [`encode_all_adaptive`].
pub fn decode_all_adaptive(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    count: usize,
    digits: &[u8],
) -> Result<Vec<usize>, CoderError> {
    let mut model = FrequencyModel::new(symbols_in_alphabet)?;
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let s = dec.decode_adaptive(&mut model)?;
        if dec.pads() > cfg.precision as usize {
            return Err(CoderError::TruncatedStream {
                decoded: i as u64,
                expected: count as u64,
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Encodes adaptively with the estimate frozen between rebuilds: counts
/// update every symbol, but the coding distribution is rescaled only once
/// per `period` symbols, so the per-symbol work stays at fixed-model cost.
pub fn encode_all_periodic(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    symbols: &[usize],
    period: usize,
) -> Result<EncodedStream, CoderError> {
    if period == 0 {
        return Err(ModelError::InvalidConfiguration.into());
    }
    let mut model = FrequencyModel::new(symbols_in_alphabet)?;
    let mut dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
    let mut enc = Encoder::new(cfg);
    for (i, &s) in symbols.iter().enumerate() {
        if i > 0 && i % period == 0 {
            dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
        }
        enc.encode(&dist, s)?;
        model.update(s);
    }
    Ok(enc.finish())
}

/// Inverse of [`encode_all_periodic`].
pub fn decode_all_periodic(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    count: usize,
    digits: &[u8],
    period: usize,
) -> Result<Vec<usize>, CoderError> {
    if period == 0 {
        return Err(ModelError::InvalidConfiguration.into());
    }
    let mut model = FrequencyModel::new(symbols_in_alphabet)?;
    let mut dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        if i > 0 && i % period == 0 {
            dist = model.rebuild_periodic(cfg.radix(), cfg.precision())?.0;
        }
        let s = dec.decode(&dist)?;
        if dec.pads() > cfg.precision as usize {
            return Err(CoderError::TruncatedStream {
                decoded: i as u64,
                expected: count as u64,
            });
        }
        model.update(s);
        out.push(s);
    }
    Ok(out)
}

/// Encodes a whole sequence with a balanced tree model.
pub fn encode_all_tree(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    symbols: &[usize],
) -> Result<EncodedStream, CoderError> {
    let mut model = TreeModel::new(TreeShape::bisection(symbols_in_alphabet)?);
    let mut enc = Encoder::new(cfg);
    for &s in symbols {
        enc.encode_tree(&mut model, s)?;
    }
    Ok(enc.finish())
}

/// Inverse of [`encode_all_tree`].
pub fn decode_all_tree(
    cfg: CoderConfig,
    symbols_in_alphabet: usize,
    count: usize,
    digits: &[u8],
) -> Result<Vec<usize>, CoderError> {
    let mut model = TreeModel::new(TreeShape::bisection(symbols_in_alphabet)?);
    let mut dec = Decoder::new(cfg, digits);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let s = dec.decode_tree(&mut model)?;
        if dec.pads() > cfg.precision as usize {
            return Err(CoderError::TruncatedStream {
                decoded: i as u64,
                expected: count as u64,
            });
        }
        out.push(s);
    }
    Ok(out)
}

/// Re-expresses a binary code value in another radix.
///
/// The input bits are the fraction digits of a code value v with t bits;
/// the result is the smallest n-digit radix-D fraction at or above v,
/// digit by digit, most significant first. Recoverable exactly by
/// [`change_radix_back`] whenever D^n covers 2^t.
pub fn change_radix(bits: &[u8], radix: u64, digit_count: usize) -> Result<Vec<u8>, CoderError> {
    if !(2..=256).contains(&radix) {
        return Err(CoderError::RadixOutOfRange(radix));
    }
    let mut k = BigUint::zero();
    for &bit in bits {
        if bit > 1 {
            return Err(DigitError::DigitOutOfRange {
                digit: bit,
                radix: 2,
            }
            .into());
        }
        k <<= 1;
        if bit == 1 {
            k += 1u32;
        }
    }
    let scale = BigUint::from(radix).pow(digit_count as u32);
    let denom = BigUint::from(1u32) << bits.len();
    let c = (k * &scale + (&denom - 1u32)) / denom;
    if c >= scale {
        return Err(CoderError::ValueTooWide {
            digits: digit_count,
            radix,
        });
    }
    let mut out = c.to_radix_be(radix as u32);
    if out == [0] {
        out.clear();
    }
    let mut padded = vec![0u8; digit_count - out.len()];
    padded.extend_from_slice(&out);
    Ok(padded)
}

/// Recovers the first t bits of the code value behind [`change_radix`].
pub fn change_radix_back(
    radix_digits: &[u8],
    radix: u64,
    bit_count: usize,
) -> Result<Vec<u8>, CoderError> {
    if !(2..=256).contains(&radix) {
        return Err(CoderError::RadixOutOfRange(radix));
    }
    for &d in radix_digits {
        if d as u64 >= radix {
            return Err(DigitError::DigitOutOfRange { digit: d, radix }.into());
        }
    }
    let c = BigUint::from_radix_be(radix_digits, radix as u32).unwrap_or_default();
    let scale = BigUint::from(radix).pow(radix_digits.len() as u32);
    let k = (c << bit_count) / scale;
    let mut bits = k.to_radix_be(2);
    if bits == [0] {
        bits.clear();
    }
    if bits.len() > bit_count {
        return Err(CoderError::ValueTooWide {
            digits: bit_count,
            radix: 2,
        });
    }
    let mut padded = vec![0u8; bit_count - bits.len()];
    padded.extend_from_slice(&bits);
    Ok(padded)
}
