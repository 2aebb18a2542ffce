//! Arbitrary-precision rational Elias coder.
//!
//! Everything here runs on exact rationals, so interval bases and lengths
//! come out digit-for-digit reproducible no matter the platform. The
//! fixed-precision engine in `coder` is validated against this module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::model::StaticDistribution;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExactError {
    #[error("symbol {symbol} out of range for alphabet of {alphabet} symbols")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },
    #[error("need one model per symbol or a single broadcast model: {models} models, {symbols} symbols")]
    ModelCountMismatch { models: usize, symbols: usize },
    #[error("interval must satisfy 0 <= base, length > 0, base + length <= 1")]
    InvalidInterval,
    #[error("code value must lie in [0, 1)")]
    ValueOutOfRange,
    #[error("length and scale factors must be positive")]
    NonpositiveScale,
    #[error("radix must be at least 2")]
    RadixTooSmall,
}

fn ratio(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Half-open subinterval `[b, b+l)` of the unit interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    b: BigRational,
    l: BigRational,
}

impl Interval {
    /// The initial interval `[0, 1)`.
    pub fn unit() -> Self {
        Self {
            b: BigRational::zero(),
            l: BigRational::one(),
        }
    }

    pub fn new(b: BigRational, l: BigRational) -> Result<Self, ExactError> {
        if b.is_negative() || !l.is_positive() || &b + &l > BigRational::one() {
            return Err(ExactError::InvalidInterval);
        }
        Ok(Self { b, l })
    }

    /// Wraps a base and length with no unit-interval check. Rescaling
    /// chains pass through states outside [0, 1] by design; every other
    /// caller should use `new`.
    pub fn from_raw(b: BigRational, l: BigRational) -> Self {
        Self { b, l }
    }

    pub fn base(&self) -> &BigRational {
        &self.b
    }

    pub fn length(&self) -> &BigRational {
        &self.l
    }

    /// Exclusive upper end `b + l`.
    pub fn end(&self) -> BigRational {
        &self.b + &self.l
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        v >= &self.b && *v < self.end()
    }

    /// Subinterval selected by a symbol with cumulative probability
    /// `c_lo` and probability `p`.
    pub fn refine(&self, c_lo: &BigRational, p: &BigRational) -> Self {
        Self {
            b: &self.b + c_lo * &self.l,
            l: p * &self.l,
        }
    }
}

/// A number in [0, 1) together with its base-D digit expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeValue {
    value: BigRational,
    radix: u64,
    digits: Vec<u8>,
}

impl CodeValue {
    /// Evaluates `0.d1 d2 ...` in base `radix`.
    pub fn from_digits(radix: u64, digits: Vec<u8>) -> Result<Self, ExactError> {
        if radix < 2 {
            return Err(ExactError::RadixTooSmall);
        }
        let mut num = BigInt::zero();
        for &d in &digits {
            debug_assert!((d as u64) < radix);
            num = num * BigInt::from(radix) + BigInt::from(d);
        }
        let den = BigInt::from(radix).pow(digits.len() as u32);
        Ok(Self {
            value: BigRational::new(num, den),
            radix,
            digits,
        })
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn radix(&self) -> u64 {
        self.radix
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }
}

fn check_broadcast(models: &[StaticDistribution], n: usize) -> Result<(), ExactError> {
    if models.len() == 1 || models.len() == n {
        Ok(())
    } else {
        Err(ExactError::ModelCountMismatch {
            models: models.len(),
            symbols: n,
        })
    }
}

fn model_for(models: &[StaticDistribution], k: usize) -> &StaticDistribution {
    if models.len() == 1 {
        &models[0]
    } else {
        &models[k]
    }
}

/// Runs the interval recursion over `symbols`, returning all intervals
/// from the initial `[0,1)` through the final one.
///
/// `models` holds either one distribution applied to every position or
/// one distribution per position.
pub fn encode_sequence(
    models: &[StaticDistribution],
    symbols: &[usize],
) -> Result<Vec<Interval>, ExactError> {
    check_broadcast(models, symbols.len())?;
    let mut out = Vec::with_capacity(symbols.len() + 1);
    out.push(Interval::unit());
    for (k, &s) in symbols.iter().enumerate() {
        let m = model_for(models, k);
        if s >= m.len() {
            return Err(ExactError::SymbolOutOfRange {
                symbol: s,
                alphabet: m.len(),
            });
        }
        let last = out.last().unwrap();
        out.push(last.refine(m.cumulative(s), m.probability(s)));
    }
    Ok(out)
}

/// Smallest digit count that can address an interval of length `l`,
/// which is the ceiling of `-log_D l`.
pub fn min_code_length(l: &BigRational, radix: u64) -> Result<u64, ExactError> {
    if radix < 2 {
        return Err(ExactError::RadixTooSmall);
    }
    if !l.is_positive() || l > &BigRational::one() {
        return Err(ExactError::NonpositiveScale);
    }
    let mut n = 0;
    let mut scaled = l.clone();
    let d = BigRational::from(BigInt::from(radix));
    while scaled < BigRational::one() {
        scaled *= &d;
        n += 1;
    }
    Ok(n)
}

/// Picks the value inside `[b, b+l)` whose base-D expansion is shortest,
/// breaking ties toward the smaller value.
///
/// The minimal expansion never ends in a zero digit (dropping it would
/// give a shorter in-interval value), so no trailing-zero cleanup is
/// needed and no infinite expansion can be produced.
pub fn select_code_value(interval: &Interval, radix: u64) -> Result<CodeValue, ExactError> {
    if radix < 2 {
        return Err(ExactError::RadixTooSmall);
    }
    let end = interval.end();
    let d = BigInt::from(radix);
    let mut pow = BigInt::one();
    for n in 0u32.. {
        // Smallest candidate with n digits is ceil(b * D^n) / D^n.
        let k = (interval.base() * BigRational::from(pow.clone())).ceil().to_integer();
        let candidate = BigRational::new(k.clone(), pow.clone());
        if candidate < end {
            let digits = int_digits(&k, radix, n as usize);
            return Ok(CodeValue {
                value: candidate,
                radix,
                digits,
            });
        }
        pow *= &d;
    }
    unreachable!("an interval of positive length always contains a finite expansion")
}

fn int_digits(k: &BigInt, radix: u64, width: usize) -> Vec<u8> {
    let mut digits = vec![0u8; width];
    let mut rest = k.clone();
    let d = BigInt::from(radix);
    for slot in digits.iter_mut().rev() {
        let (q, r) = num_integer::Integer::div_rem(&rest, &d);
        *slot = r.to_u8().expect("digit below radix fits in u8");
        rest = q;
    }
    debug_assert!(rest.is_zero(), "value must fit in {width} digits");
    digits
}

/// Decodes by the normalized-value recursion: each step picks the symbol
/// whose cumulative range holds the running value, then renormalizes the
/// value into that symbol's subinterval.
///
/// Returns the symbols and the running value before each step.
pub fn decode_normalized(
    value: &BigRational,
    models: &[StaticDistribution],
    n: usize,
) -> Result<(Vec<usize>, Vec<BigRational>), ExactError> {
    check_broadcast(models, n)?;
    if value.is_negative() || value >= &BigRational::one() {
        return Err(ExactError::ValueOutOfRange);
    }
    let mut symbols = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut v = value.clone();
    for k in 0..n {
        let m = model_for(models, k);
        values.push(v.clone());
        let s = locate_symbol(m, &v);
        v = (&v - m.cumulative(s)) / m.probability(s);
        symbols.push(s);
    }
    Ok((symbols, values))
}

/// Decodes by reconstructing the encoder's intervals and testing which
/// subinterval holds the code value. Equivalent to `decode_normalized`.
pub fn decode_by_intervals(
    value: &BigRational,
    models: &[StaticDistribution],
    n: usize,
) -> Result<(Vec<usize>, Vec<Interval>), ExactError> {
    check_broadcast(models, n)?;
    if value.is_negative() || value >= &BigRational::one() {
        return Err(ExactError::ValueOutOfRange);
    }
    let mut symbols = Vec::with_capacity(n);
    let mut intervals = Vec::with_capacity(n + 1);
    intervals.push(Interval::unit());
    for k in 0..n {
        let m = model_for(models, k);
        let last = intervals.last().unwrap();
        // The normalized position of v inside the current interval falls
        // in exactly one cumulative range.
        let pos = (value - last.base()) / last.length();
        let s = locate_symbol(m, &pos);
        intervals.push(last.refine(m.cumulative(s), m.probability(s)));
        symbols.push(s);
    }
    Ok((symbols, intervals))
}

fn locate_symbol(m: &StaticDistribution, v: &BigRational) -> usize {
    // Largest s with c(s) <= v; v < 1 = c(M) keeps this in range.
    let mut s = 0;
    while s + 1 < m.len() && m.cumulative(s + 1) <= v {
        s += 1;
    }
    s
}

/// Affine renormalization `b' = gamma (b - delta)`, `l' = gamma l`,
/// optionally mapping a code value the same way.
pub fn rescale(
    interval: &Interval,
    delta: &BigRational,
    gamma: &BigRational,
    value: Option<&BigRational>,
) -> Result<(Interval, Option<BigRational>), ExactError> {
    if !gamma.is_positive() {
        return Err(ExactError::NonpositiveScale);
    }
    let b = gamma * (interval.base() - delta);
    let l = gamma * interval.length();
    let v = value.map(|v| gamma * (v - delta));
    Ok((Interval::from_raw(b, l), v))
}

/// Undoes a chain of `rescale` steps, newest last, restoring the
/// original interval and code value exactly.
pub fn recover_original(
    interval: &Interval,
    chain: &[(BigRational, BigRational)],
    value: Option<&BigRational>,
) -> Result<(Interval, Option<BigRational>), ExactError> {
    let mut b = interval.base().clone();
    let mut l = interval.length().clone();
    let mut v = value.cloned();
    for (delta, gamma) in chain.iter().rev() {
        if !gamma.is_positive() {
            return Err(ExactError::NonpositiveScale);
        }
        b = &b / gamma + delta;
        l = &l / gamma;
        v = v.map(|v| &v / gamma + delta);
    }
    Ok((Interval::from_raw(b, l), v))
}

/// One recorded step of the renormalizing rational encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    /// Interval update for one symbol; the base is recorded before any
    /// carry, so it may reach into [1, 2).
    Symbol {
        symbol: usize,
        base: BigRational,
        length: BigRational,
    },
    /// A carry: the base dropped by one and the digit buffer was
    /// incremented.
    Carry,
    /// One renormalization: digit out, interval scaled by the radix.
    Renormalize {
        digit: u8,
        base: BigRational,
        length: BigRational,
    },
    /// A digit appended by the final value selection.
    Finalize { digit: u8 },
}

/// Rational encoder that renormalizes like the fixed-precision engine:
/// digits stream out as soon as the interval length drops to `1/D`,
/// carries propagate through the digit buffer, and the final selection
/// settles everything.
///
/// Used to reproduce hand-worked traces exactly and as a bridge between
/// the pure interval recursion and the integer registers.
#[derive(Debug, Clone)]
pub struct RenormalizingEncoder {
    radix: u64,
    b: BigRational,
    l: BigRational,
    digits: Vec<u8>,
    events: Vec<TraceEvent>,
    carries: usize,
}

impl RenormalizingEncoder {
    pub fn new(radix: u64) -> Result<Self, ExactError> {
        if radix < 2 {
            return Err(ExactError::RadixTooSmall);
        }
        Ok(Self {
            radix,
            b: BigRational::zero(),
            l: BigRational::one(),
            digits: Vec::new(),
            events: Vec::new(),
            carries: 0,
        })
    }

    pub fn encode(&mut self, model: &StaticDistribution, s: usize) -> Result<(), ExactError> {
        if s >= model.len() {
            return Err(ExactError::SymbolOutOfRange {
                symbol: s,
                alphabet: model.len(),
            });
        }
        self.b += model.cumulative(s) * &self.l;
        self.l *= model.probability(s);
        self.events.push(TraceEvent::Symbol {
            symbol: s,
            base: self.b.clone(),
            length: self.l.clone(),
        });
        if self.b >= BigRational::one() {
            self.b -= BigRational::one();
            self.carry();
        }
        let d = BigRational::from(BigInt::from(self.radix));
        let threshold = ratio(1, self.radix);
        while self.l <= threshold {
            let digit = (&self.b * &d).floor().to_integer().to_u8().unwrap();
            self.b = &self.b * &d - BigRational::from(BigInt::from(digit));
            self.l *= &d;
            self.digits.push(digit);
            self.events.push(TraceEvent::Renormalize {
                digit,
                base: self.b.clone(),
                length: self.l.clone(),
            });
        }
        Ok(())
    }

    fn carry(&mut self) {
        // Trailing D-1 digits roll over to 0; the first lower digit
        // absorbs the increment.
        let top = (self.radix - 1) as u8;
        let mut i = self.digits.len();
        loop {
            assert!(i > 0, "carry cannot run past the first settled digit");
            i -= 1;
            if self.digits[i] == top {
                self.digits[i] = 0;
            } else {
                self.digits[i] += 1;
                break;
            }
        }
        self.carries += 1;
        self.events.push(TraceEvent::Carry);
    }

    /// Appends the final digits that pin a code value inside the last
    /// interval, and returns the digit stream, the trace, and the value.
    ///
    /// Selection favors the shortest tail: the half-point digit `D/2`
    /// when the interval straddles one half, else a carry into the
    /// settled digits when the interval covers the top of the unit range,
    /// else the smallest single digit above the base.
    pub fn finish(mut self) -> RenormalizedOutput {
        let d = BigRational::from(BigInt::from(self.radix));
        let one = BigRational::one();
        let half = ratio(1, 2);
        let end = &self.b + &self.l;
        if self.radix.is_multiple_of(2) && self.b <= half && end > half {
            let digit = (self.radix / 2) as u8;
            self.digits.push(digit);
            self.events.push(TraceEvent::Finalize { digit });
        } else if end > one {
            self.carry();
            self.digits.push(0);
            self.events.push(TraceEvent::Finalize { digit: 0 });
        } else {
            // l > 1/D makes ceil(D b) a valid digit strictly inside.
            let digit = (&self.b * &d).ceil().to_integer().to_u8().unwrap();
            self.digits.push(digit);
            self.events.push(TraceEvent::Finalize { digit });
        }
        let value = CodeValue::from_digits(self.radix, self.digits).unwrap();
        RenormalizedOutput {
            value,
            events: self.events,
            carries: self.carries,
        }
    }
}

/// Result of a renormalizing encode: the selected code value (whose
/// digits are the output stream), the full event trace, and how many
/// carries occurred.
#[derive(Debug, Clone)]
pub struct RenormalizedOutput {
    pub value: CodeValue,
    pub events: Vec<TraceEvent>,
    pub carries: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::StaticDistribution;

    /// Parses an exact decimal string like "0.7426".
    fn dec(s: &str) -> BigRational {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits: String = format!("{int}{frac}");
        let num: BigInt = digits.parse().unwrap();
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        BigRational::new(num, den)
    }

    fn four_letter_source() -> StaticDistribution {
        StaticDistribution::from_counts(&[2, 5, 2, 1]).unwrap()
    }

    #[test]
    fn encode_sequence_reproduces_worked_example() {
        let m = four_letter_source();
        let intervals = encode_sequence(&[m], &[2, 1, 0, 0, 1, 3]).unwrap();
        let bases = ["0", "0.7", "0.74", "0.74", "0.74", "0.7408", "0.7426"];
        let lengths = ["1", "0.2", "0.1", "0.02", "0.004", "0.002", "0.0002"];
        assert_eq!(intervals.len(), 7);
        for (k, iv) in intervals.iter().enumerate() {
            assert_eq!(iv.base(), &dec(bases[k]), "base at step {k}");
            assert_eq!(iv.length(), &dec(lengths[k]), "length at step {k}");
        }
    }

    #[test]
    fn empty_sequence_gives_unit_interval() {
        let m = four_letter_source();
        let intervals = encode_sequence(&[m], &[]).unwrap();
        assert_eq!(intervals, vec![Interval::unit()]);
    }

    #[test]
    fn final_length_is_probability_product() {
        let m = four_letter_source();
        let symbols = [2usize, 1, 0, 0, 1, 3];
        let intervals = encode_sequence(std::slice::from_ref(&m), &symbols).unwrap();
        let product = symbols
            .iter()
            .fold(BigRational::one(), |acc, &s| acc * m.probability(s));
        assert_eq!(intervals.last().unwrap().length(), &product);
    }

    #[test]
    fn min_code_length_examples() {
        assert_eq!(min_code_length(&dec("0.0002"), 2).unwrap(), 13);
        assert_eq!(min_code_length(&dec("0.0002"), 3).unwrap(), 8);
        assert_eq!(min_code_length(&dec("0.5"), 2).unwrap(), 1);
        assert_eq!(min_code_length(&BigRational::one(), 2).unwrap(), 0);
    }

    #[test]
    fn select_code_value_binary_example() {
        let iv = Interval::new(dec("0.7426"), dec("0.0002")).unwrap();
        let cv = select_code_value(&iv, 2).unwrap();
        assert_eq!(cv.digits(), &[1, 0, 1, 1, 1, 1, 1, 0, 0, 0, 1]);
        assert_eq!(cv.value(), &dec("0.74267578125"));
        assert_eq!(cv.len(), 11);
    }

    #[test]
    fn select_code_value_ternary_example() {
        let iv = Interval::new(dec("0.7426"), dec("0.0002")).unwrap();
        let cv = select_code_value(&iv, 3).unwrap();
        assert_eq!(cv.digits(), &[2, 0, 2, 0, 0, 1, 1, 1]);
        assert_eq!(
            cv.value(),
            &BigRational::new(BigInt::from(4873), BigInt::from(6561))
        );
    }

    #[test]
    fn select_code_value_of_unit_interval_is_empty() {
        let cv = select_code_value(&Interval::unit(), 2).unwrap();
        assert_eq!(cv.digits(), &[] as &[u8]);
        assert!(cv.value().is_zero());
    }

    #[test]
    fn selected_length_never_exceeds_min_code_length() {
        let m = four_letter_source();
        let symbols = [2usize, 1, 0, 0, 1, 3];
        let intervals = encode_sequence(&[m], &symbols).unwrap();
        let last = intervals.last().unwrap();
        for radix in [2u64, 3, 4, 16] {
            let cv = select_code_value(last, radix).unwrap();
            let bound = min_code_length(last.length(), radix).unwrap();
            assert!(cv.len() as u64 <= bound, "radix {radix}");
        }
    }

    #[test]
    fn decode_normalized_recovers_sequence_and_values() {
        let m = four_letter_source();
        let v = dec("0.74267578125");
        let (symbols, values) = decode_normalized(&v, &[m], 6).unwrap();
        assert_eq!(symbols, vec![2, 1, 0, 0, 1, 3]);
        let expected = [
            "0.74267578125",
            "0.21337890625",
            "0.0267578125",
            "0.1337890625",
            "0.6689453125",
            "0.937890625",
        ];
        for (k, want) in expected.iter().enumerate() {
            assert_eq!(values[k], dec(want), "running value at step {k}");
        }
    }

    #[test]
    fn decode_normalized_past_the_end_keeps_producing() {
        let m = four_letter_source();
        let v = dec("0.74267578125");
        let (symbols, values) = decode_normalized(&v, &[m], 8).unwrap();
        assert_eq!(&symbols[..6], &[2, 1, 0, 0, 1, 3]);
        assert_eq!(&symbols[6..], &[1, 1]);
        assert_eq!(values[6], dec("0.37890625"));
        assert_eq!(values[7], dec("0.3578125"));
    }

    #[test]
    fn decode_empty_is_empty() {
        let m = four_letter_source();
        let (symbols, values) = decode_normalized(&dec("0.5"), &[m], 0).unwrap();
        assert!(symbols.is_empty());
        assert!(values.is_empty());
    }

    #[test]
    fn both_decoders_agree_and_intervals_match_encoder() {
        let m = four_letter_source();
        let v = dec("0.74267578125");
        let (s1, _) = decode_normalized(&v, std::slice::from_ref(&m), 8).unwrap();
        let (s2, intervals) = decode_by_intervals(&v, std::slice::from_ref(&m), 8).unwrap();
        assert_eq!(s1, s2);
        let encoded = encode_sequence(&[m], &s2).unwrap();
        assert_eq!(intervals, encoded);
    }

    #[test]
    fn rescale_identity() {
        let iv = Interval::new(dec("0.3"), dec("0.2")).unwrap();
        let (out, v) = rescale(
            &iv,
            &BigRational::zero(),
            &BigRational::one(),
            Some(&dec("0.4")),
        )
        .unwrap();
        assert_eq!(out, iv);
        assert_eq!(v.unwrap(), dec("0.4"));
    }

    #[test]
    fn rescale_replay_of_worked_example() {
        // Code {2,1}, rescale by (0.74, 10), code {0,0}, rescale by
        // (0, 25), code {1,3}.
        let m = four_letter_source();
        let mut iv = Interval::unit();
        for s in [2usize, 1] {
            iv = iv.refine(m.cumulative(s), m.probability(s));
        }
        let (mut iv, _) = rescale(&iv, &dec("0.74"), &dec("10"), None).unwrap();
        for s in [0usize, 0] {
            iv = iv.refine(m.cumulative(s), m.probability(s));
        }
        let (mut iv, _) = rescale(&iv, &dec("0"), &dec("25"), None).unwrap();
        for s in [1usize, 3] {
            iv = iv.refine(m.cumulative(s), m.probability(s));
        }
        assert_eq!(iv.base(), &dec("0.65"));
        assert_eq!(iv.length(), &dec("0.05"));

        let chain = [
            (dec("0.74"), dec("10")),
            (dec("0"), dec("25")),
        ];
        let (orig, _) = recover_original(&iv, &chain, None).unwrap();
        assert_eq!(orig.base(), &dec("0.7426"));
        assert_eq!(orig.length(), &dec("0.0002"));
    }

    #[test]
    fn rescale_then_recover_is_identity() {
        let iv = Interval::new(dec("0.3"), dec("0.25")).unwrap();
        let v = dec("0.45");
        let (scaled, sv) = rescale(&iv, &dec("0.5"), &dec("2"), Some(&v)).unwrap();
        let chain = [(dec("0.5"), dec("2"))];
        let (back, bv) = recover_original(&scaled, &chain, sv.as_ref()).unwrap();
        assert_eq!(back, iv);
        assert_eq!(bv.unwrap(), v);
    }

    #[test]
    fn renormalizing_encoder_binary_trace() {
        let m = four_letter_source();
        let mut enc = RenormalizingEncoder::new(2).unwrap();
        for s in [2usize, 1, 0, 0, 1, 3] {
            enc.encode(&m, s).unwrap();
        }
        let out = enc.finish();
        assert_eq!(
            out.value.digits(),
            &[1, 0, 1, 1, 1, 1, 1, 0, 0, 0, 1, 0, 0]
        );
        assert_eq!(out.carries, 2);
        assert_eq!(out.value.value(), &dec("0.74267578125"));
    }

    #[test]
    fn renormalizing_encoder_binary_events() {
        let m = four_letter_source();
        let mut enc = RenormalizingEncoder::new(2).unwrap();
        for s in [2usize, 1, 0, 0, 1, 3] {
            enc.encode(&m, s).unwrap();
        }
        let want = [
            ("s", dec("0.7"), dec("0.2")),
            ("r", dec("0.4"), dec("0.4")),
            ("r", dec("0.8"), dec("0.8")),
            ("s", dec("0.96"), dec("0.4")),
            ("r", dec("0.92"), dec("0.8")),
            ("s", dec("0.92"), dec("0.16")),
            ("r", dec("0.84"), dec("0.32")),
            ("r", dec("0.68"), dec("0.64")),
            ("s", dec("0.68"), dec("0.128")),
            ("r", dec("0.36"), dec("0.256")),
            ("r", dec("0.72"), dec("0.512")),
            ("s", dec("0.8224"), dec("0.256")),
            ("r", dec("0.6448"), dec("0.512")),
            ("s", dec("1.1056"), dec("0.0512")),
            ("c", BigRational::zero(), BigRational::zero()),
            ("r", dec("0.2112"), dec("0.1024")),
            ("r", dec("0.4224"), dec("0.2048")),
            ("r", dec("0.8448"), dec("0.4096")),
            ("r", dec("0.6896"), dec("0.8192")),
        ];
        assert_eq!(enc.events.len(), want.len());
        for (k, (kind, b, l)) in want.iter().enumerate() {
            match (&enc.events[k], *kind) {
                (TraceEvent::Symbol { base, length, .. }, "s")
                | (TraceEvent::Renormalize { base, length, .. }, "r") => {
                    assert_eq!(base, b, "base at event {k}");
                    assert_eq!(length, l, "length at event {k}");
                }
                (TraceEvent::Carry, "c") => {}
                (got, want) => panic!("event {k}: expected {want}, got {got:?}"),
            }
        }
        // After the carry the digit buffer reads 10111110.
        let out = enc.finish();
        assert_eq!(
            &out.value.digits()[..8],
            &[1, 0, 1, 1, 1, 1, 1, 0],
            "settled digits after the in-stream carry"
        );
    }

    #[test]
    fn renormalizing_encoder_hexadecimal_trace() {
        let m = four_letter_source();
        let mut enc = RenormalizingEncoder::new(16).unwrap();
        for s in [2usize, 1, 0, 0, 1, 3] {
            enc.encode(&m, s).unwrap();
        }
        let out = enc.finish();
        assert_eq!(out.value.digits(), &[0xB, 0xE, 0x2, 0x0]);
        assert_eq!(out.carries, 2);
        assert_eq!(out.value.value(), &dec("0.74267578125"));
    }

    #[test]
    fn hexadecimal_trace_events() {
        let m = four_letter_source();
        let mut enc = RenormalizingEncoder::new(16).unwrap();
        for s in [2usize, 1, 0, 0, 1, 3] {
            enc.encode(&m, s).unwrap();
        }
        let want = [
            ("s", dec("0.7"), dec("0.2")),
            ("s", dec("0.74"), dec("0.1")),
            ("s", dec("0.74"), dec("0.02")),
            ("r", dec("0.84"), dec("0.32")),
            ("s", dec("0.84"), dec("0.064")),
            ("s", dec("0.8528"), dec("0.032")),
            ("r", dec("0.6448"), dec("0.512")),
            ("s", dec("1.1056"), dec("0.0512")),
            ("c", BigRational::zero(), BigRational::zero()),
            ("r", dec("0.6896"), dec("0.8192")),
        ];
        assert_eq!(enc.events.len(), want.len());
        for (k, (kind, b, l)) in want.iter().enumerate() {
            match (&enc.events[k], *kind) {
                (TraceEvent::Symbol { base, length, .. }, "s")
                | (TraceEvent::Renormalize { base, length, .. }, "r") => {
                    assert_eq!(base, b, "base at event {k}");
                    assert_eq!(length, l, "length at event {k}");
                }
                (TraceEvent::Carry, "c") => {}
                (got, want) => panic!("event {k}: expected {want}, got {got:?}"),
            }
        }
    }

    #[test]
    fn nesting_holds_along_worked_example() {
        let m = four_letter_source();
        let intervals = encode_sequence(&[m], &[2, 1, 0, 0, 1, 3]).unwrap();
        for pair in intervals.windows(2) {
            assert!(pair[1].base() >= pair[0].base());
            assert!(pair[1].end() <= pair[0].end());
        }
    }
}
