//! Fixed-width register words.
//!
//! Every register in the array (weight, activation, multiplier output and
//! accumulator) is an unsigned word of a fixed bit width. All arithmetic
//! wraps modulo `2^width`; nothing saturates except the explicit
//! [`QuantizationStrategy::Saturate`] strategy.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Widest register the analyzer accepts.
pub const MAX_WIDTH: u8 = 32;

/// `2^width - 1` as a `u64` so that `width == 32` does not overflow.
#[inline]
pub fn mask(width: u8) -> u64 {
    (1u64 << width) - 1
}

/// Bit widths of the four register roles in a MAC unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitWidths {
    pub weight: u8,
    pub activation: u8,
    pub multiplier: u8,
    pub accumulator: u8,
}

impl Default for BitWidths {
    /// 4-bit weights and activations, 8-bit multiplier, 10-bit accumulator.
    fn default() -> Self {
        BitWidths {
            weight: 4,
            activation: 4,
            multiplier: 8,
            accumulator: 10,
        }
    }
}

impl BitWidths {
    pub fn new(weight: u8, activation: u8, multiplier: u8, accumulator: u8) -> Result<Self> {
        let widths = BitWidths {
            weight,
            activation,
            multiplier,
            accumulator,
        };
        widths.validate()?;
        Ok(widths)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("weight_bits", self.weight),
            ("activation_bits", self.activation),
            ("multiplier_bits", self.multiplier),
            ("accumulator_bits", self.accumulator),
        ] {
            if w == 0 || w > MAX_WIDTH {
                return Err(Error::out_of_range(name, w as i64, format!("1..={MAX_WIDTH}")));
            }
        }
        Ok(())
    }

    /// Width of the register at `site`.
    pub fn of(&self, role: Register) -> u8 {
        match role {
            Register::Weight => self.weight,
            Register::Activation => self.activation,
            Register::Multiplier => self.multiplier,
            Register::Accumulator => self.accumulator,
        }
    }

    /// Number of distinct activation values, `2^activation_bits`.
    pub fn activation_levels(&self) -> u64 {
        1u64 << self.activation
    }

    /// True when no product of a weight and an activation can wrap the
    /// multiplier register.
    pub fn products_fit(&self) -> bool {
        self.multiplier as u32 >= self.weight as u32 + self.activation as u32
    }
}

/// Register roles inside a MAC unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Register {
    Weight,
    Activation,
    Multiplier,
    Accumulator,
}

/// An unsigned value tagged with its register width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word {
    value: u32,
    width: u8,
}

impl Word {
    /// Builds a word, rejecting values that do not fit in `width` bits.
    pub fn new(value: u64, width: u8) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::out_of_range("width", width as i64, format!("1..={MAX_WIDTH}")));
        }
        if value > mask(width) {
            return Err(Error::out_of_range(
                "value",
                value as i64,
                format!("0..={} for a {width}-bit word", mask(width)),
            ));
        }
        Ok(Word {
            value: value as u32,
            width,
        })
    }

    /// Builds a word from any integer by reducing it modulo `2^width`.
    /// Negative inputs map to their two's-complement residue.
    #[inline]
    pub fn wrapping(value: i64, width: u8) -> Self {
        debug_assert!(width >= 1 && width <= MAX_WIDTH);
        Word {
            value: (value as u64 & mask(width)) as u32,
            width,
        }
    }

    #[inline]
    pub fn zero(width: u8) -> Self {
        Word { value: 0, width }
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn width(self) -> u8 {
        self.width
    }

    #[inline]
    pub fn bit(self, index: u8) -> bool {
        index < self.width && (self.value >> index) & 1 == 1
    }

    /// Value under a two's-complement reading of the word.
    pub fn signed_value(self) -> i64 {
        let v = self.value as i64;
        if self.bit(self.width - 1) {
            v - (1i64 << self.width)
        } else {
            v
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// The constant a faulty bit is stuck at (`ST`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StuckValue {
    Zero,
    One,
}

impl StuckValue {
    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(StuckValue::Zero),
            1 => Ok(StuckValue::One),
            other => Err(Error::out_of_range("stuck", other as i64, "0 or 1")),
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            StuckValue::Zero => 0,
            StuckValue::One => 1,
        }
    }
}

impl fmt::Display for StuckValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_bit())
    }
}

/// A single stuck bit: position `SP` and stuck value `ST`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StuckSpec {
    pub bit: u8,
    pub stuck: StuckValue,
}

impl StuckSpec {
    pub fn new(bit: u8, stuck: StuckValue) -> Self {
        StuckSpec { bit, stuck }
    }

    /// The stuck-at mask `SM = 2^SP`.
    #[inline]
    pub fn mask(self) -> u64 {
        1u64 << self.bit
    }

    /// Forces the stuck bit on a raw register value. The caller guarantees
    /// that `bit` lies inside the register.
    #[inline]
    pub fn force(self, value: u32) -> u32 {
        match self.stuck {
            StuckValue::One => value | (1u32 << self.bit),
            StuckValue::Zero => value & !(1u32 << self.bit),
        }
    }

    /// Whether forcing the bit leaves `value` unchanged.
    #[inline]
    pub fn is_masked(self, value: u32) -> bool {
        let set = (value >> self.bit) & 1 == 1;
        set == (self.stuck == StuckValue::One)
    }
}

/// Returns `w` with bit `SP` forced to `ST`.
pub fn apply_stuck(w: Word, s: StuckSpec) -> Result<Word> {
    if s.bit >= w.width {
        return Err(Error::out_of_range(
            "stuck bit",
            s.bit as i64,
            format!("0..{} for a {}-bit register", w.width, w.width),
        ));
    }
    Ok(Word {
        value: s.force(w.value),
        width: w.width,
    })
}

/// `(a + b) mod 2^width`.
#[inline]
pub fn wrap_add(a: Word, b: Word, width: u8) -> Word {
    Word::wrapping((a.value as u64 + b.value as u64) as i64, width)
}

/// Rectified linear unit on an accumulator word.
///
/// Under unsigned semantics every word is non-negative and this is the
/// identity; with `signed` the word is read as two's complement and
/// negative values clamp to zero.
#[inline]
pub fn relu(v: Word, signed: bool) -> Word {
    if signed && v.bit(v.width - 1) {
        Word::zero(v.width)
    } else {
        v
    }
}

/// How the accumulator result is narrowed to an activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum QuantizationStrategy {
    /// Keep the most significant `activation_bits` of the accumulator.
    #[default]
    KeepHigh,
    /// Keep the least significant `activation_bits`.
    KeepLow,
    /// Clamp to the largest activation value.
    Saturate,
}

impl QuantizationStrategy {
    pub fn name(self) -> &'static str {
        match self {
            QuantizationStrategy::KeepHigh => "keep-high",
            QuantizationStrategy::KeepLow => "keep-low",
            QuantizationStrategy::Saturate => "saturate",
        }
    }

    /// Raw form of [`quantize`] used by the inner loops.
    #[inline]
    pub fn apply(self, acc: u32, acc_bits: u8, act_bits: u8) -> u32 {
        let act_mask = mask(act_bits);
        let acc = acc as u64;
        let out = match self {
            QuantizationStrategy::KeepHigh => {
                let shift = acc_bits.saturating_sub(act_bits);
                (acc >> shift) & act_mask
            }
            QuantizationStrategy::KeepLow => acc & act_mask,
            QuantizationStrategy::Saturate => acc.min(act_mask),
        };
        out as u32
    }
}

impl FromStr for QuantizationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "keep-high" => Ok(QuantizationStrategy::KeepHigh),
            "keep-low" => Ok(QuantizationStrategy::KeepLow),
            "saturate" => Ok(QuantizationStrategy::Saturate),
            other => Err(Error::Config(format!(
                "unknown quantization strategy {other:?} (expected keep-high, keep-low or saturate)"
            ))),
        }
    }
}

impl fmt::Display for QuantizationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Narrows an accumulator word to an activation word.
pub fn quantize(acc: Word, strategy: QuantizationStrategy, activation_bits: u8) -> Word {
    let v = strategy.apply(acc.value, acc.width, activation_bits);
    Word {
        value: v,
        width: activation_bits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(value: u64, width: u8) -> Word {
        Word::new(value, width).unwrap()
    }

    fn one(bit: u8) -> StuckSpec {
        StuckSpec::new(bit, StuckValue::One)
    }

    fn zero(bit: u8) -> StuckSpec {
        StuckSpec::new(bit, StuckValue::Zero)
    }

    #[test]
    fn stuck_examples() {
        assert_eq!(apply_stuck(w(0b0101, 4), one(1)).unwrap().value(), 0b0111);
        assert_eq!(apply_stuck(w(0b0101, 4), one(0)).unwrap().value(), 0b0101);
        // clearing bit 3 of 15 leaves 15 - 8
        assert_eq!(apply_stuck(w(0b1111, 4), zero(3)).unwrap().value(), 15 - 8);
    }

    #[test]
    fn stuck_bit_outside_register() {
        assert!(apply_stuck(w(3, 4), one(4)).is_err());
        assert!(apply_stuck(w(3, 32), one(31)).is_ok());
    }

    #[test]
    fn wrap_add_examples() {
        assert_eq!(wrap_add(w(1008, 10), w(16, 10), 10).value(), 0);
        assert_eq!(wrap_add(w(0, 10), w(77, 10), 10).value(), 77);
        assert_eq!(wrap_add(w(700, 10), w(700, 10), 10).value(), 1400 % 1024);
        assert_eq!(1400 % 1024, 376);
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(w(0, 10), false).value(), 0);
        assert_eq!(relu(w(37, 10), false).value(), 37);
        assert_eq!(relu(w(0b1111111111, 10), true).value(), 0);
        assert_eq!(w(0b1111111111, 10).signed_value(), -1);
        assert_eq!(relu(w(0b0111111111, 10), true).value(), 511);
    }

    #[test]
    fn quantize_examples() {
        use QuantizationStrategy::*;
        assert_eq!(quantize(w(1023, 10), KeepHigh, 4).value(), 15);
        assert_eq!(quantize(w(225, 10), KeepHigh, 4).value(), 225 >> 6);
        assert_eq!(quantize(w(225, 10), KeepLow, 4).value(), 225 % 16);
        assert_eq!(quantize(w(225, 10), Saturate, 4).value(), 15);
        assert_eq!(quantize(w(9, 10), Saturate, 4).value(), 9);
        // narrower accumulator than activation: nothing to drop
        assert_eq!(quantize(w(3, 2), KeepHigh, 4).value(), 3);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in [
            QuantizationStrategy::KeepHigh,
            QuantizationStrategy::KeepLow,
            QuantizationStrategy::Saturate,
        ] {
            assert_eq!(s.name().parse::<QuantizationStrategy>().unwrap(), s);
        }
        assert!("round".parse::<QuantizationStrategy>().is_err());
    }

    #[test]
    fn width_limits() {
        assert!(BitWidths::new(0, 4, 8, 10).is_err());
        assert!(BitWidths::new(4, 4, 8, 33).is_err());
        assert!(BitWidths::new(32, 32, 32, 32).is_ok());
        assert!(Word::new(16, 4).is_err());
        assert_eq!(Word::wrapping(-1, 10).value(), 1023);
    }

    fn word_and_spec() -> impl Strategy<Value = (Word, StuckSpec)> {
        (1u8..=MAX_WIDTH).prop_flat_map(|width| {
            (0..=mask(width), 0..width, any::<bool>()).prop_map(move |(v, bit, st)| {
                let stuck = if st { StuckValue::One } else { StuckValue::Zero };
                (Word::new(v, width).unwrap(), StuckSpec::new(bit, stuck))
            })
        })
    }

    proptest! {
        #[test]
        fn stuck_is_idempotent((word, spec) in word_and_spec()) {
            let once = apply_stuck(word, spec).unwrap();
            prop_assert_eq!(apply_stuck(once, spec).unwrap(), once);
        }

        #[test]
        fn stuck_changes_by_exactly_the_mask((word, spec) in word_and_spec()) {
            let forced = apply_stuck(word, spec).unwrap();
            let differs = word.bit(spec.bit) != (spec.stuck == StuckValue::One);
            prop_assert_eq!(forced != word, differs);
            prop_assert_eq!(spec.is_masked(word.value()), !differs);
            let delta = (forced.value() as i64 - word.value() as i64).unsigned_abs();
            prop_assert_eq!(delta, if differs { spec.mask() } else { 0 });
        }

        #[test]
        fn wrap_add_laws(width in 1u8..=MAX_WIDTH, a: u32, b: u32, c: u32, k in 0i64..4) {
            let m = mask(width);
            let (a, b, c) = (
                Word::wrapping((a as u64 & m) as i64, width),
                Word::wrapping((b as u64 & m) as i64, width),
                Word::wrapping((c as u64 & m) as i64, width),
            );
            prop_assert_eq!(wrap_add(a, b, width), wrap_add(b, a, width));
            prop_assert_eq!(
                wrap_add(wrap_add(a, b, width), c, width),
                wrap_add(a, wrap_add(b, c, width), width)
            );
            let overflow = Word::wrapping(k << width, width);
            prop_assert_eq!(wrap_add(a, overflow, width), a);
        }

        #[test]
        fn keep_high_is_monotone(x in 0u64..1024, y in 0u64..1024) {
            let (lo, hi) = (x.min(y), x.max(y));
            let q = |v| quantize(Word::new(v, 10).unwrap(), QuantizationStrategy::KeepHigh, 4).value();
            prop_assert!(q(lo) <= q(hi));
        }

        #[test]
        fn keep_low_is_periodic(x in 0u64..(1024 - 16)) {
            let q = |v| quantize(Word::new(v, 10).unwrap(), QuantizationStrategy::KeepLow, 4).value();
            prop_assert_eq!(q(x), q(x + 16));
        }
    }
}
