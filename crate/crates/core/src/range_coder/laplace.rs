//! Two-sided geometric ("discrete Laplace") model over all `i32` values.
//!
//! Frequencies live on a fixed 15-bit scale. The table is laid out as
//! `0, +1, -1, +2, -2, ..., +T, -T, +esc, -esc`, where the two escape symbols
//! absorb whatever mass the truncated geometric tail leaves over so the
//! total is exact. Escaped magnitudes `|v| > T` follow as an Elias-gamma style
//! suffix: the bit length through `encode_uniform(.., 32)`, then raw bits.

use super::{ilog, RangeDecoder, RangeEncoder};
use crate::error::{contract, Result};

/// Total frequency of every Laplace model.
pub const LAPLACE_TOTAL: u32 = 1 << 15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaplaceModel {
    zero_freq: u32,
    // frequency of +k (and of -k) for k = 1..=tail.len()
    tail: Vec<u32>,
    escape_freq: u32,
}

impl LaplaceModel {
    /// Builds a model from the mass at zero and the per-step decay, both in
    /// Q15 (`value / 32768`).
    ///
    /// Fails unless zero is the single most probable symbol, which is what
    /// makes `0` the cheapest value to code.
    pub fn new(p0_q15: u32, decay_q15: u32) -> Result<Self> {
        if p0_q15 == 0 || p0_q15 > LAPLACE_TOTAL - 2 {
            return Err(contract(format!(
                "laplace p0 {p0_q15} outside (0, {})",
                LAPLACE_TOTAL - 1
            )));
        }
        if decay_q15 == 0 || decay_q15 >= LAPLACE_TOTAL {
            return Err(contract(format!(
                "laplace decay {decay_q15} outside (0, {LAPLACE_TOTAL})"
            )));
        }
        let side = (LAPLACE_TOTAL - p0_q15) / 2;
        let zero_freq = LAPLACE_TOTAL - 2 * side;
        let mut tail = Vec::new();
        let mut cum = 0u32;
        // every magnitude keeps at least frequency 1 until the side mass runs
        // out, so rounding losses do not pile up in the escape
        let mut f = ((side * (LAPLACE_TOTAL - decay_q15)) >> 15).max(1);
        while cum + f < side {
            tail.push(f);
            cum += f;
            f = ((f * decay_q15) >> 15).max(1);
        }
        let escape_freq = side - cum;
        let first = tail.first().copied().unwrap_or(0);
        if zero_freq <= first.max(escape_freq) {
            return Err(contract(format!(
                "laplace p0 {p0_q15} is not the mode (first tail freq {first}, escape {escape_freq})"
            )));
        }
        Ok(Self {
            zero_freq,
            tail,
            escape_freq,
        })
    }

    /// Discrete Laplace model whose zero mass matches the decay:
    /// `p0 = (1 - d) / (1 + d)`.
    pub fn from_decay(decay_q15: u32) -> Result<Self> {
        if decay_q15 == 0 || decay_q15 >= LAPLACE_TOTAL {
            return Err(contract(format!(
                "laplace decay {decay_q15} outside (0, {LAPLACE_TOTAL})"
            )));
        }
        let p0 = (LAPLACE_TOTAL * (LAPLACE_TOTAL - decay_q15)) / (LAPLACE_TOTAL + decay_q15);
        Self::new(p0.clamp(1, LAPLACE_TOTAL - 2), decay_q15)
    }

    /// Largest magnitude coded without escape.
    pub fn tail_len(&self) -> u32 {
        self.tail.len() as u32
    }

    /// Cumulative interval `[fl, fh)` of the symbol carrying `value`, and
    /// whether it is an escape.
    pub(crate) fn interval(&self, value: i32) -> (u32, u32, bool) {
        if value == 0 {
            return (0, self.zero_freq, false);
        }
        let mag = value.unsigned_abs();
        let neg = value < 0;
        let t = self.tail_len();
        let mut fl = self.zero_freq;
        for &f in self.tail.iter().take((mag.min(t + 1) - 1) as usize) {
            fl += 2 * f;
        }
        let (f, escape) = if mag <= t {
            (self.tail[(mag - 1) as usize], false)
        } else {
            (self.escape_freq, true)
        };
        if neg {
            fl += f;
        }
        (fl, fl + f, escape)
    }

    /// Ideal cost of `value` under the model in bits, escape suffix included.
    pub fn cost_bits(&self, value: i32) -> f64 {
        let (fl, fh, escape) = self.interval(value);
        let mut bits = (f64::from(LAPLACE_TOTAL) / f64::from(fh - fl)).log2();
        if escape {
            let extra = u64::from(value.unsigned_abs() - self.tail_len());
            bits += 5.0 + (63 - extra.leading_zeros()) as f64;
        }
        bits
    }

    pub(crate) fn encode(&self, enc: &mut RangeEncoder, value: i32) -> Result<()> {
        let (fl, fh, escape) = self.interval(value);
        enc.encode(fl, fh, LAPLACE_TOTAL);
        if escape {
            // |v| - T >= 1; send its bit length, then the bits below the leading one
            let extra = value.unsigned_abs() - self.tail_len();
            let nb = ilog(extra);
            enc.encode_uniform(nb - 1, 32)?;
            enc.encode_raw_bits(extra & !(1 << (nb - 1)), nb - 1)?;
        }
        Ok(())
    }

    pub(crate) fn decode(&self, dec: &mut RangeDecoder<'_>) -> i32 {
        let fs = dec.decode(LAPLACE_TOTAL);
        if fs < self.zero_freq {
            dec.update(0, self.zero_freq, LAPLACE_TOTAL);
            return 0;
        }
        let mut fl = self.zero_freq;
        for (k, &f) in self.tail.iter().enumerate() {
            if fs < fl + 2 * f {
                let neg = fs >= fl + f;
                let lo = if neg { fl + f } else { fl };
                dec.update(lo, lo + f, LAPLACE_TOTAL);
                let mag = k as i32 + 1;
                return if neg { -mag } else { mag };
            }
            fl += 2 * f;
        }
        let neg = fs >= fl + self.escape_freq;
        let lo = if neg { fl + self.escape_freq } else { fl };
        dec.update(lo, lo + self.escape_freq, LAPLACE_TOTAL);
        // the uniform/raw reads cannot fail for these arguments
        let nb = dec.decode_uniform(32).unwrap_or(0) + 1;
        let low = dec.decode_raw_bits(nb - 1).unwrap_or(0);
        let extra = (1u64 << (nb - 1)) | u64::from(low);
        let mag = (u64::from(self.tail_len()) + extra).min(i32::MAX as u64 + 1);
        if neg {
            (-(mag as i64)) as i32
        } else {
            mag.min(i32::MAX as u64) as i32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q15(x: f64) -> u32 {
        (x * f64::from(LAPLACE_TOTAL)).round() as u32
    }

    #[test]
    fn frequencies_sum_to_total() {
        for d in [0.3, 0.5, 0.8, 0.9, 0.95] {
            let m = LaplaceModel::from_decay(q15(d)).unwrap();
            let sum: u32 = m.zero_freq + 2 * m.tail.iter().sum::<u32>() + 2 * m.escape_freq;
            assert_eq!(sum, LAPLACE_TOTAL, "decay {d}");
        }
    }

    #[test]
    fn flat_decays_build() {
        for d in (1..64).map(|i| i * 512) {
            let m = LaplaceModel::from_decay(d).unwrap();
            assert!(m.escape_freq >= 1 && m.zero_freq > m.tail[0], "decay {d}");
        }
    }

    #[test]
    fn symmetric_costs() {
        let m = LaplaceModel::from_decay(q15(0.8)).unwrap();
        for k in 1..=60 {
            assert_eq!(m.cost_bits(k), m.cost_bits(-k));
        }
    }

    #[test]
    fn zero_is_cheapest() {
        for d in [0.5, 0.8, 0.95] {
            let m = LaplaceModel::from_decay(q15(d)).unwrap();
            let c0 = m.cost_bits(0);
            for v in -300..=300 {
                if v != 0 {
                    assert!(m.cost_bits(v) > c0, "decay {d} value {v}");
                }
            }
        }
    }

    #[test]
    fn rejects_non_mode_zero() {
        assert!(LaplaceModel::new(100, q15(0.5)).is_err());
        assert!(LaplaceModel::new(0, q15(0.5)).is_err());
        assert!(LaplaceModel::new(q15(0.3), 0).is_err());
    }

    #[test]
    fn extreme_values_round_trip() {
        let m = LaplaceModel::from_decay(q15(0.6)).unwrap();
        let values = [i32::MAX, i32::MIN, -1_000_000, 1_000_000, 0, 17, -17];
        let mut enc = RangeEncoder::new();
        for &v in &values {
            enc.encode_laplace(v, &m).unwrap();
        }
        let buf = enc.finish();
        let mut dec = RangeDecoder::new(&buf);
        for &v in &values {
            assert_eq!(dec.decode_laplace(&m), v);
        }
    }
}
