//! Byte-oriented range coder.
//!
//! The coder keeps a 32-bit `low`/`range` pair and renormalizes one byte at a
//! time, propagating carries through a one-byte holding register plus a run
//! counter of pending `0xFF` bytes. Raw (equiprobable power-of-two) bits are
//! not range coded: they are packed LSB-first from the *end* of the buffer, so
//! they cost exactly their width and `tell` advances by exactly that amount.
//!
//! Reading past either end of the input yields zero bytes. Decoding a
//! truncated or corrupted buffer is therefore deterministic and never panics.
//!
//! No floating point is used anywhere in this module, so streams are
//! bit-exact across platforms.

mod laplace;

pub use laplace::{LaplaceModel, LAPLACE_TOTAL};

use crate::error::{contract, Error, Result};

const SYM_BITS: u32 = 8;
const SYM_MAX: u32 = (1 << SYM_BITS) - 1;
const CODE_BITS: u32 = 32;
const CODE_TOP: u32 = 1 << (CODE_BITS - 1);
const CODE_BOT: u32 = CODE_TOP >> SYM_BITS;
const CODE_SHIFT: u32 = CODE_BITS - SYM_BITS - 1;
const CODE_EXTRA: u32 = (CODE_BITS - 2) % SYM_BITS + 1;

/// Uniform totals above `2^UINT_BITS` are split into a range-coded top part
/// and raw low bits.
const UINT_BITS: u32 = 16;

/// Fractional precision of [`RangeEncoder::tell_frac`]: 1/8 bit.
pub const BITRES: u32 = 3;

/// Largest bit count accepted by the raw-bit calls.
pub const MAX_RAW_BITS: u32 = 32;

/// Value of `tell_frac` on a fresh encoder or decoder (one bit).
pub const INITIAL_TELL_FRAC: u64 = 1 << BITRES;

const WINDOW_BITS: u32 = 64;

/// Number of significant bits in `x` (0 for 0).
#[inline]
pub(crate) fn ilog(x: u32) -> u32 {
    32 - x.leading_zeros()
}

fn tell_frac_of(nbits_total: u64, rng: u32) -> u64 {
    let nbits = nbits_total << BITRES;
    let mut l = ilog(rng);
    let mut r = rng >> (l - 16);
    for _ in 0..BITRES {
        r = (r * r) >> 15;
        let b = r >> 16;
        l = (l << 1) | b;
        r >>= b;
    }
    nbits - u64::from(l)
}

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    front: Vec<u8>,
    // raw-bit bytes in the order they are written backwards from the end
    back: Vec<u8>,
    low: u32,
    rng: u32,
    // held byte awaiting carry resolution, -1 when empty
    rem: i32,
    // count of pending 0xFF bytes behind `rem`
    ext: u32,
    end_window: u64,
    end_bits: u32,
    nbits_total: u64,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            front: Vec::new(),
            back: Vec::new(),
            low: 0,
            rng: CODE_TOP,
            rem: -1,
            ext: 0,
            end_window: 0,
            end_bits: 0,
            nbits_total: u64::from(CODE_BITS) + 1,
        }
    }

    fn carry_out(&mut self, c: u32) {
        if c != SYM_MAX {
            let carry = c >> SYM_BITS;
            if self.rem >= 0 {
                self.front.push((self.rem as u32 + carry) as u8);
            }
            if self.ext > 0 {
                let sym = ((SYM_MAX + carry) & SYM_MAX) as u8;
                self.front
                    .extend(std::iter::repeat_n(sym, self.ext as usize));
                self.ext = 0;
            }
            self.rem = (c & SYM_MAX) as i32;
        } else {
            self.ext += 1;
        }
    }

    fn normalize(&mut self) {
        while self.rng <= CODE_BOT {
            self.carry_out(self.low >> CODE_SHIFT);
            self.low = (self.low << SYM_BITS) & (CODE_TOP - 1);
            self.rng <<= SYM_BITS;
            self.nbits_total += u64::from(SYM_BITS);
        }
    }

    /// Encodes the cumulative-frequency interval `[fl, fh)` out of `ft`.
    /// `ft` must not exceed `2^16`.
    pub(crate) fn encode(&mut self, fl: u32, fh: u32, ft: u32) {
        debug_assert!(fl < fh && fh <= ft && ft <= 1 << UINT_BITS);
        let r = self.rng / ft;
        if fl > 0 {
            self.low += self.rng - r * (ft - fl);
            self.rng = r * (fh - fl);
        } else {
            self.rng -= r * (ft - fh);
        }
        self.normalize();
    }

    /// Encodes `value` uniformly in `[0, total)`.
    pub fn encode_uniform(&mut self, value: u32, total: u32) -> Result<()> {
        if total == 0 || value >= total {
            return Err(contract(format!(
                "uniform value {value} not in [0, {total})"
            )));
        }
        if total == 1 {
            return Ok(());
        }
        let ft = total - 1;
        let ftb = ilog(ft);
        if ftb > UINT_BITS {
            let shift = ftb - UINT_BITS;
            let top = value >> shift;
            self.encode(top, top + 1, (ft >> shift) + 1);
            self.encode_raw_bits(value & ((1 << shift) - 1), shift)
        } else {
            self.encode(value, value + 1, ft + 1);
            Ok(())
        }
    }

    /// Writes the low `nbits` bits of `value` verbatim.
    pub fn encode_raw_bits(&mut self, value: u32, nbits: u32) -> Result<()> {
        if nbits > MAX_RAW_BITS {
            return Err(contract(format!("{nbits} raw bits exceeds {MAX_RAW_BITS}")));
        }
        if nbits < 32 && value >> nbits != 0 {
            return Err(contract(format!(
                "value {value} does not fit in {nbits} bits"
            )));
        }
        if nbits == 0 {
            return Ok(());
        }
        if self.end_bits + nbits > WINDOW_BITS {
            while self.end_bits >= SYM_BITS {
                self.back.push((self.end_window & u64::from(SYM_MAX)) as u8);
                self.end_window >>= SYM_BITS;
                self.end_bits -= SYM_BITS;
            }
        }
        self.end_window |= u64::from(value) << self.end_bits;
        self.end_bits += nbits;
        self.nbits_total += u64::from(nbits);
        Ok(())
    }

    pub fn encode_laplace(&mut self, value: i32, model: &LaplaceModel) -> Result<()> {
        model.encode(self, value)
    }

    /// Bits consumed so far, in 1/8-bit units. Starts at [`INITIAL_TELL_FRAC`].
    ///
    /// This is an upper bound: a stream finished right now never needs more
    /// than `ceil(tell_frac / 8 / 8)` bytes.
    pub fn tell_frac(&self) -> u64 {
        tell_frac_of(self.nbits_total, self.rng)
    }

    /// Whole bits consumed so far (rounded up).
    pub fn tell(&self) -> u64 {
        self.nbits_total - u64::from(ilog(self.rng))
    }

    /// Flushes the coder and returns the shortest buffer that decodes every
    /// symbol written so far.
    pub fn finish(self) -> Vec<u8> {
        let parts = self.flush();
        let extra = usize::from(parts.tail_bits > 0 && !parts.shares_last_byte());
        let size = parts.front.len() + parts.back.len() + extra;
        parts.assemble(size).expect("minimal size always fits")
    }

    /// Flushes the coder into a buffer of exactly `size` bytes, zero padding
    /// the gap between range-coded data and raw bits.
    pub fn finish_fixed(self, size: usize) -> Result<Vec<u8>> {
        self.flush().assemble(size)
    }

    fn flush(mut self) -> Flushed {
        // emit the fewest bits of `low` that pin the final interval
        let mut l = CODE_BITS as i32 - ilog(self.rng) as i32;
        let mut msk = (CODE_TOP - 1) >> l;
        let mut end = self.low.wrapping_add(msk) & !msk;
        if (end | msk) >= self.low.wrapping_add(self.rng) {
            l += 1;
            msk >>= 1;
            end = self.low.wrapping_add(msk) & !msk;
        }
        while l > 0 {
            self.carry_out(end >> CODE_SHIFT);
            end = (end << SYM_BITS) & (CODE_TOP - 1);
            l -= SYM_BITS as i32;
        }
        if self.rem >= 0 || self.ext > 0 {
            self.carry_out(0);
        }
        while self.end_bits >= SYM_BITS {
            self.back.push((self.end_window & u64::from(SYM_MAX)) as u8);
            self.end_window >>= SYM_BITS;
            self.end_bits -= SYM_BITS;
        }
        Flushed {
            front: self.front,
            back: self.back,
            tail_window: self.end_window as u8,
            tail_bits: self.end_bits,
            free_low_bits: (-l) as u32,
        }
    }
}

struct Flushed {
    front: Vec<u8>,
    back: Vec<u8>,
    tail_window: u8,
    tail_bits: u32,
    // low bits of the final range byte that carry no information
    free_low_bits: u32,
}

impl Flushed {
    fn shares_last_byte(&self) -> bool {
        !self.front.is_empty() && self.free_low_bits >= self.tail_bits
    }

    fn assemble(self, size: usize) -> Result<Vec<u8>> {
        let used = self.front.len() + self.back.len();
        let fits =
            used < size || (used == size && (self.tail_bits == 0 || self.shares_last_byte()));
        if !fits {
            let needed = used + usize::from(self.tail_bits > 0);
            return Err(Error::Overflow {
                needed,
                available: size,
            });
        }
        let mut out = vec![0u8; size];
        out[..self.front.len()].copy_from_slice(&self.front);
        for (i, &b) in self.back.iter().enumerate() {
            out[size - 1 - i] = b;
        }
        if self.tail_bits > 0 {
            out[size - self.back.len() - 1] |= self.tail_window;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    buf: &'a [u8],
    offs: usize,
    end_offs: usize,
    rng: u32,
    val: u32,
    // last byte read, needed because symbols straddle byte boundaries
    rem: u32,
    // divisor cached between `decode` and `update`
    ext: u32,
    end_window: u64,
    end_bits: u32,
    nbits_total: u64,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        let mut dec = Self {
            buf,
            offs: 0,
            end_offs: 0,
            rng: 1 << CODE_EXTRA,
            val: 0,
            rem: 0,
            ext: 0,
            end_window: 0,
            end_bits: 0,
            nbits_total: u64::from(
                CODE_BITS + 1 - ((CODE_BITS - CODE_EXTRA) / SYM_BITS) * SYM_BITS,
            ),
        };
        dec.rem = dec.read_byte();
        dec.val = dec.rng - 1 - (dec.rem >> (SYM_BITS - CODE_EXTRA));
        dec.normalize();
        dec
    }

    fn read_byte(&mut self) -> u32 {
        if self.offs < self.buf.len() {
            let b = self.buf[self.offs];
            self.offs += 1;
            u32::from(b)
        } else {
            0
        }
    }

    fn read_byte_from_end(&mut self) -> u32 {
        if self.end_offs < self.buf.len() {
            self.end_offs += 1;
            u32::from(self.buf[self.buf.len() - self.end_offs])
        } else {
            0
        }
    }

    fn normalize(&mut self) {
        while self.rng <= CODE_BOT {
            self.nbits_total += u64::from(SYM_BITS);
            self.rng <<= SYM_BITS;
            let prev = self.rem;
            self.rem = self.read_byte();
            let sym = ((prev << SYM_BITS) | self.rem) >> (SYM_BITS - CODE_EXTRA);
            self.val = ((self.val << SYM_BITS) + (SYM_MAX & !sym)) & (CODE_TOP - 1);
        }
    }

    /// Returns the cumulative frequency of the next symbol; must be followed
    /// by [`RangeDecoder::update`] with the symbol's interval.
    pub(crate) fn decode(&mut self, ft: u32) -> u32 {
        self.ext = self.rng / ft;
        let s = self.val / self.ext;
        ft - (s + 1).min(ft)
    }

    pub(crate) fn update(&mut self, fl: u32, fh: u32, ft: u32) {
        let s = self.ext * (ft - fh);
        self.val -= s;
        self.rng = if fl > 0 {
            self.ext * (fh - fl)
        } else {
            self.rng - s
        };
        self.normalize();
    }

    /// Decodes a value coded by [`RangeEncoder::encode_uniform`] with the same
    /// `total`. Corrupted input is clamped to `total - 1`.
    pub fn decode_uniform(&mut self, total: u32) -> Result<u32> {
        if total == 0 {
            return Err(contract("uniform total must be at least 1"));
        }
        if total == 1 {
            return Ok(0);
        }
        let ft = total - 1;
        let ftb = ilog(ft);
        if ftb > UINT_BITS {
            let shift = ftb - UINT_BITS;
            let ft_top = (ft >> shift) + 1;
            let top = self.decode(ft_top);
            self.update(top, top + 1, ft_top);
            let v = (top << shift) | self.decode_raw_bits(shift)?;
            Ok(v.min(ft))
        } else {
            let v = self.decode(ft + 1);
            self.update(v, v + 1, ft + 1);
            Ok(v)
        }
    }

    pub fn decode_raw_bits(&mut self, nbits: u32) -> Result<u32> {
        if nbits > MAX_RAW_BITS {
            return Err(contract(format!("{nbits} raw bits exceeds {MAX_RAW_BITS}")));
        }
        if nbits == 0 {
            return Ok(0);
        }
        if self.end_bits < nbits {
            while self.end_bits <= WINDOW_BITS - SYM_BITS {
                self.end_window |= u64::from(self.read_byte_from_end()) << self.end_bits;
                self.end_bits += SYM_BITS;
            }
        }
        let v = (self.end_window & ((1u64 << nbits) - 1)) as u32;
        self.end_window >>= nbits;
        self.end_bits -= nbits;
        self.nbits_total += u64::from(nbits);
        Ok(v)
    }

    pub fn decode_laplace(&mut self, model: &LaplaceModel) -> i32 {
        model.decode(self)
    }

    /// Same accounting as [`RangeEncoder::tell_frac`]; both sides agree at
    /// every symbol boundary.
    pub fn tell_frac(&self) -> u64 {
        tell_frac_of(self.nbits_total, self.rng)
    }

    pub fn tell(&self) -> u64 {
        self.nbits_total - u64::from(ilog(self.rng))
    }
}
