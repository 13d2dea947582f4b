//! Codebook counting, index enumeration and pulse coding.
//!
//! `V(N, K)` counts integer vectors of length `N` with L1 norm `K`:
//!
//! ```text
//! V(N, K) = V(N-1, K) + V(N, K-1) + V(N-1, K-1),  V(N, 0) = 1,  V(0, K>0) = 0
//! ```
//!
//! Codewords are ranked lexicographically position by position: at each
//! position the nonzero values come first in the order `+1, -1, +2, -2, ...`
//! (each followed by all completions of the remaining positions), then zero.
//! Ranking and unranking only add and subtract table entries.

use std::sync::OnceLock;

use crate::error::{contract, Result};
use crate::range_coder::{ilog, RangeDecoder, RangeEncoder, BITRES};

/// Largest band width the tables cover.
pub const MAX_PVQ_N: usize = 256;
/// Largest pulse count the tables cover.
pub const MAX_PULSES: u32 = 256;

const ROW: usize = MAX_PULSES as usize + 1;

/// `V(n, k)` for all tabulated `(n, k)`, saturating at `u64::MAX`.
struct CountTable(Vec<u64>);

impl CountTable {
    fn build() -> Self {
        let mut v = vec![0u64; (MAX_PVQ_N + 1) * ROW];
        v[0] = 1;
        for n in 1..=MAX_PVQ_N {
            v[n * ROW] = 1;
            for k in 1..ROW {
                v[n * ROW + k] = v[(n - 1) * ROW + k]
                    .saturating_add(v[n * ROW + k - 1])
                    .saturating_add(v[(n - 1) * ROW + k - 1]);
            }
        }
        Self(v)
    }

    #[inline]
    fn get(&self, n: usize, k: u32) -> u64 {
        self.0[n * ROW + k as usize]
    }
}

fn counts() -> &'static CountTable {
    static TABLE: OnceLock<CountTable> = OnceLock::new();
    TABLE.get_or_init(CountTable::build)
}

fn check_dims(n: usize, k: u32) -> Result<()> {
    if n > MAX_PVQ_N || k > MAX_PULSES {
        return Err(contract(format!(
            "codebook ({n}, {k}) outside tables ({MAX_PVQ_N}, {MAX_PULSES})"
        )));
    }
    Ok(())
}

/// `V(n, k)` if it fits the 32-bit count register, `None` when the codebook
/// is too large and must be split.
pub fn codebook_size(n: usize, k: u32) -> Result<Option<u32>> {
    check_dims(n, k)?;
    Ok(u32::try_from(counts().get(n, k)).ok())
}

/// `V(n, k)` saturating at `u64::MAX`.
pub fn codebook_size_u64(n: usize, k: u32) -> Result<u64> {
    check_dims(n, k)?;
    Ok(counts().get(n, k))
}

pub fn l1_norm(y: &[i32]) -> u32 {
    y.iter().map(|v| v.unsigned_abs()).sum()
}

/// Index of codeword `y` in `[0, V(N, K))`. `V(N, K)` must fit in 32 bits.
pub(crate) fn rank(y: &[i32]) -> u32 {
    let t = counts();
    let mut n = y.len();
    let mut k = l1_norm(y);
    let mut idx: u64 = 0;
    for &v in y {
        if k == 0 {
            break;
        }
        let m = v.unsigned_abs();
        if m == 0 {
            // skip every codeword with a nonzero value here
            idx += t.get(n, k) - t.get(n - 1, k);
        } else {
            for j in 1..m {
                idx += 2 * t.get(n - 1, k - j);
            }
            if v < 0 {
                idx += t.get(n - 1, k - m);
            }
            k -= m;
        }
        n -= 1;
    }
    idx as u32
}

/// Codeword with index `idx` among vectors of length `n` and L1 norm `k`.
pub(crate) fn unrank(mut idx: u64, n: usize, mut k: u32) -> Vec<i32> {
    let t = counts();
    let mut y = vec![0i32; n];
    for (i, out) in y.iter_mut().enumerate() {
        if k == 0 {
            break;
        }
        let rest = n - i - 1;
        let nonzero = t.get(rest + 1, k) - t.get(rest, k);
        if idx >= nonzero {
            idx -= nonzero;
            continue;
        }
        let mut m = 1;
        loop {
            let c = t.get(rest, k - m);
            if idx < 2 * c {
                if idx >= c {
                    idx -= c;
                    *out = -(m as i32);
                } else {
                    *out = m as i32;
                }
                break;
            }
            idx -= 2 * c;
            m += 1;
        }
        k -= m;
    }
    y
}

/// Index of `y` in its codebook. Fails when the codebook needs splitting.
pub fn codeword_index(y: &[i32]) -> Result<u32> {
    let k = l1_norm(y);
    match codebook_size(y.len(), k)? {
        Some(_) => Ok(rank(y)),
        None => Err(contract(format!("V({}, {k}) exceeds 32 bits", y.len()))),
    }
}

/// Codeword `index` of the `(n, k)` codebook.
pub fn codeword_at(n: usize, k: u32, index: u32) -> Result<Vec<i32>> {
    match codebook_size(n, k)? {
        Some(total) if index < total => Ok(unrank(u64::from(index), n, k)),
        Some(total) => Err(contract(format!(
            "index {index} outside V({n}, {k}) = {total}"
        ))),
        None => Err(contract(format!("V({n}, {k}) exceeds 32 bits"))),
    }
}

/// Codes `y` with equiprobable symbols, splitting in half (and sending the
/// first half's pulse count) while the codebook exceeds 32 bits.
pub fn encode_pulses(y: &[i32], enc: &mut RangeEncoder) -> Result<()> {
    let n = y.len();
    let k = l1_norm(y);
    check_dims(n, k)?;
    if n == 0 || k == 0 {
        return Ok(());
    }
    match codebook_size(n, k)? {
        Some(total) => enc.encode_uniform(rank(y), total),
        None => {
            let (a, b) = y.split_at(n.div_ceil(2));
            enc.encode_uniform(l1_norm(a), k + 1)?;
            encode_pulses(a, enc)?;
            encode_pulses(b, enc)
        }
    }
}

/// Inverse of [`encode_pulses`] for a vector of length `n` with `k` pulses.
pub fn decode_pulses(n: usize, k: u32, dec: &mut RangeDecoder<'_>) -> Result<Vec<i32>> {
    check_dims(n, k)?;
    if k == 0 {
        return Ok(vec![0; n]);
    }
    if n == 0 {
        return Err(contract(format!("{k} pulses in an empty vector")));
    }
    match codebook_size(n, k)? {
        Some(total) => {
            let idx = dec.decode_uniform(total)?;
            Ok(unrank(u64::from(idx), n, k))
        }
        None => {
            let n1 = n.div_ceil(2);
            let k1 = dec.decode_uniform(k + 1)?;
            let mut y = decode_pulses(n1, k1, dec)?;
            y.extend(decode_pulses(n - n1, k - k1, dec)?);
            Ok(y)
        }
    }
}

/// Upper bound on `log2(val)` in 1/8-bit units, integer only. Exact for
/// powers of two.
pub fn log2_frac_ceil(val: u32) -> u32 {
    debug_assert!(val > 0);
    let l = ilog(val);
    if val & (val - 1) == 0 {
        return (l - 1) << BITRES;
    }
    let mut v: u64 = if l > 16 {
        let s = l - 16;
        u64::from((val >> s) + (((val & ((1 << s) - 1)) + (1 << s) - 1) >> s))
    } else {
        u64::from(val << (16 - l))
    };
    let mut out = (l - 1) << BITRES;
    for frac in (0..=BITRES).rev() {
        let b = (v >> 16) as u32;
        out += b << frac;
        v = (v + u64::from(b)) >> b;
        v = (v * v + 0x7FFF) >> 15;
    }
    out + u32::from(v > 0x8000)
}

/// Worst-case cost in 1/8 bits of coding `k` pulses over `n` positions with
/// [`encode_pulses`], for every `k` up to [`MAX_PULSES`], for every `n` up to
/// [`MAX_PVQ_N`]. Split codebooks charge the most expensive split.
struct CostTable(Vec<Vec<u32>>);

impl CostTable {
    fn build() -> Self {
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(MAX_PVQ_N + 1);
        rows.push(
            std::iter::once(0)
                .chain(std::iter::repeat_n(u32::MAX, ROW - 1))
                .collect(),
        );
        let t = counts();
        for n in 1..=MAX_PVQ_N {
            let mut row = vec![0u32; ROW];
            for k in 1..=MAX_PULSES {
                let v = t.get(n, k);
                row[k as usize] = if let Ok(v32) = u32::try_from(v) {
                    log2_frac_ceil(v32)
                } else {
                    let (a, b) = (&rows[n.div_ceil(2)], &rows[n / 2]);
                    let worst = (0..=k as usize)
                        .map(|k1| a[k1] + b[k as usize - k1])
                        .max()
                        .unwrap();
                    log2_frac_ceil(k + 1) + worst
                };
            }
            rows.push(row);
        }
        Self(rows)
    }
}

fn costs() -> &'static CostTable {
    static TABLE: OnceLock<CostTable> = OnceLock::new();
    TABLE.get_or_init(CostTable::build)
}

/// Worst-case bit cost (1/8 bits) of `k` pulses in a band of width `n`.
pub fn pulse_cost(n: usize, k: u32) -> Result<u32> {
    check_dims(n, k)?;
    if n == 0 {
        return Err(contract("empty band"));
    }
    Ok(costs().0[n][k as usize])
}

/// Largest `K` whose cost fits in `bits` (1/8 bits), with that cost.
pub fn bits_to_pulses(n: usize, bits: u32) -> Result<(u32, u32)> {
    check_dims(n, 0)?;
    if n == 0 {
        return Ok((0, 0));
    }
    let row = &costs().0[n];
    // costs grow with k, so the first miss ends the search
    let k = row.iter().skip(1).take_while(|&&c| c <= bits).count() as u32;
    Ok((k, row[k as usize]))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force: every integer vector of length n with L1 norm k.
    fn all_codewords(n: usize, k: u32) -> Vec<Vec<i32>> {
        if n == 0 {
            return if k == 0 { vec![vec![]] } else { vec![] };
        }
        let mut out = Vec::new();
        for m in 0..=k as i32 {
            for rest in all_codewords(n - 1, k - m as u32) {
                for v in if m == 0 { vec![0] } else { vec![m, -m] } {
                    let mut y = vec![v];
                    y.extend(&rest);
                    out.push(y);
                }
            }
        }
        out
    }

    #[test]
    fn small_counts() {
        assert_eq!(codebook_size(2, 1).unwrap(), Some(4));
        assert_eq!(codebook_size(3, 2).unwrap(), Some(18));
        for n in 0..20 {
            assert_eq!(codebook_size(n, 0).unwrap(), Some(1));
        }
        for k in 1..=MAX_PULSES {
            assert_eq!(codebook_size(1, k).unwrap(), Some(2));
            assert_eq!(codebook_size(0, k).unwrap(), Some(0));
        }
    }

    #[test]
    fn counts_match_brute_force() {
        for n in 0..=6 {
            for k in 0..=6 {
                assert_eq!(
                    codebook_size_u64(n, k).unwrap(),
                    all_codewords(n, k).len() as u64,
                    "V({n},{k})"
                );
            }
        }
    }

    #[test]
    fn rank_is_lexicographic_position() {
        for (n, k) in [(3, 2), (4, 3), (2, 4)] {
            let mut words = all_codewords(n, k);
            // the documented order: at each position +1,-1,+2,-2,...,0
            let key = |v: i32| {
                if v == 0 {
                    i64::MAX
                } else {
                    2 * i64::from(v.abs()) + i64::from(v < 0)
                }
            };
            words.sort_by(|a, b| a.iter().map(|&v| key(v)).cmp(b.iter().map(|&v| key(v))));
            for (i, w) in words.iter().enumerate() {
                assert_eq!(rank(w) as usize, i, "{w:?}");
                assert_eq!(&unrank(i as u64, n, k), w);
            }
        }
    }

    #[test]
    fn log2_frac_is_tight_upper_bound() {
        for v in (1..5000u32).chain([65_535, 65_537, 1 << 20, (1 << 31) + 12345, u32::MAX]) {
            let exact = 8.0 * f64::from(v).log2();
            let got = f64::from(log2_frac_ceil(v));
            assert!(
                got >= exact - 1e-9 && got <= exact.ceil() + 1.0,
                "v={v} exact={exact} got={got}"
            );
        }
        assert_eq!(log2_frac_ceil(4), 16);
        assert_eq!(log2_frac_ceil(1), 0);
    }

    #[test]
    fn bits_to_pulses_examples() {
        assert_eq!(bits_to_pulses(5, 0).unwrap(), (0, 0));
        assert_eq!(bits_to_pulses(2, 16).unwrap(), (1, 16));
        assert_eq!(bits_to_pulses(2, 15).unwrap(), (0, 0));
    }

    #[test]
    fn pulse_cost_monotone() {
        for n in [1, 2, 3, 7, 16, 37, 54, 91, 128] {
            let mut last = 0;
            for k in 0..=MAX_PULSES {
                let c = pulse_cost(n, k).unwrap();
                assert!(c >= last, "n={n} k={k}");
                last = c;
            }
        }
    }

    #[test]
    fn rejects_oversized_dims() {
        assert!(codebook_size(MAX_PVQ_N + 1, 1).is_err());
        assert!(pulse_cost(4, MAX_PULSES + 1).is_err());
        let mut enc = RangeEncoder::new();
        assert!(encode_pulses(&[MAX_PULSES as i32 + 1], &mut enc).is_err());
    }
}
