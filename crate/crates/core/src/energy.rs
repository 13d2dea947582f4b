//! Band energy quantisation.
//!
//! Coarse energies (one unit = a factor of two in amplitude, 6.02 dB) are
//! predicted across time and frequency and the integer residual is Laplace
//! coded. Fine energies refine each coarse cell with raw bits.
//!
//! Prediction for band `b` of the current frame:
//!
//! ```text
//! p[b] = alpha * prev_q[b] + f[b],   f[0] = 0,   f[b+1] = f[b] + (1 - beta) * q[b]
//! ```
//!
//! where `prev_q` holds last frame's coarse reconstruction and `q` the coded
//! residual indices of this frame. Because `f` depends only on coded symbols,
//! a disturbance of `prev_q` reaches the reconstruction scaled by `alpha`.

use crate::error::{Error, Result};
use crate::range_coder::{LaplaceModel, RangeDecoder, RangeEncoder, BITRES};

/// Coarse step in dB (one log2 amplitude unit).
pub const COARSE_STEP_DB: f64 = 6.020_599_913_279_624;

/// Largest coarse residual index coded.
pub const MAX_COARSE_INDEX: i32 = 32;

/// Finest fine-energy resolution.
pub const MAX_FINE_BITS: u32 = 8;

/// Below this many spare bits coarse residuals are limited to `{-1, 0, 1}`.
const LAPLACE_TIER_BITS: u64 = 32;
/// Below this many spare bits coarse residuals are implied zero.
const TERNARY_TIER_BITS: u64 = 2;
/// Bits held back from the coarse tiers for the range coder's termination.
const COARSE_RESERVE_BITS: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseParams {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CoarseParams {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            beta: 0.7,
        }
    }
}

impl CoarseParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || !(0.0..1.0).contains(&beta) {
            return Err(Error::Config(format!(
                "prediction coefficients ({alpha}, {beta}) outside [0, 1)"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Frame-independent prediction.
    pub fn intra() -> Self {
        Self {
            alpha: 0.0,
            ..Self::default()
        }
    }

    pub fn class(&self) -> PredictionClass {
        match (self.alpha > 0.0, self.beta > 0.0) {
            (true, _) => PredictionClass::Inter,
            (false, true) => PredictionClass::Intra,
            (false, false) => PredictionClass::None,
        }
    }
}

/// Selects the Laplace tables matching how peaked the residuals are.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionClass {
    Inter = 0,
    Intra = 1,
    None = 2,
}

/// Coarse reconstruction of the previous frame, per band.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPredictorState {
    prev_q: Vec<f64>,
}

impl EnergyPredictorState {
    pub fn new(num_bands: usize) -> Self {
        Self {
            prev_q: vec![0.0; num_bands],
        }
    }

    pub fn prev(&self) -> &[f64] {
        &self.prev_q
    }

    /// Overwrites the memory (used to model a corrupted decoder).
    pub fn set_prev(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.prev_q.len() {
            return Err(Error::Length {
                expected: self.prev_q.len(),
                actual: values.len(),
            });
        }
        self.prev_q.copy_from_slice(values);
        Ok(())
    }

    pub fn reset(&mut self) {
        self.prev_q.fill(0.0);
    }
}

// Q15 geometric decays per [class][transient][band], fitted offline on the
// synthetic corpus with `examples/fit_laplace.rs`.
const COARSE_DECAY_Q15: [[[u16; 21]; 2]; 3] = [
    // Inter
    [
        [
            13312, 11776, 10240, 9728, 9728, 9728, 9216, 7680, 7680, 6144, 6656, 6144, 6144, 5120,
            5120, 5120, 6144, 4608, 4096, 8704, 8704,
        ],
        [
            26624, 24576, 22016, 20480, 17920, 14848, 13312, 11776, 11776, 9728, 9216, 15872,
            15872, 15872, 15872, 15872, 15872, 15872, 15872, 15872, 15872,
        ],
    ],
    // Intra
    [
        [
            18944, 12800, 17920, 16896, 14848, 13824, 13824, 14336, 15872, 13824, 13312, 14336,
            16896, 14336, 13824, 16384, 19456, 15872, 14336, 16896, 16896,
        ],
        [
            20992, 12800, 15360, 15872, 13312, 11264, 11776, 14336, 17408, 15360, 14336, 15872,
            15872, 15872, 15872, 15872, 15872, 15872, 15872, 15872, 15872,
        ],
    ],
    // None
    [
        [
            18944, 14848, 13312, 13312, 12288, 13312, 14336, 12288, 12800, 9216, 10240, 11264,
            12288, 6656, 8192, 8704, 12288, 3584, 5632, 12800, 12800,
        ],
        [
            20992, 17408, 15360, 11776, 11264, 12288, 12288, 11264, 11776, 7680, 8704, 12800,
            12800, 12800, 12800, 12800, 12800, 12800, 12800, 12800, 12800,
        ],
    ],
];

/// Maximum number of bands covered by the static tables.
pub const MAX_ENERGY_BANDS: usize = 21;

/// Static coarse-residual models for `num_bands` bands.
pub fn coarse_models(
    class: PredictionClass,
    transient: bool,
    num_bands: usize,
) -> Result<Vec<LaplaceModel>> {
    if num_bands > MAX_ENERGY_BANDS {
        return Err(Error::Config(format!(
            "{num_bands} bands exceed the {MAX_ENERGY_BANDS} tabulated"
        )));
    }
    COARSE_DECAY_Q15[class as usize][usize::from(transient)][..num_bands]
        .iter()
        .map(|&d| LaplaceModel::from_decay(u32::from(d)))
        .collect()
}

enum Tier {
    Laplace,
    Ternary,
    Implied,
}

fn tier(budget_eighths: u64, tell_frac: u64) -> Tier {
    let spare = budget_eighths.saturating_sub(tell_frac) >> BITRES;
    if spare >= LAPLACE_TIER_BITS + COARSE_RESERVE_BITS {
        Tier::Laplace
    } else if spare >= TERNARY_TIER_BITS + COARSE_RESERVE_BITS {
        Tier::Ternary
    } else {
        Tier::Implied
    }
}

fn check_models(models: &[LaplaceModel], state: &EnergyPredictorState) -> Result<()> {
    if models.len() != state.prev_q.len() {
        return Err(Error::Length {
            expected: state.prev_q.len(),
            actual: models.len(),
        });
    }
    Ok(())
}

/// Quantises and codes `log_energy`; returns the coarse reconstruction and
/// updates `state`. `budget_eighths` is the frame size in 1/8 bits; late
/// bands fall back to cheaper symbols when the frame runs short.
pub fn coarse_encode(
    log_energy: &[f64],
    state: &mut EnergyPredictorState,
    params: &CoarseParams,
    models: &[LaplaceModel],
    budget_eighths: u64,
    enc: &mut RangeEncoder,
) -> Result<Vec<f64>> {
    check_models(models, state)?;
    if log_energy.len() != state.prev_q.len() {
        return Err(Error::Length {
            expected: state.prev_q.len(),
            actual: log_energy.len(),
        });
    }
    let mut freq = 0.0;
    let mut out = Vec::with_capacity(log_energy.len());
    for (b, &e) in log_energy.iter().enumerate() {
        let p = params.alpha * state.prev_q[b] + freq;
        let ideal = (e - p)
            .round()
            .clamp(-f64::from(MAX_COARSE_INDEX), f64::from(MAX_COARSE_INDEX))
            as i32;
        let q = match tier(budget_eighths, enc.tell_frac()) {
            Tier::Laplace => {
                enc.encode_laplace(ideal, &models[b])?;
                ideal
            }
            Tier::Ternary => {
                let q = ideal.clamp(-1, 1);
                enc.encode_uniform((q + 1) as u32, 3)?;
                q
            }
            Tier::Implied => 0,
        };
        let r = p + f64::from(q);
        freq += (1.0 - params.beta) * f64::from(q);
        out.push(r);
    }
    state.prev_q.copy_from_slice(&out);
    Ok(out)
}

/// Mirror of [`coarse_encode`].
pub fn coarse_decode(
    state: &mut EnergyPredictorState,
    params: &CoarseParams,
    models: &[LaplaceModel],
    budget_eighths: u64,
    dec: &mut RangeDecoder<'_>,
) -> Result<Vec<f64>> {
    check_models(models, state)?;
    let mut freq = 0.0;
    let mut out = Vec::with_capacity(models.len());
    for (b, model) in models.iter().enumerate() {
        let p = params.alpha * state.prev_q[b] + freq;
        let q = match tier(budget_eighths, dec.tell_frac()) {
            Tier::Laplace => dec
                .decode_laplace(model)
                .clamp(-MAX_COARSE_INDEX, MAX_COARSE_INDEX),
            Tier::Ternary => dec.decode_uniform(3)? as i32 - 1,
            Tier::Implied => 0,
        };
        out.push(p + f64::from(q));
        freq += (1.0 - params.beta) * f64::from(q);
    }
    state.prev_q.copy_from_slice(&out);
    Ok(out)
}

fn fine_offset(index: u32, bits: u32) -> f64 {
    (f64::from(index) + 0.5) / f64::from(1u32 << bits) - 0.5
}

fn check_fine(bits: &[u32]) -> Result<()> {
    match bits.iter().find(|&&b| b > MAX_FINE_BITS) {
        Some(b) => Err(Error::Contract(format!(
            "{b} fine bits exceed {MAX_FINE_BITS}"
        ))),
        None => Ok(()),
    }
}

/// Refines each residual (in coarse units) with `bits[b]` raw bits; returns
/// the decoded offsets, zero where no bits are spent.
pub fn fine_encode(residuals: &[f64], bits: &[u32], enc: &mut RangeEncoder) -> Result<Vec<f64>> {
    if residuals.len() != bits.len() {
        return Err(Error::Length {
            expected: bits.len(),
            actual: residuals.len(),
        });
    }
    check_fine(bits)?;
    residuals
        .iter()
        .zip(bits)
        .map(|(&r, &nb)| {
            if nb == 0 {
                return Ok(0.0);
            }
            let levels = 1u32 << nb;
            let idx = ((r + 0.5) * f64::from(levels))
                .floor()
                .clamp(0.0, f64::from(levels - 1)) as u32;
            enc.encode_raw_bits(idx, nb)?;
            Ok(fine_offset(idx, nb))
        })
        .collect()
}

/// Mirror of [`fine_encode`].
pub fn fine_decode(bits: &[u32], dec: &mut RangeDecoder<'_>) -> Result<Vec<f64>> {
    check_fine(bits)?;
    bits.iter()
        .map(|&nb| {
            if nb == 0 {
                Ok(0.0)
            } else {
                Ok(fine_offset(dec.decode_raw_bits(nb)?, nb))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BIG: u64 = u64::MAX / 2;

    fn models(n: usize) -> Vec<LaplaceModel> {
        coarse_models(PredictionClass::Inter, false, n).unwrap()
    }

    #[test]
    fn all_tables_build() {
        for class in [
            PredictionClass::Inter,
            PredictionClass::Intra,
            PredictionClass::None,
        ] {
            for t in [false, true] {
                assert_eq!(
                    coarse_models(class, t, MAX_ENERGY_BANDS).unwrap().len(),
                    MAX_ENERGY_BANDS
                );
            }
        }
        assert!(coarse_models(PredictionClass::Inter, false, MAX_ENERGY_BANDS + 1).is_err());
    }

    #[test]
    fn twelve_db_is_index_two() {
        let params = CoarseParams::new(0.0, 0.0).unwrap();
        let mut st = EnergyPredictorState::new(1);
        let mut enc = RangeEncoder::new();
        let e = 12.0 / COARSE_STEP_DB;
        let r = coarse_encode(&[e], &mut st, &params, &models(1), BIG, &mut enc).unwrap();
        assert_eq!(r, vec![2.0]);
        let buf = enc.finish();
        let mut dst = EnergyPredictorState::new(1);
        let d = coarse_decode(
            &mut dst,
            &params,
            &models(1),
            BIG,
            &mut RangeDecoder::new(&buf),
        )
        .unwrap();
        assert_eq!(d, vec![2.0]);
    }

    #[test]
    fn constant_input_residuals_shrink() {
        let params = CoarseParams::default();
        let target = [1.2, 0.8, -1.5, 2.0, 0.4];
        let mut st = EnergyPredictorState::new(target.len());
        let mut indices = Vec::new();
        for _ in 0..40 {
            let mut enc = RangeEncoder::new();
            let before = st.prev().to_vec();
            let r = coarse_encode(
                &target,
                &mut st,
                &params,
                &models(target.len()),
                BIG,
                &mut enc,
            )
            .unwrap();
            // recover q[b] from r[b] = alpha * prev[b] + f[b] + q[b]
            let mut f = 0.0;
            let q: Vec<i32> = r
                .iter()
                .zip(&before)
                .map(|(r, p)| {
                    let q = (r - params.alpha * p - f).round() as i32;
                    f += (1.0 - params.beta) * f64::from(q);
                    q
                })
                .collect();
            indices.push(q);
        }
        let first: i32 = indices[0].iter().map(|q| q.abs()).sum();
        let tail: Vec<i32> = indices[5..].iter().flatten().map(|q| q.abs()).collect();
        assert!(first >= 3);
        assert!(tail.iter().all(|&q| q <= 1));
        let zeros = tail.iter().filter(|&&q| q == 0).count();
        assert!(zeros * 10 >= tail.len() * 7, "{zeros} of {}", tail.len());
    }

    #[test]
    fn paired_reconstruction_is_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = CoarseParams::default();
        let n = 19;
        let (mut es, mut ds) = (EnergyPredictorState::new(n), EnergyPredictorState::new(n));
        let mut level: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        for _ in 0..1000 {
            for l in &mut level {
                *l += rng.random_range(-1.5..1.5);
            }
            let budget = rng.random_range(8..400u64) * 8;
            let mut enc = RangeEncoder::new();
            let r = coarse_encode(&level, &mut es, &params, &models(n), budget, &mut enc).unwrap();
            let buf = enc.finish();
            let d = coarse_decode(
                &mut ds,
                &params,
                &models(n),
                budget,
                &mut RangeDecoder::new(&buf),
            )
            .unwrap();
            assert_eq!(r, d);
        }
    }

    #[test]
    fn fresh_state_zero_symbols_decode_zero() {
        let params = CoarseParams::default();
        let mut enc = RangeEncoder::new();
        let mut st = EnergyPredictorState::new(5);
        coarse_encode(&[0.0; 5], &mut st, &params, &models(5), BIG, &mut enc).unwrap();
        let buf = enc.finish();
        let mut ds = EnergyPredictorState::new(5);
        let d = coarse_decode(
            &mut ds,
            &params,
            &models(5),
            BIG,
            &mut RangeDecoder::new(&buf),
        )
        .unwrap();
        assert_eq!(d, vec![0.0; 5]);
    }

    #[test]
    fn starved_budget_implies_prediction() {
        let params = CoarseParams::default();
        let mut enc = RangeEncoder::new();
        let mut st = EnergyPredictorState::new(3);
        let r = coarse_encode(&[9.0, 9.0, 9.0], &mut st, &params, &models(3), 8, &mut enc).unwrap();
        assert_eq!(r, vec![0.0; 3]);
        assert_eq!(enc.tell_frac(), 8);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CoarseParams::new(1.0, 0.5).is_err());
        assert!(CoarseParams::new(0.5, -0.1).is_err());
        assert_eq!(CoarseParams::intra().class(), PredictionClass::Intra);
    }

    #[test]
    fn fine_one_bit_example() {
        let res = 2.9 / 6.0;
        let mut enc = RangeEncoder::new();
        let off = fine_encode(&[res], &[1], &mut enc).unwrap();
        assert!((off[0] * 6.0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fine_error_bound_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for bits in 0..=MAX_FINE_BITS {
            let res: Vec<f64> = (0..200).map(|_| rng.random_range(-0.5..0.5)).collect();
            let nb = vec![bits; res.len()];
            let mut enc = RangeEncoder::new();
            let off = fine_encode(&res, &nb, &mut enc).unwrap();
            let buf = enc.finish();
            let dec = fine_decode(&nb, &mut RangeDecoder::new(&buf)).unwrap();
            assert_eq!(off, dec);
            for (r, o) in res.iter().zip(&off) {
                let bound = if bits == 0 {
                    0.5
                } else {
                    0.5 / f64::from(1u32 << bits)
                };
                assert!((r - o).abs() <= bound + 1e-12, "bits={bits} r={r} o={o}");
            }
        }
        assert!(fine_encode(&[0.0], &[MAX_FINE_BITS + 1], &mut RangeEncoder::new()).is_err());
    }
}
