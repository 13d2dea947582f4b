//! Pyramid vector quantisation of band shapes.

mod enumeration;
mod fold;
mod search;

pub use enumeration::{
    bits_to_pulses, codebook_size, codebook_size_u64, codeword_at, codeword_index, decode_pulses,
    encode_pulses, l1_norm, log2_frac_ceil, pulse_cost, MAX_PULSES, MAX_PVQ_N,
};
pub use fold::{fold_band, fold_gain, fold_noise, FOLD_DELTA};
pub use search::{pvq_normalize, pvq_search};
