//! Spectral folding: fills under-coded bands with structure borrowed from
//! lower frequencies, or with noise when there is nothing to borrow.

/// Weight of the folded component relative to the pulse shape.
pub const FOLD_DELTA: f64 = 6.0;

/// `g = N / (N + delta * K)`.
pub fn fold_gain(n: usize, k: u32) -> f64 {
    n as f64 / (n as f64 + FOLD_DELTA * f64::from(k))
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|x| x / norm).collect())
}

/// Mixes the decoded unit `shape` (absent when `K = 0`) with the normalised
/// `source` and renormalises. Returns the zero vector only if both inputs
/// are empty of energy.
pub fn fold_band(shape: Option<&[f64]>, source: &[f64], k: u32) -> Vec<f64> {
    let n = source.len();
    let src = unit(source);
    match (shape, src) {
        (None, Some(s)) => s,
        (None, None) => vec![0.0; n],
        (Some(y), None) => unit(y).unwrap_or_else(|| y.to_vec()),
        (Some(y), Some(s)) => {
            let g = fold_gain(n, k);
            let mixed: Vec<f64> = y.iter().zip(&s).map(|(a, b)| a + g * b).collect();
            unit(&mixed).unwrap_or_else(|| y.to_vec())
        }
    }
}

/// Deterministic +-1 sequence for band `band` of frame `frame`.
pub fn fold_noise(band: usize, frame: u64, n: usize) -> Vec<f64> {
    let mut state = (frame as u32).wrapping_mul(0x9E37_79B9)
        ^ (band as u32).wrapping_mul(0x85EB_CA6B)
        ^ 0x2545_F491;
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            if state & 0x8000_0000 != 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}
