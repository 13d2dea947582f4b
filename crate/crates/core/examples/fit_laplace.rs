//! Fits the static coarse-energy Laplace decays on the synthetic corpus and
//! prints them as a Rust table.
//!
//! cargo run --release --example fit_laplace

use ldcodec::bands::{compute_energies, reference_log_energy, BandLayout};
use ldcodec::energy::{
    coarse_encode, coarse_models, CoarseParams, EnergyPredictorState, PredictionClass,
    MAX_ENERGY_BANDS,
};
use ldcodec::range_coder::{LaplaceModel, RangeEncoder};
use ldcodec::signals;
use ldcodec::transform::{detect_transient, transient_block_len, BlockMode, Transform, WindowSpec};

const SR: u32 = 48_000;

fn corpus() -> Vec<Vec<f64>> {
    let len = 4 * SR as usize;
    let mut out = Vec::new();
    for seed in 100..106 {
        out.push(signals::synthetic_music(len, SR, seed));
        out.push(signals::slowly_varying(len, SR, seed));
    }
    out.push(signals::tone_plus_noise(len, SR, 7));
    out.push(signals::white_noise(len, 0.1, 8));
    out.push(signals::click_train(len, 9_600, 1_000, 0.7));
    out
}

/// Residual indices per [transient][band].
fn residuals(params: CoarseParams, corpus: &[Vec<f64>]) -> [Vec<Vec<i32>>; 2] {
    let mut out = [
        vec![Vec::new(); MAX_ENERGY_BANDS],
        vec![Vec::new(); MAX_ENERGY_BANDS],
    ];
    for n in [64, 128, 256] {
        let l = n / 2;
        let layout = BandLayout::new(n, SR).unwrap();
        let t = Transform::new(WindowSpec::new(n, l).unwrap());
        let block = transient_block_len(SR, n);
        let reference = reference_log_energy(&layout);
        let models = coarse_models(params.class(), false, layout.num_bands()).unwrap();
        for sig in corpus {
            let mut st = EnergyPredictorState::new(layout.num_bands());
            let mut prev = vec![0.0; n];
            let mut start = 0;
            while start + n + l <= sig.len() {
                let win = &sig[start..start + n + l];
                let tr = detect_transient(&win[l..], &prev, block);
                prev.copy_from_slice(&win[l..]);
                let mode = if tr {
                    BlockMode::Short
                } else {
                    BlockMode::Long
                };
                let e = compute_energies(&t.forward(win, mode).unwrap().coeffs, &layout).unwrap();
                let before = st.prev().to_vec();
                let mut enc = RangeEncoder::new();
                let rel: Vec<f64> = e
                    .log_energy
                    .iter()
                    .zip(&reference)
                    .map(|(e, r)| e - r)
                    .collect();
                let r =
                    coarse_encode(&rel, &mut st, &params, &models, u64::MAX / 2, &mut enc).unwrap();
                let mut f = 0.0;
                for (b, (r, p)) in r.iter().zip(&before).enumerate() {
                    let q = (r - params.alpha * p - f).round() as i32;
                    f += (1.0 - params.beta) * f64::from(q);
                    out[usize::from(tr)][b].push(q);
                }
                start += n;
            }
        }
    }
    out
}

fn best_decay(values: &[i32]) -> u32 {
    (1..64)
        .map(|i| i * 512)
        .filter_map(|d| LaplaceModel::from_decay(d).ok().map(|m| (d, m)))
        .map(|(d, m)| (d, values.iter().map(|&v| m.cost_bits(v)).sum::<f64>()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(d, _)| d)
        .unwrap()
}

fn main() {
    let corpus = corpus();
    let classes = [
        (PredictionClass::Inter, CoarseParams::default()),
        (PredictionClass::Intra, CoarseParams::intra()),
        (PredictionClass::None, CoarseParams::new(0.0, 0.0).unwrap()),
    ];
    println!("const COARSE_DECAY_Q15: [[[u16; {MAX_ENERGY_BANDS}]; 2]; 3] = [");
    for (class, params) in classes {
        let res = residuals(params, &corpus);
        println!("    // {class:?}");
        println!("    [");
        for per_band in &res {
            // sparse bands borrow the decay fitted over all bands
            let pooled: Vec<i32> = per_band.iter().flatten().copied().collect();
            let fallback = best_decay(&pooled);
            let decays: Vec<String> = per_band
                .iter()
                .map(|v| {
                    if v.len() < 200 {
                        fallback
                    } else {
                        best_decay(v)
                    }
                    .to_string()
                })
                .collect();
            println!("        [{}],", decays.join(", "));
        }
        println!("    ],");
    }
    println!("];");
}
