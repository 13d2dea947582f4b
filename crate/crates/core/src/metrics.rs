//! Objective quality measures.

use crate::bands::{compute_energies, BandLayout};
use crate::error::{Error, Result};
use crate::transform::{BlockMode, Transform, WindowSpec};

/// SNR reported for identical signals.
pub const SNR_CAP_DB: f64 = 200.0;

/// Per-segment SNR clamp used by [`segmental_snr_db`].
pub const SEGMENT_SNR_RANGE: (f64, f64) = (-10.0, 80.0);

fn snr(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return SNR_CAP_DB;
    }
    if signal == 0.0 {
        return -SNR_CAP_DB;
    }
    (10.0 * (signal / noise).log10()).min(SNR_CAP_DB)
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Length {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

pub fn snr_db(reference: &[f64], test: &[f64]) -> Result<f64> {
    same_len(reference, test)?;
    let s: f64 = reference.iter().map(|x| x * x).sum();
    let e: f64 = reference
        .iter()
        .zip(test)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(snr(s, e))
}

/// Mean of per-segment SNRs, each clamped to [`SEGMENT_SNR_RANGE`]; segments
/// whose reference is near silent (below -70 dBFS) are skipped.
pub fn segmental_snr_db(reference: &[f64], test: &[f64], segment: usize) -> Result<f64> {
    same_len(reference, test)?;
    if segment == 0 {
        return Err(Error::Contract("segment length must be positive".into()));
    }
    let (lo, hi) = SEGMENT_SNR_RANGE;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (r, t) in reference.chunks(segment).zip(test.chunks(segment)) {
        let s: f64 = r.iter().map(|x| x * x).sum();
        if s / (r.len() as f64) < 1e-7 {
            continue;
        }
        let e: f64 = r.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum();
        sum += snr(s, e).clamp(lo, hi);
        count += 1;
    }
    Ok(if count == 0 { hi } else { sum / count as f64 })
}

/// Mean absolute band-energy difference in dB per band, over long-block
/// MDCT frames of both signals.
pub fn band_energy_error_db(
    reference: &[f64],
    test: &[f64],
    frame_size: usize,
    sample_rate: u32,
) -> Result<Vec<f64>> {
    same_len(reference, test)?;
    let layout = BandLayout::new(frame_size, sample_rate)?;
    let spec = WindowSpec::new(frame_size, frame_size / 2)?;
    let support = spec.support();
    let transform = Transform::new(spec);
    let mut acc = vec![0.0; layout.num_bands()];
    let mut frames = 0usize;
    let mut start = 0;
    while start + support <= reference.len() {
        let er = compute_energies(
            &transform
                .forward(&reference[start..start + support], BlockMode::Long)?
                .coeffs,
            &layout,
        )?;
        let et = compute_energies(
            &transform
                .forward(&test[start..start + support], BlockMode::Long)?
                .coeffs,
            &layout,
        )?;
        for (a, (x, y)) in acc.iter_mut().zip(er.log_energy.iter().zip(&et.log_energy)) {
            *a += (x - y).abs() * crate::energy::COARSE_STEP_DB;
        }
        frames += 1;
        start += frame_size;
    }
    if frames > 0 {
        acc.iter_mut().for_each(|a| *a /= frames as f64);
    }
    Ok(acc)
}

/// Sample positions where the reference jumps out of near silence: the
/// first sample above `threshold` after at least `gap` quiet samples.
pub fn detect_onsets(reference: &[f64], threshold: f64, gap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut quiet = gap;
    for (i, v) in reference.iter().enumerate() {
        if v.abs() > threshold {
            if quiet >= gap {
                out.push(i);
            }
            quiet = 0;
        } else {
            quiet += 1;
        }
    }
    out
}

/// Energy of `test - reference` summed over the `window` samples before each
/// onset.
pub fn pre_echo_energy(
    reference: &[f64],
    test: &[f64],
    onsets: &[usize],
    window: usize,
) -> Result<f64> {
    same_len(reference, test)?;
    Ok(onsets
        .iter()
        .map(|&p| {
            let s = p.saturating_sub(window);
            reference[s..p]
                .iter()
                .zip(&test[s..p])
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        })
        .sum())
}
