//! Deterministic synthetic test signals.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn white_noise(len: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| rng.random_range(-amplitude..amplitude))
        .collect()
}

pub fn sine(len: usize, freq: f64, amplitude: f64, sample_rate: u32) -> Vec<f64> {
    let w = 2.0 * PI * freq / f64::from(sample_rate);
    (0..len).map(|i| amplitude * (w * i as f64).sin()).collect()
}

/// Unit-free clicks: a decaying burst of `amplitude` every `period` samples,
/// the first one at `offset`, over silence.
pub fn click_train(len: usize, period: usize, offset: usize, amplitude: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut rng = ChaCha8Rng::seed_from_u64(0xC11C);
    let mut pos = offset;
    while pos < len {
        for (j, o) in out[pos..(pos + 48).min(len)].iter_mut().enumerate() {
            *o = amplitude * (-(j as f64) / 8.0).exp() * rng.random_range(-1.0..1.0);
        }
        pos += period;
    }
    out
}

/// Approximately 1/f noise (three-pole economy filter), roughly unit peak.
fn pink_noise(len: usize, amplitude: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let w: f64 = rng.random_range(-1.0..1.0);
            b0 = 0.99765 * b0 + w * 0.0990460;
            b1 = 0.96300 * b1 + w * 0.2965164;
            b2 = 0.57000 * b2 + w * 1.0526913;
            amplitude * 0.25 * (b0 + b1 + b2 + w * 0.1848)
        })
        .collect()
}

fn add_note(out: &mut [f64], start: usize, dur: usize, sr: f64, rng: &mut ChaCha8Rng) {
    let f0 = 65.0 * 2f64.powf(rng.random_range(0.0..5.0));
    let amp = rng.random_range(0.02..0.12);
    let harmonics = rng.random_range(4..24);
    let decay = rng.random_range(1.0..6.0);
    let rolloff = rng.random_range(0.6..1.4);
    let attack = (sr * rng.random_range(0.002..0.03)) as usize;
    let partials: Vec<(f64, f64, f64)> = (1..=harmonics)
        .map(|h| {
            let h = f64::from(h);
            (
                f0 * h,
                rng.random_range(0.5..1.0) / h.powf(rolloff),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .filter(|&(f, _, _)| f < 0.45 * sr)
        .collect();
    let end = (start + dur).min(out.len());
    for (i, o) in out[start..end].iter_mut().enumerate() {
        let t = i as f64 / sr;
        let env = (i as f64 / attack.max(1) as f64).min(1.0) * (-decay * t).exp();
        let v: f64 = partials
            .iter()
            .map(|&(f, a, ph)| a * (2.0 * PI * f * t + ph).sin())
            .sum();
        *o += amp * env * v;
    }
}

/// Polyphonic harmonic notes and drum-like noise hits over a pink bed.
pub fn synthetic_music(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let mut out = pink_noise(len, 0.03, &mut rng);
    for _voice in 0..3 {
        let mut start = rng.random_range(0..(sr * 0.2) as usize);
        while start < len {
            let dur = (sr * rng.random_range(0.2..0.9)) as usize;
            add_note(&mut out, start, dur, sr, &mut rng);
            start += dur;
        }
    }
    let mut hit = (sr * rng.random_range(0.1..0.5)) as usize;
    while hit < len {
        let amp = rng.random_range(0.05..0.25);
        let tau = sr * rng.random_range(0.02..0.08);
        let pole = rng.random_range(0.0..0.8);
        let mut s = 0.0;
        for (i, o) in out[hit..(hit + (6.0 * tau) as usize).min(len)]
            .iter_mut()
            .enumerate()
        {
            s = pole * s + (1.0 - pole) * rng.random_range(-1.0..1.0);
            *o += amp * (-(i as f64) / tau).exp() * s;
        }
        hit += (sr * rng.random_range(0.25..0.75)) as usize;
    }
    out
}

/// Sinusoids over a pink bed, with levels drifting by a few dB per 100 ms.
pub fn slowly_varying(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = f64::from(sample_rate);
    let bed = pink_noise(len, 0.08, &mut rng);
    let partials: Vec<(f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                80.0 * 2f64.powf(rng.random_range(0.0..6.5)),
                rng.random_range(0.005..0.06),
                rng.random_range(0.2..1.5),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let lfo_rate = rng.random_range(0.1..0.5);
    (0..len)
        .map(|i| {
            let t = i as f64 / sr;
            let lfo = 1.0 + 0.5 * (2.0 * PI * lfo_rate * t).sin();
            let tones: f64 = partials
                .iter()
                .map(|&(f, a, m, ph)| {
                    a * (1.0 + 0.5 * (2.0 * PI * m * t + ph).sin()) * (2.0 * PI * f * t).sin()
                })
                .sum();
            tones + lfo * bed[i]
        })
        .collect()
}

/// A few steady tones over white noise.
pub fn tone_plus_noise(len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut out = white_noise(len, 0.05, seed);
    for (f, a) in [(440.0, 0.2), (1250.0, 0.1), (3300.0, 0.05), (9000.0, 0.02)] {
        for (o, s) in out.iter_mut().zip(sine(len, f, a, sample_rate)) {
            *o += s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_bounded() {
        for sig in [
            synthetic_music(48_000, 48_000, 4),
            slowly_varying(48_000, 48_000, 4),
            tone_plus_noise(48_000, 48_000, 4),
        ] {
            assert!(sig.iter().all(|v| v.abs() < 1.0));
            assert!(sig.iter().any(|v| v.abs() > 0.01));
        }
        assert_eq!(
            synthetic_music(5000, 48_000, 1),
            synthetic_music(5000, 48_000, 1)
        );
    }

    #[test]
    fn clicks_at_period() {
        let c = click_train(1000, 300, 100, 0.8);
        assert!(c[..100].iter().all(|&v| v == 0.0));
        assert!(c[100] != 0.0 && c[400] != 0.0 && c[700] != 0.0);
    }
}
