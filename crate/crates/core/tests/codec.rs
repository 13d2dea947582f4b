use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ldcodec::allocation::AllocationProfile;
use ldcodec::bands::BandLayout;
use ldcodec::codec::{
    analysis_window, decode_signal, encode_signal, CodecConfig, Decoder, Encoder, TransientMode,
    MAX_FRAME_BYTES, MIN_FRAME_BYTES,
};
use ldcodec::energy::{CoarseParams, COARSE_STEP_DB};
use ldcodec::{signals, Error};

const SR: u32 = 48_000;

fn corpus(len: usize) -> Vec<Vec<f64>> {
    let square: Vec<f64> = (0..len)
        .map(|i| if (i / 37) % 2 == 0 { 0.999 } else { -0.999 })
        .collect();
    vec![
        vec![0.0; len],
        signals::white_noise(len, 1.0, 1),
        signals::synthetic_music(len, SR, 2),
        signals::click_train(len, 1_000, 10, 1.0),
        square,
    ]
}

/// Every band of every decoded frame has exactly the coded energy.
fn assert_energy_matches(cfg: &CodecConfig, frames: &[Vec<u8>]) {
    let layout = BandLayout::new(cfg.frame_size, cfg.sample_rate).unwrap();
    let mut dec = Decoder::new(cfg.clone()).unwrap();
    for bytes in frames {
        dec.decode_frame(Some(bytes)).unwrap();
        let f = dec.last_frame().unwrap();
        for b in 0..layout.num_bands() {
            let norm = f.spectrum[layout.range(b)]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            let target = f.log_energy[b].exp2();
            assert!(
                (norm - target).abs() <= 1e-9 * target,
                "band {b}: {norm} vs {target}"
            );
        }
    }
}

#[test]
fn every_configuration_round_trips() {
    let len = 6_000;
    for n in [64, 128, 256] {
        for bytes in [MIN_FRAME_BYTES, 7, 20, 43, 160, MAX_FRAME_BYTES] {
            for profile in [AllocationProfile::Flat, AllocationProfile::Psychoacoustic] {
                let cfg = CodecConfig::new(n, bytes).unwrap().with_profile(profile);
                for x in corpus(len) {
                    let coded = encode_signal(&cfg, &x).unwrap();
                    assert_eq!(coded.len(), cfg.frame_count(len));
                    let frames: Vec<Vec<u8>> = coded.into_iter().map(|(b, _)| b).collect();
                    assert!(frames.iter().all(|f| f.len() == bytes));
                    assert_energy_matches(&cfg, &frames);
                }
            }
        }
    }
}

#[test]
fn short_blocks_round_trip() {
    for mode in [TransientMode::Always, TransientMode::Off] {
        let cfg = CodecConfig::new(256, 43).unwrap().with_transient_mode(mode);
        let x = signals::click_train(20_000, 3_000, 500, 0.9);
        let coded = encode_signal(&cfg, &x).unwrap();
        assert!(coded
            .iter()
            .all(|(_, s)| s.transient == (mode == TransientMode::Always)));
        let frames: Vec<Vec<u8>> = coded.into_iter().map(|(b, _)| b).collect();
        assert_energy_matches(&cfg, &frames);
    }
}

#[test]
fn silence_decodes_to_near_silence() {
    let cfg = CodecConfig::new(256, 43).unwrap();
    let x = vec![0.0; 10_000];
    let frames: Vec<Option<Vec<u8>>> = encode_signal(&cfg, &x)
        .unwrap()
        .into_iter()
        .map(|(b, _)| Some(b))
        .collect();
    let y = decode_signal(&cfg, &frames).unwrap();
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak < 1e-6, "peak {peak}");
}

#[test]
fn output_follows_input() {
    let cfg = CodecConfig::new(256, 160).unwrap();
    let x = signals::sine(48_000, 1_000.0, 0.5, SR);
    let frames: Vec<Option<Vec<u8>>> = encode_signal(&cfg, &x)
        .unwrap()
        .into_iter()
        .map(|(b, _)| Some(b))
        .collect();
    let y = decode_signal(&cfg, &frames).unwrap();
    let n = x.len().min(y.len());
    let snr = ldcodec::metrics::snr_db(&x[..n], &y[..n]).unwrap();
    assert!(snr > 20.0, "snr {snr}");
}

#[test]
fn encoding_is_deterministic_and_resettable() {
    let cfg = CodecConfig::new(128, 21).unwrap();
    let x = signals::synthetic_music(20_000, SR, 5);
    let a = encode_signal(&cfg, &x).unwrap();
    assert_eq!(a, encode_signal(&cfg, &x).unwrap());

    let mut enc = Encoder::new(cfg.clone()).unwrap();
    let first: Vec<Vec<u8>> = (0..20)
        .map(|m| enc.encode_frame(&analysis_window(&x, &cfg, m)).unwrap())
        .collect();
    enc.reset();
    enc.reset();
    for (m, bytes) in first.iter().enumerate() {
        assert_eq!(
            &enc.encode_frame(&analysis_window(&x, &cfg, m)).unwrap(),
            bytes
        );
    }

    let mut dec = Decoder::new(cfg.clone()).unwrap();
    let once: Vec<Vec<f64>> = first
        .iter()
        .map(|b| dec.decode_frame(Some(b)).unwrap())
        .collect();
    dec.reset();
    assert!(dec.predictor().prev().iter().all(|&e| e == 0.0));
    for (bytes, out) in first.iter().zip(&once) {
        assert_eq!(&dec.decode_frame(Some(bytes)).unwrap(), out);
    }
}

#[test]
fn wrong_lengths_are_rejected() {
    let cfg = CodecConfig::new(64, 10).unwrap();
    let mut enc = Encoder::new(cfg.clone()).unwrap();
    assert!(matches!(
        enc.encode_frame(&[0.0; 64]),
        Err(Error::Length { .. })
    ));
    assert!(enc.encode_frame(&[f64::NAN; 96]).is_err());
    let mut dec = Decoder::new(cfg).unwrap();
    assert!(matches!(
        dec.decode_frame(Some(&[0; 9])),
        Err(Error::Length { .. })
    ));
}

#[test]
fn random_payloads_never_panic() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n in [64, 128, 256] {
        for bytes in [2, 11, 43, 200] {
            let cfg = CodecConfig::new(n, bytes).unwrap();
            let mut dec = Decoder::new(cfg).unwrap();
            for _ in 0..100 {
                let payload: Vec<u8> = (0..bytes).map(|_| rng.random()).collect();
                if let Ok(out) = dec.decode_frame(Some(&payload)) {
                    assert_eq!(out.len(), n);
                    assert!(out.iter().all(|v| v.is_finite()));
                }
            }
        }
    }
}

#[test]
fn lost_frames_decay_and_keep_predictor() {
    let cfg = CodecConfig::new(256, 43).unwrap();
    let x = signals::tone_plus_noise(10_000, SR, 3);
    let coded = encode_signal(&cfg, &x).unwrap();
    let mut dec = Decoder::new(cfg).unwrap();
    for (b, _) in &coded[..10] {
        dec.decode_frame(Some(b)).unwrap();
    }
    let before = dec.last_frame().unwrap().clone();
    let state = dec.predictor().clone();
    dec.decode_frame(None).unwrap();
    let lost = dec.last_frame().unwrap();
    assert!(lost.lost);
    assert_eq!(dec.predictor(), &state);
    for (a, b) in lost.spectrum.iter().zip(&before.spectrum) {
        assert_eq!(*a, 0.5 * b);
    }
    for (a, b) in lost.log_energy.iter().zip(&before.log_energy) {
        assert!((a - b + 1.0).abs() < 1e-12);
    }
    // a lost first frame is silent
    let mut fresh = Decoder::new(CodecConfig::new(256, 43).unwrap()).unwrap();
    assert!(fresh.decode_frame(None).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn recovers_after_random_loss() {
    let cfg = CodecConfig::new(256, 43).unwrap();
    let x = signals::slowly_varying(3 * SR as usize, SR, 9);
    let coded = encode_signal(&cfg, &x).unwrap();
    let mut clean = Decoder::new(cfg.clone()).unwrap();
    let mut lossy = Decoder::new(cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lossy_frames = 200;
    let mut dropped = 0;
    for (i, (b, _)) in coded.iter().enumerate().take(lossy_frames + 20) {
        clean.decode_frame(Some(b)).unwrap();
        let lose = i < lossy_frames && rng.random_bool(0.05);
        dropped += usize::from(lose);
        lossy
            .decode_frame(if lose { None } else { Some(b) })
            .unwrap();
    }
    assert!(dropped > 0);
    let worst = clean
        .last_frame()
        .unwrap()
        .log_energy
        .iter()
        .zip(&lossy.last_frame().unwrap().log_energy)
        .map(|(a, b)| (a - b).abs() * COARSE_STEP_DB)
        .fold(0.0, f64::max);
    assert!(worst < 0.25, "{worst} dB after 20 clean frames");
}

#[test]
fn intra_frames_do_not_depend_on_history() {
    let cfg = CodecConfig::new(128, 30)
        .unwrap()
        .with_prediction(CoarseParams::intra());
    let x = signals::synthetic_music(20_000, SR, 8);
    let coded = encode_signal(&cfg, &x).unwrap();
    let mut a = Decoder::new(cfg.clone()).unwrap();
    for (b, _) in &coded[..40] {
        a.decode_frame(Some(b)).unwrap();
    }
    let mut b = Decoder::new(cfg).unwrap();
    b.decode_frame(Some(&coded[40].0)).unwrap();
    a.decode_frame(Some(&coded[40].0)).unwrap();
    assert_eq!(
        a.last_frame().unwrap().log_energy,
        b.last_frame().unwrap().log_energy
    );
}
