//! Frame encoder and decoder.
//!
//! Bitstream of one frame, in coding order: two raw flag bits (transient,
//! reserved), coarse energies, fine energies (raw bits), then the pulses of
//! every band from low to high. The range coder output is padded to exactly
//! `frame_bytes`.

use crate::allocation::{compute_allocation, pulses_at, AllocationProfile, AllocationResult};
use crate::bands::{compute_energies, normalize_bands, reference_log_energy, BandLayout};
use crate::energy::{
    coarse_decode, coarse_encode, coarse_models, fine_decode, fine_encode, CoarseParams,
    EnergyPredictorState,
};
use crate::error::{Error, Result};
use crate::pvq::{decode_pulses, encode_pulses, fold_band, fold_noise, pvq_normalize, pvq_search};
use crate::range_coder::{LaplaceModel, RangeDecoder, RangeEncoder, BITRES, INITIAL_TELL_FRAC};
use crate::transform::{
    detect_transient, transient_block_len, BlockMode, OverlapAdd, Transform, WindowSpec,
};

/// Largest frame the codec accepts.
pub const MAX_FRAME_BYTES: usize = 1275;
/// Smallest frame the codec accepts.
pub const MIN_FRAME_BYTES: usize = 2;

/// Amplitude factor applied per lost frame (-6 dB).
const LOSS_DECAY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransientMode {
    /// Short blocks when the detector fires.
    #[default]
    Auto,
    /// Long blocks only.
    Off,
    /// Short blocks on every frame.
    Always,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    pub sample_rate: u32,
    pub frame_size: usize,
    pub overlap: usize,
    pub frame_bytes: usize,
    pub profile: AllocationProfile,
    pub prediction: CoarseParams,
    pub transient_mode: TransientMode,
}

impl CodecConfig {
    /// 48 kHz, overlap `N / 2`, default prediction and profile.
    pub fn new(frame_size: usize, frame_bytes: usize) -> Result<Self> {
        let c = Self {
            sample_rate: 48_000,
            frame_size,
            overlap: frame_size / 2,
            frame_bytes,
            profile: AllocationProfile::default(),
            prediction: CoarseParams::default(),
            transient_mode: TransientMode::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_profile(mut self, profile: AllocationProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_prediction(mut self, prediction: CoarseParams) -> Self {
        self.prediction = prediction;
        self
    }

    pub fn with_transient_mode(mut self, mode: TransientMode) -> Self {
        self.transient_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        BandLayout::new(self.frame_size, self.sample_rate)?;
        WindowSpec::new(self.frame_size, self.overlap)?;
        if !(MIN_FRAME_BYTES..=MAX_FRAME_BYTES).contains(&self.frame_bytes) {
            return Err(Error::Config(format!(
                "frame bytes {} outside [{MIN_FRAME_BYTES}, {MAX_FRAME_BYTES}]",
                self.frame_bytes
            )));
        }
        CoarseParams::new(self.prediction.alpha, self.prediction.beta)?;
        Ok(())
    }

    /// Constant stream rate in bit/s.
    pub fn bitrate(&self) -> f64 {
        8.0 * self.frame_bytes as f64 * f64::from(self.sample_rate) / self.frame_size as f64
    }

    /// Bytes per frame closest to `bitrate` bit/s.
    pub fn bytes_for_bitrate(bitrate: f64, sample_rate: u32, frame_size: usize) -> usize {
        (bitrate * frame_size as f64 / f64::from(sample_rate) / 8.0).round() as usize
    }

    /// Algorithmic delay in samples.
    pub fn delay(&self) -> usize {
        self.frame_size + self.overlap
    }

    /// Frames needed for `samples` input samples; the tail is zero padded.
    pub fn frame_count(&self, samples: usize) -> usize {
        if samples == 0 {
            return 0;
        }
        samples
            .saturating_sub(self.overlap)
            .div_ceil(self.frame_size)
            .max(1)
    }
}

/// Bits spent on each part of a frame, in 1/8 bits. The five parts add up to
/// `total`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrameStats {
    pub flags: u64,
    pub coarse: u64,
    pub fine: u64,
    pub shape: u64,
    pub unallocated: u64,
    pub total: u64,
    pub transient: bool,
    pub pulses: Vec<u32>,
    pub fine_bits: Vec<u32>,
}

impl FrameStats {
    pub fn as_bits(v: u64) -> f64 {
        v as f64 / f64::from(1u32 << BITRES)
    }
}

/// Decoder-side view of the last frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub spectrum: Vec<f64>,
    /// Coarse plus fine log2 band norms.
    pub log_energy: Vec<f64>,
    pub mode: BlockMode,
    pub pulses: Vec<u32>,
    pub lost: bool,
}

/// Parts shared by encoder and decoder.
#[derive(Debug)]
struct Core {
    config: CodecConfig,
    layout: BandLayout,
    transform: Transform,
    predictor: EnergyPredictorState,
    // coarse energies are coded relative to this
    reference: Vec<f64>,
    // indexed by the transient flag
    models: [Vec<LaplaceModel>; 2],
    frame_counter: u64,
}

impl Core {
    fn new(config: CodecConfig) -> Result<Self> {
        config.validate()?;
        let layout = BandLayout::new(config.frame_size, config.sample_rate)?;
        let transform = Transform::new(WindowSpec::new(config.frame_size, config.overlap)?);
        if config.transient_mode != TransientMode::Off && !transform.supports_short() {
            return Err(Error::Config(format!(
                "overlap {} does not allow short blocks at frame size {}",
                config.overlap, config.frame_size
            )));
        }
        let class = config.prediction.class();
        let bands = layout.num_bands();
        let models = [
            coarse_models(class, false, bands)?,
            coarse_models(class, true, bands)?,
        ];
        Ok(Self {
            predictor: EnergyPredictorState::new(bands),
            reference: reference_log_energy(&layout),
            config,
            layout,
            transform,
            models,
            frame_counter: 0,
        })
    }

    fn budget(&self) -> u64 {
        (self.config.frame_bytes as u64) << (3 + BITRES)
    }

    fn reset(&mut self) {
        self.predictor.reset();
        self.frame_counter = 0;
    }

    /// Places the unit shape of band `b` (pulses `y`, if any) into
    /// `spectrum`, folded with lower bins or noise and scaled to `norm`.
    fn synthesize_band(
        &self,
        b: usize,
        y: Option<&[i32]>,
        k: u32,
        norm: f64,
        spectrum: &mut [f64],
    ) -> Result<()> {
        let r = self.layout.range(b);
        let w = r.len();
        let shape = y.map(pvq_normalize).transpose()?;
        let lower = (r.start >= w).then(|| &spectrum[r.start - w..r.start]);
        let noise;
        let source = match lower {
            Some(s) if s.iter().any(|&v| v != 0.0) => s,
            _ => {
                noise = fold_noise(b, self.frame_counter, w);
                &noise
            }
        };
        let unit = fold_band(shape.as_deref(), source, k);
        for (o, u) in spectrum[r].iter_mut().zip(unit) {
            *o = u * norm;
        }
        Ok(())
    }
}

pub struct Encoder {
    core: Core,
    block: usize,
    prev_region: Vec<f64>,
}

impl Encoder {
    pub fn new(config: CodecConfig) -> Result<Self> {
        let core = Core::new(config)?;
        let block = transient_block_len(core.config.sample_rate, core.config.frame_size);
        let prev_region = vec![0.0; core.config.frame_size];
        Ok(Self {
            core,
            block,
            prev_region,
        })
    }

    pub fn config(&self) -> &CodecConfig {
        &self.core.config
    }

    pub fn layout(&self) -> &BandLayout {
        &self.core.layout
    }

    pub fn predictor(&self) -> &EnergyPredictorState {
        &self.core.predictor
    }

    pub fn reset(&mut self) {
        self.core.reset();
        self.prev_region.fill(0.0);
    }

    /// Encodes `N + L` samples (this frame plus look-ahead).
    pub fn encode_frame(&mut self, pcm: &[f64]) -> Result<Vec<u8>> {
        self.encode_frame_with_stats(pcm).map(|(bytes, _)| bytes)
    }

    pub fn encode_frame_with_stats(&mut self, pcm: &[f64]) -> Result<(Vec<u8>, FrameStats)> {
        let cfg = &self.core.config;
        let (n, l) = (cfg.frame_size, cfg.overlap);
        if pcm.len() != n + l {
            return Err(Error::Length {
                expected: n + l,
                actual: pcm.len(),
            });
        }
        if pcm.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("input samples must be finite".into()));
        }
        let fresh = &pcm[l..];
        let transient = match cfg.transient_mode {
            TransientMode::Off => false,
            TransientMode::Always => true,
            TransientMode::Auto => detect_transient(fresh, &self.prev_region, self.block),
        };
        self.prev_region.copy_from_slice(fresh);
        let mode = if transient {
            BlockMode::Short
        } else {
            BlockMode::Long
        };
        let frame = self.core.transform.forward(pcm, mode)?;
        let energies = compute_energies(&frame.coeffs, &self.core.layout)?;
        let shapes = normalize_bands(&frame.coeffs, &energies, &self.core.layout);

        let budget = self.core.budget();
        let mut enc = RangeEncoder::new();
        let mut stats = FrameStats {
            total: budget,
            transient,
            ..FrameStats::default()
        };
        enc.encode_raw_bits(u32::from(transient), 2)?;
        let after_flags = enc.tell_frac();
        let params = self.core.config.prediction;
        let relative: Vec<f64> = energies
            .log_energy
            .iter()
            .zip(&self.core.reference)
            .map(|(e, r)| e - r)
            .collect();
        let coarse = coarse_encode(
            &relative,
            &mut self.core.predictor,
            &params,
            &self.core.models[usize::from(transient)],
            budget,
            &mut enc,
        )?;
        let after_coarse = enc.tell_frac();
        let alloc = compute_allocation(
            cfg.frame_bytes,
            after_coarse,
            &self.core.layout,
            cfg.profile,
        );
        let residual: Vec<f64> = relative.iter().zip(&coarse).map(|(e, c)| e - c).collect();
        let fine = fine_encode(&residual, &alloc.fine_bits, &mut enc)?;
        let after_fine = enc.tell_frac();

        let mut spectrum = vec![0.0; n];
        let mut pulses = Vec::with_capacity(shapes.len());
        for (b, shape) in shapes.iter().enumerate() {
            let (k, _) = pulses_at(&alloc, &self.core.layout, b, after_fine, enc.tell_frac());
            let y = if k > 0 {
                let y = pvq_search(&shape.values, k)?;
                encode_pulses(&y, &mut enc)?;
                Some(y)
            } else {
                None
            };
            let norm = (coarse[b] + fine[b] + self.core.reference[b]).exp2();
            self.core
                .synthesize_band(b, y.as_deref(), k, norm, &mut spectrum)?;
            pulses.push(k);
        }
        let end = enc.tell_frac();
        stats.flags = after_flags - INITIAL_TELL_FRAC;
        stats.coarse = after_coarse - after_flags;
        stats.fine = after_fine - after_coarse;
        stats.shape = end - after_fine;
        stats.unallocated = budget.saturating_sub(end - INITIAL_TELL_FRAC);
        stats.pulses = pulses;
        stats.fine_bits = alloc.fine_bits;
        let bytes = enc.finish_fixed(cfg.frame_bytes)?;
        self.core.frame_counter += 1;
        Ok((bytes, stats))
    }
}

pub struct Decoder {
    core: Core,
    ola: OverlapAdd,
    last: Option<DecodedFrame>,
}

impl Decoder {
    pub fn new(config: CodecConfig) -> Result<Self> {
        let core = Core::new(config)?;
        let ola = OverlapAdd::new(core.transform.spec());
        Ok(Self {
            core,
            ola,
            last: None,
        })
    }

    pub fn config(&self) -> &CodecConfig {
        &self.core.config
    }

    pub fn layout(&self) -> &BandLayout {
        &self.core.layout
    }

    pub fn predictor(&self) -> &EnergyPredictorState {
        &self.core.predictor
    }

    /// Mutable access to the energy predictor, for corruption experiments.
    pub fn predictor_mut(&mut self) -> &mut EnergyPredictorState {
        &mut self.core.predictor
    }

    pub fn last_frame(&self) -> Option<&DecodedFrame> {
        self.last.as_ref()
    }

    pub fn reset(&mut self) {
        self.core.reset();
        self.ola.reset();
        self.last = None;
    }

    /// Decodes one frame, or conceals it when `frame` is `None`. Returns `N`
    /// output samples.
    pub fn decode_frame(&mut self, frame: Option<&[u8]>) -> Result<Vec<f64>> {
        let decoded = match frame {
            Some(bytes) => self.decode_payload(bytes)?,
            None => self.conceal(),
        };
        let contribution = self.core.transform.inverse(&crate::transform::MdctFrame {
            coeffs: decoded.spectrum.clone(),
            mode: decoded.mode,
        })?;
        self.core.frame_counter += 1;
        self.last = Some(decoded);
        Ok(self.ola.push(&contribution))
    }

    fn conceal(&self) -> DecodedFrame {
        let bands = self.core.layout.num_bands();
        match &self.last {
            Some(prev) => DecodedFrame {
                spectrum: prev.spectrum.iter().map(|v| v * LOSS_DECAY).collect(),
                log_energy: prev
                    .log_energy
                    .iter()
                    .map(|e| e + LOSS_DECAY.log2())
                    .collect(),
                mode: prev.mode,
                pulses: vec![0; bands],
                lost: true,
            },
            None => DecodedFrame {
                spectrum: vec![0.0; self.core.config.frame_size],
                log_energy: vec![crate::bands::LOG_ENERGY_FLOOR; bands],
                mode: BlockMode::Long,
                pulses: vec![0; bands],
                lost: true,
            },
        }
    }

    fn decode_payload(&mut self, bytes: &[u8]) -> Result<DecodedFrame> {
        let cfg = &self.core.config;
        if bytes.len() != cfg.frame_bytes {
            return Err(Error::Length {
                expected: cfg.frame_bytes,
                actual: bytes.len(),
            });
        }
        let n = cfg.frame_size;
        let budget = self.core.budget();
        let mut dec = RangeDecoder::new(bytes);
        let flags = dec.decode_raw_bits(2)?;
        let transient = flags & 1 != 0;
        if transient && !self.core.transform.supports_short() {
            return Err(Error::Stream(
                "short blocks signalled but not supported".into(),
            ));
        }
        let params = cfg.prediction;
        let coarse = coarse_decode(
            &mut self.core.predictor,
            &params,
            &self.core.models[usize::from(transient)],
            budget,
            &mut dec,
        )?;
        let alloc: AllocationResult = compute_allocation(
            cfg.frame_bytes,
            dec.tell_frac(),
            &self.core.layout,
            cfg.profile,
        );
        let fine = fine_decode(&alloc.fine_bits, &mut dec)?;
        let after_fine = dec.tell_frac();
        let log_energy: Vec<f64> = coarse
            .iter()
            .zip(&fine)
            .zip(&self.core.reference)
            .map(|((c, f), r)| c + f + r)
            .collect();
        let mut spectrum = vec![0.0; n];
        let mut pulses = Vec::with_capacity(log_energy.len());
        for (b, &e) in log_energy.iter().enumerate() {
            let (k, _) = pulses_at(&alloc, &self.core.layout, b, after_fine, dec.tell_frac());
            let y = if k > 0 {
                Some(decode_pulses(self.core.layout.width(b), k, &mut dec)?)
            } else {
                None
            };
            self.core
                .synthesize_band(b, y.as_deref(), k, e.exp2(), &mut spectrum)?;
            pulses.push(k);
        }
        let mode = if transient {
            BlockMode::Short
        } else {
            BlockMode::Long
        };
        Ok(DecodedFrame {
            spectrum,
            log_energy,
            mode,
            pulses,
            lost: false,
        })
    }
}

/// Frame `index` of `signal`: `N + L` samples starting at `index * N`, zero
/// padded past the end.
pub fn analysis_window(signal: &[f64], config: &CodecConfig, index: usize) -> Vec<f64> {
    let start = index * config.frame_size;
    let mut out = vec![0.0; config.frame_size + config.overlap];
    if start < signal.len() {
        let end = (start + out.len()).min(signal.len());
        out[..end - start].copy_from_slice(&signal[start..end]);
    }
    out
}

/// Encodes a whole signal; returns one payload and its stats per frame.
pub fn encode_signal(config: &CodecConfig, signal: &[f64]) -> Result<Vec<(Vec<u8>, FrameStats)>> {
    let mut enc = Encoder::new(config.clone())?;
    (0..config.frame_count(signal.len()))
        .map(|i| enc.encode_frame_with_stats(&analysis_window(signal, config, i)))
        .collect()
}

/// Decodes payloads (`None` = lost) into `frames * N` samples. Output sample
/// `i` lines up with input sample `i`.
pub fn decode_signal(config: &CodecConfig, frames: &[Option<Vec<u8>>]) -> Result<Vec<f64>> {
    let mut dec = Decoder::new(config.clone())?;
    let mut out = Vec::with_capacity(frames.len() * config.frame_size);
    for f in frames {
        out.extend(dec.decode_frame(f.as_deref())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(len: usize, seed: u64, amp: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random_range(-amp..amp)).collect()
    }

    #[test]
    fn frames_have_fixed_size_and_decode() {
        for n in [64, 128, 256] {
            let cfg = CodecConfig::new(n, 30).unwrap();
            let x = noise(n * 20, 1, 0.3);
            let frames = encode_signal(&cfg, &x).unwrap();
            assert!(frames.iter().all(|(b, _)| b.len() == 30));
            let out = decode_signal(
                &cfg,
                &frames.into_iter().map(|(b, _)| Some(b)).collect::<Vec<_>>(),
            )
            .unwrap();
            assert_eq!(out.len(), cfg.frame_count(x.len()) * n);
        }
    }

    #[test]
    fn stats_add_up() {
        let cfg = CodecConfig::new(256, 43).unwrap();
        for (_, s) in encode_signal(&cfg, &noise(256 * 10, 2, 0.2)).unwrap() {
            assert_eq!(
                s.flags + s.coarse + s.fine + s.shape + s.unallocated,
                s.total
            );
            assert_eq!(s.total, 344 * 8);
            assert_eq!(s.flags, 16);
        }
    }

    #[test]
    fn reset_reproduces_bytes() {
        let cfg = CodecConfig::new(128, 40).unwrap();
        let x = analysis_window(&noise(4000, 3, 0.5), &cfg, 2);
        let mut enc = Encoder::new(cfg.clone()).unwrap();
        let a = enc.encode_frame(&x).unwrap();
        enc.encode_frame(&x).unwrap();
        enc.reset();
        assert_eq!(enc.encode_frame(&x).unwrap(), a);
    }

    #[test]
    fn bitrate_helpers() {
        assert_eq!(CodecConfig::bytes_for_bitrate(64_500.0, 48_000, 256), 43);
        assert_eq!(CodecConfig::new(256, 43).unwrap().bitrate(), 64_500.0);
        let cfg = CodecConfig::new(256, 43).unwrap();
        assert_eq!(cfg.frame_count(48_000), 187);
        assert_eq!(cfg.frame_count(1), 1);
        assert_eq!(cfg.frame_count(0), 0);
    }

    #[test]
    fn config_errors() {
        assert!(CodecConfig::new(100, 40).is_err());
        assert!(CodecConfig::new(256, 1).is_err());
        assert!(CodecConfig::new(256, MAX_FRAME_BYTES + 1).is_err());
        let mut enc = Encoder::new(CodecConfig::new(64, 20).unwrap()).unwrap();
        assert!(enc.encode_frame(&[0.0; 10]).is_err());
        let mut dec = Decoder::new(CodecConfig::new(64, 20).unwrap()).unwrap();
        assert!(dec.decode_frame(Some(&[0u8; 19])).is_err());
    }
}
