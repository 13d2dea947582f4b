//! Reduced-overlap MDCT analysis/synthesis.
//!
//! A frame of `N` new samples is analysed over a window of `N + L` samples
//! (the frame plus `L` samples of look-ahead). The window is flat except for
//! power-complementary transitions of length `L` at each end, so consecutive
//! frames overlap by `L` samples and the algorithmic delay is `N + L`.
//!
//! Short-block frames split the same `N + L` span into two `N/2`-point MDCTs
//! that share the long window's transitions at the frame edges, so long and
//! short frames can follow each other freely without extra look-ahead. The two
//! short spectra are interleaved: combined bin `k` holds bin `k / 2` of short
//! transform `k % 2`.
//!
//! Both directions use orthonormal scaling (`sqrt(2 / M)` for an `M`-bin
//! transform), making the lapped transform orthogonal.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockMode {
    Long,
    /// Two half-size MDCTs, interleaved.
    Short,
}

/// Window geometry plus the rising transition shared by every block size.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    frame_size: usize,
    overlap: usize,
    rise: Vec<f64>,
}

impl WindowSpec {
    /// `overlap` must be even, nonzero and at most `frame_size / 2`.
    pub fn new(frame_size: usize, overlap: usize) -> Result<Self> {
        if frame_size < 4 || !frame_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "frame size {frame_size} must be even and >= 4"
            )));
        }
        if overlap == 0 || !overlap.is_multiple_of(2) || overlap > frame_size / 2 {
            return Err(Error::Config(format!(
                "overlap {overlap} must be even and in [2, {}]",
                frame_size / 2
            )));
        }
        // sin(pi/2 * sin^2(.)): rise[n]^2 + rise[L-1-n]^2 == 1
        let rise = (0..overlap)
            .map(|n| {
                let s = (PI * (n as f64 + 0.5) / (2.0 * overlap as f64)).sin();
                (0.5 * PI * s * s).sin()
            })
            .collect();
        Ok(Self {
            frame_size,
            overlap,
            rise,
        })
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Nonzero window support, `N + L`.
    pub fn support(&self) -> usize {
        self.frame_size + self.overlap
    }

    /// Algorithmic delay in samples, `N + L`.
    pub fn delay(&self) -> usize {
        self.frame_size + self.overlap
    }

    pub fn delay_ms(&self, sample_rate: u32) -> f64 {
        1000.0 * self.delay() as f64 / f64::from(sample_rate)
    }

    pub fn rise(&self) -> &[f64] {
        &self.rise
    }

    /// Window value at position `n` of a block of `block` coefficients
    /// (support `block + L`).
    fn value(&self, block: usize, n: usize) -> f64 {
        let l = self.overlap;
        if n < l {
            self.rise[n]
        } else if n < block {
            1.0
        } else if n < block + l {
            self.rise[block + l - 1 - n]
        } else {
            0.0
        }
    }
}

/// One lapped transform size: `bins` coefficients from `bins + L` samples.
struct Mdct {
    bins: usize,
    // zero padding on each side of the support inside the 2*bins frame
    pad: usize,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    scale: f64,
}

impl fmt::Debug for Mdct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mdct")
            .field("bins", &self.bins)
            .field("pad", &self.pad)
            .finish()
    }
}

impl Mdct {
    fn new(bins: usize, spec: &WindowSpec, planner: &mut FftPlanner<f64>) -> Self {
        let l = spec.overlap;
        debug_assert!(bins.is_multiple_of(2) && l <= bins && (bins - l).is_multiple_of(2));
        let half = bins / 2;
        let window = (0..bins + l).map(|n| spec.value(bins, n)).collect();
        let pre = (0..half)
            .map(|n| Complex64::from_polar(1.0, -PI * (4 * n + 1) as f64 / (4 * bins) as f64))
            .collect();
        let post = (0..half)
            .map(|k| Complex64::from_polar(1.0, -PI * k as f64 / bins as f64))
            .collect();
        Self {
            bins,
            pad: (bins - l) / 2,
            window,
            fft: planner.plan_fft_forward(half),
            pre,
            post,
            scale: (2.0 / bins as f64).sqrt(),
        }
    }

    /// Unscaled DCT-IV in place, through a `bins/2`-point complex FFT.
    fn dct4(&self, data: &mut [f64], scratch: &mut Vec<Complex64>) {
        let n = self.bins;
        let half = n / 2;
        scratch.clear();
        scratch.extend(
            (0..half).map(|i| Complex64::new(data[2 * i], data[n - 1 - 2 * i]) * self.pre[i]),
        );
        self.fft.process(scratch);
        for (k, (v, tw)) in scratch.iter().zip(&self.post).enumerate() {
            let v = v * tw;
            data[2 * k] = v.re;
            data[n - 1 - 2 * k] = -v.im;
        }
    }

    fn forward(&self, input: &[f64], out: &mut [f64]) {
        let n = self.bins;
        let half = n / 2;
        debug_assert_eq!(input.len(), self.window.len());
        debug_assert_eq!(out.len(), n);
        // x over the full 2n frame: zeros outside the window support
        let x = |i: usize| -> f64 {
            if i < self.pad || i >= self.pad + self.window.len() {
                0.0
            } else {
                let j = i - self.pad;
                input[j] * self.window[j]
            }
        };
        // quarters a, b, c, d fold to (-c_r - d, a - b_r)
        for i in 0..half {
            out[i] = -x(3 * half - 1 - i) - x(3 * half + i);
            out[half + i] = x(i) - x(n - 1 - i);
        }
        let mut scratch = Vec::with_capacity(half);
        self.dct4(out, &mut scratch);
        for v in out.iter_mut() {
            *v *= self.scale;
        }
    }

    /// Windowed time-domain contribution over the support (`bins + L`).
    fn inverse(&self, coeffs: &[f64], out: &mut [f64]) {
        let n = self.bins;
        let half = n / 2;
        debug_assert_eq!(coeffs.len(), n);
        debug_assert_eq!(out.len(), self.window.len());
        let mut v = coeffs.to_vec();
        let mut scratch = Vec::with_capacity(half);
        self.dct4(&mut v, &mut scratch);
        let y = |i: usize| -> f64 {
            if i < half {
                v[i + half]
            } else if i < 3 * half {
                -v[3 * half - 1 - i]
            } else {
                -v[i - 3 * half]
            }
        };
        for (j, o) in out.iter_mut().enumerate() {
            *o = y(j + self.pad) * self.window[j] * self.scale;
        }
    }
}

/// MDCT coefficients of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MdctFrame {
    pub coeffs: Vec<f64>,
    pub mode: BlockMode,
}

/// Long and short transforms for one window geometry.
#[derive(Debug)]
pub struct Transform {
    spec: WindowSpec,
    long: Mdct,
    short: Option<Mdct>,
}

impl Transform {
    pub fn new(spec: WindowSpec) -> Self {
        let mut planner = FftPlanner::new();
        let long = Mdct::new(spec.frame_size, &spec, &mut planner);
        let half = spec.frame_size / 2;
        let short = (half.is_multiple_of(2)
            && spec.overlap <= half
            && (half - spec.overlap).is_multiple_of(2))
        .then(|| Mdct::new(half, &spec, &mut planner));
        Self { spec, long, short }
    }

    pub fn spec(&self) -> &WindowSpec {
        &self.spec
    }

    pub fn supports_short(&self) -> bool {
        self.short.is_some()
    }

    fn short(&self) -> Result<&Mdct> {
        self.short.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "short blocks need the frame size divisible by 4 (got {})",
                self.spec.frame_size
            ))
        })
    }

    /// Analyses `N + L` samples (current frame plus look-ahead).
    pub fn forward(&self, input: &[f64], mode: BlockMode) -> Result<MdctFrame> {
        let n = self.spec.frame_size;
        if input.len() != self.spec.support() {
            return Err(Error::Length {
                expected: self.spec.support(),
                actual: input.len(),
            });
        }
        let mut coeffs = vec![0.0; n];
        match mode {
            BlockMode::Long => self.long.forward(input, &mut coeffs),
            BlockMode::Short => {
                let short = self.short()?;
                let half = n / 2;
                let span = half + self.spec.overlap;
                let mut a = vec![0.0; half];
                let mut b = vec![0.0; half];
                short.forward(&input[..span], &mut a);
                short.forward(&input[half..half + span], &mut b);
                interleave(&a, &b, &mut coeffs);
            }
        }
        Ok(MdctFrame { coeffs, mode })
    }

    /// Windowed synthesis over the `N + L` support, ready for overlap-add.
    pub fn inverse(&self, frame: &MdctFrame) -> Result<Vec<f64>> {
        let n = self.spec.frame_size;
        if frame.coeffs.len() != n {
            return Err(Error::Length {
                expected: n,
                actual: frame.coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.spec.support()];
        match frame.mode {
            BlockMode::Long => self.long.inverse(&frame.coeffs, &mut out),
            BlockMode::Short => {
                let short = self.short()?;
                let half = n / 2;
                let span = half + self.spec.overlap;
                let (a, b) = deinterleave(&frame.coeffs);
                let mut tmp = vec![0.0; span];
                short.inverse(&a, &mut tmp);
                out[..span].copy_from_slice(&tmp);
                short.inverse(&b, &mut tmp);
                for (o, t) in out[half..].iter_mut().zip(&tmp) {
                    *o += t;
                }
            }
        }
        Ok(out)
    }
}

pub fn interleave(a: &[f64], b: &[f64], out: &mut [f64]) {
    for (j, (x, y)) in a.iter().zip(b).enumerate() {
        out[2 * j] = *x;
        out[2 * j + 1] = *y;
    }
}

pub fn deinterleave(coeffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = coeffs.iter().step_by(2).copied().collect();
    let b = coeffs.iter().skip(1).step_by(2).copied().collect();
    (a, b)
}

/// Overlap-add synthesis memory for one stream.
#[derive(Debug, Clone)]
pub struct OverlapAdd {
    frame_size: usize,
    tail: Vec<f64>,
}

impl OverlapAdd {
    pub fn new(spec: &WindowSpec) -> Self {
        Self {
            frame_size: spec.frame_size,
            tail: vec![0.0; spec.overlap],
        }
    }

    /// Adds one `N + L` contribution and returns the `N` finished samples.
    pub fn push(&mut self, contribution: &[f64]) -> Vec<f64> {
        let n = self.frame_size;
        let mut out = contribution[..n].to_vec();
        for (o, t) in out.iter_mut().zip(&self.tail) {
            *o += t;
        }
        self.tail.copy_from_slice(&contribution[n..]);
        out
    }

    pub fn reset(&mut self) {
        self.tail.fill(0.0);
    }
}

/// Mean-square level below which nothing counts as an attack (about -80 dBFS).
const TRANSIENT_FLOOR: f64 = 1e-8;
const TRANSIENT_RATIO: f64 = 16.0;

/// Short-term energy block: 2 ms, but never more than half a frame.
pub fn transient_block_len(sample_rate: u32, frame_size: usize) -> usize {
    let two_ms = (sample_rate as usize * 2 / 1000).max(2);
    two_ms.min(frame_size / 2).max(2)
}

fn block_energies(samples: &[f64], block: usize) -> Vec<f64> {
    if samples.len() < block {
        let e = samples.iter().map(|x| x * x).sum::<f64>() / block as f64;
        return vec![e];
    }
    let hop = (block / 2).max(1);
    (0..=samples.len() - block)
        .step_by(hop)
        .map(|s| samples[s..s + block].iter().map(|x| x * x).sum::<f64>() / block as f64)
        .collect()
}

/// True when the loudest short-term block of `current` exceeds 16x the median
/// short-term energy of `previous` (and an absolute floor).
///
/// In the codec `current` is the part of the analysis window the previous
/// frame did not see and `previous` is the same span one frame earlier.
pub fn detect_transient(current: &[f64], previous: &[f64], block: usize) -> bool {
    let peak = block_energies(current, block)
        .into_iter()
        .fold(0.0, f64::max);
    if peak <= TRANSIENT_FLOOR {
        return false;
    }
    let mut prev = block_energies(previous, block);
    prev.sort_by(f64::total_cmp);
    let median = if prev.is_empty() {
        0.0
    } else {
        prev[prev.len() / 2]
    };
    peak > TRANSIENT_RATIO * median
}
