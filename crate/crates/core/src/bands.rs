//! Critical-band partition of the MDCT spectrum, band energies and shapes.
//!
//! Energies are kept in log2 of the band's L2 norm, so one unit is a factor of
//! two in amplitude (6.02 dB).

use crate::error::{Error, Result};

/// Narrowest band allowed, in MDCT bins.
pub const MIN_BAND_WIDTH: usize = 3;

/// Log-energy assigned to silent bands (about -169 dB).
pub const LOG_ENERGY_FLOOR: f64 = -28.0;

/// Upper edges of the classic critical bands, in Hz; the last band runs to
/// Nyquist.
const CRITICAL_BAND_EDGES_HZ: [f64; 25] = [
    100.0, 200.0, 300.0, 400.0, 510.0, 630.0, 770.0, 920.0, 1080.0, 1270.0, 1480.0, 1720.0, 2000.0,
    2320.0, 2700.0, 3150.0, 3700.0, 4400.0, 5300.0, 6400.0, 7700.0, 9500.0, 12000.0, 15500.0,
    20500.0,
];

pub const SUPPORTED_FRAME_SIZES: [usize; 3] = [64, 128, 256];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandLayout {
    frame_size: usize,
    sample_rate: u32,
    boundaries: Vec<usize>,
}

impl BandLayout {
    pub fn new(frame_size: usize, sample_rate: u32) -> Result<Self> {
        if !SUPPORTED_FRAME_SIZES.contains(&frame_size) {
            return Err(Error::Config(format!(
                "frame size {frame_size} not one of {SUPPORTED_FRAME_SIZES:?}"
            )));
        }
        if sample_rate == 0 {
            return Err(Error::Config("sample rate must be positive".into()));
        }
        let bin_hz = f64::from(sample_rate) / (2.0 * frame_size as f64);
        let mut edges: Vec<usize> = vec![0];
        for hz in CRITICAL_BAND_EDGES_HZ {
            let bin = ((hz / bin_hz).round() as usize).min(frame_size);
            if bin > *edges.last().unwrap() {
                edges.push(bin);
            }
        }
        if *edges.last().unwrap() < frame_size {
            edges.push(frame_size);
        }
        // merge narrow bands upward; a narrow top band merges downward
        let mut boundaries = vec![0];
        for &e in &edges[1..] {
            if e - boundaries.last().unwrap() >= MIN_BAND_WIDTH {
                boundaries.push(e);
            }
        }
        let last = boundaries.len() - 1;
        if boundaries[last] != frame_size {
            if last == 0 {
                boundaries.push(frame_size);
            } else {
                boundaries[last] = frame_size;
            }
        }
        Ok(Self {
            frame_size,
            sample_rate,
            boundaries,
        })
    }

    pub fn frame_size(&self) -> usize {
        self.frame_size
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_bands(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn range(&self, band: usize) -> std::ops::Range<usize> {
        self.boundaries[band]..self.boundaries[band + 1]
    }

    pub fn width(&self, band: usize) -> usize {
        self.boundaries[band + 1] - self.boundaries[band]
    }

    pub fn widths(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundaries.windows(2).map(|w| w[1] - w[0])
    }

    /// Frequency span of a band in Hz (bin edges).
    pub fn hz_range(&self, band: usize) -> (f64, f64) {
        let bin_hz = f64::from(self.sample_rate) / (2.0 * self.frame_size as f64);
        let r = self.range(band);
        (r.start as f64 * bin_hz, r.end as f64 * bin_hz)
    }
}

/// Typical per-bin level (log2 RMS) by frequency, interpolated linearly.
const REFERENCE_LEVEL: [(f64, f64); 7] = [
    (0.0, -3.8),
    (2000.0, -4.0),
    (4000.0, -4.6),
    (6000.0, -5.3),
    (9000.0, -7.2),
    (14000.0, -9.0),
    (24000.0, -9.4),
];

fn reference_level(hz: f64) -> f64 {
    let i = REFERENCE_LEVEL.partition_point(|&(f, _)| f <= hz);
    if i == 0 {
        return REFERENCE_LEVEL[0].1;
    }
    if i == REFERENCE_LEVEL.len() {
        return REFERENCE_LEVEL[i - 1].1;
    }
    let ((f0, l0), (f1, l1)) = (REFERENCE_LEVEL[i - 1], REFERENCE_LEVEL[i]);
    l0 + (l1 - l0) * (hz - f0) / (f1 - f0)
}

/// Static per-band log2 norm around which coarse energies are coded.
pub fn reference_log_energy(layout: &BandLayout) -> Vec<f64> {
    (0..layout.num_bands())
        .map(|b| {
            let (lo, hi) = layout.hz_range(b);
            0.5 * (layout.width(b) as f64).log2() + reference_level(0.5 * (lo + hi))
        })
        .collect()
}

/// Per-band energies in both linear and log views.
#[derive(Debug, Clone, PartialEq)]
pub struct BandEnergies {
    pub linear_norm: Vec<f64>,
    /// log2 of the norm, floored at [`LOG_ENERGY_FLOOR`].
    pub log_energy: Vec<f64>,
}

pub fn log_energy_of(norm: f64) -> f64 {
    if norm > 0.0 {
        norm.log2().max(LOG_ENERGY_FLOOR)
    } else {
        LOG_ENERGY_FLOOR
    }
}

pub fn compute_energies(coeffs: &[f64], layout: &BandLayout) -> Result<BandEnergies> {
    if coeffs.len() != layout.frame_size() {
        return Err(Error::Length {
            expected: layout.frame_size(),
            actual: coeffs.len(),
        });
    }
    let linear_norm: Vec<f64> = (0..layout.num_bands())
        .map(|b| {
            coeffs[layout.range(b)]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let log_energy = linear_norm.iter().map(|&n| log_energy_of(n)).collect();
    Ok(BandEnergies {
        linear_norm,
        log_energy,
    })
}

/// Unit-norm shape of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandShape {
    pub values: Vec<f64>,
    /// The band had zero energy; `values` are all zero.
    pub degenerate: bool,
}

pub fn normalize_bands(
    coeffs: &[f64],
    energies: &BandEnergies,
    layout: &BandLayout,
) -> Vec<BandShape> {
    (0..layout.num_bands())
        .map(|b| {
            let band = &coeffs[layout.range(b)];
            let norm = energies.linear_norm[b];
            if norm > 0.0 {
                BandShape {
                    values: band.iter().map(|x| x / norm).collect(),
                    degenerate: false,
                }
            } else {
                BandShape {
                    values: vec![0.0; band.len()],
                    degenerate: true,
                }
            }
        })
        .collect()
}

/// Inverse of [`normalize_bands`]: scales each shape by its band norm.
pub fn denormalize_bands(shapes: &[BandShape], norms: &[f64], layout: &BandLayout) -> Vec<f64> {
    let mut out = vec![0.0; layout.frame_size()];
    for (b, (shape, &norm)) in shapes.iter().zip(norms).enumerate() {
        for (o, s) in out[layout.range(b)].iter_mut().zip(&shape.values) {
            *o = s * norm;
        }
    }
    out
}
