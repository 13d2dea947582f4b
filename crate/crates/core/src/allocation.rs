//! Implicit bit allocation.
//!
//! Both sides know the frame size and, after decoding the coarse energies,
//! how many bits those used. Everything else is derived from static tables,
//! so nothing about the allocation is transmitted. All quantities are in
//! 1/8 bits.

use crate::bands::BandLayout;
use crate::energy::MAX_FINE_BITS;
use crate::error::{Error, Result};
use crate::pvq::{bits_to_pulses, MAX_PULSES};
use crate::range_coder::BITRES;

/// Bits (in 1/8 units) kept back for range coder termination.
pub const ALLOCATION_RESERVE: u64 = 1 << BITRES;

/// Cap on fine-energy bits per band assigned by the allocator.
pub const ALLOCATION_MAX_FINE: u32 = 7;

/// Static spectral weighting of the allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllocationProfile {
    /// Shares proportional to band width.
    Flat = 0,
    /// Shares tilted by about one bit per bin up at DC and down at Nyquist.
    #[default]
    Psychoacoustic = 1,
}

impl AllocationProfile {
    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Self::Flat),
            1 => Ok(Self::Psychoacoustic),
            _ => Err(Error::Config(format!("unknown allocation profile {id}"))),
        }
    }

    /// Per-band share of `avail`: a width-proportional split plus zero-sum
    /// profile offsets, which are scaled in linearly while `avail` is too
    /// small to carry them. Every share is nondecreasing in `avail`.
    fn shares(self, layout: &BandLayout, avail: u64) -> Vec<u64> {
        let n = layout.frame_size() as i128;
        let widths: Vec<i128> = layout.widths().map(|w| w as i128).collect();
        let total_width: i128 = widths.iter().sum();
        let avail = i128::from(avail);
        let flat = || {
            widths
                .iter()
                .map(|w| (avail * w / total_width) as u64)
                .collect()
        };
        match self {
            Self::Flat => flat(),
            Self::Psychoacoustic => {
                // +8 eighths per bin at DC down to -8 at Nyquist
                let tilt: Vec<i128> = (0..layout.num_bands())
                    .map(|b| {
                        let r = layout.range(b);
                        8 * (n - (r.start + r.end) as i128) / n
                    })
                    .collect();
                let mean: i128 = widths.iter().zip(&tilt).map(|(w, t)| w * t).sum();
                let full = tilt
                    .iter()
                    .map(|t| mean - total_width * t)
                    .max()
                    .unwrap_or(0);
                if full <= 0 {
                    return flat();
                }
                let phase = avail.min(full);
                widths
                    .iter()
                    .zip(&tilt)
                    .map(|(w, t)| {
                        let offset = w * (total_width * t - mean);
                        ((avail * w * full + phase * offset) / (total_width * full)) as u64
                    })
                    .collect()
            }
        }
    }
}

/// Planned allocation of one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationResult {
    pub fine_bits: Vec<u32>,
    pub pulses: Vec<u32>,
    /// Worst-case coded cost of each band's pulses.
    pub pulse_cost: Vec<u32>,
    /// Bits each band may spend on pulses, at least `pulse_cost`.
    pub pulse_budget: Vec<u32>,
    /// Frame budget not assigned to any band, reserve included.
    pub unallocated: u64,
    pub total: u64,
}

impl AllocationResult {
    fn empty(bands: usize, total: u64, used: u64) -> Self {
        Self {
            fine_bits: vec![0; bands],
            pulses: vec![0; bands],
            pulse_cost: vec![0; bands],
            pulse_budget: vec![0; bands],
            unallocated: total.saturating_sub(used),
            total,
        }
    }

    pub fn fine_total(&self) -> u64 {
        self.fine_bits.iter().map(|&b| u64::from(b) << BITRES).sum()
    }

    pub fn pulse_total(&self) -> u64 {
        self.pulse_cost.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Splits what is left of a `frame_bytes` frame after `used` 1/8 bits
/// (flags and coarse energy) into fine bits and pulse counts per band.
pub fn compute_allocation(
    frame_bytes: usize,
    used: u64,
    layout: &BandLayout,
    profile: AllocationProfile,
) -> AllocationResult {
    let bands = layout.num_bands();
    let total = (frame_bytes as u64) << (3 + BITRES);
    let avail = total
        .saturating_sub(used)
        .saturating_sub(ALLOCATION_RESERVE);
    if avail == 0 {
        return AllocationResult::empty(bands, total, used);
    }
    let shares = profile.shares(layout, avail);
    let mut out = AllocationResult::empty(bands, total, used);
    for (b, &target) in shares.iter().enumerate() {
        let width = layout.width(b) as u64;
        let max_fine = u64::from(ALLOCATION_MAX_FINE.min(MAX_FINE_BITS));
        // pulses get what an unrounded fine share leaves, so K never drops
        // as the target grows
        let fine_share = (2 * target / width).min(max_fine << BITRES).min(target);
        let (k, cost) = bits_to_pulses(
            layout.width(b),
            (target - fine_share).min(u64::from(u32::MAX)) as u32,
        )
        .expect("band widths are within the pulse tables");
        let fine = ((target + 2 * width) / (4 * width))
            .min(max_fine)
            .min((target - u64::from(cost)) >> BITRES);
        out.fine_bits[b] = fine as u32;
        out.pulses[b] = k;
        out.pulse_cost[b] = cost;
        out.pulse_budget[b] = (target - (fine << BITRES)).min(u64::from(u32::MAX)) as u32;
    }
    out.unallocated = total - used.min(total) - out.fine_total() - out.pulse_total();
    out
}

/// Pulses for band `band` when the shape section started at `start` and the
/// coder is now at `tell`: the band's own budget plus whatever the earlier
/// bands left unspent.
pub fn pulses_at(
    alloc: &AllocationResult,
    layout: &BandLayout,
    band: usize,
    start: u64,
    tell: u64,
) -> (u32, u32) {
    let planned_end: u64 = alloc.pulse_budget[..=band]
        .iter()
        .map(|&c| u64::from(c))
        .sum();
    let room = (start + planned_end).saturating_sub(tell);
    let (k, cost) = bits_to_pulses(layout.width(band), room.min(u64::from(u32::MAX)) as u32)
        .expect("band widths are within the pulse tables");
    debug_assert!(k <= MAX_PULSES);
    (k, cost)
}
