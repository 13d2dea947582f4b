//! File container: a 16-byte header followed by fixed-size frames.
//!
//! ```text
//! 0  magic "CLT0"
//! 4  sample rate    u32 LE
//! 8  frame size     u16 LE
//! 10 overlap        u16 LE
//! 12 frame bytes    u16 LE
//! 14 profile id     u8
//! 15 flags          u8
//! ```

use std::io::Write;

use crate::allocation::AllocationProfile;
use crate::codec::CodecConfig;
use crate::energy::CoarseParams;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"CLT0";
pub const HEADER_LEN: usize = 16;

/// Coarse energies use no inter-frame prediction.
pub const FLAG_INTRA_ONLY: u8 = 1 << 0;
/// Decoded frame `m` covers input samples `[m N, (m + 1) N)`; nothing has to
/// be trimmed to line the output up with the input.
pub const FLAG_ALIGNED_OUTPUT: u8 = 1 << 1;
const KNOWN_FLAGS: u8 = FLAG_INTRA_ONLY | FLAG_ALIGNED_OUTPUT;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamHeader {
    pub sample_rate: u32,
    pub frame_size: u16,
    pub overlap: u16,
    pub frame_bytes: u16,
    pub profile_id: u8,
    pub flags: u8,
}

impl StreamHeader {
    /// Fails for prediction settings other than the default and intra-only
    /// ones, which the header cannot express.
    pub fn from_config(config: &CodecConfig) -> Result<Self> {
        config.validate()?;
        let mut flags = FLAG_ALIGNED_OUTPUT;
        if config.prediction == CoarseParams::intra() {
            flags |= FLAG_INTRA_ONLY;
        } else if config.prediction != CoarseParams::default() {
            return Err(Error::Config(
                "only default or intra-only prediction can be stored".into(),
            ));
        }
        let narrow = |v: usize, what: &str| {
            u16::try_from(v).map_err(|_| Error::Config(format!("{what} {v} does not fit")))
        };
        Ok(Self {
            sample_rate: config.sample_rate,
            frame_size: narrow(config.frame_size, "frame size")?,
            overlap: narrow(config.overlap, "overlap")?,
            frame_bytes: narrow(config.frame_bytes, "frame bytes")?,
            profile_id: config.profile.id(),
            flags,
        })
    }

    pub fn to_config(&self) -> Result<CodecConfig> {
        let prediction = if self.flags & FLAG_INTRA_ONLY != 0 {
            CoarseParams::intra()
        } else {
            CoarseParams::default()
        };
        let config = CodecConfig {
            sample_rate: self.sample_rate,
            frame_size: usize::from(self.frame_size),
            overlap: usize::from(self.overlap),
            frame_bytes: usize::from(self.frame_bytes),
            profile: AllocationProfile::from_id(self.profile_id)?,
            prediction,
            transient_mode: Default::default(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.sample_rate.to_le_bytes());
        out[8..10].copy_from_slice(&self.frame_size.to_le_bytes());
        out[10..12].copy_from_slice(&self.overlap.to_le_bytes());
        out[12..14].copy_from_slice(&self.frame_bytes.to_le_bytes());
        out[14] = self.profile_id;
        out[15] = self.flags;
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Stream(format!(
                "header truncated: {} of {HEADER_LEN} bytes",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Stream("bad magic".into()));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let header = Self {
            sample_rate: u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            frame_size: u16_at(8),
            overlap: u16_at(10),
            frame_bytes: u16_at(12),
            profile_id: bytes[14],
            flags: bytes[15],
        };
        if header.flags & !KNOWN_FLAGS != 0 {
            return Err(Error::Stream(format!(
                "unknown flags {:#04x}",
                header.flags
            )));
        }
        Ok(header)
    }
}

/// A parsed container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stream {
    pub header: StreamHeader,
    pub frames: Vec<Vec<u8>>,
    /// Bytes after the last whole frame, dropped.
    pub trailing: usize,
}

pub fn write_stream<W: Write>(
    mut out: W,
    header: &StreamHeader,
    frames: &[Vec<u8>],
) -> std::io::Result<()> {
    out.write_all(&header.to_bytes())?;
    for frame in frames {
        if frame.len() != usize::from(header.frame_bytes) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!(
                    "frame of {} bytes in a {}-byte stream",
                    frame.len(),
                    header.frame_bytes
                ),
            ));
        }
        out.write_all(frame)?;
    }
    out.flush()
}

pub fn read_stream(bytes: &[u8]) -> Result<Stream> {
    let header = StreamHeader::parse(bytes)?;
    let size = usize::from(header.frame_bytes);
    if size == 0 {
        return Err(Error::Stream("zero frame size".into()));
    }
    let body = &bytes[HEADER_LEN..];
    let frames = body.chunks_exact(size).map(<[u8]>::to_vec).collect();
    Ok(Stream {
        header,
        frames,
        trailing: body.len() % size,
    })
}
