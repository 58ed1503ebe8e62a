//! PFM reader/writer with exact IEEE-754 single-precision round trips.
//!
//! Standard headers `Pf` (1 channel) and `PF` (3 channels) are supported,
//! plus a documented extension `PF<C>` (e.g. `PF2`, `PF81`) for other
//! channel counts, which carries flow fields, posteriors, and cost volumes.
//! The scale's sign encodes endianness; its magnitude is treated purely as
//! an endianness marker, as most readers do. Scanlines are stored bottom-up.

use std::path::Path;

use crate::error::{Error, Result};
use crate::map::DenseMap;

fn is_pfm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\n' | b'\r' | b'\t')
}

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderParser<'a> {
    fn token(&mut self) -> Result<&'a str> {
        while self.pos < self.bytes.len() && is_pfm_whitespace(self.bytes[self.pos]) {
            self.pos += 1;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !is_pfm_whitespace(self.bytes[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("truncated PFM header".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Format("PFM header is not ASCII".into()))
    }

    /// Consumes the single whitespace byte separating header and data.
    fn finish(mut self) -> Result<usize> {
        if self.pos >= self.bytes.len() || !is_pfm_whitespace(self.bytes[self.pos]) {
            return Err(Error::Format("missing separator after PFM scale".into()));
        }
        self.pos += 1;
        Ok(self.pos)
    }
}

fn channels_of_magic(magic: &str) -> Result<usize> {
    match magic {
        "Pf" => Ok(1),
        "PF" => Ok(3),
        other => {
            if let Some(rest) = other.strip_prefix("PF") {
                if let Ok(c) = rest.parse::<usize>() {
                    if c > 0 {
                        return Ok(c);
                    }
                }
            }
            Err(Error::Format(format!("unknown PFM magic {other:?}")))
        }
    }
}

fn magic_of_channels(channels: usize) -> String {
    match channels {
        1 => "Pf".to_string(),
        3 => "PF".to_string(),
        c => format!("PF{c}"),
    }
}

/// Decodes an in-memory PFM file.
pub fn decode_pfm(bytes: &[u8]) -> Result<DenseMap> {
    let mut parser = HeaderParser { bytes, pos: 0 };
    let channels = channels_of_magic(parser.token()?)?;
    let width: usize = parser
        .token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM width".into()))?;
    let height: usize = parser
        .token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM height".into()))?;
    let scale: f64 = parser
        .token()?
        .parse()
        .map_err(|_| Error::Format("bad PFM scale".into()))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Format(format!("invalid PFM scale {scale}")));
    }
    let little_endian = scale < 0.0;
    let data_start = parser.finish()?;

    let count = width * height * channels;
    let expected = count * 4;
    let payload = &bytes[data_start..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "PFM payload is {} bytes, expected {expected}",
            payload.len()
        )));
    }

    let mut data = vec![0.0f64; count];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // Bottom-up scanlines: file row r is image row height - 1 - r.
        let pixel = i / channels;
        let ch = i % channels;
        let file_row = pixel / width;
        let col = pixel % width;
        let row = height - 1 - file_row;
        data[(row * width + col) * channels + ch] = v as f64;
    }
    DenseMap::from_vec(height, width, channels, data)
        .map_err(|e| Error::Format(format!("PFM payload rejected: {e}")))
}

/// Encodes to little-endian PFM (scale -1.0), bottom-up scanlines. Values
/// are narrowed to `f32`.
pub fn encode_pfm(map: &DenseMap) -> Result<Vec<u8>> {
    if map.channels() == 0 || map.width() == 0 || map.height() == 0 {
        return Err(Error::InvalidArgument("cannot encode an empty map".into()));
    }
    let mut out = Vec::with_capacity(32 + map.len() * 4);
    out.extend_from_slice(magic_of_channels(map.channels()).as_bytes());
    out.push(b'\n');
    out.extend_from_slice(format!("{} {}\n", map.width(), map.height()).as_bytes());
    out.extend_from_slice(b"-1.0\n");
    let (h, w, c) = (map.height(), map.width(), map.channels());
    for file_row in 0..h {
        let row = h - 1 - file_row;
        for col in 0..w {
            for ch in 0..c {
                out.extend_from_slice(&(map.get(col, row, ch) as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<DenseMap> {
    decode_pfm(&std::fs::read(path)?)
}

pub fn write_pfm(path: impl AsRef<Path>, map: &DenseMap) -> Result<()> {
    std::fs::write(path, encode_pfm(map)?)?;
    Ok(())
}
