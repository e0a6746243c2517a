//! 8-bit grayscale rasters on disk: PGM (P2 ASCII and P5 binary) parsed
//! by hand with byte-offset error reporting, and 8-bit grayscale PNG via
//! the `png` crate. Format detection is content-based.

use std::fs;
use std::path::Path;

use scsc_core::Image2D;

use crate::error::{ToolError, ToolResult};

/// Raw 8-bit grayscale raster plus the stated maximum value, before any
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGray {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u8>,
}

impl RawGray {
    /// Pixel values divided by the format maximum, as an image in [0,1].
    pub fn normalize(&self) -> ToolResult<Image2D> {
        let scale = 1.0 / self.maxval as f64;
        let data: Vec<f64> = self.data.iter().map(|&v| v as f64 * scale).collect();
        Ok(Image2D::new(self.height, self.width, data)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn error(&self, detail: impl Into<String>) -> ToolError {
        ToolError::Parse { offset: self.pos, detail: detail.into() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek();
        if b.is_some() {
            self.pos += 1;
        }
        b
    }

    /// Skips whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.pos += 1;
                }
                Some(b'#') => {
                    while let Some(b) = self.bump() {
                        if b == b'\n' {
                            break;
                        }
                    }
                }
                _ => return,
            }
        }
    }

    fn read_number(&mut self, what: &str) -> ToolResult<u64> {
        self.skip_separators();
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ToolError::Parse {
                offset: start,
                detail: format!("expected {what}"),
            });
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
        text.parse::<u64>().map_err(|_| ToolError::Parse {
            offset: start,
            detail: format!("{what} out of range"),
        })
    }
}

/// Parses a P2 or P5 PGM byte stream.
pub fn parse_pgm(bytes: &[u8]) -> ToolResult<RawGray> {
    let mut cur = Cursor::new(bytes);
    let magic = (cur.bump(), cur.bump());
    let binary = match magic {
        (Some(b'P'), Some(b'5')) => true,
        (Some(b'P'), Some(b'2')) => false,
        _ => {
            return Err(ToolError::Parse {
                offset: 0,
                detail: "not a P2/P5 PGM header".into(),
            })
        }
    };
    let width = cur.read_number("width")? as usize;
    let height = cur.read_number("height")? as usize;
    let maxval_pos = cur.pos;
    let maxval = cur.read_number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(ToolError::Parse { offset: maxval_pos, detail: "maxval out of range".into() });
    }
    if maxval > 255 {
        return Err(ToolError::Parse {
            offset: maxval_pos,
            detail: format!("unsupported depth: maxval {maxval} exceeds 8-bit"),
        });
    }
    if width == 0 || height == 0 {
        return Err(ToolError::Parse { offset: 2, detail: "zero image dimension".into() });
    }
    let count = width * height;
    let mut data = Vec::with_capacity(count);
    if binary {
        match cur.bump() {
            Some(b) if b.is_ascii_whitespace() => {}
            _ => {
                return Err(cur.error("expected single whitespace byte before pixel data"));
            }
        }
        let available = bytes.len() - cur.pos;
        if available < count {
            return Err(ToolError::Parse {
                offset: bytes.len(),
                detail: format!(
                    "truncated pixel data: expected {count} bytes from offset {}, found {available}",
                    cur.pos
                ),
            });
        }
        data.extend_from_slice(&bytes[cur.pos..cur.pos + count]);
    } else {
        for _ in 0..count {
            cur.skip_separators();
            if cur.peek().is_none() {
                return Err(ToolError::Parse {
                    offset: cur.pos,
                    detail: format!("truncated pixel data: expected {count} samples"),
                });
            }
            let value_pos = cur.pos;
            let v = cur.read_number("pixel value")?;
            if v > maxval {
                return Err(ToolError::Parse {
                    offset: value_pos,
                    detail: format!("pixel value {v} exceeds maxval {maxval}"),
                });
            }
            data.push(v as u8);
        }
    }
    Ok(RawGray { width, height, maxval: maxval as u16, data })
}

/// Serializes a raw raster as binary P5 with maxval 255.
pub fn encode_pgm_p5(raster: &RawGray) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend_from_slice(&raster.data);
    out
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

/// Decodes an 8-bit grayscale PNG; other bit depths and color types are
/// rejected.
pub fn parse_png(bytes: &[u8]) -> ToolResult<RawGray> {
    let decoder = png::Decoder::new(bytes);
    let mut reader = decoder
        .read_info()
        .map_err(|e| ToolError::Data(format!("png decode failed: {e}")))?;
    let info = reader.info();
    if info.color_type != png::ColorType::Grayscale || info.bit_depth != png::BitDepth::Eight {
        return Err(ToolError::Data(format!(
            "unsupported png: need 8-bit grayscale, got {:?} {:?}",
            info.color_type, info.bit_depth
        )));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| ToolError::Data(format!("png decode failed: {e}")))?;
    buf.truncate(frame.buffer_size());
    Ok(RawGray { width, height, maxval: 255, data: buf })
}

/// Encodes a raw raster as 8-bit grayscale PNG.
pub fn encode_png(raster: &RawGray) -> ToolResult<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder =
            png::Encoder::new(&mut out, raster.width as u32, raster.height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| ToolError::Data(format!("png encode failed: {e}")))?;
        writer
            .write_image_data(&raster.data)
            .map_err(|e| ToolError::Data(format!("png encode failed: {e}")))?;
    }
    Ok(out)
}

/// Parses raster bytes, detecting PGM or PNG from the leading magic.
pub fn parse_raster(bytes: &[u8]) -> ToolResult<RawGray> {
    if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
        return parse_pgm(bytes);
    }
    if bytes.starts_with(&PNG_SIGNATURE) {
        return parse_png(bytes);
    }
    Err(ToolError::Parse { offset: 0, detail: "unknown image format (want PGM or PNG)".into() })
}

/// Loads the raw 8-bit raster stored at `path`.
pub fn load_raw(path: &Path) -> ToolResult<RawGray> {
    let bytes = fs::read(path)?;
    parse_raster(&bytes).map_err(|e| annotate(e, path))
}

/// Loads an image and normalizes pixel values into [0,1].
pub fn load_image(path: &Path) -> ToolResult<Image2D> {
    load_raw(path)?.normalize()
}

/// Quantizes an image in [0,1] to 8 bits (values clamped).
pub fn quantize(img: &Image2D) -> RawGray {
    let data: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    RawGray { width: img.width(), height: img.height(), maxval: 255, data }
}

/// Writes a raw raster as PGM or PNG depending on the file extension
/// (anything other than `.png` gets PGM).
pub fn save_raster(raster: &RawGray, path: &Path) -> ToolResult<()> {
    let bytes = match path.extension().and_then(|e| e.to_str()) {
        Some("png") => encode_png(raster)?,
        _ => encode_pgm_p5(raster),
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes a [0,1] image as an 8-bit raster file.
pub fn save_image(img: &Image2D, path: &Path) -> ToolResult<()> {
    save_raster(&quantize(img), path)
}

fn annotate(err: ToolError, path: &Path) -> ToolError {
    match err {
        ToolError::Parse { offset, detail } => ToolError::Parse {
            offset,
            detail: format!("{}: {detail}", path.display()),
        },
        ToolError::Data(detail) => ToolError::Data(format!("{}: {detail}", path.display())),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p5_pixel_255_normalizes_to_one() {
        let bytes = b"P5\n2 1\n255\n\xff\x00";
        let raw = parse_pgm(bytes).unwrap();
        let img = raw.normalize().unwrap();
        assert_eq!(img.get(0, 0), 1.0);
        assert_eq!(img.get(0, 1), 0.0);
    }

    #[test]
    fn p2_respects_custom_maxval() {
        let bytes = b"P2\n# comment line\n2 2\n100\n50 100 0 25\n";
        let raw = parse_pgm(bytes).unwrap();
        assert_eq!(raw.maxval, 100);
        let img = raw.normalize().unwrap();
        assert_eq!(img.get(0, 0), 0.5);
        assert_eq!(img.get(0, 1), 1.0);
        assert_eq!(img.get(1, 1), 0.25);
    }

    #[test]
    fn truncated_p5_reports_the_computed_offset() {
        // Declares 10 pixels but carries 9 bytes of payload.
        let mut bytes = b"P5\n5 2\n255\n".to_vec();
        bytes.extend_from_slice(&[7u8; 9]);
        let err = parse_pgm(&bytes).unwrap_err();
        match err {
            ToolError::Parse { offset, detail } => {
                assert_eq!(offset, bytes.len());
                assert!(detail.contains("expected 10 bytes"), "{detail}");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn p2_value_above_maxval_is_rejected() {
        let bytes = b"P2\n2 1\n100\n50 101\n";
        let err = parse_pgm(bytes).unwrap_err();
        assert!(matches!(err, ToolError::Parse { .. }));
        assert!(err.to_string().contains("101"));
    }

    #[test]
    fn sixteen_bit_pgm_is_unsupported() {
        let bytes = b"P5\n1 1\n65535\n\x00\x00";
        let err = parse_pgm(bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported depth"));
    }

    #[test]
    fn pgm_roundtrip_preserves_bytes() {
        let raw = RawGray { width: 3, height: 2, maxval: 255, data: vec![0, 10, 255, 128, 4, 9] };
        let encoded = encode_pgm_p5(&raw);
        let back = parse_pgm(&encoded).unwrap();
        assert_eq!(raw, back);
    }

    #[test]
    fn png_roundtrip_preserves_bytes() {
        let raw = RawGray { width: 2, height: 2, maxval: 255, data: vec![1, 2, 3, 254] };
        let encoded = encode_png(&raw).unwrap();
        let back = parse_raster(&encoded).unwrap();
        assert_eq!(raw, back);
    }

    #[test]
    fn unknown_magic_is_a_parse_error_at_offset_zero() {
        let err = parse_raster(b"BM12345").unwrap_err();
        match err {
            ToolError::Parse { offset, .. } => assert_eq!(offset, 0),
            other => panic!("wrong error: {other}"),
        }
    }
}
