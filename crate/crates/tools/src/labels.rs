//! Label rasters: 255 marks a positive pixel, 0 a negative one, 128 an
//! unlabeled one. Any other stored value is rejected with its position.

use std::path::Path;

use scsc_core::classifier::LabelField;

use crate::error::{ToolError, ToolResult};
use crate::raster::{load_raw, RawGray};

/// Decodes a raw raster into a label field.
pub fn decode_labels(raw: &RawGray) -> ToolResult<LabelField> {
    let mut labels = Vec::with_capacity(raw.data.len());
    for (i, &v) in raw.data.iter().enumerate() {
        let label = match v {
            255 => 1,
            0 => -1,
            128 => 0,
            other => {
                return Err(ToolError::Data(format!(
                    "invalid label value {other} at pixel ({}, {}): expected 0, 128, or 255",
                    i / raw.width,
                    i % raw.width
                )))
            }
        };
        labels.push(label);
    }
    Ok(LabelField::new(raw.height, raw.width, labels)?)
}

/// Loads a label image from disk.
pub fn load_labels(path: &Path) -> ToolResult<LabelField> {
    decode_labels(&load_raw(path)?)
}

/// Encodes a label field back into the 0/128/255 convention.
pub fn encode_labels(field: &LabelField) -> RawGray {
    let data: Vec<u8> = field
        .as_slice()
        .iter()
        .map(|&l| match l {
            1 => 255,
            -1 => 0,
            _ => 128,
        })
        .collect();
    RawGray { width: field.width(), height: field.height(), maxval: 255, data }
}
