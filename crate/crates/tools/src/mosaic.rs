//! Filter-bank visualization: filters tiled into a near-square grid,
//! each cell independently min-max normalized, mid-gray separator lines.

use std::path::Path;

use scsc_core::FilterBank;

use crate::error::ToolResult;
use crate::raster::{save_raster, RawGray};

const SEPARATOR: u8 = 128;
const BLANK: u8 = 0;

/// Renders the bank as an 8-bit raster: `ceil(sqrt(K))` columns, each
/// cell `side * cell_scale` pixels, 1-pixel separators and border at 128.
/// Constant filters map to uniform mid-gray; unused cells stay black.
pub fn filter_mosaic(bank: &FilterBank, cell_scale: usize) -> RawGray {
    let scale = cell_scale.max(1);
    let k = bank.count();
    let side = bank.side();
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let cell = side * scale;
    let width = cols * cell + cols + 1;
    let height = rows * cell + rows + 1;
    let mut data = vec![SEPARATOR; width * height];

    for slot in 0..rows * cols {
        let (gr, gc) = (slot / cols, slot % cols);
        let top = gr * (cell + 1) + 1;
        let left = gc * (cell + 1) + 1;
        if slot >= k {
            for r in 0..cell {
                for c in 0..cell {
                    data[(top + r) * width + left + c] = BLANK;
                }
            }
            continue;
        }
        let filter = bank.filter(slot);
        let min = filter.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = filter.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for r in 0..cell {
            for c in 0..cell {
                let v = filter[(r / scale) * side + c / scale];
                let shade = if max > min {
                    ((v - min) / (max - min) * 255.0).round() as u8
                } else {
                    SEPARATOR
                };
                data[(top + r) * width + left + c] = shade;
            }
        }
    }
    RawGray { width, height, maxval: 255, data }
}

/// Writes the mosaic as PGM or PNG depending on the extension.
pub fn export_filter_mosaic(bank: &FilterBank, path: &Path, cell_scale: usize) -> ToolResult<()> {
    save_raster(&filter_mosaic(bank, cell_scale), path)
}
