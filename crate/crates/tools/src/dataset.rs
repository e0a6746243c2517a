//! Dataset assembly: `--images`/`--labels` arguments accept either a
//! directory (all raster files, sorted by name) or a comma-separated
//! file list. Image/label pairing is positional.

use std::path::{Path, PathBuf};

use scsc_core::classifier::LabelField;
use scsc_core::Image2D;

use crate::error::{ToolError, ToolResult};
use crate::labels::load_labels;
use crate::raster::load_image;

const RASTER_EXTENSIONS: [&str; 3] = ["pgm", "pnm", "png"];

/// Expands a directory or comma-separated list into ordered paths.
pub fn resolve_paths(spec: &str) -> ToolResult<Vec<PathBuf>> {
    let as_path = Path::new(spec);
    if as_path.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(as_path)?
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .map(|e| RASTER_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
                    .unwrap_or(false)
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(ToolError::Data(format!(
                "directory {spec} holds no .pgm/.pnm/.png files"
            )));
        }
        return Ok(paths);
    }
    let mut paths = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let path = PathBuf::from(part);
        if !path.is_file() {
            return Err(ToolError::Data(format!("no such file: {part}")));
        }
        paths.push(path);
    }
    if paths.is_empty() {
        return Err(ToolError::Data(format!("no input files in '{spec}'")));
    }
    Ok(paths)
}

pub fn load_images(spec: &str) -> ToolResult<(Vec<PathBuf>, Vec<Image2D>)> {
    let paths = resolve_paths(spec)?;
    let images = paths.iter().map(|p| load_image(p)).collect::<ToolResult<Vec<_>>>()?;
    Ok((paths, images))
}

/// Loads label fields positionally paired with `count` images.
pub fn load_label_fields(spec: &str, count: usize) -> ToolResult<Vec<LabelField>> {
    let paths = resolve_paths(spec)?;
    if paths.len() != count {
        return Err(ToolError::Data(format!(
            "{} label files for {count} images",
            paths.len()
        )));
    }
    paths.iter().map(|p| load_labels(p)).collect()
}
