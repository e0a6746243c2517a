//! Binary persistence: the `SCSC` model container (filters, classifier,
//! config snapshot) and the `SCSM` sparse-map stack container. All
//! multi-byte fields are little-endian; floats roundtrip bitwise.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use scsc_core::classifier::ClassifierParams;
use scsc_core::image::{FilterBank, SparseMapStack};
use scsc_core::trainer::{SolverConfig, TrainedModel};

use crate::error::{ToolError, ToolResult};

const MODEL_MAGIC: &[u8; 4] = b"SCSC";
const MAPS_MAGIC: &[u8; 4] = b"SCSM";
const MODEL_VERSION: u16 = 1;
const MAPS_VERSION: u16 = 1;

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    beta: f64,
    gamma: f64,
    alpha: f64,
    rho: f64,
    filter_count: usize,
    filter_side: usize,
    outer_iters: usize,
    inner_iters: usize,
    tol: f64,
    seed: u64,
    sample_cap: usize,
    exact_fourier_solve: bool,
    newton_tol: f64,
    newton_max_iter: usize,
}

impl From<&SolverConfig> for ConfigRepr {
    fn from(c: &SolverConfig) -> Self {
        Self {
            beta: c.beta,
            gamma: c.gamma,
            alpha: c.alpha,
            rho: c.rho,
            filter_count: c.filter_count,
            filter_side: c.filter_side,
            outer_iters: c.outer_iters,
            inner_iters: c.inner_iters,
            tol: c.tol,
            seed: c.seed,
            sample_cap: c.sample_cap,
            exact_fourier_solve: c.exact_fourier_solve,
            newton_tol: c.newton_tol,
            newton_max_iter: c.newton_max_iter,
        }
    }
}

impl From<ConfigRepr> for SolverConfig {
    fn from(r: ConfigRepr) -> Self {
        Self {
            beta: r.beta,
            gamma: r.gamma,
            alpha: r.alpha,
            rho: r.rho,
            filter_count: r.filter_count,
            filter_side: r.filter_side,
            outer_iters: r.outer_iters,
            inner_iters: r.inner_iters,
            tol: r.tol,
            seed: r.seed,
            sample_cap: r.sample_cap,
            exact_fourier_solve: r.exact_fourier_solve,
            newton_tol: r.newton_tol,
            newton_max_iter: r.newton_max_iter,
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> ToolResult<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(ToolError::Data(format!(
                "size mismatch: file ends inside {what} (need {n} bytes at offset {})",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> ToolResult<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> ToolResult<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, count: usize, what: &str) -> ToolResult<Vec<f64>> {
        let raw = self.take(count * 8, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finish(&self, what: &str) -> ToolResult<()> {
        if self.pos != self.bytes.len() {
            return Err(ToolError::Data(format!(
                "size mismatch: {} trailing bytes after {what}",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a trained model.
pub fn encode_model(model: &TrainedModel) -> ToolResult<Vec<u8>> {
    let k = model.bank.count();
    let m = model.bank.side();
    if k > u16::MAX as usize || m > u16::MAX as usize {
        return Err(ToolError::Data("filter count or side exceeds the format limit".into()));
    }
    if model.theta.weights.len() != k {
        return Err(ToolError::Data(format!(
            "classifier has {} weights for {k} filters",
            model.theta.weights.len()
        )));
    }
    let config = serde_json::to_vec(&ConfigRepr::from(&model.config))
        .map_err(|e| ToolError::Data(format!("config serialization failed: {e}")))?;
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(k as u16).to_le_bytes());
    out.extend_from_slice(&(m as u16).to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    push_f64s(&mut out, model.bank.as_slice());
    push_f64s(&mut out, &model.theta.weights);
    push_f64s(&mut out, &[model.theta.bias]);
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    Ok(out)
}

/// Deserializes a trained model, validating magic, version, and sizes.
pub fn decode_model(bytes: &[u8]) -> ToolResult<TrainedModel> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MODEL_MAGIC {
        return Err(ToolError::Data(format!(
            "bad magic {:02x?}: not a model file",
            &magic
        )));
    }
    let version = r.u16("version")?;
    if version != MODEL_VERSION {
        return Err(ToolError::Data(format!(
            "unsupported model version {version} (expected {MODEL_VERSION})"
        )));
    }
    let k = r.u16("filter count")? as usize;
    let m = r.u16("filter side")? as usize;
    let _flags = r.u16("flags")?;
    let filters = r.f64_vec(k * m * m, "filter payload")?;
    let weights = r.f64_vec(k, "classifier weights")?;
    let bias = r.f64_vec(1, "classifier bias")?[0];
    let config_len = r.u32("config length")? as usize;
    let config_bytes = r.take(config_len, "config snapshot")?;
    r.finish("config snapshot")?;
    let repr: ConfigRepr = serde_json::from_slice(config_bytes)
        .map_err(|e| ToolError::Data(format!("config snapshot is not valid JSON: {e}")))?;
    let config: SolverConfig = repr.into();
    if config.filter_count != k || config.filter_side != m {
        return Err(ToolError::Data(format!(
            "header says {k} filters of side {m} but the config snapshot says {} of side {}",
            config.filter_count, config.filter_side
        )));
    }
    let bank = FilterBank::new(k, m, filters)?;
    let theta = ClassifierParams::new(weights, bias)?;
    Ok(TrainedModel { bank, theta, config })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> ToolResult<()> {
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> ToolResult<TrainedModel> {
    decode_model(&fs::read(path)?)
}

/// Serializes a sparse map stack.
pub fn encode_maps(maps: &SparseMapStack) -> ToolResult<Vec<u8>> {
    if maps.count() > u16::MAX as usize {
        return Err(ToolError::Data("map count exceeds the format limit".into()));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAPS_MAGIC);
    out.extend_from_slice(&MAPS_VERSION.to_le_bytes());
    out.extend_from_slice(&(maps.count() as u16).to_le_bytes());
    out.extend_from_slice(&(maps.height() as u32).to_le_bytes());
    out.extend_from_slice(&(maps.width() as u32).to_le_bytes());
    push_f64s(&mut out, maps.as_slice());
    Ok(out)
}

/// Deserializes a sparse map stack.
pub fn decode_maps(bytes: &[u8]) -> ToolResult<SparseMapStack> {
    let mut r = Reader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAPS_MAGIC {
        return Err(ToolError::Data(format!("bad magic {:02x?}: not a maps file", &magic)));
    }
    let version = r.u16("version")?;
    if version != MAPS_VERSION {
        return Err(ToolError::Data(format!(
            "unsupported maps version {version} (expected {MAPS_VERSION})"
        )));
    }
    let k = r.u16("map count")? as usize;
    let height = r.u32("height")? as usize;
    let width = r.u32("width")? as usize;
    let data = r.f64_vec(k * height * width, "map payload")?;
    r.finish("map payload")?;
    Ok(SparseMapStack::new(k, height, width, data)?)
}

pub fn save_maps(maps: &SparseMapStack, path: &Path) -> ToolResult<()> {
    fs::write(path, encode_maps(maps)?)?;
    Ok(())
}

pub fn load_maps(path: &Path) -> ToolResult<SparseMapStack> {
    decode_maps(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_model() -> TrainedModel {
        let bank = FilterBank::new(
            2,
            3,
            vec![
                0.1, -0.2, 0.3, 0.0, 0.25, -0.5, 0.125, 0.0, 0.4, //
                0.0, 0.5, 0.5, -0.5, 0.0, 0.25, 0.1, 0.2, -0.3,
            ],
        )
        .unwrap();
        let theta = ClassifierParams::new(vec![0.75, -1.5], 0.0625).unwrap();
        let config = SolverConfig {
            beta: 0.5,
            gamma: 5.0,
            filter_count: 2,
            filter_side: 3,
            tol: 1e-4,
            ..Default::default()
        };
        TrainedModel { bank, theta, config }
    }

    #[test]
    fn model_roundtrips_bitwise() {
        let model = sample_model();
        let bytes = encode_model(&model).unwrap();
        let back = decode_model(&bytes).unwrap();
        assert_eq!(model.bank, back.bank);
        assert_eq!(model.theta, back.theta);
        assert_eq!(model.config, back.config);
        // Bit-exact check on the float payload.
        for (a, b) in model.bank.as_slice().iter().zip(back.bank.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let mut bytes = encode_model(&sample_model()).unwrap();
        bytes[0] = b'X';
        let err = decode_model(&bytes).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = encode_model(&sample_model()).unwrap();
        bytes[4] = 9;
        let err = decode_model(&bytes).unwrap_err();
        assert!(err.to_string().contains("unsupported model version"));
    }

    #[test]
    fn header_payload_mismatch_is_a_size_error() {
        let mut bytes = encode_model(&sample_model()).unwrap();
        // Claim 3 filters; the payload length no longer matches.
        bytes[6] = 3;
        let err = decode_model(&bytes).unwrap_err();
        assert!(err.to_string().contains("size mismatch"), "{err}");
    }

    #[test]
    fn truncated_and_padded_files_are_rejected() {
        let bytes = encode_model(&sample_model()).unwrap();
        let err = decode_model(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(err.to_string().contains("size mismatch"), "{err}");
        let mut padded = bytes.clone();
        padded.push(0);
        let err = decode_model(&padded).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn maps_roundtrip_bitwise() {
        let maps = SparseMapStack::new(
            2,
            3,
            4,
            (0..24).map(|i| (i as f64).sqrt() * 0.317).collect(),
        )
        .unwrap();
        let bytes = encode_maps(&maps).unwrap();
        let back = decode_maps(&bytes).unwrap();
        assert_eq!(maps, back);
        for (a, b) in maps.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn maps_magic_mismatch_is_rejected() {
        let model_bytes = encode_model(&sample_model()).unwrap();
        let err = decode_maps(&model_bytes).unwrap_err();
        assert!(err.to_string().contains("not a maps file"));
    }
}
