//! CSV emission with RFC-4180 CRLF line endings and '.' decimals. Float
//! fields use the shortest roundtrip representation; infinite PSNR is
//! written as `inf`.

use std::fs;
use std::path::Path;

use scsc_core::trainer::IterationTrace;

use crate::error::ToolResult;

pub const TRACE_HEADER: &str = "iteration,total,recon,sparsity,classification,regularizer";
pub const SWEEP_HEADER: &str = "param_value,ap,psnr,wall_seconds";

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Objective-term history, one row per outer iteration (1-based).
pub fn trace_csv(trace: &IterationTrace) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push_str("\r\n");
    for (i, rec) in trace.iterations.iter().enumerate() {
        let t = &rec.after_classifier;
        out.push_str(&format!(
            "{},{},{},{},{},{}\r\n",
            i + 1,
            fmt(t.total),
            fmt(t.reconstruction),
            fmt(t.sparsity),
            fmt(t.classification),
            fmt(t.regularizer)
        ));
    }
    out.into_bytes()
}

/// One sweep result row.
pub struct SweepRow {
    pub param_value: String,
    pub ap: f64,
    pub psnr: f64,
    pub wall_seconds: f64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push_str("\r\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\r\n",
            row.param_value,
            fmt(row.ap),
            fmt(row.psnr),
            fmt(row.wall_seconds)
        ));
    }
    out.into_bytes()
}

pub fn write_bytes(bytes: &[u8], path: &Path) -> ToolResult<()> {
    fs::write(path, bytes)?;
    Ok(())
}
