//! CSV series extracted from result envelopes.

use std::fmt::Write as _;

use choquard_core::{Error, Result};
use serde_json::Value;

use crate::ResultEnvelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// `theta,value` for one solution of a `solve` result.
    Profile,
    /// `index,energy,h1_norm` over the solutions of a `solve` result.
    EnergyLadder,
    /// `i,j,theta_i,theta_j,k` from a `kernel` result.
    KernelHeatmap,
}

fn missing(what: &str) -> Error {
    Error::InvalidParams(format!("result has no {what}"))
}

fn floats(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| missing(what))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| missing(what)))
        .collect()
}

/// CSV text with a header row. `index` selects the solution for profiles.
pub fn emit_plot_data(envelope: &ResultEnvelope, kind: PlotKind, index: usize) -> Result<String> {
    let payload = &envelope.payload;
    let nodes = floats(&payload["grid"]["nodes"], "grid nodes")?;
    let mut out = String::new();
    match kind {
        PlotKind::Profile => {
            let sol = payload["solutions"].get(index).ok_or_else(|| missing(&format!("solution {index}")))?;
            let values = floats(&sol["values"], "solution values")?;
            out.push_str("theta,value\n");
            for (t, v) in nodes.iter().zip(&values) {
                let _ = writeln!(out, "{t:.17e},{v:.17e}");
            }
        }
        PlotKind::EnergyLadder => {
            let sols = payload["solutions"].as_array().ok_or_else(|| missing("solutions"))?;
            out.push_str("index,energy,h1_norm\n");
            for (i, s) in sols.iter().enumerate() {
                let e = s["energy"]["total"].as_f64().ok_or_else(|| missing("energy"))?;
                let h = s["h1_norm"].as_f64().ok_or_else(|| missing("h1_norm"))?;
                let _ = writeln!(out, "{i},{e:.17e},{h:.17e}");
            }
        }
        PlotKind::KernelHeatmap => {
            let entries = floats(&payload["entries"], "kernel entries")?;
            let size = nodes.len();
            if entries.len() != size * size {
                return Err(missing("kernel entries matching the grid"));
            }
            out.push_str("i,j,theta_i,theta_j,k\n");
            for i in 0..size {
                for j in 0..size {
                    let _ = writeln!(out, "{i},{j},{:.17e},{:.17e},{:.17e}", nodes[i], nodes[j], entries[i * size + j]);
                }
            }
        }
    }
    Ok(out)
}
