//! Text checkpoint: a `qnet-v1` line, the layer widths, then for each layer
//! its weight rows followed by its bias row. Values carry 17 significant
//! digits so a save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{IsacError, Result};
use crate::qnet::{Layer, QNet};

pub const CHECKPOINT_MAGIC: &str = "qnet-v1";

fn write_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

pub fn checkpoint_text(net: &QNet) -> String {
    let mut out = String::new();
    out.push_str(CHECKPOINT_MAGIC);
    out.push('\n');
    let dims: Vec<String> = net.dims().iter().map(|d| d.to_string()).collect();
    out.push_str(&dims.join(" "));
    out.push('\n');
    for layer in net.layers() {
        for row in layer.weights.chunks_exact(layer.inputs) {
            write_row(&mut out, row);
        }
        write_row(&mut out, &layer.biases);
    }
    out
}

pub fn save_checkpoint(net: &QNet, path: &Path) -> Result<()> {
    fs::write(path, checkpoint_text(net)).map_err(|e| IsacError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<QNet> {
    let text = fs::read_to_string(path).map_err(|e| IsacError::io(path, e))?;
    parse_checkpoint(&text, &path.display().to_string())
}

pub fn parse_checkpoint(text: &str, origin: &str) -> Result<QNet> {
    let err = |line: usize, msg: String| IsacError::Parse {
        path: origin.to_string(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == CHECKPOINT_MAGIC => {}
        _ => return Err(err(1, format!("expected `{CHECKPOINT_MAGIC}` header"))),
    }
    let (ln, dims_line) = lines.next().ok_or_else(|| err(2, "missing layer widths".into()))?;
    let dims: Vec<usize> = dims_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| err(ln, format!("bad width `{t}`: {e}"))))
        .collect::<Result<_>>()?;
    if dims.len() < 2 || dims.contains(&0) {
        return Err(err(ln, "need at least two positive layer widths".into()));
    }
    let mut row = |expected: usize| -> Result<Vec<f64>> {
        let (ln, l) = lines.next().ok_or_else(|| err(0, "unexpected end of file".into()))?;
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|e| err(ln, format!("bad number `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != expected {
            return Err(err(ln, format!("expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    };
    let mut layers = Vec::new();
    for w in dims.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            weights.extend(row(inputs)?);
        }
        let biases = row(outputs)?;
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            biases,
        });
    }
    QNet::from_layers(layers)
}
