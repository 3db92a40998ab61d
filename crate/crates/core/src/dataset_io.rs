//! Plain-text dataset serialization.
//!
//! One record per line: the label (`-1` or `1`), the qubit count, then the
//! `2^n` amplitudes as `re im` pairs. Reals are written with 17 significant
//! digits, which round-trips every `f64` bit-exactly. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::statevec::{StateVector, MAX_QUBITS};
use crate::training::{QuantumDataset, Sample};

/// Formats a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a dataset, one item per line, after a comment header.
pub fn write_dataset(dataset: &QuantumDataset) -> String {
    let mut out = String::new();
    out.push_str("# label n_qubits re_0 im_0 re_1 im_1 ...\n");
    for sample in dataset.items() {
        write!(out, "{} {}", sample.label.as_i8(), sample.state.n_qubits()).unwrap();
        for a in sample.state.amplitudes() {
            write!(out, " {} {}", format_real(a.re), format_real(a.im)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Parses the format produced by [`write_dataset`].
pub fn read_dataset(text: &str) -> Result<QuantumDataset> {
    let mut items = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        items.push(parse_record(line, idx + 1)?);
    }
    if items.is_empty() {
        return Err(Error::EmptyInput("dataset file has no records".into()));
    }
    QuantumDataset::new(items).map_err(|e| match e {
        Error::Shape { expected, actual } => Error::Parse {
            line: 0,
            message: format!("mixed register sizes: {expected} and {actual} qubits"),
        },
        other => other,
    })
}

fn parse_record(line: &str, line_no: usize) -> Result<Sample> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let mut fields = line.split_whitespace();
    let label: i64 = fields
        .next()
        .ok_or_else(|| parse_err("missing label".into()))?
        .parse()
        .map_err(|e| parse_err(format!("bad label: {e}")))?;
    let label = Label::from_i64(label).map_err(|e| parse_err(e.to_string()))?;
    let n_qubits: usize = fields
        .next()
        .ok_or_else(|| parse_err("missing qubit count".into()))?
        .parse()
        .map_err(|e| parse_err(format!("bad qubit count: {e}")))?;
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(parse_err(format!(
            "qubit count {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    let reals = fields
        .map(|f| {
            f.parse::<f64>()
                .map_err(|e| parse_err(format!("bad amplitude `{f}`: {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let dim = 1usize << n_qubits;
    if reals.len() != 2 * dim {
        return Err(parse_err(format!(
            "expected {} reals for {n_qubits} qubits, found {}",
            2 * dim,
            reals.len()
        )));
    }
    let amps = reals
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    let state = StateVector::from_amplitudes(amps).map_err(|e| parse_err(e.to_string()))?;
    Ok(Sample { state, label })
}
