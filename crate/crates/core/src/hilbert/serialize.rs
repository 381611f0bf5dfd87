//! Binary-free text serialization for debugging: a subsystem header line
//! (`label:dim` pairs) followed by `row,col,re,im` quadruples (states use
//! col = 0).

use std::sync::Arc;

use ndarray as nd;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::hilbert::operator::Operator;
use crate::hilbert::space::{space_header, HilbertSpace};
use crate::hilbert::state::StateVector;
use crate::sparse::CsrMatrix;

pub fn dump_operator(op: &Operator) -> String {
    let mut out = String::new();
    out.push_str(&space_header(op.space()));
    out.push('\n');
    for (r, c, v) in op.matrix().iter_triplets() {
        out.push_str(&format!("{r},{c},{:.17e},{:.17e}\n", v.re, v.im));
    }
    out
}

pub fn dump_state(psi: &StateVector) -> String {
    let mut out = String::new();
    out.push_str(&space_header(psi.space()));
    out.push('\n');
    for (i, v) in psi.amplitudes().iter().enumerate() {
        if *v != C64::new(0.0, 0.0) {
            out.push_str(&format!("{i},0,{:.17e},{:.17e}\n", v.re, v.im));
        }
    }
    out
}

fn parse_header(line: &str, lineno: usize) -> Result<Arc<HilbertSpace>> {
    let mut subs: Vec<(String, usize)> = Vec::new();
    for tok in line.split_whitespace() {
        let (label, dim) = tok.rsplit_once(':').ok_or(CoreError::Parse {
            line: lineno,
            message: format!("expected label:dim, got `{tok}`"),
        })?;
        let dim: usize = dim.parse().map_err(|_| CoreError::Parse {
            line: lineno,
            message: format!("bad dimension in `{tok}`"),
        })?;
        subs.push((label.to_string(), dim));
    }
    let refs: Vec<(&str, usize)> = subs.iter().map(|(l, d)| (l.as_str(), *d)).collect();
    HilbertSpace::new(&refs)
}

fn parse_quadruple(line: &str, lineno: usize) -> Result<(usize, usize, C64)> {
    let parts: Vec<&str> = line.split(',').collect();
    if parts.len() != 4 {
        return Err(CoreError::Parse {
            line: lineno,
            message: "expected row,col,re,im".into(),
        });
    }
    let bad = |what: &str| CoreError::Parse {
        line: lineno,
        message: format!("bad {what}"),
    };
    let r: usize = parts[0].trim().parse().map_err(|_| bad("row"))?;
    let c: usize = parts[1].trim().parse().map_err(|_| bad("col"))?;
    let re: f64 = parts[2].trim().parse().map_err(|_| bad("re"))?;
    let im: f64 = parts[3].trim().parse().map_err(|_| bad("im"))?;
    Ok((r, c, C64::new(re, im)))
}

pub fn load_operator(text: &str) -> Result<Operator> {
    let mut lines = text.lines().enumerate();
    let (n0, header) = lines.next().ok_or(CoreError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let space = parse_header(header, n0 + 1)?;
    let d = space.total_dim();
    let mut trips = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (r, c, v) = parse_quadruple(line, n + 1)?;
        if r >= d || c >= d {
            return Err(CoreError::Parse {
                line: n + 1,
                message: format!("index ({r},{c}) out of range for dimension {d}"),
            });
        }
        trips.push((r, c, v));
    }
    Operator::from_csr(space, CsrMatrix::from_triplets(d, d, &trips))
}

pub fn load_state(text: &str) -> Result<StateVector> {
    let mut lines = text.lines().enumerate();
    let (n0, header) = lines.next().ok_or(CoreError::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let space = parse_header(header, n0 + 1)?;
    let d = space.total_dim();
    let mut amps = nd::Array1::zeros(d);
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (r, _c, v) = parse_quadruple(line, n + 1)?;
        if r >= d {
            return Err(CoreError::Parse {
                line: n + 1,
                message: format!("index {r} out of range for dimension {d}"),
            });
        }
        amps[r] = v;
    }
    StateVector::from_amplitudes(space, amps)
}
