//! Result emission: deterministic CSV rendering, run manifests for
//! resumability, and an optional plot script.

use std::fs;
use std::path::Path;

use cst_core::{CoreError, Result};

use crate::sweep::{SweepAxis, SweepRow};

pub const CSV_HEADER: &str = "param,fidelity,trace_err,leakage,f_pop_max,wall_s,status";

/// Stable 64-bit FNV-1a fingerprint (stdlib hashers are not guaranteed
/// stable across releases, and the manifest must be).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn format_row(row: &SweepRow) -> String {
    format!(
        "{param:.6},{fid:.9},{te:.3e},{lk:.3e},{fp:.3e},{ws:.3},{status}",
        param = row.param,
        fid = row.fidelity,
        te = row.trace_err,
        lk = row.leakage,
        fp = row.f_pop_max,
        ws = row.wall_s,
        status = row.status,
    )
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format_row(row));
        out.push('\n');
    }
    out
}

fn io_err(path: &Path, source: std::io::Error) -> CoreError {
    CoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(path, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_text(path, &render_csv(rows))
}

/// Parse a previously emitted CSV back into rows (used for resuming).
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        _ => {
            return Err(CoreError::Parse {
                line: 1,
                message: "missing or unexpected CSV header".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CoreError::Parse {
                line: i + 2,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            fields[k].parse::<f64>().map_err(|e| CoreError::Parse {
                line: i + 2,
                message: format!("field {}: {e}", k + 1),
            })
        };
        rows.push(SweepRow {
            param: num(0)?,
            fidelity: num(1)?,
            trace_err: num(2)?,
            leakage: num(3)?,
            f_pop_max: num(4)?,
            wall_s: num(5)?,
            status: fields[6].to_string(),
        });
    }
    Ok(rows)
}

/// Self-contained plot script reproducing the sweep figure layout.
pub fn plot_script(axis: SweepAxis, csv_name: &str) -> String {
    let (xlabel, title) = match axis {
        SweepAxis::G2 => ("g2 / 2pi (MHz)", "Transfer fidelity versus coupling strength"),
        SweepAxis::Kappa => ("1/kappa (us)", "Transfer fidelity versus cavity lifetime"),
    };
    format!(
        "#!/usr/bin/env python3\n\
         \"\"\"Plot a fidelity sweep CSV produced by the cst sweep command.\"\"\"\n\
         import csv\n\
         import sys\n\
         \n\
         import matplotlib.pyplot as plt\n\
         \n\
         path = sys.argv[1] if len(sys.argv) > 1 else {csv_name:?}\n\
         xs, ys = [], []\n\
         with open(path) as fh:\n\
         \x20\x20\x20\x20for row in csv.DictReader(fh):\n\
         \x20\x20\x20\x20\x20\x20\x20\x20if row[\"status\"] in (\"ok\", \"flagged\"):\n\
         \x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20xs.append(float(row[\"param\"]))\n\
         \x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20\x20ys.append(float(row[\"fidelity\"]))\n\
         plt.plot(xs, ys, \"o-\")\n\
         plt.xlabel({xlabel:?})\n\
         plt.ylabel(\"Fidelity\")\n\
         plt.title({title:?})\n\
         plt.grid(True, alpha=0.3)\n\
         plt.tight_layout()\n\
         plt.savefig(path.rsplit(\".\", 1)[0] + \".png\", dpi=160)\n\
         print(\"wrote\", path.rsplit(\".\", 1)[0] + \".png\")\n"
    )
}
