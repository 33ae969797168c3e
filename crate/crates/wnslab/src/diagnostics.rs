//! Diagnostic time series as CSV rows.
//!
//! One row per measurement: `time,kind,order,gamma,value`. `kind` names the
//! quantity, `order` its integrability or smoothness index (the `p` of an
//! `L^p` norm, the `s` of an `H^s` norm, 0 where unused), and `gamma` the
//! weight exponent (0 for unweighted). Values use the shortest decimal form
//! that parses back to identical bits, so files from identical runs are
//! byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::{CoupledTrajectory, Trajectory};
use crate::weights::{weighted_hs_norm, weighted_lp_norm};

/// One measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagRow {
    pub time: f64,
    pub kind: String,
    pub order: f64,
    pub gamma: f64,
    pub value: f64,
}

impl DiagRow {
    pub fn new(time: f64, kind: &str, order: f64, gamma: f64, value: f64) -> Self {
        DiagRow {
            time,
            kind: kind.to_string(),
            order,
            gamma,
            value,
        }
    }
}

pub const CSV_HEADER: &str = "time,kind,order,gamma,value";

/// Renders rows as CSV text (header first).
pub fn render_csv(rows: &[DiagRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.time, r.kind, r.order, r.gamma, r.value).unwrap();
    }
    out
}

/// Writes rows as a CSV file.
pub fn write_csv(path: impl AsRef<Path>, rows: &[DiagRow]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_csv(rows))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Reads a CSV file written by [`write_csv`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<DiagRow>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(shown.clone(), e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != CSV_HEADER {
                return Err(Error::Snapshot {
                    path: shown,
                    msg: format!("bad csv header {line:?}"),
                });
            }
            continue;
        }
        let fail = |msg: String| Error::Snapshot {
            path: shown.clone(),
            msg: format!("line {}: {msg}", i + 1),
        };
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(fail(format!("expected 5 fields, got {}", parts.len())));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| fail(format!("bad number {s:?}")))
        };
        rows.push(DiagRow {
            time: num(parts[0])?,
            kind: parts[1].to_string(),
            order: num(parts[2])?,
            gamma: num(parts[3])?,
            value: num(parts[4])?,
        });
    }
    Ok(rows)
}

/// Norm rows for every stored state of a plain solve, plus per-step
/// amplitudes and the integration-residual track when present.
///
/// `lp` lists `(p, gamma)` pairs for weighted `L^p` norms, `hs` lists
/// `(s, gamma)` pairs for weighted `H^s` norms.
pub fn trajectory_rows(
    traj: &Trajectory,
    lp: &[(f64, f64)],
    hs: &[(f64, f64)],
) -> Result<Vec<DiagRow>> {
    let mut rows = Vec::new();
    for (t, u) in traj.times.iter().zip(&traj.states) {
        for &(p, gamma) in lp {
            let n = weighted_lp_norm(u, p, gamma)?;
            rows.push(DiagRow::new(*t, "lp", p, gamma, n.value));
        }
        for &(s, gamma) in hs {
            let n = weighted_hs_norm(u, s, gamma)?;
            rows.push(DiagRow::new(*t, "hs", s, gamma, n.value));
        }
    }
    for (t, a) in traj.amp_times.iter().zip(&traj.amplitudes) {
        rows.push(DiagRow::new(*t, "amplitude", 0.0, 0.0, *a));
    }
    if let Some(track) = &traj.residual {
        for ((t, r), s) in track
            .times
            .iter()
            .zip(&track.residual_norm)
            .zip(&track.state_norm)
        {
            rows.push(DiagRow::new(*t, "residual", 0.0, 0.0, *r));
            rows.push(DiagRow::new(*t, "state_norm", 0.0, 0.0, *s));
        }
    }
    Ok(rows)
}

/// Rows for the per-step norm history of a coupled tail/remainder solve:
/// tail norms (`tail_lr`, `tail_grad_lr`, `tail_sup` with `order = r`) and
/// the weighted remainder energy norm (`remainder_l2`), plus the remainder
/// residual track when present.
pub fn coupled_rows(traj: &CoupledTrajectory, r: f64) -> Vec<DiagRow> {
    let mut rows = Vec::new();
    let h = &traj.history;
    for (i, t) in h.times.iter().enumerate() {
        rows.push(DiagRow::new(*t, "tail_lr", r, 0.0, h.b_lr[i]));
        rows.push(DiagRow::new(*t, "tail_grad_lr", r, 0.0, h.b_grad_lr[i]));
        rows.push(DiagRow::new(*t, "tail_sup", f64::INFINITY, 0.0, h.b_sup[i]));
        rows.push(DiagRow::new(*t, "remainder_l2", 2.0, 2.0, h.v_l2[i]));
    }
    if let Some(track) = &traj.v_residual {
        for ((t, rr), s) in track
            .times
            .iter()
            .zip(&track.residual_norm)
            .zip(&track.state_norm)
        {
            rows.push(DiagRow::new(*t, "residual", 0.0, 0.0, *rr));
            rows.push(DiagRow::new(*t, "state_norm", 0.0, 0.0, *s));
        }
    }
    rows
}
