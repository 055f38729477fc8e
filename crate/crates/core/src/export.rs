//! CSV and canonical JSON writers for solutions and simulation estimates.
//!
//! Floats carry 12 significant digits. JSON objects have their keys in sorted
//! order and no insignificant whitespace, so equal inputs give byte-identical
//! files.

use std::fmt::Write as _;

use crate::matrix::DenseMatrix;
use crate::simulator::SimEstimate;
use crate::solver::SolutionSet;

/// Shortest rendering of `x` with at most 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return "null".to_owned();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn json_vector(out: &mut String, v: &[f64]) {
    out.push('[');
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str(&format_float(*x));
    }
    out.push(']');
}

fn json_matrix(out: &mut String, m: &DenseMatrix) {
    out.push('[');
    for r in 0..m.rows() {
        if r > 0 {
            out.push(',');
        }
        json_vector(out, m.row(r));
    }
    out.push(']');
}

/// `{"P": [[…]], "Q": [[…]], "psi": […]}` with `P[i][n]` for label `i` and
/// user `n`.
pub fn solution_json(solution: &SolutionSet) -> String {
    let mut out = String::from("{\"P\":");
    json_matrix(&mut out, &solution.p);
    out.push_str(",\"Q\":");
    json_matrix(&mut out, &solution.q);
    out.push_str(",\"psi\":");
    json_vector(&mut out, &solution.psi);
    out.push_str("}\n");
    out
}

/// Same layout as [`solution_json`] plus `"half_width"` for the Wall
/// estimates.
pub fn estimate_json(estimate: &SimEstimate) -> String {
    let mut out = String::from("{\"P\":");
    json_matrix(&mut out, &estimate.p_hat);
    out.push_str(",\"Q\":");
    json_matrix(&mut out, &estimate.q_hat);
    out.push_str(",\"half_width\":");
    json_matrix(&mut out, &estimate.half_width);
    out.push_str(",\"psi\":");
    json_vector(&mut out, &estimate.psi_hat);
    out.push_str("}\n");
    out
}

fn csv_table(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// One row per `(label, user)` pair: `label,user,p,q`.
pub fn solution_csv(names: &[String], solution: &SolutionSet) -> String {
    let n = solution.n_users();
    csv_table(
        &["label", "user", "p", "q"],
        (0..n).flat_map(|i| {
            (0..n).map(move |u| {
                vec![
                    names[i].clone(),
                    names[u].clone(),
                    format_float(solution.p[(i, u)]),
                    format_float(solution.q[(i, u)]),
                ]
            })
        }),
    )
}

/// One row per `(label, user)` pair: `label,user,q_hat,half_width`.
pub fn estimate_csv(names: &[String], estimate: &SimEstimate) -> String {
    let n = estimate.psi_hat.len();
    csv_table(
        &["label", "user", "q_hat", "half_width"],
        (0..n).flat_map(|i| {
            (0..n).map(move |u| {
                vec![
                    names[i].clone(),
                    names[u].clone(),
                    format_float(estimate.q_hat[(i, u)]),
                    format_float(estimate.half_width[(i, u)]),
                ]
            })
        }),
    )
}

/// Generic numeric table as CSV.
pub fn table_csv(columns: &[String], rows: &[Vec<f64>]) -> String {
    let header: Vec<&str> = columns.iter().map(String::as_str).collect();
    csv_table(&header, rows.iter().map(|r| r.iter().map(|&x| format_float(x)).collect()))
}

/// Reads the `psi` array out of a solution or estimate JSON document.
pub fn read_psi(json: &str) -> Result<Vec<f64>, String> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let arr = value
        .get("psi")
        .and_then(|v| v.as_array())
        .ok_or_else(|| "missing \"psi\" array".to_owned())?;
    arr.iter()
        .map(|v| v.as_f64().ok_or_else(|| format!("non-numeric psi entry {v}")))
        .collect()
}

/// Human-readable ranking, one `rank user psi` line per user.
pub fn ranking_text(names: &[String], ranking: &[(crate::graph::UserId, f64)]) -> String {
    let mut out = String::new();
    for (pos, (user, value)) in ranking.iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", pos + 1, names[user.index()], format_float(*value));
    }
    out
}
