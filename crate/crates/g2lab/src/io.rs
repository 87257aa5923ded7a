//! CSV and JSON artifacts.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::Matrix3;
use serde::Serialize;

use g2lab_core::flow::FlowTrace;
use g2lab_core::lifting::LiftResult;
use g2lab_core::reduced::ReducedPath;

use crate::RunError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

fn matrix_header(name: &str) -> impl Iterator<Item = String> + '_ {
    (1..=3).flat_map(move |i| (1..=3).map(move |j| format!("{name}{i}{j}")))
}

fn push_matrix(row: &mut Vec<String>, m: &Matrix3<f64>) {
    for i in 0..3 {
        for j in 0..3 {
            row.push(m[(i, j)].to_string());
        }
    }
}

fn write_rows(path: &Path, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn trace_header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend(matrix_header("E"));
    h.push("f".into());
    h.extend(matrix_header("K"));
    h.extend(["detE", "trK", "r_closed", "r_evolution"].map(String::from));
    h
}

pub fn write_trace(path: &Path, trace: &FlowTrace) -> Result<(), RunError> {
    let rows = trace
        .records()
        .iter()
        .map(|r| {
            let mut row = vec![r.t.to_string()];
            push_matrix(&mut row, &r.e);
            row.push(r.f.to_string());
            push_matrix(&mut row, &r.k);
            row.push(r.e.determinant().to_string());
            row.push(r.k.trace().to_string());
            row.push(r.r_closed.to_string());
            row.push(r.r_evolution.to_string());
            row
        })
        .collect();
    write_rows(path, trace_header(), rows)
}

pub fn reduced_header() -> Vec<String> {
    let mut h = vec!["t".to_string(), "f".to_string()];
    h.extend(matrix_header("G"));
    h
}

pub fn write_reduced(path: &Path, reduced: &ReducedPath) -> Result<(), RunError> {
    let rows = reduced
        .times()
        .iter()
        .zip(reduced.points())
        .map(|(t, p)| {
            let mut row = vec![t.to_string(), p.f.to_string()];
            push_matrix(&mut row, &p.gamma);
            row
        })
        .collect();
    write_rows(path, reduced_header(), rows)
}

/// Reads `t,f,G11..G33` (Γ row-major).
pub fn read_reduced(path: &Path) -> Result<ReducedPath, RunError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| io_err(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header != reduced_header() {
        return Err(RunError::Schema(format!(
            "{}: expected header {}",
            path.display(),
            reduced_header().join(",")
        )));
    }
    let mut samples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| RunError::Schema(format!("{} row {}: {e}", path.display(), line + 1)))?;
        let g = Matrix3::from_row_slice(&vals[2..11]);
        samples.push((vals[0], vals[1], g));
    }
    ReducedPath::new(samples).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
}

pub fn write_lift(path: &Path, lift: &LiftResult) -> Result<(), RunError> {
    let mut header = vec!["t".to_string(), "f".to_string()];
    header.extend(matrix_header("E"));
    header.extend(matrix_header("S"));
    header.extend(["tracking", "one_one", "r_closed", "r_evolution"].map(String::from));
    let rows = (0..lift.times.len())
        .map(|i| {
            let mut row = vec![lift.times[i].to_string(), lift.f[i].to_string()];
            push_matrix(&mut row, &lift.frames[i]);
            push_matrix(&mut row, &lift.velocities[i]);
            row.push(lift.tracking[i].to_string());
            match lift.witness.get(i) {
                Some(w) => {
                    row.push(w.one_one_defect.to_string());
                    row.push(w.r_closed.to_string());
                    row.push(w.r_evolution.to_string());
                }
                None => row.extend(["", "", ""].map(String::from)),
            }
            row
        })
        .collect();
    write_rows(path, header, rows)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| io_err(path, e))?;
    f.write_all(b"\n").map_err(|e| io_err(path, e))
}

pub fn matrix_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}
