//! CSV and JSON writers.
//!
//! Floats are written in Rust's shortest round-trip form (`{:?}`), so equal
//! values always produce equal bytes.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::calculus::ItoReport;
use crate::measures::MeasureFlow;
use crate::solver::TrajectoryRecord;

pub fn float(v: f64) -> String {
    format!("{v:?}")
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn numbered(prefix: &str, d: usize) -> impl Iterator<Item = String> + '_ {
    (1..=d).map(move |i| format!("{prefix}_{i}"))
}

/// One row per `(t, particle)`: `t, particle_id, x_1..x_d, k_1..k_d, k_variation`.
pub fn write_trajectory_csv<W: Write>(traj: &TrajectoryRecord, out: W) -> io::Result<()> {
    let d = traj.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "particle_id".to_string()];
    header.extend(numbered("x", d));
    header.extend(numbered("k", d));
    header.push("k_variation".into());
    w.write_record(&header).map_err(csv_error)?;
    let mut row = Vec::with_capacity(header.len());
    for (k, t) in traj.grid().iter().enumerate() {
        let (x, kk, var) = (traj.positions(k), traj.constraint(k), traj.variation(k));
        for i in 0..traj.particles() {
            row.clear();
            row.push(float(*t));
            row.push(i.to_string());
            row.extend(x[i * d..(i + 1) * d].iter().map(|v| float(*v)));
            row.extend(kk[i * d..(i + 1) * d].iter().map(|v| float(*v)));
            row.push(float(var[i]));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()
}

/// One row per `(t, particle)`: `t, particle_id, x_1..x_d`.
pub fn write_flow_csv<W: Write>(flow: &MeasureFlow, out: W) -> io::Result<()> {
    let d = flow.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "particle_id".to_string()];
    header.extend(numbered("x", d));
    w.write_record(&header).map_err(csv_error)?;
    for (t, mu) in flow.grid().iter().zip(flow.measures()) {
        for (i, p) in mu.iter().enumerate() {
            let mut row = vec![float(*t), i.to_string()];
            row.extend(p.iter().map(|v| float(*v)));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItoRow {
    pub report: ItoReport,
    pub h: f64,
    pub particles: usize,
    pub seed: u64,
}

/// Columns `term_1..term_7, lhs, residual, h, N, seed`.
pub fn write_ito_csv<W: Write>(rows: &[ItoRow], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = numbered("term", 7).collect();
    header.extend(["lhs", "residual", "h", "N", "seed"].map(String::from));
    w.write_record(&header).map_err(csv_error)?;
    for r in rows {
        let mut row: Vec<String> = r.report.terms.iter().map(|v| float(*v)).collect();
        row.push(float(r.report.lhs));
        row.push(float(r.report.residual));
        row.push(float(r.h));
        row.push(r.particles.to_string());
        row.push(r.seed.to_string());
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

/// Columns `t, m, bound`; an absent bound is left empty.
pub fn write_moments_csv<W: Write>(grid: &[f64], moments: &[f64], bound: Option<&[f64]>, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "m", "bound"]).map_err(csv_error)?;
    for (k, (t, m)) in grid.iter().zip(moments).enumerate() {
        let b = bound.map(|b| float(b[k])).unwrap_or_default();
        w.write_record([float(*t), float(*m), b]).map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(io::Error::other)?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CatalogOperator, OperatorKind};
    use crate::solver::{simulate, ConstantDrift, InitialCondition, SchemeConfig};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            assert_eq!(float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float(1.0), "1.0");
    }

    #[test]
    fn trajectory_layout() {
        let op = CatalogOperator::new(OperatorKind::NormalConeBox {
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
        })
        .unwrap();
        let config = SchemeConfig::new(0.5, 2, 1.0, 0, InitialCondition::Point { point: vec![0.25] });
        let traj = simulate(&op, &ConstantDrift::new(vec![-1.0]), &config).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,particle_id,x_1,k_1,k_variation");
        assert_eq!(lines.len(), 1 + 3 * 2);
        assert_eq!(lines[3], "0.5,0,0.0,-0.25,0.25");
    }
}
