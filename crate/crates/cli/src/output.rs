use std::fs;
use std::io;
use std::path::Path;

use nfield_core::field::SpatialGrid;
use nfield_core::lab::DependenceReport;
use nfield_core::volterra::{OutcomeKind, SolutionOutcome, StallReason, Trajectory};
use toml::{Table, Value};

use crate::config::SUMMARY_KEY;

/// `v` with `precision` significant digits in scientific notation.
pub fn format_number(v: f64, precision: usize) -> String {
    if v.is_finite() {
        format!("{:.*e}", precision.saturating_sub(1), v)
    } else {
        v.to_string()
    }
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// `t,x1..xd,population,u`, time outer, grid point inner, population innermost.
pub fn write_trajectory(
    path: &Path,
    traj: &Trajectory,
    grid: Option<&SpatialGrid>,
    populations: usize,
    precision: usize,
) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dims = grid.map_or(0, SpatialGrid::dimension);
    let mut header = vec!["t".to_string()];
    header.extend((1..=dims).map(|d| format!("x{d}")));
    header.push("population".into());
    header.push("u".into());
    w.write_record(&header).map_err(csv_error)?;
    let points = grid.map_or(1, SpatialGrid::len);
    let mut row = Vec::with_capacity(dims + 3);
    for j in 0..traj.len() {
        let t = format_number(traj.time(j), precision);
        let state = traj.state(j);
        for k in 0..points {
            for p in 0..populations {
                row.clear();
                row.push(t.clone());
                if let Some(g) = grid {
                    row.extend(g.point_at(k).iter().map(|x| format_number(*x, precision)));
                }
                row.push(p.to_string());
                row.push(format_number(state[k * populations + p], precision));
                w.write_record(&row).map_err(csv_error)?;
            }
        }
    }
    w.flush()
}

/// `lambda,d,outcome`, one row per family member.
pub fn write_dependence(path: &Path, report: &DependenceReport, precision: usize) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["lambda", "d", "outcome"]).map_err(csv_error)?;
    for r in &report.rows {
        w.write_record([
            format_number(r.lambda, precision),
            format_number(r.d, precision),
            r.outcome.label().to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

fn stall_label(reason: &StallReason) -> (&'static str, f64) {
    match *reason {
        StallReason::NonConvergence { at } => ("non_convergence", at),
        StallReason::NonFinite { at } => ("non_finite", at),
        StallReason::StepCollapse { at, .. } => ("step_collapse", at),
    }
}

/// Outcome kind, end point and per-window diagnostics.
pub fn outcome_entries(outcome: &SolutionOutcome, into: &mut Table) {
    into.insert("outcome".into(), outcome.kind.label().into());
    match &outcome.kind {
        OutcomeKind::Global { t_end } => {
            into.insert("t_end".into(), (*t_end).into());
        }
        OutcomeKind::MaximallyExtended { zeta_hat, final_norm } => {
            into.insert("zeta_hat".into(), (*zeta_hat).into());
            into.insert("final_norm".into(), (*final_norm).into());
        }
        OutcomeKind::Stalled { reason } => {
            let (label, at) = stall_label(reason);
            into.insert("stall_reason".into(), label.into());
            into.insert("stalled_at".into(), at.into());
        }
    }
    into.insert("sup_norm".into(), outcome.sup_norm().into());
    into.insert("max_ratio".into(), outcome.max_ratio().into());
    into.insert("window_count".into(), (outcome.diagnostics.len() as i64).into());
    let windows: Vec<Value> = outcome
        .diagnostics
        .iter()
        .map(|d| {
            let mut t = Table::new();
            t.insert("start".into(), d.start.into());
            t.insert("delta".into(), d.delta.into());
            t.insert("q".into(), d.q.into());
            t.insert("radius".into(), d.radius.into());
            t.insert("iterations".into(), (d.iterations as i64).into());
            t.insert("max_ratio".into(), d.max_ratio.into());
            t.insert("retries".into(), (d.retries as i64).into());
            Value::Table(t)
        })
        .collect();
    if !outcome.events.is_empty() {
        into.insert("events".into(), outcome.events.clone().into());
    }
    into.insert("window".into(), Value::Array(windows));
}

/// Writes the configuration echo with the run record under `summary`.
pub fn write_summary(path: &Path, config: Table, summary: Table) -> io::Result<()> {
    let mut doc = config;
    doc.insert(SUMMARY_KEY.into(), Value::Table(summary));
    let text = toml::to_string(&doc).map_err(io::Error::other)?;
    fs::write(path, text)
}
