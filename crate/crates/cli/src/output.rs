//! CSV emission. Column order is fixed by the row structs, numbers use the
//! shortest round-trip decimal form and lines end in LF.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use coupled_rwm::experiments::{Cell, CellSummary, DriftCurve, MeetResult, TraceCurve};
use coupled_rwm::kernel::MeetingTime;

#[derive(Serialize)]
struct MeetRow<'a> {
    dim: usize,
    proposal: &'a str,
    acceptance: &'a str,
    replication: usize,
    seed: u64,
    tau: u64,
    censored: bool,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    dim: usize,
    proposal: &'a str,
    acceptance: &'a str,
    mean_tau: Option<f64>,
    se_tau: Option<f64>,
    median_tau: Option<f64>,
    censored_count: usize,
}

#[derive(Serialize)]
struct TraceRow {
    t: u64,
    mean_r: f64,
    n_alive: usize,
}

#[derive(Serialize)]
struct DriftRow {
    r: f64,
    mean_drift: f64,
    se: Option<f64>,
    n: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbRow {
    pub r: f64,
    pub exact: f64,
    pub lower: f64,
    pub markov: f64,
    pub chernoff: f64,
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        w.serialize(row)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `dir/name.csv` → `dir/name_<suffix>.csv`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn cell_tag(cell: &Cell) -> String {
    format!(
        "d{}_{}_{}",
        cell.dim,
        cell.proposal_label(),
        cell.acceptance_label()
    )
}

pub fn write_meet(path: &Path, result: &MeetResult) -> Result<()> {
    write_rows(
        path,
        result.records.iter().map(|r| {
            let (tau, censored) = match r.tau {
                MeetingTime::Met(t) => (t, false),
                MeetingTime::Censored(t) => (t, true),
            };
            MeetRow {
                dim: r.dim,
                proposal: &r.proposal,
                acceptance: &r.acceptance,
                replication: r.replication,
                seed: r.seed,
                tau,
                censored,
            }
        }),
    )
}

pub fn write_summary(path: &Path, summary: &[CellSummary]) -> Result<()> {
    write_rows(
        path,
        summary.iter().map(|s| SummaryRow {
            dim: s.dim,
            proposal: &s.proposal,
            acceptance: &s.acceptance,
            mean_tau: s.mean_tau,
            se_tau: s.se_tau,
            median_tau: s.median_tau,
            censored_count: s.censored_count,
        }),
    )
}

/// One file per curve. A single curve goes to `path` itself, several go to
/// siblings tagged by cell. Returns the paths written.
pub fn write_traces(path: &Path, curves: &[TraceCurve]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for curve in curves {
        let target = if curves.len() == 1 {
            path.to_path_buf()
        } else {
            sibling(path, &cell_tag(&curve.cell))
        };
        write_rows(
            &target,
            curve.points.iter().map(|p| TraceRow {
                t: p.t,
                mean_r: p.mean_r,
                n_alive: p.n_alive,
            }),
        )?;
        written.push(target);
    }
    Ok(written)
}

pub fn write_drifts(path: &Path, curves: &[DriftCurve]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for curve in curves {
        let target = if curves.len() == 1 {
            path.to_path_buf()
        } else {
            sibling(path, &cell_tag(&curve.cell))
        };
        write_rows(
            &target,
            curve.points.iter().map(|p| DriftRow {
                r: p.r,
                mean_drift: p.mean_drift,
                se: p.se.is_finite().then_some(p.se),
                n: p.n,
            }),
        )?;
        written.push(target);
    }
    Ok(written)
}

pub fn write_prob(path: &Path, rows: &[ProbRow]) -> Result<()> {
    write_rows(path, rows.iter().copied())
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}"))
        .unwrap_or_else(|| "-".into())
}

pub fn print_summary(out: &mut impl Write, summary: &[CellSummary]) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>5}  {:<24} {:<18} {:>10} {:>8} {:>8} {:>8}",
        "dim", "proposal", "acceptance", "mean_tau", "se", "median", "censored"
    )?;
    for s in summary {
        writeln!(
            out,
            "{:>5}  {:<24} {:<18} {:>10} {:>8} {:>8} {:>8}",
            s.dim,
            s.proposal,
            s.acceptance,
            fmt_opt(s.mean_tau, 2),
            fmt_opt(s.se_tau, 2),
            fmt_opt(s.median_tau, 1),
            s.censored_count
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling(Path::new("out/meet.csv"), "summary"),
            PathBuf::from("out/meet_summary.csv")
        );
        assert_eq!(
            sibling(Path::new("trace"), "d100_max-reflection_common"),
            PathBuf::from("trace_d100_max-reflection_common.csv")
        );
    }

    #[test]
    fn rows_are_lf_terminated_with_fixed_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let rows = [ProbRow {
            r: 2.0,
            exact: 0.5,
            lower: -0.25,
            markov: f64::INFINITY,
            chernoff: 1.0,
        }];
        write_prob(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "r,exact,lower,markov,chernoff\n2.0,0.5,-0.25,inf,1.0\n"
        );
    }
}
