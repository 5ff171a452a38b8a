//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and
//! then asserts, so a run shows the full scoreboard even when a line fails.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use coupled_rwm::acccpl::AcceptanceKind;
use coupled_rwm::exec::Execution;
use coupled_rwm::experiments::{
    run_drift, run_meet_sweep, run_trace, sign_changes, summarize, CellSummary, ExperimentSpec,
    Protocol,
};
use coupled_rwm::kernel::MeetingTime;
use coupled_rwm::propcpl::ProposalKind;
use coupled_rwm::validate::suite::{run_group, CheckOutcome, Group};

fn report(id: u32, title: &str, passed: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "acceptance {id:>2} {} {title}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    let _ = out.flush();
}

fn group_outcomes(groups: &[Group]) -> (bool, String) {
    let outcomes: Vec<CheckOutcome> = groups
        .iter()
        .flat_map(|g| run_group(*g, Execution::default()))
        .collect();
    let failing: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name.as_str())
        .collect();
    let detail = if failing.is_empty() {
        format!("{} checks passed", outcomes.len())
    } else {
        format!(
            "{} of {} checks failed: {}",
            failing.len(),
            outcomes.len(),
            failing.join(", ")
        )
    };
    (!outcomes.is_empty() && failing.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// Table of average meeting times at d = 10
// ---------------------------------------------------------------------------

const ROWS: [ProposalKind; 4] = [
    ProposalKind::MaxReflection,
    ProposalKind::MaxSemiIndependent,
    ProposalKind::MaxOptimalTransport,
    ProposalKind::MaxIndependent,
];
const COLUMNS: [AcceptanceKind; 3] = [
    AcceptanceKind::Common,
    AcceptanceKind::IndependentUV,
    AcceptanceKind::Antithetic,
];
/// Published (mean, standard error) per row and column.
const PUBLISHED: [[(f64, f64); 3]; 4] = [
    [(30.0, 0.8), (51.0, 1.4), (68.0, 2.0)],
    [(54.0, 1.5), (85.0, 2.4), (105.0, 3.3)],
    [(104.0, 3.0), (155.0, 4.6), (183.0, 5.7)],
    [(279.0, 8.5), (302.0, 9.4), (354.0, 11.2)],
];

fn table() -> &'static Vec<CellSummary> {
    static TABLE: OnceLock<Vec<CellSummary>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut spec = ExperimentSpec::new(Protocol::Meet);
        spec.dims = vec![10];
        spec.proposals = ROWS.to_vec();
        spec.acceptances = COLUMNS.to_vec();
        spec.replications = 1000;
        spec.base_seed = 0;
        summarize(&run_meet_sweep(&spec).unwrap())
    })
}

fn cell(row: usize, col: usize) -> &'static CellSummary {
    let s = &table()[row * COLUMNS.len() + col];
    assert_eq!(s.proposal, ROWS[row].name());
    assert_eq!(s.acceptance, COLUMNS[col].name());
    s
}

#[test]
fn criterion_01_meeting_time_table() {
    let checked = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 2), (3, 2)];
    let mut passed = true;
    let mut parts = Vec::new();
    for (row, col) in checked {
        let s = cell(row, col);
        let (mean, se) = PUBLISHED[row][col];
        let band = 5.0 * se;
        let ok =
            s.censored_fraction() <= 0.01 && s.mean_tau.is_some_and(|m| (m - mean).abs() <= band);
        passed &= ok;
        parts.push(format!(
            "{}/{} {:.1} vs {mean}±{band}{}",
            s.proposal,
            s.acceptance,
            s.mean_tau.unwrap_or(f64::NAN),
            if ok { "" } else { " (out)" }
        ));
    }
    report(1, "meeting-time table at d=10", passed, &parts.join("; "));
    assert!(passed);
}

#[test]
fn criterion_02_table_ordering() {
    let mut violations = Vec::new();
    let mut compared = 0;
    let mut separated = 0;
    let mut adjacent = Vec::new();
    for row in 0..ROWS.len() {
        for col in 0..COLUMNS.len() {
            if col + 1 < COLUMNS.len() {
                adjacent.push(((row, col), (row, col + 1)));
            }
            if row + 1 < ROWS.len() {
                adjacent.push(((row, col), (row + 1, col)));
            }
        }
    }
    for (a, b) in adjacent {
        let (sa, sb) = (cell(a.0, a.1), cell(b.0, b.1));
        let (ma, mb) = (sa.mean_tau.unwrap(), sb.mean_tau.unwrap());
        let (ea, eb) = (sa.se_tau.unwrap(), sb.se_tau.unwrap());
        compared += 1;
        if ma >= mb {
            violations.push(format!(
                "{}/{} !< {}/{}",
                sa.proposal, sa.acceptance, sb.proposal, sb.acceptance
            ));
            continue;
        }
        let (pa, pea) = PUBLISHED[a.0][a.1];
        let (pb, peb) = PUBLISHED[b.0][b.1];
        if pb - pa > 4.0 * (pea * pea + peb * peb).sqrt() {
            separated += 1;
            if ma + 2.0 * ea >= mb - 2.0 * eb {
                violations.push(format!(
                    "2-SE intervals overlap for {}/{} and {}/{}",
                    sa.proposal, sa.acceptance, sb.proposal, sb.acceptance
                ));
            }
        }
    }
    let passed = violations.is_empty();
    let detail = if passed {
        format!("{compared} adjacent pairs increasing, {separated} of them separated by 2 SE")
    } else {
        violations.join("; ")
    };
    report(2, "monotone ordering of the table", passed, &detail);
    assert!(passed);
}

// ---------------------------------------------------------------------------
// Validation suite groups
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_maximality() {
    let (passed, detail) = group_outcomes(&[Group::Maximality]);
    report(3, "meet rates of maximal couplings", passed, &detail);
    assert!(passed);
}

#[test]
fn criterion_04_analytic_bounds() {
    let (passed, detail) = group_outcomes(&[Group::Bounds]);
    report(
        4,
        "meeting-probability bounds on a 200-point grid",
        passed,
        &detail,
    );
    assert!(passed);
}

#[test]
fn criterion_05_structural_identities() {
    let (passed, detail) = group_outcomes(&[Group::Structural, Group::Sticky]);
    report(
        5,
        "per-draw structural identities and stickiness",
        passed,
        &detail,
    );
    assert!(passed);
}

#[test]
fn criterion_06_marginal_laws() {
    let (passed, detail) = group_outcomes(&[Group::Marginals, Group::Acceptance]);
    report(
        6,
        "marginal laws of proposals and acceptances",
        passed,
        &detail,
    );
    assert!(passed);
}

#[test]
fn criterion_07_pushforward() {
    let (passed, detail) = group_outcomes(&[Group::Pushforward]);
    report(7, "maximality under a linear pushforward", passed, &detail);
    assert!(passed);
}

// ---------------------------------------------------------------------------
// Dynamics at d = 100
// ---------------------------------------------------------------------------

const DRIFT_GRID: [f64; 20] = [
    0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0,
    18.0, 20.0,
];

#[test]
fn criterion_08_dynamics_in_high_dimension() {
    let mut spec = ExperimentSpec::new(Protocol::Trace { horizon: 2500 });
    spec.dims = vec![100];
    spec.proposals = vec![ProposalKind::MaxIndependent, ProposalKind::MaxReflection];
    spec.replications = 1000;
    let traces = run_trace(&spec).unwrap();
    let ind = &traces[0];
    let refl = &traces[1];
    assert_eq!(ind.cell.proposal.kind, ProposalKind::MaxIndependent);
    assert_eq!(refl.cell.proposal.kind, ProposalKind::MaxReflection);

    let r0 = ind.points[0].mean_r;
    let worst = ind
        .points
        .iter()
        .map(|p| (p.mean_r / r0 - 1.0).abs())
        .fold(0.0, f64::max);
    let flat = worst <= 0.05;
    let last = refl.points.last().unwrap();
    let met_fraction = 1.0 - last.n_alive as f64 / spec.replications as f64;
    let meets = met_fraction > 0.9;

    let mut drift = ExperimentSpec::new(Protocol::Drift {
        r_grid: DRIFT_GRID.to_vec(),
    });
    drift.dims = vec![100];
    drift.proposals = ProposalKind::MAXIMAL.to_vec();
    drift.replications = 10_000;
    let curves = run_drift(&drift).unwrap();
    let mut drift_ok = true;
    let mut crossings = Vec::new();
    for c in &curves {
        let changes = sign_changes(&c.points);
        let first = c.points.first().unwrap().mean_drift;
        let last = c.points.last().unwrap().mean_drift;
        drift_ok &= first > 0.0 && last < 0.0 && changes.len() == 1;
        crossings.push(format!(
            "{} {}",
            c.cell.proposal_label(),
            changes
                .iter()
                .map(|x| format!("{x:.2}"))
                .collect::<Vec<_>>()
                .join("/")
        ));
    }

    let passed = flat && meets && drift_ok;
    let detail = format!(
        "max-independent trace deviates at most {:.2}% from {r0:.3}; \
         max-reflection met fraction {met_fraction:.3} at t=2500; drift zero crossings: {}",
        100.0 * worst,
        crossings.join(", ")
    );
    report(
        8,
        "distance traces and drift curves at d=100",
        passed,
        &detail,
    );
    assert!(passed);
}

// ---------------------------------------------------------------------------
// Growth with dimension
// ---------------------------------------------------------------------------

/// Mean with censored runs counted at their censoring time, a lower bound
/// on the mean meeting time.
fn restricted_mean(taus: &[MeetingTime]) -> f64 {
    taus.iter().map(|t| t.value() as f64).sum::<f64>() / taus.len() as f64
}

#[test]
fn criterion_09_dimension_scaling() {
    let mut refl = ExperimentSpec::new(Protocol::Meet);
    refl.dims = vec![10, 100];
    refl.proposals = vec![ProposalKind::MaxReflection];
    refl.replications = 1000;
    let s = summarize(&run_meet_sweep(&refl).unwrap());
    let (m10, m100) = (s[0].mean_tau.unwrap(), s[1].mean_tau.unwrap());
    let refl_ratio = m100 / m10;
    let near_linear = s.iter().all(|c| c.censored_count == 0) && refl_ratio <= 3.0 * 10.0;

    let mut ind = ExperimentSpec::new(Protocol::Meet);
    ind.dims = vec![10, 20];
    ind.proposals = vec![ProposalKind::MaxIndependent];
    ind.replications = 200;
    ind.t_max = 20_000;
    let result = run_meet_sweep(&ind).unwrap();
    let taus = |dim: usize| -> Vec<MeetingTime> {
        result
            .records
            .iter()
            .filter(|r| r.dim == dim)
            .map(|r| r.tau)
            .collect()
    };
    let t10 = taus(10);
    let censored10 = t10.iter().filter(|t| t.is_censored()).count();
    let mean10 = restricted_mean(&t10);
    let lower20 = restricted_mean(&taus(20));
    let super_linear = censored10 == 0 && lower20 >= 2.0 * mean10;

    let passed = near_linear && super_linear;
    let detail = format!(
        "max-reflection {m10:.1} -> {m100:.1} (x{refl_ratio:.1}, limit x30); \
         max-independent d=10 {mean10:.1}, d=20 at least {lower20:.1} (x{:.1}, need x2)",
        lower20 / mean10
    );
    report(9, "growth of meeting times with dimension", passed, &detail);
    assert!(passed);
}

// ---------------------------------------------------------------------------
// Determinism across thread counts
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str], threads: &str) {
    let status = Command::new(env!("CARGO_BIN_EXE_coupled-rwm"))
        .args(args)
        .env("COUPLED_RWM_THREADS", threads)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("spawn coupled-rwm");
    assert!(status.success(), "coupled-rwm {args:?} failed");
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn criterion_10_determinism_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, Vec<&str>, Vec<&str>); 3] = [
        (
            "meet",
            vec![
                "meet",
                "--dims",
                "4,10",
                "--proposal",
                "maximal,hybrid",
                "--acceptance",
                "all",
                "--reps",
                "40",
                "--seed",
                "11",
            ],
            vec!["", "_summary"],
        ),
        (
            "trace",
            vec![
                "trace",
                "--dim",
                "20",
                "--proposal",
                "max-reflection",
                "--reps",
                "50",
                "--horizon",
                "300",
                "--seed",
                "5",
            ],
            vec![""],
        ),
        (
            "drift",
            vec![
                "drift",
                "--dim",
                "20",
                "--proposal",
                "max-optimal-transport",
                "--reps",
                "500",
                "--r-grid",
                "0.1,1,4",
                "--seed",
                "5",
            ],
            vec![""],
        ),
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (name, args, suffixes) in &runs {
        let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
        for threads in ["1", "3", "8"] {
            let out = dir.path().join(format!("{name}_{threads}.csv"));
            let mut full: Vec<&str> = args.clone();
            let out_str = out.to_str().unwrap().to_string();
            full.push("--out");
            full.push(&out_str);
            run_cli(&full, threads);
            outputs.push(
                suffixes
                    .iter()
                    .map(|s| read(&dir.path().join(format!("{name}_{threads}{s}.csv"))))
                    .collect(),
            );
        }
        for other in &outputs[1..] {
            compared += other.len();
            if other != &outputs[0] {
                mismatched.push(*name);
            }
        }
    }
    let passed = mismatched.is_empty();
    let detail = if passed {
        format!("{compared} CSV files byte-identical to the single-thread run")
    } else {
        format!("differences in {}", mismatched.join(", "))
    };
    report(
        10,
        "byte-identical output for 1, 3 and 8 threads",
        passed,
        &detail,
    );
    assert!(passed);
}
