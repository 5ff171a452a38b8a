mod args;
mod config;
mod output;
mod plot;

use std::io::Write;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Parser;

use coupled_rwm::exec::{with_threads, Execution};
use coupled_rwm::experiments::{run_drift, run_meet_sweep, run_trace, summarize};
use coupled_rwm::gauss::{
    meeting_prob_lower_bound, meeting_prob_upper_chernoff, meeting_prob_upper_chernoff_best,
    meeting_prob_upper_markov, meeting_probability,
};
use coupled_rwm::validate::suite::{self, Group};

use args::{Cli, Command, ExperimentArgs, ProbArgs, ValidateArgs};
use config::{resolve, Config, Run};
use output::ProbRow;
use plot::{Chart, Series};

fn load_run(
    command: config::Command,
    args: &ExperimentArgs,
    horizon: Option<u64>,
    r_grid: Option<Vec<f64>>,
) -> Result<Run> {
    let config = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    resolve(command, &config, args, horizon, r_grid)
}

fn cmd_meet(args: &ExperimentArgs) -> Result<ExitCode> {
    let run = load_run(config::Command::Meet, args, None, None)?;
    let result = run_meet_sweep(&run.spec)?;
    let summary = summarize(&result);
    output::write_meet(&run.out, &result)?;
    let summary_path = output::sibling(&run.out, "summary");
    output::write_summary(&summary_path, &summary)?;

    let mut stdout = std::io::stdout().lock();
    output::print_summary(&mut stdout, &summary)?;
    writeln!(
        stdout,
        "wrote {} and {}",
        run.out.display(),
        summary_path.display()
    )?;
    for s in summary.iter().filter(|s| s.censored_count > 0) {
        eprintln!(
            "warning: {} of {} runs censored at t_max={} for d={} {}/{}",
            s.censored_count, s.n, run.spec.t_max, s.dim, s.proposal, s.acceptance
        );
    }

    if let Some(svg) = &run.svg {
        let mut series: Vec<Series> = Vec::new();
        for s in &summary {
            let label = format!("{}/{}", s.proposal, s.acceptance);
            let Some(mean) = s.mean_tau else { continue };
            match series.iter_mut().find(|x| x.label == label) {
                Some(existing) => existing.points.push((s.dim as f64, mean)),
                None => series.push(Series {
                    label,
                    points: vec![(s.dim as f64, mean)],
                }),
            }
        }
        let chart = Chart {
            title: "Average meeting time",
            x_label: "dimension",
            y_label: "mean tau",
            log_y: run.log_scale,
            zero_line: false,
        };
        plot::render(svg, &chart, &series)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace(args: &args::TraceArgs) -> Result<ExitCode> {
    let run = load_run(config::Command::Trace, &args.common, args.horizon, None)?;
    let curves = run_trace(&run.spec)?;
    let written = output::write_traces(&run.out, &curves)?;

    let mut stdout = std::io::stdout().lock();
    for (curve, path) in curves.iter().zip(&written) {
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        writeln!(
            stdout,
            "{}: mean r {:.4} -> {:.4} at t={}, {} of {} pairs still apart; wrote {}",
            output::cell_tag(&curve.cell),
            first.mean_r,
            last.mean_r,
            last.t,
            last.n_alive,
            run.spec.replications,
            path.display()
        )?;
    }

    if let Some(svg) = &run.svg {
        let series: Vec<Series> = curves
            .iter()
            .map(|c| Series {
                label: output::cell_tag(&c.cell),
                points: c.points.iter().map(|p| (p.t as f64, p.mean_r)).collect(),
            })
            .collect();
        let chart = Chart {
            title: "Average distance between chains",
            x_label: "iteration",
            y_label: "mean distance",
            log_y: run.log_scale,
            zero_line: false,
        };
        plot::render(svg, &chart, &series)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_drift(args: &args::DriftArgs) -> Result<ExitCode> {
    let run = load_run(
        config::Command::Drift,
        &args.common,
        None,
        args.r_grid.clone(),
    )?;
    let curves = run_drift(&run.spec)?;
    let written = output::write_drifts(&run.out, &curves)?;

    let mut stdout = std::io::stdout().lock();
    for (curve, path) in curves.iter().zip(&written) {
        let crossings = coupled_rwm::experiments::sign_changes(&curve.points);
        let shown: Vec<String> = crossings.iter().map(|c| format!("{c:.4}")).collect();
        writeln!(
            stdout,
            "{}: sign changes at [{}]; wrote {}",
            output::cell_tag(&curve.cell),
            shown.join(", "),
            path.display()
        )?;
    }

    if let Some(svg) = &run.svg {
        let series: Vec<Series> = curves
            .iter()
            .map(|c| Series {
                label: output::cell_tag(&c.cell),
                points: c.points.iter().map(|p| (p.r, p.mean_drift)).collect(),
            })
            .collect();
        let chart = Chart {
            title: "One-step drift of the distance",
            x_label: "distance r",
            y_label: "mean change in r",
            log_y: false,
            zero_line: true,
        };
        plot::render(svg, &chart, &series)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn prob_row(r: f64, sd: f64, chernoff_s: Option<f64>) -> Result<ProbRow> {
    let chernoff = match chernoff_s {
        Some(s) => meeting_prob_upper_chernoff(r, sd, s)?,
        None => meeting_prob_upper_chernoff_best(r, sd)?,
    };
    Ok(ProbRow {
        r,
        exact: meeting_probability(r, sd)?,
        lower: meeting_prob_lower_bound(r, sd)?,
        markov: meeting_prob_upper_markov(r, sd)?,
        chernoff,
    })
}

fn cmd_prob(args: &ProbArgs) -> Result<ExitCode> {
    if !(args.r_max.is_finite() && args.r_max > 0.0) {
        bail!("--r-max must be positive, got {}", args.r_max);
    }
    let rows: Vec<ProbRow> = match args.r {
        Some(r) => vec![prob_row(r, args.sd, args.chernoff_s)?],
        None => (0..args.points)
            .map(|i| {
                let r = args.r_max * i as f64 / (args.points - 1) as f64;
                prob_row(r, args.sd, args.chernoff_s)
            })
            .collect::<Result<_>>()?,
    };

    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{:>10} {:>14} {:>14} {:>14} {:>14}",
        "r", "exact", "lower", "markov", "chernoff"
    )?;
    for row in &rows {
        writeln!(
            stdout,
            "{:>10.4} {:>14.8} {:>14.8} {:>14.8} {:>14.8}",
            row.r, row.exact, row.lower, row.markov, row.chernoff
        )?;
    }
    if let Some(out) = &args.out {
        output::write_prob(out, &rows)?;
        writeln!(stdout, "wrote {}", out.display())?;
    }
    if let Some(svg) = &args.svg {
        let column = |label: &str, f: fn(&ProbRow) -> f64| Series {
            label: label.to_string(),
            points: rows.iter().map(|row| (row.r, f(row).min(1.5))).collect(),
        };
        let series = [
            column("exact", |row| row.exact),
            column("lower", |row| row.lower),
            column("markov", |row| row.markov),
            column("chernoff", |row| row.chernoff),
        ];
        let chart = Chart {
            title: "Meeting probability and bounds",
            x_label: "distance r",
            y_label: "probability",
            log_y: args.log_scale,
            zero_line: false,
        };
        plot::render(svg, &chart, &series)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(args: &ValidateArgs) -> Result<ExitCode> {
    let groups = match &args.only {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<Group>())
            .collect::<std::result::Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let outcomes = suite::run(&groups, Execution::default());

    let mut stdout = std::io::stdout().lock();
    let mut failures = 0;
    for o in &outcomes {
        if !o.passed {
            failures += 1;
        }
        if args.verbose || !o.passed {
            writeln!(
                stdout,
                "{:<4} {:<12} {}  {}",
                if o.passed { "PASS" } else { "FAIL" },
                o.group.name(),
                o.name,
                o.detail
            )?;
        }
    }
    let mut groups_seen: Vec<Group> = Vec::new();
    for o in &outcomes {
        if !groups_seen.contains(&o.group) {
            groups_seen.push(o.group);
        }
    }
    for g in groups_seen {
        let (n, ok) = outcomes
            .iter()
            .filter(|o| o.group == g)
            .fold((0, 0), |(n, ok), o| (n + 1, ok + o.passed as usize));
        writeln!(
            stdout,
            "{:<12} {:>5}/{:<5} {}",
            g.name(),
            ok,
            n,
            if ok == n { "pass" } else { "FAIL" }
        )?;
    }
    writeln!(stdout, "{} checks, {} failed", outcomes.len(), failures)?;
    if failures > 0 {
        for o in outcomes.iter().filter(|o| !o.passed) {
            eprintln!("failed: {} / {}", o.group.name(), o.name);
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Meet(a) => cmd_meet(&a.common),
        Command::Trace(a) => cmd_trace(a),
        Command::Drift(a) => cmd_drift(a),
        Command::Prob(a) => cmd_prob(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.map(|t| t as usize);
    match with_threads(threads, || dispatch(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
