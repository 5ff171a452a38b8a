//! Replicated experiments: meeting-time sweeps, distance traces and one-step
//! drift curves on the standard-normal target.
//!
//! Every replication draws from its own RNG stream, seeded by hashing
//! `(base_seed, cell index, replication index)`, and writes into a
//! pre-assigned output slot. Results therefore depend only on the spec, not
//! on thread count or scheduling.

use crate::acccpl::AcceptanceKind;
use crate::error::{domain, Result};
use crate::exec::{map_indexed, Execution};
use crate::geom::{distance, Point};
use crate::kernel::{
    coupled_step, run_to_meeting, CoupledState, KernelSpec, MeetingTime, StandardNormal,
    DEFAULT_ELL,
};
use crate::propcpl::{ProposalCouplingSpec, ProposalKind, DEFAULT_REJECTION_CAP};
use crate::seeding::{normal_vec, stream_rng, stream_seed};

pub const DEFAULT_T_MAX: u64 = 1_000_000;
pub const DEFAULT_REPLICATIONS: usize = 1000;
pub const DEFAULT_HYBRID_CUTOFFS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    /// Run each replication to meeting from independent draws of the target.
    Meet,
    /// Average distance between the chains for `t = 0..=horizon`.
    Trace { horizon: u64 },
    /// Mean one-step change in distance from pairs at each separation.
    Drift { r_grid: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    pub proposals: Vec<ProposalKind>,
    pub acceptances: Vec<AcceptanceKind>,
    pub dims: Vec<usize>,
    pub ell: f64,
    /// Each hybrid proposal is run once per cutoff.
    pub hybrid_cutoffs: Vec<f64>,
    pub hybrid_far_kind: ProposalKind,
    pub replications: usize,
    pub base_seed: u64,
    pub t_max: u64,
    pub rejection_cap: u64,
}

impl ExperimentSpec {
    pub fn new(protocol: Protocol) -> Self {
        ExperimentSpec {
            protocol,
            proposals: vec![ProposalKind::MaxReflection],
            acceptances: vec![AcceptanceKind::Common],
            dims: vec![10],
            ell: DEFAULT_ELL,
            hybrid_cutoffs: DEFAULT_HYBRID_CUTOFFS.to_vec(),
            hybrid_far_kind: ProposalKind::Reflection,
            replications: DEFAULT_REPLICATIONS,
            base_seed: 0,
            t_max: DEFAULT_T_MAX,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(domain("replications must be at least 1"));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(domain("dims must be a nonempty list of positive integers"));
        }
        if self.proposals.is_empty() || self.acceptances.is_empty() {
            return Err(domain(
                "at least one proposal and one acceptance coupling required",
            ));
        }
        if !(self.ell > 0.0) || !self.ell.is_finite() {
            return Err(domain(format!("ell must be positive, got {}", self.ell)));
        }
        if self.t_max == 0 {
            return Err(domain("t_max must be positive"));
        }
        if self.proposals.contains(&ProposalKind::Hybrid) && self.hybrid_cutoffs.is_empty() {
            return Err(domain("hybrid proposal requires at least one cutoff"));
        }
        match &self.protocol {
            Protocol::Meet => {}
            Protocol::Trace { horizon } => {
                if *horizon == 0 {
                    return Err(domain("trace horizon must be positive"));
                }
            }
            Protocol::Drift { r_grid } => {
                if r_grid.is_empty() || r_grid.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                    return Err(domain(
                        "drift grid must be a nonempty list of positive values",
                    ));
                }
            }
        }
        for cell in self.cells() {
            cell.kernel().validate()?;
        }
        Ok(())
    }

    /// All `(dim, proposal, acceptance)` combinations in output order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &dim in &self.dims {
            let sd = self.ell / (dim as f64).sqrt();
            for &kind in &self.proposals {
                let mut variants = Vec::new();
                if kind == ProposalKind::Hybrid {
                    for &c in &self.hybrid_cutoffs {
                        variants.push(ProposalCouplingSpec {
                            hybrid_cutoff: c,
                            hybrid_far_kind: self.hybrid_far_kind,
                            ..ProposalCouplingSpec::new(kind, sd)
                        });
                    }
                } else {
                    variants.push(ProposalCouplingSpec::new(kind, sd));
                }
                for mut proposal in variants {
                    proposal.rejection_cap = self.rejection_cap;
                    for &acceptance in &self.acceptances {
                        out.push(Cell {
                            index: out.len(),
                            dim,
                            proposal,
                            acceptance,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub dim: usize,
    pub proposal: ProposalCouplingSpec,
    pub acceptance: AcceptanceKind,
}

impl Cell {
    pub fn kernel(&self) -> KernelSpec {
        KernelSpec {
            target: StandardNormal { dim: self.dim },
            proposal: self.proposal,
            acceptance: self.acceptance,
        }
    }

    pub fn proposal_label(&self) -> String {
        self.proposal.label()
    }

    pub fn acceptance_label(&self) -> &'static str {
        self.acceptance.name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetRecord {
    pub cell: usize,
    pub dim: usize,
    pub proposal: String,
    pub acceptance: String,
    pub replication: usize,
    pub seed: u64,
    pub tau: MeetingTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeetResult {
    pub cells: Vec<Cell>,
    /// Cell-major, replication-minor.
    pub records: Vec<MeetRecord>,
}

fn draw_target(rng: &mut crate::seeding::StreamRng, dim: usize) -> Point {
    normal_vec(rng, dim, 1.0).into()
}

pub fn run_meet_sweep(spec: &ExperimentSpec) -> Result<MeetResult> {
    run_meet_sweep_with(spec, Execution::default())
}

pub fn run_meet_sweep_with(spec: &ExperimentSpec, exec: Execution) -> Result<MeetResult> {
    spec.validate()?;
    let cells = spec.cells();
    let reps = spec.replications;
    let outcomes = map_indexed(exec, cells.len() * reps, |i| {
        let cell = &cells[i / reps];
        let rep = i % reps;
        let seed = stream_seed(spec.base_seed, cell.index as u64, rep as u64);
        let mut rng = stream_rng(seed);
        let x0 = draw_target(&mut rng, cell.dim);
        let y0 = draw_target(&mut rng, cell.dim);
        run_to_meeting(&x0, &y0, &cell.kernel(), spec.t_max, false, &mut rng)
            .map(|(tau, _)| (seed, tau))
    });
    let mut records = Vec::with_capacity(outcomes.len());
    for (i, out) in outcomes.into_iter().enumerate() {
        let (seed, tau) = out?;
        let cell = &cells[i / reps];
        records.push(MeetRecord {
            cell: cell.index,
            dim: cell.dim,
            proposal: cell.proposal_label(),
            acceptance: cell.acceptance_label().to_string(),
            replication: i % reps,
            seed,
            tau,
        });
    }
    Ok(MeetResult { cells, records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: u64,
    /// Mean distance over all replications; met pairs count as 0.
    pub mean_r: f64,
    pub n_alive: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceCurve {
    pub cell: Cell,
    pub points: Vec<TracePoint>,
}

pub fn run_trace(spec: &ExperimentSpec) -> Result<Vec<TraceCurve>> {
    run_trace_with(spec, Execution::default())
}

pub fn run_trace_with(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<TraceCurve>> {
    spec.validate()?;
    let Protocol::Trace { horizon } = spec.protocol else {
        return Err(domain("run_trace needs the trace protocol"));
    };
    let reps = spec.replications;
    let len = horizon as usize + 1;
    let mut curves = Vec::new();
    for cell in spec.cells() {
        let kernel = cell.kernel();
        let paths = map_indexed(exec, reps, |rep| -> Result<Vec<f64>> {
            let seed = stream_seed(spec.base_seed, cell.index as u64, rep as u64);
            let mut rng = stream_rng(seed);
            let x0 = draw_target(&mut rng, cell.dim);
            let y0 = draw_target(&mut rng, cell.dim);
            let mut state = CoupledState::new(x0, y0);
            let mut path = Vec::with_capacity(len);
            path.push(state.distance());
            // Once met the distance stays 0, so stepping can stop there.
            while path.len() < len && !state.met {
                state = coupled_step(&state, &kernel, &mut rng)?;
                path.push(state.distance());
            }
            path.resize(len, 0.0);
            Ok(path)
        });
        let mut sums = vec![0.0; len];
        let mut alive = vec![0usize; len];
        for path in paths {
            for (t, r) in path?.into_iter().enumerate() {
                sums[t] += r;
                alive[t] += (r > 0.0) as usize;
            }
        }
        let points = (0..len)
            .map(|t| TracePoint {
                t: t as u64,
                mean_r: sums[t] / reps as f64,
                n_alive: alive[t],
            })
            .collect();
        curves.push(TraceCurve { cell, points });
    }
    Ok(curves)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftPoint {
    pub r: f64,
    /// Mean of `R₁ − r`.
    pub mean_drift: f64,
    pub se: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCurve {
    pub cell: Cell,
    pub points: Vec<DriftPoint>,
}

/// Pair at separation `r` along the first axis around `m = (1, …, 1)`, so
/// that `m₁ = 1` and `‖m‖ = √d`.
pub fn drift_start(dim: usize, r: f64) -> (Point, Point) {
    let mut x = Point::new(vec![1.0; dim]);
    let mut y = x.clone();
    x[0] -= 0.5 * r;
    y[0] += 0.5 * r;
    (x, y)
}

pub fn run_drift(spec: &ExperimentSpec) -> Result<Vec<DriftCurve>> {
    run_drift_with(spec, Execution::default())
}

pub fn run_drift_with(spec: &ExperimentSpec, exec: Execution) -> Result<Vec<DriftCurve>> {
    spec.validate()?;
    let Protocol::Drift { r_grid } = &spec.protocol else {
        return Err(domain("run_drift needs the drift protocol"));
    };
    let reps = spec.replications;
    let mut curves = Vec::new();
    for cell in spec.cells() {
        let kernel = cell.kernel();
        let changes = map_indexed(exec, r_grid.len() * reps, |i| -> Result<f64> {
            let r = r_grid[i / reps];
            let seed = stream_seed(spec.base_seed, cell.index as u64, i as u64);
            let mut rng = stream_rng(seed);
            let (x, y) = drift_start(cell.dim, r);
            let r0 = distance(&x, &y);
            let next = coupled_step(&CoupledState::new(x, y), &kernel, &mut rng)?;
            Ok(next.distance() - r0)
        });
        let changes = changes.into_iter().collect::<Result<Vec<_>>>()?;
        let points = r_grid
            .iter()
            .zip(changes.chunks(reps))
            .map(|(&r, chunk)| {
                let (mean, se) = mean_se(chunk);
                DriftPoint {
                    r,
                    mean_drift: mean,
                    se: se.unwrap_or(f64::NAN),
                    n: chunk.len(),
                }
            })
            .collect();
        curves.push(DriftCurve { cell, points });
    }
    Ok(curves)
}

fn mean_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Positions where consecutive values change sign, located by linear
/// interpolation between grid points. Exact zeros count as a change only
/// when the neighbours on either side differ in sign.
pub fn sign_changes(points: &[DriftPoint]) -> Vec<f64> {
    let nonzero: Vec<&DriftPoint> = points.iter().filter(|p| p.mean_drift != 0.0).collect();
    nonzero
        .windows(2)
        .filter(|w| (w[0].mean_drift > 0.0) != (w[1].mean_drift > 0.0))
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            a.r + (b.r - a.r) * a.mean_drift / (a.mean_drift - b.mean_drift)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dim: usize,
    pub proposal: String,
    pub acceptance: String,
    pub n: usize,
    /// Over uncensored runs; absent when every run was censored.
    pub mean_tau: Option<f64>,
    /// Standard error of the mean; absent with fewer than two uncensored runs.
    pub se_tau: Option<f64>,
    /// Censored runs count as +∞; absent when the median falls on one.
    pub median_tau: Option<f64>,
    pub censored_count: usize,
}

impl CellSummary {
    pub fn censored_fraction(&self) -> f64 {
        self.censored_count as f64 / self.n as f64
    }
}

/// Summarize meeting times. Rows follow cell order.
pub fn summarize(result: &MeetResult) -> Vec<CellSummary> {
    result
        .cells
        .iter()
        .map(|cell| {
            let taus: Vec<MeetingTime> = result
                .records
                .iter()
                .filter(|r| r.cell == cell.index)
                .map(|r| r.tau)
                .collect();
            summarize_taus(
                cell.dim,
                cell.proposal_label(),
                cell.acceptance_label().to_string(),
                &taus,
            )
        })
        .collect()
}

pub fn summarize_taus(
    dim: usize,
    proposal: String,
    acceptance: String,
    taus: &[MeetingTime],
) -> CellSummary {
    let met: Vec<f64> = taus
        .iter()
        .filter_map(|t| match t {
            MeetingTime::Met(v) => Some(*v as f64),
            MeetingTime::Censored(_) => None,
        })
        .collect();
    let censored_count = taus.len() - met.len();
    let (mean_tau, se_tau) = if met.is_empty() {
        (None, None)
    } else {
        let (m, se) = mean_se(&met);
        (Some(m), se)
    };
    let mut sorted: Vec<f64> = met.clone();
    sorted.sort_by(f64::total_cmp);
    sorted.extend(std::iter::repeat_n(f64::INFINITY, censored_count));
    let median_tau = if sorted.is_empty() {
        None
    } else {
        let n = sorted.len();
        let med = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        med.is_finite().then_some(med)
    };
    CellSummary {
        dim,
        proposal,
        acceptance,
        n: taus.len(),
        mean_tau,
        se_tau,
        median_tau,
        censored_count,
    }
}
