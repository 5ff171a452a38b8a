//! The statistical validation suite, organized in named groups.
//!
//! Every check uses a fixed seed derived from [`SUITE_SEED`], so outcomes are
//! reproducible. Batteries of many tests share a family-wise level of
//! [`ALPHA`] through a Bonferroni correction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{
    binomial_z, bonferroni_z, ks_statistic, ks_two_sample, rejection_residual_sampler,
    ResidualOracle, ResidualSide,
};
use crate::acccpl::{
    couple_accept, ot_rho_choice, rho_bounds, sample_uniform_pair, AcceptanceKind,
};
use crate::error::{domain, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::gauss::{
    chi2_1_ccdf, meeting_prob_lower_bound, meeting_prob_upper_chernoff,
    meeting_prob_upper_chernoff_best, meeting_prob_upper_markov, meeting_probability, normal_cdf,
    NormalParams,
};
use crate::geom::{distance, dot, norm, orthogonal_part, pair_geometry, reflect, Point};
use crate::kernel::{coupled_step, rwm_step, CoupledState, KernelSpec, DEFAULT_ELL};
use crate::propcpl::{
    ot_transport_map, sample_max_independent, sample_proposal, simple_increments, split_max_ot,
    split_max_reflection, split_max_semi_independent, ProposalCouplingSpec, ProposalKind,
    ProposalPair, DEFAULT_REJECTION_CAP,
};
use crate::seeding::{normal_vec, stream_rng, stream_seed, StreamRng};

pub const SUITE_SEED: u64 = 0x05ee_d0c0u64;
/// Family-wise significance level of each battery.
pub const ALPHA: f64 = 0.001;
/// Draws per statistical test.
pub const N_DRAWS: usize = 100_000;
/// Binomial band for single-rate checks.
pub const SE_BAND: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Maximality,
    Marginals,
    Acceptance,
    Residuals,
    Structural,
    Sticky,
    Bounds,
    Pushforward,
}

impl Group {
    pub const ALL: [Group; 8] = [
        Group::Maximality,
        Group::Marginals,
        Group::Acceptance,
        Group::Residuals,
        Group::Structural,
        Group::Sticky,
        Group::Bounds,
        Group::Pushforward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Maximality => "maximality",
            Group::Marginals => "marginals",
            Group::Acceptance => "acceptance",
            Group::Residuals => "residuals",
            Group::Structural => "structural",
            Group::Sticky => "sticky",
            Group::Bounds => "bounds",
            Group::Pushforward => "pushforward",
        }
    }

    fn id(self) -> u64 {
        Group::ALL.iter().position(|g| *g == self).unwrap() as u64
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Group::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| domain(format!("unknown validation group '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub group: Group,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(group: Group, name: impl Into<String>, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        group,
        name: name.into(),
        passed,
        detail,
    }
}

fn failed(group: Group, name: impl Into<String>, err: Error) -> CheckOutcome {
    outcome(group, name, false, format!("error: {err}"))
}

fn rng_for(group: Group, index: usize) -> StreamRng {
    stream_rng(stream_seed(SUITE_SEED, group.id(), index as u64))
}

pub fn run_group(group: Group, exec: Execution) -> Vec<CheckOutcome> {
    match group {
        Group::Maximality => maximality(exec),
        Group::Marginals => marginals(exec),
        Group::Acceptance => acceptance(exec),
        Group::Residuals => residuals(exec),
        Group::Structural => structural(exec),
        Group::Sticky => sticky(exec),
        Group::Bounds => bounds(),
        Group::Pushforward => pushforward(exec),
    }
}

/// Run the given groups, or every group when `groups` is empty.
pub fn run(groups: &[Group], exec: Execution) -> Vec<CheckOutcome> {
    let selected: Vec<Group> = if groups.is_empty() {
        Group::ALL.to_vec()
    } else {
        groups.to_vec()
    };
    selected
        .into_iter()
        .flat_map(|g| run_group(g, exec))
        .collect()
}

fn unit_vector(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
    loop {
        let v = normal_vec(rng, dim, 1.0);
        let n = norm(&v);
        if n > 1e-3 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// A unit vector orthogonal to `e`, or `None` in one dimension.
fn orthogonal_direction(e: &[f64]) -> Option<Vec<f64>> {
    if e.len() < 2 {
        return None;
    }
    let k = (0..e.len())
        .min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs()))
        .unwrap();
    let basis = Point::basis(e.len(), k);
    let p = orthogonal_part(&basis, e).ok()?;
    let n = p.norm();
    Some(p.iter().map(|c| c / n).collect())
}

fn normal_cdf_fn(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    move |v| normal_cdf(v, NormalParams { mean, sd })
}

// ---------------------------------------------------------------------------
// maximality
// ---------------------------------------------------------------------------

pub const MAXIMALITY_DIMS: [usize; 3] = [1, 3, 10];
pub const MAXIMALITY_RATIOS: [f64; 4] = [0.25, 1.0, 2.0, 4.0];

/// Empirical meet rate of every maximal coupling against the closed form.
pub fn maximality(exec: Execution) -> Vec<CheckOutcome> {
    let mut cases = Vec::new();
    for kind in ProposalKind::MAXIMAL {
        for d in MAXIMALITY_DIMS {
            for ratio in MAXIMALITY_RATIOS {
                cases.push((kind, d, ratio));
            }
        }
    }
    map_indexed(exec, cases.len(), |i| {
        let (kind, d, ratio) = cases[i];
        let name = format!("meet-rate/{kind}/d={d}/r={ratio}sd");
        let mut rng = rng_for(Group::Maximality, i);
        let sd = DEFAULT_ELL / (d as f64).sqrt();
        let x = normal_vec(&mut rng, d, 1.0);
        let u = unit_vector(&mut rng, d);
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + ratio * sd * b).collect();
        let r = distance(&x, &y);
        let spec = ProposalCouplingSpec::new(kind, sd);
        let mut hits = 0;
        for _ in 0..N_DRAWS {
            match sample_proposal(&spec, &x, &y, &mut rng) {
                Ok(p) => hits += p.proposed_meet as usize,
                Err(e) => return failed(Group::Maximality, name, e),
            }
        }
        let p = meeting_probability(r, sd).unwrap();
        let z = binomial_z(hits, N_DRAWS, p);
        outcome(
            Group::Maximality,
            name,
            z.abs() <= SE_BAND,
            format!(
                "rate={:.5} exact={p:.5} z={z:.2}",
                hits as f64 / N_DRAWS as f64
            ),
        )
    })
}

// ---------------------------------------------------------------------------
// marginals
// ---------------------------------------------------------------------------

struct MarginConfig {
    name: String,
    spec: ProposalCouplingSpec,
    x: Vec<f64>,
    y: Vec<f64>,
}

fn margin_configs() -> Vec<MarginConfig> {
    let mut rng = rng_for(Group::Marginals, 10_000);
    let mut out = Vec::new();
    let mut kinds: Vec<(ProposalKind, &str)> =
        ProposalKind::ALL.iter().map(|k| (*k, k.name())).collect();
    kinds.push((ProposalKind::Hybrid, "hybrid-far"));
    for (kind, label) in kinds {
        let d = rng.random_range(1..=8usize);
        let sd = 0.3 + 1.7 * rng.random::<f64>();
        let x = normal_vec(&mut rng, d, 1.0);
        let y = normal_vec(&mut rng, d, 1.0);
        let r = distance(&x, &y);
        let mut spec = ProposalCouplingSpec::new(kind, sd);
        if kind == ProposalKind::Hybrid {
            let scale = if label == "hybrid" { 2.0 } else { 0.5 };
            spec.hybrid_cutoff = scale * r * (d as f64).sqrt();
        }
        out.push(MarginConfig {
            name: format!("proposal-margins/{label}/d={d}"),
            spec,
            x,
            y,
        });
    }
    out
}

fn kernel_pairs() -> Vec<(ProposalKind, AcceptanceKind)> {
    let mut out: Vec<_> = ProposalKind::ALL
        .iter()
        .map(|k| (*k, AcceptanceKind::Common))
        .collect();
    for k in ProposalKind::MAXIMAL {
        for a in [
            AcceptanceKind::IndependentUV,
            AcceptanceKind::Antithetic,
            AcceptanceKind::OptimalTransport,
        ] {
            out.push((k, a));
        }
    }
    out
}

/// Proposal margins (KS on an `e` and an orthogonal projection of each
/// proposal) and one-step marginal equivalence of the coupled kernel with
/// the plain RWM kernel.
pub fn marginals(exec: Execution) -> Vec<CheckOutcome> {
    let configs = margin_configs();
    let pairs = kernel_pairs();
    let n_tests: usize = configs
        .iter()
        .map(|c| if c.x.len() > 1 { 4 } else { 2 })
        .sum::<usize>()
        + 4 * pairs.len();
    let p_min = ALPHA / n_tests as f64;
    let z_crit = bonferroni_z(ALPHA, n_tests);

    let mut out = map_indexed(exec, configs.len(), |i| {
        let c = &configs[i];
        let mut rng = rng_for(Group::Marginals, i);
        proposal_margin_check(c, &mut rng, p_min)
    });

    let d = 3;
    let spec_of =
        |(p, a): (ProposalKind, AcceptanceKind)| KernelSpec::standard_normal(d, DEFAULT_ELL, p, a);
    out.extend(map_indexed(exec, pairs.len(), |i| {
        let mut rng = rng_for(Group::Marginals, 1000 + i);
        let (p, a) = pairs[i];
        let name = format!("kernel-margins/{p}+{a}");
        match kernel_margin_check(&spec_of(pairs[i]), &mut rng, p_min, z_crit) {
            Ok((passed, detail)) => outcome(Group::Marginals, name, passed, detail),
            Err(e) => failed(Group::Marginals, name, e),
        }
    }));
    out
}

fn proposal_margin_check(c: &MarginConfig, rng: &mut StreamRng, p_min: f64) -> CheckOutcome {
    let g = pair_geometry(&c.x, &c.y).expect("distinct random states");
    let f = orthogonal_direction(&g.e);
    let sd = c.spec.sd;
    let mut cols: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(N_DRAWS)).collect();
    for _ in 0..N_DRAWS {
        let p = match sample_proposal(&c.spec, &c.x, &c.y, rng) {
            Ok(p) => p,
            Err(e) => return failed(Group::Marginals, c.name.clone(), e),
        };
        cols[0].push(dot(&g.e, &p.x_prop));
        cols[1].push(dot(&g.e, &p.y_prop));
        if let Some(f) = &f {
            cols[2].push(dot(f, &p.x_prop));
            cols[3].push(dot(f, &p.y_prop));
        }
    }
    let mut centers = vec![dot(&g.e, &c.x), dot(&g.e, &c.y)];
    if let Some(f) = &f {
        centers.push(dot(f, &c.x));
        centers.push(dot(f, &c.y));
    }
    let labels = ["x'.e", "y'.e", "x'.f", "y'.f"];
    let mut worst = 1.0f64;
    let mut parts = Vec::new();
    for (k, mean) in centers.iter().enumerate() {
        let (_, p) = ks_statistic(&cols[k], normal_cdf_fn(*mean, sd)).unwrap();
        worst = worst.min(p);
        parts.push(format!("{}:p={p:.3}", labels[k]));
    }
    outcome(
        Group::Marginals,
        c.name.clone(),
        worst > p_min,
        format!("{} (threshold {p_min:.1e})", parts.join(" ")),
    )
}

fn two_proportion_z(h1: usize, h2: usize, n: usize) -> f64 {
    let (p1, p2) = (h1 as f64 / n as f64, h2 as f64 / n as f64);
    let p = 0.5 * (p1 + p2);
    let se = (2.0 * p * (1.0 - p) / n as f64).sqrt();
    if se == 0.0 {
        0.0
    } else {
        (p1 - p2) / se
    }
}

fn kernel_margin_check(
    spec: &KernelSpec,
    rng: &mut StreamRng,
    p_min: f64,
    z_crit: f64,
) -> Result<(bool, String)> {
    let d = spec.dim();
    let x: Point = normal_vec(rng, d, 1.0).into();
    let y: Point = normal_vec(rng, d, 1.0).into();
    let start = CoupledState::new(x.clone(), y.clone());
    let (mut cx, mut cy) = (Vec::with_capacity(N_DRAWS), Vec::with_capacity(N_DRAWS));
    let (mut ax, mut ay) = (0, 0);
    for _ in 0..N_DRAWS {
        let next = coupled_step(&start, spec, rng)?;
        let dx = distance(&next.x, &x);
        let dy = distance(&next.y, &y);
        ax += (dx > 0.0) as usize;
        ay += (dy > 0.0) as usize;
        cx.push(dx);
        cy.push(dy);
    }
    let (mut mx, mut my) = (Vec::with_capacity(N_DRAWS), Vec::with_capacity(N_DRAWS));
    let (mut bx, mut by) = (0, 0);
    for _ in 0..N_DRAWS {
        let (nx, a) = rwm_step(&x, spec, rng)?;
        mx.push(distance(&nx, &x));
        bx += a as usize;
        let (ny, a) = rwm_step(&y, spec, rng)?;
        my.push(distance(&ny, &y));
        by += a as usize;
    }
    let (_, px) = ks_two_sample(&cx, &mx)?;
    let (_, py) = ks_two_sample(&cy, &my)?;
    let zx = two_proportion_z(ax, bx, N_DRAWS);
    let zy = two_proportion_z(ay, by, N_DRAWS);
    let passed = px > p_min && py > p_min && zx.abs() <= z_crit && zy.abs() <= z_crit;
    Ok((
        passed,
        format!("ks p=({px:.3}, {py:.3}) accept z=({zx:.2}, {zy:.2}) crit z={z_crit:.2}"),
    ))
}

// ---------------------------------------------------------------------------
// acceptance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct AcceptCase {
    kind: AcceptanceKind,
    label: &'static str,
    /// States `(x, y, x', y')`; only read by the optimal-transport kind.
    states: [[f64; 1]; 4],
}

const ACCEPT_CASES: [AcceptCase; 5] = [
    AcceptCase {
        kind: AcceptanceKind::Common,
        label: "common",
        states: [[0.0], [1.0], [0.5], [0.6]],
    },
    AcceptCase {
        kind: AcceptanceKind::IndependentUV,
        label: "independent",
        states: [[0.0], [1.0], [0.5], [0.6]],
    },
    AcceptCase {
        kind: AcceptanceKind::Antithetic,
        label: "antithetic",
        states: [[0.0], [1.0], [0.5], [0.6]],
    },
    // coefficient > 0: lower bound
    AcceptCase {
        kind: AcceptanceKind::OptimalTransport,
        label: "optimal-transport-lower",
        states: [[0.0], [1.0], [0.5], [0.6]],
    },
    // coefficient < 0: upper bound
    AcceptCase {
        kind: AcceptanceKind::OptimalTransport,
        label: "optimal-transport-upper",
        states: [[0.0], [1.0], [-2.0], [-2.0]],
    },
];

pub const RATE_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, Copy, Default)]
struct AcceptCounts {
    x: usize,
    y: usize,
    both: usize,
    neither: usize,
}

fn realized_rho(case: &AcceptCase, a_x: f64, a_y: f64) -> f64 {
    let (lo, hi) = rho_bounds(a_x, a_y).unwrap();
    match case.kind {
        AcceptanceKind::Common => hi,
        AcceptanceKind::Antithetic => lo,
        AcceptanceKind::IndependentUV => a_x * a_y,
        AcceptanceKind::OptimalTransport => {
            let [x, y, xp, yp] = &case.states;
            ot_rho_choice(x, y, xp, yp, a_x, a_y).unwrap().0
        }
    }
}

/// Marginal acceptance rates, joint cell frequencies and the ordering of
/// `P(b_x = b_y)` across the simple acceptance couplings.
pub fn acceptance(exec: Execution) -> Vec<CheckOutcome> {
    let grid: Vec<(f64, f64)> = RATE_GRID
        .iter()
        .flat_map(|&a| RATE_GRID.iter().map(move |&b| (a, b)))
        .collect();
    let n_items = ACCEPT_CASES.len() * grid.len();
    let counts = map_indexed(exec, n_items, |i| {
        let case = &ACCEPT_CASES[i / grid.len()];
        let (a_x, a_y) = grid[i % grid.len()];
        let mut rng = rng_for(Group::Acceptance, i);
        let [x, y, xp, yp] = &case.states;
        let mut c = AcceptCounts::default();
        for _ in 0..N_DRAWS {
            let d = couple_accept(case.kind, x, y, xp, yp, a_x, a_y, &mut rng)?;
            c.x += d.accept_x as usize;
            c.y += d.accept_y as usize;
            c.both += (d.accept_x && d.accept_y) as usize;
            c.neither += (!d.accept_x && !d.accept_y) as usize;
        }
        Ok::<_, Error>(c)
    });
    let counts: Vec<AcceptCounts> = match counts.into_iter().collect::<Result<Vec<_>>>() {
        Ok(c) => c,
        Err(e) => return vec![failed(Group::Acceptance, "acceptance-battery", e)],
    };

    let interior = |a: f64| a > 0.0 && a < 1.0;
    let margin_tests = grid
        .iter()
        .map(|(a, b)| interior(*a) as usize + interior(*b) as usize)
        .sum::<usize>()
        * ACCEPT_CASES.len();
    let z_margin = bonferroni_z(ALPHA, margin_tests);
    let cell_tests = grid.len() * 4 * ACCEPT_CASES.len();
    let z_cell = bonferroni_z(ALPHA, cell_tests);
    let n = N_DRAWS;

    let mut out = Vec::new();
    for (ci, case) in ACCEPT_CASES.iter().enumerate() {
        let mut worst_margin: f64 = 0.0;
        let mut worst_cell: f64 = 0.0;
        let mut exact_ok = true;
        for (gi, &(a_x, a_y)) in grid.iter().enumerate() {
            let c = counts[ci * grid.len() + gi];
            for (hits, a) in [(c.x, a_x), (c.y, a_y)] {
                if interior(a) {
                    worst_margin = worst_margin.max(binomial_z(hits, n, a).abs());
                } else {
                    exact_ok &= hits == if a == 1.0 { n } else { 0 };
                }
            }
            let rho = realized_rho(case, a_x, a_y);
            let cells = [
                (c.both, rho),
                (c.x - c.both, a_x - rho),
                (c.y - c.both, a_y - rho),
                (c.neither, 1.0 - a_x - a_y + rho),
            ];
            for (hits, p) in cells {
                let p = p.clamp(0.0, 1.0);
                let z = binomial_z(hits, n, p);
                // Cells with analytic probability 0 or 1 must be exact.
                if p <= 1e-12 || p >= 1.0 - 1e-12 {
                    exact_ok &= (hits as f64 / n as f64 - p).abs() < 1e-9;
                } else {
                    worst_cell = worst_cell.max(z.abs());
                }
            }
        }
        out.push(outcome(
            Group::Acceptance,
            format!("acceptance-margins/{}", case.label),
            worst_margin <= z_margin && exact_ok,
            format!("max |z|={worst_margin:.2} crit={z_margin:.2} degenerate exact={exact_ok}"),
        ));
        out.push(outcome(
            Group::Acceptance,
            format!("joint-cells/{}", case.label),
            worst_cell <= z_cell && exact_ok,
            format!("max |z|={worst_cell:.2} crit={z_cell:.2}"),
        ));
    }

    // Ordering of P(b_x = b_y): common ≥ independent ≥ antithetic.
    let agree = |ci: usize, gi: usize| {
        let c = counts[ci * grid.len() + gi];
        (c.both + c.neither) as f64 / n as f64
    };
    let mut violations = Vec::new();
    let mut separated = 0;
    for (gi, &(a_x, a_y)) in grid.iter().enumerate() {
        let analytic = |ci: usize| {
            let rho = realized_rho(&ACCEPT_CASES[ci], a_x, a_y);
            1.0 - a_x - a_y + 2.0 * rho
        };
        for (hi_idx, lo_idx) in [(0usize, 1usize), (1, 2)] {
            let (ph, pl) = (agree(hi_idx, gi), agree(lo_idx, gi));
            let se = |p: f64| (p * (1.0 - p) / n as f64).sqrt();
            if analytic(hi_idx) - analytic(lo_idx) > 0.05 {
                separated += 1;
                if ph - SE_BAND * se(ph) <= pl + SE_BAND * se(pl) {
                    violations.push(format!("({a_x},{a_y})"));
                }
            } else {
                let slack = z_cell * (se(ph).powi(2) + se(pl).powi(2)).sqrt();
                if ph < pl - slack {
                    violations.push(format!("({a_x},{a_y})"));
                }
            }
        }
    }
    out.push(outcome(
        Group::Acceptance,
        "agreement-ordering",
        violations.is_empty(),
        format!(
            "{separated} separated comparisons, violations: [{}]",
            violations.join(" ")
        ),
    ));

    // Worked examples at the stated 3-SE band.
    let mut rng = rng_for(Group::Acceptance, 50_000);
    let (a_x, a_y, rho) = (0.7, 0.5, 0.35);
    let mut cells = [0usize; 4];
    for _ in 0..n {
        match sample_uniform_pair(AcceptanceKind::Common, Some(rho), a_x, a_y, &mut rng) {
            Ok((u, v)) => cells[((u <= a_x) as usize) * 2 + (v <= a_y) as usize] += 1,
            Err(e) => {
                out.push(failed(Group::Acceptance, "rho-target-example", e));
                return out;
            }
        }
    }
    let expected = [1.0 - a_x - a_y + rho, a_y - rho, a_x - rho, rho];
    let zs: Vec<f64> = cells
        .iter()
        .zip(expected)
        .map(|(h, p)| binomial_z(*h, n, p))
        .collect();
    out.push(outcome(
        Group::Acceptance,
        "rho-target-example",
        zs.iter().all(|z| z.abs() <= SE_BAND),
        format!("cell z = {zs:.2?}"),
    ));
    out
}

// ---------------------------------------------------------------------------
// residuals
// ---------------------------------------------------------------------------

/// Component laws of each maximal coupling against the quadrature oracle.
pub fn residuals(exec: Execution) -> Vec<CheckOutcome> {
    let n_tests = 3 * ProposalKind::MAXIMAL.len() + 1;
    let p_min = ALPHA / n_tests as f64;
    let d = 3;
    let sd = 1.0;
    let x = [0.2, -0.4, 1.0];
    let y = [1.1, 0.6, 0.3];

    let mut out = map_indexed(exec, ProposalKind::MAXIMAL.len(), |i| {
        let kind = ProposalKind::MAXIMAL[i];
        let name = format!("components/{kind}");
        let mut rng = rng_for(Group::Residuals, i);
        let g = pair_geometry(&x, &y).unwrap();
        let (x1, y1) = (dot(&g.e, &x), dot(&g.e, &y));
        let spec = ProposalCouplingSpec::new(kind, sd);
        let (mut meet, mut xr, mut yr) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..N_DRAWS {
            let p = match sample_proposal(&spec, &x, &y, &mut rng) {
                Ok(p) => p,
                Err(e) => return failed(Group::Residuals, name, e),
            };
            if p.proposed_meet {
                meet.push(dot(&g.e, &p.x_prop));
            } else {
                xr.push(dot(&g.e, &p.x_prop));
                yr.push(dot(&g.e, &p.y_prop));
            }
        }
        let mut ps = Vec::new();
        for (side, data) in [
            (ResidualSide::Meet, &meet),
            (ResidualSide::XResidual, &xr),
            (ResidualSide::YResidual, &yr),
        ] {
            let oracle = ResidualOracle::new(x1, y1, sd, side).unwrap();
            ps.push(
                ks_statistic(data, oracle.cumulative())
                    .map(|r| r.1)
                    .unwrap_or(0.0),
            );
        }
        let _ = d;
        outcome(
            Group::Residuals,
            name,
            ps.iter().all(|p| *p > p_min),
            format!(
                "meet p={:.3} x-residual p={:.3} y-residual p={:.3} (threshold {p_min:.1e})",
                ps[0], ps[1], ps[2]
            ),
        )
    });

    // Transport map pushes the x residual onto the y residual.
    let mut rng = rng_for(Group::Residuals, 100);
    let (x1, y1) = (-0.3, 0.9);
    let mut mapped = Vec::with_capacity(N_DRAWS);
    for _ in 0..N_DRAWS {
        let v = rejection_residual_sampler(
            x1,
            y1,
            sd,
            ResidualSide::XResidual,
            DEFAULT_REJECTION_CAP,
            &mut rng,
        );
        match v.and_then(|v| ot_transport_map(v, x1, y1, sd)) {
            Ok(t) => mapped.push(t),
            Err(e) => {
                out.push(failed(Group::Residuals, "transport-pushforward", e));
                return out;
            }
        }
    }
    let oracle = ResidualOracle::new(x1, y1, sd, ResidualSide::YResidual).unwrap();
    let (_, p) = ks_statistic(&mapped, oracle.cumulative()).unwrap();
    out.push(outcome(
        Group::Residuals,
        "transport-pushforward",
        p > p_min,
        format!("p={p:.3} (threshold {p_min:.1e})"),
    ));
    out
}

// ---------------------------------------------------------------------------
// structural
// ---------------------------------------------------------------------------

const IDENTITY_TOL: f64 = 1e-12;

fn fuzz_state(rng: &mut StreamRng) -> (Vec<f64>, Vec<f64>, f64) {
    let d = rng.random_range(1..=8usize);
    let sd = 0.1 + 2.0 * rng.random::<f64>();
    let scale = 0.05 + 3.0 * rng.random::<f64>();
    let x = normal_vec(rng, d, scale);
    let y = normal_vec(rng, d, scale);
    (x, y, sd)
}

/// Per-draw reflection identity `η = (I − 2eeᵀ) ξ` on non-meeting draws of
/// `sampler`, over random states.
pub fn reflection_identity_check<F>(name: &str, draws: usize, seed: u64, sampler: F) -> CheckOutcome
where
    F: Fn(&[f64], &[f64], f64, &mut StreamRng) -> Result<ProposalPair>,
{
    let mut rng = stream_rng(seed);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..draws {
        let (x, y, sd) = fuzz_state(&mut rng);
        let p = match sampler(&x, &y, sd, &mut rng) {
            Ok(p) => p,
            Err(e) => return failed(Group::Structural, name, e),
        };
        if p.proposed_meet {
            continue;
        }
        let g = pair_geometry(&x, &y).unwrap();
        let xi: Vec<f64> = p.x_prop.iter().zip(&x).map(|(a, b)| a - b).collect();
        let eta: Vec<f64> = p.y_prop.iter().zip(&y).map(|(a, b)| a - b).collect();
        let refl = reflect(&xi, &g.e).unwrap();
        let err = refl
            .iter()
            .zip(&eta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        checked += 1;
    }
    outcome(
        Group::Structural,
        name,
        worst <= IDENTITY_TOL,
        format!("{checked} non-meeting draws, max error {worst:.2e}"),
    )
}

fn shared_perp_check(kind: ProposalKind, index: usize) -> CheckOutcome {
    let name = format!("shared-orthogonal/{kind}");
    let mut rng = rng_for(Group::Structural, index);
    let mut worst: f64 = 0.0;
    for _ in 0..N_DRAWS {
        let (x, y, sd) = fuzz_state(&mut rng);
        let split = match kind {
            ProposalKind::MaxSemiIndependent => {
                split_max_semi_independent(&x, &y, sd, DEFAULT_REJECTION_CAP, &mut rng)
            }
            ProposalKind::MaxOptimalTransport => split_max_ot(&x, &y, sd, &mut rng),
            _ => split_max_reflection(&x, &y, sd, &mut rng),
        };
        let split = match split {
            Ok(s) => s,
            Err(e) => return failed(Group::Structural, name, e),
        };
        if !split.x_perp.bitwise_eq(&split.y_perp) {
            return outcome(
                Group::Structural,
                name,
                false,
                "orthogonal parts differ".into(),
            );
        }
        let p = split.assemble();
        if p.proposed_meet != (split.x1 == split.y1) {
            return outcome(Group::Structural, name, false, "meet flag mismatch".into());
        }
        let diff: Vec<f64> = p
            .y_prop
            .iter()
            .zip(p.x_prop.iter())
            .map(|(a, b)| a - b)
            .collect();
        let perp = orthogonal_part(&diff, &split.geometry.e).unwrap();
        worst = worst.max(perp.iter().fold(0.0f64, |m, c| m.max(c.abs())));
    }
    outcome(
        Group::Structural,
        name,
        worst <= IDENTITY_TOL,
        format!("bitwise shared; max |(I - ee')(y' - x')| = {worst:.2e}"),
    )
}

fn ot_monotone_check(index: usize) -> CheckOutcome {
    let name = "transport-monotone";
    let mut rng = rng_for(Group::Structural, index);
    for _ in 0..10 {
        let (x, y, sd) = fuzz_state(&mut rng);
        let mut pairs = Vec::with_capacity(N_DRAWS / 10);
        for _ in 0..N_DRAWS / 10 {
            match split_max_ot(&x, &y, sd, &mut rng) {
                Ok(s) if s.x1 != s.y1 => pairs.push((s.x1, s.y1)),
                Ok(_) => {}
                Err(e) => return failed(Group::Structural, name, e),
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[1].1 < w[0].1) {
            return outcome(
                Group::Structural,
                name,
                false,
                format!("order reversed at x1'={} / {}", w[0].0, w[1].0),
            );
        }
    }
    outcome(
        Group::Structural,
        name,
        true,
        "pairs sorted by x1' have sorted y1'".into(),
    )
}

fn simple_identity_check(index: usize) -> CheckOutcome {
    let name = "simple-increments";
    let mut rng = rng_for(Group::Structural, index);
    for _ in 0..N_DRAWS / 10 {
        let (x, y, sd) = fuzz_state(&mut rng);
        let d = x.len();
        let (xi, eta) =
            simple_increments(ProposalKind::Synchronous, None, d, sd, &mut rng).unwrap();
        if !xi.bitwise_eq(&eta) {
            return outcome(
                Group::Structural,
                name,
                false,
                "synchronous increments differ".into(),
            );
        }
        let (xi, eta) =
            simple_increments(ProposalKind::FullReflection, None, d, sd, &mut rng).unwrap();
        if xi.iter().zip(eta.iter()).any(|(a, b)| *b != -*a) {
            return outcome(
                Group::Structural,
                name,
                false,
                "full reflection is not -xi".into(),
            );
        }
        let g = pair_geometry(&x, &y).unwrap();
        let (xi, eta) =
            simple_increments(ProposalKind::Reflection, Some(&g.e), d, sd, &mut rng).unwrap();
        if (xi.norm() - eta.norm()).abs() > IDENTITY_TOL {
            return outcome(
                Group::Structural,
                name,
                false,
                "reflection changed the norm".into(),
            );
        }
    }
    outcome(
        Group::Structural,
        name,
        true,
        "synchronous, full and plain reflection hold".into(),
    )
}

/// Deterministic per-draw identities of the proposal couplings.
pub fn structural(exec: Execution) -> Vec<CheckOutcome> {
    let jobs = 7;
    map_indexed(exec, jobs, |i| match i {
        0 => reflection_identity_check(
            "reflection-identity/max-reflection",
            N_DRAWS,
            stream_seed(SUITE_SEED, Group::Structural.id(), 0),
            |x, y, sd, rng| {
                sample_proposal(
                    &ProposalCouplingSpec::new(ProposalKind::MaxReflection, sd),
                    x,
                    y,
                    rng,
                )
            },
        ),
        1 => reflection_identity_check(
            "reflection-identity/reflection",
            N_DRAWS,
            stream_seed(SUITE_SEED, Group::Structural.id(), 1),
            |x, y, sd, rng| {
                sample_proposal(
                    &ProposalCouplingSpec::new(ProposalKind::Reflection, sd),
                    x,
                    y,
                    rng,
                )
            },
        ),
        2 => shared_perp_check(ProposalKind::MaxSemiIndependent, 2),
        3 => shared_perp_check(ProposalKind::MaxOptimalTransport, 3),
        4 => shared_perp_check(ProposalKind::MaxReflection, 4),
        5 => ot_monotone_check(5),
        _ => simple_identity_check(6),
    })
}

// ---------------------------------------------------------------------------
// sticky
// ---------------------------------------------------------------------------

pub const STICKY_STEPS: u64 = 10_000;

/// Once equal, chains stay bitwise equal, for every coupling combination.
pub fn sticky(exec: Execution) -> Vec<CheckOutcome> {
    let combos: Vec<(ProposalKind, AcceptanceKind)> = ProposalKind::ALL
        .iter()
        .flat_map(|p| AcceptanceKind::ALL.iter().map(move |a| (*p, *a)))
        .collect();
    let results = map_indexed(exec, combos.len(), |i| {
        let (p, a) = combos[i];
        let spec = KernelSpec::standard_normal(3, DEFAULT_ELL, p, a);
        let mut rng = rng_for(Group::Sticky, i);
        let x: Point = normal_vec(&mut rng, 3, 1.0).into();
        let y: Point = normal_vec(&mut rng, 3, 1.0).into();
        // One run started together, one started apart.
        for start in [
            CoupledState::new(x.clone(), x.clone()),
            CoupledState::new(x, y),
        ] {
            let mut st = start;
            let mut was_met = st.met;
            for _ in 0..STICKY_STEPS {
                st = coupled_step(&st, &spec, &mut rng)?;
                if st.met != st.x.bitwise_eq(&st.y) {
                    return Ok(Some(format!("{p}+{a}: met flag out of sync at t={}", st.t)));
                }
                if was_met && !st.met {
                    return Ok(Some(format!("{p}+{a}: chains separated at t={}", st.t)));
                }
                was_met = st.met;
            }
        }
        Ok::<_, Error>(None)
    });
    let mut problems = Vec::new();
    for r in results {
        match r {
            Ok(Some(msg)) => problems.push(msg),
            Ok(None) => {}
            Err(e) => problems.push(e.to_string()),
        }
    }
    vec![outcome(
        Group::Sticky,
        "faithful-after-meeting",
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} coupling combinations, {STICKY_STEPS} steps each",
                combos.len()
            )
        } else {
            problems.join("; ")
        },
    )]
}

// ---------------------------------------------------------------------------
// bounds
// ---------------------------------------------------------------------------

pub const BOUND_TOL: f64 = 1e-12;
pub const BOUND_SDS: [f64; 4] = [0.1, 0.5, 1.0, 3.0];

/// The 200-point `(r, sd)` grid: 50 separations per sd, starting at 0.
pub fn bound_grid() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for sd in BOUND_SDS {
        for k in 0..50 {
            let r = if k == 0 {
                0.0
            } else {
                sd * 10f64.powf(-2.0 + 3.5 * (k - 1) as f64 / 48.0)
            };
            out.push((r, sd));
        }
    }
    out
}

/// Lower ≤ exact ≤ min(Markov, Chernoff) on the grid, by direct evaluation.
pub fn bounds() -> Vec<CheckOutcome> {
    let grid = bound_grid();
    let mut lower_bad = Vec::new();
    let mut upper_bad = Vec::new();
    for &(r, sd) in &grid {
        let exact = meeting_probability(r, sd).unwrap();
        let lower = meeting_prob_lower_bound(r, sd).unwrap();
        if lower > exact + BOUND_TOL || (r > 0.0 && lower >= exact) {
            lower_bad.push(format!("r={r} sd={sd}"));
        }
        if r == 0.0 && (exact != 1.0 || lower != 1.0) {
            lower_bad.push("r=0 not exact".into());
        }
        let mut uppers = vec![
            meeting_prob_upper_markov(r, sd).unwrap(),
            meeting_prob_upper_chernoff_best(r, sd).unwrap(),
        ];
        for s in [0.05, 0.25, 0.45] {
            uppers.push(meeting_prob_upper_chernoff(r, sd, s).unwrap());
        }
        if uppers.iter().any(|u| exact > u + BOUND_TOL) {
            upper_bad.push(format!("r={r} sd={sd}"));
        }
    }
    vec![
        outcome(
            Group::Bounds,
            "lower-bound",
            lower_bad.is_empty(),
            format!(
                "{} grid points; failures: [{}]",
                grid.len(),
                lower_bad.join(", ")
            ),
        ),
        outcome(
            Group::Bounds,
            "upper-bounds",
            upper_bad.is_empty(),
            format!(
                "{} grid points; failures: [{}]",
                grid.len(),
                upper_bad.join(", ")
            ),
        ),
    ]
}

// ---------------------------------------------------------------------------
// pushforward
// ---------------------------------------------------------------------------

pub const PUSHFORWARD_VARIANCES: [f64; 3] = [0.5, 2.0, 1.5];

/// A maximal coupling of `N(0, I)` and `N(μ, I)` mapped through
/// `z ↦ x + Σ^{1/2} z` couples `N(x, Σ)` and `N(y, Σ)` maximally.
pub fn pushforward(exec: Execution) -> Vec<CheckOutcome> {
    let x = [0.3, -0.2, 1.0];
    let y = [1.1, 0.9, 0.2];
    let root: Vec<f64> = PUSHFORWARD_VARIANCES.iter().map(|v| v.sqrt()).collect();
    let mu: Vec<f64> = (0..3).map(|i| (y[i] - x[i]) / root[i]).collect();
    let zero = [0.0; 3];
    let to_state = |z: &[f64]| -> Vec<f64> { (0..3).map(|i| x[i] + root[i] * z[i]).collect() };

    let mut rng = rng_for(Group::Pushforward, 0);
    let mut hits = 0;
    let mut bitwise_ok = true;
    let mut cols: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(N_DRAWS)).collect();
    for _ in 0..N_DRAWS {
        let p = match sample_max_independent(&zero, &mu, 1.0, DEFAULT_REJECTION_CAP, &mut rng) {
            Ok(p) => p,
            Err(e) => return vec![failed(Group::Pushforward, "mahalanobis-meet-rate", e)],
        };
        let xs = to_state(&p.x_prop);
        let ys = to_state(&p.y_prop);
        if p.proposed_meet {
            hits += 1;
            bitwise_ok &= xs.iter().zip(&ys).all(|(a, b)| a.to_bits() == b.to_bits());
        }
        for i in 0..3 {
            cols[i].push(xs[i]);
            cols[3 + i].push(ys[i]);
        }
    }
    let p_exact = chi2_1_ccdf(dot(&mu, &mu) / 4.0).unwrap();
    let z = binomial_z(hits, N_DRAWS, p_exact);

    let p_min = ALPHA / 6.0;
    let pvals = map_indexed(exec, 6, |k| {
        let i = k % 3;
        let mean = if k < 3 { x[i] } else { y[i] };
        ks_statistic(&cols[k], normal_cdf_fn(mean, root[i]))
            .unwrap()
            .1
    });
    vec![
        outcome(
            Group::Pushforward,
            "mahalanobis-meet-rate",
            z.abs() <= SE_BAND && bitwise_ok,
            format!(
                "rate={:.5} exact={p_exact:.5} z={z:.2}",
                hits as f64 / N_DRAWS as f64
            ),
        ),
        outcome(
            Group::Pushforward,
            "pushforward-margins",
            pvals.iter().all(|p| *p > p_min),
            format!(
                "min p={:.3} (threshold {p_min:.1e})",
                pvals.iter().cloned().fold(1.0, f64::min)
            ),
        ),
    ]
}
