//! Couplings of the RWM proposals `x' ~ N(x, σ² I)` and `y' ~ N(y, σ² I)`.
//!
//! Four simple couplings (independent, synchronous, reflection,
//! full reflection), four maximal couplings that differ only in their
//! residuals (independent, semi-independent, optimal transport, reflection)
//! and a hybrid that switches between maximal reflection and a simple
//! coupling depending on the current separation.
//!
//! All `d`-dimensional maximal couplings work the same way: the `e`
//! components are drawn from a one-dimensional maximal coupling and the
//! orthogonal components are filled in afterwards. Meeting is exact: when the
//! one-dimensional draw meets, `y'` is a copy of `x'`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::gauss::{std_normal_interval, std_normal_pdf};
use crate::geom::{check_dims, orthogonal_part, pair_geometry, reflect, PairGeometry, Point};
use crate::seeding::{normal_vec, open_unit, std_normal};

pub const DEFAULT_REJECTION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProposalKind {
    Independent,
    Synchronous,
    Reflection,
    FullReflection,
    MaxIndependent,
    MaxSemiIndependent,
    MaxOptimalTransport,
    MaxReflection,
    Hybrid,
}

impl ProposalKind {
    pub const ALL: [ProposalKind; 9] = [
        ProposalKind::Independent,
        ProposalKind::Synchronous,
        ProposalKind::Reflection,
        ProposalKind::FullReflection,
        ProposalKind::MaxIndependent,
        ProposalKind::MaxSemiIndependent,
        ProposalKind::MaxOptimalTransport,
        ProposalKind::MaxReflection,
        ProposalKind::Hybrid,
    ];

    pub const MAXIMAL: [ProposalKind; 4] = [
        ProposalKind::MaxReflection,
        ProposalKind::MaxSemiIndependent,
        ProposalKind::MaxOptimalTransport,
        ProposalKind::MaxIndependent,
    ];

    pub fn is_maximal(self) -> bool {
        Self::MAXIMAL.contains(&self)
    }

    /// Couplings that never propose a meeting from `x ≠ y`.
    pub fn is_simple(self) -> bool {
        matches!(
            self,
            ProposalKind::Independent
                | ProposalKind::Synchronous
                | ProposalKind::Reflection
                | ProposalKind::FullReflection
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::Independent => "independent",
            ProposalKind::Synchronous => "synchronous",
            ProposalKind::Reflection => "reflection",
            ProposalKind::FullReflection => "full-reflection",
            ProposalKind::MaxIndependent => "max-independent",
            ProposalKind::MaxSemiIndependent => "max-semi-independent",
            ProposalKind::MaxOptimalTransport => "max-optimal-transport",
            ProposalKind::MaxReflection => "max-reflection",
            ProposalKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ProposalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProposalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "max-ot" | "max-transport" => Some(ProposalKind::MaxOptimalTransport),
                "max-semi" => Some(ProposalKind::MaxSemiIndependent),
                "crn" | "common" => Some(ProposalKind::Synchronous),
                _ => None,
            })
            .ok_or_else(|| domain(format!("unknown proposal coupling '{s}'")))
    }
}

/// Which proposal coupling to use and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalCouplingSpec {
    pub kind: ProposalKind,
    /// Proposal standard deviation `σ_d`.
    pub sd: f64,
    /// `r̄`: the hybrid uses maximal reflection while `r < r̄ / √d`.
    pub hybrid_cutoff: f64,
    /// Coupling used by the hybrid when the chains are far apart.
    pub hybrid_far_kind: ProposalKind,
    /// Iteration budget of the rejection loop in the one-dimensional
    /// maximal independent coupling.
    pub rejection_cap: u64,
}

impl ProposalCouplingSpec {
    pub fn new(kind: ProposalKind, sd: f64) -> Self {
        ProposalCouplingSpec {
            kind,
            sd,
            hybrid_cutoff: 1.0,
            hybrid_far_kind: ProposalKind::Reflection,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }

    pub fn hybrid(sd: f64, cutoff: f64) -> Self {
        ProposalCouplingSpec {
            hybrid_cutoff: cutoff,
            ..Self::new(ProposalKind::Hybrid, sd)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0) || !self.sd.is_finite() {
            return Err(domain(format!(
                "proposal sd must be positive, got {}",
                self.sd
            )));
        }
        if self.rejection_cap == 0 {
            return Err(domain("rejection cap must be positive"));
        }
        if self.kind == ProposalKind::Hybrid {
            if !(self.hybrid_cutoff > 0.0) {
                return Err(domain(format!(
                    "hybrid cutoff must be positive, got {}",
                    self.hybrid_cutoff
                )));
            }
            if self.hybrid_far_kind == ProposalKind::Hybrid {
                return Err(domain("hybrid far-coupling cannot itself be hybrid"));
            }
        }
        Ok(())
    }

    /// Label used in output tables, e.g. `hybrid-0.5`.
    pub fn label(&self) -> String {
        match self.kind {
            ProposalKind::Hybrid => format!("hybrid-{}", self.hybrid_cutoff),
            k => k.name().to_string(),
        }
    }
}

/// A coupled draw of proposals.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalPair {
    pub x_prop: Point,
    pub y_prop: Point,
    /// True exactly when `x_prop` and `y_prop` are bitwise equal.
    pub proposed_meet: bool,
}

impl ProposalPair {
    fn new(x_prop: Point, y_prop: Point) -> Self {
        let proposed_meet = x_prop.bitwise_eq(&y_prop);
        ProposalPair {
            x_prop,
            y_prop,
            proposed_meet,
        }
    }

    fn met(x_prop: Point) -> Self {
        ProposalPair {
            y_prop: x_prop.clone(),
            x_prop,
            proposed_meet: true,
        }
    }
}

/// A maximal-coupling draw before assembly: the `e` components of both
/// proposals and their orthogonal components.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitProposal {
    pub geometry: PairGeometry,
    pub x1: f64,
    pub y1: f64,
    pub x_perp: Point,
    pub y_perp: Point,
}

impl SplitProposal {
    fn shared(geometry: PairGeometry, x1: f64, y1: f64, perp: Point) -> Self {
        SplitProposal {
            geometry,
            x1,
            y1,
            y_perp: perp.clone(),
            x_perp: perp,
        }
    }

    pub fn assemble(&self) -> ProposalPair {
        let x_prop = self.geometry.compose(self.x1, &self.x_perp);
        if self.x1 == self.y1 {
            ProposalPair::met(x_prop)
        } else {
            let y_prop = self.geometry.compose(self.y1, &self.y_perp);
            ProposalPair::new(x_prop, y_prop)
        }
    }
}

fn shift(base: &[f64], inc: &[f64]) -> Point {
    base.iter()
        .zip(inc)
        .map(|(b, i)| b + i)
        .collect::<Vec<_>>()
        .into()
}

// ---------------------------------------------------------------------------
// Simple couplings
// ---------------------------------------------------------------------------

/// Increments `(ξ, η)` of a simple coupling. `e` is only read by
/// [`ProposalKind::Reflection`].
pub fn simple_increments<R: Rng + ?Sized>(
    kind: ProposalKind,
    e: Option<&[f64]>,
    dim: usize,
    sd: f64,
    rng: &mut R,
) -> Result<(Point, Point)> {
    let xi: Point = normal_vec(rng, dim, sd).into();
    let eta = match kind {
        ProposalKind::Independent => normal_vec(rng, dim, sd).into(),
        ProposalKind::Synchronous => xi.clone(),
        ProposalKind::FullReflection => xi.iter().map(|c| -c).collect::<Vec<_>>().into(),
        ProposalKind::Reflection => reflect(&xi, e.ok_or(Error::DegeneratePair)?)?,
        other => return Err(domain(format!("{other} is not a simple coupling"))),
    };
    Ok((xi, eta))
}

/// `ξ, η` iid `N(0, σ² I)`.
pub fn sample_independent<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    check_dims(x, y)?;
    let (xi, eta) = simple_increments(ProposalKind::Independent, None, x.len(), sd, rng)?;
    Ok(ProposalPair::new(shift(x, &xi), shift(y, &eta)))
}

/// Common random numbers: `η = ξ`.
pub fn sample_synchronous<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    check_dims(x, y)?;
    let (xi, eta) = simple_increments(ProposalKind::Synchronous, None, x.len(), sd, rng)?;
    Ok(ProposalPair::new(shift(x, &xi), shift(y, &eta)))
}

/// `η = (I − 2 e eᵀ) ξ`: reflection across the bisecting hyperplane.
pub fn sample_reflection<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    let g = pair_geometry(x, y)?;
    let (xi, eta) = simple_increments(ProposalKind::Reflection, Some(&g.e), x.len(), sd, rng)?;
    Ok(ProposalPair::new(shift(x, &xi), shift(y, &eta)))
}

/// `η = −ξ`.
pub fn sample_full_reflection<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    pair_geometry(x, y)?;
    let (xi, eta) = simple_increments(ProposalKind::FullReflection, None, x.len(), sd, rng)?;
    Ok(ProposalPair::new(shift(x, &xi), shift(y, &eta)))
}

// ---------------------------------------------------------------------------
// One-dimensional maximal couplings
// ---------------------------------------------------------------------------

/// `log q(to, z) − log q(from, z)` for `N(·, sd²)` densities.
fn log_density_ratio(z: f64, from: f64, to: f64, sd: f64) -> f64 {
    let a = (z - from) / sd;
    let b = (z - to) / sd;
    0.5 * (a * a - b * b)
}

/// First step shared by all one-dimensional maximal couplings: draw
/// `x' ~ N(x1, sd²)` and decide whether `y' = x'`. The comparison
/// `W q(x, x') ≤ q(y, x')` is done on the log scale.
fn propose_and_test<R: Rng + ?Sized>(x1: f64, y1: f64, sd: f64, rng: &mut R) -> (f64, bool) {
    let xp = x1 + sd * std_normal(rng);
    let w = open_unit(rng);
    (xp, w.ln() <= log_density_ratio(xp, x1, y1, sd))
}

/// Maximal coupling of `N(x1, sd²)` and `N(y1, sd²)` with independent
/// residuals, by rejection sampling.
pub fn sample_max_independent_1d<R: Rng + ?Sized>(
    x1: f64,
    y1: f64,
    sd: f64,
    rejection_cap: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (xp, meet) = propose_and_test(x1, y1, sd, rng);
    if meet {
        return Ok((xp, xp));
    }
    for _ in 0..rejection_cap {
        let yt = y1 + sd * std_normal(rng);
        let w = open_unit(rng);
        if w.ln() > log_density_ratio(yt, y1, x1, sd) {
            return Ok((xp, yt));
        }
    }
    Err(Error::RejectionCapExceeded { cap: rejection_cap })
}

/// Maximal coupling with reflected residuals: on non-meet `y' = y1 − (x' − x1)`.
pub fn sample_max_reflection_1d<R: Rng + ?Sized>(
    x1: f64,
    y1: f64,
    sd: f64,
    rng: &mut R,
) -> (f64, f64) {
    let (xp, meet) = propose_and_test(x1, y1, sd, rng);
    if meet {
        (xp, xp)
    } else {
        (xp, y1 - (xp - x1))
    }
}

/// Maximal coupling whose residuals are coupled by the monotone
/// (optimal transport) map.
pub fn sample_max_ot_1d<R: Rng + ?Sized>(
    x1: f64,
    y1: f64,
    sd: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (xp, meet) = propose_and_test(x1, y1, sd, rng);
    if meet {
        Ok((xp, xp))
    } else {
        Ok((xp, ot_transport_map(xp, x1, y1, sd)?))
    }
}

// ---------------------------------------------------------------------------
// Residual CDFs and the monotone transport map
//
// Work in standardized distance `s = |v − m| / sd` from the midpoint, on the
// side of the chain the residual belongs to. With `h = |y1 − x1| / (2 sd)`,
// the residual density is proportional to `φ(s − h) − φ(s + h)` for `s ≥ 0`,
// identically for both residuals.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct StdResidual {
    h: f64,
    mass: f64,
}

impl StdResidual {
    fn new(h: f64) -> Self {
        StdResidual {
            h,
            mass: std_normal_interval(-h, h),
        }
    }

    /// Mass at distance ≥ s.
    fn tail(&self, s: f64) -> f64 {
        std_normal_interval(s - self.h, s + self.h) / self.mass
    }

    /// Mass at distance in [0, s].
    fn head(&self, s: f64) -> f64 {
        let a = std_normal_interval(-self.h, s - self.h);
        let b = std_normal_interval(self.h, s + self.h);
        if a - b > 1e-3 * a {
            return ((a - b) / self.mass).max(0.0);
        }
        // the two intervals nearly cancel; integrate the density directly
        self.head_by_quadrature(s)
    }

    fn head_by_quadrature(&self, s: f64) -> f64 {
        let h = self.h;
        let integrand = |u: f64| std_normal_pdf(u - h) * -(-2.0 * u * h).exp_m1();
        let pieces = ((s * h.max(1.0)) / 0.5).ceil().max(1.0) as usize;
        let width = s / pieces as f64;
        let (nodes, weights) = gauss_legendre();
        let mut total = 0.0;
        for k in 0..pieces {
            let centre = (k as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(weights) {
                total += w * integrand(centre + 0.5 * width * x);
            }
        }
        (0.5 * width * total / self.mass).max(0.0)
    }

    fn density(&self, s: f64) -> f64 {
        (std_normal_pdf(s - self.h) - std_normal_pdf(s + self.h)) / self.mass
    }

    /// Solve `tail(s) = p` (equivalently `head(s) = q` with `q = 1 − p`),
    /// using whichever form is better conditioned.
    fn inverse_tail(&self, p: f64, q: f64) -> Result<f64> {
        let use_tail = p <= 0.5;
        // f(s) increasing in s, root where f(s) = 0
        let f = |s: f64| {
            if use_tail {
                p - self.tail(s)
            } else {
                self.head(s) - q
            }
        };

        let mut lo = 0.0;
        let mut hi = 1.0 + self.h;
        let mut expansions = 0;
        while f(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 64 {
                return Err(Error::NonConvergence(format!(
                    "no bracket for residual quantile p={p}, h={}",
                    self.h
                )));
            }
        }

        let mut iterations = 0;
        while hi - lo > 1e-15 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
            if iterations > 2200 {
                return Err(Error::NonConvergence(format!(
                    "bisection stalled for residual quantile p={p}, h={}",
                    self.h
                )));
            }
        }

        let s = 0.5 * (lo + hi);
        let slope = self.density(s);
        if slope > 0.0 {
            let polished = s - f(s) / slope;
            if polished >= lo && polished <= hi {
                return Ok(polished);
            }
        }
        Ok(s)
    }
}

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

struct ResidualFrame {
    m: f64,
    /// +1 when the x-residual lies below `m` (x1 < y1), −1 otherwise.
    orientation: f64,
    std: StdResidual,
}

impl ResidualFrame {
    fn new(x1: f64, y1: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(domain(format!("sd must be positive, got {sd}")));
        }
        if x1 == y1 {
            return Err(domain("residuals are empty when x1 == y1"));
        }
        let orientation = if x1 < y1 { 1.0 } else { -1.0 };
        Ok(ResidualFrame {
            m: 0.5 * (x1 + y1),
            orientation,
            std: StdResidual::new((y1 - x1).abs() / (2.0 * sd)),
        })
    }

    /// Standardized distance of `v` from `m` on the x side.
    fn x_side_distance(&self, v: f64, sd: f64) -> Result<f64> {
        let s = self.orientation * (self.m - v) / sd;
        if s < 0.0 {
            return Err(domain(format!(
                "{v} lies outside the support of the residual (boundary {})",
                self.m
            )));
        }
        Ok(s)
    }
}

/// CDF of the residual of `N(x1, sd²)` against `N(y1, sd²)`, i.e. the law of
/// `x'` given `x' ≠ y'` under any maximal coupling. Swap the arguments for the
/// `y` residual.
pub fn ot_residual_cdf(v: f64, x1: f64, y1: f64, sd: f64) -> Result<f64> {
    let frame = ResidualFrame::new(x1, y1, sd)?;
    let s = frame.x_side_distance(v, sd)?;
    Ok(if frame.orientation > 0.0 {
        frame.std.tail(s)
    } else {
        frame.std.head(s)
    })
}

/// Monotone transport map `t(x') = Φ_y⁻¹(Φ_x(x'))` from the x residual to the
/// y residual.
pub fn ot_transport_map(v: f64, x1: f64, y1: f64, sd: f64) -> Result<f64> {
    let frame = ResidualFrame::new(x1, y1, sd)?;
    let s = frame.x_side_distance(v, sd)?;
    // Φ_x(v) = tail(s). The image sits at distance t on the y side with
    // Φ_y = head(t) = tail(s), i.e. tail(t) = head(s).
    let p = frame.std.head(s);
    let q = frame.std.tail(s);
    let t = frame.std.inverse_tail(p, q)?;
    Ok(frame.m + frame.orientation * sd * t)
}

// ---------------------------------------------------------------------------
// d-dimensional maximal couplings
// ---------------------------------------------------------------------------

fn e_components(g: &PairGeometry, x: &[f64], y: &[f64]) -> (f64, f64) {
    (crate::geom::dot(&g.e, x), crate::geom::dot(&g.e, y))
}

/// Maximal coupling with independent residuals. The orthogonal components
/// are drawn independently for the two chains; on a meet `y'` copies `x'`.
pub fn split_max_independent<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rejection_cap: u64,
    rng: &mut R,
) -> Result<SplitProposal> {
    let geometry = pair_geometry(x, y)?;
    let (x1, y1) = e_components(&geometry, x, y);
    let (x1p, y1p) = sample_max_independent_1d(x1, y1, sd, rejection_cap, rng)?;
    let x_tilde = shift(x, &normal_vec(rng, x.len(), sd));
    let x_perp = orthogonal_part(&x_tilde, &geometry.e)?;
    if x1p == y1p {
        return Ok(SplitProposal::shared(geometry, x1p, y1p, x_perp));
    }
    let y_tilde = shift(y, &normal_vec(rng, y.len(), sd));
    let y_perp = orthogonal_part(&y_tilde, &geometry.e)?;
    Ok(SplitProposal {
        geometry,
        x1: x1p,
        y1: y1p,
        x_perp,
        y_perp,
    })
}

pub fn sample_max_independent<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rejection_cap: u64,
    rng: &mut R,
) -> Result<ProposalPair> {
    Ok(split_max_independent(x, y, sd, rejection_cap, rng)?.assemble())
}

fn shared_perp_around_midpoint<R: Rng + ?Sized>(
    g: &PairGeometry,
    sd: f64,
    rng: &mut R,
) -> Result<Point> {
    let z = shift(&g.m, &normal_vec(rng, g.dim(), sd));
    orthogonal_part(&z, &g.e)
}

/// Semi-independent residuals: independent `e` components, shared orthogonal
/// component drawn around the midpoint.
pub fn split_max_semi_independent<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rejection_cap: u64,
    rng: &mut R,
) -> Result<SplitProposal> {
    let geometry = pair_geometry(x, y)?;
    let (x1, y1) = e_components(&geometry, x, y);
    let (x1p, y1p) = sample_max_independent_1d(x1, y1, sd, rejection_cap, rng)?;
    let shared_perp = shared_perp_around_midpoint(&geometry, sd, rng)?;
    Ok(SplitProposal::shared(geometry, x1p, y1p, shared_perp))
}

pub fn sample_max_semi_independent<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rejection_cap: u64,
    rng: &mut R,
) -> Result<ProposalPair> {
    Ok(split_max_semi_independent(x, y, sd, rejection_cap, rng)?.assemble())
}

/// Optimal-transport residuals: on non-meet `y' = t(x'₁) e + x'_⊥`.
pub fn split_max_ot<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<SplitProposal> {
    let geometry = pair_geometry(x, y)?;
    let (x1, y1) = e_components(&geometry, x, y);
    let (x1p, y1p) = sample_max_ot_1d(x1, y1, sd, rng)?;
    let shared_perp = shared_perp_around_midpoint(&geometry, sd, rng)?;
    Ok(SplitProposal::shared(geometry, x1p, y1p, shared_perp))
}

pub fn sample_max_ot<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    Ok(split_max_ot(x, y, sd, rng)?.assemble())
}

/// Reflection residuals: on non-meet `η = (I − 2 e eᵀ) ξ`.
pub fn split_max_reflection<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<SplitProposal> {
    let geometry = pair_geometry(x, y)?;
    let (x1, y1) = e_components(&geometry, x, y);
    let (x1p, y1p) = sample_max_reflection_1d(x1, y1, sd, rng);
    let zeta = normal_vec(rng, x.len(), sd);
    let zeta_perp = orthogonal_part(&zeta, &geometry.e)?;
    let shared_perp: Point = geometry
        .m_perp
        .iter()
        .zip(zeta_perp.iter())
        .map(|(m, z)| m + z)
        .collect::<Vec<_>>()
        .into();
    Ok(SplitProposal::shared(geometry, x1p, y1p, shared_perp))
}

pub fn sample_max_reflection<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    sd: f64,
    rng: &mut R,
) -> Result<ProposalPair> {
    Ok(split_max_reflection(x, y, sd, rng)?.assemble())
}

/// Maximal reflection while `r < r̄ / √d`, the configured far coupling
/// otherwise.
pub fn sample_hybrid<R: Rng + ?Sized>(
    x: &[f64],
    y: &[f64],
    spec: &ProposalCouplingSpec,
    rng: &mut R,
) -> Result<ProposalPair> {
    let g = pair_geometry(x, y)?;
    let threshold = spec.hybrid_cutoff / (x.len() as f64).sqrt();
    if g.r < threshold {
        sample_max_reflection(x, y, spec.sd, rng)
    } else {
        let far = ProposalCouplingSpec {
            kind: spec.hybrid_far_kind,
            ..*spec
        };
        sample_proposal(&far, x, y, rng)
    }
}

/// Dispatch on `spec.kind`.
pub fn sample_proposal<R: Rng + ?Sized>(
    spec: &ProposalCouplingSpec,
    x: &[f64],
    y: &[f64],
    rng: &mut R,
) -> Result<ProposalPair> {
    let sd = spec.sd;
    match spec.kind {
        ProposalKind::Independent => sample_independent(x, y, sd, rng),
        ProposalKind::Synchronous => sample_synchronous(x, y, sd, rng),
        ProposalKind::Reflection => sample_reflection(x, y, sd, rng),
        ProposalKind::FullReflection => sample_full_reflection(x, y, sd, rng),
        ProposalKind::MaxIndependent => sample_max_independent(x, y, sd, spec.rejection_cap, rng),
        ProposalKind::MaxSemiIndependent => {
            sample_max_semi_independent(x, y, sd, spec.rejection_cap, rng)
        }
        ProposalKind::MaxOptimalTransport => sample_max_ot(x, y, sd, rng),
        ProposalKind::MaxReflection => sample_max_reflection(x, y, sd, rng),
        ProposalKind::Hybrid => sample_hybrid(x, y, spec, rng),
    }
}
