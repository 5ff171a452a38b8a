//! Couplings of the Metropolis accept/reject step.
//!
//! With acceptance rates `a_x`, `a_y` every coupling of the two Bernoulli
//! decisions is fixed by `ρ = P(both accept)`, which ranges over
//! `[max(0, a_x + a_y − 1), min(a_x, a_y)]`. Common uniforms attain the upper
//! end, antithetic uniforms the lower end.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::geom::{check_dims, squared_distance};
use crate::seeding::open_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AcceptanceKind {
    /// `V = U`
    Common,
    IndependentUV,
    /// `V = 1 − U`
    Antithetic,
    /// `ρ` chosen to minimize the expected squared distance after the step.
    OptimalTransport,
}

impl AcceptanceKind {
    pub const ALL: [AcceptanceKind; 4] = [
        AcceptanceKind::Common,
        AcceptanceKind::IndependentUV,
        AcceptanceKind::Antithetic,
        AcceptanceKind::OptimalTransport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AcceptanceKind::Common => "common",
            AcceptanceKind::IndependentUV => "independent",
            AcceptanceKind::Antithetic => "antithetic",
            AcceptanceKind::OptimalTransport => "optimal-transport",
        }
    }
}

impl fmt::Display for AcceptanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcceptanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "independent-uv" | "indep" => Some(AcceptanceKind::IndependentUV),
                "ot" => Some(AcceptanceKind::OptimalTransport),
                _ => None,
            })
            .ok_or_else(|| domain(format!("unknown acceptance coupling '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptDecision {
    pub accept_x: bool,
    pub accept_y: bool,
    pub u: f64,
    pub v: f64,
}

/// `min(1, π(prop) / π(cur))` from log densities.
pub fn mh_ratio(log_pi_cur: f64, log_pi_prop: f64) -> Result<f64> {
    if log_pi_cur == f64::NEG_INFINITY || log_pi_cur.is_nan() {
        return Err(domain("current state has zero target density"));
    }
    if log_pi_prop == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if log_pi_prop.is_nan() {
        return Err(domain("proposal log-density is NaN"));
    }
    Ok((log_pi_prop - log_pi_cur).min(0.0).exp())
}

fn check_rate(a: f64) -> Result<()> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(domain(format!("acceptance rate {a} outside [0, 1]")))
    }
}

/// Feasible range of `P(both accept)`.
pub fn rho_bounds(a_x: f64, a_y: f64) -> Result<(f64, f64)> {
    check_rate(a_x)?;
    check_rate(a_y)?;
    // `1 − max` is exact whenever the lower bound can be positive.
    let (small, large) = if a_x <= a_y { (a_x, a_y) } else { (a_y, a_x) };
    Ok(((small - (1.0 - large)).max(0.0), small))
}

/// Draw uniforms `(u, v)` with uniform margins.
///
/// Without `rho_target` the pair is produced by `kind` directly. With it, the
/// 2×2 cell of `(u ≤ a_x, v ≤ a_y)` is drawn first with probabilities
/// `(ρ, a_x − ρ, a_y − ρ, 1 − a_x − a_y + ρ)` and the uniforms are then drawn
/// inside their cells.
pub fn sample_uniform_pair<R: Rng + ?Sized>(
    kind: AcceptanceKind,
    rho_target: Option<f64>,
    a_x: f64,
    a_y: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (lo, hi) = rho_bounds(a_x, a_y)?;
    if let Some(rho) = rho_target {
        // Tolerate rounding in the caller's arithmetic, nothing more.
        let slack = 4.0 * f64::EPSILON;
        if !(rho >= lo - slack && rho <= hi + slack) {
            return Err(domain(format!(
                "rho {rho} outside feasible range [{lo}, {hi}]"
            )));
        }
        return Ok(sample_cells(rho.clamp(lo, hi), a_x, a_y, rng));
    }
    let u = open_unit(rng);
    let v = match kind {
        AcceptanceKind::Common => u,
        AcceptanceKind::Antithetic => 1.0 - u,
        AcceptanceKind::IndependentUV => open_unit(rng),
        AcceptanceKind::OptimalTransport => {
            return Err(domain("optimal-transport acceptance needs a target rho"))
        }
    };
    Ok((u, v))
}

fn uniform_in_cell<R: Rng + ?Sized>(accept: bool, a: f64, rng: &mut R) -> f64 {
    if accept {
        a * open_unit(rng)
    } else {
        loop {
            let u = 1.0 - (1.0 - a) * open_unit(rng);
            if u > a {
                return u;
            }
        }
    }
}

fn sample_cells<R: Rng + ?Sized>(rho: f64, a_x: f64, a_y: f64, rng: &mut R) -> (f64, f64) {
    let p11 = rho;
    let p10 = (a_x - rho).max(0.0);
    let p01 = (a_y - rho).max(0.0);
    let w = open_unit(rng);
    let (mut bx, mut by) = if w < p11 {
        (true, true)
    } else if w < p11 + p10 {
        (true, false)
    } else if w < p11 + p10 + p01 {
        (false, true)
    } else {
        (false, false)
    };
    // Degenerate margins force the decision regardless of rounding above.
    if a_x >= 1.0 || a_x <= 0.0 {
        bx = a_x >= 1.0;
    }
    if a_y >= 1.0 || a_y <= 0.0 {
        by = a_y >= 1.0;
    }
    (uniform_in_cell(bx, a_x, rng), uniform_in_cell(by, a_y, rng))
}

/// `ρ` minimizing `E‖X − Y‖²` after the step, and whether it is the upper
/// bound.
pub fn ot_rho_choice(
    x: &[f64],
    y: &[f64],
    x_prop: &[f64],
    y_prop: &[f64],
    a_x: f64,
    a_y: f64,
) -> Result<(f64, bool)> {
    check_dims(x, y)?;
    check_dims(x, x_prop)?;
    check_dims(x, y_prop)?;
    let (lo, hi) = rho_bounds(a_x, a_y)?;
    let c = ot_rho_coefficient(x, y, x_prop, y_prop);
    if c > 0.0 {
        Ok((lo, false))
    } else {
        Ok((hi, true))
    }
}

/// Coefficient of `ρ` in the expected post-step squared distance.
pub fn ot_rho_coefficient(x: &[f64], y: &[f64], x_prop: &[f64], y_prop: &[f64]) -> f64 {
    squared_distance(x_prop, y_prop) - squared_distance(x_prop, y) - squared_distance(x, y_prop)
        + squared_distance(x, y)
}

/// Couple the two accept/reject decisions for rates `a_x`, `a_y`.
#[allow(clippy::too_many_arguments)]
pub fn couple_accept<R: Rng + ?Sized>(
    kind: AcceptanceKind,
    x: &[f64],
    y: &[f64],
    x_prop: &[f64],
    y_prop: &[f64],
    a_x: f64,
    a_y: f64,
    rng: &mut R,
) -> Result<AcceptDecision> {
    let (u, v) = match kind {
        AcceptanceKind::OptimalTransport => {
            let (rho, _) = ot_rho_choice(x, y, x_prop, y_prop, a_x, a_y)?;
            sample_uniform_pair(kind, Some(rho), a_x, a_y, rng)?
        }
        _ => sample_uniform_pair(kind, None, a_x, a_y, rng)?,
    };
    Ok(AcceptDecision {
        accept_x: u <= a_x,
        accept_y: v <= a_y,
        u,
        v,
    })
}
