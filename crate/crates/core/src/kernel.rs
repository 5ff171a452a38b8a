//! The RWM kernel, its coupled transition and the meeting-time driver.

use rand::Rng;

use crate::acccpl::{couple_accept, mh_ratio, AcceptanceKind};
use crate::error::{domain, Result};
use crate::geom::{check_dims, distance, Point};
use crate::propcpl::{sample_proposal, ProposalCouplingSpec, ProposalKind};
use crate::seeding::{normal_vec, open_unit};

/// Default RWM scale: `σ_d = ℓ / √d`.
pub const DEFAULT_ELL: f64 = 2.38;

pub trait Target: Sync {
    fn dim(&self) -> usize;
    /// Log density up to an additive constant; `−∞` outside the support.
    fn log_density(&self, x: &[f64]) -> f64;
}

/// `N(0, I_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StandardNormal {
    pub dim: usize,
}

impl Target for StandardNormal {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        -0.5 * x.iter().map(|c| c * c).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec<T: Target = StandardNormal> {
    pub target: T,
    pub proposal: ProposalCouplingSpec,
    pub acceptance: AcceptanceKind,
}

impl KernelSpec<StandardNormal> {
    /// Standard-normal target in `dim` dimensions with `σ_d = ell / √dim`.
    pub fn standard_normal(
        dim: usize,
        ell: f64,
        proposal: ProposalKind,
        acceptance: AcceptanceKind,
    ) -> Self {
        KernelSpec {
            target: StandardNormal { dim },
            proposal: ProposalCouplingSpec::new(proposal, ell / (dim as f64).sqrt()),
            acceptance,
        }
    }
}

impl<T: Target> KernelSpec<T> {
    pub fn sd(&self) -> f64 {
        self.proposal.sd
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.target.dim() == 0 {
            return Err(domain("dimension must be positive"));
        }
        self.proposal.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub x: Point,
    pub y: Point,
    pub met: bool,
    pub t: u64,
}

impl CoupledState {
    pub fn new(x: Point, y: Point) -> Self {
        let met = x.bitwise_eq(&y);
        CoupledState { x, y, met, t: 0 }
    }

    pub fn distance(&self) -> f64 {
        if self.met {
            0.0
        } else {
            distance(&self.x, &self.y)
        }
    }
}

fn log_density_checked<T: Target>(target: &T, x: &[f64]) -> Result<f64> {
    let lp = target.log_density(x);
    if lp == f64::NEG_INFINITY || lp.is_nan() {
        return Err(domain("current state has zero target density"));
    }
    Ok(lp)
}

/// One marginal RWM transition. Returns the new state and whether the
/// proposal was accepted.
pub fn rwm_step<T: Target, R: Rng + ?Sized>(
    x: &Point,
    spec: &KernelSpec<T>,
    rng: &mut R,
) -> Result<(Point, bool)> {
    let lp = log_density_checked(&spec.target, x)?;
    let prop: Point = x
        .iter()
        .zip(normal_vec(rng, x.dim(), spec.sd()))
        .map(|(a, b)| a + b)
        .collect::<Vec<_>>()
        .into();
    let a = mh_ratio(lp, spec.target.log_density(&prop))?;
    if open_unit(rng) <= a {
        Ok((prop, true))
    } else {
        Ok((x.clone(), false))
    }
}

/// One coupled transition. Equal inputs take the sticky branch: a single
/// proposal and a single uniform drive both chains.
pub fn coupled_step<T: Target, R: Rng + ?Sized>(
    state: &CoupledState,
    spec: &KernelSpec<T>,
    rng: &mut R,
) -> Result<CoupledState> {
    check_dims(&state.x, &state.y)?;
    if state.met || state.x.bitwise_eq(&state.y) {
        let (x, _) = rwm_step(&state.x, spec, rng)?;
        return Ok(CoupledState {
            y: x.clone(),
            x,
            met: true,
            t: state.t + 1,
        });
    }

    let lx = log_density_checked(&spec.target, &state.x)?;
    let ly = log_density_checked(&spec.target, &state.y)?;
    let pair = sample_proposal(&spec.proposal, &state.x, &state.y, rng)?;
    let a_x = mh_ratio(lx, spec.target.log_density(&pair.x_prop))?;
    let a_y = mh_ratio(ly, spec.target.log_density(&pair.y_prop))?;
    let d = couple_accept(
        spec.acceptance,
        &state.x,
        &state.y,
        &pair.x_prop,
        &pair.y_prop,
        a_x,
        a_y,
        rng,
    )?;

    let x = if d.accept_x {
        pair.x_prop
    } else {
        state.x.clone()
    };
    let y = if d.accept_y {
        pair.y_prop
    } else {
        state.y.clone()
    };
    let met = x.bitwise_eq(&y);
    Ok(CoupledState {
        x,
        y,
        met,
        t: state.t + 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeetingTime {
    Met(u64),
    /// No meeting within the budget; carries the budget.
    Censored(u64),
}

impl MeetingTime {
    pub fn is_censored(self) -> bool {
        matches!(self, MeetingTime::Censored(_))
    }

    /// Iterations run: `τ` when met, the budget when censored.
    pub fn value(self) -> u64 {
        match self {
            MeetingTime::Met(t) | MeetingTime::Censored(t) => t,
        }
    }
}

/// Step until the chains meet or `t_max` iterations have run. With
/// `record_trace`, also returns `‖Y_t − X_t‖` for every `t` visited,
/// starting at `t = 0`.
pub fn run_to_meeting<T: Target, R: Rng + ?Sized>(
    x0: &Point,
    y0: &Point,
    spec: &KernelSpec<T>,
    t_max: u64,
    record_trace: bool,
    rng: &mut R,
) -> Result<(MeetingTime, Option<Vec<f64>>)> {
    check_dims(x0, y0)?;
    let mut state = CoupledState::new(x0.clone(), y0.clone());
    let mut trace = record_trace.then(|| vec![state.distance()]);
    while !state.met && state.t < t_max {
        state = coupled_step(&state, spec, rng)?;
        if let Some(tr) = trace.as_mut() {
            tr.push(state.distance());
        }
    }
    let tau = if state.met {
        MeetingTime::Met(state.t)
    } else {
        MeetingTime::Censored(t_max)
    };
    Ok((tau, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{pair_geometry, reflect};
    use crate::propcpl::simple_increments;
    use crate::seeding::{normal_vec, stream_rng};

    fn spec(d: usize, p: ProposalKind, a: AcceptanceKind) -> KernelSpec {
        KernelSpec::standard_normal(d, DEFAULT_ELL, p, a)
    }

    fn draw(rng: &mut crate::seeding::StreamRng, d: usize) -> Point {
        normal_vec(rng, d, 1.0).into()
    }

    #[test]
    fn equal_start_meets_at_zero() {
        let s = spec(3, ProposalKind::MaxReflection, AcceptanceKind::Common);
        let x = Point::new(vec![0.1, 0.2, 0.3]);
        let mut rng = stream_rng(0);
        let (tau, tr) = run_to_meeting(&x, &x, &s, 10, true, &mut rng).unwrap();
        assert_eq!(tau, MeetingTime::Met(0));
        assert_eq!(tr.unwrap(), vec![0.0]);
    }

    #[test]
    fn synchronous_common_never_meets() {
        let s = spec(2, ProposalKind::Synchronous, AcceptanceKind::Common);
        let mut rng = stream_rng(1);
        let x = Point::new(vec![0.0, 0.0]);
        let y = Point::new(vec![1.0, 0.0]);
        let (tau, _) = run_to_meeting(&x, &y, &s, 5000, false, &mut rng).unwrap();
        assert_eq!(tau, MeetingTime::Censored(5000));
    }

    #[test]
    fn one_dim_max_reflection_meets() {
        let s = spec(1, ProposalKind::MaxReflection, AcceptanceKind::Common);
        let mut taus = Vec::new();
        for rep in 0..1000 {
            let mut rng = stream_rng(rep);
            let x = draw(&mut rng, 1);
            let y = draw(&mut rng, 1);
            let (tau, _) = run_to_meeting(&x, &y, &s, 100_000, false, &mut rng).unwrap();
            taus.push(tau.value());
            assert!(!tau.is_censored());
        }
        taus.sort_unstable();
        assert!(taus[500] < 100_000);
    }

    #[test]
    fn rwm_uphill_always_accepts() {
        let s = spec(2, ProposalKind::Synchronous, AcceptanceKind::Common);
        assert_eq!(
            mh_ratio(
                s.target.log_density(&[1.0, 0.0]),
                s.target.log_density(&[0.0, 0.0])
            )
            .unwrap(),
            1.0
        );
    }

    #[test]
    fn rwm_acceptance_rate_d10() {
        let s = spec(10, ProposalKind::Synchronous, AcceptanceKind::Common);
        let mut rng = stream_rng(2);
        let mut x = draw(&mut rng, 10);
        let n = 100_000;
        let mut acc = 0;
        for _ in 0..n {
            let (nx, a) = rwm_step(&x, &s, &mut rng).unwrap();
            x = nx;
            acc += a as usize;
        }
        let rate = acc as f64 / n as f64;
        assert!((0.20..=0.30).contains(&rate), "rate={rate}");
    }

    #[test]
    fn rwm_preserves_stationary_law() {
        let d = 5;
        let s = spec(d, ProposalKind::Synchronous, AcceptanceKind::Common);
        let mut rng = stream_rng(3);
        let n = 10_000;
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let mut x = draw(&mut rng, d);
            for _ in 0..100 {
                x = rwm_step(&x, &s, &mut rng).unwrap().0;
            }
            vals.push(x.iter().map(|c| c * c).sum::<f64>() / d as f64);
        }
        // ‖X‖²/d has mean 1 and variance 2/d under π.
        let mean = vals.iter().sum::<f64>() / n as f64;
        let se = (2.0 / d as f64 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean={mean}");
    }

    #[test]
    fn rwm_rejects_zero_density_state() {
        struct Half;
        impl Target for Half {
            fn dim(&self) -> usize {
                1
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                if x[0] < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
        }
        let s = KernelSpec {
            target: Half,
            proposal: ProposalCouplingSpec::new(ProposalKind::MaxReflection, 1.0),
            acceptance: AcceptanceKind::Common,
        };
        let mut rng = stream_rng(4);
        assert!(rwm_step(&Point::new(vec![-1.0]), &s, &mut rng).is_err());
        // Stays in the support from a valid start.
        let mut st = CoupledState::new(Point::new(vec![0.5]), Point::new(vec![2.0]));
        for _ in 0..1000 {
            st = coupled_step(&st, &s, &mut rng).unwrap();
            assert!(st.x[0] >= 0.0 && st.y[0] >= 0.0);
        }
    }

    #[test]
    fn sticky_after_meeting() {
        let mut rng = stream_rng(5);
        for p in ProposalKind::ALL {
            for a in AcceptanceKind::ALL {
                let s = spec(3, p, a);
                let x = draw(&mut rng, 3);
                let mut st = CoupledState::new(x.clone(), x);
                for _ in 0..2000 {
                    st = coupled_step(&st, &s, &mut rng).unwrap();
                    assert!(st.met && st.x.bitwise_eq(&st.y));
                }
                assert_eq!(st.t, 2000);
            }
        }
    }

    #[test]
    fn proposed_meet_with_common_never_splits() {
        // 1-d, symmetric about the origin: a_x = a_y whenever x' = y'.
        let s = spec(1, ProposalKind::MaxReflection, AcceptanceKind::Common);
        let mut rng = stream_rng(6);
        let (x, y) = ([-0.3], [0.3]);
        let lp = s.target.log_density(&x);
        let mut meets = 0;
        for _ in 0..20_000 {
            let pair = sample_proposal(&s.proposal, &x, &y, &mut rng).unwrap();
            if !pair.proposed_meet {
                continue;
            }
            meets += 1;
            let a = mh_ratio(lp, s.target.log_density(&pair.x_prop)).unwrap();
            let d = couple_accept(
                s.acceptance,
                &x,
                &y,
                &pair.x_prop,
                &pair.y_prop,
                a,
                a,
                &mut rng,
            )
            .unwrap();
            assert_eq!(d.accept_x, d.accept_y);
        }
        assert!(meets > 1000);
    }

    #[test]
    fn synchronous_exchange_symmetry() {
        let s = spec(3, ProposalKind::Synchronous, AcceptanceKind::Common);
        let x = Point::new(vec![0.3, -0.2, 1.0]);
        let y = Point::new(vec![-0.5, 0.4, 0.1]);
        let mut a = stream_rng(7);
        let mut b = stream_rng(7);
        let mut s1 = CoupledState::new(x.clone(), y.clone());
        let mut s2 = CoupledState::new(y, x);
        for _ in 0..500 {
            s1 = coupled_step(&s1, &s, &mut a).unwrap();
            s2 = coupled_step(&s2, &s, &mut b).unwrap();
            assert!(s1.x.bitwise_eq(&s2.y) && s1.y.bitwise_eq(&s2.x));
        }
    }

    #[test]
    fn reflection_exchange_symmetry() {
        // Swapping the chains swaps the roles of ξ and η: the reflected pair
        // seen from y is again a reflection pair with direction −e.
        let mut rng = stream_rng(8);
        let x = [0.3, -0.2, 1.0];
        let y = [-0.5, 0.4, 0.1];
        let g = pair_geometry(&x, &y).unwrap();
        let h = pair_geometry(&y, &x).unwrap();
        for _ in 0..1000 {
            let (xi, eta) =
                simple_increments(ProposalKind::Reflection, Some(&g.e), 3, 0.5, &mut rng).unwrap();
            let back = reflect(&eta, &h.e).unwrap();
            assert!(back
                .iter()
                .zip(xi.iter())
                .all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }
}
