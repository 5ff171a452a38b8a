//! Couplings of the random-walk Metropolis (RWM) kernel.
//!
//! Two RWM chains targeting the same distribution are advanced jointly: the
//! Gaussian proposals are drawn from a coupling of `N(x, σ²I)` and
//! `N(y, σ²I)` ([`propcpl`]), and the accept/reject uniforms are drawn from a
//! coupling of two Bernoulli laws ([`acccpl`]). Once the chains meet they stay
//! together. The [`experiments`] module runs replicated meeting-time sweeps,
//! distance traces and one-step drift curves, and [`validate`] holds the
//! statistical oracles used to check every sampler against closed-form
//! results.
//!
//! ```
//! use coupled_rwm::kernel::{run_to_meeting, KernelSpec, MeetingTime};
//! use coupled_rwm::propcpl::ProposalKind;
//! use coupled_rwm::acccpl::AcceptanceKind;
//! use coupled_rwm::geom::Point;
//! use rand::SeedableRng;
//!
//! let spec = KernelSpec::standard_normal(4, 2.38, ProposalKind::MaxReflection, AcceptanceKind::Common);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let x0 = Point::new(vec![1.0, 0.0, 0.0, 0.0]);
//! let y0 = Point::new(vec![-1.0, 0.5, 0.0, 0.0]);
//! let (tau, _) = run_to_meeting(&x0, &y0, &spec, 100_000, false, &mut rng).unwrap();
//! assert!(matches!(tau, MeetingTime::Met(_)));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acccpl;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod gauss;
pub mod geom;
pub mod kernel;
pub mod propcpl;
pub mod seeding;
pub mod validate;

pub use error::{Error, Result};
