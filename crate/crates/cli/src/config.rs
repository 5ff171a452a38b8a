//! JSON configuration and its merge with command-line flags.
//!
//! Every key is optional. A missing key falls back to the flag, then to the
//! documented default. Unknown keys are rejected.
//!
//! ```json
//! {
//!   "dims": [10],
//!   "proposals": ["max-reflection", "max-independent"],
//!   "acceptances": ["common", "antithetic"],
//!   "ell": 2.38,
//!   "replications": 1000,
//!   "base_seed": 0,
//!   "t_max": 1000000,
//!   "hybrid_cutoffs": [0.5, 1.0, 2.0],
//!   "hybrid_far_kind": "reflection",
//!   "rejection_cap": 1000000,
//!   "horizon": 2500,
//!   "r_grid": [0.1, 0.5, 1.0],
//!   "out": "meet.csv",
//!   "svg": "meet.svg",
//!   "log_scale": false
//! }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use coupled_rwm::acccpl::AcceptanceKind;
use coupled_rwm::experiments::{ExperimentSpec, Protocol, DEFAULT_HYBRID_CUTOFFS};
use coupled_rwm::propcpl::ProposalKind;

use crate::args::ExperimentArgs;

pub const DEFAULT_HORIZON: u64 = 2500;

/// Separations for the drift protocol. Reaches past `E‖Y₀ − X₀‖ = √(2d)` at
/// the default dimension 100.
pub const DEFAULT_DRIFT_GRID: [f64; 20] = [
    0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0,
    18.0, 20.0,
];

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dims: Option<Vec<usize>>,
    pub proposals: Option<Vec<String>>,
    pub acceptances: Option<Vec<String>>,
    pub ell: Option<f64>,
    pub replications: Option<usize>,
    pub base_seed: Option<u64>,
    pub t_max: Option<u64>,
    pub hybrid_cutoffs: Option<Vec<f64>>,
    pub hybrid_far_kind: Option<String>,
    pub rejection_cap: Option<u64>,
    pub horizon: Option<u64>,
    pub r_grid: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub log_scale: Option<bool>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Meet,
    Trace,
    Drift,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Meet => "meet",
            Command::Trace => "trace",
            Command::Drift => "drift",
        }
    }

    fn default_dim(self) -> usize {
        match self {
            Command::Meet => 10,
            Command::Trace | Command::Drift => 100,
        }
    }
}

/// A fully resolved run: what to compute and where to put it.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub spec: ExperimentSpec,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
    pub log_scale: bool,
}

/// Expand a list of proposal names. `maximal` and `all` stand for groups.
pub fn parse_proposals(names: &[String]) -> Result<Vec<ProposalKind>> {
    let mut out = Vec::new();
    for name in names {
        match name.trim() {
            "all" => out.extend(ProposalKind::ALL),
            "maximal" => out.extend(ProposalKind::MAXIMAL),
            s => out.push(s.parse()?),
        }
    }
    dedup(&mut out);
    Ok(out)
}

pub fn parse_acceptances(names: &[String]) -> Result<Vec<AcceptanceKind>> {
    let mut out = Vec::new();
    for name in names {
        match name.trim() {
            "all" => out.extend(AcceptanceKind::ALL),
            s => out.push(s.parse()?),
        }
    }
    dedup(&mut out);
    Ok(out)
}

fn dedup<T: PartialEq + Copy>(v: &mut Vec<T>) {
    let mut seen = Vec::new();
    v.retain(|k| {
        if seen.contains(k) {
            false
        } else {
            seen.push(*k);
            true
        }
    });
}

/// Merge flags over the config file over the defaults.
pub fn resolve(
    command: Command,
    config: &Config,
    args: &ExperimentArgs,
    horizon: Option<u64>,
    r_grid: Option<Vec<f64>>,
) -> Result<Run> {
    let protocol = match command {
        Command::Meet => Protocol::Meet,
        Command::Trace => Protocol::Trace {
            horizon: horizon.or(config.horizon).unwrap_or(DEFAULT_HORIZON),
        },
        Command::Drift => Protocol::Drift {
            r_grid: r_grid
                .or_else(|| config.r_grid.clone())
                .unwrap_or_else(|| DEFAULT_DRIFT_GRID.to_vec()),
        },
    };
    let mut spec = ExperimentSpec::new(protocol);

    spec.dims = match (&args.dim, &args.dims) {
        (Some(d), _) => vec![*d],
        (None, Some(ds)) => ds.clone(),
        (None, None) => config.dims.clone().unwrap_or(vec![command.default_dim()]),
    };
    if let Some(names) = args.proposal.as_ref().or(config.proposals.as_ref()) {
        spec.proposals = parse_proposals(names)?;
    }
    if let Some(names) = args.acceptance.as_ref().or(config.acceptances.as_ref()) {
        spec.acceptances = parse_acceptances(names)?;
    }
    if let Some(ell) = args.ell.or(config.ell) {
        spec.ell = ell;
    }
    if let Some(reps) = args.reps.or(config.replications) {
        spec.replications = reps;
    }
    if let Some(seed) = args.seed.or(config.base_seed) {
        spec.base_seed = seed;
    }
    if let Some(t_max) = args.t_max.or(config.t_max) {
        spec.t_max = t_max;
    }
    spec.hybrid_cutoffs = args
        .hybrid_cutoff
        .clone()
        .or_else(|| config.hybrid_cutoffs.clone())
        .unwrap_or(DEFAULT_HYBRID_CUTOFFS.to_vec());
    if let Some(far) = args.hybrid_far.as_ref().or(config.hybrid_far_kind.as_ref()) {
        spec.hybrid_far_kind = far.parse()?;
    }
    if let Some(cap) = args.rejection_cap.or(config.rejection_cap) {
        spec.rejection_cap = cap;
    }
    if spec.replications == 0 {
        bail!("replications must be at least 1");
    }
    spec.validate()?;

    let out = args
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", command.name())));
    Ok(Run {
        spec,
        out,
        svg: args.svg.clone().or_else(|| config.svg.clone()),
        log_scale: args.log_scale || config.log_scale.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_flags() -> ExperimentArgs {
        ExperimentArgs::default()
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<Config>(r#"{"dims": [3], "replicates": 5}"#);
        assert!(err.is_err());
        let ok: Config = serde_json::from_str(r#"{"dims": [3], "replications": 5}"#).unwrap();
        assert_eq!(ok.replications, Some(5));
    }

    #[test]
    fn defaults_per_command() {
        let run = resolve(Command::Meet, &Config::default(), &no_flags(), None, None).unwrap();
        assert_eq!(run.spec.dims, vec![10]);
        assert_eq!(run.spec.replications, 1000);
        assert_eq!(run.spec.t_max, 1_000_000);
        assert_eq!(run.spec.base_seed, 0);
        assert_eq!(run.spec.ell, 2.38);
        assert_eq!(run.out, PathBuf::from("meet.csv"));

        let run = resolve(Command::Trace, &Config::default(), &no_flags(), None, None).unwrap();
        assert_eq!(run.spec.dims, vec![100]);
        assert_eq!(run.spec.protocol, Protocol::Trace { horizon: 2500 });
    }

    #[test]
    fn flags_override_config() {
        let config: Config = serde_json::from_str(
            r#"{"dims": [3, 4], "replications": 7, "base_seed": 9, "proposals": ["maximal"]}"#,
        )
        .unwrap();
        let run = resolve(Command::Meet, &config, &no_flags(), None, None).unwrap();
        assert_eq!(run.spec.dims, vec![3, 4]);
        assert_eq!(run.spec.replications, 7);
        assert_eq!(run.spec.proposals.len(), 4);

        let flags = ExperimentArgs {
            dim: Some(5),
            reps: Some(2),
            proposal: Some(vec!["reflection".into()]),
            ..no_flags()
        };
        let run = resolve(Command::Meet, &config, &flags, None, None).unwrap();
        assert_eq!(run.spec.dims, vec![5]);
        assert_eq!(run.spec.replications, 2);
        assert_eq!(run.spec.base_seed, 9);
        assert_eq!(run.spec.proposals, vec![ProposalKind::Reflection]);
    }

    #[test]
    fn zero_replications_in_config_is_an_error() {
        let config: Config = serde_json::from_str(r#"{"replications": 0}"#).unwrap();
        assert!(resolve(Command::Meet, &config, &no_flags(), None, None).is_err());
    }

    #[test]
    fn group_names_expand() {
        let all = parse_proposals(&["all".into(), "max-reflection".into()]).unwrap();
        assert_eq!(all.len(), ProposalKind::ALL.len());
        assert!(parse_proposals(&["bogus".into()]).is_err());
        assert_eq!(parse_acceptances(&["all".into()]).unwrap().len(), 4);
    }
}
