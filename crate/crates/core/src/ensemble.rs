//! Repeated randomized optimization runs feeding the voting tallies.
//!
//! Each of the M runs draws a fresh uniformly random N-subset of the
//! available objectives and executes one full annealing chain against it.
//! Runs are independent: per-run subset and annealing seeds derive from the
//! master seed by named substreams, so the ensemble reproduces exactly under
//! one seed while the runs execute in parallel.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::{AnnealError, Annealer, Archive, ObjectiveSet};
use crate::seed::{self, Stream};
use crate::voting::{self, ArchiveSolutions};

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble setup: {0}")]
    Invalid(String),
    #[error("subset size {n} exceeds the {l} available objectives")]
    SubsetTooLarge { n: usize, l: usize },
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: AnnealError,
    },
}

/// Ensemble controls: M runs of N objectives each under one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub m_runs: usize,
    pub n_objectives: usize,
    pub seed: u64,
    /// Severity digits for solution keys.
    pub severity_digits: u32,
    /// Severity digits for range keys (one less than the solution keys).
    pub range_digits: u32,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            m_runs: 30,
            n_objectives: 10,
            seed: 0,
            severity_digits: voting::SEVERITY_DIGITS,
            range_digits: voting::RANGE_DIGITS,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self, l: usize) -> Result<(), EnsembleError> {
        if self.m_runs == 0 {
            return Err(EnsembleError::Invalid("need at least one run".into()));
        }
        if self.n_objectives == 0 {
            return Err(EnsembleError::Invalid(
                "need at least one objective per run".into(),
            ));
        }
        if self.n_objectives > l {
            return Err(EnsembleError::SubsetTooLarge {
                n: self.n_objectives,
                l,
            });
        }
        if self.range_digits + 1 != self.severity_digits {
            return Err(EnsembleError::Invalid(format!(
                "range digits ({}) must be one less than severity digits ({})",
                self.range_digits, self.severity_digits
            )));
        }
        Ok(())
    }
}

/// Uniformly random N-subset of 0..l without replacement, ascending.
pub fn select_objective_subset<R: rand::Rng>(
    l: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::Invalid(
            "subset size must be positive".into(),
        ));
    }
    if n > l {
        return Err(EnsembleError::SubsetTooLarge { n, l });
    }
    let mut subset: Vec<usize> = rand::seq::index::sample(rng, l, n).into_vec();
    subset.sort_unstable();
    Ok(subset)
}

/// One run's output: the selected objective indices and the final archive.
#[derive(Debug)]
pub struct EnsembleRun {
    pub run: usize,
    pub subset: Vec<usize>,
    pub anneal_seed: u64,
    pub archive: Archive,
}

/// All M runs of the ensemble.
#[derive(Debug)]
pub struct EnsembleOutcome {
    pub runs: Vec<EnsembleRun>,
}

impl EnsembleOutcome {
    /// Archives reduced to their (segment, severity) solutions, in run order.
    pub fn archive_solutions(&self) -> Vec<ArchiveSolutions> {
        self.runs
            .iter()
            .map(|r| archive_solutions(&r.archive))
            .collect()
    }
}

/// Reduce an archive to the (segment, severity) pairs the voting layer keys.
pub fn archive_solutions(archive: &Archive) -> ArchiveSolutions {
    archive
        .members()
        .iter()
        .map(|m| (m.segment, m.severity))
        .collect()
}

/// Execute M independent seeded runs in parallel. `build_objectives` receives
/// the selected objective indices of one run and assembles that run's
/// objective set over `l` available objectives.
pub fn run_ensemble(
    annealer: &Annealer,
    l: usize,
    config: &EnsembleConfig,
    build_objectives: impl Fn(&[usize]) -> ObjectiveSet + Sync,
) -> Result<EnsembleOutcome, EnsembleError> {
    config.validate(l)?;
    let runs: Result<Vec<EnsembleRun>, EnsembleError> = (0..config.m_runs)
        .into_par_iter()
        .map(|run| {
            let mut subset_rng =
                ChaCha12Rng::seed_from_u64(seed::derive(config.seed, Stream::Subset, run as u64));
            let subset = select_objective_subset(l, config.n_objectives, &mut subset_rng)?;
            let objectives = build_objectives(&subset);
            let anneal_seed = seed::derive(config.seed, Stream::Anneal, run as u64);
            let archive = annealer
                .run(&objectives, anneal_seed)
                .map_err(|source| EnsembleError::Run { run, source })?;
            Ok(EnsembleRun {
                run,
                subset,
                anneal_seed,
                archive,
            })
        })
        .collect();
    Ok(EnsembleOutcome { runs: runs? })
}
