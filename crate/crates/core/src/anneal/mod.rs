//! ε-dominance archived many-objective simulated annealing.
//!
//! The optimizer minimizes many per-frequency discrepancy objectives over
//! single-fault scenarios (integer segment, continuous severity). The archive
//! keeps at most one solution per ε-box of the log-discretized objective
//! space, which bounds its size and filters trivial improvements. Each
//! proposed neighbor is classified against the archive; improvements update
//! the archive directly while deteriorations pass through a probabilistic
//! action step that either re-seeds the search at the closest dominating
//! archive member or applies a simulated-annealing acceptance based on the
//! average amount of domination.

mod archive;
mod dominance;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub use archive::{Archive, Classification, UpdateOutcome};
pub use dominance::{
    amount_of_domination, box_index, dominates, epsilon_relation, EpsilonBox, EpsilonRelation,
    DEFAULT_F_FLOOR,
};

/// Default ε for the box discretization.
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Error)]
pub enum AnnealError {
    #[error("objective vectors have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid annealer input: {0}")]
    Invalid(String),
}

/// Decision space: 1-based segments and a continuous severity interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub n_segments: usize,
    pub severity_max: f64,
}

impl SearchSpace {
    pub fn new(n_segments: usize, severity_max: f64) -> Result<Self, AnnealError> {
        if n_segments == 0 {
            return Err(AnnealError::Invalid("need at least one segment".into()));
        }
        if !severity_max.is_finite() || severity_max <= 0.0 {
            return Err(AnnealError::Invalid(
                "severity range must be positive".into(),
            ));
        }
        Ok(Self {
            n_segments,
            severity_max,
        })
    }
}

/// A fault scenario with its cached objective vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// 1-based segment index.
    pub segment: usize,
    pub severity: f64,
    pub objectives: Vec<f64>,
}

/// Evaluator signature: (segment, severity) → non-negative discrepancy.
pub type ObjectiveFn = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// The objectives under simultaneous minimization plus their normalization
/// ranges used by the amount of domination.
pub struct ObjectiveSet {
    evaluators: Vec<Box<ObjectiveFn>>,
    ranges: Vec<f64>,
}

impl std::fmt::Debug for ObjectiveSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectiveSet")
            .field("len", &self.evaluators.len())
            .field("ranges", &self.ranges)
            .finish()
    }
}

impl ObjectiveSet {
    pub fn new(evaluators: Vec<Box<ObjectiveFn>>, ranges: Vec<f64>) -> Result<Self, AnnealError> {
        if evaluators.is_empty() {
            return Err(AnnealError::Invalid("objective set is empty".into()));
        }
        if evaluators.len() != ranges.len() {
            return Err(AnnealError::LengthMismatch {
                left: evaluators.len(),
                right: ranges.len(),
            });
        }
        if ranges.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(AnnealError::Invalid(
                "normalization ranges must be positive".into(),
            ));
        }
        Ok(Self { evaluators, ranges })
    }

    /// Estimate each range by sweeping a coarse grid over the search space.
    pub fn with_estimated_ranges(
        evaluators: Vec<Box<ObjectiveFn>>,
        space: SearchSpace,
        severity_steps: usize,
    ) -> Result<Self, AnnealError> {
        if evaluators.is_empty() {
            return Err(AnnealError::Invalid("objective set is empty".into()));
        }
        let steps = severity_steps.max(2);
        let mut ranges = vec![0.0f64; evaluators.len()];
        let mut minima = vec![f64::INFINITY; evaluators.len()];
        let mut maxima = vec![f64::NEG_INFINITY; evaluators.len()];
        for segment in 1..=space.n_segments {
            for s in 0..steps {
                let severity = space.severity_max * s as f64 / (steps - 1) as f64;
                for (i, eval) in evaluators.iter().enumerate() {
                    let v = eval(segment, severity);
                    minima[i] = minima[i].min(v);
                    maxima[i] = maxima[i].max(v);
                }
            }
        }
        for i in 0..ranges.len() {
            let r = maxima[i] - minima[i];
            ranges[i] = if r.is_finite() && r > 0.0 { r } else { 1.0 };
        }
        Self::new(evaluators, ranges)
    }

    pub fn len(&self) -> usize {
        self.evaluators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluators.is_empty()
    }

    pub fn ranges(&self) -> &[f64] {
        &self.ranges
    }

    pub fn evaluate(&self, segment: usize, severity: f64) -> Candidate {
        Candidate {
            segment,
            severity,
            objectives: self
                .evaluators
                .iter()
                .map(|e| e(segment, severity))
                .collect(),
        }
    }
}

/// Neighborhood move controls: probability of a segment switch and the
/// Gaussian severity step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveParams {
    pub p_location: f64,
    pub sigma_step: f64,
}

impl MoveParams {
    /// p_loc = 0.3, σ_step = 0.05·s_max.
    pub fn defaults_for(space: SearchSpace) -> Self {
        Self {
            p_location: 0.3,
            sigma_step: 0.05 * space.severity_max,
        }
    }
}

/// Geometric cooling schedule with a fixed total iteration budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealSchedule {
    pub t_max: f64,
    pub t_min: f64,
    pub cooling_rate: f64,
    pub total_budget: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            t_min: 1e-4,
            cooling_rate: 0.8,
            total_budget: 100_000,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), AnnealError> {
        if !self.t_max.is_finite()
            || !self.t_min.is_finite()
            || self.t_max <= self.t_min
            || self.t_min <= 0.0
        {
            return Err(AnnealError::Invalid(format!(
                "need t_max > t_min > 0, got {} and {}",
                self.t_max, self.t_min
            )));
        }
        let rate_ok =
            self.cooling_rate.is_finite() && self.cooling_rate > 0.0 && self.cooling_rate < 1.0;
        if !rate_ok {
            return Err(AnnealError::Invalid(format!(
                "cooling rate must lie in (0, 1), got {}",
                self.cooling_rate
            )));
        }
        Ok(())
    }

    /// Temperatures at which the inner loop executes: cooling_rate^k · t_max
    /// for k = 0, 1, … while above t_min.
    pub fn ladder(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut k = 0i32;
        loop {
            let t = self.t_max * self.cooling_rate.powi(k);
            if t <= self.t_min {
                break;
            }
            out.push(t);
            k += 1;
        }
        out
    }

    pub fn temperature_levels(&self) -> usize {
        self.ladder().len()
    }

    /// Iterations spent at each temperature so the realized total comes out
    /// at the budget (rounded up to a whole ladder row).
    pub fn iters_per_temperature(&self) -> usize {
        let levels = self.temperature_levels();
        if levels == 0 {
            return 0;
        }
        self.total_budget.div_ceil(levels)
    }
}

/// One annealing iteration, as seen by an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub temperature: f64,
    pub archive_size: usize,
    /// True when the proposed solution became the current solution.
    pub accepted: bool,
}

/// The annealer configuration; [`Annealer::run`] executes one seeded chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Annealer {
    pub schedule: AnnealSchedule,
    pub epsilon: f64,
    pub f_floor: f64,
    pub move_params: MoveParams,
    pub space: SearchSpace,
}

impl Annealer {
    pub fn new(space: SearchSpace) -> Self {
        Self {
            schedule: AnnealSchedule::default(),
            epsilon: DEFAULT_EPSILON,
            f_floor: DEFAULT_F_FLOOR,
            move_params: MoveParams::defaults_for(space),
            space,
        }
    }

    pub fn run(&self, objectives: &ObjectiveSet, seed: u64) -> Result<Archive, AnnealError> {
        self.run_observed(objectives, seed, |_, _| {})
    }

    /// Run the chain, streaming a diagnostic trace row per iteration
    /// (`iteration,temperature,archive_size,accepted`) to `trace`.
    pub fn run_traced<W: std::io::Write>(
        &self,
        objectives: &ObjectiveSet,
        seed: u64,
        trace: &mut W,
    ) -> Result<Archive, AnnealError> {
        writeln!(trace, "iteration,temperature,archive_size,accepted")
            .map_err(|e| AnnealError::Invalid(format!("trace write failed: {e}")))?;
        let mut io_error = None;
        let archive = self.run_observed(objectives, seed, |record, _| {
            if io_error.is_none() {
                if let Err(e) = writeln!(
                    trace,
                    "{},{:?},{},{}",
                    record.iteration,
                    record.temperature,
                    record.archive_size,
                    u8::from(record.accepted)
                ) {
                    io_error = Some(e);
                }
            }
        });
        match io_error {
            Some(e) => Err(AnnealError::Invalid(format!("trace write failed: {e}"))),
            None => archive,
        }
    }

    /// Run the chain, invoking `observer` after every iteration with the
    /// iteration record and the archive state.
    pub fn run_observed(
        &self,
        objectives: &ObjectiveSet,
        seed: u64,
        mut observer: impl FnMut(&IterationRecord, &Archive),
    ) -> Result<Archive, AnnealError> {
        if objectives.is_empty() {
            return Err(AnnealError::Invalid("objective set is empty".into()));
        }
        self.schedule.validate()?;
        let space = self.space;
        SearchSpace::new(space.n_segments, space.severity_max)?;

        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let initial = objectives.evaluate(
            rng.random_range(1..=space.n_segments),
            rng.random_range(0.0..space.severity_max),
        );
        let mut archive = Archive::new(self.epsilon, self.f_floor)?;
        archive.seed(initial.clone());
        let mut current = initial;

        let ipt = self.schedule.iters_per_temperature();
        let mut iteration = 0u64;
        for temperature in self.schedule.ladder() {
            for _ in 0..ipt {
                let proposal = self.propose_neighbor(objectives, &current, &mut rng);
                let accepted = match archive.update(&proposal) {
                    UpdateOutcome::Updated => {
                        current = proposal;
                        true
                    }
                    UpdateOutcome::Delegated => self.action(
                        objectives,
                        &archive,
                        &mut current,
                        proposal,
                        temperature,
                        &mut rng,
                    ),
                };
                iteration += 1;
                observer(
                    &IterationRecord {
                        iteration,
                        temperature,
                        archive_size: archive.len(),
                        accepted,
                    },
                    &archive,
                );
            }
        }
        Ok(archive)
    }

    /// Generate a neighbor: with probability p_location switch to a uniformly
    /// random other segment, otherwise take a Gaussian severity step
    /// reflected into [0, s_max].
    pub fn propose_neighbor(
        &self,
        objectives: &ObjectiveSet,
        current: &Candidate,
        rng: &mut ChaCha12Rng,
    ) -> Candidate {
        let n = self.space.n_segments;
        let switch: f64 = rng.random();
        if switch < self.move_params.p_location && n > 1 {
            let mut segment = rng.random_range(1..n);
            if segment >= current.segment {
                segment += 1;
            }
            objectives.evaluate(segment, current.severity)
        } else {
            let step: f64 = StandardNormal.sample(rng);
            let severity = reflect(
                current.severity + self.move_params.sigma_step * step,
                0.0,
                self.space.severity_max,
            );
            objectives.evaluate(current.segment, severity)
        }
    }

    /// Probabilistic handling of a deteriorated solution: accept it when it
    /// is mutually non-dominant with the archive; otherwise either re-seed at
    /// the archive member closest to it in domination amount, or apply the
    /// simulated-annealing acceptance on the average domination amount.
    fn action(
        &self,
        objectives: &ObjectiveSet,
        archive: &Archive,
        current: &mut Candidate,
        proposal: Candidate,
        temperature: f64,
        rng: &mut ChaCha12Rng,
    ) -> bool {
        let ranges = objectives.ranges();
        let dominators: Vec<usize> = archive
            .members()
            .iter()
            .enumerate()
            .filter(|(_, m)| dominance::dominates_unchecked(&m.objectives, &proposal.objectives))
            .map(|(i, _)| i)
            .collect();
        let proposal_dominates_any = archive
            .members()
            .iter()
            .any(|m| dominance::dominates_unchecked(&proposal.objectives, &m.objectives));

        if dominators.is_empty() && !proposal_dominates_any {
            *current = proposal;
            return true;
        }

        // Amounts of domination between the proposal and the members that
        // plainly dominate it; the current solution stands in when no
        // archive member does.
        let amounts: Vec<(Option<usize>, f64)> = if dominators.is_empty() {
            vec![(
                None,
                amount_of_domination(&current.objectives, &proposal.objectives, ranges),
            )]
        } else {
            dominators
                .iter()
                .map(|&i| {
                    (
                        Some(i),
                        amount_of_domination(
                            &archive.members()[i].objectives,
                            &proposal.objectives,
                            ranges,
                        ),
                    )
                })
                .collect()
        };

        if dominance::dominates_unchecked(&current.objectives, &proposal.objectives) {
            // Re-seed toward the least-dominating solution.
            let (selected, delta) = amounts
                .iter()
                .copied()
                .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite domination amounts"))
                .expect("non-empty domination pool");
            let p = reseed_acceptance_probability(delta, temperature);
            let gate: f64 = rng.random::<f64>() * rng.random::<f64>();
            if p > gate {
                if let Some(i) = selected {
                    *current = archive.members()[i].clone();
                }
                return false;
            }
        }

        let avg = amounts.iter().map(|(_, d)| d).sum::<f64>() / amounts.len() as f64;
        let p = sa_acceptance_probability(avg, temperature);
        if p > rng.random::<f64>() {
            *current = proposal;
            return true;
        }
        false
    }
}

/// Simulated-annealing acceptance for a deteriorated solution:
/// 1 / (1 + exp(Δdom_avg / T)). Tends to one half as T grows.
pub fn sa_acceptance_probability(delta_avg: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (delta_avg / temperature).exp())
}

/// Re-seed acceptance toward a dominating archive member:
/// 1 / (1 + exp(−Δdom / max(T, 1))).
pub fn reseed_acceptance_probability(delta: f64, temperature: f64) -> f64 {
    1.0 / (1.0 + (-delta / temperature.max(1.0)).exp())
}

/// Fold a value into [lo, hi] by reflection at the boundaries.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let span = hi - lo;
    if span <= 0.0 {
        return lo;
    }
    let period = 2.0 * span;
    let mut t = (x - lo).rem_euclid(period);
    if t > span {
        t = period - t;
    }
    lo + t
}
