//! Config-driven orchestration of the full identification workflow.
//!
//! Four stages, each consuming only the config plus files produced by prior
//! stages:
//!
//! 1. `simulate` — build the model, generate noisy per-frequency training
//!    data and, in validation mode, the measurement file for an injected
//!    truth scenario.
//! 2. `calibrate` — fit one response surface per frequency from the training
//!    CSV and persist the surfaces plus fit diagnostics.
//! 3. `identify` — form one discrepancy objective per calibrated frequency
//!    against the measurements, execute M seeded annealing runs over random
//!    N-subsets, and emit per-run archives, the four voting tallies, and the
//!    occurrence-count baseline.
//! 4. `report` — render ranked top-k tables and plot-ready score grids.
//!
//! Reruns with the same seed reproduce every artifact byte for byte.

mod config;
mod files;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anneal::{
    AnnealError, AnnealSchedule, Annealer, MoveParams, ObjectiveFn, ObjectiveSet, SearchSpace,
};
use crate::ensemble::{self, EnsembleConfig, EnsembleError};
use crate::gp::{calibrate_each, GpError, GpSurface, McmcConfig, SurfaceRecord, TrainingSet};
use crate::model::{FaultScenario, ModelError, StructuralModel};
use crate::sample::{self, SampleError, SamplingConfig, TrainingData};
use crate::seed::{derive, Stream};
use crate::sweep::FrequencySweep;
use crate::voting::{self, RangeKey, SolutionKey, VotingError};

pub use config::{
    CalibrationSpec, EnsembleSpec, ModelSpec, PipelineConfig, SweepSpec, TrainingSpec, TruthSpec,
};
pub use files::{
    range_tally_rows, read_tally_csv, solution_tally_rows, MeasurementFile, MeasurementRow,
    OutputLayout, TallyRow,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Anneal(#[from] AnnealError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Voting(#[from] VotingError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

/// Resolved inputs shared by the stage functions.
pub struct Pipeline {
    pub config: PipelineConfig,
    /// Directory against which relative config paths resolve.
    pub base_dir: PathBuf,
    pub out: OutputLayout,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, base_dir: &Path) -> Self {
        let out = OutputLayout::new(&base_dir.join(&config.output_dir));
        Self {
            config,
            base_dir: base_dir.to_path_buf(),
            out,
        }
    }

    /// Load a config file; `out_override` and `seed_override` take
    /// precedence over the document.
    pub fn from_config_path(
        path: &Path,
        out_override: Option<&Path>,
        seed_override: Option<u64>,
    ) -> Result<Self, PipelineError> {
        let (mut config, base) = PipelineConfig::load(path)?;
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        if let Some(out) = out_override {
            config.output_dir = out.to_path_buf();
        }
        Ok(Self::new(config, &base))
    }

    pub fn build_model(&self) -> Result<StructuralModel, PipelineError> {
        self.config.model.build(&self.base_dir)
    }

    pub fn build_sweep(&self, model: &StructuralModel) -> Result<FrequencySweep, PipelineError> {
        self.config.sweep.build(model)
    }

    fn search_space(&self, model: &StructuralModel) -> Result<SearchSpace, PipelineError> {
        Ok(SearchSpace::new(
            model.n_segments(),
            self.config.training.severity_max,
        )?)
    }

    fn annealer(&self, space: SearchSpace) -> Annealer {
        let e = &self.config.ensemble;
        Annealer {
            schedule: AnnealSchedule {
                t_max: e.t_max,
                t_min: e.t_min,
                cooling_rate: e.cooling_rate,
                total_budget: e.budget,
            },
            epsilon: e.epsilon,
            f_floor: crate::anneal::DEFAULT_F_FLOOR,
            move_params: MoveParams {
                p_location: e.p_location,
                sigma_step: e.severity_step_frac * space.severity_max,
            },
            space,
        }
    }

    /// Generate training data and, when a truth scenario is configured, the
    /// measurement file it implies. `require_truth` makes a missing truth
    /// spec a config error (the default for validation workflows).
    pub fn simulate(&self, require_truth: bool) -> Result<SimulateSummary, PipelineError> {
        let model = self.build_model()?;
        let sweep = self.build_sweep(&model)?;
        if require_truth && self.config.truth.is_none() {
            return Err(PipelineError::Config(
                "simulate in truth mode needs a `truth` entry (or pass --no-measurement)".into(),
            ));
        }
        let data = sample::generate(
            &model,
            &sweep,
            &SamplingConfig {
                scenarios: self.config.training.scenarios,
                severity_max: self.config.training.severity_max,
                noise_level: self.config.training.noise_level,
                channel: self.config.training.channel,
                seed: derive(self.config.seed, Stream::Sampling, 0),
            },
        )?;
        files::write_json(&self.out.model(), &model)?;
        let mut buf = Vec::new();
        data.write_csv(&mut buf)?;
        files::write_text(
            &self.out.training(),
            &String::from_utf8(buf).expect("csv is utf-8"),
        )?;

        let mut measurement_path = None;
        if let Some(truth) = &self.config.truth {
            let measurement = self.synthesize_measurement(&model, &sweep, truth)?;
            let mut buf = Vec::new();
            measurement.write_csv(&mut buf)?;
            files::write_text(
                &self.out.measurement(),
                &String::from_utf8(buf).expect("csv is utf-8"),
            )?;
            measurement_path = Some(self.out.measurement());
        }
        Ok(SimulateSummary {
            n_frequencies: sweep.len(),
            n_scenarios: data.n_scenarios(),
            training_path: self.out.training(),
            measurement_path,
        })
    }

    /// Noisy measurement rows for an injected truth scenario.
    fn synthesize_measurement(
        &self,
        model: &StructuralModel,
        sweep: &FrequencySweep,
        truth: &TruthSpec,
    ) -> Result<MeasurementFile, PipelineError> {
        let fault = FaultScenario::single(truth.segment, truth.severity, model.n_segments())?;
        let mut rng = ChaCha12Rng::seed_from_u64(derive(self.config.seed, Stream::Measurement, 0));
        let noise = self.config.training.noise_level;
        let mut rows = Vec::with_capacity(sweep.len());
        for (j, &omega) in sweep.frequencies().iter().enumerate() {
            let clean = model.admittance_change(omega, &fault, self.config.training.channel)?;
            let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
            rows.push(MeasurementRow {
                freq_index: j,
                omega,
                delta_y: clean * (1.0 + noise * z),
            });
        }
        Ok(MeasurementFile { rows })
    }

    /// Fit and persist one surface per frequency from a training CSV.
    pub fn calibrate(&self, training_path: &Path) -> Result<CalibrateSummary, PipelineError> {
        let text = files::read_text(training_path)?;
        let data = TrainingData::read_csv(text.as_bytes())?;
        let sets: Vec<TrainingSet> = (0..data.n_frequencies())
            .map(|j| {
                let inputs: Vec<[f64; 2]> = data
                    .scenarios
                    .iter()
                    .map(|s| [s.location as f64, s.severity])
                    .collect();
                TrainingSet::new(inputs, data.responses[j].clone(), j)
            })
            .collect::<Result<_, _>>()?;

        let mcmc = McmcConfig {
            n_samples: self.config.calibration.mcmc_samples,
            step_size: self.config.calibration.mcmc_step_size,
            seed: derive(self.config.seed, Stream::Calibration, 0),
        };
        let results = calibrate_each(sets, self.config.calibration.kernel, &mcmc);

        let mut diagnostics = String::from("freq_index,log_likelihood,acceptance_rate\n");
        let mut failures = Vec::new();
        let mut persisted = 0usize;
        for (j, result) in results.into_iter().enumerate() {
            match result {
                Ok((surface, diag)) => {
                    files::write_json(&self.out.surface(j), &SurfaceRecord::from(&surface))?;
                    diagnostics.push_str(&format!(
                        "{j},{:?},{:?}\n",
                        diag.log_likelihood, diag.acceptance_rate
                    ));
                    persisted += 1;
                }
                Err(e) => failures.push((j, e.to_string())),
            }
        }
        files::write_text(&self.out.calibration_diagnostics(), &diagnostics)?;
        if !failures.is_empty() {
            return Err(GpError::Calibration { failures }.into());
        }
        Ok(CalibrateSummary {
            n_surfaces: persisted,
            surfaces_dir: self.out.surfaces_dir(),
            diagnostics_path: self.out.calibration_diagnostics(),
        })
    }

    fn load_surfaces(&self, surfaces_dir: &Path) -> Result<Vec<GpSurface>, PipelineError> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(surfaces_dir)
            .map_err(|source| PipelineError::Io {
                path: surfaces_dir.to_path_buf(),
                source,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        let mut surfaces = Vec::with_capacity(paths.len());
        for path in paths {
            let record: SurfaceRecord = files::read_json(&path)?;
            surfaces.push(GpSurface::try_from(record)?);
        }
        Ok(surfaces)
    }

    /// Check that surfaces, measurements, and the configured sweep describe
    /// the same frequency grid.
    fn check_alignment(
        &self,
        sweep: &FrequencySweep,
        surfaces: &[GpSurface],
        measurement: &MeasurementFile,
    ) -> Result<(), PipelineError> {
        let mut offenders = Vec::new();
        if surfaces.len() != sweep.len() {
            offenders.push(format!(
                "{} surfaces but sweep has {} frequencies",
                surfaces.len(),
                sweep.len()
            ));
        }
        if measurement.rows.len() != sweep.len() {
            offenders.push(format!(
                "{} measurement rows but sweep has {} frequencies",
                measurement.rows.len(),
                sweep.len()
            ));
        }
        for (j, surface) in surfaces.iter().enumerate() {
            if surface.frequency_index() != j {
                offenders.push(format!(
                    "surface file {j} calibrates frequency {}",
                    surface.frequency_index()
                ));
            }
        }
        if measurement.rows.len() == sweep.len() {
            for (row, (&omega, j)) in measurement
                .rows
                .iter()
                .zip(sweep.frequencies().iter().zip(0..))
            {
                if row.freq_index != j {
                    offenders.push(format!(
                        "measurement row {j} labeled freq_index {}",
                        row.freq_index
                    ));
                }
                if (row.omega - omega).abs() > 1e-9 * omega.abs() {
                    offenders.push(format!(
                        "measurement omega {} differs from sweep omega {omega} at index {j}",
                        row.omega
                    ));
                }
            }
        }
        if offenders.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Alignment(offenders.join("; ")))
        }
    }

    /// Run the M-run ensemble against the persisted surfaces and
    /// measurements; write archives, tallies, the baseline, and metadata.
    pub fn identify(
        &self,
        surfaces_dir: &Path,
        measurement_path: &Path,
    ) -> Result<IdentifySummary, PipelineError> {
        let model = self.build_model()?;
        let sweep = self.build_sweep(&model)?;
        let surfaces = self.load_surfaces(surfaces_dir)?;
        let text = files::read_text(measurement_path)?;
        let measurement = MeasurementFile::read_csv(text.as_bytes())?;
        self.check_alignment(&sweep, &surfaces, &measurement)?;

        let space = self.search_space(&model)?;
        let annealer = self.annealer(space);
        let ensemble_config = EnsembleConfig {
            m_runs: self.config.ensemble.runs,
            n_objectives: self.config.ensemble.objectives_per_run,
            seed: self.config.seed,
            ..Default::default()
        };
        let surfaces = Arc::new(surfaces);
        let measured: Arc<Vec<f64>> =
            Arc::new(measurement.rows.iter().map(|r| r.delta_y).collect());
        let outcome = ensemble::run_ensemble(&annealer, sweep.len(), &ensemble_config, |subset| {
            build_discrepancy_objectives(&surfaces, &measured, subset, space)
        })?;

        for run in &outcome.runs {
            let path = self.out.archive(run.run);
            let mut buf = Vec::new();
            run.archive
                .write_csv(&mut buf)
                .map_err(|source| PipelineError::Io {
                    path: path.clone(),
                    source,
                })?;
            files::write_text(&path, &String::from_utf8(buf).expect("csv is utf-8"))?;
        }

        let solutions = outcome.archive_solutions();
        let full = voting::voting_score(&solutions)?;
        let ranges = voting::range_voting_score(&solutions)?;
        let partial = voting::partial_voting_score(&solutions)?;
        let partial_ranges = voting::partial_range_voting_score(&solutions)?;
        let baseline = voting::majority_vote_baseline(&solutions)?;

        files::write_tally_csv(&self.out.tally("solution"), &solution_tally_rows(&full))?;
        files::write_tally_csv(&self.out.tally("range"), &range_tally_rows(&ranges))?;
        files::write_tally_csv(
            &self.out.tally("partial_solution"),
            &solution_tally_rows(&partial),
        )?;
        files::write_tally_csv(
            &self.out.tally("partial_range"),
            &range_tally_rows(&partial_ranges),
        )?;
        files::write_tally_csv(&self.out.tally("baseline"), &solution_tally_rows(&baseline))?;

        let sizes: Vec<usize> = solutions.iter().map(|a| a.len()).collect();
        let total: usize = sizes.iter().sum();
        let m = sizes.len();
        let qualifying: Vec<usize> = sizes
            .iter()
            .enumerate()
            .filter(|(_, &s)| m * s <= total)
            .map(|(i, _)| i)
            .collect();
        let meta = IdentifyMeta {
            m_runs: ensemble_config.m_runs,
            n_objectives: ensemble_config.n_objectives,
            master_seed: self.config.seed,
            epsilon: self.config.ensemble.epsilon,
            budget: self.config.ensemble.budget,
            subsets: outcome.runs.iter().map(|r| r.subset.clone()).collect(),
            anneal_seeds: outcome.runs.iter().map(|r| r.anneal_seed).collect(),
            archive_sizes: sizes,
            qualifying_runs: qualifying,
        };
        files::write_json(&self.out.identify_meta(), &meta)?;

        let validation = self.config.truth.map(|truth| {
            let key = SolutionKey::new(truth.segment, truth.severity);
            let range = RangeKey::from_solution(&key);
            ValidationSummary {
                truth,
                solution_rank: rank_of(&full, &key),
                range_rank: rank_of(&ranges, &range),
                partial_solution_rank: rank_of(&partial, &key),
                partial_range_rank: rank_of(&partial_ranges, &range),
                baseline_rank: rank_of(&baseline, &key),
            }
        });
        if let Some(v) = &validation {
            files::write_json(&self.out.validation(), v)?;
        }

        Ok(IdentifySummary {
            runs: meta.m_runs,
            archive_sizes: meta.archive_sizes.clone(),
            tallies_dir: self.out.root.clone(),
            validation,
        })
    }

    /// Render the four tally panels plus the baseline into a markdown report
    /// and plot-ready score grids.
    pub fn report(&self, tallies_dir: &Path) -> Result<ReportSummary, PipelineError> {
        let layout = OutputLayout::new(tallies_dir);
        let k = self.config.report_top_k;
        let mut sections = Vec::new();
        let mut missing = Vec::new();
        let panels = [
            ("I", "Voting score per fault scenario", "solution", false),
            ("II", "Voting score per severity range", "range", true),
            (
                "III",
                "Partial voting score per fault scenario",
                "partial_solution",
                false,
            ),
            (
                "IV",
                "Partial voting score per severity range",
                "partial_range",
                true,
            ),
        ];

        let mut out = String::from("# Fault identification report\n");
        for (tag, title, name, is_range) in panels {
            let rows = read_tally_csv(&layout.tally(name))?;
            out.push_str(&render_panel(tag, title, &rows, k, is_range));
            sections.push(name.to_string());
        }
        match read_tally_csv(&layout.tally("baseline")) {
            Ok(rows) => {
                out.push_str(&render_panel(
                    "Baseline",
                    "Occurrence counts (majority voting)",
                    &rows,
                    k,
                    false,
                ));
                sections.push("baseline".to_string());
            }
            Err(PipelineError::Io { .. }) => {
                out.push_str("\n## Baseline\n\nNo baseline tally present; panel omitted.\n");
                missing.push("baseline".to_string());
            }
            Err(e) => return Err(e),
        }
        files::write_text(&layout.report(), &out)?;

        for name in ["solution", "range"] {
            let rows = read_tally_csv(&layout.tally(name))?;
            let mut grid = String::from("segment,severity_or_range,score\n");
            for row in rows {
                grid.push_str(&format!(
                    "{},{},{:?}\n",
                    row.segment, row.severity_or_range, row.score
                ));
            }
            files::write_text(&layout.plot_grid(name), &grid)?;
        }
        Ok(ReportSummary {
            report_path: layout.report(),
            panels: sections,
            omitted: missing,
        })
    }
}

/// One discrepancy objective per selected surface: |surface(α) − ΔY_measured|.
fn build_discrepancy_objectives(
    surfaces: &Arc<Vec<GpSurface>>,
    measured: &Arc<Vec<f64>>,
    subset: &[usize],
    space: SearchSpace,
) -> ObjectiveSet {
    let evals: Vec<Box<ObjectiveFn>> = subset
        .iter()
        .map(|&j| {
            let surfaces = Arc::clone(surfaces);
            let measured = Arc::clone(measured);
            Box::new(move |segment: usize, severity: f64| {
                (surfaces[j].predict_mean([segment as f64, severity]) - measured[j]).abs()
            }) as Box<ObjectiveFn>
        })
        .collect();
    ObjectiveSet::with_estimated_ranges(evals, space, 21)
        .expect("non-empty subset with positive ranges")
}

fn rank_of<K: Ord + Copy>(tally: &voting::VotingTally<K>, key: &K) -> Option<usize> {
    voting::rank_report(tally, usize::MAX)
        .iter()
        .position(|e| e.key == *key)
        .map(|i| i + 1)
}

fn render_panel(tag: &str, title: &str, rows: &[TallyRow], k: usize, is_range: bool) -> String {
    let mut out = format!("\n## {tag}: {title}\n\n");
    let label = if is_range {
        "Severity range"
    } else {
        "Severity"
    };
    out.push_str(&format!(
        "| Rank | Segment | {label} | Voting score | Score % |\n"
    ));
    out.push_str("|---|---|---|---|---|\n");
    for (i, row) in rows.iter().take(k).enumerate() {
        out.push_str(&format!(
            "| {} | {} | {} | {:.4} | {} |\n",
            i + 1,
            row.segment,
            row.severity_or_range,
            row.score,
            voting::format_percentage(row.percentage),
        ));
    }
    out
}

/// Outcome summaries returned by the stages.
#[derive(Debug)]
pub struct SimulateSummary {
    pub n_frequencies: usize,
    pub n_scenarios: usize,
    pub training_path: PathBuf,
    pub measurement_path: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CalibrateSummary {
    pub n_surfaces: usize,
    pub surfaces_dir: PathBuf,
    pub diagnostics_path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentifyMeta {
    pub m_runs: usize,
    pub n_objectives: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub budget: usize,
    pub subsets: Vec<Vec<usize>>,
    pub anneal_seeds: Vec<u64>,
    pub archive_sizes: Vec<usize>,
    pub qualifying_runs: Vec<usize>,
}

/// Rank (1-based) of the injected truth key in each tally; `None` when the
/// key received no score at all.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub truth: TruthSpec,
    pub solution_rank: Option<usize>,
    pub range_rank: Option<usize>,
    pub partial_solution_rank: Option<usize>,
    pub partial_range_rank: Option<usize>,
    pub baseline_rank: Option<usize>,
}

#[derive(Debug)]
pub struct IdentifySummary {
    pub runs: usize,
    pub archive_sizes: Vec<usize>,
    pub tallies_dir: PathBuf,
    pub validation: Option<ValidationSummary>,
}

#[derive(Debug)]
pub struct ReportSummary {
    pub report_path: PathBuf,
    pub panels: Vec<String>,
    pub omitted: Vec<String>,
}
