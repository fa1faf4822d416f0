//! Pipeline configuration: one JSON document drives every stage.
//!
//! Unknown keys are rejected so typos fail loudly. Every stage derives its
//! randomness from the single master seed through named substreams.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::gp::KernelKind;
use crate::model::{ModelError, ResponseChannel, StructuralModel};
use crate::sweep::FrequencySweep;

use super::PipelineError;

/// Structural model: either a path to a saved model JSON or an inline
/// uniform-chain description with optional per-segment overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Load a serialized model instead of building one inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_mass")]
    pub segment_mass: f64,
    #[serde(default = "default_stiffness")]
    pub segment_stiffness: f64,
    /// (mass-proportional, stiffness-proportional) Rayleigh coefficients.
    #[serde(default = "default_rayleigh")]
    pub rayleigh: (f64, f64),
    #[serde(default = "default_coupling_segment")]
    pub coupling_segment: usize,
    #[serde(default = "default_coupling_strength")]
    pub coupling_strength: f64,
    #[serde(default = "default_k_c")]
    pub k_c: f64,
    /// Optional per-segment masses overriding the uniform value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<f64>>,
    /// Optional per-segment stiffnesses overriding the uniform value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stiffnesses: Option<Vec<f64>>,
    /// Optional full coupling vector overriding the single-entry form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Vec<f64>>,
}

fn default_segments() -> usize {
    25
}
fn default_mass() -> f64 {
    0.2
}
fn default_stiffness() -> f64 {
    5.0e6
}
fn default_rayleigh() -> (f64, f64) {
    (1e-3, 1e-6)
}
fn default_coupling_segment() -> usize {
    8
}
fn default_coupling_strength() -> f64 {
    5.0e6
}
fn default_k_c() -> f64 {
    1.0e7
}

impl Default for ModelSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ModelSpec {
    pub fn build(&self, base_dir: &Path) -> Result<StructuralModel, PipelineError> {
        if let Some(path) = &self.path {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            let text = std::fs::read_to_string(&resolved).map_err(|source| PipelineError::Io {
                path: resolved.clone(),
                source,
            })?;
            let model: StructuralModel =
                serde_json::from_str(&text).map_err(|source| PipelineError::Json {
                    path: resolved,
                    source,
                })?;
            return Ok(model);
        }
        let n = self.segments;
        let masses = match &self.masses {
            Some(m) => m.clone(),
            None => vec![self.segment_mass; n],
        };
        let stiffnesses = match &self.stiffnesses {
            Some(k) => k.clone(),
            None => vec![self.segment_stiffness; n],
        };
        let coupling = match &self.coupling {
            Some(c) => c.clone(),
            None => {
                if self.coupling_segment == 0 || self.coupling_segment > n {
                    return Err(ModelError::Invalid(format!(
                        "coupling segment {} outside 1..={n}",
                        self.coupling_segment
                    ))
                    .into());
                }
                let mut c = vec![0.0; n];
                c[self.coupling_segment - 1] = self.coupling_strength;
                c
            }
        };
        Ok(StructuralModel::new(
            masses,
            stiffnesses,
            self.rayleigh.0,
            self.rayleigh.1,
            coupling,
            self.k_c,
        )?)
    }
}

/// Excitation sweep: bands around chosen resonance indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_resonances")]
    pub resonance_indices: Vec<usize>,
    #[serde(default = "default_points_per_band")]
    pub points_per_band: usize,
    /// Relative half-width of each band around its resonance.
    #[serde(default = "default_halfwidth")]
    pub band_halfwidth_frac: f64,
}

fn default_resonances() -> Vec<usize> {
    vec![14, 16, 21, 23]
}
fn default_points_per_band() -> usize {
    10
}
fn default_halfwidth() -> f64 {
    0.001
}

impl Default for SweepSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl SweepSpec {
    pub fn build(&self, model: &StructuralModel) -> Result<FrequencySweep, PipelineError> {
        Ok(FrequencySweep::around_resonances(
            model,
            &self.resonance_indices,
            self.points_per_band,
            self.band_halfwidth_frac,
        )?)
    }
}

/// Training-data generation controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    #[serde(default = "default_scenarios")]
    pub scenarios: usize,
    #[serde(default = "default_noise")]
    pub noise_level: f64,
    #[serde(default = "default_severity_max")]
    pub severity_max: f64,
    #[serde(default)]
    pub channel: ResponseChannel,
}

fn default_scenarios() -> usize {
    270
}
fn default_noise() -> f64 {
    0.0015
}
fn default_severity_max() -> f64 {
    0.1
}

impl Default for TrainingSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Surface-fitting controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
    #[serde(default = "default_mcmc_samples")]
    pub mcmc_samples: usize,
    #[serde(default = "default_mcmc_step")]
    pub mcmc_step_size: f64,
}

fn default_kernel() -> KernelKind {
    KernelKind::ProductSe
}
fn default_mcmc_samples() -> usize {
    2000
}
fn default_mcmc_step() -> f64 {
    0.3
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Many-objective evaluation controls: M seeded runs over random N-subsets.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_objectives_per_run")]
    pub objectives_per_run: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_cooling")]
    pub cooling_rate: f64,
    #[serde(default = "default_p_location")]
    pub p_location: f64,
    /// Severity step std as a fraction of the severity range.
    #[serde(default = "default_step_frac")]
    pub severity_step_frac: f64,
}

fn default_runs() -> usize {
    30
}
fn default_objectives_per_run() -> usize {
    10
}
fn default_epsilon() -> f64 {
    crate::anneal::DEFAULT_EPSILON
}
fn default_budget() -> usize {
    100_000
}
fn default_t_max() -> f64 {
    100.0
}
fn default_t_min() -> f64 {
    1e-4
}
fn default_cooling() -> f64 {
    0.8
}
fn default_p_location() -> f64 {
    0.3
}
fn default_step_frac() -> f64 {
    0.05
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

/// Injected ground truth for validation mode.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub segment: usize,
    pub severity: f64,
}

/// The full pipeline configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub calibration: CalibrationSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthSpec>,
    #[serde(default = "default_top_k")]
    pub report_top_k: usize,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_top_k() -> usize {
    5
}

impl Default for PipelineConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl PipelineConfig {
    /// Parse and validate a config file. Relative model paths resolve
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf), PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: PipelineConfig =
            serde_json::from_str(&text).map_err(|source| PipelineError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        config.validate()?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, base))
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: String| Err(PipelineError::Config(msg));
        if self.model.path.is_none() && self.model.segments == 0 {
            return bad("model.segments must be positive".into());
        }
        if self.sweep.resonance_indices.is_empty() {
            return bad("sweep.resonance_indices must not be empty".into());
        }
        if self.sweep.points_per_band == 0 {
            return bad("sweep.points_per_band must be positive".into());
        }
        if !self.sweep.band_halfwidth_frac.is_finite() || self.sweep.band_halfwidth_frac <= 0.0 {
            return bad("sweep.band_halfwidth_frac must be positive".into());
        }
        if self.training.scenarios == 0 {
            return bad("training.scenarios must be positive".into());
        }
        if !self.training.noise_level.is_finite() || self.training.noise_level < 0.0 {
            return bad("training.noise_level must be non-negative".into());
        }
        if !self.training.severity_max.is_finite()
            || self.training.severity_max <= 0.0
            || self.training.severity_max > 1.0
        {
            return bad("training.severity_max must lie in (0, 1]".into());
        }
        if self.calibration.mcmc_samples == 0 {
            return bad("calibration.mcmc_samples must be positive".into());
        }
        if !self.calibration.mcmc_step_size.is_finite() || self.calibration.mcmc_step_size <= 0.0 {
            return bad("calibration.mcmc_step_size must be positive".into());
        }
        if self.ensemble.runs == 0 {
            return bad("ensemble.runs must be positive".into());
        }
        if self.ensemble.objectives_per_run == 0 {
            return bad("ensemble.objectives_per_run must be positive".into());
        }
        if !self.ensemble.epsilon.is_finite() || self.ensemble.epsilon <= 0.0 {
            return bad("ensemble.epsilon must be positive".into());
        }
        if self.ensemble.t_max <= self.ensemble.t_min || self.ensemble.t_min <= 0.0 {
            return bad("ensemble temperatures need t_max > t_min > 0".into());
        }
        if !(self.ensemble.cooling_rate > 0.0 && self.ensemble.cooling_rate < 1.0) {
            return bad("ensemble.cooling_rate must lie in (0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.ensemble.p_location) {
            return bad("ensemble.p_location must lie in [0, 1]".into());
        }
        if !self.ensemble.severity_step_frac.is_finite() || self.ensemble.severity_step_frac < 0.0 {
            return bad("ensemble.severity_step_frac must be non-negative".into());
        }
        if let Some(truth) = &self.truth {
            if truth.segment == 0 {
                return bad("truth.segment is 1-based and must be positive".into());
            }
            if truth.severity.is_nan() || truth.severity < 0.0 || truth.severity > 1.0 {
                return bad("truth.severity must lie in [0, 1]".into());
            }
        }
        if self.report_top_k == 0 {
            return bad("report_top_k must be positive".into());
        }
        Ok(())
    }
}
