//! Per-frequency Gaussian-process response surfaces.
//!
//! Each surface maps a fault input (location, severity) to the admittance
//! change observed at one excitation frequency. Two kernels are supported: a
//! single squared exponential over the full input distance, and a product of
//! two squared exponentials with separate length scales for the location and
//! severity coordinates. Hyperparameters are trained by random-walk
//! Metropolis on the log parameters targeting the marginal likelihood under
//! broad log-normal priors; the highest-likelihood sample visited wins.
//!
//! Inputs are rescaled to unit range per dimension before any kernel
//! evaluation (location spans 1..n while severity spans a fraction of one),
//! and the scaling is inverted transparently on queries.

mod mcmc;

use nalgebra::{Cholesky, DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mcmc::{FitDiagnostics, McmcConfig};

/// Fault input point: `[location, severity]` with 1-based location embedded
/// in the reals.
pub type InputPoint = [f64; 2];

/// Relative jitter added to the Gram diagonal before factorization.
const JITTER_SCALE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("invalid training set: {0}")]
    Invalid(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("calibration failed for {} surface(s): {}", failures.len(),
            failures.iter().map(|(i, e)| format!("[{i}] {e}")).collect::<Vec<_>>().join("; "))]
    Calibration { failures: Vec<(usize, String)> },
}

/// Kernel family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// θ₁·exp(−d²/θ₂) over the full squared input distance.
    SingleSe,
    /// θ₁·exp(−d_L²/θ₂) · θ₃·exp(−d_S²/θ₄) with separate location and
    /// severity factors.
    ProductSe,
}

/// Kernel hyperparameters plus observation noise.
///
/// `theta1`/`theta3` are amplitude factors (response units squared),
/// `theta2`/`theta4` length-scale denominators (input units squared). The
/// single-SE kind ignores `theta3`/`theta4` (kept at 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub kind: KernelKind,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    /// Observation noise standard deviation (response units).
    pub sigma_n: f64,
}

impl KernelParams {
    pub fn single(theta1: f64, theta2: f64, sigma_n: f64) -> Result<Self, GpError> {
        Self::validated(Self {
            kind: KernelKind::SingleSe,
            theta1,
            theta2,
            theta3: 1.0,
            theta4: 1.0,
            sigma_n,
        })
    }

    pub fn product(
        theta1: f64,
        theta2: f64,
        theta3: f64,
        theta4: f64,
        sigma_n: f64,
    ) -> Result<Self, GpError> {
        Self::validated(Self {
            kind: KernelKind::ProductSe,
            theta1,
            theta2,
            theta3,
            theta4,
            sigma_n,
        })
    }

    fn validated(p: Self) -> Result<Self, GpError> {
        let thetas = [p.theta1, p.theta2, p.theta3, p.theta4];
        if thetas.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(GpError::Invalid(format!(
                "kernel amplitudes and length scales must be strictly positive: {p:?}"
            )));
        }
        if !(p.sigma_n.is_finite() && p.sigma_n >= 0.0) {
            return Err(GpError::Invalid(format!(
                "noise std must be finite and non-negative: {p:?}"
            )));
        }
        Ok(p)
    }

    /// Prior covariance at zero distance, k(x, x).
    pub fn prior_variance(&self) -> f64 {
        match self.kind {
            KernelKind::SingleSe => self.theta1,
            KernelKind::ProductSe => self.theta1 * self.theta3,
        }
    }
}

/// Covariance between two input points under `params`.
pub fn kernel_eval(params: &KernelParams, a: InputPoint, b: InputPoint) -> f64 {
    let dl = a[0] - b[0];
    let ds = a[1] - b[1];
    match params.kind {
        KernelKind::SingleSe => {
            let d2 = dl * dl + ds * ds;
            params.theta1 * (-d2 / params.theta2).exp()
        }
        KernelKind::ProductSe => {
            // Product of the two exponential factors, fused into one exp.
            params.theta1
                * params.theta3
                * (-(dl * dl) / params.theta2 - (ds * ds) / params.theta4).exp()
        }
    }
}

/// Per-dimension unit-range rescaling derived from training inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputScaling {
    min: [f64; 2],
    range: [f64; 2],
}

impl InputScaling {
    pub fn from_inputs(inputs: &[InputPoint]) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in inputs {
            for d in 0..2 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        let mut range = [0.0; 2];
        for d in 0..2 {
            let r = max[d] - min[d];
            range[d] = if r > 0.0 { r } else { 1.0 };
        }
        Self { min, range }
    }

    pub fn apply(&self, p: InputPoint) -> InputPoint {
        [
            (p[0] - self.min[0]) / self.range[0],
            (p[1] - self.min[1]) / self.range[1],
        ]
    }
}

/// One frequency's training set: inputs, outputs and the frequency index it
/// calibrates. Exact duplicate input rows are merged by averaging their
/// outputs so the noise-free Gram matrix stays non-singular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    inputs: Vec<InputPoint>,
    outputs: Vec<f64>,
    frequency_index: usize,
}

impl TrainingSet {
    pub fn new(
        inputs: Vec<InputPoint>,
        outputs: Vec<f64>,
        frequency_index: usize,
    ) -> Result<Self, GpError> {
        if inputs.len() != outputs.len() {
            return Err(GpError::Invalid(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
            || outputs.iter().any(|y| !y.is_finite())
        {
            return Err(GpError::Invalid("non-finite training values".into()));
        }
        // Merge duplicates, preserving first-occurrence order.
        let mut seen: std::collections::HashMap<(u64, u64), usize> =
            std::collections::HashMap::new();
        let mut merged_inputs: Vec<InputPoint> = Vec::with_capacity(inputs.len());
        let mut sums: Vec<(f64, usize)> = Vec::with_capacity(inputs.len());
        for (p, y) in inputs.into_iter().zip(outputs) {
            let key = (p[0].to_bits(), p[1].to_bits());
            match seen.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => {
                    let idx = *e.get();
                    sums[idx].0 += y;
                    sums[idx].1 += 1;
                }
                std::collections::hash_map::Entry::Vacant(e) => {
                    e.insert(merged_inputs.len());
                    merged_inputs.push(p);
                    sums.push((y, 1));
                }
            }
        }
        let merged_outputs: Vec<f64> = sums.into_iter().map(|(s, c)| s / c as f64).collect();
        if merged_inputs.is_empty() {
            return Err(GpError::Invalid("empty training set".into()));
        }
        Ok(Self {
            inputs: merged_inputs,
            outputs: merged_outputs,
            frequency_index,
        })
    }

    pub fn inputs(&self) -> &[InputPoint] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn frequency_index(&self) -> usize {
        self.frequency_index
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Gram matrix of the normalized inputs (no noise or jitter).
fn gram_matrix(params: &KernelParams, scaled: &[InputPoint]) -> DMatrix<f64> {
    let m = scaled.len();
    DMatrix::from_fn(m, m, |i, j| kernel_eval(params, scaled[i], scaled[j]))
}

struct Factorized {
    chol: Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
    log_det: f64,
}

/// Cholesky of K + σ_n²I + jitter, plus the solve against the outputs.
fn factorize(
    params: &KernelParams,
    scaled: &[InputPoint],
    outputs: &[f64],
) -> Result<Factorized, GpError> {
    let m = scaled.len();
    let mut k = gram_matrix(params, scaled);
    let jitter = JITTER_SCALE * k.trace() / m as f64;
    let ridge = params.sigma_n * params.sigma_n + jitter;
    for i in 0..m {
        k[(i, i)] += ridge;
    }
    let chol = Cholesky::new(k).ok_or_else(|| {
        GpError::Numerical(format!("Gram matrix not positive definite for {params:?}"))
    })?;
    let y = DVector::from_row_slice(outputs);
    let alpha = chol.solve(&y);
    let log_det = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|d| d.ln())
            .sum::<f64>();
    Ok(Factorized {
        chol,
        alpha,
        log_det,
    })
}

/// Log marginal likelihood of `training` under `params`:
/// −½·yᵀ(K+σ_n²I)⁻¹y − ½·log|K+σ_n²I| − (m/2)·log 2π.
pub fn log_marginal_likelihood(
    training: &TrainingSet,
    params: &KernelParams,
) -> Result<f64, GpError> {
    let scaling = InputScaling::from_inputs(training.inputs());
    let scaled: Vec<InputPoint> = training
        .inputs()
        .iter()
        .map(|&p| scaling.apply(p))
        .collect();
    let fac = factorize(params, &scaled, training.outputs())?;
    let m = training.len() as f64;
    let y = DVector::from_row_slice(training.outputs());
    let value =
        -0.5 * y.dot(&fac.alpha) - 0.5 * fac.log_det - 0.5 * m * (2.0 * std::f64::consts::PI).ln();
    if !value.is_finite() {
        return Err(GpError::Numerical(format!(
            "log marginal likelihood is not finite for {params:?}"
        )));
    }
    Ok(value)
}

/// A fitted response surface: training data, kernel parameters, and the
/// cached factorization they imply. Immutable once built; predictions from
/// many threads are safe.
#[derive(Debug)]
pub struct GpSurface {
    training: TrainingSet,
    params: KernelParams,
    scaling: InputScaling,
    scaled_inputs: Vec<InputPoint>,
    factorized: FactorizedState,
}

// Cholesky<f64, Dyn> has no Debug; wrap it.
struct FactorizedState(Factorized);

impl std::fmt::Debug for FactorizedState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FactorizedState").finish_non_exhaustive()
    }
}

impl GpSurface {
    /// Build a surface from explicit parameters (no hyperparameter search).
    pub fn with_params(training: TrainingSet, params: KernelParams) -> Result<Self, GpError> {
        let scaling = InputScaling::from_inputs(training.inputs());
        let scaled_inputs: Vec<InputPoint> = training
            .inputs()
            .iter()
            .map(|&p| scaling.apply(p))
            .collect();
        let factorized = factorize(&params, &scaled_inputs, training.outputs())?;
        Ok(Self {
            training,
            params,
            scaling,
            scaled_inputs,
            factorized: FactorizedState(factorized),
        })
    }

    /// Fit hyperparameters by random-walk Metropolis and keep the
    /// highest-likelihood sample visited. Deterministic under a fixed seed.
    pub fn fit(
        training: TrainingSet,
        kind: KernelKind,
        config: &McmcConfig,
    ) -> Result<Self, GpError> {
        Self::fit_with_diagnostics(training, kind, config).map(|(s, _)| s)
    }

    /// As [`GpSurface::fit`], also reporting the final log likelihood and the
    /// Metropolis acceptance rate.
    pub fn fit_with_diagnostics(
        training: TrainingSet,
        kind: KernelKind,
        config: &McmcConfig,
    ) -> Result<(Self, FitDiagnostics), GpError> {
        let (params, diag) = mcmc::maximize_likelihood(&training, kind, config)?;
        Ok((Self::with_params(training, params)?, diag))
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn training(&self) -> &TrainingSet {
        &self.training
    }

    pub fn frequency_index(&self) -> usize {
        self.training.frequency_index()
    }

    /// Predictive mean and variance at a raw (location, severity) query.
    /// The variance is clamped at zero.
    pub fn predict(&self, query: InputPoint) -> (f64, f64) {
        let q = self.scaling.apply(query);
        let m = self.scaled_inputs.len();
        let k_star = DVector::from_fn(m, |i, _| {
            kernel_eval(&self.params, q, self.scaled_inputs[i])
        });
        let mean = k_star.dot(&self.factorized.0.alpha);
        let v = self.factorized.0.chol.solve(&k_star);
        let variance = self.params.prior_variance() - k_star.dot(&v);
        (mean, variance.max(0.0))
    }

    /// Predictive mean only (the calibration surface value). Skips the
    /// variance back-solve, which matters in the optimizer's hot loop.
    pub fn predict_mean(&self, query: InputPoint) -> f64 {
        let q = self.scaling.apply(query);
        self.scaled_inputs
            .iter()
            .zip(self.factorized.0.alpha.iter())
            .map(|(&x, a)| a * kernel_eval(&self.params, q, x))
            .sum()
    }

    /// Log marginal likelihood of the surface's own training data.
    pub fn log_marginal_likelihood(&self) -> Result<f64, GpError> {
        log_marginal_likelihood(&self.training, &self.params)
    }

    /// Root-mean-square error of the predictive mean at the training points.
    pub fn training_rmse(&self) -> f64 {
        let m = self.training.len();
        let sse: f64 = self
            .training
            .inputs()
            .iter()
            .zip(self.training.outputs())
            .map(|(&x, &y)| {
                let e = self.predict_mean(x) - y;
                e * e
            })
            .sum();
        (sse / m as f64).sqrt()
    }
}

/// Serializable snapshot of a surface; the factorization is rebuilt on load,
/// so a round trip reproduces predictions exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub training: TrainingSet,
    pub params: KernelParams,
}

impl From<&GpSurface> for SurfaceRecord {
    fn from(surface: &GpSurface) -> Self {
        Self {
            training: surface.training.clone(),
            params: surface.params,
        }
    }
}

impl TryFrom<SurfaceRecord> for GpSurface {
    type Error = GpError;

    fn try_from(record: SurfaceRecord) -> Result<Self, GpError> {
        GpSurface::with_params(record.training, record.params)
    }
}

/// Fit one surface per training set, in parallel, preserving order. Each fit
/// uses the same MCMC configuration, so results depend only on the set
/// itself and permuting the input order permutes the output identically.
pub fn calibrate_each(
    sets: Vec<TrainingSet>,
    kind: KernelKind,
    config: &McmcConfig,
) -> Vec<Result<(GpSurface, FitDiagnostics), GpError>> {
    sets.into_par_iter()
        .map(|set| GpSurface::fit_with_diagnostics(set, kind, config))
        .collect()
}

/// As [`calibrate_each`], but failing as a whole if any surface failed,
/// with every per-surface error collected into the message.
pub fn calibrate_all(
    sets: Vec<TrainingSet>,
    kind: KernelKind,
    config: &McmcConfig,
) -> Result<Vec<GpSurface>, GpError> {
    if sets.is_empty() {
        return Err(GpError::Invalid("no training sets to calibrate".into()));
    }
    let results = calibrate_each(sets, kind, config);
    let mut surfaces = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((s, _)) => surfaces.push(s),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if failures.is_empty() {
        Ok(surfaces)
    } else {
        Err(GpError::Calibration { failures })
    }
}
