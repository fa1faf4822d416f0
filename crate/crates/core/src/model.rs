//! Reduced-order coupled piezoelectric–structural model.
//!
//! The structure is an n-segment lumped mass–spring chain, fixed at one end,
//! with one degree of freedom per segment. A transducer couples into the chain
//! through the electro-mechanical coupling vector `coupling` and the
//! reciprocal capacitance `k_c`. Under harmonic excitation at frequency ω the
//! transducer admittance is
//!
//! ```text
//! Y(ω, α) = ωi / (k_c − cᵀ (K_d − ω²M + iωC)⁻¹ c)
//! ```
//!
//! where `K_d = Σ_j k_hj (1 − α_j)` is the stiffness assembled from the
//! per-segment healthy contributions `k_hj` scaled by the fault index vector
//! α, and `C = aM + bK` is Rayleigh damping built from the healthy stiffness.
//! The scalar response used throughout the crate is a channel of the
//! admittance change `ΔY(ω, α) = Y(ω, α) − Y(ω, 0)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("singular dynamic stiffness at omega = {omega} rad/s")]
    SingularDynamicStiffness { omega: f64 },
}

/// Which scalar channel of the complex admittance change to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseChannel {
    /// |ΔY|, phase-robust magnitude of the complex change.
    #[default]
    Magnitude,
    Real,
    Imaginary,
}

impl ResponseChannel {
    pub fn extract(self, value: Complex64) -> f64 {
        match self {
            ResponseChannel::Magnitude => value.norm(),
            ResponseChannel::Real => value.re,
            ResponseChannel::Imaginary => value.im,
        }
    }
}

/// Fault index vector α ∈ \[0,1\]^n; α_j is the fractional stiffness loss of
/// segment j. The compact single-fault form is (location, severity) with
/// 1-based location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultScenario {
    alpha: Vec<f64>,
}

impl FaultScenario {
    /// All-zero fault vector (healthy structure).
    pub fn healthy(n_segments: usize) -> Self {
        Self {
            alpha: vec![0.0; n_segments],
        }
    }

    /// Single fault at 1-based `location` with the given severity.
    pub fn single(location: usize, severity: f64, n_segments: usize) -> Result<Self, ModelError> {
        if location == 0 || location > n_segments {
            return Err(ModelError::Invalid(format!(
                "fault location {location} outside 1..={n_segments}"
            )));
        }
        let mut alpha = vec![0.0; n_segments];
        alpha[location - 1] = severity;
        Self::from_alpha(alpha)
    }

    /// Full fault index vector; every entry must lie in [0, 1].
    pub fn from_alpha(alpha: Vec<f64>) -> Result<Self, ModelError> {
        if alpha.is_empty() {
            return Err(ModelError::Invalid("empty fault vector".into()));
        }
        if let Some(bad) = alpha
            .iter()
            .find(|a| !(0.0..=1.0).contains(*a) || a.is_nan())
        {
            return Err(ModelError::Invalid(format!(
                "fault index {bad} outside [0, 1]"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn is_healthy(&self) -> bool {
        self.alpha.iter().all(|&a| a == 0.0)
    }

    /// Compact (location, severity) form when exactly one entry is nonzero.
    pub fn as_single(&self) -> Option<(usize, f64)> {
        let mut found = None;
        for (j, &a) in self.alpha.iter().enumerate() {
            if a != 0.0 {
                if found.is_some() {
                    return None;
                }
                found = Some((j + 1, a));
            }
        }
        found
    }
}

/// Lumped n-segment chain with piezoelectric coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralModel {
    /// Per-segment masses (kg), strictly positive.
    masses: Vec<f64>,
    /// Per-segment healthy spring stiffnesses (N/m), strictly positive.
    /// Spring j connects segment j to segment j−1 (segment 0 to ground).
    healthy_stiffness: Vec<f64>,
    /// Rayleigh mass-proportional damping coefficient (1/s scale).
    rayleigh_a: f64,
    /// Rayleigh stiffness-proportional damping coefficient (s scale).
    rayleigh_b: f64,
    /// Electro-mechanical coupling vector (N/C); nonzero at the transducer
    /// attachment location.
    coupling: Vec<f64>,
    /// Reciprocal of the transducer capacitance (1/F).
    k_c: f64,
}

impl StructuralModel {
    pub fn new(
        masses: Vec<f64>,
        healthy_stiffness: Vec<f64>,
        rayleigh_a: f64,
        rayleigh_b: f64,
        coupling: Vec<f64>,
        k_c: f64,
    ) -> Result<Self, ModelError> {
        let n = masses.len();
        if n == 0 {
            return Err(ModelError::Invalid(
                "model needs at least one segment".into(),
            ));
        }
        if healthy_stiffness.len() != n {
            return Err(ModelError::Dimension {
                expected: n,
                got: healthy_stiffness.len(),
            });
        }
        if coupling.len() != n {
            return Err(ModelError::Dimension {
                expected: n,
                got: coupling.len(),
            });
        }
        if masses.iter().any(|&m| !m.is_finite() || m <= 0.0) {
            return Err(ModelError::Invalid(
                "all masses must be strictly positive".into(),
            ));
        }
        if healthy_stiffness
            .iter()
            .any(|&k| !k.is_finite() || k <= 0.0)
        {
            return Err(ModelError::Invalid(
                "all stiffnesses must be strictly positive".into(),
            ));
        }
        if coupling.iter().all(|&c| c == 0.0) {
            return Err(ModelError::Invalid(
                "coupling vector must have at least one nonzero entry".into(),
            ));
        }
        if [rayleigh_a, rayleigh_b]
            .iter()
            .any(|&c| !c.is_finite() || c < 0.0)
        {
            return Err(ModelError::Invalid(
                "Rayleigh coefficients must be non-negative".into(),
            ));
        }
        if !k_c.is_finite() || k_c <= 0.0 {
            return Err(ModelError::Invalid("k_c must be strictly positive".into()));
        }
        Ok(Self {
            masses,
            healthy_stiffness,
            rayleigh_a,
            rayleigh_b,
            coupling,
            k_c,
        })
    }

    /// Uniform chain: every segment shares one mass and one stiffness, with a
    /// single coupling entry at the 1-based `coupling_segment`.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        n_segments: usize,
        mass: f64,
        stiffness: f64,
        rayleigh_a: f64,
        rayleigh_b: f64,
        coupling_segment: usize,
        coupling_strength: f64,
        k_c: f64,
    ) -> Result<Self, ModelError> {
        if coupling_segment == 0 || coupling_segment > n_segments {
            return Err(ModelError::Invalid(format!(
                "coupling segment {coupling_segment} outside 1..={n_segments}"
            )));
        }
        let mut coupling = vec![0.0; n_segments];
        coupling[coupling_segment - 1] = coupling_strength;
        Self::new(
            vec![mass; n_segments],
            vec![stiffness; n_segments],
            rayleigh_a,
            rayleigh_b,
            coupling,
            k_c,
        )
    }

    pub fn n_segments(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn healthy_stiffness(&self) -> &[f64] {
        &self.healthy_stiffness
    }

    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    pub fn k_c(&self) -> f64 {
        self.k_c
    }

    pub fn rayleigh(&self) -> (f64, f64) {
        (self.rayleigh_a, self.rayleigh_b)
    }

    fn check_fault(&self, fault: &FaultScenario) -> Result<(), ModelError> {
        if fault.len() != self.n_segments() {
            return Err(ModelError::Dimension {
                expected: self.n_segments(),
                got: fault.len(),
            });
        }
        Ok(())
    }

    /// Assemble the chain stiffness matrix with per-spring scale factors
    /// (1 − α_j).
    fn assemble_stiffness(&self, scale: impl Fn(usize) -> f64) -> DMatrix<f64> {
        let n = self.n_segments();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            let kj = self.healthy_stiffness[j] * scale(j);
            k[(j, j)] += kj;
            if j > 0 {
                k[(j - 1, j - 1)] += kj;
                k[(j, j - 1)] -= kj;
                k[(j - 1, j)] -= kj;
            }
        }
        k
    }

    /// Healthy stiffness matrix K.
    pub fn healthy_stiffness_matrix(&self) -> DMatrix<f64> {
        self.assemble_stiffness(|_| 1.0)
    }

    /// Damaged stiffness matrix K_d = Σ_j k_hj (1 − α_j).
    ///
    /// Equals the healthy matrix exactly when α = 0.
    pub fn damaged_stiffness(&self, fault: &FaultScenario) -> Result<DMatrix<f64>, ModelError> {
        self.check_fault(fault)?;
        Ok(self.assemble_stiffness(|j| 1.0 - fault.alpha[j]))
    }

    fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.masses))
    }

    /// Rayleigh damping C = aM + bK, built from the healthy stiffness so that
    /// admittance changes are driven purely by the stiffness loss.
    pub fn damping_matrix(&self) -> DMatrix<f64> {
        self.mass_matrix() * self.rayleigh_a + self.healthy_stiffness_matrix() * self.rayleigh_b
    }

    /// Complex transducer admittance Y(ω, α).
    pub fn admittance(&self, omega: f64, fault: &FaultScenario) -> Result<Complex64, ModelError> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(ModelError::Invalid(format!(
                "excitation frequency must be positive, got {omega}"
            )));
        }
        let k_d = self.damaged_stiffness(fault)?;
        let m = self.mass_matrix();
        let c = self.damping_matrix();
        let n = self.n_segments();

        // Z = K_d − ω²M + iωC
        let mut z = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                z[(i, j)] =
                    Complex64::new(k_d[(i, j)] - omega * omega * m[(i, j)], omega * c[(i, j)]);
            }
        }
        let rhs = DVector::from_iterator(n, self.coupling.iter().map(|&v| Complex64::new(v, 0.0)));
        let solved = z
            .lu()
            .solve(&rhs)
            .ok_or(ModelError::SingularDynamicStiffness { omega })?;
        let quad: Complex64 = self
            .coupling
            .iter()
            .zip(solved.iter())
            .map(|(&c_i, x_i)| x_i * c_i)
            .sum();
        let denom = Complex64::new(self.k_c, 0.0) - quad;
        if denom.norm() == 0.0 {
            return Err(ModelError::SingularDynamicStiffness { omega });
        }
        Ok(Complex64::new(0.0, omega) / denom)
    }

    /// Complex admittance change ΔY(ω, α) = Y(ω, α) − Y(ω, 0).
    pub fn admittance_change_complex(
        &self,
        omega: f64,
        fault: &FaultScenario,
    ) -> Result<Complex64, ModelError> {
        self.check_fault(fault)?;
        let damaged = self.admittance(omega, fault)?;
        let healthy = self.admittance(omega, &FaultScenario::healthy(self.n_segments()))?;
        Ok(damaged - healthy)
    }

    /// Scalar admittance-change response in the requested channel.
    pub fn admittance_change(
        &self,
        omega: f64,
        fault: &FaultScenario,
        channel: ResponseChannel,
    ) -> Result<f64, ModelError> {
        Ok(channel.extract(self.admittance_change_complex(omega, fault)?))
    }

    /// Undamped natural frequencies (rad/s), ascending.
    ///
    /// Solves the generalized symmetric eigenproblem (K_d, M) through the
    /// mass-normalized form M^{-1/2} K_d M^{-1/2}.
    pub fn natural_frequencies(
        &self,
        fault: Option<&FaultScenario>,
    ) -> Result<Vec<f64>, ModelError> {
        let k = match fault {
            Some(f) => self.damaged_stiffness(f)?,
            None => self.healthy_stiffness_matrix(),
        };
        let n = self.n_segments();
        let inv_sqrt_m: Vec<f64> = self.masses.iter().map(|&m| 1.0 / m.sqrt()).collect();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = k[(i, j)] * inv_sqrt_m[i] * inv_sqrt_m[j];
            }
        }
        let eig = a.symmetric_eigen();
        let mut freqs: Vec<f64> = eig
            .eigenvalues
            .iter()
            .map(|&lambda| lambda.max(0.0).sqrt())
            .collect();
        freqs.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
        Ok(freqs)
    }
}
