//! Excitation-frequency sweeps grouped into resonance bands.

use serde::{Deserialize, Serialize};

use crate::model::{ModelError, StructuralModel};

/// Ordered excitation frequencies (rad/s) with the resonance band each one
/// belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencySweep {
    frequencies: Vec<f64>,
    band_of: Vec<usize>,
}

impl FrequencySweep {
    /// Evenly distributed points inside each `(lo, hi)` band.
    pub fn from_bands(bands: &[(f64, f64)], points_per_band: usize) -> Result<Self, ModelError> {
        if bands.is_empty() || points_per_band == 0 {
            return Err(ModelError::Invalid(
                "sweep needs at least one band and one point per band".into(),
            ));
        }
        let mut frequencies = Vec::with_capacity(bands.len() * points_per_band);
        let mut band_of = Vec::with_capacity(bands.len() * points_per_band);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi <= lo {
                return Err(ModelError::Invalid(format!(
                    "band {b}: need 0 < lo < hi, got ({lo}, {hi})"
                )));
            }
            for p in 0..points_per_band {
                let t = if points_per_band == 1 {
                    0.5
                } else {
                    p as f64 / (points_per_band - 1) as f64
                };
                frequencies.push(lo + t * (hi - lo));
                band_of.push(b);
            }
        }
        for w in frequencies.windows(2) {
            if w[1] <= w[0] || w[1].is_nan() {
                return Err(ModelError::Invalid(format!(
                    "sweep frequencies must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            frequencies,
            band_of,
        })
    }

    /// Narrow bands centred on selected 1-based resonance indices of `model`,
    /// each spanning ±`halfwidth_frac` relative to the resonance frequency.
    pub fn around_resonances(
        model: &StructuralModel,
        resonance_indices: &[usize],
        points_per_band: usize,
        halfwidth_frac: f64,
    ) -> Result<Self, ModelError> {
        if !halfwidth_frac.is_finite() || halfwidth_frac <= 0.0 {
            return Err(ModelError::Invalid(
                "band halfwidth must be positive".into(),
            ));
        }
        let resonances = model.natural_frequencies(None)?;
        let mut bands = Vec::with_capacity(resonance_indices.len());
        for &idx in resonance_indices {
            if idx == 0 || idx > resonances.len() {
                return Err(ModelError::Invalid(format!(
                    "resonance index {idx} outside 1..={}",
                    resonances.len()
                )));
            }
            let center = resonances[idx - 1];
            bands.push((
                center * (1.0 - halfwidth_frac),
                center * (1.0 + halfwidth_frac),
            ));
        }
        Self::from_bands(&bands, points_per_band)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn band_of(&self, index: usize) -> usize {
        self.band_of[index]
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}
