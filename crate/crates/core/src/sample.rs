//! Training-data generation and CSV persistence.
//!
//! One scenario set is drawn uniformly over location {1..n} × severity
//! [0, s_max] and evaluated at every sweep frequency, so all per-frequency
//! training sets share identical inputs. Observations are contaminated with
//! multiplicative Gaussian noise `value · (1 + noise_level · z)`, z ~ N(0,1).

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::{FaultScenario, ModelError, ResponseChannel, StructuralModel};
use crate::sweep::FrequencySweep;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sampling setup: {0}")]
    Invalid(String),
    #[error("csv read failed at line {line}: {msg}")]
    Csv { line: u64, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A single-fault training scenario in compact (location, severity) form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingScenario {
    /// 1-based segment index.
    pub location: usize,
    pub severity: f64,
}

/// Per-frequency training sets sharing one scenario list.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    /// Sweep frequencies (rad/s), one training set per entry.
    pub frequencies: Vec<f64>,
    /// Scenario inputs, identical for every frequency.
    pub scenarios: Vec<TrainingScenario>,
    /// `responses[j][i]` is the (noisy) response of scenario `i` at
    /// frequency `j`.
    pub responses: Vec<Vec<f64>>,
}

/// Controls for [`generate`].
#[derive(Debug, Clone, Copy)]
pub struct SamplingConfig {
    pub scenarios: usize,
    /// Upper end of the severity sampling range.
    pub severity_max: f64,
    /// Relative standard deviation of the multiplicative noise.
    pub noise_level: f64,
    pub channel: ResponseChannel,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            scenarios: 270,
            severity_max: 0.1,
            noise_level: 0.0015,
            channel: ResponseChannel::Magnitude,
            seed: 0,
        }
    }
}

/// Draw scenarios and emit noisy per-frequency responses.
pub fn generate(
    model: &StructuralModel,
    sweep: &FrequencySweep,
    config: &SamplingConfig,
) -> Result<TrainingData, SampleError> {
    if config.scenarios == 0 {
        return Err(SampleError::Invalid("need at least one scenario".into()));
    }
    if !config.noise_level.is_finite() || config.noise_level < 0.0 {
        return Err(SampleError::Invalid(
            "noise level must be non-negative".into(),
        ));
    }
    if !config.severity_max.is_finite() || config.severity_max <= 0.0 || config.severity_max > 1.0 {
        return Err(SampleError::Invalid(format!(
            "severity range must lie in (0, 1], got {}",
            config.severity_max
        )));
    }
    let n = model.n_segments();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let scenarios: Vec<TrainingScenario> = (0..config.scenarios)
        .map(|_| TrainingScenario {
            location: rng.random_range(1..=n),
            severity: rng.random_range(0.0..config.severity_max),
        })
        .collect();

    let mut responses = Vec::with_capacity(sweep.len());
    for &omega in sweep.frequencies() {
        let mut row = Vec::with_capacity(scenarios.len());
        for sc in &scenarios {
            let fault = FaultScenario::single(sc.location, sc.severity, n)?;
            let clean = model.admittance_change(omega, &fault, config.channel)?;
            let z: f64 = StandardNormal.sample(&mut rng);
            row.push(clean * (1.0 + config.noise_level * z));
        }
        responses.push(row);
    }
    Ok(TrainingData {
        frequencies: sweep.frequencies().to_vec(),
        scenarios,
        responses,
    })
}

impl TrainingData {
    pub fn n_frequencies(&self) -> usize {
        self.frequencies.len()
    }

    pub fn n_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Write the canonical CSV layout
    /// `freq_index,omega,alpha_location,alpha_severity,delta_y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SampleError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "freq_index",
            "omega",
            "alpha_location",
            "alpha_severity",
            "delta_y",
        ])
        .map_err(|e| SampleError::Invalid(e.to_string()))?;
        for (j, &omega) in self.frequencies.iter().enumerate() {
            for (i, sc) in self.scenarios.iter().enumerate() {
                w.write_record(&[
                    j.to_string(),
                    format!("{omega:?}"),
                    sc.location.to_string(),
                    format!("{:?}", sc.severity),
                    format!("{:?}", self.responses[j][i]),
                ])
                .map_err(|e| SampleError::Invalid(e.to_string()))?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parse the canonical CSV layout back. Rows may appear in any order but
    /// every frequency must carry the same scenario list.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SampleError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut rows: Vec<(usize, f64, usize, f64, f64)> = Vec::new();
        for record in r.records() {
            let record = record.map_err(|e| SampleError::Csv {
                line: csv_line(&e),
                msg: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let field = |idx: usize| -> Result<&str, SampleError> {
                record.get(idx).ok_or(SampleError::Csv {
                    line,
                    msg: format!("missing column {idx}"),
                })
            };
            let parse_f = |idx: usize| -> Result<f64, SampleError> {
                field(idx)?.trim().parse().map_err(|e| SampleError::Csv {
                    line,
                    msg: format!("column {idx}: {e}"),
                })
            };
            let parse_u = |idx: usize| -> Result<usize, SampleError> {
                field(idx)?.trim().parse().map_err(|e| SampleError::Csv {
                    line,
                    msg: format!("column {idx}: {e}"),
                })
            };
            rows.push((
                parse_u(0)?,
                parse_f(1)?,
                parse_u(2)?,
                parse_f(3)?,
                parse_f(4)?,
            ));
        }
        if rows.is_empty() {
            return Err(SampleError::Invalid("training csv contains no rows".into()));
        }
        let n_freq = rows.iter().map(|r| r.0).max().unwrap() + 1;
        let mut frequencies = vec![f64::NAN; n_freq];
        let mut per_freq: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); n_freq];
        for (j, omega, loc, sev, dy) in rows {
            frequencies[j] = omega;
            per_freq[j].push((loc, sev, dy));
        }
        let m = per_freq[0].len();
        for (j, set) in per_freq.iter().enumerate() {
            if set.len() != m {
                return Err(SampleError::Invalid(format!(
                    "frequency {j} has {} rows, expected {m}",
                    set.len()
                )));
            }
        }
        let scenarios: Vec<TrainingScenario> = per_freq[0]
            .iter()
            .map(|&(location, severity, _)| TrainingScenario { location, severity })
            .collect();
        for (j, set) in per_freq.iter().enumerate() {
            for (i, &(loc, sev, _)) in set.iter().enumerate() {
                if loc != scenarios[i].location || sev != scenarios[i].severity {
                    return Err(SampleError::Invalid(format!(
                        "scenario {i} differs between frequency 0 and frequency {j}"
                    )));
                }
            }
        }
        let responses = per_freq
            .into_iter()
            .map(|set| set.into_iter().map(|(_, _, dy)| dy).collect())
            .collect();
        Ok(Self {
            frequencies,
            scenarios,
            responses,
        })
    }
}

fn csv_line(err: &csv::Error) -> u64 {
    match err.kind() {
        csv::ErrorKind::Utf8 { pos, .. } | csv::ErrorKind::UnequalLengths { pos, .. } => {
            pos.as_ref().map(|p| p.line()).unwrap_or(0)
        }
        csv::ErrorKind::Deserialize { pos, .. } => pos.as_ref().map(|p| p.line()).unwrap_or(0),
        _ => 0,
    }
}
