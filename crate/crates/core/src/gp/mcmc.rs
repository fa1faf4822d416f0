//! Random-walk Metropolis over log hyperparameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{log_marginal_likelihood, GpError, KernelKind, KernelParams, TrainingSet};

/// Metropolis settings for hyperparameter training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_samples: usize,
    /// Proposal standard deviation in log-parameter space.
    pub step_size: f64,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            step_size: 0.3,
            seed: 0,
        }
    }
}

/// Outcome of one fit: the likelihood of the selected sample and the chain's
/// acceptance rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub log_likelihood: f64,
    pub acceptance_rate: f64,
}

/// Prior standard deviation on each log parameter.
const PRIOR_STD: f64 = 3.0;

fn param_count(kind: KernelKind) -> usize {
    match kind {
        KernelKind::SingleSe => 3,  // ln θ1, ln θ2, ln σ_n
        KernelKind::ProductSe => 5, // ln θ1..θ4, ln σ_n
    }
}

fn params_from_log(kind: KernelKind, z: &[f64]) -> KernelParams {
    match kind {
        KernelKind::SingleSe => KernelParams {
            kind,
            theta1: z[0].exp(),
            theta2: z[1].exp(),
            theta3: 1.0,
            theta4: 1.0,
            sigma_n: z[2].exp(),
        },
        KernelKind::ProductSe => KernelParams {
            kind,
            theta1: z[0].exp(),
            theta2: z[1].exp(),
            theta3: z[2].exp(),
            theta4: z[3].exp(),
            sigma_n: z[4].exp(),
        },
    }
}

/// Data-driven prior means: amplitudes near the output variance, length
/// scales near a quarter of the (unit) input range, noise near 5% of the
/// output spread.
fn prior_mean(kind: KernelKind, outputs: &[f64]) -> Vec<f64> {
    let m = outputs.len() as f64;
    let mean = outputs.iter().sum::<f64>() / m;
    let var = outputs.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / m;
    let var = var.max(1e-12);
    let ln_len = 0.25f64.ln();
    let ln_noise = (0.05 * var.sqrt()).max(1e-12).ln();
    match kind {
        KernelKind::SingleSe => vec![var.ln(), ln_len, ln_noise],
        KernelKind::ProductSe => vec![0.5 * var.ln(), ln_len, 0.5 * var.ln(), ln_len, ln_noise],
    }
}

fn log_prior(z: &[f64], mu: &[f64]) -> f64 {
    z.iter()
        .zip(mu)
        .map(|(zi, mi)| {
            let d = (zi - mi) / PRIOR_STD;
            -0.5 * d * d
        })
        .sum()
}

/// Candidate chain starts: the prior mean with every combination of a coarse
/// log length-scale grid and a noise ladder substituted in. Deterministic, so
/// the fit stays reproducible. The responses over segment index can be jagged
/// enough that the chain needs to start near a short location length scale to
/// find it, and smooth basins need a noise level matching their residuals.
fn scan_starts(kind: KernelKind, mu: &[f64], outputs: &[f64]) -> Vec<Vec<f64>> {
    let lengths: Vec<f64> = [1e-3f64, 1e-2, 1e-1, 0.5, 2.0]
        .iter()
        .map(|v| v.ln())
        .collect();
    let m = outputs.len() as f64;
    let mean = outputs.iter().sum::<f64>() / m;
    let std = (outputs.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / m)
        .sqrt()
        .max(1e-12);
    let noises: Vec<f64> = [0.02f64, 0.1, 0.5].iter().map(|f| (f * std).ln()).collect();
    let mut starts = Vec::new();
    match kind {
        KernelKind::SingleSe => {
            for &l in &lengths {
                for &s in &noises {
                    let mut z = mu.to_vec();
                    z[1] = l;
                    z[2] = s;
                    starts.push(z);
                }
            }
        }
        KernelKind::ProductSe => {
            for &l_loc in &lengths {
                for &l_sev in &lengths {
                    for &s in &noises {
                        let mut z = mu.to_vec();
                        z[1] = l_loc;
                        z[3] = l_sev;
                        z[4] = s;
                        starts.push(z);
                    }
                }
            }
        }
    }
    starts
}

/// Maximize the marginal likelihood by random-walk Metropolis, returning the
/// best parameters visited.
pub(super) fn maximize_likelihood(
    training: &TrainingSet,
    kind: KernelKind,
    config: &McmcConfig,
) -> Result<(KernelParams, FitDiagnostics), GpError> {
    if config.n_samples == 0 {
        return Err(GpError::Fit("mcmc needs at least one sample".into()));
    }
    if !config.step_size.is_finite() || config.step_size <= 0.0 {
        return Err(GpError::Fit("mcmc step size must be positive".into()));
    }
    let mu = prior_mean(kind, training.outputs());
    debug_assert_eq!(mu.len(), param_count(kind));
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);

    let lml_of = |z: &[f64]| -> Option<f64> {
        log_marginal_likelihood(training, &params_from_log(kind, z)).ok()
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut z_cur = mu.clone();
    for start in scan_starts(kind, &mu, training.outputs()) {
        if let Some(l) = lml_of(&start) {
            if best.as_ref().is_none_or(|(_, b)| l > *b) {
                best = Some((start.clone(), l));
                z_cur = start;
            }
        }
    }
    let mut lml_cur = lml_of(&z_cur);
    let mut post_cur = lml_cur.map(|l| l + log_prior(&z_cur, &mu));
    let mut accepted = 0usize;

    for _ in 0..config.n_samples {
        let z_prop: Vec<f64> = z_cur
            .iter()
            .map(|zi| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                zi + config.step_size * xi
            })
            .collect();
        let u: f64 = rng.random();
        let Some(lml_prop) = lml_of(&z_prop) else {
            continue;
        };
        if best.as_ref().is_none_or(|(_, b)| lml_prop > *b) {
            best = Some((z_prop.clone(), lml_prop));
        }
        let post_prop = lml_prop + log_prior(&z_prop, &mu);
        let accept = match post_cur {
            Some(pc) => u.ln() < post_prop - pc,
            // Recover from a non-finite start as soon as any proposal works.
            None => true,
        };
        if accept {
            z_cur = z_prop;
            lml_cur = Some(lml_prop);
            post_cur = Some(post_prop);
            accepted += 1;
        }
    }
    let _ = lml_cur;

    let Some((z_best, lml_best)) = best else {
        return Err(GpError::Fit(
            "likelihood non-finite at the prior mean and every proposal; \
             consider rescaling the responses"
                .into(),
        ));
    };
    Ok((
        params_from_log(kind, &z_best),
        FitDiagnostics {
            log_likelihood: lml_best,
            acceptance_rate: accepted as f64 / config.n_samples as f64,
        },
    ))
}
