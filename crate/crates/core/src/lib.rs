//! Structural fault identification from piezoelectric admittance measurements.
//!
//! The crate covers the full workflow:
//!
//! 1. [`model`] — a reduced-order coupled electro-mechanical chain model that
//!    produces admittance-change responses for healthy and faulted structures,
//!    used both to generate training data and to emulate measurements.
//! 2. [`gp`] — per-frequency Gaussian-process response surfaces mapping
//!    (fault location, fault severity) to admittance change, fitted by
//!    random-walk Metropolis over the kernel hyperparameters.
//! 3. [`anneal`] — an ε-dominance archived many-objective simulated annealer
//!    that searches fault-scenario space against many per-frequency
//!    discrepancy objectives at once.
//! 4. [`voting`] — aggregation of archives from repeated randomized runs into
//!    ranked voting-score tallies (full, range-pooled, partial, and a raw
//!    occurrence-count baseline).
//! 5. [`pipeline`] — config-driven orchestration with CSV/JSON persistence,
//!    exposed through the `faultid` command-line binary.
//!
//! All randomness is seeded explicitly; identical seeds reproduce identical
//! outputs byte for byte.
//!
//! ```
//! use faultid::model::{FaultScenario, ResponseChannel, StructuralModel};
//!
//! let model = StructuralModel::uniform(25, 0.2, 5.0e6, 1e-3, 1e-6, 8, 5.0e6, 1e7)?;
//! let fault = FaultScenario::single(13, 0.06, 25)?;
//! let resonances = model.natural_frequencies(None)?;
//! let dy = model.admittance_change(
//!     resonances[13] * 0.999,
//!     &fault,
//!     ResponseChannel::Magnitude,
//! )?;
//! assert!(dy > 0.0);
//! # Ok::<(), faultid::model::ModelError>(())
//! ```

pub mod anneal;
pub mod ensemble;
pub mod gp;
pub mod model;
pub mod pipeline;
pub mod sample;
pub mod seed;
pub mod sweep;
pub mod voting;

pub use model::{FaultScenario, ModelError, ResponseChannel, StructuralModel};
pub use sweep::FrequencySweep;
