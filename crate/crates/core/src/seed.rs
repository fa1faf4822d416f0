//! Deterministic seed derivation.
//!
//! Every stage draws its randomness from a substream derived from one master
//! seed, so reruns reproduce outputs exactly while parallel workers stay
//! decorrelated.

/// Named substreams hanging off the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Training-scenario sampling and noise.
    Sampling,
    /// Measurement-noise injection for the truth scenario.
    Measurement,
    /// Objective-subset selection, one per ensemble run.
    Subset,
    /// Annealing chain, one per ensemble run.
    Anneal,
    /// Hyperparameter MCMC, one per calibration surface.
    Calibration,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Sampling => 0x5A4D,
            Stream::Measurement => 0x4D45,
            Stream::Subset => 0x5355,
            Stream::Anneal => 0x414E,
            Stream::Calibration => 0x4341,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `stream` item `index` under `master`.
pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(stream.tag())) ^ index)
}
