//! Voting-score aggregation of archives from repeated optimization runs.
//!
//! Each run's archive distributes a total voting score of one, 1/|A_i| per
//! member, so small archives grant more voting power per solution. Four
//! heuristics are provided: exact solution keys, severity-range keys that
//! pool nearby severities, and partial variants of both that withdraw the
//! votes of archives larger than the mean size. A raw occurrence-count
//! baseline (majority voting) is included for comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Digits kept when rounding severities into solution keys.
pub const SEVERITY_DIGITS: u32 = 4;
/// Digits kept for severity-range keys (one less than the solution keys).
pub const RANGE_DIGITS: u32 = 3;

#[derive(Debug, Error)]
pub enum VotingError {
    #[error("no archives to aggregate")]
    NoArchives,
    #[error("archive of run {run} is empty")]
    EmptyArchive { run: usize },
}

/// One run's archive reduced to its (segment, severity) solutions.
pub type ArchiveSolutions = Vec<(usize, f64)>;

fn round_away_from_zero(x: f64) -> i64 {
    // f64::round rounds halves away from zero.
    x.round() as i64
}

/// Integer division of a scaled value by 10 with half-away-from-zero
/// rounding.
fn shift_digit(q: i64) -> i64 {
    if q >= 0 {
        (q + 5) / 10
    } else {
        (q - 5) / 10
    }
}

/// A fault solution keyed at fixed severity precision; equality after
/// rounding merges near-identical solutions from different runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SolutionKey {
    segment: usize,
    /// Severity scaled by 10^digits.
    severity_q: i64,
    digits: u32,
}

impl SolutionKey {
    pub fn new(segment: usize, severity: f64) -> Self {
        Self::with_digits(segment, severity, SEVERITY_DIGITS)
    }

    pub fn with_digits(segment: usize, severity: f64, digits: u32) -> Self {
        let scale = 10f64.powi(digits as i32);
        Self {
            segment,
            severity_q: round_away_from_zero(severity * scale),
            digits,
        }
    }

    pub fn segment(&self) -> usize {
        self.segment
    }

    pub fn severity(&self) -> f64 {
        self.severity_q as f64 / 10f64.powi(self.digits as i32)
    }

    pub fn severity_string(&self) -> String {
        format!("{:.*}", self.digits as usize, self.severity())
    }
}

/// A severity range of width 10^(−range_digits) centred on the rounded
/// severity; every solution key maps to exactly one range key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RangeKey {
    segment: usize,
    /// Range centre scaled by 10^digits.
    center_q: i64,
    digits: u32,
}

impl RangeKey {
    pub fn from_solution(key: &SolutionKey) -> Self {
        Self {
            segment: key.segment,
            center_q: shift_digit(key.severity_q),
            digits: key.digits - 1,
        }
    }

    pub fn segment(&self) -> usize {
        self.segment
    }

    /// Half-open bounds [lo, hi) of the severity range.
    pub fn bounds(&self) -> (f64, f64) {
        let scale = 10f64.powi(self.digits as i32 + 1);
        let lo = (self.center_q * 10 - 5) as f64 / scale;
        let hi = (self.center_q * 10 + 5) as f64 / scale;
        (lo, hi)
    }

    /// Interval label in the `0.0595-0.0605` style.
    pub fn range_string(&self) -> String {
        let (lo, hi) = self.bounds();
        let d = self.digits as usize + 1;
        format!("{lo:.*}-{hi:.*}", d, d)
    }
}

/// Accumulated voting scores per key, plus the total score that was
/// available for distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingTally<K: Ord> {
    scores: BTreeMap<K, f64>,
    total_available: f64,
}

impl<K: Ord + Copy> VotingTally<K> {
    pub fn score(&self, key: &K) -> f64 {
        self.scores.get(key).copied().unwrap_or(0.0)
    }

    pub fn total_available(&self) -> f64 {
        self.total_available
    }

    pub fn sum(&self) -> f64 {
        self.scores.values().sum()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &f64)> {
        self.scores.iter()
    }
}

fn check_archives(archives: &[ArchiveSolutions]) -> Result<(), VotingError> {
    if archives.is_empty() {
        return Err(VotingError::NoArchives);
    }
    for (run, a) in archives.iter().enumerate() {
        if a.is_empty() {
            return Err(VotingError::EmptyArchive { run });
        }
    }
    Ok(())
}

/// Which runs vote: all of them, or only those no larger than the mean size.
fn qualifying_runs(archives: &[ArchiveSolutions], partial: bool) -> Vec<bool> {
    if !partial {
        return vec![true; archives.len()];
    }
    let m = archives.len() as u64;
    let total: u64 = archives.iter().map(|a| a.len() as u64).sum();
    // |A_i| ≤ mean, decided in exact integer arithmetic: m·|A_i| ≤ Σ|A_j|.
    archives
        .iter()
        .map(|a| m * a.len() as u64 <= total)
        .collect()
}

fn tally_with<K: Ord + Copy>(
    archives: &[ArchiveSolutions],
    partial: bool,
    key_of: impl Fn(usize, f64) -> K,
) -> Result<VotingTally<K>, VotingError> {
    check_archives(archives)?;
    let qualifies = qualifying_runs(archives, partial);
    let mut scores: BTreeMap<K, f64> = BTreeMap::new();
    for (archive, &q) in archives.iter().zip(&qualifies) {
        if !q {
            continue;
        }
        let weight = 1.0 / archive.len() as f64;
        for &(segment, severity) in archive {
            *scores.entry(key_of(segment, severity)).or_insert(0.0) += weight;
        }
    }
    Ok(VotingTally {
        scores,
        total_available: qualifies.iter().filter(|&&q| q).count() as f64,
    })
}

/// Voting scores per exact solution key: each run's archive distributes one
/// unit of score, 1/|A_i| per member.
pub fn voting_score(
    archives: &[ArchiveSolutions],
) -> Result<VotingTally<SolutionKey>, VotingError> {
    voting_score_with_digits(archives, SEVERITY_DIGITS)
}

pub fn voting_score_with_digits(
    archives: &[ArchiveSolutions],
    digits: u32,
) -> Result<VotingTally<SolutionKey>, VotingError> {
    tally_with(archives, false, |seg, sev| {
        SolutionKey::with_digits(seg, sev, digits)
    })
}

/// Voting scores pooled per severity range: members of one archive mapping
/// to the same range add their 1/|A_i| contributions together.
pub fn range_voting_score(
    archives: &[ArchiveSolutions],
) -> Result<VotingTally<RangeKey>, VotingError> {
    range_voting_score_with_digits(archives, SEVERITY_DIGITS)
}

pub fn range_voting_score_with_digits(
    archives: &[ArchiveSolutions],
    digits: u32,
) -> Result<VotingTally<RangeKey>, VotingError> {
    tally_with(archives, false, |seg, sev| {
        RangeKey::from_solution(&SolutionKey::with_digits(seg, sev, digits))
    })
}

/// As [`voting_score`] but runs whose archives exceed the mean size are
/// withdrawn; the total available equals the count of qualifying runs.
pub fn partial_voting_score(
    archives: &[ArchiveSolutions],
) -> Result<VotingTally<SolutionKey>, VotingError> {
    partial_voting_score_with_digits(archives, SEVERITY_DIGITS)
}

pub fn partial_voting_score_with_digits(
    archives: &[ArchiveSolutions],
    digits: u32,
) -> Result<VotingTally<SolutionKey>, VotingError> {
    tally_with(archives, true, |seg, sev| {
        SolutionKey::with_digits(seg, sev, digits)
    })
}

/// Partial filter composed with range keying.
pub fn partial_range_voting_score(
    archives: &[ArchiveSolutions],
) -> Result<VotingTally<RangeKey>, VotingError> {
    partial_range_voting_score_with_digits(archives, SEVERITY_DIGITS)
}

pub fn partial_range_voting_score_with_digits(
    archives: &[ArchiveSolutions],
    digits: u32,
) -> Result<VotingTally<RangeKey>, VotingError> {
    tally_with(archives, true, |seg, sev| {
        RangeKey::from_solution(&SolutionKey::with_digits(seg, sev, digits))
    })
}

/// Majority-voting baseline: raw occurrence counts per solution key with no
/// archive-size weighting. The total available is Σ|A_i|.
pub fn majority_vote_baseline(
    archives: &[ArchiveSolutions],
) -> Result<VotingTally<SolutionKey>, VotingError> {
    check_archives(archives)?;
    let mut scores: BTreeMap<SolutionKey, f64> = BTreeMap::new();
    let mut total = 0.0;
    for archive in archives {
        for &(segment, severity) in archive {
            *scores
                .entry(SolutionKey::new(segment, severity))
                .or_insert(0.0) += 1.0;
            total += 1.0;
        }
    }
    Ok(VotingTally {
        scores,
        total_available: total,
    })
}

/// One row of a ranked report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry<K> {
    pub key: K,
    pub score: f64,
    /// score / total_available, in percent.
    pub percentage: f64,
}

/// Top-k keys by descending score; ties resolve by ascending key order
/// (segment, then severity).
pub fn rank_report<K: Ord + Copy>(tally: &VotingTally<K>, k: usize) -> Vec<RankedEntry<K>> {
    let mut entries: Vec<(&K, &f64)> = tally.scores.iter().collect();
    entries.sort_by(|(ka, sa), (kb, sb)| {
        sb.partial_cmp(sa)
            .expect("finite scores")
            .then_with(|| ka.cmp(kb))
    });
    entries
        .into_iter()
        .take(k)
        .map(|(key, &score)| RankedEntry {
            key: *key,
            score,
            percentage: 100.0 * score / tally.total_available,
        })
        .collect()
}

/// Percentage formatting used in reports: three decimals and a percent sign.
pub fn format_percentage(percentage: f64) -> String {
    format!("{percentage:.3}%")
}
