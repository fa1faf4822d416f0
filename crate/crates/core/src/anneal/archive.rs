//! ε-Pareto archive: mutually non-ε-dominated solutions, one per box.

use std::io::Write;

use super::dominance::{box_index, dominates_unchecked, EpsilonBox};
use super::{AnnealError, Candidate};

/// Outcome of presenting a new solution to the archive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    /// One of the update branches ran; the new solution becomes the current
    /// solution of the annealer.
    Updated,
    /// The new solution was not an archive improvement; acceptance is
    /// delegated to the probabilistic action step.
    Delegated,
}

/// How a new solution relates to the archive, evaluated in the branch order
/// of the annealing loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Shares a box with a member and plainly dominates at least one member.
    SameBoxDominates,
    /// Shares a box with a member without dominating anyone.
    SameBoxOther,
    /// ε-dominates at least one member.
    EpsilonDominates,
    /// ε-dominated by at least one member.
    EpsilonDominated,
    /// Mutually non-ε-dominant with every member.
    NonDominant,
}

#[derive(Debug, Clone)]
pub struct Archive {
    epsilon: f64,
    f_floor: f64,
    members: Vec<Candidate>,
    boxes: Vec<EpsilonBox>,
}

impl Archive {
    pub fn new(epsilon: f64, f_floor: f64) -> Result<Self, AnnealError> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(AnnealError::Invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !f_floor.is_finite() || f_floor <= 0.0 {
            return Err(AnnealError::Invalid(format!(
                "objective floor must be positive, got {f_floor}"
            )));
        }
        Ok(Self {
            epsilon,
            f_floor,
            members: Vec::new(),
            boxes: Vec::new(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn members(&self) -> &[Candidate] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn box_of(&self, candidate: &Candidate) -> EpsilonBox {
        box_index(&candidate.objectives, self.epsilon, self.f_floor)
    }

    /// Member boxes, parallel to [`Archive::members`].
    pub fn boxes(&self) -> &[EpsilonBox] {
        &self.boxes
    }

    pub(super) fn classify(&self, new: &Candidate) -> Classification {
        let new_box = self.box_of(new);
        if self.boxes.contains(&new_box) {
            if self
                .members
                .iter()
                .any(|m| dominates_unchecked(&new.objectives, &m.objectives))
            {
                Classification::SameBoxDominates
            } else {
                Classification::SameBoxOther
            }
        } else if self.boxes.iter().any(|b| new_box.dominates(b)) {
            Classification::EpsilonDominates
        } else if self.boxes.iter().any(|b| b.dominates(&new_box)) {
            Classification::EpsilonDominated
        } else {
            Classification::NonDominant
        }
    }

    /// Present a new evaluated solution. Update branches remove the members
    /// dominated under the governing relation (plain dominance inside a
    /// shared box, ε-dominance otherwise), insert the solution, and restore
    /// the one-per-box invariant. Deteriorating solutions delegate.
    pub fn update(&mut self, new: &Candidate) -> UpdateOutcome {
        match self.classify(new) {
            Classification::SameBoxDominates => {
                self.remove_where(|m| dominates_unchecked(&new.objectives, &m.objectives));
                self.insert_one_per_box(new);
                UpdateOutcome::Updated
            }
            Classification::EpsilonDominates => {
                let new_box = self.box_of(new);
                self.remove_where_box(|b| new_box.dominates(b));
                self.insert_one_per_box(new);
                UpdateOutcome::Updated
            }
            Classification::NonDominant => {
                self.insert_one_per_box(new);
                UpdateOutcome::Updated
            }
            Classification::SameBoxOther | Classification::EpsilonDominated => {
                UpdateOutcome::Delegated
            }
        }
    }

    /// Seed the archive with the initial solution.
    pub(super) fn seed(&mut self, initial: Candidate) {
        debug_assert!(self.members.is_empty());
        self.boxes.push(self.box_of(&initial));
        self.members.push(initial);
    }

    fn remove_where(&mut self, mut predicate: impl FnMut(&Candidate) -> bool) {
        let mut i = 0;
        while i < self.members.len() {
            if predicate(&self.members[i]) {
                self.members.remove(i);
                self.boxes.remove(i);
            } else {
                i += 1;
            }
        }
    }

    fn remove_where_box(&mut self, mut predicate: impl FnMut(&EpsilonBox) -> bool) {
        let mut i = 0;
        while i < self.members.len() {
            if predicate(&self.boxes[i]) {
                self.members.remove(i);
                self.boxes.remove(i);
            } else {
                i += 1;
            }
        }
    }

    /// Insert `new`, resolving a box collision by keeping the dominating
    /// solution, or the one closer to the box's lower corner when mutually
    /// non-dominant.
    fn insert_one_per_box(&mut self, new: &Candidate) {
        let new_box = self.box_of(new);
        if let Some(i) = self.boxes.iter().position(|b| *b == new_box) {
            let mate = &self.members[i];
            let new_wins = if dominates_unchecked(&new.objectives, &mate.objectives) {
                true
            } else if dominates_unchecked(&mate.objectives, &new.objectives) {
                false
            } else {
                let corner = new_box.lower_corner(self.epsilon);
                corner_distance(&new.objectives, &corner, self.f_floor)
                    < corner_distance(&mate.objectives, &corner, self.f_floor)
            };
            if new_wins {
                self.members[i] = new.clone();
            }
        } else {
            self.boxes.push(new_box);
            self.members.push(new.clone());
        }
    }

    /// Exhaustive pairwise invariant check: no two members share a box and
    /// none ε-dominates another.
    pub fn check_invariants(&self) -> Result<(), AnnealError> {
        for i in 0..self.members.len() {
            for j in 0..self.members.len() {
                if i == j {
                    continue;
                }
                if self.boxes[i] == self.boxes[j] {
                    return Err(AnnealError::Invalid(format!(
                        "members {i} and {j} share box {:?}",
                        self.boxes[i]
                    )));
                }
                if self.boxes[i].dominates(&self.boxes[j]) {
                    return Err(AnnealError::Invalid(format!(
                        "member {i} epsilon-dominates member {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// CSV export: `segment,severity,j_0..j_{l-1}`.
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        let n_obj = self.members.first().map_or(0, |m| m.objectives.len());
        let mut header = String::from("segment,severity");
        for i in 0..n_obj {
            header.push_str(&format!(",j_{i}"));
        }
        writeln!(writer, "{header}")?;
        for m in &self.members {
            let mut row = format!("{},{:?}", m.segment, m.severity);
            for v in &m.objectives {
                row.push_str(&format!(",{v:?}"));
            }
            writeln!(writer, "{row}")?;
        }
        Ok(())
    }
}

fn corner_distance(objectives: &[f64], corner: &[f64], f_floor: f64) -> f64 {
    objectives
        .iter()
        .zip(corner)
        .map(|(&f, &c)| {
            let d = f.max(f_floor) - c;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
