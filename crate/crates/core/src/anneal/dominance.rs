//! Pareto dominance, ε-box discretization, and the amount of domination.

use super::AnnealError;

/// Objective floor applied before the logarithm in the box transform; a
/// perfect match gives a zero objective and log 0 is undefined.
pub const DEFAULT_F_FLOOR: f64 = 1e-12;

/// True iff `a` is componentwise ≤ `b` and strictly smaller somewhere
/// (minimization everywhere).
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool, AnnealError> {
    if a.len() != b.len() {
        return Err(AnnealError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(dominates_unchecked(a, b))
}

pub(super) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Index vector of the ε-box containing an objective vector: component i is
/// ⌊log(max(f_i, f_floor)) / log(1+ε)⌋.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpsilonBox {
    indices: Vec<i64>,
}

impl EpsilonBox {
    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    /// Lower corner of the box in (clamped) objective space.
    pub fn lower_corner(&self, epsilon: f64) -> Vec<f64> {
        let base = 1.0 + epsilon;
        self.indices.iter().map(|&i| base.powi(i as i32)).collect()
    }

    /// Plain dominance applied to the integer box indices.
    pub fn dominates(&self, other: &EpsilonBox) -> bool {
        debug_assert_eq!(self.indices.len(), other.indices.len());
        let mut strict = false;
        for (a, b) in self.indices.iter().zip(&other.indices) {
            if a > b {
                return false;
            }
            if a < b {
                strict = true;
            }
        }
        strict
    }
}

/// Discretize an objective vector into its ε-box.
pub fn box_index(f: &[f64], epsilon: f64, f_floor: f64) -> EpsilonBox {
    debug_assert!(epsilon > 0.0 && f_floor > 0.0);
    let log_base = (1.0 + epsilon).ln();
    EpsilonBox {
        indices: f
            .iter()
            .map(|&v| (v.max(f_floor).ln() / log_base).floor() as i64)
            .collect(),
    }
}

/// Relation between two solutions in ε-objective space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonRelation {
    ADominates,
    BDominates,
    NonDominant,
    SameBox,
}

/// Apply plain dominance to the two box index vectors; equal boxes are
/// reported as [`EpsilonRelation::SameBox`].
pub fn epsilon_relation(
    f_a: &[f64],
    f_b: &[f64],
    epsilon: f64,
    f_floor: f64,
) -> Result<EpsilonRelation, AnnealError> {
    if f_a.len() != f_b.len() {
        return Err(AnnealError::LengthMismatch {
            left: f_a.len(),
            right: f_b.len(),
        });
    }
    let box_a = box_index(f_a, epsilon, f_floor);
    let box_b = box_index(f_b, epsilon, f_floor);
    Ok(if box_a == box_b {
        EpsilonRelation::SameBox
    } else if box_a.dominates(&box_b) {
        EpsilonRelation::ADominates
    } else if box_b.dominates(&box_a) {
        EpsilonRelation::BDominates
    } else {
        EpsilonRelation::NonDominant
    })
}

/// Amount of domination between two objective vectors: the product of
/// |f_i(a) − f_i(b)| / R_i over the components where the vectors differ.
/// The empty product (identical vectors) is 1.
pub fn amount_of_domination(f_a: &[f64], f_b: &[f64], ranges: &[f64]) -> f64 {
    debug_assert_eq!(f_a.len(), f_b.len());
    debug_assert_eq!(f_a.len(), ranges.len());
    let mut product = 1.0;
    for ((a, b), r) in f_a.iter().zip(f_b).zip(ranges) {
        if a != b {
            product *= (a - b).abs() / r;
        }
    }
    product
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dominance_basic_cases() {
        assert!(dominates(&[1.0, 2.0], &[2.0, 3.0]).unwrap());
        assert!(!dominates(&[1.0, 2.0], &[1.0, 2.0]).unwrap());
        assert!(!dominates(&[1.0, 3.0], &[2.0, 2.0]).unwrap());
        assert!(!dominates(&[2.0, 2.0], &[1.0, 3.0]).unwrap());
        // Weak improvement in one component is enough.
        assert!(dominates(&[1.0, 2.0], &[1.0, 3.0]).unwrap());
    }

    #[test]
    fn dominance_length_mismatch_is_an_error() {
        assert!(matches!(
            dominates(&[1.0], &[1.0, 2.0]),
            Err(AnnealError::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn power_of_base_lands_in_its_own_box() {
        // (1+ε)³ has log ratio exactly 3 up to rounding; pick a base where the
        // floating evaluation lands on the mathematical value.
        let eps = 1.0;
        let f = (1.0 + eps) * (1.0 + eps) * (1.0 + eps); // 8.0 exactly
        let b = box_index(&[f], eps, DEFAULT_F_FLOOR);
        assert_eq!(b.indices(), &[3]);
    }

    #[test]
    fn fig2_style_elimination() {
        // With ε = 0.5 the Pareto point (1.5, 3.5) falls into a box dominated
        // by the box of (1.6, 2.5) and drops out of the ε-Pareto set.
        let eps = 0.5;
        let kept = box_index(&[1.6, 2.5], eps, DEFAULT_F_FLOOR);
        let dropped = box_index(&[1.5, 3.5], eps, DEFAULT_F_FLOOR);
        assert_ne!(kept, dropped);
        assert!(kept.dominates(&dropped));
    }

    #[test]
    fn zero_objective_is_clamped_to_a_finite_box() {
        let eps = 0.05;
        let b = box_index(&[0.0, 1.0], eps, DEFAULT_F_FLOOR);
        let expected = (DEFAULT_F_FLOOR.ln() / (1.0 + eps).ln()).floor() as i64;
        assert_eq!(b.indices()[0], expected);
        assert!(b.indices()[0] > i64::MIN);
    }

    #[test]
    fn epsilon_relation_cases() {
        let eps = 0.5;
        let same = epsilon_relation(&[1.0, 2.0], &[1.0, 2.0], eps, DEFAULT_F_FLOOR).unwrap();
        assert_eq!(same, EpsilonRelation::SameBox);

        // Boxes (0, 0) vs (2, 2): a dominates.
        let a_dom = epsilon_relation(&[1.0, 1.0], &[3.0, 3.0], eps, DEFAULT_F_FLOOR).unwrap();
        assert_eq!(a_dom, EpsilonRelation::ADominates);
        let b_dom = epsilon_relation(&[3.0, 3.0], &[1.0, 1.0], eps, DEFAULT_F_FLOOR).unwrap();
        assert_eq!(b_dom, EpsilonRelation::BDominates);

        // Boxes (0, 3) vs (2, 0): non-dominant.
        let non = epsilon_relation(&[1.0, 4.0], &[3.0, 1.0], eps, DEFAULT_F_FLOOR).unwrap();
        assert_eq!(non, EpsilonRelation::NonDominant);
    }

    #[test]
    fn domination_amount_examples() {
        assert_eq!(
            amount_of_domination(&[1.0, 2.0], &[2.0, 4.0], &[1.0, 1.0]),
            2.0
        );
        assert_eq!(
            amount_of_domination(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 1.0]),
            1.0
        );
        assert_eq!(
            amount_of_domination(&[1.0, 2.0], &[2.0, 4.0], &[2.0, 2.0]),
            0.5
        );
        // Equal components are excluded from the product.
        assert_eq!(
            amount_of_domination(&[1.0, 5.0], &[2.0, 5.0], &[4.0, 1.0]),
            0.25
        );
    }

    proptest! {
        #[test]
        fn dominance_is_antisymmetric(
            a in prop::collection::vec(0.0..10.0f64, 2..6),
            b in prop::collection::vec(0.0..10.0f64, 2..6),
        ) {
            prop_assume!(a.len() == b.len());
            let ab = dominates(&a, &b).unwrap();
            let ba = dominates(&b, &a).unwrap();
            prop_assert!(!(ab && ba));
        }

        #[test]
        fn same_box_relation_iff_equal_boxes(
            a in prop::collection::vec(0.0..10.0f64, 3),
            b in prop::collection::vec(0.0..10.0f64, 3),
            eps in 0.01..0.5f64,
        ) {
            let rel = epsilon_relation(&a, &b, eps, DEFAULT_F_FLOOR).unwrap();
            let same = box_index(&a, eps, DEFAULT_F_FLOOR) == box_index(&b, eps, DEFAULT_F_FLOOR);
            prop_assert_eq!(rel == EpsilonRelation::SameBox, same);
        }

        #[test]
        fn box_indices_are_monotone_in_objectives(
            f in prop::collection::vec(1e-9..10.0f64, 3),
            bump in 1e-6..1.0f64,
            dim in 0usize..3,
            eps in 0.01..0.5f64,
        ) {
            let mut g = f.clone();
            g[dim] += bump;
            let bf = box_index(&f, eps, DEFAULT_F_FLOOR);
            let bg = box_index(&g, eps, DEFAULT_F_FLOOR);
            for d in 0..3 {
                prop_assert!(bf.indices()[d] <= bg.indices()[d]);
            }
        }
    }
}
