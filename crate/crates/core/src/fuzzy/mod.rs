//! Membership functions, linguistic terms with multiple interpretations, and
//! rule bases for the three inference engines.
//!
//! A linguistic term is represented as a finite set of *interpretations*:
//! each interpretation pairs a type-1 triangular membership function with a
//! secondary weight. When the secondary weights form a probability
//! distribution over the interpretations the term is *probabilistic*; when
//! they are themselves membership degrees the term is *fuzzy*.

mod engine;

pub use engine::{
    effective_rule_weights, firing_strength, fuzzy_combinations, infer, infer_fuzzy_fuzzy,
    infer_prob_fuzzy, infer_tsk, prob_combinations, retain_max_secondary, tsk_blend,
    FuzzyCombination, ProbCombination,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for the sum-to-one check on probabilistic secondary weights.
pub const MASS_TOL: f64 = 1e-9;

/// Tolerance under which two primary combination degrees count as duplicates.
pub const PRIMARY_DUP_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("invalid triangle: require left <= peak <= right, got ({0}, {1}, {2})")]
    InvalidTriangle(f64, f64, f64),
    #[error("secondary weight {0} outside [0, 1]")]
    InvalidSecondary(f64),
    #[error("term '{0}' has no interpretations")]
    EmptyTerm(String),
    #[error("probabilistic term '{0}': secondary weights sum to {1}, expected 1")]
    MassNotNormalized(String, f64),
    #[error("rule base has no rules")]
    EmptyRuleBase,
    #[error("rule {0} has arity {1}, rule base expects {2}")]
    ArityMismatch(usize, usize, usize),
    #[error("rule {0} consequent has {1} coefficients, expected {2}")]
    ConsequentArity(usize, usize, usize),
    #[error("rule {0} mixes term kinds within the rule base")]
    MixedKinds(usize),
    #[error("rule {0}, dimension {1}: interpretation count {2} differs from {3}")]
    InterpretationCount(usize, usize, usize, usize),
    #[error("rule {0}, dimension {1}: secondary weights differ across rules")]
    SecondaryMismatch(usize, usize),
    #[error("no rule fired for the given inputs")]
    NoRuleFired,
}

/// T-norm used to combine membership degrees across antecedent dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TNorm {
    #[default]
    Min,
    Product,
}

impl TNorm {
    pub fn combine(self, degrees: impl IntoIterator<Item = f64>) -> f64 {
        match self {
            TNorm::Min => degrees.into_iter().fold(1.0, f64::min),
            TNorm::Product => degrees.into_iter().product(),
        }
    }
}

/// Type-1 triangular membership function.
///
/// Shoulder flags hold the boundary value outside the support, which models
/// the saturated end terms of a partition ("low" stays 1 below its peak,
/// "high" stays 1 above its peak).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type1Mf {
    left: f64,
    peak: f64,
    right: f64,
    #[serde(default)]
    left_shoulder: bool,
    #[serde(default)]
    right_shoulder: bool,
}

impl Type1Mf {
    pub fn triangular(left: f64, peak: f64, right: f64) -> Result<Self, FuzzyError> {
        Self::with_shoulders(left, peak, right, false, false)
    }

    pub fn with_shoulders(
        left: f64,
        peak: f64,
        right: f64,
        left_shoulder: bool,
        right_shoulder: bool,
    ) -> Result<Self, FuzzyError> {
        if !(left <= peak && peak <= right) || !left.is_finite() || !right.is_finite() {
            return Err(FuzzyError::InvalidTriangle(left, peak, right));
        }
        Ok(Self {
            left,
            peak,
            right,
            left_shoulder,
            right_shoulder,
        })
    }

    /// Degenerate shape that evaluates to 1 everywhere. Useful for terms
    /// whose antecedent should never constrain an input.
    pub fn always(at: f64) -> Self {
        Self {
            left: at,
            peak: at,
            right: at,
            left_shoulder: true,
            right_shoulder: true,
        }
    }

    pub fn breakpoints(&self) -> (f64, f64, f64) {
        (self.left, self.peak, self.right)
    }

    /// Piecewise-linear membership degree, always in [0, 1].
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.left {
            return if self.left_shoulder { self.boundary_left() } else { 0.0 };
        }
        if x > self.right {
            return if self.right_shoulder { self.boundary_right() } else { 0.0 };
        }
        if x == self.peak {
            return 1.0;
        }
        if x < self.peak {
            // left == peak cannot reach here
            (x - self.left) / (self.peak - self.left)
        } else {
            (self.right - x) / (self.right - self.peak)
        }
    }

    fn boundary_left(&self) -> f64 {
        if self.peak == self.left {
            1.0
        } else {
            0.0
        }
    }

    fn boundary_right(&self) -> f64 {
        if self.peak == self.right {
            1.0
        } else {
            0.0
        }
    }

    /// Same shape translated by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            left: self.left + delta,
            peak: self.peak + delta,
            right: self.right + delta,
            ..*self
        }
    }

    /// Same shape with all breakpoints scaled by `factor` (about the origin).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            left: self.left * factor,
            peak: self.peak * factor,
            right: self.right * factor,
            ..*self
        }
    }
}

/// One reading of a linguistic term: a primary membership function plus the
/// weight of this reading (a probability mass or a secondary membership
/// degree, depending on the term kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub primary: Type1Mf,
    pub secondary: f64,
    pub label: String,
}

impl Interpretation {
    pub fn new(primary: Type1Mf, secondary: f64, label: impl Into<String>) -> Result<Self, FuzzyError> {
        if !(0.0..=1.0).contains(&secondary) {
            return Err(FuzzyError::InvalidSecondary(secondary));
        }
        Ok(Self {
            primary,
            secondary,
            label: label.into(),
        })
    }
}

/// Kind of a type-2 term, deciding how secondary weights are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MfKind {
    /// Secondary weights are probability masses and must sum to one.
    Probabilistic,
    /// Secondary weights are membership degrees; no sum constraint.
    Fuzzy,
}

/// A linguistic term with one or more interpretations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Type2Mf {
    pub kind: MfKind,
    interpretations: Vec<Interpretation>,
    pub term: String,
}

impl Type2Mf {
    pub fn new(
        kind: MfKind,
        term: impl Into<String>,
        interpretations: Vec<Interpretation>,
    ) -> Result<Self, FuzzyError> {
        let term = term.into();
        if interpretations.is_empty() {
            return Err(FuzzyError::EmptyTerm(term));
        }
        if kind == MfKind::Probabilistic {
            let mass: f64 = interpretations.iter().map(|i| i.secondary).sum();
            if (mass - 1.0).abs() > MASS_TOL {
                return Err(FuzzyError::MassNotNormalized(term, mass));
            }
        }
        Ok(Self {
            kind,
            interpretations,
            term,
        })
    }

    /// Wraps a type-1 membership function as a single-interpretation term
    /// with secondary weight 1.
    pub fn type1(term: impl Into<String>, primary: Type1Mf) -> Self {
        Self {
            kind: MfKind::Fuzzy,
            interpretations: vec![Interpretation {
                primary,
                secondary: 1.0,
                label: String::new(),
            }],
            term: term.into(),
        }
    }

    pub fn interpretations(&self) -> &[Interpretation] {
        &self.interpretations
    }

    pub fn interpretation_count(&self) -> usize {
        self.interpretations.len()
    }

    pub fn secondaries(&self) -> Vec<f64> {
        self.interpretations.iter().map(|i| i.secondary).collect()
    }
}

/// One if-then rule: a term per input dimension and an affine consequent
/// `a0 + a1*x1 + ... + ad*xd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedent: Vec<Type2Mf>,
    pub consequent: Vec<f64>,
}

impl FuzzyRule {
    pub fn new(antecedent: Vec<Type2Mf>, consequent: Vec<f64>) -> Self {
        Self {
            antecedent,
            consequent,
        }
    }

    pub fn arity(&self) -> usize {
        self.antecedent.len()
    }

    /// Evaluates the affine consequent at the input vector.
    pub fn consequent_value(&self, inputs: &[f64]) -> f64 {
        debug_assert_eq!(inputs.len() + 1, self.consequent.len());
        self.consequent[0]
            + self.consequent[1..]
                .iter()
                .zip(inputs)
                .map(|(a, x)| a * x)
                .sum::<f64>()
    }
}

/// A set of rules sharing arity, term kind, and per-dimension interpretation
/// structure.
///
/// Within one dimension, every rule's term must expose the same number of
/// interpretations with the same secondary weights: an interpretation index
/// names a reading of the *input variable*, so its weight cannot depend on
/// which term a rule uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleBase {
    rules: Vec<FuzzyRule>,
    input_dims: usize,
    pub t_norm: TNorm,
}

impl RuleBase {
    pub fn new(rules: Vec<FuzzyRule>, t_norm: TNorm) -> Result<Self, FuzzyError> {
        let first = rules.first().ok_or(FuzzyError::EmptyRuleBase)?;
        let input_dims = first.arity();
        let kind = first.antecedent[0].kind;
        for (r, rule) in rules.iter().enumerate() {
            if rule.arity() != input_dims {
                return Err(FuzzyError::ArityMismatch(r, rule.arity(), input_dims));
            }
            if rule.consequent.len() != input_dims + 1 {
                return Err(FuzzyError::ConsequentArity(
                    r,
                    rule.consequent.len(),
                    input_dims + 1,
                ));
            }
            for (d, term) in rule.antecedent.iter().enumerate() {
                if term.kind != kind {
                    return Err(FuzzyError::MixedKinds(r));
                }
                let expected = first.antecedent[d].interpretation_count();
                if term.interpretation_count() != expected {
                    return Err(FuzzyError::InterpretationCount(
                        r,
                        d,
                        term.interpretation_count(),
                        expected,
                    ));
                }
                for (i, interp) in term.interpretations.iter().enumerate() {
                    let reference = first.antecedent[d].interpretations[i].secondary;
                    if (interp.secondary - reference).abs() > MASS_TOL {
                        return Err(FuzzyError::SecondaryMismatch(r, d));
                    }
                }
            }
        }
        Ok(Self {
            rules,
            input_dims,
            t_norm,
        })
    }

    pub fn rules(&self) -> &[FuzzyRule] {
        &self.rules
    }

    pub fn input_dims(&self) -> usize {
        self.input_dims
    }

    pub fn kind(&self) -> MfKind {
        self.rules[0].antecedent[0].kind
    }

    /// Interpretation count per input dimension.
    pub fn interpretation_counts(&self) -> Vec<usize> {
        self.rules[0]
            .antecedent
            .iter()
            .map(|t| t.interpretation_count())
            .collect()
    }

    /// Secondary weights of dimension `d`, indexed by interpretation.
    pub fn dim_secondaries(&self, d: usize) -> Vec<f64> {
        self.rules[0].antecedent[d].secondaries()
    }

    /// Replaces the consequent coefficients of rule `r`.
    pub fn set_consequent(&mut self, r: usize, coefficients: Vec<f64>) {
        assert_eq!(coefficients.len(), self.input_dims + 1, "consequent arity");
        self.rules[r].consequent = coefficients;
    }

    /// Flattened view of all consequent coefficients, rule-major.
    pub fn consequents_flat(&self) -> Vec<f64> {
        self.rules
            .iter()
            .flat_map(|r| r.consequent.iter().copied())
            .collect()
    }

    /// Overwrites all consequents from a rule-major flattened vector.
    pub fn set_consequents_flat(&mut self, flat: &[f64]) {
        let width = self.input_dims + 1;
        assert_eq!(flat.len(), self.rules.len() * width, "consequent vector size");
        for (r, chunk) in flat.chunks(width).enumerate() {
            self.rules[r].consequent = chunk.to_vec();
        }
    }

    /// Replaces the antecedent terms of every rule on dimension `d` via `f`,
    /// which maps the current term to its updated shape.
    pub fn remap_antecedents(&mut self, mut f: impl FnMut(usize, &Type2Mf) -> Type2Mf) {
        for rule in &mut self.rules {
            for (d, term) in rule.antecedent.iter_mut().enumerate() {
                *term = f(d, term);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_peak_is_one() {
        let mf = Type1Mf::triangular(0.0, 50.0, 100.0).unwrap();
        assert_eq!(mf.eval(50.0), 1.0);
    }

    #[test]
    fn triangle_outside_support_is_zero() {
        let mf = Type1Mf::triangular(0.0, 50.0, 100.0).unwrap();
        assert_eq!(mf.eval(120.0), 0.0);
        assert_eq!(mf.eval(-1.0), 0.0);
    }

    #[test]
    fn triangle_linear_interpolation() {
        // oracle: (x - left) / (peak - left)
        let (left, peak, right) = (0.0, 50.0, 100.0);
        let mf = Type1Mf::triangular(left, peak, right).unwrap();
        let x = 25.0;
        assert_eq!(mf.eval(x), (x - left) / (peak - left));
        assert_eq!(mf.eval(25.0), 0.5);
        assert_eq!(mf.eval(75.0), (right - 75.0) / (right - peak));
    }

    #[test]
    fn shoulders_hold_boundary_value() {
        let low = Type1Mf::with_shoulders(0.0, 0.0, 100.0, true, false).unwrap();
        assert_eq!(low.eval(-10.0), 1.0);
        assert_eq!(low.eval(50.0), 0.5);
        assert_eq!(low.eval(120.0), 0.0);
        let high = Type1Mf::with_shoulders(0.0, 100.0, 100.0, false, true).unwrap();
        assert_eq!(high.eval(120.0), 1.0);
        assert_eq!(high.eval(50.0), 0.5);
        assert_eq!(high.eval(-1.0), 0.0);
    }

    #[test]
    fn always_fires_everywhere() {
        let mf = Type1Mf::always(5.0);
        for x in [-1e9, 0.0, 5.0, 1e9] {
            assert_eq!(mf.eval(x), 1.0);
        }
    }

    #[test]
    fn invalid_triangle_rejected() {
        assert!(Type1Mf::triangular(10.0, 5.0, 20.0).is_err());
        assert!(Type1Mf::triangular(0.0, 30.0, 20.0).is_err());
    }

    #[test]
    fn probabilistic_masses_must_sum_to_one() {
        let tri = Type1Mf::triangular(0.0, 1.0, 2.0).unwrap();
        let interps = vec![
            Interpretation::new(tri.clone(), 0.6, "a").unwrap(),
            Interpretation::new(tri, 0.3, "b").unwrap(),
        ];
        let err = Type2Mf::new(MfKind::Probabilistic, "low", interps).unwrap_err();
        assert!(matches!(err, FuzzyError::MassNotNormalized(_, _)));
    }

    #[test]
    fn secondary_outside_unit_interval_rejected() {
        let tri = Type1Mf::triangular(0.0, 1.0, 2.0).unwrap();
        assert!(Interpretation::new(tri, 1.5, "x").is_err());
    }

    #[test]
    fn rule_base_rejects_mixed_interpretation_counts() {
        let tri = Type1Mf::triangular(0.0, 1.0, 2.0).unwrap();
        let one = Type2Mf::type1("a", tri.clone());
        let two = Type2Mf::new(
            MfKind::Fuzzy,
            "b",
            vec![
                Interpretation::new(tri.clone(), 1.0, "i").unwrap(),
                Interpretation::new(tri, 0.5, "j").unwrap(),
            ],
        )
        .unwrap();
        let rules = vec![
            FuzzyRule::new(vec![one], vec![0.0, 1.0]),
            FuzzyRule::new(vec![two], vec![0.0, 1.0]),
        ];
        assert!(matches!(
            RuleBase::new(rules, TNorm::Min),
            Err(FuzzyError::InterpretationCount(1, 0, 2, 1))
        ));
    }

    #[test]
    fn degree_closure_over_random_inputs() {
        // every evaluated degree stays in [0, 1]
        let shapes = [
            Type1Mf::triangular(-3.0, 0.5, 7.0).unwrap(),
            Type1Mf::with_shoulders(0.0, 0.0, 10.0, true, false).unwrap(),
            Type1Mf::with_shoulders(0.0, 10.0, 10.0, false, true).unwrap(),
            Type1Mf::always(1.0),
        ];
        let mut x = -50.0;
        while x <= 50.0 {
            for mf in &shapes {
                let d = mf.eval(x);
                assert!((0.0..=1.0).contains(&d), "degree {d} out of range at {x}");
            }
            x += 0.37;
        }
    }
}
