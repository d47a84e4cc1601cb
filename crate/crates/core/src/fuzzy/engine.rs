//! The three inference engines and their combination enumerations.
//!
//! All terms of a rule base expose the same interpretation count per input
//! dimension, so a *combination* is an assignment of one interpretation index
//! to each dimension. The probabilistic engine takes the expectation of the
//! rule-blend output over combinations; the fuzzy-fuzzy engine enumerates
//! combinations, drops duplicates by primary degree, and type-reduces with a
//! secondary-weighted centroid.

use super::{FuzzyError, FuzzyRule, RuleBase, TNorm, PRIMARY_DUP_TOL};
use crate::model::ModelClass;

/// T-norm of the chosen interpretations' primary degrees at the inputs.
pub fn firing_strength(
    rule: &FuzzyRule,
    interp_choice: &[usize],
    inputs: &[f64],
    t_norm: TNorm,
) -> f64 {
    assert_eq!(
        rule.arity(),
        inputs.len(),
        "firing_strength: rule arity {} vs {} inputs",
        rule.arity(),
        inputs.len()
    );
    assert_eq!(
        interp_choice.len(),
        inputs.len(),
        "firing_strength: one interpretation index per dimension"
    );
    t_norm.combine(
        rule.antecedent
            .iter()
            .zip(interp_choice)
            .zip(inputs)
            .map(|((term, &i), &x)| term.interpretations()[i].primary.eval(x)),
    )
}

/// Normalized weighted mean of the rule outputs: `sum(w*y) / sum(w)`.
pub fn tsk_blend(weights: &[f64], values: &[f64]) -> Result<f64, FuzzyError> {
    debug_assert_eq!(weights.len(), values.len());
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(FuzzyError::NoRuleFired);
    }
    Ok(weights
        .iter()
        .zip(values)
        .map(|(w, y)| w * y)
        .sum::<f64>()
        / total)
}

fn rule_values(rb: &RuleBase, inputs: &[f64]) -> Vec<f64> {
    rb.rules()
        .iter()
        .map(|r| r.consequent_value(inputs))
        .collect()
}

/// Type-1 inference: every term must carry exactly one interpretation.
pub fn infer_tsk(rb: &RuleBase, inputs: &[f64]) -> Result<f64, FuzzyError> {
    assert_eq!(rb.input_dims(), inputs.len(), "infer_tsk: input arity");
    assert!(
        rb.interpretation_counts().iter().all(|&n| n == 1),
        "infer_tsk requires single-interpretation terms"
    );
    let choice = vec![0usize; rb.input_dims()];
    let weights: Vec<f64> = rb
        .rules()
        .iter()
        .map(|r| firing_strength(r, &choice, inputs, rb.t_norm))
        .collect();
    tsk_blend(&weights, &rule_values(rb, inputs))
}

/// One interpretation assignment with its probability mass.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbCombination {
    pub choice: Vec<usize>,
    pub mass: f64,
}

/// Enumerates every interpretation assignment with its product mass. The
/// masses sum to one (up to rounding) because each dimension's masses do.
pub fn prob_combinations(rb: &RuleBase) -> Vec<ProbCombination> {
    let counts = rb.interpretation_counts();
    let masses: Vec<Vec<f64>> = (0..counts.len()).map(|d| rb.dim_secondaries(d)).collect();
    enumerate(&counts)
        .into_iter()
        .map(|choice| {
            let mass = choice
                .iter()
                .enumerate()
                .map(|(d, &i)| masses[d][i])
                .product();
            ProbCombination { choice, mass }
        })
        .collect()
}

/// Expectation of the rule-blend output over interpretation combinations.
///
/// Combinations in which no rule fires carry no defined output; their mass is
/// renormalized over the remaining combinations.
pub fn infer_prob_fuzzy(rb: &RuleBase, inputs: &[f64]) -> Result<f64, FuzzyError> {
    assert_eq!(rb.input_dims(), inputs.len(), "infer_prob_fuzzy: input arity");
    let values = rule_values(rb, inputs);
    let mut acc = 0.0;
    let mut retained_mass = 0.0;
    for combo in prob_combinations(rb) {
        let weights: Vec<f64> = rb
            .rules()
            .iter()
            .map(|r| firing_strength(r, &combo.choice, inputs, rb.t_norm))
            .collect();
        match tsk_blend(&weights, &values) {
            Ok(out) => {
                acc += combo.mass * out;
                retained_mass += combo.mass;
            }
            Err(FuzzyError::NoRuleFired) => {}
            Err(e) => return Err(e),
        }
    }
    if retained_mass == 0.0 {
        return Err(FuzzyError::NoRuleFired);
    }
    Ok(acc / retained_mass)
}

/// One interpretation assignment evaluated at an input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyCombination {
    pub choice: Vec<usize>,
    /// Strongest rule activation under this assignment.
    pub primary: f64,
    /// Minimum of the chosen interpretations' secondary degrees.
    pub secondary: f64,
    /// Per-rule firing strengths under this assignment.
    pub firings: Vec<f64>,
}

/// Enumerates all interpretation assignments with their combined primary and
/// secondary degrees at `inputs`. No filtering is applied.
pub fn fuzzy_combinations(rb: &RuleBase, inputs: &[f64]) -> Vec<FuzzyCombination> {
    assert_eq!(rb.input_dims(), inputs.len(), "fuzzy_combinations: input arity");
    let counts = rb.interpretation_counts();
    let secondaries: Vec<Vec<f64>> = (0..counts.len()).map(|d| rb.dim_secondaries(d)).collect();
    enumerate(&counts)
        .into_iter()
        .map(|choice| {
            let firings: Vec<f64> = rb
                .rules()
                .iter()
                .map(|r| firing_strength(r, &choice, inputs, rb.t_norm))
                .collect();
            let primary = firings.iter().fold(0.0, |a: f64, &b| a.max(b));
            let secondary = choice
                .iter()
                .enumerate()
                .map(|(d, &i)| secondaries[d][i])
                .fold(1.0, f64::min);
            FuzzyCombination {
                choice,
                primary,
                secondary,
                firings,
            }
        })
        .collect()
}

/// Among combinations with equal primary degree (within [`PRIMARY_DUP_TOL`])
/// keeps only the one with the maximum secondary degree.
pub fn retain_max_secondary(combos: Vec<FuzzyCombination>) -> Vec<FuzzyCombination> {
    let mut sorted = combos;
    sorted.sort_by(|a, b| a.primary.total_cmp(&b.primary));
    let mut retained: Vec<FuzzyCombination> = Vec::new();
    for combo in sorted {
        match retained.last_mut() {
            Some(last) if (combo.primary - last.primary).abs() <= PRIMARY_DUP_TOL => {
                if combo.secondary > last.secondary {
                    *last = combo;
                }
            }
            _ => retained.push(combo),
        }
    }
    retained
}

/// Fuzzy-fuzzy inference: enumeration, duplicate filtering, and type
/// reduction by the secondary-weighted centroid of the per-combination
/// rule-blend outputs.
pub fn infer_fuzzy_fuzzy(rb: &RuleBase, inputs: &[f64]) -> Result<f64, FuzzyError> {
    let values = rule_values(rb, inputs);
    let retained = retain_max_secondary(fuzzy_combinations(rb, inputs));
    let mut num = 0.0;
    let mut den = 0.0;
    for combo in &retained {
        match tsk_blend(&combo.firings, &values) {
            Ok(out) => {
                num += combo.secondary * out;
                den += combo.secondary;
            }
            Err(FuzzyError::NoRuleFired) => {}
            Err(e) => return Err(e),
        }
    }
    if den == 0.0 {
        return Err(FuzzyError::NoRuleFired);
    }
    Ok(num / den)
}

/// Inference dispatched on the model class.
pub fn infer(rb: &RuleBase, inputs: &[f64], class: ModelClass) -> Result<f64, FuzzyError> {
    match class {
        ModelClass::Type1 => infer_tsk(rb, inputs),
        ModelClass::ProbFuzzy => infer_prob_fuzzy(rb, inputs),
        ModelClass::FuzzyFuzzy => infer_fuzzy_fuzzy(rb, inputs),
    }
}

/// Effective normalized rule weights such that the engine output equals
/// `dot(weights, consequent_values)`.
///
/// The weights depend only on the antecedents and the inputs, never on the
/// consequent coefficients, so consequent identification can compute them
/// once per data point and reuse them for every candidate vector.
pub fn effective_rule_weights(
    rb: &RuleBase,
    inputs: &[f64],
    class: ModelClass,
) -> Result<Vec<f64>, FuzzyError> {
    let n = rb.rules().len();
    let mut eff = vec![0.0; n];
    match class {
        ModelClass::Type1 => {
            let choice = vec![0usize; rb.input_dims()];
            let weights: Vec<f64> = rb
                .rules()
                .iter()
                .map(|r| firing_strength(r, &choice, inputs, rb.t_norm))
                .collect();
            let total: f64 = weights.iter().sum();
            if total == 0.0 {
                return Err(FuzzyError::NoRuleFired);
            }
            for (e, w) in eff.iter_mut().zip(&weights) {
                *e = w / total;
            }
        }
        ModelClass::ProbFuzzy => {
            let mut retained_mass = 0.0;
            for combo in prob_combinations(rb) {
                let weights: Vec<f64> = rb
                    .rules()
                    .iter()
                    .map(|r| firing_strength(r, &combo.choice, inputs, rb.t_norm))
                    .collect();
                let total: f64 = weights.iter().sum();
                if total == 0.0 {
                    continue;
                }
                retained_mass += combo.mass;
                for (e, w) in eff.iter_mut().zip(&weights) {
                    *e += combo.mass * w / total;
                }
            }
            if retained_mass == 0.0 {
                return Err(FuzzyError::NoRuleFired);
            }
            for e in &mut eff {
                *e /= retained_mass;
            }
        }
        ModelClass::FuzzyFuzzy => {
            let mut den = 0.0;
            for combo in retain_max_secondary(fuzzy_combinations(rb, inputs)) {
                let total: f64 = combo.firings.iter().sum();
                if total == 0.0 {
                    continue;
                }
                den += combo.secondary;
                for (e, w) in eff.iter_mut().zip(&combo.firings) {
                    *e += combo.secondary * w / total;
                }
            }
            if den == 0.0 {
                return Err(FuzzyError::NoRuleFired);
            }
            for e in &mut eff {
                *e /= den;
            }
        }
    }
    Ok(eff)
}

fn enumerate(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut combos = vec![Vec::new()];
    for &count in counts {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                (0..count).map(move |i| {
                    let mut c = prefix.clone();
                    c.push(i);
                    c
                })
            })
            .collect();
    }
    combos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzzy::{Interpretation, MfKind, Type1Mf, Type2Mf};
    use approx::assert_abs_diff_eq;

    fn tri(l: f64, p: f64, r: f64) -> Type1Mf {
        Type1Mf::triangular(l, p, r).unwrap()
    }

    fn type1_base(consequents: Vec<Vec<f64>>, t_norm: TNorm) -> RuleBase {
        // two terms per dimension over [0, 10], dims from consequent width
        let dims = consequents[0].len() - 1;
        let low = Type2Mf::type1("low", Type1Mf::with_shoulders(0.0, 0.0, 10.0, true, false).unwrap());
        let high = Type2Mf::type1("high", Type1Mf::with_shoulders(0.0, 10.0, 10.0, false, true).unwrap());
        let mut rules = Vec::new();
        for (r, cons) in consequents.into_iter().enumerate() {
            let antecedent = (0..dims)
                .map(|d| if (r >> d) & 1 == 0 { low.clone() } else { high.clone() })
                .collect();
            rules.push(FuzzyRule::new(antecedent, cons));
        }
        RuleBase::new(rules, t_norm).unwrap()
    }

    #[test]
    fn firing_strength_min_identity() {
        // degrees (1,1,1) with min stays 1: inputs at each term's peak
        let term = |p: f64| Type2Mf::type1("t", tri(p - 1.0, p, p + 1.0));
        let rule = FuzzyRule::new(
            vec![term(1.0), term(2.0), term(3.0)],
            vec![0.0, 0.0, 0.0, 0.0],
        );
        let w = firing_strength(&rule, &[0, 0, 0], &[1.0, 2.0, 3.0], TNorm::Min);
        assert_eq!(w, 1.0);
    }

    #[test]
    fn firing_strength_min_and_product_oracles() {
        // degrees chosen via triangle interpolation; oracle = min / product of them
        let term = Type2Mf::type1("t", tri(0.0, 1.0, 2.0));
        let rule3 = FuzzyRule::new(vec![term.clone(); 3], vec![0.0; 4]);
        // eval at x: degree = x for x in [0,1]
        let w = firing_strength(&rule3, &[0, 0, 0], &[0.4, 0.7, 0.9], TNorm::Min);
        assert_abs_diff_eq!(w, 0.4, epsilon = 1e-15);
        let rule2 = FuzzyRule::new(vec![term; 2], vec![0.0; 3]);
        let w = firing_strength(&rule2, &[0, 0], &[0.4, 0.5], TNorm::Product);
        assert_abs_diff_eq!(w, 0.2, epsilon = 1e-15);
    }

    #[test]
    #[should_panic(expected = "arity")]
    fn firing_strength_arity_mismatch_panics() {
        let term = Type2Mf::type1("t", tri(0.0, 1.0, 2.0));
        let rule = FuzzyRule::new(vec![term; 2], vec![0.0; 3]);
        firing_strength(&rule, &[0], &[0.5], TNorm::Min);
    }

    #[test]
    fn tsk_single_firing_rule_weights_normalize_out() {
        // one rule fires with w = 0.3, consequent value 12 -> 12
        assert_eq!(tsk_blend(&[0.3, 0.0], &[12.0, 99.0]).unwrap(), 12.0);
    }

    #[test]
    fn tsk_weighted_mean_oracle() {
        // oracle: sum(w*y)/sum(w) = (0.5*10 + 0.5*20) / 1 = 15
        assert_eq!(tsk_blend(&[0.5, 0.5], &[10.0, 20.0]).unwrap(), 15.0);
    }

    #[test]
    fn tsk_no_rule_fired() {
        assert_eq!(
            tsk_blend(&[0.0, 0.0], &[1.0, 2.0]).unwrap_err(),
            FuzzyError::NoRuleFired
        );
        // full engine path: inputs outside every support
        let low = Type2Mf::type1("low", tri(0.0, 1.0, 2.0));
        let rb = RuleBase::new(
            vec![FuzzyRule::new(vec![low], vec![0.0, 1.0])],
            TNorm::Min,
        )
        .unwrap();
        assert_eq!(infer_tsk(&rb, &[5.0]).unwrap_err(), FuzzyError::NoRuleFired);
    }

    #[test]
    fn tsk_scale_free_weights() {
        let w = [0.2, 0.5, 0.8];
        let y = [3.0, -1.0, 7.0];
        let base = tsk_blend(&w, &y).unwrap();
        for k in [1e-6, 0.5, 3.0, 1e6] {
            let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
            assert_abs_diff_eq!(tsk_blend(&scaled, &y).unwrap(), base, epsilon = 1e-12);
        }
    }

    fn prob_term(term: &str, base: Type1Mf, masses: &[f64], shift: f64) -> Type2Mf {
        let interps = masses
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let delta = (i as f64 - (masses.len() - 1) as f64 / 2.0) * shift;
                Interpretation::new(base.shifted(delta), m, format!("i{i}")).unwrap()
            })
            .collect();
        Type2Mf::new(MfKind::Probabilistic, term, interps).unwrap()
    }

    fn prob_base_3d(masses: [&[f64]; 3]) -> RuleBase {
        let low = Type1Mf::with_shoulders(0.0, 0.0, 10.0, true, false).unwrap();
        let high = Type1Mf::with_shoulders(0.0, 10.0, 10.0, false, true).unwrap();
        let mut rules = Vec::new();
        for r in 0..8usize {
            let antecedent = (0..3)
                .map(|d| {
                    let base = if (r >> d) & 1 == 0 { low.clone() } else { high.clone() };
                    prob_term(if (r >> d) & 1 == 0 { "low" } else { "high" }, base, masses[d], 0.5)
                })
                .collect();
            let cons = vec![r as f64, 0.1, -0.2, 0.3];
            rules.push(FuzzyRule::new(antecedent, cons));
        }
        RuleBase::new(rules, TNorm::Min).unwrap()
    }

    #[test]
    fn prob_combination_mass_product_oracle() {
        // mass of one combination is the product of the per-dimension masses
        let rb = prob_base_3d([&[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3], &[0.2, 0.5, 0.3]]);
        let combos = prob_combinations(&rb);
        assert_eq!(combos.len(), 27);
        let target = combos
            .iter()
            .find(|c| c.choice == vec![0, 1, 2])
            .unwrap();
        assert_abs_diff_eq!(target.mass, 0.2 * 0.5 * 0.3, epsilon = 1e-15);
    }

    #[test]
    fn prob_combination_masses_sum_to_one() {
        // brute-force sum over all 27 outcomes
        let rb = prob_base_3d([&[0.2, 0.5, 0.3], &[0.25, 0.5, 0.25], &[0.1, 0.8, 0.1]]);
        let total: f64 = prob_combinations(&rb).iter().map(|c| c.mass).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn prob_engine_matches_expectation_oracle() {
        // independent oracle: explicit sum of mass * per-combination blend
        let rb = prob_base_3d([&[0.2, 0.5, 0.3], &[0.25, 0.5, 0.25], &[0.1, 0.8, 0.1]]);
        let inputs = [3.0, 7.0, 5.0];
        let values: Vec<f64> = rb.rules().iter().map(|r| r.consequent_value(&inputs)).collect();
        let mut expected = 0.0;
        let mut mass = 0.0;
        for combo in prob_combinations(&rb) {
            let w: Vec<f64> = rb
                .rules()
                .iter()
                .map(|r| firing_strength(r, &combo.choice, &inputs, rb.t_norm))
                .collect();
            if w.iter().sum::<f64>() > 0.0 {
                expected += combo.mass * tsk_blend(&w, &values).unwrap();
                mass += combo.mass;
            }
        }
        expected /= mass;
        assert_abs_diff_eq!(infer_prob_fuzzy(&rb, &inputs).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn prob_engine_degenerate_reduces_to_tsk() {
        // single interpretation with p = 1 per dimension
        let rb = type1_base(
            vec![
                vec![1.0, 0.5, 0.0, 0.0],
                vec![2.0, 0.0, 0.5, 0.0],
                vec![3.0, 0.0, 0.0, 0.5],
                vec![4.0, 0.5, 0.5, 0.0],
                vec![5.0, 0.0, 0.5, 0.5],
                vec![6.0, 0.5, 0.0, 0.5],
                vec![7.0, 0.5, 0.5, 0.5],
                vec![8.0, 0.1, 0.2, 0.3],
            ],
            TNorm::Min,
        );
        // convert to probabilistic single-interpretation terms
        let mut prob = rb.clone();
        prob.remap_antecedents(|_, t| {
            Type2Mf::new(
                MfKind::Probabilistic,
                t.term.clone(),
                vec![Interpretation::new(t.interpretations()[0].primary.clone(), 1.0, "only").unwrap()],
            )
            .unwrap()
        });
        let inputs = [2.5, 8.0, 4.0];
        assert_abs_diff_eq!(
            infer_prob_fuzzy(&prob, &inputs).unwrap(),
            infer_tsk(&rb, &inputs).unwrap(),
            epsilon = 1e-12
        );
    }

    fn fuzzy_term(term: &str, base: Type1Mf, secondaries: &[f64], shift: f64) -> Type2Mf {
        let interps = secondaries
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let delta = (i as f64 - (secondaries.len() - 1) as f64 / 2.0) * shift;
                Interpretation::new(base.shifted(delta), s, format!("i{i}")).unwrap()
            })
            .collect();
        Type2Mf::new(MfKind::Fuzzy, term, interps).unwrap()
    }

    fn fuzzy_base_3d(secondaries: [&[f64]; 3]) -> RuleBase {
        let low = Type1Mf::with_shoulders(0.0, 0.0, 10.0, true, false).unwrap();
        let high = Type1Mf::with_shoulders(0.0, 10.0, 10.0, false, true).unwrap();
        let mut rules = Vec::new();
        for r in 0..8usize {
            let antecedent = (0..3)
                .map(|d| {
                    let base = if (r >> d) & 1 == 0 { low.clone() } else { high.clone() };
                    fuzzy_term(if (r >> d) & 1 == 0 { "low" } else { "high" }, base, secondaries[d], 0.8)
                })
                .collect();
            rules.push(FuzzyRule::new(antecedent, vec![r as f64, 0.2, 0.1, -0.1]));
        }
        RuleBase::new(rules, TNorm::Min).unwrap()
    }

    #[test]
    fn fuzzy_two_interpretations_three_dims_gives_eight_combinations() {
        let rb = fuzzy_base_3d([&[0.9, 0.7], &[0.9, 0.7], &[0.9, 0.7]]);
        let combos = fuzzy_combinations(&rb, &[3.0, 6.0, 9.0]);
        assert_eq!(combos.len(), 8);
    }

    #[test]
    fn fuzzy_degenerate_reduces_to_tsk() {
        let rb = type1_base(
            vec![
                vec![1.0, 0.5, 0.0, 0.0],
                vec![2.0, 0.0, 0.5, 0.0],
                vec![3.0, 0.0, 0.0, 0.5],
                vec![4.0, 0.5, 0.5, 0.0],
                vec![5.0, 0.0, 0.5, 0.5],
                vec![6.0, 0.5, 0.0, 0.5],
                vec![7.0, 0.5, 0.5, 0.5],
                vec![8.0, 0.1, 0.2, 0.3],
            ],
            TNorm::Product,
        );
        let inputs = [2.5, 8.0, 4.0];
        assert_abs_diff_eq!(
            infer_fuzzy_fuzzy(&rb, &inputs).unwrap(),
            infer_tsk(&rb, &inputs).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn duplicate_filter_keeps_max_secondary() {
        // enumerate-and-filter oracle: craft one rule whose min over dims
        // saturates so two combinations tie on the primary degree.
        let narrow = tri(0.0, 3.0, 6.0); // at x = 4.2 -> 0.6
        let wide_a = tri(-10.0, 4.0, 20.0); // at x = 4.0 -> 1.0
        let wide_b = tri(-12.0, 4.0, 24.0); // at x = 4.0 -> 1.0
        let d0 = Type2Mf::new(
            MfKind::Fuzzy,
            "x",
            vec![Interpretation::new(narrow, 1.0, "only").unwrap()],
        )
        .unwrap();
        let d1 = Type2Mf::new(
            MfKind::Fuzzy,
            "y",
            vec![
                Interpretation::new(wide_a, 0.4, "a").unwrap(),
                Interpretation::new(wide_b, 0.9, "b").unwrap(),
            ],
        )
        .unwrap();
        let rb = RuleBase::new(
            vec![FuzzyRule::new(vec![d0, d1], vec![0.0, 1.0, 1.0])],
            TNorm::Min,
        )
        .unwrap();
        let combos = fuzzy_combinations(&rb, &[4.2, 4.0]);
        assert_eq!(combos.len(), 2);
        assert_abs_diff_eq!(combos[0].primary, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(combos[1].primary, 0.6, epsilon = 1e-12);
        let retained = retain_max_secondary(combos);
        assert_eq!(retained.len(), 1);
        assert_eq!(retained[0].secondary, 0.9);
    }

    #[test]
    fn combination_count_is_product_of_interpretation_counts() {
        for (c0, c1, c2) in [(1, 1, 1), (2, 2, 2), (3, 2, 1), (3, 3, 3)] {
            let secs: Vec<Vec<f64>> = [c0, c1, c2]
                .iter()
                .map(|&n| (0..n).map(|i| 1.0 - 0.1 * i as f64).collect())
                .collect();
            let rb = fuzzy_base_3d([&secs[0], &secs[1], &secs[2]]);
            let combos = fuzzy_combinations(&rb, &[1.0, 5.0, 9.0]);
            assert_eq!(combos.len(), c0 * c1 * c2);
        }
    }

    #[test]
    fn effective_weights_reproduce_engines() {
        let inputs = [3.0, 7.0, 5.0];
        let prob = prob_base_3d([&[0.2, 0.5, 0.3], &[0.25, 0.5, 0.25], &[0.1, 0.8, 0.1]]);
        let values: Vec<f64> = prob.rules().iter().map(|r| r.consequent_value(&inputs)).collect();
        let eff = effective_rule_weights(&prob, &inputs, ModelClass::ProbFuzzy).unwrap();
        let via_weights: f64 = eff.iter().zip(&values).map(|(w, y)| w * y).sum();
        assert_abs_diff_eq!(via_weights, infer_prob_fuzzy(&prob, &inputs).unwrap(), epsilon = 1e-12);

        let ff = fuzzy_base_3d([&[0.9, 0.7], &[0.9, 0.7], &[0.9, 0.7]]);
        let values: Vec<f64> = ff.rules().iter().map(|r| r.consequent_value(&inputs)).collect();
        let eff = effective_rule_weights(&ff, &inputs, ModelClass::FuzzyFuzzy).unwrap();
        let via_weights: f64 = eff.iter().zip(&values).map(|(w, y)| w * y).sum();
        assert_abs_diff_eq!(via_weights, infer_fuzzy_fuzzy(&ff, &inputs).unwrap(), epsilon = 1e-12);
    }
}
