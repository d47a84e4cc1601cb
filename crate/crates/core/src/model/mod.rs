//! Per-subsystem fuzzy models: one rule base per state variable driven by
//! the variable's own delayed value, the stored control inputs, and the
//! stored disturbances.

mod identify;
mod store;

pub use identify::{
    identification_window, identify_consequents, relative_validation_error, update_antecedents,
    AntecedentData, AntecedentOp, IdentifyOutcome,
};
pub use store::{InputDisturbanceStore, MeasurementStore};

use crate::fuzzy::{self, FuzzyError, RuleBase, TNorm};
use crate::fuzzy::{FuzzyRule, Type2Mf};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("not enough measurements at step {step}: {detail}")]
    NotEnoughMeasurements { step: u64, detail: String },
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Which membership-function family a model (or agent) uses, and therefore
/// which inference engine evaluates its rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelClass {
    /// Single-interpretation triangular terms.
    Type1,
    /// Multiple interpretations weighted by probability masses.
    ProbFuzzy,
    /// Multiple interpretations weighted by secondary membership degrees.
    FuzzyFuzzy,
}

impl ModelClass {
    pub fn all() -> [ModelClass; 3] {
        [ModelClass::Type1, ModelClass::ProbFuzzy, ModelClass::FuzzyFuzzy]
    }
}

impl std::fmt::Display for ModelClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ModelClass::Type1 => "type1",
            ModelClass::ProbFuzzy => "prob-fuzzy",
            ModelClass::FuzzyFuzzy => "fuzzy-fuzzy",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "type1" | "type-1" => Ok(ModelClass::Type1),
            "2" | "prob" | "prob-fuzzy" | "probabilistic-fuzzy" => Ok(ModelClass::ProbFuzzy),
            "3" | "fuzzy-fuzzy" => Ok(ModelClass::FuzzyFuzzy),
            other => Err(format!("unknown model class '{other}'")),
        }
    }
}

/// How linguistic term pairs are materialized from a variable range.
///
/// Every variable is covered by two half-overlapping triangles over
/// `[0, range]` with shoulders: the lower term peaks at 0, the upper term at
/// `range`, and they cross at `range / 2`. Type-2 classes replicate the base
/// triangle into interpretations shifted by fractions of the range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermScheme {
    pub class: ModelClass,
    /// Interpretation shift as a fraction of the variable range.
    pub shift_frac: f64,
    /// Probability masses of the probabilistic interpretations.
    pub prob_masses: Vec<f64>,
    /// Secondary degrees of the fuzzy-fuzzy interpretations, one per
    /// qualifier (first entry = "slightly", second = "very").
    pub ff_secondaries: Vec<f64>,
}

impl TermScheme {
    pub fn for_class(class: ModelClass) -> Self {
        Self {
            class,
            shift_frac: 0.1,
            prob_masses: vec![0.25, 0.5, 0.25],
            ff_secondaries: vec![0.9, 0.7],
        }
    }

    /// Builds the `(lower, upper)` term pair for a variable with the given
    /// range and term names.
    pub fn pair(&self, range: f64, lower: &str, upper: &str) -> (Type2Mf, Type2Mf) {
        use crate::fuzzy::{Interpretation, MfKind, Type1Mf};
        let low_base = Type1Mf::with_shoulders(0.0, 0.0, range, true, false).unwrap();
        let high_base = Type1Mf::with_shoulders(0.0, range, range, false, true).unwrap();
        match self.class {
            ModelClass::Type1 => (
                Type2Mf::type1(lower, low_base),
                Type2Mf::type1(upper, high_base),
            ),
            ModelClass::ProbFuzzy => {
                let n = self.prob_masses.len();
                let term = |base: &Type1Mf, name: &str| {
                    let interps = self
                        .prob_masses
                        .iter()
                        .enumerate()
                        .map(|(i, &mass)| {
                            let offset =
                                (i as f64 - (n - 1) as f64 / 2.0) * self.shift_frac * range;
                            Interpretation::new(base.shifted(offset), mass, format!("read{i}"))
                                .unwrap()
                        })
                        .collect();
                    Type2Mf::new(MfKind::Probabilistic, name, interps).unwrap()
                };
                (term(&low_base, lower), term(&high_base, upper))
            }
            ModelClass::FuzzyFuzzy => {
                // "slightly" widens the term toward the opposite end of the
                // range, "very" narrows it toward its own peak.
                let qualifiers = ["slightly", "very"];
                let term = |base: &Type1Mf, name: &str, toward_peak: f64| {
                    let interps = self
                        .ff_secondaries
                        .iter()
                        .zip(qualifiers)
                        .enumerate()
                        .map(|(i, (&sec, qual))| {
                            let sign = if i == 0 { -1.0 } else { 1.0 };
                            let offset = sign * toward_peak * self.shift_frac * range;
                            Interpretation::new(
                                base.shifted(offset),
                                sec,
                                format!("{qual} {name}"),
                            )
                            .unwrap()
                        })
                        .collect();
                    Type2Mf::new(MfKind::Fuzzy, name, interps).unwrap()
                };
                (term(&low_base, lower, -1.0), term(&high_base, upper, 1.0))
            }
        }
    }
}

/// Builds the full 2^d grid of rules over per-dimension `(lower, upper)`
/// term pairs; rule `r` uses the upper term on dimension `d` iff bit `d` of
/// `r` is set.
pub fn full_grid_rules(
    pairs: &[(Type2Mf, Type2Mf)],
    consequent: impl Fn(usize) -> Vec<f64>,
) -> Vec<FuzzyRule> {
    let dims = pairs.len();
    (0..1usize << dims)
        .map(|r| {
            let antecedent = (0..dims)
                .map(|d| {
                    if (r >> d) & 1 == 0 {
                        pairs[d].0.clone()
                    } else {
                        pairs[d].1.clone()
                    }
                })
                .collect();
            FuzzyRule::new(antecedent, consequent(r))
        })
        .collect()
}

/// Rule base plus antecedent-range parameters for one state variable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateVarModel {
    pub name: String,
    pub rule_base: RuleBase,
    /// Antecedent parameter vector: the range of each antecedent dimension,
    /// in the same order as the rule-base inputs.
    pub ranges: Vec<f64>,
}

/// Fuzzy model of one subsystem: a rule base per state variable over the
/// inputs `[own value, control inputs..., disturbances...]` at the previous
/// step (or the most recent reliable step, iterated forward over gaps).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsystemModel {
    pub name: String,
    pub class: ModelClass,
    pub scheme: TermScheme,
    vars: Vec<StateVarModel>,
    n_inputs: usize,
    n_disturbances: usize,
}

/// Specification of one modeled state variable.
#[derive(Debug, Clone)]
pub struct VarSpec {
    pub name: String,
    pub range: f64,
    /// Consequent coefficients applied to every rule at construction.
    pub default_consequent: Vec<f64>,
}

impl SubsystemModel {
    pub fn new(
        name: impl Into<String>,
        class: ModelClass,
        scheme: TermScheme,
        vars: &[VarSpec],
        input_ranges: &[f64],
        disturbance_ranges: &[f64],
        t_norm: TNorm,
    ) -> Result<Self, ModelError> {
        let n_inputs = input_ranges.len();
        let n_disturbances = disturbance_ranges.len();
        let mut built = Vec::with_capacity(vars.len());
        for spec in vars {
            let mut ranges = vec![spec.range];
            ranges.extend_from_slice(input_ranges);
            ranges.extend_from_slice(disturbance_ranges);
            let rule_base = materialize_rule_base(&scheme, &ranges, n_inputs, t_norm, |_| {
                spec.default_consequent.clone()
            })?;
            built.push(StateVarModel {
                name: spec.name.clone(),
                rule_base,
                ranges,
            });
        }
        Ok(Self {
            name: name.into(),
            class,
            scheme,
            vars: built,
            n_inputs,
            n_disturbances,
        })
    }

    pub fn vars(&self) -> &[StateVarModel] {
        &self.vars
    }

    pub fn vars_mut(&mut self) -> &mut [StateVarModel] {
        &mut self.vars
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_disturbances(&self) -> usize {
        self.n_disturbances
    }

    /// One-step prediction. A variable whose rules all miss holds its
    /// previous value.
    pub fn step(&self, state: &[f64], input: &[f64], disturbance: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.vars.len(), "state arity");
        assert_eq!(input.len(), self.n_inputs, "input arity");
        assert_eq!(disturbance.len(), self.n_disturbances, "disturbance arity");
        self.vars
            .iter()
            .enumerate()
            .map(|(i, var)| {
                let mut inputs = Vec::with_capacity(var.ranges.len());
                inputs.push(state[i]);
                inputs.extend_from_slice(input);
                inputs.extend_from_slice(disturbance);
                match fuzzy::infer(&var.rule_base, &inputs, self.class) {
                    Ok(value) => value,
                    Err(FuzzyError::NoRuleFired) => state[i],
                    Err(e) => panic!("inference failed: {e}"),
                }
            })
            .collect()
    }

    /// Estimates the state at step `k` from the most recent reliable
    /// measurement, iterating the one-step rule base over the stored inputs
    /// and disturbances on the gap.
    pub fn estimate_state(
        &self,
        measurements: &MeasurementStore,
        stores: &InputDisturbanceStore,
        k: u64,
    ) -> Result<Vec<f64>, ModelError> {
        let pi0 = measurements.pi_recent(k, 0)?;
        let mut state = measurements
            .reliable_state(pi0)
            .expect("pi_recent returned a reliable step")
            .to_vec();
        for t in pi0..k {
            let u = stores.input(t)?;
            let nu = stores.disturbance(t)?;
            state = self.step(&state, u, nu);
        }
        Ok(state)
    }
}

fn materialize_rule_base(
    scheme: &TermScheme,
    ranges: &[f64],
    n_inputs: usize,
    t_norm: TNorm,
    consequent: impl Fn(usize) -> Vec<f64>,
) -> Result<RuleBase, ModelError> {
    let pairs: Vec<_> = ranges
        .iter()
        .enumerate()
        .map(|(d, &range)| {
            // dimension 0 is the state variable, then inputs, then disturbances
            if d >= 1 && d < 1 + n_inputs {
                scheme.pair(range, "short", "long")
            } else {
                scheme.pair(range, "low", "high")
            }
        })
        .collect();
    Ok(RuleBase::new(full_grid_rules(&pairs, consequent), t_norm)?)
}

/// Schedule and thresholds for consequent identification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationConfig {
    /// Steps at which identification always runs.
    pub preset_steps: Vec<u64>,
    /// Estimation-error threshold per state variable (event trigger).
    pub error_threshold: Vec<f64>,
    /// Number of recent identification events in the fitting window.
    pub window_len: usize,
    pub optimizer_budget: usize,
    pub num_starts: usize,
    /// Search half-width for intercept coefficients, as a multiple of the
    /// variable range.
    pub intercept_bound: f64,
    /// Search half-width for slope coefficients.
    pub slope_bound: f64,
    pub seed: u64,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            preset_steps: Vec::new(),
            error_threshold: vec![3.0, 3.0],
            window_len: 3,
            optimizer_budget: 12_000,
            num_starts: 3,
            intercept_bound: 1.0,
            slope_bound: 3.0,
            seed: 0,
        }
    }
}

impl IdentificationConfig {
    /// Mixed regular/event-triggered schedule: identify at preset steps and
    /// whenever any state variable's recent estimation error reaches its
    /// threshold.
    pub fn should_identify(&self, k: u64, recent_error: &[f64]) -> bool {
        self.preset_steps.contains(&k)
            || recent_error
                .iter()
                .zip(&self.error_threshold)
                .any(|(err, thr)| err >= thr)
    }
}

/// Number of reliable measurements received between the previous
/// identification step and `k` (exclusive / inclusive).
pub fn delta_id(measurements: &MeasurementStore, prev_id_step: u64, k: u64) -> usize {
    measurements
        .reliable_steps()
        .filter(|&s| s > prev_id_step && s <= k)
        .count()
}
