//! Per-subsystem fuzzy-control agents: a rule base over demand features
//! (optionally extended with past measurements and the running cost
//! average), clamped to actuator bounds.

use crate::cost::KappaState;
use crate::fuzzy::{self, FuzzyError, FuzzyRule, MfKind, RuleBase, TNorm, Type1Mf, Type2Mf};
use crate::model::{full_grid_rules, ModelClass, ModelError, TermScheme};
use serde::{Deserialize, Serialize};

/// Expected cumulative number of vehicles on a signal group's influencing
/// lanes over the upcoming cycle: current counts plus forecast inflow times
/// the cycle length.
pub fn cumulative_demand(counts: &[f64], inflow_forecast: f64, cycle: f64) -> f64 {
    debug_assert!(counts.iter().all(|&c| c >= 0.0));
    debug_assert!(inflow_forecast >= 0.0);
    counts.iter().sum::<f64>() + inflow_forecast * cycle
}

/// Tuning schedule: preset steps plus a step-cost event trigger, and the
/// weights of the past/future terms in the tuning objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneSchedule {
    pub preset_steps: Vec<u64>,
    /// Step-cost threshold that triggers an off-schedule tuning event.
    pub sigma: f64,
    /// Number of recent control steps in the past re-simulation window.
    pub window_len: usize,
    pub w_past: f64,
    pub w_future: f64,
}

impl TuneSchedule {
    pub fn should_tune(&self, k: u64, latest_step_cost: f64) -> bool {
        self.preset_steps.contains(&k) || latest_step_cost >= self.sigma
    }
}

impl Default for TuneSchedule {
    fn default() -> Self {
        Self {
            preset_steps: Vec::new(),
            sigma: f64::INFINITY,
            window_len: 3,
            w_past: 0.5,
            w_future: 0.5,
        }
    }
}

/// Static agent parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentParams {
    /// Green-time bounds in seconds.
    pub bounds: (f64, f64),
    /// Number of past measurements beyond the current one the agent's rules
    /// condition on.
    pub delta: usize,
    /// Whether the running cost average enters the rule consequents.
    pub use_kappa: bool,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            bounds: (15.0, 75.0),
            delta: 1,
            use_kappa: false,
        }
    }
}

/// A fuzzy-control agent for one subsystem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControlAgent {
    pub name: String,
    pub class: ModelClass,
    pub scheme: TermScheme,
    pub rule_base: RuleBase,
    /// Antecedent parameter vector: range per rule-base input dimension
    /// (the trailing cost-average dimension, when present, is unbounded).
    pub ranges: Vec<f64>,
    pub params: AgentParams,
    pub kappa: KappaState,
    prev_u: Option<f64>,
}

impl ControlAgent {
    /// Builds an agent whose rules form the full low/high grid over the
    /// given input ranges. `consequents[r]` must have width
    /// `input_ranges.len() + 1`, plus one trailing cost coefficient when
    /// `params.use_kappa` is set.
    pub fn new(
        name: impl Into<String>,
        class: ModelClass,
        scheme: TermScheme,
        input_ranges: &[f64],
        consequents: Vec<Vec<f64>>,
        params: AgentParams,
        lambda: f64,
    ) -> Result<Self, ModelError> {
        let dims = input_ranges.len();
        assert_eq!(consequents.len(), 1 << dims, "one consequent per grid rule");
        let pairs: Vec<_> = input_ranges
            .iter()
            .map(|&r| scheme.pair(r, "low", "high"))
            .collect();
        let mut rules = full_grid_rules(&pairs, |r| consequents[r].clone());
        if params.use_kappa {
            // the cost average constrains nothing in the antecedent; it only
            // feeds the consequent
            let kind = rules[0].antecedent[0].kind;
            let any = kappa_term(kind);
            for rule in &mut rules {
                rule.antecedent.push(any.clone());
            }
        }
        let rule_base = RuleBase::new(rules, TNorm::Min)?;
        let mut ranges = input_ranges.to_vec();
        if params.use_kappa {
            ranges.push(f64::INFINITY);
        }
        Ok(Self {
            name: name.into(),
            class,
            scheme,
            rule_base,
            ranges,
            params,
            kappa: KappaState::new(lambda).expect("valid forgetting factor"),
            prev_u: None,
        })
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.params.bounds
    }

    pub fn prev_u(&self) -> Option<f64> {
        self.prev_u
    }

    /// Evaluates the rule base without touching agent state. Falls back to
    /// `prev` (or the midpoint of the bounds) when no rule fires.
    pub fn decide_pure(&self, inputs: &[f64], prev: Option<f64>) -> f64 {
        let (lo, hi) = self.params.bounds;
        let raw = match fuzzy::infer(&self.rule_base, inputs, self.class) {
            Ok(u) => u,
            Err(FuzzyError::NoRuleFired) => prev.unwrap_or((lo + hi) / 2.0),
            Err(e) => panic!("agent inference failed: {e}"),
        };
        raw.clamp(lo, hi)
    }

    /// Decides the control input for this step and records it.
    pub fn decide(&mut self, inputs: &[f64]) -> f64 {
        let u = self.decide_pure(inputs, self.prev_u);
        self.prev_u = Some(u);
        u
    }

    /// Assembles the rule-base input vector from the current state features,
    /// past measurements, and (when configured) the previous cost average.
    pub fn assemble_inputs(&self, current: &[f64], past: &[f64], kappa_prev: f64) -> Vec<f64> {
        let mut inputs = Vec::with_capacity(self.rule_base.input_dims());
        inputs.extend_from_slice(current);
        inputs.extend_from_slice(past);
        if self.params.use_kappa {
            inputs.push(kappa_prev);
        }
        assert_eq!(inputs.len(), self.rule_base.input_dims(), "agent input arity");
        inputs
    }

    /// Folds a realized step cost into the agent's running average.
    pub fn record_cost(&mut self, step_cost: f64) {
        self.kappa = self.kappa.update(step_cost);
    }

    /// Applies the antecedent operator to the demand ranges and rebuilds the
    /// terms. The identity operator leaves everything untouched.
    pub fn tune_antecedents(&mut self, op: AntecedentTuneOp, observed: &[Vec<f64>]) {
        if op == AntecedentTuneOp::Identity {
            return;
        }
        let mut changed = false;
        for (d, range) in self.ranges.iter_mut().enumerate() {
            if !range.is_finite() {
                continue;
            }
            let max = observed
                .get(d)
                .map(|vals| vals.iter().fold(f64::NAN, |a, &b| a.max(b.abs())))
                .unwrap_or(f64::NAN);
            if max.is_finite() && max > 0.0 {
                *range = max;
                changed = true;
            }
        }
        if !changed {
            return;
        }
        let scheme = self.scheme.clone();
        let ranges = self.ranges.clone();
        let kind = self.rule_base.kind();
        self.rule_base.remap_antecedents(|d, term| {
            if !ranges[d].is_finite() {
                return kappa_term(kind);
            }
            let (low, high) = scheme.pair(ranges[d], "low", "high");
            if term.term == low.term {
                low
            } else {
                high
            }
        });
    }
}

/// Antecedent operator for agent tuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AntecedentTuneOp {
    Identity,
    RangeRescale,
}

fn kappa_term(kind: MfKind) -> Type2Mf {
    let interp = fuzzy::Interpretation::new(Type1Mf::always(0.0), 1.0, "any").unwrap();
    Type2Mf::new(kind, "any", vec![interp]).unwrap()
}

/// Consequents of a two-demand agent that linearize a proportional green
/// split around each rule's regime center. The resulting rule base is
/// mirror-symmetric: swapping the two demands maps the green time to
/// `cycle - u`.
pub fn proportional_split_consequents(cycle: f64, range: f64) -> Vec<Vec<f64>> {
    let centers = [range / 3.0, 2.0 * range / 3.0];
    (0..4usize)
        .map(|r| {
            let c_own = centers[r & 1];
            let c_other = centers[(r >> 1) & 1];
            let total = c_own + c_other;
            let g_own = cycle * c_other / (total * total);
            let g_other = -cycle * c_own / (total * total);
            let intercept = cycle * c_own / total - g_own * c_own - g_other * c_other;
            vec![intercept, g_own, g_other]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const CYCLE: f64 = 90.0;
    const RANGE: f64 = 120.0;

    fn traffic_agent(class: ModelClass) -> ControlAgent {
        ControlAgent::new(
            "L",
            class,
            TermScheme::for_class(class),
            &[RANGE, RANGE],
            proportional_split_consequents(CYCLE, RANGE),
            AgentParams::default(),
            0.9,
        )
        .unwrap()
    }

    #[test]
    fn cumulative_demand_zero_inflow() {
        assert_eq!(cumulative_demand(&[3.0, 4.0], 0.0, CYCLE), 7.0);
    }

    #[test]
    fn cumulative_demand_rate_times_cycle() {
        // oracle: 0.1 veh/s * 90 s = 9
        assert_abs_diff_eq!(cumulative_demand(&[0.0, 0.0], 0.1, CYCLE), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_demand_gives_half_cycle() {
        for class in [ModelClass::Type1, ModelClass::ProbFuzzy] {
            let mut agent = traffic_agent(class);
            for demand in [10.0, 40.0, 80.0, 110.0] {
                let u = agent.decide(&[demand, demand]);
                assert_abs_diff_eq!(u, CYCLE / 2.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn single_active_rule_affine_oracle() {
        // a single firing rule makes the output its affine consequent:
        // 10 + 0.5 * 40 + 0 = 30
        let mut agent = ControlAgent::new(
            "t",
            ModelClass::Type1,
            TermScheme::for_class(ModelClass::Type1),
            &[RANGE, RANGE],
            proportional_split_consequents(CYCLE, RANGE),
            AgentParams {
                bounds: (0.0, 90.0),
                ..Default::default()
            },
            0.9,
        )
        .unwrap();
        let any = Type2Mf::type1("any", Type1Mf::always(0.0));
        agent.rule_base = RuleBase::new(
            vec![FuzzyRule::new(vec![any.clone(), any], vec![10.0, 0.5, 0.0])],
            TNorm::Min,
        )
        .unwrap();
        assert_abs_diff_eq!(agent.decide(&[40.0, 55.0]), 30.0, epsilon = 1e-12);
    }

    #[test]
    fn out_of_range_output_is_clamped() {
        let mut agent = ControlAgent::new(
            "t",
            ModelClass::Type1,
            TermScheme::for_class(ModelClass::Type1),
            &[RANGE],
            vec![vec![95.0, 0.0], vec![95.0, 0.0]],
            AgentParams {
                bounds: (15.0, 75.0),
                ..Default::default()
            },
            0.9,
        )
        .unwrap();
        assert_eq!(agent.decide(&[50.0]), 75.0);
    }

    #[test]
    fn no_rule_fired_holds_previous_then_midpoint_first() {
        // terms without shoulders leave a dead zone outside [0, range]
        let low = Type2Mf::type1("low", Type1Mf::triangular(0.0, 0.0, 1.0).unwrap());
        let high = Type2Mf::type1("high", Type1Mf::triangular(0.0, 1.0, 1.0).unwrap());
        let rules = vec![
            FuzzyRule::new(vec![low], vec![20.0, 0.0]),
            FuzzyRule::new(vec![high], vec![70.0, 0.0]),
        ];
        let rule_base = RuleBase::new(rules, TNorm::Min).unwrap();
        let mut agent = ControlAgent::new(
            "t",
            ModelClass::Type1,
            TermScheme::for_class(ModelClass::Type1),
            &[1.0],
            vec![vec![20.0, 0.0], vec![70.0, 0.0]],
            AgentParams::default(),
            0.9,
        )
        .unwrap();
        agent.rule_base = rule_base;
        // first call with nothing fired: midpoint of (15, 75)
        assert_eq!(agent.decide(&[5.0]), 45.0);
        // a fired step, then a dead-zone step holds the previous output
        let u = agent.decide(&[1.0]);
        assert_eq!(agent.decide(&[5.0]), u);
    }

    #[test]
    fn should_tune_triggers() {
        let schedule = TuneSchedule {
            preset_steps: vec![4],
            sigma: 100.0,
            ..Default::default()
        };
        assert!(schedule.should_tune(4, 0.0));
        assert!(schedule.should_tune(9, 120.0));
        assert!(!schedule.should_tune(9, 30.0));
    }

    #[test]
    fn output_stays_in_bounds_for_arbitrary_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for class in [ModelClass::Type1, ModelClass::ProbFuzzy] {
            let mut agent = traffic_agent(class);
            for _ in 0..500 {
                let a = rng.random_range(-1000.0..2000.0);
                let b = rng.random_range(-1000.0..2000.0);
                let u = agent.decide(&[a, b]);
                assert!((15.0..=75.0).contains(&u), "u = {u} for ({a}, {b})");
            }
        }
    }

    #[test]
    fn mirrored_demands_mirror_the_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for class in [ModelClass::Type1, ModelClass::ProbFuzzy] {
            let agent = traffic_agent(class);
            for _ in 0..200 {
                let a = rng.random_range(0.0..RANGE);
                let b = rng.random_range(0.0..RANGE);
                let u_ab = agent.decide_pure(&[a, b], None);
                let u_ba = agent.decide_pure(&[b, a], None);
                assert_abs_diff_eq!(u_ab + u_ba, CYCLE, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn response_is_monotone_in_own_demand() {
        for class in [ModelClass::Type1, ModelClass::ProbFuzzy] {
            let agent = traffic_agent(class);
            for other in [0.0, 30.0, 60.0, 90.0, 120.0] {
                let mut prev = f64::NEG_INFINITY;
                let mut own = 0.0;
                while own <= RANGE {
                    let u = agent.decide_pure(&[own, other], None);
                    assert!(
                        u >= prev - 1e-9,
                        "u({own}, {other}) = {u} < previous {prev} for {class}"
                    );
                    prev = u;
                    own += 2.0;
                }
            }
        }
    }

    #[test]
    fn kappa_dimension_feeds_consequent_only() {
        let mut agent = ControlAgent::new(
            "t",
            ModelClass::Type1,
            TermScheme::for_class(ModelClass::Type1),
            &[RANGE],
            vec![vec![40.0, 0.0, -0.1], vec![40.0, 0.0, -0.1]],
            AgentParams {
                bounds: (0.0, 90.0),
                delta: 0,
                use_kappa: true,
            },
            0.9,
        )
        .unwrap();
        let low = agent.decide(&agent.assemble_inputs(&[60.0], &[], 0.0));
        let high = agent.decide(&agent.assemble_inputs(&[60.0], &[], 100.0));
        assert_abs_diff_eq!(low - high, 10.0, epsilon = 1e-9);
    }

    #[test]
    fn antecedent_rescale_doubles_ranges() {
        let mut agent = traffic_agent(ModelClass::Type1);
        agent.tune_antecedents(
            AntecedentTuneOp::RangeRescale,
            &[vec![240.0, 10.0], vec![240.0]],
        );
        assert_eq!(agent.ranges, vec![240.0, 240.0]);
        agent.tune_antecedents(AntecedentTuneOp::Identity, &[vec![999.0], vec![999.0]]);
        assert_eq!(agent.ranges, vec![240.0, 240.0]);
        let before = agent.rule_base.clone();
        agent.tune_antecedents(AntecedentTuneOp::RangeRescale, &[]);
        assert_eq!(agent.rule_base, before);
    }
}
