//! Top control layer: coupled-disturbance construction, the centralized
//! horizon optimization over the integrated fuzzy model, and consequent
//! tuning of the control agents against the resulting local cost targets.

use crate::agent::{ControlAgent, TuneSchedule};
use crate::cost::{KappaState, StepCostSpec};
use crate::model::{ModelError, SubsystemModel};
use crate::optim::{minimize, SearchSpec};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MpcError {
    #[error("infeasible constraint specification: {0}")]
    Infeasible(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One directed coupling: selected state entries of `from` become
/// disturbance entries of `to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CouplingEntry {
    pub from: usize,
    pub to: usize,
    /// Indices into the source subsystem's state vector.
    pub state_indices: Vec<usize>,
    /// Slots in the destination's total disturbance vector. Must lie past
    /// the exogenous region.
    pub dest_slots: Vec<usize>,
}

/// Layout of every subsystem's total disturbance vector: the exogenous
/// entries first, then the coupled entries copied from neighbor states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    /// Exogenous disturbance arity per subsystem.
    pub exo_dims: Vec<usize>,
    pub entries: Vec<CouplingEntry>,
}

impl CouplingSpec {
    pub fn new(exo_dims: Vec<usize>, entries: Vec<CouplingEntry>) -> Result<Self, MpcError> {
        let n = exo_dims.len();
        let spec = Self { exo_dims, entries };
        for (i, entry) in spec.entries.iter().enumerate() {
            if entry.from >= n || entry.to >= n {
                return Err(MpcError::InvalidConfig(format!(
                    "coupling entry {i} references an unknown subsystem"
                )));
            }
            if entry.state_indices.len() != entry.dest_slots.len() {
                return Err(MpcError::InvalidConfig(format!(
                    "coupling entry {i}: {} state indices vs {} slots",
                    entry.state_indices.len(),
                    entry.dest_slots.len()
                )));
            }
        }
        for s in 0..n {
            let mut slots: Vec<usize> = spec
                .slots_for(s)
                .map(|(slot, _, _)| slot)
                .collect();
            let exo = spec.exo_dims[s];
            let dim = exo + slots.len();
            slots.sort_unstable();
            slots.dedup();
            if slots.len() != spec.slots_for(s).count() {
                return Err(MpcError::Infeasible(format!(
                    "subsystem {s}: coupled slots are not injective"
                )));
            }
            if slots.iter().any(|&slot| slot < exo || slot >= dim) {
                return Err(MpcError::Infeasible(format!(
                    "subsystem {s}: coupled slots must fill the region after the \
                     {exo} exogenous entries"
                )));
            }
        }
        Ok(spec)
    }

    pub fn n_subsystems(&self) -> usize {
        self.exo_dims.len()
    }

    /// Total disturbance arity of subsystem `s`.
    pub fn nu_dim(&self, s: usize) -> usize {
        self.exo_dims[s] + self.slots_for(s).count()
    }

    fn slots_for(&self, s: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (slot, source subsystem, source state index)
        self.entries
            .iter()
            .filter(move |e| e.to == s)
            .flat_map(|e| {
                e.dest_slots
                    .iter()
                    .zip(&e.state_indices)
                    .map(move |(&slot, &idx)| (slot, e.from, idx))
            })
    }

    /// Concatenates the exogenous entries and the selected neighbor state
    /// entries into the total disturbance vector of subsystem `s`.
    pub fn build_disturbance(&self, s: usize, exogenous: &[f64], states: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(
            exogenous.len(),
            self.exo_dims[s],
            "exogenous disturbance arity for subsystem {s}"
        );
        let mut nu = vec![0.0; self.nu_dim(s)];
        nu[..exogenous.len()].copy_from_slice(exogenous);
        for (slot, from, idx) in self.slots_for(s) {
            nu[slot] = states[from][idx];
        }
        nu
    }
}

/// Linear map from a subsystem's total disturbance vector to its model's
/// disturbance inputs (e.g. summing exogenous inflow and a scaled neighbor
/// load into one scalar).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuReducer {
    /// `weights[i]` dotted with the total disturbance gives model input `i`.
    pub weights: Vec<Vec<f64>>,
}

impl NuReducer {
    pub fn identity(dim: usize) -> Self {
        let weights = (0..dim)
            .map(|i| {
                let mut row = vec![0.0; dim];
                row[i] = 1.0;
                row
            })
            .collect();
        Self { weights }
    }

    pub fn reduce(&self, nu: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .map(|row| {
                assert_eq!(row.len(), nu.len(), "reducer arity");
                row.iter().zip(nu).map(|(w, v)| w * v).sum()
            })
            .collect()
    }
}

/// The coupled multi-subsystem predictor used by the centralized solve.
pub struct IntegratedModel<'a> {
    pub subsystems: Vec<&'a SubsystemModel>,
    pub coupling: &'a CouplingSpec,
    pub reducers: &'a [NuReducer],
    pub cost: &'a StepCostSpec,
}

impl IntegratedModel<'_> {
    pub fn n_subsystems(&self) -> usize {
        self.subsystems.len()
    }

    /// Predicted per-subsystem stage costs over the horizon.
    ///
    /// `inputs[s][l]` is subsystem `s`'s input vector at stage `l`;
    /// `exogenous[s][l]` its exogenous disturbance forecast. Couplings are
    /// refreshed from the predicted states at every stage. Predicted counts
    /// are floored at zero.
    pub fn predict_costs(
        &self,
        initial_states: &[Vec<f64>],
        inputs: &[Vec<Vec<f64>>],
        exogenous: &[Vec<Vec<f64>>],
        u_prev: &[Vec<f64>],
    ) -> Vec<Vec<f64>> {
        let n = self.n_subsystems();
        let horizon = inputs[0].len();
        let mut states: Vec<Vec<f64>> = initial_states.to_vec();
        let mut prev: Vec<Vec<f64>> = u_prev.to_vec();
        let mut costs = vec![Vec::with_capacity(horizon); n];
        for l in 0..horizon {
            let disturbances: Vec<Vec<f64>> = (0..n)
                .map(|s| {
                    let nu = self.coupling.build_disturbance(s, &exogenous[s][l], &states);
                    self.reducers[s].reduce(&nu)
                })
                .collect();
            for s in 0..n {
                costs[s].push(self.cost.step_cost_vec(&states[s], &inputs[s][l], &prev[s]));
            }
            for s in 0..n {
                let mut next = self.subsystems[s].step(&states[s], &inputs[s][l], &disturbances[s]);
                for v in &mut next {
                    *v = v.max(0.0);
                }
                states[s] = next;
            }
            for s in 0..n {
                prev[s] = inputs[s][l].clone();
            }
        }
        costs
    }
}

/// Reference to one scalar decision variable: input entry `input` of
/// subsystem `subsystem` at horizon stage `stage`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarRef {
    pub subsystem: usize,
    pub stage: usize,
    pub input: usize,
}

/// Horizon, input bounds, and input constraints of the centralized solve.
///
/// Equality constraints are expressed as variable ties (two inputs share one
/// value) and pins (an input is fixed); both are eliminated from the search
/// space, so returned inputs satisfy them exactly. Bounds are hard-clamped
/// by the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcConfig {
    pub horizon: usize,
    pub bounds: (f64, f64),
    pub ties: Vec<(VarRef, VarRef)>,
    pub pins: Vec<(VarRef, f64)>,
    pub budget: usize,
    pub num_starts: usize,
    pub seed: u64,
}

impl MpcConfig {
    pub fn new(horizon: usize, bounds: (f64, f64)) -> Result<Self, MpcError> {
        if horizon < 3 {
            return Err(MpcError::InvalidConfig(format!(
                "prediction horizon {horizon} is below the minimum of 3"
            )));
        }
        if !(bounds.0 < bounds.1) {
            return Err(MpcError::InvalidConfig("empty input bounds".into()));
        }
        Ok(Self {
            horizon,
            bounds,
            ties: Vec::new(),
            pins: Vec::new(),
            budget: 2_000,
            num_starts: 3,
            seed: 0,
        })
    }
}

/// Optimal local cumulative cost per subsystem at the solver's inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiTargets {
    pub phi: Vec<f64>,
    pub solved_at: u64,
}

#[derive(Debug, Clone)]
pub struct MpcSolution {
    /// `inputs[s][l]` over the horizon.
    pub inputs: Vec<Vec<Vec<f64>>>,
    pub phi: PhiTargets,
    pub objective: f64,
    /// The optimizer ran out of budget before reaching its minimum mesh.
    pub stagnated: bool,
}

struct VarLayout {
    /// representative free-variable index per (s, l, i), or usize::MAX when
    /// pinned
    class_of: Vec<usize>,
    pinned: Vec<Option<f64>>,
    n_free: usize,
    n_subsystems: usize,
    horizon: usize,
    n_inputs: usize,
}

impl VarLayout {
    fn flat(&self, v: VarRef) -> usize {
        (v.stage * self.n_subsystems + v.subsystem) * self.n_inputs + v.input
    }

    fn build(cfg: &MpcConfig, n_subsystems: usize, n_inputs: usize) -> Result<Self, MpcError> {
        let total = cfg.horizon * n_subsystems * n_inputs;
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut layout = Self {
            class_of: vec![0; total],
            pinned: vec![None; total],
            n_free: 0,
            n_subsystems,
            horizon: cfg.horizon,
            n_inputs,
        };
        let check = |v: &VarRef| -> Result<(), MpcError> {
            if v.subsystem >= n_subsystems || v.stage >= cfg.horizon || v.input >= n_inputs {
                return Err(MpcError::InvalidConfig(format!(
                    "constraint references unknown variable {v:?}"
                )));
            }
            Ok(())
        };
        for (a, b) in &cfg.ties {
            check(a)?;
            check(b)?;
            let (ra, rb) = (
                find(&mut parent, layout.flat(*a)),
                find(&mut parent, layout.flat(*b)),
            );
            parent[ra] = rb;
        }
        let mut pin_value: Vec<Option<f64>> = vec![None; total];
        for (v, value) in &cfg.pins {
            check(v)?;
            if !(cfg.bounds.0..=cfg.bounds.1).contains(value) {
                return Err(MpcError::Infeasible(format!(
                    "pin {value} outside bounds {:?}",
                    cfg.bounds
                )));
            }
            let root = find(&mut parent, layout.flat(*v));
            match pin_value[root] {
                Some(existing) if existing != *value => {
                    return Err(MpcError::Infeasible(format!(
                        "conflicting pins {existing} and {value} on one variable class"
                    )));
                }
                _ => pin_value[root] = Some(*value),
            }
        }
        let mut class_index: Vec<Option<usize>> = vec![None; total];
        let mut n_free = 0;
        for flat in 0..total {
            let root = find(&mut parent, flat);
            if let Some(value) = pin_value[root] {
                layout.pinned[flat] = Some(value);
                layout.class_of[flat] = usize::MAX;
            } else {
                let class = *class_index[root].get_or_insert_with(|| {
                    let c = n_free;
                    n_free += 1;
                    c
                });
                layout.class_of[flat] = class;
            }
        }
        layout.n_free = n_free;
        Ok(layout)
    }

    fn expand(&self, free: &[f64]) -> Vec<Vec<Vec<f64>>> {
        (0..self.n_subsystems)
            .map(|s| {
                (0..self.horizon)
                    .map(|l| {
                        (0..self.n_inputs)
                            .map(|i| {
                                let flat = self.flat(VarRef {
                                    subsystem: s,
                                    stage: l,
                                    input: i,
                                });
                                match self.pinned[flat] {
                                    Some(v) => v,
                                    None => free[self.class_of[flat]],
                                }
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Projects a full input grid onto the free variables (first occurrence
    /// wins within a tied class).
    fn project(&self, inputs: &[Vec<Vec<f64>>]) -> Vec<f64> {
        let mut free = vec![f64::NAN; self.n_free];
        for s in 0..self.n_subsystems {
            for l in 0..self.horizon {
                for i in 0..self.n_inputs {
                    let flat = self.flat(VarRef {
                        subsystem: s,
                        stage: l,
                        input: i,
                    });
                    let class = self.class_of[flat];
                    if class != usize::MAX && free[class].is_nan() {
                        free[class] = inputs[s][l][i];
                    }
                }
            }
        }
        free
    }
}

/// Solves the centralized horizon problem: minimize the summed predicted
/// step costs of all subsystems subject to the input constraints and the
/// integrated model. Returns the input grid and the per-subsystem cumulative
/// cost targets at the optimum.
pub fn solve_centralized(
    integrated: &IntegratedModel<'_>,
    cfg: &MpcConfig,
    solved_at: u64,
    initial_states: &[Vec<f64>],
    exogenous: &[Vec<Vec<f64>>],
    u_prev: &[Vec<f64>],
) -> Result<MpcSolution, MpcError> {
    let n = integrated.n_subsystems();
    let n_inputs = integrated.subsystems[0].n_inputs();
    let layout = VarLayout::build(cfg, n, n_inputs)?;

    let objective = |free: &[f64]| -> f64 {
        let inputs = layout.expand(free);
        integrated
            .predict_costs(initial_states, &inputs, exogenous, u_prev)
            .iter()
            .map(|stage_costs| stage_costs.iter().sum::<f64>())
            .sum()
    };

    if layout.n_free == 0 {
        let inputs = layout.expand(&[]);
        let costs = integrated.predict_costs(initial_states, &inputs, exogenous, u_prev);
        let phi: Vec<f64> = costs.iter().map(|c| c.iter().sum()).collect();
        let objective = phi.iter().sum();
        return Ok(MpcSolution {
            inputs,
            phi: PhiTargets { phi, solved_at },
            objective,
            stagnated: false,
        });
    }

    // hold-previous-input incumbent
    let hold: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|s| (0..cfg.horizon).map(|_| u_prev[s].clone()).collect())
        .collect();
    let spec = SearchSpec::new(
        vec![cfg.bounds.0; layout.n_free],
        vec![cfg.bounds.1; layout.n_free],
        cfg.budget,
    )
    .map_err(|e| MpcError::InvalidConfig(e.to_string()))?
    .with_start(layout.project(&hold))
    .with_num_starts(cfg.num_starts)
    .with_seed(cfg.seed);

    let result = minimize(objective, &spec);
    let inputs = layout.expand(&result.point);
    let costs = integrated.predict_costs(initial_states, &inputs, exogenous, u_prev);
    let phi: Vec<f64> = costs.iter().map(|c| c.iter().sum()).collect();
    let objective = phi.iter().sum();
    Ok(MpcSolution {
        inputs,
        phi: PhiTargets { phi, solved_at },
        objective,
        stagnated: result.budget_exhausted,
    })
}

/// Affine map from a simulated model state to the agent's non-cost input
/// features: `features = offset + matrix * state`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub offset: Vec<f64>,
    pub matrix: Vec<Vec<f64>>,
}

impl FeatureMap {
    pub fn apply(&self, state: &[f64]) -> Vec<f64> {
        self.offset
            .iter()
            .zip(&self.matrix)
            .map(|(&o, row)| o + row.iter().zip(state).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }
}

/// Everything needed to re-simulate one subsystem's closed loop over the
/// past tuning window and the upcoming horizon with a candidate consequent
/// vector frozen in the agent.
#[derive(Debug, Clone)]
pub struct ClosedLoopWindow {
    /// Measured state at the start of the past window.
    pub past_initial_state: Vec<f64>,
    /// Reduced model-disturbance inputs per past window step.
    pub past_disturbances: Vec<Vec<f64>>,
    /// Agent feature map per past window step.
    pub past_features: Vec<FeatureMap>,
    /// Input applied just before the window.
    pub u_before: f64,
    /// Cost-average tracker state at the window start.
    pub kappa_initial: KappaState,
    /// Estimated current state (start of the future segment).
    pub current_state: Vec<f64>,
    pub future_disturbances: Vec<Vec<f64>>,
    pub future_features: Vec<FeatureMap>,
    /// Input applied at the step before the future segment.
    pub u_current_prev: f64,
}

/// Optimizer settings for consequent tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOptConfig {
    pub budget: usize,
    pub num_starts: usize,
    pub intercept_bound: f64,
    pub slope_bound: f64,
    pub seed: u64,
}

impl Default for TuneOptConfig {
    fn default() -> Self {
        Self {
            budget: 3_000,
            num_starts: 2,
            intercept_bound: 120.0,
            slope_bound: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub objective_before: f64,
    pub objective_after: f64,
    pub warned: bool,
}

fn rollout_costs(
    agent: &ControlAgent,
    model: &SubsystemModel,
    cost: &StepCostSpec,
    state0: &[f64],
    disturbances: &[Vec<f64>],
    features: &[FeatureMap],
    u_before: f64,
    kappa0: KappaState,
) -> Vec<f64> {
    assert_eq!(model.n_inputs(), 1, "closed-loop tuning drives a scalar input");
    let mut state = state0.to_vec();
    let mut u_prev = u_before;
    let mut kappa = kappa0;
    let mut costs = Vec::with_capacity(disturbances.len());
    for (dist, map) in disturbances.iter().zip(features) {
        let feats = map.apply(&state);
        let inputs = agent.assemble_inputs(&feats, &[], kappa.value());
        let u = agent.decide_pure(&inputs, Some(u_prev));
        let j = cost.step_cost(&state, u, u_prev);
        costs.push(j);
        kappa = kappa.update(j);
        state = model.step(&state, &[u], dist);
        for v in &mut state {
            *v = v.max(0.0);
        }
        u_prev = u;
    }
    costs
}

/// Tunes the agent's consequent coefficients by minimizing the weighted sum
/// of the re-simulated past cumulative cost and the deviation of the
/// re-simulated future cumulative cost from the target `phi`. Without a
/// target (decentralized tuning) only the past term is active.
pub fn tune_consequents(
    agent: &mut ControlAgent,
    model: &SubsystemModel,
    schedule: &TuneSchedule,
    phi: Option<f64>,
    window: &ClosedLoopWindow,
    cost: &StepCostSpec,
    opt: &TuneOptConfig,
) -> TuneOutcome {
    let incumbent = agent.rule_base.consequents_flat();
    let width = agent.rule_base.input_dims() + 1;
    let w_future = if phi.is_some() { schedule.w_future } else { 0.0 };

    let scratch = RefCell::new(agent.clone());
    let objective = |theta: &[f64]| -> f64 {
        let mut candidate = scratch.borrow_mut();
        candidate.rule_base.set_consequents_flat(theta);
        let mut value = 0.0;
        if schedule.w_past > 0.0 && !window.past_disturbances.is_empty() {
            let past: f64 = rollout_costs(
                &candidate,
                model,
                cost,
                &window.past_initial_state,
                &window.past_disturbances,
                &window.past_features,
                window.u_before,
                window.kappa_initial,
            )
            .iter()
            .sum();
            value += schedule.w_past * past;
        }
        if w_future > 0.0 {
            let future: f64 = rollout_costs(
                &candidate,
                model,
                cost,
                &window.current_state,
                &window.future_disturbances,
                &window.future_features,
                window.u_current_prev,
                window.kappa_initial,
            )
            .iter()
            .sum();
            value += w_future * (phi.unwrap() - future).abs();
        }
        value
    };

    let mut lower = Vec::with_capacity(incumbent.len());
    let mut upper = Vec::with_capacity(incumbent.len());
    for (i, &coeff) in incumbent.iter().enumerate() {
        let half = if i % width == 0 {
            opt.intercept_bound
        } else {
            opt.slope_bound
        };
        lower.push((-half).min(coeff));
        upper.push(half.max(coeff));
    }
    let spec = match SearchSpec::new(lower, upper, opt.budget) {
        Ok(s) => s
            .with_start(incumbent.clone())
            .with_num_starts(opt.num_starts)
            .with_seed(opt.seed),
        Err(_) => {
            return TuneOutcome {
                objective_before: f64::INFINITY,
                objective_after: f64::INFINITY,
                warned: true,
            }
        }
    };

    let objective_before = objective(&incumbent);
    let result = minimize(objective, &spec);
    if result.value.is_finite() && result.value <= objective_before {
        agent.rule_base.set_consequents_flat(&result.point);
        TuneOutcome {
            objective_before,
            objective_after: result.value,
            warned: false,
        }
    } else {
        TuneOutcome {
            objective_before,
            objective_after: objective_before,
            warned: true,
        }
    }
}
