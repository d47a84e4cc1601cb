//! Scenario execution: steps the plant, applies control decisions at cycle
//! boundaries, and collects per-cycle measurements and travel-time totals.

use super::engine::{GippsParams, SignalState, SimState};
use super::{Scenario, TrafficNetwork, N_LANES};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Snapshot handed to the control policy at a cycle boundary.
#[derive(Debug, Clone)]
pub struct NetworkView {
    /// Control step counter (cycle index).
    pub k: u64,
    pub time: f64,
    /// Vehicles per lane, virtual buffers included.
    pub lane_n: [f64; N_LANES],
    /// Queued vehicles per lane.
    pub lane_q: [f64; N_LANES],
    /// Vehicles that arrived on each lane during the previous cycle
    /// (spawns for sources, entries for connecting lanes).
    pub last_cycle_inflow: [f64; N_LANES],
}

/// Decides the north/south green times `[u_L, u_R]` for the upcoming cycle.
pub trait ControlPolicy {
    fn decide(&mut self, view: &NetworkView) -> [f64; 2];
}

/// Constant green split.
pub struct FixedTimePolicy {
    pub u: [f64; 2],
}

impl ControlPolicy for FixedTimePolicy {
    fn decide(&mut self, _view: &NetworkView) -> [f64; 2] {
        self.u
    }
}

/// Per-cycle log row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub k: u64,
    pub t: f64,
    pub lane_n: Vec<f64>,
    pub lane_q: Vec<f64>,
    pub inflow: Vec<f64>,
    pub u: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub ttt_min: f64,
    pub entered: u64,
    pub exited: u64,
    pub cycles: Vec<CycleRecord>,
}

fn build_view(sim: &mut SimState, k: u64) -> NetworkView {
    let mut lane_n = [0.0; N_LANES];
    let mut lane_q = [0.0; N_LANES];
    for lane in 0..N_LANES {
        let (n, q) = sim.measure(lane);
        lane_n[lane] = n;
        lane_q[lane] = q;
    }
    let inflow = sim.take_inflows();
    let mut last_cycle_inflow = [0.0; N_LANES];
    for (dst, src) in last_cycle_inflow.iter_mut().zip(inflow) {
        *dst = src as f64;
    }
    NetworkView {
        k,
        time: sim.time,
        lane_n,
        lane_q,
        last_cycle_inflow,
    }
}

/// Runs one seeded repetition of a scenario under the given policy.
///
/// Control decisions are applied at cycle boundaries; the travel-time total
/// counts vehicles still inside (or buffered) up to the end time. The run is
/// a pure function of `(network, params, scenario, seed, policy)`.
pub fn run_scenario(
    network: &TrafficNetwork,
    params: &GippsParams,
    scenario: &Scenario,
    seed: u64,
    policy: &mut dyn ControlPolicy,
) -> RunResult {
    scenario.validate().expect("valid scenario");
    let mut sim = SimState::new(
        network.clone(),
        *params,
        ChaCha8Rng::seed_from_u64(seed),
    );
    let steps_per_cycle = (network.cycle / params.dt).round() as u64;
    let total_steps = (scenario.duration / params.dt).round() as u64;
    let mut cycles = Vec::new();
    let mut k = 0u64;
    for step_idx in 0..total_steps {
        if step_idx % steps_per_cycle == 0 {
            let view = build_view(&mut sim, k);
            let u = policy.decide(&view);
            for (inter, green) in u.iter().enumerate() {
                assert!(
                    (0.0..=network.cycle).contains(green),
                    "green time {green} for intersection {inter} outside the cycle"
                );
            }
            sim.signals = SignalState { u };
            cycles.push(CycleRecord {
                k,
                t: view.time,
                lane_n: view.lane_n.to_vec(),
                lane_q: view.lane_q.to_vec(),
                inflow: view.last_cycle_inflow.to_vec(),
                u,
            });
            k += 1;
        }
        sim.step(scenario);
    }
    // closing record at the end time
    let view = build_view(&mut sim, k);
    cycles.push(CycleRecord {
        k,
        t: view.time,
        lane_n: view.lane_n.to_vec(),
        lane_q: view.lane_q.to_vec(),
        inflow: view.last_cycle_inflow.to_vec(),
        u: sim.signals.u,
    });
    RunResult {
        ttt_min: sim.total_travel_time_min(),
        entered: sim.entered,
        exited: sim.exited,
        cycles,
    }
}
