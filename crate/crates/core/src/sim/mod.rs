//! The plant: a two-intersection signalized road network with car-following
//! dynamics, stochastic inflows, and travel-time metrics.
//!
//! Intersection L sits west of intersection R. Lanes `1L..7L` belong to
//! subnetwork 0, lanes `1R..7R` to subnetwork 1. Lanes numbered 1..6 are
//! side lanes (sources and sinks); lane 7 of each side is the connecting
//! lane between the intersections (`7R` carries L-to-R traffic, `7L` the
//! reverse). Turning is allowed everywhere except U-turns.

mod engine;
mod run;

pub use engine::{GippsParams, SimState, Vehicle};
pub use run::{
    run_scenario, ControlPolicy, CycleRecord, FixedTimePolicy, NetworkView, RunResult,
};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Effective vehicle length including front/back safety margins, in meters.
pub const VEHICLE_LEN: f64 = 7.5;

pub const N_LANES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneKind {
    Source,
    Sink,
    Connecting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Intersection {
    L,
    R,
}

/// Signal group an entrance lane belongs to. The north/south entrances of an
/// intersection are synchronized, as are the east/west ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseGroup {
    NorthSouth,
    EastWest,
}

#[derive(Debug, Clone)]
pub struct LaneDef {
    pub name: &'static str,
    pub length: f64,
    pub kind: LaneKind,
    pub subnetwork: usize,
    /// Intersection this lane feeds into, for entrance lanes.
    pub feeds: Option<Intersection>,
    pub phase: Option<PhaseGroup>,
}

impl LaneDef {
    pub fn capacity(&self) -> usize {
        (self.length / VEHICLE_LEN).floor() as usize
    }
}

pub mod lane {
    //! Lane indices. Sources and sinks are 150 m, connecting lanes 300 m.
    pub const L1: usize = 0;
    pub const L2: usize = 1;
    pub const L3: usize = 2;
    pub const L4: usize = 3;
    pub const L5: usize = 4;
    pub const L6: usize = 5;
    pub const L7: usize = 6;
    pub const R1: usize = 7;
    pub const R2: usize = 8;
    pub const R3: usize = 9;
    pub const R4: usize = 10;
    pub const R5: usize = 11;
    pub const R6: usize = 12;
    pub const R7: usize = 13;
}

pub const SOURCE_LANES: [usize; 6] = [lane::L1, lane::L2, lane::L3, lane::R1, lane::R2, lane::R3];

fn lane_table() -> Vec<LaneDef> {
    use lane::*;
    use Intersection::*;
    use LaneKind::*;
    use PhaseGroup::*;
    let def = |name, length, kind, subnetwork, feeds, phase| LaneDef {
        name,
        length,
        kind,
        subnetwork,
        feeds,
        phase,
    };
    let mut lanes = vec![def("1L", 150.0, Source, 0, Some(L), Some(EastWest)); N_LANES];
    lanes[L1] = def("1L", 150.0, Source, 0, Some(L), Some(EastWest));
    lanes[L2] = def("2L", 150.0, Source, 0, Some(L), Some(NorthSouth));
    lanes[L3] = def("3L", 150.0, Source, 0, Some(L), Some(NorthSouth));
    lanes[L4] = def("4L", 150.0, Sink, 0, None, None);
    lanes[L5] = def("5L", 150.0, Sink, 0, None, None);
    lanes[L6] = def("6L", 150.0, Sink, 0, None, None);
    lanes[L7] = def("7L", 300.0, Connecting, 0, Some(L), Some(EastWest));
    lanes[R1] = def("1R", 150.0, Source, 1, Some(R), Some(EastWest));
    lanes[R2] = def("2R", 150.0, Source, 1, Some(R), Some(NorthSouth));
    lanes[R3] = def("3R", 150.0, Source, 1, Some(R), Some(NorthSouth));
    lanes[R4] = def("4R", 150.0, Sink, 1, None, None);
    lanes[R5] = def("5R", 150.0, Sink, 1, None, None);
    lanes[R6] = def("6R", 150.0, Sink, 1, None, None);
    lanes[R7] = def("7R", 300.0, Connecting, 1, Some(R), Some(EastWest));
    lanes
}

/// Legal movements per entrance lane (everything except the U-turn).
fn legal_turns() -> BTreeMap<usize, Vec<usize>> {
    use lane::*;
    let mut turns = BTreeMap::new();
    turns.insert(L1, vec![R7, L5, L6]); // eastbound through L
    turns.insert(L2, vec![L6, L4, R7]); // southbound
    turns.insert(L3, vec![L5, L4, R7]); // northbound
    turns.insert(L7, vec![L4, L5, L6]); // westbound through L
    turns.insert(R1, vec![L7, R5, R6]); // westbound through R
    turns.insert(R2, vec![R6, R4, L7]); // southbound
    turns.insert(R3, vec![R5, R4, L7]); // northbound
    turns.insert(R7, vec![R4, R5, R6]); // eastbound through R
    turns
}

/// The two-intersection network with its turning probabilities and signal
/// timing constants.
#[derive(Debug, Clone)]
pub struct TrafficNetwork {
    pub lanes: Vec<LaneDef>,
    /// Per entrance lane: `(exit lane, probability)` rows summing to one.
    pub turning: BTreeMap<usize, Vec<(usize, f64)>>,
    pub cycle: f64,
    /// All-red interval inserted at the north/south-to-east/west switch.
    pub lost_time: f64,
}

impl TrafficNetwork {
    /// The default network: uniform turning over legal movements, 90 s
    /// cycle, no lost time.
    pub fn two_intersection() -> Self {
        let turning = legal_turns()
            .into_iter()
            .map(|(from, exits)| {
                let p = 1.0 / exits.len() as f64;
                (from, exits.into_iter().map(|e| (e, p)).collect())
            })
            .collect();
        Self {
            lanes: lane_table(),
            turning,
            cycle: 90.0,
            lost_time: 0.0,
        }
    }

    pub fn with_turning(mut self, turning: BTreeMap<usize, Vec<(usize, f64)>>) -> Self {
        for (from, rows) in &turning {
            let legal = &legal_turns()[from];
            let total: f64 = rows.iter().map(|(_, p)| p).sum();
            assert!(
                (total - 1.0).abs() < 1e-9,
                "turning probabilities for {} must sum to 1",
                self.lanes[*from].name
            );
            for (to, _) in rows {
                assert!(
                    legal.contains(to),
                    "illegal movement {} -> {}",
                    self.lanes[*from].name,
                    self.lanes[*to].name
                );
            }
        }
        self.turning = turning;
        self
    }

    pub fn lane_index(&self, name: &str) -> Option<usize> {
        self.lanes.iter().position(|l| l.name == name)
    }

    /// Signal phase of an entrance lane at `t_in_cycle` given the
    /// north/south green time `u` of its intersection: north/south green on
    /// `[0, u)`, all-red on `[u, u + lost)`, east/west green afterwards.
    pub fn is_green(&self, lane: usize, u: f64, t_in_cycle: f64) -> bool {
        match self.lanes[lane].phase {
            Some(PhaseGroup::NorthSouth) => t_in_cycle < u,
            Some(PhaseGroup::EastWest) => t_in_cycle >= u + self.lost_time,
            None => false,
        }
    }

    /// Lanes whose vehicle counts drive the demand of a signal group, per
    /// the case-study wiring: the north/south green of L reacts to `2L` and
    /// `3L`, its east/west counterpart to `1L` and `7L`; mirrored for R.
    pub fn influencing_lanes(&self, inter: Intersection, group: PhaseGroup) -> [usize; 2] {
        use lane::*;
        match (inter, group) {
            (Intersection::L, PhaseGroup::NorthSouth) => [L2, L3],
            (Intersection::L, PhaseGroup::EastWest) => [L1, L7],
            (Intersection::R, PhaseGroup::NorthSouth) => [R2, R3],
            (Intersection::R, PhaseGroup::EastWest) => [R1, R7],
        }
    }

    pub fn subnetwork_lanes(&self, subnetwork: usize) -> impl Iterator<Item = usize> + '_ {
        self.lanes
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.subnetwork == subnetwork)
            .map(|(i, _)| i)
    }
}

/// Piecewise-constant inflow rate for one source lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflowProfile {
    pub lane: String,
    /// `(start time s, rate veh/s)`, sorted by start time; the first segment
    /// must start at 0.
    pub segments: Vec<(f64, f64)>,
}

impl InflowProfile {
    pub fn constant(lane: &str, rate: f64) -> Self {
        Self {
            lane: lane.into(),
            segments: vec![(0.0, rate)],
        }
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map(|(_, rate)| *rate)
            .unwrap_or(0.0)
    }
}

/// One experiment scenario: demand profiles, duration, and seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub duration: f64,
    pub inflows: Vec<InflowProfile>,
    pub seed: u64,
    pub repetitions: usize,
}

impl Scenario {
    pub fn rate_for(&self, lane_name: &str, t: f64) -> f64 {
        self.inflows
            .iter()
            .find(|p| p.lane == lane_name)
            .map(|p| p.rate_at(t))
            .unwrap_or(0.0)
    }

    /// RNG seed of one repetition.
    pub fn rep_seed(&self, repetition: usize) -> u64 {
        self.seed ^ (repetition as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.duration <= 0.0 {
            return Err("scenario duration must be positive".into());
        }
        for profile in &self.inflows {
            if profile.segments.is_empty() {
                return Err(format!("inflow profile for {} is empty", profile.lane));
            }
            if profile.segments.iter().any(|(_, r)| *r < 0.0) {
                return Err(format!("negative inflow rate on {}", profile.lane));
            }
        }
        Ok(())
    }
}
