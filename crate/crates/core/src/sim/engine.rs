//! Vehicle state and the synchronous car-following update.
//!
//! Speeds follow the classic two-term law: an acceleration-limited free
//! term and a safe-braking term with respect to the leader (or the stop
//! line under red), evaluated from the previous step's positions with the
//! reaction time equal to the step length.

use super::{LaneKind, Scenario, TrafficNetwork, N_LANES, VEHICLE_LEN};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Driver and vehicle dynamics constants. The step length doubles as the
/// driver reaction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GippsParams {
    /// Simulation step and reaction time, s.
    pub dt: f64,
    /// Maximum acceleration, m/s^2.
    pub accel_max: f64,
    /// Comfortable deceleration, m/s^2 (negative).
    pub decel: f64,
    /// Assumed leader deceleration, m/s^2 (negative, at least as strong as
    /// `decel` so followers keep safe headways).
    pub leader_decel_est: f64,
    /// Desired speed, m/s.
    pub desired_speed: f64,
}

impl Default for GippsParams {
    fn default() -> Self {
        Self {
            dt: 0.5,
            accel_max: 1.7,
            decel: -3.0,
            leader_decel_est: -3.5,
            desired_speed: 14.0,
        }
    }
}

impl GippsParams {
    /// Acceleration-limited free-flow speed for the next step.
    pub fn free_speed(&self, v: f64) -> f64 {
        let ratio = (v / self.desired_speed).min(1.0);
        v + 2.5 * self.accel_max * self.dt * (1.0 - ratio) * (0.025 + ratio).sqrt()
    }

    /// Safe speed with respect to an obstruction `headway` meters ahead
    /// moving at `v_leader` (0 for a stop line).
    pub fn safe_speed(&self, v: f64, headway: f64, v_leader: f64) -> f64 {
        let b = self.decel;
        let bt = b * self.dt;
        let arg = bt * bt - b * (2.0 * headway - v * self.dt - v_leader * v_leader / self.leader_decel_est);
        if arg <= 0.0 {
            return 0.0;
        }
        (bt + arg.sqrt()).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u64,
    /// Front-bumper distance from the lane start, m.
    pub pos: f64,
    pub speed: f64,
    /// Time the vehicle arrived at the network (buffer wait included).
    pub entry_time: f64,
    /// Remaining exit lanes, in crossing order.
    pub route: Vec<usize>,
}

/// A vehicle waiting upstream of a full source lane.
#[derive(Debug, Clone)]
struct Buffered {
    id: u64,
    entry_time: f64,
    route: Vec<usize>,
}

/// Signal state: north/south green time per intersection, applied over the
/// current cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalState {
    pub u: [f64; 2],
}

/// Full mutable simulation state for one run.
pub struct SimState {
    pub network: TrafficNetwork,
    pub params: GippsParams,
    pub time: f64,
    pub signals: SignalState,
    /// Per lane, ordered front (largest position) first.
    lanes: Vec<VecDeque<Vehicle>>,
    buffers: Vec<VecDeque<Buffered>>,
    rng: ChaCha8Rng,
    next_id: u64,
    // conservation counters
    pub entered: u64,
    pub exited: u64,
    /// Sum of completed travel times, s.
    pub travel_time_done: f64,
    /// Vehicles arrived per lane since the counter was last taken
    /// (spawns for sources, entries for connecting lanes).
    inflow_count: [u64; N_LANES],
}

impl SimState {
    pub fn new(network: TrafficNetwork, params: GippsParams, rng: ChaCha8Rng) -> Self {
        let n = network.lanes.len();
        Self {
            network,
            params,
            time: 0.0,
            signals: SignalState { u: [45.0, 45.0] },
            lanes: vec![VecDeque::new(); n],
            buffers: vec![VecDeque::new(); n],
            rng,
            next_id: 0,
            entered: 0,
            exited: 0,
            travel_time_done: 0.0,
            inflow_count: [0; N_LANES],
        }
    }

    pub fn vehicles_on(&self, lane: usize) -> &VecDeque<Vehicle> {
        &self.lanes[lane]
    }

    pub fn buffer_len(&self, lane: usize) -> usize {
        self.buffers[lane].len()
    }

    /// `(n, q)` for one lane: total vehicles including the virtual buffer,
    /// and vehicles at crawl speed (below 0.5 m/s; buffered vehicles are
    /// standing still and count as queued).
    pub fn measure(&self, lane: usize) -> (f64, f64) {
        let buffered = self.buffers[lane].len() as f64;
        let n = self.lanes[lane].len() as f64 + buffered;
        let q = self.lanes[lane]
            .iter()
            .filter(|v| v.speed < 0.5)
            .count() as f64
            + buffered;
        (n, q)
    }

    /// `(n, q)` aggregated over one subnetwork.
    pub fn measure_subnetwork(&self, subnetwork: usize) -> (f64, f64) {
        let mut n = 0.0;
        let mut q = 0.0;
        for lane in self.network.subnetwork_lanes(subnetwork) {
            let (ln, lq) = self.measure(lane);
            n += ln;
            q += lq;
        }
        (n, q)
    }

    /// Takes and resets the per-lane inflow counters.
    pub fn take_inflows(&mut self) -> [u64; N_LANES] {
        std::mem::replace(&mut self.inflow_count, [0; N_LANES])
    }

    /// Vehicles currently tracked (on lanes plus buffered).
    pub fn population(&self) -> u64 {
        let on_lanes: usize = self.lanes.iter().map(VecDeque::len).sum();
        let buffered: usize = self.buffers.iter().map(VecDeque::len).sum();
        (on_lanes + buffered) as u64
    }

    /// Travel time in minutes accumulated so far, counting vehicles still in
    /// the network up to the current time.
    pub fn total_travel_time_min(&self) -> f64 {
        let mut total = self.travel_time_done;
        for lane in &self.lanes {
            for v in lane {
                total += self.time - v.entry_time;
            }
        }
        for buffer in &self.buffers {
            for v in buffer {
                total += self.time - v.entry_time;
            }
        }
        total / 60.0
    }

    fn draw_route(&mut self, source: usize) -> Vec<usize> {
        let mut route = Vec::with_capacity(2);
        let mut from = source;
        loop {
            let rows = &self.network.turning[&from];
            let draw: f64 = self.rng.random_range(0.0..1.0);
            let mut acc = 0.0;
            let mut chosen = rows[rows.len() - 1].0;
            for &(to, p) in rows {
                acc += p;
                if draw < acc {
                    chosen = to;
                    break;
                }
            }
            route.push(chosen);
            if self.network.lanes[chosen].kind != LaneKind::Connecting {
                break;
            }
            from = chosen;
        }
        route
    }

    /// Poisson arrivals at every source for one step.
    pub fn spawn_vehicles(&mut self, scenario: &Scenario) {
        for lane in super::SOURCE_LANES {
            let rate = scenario.rate_for(self.network.lanes[lane].name, self.time);
            if rate <= 0.0 {
                continue;
            }
            let draw = Poisson::new(rate * self.params.dt)
                .expect("positive arrival rate")
                .sample(&mut self.rng);
            for _ in 0..draw as u64 {
                let id = self.next_id;
                self.next_id += 1;
                let route = self.draw_route(lane);
                self.buffers[lane].push_back(Buffered {
                    id,
                    entry_time: self.time,
                    route,
                });
                self.entered += 1;
                self.inflow_count[lane] += 1;
            }
        }
    }

    /// Moves buffered vehicles onto their source lanes where the entry is
    /// clear. Entry speed is capped so the newcomer can stop behind the
    /// last vehicle.
    fn release_buffers(&mut self) {
        for lane in super::SOURCE_LANES {
            while let Some(waiting) = self.buffers[lane].front() {
                let clear = match self.lanes[lane].back() {
                    None => true,
                    Some(last) => last.pos >= VEHICLE_LEN,
                };
                if !clear {
                    break;
                }
                let speed = match self.lanes[lane].back() {
                    None => self.params.desired_speed,
                    Some(last) => {
                        let gap = (last.pos - VEHICLE_LEN).max(0.0);
                        (2.0 * -self.params.decel * gap)
                            .sqrt()
                            .min(self.params.desired_speed)
                    }
                };
                let waiting = self.buffers[lane].pop_front().expect("checked non-empty");
                self.lanes[lane].push_back(Vehicle {
                    id: waiting.id,
                    pos: 0.0,
                    speed,
                    entry_time: waiting.entry_time,
                    route: waiting.route,
                });
            }
        }
    }

    fn green(&self, lane: usize) -> bool {
        let inter = match self.network.lanes[lane].feeds {
            Some(super::Intersection::L) => 0,
            Some(super::Intersection::R) => 1,
            None => return false,
        };
        let t_in_cycle = self.time % self.network.cycle;
        self.network.is_green(lane, self.signals.u[inter], t_in_cycle)
    }

    /// Obstruction ahead of the lane's front vehicle: `(headway, leader
    /// speed)`, or `None` on a free run off the lane end.
    fn front_obstruction(&self, lane: usize, vehicle: &Vehicle) -> Option<(f64, f64)> {
        let def = &self.network.lanes[lane];
        let to_line = def.length - vehicle.pos;
        match def.kind {
            LaneKind::Sink => None,
            _ => {
                if !self.green(lane) {
                    return Some((to_line, 0.0));
                }
                let target = *vehicle.route.first().expect("entrance vehicle has a route");
                match self.lanes[target].back() {
                    Some(last) => Some((to_line + last.pos - VEHICLE_LEN, last.speed)),
                    None => None,
                }
            }
        }
    }

    /// One synchronous car-following step followed by lane transfers,
    /// buffer releases, and spawns.
    pub fn step(&mut self, scenario: &Scenario) {
        let p = self.params;
        // next speeds from the current snapshot
        let mut next: Vec<Vec<(f64, f64)>> = Vec::with_capacity(self.lanes.len());
        for (lane, vehicles) in self.lanes.iter().enumerate() {
            let mut updated = Vec::with_capacity(vehicles.len());
            for (i, vehicle) in vehicles.iter().enumerate() {
                let obstruction = if i == 0 {
                    self.front_obstruction(lane, vehicle)
                } else {
                    let leader = &vehicles[i - 1];
                    Some((leader.pos - VEHICLE_LEN - vehicle.pos, leader.speed))
                };
                let mut v_next = p.free_speed(vehicle.speed).min(p.desired_speed);
                if let Some((headway, v_leader)) = obstruction {
                    v_next = v_next.min(p.safe_speed(vehicle.speed, headway, v_leader));
                }
                let pos = vehicle.pos + 0.5 * (vehicle.speed + v_next) * p.dt;
                updated.push((v_next, pos));
            }
            next.push(updated);
        }
        for (lane, vehicles) in self.lanes.iter_mut().enumerate() {
            for (i, vehicle) in vehicles.iter_mut().enumerate() {
                let (v, pos) = next[lane][i];
                vehicle.speed = v;
                vehicle.pos = pos;
            }
        }

        // sink departures and intersection crossings, in fixed lane order
        for lane in 0..self.lanes.len() {
            loop {
                let def = &self.network.lanes[lane];
                let Some(front) = self.lanes[lane].front() else {
                    break;
                };
                if front.pos < def.length {
                    break;
                }
                match def.kind {
                    LaneKind::Sink => {
                        let done = self.lanes[lane].pop_front().expect("checked non-empty");
                        self.exited += 1;
                        self.travel_time_done += self.time + p.dt - done.entry_time;
                    }
                    _ => {
                        debug_assert!(self.green(lane), "crossing requires green");
                        let mut crossing = self.lanes[lane].pop_front().expect("checked non-empty");
                        let target = crossing.route.remove(0);
                        crossing.pos -= def.length;
                        debug_assert!(
                            self.lanes[target]
                                .back()
                                .map_or(true, |last| last.pos - crossing.pos >= VEHICLE_LEN - 1e-6),
                            "crossing into occupied space"
                        );
                        self.lanes[target].push_back(crossing);
                        self.inflow_count[target] += 1;
                    }
                }
            }
        }

        self.release_buffers();
        self.time += p.dt;
        self.spawn_vehicles(scenario);
        debug_assert!(self.check_conservation());
    }

    /// Entered vehicles are all accounted for: exited plus present plus
    /// buffered.
    pub fn check_conservation(&self) -> bool {
        self.entered == self.exited + self.population()
    }

    /// Same-lane spacing of at least one vehicle length, everywhere.
    pub fn check_spacing(&self) -> bool {
        self.lanes.iter().all(|vehicles| {
            vehicles
                .iter()
                .zip(vehicles.iter().skip(1))
                .all(|(lead, follow)| lead.pos - follow.pos >= VEHICLE_LEN - 1e-6)
        })
    }

    /// Pushes a vehicle directly onto a lane. Test scaffolding.
    #[cfg(test)]
    pub fn inject(&mut self, lane: usize, pos: f64, speed: f64, route: Vec<usize>) {
        let id = self.next_id;
        self.next_id += 1;
        let vehicle = Vehicle {
            id,
            pos,
            speed,
            entry_time: self.time,
            route,
        };
        let insert_at = self.lanes[lane]
            .iter()
            .position(|v| v.pos < pos)
            .unwrap_or(self.lanes[lane].len());
        self.lanes[lane].insert(insert_at, vehicle);
        self.entered += 1;
    }
}
