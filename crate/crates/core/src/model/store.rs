//! Measurement, control-input, and disturbance bookkeeping for the
//! delayed-measurement protocol.

use super::ModelError;
use std::collections::BTreeMap;

/// Time-indexed state measurements with a reliability flag per entry.
///
/// The set of steps flagged reliable is the set of steps a model may anchor
/// an estimate on; unreliable entries are retained for logging only.
#[derive(Debug, Clone, Default)]
pub struct MeasurementStore {
    entries: BTreeMap<u64, (Vec<f64>, bool)>,
    capacity: Option<usize>,
}

impl MeasurementStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps only the `capacity` most recent entries.
    pub fn with_capacity_window(capacity: usize) -> Self {
        Self {
            entries: BTreeMap::new(),
            capacity: Some(capacity),
        }
    }

    pub fn insert(&mut self, step: u64, state: Vec<f64>, reliable: bool) {
        self.entries.insert(step, (state, reliable));
        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                let oldest = *self.entries.keys().next().unwrap();
                self.entries.remove(&oldest);
            }
        }
    }

    pub fn get(&self, step: u64) -> Option<&(Vec<f64>, bool)> {
        self.entries.get(&step)
    }

    /// State at `step` if a reliable measurement exists there.
    pub fn reliable_state(&self, step: u64) -> Option<&[f64]> {
        match self.entries.get(&step) {
            Some((state, true)) => Some(state),
            _ => None,
        }
    }

    pub fn reliable_steps(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries
            .iter()
            .filter(|(_, (_, reliable))| *reliable)
            .map(|(&step, _)| step)
    }

    pub fn latest_reliable(&self) -> Option<u64> {
        self.reliable_steps().last()
    }

    /// The `(j+1)`-th most recent reliable step strictly before `k`, so
    /// `j = 0` names the freshest measurement older than `k`.
    pub fn pi_recent(&self, k: u64, j: usize) -> Result<u64, ModelError> {
        self.entries
            .range(..k)
            .rev()
            .filter(|(_, (_, reliable))| *reliable)
            .nth(j)
            .map(|(&step, _)| step)
            .ok_or(ModelError::NotEnoughMeasurements {
                step: k,
                detail: format!("no reliable measurement at lookback {j}"),
            })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Stored control inputs and disturbance vectors, indexed by step.
#[derive(Debug, Clone, Default)]
pub struct InputDisturbanceStore {
    inputs: BTreeMap<u64, Vec<f64>>,
    disturbances: BTreeMap<u64, Vec<f64>>,
}

impl InputDisturbanceStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_input(&mut self, step: u64, input: Vec<f64>) {
        self.inputs.insert(step, input);
    }

    pub fn insert_disturbance(&mut self, step: u64, disturbance: Vec<f64>) {
        self.disturbances.insert(step, disturbance);
    }

    pub fn input(&self, step: u64) -> Result<&[f64], ModelError> {
        self.inputs
            .get(&step)
            .map(Vec::as_slice)
            .ok_or(ModelError::NotEnoughMeasurements {
                step,
                detail: "missing stored control input".into(),
            })
    }

    pub fn disturbance(&self, step: u64) -> Result<&[f64], ModelError> {
        self.disturbances
            .get(&step)
            .map(Vec::as_slice)
            .ok_or(ModelError::NotEnoughMeasurements {
                step,
                detail: "missing stored disturbance".into(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with_reliable(steps: &[u64]) -> MeasurementStore {
        let mut store = MeasurementStore::new();
        for &s in steps {
            store.insert(s, vec![s as f64], true);
        }
        store
    }

    #[test]
    fn pi_zero_sticks_to_latest_reliable() {
        // only reliable step before k0..k0+2 is k0-1
        let k0 = 10u64;
        let mut store = store_with_reliable(&[k0 - 1]);
        store.insert(k0, vec![0.0], false);
        store.insert(k0 + 1, vec![0.0], false);
        for k in [k0, k0 + 1, k0 + 2] {
            assert_eq!(store.pi_recent(k, 0).unwrap(), k0 - 1);
        }
    }

    #[test]
    fn pi_lookback_pattern() {
        // reliable at k0-8, k0-5, k0-3: pi_1(k0) = k0-5, pi_2(k0) = k0-8
        let k0 = 20u64;
        let store = store_with_reliable(&[k0 - 8, k0 - 5, k0 - 3]);
        assert_eq!(store.pi_recent(k0, 0).unwrap(), k0 - 3);
        assert_eq!(store.pi_recent(k0, 1).unwrap(), k0 - 5);
        assert_eq!(store.pi_recent(k0, 2).unwrap(), k0 - 8);
        assert!(store.pi_recent(k0, 3).is_err());
    }

    #[test]
    fn pi_every_step_reliable_gives_previous_step() {
        let store = store_with_reliable(&[0, 1, 2, 3, 4, 5]);
        for k in 1..=5 {
            assert_eq!(store.pi_recent(k, 0).unwrap(), k - 1);
        }
    }

    #[test]
    fn pi_is_strictly_before_k() {
        let store = store_with_reliable(&[4]);
        assert!(store.pi_recent(4, 0).is_err());
        assert_eq!(store.pi_recent(5, 0).unwrap(), 4);
    }

    #[test]
    fn pi_monotone_in_lookback() {
        let store = store_with_reliable(&[1, 3, 4, 7, 9, 12]);
        let k = 13;
        let mut prev = store.pi_recent(k, 0).unwrap();
        assert!(prev < k);
        for j in 1..5 {
            let pi = store.pi_recent(k, j).unwrap();
            assert!(pi < prev, "pi_{j} = {pi} must be < pi_{} = {prev}", j - 1);
            prev = pi;
        }
    }

    #[test]
    fn capacity_window_drops_oldest() {
        let mut store = MeasurementStore::with_capacity_window(3);
        for s in 0..6 {
            store.insert(s, vec![s as f64], true);
        }
        assert_eq!(store.len(), 3);
        assert!(store.get(2).is_none());
        assert!(store.get(3).is_some());
    }

    #[test]
    fn missing_store_entries_error() {
        let store = InputDisturbanceStore::new();
        assert!(store.input(3).is_err());
        assert!(store.disturbance(3).is_err());
    }
}
