//! Step costs and the forgetting-factor running average used as cost
//! feedback by the control agents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CostError {
    #[error("forgetting factor {0} outside (0, 1]")]
    InvalidLambda(f64),
    #[error("step cost weights must be nonnegative and not both zero")]
    InvalidWeights,
}

/// Weights of the per-step cost: a vehicle-count term (vehicle-seconds over
/// one control interval) plus a quadratic penalty on green-time changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepCostSpec {
    /// Cost per vehicle per second of the control interval.
    pub vehicle_weight: f64,
    /// Cost per squared second of green-time change.
    pub input_change_weight: f64,
    /// Control interval length in seconds.
    pub control_interval: f64,
}

impl StepCostSpec {
    pub fn new(
        vehicle_weight: f64,
        input_change_weight: f64,
        control_interval: f64,
    ) -> Result<Self, CostError> {
        if vehicle_weight < 0.0
            || input_change_weight < 0.0
            || (vehicle_weight == 0.0 && input_change_weight == 0.0)
        {
            return Err(CostError::InvalidWeights);
        }
        Ok(Self {
            vehicle_weight,
            input_change_weight,
            control_interval,
        })
    }

    /// Realized cost of one control step: vehicle counts held over the
    /// interval plus the squared input change. `u_prev` is 0 before the
    /// first step.
    pub fn step_cost(&self, state: &[f64], u: f64, u_prev: f64) -> f64 {
        let total: f64 = state
            .iter()
            .map(|&n| {
                assert!(n >= 0.0, "negative vehicle count {n}");
                n
            })
            .sum();
        self.vehicle_weight * total * self.control_interval
            + self.input_change_weight * (u - u_prev).powi(2)
    }

    /// Vector-input variant: the change penalty sums over input entries.
    pub fn step_cost_vec(&self, state: &[f64], u: &[f64], u_prev: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), u_prev.len());
        let total: f64 = state
            .iter()
            .map(|&n| {
                assert!(n >= 0.0, "negative vehicle count {n}");
                n
            })
            .sum();
        let change: f64 = u
            .iter()
            .zip(u_prev)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        self.vehicle_weight * total * self.control_interval + self.input_change_weight * change
    }
}

impl Default for StepCostSpec {
    fn default() -> Self {
        Self {
            vehicle_weight: 1.0,
            input_change_weight: 0.1,
            control_interval: 90.0,
        }
    }
}

/// Running average of step costs with a forgetting factor.
///
/// The recursion stores only the previous average and the step counter; it
/// reproduces the direct weighted sum over the full history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaState {
    kappa: f64,
    k: i64,
    lambda: f64,
}

impl KappaState {
    /// Uninitialized tracker (counter at -1); the first update returns the
    /// plain step cost.
    pub fn new(lambda: f64) -> Result<Self, CostError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(CostError::InvalidLambda(lambda));
        }
        Ok(Self {
            kappa: 0.0,
            k: -1,
            lambda,
        })
    }

    pub fn value(&self) -> f64 {
        self.kappa
    }

    pub fn step(&self) -> i64 {
        self.k
    }

    /// Folds one realized step cost into the average.
    pub fn update(&self, step_cost: f64) -> Self {
        let k = self.k + 1;
        let kf = k as f64;
        let kappa = (kf * self.lambda / (kf + 1.0)) * self.kappa + step_cost / (kf + 1.0);
        Self { kappa, k, ..*self }
    }
}

/// Direct evaluation of the forgetting-factor average over a full history:
/// `(1/(k+1)) * sum_l lambda^(k-l) * J(l)`. Brute-force reference for the
/// recursive update.
pub fn kappa_direct(history: &[f64], lambda: f64) -> f64 {
    assert!(!history.is_empty(), "kappa_direct needs a non-empty history");
    let k = history.len() - 1;
    let sum: f64 = history
        .iter()
        .enumerate()
        .map(|(l, &j)| lambda.powi((k - l) as i32) * j)
        .sum();
    sum / (k + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_update_returns_step_cost() {
        let state = KappaState::new(0.42).unwrap().update(7.5);
        assert_eq!(state.value(), 7.5);
        assert_eq!(state.step(), 0);
    }

    #[test]
    fn second_update_matches_direct_sum() {
        // direct oracle: (1/2) * (0.5 * 2 + 4) = 2.5
        let mut state = KappaState::new(0.5).unwrap();
        state = state.update(2.0);
        state = state.update(4.0);
        assert_abs_diff_eq!(state.value(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(kappa_direct(&[2.0, 4.0], 0.5), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn lambda_one_gives_arithmetic_mean() {
        let history = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let mean = history.iter().sum::<f64>() / history.len() as f64;
        assert_abs_diff_eq!(kappa_direct(&history, 1.0), mean, epsilon = 1e-12);
        let mut state = KappaState::new(1.0).unwrap();
        for &j in &history {
            state = state.update(j);
        }
        assert_abs_diff_eq!(state.value(), mean, epsilon = 1e-12);
    }

    #[test]
    fn constant_history_with_lambda_one_stays_constant() {
        let mut state = KappaState::new(1.0).unwrap();
        for _ in 0..50 {
            state = state.update(3.25);
        }
        assert_abs_diff_eq!(state.value(), 3.25, epsilon = 1e-12);
    }

    #[test]
    fn recursion_matches_direct_over_random_histories() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for case in 0..1000 {
            let lambda = [0.3, 0.9, 1.0][case % 3];
            let len = rng.random_range(1..=200);
            let history: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..50.0)).collect();
            let mut state = KappaState::new(lambda).unwrap();
            for &j in &history {
                state = state.update(j);
            }
            let direct = kappa_direct(&history, lambda);
            let tol = 1e-9 * (1.0 + direct.abs());
            assert!(
                (state.value() - direct).abs() <= tol,
                "case {case}: recursive {} vs direct {direct}",
                state.value()
            );
        }
    }

    #[test]
    fn kappa_nonnegative_for_nonnegative_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = KappaState::new(0.7).unwrap();
        for _ in 0..300 {
            state = state.update(rng.random_range(0.0..10.0));
            assert!(state.value() >= 0.0);
        }
    }

    #[test]
    fn step_cost_zero_state_zero_change() {
        let spec = StepCostSpec::default();
        assert_eq!(spec.step_cost(&[], 45.0, 45.0), 0.0);
    }

    #[test]
    fn step_cost_vehicle_term_oracle() {
        // 1.0 * 12 vehicles * 90 s = 1080
        let spec = StepCostSpec::new(1.0, 0.0, 90.0).unwrap();
        assert_eq!(spec.step_cost(&[5.0, 7.0], 30.0, 60.0), 1080.0);
    }

    #[test]
    fn step_cost_input_change_oracle() {
        // 1.0 * (u - u_prev)^2 = 25
        let spec = StepCostSpec::new(0.0, 1.0, 90.0).unwrap();
        assert_eq!(spec.step_cost(&[0.0], 50.0, 45.0), 25.0);
    }

    #[test]
    #[should_panic(expected = "negative vehicle count")]
    fn step_cost_rejects_negative_counts() {
        StepCostSpec::default().step_cost(&[-1.0], 45.0, 45.0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(KappaState::new(0.0).is_err());
        assert!(KappaState::new(1.5).is_err());
        assert!(StepCostSpec::new(0.0, 0.0, 90.0).is_err());
        assert!(StepCostSpec::new(-1.0, 0.5, 90.0).is_err());
    }
}
