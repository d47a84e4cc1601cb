//! Consequent identification, antecedent updates, and validation errors.

use super::{
    InputDisturbanceStore, MeasurementStore, ModelClass, ModelError, SubsystemModel,
};
use crate::fuzzy::{self, FuzzyError};
use crate::optim::{minimize, SearchSpec};
use super::IdentificationConfig;
use std::cell::RefCell;

/// Result of one identification run for one state variable.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifyOutcome {
    pub var: usize,
    pub objective_before: f64,
    pub objective_after: f64,
    /// The optimizer could not produce a finite objective; the incumbent
    /// coefficients were kept.
    pub warned: bool,
}

/// The most recent `window_len` identification events, oldest first.
pub fn identification_window(id_steps: &[u64], window_len: usize) -> Vec<u64> {
    let start = id_steps.len().saturating_sub(window_len);
    id_steps[start..].to_vec()
}

/// Cumulative squared estimation error of variable `var` over the window,
/// with the candidate consequents held fixed at every window step. Squared
/// residuals keep the objective smooth, which coordinate polling needs to
/// make progress near the optimum.
fn window_objective(
    model: &SubsystemModel,
    var: usize,
    measurements: &MeasurementStore,
    stores: &InputDisturbanceStore,
    window: &[u64],
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for &l in window {
        let measured = measurements
            .reliable_state(l)
            .ok_or(ModelError::NotEnoughMeasurements {
                step: l,
                detail: "window step has no reliable measurement".into(),
            })?;
        let estimate = model.estimate_state(measurements, stores, l)?;
        total += (measured[var] - estimate[var]).powi(2);
    }
    Ok(total)
}

/// One window data point with the consequent-independent part precomputed.
struct PreparedPoint {
    /// Effective normalized rule weights at this point's inputs.
    weights: Vec<f64>,
    /// Regressor `[1, x, u..., nu...]`.
    regressor: Vec<f64>,
    target: f64,
}

/// Precomputes effective rule weights per window step. Only valid when every
/// window step anchors on its immediate predecessor: then the antecedent
/// inputs are measured data, independent of the candidate consequents.
fn prepare_points(
    model: &SubsystemModel,
    var: usize,
    measurements: &MeasurementStore,
    stores: &InputDisturbanceStore,
    window: &[u64],
) -> Result<Option<Vec<PreparedPoint>>, ModelError> {
    let mut points = Vec::with_capacity(window.len());
    for &l in window {
        if measurements.pi_recent(l, 0)? != l - 1 {
            return Ok(None);
        }
        let previous = measurements
            .reliable_state(l - 1)
            .expect("pi_recent returned a reliable step");
        let measured = measurements
            .reliable_state(l)
            .ok_or(ModelError::NotEnoughMeasurements {
                step: l,
                detail: "window step has no reliable measurement".into(),
            })?;
        let mut inputs = vec![previous[var]];
        inputs.extend_from_slice(stores.input(l - 1)?);
        inputs.extend_from_slice(stores.disturbance(l - 1)?);
        let rb = &model.vars()[var].rule_base;
        let weights = match fuzzy::effective_rule_weights(rb, &inputs, model.class) {
            Ok(w) => w,
            // the fallback on a missed point is to hold the previous value,
            // which carries no information about the consequents
            Err(FuzzyError::NoRuleFired) => continue,
            Err(e) => return Err(e.into()),
        };
        let mut regressor = vec![1.0];
        regressor.extend_from_slice(&inputs);
        points.push(PreparedPoint {
            weights,
            regressor,
            target: measured[var],
        });
    }
    Ok(Some(points))
}

fn prepared_objective(points: &[PreparedPoint], theta: &[f64], width: usize) -> f64 {
    points
        .iter()
        .map(|p| {
            let prediction: f64 = p
                .weights
                .iter()
                .enumerate()
                .map(|(r, w)| {
                    let coeff = &theta[r * width..(r + 1) * width];
                    w * coeff
                        .iter()
                        .zip(&p.regressor)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
                })
                .sum();
            (p.target - prediction).powi(2)
        })
        .sum()
}

/// Re-identifies the consequent coefficients of every state variable by
/// minimizing the cumulative window error, starting from the incumbents.
///
/// The returned objective never exceeds the incumbent's: the incumbent is
/// always the first start point.
pub fn identify_consequents(
    model: &mut SubsystemModel,
    measurements: &MeasurementStore,
    stores: &InputDisturbanceStore,
    cfg: &IdentificationConfig,
    window: &[u64],
) -> Result<Vec<IdentifyOutcome>, ModelError> {
    assert!(!window.is_empty(), "identification window must be non-empty");
    let mut outcomes = Vec::with_capacity(model.n_vars());
    for var in 0..model.n_vars() {
        let width = model.vars()[var].ranges.len() + 1;
        let incumbent = model.vars()[var].rule_base.consequents_flat();
        let dim = incumbent.len();
        let range = model.vars()[var].ranges[0];

        let mut lower = Vec::with_capacity(dim);
        let mut upper = Vec::with_capacity(dim);
        for (i, &coeff) in incumbent.iter().enumerate() {
            let half = if i % width == 0 {
                cfg.intercept_bound * range
            } else {
                cfg.slope_bound
            };
            lower.push((-half).min(coeff));
            upper.push(half.max(coeff));
        }
        let spec = SearchSpec::new(lower, upper, cfg.optimizer_budget)
            .map_err(|e| ModelError::NotEnoughMeasurements {
                step: *window.last().unwrap(),
                detail: format!("bad identification search spec: {e}"),
            })?
            .with_start(incumbent.clone())
            .with_num_starts(cfg.num_starts)
            .with_seed(cfg.seed ^ var as u64);

        // The fuzzy-fuzzy class re-runs its full enumeration engine on each
        // candidate; the other classes fit through precomputed rule weights,
        // which is exact whenever the window anchors step-by-step on
        // measured data.
        let prepared = if model.class == ModelClass::FuzzyFuzzy {
            None
        } else {
            prepare_points(model, var, measurements, stores, window)?
        };

        let result = match &prepared {
            Some(points) => minimize(|theta| prepared_objective(points, theta, width), &spec),
            None => {
                let scratch = RefCell::new(model.clone());
                minimize(
                    |theta| {
                        let mut m = scratch.borrow_mut();
                        m.vars_mut()[var].rule_base.set_consequents_flat(theta);
                        window_objective(&m, var, measurements, stores, window)
                            .unwrap_or(f64::INFINITY)
                    },
                    &spec,
                )
            }
        };

        let objective_before = match &prepared {
            Some(points) => prepared_objective(points, &incumbent, width),
            None => window_objective(model, var, measurements, stores, window)
                .unwrap_or(f64::INFINITY),
        };

        if result.value.is_finite() && result.value <= objective_before {
            model.vars_mut()[var]
                .rule_base
                .set_consequents_flat(&result.point);
            outcomes.push(IdentifyOutcome {
                var,
                objective_before,
                objective_after: result.value,
                warned: false,
            });
        } else {
            outcomes.push(IdentifyOutcome {
                var,
                objective_before,
                objective_after: objective_before,
                warned: true,
            });
        }
    }
    Ok(outcomes)
}

/// Operator applied to the antecedent parameters at identification steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AntecedentOp {
    /// Keep the antecedents fixed (the default).
    Identity,
    /// Rescale each dimension's range to the maximum observed magnitude.
    RangeRescale,
}

/// Observed data per state variable and antecedent dimension, used by the
/// range-rescale operator.
#[derive(Debug, Clone, Default)]
pub struct AntecedentData {
    /// `per_var[v][d]` = values observed on antecedent dimension `d` of
    /// variable `v` (own states, then applied inputs, then disturbances).
    pub per_var: Vec<Vec<Vec<f64>>>,
}

/// Updates the antecedent parameters and re-materializes the term pairs.
pub fn update_antecedents(model: &mut SubsystemModel, op: AntecedentOp, data: &AntecedentData) {
    if op == AntecedentOp::Identity {
        return;
    }
    let scheme = model.scheme.clone();
    let n_inputs = model.n_inputs();
    for (v, var) in model.vars_mut().iter_mut().enumerate() {
        let mut changed = false;
        for d in 0..var.ranges.len() {
            let observed = data
                .per_var
                .get(v)
                .and_then(|dims| dims.get(d))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let max = observed.iter().fold(f64::NAN, |a, &b| a.max(b.abs()));
            if max.is_finite() && max > 0.0 {
                var.ranges[d] = max;
                changed = true;
            }
        }
        if changed {
            let ranges = var.ranges.clone();
            var.rule_base.remap_antecedents(|d, term| {
                let (lower, upper) = if d >= 1 && d < 1 + n_inputs {
                    scheme.pair(ranges[d], "short", "long")
                } else {
                    scheme.pair(ranges[d], "low", "high")
                };
                if term.term == lower.term {
                    lower
                } else {
                    upper
                }
            });
        }
    }
}

/// Relative validation error per state variable, as a percentage:
/// `100 * sum |measured - estimated| / sum |measured|` over the given steps.
/// `None` when the denominator is zero.
pub fn relative_validation_error(
    model: &SubsystemModel,
    measurements: &MeasurementStore,
    stores: &InputDisturbanceStore,
    steps: &[u64],
) -> Result<Vec<Option<f64>>, ModelError> {
    let mut abs_err = vec![0.0; model.n_vars()];
    let mut abs_ref = vec![0.0; model.n_vars()];
    for &l in steps {
        let measured = measurements
            .reliable_state(l)
            .ok_or(ModelError::NotEnoughMeasurements {
                step: l,
                detail: "validation step has no reliable measurement".into(),
            })?;
        let estimate = model.estimate_state(measurements, stores, l)?;
        for v in 0..model.n_vars() {
            abs_err[v] += (measured[v] - estimate[v]).abs();
            abs_ref[v] += measured[v].abs();
        }
    }
    Ok(abs_err
        .into_iter()
        .zip(abs_ref)
        .map(|(err, reference)| {
            if reference > 0.0 {
                Some(100.0 * err / reference)
            } else {
                None
            }
        })
        .collect())
}
