//! Multi-start, bound-constrained, derivative-free minimization.
//!
//! Coordinate pattern search: poll plus/minus one mesh step along each axis,
//! move to the best strictly-improving poll point, halve the mesh when no
//! poll point improves. Runs from several start points and returns the best
//! result; ties break toward the lowest start index, so evaluating starts
//! concurrently cannot change the outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("bounds must be finite with lower < upper on every coordinate")]
    InvalidBounds,
    #[error("max_evals {0} must be at least dimension + 1 = {1}")]
    BudgetTooSmall(usize, usize),
    #[error("mesh sizes must satisfy 0 < min_mesh <= initial_mesh")]
    InvalidMesh,
}

/// Search box, start points, and termination settings.
///
/// Mesh sizes are fractions of each coordinate's range. When fewer than
/// `num_starts` explicit start points are given, the remainder are drawn
/// uniformly from the box using `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub starts: Vec<Vec<f64>>,
    pub num_starts: usize,
    pub max_evals: usize,
    pub initial_mesh: f64,
    pub min_mesh: f64,
    pub seed: u64,
}

impl SearchSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, max_evals: usize) -> Result<Self, OptimError> {
        let dim = lower.len();
        if dim == 0
            || upper.len() != dim
            || lower
                .iter()
                .zip(&upper)
                .any(|(l, u)| !l.is_finite() || !u.is_finite() || l >= u)
        {
            return Err(OptimError::InvalidBounds);
        }
        if max_evals < dim + 1 {
            return Err(OptimError::BudgetTooSmall(max_evals, dim + 1));
        }
        Ok(Self {
            lower,
            upper,
            starts: Vec::new(),
            num_starts: 5,
            max_evals,
            initial_mesh: 0.25,
            min_mesh: 1e-8,
            seed: 0,
        })
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.starts.push(start);
        self
    }

    pub fn with_num_starts(mut self, n: usize) -> Self {
        self.num_starts = n.max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mesh(mut self, initial: f64, min: f64) -> Result<Self, OptimError> {
        if !(min > 0.0 && min <= initial) {
            return Err(OptimError::InvalidMesh);
        }
        self.initial_mesh = initial;
        self.min_mesh = min;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn clamp(&self, point: &mut [f64]) {
        for ((x, &l), &u) in point.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(l, u);
        }
    }

    fn all_starts(&self) -> Vec<Vec<f64>> {
        let mut starts: Vec<Vec<f64>> = self
            .starts
            .iter()
            .map(|s| {
                assert_eq!(s.len(), self.dim(), "start point dimension");
                let mut s = s.clone();
                self.clamp(&mut s);
                s
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        while starts.len() < self.num_starts {
            let point = self
                .lower
                .iter()
                .zip(&self.upper)
                .map(|(&l, &u)| rng.random_range(l..=u))
                .collect();
            starts.push(point);
        }
        starts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// The budget ran out before every start reached its minimum mesh.
    pub budget_exhausted: bool,
    /// `(evaluation index, best value so far)` whenever the best improves;
    /// empty unless tracing was requested.
    pub trace: Vec<(usize, f64)>,
}

/// Minimizes `objective` over the box in `spec`. Non-finite objective values
/// are treated as +inf. Deterministic for a fixed spec.
pub fn minimize(objective: impl Fn(&[f64]) -> f64, spec: &SearchSpec) -> MinimizeResult {
    minimize_impl(objective, spec, false)
}

/// Same as [`minimize`] but records the improvement trace.
pub fn minimize_traced(objective: impl Fn(&[f64]) -> f64, spec: &SearchSpec) -> MinimizeResult {
    minimize_impl(objective, spec, true)
}

struct SearchState<'a, F: Fn(&[f64]) -> f64> {
    objective: F,
    spec: &'a SearchSpec,
    evals: usize,
    cap: usize,
    best: Option<(Vec<f64>, f64)>,
    trace: bool,
    improvements: Vec<(usize, f64)>,
}

impl<F: Fn(&[f64]) -> f64> SearchState<'_, F> {
    fn eval(&mut self, point: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.objective)(point);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        if self.best.as_ref().map_or(true, |(_, b)| v < *b) {
            self.best = Some((point.to_vec(), v));
            if self.trace {
                self.improvements.push((self.evals, v));
            }
        }
        v
    }

    fn out_of_budget(&self) -> bool {
        self.evals >= self.cap
    }

    /// One exploratory sweep: try plus/minus one mesh step on each axis,
    /// keeping strict improvements coordinate by coordinate.
    fn explore(&mut self, mut x: Vec<f64>, mut fx: f64, mesh: f64) -> (Vec<f64>, f64) {
        for axis in 0..self.spec.dim() {
            let step = mesh * (self.spec.upper[axis] - self.spec.lower[axis]);
            for sign in [1.0, -1.0] {
                if self.out_of_budget() {
                    return (x, fx);
                }
                let mut candidate = x.clone();
                candidate[axis] += sign * step;
                self.spec.clamp(&mut candidate);
                if candidate == x {
                    continue;
                }
                let fc = self.eval(&candidate);
                if fc < fx {
                    x = candidate;
                    fx = fc;
                    break;
                }
            }
        }
        (x, fx)
    }
}

fn minimize_impl(
    objective: impl Fn(&[f64]) -> f64,
    spec: &SearchSpec,
    trace: bool,
) -> MinimizeResult {
    let starts = spec.all_starts();
    let per_start = (spec.max_evals / starts.len()).max(spec.dim() + 1);
    let mut state = SearchState {
        objective,
        spec,
        evals: 0,
        cap: 0,
        best: None,
        trace,
        improvements: Vec::new(),
    };
    let mut budget_exhausted = false;

    for start in starts {
        state.cap = (state.evals + per_start).min(spec.max_evals);
        let mut base = start;
        let mut f_base = state.eval(&base);
        let mut mesh = spec.initial_mesh;
        while mesh >= spec.min_mesh && !state.out_of_budget() {
            let (y, fy) = state.explore(base.clone(), f_base, mesh);
            if fy < f_base {
                let mut prev = base;
                base = y;
                f_base = fy;
                // Pattern moves: extrapolate along the aggregate improvement
                // direction while it keeps paying off.
                loop {
                    if state.out_of_budget() {
                        break;
                    }
                    let mut pattern: Vec<f64> = base
                        .iter()
                        .zip(&prev)
                        .map(|(b, p)| 2.0 * b - p)
                        .collect();
                    spec.clamp(&mut pattern);
                    if pattern == base {
                        break;
                    }
                    let fp = state.eval(&pattern);
                    let (y2, fy2) = state.explore(pattern, fp, mesh);
                    if fy2 < f_base {
                        prev = base;
                        base = y2;
                        f_base = fy2;
                    } else {
                        break;
                    }
                }
            } else {
                mesh *= 0.5;
            }
        }
        if state.out_of_budget() {
            budget_exhausted = true;
        }
        if state.evals >= spec.max_evals {
            break;
        }
    }

    let evals = state.evals;
    let improvements = std::mem::take(&mut state.improvements);
    let (point, value) = state.best.expect("at least one start evaluated");
    MinimizeResult {
        point,
        value,
        evals,
        budget_exhausted,
        trace: improvements,
    }
}
