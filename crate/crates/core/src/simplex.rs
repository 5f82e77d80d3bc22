//! Derivative-free Nelder-Mead simplex descent with deterministic
//! tie-breaking and optional restarts around the incumbent best point.

use alloc::vec::Vec;

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Stop when the value spread across the simplex falls below this.
    pub f_tolerance: f64,
    /// Evaluation budget across the initial run and all restarts, checked
    /// between iterations; one iteration of overshoot is possible.
    pub max_evals: usize,
    /// Rebuilds of the simplex around the best point after convergence.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { f_tolerance: 1e-10, max_evals: 100_000, restarts: 3 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Budget<'a, F> {
    f: &'a mut F,
    used: usize,
    cap: usize,
}

impl<F: FnMut(&[f64]) -> f64> Budget<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.used += 1;
        let v = (self.f)(x);
        // NaN would poison the ordering; treat it as an infinite wall.
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn exhausted(&self) -> bool {
        self.used >= self.cap
    }
}

/// Minimizes `f` starting from `start`, with the initial simplex offset by
/// `steps[i]` along each axis. All steps must be nonzero.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    steps: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    assert_eq!(start.len(), steps.len());
    assert!(steps.iter().all(|&s| s != 0.0), "simplex steps must be nonzero");
    let mut budget = Budget { f, used: 0, cap: opts.max_evals };
    let mut best_point = start.to_vec();
    let mut best_value = budget.eval(start);
    let mut converged = false;
    for round in 0..=opts.restarts {
        if budget.exhausted() {
            break;
        }
        let scale = crate::math::powf(0.25, round as f64);
        let (point, value, round_converged) =
            descend(&mut budget, &best_point, steps, scale, opts.f_tolerance);
        let improved = value < best_value - opts.f_tolerance;
        if value < best_value {
            best_point = point;
            best_value = value;
        }
        converged = round_converged;
        if round_converged && !improved && round > 0 {
            break;
        }
    }
    SimplexResult { point: best_point, value: best_value, evals: budget.used, converged }
}

fn descend<F: FnMut(&[f64]) -> f64>(
    budget: &mut Budget<'_, F>,
    start: &[f64],
    steps: &[f64],
    step_scale: f64,
    f_tolerance: f64,
) -> (Vec<f64>, f64, bool) {
    let dim = start.len();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    points.push(start.to_vec());
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += steps[i] * step_scale;
        points.push(p);
    }
    let mut values: Vec<f64> = points.iter().map(|p| budget.eval(p)).collect();
    let mut converged = false;
    while !budget.exhausted() {
        // Stable order: ties resolve by insertion index.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let best = order[0];
        let second_worst = order[dim - 1];
        let worst = order[dim];
        if values[worst] - values[best] < f_tolerance {
            converged = true;
            break;
        }
        let mut centroid = alloc::vec![0.0; dim];
        for &idx in &order[..dim] {
            for (c, &x) in centroid.iter_mut().zip(&points[idx]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }
        let worst_point = points[worst].clone();
        let blend = |a: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst_point)
                .map(|(&c, &w)| c + a * (c - w))
                .collect()
        };
        let reflected = blend(1.0);
        let f_reflected = budget.eval(&reflected);
        if f_reflected < values[best] {
            let expanded = blend(2.0);
            let f_expanded = budget.eval(&expanded);
            if f_expanded < f_reflected {
                points[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                points[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            points[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let (contracted, f_contracted) = if f_reflected < values[worst] {
                let p = blend(0.5);
                let v = budget.eval(&p);
                (p, v)
            } else {
                let p = blend(-0.5);
                let v = budget.eval(&p);
                (p, v)
            };
            if f_contracted < values[worst].min(f_reflected) {
                points[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink everything toward the best vertex.
                let anchor = points[best].clone();
                for (idx, p) in points.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for (x, &a) in p.iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    values[idx] = budget.eval(p);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] < values[best] {
            best = i;
        }
    }
    (points.swap_remove(best), values[best], converged)
}
