//! Deterministic full-batch minimizers with monotone backtracking.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// A smooth objective that supports cheap evaluation along a search ray.
///
/// The minimizer calls `start` once, then alternates `set_direction`,
/// any number of `value_along`, and `accept`.
pub(crate) trait RayObjective {
    fn dim(&self) -> usize;
    /// Objective and gradient at `w`; becomes the current point.
    fn start(&mut self, w: &[f64], grad: &mut [f64]) -> f64;
    /// Fixes the search direction from the current point.
    fn set_direction(&mut self, d: &[f64]);
    /// Objective at `current + alpha * d`.
    fn value_along(&self, alpha: f64) -> f64;
    /// Moves to `current + alpha * d`; returns the objective and fills the gradient.
    fn accept(&mut self, alpha: f64, grad: &mut [f64]) -> f64;
    /// Coordinates whose gradient is held at zero.
    fn frozen(&self, j: usize) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Steepest descent; the trial step grows after every accepted step and
    /// halves on each Armijo violation.
    GradientDescent,
    /// Limited-memory BFGS with the given number of curvature pairs.
    Lbfgs { memory: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub iterations: usize,
    pub objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

pub(crate) fn minimize<O: RayObjective>(
    objective: &mut O,
    w: &mut [f64],
    method: Method,
    grad_tol: f64,
    max_iter: usize,
) -> Outcome {
    let dim = objective.dim();
    let mut grad = vec![0.0; dim];
    let mut f = objective.start(w, &mut grad);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut gd_step = 1.0;
    let mut direction = vec![0.0; dim];
    let mut iterations = 0;
    let free_norm = |g: &[f64], o: &O| {
        libm::sqrt(g.iter().enumerate().filter(|(j, _)| !o.frozen(*j)).map(|(_, x)| x * x).sum())
    };
    let mut converged = free_norm(&grad, objective) <= grad_tol;

    while !converged && iterations < max_iter {
        match method {
            Method::GradientDescent => {
                for (d, g) in direction.iter_mut().zip(&grad) {
                    *d = -g;
                }
            }
            Method::Lbfgs { .. } => two_loop(&grad, &history, &mut direction),
        }
        for (j, d) in direction.iter_mut().enumerate() {
            if objective.frozen(j) {
                *d = 0.0;
            }
        }
        let mut slope = dot(&grad, &direction);
        if slope >= 0.0 {
            // not a descent direction; fall back to the gradient
            history.clear();
            for (j, (d, g)) in direction.iter_mut().zip(&grad).enumerate() {
                *d = if objective.frozen(j) { 0.0 } else { -g };
            }
            slope = dot(&grad, &direction);
        }
        objective.set_direction(&direction);

        let mut alpha = match method {
            Method::GradientDescent => gd_step,
            Method::Lbfgs { .. } if history.is_empty() => (1.0 / norm(&grad)).min(1.0),
            Method::Lbfgs { .. } => 1.0,
        };
        let accepted = loop {
            let trial = objective.value_along(alpha);
            if trial.is_finite() && trial <= f + ARMIJO * alpha * slope {
                break true;
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break false;
            }
        };
        if !accepted {
            break;
        }

        let old_grad = grad.clone();
        let f_new = objective.accept(alpha, &mut grad);
        iterations += 1;
        for (wj, dj) in w.iter_mut().zip(&direction) {
            *wj += alpha * dj;
        }
        f = f_new;
        trace.push(f);

        match method {
            Method::GradientDescent => gd_step = alpha * 2.0,
            Method::Lbfgs { memory } => {
                let s: Vec<f64> = direction.iter().map(|d| alpha * d).collect();
                let y: Vec<f64> = grad.iter().zip(&old_grad).map(|(g, o)| g - o).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * norm(&s) * norm(&y) {
                    if history.len() == memory {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
            }
        }
        converged = free_norm(&grad, objective) <= grad_tol;
    }

    Outcome {
        iterations,
        objective: f,
        gradient_norm: free_norm(&grad, objective),
        converged,
        trace,
    }
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, out: &mut [f64]) {
    out.copy_from_slice(grad);
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, out);
        for (o, yi) in out.iter_mut().zip(y) {
            *o -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for o in out.iter_mut() {
            *o *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, out);
        for (o, si) in out.iter_mut().zip(s) {
            *o += (a - b) * si;
        }
    }
    for o in out.iter_mut() {
        *o = -*o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(w) = Σ_j c_j (w_j - t_j)^2 / 2
    struct Quadratic {
        scale: Vec<f64>,
        target: Vec<f64>,
        w: Vec<f64>,
        d: Vec<f64>,
    }

    impl Quadratic {
        fn value(&self, w: &[f64]) -> f64 {
            w.iter()
                .zip(&self.target)
                .zip(&self.scale)
                .map(|((w, t), c)| c * (w - t) * (w - t) / 2.0)
                .sum()
        }
        fn grad(&self, grad: &mut [f64]) {
            for (j, g) in grad.iter_mut().enumerate() {
                *g = self.scale[j] * (self.w[j] - self.target[j]);
            }
        }
    }

    impl RayObjective for Quadratic {
        fn dim(&self) -> usize {
            self.scale.len()
        }
        fn start(&mut self, w: &[f64], grad: &mut [f64]) -> f64 {
            self.w = w.to_vec();
            self.grad(grad);
            self.value(w)
        }
        fn set_direction(&mut self, d: &[f64]) {
            self.d = d.to_vec();
        }
        fn value_along(&self, alpha: f64) -> f64 {
            let p: Vec<f64> = self.w.iter().zip(&self.d).map(|(w, d)| w + alpha * d).collect();
            self.value(&p)
        }
        fn accept(&mut self, alpha: f64, grad: &mut [f64]) -> f64 {
            for (w, d) in self.w.iter_mut().zip(&self.d) {
                *w += alpha * d;
            }
            self.grad(grad);
            self.value(&self.w)
        }
        fn frozen(&self, j: usize) -> bool {
            j == 2
        }
    }

    fn problem() -> Quadratic {
        Quadratic {
            scale: vec![1.0, 10.0, 3.0, 0.5],
            target: vec![1.0, -2.0, 5.0, 0.25],
            w: Vec::new(),
            d: Vec::new(),
        }
    }

    #[test]
    fn both_methods_reach_the_minimum_and_respect_frozen_coordinates() {
        for method in [Method::GradientDescent, Method::Lbfgs { memory: 5 }] {
            let mut q = problem();
            let mut w = vec![0.0; 4];
            let out = minimize(&mut q, &mut w, method, 1e-6, 10_000);
            assert!(out.converged, "{method:?} {out:?}");
            assert!((w[0] - 1.0).abs() < 1e-5, "{method:?}: {w:?}");
            assert!((w[1] + 2.0).abs() < 1e-5);
            assert_eq!(w[2], 0.0);
            assert!(out.trace.windows(2).all(|p| p[1] <= p[0]));
        }
    }
}
