//! Dense nonlinear programming via an augmented Lagrangian method.
//!
//! Solves
//!
//! ```text
//! minimize  f(z)
//! subject to  g_i(z) <= 0,   h_j(z) = 0
//! ```
//!
//! for black-box `f`, `g`, `h` over a few dozen variables. The outer loop
//! maintains Lagrange multiplier estimates and a quadratic penalty weight; the
//! inner loop minimizes the resulting smooth merit function with BFGS and an
//! Armijo backtracking line search. Derivatives default to central finite
//! differences; an analytic objective gradient can be supplied and is used
//! whenever the merit gradient is assembled.
//!
//! Design notes:
//! * The inequality term is the standard clipped form
//!   `((max(0, lambda + rho g))^2 - lambda^2) / (2 rho)`, which is continuously
//!   differentiable, so BFGS is applicable.
//! * Inner convergence is tested on the infinity norm of the merit gradient
//!   relative to `max(1, |merit|)`; constraint feasibility is always an
//!   absolute test against [`NlpSettings::constraint_tolerance`].
//! * The solver is deterministic: no randomness, no time dependence.
//! * A result carries [`NlpStatus::Converged`] only if its point satisfies the
//!   constraint tolerance when re-checked; callers are still expected to
//!   certify solutions independently.

use thiserror::Error;

pub type ScalarFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;
pub type GradientFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync + 'a>;

/// Initial quadratic penalty weight of the outer loop.
const INITIAL_PENALTY: f64 = 10.0;
/// Penalty weight ceiling; beyond this the problem is declared infeasible.
const MAX_PENALTY: f64 = 1e12;
/// Armijo sufficient-decrease coefficient.
const ARMIJO_C: f64 = 1e-4;
/// Maximum step halvings per line search.
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlpError {
    #[error("{what} evaluated to a non-finite value during the search")]
    NonFiniteEvaluation { what: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NlpStatus {
    /// Feasible within tolerance and the merit gradient test passed.
    Converged,
    /// Ran out of iterations; the returned point is feasible if any iterate
    /// was, but optimality is uncertified.
    IterationLimit,
    /// No feasible point found before the penalty weight hit its ceiling.
    Infeasible,
}

pub struct NlpProblem<'a> {
    pub dimension: usize,
    pub objective: ScalarFn<'a>,
    /// Optional analytic objective gradient; finite differences otherwise.
    pub objective_gradient: Option<GradientFn<'a>>,
    /// Feasible when `<= 0`.
    pub inequality_constraints: Vec<ScalarFn<'a>>,
    /// Feasible when `== 0`.
    pub equality_constraints: Vec<ScalarFn<'a>>,
    pub initial_point: Vec<f64>,
}

impl<'a> NlpProblem<'a> {
    /// Convenience constructor for an unconstrained problem.
    pub fn unconstrained(
        dimension: usize,
        objective: ScalarFn<'a>,
        initial_point: Vec<f64>,
    ) -> Self {
        NlpProblem {
            dimension,
            objective,
            objective_gradient: None,
            inequality_constraints: Vec::new(),
            equality_constraints: Vec::new(),
            initial_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpSettings {
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    /// Absolute feasibility tolerance on every constraint.
    pub constraint_tolerance: f64,
    /// Relative merit-gradient tolerance for inner convergence.
    pub gradient_tolerance: f64,
    /// Central finite-difference step.
    pub finite_difference_step: f64,
    /// Multiplicative penalty increase when feasibility stalls.
    pub penalty_growth: f64,
}

impl Default for NlpSettings {
    fn default() -> Self {
        NlpSettings {
            max_outer_iterations: 50,
            max_inner_iterations: 500,
            constraint_tolerance: 1e-6,
            gradient_tolerance: 1e-6,
            finite_difference_step: 1e-7,
            penalty_growth: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpResult {
    pub point: Vec<f64>,
    pub objective_value: f64,
    pub max_constraint_violation: f64,
    pub status: NlpStatus,
}

/// Central-difference gradient of a scalar function.
pub fn gradient(
    f: &dyn Fn(&[f64]) -> f64,
    z: &[f64],
    step: f64,
) -> Result<Vec<f64>, NlpError> {
    let mut work = z.to_vec();
    let mut out = vec![0.0; z.len()];
    for i in 0..z.len() {
        let zi = z[i];
        work[i] = zi + step;
        let fp = f(&work);
        work[i] = zi - step;
        let fm = f(&work);
        work[i] = zi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(NlpError::NonFiniteEvaluation { what: "finite-difference probe" });
        }
        out[i] = (fp - fm) / (2.0 * step);
    }
    Ok(out)
}

/// Solve the problem with the augmented Lagrangian method.
pub fn solve(problem: &NlpProblem<'_>, settings: &NlpSettings) -> Result<NlpResult, NlpError> {
    assert!(problem.dimension >= 1, "problem dimension must be at least 1");
    assert_eq!(
        problem.initial_point.len(),
        problem.dimension,
        "initial point length must match the problem dimension"
    );
    assert!(settings.max_outer_iterations >= 1 && settings.max_inner_iterations >= 1);
    assert!(
        settings.constraint_tolerance > 0.0
            && settings.gradient_tolerance > 0.0
            && settings.finite_difference_step > 0.0
            && settings.penalty_growth > 1.0,
        "solver tolerances must be positive and penalty growth > 1"
    );

    let mut z = problem.initial_point.clone();
    let mut lambda = vec![0.0; problem.inequality_constraints.len()];
    let mut mu = vec![0.0; problem.equality_constraints.len()];
    let mut rho = INITIAL_PENALTY;

    let eval = |z: &[f64]| -> Result<(f64, f64), NlpError> {
        let f = (problem.objective)(z);
        if !f.is_finite() {
            return Err(NlpError::NonFiniteEvaluation { what: "objective" });
        }
        let mut violation = 0.0_f64;
        for g in &problem.inequality_constraints {
            let v = g(z);
            if !v.is_finite() {
                return Err(NlpError::NonFiniteEvaluation { what: "inequality constraint" });
            }
            violation = violation.max(v.max(0.0));
        }
        for h in &problem.equality_constraints {
            let v = h(z);
            if !v.is_finite() {
                return Err(NlpError::NonFiniteEvaluation { what: "equality constraint" });
            }
            violation = violation.max(v.abs());
        }
        Ok((f, violation))
    };

    let (f0, v0) = eval(&z)?;
    // Best feasible iterate seen so far (outer-iteration granularity),
    // including the initial point. Guarantees the returned point never
    // regresses below a feasible start.
    let mut best_feasible: Option<(Vec<f64>, f64)> =
        if v0 <= settings.constraint_tolerance { Some((z.clone(), f0)) } else { None };

    let mut prev_violation = f64::INFINITY;
    let mut inner_converged = false;

    for _outer in 0..settings.max_outer_iterations {
        let merit = |z: &[f64]| merit_value(problem, z, &lambda, &mu, rho);
        let inner = minimize_merit(problem, &merit, z, settings)?;
        z = inner.point;
        inner_converged = inner.converged;

        // true objective and violation at the new iterate
        let (f_now, violation) = eval(&z)?;
        if violation <= settings.constraint_tolerance
            && best_feasible.as_ref().map_or(true, |(_, fb)| f_now < *fb)
        {
            best_feasible = Some((z.clone(), f_now));
        }

        if violation <= settings.constraint_tolerance && inner.converged {
            break;
        }

        // first-order multiplier updates
        for (i, g) in problem.inequality_constraints.iter().enumerate() {
            lambda[i] = (lambda[i] + rho * g(&z)).max(0.0);
        }
        for (j, h) in problem.equality_constraints.iter().enumerate() {
            mu[j] += rho * h(&z);
        }
        // grow the penalty when feasibility is not improving fast enough
        if violation > 0.25 * prev_violation && violation > settings.constraint_tolerance {
            if rho >= MAX_PENALTY {
                break;
            }
            rho = (rho * settings.penalty_growth).min(MAX_PENALTY);
        }
        prev_violation = violation;
    }

    let (f_final, mut final_violation) = eval(&z)?;

    // Prefer the best feasible iterate if the final one is worse or infeasible.
    let mut point = z;
    let mut objective_value = f_final;
    let mut swapped = false;
    if let Some((zb, fb)) = &best_feasible {
        if final_violation > settings.constraint_tolerance || *fb < objective_value {
            point = zb.clone();
            objective_value = *fb;
            final_violation = eval(&point)?.1;
            swapped = true;
        }
    }

    let status = if final_violation <= settings.constraint_tolerance {
        if inner_converged && !swapped {
            NlpStatus::Converged
        } else {
            NlpStatus::IterationLimit
        }
    } else {
        NlpStatus::Infeasible
    };

    Ok(NlpResult {
        point,
        objective_value,
        max_constraint_violation: final_violation,
        status,
    })
}

/// Augmented Lagrangian merit value; `None` when any term is non-finite.
fn merit_value(
    problem: &NlpProblem<'_>,
    z: &[f64],
    lambda: &[f64],
    mu: &[f64],
    rho: f64,
) -> Option<f64> {
    let mut total = (problem.objective)(z);
    if !total.is_finite() {
        return None;
    }
    for (i, g) in problem.inequality_constraints.iter().enumerate() {
        let gi = g(z);
        if !gi.is_finite() {
            return None;
        }
        let shifted = (lambda[i] + rho * gi).max(0.0);
        total += (shifted * shifted - lambda[i] * lambda[i]) / (2.0 * rho);
    }
    for (j, h) in problem.equality_constraints.iter().enumerate() {
        let hj = h(z);
        if !hj.is_finite() {
            return None;
        }
        total += mu[j] * hj + 0.5 * rho * hj * hj;
    }
    Some(total)
}

struct InnerResult {
    point: Vec<f64>,
    converged: bool,
}

/// BFGS minimization of the merit function from `z0`.
fn minimize_merit(
    problem: &NlpProblem<'_>,
    merit: &dyn Fn(&[f64]) -> Option<f64>,
    z0: Vec<f64>,
    settings: &NlpSettings,
) -> Result<InnerResult, NlpError> {
    let n = problem.dimension;
    let mut z = z0;
    let mut f = merit(&z).ok_or(NlpError::NonFiniteEvaluation { what: "merit function" })?;
    let mut g = merit_gradient(problem, merit, &z, settings)?;

    // inverse Hessian approximation, dense row-major
    let mut h_inv = identity(n);
    let mut converged = false;

    for _iter in 0..settings.max_inner_iterations {
        let scale = f.abs().max(1.0);
        if inf_norm(&g) <= settings.gradient_tolerance * scale {
            converged = true;
            break;
        }

        let mut d = neg_matvec(&h_inv, &g);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            // Hessian estimate lost positive definiteness: restart steepest
            h_inv = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        // keep the first trial step within a sane trust region
        let d_norm = norm(&d);
        let limit = 1e3 * (1.0 + norm(&z));
        let mut alpha = if d_norm > limit { limit / d_norm } else { 1.0 };

        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = z.iter().zip(&d).map(|(zi, di)| zi + alpha * di).collect();
            match merit(&trial) {
                Some(ft) if ft <= f + ARMIJO_C * alpha * slope => {
                    let g_new = merit_gradient(problem, merit, &trial, settings)?;
                    let s: Vec<f64> = trial.iter().zip(&z).map(|(a, b)| a - b).collect();
                    let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-10 * norm(&s) * norm(&y) {
                        bfgs_update(&mut h_inv, &s, &y, sy);
                    } else {
                        h_inv = identity(n);
                    }
                    z = trial;
                    f = ft;
                    g = g_new;
                    accepted = true;
                    break;
                }
                _ => alpha *= 0.5,
            }
        }
        if !accepted {
            // line search stalled; gradient may still be above tolerance
            converged = inf_norm(&g) <= settings.gradient_tolerance * f.abs().max(1.0) * 10.0;
            break;
        }
    }

    Ok(InnerResult { point: z, converged })
}

/// Gradient of the merit function: analytic objective gradient when supplied,
/// finite differences for everything else.
fn merit_gradient(
    problem: &NlpProblem<'_>,
    merit: &dyn Fn(&[f64]) -> Option<f64>,
    z: &[f64],
    settings: &NlpSettings,
) -> Result<Vec<f64>, NlpError> {
    match &problem.objective_gradient {
        None => fd_gradient(merit, z, settings.finite_difference_step),
        Some(grad_f) => {
            // merit = objective + penalty; differentiate the penalty part
            // numerically and add the analytic objective gradient
            let penalty =
                |z: &[f64]| merit(z).map(|m| m - (problem.objective)(z));
            let mut g = fd_gradient(&penalty, z, settings.finite_difference_step)?;
            let gf = grad_f(z);
            assert_eq!(gf.len(), z.len(), "objective gradient has wrong dimension");
            for (gi, fi) in g.iter_mut().zip(&gf) {
                if !fi.is_finite() {
                    return Err(NlpError::NonFiniteEvaluation { what: "objective gradient" });
                }
                *gi += fi;
            }
            Ok(g)
        }
    }
}

fn fd_gradient(
    f: &dyn Fn(&[f64]) -> Option<f64>,
    z: &[f64],
    step: f64,
) -> Result<Vec<f64>, NlpError> {
    let mut work = z.to_vec();
    let mut out = vec![0.0; z.len()];
    for i in 0..z.len() {
        let zi = z[i];
        work[i] = zi + step;
        let fp = f(&work);
        work[i] = zi - step;
        let fm = f(&work);
        work[i] = zi;
        match (fp, fm) {
            (Some(fp), Some(fm)) => out[i] = (fp - fm) / (2.0 * step),
            _ => return Err(NlpError::NonFiniteEvaluation { what: "finite-difference probe" }),
        }
    }
    Ok(out)
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn neg_matvec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        out[i] = -dot(row, v);
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Sherman-Morrison style BFGS update of the inverse Hessian:
/// `H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    // hy = H y
    let mut hy = vec![0.0; n];
    for i in 0..n {
        hy[i] = dot(&h[i * n..(i + 1) * n], y);
    }
    let yhy = dot(y, &hy);
    let c = (sy + yhy) / (sy * sy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += c * s[i] * s[j] - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
    }
}
