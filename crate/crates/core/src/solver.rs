//! Damped Newton solver for the discrete dual problem and post-solve
//! verification of covariance matching and the cepstral error certificate.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::dual::{DualFields, DualPoint, DualProblem};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField};
use crate::moments::{nu_entropy, nu_ratio, MomentData};
use crate::scalar::{norm2, norm_inf, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions<T> {
    /// Stop when `‖g‖₂` drops to this value.
    pub grad_tol: T,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant, in `(0, 0.5)`.
    pub backtrack_alpha: T,
    /// Step shrink factor, in `(0, 1)`.
    pub backtrack_beta: T,
    /// Fraction of the largest step keeping `P, Q > 0` on the grid, in `(0, 1)`.
    pub feasibility_fraction: T,
    /// Extra Newton steps taken after `grad_tol` is met, each kept only if
    /// it lowers the gradient norm.
    pub polish_steps: usize,
    /// First λ of the continuation sequence; `None` starts directly at the
    /// target λ.
    pub continuation_start: Option<T>,
    /// Ratio between successive continuation levels, in `(0, 1)`.
    pub continuation_factor: T,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            grad_tol: T::lit(1e-9),
            max_iter: 200,
            backtrack_alpha: T::lit(0.3),
            backtrack_beta: T::lit(0.5),
            feasibility_fraction: T::lit(0.99),
            polish_steps: 2,
            continuation_start: Some(T::one()),
            continuation_factor: T::lit(0.1),
        }
    }
}

impl<T: Scalar> SolveOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        if !(self.grad_tol > zero) {
            return Err(Error::InvalidOptions(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOptions("max_iter must be at least 1".into()));
        }
        if !(self.backtrack_alpha > zero && self.backtrack_alpha < T::lit(0.5)) {
            return Err(Error::InvalidOptions(format!(
                "backtrack_alpha must lie in (0, 0.5), got {}",
                self.backtrack_alpha
            )));
        }
        if !(self.backtrack_beta > zero && self.backtrack_beta < one) {
            return Err(Error::InvalidOptions(format!(
                "backtrack_beta must lie in (0, 1), got {}",
                self.backtrack_beta
            )));
        }
        if !(self.feasibility_fraction > zero && self.feasibility_fraction < one) {
            return Err(Error::InvalidOptions(format!(
                "feasibility_fraction must lie in (0, 1), got {}",
                self.feasibility_fraction
            )));
        }
        if !(self.continuation_factor > zero && self.continuation_factor < one) {
            return Err(Error::InvalidOptions(format!(
                "continuation_factor must lie in (0, 1), got {}",
                self.continuation_factor
            )));
        }
        if let Some(start) = self.continuation_start {
            if !(start > zero) || !start.is_finite() {
                return Err(Error::InvalidOptions(format!(
                    "continuation_start must be positive, got {start}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    /// Backtracking could not find an acceptable step.
    LineSearchStalled,
}

/// Matching diagnostics at a dual point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification<T> {
    /// `‖c − Γ((P/Q)^ν)‖∞`.
    pub cov_residual: T,
    /// `(ν/(ν−1))Γ_0((P/Q)^{ν−1}) − m`, one entry per nonzero `k`.
    pub cep_residual: Vec<T>,
    /// `ε_k = λ Γ_0(P^{−ν})_k`.
    pub eps_certificate: Vec<T>,
    /// `‖cep_residual − eps_certificate‖∞`; vanishes at a stationary point.
    pub certificate_gap: T,
    /// ν-entropy of `(P/Q)^ν`.
    pub entropy: T,
    pub p_min: T,
    pub q_min: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    /// Newton steps over all continuation stages.
    pub iterations: usize,
    /// Newton steps at the target λ.
    pub final_iterations: usize,
    pub continuation_stages: usize,
    pub final_grad_norm: T,
    pub converged: bool,
    pub termination: Termination,
    /// Dual value at the start of the final stage and after each of its steps.
    pub value_history: Vec<T>,
    #[serde(flatten)]
    pub verification: Verification<T>,
}

/// `q_0 = c_0^{−1/ν}`, everything else zero, so that `(P/Q)^ν ≡ c_0`.
pub fn initial_point<T: Scalar>(data: &MomentData<T>) -> Result<DualPoint<T>> {
    data.validate()?;
    let h = data.index_set.half_len();
    let mut q = vec![T::zero(); h];
    q[0] = data.c[0].powf(-T::one() / T::from_u32(data.nu).unwrap());
    DualPoint::new(data.index_set.clone(), vec![T::zero(); h - 1], q)
}

/// Largest `t` keeping `P + tδP` and `Q + tδQ` positive on the grid.
fn max_feasible_step<T: Scalar>(f: &DualFields<T>, d: &DualFields<T>) -> T {
    let mut t = T::infinity();
    for (v, dv) in f.p.iter().zip(&d.p).chain(f.q.iter().zip(&d.q)) {
        if *dv < T::zero() {
            t = t.min(-*v / *dv);
        }
    }
    t
}

/// Diagnostics at an arbitrary strictly feasible point.
pub fn verify<T: Scalar>(
    x: &DualPoint<T>,
    data: &MomentData<T>,
    grid: &Grid<T>,
) -> Result<Verification<T>> {
    let problem = DualProblem::new(grid, data)?;
    let f = problem.fields(x)?;
    if !f.feasible() {
        return Err(Error::Infeasible {
            p_min: f.p_min().to_f64_lossy(),
            q_min: f.q_min().to_f64_lossy(),
        });
    }
    let nu = data.nu as i32;
    let set = &data.index_set;
    let spec = grid.spec().clone();
    let ratio: Vec<T> = f.p.iter().zip(&f.q).map(|(&p, &q)| p / q).collect();
    let phi = GridField::new(spec.clone(), ratio.iter().map(|r| r.powi(nu)).collect())?;
    let low = GridField::new(spec.clone(), ratio.iter().map(|r| r.powi(nu - 1)).collect())?;
    let reg = GridField::new(spec, f.p.iter().map(|p| p.powi(-nu)).collect())?;

    let gamma = grid.project_moments(&phi, set)?;
    let resid: Vec<T> = data.c.iter().zip(&gamma).map(|(&c, &g)| c - g).collect();
    let factor = nu_ratio::<T>(data.nu);
    let cep_residual: Vec<T> = grid
        .project_moments_nonzero(&low, set)?
        .into_iter()
        .zip(&data.m)
        .map(|(g, &m)| factor * g - m)
        .collect();
    let eps_certificate: Vec<T> = grid
        .project_moments_nonzero(&reg, set)?
        .into_iter()
        .map(|g| data.lambda * g)
        .collect();
    let gap: Vec<T> = cep_residual
        .iter()
        .zip(&eps_certificate)
        .map(|(&a, &b)| a - b)
        .collect();
    Ok(Verification {
        cov_residual: norm_inf(&resid),
        certificate_gap: norm_inf(&gap),
        cep_residual,
        eps_certificate,
        entropy: nu_entropy(&phi, data.nu)?,
        p_min: f.p_min(),
        q_min: f.q_min(),
    })
}

/// Solves the dual problem from [`initial_point`].
pub fn solve<T: Scalar>(
    data: &MomentData<T>,
    grid: &Grid<T>,
    opts: &SolveOptions<T>,
) -> Result<(DualPoint<T>, SolveReport<T>)> {
    solve_from(data, grid, opts, initial_point(data)?)
}

enum StepOutcome<T> {
    Accepted {
        x: DualPoint<T>,
        value: T,
        grad_norm: T,
    },
    Stalled,
}

struct NewtonRun<T> {
    x: DualPoint<T>,
    iterations: usize,
    termination: Termination,
    history: Vec<T>,
    grad_norm: T,
}

fn newton<T: Scalar>(
    problem: &DualProblem<'_, T>,
    x0: DualPoint<T>,
    opts: &SolveOptions<T>,
) -> Result<NewtonRun<T>> {
    let mut x = x0;
    let mut eval = problem.evaluate(&x)?;
    let mut grad_norm = norm2(&eval.gradient);
    let mut history = vec![eval.value];
    let mut iterations = 0;
    let mut polished = 0;
    let termination = loop {
        let at_tol = grad_norm <= opts.grad_tol;
        if at_tol && polished >= opts.polish_steps {
            break Termination::GradientTolerance;
        }
        if iterations >= opts.max_iter {
            break if at_tol {
                Termination::GradientTolerance
            } else {
                Termination::MaxIterations
            };
        }
        let chol = eval.hessian.cholesky().ok_or(Error::Factorization {
            iteration: iterations,
        })?;
        let neg_g: Vec<T> = eval.gradient.iter().map(|&g| -g).collect();
        let dx = chol.solve(&neg_g);
        let slope: T = eval.gradient.iter().zip(&dx).map(|(&g, &d)| g * d).sum();
        let outcome = line_search(problem, &x, &dx, eval.value, slope, grad_norm, opts)?;
        match outcome {
            StepOutcome::Accepted {
                x: next,
                value,
                grad_norm: next_norm,
            } => {
                if at_tol {
                    if next_norm >= grad_norm {
                        break Termination::GradientTolerance;
                    }
                    polished += 1;
                }
                iterations += 1;
                log::debug!("newton iteration {iterations}: value {value:e}, |g| {next_norm:e}");
                x = next;
                eval = problem.evaluate(&x)?;
                grad_norm = norm2(&eval.gradient);
                history.push(eval.value);
            }
            StepOutcome::Stalled => {
                break if at_tol {
                    Termination::GradientTolerance
                } else {
                    Termination::LineSearchStalled
                };
            }
        }
    };
    Ok(NewtonRun {
        x,
        iterations,
        termination,
        history,
        grad_norm,
    })
}

/// Regularization levels visited before the target λ: `start, start·f, …`
/// down to but excluding λ.
pub fn continuation_schedule<T: Scalar>(lambda: T, opts: &SolveOptions<T>) -> Vec<T> {
    let Some(start) = opts.continuation_start else {
        return Vec::new();
    };
    let floor = start * T::lit(1e-14);
    let mut out = Vec::new();
    let mut s = start;
    while s > lambda * (T::one() + T::lit(1e-9)) && s > floor {
        out.push(s);
        s *= opts.continuation_factor;
    }
    out
}

/// Solves the dual problem starting from a strictly feasible `x0`.
///
/// With continuation enabled and λ below the starting level, the problem is
/// first solved at a decreasing sequence of larger λ, each stage starting
/// from the previous solution. Every stage, including the last, is a damped
/// Newton run with its own `max_iter` budget.
pub fn solve_from<T: Scalar>(
    data: &MomentData<T>,
    grid: &Grid<T>,
    opts: &SolveOptions<T>,
    x0: DualPoint<T>,
) -> Result<(DualPoint<T>, SolveReport<T>)> {
    opts.validate()?;
    let problem = DualProblem::new(grid, data)?;
    if data.lambda == T::zero() {
        log::warn!("λ = 0: the minimizer may lie on the boundary of the feasible set");
    }
    let mut x = x0;
    let mut iterations = 0;
    let schedule = continuation_schedule(data.lambda, opts);
    for &level in &schedule {
        let stage_data = data.with_lambda(level);
        let stage = DualProblem::new(grid, &stage_data)?;
        let run = newton(&stage, x, opts)?;
        log::debug!(
            "continuation λ = {level:e}: {} iterations, {:?}",
            run.iterations,
            run.termination
        );
        iterations += run.iterations;
        x = run.x;
    }
    let run = newton(&problem, x, opts)?;
    iterations += run.iterations;
    let converged = run.termination == Termination::GradientTolerance;
    if !converged {
        log::warn!(
            "solver stopped without convergence ({:?}), |g| = {:e}",
            run.termination,
            run.grad_norm
        );
    }
    let verification = verify(&run.x, data, grid)?;
    let report = SolveReport {
        iterations,
        final_iterations: run.iterations,
        continuation_stages: schedule.len(),
        final_grad_norm: run.grad_norm,
        converged,
        termination: run.termination,
        value_history: run.history,
        verification,
    };
    Ok((run.x, report))
}

fn line_search<T: Scalar>(
    problem: &DualProblem<'_, T>,
    x: &DualPoint<T>,
    dx: &[T],
    value: T,
    slope: T,
    grad_norm: T,
    opts: &SolveOptions<T>,
) -> Result<StepOutcome<T>> {
    let f = problem.fields(x)?;
    let d = problem.direction_fields(dx)?;
    let mut t = T::one().min(opts.feasibility_fraction * max_feasible_step(&f, &d));
    // Differences below this are rounding noise in the objective.
    let noise = T::lit(16.0) * T::epsilon() * Float::abs(value).max(T::one());
    let t_min = T::epsilon() * T::epsilon();
    while t > t_min {
        let cand = x.step(dx, t);
        let v = problem.value(&cand)?;
        if v.is_finite() {
            if v <= value + opts.backtrack_alpha * t * slope {
                let g = problem.gradient(&cand)?;
                return Ok(StepOutcome::Accepted {
                    x: cand,
                    value: v,
                    grad_norm: norm2(&g),
                });
            }
            if Float::abs(v - value) <= noise {
                let g = norm2(&problem.gradient(&cand)?);
                if g < grad_norm {
                    return Ok(StepOutcome::Accepted {
                        x: cand,
                        value: v,
                        grad_norm: g,
                    });
                }
            }
        }
        t *= opts.backtrack_beta;
    }
    Ok(StepOutcome::Stalled)
}

/// `dx/dλ = −H⁻¹ ∂g/∂λ` at a stationary point.
pub fn lambda_sensitivity<T: Scalar>(
    x: &DualPoint<T>,
    data: &MomentData<T>,
    grid: &Grid<T>,
) -> Result<Vec<T>> {
    let problem = DualProblem::new(grid, data)?;
    let h = problem.hessian(x)?;
    let dg = problem.gradient_lambda_derivative(x)?;
    let chol = h.cholesky().ok_or(Error::Factorization { iteration: 0 })?;
    Ok(chol.solve(&dg).into_iter().map(|v| -v).collect())
}
