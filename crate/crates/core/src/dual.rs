//! The discrete regularized dual objective, its gradient and Hessian in the
//! canonical coefficient basis, and the grid positivity certificate.
//!
//! Variables are ordered `[p_1, …, p_{h−1}, q_0, …, q_{h−1}]` where `h` is
//! the half-set size and `p_0 ≡ 1`. The basis direction attached to a
//! nonzero `k` is `e^{−i⟨k,θ⟩} + e^{i⟨k,θ⟩}`, so gradient and Hessian entries
//! for such `k` carry a factor of two relative to a single Fourier mode.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, IndexSet, SymTrigPoly};
use crate::linalg::Matrix;
use crate::moments::{nu_ratio, MomentData};
use crate::scalar::{grid_mean, Scalar};

/// A point of the dual domain: the free coefficients of `P` (with `p_0 = 1`)
/// and all coefficients of `Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualPoint<T> {
    pub index_set: IndexSet,
    pub p: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> DualPoint<T> {
    pub fn new(index_set: IndexSet, p: Vec<T>, q: Vec<T>) -> Result<Self> {
        let h = index_set.half_len();
        if p.len() != h - 1 {
            return Err(Error::DimensionMismatch {
                expected: h - 1,
                got: p.len(),
            });
        }
        if q.len() != h {
            return Err(Error::DimensionMismatch {
                expected: h,
                got: q.len(),
            });
        }
        Ok(DualPoint { index_set, p, q })
    }

    /// Number of free variables, `2h − 1`.
    pub fn dim(&self) -> usize {
        self.p.len() + self.q.len()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.p.iter().chain(&self.q).copied().collect()
    }

    pub fn from_vec(index_set: IndexSet, x: &[T]) -> Result<Self> {
        let h = index_set.half_len();
        if x.len() != 2 * h - 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * h - 1,
                got: x.len(),
            });
        }
        let (p, q) = x.split_at(h - 1);
        Ok(DualPoint {
            index_set,
            p: p.to_vec(),
            q: q.to_vec(),
        })
    }

    /// Half-set coefficients of `P`, `p_0 = 1` prepended.
    pub fn p_coeffs(&self) -> Vec<T> {
        std::iter::once(T::one())
            .chain(self.p.iter().copied())
            .collect()
    }

    pub fn p_poly(&self) -> SymTrigPoly<T> {
        SymTrigPoly::new(self.index_set.clone(), self.p_coeffs()).expect("consistent length")
    }

    pub fn q_poly(&self) -> SymTrigPoly<T> {
        SymTrigPoly::new(self.index_set.clone(), self.q.clone()).expect("consistent length")
    }

    /// `x + t·dx` with `dx` in the flat variable ordering.
    pub fn step(&self, dx: &[T], t: T) -> Self {
        let x: Vec<T> = self
            .to_vec()
            .iter()
            .zip(dx)
            .map(|(&a, &d)| a + t * d)
            .collect();
        Self::from_vec(self.index_set.clone(), &x).expect("same dimension")
    }

    /// Coefficient distance `‖x − y‖₂` over the free variables.
    pub fn distance(&self, other: &Self) -> T {
        let d: Vec<T> = self
            .to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(&a, b)| (a - b) * (a - b))
            .collect();
        crate::scalar::pairwise_sum(&d).sqrt()
    }
}

/// Objective, gradient and Hessian at one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualEval<T> {
    pub value: T,
    pub gradient: Vec<T>,
    pub hessian: Matrix<T>,
    pub p_min: T,
    pub q_min: T,
}

/// `P` and `Q` on the grid.
#[derive(Clone, Debug)]
pub struct DualFields<T> {
    pub p: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Scalar> DualFields<T> {
    pub fn p_min(&self) -> T {
        self.p.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn q_min(&self) -> T {
        self.q.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn feasible(&self) -> bool {
        self.p_min() > T::zero() && self.q_min() > T::zero()
    }

    fn require_feasible(&self) -> Result<()> {
        if self.feasible() {
            Ok(())
        } else {
            Err(Error::Infeasible {
                p_min: self.p_min().to_f64_lossy(),
                q_min: self.q_min().to_f64_lossy(),
            })
        }
    }
}

/// Dual objective for fixed moment data on a fixed grid.
#[derive(Clone, Debug)]
pub struct DualProblem<'a, T: Scalar> {
    grid: &'a Grid<T>,
    data: &'a MomentData<T>,
}

impl<'a, T: Scalar> DualProblem<'a, T> {
    pub fn new(grid: &'a Grid<T>, data: &'a MomentData<T>) -> Result<Self> {
        data.validate()?;
        grid.check_aliasing(&data.index_set)?;
        Ok(DualProblem { grid, data })
    }

    pub fn grid(&self) -> &Grid<T> {
        self.grid
    }

    pub fn data(&self) -> &MomentData<T> {
        self.data
    }

    fn check_point(&self, x: &DualPoint<T>) -> Result<()> {
        if x.index_set != self.data.index_set {
            return Err(Error::InvalidIndexSet(
                "dual point and moment data use different index sets".into(),
            ));
        }
        Ok(())
    }

    pub fn fields(&self, x: &DualPoint<T>) -> Result<DualFields<T>> {
        self.check_point(x)?;
        let set = &self.data.index_set;
        Ok(DualFields {
            p: self.grid.eval_coeffs(set, &x.p_coeffs())?,
            q: self.grid.eval_coeffs(set, &x.q)?,
        })
    }

    /// `δP`, `δQ` on the grid for a step `dx` in the flat variable ordering.
    pub fn direction_fields(&self, dx: &[T]) -> Result<DualFields<T>> {
        let set = &self.data.index_set;
        let h = set.half_len();
        if dx.len() != 2 * h - 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * h - 1,
                got: dx.len(),
            });
        }
        let dp: Vec<T> = std::iter::once(T::zero())
            .chain(dx[..h - 1].iter().copied())
            .collect();
        Ok(DualFields {
            p: self.grid.eval_coeffs(set, &dp)?,
            q: self.grid.eval_coeffs(set, &dx[h - 1..])?,
        })
    }

    fn nu_t(&self) -> T {
        T::from_u32(self.data.nu).unwrap()
    }

    fn linear_terms(&self, x: &DualPoint<T>) -> T {
        let two = T::lit(2.0);
        let c = &self.data.c;
        let mut qc = x.q[0] * c[0];
        for k in 1..c.len() {
            qc += two * x.q[k] * c[k];
        }
        let pm: T =
            x.p.iter()
                .zip(&self.data.m)
                .map(|(&p, &m)| two * p * m)
                .sum();
        qc - pm
    }

    fn value_from_fields(&self, x: &DualPoint<T>, f: &DualFields<T>) -> T {
        if !f.feasible() {
            return T::infinity();
        }
        let nu = self.nu_t();
        let nu1 = nu - T::one();
        let lambda = self.data.lambda;
        let terms: Vec<T> =
            f.p.iter()
                .zip(&f.q)
                .map(|(&p, &q)| {
                    let main = p * (p / q).powi(self.data.nu as i32 - 1);
                    let reg = if lambda > T::zero() {
                        lambda * p.powi(-(self.data.nu as i32 - 1))
                    } else {
                        T::zero()
                    };
                    main + reg
                })
                .collect();
        grid_mean(&terms) / nu1 + self.linear_terms(x)
    }

    /// `J(x)`, or `+∞` when `P` or `Q` is not strictly positive on the grid.
    pub fn value(&self, x: &DualPoint<T>) -> Result<T> {
        let f = self.fields(x)?;
        Ok(self.value_from_fields(x, &f))
    }

    fn gradient_from_fields(&self, f: &DualFields<T>) -> Result<Vec<T>> {
        f.require_feasible()?;
        let set = &self.data.index_set;
        let h = set.half_len();
        let nu = self.data.nu as i32;
        let lambda = self.data.lambda;
        let n = f.p.len();
        let mut phi = Vec::with_capacity(n);
        let mut phi_low = Vec::with_capacity(n);
        let mut reg = Vec::with_capacity(n);
        for (&p, &q) in f.p.iter().zip(&f.q) {
            let r = p / q;
            let r_low = r.powi(nu - 1);
            phi.push(r_low * r);
            phi_low.push(r_low);
            reg.push(p.powi(-nu));
        }
        let gamma_phi = self.project_half(&phi);
        let gamma_low = self.project_half(&phi_low);
        let gamma_reg = self.project_half(&reg);
        let ratio = nu_ratio::<T>(self.data.nu);
        let two = T::lit(2.0);
        let mut g = Vec::with_capacity(2 * h - 1);
        for k in 1..h {
            g.push(two * (ratio * gamma_low[k] - lambda * gamma_reg[k] - self.data.m[k - 1]));
        }
        for k in 0..h {
            let r = self.data.c[k] - gamma_phi[k];
            g.push(if k == 0 { r } else { two * r });
        }
        Ok(g)
    }

    fn project_half(&self, values: &[T]) -> Vec<T> {
        let spec = self.grid.moment_spectrum(values);
        self.data
            .index_set
            .half()
            .iter()
            .map(|k| spec[self.grid.spec().wrap(k)].re)
            .collect()
    }

    pub fn gradient(&self, x: &DualPoint<T>) -> Result<Vec<T>> {
        let f = self.fields(x)?;
        self.gradient_from_fields(&f)
    }

    // For each flat variable, the index offsets making up its basis direction.
    fn directions(&self) -> Vec<(bool, Vec<Vec<i64>>)> {
        let half = self.data.index_set.half();
        let dirs = |k: &Vec<i64>| {
            if k.iter().all(|&v| v == 0) {
                vec![k.clone()]
            } else {
                vec![k.clone(), k.iter().map(|&v| -v).collect()]
            }
        };
        half.iter()
            .skip(1)
            .map(|k| (true, dirs(k)))
            .chain(half.iter().map(|k| (false, dirs(k))))
            .collect()
    }

    fn hessian_from_fields(&self, f: &DualFields<T>) -> Result<Matrix<T>> {
        f.require_feasible()?;
        let nu = self.data.nu as i32;
        let nu_t = self.nu_t();
        let lambda = self.data.lambda;
        let n = f.p.len();
        let mut w_qq = Vec::with_capacity(n);
        let mut w_pq = Vec::with_capacity(n);
        let mut w_pp = Vec::with_capacity(n);
        for (&p, &q) in f.p.iter().zip(&f.q) {
            let r = p / q;
            let r_low = r.powi(nu - 1);
            w_qq.push(nu_t * r_low * r / q);
            w_pq.push(-nu_t * r_low / q);
            w_pp.push(nu_t * (r.powi(nu - 2) / q + lambda * p.powi(-(nu + 1))));
        }
        let s_qq = self.grid.moment_spectrum(&w_qq);
        let s_pq = self.grid.moment_spectrum(&w_pq);
        let s_pp = self.grid.moment_spectrum(&w_pp);
        let spec = self.grid.spec();
        let dirs = self.directions();
        let dim = dirs.len();
        let mut h = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let (pi, ref di) = dirs[i];
                let (pj, ref dj) = dirs[j];
                let s = match (pi, pj) {
                    (true, true) => &s_pp,
                    (false, false) => &s_qq,
                    _ => &s_pq,
                };
                let mut acc = T::zero();
                for a in di {
                    for b in dj {
                        let sum: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                        acc += s[spec.wrap(&sum)].re;
                    }
                }
                h.set(i, j, acc);
                h.set(j, i, acc);
            }
        }
        Ok(h)
    }

    pub fn hessian(&self, x: &DualPoint<T>) -> Result<Matrix<T>> {
        let f = self.fields(x)?;
        self.hessian_from_fields(&f)
    }

    /// Value, gradient and Hessian sharing one evaluation of `P` and `Q`.
    pub fn evaluate(&self, x: &DualPoint<T>) -> Result<DualEval<T>> {
        let f = self.fields(x)?;
        f.require_feasible()?;
        Ok(DualEval {
            value: self.value_from_fields(x, &f),
            gradient: self.gradient_from_fields(&f)?,
            hessian: self.hessian_from_fields(&f)?,
            p_min: f.p_min(),
            q_min: f.q_min(),
        })
    }

    /// `∂g/∂λ`: only the p-block depends on λ, through `−2Γ_k(P^{−ν})`.
    pub fn gradient_lambda_derivative(&self, x: &DualPoint<T>) -> Result<Vec<T>> {
        let f = self.fields(x)?;
        f.require_feasible()?;
        let h = self.data.index_set.half_len();
        let reg: Vec<T> =
            f.p.iter()
                .map(|&p| p.powi(-(self.data.nu as i32)))
                .collect();
        let gamma = self.project_half(&reg);
        let two = T::lit(2.0);
        let mut out: Vec<T> = (1..h).map(|k| -two * gamma[k]).collect();
        out.extend(std::iter::repeat_n(T::zero(), h));
        Ok(out)
    }
}

pub fn dual_value<T: Scalar>(x: &DualPoint<T>, data: &MomentData<T>, grid: &Grid<T>) -> Result<T> {
    DualProblem::new(grid, data)?.value(x)
}

pub fn dual_gradient<T: Scalar>(
    x: &DualPoint<T>,
    data: &MomentData<T>,
    grid: &Grid<T>,
) -> Result<Vec<T>> {
    DualProblem::new(grid, data)?.gradient(x)
}

pub fn dual_hessian<T: Scalar>(
    x: &DualPoint<T>,
    data: &MomentData<T>,
    grid: &Grid<T>,
) -> Result<Matrix<T>> {
    DualProblem::new(grid, data)?.hessian(x)
}

/// Result of the grid positivity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate<T> {
    /// Smallest grid value of `P/p_0`.
    pub p_min: T,
    /// `Σ_{k∈Λ} ‖k‖₁` over the full index set.
    pub delta: T,
    /// `2π d Δ / min(N)`.
    pub threshold: T,
    /// When true, `P > 0` on the whole torus, not only on the grid.
    pub certified: bool,
}

/// Certifies positivity of `P` off the grid from its grid minimum. `P` is
/// rescaled so that `p_0 = 1`; a nonpositive `p_0` is never certified.
pub fn positivity_certificate<T: Scalar>(
    p: &SymTrigPoly<T>,
    grid: &Grid<T>,
) -> Result<PositivityCertificate<T>> {
    let values = grid.eval_poly(p)?;
    let p0 = p.coeffs()[0];
    let raw_min = values.min();
    let p_min = if p0 > T::zero() {
        raw_min / p0
    } else {
        raw_min
    };
    let spec = grid.spec();
    let delta = T::from_i64(p.index_set().l1_total()).unwrap();
    let d = T::from_usize(spec.dim()).unwrap();
    let threshold = T::lit(2.0) * T::PI() * d * delta / T::from_usize(spec.min_size()).unwrap();
    Ok(PositivityCertificate {
        p_min,
        delta,
        threshold,
        certified: p0 > T::zero() && threshold < p_min,
    })
}

/// `(P/Q)^ν` on the grid.
pub fn spectrum<T: Scalar>(x: &DualPoint<T>, nu: u32, grid: &Grid<T>) -> Result<GridField<T>> {
    grid.check_aliasing(&x.index_set)?;
    let p = grid.eval_coeffs(&x.index_set, &x.p_coeffs())?;
    let q = grid.eval_coeffs(&x.index_set, &x.q)?;
    let values = p
        .iter()
        .zip(&q)
        .map(|(&a, &b)| (a / b).powi(nu as i32))
        .collect();
    GridField::new(grid.spec().clone(), values)
}
