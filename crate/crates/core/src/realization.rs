//! ARMA ground-truth models `W = (b/a)^ν` with degree-one filters, moment
//! generation from their spectra, and the experiment drivers built on the
//! solver: λ-sweeps, grid refinement and entropy curves.
//!
//! A filter `a = [a_0, …, a_d]` stands for `a(z) = a_0 − Σ_j a_j z_j^{−1}`,
//! so its taps are `a_0` at the zero index and `−a_j` at `e_j`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{spectrum, DualPoint};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, GridSpec, IndexSet, SymTrigPoly};
use crate::moments::{covariances_from_spectrum, nu_cepstral_from_spectrum, MomentData};
use crate::scalar::Scalar;
use crate::solver::{solve, SolveOptions, SolveReport};

const FILTER_RESIDUE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel<T> {
    pub dim: usize,
    /// Denominator, `a_0 = 1`.
    pub a: Vec<Complex<T>>,
    /// Numerator, `‖b‖ = 1`.
    pub b: Vec<Complex<T>>,
    pub nu: u32,
}

/// Filter coefficients from moduli and phases, the phases in units of π.
pub fn polar_filter<T: Scalar>(abs: &[T], angle_over_pi: &[T]) -> Result<Vec<Complex<T>>> {
    if abs.len() != angle_over_pi.len() {
        return Err(Error::InvalidModel(format!(
            "{} moduli but {} angles",
            abs.len(),
            angle_over_pi.len()
        )));
    }
    Ok(abs
        .iter()
        .zip(angle_over_pi)
        .map(|(&r, &t)| Complex::from_polar(r, t * T::PI()))
        .collect())
}

fn normalize<T: Scalar>(b: &[Complex<T>]) -> Vec<Complex<T>> {
    let norm = b.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    b.iter().map(|z| z.unscale(norm)).collect()
}

impl<T: Scalar> ArmaModel<T> {
    pub fn new(a: Vec<Complex<T>>, b: Vec<Complex<T>>, nu: u32) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidModel(
                "filters need at least two coefficients".into(),
            ));
        }
        if a.len() != b.len() {
            return Err(Error::InvalidModel(format!(
                "denominator has {} coefficients, numerator {}",
                a.len(),
                b.len()
            )));
        }
        if nu < 2 {
            return Err(Error::InvalidModel(format!(
                "integer order must be at least 2, got {nu}"
            )));
        }
        // 1e−12 in double precision, a few ulps in narrower types
        let tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon());
        if (a[0] - Complex::new(T::one(), T::zero())).norm() > tol {
            return Err(Error::InvalidModel(format!("a_0 must be 1, got {}", a[0])));
        }
        let bn: T = b.iter().map(|z| z.norm_sqr()).sum();
        if num_traits::Float::abs(bn - T::one()) > tol {
            return Err(Error::InvalidModel(format!("‖b‖² must be 1, got {bn}")));
        }
        Ok(ArmaModel {
            dim: a.len() - 1,
            a,
            b,
            nu,
        })
    }

    /// As [`ArmaModel::new`] with `b` rescaled to unit norm first.
    pub fn with_normalized_numerator(
        a: Vec<Complex<T>>,
        b: Vec<Complex<T>>,
        nu: u32,
    ) -> Result<Self> {
        if b.iter().all(|z| z.norm_sqr() == T::zero()) {
            return Err(Error::InvalidModel("numerator is identically zero".into()));
        }
        let b = normalize(&b);
        Self::new(a, b, nu)
    }

    fn three_d(b_abs: [f64; 4]) -> Self {
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let a = polar_filter(&lit(&[1.0, 0.3, 0.3, 0.3]), &lit(&[0.0; 4])).unwrap();
        let b = polar_filter(&lit(&b_abs), &lit(&[0.0, 1.0, 1.0, 1.0])).unwrap();
        Self::with_normalized_numerator(a, b, 2).unwrap()
    }

    /// Three-dimensional model with a strictly positive numerator.
    pub fn zeroless_3d() -> Self {
        Self::three_d([1.0, 0.2, 0.3, 0.4])
    }

    /// Three-dimensional model whose numerator vanishes at `(π, π, π)`.
    pub fn with_zero_3d() -> Self {
        Self::three_d([1.0, 0.2, 0.3, 0.5])
    }

    /// Two-dimensional model with a strictly positive numerator.
    pub fn planar() -> Self {
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<T>>();
        let a = polar_filter(&lit(&[1.0, 0.3, 0.3]), &lit(&[0.0; 3])).unwrap();
        let b = polar_filter(&lit(&[1.0, 0.2, 0.3]), &lit(&[0.0, 1.0, 1.0])).unwrap();
        Self::with_normalized_numerator(a, b, 2).unwrap()
    }

    /// `a = b = (1, 0, …, 0)`: a flat unit spectrum.
    pub fn white(dim: usize, nu: u32) -> Result<Self> {
        let mut unit = vec![Complex::new(T::zero(), T::zero()); dim + 1];
        unit[0] = Complex::new(T::one(), T::zero());
        Self::new(unit.clone(), unit, nu)
    }

    /// `Λ = Λ_+ − Λ_+` with `Λ_+ = {0, e_1, …, e_d}`.
    pub fn index_set(&self) -> IndexSet {
        IndexSet::difference_set(&support(self.dim)).expect("nonempty support")
    }

    pub fn p_poly(&self, set: &IndexSet) -> Result<SymTrigPoly<T>> {
        poly_from_filter(&self.b, set)
    }

    pub fn q_poly(&self, set: &IndexSet) -> Result<SymTrigPoly<T>> {
        poly_from_filter(&self.a, set)
    }

    /// The model's own `(p, q)` as a dual point over [`ArmaModel::index_set`].
    pub fn true_point(&self) -> Result<DualPoint<T>> {
        let set = self.index_set();
        let p = self.p_poly(&set)?.into_coeffs();
        let q = self.q_poly(&set)?.into_coeffs();
        DualPoint::new(set, p[1..].to_vec(), q)
    }
}

fn support(dim: usize) -> Vec<Vec<i64>> {
    let mut out = vec![vec![0; dim]];
    for j in 0..dim {
        let mut e = vec![0; dim];
        e[j] = 1;
        out.push(e);
    }
    out
}

fn taps<T: Scalar>(coeffs: &[Complex<T>]) -> Vec<(Vec<i64>, Complex<T>)> {
    let dim = coeffs.len() - 1;
    support(dim)
        .into_iter()
        .zip(coeffs)
        .enumerate()
        .map(|(j, (k, &c))| (k, if j == 0 { c } else { -c }))
        .collect()
}

/// `|h(e^{iθ})|²` as a symmetric polynomial: the coefficient at `s` is
/// `Σ h_j conj(h_j')` over tap pairs with index difference `s`.
pub fn poly_from_filter<T: Scalar>(
    coeffs: &[Complex<T>],
    set: &IndexSet,
) -> Result<SymTrigPoly<T>> {
    if coeffs.len() != set.dim() + 1 {
        return Err(Error::DimensionMismatch {
            expected: set.dim() + 1,
            got: coeffs.len(),
        });
    }
    let taps = taps(coeffs);
    let mut acc = vec![Complex::new(T::zero(), T::zero()); set.half_len()];
    for (kj, hj) in &taps {
        for (kl, hl) in &taps {
            let s: Vec<i64> = kj.iter().zip(kl).map(|(x, y)| x - y).collect();
            let Some(pos) = set.position(&s) else {
                return Err(Error::InvalidIndexSet(format!(
                    "index set lacks the filter lag {s:?}"
                )));
            };
            // only one of ±s is the stored representative
            if set.half()[pos] == s {
                acc[pos] += *hj * hl.conj();
            }
        }
    }
    let tol = T::lit(FILTER_RESIDUE_TOL);
    let residue = acc
        .iter()
        .fold(T::zero(), |m, z| m.max(num_traits::Float::abs(z.im)));
    if residue >= tol {
        return Err(Error::ImaginaryResidue {
            residue: residue.to_f64_lossy(),
            tol: FILTER_RESIDUE_TOL,
        });
    }
    SymTrigPoly::new(set.clone(), acc.into_iter().map(|z| z.re).collect())
}

/// `h(e^{iθ}) = Σ_k h_k e^{−i⟨k,θ⟩}` by direct summation.
pub fn filter_response<T: Scalar>(coeffs: &[Complex<T>], theta: &[T]) -> Complex<T> {
    taps(coeffs)
        .into_iter()
        .map(|(k, h)| {
            let phase: T = k
                .iter()
                .zip(theta)
                .map(|(&kj, &t)| T::from_i64(kj).unwrap() * t)
                .sum();
            h * Complex::from_polar(T::one(), -phase)
        })
        .sum()
}

/// `(|b|²/|a|²)^ν` on the grid, from direct filter evaluation so that
/// spectral zeros keep their full dynamic range.
pub fn true_spectrum<T: Scalar>(model: &ArmaModel<T>, spec: &GridSpec) -> Result<GridField<T>> {
    if spec.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            got: spec.dim(),
        });
    }
    let mut values = Vec::with_capacity(spec.total());
    for i in 0..spec.total() {
        let theta = spec.theta::<T>(i);
        let q = filter_response(&model.a, &theta).norm_sqr();
        if !(q > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "denominator vanishes at grid point {:?}",
                spec.multi_index(i)
            )));
        }
        let p = filter_response(&model.b, &theta).norm_sqr();
        values.push((p / q).powi(model.nu as i32));
    }
    GridField::new(spec.clone(), values)
}

/// Covariances and ν-cepstral coefficients of the model's grid spectrum.
pub fn model_moments<T: Scalar>(
    model: &ArmaModel<T>,
    grid: &Grid<T>,
    lambda: T,
) -> Result<MomentData<T>> {
    let set = model.index_set();
    grid.check_aliasing(&set)?;
    let phi = true_spectrum(model, grid.spec())?;
    let c = covariances_from_spectrum(grid, &phi, &set)?;
    let m = nu_cepstral_from_spectrum(grid, &phi, &set, model.nu)?;
    MomentData::new(set, c, m, model.nu, lambda)
}

/// Spectrum values along one grid axis through a fixed point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSection<T> {
    pub axis: usize,
    /// Zero-based grid point the line passes through.
    pub through: Vec<usize>,
    pub truth: Vec<T>,
    /// One row per λ, in sweep order.
    pub reconstructed: Vec<Vec<T>>,
}

fn line<T: Scalar>(field: &GridField<T>, axis: usize, through: &[usize]) -> Vec<T> {
    let n = field.spec().dims()[axis];
    (0..n)
        .map(|i| {
            let mut at = through.to_vec();
            at[axis] = i;
            field.get(&at)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult<T> {
    pub lambdas: Vec<T>,
    /// `‖(p̂, q̂) − (p, q)‖₂` per λ.
    pub errors: Vec<T>,
    pub entropies: Vec<T>,
    pub cov_residuals: Vec<T>,
    /// `max_k |ε_k|` per λ.
    pub max_eps: Vec<T>,
    pub solutions: Vec<DualPoint<T>>,
    pub reports: Vec<SolveReport<T>>,
    pub cross_sections: Vec<CrossSection<T>>,
}

impl<T> ExperimentResult<T> {
    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

/// Solves the model's moment problem for each λ. Points run in parallel;
/// results keep the order of `lambdas`. Cross-sections along every axis
/// through `section_through` (zero-based) are recorded when it is given.
pub fn lambda_sweep<T: Scalar>(
    model: &ArmaModel<T>,
    spec: &GridSpec,
    lambdas: &[T],
    opts: &SolveOptions<T>,
    section_through: Option<&[usize]>,
) -> Result<ExperimentResult<T>> {
    if let Some(&bad) = lambdas.iter().find(|&&l| !(l > T::zero())) {
        return Err(Error::InvalidMoments(format!(
            "sweep values of λ must be positive, got {bad}"
        )));
    }
    if let Some(at) = section_through {
        if at.len() != spec.dim() || at.iter().zip(spec.dims()).any(|(&i, &n)| i >= n) {
            return Err(Error::InvalidGrid(format!(
                "cross-section point {at:?} is off the grid"
            )));
        }
    }
    let grid = Grid::new(spec.clone());
    let base = model_moments(model, &grid, lambdas.first().copied().unwrap_or(T::one()))?;
    let truth = model.true_point()?;
    let solved: Vec<(DualPoint<T>, SolveReport<T>)> = lambdas
        .par_iter()
        .map(|&lambda| solve(&base.with_lambda(lambda), &grid, opts))
        .collect::<Result<_>>()?;

    let mut result = ExperimentResult {
        lambdas: lambdas.to_vec(),
        errors: Vec::new(),
        entropies: Vec::new(),
        cov_residuals: Vec::new(),
        max_eps: Vec::new(),
        solutions: Vec::new(),
        reports: Vec::new(),
        cross_sections: Vec::new(),
    };
    for (x, report) in &solved {
        result.errors.push(x.distance(&truth));
        result.entropies.push(report.verification.entropy);
        result.cov_residuals.push(report.verification.cov_residual);
        result.max_eps.push(
            report
                .verification
                .eps_certificate
                .iter()
                .fold(T::zero(), |m, &e| m.max(num_traits::Float::abs(e))),
        );
    }
    if let Some(at) = section_through {
        let true_field = true_spectrum(model, spec)?;
        let fields: Vec<GridField<T>> = solved
            .iter()
            .map(|(x, _)| spectrum(x, model.nu, &grid))
            .collect::<Result<_>>()?;
        for axis in 0..spec.dim() {
            result.cross_sections.push(CrossSection {
                axis,
                through: at.to_vec(),
                truth: line(&true_field, axis, at),
                reconstructed: fields.iter().map(|f| line(f, axis, at)).collect(),
            });
        }
    }
    let (solutions, reports) = solved.into_iter().unzip();
    result.solutions = solutions;
    result.reports = reports;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable<T> {
    pub sizes: Vec<usize>,
    pub solutions: Vec<DualPoint<T>>,
    pub reports: Vec<SolveReport<T>>,
    /// `‖x(N_i) − x(N_{i+1})‖₂`.
    pub distances: Vec<T>,
}

/// Solves on the uniform grids `N^d` for each size, with moments recomputed
/// from the model on every grid.
pub fn grid_convergence<T: Scalar>(
    model: &ArmaModel<T>,
    sizes: &[usize],
    lambda: T,
    opts: &SolveOptions<T>,
) -> Result<ConvergenceTable<T>> {
    if 2 * (model.nu as usize) < model.dim + 2 {
        log::warn!(
            "ν = {} is below d/2 + 1 = {}: the continuous limit is not guaranteed to exist",
            model.nu,
            model.dim as f64 / 2.0 + 1.0
        );
    }
    let solved: Vec<(DualPoint<T>, SolveReport<T>)> = sizes
        .par_iter()
        .map(|&n| {
            let grid = Grid::new(GridSpec::uniform(model.dim, n)?);
            let data = model_moments(model, &grid, lambda)?;
            solve(&data, &grid, opts)
        })
        .collect::<Result<_>>()?;
    let distances = solved
        .windows(2)
        .map(|w| w[0].0.distance(&w[1].0))
        .collect();
    let (solutions, reports) = solved.into_iter().unzip();
    Ok(ConvergenceTable {
        sizes: sizes.to_vec(),
        solutions,
        reports,
        distances,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyCurve<T> {
    pub lambdas: Vec<T>,
    pub entropies: Vec<T>,
    /// `‖p̂‖₂` of the free numerator coefficients.
    pub p_norms: Vec<T>,
    pub reports: Vec<SolveReport<T>>,
    /// Difference quotient of the entropy between the two smallest λ.
    pub slope_near_zero: Option<T>,
}

/// ν-entropy of the solution as a function of λ for fixed moments.
pub fn entropy_curve<T: Scalar>(
    data: &MomentData<T>,
    grid: &Grid<T>,
    lambdas: &[T],
    opts: &SolveOptions<T>,
) -> Result<EntropyCurve<T>> {
    let solved: Vec<(DualPoint<T>, SolveReport<T>)> = lambdas
        .par_iter()
        .map(|&lambda| solve(&data.with_lambda(lambda), grid, opts))
        .collect::<Result<_>>()?;
    let entropies: Vec<T> = solved.iter().map(|(_, r)| r.verification.entropy).collect();
    let p_norms = solved
        .iter()
        .map(|(x, _)| x.p.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&i, &j| {
        lambdas[i]
            .partial_cmp(&lambdas[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let slope_near_zero = match order.as_slice() {
        [i, j, ..] if lambdas[*j] > lambdas[*i] => {
            Some((entropies[*j] - entropies[*i]) / (lambdas[*j] - lambdas[*i]))
        }
        _ => None,
    };
    Ok(EntropyCurve {
        lambdas: lambdas.to_vec(),
        entropies,
        p_norms,
        reports: solved.into_iter().map(|(_, r)| r).collect(),
        slope_near_zero,
    })
}
