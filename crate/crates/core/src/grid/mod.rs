//! The discrete frequency torus `T^d_N`, symmetric trigonometric polynomials
//! and the moment projection `Γ`.
//!
//! Grid point `ℓ = (ℓ_1, …, ℓ_d)`, `0 ≤ ℓ_j < N_j`, sits at frequency
//! `θ_ℓ = (2πℓ_1/N_1, …, 2πℓ_d/N_d)` and carries weight `1/|N|`. Fields are
//! stored row-major (last axis fastest).

mod fft;
mod index;

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub use index::{is_positive_half, IndexSet};

use crate::error::{Error, Result};
use crate::scalar::{grid_mean, Scalar};
use fft::{Direction, FftNd};

/// Shape of the discrete torus.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct GridSpec {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for GridSpec {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        GridSpec::new(dims)
    }
}

impl From<GridSpec> for Vec<usize> {
    fn from(g: GridSpec) -> Self {
        g.dims
    }
}

impl GridSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if let Some(&n) = dims.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidGrid(format!("grid size {n} is below 2")));
        }
        Ok(GridSpec { dims })
    }

    /// `N = (n, …, n)` in `d` dimensions.
    pub fn uniform(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// `|N| = Π N_j`.
    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn min_size(&self) -> usize {
        *self.dims.iter().min().expect("nonempty grid")
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&l, &n)| acc * n + l % n)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for j in (0..self.dims.len()).rev() {
            out[j] = flat % self.dims[j];
            flat /= self.dims[j];
        }
        out
    }

    /// Flat position of a signed multi-index reduced modulo `N`.
    pub fn wrap(&self, k: &[i64]) -> usize {
        k.iter().zip(&self.dims).fold(0, |acc, (&kj, &n)| {
            acc * n + kj.rem_euclid(n as i64) as usize
        })
    }

    /// Flat position of `−ℓ mod N`.
    pub fn mirror(&self, flat: usize) -> usize {
        let m = self.multi_index(flat);
        let neg: Vec<usize> = m
            .iter()
            .zip(&self.dims)
            .map(|(&l, &n)| (n - l) % n)
            .collect();
        self.flat_index(&neg)
    }

    /// Frequency vector of a grid point.
    pub fn theta<T: Scalar>(&self, flat: usize) -> Vec<T> {
        self.multi_index(flat)
            .iter()
            .zip(&self.dims)
            .map(|(&l, &n)| T::TAU() * T::from_usize(l).unwrap() / T::from_usize(n).unwrap())
            .collect()
    }
}

/// Real function sampled on every point of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField<T> {
    spec: GridSpec,
    values: Vec<T>,
}

impl<T: Scalar> GridField<T> {
    pub fn new(spec: GridSpec, values: Vec<T>) -> Result<Self> {
        if values.len() != spec.total() {
            return Err(Error::DimensionMismatch {
                expected: spec.total(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value at grid point {i}"
            )));
        }
        Ok(GridField { spec, values })
    }

    pub fn constant(spec: GridSpec, c: T) -> Self {
        let values = vec![c; spec.total()];
        GridField { spec, values }
    }

    /// Samples `f(θ_ℓ)` at every grid point.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[T]) -> T) -> Result<Self> {
        let values = (0..spec.total()).map(|i| f(&spec.theta::<T>(i))).collect();
        Self::new(spec, values)
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), spec.total());
        GridField { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn get(&self, multi: &[usize]) -> T {
        self.values[self.spec.flat_index(multi)]
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Integral against the uniform discrete measure.
    pub fn mean(&self) -> T {
        grid_mean(&self.values)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GridField {
            spec: self.spec.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::InvalidGrid("fields live on different grids".into()));
        }
        Ok(GridField {
            spec: self.spec.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }
}

/// Symmetric trigonometric polynomial
/// `P(e^{iθ}) = Σ_{k∈Λ} p_k e^{−i⟨k,θ⟩}` with `p_{−k} = p_k`,
/// stored over the half-set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTrigPoly<T> {
    index_set: IndexSet,
    coeffs: Vec<T>,
}

impl<T: Scalar> SymTrigPoly<T> {
    pub fn new(index_set: IndexSet, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != index_set.half_len() {
            return Err(Error::DimensionMismatch {
                expected: index_set.half_len(),
                got: coeffs.len(),
            });
        }
        Ok(SymTrigPoly { index_set, coeffs })
    }

    pub fn constant(index_set: IndexSet, c: T) -> Self {
        let mut coeffs = vec![T::zero(); index_set.half_len()];
        coeffs[0] = c;
        SymTrigPoly { index_set, coeffs }
    }

    pub fn one(index_set: IndexSet) -> Self {
        Self::constant(index_set, T::one())
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.index_set
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Value at one frequency by direct summation, `p_0 + 2 Σ p_k cos⟨k,θ⟩`.
    pub fn value_at(&self, theta: &[T]) -> T {
        let mut acc = self.coeffs[0];
        for (k, &p) in self.index_set.half().iter().zip(&self.coeffs).skip(1) {
            let phase = k
                .iter()
                .zip(theta)
                .fold(T::zero(), |s, (&kj, &t)| s + T::from_i64(kj).unwrap() * t);
            acc += (p + p) * phase.cos();
        }
        acc
    }

    /// `Σ_{k∈Λ} |p_k|`, an upper bound on `max |P|`.
    pub fn abs_sum(&self) -> T {
        Float::abs(self.coeffs[0])
            + T::lit(2.0) * self.coeffs[1..].iter().map(|c| Float::abs(*c)).sum::<T>()
    }
}

/// A grid together with its FFT plans. All evaluation and projection goes
/// through this type.
#[derive(Clone, Debug)]
pub struct Grid<T: Scalar> {
    spec: GridSpec,
    fft: FftNd<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn new(spec: GridSpec) -> Self {
        let fft = FftNd::new(spec.dims());
        Grid { spec, fft }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.total()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_dim(&self, set: &IndexSet) -> Result<()> {
        if set.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: set.dim(),
            });
        }
        Ok(())
    }

    /// Fails when two indices of `Λ` fall on the same grid frequency.
    /// Also warns when some `N_j ≤ 2 max |k_j|`.
    pub fn check_aliasing(&self, set: &IndexSet) -> Result<()> {
        self.check_dim(set)?;
        let mut slots: Vec<Option<Vec<i64>>> = vec![None; self.len()];
        for (k, _) in set.full() {
            let pos = self.spec.wrap(&k);
            if let Some(prev) = &slots[pos] {
                return Err(Error::Aliasing {
                    a: prev.clone(),
                    b: k,
                    dims: self.spec.dims().to_vec(),
                });
            }
            slots[pos] = Some(k);
        }
        for (j, (&m, &n)) in set
            .max_abs_per_axis()
            .iter()
            .zip(self.spec.dims())
            .enumerate()
        {
            if n as i64 <= 2 * m {
                log::warn!("grid size {n} on axis {j} does not exceed twice the largest index {m}");
            }
        }
        Ok(())
    }

    /// Grid values of a symmetric polynomial given by its half-set
    /// coefficients. `Λ` must already be checked against aliasing.
    pub(crate) fn eval_coeffs(&self, set: &IndexSet, coeffs: &[T]) -> Result<Vec<T>> {
        let mut buf = vec![Complex::<T>::default(); self.len()];
        let mut scale = T::zero();
        for (k, j) in set.full() {
            buf[self.spec.wrap(&k)].re += coeffs[j];
            scale += Float::abs(coeffs[j]);
        }
        self.fft.process(&mut buf, Direction::Forward);
        let residue = buf.iter().fold(T::zero(), |m, z| m.max(Float::abs(z.im)));
        let tol = T::lit(T::RESIDUE_TOL) * scale.max(T::min_positive_value());
        if residue > tol {
            return Err(Error::ImaginaryResidue {
                residue: residue.to_f64_lossy(),
                tol: tol.to_f64_lossy(),
            });
        }
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// `P(ζ_ℓ) = Σ_{k∈Λ} p_k ζ_ℓ^{−k}` for every grid point.
    pub fn eval_poly(&self, p: &SymTrigPoly<T>) -> Result<GridField<T>> {
        self.check_aliasing(p.index_set())?;
        let values = self.eval_coeffs(p.index_set(), p.coeffs())?;
        Ok(GridField::from_raw(self.spec.clone(), values))
    }

    /// All discrete Fourier coefficients `(1/|N|) Σ_ℓ ζ_ℓ^{s} f(ζ_ℓ)`,
    /// indexed by the flat position of `s mod N`.
    pub(crate) fn moment_spectrum(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut buf: Vec<Complex<T>> = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.fft.process(&mut buf, Direction::Inverse);
        let inv = T::one() / T::from_usize(self.len()).unwrap();
        for z in &mut buf {
            *z = z.scale(inv);
        }
        buf
    }

    /// Real parts of `Γ_k(f)` over the half-set plus the largest discarded
    /// imaginary part.
    pub fn project_with_residue(&self, f: &GridField<T>, set: &IndexSet) -> Result<(Vec<T>, T)> {
        self.check_dim(set)?;
        if f.spec() != &self.spec {
            return Err(Error::InvalidGrid("field lives on a different grid".into()));
        }
        let spec = self.moment_spectrum(f.values());
        let mut residue = T::zero();
        let out = set
            .half()
            .iter()
            .map(|k| {
                let z = spec[self.spec.wrap(k)];
                residue = residue.max(Float::abs(z.im));
                z.re
            })
            .collect();
        Ok((out, residue))
    }

    /// `Γ(f)` over the half-set, zero index first.
    ///
    /// For a field that is not symmetric under `ℓ → −ℓ` this is the real part,
    /// i.e. the pairing of `f` with `cos⟨k,θ⟩`.
    pub fn project_moments(&self, f: &GridField<T>, set: &IndexSet) -> Result<Vec<T>> {
        Ok(self.project_with_residue(f, set)?.0)
    }

    /// `Γ_0(f)`: as [`Grid::project_moments`] without the zero index.
    pub fn project_moments_nonzero(&self, f: &GridField<T>, set: &IndexSet) -> Result<Vec<T>> {
        let mut v = self.project_moments(f, set)?;
        v.remove(0);
        Ok(v)
    }
}
