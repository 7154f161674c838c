//! Covariances, ν-cepstral coefficients, ν-entropy and α-divergence of
//! spectra sampled on a grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridField, IndexSet};
use crate::linalg::Matrix;
use crate::scalar::{grid_mean, Scalar};

const NEGATIVE_SPECTRUM_TOL: f64 = 1e-12;

/// Moment data for the estimation problem.
///
/// `c` is stored over the half-set (`c_0` first), `m` over the half-set
/// without the zero index. `m_0` is never stored; every pairing `⟨p, m⟩`
/// treats it as zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentData<T> {
    pub index_set: IndexSet,
    pub c: Vec<T>,
    pub m: Vec<T>,
    pub nu: u32,
    pub lambda: T,
}

impl<T: Scalar> MomentData<T> {
    pub fn new(index_set: IndexSet, c: Vec<T>, m: Vec<T>, nu: u32, lambda: T) -> Result<Self> {
        let data = MomentData {
            index_set,
            c,
            m,
            nu,
            lambda,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.index_set.half_len();
        if self.c.len() != h {
            return Err(Error::InvalidMoments(format!(
                "expected {h} covariances, got {}",
                self.c.len()
            )));
        }
        if self.m.len() != h - 1 {
            return Err(Error::InvalidMoments(format!(
                "expected {} cepstral coefficients, got {}",
                h - 1,
                self.m.len()
            )));
        }
        if self.c.iter().chain(&self.m).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMoments("non-finite moment".into()));
        }
        if !(self.c[0] > T::zero()) {
            return Err(Error::InvalidMoments(format!(
                "c_0 must be positive, got {}",
                self.c[0]
            )));
        }
        if self.nu < 2 {
            return Err(Error::InvalidMoments(format!(
                "integer order must be at least 2, got {}",
                self.nu
            )));
        }
        if !(self.lambda >= T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidMoments(format!(
                "regularization must be finite and nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        MomentData {
            lambda,
            ..self.clone()
        }
    }

    /// Data of a white spectrum `Φ ≡ c_0`: all other moments zero.
    pub fn white_noise(index_set: IndexSet, c0: T, nu: u32, lambda: T) -> Result<Self> {
        let h = index_set.half_len();
        let mut c = vec![T::zero(); h];
        c[0] = c0;
        Self::new(index_set, c, vec![T::zero(); h - 1], nu, lambda)
    }
}

fn check_nonnegative<T: Scalar>(phi: &GridField<T>) -> Result<()> {
    let tol = T::lit(NEGATIVE_SPECTRUM_TOL);
    match phi.values().iter().position(|&v| v < -tol) {
        Some(index) => Err(Error::NegativeSpectrum {
            index,
            value: phi.values()[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

/// `Φ^{(ν−1)/ν}` computed as `exp(((ν−1)/ν)·log Φ)`, zero at `Φ ≤ 0`.
pub fn fractional_power<T: Scalar>(phi: T, nu: u32) -> T {
    if phi <= T::zero() {
        return T::zero();
    }
    let nu_t = T::from_u32(nu).unwrap();
    ((nu_t - T::one()) / nu_t * phi.ln()).exp()
}

/// `c_k = (1/|N|) Σ_ℓ ζ_ℓ^k Φ(ζ_ℓ)` for `k` in the half-set.
pub fn covariances_from_spectrum<T: Scalar>(
    grid: &Grid<T>,
    phi: &GridField<T>,
    index_set: &IndexSet,
) -> Result<Vec<T>> {
    check_nonnegative(phi)?;
    grid.project_moments(phi, index_set)
}

/// `m_k = (ν/(ν−1)) (1/|N|) Σ_ℓ ζ_ℓ^k Φ(ζ_ℓ)^{(ν−1)/ν}` for nonzero `k` in the half-set.
pub fn nu_cepstral_from_spectrum<T: Scalar>(
    grid: &Grid<T>,
    phi: &GridField<T>,
    index_set: &IndexSet,
    nu: u32,
) -> Result<Vec<T>> {
    check_order(nu)?;
    check_nonnegative(phi)?;
    let powered = phi.map(|v| fractional_power(v, nu));
    let factor = nu_ratio::<T>(nu);
    Ok(grid
        .project_moments_nonzero(&powered, index_set)?
        .into_iter()
        .map(|v| factor * v)
        .collect())
}

/// `H_ν(Φ) = (ν²/(ν−1)) (mean Φ^{(ν−1)/ν} − 1)`.
pub fn nu_entropy<T: Scalar>(phi: &GridField<T>, nu: u32) -> Result<T> {
    check_order(nu)?;
    check_nonnegative(phi)?;
    let powered: Vec<T> = phi
        .values()
        .iter()
        .map(|&v| fractional_power(v, nu))
        .collect();
    let nu_t = T::from_u32(nu).unwrap();
    Ok(nu_t * nu_t / (nu_t - T::one()) * (grid_mean(&powered) - T::one()))
}

/// `ν/(ν−1)`.
pub(crate) fn nu_ratio<T: Scalar>(nu: u32) -> T {
    let nu_t = T::from_u32(nu).unwrap();
    nu_t / (nu_t - T::one())
}

fn check_order(nu: u32) -> Result<()> {
    if nu < 2 {
        return Err(Error::InvalidMoments(format!(
            "integer order must be at least 2, got {nu}"
        )));
    }
    Ok(())
}

/// `Φ log(Φ/Ψ) − Φ + Ψ` with `0·log 0 = 0`.
fn kl_term<T: Scalar>(phi: T, psi: T) -> Result<T> {
    if phi == T::zero() {
        return Ok(psi);
    }
    if psi <= T::zero() {
        return Err(Error::Divergence(format!(
            "reference vanishes where the spectrum is {phi}"
        )));
    }
    Ok(phi * (phi / psi).ln() - phi + psi)
}

/// α-divergence `D_α(Φ‖Ψ)` under the uniform grid measure. The α = 0 and
/// α = 1 branches are the two Kullback–Leibler forms.
pub fn alpha_divergence<T: Scalar>(phi: &GridField<T>, psi: &GridField<T>, alpha: T) -> Result<T> {
    if phi.spec() != psi.spec() {
        return Err(Error::InvalidGrid("fields live on different grids".into()));
    }
    check_nonnegative(phi)?;
    check_nonnegative(psi)?;
    let pairs = phi.values().iter().zip(psi.values());
    let terms: Vec<T> = if alpha == T::one() {
        pairs.map(|(&a, &b)| kl_term(a, b)).collect::<Result<_>>()?
    } else if alpha == T::zero() {
        pairs.map(|(&a, &b)| kl_term(b, a)).collect::<Result<_>>()?
    } else {
        let one = T::one();
        let mixed = one / (alpha * (alpha - one));
        let wa = one / (one - alpha);
        let wb = one / alpha;
        pairs
            .map(|(&a, &b)| {
                let a = a.max(T::zero());
                let b = b.max(T::zero());
                let cross = a.powf(alpha) * b.powf(one - alpha);
                if !cross.is_finite() {
                    return Err(Error::Divergence(format!(
                        "Φ^α Ψ^(1−α) is undefined at Φ = {a}, Ψ = {b}"
                    )));
                }
                Ok(mixed * cross + wa * a + wb * b)
            })
            .collect::<Result<_>>()?
    };
    Ok(grid_mean(&terms))
}

/// Outcome of the one-dimensional Toeplitz feasibility test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToeplitzCheck<T> {
    pub feasible: bool,
    pub min_eigenvalue: T,
}

/// Positive definiteness of the `(n+1)×(n+1)` Toeplitz matrix built from
/// `c_0, …, c_n`. Only defined for `Λ = {−n, …, n}` in one dimension.
pub fn toeplitz_feasibility_1d<T: Scalar>(
    index_set: &IndexSet,
    c: &[T],
) -> Result<ToeplitzCheck<T>> {
    if index_set.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: index_set.dim(),
        });
    }
    let n = index_set.half_len() - 1;
    if *index_set != IndexSet::box_set(&[n])? {
        return Err(Error::InvalidIndexSet(
            "Toeplitz test needs a contiguous lag set {-n..n}".into(),
        ));
    }
    if c.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n + 1,
            got: c.len(),
        });
    }
    let lag = |k: usize| -> T {
        let pos = index_set.position(&[k as i64]).expect("contiguous lag set");
        c[pos]
    };
    let t = Matrix::from_fn(n + 1, |i, j| lag(i.abs_diff(j)));
    let min_eigenvalue = t.symmetric_eigenvalues()[0];
    let feasible = t.cholesky().is_some() && min_eigenvalue > T::zero();
    Ok(ToeplitzCheck {
        feasible,
        min_eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, SymTrigPoly};
    use num_traits::Float;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid4() -> (GridSpec, Grid<f64>) {
        let spec = GridSpec::new(vec![4]).unwrap();
        (spec.clone(), Grid::new(spec))
    }

    fn example_field(spec: &GridSpec) -> GridField<f64> {
        GridField::new(spec.clone(), vec![4.0, 2.0, 0.0, 2.0]).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let (spec, grid) = grid4();
        let set = IndexSet::box_set(&[1]).unwrap();
        let c = covariances_from_spectrum(&grid, &GridField::constant(spec.clone(), 1.0), &set)
            .unwrap();
        assert_eq!(c, vec![1.0, 0.0]);
        let c = covariances_from_spectrum(&grid, &GridField::constant(spec.clone(), 3.5), &set)
            .unwrap();
        assert!((c[0] - 3.5).abs() < 1e-15 && c[1].abs() < 1e-15);
        let c = covariances_from_spectrum(&grid, &example_field(&spec), &set).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-15 && (c[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_spectrum_rejected() {
        let (spec, grid) = grid4();
        let set = IndexSet::box_set(&[1]).unwrap();
        let bad = GridField::new(spec, vec![1.0, -1e-6, 1.0, 1.0]).unwrap();
        assert!(matches!(
            covariances_from_spectrum(&grid, &bad, &set),
            Err(Error::NegativeSpectrum { index: 1, .. })
        ));
    }

    #[test]
    fn cepstral_examples() {
        let (spec, grid) = grid4();
        let set = IndexSet::box_set(&[1]).unwrap();
        let m = nu_cepstral_from_spectrum(&grid, &GridField::constant(spec.clone(), 7.0), &set, 3)
            .unwrap();
        assert!(m.iter().all(|v| v.abs() < 1e-14));
        // Σ √Φ ζ^1 = 2·1 + √2·i + 0 − √2·i, so m_1 = 2·(1/4)·2 = 1
        let m = nu_cepstral_from_spectrum(&grid, &example_field(&spec), &set, 2).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-14, "{m:?}");
        assert!(nu_cepstral_from_spectrum(&grid, &example_field(&spec), &set, 1).is_err());
    }

    #[test]
    fn cepstral_order_two_is_twice_projection_of_sqrt() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = GridSpec::new(vec![5, 6]).unwrap();
        let grid = Grid::<f64>::new(spec.clone());
        let set = IndexSet::box_set(&[1, 2]).unwrap();
        for _ in 0..10 {
            let vals: Vec<f64> = (0..spec.total()).map(|_| rng.gen_range(0.0..3.0)).collect();
            let phi = GridField::new(spec.clone(), vals).unwrap();
            let m = nu_cepstral_from_spectrum(&grid, &phi, &set, 2).unwrap();
            let root = grid
                .project_moments_nonzero(&phi.map(f64::sqrt), &set)
                .unwrap();
            for (a, b) in m.iter().zip(&root) {
                assert!((a - 2.0 * b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cepstra_of_rational_spectrum_match_polynomial_ratio() {
        let spec = GridSpec::new(vec![7, 8]).unwrap();
        let grid = Grid::<f64>::new(spec.clone());
        let set = IndexSet::box_set(&[1, 1]).unwrap();
        let p = SymTrigPoly::new(set.clone(), vec![1.0, 0.1, -0.15, 0.05, 0.12]).unwrap();
        let q = SymTrigPoly::new(set.clone(), vec![2.0, -0.3, 0.2, 0.1, 0.25]).unwrap();
        let pv = grid.eval_poly(&p).unwrap();
        let qv = grid.eval_poly(&q).unwrap();
        for nu in [2u32, 3, 4] {
            let ratio = pv.zip_with(&qv, |a, b| a / b).unwrap();
            let phi = ratio.map(|r| r.powi(nu as i32));
            let m = nu_cepstral_from_spectrum(&grid, &phi, &set, nu).unwrap();
            let direct = grid
                .project_moments_nonzero(&ratio.map(|r| r.powi(nu as i32 - 1)), &set)
                .unwrap();
            let factor = nu as f64 / (nu as f64 - 1.0);
            for (a, b) in m.iter().zip(&direct) {
                assert!((a - factor * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_examples() {
        let spec = GridSpec::new(vec![3, 3]).unwrap();
        for nu in [2, 3, 5] {
            assert!(
                nu_entropy(&GridField::constant(spec.clone(), 1.0), nu)
                    .unwrap()
                    .abs()
                    < 1e-15
            );
            let lower = nu_entropy(&GridField::constant(spec.clone(), 0.0), nu).unwrap();
            let nf = nu as f64;
            assert!((lower + nf * nf / (nf - 1.0)).abs() < 1e-14);
        }
        let h = nu_entropy(&GridField::constant(spec, 4.0), 2).unwrap();
        assert!((h - 4.0).abs() < 1e-14);
    }

    #[test]
    fn entropy_is_nonpositive_for_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = GridSpec::new(vec![4, 5]).unwrap();
        for _ in 0..50 {
            let vals: Vec<f64> = (0..spec.total())
                .map(|_| rng.gen_range(0.01..5.0))
                .collect();
            let phi = GridField::new(spec.clone(), vals).unwrap();
            let mean = phi.mean();
            let phi = phi.map(|v| v / mean);
            for nu in [2, 3, 6] {
                assert!(nu_entropy(&phi, nu).unwrap() <= 1e-14);
            }
        }
    }

    #[test]
    fn divergence_examples() {
        let spec = GridSpec::new(vec![3]).unwrap();
        let ones = GridField::constant(spec.clone(), 1.0);
        let four = GridField::constant(spec.clone(), 4.0);
        assert!(alpha_divergence(&ones, &ones, 1.0).unwrap().abs() < 1e-15);
        let d = alpha_divergence(&four, &ones, 0.5).unwrap();
        assert!((d - 2.0).abs() < 1e-14, "{d}");
        // KL branches
        let d1 = alpha_divergence(&four, &ones, 1.0).unwrap();
        assert!((d1 - (4.0 * 4f64.ln() - 3.0)).abs() < 1e-14);
        let d0 = alpha_divergence(&four, &ones, 0.0).unwrap();
        assert!((d0 - (-(4f64.ln()) + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn divergence_zero_conventions() {
        let spec = GridSpec::new(vec![2]).unwrap();
        let phi = GridField::new(spec.clone(), vec![0.0, 1.0]).unwrap();
        let psi = GridField::new(spec.clone(), vec![1.0, 1.0]).unwrap();
        // 0·log 0 = 0 leaves Ψ at the zero
        let d = alpha_divergence(&phi, &psi, 1.0).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        // reference vanishing under positive spectrum is an error
        assert!(alpha_divergence(&psi, &phi, 1.0).is_err());
        assert!(alpha_divergence(&phi, &psi, 0.0).is_err());
        assert!(alpha_divergence(&psi, &phi, 0.0).is_ok());
    }

    #[test]
    fn divergence_is_nonnegative_and_vanishes_on_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = GridSpec::new(vec![4, 4]).unwrap();
        for _ in 0..40 {
            let a: Vec<f64> = (0..16).map(|_| rng.gen_range(0.05..4.0)).collect();
            let b: Vec<f64> = (0..16).map(|_| rng.gen_range(0.05..4.0)).collect();
            let phi = GridField::new(spec.clone(), a).unwrap();
            let psi = GridField::new(spec.clone(), b).unwrap();
            for alpha in [0.0, 0.25, 0.5, 1.0 - 1.0 / 3.0, 1.0, -1.0] {
                assert!(alpha_divergence(&phi, &psi, alpha).unwrap() >= -1e-12);
                assert!(alpha_divergence(&phi, &phi, alpha).unwrap().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn toeplitz_examples() {
        let set = IndexSet::box_set(&[1]).unwrap();
        let r = toeplitz_feasibility_1d(&set, &[1.0, 0.0]).unwrap();
        assert!(r.feasible && (r.min_eigenvalue - 1.0).abs() < 1e-14);
        let r = toeplitz_feasibility_1d(&set, &[1.0, 1.0]).unwrap();
        assert!(!r.feasible && r.min_eigenvalue.abs() < 1e-14);
        let r = toeplitz_feasibility_1d(&set, &[2.0, 1.0]).unwrap();
        assert!(r.feasible && (r.min_eigenvalue - 1.0).abs() < 1e-14);
        let set2 = IndexSet::box_set(&[1, 1]).unwrap();
        assert!(toeplitz_feasibility_1d(&set2, &[1.0; 5]).is_err());
    }

    #[test]
    fn toeplitz_of_true_covariances_is_feasible() {
        let spec = GridSpec::new(vec![32]).unwrap();
        let grid = Grid::<f64>::new(spec.clone());
        let set = IndexSet::box_set(&[4]).unwrap();
        let phi = GridField::from_fn(spec, |th: &[f64]| 1.0 / (1.25 - th[0].cos())).unwrap();
        let c = covariances_from_spectrum(&grid, &phi, &set).unwrap();
        assert!(toeplitz_feasibility_1d(&set, &c).unwrap().feasible);
    }

    #[test]
    fn moment_data_validation() {
        let set = IndexSet::box_set(&[1]).unwrap();
        assert!(MomentData::new(set.clone(), vec![1.0, 0.1], vec![0.2], 2, 0.1).is_ok());
        assert!(MomentData::new(set.clone(), vec![0.0, 0.1], vec![0.2], 2, 0.1).is_err());
        assert!(MomentData::new(set.clone(), vec![1.0], vec![0.2], 2, 0.1).is_err());
        assert!(MomentData::new(set.clone(), vec![1.0, 0.1], vec![], 2, 0.1).is_err());
        assert!(MomentData::new(set.clone(), vec![1.0, 0.1], vec![0.2], 1, 0.1).is_err());
        assert!(MomentData::new(set, vec![1.0, 0.1], vec![0.2], 2, -1.0).is_err());
    }
}
