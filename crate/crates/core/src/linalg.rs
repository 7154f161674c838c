//! Small dense symmetric matrices: Cholesky solves for the Newton system and
//! cyclic Jacobi for eigenvalues.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Square matrix in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..n * n).map(|i| f(i / n, i % n)).collect();
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// `max |A − Aᵀ|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max(Float::abs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, &v| m.max(Float::abs(v)))
    }

    /// Lower Cholesky factor, or `None` when the matrix is not numerically
    /// positive definite.
    pub fn cholesky(&self) -> Option<Cholesky<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Cholesky { n, l })
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.n;
        let half = T::lit(0.5);
        let mut a = Matrix::from_fn(n, |i, j| half * (self.get(i, j) + self.get(j, i)));
        let scale = a.max_abs().max(T::min_positive_value());
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in 0..i {
                    off += a.get(i, j) * a.get(i, j);
                }
            }
            if off.sqrt() <= T::epsilon() * T::lit(1e-2) * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.get(p, q);
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a.get(q, q) - a.get(p, p)) / (apq + apq);
                    let t = Float::signum(theta)
                        / (Float::abs(theta) + (theta * theta + T::one()).sqrt());
                    let t = if theta == T::zero() { T::one() } else { t };
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.get(k, p);
                        let akq = a.get(k, q);
                        a.set(k, p, c * akp - s * akq);
                        a.set(k, q, s * akp + c * akq);
                    }
                    for k in 0..n {
                        let apk = a.get(p, k);
                        let aqk = a.get(q, k);
                        a.set(p, k, c * apk - s * aqk);
                        a.set(q, k, s * apk + c * aqk);
                    }
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    l: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = self.l[i * n + k] * y[k];
                y[i] -= v;
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = self.l[k * n + i] * y[k];
                y[i] -= v;
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_fn(3, |i, j| {
            [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]][i][j]
        });
        let x = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let sol = a.cholesky().unwrap().solve(&b);
        for (u, v) in sol.iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_fn(2, |_, _| 1.0);
        assert!(a.cholesky().is_none());
        let a = Matrix::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn eigenvalues_of_known_matrices() {
        let a = Matrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let ev = a.symmetric_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);

        // tridiagonal (2, -1): λ_k = 2 − 2cos(kπ/(n+1))
        let n = 6;
        let t = Matrix::from_fn(n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let ev = t.symmetric_eigenvalues();
        for (k, e) in ev.iter().enumerate() {
            let want = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((e - want).abs() < 1e-12, "{e} {want}");
        }
    }
}
