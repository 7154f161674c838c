use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Scalar;

/// Unnormalized multidimensional DFT over a row-major buffer, applied one
/// axis at a time.
#[derive(Clone)]
pub(crate) struct FftNd<T: Scalar> {
    dims: Vec<usize>,
    forward: Vec<Arc<dyn Fft<T>>>,
    inverse: Vec<Arc<dyn Fft<T>>>,
}

impl<T: Scalar> fmt::Debug for FftNd<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftNd").field("dims", &self.dims).finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    /// `X[ℓ] = Σ_n x[n] e^{−2πi⟨n,ℓ⟩/N}`
    Forward,
    /// `X[ℓ] = Σ_n x[n] e^{+2πi⟨n,ℓ⟩/N}`
    Inverse,
}

impl<T: Scalar> FftNd<T> {
    pub(crate) fn new(dims: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let forward = dims.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        FftNd {
            dims: dims.to_vec(),
            forward,
            inverse,
        }
    }

    pub(crate) fn process(&self, buf: &mut [Complex<T>], dir: Direction) {
        let total: usize = self.dims.iter().product();
        assert_eq!(buf.len(), total, "buffer does not match grid");
        let plans = match dir {
            Direction::Forward => &self.forward,
            Direction::Inverse => &self.inverse,
        };
        let mut inner = total;
        let mut line = Vec::new();
        for (axis, &n) in self.dims.iter().enumerate() {
            inner /= n;
            let plan = &plans[axis];
            if inner == 1 {
                // contiguous lines
                plan.process(buf);
                continue;
            }
            let outer = total / (n * inner);
            line.resize(n, Complex::default());
            for o in 0..outer {
                let base = o * n * inner;
                for i in 0..inner {
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = buf[base + t * inner + i];
                    }
                    plan.process(&mut line);
                    for (t, v) in line.iter().enumerate() {
                        buf[base + t * inner + i] = *v;
                    }
                }
            }
        }
    }
}
