#![allow(dead_code)]

use rand::Rng;
use specext::dual::DualPoint;
use specext::moments::{covariances_from_spectrum, nu_cepstral_from_spectrum};
use specext::{Grid, GridField, GridSpec, IndexSet, MomentData};

/// A random instance: index set, grid, moment data from a random positive
/// spectrum, and a random strictly feasible dual point.
pub struct Instance {
    pub grid: Grid<f64>,
    pub data: MomentData<f64>,
    pub x: DualPoint<f64>,
}

pub fn random_index_set(rng: &mut impl Rng, d: usize) -> IndexSet {
    if rng.gen_bool(0.5) {
        let n: Vec<usize> = (0..d).map(|_| rng.gen_range(1..=if d == 1 { 3 } else { 1 })).collect();
        IndexSet::box_set(&n).unwrap()
    } else {
        let mut plus = vec![vec![0i64; d]];
        for j in 0..d {
            let mut e = vec![0i64; d];
            e[j] = 1;
            plus.push(e);
        }
        IndexSet::difference_set(&plus).unwrap()
    }
}

pub fn random_grid(rng: &mut impl Rng, set: &IndexSet) -> Grid<f64> {
    let dims = set
        .max_abs_per_axis()
        .iter()
        .map(|&m| 2 * m as usize + 1 + rng.gen_range(0..4))
        .collect();
    Grid::new(GridSpec::new(dims).unwrap())
}

/// `exp` of a random trigonometric sum: smooth and strictly positive.
pub fn random_spectrum(rng: &mut impl Rng, spec: &GridSpec) -> GridField<f64> {
    let d = spec.dim();
    let modes: Vec<(Vec<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let k = (0..d).map(|_| rng.gen_range(-2i32..=2) as f64).collect();
            (k, rng.gen_range(-0.4..0.4), rng.gen_range(0.0..6.3))
        })
        .collect();
    let scale = rng.gen_range(0.5..3.0);
    GridField::from_fn(spec.clone(), |th: &[f64]| {
        let s: f64 = modes
            .iter()
            .map(|(k, a, ph)| a * (k.iter().zip(th).map(|(x, t)| x * t).sum::<f64>() + ph).cos())
            .sum();
        scale * s.exp()
    })
    .unwrap()
}

pub fn moments_of(grid: &Grid<f64>, phi: &GridField<f64>, set: &IndexSet, nu: u32, lambda: f64) -> MomentData<f64> {
    let c = covariances_from_spectrum(grid, phi, set).unwrap();
    let m = nu_cepstral_from_spectrum(grid, phi, set, nu).unwrap();
    MomentData::new(set.clone(), c, m, nu, lambda).unwrap()
}

/// Random point with `P ≥ 1 − 2Σ|p_k| > 0.2` and `Q ≥ 0.2 q_0`.
pub fn random_point(rng: &mut impl Rng, set: &IndexSet, q0_scale: f64) -> DualPoint<f64> {
    let h = set.half_len();
    let budget = 0.4 / (h - 1).max(1) as f64;
    let p: Vec<f64> = (1..h).map(|_| rng.gen_range(-budget..budget)).collect();
    let q0 = q0_scale * rng.gen_range(0.6..1.6);
    let mut q = vec![q0];
    q.extend((1..h).map(|_| q0 * rng.gen_range(-budget..budget)));
    DualPoint::new(set.clone(), p, q).unwrap()
}

pub fn random_instance(rng: &mut impl Rng, d: usize, nu: u32, lambda: f64) -> Instance {
    let set = random_index_set(rng, d);
    let grid = random_grid(rng, &set);
    let phi = random_spectrum(rng, grid.spec());
    let data = moments_of(&grid, &phi, &set, nu, lambda);
    let q0_scale = data.c[0].powf(-1.0 / nu as f64);
    let x = random_point(rng, &set, q0_scale);
    Instance { grid, data, x }
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `‖a − b‖∞ / max(‖b‖∞, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    max_abs(&diff) / max_abs(b).max(1.0)
}

/// Direct `O(|Λ|·|N|)` evaluation of the dual value and gradient on a
/// one-dimensional grid, independent of the transform pipeline.
pub fn direct_value_and_gradient(x: &DualPoint<f64>, data: &MomentData<f64>, n: usize) -> (f64, Vec<f64>) {
    let half = data.index_set.half();
    let h = half.len();
    let nu = data.nu as i32;
    let nuf = data.nu as f64;
    let lam = data.lambda;
    let pc = x.p_coeffs();
    let mut value = 0.0;
    let mut g = vec![0.0; 2 * h - 1];
    for l in 0..n {
        let th = 2.0 * std::f64::consts::PI * l as f64 / n as f64;
        let basis: Vec<f64> = half
            .iter()
            .map(|k| if k[0] == 0 { 1.0 } else { 2.0 * (k[0] as f64 * th).cos() })
            .collect();
        let p: f64 = pc.iter().zip(&basis).map(|(a, b)| a * b).sum();
        let q: f64 = x.q.iter().zip(&basis).map(|(a, b)| a * b).sum();
        value += (p.powi(nu) / q.powi(nu - 1) + lam * p.powi(1 - nu)) / (nuf - 1.0);
        let dp = nuf / (nuf - 1.0) * (p / q).powi(nu - 1) - lam * p.powi(-nu);
        let dq = -(p / q).powi(nu);
        for j in 1..h {
            g[j - 1] += dp * basis[j];
        }
        for j in 0..h {
            g[h - 1 + j] += dq * basis[j];
        }
    }
    let nf = n as f64;
    value /= nf;
    for v in &mut g {
        *v /= nf;
    }
    value += x.q[0] * data.c[0];
    for j in 1..h {
        value += 2.0 * x.q[j] * data.c[j] - 2.0 * x.p[j - 1] * data.m[j - 1];
        g[j - 1] -= 2.0 * data.m[j - 1];
        g[h - 1 + j] += 2.0 * data.c[j];
    }
    g[h - 1] += data.c[0];
    (value, g)
}

/// Central differences of the dual value, step `h`.
pub fn fd_gradient(problem: &specext::DualProblem<'_, f64>, x: &DualPoint<f64>, h: f64) -> Vec<f64> {
    let v = x.to_vec();
    (0..v.len())
        .map(|j| {
            let mut e = vec![0.0; v.len()];
            e[j] = 1.0;
            let up = problem.value(&x.step(&e, h)).unwrap();
            let down = problem.value(&x.step(&e, -h)).unwrap();
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central differences of the gradient, column by column, step `h`.
pub fn fd_hessian(problem: &specext::DualProblem<'_, f64>, x: &DualPoint<f64>, h: f64) -> Vec<Vec<f64>> {
    let n = x.dim();
    (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let up = problem.gradient(&x.step(&e, h)).unwrap();
            let down = problem.gradient(&x.step(&e, -h)).unwrap();
            up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect()
}
