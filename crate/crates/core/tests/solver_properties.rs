mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specext::realization::model_moments;
use specext::solver::{lambda_sensitivity, solve, solve_from, Termination};
use specext::{ArmaModel, Grid, GridSpec, SolveOptions};

fn no_continuation() -> SolveOptions<f64> {
    SolveOptions {
        continuation_start: None,
        ..SolveOptions::default()
    }
}

#[test]
fn accepted_steps_decrease_the_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let nu = rng.gen_range(2..=3);
        let lambda = log_uniform(&mut rng, 1e-3, 1.0);
        let inst = random_instance(&mut rng, d, nu, lambda);
        let (_, report) = solve(&inst.data, &inst.grid, &no_continuation()).unwrap();
        assert!(report.converged);
        let h = &report.value_history;
        for w in h.windows(2) {
            // steps taken once the gradient is at tolerance may move the
            // value by rounding noise only
            let noise = 16.0 * f64::EPSILON * w[0].abs().max(1.0);
            assert!(w[1] < w[0] || (w[1] - w[0]).abs() <= noise, "{h:?}");
        }
        assert!(h.first().unwrap() > h.last().unwrap());
    }
}

#[test]
fn iterates_stay_in_the_interior() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inst = random_instance(&mut rng, 2, 2, 1e-4);
    let (_, full) = solve(&inst.data, &inst.grid, &no_continuation()).unwrap();
    for k in 1..=full.final_iterations {
        let opts = SolveOptions {
            max_iter: k,
            ..no_continuation()
        };
        let (_, r) = solve(&inst.data, &inst.grid, &opts).unwrap();
        assert!(r.verification.p_min > 0.0 && r.verification.q_min > 0.0, "iterate {k}");
    }
}

#[test]
fn different_starts_reach_the_same_minimizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let d = rng.gen_range(1..=3);
        let lambda = log_uniform(&mut rng, 1e-4, 1.0);
        let inst = random_instance(&mut rng, d, 2, lambda);
        let (a, ra) = solve(&inst.data, &inst.grid, &SolveOptions::default()).unwrap();
        let (b, rb) = solve_from(&inst.data, &inst.grid, &no_continuation(), inst.x.clone()).unwrap();
        assert!(ra.converged && rb.converged);
        assert!(a.distance(&b) < 1e-7, "distance {}", a.distance(&b));
    }
}

#[test]
fn solution_moves_smoothly_with_lambda() {
    let model = ArmaModel::<f64>::zeroless_3d();
    let grid = Grid::new(GridSpec::uniform(3, 20).unwrap());
    let base = model_moments(&model, &grid, 1.0).unwrap();
    let opts = SolveOptions::default();
    let delta = 1e-6;
    for lambda in [1e-6, 1e-4, 1e-2, 1.0] {
        let (x, _) = solve(&base.with_lambda(lambda), &grid, &opts).unwrap();
        let (y, _) = solve(&base.with_lambda(lambda * (1.0 + delta)), &grid, &opts).unwrap();
        // ‖λ dx/dλ‖ estimated by the difference quotient in log λ
        let ratio = x.distance(&y) / delta;
        assert!(ratio < 1e3, "λ = {lambda}: ratio {ratio}");
        let sens = lambda_sensitivity(&x, &base.with_lambda(lambda), &grid).unwrap();
        let predicted = lambda * sens.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((ratio - predicted).abs() <= 1e-2 * predicted.max(1e-3), "λ = {lambda}: {ratio} vs {predicted}");
    }
}

#[test]
fn single_precision_solve_tracks_double() {
    let lambda = 1e-2;
    let m64 = ArmaModel::<f64>::planar();
    let g64 = Grid::new(GridSpec::uniform(2, 12).unwrap());
    let (x64, _) = solve(&model_moments(&m64, &g64, lambda).unwrap(), &g64, &SolveOptions::default()).unwrap();

    let m32 = ArmaModel::<f32>::planar();
    let g32 = Grid::<f32>::new(GridSpec::uniform(2, 12).unwrap());
    let opts = SolveOptions::<f32> {
        grad_tol: 1e-4,
        ..SolveOptions::default()
    };
    let (x32, r32) = solve(&model_moments(&m32, &g32, lambda as f32).unwrap(), &g32, &opts).unwrap();
    assert_eq!(r32.termination, Termination::GradientTolerance);
    let err = x32
        .to_vec()
        .iter()
        .zip(x64.to_vec())
        .map(|(&a, b)| (a as f64 - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "error {err}");
}
