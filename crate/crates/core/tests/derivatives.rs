//! Finite-difference oracles for the dual objective: its gradient, its
//! Hessian, its concavity, and the gradient of the Lloyd energy.

mod common;

use common::*;
use laguerre::diagram::Domain;
use laguerre::{lloyd, transport};

fn objective<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    weights: &[f64],
    targets: &[f64],
) -> f64 {
    transport::evaluate(domain, positions, weights, targets)
        .unwrap()
        .objective
}

/// Central finite differences of the objective in each weight coordinate.
fn fd_gradient<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    weights: &[f64],
    targets: &[f64],
    h: f64,
) -> Vec<f64> {
    (0..weights.len())
        .map(|i| {
            let mut wp = weights.to_vec();
            let mut wm = weights.to_vec();
            wp[i] += h;
            wm[i] -= h;
            (objective(domain, positions, &wp, targets) - objective(domain, positions, &wm, targets))
                / (2.0 * h)
        })
        .collect()
}

fn check_gradient<const D: usize>(domain: &Domain<D>, n: usize, seed: u64) {
    let mut r = rng(seed);
    let positions = scatter(domain, n, &mut r);
    let weights = random_weights(domain, n, &mut r);
    let targets = equal_targets(domain, n);
    let eval = transport::evaluate(domain, &positions, &weights, &targets).unwrap();
    let h = 1e-6 * domain.volume().powf(2.0 / D as f64);
    let fd = fd_gradient(domain, &positions, &weights, &targets, h);
    let scale = eval
        .gradient
        .iter()
        .fold(0.0f64, |a, g| a.max(g.abs()))
        .max(1e-12);
    for (i, (a, f)) in eval.gradient.iter().zip(&fd).enumerate() {
        assert!(
            (a - f).abs() <= 1e-5 * scale,
            "component {i}: analytic {a}, finite-difference {f} (scale {scale})"
        );
    }
}

#[test]
fn dual_gradient_matches_finite_differences() {
    check_gradient(&Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap(), 10, 301);
    check_gradient(&Domain::new([0.0, 0.0], [1.0, 1.4], true).unwrap(), 9, 302);
    check_gradient(&Domain::new([0.0; 3], [1.0; 3], false).unwrap(), 12, 303);
    check_gradient(&Domain::new([0.0; 3], [1.0; 3], true).unwrap(), 12, 304);
}

fn check_hessian<const D: usize>(domain: &Domain<D>, n: usize, seed: u64) {
    let mut r = rng(seed);
    let positions = scatter(domain, n, &mut r);
    let weights = random_weights(domain, n, &mut r);
    let targets = equal_targets(domain, n);
    let eval = transport::evaluate(domain, &positions, &weights, &targets).unwrap();
    let dense = transport::dual_hessian(&eval.diagram).dense();
    let h = 1e-6 * domain.volume().powf(2.0 / D as f64);
    // Column j of the Hessian is the derivative of the gradient in w_j.
    let mut fd = vec![0.0; n * n];
    for j in 0..n {
        let mut wp = weights.clone();
        let mut wm = weights.clone();
        wp[j] += h;
        wm[j] -= h;
        let gp = transport::evaluate(domain, &positions, &wp, &targets)
            .unwrap()
            .gradient;
        let gm = transport::evaluate(domain, &positions, &wm, &targets)
            .unwrap()
            .gradient;
        for i in 0..n {
            fd[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    let max_entry = dense.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    assert!(max_entry > 0.0, "degenerate fixture: zero Hessian");
    for i in 0..n {
        for j in 0..n {
            let (a, f) = (dense[i * n + j], fd[i * n + j]);
            assert!(
                (a - f).abs() <= 1e-4 * max_entry,
                "entry ({i},{j}): analytic {a}, finite-difference {f}, max {max_entry}"
            );
        }
    }
}

#[test]
fn dual_hessian_matches_finite_differences() {
    check_hessian(&Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap(), 8, 311);
    check_hessian(&Domain::new([0.0; 3], [1.0; 3], true).unwrap(), 8, 312);
}

#[test]
fn dual_objective_is_midpoint_concave() {
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let mut r = rng(321);
    for trial in 0..20 {
        use rand::Rng;
        let n = r.random_range(3..=25);
        let positions = scatter(&domain, n, &mut r);
        let targets = equal_targets(&domain, n);
        let w1 = random_weights(&domain, n, &mut r);
        let w2 = random_weights(&domain, n, &mut r);
        let mid: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 0.5 * (a + b)).collect();
        let g1 = objective(&domain, &positions, &w1, &targets);
        let g2 = objective(&domain, &positions, &w2, &targets);
        let gm = objective(&domain, &positions, &mid, &targets);
        let scale = g1.abs().max(g2.abs()).max(gm.abs()).max(1e-30);
        assert!(
            gm >= 0.5 * (g1 + g2) - 1e-9 * scale,
            "trial {trial}: midpoint {gm} below chord {}",
            0.5 * (g1 + g2)
        );
    }
}

#[test]
fn lloyd_energy_gradient_matches_finite_differences() {
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let mut r = rng(331);
    let n = 5;
    let positions = scatter(&domain, n, &mut r);
    let targets = equal_targets(&domain, n);
    // Tight inner solves so the solver's volume slack stays far below the
    // finite-difference resolution.
    let tol = 1e-9;
    let (diagram, _) = transport::fit_weights(&domain, &positions, &targets, tol).unwrap();
    let analytic = lloyd::energy_gradient(&diagram).unwrap();
    let h = 1e-5 * domain.diameter();
    let scale = analytic
        .iter()
        .flatten()
        .fold(0.0f64, |a, g| a.max(g.abs()));
    for i in 0..n {
        for k in 0..2 {
            let mut pp = positions.clone();
            let mut pm = positions.clone();
            pp[i][k] += h;
            pm[i][k] -= h;
            let ep = lloyd::energy(&domain, &pp, &targets, tol).unwrap();
            let em = lloyd::energy(&domain, &pm, &targets, tol).unwrap();
            let fd = (ep - em) / (2.0 * h);
            assert!(
                (analytic[i][k] - fd).abs() <= 1e-4 * scale,
                "seed {i} axis {k}: analytic {}, finite-difference {fd}",
                analytic[i][k]
            );
        }
    }
}
