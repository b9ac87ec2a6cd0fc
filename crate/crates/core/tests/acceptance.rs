//! Acceptance suite: eleven end-to-end criteria, one test and one printed
//! PASS/FAIL line per criterion, with every tolerance pinned in code. Run
//! with `--nocapture` to see the lines for passing criteria too.

mod common;

use std::time::Instant;

use common::*;
use laguerre::diagram::Domain;
use laguerre::lloyd::{regularize, step_positions, LloydConfig};
use laguerre::oracle::{voxel_assign, voxel_volumes};
use laguerre::seeding::{make_targets, sample_positions, SpatialSpec, VolumeSpec};
use laguerre::stats::{centroid_relative_errors, coefficient_of_variation};
use laguerre::transport::{dual_hessian, evaluate, fit_weights, solve_weights, SolveConfig};
use laguerre::LaguerreDiagram;

fn verdict(criterion: usize, ok: bool, detail: &str) {
    println!(
        "criterion {criterion:2} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: 2D weight solve, 50 bimodal targets (35 small, 15 of ten
/// times the size), tolerance 1e-2; every relative area error below 1%,
/// runtime under 5 s.
#[test]
fn criterion_01_bimodal_weight_solve() {
    const REL_ERR: f64 = 0.01;
    const MAX_SECS: f64 = 5.0;
    let start = Instant::now();
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let spec = VolumeSpec::Bimodal {
        small: 35,
        large: 15,
        ratio: 10.0,
    };
    let targets = make_targets(&spec, &domain, 11).unwrap();
    let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 11).unwrap();
    let (_, report) = fit_weights(&domain, &positions, &targets, REL_ERR).unwrap();
    let worst = report.max_rel_volume_error();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        worst < REL_ERR && secs < MAX_SECS,
        &format!("max relative area error {worst:.2e} (< {REL_ERR}), runtime {secs:.2} s (< {MAX_SECS})"),
    );
}

/// Criterion 2: same targets under 100 full Lloyd steps; all areas within
/// 1% and every seed within 0.002 of its cell centroid, under 60 s.
#[test]
fn criterion_02_lloyd_centroidal_50() {
    const REL_ERR: f64 = 0.01;
    const CENTROID_DIST: f64 = 0.002;
    const MAX_SECS: f64 = 60.0;
    let start = Instant::now();
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let spec = VolumeSpec::Bimodal {
        small: 35,
        large: 15,
        ratio: 10.0,
    };
    let targets = make_targets(&spec, &domain, 12).unwrap();
    let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 12).unwrap();
    let config = LloydConfig::new(100, 1.0, REL_ERR);
    let (diagram, _) = regularize(&domain, &positions, &targets, &config).unwrap();
    let mut worst_rel = 0.0f64;
    let mut worst_dist = 0.0f64;
    for (i, &target) in targets.iter().enumerate() {
        let m = diagram.cell(i).measures();
        worst_rel = worst_rel.max((m.volume - target).abs() / target);
        worst_dist = worst_dist.max(laguerre::vec::dist(
            diagram.generators()[i].position,
            m.centroid,
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        worst_rel < REL_ERR && worst_dist <= CENTROID_DIST && secs < MAX_SECS,
        &format!(
            "max relative area error {worst_rel:.2e} (< {REL_ERR}), max seed-centroid distance \
             {worst_dist:.2e} (<= {CENTROID_DIST}), runtime {secs:.2} s (< {MAX_SECS})"
        ),
    );
}

/// Criterion 3: on 20 random instances the dual gradient matches central
/// finite differences to 1e-5 of the gradient scale and the analytic
/// Hessian matches finite differences of the gradient to 1e-4 of its
/// largest entry.
#[test]
fn criterion_03_derivative_oracles() {
    const GRAD_REL: f64 = 1e-5;
    const HESS_REL: f64 = 1e-4;
    const STEP: f64 = 1e-6; // 1e-6 * |box|^(2/d) on unit boxes

    fn check<const D: usize>(seed: u64, n: usize) -> (f64, f64) {
        let domain = Domain::<D>::new([0.0; D], [1.0; D], false).unwrap();
        let mut r = rng(seed);
        let positions = scatter(&domain, n, &mut r);
        let weights = random_weights(&domain, n, &mut r);
        let targets = equal_targets(&domain, n);
        let eval = evaluate(&domain, &positions, &weights, &targets).unwrap();
        let g = |w: &[f64]| {
            evaluate(&domain, &positions, w, &targets)
                .unwrap()
                .objective
        };
        let grad = |w: &[f64]| evaluate(&domain, &positions, w, &targets).unwrap().gradient;
        let scale = eval.gradient.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut grad_err = 0.0f64;
        let mut fd_h = vec![0.0; n * n];
        for j in 0..n {
            let mut wp = weights.clone();
            let mut wm = weights.clone();
            wp[j] += STEP;
            wm[j] -= STEP;
            let fd = (g(&wp) - g(&wm)) / (2.0 * STEP);
            grad_err = grad_err.max((fd - eval.gradient[j]).abs() / scale);
            let (gp, gm) = (grad(&wp), grad(&wm));
            for i in 0..n {
                fd_h[i * n + j] = (gp[i] - gm[i]) / (2.0 * STEP);
            }
        }
        let dense = dual_hessian(&eval.diagram).dense();
        let hmax = dense.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let mut hess_err = 0.0f64;
        for (a, f) in dense.iter().zip(&fd_h) {
            hess_err = hess_err.max((a - f).abs() / hmax);
        }
        (grad_err, hess_err)
    }

    let mut worst_grad = 0.0f64;
    let mut worst_hess = 0.0f64;
    let mut r = rng(33);
    use rand::Rng;
    for k in 0..10 {
        let (g2, h2) = check::<2>(700 + k, r.random_range(5..=20));
        let (g3, h3) = check::<3>(730 + k, r.random_range(5..=20));
        worst_grad = worst_grad.max(g2).max(g3);
        worst_hess = worst_hess.max(h2).max(h3);
    }
    verdict(
        3,
        worst_grad <= GRAD_REL && worst_hess <= HESS_REL,
        &format!(
            "20 instances: max gradient error {worst_grad:.2e} (<= {GRAD_REL}), max Hessian \
             error {worst_hess:.2e} (<= {HESS_REL})"
        ),
    );
}

/// Criterion 4: 100 random midpoint tests of the dual objective satisfy
/// concavity within 1e-9 of its magnitude.
#[test]
fn criterion_04_concavity() {
    const REL: f64 = 1e-9;
    let mut worst = f64::NEG_INFINITY;
    let mut r = rng(44);
    for trial in 0..100 {
        let violation = if trial % 2 == 0 {
            midpoint_violation::<2>(&mut r)
        } else {
            midpoint_violation::<3>(&mut r)
        };
        worst = worst.max(violation);
    }
    verdict(
        4,
        worst <= REL,
        &format!("100 midpoints: worst relative concavity violation {worst:.2e} (<= {REL})"),
    );

    fn midpoint_violation<const D: usize>(r: &mut rand_chacha::ChaCha8Rng) -> f64 {
        use rand::Rng;
        let domain = Domain::<D>::new([0.0; D], [1.0; D], false).unwrap();
        let n = r.random_range(3..=25);
        let positions = scatter(&domain, n, r);
        let targets = equal_targets(&domain, n);
        let w1 = random_weights(&domain, n, r);
        let w2 = random_weights(&domain, n, r);
        let mid: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| 0.5 * (a + b)).collect();
        let g = |w: &[f64]| {
            evaluate(&domain, &positions, w, &targets)
                .unwrap()
                .objective
        };
        let (g1, g2, gm) = (g(&w1), g(&w2), g(&mid));
        let scale = g1.abs().max(g2.abs()).max(gm.abs()).max(1e-300);
        (0.5 * (g1 + g2) - gm) / scale
    }
}

/// Criterion 5: on 10 bimodal fixtures (n=200, full Lloyd steps, K=15,
/// tolerance 1e-3) the transport energy never increases beyond
/// 1e-9 of its initial value, and each moved seed (the previous cell's
/// centroid) keeps a floor distance of (1/2048) m_i^2 / diam^3 from the
/// previous cell's boundary.
#[test]
fn criterion_05_energy_monotone_and_centroid_bound() {
    const TOL: f64 = 1e-3;
    const K: usize = 15;
    const C_BOUND: f64 = 1.0 / 2048.0;
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let diam3 = domain.diameter().powi(3); // 2d - 1 = 3 in 2D
    let mut worst_rise = f64::NEG_INFINITY;
    let mut slack = f64::INFINITY; // min observed distance / bound
    for fixture in 0..10 {
        let spec = VolumeSpec::Bimodal {
            small: 140,
            large: 60,
            ratio: 10.0,
        };
        let targets = make_targets(&spec, &domain, 50 + fixture).unwrap();
        let positions =
            sample_positions(&SpatialSpec::Uniform, &domain, &targets, 50 + fixture).unwrap();
        let config = SolveConfig::new(TOL);
        let zeros = vec![0.0; positions.len()];
        let (mut diagram, _) =
            solve_weights(&domain, &positions, &zeros, &targets, &config).unwrap();
        let e0 = laguerre::lloyd::diagram_energy(&diagram);
        let mut prev = e0;
        for _ in 0..K {
            for (i, &target) in targets.iter().enumerate() {
                let cell = diagram.cell(i);
                assert!(!cell.is_empty(), "volume-feasible cell emptied");
                let dist = cell.polytope().boundary_distance(cell.measures().centroid);
                let bound = C_BOUND * target * target / diam3;
                slack = slack.min(dist / bound);
                assert!(
                    dist >= bound,
                    "fixture {fixture}: centroid within {dist:.3e} of the boundary, floor {bound:.3e}"
                );
            }
            let moved = step_positions(&diagram, 1.0).unwrap();
            let warm: Vec<f64> = diagram.generators().iter().map(|s| s.weight).collect();
            let (next, _) = solve_weights(&domain, &moved, &warm, &targets, &config).unwrap();
            diagram = next;
            let e = laguerre::lloyd::diagram_energy(&diagram);
            worst_rise = worst_rise.max((e - prev) / e0);
            prev = e;
        }
    }
    verdict(
        5,
        worst_rise <= 1e-9,
        &format!(
            "10 fixtures x {K} steps: worst energy rise {worst_rise:.2e} of E0 (<= 1e-9), \
             centroid-boundary slack {slack:.1e}x the floor"
        ),
    );
}

/// Criterion 6: voxel oracle at resolution 1024 agrees with the exact
/// areas within 0.5% of the mean cell area on 10 random instances, and
/// doubling the resolution halves the worst discrepancy within +/-25%.
#[test]
fn criterion_06_voxel_oracle() {
    const REL_OF_MEAN_CELL: f64 = 0.005;
    const HALVING_BAND: (f64, f64) = (1.5, 2.5);
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let mut r = rng(602);
    use rand::Rng;
    let mut worst_rel = 0.0f64;
    let mut max_coarse = 0.0f64;
    let mut max_fine = 0.0f64;
    for _ in 0..10 {
        let n = r.random_range(10..=50);
        let positions = scatter(&domain, n, &mut r);
        let weights = random_weights(&domain, n, &mut r);
        let seeds = weighted(&positions, &weights);
        let diagram = LaguerreDiagram::compute(&domain, &seeds).unwrap();
        let exact = diagram.volumes();
        let allowance = REL_OF_MEAN_CELL * domain.volume() / n as f64;
        let vox_c = voxel_volumes(&voxel_assign(&domain, &seeds, [1024, 1024]).unwrap());
        let vox_f = voxel_volumes(&voxel_assign(&domain, &seeds, [2048, 2048]).unwrap());
        for i in 0..n {
            let dc = (vox_c[i] - exact[i]).abs();
            max_coarse = max_coarse.max(dc);
            max_fine = max_fine.max((vox_f[i] - exact[i]).abs());
            worst_rel = worst_rel.max(dc / allowance);
        }
    }
    let ratio = max_coarse / max_fine;
    verdict(
        6,
        worst_rel <= 1.0 && ratio >= HALVING_BAND.0 && ratio <= HALVING_BAND.1,
        &format!(
            "worst discrepancy {:.2}x the 0.5% allowance (<= 1), halving ratio {ratio:.3} \
             (in [{}, {}])",
            worst_rel, HALVING_BAND.0, HALVING_BAND.1
        ),
    );
}

/// Criterion 7: random periodic 3D diagrams tile the box to 1e-9 of its
/// volume; translating all seeds changes no volume by more than 1e-10 of
/// the box; shifting all weights by 7.3 reproduces the same diagram.
#[test]
fn criterion_07_periodic_invariants() {
    const TILE_REL: f64 = 1e-9;
    const TRANSLATE_REL: f64 = 1e-10;
    const SHIFT: f64 = 7.3;
    let domain = Domain::new([0.0; 3], [1.0; 3], true).unwrap();
    let mut worst_tile = 0.0f64;
    let mut worst_translate = 0.0f64;
    let mut worst_shift = 0.0f64;
    let mut r = rng(77);
    use rand::Rng;
    for n in [50usize, 230, 500] {
        let positions = scatter(&domain, n, &mut r);
        let weights = random_weights(&domain, n, &mut r);
        let base = LaguerreDiagram::compute(&domain, &weighted(&positions, &weights)).unwrap();
        worst_tile = worst_tile.max((base.total_volume() - 1.0).abs());
        let t = [
            r.random_range(0.0..1.0),
            r.random_range(0.0..1.0),
            r.random_range(0.0..1.0),
        ];
        let moved_pos: Vec<[f64; 3]> = positions
            .iter()
            .map(|p| domain.wrap(laguerre::vec::add(*p, t)))
            .collect();
        let moved = LaguerreDiagram::compute(&domain, &weighted(&moved_pos, &weights)).unwrap();
        let shifted_w: Vec<f64> = weights.iter().map(|w| w + SHIFT).collect();
        let shifted =
            LaguerreDiagram::compute(&domain, &weighted(&positions, &shifted_w)).unwrap();
        for i in 0..n {
            let v = base.cell(i).measures().volume;
            worst_translate = worst_translate.max((moved.cell(i).measures().volume - v).abs());
            worst_shift = worst_shift.max((shifted.cell(i).measures().volume - v).abs());
            let mut na: Vec<usize> = base.adjacency()[i].neighbors.iter().map(|x| x.id).collect();
            let mut nb: Vec<usize> = shifted.adjacency()[i]
                .neighbors
                .iter()
                .map(|x| x.id)
                .collect();
            na.sort_unstable();
            nb.sort_unstable();
            assert_eq!(na, nb, "weight shift changed the adjacency of cell {i}");
        }
    }
    verdict(
        7,
        worst_tile <= TILE_REL && worst_translate <= TRANSLATE_REL && worst_shift <= 1e-12,
        &format!(
            "tiling defect {worst_tile:.1e} (<= {TILE_REL}), translation defect \
             {worst_translate:.1e} (<= {TRANSLATE_REL}), weight-shift defect {worst_shift:.1e} \
             (<= 1e-12, same adjacency)"
        ),
    );
}

/// Criterion 8: along a 20-step Lloyd run (n=500, bimodal), the per-step
/// weight-solve evaluation count drops below one tenth of step 1's count
/// within the first 15 steps.
#[test]
fn criterion_08_warm_start_decay() {
    const K: usize = 20;
    const WINDOW: usize = 15;
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    let spec = VolumeSpec::Bimodal {
        small: 350,
        large: 150,
        ratio: 10.0,
    };
    let targets = make_targets(&spec, &domain, 88).unwrap();
    let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 88).unwrap();
    let config = LloydConfig::new(K, 1.0, 1e-3);
    let (_, trace) = regularize(&domain, &positions, &targets, &config).unwrap();
    let first = trace.iterations[0].evaluations;
    let best = trace.iterations[..WINDOW]
        .iter()
        .map(|it| it.evaluations)
        .min()
        .unwrap();
    verdict(
        8,
        10 * best < first,
        &format!(
            "step-1 evaluations {first}, cheapest step within {WINDOW}: {best} \
             (10 x {best} < {first})"
        ),
    );
}

/// Criterion 9: periodic 3D generation at n=2000 with volume ratio 5
/// finishes in under 10 minutes with every volume error below 1%, and
/// costs more than the monodisperse run of the same size.
#[test]
fn criterion_09_desk_scale_generation() {
    const REL_ERR: f64 = 0.01;
    const MAX_SECS: f64 = 600.0;
    let domain = Domain::new([0.0; 3], [1.0; 3], true).unwrap();
    let run = |ratio: f64| -> (f64, f64) {
        let spec = VolumeSpec::Bimodal {
            small: 1000,
            large: 1000,
            ratio,
        };
        let targets = make_targets(&spec, &domain, 99).unwrap();
        let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 99).unwrap();
        let start = Instant::now();
        let config = LloydConfig::new(5, 1.0, REL_ERR);
        let (diagram, _) = regularize(&domain, &positions, &targets, &config).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let worst = diagram
            .volumes()
            .iter()
            .zip(&targets)
            .map(|(v, m)| (v - m).abs() / m)
            .fold(0.0f64, f64::max);
        (secs, worst)
    };
    let (secs5, worst5) = run(5.0);
    let (secs1, worst1) = run(1.0);
    verdict(
        9,
        worst5 < REL_ERR && worst1 < REL_ERR && secs5 < MAX_SECS && secs5 > secs1,
        &format!(
            "ratio 5: {secs5:.1} s (< {MAX_SECS}), max error {worst5:.2e}; ratio 1: {secs1:.1} s, \
             max error {worst1:.2e}; ordering ratio5 > ratio1: {}",
            secs5 > secs1
        ),
    );
}

/// Criterion 10: periodic 3D generation with log-normal targets
/// (radius mean 1, sd 0.35): all volume errors below 1% and the sample
/// coefficient of variation of the targets in [1.2, 1.6].
#[test]
fn criterion_10_lognormal_generation() {
    const REL_ERR: f64 = 0.01;
    const CV_BAND: (f64, f64) = (1.2, 1.6);
    let domain = Domain::new([0.0; 3], [1.0; 3], true).unwrap();
    let spec = VolumeSpec::Lognormal {
        count: 2000,
        mean: 1.0,
        sd: 0.35,
    };
    let targets = make_targets(&spec, &domain, 110).unwrap();
    let cv = coefficient_of_variation(&targets);
    let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 110).unwrap();
    let config = LloydConfig::new(5, 1.0, REL_ERR);
    let (diagram, _) = regularize(&domain, &positions, &targets, &config).unwrap();
    let worst = diagram
        .volumes()
        .iter()
        .zip(&targets)
        .map(|(v, m)| (v - m).abs() / m)
        .fold(0.0f64, f64::max);
    verdict(
        10,
        worst < REL_ERR && cv >= CV_BAND.0 && cv <= CV_BAND.1,
        &format!(
            "max volume error {worst:.2e} (< {REL_ERR}), target CV {cv:.3} \
             (in [{}, {}])",
            CV_BAND.0, CV_BAND.1
        ),
    );
}

/// Criterion 11: fit a diagram to the centroids and volumes of a
/// generated reference (n=500) with ball-packing initial weights: all
/// volume errors below 1% and at least 70% of cells with centroid
/// relative error below 1.
#[test]
fn criterion_11_synthetic_fitting() {
    const REL_ERR: f64 = 0.01;
    const GOOD_FRACTION: f64 = 0.70;
    let domain = Domain::new([0.0, 0.0], [1.0, 1.0], false).unwrap();
    // Reference: a lightly regularised polydisperse diagram.
    let spec = VolumeSpec::UniformRatio {
        count: 500,
        max_ratio: 4.0,
    };
    let targets = make_targets(&spec, &domain, 111).unwrap();
    let positions = sample_positions(&SpatialSpec::Uniform, &domain, &targets, 111).unwrap();
    let config = LloydConfig::new(30, 1.0, 1e-3);
    let (reference, _) = regularize(&domain, &positions, &targets, &config).unwrap();
    let ref_centroids: Vec<[f64; 2]> = reference
        .cells()
        .iter()
        .map(|c| c.measures().centroid)
        .collect();
    let ref_volumes = reference.volumes();
    // Fit: seeds at the reference centroids, ball-packing warm start.
    let init = laguerre::transport::packing_weights::<2>(&ref_volumes);
    let (fitted, report) = solve_weights(
        &domain,
        &ref_centroids,
        &init,
        &ref_volumes,
        &SolveConfig::new(REL_ERR),
    )
    .unwrap();
    let worst = report.max_rel_volume_error();
    let fitted_centroids: Vec<[f64; 2]> = fitted
        .cells()
        .iter()
        .map(|c| c.measures().centroid)
        .collect();
    let errors =
        centroid_relative_errors(&domain, &ref_centroids, &fitted_centroids, &ref_volumes);
    let good = errors.iter().filter(|e| **e < 1.0).count() as f64 / errors.len() as f64;
    verdict(
        11,
        worst < REL_ERR && good >= GOOD_FRACTION,
        &format!(
            "max volume error {worst:.2e} (< {REL_ERR}), {:.1}% of cells with centroid \
             relative error < 1 (>= {:.0}%)",
            100.0 * good,
            100.0 * GOOD_FRACTION
        ),
    );
}
