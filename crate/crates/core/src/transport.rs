//! Weight solves: choose Laguerre weights so every cell hits a prescribed
//! volume.
//!
//! The weights maximise the concave dual objective
//! `g(w) = sum_i (m_i - v_i(w)) w_i + sum_i I_i(w)` where `v_i` is the cell
//! volume, `m_i` the prescribed volume and `I_i` the cell's second moment
//! about its seed. Its gradient is the volume mismatch `m_i - v_i(w)` and
//! its Hessian is a (negated) weighted graph Laplacian over the cell
//! adjacency, so both a damped Newton method and a limited-memory
//! quasi-Newton method apply. Iteration stops once
//! `max_i |m_i - v_i| <= tolerance * min_j m_j`.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::diagram::{DiagramError, Domain, LaguerreDiagram, WeightedSeed};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error("{seeds} seed positions but {targets} target volumes")]
    CountMismatch { seeds: usize, targets: usize },
    #[error("target volume {index} must be positive and finite")]
    BadTarget { index: usize },
    #[error("target volumes sum to {sum:.17e} but the domain volume is {volume:.17e}")]
    TargetSum { sum: f64, volume: f64 },
    #[error("tolerance must lie in (0, 1), got {0}")]
    BadTolerance(f64),
    #[error("line search stalled after {iterations} outer iterations")]
    Stalled {
        iterations: usize,
        weights: Vec<f64>,
        report: Box<SolveReport>,
    },
    #[error("tolerance not reached after {iterations} outer iterations")]
    MaxIterations {
        iterations: usize,
        weights: Vec<f64>,
        report: Box<SolveReport>,
    },
}

/// Validated target volumes: positive, finite, and summing to the domain
/// volume. Sums off by at most a relative 1e-6 are rescaled exactly;
/// anything further off is rejected.
#[derive(Clone, Debug)]
pub struct TargetSpec {
    masses: Vec<f64>,
    min_mass: f64,
}

impl TargetSpec {
    pub fn new<const D: usize>(domain: &Domain<D>, masses: &[f64]) -> Result<Self, TransportError> {
        if masses.is_empty() {
            return Err(TransportError::CountMismatch {
                seeds: 0,
                targets: 0,
            });
        }
        for (i, &m) in masses.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(TransportError::BadTarget { index: i });
            }
        }
        let volume = domain.volume();
        let sum: f64 = masses.iter().sum();
        if (sum - volume).abs() > 1e-6 * volume {
            return Err(TransportError::TargetSum { sum, volume });
        }
        let scale = volume / sum;
        let masses: Vec<f64> = masses.iter().map(|&m| m * scale).collect();
        let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { masses, min_mass })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn min_mass(&self) -> f64 {
        self.min_mass
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Newton steps on the dual, damped to keep every cell volume above a
    /// floor and the gradient norm decreasing. Empty cells have a zero
    /// Hessian row; their direction component falls back to the raw
    /// gradient, which is positive and reinflates them.
    DampedNewton,
    /// Limited-memory quasi-Newton ascent (memory 10, backtracking line
    /// search). Usually needs more evaluations than Newton.
    QuasiNewton,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    pub method: Method,
    /// Relative stopping tolerance in (0, 1):
    /// `max_i |m_i - v_i| <= tolerance * min_j m_j`.
    pub tolerance: f64,
    /// Outer iteration cap; defaults to `500 * (1 + log10(n))`.
    pub max_outer: Option<usize>,
}

impl SolveConfig {
    pub fn new(tolerance: f64) -> Self {
        Self {
            method: Method::DampedNewton,
            tolerance,
            max_outer: None,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    fn outer_cap(&self, n: usize) -> usize {
        self.max_outer
            .unwrap_or(500 * (1 + (n as f64).log10().max(0.0) as usize))
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub outer_iterations: usize,
    /// Number of diagram constructions (each yields objective and gradient).
    pub diagram_evaluations: usize,
    /// `max_i |m_i - v_i|` at the final iterate.
    pub max_volume_error: f64,
    /// `|m_i - v_i| / m_i` per cell at the final iterate.
    pub rel_volume_errors: Vec<f64>,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn max_rel_volume_error(&self) -> f64 {
        self.rel_volume_errors
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

/// One dual evaluation: the diagram at `(positions, weights)` plus the
/// objective value and gradient `m_i - v_i`.
pub struct DualEvaluation<const D: usize> {
    pub diagram: LaguerreDiagram<D>,
    pub objective: f64,
    pub gradient: Vec<f64>,
}

impl<const D: usize> DualEvaluation<D> {
    fn volumes(&self) -> Vec<f64> {
        self.diagram.volumes()
    }

    fn grad_inf(&self) -> f64 {
        self.gradient.iter().fold(0.0, |a, g| a.max(g.abs()))
    }

    fn grad_2(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

}

/// Builds the diagram at the given weights and evaluates the dual objective
/// and its gradient.
pub fn evaluate<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    weights: &[f64],
    targets: &[f64],
) -> Result<DualEvaluation<D>, TransportError> {
    let spec = TargetSpec::new(domain, targets)?;
    if positions.len() != spec.len() {
        return Err(TransportError::CountMismatch {
            seeds: positions.len(),
            targets: spec.len(),
        });
    }
    if weights.len() != positions.len() {
        return Err(TransportError::CountMismatch {
            seeds: positions.len(),
            targets: weights.len(),
        });
    }
    evaluate_unchecked(domain, positions, weights, spec.masses())
}

fn evaluate_unchecked<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    weights: &[f64],
    masses: &[f64],
) -> Result<DualEvaluation<D>, TransportError> {
    let seeds: Vec<WeightedSeed<D>> = positions
        .iter()
        .zip(weights)
        .map(|(&p, &w)| WeightedSeed::new(p, w))
        .collect();
    let diagram = LaguerreDiagram::compute(domain, &seeds)?;
    let mut objective = 0.0;
    let mut gradient = Vec::with_capacity(masses.len());
    for i in 0..masses.len() {
        let cell = &diagram.cells()[i];
        let v = cell.measures.volume;
        let moment = cell
            .measures
            .second_moment_about(diagram.generators()[i].position);
        objective += (masses[i] - v) * weights[i] + moment;
        gradient.push(masses[i] - v);
    }
    Ok(DualEvaluation {
        diagram,
        objective,
        gradient,
    })
}

/// Dual Hessian: `H_ij = a_ij / (2 |x_i - x_j|)` for adjacent `i != j`
/// (summed over shared faces and periodic images), `H_ii = -sum_j H_ij`.
/// Faces a cell shares with its own periodic images do not move with the
/// weight and contribute nothing. Stored as the negated matrix (a weighted
/// graph Laplacian), which is what the Newton solve consumes.
pub struct DualHessian {
    n: usize,
    diag: Vec<f64>,
    /// Strictly off-diagonal couplings `(i, j, c_ij)` with `i < j`, sorted.
    pairs: Vec<(u32, u32, f64)>,
}

pub fn dual_hessian<const D: usize>(diagram: &LaguerreDiagram<D>) -> DualHessian {
    let n = diagram.len();
    let mut acc: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for i in 0..n {
        for nb in &diagram.adjacency()[i].neighbors {
            if nb.id == i {
                continue;
            }
            let key = (i.min(nb.id) as u32, i.max(nb.id) as u32);
            // Each face is visited once from either side; halving the two
            // nearly equal contributions symmetrises exactly.
            *acc.entry(key).or_insert(0.0) += 0.5 * nb.area / (2.0 * nb.distance);
        }
    }
    let mut diag = vec![0.0; n];
    let mut pairs = Vec::with_capacity(acc.len());
    for (&(i, j), &c) in &acc {
        diag[i as usize] += c;
        diag[j as usize] += c;
        pairs.push((i, j, c));
    }
    DualHessian { n, diag, pairs }
}

impl DualHessian {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `y = L x` with `L = -H` (positive semi-definite).
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.diag[i] * x[i];
        }
        for &(i, j, c) in &self.pairs {
            y[i as usize] -= c * x[j as usize];
            y[j as usize] -= c * x[i as usize];
        }
    }

    /// Dense row-major `H` (negative diagonal), for small-instance checks.
    pub fn dense(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            h[i * self.n + i] = -self.diag[i];
        }
        for &(i, j, c) in &self.pairs {
            h[i as usize * self.n + j as usize] = c;
            h[j as usize * self.n + i as usize] = c;
        }
        h
    }
}

fn project_out_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    for x in v {
        *x -= mean;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned CG for `L x = b` on the subspace orthogonal to the
/// constant vector (the Laplacian kernel).
fn solve_newton_system(lap: &DualHessian, b: &[f64], rel_tol: f64) -> Vec<f64> {
    let n = lap.n;
    let mut b = b.to_vec();
    project_out_mean(&mut b);
    let bnorm = norm2(&b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return x;
    }
    let minv: Vec<f64> = lap
        .diag
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = b;
    let mut z: Vec<f64> = r.iter().zip(&minv).map(|(ri, mi)| ri * mi).collect();
    project_out_mean(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..4 * n.max(50) {
        lap.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= rel_tol * bnorm {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * minv[i];
        }
        project_out_mean(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    project_out_mean(&mut x);
    x
}

struct Evaluator<'a, const D: usize> {
    domain: &'a Domain<D>,
    positions: &'a [[f64; D]],
    masses: &'a [f64],
    evals: usize,
}

impl<'a, const D: usize> Evaluator<'a, D> {
    fn eval(&mut self, weights: &[f64]) -> Result<DualEvaluation<D>, TransportError> {
        self.evals += 1;
        evaluate_unchecked(self.domain, self.positions, weights, self.masses)
    }
}

/// Solves for weights giving every cell its target volume, starting from
/// `init_weights` (pass zeros for a cold start). Returns the final diagram
/// and a report; the solved weights sit in the diagram's generators.
pub fn solve_weights<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    init_weights: &[f64],
    targets: &[f64],
    config: &SolveConfig,
) -> Result<(LaguerreDiagram<D>, SolveReport), TransportError> {
    if !(config.tolerance > 0.0 && config.tolerance < 1.0) {
        return Err(TransportError::BadTolerance(config.tolerance));
    }
    let spec = TargetSpec::new(domain, targets)?;
    if positions.len() != spec.len() {
        return Err(TransportError::CountMismatch {
            seeds: positions.len(),
            targets: spec.len(),
        });
    }
    if init_weights.len() != positions.len() {
        return Err(TransportError::CountMismatch {
            seeds: positions.len(),
            targets: init_weights.len(),
        });
    }
    let start = Instant::now();
    let mut ev = Evaluator {
        domain,
        positions,
        masses: spec.masses(),
        evals: 0,
    };
    let stop = config.tolerance * spec.min_mass();
    let cap = config.outer_cap(positions.len());
    let outcome = match config.method {
        Method::DampedNewton => {
            damped_newton(&mut ev, init_weights, &spec, config.tolerance, stop, cap)
        }
        Method::QuasiNewton => quasi_newton(&mut ev, init_weights, stop, cap),
    };
    let finish = |ev: &Evaluator<D>, cur: &DualEvaluation<D>, iters, converged| SolveReport {
        method: config.method,
        converged,
        outer_iterations: iters,
        diagram_evaluations: ev.evals,
        max_volume_error: cur.grad_inf(),
        rel_volume_errors: cur
            .gradient
            .iter()
            .zip(spec.masses())
            .map(|(g, m)| g.abs() / m)
            .collect(),
        wall_time: start.elapsed(),
    };
    match outcome {
        Ok(Solved { eval, iterations }) => {
            let report = finish(&ev, &eval, iterations, true);
            Ok((eval.diagram, report))
        }
        Err(Halt::Error(e)) => Err(e),
        Err(Halt::Stalled {
            weights,
            eval,
            iterations,
        }) => {
            let report = finish(&ev, &eval, iterations, false);
            Err(TransportError::Stalled {
                iterations,
                weights,
                report: Box::new(report),
            })
        }
        Err(Halt::MaxIterations {
            weights,
            eval,
            iterations,
        }) => {
            let report = finish(&ev, &eval, iterations, false);
            Err(TransportError::MaxIterations {
                iterations,
                weights,
                report: Box::new(report),
            })
        }
    }
}

struct Solved<const D: usize> {
    eval: DualEvaluation<D>,
    iterations: usize,
}

enum Halt<const D: usize> {
    Error(TransportError),
    Stalled {
        weights: Vec<f64>,
        eval: Box<DualEvaluation<D>>,
        iterations: usize,
    },
    MaxIterations {
        weights: Vec<f64>,
        eval: Box<DualEvaluation<D>>,
        iterations: usize,
    },
}

impl<const D: usize> From<TransportError> for Halt<D> {
    fn from(e: TransportError) -> Self {
        Halt::Error(e)
    }
}

/// Newton direction for ascent: `(-H) delta = gradient` on the rows with
/// nonzero Hessian entries; rows of empty cells are zero, and their
/// component falls back to the raw gradient (`m_i > 0` there).
fn newton_direction(hess: &DualHessian, grad: &[f64]) -> Vec<f64> {
    let n = hess.len();
    let active: Vec<usize> = (0..n).filter(|&i| hess.diag[i] > 0.0).collect();
    if active.len() == n {
        return solve_newton_system(hess, grad, 1e-10);
    }
    // Inactive rows have no faces, so no pair references them and the
    // restriction below keeps every coupling.
    let mut renumber = vec![u32::MAX; n];
    for (k, &i) in active.iter().enumerate() {
        renumber[i] = k as u32;
    }
    let sub = DualHessian {
        n: active.len(),
        diag: active.iter().map(|&i| hess.diag[i]).collect(),
        pairs: hess
            .pairs
            .iter()
            .map(|&(i, j, c)| (renumber[i as usize], renumber[j as usize], c))
            .collect(),
    };
    let b: Vec<f64> = active.iter().map(|&i| grad[i]).collect();
    let sub_delta = solve_newton_system(&sub, &b, 1e-10);
    let mut delta = grad.to_vec();
    for (k, &i) in active.iter().enumerate() {
        delta[i] = sub_delta[k];
    }
    delta
}

fn damped_newton<const D: usize>(
    ev: &mut Evaluator<D>,
    init_weights: &[f64],
    spec: &TargetSpec,
    tolerance: f64,
    stop: f64,
    cap: usize,
) -> Result<Solved<D>, Halt<D>> {
    let mut w = init_weights.to_vec();
    let mut cur = ev.eval(&w)?;
    for it in 0..cap {
        if cur.grad_inf() <= stop {
            return Ok(Solved {
                eval: cur,
                iterations: it,
            });
        }
        let hess = dual_hessian(&cur.diagram);
        let delta = newton_direction(&hess, &cur.gradient);
        // Damping floor: no cell may drop below half its current volume or
        // half its (tolerance-discounted) target, whichever is smaller.
        // Nonempty cells therefore never empty, and empty cells are free to
        // reinflate.
        let volumes = cur.volumes();
        let floor: Vec<f64> = volumes
            .iter()
            .zip(spec.masses())
            .map(|(&v, &m)| 0.5 * v.min((1.0 - tolerance) * m))
            .collect();
        let above_floor = |trial: &DualEvaluation<D>| {
            trial
                .diagram
                .cells()
                .iter()
                .zip(&floor)
                .all(|(c, &f)| c.measures.volume >= f)
        };
        let g2 = cur.grad_2();
        let mut t = 1.0;
        let mut accepted = false;
        while t >= 1e-10 {
            let wt: Vec<f64> = w.iter().zip(&delta).map(|(wi, di)| wi + t * di).collect();
            let trial = ev.eval(&wt)?;
            if above_floor(&trial) && trial.grad_2() <= (1.0 - 0.5 * t) * g2 {
                w = wt;
                cur = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Cauchy step along the gradient, using the Hessian for the
            // exact quadratic-model step length.
            let d = cur.gradient.clone();
            let mut ad = vec![0.0; d.len()];
            hess.apply(&d, &mut ad);
            let dad = dot(&d, &ad);
            let d2 = dot(&d, &d);
            let s0 = if dad > 0.0 { d2 / dad } else { 1.0 };
            let mut s = s0;
            let mut taken = false;
            while s >= 1e-10 * s0 {
                let ws: Vec<f64> = w.iter().zip(&d).map(|(wi, di)| wi + s * di).collect();
                let trial = ev.eval(&ws)?;
                if above_floor(&trial) && trial.objective >= cur.objective + 1e-4 * s * d2 {
                    w = ws;
                    cur = trial;
                    taken = true;
                    break;
                }
                s *= 0.5;
            }
            if !taken {
                return Err(Halt::Stalled {
                    weights: w,
                    eval: Box::new(cur),
                    iterations: it,
                });
            }
        }
    }
    if cur.grad_inf() <= stop {
        return Ok(Solved {
            eval: cur,
            iterations: cap,
        });
    }
    Err(Halt::MaxIterations {
        weights: w,
        eval: Box::new(cur),
        iterations: cap,
    })
}

fn quasi_newton<const D: usize>(
    ev: &mut Evaluator<D>,
    init_weights: &[f64],
    stop: f64,
    cap: usize,
) -> Result<Solved<D>, Halt<D>> {
    // Minimises f = -g. History pairs follow the usual two-loop recursion.
    let n = init_weights.len();
    let d_dim = ev.domain.extents().len(); // == D
    let spacing = (ev.domain.volume() / n as f64).powf(1.0 / d_dim as f64);
    // Curvature scale: a cell couples to its neighbours with total strength
    // about surface / (2 spacing) ~ D * spacing^(D-2).
    let mut gamma = 1.0 / (d_dim as f64 * spacing.powi(d_dim as i32 - 2));
    let mut w = init_weights.to_vec();
    let mut cur = ev.eval(&w)?;
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    for it in 0..cap {
        if cur.grad_inf() <= stop {
            return Ok(Solved {
                eval: cur,
                iterations: it,
            });
        }
        let grad_f: Vec<f64> = cur.gradient.iter().map(|g| -g).collect();
        let mut dir = two_loop(&hist, &grad_f, gamma);
        let mut slope = dot(&dir, &grad_f);
        if slope >= 0.0 {
            hist.clear();
            dir = grad_f.iter().map(|g| -gamma * g).collect();
            slope = dot(&dir, &grad_f);
        }
        let f0 = -cur.objective;
        let mut t = 1.0;
        let mut next = None;
        while t >= 1e-12 {
            let wt: Vec<f64> = w.iter().zip(&dir).map(|(wi, di)| wi + t * di).collect();
            let trial = ev.eval(&wt)?;
            if -trial.objective <= f0 + 1e-4 * t * slope {
                next = Some((wt, trial, t));
                break;
            }
            t *= 0.5;
        }
        let Some((wt, trial, t)) = next else {
            return Err(Halt::Stalled {
                weights: w,
                eval: Box::new(cur),
                iterations: it,
            });
        };
        let s: Vec<f64> = dir.iter().map(|di| t * di).collect();
        let y: Vec<f64> = trial
            .gradient
            .iter()
            .zip(&cur.gradient)
            .map(|(gn, go)| -gn + go)
            .collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) {
            gamma = sy / dot(&y, &y);
            hist.push_back((s, y, 1.0 / sy));
            if hist.len() > 10 {
                hist.pop_front();
            }
        }
        w = wt;
        cur = trial;
    }
    if cur.grad_inf() <= stop {
        return Ok(Solved {
            eval: cur,
            iterations: cap,
        });
    }
    Err(Halt::MaxIterations {
        weights: w,
        eval: Box::new(cur),
        iterations: cap,
    })
}

fn two_loop(hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, grad: &[f64], gamma: f64) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let alpha = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * yi;
        }
        alphas.push(alpha);
    }
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), &alpha) in hist.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * si;
        }
    }
    for qi in q.iter_mut() {
        *qi = -*qi;
    }
    q
}

/// Zero-initialised weight solve at fixed seed positions.
pub fn fit_weights<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    targets: &[f64],
    tolerance: f64,
) -> Result<(LaguerreDiagram<D>, SolveReport), TransportError> {
    let zeros = vec![0.0; positions.len()];
    solve_weights(
        domain,
        positions,
        &zeros,
        targets,
        &SolveConfig::new(tolerance),
    )
}

/// Initial weights treating each target volume as a ball: `w_i = r_i^2`
/// with `r_i` the volume-equivalent radius. Useful when fitting a diagram
/// to measured grains, where cold zero weights are far from the solution.
pub fn packing_weights<const D: usize>(targets: &[f64]) -> Vec<f64> {
    targets
        .iter()
        .map(|&m| match D {
            2 => m / std::f64::consts::PI,
            3 => (3.0 * m / (4.0 * std::f64::consts::PI)).powf(2.0 / 3.0),
            _ => unreachable!("diagrams are 2D or 3D"),
        })
        .collect()
}
