//! Lloyd regularisation: alternate damped centroid moves with weight
//! re-solves so cells become rounder while keeping their volumes.
//!
//! The driver tracks the transport energy `E = sum_i integral_{L_i}
//! |x - x_i|^2 dx`, which is nonincreasing over iterations when the inner
//! solves are exact; an increase beyond `1e-9 * E_initial` indicates a
//! broken inner solve and aborts the run.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::diagram::{Domain, LaguerreDiagram};
use crate::transport::{solve_weights, SolveConfig, TransportError};
use crate::vec;

#[derive(Debug, Error)]
pub enum LloydError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("cell {cell} is empty at iteration {iteration}: centroid undefined")]
    EmptyCell { cell: usize, iteration: usize },
    #[error("energy increased from {from:.17e} to {to:.17e} at iteration {iteration}")]
    EnergyIncreased {
        iteration: usize,
        from: f64,
        to: f64,
    },
    #[error("regularisation steps must be >= 1, got {0}")]
    BadIterations(usize),
    #[error("damping must lie in (0, 1], got {0}")]
    BadDamping(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct LloydConfig {
    /// Maximum number of regularisation steps (>= 1).
    pub iterations: usize,
    /// Damping of the centroid move, in (0, 1]: `x <- (1-l)x + l*centroid`.
    pub damping: f64,
    /// Relative volume tolerance of every inner weight solve.
    pub tolerance: f64,
    pub method: crate::transport::Method,
    /// Stop early once the max seed displacement drops below this length;
    /// `default_displacement_stop` gives a sensible threshold.
    pub displacement_stop: Option<f64>,
    /// Stop early once the mean cell sphericity reaches this value.
    pub sphericity_stop: Option<f64>,
}

impl LloydConfig {
    pub fn new(iterations: usize, damping: f64, tolerance: f64) -> Self {
        Self {
            iterations,
            damping,
            tolerance,
            method: crate::transport::Method::DampedNewton,
            displacement_stop: None,
            sphericity_stop: None,
        }
    }
}

/// Default displacement threshold for the opt-in early stop.
pub fn default_displacement_stop<const D: usize>(domain: &Domain<D>) -> f64 {
    1e-4 * domain.diameter()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    IterationCap,
    Displacement,
    Sphericity,
}

#[derive(Clone, Debug)]
pub struct LloydIteration {
    /// Energy after this step's move and re-solve.
    pub energy: f64,
    /// Max seed displacement of this step (periodic metric on periodic
    /// domains).
    pub max_displacement: f64,
    /// Diagram evaluations spent by this step's weight solve.
    pub evaluations: usize,
    pub solver_iterations: usize,
    pub volumes: Vec<f64>,
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct LloydTrace {
    /// Energy of the initial (pre-move) volume-correct diagram.
    pub initial_energy: f64,
    /// Evaluations spent by the initial weight solve.
    pub initial_evaluations: usize,
    pub iterations: Vec<LloydIteration>,
    pub stop: StopReason,
    pub wall_time: Duration,
}

/// Transport energy of a diagram: total second moment of every cell about
/// its seed.
pub fn diagram_energy<const D: usize>(diagram: &LaguerreDiagram<D>) -> f64 {
    (0..diagram.len())
        .map(|i| {
            diagram.cells()[i]
                .measures
                .second_moment_about(diagram.generators()[i].position)
        })
        .sum()
}

/// Energy of seed positions: solves the weights for the target volumes,
/// then sums second moments. This is the quantity Lloyd iteration descends.
pub fn energy<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    targets: &[f64],
    tolerance: f64,
) -> Result<f64, TransportError> {
    let zeros = vec![0.0; positions.len()];
    let (diagram, _) = solve_weights(
        domain,
        positions,
        &zeros,
        targets,
        &SolveConfig::new(tolerance),
    )?;
    Ok(diagram_energy(&diagram))
}

/// `dE/dx_i = 2 |L_i| (x_i - centroid_i)`; zero exactly at a centroidal
/// configuration. Errors on empty cells, whose centroid is undefined.
pub fn energy_gradient<const D: usize>(
    diagram: &LaguerreDiagram<D>,
) -> Result<Vec<[f64; D]>, LloydError> {
    (0..diagram.len())
        .map(|i| {
            let cell = &diagram.cells()[i];
            if cell.is_empty() {
                return Err(LloydError::EmptyCell { cell: i, iteration: 0 });
            }
            let m = &cell.measures;
            let d = vec::sub(diagram.generators()[i].position, m.centroid);
            Ok(vec::scale(d, 2.0 * m.volume))
        })
        .collect()
}

/// One damped centroid move: `x_i <- (1-l) x_i + l centroid(L_i)`, wrapped
/// back into the box on periodic domains.
pub fn step_positions<const D: usize>(
    diagram: &LaguerreDiagram<D>,
    damping: f64,
) -> Result<Vec<[f64; D]>, LloydError> {
    let domain = diagram.domain();
    (0..diagram.len())
        .map(|i| {
            let cell = &diagram.cells()[i];
            if cell.is_empty() {
                return Err(LloydError::EmptyCell { cell: i, iteration: 0 });
            }
            let x = diagram.generators()[i].position;
            // The unwrapped cell sits around its (wrapped) seed, so the blend
            // happens in unwrapped coordinates before wrapping back.
            Ok(domain.wrap(vec::lerp(x, cell.measures.centroid, damping)))
        })
        .collect()
}

/// Full regularisation driver: solve weights for the initial positions,
/// then alternate damped centroid moves with warm-started re-solves.
/// Returns the final diagram and a per-iteration trace.
pub fn regularize<const D: usize>(
    domain: &Domain<D>,
    positions: &[[f64; D]],
    targets: &[f64],
    config: &LloydConfig,
) -> Result<(LaguerreDiagram<D>, LloydTrace), LloydError> {
    if config.iterations == 0 {
        return Err(LloydError::BadIterations(0));
    }
    if !(config.damping > 0.0 && config.damping <= 1.0) {
        return Err(LloydError::BadDamping(config.damping));
    }
    let start = Instant::now();
    let solver = SolveConfig::new(config.tolerance).with_method(config.method);
    let zeros = vec![0.0; positions.len()];
    let (mut diagram, first) = solve_weights(domain, positions, &zeros, targets, &solver)?;
    let initial_energy = diagram_energy(&diagram);
    let budget = 1e-9 * initial_energy;
    let mut prev_volumes = diagram.volumes();
    let mut trace = LloydTrace {
        initial_energy,
        initial_evaluations: first.diagram_evaluations,
        iterations: Vec::with_capacity(config.iterations),
        stop: StopReason::IterationCap,
        wall_time: Duration::ZERO,
    };
    let mut prev_energy = initial_energy;
    for k in 0..config.iterations {
        let tick = Instant::now();
        let new_positions = step_positions(&diagram, config.damping).map_err(|e| match e {
            LloydError::EmptyCell { cell, .. } => LloydError::EmptyCell { cell, iteration: k },
            other => other,
        })?;
        let max_displacement = diagram
            .generators()
            .iter()
            .zip(&new_positions)
            .map(|(s, &p)| domain.dist_sq(s.position, p).sqrt())
            .fold(0.0, f64::max);
        let warm: Vec<f64> = diagram.generators().iter().map(|s| s.weight).collect();
        let (next, report) = solve_weights(domain, &new_positions, &warm, targets, &solver)?;
        diagram = next;
        let energy = diagram_energy(&diagram);
        let volumes = diagram.volumes();
        // The descent proof assumes exact volume feasibility. Solving to
        // |v_i - m_i| <= tol permits a genuine rise of up to
        // spread(w)/2 * sum_i |v_i - v_i'| between consecutive partitions;
        // only a rise beyond that slack (plus rounding) signals a bug.
        let (wmin, wmax) = diagram
            .generators()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.weight), hi.max(s.weight))
            });
        let feasibility: f64 = volumes
            .iter()
            .zip(&prev_volumes)
            .zip(targets)
            .map(|((v, p), m)| (v - m).abs() + (p - m).abs())
            .sum();
        if energy > prev_energy + budget + 0.5 * (wmax - wmin) * feasibility {
            return Err(LloydError::EnergyIncreased {
                iteration: k,
                from: prev_energy,
                to: energy,
            });
        }
        prev_energy = energy;
        trace.iterations.push(LloydIteration {
            energy,
            max_displacement,
            evaluations: report.diagram_evaluations,
            solver_iterations: report.outer_iterations,
            volumes: volumes.clone(),
            wall_time: tick.elapsed(),
        });
        prev_volumes = volumes;
        if let Some(threshold) = config.displacement_stop {
            if max_displacement < threshold {
                trace.stop = StopReason::Displacement;
                break;
            }
        }
        if let Some(threshold) = config.sphericity_stop {
            let mean = diagram
                .cells()
                .iter()
                .map(|c| c.measures.sphericity())
                .sum::<f64>()
                / diagram.len() as f64;
            if mean >= threshold {
                trace.stop = StopReason::Sphericity;
                break;
            }
        }
    }
    trace.wall_time = start.elapsed();
    Ok((diagram, trace))
}
