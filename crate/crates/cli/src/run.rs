//! Pipeline drivers: one function per mode, dimension-dispatched from the
//! validated config. All artifacts are written atomically; a failing run
//! writes nothing.

use std::path::{Path, PathBuf};

use serde::Serialize;

use laguerre::diagram::{Domain, LaguerreDiagram, WeightedSeed};
use laguerre::lloyd::{regularize, LloydConfig, LloydTrace, StopReason};
use laguerre::seeding::{make_targets, sample_positions, SpatialSpec, VolumeSpec};
use laguerre::transport::{packing_weights, solve_weights, Method, SolveConfig, SolveReport};

use crate::config::{
    Mode, MethodName, RunConfig, SeedSource, SeedsBlock, TargetSource, TargetsBlock, WInit,
};
use crate::csvio::read_table;
use crate::export::{build, DiagramExport};
use crate::report::build_report;
use crate::vtk::write_vtk;
use crate::{CliError, TOOL_VERSION};

/// Command-line overrides; flags beat config values.
#[derive(Debug, Default)]
pub struct Overrides {
    pub rng_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

pub fn execute(config: &RunConfig, overrides: &Overrides) -> Result<(), CliError> {
    match config.dimension() {
        2 => drive::<2>(config, overrides),
        3 => drive::<3>(config, overrides),
        _ => unreachable!("dimension was validated"),
    }
}

fn drive<const D: usize>(config: &RunConfig, overrides: &Overrides) -> Result<(), CliError> {
    let domain = Domain::<D>::new(
        to_array::<D>(&config.domain.lower),
        to_array::<D>(&config.domain.upper),
        config.domain.periodic,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let rng_seed = overrides.rng_seed.unwrap_or(config.rng_seed);
    let out_dir = overrides
        .output_dir
        .clone()
        .or_else(|| config.output.directory.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let paths = Paths::new(&out_dir, config);

    match config.mode {
        Mode::Generate => generate::<D>(config, &domain, rng_seed, &paths),
        Mode::Fit => fit::<D>(config, &domain, rng_seed, &paths),
        Mode::Diagram => diagram::<D>(config, &domain, rng_seed, &paths),
        Mode::Report => report(config, &paths),
    }
}

struct Paths {
    diagram: PathBuf,
    report: PathBuf,
    vtk: Option<PathBuf>,
    wrap: bool,
}

impl Paths {
    fn new(out_dir: &Path, config: &RunConfig) -> Self {
        let name = |opt: &Option<String>, default: &str| {
            out_dir.join(opt.as_deref().unwrap_or(default))
        };
        Paths {
            diagram: name(&config.output.diagram, "diagram.json"),
            report: name(&config.output.report, "report.json"),
            vtk: config.output.vtk.as_ref().map(|v| out_dir.join(v)),
            wrap: config.output.wrap,
        }
    }
}

fn generate<const D: usize>(
    config: &RunConfig,
    domain: &Domain<D>,
    rng_seed: u64,
    paths: &Paths,
) -> Result<(), CliError> {
    let solver = config.solver.as_ref().unwrap();
    let lloyd = config.lloyd.as_ref().unwrap();
    let (targets, target_ids) = targets_for::<D>(config.targets.as_ref().unwrap(), domain, rng_seed)?;
    let (spec, seed_ids, attrs) = spatial_for::<D>(config.seeds.as_ref(), domain)?;
    let ids = merge_ids(seed_ids, target_ids, targets.len())?;
    let positions = sample_positions(&spec, domain, &targets, rng_seed)?;

    let mut lloyd_config = LloydConfig::new(lloyd.iterations, lloyd.damping, solver.tolerance);
    lloyd_config.method = method_of(solver.method);
    lloyd_config.displacement_stop = lloyd.displacement_stop;
    lloyd_config.sphericity_stop = lloyd.sphericity_stop;
    let (diagram, trace) = regularize(domain, &positions, &targets, &lloyd_config)?;

    build(&diagram, &ids, Some(&targets), attrs.as_deref()).write(&paths.diagram)?;
    TraceArtifact::from(&trace).write(&paths.report)?;
    if let Some(vtk) = &paths.vtk {
        write_vtk(vtk, &diagram, paths.wrap)?;
    }
    Ok(())
}

fn fit<const D: usize>(
    config: &RunConfig,
    domain: &Domain<D>,
    rng_seed: u64,
    paths: &Paths,
) -> Result<(), CliError> {
    let solver = config.solver.as_ref().unwrap();
    let (targets, target_ids) = targets_for::<D>(config.targets.as_ref().unwrap(), domain, rng_seed)?;
    let (spec, seed_ids, attrs) = spatial_for::<D>(config.seeds.as_ref(), domain)?;
    let ids = merge_ids(seed_ids, target_ids, targets.len())?;
    let positions = sample_positions(&spec, domain, &targets, rng_seed)?;

    let init = match solver.w_init {
        WInit::Zeros => vec![0.0; targets.len()],
        WInit::SpherePacking => packing_weights::<D>(&targets),
        WInit::File => {
            let table = read_table(solver.w_init_path.as_ref().unwrap())?;
            let weights = table.weights.ok_or_else(|| {
                CliError::Config("w_init file needs a w column".to_string())
            })?;
            if table.ids != ids {
                return Err(CliError::Config(
                    "w_init file ids do not match the seed ids".to_string(),
                ));
            }
            weights
        }
    };
    let solve_config = SolveConfig {
        method: method_of(solver.method),
        tolerance: solver.tolerance,
        max_outer: solver.max_iterations,
    };
    let (diagram, report) = solve_weights(domain, &positions, &init, &targets, &solve_config)?;

    build(&diagram, &ids, Some(&targets), attrs.as_deref()).write(&paths.diagram)?;
    SolveArtifact::from(&report).write(&paths.report)?;
    if let Some(vtk) = &paths.vtk {
        write_vtk(vtk, &diagram, paths.wrap)?;
    }
    Ok(())
}

fn diagram<const D: usize>(
    config: &RunConfig,
    domain: &Domain<D>,
    rng_seed: u64,
    paths: &Paths,
) -> Result<(), CliError> {
    // Positions come straight from the file: generators may legitimately
    // sit outside a bounded box, so no containment filter here.
    let seeds_block = config.seeds.as_ref().unwrap();
    let table = read_table(seeds_block.path.as_ref().unwrap())?;
    let positions = table.positions_as::<D>()?;
    let weights = table
        .weights
        .clone()
        .unwrap_or_else(|| vec![0.0; positions.len()]);
    let seeds: Vec<WeightedSeed<D>> = positions
        .iter()
        .zip(&weights)
        .map(|(&p, &w)| WeightedSeed::new(p, w))
        .collect();
    let diagram = LaguerreDiagram::compute(domain, &seeds)?;

    let targets = match config.targets.as_ref() {
        Some(block) => {
            let (targets, target_ids) = targets_for::<D>(block, domain, rng_seed)?;
            if targets.len() != seeds.len() {
                return Err(CliError::Config(format!(
                    "{} targets for {} seeds",
                    targets.len(),
                    seeds.len()
                )));
            }
            if let Some(tids) = target_ids {
                if tids != table.ids {
                    return Err(CliError::Config(
                        "target file ids do not match the seed ids".to_string(),
                    ));
                }
            }
            Some(targets)
        }
        None => table.masses.clone(),
    };

    build(&diagram, &table.ids, targets.as_deref(), table.attrs.as_deref())
        .write(&paths.diagram)?;
    if let Some(vtk) = &paths.vtk {
        write_vtk(vtk, &diagram, paths.wrap)?;
    }
    Ok(())
}

fn report(config: &RunConfig, paths: &Paths) -> Result<(), CliError> {
    let block = config.report.as_ref().unwrap();
    let export = DiagramExport::read(&block.diagram)?;
    if export.d != config.dimension() {
        return Err(CliError::Config(format!(
            "export is {}-dimensional but the config domain is {}-dimensional",
            export.d,
            config.dimension()
        )));
    }
    let reference = block.reference.as_ref().map(|p| read_table(p)).transpose()?;
    build_report(&export, reference.as_ref())?.write(&paths.report)
}

/// Targets plus the fixture ids when they come from a file.
fn targets_for<const D: usize>(
    block: &TargetsBlock,
    domain: &Domain<D>,
    rng_seed: u64,
) -> Result<(Vec<f64>, Option<Vec<u64>>), CliError> {
    let (spec, ids) = match block.source {
        TargetSource::Bimodal => (
            VolumeSpec::Bimodal {
                small: block.small.unwrap(),
                large: block.large.unwrap(),
                ratio: block.ratio.unwrap(),
            },
            None,
        ),
        TargetSource::Lognormal => (
            VolumeSpec::Lognormal {
                count: block.count.unwrap(),
                mean: block.mean.unwrap(),
                sd: block.sd.unwrap(),
            },
            None,
        ),
        TargetSource::UniformRatio => (
            VolumeSpec::UniformRatio {
                count: block.count.unwrap(),
                max_ratio: block.max_ratio.unwrap(),
            },
            None,
        ),
        TargetSource::Explicit => (VolumeSpec::Explicit(block.values.clone().unwrap()), None),
        TargetSource::File => {
            let table = read_table(block.path.as_ref().unwrap())?;
            let masses = table
                .masses
                .ok_or_else(|| CliError::Config("target file needs an m column".to_string()))?;
            (VolumeSpec::Explicit(masses), Some(table.ids))
        }
    };
    // All target sources share the library's policy: volumes are rescaled
    // proportionally to fill the box exactly.
    Ok((make_targets(&spec, domain, rng_seed)?, ids))
}

/// Spatial spec plus fixture ids/attrs when seeds come from a file. An
/// absent block means uniform sampling.
#[allow(clippy::type_complexity)]
fn spatial_for<const D: usize>(
    block: Option<&SeedsBlock>,
    domain: &Domain<D>,
) -> Result<(SpatialSpec<D>, Option<Vec<u64>>, Option<Vec<String>>), CliError> {
    let Some(block) = block else {
        return Ok((SpatialSpec::Uniform, None, None));
    };
    match block.source {
        SeedSource::Uniform => Ok((SpatialSpec::Uniform, None, None)),
        SeedSource::Gradient => Ok((
            SpatialSpec::Gradient {
                axis: block.axis.unwrap(),
            },
            None,
            None,
        )),
        SeedSource::Banded => Ok((
            SpatialSpec::banded(
                domain,
                block.axis.unwrap(),
                block.thresholds.clone().unwrap(),
                block.bands.as_ref().unwrap(),
            )?,
            None,
            None,
        )),
        SeedSource::File => {
            let table = read_table(block.path.as_ref().unwrap())?;
            let positions = table.positions_as::<D>()?;
            Ok((
                SpatialSpec::Explicit(positions),
                Some(table.ids),
                table.attrs,
            ))
        }
    }
}

/// Ids must agree when both seed and target fixtures supply them.
fn merge_ids(
    seeds: Option<Vec<u64>>,
    targets: Option<Vec<u64>>,
    n: usize,
) -> Result<Vec<u64>, CliError> {
    let ids = match (seeds, targets) {
        (Some(s), Some(t)) => {
            if s != t {
                return Err(CliError::Config(
                    "seed and target files disagree on ids".to_string(),
                ));
            }
            s
        }
        (Some(s), None) => s,
        (None, Some(t)) => t,
        (None, None) => (0..n as u64).collect(),
    };
    if ids.len() != n {
        return Err(CliError::Config(format!(
            "{} ids for {n} targets",
            ids.len()
        )));
    }
    Ok(ids)
}

fn method_of(name: MethodName) -> Method {
    match name {
        MethodName::Newton => Method::DampedNewton,
        MethodName::QuasiNewton => Method::QuasiNewton,
    }
}

fn to_array<const D: usize>(v: &[f64]) -> [f64; D] {
    let mut a = [0.0; D];
    a.copy_from_slice(v);
    a
}

/// Serialisable mirror of the core's solve report. Wall time is diagnostic
/// and inherently run-dependent; it lives here, never in the export.
#[derive(Serialize)]
struct SolveArtifact {
    schema: &'static str,
    tool_version: &'static str,
    method: &'static str,
    converged: bool,
    outer_iterations: usize,
    diagram_evaluations: usize,
    max_volume_error: f64,
    max_rel_volume_error: f64,
    rel_volume_errors: Vec<f64>,
    wall_time_seconds: f64,
}

impl From<&SolveReport> for SolveArtifact {
    fn from(r: &SolveReport) -> Self {
        SolveArtifact {
            schema: "laguerre-solve-report/1",
            tool_version: TOOL_VERSION,
            method: method_name(r.method),
            converged: r.converged,
            outer_iterations: r.outer_iterations,
            diagram_evaluations: r.diagram_evaluations,
            max_volume_error: r.max_volume_error,
            max_rel_volume_error: r.max_rel_volume_error(),
            rel_volume_errors: r.rel_volume_errors.clone(),
            wall_time_seconds: r.wall_time.as_secs_f64(),
        }
    }
}

#[derive(Serialize)]
struct TraceArtifact {
    schema: &'static str,
    tool_version: &'static str,
    initial_energy: f64,
    initial_evaluations: usize,
    stop: &'static str,
    wall_time_seconds: f64,
    iterations: Vec<TraceIteration>,
}

#[derive(Serialize)]
struct TraceIteration {
    energy: f64,
    max_displacement: f64,
    evaluations: usize,
    solver_iterations: usize,
    wall_time_seconds: f64,
}

impl From<&LloydTrace> for TraceArtifact {
    fn from(t: &LloydTrace) -> Self {
        TraceArtifact {
            schema: "laguerre-lloyd-trace/1",
            tool_version: TOOL_VERSION,
            initial_energy: t.initial_energy,
            initial_evaluations: t.initial_evaluations,
            stop: match t.stop {
                StopReason::IterationCap => "iteration-cap",
                StopReason::Displacement => "displacement",
                StopReason::Sphericity => "sphericity",
            },
            wall_time_seconds: t.wall_time.as_secs_f64(),
            iterations: t
                .iterations
                .iter()
                .map(|it| TraceIteration {
                    energy: it.energy,
                    max_displacement: it.max_displacement,
                    evaluations: it.evaluations,
                    solver_iterations: it.solver_iterations,
                    wall_time_seconds: it.wall_time.as_secs_f64(),
                })
                .collect(),
        }
    }
}

impl SolveArtifact {
    fn write(&self, path: &Path) -> Result<(), CliError> {
        write_json(path, self)
    }
}

impl TraceArtifact {
    fn write(&self, path: &Path) -> Result<(), CliError> {
        write_json(path, self)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    crate::atomic::write_atomic(path, |w| {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts are serialisable");
        bytes.push(b'\n');
        w.write_all(&bytes).map_err(CliError::from)
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::DampedNewton => "newton",
        Method::QuasiNewton => "quasi-newton",
    }
}
