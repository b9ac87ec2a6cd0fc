//! Run configuration: a versioned TOML schema with strict validation.
//! Unknown keys are rejected so typos fail loudly instead of silently
//! falling back to defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

pub const SCHEMA: &str = "laguerre-run/1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must equal [`SCHEMA`]; guards against stale configs.
    pub schema: String,
    pub mode: Mode,
    #[serde(default)]
    pub rng_seed: u64,
    pub domain: DomainBlock,
    pub seeds: Option<SeedsBlock>,
    pub targets: Option<TargetsBlock>,
    pub solver: Option<SolverBlock>,
    pub lloyd: Option<LloydBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    pub report: Option<ReportBlock>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Lloyd regularisation: sample seeds, alternate centroid moves with
    /// weight re-solves.
    Generate,
    /// Weight solve only, seeds fixed.
    Fit,
    /// Plain diagram of given seeds and weights, no optimisation.
    Diagram,
    /// Statistics over an existing diagram export.
    Report,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Generate => "generate",
            Mode::Fit => "fit",
            Mode::Diagram => "diagram",
            Mode::Report => "report",
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub periodic: bool,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SeedSource {
    Uniform,
    File,
    Gradient,
    Banded,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsBlock {
    pub source: SeedSource,
    /// CSV `id,x,y[,z][,w][,m][,attr]`; required for `source = "file"`.
    pub path: Option<PathBuf>,
    /// Axis for `gradient` and `banded`.
    pub axis: Option<usize>,
    /// Target-volume class thresholds for `banded`.
    pub thresholds: Option<Vec<f64>>,
    /// Per-class interval lists as fractions of the axis extent.
    pub bands: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TargetSource {
    Bimodal,
    Lognormal,
    UniformRatio,
    Explicit,
    File,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsBlock {
    pub source: TargetSource,
    /// CSV with an `m` column; required for `source = "file"`.
    pub path: Option<PathBuf>,
    pub small: Option<usize>,
    pub large: Option<usize>,
    pub ratio: Option<f64>,
    pub count: Option<usize>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub max_ratio: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    #[default]
    Newton,
    QuasiNewton,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WInit {
    #[default]
    Zeros,
    SpherePacking,
    File,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    /// Relative volume tolerance in (0, 1).
    pub tolerance: f64,
    #[serde(default)]
    pub method: MethodName,
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub w_init: WInit,
    /// CSV with a `w` column; required for `w_init = "file"`.
    pub w_init_path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LloydBlock {
    pub iterations: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    pub displacement_stop: Option<f64>,
    pub sphericity_stop: Option<f64>,
}

fn default_damping() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    /// All artifacts land here; default `.`, overridable by --output-dir.
    pub directory: Option<PathBuf>,
    /// Diagram export filename (default `diagram.json`).
    pub diagram: Option<String>,
    /// Solve/trace or statistics artifact filename (default `report.json`).
    pub report: Option<String>,
    /// When set, also write a legacy VTK polydata file under this name.
    pub vtk: Option<String>,
    /// Wrap periodic cells into the box for the VTK file.
    pub wrap: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportBlock {
    /// Diagram export to analyse.
    pub diagram: PathBuf,
    /// Optional reference centroids CSV (`id,x,y[,z]`).
    pub reference: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema != SCHEMA {
            return Err(CliError::Config(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                config.schema
            )));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn dimension(&self) -> usize {
        self.domain.lower.len()
    }

    /// Mode / block consistency and referenced-file existence. Field-level
    /// numeric validation is left to the library, which owns those bounds.
    fn validate(&self) -> Result<(), CliError> {
        let d = self.domain.lower.len();
        if d != self.domain.upper.len() {
            return Err(config_err("domain lower and upper differ in length"));
        }
        if d != 2 && d != 3 {
            return Err(config_err("domain must be 2- or 3-dimensional"));
        }

        let forbid = |present: bool, block: &str| {
            if present {
                Err(CliError::Config(format!(
                    "[{block}] is not used in mode \"{}\"",
                    self.mode
                )))
            } else {
                Ok(())
            }
        };
        let require = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::Config(format!(
                    "mode \"{}\" needs a [{block}] block",
                    self.mode
                )))
            }
        };

        match self.mode {
            Mode::Generate => {
                require(self.targets.is_some(), "targets")?;
                require(self.solver.is_some(), "solver")?;
                require(self.lloyd.is_some(), "lloyd")?;
                forbid(self.report.is_some(), "report")?;
                let solver = self.solver.as_ref().unwrap();
                if solver.w_init != WInit::Zeros {
                    return Err(config_err(
                        "generate always starts from zero weights; drop w_init",
                    ));
                }
                if solver.max_iterations.is_some() {
                    return Err(config_err(
                        "max_iterations applies to mode \"fit\" only",
                    ));
                }
            }
            Mode::Fit => {
                require(self.targets.is_some(), "targets")?;
                require(self.solver.is_some(), "solver")?;
                forbid(self.lloyd.is_some(), "lloyd")?;
                forbid(self.report.is_some(), "report")?;
            }
            Mode::Diagram => {
                require(self.seeds.is_some(), "seeds")?;
                forbid(self.solver.is_some(), "solver")?;
                forbid(self.lloyd.is_some(), "lloyd")?;
                forbid(self.report.is_some(), "report")?;
                if self.seeds.as_ref().unwrap().source != SeedSource::File {
                    return Err(config_err("mode \"diagram\" needs seeds from a file"));
                }
            }
            Mode::Report => {
                require(self.report.is_some(), "report")?;
                forbid(self.seeds.is_some(), "seeds")?;
                forbid(self.targets.is_some(), "targets")?;
                forbid(self.solver.is_some(), "solver")?;
                forbid(self.lloyd.is_some(), "lloyd")?;
            }
        }

        if let Some(seeds) = &self.seeds {
            seeds.validate()?;
        }
        if let Some(targets) = &self.targets {
            targets.validate()?;
        }
        if let Some(solver) = &self.solver {
            if solver.w_init == WInit::File {
                let path = solver
                    .w_init_path
                    .as_ref()
                    .ok_or_else(|| config_err("w_init = \"file\" needs w_init_path"))?;
                exists(path)?;
            } else if solver.w_init_path.is_some() {
                return Err(config_err("w_init_path is only used with w_init = \"file\""));
            }
        }
        if let Some(report) = &self.report {
            exists(&report.diagram)?;
            if let Some(reference) = &report.reference {
                exists(reference)?;
            }
        }
        Ok(())
    }
}

impl SeedsBlock {
    fn validate(&self) -> Result<(), CliError> {
        let need = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(config_err(msg))
            }
        };
        match self.source {
            SeedSource::Uniform => {
                need(self.path.is_none(), "seeds path is not used by source \"uniform\"")?;
                need(self.axis.is_none(), "seeds axis is not used by source \"uniform\"")?;
                need(
                    self.thresholds.is_none() && self.bands.is_none(),
                    "thresholds/bands are only used by source \"banded\"",
                )?;
            }
            SeedSource::File => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| config_err("seeds source \"file\" needs a path"))?;
                exists(path)?;
                need(
                    self.axis.is_none() && self.thresholds.is_none() && self.bands.is_none(),
                    "axis/thresholds/bands are not used by source \"file\"",
                )?;
            }
            SeedSource::Gradient => {
                need(self.axis.is_some(), "seeds source \"gradient\" needs an axis")?;
                need(self.path.is_none(), "seeds path is not used by source \"gradient\"")?;
                need(
                    self.thresholds.is_none() && self.bands.is_none(),
                    "thresholds/bands are only used by source \"banded\"",
                )?;
            }
            SeedSource::Banded => {
                need(self.axis.is_some(), "seeds source \"banded\" needs an axis")?;
                need(self.thresholds.is_some(), "seeds source \"banded\" needs thresholds")?;
                need(self.bands.is_some(), "seeds source \"banded\" needs bands")?;
                need(self.path.is_none(), "seeds path is not used by source \"banded\"")?;
            }
        }
        Ok(())
    }
}

impl TargetsBlock {
    fn validate(&self) -> Result<(), CliError> {
        // Exactly the fields of the chosen source, nothing else: a stray
        // parameter almost certainly means the user meant another source.
        let allowed: &[&str] = match self.source {
            TargetSource::Bimodal => &["small", "large", "ratio"],
            TargetSource::Lognormal => &["count", "mean", "sd"],
            TargetSource::UniformRatio => &["count", "max_ratio"],
            TargetSource::Explicit => &["values"],
            TargetSource::File => &["path"],
        };
        let fields: [(&str, bool); 9] = [
            ("path", self.path.is_some()),
            ("small", self.small.is_some()),
            ("large", self.large.is_some()),
            ("ratio", self.ratio.is_some()),
            ("count", self.count.is_some()),
            ("mean", self.mean.is_some()),
            ("sd", self.sd.is_some()),
            ("max_ratio", self.max_ratio.is_some()),
            ("values", self.values.is_some()),
        ];
        for (name, present) in fields {
            let allowed_here = allowed.contains(&name);
            if present && !allowed_here {
                return Err(CliError::Config(format!(
                    "targets field {name:?} is not used by source {:?}",
                    self.source
                )));
            }
            if !present && allowed_here {
                return Err(CliError::Config(format!(
                    "targets source {:?} needs field {name:?}",
                    self.source
                )));
            }
        }
        if self.source == TargetSource::File {
            exists(self.path.as_ref().unwrap())?;
        }
        Ok(())
    }
}

fn config_err(msg: &str) -> CliError {
    CliError::Config(msg.to_string())
}

fn exists(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "referenced file {} does not exist",
            path.display()
        )))
    }
}
