//! Experiment configuration: TOML sections layered over built-in presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::DomainBoundary;
use crate::error::{Error, Result};
use crate::fields::{generate_gaussian, load_field, FieldFormat, GaussianFieldSpec, Normalisation};
use crate::grid::{CellField, DomainDecomposition, StructuredGrid2D};
use crate::mpm::EpsilonNorm;
use crate::mrcm::{AlphaMode, MrcmConfig, SpaceKind};
use crate::simulation::{Candidate, Method, PressureStep, Problem, SplittingConfig, StopRule};
use crate::transport::FluidModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in preset the file overrides.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    pub grid: GridConfig,
    pub decomposition: DecompositionConfig,
    pub field: FieldConfig,
    pub fluid: FluidConfig,
    pub boundary: BoundaryConfig,
    pub initial: InitialConfig,
    pub mrcm: MrcmSection,
    pub splitting: SplittingSection,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: None,
            seed: 1,
            grid: GridConfig::default(),
            decomposition: DecompositionConfig::default(),
            field: FieldConfig::default(),
            fluid: FluidConfig::default(),
            boundary: BoundaryConfig::default(),
            initial: InitialConfig::default(),
            mrcm: MrcmSection::default(),
            splitting: SplittingSection::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 64, ny: 64, lx: 1.0, ly: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub nsx: usize,
    pub nsy: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self { nsx: 4, nsy: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSource {
    Gaussian,
    File,
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalisationKind {
    Std,
    Raw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub source: FieldSource,
    /// Log-amplitude of the Gaussian field.
    pub delta: f64,
    pub mean: f64,
    pub normalisation: NormalisationKind,
    /// Pointwise standard deviation of the normalised field.
    pub std: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Value of a uniform field.
    pub value: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            source: FieldSource::Gaussian,
            delta: 2.5,
            mean: 0.8,
            normalisation: NormalisationKind::Std,
            std: 0.4,
            path: None,
            value: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FluidConfig {
    pub viscosity_ratio: f64,
}

impl Default for FluidConfig {
    fn default() -> Self {
        Self { viscosity_ratio: 40.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPreset {
    /// `p = 1` west, `p = 0` east, no flow elsewhere.
    PressureDrop,
    /// Unit inflow west, `p = 0` east, no flow elsewhere.
    UnitInflow,
    /// `p = 0` west, `p = -1e4` east, no flow elsewhere.
    Finger,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub preset: BoundaryPreset,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self { preset: BoundaryPreset::PressureDrop }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// Oil everywhere.
    Oil,
    /// Water west of a front with a bump at mid-height.
    Front,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub kind: InitialKind,
    /// Injected saturation.
    pub s_bar: f64,
    /// Front position, bump amplitude and bump half-width.
    pub front: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            kind: InitialKind::Oil,
            s_bar: 1.0,
            front: 0.3,
            amplitude: 0.05,
            width: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceChoice {
    Constant,
    Segments,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaChoice {
    Uniform,
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MrcmSection {
    pub space: SpaceChoice,
    /// Constant pieces per interface (`constant`).
    pub parts: usize,
    /// Fine edges per constant piece (`segments`).
    pub edges: usize,
    pub alpha: AlphaChoice,
    pub alpha_value: f64,
}

impl Default for MrcmSection {
    fn default() -> Self {
        Self {
            space: SpaceChoice::Constant,
            parts: 1,
            edges: 1,
            alpha: AlphaChoice::Uniform,
            alpha_value: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    FineReference,
    MrcmEveryStep,
    Mpm2p,
    Mpm2pNoUpdates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormChoice {
    Relative,
    Absolute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopChoice {
    Steps,
    Pvi,
    Breakthrough,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplittingSection {
    pub method: MethodChoice,
    pub eta: f64,
    pub epsilon_norm: NormChoice,
    /// Transport substeps per pressure step; ignored when `dt_p` is set.
    pub substeps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_p: Option<f64>,
    pub stop: StopChoice,
    /// Elliptic solves for `stop = "steps"`.
    pub steps: usize,
    /// Final PVI for `stop = "pvi"`.
    pub pvi: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub dt_cap: f64,
    pub breakthrough_threshold: f64,
}

impl Default for SplittingSection {
    fn default() -> Self {
        let s = SplittingConfig::default();
        Self {
            method: MethodChoice::Mpm2p,
            eta: 0.01,
            epsilon_norm: NormChoice::Relative,
            substeps: 1,
            dt_p: None,
            stop: StopChoice::Breakthrough,
            steps: 100,
            pvi: 1.0,
            max_steps: s.max_steps,
            safety: s.safety,
            dt_cap: s.dt_cap,
            breakthrough_threshold: s.breakthrough_threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    Vtk,
    Txt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Elliptic steps (from 0) at which saturation snapshots are written.
    pub snapshots: Vec<usize>,
    pub format: SnapshotFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshots: Vec::new(),
            format: SnapshotFormat::Vtk,
        }
    }
}

pub const PRESETS: [&str; 5] = ["gaussian-slab", "gaussian-slab-small", "high-contrast", "fractured", "finger"];

/// Overrides of each preset, in the configuration file syntax.
fn preset_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "gaussian-slab" => "",
        "gaussian-slab-small" => {
            r#"
            [grid]
            nx = 8
            ny = 8
            [decomposition]
            nsx = 2
            nsy = 2
            [splitting]
            stop = "steps"
            steps = 5
            "#
        }
        "high-contrast" => {
            r#"
            [grid]
            nx = 165
            ny = 90
            lx = 2.75
            ly = 1.5
            [decomposition]
            nsx = 11
            nsy = 6
            [field]
            source = "file"
            [boundary]
            preset = "unit-inflow"
            [mrcm]
            space = "linear"
            alpha = "adaptive"
            [splitting]
            substeps = 20
            "#
        }
        "fractured" => {
            r#"
            [grid]
            nx = 200
            ny = 200
            [decomposition]
            nsx = 10
            nsy = 10
            [field]
            source = "file"
            [boundary]
            preset = "unit-inflow"
            [mrcm]
            space = "linear"
            alpha = "adaptive"
            [splitting]
            substeps = 20
            "#
        }
        "finger" => {
            r#"
            [grid]
            nx = 300
            ny = 50
            lx = 3.0
            ly = 0.5
            [decomposition]
            nsx = 15
            nsy = 5
            [field]
            source = "uniform"
            [fluid]
            viscosity_ratio = 4.0
            [boundary]
            preset = "finger"
            [initial]
            kind = "front"
            [mrcm]
            space = "segments"
            edges = 1
            [splitting]
            stop = "steps"
            steps = 2000
            [output]
            snapshots = [0, 99, 599, 1099, 1599]
            "#
        }
        _ => return None,
    })
}

/// Recursive table merge: entries of `top` replace those of `base`.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn config_error(origin: &str, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{origin}: {e}"))
}

/// Resolved configuration of a named preset.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    parse_config_str(&format!("preset = \"{name}\""), "preset")
}

/// Parse a configuration text; `origin` names it in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentConfig> {
    // Checked on its own first so errors point at lines of the user's text.
    let own: ExperimentConfig = toml::from_str(text).map_err(|e| config_error(origin, e))?;
    let Some(name) = own.preset.clone() else {
        return Ok(own);
    };
    let source = preset_source(&name)
        .ok_or_else(|| config_error(origin, format!("unknown preset `{name}`, expected one of {}", PRESETS.join(", "))))?;
    let mut table: toml::Table = toml::from_str(source).expect("preset tables are valid");
    merge(&mut table, toml::from_str(text).map_err(|e| config_error(origin, e))?);
    ExperimentConfig::deserialize(toml::Value::Table(table)).map_err(|e| config_error(origin, e))
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = parse_config_str(&text, &path.display().to_string())?;
    // Relative field paths are taken from the configuration's directory.
    if let (Some(p), Some(dir)) = (config.field.path.as_mut(), path.parent()) {
        if p.is_relative() {
            *p = dir.join(&*p);
        }
    }
    Ok(config)
}

/// Documented defaults, as a configuration file.
pub fn defaults_reference(preset_name: Option<&str>) -> Result<String> {
    let config = match preset_name {
        Some(name) => preset(name)?,
        None => ExperimentConfig::default(),
    };
    toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<StructuredGrid2D> {
        StructuredGrid2D::new(self.grid.nx, self.grid.ny, self.grid.lx, self.grid.ly)
    }

    pub fn decomposition(&self) -> Result<DomainDecomposition> {
        DomainDecomposition::new(self.grid()?, self.decomposition.nsx, self.decomposition.nsy)
    }

    pub fn permeability(&self) -> Result<CellField> {
        let grid = self.grid()?;
        let f = &self.field;
        match f.source {
            FieldSource::Gaussian => {
                let normalisation = match f.normalisation {
                    NormalisationKind::Std => Normalisation::Std(f.std),
                    NormalisationKind::Raw => Normalisation::Raw,
                };
                let spec = GaussianFieldSpec {
                    delta: f.delta,
                    mean_coeff: f.mean,
                    seed: self.seed,
                    normalisation,
                };
                generate_gaussian(grid, &spec)
            }
            FieldSource::File => {
                let path = f
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("field source `file` needs field.path".into()))?;
                load_field(path, grid)
            }
            FieldSource::Uniform => {
                if !(f.value > 0.0) {
                    return Err(Error::Config(format!("uniform permeability must be positive, got {}", f.value)));
                }
                Ok(CellField::constant(grid, f.value))
            }
        }
    }

    pub fn boundary(&self) -> Result<DomainBoundary> {
        let grid = self.grid()?;
        Ok(match self.boundary.preset {
            BoundaryPreset::PressureDrop => DomainBoundary::pressure_drop(grid),
            BoundaryPreset::UnitInflow => DomainBoundary::unit_inflow(grid),
            BoundaryPreset::Finger => DomainBoundary::finger(grid),
        })
    }

    pub fn initial_saturation(&self) -> Result<CellField> {
        let grid = self.grid()?;
        let i = &self.initial;
        Ok(match i.kind {
            InitialKind::Oil => CellField::zeros(grid),
            InitialKind::Front => {
                let mid = 0.5 * grid.ly;
                CellField::from_fn(grid, |x, y| {
                    let front = i.front + i.amplitude * (-((y - mid) / i.width).powi(2)).exp();
                    if x < front {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
        })
    }

    pub fn problem(&self) -> Result<Problem> {
        let mut problem = Problem::waterflood(
            self.permeability()?,
            FluidModel::new(self.fluid.viscosity_ratio)?,
            self.boundary()?,
        );
        problem.s0 = self.initial_saturation()?;
        problem.s_bar = self.initial.s_bar;
        Ok(problem)
    }

    pub fn mrcm(&self) -> Result<MrcmConfig> {
        let m = &self.mrcm;
        let kind = match m.space {
            SpaceChoice::Constant => SpaceKind::Constant { parts: m.parts },
            SpaceChoice::Segments => SpaceKind::Segments { edges: m.edges },
            SpaceChoice::Linear => SpaceKind::Linear,
        };
        let alpha = match m.alpha {
            AlphaChoice::Uniform => {
                if !(m.alpha_value > 0.0) {
                    return Err(Error::Config(format!("alpha must be positive, got {}", m.alpha_value)));
                }
                AlphaMode::Uniform(m.alpha_value)
            }
            AlphaChoice::Adaptive => AlphaMode::adaptive(),
        };
        Ok(MrcmConfig {
            alpha,
            ..MrcmConfig::with_space(kind)
        })
    }

    pub fn method(&self) -> Method {
        match self.splitting.method {
            MethodChoice::FineReference => Method::FineReference,
            MethodChoice::MrcmEveryStep => Method::MrcmEveryStep,
            MethodChoice::Mpm2p => Method::Mpm2p { eta: self.splitting.eta },
            MethodChoice::Mpm2pNoUpdates => Method::Mpm2pNoUpdates,
        }
    }

    pub fn candidate(&self) -> Result<Candidate> {
        let method = self.method();
        if method == Method::FineReference {
            return Ok(Candidate::fine());
        }
        Ok(Candidate::multiscale(method.name(), method, self.decomposition()?, self.mrcm()?))
    }

    pub fn splitting(&self) -> SplittingConfig {
        let s = &self.splitting;
        SplittingConfig {
            pressure: match s.dt_p {
                Some(dt) => PressureStep::Interval(dt),
                None => PressureStep::Substeps(s.substeps),
            },
            stop: match s.stop {
                StopChoice::Steps => StopRule::Steps(s.steps),
                StopChoice::Pvi => StopRule::Pvi(s.pvi),
                StopChoice::Breakthrough => StopRule::Breakthrough,
            },
            max_steps: s.max_steps,
            safety: s.safety,
            dt_cap: s.dt_cap,
            breakthrough_threshold: s.breakthrough_threshold,
            epsilon_norm: match s.epsilon_norm {
                NormChoice::Relative => EpsilonNorm::Relative,
                NormChoice::Absolute => EpsilonNorm::Absolute,
            },
            snapshot_steps: self.output.snapshots.clone(),
        }
    }

    pub fn snapshot_format(&self) -> FieldFormat {
        match self.output.format {
            SnapshotFormat::Vtk => FieldFormat::Vtk,
            SnapshotFormat::Txt => FieldFormat::PlainMatrix,
        }
    }
}
