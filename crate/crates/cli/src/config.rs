use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use glassmesh::losses::WeightSpec;
use glassmesh::optim::StageSchedule;
use glassmesh::rig::TurntableRig;
use serde::{Deserialize, Serialize};

/// Printed under `--help`.
pub const CONFIG_KEYS: &str = "\
CONFIG FILE (JSON, unknown keys are rejected; relative paths resolve against the config's directory)
  units                    \"normalized\" (default) or \"mm\"; tolerances scale with the bbox diagonal either way
  seed                     RNG seed for view sampling (default 0)
  scene.mesh               ground-truth mesh, .obj or .ply (required)
  scene.eta                refractive index of the object, >= 1 (default 1.5)
  scene.rig.views          turntable views U (default 36)
  scene.rig.target         [x, y, z] look-at point on the turntable axis (default [0, 0, 0])
  scene.rig.distance       camera distance from target (default 3)
  scene.rig.elevation_deg  camera elevation in degrees (default 15)
  scene.rig.focal          focal length in pixels (default 130)
  scene.rig.width          image width in pixels (default 64)
  scene.rig.height         image height in pixels (default 64)
  scene.rig.monitor_distance  monitor distance behind target (default 1.5)
  scene.rig.monitor_width  monitor width in world units (default 6)
  scene.rig.monitor_height monitor height in world units (default 6)
  scene.rig.monitor_res    [columns, rows] of monitor pixels (default [256, 256])
  carve.resolution         voxels along the longest bbox axis (default 128)
  schedule.stages          remeshing stages L (default 10)
  schedule.iters_per_stage iterations per stage (default 500)
  schedule.lr_start        first step cap, as a fraction of the hull diagonal (default 0.005)
  schedule.lr_end          last step cap, as a fraction of the hull diagonal (default 0.002)
  schedule.momentum        Nesterov momentum (default 0.9)
  schedule.step_fraction   fraction of the preconditioned step taken, in (0, 1] (default 0.5)
  weights.alpha            refraction weight, number or \"auto\" (default auto = 1e4/(H*W))
  weights.beta             silhouette weight, number or \"auto\" (default auto = 0.5/min(H, W))
  weights.gamma            smoothness weight, number or \"auto\" (default auto = 1e3/mean edge length)
  paths.output             output directory shared by all subcommands (default \"out\")";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Normalized,
    Mm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Auto(Auto),
    Value(f64),
}

impl Default for Weight {
    fn default() -> Self {
        Weight::Auto(Auto::Auto)
    }
}

impl Weight {
    fn value(self) -> Option<f64> {
        match self {
            Weight::Auto(_) => None,
            Weight::Value(v) => Some(v),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub alpha: Weight,
    pub beta: Weight,
    pub gamma: Weight,
}

impl Weights {
    pub fn spec(&self) -> WeightSpec<f64> {
        WeightSpec { alpha: self.alpha.value(), beta: self.beta.value(), gamma: self.gamma.value() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub mesh: PathBuf,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub rig: TurntableRig<f64>,
}

fn default_eta() -> f64 {
    1.5
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub stages: usize,
    pub iters_per_stage: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub momentum: f64,
    pub step_fraction: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        let s = StageSchedule::for_diaglen(1.0);
        Self {
            stages: s.stages,
            iters_per_stage: s.iters_per_stage,
            lr_start: s.lr_start,
            lr_end: s.lr_end,
            momentum: s.momentum,
            step_fraction: s.step_fraction,
        }
    }
}

impl Schedule {
    /// Learning rates in world units for a hull of diagonal `diaglen`.
    pub fn for_diaglen(&self, diaglen: f64) -> StageSchedule<f64> {
        StageSchedule {
            stages: self.stages,
            iters_per_stage: self.iters_per_stage,
            lr_start: self.lr_start * diaglen,
            lr_end: self.lr_end * diaglen,
            momentum: self.momentum,
            step_fraction: self.step_fraction,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarveConfig {
    pub resolution: usize,
}

impl Default for CarveConfig {
    fn default() -> Self {
        Self { resolution: glassmesh::carve::DEFAULT_RESOLUTION }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { output: "out".into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub seed: u64,
    pub scene: SceneConfig,
    #[serde(default)]
    pub carve: CarveConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub paths: Paths,
}

impl Config {
    /// Reads `path` and makes the relative paths inside it relative to the
    /// config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Config =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.scene.mesh = base.join(&cfg.scene.mesh);
        cfg.paths.output = base.join(&cfg.paths.output);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.rig.validate()?;
        if !(self.scene.eta >= 1.0) {
            bail!("scene.eta must be at least 1, got {}", self.scene.eta);
        }
        if self.carve.resolution < 2 {
            bail!("carve.resolution must be at least 2");
        }
        let s = self.schedule;
        if !(s.lr_start > 0.0 && s.lr_end > 0.0) {
            bail!("schedule learning rates must be positive");
        }
        self.schedule.for_diaglen(1.0).validate()?;
        self.weights.spec().resolve(1, 1, 1.0)?;
        Ok(())
    }
}
