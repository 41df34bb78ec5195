use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{KinematicChain, ToleranceSpec};
use crate::planners::{CoverageProblem, Method, PlannerParams};
use crate::surface::{generate_benchmark_surface, load_mesh_file, SurfaceKind, SurfaceMesh, SurfaceSpec};

/// Where the surface comes from: a generated benchmark shape or a mesh file.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceSource {
    Mesh(PathBuf),
    Generated(SurfaceSpec),
}

impl SurfaceSource {
    /// A generated surface placed in front of the bundled arms, or a mesh
    /// file when `s` is not a known kind.
    pub fn parse(s: &str) -> Result<Self> {
        match s.parse::<SurfaceKind>() {
            Ok(kind) => Ok(SurfaceSource::Generated(preset_surface(kind))),
            Err(_) if Path::new(s).exists() => Ok(SurfaceSource::Mesh(s.into())),
            Err(_) => Err(Error::InvalidSurface(format!(
                "`{s}` is neither a surface kind (stairs, hemisphere, bowl, floor-grid) nor an existing mesh file"
            ))),
        }
    }

    pub fn load(&self) -> Result<SurfaceMesh> {
        match self {
            SurfaceSource::Mesh(path) => load_mesh_file(path),
            SurfaceSource::Generated(spec) => generate_benchmark_surface(spec),
        }
    }

    /// Same shape at roughly `n` vertices; mesh files cannot be resampled.
    pub fn with_target_count(&self, n: usize) -> Result<Self> {
        match self {
            SurfaceSource::Generated(spec) => Ok(SurfaceSource::Generated(spec.clone().with_target_count(n))),
            SurfaceSource::Mesh(path) => Err(Error::InvalidParameter(format!(
                "cannot change the target count of mesh file {}",
                path.display()
            ))),
        }
    }
}

/// Placements reachable by the bundled 7-DoF arm with its base at the
/// origin.
pub fn preset_surface(kind: SurfaceKind) -> SurfaceSpec {
    match kind {
        SurfaceKind::HemisphereExterior => SurfaceSpec::hemisphere_exterior([0.45, 0.0, 0.2], 0.15, 1.0, 4, 15),
        SurfaceKind::BowlInterior => SurfaceSpec::bowl_interior([0.5, 0.0, 0.45], 0.15, 1.0, 4, 15),
        SurfaceKind::FloorGrid => SurfaceSpec::floor_grid([0.5, 0.0, 0.1], 0.3, 0.3, 8, 8),
        SurfaceKind::Stairs => SurfaceSpec::stairs([0.35, 0.0, 0.0], 0.12, 0.15, 0.3, 2, 5),
    }
}

/// A full benchmark run, as read from a TOML file. Exactly one of
/// `surface` (a generated shape) and `mesh` (a mesh file) must be given.
///
/// ```toml
/// robot = "panda-like"
/// methods = ["cart-tsp-iklink", "joint-gtsp", "h-joint-gtsp"]
/// repeats = 10
///
/// [surface]
/// kind = "hemisphere-exterior"
/// origin = [0.45, 0.0, 0.2]
/// cap_angle = 1.0
/// resolution = [4, 15]
///
/// [tolerance]
/// free_spin_about_normal = true
///
/// [planner]
/// samples = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default)]
    pub surface: Option<SurfaceSpec>,
    #[serde(default)]
    pub mesh: Option<PathBuf>,
    /// Bundled model name or model file.
    #[serde(default = "default_robot")]
    pub robot: String,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Repeat `i` plans with seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerance: ToleranceSpec,
    #[serde(default)]
    pub planner: PlannerParams,
    /// Densities for a scaling sweep.
    #[serde(default)]
    pub densities: Vec<usize>,
}

fn default_robot() -> String {
    "panda-like".into()
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_repeats() -> usize {
    10
}

impl BenchConfig {
    pub fn new(source: SurfaceSource) -> Self {
        let mut cfg = Self {
            surface: None,
            mesh: None,
            robot: default_robot(),
            methods: default_methods(),
            repeats: default_repeats(),
            seed: 0,
            tolerance: ToleranceSpec::default(),
            planner: PlannerParams::default(),
            densities: Vec::new(),
        };
        cfg.set_source(source);
        cfg
    }

    pub fn source(&self) -> Result<SurfaceSource> {
        match (&self.surface, &self.mesh) {
            (Some(spec), None) => Ok(SurfaceSource::Generated(spec.clone())),
            (None, Some(path)) => Ok(SurfaceSource::Mesh(path.clone())),
            _ => Err(Error::Config {
                key: "surface".into(),
                message: "give exactly one of `surface` and `mesh`".into(),
            }),
        }
    }

    pub fn set_source(&mut self, source: SurfaceSource) {
        (self.surface, self.mesh) = match source {
            SurfaceSource::Generated(spec) => (Some(spec), None),
            SurfaceSource::Mesh(path) => (None, Some(path)),
        };
    }

    /// The same benchmark at roughly `n` targets.
    pub fn with_target_count(&self, n: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.set_source(self.source()?.with_target_count(n)?);
        Ok(cfg)
    }

    /// Hemisphere exterior with about `n` targets, 7-DoF arm, spin free
    /// about the normal.
    pub fn wok(n: usize) -> Self {
        let spec = preset_surface(SurfaceKind::HemisphereExterior).with_target_count(n);
        Self::new(SurfaceSource::Generated(spec))
    }

    pub fn from_toml_str(src: &str) -> Result<Self> {
        let de = toml::Deserializer::new(src);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner().message().to_string();
            let mut key = e.path().to_string();
            // unknown keys are reported at their parent; name the key itself
            if let Some(field) = inner.strip_prefix("unknown field `").and_then(|r| r.split('`').next()) {
                key = if key == "." { field.to_string() } else { format!("{key}.{field}") };
            }
            Error::Config { key, message: inner }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.source()?;
        let key_err = |key: &str, e: Error| Error::Config {
            key: key.into(),
            message: e.to_string(),
        };
        if self.methods.is_empty() {
            return Err(Error::Config {
                key: "methods".into(),
                message: "at least one method is required".into(),
            });
        }
        if self.repeats == 0 {
            return Err(Error::Config {
                key: "repeats".into(),
                message: "must be at least 1".into(),
            });
        }
        self.tolerance.validate().map_err(|e| key_err("tolerance", e))?;
        self.planner.validate().map_err(|e| key_err("planner", e))
    }

    pub fn chain(&self) -> Result<KinematicChain> {
        KinematicChain::load(&self.robot)
    }

    pub fn problem(&self) -> Result<CoverageProblem> {
        CoverageProblem::from_mesh(&self.source()?.load()?)
    }
}
