//! Robot model files.
//!
//! ```toml
//! name = "planar-2r"
//! [tool]
//! translation = [1.0, 0.0, 0.0]
//! [[joints]]
//! axis = [0.0, 0.0, 1.0]
//! limits = [-3.1, 3.1]
//! ```
//!
//! Transforms are a translation plus an axis-angle rotation vector; both
//! default to zero.

use std::path::Path;

use nalgebra::{Isometry3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{Joint, KinematicChain};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformRecord {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: [f64; 3],
}

impl TransformRecord {
    fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::new(Vector3::from(self.translation), Vector3::from(self.rotation))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRecord {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rotation: [f64; 3],
    pub axis: [f64; 3],
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub name: String,
    #[serde(default)]
    pub base: TransformRecord,
    #[serde(default)]
    pub tool: TransformRecord,
    pub joints: Vec<JointRecord>,
}

/// Models shipped with the crate: `(name, toml source)`.
pub const BUNDLED_MODELS: &[(&str, &str)] = &[
    ("ur5-like", include_str!("../../models/ur5-like.toml")),
    ("panda-like", include_str!("../../models/panda-like.toml")),
    ("planar-2r", include_str!("../../models/planar-2r.toml")),
    ("planar-3r", include_str!("../../models/planar-3r.toml")),
];

impl ChainFile {
    pub fn build(&self) -> Result<KinematicChain> {
        let joints = self
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let axis = Vector3::from(j.axis);
                if axis.norm() < 1e-9 {
                    return Err(Error::InvalidChain(format!("joint {i}: zero axis")));
                }
                Ok(Joint {
                    offset: Isometry3::new(Vector3::from(j.translation), Vector3::from(j.rotation)),
                    axis: Unit::new_normalize(axis),
                    limits: j.limits,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        KinematicChain::new(
            self.name.clone(),
            self.base.to_isometry(),
            joints,
            self.tool.to_isometry(),
        )
    }
}

impl KinematicChain {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let file: ChainFile = toml::from_str(src).map_err(|e| Error::InvalidChain(e.to_string()))?;
        file.build()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&src)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, src) = BUNDLED_MODELS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::InvalidChain(format!("no bundled model named `{name}`")))?;
        Self::from_toml_str(src)
    }

    /// A bundled model name or a path to a model file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        if BUNDLED_MODELS.iter().any(|(n, _)| *n == name_or_path) {
            Self::bundled(name_or_path)
        } else {
            Self::from_file(Path::new(name_or_path))
        }
    }

    /// Replaces the base transform, e.g. to place the robot next to a
    /// surface.
    pub fn with_base(mut self, base: Isometry3<f64>) -> Self {
        self.base = base;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_models_load() {
        let dofs: Vec<_> = BUNDLED_MODELS
            .iter()
            .map(|(n, _)| KinematicChain::bundled(n).unwrap().dof())
            .collect();
        assert_eq!(dofs, vec![6, 7, 2, 3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = "name = \"x\"\n[[joints]]\naxis=[0,0,1]\nlimits=[-1,1]\nspeed=2\n[[joints]]\naxis=[0,0,1]\nlimits=[-1,1]\n";
        let err = KinematicChain::from_toml_str(src).unwrap_err();
        assert!(err.to_string().contains("speed"), "{err}");
    }

    #[test]
    fn panda_home_reaches_forward() {
        let chain = KinematicChain::bundled("panda-like").unwrap();
        let p = chain
            .fk(&[0.0, -0.785, 0.0, -2.356, 0.0, 1.571, 0.785])
            .unwrap();
        // ready pose: tool in front of the base, pointing down
        assert!(p.position.x > 0.25 && p.position.x < 0.45, "{:?}", p.position);
        assert!(p.tool_axis().z < -0.99);
    }
}
