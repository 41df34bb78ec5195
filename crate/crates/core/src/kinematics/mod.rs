//! Serial revolute chains: forward kinematics, tolerance-aware pose error and
//! inverse kinematics.

mod ik;
mod model;
mod pose;

use std::ops::{Deref, DerefMut};

use nalgebra::{Isometry3, Matrix6xX, Translation3, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ik::{solve_ik, IkFailure, IkSettings};
pub use model::{ChainFile, JointRecord, TransformRecord, BUNDLED_MODELS};
pub use pose::{pose_error, target_pose, PoseError, ToleranceSpec};
pub(crate) use pose::tool_normal;

/// A point in joint space, in radians.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        Self(vec![0.0; dof])
    }

    /// Unweighted Euclidean distance in joint space.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        joint_distance(&self.0, &other.0)
    }

    /// Largest single-joint difference.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn lerp(&self, other: &JointConfig, t: f64) -> JointConfig {
        JointConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }
}

impl Deref for JointConfig {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for JointConfig {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

pub fn joint_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// End-effector pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self {
            position: iso.translation.vector,
            orientation: iso.rotation,
        }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// The tool's approach axis (local +z) in world coordinates.
    pub fn tool_axis(&self) -> Vector3<f64> {
        self.orientation * Vector3::z()
    }
}

/// One revolute joint: a fixed transform from the previous frame followed by
/// a rotation about `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub offset: Isometry3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    name: String,
    base: Isometry3<f64>,
    joints: Vec<Joint>,
    tool: Isometry3<f64>,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        base: Isometry3<f64>,
        joints: Vec<Joint>,
        tool: Isometry3<f64>,
    ) -> Result<Self> {
        if joints.len() < 2 {
            return Err(Error::InvalidChain(format!(
                "need at least 2 joints, got {}",
                joints.len()
            )));
        }
        for (i, j) in joints.iter().enumerate() {
            let [lo, hi] = j.limits;
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidChain(format!(
                    "joint {i}: limits [{lo}, {hi}] are not an increasing interval"
                )));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidChain(format!("joint {i}: axis is not unit")));
            }
        }
        Ok(Self {
            name: name.into(),
            base,
            joints,
            tool,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn base(&self) -> &Isometry3<f64> {
        &self.base
    }

    pub fn tool(&self) -> &Isometry3<f64> {
        &self.tool
    }

    pub fn fk(&self, q: &[f64]) -> Result<Pose> {
        self.check_dim(q)?;
        Ok(Pose::from_isometry(&self.fk_iso(q)))
    }

    pub(crate) fn check_dim(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    /// Forward kinematics without the dimension check.
    pub(crate) fn fk_iso(&self, q: &[f64]) -> Isometry3<f64> {
        let mut t = self.base;
        for (joint, &angle) in self.joints.iter().zip(q) {
            t = t * joint.offset;
            t.rotation *= UnitQuaternion::from_axis_angle(&joint.axis, angle);
        }
        t * self.tool
    }

    /// Tool pose and the 6 x k geometric Jacobian (linear rows first) in the
    /// world frame.
    pub(crate) fn fk_jacobian(&self, q: &[f64]) -> (Isometry3<f64>, Matrix6xX<f64>) {
        let k = self.dof();
        let mut axes = Vec::with_capacity(k);
        let mut origins = Vec::with_capacity(k);
        let mut t = self.base;
        for (joint, &angle) in self.joints.iter().zip(q) {
            t = t * joint.offset;
            axes.push(t.rotation * joint.axis.into_inner());
            origins.push(t.translation.vector);
            t.rotation *= UnitQuaternion::from_axis_angle(&joint.axis, angle);
        }
        let ee = t * self.tool;
        let p = ee.translation.vector;
        let mut jac = Matrix6xX::zeros(k);
        for i in 0..k {
            let lin = axes[i].cross(&(p - origins[i]));
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&axes[i]);
        }
        (ee, jac)
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(q)
                .all(|(j, &a)| a >= j.limits[0] && a <= j.limits[1])
    }

    pub fn clamp(&self, q: &mut [f64]) {
        for (j, a) in self.joints.iter().zip(q.iter_mut()) {
            *a = a.clamp(j.limits[0], j.limits[1]);
        }
    }

    /// Uniform sample from the joint-limit box.
    pub fn random_config<R: Rng + ?Sized>(&self, rng: &mut R) -> JointConfig {
        JointConfig(
            self.joints
                .iter()
                .map(|j| rng.gen_range(j.limits[0]..=j.limits[1]))
                .collect(),
        )
    }

    /// Euclidean diameter of the joint-limit box.
    pub fn limit_diameter(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| (j.limits[1] - j.limits[0]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}
