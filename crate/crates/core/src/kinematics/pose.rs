use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::Pose;
use crate::error::{Error, Result};
use crate::surface::EndEffectorTarget;

/// Slack the task allows around each target.
///
/// The tool's approach axis (+z) must point into the surface, i.e. along the
/// negated target normal. Spin about that axis is constrained unless
/// `free_spin_about_normal` is set; the reference spin aligns the tool x
/// axis with the world x axis projected onto the tangent plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default)]
    pub free_spin_about_normal: bool,
    /// Half-angle of the cone of allowed approach axes, radians.
    #[serde(default)]
    pub tilt_tolerance: f64,
    /// Allowed offset within the target's tangent plane, meters.
    #[serde(default)]
    pub tangent_translation_radius: f64,
    #[serde(default)]
    pub full_6dof: bool,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self::free_spin()
    }
}

impl ToleranceSpec {
    /// Every degree of freedom must match exactly.
    pub fn full_6dof() -> Self {
        Self {
            free_spin_about_normal: false,
            tilt_tolerance: 0.0,
            tangent_translation_radius: 0.0,
            full_6dof: true,
        }
    }

    /// Position and approach axis fixed, spin free (a 5-DoF target).
    pub fn free_spin() -> Self {
        Self {
            free_spin_about_normal: true,
            tilt_tolerance: 0.0,
            tangent_translation_radius: 0.0,
            full_6dof: false,
        }
    }

    /// Only the position matters.
    pub fn position_only() -> Self {
        Self {
            free_spin_about_normal: true,
            tilt_tolerance: PI,
            tangent_translation_radius: 0.0,
            full_6dof: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tilt_tolerance >= 0.0 && self.tilt_tolerance.is_finite()) {
            return Err(Error::InvalidParameter(
                "tilt_tolerance must be a finite non-negative angle".into(),
            ));
        }
        if !(self.tangent_translation_radius >= 0.0 && self.tangent_translation_radius.is_finite())
        {
            return Err(Error::InvalidParameter(
                "tangent_translation_radius must be finite and non-negative".into(),
            ));
        }
        if self.full_6dof
            && (self.free_spin_about_normal
                || self.tilt_tolerance != 0.0
                || self.tangent_translation_radius != 0.0)
        {
            return Err(Error::InvalidParameter(
                "full_6dof excludes every other tolerance".into(),
            ));
        }
        Ok(())
    }

    pub fn spin_constrained(&self) -> bool {
        !self.free_spin_about_normal
    }

    /// True when no rotational degree of freedom is measured.
    pub fn rotation_free(&self) -> bool {
        self.free_spin_about_normal && self.tilt_tolerance > 0.0
    }
}

/// Error of a pose against a target, counted only in constrained DoF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub position: f64,
    /// `None` when every rotational DoF is tolerant.
    pub rotation: Option<f64>,
}

pub fn pose_error(pose: &Pose, target: &EndEffectorTarget, tol: &ToleranceSpec) -> PoseError {
    let v = violation(pose, target, tol);
    PoseError {
        position: v.position,
        rotation: (!tol.rotation_free()).then_some(v.rotation),
    }
}

/// The approach direction a target demands of the tool axis.
fn desired_axis(target: &EndEffectorTarget) -> Vector3<f64> {
    -target.normal
}

/// Surface normal implied by a tool pose, the inverse of [`desired_axis`].
pub(crate) fn tool_normal(pose: &Pose) -> Vector3<f64> {
    -pose.tool_axis()
}

fn reference_x(axis: &Vector3<f64>) -> Vector3<f64> {
    for candidate in [Vector3::x(), Vector3::y()] {
        let projected = candidate - axis * axis.dot(&candidate);
        let len = projected.norm();
        if len > 1e-6 {
            return projected / len;
        }
    }
    unreachable!("x and y cannot both be parallel to a unit vector")
}

fn any_perpendicular(v: &Vector3<f64>) -> Vector3<f64> {
    let c = if v.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    v.cross(&c).normalize()
}

/// Constraint violation with the correction directions the IK needs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Violation {
    /// Position error vector outside the allowed set (current minus allowed).
    pub position_vec: Vector3<f64>,
    /// Rotation vector (world frame) that would remove the rotational error.
    pub rotation_vec: Vector3<f64>,
    pub position: f64,
    pub rotation: f64,
    pub inside_disk: bool,
    pub inside_cone: bool,
}

pub(crate) fn violation(pose: &Pose, target: &EndEffectorTarget, tol: &ToleranceSpec) -> Violation {
    let n = target.normal;
    let d = pose.position - target.position;
    let normal_part = n * d.dot(&n);
    let tangent = d - normal_part;
    let radius = tol.tangent_translation_radius;
    let tangent_len = tangent.norm();
    let inside_disk = tangent_len <= radius;
    let excess = if inside_disk {
        Vector3::zeros()
    } else {
        tangent * (1.0 - radius / tangent_len)
    };
    let position_vec = normal_part + excess;

    let z = pose.tool_axis();
    let zt = desired_axis(target);
    let cross = z.cross(&zt);
    let tilt = f64::atan2(cross.norm(), z.dot(&zt));
    let over = (tilt - tol.tilt_tolerance).max(0.0);
    let inside_cone = over == 0.0;
    let swing_axis = if cross.norm() > 1e-12 {
        cross.normalize()
    } else {
        any_perpendicular(&z)
    };
    let mut rotation_vec = swing_axis * over;
    let mut spin = 0.0;
    if tol.spin_constrained() {
        let swing = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_unchecked(swing_axis), tilt);
        let x_aligned = swing * (pose.orientation * Vector3::x());
        let xt = reference_x(&zt);
        spin = f64::atan2(x_aligned.cross(&xt).dot(&zt), x_aligned.dot(&xt));
        rotation_vec += zt * spin;
    }

    Violation {
        position_vec,
        rotation_vec,
        position: position_vec.norm(),
        rotation: (over * over + spin * spin).sqrt(),
        inside_disk,
        inside_cone,
    }
}

/// The pose that meets a target exactly, with the reference spin.
pub fn target_pose(target: &EndEffectorTarget) -> Pose {
    let z = desired_axis(target);
    let x = reference_x(&z);
    let y = z.cross(&x);
    let rot = nalgebra::Rotation3::from_basis_unchecked(&[x, y, z]);
    Pose {
        position: target.position,
        orientation: UnitQuaternion::from_rotation_matrix(&rot),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn target() -> EndEffectorTarget {
        EndEffectorTarget::new(Vector3::new(0.4, 0.1, 0.2), Vector3::new(0.2, -0.1, 1.0)).unwrap()
    }

    fn tilted(pose: &Pose, angle: f64) -> Pose {
        // rotate about an axis perpendicular to the tool axis, in the world
        // frame, around the tool point
        let axis = nalgebra::Unit::new_normalize(any_perpendicular(&pose.tool_axis()));
        Pose {
            position: pose.position,
            orientation: UnitQuaternion::from_axis_angle(&axis, angle) * pose.orientation,
        }
    }

    #[test]
    fn exact_pose_has_zero_error_for_any_tolerance() {
        let t = target();
        let p = target_pose(&t);
        for tol in [
            ToleranceSpec::full_6dof(),
            ToleranceSpec::free_spin(),
            ToleranceSpec::position_only(),
        ] {
            let e = pose_error(&p, &t, &tol);
            assert!(e.position < 1e-12);
            assert!(e.rotation.unwrap_or(0.0) < 1e-9);
        }
    }

    #[test]
    fn full_6dof_tilt_is_measured() {
        let t = target();
        let p = tilted(&target_pose(&t), 0.2);
        let e = pose_error(&p, &t, &ToleranceSpec::full_6dof());
        assert_abs_diff_eq!(e.rotation.unwrap(), 0.2, epsilon = 1e-9);
    }

    #[test]
    fn tilt_inside_cone_is_free() {
        let t = target();
        let p = tilted(&target_pose(&t), 0.2);
        // spin stays constrained, so rotation is still reported
        let tol = ToleranceSpec {
            free_spin_about_normal: false,
            tilt_tolerance: 0.3,
            tangent_translation_radius: 0.0,
            full_6dof: false,
        };
        assert!(pose_error(&p, &t, &tol).rotation.unwrap() < 1e-12);
        let wide = ToleranceSpec {
            tilt_tolerance: 0.05,
            ..tol
        };
        assert_abs_diff_eq!(pose_error(&p, &t, &wide).rotation.unwrap(), 0.15, epsilon = 1e-9);
    }

    #[test]
    fn free_spin_ignores_spin_and_full_measures_it() {
        let t = target();
        let base = target_pose(&t);
        let axis = nalgebra::Unit::new_normalize(base.tool_axis());
        let spun = Pose {
            position: base.position,
            orientation: UnitQuaternion::from_axis_angle(&axis, 0.7) * base.orientation,
        };
        assert!(pose_error(&spun, &t, &ToleranceSpec::free_spin()).rotation.unwrap() < 1e-9);
        assert_abs_diff_eq!(
            pose_error(&spun, &t, &ToleranceSpec::full_6dof()).rotation.unwrap(),
            0.7,
            epsilon = 1e-9
        );
    }

    #[test]
    fn rotation_absent_when_all_rotation_tolerant() {
        let t = target();
        let tol = ToleranceSpec {
            tilt_tolerance: 0.4,
            ..ToleranceSpec::free_spin()
        };
        assert_eq!(pose_error(&target_pose(&t), &t, &tol).rotation, None);
    }

    #[test]
    fn tangent_disk_position_error() {
        let t = EndEffectorTarget::new(Vector3::zeros(), Vector3::z()).unwrap();
        let tol = ToleranceSpec {
            tangent_translation_radius: 0.01,
            ..ToleranceSpec::free_spin()
        };
        let mut p = target_pose(&t);
        p.position = Vector3::new(0.008, 0.0, 0.0);
        assert_eq!(pose_error(&p, &t, &tol).position, 0.0);
        p.position = Vector3::new(0.0, 0.013, 0.004);
        assert_abs_diff_eq!(pose_error(&p, &t, &tol).position, 0.005, epsilon = 1e-12);
        // without the tolerance the full offset counts
        assert_abs_diff_eq!(
            pose_error(&p, &t, &ToleranceSpec::free_spin()).position,
            (0.013f64.powi(2) + 0.004f64.powi(2)).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn validation_rejects_contradictions() {
        let bad = ToleranceSpec {
            tilt_tolerance: 0.1,
            ..ToleranceSpec::full_6dof()
        };
        assert!(bad.validate().is_err());
        assert!(ToleranceSpec::free_spin().validate().is_ok());
        let neg = ToleranceSpec {
            tangent_translation_radius: -1.0,
            ..ToleranceSpec::free_spin()
        };
        assert!(neg.validate().is_err());
    }
}
