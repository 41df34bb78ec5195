//! Synthetic desk-scale benchmark surfaces.

use std::f64::consts::{FRAC_PI_3, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SurfaceMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    /// Two steps: vertical risers and horizontal treads.
    Stairs,
    /// Convex spherical cap, normals pointing away from the center.
    #[serde(alias = "hemisphere")]
    HemisphereExterior,
    /// Concave spherical cap, normals pointing toward the center.
    #[serde(alias = "bowl")]
    BowlInterior,
    /// Flat rectangle in a horizontal plane, normals +z.
    FloorGrid,
}

impl std::str::FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stairs" => Ok(SurfaceKind::Stairs),
            "hemisphere-exterior" | "hemisphere" => Ok(SurfaceKind::HemisphereExterior),
            "bowl-interior" | "bowl" => Ok(SurfaceKind::BowlInterior),
            "floor-grid" | "floor" => Ok(SurfaceKind::FloorGrid),
            other => Err(Error::InvalidSurface(format!("unknown surface kind `{other}`"))),
        }
    }
}

/// Dimensions and sampling density of a generated surface.
///
/// `origin` is the sphere center for the two cap kinds, the grid center for
/// `floor-grid` and the bottom front edge midpoint for `stairs`.
/// `resolution` is `[rings, segments]` for caps, `[u, v]` vertices for the
/// grid and `[samples per profile segment, samples across]` for stairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    #[serde(default)]
    pub origin: [f64; 3],
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_cap_angle")]
    pub cap_angle: f64,
    #[serde(default = "default_extent")]
    pub width: f64,
    #[serde(default = "default_extent")]
    pub length: f64,
    #[serde(default = "default_step_height")]
    pub step_height: f64,
    #[serde(default = "default_step_depth")]
    pub step_depth: f64,
    pub resolution: [usize; 2],
}

fn default_radius() -> f64 {
    0.15
}
fn default_cap_angle() -> f64 {
    FRAC_PI_3
}
fn default_extent() -> f64 {
    0.3
}
fn default_step_height() -> f64 {
    0.12
}
fn default_step_depth() -> f64 {
    0.15
}

impl SurfaceSpec {
    fn base(kind: SurfaceKind, resolution: [usize; 2]) -> Self {
        Self {
            kind,
            origin: [0.0; 3],
            radius: default_radius(),
            cap_angle: default_cap_angle(),
            width: default_extent(),
            length: default_extent(),
            step_height: default_step_height(),
            step_depth: default_step_depth(),
            resolution,
        }
    }

    pub fn floor_grid(origin: [f64; 3], width: f64, length: f64, u: usize, v: usize) -> Self {
        Self {
            origin,
            width,
            length,
            ..Self::base(SurfaceKind::FloorGrid, [u, v])
        }
    }

    pub fn hemisphere_exterior(
        center: [f64; 3],
        radius: f64,
        cap_angle: f64,
        rings: usize,
        segments: usize,
    ) -> Self {
        Self {
            origin: center,
            radius,
            cap_angle,
            ..Self::base(SurfaceKind::HemisphereExterior, [rings, segments])
        }
    }

    pub fn bowl_interior(
        center: [f64; 3],
        radius: f64,
        cap_angle: f64,
        rings: usize,
        segments: usize,
    ) -> Self {
        Self {
            origin: center,
            radius,
            cap_angle,
            ..Self::base(SurfaceKind::BowlInterior, [rings, segments])
        }
    }

    pub fn stairs(
        origin: [f64; 3],
        step_height: f64,
        step_depth: f64,
        width: f64,
        per_segment: usize,
        across: usize,
    ) -> Self {
        Self {
            origin,
            step_height,
            step_depth,
            width,
            ..Self::base(SurfaceKind::Stairs, [per_segment, across])
        }
    }

    /// Number of vertices the current resolution produces.
    pub fn target_count(&self) -> usize {
        let [a, b] = self.resolution;
        match self.kind {
            SurfaceKind::FloorGrid => a * b,
            SurfaceKind::HemisphereExterior | SurfaceKind::BowlInterior => 1 + a * b,
            SurfaceKind::Stairs => (4 * a + 1) * b,
        }
    }

    /// Picks a resolution whose vertex count is close to `n`, keeping the
    /// sampling roughly isotropic.
    pub fn with_target_count(mut self, n: usize) -> Self {
        let n = n.max(4) as f64;
        self.resolution = match self.kind {
            SurfaceKind::FloorGrid => {
                let u = n.sqrt().round().max(2.0);
                let v = (n / u).round().max(2.0);
                [u as usize, v as usize]
            }
            SurfaceKind::HemisphereExterior | SurfaceKind::BowlInterior => {
                let rings = ((n - 1.0) / 3.5).sqrt().round().max(1.0);
                let segments = ((n - 1.0) / rings).round().max(3.0);
                [rings as usize, segments as usize]
            }
            SurfaceKind::Stairs => {
                let across = (n / 2.0).sqrt().round().max(2.0);
                let per_segment = ((n / across - 1.0) / 4.0).round().max(1.0);
                [per_segment as usize, across as usize]
            }
        };
        self
    }
}

/// Builds the mesh described by `spec`.
pub fn generate_benchmark_surface(spec: &SurfaceSpec) -> Result<SurfaceMesh> {
    let origin = Vector3::from(spec.origin);
    if !origin.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidSurface("origin must be finite".into()));
    }
    match spec.kind {
        SurfaceKind::FloorGrid => floor_grid(spec, origin),
        SurfaceKind::HemisphereExterior => spherical_cap(spec, origin, 1.0),
        SurfaceKind::BowlInterior => spherical_cap(spec, origin, -1.0),
        SurfaceKind::Stairs => stairs(spec, origin),
    }
}

fn positive(value: f64, name: &str) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSurface(format!("{name} must be positive, got {value}")))
    }
}

/// Quad-grid triangulation over `rows x cols` vertices laid out row-major,
/// with the winding such that `(next row) x (next col)` is the front side.
fn grid_faces(rows: usize, cols: usize) -> Vec<[usize; 3]> {
    let mut faces = Vec::with_capacity(2 * (rows - 1) * (cols - 1));
    for i in 0..rows - 1 {
        for j in 0..cols - 1 {
            let a = i * cols + j;
            let b = (i + 1) * cols + j;
            let c = i * cols + j + 1;
            let d = (i + 1) * cols + j + 1;
            faces.push([a, b, c]);
            faces.push([b, d, c]);
        }
    }
    faces
}

fn floor_grid(spec: &SurfaceSpec, origin: Vector3<f64>) -> Result<SurfaceMesh> {
    let [u, v] = spec.resolution;
    if u < 2 || v < 2 {
        return Err(Error::InvalidSurface("floor grid needs at least 2x2 vertices".into()));
    }
    positive(spec.width, "width")?;
    positive(spec.length, "length")?;
    let mut vertices = Vec::with_capacity(u * v);
    for i in 0..u {
        let x = spec.width * (i as f64 / (u - 1) as f64 - 0.5);
        for j in 0..v {
            let y = spec.length * (j as f64 / (v - 1) as f64 - 0.5);
            vertices.push(origin + Vector3::new(x, y, 0.0));
        }
    }
    let normals = vec![Vector3::z(); vertices.len()];
    SurfaceMesh::new(vertices, grid_faces(u, v))?.with_vertex_normals(normals)
}

/// Spherical cap around the pole `origin + side * radius * z`. `side = 1`
/// gives the convex exterior, `side = -1` the concave interior of a bowl.
fn spherical_cap(spec: &SurfaceSpec, center: Vector3<f64>, side: f64) -> Result<SurfaceMesh> {
    let [rings, segments] = spec.resolution;
    if rings < 1 || segments < 3 {
        return Err(Error::InvalidSurface(
            "spherical cap needs at least 1 ring and 3 segments".into(),
        ));
    }
    positive(spec.radius, "radius")?;
    if !(spec.cap_angle > 0.0 && spec.cap_angle <= PI) {
        return Err(Error::InvalidSurface(format!(
            "cap angle must be in (0, pi], got {}",
            spec.cap_angle
        )));
    }
    if spec.cap_angle >= PI - 1e-9 {
        return Err(Error::InvalidSurface("cap angle must leave an open rim".into()));
    }

    let r = spec.radius;
    let direction = |polar: f64, azimuth: f64| {
        Vector3::new(
            polar.sin() * azimuth.cos(),
            polar.sin() * azimuth.sin(),
            side * polar.cos(),
        )
    };
    let mut vertices = vec![center + r * direction(0.0, 0.0)];
    for ring in 1..=rings {
        let polar = spec.cap_angle * ring as f64 / rings as f64;
        for s in 0..segments {
            let azimuth = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(center + r * direction(polar, azimuth));
        }
    }
    let ring_vertex = |ring: usize, s: usize| 1 + (ring - 1) * segments + s % segments;

    let mut faces = Vec::new();
    for s in 0..segments {
        faces.push([0, ring_vertex(1, s), ring_vertex(1, s + 1)]);
    }
    for ring in 1..rings {
        for s in 0..segments {
            let a = ring_vertex(ring, s);
            let b = ring_vertex(ring + 1, s);
            let c = ring_vertex(ring, s + 1);
            let d = ring_vertex(ring + 1, s + 1);
            faces.push([a, b, c]);
            faces.push([b, d, c]);
        }
    }

    // Exterior normals point away from the center, interior ones toward it.
    let normals: Vec<_> = vertices
        .iter()
        .map(|p| side * (p - center) / r)
        .collect();
    orient_faces(&vertices, &mut faces, |centroid| {
        side * (centroid - center)
    });
    SurfaceMesh::new(vertices, faces)?.with_vertex_normals(normals)
}

/// Flips any face whose winding disagrees with the analytic front side.
fn orient_faces<F>(vertices: &[Vector3<f64>], faces: &mut [[usize; 3]], front: F)
where
    F: Fn(Vector3<f64>) -> Vector3<f64>,
{
    for face in faces.iter_mut() {
        let [a, b, c] = *face;
        let cross = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        let centroid = (vertices[a] + vertices[b] + vertices[c]) / 3.0;
        if cross.dot(&front(centroid)) < 0.0 {
            face.swap(1, 2);
        }
    }
}

fn stairs(spec: &SurfaceSpec, origin: Vector3<f64>) -> Result<SurfaceMesh> {
    let [per_segment, across] = spec.resolution;
    if per_segment < 1 || across < 2 {
        return Err(Error::InvalidSurface(
            "stairs need at least 1 sample per segment and 2 across".into(),
        ));
    }
    positive(spec.step_height, "step height")?;
    positive(spec.step_depth, "step depth")?;
    positive(spec.width, "width")?;

    let (h, d) = (spec.step_height, spec.step_depth);
    // Profile in the xz-plane: riser, tread, riser, tread, climbing away
    // from the robot along +x.
    let corners = [
        Vector3::new(0.0, 0.0, 0.0),
        Vector3::new(0.0, 0.0, h),
        Vector3::new(d, 0.0, h),
        Vector3::new(d, 0.0, 2.0 * h),
        Vector3::new(2.0 * d, 0.0, 2.0 * h),
    ];
    let mut profile = Vec::with_capacity(4 * per_segment + 1);
    for w in corners.windows(2) {
        for k in 0..per_segment {
            let t = k as f64 / per_segment as f64;
            profile.push(w[0] + t * (w[1] - w[0]));
        }
    }
    profile.push(corners[4]);

    let mut vertices = Vec::with_capacity(profile.len() * across);
    for p in &profile {
        for j in 0..across {
            let y = spec.width * (j as f64 / (across - 1) as f64 - 0.5);
            vertices.push(origin + p + Vector3::new(0.0, y, 0.0));
        }
    }
    // Profile tangent x (+y) points out of the steps: -x on risers, +z on
    // treads, which is what grid_faces produces for this layout.
    SurfaceMesh::new(vertices, grid_faces(profile.len(), across))
}
