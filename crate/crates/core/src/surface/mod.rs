//! Triangle-mesh surfaces and the end-effector targets derived from them.
//!
//! Every mesh vertex becomes one target `(position, unit normal)`. The
//! Cartesian distance between two targets blends positional and angular
//! separation and is what both the Cartesian TSP graph and the
//! reconfiguration test use to compare poses.

mod generate;
mod io;

use std::collections::BTreeSet;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generate::{generate_benchmark_surface, SurfaceKind, SurfaceSpec};
pub use io::{load_mesh, load_mesh_file, MeshFormat};

/// Unit-length tolerance used for normals.
pub const NORMAL_TOLERANCE: f64 = 1e-9;

/// Connected triangle mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    vertices: Vec<Vector3<f64>>,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    normals: Option<Vec<Vector3<f64>>>,
}

impl SurfaceMesh {
    /// Builds a mesh, deriving the edge set and checking indices, face
    /// areas and connectivity.
    pub fn new(vertices: Vec<Vector3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        for (fi, face) in faces.iter().enumerate() {
            for &index in face {
                if index >= vertices.len() {
                    return Err(Error::FaceIndexOutOfRange {
                        face: fi,
                        index,
                        count: vertices.len(),
                    });
                }
            }
            if face_cross(&vertices, face).is_none() {
                return Err(Error::DegenerateFace { face: fi });
            }
        }

        let mut edge_set = BTreeSet::new();
        for face in &faces {
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                edge_set.insert((a.min(b), a.max(b)));
            }
        }
        let edges: Vec<_> = edge_set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); vertices.len()];
        for &(a, b) in &edges {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }

        let components = count_components(&neighbors);
        if components != 1 {
            return Err(Error::DisconnectedMesh { components });
        }

        Ok(Self {
            vertices,
            faces,
            edges,
            neighbors,
            normals: None,
        })
    }

    /// Attaches exact per-vertex normals, used instead of face averaging by
    /// [`compute_targets`]. Generated analytic surfaces use this.
    pub fn with_vertex_normals(mut self, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::InvalidSurface(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                let len = n.norm();
                if len.is_finite() && len > 0.0 {
                    Ok(n / len)
                } else {
                    Err(Error::DegenerateNormal { vertex: i })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Undirected edges as `(lo, hi)` pairs in ascending order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, vertex: usize) -> &[usize] {
        &self.neighbors[vertex]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].contains(&b)
    }

    pub fn vertex_normals(&self) -> Option<&[Vector3<f64>]> {
        self.normals.as_deref()
    }
}

/// Cross product of a face's edge vectors, `None` if the face has zero area.
fn face_cross(vertices: &[Vector3<f64>], face: &[usize; 3]) -> Option<Vector3<f64>> {
    let e1 = vertices[face[1]] - vertices[face[0]];
    let e2 = vertices[face[2]] - vertices[face[0]];
    let cross = e1.cross(&e2);
    let scale = e1.norm() * e2.norm();
    if !(cross.norm() > 1e-12 * scale) || scale == 0.0 {
        None
    } else {
        Some(cross)
    }
}

fn count_components(neighbors: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; neighbors.len()];
    let mut components = 0;
    for start in 0..neighbors.len() {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in &neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    components
}

/// A surface point the tool must visit, with the outward surface normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndEffectorTarget {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
}

impl EndEffectorTarget {
    /// Normalizes `normal`; fails on a zero or non-finite vector.
    pub fn new(position: Vector3<f64>, normal: Vector3<f64>) -> Result<Self> {
        let len = normal.norm();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidParameter(
                "target normal must be non-zero".into(),
            ));
        }
        Ok(Self {
            position,
            normal: normal / len,
        })
    }
}

/// One target per vertex. Normals are the supplied exact normals when the
/// mesh carries them, otherwise the area-weighted mean of incident face
/// normals following the face winding.
pub fn compute_targets(mesh: &SurfaceMesh) -> Result<Vec<EndEffectorTarget>> {
    let normals: Vec<Vector3<f64>> = match &mesh.normals {
        Some(n) => n.clone(),
        None => {
            let mut acc = vec![Vector3::zeros(); mesh.vertex_count()];
            for (fi, face) in mesh.faces.iter().enumerate() {
                // |cross| is twice the face area, so summing raw cross
                // products weights each face normal by its area.
                let cross =
                    face_cross(&mesh.vertices, face).ok_or(Error::DegenerateFace { face: fi })?;
                for &v in face {
                    acc[v] += cross;
                }
            }
            acc.into_iter()
                .enumerate()
                .map(|(v, n)| {
                    let len = n.norm();
                    if len > 1e-300 && len.is_finite() {
                        Ok(n / len)
                    } else {
                        Err(Error::DegenerateNormal { vertex: v })
                    }
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(mesh
        .vertices
        .iter()
        .zip(normals)
        .map(|(&position, normal)| EndEffectorTarget { position, normal })
        .collect())
}

/// Angle between two unit vectors, with the cosine clamped to `[-1, 1]`.
pub fn normal_angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos()
}

/// `|p_a - p_b| + alpha * acos(n_a . n_b)`.
pub fn cartesian_distance(a: &EndEffectorTarget, b: &EndEffectorTarget, alpha: f64) -> f64 {
    (a.position - b.position).norm() + alpha * normal_angle(&a.normal, &b.normal)
}

/// Mean Cartesian distance over the mesh edges.
pub fn mean_edge_distance(mesh: &SurfaceMesh, targets: &[EndEffectorTarget], alpha: f64) -> f64 {
    let sum: f64 = mesh
        .edges()
        .iter()
        .map(|&(a, b)| cartesian_distance(&targets[a], &targets[b], alpha))
        .sum();
    sum / mesh.edges().len() as f64
}

/// Largest Cartesian distance over the mesh edges.
pub fn max_edge_distance(mesh: &SurfaceMesh, targets: &[EndEffectorTarget], alpha: f64) -> f64 {
    mesh.edges()
        .iter()
        .map(|&(a, b)| cartesian_distance(&targets[a], &targets[b], alpha))
        .fold(0.0, f64::max)
}
