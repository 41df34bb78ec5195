use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::SurfaceMesh;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

/// Reads an ASCII OBJ or PLY triangle mesh.
pub fn load_mesh<R: Read>(source: R, format: MeshFormat) -> Result<SurfaceMesh> {
    let reader = BufReader::new(source);
    let (vertices, faces) = match format {
        MeshFormat::Obj => parse_obj(reader)?,
        MeshFormat::Ply => parse_ply(reader)?,
    };
    SurfaceMesh::new(vertices, faces)
}

pub fn load_mesh_file(path: &Path) -> Result<SurfaceMesh> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::InvalidSurface(format!("unknown mesh extension: {}", path.display()))
    })?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_mesh(file, format)
}

type Parsed = (Vec<Vector3<f64>>, Vec<[usize; 3]>);

fn number<T: FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid {what} `{token}`")))
}

fn parse_obj<R: BufRead>(reader: R) -> Result<Parsed> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let x = number(tokens.next(), lineno, "x coordinate")?;
                let y = number(tokens.next(), lineno, "y coordinate")?;
                let z = number(tokens.next(), lineno, "z coordinate")?;
                vertices.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        line: lineno,
                        count: refs.len(),
                    });
                }
                let mut face = [0usize; 3];
                for (slot, r) in face.iter_mut().zip(&refs) {
                    // `i/t/n` forms: only the position index matters.
                    let idx: i64 = number(r.split('/').next(), lineno, "vertex index")?;
                    *slot = if idx > 0 {
                        (idx - 1) as usize
                    } else if idx < 0 && (-idx) as usize <= vertices.len() {
                        vertices.len() - (-idx) as usize
                    } else {
                        return Err(Error::parse(lineno, format!("bad vertex index {idx}")));
                    };
                }
                faces.push(face);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

#[derive(Debug)]
enum PlyProperty {
    Scalar(String),
    List(String),
}

fn parse_ply<R: BufRead>(reader: R) -> Result<Parsed> {
    let mut lines = reader.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::parse(i + 1, e.to_string())),
            None => Err(Error::parse(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, magic) = next_line("ply header")?;
    if magic.trim() != "ply" {
        return Err(Error::parse(n, "missing `ply` magic"));
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let (n, line) = next_line("end_header")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", "1.0"] => {}
            ["format", other, ..] => {
                return Err(Error::parse(n, format!("unsupported PLY format `{other}`")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: number(Some(count), n, "element count")?,
                properties: Vec::new(),
            }),
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| Error::parse(n, "property before element"))?
                .properties
                .push(PlyProperty::List(name.to_string())),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| Error::parse(n, "property before element"))?
                .properties
                .push(PlyProperty::Scalar(name.to_string())),
            ["end_header"] => break,
            _ => return Err(Error::parse(n, format!("unrecognized header line `{line}`"))),
        }
    }

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for element in &elements {
        match element.name.as_str() {
            "vertex" => {
                let position = |name: &str| {
                    element.properties.iter().position(
                        |p| matches!(p, PlyProperty::Scalar(s) if s == name),
                    )
                };
                let (xi, yi, zi) = match (position("x"), position("y"), position("z")) {
                    (Some(x), Some(y), Some(z)) => (x, y, z),
                    _ => return Err(Error::parse(0, "vertex element lacks x/y/z")),
                };
                if element
                    .properties
                    .iter()
                    .any(|p| matches!(p, PlyProperty::List(_)))
                {
                    return Err(Error::parse(0, "list properties on vertices unsupported"));
                }
                for _ in 0..element.count {
                    let (n, line) = next_line("vertex")?;
                    let values = line
                        .split_whitespace()
                        .map(|t| number::<f64>(Some(t), n, "vertex property"))
                        .collect::<Result<Vec<_>>>()?;
                    if values.len() < element.properties.len() {
                        return Err(Error::parse(n, "too few vertex properties"));
                    }
                    vertices.push(Vector3::new(values[xi], values[yi], values[zi]));
                }
            }
            "face" => {
                if element.properties.len() != 1
                    || !matches!(&element.properties[0],
                        PlyProperty::List(s) if s == "vertex_indices" || s == "vertex_index")
                {
                    return Err(Error::parse(0, "face element must be a vertex_indices list"));
                }
                for _ in 0..element.count {
                    let (n, line) = next_line("face")?;
                    let mut tokens = line.split_whitespace();
                    let count: usize = number(tokens.next(), n, "face vertex count")?;
                    if count != 3 {
                        return Err(Error::NonTriangleFace { line: n, count });
                    }
                    let mut face = [0usize; 3];
                    for slot in face.iter_mut() {
                        *slot = number(tokens.next(), n, "vertex index")?;
                    }
                    faces.push(face);
                }
            }
            _ => {
                for _ in 0..element.count {
                    next_line(&element.name)?;
                }
            }
        }
    }
    Ok((vertices, faces))
}
