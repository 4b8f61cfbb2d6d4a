//! OBJ and STL (binary and ASCII) mesh files.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::mesh::TriangleMesh;
use crate::error::{Error, Result};

/// Loads an OBJ or STL file, multiplying coordinates by `scale` (files are read as mm).
pub fn load_mesh(path: &Path, scale: f64) -> Result<TriangleMesh> {
    let bytes = fs::read(path)?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (vertices, faces) = match ext.as_str() {
        "obj" => parse_obj(&bytes).map_err(|e| e.at(path))?,
        "stl" => parse_stl(&bytes).map_err(|e| e.at(path))?,
        other => {
            return Err(Error::InvalidInput(format!(
                "unsupported mesh extension {other:?} for {}",
                path.display()
            )))
        }
    };
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mesh = TriangleMesh::new(vertices, faces)?;
    Ok(if scale == 1.0 { mesh } else { mesh.scaled(scale) })
}

#[derive(Debug)]
struct ParseError {
    offset: u64,
    message: String,
}

impl ParseError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn at(self, path: &Path) -> Error {
        Error::MeshParse {
            path: path.to_path_buf(),
            offset: self.offset,
            message: self.message,
        }
    }
}

type Parsed = (Vec<Point3<f64>>, Vec<[usize; 3]>);

fn lines_with_offsets(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').map(move |line| {
        let start = offset;
        offset += line.len();
        (start, line.trim_end_matches(['\n', '\r']))
    })
}

fn parse_obj(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::new(e.valid_up_to(), "invalid UTF-8"))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (offset, line) in lines_with_offsets(text) {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| ParseError::new(offset, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(ParseError::new(offset, "vertex needs three coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut polygon = Vec::new();
                for token in tokens {
                    let raw = token.split('/').next().unwrap_or_default();
                    let index: i64 = raw
                        .parse()
                        .map_err(|_| ParseError::new(offset, format!("bad face index {token:?}")))?;
                    let resolved = match index {
                        i if i > 0 => i - 1,
                        i if i < 0 => vertices.len() as i64 + i,
                        _ => -1,
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(ParseError::new(
                            offset,
                            format!("face index {index} out of range ({} vertices so far)", vertices.len()),
                        ));
                    }
                    polygon.push(resolved as usize);
                }
                if polygon.len() < 3 {
                    return Err(ParseError::new(offset, "face needs at least three vertices"));
                }
                for k in 1..polygon.len() - 1 {
                    faces.push([polygon[0], polygon[k], polygon[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[derive(Default)]
struct VertexPool {
    index: HashMap<[u64; 3], usize>,
    vertices: Vec<Point3<f64>>,
}

impl VertexPool {
    fn insert(&mut self, p: Point3<f64>) -> usize {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            self.vertices.len() - 1
        })
    }
}

fn parse_stl(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let declared_binary = bytes.len() >= 84 && {
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
        bytes.len() == 84 + 50 * n
    };
    let looks_ascii = bytes.starts_with(b"solid")
        && bytes.iter().take(1024).all(|b| b.is_ascii())
        && bytes.windows(5).take(1024).any(|w| w == b"facet");
    if looks_ascii && !declared_binary {
        parse_stl_ascii(bytes)
    } else {
        parse_stl_binary(bytes)
    }
}

fn parse_stl_binary(bytes: &[u8]) -> Result<Parsed, ParseError> {
    if bytes.len() < 84 {
        return Err(ParseError::new(bytes.len(), "truncated binary STL header (need 84 bytes)"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + 50 * count;
    if bytes.len() < expected {
        let offset = 84 + 50 * ((bytes.len() - 84) / 50);
        return Err(ParseError::new(
            offset,
            format!(
                "truncated binary STL: {count} triangles need {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }
    let mut pool = VertexPool::default();
    let mut faces = Vec::with_capacity(count);
    for k in 0..count {
        let record = &bytes[84 + 50 * k..84 + 50 * (k + 1)];
        let mut face = [0usize; 3];
        for (v, slot) in face.iter_mut().enumerate() {
            let base = 12 + 12 * v;
            let c = |i: usize| f32::from_le_bytes(record[base + 4 * i..base + 4 * i + 4].try_into().unwrap()) as f64;
            *slot = pool.insert(Point3::new(c(0), c(1), c(2)));
        }
        faces.push(face);
    }
    Ok((pool.vertices, faces))
}

fn parse_stl_ascii(bytes: &[u8]) -> Result<Parsed, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ParseError::new(e.valid_up_to(), "invalid UTF-8"))?;
    let mut pool = VertexPool::default();
    let mut faces = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(3);
    let mut in_facet = false;
    let mut last_offset = 0;
    for (offset, line) in lines_with_offsets(text) {
        last_offset = offset + line.len();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("facet") => {
                in_facet = true;
                current.clear();
            }
            Some("vertex") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| ParseError::new(offset, format!("bad vertex coordinate: {e}")))?;
                if coords.len() != 3 {
                    return Err(ParseError::new(offset, "vertex needs three coordinates"));
                }
                current.push(pool.insert(Point3::new(coords[0], coords[1], coords[2])));
            }
            Some("endfacet") => {
                if current.len() != 3 {
                    return Err(ParseError::new(offset, format!("facet has {} vertices", current.len())));
                }
                faces.push([current[0], current[1], current[2]]);
                in_facet = false;
            }
            _ => {}
        }
    }
    if in_facet {
        return Err(ParseError::new(last_offset, "unterminated facet at end of file"));
    }
    Ok((pool.vertices, faces))
}

pub fn write_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_stl(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let mut bytes = vec![0u8; 80];
    bytes.extend_from_slice(&(mesh.faces().len() as u32).to_le_bytes());
    for f in 0..mesh.faces().len() {
        let [a, b, c] = mesh.triangle(f);
        let n = (b - a).cross(&(c - a)).normalize();
        for value in n.iter().chain(a.iter()).chain(b.iter()).chain(c.iter()) {
            bytes.extend_from_slice(&(*value as f32).to_le_bytes());
        }
        bytes.extend_from_slice(&[0, 0]);
    }
    fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::primitives;

    const CUBE_OBJ: &str = "# unit cube\n\
        v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
        f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\n\
        f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

    #[test]
    fn unit_cube_obj() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.obj");
        fs::write(&path, CUBE_OBJ).unwrap();
        let mesh = load_mesh(&path, 1.0).unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.faces().len(), 12);
        let scaled = load_mesh(&path, 10.0).unwrap();
        assert_eq!(scaled.bounds().max.x, 10.0);
    }

    #[test]
    fn quads_and_slashes() {
        let (v, f) = parse_obj(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/1 3/3/1 -1//1\n").unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn icosphere_stl_binary_and_ascii() {
        let dir = tempfile::tempdir().unwrap();
        let sphere = primitives::icosphere(5.0, 2);
        let path = dir.path().join("ico.stl");
        write_stl(&sphere, &path).unwrap();
        let mesh = load_mesh(&path, 1.0).unwrap();
        assert_eq!(mesh.faces().len(), 320);
        assert_eq!(mesh.vertices().len(), 162);

        let mut ascii = String::from("solid ico\n");
        for f in 0..sphere.faces().len() {
            ascii.push_str("facet normal 0 0 0\nouter loop\n");
            for v in sphere.triangle(f) {
                ascii.push_str(&format!("vertex {} {} {}\n", v.x, v.y, v.z));
            }
            ascii.push_str("endloop\nendfacet\n");
        }
        ascii.push_str("endsolid ico\n");
        let apath = dir.path().join("ico_ascii.stl");
        fs::write(&apath, ascii).unwrap();
        assert_eq!(load_mesh(&apath, 1.0).unwrap().faces().len(), 320);
    }

    #[test]
    fn truncated_stl_names_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cut.stl");
        write_stl(&primitives::icosphere(1.0, 1), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..84 + 50 * 7 + 13]).unwrap();
        match load_mesh(&path, 1.0) {
            Err(Error::MeshParse { offset, message, .. }) => {
                assert_eq!(offset, 84 + 50 * 7);
                assert!(message.contains("truncated"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&path, &bytes[..40]).unwrap();
        assert!(matches!(load_mesh(&path, 1.0), Err(Error::MeshParse { offset: 40, .. })));
    }

    #[test]
    fn obj_errors() {
        assert_eq!(parse_obj(b"v 0 0 0\nv 1 0\n").unwrap_err().offset, 8);
        assert_eq!(parse_obj(b"v 0 0 0\nf 1 2 3\n").unwrap_err().offset, 8);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.obj");
        fs::write(&path, "v 0 0 0\n").unwrap();
        assert!(matches!(load_mesh(&path, 1.0), Err(Error::EmptyMesh)));
        let path = dir.path().join("nan.obj");
        fs::write(&path, "v nan 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert!(matches!(load_mesh(&path, 1.0), Err(Error::NonFiniteVertex { index: 0 })));
    }
}
