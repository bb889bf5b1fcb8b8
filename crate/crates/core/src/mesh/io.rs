//! Mesh file formats: ASCII OBJ (triangles only) and PLY with `f64`
//! vertices.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::{Error, Real, Result};

pub fn write_obj<T: Real>(mesh: &TriMesh<T>, w: &mut impl Write) -> Result<()> {
    for v in &mesh.vertices {
        let [x, y, z] = v.to_f64();
        writeln!(w, "v {x:?} {y:?} {z:?}")?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj<T: Real>(r: impl BufRead) -> Result<TriMesh<T>> {
    let mut mesh = TriMesh::default();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format("OBJ", format!("line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(Error::format("OBJ", format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                mesh.vertices.push(Vec3::from_f64(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<i64> = it
                    .map(|s| s.split('/').next().unwrap_or("").parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::format("OBJ", format!("line {}: {e}", lineno + 1)))?;
                if idx.len() != 3 {
                    return Err(Error::format("OBJ", format!("line {}: only triangles are supported", lineno + 1)));
                }
                let n = mesh.vertices.len() as i64;
                let mut tri = [0u32; 3];
                for (k, &i) in idx.iter().enumerate() {
                    let j = if i < 0 { n + i } else { i - 1 };
                    if j < 0 || j >= n {
                        return Err(Error::format("OBJ", format!("line {}: index {i} out of range", lineno + 1)));
                    }
                    tri[k] = j as u32;
                }
                mesh.triangles.push(tri);
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// Binary little-endian PLY with `double` vertex coordinates and optional
/// per-vertex RGB colors.
pub fn write_ply<T: Real>(
    mesh: &TriMesh<T>,
    colors: Option<&[[u8; 3]]>,
    comments: &[String],
    w: &mut impl Write,
) -> Result<()> {
    if let Some(c) = colors {
        if c.len() != mesh.vertices.len() {
            return Err(Error::ShapeMismatch(c.len(), mesh.vertices.len()));
        }
    }
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    for c in comments {
        writeln!(w, "comment {c}")?;
    }
    writeln!(w, "element vertex {}", mesh.vertices.len())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if colors.is_some() {
        writeln!(w, "property uchar red")?;
        writeln!(w, "property uchar green")?;
        writeln!(w, "property uchar blue")?;
    }
    writeln!(w, "element face {}", mesh.triangles.len())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in v.to_f64() {
            w.write_all(&c.to_le_bytes())?;
        }
        if let Some(cols) = colors {
            w.write_all(&cols[i])?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &i in t {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return Err(Error::format("PLY", format!("unknown property type {s}"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_binary(self, r: &mut impl Read) -> Result<f64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b[..self.size()])?;
        Ok(match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b),
        })
    }
}

enum Prop {
    Scalar(String, PlyType),
    List(String, PlyType, PlyType),
}

struct Element {
    name: String,
    count: usize,
    props: Vec<Prop>,
}

/// Reads ASCII or binary little-endian PLY meshes with triangle faces.
pub fn read_ply<T: Real>(r: impl BufRead) -> Result<TriMesh<T>> {
    let mut r = r;
    let mut line = String::new();
    let mut next_line = |r: &mut dyn BufRead| -> Result<String> {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(Error::format("PLY", "unexpected end of header"));
        }
        Ok(line.trim().to_string())
    };
    if next_line(&mut r)? != "ply" {
        return Err(Error::format("PLY", "missing magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let l = next_line(&mut r)?;
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", f, _] => return Err(Error::format("PLY", format!("unsupported format {f}"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| Error::format("PLY", "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => elements
                .last_mut()
                .ok_or_else(|| Error::format("PLY", "property before element"))?
                .props
                .push(Prop::List(name.to_string(), PlyType::parse(ct)?, PlyType::parse(it)?)),
            ["property", ty, name] => elements
                .last_mut()
                .ok_or_else(|| Error::format("PLY", "property before element"))?
                .props
                .push(Prop::Scalar(name.to_string(), PlyType::parse(ty)?)),
            ["end_header"] => break,
            _ => {}
        }
    }
    let binary = binary.ok_or_else(|| Error::format("PLY", "missing format line"))?;
    let mut mesh = TriMesh::default();
    let mut ascii_tokens: Vec<String> = Vec::new();
    if !binary {
        let mut rest = String::new();
        r.read_to_string(&mut rest)?;
        ascii_tokens = rest.split_whitespace().rev().map(str::to_string).collect();
    }
    let mut read_val = |ty: PlyType, r: &mut dyn BufRead| -> Result<f64> {
        if binary {
            let mut rr = r;
            ty.read_binary(&mut rr)
        } else {
            ascii_tokens
                .pop()
                .ok_or_else(|| Error::format("PLY", "truncated body"))?
                .parse::<f64>()
                .map_err(|e| Error::format("PLY", e.to_string()))
        }
    };
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0f64; 3];
            for p in &el.props {
                match p {
                    Prop::Scalar(name, ty) => {
                        let v = read_val(*ty, &mut r)?;
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Prop::List(name, ct, it) => {
                        let n = read_val(*ct, &mut r)? as usize;
                        let idx: Vec<f64> = (0..n).map(|_| read_val(*it, &mut r)).collect::<Result<_>>()?;
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            if n != 3 {
                                return Err(Error::format("PLY", "only triangle faces are supported"));
                            }
                            mesh.triangles.push([idx[0] as u32, idx[1] as u32, idx[2] as u32]);
                        }
                    }
                }
            }
            if el.name == "vertex" {
                mesh.vertices.push(Vec3::from_f64(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    if let Some(t) = mesh.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= mesh.vertices.len())) {
        return Err(Error::format("PLY", format!("face {t:?} indexes past the vertex array")));
    }
    Ok(mesh)
}

/// Loads an `.obj` or `.ply` file, chosen by extension.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriMesh<T>> {
    let path = path.as_ref();
    let r = BufReader::new(File::open(path)?);
    match extension(path).as_str() {
        "obj" => read_obj(r),
        "ply" => read_ply(r),
        other => Err(Error::Invalid(format!("unsupported mesh extension '{other}'"))),
    }
}

pub fn save_mesh<T: Real>(mesh: &TriMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    match extension(path).as_str() {
        "obj" => write_obj(mesh, &mut w)?,
        "ply" => write_ply(mesh, None, &[], &mut w)?,
        other => return Err(Error::Invalid(format!("unsupported mesh extension '{other}'"))),
    }
    w.flush()?;
    Ok(())
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use proptest::prelude::*;

    #[test]
    fn ascii_ply_is_readable() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let m: TriMesh<f64> = read_ply(text.as_bytes()).unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn quads_are_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(read_obj::<f64>(text.as_bytes()).is_err());
    }

    #[test]
    fn colored_ply_keeps_geometry() {
        let m = shapes::cube(2.0f64);
        let colors = vec![[10u8, 20, 30]; m.vertices.len()];
        let mut buf = Vec::new();
        write_ply(&m, Some(&colors), &["min 0 max 1".into()], &mut buf).unwrap();
        let back: TriMesh<f64> = read_ply(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn formats_preserve_f64_bits(scale in 1e-6f64..1e6, seed in 0u32..3) {
            let m = shapes::blob::<f64>(seed, scale).map_vertices(|v| v * std::f64::consts::PI);
            let mut obj = Vec::new();
            write_obj(&m, &mut obj).unwrap();
            prop_assert_eq!(&read_obj::<f64>(obj.as_slice()).unwrap(), &m);
            let mut ply = Vec::new();
            write_ply(&m, None, &[], &mut ply).unwrap();
            prop_assert_eq!(&read_ply::<f64>(ply.as_slice()).unwrap(), &m);
        }
    }
}
