//! PLY (ASCII and binary little-endian) and OBJ reading and writing.
//!
//! Per-vertex PLY properties map onto channels as follows: `x y z` are
//! positions, `red green blue` are the bispectral colour (uchar, scaled to
//! [0, 1]), `final_red final_green final_blue` the composed output colour,
//! `sx sy sz` the sphere positions, `<name>_x <name>_y <name>_z` a vector
//! channel, integer properties label channels and float properties scalar
//! channels.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::scalar::Scalar;
use crate::vec3::Vec3;

use super::{channel, Channel, Mesh, MeshError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Ply,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "ply" => Ok(MeshFormat::Ply),
            Some(e) if e == "obj" => Ok(MeshFormat::Obj),
            _ => Err(MeshError::Parse(format!(
                "cannot infer mesh format from `{}` (expected .ply or .obj)",
                path.display()
            ))),
        }
    }
}

/// Reads a mesh and checks that it is a closed genus-zero manifold.
///
/// OBJ files pick up attributes from a sibling `<stem>.json` sidecar if present.
pub fn load_mesh<T: Scalar>(path: &Path) -> Result<Mesh<T>, MeshError> {
    let mesh = read_mesh(path)?;
    mesh.validate_genus_zero()?;
    Ok(mesh)
}

/// Reads a mesh without topology validation.
pub fn read_mesh<T: Scalar>(path: &Path) -> Result<Mesh<T>, MeshError> {
    match MeshFormat::from_path(path)? {
        MeshFormat::Ply => read_ply(path),
        MeshFormat::Obj => {
            let mut mesh = parse_obj(&fs::read_to_string(path)?)?;
            let sidecar = path.with_extension("json");
            if sidecar.exists() {
                apply_sidecar(&mut mesh, &fs::read_to_string(&sidecar)?)?;
            }
            Ok(mesh)
        }
    }
}

pub fn read_ply<T: Scalar>(path: &Path) -> Result<Mesh<T>, MeshError> {
    parse_ply(&fs::read(path)?)
}

pub fn write_ply<T: Scalar>(mesh: &Mesh<T>, path: &Path, format: PlyFormat) -> Result<(), MeshError> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    f.write_all(&ply_bytes(mesh, format))?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(s: &str) -> Result<Self, MeshError> {
        Ok(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return Err(MeshError::Parse(format!("unknown PLY type `{s}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, PlyType::F32 | PlyType::F64)
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar(PlyType, String),
    List(PlyType, PlyType, String),
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
}

/// Token source over either ASCII text or little-endian binary data.
enum Reader<'a> {
    Ascii(std::str::SplitAsciiWhitespace<'a>),
    Binary { data: &'a [u8], pos: usize },
}

impl Reader<'_> {
    fn read(&mut self, ty: PlyType) -> Result<f64, MeshError> {
        match self {
            Reader::Ascii(tokens) => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| MeshError::Parse("unexpected end of PLY data".into()))?;
                tok.parse::<f64>()
                    .map_err(|_| MeshError::Parse(format!("bad PLY number `{tok}`")))
            }
            Reader::Binary { data, pos } => {
                let n = ty.size();
                let b = data
                    .get(*pos..*pos + n)
                    .ok_or_else(|| MeshError::Parse("unexpected end of PLY data".into()))?;
                *pos += n;
                Ok(match ty {
                    PlyType::I8 => b[0] as i8 as f64,
                    PlyType::U8 => b[0] as f64,
                    PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
                    PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
                    PlyType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    PlyType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    PlyType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    PlyType::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
                })
            }
        }
    }
}

fn parse_ply<T: Scalar>(bytes: &[u8]) -> Result<Mesh<T>, MeshError> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| MeshError::Parse("PLY header has no end_header".into()))?;
    let mut body_start = end + END.len();
    while body_start < bytes.len() && bytes[body_start] != b'\n' {
        body_start += 1;
    }
    body_start += 1;
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| MeshError::Parse("PLY header is not UTF-8".into()))?;

    let mut lines = header.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("ply") {
        return Err(MeshError::Parse("missing `ply` magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["format", "ascii", _] => format = Some(PlyFormat::Ascii),
            ["format", "binary_little_endian", _] => format = Some(PlyFormat::BinaryLittleEndian),
            ["format", other, ..] => {
                return Err(MeshError::Parse(format!("unsupported PLY format `{other}`")))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| MeshError::Parse(format!("bad element count `{count}`")))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| MeshError::Parse("property before element".into()))?;
                el.props.push(PlyProperty::List(
                    PlyType::parse(ct)?,
                    PlyType::parse(it)?,
                    name.to_string(),
                ));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| MeshError::Parse("property before element".into()))?;
                el.props.push(PlyProperty::Scalar(PlyType::parse(ty)?, name.to_string()));
            }
            _ => return Err(MeshError::Parse(format!("unrecognised PLY header line `{line}`"))),
        }
    }
    let format = format.ok_or_else(|| MeshError::Parse("PLY header has no format line".into()))?;
    let body = bytes.get(body_start..).unwrap_or(&[]);
    let mut reader = match format {
        PlyFormat::Ascii => Reader::Ascii(
            std::str::from_utf8(body)
                .map_err(|_| MeshError::Parse("ASCII PLY body is not UTF-8".into()))?
                .split_ascii_whitespace(),
        ),
        PlyFormat::BinaryLittleEndian => Reader::Binary { data: body, pos: 0 },
    };

    let mut vertex_props: Vec<(PlyType, String)> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut vertex_count = 0;
    for el in &elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        if is_vertex {
            vertex_count = el.count;
            for p in &el.props {
                match p {
                    PlyProperty::Scalar(ty, name) => vertex_props.push((*ty, name.clone())),
                    PlyProperty::List(..) => {
                        return Err(MeshError::Parse("list properties on vertices are not supported".into()))
                    }
                }
            }
            columns = vec![Vec::with_capacity(el.count); vertex_props.len()];
        }
        for _ in 0..el.count {
            for (pi, p) in el.props.iter().enumerate() {
                match p {
                    PlyProperty::Scalar(ty, _) => {
                        let x = reader.read(*ty)?;
                        if is_vertex {
                            columns[pi].push(x);
                        }
                    }
                    PlyProperty::List(ct, it, name) => {
                        let n = reader.read(*ct)? as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(reader.read(*it)?);
                        }
                        if is_face && (name == "vertex_indices" || name == "vertex_index") {
                            push_polygon(&mut faces, &idx)?;
                        }
                    }
                }
            }
        }
    }
    if vertex_props.is_empty() {
        return Err(MeshError::Parse("PLY has no vertex element".into()));
    }

    let col = |name: &str| vertex_props.iter().position(|(_, n)| n == name);
    let xyz = [col("x"), col("y"), col("z")];
    let [Some(ix), Some(iy), Some(iz)] = xyz else {
        return Err(MeshError::Parse("PLY vertices lack x/y/z".into()));
    };
    let positions = (0..vertex_count)
        .map(|v| Vec3::new(T::lit(columns[ix][v]), T::lit(columns[iy][v]), T::lit(columns[iz][v])))
        .collect();
    let mut mesh = Mesh::new(positions, faces)?;

    let mut consumed = vec![false; vertex_props.len()];
    consumed[ix] = true;
    consumed[iy] = true;
    consumed[iz] = true;

    let triples: [(&str, [&str; 3]); 3] = [
        (channel::BISPECTRAL, ["red", "green", "blue"]),
        (channel::FINAL_RGB, ["final_red", "final_green", "final_blue"]),
        (channel::SPHERE, ["sx", "sy", "sz"]),
    ];
    for (chan, names) in triples {
        if let [Some(a), Some(b), Some(c)] = names.map(col) {
            let div = if vertex_props[a].0 == PlyType::U8 { 255.0 } else { 1.0 };
            let v = (0..vertex_count)
                .map(|i| {
                    Vec3::new(
                        T::lit(columns[a][i] / div),
                        T::lit(columns[b][i] / div),
                        T::lit(columns[c][i] / div),
                    )
                })
                .collect();
            mesh.set_vector(chan, v)?;
            consumed[a] = true;
            consumed[b] = true;
            consumed[c] = true;
        }
    }
    for (i, (_, name)) in vertex_props.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        if let Some(base) = name.strip_suffix("_x") {
            if let (Some(b), Some(c)) = (col(&format!("{base}_y")), col(&format!("{base}_z"))) {
                let v = (0..vertex_count)
                    .map(|k| Vec3::new(T::lit(columns[i][k]), T::lit(columns[b][k]), T::lit(columns[c][k])))
                    .collect();
                mesh.set_vector(base, v)?;
                consumed[i] = true;
                consumed[b] = true;
                consumed[c] = true;
            }
        }
    }
    for (i, (ty, name)) in vertex_props.iter().enumerate() {
        if consumed[i] {
            continue;
        }
        if ty.is_float() {
            mesh.set_scalar(name, columns[i].iter().map(|&x| T::lit(x)).collect())?;
        } else {
            mesh.set_label(name, columns[i].iter().map(|&x| x as i32).collect())?;
        }
    }
    Ok(mesh)
}

fn push_polygon(faces: &mut Vec<[usize; 3]>, idx: &[f64]) -> Result<(), MeshError> {
    if idx.len() < 3 {
        return Err(MeshError::Parse(format!("face with {} vertices", idx.len())));
    }
    if idx.iter().any(|&i| i < 0.0) {
        return Err(MeshError::Parse("negative vertex index".into()));
    }
    // Fan triangulation for polygons.
    for k in 1..idx.len() - 1 {
        faces.push([idx[0] as usize, idx[k] as usize, idx[k + 1] as usize]);
    }
    Ok(())
}

fn quantize(x: f64) -> u8 {
    (x.clamp(0.0, 1.0) * 255.0).round() as u8
}

enum Column<'a, T> {
    Position(&'static str, usize),
    Scalar(&'a str, &'a [T]),
    Vector(String, &'a [Vec3<T>], usize),
    Byte(&'static str, &'a [Vec3<T>], usize),
    Int(&'a str, &'a [i32]),
}

/// Serialises a mesh. Floats are written as doubles so that a reload is
/// lossless; colour channels are quantised to 8 bits.
pub fn ply_bytes<T: Scalar>(mesh: &Mesh<T>, format: PlyFormat) -> Vec<u8> {
    let mut cols: Vec<Column<T>> = vec![
        Column::Position("x", 0),
        Column::Position("y", 1),
        Column::Position("z", 2),
    ];
    for (name, ch) in mesh.channels() {
        match ch {
            Channel::Vector(v) => match name {
                channel::BISPECTRAL => {
                    for (k, n) in ["red", "green", "blue"].into_iter().enumerate() {
                        cols.push(Column::Byte(n, v, k));
                    }
                }
                channel::FINAL_RGB => {
                    for (k, n) in ["final_red", "final_green", "final_blue"].into_iter().enumerate() {
                        cols.push(Column::Byte(n, v, k));
                    }
                }
                channel::SPHERE => {
                    for (k, n) in ["sx", "sy", "sz"].into_iter().enumerate() {
                        cols.push(Column::Vector(n.to_string(), v, k));
                    }
                }
                _ => {
                    for (k, s) in ["x", "y", "z"].into_iter().enumerate() {
                        cols.push(Column::Vector(format!("{name}_{s}"), v, k));
                    }
                }
            },
            Channel::Scalar(v) => cols.push(Column::Scalar(name, v)),
            Channel::Label(v) => cols.push(Column::Int(name, v)),
        }
    }

    let mut out = Vec::new();
    let fmt = match format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let _ = writeln!(out, "ply\nformat {fmt} 1.0");
    let _ = writeln!(out, "element vertex {}", mesh.vertex_count());
    for c in &cols {
        let _ = match c {
            Column::Position(n, _) => writeln!(out, "property double {n}"),
            Column::Scalar(n, _) => writeln!(out, "property double {n}"),
            Column::Vector(n, _, _) => writeln!(out, "property double {n}"),
            Column::Byte(n, _, _) => writeln!(out, "property uchar {n}"),
            Column::Int(n, _) => writeln!(out, "property int {n}"),
        };
    }
    let _ = writeln!(out, "element face {}", mesh.face_count());
    let _ = writeln!(out, "property list uchar int vertex_indices\nend_header");

    let ascii = format == PlyFormat::Ascii;
    for v in 0..mesh.vertex_count() {
        for (i, c) in cols.iter().enumerate() {
            if ascii && i > 0 {
                out.push(b' ');
            }
            let float = match c {
                Column::Position(_, k) => Some(mesh.positions[v][*k]),
                Column::Scalar(_, d) => Some(d[v]),
                Column::Vector(_, d, k) => Some(d[v][*k]),
                _ => None,
            };
            if let Some(x) = float {
                if ascii {
                    let _ = write!(out, "{}", x.as_f64());
                } else {
                    out.extend_from_slice(&x.as_f64().to_le_bytes());
                }
                continue;
            }
            match c {
                Column::Byte(_, d, k) => {
                    let b = quantize(d[v][*k].as_f64());
                    if ascii {
                        let _ = write!(out, "{b}");
                    } else {
                        out.push(b);
                    }
                }
                Column::Int(_, d) => {
                    if ascii {
                        let _ = write!(out, "{}", d[v]);
                    } else {
                        out.extend_from_slice(&d[v].to_le_bytes());
                    }
                }
                _ => unreachable!(),
            }
        }
        if ascii {
            out.push(b'\n');
        }
    }
    for f in &mesh.faces {
        if ascii {
            let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
        } else {
            out.push(3);
            for &i in f {
                out.extend_from_slice(&(i as i32).to_le_bytes());
            }
        }
    }
    out
}

/// Parses `v` and `f` records; other records are ignored. Polygons are fan
/// triangulated and negative (relative) indices resolved.
pub fn parse_obj<T: Scalar>(text: &str) -> Result<Mesh<T>, MeshError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| MeshError::Parse(format!("line {}: bad vertex", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(MeshError::Parse(format!("line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                positions.push(Vec3::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2])));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in parts {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head
                        .parse()
                        .map_err(|_| MeshError::Parse(format!("line {}: bad face index `{tok}`", lineno + 1)))?;
                    let resolved = if i < 0 { positions.len() as i64 + i } else { i - 1 };
                    if resolved < 0 {
                        return Err(MeshError::Parse(format!("line {}: face index {i} out of range", lineno + 1)));
                    }
                    idx.push(resolved as f64);
                }
                push_polygon(&mut faces, &idx)
                    .map_err(|e| MeshError::Parse(format!("line {}: {e}", lineno + 1)))?;
            }
            _ => {}
        }
    }
    Mesh::new(positions, faces)
}

/// Applies attributes from a sidecar of the form
/// `{"<vertex index>": {"<channel>": number | [x, y, z]}}`. Every channel
/// named anywhere must be given for every vertex.
pub fn apply_sidecar<T: Scalar>(mesh: &mut Mesh<T>, json: &str) -> Result<(), MeshError> {
    let root: Value = serde_json::from_str(json).map_err(|e| MeshError::Parse(format!("sidecar: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| MeshError::Parse("sidecar must be a JSON object".into()))?;
    let n = mesh.vertex_count();
    let mut scalars: BTreeMap<String, Vec<Option<T>>> = BTreeMap::new();
    let mut vectors: BTreeMap<String, Vec<Option<Vec3<T>>>> = BTreeMap::new();
    for (key, attrs) in obj {
        let v: usize = key
            .parse()
            .map_err(|_| MeshError::Parse(format!("sidecar key `{key}` is not a vertex index")))?;
        if v >= n {
            return Err(MeshError::Parse(format!("sidecar vertex {v} out of range ({n} vertices)")));
        }
        let attrs = attrs
            .as_object()
            .ok_or_else(|| MeshError::Parse(format!("sidecar entry {v} must be an object")))?;
        for (name, val) in attrs {
            let bad = || MeshError::Parse(format!("sidecar vertex {v}: bad value for `{name}`"));
            match val {
                Value::Number(x) => {
                    let x = x.as_f64().ok_or_else(bad)?;
                    scalars.entry(name.clone()).or_insert_with(|| vec![None; n])[v] = Some(T::lit(x));
                }
                Value::Array(a) if a.len() == 3 => {
                    let c: Vec<f64> = a.iter().map(|e| e.as_f64().ok_or_else(bad)).collect::<Result<_, _>>()?;
                    vectors.entry(name.clone()).or_insert_with(|| vec![None; n])[v] =
                        Some(Vec3::new(T::lit(c[0]), T::lit(c[1]), T::lit(c[2])));
                }
                _ => return Err(bad()),
            }
        }
    }
    for (name, vals) in scalars {
        let got = vals.iter().filter(|x| x.is_some()).count();
        if got != n {
            return Err(MeshError::ChannelLength { name, got, expected: n });
        }
        mesh.set_scalar(&name, vals.into_iter().flatten().collect())?;
    }
    for (name, vals) in vectors {
        let got = vals.iter().filter(|x| x.is_some()).count();
        if got != n {
            return Err(MeshError::ChannelLength { name, got, expected: n });
        }
        mesh.set_vector(&name, vals.into_iter().flatten().collect())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn painted() -> Mesh<f64> {
        let mut m = primitives::icosphere::<f64>(1);
        let n = m.vertex_count();
        let rgb = (0..n)
            .map(|i| Vec3::new((i % 256) as f64 / 255.0, 1.0 / 255.0, 1.0))
            .collect();
        m.set_vector(channel::BISPECTRAL, rgb).unwrap();
        m.set_scalar(channel::HUE, (0..n).map(|i| i as f64 / n as f64).collect()).unwrap();
        m.set_label(channel::PATCH_ID, (0..n).map(|i| i as i32 % 3 - 1).collect()).unwrap();
        m.set_vector(channel::SPHERE, m.positions.clone()).unwrap();
        m.set_vector("grad", m.positions.iter().map(|p| *p * 2.0).collect()).unwrap();
        m
    }

    #[test]
    fn ply_round_trip_both_formats() {
        let m = painted();
        for fmt in [PlyFormat::Ascii, PlyFormat::BinaryLittleEndian] {
            let back: Mesh<f64> = parse_ply(&ply_bytes(&m, fmt)).unwrap();
            assert_eq!(back, m, "{fmt:?}");
        }
    }

    #[test]
    fn ascii_ply_with_quads_and_extra_element() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 4\nproperty float x\nproperty float y\n\
                    property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n\
                    element face 1\nproperty list uchar int vertex_indices\nelement edge 1\n\
                    property int vertex1\nproperty int vertex2\nend_header\n\
                    0 0 0 255 0 0\n1 0 0 0 255 0\n1 1 0 0 0 255\n0 1 0 0 0 0\n4 0 1 2 3\n0 1\n";
        let m: Mesh<f64> = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(m.face_count(), 2);
        assert_eq!(m.vector(channel::BISPECTRAL).unwrap()[1], Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn truncated_ply_is_a_parse_error() {
        let mut bytes = ply_bytes(&painted(), PlyFormat::BinaryLittleEndian);
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(parse_ply::<f64>(&bytes), Err(MeshError::Parse(_))));
    }

    #[test]
    fn obj_with_sidecar() {
        let obj = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 3 1 4\n";
        let mut m: Mesh<f64> = parse_obj(obj).unwrap();
        m.validate_genus_zero().unwrap();
        let side = r#"{"0": {"hue": 0.2, "bispectral_rgb": [1, 0, 0]},
                       "1": {"hue": 0.3, "bispectral_rgb": [0, 1, 0]},
                       "2": {"hue": 0.4, "bispectral_rgb": [0, 0, 1]},
                       "3": {"hue": 0.5, "bispectral_rgb": [0, 0, 0]}}"#;
        apply_sidecar(&mut m, side).unwrap();
        assert_eq!(m.scalar(channel::HUE).unwrap(), &[0.2, 0.3, 0.4, 0.5]);
    }

    #[test]
    fn sidecar_with_missing_entries_is_a_length_error() {
        let mut m: Mesh<f64> = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let side = r#"{"0": {"hue": 0.2}, "1": {"hue": 0.3}}"#;
        assert!(matches!(
            apply_sidecar(&mut m, side),
            Err(MeshError::ChannelLength { got: 2, expected: 3, .. })
        ));
    }
}
