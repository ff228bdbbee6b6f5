//! Triangle meshes with optional per-vertex color, plus OBJ and PLY codecs.
//!
//! OBJ colors use the six-number `v x y z r g b` extension. PLY is read in
//! ASCII and binary little-endian flavors; color properties may be `uchar`
//! (scaled by 1/255) or floating point. Polygons are fan-triangulated and
//! faces with repeated corners are dropped at load time.

use crate::error::{read_file, write_file, Error, Result};
use crate::{Rgb, Vec3};
use std::io::Write;
use std::path::Path;

const NORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    colors: Option<Vec<Rgb>>,
    normals: Option<Vec<Vec3>>,
}

/// What the loader had to discard.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub dropped_degenerate: usize,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some((i, v)) = vertices
            .iter()
            .enumerate()
            .find(|(_, v)| !v.iter().all(|c| c.is_finite()))
        {
            return Err(Error::invalid(format!("vertex {i} is not finite: {v:?}")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&k| k as usize >= n) {
                return Err(Error::invalid(format!(
                    "face {fi} references vertex {bad} but mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::invalid(format!("face {fi} is degenerate: {f:?}")));
            }
        }
        Ok(TriMesh {
            vertices,
            faces,
            colors: None,
            normals: None,
        })
    }

    pub fn with_colors(mut self, colors: Vec<Rgb>) -> Result<Self> {
        if colors.len() != self.vertices.len() {
            return Err(Error::invalid(format!(
                "{} colors for {} vertices",
                colors.len(),
                self.vertices.len()
            )));
        }
        if let Some((i, c)) = colors
            .iter()
            .enumerate()
            .find(|(_, c)| !c.iter().all(|x| (0.0..=1.0).contains(x)))
        {
            return Err(Error::invalid(format!("color {i} outside [0,1]: {c:?}")));
        }
        self.colors = Some(colors);
        Ok(self)
    }

    pub fn with_normals(mut self, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != self.vertices.len() {
            return Err(Error::invalid(format!(
                "{} normals for {} vertices",
                normals.len(),
                self.vertices.len()
            )));
        }
        if let Some(i) = normals
            .iter()
            .position(|n| (n.norm() - 1.0).abs() > NORMAL_TOL)
        {
            return Err(Error::invalid(format!("normal {i} is not unit length")));
        }
        self.normals = Some(normals);
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn normals(&self) -> Option<&[Vec3]> {
        self.normals.as_deref()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Concatenates meshes, offsetting face indices. Colors survive only if
    /// every part has them.
    pub fn merge(parts: &[TriMesh]) -> Result<TriMesh> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        let all_colored = parts.iter().all(|p| p.colors.is_some());
        let mut colors = Vec::new();
        for p in parts {
            let off = vertices.len() as u32;
            vertices.extend_from_slice(&p.vertices);
            faces.extend(p.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
            if let Some(c) = &p.colors {
                colors.extend_from_slice(c);
            }
        }
        let mesh = TriMesh::new(vertices, faces)?;
        if all_colored && !parts.is_empty() {
            mesh.with_colors(colors)
        } else {
            Ok(mesh)
        }
    }

    /// Drops vertices no face references, remapping indices in order.
    pub fn compact(&self) -> TriMesh {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut keep = Vec::new();
        for f in &self.faces {
            for &k in f {
                if remap[k as usize] == u32::MAX {
                    remap[k as usize] = keep.len() as u32;
                    keep.push(k as usize);
                }
            }
        }
        keep.sort_unstable();
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new as u32;
        }
        TriMesh {
            vertices: keep.iter().map(|&k| self.vertices[k]).collect(),
            faces: self
                .faces
                .iter()
                .map(|f| [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]])
                .collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| keep.iter().map(|&k| c[k]).collect()),
            normals: self
                .normals
                .as_ref()
                .map(|n| keep.iter().map(|&k| n[k]).collect()),
        }
    }

    pub fn with_positions(&self, vertices: Vec<Vec3>) -> Result<TriMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::invalid("vertex count changed"));
        }
        Ok(TriMesh {
            vertices,
            faces: self.faces.clone(),
            colors: self.colors.clone(),
            normals: None,
        })
    }
}

/// Area-weighted vertex normals. Vertices without any non-degenerate incident
/// face get the zero vector, which callers must treat as "no normal".
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); mesh.vertices.len()];
    for f in &mesh.faces {
        let [a, b, c] = [f[0] as usize, f[1] as usize, f[2] as usize];
        let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        // |cross| is twice the area, so summing raw cross products area-weights.
        let n = (pb - pa).cross(&(pc - pa));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    for n in &mut acc {
        let len = n.norm();
        *n = if len > 0.0 && len.is_finite() {
            *n / len
        } else {
            Vec3::zeros()
        };
    }
    acc
}

pub fn bbox(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| {
        (lo.inf(p), hi.sup(p))
    }))
}

pub fn bbox_diagonal_points(points: &[Vec3]) -> Result<f64> {
    let (lo, hi) = bbox(points).ok_or_else(|| Error::invalid("empty point set has no bounding box"))?;
    Ok((hi - lo).norm())
}

pub fn bbox_diagonal(mesh: &TriMesh) -> Result<f64> {
    bbox_diagonal_points(&mesh.vertices)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    PlyAscii,
    PlyBinary,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::PlyBinary),
            _ => None,
        }
    }
}

pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    load_mesh_with_report(path).map(|(m, _)| m)
}

pub fn load_mesh_with_report(path: &Path) -> Result<(TriMesh, LoadReport)> {
    let bytes = read_file(path)?;
    let (mesh, report) = parse_mesh(&bytes).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}:{location}", path.display()),
            message,
        },
        other => other,
    })?;
    if report.dropped_degenerate > 0 {
        log::warn!(
            "{}: dropped {} degenerate faces",
            path.display(),
            report.dropped_degenerate
        );
    }
    Ok((mesh, report))
}

/// Sniffs the PLY magic, otherwise treats the input as OBJ.
pub fn parse_mesh(bytes: &[u8]) -> Result<(TriMesh, LoadReport)> {
    if bytes.starts_with(b"ply") {
        parse_ply(bytes)
    } else {
        parse_obj(bytes)
    }
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::invalid(format!("{}: unknown mesh extension", path.display()))
    })?;
    let mut buf = Vec::new();
    encode_mesh(mesh, format, &mut buf)?;
    write_file(path, &buf)
}

pub fn encode_mesh<W: Write>(mesh: &TriMesh, format: MeshFormat, out: &mut W) -> Result<()> {
    match format {
        MeshFormat::Obj => write_obj(mesh, out),
        MeshFormat::PlyAscii => write_ply(mesh, false, out),
        MeshFormat::PlyBinary => write_ply(mesh, true, out),
    }
}

/// Fan-triangulates a polygon and drops degenerate triangles.
fn push_polygon(poly: &[u32], faces: &mut Vec<[u32; 3]>, report: &mut LoadReport) {
    for k in 1..poly.len().saturating_sub(1) {
        let f = [poly[0], poly[k], poly[k + 1]];
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            report.dropped_degenerate += 1;
        } else {
            faces.push(f);
        }
    }
}

fn parse_f64(tok: &str, loc: impl Fn() -> String) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(loc(), format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(loc(), format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

pub fn parse_obj(bytes: &[u8]) -> Result<(TriMesh, LoadReport)> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        Error::parse(format!("byte {}", e.valid_up_to()), "invalid UTF-8")
    })?;
    let mut vertices = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut faces = Vec::new();
    let mut report = LoadReport::default();
    let mut poly = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let loc = || format!("line {}", lineno + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let nums = toks
                    .map(|t| parse_f64(t, loc))
                    .collect::<Result<Vec<_>>>()?;
                match nums.len() {
                    3 | 4 => {}
                    6 => colors.push([nums[3] as f32, nums[4] as f32, nums[5] as f32]),
                    k => {
                        return Err(Error::parse(
                            loc(),
                            format!("vertex has {k} components, expected 3, 4 or 6"),
                        ))
                    }
                }
                vertices.push(Vec3::new(nums[0], nums[1], nums[2]));
                if !colors.is_empty() && colors.len() != vertices.len() {
                    return Err(Error::parse(loc(), "vertex colors present on some vertices only"));
                }
            }
            Some("f") => {
                poly.clear();
                for t in toks {
                    let idx_tok = t.split('/').next().unwrap_or("");
                    let idx: i64 = idx_tok
                        .parse()
                        .map_err(|_| Error::parse(loc(), format!("bad face index {t:?}")))?;
                    let n = vertices.len() as i64;
                    let resolved = match idx {
                        0 => return Err(Error::parse(loc(), "face index 0 is invalid in OBJ")),
                        i if i > 0 => i - 1,
                        i => n + i,
                    };
                    if resolved < 0 || resolved > u32::MAX as i64 {
                        return Err(Error::invalid(format!(
                            "{}: face index {idx} out of range",
                            loc()
                        )));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(Error::parse(loc(), "face with fewer than 3 corners"));
                }
                push_polygon(&poly, &mut faces, &mut report);
            }
            _ => {}
        }
    }
    let mesh = TriMesh::new(vertices, faces)?;
    let mesh = if colors.is_empty() {
        mesh
    } else {
        mesh.with_colors(colors)?
    };
    Ok((mesh, report))
}

fn write_obj<W: Write>(mesh: &TriMesh, out: &mut W) -> Result<()> {
    writeln!(out, "# {} vertices, {} faces", mesh.vertices.len(), mesh.faces.len())?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => {
                let [r, g, b] = c[i];
                writeln!(out, "v {} {} {} {} {} {}", v.x, v.y, v.z, r, g, b)?
            }
            None => writeln!(out, "v {} {} {}", v.x, v.y, v.z)?,
        }
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Scalar> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    /// Divisor that maps an integer color channel onto [0, 1].
    fn color_scale(self) -> f64 {
        match self {
            Scalar::I8 => 127.0,
            Scalar::U8 => 255.0,
            Scalar::I16 => 32767.0,
            Scalar::U16 => 65535.0,
            Scalar::I32 => i32::MAX as f64,
            Scalar::U32 => u32::MAX as f64,
            Scalar::F32 | Scalar::F64 => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
enum PlyProperty {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
}

impl PlyElement {
    fn min_record_size(&self) -> usize {
        self.props
            .iter()
            .map(|p| match p {
                PlyProperty::Scalar { ty, .. } => ty.size(),
                PlyProperty::List { count, .. } => count.size(),
            })
            .sum()
    }

    fn scalar_index(&self, name: &str) -> Option<usize> {
        self.props
            .iter()
            .position(|p| matches!(p, PlyProperty::Scalar { name: n, .. } if n == name))
    }
}

/// Pulls values one at a time from either an ASCII token stream or a binary
/// little-endian byte stream.
enum PlyReader<'a> {
    Ascii {
        tokens: std::str::SplitAsciiWhitespace<'a>,
        consumed: usize,
    },
    Binary {
        data: &'a [u8],
        pos: usize,
        start: usize,
    },
}

impl PlyReader<'_> {
    fn location(&self) -> String {
        match self {
            PlyReader::Ascii { consumed, .. } => format!("body token {consumed}"),
            PlyReader::Binary { pos, start, .. } => format!("byte offset {}", start + pos),
        }
    }

    fn remaining(&self) -> Option<usize> {
        match self {
            PlyReader::Ascii { .. } => None,
            PlyReader::Binary { data, pos, .. } => Some(data.len() - pos),
        }
    }

    fn read(&mut self, ty: Scalar) -> Result<f64> {
        match self {
            PlyReader::Ascii { tokens, consumed } => {
                *consumed += 1;
                let at = *consumed;
                let tok = tokens
                    .next()
                    .ok_or_else(|| Error::parse(format!("body token {at}"), "unexpected end of data"))?;
                let v: f64 = tok.parse().map_err(|_| {
                    Error::parse(format!("body token {at}"), format!("bad number {tok:?}"))
                })?;
                Ok(v)
            }
            PlyReader::Binary { data, pos, start } => {
                let n = ty.size();
                if *pos + n > data.len() {
                    return Err(Error::parse(
                        format!("byte offset {}", *start + *pos),
                        "unexpected end of data",
                    ));
                }
                let b = &data[*pos..*pos + n];
                *pos += n;
                Ok(match ty {
                    Scalar::I8 => b[0] as i8 as f64,
                    Scalar::U8 => b[0] as f64,
                    Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
                    Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
                    Scalar::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
                    Scalar::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
                    Scalar::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
                    Scalar::F64 => f64::from_le_bytes(b.try_into().unwrap()),
                })
            }
        }
    }
}

fn parse_ply_header(text: &str) -> Result<(bool, Vec<PlyElement>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse("line 1", "missing ply magic")),
    }
    let mut binary = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for (i, line) in lines {
        let loc = || format!("header line {}", i + 1);
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => {
                return Err(Error::parse(loc(), format!("unsupported PLY format {other}")))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(loc(), format!("bad element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", c, t, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(loc(), "property before element"))?;
                let count = Scalar::parse(c)
                    .ok_or_else(|| Error::parse(loc(), format!("unknown type {c}")))?;
                let item = Scalar::parse(t)
                    .ok_or_else(|| Error::parse(loc(), format!("unknown type {t}")))?;
                el.props.push(PlyProperty::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", t, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(loc(), "property before element"))?;
                let ty = Scalar::parse(t)
                    .ok_or_else(|| Error::parse(loc(), format!("unknown type {t}")))?;
                el.props.push(PlyProperty::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            ["end_header"] => {
                let binary = binary.ok_or_else(|| Error::parse(loc(), "missing format line"))?;
                return Ok((binary, elements));
            }
            _ => return Err(Error::parse(loc(), format!("unrecognized header line {line:?}"))),
        }
    }
    Err(Error::parse("header", "missing end_header"))
}

pub fn parse_ply(bytes: &[u8]) -> Result<(TriMesh, LoadReport)> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::parse("header", "missing end_header"))?;
    let mut body_start = end + END.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..body_start])
        .map_err(|e| Error::parse(format!("byte {}", e.valid_up_to()), "header is not UTF-8"))?;
    let (binary, elements) = parse_ply_header(header)?;
    let body = &bytes[body_start..];
    let mut reader = if binary {
        PlyReader::Binary {
            data: body,
            pos: 0,
            start: body_start,
        }
    } else {
        let text = std::str::from_utf8(body).map_err(|e| {
            Error::parse(format!("byte {}", body_start + e.valid_up_to()), "body is not UTF-8")
        })?;
        PlyReader::Ascii {
            tokens: text.split_ascii_whitespace(),
            consumed: 0,
        }
    };

    let mut vertices = Vec::new();
    let mut colors: Vec<Rgb> = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut faces = Vec::new();
    let mut report = LoadReport::default();
    let mut poly: Vec<u32> = Vec::new();

    for el in &elements {
        if let Some(rem) = reader.remaining() {
            if el.count.saturating_mul(el.min_record_size()) > rem {
                return Err(Error::parse(
                    reader.location(),
                    format!("element {} claims {} records past end of data", el.name, el.count),
                ));
            }
        }
        let cap = el.count.min(1 << 20);
        match el.name.as_str() {
            "vertex" => {
                let xyz = ["x", "y", "z"].map(|n| el.scalar_index(n));
                let [Some(ix), Some(iy), Some(iz)] = xyz else {
                    return Err(Error::parse("header", "vertex element lacks x/y/z"));
                };
                let rgb = ["red", "green", "blue"].map(|n| el.scalar_index(n));
                let nrm = ["nx", "ny", "nz"].map(|n| el.scalar_index(n));
                let has_rgb = rgb.iter().all(Option::is_some);
                let has_nrm = nrm.iter().all(Option::is_some);
                vertices.reserve(cap);
                let mut vals = vec![0.0f64; el.props.len()];
                for _ in 0..el.count {
                    for (k, p) in el.props.iter().enumerate() {
                        vals[k] = match p {
                            PlyProperty::Scalar { ty, .. } => reader.read(*ty)?,
                            PlyProperty::List { count, item, .. } => {
                                let n = reader.read(*count)? as usize;
                                for _ in 0..n {
                                    reader.read(*item)?;
                                }
                                0.0
                            }
                        };
                    }
                    let p = Vec3::new(vals[ix], vals[iy], vals[iz]);
                    if !p.iter().all(|c| c.is_finite()) {
                        return Err(Error::parse(reader.location(), "non-finite vertex"));
                    }
                    vertices.push(p);
                    if has_rgb {
                        let c = rgb.map(|i| {
                            let i = i.unwrap();
                            let PlyProperty::Scalar { ty, .. } = el.props[i] else {
                                unreachable!()
                            };
                            (vals[i] / ty.color_scale()) as f32
                        });
                        colors.push(c);
                    }
                    if has_nrm {
                        let n = Vec3::new(
                            vals[nrm[0].unwrap()],
                            vals[nrm[1].unwrap()],
                            vals[nrm[2].unwrap()],
                        );
                        let len = n.norm();
                        normals.push(if len > 0.0 && len.is_finite() {
                            n / len
                        } else {
                            Vec3::zeros()
                        });
                    }
                }
            }
            "face" => {
                let li = el.props.iter().position(|p| {
                    matches!(p, PlyProperty::List { name, .. } if name == "vertex_indices" || name == "vertex_index")
                });
                let Some(li) = li else {
                    return Err(Error::parse("header", "face element lacks vertex_indices"));
                };
                faces.reserve(cap);
                for _ in 0..el.count {
                    for (k, p) in el.props.iter().enumerate() {
                        match p {
                            PlyProperty::Scalar { ty, .. } => {
                                reader.read(*ty)?;
                            }
                            PlyProperty::List { count, item, .. } => {
                                let n = reader.read(*count)?;
                                if !(0.0..=1e6).contains(&n) {
                                    return Err(Error::parse(reader.location(), "bad list length"));
                                }
                                poly.clear();
                                for _ in 0..n as usize {
                                    let v = reader.read(*item)?;
                                    if k == li {
                                        if !(0.0..=u32::MAX as f64).contains(&v) || v.fract() != 0.0 {
                                            return Err(Error::invalid(format!(
                                                "{}: face index {v} out of range",
                                                reader.location()
                                            )));
                                        }
                                        poly.push(v as u32);
                                    }
                                }
                                if k == li {
                                    if poly.len() < 3 {
                                        return Err(Error::parse(
                                            reader.location(),
                                            "face with fewer than 3 corners",
                                        ));
                                    }
                                    push_polygon(&poly, &mut faces, &mut report);
                                }
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for p in &el.props {
                        match p {
                            PlyProperty::Scalar { ty, .. } => {
                                reader.read(*ty)?;
                            }
                            PlyProperty::List { count, item, .. } => {
                                let n = reader.read(*count)?;
                                if !(0.0..=1e6).contains(&n) {
                                    return Err(Error::parse(reader.location(), "bad list length"));
                                }
                                for _ in 0..n as usize {
                                    reader.read(*item)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let mut mesh = TriMesh::new(vertices, faces)?;
    if !colors.is_empty() {
        mesh = mesh.with_colors(colors)?;
    }
    if !normals.is_empty() && normals.iter().all(|n| n.norm() > 0.0) {
        mesh = mesh.with_normals(normals)?;
    }
    Ok((mesh, report))
}

fn write_ply<W: Write>(mesh: &TriMesh, binary: bool, out: &mut W) -> Result<()> {
    let fmt = if binary { "binary_little_endian" } else { "ascii" };
    writeln!(out, "ply\nformat {fmt} 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    if mesh.normals.is_some() {
        writeln!(out, "property double nx\nproperty double ny\nproperty double nz")?;
    }
    if mesh.colors.is_some() {
        writeln!(out, "property float red\nproperty float green\nproperty float blue")?;
    }
    writeln!(out, "element face {}", mesh.faces.len())?;
    writeln!(out, "property list uchar uint vertex_indices\nend_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        let n = mesh.normals.as_ref().map(|n| n[i]);
        let c = mesh.colors.as_ref().map(|c| c[i]);
        if binary {
            for x in v.iter() {
                out.write_all(&x.to_le_bytes())?;
            }
            if let Some(n) = n {
                for x in n.iter() {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
            if let Some(c) = c {
                for x in c {
                    out.write_all(&x.to_le_bytes())?;
                }
            }
        } else {
            write!(out, "{} {} {}", v.x, v.y, v.z)?;
            if let Some(n) = n {
                write!(out, " {} {} {}", n.x, n.y, n.z)?;
            }
            if let Some([r, g, b]) = c {
                write!(out, " {r} {g} {b}")?;
            }
            writeln!(out)?;
        }
    }
    for f in &mesh.faces {
        if binary {
            out.write_all(&[3u8])?;
            for k in f {
                out.write_all(&k.to_le_bytes())?;
            }
        } else {
            writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
        }
    }
    Ok(())
}
