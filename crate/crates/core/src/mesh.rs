//! Closed triangulated surfaces: loading, generation and validation.
//!
//! A [`TriMesh`] is always a closed, connected, orientable 2-manifold. Every
//! constructor runs the same validation pass, so downstream code can rely on
//! each edge having exactly two incident faces with opposite orientations.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Defect, Error, Result, Simplex};

/// Largest icosphere subdivision level accepted by [`generate_icosphere`].
pub const MAX_ICOSPHERE_LEVEL: u32 = 7;

#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// `face_edges[f][k]` is the edge opposite corner `k` of face `f`.
    face_edges: Vec<[usize; 3]>,
    edge_faces: Vec<[usize; 2]>,
    /// Intrinsic edge lengths overriding the embedding (flat torus).
    edge_lengths: Option<Vec<f64>>,
    /// Quotient coordinates in the fundamental domain, when the mesh has one.
    quotient_coords: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Topology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub chi: i64,
    pub genus: i64,
}

impl TriMesh {
    /// Builds and validates a mesh from positions and faces.
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self::build(vertices, faces, None, None)?;
        for (f, face) in mesh.faces.iter().enumerate() {
            let [a, b, c] = face.map(|v| mesh.vertices[v]);
            if cross_norm(sub(b, a), sub(c, a)) <= 0.0 {
                return Err(Error::Validation {
                    defect: Defect::DegenerateFace,
                    simplex: Simplex::Face,
                    index: f,
                });
            }
        }
        Ok(mesh)
    }

    fn build(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        edge_lengths: Option<Vec<f64>>,
        quotient_coords: Option<Vec<[f64; 2]>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let fail = |defect, simplex, index| Error::Validation {
            defect,
            simplex,
            index,
        };
        if let Some(i) = vertices
            .iter()
            .position(|p| p.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::invalid(format!("vertex {i} has a non-finite coordinate")));
        }
        if faces.is_empty() {
            return Err(Error::invalid("mesh has no faces"));
        }
        for (f, &[a, b, c]) in faces.iter().enumerate() {
            if a >= nv || b >= nv || c >= nv {
                return Err(fail(Defect::IndexOutOfRange, Simplex::Face, f));
            }
            if a == b || b == c || a == c {
                return Err(fail(Defect::DegenerateFace, Simplex::Face, f));
            }
        }

        // Undirected edges in order of first appearance.
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut incidence: Vec<Vec<(usize, bool)>> = Vec::new();
        let mut face_edges = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            let mut fe = [0usize; 3];
            for k in 0..3 {
                let a = face[(k + 1) % 3];
                let b = face[(k + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    incidence.push(Vec::new());
                    edges.len() - 1
                });
                incidence[e].push((f, a < b));
                fe[k] = e;
            }
            face_edges.push(fe);
        }

        let mut edge_faces = Vec::with_capacity(edges.len());
        for (e, inc) in incidence.iter().enumerate() {
            match inc.len() {
                1 => return Err(fail(Defect::OpenBoundary, Simplex::Edge, e)),
                2 => {
                    if inc[0].1 == inc[1].1 {
                        return Err(fail(Defect::InconsistentOrientation, Simplex::Face, inc[1].0));
                    }
                    edge_faces.push([inc[0].0, inc[1].0]);
                }
                _ => return Err(fail(Defect::NonManifoldEdge, Simplex::Edge, e)),
            }
        }

        // Vertex stars: incident faces must form a single fan.
        let mut star: Vec<Vec<usize>> = vec![Vec::new(); nv];
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                star[v].push(f);
            }
        }
        if let Some(v) = star.iter().position(|s| s.is_empty()) {
            return Err(fail(Defect::IsolatedVertex, Simplex::Vertex, v));
        }
        for (v, incident) in star.iter().enumerate() {
            // Walk around v through the edges incident to v.
            let start = incident[0];
            let mut visited = 1usize;
            let mut prev = usize::MAX;
            let mut cur = start;
            loop {
                let k = faces[cur].iter().position(|&x| x == v).unwrap();
                // The edge opposite corner k+1 contains v and the corner k+2.
                let e = face_edges[cur][(k + 1) % 3];
                let [f0, f1] = edge_faces[e];
                let next = if f0 == cur { f1 } else { f0 };
                if next == start {
                    break;
                }
                if next == prev || visited > incident.len() {
                    return Err(fail(Defect::NonManifoldVertex, Simplex::Vertex, v));
                }
                prev = cur;
                cur = next;
                visited += 1;
            }
            if visited != incident.len() {
                return Err(fail(Defect::NonManifoldVertex, Simplex::Vertex, v));
            }
        }

        // Connectivity over the face graph.
        let mut seen = vec![false; faces.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(f) = stack.pop() {
            for &e in &face_edges[f] {
                for &g in &edge_faces[e] {
                    if !seen[g] {
                        seen[g] = true;
                        stack.push(g);
                    }
                }
            }
        }
        if let Some(f) = seen.iter().position(|s| !s) {
            return Err(fail(Defect::Disconnected, Simplex::Face, f));
        }

        if let Some(lengths) = &edge_lengths {
            assert_eq!(lengths.len(), edges.len());
        }

        let mesh = TriMesh {
            vertices,
            faces,
            edges,
            face_edges,
            edge_faces,
            edge_lengths,
            quotient_coords,
        };
        let t = mesh.topology();
        debug_assert_eq!(t.chi, t.vertices as i64 - t.edges as i64 + t.faces as i64);
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn face_edges(&self) -> &[[usize; 3]] {
        &self.face_edges
    }

    pub fn edge_faces(&self) -> &[[usize; 2]] {
        &self.edge_faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_lengths_override(&self) -> Option<&[f64]> {
        self.edge_lengths.as_deref()
    }

    pub fn quotient_coords(&self) -> Option<&[[f64; 2]]> {
        self.quotient_coords.as_deref()
    }

    /// Edge lengths from the intrinsic override if present, else from positions.
    pub fn edge_lengths(&self) -> Vec<f64> {
        match &self.edge_lengths {
            Some(l) => l.clone(),
            None => self
                .edges
                .iter()
                .map(|&[a, b]| norm(sub(self.vertices[a], self.vertices[b])))
                .collect(),
        }
    }

    pub fn topology(&self) -> Topology {
        let v = self.vertices.len();
        let e = self.edges.len();
        let f = self.faces.len();
        let chi = v as i64 - e as i64 + f as i64;
        Topology {
            vertices: v,
            edges: e,
            faces: f,
            chi,
            genus: (2 - chi) / 2,
        }
    }

    /// Serializes the mesh as ASCII OFF.
    pub fn to_off(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "OFF");
        let _ = writeln!(out, "{} {} {}", self.vertices.len(), self.faces.len(), self.edges.len());
        for p in &self.vertices {
            let _ = writeln!(out, "{:.17e} {:.17e} {:.17e}", p[0], p[1], p[2]);
        }
        for f in &self.faces {
            let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
        }
        out
    }
}

pub fn topology(mesh: &TriMesh) -> Topology {
    mesh.topology()
}

/// Reads an ASCII OFF file into a validated mesh.
pub fn load_off(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = crate::io::read_text(path)?;
    parse_off(&text, path)
}

pub fn parse_off(text: &str, path: &Path) -> Result<TriMesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    // (line number, tokens) for every non-empty, non-comment line.
    let mut lines = text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
    });

    let (line, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    if header[0] != "OFF" {
        return Err(err(line, format!("expected header OFF, found {:?}", header[0])));
    }
    let (line, counts) = if header.len() > 1 {
        (line, header[1..].to_vec())
    } else {
        lines
            .next()
            .ok_or_else(|| err(line + 1, "missing counts line".into()))?
    };
    if counts.len() < 2 {
        return Err(err(line, "counts line needs at least V and F".into()));
    }
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(line, format!("invalid count {s:?}")))
    };
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, toks) = lines
            .next()
            .ok_or_else(|| err(0, format!("expected {nv} vertices, file ended early")))?;
        if toks.len() < 3 {
            return Err(err(line, "vertex line needs three coordinates".into()));
        }
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = toks[k]
                .parse::<f64>()
                .map_err(|_| err(line, format!("invalid coordinate {:?}", toks[k])))?;
        }
        vertices.push(p);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, toks) = lines
            .next()
            .ok_or_else(|| err(0, format!("expected {nf} faces, file ended early")))?;
        if toks[0] != "3" {
            return Err(err(line, format!("only triangles are supported, got {}-gon", toks[0])));
        }
        if toks.len() < 4 {
            return Err(err(line, "face line needs three vertex indices".into()));
        }
        let mut f = [0usize; 3];
        for k in 0..3 {
            f[k] = toks[k + 1]
                .parse::<usize>()
                .map_err(|_| err(line, format!("invalid vertex index {:?}", toks[k + 1])))?;
        }
        faces.push(f);
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "trailing data after the last face".into()));
    }
    TriMesh::new(vertices, faces)
}

fn icosahedron() -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (raw.iter().map(|&p| normalize(p)).collect(), faces)
}

/// Unit-sphere icosphere: the icosahedron split `subdivisions` times, each
/// triangle into four, with new vertices projected onto the sphere.
pub fn generate_icosphere(subdivisions: u32) -> Result<TriMesh> {
    if subdivisions > MAX_ICOSPHERE_LEVEL {
        return Err(Error::invalid(format!(
            "icosphere subdivision {subdivisions} exceeds the cap {MAX_ICOSPHERE_LEVEL}"
        )));
    }
    let (mut vertices, mut faces) = icosahedron();
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    TriMesh::new(vertices, faces)
}

/// Flat torus: an `m × n` grid on the unit-area rectangle of the given aspect
/// ratio (width / height) with opposite sides identified.
///
/// Positions are a torus of revolution and carry no metric meaning; the flat
/// geometry lives in the stored edge lengths.
pub fn generate_flat_torus(m: usize, n: usize, aspect: f64) -> Result<TriMesh> {
    if m < 3 || n < 3 {
        return Err(Error::invalid(format!("torus grid {m}x{n} is too small, need at least 3x3")));
    }
    if !(aspect.is_finite() && aspect > 0.0) {
        return Err(Error::invalid(format!("torus aspect must be positive, got {aspect}")));
    }
    let width = aspect.sqrt();
    let height = 1.0 / aspect.sqrt();
    let idx = |i: usize, j: usize| (j % n) * m + (i % m);

    let mut vertices = Vec::with_capacity(m * n);
    let mut coords = Vec::with_capacity(m * n);
    for j in 0..n {
        for i in 0..m {
            let a = std::f64::consts::TAU * i as f64 / m as f64;
            let b = std::f64::consts::TAU * j as f64 / n as f64;
            vertices.push([(2.0 + b.cos()) * a.cos(), (2.0 + b.cos()) * a.sin(), b.sin()]);
            coords.push([width * i as f64 / m as f64, height * j as f64 / n as f64]);
        }
    }
    let mut faces = Vec::with_capacity(2 * m * n);
    for j in 0..n {
        for i in 0..m {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }

    // Grid displacement between two vertices, wrapped to {-1, 0, 1} cells.
    let (dx, dy) = (width / m as f64, height / n as f64);
    let wrap = |d: isize, period: usize| -> f64 {
        let p = period as isize;
        let d = d.rem_euclid(p);
        (if d > p / 2 { d - p } else { d }) as f64
    };
    let mesh = TriMesh::build(vertices, faces, None, Some(coords))?;
    let lengths = mesh
        .edges
        .iter()
        .map(|&[a, b]| {
            let (ia, ja) = ((a % m) as isize, (a / m) as isize);
            let (ib, jb) = ((b % m) as isize, (b / m) as isize);
            let x = wrap(ib - ia, m) * dx;
            let y = wrap(jb - ja, n) * dy;
            (x * x + y * y).sqrt()
        })
        .collect();
    Ok(TriMesh {
        edge_lengths: Some(lengths),
        ..mesh
    })
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross_norm(a: [f64; 3], b: [f64; 3]) -> f64 {
    norm([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let r = norm(p);
    [p[0] / r, p[1] / r, p[2] / r]
}
