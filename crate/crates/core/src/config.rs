//! Flat `key = value` run configuration with command-line overrides, plus
//! the small grammars for mesh sources and per-vertex fields.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{generate_flat_torus, generate_icosphere, load_off, TriMesh};
use crate::metric::{base_metric, ConformalMetric};

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    /// Directory that relative paths in this value resolve against.
    base: PathBuf,
}

/// Parsed configuration. Every key must be read by the command, so typos
/// surface as errors instead of silently falling back to defaults.
#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

impl Config {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("expected key = value, got {line:?}"),
                });
            };
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("invalid key {key:?}"),
                });
            }
            let entry = Entry {
                value: value.trim().to_string(),
                base: base.clone(),
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: format!("duplicate key {key:?}"),
                });
            }
        }
        Ok(Config {
            entries,
            used: RefCell::default(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        Config::parse(&text, path)
    }

    /// Command-line value, replacing any file value. Relative paths resolve
    /// against the working directory.
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                base: PathBuf::new(),
            },
        );
    }

    fn entry(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.get(key);
        if e.is_some() {
            self.used.borrow_mut().insert(key.to_string());
        }
        e
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entry(key).map(|e| e.value.as_str())
    }

    pub fn require_str(&self, key: &str) -> Result<&str> {
        self.get_str(key)
            .ok_or_else(|| Error::invalid(format!("missing required key {key:?}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::invalid(format!("cannot parse {key} = {v:?}"))),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool> {
        match self.get_str(key) {
            None | Some("false") | Some("0") | Some("no") => Ok(false),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some(v) => Err(Error::invalid(format!("{key} must be true or false, got {v:?}"))),
        }
    }

    /// Comma-separated list of numbers.
    pub fn get_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get_str(key) else { return Ok(None) };
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("cannot parse {key} entry {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    pub fn get_path(&self, key: &str, value: &str) -> PathBuf {
        let base = self.entries.get(key).map(|e| e.base.clone()).unwrap_or_default();
        base.join(value)
    }

    /// Keys with a prefix such as `probe.`, in sorted order.
    pub fn keys_with_prefix(&self, prefix: &str) -> Vec<String> {
        self.entries
            .keys()
            .filter(|k| k.starts_with(prefix))
            .cloned()
            .collect()
    }

    /// Fails on any key the command did not read.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unused: Vec<&str> = self
            .entries
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(Error::invalid(format!("unknown configuration keys: {}", unused.join(", "))))
        }
    }
}

/// Where a mesh comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Off(PathBuf),
    Icosphere(u32),
    Torus { m: usize, n: usize, aspect: f64 },
}

impl MeshSource {
    /// `mesh = icosphere <k> | torus <m> <n> [aspect] | off <path>`.
    pub fn from_config(config: &Config) -> Result<Self> {
        let spec = config.require_str("mesh")?;
        let words: Vec<&str> = spec.split_whitespace().collect();
        let num = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::invalid(format!("mesh: cannot parse {s:?} as a count")))
        };
        match words.as_slice() {
            ["icosphere", k] => Ok(MeshSource::Icosphere(num(k)? as u32)),
            ["torus", m, n] => Ok(MeshSource::Torus { m: num(m)?, n: num(n)?, aspect: 1.0 }),
            ["torus", m, n, a] => Ok(MeshSource::Torus {
                m: num(m)?,
                n: num(n)?,
                aspect: a
                    .parse()
                    .map_err(|_| Error::invalid(format!("mesh: cannot parse aspect {a:?}")))?,
            }),
            ["off", _, ..] => {
                let raw = spec["off".len()..].trim();
                Ok(MeshSource::Off(config.get_path("mesh", raw)))
            }
            _ => Err(Error::invalid(format!(
                "mesh must be 'icosphere <k>', 'torus <m> <n> [aspect]' or 'off <path>', got {spec:?}"
            ))),
        }
    }

    pub fn build(&self) -> Result<TriMesh> {
        match self {
            MeshSource::Off(p) => load_off(p),
            MeshSource::Icosphere(k) => generate_icosphere(*k),
            MeshSource::Torus { m, n, aspect } => generate_flat_torus(*m, *n, *aspect),
        }
    }

    /// The next finer mesh of the same family, if there is one.
    pub fn refined(&self) -> Option<MeshSource> {
        match self {
            MeshSource::Icosphere(k) => Some(MeshSource::Icosphere(k + 1)),
            MeshSource::Torus { m, n, aspect } => Some(MeshSource::Torus { m: 2 * m, n: 2 * n, aspect: *aspect }),
            MeshSource::Off(_) => None,
        }
    }
}

/// Mesh source plus the `radius` key (default 1), which scales the base
/// metric by a constant conformal factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSetup {
    pub source: MeshSource,
    pub radius: f64,
}

impl MeshSetup {
    pub fn from_config(config: &Config) -> Result<Self> {
        let source = MeshSource::from_config(config)?;
        let radius: f64 = config.get_or("radius", 1.0)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        Ok(MeshSetup { source, radius })
    }

    pub fn metric(&self) -> Result<ConformalMetric> {
        metric_of(&self.source, self.radius)
    }
}

pub fn metric_of(source: &MeshSource, radius: f64) -> Result<ConformalMetric> {
    let metric = base_metric(Arc::new(source.build()?))?;
    if radius == 1.0 {
        return Ok(metric);
    }
    metric.with_u(vec![radius.ln(); metric.num_vertices()])
}

/// A per-vertex field described by a short expression.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    /// `const <c>`
    Constant(f64),
    /// `x|y|z <a>`: `a` times a coordinate; on a flat torus `x`, `y` are the
    /// fundamental-domain coordinates.
    Coordinate(usize, f64),
    /// `bump <a> <w>`: `a·exp(−d²/w²)` with `d` the distance to the vertex of
    /// largest `z`.
    Bump(f64, f64),
    /// `wave <a> <k>`: `a·sin(2πk x/L)` on a flat torus of width `L`.
    Wave(f64, f64),
    /// `file <path>`: CSV `vertex_index,value`.
    File(PathBuf),
}

impl FieldSpec {
    pub fn parse(config: &Config, key: &str, text: &str) -> Result<Self> {
        let words: Vec<&str> = text.split_whitespace().collect();
        let f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::invalid(format!("{key}: cannot parse {s:?} as a number")))
        };
        match words.as_slice() {
            ["const", c] => Ok(FieldSpec::Constant(f(c)?)),
            ["x", a] => Ok(FieldSpec::Coordinate(0, f(a)?)),
            ["y", a] => Ok(FieldSpec::Coordinate(1, f(a)?)),
            ["z", a] => Ok(FieldSpec::Coordinate(2, f(a)?)),
            ["bump", a, w] => Ok(FieldSpec::Bump(f(a)?, f(w)?)),
            ["wave", a, k] => Ok(FieldSpec::Wave(f(a)?, f(k)?)),
            ["file", _, ..] => Ok(FieldSpec::File(config.get_path(key, text["file".len()..].trim()))),
            _ => Err(Error::invalid(format!(
                "{key}: expected 'const c', 'x|y|z a', 'bump a w', 'wave a k' or 'file path', got {text:?}"
            ))),
        }
    }

    /// Reads `key` if present.
    pub fn from_config(config: &Config, key: &str) -> Result<Option<Self>> {
        match config.get_str(key) {
            None => Ok(None),
            Some(text) => FieldSpec::parse(config, key, text).map(Some),
        }
    }

    pub fn evaluate(&self, mesh: &TriMesh) -> Result<Vec<f64>> {
        let n = mesh.num_vertices();
        let values = match self {
            FieldSpec::Constant(c) => vec![*c; n],
            FieldSpec::Coordinate(axis, a) => match mesh.quotient_coords() {
                Some(q) if *axis < 2 => q.iter().map(|p| a * p[*axis]).collect(),
                Some(_) => return Err(Error::invalid("a flat torus has no z coordinate")),
                None => mesh.vertices().iter().map(|p| a * p[*axis]).collect(),
            },
            FieldSpec::Bump(a, w) => {
                if !(w.is_finite() && *w > 0.0) {
                    return Err(Error::invalid(format!("bump width must be positive, got {w}")));
                }
                let v = mesh.vertices();
                let top = (0..n).max_by(|&i, &j| v[i][2].total_cmp(&v[j][2])).unwrap_or(0);
                v.iter()
                    .map(|p| {
                        let d2: f64 = (0..3).map(|k| (p[k] - v[top][k]).powi(2)).sum();
                        a * (-d2 / (w * w)).exp()
                    })
                    .collect()
            }
            FieldSpec::Wave(a, k) => {
                let q = mesh
                    .quotient_coords()
                    .ok_or_else(|| Error::invalid("wave fields need a flat torus"))?;
                // Grid columns sit at x = width·i/m, so the widest one is width·(m−1)/m.
                let columns = q.iter().filter(|p| p[1] == 0.0).count() as f64;
                let last = q.iter().fold(0.0f64, |m, p| m.max(p[0]));
                let period = last * columns / (columns - 1.0);
                q.iter().map(|p| a * (TAU * k * p[0] / period).sin()).collect()
            }
            FieldSpec::File(path) => read_vertex_csv(path, n)?,
        };
        Ok(values)
    }
}

/// Reads a `vertex_index,value` CSV covering every vertex once.
pub fn read_vertex_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let text = crate::io::read_text(path)?;
    let mut values = vec![f64::NAN; n];
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("vertex_index")) {
            continue;
        }
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| parse_err(i + 1, format!("expected index,value, got {line:?}")))?;
        let idx: usize = idx
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad vertex index {idx:?}")))?;
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| parse_err(i + 1, format!("bad value {val:?}")))?;
        if idx >= n {
            return Err(parse_err(i + 1, format!("vertex index {idx} out of range for {n} vertices")));
        }
        values[idx] = val;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::invalid(format!("{} has no value for vertex {i}", path.display())));
    }
    Ok(values)
}
