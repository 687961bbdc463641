//! TOML manifests describing manifolds and maps.
//!
//! ```toml
//! [options]
//! tol = 1e-9
//! seed = 7
//!
//! [manifold.heisenberg1]
//! coordinates = ["x", "y", "t"]
//! frame = [["1", "0", "2*y"], ["0", "1", "-2*x"]]
//! metric = [[1, 0], [0, 1]]          # optional, identity by default
//! points = [["0", "0", "0"], ["1", "-1/2", "3"]]
//!
//! [map.dilation2]
//! source = "heisenberg1"
//! target = "heisenberg1"
//! components = ["2*x", "2*y", "4*t"]
//! points = [["1", "1", "0"]]         # optional, source points by default
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use popp_core::exactalg::{parse_rational, poly_parse, Polynomial, Rational};
use popp_core::maps::MapSpec;
use popp_core::srmanifold::ManifoldSpec;
use serde::Deserialize;
use thiserror::Error;

pub const BUNDLED: &str = include_str!("../manifests/bundled.toml");
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {message}")]
    Io { path: String, message: String },
    #[error("{origin}:{line}:{column}: {message}")]
    Syntax { origin: String, line: usize, column: usize, message: String },
    #[error("{origin}: {kind} '{name}'{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid { origin: String, kind: &'static str, name: String, line: Option<usize>, reason: String },
    #[error("{origin}: map '{map}' refers to undefined manifold '{reference}'")]
    Unresolved { origin: String, map: String, reference: String },
    #[error("no {kind} named '{name}' (available: {})", available.join(", "))]
    UnknownName { kind: &'static str, name: String, available: Vec<String> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Str(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Int(i) => i.to_string(),
            Scalar::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    coordinates: Vec<String>,
    frame: Vec<Vec<Scalar>>,
    metric: Option<Vec<Vec<Scalar>>>,
    points: Vec<Vec<Scalar>>,
    max_step: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    source: String,
    target: String,
    components: Vec<Scalar>,
    points: Option<Vec<Vec<Scalar>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    #[serde(default)]
    options: RawOptions,
    #[serde(default)]
    manifold: BTreeMap<String, RawManifold>,
    #[serde(default)]
    map: BTreeMap<String, RawMap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    pub tol: f64,
    pub seed: Option<u64>,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct MapEntry {
    pub spec: MapSpec,
    pub points: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug)]
pub struct Manifest {
    pub origin: String,
    pub options: Options,
    manifolds: BTreeMap<String, Arc<ManifoldSpec>>,
    maps: BTreeMap<String, MapEntry>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn header_line(text: &str, kind: &str, name: &str) -> Option<usize> {
    let plain = format!("[{kind}.{name}]");
    let quoted = format!("[{kind}.\"{name}\"]");
    text.lines()
        .position(|l| {
            let l = l.trim();
            l == plain || l == quoted
        })
        .map(|i| i + 1)
}

fn parse_points(raw: &[Vec<Scalar>], dim: usize) -> Result<Vec<Vec<Rational>>, String> {
    raw.iter()
        .enumerate()
        .map(|(i, p)| {
            if p.len() != dim {
                return Err(format!("point {} has {} coordinates, expected {dim}", i + 1, p.len()));
            }
            p.iter()
                .map(|c| {
                    let t = c.text();
                    parse_rational(t.trim()).ok_or_else(|| format!("point {}: '{t}' is not a rational number", i + 1))
                })
                .collect()
        })
        .collect()
}

fn parse_polys(raw: &[Scalar], coords: &[String], what: &str) -> Result<Vec<Polynomial>, String> {
    raw.iter().enumerate().map(|(j, s)| poly_parse(&s.text(), coords).map_err(|e| format!("{what}[{}]: {e}", j + 1))).collect()
}

fn build_manifold(name: &str, raw: &RawManifold) -> Result<ManifoldSpec, String> {
    let coords = &raw.coordinates;
    let frame = raw
        .frame
        .iter()
        .enumerate()
        .map(|(i, row)| parse_polys(row, coords, &format!("frame[{}]", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let metric = raw
        .metric
        .as_ref()
        .map(|m| {
            m.iter().enumerate().map(|(i, row)| parse_polys(row, coords, &format!("metric[{}]", i + 1))).collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    if raw.points.is_empty() {
        return Err("at least one sample point is required".into());
    }
    let points = parse_points(&raw.points, coords.len())?;
    let spec = ManifoldSpec::new(name, coords.clone(), frame, metric, points).map_err(|e| e.to_string())?;
    Ok(match raw.max_step {
        Some(m) => spec.with_max_step(m),
        None => spec,
    })
}

impl Manifest {
    pub fn parse_str(text: &str, origin: &str) -> Result<Self, ManifestError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
            ManifestError::Syntax { origin: origin.into(), line, column, message: e.message().trim().to_string() }
        })?;
        let invalid = |kind: &'static str, name: &str, reason: String| ManifestError::Invalid {
            origin: origin.into(),
            kind,
            name: name.into(),
            line: header_line(text, kind, name),
            reason,
        };
        let tol = raw.options.tol.unwrap_or(DEFAULT_TOL);
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(invalid("options", "tol", format!("tolerance must be a nonnegative number, got {tol}")));
        }
        let options = Options { tol, seed: raw.options.seed, samples: raw.options.samples.unwrap_or(DEFAULT_SAMPLES) };

        let mut manifolds = BTreeMap::new();
        for (name, m) in &raw.manifold {
            let spec = build_manifold(name, m).map_err(|r| invalid("manifold", name, r))?;
            manifolds.insert(name.clone(), Arc::new(spec));
        }
        let mut maps = BTreeMap::new();
        for (name, m) in &raw.map {
            let resolve = |r: &str| {
                manifolds.get(r).cloned().ok_or_else(|| ManifestError::Unresolved {
                    origin: origin.into(),
                    map: name.clone(),
                    reference: r.into(),
                })
            };
            let (source, target) = (resolve(&m.source)?, resolve(&m.target)?);
            let comps = parse_polys(&m.components, source.coordinates(), "components").map_err(|r| invalid("map", name, r))?;
            let spec = MapSpec::new(name, source.clone(), target, comps).map_err(|e| invalid("map", name, e.to_string()))?;
            let points = match &m.points {
                Some(p) => parse_points(p, source.dim()).map_err(|r| invalid("map", name, r))?,
                None => source.sample_points().to_vec(),
            };
            if points.is_empty() {
                return Err(invalid("map", name, "no evaluation points".into()));
            }
            maps.insert(name.clone(), MapEntry { spec, points });
        }
        Ok(Self { origin: origin.into(), options, manifolds, maps })
    }

    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ManifestError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn bundled() -> Self {
        Self::parse_str(BUNDLED, "bundled.toml").expect("bundled manifest is valid")
    }

    pub fn manifold(&self, name: &str) -> Result<&Arc<ManifoldSpec>, ManifestError> {
        self.manifolds.get(name).ok_or_else(|| ManifestError::UnknownName {
            kind: "manifold",
            name: name.into(),
            available: self.manifolds.keys().cloned().collect(),
        })
    }

    pub fn map(&self, name: &str) -> Result<&MapEntry, ManifestError> {
        self.maps.get(name).ok_or_else(|| ManifestError::UnknownName {
            kind: "map",
            name: name.into(),
            available: self.maps.keys().cloned().collect(),
        })
    }

    pub fn manifolds(&self) -> impl Iterator<Item = (&String, &Arc<ManifoldSpec>)> {
        self.manifolds.iter()
    }

    pub fn maps(&self) -> impl Iterator<Item = (&String, &MapEntry)> {
        self.maps.iter()
    }
}

/// Parses `"1,0;0,4"` into rows of rationals.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<Rational>>, String> {
    s.split(';')
        .map(|row| {
            row.split(',').map(|e| parse_rational(e.trim()).ok_or_else(|| format!("'{}' is not a rational number", e.trim()))).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
[manifold.h]
coordinates = ["x", "y", "t"]
frame = [["1", "0", "2*y"], ["0", "1", "-2*x"]]
points = [["0", "0", "0"], [1, "1/2", "-3"]]

[map.d]
source = "h"
target = "h"
components = ["2*x", "2*y", "4*t"]
"#;

    #[test]
    fn parses_small_manifest() {
        let m = Manifest::parse_str(SMALL, "small.toml").unwrap();
        let h = m.manifold("h").unwrap();
        assert_eq!(h.dim(), 3);
        assert_eq!(h.sample_points().len(), 2);
        assert_eq!(m.map("d").unwrap().points.len(), 2);
        assert_eq!(m.options.tol, DEFAULT_TOL);
    }

    #[test]
    fn syntax_error_has_position() {
        let err = Manifest::parse_str("[manifold.h]\ncoordinates = [\"x\"\nframe = 3\n", "bad.toml").unwrap_err();
        match err {
            ManifestError::Syntax { line, .. } => assert!(line >= 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn indefinite_metric_rejected() {
        let text = SMALL.replace("points = [[\"0\"", "metric = [[1, 2], [2, 1]]\npoints = [[\"0\"");
        let err = Manifest::parse_str(&text, "m.toml").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, ManifestError::Invalid { kind: "manifold", .. }), "{msg}");
        assert!(msg.contains("'h'") && msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn unresolved_reference() {
        let text = SMALL.replace("target = \"h\"", "target = \"nowhere\"");
        let err = Manifest::parse_str(&text, "m.toml").unwrap_err();
        assert_eq!(err, ManifestError::Unresolved { origin: "m.toml".into(), map: "d".into(), reference: "nowhere".into() });
    }

    #[test]
    fn bad_polynomial_names_spec() {
        let text = SMALL.replace("\"-2*x\"", "\"-2*z\"");
        let msg = Manifest::parse_str(&text, "m.toml").unwrap_err().to_string();
        assert!(msg.contains("manifold 'h'") && msg.contains("frame[2][3]") && msg.contains("'z'"), "{msg}");
    }

    #[test]
    fn bundled_is_valid() {
        let m = Manifest::bundled();
        for name in ["heisenberg1", "heisenberg2", "engel", "riemann2", "grushin-negative"] {
            assert!(m.manifold(name).is_ok(), "{name}");
        }
        assert!(m.manifold("nope").unwrap_err().to_string().contains("heisenberg1"));
    }

    #[test]
    fn matrix_syntax() {
        assert_eq!(parse_matrix("1,0;0,4").unwrap()[1][1], Rational::from_integer(4.into()));
        assert!(parse_matrix("1,a").is_err());
    }
}
