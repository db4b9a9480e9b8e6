//! Point-cloud CSV files and their JSON manifests.
//!
//! CSV layout: a header `x0,...,x{d-1}` optionally followed by tangent-basis
//! columns `t{j}_{i}` (basis vector `j`, coordinate `i`, vectors in order),
//! then one row per point. Numbers are written with 17 significant digits,
//! which round-trips every `f64` exactly, and always use `.` as the decimal
//! separator.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geodesics::AnalyticGeodesic;
use crate::linalg::Subspace;
use crate::shapes::{GroundTruth, Shape};

/// `x` with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number, or the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(format_f64(x))
    }
}

pub fn parse_json_f64(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse(format!("bad number {n}"))),
        Value::String(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(Error::Parse(format!("expected a number or \"inf\", got \"{other}\""))),
        },
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

pub fn ground_truth_json(g: &GroundTruth) -> Value {
    json!({
        "rch": json_f64(g.rch),
        "rch_loc": json_f64(g.rch_loc),
        "rch_glob": json_f64(g.rch_glob),
        "tangent_variation_sup": json_f64(g.tangent_variation_sup),
    })
}

pub fn parse_ground_truth(v: &Value) -> Result<GroundTruth> {
    let get = |k: &str| {
        v.get(k)
            .ok_or_else(|| Error::Parse(format!("ground truth is missing '{k}'")))
            .and_then(parse_json_f64)
    };
    Ok(GroundTruth {
        rch: get("rch")?,
        rch_loc: get("rch_loc")?,
        rch_glob: get("rch_glob")?,
        tangent_variation_sup: get("tangent_variation_sup")?,
    })
}

pub fn write_csv_string(cloud: &PointCloud) -> String {
    let d = cloud.dim();
    let n = cloud.intrinsic_dim().filter(|_| cloud.has_tangents()).unwrap_or(0);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    for j in 0..n {
        for i in 0..d {
            header.push(format!("t{j}_{i}"));
        }
    }
    w.write_record(&header).expect("writing to memory");
    let mut row = Vec::with_capacity(header.len());
    for p in 0..cloud.len() {
        row.clear();
        row.extend(cloud.point(p).iter().map(|&x| format_f64(x)));
        if n > 0 {
            let t = cloud.tangent(p).expect("tangents present");
            for j in 0..n {
                row.extend(t.basis_vector(j).iter().map(|&x| format_f64(x)));
            }
        }
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("ASCII output")
}

pub fn parse_csv(text: &str) -> Result<PointCloud> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let names: Vec<String> = r
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if names.is_empty() || names == [""] {
        return Err(Error::Parse("empty CSV".into()));
    }
    let d = names.iter().take_while(|c| c.starts_with('x')).count();
    if d == 0 {
        return Err(Error::Parse("header must start with x0".into()));
    }
    for (i, c) in names[..d].iter().enumerate() {
        if *c != format!("x{i}") {
            return Err(Error::Parse(format!("unexpected column '{c}', expected 'x{i}'")));
        }
    }
    let tcols = names.len() - d;
    if tcols % d != 0 {
        return Err(Error::Parse(format!(
            "{tcols} tangent columns is not a multiple of the dimension {d}"
        )));
    }
    let n = tcols / d;
    for j in 0..n {
        for i in 0..d {
            let c = &names[d + j * d + i];
            if *c != format!("t{j}_{i}") {
                return Err(Error::Parse(format!("unexpected column '{c}', expected 't{j}_{i}'")));
            }
        }
    }
    let mut coords = Vec::new();
    let mut frames = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let vals = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number '{f}'", row + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        coords.extend_from_slice(&vals[..d]);
        if n > 0 {
            let basis = DMatrix::from_fn(d, n, |i, j| vals[d + j * d + i]);
            let t = match Subspace::from_orthonormal_columns(basis.clone()) {
                Ok(t) => t,
                Err(_) => {
                    let cols: Vec<Vec<f64>> = (0..n).map(|j| basis.column(j).iter().copied().collect()).collect();
                    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
                    Subspace::span(d, &refs)?
                }
            };
            frames.push(t);
        }
    }
    let cloud = PointCloud::new(d, coords)?;
    if n > 0 {
        cloud.with_tangents(frames)
    } else {
        Ok(cloud)
    }
}

pub fn read_csv(path: &Path) -> Result<PointCloud> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn write_csv(path: &Path, cloud: &PointCloud) -> Result<()> {
    fs::write(path, write_csv_string(cloud))?;
    Ok(())
}

/// How a generated cloud was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeRecord {
    #[serde(flatten)]
    pub shape: Shape,
    pub samples: usize,
    pub seed: u64,
}

/// Sidecar description of a point CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub d: usize,
    pub n: Option<usize>,
    pub count: usize,
    pub has_tangents: bool,
    pub shape: Option<ShapeRecord>,
    pub ground_truth: Option<GroundTruth>,
}

impl Manifest {
    pub fn for_cloud(cloud: &PointCloud) -> Self {
        Self {
            d: cloud.dim(),
            n: cloud.intrinsic_dim(),
            count: cloud.len(),
            has_tangents: cloud.has_tangents(),
            shape: None,
            ground_truth: None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "d": self.d,
            "n": self.n,
            "count": self.count,
            "has_tangents": self.has_tangents,
        });
        if let Some(s) = &self.shape {
            v["shape"] = serde_json::to_value(s).expect("shape records serialize");
        }
        if let Some(g) = &self.ground_truth {
            v["ground_truth"] = ground_truth_json(g);
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let uint = |k: &str| {
            v.get(k)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| Error::Parse(format!("manifest is missing '{k}'")))
        };
        Ok(Self {
            d: uint("d")?,
            n: v.get("n").and_then(Value::as_u64).map(|x| x as usize),
            count: uint("count")?,
            has_tangents: v
                .get("has_tangents")
                .and_then(Value::as_bool)
                .ok_or_else(|| Error::Parse("manifest is missing 'has_tangents'".into()))?,
            shape: match v.get("shape") {
                Some(s) if !s.is_null() => Some(serde_json::from_value(s.clone())?),
                _ => None,
            },
            ground_truth: match v.get("ground_truth") {
                Some(g) if !g.is_null() => Some(parse_ground_truth(g)?),
                _ => None,
            },
        })
    }

    /// Checks that `cloud` matches the recorded dimensions and count.
    pub fn check(&self, cloud: &PointCloud) -> Result<()> {
        if self.d != cloud.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: cloud.dim(),
            });
        }
        if self.count != cloud.len() {
            return Err(Error::Parse(format!(
                "manifest records {} points, file has {}",
                self.count,
                cloud.len()
            )));
        }
        if self.has_tangents != cloud.has_tangents() {
            return Err(Error::Parse("manifest and file disagree on tangent columns".into()));
        }
        Ok(())
    }

    /// Closed-form intrinsic distances for `cloud`, available when the
    /// manifest names a shape that has them and regenerating that shape
    /// reproduces the coordinates bit for bit.
    pub fn analytic_geodesic(&self, cloud: &PointCloud) -> Result<Option<AnalyticGeodesic>> {
        let Some(rec) = &self.shape else {
            return Ok(None);
        };
        let sample = rec.shape.generate(rec.samples, rec.seed)?;
        let same = sample.cloud.dim() == cloud.dim()
            && sample.cloud.coords().len() == cloud.coords().len()
            && sample
                .cloud
                .coords()
                .iter()
                .zip(cloud.coords())
                .all(|(a, b)| a.to_bits() == b.to_bits());
        Ok(if same { sample.geodesic } else { None })
    }
}

/// `circle.csv` -> `circle.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// `circle.csv` -> `circle.ground_truth.json`.
pub fn ground_truth_path(csv: &Path) -> PathBuf {
    csv.with_extension("ground_truth.json")
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    Manifest::from_json(&serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = Shape::Torus { major: 2.0, minor: 0.5 }.generate(50, 3).unwrap();
        let text = write_csv_string(&s.cloud);
        assert!(text.starts_with("x0,x1,x2,t0_0,t0_1,t0_2,t1_0,t1_1,t1_2\n"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.coords(), s.cloud.coords());
        for i in 0..50 {
            assert_eq!(back.tangent(i).unwrap(), s.cloud.tangent(i).unwrap());
        }
        assert_eq!(write_csv_string(&back), text);
    }

    #[test]
    fn awkward_values_round_trip() {
        let vals = vec![0.1, -1e-300, 5e-324, 1.0 / 3.0, f64::MAX, -0.0];
        let c = PointCloud::new(1, vals.clone()).unwrap();
        let back = parse_csv(&write_csv_string(&c)).unwrap();
        for (a, b) in back.coords().iter().zip(&vals) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_csv() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("y0\n1\n").is_err());
        assert!(parse_csv("x0,x1\n1,2,3\n").is_err());
        assert!(parse_csv("x0,x1\n1,abc\n").is_err());
        assert!(parse_csv("x0,x1,t0_0\n1,2,3\n").is_err());
        assert!(parse_csv("x0,x1\n1,2\n").unwrap().len() == 1);
    }

    #[test]
    fn manifest_round_trip() {
        let shape = Shape::FilletProfile {
            rho: 0.4,
            leg: 2.0,
            angle: std::f64::consts::FRAC_PI_2,
        };
        let s = shape.generate(10, 0).unwrap();
        let mut m = Manifest::for_cloud(&s.cloud);
        m.shape = Some(ShapeRecord {
            shape,
            samples: 10,
            seed: 0,
        });
        m.ground_truth = Some(s.ground_truth);
        let v = m.to_json();
        assert_eq!(v["ground_truth"]["rch_glob"], "inf");
        assert_eq!(v["shape"]["kind"], "fillet_profile");
        assert_eq!(v["n"], 1);
        assert_eq!(Manifest::from_json(&v).unwrap(), m);
        m.check(&s.cloud).unwrap();
    }

    #[test]
    fn analytic_geodesic_needs_identical_coordinates() {
        let shape = Shape::Circle { radius: 1.0 };
        let s = shape.generate(16, 2).unwrap();
        let mut m = Manifest::for_cloud(&s.cloud);
        assert_eq!(m.analytic_geodesic(&s.cloud).unwrap(), None);
        m.shape = Some(ShapeRecord {
            shape,
            samples: 16,
            seed: 2,
        });
        assert_eq!(m.analytic_geodesic(&s.cloud).unwrap(), s.geodesic);
        assert_eq!(m.analytic_geodesic(&s.cloud.scaled(1.5)).unwrap(), None);
    }
}
