//! JSON instance files (schema version 1) and CSV point lists.
//!
//! ```json
//! {"v": 1, "dim": 2, "norm": {"lp": 2}, "foci": [[0, 0]], "foci_weights": [1],
//!  "demand": [[0, 0], [2, 0]], "lambda": [1], "candidates": [[1, 1]]}
//! ```
//!
//! `demand` may also be a path to a CSV file, resolved against the JSON
//! file's directory. Norms are `{"lp": p}` with `p` a number or `"inf"`, or
//! `{"block": [[...], ...]}` listing unit-ball extreme points (antipodes are
//! implied), optionally with `"polar"` extremes outside the plane.

use crate::error::{CliError, Result};
use polyellipse::norms::NormKind;
use polyellipse::{Instance, NormSpec, OrderedSpec, PointSet};
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

pub const SCHEMA_VERSION: u64 = 1;
const WEIGHT_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub dim: usize,
    pub norm: NormSpec,
    pub foci: Option<PointSet>,
    pub foci_weights: Option<Vec<f64>>,
    pub demand: PointSet,
    pub lambda: Option<Vec<f64>>,
    pub candidates: Option<PointSet>,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    /// Parses JSON text; CSV references resolve against `base`.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Input("instance must be a JSON object".into()))?;
        const KNOWN: [&str; 8] = ["v", "dim", "norm", "foci", "foci_weights", "demand", "lambda", "candidates"];
        if let Some(unknown) = obj.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(CliError::field(unknown.as_str(), "unknown field"));
        }
        match required(obj, "v")?.as_u64() {
            Some(SCHEMA_VERSION) => {}
            _ => return Err(CliError::field("v", format!("unsupported schema version, expected {SCHEMA_VERSION}"))),
        }
        let dim = required(obj, "dim")?
            .as_u64()
            .filter(|&d| d >= 1)
            .ok_or_else(|| CliError::field("dim", "must be a positive integer"))? as usize;
        let norm = parse_norm_value(required(obj, "norm")?, dim)?;
        let foci = obj.get("foci").map(|v| parse_points(v, "foci", dim)).transpose()?;
        let foci_weights = obj
            .get("foci_weights")
            .map(|v| parse_numbers(v, "foci_weights"))
            .transpose()?;
        let demand = match required(obj, "demand")? {
            Value::String(p) => {
                let path = base.map(|b| b.join(p)).unwrap_or_else(|| p.into());
                read_points_csv(&path, dim).map_err(|e| CliError::field("demand", e.to_string()))?
            }
            v => parse_points(v, "demand", dim)?,
        };
        let lambda = obj.get("lambda").map(|v| parse_numbers(v, "lambda")).transpose()?;
        let candidates = obj
            .get("candidates")
            .map(|v| parse_points(v, "candidates", dim))
            .transpose()?;
        let file = Self {
            dim,
            norm,
            foci,
            foci_weights,
            demand,
            lambda,
            candidates,
        };
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        if self.demand.is_empty() {
            return Err(CliError::field("demand", "must contain at least one point"));
        }
        if let Some(w) = &self.foci_weights {
            let k = self.foci.as_ref().map(PointSet::len);
            if k.is_some_and(|k| k != w.len()) {
                return Err(CliError::field(
                    "foci_weights",
                    format!("{} weights for {} foci", w.len(), k.unwrap_or(0)),
                ));
            }
            if let Some(bad) = w.iter().find(|x| !(**x > 0.0)) {
                return Err(CliError::field("foci_weights", format!("weights must be positive, found {bad}")));
            }
            let sum: f64 = w.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(CliError::field("foci_weights", format!("weights sum to {sum}, expected 1")));
            }
        }
        if let Some(foci) = &self.foci {
            if foci.is_empty() {
                return Err(CliError::field("foci", "must contain at least one point"));
            }
        }
        if let Some(l) = &self.lambda {
            OrderedSpec::new(l.clone()).map_err(|e| CliError::field("lambda", e.to_string()))?;
        }
        Ok(())
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self {
            dim: inst.dim(),
            norm: inst.norm().clone(),
            foci: Some(inst.foci().clone()),
            foci_weights: Some(inst.weights().to_vec()),
            demand: inst.demand().clone(),
            lambda: None,
            candidates: None,
        }
    }

    /// The covering instance; weights default to `1/k`.
    pub fn instance(&self) -> Result<Instance> {
        let foci = self
            .foci
            .clone()
            .ok_or_else(|| CliError::field("foci", "missing"))?;
        let k = foci.len();
        let weights = self.foci_weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
        Instance::new(self.demand.clone(), foci, weights, self.norm.clone())
            .map_err(|e| CliError::Input(format!("invalid instance: {e}")))
    }

    pub fn ordered_spec(&self) -> Result<Option<OrderedSpec>> {
        self.lambda
            .as_ref()
            .map(|l| OrderedSpec::new(l.clone()).map_err(|e| CliError::field("lambda", e.to_string())))
            .transpose()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            v: u64,
            dim: usize,
            norm: Value,
            #[serde(skip_serializing_if = "Option::is_none")]
            foci: Option<Vec<Vec<f64>>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            foci_weights: Option<&'a [f64]>,
            demand: Vec<Vec<f64>>,
            #[serde(skip_serializing_if = "Option::is_none")]
            lambda: Option<&'a [f64]>,
            #[serde(skip_serializing_if = "Option::is_none")]
            candidates: Option<Vec<Vec<f64>>>,
        }
        let out = Out {
            v: SCHEMA_VERSION,
            dim: self.dim,
            norm: norm_to_json(&self.norm),
            foci: self.foci.as_ref().map(PointSet::to_rows),
            foci_weights: self.foci_weights.as_deref(),
            demand: self.demand.to_rows(),
            lambda: self.lambda.as_deref(),
            candidates: self.candidates.as_ref().map(PointSet::to_rows),
        };
        let mut text = serde_json::to_string_pretty(&out).expect("instance serializes");
        text.push('\n');
        text
    }
}

fn required<'a>(obj: &'a Map<String, Value>, field: &str) -> Result<&'a Value> {
    obj.get(field).ok_or_else(|| CliError::field(field, "missing"))
}

fn parse_numbers(v: &Value, field: &str) -> Result<Vec<f64>> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::field(field, "must be an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::field(format!("{field}[{i}]"), "must be a finite number"))
        })
        .collect()
}

fn parse_points(v: &Value, field: &str, dim: usize) -> Result<PointSet> {
    let rows = v
        .as_array()
        .ok_or_else(|| CliError::field(field, "must be an array of points"))?;
    let mut data = Vec::with_capacity(rows.len() * dim);
    for (i, row) in rows.iter().enumerate() {
        let name = format!("{field}[{i}]");
        let coords = parse_numbers(row, &name)?;
        if coords.len() != dim {
            return Err(CliError::field(name, format!("has {} coordinates, expected {dim}", coords.len())));
        }
        data.extend(coords);
    }
    PointSet::new(dim, data).map_err(|e| CliError::field(field, e.to_string()))
}

fn parse_norm_value(v: &Value, dim: usize) -> Result<NormSpec> {
    let obj = v
        .as_object()
        .ok_or_else(|| CliError::field("norm", "must be an object such as {\"lp\": 2}"))?;
    let bad = |e: polyellipse::Error| CliError::field("norm", e.to_string());
    let norm = if let Some(p) = obj.get("lp") {
        let p = match p {
            Value::String(s) if s == "inf" => f64::INFINITY,
            other => other
                .as_f64()
                .ok_or_else(|| CliError::field("norm.lp", "must be a number ≥ 1 or \"inf\""))?,
        };
        NormSpec::lp(p).map_err(bad)?
    } else if let Some(ball) = obj.get("block") {
        let ball = parse_points(ball, "norm.block", dim)?.to_rows();
        match obj.get("polar") {
            Some(polar) => {
                let polar = parse_points(polar, "norm.polar", dim)?.to_rows();
                NormSpec::block_with_polar(&ball, &polar).map_err(bad)?
            }
            None => NormSpec::block(&ball).map_err(bad)?,
        }
    } else {
        return Err(CliError::field("norm", "expected an \"lp\" or \"block\" entry"));
    };
    norm.check_dim(dim).map_err(bad)?;
    Ok(norm)
}

pub fn norm_to_json(norm: &NormSpec) -> Value {
    match norm.kind() {
        NormKind::Lp { p } if p.is_infinite() => serde_json::json!({ "lp": "inf" }),
        NormKind::Lp { p } => serde_json::json!({ "lp": p }),
        NormKind::Block(b) if b.dim() == 2 => serde_json::json!({ "block": b.ball_extremes() }),
        NormKind::Block(b) => serde_json::json!({ "block": b.ball_extremes(), "polar": b.polar_extremes() }),
    }
}

/// Norm names accepted on the command line: `l1`, `l2`, `linf`, `l<p>` such
/// as `l1.5`, and `hex`.
pub fn parse_norm_flag(s: &str) -> Result<NormSpec> {
    let bad = || CliError::field("--norm", format!("unknown norm `{s}`, expected l1, l2, linf, l<p> or hex"));
    match s {
        "hex" => Ok(NormSpec::hex()),
        "linf" => Ok(NormSpec::linf()),
        _ => {
            let p: f64 = s.strip_prefix('l').ok_or_else(bad)?.parse().map_err(|_| bad())?;
            NormSpec::lp(p).map_err(|e| CliError::field("--norm", e.to_string()))
        }
    }
}

/// Points from a CSV file, one per row. A first row that is not numeric is
/// taken as a header.
pub fn read_points_csv(path: &Path, dim: usize) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(_) => return Err(CliError::Input(format!("{}: row {} is not numeric", path.display(), i + 1))),
        };
        if row.len() != dim {
            return Err(CliError::Input(format!(
                "{}: row {} has {} values, expected {dim}",
                path.display(),
                i + 1,
                row.len()
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Input(format!("{}: row {} is not finite", path.display(), i + 1)));
        }
        data.extend(row);
    }
    PointSet::new(dim, data).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
