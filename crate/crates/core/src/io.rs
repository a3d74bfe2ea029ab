//! File formats.
//!
//! Distributions (JSON):
//!
//! ```json
//! {"points": [1, 2, 3], "mu_weights": [1, 1, 1], "p": [0.2, 0.3, 0.5]}
//! ```
//!
//! `points` defaults to the labels `"0"`, `"1"`, …; `mu_weights` defaults to
//! the counting measure. CSV input uses the columns `point`, `mu_weight`
//! (optional) and `p`. Constraint sets:
//!
//! ```json
//! {"equalities": [{"statistic": [1, 2, 3], "target": 2.4}],
//!  "inequalities": [{"statistic": [1, 0, 0], "bound": 0.5}],
//!  "zero_support": [0]}
//! ```
//!
//! Floats are written in shortest round-trip form, so a density written
//! and read back is reproduced exactly.

use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::campaign::ReportFloat;
use crate::measures::{Density, Point, WeightedSpace};
use crate::projection::{ConstraintSet, LinearConstraint, ProjectionResult, RestartTrace};
use crate::{Error, Result};

fn parse_error(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { field: field.into(), message: message.into() }
}

/// Deserializes JSON, naming the offending field on failure.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "<document>".to_string() } else { path };
        parse_error(field, e.inner().to_string())
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| parse_error(path.display().to_string(), e.to_string()))
}

/// On-disk shape of a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_weights: Option<Vec<f64>>,
    pub p: Vec<f64>,
}

impl DistributionFile {
    pub fn from_density(d: &Density) -> Self {
        Self {
            points: Some(d.space().points().to_vec()),
            mu_weights: Some(d.weights().to_vec()),
            p: d.values().to_vec(),
        }
    }

    /// Validates into a probability density, reporting the offending field.
    pub fn into_density(self) -> Result<Density> {
        let n = self.p.len();
        if n == 0 {
            return Err(parse_error("p", "must contain at least one value"));
        }
        let points = match self.points {
            Some(points) => {
                if points.len() != n {
                    return Err(parse_error(
                        "points",
                        format!("expected {n} entries to match p, got {}", points.len()),
                    ));
                }
                points
            }
            None => (0..n).map(|i| Point::Label(i.to_string())).collect(),
        };
        let weights = self.mu_weights.unwrap_or_else(|| vec![1.0; n]);
        if weights.len() != n {
            return Err(parse_error("mu_weights", format!("expected {n} entries to match p, got {}", weights.len())));
        }
        let space = WeightedSpace::new(points, weights).map_err(|e| match e {
            Error::NonFinite { index } | Error::NonPositiveWeight { index, .. } => {
                parse_error(format!("mu_weights[{index}]"), e.to_string())
            }
            Error::DuplicateLabel { index } => parse_error(format!("points[{index}]"), e.to_string()),
            other => parse_error("points", other.to_string()),
        })?;
        Density::probability(Arc::new(space), self.p).map_err(|e| match e {
            Error::NonFinite { index } | Error::NegativeValue { index, .. } => {
                parse_error(format!("p[{index}]"), e.to_string())
            }
            other => parse_error("p", other.to_string()),
        })
    }
}

/// Reads a distribution from JSON, or from CSV when the extension is `.csv`.
pub fn read_distribution(path: &Path) -> Result<Density> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_distribution_csv(&text)
    } else {
        parse_distribution_json(&text)
    }
}

pub fn parse_distribution_json(text: &str) -> Result<Density> {
    from_json::<DistributionFile>(text)?.into_density()
}

fn parse_point(s: &str) -> Point {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Point::Scalar(x),
        _ => Point::Label(s.trim().to_string()),
    }
}

fn parse_number(s: &str, field: String) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| parse_error(field.clone(), format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(field, format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// CSV with a header row naming `point`, `p` and optionally `mu_weight`.
pub fn parse_distribution_csv(text: &str) -> Result<Density> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| parse_error("header", e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for h in headers.iter() {
        if !matches!(h, "point" | "mu_weight" | "p") {
            return Err(parse_error(h, "unknown column"));
        }
    }
    let p_col = col("p").ok_or_else(|| parse_error("p", "missing column"))?;
    let point_col = col("point");
    let w_col = col("mu_weight");
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut p = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_error(format!("row {}", row + 1), e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        p.push(parse_number(field(p_col), format!("p[{row}]"))?);
        if let Some(c) = point_col {
            points.push(parse_point(field(c)));
        }
        if let Some(c) = w_col {
            weights.push(parse_number(field(c), format!("mu_weights[{row}]"))?);
        }
    }
    DistributionFile { points: point_col.map(|_| points), mu_weights: w_col.map(|_| weights), p }.into_density()
}

/// Pretty JSON for a density in the distribution format.
pub fn distribution_to_json(d: &Density) -> String {
    serde_json::to_string_pretty(&DistributionFile::from_density(d)).expect("finite floats serialize")
}

/// CSV series `point, mu_weight, p` (or `x1, …, xn, mu_weight, p` for
/// coordinate points), for plotting.
pub fn distribution_to_csv(d: &Density) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let dim = d.space().points().first().and_then(|p| match p {
        Point::Coords(v) => Some(v.len()),
        _ => None,
    });
    let mut header: Vec<String> = match dim {
        Some(k) => (1..=k).map(|i| format!("x{i}")).collect(),
        None => vec!["point".into()],
    };
    header.extend(["mu_weight".into(), "p".into()]);
    w.write_record(&header).expect("in-memory write");
    for ((pt, mu), p) in d.space().points().iter().zip(d.weights()).zip(d.values()) {
        let mut row: Vec<String> = match pt {
            Point::Scalar(x) => vec![x.to_string()],
            Point::Coords(v) => v.iter().map(f64::to_string).collect(),
            Point::Label(s) => vec![s.clone()],
        };
        row.extend([mu.to_string(), p.to_string()]);
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// A `zero_support` entry: an atom index or a point label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AtomRef {
    Index(usize),
    Label(String),
}

/// On-disk shape of a constraint set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsFile {
    #[serde(default)]
    pub equalities: Vec<LinearConstraint>,
    #[serde(default)]
    pub inequalities: Vec<LinearConstraint>,
    #[serde(default)]
    pub zero_support: Vec<AtomRef>,
}

impl ConstraintsFile {
    pub fn into_constraint_set(self, space: Arc<WeightedSpace>) -> Result<ConstraintSet> {
        let n = space.len();
        for (kind, list) in [("equalities", &self.equalities), ("inequalities", &self.inequalities)] {
            for (i, c) in list.iter().enumerate() {
                if c.statistic.len() != n {
                    return Err(parse_error(
                        format!("{kind}[{i}].statistic"),
                        format!("expected {n} entries, got {}", c.statistic.len()),
                    ));
                }
            }
        }
        let mut zeros = Vec::with_capacity(self.zero_support.len());
        for (i, r) in self.zero_support.iter().enumerate() {
            let index = match r {
                AtomRef::Index(k) if *k < n => *k,
                AtomRef::Index(k) => {
                    return Err(parse_error(format!("zero_support[{i}]"), format!("index {k} out of range")))
                }
                AtomRef::Label(s) => space
                    .points()
                    .iter()
                    .position(|p| match p {
                        Point::Label(l) => l == s,
                        Point::Scalar(x) => s.parse::<f64>().is_ok_and(|v| v == *x),
                        Point::Coords(_) => false,
                    })
                    .ok_or_else(|| parse_error(format!("zero_support[{i}]"), format!("no point labelled `{s}`")))?,
            };
            zeros.push(index);
        }
        ConstraintSet::new(space, self.equalities, self.inequalities, zeros)
    }
}

pub fn read_constraints(path: &Path, space: Arc<WeightedSpace>) -> Result<ConstraintSet> {
    from_json::<ConstraintsFile>(&read_text(path)?)?.into_constraint_set(space)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&read_text(path)?)
}

/// Serialized [`ProjectionResult`].
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionReport {
    pub alpha: ReportFloat,
    pub value: ReportFloat,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_agreement: ReportFloat,
    pub worst_certificate: ReportFloat,
    pub certificate_residuals: Vec<(usize, ReportFloat)>,
    pub restarts: Vec<RestartTraceReport>,
    pub q: DistributionFile,
}

#[derive(Debug, Clone, Serialize)]
pub struct RestartTraceReport {
    pub index: usize,
    pub value: ReportFloat,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&RestartTrace> for RestartTraceReport {
    fn from(t: &RestartTrace) -> Self {
        Self { index: t.index, value: ReportFloat(t.value), iterations: t.iterations, converged: t.converged }
    }
}

impl ProjectionReport {
    pub fn new(res: &ProjectionResult, alpha: f64) -> Self {
        Self {
            alpha: ReportFloat(alpha),
            value: ReportFloat(res.value),
            iterations: res.iterations,
            converged: res.converged,
            restarts_agreement: ReportFloat(res.restarts_agreement),
            worst_certificate: ReportFloat(res.worst_certificate()),
            certificate_residuals: res.certificate_residuals.iter().map(|&(k, v)| (k, ReportFloat(v))).collect(),
            restarts: res.restarts.iter().map(RestartTraceReport::from).collect(),
            q: DistributionFile::from_density(&res.q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let text = r#"{"points": [1, 2.5, "c"], "mu_weights": [0.5, 1, 2], "p": [0.2, 0.3, 0.3]}"#;
        let d = parse_distribution_json(text).unwrap();
        let again = parse_distribution_json(&distribution_to_json(&d)).unwrap();
        assert_eq!(d, again);
        assert_eq!(d.space().points()[2], Point::Label("c".into()));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let text = r#"{"points": [0.1, 0.30000000000000004, 7], "mu_weights": [0.1, 0.2, 0.3], "p": [1, 0.75, 2.5]}"#;
        let d = parse_distribution_json(text).unwrap();
        assert_eq!(parse_distribution_csv(&distribution_to_csv(&d)).unwrap(), d);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = parse_distribution_json(r#"{"p": [0.5, -0.5, 1.0]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "p[1]"), "{err}");
        let err = parse_distribution_json(r#"{"p": [0.5, "x"]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "p[1]"), "{err}");
        let err = parse_distribution_json(r#"{"p": [1.0], "weights": [1]}"#).unwrap_err();
        assert!(err.to_string().contains("weights"), "{err}");
        let err = parse_distribution_json(r#"{"p": [0.5, 0.5], "mu_weights": [1, 0]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "mu_weights[1]"), "{err}");
        let err = parse_distribution_json(r#"{"p": [0.5, 0.6]}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "p"), "{err}");
    }

    #[test]
    fn csv_input() {
        let d = parse_distribution_csv("point,mu_weight,p\n1,1,0.25\n2,1,0.75\n").unwrap();
        assert_eq!(d.values(), &[0.25, 0.75]);
        assert_eq!(d.space().points()[0], Point::Scalar(1.0));
        let err = parse_distribution_csv("point,p\na,0.5\nb,NaN\n").unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "p[1]"), "{err}");
        let err = parse_distribution_csv("point,q\na,1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "q"), "{err}");
    }

    #[test]
    fn constraints_with_labels() {
        let d = parse_distribution_json(r#"{"points": ["a", "b", "c"], "p": [0.2, 0.3, 0.5]}"#).unwrap();
        let file: ConstraintsFile = from_json(
            r#"{"equalities": [{"statistic": [1, 2, 3], "target": 2.0}],
                "inequalities": [{"statistic": [0, 1, 0], "bound": 0.9}],
                "zero_support": ["b"]}"#,
        )
        .unwrap();
        let e = file.into_constraint_set(Arc::clone(d.space())).unwrap();
        assert_eq!(e.zero_support(), &[1]);
        assert_eq!(e.inequalities()[0].target, 0.9);
        let err = from_json::<ConstraintsFile>(r#"{"equalities": [], "extra": 1}"#).unwrap_err();
        assert!(err.to_string().contains("extra"));
        let file: ConstraintsFile = from_json(r#"{"equalities": [{"statistic": [1, 2], "target": 2.0}]}"#).unwrap();
        let err = file.into_constraint_set(Arc::clone(d.space())).unwrap_err();
        assert!(matches!(err, Error::Parse { ref field, .. } if field == "equalities[0].statistic"));
    }
}
