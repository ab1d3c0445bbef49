use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::report::{Summary, SUMMARY_SCHEMA};
use super::scan::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Le,
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            ">=" | "ge" | "≥" => Ok(Relation::Ge),
            "<=" | "le" | "≤" => Ok(Relation::Le),
            _ => Err(format!("unknown relation '{s}', expected >= or <=")),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Ge => ">=",
            Relation::Le => "<=",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path} is not a summary document: {source}")]
    Parse { path: String, source: serde_json::Error },
}

pub fn load_summary(run_dir: &Path) -> Result<Summary, CompareError> {
    let path = run_dir.join("summary.json");
    let p = path.display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|source| CompareError::Read {
        path: p.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CompareError::Parse { path: p, source })
}

/// `a relation b` on one summary metric, with `tolerance` relative to |b|.
pub fn compare(
    a: &Summary,
    b: &Summary,
    metric: &str,
    relation: Relation,
    tolerance: f64,
) -> Result<Status, CompareError> {
    if a.schema != b.schema || a.schema != SUMMARY_SCHEMA {
        return Err(CompareError::SchemaMismatch(format!(
            "'{}' vs '{}'",
            a.schema, b.schema
        )));
    }
    let get = |s: &Summary, which: &str| {
        s.metrics
            .get(metric)
            .copied()
            .ok_or_else(|| CompareError::SchemaMismatch(format!("metric '{metric}' missing from run {which}")))
    };
    let (x, y) = (get(a, "A")?, get(b, "B")?);
    let slack = tolerance * y.abs();
    let ok = match relation {
        Relation::Ge => x >= y - slack,
        Relation::Le => x <= y + slack,
    };
    Ok(if ok { Status::Pass } else { Status::Fail })
}
