//! CSV aggregation of `solve` results.

use crate::commands::SolveReport;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "λ_N")]
    pub lambda_n: f64,
    #[serde(rename = "λ_full")]
    pub lambda_full: f64,
    pub ratio: f64,
    pub pipeline_seminorm: Option<f64>,
    pub core_ratio: Option<f64>,
}

impl From<&SolveReport> for Row {
    fn from(r: &SolveReport) -> Self {
        Row {
            instance: r.instance.clone(),
            n: r.n,
            m: r.m,
            lambda_n: r.finiteness.lambda_n,
            lambda_full: r.finiteness.lambda_full,
            ratio: r.finiteness.ratio,
            pipeline_seminorm: r.pipeline.as_ref().map(|s| s.seminorm),
            core_ratio: r.pipeline.as_ref().map(|s| s.core_ratio),
        }
    }
}

/// Every `*.json` file of `dir` that parses as a solve report, by file name.
pub fn read_results(dir: &Path) -> Result<Vec<SolveReport>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        if let Ok(r) = serde_json::from_str::<SolveReport>(&text) {
            out.push(r);
        }
    }
    Ok(out)
}

pub fn to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "instance",
            "n",
            "m",
            "λ_N",
            "λ_full",
            "ratio",
            "pipeline_seminorm",
            "core_ratio",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn from_csv(text: &str) -> Result<Vec<Row>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
