//! Result records and the files written for each run.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::experiment::Run;
use crate::LabError;

/// Metrics of one `(lambda, seed)` cell, or the error that stopped it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub lambda: f64,
    pub seed: u64,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Ensemble statistics of one metric at one lambda.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub lambda: f64,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`; zero for a single cell.
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, relation: Relation, limit: f64) -> Self {
        let pass = match relation {
            Relation::AtMost => value <= limit,
            Relation::AtLeast => value >= limit,
        };
        // JSON has no NaN or infinity; a missing statistic fails as the largest float
        let value = if value.is_finite() { value } else { f64::MAX };
        Check { name: name.into(), value, relation, limit, pass }
    }

    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::AtMost, limit)
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, limit)
    }

    /// A yes/no condition recorded as `1 >= 1` or `0 >= 1`.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// Deterministic outcome of a run; wall time lives in the manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub inputs_hash: String,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl ResultRecord {
    pub fn aggregate(&self, lambda: f64, metric: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.lambda == lambda && a.metric == metric)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Mean and standard error per `(lambda, metric)`, in lambda then name order.
pub fn aggregate(cells: &[CellResult]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u64, String), (f64, Vec<f64>)> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.error.is_none()) {
        for (name, v) in &c.metrics {
            // positive finite lambdas order the same as their bit patterns
            groups.entry((c.lambda.to_bits(), name.clone())).or_insert((c.lambda, Vec::new())).1.push(*v);
        }
    }
    groups
        .into_iter()
        .map(|((_, metric), (lambda, xs))| {
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            } else {
                0.0
            };
            Aggregate { lambda, metric, count: n, mean, stderr }
        })
        .collect()
}

/// SHA-256 of the canonical JSON form of the inputs: keys sorted, output
/// directory left out so relocating a run does not change it.
pub fn inputs_hash(config: &ExperimentConfig) -> String {
    let mut value = serde_json::to_value(config).expect("configs serialize");
    if let Some(map) = value.as_object_mut() {
        map.remove("output_dir");
    }
    let canonical = serde_json::to_string(&value).expect("values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub inputs_hash: String,
    pub lambdas: Vec<f64>,
    pub seeds: Vec<u64>,
    pub rng: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub files: Vec<String>,
}

pub const RESULT_FILES: [&str; 6] =
    ["results.json", "metrics.csv", "manifest.json", "zeros.csv", "growth.csv", "wigner.csv"];

/// Writes the record, the flat per-seed table, the manifest and the raw
/// tables the plots are drawn from.
pub fn write_results(run: &Run, dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(&run.record)?;
    json.push('\n');
    fs::write(dir.join("results.json"), json)?;

    let mut w = csv::Writer::from_path(dir.join("metrics.csv"))?;
    w.write_record(["lambda", "seed", "metric", "value"])?;
    for c in &run.record.cells {
        for (name, v) in &c.metrics {
            w.write_record([c.lambda.to_string(), c.seed.to_string(), name.clone(), v.to_string()])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("zeros.csv"))?;
    w.write_record(["lambda", "seed", "t", "tau", "multiplicity"])?;
    for z in &run.raw.zeros {
        w.write_record([z.lambda.to_string(), z.seed.to_string(), z.t.to_string(), z.tau.to_string(), z.multiplicity.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("growth.csv"))?;
    w.write_record(["lambda", "tau", "v"])?;
    for g in &run.raw.growth {
        w.write_record([g.lambda.to_string(), g.tau.to_string(), g.v.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("wigner.csv"))?;
    w.write_record(["lambda", "t", "density"])?;
    for p in &run.raw.wigner {
        w.write_record([p.lambda.to_string(), p.t.to_string(), p.density.to_string()])?;
    }
    w.flush()?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: run.record.experiment.clone(),
        inputs_hash: run.record.inputs_hash.clone(),
        lambdas: run.lambdas.clone(),
        seeds: run.seeds.clone(),
        rng: "ChaCha8; each draw is seeded from the listed seeds".into(),
        threads: run.threads,
        wall_time_seconds: run.wall_time_seconds,
        files: RESULT_FILES.iter().map(|s| s.to_string()).collect(),
    };
    let mut f = fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn read_results(dir: &Path) -> Result<ResultRecord, LabError> {
    let text = fs::read_to_string(dir.join("results.json"))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, LabError> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}
