use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metrics measured after one training round. `None` marks an undefined metric.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub n_labelled: usize,
    pub n_pseudo: usize,
    pub metrics: BTreeMap<String, Option<f64>>,
    /// Seconds from the start of the round to its evaluation.
    pub wall_time: f64,
}

/// Equality ignores wall time.
impl PartialEq for IterationRecord {
    fn eq(&self, other: &Self) -> bool {
        self.iteration == other.iteration
            && self.n_labelled == other.n_labelled
            && self.n_pseudo == other.n_pseudo
            && self.metrics == other.metrics
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub fingerprint: String,
    pub seed: u64,
    pub records: Vec<IterationRecord>,
}

impl LearningCurve {
    pub fn metric(&self, iteration: usize, name: &str) -> Option<f64> {
        self.records.get(iteration).and_then(|r| r.metrics.get(name).copied().flatten())
    }
}

/// Mean and standard error of one metric at one iteration across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub iteration: usize,
    pub n_labelled: usize,
    pub metric: String,
    /// `None` when no seed defined the metric.
    pub mean: Option<f64>,
    pub se: Option<f64>,
    /// Seeds contributing a value.
    pub n_seeds: usize,
}

/// Per-iteration mean and standard error (sample sd / √n, 0 for a single value).
pub fn aggregate_seeds(curves: &[LearningCurve]) -> Result<Vec<AggregatePoint>> {
    let first = curves.first().ok_or_else(|| Error::Empty("no curves to aggregate".into()))?;
    for c in curves {
        if c.fingerprint != first.fingerprint {
            return Err(Error::invalid(format!("fingerprints differ: {} vs {}", first.fingerprint, c.fingerprint)));
        }
        if c.records.len() != first.records.len() {
            return Err(Error::invalid(format!(
                "seed {} has {} records, seed {} has {}",
                c.seed,
                c.records.len(),
                first.seed,
                first.records.len()
            )));
        }
    }
    let mut out = Vec::new();
    for (it, rec) in first.records.iter().enumerate() {
        for name in rec.metrics.keys() {
            let values: Vec<f64> = curves.iter().filter_map(|c| c.metric(it, name)).collect();
            let n = values.len();
            let (mean, se) = if n == 0 {
                (None, None)
            } else {
                let mean = values.iter().sum::<f64>() / n as f64;
                let se = if n > 1 {
                    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(se))
            };
            out.push(AggregatePoint {
                iteration: rec.iteration,
                n_labelled: rec.n_labelled,
                metric: name.clone(),
                mean,
                se,
                n_seeds: n,
            });
        }
    }
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format curve CSV, rows ordered by (seed, iteration, metric).
pub fn write_curves_csv<W: Write>(out: W, strategy: &str, ceal_mode: &str, curves: &[LearningCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "ceal_mode", "seed", "iteration", "n_labelled", "n_pseudo", "metric", "value"])?;
    let mut sorted: Vec<&LearningCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.seed);
    for c in sorted {
        let seed = c.seed.to_string();
        for r in &c.records {
            for (name, value) in &r.metrics {
                w.write_record([
                    strategy,
                    ceal_mode,
                    &seed,
                    &r.iteration.to_string(),
                    &r.n_labelled.to_string(),
                    &r.n_pseudo.to_string(),
                    name,
                    &cell(*value),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("curve csv", e))
}

pub fn write_aggregate_csv<W: Write>(out: W, strategy: &str, ceal_mode: &str, points: &[AggregatePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "ceal_mode", "iteration", "n_labelled", "metric", "mean", "se", "n_seeds"])?;
    for p in points {
        w.write_record([
            strategy,
            ceal_mode,
            &p.iteration.to_string(),
            &p.n_labelled.to_string(),
            &p.metric,
            &cell(p.mean),
            &cell(p.se),
            &p.n_seeds.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("aggregate csv", e))
}
