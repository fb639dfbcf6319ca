//! Leading-indicator analysis over training checkpoints: at each epoch, how
//! well does a geometric metric predict final accuracy compared with the
//! validation accuracy measured at that same epoch?

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::correlation::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: u32,
    pub metric: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSeries {
    pub name: String,
    pub checkpoints: Vec<Checkpoint>,
    pub final_accuracy: f64,
}

impl ModelSeries {
    fn at(&self, epoch: u32) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.epoch == epoch)
    }
}

/// Univariate R^2 of final accuracy against each predictor at one epoch.
/// A cell is `None` when its predictor is constant across models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochFit {
    pub epoch: u32,
    pub models: usize,
    pub r2_metric: Option<f64>,
    pub r2_accuracy: Option<f64>,
}

fn r_squared(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    match pearson(x, y) {
        Ok(r) => Ok(Some(r * r)),
        Err(Error::ConstantInput) => Ok(None),
        Err(e) => Err(e),
    }
}

pub fn leading_indicator(series: &[ModelSeries]) -> Result<Vec<EpochFit>> {
    if series.len() < 3 {
        return Err(Error::InsufficientRecords { needed: 3, got: series.len() });
    }
    let mut common: BTreeSet<u32> = series[0].checkpoints.iter().map(|c| c.epoch).collect();
    for s in &series[1..] {
        let epochs: BTreeSet<u32> = s.checkpoints.iter().map(|c| c.epoch).collect();
        common = common.intersection(&epochs).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::NoCommonEpochs);
    }
    let finals: Vec<f64> = series.iter().map(|s| s.final_accuracy).collect();
    common
        .into_iter()
        .map(|epoch| {
            let points: Vec<&Checkpoint> = series.iter().map(|s| s.at(epoch).expect("common epoch")).collect();
            let metric: Vec<f64> = points.iter().map(|c| c.metric).collect();
            let acc: Vec<f64> = points.iter().map(|c| c.val_accuracy).collect();
            Ok(EpochFit {
                epoch,
                models: series.len(),
                r2_metric: r_squared(&metric, &finals)?,
                r2_accuracy: r_squared(&acc, &finals)?,
            })
        })
        .collect()
}

/// Read checkpoint rows with columns `model_name`, `epoch`, `metric`,
/// `val_accuracy` and `final_accuracy`. Models keep first-appearance order.
pub fn series_from_reader<R: Read>(reader: R) -> Result<Vec<ModelSeries>> {
    #[derive(Deserialize)]
    struct Row {
        model_name: String,
        epoch: u32,
        metric: f64,
        val_accuracy: f64,
        final_accuracy: f64,
    }
    let bad = |msg: String| Error::MalformedCsv(msg);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out: Vec<ModelSeries> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let checkpoint = Checkpoint { epoch: row.epoch, metric: row.metric, val_accuracy: row.val_accuracy };
        match out.iter_mut().find(|s| s.name == row.model_name) {
            Some(s) if s.final_accuracy != row.final_accuracy => {
                return Err(bad(format!("model {} has conflicting final_accuracy", row.model_name)));
            }
            Some(s) if s.at(row.epoch).is_some() => {
                return Err(bad(format!("model {} repeats epoch {}", row.model_name, row.epoch)));
            }
            Some(s) => s.checkpoints.push(checkpoint),
            None => out.push(ModelSeries {
                name: row.model_name,
                checkpoints: vec![checkpoint],
                final_accuracy: row.final_accuracy,
            }),
        }
    }
    Ok(out)
}

pub fn series_from_path(path: impl AsRef<Path>) -> Result<Vec<ModelSeries>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    series_from_reader(file)
}
