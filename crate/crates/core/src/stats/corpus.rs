//! Corpus-level correlation analysis over per-model records.
//!
//! Record CSVs carry one model per row. Recognized columns:
//!
//! | column          | meaning                                        |
//! |-----------------|------------------------------------------------|
//! | `model_name`    | required, unique label                         |
//! | `family`        | architecture family (optional)                 |
//! | `param_count`   | parameter count, enables partial correlations  |
//! | `accuracy`      | accuracy as a fraction in [0, 1]               |
//! | `accuracy_pct`  | accuracy in percent (use one of the two)       |
//!
//! Every other column is a numeric feature (`C`, `d_1`, `d_out`, `d_min`,
//! `d_max`, `L`, `abs_C`, `hidden`, ...). Empty cells are missing values.
//! The derived feature `log_params` is `ln(param_count)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::correlation::{correlation_pvalue, ols_residuals, pearson, pearson_pvalue};
use crate::stats::forest::{rf_fit, rf_importance, ForestParams};

pub const LOG_PARAMS: &str = "log_params";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyUnit {
    Fraction,
    Percent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub name: String,
    pub family: String,
    pub param_count: Option<u64>,
    pub accuracy: Option<f64>,
    pub features: BTreeMap<String, f64>,
}

impl ModelRecord {
    pub fn log_params(&self) -> Option<f64> {
        self.param_count.map(|p| (p as f64).ln())
    }

    pub fn feature(&self, name: &str) -> Option<f64> {
        if name == LOG_PARAMS {
            return self.log_params();
        }
        self.features.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub records: Vec<ModelRecord>,
    pub unit: AccuracyUnit,
    /// Feature columns in file order.
    pub feature_names: Vec<String>,
}

/// What the metrics are correlated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Accuracy,
    Feature(String),
}

impl Target {
    pub fn parse(name: &str) -> Self {
        match name {
            "accuracy" | "accuracy_pct" => Target::Accuracy,
            other => Target::Feature(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Target::Accuracy => "accuracy",
            Target::Feature(f) => f,
        }
    }

    pub fn value(&self, record: &ModelRecord) -> Option<f64> {
        match self {
            Target::Accuracy => record.accuracy,
            Target::Feature(f) => record.feature(f),
        }
    }
}

impl Corpus {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let bad = |msg: String| Error::MalformedCsv(msg);
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let headers: Vec<String> = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let name_col = col("model_name").ok_or_else(|| bad("missing model_name column".into()))?;
        let family_col = col("family");
        let params_col = col("param_count");
        let (acc_col, unit) = match (col("accuracy"), col("accuracy_pct")) {
            (Some(_), Some(_)) => return Err(bad("declare accuracy or accuracy_pct, not both".into())),
            (Some(c), None) => (Some(c), AccuracyUnit::Fraction),
            (None, Some(c)) => (Some(c), AccuracyUnit::Percent),
            (None, None) => (None, AccuracyUnit::Fraction),
        };
        let reserved = [Some(name_col), family_col, params_col, acc_col];
        let feature_cols: Vec<usize> = (0..headers.len()).filter(|i| !reserved.contains(&Some(*i))).collect();

        let mut records = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| bad(e.to_string()))?;
            let cell = |i: usize| row.get(i).filter(|s| !s.is_empty());
            let number = |i: usize| -> Result<Option<f64>> {
                cell(i)
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|_| bad(format!("row {}: column {} is not a number: {s:?}", line + 1, headers[i])))
                    })
                    .transpose()
            };
            let name = cell(name_col).ok_or_else(|| bad(format!("row {}: empty model_name", line + 1)))?.to_string();
            let param_count = match params_col.and_then(cell) {
                Some(s) => {
                    let v: f64 = s.parse().map_err(|_| bad(format!("row {}: bad param_count {s:?}", line + 1)))?;
                    if v.is_nan() || v < 1.0 {
                        return Err(bad(format!("row {}: param_count must be positive", line + 1)));
                    }
                    Some(v.round() as u64)
                }
                None => None,
            };
            let accuracy = match acc_col {
                Some(c) => number(c)?,
                None => None,
            };
            if let Some(a) = accuracy {
                let max = match unit {
                    AccuracyUnit::Fraction => 1.0,
                    AccuracyUnit::Percent => 100.0,
                };
                if !(0.0..=max).contains(&a) {
                    return Err(bad(format!("row {}: accuracy {a} outside [0, {max}]", line + 1)));
                }
            }
            let mut features = BTreeMap::new();
            for &c in &feature_cols {
                if let Some(v) = number(c)? {
                    features.insert(headers[c].clone(), v);
                }
            }
            records.push(ModelRecord {
                name,
                family: family_col.and_then(cell).unwrap_or("").to_string(),
                param_count,
                accuracy,
                features,
            });
        }
        Ok(Corpus { records, unit, feature_names: feature_cols.iter().map(|&c| headers[c].clone()).collect() })
    }

    /// Paired `(metric, target)` values over the records that have both,
    /// plus their log-parameter counts when every such record has one.
    fn paired(&self, metric: &str, target: &Target) -> (Vec<f64>, Vec<f64>, Option<Vec<f64>>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut ps = Vec::new();
        let mut all_params = true;
        for r in &self.records {
            if let (Some(x), Some(y)) = (r.feature(metric), target.value(r)) {
                xs.push(x);
                ys.push(y);
                match r.log_params() {
                    Some(p) => ps.push(p),
                    None => all_params = false,
                }
            }
        }
        (xs, ys, all_params.then_some(ps))
    }

    pub fn has_metric(&self, name: &str) -> bool {
        name == LOG_PARAMS || self.feature_names.iter().any(|f| f == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub n: usize,
    pub r: f64,
    pub p: f64,
    pub r_squared: f64,
    /// Controlling for log parameter count; absent when counts are missing.
    pub partial_r: Option<f64>,
    pub partial_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub target: String,
    pub unit: Option<AccuracyUnit>,
    pub rows: Vec<MetricCorrelation>,
}

pub const MIN_RECORDS: usize = 4;

/// Raw and partial correlations of each metric against the target.
pub fn corpus_analysis(corpus: &Corpus, metrics: &[&str], target: &Target) -> Result<CorrelationReport> {
    let mut rows = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        if !corpus.has_metric(metric) {
            return Err(Error::UnknownColumn(metric.to_string()));
        }
        let (xs, ys, params) = corpus.paired(metric, target);
        if xs.len() < MIN_RECORDS {
            return Err(Error::InsufficientRecords { needed: MIN_RECORDS, got: xs.len() });
        }
        let r = pearson(&xs, &ys)?;
        let p = pearson_pvalue(r, xs.len())?;
        let partial_r = match params {
            Some(ps) if metric != LOG_PARAMS => partial_or_none(&xs, &ys, &ps)?,
            _ => None,
        };
        let partial_p = partial_r.map(|pr| correlation_pvalue(pr, (xs.len() - 3) as f64)).transpose()?;
        rows.push(MetricCorrelation {
            metric: metric.to_string(),
            n: xs.len(),
            r,
            p,
            r_squared: r * r,
            partial_r,
            partial_p,
        });
    }
    Ok(CorrelationReport {
        target: target.name().to_string(),
        unit: matches!(target, Target::Accuracy).then_some(corpus.unit),
        rows,
    })
}

/// Random-forest importance of each metric for predicting the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub target: String,
    pub n: usize,
    pub params: ForestParams,
    pub features: Vec<String>,
    pub importance: Vec<f64>,
}

/// Fit a forest on the records that have every metric and the target.
pub fn corpus_importance(
    corpus: &Corpus,
    metrics: &[&str],
    target: &Target,
    params: ForestParams,
) -> Result<ImportanceReport> {
    if let Some(m) = metrics.iter().find(|m| !corpus.has_metric(m)) {
        return Err(Error::UnknownColumn(m.to_string()));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut ys = Vec::new();
    for rec in &corpus.records {
        let Some(y) = target.value(rec) else { continue };
        let xs: Option<Vec<f64>> = metrics.iter().map(|m| rec.feature(m)).collect();
        if let Some(xs) = xs {
            rows.extend(xs);
            ys.push(y);
        }
    }
    let features = DMatrix::from_row_slice(ys.len(), metrics.len(), &rows);
    let model = rf_fit(&features, &ys, params)?;
    Ok(ImportanceReport {
        target: target.name().to_string(),
        n: ys.len(),
        params,
        features: metrics.iter().map(|m| m.to_string()).collect(),
        importance: rf_importance(&model),
    })
}

impl ImportanceReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "Random-forest importance for {} (N = {}, {} trees, depth {})\n\n| Feature | Importance |\n|---|---|\n",
            self.target, self.n, self.params.n_trees, self.params.max_depth
        );
        for (f, v) in self.features.iter().zip(&self.importance) {
            let _ = writeln!(out, "| {f} | {v:.3} |");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "importance"]).expect("in-memory write");
        for (f, v) in self.features.iter().zip(&self.importance) {
            w.write_record([f.clone(), v.to_string()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

fn partial_or_none(xs: &[f64], ys: &[f64], ps: &[f64]) -> Result<Option<f64>> {
    // Parameter counts that do not vary leave nothing to control for.
    let rx = match ols_residuals(xs, ps) {
        Ok(r) => r,
        Err(Error::ConstantRegressor) => return Ok(None),
        Err(e) => return Err(e),
    };
    let ry = ols_residuals(ys, ps)?;
    match pearson(&rx, &ry) {
        Ok(r) => Ok(Some(r)),
        Err(Error::ConstantInput) => Ok(None),
        Err(e) => Err(e),
    }
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:+.digits$}")).unwrap_or_else(|| "-".into())
}

fn fmt_p(p: f64) -> String {
    format!("{p:.3e}")
}

impl CorrelationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let unit = match self.unit {
            Some(AccuracyUnit::Percent) => " (percent)",
            Some(AccuracyUnit::Fraction) => " (fraction)",
            None => "",
        };
        let _ = writeln!(out, "Correlations against {}{unit}\n", self.target);
        out.push_str("| Metric | N | r | p | Partial r | Partial p | R^2 |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {:+.3} | {} | {} | {} | {:.3} |",
                row.metric,
                row.n,
                row.r,
                fmt_p(row.p),
                fmt_opt(row.partial_r, 3),
                row.partial_p.map(fmt_p).unwrap_or_else(|| "-".into()),
                row.r_squared
            );
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["metric", "target", "n", "r", "p", "partial_r", "partial_p", "r_squared"])
            .expect("in-memory write");
        for row in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                row.metric.clone(),
                self.target.clone(),
                row.n.to_string(),
                row.r.to_string(),
                row.p.to_string(),
                opt(row.partial_r),
                opt(row.partial_p),
                row.r_squared.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}
