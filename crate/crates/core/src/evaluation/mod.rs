//! Metrics, the feature-ablation harness, and exploratory statistics.

pub mod metrics;

use rayon::prelude::*;
use serde::Serialize;

pub use metrics::{evaluate, evaluate_corpora, mae, mean_std, r2, Metrics};

use crate::corpus::{target_index, Corpus, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::features::{resolve_columns, FeatureMatrix, FEATURE_GROUPS};
use crate::model::{LanguageInfo, LanguageSource, ModelConfig};
use crate::scalar::Scalar;
use crate::training::{train, TrainConfig};

/// Marker written to CSV for undefined statistics.
pub const UNDEFINED: &str = "NA";

fn cell(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        UNDEFINED.to_string()
    }
}

/// A named feature subset to train on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subset {
    pub name: String,
    pub features: Vec<String>,
}

/// One model trained on each feature group alone.
pub fn each_single_subsets() -> Vec<Subset> {
    FEATURE_GROUPS
        .iter()
        .map(|g| Subset {
            name: g.to_string(),
            features: vec![g.to_string()],
        })
        .collect()
}

/// One model per feature group, trained on every other group.
pub fn drop_one_subsets() -> Vec<Subset> {
    FEATURE_GROUPS
        .iter()
        .map(|g| Subset {
            name: format!("without_{g}"),
            features: FEATURE_GROUPS
                .iter()
                .filter(|o| o != &g)
                .map(|o| o.to_string())
                .collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub subset: String,
    pub mean_r2: f64,
    pub std_r2: f64,
    pub r2: [f64; 5],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationReport {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = ["subset", "mean_r2", "std_r2"].iter().map(|s| s.to_string()).collect();
        header.extend(TARGET_NAMES.iter().map(|t| format!("r2_{t}")));
        header.push("seed".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.subset.clone(), cell(r.mean_r2), cell(r.std_r2)];
            rec.extend(r.r2.iter().map(|&v| cell(v)));
            rec.push(self.seed.to_string());
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// Trains one model per subset on the same split and seed and scores each on
/// the validation split. Every subset is checked before any training starts.
pub fn run_ablation<T: Scalar>(
    corpus: &Corpus,
    features: &FeatureMatrix,
    language: Option<(&LanguageSource, LanguageInfo)>,
    cfg: &TrainConfig,
    model: &ModelConfig,
    subsets: &[Subset],
) -> Result<AblationReport> {
    if subsets.is_empty() {
        return Err(Error::Config("no ablation subsets requested".into()));
    }
    for s in subsets {
        resolve_columns(&s.features)?;
    }
    cfg.validate()?;
    let rows = subsets
        .par_iter()
        .map(|s| {
            let run_cfg = TrainConfig {
                features: s.features.clone(),
                ..cfg.clone()
            };
            let outcome = train::<T>(corpus, features, language.clone(), &run_cfg, model)?;
            let m = outcome.val_metrics;
            Ok(AblationRow {
                subset: s.name.clone(),
                mean_r2: m.mean_r2,
                std_r2: m.std_r2,
                r2: m.r2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport { seed: cfg.seed, rows })
}

/// Pearson correlation; `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::Alignment {
            what: "values",
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Validation("correlation needs at least 2 values".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)))
}

fn target_column(corpus: &Corpus, k: usize) -> Result<Vec<f64>> {
    let gold = corpus
        .targets()
        .ok_or_else(|| Error::Validation("corpus has no targets".into()))?;
    Ok(gold.iter().map(|t| t.to_array()[k]).collect())
}

/// 5×5 Pearson matrix of the targets. Rows and columns of a constant target are NaN.
pub fn target_correlations(corpus: &Corpus) -> Result<[[f64; 5]; 5]> {
    let cols = (0..5).map(|k| target_column(corpus, k)).collect::<Result<Vec<_>>>()?;
    let mut m = [[f64::NAN; 5]; 5];
    for i in 0..5 {
        for j in i..5 {
            let r = if i == j {
                pearson(&cols[i], &cols[j])?.map(|_| 1.0)
            } else {
                pearson(&cols[i], &cols[j])?
            };
            let v = r.unwrap_or(f64::NAN);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

pub fn correlations_csv(m: &[[f64; 5]; 5]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["target".to_string()];
    header.extend(TARGET_NAMES.iter().map(|t| t.to_string()));
    w.write_record(&header)?;
    for (i, row) in m.iter().enumerate() {
        let mut rec = vec![TARGET_NAMES[i].to_string()];
        rec.extend(row.iter().map(|&v| cell(v)));
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
}

/// Mean of a target within the `+1` and `−1` groups of a flag feature.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub flag: String,
    pub target: String,
    /// `(mean, count)` for the `+1` group; the mean is NaN when the group is empty.
    pub positive: (f64, usize),
    pub negative: (f64, usize),
}

fn lookup_target(name: &str) -> Result<usize> {
    target_index(name).ok_or_else(|| Error::Config(format!("unknown target `{name}`")))
}

fn feature_column(features: &FeatureMatrix, corpus: &Corpus, name: &str) -> Result<Vec<f64>> {
    if features.num_rows() != corpus.num_tokens() {
        return Err(Error::Alignment {
            what: "feature rows",
            expected: corpus.num_tokens(),
            got: features.num_rows(),
        });
    }
    features
        .column(name)
        .ok_or_else(|| Error::Config(format!("unknown feature `{name}`")))
}

pub fn group_stats(corpus: &Corpus, features: &FeatureMatrix, flag: &str, target: &str) -> Result<GroupStats> {
    if flag != "stopword" && flag != "endword" && flag != "number" {
        return Err(Error::Config(format!("`{flag}` is not a ±1 flag feature")));
    }
    let x = feature_column(features, corpus, flag)?;
    let y = target_column(corpus, lookup_target(target)?)?;
    let group = |sign: f64| {
        let vals: Vec<f64> = x.iter().zip(&y).filter(|(f, _)| **f == sign).map(|(_, v)| *v).collect();
        let mean = if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        (mean, vals.len())
    };
    Ok(GroupStats {
        flag: flag.into(),
        target: target.into(),
        positive: group(1.0),
        negative: group(-1.0),
    })
}

pub fn group_stats_csv(stats: &[GroupStats]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["flag", "target", "group", "mean", "count"])?;
    for s in stats {
        for (g, (mean, count)) in [("+1", s.positive), ("-1", s.negative)] {
            w.write_record([
                s.flag.clone(),
                s.target.clone(),
                g.into(),
                cell(mean),
                count.to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
}

/// `(feature, target)` pairs, one per token, in corpus order.
pub fn scatter_data(corpus: &Corpus, features: &FeatureMatrix, feature: &str, target: &str) -> Result<Vec<(f64, f64)>> {
    let x = feature_column(features, corpus, feature)?;
    let y = target_column(corpus, lookup_target(target)?)?;
    Ok(x.into_iter().zip(y).collect())
}

pub fn scatter_csv(feature: &str, target: &str, pairs: &[(f64, f64)]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([feature, target])?;
    for (x, y) in pairs {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
}
