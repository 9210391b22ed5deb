use serde::Serialize;

use crate::corpus::{Corpus, GazeTargets, TARGET_NAMES};
use crate::error::{Error, Result};

fn check_lengths(pred: &[f64], gold: &[f64], min: usize) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::Alignment {
            what: "values",
            expected: gold.len(),
            got: pred.len(),
        });
    }
    if gold.len() < min {
        return Err(Error::Validation(format!(
            "need at least {min} values, got {}",
            gold.len()
        )));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_lengths(pred, gold, 1)?;
    Ok(pred.iter().zip(gold).map(|(p, g)| (p - g).abs()).sum::<f64>() / gold.len() as f64)
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r2(pred: &[f64], gold: &[f64]) -> Result<f64> {
    check_lengths(pred, gold, 2)?;
    let mean = gold.iter().sum::<f64>() / gold.len() as f64;
    let ss_tot: f64 = gold.iter().map(|g| (g - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Validation("R2 is undefined for constant gold values".into()));
    }
    let ss_res: f64 = pred.iter().zip(gold).map(|(p, g)| (g - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-target error and fit in original units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub mae: [f64; 5],
    pub r2: [f64; 5],
    pub mean_r2: f64,
    pub std_r2: f64,
}

impl Metrics {
    /// Pools every token and scores each target column.
    pub fn from_pairs(pred: &[GazeTargets], gold: &[GazeTargets]) -> Result<Self> {
        if pred.len() != gold.len() {
            return Err(Error::Alignment {
                what: "predictions",
                expected: gold.len(),
                got: pred.len(),
            });
        }
        let mut m = Metrics {
            mae: [0.0; 5],
            r2: [0.0; 5],
            mean_r2: 0.0,
            std_r2: 0.0,
        };
        for k in 0..5 {
            let p: Vec<f64> = pred.iter().map(|t| t.to_array()[k]).collect();
            let g: Vec<f64> = gold.iter().map(|t| t.to_array()[k]).collect();
            m.mae[k] = mae(&p, &g)?;
            m.r2[k] = r2(&p, &g)?;
        }
        (m.mean_r2, m.std_r2) = mean_std(&m.r2);
        Ok(m)
    }

    /// `target,MAE,R2` rows followed by the mean/std summary.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["target", "mae", "r2"])?;
        for (k, name) in TARGET_NAMES.iter().enumerate() {
            w.write_record([name.to_string(), self.mae[k].to_string(), self.r2[k].to_string()])?;
        }
        w.write_record(["mean_r2".to_string(), String::new(), self.mean_r2.to_string()])?;
        w.write_record(["std_r2".to_string(), String::new(), self.std_r2.to_string()])?;
        w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
    }
}

/// Scores predictions against a labelled corpus, token for token.
pub fn evaluate(predictions: &[GazeTargets], corpus: &Corpus) -> Result<Metrics> {
    let gold = corpus
        .targets()
        .ok_or_else(|| Error::Validation("gold corpus has no targets".into()))?;
    Metrics::from_pairs(predictions, &gold)
}

/// Scores a predictions corpus against a gold corpus after checking that both
/// list the same `(sentence_id, word_id)` keys in the same order.
pub fn evaluate_corpora(predicted: &Corpus, gold: &Corpus) -> Result<Metrics> {
    let pk: Vec<(i64, i64)> = predicted.tokens().map(|t| (t.sentence_id, t.word_id)).collect();
    let gk: Vec<(i64, i64)> = gold.tokens().map(|t| (t.sentence_id, t.word_id)).collect();
    if pk.len() != gk.len() {
        return Err(Error::Alignment {
            what: "prediction rows",
            expected: gk.len(),
            got: pk.len(),
        });
    }
    if let Some((p, g)) = pk.iter().zip(&gk).find(|(p, g)| p != g) {
        return Err(Error::Validation(format!(
            "prediction row {p:?} does not match gold row {g:?}"
        )));
    }
    let pred = predicted
        .targets()
        .ok_or_else(|| Error::Validation("prediction file has no target columns".into()))?;
    evaluate(&pred, gold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(mae(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((mae(&[1.0, 2.0, 3.0], &[2.0, 2.0, 4.0]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r2(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((r2(&[3.0, 2.0, 1.0], &[1.0, 2.0, 3.0]).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        assert!(mae(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(r2(&[1.0, 2.0], &[5.0, 5.0]).is_err());
        assert!(r2(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn perfect_predictions() {
        let gold: Vec<GazeTargets> = (0..4)
            .map(|i| {
                GazeTargets::from_array([
                    i as f64,
                    2.0 * i as f64,
                    3.0 + i as f64,
                    10.0 - i as f64,
                    5.0 * i as f64,
                ])
            })
            .collect();
        let m = Metrics::from_pairs(&gold, &gold).unwrap();
        assert_eq!(m.r2, [1.0; 5]);
        assert_eq!(m.mae, [0.0; 5]);
        assert_eq!((m.mean_r2, m.std_r2), (1.0, 0.0));
    }
}
