use serde::Serialize;

use crate::corpus::TARGET_NAMES;
use crate::error::{Error, Result};

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Original-unit validation MAE per target; NaN where the model does not predict it.
    pub val_mae: [f64; 5],
    /// Validation R2 per target; NaN where undefined or not predicted.
    pub val_r2: [f64; 5],
    /// Learning rate of the last optimizer step in the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct TrainHistory {
    /// `all` for a multi-target model, otherwise the target name.
    pub model: String,
    pub epochs: Vec<EpochRecord>,
    /// Learning rate of every optimizer step, in order.
    pub lr_trace: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// CSV header of [`histories_csv`].
pub fn history_header() -> Vec<String> {
    let mut h: Vec<String> = ["model", "epoch", "train_loss", "val_loss"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(TARGET_NAMES.iter().map(|t| format!("val_mae_{t}")));
    h.extend(TARGET_NAMES.iter().map(|t| format!("val_r2_{t}")));
    h.push("lr".into());
    h
}

/// All histories in one CSV; empty cells mark undefined values.
pub fn histories_csv(histories: &[TrainHistory]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(history_header())?;
    for h in histories {
        for e in &h.epochs {
            let mut rec = vec![h.model.clone(), e.epoch.to_string(), fmt(e.train_loss), fmt(e.val_loss)];
            rec.extend(e.val_mae.iter().map(|&v| fmt(v)));
            rec.extend(e.val_r2.iter().map(|&v| fmt(v)));
            rec.push(fmt(e.lr));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| Error::Serialize(e.to_string()))
}

impl TrainHistory {
    pub fn val_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.val_loss).collect()
    }

    pub fn train_losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.train_loss).collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        histories_csv(std::slice::from_ref(self))
    }
}
