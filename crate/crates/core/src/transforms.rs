//! Target-space transforms: the go-past-time residual and per-column scalers.
//!
//! Targets are transformed in a fixed order: `gpt_to_residual` first, then the
//! target scaler. Inversion runs the other way.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::GazeTargets;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of the GPT slot, which holds `TRT − GPT` in residual representation.
pub const RESIDUAL_INDEX: usize = 2;
const TRT_INDEX: usize = 3;

/// `(nFix, FFD, GPT, TRT, fixProp)` → `(nFix, FFD, TRT − GPT, TRT, fixProp)`.
pub fn gpt_to_residual(t: GazeTargets) -> [f64; 5] {
    let mut v = t.to_array();
    v[RESIDUAL_INDEX] = v[TRT_INDEX] - v[RESIDUAL_INDEX];
    v
}

/// Inverse of [`gpt_to_residual`]: `GPT = TRT − residual`.
pub fn residual_to_gpt(v: [f64; 5]) -> GazeTargets {
    let mut out = v;
    out[RESIDUAL_INDEX] = v[TRT_INDEX] - v[RESIDUAL_INDEX];
    GazeTargets::from_array(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    #[default]
    MinMax,
    Standard,
    None,
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScalingMode::MinMax => "min_max",
            ScalingMode::Standard => "standard",
            ScalingMode::None => "none",
        })
    }
}

impl FromStr for ScalingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_max" | "minmax" => Ok(ScalingMode::MinMax),
            "standard" | "std" => Ok(ScalingMode::Standard),
            "none" => Ok(ScalingMode::None),
            other => Err(Error::Config(format!("unknown scaling mode `{other}`"))),
        }
    }
}

/// Fitted per-column statistics.
///
/// For `min_max`, `offset` is the column minimum and `spread` is `max − min`.
/// For `standard`, `offset` is the mean and `spread` the population standard
/// deviation. A column with zero spread is degenerate: it scales to 0 and inverts
/// to its constant (`offset`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalerParams<T> {
    pub mode: ScalingMode,
    pub offset: Vec<T>,
    pub spread: Vec<T>,
}

impl<T: Scalar> ScalerParams<T> {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mode: ScalingMode::None,
            offset: vec![T::zero(); dim],
            spread: vec![T::one(); dim],
        }
    }

    pub fn is_degenerate(&self, column: usize) -> bool {
        self.mode != ScalingMode::None && self.spread[column] == T::zero()
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::shape(
                "scaler",
                format!("vector of {} for scaler fit on {} columns", x.len(), self.dim()),
            ))
        }
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        if self.mode == ScalingMode::None {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .enumerate()
            .map(|(c, &v)| {
                if self.spread[c] == T::zero() {
                    T::zero()
                } else {
                    (v - self.offset[c]) / self.spread[c]
                }
            })
            .collect())
    }

    pub fn invert(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        if self.mode == ScalingMode::None {
            return Ok(x.to_vec());
        }
        Ok(x.iter()
            .enumerate()
            .map(|(c, &v)| v * self.spread[c] + self.offset[c])
            .collect())
    }

    pub fn cast<U: Scalar>(&self) -> ScalerParams<U> {
        ScalerParams {
            mode: self.mode,
            offset: self.offset.iter().map(|&v| U::of(v.as_f64())).collect(),
            spread: self.spread.iter().map(|&v| U::of(v.as_f64())).collect(),
        }
    }
}

/// Fits per-column statistics on the rows of `data`.
pub fn fit_scaler<T: Scalar>(data: &[Vec<T>], mode: ScalingMode) -> Result<ScalerParams<T>> {
    let Some(first) = data.first() else {
        return Err(Error::Validation("cannot fit a scaler on zero rows".into()));
    };
    let dim = first.len();
    if let Some(bad) = data.iter().position(|r| r.len() != dim) {
        return Err(Error::shape(
            "fit_scaler",
            format!("row {bad} has {} columns, expected {dim}", data[bad].len()),
        ));
    }
    if mode == ScalingMode::None {
        return Ok(ScalerParams::identity(dim));
    }
    let n = T::of_usize(data.len());
    let mut offset = vec![T::zero(); dim];
    let mut spread = vec![T::zero(); dim];
    for c in 0..dim {
        let column = data.iter().map(|r| r[c]);
        match mode {
            ScalingMode::MinMax => {
                let (lo, hi) = column.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)));
                offset[c] = lo;
                spread[c] = hi - lo;
            }
            ScalingMode::Standard => {
                let mean = column.clone().sum::<T>() / n;
                let var = column.map(|v| (v - mean) * (v - mean)).sum::<T>() / n;
                offset[c] = mean;
                spread[c] = var.sqrt();
            }
            ScalingMode::None => unreachable!(),
        }
    }
    Ok(ScalerParams { mode, offset, spread })
}

/// Residual substitution followed by scaling, for a whole split.
pub fn targets_to_training_space<T: Scalar>(targets: &[GazeTargets], scaler: &ScalerParams<T>) -> Result<Vec<Vec<T>>> {
    targets
        .iter()
        .map(|&t| scaler.apply(&gpt_to_residual(t).map(T::of)))
        .collect()
}

/// Residual-space rows for fitting the target scaler.
pub fn residual_rows<T: Scalar>(targets: &[GazeTargets]) -> Vec<Vec<T>> {
    targets
        .iter()
        .map(|&t| gpt_to_residual(t).map(T::of).to_vec())
        .collect()
}

/// Scaled residual-space vector back to original units (unclipped).
pub fn training_space_to_targets<T: Scalar>(v: &[T], scaler: &ScalerParams<T>) -> Result<GazeTargets> {
    let raw = scaler.invert(v)?;
    if raw.len() != 5 {
        return Err(Error::shape(
            "training_space_to_targets",
            format!("{} components", raw.len()),
        ));
    }
    let mut arr = [0.0; 5];
    for (a, r) in arr.iter_mut().zip(raw) {
        *a = r.as_f64();
    }
    Ok(residual_to_gpt(arr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_examples() {
        let t = GazeTargets::from_array([2.0, 50.0, 30.0, 40.0, 80.0]);
        assert_eq!(gpt_to_residual(t), [2.0, 50.0, 10.0, 40.0, 80.0]);
        assert_eq!(residual_to_gpt([2.0, 50.0, 10.0, 40.0, 80.0]).GPT, 30.0);
        let equal = GazeTargets::from_array([1.0, 1.0, 40.0, 40.0, 1.0]);
        assert_eq!(gpt_to_residual(equal)[RESIDUAL_INDEX], 0.0);
        assert_eq!(residual_to_gpt([1.0, 1.0, 0.0, 40.0, 1.0]).GPT, 40.0);
        let over = GazeTargets::from_array([1.0, 1.0, 50.0, 40.0, 1.0]);
        assert_eq!(gpt_to_residual(over)[RESIDUAL_INDEX], -10.0);
    }

    #[test]
    fn fit_examples() {
        let p = fit_scaler(&[vec![0.0], vec![50.0], vec![100.0]], ScalingMode::MinMax).unwrap();
        assert_eq!((p.offset[0], p.offset[0] + p.spread[0]), (0.0, 100.0));
        let scaled: Vec<f64> = [0.0, 50.0, 100.0].iter().map(|&v| p.apply(&[v]).unwrap()[0]).collect();
        assert_eq!(scaled, [0.0, 0.5, 1.0]);

        let s = fit_scaler(&[vec![1.0], vec![3.0]], ScalingMode::Standard).unwrap();
        assert_eq!((s.offset[0], s.spread[0]), (2.0, 1.0));

        let d = fit_scaler(&[vec![7.0], vec![7.0]], ScalingMode::MinMax).unwrap();
        assert!(d.is_degenerate(0));
        assert_eq!(d.apply(&[123.0]).unwrap(), [0.0]);
        assert_eq!(d.invert(&[0.4]).unwrap(), [7.0]);

        assert!(fit_scaler::<f64>(&[], ScalingMode::MinMax).is_err());
    }

    #[test]
    fn identity_mode_and_dimension_errors() {
        let p = fit_scaler(&[vec![1.0, 9.0]], ScalingMode::None).unwrap();
        assert_eq!(p.apply(&[4.0, -2.0]).unwrap(), [4.0, -2.0]);
        assert_eq!(p.invert(&[4.0, -2.0]).unwrap(), [4.0, -2.0]);
        assert!(p.apply(&[1.0]).is_err());
        assert!(p.invert(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [ScalingMode::MinMax, ScalingMode::Standard, ScalingMode::None] {
            assert_eq!(m.to_string().parse::<ScalingMode>().unwrap(), m);
        }
    }
}
