//! Flat run configuration: one key namespace covering training and model settings,
//! layered as defaults < config file < command-line overrides.

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::TrainConfig;

/// Model keys derived from the data rather than configured.
const DERIVED_MODEL_KEYS: [&str; 3] = ["feature_dim", "language_dim", "outputs"];

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
}

fn to_table<S: serde::Serialize>(value: &S) -> Result<Table> {
    match Value::try_from(value).map_err(|e| Error::Serialize(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => Err(Error::Serialize("configuration did not serialize to a table".into())),
    }
}

fn train_keys() -> Table {
    to_table(&TrainConfig::default()).expect("defaults serialize")
}

fn model_keys() -> Table {
    to_table(&ModelConfig::default()).expect("defaults serialize")
}

/// Integer literals are accepted where a float is expected.
fn coerce(default: Option<&Value>, v: Value) -> Value {
    match (default, v) {
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (_, v) => v,
    }
}

impl RunConfig {
    /// Every user-settable key in its default state.
    pub fn defaults_table() -> Table {
        Self::default().to_table().expect("defaults serialize")
    }

    /// Applies `layers` in order over the defaults. Unknown keys are errors.
    pub fn from_layers(layers: &[Table]) -> Result<Self> {
        let train_defaults = train_keys();
        let model_defaults = model_keys();
        let mut train = train_defaults.clone();
        let mut model = model_defaults.clone();
        for layer in layers {
            for (k, v) in layer {
                if DERIVED_MODEL_KEYS.contains(&k.as_str()) {
                    return Err(Error::Config(format!(
                        "`{k}` is derived from the data and cannot be set"
                    )));
                }
                if train_defaults.contains_key(k) {
                    train.insert(k.clone(), coerce(train_defaults.get(k), v.clone()));
                } else if model_defaults.contains_key(k) {
                    model.insert(k.clone(), coerce(model_defaults.get(k), v.clone()));
                } else {
                    return Err(Error::Config(format!("unknown configuration key `{k}`")));
                }
            }
        }
        let train: TrainConfig = Value::Table(train)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let model: ModelConfig = Value::Table(model)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        train.validate()?;
        Ok(Self { train, model })
    }

    pub fn parse_file_text(text: &str) -> Result<Table> {
        text.parse::<Table>()
            .map_err(|e| Error::Config(format!("config file: {e}")))
    }

    /// The flat, effective configuration (derived model keys omitted).
    pub fn to_table(&self) -> Result<Table> {
        let mut t = to_table(&self.train)?;
        for (k, v) in to_table(&self.model)? {
            if !DERIVED_MODEL_KEYS.contains(&k.as_str()) {
                t.insert(k, v);
            }
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        RunConfig::parse_file_text(text).unwrap()
    }

    #[test]
    fn later_layers_win() {
        let file = table("batch_size = 8\nlearning_rate = 1e-3\nd_model = 16\n");
        let cli = table("batch_size = 2\n");
        let c = RunConfig::from_layers(&[file, cli]).unwrap();
        assert_eq!(c.train.batch_size, 2);
        assert_eq!(c.train.learning_rate, 1e-3);
        assert_eq!(c.model.d_model, 16);
        assert_eq!(c.train.max_epochs, 120);
    }

    #[test]
    fn unknown_and_derived_keys_are_rejected() {
        assert!(RunConfig::from_layers(&[table("batchsize = 3\n")]).is_err());
        assert!(RunConfig::from_layers(&[table("outputs = 1\n")]).is_err());
    }

    #[test]
    fn integers_coerce_to_floats() {
        let c = RunConfig::from_layers(&[table("learning_rate = 1\ndropout = 0\n")]).unwrap();
        assert_eq!(c.train.learning_rate, 1.0);
        assert_eq!(c.model.dropout, 0.0);
    }

    #[test]
    fn effective_table_round_trips() {
        let c =
            RunConfig::from_layers(&[table("scaling = \"standard\"\nfusion_mode = \"prediction_mean\"\n")]).unwrap();
        let again = RunConfig::from_layers(&[c.to_table().unwrap()]).unwrap();
        assert_eq!(c, again);
    }
}
