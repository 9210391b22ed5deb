use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{FusionMode, ModelConfig};
use crate::error::{Error, Result};
use crate::neural::dropout::dropout;
use crate::neural::encoder::EncoderCache;
use crate::neural::lstm::BiLstmCache;
use crate::neural::param::join;
use crate::neural::pool::mean_pool_backward;
use crate::neural::{
    mean_pool, sinusoidal_positions, Activation, BiLstm, Dense, DropoutKey, EncoderLayer, Layer, Param, Parameterized,
    Tensor,
};
use crate::scalar::Scalar;

/// Dense layers, each followed by an activation and dropout.
#[derive(Clone, Debug, PartialEq)]
struct Stack<T> {
    layers: Vec<Dense<T>>,
}

struct StackCache<T> {
    inputs: Vec<Tensor<T>>,
    pre: Vec<Tensor<T>>,
    masks: Vec<Option<Tensor<T>>>,
}

fn maybe_dropout<T: Scalar>(
    x: Tensor<T>,
    rate: f64,
    key: Option<DropoutKey>,
) -> Result<(Tensor<T>, Option<Tensor<T>>)> {
    match key {
        Some(k) if rate > 0.0 => {
            let (y, m) = dropout(&x, rate, k)?;
            Ok((y, Some(m)))
        }
        _ => Ok((x, None)),
    }
}

fn undo_dropout<T: Scalar>(dy: Tensor<T>, mask: &Option<Tensor<T>>) -> Result<Tensor<T>> {
    match mask {
        Some(m) => dy.mul(m),
        None => Ok(dy),
    }
}

impl<T: Scalar> Stack<T> {
    fn new(d_in: usize, widths: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let mut d = d_in;
        let layers = widths
            .iter()
            .map(|&w| {
                let l = Dense::new(d, w, rng);
                d = w;
                l
            })
            .collect();
        Self { layers }
    }

    fn d_out(&self, d_in: usize) -> usize {
        self.layers.last().map_or(d_in, Dense::d_out)
    }

    fn forward(
        &self,
        x: &Tensor<T>,
        act: Activation,
        rate: f64,
        key: Option<DropoutKey>,
    ) -> Result<(Tensor<T>, StackCache<T>)> {
        let mut cache = StackCache {
            inputs: Vec::new(),
            pre: Vec::new(),
            masks: Vec::new(),
        };
        let mut h = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.apply(&h)?;
            let a = z.map(|v| act.eval(v));
            let (out, mask) = maybe_dropout(a, rate, key.map(|k| k.derive(i as u64)))?;
            cache.inputs.push(h);
            cache.pre.push(z);
            cache.masks.push(mask);
            h = out;
        }
        Ok((h, cache))
    }

    fn backward(&mut self, cache: &StackCache<T>, dy: Tensor<T>, act: Activation) -> Result<Tensor<T>> {
        let mut g = dy;
        for i in (0..self.layers.len()).rev() {
            let da = undo_dropout(g, &cache.masks[i])?;
            let dz = da.zip_map(&cache.pre[i], |d, z| d * act.derivative(z))?;
            g = self.layers[i].backward(&cache.inputs[i], &dz)?;
        }
        Ok(g)
    }

    fn collect<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        for (i, l) in self.layers.iter().enumerate() {
            l.collect_params(&join(prefix, &format!("dense{i}")), out);
        }
    }

    fn collect_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.collect_params_mut(&join(prefix, &format!("dense{i}")), out);
        }
    }
}

/// Hidden stack followed by the output layer and output activation.
#[derive(Clone, Debug, PartialEq)]
struct Head<T> {
    hidden: Stack<T>,
    out: Dense<T>,
}

struct HeadCache<T> {
    hidden: StackCache<T>,
    out_input: Tensor<T>,
    pre: Tensor<T>,
}

impl<T: Scalar> Head<T> {
    fn new(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let hidden = Stack::new(cfg.d_model, &cfg.head_hidden, rng);
        let out = Dense::new(hidden.d_out(cfg.d_model), cfg.outputs, rng);
        Self { hidden, out }
    }

    fn forward(&self, x: &Tensor<T>, cfg: &ModelConfig, key: Option<DropoutKey>) -> Result<(Tensor<T>, HeadCache<T>)> {
        let (h, hidden) = self.hidden.forward(x, cfg.activation, cfg.dropout, key)?;
        let pre = self.out.apply(&h)?;
        let act = cfg.output_activation;
        let y = pre.map(|v| act.eval(v));
        Ok((
            y,
            HeadCache {
                hidden,
                out_input: h,
                pre,
            },
        ))
    }

    fn backward(&mut self, cache: &HeadCache<T>, dy: &Tensor<T>, cfg: &ModelConfig) -> Result<Tensor<T>> {
        let act = cfg.output_activation;
        let dpre = dy.zip_map(&cache.pre, |d, z| d * act.derivative(z))?;
        let dh = self.out.backward(&cache.out_input, &dpre)?;
        self.hidden.backward(&cache.hidden, dh, cfg.activation)
    }
}

/// The two-path per-token regressor.
///
/// Feature path: per-token dense stack, projection to `d_model`, sinusoidal
/// positions, one pre-norm encoder layer. Language path: BiLSTM over frozen
/// token vectors, projection to `d_model`. Outputs are in scaled target space.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeModel<T> {
    config: ModelConfig,
    feature_stack: Stack<T>,
    feature_proj: Dense<T>,
    encoder: EncoderLayer<T>,
    lstm: Option<BiLstm<T>>,
    language_proj: Option<Dense<T>>,
    heads: Vec<Head<T>>,
}

/// Everything the backward pass needs from one forward pass.
pub struct ModelCache<T> {
    features: StackCache<T>,
    proj_input: Tensor<T>,
    encoder: EncoderCache<T>,
    feature_mask: Option<Tensor<T>>,
    language: Option<LanguageCache<T>>,
    heads: Vec<HeadCache<T>>,
}

struct LanguageCache<T> {
    lstm: BiLstmCache<T>,
    mask: Option<Tensor<T>>,
    proj_input: Tensor<T>,
}

/// Gradients with respect to the model inputs.
pub struct InputGrads<T> {
    pub features: Tensor<T>,
    pub language: Option<Tensor<T>>,
}

type FeaturePath<T> = (Tensor<T>, StackCache<T>, Tensor<T>, EncoderCache<T>, Option<Tensor<T>>);

const SALT_FEATURE_STACK: u64 = 1;
const SALT_FEATURE_OUT: u64 = 2;
const SALT_LANGUAGE_OUT: u64 = 3;
const SALT_HEAD: u64 = 10;

impl<T: Scalar> GazeModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let feature_stack = Stack::new(config.feature_dim, &config.feature_dense, &mut rng);
        let feature_proj = Dense::new(feature_stack.d_out(config.feature_dim), config.d_model, &mut rng);
        let encoder = EncoderLayer::new(
            config.d_model,
            config.heads,
            config.ffn_ratio,
            config.activation,
            &mut rng,
        )?;
        let (lstm, language_proj) = match config.language_dim {
            Some(d) => {
                let lstm = BiLstm::new(d, config.lstm_hidden, &mut rng);
                let proj = Dense::new(lstm.output_dim(), config.d_model, &mut rng);
                (Some(lstm), Some(proj))
            }
            None => (None, None),
        };
        let n_heads = if config.has_language() && config.fusion_mode == FusionMode::PredictionMean {
            2
        } else {
            1
        };
        let heads = (0..n_heads).map(|_| Head::new(&config, &mut rng)).collect();
        Ok(Self {
            config,
            feature_stack,
            feature_proj,
            encoder,
            lstm,
            language_proj,
            heads,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// Returns the path output with its stack cache, projection input, encoder
    /// cache and dropout mask.
    fn feature_path(&self, x: &Tensor<T>, key: Option<DropoutKey>) -> Result<FeaturePath<T>> {
        if x.cols() != self.config.feature_dim {
            return Err(Error::shape(
                "feature path",
                format!(
                    "{} feature columns for a model trained on {}",
                    x.cols(),
                    self.config.feature_dim
                ),
            ));
        }
        let rate = self.config.dropout;
        let (h, stack) = self.feature_stack.forward(
            x,
            self.config.activation,
            rate,
            key.map(|k| k.derive(SALT_FEATURE_STACK)),
        )?;
        let p = self.feature_proj.apply(&h)?;
        let p = p.add(&sinusoidal_positions(p.rows(), p.cols()))?;
        let (e, enc) = self.encoder.forward(&p)?;
        let (a, mask) = maybe_dropout(e, rate, key.map(|k| k.derive(SALT_FEATURE_OUT)))?;
        Ok((a, stack, h, enc, mask))
    }

    fn language_path(&self, l: &Tensor<T>, key: Option<DropoutKey>) -> Result<(Tensor<T>, LanguageCache<T>)> {
        let (lstm, proj) = match (&self.lstm, &self.language_proj) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Config("model has no language path".into())),
        };
        let (s, lstm_cache) = lstm.forward(l)?;
        let (s, mask) = maybe_dropout(s, self.config.dropout, key.map(|k| k.derive(SALT_LANGUAGE_OUT)))?;
        let b = proj.apply(&s)?;
        Ok((
            b,
            LanguageCache {
                lstm: lstm_cache,
                mask,
                proj_input: s,
            },
        ))
    }

    /// Forward pass over one sentence. `features` is `[T × feature_dim]`,
    /// `language` is `[T × language_dim]` when the model has a language path.
    /// Dropout is active only when a key is given.
    pub fn forward(
        &self,
        features: &Tensor<T>,
        language: Option<&Tensor<T>>,
        key: Option<DropoutKey>,
    ) -> Result<(Tensor<T>, ModelCache<T>)> {
        let (a, fstack, proj_input, enc, fmask) = self.feature_path(features, key)?;
        let lang = match (self.config.has_language(), language) {
            (true, Some(l)) => {
                if l.rows() != features.rows() {
                    return Err(Error::Alignment {
                        what: "language rows",
                        expected: features.rows(),
                        got: l.rows(),
                    });
                }
                Some(self.language_path(l, key)?)
            }
            (true, None) => return Err(Error::Config("model expects language inputs".into())),
            (false, Some(_)) => return Err(Error::Config("model has no language path".into())),
            (false, None) => None,
        };
        let head_key = |i: usize| key.map(|k| k.derive(SALT_HEAD + i as u64));
        let (y, heads) = match (&lang, self.config.fusion_mode) {
            (None, _) => {
                let (y, c) = self.heads[0].forward(&a, &self.config, head_key(0))?;
                (y, vec![c])
            }
            (Some((b, _)), FusionMode::RepresentationMean) => {
                let fused = mean_pool(&a, b)?;
                let (y, c) = self.heads[0].forward(&fused, &self.config, head_key(0))?;
                (y, vec![c])
            }
            (Some((b, _)), FusionMode::PredictionMean) => {
                let (ya, ca) = self.heads[0].forward(&a, &self.config, head_key(0))?;
                let (yb, cb) = self.heads[1].forward(b, &self.config, head_key(1))?;
                (mean_pool(&ya, &yb)?, vec![ca, cb])
            }
        };
        y.check_finite("model output")?;
        Ok((
            y,
            ModelCache {
                features: fstack,
                proj_input,
                encoder: enc,
                feature_mask: fmask,
                language: lang.map(|(_, c)| c),
                heads,
            },
        ))
    }

    /// Inference without dropout.
    pub fn predict(&self, features: &Tensor<T>, language: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        self.forward(features, language, None).map(|(y, _)| y)
    }

    /// Accumulates parameter gradients for upstream gradient `dy` and returns the
    /// input gradients. The language inputs are frozen; their gradient is
    /// reported but never applied anywhere.
    pub fn backward(&mut self, cache: &ModelCache<T>, dy: &Tensor<T>) -> Result<InputGrads<T>> {
        let config = self.config.clone();
        let (da, db) = match (&cache.language, config.fusion_mode) {
            (None, _) => (self.heads[0].backward(&cache.heads[0], dy, &config)?, None),
            (Some(_), FusionMode::RepresentationMean) => {
                let dfused = self.heads[0].backward(&cache.heads[0], dy, &config)?;
                let half = mean_pool_backward(&dfused);
                (half.clone(), Some(half))
            }
            (Some(_), FusionMode::PredictionMean) => {
                let half = mean_pool_backward(dy);
                let da = self.heads[0].backward(&cache.heads[0], &half, &config)?;
                let db = self.heads[1].backward(&cache.heads[1], &half, &config)?;
                (da, Some(db))
            }
        };

        let de = undo_dropout(da, &cache.feature_mask)?;
        let dp = self.encoder.backward(&cache.encoder, &de)?;
        let dh = self.feature_proj.backward(&cache.proj_input, &dp)?;
        let dfeatures = self.feature_stack.backward(&cache.features, dh, config.activation)?;

        let dlanguage = match (&cache.language, db) {
            (Some(lc), Some(db)) => {
                let proj = self.language_proj.as_mut().expect("language path present");
                let ds = proj.backward(&lc.proj_input, &db)?;
                let ds = undo_dropout(ds, &lc.mask)?;
                let lstm = self.lstm.as_mut().expect("language path present");
                Some(lstm.backward(&lc.lstm, &ds)?)
            }
            _ => None,
        };
        Ok(InputGrads {
            features: dfeatures,
            language: dlanguage,
        })
    }

    /// Parameter names belonging to the language path.
    pub fn is_language_param(name: &str) -> bool {
        name.starts_with("language.")
    }
}

impl<T: Scalar> Parameterized<T> for GazeModel<T> {
    fn collect_params<'a>(&'a self, prefix: &str, out: &mut Vec<(String, &'a Param<T>)>) {
        self.feature_stack.collect(&join(prefix, "feature"), out);
        self.feature_proj.collect_params(&join(prefix, "feature.proj"), out);
        self.encoder.collect_params(&join(prefix, "feature.encoder"), out);
        if let Some(l) = &self.lstm {
            l.collect_params(&join(prefix, "language.lstm"), out);
        }
        if let Some(p) = &self.language_proj {
            p.collect_params(&join(prefix, "language.proj"), out);
        }
        for (i, h) in self.heads.iter().enumerate() {
            let name = join(prefix, &format!("head{i}"));
            h.hidden.collect(&name, out);
            h.out.collect_params(&join(&name, "out"), out);
        }
    }

    fn collect_params_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<(String, &'a mut Param<T>)>) {
        self.feature_stack.collect_mut(&join(prefix, "feature"), out);
        self.feature_proj.collect_params_mut(&join(prefix, "feature.proj"), out);
        self.encoder.collect_params_mut(&join(prefix, "feature.encoder"), out);
        if let Some(l) = &mut self.lstm {
            l.collect_params_mut(&join(prefix, "language.lstm"), out);
        }
        if let Some(p) = &mut self.language_proj {
            p.collect_params_mut(&join(prefix, "language.proj"), out);
        }
        for (i, h) in self.heads.iter_mut().enumerate() {
            let name = join(prefix, &format!("head{i}"));
            h.hidden.collect_mut(&name, out);
            h.out.collect_params_mut(&join(&name, "out"), out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::random_input;

    fn small(language: Option<usize>, fusion: FusionMode) -> ModelConfig {
        ModelConfig {
            feature_dim: 4,
            feature_dense: vec![6],
            d_model: 8,
            heads: 2,
            ffn_ratio: 2,
            language_dim: language,
            lstm_hidden: 3,
            head_hidden: vec![5],
            dropout: 0.1,
            fusion_mode: fusion,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn outputs_lie_in_sigmoid_range() {
        let m = GazeModel::<f64>::new(small(Some(3), FusionMode::RepresentationMean), 7).unwrap();
        let x = random_input::<f64>(&[5, 4], 50.0, 1);
        let l = random_input::<f64>(&[5, 3], 50.0, 2);
        let y = m.predict(&x, Some(&l)).unwrap();
        assert_eq!(y.shape(), &[5, 5]);
        assert!(y.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn single_token_sentence() {
        let m = GazeModel::<f64>::new(small(Some(3), FusionMode::PredictionMean), 7).unwrap();
        let y = m
            .predict(&random_input(&[1, 4], 1.0, 3), Some(&random_input(&[1, 3], 1.0, 4)))
            .unwrap();
        assert_eq!(y.shape(), &[1, 5]);
    }

    #[test]
    fn fusion_modes_differ() {
        let a = GazeModel::<f64>::new(small(Some(3), FusionMode::RepresentationMean), 7).unwrap();
        let b = GazeModel::<f64>::new(small(Some(3), FusionMode::PredictionMean), 7).unwrap();
        let x = random_input::<f64>(&[4, 4], 1.0, 5);
        let l = random_input::<f64>(&[4, 3], 1.0, 6);
        assert_ne!(a.predict(&x, Some(&l)).unwrap(), b.predict(&x, Some(&l)).unwrap());
    }

    #[test]
    fn width_mismatch_and_missing_language_are_errors() {
        let m = GazeModel::<f64>::new(small(Some(3), FusionMode::RepresentationMean), 7).unwrap();
        assert!(m
            .predict(&random_input(&[2, 5], 1.0, 1), Some(&random_input(&[2, 3], 1.0, 1)))
            .is_err());
        assert!(m.predict(&random_input(&[2, 4], 1.0, 1), None).is_err());
    }

    #[test]
    fn dropout_is_keyed() {
        let m = GazeModel::<f64>::new(small(None, FusionMode::RepresentationMean), 7).unwrap();
        let x = random_input::<f64>(&[3, 4], 1.0, 1);
        let key = Some(DropoutKey { seed: 1, stream: 2 });
        let (y1, _) = m.forward(&x, None, key).unwrap();
        let (y2, _) = m.forward(&x, None, key).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(m.predict(&x, None).unwrap(), m.predict(&x, None).unwrap());
    }
}
