//! Finite-difference checks of every layer and of the assembled model.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{FusionMode, GazeModel, ModelConfig};
use crate::neural::gradcheck::{random_input, random_projection};
use crate::neural::{
    check_layer, gradient_check, Activation, BiLstm, Dense, EncoderLayer, FeedForward, GradCheckReport, Layer,
    LayerNorm, MultiHeadAttention, Tensor,
};

pub const EPS: f64 = 1e-5;
pub const LINEAR_THRESHOLD: f64 = 1e-6;
pub const THRESHOLD: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub report: GradCheckReport,
    pub threshold: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.report.passes(self.threshold)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A small two-path model with dropout off, for gradient checks.
pub fn tiny_model_config(fusion_mode: FusionMode) -> ModelConfig {
    ModelConfig {
        feature_dim: 4,
        feature_dense: vec![5],
        d_model: 8,
        heads: 2,
        ffn_ratio: 2,
        language_dim: Some(3),
        lstm_hidden: 3,
        head_hidden: vec![4],
        dropout: 0.0,
        activation: Activation::Gelu,
        output_activation: Activation::Sigmoid,
        fusion_mode,
        outputs: 5,
    }
}

/// Checks a whole model under `Σ y ⊙ R` over all parameters and both inputs.
pub fn check_model(name: &str, model: &mut GazeModel<f64>, tokens: usize, seed: u64) -> Result<GradCheckReport> {
    let cfg = model.config().clone();
    let mut inputs = vec![random_input::<f64>(&[tokens, cfg.feature_dim], 1.0, seed)];
    if let Some(d) = cfg.language_dim {
        inputs.push(random_input::<f64>(&[tokens, d], 1.0, seed + 1));
    }
    let projection = random_projection::<f64>(&[tokens, cfg.outputs], seed + 2);
    gradient_check(
        name,
        model,
        &mut inputs,
        EPS,
        |m, xs| Ok(m.predict(&xs[0], xs.get(1))?.mul(&projection)?.sum()),
        |m, xs| {
            let (_, cache) = m.forward(&xs[0], xs.get(1), None)?;
            let g = m.backward(&cache, &projection)?;
            Ok(std::iter::once(g.features).chain(g.language).collect())
        },
    )
}

/// Encoder check whose backward omits the residual term: a negative control
/// that must fail.
pub fn broken_encoder_check() -> Result<GradCheckReport> {
    let mut layer = EncoderLayer::<f64>::new(8, 2, 2, Activation::Gelu, &mut rng(14))?;
    let projection = random_projection::<f64>(&[3, 8], 16);
    let mut inputs = vec![random_input::<f64>(&[3, 8], 1.0, 15)];
    gradient_check(
        "encoder_without_residual_grad",
        &mut layer,
        &mut inputs,
        EPS,
        |l, xs| Ok(l.apply(&xs[0])?.mul(&projection)?.sum()),
        |l, xs| {
            let (_, cache) = l.forward(&xs[0])?;
            let dx: Tensor<f64> = l.backward(&cache, &projection)?;
            Ok(vec![dx.sub(&projection)?])
        },
    )
}

/// Runs every check; with `inject_fault` the negative control is included and
/// the suite is expected to fail.
pub fn gradcheck_suite(inject_fault: bool) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let mut push = |report: GradCheckReport, threshold: f64| out.push(CheckResult { report, threshold });

    let mut dense = Dense::<f64>::new(3, 5, &mut rng(1));
    push(
        check_layer("dense", &mut dense, random_input(&[4, 3], 1.0, 2), EPS, 3)?,
        LINEAR_THRESHOLD,
    );

    let mut norm = LayerNorm::<f64>::new(6);
    norm.gain.value = random_input(&[6], 1.0, 4);
    norm.bias.value = random_input(&[6], 1.0, 5);
    push(
        check_layer("layer_norm", &mut norm, random_input(&[3, 6], 2.0, 6), EPS, 7)?,
        THRESHOLD,
    );

    let mut attn = MultiHeadAttention::<f64>::new(8, 2, &mut rng(8))?;
    push(
        check_layer("attention", &mut attn, random_input(&[3, 8], 1.0, 9), EPS, 10)?,
        THRESHOLD,
    );

    let mut ffn = FeedForward::<f64>::new(8, 16, Activation::Gelu, &mut rng(11));
    push(
        check_layer("ffn", &mut ffn, random_input(&[3, 8], 1.0, 12), EPS, 13)?,
        THRESHOLD,
    );

    let mut enc = EncoderLayer::<f64>::new(8, 2, 2, Activation::Gelu, &mut rng(14))?;
    push(
        check_layer("encoder", &mut enc, random_input(&[3, 8], 1.0, 15), EPS, 16)?,
        THRESHOLD,
    );

    let mut lstm = BiLstm::<f64>::new(5, 3, &mut rng(17));
    push(
        check_layer("bilstm", &mut lstm, random_input(&[4, 5], 1.0, 18), EPS, 19)?,
        THRESHOLD,
    );

    let mut sig = Activation::Sigmoid;
    let sig_input: Tensor<f64> = random_input(&[4, 3], 3.0, 20);
    push(check_layer("sigmoid", &mut sig, sig_input, EPS, 21)?, LINEAR_THRESHOLD);

    for (name, fusion, seed) in [
        ("model_representation_mean", FusionMode::RepresentationMean, 30),
        ("model_prediction_mean", FusionMode::PredictionMean, 40),
    ] {
        let mut m = GazeModel::<f64>::new(tiny_model_config(fusion), seed)?;
        push(check_model(name, &mut m, 4, seed)?, THRESHOLD);
    }
    let mut features_only = GazeModel::<f64>::new(
        ModelConfig {
            language_dim: None,
            ..tiny_model_config(FusionMode::RepresentationMean)
        },
        50,
    )?;
    push(
        check_model("model_features_only", &mut features_only, 3, 50)?,
        THRESHOLD,
    );

    if inject_fault {
        push(broken_encoder_check()?, THRESHOLD);
    }
    Ok(out)
}
