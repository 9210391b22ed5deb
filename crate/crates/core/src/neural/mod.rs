//! Minimal tensor and layer kernel with explicit forward and backward passes.

pub mod activation;
pub mod attention;
pub mod checkpoint;
pub mod dense;
pub mod dropout;
pub mod encoder;
pub mod gradcheck;
pub mod layer;
pub mod lstm;
pub mod norm;
pub mod optim;
pub mod param;
pub mod pool;
pub mod tensor;

pub use activation::{sigmoid, Activation};
pub use attention::MultiHeadAttention;
pub use dense::Dense;
pub use dropout::{dropout, DropoutKey};
pub use encoder::{sinusoidal_positions, EncoderLayer, FeedForward};
pub use gradcheck::{check_layer, gradient_check, relative_error, GradCheckReport};
pub use layer::Layer;
pub use lstm::{BiLstm, LstmCell};
pub use norm::LayerNorm;
pub use optim::{lr_at_step, AdamW, AdamWConfig};
pub use param::{Param, Parameterized};
pub use pool::mean_pool;
pub use tensor::Tensor;
