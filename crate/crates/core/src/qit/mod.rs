//! Quantum-inspired transformer: patch embedding into a register,
//! fidelity-weighted attention, circuit feedforward, measurement pooling and
//! a softmax head.

mod checkpoint;
mod forward;
mod gradient;
mod model;

pub use forward::{
    argmax, attend, attention_scores, classify, encode_patch, feedforward, forward, pool,
    AttentionMatrix, Classification, EncodedInput, ForwardOutput, ForwardTrace, LayerTrace,
    PooledFeatures,
};
pub use gradient::{batch_gradient, clip_loss, model_gradient, LossAndGradient, ModelGradient};
pub use model::{EncodingMode, PatchProjection, PoolingMode, QitConfig, QitModel};
