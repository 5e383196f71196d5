//! Supervised training of the QiT classifier and its evaluation metrics.

mod loss;
mod metrics;
mod optim;
mod split;
mod trainer;

pub use loss::{cross_entropy, cross_entropy_logit_grad, softmax, PROB_FLOOR};
pub use metrics::{ClassMetrics, MetricsReport};
pub use optim::{
    adam_step, AdamState, EarlyStopping, PlateauScheduler, StopDecision, ADAM_BETA1, ADAM_BETA2,
    ADAM_EPS, IMPROVEMENT_EPS,
};
pub use split::{stratified_split, stratified_subsample};
pub use trainer::{
    evaluate, predict, train_model, EpochRecord, LabeledClip, TrainConfig, TrainHistory,
};
