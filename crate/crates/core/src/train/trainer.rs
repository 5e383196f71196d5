use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use super::optim::{adam_step, AdamState, EarlyStopping, PlateauScheduler, StopDecision};
use crate::audio::MelPatch;
use crate::error::{Error, Result};
use crate::qit::{batch_gradient, forward, QitModel};

/// One clip as a patch sequence with its class index.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledClip {
    pub patches: Vec<MelPatch>,
    pub label: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub scheduler_factor: f64,
    pub scheduler_patience: usize,
    pub early_stop_patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            scheduler_factor: 0.5,
            scheduler_patience: 10,
            early_stop_patience: 5,
            max_epochs: 50,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.scheduler_factor > 0.0 && self.scheduler_factor < 1.0) {
            return Err(Error::InvalidConfig(
                "scheduler_factor must lie in (0, 1)".into(),
            ));
        }
        if self.scheduler_patience < 1 || self.early_stop_patience < 1 {
            return Err(Error::InvalidConfig(
                "patience values must be at least 1".into(),
            ));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(
                "learning_rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Validation accuracy of the untrained model.
    pub baseline_accuracy: f64,
    /// 0 when no epoch beat the untrained model.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["epoch", "train_loss", "val_accuracy", "lr"])?;
        for r in &self.records {
            out.write_record([
                r.epoch.to_string(),
                r.train_loss.to_string(),
                r.val_accuracy.to_string(),
                r.lr.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Predicted class of every clip, in input order.
pub fn predict(model: &QitModel, clips: &[LabeledClip]) -> Result<Vec<usize>> {
    clips
        .par_iter()
        .map(|c| forward(&c.patches, model).map(|o| o.label))
        .collect()
}

pub fn evaluate(model: &QitModel, clips: &[LabeledClip]) -> Result<MetricsReport> {
    if clips.is_empty() {
        return Err(Error::InvalidTrainingSet(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    let predictions = predict(model, clips)?;
    let labels: Vec<usize> = clips.iter().map(|c| c.label).collect();
    MetricsReport::from_predictions(&labels, &predictions, model.config.n_classes)
}

fn accuracy(model: &QitModel, clips: &[LabeledClip]) -> Result<f64> {
    Ok(evaluate(model, clips)?.accuracy)
}

/// Adam training with plateau halving and early stopping on validation
/// accuracy. Returns the best-validation model (earliest on ties; the
/// untrained model if nothing improved) and the per-epoch history.
pub fn train_model(
    train: &[LabeledClip],
    val: &[LabeledClip],
    mut model: QitModel,
    config: &TrainConfig,
    augment: Option<&[LabeledClip]>,
) -> Result<(QitModel, TrainHistory)> {
    config.validate()?;
    model.validate()?;
    if config.max_epochs == 0 {
        return Ok((model, TrainHistory::default()));
    }
    let mut items: Vec<&LabeledClip> = train.iter().collect();
    items.extend(augment.unwrap_or(&[]).iter());
    if items.is_empty() {
        return Err(Error::InvalidTrainingSet("training set is empty".into()));
    }
    if val.is_empty() {
        return Err(Error::InvalidTrainingSet("validation set is empty".into()));
    }
    let c = model.config.n_classes;
    if let Some(bad) = items
        .iter()
        .chain(val.iter().collect::<Vec<_>>().iter())
        .find(|x| x.label >= c)
    {
        return Err(Error::InvalidTrainingSet(format!(
            "label {} outside 0..{c}",
            bad.label
        )));
    }
    if items.iter().any(|x| x.patches.is_empty()) {
        return Err(Error::InvalidTrainingSet(
            "a training clip has no patches".into(),
        ));
    }

    let baseline = accuracy(&model, val)?;
    let mut scheduler = PlateauScheduler::new(
        config.learning_rate,
        config.scheduler_factor,
        config.scheduler_patience,
        baseline,
    );
    let mut stopper = EarlyStopping::new(config.early_stop_patience, baseline);
    let mut history = TrainHistory {
        baseline_accuracy: baseline,
        ..TrainHistory::default()
    };
    let mut best = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..items.len()).collect();
    let mut params = model.params_flat();
    let mut adam = AdamState::new(params.len());
    let mut lr = config.learning_rate;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[MelPatch], usize)> = chunk
                .iter()
                .map(|&i| (items[i].patches.as_slice(), items[i].label))
                .collect();
            let (loss, grads) = batch_gradient(&batch, &model)?;
            loss_sum += loss * chunk.len() as f64;
            adam_step(&mut params, &grads, &mut adam, lr);
            model.set_params_flat(&params)?;
        }
        let train_loss = loss_sum / items.len() as f64;
        let val_accuracy = accuracy(&model, val)?;
        history.records.push(EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
            lr,
        });
        log::info!("epoch {epoch}: loss {train_loss:.4} val_acc {val_accuracy:.4} lr {lr}");
        let decision = stopper.check(epoch, val_accuracy);
        if stopper.best_epoch() == epoch {
            best = model.clone();
        }
        lr = scheduler.step(val_accuracy);
        if decision == StopDecision::Stop {
            history.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    history.best_epoch = stopper.best_epoch();
    Ok((best, history))
}
