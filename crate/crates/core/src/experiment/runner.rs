use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Snr};
use super::data::{featurize_indices, load_dataset, Dataset};
use super::manifest::Split;
use crate::error::{Error, Result};
use crate::qit::QitModel;
use crate::qvae::{generate_augmented, train_qvae};
use crate::seed::{derive_seed, derive_seed_path};
use crate::train::{
    evaluate, stratified_split, stratified_subsample, train_model, LabeledClip, MetricsReport,
    TrainConfig, TrainHistory,
};

const STREAM_SUBSAMPLE: u64 = 0xB0;
const STREAM_CELL: u64 = 0xB1;
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_QVAE: u64 = 3;
const STREAM_GENERATE: u64 = 4;

/// Share of the subsampled training clips held out for validation.
pub const VAL_FRACTION: f64 = 0.2;

/// One point of the sweep grid. Cells are numbered SNR-major in config order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub snr: Snr,
    pub fraction_index: usize,
    pub fraction: f64,
}

pub fn grid(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &snr in &cfg.sweep.snr_list {
        for (fraction_index, &fraction) in cfg.sweep.fraction_list.iter().enumerate() {
            cells.push(Cell {
                index: cells.len(),
                snr,
                fraction_index,
                fraction,
            });
        }
    }
    cells
}

/// Macro-averaged test metrics of one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<&MetricsReport> for RowMetrics {
    fn from(m: &MetricsReport) -> Self {
        Self {
            accuracy: m.accuracy,
            precision: m.macro_precision,
            recall: m.macro_recall,
            f1: m.macro_f1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub config: String,
    pub snr: Snr,
    pub fraction: f64,
    /// `None` for a failed cell.
    pub metrics: Option<RowMetrics>,
    /// Value written to the `seconds` column: the wall clock when recording
    /// is enabled, zero otherwise so results stay byte-reproducible.
    pub seconds: f64,
    pub wall_seconds: f64,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Clips of one cell after subsampling, noise and augmentation.
#[derive(Clone, Debug, Default)]
pub struct CellData {
    pub train: Vec<LabeledClip>,
    pub val: Vec<LabeledClip>,
    pub test: Vec<LabeledClip>,
    pub augment: Vec<LabeledClip>,
}

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub model: QitModel,
    pub history: TrainHistory,
    pub report: MetricsReport,
}

/// Seed for a cell's model initialization, shuffling and QVAE. It depends
/// on the global seed and the cell's fraction but not its SNR, so the cells
/// of one noise sweep differ only in the noise level.
pub fn cell_seed(cfg: &ExperimentConfig, cell: &Cell) -> u64 {
    derive_seed_path(cfg.seed, &[STREAM_CELL, cell.fraction_index as u64])
}

/// Subsamples, splits and featurizes the data of one cell, and generates
/// QVAE samples when the model block asks for them.
///
/// The subsample depends on the fraction but not on the SNR, so a noise
/// sweep compares models trained on the same clips.
pub fn prepare_cell(cfg: &ExperimentConfig, ds: &Dataset, cell: &Cell) -> Result<CellData> {
    let train_idx = ds.indices(Split::Train);
    let labels: Vec<usize> = train_idx.iter().map(|&i| ds.clips[i].label).collect();
    let sub_seed = derive_seed_path(cfg.seed, &[STREAM_SUBSAMPLE, cell.fraction_index as u64]);
    let picked = stratified_subsample(&labels, cell.fraction, sub_seed);
    let picked_labels: Vec<usize> = picked.iter().map(|&k| labels[k]).collect();
    let (fit, val) = stratified_split(&picked_labels, VAL_FRACTION, derive_seed(sub_seed, 1));
    if fit.is_empty() || val.is_empty() {
        return Err(Error::InvalidTrainingSet(format!(
            "fraction {} leaves {} training and {} validation clips",
            cell.fraction,
            fit.len(),
            val.len()
        )));
    }
    let to_ds = |ks: &[usize]| -> Vec<usize> { ks.iter().map(|&k| train_idx[picked[k]]).collect() };
    let train = featurize_indices(ds, &to_ds(&fit), cfg, cell.snr)?;
    let val = featurize_indices(ds, &to_ds(&val), cfg, cell.snr)?;
    let test = featurize_indices(ds, &ds.indices(Split::Test), cfg, cell.snr)?;
    let augment = if cfg.model.use_qvae {
        qvae_augment(cfg, ds.n_classes(), &train, cell_seed(cfg, cell))?
    } else {
        Vec::new()
    };
    Ok(CellData {
        train,
        val,
        test,
        augment,
    })
}

/// Trains one QVAE per class on that class's training patches and returns
/// `round(samples_per_real · n_class)` generated clips per class. Generated
/// audio is featurized as is; it already carries the noise of its sources.
pub fn qvae_augment(
    cfg: &ExperimentConfig,
    n_classes: usize,
    train: &[LabeledClip],
    seed: u64,
) -> Result<Vec<LabeledClip>> {
    let extractor = cfg.audio.extractor(cfg.model.patch_size)?;
    let mut out = Vec::new();
    for class in 0..n_classes {
        let clips: Vec<&LabeledClip> = train.iter().filter(|c| c.label == class).collect();
        let n = (cfg.qvae.samples_per_real * clips.len() as f64).round() as usize;
        if n == 0 {
            continue;
        }
        let patches: Vec<_> = clips
            .iter()
            .flat_map(|c| c.patches.iter().cloned())
            .collect();
        let class_seed = derive_seed_path(seed, &[STREAM_QVAE, class as u64]);
        let (qvae, losses) = train_qvae(&patches, &cfg.qvae, cfg.audio, class_seed)?;
        if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
            log::info!(
                "class {class}: QVAE loss {:.4} -> {:.4} over {} patches",
                first.total,
                last.total,
                patches.len()
            );
        }
        let generated =
            generate_augmented(n, class, &qvae, derive_seed(class_seed, STREAM_GENERATE))?;
        for item in generated.items {
            out.push(LabeledClip {
                patches: extractor.patches(&item.wave)?,
                label: class,
            });
        }
    }
    Ok(out)
}

/// Builds a fresh model for the cell with input normalization fitted on the
/// real training clips, trains it and scores it on the test split.
pub fn train_cell(
    cfg: &ExperimentConfig,
    n_classes: usize,
    data: &CellData,
    seed: u64,
) -> Result<CellOutcome> {
    let mut model = QitModel::new(
        cfg.model.qit_config(n_classes)?,
        derive_seed(seed, STREAM_INIT),
    )?;
    model.projection.fit_input_normalization(
        data.train
            .iter()
            .flat_map(|c| c.patches.iter().map(|p| p.values.as_slice())),
    )?;
    let train_config = TrainConfig {
        seed: derive_seed(seed, STREAM_SHUFFLE),
        ..cfg.train
    };
    let augment = (!data.augment.is_empty()).then_some(data.augment.as_slice());
    let (model, history) = train_model(&data.train, &data.val, model, &train_config, augment)?;
    let report = evaluate(&model, &data.test)?;
    Ok(CellOutcome {
        model,
        history,
        report,
    })
}

pub fn run_cell(cfg: &ExperimentConfig, ds: &Dataset, cell: &Cell) -> Result<CellOutcome> {
    let data = prepare_cell(cfg, ds, cell)?;
    train_cell(cfg, ds.n_classes(), &data, cell_seed(cfg, cell))
}

fn guarded<T>(f: impl FnOnce() -> Result<T>) -> Result<T> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Err(Error::InvalidArgument(format!("cell panicked: {msg}")))
        }
    }
}

/// Runs every grid cell. A failing cell yields a row with its error and no
/// metrics; the other cells are unaffected. Rows come back in grid order
/// whether or not cells ran in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let ds = load_dataset(cfg)?;
    let cells = grid(cfg);
    let run = |cell: &Cell| -> ResultRow {
        let start = Instant::now();
        let outcome = guarded(|| run_cell(cfg, &ds, cell));
        let wall_seconds = start.elapsed().as_secs_f64();
        let (metrics, error) = match outcome {
            Ok(o) => {
                log::info!(
                    "{} snr {} fraction {}: accuracy {:.4}",
                    cfg.name,
                    cell.snr.label(),
                    cell.fraction,
                    o.report.accuracy
                );
                (Some(RowMetrics::from(&o.report)), None)
            }
            Err(e) => {
                log::error!(
                    "{} snr {} fraction {} failed: {e}",
                    cfg.name,
                    cell.snr.label(),
                    cell.fraction
                );
                (None, Some(e.to_string()))
            }
        };
        ResultRow {
            config: cfg.name.clone(),
            snr: cell.snr,
            fraction: cell.fraction,
            metrics,
            seconds: if cfg.output.record_wall_clock {
                wall_seconds
            } else {
                0.0
            },
            wall_seconds,
            error,
        }
    };
    Ok(if cfg.output.parallel_cells {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.synthetic.clips_per_class = 6;
        cfg.synthetic.test_per_class = 2;
        cfg.synthetic.duration_secs = 1.0;
        cfg.model.n_qubits = 2;
        cfg.model.n_layers = 1;
        cfg.model.patch_size = 16;
        cfg.train.max_epochs = 2;
        cfg
    }

    #[test]
    fn one_cell_gives_one_row() {
        let rows = run_experiment(&tiny()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].failed(), "{:?}", rows[0].error);
        assert_eq!(rows[0].seconds, 0.0);
    }

    #[test]
    fn grid_is_snr_major() {
        let mut cfg = tiny();
        cfg.sweep.snr_list = vec![Snr(5.0), Snr::CLEAN];
        cfg.sweep.fraction_list = vec![0.5, 1.0];
        let g = grid(&cfg);
        assert_eq!(g.len(), 4);
        assert_eq!((g[1].snr, g[1].fraction_index), (Snr(5.0), 1));
        assert_eq!(g[2].snr, Snr::CLEAN);
        assert_eq!(g[3].index, 3);
    }

    #[test]
    fn fraction_subsample_is_stratified() {
        let mut cfg = tiny();
        cfg.synthetic.n_classes = 2;
        cfg.synthetic.clips_per_class = 60;
        cfg.synthetic.test_per_class = 10;
        cfg.synthetic.duration_secs = 0.5;
        let ds = load_dataset(&cfg).unwrap();
        let cell = Cell {
            index: 0,
            snr: Snr::CLEAN,
            fraction_index: 0,
            fraction: 0.1,
        };
        let data = prepare_cell(&cfg, &ds, &cell).unwrap();
        // 100 training clips at 10% is 5 per class, one of which validates
        assert_eq!(data.train.len() + data.val.len(), 10);
        for class in 0..2 {
            let n = data
                .train
                .iter()
                .chain(&data.val)
                .filter(|c| c.label == class)
                .count();
            assert_eq!(n, 5);
            assert_eq!(data.val.iter().filter(|c| c.label == class).count(), 1);
        }
    }

    #[test]
    fn failing_cell_is_isolated() {
        let mut cfg = tiny();
        // one training clip per class at this fraction cannot also validate
        cfg.sweep.fraction_list = vec![0.05, 1.0];
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].failed());
        assert!(rows[0].metrics.is_none());
        assert!(!rows[1].failed());
    }

    #[test]
    fn qvae_cell_adds_generated_clips() {
        let mut cfg = tiny();
        cfg.model.use_qvae = true;
        cfg.qvae.epochs = 2;
        cfg.qvae.griffin_lim_iters = 2;
        let ds = load_dataset(&cfg).unwrap();
        let cell = grid(&cfg)[0];
        let data = prepare_cell(&cfg, &ds, &cell).unwrap();
        assert_eq!(data.augment.len(), data.train.len());
        assert!(data.augment.iter().all(|c| !c.patches.is_empty()));
        let again = prepare_cell(&cfg, &ds, &cell).unwrap();
        assert_eq!(data.augment, again.augment);
    }
}
