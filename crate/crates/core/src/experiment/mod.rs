//! Dataset ingestion, experiment configuration, sweep orchestration and
//! results export.

mod config;
mod data;
mod export;
mod manifest;
mod runner;
mod synth;

pub use config::{
    ExperimentConfig, ModelSection, OutputSection, PathsSection, Snr, SweepSection,
    SyntheticSection, PRESETS,
};
pub use data::{
    featurize_clip, featurize_indices, load_dataset, load_features, noise_seed, save_features,
    AudioSource, ClipSource, Dataset,
};
pub use export::{
    export_results, read_results_csv, write_failures_csv, write_pivot_csv, write_results_csv,
    write_timings_csv, ExportedFiles, RESULTS_HEADER,
};
pub use manifest::{ingest, DatasetManifest, ManifestEntry, Split};
pub use runner::{
    cell_seed, grid, prepare_cell, qvae_augment, run_cell, run_experiment, train_cell, Cell,
    CellData, CellOutcome, ResultRow, RowMetrics, VAL_FRACTION,
};
pub use synth::{synthetic_corpus, SyntheticClip, SyntheticCorpus, SyntheticSpec};
