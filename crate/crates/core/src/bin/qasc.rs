use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qasc::audio::write_wav;
use qasc::experiment::{
    export_results, featurize_indices, grid, ingest, load_dataset, prepare_cell, read_results_csv,
    run_experiment, save_features, train_cell, Cell, ExperimentConfig, Snr, Split, PRESETS,
};
use qasc::qit::QitModel;
use qasc::qvae::{generate_augmented, train_qvae};
use qasc::seed::derive_seed_path;
use qasc::train::evaluate;
use qasc::Error;

#[derive(Parser)]
#[command(
    name = "qasc",
    version,
    about = "Quantum-inspired transformer acoustic scene classification"
)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration used when --config is absent.
    #[arg(long, global = true, default_value = "baseline")]
    preset: String,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tab-separated manifest and summarize it.
    Ingest { manifest: PathBuf },
    /// Write the per-clip feature cache of the configured dataset.
    Featurize {
        #[arg(long, default_value = "clean")]
        snr: String,
    },
    /// Train one classifier and save its checkpoint and history.
    Train {
        #[arg(long, default_value = "clean")]
        snr: String,
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
    },
    /// Train one QVAE per class on the training split and write generated audio.
    Augment,
    /// Score a saved checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "clean")]
        snr: String,
    },
    /// Run the configured SNR × fraction grid and export the results.
    Sweep,
    /// Rebuild the exported tables from an existing results.csv.
    Export {
        #[arg(long)]
        results: PathBuf,
    },
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn parse_snr(text: &str) -> qasc::Result<Snr> {
    if text.eq_ignore_ascii_case("clean") {
        return Ok(Snr::CLEAN);
    }
    text.parse()
        .ok()
        .filter(|x: &f64| x.is_finite())
        .map(Snr)
        .ok_or_else(|| Error::InvalidConfig(format!("bad SNR {text:?}")))
}

fn load_config(cli: &Cli) -> qasc::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(&cli.preset)?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.output_dir = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn single_cell(cfg: &ExperimentConfig, snr: Snr, fraction: f64) -> qasc::Result<Cell> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig("fraction must lie in (0, 1]".into()));
    }
    let mut cell = grid(cfg)[0];
    cell.snr = snr;
    cell.fraction = fraction;
    Ok(cell)
}

fn print_metrics(report: &qasc::train::MetricsReport) {
    println!(
        "accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
        report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1
    );
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> qasc::Result<PathBuf> {
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir.join(name))
}

fn cmd_ingest(manifest: &Path) -> qasc::Result<()> {
    let m = ingest(manifest)?;
    println!("{} entries, {} classes", m.entries.len(), m.n_classes());
    let labels = m.labels();
    for (k, name) in m.class_names.iter().enumerate() {
        let count = |split| {
            m.entries
                .iter()
                .zip(&labels)
                .filter(|(e, &l)| l == k && e.split == split)
                .count()
        };
        println!(
            "{k:>3}  {name:<24} train {:>5}  test {:>5}",
            count(Split::Train),
            count(Split::Test)
        );
    }
    Ok(())
}

fn cmd_featurize(cfg: &ExperimentConfig, snr: Snr) -> qasc::Result<()> {
    let ds = load_dataset(cfg)?;
    let dir = out_path(cfg, "features")?;
    std::fs::create_dir_all(&dir)?;
    let all: Vec<usize> = (0..ds.clips.len()).collect();
    let clips = featurize_indices(&ds, &all, cfg, snr)?;
    for (source, clip) in ds.clips.iter().zip(&clips) {
        save_features(dir.join(format!("{}.qasc", source.name)), clip)?;
    }
    println!("wrote {} feature files to {}", clips.len(), dir.display());
    Ok(())
}

fn cmd_train(cfg: &ExperimentConfig, snr: Snr, fraction: f64) -> qasc::Result<()> {
    let ds = load_dataset(cfg)?;
    let cell = single_cell(cfg, snr, fraction)?;
    let data = prepare_cell(cfg, &ds, &cell)?;
    let outcome = train_cell(
        cfg,
        ds.n_classes(),
        &data,
        qasc::experiment::cell_seed(cfg, &cell),
    )?;
    let model_path = out_path(cfg, "model.qasc")?;
    outcome.model.save(&model_path)?;
    outcome.history.save_csv(out_path(cfg, "history.csv")?)?;
    println!(
        "{} epochs, best epoch {}, saved {}",
        outcome.history.records.len(),
        outcome.history.best_epoch,
        model_path.display()
    );
    print_metrics(&outcome.report);
    Ok(())
}

fn cmd_augment(cfg: &ExperimentConfig) -> qasc::Result<()> {
    let ds = load_dataset(cfg)?;
    let train_idx = ds.indices(Split::Train);
    let clips = featurize_indices(&ds, &train_idx, cfg, Snr::CLEAN)?;
    let dir = out_path(cfg, "augment")?;
    std::fs::create_dir_all(&dir)?;
    for (class, name) in ds.class_names.iter().enumerate() {
        let own: Vec<_> = clips.iter().filter(|c| c.label == class).collect();
        let patches: Vec<_> = own.iter().flat_map(|c| c.patches.iter().cloned()).collect();
        if patches.is_empty() {
            continue;
        }
        let seed = derive_seed_path(cfg.seed, &[0xC0, class as u64]);
        let (model, losses) = train_qvae(&patches, &cfg.qvae, cfg.audio, seed)?;
        model.save(dir.join(format!("qvae_{name}.qvae")))?;
        let n = (cfg.qvae.samples_per_real * own.len() as f64).round() as usize;
        let generated = generate_augmented(n, class, &model, derive_seed_path(seed, &[1]))?;
        for (i, item) in generated.items.iter().enumerate() {
            write_wav(dir.join(format!("{name}_{i:04}.wav")), &item.wave)?;
        }
        println!(
            "{name}: loss {:.4} -> {:.4}, {} clips",
            losses.first().map_or(f64::NAN, |l| l.total),
            losses.last().map_or(f64::NAN, |l| l.total),
            generated.len()
        );
    }
    Ok(())
}

fn cmd_evaluate(cfg: &ExperimentConfig, model_path: &Path, snr: Snr) -> qasc::Result<()> {
    let model = QitModel::load(model_path)?;
    let ds = load_dataset(cfg)?;
    if model.config.n_classes != ds.n_classes() {
        return Err(Error::InvalidConfig(format!(
            "checkpoint has {} classes, dataset {}",
            model.config.n_classes,
            ds.n_classes()
        )));
    }
    let mut cfg = cfg.clone();
    cfg.model.patch_size = model.config.patch_size;
    let test = featurize_indices(&ds, &ds.indices(Split::Test), &cfg, snr)?;
    print_metrics(&evaluate(&model, &test)?);
    Ok(())
}

/// Returns true when every cell succeeded.
fn cmd_sweep(cfg: &ExperimentConfig) -> qasc::Result<bool> {
    let rows = run_experiment(cfg)?;
    let files = export_results(&rows, cfg.output_dir())?;
    let failed = rows.iter().filter(|r| r.failed()).count();
    println!(
        "{} cells, {} failed; wrote {}",
        rows.len(),
        failed,
        files.results.display()
    );
    Ok(failed == 0)
}

fn cmd_export(cfg: &ExperimentConfig, results: &Path) -> qasc::Result<bool> {
    let rows = read_results_csv(results)?;
    let files = export_results(&rows, cfg.output_dir())?;
    println!("wrote {}", files.pivot.display());
    Ok(rows.iter().all(|r| !r.failed()))
}

fn run(cli: &Cli) -> qasc::Result<bool> {
    if let Command::Ingest { manifest } = &cli.command {
        cmd_ingest(manifest)?;
        return Ok(true);
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Ingest { .. } => unreachable!(),
        Command::Featurize { snr } => cmd_featurize(&cfg, parse_snr(snr)?)?,
        Command::Train { snr, fraction } => cmd_train(&cfg, parse_snr(snr)?, *fraction)?,
        Command::Augment => cmd_augment(&cfg)?,
        Command::Evaluate { model, snr } => cmd_evaluate(&cfg, model, parse_snr(snr)?)?,
        Command::Sweep => return cmd_sweep(&cfg),
        Command::Export { results } => return cmd_export(&cfg, results),
        Command::ShowConfig => print!("{}", cfg.to_toml()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.config.is_none() && !PRESETS.contains(&cli.preset.as_str()) {
        eprintln!("error: unknown preset {:?}; known: {PRESETS:?}", cli.preset);
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
