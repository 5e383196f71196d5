//! End-to-end runs of the `qasc` binary and the experiment API on a small
//! synthetic corpus and on a WAV manifest.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qasc::audio::{write_wav, Waveform};
use qasc::experiment::{
    export_results, load_features, read_results_csv, run_experiment, ExperimentConfig,
};

const SMALL: &str = r#"
name = "small"
seed = 3

[model]
n_qubits = 3
n_layers = 1
patch_size = 8

[audio]
n_fft = 128
hop = 64

[train]
learning_rate = 0.02
max_epochs = 4
batch_size = 4

[synthetic]
n_classes = 3
clips_per_class = 8
test_per_class = 2
duration_secs = 0.5

[qvae]
epochs = 2
hidden = 8
griffin_lim_iters = 4

[sweep]
snr_list = [10.0, "clean"]
fraction_list = [0.5, 1.0]
"#;

fn qasc(dir: &Path, args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_qasc"))
        .args(args)
        .env("RUST_LOG", "error")
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        out.status.code().is_some(),
        "killed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn repeated_sweeps_write_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    for out in ["a", "b"] {
        let o = qasc(dir.path(), &["--config", &cfg, "--out", out, "sweep"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let a = fs::read(dir.path().join("a/results.csv")).unwrap();
    let b = fs::read(dir.path().join("b/results.csv")).unwrap();
    assert_eq!(a, b);
    let rows = read_results_csv(dir.path().join("a/results.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.metrics.is_some()));
    let pivot = fs::read_to_string(dir.path().join("a/metrics_by_config.csv")).unwrap();
    assert!(pivot.starts_with("config,fraction,10dB,clean\n"));
    assert!(!dir.path().join("a/failures.csv").exists());
}

#[test]
fn parallel_and_serial_cells_agree() {
    let mut cfg = ExperimentConfig::from_toml(SMALL).unwrap();
    cfg.sweep.snr_list.truncate(1);
    cfg.output.parallel_cells = true;
    let par = run_experiment(&cfg).unwrap();
    cfg.output.parallel_cells = false;
    let ser = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let a = export_results(&par, dir.path().join("p")).unwrap();
    let b = export_results(&ser, dir.path().join("s")).unwrap();
    assert_eq!(fs::read(a.results).unwrap(), fs::read(b.results).unwrap());
}

#[test]
fn qvae_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let cfg = fs::read_to_string(&cfg)
        .unwrap()
        .replace("patch_size = 8", "patch_size = 8\nuse_qvae = true")
        .replace("fraction_list = [0.5, 1.0]", "fraction_list = [0.5]");
    fs::write(dir.path().join("q.toml"), cfg).unwrap();
    for out in ["a", "b"] {
        let o = qasc(dir.path(), &["--config", "q.toml", "--out", out, "sweep"]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert_eq!(
        fs::read(dir.path().join("a/results.csv")).unwrap(),
        fs::read(dir.path().join("b/results.csv")).unwrap()
    );
}

#[test]
fn failed_cell_gives_exit_code_two_and_a_failure_list() {
    let dir = tempfile::tempdir().unwrap();
    // one clip per class leaves nothing for validation
    let cfg = write_config(dir.path(), "");
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("fraction_list = [0.5, 1.0]", "fraction_list = [0.1, 1.0]")
        .replace("snr_list = [10.0, \"clean\"]", "snr_list = [\"clean\"]");
    fs::write(&cfg, text).unwrap();
    let o = qasc(dir.path(), &["--config", &cfg, "--out", "o", "sweep"]);
    assert_eq!(o.status.code(), Some(2));
    let failures = fs::read_to_string(dir.path().join("o/failures.csv")).unwrap();
    assert_eq!(failures.lines().count(), 2);
    let rows = read_results_csv(dir.path().join("o/results.csv")).unwrap();
    assert!(rows[0].failed() && !rows[1].failed());
}

#[test]
fn train_then_evaluate_reports_the_same_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let t = qasc(
        dir.path(),
        &["--config", &cfg, "--out", "o", "train", "--snr", "10"],
    );
    assert_eq!(
        t.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&t.stderr)
    );
    let e = qasc(
        dir.path(),
        &[
            "--config",
            &cfg,
            "--out",
            "o",
            "evaluate",
            "--model",
            "o/model.qasc",
            "--snr",
            "10",
        ],
    );
    assert_eq!(
        e.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&e.stderr)
    );
    let metrics = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("accuracy"))
            .unwrap()
            .to_string()
    };
    assert_eq!(metrics(&t), metrics(&e));
    let history = fs::read_to_string(dir.path().join("o/history.csv")).unwrap();
    assert!(history.starts_with("epoch,train_loss,val_accuracy,lr\n"));
}

#[test]
fn featurize_and_augment_write_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let f = qasc(dir.path(), &["--config", &cfg, "--out", "o", "featurize"]);
    assert_eq!(f.status.code(), Some(0));
    let files: Vec<_> = fs::read_dir(dir.path().join("o/features"))
        .unwrap()
        .collect();
    assert_eq!(files.len(), 24);
    let clip = load_features(files[0].as_ref().unwrap().path()).unwrap();
    assert_eq!(clip.patches[0].p, 8);

    let a = qasc(dir.path(), &["--config", &cfg, "--out", "o", "augment"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let names: Vec<String> = fs::read_dir(dir.path().join("o/augment"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".qvae")).count(), 3);
    assert_eq!(names.iter().filter(|n| n.ends_with(".wav")).count(), 18);
}

#[test]
fn manifest_datasets_run_through_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    fs::create_dir(&audio).unwrap();
    let mut manifest = String::from("# path\tclass\tsplit\n");
    for (k, (name, freq)) in [("hum", 300.0), ("whistle", 2500.0)].iter().enumerate() {
        for i in 0..6 {
            let samples = (0..8000)
                .map(|t| {
                    let x = t as f64 / 16_000.0;
                    0.3 * (2.0 * std::f64::consts::PI * freq * x).sin()
                        + 0.01 * (((t * 7919 + i * 104_729 + k) % 1000) as f64 / 500.0 - 1.0)
                })
                .collect();
            let file = format!("{name}_{i}.wav");
            write_wav(audio.join(&file), &Waveform::new(samples, 16_000).unwrap()).unwrap();
            let split = if i < 4 { "train" } else { "test" };
            manifest.push_str(&format!("{file}\t{name}\t{split}\n"));
        }
    }
    fs::write(audio.join("labels.tsv"), manifest).unwrap();
    let i = qasc(dir.path(), &["ingest", "audio/labels.tsv"]);
    assert_eq!(i.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&i.stdout).starts_with("12 entries, 2 classes"));

    let cfg = write_config(
        dir.path(),
        "\n[paths]\ndataset_dir = \"audio\"\nlabels_file = \"labels.tsv\"\n",
    );
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("snr_list = [10.0, \"clean\"]", "snr_list = [\"clean\"]")
        .replace("fraction_list = [0.5, 1.0]", "fraction_list = [1.0]");
    fs::write(&cfg, text).unwrap();
    let o = qasc(dir.path(), &["--config", &cfg, "--out", "o", "sweep"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let rows = read_results_csv(dir.path().join("o/results.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].metrics.is_some());
}

#[test]
fn show_config_round_trips_and_bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = qasc(
        dir.path(),
        &["--preset", "angle", "--seed", "99", "show-config"],
    );
    assert_eq!(o.status.code(), Some(0));
    let shown = ExperimentConfig::from_toml(&String::from_utf8_lossy(&o.stdout)).unwrap();
    let mut want = ExperimentConfig::preset("angle").unwrap();
    want.seed = 99;
    assert_eq!(shown, want);

    assert_eq!(
        qasc(dir.path(), &["--preset", "nope", "sweep"])
            .status
            .code(),
        Some(1)
    );
    fs::write(dir.path().join("bad.toml"), "[model]\nqubits = 4\n").unwrap();
    assert_eq!(
        qasc(dir.path(), &["--config", "bad.toml", "show-config"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        qasc(dir.path(), &["ingest", "missing.tsv"]).status.code(),
        Some(1)
    );
}
