//! Accuracy of the baseline across noise levels and training fractions,
//! printed as the same pivot the CLI exports.

use qasc::experiment::{run_experiment, write_pivot_csv, ExperimentConfig, Snr};

fn main() -> qasc::Result<()> {
    let mut cfg = ExperimentConfig::preset("baseline")?;
    cfg.sweep.snr_list = vec![Snr(0.0), Snr(5.0), Snr(10.0), Snr(20.0), Snr::CLEAN];
    cfg.sweep.fraction_list = vec![0.25, 1.0];
    let rows = run_experiment(&cfg)?;
    let mut pivot = Vec::new();
    write_pivot_csv(&rows, &mut pivot)?;
    print!("{}", String::from_utf8_lossy(&pivot));
    Ok(())
}
