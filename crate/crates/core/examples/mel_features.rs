//! Log-mel patches of the bundled synthetic corpus: per-class band energy
//! profiles show what the classifier has to separate.

use qasc::audio::AudioConfig;
use qasc::experiment::{synthetic_corpus, SyntheticSpec};

fn main() -> qasc::Result<()> {
    let corpus = synthetic_corpus(&SyntheticSpec::default())?;
    let extractor = AudioConfig::default().extractor(32)?;
    println!(
        "{} clips, {} classes, {:.1}s each",
        corpus.clips.len(),
        corpus.class_names.len(),
        corpus.clips[0].wave.duration_secs()
    );
    for (k, name) in corpus.class_names.iter().enumerate() {
        let mut profile = vec![0.0; 32];
        let mut n = 0usize;
        for clip in corpus.clips.iter().filter(|c| c.label == k).take(10) {
            for patch in extractor.patches(&clip.wave)? {
                for (m, band) in profile.iter_mut().enumerate() {
                    *band += (0..32).map(|t| patch.get(m, t)).sum::<f64>() / 32.0;
                }
                n += 1;
            }
        }
        let loudest = (0..32)
            .max_by(|&a, &b| profile[a].total_cmp(&profile[b]))
            .unwrap_or(0);
        let bars: String = profile
            .iter()
            .map(|v| {
                let level = ((v / n as f64 + 12.0) / 3.0).clamp(0.0, 7.0) as usize;
                [' ', '.', ':', '-', '=', '+', '*', '#'][level]
            })
            .collect();
        println!("{name:>10} |{bars}| loudest band {loudest:>2}, {n} patches");
    }
    Ok(())
}
