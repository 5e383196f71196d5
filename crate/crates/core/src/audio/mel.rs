use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filterbank, `n_mels × (n_fft/2 + 1)`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank {
    pub n_mels: usize,
    pub n_fft: usize,
    pub sample_rate: u32,
    weights: Vec<f64>,
    /// Centre frequency of each triangle in Hz.
    centers: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn row(&self, m: usize) -> &[f64] {
        let n = self.n_bins();
        &self.weights[m * n..(m + 1) * n]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// mel energies of one power-spectrum frame
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.n_mels)
            .map(|m| self.row(m).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }

    /// Moore-Penrose pseudo-inverse, `(n_fft/2 + 1) × n_mels`, row-major.
    pub fn pseudo_inverse(&self) -> Vec<f64> {
        let fb = DMatrix::from_row_slice(self.n_mels, self.n_bins(), &self.weights);
        let pinv = fb
            .pseudo_inverse(1e-12)
            .expect("non-negative epsilon is always accepted");
        let mut out = Vec::with_capacity(pinv.len());
        for r in 0..pinv.nrows() {
            for c in 0..pinv.ncols() {
                out.push(pinv[(r, c)]);
            }
        }
        out
    }
}

/// Triangles with peaks evenly spaced on the mel scale between 0 Hz and
/// `sample_rate/2`; adjacent triangles share edges, so the supports cover
/// the whole band.
pub fn mel_filterbank(n_fft: usize, n_mels: usize, sample_rate: u32) -> Result<MelFilterbank> {
    let n_bins = n_fft / 2 + 1;
    if n_mels < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 mel bands, got {n_mels}"
        )));
    }
    if n_mels > n_bins {
        return Err(Error::InvalidConfig(format!(
            "{n_mels} mel bands exceed {n_bins} frequency bins"
        )));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let mel_max = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, &f) in bin_hz.iter().enumerate() {
            let w = if f > lo && f <= mid {
                (f - lo) / (mid - lo)
            } else if f > mid && f < hi {
                (hi - f) / (hi - mid)
            } else {
                0.0
            };
            weights[m * n_bins + k] = w;
        }
        if weights[m * n_bins..(m + 1) * n_bins]
            .iter()
            .all(|&w| w == 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "mel band {m} contains no frequency bin; use fewer bands or a larger n_fft"
            )));
        }
    }
    Ok(MelFilterbank {
        n_mels,
        n_fft,
        sample_rate,
        weights,
        centers: edges[1..=n_mels].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_is_near_identity_at_1khz() {
        assert!((hz_to_mel(1000.0) - 999.985).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(3210.0)) - 3210.0).abs() < 1e-9);
    }

    #[test]
    fn rows_are_single_peaked_triangles() {
        let fb = mel_filterbank(512, 32, 16_000).unwrap();
        for m in 0..32 {
            let row = fb.row(m);
            assert!(row.iter().all(|&w| w >= 0.0));
            let max = row.iter().cloned().fold(f64::MIN, f64::max);
            assert_eq!(row.iter().filter(|&&w| w == max).count(), 1, "row {m}");
            // support is one contiguous run
            let nz: Vec<usize> = (0..row.len()).filter(|&k| row[k] > 0.0).collect();
            assert_eq!(nz.last().unwrap() - nz[0] + 1, nz.len());
        }
        assert!(fb.centers().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn supports_tile_the_band() {
        let fb = mel_filterbank(512, 32, 16_000).unwrap();
        for k in 1..fb.n_bins() - 1 {
            let total: f64 = (0..32).map(|m| fb.row(m)[k]).sum();
            assert!(total > 0.0, "bin {k} uncovered");
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(mel_filterbank(512, 1, 16_000).is_err());
        assert!(mel_filterbank(16, 20, 16_000).is_err());
    }

    #[test]
    fn pseudo_inverse_is_right_inverse() {
        let fb = mel_filterbank(256, 16, 16_000).unwrap();
        let pinv = fb.pseudo_inverse();
        let nb = fb.n_bins();
        for i in 0..16 {
            for j in 0..16 {
                let v: f64 = (0..nb).map(|k| fb.row(i)[k] * pinv[k * 16 + j]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-9);
            }
        }
    }
}
