use std::path::Path;

use super::mlp::{Dense, Mlp};
use super::model::{QvaeArch, QvaeModel};
use crate::audio::AudioConfig;
use crate::error::{Error, Result};
use crate::tensorio::{Tensor, TensorFile, MAGIC_QVAE};

fn push_mlp(tensors: &mut Vec<Tensor>, mlp: &Mlp) {
    for l in &mlp.layers {
        tensors.push(Tensor {
            dims: vec![l.n_out, l.n_in],
            data: l.weights.clone(),
        });
        tensors.push(Tensor::vector(l.bias.clone()));
    }
}

fn read_mlp(tensors: &[Tensor]) -> Result<Mlp> {
    let layers = tensors
        .chunks(2)
        .map(|pair| match pair {
            [w, b] if w.dims.len() == 2 && b.dims == [w.dims[0]] => Ok(Dense {
                n_in: w.dims[1],
                n_out: w.dims[0],
                weights: w.data.clone(),
                bias: b.data.clone(),
            }),
            _ => Err(Error::Format("malformed dense layer".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mlp { layers })
}

impl QvaeModel {
    /// Config words: m_qubits, enc_layers, latent_dim, hidden, p, trained.
    /// Tensors: θ_enc, settings (shift, scale, sample rate, n_fft, hop,
    /// Griffin-Lim iterations), then decoder and recognizer layers as
    /// weight/bias pairs.
    pub fn to_tensor_file(&self) -> TensorFile {
        let a = &self.arch;
        let mut tensors = vec![
            Tensor::vector(self.theta_enc.clone()),
            Tensor::vector(vec![
                self.shift,
                self.scale,
                self.audio.sample_rate as f64,
                self.audio.n_fft as f64,
                self.audio.hop as f64,
                self.griffin_lim_iters as f64,
            ]),
        ];
        push_mlp(&mut tensors, &self.decoder);
        push_mlp(&mut tensors, &self.recognizer);
        TensorFile {
            magic: MAGIC_QVAE,
            config: [
                a.m_qubits as u32,
                a.enc_layers as u32,
                a.latent_dim as u32,
                a.hidden as u32,
                a.patch_size as u32,
                self.trained as u32,
            ],
            tensors,
        }
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        file.expect_magic(MAGIC_QVAE)?;
        let [m_qubits, enc_layers, latent_dim, hidden, patch_size, trained] =
            file.config.map(|w| w as usize);
        let arch = QvaeArch {
            m_qubits,
            enc_layers,
            latent_dim,
            hidden,
            patch_size,
        };
        if file.tensors.len() != 10 || file.tensors[1].data.len() != 6 {
            return Err(Error::Format("QVAE checkpoint needs 10 tensors".into()));
        }
        let s = &file.tensors[1].data;
        let audio = AudioConfig {
            sample_rate: s[2] as u32,
            n_fft: s[3] as usize,
            hop: s[4] as usize,
        };
        let mut model = QvaeModel::new(arch, audio, 0)?;
        let decoder = read_mlp(&file.tensors[2..6])?;
        let recognizer = read_mlp(&file.tensors[6..10])?;
        if decoder.params_flat().len() != model.decoder.n_params()
            || recognizer.params_flat().len() != model.recognizer.n_params()
            || file.tensors[0].data.len() != model.theta_enc.len()
        {
            return Err(Error::Format(
                "QVAE tensors do not match the stored architecture".into(),
            ));
        }
        model.theta_enc = file.tensors[0].data.clone();
        model.decoder = decoder;
        model.recognizer = recognizer;
        model.shift = s[0];
        model.scale = s[1];
        model.griffin_lim_iters = s[5] as usize;
        model.trained = trained != 0;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?)
    }
}
