use std::path::Path;

use super::model::{EncodingMode, PoolingMode, QitConfig, QitModel};
use crate::error::{Error, Result};
use crate::tensorio::{Tensor, TensorFile, MAGIC_QASC};

fn encoding_code(e: EncodingMode) -> u32 {
    match e {
        EncodingMode::Amplitude => 0,
        EncodingMode::Angle => 1,
    }
}

fn pooling_code(p: PoolingMode) -> u32 {
    match p {
        PoolingMode::Mean => 0,
        PoolingMode::Max => 1,
    }
}

impl QitModel {
    pub fn to_tensor_file(&self) -> TensorFile {
        let c = &self.config;
        let stacked = |rows: &[Vec<f64>]| {
            let width = rows.first().map_or(0, Vec::len);
            Tensor {
                dims: vec![rows.len(), width],
                data: rows.concat(),
            }
        };
        TensorFile {
            magic: MAGIC_QASC,
            config: [
                c.n_qubits as u32,
                c.n_layers as u32,
                encoding_code(c.encoding),
                pooling_code(c.pooling),
                c.n_classes as u32,
                c.patch_size as u32,
            ],
            tensors: vec![
                Tensor {
                    dims: vec![self.projection.d_in, self.projection.d_out],
                    data: self.projection.weights.clone(),
                },
                Tensor::vector(self.projection.bias.clone()),
                Tensor::vector(self.theta_e.clone()),
                stacked(&self.theta_a),
                stacked(&self.theta_f),
                Tensor {
                    dims: vec![c.n_classes, c.n_classes],
                    data: self.head_w.clone(),
                },
                Tensor::vector(self.head_b.clone()),
                Tensor {
                    dims: vec![2, self.projection.d_in],
                    data: [
                        self.projection.input_shift.as_slice(),
                        self.projection.input_scale.as_slice(),
                    ]
                    .concat(),
                },
            ],
        }
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        file.expect_magic(MAGIC_QASC)?;
        let [n_qubits, n_layers, enc, pool, n_classes, patch_size] = file.config;
        let encoding = match enc {
            0 => EncodingMode::Amplitude,
            1 => EncodingMode::Angle,
            other => return Err(Error::Format(format!("unknown encoding code {other}"))),
        };
        let pooling = match pool {
            0 => PoolingMode::Mean,
            1 => PoolingMode::Max,
            other => return Err(Error::Format(format!("unknown pooling code {other}"))),
        };
        let config = QitConfig {
            n_qubits: n_qubits as usize,
            n_layers: n_layers as usize,
            encoding,
            pooling,
            n_classes: n_classes as usize,
            patch_size: patch_size as usize,
        };
        let mut model = QitModel::zeroed(config)?;
        let d_in = model.projection.d_in;
        if file.tensors.len() != 8 || file.tensors[7].dims != [2, d_in] {
            return Err(Error::Format(
                "expected 7 parameter tensors and a 2 × d_in normalization tensor".into(),
            ));
        }
        let flat: Vec<f64> = file.tensors[..7]
            .iter()
            .flat_map(|t| t.data.iter().copied())
            .collect();
        model
            .set_params_flat(&flat)
            .map_err(|e| Error::Format(format!("checkpoint does not match its config: {e}")))?;
        let shapes_ok = file.tensors[0].dims == [model.projection.d_in, model.projection.d_out]
            && file.tensors[3].dims == [config.n_layers, model.attn_circuit.n_params()]
            && file.tensors[4].dims == [config.n_layers, model.ffn_circuit.n_params()];
        if !shapes_ok {
            return Err(Error::Format(
                "checkpoint tensor shapes do not match its config".into(),
            ));
        }
        let (shift, scale) = file.tensors[7].data.split_at(d_in);
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Format(
                "normalization scales must be positive".into(),
            ));
        }
        model.projection.input_shift = shift.to_vec();
        model.projection.input_scale = scale.to_vec();
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_tensor_file().save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::load(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_file() {
        let config = QitConfig {
            n_qubits: 3,
            n_layers: 2,
            encoding: EncodingMode::Angle,
            pooling: PoolingMode::Mean,
            n_classes: 4,
            patch_size: 4,
        };
        let mut model = QitModel::new(config, 17).unwrap();
        model.projection.input_shift[3] = 2.5;
        model.projection.input_scale[0] = 0.5;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.qasc");
        model.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"QASC");
        assert_eq!(QitModel::load(&path).unwrap(), model);
    }

    #[test]
    fn mismatched_config_is_rejected() {
        let config = QitConfig {
            n_qubits: 2,
            n_layers: 1,
            encoding: EncodingMode::Amplitude,
            pooling: PoolingMode::Max,
            n_classes: 2,
            patch_size: 2,
        };
        let mut file = QitModel::new(config, 1).unwrap().to_tensor_file();
        file.config[1] = 2;
        assert!(QitModel::from_tensor_file(&file).is_err());
        file.config[1] = 1;
        file.magic = *b"QVAE";
        assert!(QitModel::from_tensor_file(&file).is_err());
    }
}
