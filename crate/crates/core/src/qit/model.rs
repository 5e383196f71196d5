use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{build_qasc_circuit, Circuit};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    /// Projected patch loaded directly as the 2^n amplitudes.
    Amplitude,
    /// Projected patch added to the first layer's 3n rotation angles.
    Angle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolingMode {
    Mean,
    Max,
}

/// Shape of a QiT model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QitConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub encoding: EncodingMode,
    pub pooling: PoolingMode,
    pub n_classes: usize,
    pub patch_size: usize,
}

impl QitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 1 || self.n_qubits > 12 {
            return Err(Error::InvalidConfig(format!(
                "n_qubits must be in 1..=12, got {}",
                self.n_qubits
            )));
        }
        if self.n_layers < 1 {
            return Err(Error::InvalidConfig("n_layers must be at least 1".into()));
        }
        if self.n_classes < 1 || self.n_classes > 1 << self.n_qubits {
            return Err(Error::InvalidConfig(format!(
                "{} classes cannot be read from {} basis states",
                self.n_classes,
                1usize << self.n_qubits
            )));
        }
        if self.patch_size < 2 {
            return Err(Error::InvalidConfig("patch size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Width of the projected patch feeding the register.
    pub fn encoder_width(&self) -> usize {
        match self.encoding {
            EncodingMode::Amplitude => self.dim(),
            EncodingMode::Angle => 3 * self.n_qubits,
        }
    }
}

/// Affine map from a flattened patch to the encoder input.
///
/// Inputs are first standardized elementwise with the fixed `input_shift`
/// and `input_scale` (fitted on training data, not trained), then mapped by
/// the trainable weights and bias.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchProjection {
    pub d_in: usize,
    pub d_out: usize,
    /// `d_in × d_out`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    /// Length `d_in`.
    pub input_shift: Vec<f64>,
    /// Length `d_in`, all positive.
    pub input_scale: Vec<f64>,
}

impl PatchProjection {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        Self {
            d_in,
            d_out,
            weights: vec![0.0; d_in * d_out],
            bias: vec![0.0; d_out],
            input_shift: vec![0.0; d_in],
            input_scale: vec![1.0; d_in],
        }
    }

    /// Fits the standardization on training inputs: subtract their global
    /// mean and divide by their standard deviation times `√d_in`, so a
    /// typical input has unit norm rather than unit entries. Constant inputs
    /// get the standard deviation 1.
    ///
    /// Unit-norm inputs pair with N(0, 1) projection weights. Adam moves
    /// every weight by about the learning rate per step, so with unit
    /// entries the projected values would shift by `√d_in` times as much.
    pub fn fit_input_normalization<'a>(
        &mut self,
        patches: impl IntoIterator<Item = &'a [f64]>,
    ) -> Result<()> {
        let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
        for x in patches {
            if x.len() != self.d_in {
                return Err(Error::Projection(format!(
                    "projection expects {} inputs, got {}",
                    self.d_in,
                    x.len()
                )));
            }
            n += x.len();
            sum += x.iter().sum::<f64>();
            sq += x.iter().map(|v| v * v).sum::<f64>();
        }
        if n == 0 {
            return Ok(());
        }
        let mean = sum / n as f64;
        let sd = (sq / n as f64 - mean * mean).max(0.0).sqrt();
        let sd = if sd > 1e-12 { sd } else { 1.0 };
        self.input_shift.fill(mean);
        self.input_scale.fill(sd * (self.d_in as f64).sqrt());
        Ok(())
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_shift.iter().zip(&self.input_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Identity on the first `min(d_in, d_out)` coordinates.
    pub fn identity(d_in: usize, d_out: usize) -> Self {
        let mut p = Self::zeros(d_in, d_out);
        for i in 0..d_in.min(d_out) {
            p.weights[i * d_out + i] = 1.0;
        }
        p
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in {
            return Err(Error::Projection(format!(
                "projection expects {} inputs, got {}",
                self.d_in,
                x.len()
            )));
        }
        let mut y = self.bias.clone();
        for (i, xi) in self.normalize_input(x).into_iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.d_out..(i + 1) * self.d_out];
            for (yo, w) in y.iter_mut().zip(row) {
                *yo += xi * w;
            }
        }
        Ok(y)
    }
}

/// All parameters of the quantum-inspired transformer.
///
/// The embedding circuit has `n_layers` ansatz layers; every encoder layer
/// owns one single-layer attention circuit and one single-layer feedforward
/// circuit, so `theta_a[l]` and `theta_f[l]` are per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct QitModel {
    pub config: QitConfig,
    pub projection: PatchProjection,
    pub embed_circuit: Circuit,
    pub attn_circuit: Circuit,
    pub ffn_circuit: Circuit,
    pub theta_e: Vec<f64>,
    pub theta_a: Vec<Vec<f64>>,
    pub theta_f: Vec<Vec<f64>>,
    /// `C × C`, row-major.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl QitModel {
    /// All parameters zero.
    pub fn zeroed(config: QitConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_qubits;
        let embed_circuit = build_qasc_circuit(n, config.n_layers)?;
        let attn_circuit = build_qasc_circuit(n, 1)?;
        let ffn_circuit = build_qasc_circuit(n, 1)?;
        let c = config.n_classes;
        Ok(Self {
            projection: PatchProjection::zeros(
                config.patch_size * config.patch_size,
                config.encoder_width(),
            ),
            theta_e: vec![0.0; embed_circuit.n_params()],
            theta_a: vec![vec![0.0; attn_circuit.n_params()]; config.n_layers],
            theta_f: vec![vec![0.0; ffn_circuit.n_params()]; config.n_layers],
            head_w: vec![0.0; c * c],
            head_b: vec![0.0; c],
            embed_circuit,
            attn_circuit,
            ffn_circuit,
            config,
        })
    }

    /// Seeded initialization: angles uniform in (−0.1, 0.1), head weights
    /// N(0, 0.1²) with zero bias, projection weights N(0, 1) with zero bias
    /// and input scale `√d_in` until
    /// [`PatchProjection::fit_input_normalization`] is called.
    pub fn new(config: QitConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeroed(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proj = Normal::new(0.0, 1.0).expect("positive stdev");
        let root_d = (model.projection.d_in as f64).sqrt();
        model.projection.input_scale.fill(root_d);
        model
            .projection
            .weights
            .iter_mut()
            .for_each(|w| *w = proj.sample(&mut rng));
        let mut angle = || rng.random_range(-0.1..0.1);
        model.theta_e.iter_mut().for_each(|t| *t = angle());
        for layer in model.theta_a.iter_mut().chain(model.theta_f.iter_mut()) {
            layer.iter_mut().for_each(|t| *t = angle());
        }
        let head = Normal::new(0.0, 0.1).expect("positive stdev");
        model
            .head_w
            .iter_mut()
            .for_each(|w| *w = head.sample(&mut rng));
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let c = &self.config;
        let p2 = c.patch_size * c.patch_size;
        if self.projection.d_in != p2 || self.projection.d_out != c.encoder_width() {
            return Err(Error::Projection(format!(
                "projection is {}×{}, expected {}×{}",
                self.projection.d_in,
                self.projection.d_out,
                p2,
                c.encoder_width()
            )));
        }
        for circuit in [&self.embed_circuit, &self.attn_circuit, &self.ffn_circuit] {
            if circuit.n_qubits() != c.n_qubits {
                return Err(Error::InvalidConfig(
                    "circuit width differs from n_qubits".into(),
                ));
            }
        }
        if c.encoding == EncodingMode::Angle && self.embed_circuit.n_params() < 3 * c.n_qubits {
            return Err(Error::InvalidConfig(
                "angle encoding needs a full first rotation layer".into(),
            ));
        }
        let arity = |expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::ParameterArity { expected, got })
            }
        };
        arity(self.embed_circuit.n_params(), self.theta_e.len())?;
        arity(c.n_layers, self.theta_a.len())?;
        arity(c.n_layers, self.theta_f.len())?;
        for t in &self.theta_a {
            arity(self.attn_circuit.n_params(), t.len())?;
        }
        for t in &self.theta_f {
            arity(self.ffn_circuit.n_params(), t.len())?;
        }
        arity(c.n_classes * c.n_classes, self.head_w.len())?;
        arity(c.n_classes, self.head_b.len())?;
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        self.param_groups().iter().map(|g| g.len()).sum()
    }

    fn param_groups(&self) -> Vec<&[f64]> {
        let mut groups: Vec<&[f64]> = vec![
            &self.projection.weights,
            &self.projection.bias,
            &self.theta_e,
        ];
        groups.extend(self.theta_a.iter().map(|t| t.as_slice()));
        groups.extend(self.theta_f.iter().map(|t| t.as_slice()));
        groups.push(&self.head_w);
        groups.push(&self.head_b);
        groups
    }

    fn param_groups_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut groups = vec![
            &mut self.projection.weights,
            &mut self.projection.bias,
            &mut self.theta_e,
        ];
        groups.extend(self.theta_a.iter_mut());
        groups.extend(self.theta_f.iter_mut());
        groups.push(&mut self.head_w);
        groups.push(&mut self.head_b);
        groups
    }

    /// Flat parameter vector: projection weights, projection bias, θ_e,
    /// θ_a by layer, θ_f by layer, head weights, head bias.
    pub fn params_flat(&self) -> Vec<f64> {
        self.param_groups().concat()
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(Error::ParameterArity {
                expected,
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for group in self.param_groups_mut() {
            let n = group.len();
            group.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_normalization_gives_unit_norm_inputs() {
        let mut proj = PatchProjection::zeros(4, 2);
        let a = [1.0, 3.0, 1.0, 3.0];
        proj.fit_input_normalization([&a[..], &a[..]]).unwrap();
        assert_eq!(proj.input_shift, vec![2.0; 4]);
        assert_eq!(proj.input_scale, vec![2.0; 4]);
        assert_eq!(proj.normalize_input(&a), vec![-0.5, 0.5, -0.5, 0.5]);
        assert!(proj.fit_input_normalization([&a[..3]]).is_err());
        let flat = [5.0; 4];
        proj.fit_input_normalization([&flat[..]]).unwrap();
        assert_eq!(proj.input_scale, vec![2.0; 4]);
    }

    fn config() -> QitConfig {
        QitConfig {
            n_qubits: 4,
            n_layers: 3,
            encoding: EncodingMode::Amplitude,
            pooling: PoolingMode::Max,
            n_classes: 15,
            patch_size: 32,
        }
    }

    #[test]
    fn shapes_follow_config() {
        let m = QitModel::new(config(), 1).unwrap();
        m.validate().unwrap();
        assert_eq!(m.theta_e.len(), 36);
        assert_eq!(m.theta_a.len(), 3);
        assert_eq!(m.theta_a[0].len(), 12);
        assert_eq!(m.projection.d_out, 16);
        assert!(m.theta_e.iter().all(|t| t.abs() < 0.1));
        assert!(m.head_b.iter().all(|&b| b == 0.0));

        let angle = QitModel::new(
            QitConfig {
                encoding: EncodingMode::Angle,
                ..config()
            },
            1,
        )
        .unwrap();
        assert_eq!(angle.projection.d_out, 12);
    }

    #[test]
    fn too_many_classes_is_a_config_error() {
        let bad = QitConfig {
            n_classes: 17,
            ..config()
        };
        assert!(matches!(
            QitModel::new(bad, 0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn flat_params_round_trip() {
        let mut m = QitModel::new(config(), 3).unwrap();
        let flat = m.params_flat();
        assert_eq!(flat.len(), m.n_params());
        let shifted: Vec<f64> = flat.iter().map(|x| x + 1.0).collect();
        m.set_params_flat(&shifted).unwrap();
        assert_eq!(m.params_flat(), shifted);
        assert!(m.set_params_flat(&flat[1..]).is_err());
    }

    #[test]
    fn seeded_init_is_reproducible() {
        assert_eq!(
            QitModel::new(config(), 9).unwrap(),
            QitModel::new(config(), 9).unwrap()
        );
        assert_ne!(
            QitModel::new(config(), 9).unwrap(),
            QitModel::new(config(), 10).unwrap()
        );
    }
}
