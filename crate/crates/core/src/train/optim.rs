pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
/// Minimum rise in the monitored metric that counts as an improvement.
pub const IMPROVEMENT_EPS: f64 = 1e-6;

/// First and second moment estimates of Adam.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) {
    assert_eq!(
        params.len(),
        grads.len(),
        "parameter and gradient lengths differ"
    );
    assert_eq!(
        params.len(),
        state.m.len(),
        "optimizer state was built for another model"
    );
    state.t += 1;
    let c1 = 1.0 - ADAM_BETA1.powi(state.t as i32);
    let c2 = 1.0 - ADAM_BETA2.powi(state.t as i32);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = ADAM_BETA1 * state.m[k] + (1.0 - ADAM_BETA1) * g;
        state.v[k] = ADAM_BETA2 * state.v[k] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without improvement, then starts counting again.
#[derive(Clone, Debug, PartialEq)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    /// `baseline` is the metric before the first epoch.
    pub fn new(lr: f64, factor: f64, patience: usize, baseline: f64) -> Self {
        Self {
            lr,
            factor,
            patience,
            best: baseline,
            stale: 0,
        }
    }

    /// Records one epoch's metric and returns the learning rate to use next.
    pub fn step(&mut self, metric: f64) -> f64 {
        if metric > self.best + IMPROVEMENT_EPS {
            self.best = metric;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                self.lr *= self.factor;
                self.stale = 0;
            }
        }
        self.lr
    }

    pub fn stale_epochs(&self) -> usize {
        self.stale
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Stops after `patience` consecutive non-improving epochs and remembers the
/// best epoch (earliest on ties).
#[derive(Clone, Debug, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    /// `baseline` is the metric of the untrained model, recorded as epoch 0.
    pub fn new(patience: usize, baseline: f64) -> Self {
        Self {
            patience,
            best: baseline,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn check(&mut self, epoch: usize, metric: f64) -> StopDecision {
        if metric > self.best + IMPROVEMENT_EPS {
            self.best = metric;
            self.best_epoch = epoch;
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == epoch && self.stale == 0
    }
}
