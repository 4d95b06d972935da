//! AdamW, the plateau learning-rate schedule and early stopping.

use serde::{Deserialize, Serialize};

/// A model's learnable tensors viewed as flat slices in a fixed order.
pub trait Parameters {
    fn slices(&self) -> Vec<&[f64]>;
    fn slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// `self += other`, tensor by tensor.
    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    fn l2_norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimError {
    #[error("non-finite gradient in tensor {0}")]
    NonFiniteGradient(usize),
    #[error("gradient layout does not match parameters")]
    ShapeMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamWState {
    pub fn new<P: Parameters>(params: &P) -> Self {
        Self::with_config(params, AdamWConfig::default())
    }

    pub fn with_config<P: Parameters>(params: &P, config: AdamWConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.slices().iter().map(|s| vec![0.0; s.len()]).collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay:
/// `θ ← θ − lr·λ·θ − lr·m̂/(√v̂ + ε)`.
pub fn adamw_step<P: Parameters>(
    params: &mut P,
    grads: &P,
    state: &mut AdamWState,
    lr: f64,
    weight_decay: f64,
) -> Result<(), OptimError> {
    let gs = grads.slices();
    for (k, g) in gs.iter().enumerate() {
        if !g.iter().all(|v| v.is_finite()) {
            return Err(OptimError::NonFiniteGradient(k));
        }
    }
    let mut ps = params.slices_mut();
    if ps.len() != gs.len()
        || ps.len() != state.m.len()
        || ps.iter().zip(&gs).any(|(p, g)| p.len() != g.len())
    {
        return Err(OptimError::ShapeMismatch);
    }
    state.step += 1;
    let AdamWConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (k, (p, g)) in ps.iter_mut().zip(&gs).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            p[i] -= lr * weight_decay * p[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    /// Minimum absolute decrease that counts as an improvement.
    pub threshold: f64,
    pub min_lr: f64,
}

impl Default for PlateauConfig {
    fn default() -> Self {
        Self {
            factor: 0.5,
            patience: 5,
            threshold: 1e-4,
            min_lr: 1e-7,
        }
    }
}

/// Multiplies the learning rate by `factor` after `patience` consecutive
/// epochs without an improvement of at least `threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauScheduler {
    pub config: PlateauConfig,
    pub lr: f64,
    pub best: f64,
    pub bad_epochs: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, config: PlateauConfig) -> Self {
        Self {
            config,
            lr,
            best: f64::INFINITY,
            bad_epochs: 0,
        }
    }

    pub fn step(&mut self, val_loss: f64) -> f64 {
        if val_loss < self.best - self.config.threshold {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.config.patience {
                self.lr = (self.lr * self.config.factor).max(self.config.min_lr);
                self.bad_epochs = 0;
            }
        }
        self.lr
    }
}

/// Replays `history` through a fresh scheduler and returns the resulting rate.
pub fn plateau_lr(history: &[f64], initial_lr: f64, config: PlateauConfig) -> f64 {
    let mut s = PlateauScheduler::new(initial_lr, config);
    for &l in history {
        s.step(l);
    }
    s.lr
}

/// Stops after `patience` epochs without a new best validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    pub best: f64,
    pub best_epoch: Option<usize>,
    pub since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            since_best: 0,
        }
    }

    /// Records an epoch; returns true if it is the new best.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = Some(epoch);
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.patience
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Flat(Vec<f64>);

    impl Parameters for Flat {
        fn slices(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn slices_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = Flat(vec![0.5, -2.0, 3.0]);
        let g = Flat(vec![0.0; 3]);
        let mut st = AdamWState::new(&p);
        adamw_step(&mut p, &g, &mut st, 1e-2, 0.0).unwrap();
        assert_eq!(p.0, vec![0.5, -2.0, 3.0]);
    }

    #[test]
    fn zero_gradient_decay_scales() {
        let mut p = Flat(vec![0.5, -2.0, 3.0]);
        let g = Flat(vec![0.0; 3]);
        let mut st = AdamWState::new(&p);
        let (lr, wd) = (1e-2, 0.1);
        adamw_step(&mut p, &g, &mut st, lr, wd).unwrap();
        for (a, b) in p.0.iter().zip([0.5, -2.0, 3.0]) {
            assert!((a - b * (1.0 - lr * wd)).abs() < 1e-15);
        }
    }

    #[test]
    fn three_hand_computed_steps() {
        // θ0 = 1, g = (0.5, -0.2, 0.1), lr = 0.1, λ = 0.01
        let mut p = Flat(vec![1.0]);
        let mut st = AdamWState::new(&p);
        let grads = [0.5, -0.2, 0.1];
        for g in grads {
            adamw_step(&mut p, &Flat(vec![g]), &mut st, 0.1, 0.01).unwrap();
        }
        // hand recurrence
        let (b1, b2, eps, lr, wd) = (0.9f64, 0.999f64, 1e-8, 0.1, 0.01);
        let (mut th, mut m, mut v) = (1.0f64, 0.0f64, 0.0f64);
        for (t, g) in grads.iter().enumerate() {
            let t = (t + 1) as i32;
            th -= lr * wd * th;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            th -= lr * (m / (1.0 - b1.powi(t))) / ((v / (1.0 - b2.powi(t))).sqrt() + eps);
        }
        assert!((p.0[0] - th).abs() < 1e-12);
        // first step magnitude is lr·sign(g) after decay
        let mut q = Flat(vec![1.0]);
        let mut s2 = AdamWState::new(&q);
        adamw_step(&mut q, &Flat(vec![0.5]), &mut s2, 0.1, 0.01).unwrap();
        assert!((q.0[0] - (0.999 - 0.1 * 0.5 / (0.5 + 1e-8))).abs() < 1e-12);
    }

    #[test]
    fn vanishing_lr_is_identity() {
        let mut p = Flat(vec![0.3, 0.7]);
        let mut st = AdamWState::new(&p);
        adamw_step(&mut p, &Flat(vec![1.0, -4.0]), &mut st, 1e-15, 0.5).unwrap();
        assert!((p.0[0] - 0.3).abs() < 1e-12 && (p.0[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn decay_shrinks_norm_monotonically() {
        let mut p = Flat(vec![0.3, -0.7, 2.0]);
        let mut st = AdamWState::new(&p);
        let mut last = p.l2_norm();
        for _ in 0..50 {
            adamw_step(&mut p, &Flat(vec![0.0; 3]), &mut st, 1e-2, 0.05).unwrap();
            let n = p.l2_norm();
            assert!(n < last);
            last = n;
        }
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut p = Flat(vec![0.0]);
        let mut st = AdamWState::new(&p);
        assert_eq!(
            adamw_step(&mut p, &Flat(vec![f64::NAN]), &mut st, 0.1, 0.0),
            Err(OptimError::NonFiniteGradient(0))
        );
    }

    #[test]
    fn plateau_improving_keeps_lr() {
        let h: Vec<f64> = (0..30).map(|i| 1.0 - 0.01 * i as f64).collect();
        assert_eq!(plateau_lr(&h, 1e-3, PlateauConfig::default()), 1e-3);
    }

    #[test]
    fn plateau_flat_halves_once() {
        let cfg = PlateauConfig::default();
        // epoch 1 sets the best, epochs 2..=6 are the five bad ones
        let h = vec![0.8; cfg.patience + 1];
        assert_eq!(plateau_lr(&h, 1e-3, cfg), 5e-4);
        assert_eq!(plateau_lr(&h[..cfg.patience], 1e-3, cfg), 1e-3);
        // an improvement smaller than the threshold does not reset the counter
        let h2: Vec<f64> = (0..=cfg.patience).map(|i| 0.8 - 1e-5 * i as f64).collect();
        assert_eq!(plateau_lr(&h2, 1e-3, cfg), 5e-4);
    }

    #[test]
    fn plateau_respects_floor() {
        let h = vec![0.5; 1000];
        let lr = plateau_lr(&h, 1e-3, PlateauConfig::default());
        assert_eq!(lr, 1e-7);
    }

    #[test]
    fn early_stopping_counts_from_best() {
        let mut es = EarlyStopping::new(3);
        assert!(es.observe(0, 1.0));
        assert!(!es.observe(1, 1.0));
        assert!(es.observe(2, 0.9));
        for e in 3..6 {
            assert!(!es.should_stop());
            es.observe(e, 0.95);
        }
        assert!(es.should_stop());
        assert_eq!(es.best_epoch, Some(2));
    }
}
