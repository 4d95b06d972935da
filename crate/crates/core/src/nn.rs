//! Dense layers and small MLPs with hand-written backward passes.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// x·σ(x)
    #[default]
    Silu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Silu => z / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Silu => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 + z * (1.0 - s))
            }
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

/// `y = x·W + b` with `W` stored input-major (`in × out`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Array2::zeros((input, output)),
            bias: Array1::zeros(output),
        }
    }

    /// Uniform in ±1/√fan_in for weights and bias.
    pub fn init<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut d = Self::zeros(input, output);
        d.weight
            .iter_mut()
            .chain(d.bias.iter_mut())
            .for_each(|v| *v = rng.random_range(-bound..bound));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = Array2::zeros((x.nrows(), self.output_dim()));
        y.rows_mut()
            .into_iter()
            .for_each(|mut r| r.assign(&self.bias));
        general_mat_mul(1.0, x, &self.weight, 1.0, &mut y);
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `∂L/∂x`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Dense) -> Array2<f64> {
        general_mat_mul(1.0, &x.t(), dy, 1.0, &mut grad.weight);
        grad.bias += &dy.sum_axis(Axis(0));
        let mut dx = Array2::zeros((dy.nrows(), self.input_dim()));
        general_mat_mul(1.0, dy, &self.weight.t(), 0.0, &mut dx);
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
    pub activation: Activation,
}

/// Everything the backward pass of one [`Mlp`] call needs.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    preacts: Vec<Array2<f64>>,
    masks: Vec<Option<Array2<f64>>>,
}

impl Mlp {
    /// `depth` dense layers: `input → hidden → … → output`.
    pub fn init<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        depth: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(depth >= 1);
        let dims: Vec<usize> = std::iter::once(input)
            .chain(std::iter::repeat_n(hidden, depth - 1))
            .chain(std::iter::once(output))
            .collect();
        let layers = dims
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Self { layers, activation }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|d| Dense::zeros(d.input_dim(), d.output_dim()))
                .collect(),
            activation: self.activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().output_dim()
    }

    /// Inference forward, no cache.
    pub fn predict(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut a = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            a.mapv_inplace(|z| self.activation.apply(z));
            a = layer.forward(&a);
        }
        a
    }

    /// Training forward. With `dropout = Some((p, rng))` an inverted-dropout
    /// mask follows every hidden activation.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        x: Array2<f64>,
        mut dropout: Option<(f64, &mut R)>,
    ) -> (Array2<f64>, MlpCache) {
        let n = self.layers.len();
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(n),
            preacts: Vec::with_capacity(n - 1),
            masks: Vec::with_capacity(n - 1),
        };
        let mut a = x;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&a);
            cache.inputs.push(a);
            if i + 1 == n {
                return (z, cache);
            }
            let mut h = z.mapv(|v| self.activation.apply(v));
            let mask = match dropout.as_mut() {
                Some((p, rng)) if *p > 0.0 => {
                    let keep = 1.0 - *p;
                    let m = Array2::from_shape_simple_fn(h.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    h *= &m;
                    Some(m)
                }
                _ => None,
            };
            cache.preacts.push(z);
            cache.masks.push(mask);
            a = h;
        }
        unreachable!("mlp has at least one layer")
    }

    pub fn backward(&self, cache: &MlpCache, dy: Array2<f64>, grad: &mut Mlp) -> Array2<f64> {
        let mut d = dy;
        for i in (0..self.layers.len()).rev() {
            if i + 1 < self.layers.len() {
                if let Some(m) = &cache.masks[i] {
                    d *= m;
                }
                let act = self.activation;
                Zip::from(&mut d)
                    .and(&cache.preacts[i])
                    .for_each(|g, &z| *g *= act.derivative(z));
            }
            d = self.layers[i].backward(&cache.inputs[i], &d, &mut grad.layers[i]);
        }
        d
    }

    pub(crate) fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|d| {
            [
                d.weight.as_slice().expect("standard layout"),
                d.bias.as_slice().expect("standard layout"),
            ]
        })
    }

    pub(crate) fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|d| {
            [
                d.weight.as_slice_mut().expect("standard layout"),
                d.bias.as_slice_mut().expect("standard layout"),
            ]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(mlp: &Mlp, x: &Array2<f64>) -> f64 {
        mlp.predict(x).iter().map(|v| 0.5 * v * v).sum()
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for act in [Activation::Silu, Activation::Tanh] {
            let mut mlp = Mlp::init(4, 6, 3, 3, act, &mut rng);
            let x = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 4 + j) as f64 * 0.37).sin());
            let (y, cache) = mlp.forward::<ChaCha8Rng>(x.clone(), None);
            let mut grad = mlp.zeros_like();
            let dx = mlp.backward(&cache, y.clone(), &mut grad);

            let eps = 1e-6;
            let analytic: Vec<f64> = grad.slices().flat_map(|s| s.to_vec()).collect();
            let mut k = 0;
            let n_params: usize = mlp.slices().map(|s| s.len()).sum();
            while k < n_params {
                let orig = get(&mlp, k);
                set(&mut mlp, k, orig + eps);
                let lp = loss(&mlp, &x);
                set(&mut mlp, k, orig - eps);
                let lm = loss(&mlp, &x);
                set(&mut mlp, k, orig);
                let fd = (lp - lm) / (2.0 * eps);
                assert!(
                    (fd - analytic[k]).abs() < 1e-7 * (1.0 + fd.abs()),
                    "{k}: {fd} vs {}",
                    analytic[k]
                );
                k += 1;
            }
            // input gradient
            for i in 0..5 {
                for j in 0..4 {
                    let mut xp = x.clone();
                    xp[[i, j]] += eps;
                    let mut xm = x.clone();
                    xm[[i, j]] -= eps;
                    let fd = (loss(&mlp, &xp) - loss(&mlp, &xm)) / (2.0 * eps);
                    assert!((fd - dx[[i, j]]).abs() < 1e-7 * (1.0 + fd.abs()));
                }
            }
        }
    }

    fn get(m: &Mlp, mut k: usize) -> f64 {
        for s in m.slices() {
            if k < s.len() {
                return s[k];
            }
            k -= s.len();
        }
        panic!()
    }

    fn set(m: &mut Mlp, mut k: usize, v: f64) {
        for s in m.slices_mut() {
            if k < s.len() {
                s[k] = v;
                return;
            }
            k -= s.len();
        }
    }

    #[test]
    fn dropout_zero_rate_matches_predict() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mlp = Mlp::init(3, 8, 2, 2, Activation::Silu, &mut rng);
        let x = Array2::from_elem((4, 3), 0.3);
        let (y, _) = mlp.forward(x.clone(), Some((0.0, &mut rng)));
        assert_eq!(y, mlp.predict(&x));
    }

    #[test]
    fn dropout_masks_are_inverted() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = Mlp::init(3, 200, 1, 2, Activation::Silu, &mut rng);
        let (_, cache) = mlp.forward(Array2::from_elem((10, 3), 1.0), Some((0.25, &mut rng)));
        let m = cache.masks[0].as_ref().unwrap();
        assert!(m
            .iter()
            .all(|&v| v == 0.0 || (v - 1.0 / 0.75).abs() < 1e-15));
        let kept = m.iter().filter(|&&v| v > 0.0).count() as f64 / m.len() as f64;
        assert!((kept - 0.75).abs() < 0.03);
    }
}
