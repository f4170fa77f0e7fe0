//! Implicit neural representation of the material maps.
//!
//! Coordinates pass through fixed random Fourier features, a stack of
//! weight-normalized SiLU layers, and a two-unit head squashed by sigmoids
//! into `Δε ∈ (0, ε_max - 1)` and `σ ∈ (0, σ_max)`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub n_features: usize,
    pub sigma_ff: f64,
    pub hidden: Vec<usize>,
    pub eps_max: f64,
    pub sigma_max: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    pub output_bias: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            n_features: 128,
            sigma_ff: 3.0,
            hidden: vec![256; 3],
            eps_max: 80.0,
            sigma_max: 1.0,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            output_bias: -3.0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("network: {m}")));
        if self.n_features == 0 || self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("feature count and every hidden width must be >= 1");
        }
        if !(self.eps_max > 1.0) {
            return bad("eps_max must exceed 1");
        }
        if !(self.sigma_max > 0.0) {
            return bad("sigma_max must be positive");
        }
        if !(self.lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("Adam hyperparameters out of range");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerLayout {
    pub n_in: usize,
    pub n_out: usize,
    pub v: usize,
    pub g: usize,
    pub b: usize,
}

/// Adam first/second moments over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(len: usize) -> Self {
        AdamState { m: vec![T::zero(); len], v: vec![T::zero(); len], step: 0 }
    }

    /// One bias-corrected Adam update of `params` with gradient `grads`.
    pub fn update(&mut self, params: &mut [T], grads: &[T], lr: f64, beta1: f64, beta2: f64, eps: f64) {
        self.step += 1;
        let (b1, b2) = (T::of(beta1), T::of(beta2));
        let c1 = T::of(1.0 - beta1.powi(self.step as i32));
        let c2 = T::of(1.0 - beta2.powi(self.step as i32));
        let (lr, eps) = (T::of(lr), T::of(eps));
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Fails on non-finite entries; returns the norm before clipping.
pub fn clip_global_norm<T: Real>(grads: &mut [T], max_norm: f64, what: &str) -> Result<f64> {
    let norm = grads.iter().fold(0.0f64, |acc, g| acc + g.as_f64() * g.as_f64()).sqrt();
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!("{what} gradient")));
    }
    if norm > max_norm {
        let s = T::of(max_norm / norm);
        grads.iter_mut().for_each(|g| *g *= s);
    }
    Ok(norm)
}

/// Network parameters, fixed features and optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState<T: Real> {
    pub cfg: NetConfig,
    /// Fixed `n_features × 2` frequency matrix.
    pub features: Array2<T>,
    /// Every trainable parameter, laid out per [`LayerLayout`].
    pub params: Vec<T>,
    pub layout: Vec<LayerLayout>,
    pub adam: AdamState<T>,
    /// Bumped on every parameter update; caches remember the value they saw.
    pub version: u64,
}

/// Output of a forward pass: material maps plus activations for backprop.
#[derive(Clone, Debug)]
pub struct ForwardCache<T: Real> {
    pub delta_eps: Vec<T>,
    pub sigma: Vec<T>,
    version: u64,
    /// Input to every layer (features first).
    inputs: Vec<Array2<T>>,
    /// Pre-activation of every layer.
    pre: Vec<Array2<T>>,
    weights: Vec<Array2<T>>,
    norms: Vec<Array1<T>>,
}

/// Gradients shaped like [`NetworkState::params`].
pub type ParamGrads<T> = Vec<T>;

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn silu<T: Real>(x: T) -> T {
    x * sigmoid(x)
}

fn silu_prime<T: Real>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::one() + x * (T::one() - s))
}

impl<T: Real> NetworkState<T> {
    pub fn init(seed: u64, cfg: &NetConfig) -> Result<Self> {
        cfg.validate()?;
        let mut net = Self::skeleton(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        net.features.iter_mut().for_each(|b| *b = T::of(cfg.sigma_ff * normal()));
        let last = net.layout.len() - 1;
        for (li, l) in net.layout.iter().enumerate() {
            let std = 1.0 / (l.n_in as f64).sqrt();
            let v = &mut net.params[l.v..l.g];
            v.iter_mut().for_each(|w| *w = T::of(std * normal()));
            for row in 0..l.n_out {
                let r = &net.params[l.v + row * l.n_in..l.v + (row + 1) * l.n_in];
                net.params[l.g + row] = r.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
            }
            let bias = if li == last { T::of(cfg.output_bias) } else { T::zero() };
            net.params[l.b..l.b + l.n_out].iter_mut().for_each(|b| *b = bias);
        }
        Ok(net)
    }

    /// Zero-filled network with the architecture of `cfg` (not validated).
    pub fn skeleton(cfg: &NetConfig) -> Self {
        let mut widths = vec![2 * cfg.n_features];
        widths.extend(&cfg.hidden);
        widths.push(2);
        let mut layout = Vec::new();
        let mut n = 0;
        for w in widths.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let v = n;
            let g = v + n_in * n_out;
            let b = g + n_out;
            n = b + n_out;
            layout.push(LayerLayout { n_in, n_out, v, g, b });
        }
        NetworkState {
            cfg: cfg.clone(),
            features: Array2::zeros((cfg.n_features, 2)),
            params: vec![T::zero(); n],
            layout,
            adam: AdamState::new(n),
            version: 0,
        }
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn direction(&self, l: &LayerLayout) -> ArrayView2<'_, T> {
        ArrayView2::from_shape((l.n_out, l.n_in), &self.params[l.v..l.v + l.n_out * l.n_in]).expect("layout")
    }

    fn magnitude(&self, l: &LayerLayout) -> ArrayView1<'_, T> {
        ArrayView1::from(&self.params[l.g..l.g + l.n_out])
    }

    fn bias(&self, l: &LayerLayout) -> ArrayView1<'_, T> {
        ArrayView1::from(&self.params[l.b..l.b + l.n_out])
    }

    /// Effective weights `g_i·V_i/‖V_i‖` and the row norms `‖V_i‖`.
    pub fn effective_weights(&self, layer: usize) -> (Array2<T>, Array1<T>) {
        let l = self.layout[layer];
        let v = self.direction(&l);
        let g = self.magnitude(&l);
        let norms: Array1<T> = v.map_axis(Axis(1), |r| r.iter().fold(T::zero(), |a, &x| a + x * x).sqrt());
        let mut w = v.to_owned();
        for (i, mut row) in w.axis_iter_mut(Axis(0)).enumerate() {
            let s = g[i] / norms[i];
            row.mapv_inplace(|x| x * s);
        }
        (w, norms)
    }

    /// Fourier embedding `[sin(2πBr), cos(2πBr)]` for each coordinate.
    pub fn embed(&self, coords: &[[f64; 2]]) -> Array2<T> {
        let m = self.cfg.n_features;
        let two_pi = T::of(2.0 * std::f64::consts::PI);
        let mut out = Array2::zeros((coords.len(), 2 * m));
        for (p, c) in coords.iter().enumerate() {
            let (x, y) = (T::of(c[0]), T::of(c[1]));
            for k in 0..m {
                let phase = two_pi * (self.features[[k, 0]] * x + self.features[[k, 1]] * y);
                out[[p, k]] = phase.sin();
                out[[p, m + k]] = phase.cos();
            }
        }
        out
    }

    /// Evaluates the material maps at normalized coordinates in `[-1, 1]²`.
    pub fn forward(&self, coords: &[[f64; 2]]) -> ForwardCache<T> {
        self.forward_embedded(&self.embed(coords))
    }

    /// Forward pass from a precomputed embedding (see [`Self::embed`]).
    pub fn forward_embedded(&self, embedded: &Array2<T>) -> ForwardCache<T> {
        let n_layers = self.layout.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre = Vec::with_capacity(n_layers);
        let mut weights = Vec::with_capacity(n_layers);
        let mut norms = Vec::with_capacity(n_layers);
        let mut h = embedded.clone();
        for (li, l) in self.layout.iter().enumerate() {
            let (w, n) = self.effective_weights(li);
            let mut z = h.dot(&w.t());
            z += &self.bias(l);
            let next = if li + 1 < n_layers { z.mapv(silu) } else { Array2::zeros((0, 0)) };
            inputs.push(h);
            pre.push(z);
            weights.push(w);
            norms.push(n);
            h = next;
        }
        let out = pre.last().expect("at least one layer");
        let de_scale = T::of(self.cfg.eps_max - 1.0);
        let sg_scale = T::of(self.cfg.sigma_max);
        let delta_eps = out.column(0).iter().map(|&z| de_scale * sigmoid(z)).collect();
        let sigma = out.column(1).iter().map(|&z| sg_scale * sigmoid(z)).collect();
        ForwardCache { delta_eps, sigma, version: self.version, inputs, pre, weights, norms }
    }

    /// Reverse-mode gradients of a loss given its derivatives with respect to
    /// the two output maps.
    pub fn backward(&self, cache: &ForwardCache<T>, d_delta_eps: &[T], d_sigma: &[T]) -> Result<ParamGrads<T>> {
        if cache.version != self.version || cache.weights.len() != self.layout.len() {
            return Err(Error::StaleCache);
        }
        let n_pts = cache.delta_eps.len();
        if d_delta_eps.len() != n_pts || d_sigma.len() != n_pts {
            return Err(Error::dims(n_pts, d_delta_eps.len().min(d_sigma.len())));
        }
        let mut grads = vec![T::zero(); self.params.len()];
        let last = self.layout.len() - 1;
        let out = &cache.pre[last];
        let de_scale = T::of(self.cfg.eps_max - 1.0);
        let sg_scale = T::of(self.cfg.sigma_max);
        let mut dz = Array2::zeros((n_pts, 2));
        for p in 0..n_pts {
            let s0 = sigmoid(out[[p, 0]]);
            let s1 = sigmoid(out[[p, 1]]);
            dz[[p, 0]] = d_delta_eps[p] * de_scale * s0 * (T::one() - s0);
            dz[[p, 1]] = d_sigma[p] * sg_scale * s1 * (T::one() - s1);
        }
        for li in (0..=last).rev() {
            let l = self.layout[li];
            let dw = dz.t().dot(&cache.inputs[li]);
            let db = dz.sum_axis(Axis(0));
            grads[l.b..l.b + l.n_out].iter_mut().zip(db.iter()).for_each(|(g, &d)| *g = d);
            // weight-norm backward
            let v = self.direction(&l);
            let g = self.magnitude(&l);
            let norms = &cache.norms[li];
            for i in 0..l.n_out {
                let dwi = dw.row(i);
                let vi = v.row(i);
                let dot = dwi.dot(&vi);
                let n = norms[i];
                grads[l.g + i] = dot / n;
                let coef = g[i] / n;
                let proj = dot / (n * n);
                let dst = &mut grads[l.v + i * l.n_in..l.v + (i + 1) * l.n_in];
                for ((d, &a), &b) in dst.iter_mut().zip(dwi.iter()).zip(vi.iter()) {
                    *d = coef * (a - proj * b);
                }
            }
            if li > 0 {
                let dh = dz.dot(&cache.weights[li]);
                let z_prev = &cache.pre[li - 1];
                dz = ndarray::Zip::from(&dh).and(z_prev).map_collect(|&d, &z| d * silu_prime(z));
            }
        }
        Ok(grads)
    }

    /// Global-norm clip followed by one Adam step at learning rate `lr`.
    pub fn adam_step(&mut self, grads: &mut [T], max_norm: f64, lr: f64) -> Result<f64> {
        if grads.len() != self.params.len() {
            return Err(Error::dims(self.params.len(), grads.len()));
        }
        let norm = clip_global_norm(grads, max_norm, "network")?;
        let c = &self.cfg;
        self.adam.update(&mut self.params, grads, lr, c.beta1, c.beta2, c.eps_adam);
        self.version += 1;
        Ok(norm)
    }

    /// Direct view of one layer's `(V, g, b)` slices, for inspection.
    pub fn layer_params(&self, layer: usize) -> (ArrayView2<'_, T>, ArrayView1<'_, T>, ArrayView1<'_, T>) {
        let l = self.layout[layer];
        (self.direction(&l), self.magnitude(&l), self.bias(&l))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn tiny_cfg() -> NetConfig {
        NetConfig { n_features: 4, hidden: vec![5, 3], ..NetConfig::default() }
    }

    fn coords(n: usize) -> Vec<[f64; 2]> {
        (0..n).map(|i| {
            let t = i as f64 / n as f64;
            [2.0 * t - 1.0, (7.0 * t).sin()]
        }).collect()
    }

    fn weighted_loss(net: &NetworkState<f64>, pts: &[[f64; 2]], a: &[f64], b: &[f64]) -> f64 {
        let c = net.forward(pts);
        c.delta_eps.iter().zip(a).map(|(x, w)| w * x).sum::<f64>()
            + c.sigma.iter().zip(b).map(|(x, w)| w * x * x).sum::<f64>()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let cfg = NetConfig { sigma_ff: 0.7, output_bias: 0.3, ..tiny_cfg() };
        let mut net = NetworkState::<f64>::init(3, &cfg).unwrap();
        let pts = coords(9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward(&pts);
        let db: Vec<f64> = cache.sigma.iter().zip(&b).map(|(s, w)| 2.0 * w * s).collect();
        let grads = net.backward(&cache, &a, &db).unwrap();
        let h = 1e-4;
        let mut worst = 0.0f64;
        for i in 0..net.n_params() {
            let orig = net.params[i];
            let mut at = |d: f64| {
                net.params[i] = orig + d;
                weighted_loss(&net, &pts, &a, &b)
            };
            let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
            net.params[i] = orig;
            let fd = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
            worst = worst.max((fd - grads[i]).abs() / (1e-6 + fd.abs().max(grads[i].abs())));
        }
        assert!(worst < 1e-6, "worst relative gradient error {worst}");
    }

    #[test]
    fn single_hidden_layer_matches_central_differences() {
        let cfg = NetConfig { n_features: 4, hidden: vec![8], sigma_ff: 1.0, ..NetConfig::default() };
        let mut net = NetworkState::<f64>::init(8, &cfg).unwrap();
        let pts = coords(12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward(&pts);
        let db: Vec<f64> = cache.sigma.iter().zip(&b).map(|(s, w)| 2.0 * w * s).collect();
        let grads = net.backward(&cache, &a, &db).unwrap();
        let eps = 1e-5;
        for i in 0..net.n_params() {
            let orig = net.params[i];
            net.params[i] = orig + eps;
            let up = weighted_loss(&net, &pts, &a, &b);
            net.params[i] = orig - eps;
            let down = weighted_loss(&net, &pts, &a, &b);
            net.params[i] = orig;
            let fd = (up - down) / (2.0 * eps);
            let rel = (fd - grads[i]).abs() / fd.abs().max(grads[i].abs()).max(1e-3);
            assert!(rel <= 1e-5, "parameter {i}: analytic {} vs {fd}", grads[i]);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let net = NetworkState::<f64>::init(1, &tiny_cfg()).unwrap();
        let pts = coords(5);
        let g = net.backward(&net.forward(&pts), &[0.0; 5], &[0.0; 5]).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn degenerate_features_give_constant_maps() {
        let mut net = NetworkState::<f64>::init(6, &tiny_cfg()).unwrap();
        net.features.fill(0.0);
        let c = net.forward(&coords(20));
        assert!(c.delta_eps.iter().all(|&x| x == c.delta_eps[0]));
        assert!(c.sigma.iter().all(|&x| x == c.sigma[0]));
    }

    #[test]
    fn doubling_gain_doubles_row_preactivation() {
        let mut net = NetworkState::<f64>::init(7, &tiny_cfg()).unwrap();
        let l = net.layout[1];
        let row = 2;
        net.params[l.b + row] = 0.0;
        let pts = coords(10);
        let before = net.forward(&pts).pre[1].clone();
        net.params[l.g + row] *= 2.0;
        let after = net.forward(&pts).pre[1].clone();
        for r in 0..l.n_out {
            let scale = if r == row { 2.0 } else { 1.0 };
            assert_eq!(after.column(r), &before.column(r) * scale);
        }
    }

    #[test]
    fn direction_gradient_is_orthogonal_to_direction() {
        let net = NetworkState::<f64>::init(5, &tiny_cfg()).unwrap();
        let pts = coords(6);
        let cache = net.forward(&pts);
        let ones = vec![1.0; 6];
        let grads = net.backward(&cache, &ones, &ones).unwrap();
        for l in &net.layout {
            for i in 0..l.n_out {
                let r = l.v + i * l.n_in..l.v + (i + 1) * l.n_in;
                let dot: f64 = grads[r.clone()].iter().zip(&net.params[r]).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-12, "{dot}");
            }
        }
    }

    #[test]
    fn outputs_are_bounded() {
        let cfg = NetConfig { eps_max: 5.0, sigma_max: 0.2, output_bias: 0.0, sigma_ff: 10.0, ..tiny_cfg() };
        let mut net = NetworkState::<f64>::init(2, &cfg).unwrap();
        for p in net.params.iter_mut() {
            *p *= 40.0;
        }
        let c = net.forward(&coords(50));
        assert!(c.delta_eps.iter().all(|&x| (0.0..=4.0).contains(&x)));
        assert!(c.sigma.iter().all(|&x| (0.0..=0.2).contains(&x)));
    }

    #[test]
    fn init_is_deterministic_and_starts_near_background() {
        let cfg = NetConfig::default();
        let a = NetworkState::<f64>::init(11, &cfg).unwrap();
        let b = NetworkState::<f64>::init(11, &cfg).unwrap();
        assert_eq!(a, b);
        let c = NetworkState::<f64>::init(12, &cfg).unwrap();
        assert_ne!(a.params, c.params);
        let n = 32;
        let pts: Vec<[f64; 2]> = (0..n * n)
            .map(|i| [-1.0 + (2.0 * (i % n) as f64 + 1.0) / n as f64, -1.0 + (2.0 * (i / n) as f64 + 1.0) / n as f64])
            .collect();
        let out = a.forward(&pts);
        let mean = out.delta_eps.iter().sum::<f64>() / out.delta_eps.len() as f64;
        let frac = mean / (cfg.eps_max - 1.0);
        assert!((0.03..=0.07).contains(&frac), "initial mean fraction {frac}");
        for l in &a.layout {
            let (v, g, _) = a.layer_params(a.layout.iter().position(|x| x == l).unwrap());
            for i in 0..l.n_out {
                let n = v.row(i).dot(&v.row(i)).sqrt();
                assert!((g[i] - n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut net = NetworkState::<f64>::init(0, &tiny_cfg()).unwrap();
        let pts = coords(4);
        let cache = net.forward(&pts);
        let mut g = vec![0.1; net.n_params()];
        net.adam_step(&mut g, 1.0, 1e-3).unwrap();
        let z = vec![0.0; 4];
        assert!(matches!(net.backward(&cache, &z, &z), Err(Error::StaleCache)));
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters() {
        let mut net = NetworkState::<f64>::init(0, &tiny_cfg()).unwrap();
        let before = net.params.clone();
        let mut g = vec![0.0; net.n_params()];
        net.adam_step(&mut g, 1.0, 1e-3).unwrap();
        assert_eq!(before, net.params);
        assert_eq!(net.adam.step, 1);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut st = AdamState::<f64>::new(3);
        let mut p = vec![1.0, 1.0, 1.0];
        st.update(&mut p, &[2.0, -0.5, 1e-3], 0.01, 0.9, 0.999, 1e-8);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] - 1.01).abs() < 1e-9);
        assert!((p[2] - (1.0 - 0.01 * 1e-3 / (1e-3 + 1e-8))).abs() < 1e-12);
    }

    #[test]
    fn global_clip() {
        let mut g = vec![3.0f64, 4.0];
        let n = clip_global_norm(&mut g, 1.0, "t").unwrap();
        assert_eq!(n, 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.3f64, 0.4];
        clip_global_norm(&mut small, 1.0, "t").unwrap();
        assert_eq!(small, vec![0.3, 0.4]);
        let mut bad = vec![f64::NAN];
        assert!(matches!(clip_global_norm(&mut bad, 1.0, "t"), Err(Error::NonFinite(_))));
    }

    #[test]
    fn single_precision_tracks_double() {
        let cfg = tiny_cfg();
        let a = NetworkState::<f64>::init(4, &cfg).unwrap();
        let b = NetworkState::<f32>::init(4, &cfg).unwrap();
        let pts = coords(8);
        let (ca, cb) = (a.forward(&pts), b.forward(&pts));
        for (x, y) in ca.delta_eps.iter().zip(&cb.delta_eps) {
            assert!((x - *y as f64).abs() < 1e-4 * 79.0);
        }
    }

    #[test]
    fn config_validation() {
        assert!(NetConfig { hidden: vec![], ..NetConfig::default() }.validate().is_err());
        assert!(NetConfig { eps_max: 1.0, ..NetConfig::default() }.validate().is_err());
        assert!(NetConfig::default().validate().is_ok());
    }
}
