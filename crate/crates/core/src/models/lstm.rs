//! Single-layer LSTM regressor with a dense rectifier head, trained by
//! backpropagation through time and Adam.
//!
//! All parameters live in one flat vector so the optimizer, the
//! finite-difference check and serialization treat them uniformly.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub hidden: usize,
    pub dense: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    pub patience: usize,
    pub init_scale: f64,
    pub forget_bias: f64,
}

impl Default for LstmParams {
    fn default() -> Self {
        Self {
            hidden: 32,
            dense: 16,
            dropout: 0.2,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-7,
            batch_size: 32,
            max_epochs: 50,
            validation_fraction: 0.1,
            patience: 5,
            init_scale: 0.08,
            forget_bias: 1.0,
        }
    }
}

impl LstmParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden == 0 || self.dense == 0 {
            return Err("lstm layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("lstm dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("lstm learning rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.adam_epsilon <= 0.0 {
            return Err("adam moments must lie in [0, 1) with positive epsilon".into());
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err("lstm batch size and epoch count must be positive".into());
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(format!("validation fraction {} outside [0, 1)", self.validation_fraction));
        }
        if !(self.init_scale >= 0.0) {
            return Err("lstm init scale must be non-negative".into());
        }
        Ok(())
    }
}

/// Offsets of each parameter block inside the flat vector.
#[derive(Debug, Clone, Copy)]
struct Layout {
    wx: usize,
    wh: usize,
    b: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    len: usize,
}

impl Layout {
    fn new(n_in: usize, hidden: usize, dense: usize) -> Self {
        let g = 4 * hidden;
        let wx = 0;
        let wh = wx + g * n_in;
        let b = wh + g * hidden;
        let w1 = b + g;
        let b1 = w1 + dense * hidden;
        let w2 = b1 + dense;
        let b2 = w2 + dense;
        Self {
            wx,
            wh,
            b,
            w1,
            b1,
            w2,
            b2,
            len: b2 + 1,
        }
    }
}

/// Gate rows are stacked as input, forget, candidate, output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmNet<T> {
    pub n_in: usize,
    pub hidden: usize,
    pub dense: usize,
    pub theta: Vec<T>,
}

struct Cache<T> {
    steps: usize,
    /// Activated gates, `steps * 4H`.
    gates: Vec<T>,
    /// Cell states, `(steps + 1) * H`, starting from zero.
    cells: Vec<T>,
    /// Hidden states, `(steps + 1) * H`, starting from zero.
    hs: Vec<T>,
    dropped: Vec<T>,
    z1: Vec<T>,
    a1: Vec<T>,
    y: T,
}

fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

impl<T: Real> LstmNet<T> {
    pub fn init(n_in: usize, params: &LstmParams, seed_value: u64) -> Self {
        let lay = Layout::new(n_in, params.hidden, params.dense);
        let mut rng = seed::rng(seed_value);
        let a = params.init_scale;
        let mut theta: Vec<T> = (0..lay.len)
            .map(|_| if a > 0.0 { T::of(rng.random_range(-a..=a)) } else { T::zero() })
            .collect();
        let h = params.hidden;
        for v in &mut theta[lay.b..lay.b + 4 * h] {
            *v = T::zero();
        }
        for v in &mut theta[lay.b + h..lay.b + 2 * h] {
            *v = T::of(params.forget_bias);
        }
        for v in &mut theta[lay.b1..lay.b1 + params.dense] {
            *v = T::zero();
        }
        theta[lay.b2] = T::zero();
        Self {
            n_in,
            hidden: h,
            dense: params.dense,
            theta,
        }
    }

    fn layout(&self) -> Layout {
        Layout::new(self.n_in, self.hidden, self.dense)
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    /// Zeroes the hidden-to-hidden weights.
    pub fn zero_recurrent(&mut self) {
        let lay = self.layout();
        for v in &mut self.theta[lay.wh..lay.b] {
            *v = T::zero();
        }
    }

    fn forward(&self, window: &[T], mask: Option<&[T]>) -> Cache<T> {
        let (f, h, d) = (self.n_in, self.hidden, self.dense);
        let g4 = 4 * h;
        let lay = self.layout();
        let th = &self.theta;
        let steps = window.len() / f;
        let mut gates = vec![T::zero(); steps * g4];
        let mut cells = vec![T::zero(); (steps + 1) * h];
        let mut hs = vec![T::zero(); (steps + 1) * h];
        let mut pre = vec![T::zero(); g4];
        for s in 0..steps {
            let x = &window[s * f..(s + 1) * f];
            let h_prev = &hs[s * h..(s + 1) * h];
            for (r, p) in pre.iter_mut().enumerate() {
                let wx = &th[lay.wx + r * f..lay.wx + (r + 1) * f];
                let wh = &th[lay.wh + r * h..lay.wh + (r + 1) * h];
                let mut acc = th[lay.b + r];
                for (&w, &v) in wx.iter().zip(x) {
                    acc += w * v;
                }
                for (&w, &v) in wh.iter().zip(h_prev) {
                    acc += w * v;
                }
                *p = acc;
            }
            let gs = &mut gates[s * g4..(s + 1) * g4];
            for k in 0..h {
                gs[k] = sigmoid(pre[k]);
                gs[h + k] = sigmoid(pre[h + k]);
                gs[2 * h + k] = pre[2 * h + k].tanh();
                gs[3 * h + k] = sigmoid(pre[3 * h + k]);
            }
            for k in 0..h {
                let c = gs[h + k] * cells[s * h + k] + gs[k] * gs[2 * h + k];
                cells[(s + 1) * h + k] = c;
                hs[(s + 1) * h + k] = gs[3 * h + k] * c.tanh();
            }
        }
        let last = &hs[steps * h..];
        let dropped: Vec<T> = match mask {
            Some(m) => last.iter().zip(m).map(|(&a, &b)| a * b).collect(),
            None => last.to_vec(),
        };
        let mut z1 = vec![T::zero(); d];
        let mut a1 = vec![T::zero(); d];
        let mut y = th[lay.b2];
        for j in 0..d {
            let w = &th[lay.w1 + j * h..lay.w1 + (j + 1) * h];
            let mut acc = th[lay.b1 + j];
            for (&a, &b) in w.iter().zip(&dropped) {
                acc += a * b;
            }
            z1[j] = acc;
            a1[j] = acc.max(T::zero());
            y += th[lay.w2 + j] * a1[j];
        }
        Cache {
            steps,
            gates,
            cells,
            hs,
            dropped,
            z1,
            a1,
            y,
        }
    }

    pub fn predict(&self, window: &[T]) -> T {
        self.forward(window, None).y
    }

    /// Accumulates `dy * d(output)/d(theta)` into `grad`.
    fn backward(&self, window: &[T], mask: Option<&[T]>, cache: &Cache<T>, dy: T, grad: &mut [T]) {
        let (f, h, d) = (self.n_in, self.hidden, self.dense);
        let g4 = 4 * h;
        let lay = self.layout();
        let th = &self.theta;

        grad[lay.b2] += dy;
        let mut dh = vec![T::zero(); h];
        for j in 0..d {
            grad[lay.w2 + j] += dy * cache.a1[j];
            if cache.z1[j] <= T::zero() {
                continue;
            }
            let dz = dy * th[lay.w2 + j];
            grad[lay.b1 + j] += dz;
            let gw = &mut grad[lay.w1 + j * h..lay.w1 + (j + 1) * h];
            for (g, &v) in gw.iter_mut().zip(&cache.dropped) {
                *g += dz * v;
            }
            let w = &th[lay.w1 + j * h..lay.w1 + (j + 1) * h];
            for (acc, &v) in dh.iter_mut().zip(w) {
                *acc += dz * v;
            }
        }
        if let Some(m) = mask {
            for (a, &b) in dh.iter_mut().zip(m) {
                *a *= b;
            }
        }

        let mut dc = vec![T::zero(); h];
        let mut da = vec![T::zero(); g4];
        for s in (0..cache.steps).rev() {
            let gs = &cache.gates[s * g4..(s + 1) * g4];
            let c_prev = &cache.cells[s * h..(s + 1) * h];
            let c = &cache.cells[(s + 1) * h..(s + 2) * h];
            for k in 0..h {
                let (i, fg, g, o) = (gs[k], gs[h + k], gs[2 * h + k], gs[3 * h + k]);
                let tc = c[k].tanh();
                let dck = dc[k] + dh[k] * o * (T::one() - tc * tc);
                da[k] = dck * g * i * (T::one() - i);
                da[h + k] = dck * c_prev[k] * fg * (T::one() - fg);
                da[2 * h + k] = dck * i * (T::one() - g * g);
                da[3 * h + k] = dh[k] * tc * o * (T::one() - o);
                dc[k] = dck * fg;
            }
            let x = &window[s * f..(s + 1) * f];
            let h_prev = &cache.hs[s * h..(s + 1) * h];
            dh.iter_mut().for_each(|v| *v = T::zero());
            for (r, &dr) in da.iter().enumerate() {
                grad[lay.b + r] += dr;
                let gx = &mut grad[lay.wx + r * f..lay.wx + (r + 1) * f];
                for (g, &v) in gx.iter_mut().zip(x) {
                    *g += dr * v;
                }
                let gh = &mut grad[lay.wh + r * h..lay.wh + (r + 1) * h];
                for (g, &v) in gh.iter_mut().zip(h_prev) {
                    *g += dr * v;
                }
                let wh = &th[lay.wh + r * h..lay.wh + (r + 1) * h];
                for (acc, &w) in dh.iter_mut().zip(wh) {
                    *acc += dr * w;
                }
            }
        }
    }

    /// Mean squared error over the given samples without dropout.
    pub fn loss(&self, windows: &[&[T]], targets: &[T]) -> T {
        if targets.is_empty() {
            return T::zero();
        }
        let sse: T = windows
            .iter()
            .zip(targets)
            .map(|(w, &t)| {
                let e = self.predict(w) - t;
                e * e
            })
            .sum();
        sse / T::of_usize(targets.len())
    }

    /// Mean squared error and its gradient. `masks[i]`, when given, is the
    /// inverted-dropout mask applied to the final hidden state of sample `i`.
    pub fn loss_and_grad(&self, windows: &[&[T]], targets: &[T], masks: Option<&[Vec<T>]>) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.theta.len()];
        let n = T::of_usize(targets.len().max(1));
        let mut sse = T::zero();
        for (i, (w, &t)) in windows.iter().zip(targets).enumerate() {
            let mask = masks.map(|m| m[i].as_slice());
            let cache = self.forward(w, mask);
            let e = cache.y - t;
            sse += e * e;
            self.backward(w, mask, &cache, T::of(2.0) * e / n, &mut grad);
        }
        (sse / n, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub step: u64,
}

impl<T: Real> AdamState<T> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            step: 0,
        }
    }

    fn apply(&mut self, theta: &mut [T], grad: &[T], p: &LstmParams) {
        self.step += 1;
        let (b1, b2) = (T::of(p.beta1), T::of(p.beta2));
        let t = self.step as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let lr = T::of(p.learning_rate);
        let eps = T::of(p.adam_epsilon);
        for (((w, &g), m), v) in theta.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (T::one() - b1) * g;
            *v = b2 * *v + (T::one() - b2) * g * g;
            *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub epochs: usize,
    pub best_epoch: usize,
    pub initial_loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("non-finite value in lstm {0} during training")]
pub struct NonFinite(pub &'static str);

/// Optimizes `net` on prepared windows and targets. The last
/// `validation_fraction` of the samples monitors early stopping; the best
/// monitored parameters (including the starting point) are restored at the end.
pub fn fit<T: Real>(
    net: &mut LstmNet<T>,
    adam: &mut AdamState<T>,
    windows: &[&[T]],
    targets: &[T],
    params: &LstmParams,
    seed_value: u64,
) -> Result<FitReport, NonFinite> {
    let n = targets.len();
    let mut n_val = (n as f64 * params.validation_fraction).floor() as usize;
    if n_val >= n {
        n_val = 0;
    }
    let n_train = n - n_val;
    let (train_w, val_w) = windows.split_at(n_train);
    let (train_y, val_y) = targets.split_at(n_train);
    let monitor = |net: &LstmNet<T>| {
        if n_val > 0 {
            net.loss(val_w, val_y)
        } else {
            net.loss(train_w, train_y)
        }
    };

    let initial = monitor(net);
    if !initial.is_finite() {
        return Err(NonFinite("loss"));
    }
    let mut best = initial;
    let mut best_theta = net.theta.clone();
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut epochs = 0;
    let keep = T::one() - T::of(params.dropout);
    let mut order: Vec<usize> = (0..n_train).collect();

    for epoch in 0..params.max_epochs {
        epochs = epoch + 1;
        let mut rng = seed::rng(seed::derive(seed_value, &[epoch as u64]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let bw: Vec<&[T]> = batch.iter().map(|&i| train_w[i]).collect();
            let by: Vec<T> = batch.iter().map(|&i| train_y[i]).collect();
            let masks: Option<Vec<Vec<T>>> = (params.dropout > 0.0).then(|| {
                batch
                    .iter()
                    .map(|_| {
                        (0..net.hidden)
                            .map(|_| {
                                if rng.random::<f64>() < params.dropout {
                                    T::zero()
                                } else {
                                    T::one() / keep
                                }
                            })
                            .collect()
                    })
                    .collect()
            });
            let (_, grad) = net.loss_and_grad(&bw, &by, masks.as_deref());
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(NonFinite("gradient"));
            }
            adam.apply(&mut net.theta, &grad, params);
            if net.theta.iter().any(|w| !w.is_finite()) {
                return Err(NonFinite("parameter"));
            }
        }
        let loss = monitor(net);
        if !loss.is_finite() {
            return Err(NonFinite("loss"));
        }
        if loss < best {
            best = loss;
            best_theta.copy_from_slice(&net.theta);
            best_epoch = epoch + 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= params.patience {
                break;
            }
        }
    }
    net.theta = best_theta;
    Ok(FitReport {
        epochs,
        best_epoch,
        initial_loss: initial.as_f64(),
        best_loss: best.as_f64(),
    })
}

/// Shape of the network used by [`lstm_gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradCheckDims {
    pub steps: usize,
    pub n_in: usize,
    pub hidden: usize,
    pub dense: usize,
    pub n_samples: usize,
    pub zero_recurrent: bool,
}

impl Default for GradCheckDims {
    fn default() -> Self {
        Self {
            steps: 3,
            n_in: 2,
            hidden: 4,
            dense: 3,
            n_samples: 4,
            zero_recurrent: false,
        }
    }
}

pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Largest relative error between the analytic gradient of the mean squared
/// error and central finite differences, over every parameter. Relative error
/// is `|a - n| / max(|a|, |n|, 1e-6)`. Dropout is off.
pub fn lstm_gradient_check(dims: GradCheckDims, seed_value: u64) -> f64 {
    let params = LstmParams {
        hidden: dims.hidden,
        dense: dims.dense,
        init_scale: 0.5,
        ..LstmParams::default()
    };
    let mut net = LstmNet::<f64>::init(dims.n_in, &params, seed::derive(seed_value, &[0]));
    if dims.zero_recurrent {
        net.zero_recurrent();
    }
    // nudge biases off zero so every path carries signal
    let mut rng = seed::rng(seed::derive(seed_value, &[1]));
    let lay = net.layout();
    for i in (lay.b..lay.w1).chain(lay.b1..lay.w2).chain(lay.b2..lay.len) {
        net.theta[i] += rng.random_range(-0.3..0.3);
    }
    let data: Vec<Vec<f64>> = (0..dims.n_samples)
        .map(|_| (0..dims.steps * dims.n_in).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    let targets: Vec<f64> = (0..dims.n_samples).map(|_| rng.random_range(-1.0..1.0)).collect();
    let windows: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
    let (_, analytic) = net.loss_and_grad(&windows, &targets, None);
    let mut worst = 0.0_f64;
    for i in 0..net.n_params() {
        let orig = net.theta[i];
        net.theta[i] = orig + GRAD_CHECK_STEP;
        let up = net.loss(&windows, &targets);
        net.theta[i] = orig - GRAD_CHECK_STEP;
        let down = net.loss(&windows, &targets);
        net.theta[i] = orig;
        let numeric = (up - down) / (2.0 * GRAD_CHECK_STEP);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}
