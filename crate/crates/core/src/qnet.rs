//! Multi-layer perceptron scoring one state-action pair with a scalar Q.
//!
//! Weights are stored input-major (`in × out`) so a batch of row inputs maps
//! through `X · W + b`, and the contribution of a single input unit is a
//! contiguous row. Hidden layers use ReLU; the head is linear.

use std::io::{Read, Write};

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use rand::Rng;
use thiserror::Error;

use crate::features::{ACTION_DIM, INPUT_DIM, STATE_DIM};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"GDQN";
const FORMAT: u32 = 1;

pub const DEFAULT_HIDDEN: [usize; 5] = [512; 5];

#[derive(Debug, Error)]
pub enum QNetError {
    #[error("expected input width {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("corrupt checkpoint at byte {offset}: {what}")]
    Corrupt { offset: usize, what: String },
    #[error("checkpoint stores {stored}-byte floats, expected {expected}")]
    Precision { stored: usize, expected: usize },
    #[error("layer sizes must start at {INPUT_DIM} and end at 1, got {0:?}")]
    Layout(Vec<usize>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T: Scalar> {
    /// `in × out`.
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inp: usize, out: usize) -> Self {
        Dense { w: Array2::zeros((inp, out)), b: Array1::zeros(out) }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }
}

/// Network parameters plus a version counter bumped by every update.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T: Scalar> {
    pub layers: Vec<Dense<T>>,
    pub version: u64,
}

/// Per-layer parameter gradients, shaped like [`Mlp::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar> {
    pub layers: Vec<Dense<T>>,
}

/// Activations kept from a training forward pass.
#[derive(Debug, Clone)]
pub struct Tape<T: Scalar> {
    /// `inputs[l]` is the input to layer `l`; the last entry is the output.
    activations: Vec<Array2<T>>,
}

impl<T: Scalar> Tape<T> {
    pub fn output(&self) -> ArrayView1<'_, T> {
        self.activations.last().expect("output").column(0)
    }
}

impl<T: Scalar> Mlp<T> {
    /// `sizes` lists every width from input to output, e.g. `[567, 512, 1]`.
    pub fn zeros(sizes: &[usize]) -> Self {
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Mlp { layers, version: 0 }
    }

    /// Uniform fan-in scaled initialization with zero biases.
    pub fn new<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.fan_in() as f64).sqrt();
            layer.w.mapv_inplace(|_| T::of(rng.gen_range(-bound..bound)));
        }
        net
    }

    /// The standard Q-network: the 567-wide input, the given hidden widths and
    /// a scalar head.
    pub fn q_network<R: Rng>(hidden: &[usize], rng: &mut R) -> Self {
        Self::new(&Self::layout_for(hidden), rng)
    }

    pub fn layout_for(hidden: &[usize]) -> Vec<usize> {
        let mut sizes = vec![INPUT_DIM];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        sizes
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.fan_out()));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    fn check_width(&self, got: usize) -> Result<(), QNetError> {
        if got != self.input_dim() {
            return Err(QNetError::Dimension { expected: self.input_dim(), got });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[T]) -> Result<T, QNetError> {
        self.check_width(input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row");
        Ok(self.forward_batch(x)?[0])
    }

    /// One Q per input row.
    pub fn forward_batch(&self, inputs: ArrayView2<'_, T>) -> Result<Array1<T>, QNetError> {
        self.check_width(inputs.ncols())?;
        let mut a = inputs.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.w) + &layer.b;
            if l + 1 < self.layers.len() {
                a.mapv_inplace(relu);
            }
        }
        Ok(a.column(0).to_owned())
    }

    /// Q for every action from one state. The state part of the first layer
    /// is computed once and each action adds the rows of its cards.
    pub fn evaluate_actions(&self, state: &[T], actions: &[[i8; ACTION_DIM]]) -> Result<Array1<T>, QNetError> {
        self.check_width(INPUT_DIM)?;
        if state.len() != STATE_DIM {
            return Err(QNetError::Dimension { expected: STATE_DIM, got: state.len() });
        }
        let first = &self.layers[0];
        let s = ArrayView1::from(state);
        let base = s.dot(&first.w.slice(s![..STATE_DIM, ..])) + &first.b;
        let mut a = Array2::zeros((actions.len(), first.fan_out()));
        for (mut row, action) in a.axis_iter_mut(Axis(0)).zip(actions) {
            row.assign(&base);
            for (j, &c) in action.iter().enumerate() {
                if c != 0 {
                    row.scaled_add(T::of(c as f64), &first.w.row(STATE_DIM + j));
                }
            }
        }
        if self.layers.len() > 1 {
            a.mapv_inplace(relu);
        }
        for (l, layer) in self.layers.iter().enumerate().skip(1) {
            a = a.dot(&layer.w) + &layer.b;
            if l + 1 < self.layers.len() {
                a.mapv_inplace(relu);
            }
        }
        Ok(a.column(0).to_owned())
    }

    /// Forward pass keeping what [`Mlp::backward`] needs.
    pub fn forward_tape(&self, inputs: ArrayView2<'_, T>) -> Result<Tape<T>, QNetError> {
        self.check_width(inputs.ncols())?;
        let mut activations = vec![inputs.to_owned()];
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = activations[l].dot(&layer.w) + &layer.b;
            if l + 1 < self.layers.len() {
                z.mapv_inplace(relu);
            }
            activations.push(z);
        }
        Ok(Tape { activations })
    }

    /// Parameter gradients given `dq[i] = ∂loss/∂Q_i` for each row of the tape.
    pub fn backward(&self, tape: &Tape<T>, dq: ArrayView1<'_, T>) -> Gradients<T> {
        let n = self.layers.len();
        let mut delta = dq.to_owned().insert_axis(Axis(1));
        let mut grads: Vec<Dense<T>> = Vec::with_capacity(n);
        for l in (0..n).rev() {
            let input = &tape.activations[l];
            let gw = input.t().dot(&delta);
            let gb = delta.sum_axis(Axis(0));
            grads.push(Dense { w: gw, b: gb });
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].w.t());
                // ReLU derivative read off the stored post-activation.
                Zip::from(&mut back).and(input).for_each(|d, &a| {
                    if a <= T::zero() {
                        *d = T::zero();
                    }
                });
                delta = back;
            }
        }
        grads.reverse();
        Gradients { layers: grads }
    }

    /// Loss `(1/N) Σ (Q_i − t_i)²` and its gradient.
    pub fn mse_gradient(&self, inputs: ArrayView2<'_, T>, targets: &[T]) -> Result<(T, Gradients<T>), QNetError> {
        let tape = self.forward_tape(inputs)?;
        let q = tape.output();
        let n = T::of(targets.len() as f64);
        let diff: Array1<T> = Zip::from(&q).and(targets).map_collect(|&q, &t| q - t);
        let loss = diff.iter().fold(T::zero(), |acc, &d| acc + d * d) / n;
        let dq = diff.mapv(|d| (d + d) / n);
        Ok((loss, self.backward(&tape, dq.view())))
    }

    /// Plain gradient descent step; bumps the version.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T) {
        for (p, g) in self.layers.iter_mut().zip(&grads.layers) {
            p.w.scaled_add(-lr, &g.w);
            p.b.scaled_add(-lr, &g.b);
        }
        self.version += 1;
    }

    /// All parameters in layer order, weights before biases.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter().copied());
            out.extend(l.b.iter().copied());
        }
        out
    }

    pub fn set_flat(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.num_params());
        let mut it = values.iter().copied();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = it.next().expect("sized"));
        }
    }

    /// Convert to another precision.
    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Dense { w: l.w.mapv(|v| U::of(v.to_f64().expect("finite"))), b: l.b.mapv(|v| U::of(v.to_f64().expect("finite"))) })
                .collect(),
            version: self.version,
        }
    }

    /// `GDQN`, format, float width, layer count, widths, version, then
    /// each layer's weights (row-major `in × out`) and biases, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.num_params() * T::WIDTH);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT.to_le_bytes());
        out.extend_from_slice(&(T::WIDTH as u32).to_le_bytes());
        let sizes = self.sizes();
        out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
        for s in sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.version.to_le_bytes());
        for l in &self.layers {
            for &v in l.w.iter().chain(l.b.iter()) {
                v.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, QNetError> {
        let mut r = Cursor { bytes, at: 0 };
        if r.take(4, "magic")? != MAGIC {
            return Err(QNetError::Corrupt { offset: 0, what: "bad magic".into() });
        }
        let format = r.u32("format")?;
        if format != FORMAT {
            return Err(QNetError::Corrupt { offset: 4, what: format!("unknown format {format}") });
        }
        let width = r.u32("float width")? as usize;
        if width != T::WIDTH {
            return Err(QNetError::Precision { stored: width, expected: T::WIDTH });
        }
        let count_at = r.at;
        let count = r.u32("layer count")? as usize;
        if !(2..=64).contains(&count) {
            return Err(QNetError::Corrupt { offset: count_at, what: format!("implausible layer count {count}") });
        }
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            let at = r.at;
            let s = r.u32("layer width")? as usize;
            if s == 0 || s > 1 << 16 {
                return Err(QNetError::Corrupt { offset: at, what: format!("implausible width {s}") });
            }
            sizes.push(s);
        }
        let version = u64::from_le_bytes(r.take(8, "version")?.try_into().expect("8"));
        let mut net = Self::zeros(&sizes);
        net.version = version;
        for l in &mut net.layers {
            for p in l.w.iter_mut().chain(l.b.iter_mut()) {
                *p = T::read_le(r.take(T::WIDTH, "parameters")?);
            }
        }
        if r.at != bytes.len() {
            return Err(QNetError::Corrupt { offset: r.at, what: "trailing bytes".into() });
        }
        Ok(net)
    }

    pub fn save<W: Write>(&self, mut out: W) -> Result<(), QNetError> {
        out.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load<R: Read>(mut input: R) -> Result<Self, QNetError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], QNetError> {
        if self.bytes.len() - self.at < n {
            return Err(QNetError::Corrupt { offset: self.at, what: format!("truncated {what}") });
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32, QNetError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4")))
    }
}

/// Largest relative difference between the analytic MSE gradient and a
/// central finite difference with step `h`, over every parameter.
pub fn max_gradient_error(net: &Mlp<f64>, inputs: ArrayView2<'_, f64>, targets: &[f64], h: f64) -> f64 {
    let (_, g) = net.mse_gradient(inputs, targets).expect("input width");
    let analytic = Mlp { layers: g.layers, version: 0 }.flatten();
    let base = net.flatten();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..base.len() {
        let mut p = base.clone();
        p[i] += h;
        probe.set_flat(&p);
        let up = probe.mse_gradient(inputs, targets).expect("input width").0;
        p[i] -= 2.0 * h;
        probe.set_flat(&p);
        let down = probe.mse_gradient(inputs, targets).expect("input width").0;
        let numeric = (up - down) / (2.0 * h);
        let err = (numeric - analytic[i]).abs() / (numeric.abs() + analytic[i].abs()).max(1e-8);
        worst = worst.max(err);
    }
    worst
}

#[inline]
fn relu<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x
    } else {
        T::zero()
    }
}

/// Adaptive-moment optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<Dense<T>>,
    v: Vec<Dense<T>>,
    t: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(net: &Mlp<T>, lr: T) -> Self {
        let zeros = || net.layers.iter().map(|l| Dense::zeros(l.fan_in(), l.fan_out())).collect();
        Adam { lr, beta1: T::of(0.9), beta2: T::of(0.999), eps: T::of(1e-8), m: zeros(), v: zeros(), t: 0 }
    }

    pub fn step(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>) {
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let (lr, eps) = (self.lr, self.eps);
        let update = |p: &mut T, g: &T, m: &mut T, v: &mut T| {
            *m = b1 * *m + (T::one() - b1) * *g;
            *v = b2 * *v + (T::one() - b2) * *g * *g;
            let mh = *m / c1;
            let vh = *v / c2;
            *p = *p - lr * mh / (vh.sqrt() + eps);
        };
        for (((p, g), m), v) in net.layers.iter_mut().zip(&grads.layers).zip(&mut self.m).zip(&mut self.v) {
            Zip::from(&mut p.w).and(&g.w).and(&mut m.w).and(&mut v.w).for_each(update);
            Zip::from(&mut p.b).and(&g.b).and(&mut m.b).and(&mut v.b).for_each(update);
        }
        net.version += 1;
    }
}
