//! Tensor operations and their backward rules.
//!
//! Output buffers are drawn from the thread-local buffer pool so repeated
//! forward/backward passes recycle the same memory. Every gradient closure
//! accumulates (`+=`) straight into the parent's gradient buffer.

use rand::Rng;
use std::sync::Arc;

use crate::autodiff::pool;
use crate::autodiff::tape::Edge;
use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Wraps an accumulating gradient closure as a tape edge over a parent with
/// `len` elements.
fn grad(len: usize, f: impl Fn(&[f64], &mut [f64]) + 'static) -> Edge {
    Edge::Fn(len, Box::new(f))
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        lhs: format!("{}x{}", a.rows(), a.cols()),
        rhs: format!("{}x{}", b.rows(), b.cols()),
    }
}

/// Pooled buffer with `out[i] = f(a[i])`.
fn map(a: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = pool::take(a.len());
    for (o, v) in out.iter_mut().zip(a) {
        *o = f(*v);
    }
    out
}

/// Pooled buffer with `out[i] = f(a[i], b[i])`.
fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut out = pool::take(a.len());
    for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = f(*x, *y);
    }
    out
}

/// Pooled buffer with `out[i] = f(i)`.
fn map_idx(len: usize, mut f: impl FnMut(usize) -> f64) -> Vec<f64> {
    let mut out = pool::take(len);
    for (i, o) in out.iter_mut().enumerate() {
        *o = f(i);
    }
    out
}

/// Pointwise nonlinearity that [`Tensor::matmul_sum_act`] applies in place to
/// its output, so gate pre-activations never occupy a buffer of their own.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation, written in terms of the
    /// activation output `y`.
    fn slope(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Runs `f` on the upstream gradient pulled back through `act`: the raw `g`
/// for the identity, otherwise a pooled scratch `g[i] * act.slope(y[i])`.
fn with_slope(act: Activation, y: &[f64], g: &[f64], f: impl FnOnce(&[f64])) {
    match act {
        Activation::Identity => f(g),
        _ => {
            let mut gs = pool::take(g.len());
            for ((o, &gv), &yv) in gs.iter_mut().zip(g).zip(y) {
                *o = gv * act.slope(yv);
            }
            f(&gs);
            pool::give(gs);
        }
    }
}

/// `out[i] += g[i] * b[i]`, the workhorse of elementwise backward rules.
fn acc_prod(out: &mut [f64], g: &[f64], b: &[f64]) {
    for (o, (g, b)) in out.iter_mut().zip(g.iter().zip(b)) {
        *o += g * b;
    }
}

/// Row-major matrix product, `(m x k) * (k x n)`.
pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = pool::take_zeroed(m * n);
    matmul_acc(&mut out, a, b, m, k, n);
    out
}

/// `out += A * B` for row-major `(m x k) * (k x n)`.
fn matmul_acc(out: &mut [f64], a: &[f64], b: &[f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        for kk in 0..k {
            let av = a[i * k + kk];
            if av == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += av * brow[j];
            }
        }
    }
}

/// `out += G * B^T` without materializing the transpose: each added entry is
/// a dot product of contiguous rows of `G` and `B`.
fn matmul_grad_a(g: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        // Four dot products at a time: independent accumulator chains hide
        // the add latency that a lone dot product serializes on.
        let mut kk = 0;
        while kk + 4 <= k {
            let b0 = &b[kk * n..(kk + 1) * n];
            let b1 = &b[(kk + 1) * n..(kk + 2) * n];
            let b2 = &b[(kk + 2) * n..(kk + 3) * n];
            let b3 = &b[(kk + 3) * n..(kk + 4) * n];
            let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..n {
                let gv = grow[j];
                s0 += gv * b0[j];
                s1 += gv * b1[j];
                s2 += gv * b2[j];
                s3 += gv * b3[j];
            }
            out[i * k + kk] += s0;
            out[i * k + kk + 1] += s1;
            out[i * k + kk + 2] += s2;
            out[i * k + kk + 3] += s3;
            kk += 4;
        }
        while kk < k {
            let brow = &b[kk * n..(kk + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += grow[j] * brow[j];
            }
            out[i * k + kk] += s;
            kk += 1;
        }
    }
}

/// `out += A^T * G` without materializing the transpose: row-scaled
/// accumulation.
fn matmul_grad_b(a: &[f64], g: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for kk in 0..k {
            let av = a[i * k + kk];
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[kk * n..(kk + 1) * n];
            for j in 0..n {
                orow[j] += av * grow[j];
            }
        }
    }
}

impl Tensor {
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.cols() != other.rows() {
            return Err(shape_err("matmul", self, other));
        }
        let (m, k, n) = (self.rows(), self.cols(), other.cols());
        let data = matmul_raw(self.data(), other.data(), m, k, n);
        let a = self.data_arc();
        let b = other.data_arc();
        Tensor::from_op(
            "matmul",
            m,
            n,
            data,
            vec![
                (
                    self,
                    grad(m * k, move |g, out| matmul_grad_a(g, &b, m, k, n, out)),
                ),
                (
                    other,
                    grad(k * n, move |g, out| matmul_grad_b(&a, g, m, k, n, out)),
                ),
            ],
        )
    }

    /// Fused multi-term product sum `sum_i X_i W_i (+ bias row)`, the readout
    /// of a graph convolution. One tape node replaces a matmul/add chain, so
    /// no per-term intermediate is materialized.
    pub fn matmul_sum(terms: &[(&Tensor, &Tensor)], bias: Option<&Tensor>) -> Result<Tensor> {
        let (first_x, first_w) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("matmul_sum needs at least one term".into()))?;
        let (m, n) = (first_x.rows(), first_w.cols());
        let mut data = pool::take_zeroed(m * n);
        for (x, w) in terms {
            if x.rows() != m || w.cols() != n || x.cols() != w.rows() {
                return Err(shape_err("matmul_sum", x, w));
            }
            matmul_acc(&mut data, x.data(), w.data(), m, x.cols(), n);
        }
        if let Some(b) = bias {
            if b.rows() != 1 || b.cols() != n {
                return Err(shape_err("matmul_sum", first_x, b));
            }
            for i in 0..m {
                let orow = &mut data[i * n..(i + 1) * n];
                for (o, bv) in orow.iter_mut().zip(b.data()) {
                    *o += bv;
                }
            }
        }
        let mut parents: Vec<(&Tensor, Edge)> = Vec::with_capacity(2 * terms.len() + 1);
        for (x, w) in terms {
            let k = x.cols();
            let xa = x.data_arc();
            // Weights are small (k x n) and shared, so they stay cache-hot;
            // transposing into a pooled scratch at backward time keeps the
            // input gradient G * W^T a streaming row-major product without
            // storing a per-node W^T copy for the lifetime of the tape.
            let wa = w.data_arc();
            parents.push((
                x,
                grad(m * k, move |g, out| {
                    let mut wt = pool::take(k * n);
                    for r in 0..k {
                        for c in 0..n {
                            wt[c * k + r] = wa[r * n + c];
                        }
                    }
                    matmul_acc(out, g, &wt, m, n, k);
                    pool::give(wt);
                }),
            ));
            parents.push((
                w,
                grad(k * n, move |g, out| matmul_grad_b(&xa, g, m, k, n, out)),
            ));
        }
        if let Some(b) = bias {
            parents.push((
                b,
                grad(n, move |g, out| {
                    for row in g.chunks_exact(n) {
                        for (o, v) in out.iter_mut().zip(row) {
                            *o += v;
                        }
                    }
                }),
            ));
        }
        Tensor::from_op("matmul_sum", m, n, data, parents)
    }

    /// Fused gate blend `self ⊙ a + (1 - self) ⊙ b` (`self` is the gate),
    /// the recurrent state update of GRU-style cells, as a single tape node.
    pub fn blend(&self, a: &Tensor, b: &Tensor) -> Result<Tensor> {
        if self.shape() != a.shape() || self.shape() != b.shape() {
            return Err(shape_err("blend", self, a));
        }
        let za = self.data_arc();
        let aa = a.data_arc();
        let ba = b.data_arc();
        let len = self.len();
        let mut data = pool::take(len);
        for (o, ((z, av), bv)) in data
            .iter_mut()
            .zip(self.data().iter().zip(a.data()).zip(b.data()))
        {
            *o = z * av + (1.0 - z) * bv;
        }
        let (za2, aa2, ba2) = (Arc::clone(&za), Arc::clone(&aa), Arc::clone(&ba));
        Tensor::from_op(
            "blend",
            self.rows(),
            self.cols(),
            data,
            vec![
                (
                    self,
                    grad(len, move |g, out| {
                        for i in 0..g.len() {
                            out[i] += g[i] * (aa2[i] - ba2[i]);
                        }
                    }),
                ),
                (a, grad(len, move |g, out| acc_prod(out, g, &za))),
                (
                    b,
                    grad(len, move |g, out| {
                        for i in 0..g.len() {
                            out[i] += g[i] * (1.0 - za2[i]);
                        }
                    }),
                ),
            ],
        )
    }

    /// Fused two-product sum `self ⊙ a + b ⊙ c`, the cell-state update of
    /// LSTM-style cells, as a single tape node.
    pub fn mul_add(&self, a: &Tensor, b: &Tensor, c: &Tensor) -> Result<Tensor> {
        if self.shape() != a.shape() || self.shape() != b.shape() || self.shape() != c.shape() {
            return Err(shape_err("mul_add", self, a));
        }
        let sa = self.data_arc();
        let aa = a.data_arc();
        let ba = b.data_arc();
        let ca = c.data_arc();
        let len = self.len();
        let mut data = pool::take(len);
        for (i, o) in data.iter_mut().enumerate() {
            *o = sa[i] * aa[i] + ba[i] * ca[i];
        }
        Tensor::from_op(
            "mul_add",
            self.rows(),
            self.cols(),
            data,
            vec![
                (self, grad(len, move |g, out| acc_prod(out, g, &aa))),
                (a, grad(len, move |g, out| acc_prod(out, g, &sa))),
                (b, grad(len, move |g, out| acc_prod(out, g, &ca))),
                (c, grad(len, move |g, out| acc_prod(out, g, &ba))),
            ],
        )
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape() != other.shape() {
            return Err(shape_err("add", self, other));
        }
        let data = zip_map(self.data(), other.data(), |a, b| a + b);
        Tensor::from_op(
            "add",
            self.rows(),
            self.cols(),
            data,
            vec![(self, Edge::Copy), (other, Edge::Copy)],
        )
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape() != other.shape() {
            return Err(shape_err("sub", self, other));
        }
        let data = zip_map(self.data(), other.data(), |a, b| a - b);
        let len = self.len();
        Tensor::from_op(
            "sub",
            self.rows(),
            self.cols(),
            data,
            vec![
                (self, Edge::Copy),
                (
                    other,
                    grad(len, |g, out| {
                        for (o, v) in out.iter_mut().zip(g) {
                            *o -= v;
                        }
                    }),
                ),
            ],
        )
    }

    /// Elementwise (Hadamard) product.
    pub fn hadamard(&self, other: &Tensor) -> Result<Tensor> {
        if self.shape() != other.shape() {
            return Err(shape_err("hadamard", self, other));
        }
        let data = zip_map(self.data(), other.data(), |a, b| a * b);
        let a = self.data_arc();
        let b = other.data_arc();
        let len = self.len();
        Tensor::from_op(
            "hadamard",
            self.rows(),
            self.cols(),
            data,
            vec![
                (self, grad(len, move |g, out| acc_prod(out, g, &b))),
                (other, grad(len, move |g, out| acc_prod(out, g, &a))),
            ],
        )
    }

    pub fn scale(&self, s: f64) -> Result<Tensor> {
        let data = map(self.data(), |v| v * s);
        let len = self.len();
        Tensor::from_op(
            "scale",
            self.rows(),
            self.cols(),
            data,
            vec![(
                self,
                grad(len, move |g, out| {
                    for (o, v) in out.iter_mut().zip(g) {
                        *o += v * s;
                    }
                }),
            )],
        )
    }

    pub fn add_scalar(&self, s: f64) -> Result<Tensor> {
        let data = map(self.data(), |v| v + s);
        Tensor::from_op(
            "add_scalar",
            self.rows(),
            self.cols(),
            data,
            vec![(self, Edge::Copy)],
        )
    }

    /// Adds a `1 x d` row vector to every row of an `n x d` tensor.
    pub fn add_row(&self, row: &Tensor) -> Result<Tensor> {
        if row.rows() != 1 || row.cols() != self.cols() {
            return Err(shape_err("add_row", self, row));
        }
        let (n, d) = self.shape();
        let r = row.data_arc();
        let x = self.data();
        let data = map_idx(n * d, |i| x[i] + r[i % d]);
        Tensor::from_op(
            "add_row",
            n,
            d,
            data,
            vec![
                (self, Edge::Copy),
                (
                    row,
                    grad(d, move |g, out| {
                        for row in g.chunks_exact(d) {
                            for (o, v) in out.iter_mut().zip(row) {
                                *o += v;
                            }
                        }
                    }),
                ),
            ],
        )
    }

    /// Multiplies every row of an `n x d` tensor elementwise by a `1 x d`
    /// vector (per-unit peephole weights).
    pub fn mul_row(&self, row: &Tensor) -> Result<Tensor> {
        if row.rows() != 1 || row.cols() != self.cols() {
            return Err(shape_err("mul_row", self, row));
        }
        let (n, d) = self.shape();
        let r = row.data_arc();
        let x = self.data_arc();
        let r2 = Arc::clone(&r);
        let data = map_idx(n * d, |i| x[i] * r[i % d]);
        Tensor::from_op(
            "mul_row",
            n,
            d,
            data,
            vec![
                (
                    self,
                    grad(n * d, move |g, out| {
                        for i in 0..g.len() {
                            out[i] += g[i] * r2[i % d];
                        }
                    }),
                ),
                (
                    row,
                    grad(d, move |g, out| {
                        for i in 0..g.len() {
                            out[i % d] += g[i] * x[i];
                        }
                    }),
                ),
            ],
        )
    }

    /// Column-wise concatenation `[a ‖ b]` of two tensors with equal rows.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor> {
        if self.rows() != other.rows() {
            return Err(shape_err("concat_cols", self, other));
        }
        let n = self.rows();
        let (da, db) = (self.cols(), other.cols());
        let mut data = pool::take(n * (da + db));
        for i in 0..n {
            let row = &mut data[i * (da + db)..(i + 1) * (da + db)];
            row[..da].copy_from_slice(&self.data()[i * da..(i + 1) * da]);
            row[da..].copy_from_slice(&other.data()[i * db..(i + 1) * db]);
        }
        Tensor::from_op(
            "concat_cols",
            n,
            da + db,
            data,
            vec![
                (
                    self,
                    grad(n * da, move |g, out| {
                        for i in 0..n {
                            let grow = &g[i * (da + db)..i * (da + db) + da];
                            for (o, v) in out[i * da..(i + 1) * da].iter_mut().zip(grow) {
                                *o += v;
                            }
                        }
                    }),
                ),
                (
                    other,
                    grad(n * db, move |g, out| {
                        for i in 0..n {
                            let grow = &g[i * (da + db) + da..(i + 1) * (da + db)];
                            for (o, v) in out[i * db..(i + 1) * db].iter_mut().zip(grow) {
                                *o += v;
                            }
                        }
                    }),
                ),
            ],
        )
    }

    pub fn relu(&self) -> Result<Tensor> {
        let data = map(self.data(), |v| v.max(0.0));
        let x = self.data_arc();
        let len = self.len();
        Tensor::from_op(
            "relu",
            self.rows(),
            self.cols(),
            data,
            vec![(
                self,
                grad(len, move |g, out| {
                    for i in 0..g.len() {
                        if x[i] > 0.0 {
                            out[i] += g[i];
                        }
                    }
                }),
            )],
        )
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        let data = Arc::new(pool::PoolBuf::new(map(self.data(), |v| {
            1.0 / (1.0 + (-v).exp())
        })));
        let y = Arc::clone(&data);
        let len = self.len();
        Tensor::from_op_shared(
            "sigmoid",
            self.rows(),
            self.cols(),
            data,
            vec![(
                self,
                grad(len, move |g, out| {
                    for i in 0..g.len() {
                        out[i] += g[i] * y[i] * (1.0 - y[i]);
                    }
                }),
            )],
        )
    }

    pub fn tanh(&self) -> Result<Tensor> {
        let data = Arc::new(pool::PoolBuf::new(map(self.data(), |v| v.tanh())));
        let y = Arc::clone(&data);
        let len = self.len();
        Tensor::from_op_shared(
            "tanh",
            self.rows(),
            self.cols(),
            data,
            vec![(
                self,
                grad(len, move |g, out| {
                    for i in 0..g.len() {
                        out[i] += g[i] * (1.0 - y[i] * y[i]);
                    }
                }),
            )],
        )
    }

    /// Inverted dropout: in training mode each element is zeroed with
    /// probability `rate` and survivors are scaled by `1/(1-rate)`; in eval
    /// mode this is the identity. The mask is drawn from `rng` and saved for
    /// backward.
    pub fn dropout<R: Rng>(&self, rate: f64, training: bool, rng: &mut R) -> Result<Tensor> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidParameter(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if !training || rate == 0.0 {
            return self.scale(1.0);
        }
        let keep = 1.0 - rate;
        let mask = map_idx(self.len(), |_| {
            if rng.random::<f64>() < rate {
                0.0
            } else {
                1.0 / keep
            }
        });
        let data = zip_map(self.data(), &mask, |v, m| v * m);
        let mask = Arc::new(pool::PoolBuf::new(mask));
        let len = self.len();
        Tensor::from_op(
            "dropout",
            self.rows(),
            self.cols(),
            data,
            vec![(self, grad(len, move |g, out| acc_prod(out, g, &mask)))],
        )
    }

    /// Sum of all elements, as a 1x1 tensor.
    pub fn sum(&self) -> Result<Tensor> {
        let s = self.data().iter().sum();
        let len = self.len();
        let mut data = pool::take(1);
        data[0] = s;
        Tensor::from_op(
            "sum",
            1,
            1,
            data,
            vec![(
                self,
                grad(len, move |g, out| {
                    for o in out.iter_mut() {
                        *o += g[0];
                    }
                }),
            )],
        )
    }

    /// Mean of all elements, as a 1x1 tensor.
    pub fn mean(&self) -> Result<Tensor> {
        let n = self.len() as f64;
        self.sum()?.scale(1.0 / n)
    }

    /// Mean squared error over all elements; shapes must match exactly.
    pub fn mse_loss(&self, target: &Tensor) -> Result<Tensor> {
        if self.shape() != target.shape() {
            return Err(shape_err("mse_loss", self, target));
        }
        self.sub(target)?.square()?.mean()
    }

    /// Mean squared error restricted to rows with a true mask entry.
    /// Rows where the mask is false contribute nothing to loss or gradient.
    pub fn mse_loss_masked(&self, target: &Tensor, mask: &[bool]) -> Result<Tensor> {
        if self.shape() != target.shape() {
            return Err(shape_err("mse_loss_masked", self, target));
        }
        if mask.len() != self.rows() {
            return Err(Error::ShapeMismatch {
                op: "mse_loss_masked",
                lhs: format!("{} rows", self.rows()),
                rhs: format!("{} mask entries", mask.len()),
            });
        }
        let active = mask.iter().filter(|m| **m).count();
        if active == 0 {
            return Err(Error::InvalidParameter("all-false node mask".into()));
        }
        let d = self.cols();
        let weights = map_idx(self.len(), |i| if mask[i / d] { 1.0 } else { 0.0 });
        let w = Tensor::from_vec(self.rows(), d, weights)?;
        self.sub(target)?
            .square()?
            .hadamard(&w)?
            .sum()?
            .scale(1.0 / (active * d) as f64)
    }

    fn square(&self) -> Result<Tensor> {
        self.hadamard(self)
    }
}
