use rand::Rng;
use std::cell::RefCell;

use crate::autodiff::{Gradients, Tape, Tensor};
use crate::Result;

/// Trainable tensor with a persistent gradient buffer.
///
/// The tape is rebuilt every forward pass, so a parameter is re-registered as
/// a leaf on each new tape. Registration is memoized: all forwards on one
/// tape see the same tape node, which makes multi-use gradient accumulation a
/// plain tape concern. The `grad` buffer itself accumulates across backward
/// passes until [`Parameter::zero_grad`], mirroring an explicit
/// `zero_grad()`-style optimizer protocol.
pub struct Parameter {
    name: String,
    rows: usize,
    cols: usize,
    value: RefCell<Vec<f64>>,
    grad: RefCell<Vec<f64>>,
    bound: RefCell<Option<Tensor>>,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let (rows, cols) = value.shape();
        Parameter {
            name: name.into(),
            rows,
            cols,
            value: RefCell::new(value.data().to_vec()),
            grad: RefCell::new(vec![0.0; rows * cols]),
            bound: RefCell::new(None),
        }
    }

    /// Glorot-uniform initialization: U(-a, a) with a = sqrt(6/(fan_in+fan_out)).
    pub fn glorot<R: Rng>(name: impl Into<String>, rows: usize, cols: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Parameter::new(
            name,
            Tensor::from_vec(rows, cols, data).expect("finite init"),
        )
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Parameter::new(name, Tensor::zeros(rows, cols))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Current value as an untracked tensor (copies the buffer).
    pub fn value(&self) -> Tensor {
        Tensor::from_vec(self.rows, self.cols, self.value.borrow().clone())
            .expect("parameter stays finite")
    }

    /// Accumulated gradient buffer.
    pub fn grad(&self) -> Vec<f64> {
        self.grad.borrow().clone()
    }

    pub fn set_value(&self, value: &Tensor) -> Result<()> {
        if value.shape() != (self.rows, self.cols) {
            return Err(crate::Error::ShapeMismatch {
                op: "set_value",
                lhs: format!("{}x{}", self.rows, self.cols),
                rhs: format!("{}x{}", value.rows(), value.cols()),
            });
        }
        *self.value.borrow_mut() = value.data().to_vec();
        self.bound.replace(None);
        Ok(())
    }

    /// Tracked leaf tensor on `tape`; repeated calls on the same tape return
    /// the same tape node.
    pub fn tracked(&self, tape: &Tape) -> Tensor {
        let mut bound = self.bound.borrow_mut();
        if let Some(t) = bound.as_ref() {
            if let Some((bound_tape, _)) = t.track() {
                if bound_tape.same_tape(tape) {
                    return t.clone();
                }
            }
        }
        let leaf = tape.leaf(&self.value());
        *bound = Some(leaf.clone());
        leaf
    }

    /// Adds this parameter's gradient from `grads` into the persistent
    /// buffer and drops the tape binding.
    pub fn harvest(&self, grads: &Gradients) {
        let bound = self.bound.borrow_mut().take();
        if let Some(t) = bound {
            if let Some(g) = grads.get(&t) {
                let mut acc = self.grad.borrow_mut();
                for (a, v) in acc.iter_mut().zip(g.data()) {
                    *a += v;
                }
            }
        }
    }

    pub fn zero_grad(&self) {
        self.grad.borrow_mut().iter_mut().for_each(|g| *g = 0.0);
    }

    /// In-place update `value[i] = f(value[i], grad[i])` used by optimizers.
    pub fn update(&self, mut f: impl FnMut(f64, f64) -> f64) {
        let mut value = self.value.borrow_mut();
        let grad = self.grad.borrow();
        for (v, g) in value.iter_mut().zip(grad.iter()) {
            *v = f(*v, *g);
        }
        self.bound.replace(None);
    }
}
