use std::cell::RefCell;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::autodiff::pool;
use crate::autodiff::Tensor;
use crate::{Error, Result};

/// Gradient propagation function of one tape edge: accumulates (`+=`) the
/// parent's share of the gradient flowing into a node directly into the
/// parent's gradient buffer, so no intermediate contribution is materialized.
pub(crate) type GradFn = Box<dyn Fn(&[f64], &mut [f64])>;

/// How gradient flows across one tape edge. `Copy` marks shape-preserving
/// identity edges (adds and friends) so the backward sweep can accumulate in
/// place without calling a closure. `Fn` carries the parent's element count
/// so the sweep can allocate a zeroed buffer on first contribution.
pub(crate) enum Edge {
    Copy,
    Fn(usize, GradFn),
}

struct Node {
    parents: Vec<(usize, Edge)>,
}

struct TapeInner {
    nodes: Vec<Node>,
}

static TAPE_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Append-only record of the operations of one forward pass.
///
/// A tape and the tensors recorded on it are confined to a single thread.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
    id: u64,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            inner: Rc::new(RefCell::new(TapeInner { nodes: Vec::new() })),
            id: TAPE_COUNTER.fetch_add(1, Ordering::Relaxed),
        }
    }

    /// Identity token; two clones of the same tape share it.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn same_tape(&self, other: &Tape) -> bool {
        Rc::ptr_eq(&self.inner, &other.inner)
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn push_node(&self, parents: Vec<(usize, Edge)>) -> usize {
        let mut inner = self.inner.borrow_mut();
        inner.nodes.push(Node { parents });
        inner.nodes.len() - 1
    }

    /// Registers `t` as a tracked leaf (no parents) on this tape.
    pub fn leaf(&self, t: &Tensor) -> Tensor {
        let node = self.push_node(Vec::new());
        t.with_track(self.clone(), node)
    }

    /// Reverse sweep from a tracked scalar root. Multiple uses of a node
    /// accumulate additively. Gradients are retained for leaf nodes (tape
    /// inputs such as parameters); interior buffers are recycled during the
    /// sweep.
    pub fn backward(&self, root: &Tensor) -> Result<Gradients> {
        self.backward_impl(root, false)
    }

    /// Like [`Tape::backward`], but drops each node's edges as soon as they
    /// are processed, so buffers captured by gradient closures return to the
    /// allocation pool mid-sweep instead of at tape drop. After this call the
    /// tape records no edges and cannot be swept again. Training loops use it
    /// because every training tape gets exactly one sweep.
    pub fn backward_consuming(&self, root: &Tensor) -> Result<Gradients> {
        self.backward_impl(root, true)
    }

    fn backward_impl(&self, root: &Tensor, consume: bool) -> Result<Gradients> {
        let (tape, root_node) = root
            .track()
            .ok_or_else(|| Error::InvalidRoot("untracked tensor".into()))?;
        if !tape.same_tape(self) {
            return Err(Error::TapeMismatch { op: "backward" });
        }
        if root.rows() != 1 || root.cols() != 1 {
            return Err(Error::InvalidRoot(format!(
                "{}x{} tensor",
                root.rows(),
                root.cols()
            )));
        }
        let mut inner = self.inner.borrow_mut();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; inner.nodes.len()];
        grads[root_node] = Some(vec![1.0]);
        for id in (0..=root_node).rev() {
            if consume {
                let parents = std::mem::take(&mut inner.nodes[id].parents);
                let Some(g) = grads[id].take() else { continue };
                propagate(&parents, &g, &mut grads);
                finish_node(parents.is_empty(), id, g, &mut grads);
            } else {
                let Some(g) = grads[id].take() else { continue };
                propagate(&inner.nodes[id].parents, &g, &mut grads);
                finish_node(inner.nodes[id].parents.is_empty(), id, g, &mut grads);
            }
        }
        Ok(Gradients {
            tape_id: self.id,
            grads,
        })
    }
}

/// Accumulates the gradient `g` of one node into each of its parents.
fn propagate(parents: &[(usize, Edge)], g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    for (pid, edge) in parents {
        match (edge, &mut grads[*pid]) {
            (Edge::Copy, Some(acc)) => {
                for (a, c) in acc.iter_mut().zip(g) {
                    *a += c;
                }
            }
            (Edge::Copy, slot) => {
                let mut contribution = pool::take(g.len());
                contribution.copy_from_slice(g);
                *slot = Some(contribution);
            }
            (Edge::Fn(_, grad_fn), Some(acc)) => grad_fn(g, acc),
            (Edge::Fn(len, grad_fn), slot) => {
                let mut acc = pool::take_zeroed(*len);
                grad_fn(g, &mut acc);
                *slot = Some(acc);
            }
        }
    }
}

/// Retains the processed gradient for leaf nodes, recycles it otherwise.
fn finish_node(is_leaf: bool, id: usize, g: Vec<f64>, grads: &mut [Option<Vec<f64>>]) {
    if is_leaf {
        grads[id] = Some(g);
    } else {
        pool::give(g);
    }
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

/// Per-node gradients produced by one backward sweep.
pub struct Gradients {
    tape_id: u64,
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the backward root with respect to `t`, shaped like `t`.
    /// Returns `None` for untracked tensors, tensors from another tape,
    /// interior (non-leaf) nodes and nodes the root does not depend on.
    pub fn get(&self, t: &Tensor) -> Option<Tensor> {
        let (tape, node) = t.track()?;
        if tape.id() != self.tape_id {
            return None;
        }
        let g = self.grads.get(node)?.as_ref()?;
        Some(Tensor::from_vec(t.rows(), t.cols(), g.clone()).expect("gradient shaped like source"))
    }
}
