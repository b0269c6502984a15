use std::sync::Arc;

use crate::autodiff::pool::PoolBuf;
use crate::autodiff::tape::Edge;
use crate::autodiff::Tape;
use crate::{Error, Result};

/// Dense row-major matrix of 64-bit floats, optionally tracked on a [`Tape`].
///
/// Cloning is cheap: the value buffer is shared. All constructors reject
/// non-finite entries.
#[derive(Clone)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Arc<PoolBuf>,
    track: Option<(Tape, usize)>,
}

impl Tensor {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!(
                "tensor dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op: "from_vec",
                lhs: format!("{rows}x{cols}"),
                rhs: format!("{} values", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { op: "from_vec" });
        }
        Ok(Tensor {
            rows,
            cols,
            data: Arc::new(PoolBuf::new(data)),
            track: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidParameter("ragged rows".into()));
        }
        Tensor::from_vec(r, c, rows.concat())
    }

    pub fn scalar(v: f64) -> Result<Self> {
        Tensor::from_vec(1, 1, vec![v])
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor::from_vec(rows, cols, vec![0.0; rows * cols]).expect("zeros are finite")
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Tensor::from_vec(rows, cols, vec![1.0; rows * cols]).expect("ones are finite")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Scalar value of a 1x1 tensor.
    pub fn item(&self) -> Result<f64> {
        if self.len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "item",
                lhs: format!("{}x{}", self.rows, self.cols),
                rhs: "1x1".into(),
            });
        }
        Ok(self.data[0])
    }

    /// True when this tensor is recorded on a tape.
    pub fn is_tracked(&self) -> bool {
        self.track.is_some()
    }

    /// Untracked copy sharing the same value buffer.
    pub fn detach(&self) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: Arc::clone(&self.data),
            track: None,
        }
    }

    /// True when the two tensors share one value buffer (no copy was made).
    pub fn shares_storage(&self, other: &Tensor) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
    }

    pub(crate) fn track(&self) -> Option<(&Tape, usize)> {
        self.track.as_ref().map(|(t, n)| (t, *n))
    }

    pub(crate) fn with_track(&self, tape: Tape, node: usize) -> Tensor {
        Tensor {
            rows: self.rows,
            cols: self.cols,
            data: Arc::clone(&self.data),
            track: Some((tape, node)),
        }
    }

    pub(crate) fn data_arc(&self) -> Arc<PoolBuf> {
        Arc::clone(&self.data)
    }

    /// Records the result of an operation. Parents that are tracked get a
    /// tape edge with their gradient function; if no parent is tracked the
    /// result is a plain constant. Mixing tapes is an error.
    pub(crate) fn from_op(
        op: &'static str,
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        parents: Vec<(&Tensor, Edge)>,
    ) -> Result<Tensor> {
        Tensor::from_op_shared(op, rows, cols, Arc::new(PoolBuf::new(data)), parents)
    }

    /// Like [`Tensor::from_op`] but takes an already shared buffer, letting a
    /// backward closure capture the op's own output without copying it.
    pub(crate) fn from_op_shared(
        op: &'static str,
        rows: usize,
        cols: usize,
        data: Arc<PoolBuf>,
        parents: Vec<(&Tensor, Edge)>,
    ) -> Result<Tensor> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                op,
                lhs: format!("{rows}x{cols}"),
                rhs: format!("{} values", data.len()),
            });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { op });
        }
        let mut tape: Option<&Tape> = None;
        for (p, _) in &parents {
            if let Some((t, _)) = p.track() {
                match tape {
                    None => tape = Some(t),
                    Some(existing) if existing.same_tape(t) => {}
                    Some(_) => return Err(Error::TapeMismatch { op }),
                }
            }
        }
        let out = Tensor {
            rows,
            cols,
            data,
            track: None,
        };
        match tape {
            None => Ok(out),
            Some(tape) => {
                let tape = tape.clone();
                let edges = parents
                    .into_iter()
                    .filter_map(|(p, f)| p.track().map(|(_, node)| (node, f)))
                    .collect();
                let node = tape.push_node(edges);
                Ok(out.with_track(tape, node))
            }
        }
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("tracked", &self.is_tracked())
            .field("data", &self.data())
            .finish()
    }
}
