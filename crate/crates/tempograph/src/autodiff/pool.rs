//! Thread-local recycling pool for tensor value buffers.
//!
//! A training epoch allocates thousands of short-lived, identically sized
//! buffers. Recycling them keeps successive epochs operating on the same
//! warm memory instead of growing the heap, which matters most for the
//! cumulative regime where every buffer of an epoch stays alive until the
//! backward sweep finishes.

use std::cell::RefCell;
use std::collections::HashMap;

/// Upper bound on the bytes a thread retains between uses.
const MAX_POOL_BYTES: usize = 2 << 30;

#[derive(Default)]
struct Pool {
    buckets: HashMap<usize, Vec<Vec<f64>>>,
    bytes: usize,
}

thread_local! {
    static POOL: RefCell<Pool> = RefCell::new(Pool::default());
}

/// A length-`len` buffer with unspecified contents; callers must overwrite
/// every element.
pub(crate) fn take(len: usize) -> Vec<f64> {
    POOL.with(|pool| {
        let mut pool = pool.borrow_mut();
        match pool.buckets.get_mut(&len).and_then(|b| b.pop()) {
            Some(buf) => {
                pool.bytes -= len * 8;
                buf
            }
            None => vec![0.0; len],
        }
    })
}

/// A length-`len` buffer filled with zeros.
pub(crate) fn take_zeroed(len: usize) -> Vec<f64> {
    POOL.with(|pool| {
        let mut pool = pool.borrow_mut();
        match pool.buckets.get_mut(&len).and_then(|b| b.pop()) {
            Some(mut buf) => {
                pool.bytes -= len * 8;
                buf.fill(0.0);
                buf
            }
            None => vec![0.0; len],
        }
    })
}

/// Value buffer that returns itself to the pool when dropped.
pub(crate) struct PoolBuf(Vec<f64>);

impl PoolBuf {
    pub(crate) fn new(data: Vec<f64>) -> Self {
        PoolBuf(data)
    }
}

impl Drop for PoolBuf {
    fn drop(&mut self) {
        give(std::mem::take(&mut self.0));
    }
}

impl std::ops::Deref for PoolBuf {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Returns a buffer to the pool. Buffers with spare capacity or beyond the
/// retention cap are released to the allocator instead.
pub(crate) fn give(buf: Vec<f64>) {
    let len = buf.len();
    if len == 0 || buf.capacity() != len {
        return;
    }
    POOL.with(|pool| {
        let mut pool = pool.borrow_mut();
        if pool.bytes + len * 8 > MAX_POOL_BYTES {
            return;
        }
        pool.bytes += len * 8;
        pool.buckets.entry(len).or_default().push(buf);
    });
}
