//! Mapping a computation over an index grid.
//!
//! The core crate only evaluates sequentially; a parallel implementation
//! lives in the std companion. Results are always returned in index order,
//! so output never depends on scheduling.

use alloc::vec::Vec;

pub trait GridEvaluator: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// In-order evaluation on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl GridEvaluator for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
