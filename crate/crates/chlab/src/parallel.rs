use chlab_core::grid::GridEvaluator;
use rayon::prelude::*;

/// Grid evaluation on the rayon pool. `collect` on an indexed parallel
/// iterator keeps index order, so results match [`chlab_core::grid::Sequential`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl GridEvaluator for Rayon {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chlab_core::grid::Sequential;

    #[test]
    fn order_matches_sequential() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        assert_eq!(Rayon.map(1000, f), Sequential.map(1000, f));
    }
}
