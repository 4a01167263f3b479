//! Sequential / parallel execution switch for embarrassingly parallel sweeps.

use serde::{Deserialize, Serialize};

/// How independent work items (grid cells, trials, oracle sweeps) are run.
///
/// Results are always returned in input order, so the choice never changes
/// output bytes. Without the `parallel` feature, `Parallel` runs sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `0..n`, preserving order.
    pub fn map_indexed<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map(n, f),
        }
    }

    /// Order-independent maximum of `f` over `0..n` (`None` when `n == 0`).
    pub fn max_indexed<F>(self, n: usize, f: F) -> Option<f64>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map_indexed(n, f).into_iter().reduce(f64::max)
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let seq = Execution::Sequential.map_indexed(1000, |i| i * i);
        let par = Execution::Parallel.map_indexed(1000, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }

    #[test]
    fn max_of_empty_is_none() {
        assert_eq!(Execution::Parallel.max_indexed(0, |_| 1.0), None);
        assert_eq!(
            Execution::Sequential.max_indexed(3, |i| i as f64),
            Some(2.0)
        );
    }
}
