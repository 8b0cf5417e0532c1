//! Trial execution: rayon when the `parallel` feature is on, a plain loop otherwise.
//!
//! Aggregates are integer counts, so both paths return identical results for
//! the same seed regardless of thread count.

use crate::rng::{trial_rng, TrialRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    #[cfg(feature = "parallel")]
    fn default() -> Self {
        Execution::Parallel
    }

    #[cfg(not(feature = "parallel"))]
    fn default() -> Self {
        Execution::Sequential
    }
}

/// Runs `trial` on indices `offset..offset + count`, each with its own stream,
/// and returns how many returned `true`.
pub fn count_successes<F>(exec: Execution, seed: u64, offset: u64, count: u64, trial: F) -> u64
where
    F: Fn(&mut TrialRng, u64) -> bool + Sync + Send,
{
    let run = |i: u64| {
        let mut rng = trial_rng(seed, i);
        trial(&mut rng, i)
    };
    match exec {
        Execution::Sequential => (offset..offset + count).filter(|&i| run(i)).count() as u64,
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (offset..offset + count)
                .into_par_iter()
                .filter(|&i| run(i))
                .count() as u64
        }
    }
}

/// Maps `f` over `items`, in parallel when available. Output order matches input order.
pub fn map_collect<T, R, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn sequential_and_default_agree() {
        let f = |rng: &mut TrialRng, _| rng.random::<f64>() < 0.3;
        let a = count_successes(Execution::Sequential, 11, 0, 5000, f);
        let b = count_successes(Execution::default(), 11, 0, 5000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn split_ranges_add_up() {
        let f = |rng: &mut TrialRng, _| rng.random::<f64>() < 0.5;
        let whole = count_successes(Execution::Sequential, 3, 0, 1000, f);
        let first = count_successes(Execution::Sequential, 3, 0, 400, f);
        let rest = count_successes(Execution::Sequential, 3, 400, 600, f);
        assert_eq!(whole, first + rest);
    }
}
