//! Execution policy for data-parallel loops.
//!
//! `Exec::Parallel` maps over the input with rayon when the crate is built
//! with the `parallel` feature; without it every loop runs sequentially.
//! Results are always collected in input order, so outputs do not depend
//! on the number of worker threads.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this policy will actually fan out over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Order-preserving map over `items`.
    pub fn map<T, U, F>(self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
        items.into_iter().map(f).collect()
    }

    /// Order-preserving map over `0..len`.
    pub fn map_range<U, F>(self, len: usize, f: F) -> Vec<U>
    where
        U: Send,
        F: Fn(usize) -> U + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Maximum of `f` over `0..len`, NaN-propagating (a NaN anywhere yields NaN).
    pub fn max_range<F>(self, len: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let fold = |acc: f64, v: f64| if acc.is_nan() || v.is_nan() { f64::NAN } else { acc.max(v) };
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            use rayon::prelude::*;
            return (0..len)
                .into_par_iter()
                .map(f)
                .reduce(|| f64::NEG_INFINITY, fold);
        }
        (0..len).map(f).fold(f64::NEG_INFINITY, fold)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let seq = Exec::Sequential.map_range(100, |i| (i as f64).sqrt());
        let par = Exec::Parallel.map_range(100, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
        assert_eq!(
            Exec::Sequential.max_range(10, |i| i as f64),
            Exec::Parallel.max_range(10, |i| i as f64)
        );
    }

    #[test]
    fn max_propagates_nan() {
        assert!(Exec::Sequential.max_range(3, |i| if i == 1 { f64::NAN } else { 0.0 }).is_nan());
    }
}
