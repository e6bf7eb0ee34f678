//! Data-parallel map with a sequential fallback.
//!
//! Compiled with the `parallel` feature (the default) `par_map` fans work out
//! over rayon; without it both entry points run sequentially, so callers never
//! branch on the feature themselves.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Map `f` over `0..n`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    seq_map(n, f)
}

/// Always-sequential map over `0..n`; the baseline the benches compare against.
pub fn seq_map<T, F: Fn(usize) -> T>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let a = par_map(100, |i| i * i);
        let b = seq_map(100, |i| i * i);
        assert_eq!(a, b);
    }
}
