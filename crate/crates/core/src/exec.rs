//! Data-parallel map helpers with a sequential fallback.
//!
//! Monte-Carlo sweeps (Haar samples × disorder realizations × correlator
//! grids) are embarrassingly parallel: every task derives its own seed stream,
//! so results are identical for any worker count. With the `parallel` feature
//! (default) [`map_indexed`] fans out over rayon; without it the same call is
//! a plain sequential loop. Outputs are always collected in task order, so
//! downstream reductions are bitwise reproducible either way.

/// Sequential reference implementation. Always available; the criterion
/// benches compare this against the rayon path.
pub fn seq_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Map `f` over `items`, in parallel when the `parallel` feature is enabled.
/// Results are returned in input order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    use rayon::prelude::*;
    items
        .par_iter()
        .enumerate()
        .map(|(i, t)| f(i, t))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    seq_map(items, f)
}

/// Run `f` for each index in `0..n`, collecting results in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
{
    let idx: Vec<usize> = (0..n).collect();
    map_indexed(&idx, |_, &i| f(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let items: Vec<u64> = (0..257).collect();
        let a = seq_map(&items, |i, v| (i as u64) * 3 + v);
        let b = map_indexed(&items, |i, v| (i as u64) * 3 + v);
        assert_eq!(a, b);
    }
}
