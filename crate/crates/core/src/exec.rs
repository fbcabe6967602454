//! Data-parallel execution of independent work items.
//!
//! Replicates and enumeration chunks are independent by construction
//! (counter-based keying), so they run on rayon when the `parallel`
//! feature is enabled and on a plain loop otherwise. Results come back
//! in item order and all floating-point reductions happen sequentially
//! afterwards, so both modes produce byte-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..count`, returning results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

/// Map `f` over `0..count`, returning results in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..count).map(f).collect()
}

/// Chunk size used when splitting enumeration ranges. Fixed so that the
/// chunk boundaries (and therefore the order of the sequential merge)
/// do not depend on the thread count or the active feature set.
pub const ENUM_CHUNK: u64 = 4096;

/// Split `0..total` into fixed-size chunks, map each chunk, return chunk
/// results in order.
pub fn map_chunked<T, F>(total: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let chunks = total.div_ceil(ENUM_CHUNK);
    map_indexed(chunks, |c| {
        let start = c * ENUM_CHUNK;
        let end = (start + ENUM_CHUNK).min(total);
        f(start..end)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let v = map_indexed(100, |i| i * 2);
        assert_eq!(v.len(), 100);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i as u64));
    }

    #[test]
    fn map_chunked_covers_range_once() {
        let parts = map_chunked(10_000, |r| r.end - r.start);
        assert_eq!(parts.iter().sum::<u64>(), 10_000);
    }
}
