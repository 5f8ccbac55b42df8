//! Thin switch between rayon and sequential execution.
//!
//! Every parallel site in this crate maps independent items and collects in
//! input order; reductions over floats happen sequentially afterwards. That
//! discipline is what makes outputs bit-identical across thread counts and
//! with the `parallel` feature disabled.

/// Order-preserving map over a slice.
pub(crate) fn map_slice<T: Sync, U: Send>(
    items: &[T],
    f: impl Fn(&T) -> U + Sync + Send,
) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Order-preserving map over an index range.
pub(crate) fn map_indices<U: Send>(n: usize, f: impl Fn(usize) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fill disjoint row chunks of `buf` in place; `f` receives (row index,
/// row slice).
pub(crate) fn fill_rows(buf: &mut [bool], row_len: usize, f: impl Fn(usize, &mut [bool]) + Sync) {
    debug_assert_eq!(buf.len() % row_len.max(1), 0);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        buf.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(iy, row)| f(iy, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        buf.chunks_mut(row_len).enumerate().for_each(|(iy, row)| f(iy, row));
    }
}
