//! Parallel or sequential evaluation of index-mapped work.
//!
//! Every helper returns its results in index order, so reductions done by the
//! caller over the returned vector are deterministic regardless of the mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Execution {
    /// Rayon work-stealing over the global pool. Falls back to
    /// [`Execution::Sequential`] when the `parallel` feature is off.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    /// `true` when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(i)` for `i in 0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fills `out[i] = f(i)`.
    pub fn fill<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            out.par_iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
            return;
        }
        out.iter_mut().enumerate().for_each(|(i, o)| *o = f(i));
    }

    /// Calls `f(i, chunk)` on consecutive `chunk_len`-sized chunks of `out`.
    pub fn for_each_chunk<T, F>(self, out: &mut [T], chunk_len: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        let chunk_len = chunk_len.max(1);
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            out.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        out.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Sums in index order.
pub(crate) fn ordered_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Parallel.map(1000, f);
        let b = Execution::Sequential.map(1000, f);
        assert_eq!(a, b);

        let mut x = vec![0.0; 257];
        let mut y = vec![0.0; 257];
        Execution::Parallel.fill(&mut x, f);
        Execution::Sequential.fill(&mut y, f);
        assert_eq!(x, y);
    }

    #[test]
    fn chunks_are_indexed_in_order() {
        let mut v = vec![0usize; 10];
        Execution::Parallel.for_each_chunk(&mut v, 3, |ci, c| c.iter_mut().for_each(|e| *e = ci));
        assert_eq!(v, vec![0, 0, 0, 1, 1, 1, 2, 2, 2, 3]);
    }
}
