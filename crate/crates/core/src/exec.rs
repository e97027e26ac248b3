//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature the parallel mode runs on the rayon pool;
//! without it both modes run sequentially. Results are always returned in
//! input order, so reductions over them are bit-identical across modes.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when parallel mode actually uses worker threads.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    pub fn map_mut<T, R, F>(self, items: &mut [T], f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter_mut().map(f).collect();
        }
        items.iter_mut().map(f).collect()
    }

    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

/// Caps the global worker pool. Only the first call takes effect.
pub fn limit_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}
