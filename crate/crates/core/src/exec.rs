//! Execution strategy for the data-parallel inner loops.
//!
//! Every parallel stage goes through [`Exec`], so the sequential path is always
//! available at runtime and the `parallel` feature only adds the rayon path.
//! Both paths produce identical output: results are collected in input order.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Exec::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Picks the strategy for a worker count: one worker runs sequentially.
    pub fn for_workers(workers: usize) -> Self {
        if workers <= 1 {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
        }
    }

    pub fn map_range<R, F>(self, range: std::ops::Range<usize>, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => range.map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                range.into_par_iter().map(f).collect()
            }
        }
    }

    /// Applies `f(index, item)` to every element.
    pub fn for_each_indexed_mut<T, F>(self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter_mut().enumerate().for_each(|(i, x)| f(i, x)),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x))
            }
        }
    }

    pub fn sort_unstable<T: Ord + Send>(self, v: &mut [T]) {
        match self {
            Exec::Sequential => v.sort_unstable(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                v.par_sort_unstable()
            }
        }
    }
}

/// Runs `f` on a dedicated pool of `workers` threads when the parallel
/// feature is enabled; otherwise just runs it.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if workers > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}
