//! Execution policy: data-parallel via rayon when the `parallel` feature is
//! enabled, sequential otherwise.
//!
//! Kernels take an [`Exec`] so both paths can be exercised (and benchmarked)
//! from the same build. Without the feature, `Exec::Parallel` silently runs
//! the sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Cell-wise kernels below this length always run sequentially; the per-call
/// scheduling cost dominates for short grids.
pub const PAR_MIN_LEN: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when work will actually be distributed over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Fill `out[i] = f(i)`.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && out.len() >= PAR_MIN_LEN {
            out.par_iter_mut()
                .with_min_len(PAR_MIN_LEN / 4)
                .enumerate()
                .for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Fill two outputs at once, `(a[i], b[i]) = f(i)`.
    pub fn fill2<F>(self, a: &mut [f64], b: &mut [f64], f: F)
    where
        F: Fn(usize) -> (f64, f64) + Sync + Send,
    {
        assert_eq!(a.len(), b.len());
        #[cfg(feature = "parallel")]
        if self.is_parallel() && a.len() >= PAR_MIN_LEN {
            a.par_iter_mut()
                .zip(b.par_iter_mut())
                .with_min_len(PAR_MIN_LEN / 4)
                .enumerate()
                .for_each(|(i, (x, y))| {
                    let (p, q) = f(i);
                    *x = p;
                    *y = q;
                });
            return;
        }
        for (i, (x, y)) in a.iter_mut().zip(b.iter_mut()).enumerate() {
            let (p, q) = f(i);
            *x = p;
            *y = q;
        }
    }

    /// Map independent work items (parameter sweeps, loci, snapshots).
    /// Order of the output matches the input.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}
