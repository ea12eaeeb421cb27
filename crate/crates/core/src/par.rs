//! Order-preserving map over an index range, parallel when the `parallel`
//! feature is enabled.

use crate::error::Result;

#[cfg(feature = "parallel")]
pub(crate) fn try_map<R, F>(len: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn try_map<R, F>(len: usize, f: F) -> Result<Vec<R>>
where
    F: Fn(usize) -> Result<R>,
{
    (0..len).map(f).collect()
}
