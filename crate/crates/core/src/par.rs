// Chunked iteration that runs on rayon when the `parallel` feature is on.
// Every chunk is processed independently, so results do not depend on the
// thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn for_each_chunk<S, I, F>(data: &mut [f64], chunk: usize, init: I, f: F)
where
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &mut [f64]) + Sync + Send,
{
    data.par_chunks_mut(chunk).for_each_init(init, f);
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn for_each_chunk<S, I, F>(data: &mut [f64], chunk: usize, init: I, f: F)
where
    I: Fn() -> S,
    F: Fn(&mut S, &mut [f64]),
{
    let mut state = init();
    data.chunks_mut(chunk).for_each(|c| f(&mut state, c));
}
