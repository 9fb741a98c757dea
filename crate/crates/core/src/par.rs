//! Switch between rayon and plain iteration. Without the `parallel`
//! feature every mode runs sequentially.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Rayon,
}

impl Parallelism {
    /// True when work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }
}

impl FromStr for Parallelism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sequential" | "seq" => Ok(Parallelism::Sequential),
            "rayon" | "parallel" => Ok(Parallelism::Rayon),
            other => Err(format!("unknown parallelism mode `{other}`")),
        }
    }
}

/// Calls `f(index, input_chunk, output_chunk)` for matching fixed-size
/// chunks of `input` and `output`.
pub fn for_each_chunk<A, B, F>(
    mode: Parallelism,
    input: &[A],
    in_chunk: usize,
    output: &mut [B],
    out_chunk: usize,
    f: F,
) where
    A: Sync,
    B: Send,
    F: Fn(usize, &[A], &mut [B]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        input
            .par_chunks(in_chunk)
            .zip(output.par_chunks_mut(out_chunk))
            .enumerate()
            .for_each(|(i, (a, b))| f(i, a, b));
        return;
    }
    let _ = mode;
    input
        .chunks(in_chunk)
        .zip(output.chunks_mut(out_chunk))
        .enumerate()
        .for_each(|(i, (a, b))| f(i, a, b));
}

/// `items.map(f).collect()`, in order.
pub fn map<T, R, F>(mode: Parallelism, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
