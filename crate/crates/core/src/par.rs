//! Switch between rayon and sequential iteration at compile time.

macro_rules! if_rayon {
    ($rayon_value: expr, $else_value: expr) => {{
        #[cfg(feature = "rayon")]
        {
            $rayon_value
        }
        #[cfg(not(feature = "rayon"))]
        {
            $else_value
        }
    }};
}
pub(crate) use if_rayon;

#[cfg(feature = "rayon")]
pub(crate) use rayon::prelude::*;

/// Map `f` over `0..n`, preserving order.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if_rayon!(
        (0..n).into_par_iter().map(f).collect(),
        (0..n).map(f).collect()
    )
}
