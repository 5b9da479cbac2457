//! Composite Simpson rule with a nested half-resolution estimate.

use std::ops::{Add, Mul};

use num_traits::Zero;

use crate::scalar::{lit, Real};

/// Composite Simpson sum over equally spaced samples (odd count ≥ 3).
pub fn simpson_samples<T, V>(values: &[V], h: T) -> V
where
    T: Real,
    V: Copy + Zero + Add<Output = V> + Mul<T, Output = V>,
{
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3, got {n}");
    let mut odd = V::zero();
    let mut even = V::zero();
    for (i, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if i % 2 == 1 {
            odd = odd + v;
        } else {
            even = even + v;
        }
    }
    (values[0] + values[n - 1] + odd * lit::<T>(4.0) + even * lit::<T>(2.0)) * (h / lit(3.0))
}

/// Simpson estimates on `2n` and `n` intervals from one set of `2n + 1`
/// samples. Returns `(fine, coarse)`.
pub fn simpson_nested<T, V>(values: &[V], h_fine: T) -> (V, V)
where
    T: Real,
    V: Copy + Zero + Add<Output = V> + Mul<T, Output = V>,
{
    let fine = simpson_samples(values, h_fine);
    let coarse_values: Vec<V> = values.iter().step_by(2).copied().collect();
    let coarse = simpson_samples(&coarse_values, h_fine + h_fine);
    (fine, coarse)
}

/// Simpson integral of `f` over `[a, b]` with `intervals` (even) panels.
pub fn simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, intervals: usize) -> T {
    let n = intervals + intervals % 2;
    let h = (b - a) / lit(n as f64);
    let values: Vec<T> = (0..=n).map(|i| f(a + h * lit(i as f64))).collect();
    simpson_samples(&values, h)
}
