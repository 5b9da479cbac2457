use crate::scalar::{lit, Real};

/// Uniformly spaced, strictly increasing sample grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid<T> {
    start: T,
    step: T,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
}

impl<T: Real> UniformGrid<T> {
    pub fn new(start: T, step: T, len: usize) -> Result<Self, GridError> {
        if len < 2 {
            return Err(GridError::TooShort(len));
        }
        if !(step > T::zero()) || !step.is_finite() || !start.is_finite() {
            return Err(GridError::BadStep(crate::scalar::to_f64(step)));
        }
        Ok(Self { start, step, len })
    }

    /// `len` samples spanning `[center - half_span, center + half_span]`.
    pub fn centered(center: T, half_span: T, len: usize) -> Result<Self, GridError> {
        if len < 2 {
            return Err(GridError::TooShort(len));
        }
        let step = (half_span + half_span) / lit::<T>(len as f64 - 1.0);
        Self::new(center - half_span, step, len)
    }

    #[inline]
    pub fn start(&self) -> T {
        self.start
    }

    #[inline]
    pub fn step(&self) -> T {
        self.step
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        self.start + self.step * lit::<T>(i as f64)
    }

    #[inline]
    pub fn end(&self) -> T {
        self.at(self.len - 1)
    }

    pub fn center(&self) -> T {
        (self.start + self.end()) / lit(2.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.iter().collect()
    }

    /// True when the grid is mirror-symmetric about `center` to within a
    /// small fraction of one step or a few ulps of the center.
    pub fn is_symmetric_about(&self, center: T) -> bool {
        let tol = (self.step * lit(1e-6)).max(T::epsilon() * lit::<T>(16.0) * center.abs());
        ((self.start + self.end()) - (center + center)).abs() <= tol
    }

    /// Grid with `factor` times finer spacing sharing every original node.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self {
            start: self.start,
            step: self.step / lit::<T>(factor as f64),
            len: (self.len - 1) * factor + 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_is_symmetric() {
        let g = UniformGrid::centered(1.77_f64, 0.55, 2048).unwrap();
        assert!(g.is_symmetric_about(1.77));
        assert!((g.start() - 1.22).abs() < 1e-12);
        assert!((g.end() - 2.32).abs() < 1e-12);
        assert!((g.at(2047 - 5) + g.at(5) - 2.0 * 1.77).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(UniformGrid::new(0.0_f64, 0.0, 10).is_err());
        assert!(UniformGrid::new(0.0_f64, 1.0, 1).is_err());
    }

    #[test]
    fn refinement_keeps_nodes() {
        let g = UniformGrid::new(0.0_f64, 0.5, 5).unwrap();
        let r = g.refined(2);
        assert_eq!(r.len(), 9);
        for i in 0..5 {
            assert_eq!(g.at(i), r.at(2 * i));
        }
    }
}
