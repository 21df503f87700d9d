//! Sampled rectangular grids and complex fields living on them.
//!
//! Samples are stored row-major with `y` as the outer index. The sample at
//! `(nx / 2, ny / 2)` (integer division) sits exactly at the origin, so
//! `x = (i - nx/2) * pitch` and `y = (j - ny/2) * pitch`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    pitch: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, pitch: f64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::invalid(format!(
                "grid needs at least 2 samples per axis, got {nx}x{ny}"
            )));
        }
        if nx > u32::MAX as usize || ny > u32::MAX as usize {
            return Err(Error::invalid("grid dimensions must fit in 32 bits"));
        }
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(Error::invalid(format!(
                "pitch must be positive, got {pitch}"
            )));
        }
        Ok(Self { nx, ny, pitch })
    }

    /// The 608 x 684 mirror panel with 7.5 µm pitch.
    pub fn dmd_default() -> Self {
        Self {
            nx: 608,
            ny: 684,
            pitch: 7.5e-6,
        }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx / 2) as f64) * self.pitch
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - (self.ny / 2) as f64) * self.pitch
    }

    /// Physical width and height of the sampled region.
    pub fn extent(&self) -> (f64, f64) {
        (self.nx as f64 * self.pitch, self.ny as f64 * self.pitch)
    }

    /// Area represented by one sample, the quadrature weight.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.pitch * self.pitch
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(*self, *other))
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} @ {} m", self.nx, self.ny, self.pitch)
    }
}

/// Complex scalar amplitude sampled on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} values do not fill a {} grid",
                values.len(),
                grid
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: GridSpec, value: Complex64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Evaluate `f(x, y)` at every sample.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn max_amplitude(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Total power, `Σ |v|² · pitch²`.
    pub fn power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    /// Bilinear interpolation of the complex values at a physical point.
    /// Returns `None` outside the sampled region.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> Option<Complex64> {
        let g = &self.grid;
        let fi = x / g.pitch() + (g.nx() / 2) as f64;
        let fj = y / g.pitch() + (g.ny() / 2) as f64;
        if fi < 0.0 || fj < 0.0 || fi > (g.nx() - 1) as f64 || fj > (g.ny() - 1) as f64 {
            return None;
        }
        let i0 = (fi.floor() as usize).min(g.nx() - 2);
        let j0 = (fj.floor() as usize).min(g.ny() - 2);
        let tx = fi - i0 as f64;
        let ty = fj - j0 as f64;
        let v00 = self.at(i0, j0);
        let v10 = self.at(i0 + 1, j0);
        let v01 = self.at(i0, j0 + 1);
        let v11 = self.at(i0 + 1, j0 + 1);
        Some(
            v00 * ((1.0 - tx) * (1.0 - ty))
                + v10 * (tx * (1.0 - ty))
                + v01 * ((1.0 - tx) * ty)
                + v11 * (tx * ty),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_sample_is_origin() {
        for (nx, ny) in [(2, 2), (5, 7), (608, 684), (513, 512)] {
            let g = GridSpec::new(nx, ny, 3.3e-6).unwrap();
            assert_eq!(g.x(nx / 2), 0.0);
            assert_eq!(g.y(ny / 2), 0.0);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(1, 10, 1.0).is_err());
        assert!(GridSpec::new(10, 10, 0.0).is_err());
        assert!(GridSpec::new(10, 10, f64::NAN).is_err());
    }

    #[test]
    fn shape_must_match() {
        let g = GridSpec::new(4, 3, 1.0).unwrap();
        assert!(ComplexField::new(g, vec![Complex64::new(0.0, 0.0); 11]).is_err());
        assert!(ComplexField::new(g, vec![Complex64::new(0.0, 0.0); 12]).is_ok());
    }

    #[test]
    fn bilinear_reproduces_samples_and_planes() {
        let g = GridSpec::new(8, 6, 0.5).unwrap();
        let f = ComplexField::from_fn(g, |x, y| Complex64::new(2.0 * x - y, x + 3.0 * y));
        let v = f.sample_bilinear(g.x(3), g.y(2)).unwrap();
        assert_eq!(v, f.at(3, 2));
        let v = f.sample_bilinear(0.3, -0.7).unwrap();
        assert!((v - Complex64::new(0.6 + 0.7, 0.3 - 2.1)).norm() < 1e-12);
        assert!(f.sample_bilinear(100.0, 0.0).is_none());
    }
}
