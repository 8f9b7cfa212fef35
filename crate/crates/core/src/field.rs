use crate::error::{CoreError, Result};
use crate::fft;
use crate::grid::SpectralGrid;
use num_complex::Complex64;

/// Complex-valued grid function, stored row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: SpectralGrid,
    values: Vec<Complex64>,
}

/// Real-valued grid function (profiles, potentials, densities).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl ComplexField {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let f = Self { grid, values };
        f.assert_finite()?;
        Ok(f)
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    /// Build from a pointwise function of the physical coordinates.
    pub fn from_fn(grid: SpectralGrid, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coord(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(CoreError::NonFinite(format!(
                    "complex field entry {i} = {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn real_part(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.re).collect(),
        }
    }

    pub fn imag_part(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.im).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid.same_layout(&other.grid) {
            Ok(())
        } else {
            Err(CoreError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )))
        }
    }

    /// Multiply pointwise by the plane wave `e^{i<v,x>}`.
    pub fn modulated(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.grid.dim() {
            return Err(CoreError::Domain(format!(
                "velocity has {} components on a dim-{} grid",
                v.len(),
                self.grid.dim()
            )));
        }
        let mut out = self.clone();
        for i in 0..out.values.len() {
            let x = self.grid.coord(i);
            let phase: f64 = x.iter().zip(v).map(|(xi, vi)| xi * vi).sum();
            out.values[i] *= Complex64::new(0.0, phase).exp();
        }
        Ok(out)
    }

    /// Forward DFT (unnormalized coefficients in FFT layout).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut v = self.values.clone();
        fft::forward(&self.grid, &mut v);
        v
    }

    /// Rebuild a field from unnormalized DFT coefficients.
    pub fn from_spectrum(grid: SpectralGrid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(CoreError::GridMismatch(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        fft::inverse(&grid, &mut coeffs);
        Self::new(grid, coeffs)
    }

    /// Spectral translation: returns `u(. - shift)` via per-mode phases.
    /// The Nyquist bin is treated symmetrically (cosine phase) so real
    /// fields stay real under sub-grid shifts.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.grid.dim() {
            return Err(CoreError::Domain(format!(
                "shift has {} components on a dim-{} grid",
                shift.len(),
                self.grid.dim()
            )));
        }
        let n = self.grid.n();
        let mut coeffs = self.spectrum();
        let phase_axis = |a: f64| -> Vec<Complex64> {
            (0..n)
                .map(|m| {
                    let k = self.grid.axis_wavenumber(m);
                    if m == n / 2 {
                        Complex64::new((k * a).cos(), 0.0)
                    } else {
                        Complex64::new(0.0, -k * a).exp()
                    }
                })
                .collect()
        };
        match self.grid.dim() {
            1 => {
                let ph = phase_axis(shift[0]);
                for (c, p) in coeffs.iter_mut().zip(&ph) {
                    *c *= p;
                }
            }
            2 => {
                let p1 = phase_axis(shift[0]);
                let p2 = phase_axis(shift[1]);
                for i1 in 0..n {
                    for i2 in 0..n {
                        coeffs[i1 * n + i2] *= p1[i1] * p2[i2];
                    }
                }
            }
            _ => unreachable!(),
        }
        Self::from_spectrum(self.grid, coeffs)
    }

    /// Evaluate the band-limited interpolant at arbitrary points.
    ///
    /// Direct nonuniform Fourier sum, O(len * points). Intended for
    /// one-shot resampling (initial data on incommensurate grids, the
    /// `rescale` operation); per-step code paths use `translated` instead.
    pub fn sample_at(&self, points: &[Vec<f64>]) -> Vec<Complex64> {
        let n = self.grid.n();
        let nf = self.grid.len() as f64;
        let l = self.grid.half_length();
        let coeffs = self.spectrum();
        match self.grid.dim() {
            1 => points
                .iter()
                .map(|p| {
                    let y = p[0];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, c) in coeffs.iter().enumerate() {
                        let k = self.grid.axis_wavenumber(m);
                        let basis = if m == n / 2 {
                            Complex64::new((k * (y + l)).cos(), 0.0)
                        } else {
                            Complex64::new(0.0, k * (y + l)).exp()
                        };
                        acc += c * basis;
                    }
                    acc / nf
                })
                .collect(),
            2 => points
                .iter()
                .map(|p| {
                    // factorized axis sums: O(n^2) per point on an n x n grid
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m1 in 0..n {
                        let k1 = self.grid.axis_wavenumber(m1);
                        let b1 = if m1 == n / 2 {
                            Complex64::new((k1 * (p[0] + l)).cos(), 0.0)
                        } else {
                            Complex64::new(0.0, k1 * (p[0] + l)).exp()
                        };
                        let mut row = Complex64::new(0.0, 0.0);
                        for m2 in 0..n {
                            let k2 = self.grid.axis_wavenumber(m2);
                            let b2 = if m2 == n / 2 {
                                Complex64::new((k2 * (p[1] + l)).cos(), 0.0)
                            } else {
                                Complex64::new(0.0, k2 * (p[1] + l)).exp()
                            };
                            row += coeffs[m1 * n + m2] * b2;
                        }
                        acc += row * b1;
                    }
                    acc / nf
                })
                .collect(),
            _ => unreachable!(),
        }
    }
}

impl RealField {
    pub fn new(grid: SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CoreError::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        let f = Self { grid, values };
        f.assert_finite()?;
        Ok(f)
    }

    pub fn zeros(grid: SpectralGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_fn(grid: SpectralGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.coord(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFinite(format!("real field entry {i} = {v}")));
            }
        }
        Ok(())
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &v| a.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_layout(&other.grid) {
            return Err(CoreError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Spectral translation of a real profile; see `ComplexField::translated`.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let c = self.to_complex().translated(shift)?;
        Ok(Self {
            grid: self.grid,
            values: c.values().iter().map(|v| v.re).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_1d(n: usize, l: f64) -> ComplexField {
        let g = SpectralGrid::new(1, n, l).unwrap();
        ComplexField::from_fn(g, |x| Complex64::new((-x[0] * x[0] / 2.0).exp(), 0.0))
    }

    #[test]
    fn translation_matches_closed_form() {
        let u = gaussian_1d(256, 12.0);
        let a = 0.731; // deliberately off-grid
        let shifted = u.translated(&[a]).unwrap();
        let g = *u.grid();
        for (i, v) in shifted.values().iter().enumerate() {
            let x = g.coord(i)[0];
            let want = (-(x - a) * (x - a) / 2.0).exp();
            assert!((v.re - want).abs() < 1e-11, "at x={x}: {} vs {want}", v.re);
            assert!(v.im.abs() < 1e-11);
        }
    }

    #[test]
    fn real_profile_stays_real_under_subgrid_shift() {
        let u = gaussian_1d(128, 10.0);
        let shifted = u.translated(&[0.0314159]).unwrap();
        assert!(shifted.imag_part().max_abs() < 1e-12);
    }

    #[test]
    fn sample_at_reproduces_grid_values() {
        let u = gaussian_1d(64, 8.0);
        let pts: Vec<Vec<f64>> = (0..64).map(|i| u.grid().coord(i)).collect();
        let vals = u.sample_at(&pts);
        for (a, b) in vals.iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sample_at_interpolates_between_nodes() {
        let u = gaussian_1d(256, 10.0);
        let pts = vec![vec![0.123456], vec![-1.618]];
        let vals = u.sample_at(&pts);
        for (pt, v) in pts.iter().zip(&vals) {
            let want = (-pt[0] * pt[0] / 2.0).exp();
            assert!((v.re - want).abs() < 1e-10);
        }
    }

    #[test]
    fn modulation_adds_linear_phase() {
        let u = gaussian_1d(64, 8.0);
        let m = u.modulated(&[2.5]).unwrap();
        let x = u.grid().coord(17)[0];
        let want = u.values()[17] * Complex64::new(0.0, 2.5 * x).exp();
        assert!((m.values()[17] - want).norm() < 1e-14);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = gaussian_1d(64, 8.0);
        let b = gaussian_1d(128, 8.0);
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn sample_at_2d_reproduces_grid_values() {
        let g = SpectralGrid::new(2, 16, 6.0).unwrap();
        let u = ComplexField::from_fn(g, |x| {
            Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)
        });
        let pts: Vec<Vec<f64>> = (0..g.len()).map(|i| g.coord(i)).collect();
        let vals = u.sample_at(&pts);
        for (a, b) in vals.iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-11);
        }
    }
}
