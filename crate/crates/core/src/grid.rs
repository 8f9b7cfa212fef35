use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on `[-L, L)^dim` with `n` points per axis.
///
/// `n` must be a power of two and `dim` is 1 or 2. The grid is a small
/// value type; derived arrays (coordinates, wavenumbers) are computed on
/// demand and cached by the operators that need them repeatedly.
///
/// Wavenumbers follow the standard signed FFT layout: index `m` on an axis
/// maps to `k = (pi/L) * m_signed` with `m_signed` in
/// `0, 1, .., n/2-1, -n/2, .., -1`. With the trapezoidal quadrature weight
/// `h^dim` in physical space and `(pi/L)^dim` in spectral space, the
/// discrete transform is unitary and Plancherel holds exactly on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    dim: usize,
    n: usize,
    half_length: f64,
}

impl SpectralGrid {
    pub fn new(dim: usize, n: usize, half_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(CoreError::Domain(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(CoreError::Domain(format!(
                "n must be a power of two >= 4, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(CoreError::Domain(format!(
                "half_length must be finite and positive, got {half_length}"
            )));
        }
        Ok(Self { dim, n, half_length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Grid spacing `h = 2L/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinate of index `j` along one axis: `x_j = -L + j h`.
    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// All coordinates along one axis.
    pub fn axis_coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.axis_coord(j)).collect()
    }

    /// Signed wavenumber of spectral index `m` along one axis.
    pub fn axis_wavenumber(&self, m: usize) -> f64 {
        let m_signed = if m < self.n / 2 {
            m as isize
        } else {
            m as isize - self.n as isize
        };
        std::f64::consts::PI / self.half_length * m_signed as f64
    }

    /// All signed wavenumbers along one axis, in FFT layout.
    pub fn axis_wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.axis_wavenumber(m)).collect()
    }

    /// Largest resolved wavenumber magnitude per axis, `pi/L * n/2`.
    pub fn max_wavenumber(&self) -> f64 {
        std::f64::consts::PI / self.half_length * (self.n / 2) as f64
    }

    /// Spectral cell volume `(pi/L)^dim` (the wavenumber spacing per axis).
    pub fn spectral_cell_volume(&self) -> f64 {
        (std::f64::consts::PI / self.half_length).powi(self.dim as i32)
    }

    /// Physical coordinates of a flattened index (row-major over axes).
    pub fn coord(&self, flat: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.axis_coord(flat)],
            2 => vec![self.axis_coord(flat / self.n), self.axis_coord(flat % self.n)],
            _ => unreachable!(),
        }
    }

    /// `|k|^2` at a flattened spectral index.
    pub fn wavenumber_sq(&self, flat: usize) -> f64 {
        match self.dim {
            1 => {
                let k = self.axis_wavenumber(flat);
                k * k
            }
            2 => {
                let k1 = self.axis_wavenumber(flat / self.n);
                let k2 = self.axis_wavenumber(flat % self.n);
                k1 * k1 + k2 * k2
            }
            _ => unreachable!(),
        }
    }

    /// `|k|^2` for every flattened spectral index.
    pub fn wavenumber_sq_all(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.wavenumber_sq(i)).collect()
    }

    /// Minimal-image displacement between two axis indices, in length units.
    pub fn axis_min_image(&self, i: usize, j: usize) -> f64 {
        let d = i as isize - j as isize;
        let n = self.n as isize;
        let d = ((d % n) + n) % n;
        let d = if d > n / 2 { d - n } else { d };
        d as f64 * self.spacing()
    }

    pub fn same_layout(&self, other: &SpectralGrid) -> bool {
        self == other
    }
}
