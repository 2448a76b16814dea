//! Periodic cubic grid and its wavenumber lattice.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Descriptor of the periodic box `[0, box_length)^3` sampled on `n` points
/// per axis. Wavenumber indices follow FFT order: `0, 1, .., n/2, -n/2+1, .., -1`,
/// scaled by `2*pi / box_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    /// `n` must be even and at least 8; `box_length` positive.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n must be even and >= 8, got {n}"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box_length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    /// Default `2*pi` box, where lattice wavenumbers are integers.
    pub fn cubic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Collocation spacing `h = box_length / n`.
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Volume of the box.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(3)
    }

    /// Signed integer mode for storage index `i`: `i` for `i <= n/2`, else `i - n`.
    pub fn mode(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber for storage index `i` along one axis.
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode(i) as f64 * 2.0 * PI / self.box_length
    }

    /// Per-axis wavenumber table in storage order.
    pub fn wavenumber_axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    /// Collocation coordinate for index `i` along one axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Smallest nonzero `|k|` on the lattice.
    pub fn min_nonzero_wavenumber(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Largest resolved `|k|` (corner of the lattice).
    pub fn max_wavenumber(&self) -> f64 {
        let m = self.n as f64 / 2.0;
        (3.0_f64).sqrt() * m * 2.0 * PI / self.box_length
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_n() {
        assert!(Grid::new(7, 1.0).is_err());
        assert!(Grid::new(6, 1.0).is_err());
        assert!(Grid::new(9, 1.0).is_err());
        assert!(Grid::new(8, 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_box_length() {
        assert!(Grid::new(8, 0.0).is_err());
        assert!(Grid::new(8, -1.0).is_err());
        assert!(Grid::new(8, f64::NAN).is_err());
    }

    #[test]
    fn wavenumber_order_and_zero_mode() {
        let g = Grid::cubic(8).unwrap();
        assert_eq!(g.wavenumber(0), 0.0);
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, 4, -3, -2, -1]);
    }

    #[test]
    fn spacing_matches_box() {
        let g = Grid::new(16, 4.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
        // 2*pi/L scaling on the lattice
        assert!((g.wavenumber(1) - 2.0 * PI / 4.0).abs() < 1e-15);
    }
}
