//! Scalar and vector fields on the periodic grid, in physical and spectral form.
//!
//! The forward transform is normalized by `1/n^3`, so a coefficient equals the
//! Fourier coefficient of the trigonometric interpolant: `f(x) = sum_k c(k) e^{i k x}`.

use crate::error::{Error, Result};
use crate::fft::fft3_inplace;
use crate::grid::Grid;
use ndarray::Array3;
use num_complex::Complex64;

/// Relative Hermitian-symmetry deviation beyond which a spectral field is not
/// accepted as the transform of a real field.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Real samples on the `n^3` collocation points, `x_1` slowest (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    values: Array3<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid, values: Array3<f64>) -> Result<Self> {
        let n = grid.n();
        if values.dim() != (n, n, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("({n}, {n}, {n})"),
                got: format!("{:?}", values.dim()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: Array3::zeros((n, n, n)),
        }
    }

    /// Internal constructor that skips the finite-values check; used on hot
    /// paths where non-finite data must flow through to blow-up detection.
    pub(crate) fn from_values_unchecked(grid: Grid, values: Array3<f64>) -> Self {
        debug_assert_eq!(values.dim().0, grid.n());
        Self { grid, values }
    }

    /// Sample `f(x1, x2, x3)` on the collocation points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
            f(grid.coordinate(i), grid.coordinate(j), grid.coordinate(k))
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Complex Fourier coefficients indexed by the wavenumber lattice in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Array3<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Array3<Complex64>) -> Result<Self> {
        let n = grid.n();
        if coeffs.dim() != (n, n, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("({n}, {n}, {n})"),
                got: format!("{:?}", coeffs.dim()),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.n();
        Self {
            grid,
            coeffs: Array3::zeros((n, n, n)),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    /// Mean of the field (the `k = 0` coefficient).
    pub fn mean(&self) -> Complex64 {
        self.coeffs[[0, 0, 0]]
    }

    pub fn set_mean(&mut self, value: Complex64) {
        self.coeffs[[0, 0, 0]] = value;
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    /// `sqrt(L^3 * sum |c(k)|^2)`: the L2 norm of the interpolant (Parseval).
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum * self.grid.volume()).sqrt()
    }

    /// Max over the lattice of `|c(-k) - conj(c(k))|`, relative to `max |c|`.
    /// Zero fields report zero deviation.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.grid.n();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for ((i, j, k), c) in self.coeffs.indexed_iter() {
            let m = self.coeffs[[(n - i) % n, (n - j) % n, (n - k) % n]];
            worst = worst.max((m - c.conj()).norm());
        }
        worst / scale
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            coeffs: self.coeffs.mapv(|c| c * factor),
        }
    }
}

impl std::ops::Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        SpectralField {
            grid: self.grid.clone(),
            coeffs: &self.coeffs + &rhs.coeffs,
        }
    }
}

impl std::ops::Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "grid mismatch");
        SpectralField {
            grid: self.grid.clone(),
            coeffs: &self.coeffs - &rhs.coeffs,
        }
    }
}

/// Discrete Fourier coefficients of a real field:
/// `c(k) = (1/n^3) * sum_x f(x) e^{-i k.x}`.
pub fn transform(f: &PhysicalField) -> SpectralField {
    let mut data = crate::fft::forward_real(&f.values);
    let scale = 1.0 / (f.grid.n().pow(3) as f64);
    data.mapv_inplace(|c| c * scale);
    SpectralField {
        grid: f.grid.clone(),
        coeffs: data,
    }
}

/// Exact inverse of [`transform`]. Fails if the coefficients are not
/// Hermitian-symmetric (the field would not be real).
pub fn inverse_transform(f: &SpectralField) -> Result<PhysicalField> {
    let deviation = f.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::SymmetryViolation { deviation });
    }
    Ok(inverse_transform_unchecked(f))
}

/// Inverse transform without the symmetry check; only the non-redundant half
/// spectrum is consumed. For internal use on fields that are Hermitian by
/// construction.
pub(crate) fn inverse_transform_unchecked(f: &SpectralField) -> PhysicalField {
    PhysicalField {
        grid: f.grid.clone(),
        values: crate::fft::inverse_real(&f.coeffs),
    }
}

/// Largest imaginary residue of the inverse transform, relative to the max
/// amplitude; diagnostic for "real fields stay real" checks.
pub fn imaginary_residue(f: &SpectralField) -> f64 {
    let mut data = f.coeffs.clone();
    fft3_inplace(&mut data, false);
    let (mut max_im, mut max_abs) = (0.0_f64, 0.0_f64);
    for c in data.iter() {
        max_im = max_im.max(c.im.abs());
        max_abs = max_abs.max(c.norm());
    }
    if max_abs == 0.0 {
        0.0
    } else {
        max_im / max_abs
    }
}

/// Three spectral components sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    components: [SpectralField; 3],
}

impl SpectralVectorField {
    pub fn new(components: [SpectralField; 3]) -> Result<Self> {
        if components[0].grid != components[1].grid || components[1].grid != components[2].grid {
            return Err(Error::DimensionMismatch {
                expected: "all components on one grid".into(),
                got: "mixed grids".into(),
            });
        }
        Ok(Self { components })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            components: [
                SpectralField::zeros(grid.clone()),
                SpectralField::zeros(grid.clone()),
                SpectralField::zeros(grid),
            ],
        }
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }

    pub fn component(&self, a: usize) -> &SpectralField {
        &self.components[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut SpectralField {
        &mut self.components[a]
    }

    pub fn components(&self) -> &[SpectralField; 3] {
        &self.components
    }

    pub fn l2_norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.l2_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.max_abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            components: [
                self.components[0].scaled(factor),
                self.components[1].scaled(factor),
                self.components[2].scaled(factor),
            ],
        }
    }

    pub fn set_mean_zero(&mut self) {
        for c in &mut self.components {
            c.set_mean(Complex64::new(0.0, 0.0));
        }
    }

    /// Mutable flat slices of the three coefficient arrays (standard layout).
    pub(crate) fn components_flat_mut(&mut self) -> [&mut [Complex64]; 3] {
        let [a, b, c] = &mut self.components;
        [
            a.coeffs.as_slice_mut().expect("standard layout"),
            b.coeffs.as_slice_mut().expect("standard layout"),
            c.coeffs.as_slice_mut().expect("standard layout"),
        ]
    }

    /// `max_k |k . u(k)| / max_k |u(k)|`; zero for the zero field.
    pub fn divergence_deviation(&self) -> f64 {
        let grid = self.grid().clone();
        let kx = grid.wavenumber_axis();
        let mut max_div = 0.0_f64;
        let mut max_amp = 0.0_f64;
        let n = grid.n();
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let u = [
                        self.components[0].coeffs[[i, j, l]],
                        self.components[1].coeffs[[i, j, l]],
                        self.components[2].coeffs[[i, j, l]],
                    ];
                    let dot = u[0] * kx[i] + u[1] * kx[j] + u[2] * kx[l];
                    let amp = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
                    max_div = max_div.max(dot.norm());
                    max_amp = max_amp.max(amp);
                }
            }
        }
        if max_amp == 0.0 {
            0.0
        } else {
            max_div / max_amp
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.coeffs.iter().all(|v| v.re.is_finite() && v.im.is_finite()))
    }
}

impl std::ops::Add for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn add(self, rhs: &SpectralVectorField) -> SpectralVectorField {
        SpectralVectorField {
            components: [
                &self.components[0] + &rhs.components[0],
                &self.components[1] + &rhs.components[1],
                &self.components[2] + &rhs.components[2],
            ],
        }
    }
}

impl std::ops::Sub for &SpectralVectorField {
    type Output = SpectralVectorField;
    fn sub(self, rhs: &SpectralVectorField) -> SpectralVectorField {
        SpectralVectorField {
            components: [
                &self.components[0] - &rhs.components[0],
                &self.components[1] - &rhs.components[1],
                &self.components[2] - &rhs.components[2],
            ],
        }
    }
}

/// Transform all three components of a physical vector field.
pub fn transform_vec(fields: &[PhysicalField; 3]) -> Result<SpectralVectorField> {
    SpectralVectorField::new([
        transform(&fields[0]),
        transform(&fields[1]),
        transform(&fields[2]),
    ])
}

/// Inverse-transform all three components, checking symmetry.
pub fn inverse_transform_vec(u: &SpectralVectorField) -> Result<[PhysicalField; 3]> {
    Ok([
        inverse_transform(&u.components[0])?,
        inverse_transform(&u.components[1])?,
        inverse_transform(&u.components[2])?,
    ])
}

pub(crate) fn inverse_transform_vec_unchecked(u: &SpectralVectorField) -> [PhysicalField; 3] {
    [
        inverse_transform_unchecked(&u.components[0]),
        inverse_transform_unchecked(&u.components[1]),
        inverse_transform_unchecked(&u.components[2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use ndarray::Zip;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_physical(grid: &Grid, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let values = Array3::from_shape_fn((n, n, n), |_| rng.random_range(-1.0..1.0));
        PhysicalField::new(grid.clone(), values).unwrap()
    }

    #[test]
    fn constant_field_transforms_to_mean_only() {
        let grid = Grid::cubic(8).unwrap();
        let f = PhysicalField::from_fn(grid, |_, _, _| 1.0);
        let c = transform(&f);
        assert!((c.mean() - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        for ((i, j, k), v) in c.coeffs().indexed_iter() {
            if (i, j, k) != (0, 0, 0) {
                assert!(v.norm() < 1e-14, "leak at {:?}", (i, j, k));
            }
        }
    }

    #[test]
    fn cosine_transforms_to_half_at_unit_modes() {
        let grid = Grid::cubic(16).unwrap();
        let f = PhysicalField::from_fn(grid.clone(), |x, _, _| x.cos());
        let c = transform(&f);
        let n = grid.n();
        for ((i, j, k), v) in c.coeffs().indexed_iter() {
            let expected = if (j, k) == (0, 0) && (i == 1 || i == n - 1) {
                0.5
            } else {
                0.0
            };
            assert!(
                (v - Complex64::new(expected, 0.0)).norm() < 1e-13,
                "index {:?}: {}",
                (i, j, k),
                v
            );
        }
    }

    #[test]
    fn random_real_field_transform_is_hermitian() {
        let grid = Grid::cubic(16).unwrap();
        let c = transform(&random_physical(&grid, 7));
        assert!(c.hermitian_deviation() < 1e-13);
    }

    #[test]
    fn round_trip_reproduces_input() {
        let grid = Grid::cubic(16).unwrap();
        let f = random_physical(&grid, 3);
        let back = inverse_transform(&transform(&f)).unwrap();
        let num: f64 = f
            .values()
            .iter()
            .zip(back.values().iter())
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        let den: f64 = f.values().iter().map(|a| a * a).sum();
        assert!((num / den).sqrt() < 1e-12);
    }

    #[test]
    fn inverse_transform_examples() {
        let grid = Grid::cubic(8).unwrap();
        // c(0) = 3.5 only -> constant field
        let mut c = SpectralField::zeros(grid.clone());
        c.set_mean(Complex64::new(3.5, 0.0));
        let f = inverse_transform(&c).unwrap();
        for v in f.values().iter() {
            assert!((v - 3.5).abs() < 1e-13);
        }
        // c(+-e1) = 1/2 -> cos(x1)
        let mut c = SpectralField::zeros(grid.clone());
        c.coeffs_mut()[[1, 0, 0]] = Complex64::new(0.5, 0.0);
        c.coeffs_mut()[[7, 0, 0]] = Complex64::new(0.5, 0.0);
        let f = inverse_transform(&c).unwrap();
        for ((i, _, _), v) in f.values().indexed_iter() {
            assert!((v - grid.coordinate(i).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let grid = Grid::cubic(8).unwrap();
        let mut c = SpectralField::zeros(grid);
        c.coeffs_mut()[[1, 0, 0]] = Complex64::new(1.0, 0.0);
        // missing conjugate partner at (7,0,0)
        match inverse_transform(&c) {
            Err(Error::SymmetryViolation { deviation }) => assert!(deviation > 0.5),
            other => panic!("expected symmetry violation, got {other:?}"),
        }
    }

    #[test]
    fn parseval_at_three_resolutions() {
        for n in [8usize, 16, 32] {
            let grid = Grid::cubic(n).unwrap();
            let f = random_physical(&grid, n as u64);
            let h3 = grid.spacing().powi(3);
            let phys: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * h3;
            let spec = transform(&f).l2_norm().powi(2);
            assert!(
                (phys - spec).abs() / phys < 1e-12,
                "n = {n}: {phys} vs {spec}"
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_a_configuration_error() {
        let grid = Grid::cubic(8).unwrap();
        let bad = Array3::<f64>::zeros((4, 4, 4));
        assert!(matches!(
            PhysicalField::new(grid, bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_values_rejected() {
        let grid = Grid::cubic(8).unwrap();
        let mut values = Array3::<f64>::zeros((8, 8, 8));
        values[[0, 0, 0]] = f64::NAN;
        assert!(matches!(
            PhysicalField::new(grid, values),
            Err(Error::NonFinite)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn round_trip_l2_error_small(seed in 0u64..1000) {
            let grid = Grid::cubic(8).unwrap();
            let f = random_physical(&grid, seed);
            let back = inverse_transform(&transform(&f)).unwrap();
            let num: f64 = f.values().iter().zip(back.values().iter())
                .map(|(a, b)| (a - b).powi(2)).sum();
            let den: f64 = f.values().iter().map(|a| a * a).sum();
            prop_assert!((num / den).sqrt() < 1e-12);
        }

        #[test]
        fn transform_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0) {
            let grid = Grid::cubic(8).unwrap();
            let f = random_physical(&grid, seed);
            let g = random_physical(&grid, seed.wrapping_add(1));
            let mut combo = f.clone();
            Zip::from(combo.values_mut()).and(g.values()).for_each(|a, b| *a += alpha * b);
            let lhs = transform(&combo);
            let rhs_f = transform(&f);
            let rhs_g = transform(&g);
            let scale = lhs.max_abs().max(1e-30);
            for ((c, a), b) in lhs.coeffs().iter().zip(rhs_f.coeffs().iter()).zip(rhs_g.coeffs().iter()) {
                prop_assert!((c - (a + b * alpha)).norm() / scale < 1e-12);
            }
        }
    }
}
