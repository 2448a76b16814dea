//! Spectral differential operators and the divergence-free projection.

use crate::field::{
    inverse_transform_unchecked, transform, PhysicalField, SpectralField, SpectralVectorField,
};
use crate::grid::Grid;
use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;

/// Differentiate `order` times along `axis` (0-based): multiply by
/// `(i k_axis)^order`. The Nyquist plane is zeroed for odd orders so
/// real fields stay real.
pub fn derivative(f: &SpectralField, axis: usize, order: u32) -> SpectralField {
    assert!(axis < 3, "axis out of range");
    assert!(order >= 1, "order must be >= 1");
    let grid = f.grid().clone();
    let n = grid.n();
    let nyquist = n / 2;
    let kx = grid.wavenumber_axis();
    // per-axis multiplier table
    let table: Vec<Complex64> = (0..n)
        .map(|idx| {
            if order % 2 == 1 && idx == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, kx[idx]).powu(order)
            }
        })
        .collect();
    let mut out = f.clone();
    let flat = out.coeffs_mut().as_slice_mut().expect("standard layout");
    match axis {
        0 => {
            // multiplier constant over n^2 chunks
            for (chunk, m) in flat.chunks_exact_mut(n * n).zip(table.iter()) {
                for c in chunk {
                    *c *= *m;
                }
            }
        }
        1 => {
            for slab in flat.chunks_exact_mut(n * n) {
                for (chunk, m) in slab.chunks_exact_mut(n).zip(table.iter()) {
                    for c in chunk {
                        *c *= *m;
                    }
                }
            }
        }
        _ => {
            for line in flat.chunks_exact_mut(n) {
                for (c, m) in line.iter_mut().zip(table.iter()) {
                    *c *= *m;
                }
            }
        }
    }
    out
}

/// Gradient of a scalar field: `[d/dx1, d/dx2, d/dx3] f`.
pub fn gradient(f: &SpectralField) -> [SpectralField; 3] {
    [
        derivative(f, 0, 1),
        derivative(f, 1, 1),
        derivative(f, 2, 1),
    ]
}

/// Laplacian of a scalar field (multiplier `-|k|^2`, all modes).
pub fn laplacian(f: &SpectralField) -> SpectralField {
    let grid = f.grid().clone();
    let kx = grid.wavenumber_axis();
    let mut out = f.clone();
    for ((i, j, l), c) in out.coeffs_mut().indexed_iter_mut() {
        let k2 = kx[i] * kx[i] + kx[j] * kx[j] + kx[l] * kx[l];
        *c *= -k2;
    }
    out
}

pub fn laplacian_vec(u: &SpectralVectorField) -> SpectralVectorField {
    SpectralVectorField::new([
        laplacian(u.component(0)),
        laplacian(u.component(1)),
        laplacian(u.component(2)),
    ])
    .expect("components share a grid")
}

/// Spectral divergence `i k . u` (full lattice, no Nyquist zeroing, so it is
/// exactly the quantity annihilated by [`leray_project`]).
pub fn divergence(u: &SpectralVectorField) -> SpectralField {
    let grid = u.grid().clone();
    let kx = grid.wavenumber_axis();
    let mut out = SpectralField::zeros(grid);
    for ((i, j, l), c) in out.coeffs_mut().indexed_iter_mut() {
        let dot = u.component(0).coeffs()[[i, j, l]] * kx[i]
            + u.component(1).coeffs()[[i, j, l]] * kx[j]
            + u.component(2).coeffs()[[i, j, l]] * kx[l];
        *c = Complex64::new(0.0, 1.0) * dot;
    }
    out
}

/// Leray projection onto divergence-free fields:
/// `u(k) <- u(k) - k (k . u(k)) / |k|^2` for `k != 0`; the mean is unchanged.
pub fn leray_project(u: &SpectralVectorField) -> SpectralVectorField {
    let grid = u.grid().clone();
    let kx = grid.wavenumber_axis();
    let n = grid.n();
    let mut out = u.clone();
    let [c0, c1, c2] = out.components_flat_mut();
    let mut idx = 0;
    for k1 in kx.iter().take(n) {
        for k2v in kx.iter().take(n) {
            for k3 in kx.iter().take(n) {
                let ksq = k1 * k1 + k2v * k2v + k3 * k3;
                if ksq != 0.0 {
                    let dot = c0[idx] * *k1 + c1[idx] * *k2v + c2[idx] * *k3;
                    let factor = dot / ksq;
                    c0[idx] -= factor * *k1;
                    c1[idx] -= factor * *k2v;
                    c2[idx] -= factor * *k3;
                }
                idx += 1;
            }
        }
    }
    out
}

/// Zero every mode with `|k_i| > n/3` on some axis (quadratic dealiasing).
pub fn two_thirds_mask(f: &mut SpectralField) {
    let grid = f.grid().clone();
    let n = grid.n() as i64;
    for ((i, j, l), c) in f.coeffs_mut().indexed_iter_mut() {
        let over = [i, j, l]
            .iter()
            .any(|&idx| 3 * grid.mode(idx).abs() > n);
        if over {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

pub fn two_thirds_mask_vec(u: &mut SpectralVectorField) {
    for a in 0..3 {
        two_thirds_mask(u.component_mut(a));
    }
}

/// The convective product `(u . grad) u`, formed pointwise in physical space
/// and transformed back. No dealiasing is applied here.
pub fn convective_term(u: &SpectralVectorField) -> SpectralVectorField {
    convective_term_with_speed(u).0
}

/// Physical-space convective product plus the collocation maximum of `|u|`.
/// Transforms run in parallel; the 12 inverse FFTs dominate the cost.
pub(crate) fn convective_physical(u: &SpectralVectorField) -> ([Array3<f64>; 3], f64) {
    let n = u.grid().n();

    // u itself plus its 9 gradients, inverted in one parallel batch
    let mut spectral: Vec<SpectralField> = Vec::with_capacity(12);
    for comp in 0..3 {
        spectral.push(u.component(comp).clone());
    }
    for comp in 0..3 {
        for axis in 0..3 {
            spectral.push(derivative(u.component(comp), axis, 1));
        }
    }
    let phys: Vec<PhysicalField> = spectral
        .par_iter()
        .map(inverse_transform_unchecked)
        .collect();
    let flat: Vec<&[f64]> = phys
        .iter()
        .map(|f| f.values().as_slice().expect("standard layout"))
        .collect();

    let mut max_speed_sq = 0.0_f64;
    let mut conv: [Array3<f64>; 3] = [
        Array3::zeros((n, n, n)),
        Array3::zeros((n, n, n)),
        Array3::zeros((n, n, n)),
    ];
    for comp in 0..3 {
        // flat[3 + comp*3 + axis] is d(u_comp)/d(x_axis)
        let out = conv[comp].as_slice_mut().expect("standard layout");
        let (g0, g1, g2) = (flat[3 + comp * 3], flat[3 + comp * 3 + 1], flat[3 + comp * 3 + 2]);
        for idx in 0..out.len() {
            out[idx] = flat[0][idx] * g0[idx] + flat[1][idx] * g1[idx] + flat[2][idx] * g2[idx];
        }
    }
    for idx in 0..flat[0].len() {
        let s = flat[0][idx] * flat[0][idx]
            + flat[1][idx] * flat[1][idx]
            + flat[2][idx] * flat[2][idx];
        if s > max_speed_sq {
            max_speed_sq = s;
        }
    }
    (conv, max_speed_sq.sqrt())
}

/// As [`convective_term`], also returning the collocation maximum of `|u|`
/// (reused for CFL checks without an extra transform).
pub fn convective_term_with_speed(u: &SpectralVectorField) -> (SpectralVectorField, f64) {
    let grid = u.grid().clone();
    let (conv, max_speed) = convective_physical(u);
    let mut components: Vec<SpectralField> = conv
        .into_par_iter()
        .map(|values| transform(&PhysicalField::from_values_unchecked(grid.clone(), values)))
        .collect();
    let c2 = components.pop().expect("three components");
    let c1 = components.pop().expect("three components");
    let c0 = components.pop().expect("three components");
    (
        SpectralVectorField::new([c0, c1, c2]).expect("components share a grid"),
        max_speed,
    )
}

/// Pressure recovered from the velocity: solves `-lap(pi) = div((u.grad) u)`
/// spectrally with the zero-mean normalization `pi(0) = 0`.
pub fn pressure_from(u: &SpectralVectorField) -> SpectralField {
    let conv = convective_term(u);
    let grid = u.grid().clone();
    let kx = grid.wavenumber_axis();
    let mut out = SpectralField::zeros(grid);
    for ((i, j, l), c) in out.coeffs_mut().indexed_iter_mut() {
        let k = [kx[i], kx[j], kx[l]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue; // pi(0) = 0
        }
        let dot = conv.component(0).coeffs()[[i, j, l]] * k[0]
            + conv.component(1).coeffs()[[i, j, l]] * k[1]
            + conv.component(2).coeffs()[[i, j, l]] * k[2];
        // |k|^2 pi = i k . conv
        *c = Complex64::new(0.0, 1.0) * dot / k2;
    }
    out
}

/// Spectral inner product `L^3 * Re sum_k a(k) conj(b(k))`.
pub fn inner_product(a: &SpectralField, b: &SpectralField) -> f64 {
    assert_eq!(a.grid(), b.grid(), "grid mismatch");
    let s: f64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs().iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    s * a.grid().volume()
}

pub fn inner_product_vec(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    (0..3)
        .map(|c| inner_product(a.component(c), b.component(c)))
        .sum()
}

/// `||grad u||_{L2}^2` from the spectrum: `L^3 sum |k|^2 |u(k)|^2`.
pub fn grad_sq_norm(u: &SpectralVectorField) -> f64 {
    let grid = u.grid().clone();
    let kx = grid.wavenumber_axis();
    let n = grid.n();
    let c0 = u.component(0).coeffs().as_slice().expect("standard layout");
    let c1 = u.component(1).coeffs().as_slice().expect("standard layout");
    let c2 = u.component(2).coeffs().as_slice().expect("standard layout");
    let mut sum = 0.0;
    let mut idx = 0;
    for k1 in kx.iter().take(n) {
        for k2v in kx.iter().take(n) {
            for k3 in kx.iter().take(n) {
                let ksq = k1 * k1 + k2v * k2v + k3 * k3;
                sum += ksq * (c0[idx].norm_sqr() + c1[idx].norm_sqr() + c2[idx].norm_sqr());
                idx += 1;
            }
        }
    }
    sum * grid.volume()
}

/// Taylor-Green velocity `a (sin x1 cos x2, -cos x1 sin x2, 0)` in spectral form.
pub fn taylor_green(grid: &Grid, amplitude: f64) -> SpectralVectorField {
    let u1 = PhysicalField::from_fn(grid.clone(), |x, y, _| amplitude * x.sin() * y.cos());
    let u2 = PhysicalField::from_fn(grid.clone(), |x, y, _| -amplitude * x.cos() * y.sin());
    let u3 = PhysicalField::zeros(grid.clone());
    SpectralVectorField::new([transform(&u1), transform(&u2), transform(&u3)])
        .expect("components share a grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inverse_transform;
    use crate::grid::Grid;
    use ndarray::Array3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spectral(grid: &Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let values = Array3::from_shape_fn((n, n, n), |_| rng.random_range(-1.0..1.0));
        transform(&PhysicalField::new(grid.clone(), values).unwrap())
    }

    fn random_vector(grid: &Grid, seed: u64) -> SpectralVectorField {
        SpectralVectorField::new([
            random_spectral(grid, seed),
            random_spectral(grid, seed + 1),
            random_spectral(grid, seed + 2),
        ])
        .unwrap()
    }

    #[test]
    fn derivative_of_cosine_is_minus_sine() {
        let grid = Grid::cubic(16).unwrap();
        let f = transform(&PhysicalField::from_fn(grid.clone(), |x, _, _| x.cos()));
        let df = inverse_transform(&derivative(&f, 0, 1)).unwrap();
        for ((i, _, _), v) in df.values().indexed_iter() {
            assert!((v + grid.coordinate(i).sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn laplacian_of_cosine_via_repeated_derivative() {
        let grid = Grid::cubic(16).unwrap();
        let f = transform(&PhysicalField::from_fn(grid.clone(), |x, _, _| x.cos()));
        // sum over axes of second derivatives
        let mut lap = derivative(&f, 0, 2);
        lap = &lap + &derivative(&f, 1, 2);
        lap = &lap + &derivative(&f, 2, 2);
        let lp = inverse_transform(&lap).unwrap();
        for ((i, _, _), v) in lp.values().indexed_iter() {
            assert!((v + grid.coordinate(i).cos()).abs() < 1e-13);
        }
        // and agrees with the one-shot multiplier
        let direct = laplacian(&f);
        assert!((&direct - &lap).max_abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_centered_differences_at_second_order() {
        // band-limited test function, fixed independent of resolution
        let f = |x: f64, y: f64, z: f64| (x).sin() + 0.5 * (2.0 * x).cos() * (y).sin() + (z).cos();
        let df = |x: f64, y: f64, _z: f64| (x).cos() - (2.0 * x).sin() * (y).sin();
        let mut errors = Vec::new();
        for n in [16usize, 32, 64] {
            let grid = Grid::cubic(n).unwrap();
            let spec = transform(&PhysicalField::from_fn(grid.clone(), f));
            let d_spec = inverse_transform(&derivative(&spec, 0, 1)).unwrap();
            // spectral derivative must equal the analytic one (band-limited)
            let mut max_spec_err = 0.0_f64;
            // centered finite differences as the independent oracle
            let h = grid.spacing();
            let phys = PhysicalField::from_fn(grid.clone(), f);
            let mut max_fd_err = 0.0_f64;
            for ((i, j, l), v) in d_spec.values().indexed_iter() {
                let exact = df(grid.coordinate(i), grid.coordinate(j), grid.coordinate(l));
                max_spec_err = max_spec_err.max((v - exact).abs());
                let up = phys.values()[[(i + 1) % n, j, l]];
                let dn = phys.values()[[(i + n - 1) % n, j, l]];
                max_fd_err = max_fd_err.max(((up - dn) / (2.0 * h) - exact).abs());
            }
            assert!(max_spec_err < 1e-12, "n = {n}: {max_spec_err}");
            errors.push(max_fd_err);
        }
        // O(h^2): each doubling shrinks the FD error ~4x
        assert!(errors[0] / errors[1] > 3.5 && errors[0] / errors[1] < 4.5);
        assert!(errors[1] / errors[2] > 3.5 && errors[1] / errors[2] < 4.5);
    }

    #[test]
    fn leray_annihilates_gradients() {
        let grid = Grid::cubic(16).unwrap();
        // keep g below the Nyquist planes: the odd-order derivative zeroes them,
        // so the gradient of Nyquist content is not parallel to the full k
        let mut g = random_spectral(&grid, 11);
        two_thirds_mask(&mut g);
        let u = SpectralVectorField::new(gradient(&g)).unwrap();
        let p = leray_project(&u);
        // everything except the (zero) mean must vanish
        assert!(p.max_abs() < 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn leray_fixes_divergence_free_fields() {
        let grid = Grid::cubic(16).unwrap();
        let u = leray_project(&random_vector(&grid, 5));
        let again = leray_project(&u);
        let diff = (&again - &u).max_abs();
        assert!(diff < 1e-13 * u.max_abs());
        assert!(u.divergence_deviation() < 1e-13);
    }

    #[test]
    fn leray_is_idempotent_and_self_adjoint() {
        let grid = Grid::cubic(16).unwrap();
        let u = random_vector(&grid, 21);
        let v = random_vector(&grid, 22);
        let pu = leray_project(&u);
        let ppu = leray_project(&pu);
        assert!((&ppu - &pu).max_abs() < 1e-13 * pu.max_abs());
        let lhs = inner_product_vec(&pu, &v);
        let rhs = inner_product_vec(&u, &leray_project(&v));
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn derivative_commutes_with_leray_on_divergence_free_fields() {
        let grid = Grid::cubic(16).unwrap();
        let u = leray_project(&random_vector(&grid, 33));
        for axis in 0..3 {
            let a = leray_project(&SpectralVectorField::new([
                derivative(u.component(0), axis, 1),
                derivative(u.component(1), axis, 1),
                derivative(u.component(2), axis, 1),
            ])
            .unwrap());
            let du = SpectralVectorField::new([
                derivative(u.component(0), axis, 1),
                derivative(u.component(1), axis, 1),
                derivative(u.component(2), axis, 1),
            ])
            .unwrap();
            // on div-free fields the projection is the identity on the derivative
            let scale = du.max_abs().max(1e-30);
            assert!((&a - &du).max_abs() / scale < 1e-12);
        }
    }

    #[test]
    fn pressure_of_zero_is_zero() {
        let grid = Grid::cubic(8).unwrap();
        let u = SpectralVectorField::zeros(grid);
        assert_eq!(pressure_from(&u).max_abs(), 0.0);
    }

    #[test]
    fn pressure_of_taylor_green_is_quarter_cos_sum() {
        // With u = (sin x1 cos x2, -cos x1 sin x2, 0), substitution into the
        // momentum balance gives grad pi = -(u.grad)u = -(sin 2x1, sin 2x2, 0)/2,
        // hence pi = (cos 2x1 + cos 2x2)/4 once normalized to zero mean.
        let grid = Grid::cubic(32).unwrap();
        let u = taylor_green(&grid, 1.0);
        let pi = inverse_transform(&pressure_from(&u)).unwrap();
        for ((i, j, _), v) in pi.values().indexed_iter() {
            let x = grid.coordinate(i);
            let y = grid.coordinate(j);
            let expected = ((2.0 * x).cos() + (2.0 * y).cos()) / 4.0;
            assert!((v - expected).abs() < 1e-12, "at ({x},{y}): {v} vs {expected}");
        }
    }

    #[test]
    fn pressure_solves_its_poisson_equation() {
        // independent route: -lap(pi) must equal div((u.grad)u) for any u
        let grid = Grid::cubic(16).unwrap();
        let u = leray_project(&random_vector(&grid, 44));
        let pi = pressure_from(&u);
        let lhs = laplacian(&pi).scaled(-1.0);
        let rhs = divergence(&convective_term(&u));
        let scale = rhs.max_abs().max(1e-30);
        // the Poisson solve cannot reproduce any mean in the source; compare
        // mode-by-mode away from k = 0
        let mut worst = 0.0_f64;
        for ((i, j, l), c) in lhs.coeffs().indexed_iter() {
            if (i, j, l) == (0, 0, 0) {
                continue;
            }
            worst = worst.max((c - rhs.coeffs()[[i, j, l]]).norm());
        }
        assert!(worst / scale < 1e-12);
    }

    #[test]
    fn pressure_has_zero_mean() {
        let grid = Grid::cubic(16).unwrap();
        let u = leray_project(&random_vector(&grid, 55));
        assert_eq!(pressure_from(&u).mean(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn two_thirds_mask_zeroes_high_modes_only() {
        let grid = Grid::cubic(16).unwrap();
        let mut f = random_spectral(&grid, 66);
        let before = f.clone();
        two_thirds_mask(&mut f);
        let n = grid.n() as i64;
        for ((i, j, l), c) in f.coeffs().indexed_iter() {
            let over = [i, j, l].iter().any(|&idx| 3 * grid.mode(idx).abs() > n);
            if over {
                assert_eq!(c.norm(), 0.0);
            } else {
                assert_eq!(*c, before.coeffs()[[i, j, l]]);
            }
        }
    }
}
