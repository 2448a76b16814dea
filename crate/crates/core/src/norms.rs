//! Lebesgue, homogeneous Sobolev, and homogeneous Besov norms, the
//! interpolation-ratio checker, and time-integrated Serrin quantities.
//!
//! Conventions: `L^q` norms use the collocation quadrature `h^3 sum |f|^q`
//! (`q = inf` is the collocation maximum, a lower bound on the true sup);
//! homogeneous norms exclude the mean mode; vector fields enter `L^q` through
//! the pointwise Euclidean magnitude.

use crate::error::{Error, Result};
use crate::field::{inverse_transform_unchecked, PhysicalField, SpectralField, SpectralVectorField};
use crate::littlewood_paley::{band_pass, band_pass_vec, DyadicPartition};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Indices of a homogeneous Besov space `B^s_{p,q}`; `p`, `q` may be
/// `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::Parameter(format!("Besov index s must be finite, got {s}")));
        }
        for (name, v) in [("p", p), ("q", q)] {
            if v < 1.0 || v.is_nan() {
                return Err(Error::Parameter(format!(
                    "Besov index {name} must lie in [1, inf], got {v}"
                )));
            }
        }
        Ok(Self { s, p, q })
    }
}

fn check_lebesgue_exponent(q: f64) -> Result<()> {
    if q < 1.0 || q.is_nan() {
        return Err(Error::Parameter(format!(
            "Lebesgue exponent must lie in [1, inf], got {q}"
        )));
    }
    Ok(())
}

fn lp_of_samples(values: impl Iterator<Item = f64>, q: f64, h3: f64) -> f64 {
    if q.is_infinite() {
        values.fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        let sum: f64 = values.map(|v| v.abs().powf(q)).sum();
        (sum * h3).powf(1.0 / q)
    }
}

/// `(integral |f|^q)^(1/q)` by collocation quadrature; `q = inf` gives the
/// collocation maximum.
pub fn lp_norm(f: &PhysicalField, q: f64) -> Result<f64> {
    check_lebesgue_exponent(q)?;
    let h3 = f.grid().spacing().powi(3);
    Ok(lp_of_samples(f.values().iter().copied(), q, h3))
}

/// `L^q` norm of the pointwise Euclidean magnitude over any number of
/// components (3 for velocities, 9 for gradient tensors).
pub fn lp_norm_components(components: &[PhysicalField], q: f64) -> Result<f64> {
    check_lebesgue_exponent(q)?;
    if components.is_empty() {
        return Err(Error::Parameter("no components".into()));
    }
    let h3 = components[0].grid().spacing().powi(3);
    let m = components[0].values().len();
    let magnitudes = (0..m).map(|idx| {
        components
            .iter()
            .map(|c| {
                let v = c.values().as_slice().expect("standard layout")[idx];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    });
    Ok(lp_of_samples(magnitudes, q, h3))
}

/// `L^q` norm of the pointwise Euclidean magnitude of a vector field.
pub fn lp_norm_vec(components: &[PhysicalField; 3], q: f64) -> Result<f64> {
    lp_norm_components(components, q)
}

/// Homogeneous Sobolev norm `(L^3 sum_{k != 0} |k|^(2s) |f(k)|^2)^(1/2)`;
/// at `s = 0` this matches the `L^2` norm of mean-zero fields (Parseval).
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let grid = f.grid().clone();
    let kx = grid.wavenumber_axis();
    let n = grid.n();
    let flat = f.coeffs().as_slice().expect("standard layout");
    // integer weights cover the hot cases without transcendental calls
    let weight: Box<dyn Fn(f64) -> f64> = if s == 0.0 {
        Box::new(|_| 1.0)
    } else if s == 1.0 {
        Box::new(|k2| k2)
    } else if s == 2.0 {
        Box::new(|k2| k2 * k2)
    } else {
        Box::new(move |k2| k2.powf(s))
    };
    let mut sum = 0.0;
    let mut idx = 0;
    for k1 in kx.iter().take(n) {
        for k2v in kx.iter().take(n) {
            for k3 in kx.iter().take(n) {
                if idx != 0 {
                    let amp = flat[idx].norm_sqr();
                    if amp > 0.0 {
                        let ksq = k1 * k1 + k2v * k2v + k3 * k3;
                        sum += weight(ksq) * amp;
                    }
                }
                idx += 1;
            }
        }
    }
    (sum * grid.volume()).sqrt()
}

pub fn sobolev_norm_vec(u: &SpectralVectorField, s: f64) -> f64 {
    (0..3)
        .map(|c| sobolev_norm(u.component(c), s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Root-sum-of-squares Sobolev norm over arbitrary components.
pub fn sobolev_norm_components(fields: &[SpectralField], s: f64) -> f64 {
    fields
        .iter()
        .map(|f| sobolev_norm(f, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Homogeneous Besov norm: `l^q` over shells of `2^(js) ||Delta_j f||_{L^p}`,
/// each block measured in physical space. The mean mode never enters (the
/// band multipliers vanish at `k = 0`).
pub fn besov_norm(
    f: &SpectralField,
    params: BesovParams,
    partition: &DyadicPartition,
) -> Result<f64> {
    let weights = partition
        .j_range()
        .map(|j| {
            let block = band_pass(f, j, partition);
            let phys = inverse_transform_unchecked(&block.field);
            Ok((2.0_f64).powi(j).powf(params.s) * lp_norm(&phys, params.p)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lq_sequence(&weights, params.q))
}

/// Vector-field Besov norm: blocks taken per component, `L^p` of the
/// pointwise magnitude per shell.
pub fn besov_norm_vec(
    u: &SpectralVectorField,
    params: BesovParams,
    partition: &DyadicPartition,
) -> Result<f64> {
    let weights = partition
        .j_range()
        .map(|j| {
            let block = band_pass_vec(u, j, partition);
            let phys = crate::field::inverse_transform_vec_unchecked(&block);
            Ok((2.0_f64).powi(j).powf(params.s) * lp_norm_vec(&phys, params.p)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(lq_sequence(&weights, params.q))
}

fn lq_sequence(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    } else {
        values
            .iter()
            .map(|v| v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Per-shell `L^inf` norms of the blocks of a multi-component field. From
/// these, `B^s_{inf,inf} = max_j 2^(js) a_j` for any `s` without
/// re-decomposing.
pub fn shell_linf_profile_components(
    fields: &[SpectralField],
    partition: &DyadicPartition,
) -> Vec<(i32, f64)> {
    partition
        .j_range()
        .map(|j| {
            let phys: Vec<PhysicalField> = fields
                .iter()
                .map(|f| {
                    inverse_transform_unchecked(&band_pass(f, j, partition).field)
                })
                .collect();
            let a = lp_norm_components(&phys, f64::INFINITY).expect("inf is a valid exponent");
            (j, a)
        })
        .collect()
}

/// Per-shell `L^inf` norms of the blocks of a vector field.
pub fn shell_linf_profile(
    u: &SpectralVectorField,
    partition: &DyadicPartition,
) -> Vec<(i32, f64)> {
    shell_linf_profile_components(u.components(), partition)
}

/// `B^s_{inf,inf}` from a precomputed shell profile.
pub fn besov_inf_inf_from_profile(profile: &[(i32, f64)], s: f64) -> f64 {
    profile
        .iter()
        .fold(0.0_f64, |m, (j, a)| m.max((2.0_f64).powi(*j).powf(s) * a))
}

/// Outcome of one interpolation-ratio evaluation
/// `R(f) = ||f||_{L^q} / (||f||_{H^(alpha(q/2-1))}^(2/q) ||f||_{B^(-alpha)_{inf,inf}}^(1-2/q))`.
#[derive(Debug, Clone, Serialize)]
pub struct InterpolationReport {
    pub q: f64,
    pub alpha: f64,
    pub lq: f64,
    pub sobolev: f64,
    pub besov: f64,
    pub ratio: f64,
}

fn interpolation_ratio(lq: f64, sobolev: f64, besov: f64, q: f64) -> Result<f64> {
    let denom = sobolev.powf(2.0 / q) * besov.powf(1.0 - 2.0 / q);
    if denom == 0.0 {
        return Err(Error::DegenerateInput(
            "interpolation ratio undefined for vanishing norms".into(),
        ));
    }
    Ok(lq / denom)
}

fn check_interpolation_exponents(q: f64, alpha: f64) -> Result<()> {
    if !(q > 2.0) || !q.is_finite() {
        return Err(Error::Parameter(format!(
            "interpolation requires 2 < q < inf, got q = {q}"
        )));
    }
    if !(alpha > 0.0) {
        return Err(Error::Parameter(format!(
            "interpolation requires alpha > 0, got alpha = {alpha}"
        )));
    }
    Ok(())
}

/// Evaluate the interpolation ratio for a scalar mean-zero field. The
/// inequality asserts `R(f) <= C` for a universal constant; this reports the
/// observed ratio.
pub fn check_interpolation(
    f: &SpectralField,
    q: f64,
    alpha: f64,
    partition: &DyadicPartition,
) -> Result<InterpolationReport> {
    check_interpolation_exponents(q, alpha)?;
    if f.mean().norm() > 1e-12 * f.max_abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Parameter(
            "interpolation ratio requires a mean-zero field".into(),
        ));
    }
    let phys = inverse_transform_unchecked(f);
    let lq = lp_norm(&phys, q)?;
    let s = alpha * (q / 2.0 - 1.0);
    let sobolev = sobolev_norm(f, s);
    let besov = besov_norm(f, BesovParams::new(-alpha, f64::INFINITY, f64::INFINITY)?, partition)?;
    let ratio = interpolation_ratio(lq, sobolev, besov, q)?;
    Ok(InterpolationReport {
        q,
        alpha,
        lq,
        sobolev,
        besov,
        ratio,
    })
}

/// Vector-field version of [`check_interpolation`] (used over corpora of
/// divergence-free fields).
pub fn check_interpolation_vec(
    u: &SpectralVectorField,
    q: f64,
    alpha: f64,
    partition: &DyadicPartition,
) -> Result<InterpolationReport> {
    check_interpolation_exponents(q, alpha)?;
    let phys = crate::field::inverse_transform_vec_unchecked(u);
    let lq = lp_norm_vec(&phys, q)?;
    let s = alpha * (q / 2.0 - 1.0);
    let sobolev = sobolev_norm_vec(u, s);
    let besov = besov_norm_vec(
        u,
        BesovParams::new(-alpha, f64::INFINITY, f64::INFINITY)?,
        partition,
    )?;
    let ratio = interpolation_ratio(lq, sobolev, besov, q)?;
    Ok(InterpolationReport {
        q,
        alpha,
        lq,
        sobolev,
        besov,
        ratio,
    })
}

/// Extras key under which `||u||_{L^q}` is stored in a [`NormReport`].
pub fn lq_key(q: f64) -> String {
    if q.is_infinite() {
        "linf".to_string()
    } else if q == q.trunc() {
        format!("l{}", q as i64)
    } else {
        format!("l{q}")
    }
}

/// All norms of one field at one time. Serializes to a CSV row as
/// `time, l2, grad_l2, lap_l2, besov_m1_inf_inf`, then the extras in key
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub time: f64,
    pub l2: f64,
    pub grad_l2: f64,
    pub lap_l2: f64,
    pub besov_m1_inf_inf: f64,
    pub extras: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn validate(&self) -> Result<()> {
        let mut vals = vec![self.l2, self.grad_l2, self.lap_l2, self.besov_m1_inf_inf];
        vals.extend(self.extras.values());
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter(
                "norm reports must contain finite nonnegative values".into(),
            ));
        }
        Ok(())
    }
}

/// Time-integrated Serrin quantity `(integral_0^T ||u||_{L^q}^p dt)^(1/p)` by
/// the trapezoidal rule over the stored history; `p = inf` takes the sup over
/// samples. The exponents must satisfy `2/p + 3/q = 1` with `3 <= q <= inf`.
pub fn serrin_quantity(history: &[NormReport], p: f64, q: f64) -> Result<f64> {
    let two_over_p = if p.is_infinite() { 0.0 } else { 2.0 / p };
    let three_over_q = if q.is_infinite() { 0.0 } else { 3.0 / q };
    if (two_over_p + three_over_q - 1.0).abs() > 1e-9 || q < 3.0 {
        return Err(Error::Parameter(format!(
            "(p, q) = ({p}, {q}) is off the Serrin line 2/p + 3/q = 1, 3 <= q <= inf"
        )));
    }
    if history.is_empty() {
        return Err(Error::Parameter("empty history".into()));
    }
    let key = lq_key(q);
    let values: Vec<(f64, f64)> = history
        .iter()
        .map(|r| {
            r.extras
                .get(&key)
                .copied()
                .map(|v| (r.time, v))
                .ok_or_else(|| {
                    Error::Parameter(format!("history lacks the '{key}' column for q = {q}"))
                })
        })
        .collect::<Result<_>>()?;
    if values.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Parameter("history must be strictly time-ordered".into()));
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0_f64, |m, (_, v)| m.max(*v)));
    }
    let mut integral = 0.0;
    for w in values.windows(2) {
        let (t0, v0) = w[0];
        let (t1, v1) = w[1];
        integral += 0.5 * (t1 - t0) * (v0.powf(p) + v1.powf(p));
    }
    Ok(integral.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::transform;
    use crate::grid::Grid;
    use crate::littlewood_paley::{build_partition, CutoffProfile};
    use ndarray::Array3;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cosine(grid: &Grid, mode: f64) -> SpectralField {
        transform(&PhysicalField::from_fn(grid.clone(), |x, _, _| {
            (mode * x).cos()
        }))
    }

    fn random_mean_zero(grid: &Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let values = Array3::from_shape_fn((n, n, n), |_| rng.random_range(-1.0..1.0));
        let mut f = transform(&PhysicalField::new(grid.clone(), values).unwrap());
        f.set_mean(num_complex::Complex64::new(0.0, 0.0));
        f
    }

    #[test]
    fn l2_of_cosine_is_analytic() {
        let grid = Grid::cubic(16).unwrap();
        let f = PhysicalField::from_fn(grid, |x, _, _| x.cos());
        // integral of cos^2 over the box is (2 pi)^3 / 2 = 4 pi^3
        let expected = (4.0 * PI.powi(3)).sqrt();
        let got = lp_norm(&f, 2.0).unwrap();
        assert!((got - expected).abs() / expected < 1e-13, "{got} vs {expected}");
    }

    #[test]
    fn linf_of_cosine_is_one() {
        let grid = Grid::cubic(16).unwrap();
        let f = PhysicalField::from_fn(grid, |x, _, _| x.cos());
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn l6_of_cosine_is_analytic() {
        let grid = Grid::cubic(16).unwrap();
        let f = PhysicalField::from_fn(grid, |x, _, _| x.cos());
        // mean of cos^6 is 5/16
        let expected = ((2.0 * PI).powi(3) * 5.0 / 16.0).powf(1.0 / 6.0);
        let got = lp_norm(&f, 6.0).unwrap();
        assert!((got - expected).abs() / expected < 1e-13);
    }

    #[test]
    fn lq_below_one_is_rejected() {
        let grid = Grid::cubic(8).unwrap();
        let f = PhysicalField::zeros(grid);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn sobolev_of_unit_shell_equals_l2_for_any_s() {
        let grid = Grid::cubic(16).unwrap();
        let f = cosine(&grid, 1.0);
        let l2 = f.l2_norm();
        for s in [-1.5, -1.0, 0.0, 0.5, 2.0] {
            let hs = sobolev_norm(&f, s);
            assert!((hs - l2).abs() / l2 < 1e-13, "s = {s}");
        }
    }

    #[test]
    fn sobolev_scaling_on_second_shell() {
        let grid = Grid::cubic(16).unwrap();
        let f = cosine(&grid, 2.0);
        let l2 = f.l2_norm();
        let h1 = sobolev_norm(&f, 1.0);
        assert!((h1 - 2.0 * l2).abs() / l2 < 1e-13);
    }

    #[test]
    fn sobolev_zero_matches_l2_parseval() {
        let grid = Grid::cubic(16).unwrap();
        let f = random_mean_zero(&grid, 17);
        let phys = crate::field::inverse_transform(&f).unwrap();
        let l2 = lp_norm(&phys, 2.0).unwrap();
        let h0 = sobolev_norm(&f, 0.0);
        assert!((l2 - h0).abs() / l2 < 1e-12);
    }

    #[test]
    fn besov_of_cosine_shells() {
        let grid = Grid::cubic(32).unwrap();
        let p = build_partition(&grid, CutoffProfile::Box).unwrap();
        let params = BesovParams::new(-1.0, f64::INFINITY, f64::INFINITY).unwrap();
        for jj in 0..=3 {
            let f = cosine(&grid, (2.0_f64).powi(jj));
            let b = besov_norm(&f, params, &p).unwrap();
            let expected = (2.0_f64).powi(-jj);
            assert!((b - expected).abs() <= 1e-13, "J = {jj}: {b} vs {expected}");
        }
    }

    #[test]
    fn besov_of_zero_is_zero() {
        let grid = Grid::cubic(8).unwrap();
        let p = build_partition(&grid, CutoffProfile::SmoothRamp).unwrap();
        let params = BesovParams::new(-1.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert_eq!(besov_norm(&SpectralField::zeros(grid), params, &p).unwrap(), 0.0);
    }

    #[test]
    fn besov_022_box_equals_sobolev_zero() {
        let grid = Grid::cubic(16).unwrap();
        let p = build_partition(&grid, CutoffProfile::Box).unwrap();
        let f = random_mean_zero(&grid, 23);
        let b = besov_norm(&f, BesovParams::new(0.0, 2.0, 2.0).unwrap(), &p).unwrap();
        let h0 = sobolev_norm(&f, 0.0);
        assert!((b - h0).abs() / h0 < 1e-12, "{b} vs {h0}");
    }

    #[test]
    fn interpolation_ratio_of_cosine_is_analytic() {
        // every factor is known in closed form for the single-mode field:
        // L6 = ((2 pi)^3 5/16)^(1/6), H-factor = (4 pi^3)^(1/2) raised to 2/q,
        // Besov factor = 1
        let grid = Grid::cubic(32).unwrap();
        let p = build_partition(&grid, CutoffProfile::Box).unwrap();
        let f = cosine(&grid, 1.0);
        let report = check_interpolation(&f, 6.0, 1.0, &p).unwrap();
        let expected = ((2.0 * PI).powi(3) * 5.0 / 16.0).powf(1.0 / 6.0)
            / (4.0 * PI.powi(3)).sqrt().powf(1.0 / 3.0);
        assert!(
            (report.ratio - expected).abs() < 1e-10,
            "{} vs {expected}",
            report.ratio
        );
    }

    #[test]
    fn interpolation_ratio_is_scale_invariant() {
        let grid = Grid::cubic(16).unwrap();
        let p = build_partition(&grid, CutoffProfile::SmoothRamp).unwrap();
        let f = random_mean_zero(&grid, 31);
        let base = check_interpolation(&f, 6.0, 1.0, &p).unwrap().ratio;
        for lambda in [2.0, 0.5, 7.25] {
            let scaled = f.scaled(lambda);
            let r = check_interpolation(&scaled, 6.0, 1.0, &p).unwrap().ratio;
            assert!((r - base).abs() / base < 1e-12, "lambda = {lambda}");
        }
    }

    #[test]
    fn interpolation_parameter_errors() {
        let grid = Grid::cubic(8).unwrap();
        let p = build_partition(&grid, CutoffProfile::Box).unwrap();
        let f = cosine(&grid, 1.0);
        assert!(matches!(
            check_interpolation(&f, 2.0, 1.0, &p),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            check_interpolation(&f, f64::INFINITY, 1.0, &p),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            check_interpolation(&f, 6.0, 0.0, &p),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            check_interpolation(&SpectralField::zeros(grid), 6.0, 1.0, &p),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn serrin_constant_history() {
        let mut history = Vec::new();
        for i in 0..=10 {
            let mut extras = BTreeMap::new();
            extras.insert("l6".to_string(), 2.5);
            history.push(NormReport {
                time: i as f64 * 0.1,
                l2: 0.0,
                grad_l2: 0.0,
                lap_l2: 0.0,
                besov_m1_inf_inf: 0.0,
                extras,
            });
        }
        let s = serrin_quantity(&history, 4.0, 6.0).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        // zero field
        for r in &mut history {
            r.extras.insert("l6".to_string(), 0.0);
        }
        assert_eq!(serrin_quantity(&history, 4.0, 6.0).unwrap(), 0.0);
    }

    #[test]
    fn serrin_taylor_green_decay() {
        // ||u(t)||_L6 = e^{-2t} ||u0||_L6 ; p = 4, q = 6 gives
        // ||u0||_L6 ((1 - e^{-8T}) / 8)^(1/4)
        let u0_l6 = 1.7;
        let t_end = 1.0;
        let dt = 1e-3;
        let steps = (t_end / dt) as usize;
        let history: Vec<NormReport> = (0..=steps)
            .map(|i| {
                let t = i as f64 * dt;
                let mut extras = BTreeMap::new();
                extras.insert("l6".to_string(), u0_l6 * (-2.0 * t).exp());
                NormReport {
                    time: t,
                    l2: 0.0,
                    grad_l2: 0.0,
                    lap_l2: 0.0,
                    besov_m1_inf_inf: 0.0,
                    extras,
                }
            })
            .collect();
        let s = serrin_quantity(&history, 4.0, 6.0).unwrap();
        let expected = u0_l6 * ((1.0 - (-8.0_f64 * t_end).exp()) / 8.0).powf(0.25);
        assert!((s - expected).abs() / expected < 1e-4, "{s} vs {expected}");
    }

    #[test]
    fn serrin_sup_in_time() {
        let history: Vec<NormReport> = (0..=5)
            .map(|i| {
                let mut extras = BTreeMap::new();
                extras.insert("l3".to_string(), (i as f64 - 2.0).abs());
                NormReport {
                    time: i as f64,
                    l2: 0.0,
                    grad_l2: 0.0,
                    lap_l2: 0.0,
                    besov_m1_inf_inf: 0.0,
                    extras,
                }
            })
            .collect();
        let s = serrin_quantity(&history, f64::INFINITY, 3.0).unwrap();
        assert_eq!(s, 3.0);
    }

    #[test]
    fn serrin_rejects_off_line_exponents() {
        let history = vec![NormReport {
            time: 0.0,
            l2: 0.0,
            grad_l2: 0.0,
            lap_l2: 0.0,
            besov_m1_inf_inf: 0.0,
            extras: BTreeMap::new(),
        }];
        assert!(matches!(
            serrin_quantity(&history, 4.0, 5.0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            serrin_quantity(&history, 2.0, f64::INFINITY),
            Err(Error::Parameter(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(6))]
        #[test]
        fn norms_are_absolutely_homogeneous(seed in 0u64..500, idx in 0usize..3) {
            let lambda = [2.0, 0.5, -1.0][idx];
            let grid = Grid::cubic(8).unwrap();
            let p = build_partition(&grid, CutoffProfile::SmoothRamp).unwrap();
            let f = random_mean_zero(&grid, seed);
            let scaled = f.scaled(lambda);

            let phys = crate::field::inverse_transform(&f).unwrap();
            let phys_scaled = crate::field::inverse_transform(&scaled).unwrap();
            for q in [1.0, 2.0, 6.0, f64::INFINITY] {
                let a = lp_norm(&phys, q).unwrap();
                let b = lp_norm(&phys_scaled, q).unwrap();
                prop_assert!((b - lambda.abs() * a).abs() <= 1e-12 * a.max(1.0));
            }
            for s in [-1.0, 0.0, 1.5] {
                let a = sobolev_norm(&f, s);
                let b = sobolev_norm(&scaled, s);
                prop_assert!((b - lambda.abs() * a).abs() <= 1e-12 * a.max(1.0));
            }
            let params = BesovParams::new(-1.0, f64::INFINITY, f64::INFINITY).unwrap();
            let a = besov_norm(&f, params, &p).unwrap();
            let b = besov_norm(&scaled, params, &p).unwrap();
            prop_assert!((b - lambda.abs() * a).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
