//! Dyadic partition of unity on the frequency lattice and the projection
//! operators `S_j` (low-pass) and `Delta_j` (band-pass).
//!
//! The cutoff profile `phi(r)` equals 1 for `r <= 1` and 0 for `r >= 2`; the
//! band multiplier is `psi_j(k) = phi(|k|/2^j) - phi(|k|/2^(j-1))`, so summing
//! bands over the grid's dyadic range telescopes to 1 at every nonzero lattice
//! point. On the torus the mean mode sits below every band and is handled
//! outside the decomposition.

use crate::error::{Error, Result};
use crate::field::{SpectralField, SpectralVectorField};
use crate::grid::Grid;
use std::fmt;
use std::sync::Arc;

/// Radial cutoff profile choice. `Box` is the sharp indicator of `r <= 1`
/// (exact dyadic annuli); `SmoothRamp` is a C^2 quintic ramp on `[1, 2]`.
#[derive(Clone)]
pub enum CutoffProfile {
    Box,
    SmoothRamp,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl CutoffProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            CutoffProfile::Box => {
                if r <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffProfile::SmoothRamp => {
                if r <= 1.0 {
                    1.0
                } else if r >= 2.0 {
                    0.0
                } else {
                    let t = r - 1.0;
                    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
                }
            }
            CutoffProfile::Custom(f) => f(r),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CutoffProfile::Box => "box",
            CutoffProfile::SmoothRamp => "smooth",
            CutoffProfile::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for CutoffProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Validated dyadic range and profile for one grid.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    profile: CutoffProfile,
    j_min: i32,
    j_max: i32,
    /// `|k|` over the lattice in flat standard-layout order.
    k_abs: std::sync::Arc<Vec<f64>>,
}

/// One band-passed piece `Delta_j f`; coefficients vanish outside the annulus
/// `2^(j-1) <= |k| <= 2^(j+1)`.
#[derive(Debug, Clone)]
pub struct DyadicBlock {
    pub j: i32,
    pub field: SpectralField,
}

const PROFILE_TOL: f64 = 1e-12;

fn validate_profile(profile: &CutoffProfile) -> Result<()> {
    let samples = 2048;
    let mut prev = f64::INFINITY;
    for i in 0..=samples {
        let r = 4.0 * i as f64 / samples as f64;
        let v = profile.eval(r);
        if !((-PROFILE_TOL..=1.0 + PROFILE_TOL).contains(&v)) {
            return Err(Error::InvalidProfile(format!(
                "value {v} at r = {r} outside [0, 1]"
            )));
        }
        if r <= 1.0 && (v - 1.0).abs() > PROFILE_TOL {
            return Err(Error::InvalidProfile(format!(
                "must equal 1 for r <= 1, got {v} at r = {r}"
            )));
        }
        if r >= 2.0 && v.abs() > PROFILE_TOL {
            return Err(Error::InvalidProfile(format!(
                "must vanish for r >= 2, got {v} at r = {r}"
            )));
        }
        if v > prev + PROFILE_TOL {
            return Err(Error::InvalidProfile(format!(
                "not nonincreasing near r = {r}"
            )));
        }
        prev = v;
    }
    Ok(())
}

/// Build the partition for a grid: `j_min` sits at the smallest nonzero `|k|`,
/// `j_max` is the smallest index with `2^(j_max - 1)` above the largest
/// resolved `|k|`.
pub fn build_partition(grid: &Grid, profile: CutoffProfile) -> Result<DyadicPartition> {
    validate_profile(&profile)?;
    let k_min = grid.min_nonzero_wavenumber();
    let k_max = grid.max_wavenumber();
    let j_min = k_min.log2().floor() as i32;
    let j_max = k_max.log2().ceil() as i32 + 1;
    let kx = grid.wavenumber_axis();
    let n = grid.n();
    let mut k_abs = Vec::with_capacity(n * n * n);
    for k1 in &kx {
        for k2 in &kx {
            for k3 in &kx {
                k_abs.push((k1 * k1 + k2 * k2 + k3 * k3).sqrt());
            }
        }
    }
    Ok(DyadicPartition {
        grid: grid.clone(),
        profile,
        j_min,
        j_max,
        k_abs: std::sync::Arc::new(k_abs),
    })
}

impl DyadicPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn profile(&self) -> &CutoffProfile {
        &self.profile
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn j_range(&self) -> impl Iterator<Item = i32> {
        self.j_min..=self.j_max
    }

    /// Low-pass multiplier `phi(|k| / 2^j)`.
    pub fn phi_hat(&self, k_abs: f64, j: i32) -> f64 {
        self.profile.eval(k_abs / (2.0_f64).powi(j))
    }

    /// Band multiplier `psi_j(|k|) = phi(|k|/2^j) - phi(|k|/2^(j-1))`.
    pub fn psi_hat(&self, k_abs: f64, j: i32) -> f64 {
        self.phi_hat(k_abs, j) - self.phi_hat(k_abs, j - 1)
    }
}

fn apply_radial_multiplier(
    f: &SpectralField,
    partition: &DyadicPartition,
    mult: impl Fn(f64) -> f64,
) -> SpectralField {
    assert_eq!(
        f.grid(),
        partition.grid(),
        "partition was built for a different grid"
    );
    let mut out = f.clone();
    let flat = out.coeffs_mut().as_slice_mut().expect("standard layout");
    for (c, k_abs) in flat.iter_mut().zip(partition.k_abs.iter()) {
        *c *= mult(*k_abs);
    }
    out
}

/// Low-pass operator: coefficients scaled by `phi(|k| / 2^j)`. For `j` at or
/// above `j_max` this is the identity; far below `j_min` only the mean
/// survives (the torus replacement for decay to zero).
pub fn low_pass(f: &SpectralField, j: i32, partition: &DyadicPartition) -> SpectralField {
    apply_radial_multiplier(f, partition, |k_abs| partition.phi_hat(k_abs, j))
}

/// Band-pass operator, materialized as the low-pass difference so the
/// identity `Delta_j = S_j - S_(j-1)` is structural.
pub fn band_pass(f: &SpectralField, j: i32, partition: &DyadicPartition) -> DyadicBlock {
    let field = &low_pass(f, j, partition) - &low_pass(f, j - 1, partition);
    DyadicBlock { j, field }
}

/// All blocks for `j = j_min ..= j_max`.
pub fn decompose(f: &SpectralField, partition: &DyadicPartition) -> Vec<DyadicBlock> {
    partition
        .j_range()
        .map(|j| band_pass(f, j, partition))
        .collect()
}

/// Sum of blocks; together with the mean mode this reconstructs the field.
pub fn reconstruct(blocks: &[DyadicBlock]) -> Option<SpectralField> {
    let mut iter = blocks.iter();
    let first = iter.next()?;
    let mut acc = first.field.clone();
    for b in iter {
        acc = &acc + &b.field;
    }
    Some(acc)
}

/// Band-pass every component of a vector field at one shell.
pub fn band_pass_vec(
    u: &SpectralVectorField,
    j: i32,
    partition: &DyadicPartition,
) -> SpectralVectorField {
    SpectralVectorField::new([
        band_pass(u.component(0), j, partition).field,
        band_pass(u.component(1), j, partition).field,
        band_pass(u.component(2), j, partition).field,
    ])
    .expect("components share a grid")
}
