//! Pseudospectral time integration of the incompressible momentum equation
//! `u_t + (u.grad)u - nu lap(u) + grad(pi) = 0` on the torus, plus energy and
//! enstrophy budget diagnostics.
//!
//! The pressure gradient never appears explicitly: the nonlinear term is
//! Leray-projected each evaluation. Time stepping is integrating-factor RK4,
//! so the viscous semigroup `e^{-nu |k|^2 t}` is applied exactly and only the
//! projected convective term is treated explicitly.

use crate::error::{Error, Result};
use crate::field::{inverse_transform_unchecked, SpectralVectorField};
use crate::grid::Grid;
use crate::norms::NormReport;
use crate::ops::{
    convective_physical, convective_term_with_speed, grad_sq_norm, laplacian, leray_project,
    two_thirds_mask_vec,
};
use ndarray::{Array3, Zip};
use serde::{Deserialize, Serialize};

/// Dealiasing rule applied to the convective product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dealias {
    /// Zero modes with `|k_i| > n/3` on any axis (alias-free quadratic products).
    TwoThirds,
    None,
}

impl Dealias {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "two_thirds" => Ok(Dealias::TwoThirds),
            "none" => Ok(Dealias::None),
            other => Err(Error::Parameter(format!(
                "unknown dealias rule '{other}' (expected two_thirds or none)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dealias::TwoThirds => "two_thirds",
            Dealias::None => "none",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    pub viscosity: f64,
    pub dealias: Dealias,
    /// Steps between diagnostic samples.
    pub diag_every: usize,
    /// Blow-up trigger: `||grad u||^2` exceeding this multiple of its initial value.
    pub max_enstrophy_growth: f64,
    /// CFL constant in `dt <= cfl_safety * h / max|u|`.
    pub cfl_safety: f64,
}

impl SolverConfig {
    pub fn new(grid: Grid, dt: f64, t_end: f64, viscosity: f64) -> Result<Self> {
        let cfg = Self {
            grid,
            dt,
            t_end,
            viscosity,
            dealias: Dealias::TwoThirds,
            diag_every: 10,
            max_enstrophy_growth: 1e8,
            cfl_safety: 0.5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Parameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.viscosity > 0.0) {
            return Err(Error::Parameter(format!(
                "viscosity must be positive, got {}",
                self.viscosity
            )));
        }
        if self.diag_every == 0 {
            return Err(Error::Parameter("diag_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end` (the final partial step is dropped;
    /// choose `t_end` divisible by `dt` for exact landings).
    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt + 0.5).floor() as usize
    }
}

/// Velocity state of one run: divergence-free, mean-zero spectral field.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub u: SpectralVectorField,
    pub step_count: u64,
    initial_grad_sq: f64,
}

impl SolverState {
    pub fn new(mut u: SpectralVectorField) -> Result<Self> {
        u.set_mean_zero();
        let div = u.divergence_deviation();
        if div > 1e-10 {
            return Err(Error::Parameter(format!(
                "initial field is not divergence-free (deviation {div:.3e})"
            )));
        }
        let initial_grad_sq = grad_sq_norm(&u);
        Ok(Self {
            t: 0.0,
            u,
            step_count: 0,
            initial_grad_sq,
        })
    }

    pub fn initial_grad_sq(&self) -> f64 {
        self.initial_grad_sq
    }
}

/// Dealiased pseudospectral convection `(u.grad)u`: products formed pointwise
/// in physical space, transformed back, then masked.
pub fn advection(u: &SpectralVectorField, dealias: Dealias) -> SpectralVectorField {
    advection_with_speed(u, dealias).0
}

fn advection_with_speed(u: &SpectralVectorField, dealias: Dealias) -> (SpectralVectorField, f64) {
    let (mut conv, speed) = convective_term_with_speed(u);
    if dealias == Dealias::TwoThirds {
        two_thirds_mask_vec(&mut conv);
    }
    (conv, speed)
}

fn viscous_multiplier(grid: &Grid, factor: f64) -> Array3<f64> {
    let kx = grid.wavenumber_axis();
    let n = grid.n();
    Array3::from_shape_fn((n, n, n), |(i, j, l)| {
        let k2 = kx[i] * kx[i] + kx[j] * kx[j] + kx[l] * kx[l];
        (factor * k2).exp()
    })
}

fn apply_multiplier(u: &SpectralVectorField, m: &Array3<f64>) -> SpectralVectorField {
    let mut out = u.clone();
    for c in 0..3 {
        Zip::from(out.component_mut(c).coeffs_mut())
            .and(m)
            .for_each(|v, s| *v *= *s);
    }
    out
}

/// `a + s * b`
fn add_scaled(a: &SpectralVectorField, b: &SpectralVectorField, s: f64) -> SpectralVectorField {
    let mut out = a.clone();
    for c in 0..3 {
        Zip::from(out.component_mut(c).coeffs_mut())
            .and(b.component(c).coeffs())
            .for_each(|v, w| *v += *w * s);
    }
    out
}

/// Reusable stepper holding the precomputed viscous propagators for one
/// `(grid, viscosity, dt)` triple.
pub struct Stepper {
    cfg: SolverConfig,
    e_full: Array3<f64>,
    e_half: Array3<f64>,
}

impl Stepper {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let e_full = viscous_multiplier(&cfg.grid, -cfg.viscosity * cfg.dt);
        let e_half = viscous_multiplier(&cfg.grid, -cfg.viscosity * cfg.dt / 2.0);
        Ok(Self { cfg, e_full, e_half })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Projected nonlinear right-hand side `-P[dealias[(u.grad)u]]` and the
    /// collocation max speed of `u`.
    fn rhs(&self, u: &SpectralVectorField) -> (SpectralVectorField, f64) {
        let (conv, speed) = advection_with_speed(u, self.cfg.dealias);
        let mut n = leray_project(&conv).scaled(-1.0);
        n.set_mean_zero();
        (n, speed)
    }

    /// Advance one step of integrating-factor RK4. The viscous factor is
    /// exact; CFL violations and blow-up are reported as errors, the latter
    /// carrying the last valid state.
    pub fn step(&self, state: &SolverState) -> Result<SolverState> {
        let dt = self.cfg.dt;
        let (n1, speed) = self.rhs(&state.u);
        if speed > 0.0 {
            let limit = self.cfg.cfl_safety * self.cfg.grid.spacing() / speed;
            if dt > limit {
                return Err(Error::CflViolation {
                    t: state.t,
                    dt,
                    limit,
                });
            }
        }

        let u2 = apply_multiplier(&add_scaled(&state.u, &n1, dt / 2.0), &self.e_half);
        let (n2, _) = self.rhs(&u2);
        let u3 = add_scaled(&apply_multiplier(&state.u, &self.e_half), &n2, dt / 2.0);
        let (n3, _) = self.rhs(&u3);
        let u4 = add_scaled(
            &apply_multiplier(&state.u, &self.e_full),
            &apply_multiplier(&n3, &self.e_half),
            dt,
        );
        let (n4, _) = self.rhs(&u4);

        // u_{n+1} = E u_n + dt/6 (E n1 + 2 E_half (n2 + n3) + n4)
        let mut next = apply_multiplier(&state.u, &self.e_full);
        next = add_scaled(&next, &apply_multiplier(&n1, &self.e_full), dt / 6.0);
        let mid = add_scaled(&n2, &n3, 1.0);
        next = add_scaled(&next, &apply_multiplier(&mid, &self.e_half), dt / 3.0);
        next = add_scaled(&next, &n4, dt / 6.0);
        next.set_mean_zero();

        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: state.t + dt,
                reason: "non-finite values in the velocity field".into(),
                last_good: Box::new(state.clone()),
            });
        }
        if state.initial_grad_sq > 0.0 {
            let grad_sq = grad_sq_norm(&next);
            if grad_sq > self.cfg.max_enstrophy_growth * state.initial_grad_sq {
                return Err(Error::BlowUp {
                    t: state.t + dt,
                    reason: format!(
                        "enstrophy grew {:.3e}x beyond its initial value",
                        grad_sq / state.initial_grad_sq
                    ),
                    last_good: Box::new(state.clone()),
                });
            }
        }

        Ok(SolverState {
            t: state.t + dt,
            u: next,
            step_count: state.step_count + 1,
            initial_grad_sq: state.initial_grad_sq,
        })
    }
}

/// One-shot step; builds the propagators on the fly. Prefer [`Stepper`] in loops.
pub fn step(state: &SolverState, cfg: &SolverConfig) -> Result<SolverState> {
    Stepper::new(cfg.clone())?.step(state)
}

/// The nonlinear enstrophy production `I = integral (u.grad)u . lap(u) dx` by
/// collocation quadrature. No dealiasing enters this diagnostic.
pub fn nonlinear_integral_i(u: &SpectralVectorField) -> f64 {
    let (conv, _) = convective_physical(u);
    let lap: Vec<_> = (0..3)
        .map(|c| inverse_transform_unchecked(&laplacian(u.component(c))))
        .collect();
    let h3 = u.grid().spacing().powi(3);
    let mut sum = 0.0;
    for c in 0..3 {
        sum += conv[c]
            .iter()
            .zip(lap[c].values().iter())
            .map(|(a, b)| a * b)
            .sum::<f64>();
    }
    sum * h3
}

/// One row of the enstrophy balance `d/dt (1/2 ||grad u||^2) + nu ||lap u||^2 = I`.
#[derive(Debug, Clone, Serialize)]
pub struct EnstrophyBalanceRow {
    pub time: f64,
    /// `d/dt (1/2 ||grad u||^2) + nu ||lap u||^2`, time derivative by finite
    /// differences over the sample grid.
    pub lhs: f64,
    /// The recorded nonlinear integral `I`.
    pub rhs: f64,
    pub residual: f64,
}

/// Finite-difference first derivative of uniformly sampled data. Five or more
/// samples use fourth-order five-point stencils (one-sided at the edges);
/// shorter histories fall back to second order.
fn fd_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let m = values.len();
    let mut out = vec![0.0; m];
    if m >= 5 {
        // rows: stencil evaluated at node r of a five-point window
        const W: [[f64; 5]; 5] = [
            [-25.0, 48.0, -36.0, 16.0, -3.0],
            [-3.0, -10.0, 18.0, -6.0, 1.0],
            [1.0, -8.0, 0.0, 8.0, -1.0],
            [-1.0, 6.0, -18.0, 10.0, 3.0],
            [3.0, -16.0, 36.0, -48.0, 25.0],
        ];
        for i in 0..m {
            let w0 = i.saturating_sub(2).min(m - 5);
            let r = i - w0;
            let mut acc = 0.0;
            for (c, w) in W[r].iter().enumerate() {
                acc += w * values[w0 + c];
            }
            out[i] = acc / (12.0 * dt);
        }
    } else if m >= 3 {
        for i in 0..m {
            out[i] = if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
            } else if i == m - 1 {
                (values[m - 3] - 4.0 * values[m - 2] + 3.0 * values[m - 1]) / (2.0 * dt)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * dt)
            };
        }
    } else {
        let slope = (values[1] - values[0]) / dt;
        out[0] = slope;
        out[1] = slope;
    }
    out
}

/// Cumulative integral of uniformly sampled data by the trapezoidal rule
/// with the Euler-Maclaurin endpoint correction `-(dt^2/12)(g'(t) - g'(0))`,
/// the derivatives taken from [`fd_derivative`]. Fourth-order accurate at
/// every sample, not just pair boundaries.
pub(crate) fn corrected_cumulative_integral(values: &[f64], dt: f64) -> Vec<f64> {
    let m = values.len();
    let mut out = vec![0.0; m];
    if m < 2 {
        return out;
    }
    let deriv = fd_derivative(values, dt);
    let mut trapz = 0.0;
    for i in 1..m {
        trapz += 0.5 * dt * (values[i - 1] + values[i]);
        out[i] = trapz - dt * dt / 12.0 * (deriv[i] - deriv[0]);
    }
    out
}

/// Enstrophy balance over a uniformly sampled history. `nonlinear_i[i]` must
/// be `I` evaluated at the same instant as `reports[i]`.
pub fn enstrophy_balance(
    reports: &[NormReport],
    nonlinear_i: &[f64],
    viscosity: f64,
) -> Result<Vec<EnstrophyBalanceRow>> {
    if reports.len() < 2 {
        return Err(Error::Parameter(
            "enstrophy balance needs at least two diagnostic samples".into(),
        ));
    }
    if reports.len() != nonlinear_i.len() {
        return Err(Error::Parameter(
            "history and nonlinear-integral series differ in length".into(),
        ));
    }
    let dt = reports[1].time - reports[0].time;
    if dt <= 0.0 {
        return Err(Error::Parameter("history must be time-ordered".into()));
    }
    let uniform = reports
        .windows(2)
        .all(|w| ((w[1].time - w[0].time) - dt).abs() <= 1e-9 * dt.abs());
    if !uniform {
        return Err(Error::Parameter(
            "enstrophy balance expects uniformly spaced samples".into(),
        ));
    }
    let half_grad_sq: Vec<f64> = reports.iter().map(|r| 0.5 * r.grad_l2.powi(2)).collect();
    let ddt = fd_derivative(&half_grad_sq, dt);
    Ok(reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let lhs = ddt[i] + viscosity * r.lap_l2.powi(2);
            let rhs = nonlinear_i[i];
            EnstrophyBalanceRow {
                time: r.time,
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            }
        })
        .collect())
}

/// One row of the kinetic-energy ledger.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub time: f64,
    pub l2_sq: f64,
    /// `2 integral_0^t ||grad u||^2 ds` accumulated by the trapezoidal rule.
    pub dissipation_integral: f64,
    /// `||u(t)||^2 + 2 int_0^t ||grad u||^2 - ||u0||^2`; nonpositive up to
    /// discretization error when the energy inequality holds.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyLedger {
    pub rows: Vec<EnergyRow>,
    /// Indices where the residual exceeds `tolerance` (inequality violated).
    pub flagged: Vec<usize>,
    pub tolerance: f64,
}

/// Energy bookkeeping for `||u(t)||^2 + 2 int_0^t ||grad u||^2 <= ||u0||^2`.
/// `u0_l2` is the initial L2 norm; the violation tolerance is `1e-6 ||u0||^2`.
pub fn energy_ledger(reports: &[NormReport], u0_l2: f64) -> EnergyLedger {
    let tolerance = 1e-6 * u0_l2.powi(2);
    let mut rows = Vec::with_capacity(reports.len());
    let mut flagged = Vec::new();
    let mut integral = 0.0;
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            let prev = &reports[i - 1];
            integral += (r.time - prev.time) * (prev.grad_l2.powi(2) + r.grad_l2.powi(2));
            // trapezoid of 2 ||grad u||^2: the factor 2 and the 1/2 cancel
        }
        let residual = r.l2.powi(2) + integral - u0_l2.powi(2);
        if residual > tolerance {
            flagged.push(i);
        }
        rows.push(EnergyRow {
            time: r.time,
            l2_sq: r.l2.powi(2),
            dissipation_integral: integral,
            residual,
        });
    }
    EnergyLedger {
        rows,
        flagged,
        tolerance,
    }
}
