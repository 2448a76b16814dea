//! Pseudospectral incompressible Navier-Stokes toolkit on the periodic box,
//! with Littlewood-Paley decomposition, homogeneous Sobolev/Besov norms, and
//! diagnostics for the smallness regularity criterion on the velocity's
//! `B^{-1}_{inf,inf}` norm.
//!
//! The domain is the torus `[0, box_length)^3`; all homogeneous norms exclude
//! the mean mode, and the solver restricts to mean-zero, divergence-free data.

use mimalloc::MiMalloc;

// spectral kernels churn through ~0.5 MB buffers; the stock allocator's
// mmap round-trips double the step time, a pooling allocator does not
#[global_allocator]
static GLOBAL: MiMalloc = MiMalloc;

pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod harness;
pub mod littlewood_paley;
pub mod norms;
pub mod ops;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
pub use field::{
    inverse_transform, inverse_transform_vec, transform, transform_vec, PhysicalField,
    SpectralField, SpectralVectorField,
};
pub use grid::Grid;
pub use harness::{
    build_corpus, estimate_constant, exponent_audit, make_initial, run_experiment, sweep,
    ConstantEstimate, CorpusField, CorpusSpec, CriterionVerdict, DiagRow, ExponentAudit,
    InitialCondition, RunRecord, SweepEntry, SweepOutcome, SweepRow,
};
pub use littlewood_paley::{
    band_pass, build_partition, decompose, low_pass, CutoffProfile, DyadicBlock, DyadicPartition,
};
pub use norms::{
    besov_norm, besov_norm_vec, check_interpolation, lp_norm, lp_norm_vec, serrin_quantity,
    sobolev_norm, sobolev_norm_vec, BesovParams, NormReport,
};
pub use ops::{
    convective_term, derivative, divergence, gradient, laplacian, laplacian_vec, leray_project,
    pressure_from,
};
pub use solver::{
    advection, energy_ledger, enstrophy_balance, nonlinear_integral_i, step, Dealias, EnergyLedger,
    SolverConfig, SolverState, Stepper,
};
