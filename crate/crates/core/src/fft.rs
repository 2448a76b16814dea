//! Cached 3D FFTs built from 1D rustfft/realfft plans.
//!
//! Each axis pass permutes the array so the target axis is contiguous, then
//! runs one batched FFT call over all lanes; three passes compose to a cyclic
//! permutation that restores the original layout. Real fields additionally
//! take the half-spectrum route along the last axis, which roughly halves
//! the transform work.

use ndarray::Array3;
use num_complex::Complex64;
use once_cell::sync::Lazy;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

type Plan = Arc<dyn Fft<f64>>;

struct Plans {
    fwd: Plan,
    inv: Plan,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

static PLANS: Lazy<Mutex<HashMap<usize, Arc<Plans>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans(n: usize) -> Arc<Plans> {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            let mut real_planner = RealFftPlanner::new();
            Arc::new(Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
                r2c: real_planner.plan_fft_forward(n),
                c2r: real_planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

struct Workspace {
    half: Vec<Complex64>,
    perm: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

thread_local! {
    static WORKSPACE: RefCell<HashMap<usize, Workspace>> = RefCell::new(HashMap::new());
}

fn with_workspace<R>(n: usize, plans: &Plans, f: impl FnOnce(&mut Workspace) -> R) -> R {
    WORKSPACE.with(|ws| {
        let mut ws = ws.borrow_mut();
        let entry = ws.entry(n).or_insert_with(|| {
            let zero = Complex64::new(0.0, 0.0);
            let m = n / 2 + 1;
            let scratch_len = plans
                .fwd
                .get_inplace_scratch_len()
                .max(plans.inv.get_inplace_scratch_len())
                .max(plans.r2c.get_scratch_len())
                .max(plans.c2r.get_scratch_len());
            Workspace {
                half: vec![zero; n * n * m],
                perm: vec![zero; n * n * m.max(n)],
                scratch: vec![zero; scratch_len],
            }
        });
        f(entry)
    })
}

/// `dst[c, a, b] = src[a, b, c]` for shape `(d0, d1, d2)`; `dst` has shape
/// `(d2, d0, d1)`. Applying the permutation three times is the identity.
fn permute_last_to_front(src: &[Complex64], dst: &mut [Complex64], d0: usize, d1: usize, d2: usize) {
    for a in 0..d0 {
        for b in 0..d1 {
            let src_base = (a * d1 + b) * d2;
            let dst_base = a * d1 + b;
            for c in 0..d2 {
                dst[c * d0 * d1 + dst_base] = src[src_base + c];
            }
        }
    }
}

/// In-place unnormalized 3D complex DFT over a cubic array. `forward` uses
/// the `e^{-i k x}` convention; the inverse leaves a factor `n^3`.
pub(crate) fn fft3_inplace(data: &mut Array3<Complex64>, forward: bool) {
    let (n0, n1, n2) = data.dim();
    assert!(n0 == n1 && n1 == n2, "cubic arrays only");
    let n = n0;
    let plans = plans(n);
    let fft = if forward {
        plans.fwd.clone()
    } else {
        plans.inv.clone()
    };
    with_workspace(n, &plans, |ws| {
        let slice = data.as_slice_mut().expect("standard layout");
        let buf = &mut ws.perm[..n * n * n];
        // pass 1: axis 2 contiguous
        fft.process_with_scratch(slice, &mut ws.scratch);
        // pass 2: permute so axis 1 is contiguous, transform
        permute_last_to_front(slice, buf, n, n, n);
        fft.process_with_scratch(buf, &mut ws.scratch);
        // pass 3: permute so axis 0 is contiguous, transform
        permute_last_to_front(buf, slice, n, n, n);
        fft.process_with_scratch(slice, &mut ws.scratch);
        // third permutation restores the original axis order
        permute_last_to_front(slice, buf, n, n, n);
        slice.copy_from_slice(buf);
    });
}

/// Forward DFT of a real cube into the full (Hermitian-redundant) complex
/// cube, unnormalized: half-spectrum r2c along the last axis, complex passes
/// over the remaining axes, then mirror expansion.
pub(crate) fn forward_real(values: &Array3<f64>) -> Array3<Complex64> {
    let (n0, n1, n2) = values.dim();
    assert!(n0 == n1 && n1 == n2, "cubic arrays only");
    let n = n0;
    let m = n / 2 + 1;
    let plans = plans(n);
    let mut full = Array3::default((n, n, n));
    with_workspace(n, &plans, |ws| {
        // r2c along axis 2: real lanes are contiguous
        let src = values.as_slice().expect("standard layout");
        let mut lane = vec![0.0; n];
        for (in_lane, out_lane) in src.chunks_exact(n).zip(ws.half.chunks_exact_mut(m)) {
            lane.copy_from_slice(in_lane);
            plans
                .r2c
                .process_with_scratch(&mut lane, out_lane, &mut ws.scratch)
                .expect("matching lane lengths");
        }
        // complex passes over axes 1 and 0 of the (n, n, m) half cube
        let half_len = n * n * m;
        let (half, perm) = (&mut ws.half[..half_len], &mut ws.perm[..half_len]);
        permute_last_to_front(half, perm, n, n, m); // (m, n, n): axis 1 contiguous
        plans.fwd.process_with_scratch(perm, &mut ws.scratch);
        permute_last_to_front(perm, half, m, n, n); // (n, m, n): axis 0 contiguous
        plans.fwd.process_with_scratch(half, &mut ws.scratch);
        permute_last_to_front(half, perm, n, m, n); // back to (n, n, m)

        // mirror the redundant half: F[a, b, c] = conj(F[-a, -b, n - c])
        let out = full.as_slice_mut().expect("standard layout");
        for a in 0..n {
            for b in 0..n {
                let row = &perm[(a * n + b) * m..(a * n + b + 1) * m];
                let out_row = (a * n + b) * n;
                out[out_row..out_row + m].copy_from_slice(row);
            }
        }
        for a in 0..n {
            let ma = ((n - a) % n) * n;
            for b in 0..n {
                let mb = (ma + (n - b) % n) * m;
                let out_row = (a * n + b) * n;
                for c in m..n {
                    out[out_row + c] = perm[mb + (n - c)].conj();
                }
            }
        }
    });
    full
}

/// Inverse of [`forward_real`] up to the factor `n^3`: synthesizes the real
/// cube from the half spectrum (the redundant half of the input is ignored,
/// and roundoff imaginary parts on the self-conjugate planes are dropped).
pub(crate) fn inverse_real(coeffs: &Array3<Complex64>) -> Array3<f64> {
    let (n0, n1, n2) = coeffs.dim();
    assert!(n0 == n1 && n1 == n2, "cubic arrays only");
    let n = n0;
    let m = n / 2 + 1;
    let plans = plans(n);
    let mut values = Array3::default((n, n, n));
    with_workspace(n, &plans, |ws| {
        let src = coeffs.as_slice().expect("standard layout");
        let half_len = n * n * m;
        let (half, perm) = (&mut ws.half[..half_len], &mut ws.perm[..half_len]);
        for (row_idx, out_row) in half.chunks_exact_mut(m).enumerate() {
            let base = row_idx * n;
            out_row.copy_from_slice(&src[base..base + m]);
        }
        permute_last_to_front(half, perm, n, n, m);
        plans.inv.process_with_scratch(perm, &mut ws.scratch);
        permute_last_to_front(perm, half, m, n, n);
        plans.inv.process_with_scratch(half, &mut ws.scratch);
        permute_last_to_front(half, perm, n, m, n);

        let out = values.as_slice_mut().expect("standard layout");
        let mut lane = vec![Complex64::new(0.0, 0.0); m];
        for (in_lane, out_lane) in perm.chunks_exact(m).zip(out.chunks_exact_mut(n)) {
            lane.copy_from_slice(in_lane);
            // self-conjugate bins carry only roundoff imaginary parts
            lane[0].im = 0.0;
            lane[m - 1].im = 0.0;
            plans
                .c2r
                .process_with_scratch(&mut lane, out_lane, &mut ws.scratch)
                .expect("matching lane lengths");
        }
    });
    values
}
