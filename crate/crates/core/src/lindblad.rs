//! Master-equation steady states: Liouvillian assembly in vectorized
//! (column-major) form, sparse-LU null-space solve, and the equal-time
//! correlation functions g2 / g3.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat};
use num_complex::Complex64 as C64;
use sprs::{kronecker_product, CsMat};

use crate::error::WgmError;
use crate::fock::{annihilation, expect, tensor, DensityMatrix, FockOperator};
use crate::model::{hermiticity_defect, total_loss, ModelParams};

pub const STEADY_RESIDUAL_TOL: f64 = 1e-8;
pub const POPULATION_FLOOR: f64 = 1e-14;
pub const LADDER_STEP: usize = 4;
pub const LADDER_CAP: usize = 40;
pub const LADDER_RTOL: f64 = 1e-3;
/// Refuse LU factorizations beyond this vectorized dimension; the fill-in
/// does not fit in a few GB past roughly 40k.
pub const MAX_SUPEROP_DIM: usize = 40_000;
/// g3's numerator <a^dag^3 a^3> ~ n^3 g3 sits at the linear-solver noise
/// floor for weak drives; below this scale g3 is excluded from the
/// truncation-ladder convergence metric.
pub const G3_RESOLVABLE_FLOOR: f64 = 1e-9;

pub struct Superoperator {
    /// Hilbert-space dimension; the matrix acts on dim^2 vectorized states.
    pub dim: usize,
    pub data: CsMat<C64>,
    /// ||H - H^dag||_max of the generating Hamiltonian (nonzero here by
    /// construction: the backscattering amplitudes are complex).
    pub hamiltonian_defect: f64,
}

fn conj_mat(m: &CsMat<C64>) -> CsMat<C64> {
    m.map(|v| v.conj())
}

fn scale_mat(m: &CsMat<C64>, s: C64) -> CsMat<C64> {
    m.map(|v| v * s)
}

fn kron(a: &CsMat<C64>, b: &CsMat<C64>) -> CsMat<C64> {
    kronecker_product(a.view(), b.view()).to_csc()
}

/// vec(H rho - rho H) uses vec(AXB) = (B^T (x) A) vec(X), column-major.
pub fn liouvillian(h: &FockOperator, collapse: &[(f64, FockOperator)]) -> Superoperator {
    let d = h.dim();
    let id = FockOperator::identity(h.dims.clone()).data;
    let minus_i = C64::new(0.0, -1.0);
    let ht = h.data.transpose_view().to_csc().to_owned();
    let mut l = scale_mat(&(&kron(&id, &h.data) - &kron(&ht, &id)), minus_i);
    for (rate, x) in collapse {
        let r = C64::new(*rate, 0.0);
        let xdx = x.dagger().mul(x).data;
        let xdx_t = xdx.transpose_view().to_csc().to_owned();
        let jump = scale_mat(&kron(&conj_mat(&x.data), &x.data), r);
        let anti = scale_mat(&(&kron(&id, &xdx) + &kron(&xdx_t, &id)), -0.5 * r);
        l = &(&l + &jump) + &anti;
    }
    Superoperator {
        dim: d,
        data: l,
        hamiltonian_defect: hermiticity_defect(h),
    }
}

/// Single-mode annihilation operators on the two-mode product space,
/// CW mode varying slowest.
pub fn mode_operators(n_levels: usize) -> Result<(FockOperator, FockOperator), WgmError> {
    mode_operators_asym(n_levels, n_levels)
}

pub fn mode_operators_asym(
    n_c_levels: usize,
    n_a_levels: usize,
) -> Result<(FockOperator, FockOperator), WgmError> {
    let a_c = tensor(
        &annihilation(n_c_levels)?,
        &FockOperator::identity(vec![n_a_levels]),
    );
    let a_a = tensor(
        &FockOperator::identity(vec![n_c_levels]),
        &annihilation(n_a_levels)?,
    );
    Ok((a_c, a_a))
}

/// Lindblad decay rate per mode: the full intracavity loss gamma_opt,
/// including the scatterer-induced part. Only the off-diagonal
/// backscattering terms stay in the (non-Hermitian) Hamiltonian.
pub fn lindblad_rate(params: &ModelParams) -> f64 {
    total_loss(params)
}

pub fn build_liouvillian(params: &ModelParams, n_levels: usize) -> Result<Superoperator, WgmError> {
    build_liouvillian_asym(params, n_levels, n_levels)
}

pub fn build_liouvillian_asym(
    params: &ModelParams,
    n_c_levels: usize,
    n_a_levels: usize,
) -> Result<Superoperator, WgmError> {
    params.validate()?;
    let h = crate::model::build_hamiltonian_asym(params, n_c_levels, n_a_levels, 0.0)?;
    let (a_c, a_a) = mode_operators_asym(n_c_levels, n_a_levels)?;
    let rate = lindblad_rate(params);
    Ok(liouvillian(&h, &[(rate, a_c), (rate, a_a)]))
}

fn sparse_matvec(m: &CsMat<C64>, x: &[C64], y: &mut [C64]) {
    y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
    for (val, (row, col)) in m.iter() {
        y[row] += *val * x[col];
    }
}

/// Null vector of the Liouvillian with unit trace, via sparse LU on a copy
/// whose last row is replaced by the trace functional. A pass of iterative
/// refinement recovers componentwise accuracy where populations span many
/// orders of magnitude.
pub fn steady_state(superop: &Superoperator) -> Result<DensityMatrix, WgmError> {
    let d = superop.dim;
    let n2 = d * d;
    if n2 > MAX_SUPEROP_DIM {
        return Err(WgmError::SolverFailure(format!(
            "superoperator dimension {n2} exceeds the {MAX_SUPEROP_DIM} memory budget; \
             lower the truncation (or use an asymmetric one)"
        )));
    }
    let last = n2 - 1;
    let mut triplets: Vec<Triplet<usize, usize, c64>> = Vec::with_capacity(superop.data.nnz() + d);
    for (val, (row, col)) in superop.data.iter() {
        if row != last {
            triplets.push(Triplet::new(row, col, c64::new(val.re, val.im)));
        }
    }
    for i in 0..d {
        triplets.push(Triplet::new(last, i * d + i, c64::new(1.0, 0.0)));
    }
    let mat = SparseColMat::<usize, c64>::try_new_from_triplets(n2, n2, &triplets)
        .map_err(|e| WgmError::SolverFailure(format!("{e:?}")))?;
    let sym = SymbolicLu::try_new(mat.symbolic())
        .map_err(|e| WgmError::SolverFailure(format!("{e:?}")))?;
    let lu = Lu::try_new_with_symbolic(sym, mat.as_ref())
        .map_err(|e| WgmError::SolverFailure(format!("{e:?}")))?;

    let mut b = Mat::<c64>::zeros(n2, 1);
    b[(last, 0)] = c64::new(1.0, 0.0);
    let mut x = lu.solve(&b);
    // iterative refinement against the modified system
    for _ in 0..2 {
        let mut r = b.clone();
        for t in &triplets {
            r[(t.row, 0)] -= t.val * x[(t.col, 0)];
        }
        let dx = lu.solve(&r);
        for i in 0..n2 {
            x[(i, 0)] += dx[(i, 0)];
        }
    }

    let vec_rho: Vec<C64> = (0..n2).map(|i| C64::new(x[(i, 0)].re, x[(i, 0)].im)).collect();
    // residual on the original (unmodified) Liouvillian
    let mut resid = vec![C64::new(0.0, 0.0); n2];
    sparse_matvec(&superop.data, &vec_rho, &mut resid);
    let res_max = resid.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !res_max.is_finite() || res_max > STEADY_RESIDUAL_TOL {
        return Err(WgmError::SolverFailure(format!(
            "steady-state residual {res_max:.3e} exceeds {STEADY_RESIDUAL_TOL:.1e}"
        )));
    }

    let raw = nalgebra::DMatrix::<C64>::from_column_slice(d, d, &vec_rho);
    let raw_dag = raw.adjoint();
    // the verbatim non-Hermitian commutator makes the true null vector
    // slightly non-Hermitian; keep the Hermitian part and remember how much
    // was discarded so the positivity gate can scale with it
    let anti_defect = (0..d)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .map(|(r, c)| ((raw[(r, c)] - raw_dag[(r, c)]) * C64::new(0.5, 0.0)).norm())
        .fold(0.0, f64::max);
    let mut rho = (raw + raw_dag) * C64::new(0.5, 0.0);
    let tr: C64 = (0..d).map(|i| rho[(i, i)]).sum();
    rho /= tr;
    let dm = DensityMatrix::from_parts(dims_for(d), rho)?;
    let tr_err = (dm.trace() - C64::new(1.0, 0.0)).norm();
    if tr_err > crate::fock::TRACE_TOL {
        return Err(WgmError::TraceNotUnit(tr_err));
    }
    let min_eig = dm.min_eigenvalue();
    let floor = crate::fock::POSITIVITY_TOL - 10.0 * anti_defect * d as f64;
    if min_eig < floor {
        return Err(WgmError::NotPositive(min_eig));
    }
    Ok(dm)
}

fn dims_for(d: usize) -> Vec<usize> {
    // square two-mode product space when possible, else a single factor
    let r = (d as f64).sqrt().round() as usize;
    if r * r == d {
        vec![r, r]
    } else {
        vec![d]
    }
}

/// g2(0) = <x^dag x^dag x x> / <x^dag x>^2 for the given mode operator.
pub fn correlation_g2(rho: &DensityMatrix, x: &FockOperator) -> Result<f64, WgmError> {
    let xd = x.dagger();
    let n = expect(rho, &xd.mul(x))?.re;
    if n <= POPULATION_FLOOR {
        return Err(WgmError::VanishingPopulation(n));
    }
    let num = expect(rho, &xd.mul(&xd).mul(x).mul(x))?.re;
    Ok(num / (n * n))
}

/// g3(0) = <x^dag^3 x^3> / <x^dag x>^3.
pub fn correlation_g3(rho: &DensityMatrix, x: &FockOperator) -> Result<f64, WgmError> {
    let xd = x.dagger();
    let n = expect(rho, &xd.mul(x))?.re;
    if n <= POPULATION_FLOOR {
        return Err(WgmError::VanishingPopulation(n));
    }
    let num = expect(rho, &xd.mul(&xd).mul(&xd).mul(x).mul(x).mul(x))?.re;
    Ok(num / (n * n * n))
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyObservables {
    pub n_c: f64,
    pub n_a: f64,
    pub g2_c: f64,
    pub g3_c: f64,
    pub n_levels_used: usize,
    pub converged: bool,
}

fn observables_at(params: &ModelParams, n_levels: usize) -> Result<SteadyObservables, WgmError> {
    observables_at_asym(params, n_levels, n_levels)
}

/// Observables at an explicit (CW, CCW) truncation pair; `n_levels_used`
/// reports the CW truncation.
pub fn observables_at_asym(
    params: &ModelParams,
    n_c_levels: usize,
    n_a_levels: usize,
) -> Result<SteadyObservables, WgmError> {
    let superop = build_liouvillian_asym(params, n_c_levels, n_a_levels)?;
    let rho = steady_state(&superop)?;
    let (a_c, a_a) = mode_operators_asym(n_c_levels, n_a_levels)?;
    Ok(SteadyObservables {
        n_c: expect(&rho, &a_c.dagger().mul(&a_c))?.re,
        n_a: expect(&rho, &a_a.dagger().mul(&a_a))?.re,
        g2_c: correlation_g2(&rho, &a_c)?,
        g3_c: correlation_g3(&rho, &a_c)?,
        n_levels_used: n_c_levels,
        converged: false,
    })
}

/// Solve on a truncation ladder n0, n0+4, ... until n_C, g2_C and g3_C all
/// drift by less than 1e-3 relative between consecutive rungs. The `cap`
/// argument bounds per-mode levels (hard limit 40).
pub fn solve_observables(
    params: &ModelParams,
    n_start: usize,
    cap: usize,
) -> Result<SteadyObservables, WgmError> {
    let cap = cap.min(LADDER_CAP);
    if n_start < 2 || n_start > cap {
        return Err(WgmError::TruncationTooSmall(n_start));
    }
    let mut prev = observables_at(params, n_start)?;
    let mut n = n_start;
    let mut drift = f64::NAN;
    while n + LADDER_STEP <= cap {
        n += LADDER_STEP;
        let cur = observables_at(params, n)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
        drift = rel(cur.n_c, prev.n_c).max(rel(cur.g2_c, prev.g2_c));
        // g3's numerator scales like n^3; below the solver noise floor it
        // carries no information and would keep the ladder climbing forever
        if prev.n_c.powi(3) * prev.g3_c.abs() > G3_RESOLVABLE_FLOOR {
            drift = drift.max(rel(cur.g3_c, prev.g3_c));
        }
        if drift < LADDER_RTOL {
            return Ok(SteadyObservables { converged: true, ..cur });
        }
        prev = cur;
    }
    if n == n_start {
        // single rung fits under the cap: report it unconverged
        return Ok(prev);
    }
    Err(WgmError::TruncationCapExceeded { cap, drift })
}
