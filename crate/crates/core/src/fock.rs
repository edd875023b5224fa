//! Sparse operators on truncated Fock spaces and density-matrix expectation
//! values.
//!
//! Mode ordering is fixed globally: mode 0 is the clockwise (C) travelling
//! wave, mode 1 the anti-clockwise (A) one. Two-mode operators are always
//! `tensor(c_part, a_part)`, with the C index varying slowest.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use sprs::{CsMat, TriMat};

use crate::error::WgmError;

/// Sparse complex operator on a truncated (possibly multi-mode) Fock space.
#[derive(Debug, Clone)]
pub struct FockOperator {
    /// Per-mode truncation sizes; each entry is `N_max + 1`.
    pub dims: Vec<usize>,
    pub data: CsMat<C64>,
}

impl FockOperator {
    pub fn new(dims: Vec<usize>, data: CsMat<C64>) -> Result<Self, WgmError> {
        let side: usize = dims.iter().product();
        if data.rows() != side || data.cols() != side {
            return Err(WgmError::DimensionMismatch {
                expected: side,
                found: data.rows(),
            });
        }
        if data.iter().any(|(v, _)| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(WgmError::NonFiniteEntry);
        }
        Ok(Self { dims, data })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Identity on the given truncated space.
    pub fn identity(dims: Vec<usize>) -> Self {
        let side: usize = dims.iter().product();
        let mut tri = TriMat::new((side, side));
        for i in 0..side {
            tri.add_triplet(i, i, C64::new(1.0, 0.0));
        }
        Self { dims, data: tri.to_csr() }
    }

    /// Hermitian adjoint.
    pub fn dagger(&self) -> Self {
        let t = self.data.transpose_view().to_csr();
        Self {
            dims: self.dims.clone(),
            data: t.map(|v| v.conj()),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            data: self.data.map(|v| v * s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims, "operator dims must match");
        Self {
            dims: self.dims.clone(),
            data: &self.data + &other.data,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dims, other.dims, "operator dims must match");
        Self {
            dims: self.dims.clone(),
            data: &self.data * &other.data,
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for (v, (i, j)) in self.data.iter() {
            out[(i, j)] = *v;
        }
        out
    }
}

/// Annihilation operator `a` on `n_levels` Fock levels: `a|n> = sqrt(n)|n-1>`.
pub fn annihilation(n_levels: usize) -> Result<FockOperator, WgmError> {
    if n_levels < 2 {
        return Err(WgmError::TruncationTooSmall(n_levels));
    }
    let mut tri = TriMat::new((n_levels, n_levels));
    for n in 1..n_levels {
        tri.add_triplet(n - 1, n, C64::new((n as f64).sqrt(), 0.0));
    }
    FockOperator::new(vec![n_levels], tri.to_csr())
}

/// Kronecker product; `a`'s mode index varies slowest.
pub fn tensor(a: &FockOperator, b: &FockOperator) -> FockOperator {
    let data = sprs::kronecker_product(a.data.view(), b.data.view());
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    FockOperator { dims, data }
}

/// Dense complex Hermitian density matrix with recorded per-mode truncation.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub dims: Vec<usize>,
    pub data: DMatrix<C64>,
}

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-8;

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, data: DMatrix<C64>) -> Result<Self, WgmError> {
        let side: usize = dims.iter().product();
        if data.nrows() != side || data.ncols() != side {
            return Err(WgmError::DimensionMismatch {
                expected: side,
                found: data.nrows(),
            });
        }
        let rho = Self { dims, data };
        rho.check_invariants()?;
        Ok(rho)
    }

    /// Shape-checked only; for callers that apply their own (looser)
    /// positivity gate, e.g. steady states of a non-Hermitian commutator.
    pub fn from_parts(dims: Vec<usize>, data: DMatrix<C64>) -> Result<Self, WgmError> {
        let side: usize = dims.iter().product();
        if data.nrows() != side || data.ncols() != side {
            return Err(WgmError::DimensionMismatch {
                expected: side,
                found: data.nrows(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    /// Max-norm departure from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[(i, j)] - self.data[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + &self.data.adjoint()).scale(0.5);
        let eig = herm.symmetric_eigenvalues();
        eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn check_invariants(&self) -> Result<(), WgmError> {
        let h = self.hermiticity_defect();
        if h > HERMITICITY_TOL {
            return Err(WgmError::NotHermitian(h));
        }
        let t = (self.trace() - C64::new(1.0, 0.0)).norm();
        if t > TRACE_TOL {
            return Err(WgmError::TraceNotUnit(t));
        }
        let lmin = self.min_eigenvalue();
        if lmin < POSITIVITY_TOL {
            return Err(WgmError::NotPositive(lmin));
        }
        Ok(())
    }

    /// Pure-state density matrix |psi><psi| / <psi|psi>.
    pub fn from_pure(dims: Vec<usize>, psi: &[C64]) -> Result<Self, WgmError> {
        let side: usize = dims.iter().product();
        assert_eq!(psi.len(), side);
        let norm2: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let mut data = DMatrix::zeros(side, side);
        for i in 0..side {
            for j in 0..side {
                data[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Self::new(dims, data)
    }
}

/// Tr(rho * op).
pub fn expect(rho: &DensityMatrix, op: &FockOperator) -> Result<C64, WgmError> {
    if rho.dim() != op.dim() {
        return Err(WgmError::DimensionMismatch {
            expected: rho.dim(),
            found: op.dim(),
        });
    }
    // Tr(rho op) = sum_{i,j} rho[i,j] op[j,i]
    let mut acc = C64::new(0.0, 0.0);
    for (v, (j, i)) in op.data.iter() {
        acc += rho.data[(i, j)] * v;
    }
    Ok(acc)
}
