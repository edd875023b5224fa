//! Physical parameters, the 2x2 effective non-Hermitian mode Hamiltonian,
//! nanoparticle backscattering coefficients, exceptional-point location, and
//! the driven Kerr Hamiltonian on the truncated two-mode Fock space.
//!
//! All frequencies are in units of the intrinsic decay rate `gamma_in`.

use num_complex::Complex64 as C64;
use sprs::CsMat;

use crate::error::WgmError;
use crate::fock::{annihilation, tensor, FockOperator};

/// Which decay rates enter the intracavity loss `gamma_opt`.
///
/// The input-output relation only reproduces textbook critical coupling
/// (T = 0 on resonance at `gamma_ex = gamma_in`, no scatterers) when the
/// external coupling contributes to the intracavity decay; `PaperLiteral`
/// keeps `gamma_opt = gamma_in - Im(eps1 + eps2)` with no `gamma_ex` term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LossConvention {
    IncludeExternal,
    PaperLiteral,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ModelParams {
    /// Complex frequency splitting from scatterer 1, units of gamma_in.
    pub eps1: C64,
    /// Complex frequency splitting from scatterer 2, units of gamma_in.
    pub eps2: C64,
    /// Azimuthal mode number.
    pub m: u32,
    /// Relative angular position of the two scatterers, radians.
    pub beta: f64,
    /// Kerr coefficient U >= 0, units of gamma_in.
    pub kerr: f64,
    /// Drive amplitude F >= 0, units of gamma_in.
    pub drive: f64,
    /// Shifted detuning Delta = Delta_c + Re(eps1 + eps2), units of gamma_in.
    pub delta: f64,
    pub gamma_in: f64,
    pub gamma_ex: f64,
    pub loss_convention: LossConvention,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), WgmError> {
        let bad = |msg: &str| Err(WgmError::InvalidParams(msg.to_string()));
        if !(self.gamma_in > 0.0) {
            return bad("gamma_in must be > 0");
        }
        if self.gamma_ex < 0.0 {
            return bad("gamma_ex must be >= 0");
        }
        if self.kerr < 0.0 {
            return bad("kerr must be >= 0");
        }
        if self.drive < 0.0 {
            return bad("drive must be >= 0");
        }
        if self.m < 1 {
            return bad("m must be >= 1");
        }
        if self.eps1.im > 0.0 || self.eps2.im > 0.0 {
            return bad("Im(eps) must be <= 0: scatterers add loss, never gain");
        }
        Ok(())
    }

    /// Fig. 2 caption parameter set (gamma_in units).
    pub fn figure2(beta: f64, delta: f64, convention: LossConvention) -> Self {
        Self {
            eps1: C64::new(1.5, -0.1),
            eps2: C64::new(1.4999, -0.101489),
            m: 4,
            beta,
            kerr: 0.059,
            drive: 0.01,
            delta,
            gamma_in: 1.0,
            gamma_ex: 1.0,
            loss_convention: convention,
        }
    }

    /// Bare cavity detuning from the shifted one.
    pub fn delta_c(&self) -> f64 {
        self.delta - (self.eps1 + self.eps2).re
    }

    /// Shifted detuning from the bare cavity detuning.
    pub fn delta_from_delta_c(&self, delta_c: f64) -> f64 {
        delta_c + (self.eps1 + self.eps2).re
    }
}

/// J1 = eps1 + eps2 e^{-i 2 m beta}, J2 = eps1 + eps2 e^{+i 2 m beta}.
pub fn backscatter_coeffs(params: &ModelParams) -> (C64, C64) {
    let phase = 2.0 * params.m as f64 * params.beta;
    let j1 = params.eps1 + params.eps2 * C64::from_polar(1.0, -phase);
    let j2 = params.eps1 + params.eps2 * C64::from_polar(1.0, phase);
    (j1, j2)
}

/// Eigenstructure of the 2x2 travelling-wave matrix [[Omega, J1], [J2, Omega]].
#[derive(Debug, Clone)]
pub struct EffectiveModeSpectrum {
    /// Omega_plus, Omega_minus = Omega +- sqrt(J1 J2), principal branch.
    pub eigenvalues: [C64; 2],
    /// Unnormalized right eigenvectors (sqrt(J1), +-sqrt(J2))^T, columns.
    pub eigenvectors: [[C64; 2]; 2],
    /// Complex splitting 2 sqrt(J1 J2).
    pub splitting: C64,
    /// Set when J1 J2 = 0 and the eigenvectors coalesce.
    pub degenerate: bool,
}

/// Diagonalize the effective two-mode matrix in the rotating frame
/// (omega_c folded into Delta), with Omega = -i(gamma_in + gamma_ex)/2
/// + eps1 + eps2.
pub fn effective_spectrum(params: &ModelParams) -> EffectiveModeSpectrum {
    let (j1, j2) = backscatter_coeffs(params);
    let gamma = params.gamma_in + params.gamma_ex;
    let omega = C64::new(0.0, -gamma / 2.0) + params.eps1 + params.eps2;
    let prod = j1 * j2;
    let root = prod.sqrt();
    let degenerate = prod.norm() == 0.0;
    let v_plus = [j1.sqrt(), j2.sqrt()];
    let v_minus = [j1.sqrt(), -j2.sqrt()];
    EffectiveModeSpectrum {
        eigenvalues: [omega + root, omega - root],
        eigenvectors: [v_plus, v_minus],
        splitting: 2.0 * root,
        degenerate,
    }
}

/// Relative tolerance on |eps1| vs |eps2| accepted by [`exceptional_angles`].
pub const EP_AMPLITUDE_RTOL: f64 = 1e-3;

/// Critical angles beta_c = l pi / (2m) -+ (arg eps1 - arg eps2) / (2m) for
/// the requested odd l, both sign branches, in the order (minus, plus) per l.
///
/// The formula assumes |eps1| = |eps2|; inputs violating that beyond
/// [`EP_AMPLITUDE_RTOL`] are rejected.
pub fn exceptional_angles(params: &ModelParams, l_values: &[i64]) -> Result<Vec<f64>, WgmError> {
    let (m1, m2) = (params.eps1.norm(), params.eps2.norm());
    let rel = (m1 - m2).abs() / m1.max(m2);
    if rel > EP_AMPLITUDE_RTOL {
        return Err(WgmError::AmplitudeMismatch(rel));
    }
    let two_m = 2.0 * params.m as f64;
    let darg = params.eps1.arg() - params.eps2.arg();
    let mut out = Vec::with_capacity(2 * l_values.len());
    for &l in l_values {
        if l % 2 == 0 {
            return Err(WgmError::InvalidParams(format!("l must be odd, got {l}")));
        }
        let base = l as f64 * std::f64::consts::PI / two_m;
        out.push(base - darg / two_m);
        out.push(base + darg / two_m);
    }
    Ok(out)
}

/// Intracavity loss rate entering the dissipator and the mean-field equations.
pub fn total_loss(params: &ModelParams) -> f64 {
    let scatter = -(params.eps1 + params.eps2).im;
    match params.loss_convention {
        LossConvention::IncludeExternal => params.gamma_in + params.gamma_ex + scatter,
        LossConvention::PaperLiteral => params.gamma_in + scatter,
    }
}

/// Relative non-Hermiticity ||H - H^dag||_max / ||H||_max.
pub fn hermiticity_defect(h: &FockOperator) -> f64 {
    let hd = h.dagger();
    let diff: CsMat<C64> = &h.data + &hd.scale(C64::new(-1.0, 0.0)).data;
    let num = diff.iter().map(|(v, _)| v.norm()).fold(0.0f64, f64::max);
    let den = h.data.iter().map(|(v, _)| v.norm()).fold(0.0f64, f64::max);
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Two-mode driven Kerr Hamiltonian of the system on `n_levels` per mode:
///
/// H = Delta (nC + nA) + U (aC'aC'aCaC + aA'aA'aAaA)
///     + J1 aC aA' + J2 aC' aA + i F aC' - i conj(F) aC
///
/// Non-Hermitian whenever J1 != conj(J2).
pub fn build_hamiltonian_with_drive_phase(
    params: &ModelParams,
    n_levels: usize,
    drive_phase: f64,
) -> Result<FockOperator, WgmError> {
    build_hamiltonian_asym(params, n_levels, n_levels, drive_phase)
}

/// Same Hamiltonian with independent per-mode truncations. Near beta = pi/8
/// both backscattering couplings are tiny and the CCW mode barely leaves the
/// vacuum even under strong driving, so a small `n_a_levels` cuts the
/// Liouvillian dimension drastically.
pub fn build_hamiltonian_asym(
    params: &ModelParams,
    n_c_levels: usize,
    n_a_levels: usize,
    drive_phase: f64,
) -> Result<FockOperator, WgmError> {
    if n_c_levels < 2 {
        return Err(WgmError::TruncationTooSmall(n_c_levels));
    }
    if n_a_levels < 2 {
        return Err(WgmError::TruncationTooSmall(n_a_levels));
    }
    let a_c = tensor(
        &annihilation(n_c_levels)?,
        &FockOperator::identity(vec![n_a_levels]),
    );
    let a_a = tensor(
        &FockOperator::identity(vec![n_c_levels]),
        &annihilation(n_a_levels)?,
    );
    let (j1, j2) = backscatter_coeffs(params);
    let f = C64::from_polar(params.drive, drive_phase);

    let n_c = a_c.dagger().mul(&a_c);
    let n_a = a_a.dagger().mul(&a_a);
    let kerr_c = a_c.dagger().mul(&a_c.dagger()).mul(&a_c).mul(&a_c);
    let kerr_a = a_a.dagger().mul(&a_a.dagger()).mul(&a_a).mul(&a_a);

    let mut h = n_c.add(&n_a).scale(C64::new(params.delta, 0.0));
    h = h.add(&kerr_c.add(&kerr_a).scale(C64::new(params.kerr, 0.0)));
    h = h.add(&a_c.mul(&a_a.dagger()).scale(j1));
    h = h.add(&a_c.dagger().mul(&a_a).scale(j2));
    h = h.add(&a_c.dagger().scale(C64::new(0.0, 1.0) * f));
    h = h.add(&a_c.scale(C64::new(0.0, -1.0) * f.conj()));
    Ok(h)
}

pub fn build_hamiltonian(params: &ModelParams, n_levels: usize) -> Result<FockOperator, WgmError> {
    build_hamiltonian_with_drive_phase(params, n_levels, 0.0)
}
