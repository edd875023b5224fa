//! Weak-drive photon statistics from the truncated non-Hermitian amplitude
//! hierarchy: the state is expanded on the zero-, one- and two-excitation
//! manifolds and the steady amplitudes solved order by order in the drive.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64 as C64;

use crate::error::WgmError;
use crate::model::{backscatter_coeffs, total_loss, ModelParams};

pub const AMPLITUDE_BLOCK_TOL: f64 = 1e-14;
pub const EP_PROXIMITY_RTOL: f64 = 1e-6;

/// Excitation amplitudes |psi> = C00|00> + C10|10> + C01|01>
///                              + C20|20> + C11|11> + C02|02>,
/// CW photon number listed first.
#[derive(Debug, Clone, Copy)]
pub struct AmplitudeSet {
    pub c00: C64,
    pub c10: C64,
    pub c01: C64,
    pub c20: C64,
    pub c11: C64,
    pub c02: C64,
}

fn det_bar(params: &ModelParams) -> C64 {
    C64::new(params.delta, -total_loss(params) / 2.0)
}

/// Order-by-order solve: the one-excitation 2x2 block is closed by dropping
/// the O(F^2) feedback from the doubly excited amplitudes, then those feed a
/// 3x3 two-excitation block. This is the perturbative hierarchy the closed
/// forms come from.
pub fn solve_amplitudes(params: &ModelParams) -> Result<AmplitudeSet, WgmError> {
    params.validate()?;
    let (j1, j2) = backscatter_coeffs(params);
    let db = det_bar(params);
    let i = C64::new(0.0, 1.0);
    let f = C64::new(params.drive, 0.0);
    let rt2 = C64::new(2.0_f64.sqrt(), 0.0);

    let m1 = Matrix2::new(db, j2, j1, db);
    if m1.determinant().norm() < AMPLITUDE_BLOCK_TOL {
        return Err(WgmError::SingularAmplitudeBlock);
    }
    let b1 = Vector2::new(-i * f, C64::new(0.0, 0.0));
    let x1 = m1.lu().solve(&b1).ok_or(WgmError::SingularAmplitudeBlock)?;
    let (c10, c01) = (x1[0], x1[1]);

    let two_u = C64::new(2.0 * params.kerr, 0.0);
    let m2 = Matrix3::new(
        2.0 * db + two_u, rt2 * j2, C64::new(0.0, 0.0),
        rt2 * j1, 2.0 * db, rt2 * j2,
        C64::new(0.0, 0.0), rt2 * j1, 2.0 * db + two_u,
    );
    if m2.determinant().norm() < AMPLITUDE_BLOCK_TOL {
        return Err(WgmError::SingularAmplitudeBlock);
    }
    let b2 = Vector3::new(-i * f * rt2 * c10, -i * f * c01, C64::new(0.0, 0.0));
    let x2 = m2.lu().solve(&b2).ok_or(WgmError::SingularAmplitudeBlock)?;

    Ok(AmplitudeSet {
        c00: C64::new(1.0, 0.0),
        c10,
        c01,
        c20: x2[0],
        c11: x2[1],
        c02: x2[2],
    })
}

/// All five excited amplitudes solved at once, keeping the drive feedback
/// terms the hierarchy drops. Differs from [`solve_amplitudes`] at O(F^2)
/// relative; useful as a cross-check that the truncation is controlled.
pub fn solve_amplitudes_full(params: &ModelParams) -> Result<AmplitudeSet, WgmError> {
    params.validate()?;
    let (j1, j2) = backscatter_coeffs(params);
    let db = det_bar(params);
    let i = C64::new(0.0, 1.0);
    let f = C64::new(params.drive, 0.0);
    let rt2 = C64::new(2.0_f64.sqrt(), 0.0);
    let two_u = C64::new(2.0 * params.kerr, 0.0);
    let z = C64::new(0.0, 0.0);

    // unknowns (c10, c01, c20, c11, c02); rows are the steady equations
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(5, 5, &[
        db, j2, -i * f * rt2, z, z,
        j1, db, z, -i * f, z,
        i * f * rt2, z, 2.0 * db + two_u, rt2 * j2, z,
        z, i * f, rt2 * j1, 2.0 * db, rt2 * j2,
        z, z, z, rt2 * j1, 2.0 * db + two_u,
    ]);
    let b = DVector::from_column_slice(&[-i * f, z, z, z, z]);
    let x = m.lu().solve(&b).ok_or(WgmError::SingularAmplitudeBlock)?;
    Ok(AmplitudeSet {
        c00: C64::new(1.0, 0.0),
        c10: x[0],
        c01: x[1],
        c20: x[2],
        c11: x[3],
        c02: x[4],
    })
}

/// Weak-drive second-order correlation of the CW mode,
/// g2 ~ 2|C20|^2 / |C10|^4.
pub fn g2_weak(amplitudes: &AmplitudeSet) -> Result<f64, WgmError> {
    let p1 = amplitudes.c10.norm_sqr();
    if p1 <= crate::lindblad::POPULATION_FLOOR {
        return Err(WgmError::VanishingPopulation(p1));
    }
    Ok(2.0 * amplitudes.c20.norm_sqr() / (p1 * p1))
}

/// Closed form at an exceptional point (J1 J2 -> 0):
/// g2 = |Dbar|^2 / |Dbar + U|^2. Rejects parameter sets that are not
/// actually at an exceptional point.
pub fn g2_at_exceptional_point(params: &ModelParams) -> Result<f64, WgmError> {
    params.validate()?;
    let (j1, j2) = backscatter_coeffs(params);
    let min_j = j1.norm().min(j2.norm());
    if min_j >= EP_PROXIMITY_RTOL * params.eps1.norm().max(params.eps2.norm()) {
        return Err(WgmError::NotAtExceptionalPoint(min_j));
    }
    let db = det_bar(params);
    let shifted = db + C64::new(params.kerr, 0.0);
    Ok(db.norm_sqr() / shifted.norm_sqr())
}
