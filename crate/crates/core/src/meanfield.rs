//! Semiclassical steady states of the Langevin equations and the normalized
//! forward transmission spectrum.
//!
//! The linear case has a closed form; the Kerr-nonlinear case is solved by
//! damped Newton iteration on the four real components of the two complex
//! amplitude equations (|alpha|^2 is not complex-differentiable, so the
//! Jacobian is an ordinary real 4x4 matrix).

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;

use crate::error::WgmError;
use crate::model::{backscatter_coeffs, total_loss, ModelParams};

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const SINGULAR_DENOM_TOL: f64 = 1e-14;
pub const ROOT_DISTANCE_TOL: f64 = 1e-6;
pub const MAX_NEWTON_ITERS: usize = 200;

#[derive(Debug, Clone, Copy)]
pub struct MeanFieldState {
    pub alpha_c: C64,
    pub alpha_a: C64,
    /// Max norm of the steady-state equations at the reported solution.
    pub residual: f64,
    /// Label distinguishing multistable roots within one sweep.
    pub branch_id: usize,
}

/// Closed-form steady state with the Kerr terms omitted.
pub fn linear_steady_state(params: &ModelParams) -> Result<MeanFieldState, WgmError> {
    let (j1, j2) = backscatter_coeffs(params);
    let g2 = total_loss(params) / 2.0;
    let f = params.drive;
    let denom = (C64::new(g2, params.delta)).powi(2) + j1 * j2;
    if denom.norm() < SINGULAR_DENOM_TOL {
        return Err(WgmError::DegenerateDrive(denom.norm()));
    }
    let alpha_c = f * C64::new(g2, params.delta) / denom;
    let alpha_a = C64::new(0.0, -1.0) * f * j1 / denom;
    let (r1, r2) = equation_residuals(params, alpha_c, alpha_a);
    // residual measured on the full equations; nonzero only through U
    Ok(MeanFieldState {
        alpha_c,
        alpha_a,
        residual: r1.norm().max(r2.norm()),
        branch_id: 0,
    })
}

/// Steady-equation right-hand sides (zero at a root), Kerr terms included.
fn equation_residuals(params: &ModelParams, ac: C64, aa: C64) -> (C64, C64) {
    let (j1, j2) = backscatter_coeffs(params);
    let g2 = total_loss(params) / 2.0;
    let u = params.kerr;
    let i = C64::new(0.0, 1.0);
    let f1 = (-C64::new(g2, params.delta) - 2.0 * i * u * ac.norm_sqr()) * ac - i * j2 * aa
        + params.drive;
    let f2 = (-C64::new(g2, params.delta) - 2.0 * i * u * aa.norm_sqr()) * aa - i * j1 * ac;
    (f1, f2)
}

/// Real 4x4 Jacobian of the steady equations w.r.t.
/// (Re aC, Im aC, Re aA, Im aA).
fn jacobian(params: &ModelParams, ac: C64, aa: C64) -> Matrix4<f64> {
    let (j1, j2) = backscatter_coeffs(params);
    let g2 = total_loss(params) / 2.0;
    let u = params.kerr;
    let d = params.delta;

    // f = (-g2 - i(d + 2u|a|^2)) a + coupling; write a = x + iy.
    // d(|a|^2 a)/dx = 2x a + |a|^2 ; d(|a|^2 a)/dy = 2y a + i |a|^2
    let lin = C64::new(-g2, -d);
    let block = |a: C64| -> [[f64; 2]; 2] {
        let i = C64::new(0.0, 1.0);
        let dfdx = lin - 2.0 * i * u * (2.0 * a.re * a + C64::new(a.norm_sqr(), 0.0));
        let dfdy = lin * i - 2.0 * i * u * (2.0 * a.im * a + i * a.norm_sqr());
        [[dfdx.re, dfdy.re], [dfdx.im, dfdy.im]]
    };
    let bc = block(ac);
    let ba = block(aa);
    let c12 = C64::new(0.0, -1.0) * j2; // df1/d(aA)
    let c21 = C64::new(0.0, -1.0) * j1; // df2/d(aC)

    Matrix4::new(
        bc[0][0], bc[0][1], c12.re, -c12.im,
        bc[1][0], bc[1][1], c12.im, c12.re,
        c21.re, -c21.im, ba[0][0], ba[0][1],
        c21.im, c21.re, ba[1][0], ba[1][1],
    )
}

fn newton_from_seed(params: &ModelParams, seed: (C64, C64)) -> Result<(C64, C64, f64), WgmError> {
    let (mut ac, mut aa) = seed;
    let res_norm = |ac: C64, aa: C64| {
        let (f1, f2) = equation_residuals(params, ac, aa);
        f1.norm().max(f2.norm())
    };
    let mut res = res_norm(ac, aa);
    for iter in 0..MAX_NEWTON_ITERS {
        if res <= RESIDUAL_TOL {
            return Ok((ac, aa, res));
        }
        let (f1, f2) = equation_residuals(params, ac, aa);
        let jac = jacobian(params, ac, aa);
        let rhs = Vector4::new(-f1.re, -f1.im, -f2.re, -f2.im);
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(WgmError::NewtonDiverged(iter, res))?;
        // step halving on residual increase
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let cand_c = ac + C64::new(lambda * step[0], lambda * step[1]);
            let cand_a = aa + C64::new(lambda * step[2], lambda * step[3]);
            let cand_res = res_norm(cand_c, cand_a);
            if cand_res < res || cand_res <= RESIDUAL_TOL {
                ac = cand_c;
                aa = cand_a;
                res = cand_res;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(WgmError::NewtonDiverged(iter, res));
        }
    }
    if res <= RESIDUAL_TOL {
        Ok((ac, aa, res))
    } else {
        Err(WgmError::NewtonDiverged(MAX_NEWTON_ITERS, res))
    }
}

/// Kerr-nonlinear steady states from damped Newton iteration.
///
/// Seeds: the linear closed form, optional continuation states from the
/// previous sweep point, and scaled variants probing for multistable roots.
/// Every distinct converged root (pairwise distance > 1e-6) is returned;
/// per-seed failures are silently dropped (the seed set is redundant).
pub fn nonlinear_steady_state(
    params: &ModelParams,
    continuation: &[MeanFieldState],
) -> Result<Vec<MeanFieldState>, WgmError> {
    let mut seeds: Vec<(C64, C64)> = Vec::new();
    if let Ok(lin) = linear_steady_state(params) {
        seeds.push((lin.alpha_c, lin.alpha_a));
        for scale in [0.25, 4.0] {
            seeds.push((lin.alpha_c * scale, lin.alpha_a * scale));
        }
    }
    for st in continuation {
        seeds.push((st.alpha_c, st.alpha_a));
    }
    seeds.push((C64::new(0.0, 0.0), C64::new(0.0, 0.0)));

    let mut roots: Vec<MeanFieldState> = Vec::new();
    let mut last_err = None;
    for seed in seeds {
        match newton_from_seed(params, seed) {
            Ok((ac, aa, res)) => {
                let dist = |r: &MeanFieldState| {
                    ((r.alpha_c - ac).norm_sqr() + (r.alpha_a - aa).norm_sqr()).sqrt()
                };
                if roots.iter().all(|r| dist(r) > ROOT_DISTANCE_TOL) {
                    roots.push(MeanFieldState {
                        alpha_c: ac,
                        alpha_a: aa,
                        residual: res,
                        branch_id: roots.len(),
                    });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if roots.is_empty() {
        Err(last_err.unwrap_or(WgmError::NewtonDiverged(MAX_NEWTON_ITERS, f64::NAN)))
    } else {
        Ok(roots)
    }
}

/// Normalized forward power transmission T = |1 - (gamma_ex / F) alpha_C|^2.
pub fn transmission(params: &ModelParams, state: &MeanFieldState) -> Result<f64, WgmError> {
    if params.drive == 0.0 {
        return Err(WgmError::ZeroDrive);
    }
    let t = C64::new(1.0, 0.0) - params.gamma_ex / params.drive * state.alpha_c;
    Ok(t.norm_sqr())
}
