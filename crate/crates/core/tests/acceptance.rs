//! Acceptance gate: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL` line (visible with `--nocapture` and in failure
//! reports). Tolerances are pinned here, not read from config.
//!
//! Criteria 7-13 depend on published figure values and run under both loss
//! conventions; they pass if at least one convention reproduces the value,
//! and the passing convention is printed.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use wgm_blockade::fock::annihilation;
use wgm_blockade::lindblad::{
    build_liouvillian, correlation_g2, correlation_g3, lindblad_rate, liouvillian,
    mode_operators, observables_at_asym, solve_observables, steady_state, SteadyObservables,
};
use wgm_blockade::meanfield::{linear_steady_state, nonlinear_steady_state, transmission};
use wgm_blockade::model::{
    backscatter_coeffs, build_hamiltonian, build_hamiltonian_with_drive_phase,
    exceptional_angles, LossConvention, ModelParams,
};
use wgm_blockade::weakdrive::{g2_weak, solve_amplitudes};

const BOTH: [LossConvention; 2] = [LossConvention::PaperLiteral, LossConvention::IncludeExternal];

fn report(id: &str, pass: bool, detail: &str) {
    // write to the real stdout so the line survives libtest's capture
    use std::io::Write;
    let _ = writeln!(
        std::io::stdout(),
        "criterion {id}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

/// xorshift so the "random" points are reproducible without pulling in a
/// dependency for the acceptance binary
struct Rng(u64);
impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn criterion_01_operator_algebra() {
    // truncated commutator: [a, a+] = 1 except the top corner, exactly
    let mut ok = true;
    for n in [2usize, 4, 7] {
        let a = annihilation(n).unwrap();
        let comm = a.mul(&a.dagger()).add(&a.dagger().mul(&a).scale(c(-1.0, 0.0)));
        let d = comm.to_dense();
        for i in 0..n {
            for j in 0..n {
                let si = (i as f64).sqrt();
                let si1 = ((i + 1) as f64).sqrt();
                let want = if i == j && i + 1 < n {
                    c(si1 * si1 - si * si, 0.0)
                } else if i == j {
                    c(-(si * si), 0.0)
                } else {
                    c(0.0, 0.0)
                };
                ok &= d[(i, j)] == want;
            }
        }
    }
    // tensor associativity, exact
    let x = annihilation(2).unwrap();
    let y = annihilation(3).unwrap();
    let z = annihilation(4).unwrap();
    let lhs = wgm_blockade::fock::tensor(&wgm_blockade::fock::tensor(&x, &y), &z);
    let rhs = wgm_blockade::fock::tensor(&x, &wgm_blockade::fock::tensor(&y, &z));
    let (ld, rd) = (lhs.to_dense(), rhs.to_dense());
    for i in 0..24 {
        for j in 0..24 {
            ok &= ld[(i, j)] == rd[(i, j)];
        }
    }
    // number-operator diagonal
    let a = annihilation(5).unwrap();
    let num = a.dagger().mul(&a).to_dense();
    for k in 0..5 {
        let sk = (k as f64).sqrt();
        ok &= num[(k, k)] == c(sk * sk, 0.0);
        for j in 0..5 {
            if j != k {
                ok &= num[(k, j)] == c(0.0, 0.0);
            }
        }
    }
    report("1", ok, "operator algebra identities, exact");
}

#[test]
fn criterion_02_lindblad_structure() {
    let p = ModelParams::figure2(0.31, -0.7, LossConvention::IncludeExternal);

    // trace preservation on 50 random Hermitian matrices at N = 4
    let superop = build_liouvillian(&p, 4).unwrap();
    let d = superop.dim;
    let mut rng = Rng(0x5eed);
    let mut worst_tr = 0.0f64;
    for _ in 0..50 {
        let mut m = nalgebra::DMatrix::<C64>::zeros(d, d);
        for r in 0..d {
            for q in 0..d {
                m[(r, q)] = c(rng.next() - 0.5, rng.next() - 0.5);
            }
        }
        let rho = (&m + m.adjoint()) * c(0.5, 0.0);
        let v: Vec<C64> = (0..d * d).map(|i| rho[(i % d, i / d)]).collect();
        let mut out = vec![c(0.0, 0.0); d * d];
        for (val, (row, col)) in superop.data.iter() {
            out[row] += *val * v[col];
        }
        let tr: C64 = (0..d).map(|i| out[i * d + i]).sum();
        worst_tr = worst_tr.max(tr.norm());
    }

    // entrywise agreement with the brute-force matrix-unit oracle at N = 3
    let superop3 = build_liouvillian(&p, 3).unwrap();
    let d3 = superop3.dim;
    let h = build_hamiltonian(&p, 3).unwrap().to_dense();
    let (a_c, a_a) = mode_operators(3).unwrap();
    let rate = lindblad_rate(&p);
    let collapse = [(rate, a_c.to_dense()), (rate, a_a.to_dense())];
    let mut dense = nalgebra::DMatrix::<C64>::zeros(d3 * d3, d3 * d3);
    for (val, (row, col)) in superop3.data.iter() {
        dense[(row, col)] = *val;
    }
    let mut worst_entry = 0.0f64;
    for k in 0..d3 {
        for j in 0..d3 {
            let mut e = nalgebra::DMatrix::<C64>::zeros(d3, d3);
            e[(j, k)] = c(1.0, 0.0);
            let i = c(0.0, 1.0);
            let mut want = (&h * &e - &e * &h) * (-i);
            for (r, x) in &collapse {
                let xd = x.adjoint();
                let xdx = &xd * x;
                want += (x * &e * &xd - (&xdx * &e + &e * &xdx) * c(0.5, 0.0)) * c(*r, 0.0);
            }
            let col = k * d3 + j;
            for row in 0..d3 * d3 {
                worst_entry = worst_entry.max((dense[(row, col)] - want[(row % d3, row / d3)]).norm());
            }
        }
    }

    report(
        "2",
        worst_tr <= 1e-10 && worst_entry < 1e-12,
        &format!("max |Tr(L rho)| = {worst_tr:.2e}, max oracle deviation = {worst_entry:.2e}"),
    );
}

#[test]
fn criterion_03_steady_state_vs_time_integration() {
    // 5 reproducible parameter points at N = 6; trace norm <= 1e-6
    let mut rng = Rng(0xacce97);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let p = ModelParams {
            eps1: c(0.5 + rng.next(), -0.3 * rng.next()),
            eps2: c(0.5 + rng.next(), -0.3 * rng.next()),
            beta: rng.next() * PI / 4.0,
            delta: rng.next() * 2.0 - 1.0,
            kerr: rng.next() * 0.5,
            drive: 0.05 + 0.3 * rng.next(),
            ..ModelParams::figure2(0.0, 0.0, LossConvention::IncludeExternal)
        };
        let superop = build_liouvillian(&p, 6).unwrap();
        let d = superop.dim;
        let n2 = d * d;
        let rho = steady_state(&superop).unwrap();

        let mut v = vec![c(0.0, 0.0); n2];
        v[0] = c(1.0, 0.0);
        let dt = 0.005;
        let steps = 12_000; // t = 60 in units of 1/gamma_in, gap >= gamma/2 ~ 1
        let mut k1 = v.clone();
        let mut k2 = v.clone();
        let mut k3 = v.clone();
        let mut k4 = v.clone();
        let mut tmp = v.clone();
        let mv = |x: &[C64], y: &mut [C64]| {
            y.iter_mut().for_each(|z| *z = c(0.0, 0.0));
            for (val, (row, col)) in superop.data.iter() {
                y[row] += *val * x[col];
            }
        };
        for _ in 0..steps {
            mv(&v, &mut k1);
            for i in 0..n2 {
                tmp[i] = v[i] + 0.5 * dt * k1[i];
            }
            mv(&tmp, &mut k2);
            for i in 0..n2 {
                tmp[i] = v[i] + 0.5 * dt * k2[i];
            }
            mv(&tmp, &mut k3);
            for i in 0..n2 {
                tmp[i] = v[i] + dt * k3[i];
            }
            mv(&tmp, &mut k4);
            for i in 0..n2 {
                v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        // same Hermitize-and-normalize post-processing as the solver
        let mut rk4 = nalgebra::DMatrix::<C64>::zeros(d, d);
        for r in 0..d {
            for q in 0..d {
                rk4[(r, q)] = v[q * d + r];
            }
        }
        let rk4h = (&rk4 + rk4.adjoint()) * c(0.5, 0.0);
        let tr: C64 = (0..d).map(|i| rk4h[(i, i)]).sum();
        let diff = &rk4h / tr - &rho.data;
        let herm = (&diff + diff.adjoint()) * c(0.5, 0.0);
        let trace_norm: f64 = herm
            .symmetric_eigenvalues()
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
            / 2.0;
        worst = worst.max(trace_norm);
    }
    report("3", worst <= 1e-6, &format!("max trace-norm distance = {worst:.2e}"));
}

#[test]
fn criterion_04_coherent_limit() {
    let mut rng = Rng(0xc0ffee);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p = ModelParams {
            eps1: c(0.0, 0.0),
            eps2: c(0.0, 0.0),
            kerr: 0.0,
            drive: 0.05 + 0.4 * rng.next(),
            delta: rng.next() - 0.5,
            ..ModelParams::figure2(0.0, 0.0, LossConvention::IncludeExternal)
        };
        let obs = solve_observables(&p, 6, 14).unwrap();
        assert!(obs.converged);
        worst = worst.max((obs.g2_c - 1.0).abs()).max((obs.g3_c - 1.0).abs());
    }
    report("4", worst < 1e-5, &format!("max |g2,g3 - 1| = {worst:.2e}"));
}

#[test]
fn criterion_05_closed_forms() {
    // linear steady state against the independent closed form
    let mut rng = Rng(0xf00d);
    let mut worst_lin = 0.0f64;
    for _ in 0..20 {
        let p = ModelParams {
            eps1: c(rng.next() * 2.0, -0.2 * rng.next()),
            eps2: c(rng.next() * 2.0, -0.2 * rng.next()),
            beta: rng.next(),
            delta: 2.0 * rng.next() - 1.0,
            kerr: 0.0,
            drive: rng.next(),
            ..ModelParams::figure2(0.0, 0.0, LossConvention::IncludeExternal)
        };
        let st = linear_steady_state(&p).unwrap();
        let (j1, j2) = backscatter_coeffs(&p);
        let g2 = wgm_blockade::model::total_loss(&p) / 2.0;
        let denom = c(g2, p.delta) * c(g2, p.delta) + j1 * j2;
        let want_c = p.drive * c(g2, p.delta) / denom;
        let want_a = c(0.0, -1.0) * p.drive * j1 / denom;
        worst_lin = worst_lin
            .max((st.alpha_c - want_c).norm())
            .max((st.alpha_a - want_a).norm());
    }

    // weak-drive amplitudes against the published closed forms
    let mut worst_amp = 0.0f64;
    for conv in BOTH {
        for beta in [PI / 16.0, PI / 8.0, PI / 4.0] {
            for delta in [-1.0, 0.3, 2.0] {
                let p = ModelParams::figure2(beta, delta, conv);
                let amps = solve_amplitudes(&p).unwrap();
                let (j1, j2) = backscatter_coeffs(&p);
                let jj = j1 * j2;
                let db = c(p.delta, -wgm_blockade::model::total_loss(&p) / 2.0);
                let u = c(p.kerr, 0.0);
                let f = p.drive;
                let i = c(0.0, 1.0);
                let c10 = -i * f * db / (db * db - jj);
                let c20 = f * f * (jj * u + 2.0 * db * db * (db + u))
                    / (c(2.0 * 2.0_f64.sqrt(), 0.0)
                        * (db * db - jj)
                        * (jj * (db + u) - db * (db + u) * (db + u)));
                worst_amp = worst_amp
                    .max((amps.c10 - c10).norm() / c10.norm())
                    .max((amps.c20 - c20).norm() / c20.norm());
            }
        }
    }

    // drive-phase invariance of g2 and g3 (drive strong enough that the
    // g3 numerator sits well above solver noise)
    let p = ModelParams {
        drive: 0.4,
        ..ModelParams::figure2(0.3, 0.3, LossConvention::IncludeExternal)
    };
    let mut worst_phase = 0.0f64;
    let mut baseline = None;
    for phi in [0.0, PI / 3.0, PI] {
        let h = build_hamiltonian_with_drive_phase(&p, 8, phi).unwrap();
        let (a_c, a_a) = mode_operators(8).unwrap();
        let rate = lindblad_rate(&p);
        let superop = liouvillian(&h, &[(rate, a_c.clone()), (rate, a_a)]);
        let rho = steady_state(&superop).unwrap();
        let g2 = correlation_g2(&rho, &a_c).unwrap();
        let g3 = correlation_g3(&rho, &a_c).unwrap();
        match baseline {
            None => baseline = Some((g2, g3)),
            Some((g2_0, g3_0)) => {
                worst_phase = worst_phase
                    .max((g2 - g2_0).abs() / g2_0)
                    .max((g3 - g3_0).abs() / g3_0);
            }
        }
    }

    report(
        "5",
        worst_lin < 1e-12 && worst_amp < 1e-12 && worst_phase < 1e-6,
        &format!(
            "linear dev = {worst_lin:.2e}, amplitude dev = {worst_amp:.2e}, phase dev = {worst_phase:.2e}"
        ),
    );
}

#[test]
fn criterion_06_ep_locator() {
    // the caption digits force |eps1| != |eps2| by 9e-9, which floors the
    // achievable splitting near 1e-5; the coupling clause passes, the
    // splitting clause cannot
    let p = ModelParams::figure2(0.0, 0.0, LossConvention::IncludeExternal);
    let angles = exceptional_angles(&p, &[1, 3, 5, 7]).unwrap();
    let mut worst_minj = 0.0f64;
    let mut worst_split = 0.0f64;
    for beta_c in angles {
        let q = ModelParams { beta: beta_c, ..p };
        let (j1, j2) = backscatter_coeffs(&q);
        worst_minj = worst_minj.max(j1.norm().min(j2.norm()));
        worst_split = worst_split.max(2.0 * (j1 * j2).sqrt().norm());
    }
    let coupling_ok = worst_minj < 1e-6 * p.eps1.norm();
    let splitting_ok = worst_split < 1e-6;
    report(
        "6",
        coupling_ok && splitting_ok,
        &format!(
            "max min(|J1|,|J2|) = {worst_minj:.2e} (need < {:.2e}), max |2 sqrt(J1 J2)| = {worst_split:.2e} (need < 1e-6)",
            1e-6 * p.eps1.norm()
        ),
    );
}

#[test]
fn criterion_07_critical_angle() {
    let p = ModelParams::figure2(0.0, 0.0, LossConvention::IncludeExternal);
    let angles = exceptional_angles(&p, &[1]).unwrap();
    let ok = angles.iter().all(|b| (0.39..=0.40).contains(b));
    report("7", ok, &format!("beta_c = {angles:?}"));
}

/// Truncation gate shared by the Lindblad paper-value criteria: the ladder
/// result must already be converged (drift < 1e-3 between N and N+4).
fn converged_g2(p: &ModelParams) -> f64 {
    let obs = solve_observables(p, 4, 14).unwrap();
    assert!(obs.converged, "truncation gate: ladder did not converge");
    obs.g2_c
}

#[test]
fn criterion_08_weak_drive_agreement() {
    let mut per_conv = Vec::new();
    for conv in BOTH {
        let mut worst = 0.0f64;
        for beta in [PI / 16.0, PI / 8.0, 3.0 * PI / 16.0, PI / 4.0] {
            for k in 0..50 {
                let delta = -2.0 + 4.0 * k as f64 / 49.0;
                let p = ModelParams::figure2(beta, delta, conv);
                let me = converged_g2(&p);
                let analytic = g2_weak(&solve_amplitudes(&p).unwrap()).unwrap();
                worst = worst.max((me - analytic).abs() / analytic.abs());
            }
        }
        per_conv.push((conv, worst));
    }
    let ok = per_conv.iter().any(|(_, w)| *w <= 0.05);
    report(
        "8",
        ok,
        &format!(
            "worst relative deviation {:?}; the verbatim non-Hermitian commutator differs from the pure-state hierarchy at O(Im J)",
            per_conv
        ),
    );
}

#[test]
fn criterion_09_fig3_point_values() {
    let mut passing = None;
    let mut details = Vec::new();
    for conv in BOTH {
        let g2_pi8 = converged_g2(&ModelParams::figure2(PI / 8.0, 0.3, conv));
        let g2_pi4 = converged_g2(&ModelParams::figure2(PI / 4.0, 0.3, conv));
        let mut max_lg = f64::NEG_INFINITY;
        let mut min_lg = f64::INFINITY;
        for k in 0..201 {
            let delta = -2.0 + 4.0 * k as f64 / 200.0;
            let lg = converged_g2(&ModelParams::figure2(PI / 4.0, delta, conv)).log10();
            max_lg = max_lg.max(lg);
            min_lg = min_lg.min(lg);
        }
        let ok = (g2_pi8 - 0.92).abs() <= 0.1
            && g2_pi4 <= 0.006
            && (max_lg - 0.5).abs() <= 0.3
            && (min_lg - (-3.0)).abs() <= 0.5;
        details.push(format!(
            "{conv:?}: g2(pi/8) = {g2_pi8:.4}, g2(pi/4) = {g2_pi4:.5}, max log10 = {max_lg:.2}, min log10 = {min_lg:.2}"
        ));
        if ok && passing.is_none() {
            passing = Some(conv);
        }
    }
    report(
        "9",
        passing.is_some(),
        &format!("passing convention {passing:?}; {}", details.join("; ")),
    );
}

#[test]
fn criterion_10_fig5_shape() {
    let mut passing = None;
    let mut details = Vec::new();
    for conv in BOTH {
        let curve = |beta: f64| -> Vec<f64> {
            (0..26)
                .map(|k| {
                    let u = 0.02 + (0.5 - 0.02) * k as f64 / 25.0;
                    converged_g2(&ModelParams {
                        kerr: u,
                        ..ModelParams::figure2(beta, 0.4, conv)
                    })
                })
                .collect()
        };
        let v8 = curve(PI / 8.0);
        let v316 = curve(3.0 * PI / 16.0);
        let mono = v8.windows(2).all(|w| w[1] < w[0]);
        let interior_min =
            (1..v316.len() - 1).any(|i| v316[i] < v316[i - 1] && v316[i] < v316[i + 1]);
        details.push(format!("{conv:?}: pi/8 monotone = {mono}, 3pi/16 interior min = {interior_min}"));
        if mono && interior_min && passing.is_none() {
            passing = Some(conv);
        }
    }
    report(
        "10",
        passing.is_some(),
        &format!("passing convention {passing:?}; {}", details.join("; ")),
    );
}

/// Strong-drive observables with the truncation gate applied explicitly:
/// the CW ladder is evaluated at N and N+4 with a small CCW space (both
/// couplings are ~1e-3 at beta = pi/8, the CCW mode stays near vacuum).
fn strong_drive_obs(p: &ModelParams) -> SteadyObservables {
    let lo = observables_at_asym(p, 16, 4).unwrap();
    let hi = observables_at_asym(p, 20, 4).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(
        rel(lo.g2_c, hi.g2_c) < 1e-3 && rel(lo.g3_c, hi.g3_c) < 1e-3,
        "truncation gate failed at strong drive"
    );
    hi
}

#[test]
fn criterion_11_two_photon_blockade() {
    let mut passing = None;
    let mut details = Vec::new();
    for conv in BOTH {
        // far red-detuned at F = 2 the CCW mode stays weakly populated even
        // off the critical angle (|J| ~ 0.7 against |2 delta| ~ 5.6), so a
        // small CCW space suffices; gate = drift between (10,5) and (14,7)
        let obs_gated = |p: &ModelParams| {
            let lo = observables_at_asym(p, 10, 5).unwrap();
            let hi = observables_at_asym(p, 14, 7).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(
                rel(lo.g2_c, hi.g2_c) < 1e-3 && rel(lo.g3_c, hi.g3_c) < 1e-3,
                "truncation gate failed at strong drive"
            );
            hi
        };
        // (a) some delta near -2.8 with g2 > 1 and g3 < 1 at U = 0.059
        let mut found_delta = None;
        for k in 0..21 {
            let delta = -3.3 + k as f64 / 20.0;
            let p = ModelParams {
                drive: 2.0,
                kerr: 0.059,
                ..ModelParams::figure2(PI / 8.0, delta, conv)
            };
            let obs = obs_gated(&p);
            if obs.g2_c > 1.0 && obs.g3_c < 1.0 {
                found_delta = Some(delta);
                break;
            }
        }
        // (b) beta sweep at delta = -2.8 crossing from g2 < 1 into the
        // two-photon-blockade region
        let mut saw_low = false;
        let mut crossing = false;
        for k in 0..13 {
            let beta = PI / 8.0 - 0.06 + 0.12 * k as f64 / 12.0;
            let p = ModelParams {
                drive: 2.0,
                kerr: 0.059,
                ..ModelParams::figure2(beta, -2.8, conv)
            };
            let obs = obs_gated(&p);
            if obs.g2_c < 1.0 {
                saw_low = true;
            }
            if saw_low && obs.g2_c > 1.0 && obs.g3_c < 1.0 {
                crossing = true;
            }
        }
        details.push(format!(
            "{conv:?}: blockade delta = {found_delta:?}, beta crossing = {crossing}"
        ));
        if found_delta.is_some() && crossing && passing.is_none() {
            passing = Some(conv);
        }
    }
    report(
        "11",
        passing.is_some(),
        &format!("passing convention {passing:?}; {}", details.join("; ")),
    );
}

#[test]
fn criterion_12_kerr_window() {
    let mut passing = None;
    let mut details = Vec::new();
    for conv in BOTH {
        let mut window: Vec<f64> = Vec::new();
        for k in 0..26 {
            let u = 0.40 + 0.10 * k as f64 / 25.0;
            let p = ModelParams {
                drive: 2.0,
                kerr: u,
                ..ModelParams::figure2(PI / 8.0, -2.8, conv)
            };
            let obs = strong_drive_obs(&p);
            if obs.g2_c > 1.0 && obs.g3_c < 1.0 {
                window.push(u);
            }
        }
        let ok = window.len() >= 2; // a genuine interval, not an isolated point
        details.push(format!(
            "{conv:?}: U window = {:?}..{:?} ({} points)",
            window.first(),
            window.last(),
            window.len()
        ));
        if ok && passing.is_none() {
            passing = Some(conv);
        }
    }
    report(
        "12",
        passing.is_some(),
        &format!("passing convention {passing:?}; {}", details.join("; ")),
    );
}

#[test]
fn criterion_13_transmission_switching() {
    let mut passing = None;
    let mut details = Vec::new();
    for conv in BOTH {
        let tr = |beta: f64, delta: f64| {
            let p = ModelParams::figure2(beta, delta, conv);
            transmission(&p, &nonlinear_steady_state(&p, &[]).unwrap()[0]).unwrap()
        };
        let t16 = tr(PI / 16.0, 2.0);
        let t8 = tr(PI / 8.0, 2.0);
        let vals: Vec<f64> = (0..401)
            .map(|k| tr(PI / 8.0, 1.0 + 2.0 * k as f64 / 400.0))
            .collect();
        let local_max =
            (1..vals.len() - 1).any(|i| vals[i] > vals[i - 1] && vals[i] > vals[i + 1]);
        details.push(format!(
            "{conv:?}: T(pi/16) = {t16:.4}, T(pi/8) = {t8:.4}, interior local max in [1,3] = {local_max}"
        ));
        if t16 < t8 && local_max && passing.is_none() {
            passing = Some(conv);
        }
    }
    report(
        "13",
        passing.is_some(),
        &format!("passing convention {passing:?}; {}", details.join("; ")),
    );
}
