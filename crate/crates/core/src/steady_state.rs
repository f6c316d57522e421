//! Mean-field steady states of the zero-noise Langevin equations.
//!
//! The steady fields follow in closed form from the effective detunings;
//! the mirror displacements are the self-consistent unknowns. Two solvers
//! are provided: a damped Picard iteration that walks to the branch nearest
//! its seed, and an exhaustive enumeration that also lands on branches the
//! Picard map repels (needed to recover the full multistable set).

use nalgebra::SMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// How cavity B's effective detuning is built during a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetuningMode {
    /// Physical model: Delta2_eff = Delta2 + G2 (x2 - x1).
    Free,
    /// Constrained model with both effective detunings equal
    /// (Theta1 = Theta2), the regime of the displacement polynomial.
    /// The bare Delta2 realizing each branch is root-dependent and is
    /// recovered through [`SteadyState::realized_params`].
    ThetaLocked,
}

/// A converged mean-field state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    /// Intracavity amplitudes [sqrt(photons)].
    pub a_bar: Complex64,
    pub b_bar: Complex64,
    /// Mean mirror displacements [m].
    pub x1_bar: f64,
    pub x2_bar: f64,
    /// Effective detunings [rad/s].
    pub delta1_eff: f64,
    pub delta2_eff: f64,
    /// Photon numbers |a|^2, |b|^2.
    pub n_a: f64,
    pub n_b: f64,
    /// Scaled max-norm of the zero-noise Langevin right-hand sides.
    pub residual_norm: f64,
}

impl SteadyState {
    /// Parameters for which this state is an exact fixed point. Identical
    /// to `base` for free-mode states; for Theta-locked states the bare
    /// Delta2 is replaced by the value that realizes the locked detuning.
    pub fn realized_params(&self, base: &SystemParams) -> SystemParams {
        let mut p = base.clone();
        p.delta2 = self.delta2_eff - p.g2 * (self.x2_bar - self.x1_bar);
        p
    }
}

/// Steady cavity fields for given effective detunings, the closed-form
/// solution of the coupled-mode steady state.
pub fn fields_from_detunings(
    params: &SystemParams,
    delta1_eff: f64,
    delta2_eff: f64,
) -> Result<(Complex64, Complex64)> {
    let kappa = params.kappa;
    let g = params.g_tunnel;
    let theta1 = Complex64::new(-kappa / 2.0, delta1_eff);
    let theta2 = Complex64::new(-kappa / 2.0, delta2_eff);
    let den = theta1 * theta2 + g * g;
    let scale = kappa * kappa;
    if !den.is_finite() || den.norm() < 1e-30 * scale {
        return Err(Error::DegenerateDenominator(den.norm()));
    }
    let drive = kappa.sqrt() * params.eps_c();
    let a = -theta2 * drive / den;
    let b = -Complex64::i() * g * drive / den;
    Ok((a, b))
}

/// Steady fields at candidate displacements, free-mode detunings.
pub fn cavity_fields(params: &SystemParams, x1: f64, x2: f64) -> Result<(Complex64, Complex64)> {
    let d1 = params.delta1 + params.g1 * x1;
    let d2 = params.delta2 + params.g2 * (x2 - x1);
    fields_from_detunings(params, d1, d2)
}

fn detunings(params: &SystemParams, mode: DetuningMode, x1: f64, x2: f64) -> (f64, f64) {
    let d1 = params.delta1 + params.g1 * x1;
    let d2 = match mode {
        DetuningMode::Free => params.delta2 + params.g2 * (x2 - x1),
        DetuningMode::ThetaLocked => d1,
    };
    (d1, d2)
}

/// One application of the self-consistency map: fields at (x1, x2), then
/// the displacements those fields would hold in equilibrium.
fn displacement_map(
    params: &SystemParams,
    mode: DetuningMode,
    x1: f64,
    x2: f64,
) -> Result<(f64, f64)> {
    let (d1, d2) = detunings(params, mode, x1, x2);
    let (a, b) = fields_from_detunings(params, d1, d2)?;
    let (n_a, n_b) = (a.norm_sqr(), b.norm_sqr());
    let hbar = params.hbar;
    let x1_new = hbar * (params.g1 * n_a - params.g2 * n_b) / (params.m1 * params.omega1.powi(2));
    let x2_new = hbar * params.g2 * n_b / (params.m2 * params.omega2.powi(2));
    Ok((x1_new, x2_new))
}

/// Assemble a full state record at the given displacements.
fn make_state(params: &SystemParams, mode: DetuningMode, x1: f64, x2: f64) -> Result<SteadyState> {
    let (d1, d2) = detunings(params, mode, x1, x2);
    let (a, b) = fields_from_detunings(params, d1, d2)?;
    let mut state = SteadyState {
        a_bar: a,
        b_bar: b,
        x1_bar: x1,
        x2_bar: x2,
        delta1_eff: d1,
        delta2_eff: d2,
        n_a: a.norm_sqr(),
        n_b: b.norm_sqr(),
        residual_norm: f64::NAN,
    };
    let realized = state.realized_params(params);
    state.residual_norm = scaled_residual_norm(&realized, &state);
    Ok(state)
}

/// Zero-noise Langevin right-hand sides at a candidate state, SI units:
/// `[Re a_dot, Im a_dot, Re b_dot, Im b_dot, p1_dot, p2_dot]`.
/// Momenta are zero in a steady candidate, so the x_dot rows vanish
/// identically and are omitted.
pub fn langevin_residual(params: &SystemParams, state: &SteadyState) -> [f64; 6] {
    let d1 = params.delta1 + params.g1 * state.x1_bar;
    let d2 = params.delta2 + params.g2 * (state.x2_bar - state.x1_bar);
    let theta1 = Complex64::new(-params.kappa / 2.0, d1);
    let theta2 = Complex64::new(-params.kappa / 2.0, d2);
    let drive = params.kappa.sqrt() * params.eps_c();
    let ig = Complex64::i() * params.g_tunnel;
    let a_dot = theta1 * state.a_bar - ig * state.b_bar + drive;
    let b_dot = theta2 * state.b_bar - ig * state.a_bar;
    let hbar = params.hbar;
    let n_a = state.a_bar.norm_sqr();
    let n_b = state.b_bar.norm_sqr();
    let p1_dot =
        -params.m1 * params.omega1.powi(2) * state.x1_bar + hbar * (params.g1 * n_a - params.g2 * n_b);
    let p2_dot = -params.m2 * params.omega2.powi(2) * state.x2_bar + hbar * params.g2 * n_b;
    [a_dot.re, a_dot.im, b_dot.re, b_dot.im, p1_dot, p2_dot]
}

/// Natural scales for the 8 state components (Re a, Im a, Re b, Im b,
/// x1, p1, x2, p2): amplitudes in units of the resonant single-cavity
/// amplitude, lengths in kappa/G1, momenta in m Omega x_scale.
pub fn state_scales(params: &SystemParams) -> [f64; 8] {
    let a_s = (2.0 * params.eps_c() / params.kappa.sqrt()).max(1.0);
    let x_s = params.x_scale();
    let p1_s = params.m1 * params.omega1 * x_s;
    let p2_s = params.m2 * params.omega2 * x_s;
    [a_s, a_s, a_s, a_s, x_s, p1_s, x_s, p2_s]
}

/// Max-norm of the Langevin residual in natural units (frequencies by
/// Omega1, lengths by kappa/G1).
pub fn scaled_residual_norm(params: &SystemParams, state: &SteadyState) -> f64 {
    let r = langevin_residual(params, state);
    let s = state_scales(params);
    let w = params.omega1;
    let scaled = [
        r[0] / (s[0] * w),
        r[1] / (s[0] * w),
        r[2] / (s[2] * w),
        r[3] / (s[2] * w),
        r[4] / (s[5] * w),
        r[5] / (s[7] * w),
    ];
    scaled.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Damped Picard iteration of the displacement map, seeded at
/// `(x1_init, x2_init)`. Converges to the branch nearest the seed;
/// branches the map repels are unreachable here (use
/// [`enumerate_steady_states`] for the full set).
pub fn solve_fixed_point(
    params: &SystemParams,
    mode: DetuningMode,
    x1_init: f64,
    x2_init: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    assert!(tol > 0.0 && max_iter >= 1);
    let mut x = (x1_init, x2_init);
    let mut res = make_state(params, mode, x.0, x.1)?.residual_norm;
    let mut lambda = 0.5;
    for iter in 0..max_iter {
        if res < tol {
            return make_state(params, mode, x.0, x.1);
        }
        let target = displacement_map(params, mode, x.0, x.1)?;
        // The undamped image may already be converged (it is exact whenever
        // the fields do not feed back on the displacements); take it.
        let target_res = make_state(params, mode, target.0, target.1)?.residual_norm;
        if target_res < tol {
            return make_state(params, mode, target.0, target.1);
        }
        let proposal = (
            (1.0 - lambda) * x.0 + lambda * target.0,
            (1.0 - lambda) * x.1 + lambda * target.1,
        );
        let proposal_res = make_state(params, mode, proposal.0, proposal.1)?.residual_norm;
        if proposal_res <= res {
            x = proposal;
            res = proposal_res;
        } else {
            lambda /= 2.0;
            if lambda < 1e-6 {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    last_residual: res,
                });
            }
        }
    }
    if res < tol {
        return make_state(params, mode, x.0, x.1);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_residual: res,
    })
}

/// Damped Newton on R(x) = x - F(x) with a finite-difference 2x2 Jacobian.
/// Lands on any regular fixed point with a close enough seed, including
/// those the Picard map repels.
fn newton_fixed_point(
    params: &SystemParams,
    mode: DetuningMode,
    mut x1: f64,
    mut x2: f64,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    let x_s = params.x_scale();
    let residual = |x1: f64, x2: f64| -> Result<(f64, f64)> {
        let (f1, f2) = displacement_map(params, mode, x1, x2)?;
        Ok((x1 - f1, x2 - f2))
    };
    for _ in 0..max_iter {
        let (r1, r2) = residual(x1, x2)?;
        let norm = (r1.abs().max(r2.abs())) / x_s;
        if norm < tol {
            return make_state(params, mode, x1, x2);
        }
        let h1 = 1e-7 * x1.abs().max(x_s);
        let h2 = 1e-7 * x2.abs().max(x_s);
        let (r1_p1, r2_p1) = residual(x1 + h1, x2)?;
        let (r1_m1, r2_m1) = residual(x1 - h1, x2)?;
        let (r1_p2, r2_p2) = residual(x1, x2 + h2)?;
        let (r1_m2, r2_m2) = residual(x1, x2 - h2)?;
        let j11 = (r1_p1 - r1_m1) / (2.0 * h1);
        let j21 = (r2_p1 - r2_m1) / (2.0 * h1);
        let j12 = (r1_p2 - r1_m2) / (2.0 * h2);
        let j22 = (r2_p2 - r2_m2) / (2.0 * h2);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < 1e-300 {
            return Err(Error::SingularSystem { condition: None });
        }
        let dx1 = (r1 * j22 - r2 * j12) / det;
        let dx2 = (j11 * r2 - j21 * r1) / det;
        // Backtrack on the residual norm.
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..20 {
            let (c1, c2) = (x1 - step * dx1, x2 - step * dx2);
            if let Ok((t1, t2)) = residual(c1, c2) {
                if t1.abs().max(t2.abs()) < r1.abs().max(r2.abs()) {
                    x1 = c1;
                    x2 = c2;
                    moved = true;
                    break;
                }
            }
            step /= 2.0;
        }
        if !moved {
            return Err(Error::NoConvergence {
                iterations: max_iter,
                last_residual: norm,
            });
        }
    }
    let (r1, r2) = residual(x1, x2)?;
    let norm = (r1.abs().max(r2.abs())) / x_s;
    if norm < tol {
        return make_state(params, mode, x1, x2);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        last_residual: norm,
    })
}

/// Deterministic seed grid spanning the physically reachable displacement
/// range `[0, hbar G1 4 eps_c^2 / (m1 Omega1^2 kappa)]`, extended on the
/// negative side for G2-dominated states, plus zero.
pub fn seed_grid(params: &SystemParams, n: usize) -> Vec<f64> {
    let eps_c2 = params.eps_c().powi(2);
    let x_max =
        params.hbar * params.g1 * 4.0 * eps_c2 / (params.m1 * params.omega1.powi(2) * params.kappa);
    let mut seeds = vec![0.0];
    if x_max > 0.0 && n > 1 {
        let lo = -0.5 * x_max;
        let hi = 1.1 * x_max;
        for i in 0..n {
            seeds.push(lo + (hi - lo) * i as f64 / (n - 1) as f64);
        }
    }
    seeds
}

/// Find every distinct steady state, deduplicated in units of x_scale and
/// sorted ascending in x1.
///
/// In the locked mode the self-consistency condition is one-dimensional in
/// x1 (the second displacement is slaved), so the enumeration scans a dense
/// grid over the reachable range and bisects every sign change of
/// x1 - F1(x1) — exhaustive for simple roots. In the free mode each seed of
/// the deterministic grid feeds a 2D Newton solve instead.
pub fn enumerate_steady_states(
    params: &SystemParams,
    mode: DetuningMode,
    n_seeds: usize,
    tol: f64,
) -> Vec<SteadyState> {
    let x_s = params.x_scale();
    let dedup_tol = 1e-6;
    let mut found: Vec<SteadyState> = Vec::new();
    let push = |state: SteadyState, found: &mut Vec<SteadyState>| {
        let duplicate = found.iter().any(|s| {
            ((s.x1_bar - state.x1_bar) / x_s).abs() < dedup_tol
                && ((s.x2_bar - state.x2_bar) / x_s).abs() < dedup_tol
        });
        if !duplicate {
            found.push(state);
        }
    };
    match mode {
        DetuningMode::ThetaLocked => {
            // r(x1) = x1 - F1(x1); in locked mode the fields depend on x1
            // alone, so sign-change bracketing on the reachable span finds
            // every simple fixed point.
            let r = |x1: f64| -> Option<f64> {
                displacement_map(params, mode, x1, 0.0)
                    .ok()
                    .map(|(f1, _)| x1 - f1)
            };
            let eps_c2 = params.eps_c().powi(2);
            let x_max = params.hbar * params.g1 * 4.0 * eps_c2
                / (params.m1 * params.omega1.powi(2) * params.kappa);
            if x_max == 0.0 {
                if let Ok(state) = newton_fixed_point(params, mode, 0.0, 0.0, tol, 60) {
                    push(state, &mut found);
                }
            } else {
                let n = (n_seeds * 32).max(2048);
                let lo = -0.5 * x_max;
                let hi = 1.05 * x_max;
                let mut prev: Option<(f64, f64)> = None;
                for i in 0..=n {
                    let x = lo + (hi - lo) * i as f64 / n as f64;
                    let Some(rx) = r(x) else {
                        prev = None;
                        continue;
                    };
                    if let Some((xp, rp)) = prev {
                        if rp == 0.0 || rp.signum() != rx.signum() {
                            // Bisect the bracket, then polish with Newton.
                            let (mut a, mut b, mut ra) = (xp, x, rp);
                            for _ in 0..80 {
                                let m = 0.5 * (a + b);
                                let Some(rm) = r(m) else { break };
                                if rm == 0.0 {
                                    a = m;
                                    b = m;
                                    break;
                                }
                                if rm.signum() == ra.signum() {
                                    a = m;
                                    ra = rm;
                                } else {
                                    b = m;
                                }
                            }
                            let mid = 0.5 * (a + b);
                            if let Ok(state) = newton_fixed_point(params, mode, mid, 0.0, tol, 60)
                            {
                                push(state, &mut found);
                            }
                        }
                    }
                    prev = Some((x, rx));
                }
                // The scan endpoints themselves may sit on a root.
                if found.is_empty() {
                    if let Ok(state) = newton_fixed_point(params, mode, 0.0, 0.0, tol, 60) {
                        push(state, &mut found);
                    }
                }
            }
        }
        DetuningMode::Free => {
            for seed in seed_grid(params, n_seeds) {
                let Ok(state) = newton_fixed_point(params, mode, seed, 0.0, tol, 60) else {
                    continue;
                };
                push(state, &mut found);
            }
        }
    }
    found.sort_by(|a, b| a.x1_bar.total_cmp(&b.x1_bar));
    found
}

/// Zero-noise Langevin flow in the 8 real variables
/// (Re a, Im a, Re b, Im b, x1, p1, x2, p2), SI units.
pub fn flow(params: &SystemParams, z: &[f64; 8]) -> [f64; 8] {
    let (ar, ai, br, bi, x1, p1, x2, p2) = (z[0], z[1], z[2], z[3], z[4], z[5], z[6], z[7]);
    let d1 = params.delta1 + params.g1 * x1;
    let d2 = params.delta2 + params.g2 * (x2 - x1);
    let k2 = params.kappa / 2.0;
    let g = params.g_tunnel;
    let drive = params.kappa.sqrt() * params.eps_c();
    let hbar = params.hbar;
    [
        -d1 * ai - k2 * ar + g * bi + drive,
        d1 * ar - k2 * ai - g * br,
        -d2 * bi - k2 * br + g * ai,
        d2 * br - k2 * bi - g * ar,
        p1 / params.m1,
        -params.m1 * params.omega1.powi(2) * x1 + hbar * params.g1 * (ar * ar + ai * ai)
            - hbar * params.g2 * (br * br + bi * bi)
            - params.gamma1 / 2.0 * p1,
        p2 / params.m2,
        -params.m2 * params.omega2.powi(2) * x2 + hbar * params.g2 * (br * br + bi * bi)
            - params.gamma2 / 2.0 * p2,
    ]
}

/// State vector of a steady candidate (momenta zero).
pub fn state_vector(state: &SteadyState) -> [f64; 8] {
    [
        state.a_bar.re,
        state.a_bar.im,
        state.b_bar.re,
        state.b_bar.im,
        state.x1_bar,
        0.0,
        state.x2_bar,
        0.0,
    ]
}

/// Analytic Jacobian of [`flow`] at a steady candidate, SI units.
///
/// The detuning entries use the state's effective detunings, so the matrix
/// describes the physical system that realizes the state regardless of the
/// solve mode.
pub fn jacobian(params: &SystemParams, state: &SteadyState) -> SMatrix<f64, 8, 8> {
    let k2 = params.kappa / 2.0;
    let g = params.g_tunnel;
    let (g1, g2) = (params.g1, params.g2);
    let hbar = params.hbar;
    let d1 = state.delta1_eff;
    let d2 = state.delta2_eff;
    let (ar, ai) = (state.a_bar.re, state.a_bar.im);
    let (br, bi) = (state.b_bar.re, state.b_bar.im);
    let mut j = SMatrix::<f64, 8, 8>::zeros();
    // d a_r / dt
    j[(0, 0)] = -k2;
    j[(0, 1)] = -d1;
    j[(0, 3)] = g;
    j[(0, 4)] = -g1 * ai;
    // d a_i / dt
    j[(1, 0)] = d1;
    j[(1, 1)] = -k2;
    j[(1, 2)] = -g;
    j[(1, 4)] = g1 * ar;
    // d b_r / dt
    j[(2, 1)] = g;
    j[(2, 2)] = -k2;
    j[(2, 3)] = -d2;
    j[(2, 4)] = g2 * bi;
    j[(2, 6)] = -g2 * bi;
    // d b_i / dt
    j[(3, 0)] = -g;
    j[(3, 2)] = d2;
    j[(3, 3)] = -k2;
    j[(3, 4)] = -g2 * br;
    j[(3, 6)] = g2 * br;
    // d x1 / dt
    j[(4, 5)] = 1.0 / params.m1;
    // d p1 / dt
    j[(5, 0)] = 2.0 * hbar * g1 * ar;
    j[(5, 1)] = 2.0 * hbar * g1 * ai;
    j[(5, 2)] = -2.0 * hbar * g2 * br;
    j[(5, 3)] = -2.0 * hbar * g2 * bi;
    j[(5, 4)] = -params.m1 * params.omega1.powi(2);
    j[(5, 5)] = -params.gamma1 / 2.0;
    // d x2 / dt
    j[(6, 7)] = 1.0 / params.m2;
    // d p2 / dt
    j[(7, 2)] = 2.0 * hbar * g2 * br;
    j[(7, 3)] = 2.0 * hbar * g2 * bi;
    j[(7, 6)] = -params.m2 * params.omega2.powi(2);
    j[(7, 7)] = -params.gamma2 / 2.0;
    j
}

/// Similarity-scaled Jacobian `S^-1 J S / Omega1`. Same eigenvalues as the
/// SI matrix up to the overall 1/Omega1 factor, but numerically balanced.
pub fn jacobian_scaled(params: &SystemParams, state: &SteadyState) -> SMatrix<f64, 8, 8> {
    let j = jacobian(params, state);
    let s = state_scales(params);
    let mut out = SMatrix::<f64, 8, 8>::zeros();
    for r in 0..8 {
        for c in 0..8 {
            out[(r, c)] = j[(r, c)] * s[c] / (s[r] * params.omega1);
        }
    }
    out
}

/// Largest real part over the Jacobian spectrum [rad/s], the stability
/// indicator: negative means asymptotically stable.
pub fn max_eigenvalue_real(params: &SystemParams, state: &SteadyState) -> Result<f64> {
    let j = jacobian_scaled(params, state);
    let schur = nalgebra::Schur::try_new(j, 1e-14, 10_000).ok_or_else(|| {
        Error::NumericalFailure("Schur decomposition of the Jacobian did not converge".into())
    })?;
    let eigs = schur
        .complex_eigenvalues();
    let max_re = eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(max_re * params.omega1)
}
