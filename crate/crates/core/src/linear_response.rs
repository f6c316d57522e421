//! Linearized probe response: sideband amplitudes, input-output fields,
//! the response function eps_T and the normalized backward reflection /
//! forward transmission coefficients T_b, T_f.
//!
//! The production path is the direct 6x6 sideband solve, valid for any
//! effective detunings. The closed forms assume equal effective detunings
//! and are kept for cross-validation and figure reproduction; the two must
//! agree to rounding in that regime.

use nalgebra::{Matrix6, Vector6};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::steady_state::SteadyState;

/// Which mirror a mechanical quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mirror {
    M1,
    M2,
}

/// Mechanical susceptibility chi_j(Omega) = 1 / (m_j (Omega_j^2 - Omega^2
/// - i gamma_j Omega / 2)) [1/(kg (rad/s)^2)].
pub fn susceptibility(params: &SystemParams, mirror: Mirror, omega: f64) -> Complex64 {
    let (m, w, gamma) = match mirror {
        Mirror::M1 => (params.m1, params.omega1, params.gamma1),
        Mirror::M2 => (params.m2, params.omega2, params.gamma2),
    };
    let den = Complex64::new(w * w - omega * omega, -gamma * omega / 2.0);
    1.0 / (m * den)
}

/// Optical and mechanical sideband amplitudes at one probe detuning.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidebandSolution {
    /// Probe-control detuning [rad/s].
    pub omega: f64,
    /// Lower/upper optical sidebands of cavity A [sqrt(photons)].
    pub a_minus: Complex64,
    pub a_plus: Complex64,
    /// Same for cavity B.
    pub b_minus: Complex64,
    pub b_plus: Complex64,
    /// Mechanical response amplitudes [m].
    pub q1: Complex64,
    pub q2: Complex64,
}

/// Scaled 6x6 system in (A1-, conj(A1+), B1-, conj(B1+), q1/x_zpf,
/// q2/x_zpf); optical rows divided by kappa, mechanical rows by
/// hbar kappa / x_zpf.
fn assemble_system(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> (Matrix6<Complex64>, Vector6<Complex64>) {
    let kappa = params.kappa;
    let i = Complex64::i();
    let x_zpf = params.x_zpf();
    let gt = params.g_tunnel / kappa;
    let c1 = params.g1 * x_zpf / kappa;
    let c2 = params.g2 * x_zpf / kappa;
    let a = state.a_bar;
    let b = state.b_bar;
    // D1 = i(D1_eff + w) - k/2, D2* = i(w - D1_eff) - k/2, and the cavity-B
    // analogues with D2_eff.
    let d1 = Complex64::new(-kappa / 2.0, state.delta1_eff + omega) / kappa;
    let d2c = Complex64::new(-kappa / 2.0, omega - state.delta1_eff) / kappa;
    let d3 = Complex64::new(-kappa / 2.0, state.delta2_eff + omega) / kappa;
    let d4c = Complex64::new(-kappa / 2.0, omega - state.delta2_eff) / kappa;
    let chi1_row = Complex64::new(
        params.omega1 * params.omega1 - omega * omega,
        -params.gamma1 * omega / 2.0,
    ) / (2.0 * params.omega1 * kappa);
    let chi2_row = (params.m2 / params.m1)
        * Complex64::new(
            params.omega2 * params.omega2 - omega * omega,
            -params.gamma2 * omega / 2.0,
        )
        / (2.0 * params.omega1 * kappa);

    let zero = Complex64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = Matrix6::new(
        d1,        zero,      -i * gt,   zero,      i * c1 * a,        zero,
        zero,      d2c,       zero,      i * gt,    -i * c1 * a.conj(), zero,
        -i * gt,   zero,      d3,        zero,      -i * c2 * b,       i * c2 * b,
        zero,      i * gt,    zero,      d4c,       i * c2 * b.conj(), -i * c2 * b.conj(),
        -c1 * a.conj(), -c1 * a, c2 * b.conj(), c2 * b, chi1_row,      zero,
        zero,      zero,      -c2 * b.conj(), -c2 * b, zero,           chi2_row,
    );
    let eps_p = params.eps_p(omega);
    let mut rhs = Vector6::from_element(zero);
    rhs[0] = Complex64::new(-eps_p / kappa.sqrt(), 0.0);
    (m, rhs)
}

/// Solve the six coupled sideband equations exactly. No equal-detuning
/// assumption is made here.
pub fn solve_sidebands_direct(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Result<SidebandSolution> {
    let (m, rhs) = assemble_system(params, state, omega);
    let u = m
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { condition: None })?;
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularSystem { condition: None });
    }
    let x_zpf = params.x_zpf();
    Ok(SidebandSolution {
        omega,
        a_minus: u[0],
        a_plus: u[1].conj(),
        b_minus: u[2],
        b_plus: u[3].conj(),
        q1: u[4] * x_zpf,
        q2: u[5] * x_zpf,
    })
}

/// Largest per-equation relative residual of a sideband solution, the
/// back-substitution oracle.
pub fn back_substitution_residual(
    params: &SystemParams,
    state: &SteadyState,
    sol: &SidebandSolution,
) -> f64 {
    let (m, rhs) = assemble_system(params, state, sol.omega);
    let x_zpf = params.x_zpf();
    let u = Vector6::from_row_slice(&[
        sol.a_minus,
        sol.a_plus.conj(),
        sol.b_minus,
        sol.b_plus.conj(),
        sol.q1 / x_zpf,
        sol.q2 / x_zpf,
    ]);
    let mut worst = 0.0_f64;
    for row in 0..6 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut mag = 0.0;
        for col in 0..6 {
            acc += m[(row, col)] * u[col];
            mag += m[(row, col)].norm() * u[col].norm();
        }
        mag += rhs[row].norm();
        if mag > 0.0 {
            worst = worst.max((acc - rhs[row]).norm() / mag);
        }
    }
    worst
}

/// Probe response eps_T = sqrt(kappa) A1- / eps_p from the direct solve.
pub fn response_eps_t(params: &SystemParams, state: &SteadyState, omega: f64) -> Result<Complex64> {
    let eps_p = params.eps_p(omega);
    if eps_p <= 0.0 {
        return Err(Error::NonPositiveParameter("Pp"));
    }
    let sol = solve_sidebands_direct(params, state, omega)?;
    Ok(params.kappa.sqrt() * sol.a_minus / eps_p)
}

/// Normalized (T_b, T_f) from the direct solve:
/// T_b = |1 - sqrt(k) A1-/eps_p|^2, T_f = |sqrt(k) B1-/eps_p|^2.
pub fn transmission_direct(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Result<(f64, f64)> {
    let eps_p = params.eps_p(omega);
    if eps_p <= 0.0 {
        return Err(Error::NonPositiveParameter("Pp"));
    }
    let sol = solve_sidebands_direct(params, state, omega)?;
    let sk = params.kappa.sqrt();
    let t_b = (Complex64::new(1.0, 0.0) - sk * sol.a_minus / eps_p).norm_sqr();
    let t_f = (sk * sol.b_minus / eps_p).norm_sqr();
    Ok((t_b, t_f))
}

/// Closed forms for (T_b, T_f) with all helper coefficients.
/// Valid under equal effective detunings; both D blocks are built from the
/// state's Delta1_eff.
pub fn transmission_closed_form(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Result<(f64, f64)> {
    if params.g1 <= 0.0 || params.g2 <= 0.0 {
        return Err(Error::PoleEncountered("1/(hbar G chi)"));
    }
    let kappa = params.kappa;
    let i = Complex64::i();
    let g = params.g_tunnel;
    let (g1, g2) = (params.g1, params.g2);
    let a = state.a_bar;
    let b = state.b_bar;
    let n_a = state.n_a;
    let n_b = state.n_b;
    let ab_conj = a * b.conj(); // a b*
    let aconj_b = a.conj() * b; // a* b
    let d1 = Complex64::new(-kappa / 2.0, state.delta1_eff + omega);
    let d2c = Complex64::new(-kappa / 2.0, omega - state.delta1_eff);
    let e1 = d1 * d1 + g * g;
    let e2 = d2c * d2c + g * g;
    let chi1 = susceptibility(params, Mirror::M1, omega);
    let chi2 = susceptibility(params, Mirror::M2, omega);
    let hbar = params.hbar;

    let big_a = -(g * g1 * ab_conj + i * d1 * g2 * n_b) / e1
        - (g * g1 * aconj_b - i * g2 * d2c * n_b) / e2;
    let big_b = i * g2 * d2c * n_b / e2 - i * d1 * g2 * n_b / e1 - 1.0 / (hbar * g2 * chi2);
    let b_scale = (g2 * d2c * n_b / e2).norm()
        + (d1 * g2 * n_b / e1).norm()
        + (1.0 / (hbar * g2 * chi2)).norm();
    if big_b.norm() < 1e-12 * b_scale {
        return Err(Error::PoleEncountered("B"));
    }
    let one_minus_ab = Complex64::new(1.0, 0.0) - big_a / big_b;

    let c11 = (g * g1 * aconj_b + i * g2 * d1 * n_b) / (big_b * e1);
    let c22 = (g * g1 * ab_conj - i * g2 * d2c * n_b) / (big_b * e2);
    let one_plus_c = Complex64::new(1.0, 0.0) + c11 + c22;

    let c1 = (-g * g2 * (one_minus_ab * ab_conj + aconj_b)
        + i * g2 * g2 * one_minus_ab * n_b * d2c / g1
        + i * g1 * n_a * d2c)
        / e2;
    let c2 = (-g * g2 * (one_minus_ab * aconj_b + ab_conj)
        - i * g2 * g2 * one_minus_ab * n_b * d1 / g1
        - i * g1 * n_a * d1)
        / e1;
    let c3 = Complex64::new(-1.0, 0.0) / (hbar * g1 * chi1);
    let c_sum = c1 + c2 + c3;
    let c_scale = c1.norm() + c2.norm() + c3.norm();
    if c_sum.norm() < 1e-12 * c_scale {
        return Err(Error::PoleEncountered("C1 + C2 + C3"));
    }

    let e1_sq = e1 * e1;

    let num_b = i * g * g * g2 * g2 * one_minus_ab * one_plus_c * n_b / g1
        - i * g1 * d1 * d1 * n_a
        - d1 * g * g2 * (one_minus_ab * aconj_b + one_plus_c * ab_conj);
    let z_b = num_b / (e1_sq * c_sum) + i * g * g * g2 * n_b / (big_b * e1_sq) - d1 / e1;
    let t_b = (Complex64::new(1.0, 0.0) - kappa * z_b).norm_sqr();

    let num_f = g * d1 * (g2 * g2 * one_minus_ab * one_plus_c * n_b / g1 + g1 * n_a)
        - i * g2 * (g * g * one_plus_c * ab_conj - d1 * d1 * one_minus_ab * aconj_b);
    let z_f = num_f / (e1_sq * c_sum) + g * d1 * g2 * n_b / (big_b * e1_sq) - i * g / e1;
    let t_f = (kappa * z_f).norm_sqr();

    Ok((t_b, t_f))
}

/// Zero-tunneling response function, first closed form (the
/// expression in D1, D2* and chi1).
pub fn response_eq11_zero_tunneling(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Complex64 {
    let kappa = params.kappa;
    let i = Complex64::i();
    let n_a = state.n_a;
    let g1 = params.g1;
    let d1 = Complex64::new(-kappa / 2.0, state.delta1_eff + omega);
    let d2c = Complex64::new(-kappa / 2.0, omega - state.delta1_eff);
    let chi1 = susceptibility(params, Mirror::M1, omega);
    let inner = -i * n_a * g1 / d1 - 1.0 / (params.hbar * chi1 * g1) + i * n_a * g1 / d2c;
    kappa * (-1.0 / d1 - i * n_a * g1 / (d1 * d1 * inner))
}

/// Zero-tunneling response function, second closed form (the
/// mechanical-resonance rearrangement). gamma_m is the half damping rate
/// gamma_1/2, the value that makes this an exact rearrangement of the
/// direct solve.
pub fn response_eq12_zero_tunneling(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Complex64 {
    let kappa = params.kappa;
    let omega_m = params.omega1;
    let gamma_m = params.gamma1 / 2.0;
    let beta = beta_coupling(params, state);
    let d1_eff = state.delta1_eff;
    let mech = Complex64::new(omega * omega - omega_m * omega_m, gamma_m * omega);
    let num = mech * Complex64::new(kappa / 2.0, -(omega - d1_eff))
        - Complex64::new(0.0, 2.0 * beta * omega_m);
    let cav = Complex64::new(kappa / 2.0, -omega).powi(2) + d1_eff * d1_eff;
    let den = mech * cav - 4.0 * d1_eff * beta * omega_m;
    kappa * num / den
}

/// Resonant approximation of the zero-tunneling response in
/// y = Omega - Omega_m, valid near resonance for red-detuned drive.
pub fn response_eq13_resonant_approx(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
) -> Complex64 {
    let kappa = params.kappa;
    let gamma_m = params.gamma1 / 2.0;
    let beta = beta_coupling(params, state);
    let y = omega - params.omega1;
    let den = Complex64::new(kappa / 2.0, -y)
        + beta / Complex64::new(gamma_m / 2.0, -y);
    kappa / den
}

/// beta = |a|^2 G1^2 x_zpf^2, the drive-enhanced optomechanical coupling
/// [1/s^2].
pub fn beta_coupling(params: &SystemParams, state: &SteadyState) -> f64 {
    state.n_a * (params.g1 * params.x_zpf()).powi(2)
}

/// Which evaluation path produced a spectrum point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    ClosedForm,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Direct => write!(f, "direct"),
            Method::ClosedForm => write!(f, "closed_form"),
        }
    }
}

/// One spectrum sample. On per-point failure the response fields are NaN
/// and `error` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// Probe detuning [rad/s].
    pub omega: f64,
    pub eps_t: Complex64,
    pub t_b: f64,
    pub t_f: f64,
    pub sidebands: Option<SidebandSolution>,
    pub method: Method,
    /// Which steady-state branch fed the linearization.
    pub branch_index: usize,
    pub error: Option<String>,
}

/// Evaluate the spectrum on a sorted probe-detuning grid via the direct
/// solve. Per-point failures are flagged, not propagated.
pub fn spectrum(
    params: &SystemParams,
    state: &SteadyState,
    omega_grid: &[f64],
    branch_index: usize,
) -> Vec<SpectrumPoint> {
    omega_grid
        .par_iter()
        .map(|&omega| match spectrum_point(params, state, omega, branch_index) {
            Ok(pt) => pt,
            Err(e) => SpectrumPoint {
                omega,
                eps_t: Complex64::new(f64::NAN, f64::NAN),
                t_b: f64::NAN,
                t_f: f64::NAN,
                sidebands: None,
                method: Method::Direct,
                branch_index,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn spectrum_point(
    params: &SystemParams,
    state: &SteadyState,
    omega: f64,
    branch_index: usize,
) -> Result<SpectrumPoint> {
    let eps_p = params.eps_p(omega);
    if eps_p <= 0.0 {
        return Err(Error::NonPositiveParameter("Pp"));
    }
    let sol = solve_sidebands_direct(params, state, omega)?;
    let sk = params.kappa.sqrt();
    let eps_t = sk * sol.a_minus / eps_p;
    let t_b = (Complex64::new(1.0, 0.0) - eps_t).norm_sqr();
    let t_f = (sk * sol.b_minus / eps_p).norm_sqr();
    Ok(SpectrumPoint {
        omega,
        eps_t,
        t_b,
        t_f,
        sidebands: Some(sol),
        method: Method::Direct,
        branch_index,
        error: None,
    })
}

/// Uniform grid helper in absolute angular units.
pub fn omega_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    assert!(points >= 1);
    if points == 1 {
        return vec![from];
    }
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

/// CSV rows:
/// `omega_over_omega_m,eps_t_re,eps_t_im,t_b,t_f,branch_index,method`.
pub fn spectrum_csv<W: std::io::Write>(
    points: &[SpectrumPoint],
    omega_m: f64,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "omega_over_omega_m",
        "eps_t_re",
        "eps_t_im",
        "t_b",
        "t_f",
        "branch_index",
        "method",
    ])
    .map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    for pt in points {
        w.write_record(&[
            format!("{}", pt.omega / omega_m),
            format!("{}", pt.eps_t.re),
            format!("{}", pt.eps_t.im),
            format!("{}", pt.t_b),
            format!("{}", pt.t_f),
            format!("{}", pt.branch_index),
            pt.method.to_string(),
        ])
        .map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    Ok(())
}
