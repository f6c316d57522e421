//! Effective masses of the two mirrors from the linearized radiation-
//! pressure force balance.
//!
//! Two routes are kept side by side:
//! - `closed_form_masses` evaluates the literal closed-form expressions,
//!   term by term;
//! - `oracle_masses` never touches that algebra: it solves the linearized
//!   field/balance system numerically and differentiates the force law.
//!
//! Both masses use the same slaving: the fields follow the displacements
//! adiabatically and mirror 1 stays on its own equilibrium. The force on
//! the mirror of interest is then differentiated with respect to its own
//! displacement; constant force offsets shift the equilibrium point and do
//! not enter the mass.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Dimensionless pole guard on the linearization denominators.
const POLE_TOL: f64 = 1e-12;

/// Coefficient groups of the linearized photon-number expansion around
/// zero displacement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassExpansionCoefficients {
    /// g^2 / (Delta_j^2 + kappa^2/4), dimensionless.
    pub a1: f64,
    pub a2: f64,
    /// Drive strength kappa eps_c^2 / (Delta1^2 + kappa^2/4), the bare
    /// cavity-A photon number scale.
    pub b1: f64,
    /// 2 Delta2 G2 / (Delta2^2 + kappa^2/4) [1/m].
    pub b2: f64,
    /// -2 Delta1 G1 / (Delta1^2 + kappa^2/4) [1/m].
    pub c1: f64,
    /// Zeroth-order photon number in cavity A and its displacement
    /// sensitivities: n_a = zeta1 + zeta2 x1 - zeta3 x2.
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    /// Cavity-B analogues: n_b = psi1 + psi2 x1 - psi3 x2.
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    /// Dimensionless feedback strengths of the mirror-1 balance.
    pub lambda1: f64,
    pub lambda2: f64,
}

/// Closed-form and oracle masses side by side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveMassReport {
    /// Effective mass of mirror 1 [kg].
    pub m_prime: f64,
    /// Effective mass of mirror 2 [kg].
    pub m_doubleprime: f64,
    pub m_prime_oracle: f64,
    pub m_doubleprime_oracle: f64,
    /// |closed - oracle| / max(|closed|, |oracle|, bare mass).
    pub deviation_prime: f64,
    pub deviation_doubleprime: f64,
    pub coefficients: MassExpansionCoefficients,
}

/// Evaluate the full coefficient block.
pub fn coefficients(params: &SystemParams) -> Result<MassExpansionCoefficients> {
    let k24 = params.kappa * params.kappa / 4.0;
    let den1 = params.delta1 * params.delta1 + k24;
    let den2 = params.delta2 * params.delta2 + k24;
    let g2t = params.g_tunnel * params.g_tunnel;
    let a1 = g2t / den1;
    let a2 = g2t / den2;
    let b1 = params.kappa * params.eps_c().powi(2) / den1;
    let b2 = 2.0 * params.delta2 * params.g2 / den2;
    let c1 = -2.0 * params.delta1 * params.g1 / den1;
    let s = 1.0 - a1 * a2;
    if s.abs() < POLE_TOL {
        return Err(Error::PoleEncountered("1 - A1 A2"));
    }
    let zeta1 = b1 / s;
    let zeta2 = b1 * (a1 * a2 * b2 + c1) / (s * s);
    let zeta3 = a1 * a2 * b1 * b2 / (s * s);
    let psi1 = a2 * zeta1;
    let psi2 = a2 * (zeta2 + b2 * zeta1);
    let psi3 = a2 * (zeta3 + b2 * zeta1);
    let m1w2 = params.m1 * params.omega1.powi(2);
    let lambda1 = params.hbar * (params.g1 * zeta2 - params.g2 * psi2) / m1w2;
    let lambda2 = params.hbar * (params.g2 * psi3 - params.g1 * zeta3) / m1w2;
    Ok(MassExpansionCoefficients {
        a1,
        a2,
        b1,
        b2,
        c1,
        zeta1,
        zeta2,
        zeta3,
        psi1,
        psi2,
        psi3,
        lambda1,
        lambda2,
    })
}

/// A closed-form term num/den, with terms whose numerator vanishes
/// identically (zero-coupling limits) contributing zero instead of 0/0.
fn term(num: f64, den: f64, pole: &'static str) -> Result<f64> {
    if num == 0.0 {
        return Ok(0.0);
    }
    if den.abs() < POLE_TOL {
        return Err(Error::PoleEncountered(pole));
    }
    Ok(num / den)
}

/// Closed forms for (M-prime, M-doubleprime), term by term.
pub fn closed_form_masses(params: &SystemParams) -> Result<(f64, f64)> {
    let c = coefficients(params)?;
    let hbar = params.hbar;
    let g2t = params.g_tunnel * params.g_tunnel;
    let k24 = params.kappa * params.kappa / 4.0;
    let den2 = params.delta2 * params.delta2 + k24;
    let w1 = params.omega1.powi(2);
    let w2 = params.omega2.powi(2);
    let one_minus_l1 = 1.0 - c.lambda1;
    let g2sq = params.g2 * params.g2;

    // M': the Lambda2-divided terms carry (1 - Lambda1)/Lambda2.
    let m_prime = -params.m1
        + term(
            2.0 * params.delta2 * c.zeta1 * g2t * g2sq * one_minus_l1 * hbar,
            c.lambda2 * w1 * den2 * den2,
            "Lambda2",
        )?
        - 2.0 * params.delta2 * c.zeta1 * g2t * g2sq * hbar / (w1 * den2 * den2)
        - c.zeta2 * g2t * params.g2 * hbar / (w1 * den2)
        + term(
            c.zeta3 * g2t * params.g2 * one_minus_l1 * hbar,
            c.lambda2 * w1 * den2,
            "Lambda2",
        )?
        + c.zeta2 * params.g1 * hbar / w1
        - term(
            c.zeta3 * params.g1 * one_minus_l1 * hbar,
            c.lambda2 * w1,
            "Lambda2",
        )?;

    // M'': the Lambda2-multiplied terms carry Lambda2/(1 - Lambda1).
    let m_doubleprime = -params.m2
        + term(
            2.0 * params.delta2 * c.zeta1 * g2t * g2sq * c.lambda2 * hbar,
            one_minus_l1 * w2 * den2 * den2,
            "1 - Lambda1",
        )?
        - 2.0 * params.delta2 * c.zeta1 * g2t * g2sq * hbar / (w2 * den2 * den2)
        + term(
            c.zeta2 * g2t * params.g2 * c.lambda2 * hbar,
            one_minus_l1 * w2 * den2,
            "1 - Lambda1",
        )?
        - c.zeta3 * g2t * params.g2 * hbar / (w2 * den2);

    Ok((m_prime, m_doubleprime))
}

/// Zeroth-order photon numbers from the 2x2 field balance, solved
/// numerically (no hand algebra shared with the closed form).
fn zeroth_order_photons(params: &SystemParams) -> Result<(f64, f64)> {
    let k24 = params.kappa * params.kappa / 4.0;
    let den1 = params.delta1 * params.delta1 + k24;
    let den2 = params.delta2 * params.delta2 + k24;
    let g2t = params.g_tunnel * params.g_tunnel;
    let a1 = g2t / den1;
    let a2 = g2t / den2;
    let b1 = params.kappa * params.eps_c().powi(2) / den1;
    let det = 1.0 - a1 * a2;
    if det.abs() < POLE_TOL {
        return Err(Error::PoleEncountered("1 - A1 A2"));
    }
    let n_a = b1 / det;
    let n_b = a2 * n_a;
    Ok((n_a, n_b))
}

/// Numeric force-balance oracle: build the linearized system
///   n_a = (A1 n_b + B1)(1 + C1 x1)
///   n_b = A2 n_a (1 + B2 (x1 - x2))
///   m1 Omega1^2 x1 = hbar (G1 n_a - G2 n_b)
/// around zero displacement, slave the remaining unknowns to the
/// displacement of the mirror of interest, and differentiate the force law
/// F_j with a symmetric difference (exact for an affine system).
pub fn oracle_masses(params: &SystemParams) -> Result<(f64, f64)> {
    if params.g1 == 0.0 && params.g2 == 0.0 {
        // Pure mechanical limit: the optical force has no displacement
        // dependence at all.
        return Ok((-params.m1, -params.m2));
    }
    let k24 = params.kappa * params.kappa / 4.0;
    let den1 = params.delta1 * params.delta1 + k24;
    let den2 = params.delta2 * params.delta2 + k24;
    let g2t = params.g_tunnel * params.g_tunnel;
    let a1 = g2t / den1;
    let a2 = g2t / den2;
    let b1 = params.kappa * params.eps_c().powi(2) / den1;
    let b2 = 2.0 * params.delta2 * params.g2 / den2;
    let c1 = -2.0 * params.delta1 * params.g1 / den1;
    let (na0, _nb0) = zeroth_order_photons(params)?;

    let hbar = params.hbar;
    let m1w2 = params.m1 * params.omega1.powi(2);
    let m2w2 = params.m2 * params.omega2.powi(2);
    let x_s = params.x_scale();
    let n_s = na0.max(1.0);
    let h = x_s; // affine system: any step gives the exact slope

    // Scaled unknown vector (n_a/n_s, n_b/n_s, w/x_s) where w is the slaved
    // displacement. Row scaling keeps entries O(1).
    let field_rows = |m: &mut Matrix3<f64>| {
        m[(0, 0)] = 1.0;
        m[(0, 1)] = -a1;
        m[(1, 0)] = -a2;
        m[(1, 1)] = 1.0;
    };

    // M'': unknowns (n_a, n_b, x1), parameter x2.
    let f2_at = |x2: f64| -> Result<f64> {
        let mut m = Matrix3::zeros();
        field_rows(&mut m);
        m[(0, 2)] = -na0 * c1 * x_s / n_s;
        m[(1, 2)] = -a2 * na0 * b2 * x_s / n_s;
        m[(2, 0)] = -hbar * params.g1 * n_s / (m1w2 * x_s);
        m[(2, 1)] = hbar * params.g2 * n_s / (m1w2 * x_s);
        m[(2, 2)] = 1.0;
        let rhs = Vector3::new(b1 / n_s, -a2 * na0 * b2 * x2 / n_s, 0.0);
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularSystem { condition: None })?;
        let n_b = sol[1] * n_s;
        Ok(hbar * params.g2 * n_b - m2w2 * x2)
    };
    let m_dp = (f2_at(h)? - f2_at(-h)?) / (2.0 * h * params.omega2.powi(2));

    // M': unknowns (n_a, n_b, x2), parameter x1, same mirror-1 balance.
    let f1_at = |x1: f64| -> Result<f64> {
        let mut m = Matrix3::zeros();
        field_rows(&mut m);
        m[(0, 2)] = 0.0;
        m[(1, 2)] = a2 * na0 * b2 * x_s / n_s;
        m[(2, 0)] = -hbar * params.g1 * n_s / (m1w2 * x_s);
        m[(2, 1)] = hbar * params.g2 * n_s / (m1w2 * x_s);
        m[(2, 2)] = 0.0;
        let rhs = Vector3::new(
            (b1 + na0 * c1 * x1) / n_s,
            a2 * na0 * b2 * x1 / n_s,
            -x1 / x_s,
        );
        // The x2 column vanishes when g G2 Delta2 eps_c = 0; the fields then
        // carry no x2 dependence and x2 can be fixed at zero.
        let decoupled = m[(1, 2)] == 0.0;
        let (n_a, n_b);
        if decoupled {
            let m2x2 = nalgebra::Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let r2 = nalgebra::Vector2::new(rhs[0], rhs[1]);
            let sol = m2x2
                .lu()
                .solve(&r2)
                .ok_or(Error::SingularSystem { condition: None })?;
            n_a = sol[0] * n_s;
            n_b = sol[1] * n_s;
        } else {
            let sol = m
                .lu()
                .solve(&rhs)
                .ok_or(Error::SingularSystem { condition: None })?;
            n_a = sol[0] * n_s;
            n_b = sol[1] * n_s;
        }
        Ok(hbar * (params.g1 * n_a - params.g2 * n_b) - m1w2 * x1)
    };
    let m_p = (f1_at(h)? - f1_at(-h)?) / (2.0 * h * params.omega1.powi(2));

    Ok((m_p, m_dp))
}

/// Relative deviation with the bare mass as an absolute floor, so that the
/// comparison stays meaningful when both routes cancel to rounding noise.
pub fn mass_deviation(closed: f64, oracle: f64, bare: f64) -> f64 {
    (closed - oracle).abs() / closed.abs().max(oracle.abs()).max(bare.abs())
}

/// Both routes plus their deviation in one record.
pub fn report(params: &SystemParams) -> Result<EffectiveMassReport> {
    let coeffs = coefficients(params)?;
    let (m_prime, m_doubleprime) = closed_form_masses(params)?;
    let (m_prime_oracle, m_doubleprime_oracle) = oracle_masses(params)?;
    Ok(EffectiveMassReport {
        m_prime,
        m_doubleprime,
        m_prime_oracle,
        m_doubleprime_oracle,
        deviation_prime: mass_deviation(m_prime, m_prime_oracle, params.m1),
        deviation_doubleprime: mass_deviation(m_doubleprime, m_doubleprime_oracle, params.m2),
        coefficients: coeffs,
    })
}

/// Which bare detuning a mass sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MassSweepVariable {
    Delta1,
    Delta2,
}

/// One mass-sweep sample. Masses are NaN on pole points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassPoint {
    pub delta_over_omega_m: f64,
    pub m_prime_kg: f64,
    pub m_doubleprime_kg: f64,
    pub m_prime_oracle_kg: f64,
    pub m_doubleprime_oracle_kg: f64,
    pub pole: bool,
}

/// Sweep a bare detuning and evaluate both mass routes per point.
pub fn mass_sweep(
    params: &SystemParams,
    variable: MassSweepVariable,
    from: f64,
    to: f64,
    points: usize,
) -> Vec<MassPoint> {
    use rayon::prelude::*;
    assert!(points >= 2);
    (0..points)
        .into_par_iter()
        .map(|i| {
            let delta = from + (to - from) * i as f64 / (points - 1) as f64;
            let mut p = params.clone();
            match variable {
                MassSweepVariable::Delta1 => p.delta1 = delta,
                MassSweepVariable::Delta2 => p.delta2 = delta,
            }
            match (closed_form_masses(&p), oracle_masses(&p)) {
                (Ok((mp, mdp)), Ok((mpo, mdpo))) => MassPoint {
                    delta_over_omega_m: delta / params.omega1,
                    m_prime_kg: mp,
                    m_doubleprime_kg: mdp,
                    m_prime_oracle_kg: mpo,
                    m_doubleprime_oracle_kg: mdpo,
                    pole: false,
                },
                _ => MassPoint {
                    delta_over_omega_m: delta / params.omega1,
                    m_prime_kg: f64::NAN,
                    m_doubleprime_kg: f64::NAN,
                    m_prime_oracle_kg: f64::NAN,
                    m_doubleprime_oracle_kg: f64::NAN,
                    pole: true,
                },
            }
        })
        .collect()
}

/// CSV rows with masses in ng (1 ng = 1e-12 kg) for direct comparison with
/// the reference plots.
pub fn mass_csv<W: std::io::Write>(points: &[MassPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "delta_over_omega_m",
        "m_prime_ng",
        "m_doubleprime_ng",
        "m_prime_oracle_ng",
        "m_doubleprime_oracle_ng",
        "pole_flag",
    ])
    .map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    for pt in points {
        w.write_record(&[
            format!("{}", pt.delta_over_omega_m),
            format!("{}", pt.m_prime_kg * 1e12),
            format!("{}", pt.m_doubleprime_kg * 1e12),
            format!("{}", pt.m_prime_oracle_kg * 1e12),
            format!("{}", pt.m_doubleprime_oracle_kg * 1e12),
            format!("{}", pt.pole),
        ])
        .map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::NumericalFailure(format!("csv: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Config;

    /// Mass-sweep parameter set: 30 mW drive, blue-detuned, g = 0.1 Omega_m.
    fn fig2_params() -> SystemParams {
        let mut cfg = Config::reference_defaults();
        cfg.delta1_over_omega_m = 1.0;
        cfg.delta2_over_omega_m = 1.0;
        cfg.g_tunnel_over_omega_m = 0.1;
        cfg.to_params().validate().unwrap()
    }

    #[test]
    fn zero_coupling_coefficients_vanish() {
        let mut p = fig2_params();
        p.g1 = 0.0;
        p.g2 = 0.0;
        let c = coefficients(&p).unwrap();
        assert_eq!(c.zeta2, 0.0);
        assert_eq!(c.zeta3, 0.0);
        assert_eq!(c.psi2, 0.0);
        assert_eq!(c.psi3, 0.0);
        assert_eq!(c.lambda1, 0.0);
        assert_eq!(c.lambda2, 0.0);
    }

    #[test]
    fn zero_tunneling_coefficients() {
        let mut p = fig2_params();
        p.g_tunnel = 0.0;
        let c = coefficients(&p).unwrap();
        assert_eq!(c.a1, 0.0);
        assert_eq!(c.a2, 0.0);
        assert_eq!(c.zeta1, c.b1);
        assert_eq!(c.psi1, 0.0);
        assert_eq!(c.psi2, 0.0);
        assert_eq!(c.psi3, 0.0);
    }

    #[test]
    fn zero_coupling_masses_exact() {
        let mut p = fig2_params();
        p.g1 = 0.0;
        p.g2 = 0.0;
        let (mp, mdp) = closed_form_masses(&p).unwrap();
        assert_eq!(mp, -p.m1);
        assert_eq!(mdp, -p.m2);
        let (mpo, mdpo) = oracle_masses(&p).unwrap();
        assert_eq!(mpo, -p.m1);
        assert_eq!(mdpo, -p.m2);
    }

    #[test]
    fn zero_tunneling_second_mass_is_bare() {
        let mut p = fig2_params();
        p.g_tunnel = 0.0;
        let (_, mdp) = closed_form_masses(&p).unwrap();
        assert_eq!(mdp, -p.m2);
        let (_, mdpo) = oracle_masses(&p).unwrap();
        assert!((mdpo + p.m2).abs() <= 1e-12 * p.m2);
    }

    #[test]
    fn oracle_matches_closed_form_at_fig2_point() {
        let p = fig2_params();
        let r = report(&p).unwrap();
        assert!(
            r.deviation_prime < 1e-6,
            "M' closed {:e} vs oracle {:e}",
            r.m_prime,
            r.m_prime_oracle
        );
        assert!(
            r.deviation_doubleprime < 1e-6,
            "M'' closed {:e} vs oracle {:e}",
            r.m_doubleprime,
            r.m_doubleprime_oracle
        );
    }

    #[test]
    fn second_mass_plateaus_at_bare_value() {
        // |Delta2| > 0.5 Omega_m: M'' within 10% of -20 ng.
        let p = fig2_params();
        for frac in [0.55, 0.7, 0.85, 1.0, -0.6, -0.9] {
            let mut q = p.clone();
            q.delta2 = frac * p.omega1;
            let (_, mdp) = closed_form_masses(&q).unwrap();
            let ng = mdp * 1e12;
            assert!(
                (ng + 20.0).abs() < 2.0,
                "Delta2 = {frac} Omega_m: M'' = {ng} ng"
            );
        }
    }

    #[test]
    fn first_mass_negligible_next_to_second() {
        // Strong drive regime: |M'| << |M''| across the Delta1 sweep.
        let p = fig2_params();
        let pts = mass_sweep(&p, MassSweepVariable::Delta1, -2.0 * p.omega1, 2.0 * p.omega1, 81);
        let max_mp = pts
            .iter()
            .filter(|pt| !pt.pole)
            .map(|pt| pt.m_prime_kg.abs())
            .fold(0.0_f64, f64::max);
        let max_mdp = pts
            .iter()
            .filter(|pt| !pt.pole)
            .map(|pt| pt.m_doubleprime_kg.abs())
            .fold(0.0_f64, f64::max);
        assert!(
            max_mp < 1e-2 * max_mdp,
            "max |M'| = {max_mp:e}, max |M''| = {max_mdp:e}"
        );
    }

    #[test]
    fn tunneling_tunes_the_second_mass() {
        // M'' at g = 0.4 Omega_m differs from g = 0.1 Omega_m by more than
        // 5% somewhere in Delta2 within [-Omega_m, Omega_m].
        let p = fig2_params();
        let mut seen = false;
        for i in 0..201 {
            let delta2 = (-1.0 + 2.0 * i as f64 / 200.0) * p.omega1;
            let mut lo = p.clone();
            lo.delta2 = delta2;
            let mut hi = lo.clone();
            hi.g_tunnel = 0.4 * p.omega1;
            let (Ok((_, m_lo)), Ok((_, m_hi))) =
                (closed_form_masses(&lo), closed_form_masses(&hi))
            else {
                continue;
            };
            if (m_hi - m_lo).abs() > 0.05 * m_lo.abs() {
                seen = true;
                break;
            }
        }
        assert!(seen, "no 5% difference found across the sweep");
    }
}
