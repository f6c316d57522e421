//! Physical parameter set, validation, unit conventions and the drive
//! amplitude formula.
//!
//! All internal computation is in SI angular units (rad/s). Config files
//! carry ordinary frequencies in Hz; conversion happens exactly once at
//! this boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054571817e-34;

/// Default control-laser frequency [Hz], lambda ~ 1064 nm. The drive
/// amplitude depends on it, so every result records the value used.
pub const DEFAULT_OMEGA_C_HZ: f64 = 2.82e14;

const TWO_PI: f64 = std::f64::consts::TAU;

/// Full parameter set of the two-cavity, two-mirror model in SI units.
///
/// Immutable value type after validation; freely shared across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Mirror masses [kg].
    pub m1: f64,
    pub m2: f64,
    /// Mechanical angular frequencies [rad/s].
    pub omega1: f64,
    pub omega2: f64,
    /// Mechanical damping rates [rad/s].
    pub gamma1: f64,
    pub gamma2: f64,
    /// Optical decay rate, common to both cavities [rad/s].
    pub kappa: f64,
    /// Optomechanical coupling strengths [rad/(s m)].
    pub g1: f64,
    pub g2: f64,
    /// Photon tunneling rate through the middle mirror [rad/s].
    pub g_tunnel: f64,
    /// Bare cavity detunings, control laser minus cavity [rad/s].
    pub delta1: f64,
    pub delta2: f64,
    /// Control and probe powers [W].
    pub pc: f64,
    pub pp: f64,
    /// Control-laser angular frequency [rad/s].
    pub omega_c: f64,
    /// Reduced Planck constant [J s]; fixed.
    pub hbar: f64,
    /// Optional cavity lengths [m], metadata only.
    pub l1: Option<f64>,
    pub l2: Option<f64>,
}

/// Soft warnings attached by `validate`. Never hard errors.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advisories {
    /// Set when the sideband condition Omega_j >= 2 kappa fails.
    pub resolved_sideband: bool,
    /// Set when the reachable radiation-pressure detuning shift
    /// G1 * x_max stays below kappa, i.e. the drive is too weak for the
    /// strong-coupling mean-field separation.
    pub strong_coupling: bool,
}

impl Advisories {
    pub fn is_empty(&self) -> bool {
        !self.resolved_sideband && !self.strong_coupling
    }
}

impl SystemParams {
    /// Check invariants; on success return the parameters unchanged.
    ///
    /// Idempotent by construction. Use [`SystemParams::advisories`] for the
    /// soft regime flags.
    pub fn validate(self) -> Result<Self> {
        let positive = [
            ("m1", self.m1),
            ("m2", self.m2),
            ("Omega1", self.omega1),
            ("Omega2", self.omega2),
            ("kappa", self.kappa),
            ("omega_c", self.omega_c),
            ("hbar", self.hbar),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::NonPositiveParameter(name));
            }
        }
        let non_negative = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("g", self.g_tunnel),
            ("Pc", self.pc),
            ("Pp", self.pp),
            ("G1", self.g1),
            ("G2", self.g2),
        ];
        for (name, value) in non_negative {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeParameter(name));
            }
        }
        Ok(self)
    }

    /// Regime advisories for the validated parameter set.
    pub fn advisories(&self) -> Advisories {
        let resolved_sideband =
            self.omega1 < 2.0 * self.kappa || self.omega2 < 2.0 * self.kappa;
        // Largest static displacement the drive can reach: the resonant
        // photon number 4 eps_c^2 / kappa pushing mirror 1.
        let eps_c2 = self.pc / (self.hbar * self.omega_c);
        let x_max = if self.kappa > 0.0 {
            self.hbar * self.g1 * 4.0 * eps_c2 / (self.m1 * self.omega1 * self.omega1 * self.kappa)
        } else {
            0.0
        };
        let strong_coupling = self.g1 * x_max < self.kappa;
        Advisories {
            resolved_sideband,
            strong_coupling,
        }
    }

    /// Control drive amplitude eps_c = sqrt(Pc / (hbar omega_c)).
    pub fn eps_c(&self) -> f64 {
        drive_amplitude(self.pc, self.omega_c)
    }

    /// Probe drive amplitude at probe offset `omega_probe_offset` from the
    /// control frequency: eps_p = sqrt(Pp / (hbar omega_p)).
    pub fn eps_p(&self, omega_probe_offset: f64) -> f64 {
        drive_amplitude(self.pp, self.omega_c + omega_probe_offset)
    }

    /// Length scale at which a displacement shifts the cavity-A detuning by
    /// one kappa. Falls back to x_zpf when G1 = 0.
    pub fn x_scale(&self) -> f64 {
        if self.g1 > 0.0 {
            self.kappa / self.g1
        } else {
            self.x_zpf()
        }
    }

    /// Zero-point fluctuation amplitude of mirror 1.
    pub fn x_zpf(&self) -> f64 {
        (self.hbar / (2.0 * self.m1 * self.omega1)).sqrt()
    }
}

/// Drive amplitude sqrt(P / (hbar omega)) in sqrt(photons/s).
///
/// Real and non-negative; P >= 0, omega > 0 assumed.
pub fn drive_amplitude(power_w: f64, omega: f64) -> f64 {
    debug_assert!(power_w >= 0.0 && omega > 0.0);
    (power_w / (HBAR * omega)).sqrt()
}

/// JSON config schema. Frequencies are ordinary frequencies in Hz;
/// detunings and the tunneling rate are in units of the mechanical
/// frequency, matching the way the values are usually quoted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub m1_kg: f64,
    pub m2_kg: f64,
    pub omega_m_hz: f64,
    pub gamma_hz: f64,
    pub kappa_hz: f64,
    pub g1_hz_per_m: f64,
    pub g2_hz_per_m: f64,
    pub g_tunnel_over_omega_m: f64,
    pub delta1_over_omega_m: f64,
    pub delta2_over_omega_m: f64,
    pub pc_w: f64,
    pub pp_w: f64,
    #[serde(default = "default_omega_c_hz")]
    pub omega_c_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_m: Option<f64>,
}

fn default_omega_c_hz() -> f64 {
    DEFAULT_OMEGA_C_HZ
}

impl Config {
    /// Reference defaults: the common experimental values with 30 mW drive,
    /// red-detuned control (Delta1 = Delta2 = -Omega_m) and g = 0.
    pub fn reference_defaults() -> Self {
        Config {
            m1_kg: 2e-11,
            m2_kg: 2e-11,
            omega_m_hz: 5.18e7,
            gamma_hz: 4.1e4,
            kappa_hz: 1.5e7,
            g1_hz_per_m: 1.8e19,
            g2_hz_per_m: 6.0e18,
            g_tunnel_over_omega_m: 0.0,
            delta1_over_omega_m: -1.0,
            delta2_over_omega_m: -1.0,
            pc_w: 0.03,
            pp_w: 1e-6,
            omega_c_hz: DEFAULT_OMEGA_C_HZ,
            l1_m: None,
            l2_m: None,
        }
    }

    /// Convert to angular SI units.
    pub fn to_params(&self) -> SystemParams {
        let omega_m = TWO_PI * self.omega_m_hz;
        SystemParams {
            m1: self.m1_kg,
            m2: self.m2_kg,
            omega1: omega_m,
            omega2: omega_m,
            gamma1: TWO_PI * self.gamma_hz,
            gamma2: TWO_PI * self.gamma_hz,
            kappa: TWO_PI * self.kappa_hz,
            g1: TWO_PI * self.g1_hz_per_m,
            g2: TWO_PI * self.g2_hz_per_m,
            g_tunnel: self.g_tunnel_over_omega_m * omega_m,
            delta1: self.delta1_over_omega_m * omega_m,
            delta2: self.delta2_over_omega_m * omega_m,
            pc: self.pc_w,
            pp: self.pp_w,
            omega_c: TWO_PI * self.omega_c_hz,
            hbar: HBAR,
            l1: self.l1_m,
            l2: self.l2_m,
        }
    }

    /// Invert `to_params`. Exact up to one floating-point rounding per field.
    pub fn from_params(p: &SystemParams) -> Self {
        let omega_m = p.omega1;
        Config {
            m1_kg: p.m1,
            m2_kg: p.m2,
            omega_m_hz: p.omega1 / TWO_PI,
            gamma_hz: p.gamma1 / TWO_PI,
            kappa_hz: p.kappa / TWO_PI,
            g1_hz_per_m: p.g1 / TWO_PI,
            g2_hz_per_m: p.g2 / TWO_PI,
            g_tunnel_over_omega_m: p.g_tunnel / omega_m,
            delta1_over_omega_m: p.delta1 / omega_m,
            delta2_over_omega_m: p.delta2 / omega_m,
            pc_w: p.pc,
            pp_w: p.pp,
            omega_c_hz: p.omega_c / TWO_PI,
            l1_m: p.l1,
            l2_m: p.l2,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    /// Apply a `key=value` override in config-file units.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "m1_kg" => self.m1_kg = value,
            "m2_kg" => self.m2_kg = value,
            "omega_m_hz" => self.omega_m_hz = value,
            "gamma_hz" => self.gamma_hz = value,
            "kappa_hz" => self.kappa_hz = value,
            "g1_hz_per_m" => self.g1_hz_per_m = value,
            "g2_hz_per_m" => self.g2_hz_per_m = value,
            "g_tunnel_over_omega_m" => self.g_tunnel_over_omega_m = value,
            "delta1_over_omega_m" => self.delta1_over_omega_m = value,
            "delta2_over_omega_m" => self.delta2_over_omega_m = value,
            "pc_w" => self.pc_w = value,
            "pp_w" => self.pp_w = value,
            "omega_c_hz" => self.omega_c_hz = value,
            "l1_m" => self.l1_m = Some(value),
            "l2_m" => self.l2_m = Some(value),
            other => {
                return Err(Error::ConfigParse(format!(
                    "unknown config key `{other}`"
                )))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3_config() -> Config {
        Config::reference_defaults()
    }

    #[test]
    fn fig3_values_validate_with_no_advisories() {
        let params = fig3_config().to_params().validate().unwrap();
        assert!(params.advisories().is_empty());
    }

    #[test]
    fn zero_kappa_rejected() {
        let mut cfg = fig3_config();
        cfg.kappa_hz = 0.0;
        match cfg.to_params().validate() {
            Err(Error::NonPositiveParameter(name)) => assert_eq!(name, "kappa"),
            other => panic!("expected NonPositiveParameter, got {other:?}"),
        }
    }

    #[test]
    fn negative_power_rejected() {
        let mut cfg = fig3_config();
        cfg.pc_w = -1e-3;
        match cfg.to_params().validate() {
            Err(Error::NegativeParameter(name)) => assert_eq!(name, "Pc"),
            other => panic!("expected NegativeParameter, got {other:?}"),
        }
    }

    #[test]
    fn drive_amplitude_zero_power() {
        assert_eq!(drive_amplitude(0.0, TWO_PI * DEFAULT_OMEGA_C_HZ), 0.0);
    }

    #[test]
    fn drive_amplitude_fig_value() {
        // 30 mW at the default control frequency, recomputed by hand:
        // eps_c = sqrt(0.03 / (hbar * 2 pi * 2.82e14)) = 4.0069e8
        let eps = drive_amplitude(0.03, TWO_PI * DEFAULT_OMEGA_C_HZ);
        let expected = (0.03 / (HBAR * TWO_PI * 2.82e14)).sqrt();
        assert_eq!(eps, expected);
        assert!((eps - 4.0e8).abs() / 4.0e8 < 5e-3, "eps_c = {eps:e}");
    }

    #[test]
    fn drive_amplitude_sqrt_scaling() {
        let omega = TWO_PI * DEFAULT_OMEGA_C_HZ;
        let base = drive_amplitude(7.5e-3, omega);
        let quad = drive_amplitude(4.0 * 7.5e-3, omega);
        assert!((quad - 2.0 * base).abs() <= 1e-12 * quad);
    }

    #[test]
    fn validate_idempotent() {
        let p = fig3_config().to_params().validate().unwrap();
        let q = p.clone().validate().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn config_round_trip() {
        let cfg = fig3_config();
        let back = Config::from_params(&cfg.to_params());
        let a = serde_json::to_value(&cfg).unwrap();
        let b = serde_json::to_value(&back).unwrap();
        for (key, lhs) in a.as_object().unwrap() {
            let rhs = &b.as_object().unwrap()[key];
            let (x, y) = (lhs.as_f64().unwrap(), rhs.as_f64().unwrap());
            let tol = 2.0 * f64::EPSILON * x.abs().max(1.0);
            assert!((x - y).abs() <= tol, "{key}: {x} vs {y}");
        }
    }

    #[test]
    fn unknown_config_key_rejected() {
        let mut cfg = fig3_config();
        assert!(cfg.set("kappa_hz", 1.0e7).is_ok());
        assert!(cfg.set("not_a_key", 1.0).is_err());
    }

    #[test]
    fn config_json_defaults_omega_c() {
        let text = r#"{
            "m1_kg": 2e-11, "m2_kg": 2e-11, "omega_m_hz": 5.18e7,
            "gamma_hz": 4.1e4, "kappa_hz": 1.5e7,
            "g1_hz_per_m": 1.8e19, "g2_hz_per_m": 6.0e18,
            "g_tunnel_over_omega_m": 0.0,
            "delta1_over_omega_m": -1.0, "delta2_over_omega_m": -1.0,
            "pc_w": 0.03, "pp_w": 1e-6
        }"#;
        let cfg = Config::from_json(text).unwrap();
        assert_eq!(cfg.omega_c_hz, DEFAULT_OMEGA_C_HZ);
    }
}
