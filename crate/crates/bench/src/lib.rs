//! Shared fixtures for the benchmark targets.

use omsim_core::params::Config;
use omsim_core::SystemParams;

/// Branch-diagram parameters: 30 mW, red-detuned, g = 0.1 Omega_m.
pub fn branch_params() -> SystemParams {
    let mut cfg = Config::reference_defaults();
    cfg.g_tunnel_over_omega_m = 0.1;
    cfg.to_params().validate().unwrap()
}

/// Spectrum parameters: 1 mW, equal couplings, g = 0.2 Omega_m.
pub fn spectrum_params() -> SystemParams {
    let mut cfg = Config::reference_defaults();
    cfg.pc_w = 1e-3;
    cfg.g1_hz_per_m = 6.0e18;
    cfg.g2_hz_per_m = 6.0e18;
    cfg.g_tunnel_over_omega_m = 0.2;
    cfg.to_params().validate().unwrap()
}

/// Mass-sweep parameters: blue-detuned, g = 0.1 Omega_m.
pub fn mass_params() -> SystemParams {
    let mut cfg = Config::reference_defaults();
    cfg.delta1_over_omega_m = 1.0;
    cfg.delta2_over_omega_m = 1.0;
    cfg.g_tunnel_over_omega_m = 0.1;
    cfg.to_params().validate().unwrap()
}
