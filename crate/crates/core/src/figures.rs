//! Preset parameter sets that regenerate the reference datasets, with
//! machine-checkable expected features and deterministic CSV/JSON output.

use serde::{Deserialize, Serialize};

use crate::effective_mass::{self, MassPoint, MassSweepVariable};
use crate::error::{Error, Result};
use crate::linear_response::{self, SpectrumPoint};
use crate::multistability::{self, BranchSet, SweepSpec, SweepVariable};
use crate::params::{Config, SystemParams};
use crate::steady_state::{self, DetuningMode, SteadyState};

/// Sweep definition of a figure, in config-file units.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FigureSweep {
    Mass {
        variable: MassSweepVariable,
        from_over_omega_m: f64,
        to_over_omega_m: f64,
        points: usize,
    },
    Branch {
        variable: SweepVariable,
        /// W for a power sweep, multiples of Omega_m for a detuning sweep.
        from: f64,
        to: f64,
        points: usize,
    },
    Spectrum {
        from_over_omega_m: f64,
        to_over_omega_m: f64,
        points: usize,
    },
}

/// A stored figure preset: reference parameters plus sweep definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FigurePreset {
    pub figure_id: String,
    pub config: Config,
    pub sweep: FigureSweep,
    pub description: String,
}

/// Result rows of one figure run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum FigureRows {
    Mass(Vec<MassPoint>),
    Branch(Vec<BranchSet>),
    Spectrum(Vec<SpectrumPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureStatus {
    Pass,
    Fail,
    Skipped,
}

/// Outcome of one expected-feature check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureOutcome {
    pub name: String,
    pub status: FeatureStatus,
    pub detail: String,
}

impl FeatureOutcome {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        FeatureOutcome {
            name: name.to_string(),
            status: if pass {
                FeatureStatus::Pass
            } else {
                FeatureStatus::Fail
            },
            detail,
        }
    }

    fn record(name: &str, detail: String) -> Self {
        FeatureOutcome {
            name: name.to_string(),
            status: FeatureStatus::Pass,
            detail,
        }
    }
}

/// Run metadata attached to every result file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub omega_c_hz: f64,
    pub version: String,
    pub timestamp_unix: u64,
    pub theta_locked: bool,
    pub notes: Vec<String>,
}

/// Full output of a figure run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub preset: FigurePreset,
    pub rows: FigureRows,
    pub features: Vec<FeatureOutcome>,
    pub provenance: Provenance,
}

/// All known figure ids, in run order.
pub fn figure_ids() -> Vec<&'static str> {
    vec![
        "2a", "2b", "3a", "3b", "3c", "3d", "3e", "3f", "4a", "4b", "4c", "4d", "4e", "4f", "5a",
        "5b", "5c",
    ]
}

/// Tunneling ladder of the six branch-diagram panels. Only part of the
/// ladder is pinned by the reference datasets; the intermediate values are
/// estimates and are flagged in provenance.
const PANEL_G: [f64; 6] = [0.0, 0.1, 0.2, 0.4, 0.5, 0.6];

/// Look up the preset behind a figure id.
pub fn preset(figure_id: &str) -> Result<FigurePreset> {
    let mut cfg = Config::reference_defaults();
    let preset = match figure_id {
        "2a" | "2b" => {
            cfg.delta1_over_omega_m = 1.0;
            cfg.delta2_over_omega_m = 1.0;
            cfg.g_tunnel_over_omega_m = 0.1;
            let variable = if figure_id == "2a" {
                MassSweepVariable::Delta1
            } else {
                MassSweepVariable::Delta2
            };
            FigurePreset {
                figure_id: figure_id.into(),
                config: cfg,
                sweep: FigureSweep::Mass {
                    variable,
                    from_over_omega_m: -2.0,
                    to_over_omega_m: 2.0,
                    points: 500,
                },
                description: format!(
                    "effective masses vs {} at 30 mW, g = 0.1 Omega_m",
                    if figure_id == "2a" { "Delta1" } else { "Delta2" }
                ),
            }
        }
        "3a" | "3b" | "3c" | "3d" | "3e" | "3f" => {
            let panel = (figure_id.as_bytes()[1] - b'a') as usize;
            cfg.g_tunnel_over_omega_m = PANEL_G[panel];
            FigurePreset {
                figure_id: figure_id.into(),
                config: cfg,
                sweep: FigureSweep::Branch {
                    variable: SweepVariable::Pc,
                    from: 0.0,
                    to: 0.05,
                    points: 500,
                },
                description: format!(
                    "x1 branches vs control power, g = {} Omega_m",
                    PANEL_G[panel]
                ),
            }
        }
        "4a" | "4b" | "4c" | "4d" | "4e" | "4f" => {
            let panel = (figure_id.as_bytes()[1] - b'a') as usize;
            cfg.g_tunnel_over_omega_m = PANEL_G[panel];
            FigurePreset {
                figure_id: figure_id.into(),
                config: cfg,
                sweep: FigureSweep::Branch {
                    variable: SweepVariable::Delta1,
                    from: -2.0,
                    to: 2.0,
                    points: 500,
                },
                description: format!(
                    "x1 branches vs Delta1 at 30 mW, g = {} Omega_m",
                    PANEL_G[panel]
                ),
            }
        }
        "5a" | "5b" | "5c" => {
            let g = match figure_id {
                "5a" => 0.0,
                "5b" => 0.2,
                _ => 0.4,
            };
            cfg.pc_w = 1e-3;
            cfg.g1_hz_per_m = 6.0e18;
            cfg.g2_hz_per_m = 6.0e18;
            cfg.g_tunnel_over_omega_m = g;
            FigurePreset {
                figure_id: figure_id.into(),
                config: cfg,
                sweep: FigureSweep::Spectrum {
                    from_over_omega_m: 0.5,
                    to_over_omega_m: 1.5,
                    points: 1024,
                },
                description: format!("probe spectrum T_b, T_f at g = {g} Omega_m"),
            }
        }
        other => return Err(Error::UnknownFigure(other.to_string())),
    };
    Ok(preset)
}

/// The locked steady branch a spectrum linearizes around: lowest
/// displacement, index 0.
pub fn spectrum_base_state(params: &SystemParams) -> Result<(SteadyState, usize)> {
    let states = steady_state::enumerate_steady_states(params, DetuningMode::ThetaLocked, 64, 1e-9);
    let state = states
        .first()
        .cloned()
        .ok_or_else(|| Error::NumericalFailure("no steady state found".into()))?;
    Ok((state, 0))
}

/// Fano/OMIA window metrics of the forward transmission around Omega_m,
/// on a dense local grid (the feature is mechanical-linewidth narrow).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FanoMetrics {
    pub t_f_max: f64,
    pub t_f_min: f64,
    /// (max - min) / max over the window.
    pub contrast: f64,
    pub t_f_at_omega_m: f64,
    /// max over the window minus the value at Omega_m.
    pub dip_depth: f64,
}

pub fn fano_window_metrics(
    params: &SystemParams,
    state: &SteadyState,
    half_width_over_omega_m: f64,
    points: usize,
) -> Result<FanoMetrics> {
    let w0 = params.omega1;
    let grid = linear_response::omega_grid(
        (1.0 - half_width_over_omega_m) * w0,
        (1.0 + half_width_over_omega_m) * w0,
        points,
    );
    let mut t_f_max = f64::NEG_INFINITY;
    let mut t_f_min = f64::INFINITY;
    for &w in &grid {
        let (_, t_f) = linear_response::transmission_direct(params, state, w)?;
        t_f_max = t_f_max.max(t_f);
        t_f_min = t_f_min.min(t_f);
    }
    let (_, t_f_at) = linear_response::transmission_direct(params, state, w0)?;
    Ok(FanoMetrics {
        t_f_max,
        t_f_min,
        contrast: if t_f_max > 0.0 {
            (t_f_max - t_f_min) / t_f_max
        } else {
            0.0
        },
        t_f_at_omega_m: t_f_at,
        dip_depth: t_f_max - t_f_at,
    })
}

/// True when some local minimum of Re eps_T sits within one grid step of
/// Omega_m.
pub fn has_absorption_dip_at_omega_m(points: &[SpectrumPoint], omega_m: f64) -> bool {
    if points.len() < 3 {
        return false;
    }
    let step = points[1].omega - points[0].omega;
    for i in 1..points.len() - 1 {
        let re = points[i].eps_t.re;
        if re < points[i - 1].eps_t.re
            && re < points[i + 1].eps_t.re
            && (points[i].omega - omega_m).abs() <= step
        {
            return true;
        }
    }
    false
}

/// Root-count transition pattern along a branch sweep, collapsing repeats:
/// e.g. `[1, 3, 1]` for a single bistable interval.
pub fn root_count_pattern(sets: &[BranchSet]) -> Vec<usize> {
    let mut pattern = Vec::new();
    for set in sets {
        if set.error.is_some() {
            continue;
        }
        let n = set.roots.len();
        if pattern.last() != Some(&n) {
            pattern.push(n);
        }
    }
    pattern
}

fn evaluate_features(
    preset: &FigurePreset,
    params: &SystemParams,
    rows: &FigureRows,
) -> Result<Vec<FeatureOutcome>> {
    let mut out = Vec::new();
    let id = preset.figure_id.as_str();
    match rows {
        FigureRows::Mass(points) => {
            let valid: Vec<&MassPoint> = points.iter().filter(|p| !p.pole).collect();
            if id == "2a" {
                let max_mp = valid
                    .iter()
                    .map(|p| p.m_prime_kg.abs())
                    .fold(0.0_f64, f64::max);
                let max_mdp = valid
                    .iter()
                    .map(|p| p.m_doubleprime_kg.abs())
                    .fold(0.0_f64, f64::max);
                out.push(FeatureOutcome::new(
                    "m_prime_negligible",
                    max_mp < 1e-2 * max_mdp,
                    format!("max |M'| = {max_mp:.3e} kg, max |M''| = {max_mdp:.3e} kg"),
                ));
            }
            if id == "2b" {
                let plateau: Vec<&&MassPoint> = valid
                    .iter()
                    .filter(|p| {
                        p.delta_over_omega_m.abs() >= 0.5 && p.delta_over_omega_m.abs() <= 1.0
                    })
                    .collect();
                let ok = !plateau.is_empty()
                    && plateau
                        .iter()
                        .all(|p| (p.m_doubleprime_kg * 1e12 + 20.0).abs() <= 2.0);
                let worst = plateau
                    .iter()
                    .map(|p| (p.m_doubleprime_kg * 1e12 + 20.0).abs())
                    .fold(0.0_f64, f64::max);
                out.push(FeatureOutcome::new(
                    "m_doubleprime_plateau_minus_20ng",
                    ok,
                    format!("worst |M'' + 20 ng| on plateau = {worst:.3} ng"),
                ));
                // Flatness: |dM''/dDelta2| at |Delta2| = Omega_m below 1% of
                // its value at 0.1 Omega_m, by direct differentiation of the
                // closed form (a sweep-grid difference smears the rapidly
                // varying core derivative).
                let slope_at = |frac: f64| -> Option<f64> {
                    let h = 1e-4;
                    let mut hi = params.clone();
                    hi.delta2 = (frac + h) * params.omega1;
                    let mut lo = params.clone();
                    lo.delta2 = (frac - h) * params.omega1;
                    let (_, m_hi) = effective_mass::closed_form_masses(&hi).ok()?;
                    let (_, m_lo) = effective_mass::closed_form_masses(&lo).ok()?;
                    Some((m_hi - m_lo) / (2.0 * h))
                };
                match (slope_at(1.0), slope_at(-1.0), slope_at(0.1)) {
                    (Some(s_pos), Some(s_neg), Some(s_core)) => {
                        let edge = s_pos.abs().max(s_neg.abs());
                        out.push(FeatureOutcome::new(
                            "m_doubleprime_flat_beyond_half_omega_m",
                            edge < 0.01 * s_core.abs(),
                            format!(
                                "|slope(+-1.0)| = {:.3e}, |slope(0.1)| = {:.3e}",
                                edge, s_core
                            ),
                        ))
                    }
                    _ => out.push(FeatureOutcome {
                        name: "m_doubleprime_flat_beyond_half_omega_m".into(),
                        status: FeatureStatus::Skipped,
                        detail: "closed form hit a pole at a probe detuning".into(),
                    }),
                }
            }
        }
        FigureRows::Branch(sets) => {
            let pattern = root_count_pattern(sets);
            let max_roots = sets.iter().map(|s| s.roots.len()).max().unwrap_or(0);
            if id == "3a" {
                out.push(FeatureOutcome::new(
                    "single_bistable_interval",
                    pattern == vec![1, 3, 1],
                    format!("root-count pattern {pattern:?}"),
                ));
            } else if id == "3b" {
                let five = sets.iter().find(|s| s.roots.len() == 5);
                let detail = match five {
                    Some(set) => {
                        let stable = set.roots.iter().filter(|r| r.stable).count();
                        format!(
                            "5-root point at Pc = {:.4} mW with {stable}/5 Jacobian-stable",
                            set.sweep_value * 1e3
                        )
                    }
                    None => format!("max root count {max_roots}"),
                };
                out.push(FeatureOutcome::new(
                    "five_root_point_exists",
                    five.is_some(),
                    detail,
                ));
            } else if id == "4a" {
                let bad = sets
                    .iter()
                    .filter(|s| s.roots.len() > 1 && s.sweep_value >= 0.0)
                    .count();
                out.push(FeatureOutcome::new(
                    "nonlinearity_red_detuned_only",
                    bad == 0,
                    format!("{bad} multi-root points at Delta1 >= 0; pattern {pattern:?}"),
                ));
            } else {
                out.push(FeatureOutcome::record(
                    "root_count_pattern",
                    format!("pattern {pattern:?}, max {max_roots}"),
                ));
            }
        }
        FigureRows::Spectrum(points) => {
            match id {
                "5a" => {
                    let max_tf = points.iter().map(|p| p.t_f).fold(0.0_f64, f64::max);
                    out.push(FeatureOutcome::new(
                        "forward_transmission_identically_zero",
                        max_tf <= 1e-12,
                        format!("max T_f = {max_tf:.3e}"),
                    ));
                    out.push(FeatureOutcome::new(
                        "absorption_dip_at_omega_m",
                        has_absorption_dip_at_omega_m(points, params.omega1),
                        "local minimum of Re eps_T within one grid step of Omega_m".into(),
                    ));
                }
                "5b" | "5c" => {
                    let (state, _) = spectrum_base_state(params)?;
                    let metrics = fano_window_metrics(params, &state, 0.02, 2001)?;
                    if id == "5b" {
                        out.push(FeatureOutcome::new(
                            "fano_contrast_near_70_percent",
                            (metrics.contrast - 0.70).abs() <= 0.15,
                            format!("contrast = {:.3}", metrics.contrast),
                        ));
                    }
                    out.push(FeatureOutcome::record(
                        "fano_dip_depth",
                        format!(
                            "dip depth = {:.4e}, T_f(Omega_m) = {:.4e}, window max = {:.4e}",
                            metrics.dip_depth, metrics.t_f_at_omega_m, metrics.t_f_max
                        ),
                    ));
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Run one preset end to end.
pub fn run_figure(figure_id: &str) -> Result<SweepResult> {
    let preset = preset(figure_id)?;
    let params = preset.config.to_params().validate()?;
    let omega_m = params.omega1;
    let mut notes = vec![
        "axis ranges and panel tunneling ladder are estimates where the reference datasets leave them unstated"
            .to_string(),
    ];
    let theta_locked = matches!(
        preset.sweep,
        FigureSweep::Branch { .. } | FigureSweep::Spectrum { .. }
    );

    let rows = match &preset.sweep {
        FigureSweep::Mass {
            variable,
            from_over_omega_m,
            to_over_omega_m,
            points,
        } => FigureRows::Mass(effective_mass::mass_sweep(
            &params,
            *variable,
            from_over_omega_m * omega_m,
            to_over_omega_m * omega_m,
            *points,
        )),
        FigureSweep::Branch {
            variable,
            from,
            to,
            points,
        } => {
            let (lo, hi) = match variable {
                SweepVariable::Pc => (*from, *to),
                SweepVariable::Delta1 => (from * omega_m, to * omega_m),
            };
            FigureRows::Branch(multistability::sweep_branches(
                &params,
                &SweepSpec {
                    variable: *variable,
                    from: lo,
                    to: hi,
                    points: *points,
                },
            ))
        }
        FigureSweep::Spectrum {
            from_over_omega_m,
            to_over_omega_m,
            points,
        } => {
            let (state, branch) = spectrum_base_state(&params)?;
            notes.push(format!(
                "spectrum linearized around locked branch {branch} (x1 = {:.4e} m)",
                state.x1_bar
            ));
            let grid = linear_response::omega_grid(
                from_over_omega_m * omega_m,
                to_over_omega_m * omega_m,
                *points,
            );
            FigureRows::Spectrum(linear_response::spectrum(&params, &state, &grid, branch))
        }
    };

    let features = evaluate_features(&preset, &params, &rows)?;
    Ok(SweepResult {
        rows,
        features,
        provenance: Provenance {
            omega_c_hz: preset.config.omega_c_hz,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            theta_locked,
            notes,
        },
        preset,
    })
}

/// Write the data rows as RFC-4180 CSV with a header row. Byte-stable for
/// identical inputs.
pub fn write_csv(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let omega_m = result.preset.config.to_params().omega1;
    match &result.rows {
        FigureRows::Mass(points) => effective_mass::mass_csv(points, file),
        FigureRows::Branch(sets) => multistability::branch_csv(sets, file),
        FigureRows::Spectrum(points) => linear_response::spectrum_csv(points, omega_m, file),
    }
}

/// Full result record as JSON (rows, features, provenance).
pub fn write_json(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    let file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer_pretty(file, result)
        .map_err(|e| Error::NumericalFailure(format!("json: {e}")))?;
    Ok(())
}

/// Optional gnuplot-compatible two-column text file.
pub fn write_plot(result: &SweepResult, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut file =
        std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let omega_m = result.preset.config.to_params().omega1;
    let mut emit = |a: f64, b: f64| -> std::io::Result<()> { writeln!(file, "{a} {b}") };
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);
    match &result.rows {
        FigureRows::Mass(points) => {
            for p in points {
                emit(p.delta_over_omega_m, p.m_doubleprime_kg * 1e12).map_err(io_err)?;
            }
        }
        FigureRows::Branch(sets) => {
            for s in sets {
                for r in &s.roots {
                    emit(s.sweep_value, r.x1).map_err(io_err)?;
                }
            }
        }
        FigureRows::Spectrum(points) => {
            for p in points {
                emit(p.omega / omega_m, p.t_f).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

/// Standard output layout: `<out>/<figure_id>/{data.csv,result.json,plot.dat}`.
pub fn write_outputs(result: &SweepResult, out_dir: &std::path::Path, plot: bool) -> Result<()> {
    let dir = out_dir.join(&result.preset.figure_id);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    write_csv(result, &dir.join("data.csv"))?;
    write_json(result, &dir.join("result.json"))?;
    if plot {
        write_plot(result, &dir.join("plot.dat"))?;
    }
    Ok(())
}
