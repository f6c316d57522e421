//! `omsim` — steady states, multistability diagrams, effective masses and
//! probe spectra of the driven double-cavity optomechanical system.
//!
//! Data goes to files under `--out <dir>` (default `out/`); pass `--out -`
//! to stream the primary payload to stdout instead. Progress and errors go
//! to stderr, errors as single-line JSON.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use omsim_core::effective_mass::{self, MassSweepVariable};
use omsim_core::figures;
use omsim_core::linear_response;
use omsim_core::multistability::{self, SweepSpec, SweepVariable};
use omsim_core::params::Config;
use omsim_core::steady_state::{self, DetuningMode};
use omsim_core::Error;

#[derive(Parser)]
#[command(
    name = "omsim",
    version,
    about = "Double-cavity optomechanics: steady states, multistability, effective mass, probe spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonOpts {
    /// JSON parameter file; built-in reference defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (config-file units), repeatable: key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Sweep override: var:from:to:points (config-file units).
    #[arg(long, value_name = "VAR:FROM:TO:POINTS")]
    sweep: Option<String>,
    /// Output directory, or `-` for stdout.
    #[arg(long, default_value = "out")]
    out: String,
    /// Payload format for stdout / the data file.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Seed count for steady-state enumeration.
    #[arg(long, default_value_t = 64)]
    seed_grid: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a config and echo the normalized parameters.
    Validate(CommonOpts),
    /// Solve the mean-field steady state (all branches from the seed grid).
    Steady(CommonOpts),
    /// Displacement branches of the quintic across a sweep (default
    /// pc:0:0.05:500).
    Multistab(CommonOpts),
    /// Effective masses across a detuning sweep (default delta2:-2:2:500).
    Effmass(CommonOpts),
    /// Probe-response spectrum (default omega:0.5:1.5:1024).
    Spectrum(CommonOpts),
    /// Reproduce a stored figure preset (2a..5c).
    Figure {
        /// Figure id, e.g. 3a or 5b.
        id: String,
        #[command(flatten)]
        opts: CommonOpts,
        /// Also emit a gnuplot-compatible plot.dat.
        #[arg(long)]
        plot: bool,
    },
}

struct ParsedSweep {
    var: String,
    from: f64,
    to: f64,
    points: usize,
}

fn parse_sweep(text: &str) -> Result<ParsedSweep, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::ConfigParse(format!(
            "sweep `{text}` must be var:from:to:points"
        )));
    }
    let parse_f = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::ConfigParse(format!("bad sweep number `{s}`")))
    };
    let points = parts[3]
        .parse::<usize>()
        .map_err(|_| Error::ConfigParse(format!("bad sweep point count `{}`", parts[3])))?;
    Ok(ParsedSweep {
        var: parts[0].to_string(),
        from: parse_f(parts[1])?,
        to: parse_f(parts[2])?,
        points,
    })
}

fn load_config(opts: &CommonOpts) -> Result<Config, Error> {
    let mut cfg = match &opts.config {
        Some(path) => Config::load(path)?,
        None => Config::reference_defaults(),
    };
    for kv in &opts.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::ConfigParse(format!("--set `{kv}` must be key=value")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| Error::ConfigParse(format!("bad value in --set `{kv}`")))?;
        cfg.set(key, value)?;
    }
    Ok(cfg)
}

/// Write `payload` to stdout when out is `-`, otherwise to
/// `<out>/<name>/data.<ext>` and the JSON record to result.json.
fn emit(
    out: &str,
    name: &str,
    csv_payload: &[u8],
    json_payload: &serde_json::Value,
    format: Format,
) -> Result<(), Error> {
    if out == "-" {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        let res = match format {
            Format::Csv => lock.write_all(csv_payload),
            Format::Json => {
                serde_json::to_writer_pretty(&mut lock, json_payload)
                    .map_err(|e| std::io::Error::other(e.to_string()))
                    .and_then(|()| lock.write_all(b"\n"))
            }
        };
        return res.map_err(|e| Error::io("<stdout>", e));
    }
    let dir = Path::new(out).join(name);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let csv_path = dir.join("data.csv");
    std::fs::write(&csv_path, csv_payload)
        .map_err(|e| Error::io(csv_path.display().to_string(), e))?;
    let json_path = dir.join("result.json");
    let file = std::fs::File::create(&json_path)
        .map_err(|e| Error::io(json_path.display().to_string(), e))?;
    serde_json::to_writer_pretty(file, json_payload)
        .map_err(|e| Error::NumericalFailure(format!("json: {e}")))?;
    eprintln!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Validate(opts) => {
            let cfg = load_config(&opts)?;
            let params = cfg.to_params().validate()?;
            let advisories = params.advisories();
            let echo = serde_json::json!({
                "config": Config::from_params(&params),
                "params_si": params,
                "advisories": advisories,
            });
            println!("{}", serde_json::to_string_pretty(&echo).unwrap());
            Ok(())
        }
        Command::Steady(opts) => {
            let cfg = load_config(&opts)?;
            if opts.sweep.is_some() {
                return Err(Error::ConfigParse(
                    "`steady` does not take --sweep".into(),
                ));
            }
            let params = cfg.to_params().validate()?;
            let branches =
                steady_state::enumerate_steady_states(&params, DetuningMode::Free, opts.seed_grid, 1e-9);
            if branches.is_empty() {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    last_residual: f64::NAN,
                });
            }
            let json = serde_json::json!({
                "omega_c_hz": cfg.omega_c_hz,
                "branch_count": branches.len(),
                "branches": branches,
            });
            if opts.out == "-" {
                println!("{}", serde_json::to_string_pretty(&json).unwrap());
                return Ok(());
            }
            let dir = Path::new(&opts.out).join("steady");
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
            let path = dir.join("result.json");
            let file = std::fs::File::create(&path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::to_writer_pretty(file, &json)
                .map_err(|e| Error::NumericalFailure(format!("json: {e}")))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        Command::Multistab(opts) => {
            let cfg = load_config(&opts)?;
            let params = cfg.to_params().validate()?;
            let omega_m = params.omega1;
            let sweep = match &opts.sweep {
                None => SweepSpec {
                    variable: SweepVariable::Pc,
                    from: 0.0,
                    to: 0.05,
                    points: 500,
                },
                Some(text) => {
                    let s = parse_sweep(text)?;
                    match s.var.as_str() {
                        "pc" => SweepSpec {
                            variable: SweepVariable::Pc,
                            from: s.from,
                            to: s.to,
                            points: s.points,
                        },
                        "delta1" => SweepSpec {
                            variable: SweepVariable::Delta1,
                            from: s.from * omega_m,
                            to: s.to * omega_m,
                            points: s.points,
                        },
                        other => {
                            return Err(Error::ConfigParse(format!(
                                "multistab sweeps pc or delta1, not `{other}`"
                            )))
                        }
                    }
                }
            };
            let sets = multistability::sweep_branches(&params, &sweep);
            let mut csv = Vec::new();
            multistability::branch_csv(&sets, &mut csv)?;
            let json = serde_json::json!({
                "omega_c_hz": cfg.omega_c_hz,
                "sweep": sweep,
                "points": sets,
            });
            emit(&opts.out, "multistab", &csv, &json, opts.format)
        }
        Command::Effmass(opts) => {
            let cfg = load_config(&opts)?;
            let params = cfg.to_params().validate()?;
            let omega_m = params.omega1;
            let (variable, from, to, points) = match &opts.sweep {
                None => (MassSweepVariable::Delta2, -2.0, 2.0, 500),
                Some(text) => {
                    let s = parse_sweep(text)?;
                    let v = match s.var.as_str() {
                        "delta1" => MassSweepVariable::Delta1,
                        "delta2" => MassSweepVariable::Delta2,
                        other => {
                            return Err(Error::ConfigParse(format!(
                                "effmass sweeps delta1 or delta2, not `{other}`"
                            )))
                        }
                    };
                    (v, s.from, s.to, s.points)
                }
            };
            let pts =
                effective_mass::mass_sweep(&params, variable, from * omega_m, to * omega_m, points);
            let mut csv = Vec::new();
            effective_mass::mass_csv(&pts, &mut csv)?;
            let json = serde_json::json!({
                "omega_c_hz": cfg.omega_c_hz,
                "points": pts,
            });
            emit(&opts.out, "effmass", &csv, &json, opts.format)
        }
        Command::Spectrum(opts) => {
            let cfg = load_config(&opts)?;
            let params = cfg.to_params().validate()?;
            let omega_m = params.omega1;
            let (from, to, points) = match &opts.sweep {
                None => (0.5, 1.5, 1024),
                Some(text) => {
                    let s = parse_sweep(text)?;
                    if s.var != "omega" {
                        return Err(Error::ConfigParse(format!(
                            "spectrum sweeps omega, not `{}`",
                            s.var
                        )));
                    }
                    (s.from, s.to, s.points)
                }
            };
            let (state, branch) = figures::spectrum_base_state(&params)?;
            let grid = linear_response::omega_grid(from * omega_m, to * omega_m, points);
            let pts = linear_response::spectrum(&params, &state, &grid, branch);
            let mut csv = Vec::new();
            linear_response::spectrum_csv(&pts, omega_m, &mut csv)?;
            let json = serde_json::json!({
                "omega_c_hz": cfg.omega_c_hz,
                "base_state": state,
                "branch_index": branch,
                "points": pts,
            });
            emit(&opts.out, "spectrum", &csv, &json, opts.format)
        }
        Command::Figure { id, opts, plot } => {
            if opts.config.is_some() || opts.sweep.is_some() || !opts.set.is_empty() {
                return Err(Error::ConfigParse(
                    "`figure` runs a stored preset; use the other subcommands for custom parameters"
                        .into(),
                ));
            }
            let result = figures::run_figure(&id)?;
            for f in &result.features {
                eprintln!("feature {}: {:?} ({})", f.name, f.status, f.detail);
            }
            if opts.out == "-" {
                let mut csv = Vec::new();
                let omega_m = result.preset.config.to_params().omega1;
                match &result.rows {
                    figures::FigureRows::Mass(p) => effective_mass::mass_csv(p, &mut csv)?,
                    figures::FigureRows::Branch(s) => multistability::branch_csv(s, &mut csv)?,
                    figures::FigureRows::Spectrum(p) => {
                        linear_response::spectrum_csv(p, omega_m, &mut csv)?
                    }
                }
                std::io::stdout()
                    .write_all(&csv)
                    .map_err(|e| Error::io("<stdout>", e))?;
                return Ok(());
            }
            figures::write_outputs(&result, Path::new(&opts.out), plot)?;
            eprintln!("wrote {}/{}/", opts.out, id);
            Ok(())
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonPositiveParameter(_)
        | Error::NegativeParameter(_)
        | Error::UnknownFigure(_)
        | Error::ConfigParse(_) => 1,
        Error::DegenerateDenominator(_)
        | Error::NoConvergence { .. }
        | Error::NumericalFailure(_)
        | Error::SingularSystem { .. }
        | Error::PoleEncountered(_) => 2,
        Error::Io { .. } => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // Argument problems (unknown flags included) are validation
            // errors: exit 1, single-line JSON on stderr.
            let json = serde_json::json!({ "error": e.to_string(), "exit_code": 1 });
            eprintln!("{}", serde_json::to_string(&json).unwrap());
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let kind = exit_code_for(&err);
            let json = serde_json::json!({ "error": err.to_string(), "exit_code": kind });
            eprintln!("{}", serde_json::to_string(&json).unwrap());
            ExitCode::from(kind)
        }
    }
}
