mod manifest;
mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qst_core::brachistochrone::{case_catalog, case_minimum_time, qb_residuals, stationary_trajectory};
use qst_core::effective3::{boundary_form_check, reduce_to_effective, BOUNDARY_TOL};
use qst_core::noise_mc::{
    fit_linear, fit_power_law, read_sweep_csv, run_mc_with, sweep_csv_string, Fit, HamiltonianKind, Infidelity,
    NoiseConfig, SweepRow,
};
use qst_core::propagator::{evolve_constant, transfer_fidelity};
use qst_core::speed_search::{analytic_min_time, bisection_csv_string, min_time_bisection, OptimizerConfig, PulseFamily};
use qst_core::spin_model::{
    build_h_opt, build_h_opt_prime, check_coupling_bounds, project_single_excitation, Basis, SpinModel,
};

#[derive(Parser)]
#[command(name = "qst", version, about = "Time-optimal state transfer checks and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Hamiltonian {
    Opt,
    OptPrime,
}

impl From<Hamiltonian> for HamiltonianKind {
    fn from(h: Hamiltonian) -> Self {
        match h {
            Hamiltonian::Opt => HamiltonianKind::Opt,
            Hamiltonian::OptPrime => HamiltonianKind::OptPrime,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    /// |1 - F|
    Overlap,
    /// 1 - |F|
    Modulus,
    /// 1 - Re F
    Real,
    /// 1 - |F|^2
    Squared,
}

impl From<Measure> for Infidelity {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Overlap => Infidelity::Overlap,
            Measure::Modulus => Infidelity::Modulus,
            Measure::Real => Infidelity::Real,
            Measure::Squared => Infidelity::Squared,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    General,
    Real,
    RealSymmetric,
}

impl From<Family> for PulseFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::General => PulseFamily::General,
            Family::Real => PulseFamily::Real,
            Family::RealSymmetric => PulseFamily::RealSymmetric,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Model {
    Power,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum Column {
    N,
    SigmaC,
    SigmaF,
}

fn size_arg() -> clap::builder::RangedU64ValueParser<u64> {
    clap::value_parser!(u64).range(3..)
}

#[derive(Subcommand)]
enum Command {
    /// Evolve an optimal Hamiltonian for the predicted time and check the transfer.
    Verify {
        #[arg(long, value_parser = size_arg())]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        #[arg(long, value_enum, default_value = "opt")]
        hamiltonian: Hamiltonian,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Minimum transfer time of every complementarity case.
    CaseTable {
        #[arg(long, value_parser = size_arg())]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        /// Time-averaged |J_1N| for case 7; defaults to j0.
        #[arg(long)]
        j1n_bar: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brachistochrone residuals of a case's stationary solution.
    QbCheck {
        #[arg(long = "case")]
        case_id: u8,
        #[arg(long, value_parser = size_arg(), default_value_t = 8)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long)]
        j1n_bar: Option<f64>,
    },
    /// Bisect for the shortest time the pulse optimizer can reach.
    SpeedScan {
        #[arg(long, value_parser = size_arg())]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        #[arg(long, default_value_t = 4)]
        segments: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        /// Allowed infidelity; the fidelity target is 1 - target.
        #[arg(long, default_value_t = 1e-6)]
        target: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        time_tol: f64,
        #[arg(long, value_enum, default_value = "general")]
        family: Family,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo disorder averages; every combination of the listed values.
    Noise {
        #[arg(long, value_parser = size_arg(), value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        sigma_c: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        sigma_f: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        j0: f64,
        #[arg(long, value_enum, default_value = "opt")]
        hamiltonian: Hamiltonian,
        #[arg(long, value_enum, default_value = "overlap")]
        measure: Measure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a sweep CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Abscissa column; by default n for power laws and sigma_c for lines.
        #[arg(long, value_enum)]
        x: Option<Column>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Reduce a spin model JSON to its three-level Hamiltonian.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Pass,
    Fail,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn json_line<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[derive(Serialize)]
struct VerifyReport {
    n: usize,
    j0: f64,
    hamiltonian: &'static str,
    time: f64,
    fidelity: f64,
    threshold: f64,
    pass: bool,
    theta: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    form_valid: bool,
    bound_violations: usize,
}

fn verify(n: usize, j0: f64, hamiltonian: Hamiltonian, format: Format) -> Result<Outcome> {
    let (model, name) = match hamiltonian {
        Hamiltonian::Opt => (build_h_opt(n, j0)?, "opt"),
        Hamiltonian::OptPrime => (build_h_opt_prime(n, j0)?, "opt-prime"),
    };
    let t = analytic_min_time(n, j0);
    let u = evolve_constant(&project_single_excitation(&model), t)?;
    let fidelity = transfer_fidelity(&u, Basis::SingleExcitation(n))?;
    let red = reduce_to_effective(&model)?;
    let form = boundary_form_check(&evolve_constant(&red.effective.to_sector(), t)?, BOUNDARY_TOL)?;
    let threshold = 1.0 - 1e-9;
    let r = VerifyReport {
        n,
        j0,
        hamiltonian: name,
        time: t,
        fidelity,
        threshold,
        pass: fidelity >= threshold,
        theta: form.theta,
        alpha: form.alpha,
        beta: form.beta,
        phi: form.phi,
        form_valid: form.valid,
        bound_violations: check_coupling_bounds(&model, j0).violations.len(),
    };
    let text = match format {
        Format::Json => json_line(&r)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&r)?;
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(None, &text)?;
    Ok(if r.pass { Outcome::Pass } else { Outcome::Fail })
}

fn case_table(n: usize, j0: f64, j1n_bar: Option<f64>) -> Result<String> {
    let jb = j1n_bar.unwrap_or(j0);
    let mut s = String::from("case,zero_multipliers,zero_slacks,minimum_time\n");
    for spec in case_catalog() {
        let labels = |v: &[qst_core::brachistochrone::Constraint]| {
            v.iter().map(|c| c.label()).collect::<Vec<_>>().join(" ")
        };
        let t = case_minimum_time(spec.id, n, j0, Some(jb))?;
        let shown = t.map_or_else(|| "none".to_string(), |t| format!("{t}"));
        s.push_str(&format!("{},{},{},{}\n", spec.id, labels(&spec.zero_multipliers), labels(&spec.zero_slacks), shown));
    }
    Ok(s)
}

#[derive(Serialize)]
struct QbReport {
    case: u8,
    n: usize,
    j0: f64,
    grid: usize,
    j1n_bar: Option<f64>,
    residuals: qst_core::brachistochrone::ResidualReport,
    max_residual: f64,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

fn qb_check(case_id: u8, n: usize, j0: f64, grid: usize, j1n_bar: Option<f64>) -> Result<Outcome> {
    let jb = (case_id == 7).then(|| j1n_bar.unwrap_or(j0));
    let (sched, ms) = stationary_trajectory(case_id, n, j0, jb, grid)?;
    let residuals = qb_residuals(&sched, &ms, n, j0)?;
    let max_residual = residuals.max();
    let note = match jb {
        Some(j) if (j.abs() - j0).abs() <= 1e-12 * j0 => Some("saturated case 7 coincides with case 8"),
        _ => None,
    };
    let r = QbReport {
        case: case_id,
        n,
        j0,
        grid,
        j1n_bar: jb,
        residuals,
        max_residual,
        pass: max_residual <= 1e-8,
        note,
    };
    emit(None, &json_line(&r)?)?;
    Ok(if r.pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct ScanSummary {
    n: usize,
    target_fidelity: f64,
    t_star: Option<f64>,
    t_min: f64,
    relative_error: Option<f64>,
    non_monotonic: bool,
    pass: bool,
}

fn fit_points(rows: &[SweepRow], x: Column) -> Vec<(f64, f64)> {
    rows.iter()
        .map(|r| {
            let xv = match x {
                Column::N => r.n as f64,
                Column::SigmaC => r.sigma_c,
                Column::SigmaF => r.sigma_f,
            };
            (xv, r.mean_infidelity)
        })
        .collect()
}

fn run(cli: Cli) -> Result<Outcome> {
    let started = Instant::now();
    match cli.command {
        Command::Verify { n, j0, hamiltonian, format } => verify(n as usize, j0, hamiltonian, format),
        Command::CaseTable { n, j0, j1n_bar, out } => {
            emit(out.as_deref(), &case_table(n as usize, j0, j1n_bar)?)?;
            if let Some(p) = &out {
                manifest::write_manifest(&[p], vec![], started)?;
            }
            Ok(Outcome::Pass)
        }
        Command::QbCheck { case_id, n, j0, grid, j1n_bar } => qb_check(case_id, n as usize, j0, grid, j1n_bar),
        Command::SpeedScan { n, j0, segments, restarts, target, seed, time_tol, family, out } => {
            let n = n as usize;
            let cfg = OptimizerConfig { family: family.into(), ..OptimizerConfig::new(segments, restarts, seed) };
            let fid_target = 1.0 - target;
            let r = min_time_bisection(n, j0, fid_target, time_tol, &cfg)?;
            let t_min = analytic_min_time(n, j0);
            let relative_error = r.t_star.map(|t| (t - t_min) / t_min);
            let close = if fid_target <= 0.0 {
                r.t_star == Some(0.0)
            } else {
                relative_error.is_some_and(|e| e.abs() <= 0.02)
            };
            let summary = ScanSummary {
                n,
                target_fidelity: fid_target,
                t_star: r.t_star,
                t_min,
                relative_error,
                non_monotonic: r.non_monotonic,
                pass: close && !r.non_monotonic,
            };
            if let Some(p) = &out {
                emit(Some(p), &bisection_csv_string(&r.samples))?;
                manifest::write_manifest(&[p], vec![seed], started)?;
            }
            emit(None, &json_line(&summary)?)?;
            Ok(if summary.pass { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Noise { n, sigma_c, sigma_f, trials, seed, j0, hamiltonian, measure, out } => {
            let mut rows = Vec::new();
            for &n in &n {
                for &sc in &sigma_c {
                    for &sf in &sigma_f {
                        let cfg = NoiseConfig {
                            j0,
                            hamiltonian: hamiltonian.into(),
                            ..NoiseConfig::new(n as usize, sc, sf, trials, seed)
                        };
                        let stats = run_mc_with(&cfg, measure.into())?;
                        rows.push(SweepRow::new(&cfg, &stats));
                    }
                }
            }
            emit(out.as_deref(), &sweep_csv_string(&rows))?;
            if let Some(p) = &out {
                manifest::write_manifest(&[p], vec![seed], started)?;
            }
            Ok(Outcome::Pass)
        }
        Command::Fit { input, model, x, out, svg } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let rows = read_sweep_csv(&text)?;
            let x = x.unwrap_or(if model == Model::Power { Column::N } else { Column::SigmaC });
            let pts = fit_points(&rows, x);
            let fit: Fit = match model {
                Model::Power => fit_power_law(&pts)?,
                Model::Linear => fit_linear(&pts)?,
            };
            emit(out.as_deref(), &json_line(&fit)?)?;
            if let Some(p) = &svg {
                let [a, b] = fit.params;
                let curve: Box<dyn Fn(f64) -> f64> = match model {
                    Model::Power => Box::new(move |x: f64| b * x.powf(a)),
                    Model::Linear => Box::new(move |x: f64| a * x + b),
                };
                let chart = svg::Chart {
                    points: &pts,
                    curve: (!fit.degenerate).then_some(curve),
                    log: model == Model::Power,
                    x_label: match x {
                        Column::N => "n",
                        Column::SigmaC => "sigma_c",
                        Column::SigmaF => "sigma_f",
                    },
                    y_label: "mean infidelity",
                };
                std::fs::write(p, chart.render()).with_context(|| format!("writing {}", p.display()))?;
            }
            let seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
            let written: Vec<&Path> = out.iter().chain(svg.iter()).map(PathBuf::as_path).collect();
            if !written.is_empty() {
                manifest::write_manifest(&written, seeds, started)?;
            }
            Ok(if fit.degenerate { Outcome::Fail } else { Outcome::Pass })
        }
        Command::Reduce { input, out } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let model = SpinModel::from_json(&text)?;
            let red = reduce_to_effective(&model)?;
            let v = serde_json::json!({ "effective": red.effective, "shift": red.shift });
            emit(out.as_deref(), &json_line(&v)?)?;
            if let Some(p) = &out {
                manifest::write_manifest(&[p], vec![], started)?;
            }
            Ok(Outcome::Pass)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use qst_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::UnsupportedCase(_) | E::UnsupportedBasis(_)) => 3,
        Some(E::InvalidSize(_) | E::SizeLimit { .. } | E::Domain(_) | E::ConstraintViolation(_) | E::Parse(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
