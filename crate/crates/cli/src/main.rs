//! `ll-lab` command line.
//!
//! Exit status: 0 when the run passes its criterion, 2 when it completes but
//! fails it, 1 on any error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ll_lab::dynamics::{AnisotropyParams, Equation, Scheme};
use ll_lab::energetics::energy_report;
use ll_lab::experiments::{
    emit_report, parse_config, run_conservation_suite, run_convergence_study, run_simulation,
    run_soliton_check, run_soliton_convergence, run_traveling_wave_suite, Report, StudyConfig, SweepMode,
};
use ll_lab::fields::{wavefield_from_magnetization, EpsParam};
use ll_lab::snapshot::{read_snapshot, write_snapshot, Snapshot};
use ll_lab::solitons::{CsSolitonParams, SolitonCase, SolitonParams};
use ll_lab::Error;

#[derive(Parser)]
#[command(
    name = "ll-lab",
    version,
    about = "Landau-Lifshitz / NLS_eps / cubic Schrodinger lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one equation and write diagnostics plus initial and final fields.
    Simulate(Common),
    /// Sample an LL soliton profile and check it against the traveling-wave system.
    Soliton {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Convergence of NLS_eps to the cubic Schrodinger equation as eps -> 0.
    Converge(Common),
    /// Closed-form convergence of the exact NLS_eps soliton to the cubic one.
    SolitonConverge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        /// Comparison time.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Run LL from an exact traveling wave and compare with the exact solution.
    TravelingWave {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        profile: ProfileArgs,
        /// Anisotropy used by the solver instead of the profile's own.
        #[arg(long)]
        solver_lambda: Option<f64>,
    },
    /// Check conservation of the energies (and M2 for the cubic equation).
    Conserve(Common),
    /// Print the energies of a snapshot as JSON.
    Energy {
        /// `.field` snapshot holding a complex field or a magnetization.
        snapshot: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Hierarchy orders to evaluate.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        orders: Vec<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON study config; every flag below overrides it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out/<subcommand>`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// `ifrk4` or `rk4`.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// `ll`, `nlse` or `cs`.
    #[arg(long, value_parser = parse_equation)]
    equation: Option<Equation>,
    /// LL anisotropy `lambda1,lambda3` for single runs.
    #[arg(long, value_parser = parse_pair)]
    anisotropy: Option<(f64, f64)>,
    #[arg(long)]
    a_const: Option<f64>,
    /// Run the eps sweep on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ProfileArgs {
    /// `i` (domain wall) or `ii` (localized).
    #[arg(long, value_parser = parse_case)]
    case: Option<SolitonCase>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "ifrk4" => Ok(Scheme::Ifrk4),
        "rk4" => Ok(Scheme::Rk4),
        _ => Err(format!("unknown scheme {s:?} (ifrk4 | rk4)")),
    }
}

fn parse_equation(s: &str) -> Result<Equation, String> {
    match s {
        "ll" => Ok(Equation::Ll),
        "nlse" => Ok(Equation::NlsEps),
        "cs" => Ok(Equation::Cs),
        _ => Err(format!("unknown equation {s:?} (ll | nlse | cs)")),
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let bad = || format!("expected `lambda1,lambda3`, got {s:?}");
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_case(s: &str) -> Result<SolitonCase, String> {
    match s {
        "i" | "I" => Ok(SolitonCase::I),
        "ii" | "II" => Ok(SolitonCase::II),
        _ => Err(format!("unknown case {s:?} (i | ii)")),
    }
}

impl Common {
    fn resolve(&self) -> Result<StudyConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(p)?,
            None => StudyConfig::default(),
        };
        if let Some(v) = &self.eps_list {
            cfg.eps_list = v.clone();
        }
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.n {
            cfg.grid.n = v;
            cfg.traveling_wave.n = v;
        }
        if let Some(v) = self.half_width {
            cfg.grid.half_width = v;
        }
        if let Some(v) = self.dt {
            cfg.integrator.dt = v;
        }
        if let Some(v) = self.t_end {
            cfg.integrator.t_end = v;
            cfg.traveling_wave.t_end = v;
        }
        if let Some(v) = self.scheme {
            cfg.integrator.scheme = Some(v);
        }
        if let Some(v) = self.equation {
            cfg.equation = v;
        }
        if let Some((l1, l3)) = self.anisotropy {
            cfg.anisotropy = Some(AnisotropyParams::new(l1, l3)?);
        }
        if let Some(v) = self.a_const {
            cfg.a_const = v;
        }
        if self.sequential {
            cfg.sweep = SweepMode::Sequential;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ProfileArgs {
    fn apply(&self, cfg: &mut StudyConfig) -> Result<(), Error> {
        let p = cfg.traveling_wave.params;
        let case = self.case.unwrap_or(p.case());
        let lambda = self.lambda.unwrap_or(p.lambda());
        let delta = self.delta.unwrap_or(p.delta());
        cfg.traveling_wave.params = match case {
            SolitonCase::I => SolitonParams::case_i(lambda, delta)?,
            SolitonCase::II => SolitonParams::case_ii(
                lambda,
                self.c.unwrap_or(p.c()),
                self.omega.unwrap_or(p.omega()),
                delta,
            )?,
        };
        Ok(())
    }
}

fn out_dir(cfg: &StudyConfig, name: &str) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| Path::new("out").join(name))
}

fn emit<R: Report>(report: &R, dir: &Path) -> Result<bool, Error> {
    let (json, csv) = emit_report(report, dir)?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(report.passed())
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg, "simulate");
            let out = run_simulation(&cfg)?;
            let r = &out.report;
            println!(
                "{}: {} steps of {:.3e} to t = {}, energy drift {:.3e}: {}",
                r.equation.name(),
                r.steps,
                r.dt,
                r.t_end,
                r.energy_drift,
                verdict(r.pass)
            );
            let pass = emit(r, &dir)?;
            write_snapshot(dir.join("initial.field"), &out.initial)?;
            write_snapshot(dir.join("final.field"), &out.last)?;
            Ok(pass)
        }
        Command::Soliton { common, profile } => {
            let mut cfg = common.resolve()?;
            profile.apply(&mut cfg)?;
            let dir = out_dir(&cfg, "soliton");
            let (r, m) = run_soliton_check(&cfg)?;
            let row = &r.rows[0];
            println!(
                "profile residuals {:.3e}, {:.3e}; identities {:.3e}, {:.3e}, {:.3e}: {}",
                row.profile_residual,
                row.phase_residual,
                row.gradient_identity,
                row.momentum_identity,
                row.v2_derivative_identity,
                verdict(r.pass)
            );
            let pass = emit(&r, &dir)?;
            write_snapshot(dir.join("profile.field"), &Snapshot::Magnetization(m))?;
            Ok(pass)
        }
        Command::Converge(common) => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg, "converge");
            let r = run_convergence_study(&cfg)?;
            for row in &r.rows {
                println!(
                    "eps {:<10} error {:.6e} ({})",
                    row.eps, row.error_norm, row.norm_kind
                );
            }
            println!(
                "slope {:.4} +- {:.4} (band {}..{}): {}",
                r.fitted_slope,
                r.slope_stderr,
                r.slope_band[0],
                r.slope_band[1],
                verdict(r.pass)
            );
            if r.floor_detected {
                println!("errors sit on the initial-data gap {:.3e}", r.initial_gap);
            }
            if r.horizon_exceeded {
                println!("note: t_end exceeds 1/(A K^2) for A = {}", cfg.a_const);
            }
            emit(&r, &dir)
        }
        Command::SolitonConverge { common, c, omega, t } => {
            let mut cfg = common.resolve()?;
            if c.is_some() || omega.is_some() {
                cfg.soliton =
                    CsSolitonParams::new(c.unwrap_or(cfg.soliton.c()), omega.unwrap_or(cfg.soliton.omega()))?;
            }
            if let Some(t) = t {
                cfg.soliton_t = t;
            }
            let dir = out_dir(&cfg, "soliton-converge");
            let r = run_soliton_convergence(&cfg)?;
            for row in &r.rows {
                println!(
                    "eps {:<10} error/eps {:.6} (|W| = {:.6})",
                    row.eps,
                    row.error_over_eps,
                    row.limit_constant.unwrap_or(f64::NAN)
                );
            }
            println!(
                "deviation at smallest eps {:.3e}, monotone {}: {}",
                r.limit_deviation.unwrap_or(f64::NAN),
                r.monotone.unwrap_or(false),
                verdict(r.pass)
            );
            emit(&r, &dir)
        }
        Command::TravelingWave {
            common,
            profile,
            solver_lambda,
        } => {
            let mut cfg = common.resolve()?;
            profile.apply(&mut cfg)?;
            if solver_lambda.is_some() {
                cfg.traveling_wave.solver_lambda = solver_lambda;
            }
            let dir = out_dir(&cfg, "traveling-wave");
            let r = run_traveling_wave_suite(&cfg)?;
            println!(
                "deviation {:.3e} at t = {} (tolerance {:.0e}), energy drift {:.3e}: {}",
                r.deviation,
                r.t_end,
                r.tolerance,
                r.energy_drift,
                verdict(r.pass)
            );
            emit(&r, &dir)
        }
        Command::Conserve(common) => {
            let cfg = common.resolve()?;
            let dir = out_dir(&cfg, "conserve");
            let r = run_conservation_suite(&cfg)?;
            print!(
                "{}: energy drift {:.3e} (budget {:.0e})",
                r.equation.name(),
                r.energy_drift,
                r.energy_threshold
            );
            if let Some(m) = r.mass_drift {
                print!(", mass drift {m:.3e}");
            }
            println!(": {}", verdict(r.pass));
            emit(&r, &dir)
        }
        Command::Energy {
            snapshot,
            eps,
            orders,
        } => {
            let eps = EpsParam::new(eps)?;
            let psi = match read_snapshot(&snapshot)? {
                Snapshot::Wave(w) => w,
                Snapshot::Magnetization(m) => wavefield_from_magnetization(&m, eps, 0.0)?,
                Snapshot::Real(_) => {
                    return Err(Error::Snapshot(format!(
                        "{} holds a real field; energies need a wave field or a magnetization",
                        snapshot.display()
                    )))
                }
            };
            let r = energy_report(&psi, eps, &orders)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors share the generic error status; 2 means a failed criterion
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}
