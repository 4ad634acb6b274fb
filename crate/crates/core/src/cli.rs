//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`] (file, then flag overrides), writes
//! its CSVs into the output directory and finishes with `manifest.cfg`, the
//! resolved configuration. `hpa-dyn replay <manifest>` reruns it.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{fit_with, FitOptions, FitProblem};
use crate::config::{parse_param_list, RunConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrator::{integrate, output_grid, IntegrationConfig};
use crate::io::{fmt_float, observations_csv, parse_observations, trajectory_csv, CsvText};
use crate::metrics::{score_fit, FitScore, ObservationSeries};
use crate::model::daylight;
use crate::sensitivity::{analyze, SensitivityOptions};
use crate::synthetic::observations_from_trajectory;

pub const MANIFEST_FILE: &str = "manifest.cfg";

#[derive(Debug, Parser)]
#[command(name = "hpa-dyn", version, about = "HPA-axis hormone model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model and write the trajectory.
    Simulate(CommonArgs),
    /// Estimate free parameters against an observation CSV.
    Fit(FitArgs),
    /// Score the configured model against an observation CSV.
    Validate(DataArgs),
    /// Relative sensitivity of cortisol to every parameter.
    Sensitivity(CommonArgs),
    /// Daylight forcing over one day.
    Daylight(CommonArgs),
    /// Rerun the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct DataArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub free: Option<String>,
}

/// Files written by one command.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(cli.command) {
        Ok(bundle) => {
            for f in &bundle.files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn resolve(common: &CommonArgs, command: &str) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::parse_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t_end) = common.t_end {
        cfg.integration.t_end = t_end;
    }
    cfg.command = Some(command.to_string());
    Ok(cfg)
}

fn resolve_data(args: &DataArgs, command: &str) -> Result<RunConfig> {
    let mut cfg = resolve(&args.common, command)?;
    if let Some(d) = &args.data {
        cfg.data_path = Some(d.clone());
    }
    Ok(cfg)
}

pub fn run(command: Command) -> Result<ReportBundle> {
    let cfg = match command {
        Command::Simulate(a) => resolve(&a, "simulate")?,
        Command::Sensitivity(a) => resolve(&a, "sensitivity")?,
        Command::Daylight(a) => resolve(&a, "daylight")?,
        Command::Validate(a) => resolve_data(&a, "validate")?,
        Command::Fit(a) => {
            let mut cfg = resolve_data(&a.data, "fit")?;
            if let Some(seed) = a.seed {
                cfg.fit.seed = seed;
            }
            if let Some(free) = &a.free {
                cfg.fit.free = parse_param_list(free)?;
            }
            cfg
        }
        Command::Replay { manifest, out } => {
            let mut cfg = RunConfig::parse_file(&manifest)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if cfg.command.is_none() {
                return Err(Error::InvalidConfig(format!(
                    "{} has no run.command",
                    manifest.display()
                )));
            }
            cfg
        }
    };
    execute(&cfg)
}

/// Runs the command named in `cfg.command` with a fully resolved configuration.
pub fn execute(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.check()?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut out = Outputs {
        dir: dir.clone(),
        files: Vec::new(),
    };
    match cfg.command.as_deref() {
        Some("simulate") => simulate(cfg, &mut out)?,
        Some("validate") => validate(cfg, &mut out)?,
        Some("fit") => fit_cmd(cfg, &mut out)?,
        Some("sensitivity") => sensitivity(cfg, &mut out)?,
        Some("daylight") => daylight_cmd(&mut out)?,
        Some(other) => return Err(Error::InvalidConfig(format!("unknown command `{other}`"))),
        None => return Err(Error::InvalidConfig("no command given".into())),
    }
    let manifest = dir.join(MANIFEST_FILE);
    let text = format!(
        "# hpa-dyn {} run manifest\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.to_text()
    );
    fs::write(&manifest, text).map_err(|e| Error::io(&manifest, e))?;
    out.files.push(manifest.clone());
    Ok(ReportBundle {
        dir,
        files: out.files,
        manifest,
    })
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, name: &str, csv: &CsvText) -> Result<()> {
        let path = self.dir.join(name);
        csv.write(&path)?;
        self.files.push(path);
        Ok(())
    }
}

fn load_observations(cfg: &RunConfig) -> Result<ObservationSeries> {
    let path = cfg
        .data_path
        .as_deref()
        .ok_or_else(|| Error::InvalidConfig("--data is required".into()))?;
    parse_observations(path)
}

/// Integration window widened to cover every observation time.
fn window_for(base: &IntegrationConfig, obs: &ObservationSeries) -> IntegrationConfig {
    let first = obs.times.first().copied().unwrap_or(base.t0);
    let last = obs.times.last().copied().unwrap_or(base.t_end);
    IntegrationConfig {
        t0: base.t0.min(first),
        t_end: base.t_end.max(last),
        ..base.clone()
    }
}

fn simulate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let traj = integrate(&cfg.integration, &cfg.model)?;
    out.write("trajectory.csv", &trajectory_csv(&traj))?;
    out.write(
        "observations.csv",
        &observations_csv(&observations_from_trajectory(&traj, "simulated")),
    )
}

fn score_csv(score: &FitScore) -> CsvText {
    let mut csv = CsvText::new(&["hormone", "mape_pct", "rmse"]);
    if let (Some(m), Some(r)) = (score.mape_acth, score.rmse_acth) {
        csv.row(["acth".into(), fmt_float(m), fmt_float(r)]);
    }
    if let (Some(m), Some(r)) = (score.mape_cortisol, score.rmse_cortisol) {
        csv.row(["cortisol".into(), fmt_float(m), fmt_float(r)]);
    }
    csv
}

fn validate(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let obs = load_observations(cfg)?;
    let traj = integrate(&window_for(&cfg.integration, &obs), &cfg.model)?;
    out.write("fit_score.csv", &score_csv(&score_fit(&traj, &obs)?))
}

fn fit_cmd(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let obs = load_observations(cfg)?;
    let fs = &cfg.fit;
    let mut prob = FitProblem::new(cfg.model, fs.free.clone());
    for (i, name) in fs.free.iter().enumerate() {
        if let Some(v) = fs.lower.get(name) {
            prob.lower[i] = *v;
        }
        if let Some(v) = fs.upper.get(name) {
            prob.upper[i] = *v;
        }
    }
    prob.objective = fs.objective;
    prob.weight_acth = fs.weight_acth;
    prob.weight_cortisol = fs.weight_cortisol;
    prob.integration = window_for(&cfg.integration, &obs);

    let init: Vec<f64> = fs
        .free
        .iter()
        .map(|n| fs.init.get(n).copied().unwrap_or_else(|| cfg.model.get(*n)))
        .collect();
    let opts = FitOptions {
        budget: fs.budget,
        seed: fs.seed,
        starts: fs.starts,
        exec: Execution::default(),
        ..Default::default()
    };
    let res = fit_with(&prob, &obs, &init, &opts, |_, _| {})?;

    let mut params = CsvText::new(&["parameter", "initial", "fitted", "lower", "upper"]);
    for (i, name) in fs.free.iter().enumerate() {
        params.row([
            name.to_string(),
            fmt_float(init[i]),
            fmt_float(res.free_values[i]),
            fmt_float(prob.lower[i]),
            fmt_float(prob.upper[i]),
        ]);
    }
    out.write("fitted_parameters.csv", &params)?;

    let traj = integrate(&prob.integration, &res.fitted)?;
    out.write("fit_score.csv", &score_csv(&score_fit(&traj, &obs)?))?;

    let mut summary = CsvText::new(&["key", "value"]);
    summary.row(["objective".into(), fmt_float(res.objective_value)]);
    summary.row(["evaluations".into(), res.evaluations.to_string()]);
    summary.row(["converged".into(), res.converged.to_string()]);
    out.write("fit_summary.csv", &summary)?;

    let mut history = CsvText::new(&["evaluation", "best_objective"]);
    for (n, v) in &res.history {
        history.row([n.to_string(), fmt_float(*v)]);
    }
    out.write("fit_history.csv", &history)
}

fn sensitivity(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let se = &cfg.sens;
    let n = (1440.0 / se.grid_step).round() as usize;
    let grid: Vec<f64> = (0..n).map(|i| se.t0 + i as f64 * se.grid_step).collect();
    let opts = SensitivityOptions {
        rel_step: se.rel_step,
        integration: IntegrationConfig {
            abs_tol: se.tol,
            rel_tol: se.tol,
            ..cfg.integration.clone()
        },
        fd_check: se.fd_check,
        exec: Execution::default(),
    };
    let report = analyze(&cfg.model, &grid, &opts)?;

    let mut ranked = CsvText::new(&["parameter", "si_aggregate", "rank"]);
    for (rank, name) in report.ranking.iter().enumerate() {
        let agg = report.aggregate(*name).unwrap_or(f64::NAN);
        ranked.row([name.to_string(), fmt_float(agg), (rank + 1).to_string()]);
    }
    out.write("sensitivity.csv", &ranked)?;

    let names: Vec<String> = report
        .parameter_names
        .iter()
        .map(|n| n.to_string())
        .collect();
    let mut header = vec!["parameter"];
    header.extend(names.iter().map(String::as_str));
    let mut corr = CsvText::new(&header);
    if let Some(m) = &report.correlation {
        for (name, row) in names.iter().zip(m) {
            corr.row(std::iter::once(name.clone()).chain(row.iter().map(|v| fmt_float(*v))));
        }
    }
    out.write("correlation.csv", &corr)?;

    let mut header = vec!["t_min"];
    header.extend(names.iter().map(String::as_str));
    let mut series = CsvText::new(&header);
    for (k, t) in report.grid.iter().enumerate() {
        series.row(
            std::iter::once(fmt_float(*t)).chain(report.si_series.iter().map(|s| fmt_float(s[k]))),
        );
    }
    out.write("si_series.csv", &series)?;

    if let Some(half) = &report.half_step_aggregate {
        let mut diag = CsvText::new(&[
            "parameter",
            "si_aggregate",
            "si_aggregate_half_step",
            "fd_stable",
        ]);
        for (i, name) in report.parameter_names.iter().enumerate() {
            diag.row([
                name.to_string(),
                fmt_float(report.si_aggregate[i]),
                fmt_float(half[i]),
                (!report.fd_unstable.contains(name)).to_string(),
            ]);
        }
        out.write("sensitivity_diagnostics.csv", &diag)?;
    }
    Ok(())
}

fn daylight_cmd(out: &mut Outputs) -> Result<()> {
    let mut csv = CsvText::new(&["t_min", "D"]);
    for t in output_grid(0.0, 1440.0, 1.0) {
        csv.row([fmt_float(t), fmt_float(daylight(t))]);
    }
    out.write("daylight.csv", &csv)
}

/// Reads the manifest written into `dir`.
pub fn read_manifest(dir: &Path) -> Result<RunConfig> {
    RunConfig::parse_file(&dir.join(MANIFEST_FILE))
}
