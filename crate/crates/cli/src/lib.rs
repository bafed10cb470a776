//! Batch front end: loads a system, runs the recursion, certifies or studies
//! convergence, and writes JSON, CSV and SVG outputs into an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reachunder::io::{outline_csv, parse_system};
use reachunder::reachcore::ReachResultFile;
use reachunder::validate::default_witness_tolerance;
use reachunder::{
    certify_under_approximation, convergence_study, dynamics, reach_sets, CertificationReport,
    ConvergenceMode, ConvergenceReport, SystemSpec, TransitionMode, TransitionOracle,
};

pub mod plot;

pub const REACH_FILE: &str = "reach.json";
pub const OUTLINE_FILE: &str = "outlines.csv";
pub const CERTIFY_FILE: &str = "certify.json";
pub const CONVERGENCE_FILE: &str = "convergence.json";
pub const PLOT_FILE: &str = "plot.svg";

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "REACHUNDER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "reachunder", version, about = "Zonotopic under-approximations of reachable sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the sets on one grid and export them.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        /// Outline points per set in the CSV export.
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Check witnesses for the final set and three intermediate sets.
    Certify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Witness tolerance; defaults to 1e-6, or 1e-5 for drift with a singular point.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Distances of coarse grids to a fine reference grid.
    Converge {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        steps_list: Vec<usize>,
        /// Defaults to the smallest common multiple of the list that is at least 4 x its maximum.
        #[arg(long)]
        ref_steps: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Final)]
        mode: ModeArg,
    },
    /// Overlay the outlines of several grids in one SVG.
    Plot {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        steps_list: Vec<usize>,
        /// Also draw this fine grid, in black.
        #[arg(long)]
        ref_steps: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Final)]
        mode: ModeArg,
        #[arg(long, default_value_t = 256)]
        directions: usize,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON system description.
    #[arg(long, conflicts_with = "builtin", required_unless_present = "builtin")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_parser = ["academic", "dcdc"])]
    pub builtin: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Transition matrix evaluation; defaults to the most accurate one available.
    #[arg(long, value_enum)]
    pub transition: Option<TransitionArg>,
    /// Largest integrator step for `ode_numeric`.
    #[arg(long)]
    pub h_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Final,
    Tube,
}

impl From<ModeArg> for ConvergenceMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Final => ConvergenceMode::FinalSet,
            ModeArg::Tube => ConvergenceMode::Tube,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransitionArg {
    #[value(name = "closed_form")]
    ClosedForm,
    #[value(name = "expm_piecewise")]
    ExpmPiecewise,
    #[value(name = "ode_numeric")]
    OdeNumeric,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    File(PathBuf),
    Builtin(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Run,
    Certify,
    Converge,
    Plot,
}

/// Everything one invocation needs, independent of how it was parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub system: SystemSource,
    pub out: PathBuf,
    pub transition: Option<TransitionArg>,
    pub h_max: Option<f64>,
    /// One entry for `run` and `certify`; the study list otherwise.
    pub steps: Vec<usize>,
    pub reference_steps: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub trials: usize,
    pub directions: usize,
    pub mode: ConvergenceMode,
}

impl RunConfig {
    pub fn new(command: CommandKind, system: SystemSource, out: impl Into<PathBuf>) -> Self {
        Self {
            command,
            system,
            out: out.into(),
            transition: None,
            h_max: None,
            steps: vec![10],
            reference_steps: None,
            seed: 0,
            tol: None,
            trials: 500,
            directions: 64,
            mode: ConvergenceMode::FinalSet,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps.is_empty() || self.steps.contains(&0) {
            bail!("step counts must be positive, got {:?}", self.steps);
        }
        if self.reference_steps == Some(0) {
            bail!("reference step count must be positive");
        }
        if let Some(h) = self.h_max {
            if !(h > 0.0 && h.is_finite()) {
                bail!("--h-max must be positive, got {h}");
            }
        }
        if let Some(t) = self.tol {
            if !(t >= 0.0 && t.is_finite()) {
                bail!("--tol must be non-negative, got {t}");
            }
        }
        Ok(())
    }

    fn single_steps(&self) -> Result<usize> {
        match self.steps.as_slice() {
            [n] => Ok(*n),
            other => bail!("expected one step count, got {other:?}"),
        }
    }
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        let base = |kind, c: CommonArgs| {
            let system = match (c.spec, c.builtin) {
                (Some(p), _) => SystemSource::File(p),
                (None, Some(b)) => SystemSource::Builtin(b),
                (None, None) => unreachable!("clap requires --spec or --builtin"),
            };
            let mut cfg = RunConfig::new(kind, system, c.out);
            cfg.transition = c.transition;
            cfg.h_max = c.h_max;
            cfg
        };
        match cli.command {
            Command::Run {
                common,
                steps,
                directions,
            } => RunConfig {
                steps: vec![steps],
                directions,
                ..base(CommandKind::Run, common)
            },
            Command::Certify {
                common,
                steps,
                trials,
                tol,
                seed,
            } => RunConfig {
                steps: vec![steps],
                trials,
                tol,
                seed,
                ..base(CommandKind::Certify, common)
            },
            Command::Converge {
                common,
                steps_list,
                ref_steps,
                mode,
            } => RunConfig {
                steps: steps_list,
                reference_steps: ref_steps,
                mode: mode.into(),
                ..base(CommandKind::Converge, common)
            },
            Command::Plot {
                common,
                steps_list,
                ref_steps,
                mode,
                directions,
            } => RunConfig {
                steps: steps_list,
                reference_steps: ref_steps,
                mode: mode.into(),
                directions,
                ..base(CommandKind::Plot, common)
            },
        }
    }
}

/// Outcome of a command: the files written and whether the run counts as a success.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub success: bool,
    pub summary: String,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command {
        CommandKind::Run => cmd_run(cfg),
        CommandKind::Certify => cmd_certify(cfg),
        CommandKind::Converge => cmd_converge(cfg),
        CommandKind::Plot => cmd_plot(cfg),
    }
}

pub fn load_system(source: &SystemSource) -> Result<SystemSpec> {
    match source {
        SystemSource::Builtin(name) => Ok(dynamics::builtin(name)?),
        SystemSource::File(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read system description {}", path.display()))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "system".into());
            parse_system(&text, &name).with_context(|| format!("invalid system description {}", path.display()))
        }
    }
}

fn oracle<'a>(cfg: &RunConfig, sys: &'a SystemSpec) -> Result<TransitionOracle<'a>> {
    let default_h = || 1e-3 * (sys.t_hi() - sys.t_lo());
    Ok(match (cfg.transition, cfg.h_max) {
        (None, None) => TransitionOracle::preferred(sys),
        (None | Some(TransitionArg::OdeNumeric), h) => TransitionOracle::new(
            sys,
            TransitionMode::OdeNumeric {
                h_max: h.unwrap_or_else(default_h),
            },
        )?,
        (Some(TransitionArg::ClosedForm), _) => TransitionOracle::new(sys, TransitionMode::ClosedForm)?,
        (Some(TransitionArg::ExpmPiecewise), _) => TransitionOracle::new(sys, TransitionMode::ExpmPiecewise)?,
    })
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes `reach.json` and, for planar systems, `outlines.csv`.
pub fn cmd_run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let steps = cfg.single_steps()?;
    let sys = load_system(&cfg.system)?;
    let orc = oracle(cfg, &sys)?;
    let result = reach_sets(&orc, steps)?;
    prepare_out(&cfg.out)?;
    let mut files = vec![write_file(&cfg.out, REACH_FILE, &to_json(&result.to_file())?)?];
    if sys.state_dim() == 2 {
        files.push(write_file(&cfg.out, OUTLINE_FILE, &outline_csv(&result, cfg.directions)?)?);
    }
    let growth = result.growth_check(&sys, 360);
    Ok(Outcome {
        files,
        success: true,
        summary: format!(
            "{}: {} sets on [{}, {}] ({}), final set has {} generators; growth bound {} {:.6} <= {:.6}",
            sys.name(),
            steps + 1,
            sys.t_lo(),
            sys.t_hi(),
            orc.mode().name(),
            result.final_set().num_generators(),
            if growth.holds { "holds" } else { "VIOLATED" },
            growth.max_support,
            growth.bound
        ),
    })
}

#[derive(Debug, Serialize)]
struct CertifyFile<'a> {
    system: &'a str,
    fingerprint: &'a str,
    mode: TransitionMode,
    steps: usize,
    #[serde(flatten)]
    report: &'a CertificationReport,
}

/// Writes `certify.json`; the outcome fails iff some witness misses its target.
pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let steps = cfg.single_steps()?;
    let sys = load_system(&cfg.system)?;
    let orc = oracle(cfg, &sys)?;
    let result = reach_sets(&orc, steps)?;
    let tol = cfg.tol.unwrap_or_else(|| default_witness_tolerance(&sys));
    let report = certify_under_approximation(&orc, &result, cfg.trials, tol, cfg.seed)?;
    prepare_out(&cfg.out)?;
    let file = CertifyFile {
        system: sys.name(),
        fingerprint: result.fingerprint(),
        mode: orc.mode(),
        steps,
        report: &report,
    };
    let path = write_file(&cfg.out, CERTIFY_FILE, &to_json(&file)?)?;
    Ok(Outcome {
        files: vec![path],
        success: report.passed,
        summary: format!(
            "{}: {} witnesses on sets {:?}, max error {:.3e} (tol {:e}): {}",
            sys.name(),
            report.witnesses_checked,
            report.checked_indices,
            report.max_error,
            tol,
            if report.passed { "pass" } else { "FAIL" }
        ),
    })
}

/// Smallest common multiple of `steps` that is at least four times the largest entry.
pub fn default_reference_steps(steps: &[usize]) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let l = steps.iter().fold(1, |acc, &n| acc / gcd(acc, n) * n);
    let need = 4 * steps.iter().copied().max().unwrap_or(1);
    need.div_ceil(l) * l
}

#[derive(Debug, Serialize)]
struct ConvergenceFile<'a> {
    system: &'a str,
    fingerprint: String,
    transition: TransitionMode,
    #[serde(flatten)]
    report: &'a ConvergenceReport,
}

/// Writes `convergence.json` with every raw distance and the doubling ratios.
pub fn cmd_converge(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let sys = load_system(&cfg.system)?;
    let orc = oracle(cfg, &sys)?;
    let reference = cfg.reference_steps.unwrap_or_else(|| default_reference_steps(&cfg.steps));
    let report = convergence_study(&orc, &cfg.steps, reference, cfg.mode)?;
    prepare_out(&cfg.out)?;
    let file = ConvergenceFile {
        system: sys.name(),
        fingerprint: sys.fingerprint(),
        transition: orc.mode(),
        report: &report,
    };
    let path = write_file(&cfg.out, CONVERGENCE_FILE, &to_json(&file)?)?;
    let pairs: Vec<String> = report
        .steps
        .iter()
        .zip(&report.distances)
        .map(|(n, d)| format!("d({n}) = {d:.6e}"))
        .collect();
    Ok(Outcome {
        files: vec![path],
        success: true,
        summary: format!("{} vs N = {}: {}", sys.name(), reference, pairs.join(", ")),
    })
}

/// Writes `plot.svg`: one layer per step count, plus the reference grid in black.
pub fn cmd_plot(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let sys = load_system(&cfg.system)?;
    if sys.state_dim() != 2 {
        bail!(
            "plotting needs a planar system, got state dimension {}; projecting onto coordinates is not supported",
            sys.state_dim()
        );
    }
    let orc = oracle(cfg, &sys)?;
    let mut steps = cfg.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let mut layers = Vec::new();
    for (k, &n) in steps.iter().enumerate() {
        let result = reach_sets(&orc, n)?;
        layers.push(plot::Layer {
            label: format!("N = {n}"),
            color: plot::palette(k).to_string(),
            sets: pick_sets(&result, cfg.mode),
        });
    }
    if let Some(n) = cfg.reference_steps {
        let result = reach_sets(&orc, n)?;
        layers.push(plot::Layer {
            label: format!("N = {n} (reference)"),
            color: plot::REFERENCE_COLOR.to_string(),
            sets: pick_sets(&result, cfg.mode),
        });
    }
    let title = match cfg.mode {
        ConvergenceMode::FinalSet => format!("{}: final set at t = {}", sys.name(), sys.t_hi()),
        ConvergenceMode::Tube => format!("{}: tube over [{}, {}]", sys.name(), sys.t_lo(), sys.t_hi()),
    };
    let svg = plot::render_svg(&title, &layers, cfg.directions)?;
    prepare_out(&cfg.out)?;
    let path = write_file(&cfg.out, PLOT_FILE, &svg)?;
    Ok(Outcome {
        files: vec![path],
        success: true,
        summary: format!("{}: {} layers", sys.name(), layers.len()),
    })
}

fn pick_sets(result: &reachunder::ReachResult, mode: ConvergenceMode) -> Vec<reachunder::Zonotope> {
    match mode {
        ConvergenceMode::FinalSet => vec![result.final_set().clone()],
        ConvergenceMode::Tube => reachunder::tube(result).to_vec(),
    }
}

/// Reads a `reach.json` written by [`cmd_run`].
pub fn read_reach_file(path: &Path) -> Result<ReachResultFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed result file {}", path.display()))
}

/// Parses `REACHUNDER_THREADS`; `None` when unset.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("{THREADS_ENV} must be a positive integer, got {v:?}"),
        },
    }
}
