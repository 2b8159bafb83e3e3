//! `phasekit` command-line driver.
//!
//! Every command reads one experiment config, recomputes the cheap upstream
//! stages in memory and writes its CSVs and reports under `output_dir`.

pub mod config;
pub mod files;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use phasekit::limit_cycle::{CycleOptions, LimitCycle, ShiftOptions};
use phasekit::models::Model;
use phasekit::phase_sim::{adler_half_range, injection_lock, simulate_network, PhaseOscillator};
use phasekit::ppv::{
    adjoint_ppv, compare_ppv, ppv_from_prc, sinusoidality_report, AdjointOptions, PpvCurve,
};
use phasekit::prc::{auto_charge, sweep_prc, ImpulseSpec, PrcCurve, PrcOptions};
use thiserror::Error;

pub use config::{load_config, Charge, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {key}: {reason}")]
    Config { key: String, reason: String },
    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: phasekit::Error,
    },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
}

impl CliError {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, reason: impl Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            reason: reason.to_string(),
        }
    }

    /// A required input that an earlier command should have produced.
    pub fn missing(path: &Path) -> Self {
        CliError::config(
            path.display().to_string(),
            "file not found; run `phasekit steady` and `phasekit ppv` (or `pipeline`) first",
        )
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }
}

/// Errors from reading stored curves are numerical unless tagged otherwise.
impl From<phasekit::Error> for CliError {
    fn from(source: phasekit::Error) -> Self {
        CliError::Numerical {
            stage: "input",
            source,
        }
    }
}

trait Stage<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for phasekit::Result<T> {
    fn stage(self, name: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numerical {
            stage: name,
            source,
        })
    }
}

const CONFIG_HELP: &str = "\
Config file (TOML), paths relative to its directory. Defaults:
  output_dir = \"out\"
  [model]        model = \"vdp\" | \"ring3\" | \"memristor\" plus its parameters
                 (vdp: mu; ring3: gain, tau; memristor: Vdc, Rs, Cp, d, a0, a1, b2, c),
                 optional output, initial_state, [model.injection] state/gain
  [integration]  method = \"rk4\", bootstrap_step = 1e-3, steps_per_period = 2000,
                 settle_periods = 20, max_settle_periods = 500, settle_tol = 1e-8,
                 period_tol = 1e-6, crossings = 16, grid_size = 2000,
                 warmup_steps = 20000, discard_periods = 20
  [prc]          n_points = 100, charge = \"auto\" (or coulombs), width = T0/1000,
                 mode = \"state_jump\" | \"rect_pulse\", target_shift = 0.05
  [ppv]          harmonics = 16, compare = false
  [phasesim]     network = <file>, t_end = <s>, dt = min T0/500, record_every = 10
  [lock]         amplitude = <A>, detuning = <fraction> or w_inj = <rad/s>,
                 horizon_periods = 2000

Environment: PHASEKIT_THREADS caps the PRC sweep worker count.
Exit codes: 0 ok, 1 i/o failure, 2 bad config, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "phasekit", version, about = "Oscillator PRC/PPV extraction and phase-domain simulation", after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Settle onto the limit cycle; writes steady.csv and steady.txt.
    Steady(Common),
    /// Sweep the phase response curve; writes prc.csv.
    Prc {
        #[command(flatten)]
        common: Common,
        /// Number of injection times, overriding `prc.n_points`.
        #[arg(long)]
        points: Option<usize>,
    },
    /// PPV from the PRC; writes ppv.csv (and the adjoint comparison with --compare).
    Ppv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        compare: bool,
    },
    /// PPV from the adjoint equation; writes ppv_adjoint.csv.
    Adjoint(Common),
    /// Compare stored ppv.csv against ppv_adjoint.csv; writes compare.txt.
    Compare(Common),
    /// Injection-lock test on the stored PPV; writes lock.txt.
    Lock(Common),
    /// Simulate a phase-macromodel network; writes trace.csv.
    Phasesim(Common),
    /// steady, prc, ppv, adjoint and compare in one run.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        points: Option<usize>,
    },
}

struct Run {
    cfg: ExperimentConfig,
    config_text: String,
    config_path: PathBuf,
    model: Model,
    out: PathBuf,
    threads: Option<usize>,
    stages: Vec<(&'static str, f64)>,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("PHASEKIT_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::config(
                "PHASEKIT_THREADS",
                format!("expected a positive integer, got `{v}`"),
            )),
        },
    }
}

impl Run {
    fn open(common: &Common) -> Result<Self, CliError> {
        let cfg = load_config(&common.config)?;
        let config_text =
            std::fs::read_to_string(&common.config).map_err(|e| CliError::io(&common.config, e))?;
        let model = cfg.build_model()?;
        let out = common.out.clone().unwrap_or_else(|| cfg.output_path());
        std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        Ok(Self {
            cfg,
            config_text,
            config_path: common.config.clone(),
            model,
            out,
            threads: threads_from_env()?,
            stages: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn timed<T>(
        &mut self,
        name: &'static str,
        f: impl FnOnce(&Self) -> Result<T, CliError>,
    ) -> Result<T, CliError> {
        let start = Instant::now();
        let r = f(self)?;
        self.stages.push((name, start.elapsed().as_secs_f64()));
        Ok(r)
    }

    fn cycle_options(&self) -> CycleOptions {
        let i = &self.cfg.integration;
        CycleOptions {
            method: i.method,
            output_index: self.model.output_index,
            settle_periods: i.settle_periods,
            max_settle_periods: i.max_settle_periods,
            settle_tol: i.settle_tol,
            period_tol: i.period_tol,
            crossings: i.crossings,
            grid_size: i.grid_size,
            steps_per_period: i.steps_per_period,
            warmup_steps: i.warmup_steps,
        }
    }

    fn prc_options(&self) -> PrcOptions {
        let i = &self.cfg.integration;
        PrcOptions {
            shift: ShiftOptions {
                discard_periods: i.discard_periods,
                crossings: i.crossings,
                period_tol: i.period_tol,
            },
            weak: true,
            threads: self.threads,
        }
    }

    fn output_name(&self) -> String {
        self.model.system.state_names()[self.model.output_index].clone()
    }

    fn steady(&mut self) -> Result<LimitCycle, CliError> {
        let lc = self.timed("steady", |r| {
            LimitCycle::compute(
                r.model.system.as_ref(),
                &r.model.initial_state,
                r.cfg.integration.bootstrap_step,
                &r.cycle_options(),
            )
            .stage("limit_cycle")
        })?;
        let names = self.model.system.state_names();
        files::write_steady(&self.path("steady.csv"), &lc, &names)?;
        let j = lc.ref_state_index;
        let samples = lc.output_samples();
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(*v), b.max(*v))
            });
        let section: Vec<String> = lc.section_state().iter().map(|v| files::num(*v)).collect();
        files::write_report(
            &self.path("steady.txt"),
            &[
                ("model", self.cfg.model.name().to_string()),
                ("period_s", files::num(lc.period)),
                ("omega0_rad_per_s", files::num(lc.omega0)),
                ("step_s", files::num(lc.step)),
                ("output_state", names[j].clone()),
                ("output_min", files::num(lo)),
                ("output_max", files::num(hi)),
                ("section_level", files::num(lc.ref_level)),
                ("section_state", section.join(" ")),
            ],
        )?;
        Ok(lc)
    }

    fn prc(&mut self, lc: &LimitCycle, points: Option<usize>) -> Result<PrcCurve, CliError> {
        let n = points.unwrap_or(self.cfg.prc.n_points);
        if n < 4 {
            return Err(CliError::config("--points", "need at least 4"));
        }
        let curve = self.timed("prc", |r| {
            let sys = r.model.system.as_ref();
            let p = &r.cfg.prc;
            let opts = r.prc_options();
            let q = match p.charge {
                Charge::Explicit(q) => q,
                Charge::Auto => auto_charge(sys, lc, &r.model.port, p.mode, p.target_shift, &opts)
                    .stage("prc")?,
            };
            let width = p.width.unwrap_or(lc.period / 1000.0);
            let spec = ImpulseSpec::new(width, q / width, r.model.port, p.mode).stage("prc")?;
            sweep_prc(sys, lc, &spec, n, &opts).stage("prc")
        })?;
        files::write_prc(&self.path("prc.csv"), &curve)?;
        files::write_report(
            &self.path("prc.txt"),
            &[
                ("charge_C", files::num(curve.impulse.charge())),
                ("width_s", files::num(curve.impulse.width)),
                ("amplitude_A", files::num(curve.impulse.amplitude)),
                ("max_abs_prc_rad", files::num(curve.max_abs())),
                ("n_points", curve.points.len().to_string()),
            ],
        )?;
        Ok(curve)
    }

    fn ppv(&mut self, curve: &PrcCurve) -> Result<PpvCurve, CliError> {
        let h = self.cfg.ppv.harmonics;
        let ppv = self.timed("ppv", |_| ppv_from_prc(curve, h).stage("ppv"))?;
        files::write_ppv(&self.path("ppv.csv"), &ppv)?;
        Ok(ppv)
    }

    fn adjoint(&mut self, lc: &LimitCycle) -> Result<PpvCurve, CliError> {
        let ppv = self.timed("adjoint", |r| {
            let opts = AdjointOptions {
                harmonics: r.cfg.ppv.harmonics,
                ..AdjointOptions::default()
            };
            adjoint_ppv(r.model.system.as_ref(), lc, &r.model.port, &opts).stage("ppv")
        })?;
        files::write_ppv(&self.path("ppv_adjoint.csv"), &ppv)?;
        Ok(ppv)
    }

    fn compare(&mut self, from_prc: &PpvCurve, adjoint: &PpvCurve) -> Result<(), CliError> {
        let (rep, sin) = self.timed("compare", |_| {
            let rep = compare_ppv(from_prc, adjoint).stage("ppv")?;
            Ok((rep, sinusoidality_report(from_prc, &from_prc.lc)))
        })?;
        files::write_report(
            &self.path("compare.txt"),
            &[
                ("rms_rel", files::num(rep.rms_rel)),
                ("max_rel", files::num(rep.max_rel)),
                ("phase_lag_rad", files::num(rep.phase_lag)),
                ("max_abs_gamma_from_prc", files::num(from_prc.max_abs())),
                ("max_abs_gamma_adjoint", files::num(adjoint.max_abs())),
                ("fundamental_from_prc", files::num(from_prc.fundamental())),
                ("fundamental_adjoint", files::num(adjoint.fundamental())),
                (
                    "ppv_fundamental_fraction",
                    files::num(sin.ppv_fundamental_fraction),
                ),
                ("output_thd", files::num(sin.output_thd)),
                ("ppv_output_offset_deg", files::num(sin.offset_deg)),
            ],
        )
    }

    fn stored_ppv(&self, name: &str) -> Result<PpvCurve, CliError> {
        files::load_ppv(
            &self.path(name),
            &self.path("steady.csv"),
            &self.output_name(),
            None,
            self.cfg.ppv.harmonics,
        )
    }

    fn lock(&mut self) -> Result<(), CliError> {
        let Some(l) = self.cfg.lock.clone() else {
            return Err(CliError::config("lock", "missing [lock] section"));
        };
        let ppv = self.stored_ppv("ppv.csv")?;
        let (osc, rep, w_inj) = self.timed("lock", |_| {
            let osc = PhaseOscillator::new(std::sync::Arc::new(ppv), 0.0).stage("phase_sim")?;
            let w_inj = l
                .w_inj
                .unwrap_or_else(|| osc.omega0 * (1.0 + l.detuning.unwrap_or(0.0)));
            let rep =
                injection_lock(&osc, l.amplitude, w_inj, l.horizon_periods).stage("phase_sim")?;
            Ok((osc, rep, w_inj))
        })?;
        let opt = |v: Option<f64>| v.map(files::num).unwrap_or_else(|| "none".to_string());
        files::write_report(
            &self.path("lock.txt"),
            &[
                ("locked", rep.locked.to_string()),
                ("omega0_rad_per_s", files::num(osc.omega0)),
                ("w_inj_rad_per_s", files::num(w_inj)),
                ("amplitude_A", files::num(l.amplitude)),
                (
                    "adler_half_range_rad_per_s",
                    files::num(adler_half_range(&osc, l.amplitude)),
                ),
                ("steady_phase_deg", opt(rep.steady_phase_deg)),
                ("beat_freq_rad_per_s", opt(rep.beat_freq)),
                ("mean_freq_rad_per_s", files::num(rep.mean_freq)),
            ],
        )
    }

    fn phasesim(&mut self) -> Result<(), CliError> {
        let Some(s) = self.cfg.phasesim.clone() else {
            return Err(CliError::config("phasesim", "missing [phasesim] section"));
        };
        let mut net = files::load_network(&self.cfg.base_dir.join(&s.network))?;
        net.record_every = s.record_every;
        let trace = self.timed("phasesim", |_| {
            let dt = s.dt.unwrap_or_else(|| net.default_dt());
            simulate_network(&net, s.t_end, dt).stage("phase_sim")
        })?;
        files::write_trace(&self.path("trace.csv"), &trace)
    }

    fn manifest(&self, command: &str) -> Result<(), CliError> {
        let mut text =
            format!(
            "phasekit {}\ncommand = {command}\nconfig = {}\nthreads = {}\n\n[wall_clock_seconds]\n",
            env!("CARGO_PKG_VERSION"),
            self.config_path.display(),
            self.threads.map(|n| n.to_string()).unwrap_or_else(|| "default".to_string()),
        );
        for (name, secs) in &self.stages {
            text.push_str(&format!("{name} = {secs:.3}\n"));
        }
        text.push_str("\n[config]\n");
        text.push_str(&self.config_text);
        let path = self.path("manifest.txt");
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (name, common) = match &command {
        Command::Steady(c) => ("steady", c),
        Command::Prc { common, .. } => ("prc", common),
        Command::Ppv { common, .. } => ("ppv", common),
        Command::Adjoint(c) => ("adjoint", c),
        Command::Compare(c) => ("compare", c),
        Command::Lock(c) => ("lock", c),
        Command::Phasesim(c) => ("phasesim", c),
        Command::Pipeline { common, .. } => ("pipeline", common),
    };
    let mut run = Run::open(common)?;
    match command {
        Command::Steady(_) => {
            run.steady()?;
        }
        Command::Prc { points, .. } => {
            let lc = run.steady()?;
            run.prc(&lc, points)?;
        }
        Command::Ppv {
            points, compare, ..
        } => {
            let lc = run.steady()?;
            let curve = run.prc(&lc, points)?;
            let ppv = run.ppv(&curve)?;
            if compare || run.cfg.ppv.compare {
                let adj = run.adjoint(&lc)?;
                run.compare(&ppv, &adj)?;
            }
        }
        Command::Adjoint(_) => {
            let lc = run.steady()?;
            run.adjoint(&lc)?;
        }
        Command::Compare(_) => {
            let a = run.stored_ppv("ppv.csv")?;
            let b = run.stored_ppv("ppv_adjoint.csv")?;
            run.compare(&a, &b)?;
        }
        Command::Lock(_) => run.lock()?,
        Command::Phasesim(_) => run.phasesim()?,
        Command::Pipeline { points, .. } => {
            let lc = run.steady()?;
            let curve = run.prc(&lc, points)?;
            let ppv = run.ppv(&curve)?;
            let adj = run.adjoint(&lc)?;
            run.compare(&ppv, &adj)?;
        }
    }
    run.manifest(name)
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
