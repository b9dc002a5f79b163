//! Command-line and config-file ingestion.
//!
//! Every setting can come from a flag or from a flat JSON file given with
//! `--config`; flags win. Unknown keys in the file are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hokdv_core::coeffs::{hamiltonian_rho, ModelParameters};

#[derive(Debug, Parser)]
#[command(
    name = "hokdv",
    version,
    about = "Fifth-order Hamiltonian KdV-BBM model: coefficients, dispersion, simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive the equation coefficients and diagnostics (JSON on stdout).
    Coeffs(CoeffsArgs),
    /// Compare the model phase speed with the full water-wave one.
    Dispersion(DispersionArgs),
    /// Integrate the periodic initial-value problem.
    Simulate(SimulateArgs),
    /// Classify a (lambda, mu) grid by the sign of delta1.
    Scan(ScanArgs),
    /// Reconstruct the horizontal velocity from a wave profile.
    Velocity(VelocityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SubcommandKind {
    Coeffs,
    Dispersion,
    Simulate,
    Scan,
    Velocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    /// `A exp(−(x/w)²)`
    Gaussian,
    /// `A sech²(x/w)`
    Sech2,
    /// `A cos(2πx/L)`
    Cosine,
    /// Seeded random band-limited field scaled to peak `A`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CutoffKind {
    Sharp,
    Smooth,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat JSON file with default values for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, env = "HOKDV_OUTPUT_DIR")]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu1: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "hamiltonian_rho")]
    pub rho: Option<f64>,
    /// Set rho = b + d − 1/6, the choice giving gamma = 7/48 (the default
    /// unless rho is given).
    #[arg(long)]
    pub hamiltonian_rho: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SolverArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    /// Relative energy drift that triggers the alarm (exit status 2).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub no_dealias: bool,
    /// Replace the derived gamma, e.g. to study non-conservative runs.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_override: Option<f64>,
    #[arg(long, value_enum)]
    pub initial: Option<InitialKind>,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CoeffsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DispersionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub k_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also run the high/low frequency split with this epsilon.
    #[arg(long)]
    pub split_epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub cutoff: Option<CutoffKind>,
    /// Sobolev index for norms, existence time and splitting.
    #[arg(long, allow_hyphen_values = true)]
    pub sobolev_s: Option<f64>,
    /// Surrogate constant of the existence-time estimate.
    #[arg(long)]
    pub c_s: Option<f64>,
    /// Also write the trajectory as `trajectory.bin`.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub mu_max: Option<f64>,
    /// Points per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct VelocityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Snapshot CSV with columns `x,eta`; without it the initial condition
    /// given by the solver flags is used.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub subcommand: Option<SubcommandKind>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub lambda1: Option<f64>,
    pub mu1: Option<f64>,
    pub rho: Option<f64>,
    pub hamiltonian_rho: Option<bool>,
    pub n: Option<usize>,
    pub length: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub record_every: Option<usize>,
    pub tolerance: Option<f64>,
    pub dealias: Option<bool>,
    pub gamma_override: Option<f64>,
    pub initial: Option<InitialKind>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub k_max: Option<f64>,
    pub points: Option<usize>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub resolution: Option<usize>,
    pub split_epsilon: Option<f64>,
    pub cutoff: Option<CutoffKind>,
    pub sobolev_s: Option<f64>,
    pub c_s: Option<f64>,
    pub binary: Option<bool>,
    pub snapshot: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),* $(,)?) => {
        FileConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config file {}", path.display()))
    }

    /// Values in `top` replace those in `self`.
    pub fn overlay(self, top: FileConfig) -> FileConfig {
        overlay!(
            self,
            top,
            subcommand,
            output_dir,
            seed,
            theta,
            lambda,
            mu,
            lambda1,
            mu1,
            rho,
            hamiltonian_rho,
            n,
            length,
            dt,
            t_end,
            record_every,
            tolerance,
            dealias,
            gamma_override,
            initial,
            amplitude,
            width,
            k_max,
            points,
            lambda_min,
            lambda_max,
            mu_min,
            mu_max,
            resolution,
            split_epsilon,
            cutoff,
            sobolev_s,
            c_s,
            binary,
            snapshot,
        )
    }
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl CommonArgs {
    fn to_file(&self, kind: SubcommandKind) -> FileConfig {
        FileConfig {
            subcommand: Some(kind),
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            theta: self.theta,
            lambda: self.lambda,
            mu: self.mu,
            lambda1: self.lambda1,
            mu1: self.mu1,
            rho: self.rho,
            hamiltonian_rho: flag(self.hamiltonian_rho),
            ..FileConfig::default()
        }
    }
}

impl SolverArgs {
    fn apply(&self, f: FileConfig) -> FileConfig {
        FileConfig {
            n: self.n,
            length: self.length,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            tolerance: self.tolerance,
            dealias: self.no_dealias.then_some(false),
            gamma_override: self.gamma_override,
            initial: self.initial,
            amplitude: self.amplitude,
            width: self.width,
            ..f
        }
    }
}

impl Command {
    fn kind(&self) -> SubcommandKind {
        match self {
            Command::Coeffs(_) => SubcommandKind::Coeffs,
            Command::Dispersion(_) => SubcommandKind::Dispersion,
            Command::Simulate(_) => SubcommandKind::Simulate,
            Command::Scan(_) => SubcommandKind::Scan,
            Command::Velocity(_) => SubcommandKind::Velocity,
        }
    }

    fn common(&self) -> &CommonArgs {
        match self {
            Command::Coeffs(a) => &a.common,
            Command::Dispersion(a) => &a.common,
            Command::Simulate(a) => &a.common,
            Command::Scan(a) => &a.common,
            Command::Velocity(a) => &a.common,
        }
    }

    /// The settings given on the command line, as a partial config.
    fn flags(&self) -> FileConfig {
        let kind = self.kind();
        let base = self.common().to_file(kind);
        match self {
            Command::Coeffs(_) => base,
            Command::Dispersion(a) => FileConfig {
                k_max: a.k_max,
                points: a.points,
                ..base
            },
            Command::Simulate(a) => FileConfig {
                split_epsilon: a.split_epsilon,
                cutoff: a.cutoff,
                sobolev_s: a.sobolev_s,
                c_s: a.c_s,
                binary: flag(a.binary),
                ..a.solver.apply(base)
            },
            Command::Scan(a) => FileConfig {
                lambda_min: a.lambda_min,
                lambda_max: a.lambda_max,
                mu_min: a.mu_min,
                mu_max: a.mu_max,
                resolution: a.resolution,
                ..base
            },
            Command::Velocity(a) => FileConfig {
                snapshot: a.snapshot.clone(),
                ..a.solver.apply(base)
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSettings {
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub tolerance: f64,
    pub dealias: bool,
    pub gamma_override: Option<f64>,
    pub initial: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    pub split_epsilon: Option<f64>,
    pub cutoff: CutoffKind,
    pub sobolev_s: f64,
    pub c_s: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSettings {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionSettings {
    pub k_max: f64,
    pub points: usize,
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub params: ModelParameters,
    /// Whether rho was set by the Hamiltonian rule.
    pub hamiltonian_rho: bool,
    pub solver: SolverSettings,
    pub scan: ScanSettings,
    pub dispersion: DispersionSettings,
    pub snapshot: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

/// Parses `argv` (including the program name) into a [`RunConfig`].
/// Help and version requests come back as clap errors.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    resolve(&cli.command)
}

pub fn resolve(cmd: &Command) -> Result<RunConfig> {
    let flags = cmd.flags();
    let file = match &cmd.common().config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let (Some(want), Some(got)) = (file.subcommand, flags.subcommand) {
        if want != got {
            bail!("config file is for subcommand {want:?}, invoked as {got:?}");
        }
    }
    let explicit_rho = flags.rho.is_some();
    let explicit_h = flags.hamiltonian_rho == Some(true);
    let merged = file.overlay(flags);
    finish(cmd.kind(), merged, explicit_rho, explicit_h)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        bail!("{name} must be positive and finite, got {v}")
    }
}

fn range(name: &str, lo: f64, hi: f64) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && lo < hi {
        Ok(())
    } else {
        bail!("{name} range [{lo}, {hi}] is empty")
    }
}

fn finish(
    kind: SubcommandKind,
    m: FileConfig,
    explicit_rho: bool,
    explicit_h: bool,
) -> Result<RunConfig> {
    let theta = m.theta.unwrap_or(1.0);
    let lambda = m.lambda.unwrap_or(0.0);
    let mu = m.mu.unwrap_or(0.0);
    let lambda1 = m.lambda1.unwrap_or(2.0);
    let mu1 = m.mu1.unwrap_or(0.0);
    // A flag of either form overrides the file; between file entries an
    // explicit rho and the Hamiltonian switch may not both be set. Without
    // any rho the Hamiltonian rule applies.
    let use_h = if explicit_h {
        true
    } else if explicit_rho {
        false
    } else {
        if m.rho.is_some() && m.hamiltonian_rho == Some(true) {
            bail!("config sets both rho and hamiltonian_rho");
        }
        m.hamiltonian_rho.unwrap_or(m.rho.is_none())
    };
    let params = if use_h {
        ModelParameters::with_hamiltonian_rho(theta, lambda, mu, lambda1, mu1)?
    } else {
        ModelParameters::new(theta, lambda, mu, lambda1, mu1, m.rho.unwrap_or(0.0))?
    };
    debug_assert!(!use_h || params.rho == hamiltonian_rho(&params));

    let solver = SolverSettings {
        n: m.n.unwrap_or(256),
        length: positive("length", m.length.unwrap_or(64.0))?,
        dt: positive("dt", m.dt.unwrap_or(1e-3))?,
        t_end: positive("t_end", m.t_end.unwrap_or(1.0))?,
        record_every: m.record_every.unwrap_or(100),
        tolerance: m.tolerance.unwrap_or(1e-8),
        dealias: m.dealias.unwrap_or(true),
        gamma_override: m.gamma_override,
        initial: m.initial.unwrap_or(InitialKind::Gaussian),
        amplitude: m.amplitude.unwrap_or(0.1),
        width: positive("width", m.width.unwrap_or(1.0))?,
        split_epsilon: m.split_epsilon,
        cutoff: m.cutoff.unwrap_or(CutoffKind::Smooth),
        sobolev_s: m.sobolev_s.unwrap_or(1.0),
        c_s: positive("c_s", m.c_s.unwrap_or(1.0))?,
        binary: m.binary.unwrap_or(false),
    };
    if solver.n < 4 || !solver.n.is_power_of_two() {
        bail!("n must be a power of two >= 4, got {}", solver.n);
    }
    if solver.record_every == 0 {
        bail!("record_every must be at least 1");
    }
    if solver.tolerance.is_nan() || solver.tolerance < 0.0 {
        bail!("tolerance must be non-negative");
    }
    if let Some(e) = solver.split_epsilon {
        if !(e > 0.0 && e <= 1.0) {
            bail!("split_epsilon must lie in (0, 1], got {e}");
        }
    }
    if !solver.amplitude.is_finite() || !solver.sobolev_s.is_finite() {
        bail!("amplitude and sobolev_s must be finite");
    }

    let scan = ScanSettings {
        lambda_min: m.lambda_min.unwrap_or(-10.0),
        lambda_max: m.lambda_max.unwrap_or(10.0),
        mu_min: m.mu_min.unwrap_or(-10.0),
        mu_max: m.mu_max.unwrap_or(1.0),
        resolution: m.resolution.unwrap_or(200),
    };
    range("lambda", scan.lambda_min, scan.lambda_max)?;
    range("mu", scan.mu_min, scan.mu_max)?;
    if scan.resolution < 2 {
        bail!("resolution must be at least 2");
    }

    let dispersion = DispersionSettings {
        k_max: positive("k_max", m.k_max.unwrap_or(3.0))?,
        points: m.points.unwrap_or(301),
    };
    if dispersion.points < 2 {
        bail!("points must be at least 2");
    }
    if let Some(p) = &m.snapshot {
        if !p.is_file() {
            bail!("snapshot file {} does not exist", p.display());
        }
    }

    Ok(RunConfig {
        subcommand: kind,
        params,
        hamiltonian_rho: use_h,
        solver,
        scan,
        dispersion,
        snapshot: m.snapshot,
        output_dir: m.output_dir.unwrap_or_else(|| PathBuf::from(".")),
        seed: m.seed.unwrap_or(0),
    })
}
