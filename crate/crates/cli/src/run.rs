//! Subcommand dispatch.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use hokdv_core::coeffs::{
    check_model, compute_abcd, compute_equation_coefficients, compute_higher_abcd,
    delta1_closed_form, evaluate_p, hamiltonian_rho, EquationCoefficients, ModelParameters,
    IDENTITY_TOL,
};
use hokdv_core::dispersion::{delta1_matching_sixth_order, dispersion_report};
use hokdv_core::solver::{
    local_existence_estimate, solve, solve_split, velocity_components, Cutoff, EtaTime,
    SolverConfig, SplitConfig,
};
use hokdv_core::spectral::{random_band_limited, sobolev_norm, PeriodicGrid, WaveField};

use crate::config::{CutoffKind, InitialKind, RunConfig, SubcommandKind};
use crate::output::{fmt_opt, fmt_real, object, real, to_json, Emitter};

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    /// Outputs were written but an invariant-drift alarm was raised.
    Alarm,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Alarm => 2,
        }
    }
}

pub fn run_subcommand(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.subcommand {
        SubcommandKind::Coeffs => coeffs(cfg),
        SubcommandKind::Dispersion => dispersion(cfg),
        SubcommandKind::Simulate => simulate(cfg),
        SubcommandKind::Scan => scan(cfg),
        SubcommandKind::Velocity => velocity(cfg),
    }
}

fn provenance(cfg: &RunConfig) -> Result<Value> {
    Ok(object(vec![
        ("config", to_json(cfg)?),
        ("version", Value::String(env!("CARGO_PKG_VERSION").into())),
        ("seed", Value::from(cfg.seed)),
    ]))
}

fn summary(cfg: &RunConfig, results: Value) -> Result<Value> {
    Ok(object(vec![
        ("provenance", provenance(cfg)?),
        ("results", results),
    ]))
}

fn equation_coefficients(cfg: &RunConfig) -> EquationCoefficients {
    let mut ec = compute_equation_coefficients(&cfg.params);
    if let Some(g) = cfg.solver.gamma_override {
        ec.gamma = g;
        ec.sigma1 = g;
    }
    ec
}

fn coefficient_report(p: &ModelParameters) -> Result<Value> {
    let ec = compute_equation_coefficients(p);
    let diag = check_model(p, IDENTITY_TOL);
    let abcd = compute_abcd(p);
    Ok(object(vec![
        ("params", to_json(p)?),
        ("abcd", to_json(&abcd)?),
        ("abcd_sum", real(abcd.sum())),
        ("higher_abcd", to_json(&compute_higher_abcd(p))?),
        ("gamma1", real(ec.gamma1)),
        ("gamma2", real(ec.gamma2)),
        ("delta1", real(ec.delta1)),
        ("delta2", real(ec.delta2)),
        ("gamma", real(ec.gamma)),
        ("sigma1", real(ec.sigma1)),
        ("sigma2", real(ec.sigma2)),
        ("nu_tilde", real(ec.nu_tilde)),
        ("hamiltonian_rho", real(hamiltonian_rho(p))),
        ("p_polynomial", real(evaluate_p(p.theta, p.lambda, p.mu))),
        (
            "delta1_closed_form",
            real(delta1_closed_form(
                p.theta, p.lambda, p.mu, p.lambda1, p.mu1,
            )),
        ),
        (
            "identity_residuals",
            Value::Array(ec.identity_residuals().iter().map(|&r| real(r)).collect()),
        ),
        ("diagnostics", to_json(&diag)?),
    ]))
}

fn coeffs(cfg: &RunConfig) -> Result<Outcome> {
    let report = coefficient_report(&cfg.params)?;
    print!("{}", crate::output::json_text(&report)?);
    let mut out = Emitter::new(&cfg.output_dir)?;
    out.write_json("summary.json", &summary(cfg, report)?)?;
    Ok(Outcome::Clean)
}

fn dispersion(cfg: &RunConfig) -> Result<Outcome> {
    let ec = compute_equation_coefficients(&cfg.params);
    let rep = dispersion_report(&ec, cfg.dispersion.k_max, cfg.dispersion.points)?;
    let mut out = Emitter::new(&cfg.output_dir)?;
    out.write_csv(
        "dispersion.csv",
        "k,c_model,c_euler,abs_error",
        rep.rows().map(|r| r.iter().map(|&v| fmt_real(v)).collect()),
    )?;
    let (d1_match, admissible) = delta1_matching_sixth_order(ec.gamma1);
    let results = object(vec![
        (
            "taylor_model",
            Value::Array(rep.taylor_model.iter().map(|&v| real(v)).collect()),
        ),
        (
            "taylor_euler",
            Value::Array(rep.taylor_euler.iter().map(|&v| real(v)).collect()),
        ),
        ("f_coefficient", real(rep.f_coefficient)),
        ("f_discrepancy", real(rep.f_discrepancy)),
        ("max_abs_error", real(rep.max_abs_error)),
        ("delta1_matching_sixth_order", real(d1_match)),
        ("matching_delta1_admissible", Value::Bool(admissible)),
    ]);
    print!("{}", crate::output::json_text(&results)?);
    out.write_json("summary.json", &summary(cfg, results)?)?;
    Ok(Outcome::Clean)
}

fn initial_field(cfg: &RunConfig, grid: &std::sync::Arc<PeriodicGrid>) -> WaveField {
    let s = &cfg.solver;
    let (a, w, l) = (s.amplitude, s.width, s.length);
    match s.initial {
        InitialKind::Gaussian => WaveField::from_fn(grid.clone(), |x| a * (-(x / w).powi(2)).exp()),
        InitialKind::Sech2 => WaveField::from_fn(grid.clone(), |x| a / (x / w).cosh().powi(2)),
        InitialKind::Cosine => WaveField::from_fn(grid.clone(), |x| {
            a * (2.0 * std::f64::consts::PI * x / l).cos()
        }),
        InitialKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let f = random_band_limited(grid, grid.n() / 8, &mut rng);
            let peak = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if peak > 0.0 { a / peak } else { 0.0 };
            WaveField {
                grid: grid.clone(),
                values: f.values.iter().map(|v| v * scale).collect(),
            }
        }
    }
}

fn snapshot_rows(f: &WaveField) -> impl Iterator<Item = Vec<String>> + '_ {
    f.grid
        .x()
        .iter()
        .zip(&f.values)
        .map(|(&x, &v)| vec![fmt_real(x), fmt_real(v)])
}

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let s = &cfg.solver;
    let grid = PeriodicGrid::new(s.n, s.length)?;
    let ec = equation_coefficients(cfg);
    let eta0 = initial_field(cfg, &grid);
    let solver_cfg = SolverConfig {
        grid: grid.clone(),
        dt: s.dt,
        t_end: s.t_end,
        ec,
        dealias: s.dealias,
        record_every: s.record_every,
        tolerance: s.tolerance,
    };
    let traj = solve(&solver_cfg, &eta0)?;

    let split = match s.split_epsilon {
        Some(epsilon) => {
            let sc = SplitConfig {
                epsilon,
                cutoff: match s.cutoff {
                    CutoffKind::Sharp => Cutoff::Sharp,
                    CutoffKind::Smooth => Cutoff::Smooth,
                },
                s: s.sobolev_s,
            };
            Some(solve_split(&solver_cfg, &eta0, &sc)?)
        }
        None => None,
    };

    let mut out = Emitter::new(&cfg.output_dir)?;
    let x_values: Vec<Option<f64>> = match &split {
        Some((_, w)) => w.invariants.iter().map(|r| r.x_functional).collect(),
        None => vec![None; traj.len()],
    };
    out.write_csv(
        "invariants.csv",
        "t,E,Theta,mean,energy_rate_residual,X",
        traj.invariants.iter().zip(&x_values).map(|(r, x)| {
            vec![
                fmt_real(r.t),
                fmt_real(r.energy),
                fmt_real(r.theta),
                fmt_real(r.mean),
                fmt_opt(r.energy_rate_residual),
                fmt_opt(*x),
            ]
        }),
    )?;
    for (t, f) in traj.times.iter().zip(&traj.snapshots) {
        out.write_csv(&format!("snapshot_{t:.6}.csv"), "x,eta", snapshot_rows(f))?;
    }
    let mut split_error = None;
    if let Some((v, w)) = &split {
        let mut worst = 0.0f64;
        let rows: Vec<Vec<String>> = (0..traj.len())
            .map(|i| {
                let sum = WaveField {
                    grid: grid.clone(),
                    values: v.snapshots[i]
                        .values
                        .iter()
                        .zip(&w.snapshots[i].values)
                        .map(|(a, b)| a + b)
                        .collect(),
                };
                let err = sum.l2_distance(&traj.snapshots[i]);
                worst = worst.max(err);
                vec![
                    fmt_real(traj.times[i]),
                    fmt_opt(w.invariants[i].x_functional),
                    fmt_real(err),
                ]
            })
            .collect();
        out.write_csv("split.csv", "t,X,sum_vs_direct_l2", rows)?;
        split_error = Some(worst);
    }
    if s.binary {
        let mut bytes = Vec::new();
        hokdv_core::solver::write_binary(&traj, &mut bytes)?;
        out.write_bytes("trajectory.bin", &bytes)?;
    }

    let existence = local_existence_estimate(&eta0, s.sobolev_s, s.c_s)?;
    let max_norm = traj
        .snapshots
        .iter()
        .map(|f| sobolev_norm(f, s.sobolev_s))
        .fold(0.0f64, f64::max);
    let max_rate_residual = traj
        .invariants
        .iter()
        .filter_map(|r| r.energy_rate_residual)
        .fold(0.0f64, f64::max);
    let results = object(vec![
        ("coefficients", to_json(&ec)?),
        ("steps", Value::from(solver_cfg.steps() as u64)),
        ("step_size", real(solver_cfg.step_size())),
        ("records", Value::from(traj.len() as u64)),
        ("energy_drift", real(traj.energy_drift())),
        ("theta_drift", real(traj.theta_drift())),
        ("mean_drift", real(traj.mean_drift())),
        ("max_energy_rate_residual", real(max_rate_residual)),
        (
            "alarm",
            traj.alarm
                .as_ref()
                .map_or(Value::Null, |a| Value::String(a.to_string())),
        ),
        (
            "existence",
            object(vec![
                ("sobolev_s", real(s.sobolev_s)),
                ("c_s", real(existence.c_s)),
                ("norm", real(existence.norm)),
                ("r", real(existence.r)),
                ("t_bar", real(existence.t_bar)),
                ("max_norm", real(max_norm)),
            ]),
        ),
        ("split_max_l2_error", split_error.map_or(Value::Null, real)),
    ]);
    out.write_json("summary.json", &summary(cfg, results)?)?;
    match &traj.alarm {
        Some(alarm) => {
            eprintln!("hokdv: alarm: {alarm}");
            Ok(Outcome::Alarm)
        }
        None => Ok(Outcome::Clean),
    }
}

/// `delta1` at one grid point. `rho` follows the Hamiltonian rule at every
/// point, since `b + d − 1/6` itself varies with `lambda` and `mu`.
fn scan_point(cfg: &RunConfig, lambda: f64, mu: f64) -> Result<f64> {
    let p = &cfg.params;
    let params = ModelParameters::with_hamiltonian_rho(p.theta, lambda, mu, p.lambda1, p.mu1)?;
    Ok(compute_equation_coefficients(&params).delta1)
}

pub fn scan_axis(lo: f64, hi: f64, m: usize, i: usize) -> f64 {
    lo + (hi - lo) * i as f64 / (m - 1) as f64
}

fn scan(cfg: &RunConfig) -> Result<Outcome> {
    let sc = &cfg.scan;
    let m = sc.resolution;
    let rows: Vec<(f64, f64, f64)> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let lambda = scan_axis(sc.lambda_min, sc.lambda_max, m, idx / m);
            let mu = scan_axis(sc.mu_min, sc.mu_max, m, idx % m);
            scan_point(cfg, lambda, mu).map(|d| (lambda, mu, d))
        })
        .collect::<Result<_>>()?;
    let positive = rows.iter().filter(|r| r.2 > 0.0).count();
    let mut out = Emitter::new(&cfg.output_dir)?;
    out.write_csv(
        "scan.csv",
        "lambda,mu,delta1,sign",
        rows.iter().map(|&(l, mu, d)| {
            vec![
                fmt_real(l),
                fmt_real(mu),
                fmt_real(d),
                format!("{}", sign(d)),
            ]
        }),
    )?;
    let results = object(vec![
        ("points", Value::from((m * m) as u64)),
        ("positive", Value::from(positive as u64)),
    ]);
    out.write_json("summary.json", &summary(cfg, results)?)?;
    Ok(Outcome::Clean)
}

pub fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Reads a snapshot CSV with header `x,eta`; the period is inferred from
/// the uniform node spacing.
pub fn read_snapshot(path: &Path) -> Result<WaveField> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read snapshot {}", path.display()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x,eta" => {}
        _ => bail!(
            "snapshot {} must start with the header x,eta",
            path.display()
        ),
    }
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(x), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            bail!("snapshot line {} must have two columns", i + 2);
        };
        xs.push(
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("line {}", i + 2))?,
        );
        vs.push(
            v.trim()
                .parse::<f64>()
                .with_context(|| format!("line {}", i + 2))?,
        );
    }
    if xs.len() < 4 {
        bail!("snapshot has too few samples");
    }
    let dx = xs[1] - xs[0];
    let length = dx * xs.len() as f64;
    let grid = PeriodicGrid::new(xs.len(), length)?;
    Ok(WaveField::new(grid, vs)?)
}

fn velocity(cfg: &RunConfig) -> Result<Outcome> {
    let eta = match &cfg.snapshot {
        Some(path) => read_snapshot(path)?,
        None => {
            let grid = PeriodicGrid::new(cfg.solver.n, cfg.solver.length)?;
            initial_field(cfg, &grid)
        }
    };
    let ec = equation_coefficients(cfg);
    let parts = velocity_components(&eta, &ec, &cfg.params, &EtaTime::Substitute)?;
    let mut out = Emitter::new(&cfg.output_dir)?;
    let n = eta.values.len();
    out.write_csv(
        "velocity.csv",
        "x,eta,w,A,B,C,D,E",
        (0..n).map(|j| {
            [
                eta.grid.x()[j],
                eta.values[j],
                parts.total.values[j],
                parts.a.values[j],
                parts.b.values[j],
                parts.c.values[j],
                parts.d.values[j],
                parts.e.values[j],
            ]
            .iter()
            .map(|&v| fmt_real(v))
            .collect()
        }),
    )?;
    let peak = parts
        .total
        .values
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let results = object(vec![
        ("samples", Value::from(n as u64)),
        ("length", real(eta.grid.length())),
        ("max_abs_velocity", real(peak)),
    ]);
    out.write_json("summary.json", &summary(cfg, results)?)?;
    Ok(Outcome::Clean)
}
