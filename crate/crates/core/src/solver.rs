//! Pseudospectral initial-value solver on a periodic grid.
//!
//! The equation is written as `η̂_t = −iφ(k)η̂ + N(η̂)` and advanced with
//! classical RK4 applied to `v = S(−t)η`, so the dispersive part is treated
//! exactly and only the nonlinearity is discretized in time.

use std::io::{self, Read, Write};
use std::sync::Arc;

use num_complex::Complex64;

use crate::coeffs::{
    compute_abcd, compute_equation_coefficients, compute_higher_abcd, EquationCoefficients,
    ModelParameters, HAMILTONIAN_GAMMA,
};
use crate::error::{SolverError, SpectralError};
use crate::spectral::{
    derivative, mode_index, phi_symbol, psi_symbol, sobolev_norm, tau_symbol, PeriodicGrid,
    Transform, WaveField,
};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: Arc<PeriodicGrid>,
    pub dt: f64,
    pub t_end: f64,
    pub ec: EquationCoefficients,
    pub dealias: bool,
    pub record_every: usize,
    /// Relative drift of `E` above which [`solve`] raises an alarm.
    pub tolerance: f64,
}

impl SolverConfig {
    /// Defaults: dealiasing on, every step recorded, drift tolerance `1e-8`.
    pub fn new(grid: Arc<PeriodicGrid>, dt: f64, t_end: f64, ec: EquationCoefficients) -> Self {
        SolverConfig {
            grid,
            dt,
            t_end,
            ec,
            dealias: true,
            record_every: 1,
            tolerance: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        self.ec.check_admissible()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SolverError::Config(format!(
                "dt = {} must be positive",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SolverError::Config(format!(
                "t_end = {} must be positive",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(SolverError::Config(
                "record_every must be at least 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(SolverError::Config("tolerance must be non-negative".into()));
        }
        let worst = self
            .grid
            .k()
            .iter()
            .map(|&k| phi_symbol(&self.ec, k).abs())
            .fold(0.0f64, f64::max);
        if !(worst * self.dt).is_finite() {
            return Err(SolverError::Config("dt·max|φ| is not finite".into()));
        }
        Ok(())
    }

    /// Number of steps; the step is adjusted so that they land on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.t_end / self.steps() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub t: f64,
    /// `½∫(η² + γ1η_x² + δ1η_xx²)`.
    pub energy: f64,
    /// `½∫(−η² − ½η³ + η⁴/16 + (7/24)ηη_x² + γ2η_x² − δ2η_xx²)`.
    pub theta: f64,
    pub mean: f64,
    pub energy_rate_residual: Option<f64>,
    /// `∫(w² + γ1w_x² + δ1w_xx²)` for the smooth part of a split run.
    pub x_functional: Option<f64>,
}

/// Raised by [`solve`] when `E` drifts more than the configured tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftAlarm {
    pub relative_drift: f64,
    pub tolerance: f64,
    pub hamiltonian: bool,
}

impl std::fmt::Display for DriftAlarm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "energy drift {:e} exceeds tolerance {:e} ({})",
            self.relative_drift,
            self.tolerance,
            if self.hamiltonian {
                "Hamiltonian coefficients, drift is numerical"
            } else {
                "gamma != 7/48, E is not conserved by the equation"
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<WaveField>,
    pub invariants: Vec<InvariantRecord>,
    pub alarm: Option<DriftAlarm>,
}

impl Trajectory {
    fn empty() -> Self {
        Trajectory {
            times: Vec::new(),
            snapshots: Vec::new(),
            invariants: Vec::new(),
            alarm: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&WaveField> {
        self.snapshots.last()
    }

    /// Largest `|E(t) − E(0)| / E(0)`; zero for zero data.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.invariants.iter().map(|r| r.energy))
    }

    pub fn theta_drift(&self) -> f64 {
        relative_drift(self.invariants.iter().map(|r| r.theta))
    }

    /// Largest absolute change of the mean.
    pub fn mean_drift(&self) -> f64 {
        let mut it = self.invariants.iter().map(|r| r.mean);
        let Some(first) = it.next() else { return 0.0 };
        it.map(|m| (m - first).abs()).fold(0.0, f64::max)
    }
}

fn relative_drift(mut values: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = values.next() else {
        return 0.0;
    };
    let worst = values.map(|v| (v - first).abs()).fold(0.0, f64::max);
    if first == 0.0 {
        worst
    } else {
        worst / first.abs()
    }
}

/// Spectral evaluation of the nonlinear terms on one grid.
struct Engine {
    n: usize,
    nyquist: usize,
    ik: Vec<Complex64>,
    phi: Vec<f64>,
    tau: Vec<f64>,
    psi: Vec<f64>,
    keep: Vec<bool>,
    gamma: f64,
    tr: Transform,
}

impl Engine {
    fn new(grid: &PeriodicGrid, ec: &EquationCoefficients, dealias: bool) -> Self {
        let n = grid.n();
        let nyquist = grid.nyquist();
        let k = grid.k();
        let mut ik: Vec<Complex64> = k.iter().map(|&k| Complex64::new(0.0, k)).collect();
        ik[nyquist] = ZERO;
        let keep = (0..n)
            .map(|j| {
                j != nyquist && (!dealias || 3 * mode_index(j, n).unsigned_abs() as usize <= n)
            })
            .collect();
        Engine {
            n,
            nyquist,
            ik,
            phi: k.iter().map(|&k| phi_symbol(ec, k)).collect(),
            tau: k.iter().map(|&k| tau_symbol(ec, k)).collect(),
            psi: k.iter().map(|&k| psi_symbol(ec, k)).collect(),
            keep,
            gamma: ec.gamma,
            tr: Transform::new(n),
        }
    }

    fn physical(&mut self, hat: &[Complex64], differentiate: bool) -> Vec<f64> {
        let mut buf = hat.to_vec();
        if differentiate {
            for (z, m) in buf.iter_mut().zip(&self.ik) {
                *z *= m;
            }
        }
        self.tr.inverse_in_place(&mut buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// `−i[τ·quad^ + ψ·rest^]` with the dealiasing mask applied.
    fn assemble(&mut self, quad: &[f64], rest: &[f64], out: &mut [Complex64]) {
        let mut q = vec![ZERO; self.n];
        let mut r = vec![ZERO; self.n];
        self.tr.forward_real(quad, &mut q);
        self.tr.forward_real(rest, &mut r);
        for j in 0..self.n {
            out[j] = if self.keep[j] {
                let s = q[j] * self.tau[j] + r[j] * self.psi[j];
                Complex64::new(s.im, -s.re)
            } else {
                ZERO
            };
        }
    }

    fn nonlinear(&mut self, hat: &[Complex64], out: &mut [Complex64]) {
        let eta = self.physical(hat, false);
        let eta_x = self.physical(hat, true);
        let quad: Vec<f64> = eta.iter().map(|e| e * e).collect();
        let rest: Vec<f64> = eta
            .iter()
            .zip(&eta_x)
            .map(|(e, d)| -0.125 * e * e * e - HAMILTONIAN_GAMMA * d * d)
            .collect();
        self.assemble(&quad, &rest, out);
    }

    /// `G(v, w)`: the terms of `N(v + w) − N(v)`, with `γ` on the gradient
    /// terms as in the equation for the smooth part.
    fn coupling(&mut self, v_hat: &[Complex64], w_hat: &[Complex64], out: &mut [Complex64]) {
        let v = self.physical(v_hat, false);
        let vx = self.physical(v_hat, true);
        let w = self.physical(w_hat, false);
        let wx = self.physical(w_hat, true);
        let g = self.gamma;
        let mut quad = vec![0.0; self.n];
        let mut rest = vec![0.0; self.n];
        for j in 0..self.n {
            let (v, vx, w, wx) = (v[j], vx[j], w[j], wx[j]);
            quad[j] = w * w + 2.0 * v * w;
            rest[j] = -0.125 * (w * w * w + 3.0 * v * w * w + 3.0 * v * v * w)
                - g * (wx * wx + 2.0 * vx * wx);
        }
        self.assemble(&quad, &rest, out);
    }

    fn propagator(&self, dt: f64) -> Propagator {
        Propagator {
            half: self
                .phi
                .iter()
                .map(|&p| Complex64::from_polar(1.0, -p * 0.5 * dt))
                .collect(),
            full: self
                .phi
                .iter()
                .map(|&p| Complex64::from_polar(1.0, -p * dt))
                .collect(),
        }
    }

    fn field_of(&mut self, grid: &Arc<PeriodicGrid>, hat: &[Complex64]) -> WaveField {
        WaveField {
            grid: grid.clone(),
            values: self.physical(hat, false),
        }
    }

    fn spectrum(&mut self, f: &WaveField) -> Vec<Complex64> {
        let mut hat = vec![ZERO; self.n];
        self.tr.forward_real(&f.values, &mut hat);
        hat[self.nyquist] = ZERO;
        hat
    }

    /// Spectrum restricted to the retained modes, so that with dealiasing
    /// the quadratic products are exact from the first step on.
    fn initial(&mut self, f: &WaveField) -> Vec<Complex64> {
        let mut hat = self.spectrum(f);
        for (z, &keep) in hat.iter_mut().zip(&self.keep) {
            if !keep {
                *z = ZERO;
            }
        }
        hat
    }
}

struct Propagator {
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

/// One integrating-factor RK4 step for a state made of `u.len() / n`
/// stacked spectra, all sharing the same linear part.
fn ifrk4_step(
    u: &mut [Complex64],
    dt: f64,
    prop: &Propagator,
    rhs: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
) {
    let n = prop.full.len();
    let len = u.len();
    let eh = |i: usize| prop.half[i % n];
    let ef = |i: usize| prop.full[i % n];
    let mut k1 = vec![ZERO; len];
    let mut k2 = vec![ZERO; len];
    let mut k3 = vec![ZERO; len];
    let mut k4 = vec![ZERO; len];
    let mut a = vec![ZERO; len];

    rhs(u, &mut k1);
    for i in 0..len {
        a[i] = eh(i) * (u[i] + 0.5 * dt * k1[i]);
    }
    rhs(&a, &mut k2);
    for i in 0..len {
        a[i] = eh(i) * u[i] + 0.5 * dt * k2[i];
    }
    rhs(&a, &mut k3);
    for i in 0..len {
        a[i] = ef(i) * u[i] + dt * eh(i) * k3[i];
    }
    rhs(&a, &mut k4);
    for i in 0..len {
        u[i] = ef(i) * u[i] + dt / 6.0 * (ef(i) * k1[i] + 2.0 * eh(i) * (k2[i] + k3[i]) + k4[i]);
    }
}

/// The real field with transform `−i[τ(η²)^ − ⅛ψ(η³)^ − (7/48)ψ(η_x²)^]`.
pub fn nonlinear_rhs(
    eta: &WaveField,
    ec: &EquationCoefficients,
    dealias: bool,
) -> Result<WaveField, SolverError> {
    ec.check_admissible()?;
    let mut eng = Engine::new(&eta.grid, ec, dealias);
    let hat = eng.spectrum(eta);
    let mut out = vec![ZERO; eng.n];
    eng.nonlinear(&hat, &mut out);
    Ok(eng.field_of(&eta.grid, &out))
}

/// `G(v, w)` as a real field, in the same `−i[…]` convention as
/// [`nonlinear_rhs`]: `G(0, w)` equals `nonlinear_rhs(w)` when `γ = 7/48`.
pub fn g_coupling(
    v: &WaveField,
    w: &WaveField,
    ec: &EquationCoefficients,
    dealias: bool,
) -> Result<WaveField, SolverError> {
    ec.check_admissible()?;
    if !v.grid.same_as(&w.grid) {
        return Err(SpectralError::GridMismatch.into());
    }
    let mut eng = Engine::new(&v.grid, ec, dealias);
    let vh = eng.spectrum(v);
    let wh = eng.spectrum(w);
    let mut out = vec![ZERO; eng.n];
    eng.coupling(&vh, &wh, &mut out);
    Ok(eng.field_of(&v.grid, &out))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOptions {
    pub dealias: bool,
    /// With the nonlinearity off a step is exactly the linear group.
    pub nonlinear: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            dealias: true,
            nonlinear: true,
        }
    }
}

pub fn step(eta: &WaveField, dt: f64, ec: &EquationCoefficients) -> Result<WaveField, SolverError> {
    step_with(eta, dt, ec, StepOptions::default())
}

pub fn step_with(
    eta: &WaveField,
    dt: f64,
    ec: &EquationCoefficients,
    opts: StepOptions,
) -> Result<WaveField, SolverError> {
    ec.check_admissible()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SolverError::Config(format!("dt = {dt} must be positive")));
    }
    let mut eng = Engine::new(&eta.grid, ec, opts.dealias);
    let prop = eng.propagator(dt);
    let mut u = eng.spectrum(eta);
    if opts.nonlinear {
        ifrk4_step(&mut u, dt, &prop, &mut |x, out| eng.nonlinear(x, out));
    } else {
        ifrk4_step(&mut u, dt, &prop, &mut |_, out| out.fill(ZERO));
    }
    if u.iter().any(|z| !z.is_finite()) {
        return Err(SolverError::BlowUp { t: 0.0 });
    }
    Ok(eng.field_of(&eta.grid, &u))
}

/// Steps `u` through `cfg`, calling `record` at `t = 0`, every
/// `record_every` steps and at `t_end`.
fn integrate(
    cfg: &SolverConfig,
    eng: &mut Engine,
    mut u: Vec<Complex64>,
    rhs: fn(&mut Engine, &[Complex64], &mut [Complex64]),
    record: &mut dyn FnMut(&mut Engine, f64, &[Complex64]),
) -> Result<(), SolverError> {
    let steps = cfg.steps();
    let h = cfg.step_size();
    let prop = eng.propagator(h);
    record(eng, 0.0, &u);
    for s in 1..=steps {
        ifrk4_step(&mut u, h, &prop, &mut |x, out| rhs(eng, x, out));
        if u.iter().any(|z| !z.is_finite()) {
            return Err(SolverError::BlowUp {
                t: (s - 1) as f64 * h,
            });
        }
        if s % cfg.record_every == 0 || s == steps {
            record(eng, s as f64 * h, &u);
        }
    }
    Ok(())
}

fn check_grid(cfg: &SolverConfig, f: &WaveField) -> Result<(), SolverError> {
    if !cfg.grid.same_as(&f.grid) {
        return Err(SpectralError::GridMismatch.into());
    }
    if let Some(i) = f.values.iter().position(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite(i).into());
    }
    Ok(())
}

/// Integrates from `eta0` to `cfg.t_end`. The data is first projected onto
/// the retained modes (all but Nyquist, or `|j| ≤ n/3` with dealiasing), so
/// the snapshot at `t = 0` is the projected data.
pub fn solve(cfg: &SolverConfig, eta0: &WaveField) -> Result<Trajectory, SolverError> {
    cfg.validate()?;
    check_grid(cfg, eta0)?;
    let mut eng = Engine::new(&cfg.grid, &cfg.ec, cfg.dealias);
    let u = eng.initial(eta0);
    let mut traj = Trajectory::empty();
    let grid = cfg.grid.clone();
    let ec = cfg.ec;
    integrate(
        cfg,
        &mut eng,
        u,
        |e, x, out| e.nonlinear(x, out),
        &mut |e, t, hat| {
            let f = e.field_of(&grid, hat);
            traj.invariants.push(invariants_with(&mut e.tr, &f, &ec));
            traj.invariants.last_mut().unwrap().t = t;
            traj.times.push(t);
            traj.snapshots.push(f);
        },
    )?;
    finish_trajectory(&mut traj, cfg)?;
    Ok(traj)
}

fn finish_trajectory(traj: &mut Trajectory, cfg: &SolverConfig) -> Result<(), SolverError> {
    if traj.len() >= 3 {
        let residuals = energy_rate_check(traj, &cfg.ec)?;
        for (r, res) in traj.invariants.iter_mut().zip(residuals) {
            r.energy_rate_residual = Some(res);
        }
    }
    let drift = traj.energy_drift();
    if drift > cfg.tolerance {
        traj.alarm = Some(DriftAlarm {
            relative_drift: drift,
            tolerance: cfg.tolerance,
            hamiltonian: cfg.ec.is_hamiltonian(1e-12),
        });
    }
    Ok(())
}

pub fn invariants(eta: &WaveField, ec: &EquationCoefficients) -> InvariantRecord {
    let mut tr = Transform::new(eta.grid.n());
    invariants_with(&mut tr, eta, ec)
}

/// First three spectral derivatives on the grid.
fn derivatives(tr: &mut Transform, f: &WaveField, orders: &[u32]) -> Vec<Vec<f64>> {
    let grid = &f.grid;
    let n = grid.n();
    let mut hat = vec![ZERO; n];
    tr.forward_real(&f.values, &mut hat);
    hat[grid.nyquist()] = ZERO;
    orders
        .iter()
        .map(|&o| {
            let mut buf: Vec<Complex64> = hat
                .iter()
                .zip(grid.k())
                .map(|(z, &k)| z * Complex64::new(0.0, k).powu(o))
                .collect();
            tr.inverse_in_place(&mut buf);
            buf.iter().map(|z| z.re).collect()
        })
        .collect()
}

fn invariants_with(
    tr: &mut Transform,
    eta: &WaveField,
    ec: &EquationCoefficients,
) -> InvariantRecord {
    let d = derivatives(tr, eta, &[1, 2]);
    let (ex, exx) = (&d[0], &d[1]);
    let dx = eta.grid.dx();
    let mut energy = 0.0;
    let mut theta = 0.0;
    for j in 0..eta.values.len() {
        let (e, x1, x2) = (eta.values[j], ex[j], exx[j]);
        energy += e * e + ec.gamma1 * x1 * x1 + ec.delta1 * x2 * x2;
        theta += -e * e - 0.5 * e * e * e
            + e.powi(4) / 16.0
            + 7.0 / 24.0 * e * x1 * x1
            + ec.gamma2 * x1 * x1
            - ec.delta2 * x2 * x2;
    }
    InvariantRecord {
        t: 0.0,
        energy: 0.5 * energy * dx,
        theta: 0.5 * theta * dx,
        mean: eta.mean(),
        energy_rate_residual: None,
        x_functional: None,
    }
}

/// Derivative at `ts[at]` of the parabola through three samples.
fn three_point_derivative(ts: [f64; 3], fs: [f64; 3], at: usize) -> f64 {
    let x = ts[at];
    let mut d = 0.0;
    for j in 0..3 {
        let mut lj = 0.0;
        for m in 0..3 {
            if m == j {
                continue;
            }
            let mut term = 1.0 / (ts[j] - ts[m]);
            for l in 0..3 {
                if l != j && l != m {
                    term *= (x - ts[l]) / (ts[j] - ts[l]);
                }
            }
            lj += term;
        }
        d += fs[j] * lj;
    }
    d
}

/// Time derivative of a sampled quantity: centered in the interior,
/// one-sided second order at the ends.
pub fn sampled_derivative(times: &[f64], values: &[f64]) -> Result<Vec<f64>, SolverError> {
    let m = times.len();
    if m < 3 {
        return Err(SolverError::ShortTrajectory { needed: 3, got: m });
    }
    Ok((0..m)
        .map(|i| {
            let c = i.clamp(1, m - 2);
            let at = i + 1 - c;
            three_point_derivative(
                [times[c - 1], times[c], times[c + 1]],
                [values[c - 1], values[c], values[c + 1]],
                at,
            )
        })
        .collect())
}

/// Measured `dE/dt` against the predicted `(γ − 7/48)∫η_x³` at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSample {
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
}

impl RateSample {
    pub fn residual(&self) -> f64 {
        (self.measured - self.predicted).abs()
    }
}

pub fn energy_rate_samples(
    traj: &Trajectory,
    ec: &EquationCoefficients,
) -> Result<Vec<RateSample>, SolverError> {
    let energy: Vec<f64> = traj.invariants.iter().map(|r| r.energy).collect();
    let measured = sampled_derivative(&traj.times, &energy)?;
    let mut tr = Transform::new(traj.snapshots[0].grid.n());
    Ok(traj
        .snapshots
        .iter()
        .zip(&traj.times)
        .zip(measured)
        .map(|((f, &t), measured)| {
            let ex = &derivatives(&mut tr, f, &[1])[0];
            let cubic: f64 = ex.iter().map(|v| v * v * v).sum::<f64>() * f.grid.dx();
            RateSample {
                t,
                measured,
                predicted: (ec.gamma - HAMILTONIAN_GAMMA) * cubic,
            }
        })
        .collect())
}

/// Residuals `|dE/dt − (γ − 7/48)∫η_x³|` at every recorded time.
pub fn energy_rate_check(
    traj: &Trajectory,
    ec: &EquationCoefficients,
) -> Result<Vec<f64>, SolverError> {
    Ok(energy_rate_samples(traj, ec)?
        .iter()
        .map(RateSample::residual)
        .collect())
}

/// Residuals of
/// `½ d/dt ∫(η_x² + γ1η_xx² + δ1η_xxx²) + ¾∫η_x³ − 3γ∫η_xx²η_x − ⅜∫η_x³η`,
/// which vanishes along solutions with `γ = 7/48`.
pub fn h3_rate_check(
    traj: &Trajectory,
    ec: &EquationCoefficients,
) -> Result<Vec<f64>, SolverError> {
    let m = traj.len();
    if m < 3 {
        return Err(SolverError::ShortTrajectory { needed: 3, got: m });
    }
    let mut tr = Transform::new(traj.snapshots[0].grid.n());
    let mut level = Vec::with_capacity(m);
    let mut flux = Vec::with_capacity(m);
    for f in &traj.snapshots {
        let d = derivatives(&mut tr, f, &[1, 2, 3]);
        let dx = f.grid.dx();
        let (mut h, mut q) = (0.0, 0.0);
        for (j, &e) in f.values.iter().enumerate() {
            let (x1, x2, x3) = (d[0][j], d[1][j], d[2][j]);
            h += x1 * x1 + ec.gamma1 * x2 * x2 + ec.delta1 * x3 * x3;
            q += 0.75 * x1 * x1 * x1 - 3.0 * ec.gamma * x2 * x2 * x1 - 0.375 * x1 * x1 * x1 * e;
        }
        level.push(0.5 * h * dx);
        flux.push(q * dx);
    }
    let rate = sampled_derivative(&traj.times, &level)?;
    Ok(rate.iter().zip(&flux).map(|(r, q)| (r + q).abs()).collect())
}

/// Trigonometric interpolant of `f` on a grid of `m ≥ n` nodes.
pub fn interpolate(f: &WaveField, m: usize) -> Result<WaveField, SolverError> {
    let n = f.grid.n();
    if m < n {
        return Err(SolverError::Config(format!(
            "cannot interpolate {n} nodes onto {m}"
        )));
    }
    let fine = PeriodicGrid::new(m, f.grid.length())?;
    let mut tr = Transform::new(n);
    let hat = tr.to_spectral(f).modes;
    let mut modes = vec![ZERO; m];
    let scale = m as f64 / n as f64;
    for (j, z) in hat.iter().enumerate() {
        if j == f.grid.nyquist() {
            continue;
        }
        let k = mode_index(j, n);
        let slot = if k >= 0 {
            k as usize
        } else {
            (m as i64 + k) as usize
        };
        modes[slot] = z * scale;
    }
    let mut ftr = Transform::new(m);
    ftr.inverse_in_place(&mut modes);
    Ok(WaveField {
        grid: fine,
        values: modes.iter().map(|z| z.re).collect(),
    })
}

/// `L²` norm of the left side of the equation,
/// `η_t + η_x − γ1η_xxt + γ2η_xxx + δ1η_xxxxt + δ2η_xxxxx + ¾(η²)_x +
/// γ(η²)_xxx − 7/48(η_x²)_x − ⅛(η³)_x`, evaluated on five equally spaced
/// snapshots `t − 2h … t + 2h` about the middle one. Fields are interpolated
/// onto `4n` nodes so the products are exact, and `η_t` is the fourth-order
/// centered difference.
pub fn pde_residual(
    window: [&WaveField; 5],
    h: f64,
    ec: &EquationCoefficients,
) -> Result<f64, SolverError> {
    let n = window[2].grid.n();
    if window.iter().any(|f| !f.grid.same_as(&window[2].grid)) {
        return Err(SpectralError::GridMismatch.into());
    }
    let m = 4 * n;
    let fine: Vec<WaveField> = window
        .iter()
        .map(|f| interpolate(f, m))
        .collect::<Result<_, _>>()?;
    let grid = fine[2].grid.clone();
    let weights = [1.0, -8.0, 0.0, 8.0, -1.0];
    let eta_t = WaveField {
        grid: grid.clone(),
        values: (0..m)
            .map(|j| (0..5).map(|i| weights[i] * fine[i].values[j]).sum::<f64>() / (12.0 * h))
            .collect(),
    };
    let eta = &fine[2];
    let field = |values: Vec<f64>| WaveField {
        grid: grid.clone(),
        values,
    };
    let sq = field(eta.values.iter().map(|v| v * v).collect());
    let cube = field(eta.values.iter().map(|v| v * v * v).collect());
    let ex = derivative(eta, 1);
    let grad = field(ex.values.iter().map(|v| v * v).collect());

    let mut tr = Transform::new(m);
    let spec = |tr: &mut Transform, f: &WaveField| tr.to_spectral(f).modes;
    let (et, e, s2, s3, g2) = (
        spec(&mut tr, &eta_t),
        spec(&mut tr, eta),
        spec(&mut tr, &sq),
        spec(&mut tr, &cube),
        spec(&mut tr, &grad),
    );
    let mut res = vec![ZERO; m];
    for (j, &k) in grid.k().iter().enumerate() {
        let ik = Complex64::new(0.0, k);
        let k2 = k * k;
        res[j] = et[j] * (1.0 + ec.gamma1 * k2 + ec.delta1 * k2 * k2)
            + e[j] * ik * (1.0 - ec.gamma2 * k2 + ec.delta2 * k2 * k2)
            + s2[j] * ik * (0.75 - ec.gamma * k2)
            - g2[j] * ik * HAMILTONIAN_GAMMA
            - s3[j] * ik * 0.125;
    }
    res[grid.nyquist()] = ZERO;
    let sum: f64 = res.iter().map(|z| z.norm_sqr()).sum();
    Ok((grid.length() / (m * m) as f64 * sum).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cutoff {
    /// Indicator of `[−1, 1]` with a linear ramp one grid mode wide.
    Sharp,
    /// `C^∞`, equal to 1 on `[−1, 1]` and 0 outside `[−2, 2]`.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub epsilon: f64,
    pub cutoff: Cutoff,
    pub s: f64,
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(SolverError::Config(format!(
                "epsilon = {} must lie in (0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Weight `ζ(εk)` given to wavenumber `k`; `dk` is the grid mode spacing.
pub fn cutoff_weight(cutoff: Cutoff, epsilon: f64, k: f64, dk: f64) -> f64 {
    match cutoff {
        Cutoff::Sharp => ((1.0 / epsilon - k.abs()) / dk + 0.5).clamp(0.0, 1.0),
        Cutoff::Smooth => {
            let xi = (epsilon * k).abs();
            let up = bump(2.0 - xi);
            up / (up + bump(xi - 1.0))
        }
    }
}

/// Splits data into a rough remainder `v0` and the smooth part `w0` with
/// modes `ζ(εk)η̂0(k)`.
pub fn split_data(
    eta0: &WaveField,
    sc: &SplitConfig,
) -> Result<(WaveField, WaveField), SolverError> {
    sc.validate()?;
    let grid = eta0.grid.clone();
    let dk = 2.0 * std::f64::consts::PI / grid.length();
    let mut tr = Transform::new(grid.n());
    let mut hat = tr.to_spectral(eta0);
    for (z, &k) in hat.modes.iter_mut().zip(grid.k()) {
        *z *= cutoff_weight(sc.cutoff, sc.epsilon, k, dk);
    }
    hat.modes[grid.nyquist()] = ZERO;
    let w0 = tr.to_wave(&hat)?;
    let v0 = WaveField {
        grid,
        values: eta0
            .values
            .iter()
            .zip(&w0.values)
            .map(|(e, w)| e - w)
            .collect(),
    };
    Ok((v0, w0))
}

/// Evolves `v` under the full equation from `v0` and `w` under the coupled
/// equation `w_t = −iφw + G(v, w)`. Both are advanced with the same stages,
/// so `w` sees `v` at every stage time. The `w` trajectory carries `𝒳(t)`.
pub fn solve_split(
    cfg: &SolverConfig,
    eta0: &WaveField,
    sc: &SplitConfig,
) -> Result<(Trajectory, Trajectory), SolverError> {
    cfg.validate()?;
    check_grid(cfg, eta0)?;
    if !cfg.ec.is_hamiltonian(1e-10) {
        return Err(SolverError::Config(format!(
            "the split system needs gamma = 7/48, got {}",
            cfg.ec.gamma
        )));
    }
    let (v0, w0) = split_data(eta0, sc)?;
    let n = cfg.grid.n();
    let mut eng = Engine::new(&cfg.grid, &cfg.ec, cfg.dealias);
    let mut u = eng.initial(&v0);
    u.extend(eng.initial(&w0));
    let mut vt = Trajectory::empty();
    let mut wt = Trajectory::empty();
    let grid = cfg.grid.clone();
    let ec = cfg.ec;
    integrate(
        cfg,
        &mut eng,
        u,
        |e, x, out| {
            let (v, w) = x.split_at(e.n);
            let (ov, ow) = out.split_at_mut(e.n);
            e.nonlinear(v, ov);
            e.coupling(v, w, ow);
        },
        &mut |e, t, hat| {
            for (traj, part, with_x) in [(&mut vt, &hat[..n], false), (&mut wt, &hat[n..], true)] {
                let f = e.field_of(&grid, part);
                let mut rec = invariants_with(&mut e.tr, &f, &ec);
                rec.t = t;
                if with_x {
                    rec.x_functional = Some(2.0 * rec.energy);
                }
                traj.invariants.push(rec);
                traj.times.push(t);
                traj.snapshots.push(f);
            }
        },
    )?;
    finish_trajectory(&mut vt, cfg)?;
    finish_trajectory(&mut wt, cfg)?;
    // E is not conserved by either part separately.
    vt.alarm = None;
    wt.alarm = None;
    Ok((vt, wt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExistenceEstimate {
    pub r: f64,
    pub t_bar: f64,
    pub c_s: f64,
    pub norm: f64,
}

/// `r = 2‖η0‖`, `T̄ = 1/(8C_s‖η0‖(1 + ‖η0‖))` in `H^s`; `T̄ = +∞` for zero data.
pub fn local_existence_estimate(
    eta0: &WaveField,
    s: f64,
    c_s: f64,
) -> Result<LocalExistenceEstimate, SolverError> {
    if !(c_s > 0.0 && c_s.is_finite()) {
        return Err(SolverError::Config(format!("C_s = {c_s} must be positive")));
    }
    let norm = sobolev_norm(eta0, s);
    Ok(existence_from_norm(norm, c_s))
}

pub fn existence_from_norm(norm: f64, c_s: f64) -> LocalExistenceEstimate {
    let t_bar = if norm == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (8.0 * c_s * norm * (1.0 + norm))
    };
    LocalExistenceEstimate {
        r: 2.0 * norm,
        t_bar,
        c_s,
        norm,
    }
}

/// Where `η_t` in the velocity ansatz comes from.
#[derive(Debug, Clone)]
pub enum EtaTime {
    /// Substitute the evolution equation.
    Substitute,
    /// A caller-supplied field, e.g. a time difference of snapshots.
    Supplied(WaveField),
}

#[derive(Debug, Clone)]
pub struct VelocityComponents {
    pub a: WaveField,
    pub b: WaveField,
    pub c: WaveField,
    pub d: WaveField,
    pub e: WaveField,
    pub total: WaveField,
}

/// `η_t` from the equation, without dealiasing.
pub fn eta_time_derivative(
    eta: &WaveField,
    ec: &EquationCoefficients,
) -> Result<WaveField, SolverError> {
    ec.check_admissible()?;
    let mut eng = Engine::new(&eta.grid, ec, false);
    let hat = eng.spectrum(eta);
    let mut out = vec![ZERO; eng.n];
    eng.nonlinear(&hat, &mut out);
    for ((o, h), &p) in out.iter_mut().zip(&hat).zip(&eng.phi) {
        *o += Complex64::new(0.0, -p) * h;
    }
    out[eng.nyquist] = ZERO;
    Ok(eng.field_of(&eta.grid, &out))
}

/// Horizontal velocity `w = η + A + B + C + D + E` at the depth encoded in
/// `p`, with `α = β = 1`.
pub fn velocity_ansatz(
    eta: &WaveField,
    ec: &EquationCoefficients,
    p: &ModelParameters,
) -> Result<WaveField, SolverError> {
    Ok(velocity_components(eta, ec, p, &EtaTime::Substitute)?.total)
}

pub fn velocity_components(
    eta: &WaveField,
    ec: &EquationCoefficients,
    p: &ModelParameters,
    source: &EtaTime,
) -> Result<VelocityComponents, SolverError> {
    p.validate()?;
    ec.check_admissible()?;
    let derived = compute_equation_coefficients(p);
    if (derived.gamma1 - ec.gamma1).abs() > 1e-12 || (derived.delta1 - ec.delta1).abs() > 1e-12 {
        return Err(SolverError::Config(
            "equation coefficients were not derived from these parameters".into(),
        ));
    }
    let eta_t = match source {
        EtaTime::Substitute => eta_time_derivative(eta, ec)?,
        EtaTime::Supplied(f) => {
            if !f.grid.same_as(&eta.grid) {
                return Err(SpectralError::GridMismatch.into());
            }
            f.clone()
        }
    };
    let q = compute_abcd(p);
    let h = compute_higher_abcd(p);
    let rho = p.rho;
    let grid = eta.grid.clone();
    let e = &eta.values;
    let ex = derivative(eta, 1).values;
    let exx = derivative(eta, 2).values;
    let exxxx = derivative(eta, 4).values;
    let ext = derivative(&eta_t, 1).values;
    let exxxt = derivative(&eta_t, 3).values;
    let sq = WaveField {
        grid: grid.clone(),
        values: e.iter().map(|v| v * v).collect(),
    };
    let sq_xx = derivative(&sq, 2).values;

    let kb1 = 0.5 * (q.c - q.a + rho);
    let kb2 = 0.5 * (q.b - q.d + rho);
    let kc = (q.a + 4.0 * q.b + 2.0 * q.c - q.d) / 8.0
        + 3.0 / 16.0 * (q.a + q.b - q.c - q.d)
        + 0.375 * rho;
    let kd1 = 0.5 * (h.b1 - h.d1)
        + 0.25 * (q.b - q.d + rho) * (q.a - q.d + 1.0 / 6.0)
        + 0.25 * q.d * (q.c - q.a + rho);
    let kd2 = 0.5 * (h.a1 - h.c1) + 0.25 * (q.c - q.a + rho) * (q.a + 1.0 / 6.0) - rho / 12.0;

    let n = e.len();
    let field = |values: Vec<f64>| WaveField {
        grid: grid.clone(),
        values,
    };
    let a = field(e.iter().map(|v| -0.25 * v * v).collect());
    let b = field((0..n).map(|j| kb1 * exx[j] + kb2 * ext[j]).collect());
    let c = field(
        (0..n)
            .map(|j| kc * sq_xx[j] + 13.0 / 24.0 * e[j] * exx[j] + 11.0 / 48.0 * ex[j] * ex[j])
            .collect(),
    );
    let d = field((0..n).map(|j| -kd1 * exxxt[j] - kd2 * exxxx[j]).collect());
    let ee = field(e.iter().map(|v| 0.125 * v * v * v).collect());
    let total = field(
        (0..n)
            .map(|j| e[j] + a.values[j] + b.values[j] + c.values[j] + d.values[j] + ee.values[j])
            .collect(),
    );
    Ok(VelocityComponents {
        a,
        b,
        c,
        d,
        e: ee,
        total,
    })
}

/// Binary trajectory container, all fields little endian:
/// `n: u64`, `L: f64`, `count: u64`, then `count` records of
/// `t: f64` followed by `n` samples `f64`.
pub fn write_binary(traj: &Trajectory, mut out: impl Write) -> io::Result<()> {
    let (n, length) = match traj.snapshots.first() {
        Some(f) => (f.grid.n(), f.grid.length()),
        None => (0, 0.0),
    };
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&length.to_le_bytes())?;
    out.write_all(&(traj.len() as u64).to_le_bytes())?;
    for (t, f) in traj.times.iter().zip(&traj.snapshots) {
        out.write_all(&t.to_le_bytes())?;
        for v in &f.values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Contents of a binary container: `(n, L, [(t, samples)])`.
pub type BinaryTrajectory = (usize, f64, Vec<(f64, Vec<f64>)>);

pub fn read_binary(mut input: impl Read) -> io::Result<BinaryTrajectory> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let n = u64::from_le_bytes(next(&mut input)?) as usize;
    let length = f64::from_le_bytes(next(&mut input)?);
    let count = u64::from_le_bytes(next(&mut input)?) as usize;
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        let t = f64::from_le_bytes(next(&mut input)?);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f64::from_le_bytes(next(&mut input)?));
        }
        records.push((t, values));
    }
    Ok((n, length, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::semigroup_apply;
    use std::f64::consts::PI;

    fn hamiltonian() -> (ModelParameters, EquationCoefficients) {
        let p = ModelParameters::with_hamiltonian_rho(1.0, 0.0, 0.0, 2.0, 0.0).unwrap();
        (p, compute_equation_coefficients(&p))
    }

    fn gaussian(grid: &Arc<PeriodicGrid>, amp: f64, width: f64) -> WaveField {
        WaveField::from_fn(grid.clone(), |x| amp * (-(x / width).powi(2)).exp())
    }

    #[test]
    fn nonlinear_rhs_trivial_cases() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let z = nonlinear_rhs(&WaveField::zeros(g.clone()), &ec, true).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        let c = nonlinear_rhs(&WaveField::from_fn(g, |_| 0.8), &ec, true).unwrap();
        assert!(c.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn nonlinear_rhs_on_cosine() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let out = nonlinear_rhs(&WaveField::from_fn(g.clone(), f64::cos), &ec, true).unwrap();
        // −i m(k) maps cos(kx) to m(k) sin(kx):
        // τ(η²) → ½τ(2) sin 2x, −⅛ψ(η³) → −⅛(¾ψ(1) sin x + ¼ψ(3) sin 3x),
        // −(7/48)ψ(η_x²) → +(7/96)ψ(2) sin 2x.
        let (t2, p1, p2, p3) = (
            tau_symbol(&ec, 2.0),
            psi_symbol(&ec, 1.0),
            psi_symbol(&ec, 2.0),
            psi_symbol(&ec, 3.0),
        );
        for (x, v) in g.x().iter().zip(&out.values) {
            let expect = -3.0 / 32.0 * p1 * x.sin()
                + (0.5 * t2 + 7.0 / 96.0 * p2) * (2.0 * x).sin()
                - p3 / 32.0 * (3.0 * x).sin();
            assert!((v - expect).abs() < 1e-14, "{v} vs {expect}");
        }
    }

    #[test]
    fn step_zero_and_linear_limit() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(64, 20.0).unwrap();
        let z = step(&WaveField::zeros(g.clone()), 0.1, &ec).unwrap();
        assert!(z.values.iter().all(|v| *v == 0.0));
        let f = gaussian(&g, 0.5, 1.5);
        let opts = StepOptions {
            dealias: true,
            nonlinear: false,
        };
        let a = step_with(&f, 0.3, &ec, opts).unwrap();
        let b = semigroup_apply(&f, 0.3, &ec).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn step_local_order_five() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(128, 32.0).unwrap();
        let f = gaussian(&g, 1.0, 1.5);
        let discrepancy = |dt: f64| {
            let one = step(&f, dt, &ec).unwrap();
            let two = step(&step(&f, 0.5 * dt, &ec).unwrap(), 0.5 * dt, &ec).unwrap();
            one.l2_distance(&two)
        };
        let ratio = discrepancy(0.2) / discrepancy(0.1);
        assert!((24.0..40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn cosine_initial_energy() {
        let (_, ec) = hamiltonian();
        let l = 16.0;
        let a = 0.3;
        let g = PeriodicGrid::new(64, l).unwrap();
        let k0 = 2.0 * PI / l;
        let rec = invariants(&WaveField::from_fn(g, |x| a * (k0 * x).cos()), &ec);
        let expect = a * a * l / 4.0 * (1.0 + ec.gamma1 * k0 * k0 + ec.delta1 * k0.powi(4));
        assert!((rec.energy - expect).abs() < 1e-14);
        let zero = invariants(&WaveField::zeros(PeriodicGrid::new(8, 1.0).unwrap()), &ec);
        assert_eq!((zero.energy, zero.theta), (0.0, 0.0));
    }

    #[test]
    fn solve_records_and_conserves_mean() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(64, 20.0).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), 0.01, 1.0, ec);
        cfg.record_every = 10;
        let traj = solve(&cfg, &WaveField::from_fn(g, |x| 0.2 + 0.3 * (-x * x).exp())).unwrap();
        assert_eq!(traj.len(), 11);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!((traj.times[10] - 1.0).abs() < 1e-15);
        assert!(traj.mean_drift() < 1e-12);
        assert!(traj.energy_drift() < 1e-8);
        assert!(traj.alarm.is_none());
        assert!(traj
            .invariants
            .iter()
            .all(|r| r.energy_rate_residual.is_some()));
    }

    #[test]
    fn solve_rejects_bad_config() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(16, 5.0).unwrap();
        let f = WaveField::zeros(g.clone());
        let mut cfg = SolverConfig::new(g, 0.0, 1.0, ec);
        assert!(matches!(solve(&cfg, &f), Err(SolverError::Config(_))));
        cfg.dt = 0.1;
        cfg.record_every = 0;
        assert!(solve(&cfg, &f).is_err());
        cfg.record_every = 1;
        let other = WaveField::zeros(PeriodicGrid::new(32, 5.0).unwrap());
        assert!(solve(&cfg, &other).is_err());
        let bad = EquationCoefficients::from_free(0.1, 0.0, 7.0 / 48.0);
        cfg.ec = bad;
        assert!(matches!(solve(&cfg, &f), Err(SolverError::Coefficients(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(16, 5.0).unwrap();
        let mut cfg = SolverConfig::new(g.clone(), 0.5, 50.0, ec);
        cfg.dealias = false;
        let f = WaveField::from_fn(g, |x| 40.0 * (-x * x).exp());
        match solve(&cfg, &f) {
            Err(SolverError::BlowUp { t }) => assert!((0.0..50.0).contains(&t)),
            other => panic!("expected blow-up, got {:?}", other.map(|t| t.len())),
        }
    }

    #[test]
    fn three_point_derivative_is_exact_for_parabolas() {
        let ts = [0.0, 0.3, 1.0];
        let f = |t: f64| 2.0 - t + 3.0 * t * t;
        let fs = [f(ts[0]), f(ts[1]), f(ts[2])];
        for (i, &t) in ts.iter().enumerate() {
            assert!((three_point_derivative(ts, fs, i) - (-1.0 + 6.0 * t)).abs() < 1e-13);
        }
    }

    #[test]
    fn g_coupling_reduces_to_nonlinearity() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(64, 20.0).unwrap();
        let w = gaussian(&g, 0.4, 2.0);
        let a = g_coupling(&WaveField::zeros(g.clone()), &w, &ec, true).unwrap();
        let b = nonlinear_rhs(&w, &ec, true).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-15);
        }
        let z = g_coupling(&w, &WaveField::zeros(g.clone()), &ec, true).unwrap();
        assert!(z.values.iter().all(|v| v.abs() < 1e-15));
        let other = WaveField::zeros(PeriodicGrid::new(32, 20.0).unwrap());
        assert!(g_coupling(&other, &w, &ec, true).is_err());
    }

    #[test]
    fn g_coupling_is_difference_of_nonlinearities() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(64, 20.0).unwrap();
        let v = WaveField::from_fn(g.clone(), |x| 0.3 * (0.5 * x).sin() + 0.1);
        let w = gaussian(&g, 0.4, 2.0);
        let sum = WaveField {
            grid: g.clone(),
            values: v.values.iter().zip(&w.values).map(|(a, b)| a + b).collect(),
        };
        let gvw = g_coupling(&v, &w, &ec, false).unwrap();
        let nsum = nonlinear_rhs(&sum, &ec, false).unwrap();
        let nv = nonlinear_rhs(&v, &ec, false).unwrap();
        for j in 0..64 {
            assert!((gvw.values[j] - (nsum.values[j] - nv.values[j])).abs() < 1e-14);
        }
    }

    #[test]
    fn cutoff_profiles() {
        let dk = 0.1;
        for c in [Cutoff::Sharp, Cutoff::Smooth] {
            assert_eq!(cutoff_weight(c, 0.5, 0.0, dk), 1.0);
            for k in [-7.0, -2.1, 0.3, 1.9, 3.0, 5.0] {
                let z = cutoff_weight(c, 0.5, k, dk);
                assert!((0.0..=1.0).contains(&z));
                assert_eq!(z, cutoff_weight(c, 0.5, -k, dk));
            }
        }
        assert_eq!(cutoff_weight(Cutoff::Smooth, 0.5, 4.0, dk), 0.0);
        assert_eq!(cutoff_weight(Cutoff::Smooth, 0.5, 2.0, dk), 1.0);
        assert_eq!(cutoff_weight(Cutoff::Sharp, 0.5, 2.2, dk), 0.0);
        assert_eq!(cutoff_weight(Cutoff::Sharp, 0.5, 1.8, dk), 1.0);
        assert!((cutoff_weight(Cutoff::Sharp, 0.5, 2.0, dk) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn split_reconstructs() {
        let g = PeriodicGrid::new(128, 20.0).unwrap();
        let eta = gaussian(&g, 1.0, 0.7);
        let sc = SplitConfig {
            epsilon: 0.25,
            cutoff: Cutoff::Smooth,
            s: 1.0,
        };
        let (v, w) = split_data(&eta, &sc).unwrap();
        for j in 0..128 {
            assert!((v.values[j] + w.values[j] - eta.values[j]).abs() < 1e-15);
        }
        let pass_all = SplitConfig {
            epsilon: 1e-3,
            ..sc
        };
        let (v, _) = split_data(&eta, &pass_all).unwrap();
        assert!(v.values.iter().all(|x| x.abs() < 1e-14));
        assert!(split_data(&eta, &SplitConfig { epsilon: 0.0, ..sc }).is_err());
    }

    #[test]
    fn existence_arithmetic() {
        let e = existence_from_norm(1.0, 1.0);
        assert_eq!(e.t_bar, 1.0 / 16.0);
        assert_eq!(e.r, 2.0);
        let g = PeriodicGrid::new(16, 1.0).unwrap();
        let z = local_existence_estimate(&WaveField::zeros(g.clone()), 1.0, 1.0).unwrap();
        assert_eq!(z.t_bar, f64::INFINITY);
        assert!(local_existence_estimate(&WaveField::zeros(g), 1.0, 0.0).is_err());
    }

    #[test]
    fn velocity_of_constants() {
        let (p, ec) = hamiltonian();
        let g = PeriodicGrid::new(32, 10.0).unwrap();
        assert!(velocity_ansatz(&WaveField::zeros(g.clone()), &ec, &p)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == 0.0));
        let c = 0.6;
        let w = velocity_ansatz(&WaveField::from_fn(g, |_| c), &ec, &p).unwrap();
        let expect = c - 0.25 * c * c + 0.125 * c * c * c;
        assert!(w.values.iter().all(|v| (v - expect).abs() < 1e-14));
    }

    #[test]
    fn velocity_first_order_part() {
        let p = ModelParameters::new(1.0, 0.0, 0.0, 2.0, 0.0, 0.0).unwrap();
        let ec = compute_equation_coefficients(&p);
        let g = PeriodicGrid::new(128, 30.0).unwrap();
        let eta = gaussian(&g, 0.3, 2.0);
        let parts = velocity_components(&eta, &ec, &p, &EtaTime::Substitute).unwrap();
        let q = compute_abcd(&p);
        let exx = derivative(&eta, 2);
        let ext = derivative(&eta_time_derivative(&eta, &ec).unwrap(), 1);
        for j in 0..128 {
            let first =
                parts.total.values[j] - parts.c.values[j] - parts.d.values[j] - parts.e.values[j];
            let e = eta.values[j];
            let expect = e - 0.25 * e * e
                + 0.5 * (q.c - q.a) * exx.values[j]
                + 0.5 * (q.b - q.d) * ext.values[j];
            assert!((first - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn velocity_supplied_time_derivative_matches() {
        let (p, ec) = hamiltonian();
        let g = PeriodicGrid::new(128, 30.0).unwrap();
        let eta = gaussian(&g, 0.3, 2.0);
        let h = 1e-3;
        let mut cfg = SolverConfig::new(g.clone(), h, 2.0 * h, ec);
        cfg.dealias = false;
        let back = semigroup_apply(&eta, 0.0, &ec).unwrap();
        let traj = solve(&cfg, &back).unwrap();
        // centered difference about t = h
        let et = WaveField {
            grid: g.clone(),
            values: traj.snapshots[2]
                .values
                .iter()
                .zip(&traj.snapshots[0].values)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        };
        let mid = &traj.snapshots[1];
        let sub = velocity_components(mid, &ec, &p, &EtaTime::Substitute).unwrap();
        let sup = velocity_components(mid, &ec, &p, &EtaTime::Supplied(et)).unwrap();
        let diff = sub.total.l2_distance(&sup.total);
        assert!(diff < 1e-6, "{diff}");
    }

    #[test]
    fn binary_round_trip() {
        let (_, ec) = hamiltonian();
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let cfg = SolverConfig::new(g.clone(), 0.1, 0.3, ec);
        let traj = solve(&cfg, &gaussian(&g, 0.2, 0.8)).unwrap();
        let mut buf = Vec::new();
        write_binary(&traj, &mut buf).unwrap();
        assert_eq!(buf.len(), 24 + traj.len() * 17 * 8);
        let (n, l, recs) = read_binary(&buf[..]).unwrap();
        assert_eq!((n, l, recs.len()), (16, 4.0, traj.len()));
        assert_eq!(recs[2].0, traj.times[2]);
        assert_eq!(recs[2].1, traj.snapshots[2].values);
    }
}
