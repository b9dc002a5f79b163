//! Periodic Fourier machinery: grids, transforms, the multiplier symbols
//! of the evolution equation, the linear solution group and Sobolev norms.
//!
//! Transform convention: `modes[j] = Σ_n values[n] e^{−2πi jn/N}`, inverse
//! scaled by `1/N`. Mode `j` carries wavenumber `2πj/L` for `j < N/2` and
//! `2π(j − N)/L` otherwise; the Nyquist entry `j = N/2` is kept at zero by
//! every operation that applies a symbol.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::coeffs::EquationCoefficients;
use crate::error::SpectralError;

/// Relative imaginary residue tolerated when a transform should be real.
pub const REAL_TOL: f64 = 1e-12;

/// Uniform grid on `[−L/2, L/2)` with `n` nodes (a power of two).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    x: Vec<f64>,
    k: Vec<f64>,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>, SpectralError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(SpectralError::BadSize(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(SpectralError::BadLength(length));
        }
        let dx = length / n as f64;
        let x = (0..n).map(|j| -0.5 * length + j as f64 * dx).collect();
        let k = (0..n)
            .map(|j| 2.0 * PI * mode_index(j, n) as f64 / length)
            .collect();
        Ok(Arc::new(PeriodicGrid { n, length, x, k }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers in transform order.
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Index of the Nyquist mode.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Same node count and period.
    pub fn same_as(&self, other: &PeriodicGrid) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Signed mode number of transform slot `j`; Nyquist maps to `−n/2`.
pub fn mode_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Real samples of a field on a periodic grid.
#[derive(Clone, PartialEq)]
pub struct WaveField {
    pub grid: Arc<PeriodicGrid>,
    pub values: Vec<f64>,
}

impl fmt::Debug for WaveField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveField")
            .field("n", &self.grid.n)
            .field("length", &self.grid.length)
            .finish()
    }
}

impl WaveField {
    pub fn new(grid: Arc<PeriodicGrid>, values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.len() != grid.n {
            return Err(SpectralError::LengthMismatch {
                expected: grid.n,
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        Ok(WaveField { grid, values })
    }

    pub fn zeros(grid: Arc<PeriodicGrid>) -> Self {
        let n = grid.n;
        WaveField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<PeriodicGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.x.iter().map(|&x| f(x)).collect();
        WaveField { grid, values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Periodic trapezoid rule `∫ f dx` over one period.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn l2_distance(&self, other: &WaveField) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Fourier coefficients of a [`WaveField`], in transform order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Arc<PeriodicGrid>,
    pub modes: Vec<Complex64>,
}

/// Forward/inverse transform pair with its own scratch space. Not shared
/// between threads; build one per execution stream.
pub struct Transform {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl Transform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Transform {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward_in_place(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse_in_place(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    pub fn forward_real(&mut self, values: &[f64], out: &mut [Complex64]) {
        for (o, &v) in out.iter_mut().zip(values) {
            *o = Complex64::new(v, 0.0);
        }
        self.forward_in_place(out);
    }

    /// Inverse transform into real samples, discarding an imaginary part
    /// that is negligible relative to the real part.
    pub fn inverse_real(
        &mut self,
        modes: &mut [Complex64],
        out: &mut [f64],
    ) -> Result<(), SpectralError> {
        self.inverse_in_place(modes);
        let mut re_max = 0.0f64;
        let mut im_max = 0.0f64;
        for (o, z) in out.iter_mut().zip(modes.iter()) {
            *o = z.re;
            re_max = re_max.max(z.re.abs());
            im_max = im_max.max(z.im.abs());
        }
        if im_max > REAL_TOL * re_max.max(f64::MIN_POSITIVE) && im_max > 1e-300 {
            return Err(SpectralError::ImaginaryResidue {
                residue: im_max / re_max.max(f64::MIN_POSITIVE),
            });
        }
        Ok(())
    }

    pub fn to_spectral(&mut self, f: &WaveField) -> SpectralField {
        let mut modes = vec![Complex64::new(0.0, 0.0); self.n];
        self.forward_real(&f.values, &mut modes);
        SpectralField {
            grid: f.grid.clone(),
            modes,
        }
    }

    pub fn to_wave(&mut self, s: &SpectralField) -> Result<WaveField, SpectralError> {
        let mut buf = s.modes.clone();
        let mut values = vec![0.0; self.n];
        self.inverse_real(&mut buf, &mut values)?;
        Ok(WaveField {
            grid: s.grid.clone(),
            values,
        })
    }
}

/// The Fourier multipliers appearing in the evolution equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MultiplierKind {
    /// `ξ(1 − γ2ξ² + δ2ξ⁴) / (1 + γ1ξ² + δ1ξ⁴)`, the linear dispersion.
    Phi,
    /// `ξ / (1 + γ1ξ² + δ1ξ⁴)`.
    Psi,
    /// `(3ξ − 4γξ³) / (4(1 + γ1ξ² + δ1ξ⁴))`.
    Tau,
    /// `|ξ| / (1 + ξ²)`, coefficient free.
    Omega,
}

impl MultiplierKind {
    pub fn is_odd(self) -> bool {
        !matches!(self, MultiplierKind::Omega)
    }
}

#[inline]
fn smoothing_denominator(ec: &EquationCoefficients, xi: f64) -> f64 {
    let x2 = xi * xi;
    1.0 + ec.gamma1 * x2 + ec.delta1 * x2 * x2
}

#[inline]
pub(crate) fn phi_symbol(ec: &EquationCoefficients, xi: f64) -> f64 {
    let x2 = xi * xi;
    xi * (1.0 - ec.gamma2 * x2 + ec.delta2 * x2 * x2) / smoothing_denominator(ec, xi)
}

#[inline]
pub(crate) fn psi_symbol(ec: &EquationCoefficients, xi: f64) -> f64 {
    xi / smoothing_denominator(ec, xi)
}

#[inline]
pub(crate) fn tau_symbol(ec: &EquationCoefficients, xi: f64) -> f64 {
    (3.0 * xi - 4.0 * ec.gamma * xi * xi * xi) / (4.0 * smoothing_denominator(ec, xi))
}

#[inline]
pub(crate) fn omega_symbol(xi: f64) -> f64 {
    xi.abs() / (1.0 + xi * xi)
}

pub fn multiplier_eval(
    kind: MultiplierKind,
    ec: &EquationCoefficients,
    xi: f64,
) -> Result<f64, SpectralError> {
    if kind != MultiplierKind::Omega {
        ec.check_admissible()?;
    }
    Ok(match kind {
        MultiplierKind::Phi => phi_symbol(ec, xi),
        MultiplierKind::Psi => psi_symbol(ec, xi),
        MultiplierKind::Tau => tau_symbol(ec, xi),
        MultiplierKind::Omega => omega_symbol(xi),
    })
}

/// Applies a multiplier to a real field and returns a real field.
///
/// An odd real symbol `m` turns a real field into an imaginary one, so odd
/// symbols are applied as `−i m(k)`, the combination that appears in
/// `η_t = −i[φ(∂x)η + …]`. Under this convention `cos(k₀x)` is mapped to
/// `m(k₀) sin(k₀x)`. The even `ω` is applied as `m(k)`.
pub fn apply_multiplier(
    f: &WaveField,
    kind: MultiplierKind,
    ec: &EquationCoefficients,
) -> Result<WaveField, SpectralError> {
    if kind != MultiplierKind::Omega {
        ec.check_admissible()?;
    }
    let grid = f.grid.clone();
    let mut tr = Transform::new(grid.n);
    let mut s = tr.to_spectral(f);
    for (z, &k) in s.modes.iter_mut().zip(grid.k()) {
        let m = match kind {
            MultiplierKind::Phi => phi_symbol(ec, k),
            MultiplierKind::Psi => psi_symbol(ec, k),
            MultiplierKind::Tau => tau_symbol(ec, k),
            MultiplierKind::Omega => omega_symbol(k),
        };
        *z *= if kind.is_odd() {
            Complex64::new(0.0, -m)
        } else {
            Complex64::new(m, 0.0)
        };
    }
    s.modes[grid.nyquist()] = Complex64::new(0.0, 0.0);
    tr.to_wave(&s)
}

/// Linear solution group: modes multiplied by `e^{−iφ(k)t}`.
pub fn semigroup_apply(
    f: &WaveField,
    t: f64,
    ec: &EquationCoefficients,
) -> Result<WaveField, SpectralError> {
    ec.check_admissible()?;
    let grid = f.grid.clone();
    let mut tr = Transform::new(grid.n);
    let mut s = tr.to_spectral(f);
    for (z, &k) in s.modes.iter_mut().zip(grid.k()) {
        *z *= Complex64::from_polar(1.0, -phi_symbol(ec, k) * t);
    }
    s.modes[grid.nyquist()] = Complex64::new(0.0, 0.0);
    tr.to_wave(&s)
}

/// Discrete `H^s` norm, normalized so that `s = 0` is the `L²(0, L)` norm:
/// `‖f‖² = (L/n²) Σ (1 + k²)^s |f̂_k|²`.
pub fn sobolev_norm(f: &WaveField, s: f64) -> f64 {
    let mut tr = Transform::new(f.grid.n);
    let spec = tr.to_spectral(f);
    spectral_sobolev_norm(&spec, s)
}

pub fn spectral_sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let n = f.grid.n as f64;
    let sum: f64 = f
        .modes
        .iter()
        .zip(f.grid.k())
        .map(|(z, &k)| (1.0 + k * k).powf(s) * z.norm_sqr())
        .sum();
    (f.grid.length / (n * n) * sum).sqrt()
}

/// Spectral derivative of order `order` of a real field.
pub fn derivative(f: &WaveField, order: u32) -> WaveField {
    let grid = f.grid.clone();
    let mut tr = Transform::new(grid.n);
    let mut s = tr.to_spectral(f);
    differentiate_modes(&mut s.modes, grid.k(), order);
    if order % 2 == 1 {
        s.modes[grid.nyquist()] = Complex64::new(0.0, 0.0);
    }
    // real by construction; round-off in the imaginary part is dropped
    tr.inverse_in_place(&mut s.modes);
    WaveField {
        grid,
        values: s.modes.iter().map(|z| z.re).collect(),
    }
}

pub(crate) fn differentiate_modes(modes: &mut [Complex64], k: &[f64], order: u32) {
    for (z, &kk) in modes.iter_mut().zip(k) {
        *z *= Complex64::new(0.0, kk).powu(order);
    }
}

/// Largest empirical ratios over a family of random band-limited fields:
/// `‖τ(∂x)η²‖/‖η‖²`, `‖ψ(∂x)η³‖/‖η‖³` and `‖ψ(∂x)(η_x)²‖/‖η‖²`, all in `H^s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeRatios {
    pub quadratic: f64,
    pub cubic: f64,
    pub gradient: f64,
}

impl ProbeRatios {
    pub fn max(&self) -> f64 {
        self.quadratic.max(self.cubic).max(self.gradient)
    }
}

/// Ratios for one given field, with products formed on a grid fine enough
/// that `η³` is alias free.
pub fn probe_ratios_for(
    eta: &WaveField,
    ec: &EquationCoefficients,
    s: f64,
    band: usize,
) -> Result<ProbeRatios, SpectralError> {
    ec.check_admissible()?;
    let grid = eta.grid.clone();
    let mut tr = Transform::new(grid.n);
    let spec = tr.to_spectral(eta);
    let fine_n = grid.n.max((6 * band + 2).next_power_of_two());
    let fine = PeriodicGrid::new(fine_n, grid.length)?;
    let mut fine_modes = vec![Complex64::new(0.0, 0.0); fine_n];
    let scale = fine_n as f64 / grid.n as f64;
    for (j, z) in spec.modes.iter().enumerate() {
        if j == grid.nyquist() {
            continue;
        }
        let m = mode_index(j, grid.n);
        let slot = if m >= 0 {
            m as usize
        } else {
            (fine_n as i64 + m) as usize
        };
        fine_modes[slot] = *z * scale;
    }
    let mut ftr = Transform::new(fine_n);
    let eta_fine_modes = fine_modes.clone();
    let mut eta_vals = vec![0.0; fine_n];
    ftr.inverse_real(&mut fine_modes, &mut eta_vals)?;
    let mut dx_modes = eta_fine_modes.clone();
    differentiate_modes(&mut dx_modes, fine.k(), 1);
    let mut dx_vals = vec![0.0; fine_n];
    ftr.inverse_real(&mut dx_modes, &mut dx_vals)?;

    let eta_f = SpectralField {
        grid: fine.clone(),
        modes: eta_fine_modes,
    };
    let norm = spectral_sobolev_norm(&eta_f, s);
    if norm == 0.0 {
        return Ok(ProbeRatios {
            quadratic: 0.0,
            cubic: 0.0,
            gradient: 0.0,
        });
    }

    let mut apply = |vals: Vec<f64>, symbol: &dyn Fn(f64) -> f64| {
        let mut m = vec![Complex64::new(0.0, 0.0); fine_n];
        ftr.forward_real(&vals, &mut m);
        for (z, &k) in m.iter_mut().zip(fine.k()) {
            *z *= symbol(k);
        }
        spectral_sobolev_norm(
            &SpectralField {
                grid: fine.clone(),
                modes: m,
            },
            s,
        )
    };
    let sq: Vec<f64> = eta_vals.iter().map(|v| v * v).collect();
    let cube: Vec<f64> = eta_vals.iter().map(|v| v * v * v).collect();
    let grad: Vec<f64> = dx_vals.iter().map(|v| v * v).collect();
    let quadratic = apply(sq, &|k| tau_symbol(ec, k)) / (norm * norm);
    let cubic = apply(cube, &|k| psi_symbol(ec, k)) / (norm * norm * norm);
    let gradient = apply(grad, &|k| psi_symbol(ec, k)) / (norm * norm);
    Ok(ProbeRatios {
        quadratic,
        cubic,
        gradient,
    })
}

/// Random field with i.i.d. standard normal coefficients on modes
/// `|j| ≤ band`, the same function for every grid resolution.
pub fn random_band_limited(
    grid: &Arc<PeriodicGrid>,
    band: usize,
    rng: &mut ChaCha8Rng,
) -> WaveField {
    let n = grid.n;
    let band = band.min(n / 2 - 1);
    let mut modes = vec![Complex64::new(0.0, 0.0); n];
    let scale = n as f64;
    let a0: f64 = StandardNormal.sample(rng);
    modes[0] = Complex64::new(a0 * scale, 0.0);
    for j in 1..=band {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let z = Complex64::new(re, im) * scale;
        modes[j] = z;
        modes[n - j] = z.conj();
    }
    let mut tr = Transform::new(n);
    let mut values = vec![0.0; n];
    tr.inverse_real(&mut modes, &mut values)
        .expect("conjugate-symmetric modes");
    WaveField {
        grid: grid.clone(),
        values,
    }
}

/// Empirical surrogate for the constants of the multilinear estimates.
/// This is a probe over `trials` random fields, not a bound.
pub fn estimate_probe(
    ec: &EquationCoefficients,
    s: f64,
    trials: usize,
    seed: u64,
    grid: &Arc<PeriodicGrid>,
    band: usize,
) -> Result<ProbeRatios, SpectralError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = ProbeRatios {
        quadratic: 0.0,
        cubic: 0.0,
        gradient: 0.0,
    };
    for _ in 0..trials {
        let eta = random_band_limited(grid, band, &mut rng);
        let r = probe_ratios_for(&eta, ec, s, band)?;
        best.quadratic = best.quadratic.max(r.quadratic);
        best.cubic = best.cubic.max(r.cubic);
        best.gradient = best.gradient.max(r.gradient);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{compute_equation_coefficients, ModelParameters};
    use rand::Rng;

    fn ec() -> EquationCoefficients {
        let p = ModelParameters::with_hamiltonian_rho(1.0, 0.0, 0.0, 2.0, 0.0).unwrap();
        compute_equation_coefficients(&p)
    }

    fn random_field(grid: &Arc<PeriodicGrid>, seed: u64) -> WaveField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_band_limited(grid, grid.n() / 4, &mut rng)
    }

    #[test]
    fn grid_layout() {
        let g = PeriodicGrid::new(8, 4.0).unwrap();
        assert_eq!(g.x()[0], -2.0);
        assert_eq!(g.x()[1], -1.5);
        let k: Vec<i64> = (0..8).map(|j| mode_index(j, 8)).collect();
        assert_eq!(k, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert!((g.k()[1] - PI / 2.0).abs() < 1e-15);
        assert!(PeriodicGrid::new(12, 1.0).is_err());
        assert!(PeriodicGrid::new(16, -1.0).is_err());
    }

    #[test]
    fn field_validation() {
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        assert!(WaveField::new(g.clone(), vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(WaveField::new(g, v), Err(SpectralError::NonFinite(3)));
    }

    #[test]
    fn round_trip() {
        let g = PeriodicGrid::new(256, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = WaveField::new(g, values).unwrap();
        let mut tr = Transform::new(256);
        let spec = tr.to_spectral(&f);
        let back = tr.to_wave(&spec).unwrap();
        let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn symbols_at_zero_and_parity() {
        let ec = ec();
        for kind in [
            MultiplierKind::Phi,
            MultiplierKind::Psi,
            MultiplierKind::Tau,
            MultiplierKind::Omega,
        ] {
            assert_eq!(multiplier_eval(kind, &ec, 0.0).unwrap(), 0.0);
            for xi in [0.3, 1.0, 4.5, 40.0] {
                let p = multiplier_eval(kind, &ec, xi).unwrap();
                let m = multiplier_eval(kind, &ec, -xi).unwrap();
                if kind.is_odd() {
                    assert_eq!(p, -m);
                } else {
                    assert_eq!(p, m);
                }
            }
        }
    }

    #[test]
    fn psi_rational_value() {
        let ec = EquationCoefficients::from_free(1.0 / 12.0, 11.0 / 240.0, 7.0 / 48.0);
        let v = multiplier_eval(MultiplierKind::Psi, &ec, 2.0).unwrap();
        assert!((v - 30.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn psi_decays_cubically_and_is_dominated_by_omega() {
        let ec = ec();
        let mut worst_decay = 0.0f64;
        let mut worst_omega = 0.0f64;
        for i in 0..=20000 {
            let xi = -100.0 + i as f64 * 0.01;
            let psi = psi_symbol(&ec, xi);
            worst_decay = worst_decay.max(psi.abs() * (1.0 + xi.abs()).powi(3));
            if xi != 0.0 {
                worst_omega = worst_omega.max(psi.abs() * (1.0 + xi.abs()) / omega_symbol(xi));
                assert!(tau_symbol(&ec, xi).abs() / omega_symbol(xi) < 10.0);
            }
        }
        assert!(
            worst_decay.is_finite() && worst_decay < 1e3,
            "{worst_decay}"
        );
        assert!(
            worst_omega.is_finite() && worst_omega < 1e2,
            "{worst_omega}"
        );
    }

    #[test]
    fn inadmissible_rejected() {
        let bad = EquationCoefficients::from_free(1.0 / 12.0, -0.01, 7.0 / 48.0);
        assert!(multiplier_eval(MultiplierKind::Psi, &bad, 1.0).is_err());
        assert!(multiplier_eval(MultiplierKind::Omega, &bad, 1.0).is_ok());
        let g = PeriodicGrid::new(16, 1.0).unwrap();
        assert!(semigroup_apply(&WaveField::zeros(g), 1.0, &bad).is_err());
    }

    #[test]
    fn multiplier_on_single_mode() {
        let ec = ec();
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let k0 = 3.0;
        let f = WaveField::from_fn(g.clone(), |x| (k0 * x).cos());
        for kind in [
            MultiplierKind::Psi,
            MultiplierKind::Tau,
            MultiplierKind::Phi,
        ] {
            let m = multiplier_eval(kind, &ec, k0).unwrap();
            let out = apply_multiplier(&f, kind, &ec).unwrap();
            for (x, v) in g.x().iter().zip(&out.values) {
                assert!((v - m * (k0 * x).sin()).abs() < 1e-13);
            }
        }
        let out = apply_multiplier(&f, MultiplierKind::Omega, &ec).unwrap();
        let w = omega_symbol(k0);
        for (x, v) in g.x().iter().zip(&out.values) {
            assert!((v - w * (k0 * x).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn multiplier_kills_constants_and_is_linear() {
        let ec = ec();
        let g = PeriodicGrid::new(128, 20.0).unwrap();
        let c = WaveField::from_fn(g.clone(), |_| 2.5);
        let out = apply_multiplier(&c, MultiplierKind::Tau, &ec).unwrap();
        assert!(out.values.iter().all(|v| v.abs() < 1e-14));

        let f = random_field(&g, 1);
        let h = random_field(&g, 2);
        let (a, b) = (0.7, -1.3);
        let comb = WaveField::new(
            g.clone(),
            f.values
                .iter()
                .zip(&h.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        for kind in [MultiplierKind::Psi, MultiplierKind::Omega] {
            let lhs = apply_multiplier(&comb, kind, &ec).unwrap();
            let of = apply_multiplier(&f, kind, &ec).unwrap();
            let oh = apply_multiplier(&h, kind, &ec).unwrap();
            for i in 0..g.n() {
                assert!((lhs.values[i] - (a * of.values[i] + b * oh.values[i])).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn semigroup_examples() {
        let ec = ec();
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let f = random_field(&g, 5);
        let same = semigroup_apply(&f, 0.0, &ec).unwrap();
        for (a, b) in f.values.iter().zip(&same.values) {
            assert!((a - b).abs() < 1e-14);
        }
        let k0 = 2.0;
        let c = WaveField::from_fn(g.clone(), |x| (k0 * x).cos());
        let t = 1.7;
        let out = semigroup_apply(&c, t, &ec).unwrap();
        let shift = phi_symbol(&ec, k0) * t;
        for (x, v) in g.x().iter().zip(&out.values) {
            assert!((v - (k0 * x - shift).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn sobolev_examples() {
        let l = 7.0;
        let g = PeriodicGrid::new(64, l).unwrap();
        let a = 1.9;
        let f = WaveField::from_fn(g.clone(), |x| a * (2.0 * PI * x / l).cos());
        assert!((sobolev_norm(&f, 0.0) - a * (l / 2.0).sqrt()).abs() < 1e-13);
        assert_eq!(sobolev_norm(&WaveField::zeros(g.clone()), 2.0), 0.0);
        let r = random_field(&g, 9);
        let mut prev = 0.0;
        for s in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.5] {
            let v = sobolev_norm(&r, s);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn probe_zero_field() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let r = probe_ratios_for(&WaveField::zeros(g), &ec(), 1.0, 16).unwrap();
        assert_eq!(r.max(), 0.0);
    }

    #[test]
    fn probe_single_mode_closed_form() {
        let ec = ec();
        let l = 2.0 * PI;
        let g = PeriodicGrid::new(64, l).unwrap();
        let eta = WaveField::from_fn(g, |x| x.cos());
        let r = probe_ratios_for(&eta, &ec, 1.0, 1).unwrap();
        // ‖cos x‖²_{H¹} = L · 2 · (1/2)² · 2 = 2π
        let norm = (2.0 * PI).sqrt();
        let t2 = tau_symbol(&ec, 2.0);
        let quad = (l * 5.0 * 2.0 * (t2 / 4.0).powi(2)).sqrt() / norm.powi(2);
        let (p1, p2, p3) = (
            psi_symbol(&ec, 1.0),
            psi_symbol(&ec, 2.0),
            psi_symbol(&ec, 3.0),
        );
        let cubic = (l * (2.0 * 2.0 * (3.0 * p1 / 8.0).powi(2) + 2.0 * 10.0 * (p3 / 8.0).powi(2)))
            .sqrt()
            / norm.powi(3);
        let grad = (l * 5.0 * 2.0 * (p2 / 4.0).powi(2)).sqrt() / norm.powi(2);
        assert!((r.quadratic - quad).abs() < 1e-13 * quad);
        assert!((r.cubic - cubic).abs() < 1e-13 * cubic);
        assert!((r.gradient - grad).abs() < 1e-13 * grad);
    }

    #[test]
    fn probe_stable_under_refinement() {
        let ec = ec();
        let coarse = PeriodicGrid::new(256, 2.0 * PI).unwrap();
        let fine = PeriodicGrid::new(512, 2.0 * PI).unwrap();
        let a = estimate_probe(&ec, 1.0, 8, 42, &coarse, 64).unwrap();
        let b = estimate_probe(&ec, 1.0, 8, 42, &fine, 64).unwrap();
        for (x, y) in [
            (a.quadratic, b.quadratic),
            (a.cubic, b.cubic),
            (a.gradient, b.gradient),
        ] {
            assert!(x.is_finite() && x > 0.0);
            assert!((x - y).abs() < 0.05 * x, "{x} vs {y}");
        }
    }
}
