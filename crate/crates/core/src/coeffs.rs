//! Coefficients of the fifth-order unidirectional model.
//!
//! Everything here is pure arithmetic on the six modelling parameters
//! `(theta, lambda, mu, lambda1, mu1, rho)`: the first- and second-order
//! Boussinesq constants, the derived PDE coefficients and the predicates
//! that classify a parameter tuple as well-posed and/or Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::CoeffError;

/// Value of `gamma` for which the model carries the second conserved
/// quantity and the energy functional is exactly conserved.
pub const HAMILTONIAN_GAMMA: f64 = 7.0 / 48.0;

/// `delta2 - delta1 + gamma1 / 6` for every member of the family.
pub const QUARTIC_DISPERSION: f64 = 19.0 / 360.0;

/// Default identity tolerance for floating-point parameter input.
pub const IDENTITY_TOL: f64 = 1e-12;

/// The six fundamental parameters selecting one member of the model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParameters {
    pub theta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub lambda1: f64,
    pub mu1: f64,
    pub rho: f64,
}

impl ModelParameters {
    pub fn new(
        theta: f64,
        lambda: f64,
        mu: f64,
        lambda1: f64,
        mu1: f64,
        rho: f64,
    ) -> Result<Self, CoeffError> {
        let p = ModelParameters {
            theta,
            lambda,
            mu,
            lambda1,
            mu1,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the tuple with `rho = b + d - 1/6`, the Hamiltonian choice.
    pub fn with_hamiltonian_rho(
        theta: f64,
        lambda: f64,
        mu: f64,
        lambda1: f64,
        mu1: f64,
    ) -> Result<Self, CoeffError> {
        let mut p = ModelParameters::new(theta, lambda, mu, lambda1, mu1, 0.0)?;
        p.rho = hamiltonian_rho(&p);
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CoeffError> {
        let named = [
            ("theta", self.theta),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("lambda1", self.lambda1),
            ("mu1", self.mu1),
            ("rho", self.rho),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(CoeffError::NonFinite(name));
            }
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(CoeffError::ThetaOutOfRange(self.theta));
        }
        Ok(())
    }
}

/// First-order Boussinesq constants; `a + b + c + d = 1/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdSet {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl AbcdSet {
    pub fn sum(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }
}

/// Second-order Boussinesq constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HigherAbcdSet {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
}

/// Coefficients of
///
/// ```text
/// η_t + η_x − γ1 η_xxt + γ2 η_xxx + δ1 η_xxxxt + δ2 η_xxxxx
///     + ¾(η²)_x + γ(η²)_xxx − 7/48 (η_x²)_x − ⅛(η³)_x = 0
/// ```
///
/// together with the coefficients `sigma1`, `sigma2` of the variant in which
/// `a + b + c + d = 1/3` is not enforced, and the first-order `nu_tilde`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquationCoefficients {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub nu_tilde: f64,
}

impl EquationCoefficients {
    /// Coefficients fixed directly by `gamma1` and `delta1`, with the
    /// remaining ones filled in from the family identities.
    pub fn from_free(gamma1: f64, delta1: f64, gamma: f64) -> Self {
        let gamma2 = 1.0 / 6.0 - gamma1;
        EquationCoefficients {
            gamma1,
            gamma2,
            delta1,
            delta2: delta1 + QUARTIC_DISPERSION - gamma1 / 6.0,
            gamma,
            sigma1: gamma,
            sigma2: HAMILTONIAN_GAMMA,
            nu_tilde: gamma2,
        }
    }

    /// `gamma1 >= 0` and `delta1 > 0`: the linear problem is well-posed.
    pub fn is_admissible(&self) -> bool {
        self.gamma1 >= 0.0 && self.delta1 > 0.0
    }

    pub fn check_admissible(&self) -> Result<(), CoeffError> {
        let finite = [
            self.gamma1,
            self.gamma2,
            self.delta1,
            self.delta2,
            self.gamma,
        ]
        .iter()
        .all(|v| v.is_finite());
        if finite && self.is_admissible() {
            Ok(())
        } else {
            Err(CoeffError::Inadmissible {
                gamma1: self.gamma1,
                delta1: self.delta1,
            })
        }
    }

    pub fn is_hamiltonian(&self, tol: f64) -> bool {
        (self.gamma - HAMILTONIAN_GAMMA).abs() <= tol
    }

    /// Residuals of the three family identities:
    /// `γ1+γ2−1/6`, `δ2−δ1+γ1/6−19/360`, `γ−(5−18γ1)/24`.
    pub fn identity_residuals(&self) -> [f64; 3] {
        [
            self.gamma1 + self.gamma2 - 1.0 / 6.0,
            self.delta2 - self.delta1 + self.gamma1 / 6.0 - QUARTIC_DISPERSION,
            self.gamma - (5.0 - 18.0 * self.gamma1) / 24.0,
        ]
    }
}

pub fn compute_abcd(p: &ModelParameters) -> AbcdSet {
    let t2 = p.theta * p.theta;
    AbcdSet {
        a: 0.5 * (t2 - 1.0 / 3.0) * p.lambda,
        b: 0.5 * (t2 - 1.0 / 3.0) * (1.0 - p.lambda),
        c: 0.5 * (1.0 - t2) * p.mu,
        d: 0.5 * (1.0 - t2) * (1.0 - p.mu),
    }
}

pub fn compute_higher_abcd(p: &ModelParameters) -> HigherAbcdSet {
    let t2 = p.theta * p.theta;
    let third = t2 - 1.0 / 3.0;
    let fifth = t2 - 1.0 / 5.0;
    let bottom = 1.0 - t2;
    HigherAbcdSet {
        a1: -0.25 * third * third * (1.0 - p.lambda) + 5.0 / 24.0 * fifth * fifth * p.lambda1,
        b1: -5.0 / 24.0 * fifth * fifth * (1.0 - p.lambda1),
        c1: 5.0 / 24.0 * bottom * fifth * (1.0 - p.mu1),
        d1: -0.25 * bottom * bottom * p.mu - 5.0 / 24.0 * bottom * fifth * p.mu1,
    }
}

pub fn compute_equation_coefficients(p: &ModelParameters) -> EquationCoefficients {
    let AbcdSet { a, b, c, d } = compute_abcd(p);
    let HigherAbcdSet { a1, b1, c1, d1 } = compute_higher_abcd(p);
    let rho = p.rho;
    let sixth = 1.0 / 6.0;

    let delta1 = 0.25 * (2.0 * (b1 + d1) - (b - d + rho) * (sixth - a - d) - d * (c - a + rho));
    let delta2 = 0.25 * (2.0 * (a1 + c1) - (c - a + rho) * (sixth - a) + rho / 3.0);

    EquationCoefficients {
        gamma1: 0.5 * (b + d - rho),
        gamma2: 0.5 * (a + c + rho),
        delta1,
        delta2,
        gamma: (5.0 - 9.0 * (b + d) + 9.0 * rho) / 24.0,
        sigma1: (4.0 + 3.0 * (a - 2.0 * b + c - 2.0 * d) + 9.0 * rho) / 24.0,
        sigma2: (4.0 + 9.0 * (a + b + c + d)) / 48.0,
        nu_tilde: 0.5 * (a + c + rho),
    }
}

/// The value of `rho` making `gamma = 7/48`; the stored `rho` is ignored.
pub fn hamiltonian_rho(p: &ModelParameters) -> f64 {
    let abcd = compute_abcd(p);
    abcd.b + abcd.d - 1.0 / 6.0
}

/// `rho = b + d − 1/6` written out in `(theta, lambda, mu)`.
pub fn hamiltonian_rho_closed_form(theta: f64, lambda: f64, mu: f64) -> f64 {
    let t2 = theta * theta;
    (1.0 - 3.0 * (t2 - 1.0 / 3.0) * lambda - 3.0 * (1.0 - t2) * mu) / 6.0
}

/// The `(lambda1, mu1)`-free part of `delta1` under the Hamiltonian `rho`.
///
/// At `theta² = 1/5` this is all of `delta1`, and reduces to
/// `−λ²/450 − λ/1800 − μ/30 − 41/1200`.
pub fn evaluate_p(theta: f64, lambda: f64, mu: f64) -> f64 {
    let t2 = theta * theta;
    let t4 = t2 * t2;
    -(3.0 * t2 - 1.0).powi(2) / 72.0 * lambda * lambda
        + (3.0 * t2 - 1.0) * (6.0 * t2 - 1.0) / 144.0 * lambda
        - (1.0 - t2) / 24.0 * mu
        - (55.0 * t4 - 50.0 * t2 + 16.0) / 240.0
}

/// `delta1` as a closed form in the five parameters, assuming the
/// Hamiltonian `rho`. Independent of [`compute_equation_coefficients`].
pub fn delta1_closed_form(theta: f64, lambda: f64, mu: f64, lambda1: f64, mu1: f64) -> f64 {
    let t2 = theta * theta;
    let fifth = t2 - 0.2;
    5.0 / 48.0 * fifth * fifth * lambda1 - 5.0 / 48.0 * fifth * (1.0 - t2) * mu1
        + evaluate_p(theta, lambda, mu)
}

/// Threshold `H` with `delta1 > 0  <=>  lambda1 > H` (Hamiltonian `rho`).
///
/// Undefined on `theta² = 1/5`, where `delta1` no longer depends on
/// `lambda1` and the sign is decided by [`evaluate_p`] alone.
pub fn threshold_h(theta: f64, lambda: f64, mu: f64, mu1: f64) -> Result<f64, CoeffError> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(CoeffError::ThetaOutOfRange(theta));
    }
    let fifth = theta * theta - 0.2;
    if fifth.abs() <= 1e-14 {
        return Err(CoeffError::ParabolaCase);
    }
    let bottom = 1.0 - theta * theta;
    Ok(bottom * mu1 / fifth - 48.0 / 5.0 * evaluate_p(theta, lambda, mu) / (fifth * fifth))
}

/// Right-hand side of the general `delta2 − delta1` relation, valid without
/// assuming `a + b + c + d = 1/3`.
pub fn general_delta_gap(p: &ModelParameters) -> f64 {
    let AbcdSet { a, b, c, d } = compute_abcd(p);
    let HigherAbcdSet { a1, b1, c1, d1 } = compute_higher_abcd(p);
    0.25 * p.rho * (a + b + c + d)
        + 0.125 * ((b - d).powi(2) - (a - c).powi(2))
        + 0.5 * (a1 - b1 + c1 - d1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub well_posed: bool,
    pub hamiltonian: bool,
    pub identities_ok: bool,
    pub delta1_value: f64,
    /// `|delta1(gamas, Hamiltonian rho) − delta1_closed_form|`.
    pub delta1_discrepancy: f64,
    pub messages: Vec<String>,
}

pub fn check_model(p: &ModelParameters, tol: f64) -> ModelDiagnostics {
    let ec = compute_equation_coefficients(p);
    let rho_h = hamiltonian_rho(p);
    let mut messages = Vec::new();

    if ec.gamma1 <= 0.0 {
        messages.push(format!("gamma1 = {:e} is not positive", ec.gamma1));
    }
    if ec.delta1 <= 0.0 {
        messages.push(format!("delta1 = {:e} is not positive", ec.delta1));
    }
    let well_posed = ec.gamma1 > 0.0 && ec.delta1 > 0.0;

    let gamma_ok = ec.is_hamiltonian(tol);
    let rho_ok = (p.rho - rho_h).abs() <= tol;
    if !gamma_ok {
        messages.push(format!(
            "gamma = {:e} differs from 7/48 by {:e}",
            ec.gamma,
            ec.gamma - HAMILTONIAN_GAMMA
        ));
    }
    if !rho_ok {
        messages.push(format!(
            "rho = {:e} differs from b + d - 1/6 = {:e}",
            p.rho, rho_h
        ));
    }

    let names = [
        "gamma1 + gamma2 = 1/6",
        "delta2 - delta1 + gamma1/6 = 19/360",
        "gamma = (5 - 18 gamma1)/24",
    ];
    let mut identities_ok = true;
    for (name, r) in names.iter().zip(ec.identity_residuals()) {
        if r.abs() > tol || !r.is_finite() {
            identities_ok = false;
            messages.push(format!("identity {name} violated by {r:e}"));
        }
    }

    let ham = ModelParameters { rho: rho_h, ..*p };
    let delta1_h = compute_equation_coefficients(&ham).delta1;
    let closed = delta1_closed_form(p.theta, p.lambda, p.mu, p.lambda1, p.mu1);
    let delta1_discrepancy = (delta1_h - closed).abs();

    ModelDiagnostics {
        well_posed,
        hamiltonian: gamma_ok && rho_ok,
        identities_ok,
        delta1_value: ec.delta1,
        delta1_discrepancy,
        messages,
    }
}
