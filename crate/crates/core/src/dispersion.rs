//! Linear phase speed of the model against the full water-wave relation.

use serde::{Deserialize, Serialize};

use crate::coeffs::{EquationCoefficients, QUARTIC_DISPERSION};
use crate::error::DispersionError;

/// Maclaurin coefficients of `tanh(k)/k` in powers of `k²`.
const TANH_OVER_K: [f64; 4] = [1.0, -1.0 / 3.0, 2.0 / 15.0, -17.0 / 315.0];

/// Coefficient of `k⁶` in the expansion of `sqrt(tanh(k)/k)`.
pub const EULER_SIXTH_ORDER: f64 = -55.0 / 3024.0;

/// Exact phase speed `(1 − γ2k² + δ2k⁴) / (1 + γ1k² + δ1k⁴)` of the
/// linearized model.
pub fn c_exact_model(k: f64, ec: &EquationCoefficients) -> Result<f64, DispersionError> {
    let k2 = k * k;
    let den = 1.0 + ec.gamma1 * k2 + ec.delta1 * k2 * k2;
    if den.abs() <= f64::EPSILON {
        return Err(DispersionError::VanishingDenominator(k));
    }
    Ok((1.0 - ec.gamma2 * k2 + ec.delta2 * k2 * k2) / den)
}

/// Right-going branch `+sqrt(tanh(k)/k)` of the water-wave phase speed.
pub fn c_euler(k: f64) -> f64 {
    let k = k.abs();
    if k < 1e-8 {
        let x = k * k;
        let t = euler_taylor_coefficients();
        return t[0] + x * (t[1] + x * (t[2] + x * t[3]));
    }
    (k.tanh() / k).sqrt()
}

/// Maclaurin coefficients of `c_euler` in powers of `k²`, through `k⁶`,
/// obtained as the power-series square root of `tanh(k)/k`.
pub fn euler_taylor_coefficients() -> [f64; 4] {
    let mut s = [0.0; 4];
    s[0] = TANH_OVER_K[0].sqrt();
    for j in 1..4 {
        let cross: f64 = (1..j).map(|i| s[i] * s[j - i]).sum();
        s[j] = (TANH_OVER_K[j] - cross) / (2.0 * s[0]);
    }
    s
}

/// Maclaurin coefficients of [`c_exact_model`] through `k^order`, by exact
/// division of the numerator series by the denominator series.
pub fn taylor_coefficients(
    ec: &EquationCoefficients,
    order: usize,
) -> Result<Vec<f64>, DispersionError> {
    if order > 6 || !order.is_multiple_of(2) {
        return Err(DispersionError::UnsupportedOrder(order));
    }
    let terms = order / 2 + 1;
    let num = [1.0, -ec.gamma2, ec.delta2, 0.0];
    let den = [1.0, ec.gamma1, ec.delta1, 0.0];
    let mut q = vec![0.0; terms];
    for j in 0..terms {
        let acc: f64 = (1..=j).map(|i| den[i] * q[j - i]).sum();
        q[j] = (num[j] - acc) / den[0];
    }
    Ok(q)
}

/// The `k⁶` coefficient of the model phase speed, in the general form
/// `−γ1δ2 − γ2(−δ1 + γ1²) + 2γ1δ1 − γ1³`.
pub fn f_coefficient(ec: &EquationCoefficients) -> f64 {
    let g1 = ec.gamma1;
    -g1 * ec.delta2 - ec.gamma2 * (-ec.delta1 + g1 * g1) + 2.0 * g1 * ec.delta1 - g1 * g1 * g1
}

/// Short form `−(19/360)γ1 + δ1/6`, valid once the family identities hold.
pub fn f_coefficient_reduced(ec: &EquationCoefficients) -> f64 {
    -QUARTIC_DISPERSION * ec.gamma1 + ec.delta1 / 6.0
}

/// The `delta1` that would make the model match the water-wave phase speed
/// through `k⁶` for a given `gamma1`, and whether it is admissible.
pub fn delta1_matching_sixth_order(gamma1: f64) -> (f64, bool) {
    let delta1 = 6.0 * (EULER_SIXTH_ORDER + QUARTIC_DISPERSION * gamma1);
    (delta1, delta1 > 0.0 && gamma1 >= 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub k_grid: Vec<f64>,
    pub c_model: Vec<f64>,
    pub c_euler: Vec<f64>,
    pub taylor_model: Vec<f64>,
    pub taylor_euler: Vec<f64>,
    pub f_coefficient: f64,
    /// `|F − F_reduced|`.
    pub f_discrepancy: f64,
    pub max_abs_error: f64,
}

impl DispersionReport {
    /// Rows `(k, c_model, c_euler, |c_model − c_euler|)`.
    pub fn rows(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.k_grid
            .iter()
            .zip(&self.c_model)
            .zip(&self.c_euler)
            .map(|((&k, &m), &e)| [k, m, e, (m - e).abs()])
    }
}

pub fn dispersion_report(
    ec: &EquationCoefficients,
    k_max: f64,
    n: usize,
) -> Result<DispersionReport, DispersionError> {
    if !(k_max > 0.0 && k_max.is_finite()) || n < 2 {
        return Err(DispersionError::InvalidGrid { k_max, n });
    }
    let k_grid: Vec<f64> = (0..n).map(|i| k_max * i as f64 / (n - 1) as f64).collect();
    let c_model = k_grid
        .iter()
        .map(|&k| c_exact_model(k, ec))
        .collect::<Result<Vec<_>, _>>()?;
    let c_eul: Vec<f64> = k_grid.iter().map(|&k| c_euler(k)).collect();
    let max_abs_error = c_model
        .iter()
        .zip(&c_eul)
        .map(|(m, e)| (m - e).abs())
        .fold(0.0, f64::max);
    let f = f_coefficient(ec);
    Ok(DispersionReport {
        k_grid,
        c_model,
        c_euler: c_eul,
        taylor_model: taylor_coefficients(ec, 6)?,
        taylor_euler: euler_taylor_coefficients().to_vec(),
        f_coefficient: f,
        f_discrepancy: (f - f_coefficient_reduced(ec)).abs(),
        max_abs_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{compute_equation_coefficients, ModelParameters};

    fn twelfths(delta1: f64) -> EquationCoefficients {
        EquationCoefficients::from_free(1.0 / 12.0, delta1, 7.0 / 48.0)
    }

    #[test]
    fn model_speed_examples() {
        let ec = twelfths(0.01);
        assert_eq!(c_exact_model(0.0, &ec).unwrap(), 1.0);
        let expected = (1.0 - 1.0 / 12.0 + 0.01 + 7.0 / 180.0) / (1.0 + 1.0 / 12.0 + 0.01);
        let got = c_exact_model(1.0, &ec).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.883130).abs() < 1e-6);
        for k in [0.3, 1.7, 9.0] {
            assert_eq!(
                c_exact_model(k, &ec).unwrap(),
                c_exact_model(-k, &ec).unwrap()
            );
        }
    }

    #[test]
    fn model_speed_rejects_vanishing_denominator() {
        // 1 + γ1 k² + δ1 k⁴ = 0 at k = 1 with γ1 = 0, δ1 = -1
        let ec = EquationCoefficients::from_free(0.0, -1.0, 7.0 / 48.0);
        assert!(matches!(
            c_exact_model(1.0, &ec),
            Err(DispersionError::VanishingDenominator(_))
        ));
    }

    #[test]
    fn euler_speed_limits() {
        assert_eq!(c_euler(0.0), 1.0);
        assert!((c_euler(1e4) * 1e2 - 1.0).abs() < 0.01);
        assert_eq!(c_euler(0.8), c_euler(-0.8));
        // continuity across the series switch
        assert!((c_euler(0.99e-8) - c_euler(1.01e-8)).abs() < 1e-15);
    }

    #[test]
    fn euler_series_remainder_is_eighth_order() {
        let t = euler_taylor_coefficients();
        let rem = |k: f64| {
            let x = k * k;
            c_euler(k) - (t[0] + x * (t[1] + x * (t[2] + x * t[3])))
        };
        let r1 = rem(0.4).abs();
        let r2 = rem(0.2).abs();
        let ratio = r1 / r2;
        assert!((ratio - 256.0).abs() < 20.0, "ratio {ratio}");
    }

    #[test]
    fn taylor_examples() {
        let ec = twelfths(0.02);
        let t = taylor_coefficients(&ec, 6).unwrap();
        assert_eq!(t.len(), 4);
        assert!((t[0] - 1.0).abs() < 1e-15);
        assert!((t[1] + 1.0 / 6.0).abs() < 1e-15);
        assert!((t[2] - 19.0 / 360.0).abs() < 1e-15);
        assert!((t[3] - f_coefficient(&ec)).abs() < 1e-15);

        let kdv = EquationCoefficients::from_free(0.0, 0.0, 7.0 / 48.0);
        let t = taylor_coefficients(&kdv, 6).unwrap();
        assert_eq!(t, vec![1.0, -1.0 / 6.0, 19.0 / 360.0, 0.0]);

        assert_eq!(taylor_coefficients(&ec, 2).unwrap().len(), 2);
        assert_eq!(
            taylor_coefficients(&ec, 3),
            Err(DispersionError::UnsupportedOrder(3))
        );
        assert_eq!(
            taylor_coefficients(&ec, 8),
            Err(DispersionError::UnsupportedOrder(8))
        );
    }

    // Independent oracle: central finite differences of c(k) = f(k²) in x = k².
    #[test]
    fn taylor_matches_finite_differences() {
        let p = ModelParameters::with_hamiltonian_rho(0.9, 0.4, -0.3, 3.0, 0.5).unwrap();
        let ec = compute_equation_coefficients(&p);
        assert!(ec.is_admissible());
        let f = |x: f64| {
            let k2 = x;
            (1.0 - ec.gamma2 * k2 + ec.delta2 * k2 * k2)
                / (1.0 + ec.gamma1 * k2 + ec.delta1 * k2 * k2)
        };
        // derivatives in x at x = 0 via symmetric stencils (f extends smoothly to x < 0)
        let h = 1e-2;
        let d1 = (f(h) - f(-h)) / (2.0 * h)
            - (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (12.0 * h);
        let d2 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
            / (12.0 * h * h);
        let h3 = 2e-2;
        let d3 = (-f(3.0 * h3) + 8.0 * f(2.0 * h3) - 13.0 * f(h3) + 13.0 * f(-h3)
            - 8.0 * f(-2.0 * h3)
            + f(-3.0 * h3))
            / (8.0 * h3 * h3 * h3);
        let t = taylor_coefficients(&ec, 6).unwrap();
        assert!((t[1] - d1).abs() < 1e-7, "{} {}", t[1], d1);
        assert!((t[2] - d2 / 2.0).abs() < 1e-7, "{} {}", t[2], d2 / 2.0);
        assert!((t[3] - d3 / 6.0).abs() < 1e-7, "{} {}", t[3], d3 / 6.0);
    }

    #[test]
    fn f_examples() {
        let ec = twelfths(-139.0 / 1680.0);
        assert!((f_coefficient(&ec) + 55.0 / 3024.0).abs() < 1e-15);
        assert!((f_coefficient_reduced(&ec) + 55.0 / 3024.0).abs() < 1e-15);

        let zero = EquationCoefficients::from_free(0.0, 0.0, 7.0 / 48.0);
        assert_eq!(f_coefficient_reduced(&zero), 0.0);
        assert!(f_coefficient(&zero).abs() < 1e-16);

        let ec = twelfths(11.0 / 240.0);
        assert!((f_coefficient_reduced(&ec) - 7.0 / 2160.0).abs() < 1e-15);
        assert!((f_coefficient(&ec) - 7.0 / 2160.0).abs() < 1e-15);
    }

    #[test]
    fn matching_sixth_order_is_inadmissible() {
        let (d1, ok) = delta1_matching_sixth_order(1.0 / 12.0);
        assert!((d1 + 139.0 / 1680.0).abs() < 1e-13);
        assert!(!ok);
    }

    #[test]
    fn report_examples() {
        let ec = twelfths(11.0 / 240.0);
        let r = dispersion_report(&ec, 0.5, 64).unwrap();
        let bound = (r.f_coefficient + 55.0 / 3024.0).abs() * 0.5f64.powi(6) + 1e-4;
        assert!(r.max_abs_error <= bound);
        assert_eq!(r.k_grid.len(), 64);
        assert_eq!(r.k_grid[63], 0.5);

        let r = dispersion_report(&ec, 1e-9, 2).unwrap();
        assert!(r.max_abs_error <= 1e-12);

        let e = [1.0, -1.0 / 6.0, 19.0 / 360.0, -55.0 / 3024.0];
        for (a, b) in r.taylor_euler.iter().zip(e) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(dispersion_report(&ec, 0.0, 2).is_err());
        assert!(dispersion_report(&ec, 1.0, 1).is_err());
    }
}
