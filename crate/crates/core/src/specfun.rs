//! Confluent hypergeometric function of the second kind, `U(a, b, z)`.
//!
//! `U` is evaluated from its integral representation
//!
//! ```text
//! U(a, b, z) = 1/Γ(a) ∫_0^∞ x^(a-1) (1+x)^(b-a-1) e^(-z x) dx,   a > 0, z > 0
//! ```
//!
//! after the substitution `x = e^u`, which turns the integrand into a smooth
//! bump on the whole real line:
//!
//! ```text
//! log integrand(u) = a u - (a - b + 1) log(1 + e^u) - z e^u
//! ```
//!
//! The left tail decays like `e^(a u)` and the right tail doubly
//! exponentially, so the adaptive rule in [`crate::quad`] only needs the bump
//! located and trimmed. All arithmetic is done in log-space; use
//! [`log_kummer_u`] whenever `U` may leave the range of `f64`.
//!
//! When `a <= 0` the integral diverges, and the value is obtained through
//! the Kummer transformation `U(a, b, z) = z^(1-b) U(1+a-b, 2-b, z)`
//! provided `1 + a - b > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, LogIntegral};

/// Arguments of `U(a, b, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UArgs {
    pub a: f64,
    pub b: f64,
    pub z: f64,
}

impl UArgs {
    /// Accepts `z > 0` together with `a > 0`, or `a <= 0 < 1 + a - b` (the
    /// latter evaluated through the Kummer transformation).
    pub fn new(a: f64, b: f64, z: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && z.is_finite()) {
            return Err(Error::Domain(format!(
                "U(a, b, z) needs finite arguments, got ({a}, {b}, {z})"
            )));
        }
        if z <= 0.0 {
            return Err(Error::Domain(format!("U(a, b, z) needs z > 0, got z = {z}")));
        }
        if a <= 0.0 && 1.0 + a - b <= 0.0 {
            return Err(Error::Domain(format!(
                "U(a, b, z) needs a > 0 or 1 + a - b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(UArgs { a, b, z })
    }
}

/// Accuracy controls for every quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl QuadratureConfig {
    pub fn new(rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
            return Err(Error::Domain(format!(
                "rel_tol must lie in (0, 1e-4], got {rel_tol}"
            )));
        }
        if max_subdivisions < 16 {
            return Err(Error::Domain(format!(
                "max_subdivisions must be at least 16, got {max_subdivisions}"
            )));
        }
        Ok(QuadratureConfig {
            rel_tol,
            max_subdivisions,
        })
    }
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            max_subdivisions: 4096,
        }
    }
}

/// A value of `log U` with its achieved relative error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUValue {
    pub log_value: f64,
    pub rel_error: f64,
}

/// `log(1 + e^u)` without overflow.
pub(crate) fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + (-u).exp().ln_1p()
    } else {
        u.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^-u)`.
pub(crate) fn logistic(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `log Γ(x)` for `x > 0`, via the Lanczos approximation in `statrs`
/// (about 15 significant digits).
pub fn log_gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log Γ(x) needs finite x > 0, got {x}")));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Log of the integrand of the U integral after `x = e^u`.
fn u_integrand(a: f64, b: f64, z: f64) -> impl Fn(f64) -> f64 {
    let k = a - b + 1.0;
    move |u: f64| a * u - k * softplus(u) - z * u.exp()
}

fn u_anchor(a: f64, z: f64) -> f64 {
    (a / z).ln().clamp(-700.0, 700.0)
}

/// Direct evaluation for `a > 0`.
fn log_u_direct(a: f64, b: f64, z: f64, cfg: &QuadratureConfig) -> Result<(LogIntegral, f64)> {
    let phi = u_integrand(a, b, z);
    let r = quad::integrate_log(
        &phi,
        f64::NEG_INFINITY,
        f64::INFINITY,
        u_anchor(a, z),
        cfg.rel_tol,
        cfg.max_subdivisions,
    )
    .map_err(|e| match e {
        Error::NoConvergence {
            log_estimate,
            rel_error,
            subdivisions,
        } => Error::NoConvergence {
            log_estimate: log_estimate - statrs::function::gamma::ln_gamma(a),
            rel_error,
            subdivisions,
        },
        other => other,
    })?;
    let lg = log_gamma_fn(a)?;
    Ok((r, lg))
}

/// `log U(a, b, z)` with its achieved relative error bound.
pub fn log_kummer_u_with_error(args: UArgs, cfg: &QuadratureConfig) -> Result<LogUValue> {
    let UArgs { a, b, z } = UArgs::new(args.a, args.b, args.z)?;
    if a > 0.0 {
        let (r, lg) = log_u_direct(a, b, z, cfg)?;
        Ok(LogUValue {
            log_value: r.log_value - lg,
            rel_error: r.rel_error,
        })
    } else {
        let shifted = UArgs::new(1.0 + a - b, 2.0 - b, z)?;
        let inner = log_kummer_u_with_error(shifted, cfg)?;
        Ok(LogUValue {
            log_value: (1.0 - b) * z.ln() + inner.log_value,
            rel_error: inner.rel_error,
        })
    }
}

/// `log U(a, b, z)`.
pub fn log_kummer_u(args: UArgs, cfg: &QuadratureConfig) -> Result<f64> {
    log_kummer_u_with_error(args, cfg).map(|v| v.log_value)
}

/// `U(a, b, z)`. Fails with a numeric-domain error if the value is not
/// representable as a positive finite `f64`.
pub fn kummer_u(args: UArgs, cfg: &QuadratureConfig) -> Result<f64> {
    let log_value = log_kummer_u(args, cfg)?;
    let value = log_value.exp();
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericDomain(format!(
            "U({}, {}, {}) = exp({log_value}) is not representable; use log_kummer_u",
            args.a, args.b, args.z
        )))
    }
}

/// `log U(a, b, z_i)` for every point of a stencil, integrated on the single
/// partition adapted to `center`. Valid for `a > 0` only.
pub(crate) fn log_kummer_u_stencil(
    a: f64,
    b: f64,
    center: f64,
    points: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    UArgs::new(a, b, center)?;
    if a <= 0.0 {
        return Err(Error::Domain(format!("stencil evaluation needs a > 0, got {a}")));
    }
    for &z in points {
        UArgs::new(a, b, z)?;
    }
    let (r, lg) = log_u_direct(a, b, center, cfg)?;
    Ok(points
        .iter()
        .map(|&z| quad::integrate_log_fixed(&u_integrand(a, b, z), r.shift, &r.segments) - lg)
        .collect())
}

/// `log(2 sinh y)` for `y >= 0`.
fn log_two_sinh(y: f64) -> f64 {
    if y > 20.0 {
        y
    } else {
        (2.0 * y.sinh()).ln()
    }
}

/// Normalised residual of Kummer's equation `z w'' + (b - z) w' - a w = 0`
/// for `w = U(a, b, ·)` at `z`, using the second-order central differences
///
/// ```text
/// w'  ≈ (w(z+h) - w(z-h)) / 2h
/// w'' ≈ (w(z+h) - 2 w(z) + w(z-h)) / h²
/// ```
///
/// The differences are not formed by subtracting stencil values. Under the
/// integral they become
///
/// ```text
/// w(z+h) - w(z-h)        = -1/Γ(a) ∫ f(x) e^(-zx) 2 sinh(hx) dx
/// w(z+h) - 2w(z) + w(z-h) = 1/Γ(a) ∫ f(x) e^(-zx) 4 sinh²(hx/2) dx
/// ```
///
/// which are integrated on the partition adapted to `w(z)`. This is the same
/// finite-difference formula, so the residual still vanishes like `O(h²)`,
/// but without the cancellation that swamps it for small `h`.
///
/// The residual is divided by `max(|w(z)|, 1)`. Requires `a > 0`.
pub fn kummer_ode_residual(
    a: f64,
    b: f64,
    z: f64,
    h: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("step h must be positive, got {h}")));
    }
    if !(z - h > 0.0) {
        return Err(Error::Domain(format!("stencil [{}, {}] leaves z > 0", z - h, z + h)));
    }
    UArgs::new(a, b, z)?;
    if a <= 0.0 {
        return Err(Error::Domain(format!("ODE residual needs a > 0, got {a}")));
    }
    let (r, lg) = log_u_direct(a, b, z, cfg)?;
    let phi = u_integrand(a, b, z);
    let first = |u: f64| phi(u) + log_two_sinh(h * u.exp());
    let second = |u: f64| phi(u) + 2.0 * log_two_sinh(0.5 * h * u.exp());
    let l0 = quad::integrate_log_fixed(&phi, r.shift, &r.segments);
    let l1 = quad::integrate_log_fixed(&first, r.shift, &r.segments);
    let l2 = quad::integrate_log_fixed(&second, r.shift, &r.segments);
    // Derivatives relative to w(z).
    let d1 = -(l1 - l0).exp() / (2.0 * h);
    let d2 = (l2 - l0).exp() / (h * h);
    let relative = z * d2 + (b - z) * d1 - a;
    let w0 = (l0 - lg).exp();
    Ok(relative * w0.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    /// Brute-force trapezoid rule for U on the original variable, with the
    /// `x^(a-1)` singularity removed by the `x = s^(1/a)` substitution and one
    /// Richardson step on top.
    fn trapezoid_u(a: f64, b: f64, z: f64) -> f64 {
        // x = s^(1/a): x^(a-1) dx = ds / a
        let upper_s = (60.0 / z).powf(a);
        let f = |s: f64| {
            let x = s.powf(1.0 / a);
            (1.0 + x).powf(b - a - 1.0) * (-z * x).exp() / a
        };
        let trapezoid = |n: usize| {
            let h = upper_s / n as f64;
            let mut acc = 0.5 * (f(0.0) + f(upper_s));
            for i in 1..n {
                acc += f(i as f64 * h);
            }
            acc * h
        };
        let coarse = trapezoid(200_000);
        let fine = trapezoid(400_000);
        (4.0 * fine - coarse) / 3.0 / statrs::function::gamma::gamma(a)
    }

    #[test]
    fn closed_form_examples() {
        let u = kummer_u(UArgs::new(1.0, 2.0, 2.0).unwrap(), &cfg()).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
        let u = kummer_u(UArgs::new(2.0, 3.0, 4.0).unwrap(), &cfg()).unwrap();
        assert!((u - 0.0625).abs() < 1e-13);
    }

    #[test]
    fn trapezoid_oracle_at_unit_arguments() {
        let u = kummer_u(UArgs::new(1.0, 1.0, 1.0).unwrap(), &cfg()).unwrap();
        let oracle = trapezoid_u(1.0, 1.0, 1.0);
        assert!(((u - oracle) / oracle).abs() < 1e-9, "{u} vs {oracle}");
        // U(1,1,1) = e E1(1) = 0.596347362323194...
        assert!((u - 0.596_347_362_323_194_1).abs() < 1e-12);
    }

    #[test]
    fn log_values() {
        let l = log_kummer_u(UArgs::new(1.0, 2.0, 2.0).unwrap(), &cfg()).unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-12);
        let l = log_kummer_u(UArgs::new(1.0, 2.0, 1.0).unwrap(), &cfg()).unwrap();
        assert!(l.abs() < 1e-12);
    }

    #[test]
    fn large_parameters_match_log_space_oracle() {
        // Independent oracle: trapezoid in u = log x, accumulated with
        // log-sum-exp on a uniform grid.
        let (a, b, z) = (50.0, 10.0, 200.0);
        let k = a - b + 1.0;
        let g = |u: f64| a * u - k * (1.0 + u.exp()).ln() - z * u.exp();
        let (lo, hi, n) = (-20.0, 2.0, 200_000);
        let h = (hi - lo) / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| g(lo + i as f64 * h)).collect();
        let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = vals.iter().map(|v| (v - m).exp()).sum();
        let oracle = m + (s * h).ln() - statrs::function::gamma::ln_gamma(a);
        let l = log_kummer_u(UArgs::new(a, b, z).unwrap(), &cfg()).unwrap();
        assert!(l.is_finite());
        assert!((l - oracle).abs() < 1e-9, "{l} vs {oracle}");
    }

    #[test]
    fn overflowing_value_is_reported() {
        // U(a, b, z) ~ Γ(a+..)/... huge for tiny z and large a with b > a+1
        let args = UArgs::new(400.0, 1000.0, 1e-3).unwrap();
        let l = log_kummer_u(args, &cfg()).unwrap();
        assert!(l > 709.0);
        assert!(matches!(kummer_u(args, &cfg()), Err(Error::NumericDomain(_))));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(UArgs::new(1.0, 1.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(UArgs::new(-1.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(UArgs::new(f64::NAN, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(log_gamma_fn(0.0), Err(Error::Domain(_))));
        assert!(QuadratureConfig::new(1e-3, 100).is_err());
        assert!(QuadratureConfig::new(1e-8, 8).is_err());
    }

    #[test]
    fn nonpositive_first_parameter_uses_kummer_transformation() {
        // U(0, b, z) = 1
        let l = log_kummer_u(UArgs::new(0.0, -0.5, 2.0).unwrap(), &cfg()).unwrap();
        assert!(l.abs() < 1e-11);
        // U(-1, b, z) = z - b for the polynomial case
        let u = kummer_u(UArgs::new(-1.0, -2.0, 3.0).unwrap(), &cfg()).unwrap();
        assert!((u - 5.0).abs() < 1e-9, "{u}");
    }

    #[test]
    fn log_gamma_values() {
        assert!(log_gamma_fn(1.0).unwrap().abs() < 1e-14);
        assert!((log_gamma_fn(5.0).unwrap() - 24f64.ln()).abs() < 1e-13);
        let half = 0.5 * std::f64::consts::PI.ln();
        assert!((log_gamma_fn(0.5).unwrap() - half).abs() < 1e-13);
    }

    #[test]
    fn ode_residual_small_and_second_order() {
        let r3 = kummer_ode_residual(1.0, 2.0, 3.0, 1e-3, &cfg()).unwrap();
        assert!(r3.abs() <= 1e-5, "{r3}");
        let r2 = kummer_ode_residual(2.0, 0.5, 1.5, 1e-3, &cfg()).unwrap();
        assert!(r2.abs() <= 1e-5, "{r2}");
        for (coarse, fine) in [(1e-2, 1e-3), (1e-3, 1e-4)] {
            let ratio = kummer_ode_residual(1.0, 2.0, 3.0, coarse, &cfg()).unwrap()
                / kummer_ode_residual(1.0, 2.0, 3.0, fine, &cfg()).unwrap();
            assert!((90.0..110.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn ode_residual_matches_subtracted_stencil() {
        // At a coarse step the plain stencil has little cancellation, so
        // independent evaluations of U at z ± h serve as an oracle.
        let (a, b, z, h) = (1.7, 0.4, 2.5, 0.05);
        let w = |x: f64| kummer_u(UArgs::new(a, b, x).unwrap(), &cfg()).unwrap();
        let (wm, w0, wp) = (w(z - h), w(z), w(z + h));
        let d1 = (wp - wm) / (2.0 * h);
        let d2 = (wp - 2.0 * w0 + wm) / (h * h);
        let oracle = (z * d2 + (b - z) * d1 - a * w0) / w0.max(1.0);
        let r = kummer_ode_residual(a, b, z, h, &cfg()).unwrap();
        assert!((r - oracle).abs() <= 1e-6 * oracle.abs().max(1e-3), "{r} vs {oracle}");
    }

    #[test]
    fn ode_stencil_outside_domain() {
        assert!(matches!(
            kummer_ode_residual(1.0, 2.0, 0.01, 0.02, &cfg()),
            Err(Error::Domain(_))
        ));
    }
}
