//! The Kummer transform `L_W(s, t, z) = E[W^s (1 + gamma W)^(-t) e^(-z W)]`.
//!
//! For `W ~ K_alpha(a, b, c)` and `gamma = alpha > 0`,
//!
//! ```text
//! L(s, t, z) = Γ(a+s) U(a+s, a+s-b-t+1, (c+z)/alpha) / (alpha^s Γ(a) U(a, a-b+1, c/alpha))
//! ```
//!
//! and for `alpha = 0` the law is `Gamma(a, c)`, whose transform does not
//! depend on `t`. Everything is evaluated in log-space.

use serde::{Deserialize, Serialize};

use crate::dist::KummerParams;
use crate::error::{Error, Result};
use crate::specfun::{self, log_gamma_fn, QuadratureConfig, UArgs};

/// Arguments `(gamma, s, t, z)` of the transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformQuery {
    pub gamma: f64,
    pub s: f64,
    pub t: f64,
    pub z: f64,
}

impl TransformQuery {
    pub fn new(gamma: f64, s: f64, t: f64, z: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("s must be finite and >= 0, got {s}")));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("t must be finite, got {t}")));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Domain(format!("z must be finite and > 0, got {z}")));
        }
        Ok(TransformQuery { gamma, s, t, z })
    }
}

/// Log of the transform of `p` at `(s, t, z)` with `gamma = p.alpha`.
/// Only needs `a + s > 0`, so negative `s` is allowed internally.
fn log_klt(p: &KummerParams, s: f64, t: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let KummerParams { alpha, a, b, c } = *p;
    let head = log_gamma_fn(a + s)? - log_gamma_fn(a)?;
    if alpha == 0.0 {
        return Ok(head + a * c.ln() - (a + s) * (c + z).ln());
    }
    let top = specfun::log_kummer_u(UArgs::new(a + s, a + s - b - t + 1.0, (c + z) / alpha)?, cfg)?;
    let bottom = specfun::log_kummer_u(UArgs::new(a, a - b + 1.0, c / alpha)?, cfg)?;
    Ok(head + top - bottom - s * alpha.ln())
}

fn check_gamma(p: &KummerParams, q: &TransformQuery) -> Result<()> {
    if q.gamma != p.alpha {
        return Err(Error::Contract(format!(
            "closed form needs gamma = alpha, got gamma = {} for alpha = {}",
            q.gamma, p.alpha
        )));
    }
    Ok(())
}

/// `log L(s, t, z)` in closed form.
pub fn log_klt_closed(p: &KummerParams, q: &TransformQuery, cfg: &QuadratureConfig) -> Result<f64> {
    let p = KummerParams::new(p.alpha, p.a, p.b, p.c)?;
    let q = TransformQuery::new(q.gamma, q.s, q.t, q.z)?;
    check_gamma(&p, &q)?;
    log_klt(&p, q.s, q.t, q.z, cfg)
}

/// `L(s, t, z)` in closed form.
pub fn klt_closed(p: &KummerParams, q: &TransformQuery, cfg: &QuadratureConfig) -> Result<f64> {
    let l = log_klt_closed(p, q, cfg)?;
    let v = l.exp();
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericDomain(format!("transform value exp({l}) is not representable")))
    }
}

/// Monte Carlo estimate of the transform and its standard error.
pub fn klt_mc(samples: &[f64], q: &TransformQuery) -> Result<(f64, f64)> {
    let q = TransformQuery::new(q.gamma, q.s, q.t, q.z)?;
    if samples.is_empty() {
        return Err(Error::Contract("klt_mc needs at least one sample".into()));
    }
    let n = samples.len() as f64;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for &w in samples {
        let v = (q.s * w.ln() - q.t * (q.gamma * w).ln_1p() - q.z * w).exp();
        sum += v;
        sum_sq += v * v;
    }
    let mean = sum / n;
    let var = if samples.len() > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok((mean, (var / n).sqrt()))
}

fn log_m(p: &KummerParams, s: f64, t: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    Ok(log_klt(p, s + 1.0, t, z, cfg)? + log_klt(p, s, t + 1.0, z, cfg)?
        - log_klt(p, s, t, z, cfg)?
        - log_klt(p, s + 1.0, t + 1.0, z, cfg)?)
}

/// The cross-ratio `L(s+1,t) L(s,t+1) / (L(s,t) L(s+1,t+1))` for `alpha > 0`.
pub fn m_function(p: &KummerParams, s: f64, t: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let p = KummerParams::new(p.alpha, p.a, p.b, p.c)?;
    if p.alpha == 0.0 {
        return Err(Error::Contract("M-function needs alpha > 0".into()));
    }
    let q = TransformQuery::new(p.alpha, s, t, z)?;
    Ok(log_m(&p, q.s, q.t, q.z, cfg)?.exp())
}

/// The parameters `(alpha, beta, a, b, c)` of a detailed-balance pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceQuadruple {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BalanceQuadruple {
    pub fn new(alpha: f64, beta: f64, a: f64, b: f64, c: f64) -> Result<Self> {
        let q = BalanceQuadruple { alpha, beta, a, b, c };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        crate::maps::MapSpec::psi(self.alpha, self.beta)?;
        for (name, v) in [("a", self.a), ("b", self.b), ("c", self.c)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `K_alpha(a, b, c)`.
    pub fn x_law(&self) -> KummerParams {
        KummerParams { alpha: self.alpha, a: self.a, b: self.b, c: self.c }
    }

    /// `K_beta(b, a, c)`.
    pub fn y_law(&self) -> KummerParams {
        KummerParams { alpha: self.beta, a: self.b, b: self.a, c: self.c }
    }

    /// `K_alpha(b, a, c)`.
    pub fn u_law(&self) -> KummerParams {
        KummerParams { alpha: self.alpha, a: self.b, b: self.a, c: self.c }
    }

    /// `K_beta(a, b, c)`.
    pub fn v_law(&self) -> KummerParams {
        KummerParams { alpha: self.beta, a: self.a, b: self.b, c: self.c }
    }

    pub fn laws(&self) -> BalanceLaws {
        BalanceLaws {
            x: self.x_law(),
            y: self.y_law(),
            u: self.u_law(),
            v: self.v_law(),
        }
    }
}

/// The four laws entering the identities. Normally built from a
/// [`BalanceQuadruple`]; may be edited to probe perturbed configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceLaws {
    pub x: KummerParams,
    pub y: KummerParams,
    pub u: KummerParams,
    pub v: KummerParams,
}

impl BalanceLaws {
    /// Replaces the `U` law `K_alpha(b, a, c)` by `K_alpha(b + delta, a, c)`.
    pub fn perturb_u(mut self, delta: f64) -> Result<Self> {
        self.u = KummerParams::new(self.u.alpha, self.u.a + delta, self.u.b, self.u.c)?;
        Ok(self)
    }
}

/// Relative residuals of the transform identities. `uiden` is only defined
/// when both scales are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityResiduals {
    pub kleq: f64,
    pub uiden: Option<f64>,
    pub mm: f64,
    pub fourm: f64,
    pub ratio: f64,
    pub id1: f64,
    pub id2: f64,
}

impl IdentityResiduals {
    /// Largest residual among the identities evaluated exactly (all but `id2`).
    pub fn max_exact(&self) -> f64 {
        [self.kleq, self.uiden.unwrap_or(0.0), self.mm, self.fourm, self.ratio, self.id1]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// `|e^l - e^r| / max(e^l, e^r)` without leaving log-space.
fn rel_from_logs(l: f64, r: f64) -> f64 {
    -(-(l - r).abs()).exp_m1()
}

fn rel(l: f64, r: f64) -> f64 {
    (l - r).abs() / l.abs().max(r.abs()).max(1e-300)
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        m
    } else {
        m + ((a - m).exp() + (b - m).exp()).ln()
    }
}

fn id1_residual(p: &KummerParams, s: f64, t: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let lhs = if p.alpha == 0.0 {
        log_klt(p, s, t, z, cfg)?
    } else {
        log_sum_exp(log_klt(p, s, t, z, cfg)?, p.alpha.ln() + log_klt(p, s + 1.0, t, z, cfg)?)
    };
    Ok(rel_from_logs(lhs, log_klt(p, s, t - 1.0, z, cfg)?))
}

/// Central difference of `z ↦ L(s, t, z)` against `-L(s+1, t, z)`, with the
/// quadrature partition frozen across the stencil.
fn id2_residual(p: &KummerParams, s: f64, t: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let KummerParams { alpha, a, b, c } = *p;
    let h = 1e-4 * z;
    let (lo, hi) = if alpha == 0.0 {
        let base = (c + z).ln();
        (
            -(a + s) * ((c + z - h).ln() - base),
            -(a + s) * ((c + z + h).ln() - base),
        )
    } else {
        let (a1, b1) = (a + s, a + s - b - t + 1.0);
        let pts = [(c + z - h) / alpha, (c + z) / alpha, (c + z + h) / alpha];
        let logs = specfun::log_kummer_u_stencil(a1, b1, pts[1], &pts, cfg)?;
        (logs[0] - logs[1], logs[2] - logs[1])
    };
    let fd = (hi.exp() - lo.exp()) / (2.0 * h);
    let target = -(log_klt(p, s + 1.0, t, z, cfg)? - log_klt(p, s, t, z, cfg)?).exp();
    Ok(rel(fd, target))
}

/// Residuals of every transform identity for the laws of `q` at `(s, t, z)`.
pub fn identity_residuals(
    q: &BalanceQuadruple,
    s: f64,
    t: f64,
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityResiduals> {
    q.validate()?;
    identity_residuals_for(&q.laws(), s, t, z, cfg)
}

/// As [`identity_residuals`] but for arbitrary (possibly perturbed) laws.
/// The `x`, `u` laws carry the first scale and `y`, `v` the second.
pub fn identity_residuals_for(
    laws: &BalanceLaws,
    s: f64,
    t: f64,
    z: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityResiduals> {
    TransformQuery::new(0.0, s, t, z)?;
    let BalanceLaws { x, y, u, v } = *laws;
    for p in [x, y, u, v] {
        KummerParams::new(p.alpha, p.a, p.b, p.c)?;
    }
    let (alpha, beta) = (x.alpha, y.alpha);

    let lx = log_klt(&x, s, t, z, cfg)?;
    let ly = log_klt(&y, t, s, z, cfg)?;
    let lu = log_klt(&u, t, s, z, cfg)?;
    let lv = log_klt(&v, s, t, z, cfg)?;
    let kleq = rel_from_logs(lx + ly, lu + lv);

    let uiden = if alpha > 0.0 && beta > 0.0 {
        let lu_ = |a: f64, b: f64, w: f64| specfun::log_kummer_u(UArgs::new(a, b, w)?, cfg);
        let lhs = lu_(x.a + s, x.a + s - x.b - t + 1.0, (x.c + z) / alpha)?
            + lu_(y.a + t, y.a + t - y.b - s + 1.0, (y.c + z) / beta)?
            - s * alpha.ln()
            - t * beta.ln()
            - lu_(x.a, x.a - x.b + 1.0, x.c / alpha)?
            - lu_(y.a, y.a - y.b + 1.0, y.c / beta)?;
        let rhs = lu_(u.a + t, u.a + t - u.b - s + 1.0, (u.c + z) / alpha)?
            + lu_(v.a + s, v.a + s - v.b - t + 1.0, (v.c + z) / beta)?
            - t * alpha.ln()
            - s * beta.ln()
            - lu_(u.a, u.a - u.b + 1.0, u.c / alpha)?
            - lu_(v.a, v.a - v.b + 1.0, v.c / beta)?;
        Some(rel_from_logs(lhs, rhs))
    } else {
        None
    };

    let mx = log_m(&x, s, t, z, cfg)?;
    let my = log_m(&y, t, s, z, cfg)?;
    let mu = log_m(&u, t, s, z, cfg)?;
    let mv = log_m(&v, s, t, z, cfg)?;
    let mm = rel_from_logs(mx + my, mu + mv);
    let fourm = rel(
        beta * mx.exp() + alpha * my.exp(),
        beta * mu.exp() + alpha * mv.exp(),
    );

    // L_X(s,t)/L_U(t,s) and L_V(s,t)/L_Y(t,s) against the alpha-free closed form.
    let (a, b, c) = (x.a, x.b, x.c);
    let closed = (a - b) * c.ln() + log_gamma_fn(b)? - log_gamma_fn(a)? + log_gamma_fn(a + s)?
        - log_gamma_fn(b + t)?
        + (b - a + t - s) * (c + z).ln();
    let ratio = rel_from_logs(lx - lu, closed).max(rel_from_logs(lv - ly, closed));

    let mut id1: f64 = 0.0;
    let mut id2: f64 = 0.0;
    for p in [x, y, u, v] {
        id1 = id1.max(id1_residual(&p, s, t, z, cfg)?);
        id2 = id2.max(id2_residual(&p, s, t, z, cfg)?);
    }

    Ok(IdentityResiduals { kleq, uiden, mm, fourm, ratio, id1, id2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{sample_gamma, sample_kummer, RngState};

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn kp(alpha: f64, a: f64, b: f64, c: f64) -> KummerParams {
        KummerParams::new(alpha, a, b, c).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let q = TransformQuery::new(1.0, 0.0, 0.0, 2.0).unwrap();
        let v = klt_closed(&kp(1.0, 1.0, 0.0, 1.0), &q, &cfg()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10);

        let q = TransformQuery::new(1.0, 0.0, 0.0, 1e-8).unwrap();
        let v = klt_closed(&kp(1.0, 2.0, 1.0, 1.0), &q, &cfg()).unwrap();
        assert!((v - 1.0).abs() < 1e-7);

        let q = TransformQuery::new(2.0, 0.0, 0.0, 1.0).unwrap();
        let err = klt_closed(&kp(1.0, 2.0, 1.0, 1.0), &q, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));

        // Gamma route: c^a / (c+z)^a at s = 0.
        let q = TransformQuery::new(0.0, 0.0, 5.0, 1.0).unwrap();
        let v = klt_closed(&kp(0.0, 2.0, 3.0, 1.0), &q, &cfg()).unwrap();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn monte_carlo_examples() {
        let (est, _) = klt_mc(&[1.0; 10], &TransformQuery::new(1.0, 1.0, 1.0, 1e-12).unwrap()).unwrap();
        assert!((est - 0.5).abs() < 1e-11);

        let g = sample_gamma(1.0, 1.0, &mut RngState::new(1, 0).rng(), 100_000).unwrap();
        let (est, se) = klt_mc(&g, &TransformQuery::new(0.0, 0.0, 0.0, 1.0).unwrap()).unwrap();
        assert!((est - 0.5).abs() < 3.0 * se);
        assert!(klt_mc(&[], &TransformQuery::new(0.0, 0.0, 0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn closed_form_matches_monte_carlo() {
        let p = kp(1.0, 2.0, 1.0, 1.0);
        let xs = sample_kummer(&p, &mut RngState::new(2, 0).rng(), 1_000_000).unwrap();
        let q = TransformQuery::new(1.0, 1.0, 0.5, 0.7).unwrap();
        let (est, se) = klt_mc(&xs, &q).unwrap();
        let exact = klt_closed(&p, &q, &cfg()).unwrap();
        assert!((est - exact).abs() < 4.0 * se, "{est} ± {se} vs {exact}");
    }

    #[test]
    fn m_function_matches_monte_carlo() {
        let p = kp(1.0, 1.0, 2.0, 1.0);
        let xs = sample_kummer(&p, &mut RngState::new(3, 0).rng(), 1_000_000).unwrap();
        let est = |s: f64, t: f64| klt_mc(&xs, &TransformQuery::new(1.0, s, t, 1.0).unwrap()).unwrap();
        let (l10, e10) = est(1.0, 0.0);
        let (l01, e01) = est(0.0, 1.0);
        let (l00, e00) = est(0.0, 0.0);
        let (l11, e11) = est(1.0, 1.0);
        let m_mc = l10 * l01 / (l00 * l11);
        let rel_se = ((e10 / l10).powi(2) + (e01 / l01).powi(2) + (e00 / l00).powi(2) + (e11 / l11).powi(2)).sqrt();
        let m = m_function(&p, 0.0, 0.0, 1.0, &cfg()).unwrap();
        assert!(m > 0.0 && m.is_finite());
        assert!((m - m_mc).abs() < 5.0 * rel_se * m_mc, "{m} vs {m_mc}");
        assert!(m_function(&kp(0.0, 1.0, 2.0, 1.0), 0.0, 0.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn identities_hold_for_balanced_laws() {
        let q = BalanceQuadruple::new(1.0, 2.0, 1.5, 0.7, 1.0).unwrap();
        let r = identity_residuals(&q, 0.3, 0.9, 0.5, &cfg()).unwrap();
        assert!(r.max_exact() <= 1e-8, "{r:?}");
        assert!(r.uiden.is_some());
        assert!(r.id2 <= 1e-6, "{r:?}");

        let r = identity_residuals(&q, 0.0, 0.0, 2.0, &cfg()).unwrap();
        assert!(r.max_exact() <= 1e-8, "{r:?}");

        let q = BalanceQuadruple::new(1.0, 0.0, 1.5, 0.7, 1.0).unwrap();
        let r = identity_residuals(&q, 0.3, 0.9, 0.5, &cfg()).unwrap();
        assert!(r.uiden.is_none());
        assert!(r.max_exact() <= 1e-8 && r.id2 <= 1e-6, "{r:?}");
    }

    #[test]
    fn perturbed_u_law_breaks_kleq() {
        let q = BalanceQuadruple::new(1.0, 2.0, 1.5, 0.7, 1.0).unwrap();
        let laws = q.laws().perturb_u(0.3).unwrap();
        let r = identity_residuals_for(&laws, 0.3, 0.9, 0.5, &cfg()).unwrap();
        assert!(r.kleq > 1e-3, "{r:?}");
    }

    #[test]
    fn id2_is_second_order() {
        // Halving the step must cut the stencil error by about four; checked
        // through a direct stencil at two steps.
        let p = kp(1.0, 1.5, 0.7, 1.0);
        let (s, t, z) = (0.3, 0.9, 0.5);
        let target = -(log_klt(&p, s + 1.0, t, z, &cfg()).unwrap() - log_klt(&p, s, t, z, &cfg()).unwrap()).exp();
        let err = |h: f64| {
            let pts = [(p.c + z - h) / p.alpha, (p.c + z) / p.alpha, (p.c + z + h) / p.alpha];
            let l = specfun::log_kummer_u_stencil(p.a + s, p.a + s - p.b - t + 1.0, pts[1], &pts, &cfg()).unwrap();
            (((l[2] - l[1]).exp() - (l[0] - l[1]).exp()) / (2.0 * h) - target).abs()
        };
        let ratio = err(0.02) / err(0.01);
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn transform_is_decreasing_and_log_convex_in_z() {
        let p = kp(2.0, 1.5, 0.7, 1.0);
        let l: Vec<f64> = (1..40)
            .map(|i| log_klt_closed(&p, &TransformQuery::new(2.0, 0.5, 0.3, 0.1 * i as f64).unwrap(), &cfg()).unwrap())
            .collect();
        for w in l.windows(3) {
            assert!(w[1] < w[0]);
            assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
        }
    }
}
