use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::report::StatReport;
use super::stats::{ks_statistic, KS_LIMIT_SD};
use crate::dist::{Law, LawSampler, RngState};
use crate::error::{Error, Result};
use crate::maps::{phi_family, PhiIndex, PhiKind, PlanePoint};
use crate::specfun::QuadratureConfig;

/// Distance to the limit laws required at the largest `n`.
pub const LIMIT_TOLERANCE: f64 = 0.02;

/// A limit experiment with its base parameters. For each finite `n`, the
/// pair `(X, Y)` is drawn from Kummer laws that converge to the classical
/// input laws, pushed through `phi_n`, and the outputs are compared with the
/// classical output laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitSpec {
    /// `X ~ K_n(a+b, b, c)`, `Y ~ Gamma(b, c)`; limit `Gamma(a,c) ⊗ Gamma(b,c)`
    /// mapped to `BetaII(b, a) ⊗ Gamma(a+b, c)`.
    Lukacs { a: f64, b: f64, c: f64 },
    /// `X ~ K_1(a, a+b, c)`, `Y ~ K_n(a+b, a, c)`; limit input
    /// `Y → Gamma(b, c)`, outputs `K_1(a+b, a, c) ⊗ BetaII(a, b)`.
    KummerGamma { a: f64, b: f64, c: f64 },
    /// `X ~ K_n(nc, nc+a, b)`, `Y ~ K_{n²}(nc+a, nc, b)`; limit
    /// `GIG(-a, b, c) ⊗ Gamma(a, b)` mapped to `GIG(a, b, c) ⊗ InvGamma(a, c)`.
    MatsumotoYor { a: f64, b: f64, c: f64 },
    /// `X ~ K_{n/alpha}(nb+a, nb, c)`, `Y ~ K_{n/beta}(nb, nb+a, c)`; limit
    /// `GIG(a, c, alpha b) ⊗ GIG(-a, c, beta b)` mapped to
    /// `GIG(-a, c, alpha b) ⊗ GIG(a, c, beta b)`.
    Kdv { a: f64, b: f64, c: f64, alpha: f64, beta: f64 },
}

/// The four laws of one finite-`n` instance, with their limits.
struct Instance {
    x: Law,
    y: Law,
}

impl LimitSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LimitSpec::Lukacs { .. } => "lukacs",
            LimitSpec::KummerGamma { .. } => "kummer_gamma",
            LimitSpec::MatsumotoYor { .. } => "matsumoto_yor",
            LimitSpec::Kdv { .. } => "kdv",
        }
    }

    /// Default parameters used by the acceptance suite.
    pub fn default_for(kind: &str) -> Result<LimitSpec> {
        match kind {
            "lukacs" => Ok(LimitSpec::Lukacs { a: 1.5, b: 2.0, c: 1.0 }),
            "kummer_gamma" => Ok(LimitSpec::KummerGamma { a: 1.5, b: 2.0, c: 1.0 }),
            "matsumoto_yor" => Ok(LimitSpec::MatsumotoYor { a: 1.5, b: 1.0, c: 1.0 }),
            "kdv" => Ok(LimitSpec::Kdv { a: 1.5, b: 1.0, c: 1.0, alpha: 1.0, beta: 2.0 }),
            other => Err(Error::Domain(format!("unknown limit kind '{other}'"))),
        }
    }

    pub fn phi_kind(&self) -> PhiKind {
        match *self {
            LimitSpec::Lukacs { .. } => PhiKind::Lukacs,
            LimitSpec::KummerGamma { .. } => PhiKind::KummerGamma,
            LimitSpec::MatsumotoYor { .. } => PhiKind::MatsumotoYor,
            LimitSpec::Kdv { alpha, beta, .. } => PhiKind::Kdv { alpha, beta },
        }
    }

    fn validate(&self) -> Result<()> {
        let vals: Vec<(&str, f64)> = match *self {
            LimitSpec::Lukacs { a, b, c }
            | LimitSpec::KummerGamma { a, b, c }
            | LimitSpec::MatsumotoYor { a, b, c } => vec![("a", a), ("b", b), ("c", c)],
            LimitSpec::Kdv { a, b, c, alpha, beta } => {
                vec![("a", a), ("b", b), ("c", c), ("alpha", alpha), ("beta", beta)]
            }
        };
        for (name, v) in vals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn instance(&self, n: u64) -> Result<Instance> {
        let nf = n as f64;
        Ok(match *self {
            LimitSpec::Lukacs { a, b, c } => Instance {
                x: Law::kummer(nf, a + b, b, c)?,
                y: Law::gamma(b, c)?,
            },
            LimitSpec::KummerGamma { a, b, c } => Instance {
                x: Law::kummer(1.0, a, a + b, c)?,
                y: Law::kummer(nf, a + b, a, c)?,
            },
            LimitSpec::MatsumotoYor { a, b, c } => Instance {
                x: Law::kummer(nf, nf * c, nf * c + a, b)?,
                y: Law::kummer(nf * nf, nf * c + a, nf * c, b)?,
            },
            LimitSpec::Kdv { a, b, c, alpha, beta } => Instance {
                x: Law::kummer(nf / alpha, nf * b + a, nf * b, c)?,
                y: Law::kummer(nf / beta, nf * b, nf * b + a, c)?,
            },
        })
    }

    /// Limits of the input laws that are not already exact at finite `n`.
    fn input_limits(&self) -> Result<(Option<Law>, Option<Law>)> {
        Ok(match *self {
            LimitSpec::Lukacs { a, c, .. } => (Some(Law::gamma(a, c)?), None),
            LimitSpec::KummerGamma { b, c, .. } => (None, Some(Law::gamma(b, c)?)),
            LimitSpec::MatsumotoYor { a, b, c } => (Some(Law::gig(-a, b, c)?), Some(Law::gamma(a, b)?)),
            LimitSpec::Kdv { a, b, c, alpha, beta } => (
                Some(Law::gig(a, c, alpha * b)?),
                Some(Law::gig(-a, c, beta * b)?),
            ),
        })
    }

    /// Laws of the two outputs of the limiting map.
    fn output_limits(&self) -> Result<(Law, Law)> {
        Ok(match *self {
            LimitSpec::Lukacs { a, b, c } => (Law::beta_ii(b, a)?, Law::gamma(a + b, c)?),
            LimitSpec::KummerGamma { a, b, c } => (Law::kummer(1.0, a + b, a, c)?, Law::beta_ii(a, b)?),
            LimitSpec::MatsumotoYor { a, b, c } => (Law::gig(a, b, c)?, Law::inv_gamma(a, c)?),
            LimitSpec::Kdv { a, b, c, alpha, beta } => {
                (Law::gig(-a, c, alpha * b)?, Law::gig(a, c, beta * b)?)
            }
        })
    }
}

/// KS distances of one finite-`n` run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitStep {
    pub n: u64,
    pub ks_x: Option<f64>,
    pub ks_y: Option<f64>,
    pub ks_u: f64,
    pub ks_v: f64,
}

impl LimitStep {
    /// Largest distance to a limit law among inputs and outputs.
    pub fn distance(&self) -> f64 {
        [self.ks_x.unwrap_or(0.0), self.ks_y.unwrap_or(0.0), self.ks_u, self.ks_v]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Runs one finite-`n` instance. `X` uses stream 0 and `Y` stream 1 of the
/// same seed for every `n`.
pub fn limit_step(spec: &LimitSpec, n: u64, sample_n: usize, seed: u64, cfg: &QuadratureConfig) -> Result<LimitStep> {
    spec.validate()?;
    let inst = spec.instance(n)?;
    let xs = LawSampler::new(&inst.x, cfg)?.sample_n(&mut RngState::new(seed, 0).rng(), sample_n)?;
    let ys = LawSampler::new(&inst.y, cfg)?.sample_n(&mut RngState::new(seed, 1).rng(), sample_n)?;
    let (x_lim, y_lim) = spec.input_limits()?;
    let (u_lim, v_lim) = spec.output_limits()?;
    let kind = spec.phi_kind();
    let mut us = Vec::with_capacity(sample_n);
    let mut vs = Vec::with_capacity(sample_n);
    for (&x, &y) in xs.iter().zip(&ys) {
        let q = phi_family(kind, PhiIndex::Finite(n), PlanePoint { x, y })?;
        us.push(q.x);
        vs.push(q.y);
    }
    Ok(LimitStep {
        n,
        ks_x: x_lim.map(|l| ks_statistic(&xs, &l, cfg)).transpose()?,
        ks_y: y_lim.map(|l| ks_statistic(&ys, &l, cfg)).transpose()?,
        ks_u: ks_statistic(&us, &u_lim, cfg)?,
        ks_v: ks_statistic(&vs, &v_lim, cfg)?,
    })
}

/// Runs the limit experiment over an increasing list of `n` and returns two
/// reports: `<kind>:limit` (distance at the largest `n` against 0.02) and
/// `<kind>:monotone` (largest increase of the distance between consecutive
/// `n`, against two standard deviations of the KS statistic).
pub fn verify_limit(
    spec: &LimitSpec,
    n_list: &[u64],
    sample_n: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<StatReport>> {
    if n_list.is_empty() || n_list.iter().any(|&n| n < 10) {
        return Err(Error::Domain("n_list must be nonempty with every n >= 10".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("n_list must be strictly increasing".into()));
    }
    if sample_n < 100 {
        return Err(Error::Domain(format!("sample size must be >= 100, got {sample_n}")));
    }
    use rayon::prelude::*;
    let steps: Vec<LimitStep> = n_list
        .par_iter()
        .map(|&n| limit_step(spec, n, sample_n, seed, cfg))
        .collect::<Result<_>>()?;
    let dist: Vec<f64> = steps.iter().map(LimitStep::distance).collect();
    let rise = dist.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let rise = if rise.is_finite() { rise } else { 0.0 };
    let per_n = serde_json::to_value(&steps).map_err(|e| Error::NumericDomain(e.to_string()))?;
    let name = spec.name();
    let params = serde_json::to_value(spec).map_err(|e| Error::NumericDomain(e.to_string()))?;
    let limit = StatReport::new(format!("{name}:limit"), *dist.last().unwrap(), LIMIT_TOLERANCE, sample_n)
        .with_seed(seed)
        .detail("n", *n_list.last().unwrap())
        .detail("steps", per_n.clone())
        .detail("params", params.clone());
    let monotone = StatReport::new(
        format!("{name}:monotone"),
        rise,
        2.0 * KS_LIMIT_SD / (sample_n as f64).sqrt(),
        sample_n,
    )
    .with_seed(seed)
    .detail("distances", Value::from(dist))
    .detail("steps", per_n)
    .detail("params", params);
    Ok(vec![limit, monotone])
}
