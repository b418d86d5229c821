use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::report::StatReport;
use super::stats::{independence_test, ks_one_sample, IndependenceMethod};
use crate::dist::{Law, LawSampler, RngState};
use crate::error::{Error, Result};
use crate::ktransform::BalanceQuadruple;
use crate::maps::{MapSpec, PlanePoint};
use crate::specfun::QuadratureConfig;

/// Pairs passed to the distance-covariance test are capped at this many.
pub const DCOV_SUBSAMPLE: usize = 20_000;

/// A source of iid positive draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Marginal {
    Law { law: Law },
    LogNormal { mu: f64, sigma: f64 },
}

impl Marginal {
    pub fn sample(&self, rng_state: RngState, n: usize, cfg: &QuadratureConfig) -> Result<Vec<f64>> {
        let mut rng = rng_state.rng();
        match *self {
            Marginal::Law { law } => LawSampler::new(&law, cfg)?.sample_n(&mut rng, n),
            Marginal::LogNormal { mu, sigma } => {
                let d = LogNormal::new(mu, sigma)
                    .map_err(|e| Error::Domain(format!("lognormal({mu}, {sigma}): {e}")))?;
                Ok((0..n).map(|_| d.sample(&mut rng)).collect())
            }
        }
    }
}

impl From<Law> for Marginal {
    fn from(law: Law) -> Self {
        Marginal::Law { law }
    }
}

/// The tests a balance experiment can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceTest {
    KsU,
    KsV,
    IndepChi2,
    IndepDcov,
}

/// A detailed-balance experiment: draw `X`, `Y`, map through `psi` and test
/// the marginals and independence of `(U, V)`. The `x` and `y` overrides
/// replace the sampled laws (not the tested ones) for negative controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub quadruple: BalanceQuadruple,
    pub n: usize,
    pub seed: u64,
    pub tests: Vec<BalanceTest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_override: Option<Marginal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_override: Option<Marginal>,
}

impl ExperimentPlan {
    pub fn new(quadruple: BalanceQuadruple, n: usize, seed: u64) -> Self {
        ExperimentPlan {
            quadruple,
            n,
            seed,
            tests: vec![BalanceTest::KsU, BalanceTest::KsV, BalanceTest::IndepChi2],
            x_override: None,
            y_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.quadruple.validate()?;
        if self.n < 1000 {
            return Err(Error::Domain(format!("experiment needs n >= 1000, got {}", self.n)));
        }
        if self.tests.is_empty() {
            return Err(Error::Domain("experiment lists no tests".into()));
        }
        Ok(())
    }

    /// Perturbed control: `X ~ K_alpha(a, b + delta, c)`, so the shared
    /// parameter `b` no longer matches the `U` law `K_alpha(b, a, c)`.
    pub fn with_perturbation(mut self, delta: f64) -> Result<Self> {
        if delta != 0.0 {
            let x = self.quadruple.x_law();
            self.x_override = Some(Law::kummer(x.alpha, x.a, x.b + delta, x.c)?.into());
        }
        Ok(self)
    }
}

fn map_pairs(map: &MapSpec, xs: &[f64], ys: &[f64]) -> Result<Vec<(f64, f64)>> {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| map.apply(PlanePoint { x, y }).map(|p| (p.x, p.y)))
        .collect()
}

fn run_tests(
    tests: &[BalanceTest],
    pairs: &[(f64, f64)],
    u_law: Law,
    v_law: Law,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<StatReport>> {
    let mut out = Vec::new();
    for test in tests {
        let report = match test {
            BalanceTest::KsU => {
                let us: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                ks_one_sample(&us, &u_law, cfg)?.renamed("ks_u")
            }
            BalanceTest::KsV => {
                let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                ks_one_sample(&vs, &v_law, cfg)?.renamed("ks_v")
            }
            BalanceTest::IndepChi2 => independence_test(pairs, IndependenceMethod::Chi2Grid)?,
            BalanceTest::IndepDcov => {
                let m = pairs.len().min(DCOV_SUBSAMPLE);
                independence_test(&pairs[..m], IndependenceMethod::dcov(seed))?
            }
        };
        out.push(report.with_seed(seed));
    }
    Ok(out)
}

/// Samples `X` (stream 0) and `Y` (stream 1), maps them through `psi` and
/// runs the planned tests against `U ~ K_alpha(b,a,c)`, `V ~ K_beta(a,b,c)`.
pub fn verify_balance(plan: &ExperimentPlan, cfg: &QuadratureConfig) -> Result<Vec<StatReport>> {
    plan.validate()?;
    let q = plan.quadruple;
    let x_src = plan.x_override.unwrap_or(Law::Kummer(q.x_law()).into());
    let y_src = plan.y_override.unwrap_or(Law::Kummer(q.y_law()).into());
    let xs = x_src.sample(RngState::new(plan.seed, 0), plan.n, cfg)?;
    let ys = y_src.sample(RngState::new(plan.seed, 1), plan.n, cfg)?;
    let pairs = map_pairs(&MapSpec::psi(q.alpha, q.beta)?, &xs, &ys)?;
    run_tests(&plan.tests, &pairs, Law::Kummer(q.u_law()), Law::Kummer(q.v_law()), plan.seed, cfg)
}

/// Draws `X ~ K_1(a,b,c)` (stream 0) and `Y ~ K_1(b,a,gamma c)` (stream 1)
/// and returns the pairs
/// `(Y (X + gamma (1+Y)) / (1+X+Y),  X (Y + (1+X)/gamma) / (1+X+Y))`.
pub fn corollary_pairs(
    a: f64,
    b: f64,
    c: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<(Vec<f64>, Vec<f64>, Vec<(f64, f64)>)> {
    if !(gamma > 0.0 && gamma.is_finite()) || gamma == 1.0 {
        return Err(Error::Contract(format!("scale factor must be positive and != 1, got {gamma}")));
    }
    let x_law = Law::kummer(1.0, a, b, c)?;
    let y_law = Law::kummer(1.0, b, a, gamma * c)?;
    let xs = Marginal::from(x_law).sample(RngState::new(seed, 0), n, cfg)?;
    let ys = Marginal::from(y_law).sample(RngState::new(seed, 1), n, cfg)?;
    let pairs = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let d = 1.0 + x + y;
            (y * (x + gamma * (1.0 + y)) / d, x * (y + (1.0 + x) / gamma) / d)
        })
        .collect();
    Ok((xs, ys, pairs))
}

/// The one-scale form of the balance property: `(U, V)` from
/// [`corollary_pairs`] should be `K_1(b,a,c) ⊗ K_1(a,b,gamma c)`.
pub fn verify_corollary_sk(
    a: f64,
    b: f64,
    c: f64,
    gamma: f64,
    n: usize,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<Vec<StatReport>> {
    if n < 1000 {
        return Err(Error::Domain(format!("experiment needs n >= 1000, got {n}")));
    }
    let (_, _, pairs) = corollary_pairs(a, b, c, gamma, n, seed, cfg)?;
    run_tests(
        &[BalanceTest::KsU, BalanceTest::KsV, BalanceTest::IndepChi2],
        &pairs,
        Law::kummer(1.0, b, a, c)?,
        Law::kummer(1.0, a, b, gamma * c)?,
        seed,
        cfg,
    )
}
