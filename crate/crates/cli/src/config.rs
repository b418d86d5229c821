//! Configuration files of the `verify` suites. Unknown fields are rejected
//! so that typos surface as usage errors instead of silent defaults.

use serde::{Deserialize, Serialize};

use kummerlab::harness::{BalanceTest, LimitSpec, Marginal};
use kummerlab::ktransform::BalanceQuadruple;
use kummerlab::lattice::LatticeConfig;

fn default_n() -> usize {
    100_000
}

fn default_tests() -> Vec<BalanceTest> {
    vec![BalanceTest::KsU, BalanceTest::KsV, BalanceTest::IndepChi2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceConfig {
    pub quadruple: BalanceQuadruple,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tests")]
    pub tests: Vec<BalanceTest>,
    /// Draw `X ~ K_alpha(a, b + perturbation, c)` instead of `K_alpha(a, b, c)`.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_override: Option<Marginal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_override: Option<Marginal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorollaryConfig {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_kinds() -> Vec<LimitSpec> {
    ["lukacs", "kummer_gamma", "matsumoto_yor", "kdv"]
        .iter()
        .map(|k| LimitSpec::default_for(k).expect("built-in kind"))
        .collect()
}

fn default_n_list() -> Vec<u64> {
    vec![10, 100, 1000]
}

fn default_sample_n() -> usize {
    50_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    #[serde(default = "default_kinds")]
    pub kinds: Vec<LimitSpec>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<u64>,
    #[serde(default = "default_sample_n")]
    pub sample_n: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformPoint {
    pub s: f64,
    pub t: f64,
    pub z: f64,
}

fn default_points() -> Vec<TransformPoint> {
    vec![
        TransformPoint { s: 0.0, t: 0.0, z: 1.0 },
        TransformPoint { s: 0.3, t: 0.9, z: 0.5 },
        TransformPoint { s: 1.5, t: 2.0, z: 2.0 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesConfig {
    pub quadruple: BalanceQuadruple,
    #[serde(default = "default_points")]
    pub points: Vec<TransformPoint>,
    /// Replace the `U` law `K_alpha(b, a, c)` by `K_alpha(b + perturb_u, a, c)`.
    #[serde(default)]
    pub perturb_u: f64,
}

pub type LatticeSuiteConfig = LatticeConfig;
