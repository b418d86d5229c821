//! Statistical verification: goodness-of-fit and independence tests, and the
//! balance, one-scale and limit experiments built on them.

mod balance;
mod limits;
mod report;
mod stats;

pub use balance::{
    corollary_pairs, verify_balance, verify_corollary_sk, BalanceTest, ExperimentPlan, Marginal,
    DCOV_SUBSAMPLE,
};
pub use limits::{limit_step, verify_limit, LimitSpec, LimitStep, LIMIT_TOLERANCE};
pub use report::{all_pass, StatReport};
pub use stats::{
    independence_test, ks_one_sample, ks_statistic, IndependenceMethod, DCOV_MAX_N,
    KS_CRITICAL_1PCT, KS_LIMIT_SD,
};
