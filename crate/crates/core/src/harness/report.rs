use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of one statistical or identity check. A check passes exactly
/// when `statistic <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub n: u64,
    pub pass: bool,
    pub seed: u64,
    #[serde(default)]
    pub details: BTreeMap<String, Value>,
}

impl StatReport {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64, n: usize) -> Self {
        StatReport {
            name: name.into(),
            statistic,
            threshold,
            n: n as u64,
            pass: statistic <= threshold,
            seed: 0,
            details: BTreeMap::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }
}

/// True when every report passes.
pub fn all_pass(reports: &[StatReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_threshold() {
        assert!(StatReport::new("a", 0.5, 0.5, 10).pass);
        assert!(!StatReport::new("a", 0.6, 0.5, 10).pass);
        assert!(!StatReport::new("a", f64::NAN, 0.5, 10).pass);
    }

    #[test]
    fn json_round_trip() {
        let r = StatReport::new("ks_u", 0.1 + 0.2, 1.63 / 300f64.sqrt(), 90_000)
            .with_seed(u64::MAX)
            .detail("law", "kummer:1,0.7,1.5,1")
            .detail("values", vec![1e-300, 0.30000000000000004, 123456.789]);
        let text = serde_json::to_string(&r).unwrap();
        let back: StatReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
