use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::report::StatReport;
use crate::dist::{Law, RngState};
use crate::error::{Error, Result};
use crate::specfun::QuadratureConfig;

/// Asymptotic 1% critical value of `sqrt(n) D`.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

/// Standard deviation of the limiting Kolmogorov distribution.
pub const KS_LIMIT_SD: f64 = 0.26044;

/// Largest sample accepted by the distance-covariance test.
pub const DCOV_MAX_N: usize = 20_000;

/// Kolmogorov–Smirnov distance between the sample and `law`.
pub fn ks_statistic(samples: &[f64], law: &Law, cfg: &QuadratureConfig) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Contract("KS statistic needs samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::NumericDomain("NaN in KS sample".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let f = law.prepare(cfg)?.cdf_sorted(&xs)?;
    let n = xs.len() as f64;
    Ok(f
        .iter()
        .enumerate()
        .map(|(i, &fi)| (fi - i as f64 / n).max((i + 1) as f64 / n - fi))
        .fold(0.0, f64::max))
}

/// One-sample KS test at the 1% level with threshold `1.63 / sqrt(n)`.
pub fn ks_one_sample(samples: &[f64], law: &Law, cfg: &QuadratureConfig) -> Result<StatReport> {
    if samples.len() < 100 {
        return Err(Error::Contract(format!("KS test needs n >= 100, got {}", samples.len())));
    }
    let d = ks_statistic(samples, law, cfg)?;
    let n = samples.len();
    Ok(StatReport::new("ks", d, KS_CRITICAL_1PCT / (n as f64).sqrt(), n).detail("law", law.to_string()))
}

/// How to test a sample of pairs for independence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum IndependenceMethod {
    /// Pearson chi-square on a `G × G` grid of marginal rank bins,
    /// `G = round(n^(1/3))`.
    Chi2Grid,
    /// Distance covariance with a permutation p-value.
    DcovPerm { permutations: usize, seed: u64 },
}

impl IndependenceMethod {
    pub fn dcov(seed: u64) -> Self {
        IndependenceMethod::DcovPerm { permutations: 200, seed }
    }
}

/// Bin index of each value by rank, `floor(rank · g / n)`.
fn rank_bins(values: &[f64], g: usize) -> Vec<usize> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut bins = vec![0; n];
    for (rank, &i) in idx.iter().enumerate() {
        bins[i] = rank * g / n;
    }
    bins
}

fn chi2_grid(u: &[f64], v: &[f64]) -> Result<StatReport> {
    let n = u.len();
    if n < 1000 {
        return Err(Error::Contract(format!("chi-square grid test needs n >= 1000, got {n}")));
    }
    let g = (n as f64).cbrt().round() as usize;
    let (bu, bv) = (rank_bins(u, g), rank_bins(v, g));
    let mut counts = vec![0u64; g * g];
    for (i, j) in bu.iter().zip(&bv) {
        counts[i * g + j] += 1;
    }
    let mut rows = vec![0u64; g];
    let mut cols = vec![0u64; g];
    for i in 0..g {
        for j in 0..g {
            rows[i] += counts[i * g + j];
            cols[j] += counts[i * g + j];
        }
    }
    let nf = n as f64;
    let mut stat = 0.0;
    for i in 0..g {
        for j in 0..g {
            let e = rows[i] as f64 * cols[j] as f64 / nf;
            let d = counts[i * g + j] as f64 - e;
            stat += d * d / e;
        }
    }
    let df = ((g - 1) * (g - 1)) as f64;
    let crit = ChiSquared::new(df)
        .map_err(|e| Error::NumericDomain(format!("chi-square({df}): {e}")))?
        .inverse_cdf(0.99);
    Ok(StatReport::new("indep_chi2", stat, crit, n)
        .detail("grid", g as u64)
        .detail("df", df))
}

/// Fenwick tree of running sums indexed by rank.
struct Fenwick {
    tree: Vec<[f64; 4]>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick { tree: vec![[0.0; 4]; n + 1] }
    }

    fn add(&mut self, rank: usize, v: [f64; 4]) {
        let mut i = rank + 1;
        while i < self.tree.len() {
            for k in 0..4 {
                self.tree[i][k] += v[k];
            }
            i += i & i.wrapping_neg();
        }
    }

    /// Sums over ranks `< rank`.
    fn prefix(&self, rank: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mut i = rank;
        while i > 0 {
            for k in 0..4 {
                out[k] += self.tree[i][k];
            }
            i -= i & i.wrapping_neg();
        }
        out
    }
}

/// Mean of `|x_i - x_j|` over `j` for every `i`, and the grand mean.
fn row_means(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let total: f64 = x.iter().sum();
    let mut out = vec![0.0; n];
    let mut prefix = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        let xi = x[i];
        let below = xi * k as f64 - prefix;
        let above = (total - prefix - xi) - xi * (n - k - 1) as f64;
        out[i] = (below + above) / n as f64;
        prefix += xi;
    }
    let grand = out.iter().sum::<f64>() / n as f64;
    (out, grand)
}

/// Squared sample distance covariance (V-statistic) of `u` against many
/// candidate `w`, in `O(n log n)` per evaluation.
struct DcovParts {
    /// `u` sorted ascending.
    u_sorted: Vec<f64>,
    /// Position in `u_sorted` of each original index.
    order: Vec<usize>,
    u_row_mean: Vec<f64>,
    u_mean: f64,
}

impl DcovParts {
    fn new(u: &[f64]) -> Self {
        let (u_row_mean, u_mean) = row_means(u);
        let mut order: Vec<usize> = (0..u.len()).collect();
        order.sort_by(|&i, &j| u[i].total_cmp(&u[j]));
        DcovParts {
            u_sorted: order.iter().map(|&i| u[i]).collect(),
            order,
            u_row_mean,
            u_mean,
        }
    }

    /// `Σ_{i<j} (u_j - u_i) |w_j - w_i|` with `i, j` in ascending `u` order.
    fn cross(&self, w: &[f64]) -> f64 {
        let n = w.len();
        let ws: Vec<f64> = self.order.iter().map(|&i| w[i]).collect();
        let mut by_w: Vec<usize> = (0..n).collect();
        by_w.sort_by(|&i, &j| ws[i].total_cmp(&ws[j]));
        let mut rank = vec![0; n];
        for (r, &i) in by_w.iter().enumerate() {
            rank[i] = r;
        }
        let mut fen = Fenwick::new(n);
        let mut total = [0.0; 4];
        let mut acc = 0.0;
        for j in 0..n {
            let (uj, wj) = (self.u_sorted[j], ws[j]);
            let lo = fen.prefix(rank[j]);
            let hi = [total[0] - lo[0], total[1] - lo[1], total[2] - lo[2], total[3] - lo[3]];
            // Σ (uj - ui)(wj - wi) = c uj wj - uj Σw - wj Σu + Σuw
            let term = |s: [f64; 4]| s[0] * uj * wj - uj * s[2] - wj * s[1] + s[3];
            acc += term(lo) - term(hi);
            let v = [1.0, uj, wj, uj * wj];
            fen.add(rank[j], v);
            for k in 0..4 {
                total[k] += v[k];
            }
        }
        acc
    }

    fn dcov2(&self, w: &[f64]) -> f64 {
        let (w_row_mean, w_mean) = row_means(w);
        let nf = w.len() as f64;
        let rows: f64 = self.u_row_mean.iter().zip(&w_row_mean).map(|(a, b)| a * b).sum();
        2.0 * self.cross(w) / (nf * nf) - 2.0 * rows / nf + self.u_mean * w_mean
    }
}

fn dcov_perm(u: &[f64], v: &[f64], permutations: usize, seed: u64) -> Result<StatReport> {
    let n = u.len();
    if n < 20 {
        return Err(Error::Contract(format!("distance covariance test needs n >= 20, got {n}")));
    }
    if n > DCOV_MAX_N {
        return Err(Error::Contract(format!(
            "distance covariance test needs n <= {DCOV_MAX_N}, got {n}"
        )));
    }
    if permutations == 0 {
        return Err(Error::Contract("need at least one permutation".into()));
    }
    let parts = DcovParts::new(u);
    let observed = parts.dcov2(v);
    let mut rng = RngState::new(seed, 0).rng();
    let shuffles: Vec<Vec<f64>> = (0..permutations)
        .map(|_| {
            let mut w = v.to_vec();
            w.shuffle(&mut rng);
            w
        })
        .collect();
    let exceed = shuffles
        .par_iter()
        .filter(|w| parts.dcov2(w) >= observed)
        .count();
    let p = (1 + exceed) as f64 / (1 + permutations) as f64;
    Ok(StatReport::new("indep_dcov", 1.0 - p, 0.99, n)
        .with_seed(seed)
        .detail("p_value", p)
        .detail("dcov2", observed)
        .detail("permutations", permutations as u64))
}

/// Tests independence of the coordinates of `pairs` at the 1% level.
pub fn independence_test(pairs: &[(f64, f64)], method: IndependenceMethod) -> Result<StatReport> {
    if pairs.iter().any(|(a, b)| a.is_nan() || b.is_nan()) {
        return Err(Error::NumericDomain("NaN in independence sample".into()));
    }
    let (u, v): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
    match method {
        IndependenceMethod::Chi2Grid => chi2_grid(&u, &v),
        IndependenceMethod::DcovPerm { permutations, seed } => dcov_perm(&u, &v, permutations, seed),
    }
}
