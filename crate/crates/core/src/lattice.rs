//! Type-I lattice recursion `(x_n^t, y_n^t) = F(x_n^{t-1}, y_{n-1}^t)` on a
//! finite window, with the auxiliary `y` injected at the left boundary.
//!
//! When `F` is an involution and `F(mu ⊗ nu) = mu ⊗ nu`, iid `mu` is
//! invariant for the dynamics. The window is finite, so the leftmost sites
//! are discarded as a buffer before testing.

use serde::{Deserialize, Serialize};

use crate::dist::{Law, LawSampler, RngState};
use crate::error::{Error, Result};
use crate::harness::{ks_one_sample, StatReport};
use crate::maps::{MapSpec, PlanePoint};
use crate::specfun::QuadratureConfig;

/// Carries of the final sweep are thinned by this stride before the exit-law
/// test, to weaken their serial dependence.
pub const CARRY_STRIDE: usize = 20;

/// Sweeps needed before the per-step exit values are numerous enough to test.
pub const MIN_EXIT_SAMPLES: usize = 100;

/// Relative tolerance of the sum conservation check for sum-preserving maps.
pub const CONSERVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeState {
    pub x: Vec<f64>,
    pub t: u64,
}

impl LatticeState {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        let s = LatticeState { x, t: 0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::Domain("lattice needs at least one site".into()));
        }
        match self.x.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            Some(i) => Err(Error::Domain(format!("site {i} holds {}, not in (0, ∞)", self.x[i]))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub sites: usize,
    pub steps: u64,
    pub map: MapSpec,
    pub x_law: Law,
    pub y_law: Law,
    pub seed: u64,
    /// Record the configuration at `t = 0` and every this many sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<u64>,
    /// Also test the carries against `y_law`. Balance only predicts this
    /// when the carry law is a fixed point; for `psi` that means `a = b`,
    /// since the carry leaving a site is `K_beta(a,b,c)`, not `K_beta(b,a,c)`.
    #[serde(default)]
    pub exit_law: bool,
}

impl LatticeConfig {
    /// The balanced setup: `psi(alpha, beta)` with `x ~ K_alpha(a,b,c)` and
    /// boundary `y ~ K_beta(b,a,c)`.
    pub fn balanced(
        alpha: f64,
        beta: f64,
        a: f64,
        b: f64,
        c: f64,
        sites: usize,
        steps: u64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = LatticeConfig {
            sites,
            steps,
            map: MapSpec::psi(alpha, beta)?,
            x_law: Law::kummer(alpha, a, b, c)?,
            y_law: Law::kummer(beta, b, a, c)?,
            seed,
            record_every: None,
            exit_law: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.map.validate()?;
        if !self.map.is_involution() {
            return Err(Error::Contract(format!(
                "lattice recursion needs an involutive map, got {:?}",
                self.map
            )));
        }
        self.x_law.validate()?;
        self.y_law.validate()?;
        if self.sites < 10 {
            return Err(Error::Domain(format!("lattice needs >= 10 sites, got {}", self.sites)));
        }
        if self.record_every == Some(0) {
            return Err(Error::Domain("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Sites kept after discarding the left boundary buffer.
    pub fn interior_start(&self) -> usize {
        self.sites.div_ceil(10)
    }
}

/// One left-to-right sweep. Returns the new state, the exiting carry and,
/// when `carries` is given, every intermediate carry `y_n^t`.
fn sweep(
    state: &LatticeState,
    boundary_y: f64,
    map: &MapSpec,
    mut carries: Option<&mut Vec<f64>>,
) -> Result<(LatticeState, f64)> {
    let mut y = boundary_y;
    let mut x = Vec::with_capacity(state.x.len());
    for (n, &xn) in state.x.iter().enumerate() {
        let p = map.apply(PlanePoint { x: xn, y }).map_err(|e| e.at_site(n))?;
        x.push(p.x);
        y = p.y;
        if let Some(c) = carries.as_deref_mut() {
            c.push(y);
        }
    }
    Ok((LatticeState { x, t: state.t + 1 }, y))
}

/// Advances the state one time step with boundary value `boundary_y`.
pub fn step(state: &LatticeState, boundary_y: f64, map: &MapSpec) -> Result<(LatticeState, f64)> {
    map.validate()?;
    if !map.is_involution() {
        return Err(Error::Contract(format!("lattice recursion needs an involutive map, got {map:?}")));
    }
    state.validate()?;
    if !(boundary_y > 0.0 && boundary_y.is_finite()) {
        return Err(Error::Domain(format!("boundary value must be in (0, ∞), got {boundary_y}")));
    }
    sweep(state, boundary_y, map, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: u64,
    pub n: usize,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRun {
    pub reports: Vec<StatReport>,
    pub final_state: LatticeState,
    pub exits: Vec<f64>,
    pub trajectory: Vec<TrajectoryRow>,
}

fn lag1_correlation(xs: &[f64]) -> f64 {
    let (a, b) = (&xs[..xs.len() - 1], &xs[1..]);
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

fn sum_preserving(map: &MapSpec) -> bool {
    matches!(map, MapSpec::Psi { .. } | MapSpec::Udkdv { .. })
}

fn record(trajectory: &mut Vec<TrajectoryRow>, state: &LatticeState) {
    trajectory.extend(state.x.iter().enumerate().map(|(n, &x)| TrajectoryRow { t: state.t, n, x }));
}

/// Runs the recursion from iid `x_law` (stream 0) with iid `y_law` boundary
/// values (stream 1) and tests the final configuration.
///
/// Reports, in order:
/// * `interior_ks`: KS of the interior sites of `x^T` against `x_law`;
/// * `lag1_corr`: `|corr(x_n, x_{n+1})|` over the `m` interior sites against `3/√m`;
/// * `carry_ks`: with `exit_law`, KS of the final sweep's carries (thinned)
///   against `y_law`, when `T >= 1`;
/// * `exit_ks`: with `exit_law`, KS of the per-sweep exit values against
///   `y_law`, when there are at least 100 of them;
/// * `conservation`: worst relative sum defect per sweep, for sum-preserving
///   maps and `T >= 1`.
pub fn run_lattice(cfg: &LatticeConfig, qcfg: &QuadratureConfig) -> Result<LatticeRun> {
    cfg.validate()?;
    let x0 = LawSampler::new(&cfg.x_law, qcfg)?
        .sample_n(&mut RngState::new(cfg.seed, 0).rng(), cfg.sites)?;
    let boundary = LawSampler::new(&cfg.y_law, qcfg)?
        .sample_n(&mut RngState::new(cfg.seed, 1).rng(), cfg.steps as usize)?;

    let mut state = LatticeState::new(x0)?;
    let mut trajectory = Vec::new();
    if cfg.record_every.is_some() {
        record(&mut trajectory, &state);
    }
    let mut exits = Vec::with_capacity(boundary.len());
    let mut carries = Vec::new();
    let mut worst_defect = 0.0f64;
    for (t, &yb) in boundary.iter().enumerate() {
        let last = t + 1 == boundary.len();
        let before: f64 = state.x.iter().sum::<f64>() + yb;
        let (next, exit) = sweep(&state, yb, &cfg.map, last.then_some(&mut carries))?;
        let after: f64 = next.x.iter().sum::<f64>() + exit;
        worst_defect = worst_defect.max((after - before).abs() / before);
        state = next;
        exits.push(exit);
        if let Some(k) = cfg.record_every {
            if state.t % k == 0 || last {
                record(&mut trajectory, &state);
            }
        }
    }

    let interior = &state.x[cfg.interior_start()..];
    let mut reports = vec![ks_one_sample(interior, &cfg.x_law, qcfg)?.renamed("interior_ks")];
    let m = interior.len();
    reports.push(
        StatReport::new("lag1_corr", lag1_correlation(interior).abs(), 3.0 / (m as f64).sqrt(), m)
            .detail("correlation", lag1_correlation(interior)),
    );
    if cfg.exit_law && !carries.is_empty() {
        let thinned: Vec<f64> = carries[cfg.interior_start()..].iter().step_by(CARRY_STRIDE).copied().collect();
        if thinned.len() >= 100 {
            reports.push(
                ks_one_sample(&thinned, &cfg.y_law, qcfg)?
                    .renamed("carry_ks")
                    .detail("stride", CARRY_STRIDE as u64),
            );
        }
    }
    if cfg.exit_law && exits.len() >= MIN_EXIT_SAMPLES {
        reports.push(ks_one_sample(&exits, &cfg.y_law, qcfg)?.renamed("exit_ks"));
    }
    if sum_preserving(&cfg.map) && cfg.steps > 0 {
        reports.push(
            StatReport::new("conservation", worst_defect, CONSERVATION_TOL, cfg.steps as usize)
                .detail("sweeps", cfg.steps),
        );
    }
    let reports = reports
        .into_iter()
        .map(|r| r.with_seed(cfg.seed).detail("buffer_sites", cfg.interior_start() as u64))
        .collect();
    Ok(LatticeRun { reports, final_state: state, exits, trajectory })
}

/// The invariance reports of [`run_lattice`].
pub fn run_invariance(cfg: &LatticeConfig, qcfg: &QuadratureConfig) -> Result<Vec<StatReport>> {
    Ok(run_lattice(cfg, qcfg)?.reports)
}

/// Trajectory rows as CSV with header `t,n,x`.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from("t,n,x\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.16e}\n", r.t, r.n, r.x));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qcfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn single_site_is_one_map_application() {
        let map = MapSpec::psi(1.0, 0.0).unwrap();
        let (s, exit) = step(&LatticeState::new(vec![1.0]).unwrap(), 1.0, &map).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-15);
        assert!((exit - 1.5).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn sweeping_twice_is_not_identity() {
        let map = MapSpec::psi(1.0, 2.0).unwrap();
        let s0 = LatticeState::new(vec![0.3, 1.7, 0.9, 2.4, 0.6]).unwrap();
        let (s1, _) = step(&s0, 0.8, &map).unwrap();
        let (s2, _) = step(&s1, 0.8, &map).unwrap();
        assert!(s2.x.iter().zip(&s0.x).any(|(a, b)| (a - b).abs() > 1e-6));
    }

    #[test]
    fn non_involutive_map_is_rejected() {
        let s = LatticeState::new(vec![1.0; 4]).unwrap();
        assert!(matches!(step(&s, 1.0, &MapSpec::Dtoda).unwrap_err(), Error::Contract(_)));
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 100, 1, 0).unwrap();
        cfg.map = MapSpec::Lukacs;
        assert!(matches!(run_invariance(&cfg, &qcfg()).unwrap_err(), Error::Contract(_)));
    }

    #[test]
    fn failing_site_is_reported() {
        // udkdv can leave the quadrant; the error names the site
        let map = MapSpec::Udkdv { j: 0.0, k: 5.0 };
        let s = LatticeState::new(vec![1.0, 1.0, 1.0]).unwrap();
        let err = step(&s, 1.0, &map).unwrap_err();
        assert!(matches!(err, Error::AtSite { site: 0, .. }), "{err:?}");
    }

    #[test]
    fn balanced_lattice_is_invariant() {
        let cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 10_000, 10, 11).unwrap();
        let reports = run_invariance(&cfg, &qcfg()).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["interior_ks", "lag1_corr", "conservation"]);
        assert!(reports.iter().all(|r| r.pass), "{reports:#?}");
    }

    #[test]
    fn symmetric_pairing_keeps_exit_law() {
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.2, 1.2, 1.0, 200, 400, 12).unwrap();
        cfg.exit_law = true;
        let reports = run_invariance(&cfg, &qcfg()).unwrap();
        let names: Vec<&str> = reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["interior_ks", "lag1_corr", "exit_ks", "conservation"]);
        assert_eq!(reports[2].n, 400);
        assert!(reports.iter().all(|r| r.pass), "{reports:#?}");
    }

    #[test]
    fn asymmetric_pairing_changes_carry_law() {
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 10_000, 1, 12).unwrap();
        cfg.exit_law = true;
        let reports = run_invariance(&cfg, &qcfg()).unwrap();
        let carry = reports.iter().find(|r| r.name == "carry_ks").unwrap();
        assert!(!carry.pass, "{carry:#?}");
        let carried = Law::kummer(2.0, 1.5, 0.7, 1.0).unwrap();
        assert_ne!(carried, cfg.y_law);
    }

    #[test]
    fn gamma_initial_law_is_not_invariant() {
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 10_000, 10, 13).unwrap();
        cfg.x_law = Law::gamma(1.5, 1.0).unwrap();
        let reports = run_invariance(&cfg, &qcfg()).unwrap();
        assert!(!reports[0].pass, "{:#?}", reports[0]);
    }

    #[test]
    fn zero_steps_keeps_initial_state() {
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 10_000, 0, 14).unwrap();
        cfg.record_every = Some(1);
        let run = run_lattice(&cfg, &qcfg()).unwrap();
        assert_eq!(run.final_state.t, 0);
        assert_eq!(run.trajectory.len(), 10_000);
        let names: Vec<&str> = run.reports.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["interior_ks", "lag1_corr"]);
        assert!(run.reports.iter().all(|r| r.pass));
    }

    #[test]
    fn trajectory_rows() {
        let mut cfg = LatticeConfig::balanced(1.0, 2.0, 1.5, 0.7, 1.0, 1000, 5, 15).unwrap();
        cfg.record_every = Some(2);
        let run = run_lattice(&cfg, &qcfg()).unwrap();
        // t = 0, 2, 4 and the final 5
        assert_eq!(run.trajectory.len(), 4 * 1000);
        let csv = trajectory_csv(&run.trajectory[..2]);
        assert!(csv.starts_with("t,n,x\n0,0,"));
        assert_eq!(csv.lines().count(), 3);
    }
}
