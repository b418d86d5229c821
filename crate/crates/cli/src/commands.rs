use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use kummerlab::dist::{Law, LawSampler, RngState};
use kummerlab::harness::{all_pass, verify_balance, verify_corollary_sk, verify_limit, ExperimentPlan, StatReport};
use kummerlab::ktransform::{identity_residuals_for, klt_mc, log_klt_closed, TransformQuery};
use kummerlab::lattice::{run_lattice, trajectory_csv};
use kummerlab::specfun::{log_kummer_u_with_error, QuadratureConfig, UArgs};

use crate::config::{BalanceConfig, CorollaryConfig, IdentitiesConfig, LatticeSuiteConfig, LimitsConfig};
use crate::output::{fmt_f64, manifest_path, to_json, write_file, RunManifest};
use crate::{CliError, Suite};

/// Residual bound for the exact transform identities.
const IDENTITY_TOL: f64 = 1e-8;
/// Residual bound for the finite-difference identity.
const ID2_TOL: f64 = 1e-6;

fn parse_law(spec: &str) -> Result<Law, CliError> {
    spec.parse().map_err(CliError::core("--law"))
}

pub fn eval_u(a: f64, b: f64, z: f64, cfg: &QuadratureConfig) -> Result<u8, CliError> {
    let args = UArgs::new(a, b, z).map_err(CliError::core("eval-u"))?;
    let v = log_kummer_u_with_error(args, cfg).map_err(CliError::core("eval-u"))?;
    let value = v.log_value.exp();
    let out = json!({
        "a": a,
        "b": b,
        "z": z,
        "value": (value.is_finite() && value > 0.0).then_some(value),
        "log_value": v.log_value,
        "rel_error": v.rel_error,
    });
    print!("{}", to_json(&out));
    Ok(0)
}

pub fn sample(spec: &str, n: usize, seed: u64, out: &Path, cfg: &QuadratureConfig) -> Result<u8, CliError> {
    let law = parse_law(spec)?;
    if n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let mut manifest = RunManifest::start(
        "sample",
        json!({ "law": law.to_string(), "n": n, "rel_tol": cfg.rel_tol }),
        Some(seed),
    );
    let xs = LawSampler::new(&law, cfg)
        .and_then(|s| s.sample_n(&mut RngState::new(seed, 0).rng(), n))
        .map_err(CliError::core("sample"))?;

    let mut csv = String::with_capacity(n * 24);
    for x in &xs {
        csv.push_str(&fmt_f64(*x));
        csv.push('\n');
    }
    write_file(out, &csv)?;
    manifest.output(out);

    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let sidecar = manifest_path(out);
    manifest.finish();
    write_file(&sidecar, &to_json(&manifest))?;
    let summary = json!({
        "law": law.to_string(),
        "n": n,
        "seed": seed,
        "mean": mean,
        "sd": var.sqrt(),
        "min": xs.iter().copied().fold(f64::INFINITY, f64::min),
        "max": xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "manifest": sidecar.display().to_string(),
    });
    print!("{}", to_json(&summary));
    Ok(0)
}

pub fn transform(
    spec: &str,
    s: f64,
    t: f64,
    z: f64,
    mc: Option<usize>,
    seed: u64,
    cfg: &QuadratureConfig,
) -> Result<u8, CliError> {
    let p = match parse_law(spec)? {
        Law::Kummer(p) => p,
        other => return Err(CliError::usage(format!("transform needs a kummer law, got {other}"))),
    };
    let q = TransformQuery::new(p.alpha, s, t, z).map_err(CliError::core("transform"))?;
    let log_value = log_klt_closed(&p, &q, cfg).map_err(CliError::core("transform"))?;
    let value = log_value.exp();
    let mut out = json!({
        "law": spec,
        "s": s,
        "t": t,
        "z": z,
        "value": (value.is_finite() && value > 0.0).then_some(value),
        "log_value": log_value,
    });
    if let Some(n) = mc {
        let xs = LawSampler::new(&Law::Kummer(p), cfg)
            .and_then(|smp| smp.sample_n(&mut RngState::new(seed, 0).rng(), n))
            .map_err(CliError::core("transform --mc"))?;
        let (est, se) = klt_mc(&xs, &q).map_err(CliError::core("transform --mc"))?;
        out["monte_carlo"] = json!({ "n": n, "seed": seed, "estimate": est, "std_error": se });
    }
    print!("{}", to_json(&out));
    Ok(0)
}

fn read_config<T: DeserializeOwned>(path: &Path, suite: Suite) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid {suite:?} config {}: {e}", path.display())))
}

fn params<T: Serialize>(config: &T, cfg: &QuadratureConfig) -> Value {
    let mut v = serde_json::to_value(config).expect("configs serialise");
    v["rel_tol"] = json!(cfg.rel_tol);
    v
}

fn balance(path: &Path, seed: Option<u64>, cfg: &QuadratureConfig) -> Result<(Value, Option<u64>, Vec<StatReport>), CliError> {
    let mut c: BalanceConfig = read_config(path, Suite::Balance)?;
    c.seed = seed.unwrap_or(c.seed);
    let mut plan = ExperimentPlan::new(c.quadruple, c.n, c.seed)
        .with_perturbation(c.perturbation)
        .map_err(CliError::core("verify balance"))?;
    plan.tests = c.tests.clone();
    plan.x_override = c.x_override.or(plan.x_override);
    plan.y_override = c.y_override;
    let reports = verify_balance(&plan, cfg).map_err(CliError::core("verify balance"))?;
    Ok((params(&c, cfg), Some(c.seed), reports))
}

fn corollary(path: &Path, seed: Option<u64>, cfg: &QuadratureConfig) -> Result<(Value, Option<u64>, Vec<StatReport>), CliError> {
    let mut c: CorollaryConfig = read_config(path, Suite::Corollary)?;
    c.seed = seed.unwrap_or(c.seed);
    let reports = verify_corollary_sk(c.a, c.b, c.c, c.gamma, c.n, c.seed, cfg)
        .map_err(CliError::core("verify corollary"))?;
    Ok((params(&c, cfg), Some(c.seed), reports))
}

fn limits(path: &Path, seed: Option<u64>, cfg: &QuadratureConfig) -> Result<(Value, Option<u64>, Vec<StatReport>), CliError> {
    let mut c: LimitsConfig = read_config(path, Suite::Limits)?;
    c.seed = seed.unwrap_or(c.seed);
    if c.kinds.is_empty() {
        return Err(CliError::usage("limits config lists no kinds"));
    }
    let per_kind: Vec<Result<Vec<StatReport>, CliError>> = c
        .kinds
        .par_iter()
        .map(|spec| {
            verify_limit(spec, &c.n_list, c.sample_n, c.seed, cfg)
                .map_err(CliError::core(spec.name()))
        })
        .collect();
    let mut reports = Vec::new();
    for r in per_kind {
        reports.extend(r?);
    }
    Ok((params(&c, cfg), Some(c.seed), reports))
}

fn identities(path: &Path, cfg: &QuadratureConfig) -> Result<(Value, Option<u64>, Vec<StatReport>), CliError> {
    let c: IdentitiesConfig = read_config(path, Suite::Identities)?;
    c.quadruple.validate().map_err(CliError::core("verify identities"))?;
    let mut laws = c.quadruple.laws();
    if c.perturb_u != 0.0 {
        laws = laws.perturb_u(c.perturb_u).map_err(CliError::core("verify identities"))?;
    }
    let mut reports = Vec::new();
    for p in &c.points {
        let r = identity_residuals_for(&laws, p.s, p.t, p.z, cfg)
            .map_err(CliError::core("verify identities"))?;
        let mut entries = vec![("kleq", r.kleq, IDENTITY_TOL)];
        if let Some(u) = r.uiden {
            entries.push(("uiden", u, IDENTITY_TOL));
        }
        entries.extend([
            ("mm", r.mm, IDENTITY_TOL),
            ("fourm", r.fourm, IDENTITY_TOL),
            ("ratio", r.ratio, IDENTITY_TOL),
            ("id1", r.id1, IDENTITY_TOL),
            ("id2", r.id2, ID2_TOL),
        ]);
        for (name, value, tol) in entries {
            reports.push(
                StatReport::new(name, value, tol, 0)
                    .detail("s", p.s)
                    .detail("t", p.t)
                    .detail("z", p.z),
            );
        }
    }
    Ok((params(&c, cfg), None, reports))
}

fn lattice(
    path: &Path,
    seed: Option<u64>,
    trajectory: Option<&Path>,
    manifest_outputs: &mut Vec<String>,
    cfg: &QuadratureConfig,
) -> Result<(Value, Option<u64>, Vec<StatReport>), CliError> {
    let mut c: LatticeSuiteConfig = read_config(path, Suite::Lattice)?;
    c.seed = seed.unwrap_or(c.seed);
    if trajectory.is_some() && c.record_every.is_none() {
        c.record_every = Some(1);
    }
    let run = run_lattice(&c, cfg).map_err(CliError::core("verify lattice"))?;
    if let Some(t) = trajectory {
        write_file(t, &trajectory_csv(&run.trajectory))?;
        manifest_outputs.push(t.display().to_string());
    }
    Ok((params(&c, cfg), Some(c.seed), run.reports))
}

pub fn verify(
    suite: Suite,
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    trajectory: Option<&Path>,
    cfg: &QuadratureConfig,
) -> Result<u8, CliError> {
    if trajectory.is_some() && suite != Suite::Lattice {
        return Err(CliError::usage("--trajectory applies to the lattice suite only"));
    }
    let name = format!("verify {}", format!("{suite:?}").to_lowercase());
    let mut manifest = RunManifest::start(&name, Value::Null, None);
    let mut extra_outputs = Vec::new();
    let (parameters, used_seed, reports) = match suite {
        Suite::Balance => balance(config, seed, cfg)?,
        Suite::Corollary => corollary(config, seed, cfg)?,
        Suite::Limits => limits(config, seed, cfg)?,
        Suite::Identities => identities(config, cfg)?,
        Suite::Lattice => lattice(config, seed, trajectory, &mut extra_outputs, cfg)?,
    };
    manifest.parameters = json!({ "config": config.display().to_string(), "resolved": parameters });
    manifest.seed = used_seed;
    if let Some(o) = out {
        manifest.output(o);
    }
    manifest.outputs.extend(extra_outputs);
    manifest.finish();

    let pass = all_pass(&reports);
    let doc = to_json(&json!({ "manifest": manifest, "reports": reports }));
    match out {
        Some(o) => {
            write_file(o, &doc)?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            println!("{name}: {} reports, {failed} failed", reports.len());
        }
        None => print!("{doc}"),
    }
    Ok(if pass { 0 } else { 1 })
}
