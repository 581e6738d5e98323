//! Subcommand implementations. Each returns tables and reports; writing is left to the caller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use thermoform::decomposition::{classify_logs, log_sigma_orbit, split_index};
use thermoform::extension::{self, BowenSampling, ExtensionConfig};
use thermoform::pressure::{self, ct_hypothesis_check};
use thermoform::solenoid::{self, AttractorSampling, SolenoidSystem, TorusPotential};
use thermoform::specification::{self, GlueOptions};
use thermoform::transfer::{build_operator, eigen_rows, leading_eigen};
use thermoform::{Classification, Collection, DecompositionConfig, MapSystem, OrbitSegment, Potential};

use crate::config::Resolved;
use crate::output::{fmt_f, Table};
use crate::CliError;

/// Everything a run produces.
pub struct Outcome {
    pub table: Table,
    pub json: Option<Value>,
    pub cloud: Option<Table>,
    /// Non-zero exit status requested by the subcommand itself.
    pub status: i32,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            table,
            json: None,
            cloud: None,
            status: 0,
        }
    }
}

pub fn run(cfg: &Resolved) -> Result<Outcome, CliError> {
    match cfg.command.as_str() {
        "pressure" => pressure_cmd(cfg),
        "decompose" => decompose_cmd(cfg),
        "glue" => glue_cmd(cfg),
        "transfer" => transfer_cmd(cfg),
        "extension" => extension_cmd(cfg),
        "solenoid" => solenoid_cmd(cfg),
        "gap-report" => gap_cmd(cfg),
        "check" => check_cmd(cfg),
        other => Err(CliError::validation("command", format!("unknown subcommand `{other}`"))),
    }
}

/// Independent stream `(tag, idx)` of the run seed.
fn stream(seed: u64, tag: u64, idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 40) ^ idx as u64);
    rng
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

fn pressure_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let phi = cfg.potential.build()?;
    let mut colls: Vec<(Option<f64>, Collection<f64>)> = vec![(None, Collection::Full)];
    for &sigma in &cfg.sigma {
        colls.push((Some(sigma), Collection::Good { sigma }));
        colls.push((Some(sigma), Collection::Bad { sigma }));
    }
    let mut table = Table::new(&[
        "collection",
        "sigma",
        "eps",
        "n",
        "log_partition_sum",
        "set_size",
        "rate",
        "rate_uncertainty",
        "limsup_proxy",
    ]);
    for (sigma, coll) in &colls {
        for est in pressure::pressure_table(&map, &phi, coll, &cfg.eps, cfg.n_max)? {
            for (i, &n) in est.n_values.iter().enumerate() {
                table.push(vec![
                    coll.label().to_string(),
                    sigma.map(fmt_f).unwrap_or_default(),
                    fmt_f(est.eps),
                    n.to_string(),
                    fmt_f(est.log_partition_sums[i]),
                    est.set_sizes[i].to_string(),
                    fmt_f(est.rate),
                    fmt_f(est.rate_uncertainty),
                    fmt_f(est.limsup_proxy),
                ]);
            }
        }
    }
    Ok(Outcome::table(table))
}

fn decompose_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let mut table = Table::new(&[
        "sigma",
        "samples",
        "good",
        "bad",
        "neither",
        "mean_good_fraction",
        "mean_bad_fraction",
    ]);
    for (si, &sigma) in cfg.sigma.iter().enumerate() {
        let dc = DecompositionConfig::new(sigma)?;
        let ls = dc.log_sigma();
        let rows: Vec<(Classification, f64)> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(cfg.seed, 1 + si as u64, i);
                let x: f64 = rng.gen();
                let n = rng.gen_range(cfg.min_len..=cfg.max_len);
                let logs = log_sigma_orbit(&map, x, n)?;
                Ok((classify_logs(&logs, ls), split_index(&logs, ls) as f64 / n as f64))
            })
            .collect::<Result<_, thermoform::Error>>()?;
        let count = |c: Classification| rows.iter().filter(|r| r.0 == c).count();
        let mean_good = rows.iter().map(|r| r.1).sum::<f64>() / rows.len() as f64;
        table.push(vec![
            fmt_f(sigma),
            rows.len().to_string(),
            count(Classification::Good).to_string(),
            count(Classification::Bad).to_string(),
            count(Classification::Neither).to_string(),
            fmt_f(mean_good),
            fmt_f(1.0 - mean_good),
        ]);
    }
    Ok(Outcome::table(table))
}

/// Draws `count` good segments with lengths in `[min_len, max_len]`; `None` if rejection sampling gives up.
fn good_segments(
    map: &MapSystem<f64>,
    dc: &DecompositionConfig<f64>,
    cfg: &Resolved,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<OrbitSegment<f64>>>, thermoform::Error> {
    let mut out = Vec::with_capacity(cfg.segments);
    let lo = cfg.min_len.max(cfg.k0);
    if lo > cfg.max_len {
        return Ok(None);
    }
    for _ in 0..cfg.segments * 10_000 {
        if out.len() == cfg.segments {
            break;
        }
        let x: f64 = rng.gen();
        let n = rng.gen_range(lo..=cfg.max_len);
        let logs = log_sigma_orbit(map, x, n)?;
        if thermoform::decomposition::good_from_logs(&logs, dc.log_sigma()) {
            out.push(OrbitSegment::new(x, n)?);
        }
    }
    Ok((out.len() == cfg.segments).then_some(out))
}

struct PlanResult {
    sigma: f64,
    eps: f64,
    index: usize,
    segments: Vec<OrbitSegment<f64>>,
    plan: Option<thermoform::GluingPlan<f64>>,
    defect: f64,
    error: Option<String>,
}

impl PlanResult {
    fn verified(&self) -> bool {
        self.plan
            .as_ref()
            .is_some_and(|p| p.max_shadow <= self.eps && p.transitions.iter().all(|&t| t <= p.tau_cap))
    }
}

fn glue_plans(
    map: &MapSystem<f64>,
    cfg: &Resolved,
    sigma: f64,
    eps: f64,
    tag: u64,
) -> Result<Vec<PlanResult>, CliError> {
    let dc = DecompositionConfig::new(sigma)?;
    let opts = GlueOptions {
        k0: cfg.k0,
        tau_cap: None,
    };
    (0..cfg.plans)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(cfg.seed, tag, i);
            let Some(segments) = good_segments(map, &dc, cfg, &mut rng)? else {
                return Ok(PlanResult {
                    sigma,
                    eps,
                    index: i,
                    segments: Vec::new(),
                    plan: None,
                    defect: f64::NAN,
                    error: Some("no good segments found".into()),
                });
            };
            let (plan, error) = match specification::glue_base_with(map, &dc, &segments, eps, &opts) {
                Ok(p) => (Some(p), None),
                Err(e @ thermoform::Error::InvalidParameter { .. }) => return Err(e.into()),
                Err(e) => (None, Some(e.to_string())),
            };
            let defect = plan
                .as_ref()
                .map_or(f64::NAN, |p| specification::consistency_defect(map, &p.orbit));
            Ok(PlanResult {
                sigma,
                eps,
                index: i,
                segments,
                plan,
                defect,
                error,
            })
        })
        .collect()
}

fn join<I: IntoIterator<Item = String>>(it: I) -> String {
    it.into_iter().collect::<Vec<_>>().join(";")
}

fn glue_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let mut table = Table::new(&[
        "sigma",
        "eps",
        "plan",
        "lengths",
        "tau_cap",
        "transitions",
        "glue_point",
        "max_shadow",
        "consistency_defect",
        "verified",
        "error",
    ]);
    let mut plans_json = Vec::new();
    let mut failed = false;
    let mut tag = 100;
    for &sigma in &cfg.sigma {
        for &eps in &cfg.eps {
            tag += 1;
            for r in glue_plans(&map, cfg, sigma, eps, tag)? {
                failed |= !r.verified();
                let p = r.plan.as_ref();
                table.push(vec![
                    fmt_f(r.sigma),
                    fmt_f(r.eps),
                    r.index.to_string(),
                    join(r.segments.iter().map(|s| s.length.to_string())),
                    p.map(|p| p.tau_cap.to_string()).unwrap_or_default(),
                    p.map(|p| join(p.transitions.iter().map(|t| t.to_string())))
                        .unwrap_or_default(),
                    p.map(|p| fmt_f(p.glue_point)).unwrap_or_default(),
                    p.map(|p| fmt_f(p.max_shadow)).unwrap_or_default(),
                    fmt_f(r.defect),
                    bool_cell(r.verified()),
                    r.error.clone().unwrap_or_default(),
                ]);
                plans_json.push(json!({
                    "sigma": r.sigma,
                    "eps": r.eps,
                    "plan": r.index,
                    "segment_starts": r.segments.iter().map(|s| s.start).collect::<Vec<_>>(),
                    "segment_lengths": r.segments.iter().map(|s| s.length).collect::<Vec<_>>(),
                    "transitions": p.map(|p| p.transitions.clone()),
                    "glue_point": p.map(|p| p.glue_point),
                    "max_shadow": p.map(|p| p.max_shadow),
                    "verified": r.verified(),
                    "error": r.error,
                }));
            }
        }
    }
    Ok(Outcome {
        table,
        json: Some(json!({ "plans": plans_json })),
        cloud: None,
        status: if failed { 2 } else { 0 },
    })
}

fn transfer_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let phi = cfg.potential.build()?;
    let op = build_operator(&map, &phi, cfg.grid_size)?;
    let eigen = leading_eigen(&op, cfg.tol, cfg.max_iters)?;
    let mut table = Table::new(&["node", "h", "nu", "density"]);
    table.comment(format!(
        "lambda={} log_lambda={} iterations={} residual={}",
        fmt_f(eigen.lambda),
        fmt_f(eigen.log_lambda),
        eigen.iterations,
        fmt_f(eigen.residual)
    ));
    for r in eigen_rows(&op, &eigen) {
        table.push(r.iter().map(|&v| fmt_f(v)).collect());
    }
    Ok(Outcome::table(table))
}

fn bowen_report(
    map: &MapSystem<f64>,
    phi: &Potential<f64>,
    cfg: &Resolved,
    sigma: f64,
    eps: f64,
) -> Result<thermoform::BowenReport<f64>, CliError> {
    let ext = ExtensionConfig::new(cfg.a, cfg.depth)?;
    let dc = DecompositionConfig::new(sigma)?;
    let lifted = extension::lift_potential(phi.clone(), cfg.lift_mode())?;
    let opts = BowenSampling {
        samples: cfg.samples,
        n_max: cfg.bowen_n,
        seed: cfg.seed,
        attempts: (cfg.samples * 10).max(10_000),
    };
    Ok(extension::verify_bowen(map, &ext, &dc, &lifted, eps, &opts)?)
}

fn extension_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let phi = cfg.potential.build()?;
    let mut table = Table::new(&[
        "sigma",
        "a",
        "alpha",
        "eps",
        "bound",
        "empirical_max",
        "slack",
        "max_distance_ratio",
        "samples",
        "passed",
    ]);
    for &sigma in &cfg.sigma {
        for &eps in &cfg.eps {
            let r = bowen_report(&map, &phi, cfg, sigma, eps)?;
            table.push(vec![
                fmt_f(r.sigma),
                fmt_f(r.a),
                fmt_f(r.alpha),
                fmt_f(r.eps),
                fmt_f(r.bound),
                fmt_f(r.empirical_max),
                fmt_f(r.slack),
                fmt_f(r.max_distance_ratio),
                r.samples.to_string(),
                bool_cell(r.passed),
            ]);
        }
    }
    Ok(Outcome::table(table))
}

fn solenoid_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let sys = SolenoidSystem::new(cfg.lambda_s, cfg.radius)?;
    let depth = cfg.depth.min(solenoid::FIBER_DEPTH_CAP);
    let mut table = Table::new(&["check", "sigma", "eps", "value", "bound", "passed"]);
    let mut push = |check: &str, sigma: Option<f64>, eps: Option<f64>, value: f64, bound: f64, passed: bool| {
        table.push(vec![
            check.to_string(),
            sigma.map(fmt_f).unwrap_or_default(),
            eps.map(fmt_f).unwrap_or_default(),
            fmt_f(value),
            fmt_f(bound),
            bool_cell(passed),
        ]);
    };

    let (lo, hi) = solenoid::fiber_contraction(&sys, cfg.samples, depth, cfg.seed);
    let dev = (lo - cfg.lambda_s).abs().max((hi - cfg.lambda_s).abs());
    push("fiber_contraction_deviation", None, None, dev, 1e-12, dev <= 1e-12);

    let ext = ExtensionConfig::new(cfg.a, cfg.depth)?;
    let conj = solenoid::conjugacy_defect(&sys, &ext, cfg.samples, cfg.seed)?;
    push(
        "conjugacy_defect",
        None,
        None,
        conj,
        ext.tail_bound,
        conj <= ext.tail_bound,
    );

    let hol = solenoid::holonomy_invariance_defect(&sys, cfg.samples, depth, cfg.seed);
    push("holonomy_invariance_defect", None, None, hol, 0.0, hol == 0.0);

    let eq = solenoid::metric_equivalence(&sys, cfg.samples.max(100), depth, cfg.seed)?;
    push(
        "metric_equivalence",
        None,
        None,
        eq.constant,
        eq.analytic,
        eq.constant <= eq.analytic,
    );

    let phi = TorusPotential {
        a: cfg.torus_a,
        b: cfg.torus_b,
    };
    for &sigma in &cfg.sigma {
        let dc = DecompositionConfig::new(sigma)?;
        for &eps in &cfg.eps {
            let opts = AttractorSampling {
                samples: cfg.samples,
                n_max: cfg.bowen_n,
                depth: cfg.depth.max(30),
                seed: cfg.seed,
            };
            let r = solenoid::attractor_bowen_check(&sys, &dc, &phi, eps, &opts)?;
            push(
                "attractor_bowen",
                Some(sigma),
                Some(eps),
                r.empirical_max,
                r.bound,
                r.passed,
            );
        }
    }

    let cloud = cfg.cloud.as_ref().map(|_| {
        let mut t = Table::new(&["theta", "u", "v", "itinerary"]);
        for p in solenoid::point_cloud(&sys, cfg.samples, depth, cfg.seed) {
            t.push(vec![fmt_f(p.theta), fmt_f(p.u), fmt_f(p.v), p.itinerary()]);
        }
        t
    });
    Ok(Outcome {
        table,
        json: None,
        cloud,
        status: 0,
    })
}

fn gap_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let phi = cfg.potential.build()?;
    let mut table = Table::new(&["sigma", "eps", "n_max", "p_full", "p_bad", "gap", "holds"]);
    for &eps in &cfg.eps {
        for g in pressure::gap_report(&map, &phi, &cfg.sigma, eps, cfg.n_max)? {
            table.push(vec![
                fmt_f(g.sigma),
                fmt_f(g.eps),
                g.n_max.to_string(),
                fmt_f(g.p_full.rate),
                fmt_f(g.p_bad.rate),
                fmt_f(g.gap),
                bool_cell(g.hypothesis_holds),
            ]);
        }
    }
    Ok(Outcome::table(table))
}

fn check_cmd(cfg: &Resolved) -> Result<Outcome, CliError> {
    let map = cfg.map.build()?;
    let phi = cfg.potential.build()?;
    let mut table = Table::new(&[
        "sigma",
        "eps",
        "specification",
        "bowen",
        "gap",
        "gap_value",
        "passed",
        "blockers",
    ]);
    let mut reports = Vec::new();
    let mut any_pass = false;
    let mut tag = 500;
    for &eps in &cfg.eps {
        let gaps = pressure::gap_report(&map, &phi, &cfg.sigma, eps, cfg.n_max)?;
        for g in &gaps {
            tag += 1;
            let plans = glue_plans(&map, cfg, g.sigma, eps, tag)?;
            let spec = plans.iter().all(PlanResult::verified);
            let bowen = bowen_report(&map, &phi, cfg, g.sigma, eps)?;
            let ct = ct_hypothesis_check(g, bowen.bound.is_finite() && bowen.passed, spec);
            any_pass |= ct.passed;
            table.push(vec![
                fmt_f(g.sigma),
                fmt_f(eps),
                bool_cell(ct.specification),
                bool_cell(ct.bowen),
                bool_cell(ct.gap),
                fmt_f(ct.gap_value),
                bool_cell(ct.passed),
                ct.blockers.join(";"),
            ]);
            reports.push(json!({ "sigma": g.sigma, "eps": eps, "gap_report": g, "bowen": bowen, "result": ct }));
        }
    }
    Ok(Outcome {
        table,
        json: Some(json!({ "reports": reports, "passed": any_pass, "note": pressure::SCALE_NOTE })),
        cloud: None,
        status: if any_pass { 0 } else { 3 },
    })
}
