use serde::Serialize;
use serde_json::{json, Value};

use isoprofile::concentration::{
    enlargement_csv, enlargement_rows, mc_enlargement, EnlargementBounds, EnlargementExperiment,
};
use isoprofile::delta::{estimate_norm_modulus, ModulusEstimator};
use isoprofile::functional::{certified_c0, check_capacity, empirical_functional_constants, ramp_family};
use isoprofile::oned::{
    compare_bounds, symmetric_grid, verify_midpoint_condition, verify_tail_condition, ConditionReport, Density1D,
};
use isoprofile::profile::{
    bound_bakry_ledoux, bound_bobkov, bound_body_modulus, bound_power_measure, bound_power_modulus, bound_ulc, sweep,
    BoundCurve, SweepTable,
};
use isoprofile::transport::{empirical_lipschitz, pushforward_uniformity, RadialDensity, RadialSampler};

use crate::config::{
    ConcentrateConfig, CurveSpec, FunctionalConfig, ModulusConfig, ProfileConfig, TransportConfig, Verify1dConfig,
};
use crate::output::{csv_with_header, json_bytes, meta, Outputs};
use crate::CliError;

/// Command-line overrides shared by all commands.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    BoundFailure,
    CertificationFailure,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::BoundFailure => 2,
            Status::CertificationFailure => 3,
        }
    }
}

#[derive(Debug)]
pub struct Run {
    pub outputs: Outputs,
    pub status: Status,
}

fn seed_of(cli: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    cli.or(config)
        .ok_or_else(|| CliError::Config("a seed is required: set \"seed\" in the config or pass --seed".into()))
}

fn tol_of(cli: Option<f64>, config: Option<f64>, default: f64) -> Result<f64, CliError> {
    let tol = cli.or(config).unwrap_or(default);
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Config(format!(
            "tolerance must be a nonnegative number, got {tol}"
        )));
    }
    Ok(tol)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("config serializes")
}

/// Certification grid for a 1D density: its core range, clipped at 12.
fn certification_radius(d: &Density1D) -> f64 {
    let (lo, hi) = d.core_range();
    lo.abs().max(hi).min(12.0)
}

fn build_curve(spec: &CurveSpec) -> isoprofile::Result<BoundCurve> {
    match spec {
        CurveSpec::Ulc { delta } => bound_ulc(delta),
        CurveSpec::PowerModulus { alpha, p } => bound_power_modulus(*alpha, *p),
        CurveSpec::BakryLedoux => Ok(bound_bakry_ledoux()),
        CurveSpec::Bobkov { r, ball_mass } => bound_bobkov(*r, *ball_mass),
        CurveSpec::PowerMeasure {
            alpha,
            p,
            n,
            lipschitz_constant,
        } => bound_power_measure(*alpha, *p, *n, *lipschitz_constant),
        CurveSpec::BodyModulus { delta, n, c_prime } => bound_body_modulus(delta, *n, *c_prime),
    }
}

/// Pairwise pointwise comparisons between the columns of a sweep.
fn dominance(table: &SweepTable, tol: f64) -> Vec<Value> {
    let k = table.names.len();
    let mut out = Vec::new();
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            let excess = table.rows.iter().map(|r| r[i] - r[j]).fold(f64::NEG_INFINITY, f64::max);
            let holds = excess <= tol;
            out.push(json!({
                "lower": table.names[i],
                "upper": table.names[j],
                "flag": if holds { "OK" } else { "NO" },
                "max_excess": excess,
            }));
        }
    }
    out
}

pub fn profile(mut cfg: ProfileConfig, o: Overrides) -> Result<Run, CliError> {
    let grid = cfg.grid.points()?;
    if cfg.curves.is_empty() {
        return Err(CliError::Config("no curves requested".into()));
    }
    let tol = tol_of(o.tol, cfg.tol, 0.0)?;
    cfg.tol = Some(tol);
    let mut curves = Vec::with_capacity(cfg.curves.len());
    for spec in &cfg.curves {
        let curve = build_curve(spec)?;
        let base = curve.name().to_string();
        let mut name = base.clone();
        let mut k = 1;
        while curves.iter().any(|c: &BoundCurve| c.name() == name) {
            k += 1;
            name = format!("{base}_{k}");
        }
        curves.push(curve.with_name(name));
    }
    let table = sweep(&curves, &grid)?;
    let m = meta("profile", &to_value(&cfg));
    let sidecar = json!({
        "meta": m,
        "curves": SweepTable::describe(&curves),
        "grid_points": grid.len(),
        "dominance": dominance(&table, tol),
    });
    let mut outputs = Outputs::default();
    outputs.add("profile.csv", csv_with_header(&m, &table.to_csv()));
    outputs.add("profile.json", json_bytes(&sidecar));
    Ok(Run {
        outputs,
        status: Status::Pass,
    })
}

const DEFAULT_LEVELS: [f64; 6] = [1e-6, 1e-4, 1e-2, 0.1, 0.25, 0.5];

pub fn verify1d(mut cfg: Verify1dConfig, o: Overrides) -> Result<Run, CliError> {
    let tol = tol_of(o.tol, cfg.tol, 1e-9)?;
    cfg.tol = Some(tol);
    let levels = cfg.levels.clone().unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
    if let Some(&bad) = levels.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(CliError::Config(format!("levels must lie in (0, 1), got {bad}")));
    }
    let mut grid: Vec<f64> = levels.iter().flat_map(|&a| [a, 1.0 - a]).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(CliError::Config("levels are empty".into()));
    }

    let d = Density1D::new(cfg.density.clone())?;
    let r = certification_radius(&d);
    let tail_cert = verify_tail_condition(&d, &cfg.tail, &symmetric_grid(r, 241));
    let mid_cert = cfg
        .midpoint
        .as_ref()
        .map(|m| verify_midpoint_condition(&d, m, &symmetric_grid(r, 61)));
    let certified = tail_cert.holds && mid_cert.as_ref().is_none_or(|c| c.holds);

    let rows = compare_bounds(&d, &cfg.tail, cfg.midpoint.as_ref(), &grid)?;
    let tail_margin = rows.iter().map(|r| r.exact - r.tail).fold(f64::INFINITY, f64::min);
    let mid_margin = rows
        .iter()
        .filter_map(|r| r.midpoint.map(|m| r.exact - m))
        .fold(f64::INFINITY, f64::min);
    let cheeger_margin = rows.iter().map(|r| r.exact - r.cheeger).fold(f64::INFINITY, f64::min);
    let bounds_hold = tail_margin >= -tol && mid_margin >= -tol;
    let status = if !certified {
        Status::CertificationFailure
    } else if !bounds_hold {
        Status::BoundFailure
    } else {
        Status::Pass
    };

    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let m = meta("verify1d", &to_value(&cfg));
    let report = json!({
        "meta": m,
        "status": status,
        "certification": {
            "holds": certified,
            "tail": tail_cert,
            "midpoint": mid_cert,
        },
        "bounds": {
            "holds": bounds_hold,
            "tail_margin": finite(tail_margin),
            "midpoint_margin": finite(mid_margin),
            "cheeger_margin": finite(cheeger_margin),
        },
    });
    let mut csv = String::from("a,a_tilde,exact,tail,midpoint,cheeger\n");
    for r in &rows {
        let mid = r.midpoint.map(|v| format!("{v:e}")).unwrap_or_default();
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{mid},{:e}\n",
            r.a, r.a_tilde, r.exact, r.tail, r.cheeger
        ));
    }
    let mut outputs = Outputs::default();
    outputs.add("verify1d.csv", csv_with_header(&m, &csv));
    outputs.add("verify1d.json", json_bytes(&report));
    Ok(Run { outputs, status })
}

pub fn transport(mut cfg: TransportConfig, o: Overrides) -> Result<Run, CliError> {
    let seed = seed_of(o.seed, cfg.seed)?;
    cfg.seed = Some(seed);
    if cfg.count == 0 || cfg.pairs == 0 {
        return Err(CliError::Config("count and pairs must be positive".into()));
    }
    let f = RadialDensity::new(cfg.norm.clone(), cfg.profile)?;
    let sampler = RadialSampler::new(&f)?;
    let push = pushforward_uniformity(&f, &sampler, cfg.count, seed)?;
    let lip = empirical_lipschitz(&f, &sampler, cfg.pairs, seed)?;
    let m = meta("transport", &to_value(&cfg));
    let report = json!({
        "meta": m,
        "seed": seed,
        "streams": { "pushforward": push.streams, "lipschitz": lip.streams },
        "pushforward": push,
        "lipschitz": lip,
    });
    let mut outputs = Outputs::default();
    outputs.add("transport.json", json_bytes(&report));
    Ok(Run {
        outputs,
        status: Status::Pass,
    })
}

pub fn concentrate(mut cfg: ConcentrateConfig, o: Overrides) -> Result<Run, CliError> {
    let seed = seed_of(o.seed, cfg.seed)?;
    cfg.seed = Some(seed);
    let n = cfg.norm.dim();
    let theta = cfg
        .theta
        .clone()
        .unwrap_or_else(|| (0..n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
    let exp = EnlargementExperiment {
        norm: cfg.norm.clone(),
        n,
        theta,
        t: cfg.t,
        eps: cfg.eps.clone(),
        count: cfg.count,
        seed,
    };
    let curve = mc_enlargement(&exp)?;
    let bounds = EnlargementBounds {
        lam_b: cfg.lam_b.unwrap_or(curve.base_mass),
        n,
        delta: cfg.delta.clone(),
        c_prime: cfg.c_prime,
        power_profile: cfg.power_profile.as_ref().map(|p| (p.c0, p.p)),
    };
    let rows = enlargement_rows(&curve, &bounds)?;
    let within = rows
        .iter()
        .zip(&curve.points)
        .all(|(r, pt)| r.empirical <= r.gm + 3.0 * pt.sigma);
    let m = meta("concentrate", &to_value(&cfg));
    let sidecar = json!({
        "meta": m,
        "seed": curve.seed,
        "streams": curve.streams,
        "count": curve.count,
        "base_mass": curve.base_mass,
        "base_sigma": curve.base_sigma,
        "dual_norm": curve.dual_norm,
        "lam_b": bounds.lam_b,
        "empirical_within_gm_3sigma": within,
    });
    let mut outputs = Outputs::default();
    outputs.add("concentrate.csv", csv_with_header(&m, &enlargement_csv(&rows)));
    outputs.add("concentrate.json", json_bytes(&sidecar));
    Ok(Run {
        outputs,
        status: Status::Pass,
    })
}

pub fn modulus(mut cfg: ModulusConfig, o: Overrides) -> Result<Run, CliError> {
    let seed = seed_of(o.seed, cfg.seed)?;
    cfg.seed = Some(seed);
    let mut est = ModulusEstimator::default();
    if let Some(s) = cfg.starts {
        est.starts = s;
    }
    if let Some(e) = cfg.max_evals {
        est.optimizer.max_evals = e;
    }
    if let Some(f) = cfg.safety_factor {
        est.safety_factor = f;
    }
    if let Some(t) = o.tol {
        est.optimizer.ftol = tol_of(Some(t), None, 0.0)?;
    }
    let r = estimate_norm_modulus(&cfg.norm, &cfg.eps, &est, seed)?;
    let m = meta(
        "modulus",
        &json!({ "config": to_value(&cfg), "ftol": est.optimizer.ftol }),
    );
    let report = json!({
        "meta": m,
        "seed": seed,
        "streams": r.points.len(),
        "modulus": r.modulus,
        "points": r.points,
        "warnings": r.warnings,
    });
    let mut csv = String::from("eps,raw,rectified,converged,evals\n");
    for p in &r.points {
        csv.push_str(&format!(
            "{},{:e},{:e},{},{}\n",
            p.eps, p.raw, p.rectified, p.converged, p.evals
        ));
    }
    let mut outputs = Outputs::default();
    outputs.add("modulus.csv", csv_with_header(&m, &csv));
    outputs.add("modulus.json", json_bytes(&report));
    Ok(Run {
        outputs,
        status: Status::Pass,
    })
}

pub fn functional(mut cfg: FunctionalConfig, o: Overrides) -> Result<Run, CliError> {
    let tol = tol_of(o.tol, cfg.tol, 0.0)?;
    cfg.tol = Some(tol);
    let d = Density1D::new(cfg.density.clone())?;
    let cert_report: ConditionReport =
        verify_tail_condition(&d, &cfg.tail, &symmetric_grid(certification_radius(&d), 241));
    let m = meta("functional", &to_value(&cfg));
    let mut outputs = Outputs::default();
    if !cert_report.holds {
        let report = json!({
            "meta": m,
            "status": Status::CertificationFailure,
            "certification": cert_report,
        });
        outputs.add("functional.json", json_bytes(&report));
        return Ok(Run {
            outputs,
            status: Status::CertificationFailure,
        });
    }
    let cert = certified_c0(&cfg.tail)?;
    let family = match &cfg.family {
        Some(f) if f.is_empty() => return Err(CliError::Config("family is empty".into())),
        Some(f) => f.clone(),
        None => ramp_family(&d)?,
    };
    let cap = check_capacity(&d, cert, &family)?;
    let consts = empirical_functional_constants(&d, cert, &family)?;
    let holds = cap.rows.iter().all(|r| r.ratio >= 1.0 - tol);
    let status = if holds { Status::Pass } else { Status::BoundFailure };
    let finite = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
    let report = json!({
        "meta": m,
        "status": status,
        "certification": cert_report,
        "c0": cert.c0,
        "q": cert.q,
        "members": family.len(),
        "checked": cap.rows.len(),
        "skipped": cap.skipped,
        "min_ratio": finite(cap.min_ratio),
        "capacity_constant": finite(consts.capacity_constant),
        "log_sobolev_constant": finite(consts.log_sobolev_constant),
    });
    let mut csv = String::from("index,t,lhs,rhs,ratio\n");
    for r in &cap.rows {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{:e}\n",
            r.index, r.t, r.lhs, r.rhs, r.ratio
        ));
    }
    outputs.add("functional.csv", csv_with_header(&m, &csv));
    outputs.add("functional.json", json_bytes(&report));
    Ok(Run { outputs, status })
}
