use std::fs;
use std::path::Path;
use std::sync::Arc;

use deltam_bergman::{
    balanced_iterate, balanced_threshold, delta_a_m_estimate, ray_from_valuation, BalancedOptions,
    BalancedOutcome, BergmanError, HermitianForm, MtOptions, SectionBasis, ThresholdOptions, TraceEntry, Twist,
};
use deltam_core::input::Input;
use deltam_core::rational::{format_rational, to_f64};
use deltam_core::soliton::{self, solve_soliton_vector, SolitonMode, SolitonSolution};
use deltam_core::thresholds::{
    coupled_delta_limit, coupled_delta_m, coupled_ke_criterion, delta_limit, delta_m_bracket, CoupledComponent,
    DeltaT, Sections, ToricValuation,
};
use deltam_core::weighted::{self, WeightFunction};
use deltam_core::{nef_threshold, validate_fan, PolarizedToric, Rational, ToricError};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::args::{Command, Levels, MRange, RunConfig, StartSpec, Tolerances, TwistSpec, WeightSpec};
use crate::report::{bisection, cell, mpfr, newton, num, quadrature, Report, Table, EXACT};
use crate::selftest;

/// A failed run: exit status, diagnostic and whatever partial output exists.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    pub partial: Option<Report>,
}

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure { code: EXIT_VALIDATION, message: message.into(), partial: None }
    }
}

impl From<ToricError> for Failure {
    fn from(e: ToricError) -> Self {
        let message = e.to_string();
        match e {
            ToricError::NonConvergence { trace, .. } => {
                let mut t = Table::new(&["iteration", "residual"]);
                for (i, r) in &trace {
                    t.push(vec![i.to_string(), cell(*r)]);
                }
                let json = json!({ "error": message, "trace": trace });
                Failure { code: EXIT_NUMERIC, message, partial: Some(Report { json, table: t }) }
            }
            ToricError::Rank(_) => Failure { code: EXIT_NUMERIC, message, partial: None },
            _ => Failure::validation(message),
        }
    }
}

impl From<BergmanError> for Failure {
    fn from(e: BergmanError) -> Self {
        match e {
            BergmanError::Toric(t) => t.into(),
            BergmanError::Inconclusive { detail, trace } => {
                let message = format!("inconclusive classification: {detail}");
                let mut t = Table::new(&["x", "outcome"]);
                for (x, o) in &trace {
                    t.push(vec![cell(*x), o.clone()]);
                }
                let json = json!({ "error": message, "trace": trace });
                Failure { code: EXIT_NUMERIC, message, partial: Some(Report { json, table: t }) }
            }
            e if e.is_numeric() => Failure { code: EXIT_NUMERIC, message: e.to_string(), partial: None },
            e => Failure::validation(e.to_string()),
        }
    }
}

type Outcome = Result<(Report, i32), Failure>;

fn load(path: &Path) -> Result<Input, Failure> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(Input::parse(&raw)?)
}

fn header(command: &str, input: &Input) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), command.into());
    m.insert("input_sha256".into(), input.hash.clone().into());
    m
}

fn q(r: &Rational) -> Value {
    Value::from(format_rational(r))
}

fn qs(rs: &[Rational]) -> Value {
    Value::from(rs.iter().map(format_rational).collect::<Vec<_>>())
}

fn provenance(pairs: &[(&str, String)]) -> Value {
    Value::Object(pairs.iter().map(|(k, v)| (k.to_string(), Value::from(v.clone()))).collect())
}

fn positive(name: &str, x: f64) -> Result<f64, Failure> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::validation(format!("{name} must be positive and finite, got {x}")))
    }
}

pub fn dispatch(cfg: &RunConfig) -> Outcome {
    match &cfg.command {
        Command::Validate { input } => validate(&load(input)?),
        Command::Delta { input, m, weight } => delta(&load(input)?, *m, weight),
        Command::DeltaSweep { input, m } => sweep(&load(input)?, *m),
        Command::Limit { input } => limit(&load(input)?),
        Command::Soliton { input, m } => soliton(&load(input)?, *m, &cfg.tol),
        Command::Coupled { input, m } => coupled(&load(input)?, m),
        Command::Balanced { input, m, delta, threshold, twist, start, full, damping, start_time, bisect_tol } => {
            let input = load(input)?;
            let b = basis(&input, *m)?;
            let f = match twist {
                TwistSpec::Zero => Twist::zero(),
                TwistSpec::Bump(a) => Twist::bump(*a),
            };
            let mut opts = if *threshold { ThresholdOptions::default().iterate } else { BalancedOptions::default() };
            apply(&mut opts, &cfg.tol);
            if let Some(s) = damping {
                if !(*s > 0.0 && *s <= 1.0) {
                    return Err(Failure::validation("damping must lie in (0, 1]"));
                }
                opts.damping = *s;
            }
            if *threshold {
                let mut t = ThresholdOptions { iterate: opts, ..ThresholdOptions::default() };
                if let Some(s) = start_time {
                    t.start_time = *s;
                }
                if let Some(s) = bisect_tol {
                    t.tol = positive("--bisect-tol", *s)?;
                }
                threshold_report(&input, &b, &f, &t)
            } else {
                let d = positive("delta", delta.ok_or_else(|| Failure::validation("--delta is required without --threshold"))?)?;
                iterate_report(&input, &b, d, &f, start, *full, &opts)
            }
        }
        Command::MtThreshold { input, m, ray, delta, horizon, points, bisect_tol } => {
            let input = load(input)?;
            let b = basis(&input, *m)?;
            let mut opts = MtOptions::default();
            if let Some(t) = cfg.tol.quad_tol {
                opts.quad.tol = positive("--quad-tol", t)?;
            }
            if let Some(h) = horizon {
                opts.horizon = Some(positive("--horizon", *h)?);
            }
            if let Some(s) = bisect_tol {
                opts.tol = positive("--bisect-tol", *s)?;
            }
            if let Some(d) = delta {
                positive("delta", *d)?;
            }
            mt_report(&input, &b, *ray, *delta, (*points).max(2), &opts)
        }
        Command::Selftest { seed, cases } => {
            let checks = selftest::run(*seed, *cases);
            let mut t = Table::new(&["check", "cases", "failures", "status"]);
            for c in &checks {
                t.push(vec![c.name.to_string(), c.cases.to_string(), c.failures.to_string(), c.status().into()]);
            }
            let ok = checks.iter().all(|c| c.failures == 0);
            let json = json!({ "command": "selftest", "seed": seed, "cases": cases, "passed": ok, "checks": checks });
            Ok((Report { json, table: t }, if ok { 0 } else { 1 }))
        }
    }
}

fn validate(input: &Input) -> Outcome {
    let rays = input.rays();
    let rep = validate_fan(input.file.dim, &rays, &input.file.max_cones)?;
    let mut j = header("validate", input);
    let mut t = Table::new(&["check", "status", "detail"]);
    if !rep.passed() {
        for v in &rep.violations {
            t.push(vec!["fan".into(), "fail".into(), v.to_string()]);
        }
        j.insert("passed".into(), false.into());
        j.insert("violations".into(), serde_json::to_value(&rep.violations).unwrap());
        j.insert("message".into(), rep.to_string().into());
        let partial = Report { json: Value::Object(j), table: t };
        return Err(Failure { code: EXIT_VALIDATION, message: rep.to_string(), partial: Some(partial) });
    }
    t.push(vec!["fan".into(), "pass".into(), String::new()]);
    let pair = input.polarized()?;
    let s_l = nef_threshold(&pair.fan, &pair.polarization)?;
    t.push(vec!["polarization".into(), "pass".into(), String::new()]);
    j.insert("passed".into(), true.into());
    j.insert("dim".into(), pair.dim().into());
    j.insert("rays".into(), pair.fan.rays().len().into());
    j.insert("walls".into(), pair.fan.walls().len().into());
    j.insert("anticanonical".into(), pair.polarization.is_anticanonical().into());
    j.insert("nef_threshold".into(), serde_json::to_value(&s_l).unwrap());
    j.insert("volume".into(), q(&pair.polytope.volume()));
    j.insert("barycenter".into(), qs(&pair.polytope.barycenter()));
    j.insert("vertices".into(), pair.polytope.vertices().iter().map(|v| qs(v)).collect());
    j.insert("provenance".into(), provenance(&[("nef_threshold", EXACT.into()), ("volume", EXACT.into()), ("barycenter", EXACT.into())]));
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn delta(input: &Input, m: u64, weight: &WeightSpec) -> Outcome {
    let pair = input.polarized()?;
    let r = delta_m_bracket(&pair, m)?;
    let mut j = header("delta", input);
    j.insert("m".into(), m.into());
    j.insert("delta_m".into(), r.delta_m().map_or(Value::Null, q));
    j.insert("exact".into(), r.exact.into());
    j.insert("delta_m_t".into(), q(&r.delta_t));
    j.insert("lower".into(), q(&r.lower));
    j.insert("upper".into(), q(&r.upper));
    j.insert("nef_threshold".into(), serde_json::to_value(&r.s_l).unwrap());
    j.insert("witness_ray".into(), r.witness_ray.into());
    j.insert("tied_rays".into(), serde_json::to_value(&r.tied_rays).unwrap());
    j.insert("s_m".into(), qs(&r.per_ray));
    let mut prov = vec![("delta_m", EXACT.to_string()), ("lower", EXACT.into()), ("upper", EXACT.into()), ("s_m", EXACT.into())];
    let mut t = Table::new(&["m", "delta_m", "lower", "upper", "exact", "witness"]);
    let dm = r.delta_m().map_or_else(|| "-".to_string(), format_rational);
    let mut row = vec![m.to_string(), dm, format_rational(&r.lower), format_rational(&r.upper), r.exact.to_string(), r.witness_ray.to_string()];
    let xi = match weight {
        WeightSpec::None => None,
        WeightSpec::Xi(xi) => {
            if xi.len() != pair.dim() {
                return Err(Failure::validation(format!("xi has {} components, the fan has dimension {}", xi.len(), pair.dim())));
            }
            Some((xi.clone(), None))
        }
        WeightSpec::Soliton => {
            let sol = solve_soliton_vector(&pair, SolitonMode::Quantized(m), soliton::DEFAULT_TOL)?;
            Some((sol.xi.clone(), Some(sol)))
        }
    };
    if let Some((xi, sol)) = xi {
        let sections = Sections::new(&pair, m)?;
        let g = weighted::delta_g_m(&pair, &sections, &WeightFunction::exponential(xi.clone()), weighted::DEFAULT_PRECISION)?;
        j.insert("xi".into(), xi.iter().map(|x| num(*x)).collect());
        j.insert("delta_g_m".into(), num(g.value.to_f64()));
        j.insert("delta_g_witness_ray".into(), g.witness_ray.into());
        let xi_prov = match &sol {
            Some(s) => {
                j.insert("soliton_residual".into(), num(s.residual));
                newton(soliton::DEFAULT_TOL)
            }
            None => "input".into(),
        };
        prov.push(("xi", xi_prov));
        prov.push(("delta_g_m", mpfr(weighted::DEFAULT_PRECISION)));
        t.header.push("delta_g_m".into());
        row.push(cell(g.value.to_f64()));
    }
    t.push(row);
    j.insert("provenance".into(), provenance(&prov));
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn sweep(input: &Input, range: MRange) -> Outcome {
    let pair = input.polarized()?;
    let reports = range
        .levels()
        .into_par_iter()
        .map(|m| delta_m_bracket(&pair, m))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&["m", "delta_m", "lower", "upper", "witness"]);
    let mut rows = Vec::new();
    for r in &reports {
        let dm = r.delta_m().map_or_else(|| "-".to_string(), format_rational);
        t.push(vec![r.m.to_string(), dm, format_rational(&r.lower), format_rational(&r.upper), r.witness_ray.to_string()]);
        rows.push(json!({
            "m": r.m,
            "delta_m": r.delta_m().map_or(Value::Null, q),
            "exact": r.exact,
            "lower": q(&r.lower),
            "upper": q(&r.upper),
            "witness_ray": r.witness_ray,
        }));
    }
    let mut j = header("delta-sweep", input);
    j.insert("rows".into(), rows.into());
    j.insert("limit".into(), q(&delta_limit(&pair)?.value));
    j.insert("provenance".into(), provenance(&[("rows", EXACT.into()), ("limit", EXACT.into())]));
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn delta_t_json(j: &mut Map<String, Value>, key: &str, d: &DeltaT) {
    j.insert(key.into(), q(&d.value));
    j.insert("witness_ray".into(), d.witness_ray.into());
    j.insert("tied_rays".into(), serde_json::to_value(&d.tied_rays).unwrap());
    j.insert("per_ray".into(), qs(&d.per_ray));
}

fn limit(input: &Input) -> Outcome {
    let pair = input.polarized()?;
    let d = delta_limit(&pair)?;
    let mut j = header("limit", input);
    delta_t_json(&mut j, "delta_limit", &d);
    j.insert("barycenter".into(), qs(&pair.polytope.barycenter()));
    j.insert("provenance".into(), provenance(&[("delta_limit", EXACT.into()), ("barycenter", EXACT.into()), ("per_ray", EXACT.into())]));
    let mut t = Table::new(&["delta_limit", "witness"]);
    t.push(vec![format_rational(&d.value), d.witness_ray.to_string()]);
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn soliton_json(s: &SolitonSolution) -> Value {
    json!({
        "xi": s.xi.iter().map(|x| num(*x)).collect::<Vec<_>>(),
        "residual": num(s.residual),
        "iterations": s.iterations,
    })
}

fn soliton(input: &Input, range: Option<MRange>, tol: &Tolerances) -> Outcome {
    let pair = input.polarized()?;
    let ftol = match tol.fp_tol {
        Some(t) => positive("--fp-tol", t)?,
        None => soliton::DEFAULT_TOL,
    };
    let n = pair.dim();
    let mut cols = vec!["m".to_string()];
    cols.extend((1..=n).map(|i| format!("xi_{i}")));
    cols.extend(["residual".to_string(), "iterations".into(), "delta_g_m".into()]);
    let mut t = Table { header: cols, rows: Vec::new() };
    let mut rows = Vec::new();
    for m in range.map(|r| r.levels()).unwrap_or_default() {
        let sol = solve_soliton_vector(&pair, SolitonMode::Quantized(m), ftol)?;
        let sections = Sections::new(&pair, m)?;
        let g = weighted::delta_g_m(&pair, &sections, &WeightFunction::exponential(sol.xi.clone()), weighted::DEFAULT_PRECISION)?;
        let d = g.value.to_f64();
        let mut row = vec![m.to_string()];
        row.extend(sol.xi.iter().map(|x| cell(*x)));
        row.extend([cell(sol.residual), sol.iterations.to_string(), cell(d)]);
        t.push(row);
        let mut r = soliton_json(&sol);
        r["m"] = m.into();
        r["delta_g_m"] = num(d);
        rows.push(r);
    }
    let cont = solve_soliton_vector(&pair, SolitonMode::Continuous, ftol)?;
    let mut row = vec!["inf".to_string()];
    row.extend(cont.xi.iter().map(|x| cell(*x)));
    row.extend([cell(cont.residual), cont.iterations.to_string(), "-".into()]);
    t.push(row);
    let mut j = header("soliton", input);
    if rows.len() == 1 {
        for (k, v) in rows[0].as_object().unwrap() {
            j.insert(k.clone(), v.clone());
        }
    }
    j.insert("rows".into(), rows.into());
    j.insert("continuous".into(), soliton_json(&cont));
    j.insert(
        "provenance".into(),
        provenance(&[("xi", newton(ftol)), ("delta_g_m", mpfr(weighted::DEFAULT_PRECISION)), ("continuous", newton(ftol))]),
    );
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn coupled(input: &Input, levels: &Levels) -> Outcome {
    let fan = input.fan()?;
    let parts = input.components(&fan)?;
    if parts.is_empty() {
        return Err(Failure::validation("the input lists no components"));
    }
    let ms: Vec<u64> = match levels.0.len() {
        1 => vec![levels.0[0]; parts.len()],
        k if k == parts.len() => levels.0.clone(),
        k => return Err(Failure::validation(format!("{k} levels for {} components", parts.len()))),
    };
    let comps: Vec<CoupledComponent> =
        parts.iter().zip(&ms).map(|(p, &m)| CoupledComponent { polarization: p.clone(), m }).collect();
    let dm = coupled_delta_m(&fan, &comps)?;
    let dl = coupled_delta_limit(&fan, &parts)?;
    let ke = coupled_ke_criterion(&fan, &parts)?;
    let mut j = header("coupled", input);
    j.insert("m".into(), serde_json::to_value(&ms).unwrap());
    delta_t_json(&mut j, "coupled_delta_m", &dm);
    j.insert("coupled_delta_limit".into(), q(&dl.value));
    j.insert("coupled_ke_criterion".into(), ke.into());
    j.insert(
        "provenance".into(),
        provenance(&[("coupled_delta_m", EXACT.into()), ("coupled_delta_limit", EXACT.into()), ("per_ray", EXACT.into())]),
    );
    let mut t = Table::new(&["m", "coupled_delta_m", "coupled_delta_limit", "coupled_ke_criterion"]);
    let ml: Vec<String> = ms.iter().map(|m| m.to_string()).collect();
    t.push(vec![ml.join(","), format_rational(&dm.value), format_rational(&dl.value), ke.to_string()]);
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn basis(input: &Input, m: u64) -> Result<Arc<SectionBasis>, Failure> {
    let pair: PolarizedToric = input.polarized()?;
    Ok(Arc::new(SectionBasis::new(&pair, m)?))
}

fn apply(opts: &mut BalancedOptions, tol: &Tolerances) {
    if let Some(t) = tol.fp_tol {
        opts.tol = t;
    }
    if let Some(t) = tol.quad_tol {
        opts.quad.tol = t;
    }
    if let Some(e) = tol.escape {
        opts.escape = e;
    }
    if let Some(f) = tol.f_floor {
        opts.f_floor = f;
    }
    if let Some(n) = tol.max_iter {
        opts.max_iter = n;
    }
}

fn form_json(form: &HermitianForm) -> Value {
    match form {
        HermitianForm::Diagonal { log_mu } => json!({ "log_mu": log_mu.iter().map(|x| num(*x)).collect::<Vec<_>>() }),
        HermitianForm::Full { inv_gram } => {
            let rows: Vec<Value> = (0..inv_gram.nrows())
                .map(|i| (0..inv_gram.ncols()).map(|k| json!([num(inv_gram[(i, k)].re), num(inv_gram[(i, k)].im)])).collect())
                .collect();
            json!({ "inv_gram": rows })
        }
    }
}

fn trace_table(trace: &[TraceEntry]) -> Table {
    let mut t = Table::new(&["j", "d1m", "F_m"]);
    for e in trace {
        t.push(vec![e.j.to_string(), cell(e.d1m), cell(e.f_m)]);
    }
    t
}

fn trace_json(trace: &[TraceEntry]) -> Value {
    trace.iter().map(|e| json!({ "j": e.j, "d1m": num(e.d1m), "f_m": num(e.f_m), "gauge": num(e.gauge) })).collect()
}

fn iterate_report(
    input: &Input,
    b: &Arc<SectionBasis>,
    delta: f64,
    f: &Twist,
    start: &StartSpec,
    full: bool,
    opts: &BalancedOptions,
) -> Outcome {
    let mut h0 = match start {
        StartSpec::Identity => HermitianForm::identity(b.d()),
        StartSpec::Ray { index, time } => {
            let rays = b.pair.fan.rays().len();
            if *index >= rays {
                return Err(Failure::validation(format!("ray index {index} out of range (the fan has {rays} rays)")));
            }
            ray_from_valuation(b, &ToricValuation::from_ray(&b.pair.fan, *index))?.form_at(*time)
        }
    };
    if full {
        h0 = HermitianForm::full(h0.to_full())?;
    }
    let out = balanced_iterate(b, delta, f, &h0, opts)?;
    let mut j = header("balanced", input);
    j.insert("m".into(), b.m.into());
    j.insert("delta".into(), num(delta));
    j.insert("twist".into(), f.label().into());
    j.insert("outcome".into(), out.label().into());
    j.insert("coercive".into(), out.coercive().into());
    j.insert("iterations".into(), out.trace().len().into());
    let code = match &out {
        BalancedOutcome::Converged { form, residual, .. } => {
            j.insert("residual".into(), num(*residual));
            j.insert("form".into(), form_json(form));
            0
        }
        BalancedOutcome::Diverged { reason, .. } => {
            j.insert("reason".into(), reason.clone().into());
            0
        }
        BalancedOutcome::MaxIter { form, .. } => {
            j.insert("form".into(), form_json(form));
            EXIT_NUMERIC
        }
    };
    j.insert("trace".into(), trace_json(out.trace()));
    j.insert(
        "provenance".into(),
        provenance(&[
            ("residual", quadrature(opts.quad.tol)),
            ("f_m", quadrature(opts.quad.tol)),
            ("d1m", quadrature(opts.quad.tol)),
            ("form", quadrature(opts.quad.tol)),
        ]),
    );
    Ok((Report { json: Value::Object(j), table: trace_table(out.trace()) }, code))
}

fn threshold_report(input: &Input, b: &Arc<SectionBasis>, f: &Twist, opts: &ThresholdOptions) -> Outcome {
    let r = balanced_threshold(b, f, opts)?;
    let exact = delta_m_bracket(&b.pair, b.m)?;
    let mut t = Table::new(&["ray", "delta", "outcome", "iterations"]);
    for rt in &r.per_ray {
        for p in &rt.probes {
            t.push(vec![rt.ray.to_string(), cell(p.delta), p.outcome.into(), p.iterations.to_string()]);
        }
    }
    let mut j = header("balanced", input);
    j.insert("m".into(), b.m.into());
    j.insert("threshold".into(), num(r.value));
    j.insert("witness_ray".into(), r.witness_ray.into());
    j.insert("twist".into(), r.twist.clone().into());
    j.insert("per_ray".into(), serde_json::to_value(&r.per_ray).unwrap());
    j.insert("delta_m_t".into(), q(&exact.delta_t));
    j.insert("relative_gap".into(), num(r.value / to_f64(&exact.delta_t) - 1.0));
    j.insert(
        "provenance".into(),
        provenance(&[("threshold", bisection(opts.tol)), ("per_ray", bisection(opts.tol)), ("delta_m_t", EXACT.into())]),
    );
    Ok((Report { json: Value::Object(j), table: t }, 0))
}

fn mt_report(
    input: &Input,
    b: &Arc<SectionBasis>,
    ray: Option<usize>,
    delta: Option<f64>,
    points: usize,
    opts: &MtOptions,
) -> Outcome {
    let rays = ToricValuation::rays(&b.pair.fan);
    let (value, witness, per_ray) = match ray {
        Some(i) => {
            let v = rays.get(i).ok_or_else(|| Failure::validation(format!("ray index {i} out of range")))?;
            let r = ray_from_valuation(b, v)?.mt_threshold(opts)?;
            (r.value, i, vec![r])
        }
        None => {
            let e = delta_a_m_estimate(b, opts)?;
            (e.value, e.witness_ray, e.per_ray)
        }
    };
    let along = ray_from_valuation(b, &rays[witness])?;
    let d = delta.unwrap_or(value);
    let horizon = opts.horizon_for(b.m);
    let mut t = Table::new(&["t", "log_I"]);
    let mut curve = Vec::new();
    for k in 0..points {
        let time = horizon * k as f64 / (points - 1) as f64;
        let l = along.mt_log_integral(d, time, &opts.quad)?;
        t.push(vec![cell(time), cell(l)]);
        curve.push(json!([num(time), num(l)]));
    }
    let exact = delta_m_bracket(&b.pair, b.m)?;
    let mut j = header("mt-threshold", input);
    j.insert("m".into(), b.m.into());
    j.insert("delta_a_m".into(), num(value));
    j.insert("witness_ray".into(), witness.into());
    j.insert("per_ray".into(), serde_json::to_value(&per_ray).unwrap());
    j.insert("delta_m_t".into(), q(&exact.delta_t));
    j.insert("relative_gap".into(), num(value / to_f64(&exact.delta_t) - 1.0));
    j.insert("curve_delta".into(), num(d));
    j.insert("curve".into(), curve.into());
    j.insert(
        "provenance".into(),
        provenance(&[
            ("delta_a_m", bisection(opts.tol)),
            ("per_ray", bisection(opts.tol)),
            ("curve", quadrature(opts.quad.tol)),
            ("delta_m_t", EXACT.into()),
        ]),
    );
    Ok((Report { json: Value::Object(j), table: t }, 0))
}
