use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;

use super::config::*;
use super::report::{ExperimentReport, Series, SuiteItem, SuiteReport};
use super::{LabError, ModuleError};
use crate::grid_calculus::{assemble_p, quantize_weyl, GridFunction, SpacetimeGrid};
use crate::hamilton_flow::{build_escape_function, certify_nontrapping, verify_escape_inequality};
use crate::metric_symbols::{
    build_cutoff_family, conjugate_symbol, incoming_ellipticity_check, make_perturbed_minkowski, verify_accposi, verify_cutoff_family, verify_symbol_decay,
    verify_weight_inequality, CutoffParams, DecayLattice, InverseMetricField, WeightCase,
};
use crate::resolvent_lab::{
    flat_lattice_reference, lap_sweep, local_compactness_test, mourre_experiment, radiation_condition_test, schwartz_preservation_diagnostic,
    subelliptic_test, PowerOptions,
};
use crate::scattering::{compare_feynman_resolvent, default_gamma, extract_asymptotic_data, Evolution, EvolutionKind, Sign};
use crate::Complex64;

/// Results of one experiment before packaging.
#[derive(Default)]
struct Outcome {
    constants: BTreeMap<String, f64>,
    verdicts: BTreeMap<String, bool>,
    details: serde_json::Map<String, serde_json::Value>,
    series: Vec<Series>,
}

impl Outcome {
    fn constant(&mut self, k: &str, v: f64) {
        self.constants.insert(k.into(), v);
    }

    fn verdict(&mut self, k: &str, v: bool) {
        self.verdicts.insert(k.into(), v);
    }

    fn detail(&mut self, k: &str, v: &impl Serialize) -> Result<(), LabError> {
        let v = serde_json::to_value(v).map_err(|e| LabError::Io(e.to_string()))?;
        self.details.insert(k.into(), v);
        Ok(())
    }
}

fn ctx<E: Into<ModuleError>>(experiment: &'static str, stage: &'static str) -> impl FnOnce(E) -> LabError {
    move |e| LabError::Module { experiment, stage, source: e.into() }
}

/// Runs one experiment. With `config.out` set, the report and its CSV
/// series are written there.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport, LabError> {
    config.validate()?;
    let start = Instant::now();
    let outcome = if config.threads > 0 { crate::par::with_threads(config.threads, || dispatch(config)) } else { dispatch(config) }?;
    let pass = !outcome.verdicts.is_empty() && outcome.verdicts.values().all(|v| *v);
    let mut report = ExperimentReport {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: config.experiment.name().into(),
        config: config.clone(),
        constants: outcome.constants,
        verdicts: outcome.verdicts,
        pass,
        details: serde_json::Value::Object(outcome.details),
        series: outcome.series,
        artifacts: Vec::new(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &config.out {
        report.write(dir)?;
    }
    Ok(report)
}

/// Runs every config (in parallel across configs) and aggregates; a module
/// error fails its item without stopping the others.
pub fn suite(configs: &[ExperimentConfig]) -> SuiteReport {
    let items: Vec<SuiteItem> = crate::par::map_slice(configs, |c| match run(c) {
        Ok(r) => SuiteItem { experiment: r.experiment.clone(), pass: r.pass, error: None, report: Some(r) },
        Err(e) => SuiteItem { experiment: c.experiment.name().into(), pass: false, error: Some(e.to_string()), report: None },
    });
    let passed = items.iter().filter(|i| i.pass).count();
    let failed = items.len() - passed;
    SuiteReport { items, passed, failed, pass: failed == 0 }
}

fn dispatch(config: &ExperimentConfig) -> Result<Outcome, LabError> {
    let name = config.experiment.name();
    let field = make_perturbed_minkowski(config.metric.clone()).map_err(ctx(name, "metric"))?;
    let grid = config.grid_spec().build()?;
    let seed = config.seed;
    match &config.experiment {
        Experiment::MetricValidate(p) => metric_validate(&field, p, seed),
        Experiment::FlowCertify(p) => flow_certify(&field, p),
        Experiment::EscapeVerify(p) => escape_verify(&field, p, seed),
        Experiment::SymbolsAppendix(p) => symbols_appendix(&field, p, seed),
        Experiment::Mourre(p) => mourre(&field, &grid, p),
        Experiment::Lap(p) => lap(&field, &grid, p, seed),
        Experiment::Subelliptic(p) => subelliptic(&field, &grid, p, seed),
        Experiment::LocalCompactness(p) => local_compactness(&field, &grid, p, seed),
        Experiment::Schwartz(p) => schwartz(&field, &grid, p),
        Experiment::Radiation(p) => radiation(&field, &grid, p),
        Experiment::FeynmanCompare(p) => feynman_compare(&field, &grid, p),
    }
}

fn metric_validate(field: &InverseMetricField, p: &MetricValidateParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let mu = p.mu.unwrap_or(field.decay());
    let decay = verify_symbol_decay(field, mu, p.lattice);
    let accposi = verify_accposi(field, p.accposi_eps, p.accposi_radius, p.samples, seed);
    o.constant("decay_constant", decay.constant);
    o.constant("accposi_c4", accposi.c4);
    o.verdict("symbol_decay", decay.pass);
    o.verdict("accposi", accposi.pass);
    let mut s = Series::new("decay", &["half_width", "points", "constant"]);
    let l = p.lattice;
    s.push(vec![l.half_width, l.points as f64, decay.constant]);
    s.push(vec![l.half_width, 2.0 * l.points as f64, decay.refined_constant]);
    let big = DecayLattice { half_width: 2.0 * l.half_width, ..l };
    s.push(vec![big.half_width, big.points as f64, decay.enlarged_constant]);
    o.series.push(s);
    o.detail("decay", &decay)?;
    o.detail("accposi", &accposi)?;
    Ok(o)
}

fn flow_certify(field: &InverseMetricField, p: &FlowCertifyParams) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let cert = certify_nontrapping(field, p.radius, &p.options).map_err(ctx("flow-certify", "certify"))?;
    o.constant("escape_time", cert.escape_time);
    o.constant("lambda0", cert.lambda0);
    o.constant("seeds", cert.seed_count as f64);
    o.constant("timeouts", cert.timeouts as f64);
    o.verdict("certificate", cert.pass);
    let mut s = Series::new("certificate", &["radius", "escape_time", "lambda0", "seeds", "timeouts", "max_drift"]);
    s.push(vec![cert.radius, cert.escape_time, cert.lambda0, cert.seed_count as f64, cert.timeouts as f64, cert.max_drift]);
    o.series.push(s);
    o.detail("certificate", &cert)?;
    Ok(o)
}

fn escape_verify(field: &InverseMetricField, p: &EscapeVerifyParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let cert = certify_nontrapping(field, p.radius, &p.certify).map_err(ctx("escape-verify", "certify"))?;
    let esc = build_escape_function(field, &cert, p.delta, p.calibration, p.options.clone()).map_err(ctx("escape-verify", "build"))?;
    let rep = verify_escape_inequality(&esc, p.samples, seed).map_err(ctx("escape-verify", "verify"))?;
    o.constant("c1", rep.c1);
    o.constant("m", rep.m);
    o.constant("l", rep.l);
    o.constant("violations", rep.violations as f64);
    o.verdict("escape_inequality", rep.pass);
    let mut s = Series::new("escape", &["m", "l", "delta", "lambda0", "c1", "samples", "violations"]);
    s.push(vec![rep.m, rep.l, rep.delta, rep.lambda0, rep.c1, rep.samples as f64, rep.violations as f64]);
    o.series.push(s);
    o.detail("certificate", &cert)?;
    o.detail("escape", &rep)?;
    Ok(o)
}

fn symbols_appendix(field: &InverseMetricField, p: &SymbolsAppendixParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let mut s = Series::new("inequalities", &["index", "constant", "samples", "violations"]);
    let cases = [
        ("weight_upper", &p.weight, WeightCase::Upper { r: p.r }),
        ("weight_incoming", &p.weight, WeightCase::Incoming { eps: p.eps, r: p.r, big_r: p.big_r }),
        ("weight_outgoing", &p.outgoing_weight, WeightCase::Outgoing { eps: p.eps, r: p.r, big_r: p.big_r }),
    ];
    let mut details = Vec::new();
    for (k, (label, weight, case)) in cases.into_iter().enumerate() {
        let r = verify_weight_inequality(field, weight, case, p.samples, seed + k as u64);
        o.constant(label, r.constant);
        o.verdict(label, r.pass);
        s.push(vec![k as f64, r.constant, r.samples as f64, r.violations as f64]);
        details.push(serde_json::to_value(&r).map_err(|e| LabError::Io(e.to_string()))?);
    }
    o.details.insert("weight".into(), serde_json::Value::Array(details));
    let cutoffs = [
        ("cutoff_mid", CutoffParams::mid(p.mid[0], p.mid[1], p.eps.min(0.05), p.r, p.big_r)),
        ("cutoff_incoming", CutoffParams::incoming(p.eps, p.r, p.big_r)),
        ("cutoff_outgoing", CutoffParams::outgoing(p.eps, p.r, p.big_r)),
    ];
    let mut details = Vec::new();
    for (k, (label, params)) in cutoffs.into_iter().enumerate() {
        let fam = build_cutoff_family(field, params, p.samples, seed + 10 + k as u64).map_err(ctx("symbols-appendix", "cutoff"))?;
        let r = verify_cutoff_family(&fam, p.samples, seed + 20 + k as u64);
        let violations = r.inequality_violations + r.support_violations + r.ellipticity_violations;
        o.constant(label, r.c_b1.max(r.c_b2).max(r.c_e));
        o.verdict(label, r.pass);
        s.push(vec![(3 + k) as f64, r.c_b1.max(r.c_b2).max(r.c_e), r.samples as f64, violations as f64]);
        details.push(serde_json::to_value(&r).map_err(|e| LabError::Io(e.to_string()))?);
    }
    o.details.insert("cutoff".into(), serde_json::Value::Array(details));
    let acc = verify_accposi(field, p.accposi_eps, p.big_r, p.samples, seed + 30);
    o.constant("accposi_c4", acc.c4);
    o.verdict("accposi", acc.pass);
    s.push(vec![6.0, acc.c4, acc.samples as f64, f64::from(u8::from(!acc.pass))]);
    let ell = incoming_ellipticity_check(p.ellipticity_eps, p.big_r, p.m0, p.samples, seed + 40);
    for (k, v) in [("c1", ell.c1), ("c2", ell.c2), ("c3", ell.c3)] {
        o.constant(&format!("ellipticity_{k}"), v);
    }
    o.verdict("ellipticity", ell.pass);
    s.push(vec![7.0, ell.c1.min(ell.c2).min(ell.c3), ell.samples as f64, f64::from(u8::from(!ell.pass))]);
    o.series.push(s);
    o.detail("accposi", &acc)?;
    o.detail("ellipticity", &ell)?;
    Ok(o)
}

fn mourre(field: &InverseMetricField, grid: &SpacetimeGrid, p: &MourreParams) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let fine = SpacetimeGrid::new(grid.lt, grid.ly, p.refined_n, p.refined_n).map_err(ctx("mourre", "grid"))?;
    let mut s = Series::new("eigenvalues", &["n", "index", "eigenvalue"]);
    let mut reports = Vec::new();
    for g in [*grid, fine] {
        let op = assemble_p(field, &g).map_err(ctx("mourre", "assemble"))?;
        let a = quantize_weyl(&g, conjugate_symbol);
        let r = mourre_experiment(&op, &a, &p.window).map_err(ctx("mourre", "commutator"))?;
        for (i, e) in r.eigenvalues.iter().enumerate() {
            s.push(vec![g.ny as f64, i as f64, *e]);
        }
        reports.push(r);
    }
    let (a, b) = (&reports[0], &reports[1]);
    o.constant("threshold", a.threshold);
    o.constant("below_threshold_coarse", a.below_threshold as f64);
    o.constant("below_threshold_fine", b.below_threshold as f64);
    o.constant("rank_coarse", a.rank as f64);
    o.constant("rank_fine", b.rank as f64);
    o.verdict("window_excludes_zero", a.window_excludes_zero);
    o.verdict("below_threshold_stable", b.below_threshold <= a.below_threshold);
    o.series.push(s);
    o.detail("reports", &reports)?;
    Ok(o)
}

fn lap(field: &InverseMetricField, grid: &SpacetimeGrid, p: &LapParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let op = assemble_p(field, grid).map_err(ctx("lap", "assemble"))?;
    let cap = p.cap.spec(grid);
    let power = PowerOptions { seed: p.power.seed ^ seed, ..p.power };
    let sweep = lap_sweep(&op, &cap, p.lambda, p.s, &p.eps, &power).map_err(ctx("lap", "sweep"))?;
    let control = lap_sweep(&op, &cap, p.lambda, p.control_s, &p.eps, &power).map_err(ctx("lap", "control"))?;
    let last = *sweep.norms.last().unwrap_or(&f64::NAN);
    o.constant("limit_norm", last);
    o.constant("spread", sweep.spread);
    o.constant("control_spread", control.spread);
    o.verdict("stabilized", sweep.stabilized);
    o.verdict("control_not_stabilized", !control.stabilized);
    if field.is_flat() && field.spec().potential_amplitude == 0.0 {
        let reference = flat_lattice_reference(grid, &cap, p.lambda, p.s, &power).map_err(ctx("lap", "oracle"))?;
        o.constant("oracle_norm", reference);
        o.constant("oracle_rel_diff", (last - reference).abs() / reference);
        o.verdict("matches_oracle", (last - reference).abs() <= p.oracle_tol * reference);
    }
    let mut s = Series::new("sweep", &["eps", "norm", "control_norm"]);
    for (k, e) in sweep.eps.iter().enumerate() {
        s.push(vec![*e, sweep.norms[k], control.norms[k]]);
    }
    o.series.push(s);
    o.detail("sweep", &sweep)?;
    o.detail("control", &control)?;
    Ok(o)
}

fn fit_series(coarse: &SpacetimeGrid, v: &crate::resolvent_lab::StabilityVerdict, label: f64, s: &mut Series) {
    s.push(vec![label, coarse.ny as f64, v.coarse.constant]);
    s.push(vec![label, 2.0 * coarse.ny as f64, v.fine.constant]);
}

fn subelliptic(field: &InverseMetricField, grid: &SpacetimeGrid, p: &SubellipticParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let z = Complex64::new(p.z[0], p.z[1]);
    let v = subelliptic_test(field, grid, z, p.k, p.l, p.trials, seed).map_err(ctx("subelliptic", "fit"))?;
    o.constant("constant_coarse", v.coarse.constant);
    o.constant("constant_fine", v.fine.constant);
    o.constant("ratio", v.ratio);
    o.verdict("stable", v.stable);
    let mut s = Series::new("fit", &["k", "n", "constant"]);
    fit_series(grid, &v, p.k, &mut s);
    o.series.push(s);
    o.detail("fit", &v)?;
    Ok(o)
}

fn local_compactness(field: &InverseMetricField, grid: &SpacetimeGrid, p: &LocalCompactnessParams, seed: u64) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let v = local_compactness_test(field, grid, p.delta, p.trials, seed).map_err(ctx("local-compactness", "fit"))?;
    let c = local_compactness_test(field, grid, p.control_delta, p.trials, seed).map_err(ctx("local-compactness", "control"))?;
    o.constant("ratio", v.ratio);
    o.constant("control_ratio", c.ratio);
    o.verdict("stable", v.stable);
    o.verdict("control_grows", c.grows);
    let mut s = Series::new("fit", &["delta", "n", "constant"]);
    fit_series(grid, &v, p.delta, &mut s);
    fit_series(grid, &c, p.control_delta, &mut s);
    o.series.push(s);
    o.detail("fit", &v)?;
    o.detail("control", &c)?;
    Ok(o)
}

fn schwartz(field: &InverseMetricField, grid: &SpacetimeGrid, p: &SchwartzParams) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let w2 = p.source_width * p.source_width;
    let source = move |x: [f64; 2]| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / w2).exp(), 0.0);
    let z = Complex64::new(p.z[0], p.z[1]);
    let t = schwartz_preservation_diagnostic(field, grid, &p.cap.spec(grid), z, source, &p.orders).map_err(ctx("schwartz", "diagnostic"))?;
    let mut s = Series::new("seminorms", &["order", "coarse", "fine", "rel_change"]);
    for r in &t.rows {
        s.push(vec![r.order, r.coarse, r.fine, r.rel_change]);
        o.constant(&format!("rel_change_order_{}", r.order), r.rel_change);
    }
    o.verdict("stable", t.rows.iter().all(|r| r.stable));
    o.series.push(s);
    o.detail("table", &t)?;
    Ok(o)
}

fn radiation(field: &InverseMetricField, grid: &SpacetimeGrid, p: &RadiationParams) -> Result<Outcome, LabError> {
    let mut o = Outcome::default();
    let op = assemble_p(field, grid).map_err(ctx("radiation", "assemble"))?;
    let k = p.source_wavenumber;
    let w = (k * k + p.spec.m0 * p.spec.m0).sqrt();
    let f = GridFunction::from_fn(*grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 4.5).exp() * (w * x[0]).cos() * (k * x[1]).cos(), 0.0));
    let r = radiation_condition_test(&op, field, &p.cap.spec(grid), &f, &p.spec).map_err(ctx("radiation", "probe"))?;
    let mut s = Series::new("masses", &["radius", "incoming", "outgoing"]);
    for (i, radius) in r.radii.iter().enumerate() {
        s.push(vec![*radius, r.incoming[i], r.outgoing[i]]);
    }
    o.constant("incoming_last", *r.incoming.last().unwrap_or(&f64::NAN));
    o.constant("outgoing_last", *r.outgoing.last().unwrap_or(&f64::NAN));
    o.verdict("incoming_decays", r.incoming_decays);
    o.verdict("outgoing_persists", !r.outgoing_decays);
    o.series.push(s);
    o.detail("masses", &r)?;
    Ok(o)
}

/// `ψ(t/width)·exp(−y²/2)` with `ψ(s) = exp(−1/(1 − s²))` on `|s| < 1`.
pub(crate) fn compact_source(grid: SpacetimeGrid, width: f64) -> GridFunction {
    GridFunction::from_fn(grid, |x| {
        let s = x[0] / width;
        let b = if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
        Complex64::new(b * (-x[1] * x[1] / 2.0).exp(), 0.0)
    })
}

fn feynman_compare(field: &InverseMetricField, grid: &SpacetimeGrid, p: &FeynmanCompareParams) -> Result<Outcome, LabError> {
    let name = "feynman-compare";
    let mut o = Outcome::default();
    let f = compact_source(*grid, p.source_width);
    let (rep, sol) = compare_feynman_resolvent(field, p.m0, &f, &p.cap.spec(grid), &p.comparison).map_err(ctx(name, "compare"))?;
    let asym = extract_asymptotic_data(&sol.evolution, &sol.record, p.window).map_err(ctx(name, "asymptotics"))?;
    let (gpp, gmm) = (asym.relative(Sign::Plus, Sign::Plus), asym.relative(Sign::Minus, Sign::Minus));
    o.constant("outgoing_limit", rep.outgoing_limit);
    o.constant("incoming_limit", rep.incoming_limit);
    o.constant("residual", rep.residual);
    o.constant("rho_change", rep.rho_change);
    if let Some(c) = rep.cond {
        o.constant("boundary_map_cond", c);
    }
    o.constant("g_plus_plus_relative", gpp);
    o.constant("g_minus_minus_relative", gmm);
    o.verdict("outgoing_converges", rep.outgoing_limit <= p.comparison.limit);
    o.verdict("outgoing_decreasing", rep.outgoing_decreasing);
    o.verdict("incoming_separated", rep.control_separated);
    o.verdict("amplitudes", gpp <= p.amplitude_limit && gmm <= p.amplitude_limit);
    let mut s = Series::new("distances", &["eps", "outgoing", "incoming"]);
    for (k, e) in rep.eps.iter().enumerate() {
        s.push(vec![*e, rep.outgoing[k], rep.incoming[k]]);
    }
    o.series.push(s);
    if let Some(r) = &p.remainder {
        let end = *r.window.times().last().unwrap_or(&r.window.start);
        let evo = Evolution::new(field, sol.evolution.line, p.m0, sol.evolution.step, EvolutionKind::Perturbed, end).map_err(ctx(name, "evolution"))?;
        let long = extract_asymptotic_data(&evo, &sol.record, r.window).map_err(ctx(name, "remainder"))?;
        let gamma = r.gamma.unwrap_or_else(|| default_gamma(field.decay()));
        let bound = 1.0 - 2.0 * gamma + r.slack;
        let exponent = long.worst_exponent().unwrap_or(f64::NAN);
        o.constant("gamma", gamma);
        o.constant("remainder_exponent", exponent);
        o.constant("remainder_bound", bound);
        o.verdict("remainder_rate", exponent <= bound);
        let mut s = Series::new("increments", &["t", "future", "past"]);
        for (k, t) in r.window.times().iter().skip(1).enumerate() {
            s.push(vec![*t, long.increments[0][k], long.increments[1][k]]);
        }
        o.series.push(s);
        o.detail("remainder", &serde_json::json!({ "increments": long.increments, "exponents": long.remainder_exponent }))?;
    }
    o.detail("comparison", &rep)?;
    o.detail("asymptotic_norms", &asym.norms)?;
    Ok(o)
}
