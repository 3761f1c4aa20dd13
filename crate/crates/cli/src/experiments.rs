//! Experiment recipes. Each returns a deterministic report.

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value as Json};

use hyplab_core::currents::bms_ratio_convergence;
use hyplab_core::group::{classes_of_length, enumerate_ball, Word, DEFAULT_CAP};
use hyplab_core::moduli::{comparability_c, delta_from_spectra, dil_from_spectra, spectra_pair, strong_length_from_spectra};
use hyplab_core::potentials::{
    delta_hyperbolicity, spectrum, strong_hyp_defect, GenSet, MetricPotential, Potential, ScanConfig, StableConfig,
    WordMetric,
};
use hyplab_core::randwalk::{
    drift, entropy_over_drift, entropy_upper, thickened_sphere, ConvolveConfig, FiniteMeasure, GreenConfig,
    GreenPotential, GreenTable,
};
use hyplab_core::spectrum::{
    growth_rate, manhattan_curve, mean_distortion_avg, mean_distortion_slope, sublevel_classes, JointTable,
};

use crate::cache::{decode_f64, encode_f64, Cache};
use crate::config::ExperimentConfig;
use crate::report::{Check, Quantity, Report, Status};

pub const EXPERIMENTS: [&str; 11] = [
    "ball",
    "classes",
    "hyperbolicity",
    "green",
    "manhattan",
    "distortion",
    "lambda",
    "moduli",
    "certificates",
    "green-density",
    "fundamental",
];

/// Experiment run for each acceptance criterion 1..=9.
pub fn criterion_experiment(n: usize) -> Option<&'static str> {
    const MAP: [&str; 9] =
        ["green", "ball", "hyperbolicity", "manhattan", "distortion", "lambda", "certificates", "green-density", "fundamental"];
    n.checked_sub(1).and_then(|i| MAP.get(i).copied())
}

pub fn run(name: &str, cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    cfg.validate()?;
    let r = match name {
        "ball" => ball(cfg, cache),
        "classes" => classes(cfg, cache),
        "hyperbolicity" => hyperbolicity(cfg),
        "green" => green(cfg),
        "manhattan" => manhattan(cfg, cache),
        "distortion" => distortion(cfg, cache),
        "lambda" => lambda(cfg, cache),
        "moduli" => moduli(cfg),
        "certificates" => certificates(cfg),
        "green-density" => green_density(cfg),
        "fundamental" => fundamental(cfg),
        other => bail!("unknown experiment {other:?}; expected one of {}", EXPERIMENTS.join(", ")),
    };
    r.with_context(|| format!("experiment {name}"))
}

/// Reports echo the config minus execution settings, which do not change results.
fn report(name: &str, cfg: &ExperimentConfig) -> Report {
    let mut echo = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = echo.as_object_mut() {
        m.remove("threads");
        m.remove("cache_dir");
    }
    Report::new(name, echo)
}

fn note_cache(what: &str, hit: bool) {
    if hit {
        eprintln!("cache hit: {what}");
    }
}

fn csv_of(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(header).expect("in memory");
    for r in rows {
        wr.write_record(r).expect("in memory");
    }
    String::from_utf8(wr.into_inner().expect("in memory")).expect("utf8")
}

fn standard(cfg: &ExperimentConfig) -> Potential {
    Arc::new(WordMetric::standard(cfg.rank))
}

fn comparison(cfg: &ExperimentConfig) -> Result<(Potential, String)> {
    let gens = cfg.gens()?;
    let label = gens.words().iter().map(Word::to_string).collect::<Vec<_>>().join(" ");
    Ok((Arc::new(WordMetric::named(gens, "d_S'")), label))
}

/// Powers for stable lengths of Green metrics, which settle only at large lengths.
fn green_stable(cfg: &ExperimentConfig) -> StableConfig {
    StableConfig { kmax: cfg.green_radius, ..StableConfig::default() }
}

fn green_config(cfg: &ExperimentConfig, radius: usize) -> GreenConfig {
    GreenConfig { eps_tail: cfg.eps_tail, kmax: cfg.kmax, ..GreenConfig::default() }.with_radius(radius)
}

/// Joint (φ, ψ) counts over {ψ < tmax}, through the cache.
fn joint_table(cache: &Cache, phi: &dyn MetricPotential, psi: &dyn MetricPotential, labels: (&str, &str), tmax: f64) -> Result<JointTable> {
    let inputs = json!({"rank": phi.rank(), "phi": labels.0, "psi": labels.1, "tmax": tmax});
    let (flat, hit) = cache.get_or_insert_f64("joint", &inputs, || {
        let t = JointTable::build(phi, psi, tmax, DEFAULT_CAP)?;
        Ok(t.rows().iter().flat_map(|r| [r.0, r.1, r.2]).collect())
    })?;
    note_cache("joint table", hit);
    let rows = flat.chunks_exact(3).map(|c| (c[0], c[1], c[2])).collect();
    Ok(JointTable::from_rows(phi.name(), psi.name(), tmax, rows))
}

/// Sphere counts by enumeration and the growth bracket of the standard metric.
pub fn ball(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    let mut rep = report("ball", cfg);
    let (rank, r) = (cfg.rank, cfg.radius_or(12));
    let inputs = json!({"rank": rank, "radius": r});
    let (bytes, hit) = cache.get_or_insert("ball", &inputs, || {
        let mut out = Vec::new();
        for w in enumerate_ball(rank, r, DEFAULT_CAP)? {
            out.push(w.len() as u8);
            out.extend_from_slice(w.letters());
        }
        Ok(out)
    })?;
    note_cache("ball", hit);
    let mut counts = vec![0u128; r + 1];
    let mut i = 0;
    while i < bytes.len() {
        let n = bytes[i] as usize;
        counts[n] += 1;
        i += 1 + n;
    }
    let formula = |n: usize| if n == 0 { 1 } else { (2 * rank as u128) * (2 * rank as u128 - 1).pow(n as u32 - 1) };
    let mismatches = (0..=r).filter(|&n| counts[n] != formula(n)).count();
    rep.check(Check::le("sphere counts differing from 2r(2r-1)^(n-1)", mismatches as f64, 0.0, "exact", Status::Exact));
    let tmax = cfg.tmax_or(12.0);
    let g = growth_rate(standard(cfg).as_ref(), tmax, DEFAULT_CAP)?;
    let v = ((2 * rank - 1) as f64).ln();
    rep.check(Check::le("growth bracket lower <= log(2r-1)", g.lower, v, "bracket lower", Status::Heuristic));
    rep.check(Check::ge("growth bracket upper >= log(2r-1)", g.upper, v, "bracket upper", Status::Heuristic));
    rep.check(Check::le("growth bracket width", g.width(), 0.05, "bracket width", Status::Heuristic));
    rep.results = json!({
        "ball_size": counts.iter().sum::<u128>().to_string(),
        "sphere_counts": counts.iter().map(u128::to_string).collect::<Vec<_>>(),
        "growth": Quantity::heuristic(g.point, g.lower, g.upper),
        "growth_levels": g.levels,
    });
    rep.table = Some(csv_of(
        &["n", "count", "formula"],
        (0..=r).map(|n| vec![n.to_string(), counts[n].to_string(), formula(n).to_string()]),
    ));
    Ok(rep)
}

/// Conjugacy classes by core length, checked against the count of
/// cyclically reduced words: a class whose primitive root has length p has
/// exactly p rotations.
pub fn classes(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    let mut rep = report("classes", cfg);
    let (rank, r) = (cfg.rank, cfg.radius_or(8));
    let inputs = json!({"rank": rank, "radius": r});
    let (bytes, hit) = cache.get_or_insert("classes", &inputs, || {
        let mut text = String::new();
        for n in 1..=r {
            for c in classes_of_length(rank, n) {
                text.push_str(&c.to_string());
                text.push('\n');
            }
        }
        Ok(text.into_bytes())
    })?;
    note_cache("classes", hit);
    let text = String::from_utf8(bytes).context("class cache is not utf8")?;
    let mut rows = Vec::new();
    let mut bad = 0;
    let q = (2 * rank - 1) as u128;
    let mut per_len: Vec<(u128, u128, u128)> = vec![(0, 0, 0); r + 1];
    for line in text.lines() {
        let c = hyplab_core::group::ConjClassRep::parse(rank, line)?;
        let (root, _) = c.primitive_root();
        let e = &mut per_len[c.len()];
        e.0 += 1;
        e.1 += c.is_primitive() as u128;
        e.2 += root.len() as u128;
    }
    for (n, &(count, prim, rotations)) in per_len.iter().enumerate().skip(1) {
        let even = if n % 2 == 0 { 2 } else { 0 };
        let words = q.pow(n as u32) + 1 + (rank as u128 - 1) * even;
        bad += (rotations != words) as usize;
        rows.push(vec![n.to_string(), count.to_string(), prim.to_string(), words.to_string()]);
    }
    rep.check(Check::le("lengths where rotations miss the cyclically reduced words", bad as f64, 0.0, "exact", Status::Exact));
    rep.results = json!({ "counts": rows.iter().map(|r| json!({"n": r[0], "classes": r[1], "primitive": r[2]})).collect::<Vec<_>>() });
    rep.table = Some(csv_of(&["n", "classes", "primitive", "cyclically_reduced_words"], rows));
    Ok(rep)
}

/// δ and strong-hyperbolicity defects of the standard metric.
pub fn hyperbolicity(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("hyperbolicity", cfg);
    let n = cfg.radius_or(4);
    let d = standard(cfg);
    let scan = ScanConfig { seed: cfg.seed, ..ScanConfig::default() };
    let delta = delta_hyperbolicity(d.as_ref(), n, &scan)?;
    rep.check(Check::le("delta", delta.value + delta.slack, 0.0, "value + slack", Status::Exact));
    rep.check(Check::ge("delta scan exhaustive", delta.exhaustive as u8 as f64, 1.0, "exact", Status::Exact));
    let mut defects = Vec::new();
    for eps in [0.5, 1.0, 2.0] {
        let s = strong_hyp_defect(d.as_ref(), eps, n, &scan)?;
        rep.check(Check::le(format!("strong hyperbolicity defect eps={eps}"), s.value + s.slack, 0.0, "value + slack", Status::Exact));
        rep.check(Check::ge(format!("defect scan exhaustive eps={eps}"), s.exhaustive as u8 as f64, 1.0, "exact", Status::Exact));
        defects.push(json!({"eps": eps, "defect": s}));
    }
    rep.results = json!({"radius": n, "delta": delta, "strong": defects});
    Ok(rep)
}

/// d_μ(o,g) ≤ log(#S)|g|_S + log(G(o,o)(1 − 1/#S)) on the ball, with d_μ's
/// upper end against G(o,o)'s lower end.
fn green_upper_checks(rep: &mut Report, table: &GreenTable, mu: &FiniteMeasure, words: &[Word]) -> Result<Json> {
    let rank = mu.rank();
    let support: Vec<Word> = mu.atoms().iter().map(|a| a.0.clone()).collect();
    let n_s = support.len() as f64;
    let ws = WordMetric::new(GenSet::new(rank, support)?);
    let g_oo = table.get(&Word::identity(rank))?;
    let offset = (g_oo.lower * (1.0 - 1.0 / n_s)).ln();
    let mut worst = (f64::NEG_INFINITY, Word::identity(rank));
    for g in words {
        let lhs = table.metric(g)?.hi();
        let rhs = n_s.ln() * ws.distance(g)? as f64 + offset;
        if lhs - rhs > worst.0 {
            worst = (lhs - rhs, g.clone());
        }
    }
    rep.check(Check::le(
        "green upper bound by support word length: max(d_mu - bound)",
        worst.0,
        0.0,
        "d_mu upper, G(o,o) lower",
        Status::Heuristic,
    ));
    Ok(json!({"support_size": support_len(mu), "offset": offset, "worst_margin": worst.0, "worst_element": worst.1.to_string()}))
}

fn support_len(mu: &FiniteMeasure) -> usize {
    mu.atoms().len()
}

fn is_simple(mu: &FiniteMeasure) -> bool {
    mu.atoms() == FiniteMeasure::simple(mu.rank()).atoms()
}

/// Green metric on the ball, with the tree oracle for the simple walk.
pub fn green(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("green", cfg);
    let mu = cfg.measure()?;
    if !mu.is_symmetric() {
        bail!("the Green metric needs a symmetric step law; the given measure is not symmetric");
    }
    let r = cfg.radius_or(5);
    let table = GreenTable::new(&mu, &green_config(cfg, r))?;
    let words = enumerate_ball(cfg.rank, r, DEFAULT_CAP)?;
    let g_oo = table.get(&Word::identity(cfg.rank))?;
    let mut results = json!({
        "radius": r,
        "route": if table.is_radial() { "radial" } else { "ball" },
        "G_oo": Quantity::heuristic(g_oo.lower, g_oo.lower, g_oo.upper()),
        "K": g_oo.k,
        "rho_hat": g_oo.rho_hat,
        "tail_heuristic": g_oo.heuristic_flag,
    });
    if is_simple(&mu) {
        // Hitting probability of a neighbour: (2r−1)u² − 2r·u + 1 = 0, smaller root.
        let two_r = 2.0 * cfg.rank as f64;
        let (a, b, c) = ((two_r - 1.0) / two_r, -1.0, 1.0 / two_r);
        let u = (-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
        let step = -u.ln();
        let (mut misses, mut max_width) = (0usize, 0.0f64);
        for g in &words {
            let iv = table.metric(g)?.interval();
            let target = g.len() as f64 * step;
            misses += !(iv.lo <= target && target <= iv.hi) as usize;
            max_width = max_width.max(iv.width());
        }
        rep.check(Check::le("elements whose d_mu interval misses |g| log(1/u)", misses as f64, 0.0, "interval", Status::Heuristic));
        rep.check(Check::le("max d_mu interval width", max_width, 1e-3, "interval width", Status::Heuristic));
        let g_a = table.get(&Word::generator(cfg.rank, 1)?)?;
        let (lo, hi) = (g_a.lower / g_oo.upper(), g_a.upper() / g_oo.lower);
        rep.check(Check::le("G(o,a)/G(o,o) lower <= u", lo, u, "ratio lower", Status::Heuristic));
        rep.check(Check::ge("G(o,a)/G(o,o) upper >= u", hi, u, "ratio upper", Status::Heuristic));
        results["u"] = json!(Quantity::exact(u));
        results["u_estimate"] = json!(Quantity::heuristic(g_a.lower / g_oo.lower, lo, hi));
        results["max_width"] = json!(max_width);
    }
    results["upper_bound"] = green_upper_checks(&mut rep, &table, &mu, &words)?;
    rep.results = results;
    let mut buf = Vec::new();
    table.write_csv(&mut buf, r)?;
    rep.table = Some(String::from_utf8(buf)?);
    Ok(rep)
}

/// Manhattan curves: the normalized self-pair of the standard metric and
/// the normalized pair (d_S', d_S).
pub fn manhattan(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    let mut rep = report("manhattan", cfg);
    let tmax = cfg.tmax_or(12.0);
    let d = standard(cfg);
    let own = joint_table(cache, d.as_ref(), d.as_ref(), ("std", "std"), tmax)?;
    let v = own.growth_psi()?;
    let norm = own.scaled(v.point, v.point);
    let mut self_samples = Vec::new();
    for &t in &cfg.t_grid {
        let s = norm.theta(t)?;
        rep.check(Check::le(format!("self-pair |theta({t}) - (1 - t)| - width"), (s.theta - (1.0 - t)).abs() - s.width(), 0.0, "bracket", Status::Heuristic));
        rep.check(Check::le(format!("self-pair bracket width at t={t}"), s.width(), 0.05, "bracket width", Status::Heuristic));
        self_samples.push(s);
    }
    let (phi, label) = comparison(cfg)?;
    let pair = joint_table(cache, phi.as_ref(), d.as_ref(), (&label, "std"), tmax)?;
    let v_phi = growth_rate(phi.as_ref(), cfg.tmax_phi, DEFAULT_CAP)?;
    let v_psi = pair.growth_psi()?;
    let pn = pair.scaled(v_phi.point, v_psi.point);
    let grid: Vec<f64> = (-4..=6).map(|i| i as f64 * 0.25).collect();
    let curve = manhattan_curve(&pn, &grid)?;
    rep.check(Check::ge("pair curve convex", curve.convex as u8 as f64, 1.0, "second differences vs bracket slack", Status::Heuristic).soft());
    rep.check(Check::ge("pair curve decreasing", curve.decreasing as u8 as f64, 1.0, "midpoints", Status::Heuristic).soft());
    let at = |t: f64| curve.samples.iter().find(|s| s.t == t).map(|s| s.theta).unwrap_or(f64::NAN);
    rep.check(Check::le("pair |theta(0) - 1|", (at(0.0) - 1.0).abs(), 0.05, "midpoint", Status::Heuristic).soft());
    rep.check(Check::le("pair |theta(1)|", at(1.0).abs(), 0.05, "midpoint", Status::Heuristic).soft());
    rep.results = json!({
        "self_growth": Quantity::heuristic(v.point, v.lower, v.upper),
        "self_samples": self_samples,
        "phi_growth": Quantity::heuristic(v_phi.point, v_phi.lower, v_phi.upper),
        "psi_growth": Quantity::heuristic(v_psi.point, v_psi.lower, v_psi.upper),
        "pair_curve": curve,
    });
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    rep.table = Some(String::from_utf8(buf)?);
    Ok(rep)
}

struct DistortionRoutes {
    avg: hyplab_core::spectrum::DistortionAverage,
    slope: hyplab_core::spectrum::SlopeEstimate,
}

fn distortion_routes(cfg: &ExperimentConfig, cache: &Cache, phi: &dyn MetricPotential, label: &str) -> Result<DistortionRoutes> {
    let d = standard(cfg);
    let scfg = StableConfig::default();
    let sample = sublevel_classes(d.as_ref(), cfg.t, None, &scfg)?;
    let phi_spec = spectrum(phi, &sample.classes(), &scfg)?;
    let avg = mean_distortion_avg(&phi_spec, &sample.psi, cfg.t)?;
    let table = joint_table(cache, phi, d.as_ref(), (label, "std"), cfg.tmax_or(12.0))?;
    let slope = mean_distortion_slope(&table, cfg.h)?;
    Ok(DistortionRoutes { avg, slope })
}

/// τ(d_S'/d_S) by class averaging and by the slope of θ at 0.
pub fn distortion(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    let mut rep = report("distortion", cfg);
    let (phi, label) = comparison(cfg)?;
    let DistortionRoutes { avg, slope } = distortion_routes(cfg, cache, phi.as_ref(), &label)?;
    let combined = (avg.upper - avg.lower) + (slope.upper - slope.lower);
    rep.check(Check::le("|avg - slope| - combined bracket", (avg.value - slope.value).abs() - combined, 0.05, "brackets", Status::Heuristic));
    let v_phi = growth_rate(phi.as_ref(), cfg.tmax_phi, DEFAULT_CAP)?;
    let v_psi = growth_rate(standard(cfg).as_ref(), cfg.tmax_or(12.0), DEFAULT_CAP)?;
    let tau = avg.value * v_phi.point / v_psi.point;
    rep.check(Check::ge("normalized tau", tau, 0.98, "point estimates", Status::Heuristic));
    rep.results = json!({
        "avg": Quantity { value: avg.value, lower: avg.lower, upper: avg.upper, status: if avg.exact.is_some() { Status::Exact } else { Status::Heuristic } },
        "avg_exact": avg.exact.as_ref().map(|e| e.to_string()),
        "classes": avg.n,
        "slope": Quantity::heuristic(slope.value, slope.lower, slope.upper),
        "phi_growth": Quantity::heuristic(v_phi.point, v_phi.lower, v_phi.upper),
        "psi_growth": Quantity::heuristic(v_psi.point, v_psi.lower, v_psi.upper),
        "tau_normalized": Quantity::heuristic(tau, avg.lower * v_phi.lower / v_psi.upper, avg.upper * v_phi.upper / v_psi.lower),
    });
    Ok(rep)
}

/// Bowen averages ℓ_φ(Λ_T) along the T grid.
pub fn lambda(cfg: &ExperimentConfig, cache: &Cache) -> Result<Report> {
    let mut rep = report("lambda", cfg);
    let (phi, label) = comparison(cfg)?;
    let d = standard(cfg);
    let bms = bms_ratio_convergence(phi.as_ref(), d.as_ref(), &cfg.lambda_grid, None, &StableConfig::default())?;
    let not_one = bms.rows.iter().filter(|r| r.psi_value != 1.0).count();
    rep.check(Check::le("T with l_psi(Lambda_T) != 1", not_one as f64, 0.0, "exact", Status::Exact));
    let disagree = bms.rows.iter().filter(|r| !r.agrees).count();
    rep.check(Check::le("T where currents and spectrum averages differ", disagree as f64, 0.0, "exact", Status::Exact));
    let last = bms.rows.last().expect("nonempty grid");
    let routes = distortion_routes(cfg, cache, phi.as_ref(), &label)?;
    let slope = routes.slope;
    let combined = (last.upper - last.lower) + (slope.upper - slope.lower);
    rep.check(Check::le("|final entry - slope| - combined bracket", (last.value - slope.value).abs() - combined, 0.0, "brackets", Status::Heuristic));
    rep.results = json!({
        "rows": bms.rows.iter().map(|r| json!({
            "T": r.t, "N": r.n, "value": r.value, "exact": r.exact.as_ref().map(|e| e.to_string()),
            "psi_value": r.psi_value, "primitive_value": r.primitive_value, "agrees": r.agrees,
        })).collect::<Vec<_>>(),
        "primitive_gap": last.primitive_value - last.value,
        "slope": Quantity::heuristic(slope.value, slope.lower, slope.upper),
        "maxlen": bms.maxlen,
    });
    let mut buf = Vec::new();
    bms.write_csv(&mut buf)?;
    rep.table = Some(String::from_utf8(buf)?);
    Ok(rep)
}

/// Dilations, Δ, the strong distance and the comparability constant.
pub fn moduli(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("moduli", cfg);
    let (phi, _) = comparison(cfg)?;
    let d = standard(cfg);
    let scfg = StableConfig::default();
    let (a, b) = spectra_pair(phi.as_ref(), d.as_ref(), cfg.maxlen, &scfg)?;
    let delta = delta_from_spectra(&a, &b)?;
    let strong = strong_length_from_spectra(&a, &b, &b)?;
    let comp = comparability_c(phi.as_ref(), d.as_ref(), cfg.radius_or(6), &delta.dil_ab, &delta.dil_ba)?;
    let product = delta.dil_ab.value * delta.dil_ba.value;
    rep.check(Check::ge("Dil(phi,psi) Dil(psi,phi)", product, 1.0 - 1e-12, "lower-bound values", Status::Certified));
    rep.check(Check::ge("Delta", delta.delta, -1e-12, "lower-bound values", Status::Certified));
    rep.results = json!({
        "dil_phi_psi": delta.dil_ab,
        "dil_psi_phi": delta.dil_ba,
        "dil_phi_psi_exact": delta.dil_ab.exact.as_ref().map(|e| e.to_string()),
        "dil_psi_phi_exact": delta.dil_ba.exact.as_ref().map(|e| e.to_string()),
        "delta": delta.delta,
        "strong_distance": strong,
        "comparability": comp,
        "certified": a.all_certified() && b.all_certified(),
    });
    Ok(rep)
}

/// The Green upper bound for the walk and the word-metric sandwich for S_l.
pub fn certificates(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("certificates", cfg);
    cfg.validate_density()?;
    let mu = cfg.measure()?;
    let rg = 5;
    let table = GreenTable::new(&mu, &green_config(cfg, rg))?;
    let words = enumerate_ball(cfg.rank, rg, DEFAULT_CAP)?;
    let upper = green_upper_checks(&mut rep, &table, &mu, &words)?;
    let d = WordMetric::standard(cfg.rank);
    let ball = enumerate_ball(cfg.rank, cfg.radius_or(8), DEFAULT_CAP)?;
    let ca = cfg.alpha.ceil();
    let mut rows = Vec::new();
    for &l in &cfg.l {
        let lf = l as f64;
        let m = (lf + ca + 1.0) * (lf - ca) / (ca - cfg.alpha + 1.0) + cfg.alpha;
        let (set, _) = thickened_sphere(&d, lf, cfg.delta)?;
        let size = set.len();
        let ws = WordMetric::new(GenSet::new(cfg.rank, set)?);
        let (mut low, mut high) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for g in &ball {
            let n = ws.distance(g)? as f64;
            let dg = g.len() as f64;
            low = low.max((lf - ca) * n - m - dg);
            high = high.max(dg - lf * n);
        }
        rep.check(Check::le(format!("l={l}: max((l-ceil(alpha))|g|_S - M - d)"), low, 0.0, "exact", Status::Exact));
        rep.check(Check::le(format!("l={l}: max(d - l|g|_S)"), high, 0.0, "exact", Status::Exact));
        rows.push(json!({"l": l, "size": size, "M": m, "lower_margin": low, "upper_margin": high}));
    }
    rep.results = json!({"green_upper": upper, "sandwich": rows});
    Ok(rep)
}

fn thickened_walk(cfg: &ExperimentConfig, l: usize) -> Result<(usize, FiniteMeasure)> {
    let d = WordMetric::standard(cfg.rank);
    let (set, mu) = thickened_sphere(&d, l as f64, cfg.delta)?;
    Ok((set.len(), mu))
}

/// Dilations between d and the Green metric of the uniform walk on S_l.
pub fn green_density(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("green-density", cfg);
    cfg.validate_density()?;
    let d = standard(cfg);
    let v_d = ((2 * cfg.rank - 1) as f64).ln();
    let scfg = green_stable(cfg);
    let mut rows = Vec::new();
    let mut products = Vec::new();
    for &l in &cfg.l {
        let (size, mu) = thickened_walk(cfg, l)?;
        let gp = GreenPotential::new(&mu, &green_config(cfg, cfg.green_radius))?;
        let (sd, sg) = spectra_pair(d.as_ref(), &gp, cfg.maxlen, &scfg)?;
        let dil_gd = dil_from_spectra(&sg, &sd)?;
        let dil_dg = dil_from_spectra(&sd, &sg)?;
        let product = dil_gd.value * dil_dg.value;
        let bound = (size as f64).ln() / (l as f64 - cfg.alpha.ceil());
        rep.check(Check::ge(format!("l={l}: Dil(d,d_mu) Dil(d_mu,d)"), product, 1.0 - 1e-12, "estimates", Status::Heuristic));
        rep.check(Check::le(format!("l={l}: Dil(d_mu,d) estimate <= log#S_l/(l-ceil(alpha))"), dil_gd.value, bound, "estimate is a lower bound", Status::Certified));
        rep.check(Check::le(format!("l={l}: v_d <= log#S_l/(l-ceil(alpha))"), v_d, bound, "exact counts", Status::Certified));
        let g_oo = gp.table().get(&Word::identity(cfg.rank))?;
        rows.push(json!({
            "l": l,
            "size": size,
            "G_oo": Quantity::heuristic(g_oo.lower, g_oo.lower, g_oo.upper()),
            "dil_mu_d": dil_gd,
            "dil_d_mu": dil_dg,
            "product": product,
            "Delta": product.ln(),
            "bound": bound,
        }));
        products.push((l, product, bound, dil_gd.value, dil_dg.value));
    }
    for w in products.windows(2) {
        rep.check(Check::le(format!("product nonincreasing l={} to l={}", w[0].0, w[1].0), w[1].1, w[0].1 + 0.05, "estimates", Status::Heuristic).soft());
    }
    rep.results = json!({"v_d": v_d, "rows": rows});
    rep.table = Some(csv_of(
        &["l", "dil_mu_d", "dil_d_mu", "product", "bound"],
        products.iter().map(|p| vec![p.0.to_string(), p.3.to_string(), p.4.to_string(), p.1.to_string(), p.2.to_string()]),
    ));
    Ok(rep)
}

/// h/ℓ through τ(d/d_μ), next to entropy upper bounds and drift.
pub fn fundamental(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rep = report("fundamental", cfg);
    cfg.validate_density()?;
    let d = standard(cfg);
    let v_d = ((2 * cfg.rank - 1) as f64).ln();
    let scfg = green_stable(cfg);
    let mut walks = vec![("srw".to_string(), FiniteMeasure::simple(cfg.rank))];
    for &l in &cfg.l {
        walks.push((format!("l={l}"), thickened_walk(cfg, l)?.1));
    }
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut ests = Vec::new();
    for (name, mu) in &walks {
        let gp = GreenPotential::new(mu, &green_config(cfg, cfg.green_radius))?;
        let ratio = entropy_over_drift(&gp, d.as_ref(), cfg.t_fundamental, &scfg)?;
        let h = entropy_upper(mu, cfg.entropy_k, &ConvolveConfig::default())?;
        let dr = drift(mu, d.as_ref(), cfg.steps, cfg.trials, cfg.seed)?;
        let h_last = *h.last().expect("entropy_k ≥ 1");
        if name == "srw" {
            rep.check(Check::le("srw |h/l - v_d|", (ratio.value - v_d).abs(), 0.02, "point estimate", Status::Heuristic));
        } else {
            rep.check(Check::le(format!("{name}: h/l"), ratio.value, v_d + 0.02, "point estimate", Status::Heuristic));
            ests.push((name.clone(), ratio.value));
        }
        rows.push(json!({
            "walk": name,
            "h_over_l": Quantity::heuristic(ratio.value, ratio.lower, ratio.upper),
            "tau_classes": ratio.tau.n,
            "entropy_upper": h,
            "drift": dr,
            "entropy_upper_over_drift": h_last / dr.mean,
        }));
        table.push(vec![name.clone(), ratio.value.to_string(), ratio.lower.to_string(), ratio.upper.to_string(), dr.mean.to_string(), h_last.to_string()]);
    }
    for w in ests.windows(2) {
        rep.check(Check::ge(format!("h/l nondecreasing {} to {}", w[0].0, w[1].0), w[1].1, w[0].1 - 0.05, "point estimates", Status::Heuristic).soft());
    }
    rep.results = json!({"v_d": v_d, "walks": rows});
    rep.table = Some(csv_of(&["walk", "h_over_l", "lower", "upper", "drift", "entropy_upper"], table));
    Ok(rep)
}

/// The f64 payload helpers, re-exported for tools that read the cache.
pub fn encode_rows(rows: &[(f64, f64, f64)]) -> Vec<u8> {
    encode_f64(&rows.iter().flat_map(|r| [r.0, r.1, r.2]).collect::<Vec<_>>())
}

pub fn decode_rows(b: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    Ok(decode_f64(b)?.chunks_exact(3).map(|c| (c[0], c[1], c[2])).collect())
}
