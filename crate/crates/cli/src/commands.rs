//! `analyze`, `distort` and `qrcheck`.

use num::Zero;
use popp_core::distortion::{analyze_pair, step2_refined_bounds, DistortionReport};
use popp_core::exactalg::{ExactMatrix, Rational};
use popp_core::maps::{
    check_theorem_relations, contact_defect, heisenberg_dairbekov, popp_pullback_check, qr_constants, standard_heisenberg_n, QRReport,
};
use popp_core::popp::{density_in_frame, LocalStructure};
use popp_core::random::random_spd;
use popp_core::srmanifold::{compute_flag, format_point, FlagReport, ManifoldSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::json::{bounds, exact_matrix, float_matrix, num, nums, point};
use crate::manifest::{Manifest, ManifestError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// A finished command: the JSON report, whether every check passed, and
/// one-line messages for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
    pub messages: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn words(flag: &FlagReport) -> Value {
    json!(flag.bracket_basis.iter().map(ToString::to_string).collect::<Vec<_>>())
}

fn structure_constants_json(local: &LocalStructure) -> Value {
    let c = &local.constants;
    let k = c.rank();
    let mut out = Vec::new();
    for layer in c.layers() {
        for (a, row) in layer.values.iter().enumerate() {
            for (idx, v) in row.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let tuple: Vec<usize> = (0..layer.layer).rev().map(|p| idx / k.pow(p as u32) % k + 1).collect();
                out.push(json!({"alpha": layer.start + a + 1, "tuple": tuple, "value": crate::json::rational(v)}));
            }
        }
    }
    Value::Array(out)
}

fn analyze_point(spec: &ManifoldSpec, p: &[Rational]) -> (Value, Option<FlagReport>, Option<f64>) {
    let flag = match compute_flag(spec, p) {
        Ok(f) => f,
        Err(e) => return (json!({"point": point(p), "error": e.to_string()}), None, None),
    };
    let mut entry = json!({
        "point": point(p),
        "ranks": flag.ranks,
        "growth": flag.growth,
        "weights": flag.weights,
        "step": flag.step,
        "Q": flag.homogeneous_dim,
        "bracket_basis": words(&flag),
    });
    let local = LocalStructure::at(spec, p).and_then(|local| {
        let ext = local.extension(&spec.metric_at(p))?;
        let density = density_in_frame(&local.frame, &ext)?;
        Ok((local, ext, density))
    });
    match local {
        Ok((local, ext, density)) => {
            entry["structure_constants"] = structure_constants_json(&local);
            let blocks: Vec<Value> = (1..=ext.blocks().len())
                .map(|s| ext.exact_block(s).map(exact_matrix).unwrap_or_else(|| float_matrix(&ext.blocks()[s - 1])))
                .collect();
            entry["popp_blocks"] = Value::Array(blocks);
            entry["popp_density"] = num(density);
            (entry, Some(flag), Some(density))
        }
        Err(e) => {
            entry["popp_density"] = Value::Null;
            entry["error"] = json!(e.to_string());
            (entry, Some(flag), None)
        }
    }
}

pub fn analyze(manifest: &Manifest, name: &str) -> Result<Outcome, CliError> {
    let spec = manifest.manifold(name)?;
    let mut points = Vec::new();
    let mut flags = Vec::new();
    let mut densities = Vec::new();
    let mut messages = Vec::new();
    for p in spec.sample_points() {
        let (entry, flag, density) = analyze_point(spec, p);
        if let Some(err) = entry.get("error").and_then(Value::as_str) {
            messages.push(err.to_string());
        }
        points.push(entry);
        flags.push(flag);
        densities.push(density);
    }
    let equiregular =
        flags.iter().all(Option::is_some) && flags.windows(2).all(|w| w[0].as_ref().map(|f| &f.ranks) == w[1].as_ref().map(|f| &f.ranks));
    let first = flags[0].as_ref().filter(|_| equiregular);
    if !equiregular {
        let ranks: Vec<String> = spec
            .sample_points()
            .iter()
            .zip(&flags)
            .map(|(p, f)| format!("{} -> {}", format_point(p), f.as_ref().map_or("error".into(), |f| format!("{:?}", f.ranks))))
            .collect();
        messages.push(format!("manifold '{name}' is not equiregular on its sample points: {}", ranks.join(", ")));
    }
    let passed = equiregular && densities.iter().all(Option::is_some);
    let report = json!({
        "command": "analyze",
        "manifold": name,
        "dimension": spec.dim(),
        "rank": spec.rank(),
        "equiregular": equiregular,
        "equiregular_certified_on": "sample_points",
        "Q": first.map(|f| f.homogeneous_dim),
        "growth": first.map(|f| f.growth.clone()),
        "weights": first.map(|f| f.weights.clone()),
        "step": first.map(|f| f.step),
        "popp_density": densities[0].filter(|_| equiregular).map_or(Value::Null, num),
        "points": points,
        "passed": passed,
    });
    Ok(Outcome { report, passed, messages })
}

/// Second metric of a `distort` run.
#[derive(Clone, Debug)]
pub enum MetricPair {
    /// The manifold's own metric against a constant matrix.
    Inline(ExactMatrix),
    /// `count` pairs of random constant SPD metrics.
    Random { count: usize, seed: u64 },
}

fn distortion_json(r: &DistortionReport, step2: Option<&popp_core::distortion::BoundReport>) -> Value {
    let mut v = json!({
        "lambda": nums(&r.lambda),
        "mu": nums(&r.mu),
        "mu_by_layer": r.mu_by_layer.iter().map(|l| nums(l)).collect::<Vec<_>>(),
        "H2": num(r.h2),
        "K2": num(r.k2),
        "det_full": num(r.det_full),
        "Q": r.homogeneous_dim,
        "k": r.rank,
        "weights": r.weights,
        "bounds": bounds(&r.bounds),
    });
    if let Some(b) = step2 {
        v["step2_bounds"] = bounds(b);
    }
    v
}

pub fn distort(manifest: &Manifest, name: &str, pair: &MetricPair, tol: f64) -> Result<Outcome, CliError> {
    let spec = manifest.manifold(name)?;
    let k = spec.rank();
    let pairs: Vec<(Option<ExactMatrix>, ExactMatrix)> = match pair {
        MetricPair::Inline(h) => {
            if h.rows() != k || h.cols() != k {
                return Err(CliError::Input(format!("--metric-b must be {k}x{k} for manifold '{name}', got {}x{}", h.rows(), h.cols())));
            }
            if !h.is_symmetric() || !h.is_positive_definite() {
                return Err(CliError::Input(format!("--metric-b is not symmetric positive definite (manifold '{name}')")));
            }
            vec![(None, h.clone())]
        }
        MetricPair::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..*count).map(|_| (Some(random_spd(&mut rng, k)), random_spd(&mut rng, k))).collect()
        }
    };
    let mut messages = Vec::new();
    let mut locals = Vec::new();
    for p in spec.sample_points() {
        match LocalStructure::at(spec, p) {
            Ok(l) => locals.push(l),
            Err(e) => {
                messages.push(e.to_string());
                let report = json!({"command": "distort", "manifold": name, "error": e.to_string(), "passed": false});
                return Ok(Outcome { report, passed: false, messages });
            }
        }
    }
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    let mut pair_reports = Vec::new();
    for (index, (g, h)) in pairs.iter().enumerate() {
        let mut point_reports = Vec::new();
        for (p, local) in spec.sample_points().iter().zip(&locals) {
            let g_here = g.clone().unwrap_or_else(|| spec.metric_at(p));
            let result = local
                .extension(&g_here)
                .and_then(|eg| Ok((eg, local.extension(h)?)))
                .and_then(|(eg, eh)| analyze_pair(&eg, &eh, tol))
                .and_then(|r| {
                    let s2 = if r.step() == 2 { Some(step2_refined_bounds(&r, tol)?) } else { None };
                    Ok((r, s2))
                });
            match result {
                Ok((r, s2)) => {
                    for c in r.bounds.checks.iter().chain(s2.iter().flat_map(|b| b.checks.iter())) {
                        checks += 1;
                        worst = worst.min(c.slack);
                        if !c.passed {
                            violations += 1;
                            messages.push(format!(
                                "pair {index} at {}: bound {} violated (slack {:.3e})",
                                format_point(p),
                                c.name,
                                c.slack
                            ));
                        }
                    }
                    let mut v = distortion_json(&r, s2.as_ref());
                    v["point"] = point(p);
                    point_reports.push(v);
                }
                Err(e) => {
                    violations += 1;
                    messages.push(format!("manifold '{name}', pair {index} at {}: {e}", format_point(p)));
                    point_reports.push(json!({"point": point(p), "error": e.to_string()}));
                }
            }
        }
        pair_reports.push(json!({
            "pair": index,
            "metric_a": g.as_ref().map_or(Value::Null, exact_matrix),
            "metric_b": exact_matrix(h),
            "points": point_reports,
        }));
    }
    let passed = violations == 0;
    let report = json!({
        "command": "distort",
        "manifold": name,
        "mode": match pair { MetricPair::Inline(_) => json!("inline"), MetricPair::Random { seed, .. } => json!({"random": pairs.len(), "seed": seed}) },
        "tol": num(tol),
        "pairs": pair_reports,
        "checks": checks,
        "violations": violations,
        "worst_slack": num(worst),
        "passed": passed,
    });
    Ok(Outcome { report, passed, messages })
}

fn qr_json(r: &QRReport) -> Value {
    json!({
        "lambda": nums(&r.lambda),
        "Df_norm": num(r.df_norm),
        "Df_min": num(r.df_min),
        "H": num(r.h),
        "K_popp": num(r.k_popp),
        "K_analytic_bound": num(r.k_analytic_bound),
        "J_f": num(r.j_f),
        "contact_defect": num(r.contact_defect),
        "pullback_metric": exact_matrix(&r.pullback),
        "theorem_checks": bounds(&r.theorem_checks),
    })
}

pub fn qrcheck(manifest: &Manifest, name: &str, tol: f64) -> Result<Outcome, CliError> {
    let entry = manifest.map(name)?;
    let map = &entry.spec;
    let mut messages = Vec::new();

    let mut defects = Vec::new();
    for p in &entry.points {
        match contact_defect(map, p) {
            Ok(d) => defects.push((p, d)),
            Err(e) => {
                messages.push(format!("map '{name}' at {}: {e}", format_point(p)));
                let report = json!({"command": "qrcheck", "map": name, "error": e.to_string(), "passed": false});
                return Ok(Outcome { report, passed: false, messages });
            }
        }
    }
    let offending: Vec<_> = defects.iter().filter(|(_, d)| *d > 0.0).collect();
    if let Some((worst_p, worst_d)) = offending.iter().copied().reduce(|a, b| if b.1 > a.1 { b } else { a }) {
        let points: Vec<String> = offending.iter().map(|(p, _)| format_point(p)).collect();
        messages.push(format!(
            "map '{name}' is not contact: defect {worst_d:.6e} at {} (nonzero at {})",
            format_point(worst_p),
            points.join(", ")
        ));
        let report = json!({
            "command": "qrcheck",
            "map": name,
            "source": map.source().name(),
            "target": map.target().name(),
            "contact": false,
            "worst_point": point(worst_p),
            "worst_defect": num(*worst_d),
            "defects": defects.iter().map(|(p, d)| json!({"point": point(p), "defect": num(*d)})).collect::<Vec<_>>(),
            "passed": false,
        });
        return Ok(Outcome { report, passed: false, messages });
    }

    let diffeo = map.source().dim() == map.target().dim();
    let heisenberg = standard_heisenberg_n(map.source()).is_some() && standard_heisenberg_n(map.target()).is_some();
    let mut passed = true;
    let mut reports = Vec::new();
    let mut point_json = Vec::new();
    for p in &entry.points {
        let mut v = match qr_constants(map, p, tol) {
            Ok(r) => {
                if !r.theorem_checks.all_passed() {
                    passed = false;
                    messages.push(format!("map '{name}' at {}: pointwise constant relation failed", format_point(p)));
                }
                let v = qr_json(&r);
                reports.push(r);
                v
            }
            Err(e) => {
                passed = false;
                messages.push(format!("map '{name}' at {}: {e}", format_point(p)));
                point_json.push(json!({"point": point(p), "image": point(&map.image(p)), "error": e.to_string()}));
                continue;
            }
        };
        v["point"] = point(p);
        v["image"] = point(&map.image(p));
        v["popp_pullback"] = if diffeo && !map.jacobian_at(p).det().map(|d| d.is_zero()).unwrap_or(true) {
            match popp_pullback_check(map, p) {
                Ok(c) => {
                    let ok = c.slack <= tol;
                    if !ok {
                        passed = false;
                        messages.push(format!("map '{name}' at {}: Popp pullback slack {:.3e}", format_point(p), c.slack));
                    }
                    json!({"pulled_back": num(c.pulled_back), "direct": num(c.direct), "slack": num(c.slack), "passed": ok})
                }
                Err(e) => {
                    passed = false;
                    json!({"error": e.to_string()})
                }
            }
        } else {
            Value::Null
        };
        if heisenberg {
            v["dairbekov"] = match heisenberg_dairbekov(map, p, tol) {
                Ok(d) => {
                    if !d.all_passed() {
                        passed = false;
                        messages.push(format!("map '{name}' at {}: Dairbekov relation failed", format_point(p)));
                    }
                    json!({
                        "n": d.n,
                        "HJ": num(d.hj),
                        "J": num(d.j),
                        "J_f": num(d.j_f),
                        "K_dairbekov": num(d.k_dairbekov),
                        "H": num(d.h),
                        "K_popp": num(d.k_popp),
                        "checks": d.checks.iter().map(|c| json!({"name": c.name, "lhs": num(c.lhs), "rhs": num(c.rhs), "rel_diff": num(c.rel_diff), "passed": c.passed})).collect::<Vec<_>>(),
                    })
                }
                Err(e) => {
                    passed = false;
                    json!({"error": e.to_string()})
                }
            };
        }
        point_json.push(v);
    }
    let aggregate = match reports.first() {
        Some(first) => {
            let rel = check_theorem_relations(&reports, first.homogeneous_dim, first.rank, tol).expect("nonempty");
            if !rel.checks.all_passed() {
                passed = false;
                messages.push(format!("map '{name}': constant relations failed on the sample set"));
            }
            json!({
                "sample_maxima": true,
                "points": reports.len(),
                "H_star": num(rel.h_star),
                "K_a": num(rel.k_a),
                "H_hat": num(rel.h_hat),
                "K_hat": num(rel.k_hat),
                "Q": rel.q,
                "k": rel.k,
                "checks": bounds(&rel.checks),
            })
        }
        None => Value::Null,
    };
    let report = json!({
        "command": "qrcheck",
        "map": name,
        "source": map.source().name(),
        "target": map.target().name(),
        "contact": true,
        "points": point_json,
        "aggregate": aggregate,
        "passed": passed,
    });
    Ok(Outcome { report, passed, messages })
}
