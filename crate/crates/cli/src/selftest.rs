//! Property suites run by `popp selftest`.
//!
//! Each suite folds its cases into a worst value: the smallest slack for
//! inequality suites, the largest relative residual for equality suites, and
//! the failure count for exact suites.

use std::sync::Arc;

use num::{Signed, Zero};
use popp_core::adapted::structure_constants;
use popp_core::catalog;
use popp_core::distortion::{analyze_pair, h2_from_eigenvalues, step2_refined_bounds, DistortionReport};
use popp_core::exactalg::{gen_eigenvalues, rat, ratio, rel_diff, to_f64, ExactMatrix, Polynomial, Rational};
use popp_core::maps::{
    check_theorem_relations, contact_defect, heisenberg_dairbekov, popp_pullback_check, pushforward, qr_constants, MapSpec,
};
use popp_core::popp::{density_in_frame, popp_extension, verify_frame_law, LocalStructure};
use popp_core::random::{random_frame_change, random_point, random_spd};
use popp_core::srmanifold::{compute_flag, format_point, lie_bracket, BracketWord, ManifoldSpec, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::{analyze, distort, MetricPair, Outcome};
use crate::json::{num, render};
use crate::manifest::Manifest;

#[derive(Clone, Debug)]
pub struct SelftestConfig {
    pub seed: u64,
    pub tol: f64,
    /// Random cases per randomised suite.
    pub samples: usize,
    /// Corrupts one structure constant inside the frame-invariance suite.
    pub inject_fault: bool,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self { seed: 1, tol: 1e-9, samples: 100, inject_fault: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    MinSlack,
    MaxResidual,
    Failures,
}

impl Measure {
    fn label(self) -> &'static str {
        match self {
            Measure::MinSlack => "min_slack",
            Measure::MaxResidual => "max_residual",
            Measure::Failures => "failures",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub measure: Measure,
    pub cases: usize,
    pub worst: f64,
    pub failures: Vec<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.cases > 0
    }
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &'static str, measure: Measure) -> Self {
        let worst = match measure {
            Measure::MinSlack => f64::INFINITY,
            Measure::MaxResidual | Measure::Failures => 0.0,
        };
        Self { result: SuiteResult { name, measure, cases: 0, worst, failures: Vec::new() } }
    }

    fn fail(&mut self, msg: String) {
        if self.result.measure == Measure::Failures {
            self.result.worst += 1.0;
        }
        self.result.failures.push(msg);
    }

    /// Passes when `slack ≥ −tol`.
    fn slack(&mut self, slack: f64, tol: f64, label: impl FnOnce() -> String) {
        self.result.cases += 1;
        self.result.worst = self.result.worst.min(slack);
        if slack.is_nan() || slack < -tol {
            self.fail(format!("{}: slack {slack:.3e}", label()));
        }
    }

    /// Passes when `residual ≤ tol`.
    fn residual(&mut self, residual: f64, tol: f64, label: impl FnOnce() -> String) {
        self.result.cases += 1;
        self.result.worst = self.result.worst.max(residual);
        if residual.is_nan() || residual > tol {
            self.fail(format!("{}: residual {residual:.3e}", label()));
        }
    }

    fn check(&mut self, ok: bool, label: impl FnOnce() -> String) {
        self.result.cases += 1;
        if !ok {
            self.fail(label());
        }
    }

    fn error(&mut self, label: String, e: impl std::fmt::Display) {
        self.result.cases += 1;
        self.fail(format!("{label}: {e}"));
    }

    fn finish(self) -> SuiteResult {
        self.result
    }
}

struct Context<'a> {
    manifest: &'a Manifest,
    cfg: &'a SelftestConfig,
    h1: Arc<ManifoldSpec>,
    h2: Arc<ManifoldSpec>,
    engel: Arc<ManifoldSpec>,
    riemann2: Arc<ManifoldSpec>,
}

impl Context<'_> {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }

    fn carnot(&self) -> [&Arc<ManifoldSpec>; 3] {
        [&self.h1, &self.h2, &self.engel]
    }

    /// Manifest maps that are contact at every evaluation point.
    fn contact_maps(&self) -> Vec<(&MapSpec, &[Vec<Rational>])> {
        self.manifest
            .maps()
            .filter(|(_, e)| e.points.iter().all(|p| matches!(contact_defect(&e.spec, p), Ok(d) if d == 0.0)))
            .map(|(_, e)| (&e.spec, e.points.as_slice()))
            .collect()
    }
}

fn from_manifest(manifest: &Manifest, name: &str, fallback: fn() -> ManifoldSpec) -> Arc<ManifoldSpec> {
    manifest.manifold(name).cloned().unwrap_or_else(|_| Arc::new(fallback()))
}

fn random_poly<R: Rng>(rng: &mut R, n: usize) -> Polynomial {
    let terms = (0..rng.gen_range(0..4)).map(|_| {
        let e: Vec<u32> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
        let e = if e.iter().sum::<u32>() > 2 { vec![0; n] } else { e };
        (e, rat(rng.gen_range(-3..=3)))
    });
    Polynomial::from_terms(n, terms.collect::<Vec<_>>())
}

fn random_field<R: Rng>(rng: &mut R, n: usize) -> VectorField {
    VectorField::new((0..n).map(|_| random_poly(rng, n)).collect(), BracketWord::Label("v".into()))
}

fn pair_report(local: &LocalStructure, g: &ExactMatrix, h: &ExactMatrix, tol: f64) -> popp_core::Result<DistortionReport> {
    analyze_pair(&local.extension(g)?, &local.extension(h)?, tol)
}

fn suite_gen_eigen(ctx: &Context, reciprocal: bool) -> SuiteResult {
    let name = if reciprocal { "exactalg.gen_eigen_reciprocal" } else { "exactalg.gen_eigen_det_product" };
    let mut s = Suite::new(name, Measure::MaxResidual);
    let mut rng = ctx.rng(if reciprocal { 2 } else { 1 });
    for i in 0..ctx.cfg.samples {
        let k = 1 + i % 6;
        let (g, h) = (random_spd(&mut rng, k), random_spd(&mut rng, k));
        let res = gen_eigenvalues(&g.to_float(), &h.to_float()).and_then(|a| {
            if reciprocal {
                let b = gen_eigenvalues(&h.to_float(), &g.to_float())?;
                Ok(a.iter().zip(b.iter().rev()).map(|(x, y)| rel_diff(*x, 1.0 / y)).fold(0.0, f64::max))
            } else {
                let det_ratio = to_f64(&h.det()?) / to_f64(&g.det()?);
                Ok(rel_diff(a.iter().product(), det_ratio))
            }
        });
        match res {
            Ok(r) => s.residual(r, 1e-10, || format!("pair {i} (size {k})")),
            Err(e) => s.error(format!("pair {i}"), e),
        }
    }
    s.finish()
}

fn suite_reproducible(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("exactalg.exact_reproducible", Measure::Failures);
    for (name, spec) in ctx.manifest.manifolds() {
        for p in spec.sample_points() {
            let a = compute_flag(spec, p);
            let b = compute_flag(spec, p);
            s.check(a == b, || format!("flag of '{name}' at {}", format_point(p)));
            if let (Ok(la), Ok(lb)) = (LocalStructure::at(spec, p), LocalStructure::at(spec, p)) {
                s.check(la.frame == lb.frame && la.constants == lb.constants, || format!("constants of '{name}' at {}", format_point(p)));
            }
        }
    }
    s.finish()
}

fn suite_jacobi(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("srmanifold.jacobi_identity", Measure::Failures);
    let mut rng = ctx.rng(3);
    for i in 0..ctx.cfg.samples / 2 {
        let (x, y, z) = (random_field(&mut rng, 3), random_field(&mut rng, 3), random_field(&mut rng, 3));
        let sum =
            lie_bracket(&x, &lie_bracket(&y, &z)).add(&lie_bracket(&y, &lie_bracket(&z, &x))).add(&lie_bracket(&z, &lie_bracket(&x, &y)));
        s.check(sum.is_zero(), || format!("triple {i}"));
    }
    s.finish()
}

fn suite_bilinear(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("srmanifold.bracket_bilinear_antisymmetric", Measure::Failures);
    let mut rng = ctx.rng(4);
    for i in 0..ctx.cfg.samples / 2 {
        let (x, y, z) = (random_field(&mut rng, 3), random_field(&mut rng, 3), random_field(&mut rng, 3));
        let c = rat(rng.gen_range(-5..=5));
        let lhs = lie_bracket(&x.scale(&c).add(&y), &z);
        let rhs = lie_bracket(&x, &z).scale(&c).add(&lie_bracket(&y, &z));
        s.check(lhs.components() == rhs.components(), || format!("linearity case {i}"));
        s.check(lie_bracket(&x, &y).add(&lie_bracket(&y, &x)).is_zero(), || format!("antisymmetry case {i}"));
    }
    s.finish()
}

fn suite_flag_invariants(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("srmanifold.flag_invariants", Measure::Failures);
    for (name, spec) in ctx.manifest.manifolds() {
        for p in spec.sample_points() {
            match compute_flag(spec, p) {
                Ok(f) => s.check(f.invariants_hold(), || format!("'{name}' at {}", format_point(p))),
                Err(e) => s.error(format!("'{name}' at {}", format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_point_independence(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("srmanifold.carnot_point_independence", Measure::Failures);
    let mut rng = ctx.rng(5);
    for spec in ctx.carnot() {
        let reference = compute_flag(spec, &vec![rat(0); spec.dim()]).map(|f| f.ranks);
        for _ in 0..10 {
            let p = random_point(&mut rng, spec.dim());
            let ranks = compute_flag(spec, &p).map(|f| f.ranks);
            s.check(ranks.is_ok() && ranks == reference, || format!("'{}' at {}", spec.name(), format_point(&p)));
        }
    }
    s.finish()
}

fn suite_duality(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("adapted.coframe_duality", Measure::Failures);
    for spec in ctx.carnot().into_iter().chain([&ctx.riemann2]) {
        for p in spec.sample_points() {
            let Ok(local) = LocalStructure::at(spec, p) else {
                s.error(format!("'{}' at {}", spec.name(), format_point(p)), "no adapted frame");
                continue;
            };
            let f = &local.frame;
            let prod = f.coframe_matrix().mul(f.frame_matrix());
            let n = f.dim();
            let ok = (0..n).all(|a| (0..n).all(|j| f.layer_of(a) <= f.layer_of(j) || prod[(a, j)].is_zero()));
            s.check(ok && prod == ExactMatrix::identity(n), || format!("'{}' at {}", spec.name(), format_point(p)));
        }
    }
    s.finish()
}

fn suite_antisymmetry(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("adapted.layer2_antisymmetry", Measure::Failures);
    let mut rng = ctx.rng(6);
    for spec in ctx.carnot() {
        for p in spec.sample_points() {
            let Ok(base) = LocalStructure::at(spec, p) else { continue };
            let t = random_frame_change(&mut rng, &base.frame);
            for local in [base.clone(), base.with_frame(base.frame.transformed(spec, &t).expect("admissible change"))] {
                let c = &local.constants;
                let Some(layer) = c.layer(2) else { continue };
                let k = c.rank();
                for alpha in layer.start..layer.end {
                    let ok = (0..k).all(|i| (0..k).all(|j| c.get(alpha, &[i, j]) == -c.get(alpha, &[j, i])));
                    s.check(ok, || format!("'{}' at {}, alpha {}", spec.name(), format_point(p), alpha + 1));
                }
            }
        }
    }
    s.finish()
}

/// Same manifold with generators reversed.
fn reversed_generators(spec: &ManifoldSpec) -> ManifoldSpec {
    let frame = spec.frame().iter().rev().map(|x| x.components().to_vec()).collect();
    ManifoldSpec::new(format!("{}-reversed", spec.name()), spec.coordinates().to_vec(), frame, None, spec.sample_points().to_vec())
        .expect("reordering keeps the spec valid")
}

fn reversed_metric(g: &ExactMatrix) -> ExactMatrix {
    let k = g.rows();
    ExactMatrix::from_rows((0..k).map(|i| (0..k).map(|j| g[(k - 1 - i, k - 1 - j)].clone()).collect()).collect())
}

fn suite_permutation(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("adapted.generator_permutation", Measure::MaxResidual);
    let mut rng = ctx.rng(7);
    for spec in ctx.carnot() {
        let rev = reversed_generators(spec);
        for p in spec.sample_points() {
            let (g, h) = (random_spd(&mut rng, spec.rank()), random_spd(&mut rng, spec.rank()));
            let res = LocalStructure::at(spec, p).and_then(|a| {
                let b = LocalStructure::at(&rev, p)?;
                let ra = pair_report(&a, &g, &h, ctx.cfg.tol)?;
                let rb = pair_report(&b, &reversed_metric(&g), &reversed_metric(&h), ctx.cfg.tol)?;
                let mu = ra.mu.iter().zip(&rb.mu).map(|(x, y)| rel_diff(*x, *y)).fold(0.0, f64::max);
                let da = density_in_frame(&a.frame, &a.extension(&g)?)?;
                let db = density_in_frame(&b.frame, &b.extension(&reversed_metric(&g))?)?;
                Ok(mu.max(rel_diff(ra.k2, rb.k2)).max(rel_diff(da, db)))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, || format!("'{}' at {}", spec.name(), format_point(p))),
                Err(e) => s.error(format!("'{}' at {}", spec.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn corrupt(constants: &mut popp_core::adapted::StructureConstants) {
    if let Some(layer) = constants.layers().first() {
        let alpha = layer.start;
        let k = constants.rank();
        let tuple = vec![0, 1 % k];
        let v = constants.get(alpha, &tuple);
        constants.set(alpha, &tuple, v + rat(1));
    }
}

fn suite_popp_frame_invariance(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("popp.frame_invariance", Measure::MaxResidual);
    let mut rng = ctx.rng(8);
    for spec in ctx.carnot() {
        let points = spec.sample_points();
        for i in 0..20 {
            let p = &points[i % points.len()];
            let label = || format!("'{}' frame {i} at {}", spec.name(), format_point(p));
            let res = LocalStructure::at(spec, p).and_then(|base| {
                let g = random_spd(&mut rng, spec.rank());
                let frame = base.frame.transformed(spec, &random_frame_change(&mut rng, &base.frame))?;
                let mut constants = structure_constants(&frame);
                if ctx.cfg.inject_fault {
                    corrupt(&mut constants);
                }
                let d_base = density_in_frame(&base.frame, &base.extension(&g)?)?;
                let d_new = density_in_frame(&frame, &popp_extension(&g, &frame, &constants)?)?;
                let law = verify_frame_law(spec, &g, &base.frame, &frame, ctx.cfg.tol)?;
                Ok(rel_diff(d_base, d_new).max(law.block_residual).max(law.density_rel_diff))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, label),
                Err(e) => s.error(label(), e),
            }
        }
    }
    s.finish()
}

fn suite_h1_density(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("popp.h1_density_golden", Measure::MaxResidual);
    let golden = 1.0 / (4.0 * 2f64.sqrt());
    let mut rng = ctx.rng(9);
    let mut points = ctx.h1.sample_points().to_vec();
    points.extend((0..5).map(|_| random_point(&mut rng, 3)));
    for p in &points {
        match popp_core::popp::popp_density(&ctx.h1, p) {
            Ok(d) => s.residual(rel_diff(d, golden), ctx.cfg.tol, || format!("density at {}", format_point(p))),
            Err(e) => s.error(format_point(p), e),
        }
    }
    s.finish()
}

fn suite_block_determinant(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("popp.block_determinant", Measure::MaxResidual);
    let mut rng = ctx.rng(10);
    for spec in ctx.carnot() {
        for p in spec.sample_points() {
            let g = random_spd(&mut rng, spec.rank());
            let res = LocalStructure::at(spec, p).and_then(|l| {
                let ext = l.extension(&g)?;
                let prod: f64 = ext.block_determinants()?.iter().product();
                Ok(rel_diff(ext.full_matrix().det()?, prod))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, || format!("'{}' at {}", spec.name(), format_point(p))),
                Err(e) => s.error(format!("'{}' at {}", spec.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_riemannian_density(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("popp.riemannian_density", Measure::MaxResidual);
    let mut rng = ctx.rng(11);
    let r3 = Arc::new(catalog::euclidean(3));
    for spec in [&ctx.riemann2, &r3] {
        for p in spec.sample_points() {
            let g = random_spd(&mut rng, spec.rank());
            let res = LocalStructure::at(spec, p).and_then(|l| {
                let ours = density_in_frame(&l.frame, &l.extension(&g)?)?;
                let f_det = to_f64(&l.frame.frame_matrix().det()?.abs());
                Ok(rel_diff(ours, to_f64(&g.det()?).sqrt() / f_det))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, || format!("'{}' at {}", spec.name(), format_point(p))),
                Err(e) => s.error(format!("'{}' at {}", spec.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_sandwich(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.eigenvalue_sandwich", Measure::MinSlack);
    let mut rng = ctx.rng(12);
    for spec in ctx.carnot() {
        let locals: Vec<_> = spec.sample_points().iter().filter_map(|p| LocalStructure::at(spec, p).ok()).collect();
        for i in 0..ctx.cfg.samples {
            let local = &locals[i % locals.len()];
            let (g, h) = (random_spd(&mut rng, spec.rank()), random_spd(&mut rng, spec.rank()));
            match pair_report(local, &g, &h, ctx.cfg.tol) {
                Ok(r) => {
                    for c in &r.bounds.checks {
                        s.slack(c.slack, ctx.cfg.tol, || format!("'{}' pair {i}: {}", spec.name(), c.name));
                    }
                    let prod: f64 = r.mu.iter().product();
                    s.slack(-rel_diff(prod, r.det_full), ctx.cfg.tol, || format!("'{}' pair {i}: det_full", spec.name()));
                }
                Err(e) => s.error(format!("'{}' pair {i}", spec.name()), e),
            }
        }
    }
    s.finish()
}

fn suite_step2(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.step2_refined", Measure::MinSlack);
    let mut rng = ctx.rng(13);
    let locals: Vec<_> = ctx.h2.sample_points().iter().filter_map(|p| LocalStructure::at(&ctx.h2, p).ok()).collect();
    for i in 0..ctx.cfg.samples / 2 {
        let (g, h) = (random_spd(&mut rng, 4), random_spd(&mut rng, 4));
        match pair_report(&locals[i % locals.len()], &g, &h, ctx.cfg.tol).and_then(|r| step2_refined_bounds(&r, ctx.cfg.tol)) {
            Ok(b) => {
                for c in &b.checks {
                    s.slack(c.slack, ctx.cfg.tol, || format!("pair {i}: {}", c.name));
                }
            }
            Err(e) => s.error(format!("pair {i}"), e),
        }
    }
    s.finish()
}

fn suite_h1_identity(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.h1_determinant_identity", Measure::MaxResidual);
    let mut rng = ctx.rng(14);
    let locals: Vec<_> = ctx.h1.sample_points().iter().filter_map(|p| LocalStructure::at(&ctx.h1, p).ok()).collect();
    for i in 0..ctx.cfg.samples / 2 {
        let (g, h) = (random_spd(&mut rng, 2), random_spd(&mut rng, 2));
        match pair_report(&locals[i % locals.len()], &g, &h, ctx.cfg.tol) {
            Ok(r) => {
                let l12 = r.lambda[0] * r.lambda[1];
                s.residual(rel_diff(r.mu_by_layer[1][0], l12).max(rel_diff(r.det_full, l12 * l12)), ctx.cfg.tol, || format!("pair {i}"));
            }
            Err(e) => s.error(format!("pair {i}"), e),
        }
    }
    s.finish()
}

fn suite_distortion_frame_invariance(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.frame_invariance", Measure::MaxResidual);
    let mut rng = ctx.rng(15);
    for spec in ctx.carnot() {
        let points = spec.sample_points();
        for i in 0..20 {
            let p = &points[i % points.len()];
            let res = LocalStructure::at(spec, p).and_then(|base| {
                let a = base.with_frame(base.frame.transformed(spec, &random_frame_change(&mut rng, &base.frame))?);
                let b = base.with_frame(base.frame.transformed(spec, &random_frame_change(&mut rng, &base.frame))?);
                let (g, h) = (random_spd(&mut rng, spec.rank()), random_spd(&mut rng, spec.rank()));
                let ra = pair_report(&a, &g, &h, ctx.cfg.tol)?;
                let rb = pair_report(&b, &g, &h, ctx.cfg.tol)?;
                let mu =
                    ra.mu.iter().zip(&rb.mu).chain(ra.lambda.iter().zip(&rb.lambda)).map(|(x, y)| rel_diff(*x, *y)).fold(0.0, f64::max);
                Ok(mu.max(rel_diff(ra.h2, rb.h2)).max(rel_diff(ra.k2, rb.k2)).max(rel_diff(ra.det_full, rb.det_full)))
            });
            match res {
                Ok(r) => s.residual(r, 1e-8, || format!("'{}' pair {i}", spec.name())),
                Err(e) => s.error(format!("'{}' pair {i}", spec.name()), e),
            }
        }
    }
    s.finish()
}

fn suite_scaling(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.scaling", Measure::MaxResidual);
    let mut rng = ctx.rng(16);
    for spec in ctx.carnot() {
        for p in spec.sample_points() {
            let (g, h) = (random_spd(&mut rng, spec.rank()), random_spd(&mut rng, spec.rank()));
            let c = rng.gen_range(2..=5);
            let res = LocalStructure::at(spec, p).and_then(|l| {
                let r = pair_report(&l, &g, &h, ctx.cfg.tol)?;
                let rc = pair_report(&l, &g, &h.scale(&rat(c)), ctx.cfg.tol)?;
                let cf = c as f64;
                let mut worst: f64 = 0.0;
                for (layer, (a, b)) in r.mu_by_layer.iter().zip(&rc.mu_by_layer).enumerate() {
                    for (x, y) in a.iter().zip(b) {
                        worst = worst.max(rel_diff(x * cf.powi(layer as i32 + 1), *y));
                    }
                }
                worst = worst.max(rel_diff(r.det_full * cf.powi(r.homogeneous_dim as i32), rc.det_full));
                Ok(worst.max(rel_diff(r.k2, rc.k2)).max(rel_diff(r.h2, rc.h2)))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, || format!("'{}' at {}", spec.name(), format_point(p))),
                Err(e) => s.error(format!("'{}' at {}", spec.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_swap(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.swap_symmetry", Measure::MaxResidual);
    let mut rng = ctx.rng(17);
    for spec in ctx.carnot() {
        for p in spec.sample_points() {
            let (g, h) = (random_spd(&mut rng, spec.rank()), random_spd(&mut rng, spec.rank()));
            let res = LocalStructure::at(spec, p).and_then(|l| {
                let gh = pair_report(&l, &g, &h, ctx.cfg.tol)?;
                let hg = pair_report(&l, &h, &g, ctx.cfg.tol)?;
                let q = gh.homogeneous_dim as i32;
                let recip = gh.lambda.iter().zip(hg.lambda.iter().rev()).map(|(x, y)| rel_diff(*x, 1.0 / y)).fold(0.0, f64::max);
                Ok(recip
                    .max(rel_diff(gh.k2 * gh.det_full, gh.lambda_max().powi(q)))
                    .max(rel_diff(hg.k2, (1.0 / gh.lambda_min()).powi(q) * gh.det_full)))
            });
            match res {
                Ok(r) => s.residual(r, ctx.cfg.tol, || format!("'{}' at {}", spec.name(), format_point(p))),
                Err(e) => s.error(format!("'{}' at {}", spec.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_conformality(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("distortion.conformality_detection", Measure::Failures);
    let mut rng = ctx.rng(18);
    for i in 0..ctx.cfg.samples / 2 {
        let k = 2 + i % 3;
        let g = random_spd(&mut rng, k);
        let h = if i % 2 == 0 { g.scale(&ratio(rng.gen_range(1..=9), rng.gen_range(1..=4))) } else { random_spd(&mut rng, k) };
        match gen_eigenvalues(&g.to_float(), &h.to_float()) {
            Ok(l) => {
                let h2_is_one = (h2_from_eigenvalues(&l) - 1.0).abs() < 1e-9;
                let ratio_is_one = (l[k - 1] / l[0] - 1.0).abs() < 1e-9;
                s.check(h2_is_one == ratio_is_one && (i % 2 == 1 || h2_is_one), || format!("pair {i}"));
            }
            Err(e) => s.error(format!("pair {i}"), e),
        }
    }
    s.finish()
}

fn suite_chain_rule(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.chain_rule", Measure::Failures);
    let maps = ctx.contact_maps();
    for (f, points) in &maps {
        for (g, _) in maps.iter().filter(|(g, _)| g.source().name() == f.target().name()) {
            let Ok(gf) = f.then(g) else { continue };
            for p in points.iter() {
                for x in f.source().frame() {
                    let direct = pushforward(&gf, x, p);
                    let composed = g.jacobian_at(&f.image(p)).mul_vec(&pushforward(f, x, p));
                    s.check(direct == composed, || format!("{} at {}", gf.name(), format_point(p)));
                }
            }
        }
    }
    s.finish()
}

fn suite_jacobian_multiplicative(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.jacobian_multiplicative", Measure::MaxResidual);
    let maps = ctx.contact_maps();
    for (i, (f, points)) in maps.iter().enumerate() {
        // Each map composed with the next map on the same manifold.
        let Some((g, _)) = maps.iter().cycle().skip(i + 1).take(maps.len()).find(|(g, _)| g.source().name() == f.target().name()) else {
            continue;
        };
        let Ok(gf) = f.then(g) else { continue };
        for p in points.iter() {
            let res = qr_constants(&gf, p, ctx.cfg.tol).and_then(|c| {
                let a = qr_constants(f, p, ctx.cfg.tol)?;
                let b = qr_constants(g, &f.image(p), ctx.cfg.tol)?;
                Ok(rel_diff(c.j_f, a.j_f * b.j_f))
            });
            match res {
                Ok(r) => s.residual(r, 1e-8, || format!("{} at {}", gf.name(), format_point(p))),
                Err(e) => s.error(format!("{} at {}", gf.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_conformal_maps(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.conformal_constants", Measure::MaxResidual);
    let mut maps: Vec<(MapSpec, Vec<Vec<Rational>>)> = ctx.contact_maps().into_iter().map(|(m, p)| (m.clone(), p.to_vec())).collect();
    for (c, sn) in [((3, 5), (4, 5)), ((5, 13), (12, 13)), ((8, 17), (-15, 17))] {
        maps.push((catalog::rotation(&ctx.h1, &ratio(c.0, c.1), &ratio(sn.0, sn.1)), ctx.h1.sample_points().to_vec()));
    }
    for r in [ratio(1, 2), rat(2), rat(3)] {
        let f = catalog::dilation(&ctx.h1, &r);
        for p in ctx.h1.sample_points() {
            match qr_constants(&f, p, ctx.cfg.tol) {
                Ok(q) => {
                    s.residual(rel_diff(q.j_f, to_f64(&r).powi(4)), ctx.cfg.tol, || format!("J_f of {} at {}", f.name(), format_point(p)))
                }
                Err(e) => s.error(f.name().to_string(), e),
            }
        }
    }
    for (f, points) in &maps {
        for p in points {
            match qr_constants(f, p, ctx.cfg.tol) {
                Ok(q) if q.is_conformal(ctx.cfg.tol) => {
                    let r = rel_diff(q.h, 1.0).max(rel_diff(q.k_popp, 1.0)).max(rel_diff(q.k_analytic_bound, 1.0));
                    s.residual(r, ctx.cfg.tol, || format!("{} at {}", f.name(), format_point(p)));
                }
                Ok(_) => {}
                Err(e) => s.error(format!("{} at {}", f.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_isometries(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.rotations_translations", Measure::MaxResidual);
    let mut rng = ctx.rng(19);
    let mut maps = Vec::new();
    for (a, b, c) in [(3, 4, 5), (5, 12, 13), (20, 21, 29)] {
        maps.push(catalog::rotation(&ctx.h1, &ratio(a, c), &ratio(b, c)));
    }
    for _ in 0..3 {
        let v = random_point(&mut rng, 3);
        maps.push(catalog::left_translation(&ctx.h1, &v[0], &v[1], &v[2]));
    }
    for f in &maps {
        for p in ctx.h1.sample_points() {
            match qr_constants(f, p, ctx.cfg.tol) {
                Ok(q) => s.residual(rel_diff(q.h, 1.0).max(rel_diff(q.k_popp, 1.0)).max(rel_diff(q.j_f, 1.0)), ctx.cfg.tol, || {
                    format!("{} at {}", f.name(), format_point(p))
                }),
                Err(e) => s.error(format!("{} at {}", f.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_pullback(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.popp_pullback", Measure::MaxResidual);
    let mut maps: Vec<(MapSpec, Vec<Vec<Rational>>)> = ctx.contact_maps().into_iter().map(|(m, p)| (m.clone(), p.to_vec())).collect();
    maps.push((catalog::anisotropic(&ctx.h1, 2, -3), ctx.h1.sample_points().to_vec()));
    maps.push((catalog::heisenberg_diagonal(&ctx.h2, &[rat(3), ratio(-1, 2)], &rat(2)), ctx.h2.sample_points().to_vec()));
    for (f, points) in &maps {
        if f.source().dim() != f.target().dim() {
            continue;
        }
        for p in points {
            match popp_pullback_check(f, p) {
                Ok(c) => s.residual(c.slack, ctx.cfg.tol, || format!("{} at {}", f.name(), format_point(p))),
                Err(e) => s.error(format!("{} at {}", f.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_theorem_relations(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.theorem_relations", Measure::MinSlack);
    let mut rng = ctx.rng(20);
    let mut maps: Vec<(MapSpec, Vec<Vec<Rational>>)> = ctx.contact_maps().into_iter().map(|(m, p)| (m.clone(), p.to_vec())).collect();
    for _ in 0..10 {
        let a: Vec<Rational> =
            (0..2).map(|_| ratio(rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(1..=3))).collect();
        let c = ratio(rng.gen_range(1..=5), rng.gen_range(1..=3));
        maps.push((catalog::heisenberg_diagonal(&ctx.h2, &a, &c), ctx.h2.sample_points().to_vec()));
    }
    for (f, points) in &maps {
        let reports: Result<Vec<_>, _> = points.iter().map(|p| qr_constants(f, p, ctx.cfg.tol)).collect();
        let rel = reports.and_then(|r| {
            for q in &r {
                for c in &q.theorem_checks.checks {
                    s.slack(c.slack, ctx.cfg.tol, || format!("{} at {}: {}", f.name(), format_point(&q.point), c.name));
                }
            }
            let (q, k) = (r[0].homogeneous_dim, r[0].rank);
            check_theorem_relations(&r, q, k, ctx.cfg.tol)
        });
        match rel {
            Ok(rel) => {
                for c in &rel.checks.checks {
                    s.slack(c.slack, ctx.cfg.tol, || format!("{}: {}", f.name(), c.name));
                }
            }
            Err(e) => s.error(f.name().to_string(), e),
        }
    }
    s.finish()
}

fn suite_dairbekov(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("maps.dairbekov", Measure::MaxResidual);
    for (f, points) in ctx.contact_maps() {
        if popp_core::maps::standard_heisenberg_n(f.source()).is_none() || popp_core::maps::standard_heisenberg_n(f.target()).is_none() {
            continue;
        }
        for p in points {
            match heisenberg_dairbekov(f, p, ctx.cfg.tol) {
                Ok(d) => {
                    let worst = d.checks.iter().map(|c| c.rel_diff).fold(0.0, f64::max);
                    s.residual(worst, ctx.cfg.tol, || format!("{} at {}", f.name(), format_point(p)));
                }
                Err(e) => s.error(format!("{} at {}", f.name(), format_point(p)), e),
            }
        }
    }
    s.finish()
}

fn suite_json_determinism(ctx: &Context) -> SuiteResult {
    let mut s = Suite::new("cli.json_determinism", Measure::Failures);
    let runs = |m: &Manifest| -> Vec<String> {
        let mut out = Vec::new();
        for name in ["heisenberg1", "engel"] {
            if let Ok(o) = analyze(m, name) {
                out.push(render(&o.report));
            }
            if let Ok(o) = distort(m, name, &MetricPair::Random { count: 3, seed: ctx.cfg.seed }, ctx.cfg.tol) {
                out.push(render(&o.report));
            }
        }
        out
    };
    let (a, b) = (runs(ctx.manifest), runs(ctx.manifest));
    s.check(!a.is_empty() && a == b, || "reports differ between identical runs".into());
    s.finish()
}

pub fn run_suites(manifest: &Manifest, cfg: &SelftestConfig) -> Vec<SuiteResult> {
    let ctx = Context {
        manifest,
        cfg,
        h1: from_manifest(manifest, "heisenberg1", || catalog::heisenberg(1)),
        h2: from_manifest(manifest, "heisenberg2", || catalog::heisenberg(2)),
        engel: from_manifest(manifest, "engel", catalog::engel),
        riemann2: from_manifest(manifest, "riemann2", || catalog::euclidean(2)),
    };
    let suites: Vec<fn(&Context) -> SuiteResult> = vec![
        |c| suite_gen_eigen(c, false),
        |c| suite_gen_eigen(c, true),
        suite_reproducible,
        suite_jacobi,
        suite_bilinear,
        suite_flag_invariants,
        suite_point_independence,
        suite_duality,
        suite_antisymmetry,
        suite_permutation,
        suite_popp_frame_invariance,
        suite_h1_density,
        suite_block_determinant,
        suite_riemannian_density,
        suite_sandwich,
        suite_step2,
        suite_h1_identity,
        suite_distortion_frame_invariance,
        suite_scaling,
        suite_swap,
        suite_conformality,
        suite_chain_rule,
        suite_jacobian_multiplicative,
        suite_conformal_maps,
        suite_isometries,
        suite_pullback,
        suite_theorem_relations,
        suite_dairbekov,
        suite_json_determinism,
    ];
    suites.into_iter().map(|f| f(&ctx)).collect()
}

pub fn selftest(manifest: &Manifest, cfg: &SelftestConfig) -> Outcome {
    let results = run_suites(manifest, cfg);
    let passed = results.iter().all(SuiteResult::passed);
    let messages = results
        .iter()
        .map(|r| {
            let status = if r.passed() { "PASS" } else { "FAIL" };
            let mut line = format!("{status} {:<42} cases={:<5} {}={:.3e}", r.name, r.cases, r.measure.label(), r.worst);
            if let Some(first) = r.failures.first() {
                line.push_str(&format!("  first failure: {first}"));
            }
            line
        })
        .collect();
    let suites: Vec<Value> = results
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "passed": r.passed(),
                "cases": r.cases,
                "measure": r.measure.label(),
                "worst": num(r.worst),
                "failures": r.failures.iter().take(5).collect::<Vec<_>>(),
                "failure_count": r.failures.len(),
            })
        })
        .collect();
    let report = json!({
        "command": "selftest",
        "manifest": manifest.origin,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "tol": num(cfg.tol),
        "fault_injected": cfg.inject_fault,
        "suites": suites,
        "passed": passed,
    });
    Outcome { report, passed, messages }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64, inject_fault: bool) -> SelftestConfig {
        SelftestConfig { seed, tol: 1e-9, samples: 12, inject_fault }
    }

    #[test]
    fn small_run_passes() {
        let out = selftest(&Manifest::bundled(), &small(3, false));
        assert!(out.passed, "{:#?}", out.messages);
    }

    #[test]
    fn fault_breaks_frame_invariance_only() {
        let results = run_suites(&Manifest::bundled(), &small(3, true));
        for r in &results {
            assert_eq!(r.passed(), r.name != "popp.frame_invariance", "{}: {:?}", r.name, r.failures.first());
        }
    }
}
