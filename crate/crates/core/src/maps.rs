//! Polynomial maps between manifold specs and their quasiregularity diagnostics.
//!
//! All constants are pointwise: `‖Df‖` and `‖Df‖_s` are the square roots of the
//! extreme pencil eigenvalues of `(g, f*h)`, and `J_f = det(ḡ⁻¹·overline{f*h})^{1/2}`.

use std::sync::Arc;

use num::{Signed, Zero};

use crate::distortion::{analyze_pair, BoundCheck, BoundReport, DistortionReport};
use crate::error::{Error, Result};
use crate::exactalg::{rel_diff, to_f64, ExactMatrix, Polynomial, Rational};
use crate::popp::{popp_density, popp_density_with_metric, LocalStructure};
use crate::srmanifold::{format_point, ManifoldSpec, VectorField};

#[derive(Clone, Debug)]
pub struct MapSpec {
    name: String,
    source: Arc<ManifoldSpec>,
    target: Arc<ManifoldSpec>,
    components: Vec<Polynomial>,
    /// `jacobian[a][j] = ∂f^a/∂x^j`.
    jacobian: Vec<Vec<Polynomial>>,
}

impl MapSpec {
    pub fn new(name: &str, source: Arc<ManifoldSpec>, target: Arc<ManifoldSpec>, components: Vec<Polynomial>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidMap { map: name.to_string(), reason };
        if components.len() != target.dim() {
            return Err(invalid(format!("{} components for target '{}' of dimension {}", components.len(), target.name(), target.dim())));
        }
        if let Some(i) = components.iter().position(|c| c.nvars() != source.dim()) {
            return Err(invalid(format!("component {} is not a polynomial in the coordinates of '{}'", i + 1, source.name())));
        }
        let jacobian = components.iter().map(|c| (0..source.dim()).map(|j| c.partial(j)).collect()).collect();
        Ok(Self { name: name.to_string(), source, target, components, jacobian })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<ManifoldSpec> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ManifoldSpec> {
        &self.target
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn jacobian(&self) -> &[Vec<Polynomial>] {
        &self.jacobian
    }

    pub fn image(&self, p: &[Rational]) -> Vec<Rational> {
        self.components.iter().map(|c| c.eval(p)).collect()
    }

    pub fn jacobian_at(&self, p: &[Rational]) -> ExactMatrix {
        ExactMatrix::from_rows(self.jacobian.iter().map(|row| row.iter().map(|d| d.eval(p)).collect()).collect())
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &MapSpec) -> Result<MapSpec> {
        if self.target.name() != next.source.name() || self.target.dim() != next.source.dim() {
            return Err(Error::InvalidMap {
                map: format!("{} ∘ {}", next.name, self.name),
                reason: format!("target '{}' does not match source '{}'", self.target.name(), next.source.name()),
            });
        }
        let components = next.components.iter().map(|c| c.compose(&self.components)).collect();
        MapSpec::new(&format!("{} ∘ {}", next.name, self.name), self.source.clone(), next.target.clone(), components)
    }

    fn err_point(&self, p: &[Rational]) -> String {
        format_point(p)
    }
}

/// `Df(p)·X(p)`, exactly.
pub fn pushforward(map: &MapSpec, x: &VectorField, p: &[Rational]) -> Vec<Rational> {
    map.jacobian_at(p).mul_vec(&x.eval(p))
}

/// Pushforwards of the source generators written in the target adapted frame at `f(p)`.
#[derive(Clone, Debug)]
pub struct HorizontalDifferential {
    pub image: Vec<Rational>,
    /// Row `i` holds the coefficients of `f_*X_i` on the target horizontal generators.
    pub horizontal: ExactMatrix,
    /// Largest squared norm of the coefficients on positions of weight > 1.
    pub defect_sq: Rational,
    pub target_local: LocalStructure,
}

impl HorizontalDifferential {
    pub fn is_contact(&self) -> bool {
        self.defect_sq.is_zero()
    }

    pub fn defect(&self) -> f64 {
        to_f64(&self.defect_sq).sqrt()
    }
}

pub fn horizontal_differential(map: &MapSpec, p: &[Rational]) -> Result<HorizontalDifferential> {
    let image = map.image(p);
    let target_local = LocalStructure::at(&map.target, &image)?;
    let frame = &target_local.frame;
    let kt = frame.rank();
    let jac = map.jacobian_at(p);
    let mut rows = Vec::with_capacity(map.source.rank());
    let mut defect_sq = Rational::zero();
    for x in map.source.frame() {
        let coeffs = frame.coefficients(&jac.mul_vec(&x.eval(p)));
        let vertical = coeffs[kt..].iter().fold(Rational::zero(), |acc, c| acc + c * c);
        if vertical > defect_sq {
            defect_sq = vertical;
        }
        rows.push(coeffs[..kt].to_vec());
    }
    Ok(HorizontalDifferential { image, horizontal: ExactMatrix::from_rows(rows), defect_sq, target_local })
}

/// Euclidean norm of the non-horizontal coefficients of `f_*X_i`, maximised over `i`.
pub fn contact_defect(map: &MapSpec, p: &[Rational]) -> Result<f64> {
    Ok(horizontal_differential(map, p)?.defect())
}

/// `f*h` in the source generator basis, requiring an exactly contact point.
pub fn pullback_metric(map: &MapSpec, p: &[Rational]) -> Result<ExactMatrix> {
    pullback_metric_tol(map, p, 0.0)
}

/// As [`pullback_metric`], accepting defects up to `tol` (drops the vertical part).
pub fn pullback_metric_tol(map: &MapSpec, p: &[Rational], tol: f64) -> Result<ExactMatrix> {
    let d = horizontal_differential(map, p)?;
    pullback_from(map, p, &d, tol)
}

fn pullback_from(map: &MapSpec, p: &[Rational], d: &HorizontalDifferential, tol: f64) -> Result<ExactMatrix> {
    if !d.is_contact() && d.defect() > tol {
        return Err(Error::NotContact { map: map.name.clone(), point: map.err_point(p), defect: d.defect() });
    }
    let h = map.target.metric_at(&d.image);
    let fh = d.horizontal.mul(&h).mul(&d.horizontal.transpose());
    if !fh.is_positive_definite() {
        return Err(Error::DegeneratePullback { map: map.name.clone(), point: map.err_point(p) });
    }
    Ok(fh)
}

#[derive(Clone, Debug)]
pub struct QRReport {
    pub point: Vec<Rational>,
    pub lambda: Vec<f64>,
    pub df_norm: f64,
    pub df_min: f64,
    pub h: f64,
    pub k_popp: f64,
    pub k_analytic_bound: f64,
    pub j_f: f64,
    pub contact_defect: f64,
    pub homogeneous_dim: usize,
    pub rank: usize,
    pub pullback: ExactMatrix,
    pub distortion: DistortionReport,
    /// Pointwise relations: `‖Df‖/‖Df‖_s ≤ H ≤ K_popp ≤ H^{Q−1}`.
    pub theorem_checks: BoundReport,
}

impl QRReport {
    pub fn is_conformal(&self, tol: f64) -> bool {
        self.df_norm * self.df_norm / (self.df_min * self.df_min) - 1.0 <= tol
    }

    pub fn norm_ratio(&self) -> f64 {
        self.df_norm / self.df_min
    }
}

pub fn qr_constants(map: &MapSpec, p: &[Rational], tol: f64) -> Result<QRReport> {
    let d = horizontal_differential(map, p)?;
    let fh = pullback_from(map, p, &d, 0.0)?;
    let local = LocalStructure::at(&map.source, p)?;
    let g = map.source.metric_at(p);
    let dist = analyze_pair(&local.extension(&g)?, &local.extension(&fh)?, tol)?;
    let q = dist.homogeneous_dim;
    let (l1, lk) = (dist.lambda_min(), dist.lambda_max());
    let j_f = dist.det_full.sqrt();
    let h = dist.h2.sqrt();
    let k_popp = dist.k2.sqrt();
    let df_norm = lk.sqrt();
    let df_min = l1.sqrt();
    let k_analytic_bound = df_norm.powi(q as i32) / j_f;
    let theorem_checks = BoundReport {
        checks: vec![
            BoundCheck::new("norm_ratio_le_H", df_norm / df_min, h, tol),
            BoundCheck::new("H_le_K_popp", h, k_popp, tol),
            BoundCheck::new("K_popp_le_H_pow", k_popp, h.powi(q as i32 - 1), tol),
            BoundCheck::new("K_analytic_le_K_popp", k_analytic_bound, k_popp, tol),
            BoundCheck::new("K_popp_le_K_analytic", k_popp, k_analytic_bound, tol),
        ],
    };
    Ok(QRReport {
        point: p.to_vec(),
        lambda: dist.lambda.clone(),
        df_norm,
        df_min,
        h,
        k_popp,
        k_analytic_bound,
        j_f,
        contact_defect: d.defect(),
        homogeneous_dim: q,
        rank: dist.rank,
        pullback: fh,
        distortion: dist,
        theorem_checks,
    })
}

/// Sample maxima of the pointwise constants and the four constant relations.
#[derive(Clone, Debug)]
pub struct TheoremRelations {
    /// Max of `‖Df‖/‖Df‖_s`.
    pub h_star: f64,
    /// Max of `K_analytic_bound`.
    pub k_a: f64,
    pub h_hat: f64,
    pub k_hat: f64,
    pub q: usize,
    pub k: usize,
    pub checks: BoundReport,
}

pub fn check_theorem_relations(reports: &[QRReport], q: usize, k: usize, tol: f64) -> Result<TheoremRelations> {
    if reports.is_empty() {
        return Err(Error::EmptyReports);
    }
    let max = |f: fn(&QRReport) -> f64| reports.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let h_star = max(QRReport::norm_ratio);
    let k_a = max(|r| r.k_analytic_bound);
    let h_hat = max(|r| r.h);
    let k_hat = max(|r| r.k_popp);
    let (qi, ki) = (q as i32, k as i32);
    let checks = BoundReport {
        checks: vec![
            BoundCheck::new("K_a_le_Hstar_pow_Q-1", k_a, h_star.powi(qi - 1), tol),
            BoundCheck::new("Hhat_le_Hstar_pow_k-1", h_hat, h_star.powi(ki - 1), tol),
            BoundCheck::new("Khat_le_Hhat_pow_Q-1", k_hat, h_hat.powi(qi - 1), tol),
            BoundCheck::new("Hhat_le_Khat", h_hat, k_hat, tol),
        ],
    };
    Ok(TheoremRelations { h_star, k_a, h_hat, k_hat, q, k, checks })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PullbackCheck {
    /// Target Popp density at `f(p)` times `|det Df(p)|`.
    pub pulled_back: f64,
    /// Popp density of `f*h` on the source.
    pub direct: f64,
    pub slack: f64,
}

/// Compares the pullback of the target Popp volume with the Popp volume of `f*h`.
pub fn popp_pullback_check(map: &MapSpec, p: &[Rational]) -> Result<PullbackCheck> {
    if map.source.dim() != map.target.dim() {
        return Err(Error::InvalidMap { map: map.name.clone(), reason: "pullback check needs equal dimensions".into() });
    }
    let det = map.jacobian_at(p).det()?;
    if det.is_zero() {
        return Err(Error::SingularJacobian { map: map.name.clone(), point: map.err_point(p) });
    }
    let fh = pullback_metric(map, p)?;
    let pulled_back = popp_density(&map.target, &map.image(p))? * to_f64(&det.abs());
    let direct = popp_density_with_metric(&map.source, p, &fh)?;
    Ok(PullbackCheck { pulled_back, direct, slack: rel_diff(pulled_back, direct) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EqualityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_diff: f64,
    pub passed: bool,
}

impl EqualityCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let d = rel_diff(lhs, rhs);
        Self { name: name.into(), lhs, rhs, rel_diff: d, passed: d <= tol }
    }
}

/// Jacobians and distortion of a map of `Hⁿ` in the conventions of Dairbekov.
#[derive(Clone, Debug)]
pub struct DairbekovReport {
    pub n: usize,
    /// `|det|` of the horizontal differential in the standard frame.
    pub hj: f64,
    /// `HJ^{(n+1)/n}`.
    pub j: f64,
    pub j_f: f64,
    /// `‖Df‖^Q / J`.
    pub k_dairbekov: f64,
    pub h: f64,
    pub k_popp: f64,
    pub checks: Vec<EqualityCheck>,
}

impl DairbekovReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// `n` if `spec` is `Hⁿ` with the standard frame and identity metric.
pub fn standard_heisenberg_n(spec: &ManifoldSpec) -> Option<usize> {
    let dim = spec.dim();
    if dim < 3 || dim.is_multiple_of(2) {
        return None;
    }
    let n = (dim - 1) / 2;
    let frame = crate::catalog::heisenberg_frame(n);
    let frame_ok = spec.rank() == 2 * n && spec.frame().iter().zip(&frame).all(|(x, f)| x.components() == f.as_slice());
    let metric_ok = spec
        .metric()
        .iter()
        .enumerate()
        .all(|(i, row)| row.iter().enumerate().all(|(j, e)| if i == j { *e == Polynomial::one(dim) } else { e.is_zero() }));
    (frame_ok && metric_ok).then_some(n)
}

pub fn heisenberg_dairbekov(map: &MapSpec, p: &[Rational], tol: f64) -> Result<DairbekovReport> {
    let n = standard_heisenberg_n(&map.source).ok_or_else(|| Error::NotHeisenberg(map.source.name().into()))?;
    if standard_heisenberg_n(&map.target) != Some(n) {
        return Err(Error::NotHeisenberg(map.target.name().into()));
    }
    let qr = qr_constants(map, p, tol)?;
    let d = horizontal_differential(map, p)?;
    let hj = to_f64(&d.horizontal.det()?.abs());
    let e = (n as f64 + 1.0) / n as f64;
    let j = hj.powf(e);
    let k_dairbekov = qr.df_norm.powi(qr.homogeneous_dim as i32) / j;
    let lambda_prod: f64 = qr.lambda.iter().product();
    let checks = vec![
        EqualityCheck::new("HJ_eq_sqrt_prod_lambda", hj, lambda_prod.sqrt(), tol),
        EqualityCheck::new("J_eq_J_f", j, qr.j_f, tol),
        EqualityCheck::new("K_dairbekov_eq_H_pow", k_dairbekov, qr.h.powf(e), tol),
    ];
    Ok(DairbekovReport { n, hj, j, j_f: qr.j_f, k_dairbekov, h: qr.h, k_popp: qr.k_popp, checks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::exactalg::{rat, ratio};

    fn h1() -> Arc<ManifoldSpec> {
        Arc::new(catalog::heisenberg(1))
    }

    fn close(a: f64, b: f64) -> bool {
        rel_diff(a, b) < 1e-9
    }

    #[test]
    fn dilation_pushforward_and_constants() {
        let h = h1();
        let r = rat(3);
        let f = catalog::dilation(&h, &r);
        let origin = vec![rat(0); 3];
        assert_eq!(pushforward(&f, h.generator(0), &origin), vec![rat(3), rat(0), rat(0)]);
        for p in h.sample_points() {
            assert_eq!(contact_defect(&f, p).unwrap(), 0.0);
            assert_eq!(pullback_metric(&f, p).unwrap(), ExactMatrix::identity(2).scale(&rat(9)));
            let qr = qr_constants(&f, p, 1e-9).unwrap();
            assert!(close(qr.h, 1.0) && close(qr.k_popp, 1.0) && close(qr.j_f, 81.0));
            assert!(qr.is_conformal(1e-9));
            assert!(qr.theorem_checks.all_passed());
        }
    }

    #[test]
    fn anisotropic_map() {
        let h = h1();
        let f = catalog::anisotropic(&h, 1, 2);
        for p in h.sample_points() {
            let img = f.image(p);
            assert_eq!(pushforward(&f, h.generator(0), p), h.generator(0).eval(&img));
            assert_eq!(pushforward(&f, h.generator(1), p), h.generator(1).scale(&rat(2)).eval(&img));
            assert_eq!(pullback_metric(&f, p).unwrap(), ExactMatrix::diagonal(&[rat(1), rat(4)]));
            let qr = qr_constants(&f, p, 1e-9).unwrap();
            assert!(close(qr.lambda[0], 1.0) && close(qr.lambda[1], 4.0));
            assert!(close(qr.h, 2.0) && close(qr.j_f, 4.0) && close(qr.k_popp, 4.0) && close(qr.k_analytic_bound, 4.0));
        }
        let reports: Vec<_> = h.sample_points().iter().map(|p| qr_constants(&f, p, 1e-9).unwrap()).collect();
        let rel = check_theorem_relations(&reports, 4, 2, 1e-9).unwrap();
        assert!(close(rel.h_star, 2.0) && close(rel.k_a, 4.0) && close(rel.h_hat, 2.0) && close(rel.k_hat, 4.0));
        assert!(rel.checks.all_passed());
        assert!(matches!(check_theorem_relations(&[], 4, 2, 1e-9), Err(Error::EmptyReports)));
    }

    #[test]
    fn non_contact_map_rejected() {
        let h = h1();
        let f = catalog::map("shear", &h, &h, &["x", "y", "t + x"]);
        let p = vec![rat(1), rat(1), rat(0)];
        assert!(contact_defect(&f, &p).unwrap() > 0.0);
        match pullback_metric(&f, &p) {
            Err(Error::NotContact { map, point, .. }) => {
                assert_eq!(map, "shear");
                assert_eq!(point, "(1, 1, 0)");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_pullback_rejected() {
        let h = h1();
        let f = catalog::map("collapse", &h, &h, &["x", "0", "0"]);
        assert!(matches!(pullback_metric(&f, &[rat(0), rat(0), rat(0)]), Err(Error::DegeneratePullback { .. })));
        assert!(matches!(popp_pullback_check(&f, &[rat(0), rat(0), rat(0)]), Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn pullback_naturality() {
        let h = h1();
        let maps = vec![
            catalog::dilation(&h, &ratio(1, 2)),
            catalog::anisotropic(&h, 2, -3),
            catalog::rotation(&h, &ratio(3, 5), &ratio(4, 5)),
            catalog::left_translation(&h, &rat(1), &ratio(-2, 3), &rat(5)),
        ];
        for f in &maps {
            for p in h.sample_points() {
                let c = popp_pullback_check(f, p).unwrap();
                assert!(c.slack <= 1e-9, "{} at {}: {c:?}", f.name(), format_point(p));
            }
        }
        let c = popp_pullback_check(&catalog::dilation(&h, &rat(2)), &h.sample_points()[2]).unwrap();
        assert!(close(c.direct, 16.0 / (4.0 * 2f64.sqrt())));
    }

    #[test]
    fn rotation_and_translation_are_isometries() {
        let h = h1();
        for f in [catalog::rotation(&h, &ratio(5, 13), &ratio(12, 13)), catalog::left_translation(&h, &rat(2), &rat(-1), &ratio(1, 3))] {
            for p in h.sample_points() {
                let qr = qr_constants(&f, p, 1e-9).unwrap();
                assert!(close(qr.h, 1.0) && close(qr.k_popp, 1.0) && close(qr.j_f, 1.0), "{}", f.name());
            }
        }
    }

    #[test]
    fn dairbekov_on_h1_and_h2() {
        let h = h1();
        let f = catalog::anisotropic(&h, 1, 2);
        let d = heisenberg_dairbekov(&f, &h.sample_points()[1], 1e-9).unwrap();
        assert!(close(d.hj, 2.0) && close(d.j, 4.0) && close(d.k_dairbekov, 4.0));
        assert!(close(d.k_dairbekov, d.h * d.h));
        assert!(d.all_passed());

        let h2 = Arc::new(catalog::heisenberg(2));
        let g = catalog::heisenberg_diagonal(&h2, &[rat(1), rat(2)], &rat(3));
        for p in h2.sample_points() {
            let d = heisenberg_dairbekov(&g, p, 1e-9).unwrap();
            assert!(d.all_passed(), "{d:?}");
        }
        let r2 = Arc::new(catalog::euclidean(2));
        let id = catalog::map("id", &r2, &r2, &["x", "y"]);
        assert!(matches!(heisenberg_dairbekov(&id, &r2.sample_points()[0], 1e-9), Err(Error::NotHeisenberg(_))));
    }

    #[test]
    fn composition_chain_rule_and_jacobian() {
        let h = h1();
        let f = catalog::anisotropic(&h, 2, 3);
        let g = catalog::left_translation(&h, &rat(1), &rat(2), &rat(0));
        let gf = f.then(&g).unwrap();
        for p in h.sample_points() {
            for x in h.frame() {
                let direct = pushforward(&gf, x, p);
                let composed = g.jacobian_at(&f.image(p)).mul_vec(&pushforward(&f, x, p));
                assert_eq!(direct, composed);
            }
            let jf = |m: &MapSpec, q: &[Rational]| qr_constants(m, q, 1e-9).unwrap().j_f;
            assert!(rel_diff(jf(&gf, p), jf(&f, p) * jf(&g, &f.image(p))) < 1e-8);
        }
    }

    #[test]
    fn riemannian_square_map() {
        let r2 = Arc::new(catalog::euclidean(2));
        let f = catalog::map("square", &r2, &r2, &["x^2 - y^2", "2*x*y"]);
        for p in r2.sample_points().iter().skip(1) {
            let qr = qr_constants(&f, p, 1e-9).unwrap();
            assert!((qr.h - 1.0).abs() < 1e-9);
            assert!(close(qr.k_popp, qr.h));
        }
        assert!(matches!(qr_constants(&f, &r2.sample_points()[0], 1e-9), Err(Error::DegeneratePullback { .. })));
    }

    #[test]
    fn map_validation() {
        let h = h1();
        let r2 = Arc::new(catalog::euclidean(2));
        let comps = vec![Polynomial::zero(3); 3];
        assert!(matches!(MapSpec::new("bad", h.clone(), r2.clone(), comps), Err(Error::InvalidMap { .. })));
        let f = catalog::map("id", &h, &h, &["x", "y", "t"]);
        let g = catalog::map("id2", &r2, &r2, &["x", "y"]);
        assert!(f.then(&g).is_err());
    }
}
