//! Distortion of a pair of horizontal metrics through their Popp extensions.
//!
//! With `λ₁ ≤ … ≤ λ_k` the eigenvalues of `g⁻¹h` and `μ` those of the block
//! diagonal `ḡ⁻¹h̄`:
//!
//! * `H² = λ_k^k / Π λ_i` (horizontal distortion),
//! * `K² = λ_k^Q / det(ḡ⁻¹h̄)` (Popp distortion),
//!
//! where the operator norm is the largest pencil eigenvalue.

use crate::error::{Error, Result};
use crate::exactalg::{gen_eigenvalues, FloatMatrix};
use crate::popp::PoppExtension;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    /// The check is `lhs ≤ rhs`.
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs − lhs) / max(|lhs|, |rhs|)`; negative means violated.
    pub slack: f64,
    pub passed: bool,
}

impl BoundCheck {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs());
        let slack = if scale == 0.0 { 0.0 } else { (rhs - lhs) / scale };
        let passed = slack >= -tol && lhs.is_finite() && rhs.is_finite();
        Self { name: name.into(), lhs, rhs, slack, passed }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Smallest slack over all checks (most negative = worst).
    pub fn worst_slack(&self) -> f64 {
        self.checks.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistortionReport {
    /// Eigenvalues of `g⁻¹h`, increasing.
    pub lambda: Vec<f64>,
    /// Eigenvalues of `ḡ⁻¹h̄`, increasing.
    pub mu: Vec<f64>,
    pub mu_by_layer: Vec<Vec<f64>>,
    pub h2: f64,
    pub k2: f64,
    /// `det(ḡ⁻¹h̄)` from block determinants.
    pub det_full: f64,
    pub homogeneous_dim: usize,
    pub rank: usize,
    pub weights: Vec<usize>,
    pub bounds: BoundReport,
}

impl DistortionReport {
    pub fn step(&self) -> usize {
        self.mu_by_layer.len()
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.lambda.last().unwrap()
    }
}

/// Per-layer eigenvalues of `g_s⁻¹h_s`, and all of them sorted.
pub fn distortion_eigenvalues(g: &PoppExtension, h: &PoppExtension) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if !g.same_frame(h) {
        return Err(Error::FrameMismatch("Popp extensions built in different adapted frames".into()));
    }
    let by_layer = g.blocks().iter().zip(h.blocks()).map(|(gs, hs)| gen_eigenvalues(gs, hs)).collect::<Result<Vec<_>>>()?;
    let mut all: Vec<f64> = by_layer.iter().flatten().copied().collect();
    all.sort_by(f64::total_cmp);
    Ok((all, by_layer))
}

/// `λ_k^k / Π λ_i` evaluated as `Π (λ_k / λ_i)`.
pub fn h2_from_eigenvalues(lambda: &[f64]) -> f64 {
    let max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    lambda.iter().map(|l| max / l).product()
}

pub fn horizontal_distortion(g: &FloatMatrix, h: &FloatMatrix) -> Result<f64> {
    Ok(h2_from_eigenvalues(&gen_eigenvalues(g, h)?))
}

/// `λ_k^Q / det(ḡ⁻¹h̄)`.
pub fn popp_distortion(lambda_max: f64, det_full: f64, q: usize) -> f64 {
    lambda_max.powi(q as i32) / det_full
}

/// `det(ḡ⁻¹h̄) = Π_s det h_s / det g_s`.
pub fn distortion_determinant(g: &PoppExtension, h: &PoppExtension) -> Result<f64> {
    let mut det = 1.0;
    for (gs, hs) in g.blocks().iter().zip(h.blocks()) {
        det *= hs.det()? / gs.det()?;
    }
    Ok(det)
}

fn weights_from_bounds(bounds: &[usize]) -> Vec<usize> {
    bounds.windows(2).enumerate().flat_map(|(s, w)| std::iter::repeat_n(s + 1, w[1] - w[0])).collect()
}

/// Full distortion report for `(g, h)` with bound checks at relative slack `tol`.
pub fn analyze_pair(g: &PoppExtension, h: &PoppExtension, tol: f64) -> Result<DistortionReport> {
    let (mu, mu_by_layer) = distortion_eigenvalues(g, h)?;
    let lambda = mu_by_layer[0].clone();
    let weights = weights_from_bounds(g.layer_bounds());
    let q: usize = weights.iter().sum();
    let det_full = distortion_determinant(g, h)?;
    let h2 = h2_from_eigenvalues(&lambda);
    let k2 = popp_distortion(*lambda.last().unwrap(), det_full, q);
    let mut report = DistortionReport {
        rank: lambda.len(),
        lambda,
        mu,
        mu_by_layer,
        h2,
        k2,
        det_full,
        homogeneous_dim: q,
        weights,
        bounds: BoundReport::default(),
    };
    report.bounds = verify_bounds(&report, tol);
    Ok(report)
}

/// Eigenvalue sandwich per layer, determinant sandwich, and `H² ≤ K² ≤ (H²)^{Q−1}`.
pub fn verify_bounds(r: &DistortionReport, tol: f64) -> BoundReport {
    let (l1, lk) = (r.lambda_min(), r.lambda_max());
    let q = r.homogeneous_dim as i32;
    let mut checks = Vec::new();
    for (idx, layer) in r.mu_by_layer.iter().enumerate().skip(1) {
        let s = (idx + 1) as i32;
        let lo = layer.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = layer.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(BoundCheck::new(format!("layer{s}_lower"), l1.powi(s), lo, tol));
        checks.push(BoundCheck::new(format!("layer{s}_upper"), hi, lk.powi(s), tol));
    }
    checks.push(BoundCheck::new("det_lower", l1.powi(q - 1) * lk, r.det_full, tol));
    checks.push(BoundCheck::new("det_upper", r.det_full, l1 * lk.powi(q - 1), tol));
    checks.push(BoundCheck::new("h2_le_k2", r.h2, r.k2, tol));
    checks.push(BoundCheck::new("k2_le_h2_pow", r.k2, r.h2.powi(q - 1), tol));
    BoundReport { checks }
}

/// `λ₁λ₂ ≤ μ ≤ λ_{k−1}λ_k` for every layer-2 eigenvalue of a step-2 structure.
pub fn step2_refined_bounds(r: &DistortionReport, tol: f64) -> Result<BoundReport> {
    if r.step() != 2 {
        return Err(Error::NotStep2(r.step()));
    }
    let k = r.lambda.len();
    let lower = r.lambda[0] * r.lambda[1];
    let upper = r.lambda[k - 2] * r.lambda[k - 1];
    let mut checks = Vec::new();
    for (i, &mu) in r.mu_by_layer[1].iter().enumerate() {
        checks.push(BoundCheck::new(format!("mu{}_lower", i + 1), lower, mu, tol));
        checks.push(BoundCheck::new(format!("mu{}_upper", i + 1), mu, upper, tol));
    }
    Ok(BoundReport { checks })
}
