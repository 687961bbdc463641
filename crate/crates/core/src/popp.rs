//! Popp extension of a horizontal metric in an adapted frame, the Popp volume
//! density, and the change-of-adapted-frame law.
//!
//! In an adapted frame the extension is block diagonal. The first block is the
//! horizontal metric; block `s ≥ 2` is the inverse of
//!
//! ```text
//! (g_s⁻¹)^{αβ} = Σ b^α_{i₁…i_s} g^{i₁j₁} ⋯ g^{i_s j_s} b^β_{j₁…j_s}
//! ```
//!
//! where `b` are the adapted structure constants. Under a change of adapted
//! frame with diagonal blocks `T_s` the blocks transform as `T_sᵀ g_s T_s`,
//! which keeps the Popp volume frame independent.

use num::Zero;

use crate::adapted::{build_adapted_frame, structure_constants, AdaptedFrame, StructureConstants};
use crate::error::{Error, Result};
use crate::exactalg::{rel_diff, ExactMatrix, FloatMatrix, Rational};
use crate::srmanifold::{compute_flag, format_point, FlagReport, ManifoldSpec};

/// Blocks up to this size are inverted exactly.
pub const EXACT_INVERSE_MAX: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct PoppExtension {
    blocks: Vec<FloatMatrix>,
    exact_blocks: Vec<Option<ExactMatrix>>,
    inverse_blocks: Vec<ExactMatrix>,
    point: Vec<Rational>,
    layer_bounds: Vec<usize>,
    frame_matrix: ExactMatrix,
}

impl PoppExtension {
    /// `g_1, …, g_m`.
    pub fn blocks(&self) -> &[FloatMatrix] {
        &self.blocks
    }

    /// Exact blocks when every block could be inverted exactly.
    pub fn exact_block(&self, s: usize) -> Option<&ExactMatrix> {
        self.exact_blocks.get(s - 1).and_then(Option::as_ref)
    }

    /// Exact `g_s⁻¹` (block 1 is the inverse horizontal metric).
    pub fn inverse_block(&self, s: usize) -> &ExactMatrix {
        &self.inverse_blocks[s - 1]
    }

    pub fn point(&self) -> &[Rational] {
        &self.point
    }

    pub fn layer_bounds(&self) -> &[usize] {
        &self.layer_bounds
    }

    /// Identifies the adapted frame the extension was built in.
    pub fn frame_matrix(&self) -> &ExactMatrix {
        &self.frame_matrix
    }

    pub fn same_frame(&self, other: &PoppExtension) -> bool {
        self.point == other.point && self.layer_bounds == other.layer_bounds && self.frame_matrix == other.frame_matrix
    }

    /// The full block-diagonal matrix `ḡ`.
    pub fn full_matrix(&self) -> FloatMatrix {
        FloatMatrix::block_diagonal(&self.blocks)
    }

    pub fn block_determinants(&self) -> Result<Vec<f64>> {
        self.blocks.iter().map(FloatMatrix::det).collect()
    }
}

/// Applies `m` to tensor slot `slot` of a `k^s` tensor stored with slot 0 most significant.
fn apply_slot(t: &[Rational], k: usize, s: usize, slot: usize, m: &ExactMatrix) -> Vec<Rational> {
    let stride = k.pow((s - 1 - slot) as u32);
    let mut out = vec![Rational::zero(); t.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let i = (idx / stride) % k;
        let base = idx - i * stride;
        let mut acc = Rational::zero();
        for j in 0..k {
            let mij = &m[(i, j)];
            if mij.is_zero() {
                continue;
            }
            let v = &t[base + j * stride];
            if !v.is_zero() {
                acc += mij * v;
            }
        }
        *o = acc;
    }
    out
}

/// Exact `(g_s⁻¹)` for every layer `s ≥ 2` from constants and the horizontal metric.
pub fn inverse_layer_blocks(metric_inv: &ExactMatrix, b: &StructureConstants) -> Vec<ExactMatrix> {
    let k = b.rank();
    b.layers()
        .iter()
        .map(|layer| {
            let s = layer.layer;
            let raised: Vec<Vec<Rational>> =
                layer.values.iter().map(|bv| (0..s).fold(bv.clone(), |acc, slot| apply_slot(&acc, k, s, slot, metric_inv))).collect();
            let size = layer.values.len();
            let mut out = ExactMatrix::zeros(size, size);
            for a in 0..size {
                for c in 0..size {
                    out[(a, c)] = layer.values[a].iter().zip(&raised[c]).fold(Rational::zero(), |acc, (x, y)| acc + x * y);
                }
            }
            out
        })
        .collect()
}

/// Popp extension of `metric`, given in the manifold's generator basis, in `frame`.
pub fn popp_extension(metric: &ExactMatrix, frame: &AdaptedFrame, b: &StructureConstants) -> Result<PoppExtension> {
    let k = frame.rank();
    if metric.rows() != k || metric.cols() != k {
        return Err(Error::Dimension(format!("metric is {}x{}, frame has {k} horizontal fields", metric.rows(), metric.cols())));
    }
    let a = frame.horizontal_change();
    let g1 = a.mul(metric).mul(&a.transpose());
    if !g1.is_positive_definite() {
        return Err(Error::NotSpd(format!("horizontal metric at {} on '{}'", format_point(frame.point()), frame.manifold())));
    }
    let g1_inv = g1.inverse()?;
    let mut blocks = vec![g1.to_float()];
    let mut exact_blocks = vec![Some(g1)];
    let mut inverse_blocks = vec![g1_inv.clone()];
    for (layer, inv) in b.layers().iter().zip(inverse_layer_blocks(&g1_inv, b)) {
        let singular = || Error::Singular(format!("layer {} block of the Popp extension at {}", layer.layer, format_point(frame.point())));
        if inv.det()?.is_zero() {
            return Err(singular());
        }
        if inv.rows() <= EXACT_INVERSE_MAX {
            let gs = inv.inverse().map_err(|_| singular())?;
            blocks.push(gs.to_float());
            exact_blocks.push(Some(gs));
        } else {
            blocks.push(inv.to_float().inverse().map_err(|_| singular())?);
            exact_blocks.push(None);
        }
        inverse_blocks.push(inv);
    }
    Ok(PoppExtension {
        blocks,
        exact_blocks,
        inverse_blocks,
        point: frame.point().to_vec(),
        layer_bounds: frame.layer_bounds().to_vec(),
        frame_matrix: frame.frame_matrix().clone(),
    })
}

/// Flag, adapted frame and structure constants at one point.
#[derive(Clone, Debug)]
pub struct LocalStructure {
    pub flag: FlagReport,
    pub frame: AdaptedFrame,
    pub constants: StructureConstants,
}

impl LocalStructure {
    pub fn at(spec: &ManifoldSpec, point: &[Rational]) -> Result<Self> {
        let flag = compute_flag(spec, point)?;
        let frame = build_adapted_frame(spec, &flag)?;
        let constants = structure_constants(&frame);
        Ok(Self { flag, frame, constants })
    }

    /// Same flag, another adapted frame.
    pub fn with_frame(&self, frame: AdaptedFrame) -> Self {
        let constants = structure_constants(&frame);
        Self { flag: self.flag.clone(), frame, constants }
    }

    pub fn homogeneous_dim(&self) -> usize {
        self.flag.homogeneous_dim
    }

    pub fn extension(&self, metric: &ExactMatrix) -> Result<PoppExtension> {
        popp_extension(metric, &self.frame, &self.constants)
    }
}

/// Density of the Popp volume against chart Lebesgue measure, using `frame`.
///
/// The frame is orthonormalised block by block with `g_s = L_s L_sᵀ`; the density
/// is `1/|det E|` for the orthonormal frame `E`.
pub fn density_in_frame(frame: &AdaptedFrame, ext: &PoppExtension) -> Result<f64> {
    let n = frame.dim();
    let f = frame.frame_matrix().to_float();
    let mut e = FloatMatrix::zeros(n, n);
    let bounds = frame.layer_bounds();
    for (s, block) in ext.blocks().iter().enumerate() {
        let (start, end) = (bounds[s], bounds[s + 1]);
        let l_inv_t = block.cholesky()?.lower_triangular_inverse()?.transpose();
        let fs = f.block(0, start, n, end - start);
        let es = fs.mul(&l_inv_t);
        for i in 0..n {
            for j in 0..end - start {
                e[(i, start + j)] = es[(i, j)];
            }
        }
    }
    let det = e.det()?;
    if det == 0.0 {
        return Err(Error::Singular(format!("orthonormalised frame at {}", format_point(frame.point()))));
    }
    Ok(1.0 / det.abs())
}

/// Popp density of `spec`'s own horizontal metric at `point`.
pub fn popp_density(spec: &ManifoldSpec, point: &[Rational]) -> Result<f64> {
    popp_density_with_metric(spec, point, &spec.metric_at(point))
}

pub fn popp_density_with_metric(spec: &ManifoldSpec, point: &[Rational], metric: &ExactMatrix) -> Result<f64> {
    let local = LocalStructure::at(spec, point)?;
    let ext = local.extension(metric)?;
    density_in_frame(&local.frame, &ext)
}

#[derive(Clone, Debug)]
pub struct FrameLawReport {
    /// Column `i` holds the coefficients of `Y_i` in the `X` frame.
    pub change: ExactMatrix,
    pub lower_block_triangular: bool,
    /// Largest relative residual of `g̃_s − T_sᵀ g_s T_s` over all layers.
    pub block_residual: f64,
    pub density_a: f64,
    pub density_b: f64,
    pub density_rel_diff: f64,
    pub holds: bool,
}

/// Checks the block transformation law and density equality between two adapted frames.
pub fn verify_frame_law(spec: &ManifoldSpec, metric: &ExactMatrix, a: &AdaptedFrame, b: &AdaptedFrame, tol: f64) -> Result<FrameLawReport> {
    if a.point() != b.point() {
        return Err(Error::FrameMismatch(format!(
            "'{}': frames at {} and {}",
            spec.name(),
            format_point(a.point()),
            format_point(b.point())
        )));
    }
    if a.layer_bounds() != b.layer_bounds() {
        return Err(Error::FrameMismatch(format!(
            "'{}': layer bounds {:?} and {:?} differ",
            spec.name(),
            a.layer_bounds(),
            b.layer_bounds()
        )));
    }
    let change = a.coframe_matrix().mul(b.frame_matrix());
    let n = a.dim();
    let lower_block_triangular = (0..n).all(|j| (0..n).all(|i| a.layer_of(j) <= a.layer_of(i) || change[(j, i)].is_zero()));
    let ext_a = popp_extension(metric, a, &structure_constants(a))?;
    let ext_b = popp_extension(metric, b, &structure_constants(b))?;
    let bounds = a.layer_bounds();
    let mut block_residual: f64 = 0.0;
    for s in 0..a.step() {
        let (start, end) = (bounds[s], bounds[s + 1]);
        let ts = change.block(start, start, end - start, end - start).to_float();
        let predicted = ts.transpose().mul(&ext_a.blocks()[s]).mul(&ts);
        let actual = &ext_b.blocks()[s];
        let scale = actual.frobenius_norm().max(f64::MIN_POSITIVE);
        block_residual = block_residual.max(predicted.max_abs_diff(actual) / scale);
    }
    let density_a = density_in_frame(a, &ext_a)?;
    let density_b = density_in_frame(b, &ext_b)?;
    let density_rel_diff = rel_diff(density_a, density_b);
    let holds = lower_block_triangular && block_residual <= tol && density_rel_diff <= tol;
    Ok(FrameLawReport { change, lower_block_triangular, block_residual, density_a, density_b, density_rel_diff, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::exactalg::{rat, ratio};

    const H1_DENSITY: f64 = 0.17677669529663687; // 1/(4√2)

    fn t_frame(local: &LocalStructure, spec: &ManifoldSpec) -> AdaptedFrame {
        let t = ExactMatrix::diagonal(&[rat(1), rat(1), ratio(-1, 4)]);
        local.frame.transformed(spec, &t).unwrap()
    }

    #[test]
    fn heisenberg_blocks_in_both_frames() {
        let h = catalog::heisenberg(1);
        let p = [rat(2), ratio(-1, 3), rat(7)];
        let local = LocalStructure::at(&h, &p).unwrap();
        let id = ExactMatrix::identity(2);
        let ext = local.extension(&id).unwrap();
        assert_eq!(ext.inverse_block(2), &ExactMatrix::from_rows(vec![vec![rat(2)]]));
        assert_eq!(ext.exact_block(2).unwrap(), &ExactMatrix::from_rows(vec![vec![ratio(1, 2)]]));

        let tl = local.with_frame(t_frame(&local, &h));
        let ext_t = tl.extension(&id).unwrap();
        assert_eq!(ext_t.inverse_block(2), &ExactMatrix::from_rows(vec![vec![rat(32)]]));
        assert_eq!(ext_t.exact_block(2).unwrap(), &ExactMatrix::from_rows(vec![vec![ratio(1, 32)]]));
        assert_eq!(ext_t.exact_block(1).unwrap(), &id);
    }

    #[test]
    fn heisenberg_density_is_point_independent() {
        let h = catalog::heisenberg(1);
        for p in h.sample_points() {
            let d = popp_density(&h, p).unwrap();
            assert!(rel_diff(d, H1_DENSITY) < 1e-12, "{d} at {}", format_point(p));
        }
    }

    #[test]
    fn euclidean_density_is_lebesgue() {
        let r = catalog::euclidean(2);
        let d = popp_density(&r, &[rat(1), rat(2)]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let local = LocalStructure::at(&r, &[rat(0), rat(0)]).unwrap();
        let g = ExactMatrix::from_rows(vec![vec![rat(2), rat(1)], vec![rat(1), rat(3)]]);
        let ext = local.extension(&g).unwrap();
        assert_eq!(ext.blocks().len(), 1);
        assert_eq!(ext.exact_block(1).unwrap(), &g);
        let d = density_in_frame(&local.frame, &ext).unwrap();
        assert!(rel_diff(d, 5f64.sqrt()) < 1e-14);
    }

    #[test]
    fn frame_law_between_heisenberg_frames() {
        let h = catalog::heisenberg(1);
        let p = [rat(1), rat(1), rat(0)];
        let local = LocalStructure::at(&h, &p).unwrap();
        let a = t_frame(&local, &h);
        let rep = verify_frame_law(&h, &ExactMatrix::identity(2), &a, &local.frame, 1e-9).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rel_diff(rep.density_a, H1_DENSITY) < 1e-12);
        assert!(rel_diff(rep.density_b, H1_DENSITY) < 1e-12);

        let same = verify_frame_law(&h, &ExactMatrix::identity(2), &local.frame, &local.frame, 1e-9).unwrap();
        assert_eq!(same.change, ExactMatrix::identity(3));
        assert!(same.holds);
    }

    #[test]
    fn frame_law_with_mixed_generators() {
        let h = catalog::heisenberg(1);
        let p = [ratio(1, 2), rat(3), rat(-1)];
        let local = LocalStructure::at(&h, &p).unwrap();
        // Generators (X1 + X2, X2), layer-2 field scaled by 3.
        let t = ExactMatrix::from_rows(vec![vec![rat(1), rat(0), rat(0)], vec![rat(1), rat(1), rat(0)], vec![rat(0), rat(0), rat(3)]]);
        let b = local.frame.transformed(&h, &t).unwrap();
        let g = ExactMatrix::from_rows(vec![vec![rat(2), rat(1)], vec![rat(1), rat(1)]]);
        let rep = verify_frame_law(&h, &g, &local.frame, &b, 1e-9).unwrap();
        assert!(rep.holds, "{rep:?}");
        assert!(rep.lower_block_triangular);
    }

    #[test]
    fn frame_law_rejects_mismatched_frames() {
        let h = catalog::heisenberg(1);
        let a = LocalStructure::at(&h, &[rat(0), rat(0), rat(0)]).unwrap();
        let b = LocalStructure::at(&h, &[rat(1), rat(0), rat(0)]).unwrap();
        assert!(matches!(verify_frame_law(&h, &ExactMatrix::identity(2), &a.frame, &b.frame, 1e-9), Err(Error::FrameMismatch(_))));
    }

    #[test]
    fn engel_blocks_nonsingular() {
        let e = catalog::engel();
        for p in e.sample_points() {
            let local = LocalStructure::at(&e, p).unwrap();
            let ext = local.extension(&e.metric_at(p)).unwrap();
            assert_eq!(ext.blocks().len(), 3);
            for d in ext.block_determinants().unwrap() {
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn full_determinant_is_product_of_blocks() {
        let h2 = catalog::heisenberg(2);
        let p = &h2.sample_points()[2];
        let local = LocalStructure::at(&h2, p).unwrap();
        let g = ExactMatrix::from_rows(vec![
            vec![rat(3), rat(1), rat(0), rat(0)],
            vec![rat(1), rat(2), rat(0), rat(1)],
            vec![rat(0), rat(0), rat(1), rat(0)],
            vec![rat(0), rat(1), rat(0), rat(4)],
        ]);
        let ext = local.extension(&g).unwrap();
        let full = ext.full_matrix().det().unwrap();
        let prod: f64 = ext.block_determinants().unwrap().iter().product();
        assert!(rel_diff(full, prod) < 1e-12);
    }

    #[test]
    fn non_spd_metric_rejected() {
        let h = catalog::heisenberg(1);
        let local = LocalStructure::at(&h, &[rat(0), rat(0), rat(0)]).unwrap();
        let bad = ExactMatrix::from_rows(vec![vec![rat(1), rat(2)], vec![rat(2), rat(1)]]);
        assert!(matches!(local.extension(&bad), Err(Error::NotSpd(_))));
    }
}
