//! Adapted frames at a point and their structure constants.

use num::Zero;

use crate::error::{Error, Result};
use crate::exactalg::{ExactMatrix, Rational};
use crate::srmanifold::{format_point, lie_bracket, BracketWord, FlagReport, ManifoldSpec, VectorField};

/// `n` fields whose consecutive blocks project onto the layers `𝒟ˢ/𝒟ˢ⁻¹` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFrame {
    manifold: String,
    fields: Vec<VectorField>,
    point: Vec<Rational>,
    frame_matrix: ExactMatrix,
    coframe_matrix: ExactMatrix,
    layer_bounds: Vec<usize>,
    horizontal_change: ExactMatrix,
}

impl AdaptedFrame {
    fn assemble(
        spec: &ManifoldSpec,
        fields: Vec<VectorField>,
        point: &[Rational],
        layer_bounds: Vec<usize>,
        horizontal_change: ExactMatrix,
    ) -> Result<Self> {
        let cols: Vec<Vec<Rational>> = fields.iter().map(|f| f.eval(point)).collect();
        let frame_matrix = ExactMatrix::from_columns(&cols);
        let coframe_matrix = frame_matrix.inverse().map_err(|_| Error::NotAdapted {
            manifold: spec.name().into(),
            point: format_point(point),
            reason: "frame matrix is singular".into(),
        })?;
        Ok(Self {
            manifold: spec.name().into(),
            fields,
            point: point.to_vec(),
            frame_matrix,
            coframe_matrix,
            layer_bounds,
            horizontal_change,
        })
    }

    pub fn manifold(&self) -> &str {
        &self.manifold
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn point(&self) -> &[Rational] {
        &self.point
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// Number of horizontal fields `k`.
    pub fn rank(&self) -> usize {
        self.layer_bounds[1]
    }

    pub fn step(&self) -> usize {
        self.layer_bounds.len() - 1
    }

    /// Columns are the field values at the point.
    pub fn frame_matrix(&self) -> &ExactMatrix {
        &self.frame_matrix
    }

    /// Rows are the dual covectors `ω¹ … ωⁿ`.
    pub fn coframe_matrix(&self) -> &ExactMatrix {
        &self.coframe_matrix
    }

    /// `[0, k_1, …, k_m]`.
    pub fn layer_bounds(&self) -> &[usize] {
        &self.layer_bounds
    }

    /// Row `i` expresses horizontal field `i` in the manifold's generators.
    pub fn horizontal_change(&self) -> &ExactMatrix {
        &self.horizontal_change
    }

    /// One-based layer of position `pos` (zero-based).
    pub fn layer_of(&self, pos: usize) -> usize {
        self.layer_bounds.windows(2).position(|w| pos >= w[0] && pos < w[1]).expect("position inside frame") + 1
    }

    /// Coefficients of a tangent vector at the point in this frame.
    pub fn coefficients(&self, v: &[Rational]) -> Vec<Rational> {
        self.coframe_matrix.mul_vec(v)
    }

    /// New adapted frame `Y_i = Σ_j T[j][i] X_j`.
    ///
    /// `t` must be block lower triangular with respect to the layers and invertible.
    pub fn transformed(&self, spec: &ManifoldSpec, t: &ExactMatrix) -> Result<Self> {
        let n = self.dim();
        if t.rows() != n || t.cols() != n {
            return Err(Error::Dimension(format!("frame change must be {n}x{n}")));
        }
        for j in 0..n {
            for i in 0..n {
                if self.layer_of(j) > self.layer_of(i) && !t[(j, i)].is_zero() {
                    return Err(Error::NotAdapted {
                        manifold: spec.name().into(),
                        point: format_point(&self.point),
                        reason: format!("frame change moves field {} into a higher layer", i + 1),
                    });
                }
            }
        }
        if t.det()?.is_zero() {
            return Err(Error::Singular("frame change is not invertible".into()));
        }
        let fields = (0..n)
            .map(|i| {
                let col = t.column(i);
                let unit = col.iter().enumerate().all(|(j, v)| if j == i { crate::exactalg::rational::is_one(v) } else { v.is_zero() });
                let word = if unit { self.fields[i].word().clone() } else { BracketWord::Label(format!("Y{}", i + 1)) };
                let terms: Vec<(Rational, &VectorField)> = col.into_iter().zip(&self.fields).collect();
                VectorField::combination(&terms, word)
            })
            .collect();
        let k = self.rank();
        let t1 = t.block(0, 0, k, k);
        let horizontal_change = t1.transpose().mul(&self.horizontal_change);
        Self::assemble(spec, fields, &self.point, self.layer_bounds.clone(), horizontal_change)
    }
}

/// Frame made of the horizontal generators followed by the flag's bracket basis.
pub fn build_adapted_frame(spec: &ManifoldSpec, flag: &FlagReport) -> Result<AdaptedFrame> {
    let k = spec.rank();
    let not_adapted = |reason: String| Error::NotAdapted { manifold: spec.name().into(), point: format_point(&flag.point), reason };
    if flag.ranks.first() != Some(&k) {
        return Err(not_adapted(format!(
            "horizontal generators span a {}-dimensional space, expected {k}",
            flag.ranks.first().copied().unwrap_or(0)
        )));
    }
    for (i, w) in flag.bracket_basis.iter().take(k).enumerate() {
        if *w != BracketWord::Generator(i) {
            return Err(not_adapted(format!("basis position {} is {w}, expected generator {}", i + 1, i + 1)));
        }
    }
    let fields = flag.bracket_basis.iter().map(|w| spec.field_for_word(w)).collect::<Result<Vec<_>>>()?;
    AdaptedFrame::assemble(spec, fields, &flag.point, flag.layer_bounds(), ExactMatrix::identity(k))
}

/// Adapted structure constants for one layer `s ≥ 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerConstants {
    pub layer: usize,
    /// Zero-based frame positions `k_{s−1} .. k_s`.
    pub start: usize,
    pub end: usize,
    /// `values[α − start][tuple]`, tuples in base-`k` order with `i_1` most significant.
    pub values: Vec<Vec<Rational>>,
}

/// `b^α_{i₁…i_s} = ω^α([X_{i₁},[X_{i₂},…,[X_{i_{s−1}},X_{i_s}]]])` for every layer `s ≥ 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    k: usize,
    layers: Vec<LayerConstants>,
}

impl StructureConstants {
    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn layers(&self) -> &[LayerConstants] {
        &self.layers
    }

    pub fn layer(&self, s: usize) -> Option<&LayerConstants> {
        self.layers.iter().find(|l| l.layer == s)
    }

    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &i| acc * self.k + i)
    }

    /// Zero-based `alpha` frame position and zero-based generator indices.
    pub fn get(&self, alpha: usize, tuple: &[usize]) -> Rational {
        let s = tuple.len();
        match self.layer(s) {
            Some(l) if alpha >= l.start && alpha < l.end => l.values[alpha - l.start][self.tuple_index(tuple)].clone(),
            _ => Rational::zero(),
        }
    }

    /// Overwrites one constant. Used to inject faults in self-tests.
    pub fn set(&mut self, alpha: usize, tuple: &[usize], value: Rational) {
        let idx = self.tuple_index(tuple);
        let l = self.layers.iter_mut().find(|l| l.layer == tuple.len()).expect("layer exists");
        l.values[alpha - l.start][idx] = value;
    }
}

/// All left-nested brackets of length `s`, indexed like [`StructureConstants::tuple_index`].
pub(crate) fn nested_brackets(horizontal: &[VectorField], max_len: usize) -> Vec<Vec<VectorField>> {
    let mut levels: Vec<Vec<VectorField>> = vec![horizontal.to_vec()];
    for _ in 1..max_len {
        let prev = levels.last().unwrap();
        let mut next = Vec::with_capacity(prev.len() * horizontal.len());
        for x in horizontal {
            for z in prev {
                next.push(lie_bracket(x, z));
            }
        }
        levels.push(next);
    }
    levels
}

pub fn structure_constants(frame: &AdaptedFrame) -> StructureConstants {
    let k = frame.rank();
    let m = frame.step();
    let levels = nested_brackets(&frame.fields[..k], m);
    let bounds = frame.layer_bounds();
    let mut layers = Vec::new();
    for s in 2..=m {
        let (start, end) = (bounds[s - 1], bounds[s]);
        let values_at: Vec<Vec<Rational>> = levels[s - 1].iter().map(|f| f.eval(&frame.point)).collect();
        let values = (start..end)
            .map(|alpha| {
                let row = frame.coframe_matrix.row(alpha);
                values_at.iter().map(|v| row.iter().zip(v).fold(Rational::zero(), |acc, (a, b)| acc + a * b)).collect()
            })
            .collect();
        layers.push(LayerConstants { layer: s, start, end, values });
    }
    StructureConstants { k, layers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::exactalg::{rat, ratio};
    use crate::srmanifold::compute_flag;

    fn frame_at(spec: &ManifoldSpec, p: &[Rational]) -> AdaptedFrame {
        let flag = compute_flag(spec, p).unwrap();
        build_adapted_frame(spec, &flag).unwrap()
    }

    /// Heisenberg frame (X1, X2, ∂t): scale the bracket field by −1/4.
    fn heisenberg_t_frame(h: &ManifoldSpec, p: &[Rational]) -> AdaptedFrame {
        let f = frame_at(h, p);
        let t = ExactMatrix::diagonal(&[rat(1), rat(1), ratio(-1, 4)]);
        f.transformed(h, &t).unwrap()
    }

    #[test]
    fn heisenberg_frame_at_origin() {
        let h = catalog::heisenberg(1);
        let f = frame_at(&h, &[rat(0), rat(0), rat(0)]);
        let expected =
            ExactMatrix::from_rows(vec![vec![rat(1), rat(0), rat(0)], vec![rat(0), rat(1), rat(0)], vec![rat(0), rat(0), rat(-4)]]);
        assert_eq!(f.frame_matrix(), &expected);
        assert_eq!(f.coframe_matrix().mul(f.frame_matrix()), ExactMatrix::identity(3));
        assert_eq!(f.layer_bounds(), &[0, 2, 3]);
        let words: Vec<String> = f.fields().iter().map(|x| x.word().to_string()).collect();
        assert_eq!(words, ["1", "2", "[1,2]"]);
    }

    #[test]
    fn riemannian_frame() {
        let r = catalog::euclidean(2);
        let f = frame_at(&r, &[rat(3), rat(-1)]);
        assert_eq!(f.frame_matrix(), &ExactMatrix::identity(2));
        assert_eq!(f.coframe_matrix(), &ExactMatrix::identity(2));
        assert!(structure_constants(&f).layers().is_empty());
    }

    #[test]
    fn engel_frame() {
        let e = catalog::engel();
        let f = frame_at(&e, &vec![rat(0); 4]);
        let words: Vec<String> = f.fields().iter().map(|x| x.word().to_string()).collect();
        assert_eq!(words, ["1", "2", "[1,2]", "[2,[1,2]]"]);
        assert_eq!(f.layer_bounds(), &[0, 2, 3, 4]);
    }

    #[test]
    fn heisenberg_constants_in_t_frame() {
        let h = catalog::heisenberg(1);
        let f = heisenberg_t_frame(&h, &[rat(1), ratio(-2, 3), rat(5)]);
        let b = structure_constants(&f);
        assert_eq!(b.get(2, &[0, 1]), rat(-4));
        assert_eq!(b.get(2, &[1, 0]), rat(4));
        assert_eq!(b.get(2, &[0, 0]), rat(0));
    }

    #[test]
    fn heisenberg_constants_in_bracket_frame() {
        let h = catalog::heisenberg(1);
        let f = frame_at(&h, &[rat(0), rat(0), rat(0)]);
        let b = structure_constants(&f);
        assert_eq!(b.get(2, &[0, 1]), rat(1));
        assert_eq!(b.get(2, &[1, 0]), rat(-1));
    }

    #[test]
    fn engel_layer_three() {
        let e = catalog::engel();
        let f = frame_at(&e, &vec![rat(0); 4]);
        let b = structure_constants(&f);
        assert_eq!(b.get(3, &[1, 0, 1]), rat(1));
        assert_eq!(b.get(3, &[0, 0, 1]), rat(0));
        assert_eq!(b.get(2, &[0, 1]), rat(1));
        // [X2,[X2,X1]] = −[X2,[X1,X2]]
        assert_eq!(b.get(3, &[1, 1, 0]), rat(-1));
    }

    #[test]
    fn layer_two_antisymmetry_and_duality() {
        for spec in [catalog::heisenberg(1), catalog::heisenberg(2), catalog::engel()] {
            for p in spec.sample_points() {
                let f = frame_at(&spec, p);
                let b = structure_constants(&f);
                let k = f.rank();
                for alpha in f.layer_bounds()[1]..f.layer_bounds()[2] {
                    for i in 0..k {
                        for j in 0..k {
                            assert_eq!(b.get(alpha, &[i, j]), -b.get(alpha, &[j, i]));
                        }
                    }
                }
                // Coframe rows above layer s kill every bracket of length ≤ s.
                let levels = nested_brackets(&f.fields()[..k], f.step());
                for (len, level) in levels.iter().enumerate() {
                    let s = len + 1;
                    for field in level {
                        let c = f.coefficients(&field.eval(p));
                        for (pos, v) in c.iter().enumerate() {
                            if f.layer_of(pos) > s {
                                assert!(v.is_zero(), "{}: position {pos} sees a length-{s} bracket", spec.name());
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn transformed_rejects_non_triangular() {
        let h = catalog::heisenberg(1);
        let f = frame_at(&h, &[rat(0), rat(0), rat(0)]);
        let mut t = ExactMatrix::identity(3);
        t[(2, 0)] = rat(1); // layer-2 field feeding a horizontal one
        assert!(matches!(f.transformed(&h, &t), Err(Error::NotAdapted { .. })));
        let singular = ExactMatrix::diagonal(&[rat(1), rat(0), rat(1)]);
        assert!(f.transformed(&h, &singular).is_err());
    }

    #[test]
    fn grushin_origin_has_no_adapted_frame() {
        let g = catalog::grushin();
        let flag = compute_flag(&g, &[rat(0), rat(0)]).unwrap();
        assert!(matches!(build_adapted_frame(&g, &flag), Err(Error::NotAdapted { .. })));
    }
}
