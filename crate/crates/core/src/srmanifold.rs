//! Polynomial frames, Lie brackets and the flag of distributions they generate.
//!
//! A [`ManifoldSpec`] is a chart `ℝⁿ` with `k` horizontal generators whose
//! components are polynomials, and a horizontal metric given in the generator
//! basis. [`compute_flag`] builds `𝒟¹ ⊂ 𝒟² ⊂ …` at a rational point by
//! bracketing generators with the most recent layer and deciding linear
//! independence with exact ranks, so the growth vector and homogeneous
//! dimension carry no tolerance.

use std::fmt;

use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exactalg::{format_rational, parse_rational};
use crate::exactalg::{mat_rank_exact, poly_parse, ExactMatrix, Polynomial, Rational};

/// Largest step explored before giving up on a frame.
pub const DEFAULT_MAX_STEP: usize = 8;

/// How a field was produced from the horizontal generators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BracketWord {
    /// Zero-based generator index; displayed one-based.
    Generator(usize),
    Bracket(Box<BracketWord>, Box<BracketWord>),
    /// Fields that are not plain brackets, e.g. constant recombinations.
    Label(String),
}

impl BracketWord {
    pub fn bracket(a: &BracketWord, b: &BracketWord) -> Self {
        BracketWord::Bracket(Box::new(a.clone()), Box::new(b.clone()))
    }

    /// Number of generators in the word (its bracket length).
    pub fn len(&self) -> usize {
        match self {
            BracketWord::Generator(_) => 1,
            BracketWord::Bracket(a, b) => a.len() + b.len(),
            BracketWord::Label(_) => 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses the display form, e.g. `2` or `[2,[1,2]]`.
    pub fn parse(s: &str) -> Option<Self> {
        fn go(s: &[u8], pos: &mut usize) -> Option<BracketWord> {
            while *pos < s.len() && s[*pos] == b' ' {
                *pos += 1;
            }
            if *pos < s.len() && s[*pos] == b'[' {
                *pos += 1;
                let a = go(s, pos)?;
                while *pos < s.len() && s[*pos] == b' ' {
                    *pos += 1;
                }
                if *pos >= s.len() || s[*pos] != b',' {
                    return None;
                }
                *pos += 1;
                let b = go(s, pos)?;
                while *pos < s.len() && s[*pos] == b' ' {
                    *pos += 1;
                }
                if *pos >= s.len() || s[*pos] != b']' {
                    return None;
                }
                *pos += 1;
                Some(BracketWord::Bracket(Box::new(a), Box::new(b)))
            } else {
                let start = *pos;
                while *pos < s.len() && s[*pos].is_ascii_digit() {
                    *pos += 1;
                }
                let i: usize = std::str::from_utf8(&s[start..*pos]).ok()?.parse().ok()?;
                (i >= 1).then(|| BracketWord::Generator(i - 1))
            }
        }
        let bytes = s.trim().as_bytes();
        let mut pos = 0;
        let w = go(bytes, &mut pos)?;
        (pos == bytes.len()).then_some(w)
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::Generator(i) => write!(f, "{}", i + 1),
            BracketWord::Bracket(a, b) => write!(f, "[{a},{b}]"),
            BracketWord::Label(s) => write!(f, "{s}"),
        }
    }
}

/// A vector field `Σ Xʲ ∂_j` with polynomial components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    components: Vec<Polynomial>,
    word: BracketWord,
}

impl VectorField {
    pub fn new(components: Vec<Polynomial>, word: BracketWord) -> Self {
        let n = components.len();
        assert!(components.iter().all(|c| c.nvars() == n), "component variable count must equal dimension");
        Self { components, word }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Polynomial::zero(n); n], BracketWord::Label("0".into()))
    }

    /// The coordinate field `∂_i`.
    pub fn coordinate(n: usize, i: usize) -> Self {
        let comps = (0..n).map(|j| if j == i { Polynomial::one(n) } else { Polynomial::zero(n) }).collect();
        Self::new(comps, BracketWord::Label(format!("d{}", i + 1)))
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.components
    }

    pub fn word(&self) -> &BracketWord {
        &self.word
    }

    pub fn with_word(mut self, word: BracketWord) -> Self {
        self.word = word;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Polynomial::is_zero)
    }

    pub fn eval(&self, point: &[Rational]) -> Vec<Rational> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    /// The derivation `X(f) = Σ Xʲ ∂_j f`.
    pub fn apply(&self, f: &Polynomial) -> Polynomial {
        let n = self.dim();
        let mut acc = Polynomial::zero(n);
        for (j, xj) in self.components.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            let d = f.partial(j);
            if !d.is_zero() {
                acc = &acc + &(xj * &d);
            }
        }
        acc
    }

    /// `Σ cᵢ Xᵢ` with constant coefficients.
    pub fn combination(terms: &[(Rational, &VectorField)], word: BracketWord) -> Self {
        let n = terms.first().map(|(_, f)| f.dim()).expect("at least one field");
        let mut comps = vec![Polynomial::zero(n); n];
        for (c, f) in terms {
            if c.is_zero() {
                continue;
            }
            for (acc, comp) in comps.iter_mut().zip(&f.components) {
                *acc = &*acc + &comp.scale(c);
            }
        }
        Self::new(comps, word)
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        let one = Rational::one();
        Self::combination(&[(one.clone(), self), (one, other)], BracketWord::Label("sum".into()))
    }

    pub fn scale(&self, c: &Rational) -> VectorField {
        Self::combination(&[(c.clone(), self)], self.word.clone())
    }
}

/// `[X,Y]ⁱ = Σ_j (Xʲ ∂_j Yⁱ − Yʲ ∂_j Xⁱ)`, computed exactly.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> VectorField {
    assert_eq!(x.dim(), y.dim(), "bracket of fields on different dimensions");
    let comps = x.components.iter().zip(&y.components).map(|(xi, yi)| &x.apply(yi) - &y.apply(xi)).collect();
    VectorField::new(comps, BracketWord::bracket(&x.word, &y.word))
}

pub fn format_point(p: &[Rational]) -> String {
    let parts: Vec<String> = p.iter().map(format_rational).collect();
    format!("({})", parts.join(", "))
}

/// Chart, horizontal frame, horizontal metric and sample points of a manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldSpec {
    name: String,
    coordinates: Vec<String>,
    frame: Vec<VectorField>,
    metric: Vec<Vec<Polynomial>>,
    sample_points: Vec<Vec<Rational>>,
    max_step: usize,
}

impl ManifoldSpec {
    /// Validates and builds a spec. `metric = None` means the identity in the generator basis.
    pub fn new(
        name: impl Into<String>,
        coordinates: Vec<String>,
        frame: Vec<Vec<Polynomial>>,
        metric: Option<Vec<Vec<Polynomial>>>,
        sample_points: Vec<Vec<Rational>>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidSpec { name: name.clone(), reason };
        let n = coordinates.len();
        if n == 0 {
            return Err(invalid("no coordinates".into()));
        }
        for (i, c) in coordinates.iter().enumerate() {
            if coordinates[..i].contains(c) {
                return Err(invalid(format!("duplicate coordinate '{c}'")));
            }
        }
        let k = frame.len();
        if k == 0 || k > n {
            return Err(invalid(format!("frame has {k} generators, need 1..={n}")));
        }
        let mut fields = Vec::with_capacity(k);
        for (i, comps) in frame.into_iter().enumerate() {
            if comps.len() != n {
                return Err(invalid(format!("generator {} has {} components, expected {n}", i + 1, comps.len())));
            }
            if comps.iter().any(|p| p.nvars() != n) {
                return Err(invalid(format!("generator {} uses a different variable set", i + 1)));
            }
            fields.push(VectorField::new(comps, BracketWord::Generator(i)));
        }
        let metric = match metric {
            Some(m) => m,
            None => (0..k).map(|i| (0..k).map(|j| if i == j { Polynomial::one(n) } else { Polynomial::zero(n) }).collect()).collect(),
        };
        if metric.len() != k || metric.iter().any(|r| r.len() != k) {
            return Err(invalid(format!("metric must be {k}x{k}")));
        }
        for i in 0..k {
            for j in 0..i {
                if metric[i][j] != metric[j][i] {
                    return Err(invalid(format!("metric is not symmetric at entry ({}, {})", i + 1, j + 1)));
                }
            }
        }
        let spec = Self { name, coordinates, frame: fields, metric, sample_points: Vec::new(), max_step: DEFAULT_MAX_STEP };
        spec.with_sample_points(sample_points)
    }

    /// Builds a spec from polynomial strings; handy for fixtures.
    pub fn parse(name: &str, coordinates: &[&str], frame: &[&[&str]], metric: Option<&[&[&str]]>, points: &[&[&str]]) -> Result<Self> {
        let coords: Vec<String> = coordinates.iter().map(|s| s.to_string()).collect();
        let frame = frame
            .iter()
            .map(|row| row.iter().map(|s| poly_parse(s, &coords)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let metric = metric
            .map(|m| {
                m.iter().map(|row| row.iter().map(|s| poly_parse(s, &coords)).collect::<Result<Vec<_>, _>>()).collect::<Result<Vec<_>, _>>()
            })
            .transpose()?;
        let pts = points
            .iter()
            .map(|p| {
                p.iter()
                    .map(|s| {
                        parse_rational(s)
                            .ok_or_else(|| Error::InvalidSpec { name: name.to_string(), reason: format!("bad coordinate '{s}'") })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, coords, frame, metric, pts)
    }

    /// Replaces the sample points, checking dimension and metric positivity at each.
    pub fn with_sample_points(mut self, points: Vec<Vec<Rational>>) -> Result<Self> {
        for p in &points {
            if p.len() != self.dim() {
                return Err(Error::InvalidSpec {
                    name: self.name.clone(),
                    reason: format!("sample point {} has {} coordinates, expected {}", format_point(p), p.len(), self.dim()),
                });
            }
            if !self.metric_at(p).is_positive_definite() {
                return Err(Error::InvalidSpec {
                    name: self.name.clone(),
                    reason: format!("metric is not positive definite at {}", format_point(p)),
                });
            }
        }
        self.sample_points = points;
        Ok(self)
    }

    /// Same manifold with a different horizontal metric (validated at the sample points).
    pub fn with_metric(&self, metric: Vec<Vec<Polynomial>>) -> Result<Self> {
        let frame = self.frame.iter().map(|f| f.components.clone()).collect();
        let mut out = Self::new(self.name.clone(), self.coordinates.clone(), frame, Some(metric), self.sample_points.clone())?;
        out.max_step = self.max_step;
        Ok(out)
    }

    /// Same manifold with a constant horizontal metric.
    pub fn with_constant_metric(&self, m: &ExactMatrix) -> Result<Self> {
        let n = self.dim();
        let rows = (0..m.rows()).map(|i| (0..m.cols()).map(|j| Polynomial::constant(n, m[(i, j)].clone())).collect()).collect();
        self.with_metric(rows)
    }

    pub fn with_max_step(mut self, max_step: usize) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coordinates(&self) -> &[String] {
        &self.coordinates
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    /// Number of horizontal generators `k`.
    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn frame(&self) -> &[VectorField] {
        &self.frame
    }

    pub fn generator(&self, i: usize) -> &VectorField {
        &self.frame[i]
    }

    pub fn metric(&self) -> &[Vec<Polynomial>] {
        &self.metric
    }

    pub fn sample_points(&self) -> &[Vec<Rational>] {
        &self.sample_points
    }

    pub fn max_step(&self) -> usize {
        self.max_step
    }

    /// Horizontal metric at `p` in the generator basis.
    pub fn metric_at(&self, p: &[Rational]) -> ExactMatrix {
        ExactMatrix::from_rows(self.metric.iter().map(|row| row.iter().map(|e| e.eval(p)).collect()).collect())
    }

    /// Rebuilds the field a bracket word denotes from the generators.
    pub fn field_for_word(&self, word: &BracketWord) -> Result<VectorField> {
        match word {
            BracketWord::Generator(i) => self.frame.get(*i).cloned().ok_or_else(|| Error::InvalidSpec {
                name: self.name.clone(),
                reason: format!("word refers to generator {} of {}", i + 1, self.rank()),
            }),
            BracketWord::Bracket(a, b) => Ok(lie_bracket(&self.field_for_word(a)?, &self.field_for_word(b)?)),
            BracketWord::Label(l) => {
                Err(Error::InvalidSpec { name: self.name.clone(), reason: format!("label '{l}' is not a bracket word") })
            }
        }
    }
}

/// Flag data at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagReport {
    pub point: Vec<Rational>,
    /// `k_s = dim 𝒟ˢ_p`, `s = 1..=m`.
    pub ranks: Vec<usize>,
    /// `n_s = k_s − k_{s−1}`.
    pub growth: Vec<usize>,
    pub step: usize,
    pub weights: Vec<usize>,
    pub homogeneous_dim: usize,
    /// Words whose values at the point form a basis adapted to the flag.
    pub bracket_basis: Vec<BracketWord>,
}

impl FlagReport {
    /// `[0, k_1, …, k_m]`.
    pub fn layer_bounds(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.ranks.iter().copied()).collect()
    }

    /// Structural invariants every report must satisfy.
    pub fn invariants_hold(&self) -> bool {
        let n = self.point.len();
        let strictly_increasing = self.ranks.windows(2).all(|w| w[0] < w[1]);
        let growth_ok = self.layer_bounds().windows(2).zip(&self.growth).all(|(w, &g)| w[1] - w[0] == g);
        let q: usize = self.growth.iter().enumerate().map(|(s, g)| (s + 1) * g).sum();
        let w_sum: usize = self.weights.iter().sum();
        let weights_ok = self.weights.len() == n
            && self.weights.iter().enumerate().all(|(i, &w)| {
                let i1 = i + 1;
                w >= 1 && w <= self.ranks.len() && (w == 1 || self.ranks[w - 2] < i1) && i1 <= self.ranks[w - 1]
            });
        self.ranks.last() == Some(&n)
            && self.step == self.ranks.len()
            && strictly_increasing
            && growth_ok
            && weights_ok
            && q == self.homogeneous_dim
            && w_sum == q
            && self.bracket_basis.len() == n
    }
}

fn weights_from_ranks(ranks: &[usize]) -> Vec<usize> {
    let mut w = Vec::new();
    let mut prev = 0;
    for (s, &k) in ranks.iter().enumerate() {
        w.extend(std::iter::repeat_n(s + 1, k - prev));
        prev = k;
    }
    w
}

/// Admits `v` if it is independent of `rows`; rank decided exactly.
fn admits(rows: &mut Vec<Vec<Rational>>, v: Vec<Rational>) -> bool {
    if v.iter().all(Zero::is_zero) {
        return false;
    }
    let before = rows.len();
    rows.push(v);
    if mat_rank_exact(&ExactMatrix::from_rows(rows.clone())) == before + 1 {
        true
    } else {
        rows.pop();
        false
    }
}

/// Builds the flag at `point`.
///
/// Layer `s+1` candidates are `[X_i, Z]` for `i = 1..k` and `Z` in the chosen
/// basis of layer `s` (all generators for `s = 1`), in that order; the first
/// candidate that raises the exact rank is admitted.
pub fn compute_flag(spec: &ManifoldSpec, point: &[Rational]) -> Result<FlagReport> {
    let n = spec.dim();
    if point.len() != n {
        return Err(Error::Dimension(format!("point {} for manifold '{}' of dimension {n}", format_point(point), spec.name())));
    }
    let gens = spec.frame();
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut basis: Vec<BracketWord> = Vec::new();
    for g in gens {
        if admits(&mut rows, g.eval(point)) {
            basis.push(g.word().clone());
        }
    }
    let mut ranks = vec![rows.len()];
    let mut layer: Vec<VectorField> = gens.to_vec();
    while rows.len() < n {
        if ranks.len() >= spec.max_step() {
            return Err(Error::StepCap { manifold: spec.name().into(), point: format_point(point), cap: spec.max_step() });
        }
        let mut next = Vec::new();
        for x in gens {
            for z in &layer {
                let b = lie_bracket(x, z);
                if b.is_zero() {
                    continue;
                }
                if admits(&mut rows, b.eval(point)) {
                    basis.push(b.word().clone());
                    next.push(b);
                }
            }
        }
        if next.is_empty() {
            return Err(Error::NotBracketGenerating { manifold: spec.name().into(), point: format_point(point), ranks });
        }
        ranks.push(rows.len());
        layer = next;
    }
    let growth: Vec<usize> = std::iter::once(0).chain(ranks.iter().copied()).collect::<Vec<_>>().windows(2).map(|w| w[1] - w[0]).collect();
    let weights = weights_from_ranks(&ranks);
    let q = weights.iter().sum();
    Ok(FlagReport { point: point.to_vec(), step: ranks.len(), ranks, growth, weights, homogeneous_dim: q, bracket_basis: basis })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquiregularityReport {
    /// Same rank sequence at every sample point. This certifies the sample set only.
    pub equiregular: bool,
    pub flags: Vec<FlagReport>,
}

pub fn check_equiregular(spec: &ManifoldSpec) -> Result<EquiregularityReport> {
    if spec.sample_points().is_empty() {
        return Err(Error::InvalidSpec { name: spec.name().into(), reason: "no sample points".into() });
    }
    let flags = spec.sample_points().iter().map(|p| compute_flag(spec, p)).collect::<Result<Vec<_>>>()?;
    let equiregular = flags.windows(2).all(|w| w[0].ranks == w[1].ranks);
    Ok(EquiregularityReport { equiregular, flags })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::exactalg::{rat, ratio};

    fn field(spec: &ManifoldSpec, comps: &[&str]) -> VectorField {
        let c = comps.iter().map(|s| poly_parse(s, spec.coordinates()).unwrap()).collect();
        VectorField::new(c, BracketWord::Label("f".into()))
    }

    #[test]
    fn heisenberg_bracket() {
        let h = catalog::heisenberg(1);
        let b = lie_bracket(h.generator(0), h.generator(1));
        let expected = field(&h, &["0", "0", "-4"]);
        assert_eq!(b.components(), expected.components());
        assert_eq!(b.word().to_string(), "[1,2]");
        assert!(lie_bracket(h.generator(0), h.generator(0)).is_zero());
    }

    #[test]
    fn engel_brackets() {
        let e = catalog::engel();
        let x12 = lie_bracket(e.generator(0), e.generator(1));
        assert_eq!(x12.components(), field(&e, &["0", "0", "1", "0"]).components());
        let x212 = lie_bracket(e.generator(1), &x12);
        assert_eq!(x212.components(), field(&e, &["0", "0", "0", "-1"]).components());
        assert!(lie_bracket(e.generator(0), &x12).is_zero());
        assert_eq!(x212.word().to_string(), "[2,[1,2]]");
    }

    #[test]
    fn heisenberg_flag() {
        let h = catalog::heisenberg(1);
        let f = compute_flag(&h, &[rat(0), rat(0), rat(0)]).unwrap();
        assert_eq!(f.ranks, vec![2, 3]);
        assert_eq!(f.growth, vec![2, 1]);
        assert_eq!(f.step, 2);
        assert_eq!(f.weights, vec![1, 1, 2]);
        assert_eq!(f.homogeneous_dim, 4);
        assert!(f.invariants_hold());
    }

    #[test]
    fn engel_flag() {
        let e = catalog::engel();
        let f = compute_flag(&e, &vec![rat(0); 4]).unwrap();
        assert_eq!(f.ranks, vec![2, 3, 4]);
        assert_eq!(f.growth, vec![2, 1, 1]);
        assert_eq!(f.weights, vec![1, 1, 2, 3]);
        assert_eq!(f.homogeneous_dim, 7);
        let words: Vec<String> = f.bracket_basis.iter().map(ToString::to_string).collect();
        assert_eq!(words, ["1", "2", "[1,2]", "[2,[1,2]]"]);
    }

    #[test]
    fn riemannian_flag() {
        let r = catalog::euclidean(2);
        let f = compute_flag(&r, &[rat(1), rat(2)]).unwrap();
        assert_eq!(f.ranks, vec![2]);
        assert_eq!(f.step, 1);
        assert_eq!(f.homogeneous_dim, 2);
    }

    #[test]
    fn grushin_is_not_equiregular() {
        let g = catalog::grushin();
        let rep = check_equiregular(&g).unwrap();
        assert!(!rep.equiregular);
        assert_eq!(rep.flags[0].ranks, vec![1, 2]);
        assert_eq!(rep.flags[1].ranks, vec![2]);
    }

    #[test]
    fn carnot_examples_are_equiregular() {
        for spec in [catalog::heisenberg(1), catalog::heisenberg(2), catalog::engel()] {
            let rep = check_equiregular(&spec).unwrap();
            assert!(rep.equiregular, "{}", spec.name());
            assert!(rep.flags.len() >= 5);
            assert!(rep.flags.iter().all(FlagReport::invariants_hold));
        }
    }

    #[test]
    fn stagnation_is_an_error() {
        // ∂x and ∂y in ℝ³ commute: rank stays 2.
        let s = ManifoldSpec::parse("flat", &["x", "y", "t"], &[&["1", "0", "0"], &["0", "1", "0"]], None, &[&["0", "0", "0"]]).unwrap();
        match compute_flag(&s, &[rat(0), rat(0), rat(0)]) {
            Err(Error::NotBracketGenerating { ranks, point, .. }) => {
                assert_eq!(ranks, vec![2]);
                assert_eq!(point, "(0, 0, 0)");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn step_cap() {
        // X1 = ∂x, X2 = ∂y + x ∂z1 + x²/2 ∂z2 + x³/6 ∂z3 is a filiform frame of step 4.
        let s = ManifoldSpec::parse(
            "filiform",
            &["x", "y", "a", "b", "c"],
            &[&["1", "0", "0", "0", "0"], &["0", "1", "x", "1/2*x^2", "1/6*x^3"]],
            None,
            &[&["0", "0", "0", "0", "0"]],
        )
        .unwrap();
        let f = compute_flag(&s, &vec![rat(0); 5]).unwrap();
        assert_eq!(f.ranks, vec![2, 3, 4, 5]);
        let capped = s.with_max_step(3);
        assert!(matches!(compute_flag(&capped, &vec![rat(0); 5]), Err(Error::StepCap { cap: 3, .. })));
    }

    #[test]
    fn spec_validation() {
        let bad_metric =
            ManifoldSpec::parse("bad", &["x", "y"], &[&["1", "0"], &["0", "1"]], Some(&[&["1", "2"], &["2", "1"]]), &[&["0", "0"]]);
        assert!(matches!(bad_metric, Err(Error::InvalidSpec { .. })));
        let asym = ManifoldSpec::parse("a", &["x", "y"], &[&["1", "0"], &["0", "1"]], Some(&[&["1", "x"], &["0", "1"]]), &[]);
        assert!(matches!(asym, Err(Error::InvalidSpec { .. })));
        let too_many = ManifoldSpec::parse("a", &["x"], &[&["1"], &["x"]], None, &[]);
        assert!(too_many.is_err());
        let unknown = ManifoldSpec::parse("a", &["x"], &[&["y"]], None, &[]);
        assert!(matches!(unknown, Err(Error::Parse(_))));
        let pt = ManifoldSpec::parse("a", &["x"], &[&["1"]], None, &[&["1/2", "1"]]);
        assert!(pt.is_err());
    }

    #[test]
    fn words_round_trip() {
        for w in ["1", "[1,2]", "[2,[1,2]]", "[[1,2],[3,4]]"] {
            assert_eq!(BracketWord::parse(w).unwrap().to_string(), w);
        }
        assert!(BracketWord::parse("[1,2").is_none());
        assert!(BracketWord::parse("0").is_none());
        assert_eq!(BracketWord::parse("[2,[1,2]]").unwrap().len(), 3);
    }

    #[test]
    fn field_for_word_rebuilds_brackets() {
        let e = catalog::engel();
        let w = BracketWord::parse("[2,[1,2]]").unwrap();
        let f = e.field_for_word(&w).unwrap();
        assert_eq!(f.eval(&[rat(1), ratio(1, 2), rat(3), rat(0)]), vec![rat(0), rat(0), rat(0), rat(-1)]);
    }
}
