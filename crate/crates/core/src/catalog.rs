//! Standard example manifolds and maps.

use crate::exactalg::{poly_parse, rat, ratio, Polynomial, Rational};
use crate::maps::MapSpec;
use crate::srmanifold::ManifoldSpec;
use std::sync::Arc;

fn default_points(n: usize) -> Vec<Vec<Rational>> {
    // Five fixed rational points; the first is the origin.
    let seeds = [(0, 1), (1, 1), (-1, 2), (3, 2), (-2, 3), (5, 7)];
    (0..5)
        .map(|p| {
            (0..n)
                .map(|i| {
                    if p == 0 {
                        rat(0)
                    } else {
                        let (a, b) = seeds[(p + i) % seeds.len()];
                        ratio(a + i as i64 - p as i64, b)
                    }
                })
                .collect()
        })
        .collect()
}

/// Coordinate names `x1..xn, y1..yn, t` (or `x, y, t` for `n = 1`).
pub fn heisenberg_coordinates(n: usize) -> Vec<String> {
    if n == 1 {
        return vec!["x".into(), "y".into(), "t".into()];
    }
    let mut c: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    c.extend((1..=n).map(|j| format!("y{j}")));
    c.push("t".into());
    c
}

/// Frame `X_j = ∂x_j + 2y_j ∂t`, `X_{j+n} = ∂y_j − 2x_j ∂t`, so `[X_j, X_{j+n}] = −4∂t`.
pub fn heisenberg_frame(n: usize) -> Vec<Vec<Polynomial>> {
    let dim = 2 * n + 1;
    let coords = heisenberg_coordinates(n);
    let mut frame = Vec::with_capacity(2 * n);
    for j in 0..n {
        let mut c = vec![Polynomial::zero(dim); dim];
        c[j] = Polynomial::one(dim);
        c[dim - 1] = poly_parse(&format!("2*{}", coords[n + j]), &coords).unwrap();
        frame.push(c);
    }
    for j in 0..n {
        let mut c = vec![Polynomial::zero(dim); dim];
        c[n + j] = Polynomial::one(dim);
        c[dim - 1] = poly_parse(&format!("-2*{}", coords[j]), &coords).unwrap();
        frame.push(c);
    }
    frame
}

pub fn heisenberg(n: usize) -> ManifoldSpec {
    assert!(n >= 1);
    let coords = heisenberg_coordinates(n);
    let dim = coords.len();
    ManifoldSpec::new(format!("heisenberg{n}"), coords, heisenberg_frame(n), None, default_points(dim)).unwrap()
}

/// Engel group: `X1 = ∂x1`, `X2 = ∂x2 + x1 ∂x3 + x3 ∂x4`.
pub fn engel() -> ManifoldSpec {
    ManifoldSpec::parse("engel", &["x1", "x2", "x3", "x4"], &[&["1", "0", "0", "0"], &["0", "1", "x1", "x3"]], None, &[])
        .unwrap()
        .with_sample_points(default_points(4))
        .unwrap()
}

/// `ℝⁿ` with the coordinate frame and Euclidean metric (step 1).
pub fn euclidean(n: usize) -> ManifoldSpec {
    let coords: Vec<String> = if n == 2 { vec!["x".into(), "y".into()] } else { (1..=n).map(|i| format!("x{i}")).collect() };
    let frame = (0..n).map(|i| (0..n).map(|j| if i == j { Polynomial::one(n) } else { Polynomial::zero(n) }).collect()).collect();
    ManifoldSpec::new(format!("riemann{n}"), coords, frame, None, default_points(n)).unwrap()
}

/// Frame `(∂x, x∂y)` on `ℝ²` sampled on and off the singular line `x = 0`.
pub fn grushin() -> ManifoldSpec {
    ManifoldSpec::parse("grushin-negative", &["x", "y"], &[&["1", "0"], &["0", "x"]], None, &[&["0", "0"], &["1", "0"], &["1", "1"]])
        .unwrap()
}

pub fn map(name: &str, source: &Arc<ManifoldSpec>, target: &Arc<ManifoldSpec>, components: &[&str]) -> MapSpec {
    let comps = components.iter().map(|c| poly_parse(c, source.coordinates()).unwrap()).collect();
    MapSpec::new(name, source.clone(), target.clone(), comps).unwrap()
}

/// Dilation `δ_r(x, y, t) = (rx, ry, r²t)` of `H¹`.
pub fn dilation(h1: &Arc<ManifoldSpec>, r: &Rational) -> MapSpec {
    let r = crate::exactalg::format_rational(r);
    map(&format!("dilation({r})"), h1, h1, &[&format!("({r})*x"), &format!("({r})*y"), &format!("({r})^2*t")])
}

/// `(x, y, t) ↦ (ax, by, abt)`, contact on `H¹`.
pub fn anisotropic(h1: &Arc<ManifoldSpec>, a: i64, b: i64) -> MapSpec {
    map(&format!("anisotropic({a},{b})"), h1, h1, &[&format!("{a}*x"), &format!("{b}*y"), &format!("{}*t", a * b)])
}

/// Rotation by the angle with `cos = c`, `sin = s` about the `t`-axis.
pub fn rotation(h1: &Arc<ManifoldSpec>, c: &Rational, s: &Rational) -> MapSpec {
    let (c, s) = (crate::exactalg::format_rational(c), crate::exactalg::format_rational(s));
    map(&format!("rotation({c},{s})"), h1, h1, &[&format!("({c})*x - ({s})*y"), &format!("({s})*x + ({c})*y"), "t"])
}

/// Left translation by `(a, b, c)` for the group law matching the standard frame:
/// `(a,b,c)·(x,y,t) = (a+x, b+y, c+t+2(bx−ay))`.
pub fn left_translation(h1: &Arc<ManifoldSpec>, a: &Rational, b: &Rational, c: &Rational) -> MapSpec {
    let (a, b, c) = (crate::exactalg::format_rational(a), crate::exactalg::format_rational(b), crate::exactalg::format_rational(c));
    map(
        &format!("translation({a},{b},{c})"),
        h1,
        h1,
        &[&format!("({a}) + x"), &format!("({b}) + y"), &format!("({c}) + t + 2*(({b})*x - ({a})*y)")],
    )
}

/// Diagonal automorphism of `Hⁿ`: `x_j ↦ a_j x_j`, `y_j ↦ (c/a_j) y_j`, `t ↦ c t`.
pub fn heisenberg_diagonal(hn: &Arc<ManifoldSpec>, a: &[Rational], c: &Rational) -> MapSpec {
    let n = a.len();
    assert_eq!(hn.dim(), 2 * n + 1);
    let coords = hn.coordinates();
    let f = crate::exactalg::format_rational;
    let mut comps: Vec<String> = (0..n).map(|j| format!("({})*{}", f(&a[j]), coords[j])).collect();
    comps.extend((0..n).map(|j| format!("({})*{}", f(&(c / &a[j])), coords[n + j])));
    comps.push(format!("({})*t", f(c)));
    let refs: Vec<&str> = comps.iter().map(String::as_str).collect();
    map(&format!("diagonal{n}"), hn, hn, &refs)
}
