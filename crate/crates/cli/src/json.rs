//! JSON value helpers with a fixed float format.

use std::str::FromStr;

use popp_core::distortion::BoundReport;
use popp_core::exactalg::{format_rational, ExactMatrix, FloatMatrix, Rational};
use serde_json::{json, Number, Value};

/// Floats are written with 17 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Number::from_str(&format!("{x:.16e}")).map(Value::Number).unwrap_or(Value::Null)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn rational(q: &Rational) -> Value {
    Value::String(format_rational(q))
}

pub fn point(p: &[Rational]) -> Value {
    Value::Array(p.iter().map(rational).collect())
}

pub fn exact_matrix(m: &ExactMatrix) -> Value {
    json!(m.to_strings())
}

pub fn float_matrix(m: &FloatMatrix) -> Value {
    Value::Array(m.to_rows().iter().map(|r| nums(r)).collect())
}

pub fn bounds(b: &BoundReport) -> Value {
    Value::Array(
        b.checks
            .iter()
            .map(|c| json!({"name": c.name, "lhs": num(c.lhs), "rhs": num(c.rhs), "slack": num(c.slack), "passed": c.passed}))
            .collect(),
    )
}

/// Serialised report followed by a newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialise");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use popp_core::exactalg::ratio;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.17677669529663687).to_string(), "1.7677669529663687e-1");
        assert_eq!(num(4.0).to_string(), "4.0000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(0.1 + 0.2).to_string().parse().unwrap();
        assert_eq!(back, 0.1 + 0.2);
    }

    #[test]
    fn rationals_as_strings() {
        assert_eq!(rational(&ratio(-3, 6)), json!("-1/2"));
        assert_eq!(point(&[ratio(2, 1), ratio(0, 1)]), json!(["2", "0"]));
    }
}
