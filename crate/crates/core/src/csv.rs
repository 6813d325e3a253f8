//! Plain CSV writers. Floats carry 17 significant digits.

use crate::entropy::DiscreteRandomVariable;

/// Scientific notation with 17 significant digits; `inf`/`-inf`/`nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn law_to_csv(law: &DiscreteRandomVariable) -> String {
    let mut s = String::from("value,probability\n");
    for (v, p) in law.atoms() {
        s.push_str(&fmt_f64(v));
        s.push(',');
        s.push_str(&fmt_f64(p));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_exactly() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
    }

    #[test]
    fn law_csv_header() {
        let s = law_to_csv(&DiscreteRandomVariable::point_mass(1.5));
        assert_eq!(s, "value,probability\n1.5000000000000000e0,1.0000000000000000e0\n");
    }
}
