//! Number formatting shared by the CLI, CSV and report writers.

use serde::Serializer;

/// `x` with 12 significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (m, exp) = s.split_once('e').unwrap();
        let m = if m.contains('.') { m.trim_end_matches('0').trim_end_matches('.') } else { m };
        format!("{m}e{exp}")
    }
}

pub fn ser12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&sig12(*x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(2.0 * std::f64::consts::PI / 12f64.ln()), "2.52853977743");
        assert_eq!(sig12(-1.0), "-1");
        assert_eq!(sig12(1234.5), "1234.5");
        assert_eq!(sig12(3.633761709319210e-13), "3.63376170932e-13");
        assert_eq!(sig12(2751969116289.002), "2.75196911629e12");
        assert_eq!(sig12(0.0), "0");
        let back: f64 = sig12(1.0 / 3.0).parse().unwrap();
        assert!((back - 1.0 / 3.0).abs() < 1e-12);
    }
}
