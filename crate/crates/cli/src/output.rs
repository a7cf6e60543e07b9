//! Number formatting and CSV/JSON serialization of results.

use serde::Serialize;

/// C `printf("%.12e")` formatting: `1.000000000000e+00`, `-2.500000000000e-03`.
pub fn format_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn format_opt(x: Option<f64>) -> String {
    x.map(format_sci).unwrap_or_default()
}

/// CSV document with a header and LF line endings.
pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("write to memory");
    for row in rows {
        w.write_record(row).expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 fields")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable result");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn matches_c_printf() {
        // Expected strings from Python's '%.12e' % x.
        assert_eq!(format_sci(1.0), "1.000000000000e+00");
        assert_eq!(format_sci(0.0), "0.000000000000e+00");
        assert_eq!(format_sci(-0.0025), "-2.500000000000e-03");
        assert_eq!(format_sci(6.28), "6.280000000000e+00");
        assert_eq!(format_sci(1.5e-300), "1.500000000000e-300");
        assert_eq!(format_sci(123456789.0), "1.234567890000e+08");
        assert_eq!(format_sci(0.9734193963617753), "9.734193963618e-01");
        assert_eq!(format_sci(f64::NAN), "nan");
    }

    #[test]
    fn csv_uses_lf_and_empty_fields() {
        let doc = to_csv(&["a", "b"], &[vec!["1".into(), String::new()]]);
        assert_eq!(doc, "a,b\n1,\n");
    }
}
