//! CSV rows: `family,theta,n,quantity,value,tolerance,pass`.

use std::cmp::Ordering;
use std::fmt::Write as _;

pub const HEADER: &str = "family,theta,n,quantity,value,tolerance,pass";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub family: String,
    pub theta: Vec<f64>,
    /// `None` for rows that do not depend on `n`.
    pub n: Option<usize>,
    pub quantity: String,
    pub value: f64,
    /// `None` for informational rows, which never fail.
    pub tolerance: Option<f64>,
}

impl Row {
    pub fn info(family: &str, theta: &[f64], n: Option<usize>, quantity: impl Into<String>, value: f64) -> Self {
        Self { family: family.to_string(), theta: theta.to_vec(), n, quantity: quantity.into(), value, tolerance: None }
    }

    pub fn check(
        family: &str,
        theta: &[f64],
        n: Option<usize>,
        quantity: impl Into<String>,
        value: f64,
        tolerance: f64,
    ) -> Self {
        Self { tolerance: Some(tolerance), ..Self::info(family, theta, n, quantity, value) }
    }

    /// `None` for informational rows; NaN values fail.
    pub fn pass(&self) -> Option<bool> {
        self.tolerance.map(|t| self.value <= t)
    }

    fn sort_key_cmp(&self, other: &Row) -> Ordering {
        self.family
            .cmp(&other.family)
            .then_with(|| cmp_theta(&self.theta, &other.theta))
            .then_with(|| self.n.cmp(&other.n))
            .then_with(|| self.quantity.cmp(&other.quantity))
    }
}

fn cmp_theta(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Seventeen significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(Row::sort_key_cmp);
}

pub fn render(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for r in rows {
        let theta = r.theta.iter().map(|t| real(*t)).collect::<Vec<_>>().join(";");
        let n = r.n.map(|n| n.to_string()).unwrap_or_default();
        let tol = r.tolerance.map(real).unwrap_or_default();
        let pass = r.pass().map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            escape(&r.family),
            theta,
            n,
            escape(&r.quantity),
            real(r.value),
            tol,
            pass
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_render_and_sort() {
        let mut rows = vec![
            Row::check("b", &[1.0], Some(2), "A1", 0.0, 1e-9),
            Row::info("b", &[-1.0], None, "fisher[0][0]", 0.25),
            Row::check("a", &[0.0], Some(1), "A2", f64::NAN, 1e-9),
            Row::check("b", &[1.0], Some(1), "A1", 2e-9, 1e-9),
        ];
        sort_rows(&mut rows);
        let text = render(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER);
        assert_eq!(lines[1], "a,0.0000000000000000e0,1,A2,NaN,1.0000000000000001e-9,false");
        assert_eq!(lines[2], "b,-1.0000000000000000e0,,fisher[0][0],2.5000000000000000e-1,,");
        assert!(lines[3].ends_with(",false") && lines[3].contains(",1,A1,"));
        assert!(lines[4].ends_with(",true") && lines[4].contains(",2,A1,"));
    }

    #[test]
    fn family_names_with_commas_are_quoted() {
        assert_eq!(escape("binomial(4)"), "binomial(4)");
        assert_eq!(escape("x,y"), "\"x,y\"");
    }

    #[test]
    fn reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }
}
