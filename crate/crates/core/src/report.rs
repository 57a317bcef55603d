//! Machine-readable reports and their fixed-width table rendering.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub entries: Vec<Entry>,
}

/// One numeric cell. `value` and `expected` are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub quantity: String,
    pub stage: String,
    pub value: [f64; 2],
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<[f64; 2]>,
}

impl Entry {
    pub fn pass(&self) -> Option<bool> {
        self.expected.map(|[re, im]| {
            let d = Complex64::new(self.value[0] - re, self.value[1] - im).norm();
            d <= self.tolerance
        })
    }
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            entries: Vec::new(),
        }
    }

    /// Record a value with no target.
    pub fn value(&mut self, quantity: impl Into<String>, stage: &str, value: Complex64, tolerance: f64) {
        self.entries.push(Entry {
            quantity: quantity.into(),
            stage: stage.to_string(),
            value: [value.re, value.im],
            tolerance,
            expected: None,
        });
    }

    pub fn real(&mut self, quantity: impl Into<String>, stage: &str, value: f64, tolerance: f64) {
        self.value(quantity, stage, Complex64::new(value, 0.0), tolerance);
    }

    /// Record a value together with the target it is checked against.
    pub fn check(
        &mut self,
        quantity: impl Into<String>,
        stage: &str,
        value: Complex64,
        expected: Complex64,
        tolerance: f64,
    ) {
        self.entries.push(Entry {
            quantity: quantity.into(),
            stage: stage.to_string(),
            value: [value.re, value.im],
            tolerance,
            expected: Some([expected.re, expected.im]),
        });
    }

    pub fn check_real(&mut self, quantity: impl Into<String>, stage: &str, value: f64, expected: f64, tolerance: f64) {
        self.check(
            quantity,
            stage,
            Complex64::new(value, 0.0),
            Complex64::new(expected, 0.0),
            tolerance,
        );
    }

    pub fn get(&self, quantity: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.quantity == quantity)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.pass() == Some(false))
    }

    pub fn all_pass(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn render_table(&self) -> String {
        let header = ["quantity", "stage", "value", "expected", "tol", "check"];
        let rows: Vec<[String; 6]> = self
            .entries
            .iter()
            .map(|e| {
                [
                    e.quantity.clone(),
                    e.stage.clone(),
                    fmt_complex(e.value),
                    e.expected.map(fmt_complex).unwrap_or_else(|| "-".into()),
                    format!("{:.1e}", e.tolerance),
                    match e.pass() {
                        Some(true) => "ok".into(),
                        Some(false) => "FAIL".into(),
                        None => "-".into(),
                    },
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.command);
        let line = |out: &mut String, cells: &[String]| {
            let mut s = String::new();
            for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
                if i > 0 {
                    s.push_str("  ");
                }
                let _ = write!(s, "{cell:<w$}");
            }
            let _ = writeln!(out, "{}", s.trim_end());
        };
        line(&mut out, &header.map(String::from));
        line(&mut out, &widths.map(|w| "-".repeat(w)));
        for row in &rows {
            line(&mut out, row);
        }
        out
    }
}

/// Signed value with 6 significant digits, `%+.6g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "+0".into();
    }
    if !x.is_finite() {
        return format!("{x:+}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:+.decimals$}");
        // rounding can carry into a new digit (9.999995 -> 10.00000); fine for display
        trim_zeros(&s)
    } else {
        let s = format!("{x:+.5e}");
        let (mantissa, exponent) = s.split_once('e').expect("exponent form");
        format!("{}e{}", trim_zeros(mantissa), exponent)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn fmt_complex([re, im]: [f64; 2]) -> String {
    if im == 0.0 {
        fmt_sig(re)
    } else {
        format!("{}{}i", fmt_sig(re), fmt_sig(im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(1.0), "+1");
        assert_eq!(fmt_sig(-1.0), "-1");
        assert_eq!(fmt_sig(1.0 / 3.0), "+0.333333");
        assert_eq!(fmt_sig(-1.0 / 9.0), "-0.111111");
        assert_eq!(fmt_sig(2f64.sqrt()), "+1.41421");
        assert_eq!(fmt_sig(123456.0), "+123456");
        assert_eq!(fmt_sig(1234567.0), "+1.23457e6");
        assert_eq!(fmt_sig(0.00012345), "+0.00012345");
        assert_eq!(fmt_sig(0.000012345), "+1.2345e-5");
        assert_eq!(fmt_sig(1.5e-17), "+1.5e-17");
        assert_eq!(fmt_sig(0.0), "+0");
        assert_eq!(fmt_complex([0.5, -0.25]), "+0.5-0.25i");
    }

    #[test]
    fn pass_uses_complex_distance() {
        let mut r = Report::new("t");
        r.check("a", "s", Complex64::new(1.0, 1e-13), Complex64::new(1.0, 0.0), 1e-12);
        r.check_real("b", "s", 0.5, 0.6, 1e-3);
        r.real("c", "s", 3.0, 0.0);
        assert_eq!(r.get("a").unwrap().pass(), Some(true));
        assert_eq!(r.get("b").unwrap().pass(), Some(false));
        assert_eq!(r.get("c").unwrap().pass(), None);
        assert!(!r.all_pass());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn table_columns_align() {
        let mut r = Report::new("demo");
        r.check_real("eq4.weak_value.path1", "bs2", 1.0, 1.0, 1e-12);
        r.real("x", "bs1", -0.5, 1e-12);
        let t = r.render_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "# demo");
        let col = lines[1].find("stage").unwrap();
        assert_eq!(lines[3].find("bs2").unwrap(), col);
        assert_eq!(lines[4].find("bs1").unwrap(), col);
    }
}
