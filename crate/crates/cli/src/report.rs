//! Reports: a JSON document plus a flat table for TSV/CSV consumers.

use serde_json::Value;

use crate::args::{Format, JsonStyle};

pub const EXACT: &str = "exact";

pub fn quadrature(tol: f64) -> String {
    format!("quadrature({tol:e})")
}

pub fn bisection(tol: f64) -> String {
    format!("bisection({tol:e})")
}

pub fn newton(tol: f64) -> String {
    format!("newton({tol:e})")
}

pub fn mpfr(bits: u32) -> String {
    format!("mpfr({bits})")
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, sep: &str, comment: &str) -> String {
        let mut out = format!("{comment}{}\n", self.header.join(sep));
        for r in &self.rows {
            out.push_str(&r.join(sep));
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub json: Value,
    pub table: Table,
}

impl Report {
    pub fn render(&self, format: Format, style: JsonStyle) -> String {
        match format {
            Format::Json => render_json(&self.json, style),
            // gnuplot and numpy.loadtxt both skip '#' lines
            Format::Tsv => self.table.render("\t", "#"),
            Format::Csv => self.table.render(",", ""),
        }
    }
}

pub fn render_json(v: &Value, style: JsonStyle) -> String {
    let mut s = match style {
        JsonStyle::Pretty => serde_json::to_string_pretty(v),
        JsonStyle::Compact => serde_json::to_string(v),
    }
    .expect("values are serializable");
    s.push('\n');
    s
}

/// A float for table cells: shortest round-trip form, scientific outside [1e-4, 1e15).
pub fn cell(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

/// A float as JSON; non-finite values become strings so the document stays valid.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::from(x.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn provenance_strings() {
        assert_eq!(quadrature(1e-7), "quadrature(1e-7)");
        assert_eq!(bisection(0.01), "bisection(1e-2)");
        assert_eq!(num(f64::INFINITY), Value::from("inf"));
        assert_eq!(cell(1.8e-17), "1.8e-17");
        assert_eq!(cell(-0.25), "-0.25");
        assert_eq!(cell(0.0), "0");
    }

    #[test]
    fn tables() {
        let mut t = Table::new(&["m", "delta_m"]);
        t.push(vec!["1".into(), "9/11".into()]);
        let r = Report { json: Value::Null, table: t };
        assert_eq!(r.render(Format::Tsv, JsonStyle::Compact), "#m\tdelta_m\n1\t9/11\n");
        assert_eq!(r.render(Format::Csv, JsonStyle::Compact), "m,delta_m\n1,9/11\n");
    }
}
