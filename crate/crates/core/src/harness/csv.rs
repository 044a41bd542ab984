//! Fixed-schema CSV tables.
//!
//! Floats are written like C's `%.9g`, so output is stable across platforms
//! and diffable byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// `%.9g` formatting. Non-finite values become `NaN`, `inf`, `-inf`.
pub fn format_float(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // Rounding to 9 digits can bump the exponent, so read it back from the
    // rounded scientific form rather than from log10.
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A value that can occupy one CSV cell.
pub trait Field {
    fn render(&self) -> String;
}

impl Field for f64 {
    fn render(&self) -> String {
        format_float(*self)
    }
}

impl Field for u64 {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Field for usize {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Field for bool {
    fn render(&self) -> String {
        self.to_string()
    }
}

impl Field for &str {
    fn render(&self) -> String {
        (*self).to_string()
    }
}

impl Field for Option<u64> {
    fn render(&self) -> String {
        self.map(|v| v.to_string()).unwrap_or_default()
    }
}

/// An in-memory table, rendered once all rows are in.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    name: &'static str,
    columns: usize,
    body: Vec<u8>,
}

impl CsvTable {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        let mut table = CsvTable { name, columns: header.len(), body: Vec::new() };
        table.write_record(header.iter().map(|h| h.to_string()));
        table
    }

    /// File name, e.g. `kl_vs_h.csv`.
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn push(&mut self, row: &[&dyn Field]) {
        assert_eq!(row.len(), self.columns, "row width does not match header of {}", self.name);
        self.write_record(row.iter().map(|f| f.render()));
    }

    fn write_record(&mut self, cells: impl Iterator<Item = String>) {
        let mut w = csv::WriterBuilder::new().from_writer(&mut self.body);
        w.write_record(cells).expect("writing to memory cannot fail");
        w.flush().expect("writing to memory cannot fail");
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.body).expect("cells are utf-8")
    }

    /// Data rows, excluding the header.
    pub fn rows(&self) -> usize {
        self.as_str().lines().count() - 1
    }

    pub fn write_to(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(self.name);
        fs::write(&path, &self.body)?;
        Ok(path)
    }
}
