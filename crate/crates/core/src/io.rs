//! Plain CSV/number formatting shared by the exporters.

use std::fmt::Write as _;

/// Formats a float with 17 significant digits in scientific notation, so that
/// output round-trips bitwise and never depends on locale.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" versus "0" differences
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Accumulates CSV text with a fixed header.
#[derive(Debug, Clone)]
pub struct CsvBuilder {
    buf: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf, columns: header.len() }
    }

    /// Appends one row of preformatted cells.
    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut n = 0;
        for (k, c) in cells.into_iter().enumerate() {
            if k > 0 {
                self.buf.push(',');
            }
            self.buf.push_str(c.as_ref());
            n += 1;
        }
        debug_assert_eq!(n, self.columns, "row width");
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Convenience: one CSV row of integers followed by floats.
pub fn mixed_row(ints: &[u64], floats: &[f64]) -> Vec<String> {
    let mut out: Vec<String> = ints.iter().map(|v| v.to_string()).collect();
    out.extend(floats.iter().map(|v| fmt_f64(*v)));
    out
}

/// Renders a sequence of floats separated by commas.
pub fn join_floats(values: &[f64]) -> String {
    let mut s = String::new();
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{}", fmt_f64(*v));
    }
    s
}
