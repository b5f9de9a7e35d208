//! Minimal CSV writing helpers shared by the exporters.

use std::fmt::Write;

/// Formats a float with 17 significant digits, enough for a lossless
/// round trip of any `f64`.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV document built row by row, always `\n` terminated.
#[derive(Debug, Clone, Default)]
pub struct CsvBuf {
    text: String,
}

impl CsvBuf {
    pub fn with_header(cols: &[&str]) -> Self {
        let mut buf = Self::default();
        buf.row(cols.iter().map(|c| c.to_string()));
        buf
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for cell in cells {
            if !first {
                self.text.push(',');
            }
            first = false;
            let _ = write!(self.text, "{}", cell.as_ref());
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
