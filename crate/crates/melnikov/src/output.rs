//! CSV and text output with fixed float formatting and atomic writes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Seventeen significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut c = Self { text: String::new(), columns: header.len() };
        c.push_raw(header.iter().map(|s| s.as_ref().to_string()).collect());
        c
    }

    pub fn push_raw(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns, "row width");
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn rows(&self) -> usize {
        self.text.lines().count() - 1
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
