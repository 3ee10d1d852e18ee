//! CSV formatting, atomic file writes and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};

/// Significant digits of every floating-point CSV field.
pub const CSV_DIGITS: usize = 9;

/// `%.9g`-style formatting: fixed notation for moderate exponents, otherwise
/// scientific, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", CSV_DIGITS - 1, x);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..CSV_DIGITS as i32).contains(&exp) {
        let decimals = (CSV_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Header plus rows of already formatted fields.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvTable {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numbers(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| fmt_sig(v)).collect());
    }

    pub fn push_fields(&mut self, fields: Vec<String>) {
        self.rows.push(fields);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(
        ".{name}.tmp-{}-{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_csv(dir: &Path, name: &str, table: &CsvTable) -> Result<PathBuf> {
    let path = dir.join(name);
    write_atomic(&path, table.render().as_bytes())?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn now_iso8601() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(5.0), "5");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(4.388123456789), "4.38812346");
        assert_eq!(fmt_sig(3000.0), "3000");
        assert_eq!(fmt_sig(123456789.0), "123456789");
        assert_eq!(fmt_sig(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_sig(4.3e-13), "4.3e-13");
        assert_eq!(fmt_sig(0.00012345), "0.00012345");
        assert_eq!(fmt_sig(-1.5e-7), "-1.5e-07");
        assert_eq!(fmt_sig(f64::NAN), "nan");
        assert_eq!(fmt_sig(0.99999999999), "1");
    }

    #[test]
    fn formatting_round_trips_to_nine_digits() {
        for &x in &[
            std::f64::consts::PI,
            -2.718281828459045e-3,
            6.02214076e23,
            1.0e-300,
        ] {
            let back: f64 = fmt_sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8, "{x} -> {}", fmt_sig(x));
        }
    }

    #[test]
    fn csv_rendering() {
        let mut t = CsvTable::new(["t_ns", "S_dB"]);
        t.push_numbers(&[0.0, -1.0e-12]);
        t.push_numbers(&[5.0, 0.25]);
        assert_eq!(t.render(), "t_ns,S_dB\n0,-1e-12\n5,0.25\n");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        let leftovers: Vec<_> = fs::read_dir(path.parent().unwrap())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name().to_string_lossy().contains(".tmp-"))
            .collect();
        assert!(leftovers.is_empty());
    }

    #[test]
    fn timestamp_is_iso8601() {
        let s = now_iso8601();
        assert!(chrono::DateTime::parse_from_rfc3339(&s).is_ok(), "{s}");
    }
}
