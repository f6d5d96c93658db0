//! Artifact writers: key-value reports and RFC-4180 CSV tables with floats
//! printed at 17 significant digits.

use anyhow::Result;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_report(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k}: {v}");
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(s, "{}", row.join(","));
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn print_table(results: &[choquard::suites::CheckResult]) {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(10);
    for r in results {
        println!(
            "{:<width$}  {}  {}",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail,
            width = width
        );
    }
}
