//! Golden regression files: one `key = 0x<f64 bits>` per line, with the
//! decimal value as a trailing `#` comment. Lines starting with `#` are
//! comments.
//!
//! Setting `DLIL_BLESS=1` makes [`check_or_bless`] rewrite the file instead
//! of comparing.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub fn format_golden(values: &[(String, f64)]) -> String {
    let mut out = String::new();
    for (k, v) in values {
        out.push_str(&format!("{k} = {:#018x} # {v:e}\n", v.to_bits()));
    }
    out
}

pub fn parse_golden(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Config(format!("golden line {}: malformed entry {line:?}", i + 1));
        let (k, v) = line.split_once('=').ok_or_else(bad)?;
        let hex = v.trim().strip_prefix("0x").ok_or_else(bad)?;
        let bits = u64::from_str_radix(hex, 16).map_err(|_| bad())?;
        map.insert(k.trim().to_string(), f64::from_bits(bits));
    }
    Ok(map)
}

/// Compares `values` bit-exactly against the file at `path`, or writes it
/// when `DLIL_BLESS=1`. Returns a description of every mismatch.
pub fn check_or_bless(path: &Path, values: &[(String, f64)]) -> std::result::Result<(), String> {
    if std::env::var("DLIL_BLESS").is_ok_and(|v| v == "1") {
        std::fs::write(path, format_golden(values)).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e} (run with DLIL_BLESS=1 to create)", path.display()))?;
    let expected = parse_golden(&text).map_err(|e| e.to_string())?;
    let mut problems = Vec::new();
    for (k, v) in values {
        match expected.get(k) {
            Some(e) if e.to_bits() == v.to_bits() => {}
            Some(e) => problems.push(format!("{k}: expected {e:e}, got {v:e}")),
            None => problems.push(format!("{k}: missing from golden file")),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(problems.join("\n"))
    }
}
