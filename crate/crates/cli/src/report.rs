//! Run reports: a flat key-value text format that round-trips through
//! parsing.
//!
//! Schema (one `key = value` per line, in this order):
//!   report_version, library_version, config.* (config echo),
//!   accuracy.<method> (4 decimals), iteration_accuracy (comma list,
//!   4 decimals, omitted when empty), mmd_pre, mmd_post (omitted when not
//!   applicable), wall_clock_ms.

use std::path::Path;

use crate::HarnessError;

pub const REPORT_VERSION: u32 = 1;

/// Everything one experiment run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub library_version: String,
    pub config_echo: Vec<(String, String)>,
    /// Per-method accuracies in presentation order, e.g. ("raw", 0.3367).
    pub accuracies: Vec<(String, f64)>,
    /// Pseudo-label accuracy per refinement pass (initializer first);
    /// empty when target labels are unknown or the method is not adaptive.
    pub iteration_accuracy: Vec<f64>,
    /// Mean-distance divergence on the raw features.
    pub mmd_pre: f64,
    /// Divergence in the learned embedding, when a method produced one.
    pub mmd_post: Option<f64>,
    pub wall_clock_ms: u64,
}

fn format_float(v: f64) -> String {
    // shortest round-trip form
    format!("{v}")
}

pub fn format_report(r: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("report_version = {REPORT_VERSION}\n"));
    out.push_str(&format!("library_version = {}\n", r.library_version));
    for (k, v) in &r.config_echo {
        out.push_str(&format!("config.{k} = {v}\n"));
    }
    for (name, acc) in &r.accuracies {
        out.push_str(&format!("accuracy.{name} = {acc:.4}\n"));
    }
    if !r.iteration_accuracy.is_empty() {
        let cells: Vec<String> = r
            .iteration_accuracy
            .iter()
            .map(|a| format!("{a:.4}"))
            .collect();
        out.push_str(&format!("iteration_accuracy = {}\n", cells.join(",")));
    }
    out.push_str(&format!("mmd_pre = {}\n", format_float(r.mmd_pre)));
    if let Some(post) = r.mmd_post {
        out.push_str(&format!("mmd_post = {}\n", format_float(post)));
    }
    out.push_str(&format!("wall_clock_ms = {}\n", r.wall_clock_ms));
    out
}

/// Writes the report; the parent directory must already exist.
pub fn emit_report(r: &RunReport, path: &Path) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(HarnessError::Data(format!(
                "output directory {} does not exist",
                parent.display()
            )));
        }
    }
    std::fs::write(path, format_report(r))
        .map_err(|e| HarnessError::Data(format!("cannot write report {}: {e}", path.display())))
}

pub fn parse_report(text: &str) -> Result<RunReport, HarnessError> {
    let mut library_version = String::new();
    let mut config_echo = Vec::new();
    let mut accuracies = Vec::new();
    let mut iteration_accuracy = Vec::new();
    let mut mmd_pre: Option<f64> = None;
    let mut mmd_post: Option<f64> = None;
    let mut wall_clock_ms: Option<u64> = None;

    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once(" = ") else {
            return Err(HarnessError::Data(format!(
                "report line {}: expected `key = value`",
                idx + 1
            )));
        };
        let bad = |what: &str| HarnessError::Data(format!("report line {}: {what}", idx + 1));
        match key {
            "report_version" => {
                let v: u32 = value.parse().map_err(|_| bad("bad version"))?;
                if v != REPORT_VERSION {
                    return Err(bad(&format!("unsupported report version {v}")));
                }
            }
            "library_version" => library_version = value.to_string(),
            "iteration_accuracy" => {
                for cell in value.split(',') {
                    iteration_accuracy.push(cell.parse().map_err(|_| bad("bad accuracy cell"))?);
                }
            }
            "mmd_pre" => mmd_pre = Some(value.parse().map_err(|_| bad("bad mmd_pre"))?),
            "mmd_post" => mmd_post = Some(value.parse().map_err(|_| bad("bad mmd_post"))?),
            "wall_clock_ms" => {
                wall_clock_ms = Some(value.parse().map_err(|_| bad("bad wall clock"))?)
            }
            _ => {
                if let Some(name) = key.strip_prefix("config.") {
                    config_echo.push((name.to_string(), value.to_string()));
                } else if let Some(name) = key.strip_prefix("accuracy.") {
                    let acc: f64 = value.parse().map_err(|_| bad("bad accuracy"))?;
                    if !(0.0..=1.0).contains(&acc) {
                        return Err(bad(&format!("accuracy {acc} outside [0, 1]")));
                    }
                    accuracies.push((name.to_string(), acc));
                } else {
                    return Err(bad(&format!("unknown report key `{key}`")));
                }
            }
        }
    }

    Ok(RunReport {
        library_version,
        config_echo,
        accuracies,
        iteration_accuracy,
        mmd_pre: mmd_pre.ok_or_else(|| HarnessError::Data("report lacks mmd_pre".into()))?,
        mmd_post,
        wall_clock_ms: wall_clock_ms
            .ok_or_else(|| HarnessError::Data("report lacks wall_clock_ms".into()))?,
    })
}

/// Keys whose values differ between two reports, ignoring timing.
pub fn report_diff(a: &RunReport, b: &RunReport) -> Vec<String> {
    let mut diffs = Vec::new();
    let fa = format_report(a);
    let fb = format_report(b);
    let strip = |text: &str| -> Vec<String> {
        text.lines()
            .filter(|l| !l.starts_with("wall_clock_ms"))
            .map(str::to_string)
            .collect()
    };
    let la = strip(&fa);
    let lb = strip(&fb);
    for line in &la {
        if !lb.contains(line) {
            diffs.push(line.split(" = ").next().unwrap_or(line).to_string());
        }
    }
    for line in &lb {
        if !la.contains(line) {
            let key = line.split(" = ").next().unwrap_or(line).to_string();
            if !diffs.contains(&key) {
                diffs.push(key);
            }
        }
    }
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            library_version: "0.1.0".into(),
            config_echo: vec![
                ("data".into(), "synthetic".into()),
                ("method".into(), "jgsa".into()),
            ],
            accuracies: vec![("raw".into(), 0.3367), ("jgsa".into(), 0.6815)],
            iteration_accuracy: vec![0.61, 0.92, 0.9567],
            mmd_pre: 18.713456789,
            mmd_post: Some(0.0001234),
            wall_clock_ms: 152,
        }
    }

    #[test]
    fn emit_parse_emit_is_a_fixpoint() {
        let text = format_report(&sample());
        let parsed = parse_report(&text).unwrap();
        assert_eq!(format_report(&parsed), text);
    }

    #[test]
    fn accuracy_prints_with_four_decimals() {
        let text = format_report(&sample());
        assert!(text.contains("accuracy.jgsa = 0.6815\n"), "{text}");
        assert!(text.contains("accuracy.raw = 0.3367\n"), "{text}");
    }

    #[test]
    fn diff_ignores_wall_clock() {
        let a = sample();
        let mut b = sample();
        b.wall_clock_ms = 9999;
        assert!(report_diff(&a, &b).is_empty());
        b.accuracies[1].1 = 0.5;
        let d = report_diff(&a, &b);
        assert_eq!(d, vec!["accuracy.jgsa".to_string()]);
    }

    #[test]
    fn emit_requires_existing_directory() {
        let r = sample();
        let err = emit_report(&r, Path::new("/nonexistent-dir-xyz/report.txt")).unwrap_err();
        let msg = format!("{err:?}");
        assert!(msg.contains("/nonexistent-dir-xyz"), "{msg}");
    }

    #[test]
    fn parse_rejects_out_of_range_accuracy() {
        let text = "report_version = 1\nlibrary_version = x\naccuracy.raw = 1.2\nmmd_pre = 0\nwall_clock_ms = 1\n";
        assert!(parse_report(text).is_err());
    }
}
