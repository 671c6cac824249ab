//! Aggregated pass/fail report over scenario results.

use std::path::Path;

use crate::error::RunError;
use crate::result::RunResult;
use crate::table::{Cell, Table};

pub const RESULT_SUFFIX: &str = ".result.json";

/// Writes `<name>.result.json` into `dir`.
pub fn write_result(dir: &Path, result: &RunResult) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    let path = dir.join(format!("{}{RESULT_SUFFIX}", result.name));
    let text = serde_json::to_string_pretty(result).map_err(|e| RunError::Output(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| RunError::io(&path, e))
}

/// Reads every result file in `dir`, sorted by file name.
pub fn read_results(dir: &Path) -> Result<Vec<RunResult>, RunError> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| RunError::io(dir, e))? {
        let path = entry.map_err(|e| RunError::io(dir, e))?.path();
        if path.to_string_lossy().ends_with(RESULT_SUFFIX) {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| RunError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| RunError::Output(format!("{}: {e}", p.display())))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    pub failures: Vec<String>,
}

impl Report {
    /// True when nothing failed; an empty report passes.
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Plain-text rendering, one line per check.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for row in &self.table.rows {
            let text: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format!("{x:.3e}"),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out += &format!("{:<4} {:<26} {:<12} {:<48} {:>10} <= {}\n", text[5], text[0], text[1], text[2], text[3], text[4]);
        }
        let total = self.table.len();
        out += &format!("{} of {} checks passed\n", total - self.failures.len(), total);
        out
    }
}

pub fn invariant_report(results: &[RunResult]) -> Report {
    let mut table = Table::new(["scenario", "criterion", "check", "measured", "threshold", "pass"]);
    let mut failures = Vec::new();
    for r in results {
        for c in &r.checks {
            if !c.pass {
                failures.push(format!("{}: criterion {}: {}", r.name, c.criterion, c.name));
            }
            table.push(vec![
                r.name.as_str().into(),
                c.criterion.as_str().into(),
                c.name.as_str().into(),
                c.measured.into(),
                c.threshold.into(),
                if c.pass { "PASS" } else { "FAIL" }.into(),
            ]);
        }
    }
    Report { table, failures }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Kind;
    use crate::result::Check;

    #[test]
    fn empty_input_passes() {
        let r = invariant_report(&[]);
        assert!(r.passed());
        assert!(r.table.is_empty());
    }

    #[test]
    fn failures_name_the_criterion() {
        let mut a = RunResult::new("suite", Kind::InvariantSuite, 0);
        a.check(Check::at_most("3", "rate", 1e-12, 1e-9));
        a.check(Check::at_most("4", "mismatch", 1e-3, 1e-6));
        let r = invariant_report(&[a]);
        assert!(!r.passed());
        assert_eq!(r.failures, ["suite: criterion 4: mismatch"]);
        assert!(r.render().contains("1 of 2 checks passed"));
    }

    #[test]
    fn results_round_trip_through_a_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = RunResult::new("b", Kind::Quantize, 7);
        a.record("x", 1.5);
        write_result(dir.path(), &a).unwrap();
        write_result(dir.path(), &RunResult::new("a", Kind::ElFlow, 0)).unwrap();
        std::fs::write(dir.path().join("other.json"), "{}").unwrap();
        let back = read_results(dir.path()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].name, "a");
        assert_eq!(back[1], a);
    }
}
