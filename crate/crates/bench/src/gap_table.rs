//! Gap reports as CSV and JSON, with 1-based arm indices.

use qbai::GapReport;

use crate::output::{opt_cell, to_csv, to_sorted_json};
use crate::Result;

fn shift(v: &[usize]) -> Vec<usize> {
    v.iter().map(|a| a + 1).collect()
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// Columns `arm, ours, limit, modified, nkss, hr, best_subset`; the subset is
/// `;`-separated and empty for non-satisfying arms, as are `nkss` and `hr`
/// when the best arm is tied.
pub fn gap_csv(report: &GapReport) -> Result<String> {
    let header: Vec<String> = ["arm", "ours", "limit", "modified", "nkss", "hr", "best_subset"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .arms
        .iter()
        .map(|r| {
            vec![
                (r.arm + 1).to_string(),
                r.ours.to_string(),
                r.limit.to_string(),
                r.modified.to_string(),
                opt_cell(r.nkss),
                opt_cell(r.hr),
                r.best_subset.as_deref().map(|s| join(&shift(s))).unwrap_or_default(),
            ]
        })
        .collect();
    to_csv(&header, &rows)
}

pub fn gap_json(report: &GapReport) -> Result<String> {
    let mut shown = report.clone();
    shown.satisfying.members = shift(&shown.satisfying.members);
    for r in &mut shown.arms {
        r.arm += 1;
        r.best_subset = r.best_subset.as_deref().map(shift);
    }
    to_sorted_json(&shown)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbai::dist::prop13_instance;
    use qbai::gaps::{gap_report, CParam};
    use qbai::GapConfig;

    #[test]
    fn prop13_table() {
        let inst = prop13_instance(0.5, 0.48, 0.1).unwrap();
        let rep = gap_report(&inst, &GapConfig::new(1.0, 0.1, CParam::Finite(2)).unwrap()).unwrap();
        let csv = gap_csv(&rep).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("arm,ours,limit,modified,nkss,hr,best_subset"));
        assert!(lines.next().unwrap().starts_with("1,"));
        let json = gap_json(&rep).unwrap();
        assert!(json.contains("\"members\": [\n      1,\n      2\n    ]"));
    }
}
