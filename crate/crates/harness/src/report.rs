//! CSV and text-table rendering of experiment results.

use std::fmt::Write as _;

use olp_core::metrics::CSV_HEADER;

use crate::runner::ExperimentResult;

/// Per-trial rows in cell order.
pub fn csv(result: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for cell in &result.cells {
        for rec in &cell.records {
            out.push_str(&rec.to_csv_row());
            out.push('\n');
        }
    }
    out
}

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            let pad = w - cell.chars().count();
            if i == 0 {
                write!(out, "{cell}{}", " ".repeat(pad)).unwrap();
            } else {
                write!(out, "  {}{cell}", " ".repeat(pad)).unwrap();
            }
        }
        out.push('\n');
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().take(cols).map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for row in rows {
        line(&mut out, row);
    }
    out
}

/// Mean total regret (± standard error) per horizon and cell, with the mean
/// hindsight objective.
pub fn regret_table(result: &ExperimentResult) -> String {
    let per_t = result.spec.cells().len();
    let mut header = vec!["T".to_string(), "offline".to_string()];
    header.extend(result.cells.iter().take(per_t).map(|c| c.label()));
    let rows: Vec<Vec<String>> = result
        .cells
        .chunks(per_t)
        .map(|cells| {
            let mut row = vec![cells[0].horizon.to_string(), format!("{:.2}", cells[0].mean_offline())];
            row.extend(cells.iter().map(|c| match c.aggregate() {
                Some(a) => format!("{:.2} ± {:.2}", a.mean_total, a.std_error()),
                None => "failed".to_string(),
            }));
            row
        })
        .collect();
    render(&header, &rows)
}

/// Per horizon: mean regret, mean decision-path wall time and LP solve count
/// for every cell.
pub fn compare_table(result: &ExperimentResult) -> String {
    let per_t = result.spec.cells().len();
    let mut header = vec!["T".to_string(), "offline".to_string()];
    for c in result.cells.iter().take(per_t) {
        let label = c.label();
        header.push(format!("{label} regret"));
        header.push(format!("{label} time(s)"));
        header.push(format!("{label} LP solves"));
    }
    let rows: Vec<Vec<String>> = result
        .cells
        .chunks(per_t)
        .map(|cells| {
            let mut row = vec![cells[0].horizon.to_string(), format!("{:.2}", cells[0].mean_offline())];
            for c in cells {
                match c.aggregate() {
                    Some(a) => {
                        row.push(format!("{:.2}", a.mean_total));
                        row.push(format!("{:.4}", c.mean_wall_time()));
                        row.push(format!("{:.0}", c.mean_lp_solves()));
                    }
                    None => row.extend(["failed".to_string(), "-".to_string(), "-".to_string()]),
                }
            }
            row
        })
        .collect();
    render(&header, &rows)
}

/// One line per failed trial.
pub fn failure_manifest(result: &ExperimentResult) -> String {
    let mut out = String::new();
    for cell in &result.cells {
        for f in &cell.failures {
            writeln!(out, "T={} {} trial={} seed={}: {}", cell.horizon, cell.label(), f.trial, f.seed, f.message)
                .unwrap();
        }
    }
    out
}
