//! CSV and JSON emission.
//!
//! `results.csv` is long format, one row per (seed, strategy, cycle, metric),
//! sorted by that key so repeated runs of the same config are byte-identical.
//! Wall times and other non-deterministic fields go to `reports.json` only.

use std::path::Path;

use crate::experiment::{
    metric_value, ComparisonReport, StrategyRun, SummaryRow, METRIC_NAMES,
};
use crate::RunError;

/// Long-format results CSV: `seed,strategy,cycle,metric,value`.
pub fn results_csv(runs: &[StrategyRun]) -> String {
    let mut rows: Vec<(u64, &str, usize, usize, f64)> = Vec::new();
    for run in runs {
        for seed_run in &run.seed_runs {
            for cycle in &seed_run.cycles {
                for (m, metric) in METRIC_NAMES.iter().enumerate() {
                    rows.push((
                        cycle.seed,
                        &run.strategy,
                        cycle.cycle,
                        m,
                        metric_value(&cycle.metrics, metric),
                    ));
                }
            }
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    let mut out = String::from("seed,strategy,cycle,metric,value\n");
    for (seed, strategy, cycle, m, value) in rows {
        out.push_str(&format!(
            "{seed},{strategy},{cycle},{},{value}\n",
            METRIC_NAMES[m]
        ));
    }
    out
}

/// Aggregate CSV: `strategy,cycle,metric,mean,std,seeds`.
pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut rows: Vec<&SummaryRow> = summary.iter().collect();
    rows.sort_by(|a, b| {
        let ka = (&a.strategy, a.cycle, metric_order(a.metric));
        let kb = (&b.strategy, b.cycle, metric_order(b.metric));
        ka.cmp(&kb)
    });
    let mut out = String::from("strategy,cycle,metric,mean,std,seeds\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.strategy, row.cycle, row.metric, row.mean, row.std, row.seeds
        ));
    }
    out
}

fn metric_order(name: &str) -> usize {
    METRIC_NAMES.iter().position(|m| *m == name).unwrap_or(usize::MAX)
}

pub fn write_run_outputs(dir: &Path, runs: &[StrategyRun]) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), results_csv(runs))?;
    let json = serde_json::to_string_pretty(runs)
        .map_err(|e| RunError::Runtime(format!("serializing reports: {e}")))?;
    std::fs::write(dir.join("reports.json"), json)?;
    Ok(())
}

pub fn write_compare_outputs(dir: &Path, report: &ComparisonReport) -> Result<(), RunError> {
    write_run_outputs(dir, &report.runs)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&report.summary))?;
    std::fs::write(dir.join("curves.svg"), crate::plot::curves_svg(&report.summary))?;
    Ok(())
}

/// Console table: one block per metric, strategies as rows, cycles as columns.
pub fn summary_table(summary: &[SummaryRow]) -> String {
    let mut strategies: Vec<&str> = summary.iter().map(|r| r.strategy.as_str()).collect();
    strategies.sort_unstable();
    strategies.dedup();
    let max_cycle = summary.iter().map(|r| r.cycle).max().unwrap_or(0);
    let mut out = String::new();
    for metric in METRIC_NAMES {
        out.push_str(&format!("\n{metric} (mean +/- std over seeds)\n"));
        out.push_str(&format!("{:<18}", "strategy"));
        for cycle in 0..=max_cycle {
            out.push_str(&format!("{:>16}", format!("r={cycle}")));
        }
        out.push('\n');
        for strategy in &strategies {
            out.push_str(&format!("{strategy:<18}"));
            for cycle in 0..=max_cycle {
                let row = summary
                    .iter()
                    .find(|r| r.strategy == *strategy && r.cycle == cycle && r.metric == metric);
                match row {
                    Some(r) => {
                        out.push_str(&format!("{:>16}", format!("{:.4}+/-{:.3}", r.mean, r.std)))
                    }
                    None => out.push_str(&format!("{:>16}", "-")),
                }
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{CycleReport, SeedRun};
    use stepal_core::metrics::MetricReport;

    fn report(acc: f64) -> MetricReport {
        MetricReport {
            accuracy: acc,
            macro_precision: acc,
            macro_recall: acc,
            macro_jaccard: acc,
            per_class: vec![],
        }
    }

    fn runs() -> Vec<StrategyRun> {
        vec![StrategyRun {
            strategy: "random".into(),
            seed_runs: vec![SeedRun {
                seed: 1,
                pool_fingerprint: 0,
                cycles: vec![
                    CycleReport {
                        seed: 1,
                        cycle: 0,
                        labeled_count: 2,
                        chosen: vec!["v1".into()],
                        metrics: report(0.5),
                        wall_time_secs: 0.0,
                        warnings: vec![],
                    },
                    CycleReport {
                        seed: 1,
                        cycle: 1,
                        labeled_count: 3,
                        chosen: vec![],
                        metrics: report(0.75),
                        wall_time_secs: 0.0,
                        warnings: vec![],
                    },
                ],
                error: None,
            }],
        }]
    }

    #[test]
    fn results_csv_layout_and_order() {
        let csv = results_csv(&runs());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "seed,strategy,cycle,metric,value");
        assert_eq!(lines[1], "1,random,0,accuracy,0.5");
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(lines[5].starts_with("1,random,1,accuracy,0.75"));
    }

    #[test]
    fn csv_is_stable_across_input_order() {
        let mut reordered = runs();
        reordered[0].seed_runs[0].cycles.reverse();
        assert_eq!(results_csv(&runs()), results_csv(&reordered));
    }
}
