use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Outcome of one repeat.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub test_mse: f64,
    /// Selection, training and evaluation time of this repeat.
    pub wall_time_s: f64,
    /// Time spent inside the QUBO solver (and penalty tuning), zero for the baselines.
    pub solve_time_s: f64,
}

/// Test-MSE statistics of one method over its repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: String,
    pub runs: Vec<RunRecord>,
    /// Shared setup time (binning, MI, QUBO construction), excluded from the per-run times.
    pub overhead_s: f64,
}

/// Mean and sample (n − 1) standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// A value in units of 10⁻³ with one decimal: `0.0053` → `"5.3"`.
pub fn format_milli(v: f64) -> String {
    format!("{:.1}", v * 1e3)
}

pub const CSV_HEADER: &str = "method,seed,test_mse,wall_time_s";

impl MetricsReport {
    pub fn repeats(&self) -> usize {
        self.runs.len()
    }

    pub fn mses(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.test_mse).collect()
    }

    pub fn mean_std(&self) -> (f64, f64) {
        mean_std(&self.mses())
    }

    /// `method: mean ± std (×10⁻³, n runs)`.
    pub fn summary_line(&self) -> String {
        let (m, s) = self.mean_std();
        format!(
            "{}: {} ± {} (×10⁻³, {} runs)",
            self.method,
            format_milli(m),
            format_milli(s),
            self.repeats()
        )
    }

    /// Summary line plus timing breakdown.
    pub fn summary(&self) -> String {
        let solve: f64 = self.runs.iter().map(|r| r.solve_time_s).sum();
        let wall: f64 = self.runs.iter().map(|r| r.wall_time_s).sum();
        let n = self.repeats().max(1) as f64;
        format!(
            "{}\n  overhead {:.3} s; per run: solve {:.3} s, total {:.3} s\n",
            self.summary_line(),
            self.overhead_s,
            solve / n,
            wall / n
        )
    }

    pub fn csv_rows(&self, out: &mut String) {
        for r in &self.runs {
            writeln!(
                out,
                "{},{},{},{:.3}",
                self.method, r.seed, r.test_mse, r.wall_time_s
            )
            .unwrap();
        }
    }

    pub fn to_csv(&self) -> String {
        reports_to_csv(std::slice::from_ref(self))
    }
}

pub fn reports_to_csv(reports: &[MetricsReport]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in reports {
        r.csv_rows(&mut out);
    }
    out
}

/// Reads a report CSV back, grouping rows by method in order of first appearance.
/// Overhead and solver times are not part of the CSV and come back as zero.
pub fn parse_report_csv(text: &str) -> Result<Vec<MetricsReport>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        _ => {
            return Err(Error::format(format!(
                "report CSV must start with `{CSV_HEADER}`"
            )))
        }
    }
    let mut reports: Vec<MetricsReport> = Vec::new();
    for (no, line) in lines.enumerate() {
        let bad = || Error::format(format!("report row {}: {line:?}", no + 1));
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let [method, seed, mse, wall] = cols[..] else {
            return Err(bad());
        };
        let run = RunRecord {
            seed: seed.parse().map_err(|_| bad())?,
            test_mse: mse.parse().map_err(|_| bad())?,
            wall_time_s: wall.parse().map_err(|_| bad())?,
            solve_time_s: 0.0,
        };
        match reports.iter_mut().find(|r| r.method == method) {
            Some(r) => r.runs.push(run),
            None => reports.push(MetricsReport {
                method: method.to_string(),
                runs: vec![run],
                overhead_s: 0.0,
            }),
        }
    }
    if reports.is_empty() {
        return Err(Error::Empty("report CSV has no rows".into()));
    }
    Ok(reports)
}

/// The CSV with its timing column removed, for reproducibility comparisons.
pub fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}
