//! The noise-grid comparison: one table of time-averaged MSE per noise
//! setting, best and second-best flagged, optionally compared against built-in
//! reference values for 197-station, 95-step datasets.

use std::fmt::Write as _;

use gsamp_core::estimators::Setup;
use gsamp_core::{Dataset, MseReport, ObservationMask, SasParams};

use crate::config::Config;
use crate::error::Result;
use crate::parallel;

/// Relative deviation from a reference value that raises a flag.
pub const REFERENCE_TOLERANCE: f64 = 0.15;
pub const REFERENCE_NODES: usize = 197;
pub const REFERENCE_STEPS: usize = 95;

const REFERENCE_NAMES: [&str; 7] = ["gsamp-sum", "gsamp-median", "gsamp-smooth", "glms", "g-sign", "gdlms", "gsd"];

const REFERENCE_VALUES: [((f64, f64), [f64; 7]); 6] = [
    ((2.0, 0.1), [307.0, 341.0, 305.0, 325.0, 356.0, 315.0, 335.0]),
    ((2.0, 0.15), [309.0, 344.0, 306.0, 329.0, 359.0, 316.0, 336.0]),
    ((2.0, 0.2), [313.0, 348.0, 308.0, 335.0, 364.0, 318.0, 337.0]),
    ((1.3, 0.1), [345.0, 440.0, 423.0, 3850.0, 584.0, 776.0, 505.0]),
    ((1.3, 0.15), [356.0, 491.0, 579.0, 8255.0, 890.0, 1353.0, 755.0]),
    ((1.3, 0.2), [376.0, 582.0, 813.0, 14422.0, 1324.0, 2161.0, 1125.0]),
];

/// Reference time-averaged MSE for a reference estimator name and noise.
pub fn reference_value(name: &str, noise: &SasParams) -> Option<f64> {
    let col = REFERENCE_NAMES.iter().position(|n| *n == name)?;
    if noise.mu != 0.0 {
        return None;
    }
    REFERENCE_VALUES
        .iter()
        .find(|((a, g), _)| *a == noise.alpha && *g == noise.gamma)
        .map(|(_, row)| row[col])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Best,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub estimator: String,
    pub avg_mse: f64,
    pub flagged_trials: usize,
    pub rank: Option<Rank>,
    pub reference: Option<f64>,
    /// `(avg_mse - reference) / reference`.
    pub deviation: Option<f64>,
    pub out_of_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub noise: SasParams,
    pub rows: Vec<Row>,
    pub report: MseReport,
}

/// Whether a dataset has the shape of the reference comparison.
pub fn is_reference_shape(dataset: &Dataset) -> bool {
    dataset.n_nodes() == REFERENCE_NODES && dataset.n_steps() == REFERENCE_STEPS
}

pub fn build_table(report: MseReport, noise: SasParams, compare: bool) -> Table {
    let mut order: Vec<usize> = (0..report.estimators.len()).collect();
    order.sort_by(|&a, &b| report.estimators[a].avg_mse.total_cmp(&report.estimators[b].avg_mse));
    let rows = report
        .estimators
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let rank = match order.iter().position(|&j| j == i) {
                Some(0) => Some(Rank::Best),
                Some(1) => Some(Rank::Second),
                _ => None,
            };
            let reference = if compare { reference_value(&e.name, &noise) } else { None };
            let deviation = reference.map(|r| (e.avg_mse - r) / r);
            Row {
                estimator: e.name.clone(),
                avg_mse: e.avg_mse,
                flagged_trials: e.flags.len(),
                rank,
                reference,
                deviation,
                out_of_tolerance: deviation.is_some_and(|d| d.abs() > REFERENCE_TOLERANCE),
            }
        })
        .collect();
    Table { noise, rows, report }
}

/// Runs every noise setting of `config.table1` on one prepared setup.
pub fn run(
    config: &Config,
    dataset: &Dataset,
    mask: Option<ObservationMask>,
    threads: Option<usize>,
) -> Result<Vec<Table>> {
    let n = dataset.n_nodes();
    let first = config.run_config(n, config.table1[0], mask.clone());
    let setup: Setup = gsamp_core::experiment::prepare(&first, dataset)?;
    let compare = is_reference_shape(dataset);
    config
        .table1
        .iter()
        .map(|&noise| {
            let rc = config.run_config(n, noise, mask.clone());
            let report = parallel::monte_carlo(&rc, dataset, &setup, threads)?;
            Ok(build_table(report, noise, compare))
        })
        .collect()
}

fn rank_label(rank: Option<Rank>) -> &'static str {
    match rank {
        Some(Rank::Best) => "best",
        Some(Rank::Second) => "second",
        None => "",
    }
}

pub fn render(table: &Table) -> String {
    let n = &table.noise;
    let width = table.rows.iter().map(|r| r.estimator.len()).max().unwrap_or(9).max(9);
    let mut s = format!("alpha = {}, gamma = {}, mu = {}\n", n.alpha, n.gamma, n.mu);
    let _ = writeln!(
        s,
        "{:<width$}  {:>14}  {:<6}  {:>7}  {:>10}  {:>9}",
        "estimator", "avg_mse", "rank", "flagged", "reference", "deviation"
    );
    for r in &table.rows {
        let reference = r.reference.map_or(String::from("-"), |v| format!("{v}"));
        let deviation = r.deviation.map_or(String::from("-"), |d| {
            format!("{:+.1}%{}", 100.0 * d, if r.out_of_tolerance { " !" } else { "" })
        });
        let _ = writeln!(
            s,
            "{:<width$}  {:>14.6}  {:<6}  {:>7}  {:>10}  {:>9}",
            r.estimator,
            r.avg_mse,
            rank_label(r.rank),
            r.flagged_trials,
            reference,
            deviation
        );
    }
    s
}

/// `alpha,gamma,mu,estimator,avg_mse,rank,reference,deviation,out_of_tolerance`.
pub fn csv(tables: &[Table]) -> String {
    let mut s = String::from("alpha,gamma,mu,estimator,avg_mse,rank,reference,deviation,out_of_tolerance\n");
    for t in tables {
        for r in &t.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                t.noise.alpha,
                t.noise.gamma,
                t.noise.mu,
                r.estimator,
                r.avg_mse,
                rank_label(r.rank),
                r.reference.map_or(String::new(), |v| v.to_string()),
                r.deviation.map_or(String::new(), |v| v.to_string()),
                r.out_of_tolerance
            );
        }
    }
    s
}
