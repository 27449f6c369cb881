//! Aggregation of learning curves across seeds.

use std::collections::BTreeMap;

use crate::experiment::{fmt_f64, LearningCurve};
use crate::grid::mean_std;

pub const REPORT_HEADER: [&str; 8] = [
    "algorithm",
    "step",
    "seeds",
    "diverged",
    "rmse_mean",
    "rmse_std",
    "rmspbe_mean",
    "rmspbe_std",
];

/// Cross-seed statistics at one `(algorithm, step)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub algorithm: String,
    pub step: u64,
    pub seeds: usize,
    pub diverged: usize,
    /// `(mean, std)` of RMSE and RMSPBE over non-diverged seeds; `None` when
    /// every seed has diverged.
    pub rmse: Option<(f64, f64)>,
    pub rmspbe: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Rmse,
    Rmspbe,
}

impl AggregateRow {
    pub fn stats(&self, metric: Metric) -> Option<(f64, f64)> {
        match metric {
            Metric::Rmse => self.rmse,
            Metric::Rmspbe => self.rmspbe,
        }
    }
}

// rmse values, rmspbe values, seeds, diverged seeds
type Cell = (Vec<f64>, Vec<f64>, usize, usize);

/// Mean and population standard deviation per `(algorithm, step)`, in order
/// of first appearance of each algorithm, then by step.
pub fn aggregate(curves: &[LearningCurve]) -> Vec<AggregateRow> {
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(usize, u64), Cell> = BTreeMap::new();
    for curve in curves {
        for r in &curve.rows {
            let idx = match order.iter().position(|a| *a == r.algorithm) {
                Some(i) => i,
                None => {
                    order.push(r.algorithm.clone());
                    order.len() - 1
                }
            };
            let cell = cells.entry((idx, r.step)).or_default();
            cell.2 += 1;
            if r.diverged {
                cell.3 += 1;
            } else {
                cell.0.push(r.rmse);
                cell.1.push(r.rmspbe);
            }
        }
    }
    cells
        .into_iter()
        .map(|((idx, step), (rmse, rmspbe, seeds, diverged))| AggregateRow {
            algorithm: order[idx].clone(),
            step,
            seeds,
            diverged,
            rmse: (!rmse.is_empty()).then(|| mean_std(&rmse)),
            rmspbe: (!rmspbe.is_empty()).then(|| mean_std(&rmspbe)),
        })
        .collect()
}

/// First step at which the mean `metric` of `algorithm` drops below
/// `threshold`, ignoring steps where any seed has diverged.
pub fn first_below(rows: &[AggregateRow], algorithm: &str, metric: Metric, threshold: f64) -> Option<u64> {
    rows.iter()
        .filter(|r| r.algorithm == algorithm && r.diverged == 0)
        .find(|r| r.stats(metric).is_some_and(|(m, _)| m < threshold))
        .map(|r| r.step)
}

pub fn to_csv_string(rows: &[AggregateRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER).expect("in-memory write");
    let pair = |s: Option<(f64, f64)>| match s {
        Some((m, sd)) => [fmt_f64(m), fmt_f64(sd)],
        None => ["diverged".to_string(), "diverged".to_string()],
    };
    for r in rows {
        let [rm, rs] = pair(r.rmse);
        let [pm, ps] = pair(r.rmspbe);
        w.write_record([
            r.algorithm.clone(),
            r.step.to_string(),
            r.seeds.to_string(),
            r.diverged.to_string(),
            rm,
            rs,
            pm,
            ps,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Convergence-speed lines `algorithm,metric,threshold,first_step` (empty
/// when never reached).
pub fn speed_table(rows: &[AggregateRow], metric: Metric, threshold: f64) -> String {
    let mut algs: Vec<&str> = Vec::new();
    for r in rows {
        if !algs.contains(&r.algorithm.as_str()) {
            algs.push(&r.algorithm);
        }
    }
    let name = match metric {
        Metric::Rmse => "rmse",
        Metric::Rmspbe => "rmspbe",
    };
    let mut out = String::from("algorithm,metric,threshold,first_step\n");
    for a in algs {
        let step = first_below(rows, a, metric, threshold).map_or(String::new(), |s| s.to_string());
        out.push_str(&format!("{a},{name},{},{step}\n", fmt_f64(threshold)));
    }
    out
}
