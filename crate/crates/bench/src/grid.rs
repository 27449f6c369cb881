//! Hyperparameter grid search over multi-seed experiments.

use std::fmt;
use std::str::FromStr;

use setd_core::learners::Algorithm;

use crate::config::{self, BuiltEnv, ConfigError, ConfigResult, ExperimentConfig, StepSizes};
use crate::experiment::{fmt_f64, run_experiment_on, LearningCurve};

/// Published step-size grid.
pub const TABLE_ALPHAS: [f64; 38] = [
    1e-7, 1e-6, 2e-6, 2.5e-6, 3e-6, 5e-6, 7e-6, 9e-6, 1e-5, 1e-4, 2e-4, 4e-4, 6e-4, 8e-4, 1e-3,
    2e-3, 3e-3, 4e-3, 5e-3, 6e-3, 7e-3, 8e-3, 9e-3, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08,
    0.09, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
];

/// Published secondary-ratio grid.
pub const TABLE_MUS: [f64; 11] = [1e-4, 1e-3, 5e-3, 0.01, 0.05, 0.1, 0.5, 1.0, 4.0, 8.0, 16.0];

/// Published trace-decay grid.
pub const TABLE_LAMBDAS: [f64; 2] = [0.4, 0.8];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SelectionMetric {
    FinalRmse,
    FinalRmspbe,
    /// Mean RMSPBE over all evaluation points.
    AucRmspbe,
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionMetric::FinalRmse => "final_rmse",
            SelectionMetric::FinalRmspbe => "final_rmspbe",
            SelectionMetric::AucRmspbe => "auc_rmspbe",
        })
    }
}

impl FromStr for SelectionMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "final_rmse" => Ok(SelectionMetric::FinalRmse),
            "final_rmspbe" => Ok(SelectionMetric::FinalRmspbe),
            "auc_rmspbe" => Ok(SelectionMetric::AucRmspbe),
            other => Err(format!("unknown selection metric '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub mus: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub selection_metric: SelectionMetric,
}

impl GridSpec {
    /// The published grid.
    pub fn table() -> Self {
        GridSpec {
            alphas: TABLE_ALPHAS.to_vec(),
            mus: TABLE_MUS.to_vec(),
            lambdas: TABLE_LAMBDAS.to_vec(),
            selection_metric: SelectionMetric::FinalRmspbe,
        }
    }

    pub fn validate(&self) -> ConfigResult<()> {
        if self.alphas.is_empty() {
            return Err(ConfigError::Invalid("grid needs at least one alpha".into()));
        }
        Ok(())
    }

    /// Grid cells for `algorithm`; axes the algorithm ignores collapse to
    /// the base value so they are not run redundantly.
    pub fn cells(&self, algorithm: Algorithm, base: StepSizes) -> Vec<StepSizes> {
        let mus = if algorithm.uses_mu() && !self.mus.is_empty() {
            self.mus.clone()
        } else {
            vec![base.mu]
        };
        let lambdas = if algorithm.uses_lambda() && !self.lambdas.is_empty() {
            self.lambdas.clone()
        } else {
            vec![base.lambda]
        };
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &mu in &mus {
                for &lambda in &lambdas {
                    out.push(StepSizes::new(alpha, mu, lambda));
                }
            }
        }
        out
    }
}

impl FromStr for GridSpec {
    type Err = ConfigError;

    /// Keys `grid.alphas`, `grid.mus`, `grid.lambdas` (comma lists, or the
    /// word `table` for the published values) and `grid.metric`.
    fn from_str(text: &str) -> ConfigResult<Self> {
        let pairs = config::parse_pairs(text)?;
        let table = GridSpec::table();
        let mut grid = GridSpec {
            alphas: Vec::new(),
            mus: Vec::new(),
            lambdas: Vec::new(),
            selection_metric: SelectionMetric::FinalRmspbe,
        };
        for (k, v) in &pairs {
            let list = |fallback: &Vec<f64>| -> ConfigResult<Vec<f64>> {
                if v == "table" {
                    Ok(fallback.clone())
                } else {
                    config::parse_list(k, v)
                }
            };
            match k.as_str() {
                "grid.alphas" => grid.alphas = list(&table.alphas)?,
                "grid.mus" => grid.mus = list(&table.mus)?,
                "grid.lambdas" => grid.lambdas = list(&table.lambdas)?,
                "grid.metric" => grid.selection_metric = config::parse_value(k, v)?,
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub sizes: StepSizes,
    /// Mean and standard deviation over non-diverged seeds; `None` when
    /// every seed diverged.
    pub stats: Option<(f64, f64)>,
    pub diverged_seeds: usize,
    pub seeds: usize,
}

#[derive(Clone, Debug, Default)]
pub struct GridResult {
    pub cells: Vec<CellSummary>,
    pub curves: Vec<LearningCurve>,
}

impl GridResult {
    /// Lowest-scoring cell per algorithm among cells with no diverged seed.
    pub fn best(&self) -> Vec<&CellSummary> {
        let mut algs: Vec<Algorithm> = self.cells.iter().map(|c| c.algorithm).collect();
        algs.dedup();
        algs.into_iter()
            .filter_map(|a| {
                self.cells
                    .iter()
                    .filter(|c| c.algorithm == a && c.diverged_seeds == 0)
                    .filter_map(|c| c.stats.map(|(m, _)| (m, c)))
                    .min_by(|x, y| x.0.total_cmp(&y.0))
                    .map(|(_, c)| c)
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "algorithm", "alpha", "mu", "lambda", "mean", "std", "diverged_seeds", "seeds", "best",
        ])
        .expect("in-memory write");
        let best = self.best();
        for c in &self.cells {
            let (mean, std) = match c.stats {
                Some((m, s)) => (fmt_f64(m), fmt_f64(s)),
                None => ("diverged".to_string(), "diverged".to_string()),
            };
            let is_best = best.iter().any(|b| std::ptr::eq(*b, c));
            w.write_record([
                c.algorithm.name().to_string(),
                fmt_f64(c.sizes.alpha),
                fmt_f64(c.sizes.mu),
                fmt_f64(c.sizes.lambda),
                mean,
                std,
                c.diverged_seeds.to_string(),
                c.seeds.to_string(),
                u8::from(is_best).to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Per-seed score of one run under `metric`.
fn score(curve: &LearningCurve, algorithm: &str, seed: u64, metric: SelectionMetric) -> Option<f64> {
    let rows: Vec<_> = curve.run(algorithm, seed).collect();
    let last = rows.last()?;
    if last.diverged {
        return None;
    }
    Some(match metric {
        SelectionMetric::FinalRmse => last.rmse,
        SelectionMetric::FinalRmspbe => last.rmspbe,
        SelectionMetric::AucRmspbe => rows.iter().map(|r| r.rmspbe).sum::<f64>() / rows.len() as f64,
    })
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs the full multi-seed experiment for every grid cell of every
/// configured algorithm.
pub fn grid_search(cfg: &ExperimentConfig, grid: &GridSpec) -> setd_core::Result<GridResult> {
    grid.validate()
        .map_err(|e| setd_core::Error::InvalidModel(e.to_string()))?;
    let env = BuiltEnv::new(&cfg.env)?;
    let mut result = GridResult::default();
    for &(alg, base) in &cfg.algorithms {
        for sizes in grid.cells(alg, base) {
            let cell_cfg = ExperimentConfig {
                algorithms: vec![(alg, sizes)],
                ..cfg.clone()
            };
            let curve = run_experiment_on(&env, &cell_cfg)?;
            let scores: Vec<Option<f64>> = cfg
                .seeds
                .iter()
                .map(|&s| score(&curve, alg.name(), s, grid.selection_metric))
                .collect();
            let ok: Vec<f64> = scores.iter().flatten().copied().collect();
            result.cells.push(CellSummary {
                algorithm: alg,
                sizes,
                stats: (!ok.is_empty()).then(|| mean_std(&ok)),
                diverged_seeds: scores.len() - ok.len(),
                seeds: scores.len(),
            });
            result.curves.push(curve);
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EnvKind;
    use crate::experiment::run_experiment;

    #[test]
    fn table_grid_contents() {
        let g = GridSpec::table();
        assert_eq!(g.alphas.first(), Some(&1e-7));
        assert_eq!(g.alphas.last(), Some(&0.6));
        assert!(g.alphas.contains(&2.5e-6) && g.alphas.contains(&0.006));
        assert!(g.alphas.windows(2).all(|w| w[0] < w[1]));
        for mu in [1e-4, 16.0, 0.005] {
            assert!(g.mus.contains(&mu));
        }
        assert_eq!(g.lambdas, vec![0.4, 0.8]);
    }

    #[test]
    fn unused_axes_collapse() {
        let g = GridSpec {
            alphas: vec![0.1, 0.2],
            mus: vec![1.0, 2.0, 3.0],
            lambdas: vec![0.4, 0.8],
            selection_metric: SelectionMetric::FinalRmse,
        };
        let base = StepSizes::new(0.5, 1.0, 0.0);
        assert_eq!(g.cells(Algorithm::Setd, base).len(), 2);
        assert_eq!(g.cells(Algorithm::Gtd2, base).len(), 6);
        assert_eq!(g.cells(Algorithm::SetdLambda, base).len(), 4);
    }

    #[test]
    fn parses_grid_files() {
        let g: GridSpec = "grid.alphas = 0.1, 0.2\ngrid.mus = table\ngrid.metric = auc_rmspbe"
            .parse()
            .unwrap();
        assert_eq!(g.alphas, vec![0.1, 0.2]);
        assert_eq!(g.mus.len(), TABLE_MUS.len());
        assert_eq!(g.selection_metric, SelectionMetric::AucRmspbe);
        assert!("grid.mus = 1".parse::<GridSpec>().is_err());
        assert!("grid.alphas = 0.1\ngrid.metric = best".parse::<GridSpec>().is_err());
        assert!("grid.betas = 0.1".parse::<GridSpec>().is_err());
    }

    #[test]
    fn singleton_grid_matches_plain_run() {
        let mut cfg = ExperimentConfig::new(
            EnvKind::Boyan,
            vec![(Algorithm::Setd, StepSizes::new(0.3, 1.0, 0.0))],
            200,
        );
        cfg.seeds = vec![4, 5];
        let grid = GridSpec {
            alphas: vec![0.3],
            mus: vec![],
            lambdas: vec![],
            selection_metric: SelectionMetric::FinalRmse,
        };
        let res = grid_search(&cfg, &grid).unwrap();
        assert_eq!(res.cells.len(), 1);
        assert_eq!(res.curves[0], run_experiment(&cfg).unwrap());
        let finals: Vec<f64> = res.curves[0].finals("setd").iter().map(|r| r.rmse).collect();
        let (m, s) = mean_std(&finals);
        assert_eq!(res.cells[0].stats, Some((m, s)));
        assert_eq!(res.best().len(), 1);
        assert_eq!(res.to_csv_string().lines().count(), 2);
    }

    #[test]
    fn diverged_cells_get_a_sentinel() {
        let mut cfg = ExperimentConfig::new(
            EnvKind::Baird,
            vec![(Algorithm::Td, StepSizes::new(0.5, 1.0, 0.0))],
            2000,
        );
        cfg.seeds = vec![1, 2];
        let grid = GridSpec {
            alphas: vec![0.5, 1e-7],
            mus: vec![],
            lambdas: vec![],
            selection_metric: SelectionMetric::FinalRmspbe,
        };
        let res = grid_search(&cfg, &grid).unwrap();
        assert_eq!(res.cells.len(), 2);
        assert_eq!(res.cells[0].stats, None);
        assert_eq!(res.cells[0].diverged_seeds, 2);
        let csv = res.to_csv_string();
        assert!(csv.lines().nth(1).unwrap().contains("diverged,diverged"));
        assert_eq!(res.best()[0].sizes.alpha, 1e-7);
    }
}
