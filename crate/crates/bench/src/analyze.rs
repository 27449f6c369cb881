//! Oblique-projection diagnostics for the two-state MDP.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use setd_core::analysis::{ChainModel, ObliqueDiagnostics};
use setd_core::envs;

/// One weighting and its diagnostics.
#[derive(Clone, Debug)]
pub struct WeightingRow {
    pub name: &'static str,
    pub diagnostics: ObliqueDiagnostics,
}

#[derive(Clone, Debug)]
pub struct TwoStateReport {
    pub x_star: DMatrix<f64>,
    pub followon: DVector<f64>,
    pub rows: Vec<WeightingRow>,
}

impl TwoStateReport {
    pub fn row(&self, name: &str) -> Option<&WeightingRow> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Diagnostics for the SETD, ETD and TD weightings.
pub fn analyze_two_state() -> setd_core::Result<TwoStateReport> {
    let (mdp, pol) = envs::build_two_state();
    let chain = ChainModel::new(&mdp, &pol)?;
    let f = chain.etd_omega()?;
    let weightings = [
        ("setd", chain.setd_omega()),
        ("etd", f.clone()),
        ("td", DVector::from_element(chain.n_states(), 1.0)),
    ];
    let mut rows = Vec::new();
    for (name, omega) in weightings {
        rows.push(WeightingRow {
            name,
            diagnostics: chain.diagnostics(&omega)?,
        });
    }
    Ok(TwoStateReport {
        x_star: chain.optimal_x()?,
        followon: f,
        rows,
    })
}

fn fmt_vec<'a>(xs: impl IntoIterator<Item = &'a f64>) -> String {
    let parts: Vec<String> = xs.into_iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

/// `key = value` text, one weighting per block.
pub fn render(report: &TwoStateReport) -> String {
    let mut out = String::new();
    writeln!(out, "x_star = {}", fmt_vec(report.x_star.iter())).unwrap();
    writeln!(out, "followon_f = {}", fmt_vec(report.followon.iter())).unwrap();
    for r in &report.rows {
        let d = &r.diagnostics;
        writeln!(out).unwrap();
        writeln!(out, "[{}]", r.name).unwrap();
        writeln!(out, "omega = {}", fmt_vec(d.omega.iter())).unwrap();
        writeln!(out, "x = {}", fmt_vec(d.x_of_omega.iter())).unwrap();
        writeln!(out, "criterion = {:.6}", d.criterion).unwrap();
        writeln!(out, "x_distance = {:.6}", d.x_distance).unwrap();
    }
    out
}
