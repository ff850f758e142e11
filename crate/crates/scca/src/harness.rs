//! Replicated simulation experiments: per-tau records, oracle-tau selection
//! and the summary table, plus Pareto sweeps along a tau grid.

use crate::config::{ExperimentConfig, Method, SolverSection};
use crate::error::{AppError, Result};
use rayon::prelude::*;
use scca_core::baselines::{classical_cca, pma_cca};
use scca_core::metrics::{
    loss, nondominated, pareto_point, population_correlation, sample_correlation, true_point,
};
use scca_core::simulation::{make_truth, JointSampler, TruthSpec};
use scca_core::solver::{solve_first_pair, solve_path};
use scca_core::{CcaSolution, Dataset, Vector};
use serde::Serialize;
use std::fmt::Write as _;

/// One method at one grid point on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauRecord {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub replicate: usize,
    /// Position in the configured grid.
    pub tau_index: usize,
    pub tau_u: f64,
    pub tau_v: f64,
    pub sample_corr: Option<f64>,
    pub loss_u: Option<f64>,
    pub loss_v: Option<f64>,
    pub l1_u: Option<f64>,
    pub l1_v: Option<f64>,
    pub zero_solution: bool,
    pub converged: bool,
    /// Chosen by the oracle for this method and replicate.
    pub selected: bool,
    pub error: Option<String>,
}

impl TauRecord {
    fn total_loss(&self) -> Option<f64> {
        Some(self.loss_u? + self.loss_v?)
    }
}

/// Replicate means of the oracle-selected records.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub method: Method,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub replicates: usize,
    /// Replicates without a usable record.
    pub failed: usize,
    pub rho_hat: Option<f64>,
    pub e_u: Option<f64>,
    pub e_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub records: Vec<TauRecord>,
    pub table: Vec<TableRow>,
}

struct Cell<'a> {
    method: Method,
    n: usize,
    p: usize,
    q: usize,
    replicate: usize,
    truth: &'a TruthSpec,
}

impl Cell<'_> {
    fn record(&self, tau_index: usize, tau: (f64, f64)) -> TauRecord {
        TauRecord {
            method: self.method,
            n: self.n,
            p: self.p,
            q: self.q,
            replicate: self.replicate,
            tau_index,
            tau_u: tau.0,
            tau_v: tau.1,
            sample_corr: None,
            loss_u: None,
            loss_v: None,
            l1_u: None,
            l1_v: None,
            zero_solution: false,
            converged: false,
            selected: false,
            error: None,
        }
    }

    fn failed(&self, tau_index: usize, tau: (f64, f64), err: &dyn std::fmt::Display) -> TauRecord {
        TauRecord {
            error: Some(err.to_string()),
            ..self.record(tau_index, tau)
        }
    }

    fn scored(&self, tau_index: usize, tau: (f64, f64), u: &Vector, v: &Vector, corr: f64) -> TauRecord {
        TauRecord {
            sample_corr: Some(corr),
            loss_u: loss(u.as_slice(), self.truth.u_true.as_slice()).ok(),
            loss_v: loss(v.as_slice(), self.truth.v_true.as_slice()).ok(),
            l1_u: Some(scca_core::linalg::norm1(u.as_slice())),
            l1_v: Some(scca_core::linalg::norm1(v.as_slice())),
            converged: true,
            ..self.record(tau_index, tau)
        }
    }

    fn from_solution(&self, tau_index: usize, tau: (f64, f64), s: &CcaSolution) -> TauRecord {
        if s.zero_solution {
            return TauRecord {
                zero_solution: true,
                converged: s.converged,
                l1_u: Some(0.0),
                l1_v: Some(0.0),
                ..self.record(tau_index, tau)
            };
        }
        TauRecord {
            converged: s.converged,
            ..self.scored(tau_index, tau, &s.u_hat, &s.v_hat, s.sample_corr)
        }
    }
}

fn run_method(
    cell: &Cell<'_>,
    data: &Dataset,
    pairs: &[(f64, f64)],
    solver: &SolverSection,
) -> Vec<TauRecord> {
    match cell.method {
        Method::Ours => {
            let cfg = match solver.solver_config() {
                Ok(c) => c,
                Err(e) => return pairs.iter().enumerate().map(|(i, t)| cell.failed(i, *t, &e)).collect(),
            };
            match solve_path(data, &cfg, pairs, None) {
                Ok(sols) => sols
                    .iter()
                    .enumerate()
                    .map(|(i, s)| cell.from_solution(i, pairs[i], s))
                    .collect(),
                Err(e) => pairs.iter().enumerate().map(|(i, t)| cell.failed(i, *t, &e)).collect(),
            }
        }
        Method::Pma => pairs
            .iter()
            .enumerate()
            .map(|(i, &t)| match pma_cca(data.x(), data.y(), t.0, t.1, solver.pma_max_iter) {
                Ok(s) => cell.from_solution(i, t, &s),
                Err(e) => cell.failed(i, t, &e),
            })
            .collect(),
        Method::Classical => {
            let r = classical_cca(data.x(), data.y(), 1, solver.classical_ridge)
                .map_err(AppError::from)
                .and_then(|t| t.into_iter().next().ok_or_else(|| AppError::usage("no canonical pair")));
            vec![match r {
                Ok(t) => cell.scored(0, (0.0, 0.0), &t.u, &t.v, t.rho),
                Err(e) => cell.failed(0, (0.0, 0.0), &e),
            }]
        }
    }
}

/// Marks the record with the smallest `loss_u + loss_v` in each group of
/// records sharing method, size and replicate. Ties go to the earlier grid
/// point.
pub fn select_oracle(records: &mut [TauRecord]) {
    let mut start = 0;
    while start < records.len() {
        let key = |r: &TauRecord| (r.method, r.n, r.p, r.q, r.replicate);
        let k = key(&records[start]);
        let end = start + records[start..].iter().take_while(|r| key(r) == k).count();
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in records[start..end].iter_mut().enumerate() {
            r.selected = false;
            if let Some(l) = r.total_loss() {
                if best.is_none_or(|(_, b)| l < b) {
                    best = Some((i, l));
                }
            }
        }
        if let Some((i, _)) = best {
            records[start + i].selected = true;
        }
        start = end;
    }
}

fn summarize(records: &[TauRecord], methods: &[Method], sizes: &[(usize, usize, usize)], replicates: usize) -> Vec<TableRow> {
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let mut rows = Vec::new();
    for &method in methods {
        for &(n, p, q) in sizes {
            let chosen: Vec<&TauRecord> = records
                .iter()
                .filter(|r| r.selected && r.method == method && (r.n, r.p, r.q) == (n, p, q))
                .collect();
            let pick = |f: fn(&TauRecord) -> Option<f64>| -> Vec<f64> { chosen.iter().filter_map(|r| f(r)).collect() };
            rows.push(TableRow {
                method,
                n,
                p,
                q,
                replicates,
                failed: replicates - chosen.len(),
                rho_hat: mean(&pick(|r| r.sample_corr)),
                e_u: mean(&pick(|r| r.loss_u)),
                e_v: mean(&pick(|r| r.loss_v)),
            });
        }
    }
    rows
}

/// Runs every method on every replicate of every sample size. Replicates run
/// in parallel; the output order does not depend on scheduling.
pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<Benchmark> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    if sc.replicates == 0 {
        return Err(AppError::usage("scenario.replicates is zero, the table would be empty"));
    }
    let pairs = cfg.solver.tau_pairs()?;
    let mut methods = cfg.methods.clone();
    methods.sort_unstable();
    methods.dedup();

    let mut models = Vec::new();
    for n in sc.sample_sizes() {
        let truth = make_truth(&sc.spec(n)?)?;
        let sampler = JointSampler::new(&truth)?;
        models.push((n, truth, sampler));
    }
    let jobs: Vec<(usize, usize)> = (0..models.len())
        .flat_map(|m| (0..sc.replicates).map(move |r| (m, r)))
        .collect();
    let mut records: Vec<TauRecord> = jobs
        .par_iter()
        .flat_map_iter(|&(m, replicate)| {
            let (n, truth, sampler) = &models[m];
            let data = sampler
                .sample(*n, sc.sample_seed(replicate))
                .and_then(|d| d.standardized());
            methods
                .iter()
                .flat_map(|&method| {
                    let cell = Cell {
                        method,
                        n: *n,
                        p: sc.p,
                        q: sc.q,
                        replicate,
                        truth,
                    };
                    match &data {
                        Ok(d) => run_method(&cell, d, &pairs, &cfg.solver),
                        Err(e) => pairs.iter().enumerate().map(|(i, t)| cell.failed(i, *t, e)).collect(),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    records.sort_by(|a, b| {
        (a.method, a.n, a.replicate, a.tau_index).cmp(&(b.method, b.n, b.replicate, b.tau_index))
    });
    select_oracle(&mut records);
    let sizes: Vec<_> = models.iter().map(|(n, ..)| (*n, sc.p, sc.q)).collect();
    let table = summarize(&records, &methods, &sizes, sc.replicates);
    Ok(Benchmark { records, table })
}

fn cell(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Fixed-width rendering of the summary table.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
        "method", "n", "p", "q", "ok/reps", "rho_hat", "e_u", "e_v"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>6} {:>6} {:>8} {:>8} {:>8} {:>8}",
            r.method.name(),
            r.n,
            r.p,
            r.q,
            format!("{}/{}", r.replicates - r.failed, r.replicates),
            cell(r.rho_hat, 3),
            cell(r.e_u, 3),
            cell(r.e_v, 3),
        );
    }
    out
}

/// One point of a Pareto sweep, or the true pair when `kind` is `truth`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoRow {
    pub kind: &'static str,
    pub tau_u: Option<f64>,
    pub tau_v: Option<f64>,
    pub l1_sum: f64,
    pub sample_corr: Option<f64>,
    pub population_corr: Option<f64>,
    pub zero_solution: bool,
    pub error: Option<String>,
}

fn point_row(tau: (f64, f64), s: &CcaSolution, truth: Option<&TruthSpec>) -> ParetoRow {
    let pt = pareto_point(s, truth);
    ParetoRow {
        kind: "point",
        tau_u: Some(tau.0),
        tau_v: Some(tau.1),
        l1_sum: pt.l1_sum,
        sample_corr: pt.sample_corr,
        population_corr: pt.population_corr,
        zero_solution: s.zero_solution,
        error: None,
    }
}

fn failed_row(tau: (f64, f64), err: &dyn std::fmt::Display) -> ParetoRow {
    ParetoRow {
        kind: "point",
        tau_u: Some(tau.0),
        tau_v: Some(tau.1),
        l1_sum: f64::NAN,
        sample_corr: None,
        population_corr: None,
        zero_solution: false,
        error: Some(err.to_string()),
    }
}

/// Solutions along `pairs` (warm-started from the most penalized end for our
/// method), one row per pair in grid order, followed by the true pair when
/// `truth` is given. If the warm-started path fails, each point is retried
/// on its own so that a single failure only flags that point.
pub fn pareto_sweep(
    data: &Dataset,
    truth: Option<&TruthSpec>,
    pairs: &[(f64, f64)],
    method: Method,
    solver: &SolverSection,
) -> Result<Vec<ParetoRow>> {
    if pairs.is_empty() {
        return Err(AppError::usage("the tau grid is empty"));
    }
    let mut rows: Vec<ParetoRow> = match method {
        Method::Ours => {
            let cfg = solver.solver_config()?;
            match solve_path(data, &cfg, pairs, None) {
                Ok(sols) => pairs.iter().zip(&sols).map(|(t, s)| point_row(*t, s, truth)).collect(),
                Err(_) => pairs
                    .par_iter()
                    .map(|&t| match solve_first_pair(data, &cfg.clone().with_taus(t.0, t.1), None) {
                        Ok(s) => point_row(t, &s, truth),
                        Err(e) => failed_row(t, &e),
                    })
                    .collect(),
            }
        }
        Method::Pma => pairs
            .par_iter()
            .map(|&t| match pma_cca(data.x(), data.y(), t.0, t.1, solver.pma_max_iter) {
                Ok(s) => point_row(t, &s, truth),
                Err(e) => failed_row(t, &e),
            })
            .collect(),
        Method::Classical => {
            return Err(AppError::usage("classical CCA has no penalty path"));
        }
    };
    if let Some(t) = truth {
        let (rho, l1) = true_point(t);
        rows.push(ParetoRow {
            kind: "truth",
            tau_u: None,
            tau_v: None,
            l1_sum: l1,
            sample_corr: sample_correlation(data.x(), data.y(), t.u_true.as_slice(), t.v_true.as_slice()).ok(),
            population_corr: population_correlation(t, t.u_true.as_slice(), t.v_true.as_slice())
                .ok()
                .or(Some(rho)),
            zero_solution: false,
            error: None,
        });
    }
    Ok(rows)
}

/// Which correlation a frontier is drawn against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Sample,
    Population,
}

/// Nondominated `(corr, l1)` points among the nonzero sweep points.
pub fn frontier(rows: &[ParetoRow], axis: Axis) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.kind == "point" && !r.zero_solution && r.error.is_none())
        .filter_map(|r| {
            let c = match axis {
                Axis::Sample => r.sample_corr,
                Axis::Population => r.population_corr,
            };
            Some((c?, r.l1_sum))
        })
        .collect();
    nondominated(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: Method, replicate: usize, tau_index: usize, l: Option<(f64, f64)>) -> TauRecord {
        TauRecord {
            method,
            n: 10,
            p: 2,
            q: 2,
            replicate,
            tau_index,
            tau_u: tau_index as f64,
            tau_v: tau_index as f64,
            sample_corr: Some(0.5),
            loss_u: l.map(|x| x.0),
            loss_v: l.map(|x| x.1),
            l1_u: None,
            l1_v: None,
            zero_solution: l.is_none(),
            converged: true,
            selected: false,
            error: None,
        }
    }

    #[test]
    fn oracle_is_argmin_of_total_loss_per_group() {
        let mut rs = vec![
            rec(Method::Ours, 0, 0, Some((0.3, 0.3))),
            rec(Method::Ours, 0, 1, Some((0.1, 0.4))),
            rec(Method::Ours, 0, 2, None),
            rec(Method::Ours, 1, 0, None),
            rec(Method::Ours, 1, 1, None),
            rec(Method::Pma, 0, 0, Some((1.0, 1.0))),
            rec(Method::Pma, 0, 1, Some((1.0, 1.0))),
        ];
        select_oracle(&mut rs);
        let picked: Vec<bool> = rs.iter().map(|r| r.selected).collect();
        assert_eq!(picked, [false, true, false, false, false, true, false]);
        let table = summarize(&rs, &[Method::Ours, Method::Pma], &[(10, 2, 2)], 2);
        assert_eq!(table[0].failed, 1);
        assert_eq!(table[0].e_u, Some(0.1));
        assert_eq!(table[1].failed, 1);
        let text = render_table(&table);
        assert!(text.contains("ours") && text.contains("1/2"), "{text}");
    }

    #[test]
    fn frontier_skips_zero_and_failed_points() {
        let row = |c: Option<f64>, l1: f64, zero: bool| ParetoRow {
            kind: "point",
            tau_u: Some(0.0),
            tau_v: Some(0.0),
            l1_sum: l1,
            sample_corr: c,
            population_corr: c,
            zero_solution: zero,
            error: None,
        };
        let rows = [row(Some(0.5), 1.0, false), row(Some(0.4), 2.0, false), row(None, 0.0, true), row(Some(0.9), 3.0, false)];
        assert_eq!(frontier(&rows, Axis::Population), vec![(0.5, 1.0), (0.9, 3.0)]);
    }
}
