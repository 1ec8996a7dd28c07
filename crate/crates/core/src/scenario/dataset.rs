use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ScenarioConfig, SolverChoice};
use super::generate::generate_scenarios;
use super::sample::{build_sample, SlotLayout};
use super::ScenarioError;
use crate::grid::NetworkModel;
use crate::pf::{order_branches, CurrentInjectionSolver, FbsSolver, PfError, PfSolution, SolveOptions};

/// Per-slot min-max scaling fitted on training rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    /// Fits on the given rows of a row-major matrix with `cols` columns.
    pub fn fit(data: &[f64], cols: usize, rows: &[usize]) -> Self {
        assert!(!rows.is_empty(), "normalizer needs at least one row");
        let mut min = vec![f64::INFINITY; cols];
        let mut max = vec![f64::NEG_INFINITY; cols];
        for &r in rows {
            for (c, &v) in data[r * cols..(r + 1) * cols].iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Normalizer { min, max }
    }

    pub fn len(&self) -> usize {
        self.min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_empty()
    }

    /// Maps one row into the training range; constant slots map to 0.
    /// Values outside the training range pass through unclamped.
    pub fn apply(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            let span = self.max[c] - self.min[c];
            *v = if span > 0.0 { (*v - self.min[c]) / span } else { 0.0 };
        }
    }

    pub fn invert(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            let span = self.max[c] - self.min[c];
            *v = if span > 0.0 { *v * span + self.min[c] } else { self.min[c] };
        }
    }

    pub fn apply_all(&self, data: &mut [f64]) {
        data.chunks_mut(self.len()).for_each(|r| self.apply(r));
    }

    pub fn invert_all(&self, data: &mut [f64]) {
        data.chunks_mut(self.len()).for_each(|r| self.invert(r));
    }
}

/// Seeded shuffle of `0..n`; the first `round(n·fraction)` go to training.
/// Both index lists are returned sorted.
pub fn split_dataset(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!(train_fraction > 0.0 && train_fraction < 1.0);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64) * train_fraction).round() as usize;
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Raw samples (row-major), slot names, the split and the normalizers fitted
/// on the training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub x_norm: Option<Normalizer>,
    pub y_norm: Option<Normalizer>,
}

impl Dataset {
    pub fn empty(x_names: Vec<String>, y_names: Vec<String>) -> Self {
        Dataset {
            x_names,
            y_names,
            x: Vec::new(),
            y: Vec::new(),
            train: Vec::new(),
            test: Vec::new(),
            x_norm: None,
            y_norm: None,
        }
    }

    pub fn nx(&self) -> usize {
        self.x_names.len()
    }

    pub fn ny(&self) -> usize {
        self.y_names.len()
    }

    pub fn len(&self) -> usize {
        if self.nx() > 0 {
            self.x.len() / self.nx()
        } else {
            self.y.len() / self.ny().max(1)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.nx()..(i + 1) * self.nx()]
    }

    pub fn y_row(&self, i: usize) -> &[f64] {
        &self.y[i * self.ny()..(i + 1) * self.ny()]
    }

    /// Assigns a seeded split and fits both normalizers on it.
    pub fn split_and_fit(&mut self, train_fraction: f64, seed: u64) {
        let (train, test) = split_dataset(self.len(), train_fraction, seed);
        self.train = train;
        self.test = test;
        self.refit();
    }

    pub fn refit(&mut self) {
        if self.train.is_empty() {
            self.x_norm = None;
            self.y_norm = None;
        } else {
            self.x_norm = Some(Normalizer::fit(&self.x, self.nx(), &self.train));
            self.y_norm = Some(Normalizer::fit(&self.y, self.ny(), &self.train));
        }
    }

    /// Normalized copies of the selected rows `(x, y)`.
    pub fn normalized(&self, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let (nx, ny) = (self.nx(), self.ny());
        let mut x = Vec::with_capacity(rows.len() * nx);
        let mut y = Vec::with_capacity(rows.len() * ny);
        for &r in rows {
            x.extend_from_slice(self.x_row(r));
            y.extend_from_slice(self.y_row(r));
        }
        if let Some(n) = &self.x_norm {
            n.apply_all(&mut x);
        }
        if let Some(n) = &self.y_norm {
            n.apply_all(&mut y);
        }
        (x, y)
    }
}

/// Concatenates datasets that share a slot layout. Each source keeps its own
/// split (train rows stay train, test rows stay test) and the normalizers are
/// refitted on the combined training rows.
pub fn mix_topology_datasets(datasets: &[Dataset]) -> Result<Dataset, ScenarioError> {
    let first = datasets.first().ok_or_else(|| ScenarioError::SchemaMismatch("no datasets to mix".into()))?;
    let mut out = Dataset::empty(first.x_names.clone(), first.y_names.clone());
    for d in datasets {
        if d.x_names != out.x_names || d.y_names != out.y_names {
            return Err(ScenarioError::SchemaMismatch(format!(
                "slot layout {}x{} differs from {}x{}",
                d.nx(),
                d.ny(),
                out.nx(),
                out.ny()
            )));
        }
        let offset = out.len();
        out.x.extend_from_slice(&d.x);
        out.y.extend_from_slice(&d.y);
        out.train.extend(d.train.iter().map(|i| i + offset));
        out.test.extend(d.test.iter().map(|i| i + offset));
    }
    out.refit();
    Ok(out)
}

/// Outcome of a generation run.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationReport {
    pub hours: usize,
    pub dropped: Vec<(usize, String)>,
}

impl GenerationReport {
    pub fn failure_rate(&self) -> f64 {
        self.dropped.len() as f64 / self.hours.max(1) as f64
    }
}

enum Solver {
    Fbs(FbsSolver),
    Ci(CurrentInjectionSolver),
}

impl Solver {
    fn solve(&self, net: &NetworkModel, opts: &SolveOptions) -> Result<PfSolution, PfError> {
        match self {
            Solver::Fbs(s) => s.solve(net, opts),
            Solver::Ci(s) => s.solve(net, opts),
        }
    }
}

/// Scenarios → solutions → samples → split → normalizers. Hours whose solve
/// fails or does not converge are dropped and listed in the report. The
/// result depends only on the network, the config and its seed.
pub fn generate_dataset(net: &NetworkModel, cfg: &ScenarioConfig, opts: &SolveOptions) -> Result<(Dataset, GenerationReport), ScenarioError> {
    let set = generate_scenarios(net, cfg)?;
    let solver = match cfg.solver {
        SolverChoice::Fbs => Solver::Fbs(FbsSolver::new(&set.base)?),
        SolverChoice::CurrentInjection => Solver::Ci(CurrentInjectionSolver::new(&set.base)?),
        SolverChoice::Auto => match order_branches(&set.base) {
            Ok(_) => Solver::Fbs(FbsSolver::new(&set.base)?),
            Err(PfError::NotRadial { .. }) => Solver::Ci(CurrentInjectionSolver::new(&set.base)?),
            Err(e) => return Err(e.into()),
        },
    };
    let layout = SlotLayout::new(&set.base);
    let results: Vec<Result<_, String>> = (0..set.len())
        .into_par_iter()
        .map(|t| {
            let net_t = set.instantiate(t);
            let sol = solver.solve(&net_t, opts).map_err(|e| e.to_string())?;
            build_sample(&layout, &net_t, &sol).map_err(|e| e.to_string())
        })
        .collect();
    let mut ds = Dataset::empty(layout.x_names.clone(), layout.y_names.clone());
    let mut dropped = Vec::new();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => {
                ds.x.extend(s.x);
                ds.y.extend(s.y);
            }
            Err(e) => {
                log::warn!("hour {t} dropped: {e}");
                dropped.push((t, e));
            }
        }
    }
    if ds.is_empty() {
        return Err(ScenarioError::NoSamples);
    }
    if ds.len() >= 2 {
        ds.split_and_fit(cfg.train_fraction, cfg.seed);
    }
    Ok((ds, GenerationReport { hours: set.len(), dropped }))
}

/// Summary CSV: counts as comment lines, then per-slot statistics.
pub fn report_csv(ds: &Dataset, report: &GenerationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# hours={} samples={} dropped={}", report.hours, ds.len(), report.dropped.len());
    let _ = writeln!(out, "# train={} test={}", ds.train.len(), ds.test.len());
    out.push_str("kind,slot,min,max,mean,std\n");
    for (kind, names, data) in [("x", &ds.x_names, &ds.x), ("y", &ds.y_names, &ds.y)] {
        let cols = names.len();
        let n = ds.len();
        for (c, name) in names.iter().enumerate() {
            let col = (0..n).map(|r| data[r * cols + c]);
            let (mut lo, mut hi, mut sum, mut sq) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0.0);
            for v in col {
                lo = lo.min(v);
                hi = hi.max(v);
                sum += v;
                sq += v * v;
            }
            let mean = sum / n.max(1) as f64;
            let std = (sq / n.max(1) as f64 - mean * mean).max(0.0).sqrt();
            let _ = writeln!(out, "{kind},{name},{lo},{hi},{mean},{std}");
        }
    }
    out
}
