//! Experiment sweeps: corruption, width, and depth grids with per-run
//! capacity reports and deterministic CSV emission.
//!
//! Grid points and repeats are independent runs; with the `parallel` feature
//! they are dispatched to a bounded rayon pool (size from `PATHCAP_WORKERS`
//! or an explicit override) and merged back in grid order, never completion
//! order. Without the feature the same jobs run sequentially.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{gaussian_blobs, Dataset};
use crate::error::{Error, Result};
use crate::measures::{BoundParams, CapacityReport};
use crate::network::NetworkSpec;
use crate::pathspace::enumerate_basis_paths;
use crate::trainer::{corrupt_labels, init_weights, train, TrainConfig};

/// Environment variable bounding the sweep worker pool.
pub const WORKERS_ENV: &str = "PATHCAP_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Grid over label-corruption fractions at fixed topology.
    Corruption,
    /// Grid over hidden widths H.
    Width,
    /// Grid over depths L.
    Depth,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Corruption => "corruption",
            SweepKind::Width => "width",
            SweepKind::Depth => "depth",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corruption" => Ok(SweepKind::Corruption),
            "width" => Ok(SweepKind::Width),
            "depth" => Ok(SweepKind::Depth),
            other => Err(Error::Domain(format!("unknown sweep kind '{}'", other))),
        }
    }
}

/// Synthetic task parameters shared by all runs in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub n_train: usize,
    pub n_test: usize,
    pub input_dim: usize,
    pub num_classes: usize,
    pub separation: f64,
    pub noise: f64,
    pub data_seed: u64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        SyntheticTask {
            n_train: 2000,
            n_test: 1000,
            input_dim: 16,
            num_classes: 2,
            separation: 1.5,
            noise: 1.0,
            data_seed: 1,
        }
    }
}

impl SyntheticTask {
    pub fn generate(&self) -> (Dataset, Dataset) {
        let all = gaussian_blobs(
            self.n_train + self.n_test,
            self.input_dim,
            self.num_classes,
            self.separation,
            self.noise,
            self.data_seed,
        );
        let train = all.take(self.n_train);
        let test_features: Vec<f64> = (self.n_train..all.len())
            .flat_map(|i| all.features_of(i).iter().copied())
            .collect();
        let test_labels: Vec<usize> = (self.n_train..all.len()).map(|i| all.label_of(i)).collect();
        let test =
            Dataset::new(test_features, test_labels, self.input_dim, self.num_classes).expect("valid split");
        (train, test)
    }
}

/// One full sweep: kind, grid, base configuration, and repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    /// Corruption fractions, widths, or depths depending on `kind`.
    pub grid: Vec<f64>,
    pub repeats: usize,
    pub base: TrainConfig,
    /// Hidden width when not swept.
    pub hidden_width: usize,
    /// Depth when not swept.
    pub depth: usize,
    pub task: SyntheticTask,
    pub bound: BoundParams,
    /// Worker-pool override; falls back to PATHCAP_WORKERS, then to the
    /// rayon default.
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Domain("sweep grid must be nonempty".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Domain("repeats must be >= 1".into()));
        }
        self.base.validate()
    }
}

/// One result row of the sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub grid_value: f64,
    /// Repeat index, or None for an aggregate (mean) row.
    pub repeat: Option<usize>,
    pub seed: Option<u64>,
    pub train_err: f64,
    pub test_err: f64,
    pub gap: f64,
    pub phi: f64,
    pub omega: f64,
    pub l2: f64,
    pub spectral: f64,
    pub phi_measure: f64,
    pub bound: f64,
}

/// Column order of the sweep CSV.
pub const SWEEP_CSV_HEADER: &str =
    "kind,grid_value,repeat,seed,train_err,test_err,gap,phi,omega,l2,spectral,phi_measure,bound";

impl SweepRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.kind.as_str(),
            self.grid_value,
            self.repeat.map(|r| r.to_string()).unwrap_or_else(|| "mean".to_string()),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.train_err,
            self.test_err,
            self.gap,
            self.phi,
            self.omega,
            self.l2,
            self.spectral,
            self.phi_measure,
            self.bound,
        )
    }
}

fn run_one(spec: &SweepSpec, grid_idx: usize, repeat: usize) -> Result<SweepRow> {
    let grid_value = spec.grid[grid_idx];
    let (mut hidden, mut depth) = (spec.hidden_width, spec.depth);
    let mut corruption = 0.0;
    match spec.kind {
        SweepKind::Corruption => corruption = grid_value,
        SweepKind::Width => hidden = grid_value as usize,
        SweepKind::Depth => depth = grid_value as usize,
    }

    let (mut train_set, test_set) = spec.task.generate();
    // same seed across grid points for a given repeat: paired comparisons
    let run_seed = spec.base.seed.wrapping_add(repeat as u64);
    if corruption > 0.0 {
        train_set = corrupt_labels(&train_set, corruption, run_seed.wrapping_add(0x5eed))?;
    }

    let net_spec = NetworkSpec::new(depth, spec.task.input_dim, hidden, spec.task.num_classes)?;
    let net = init_weights(&net_spec, run_seed);
    let cfg = TrainConfig { seed: run_seed, ..spec.base };
    let (trained, record) = train(&net, &train_set, Some(&test_set), &cfg)?;
    let last = record.final_stats().expect("at least one epoch");

    let basis = enumerate_basis_paths(&net_spec);
    let params = BoundParams {
        n: train_set.len(),
        x_norm_max: train_set.max_feature_norm(),
        ..spec.bound
    };
    let report = CapacityReport::compute(&trained, &basis, &params)?;

    Ok(SweepRow {
        kind: spec.kind,
        grid_value,
        repeat: Some(repeat),
        seed: Some(run_seed),
        train_err: last.train_error,
        test_err: last.test_error,
        gap: last.gap,
        phi: report.bp_norm,
        omega: report.path_norm,
        l2: report.l2_weight_norm,
        spectral: report.spectral_proxy,
        phi_measure: report.bp_measure,
        bound: report.theorem2_bound,
    })
}

fn worker_count(spec: &SweepSpec) -> Option<usize> {
    spec.workers.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
}

#[cfg(feature = "parallel")]
fn run_jobs(spec: &SweepSpec, jobs: &[(usize, usize)]) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = worker_count(spec) {
        builder = builder.num_threads(workers);
    }
    let pool = builder.build().map_err(|e| Error::Domain(format!("worker pool: {}", e)))?;
    pool.install(|| jobs.par_iter().map(|&(g, r)| run_one(spec, g, r)).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(spec: &SweepSpec, jobs: &[(usize, usize)]) -> Result<Vec<SweepRow>> {
    let _ = worker_count(spec);
    jobs.iter().map(|&(g, r)| run_one(spec, g, r)).collect()
}

/// Run the full sweep and return per-run rows plus one aggregate (mean) row
/// per grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> =
        (0..spec.grid.len()).flat_map(|g| (0..spec.repeats).map(move |r| (g, r))).collect();
    let rows = run_jobs(spec, &jobs)?;

    let mut out = Vec::with_capacity(rows.len() + spec.grid.len());
    for (g, chunk) in rows.chunks(spec.repeats).enumerate() {
        out.extend(chunk.iter().cloned());
        let n = chunk.len() as f64;
        let mean = |f: fn(&SweepRow) -> f64| chunk.iter().map(f).sum::<f64>() / n;
        out.push(SweepRow {
            kind: spec.kind,
            grid_value: spec.grid[g],
            repeat: None,
            seed: None,
            train_err: mean(|r| r.train_err),
            test_err: mean(|r| r.test_err),
            gap: mean(|r| r.gap),
            phi: mean(|r| r.phi),
            omega: mean(|r| r.omega),
            l2: mean(|r| r.l2),
            spectral: mean(|r| r.spectral),
            phi_measure: mean(|r| r.phi_measure),
            bound: mean(|r| r.bound),
        });
    }
    Ok(out)
}

/// Write sweep rows as CSV with the declared column order.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> Result<()> {
    writeln!(w, "{}", SWEEP_CSV_HEADER)?;
    for row in rows {
        writeln!(w, "{}", row.to_csv_line())?;
    }
    Ok(())
}

/// Spearman rank correlation, with midranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = midranks(xs);
    let ry = midranks(ys);
    pearson(&rx, &ry)
}

fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}
