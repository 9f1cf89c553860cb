//! Parameter sweeps: Lanczos fits and excursion statistics at every grid point
//! for every observable, run on a bounded worker pool.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::output::{ensure_dir, inventory, num, write_csv, write_json};
use crate::ergodization::{
    build_fluctuation, diagonalize, find_crossings_until, random_state, ExcursionStats, SpectrumData, Stability,
};
use crate::error::{Error, Result};
use crate::krylov::{default_window, fit_alpha, lanczos, LyapunovFit};
use crate::model::{build_hamiltonian, build_observable, ObservableKind, ObservableSpec};

pub const LANCZOS_CSV: &str = "lanczos.csv";
pub const LYAPUNOV_CSV: &str = "lyapunov.csv";
pub const ERGODIZE_CSV: &str = "ergodize.csv";
pub const STABILITY_CSV: &str = "stability.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Outcome class of one computation. Failures are recorded, never fatal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// `b_n` does not grow (conserved operator or plateau-only sequence).
    NoGrowth,
    /// `f ≡ 0`: the observable is conserved or the spectrum fully degenerate.
    NoDynamics,
    /// The crossing budget ran out.
    Timeout,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NoGrowth => "no_growth",
            Status::NoDynamics => "no_dynamics",
            Status::Timeout => "timeout",
            Status::Failed => "failed",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ok" => Status::Ok,
            "no_growth" => Status::NoGrowth,
            "no_dynamics" => Status::NoDynamics,
            "timeout" => Status::Timeout,
            "failed" => Status::Failed,
            other => return Err(Error::Parse(format!("unknown status {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LanczosRecord {
    pub x: f64,
    pub observable: ObservableKind,
    pub b: Vec<f64>,
    pub krylov_dim: usize,
    pub exhausted: bool,
    pub fit: Option<LyapunovFit<f64>>,
    pub status: Status,
    pub message: Option<String>,
    #[serde(skip)]
    pub runtime_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionSummary {
    pub n_crossings: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub var_plus: f64,
    pub var_minus: f64,
    pub te_plus: f64,
    pub te_minus: f64,
}

impl ExcursionSummary {
    pub fn from_stats(s: &ExcursionStats<f64>) -> Self {
        ExcursionSummary {
            n_crossings: s.crossings.len(),
            mu_plus: s.mu_plus,
            mu_minus: s.mu_minus,
            var_plus: s.var_plus,
            var_minus: s.var_minus,
            te_plus: s.te_plus,
            te_minus: s.te_minus,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErgodizeRecord {
    pub x: f64,
    pub observable: ObservableKind,
    pub seed: u64,
    pub t0: f64,
    pub summary: Option<ExcursionSummary>,
    pub stability: Option<Stability<f64>>,
    pub status: Status,
    pub message: Option<String>,
    #[serde(skip)]
    pub runtime_s: f64,
}

fn classify_lanczos(e: &Error) -> Status {
    match e {
        Error::NoGrowth { .. } | Error::InsufficientData { .. } => Status::NoGrowth,
        _ => Status::Failed,
    }
}

/// Lanczos recursion plus the `b_n ≈ α n` fit for one observable.
pub fn lanczos_record(cfg: &RunConfig, x: f64, kind: ObservableKind) -> LanczosRecord {
    let start = Instant::now();
    let mut rec = LanczosRecord {
        x,
        observable: kind,
        b: Vec::new(),
        krylov_dim: 0,
        exhausted: false,
        fit: None,
        status: Status::Ok,
        message: None,
        runtime_s: 0.0,
    };
    let run = || -> Result<_> {
        let p = cfg.params_at(x)?;
        let h = build_hamiltonian(&p)?;
        let o = build_observable(&ObservableSpec::new(kind, p)?)?;
        lanczos(&h, &o, &cfg.lanczos_options())
    };
    match run() {
        Ok(res) => {
            rec.b = res.b.clone();
            rec.krylov_dim = res.krylov_dim;
            rec.exhausted = res.exhausted;
            let window = match cfg.krylov.window {
                Some([lo, hi]) => (lo, hi.min(res.b.len())),
                None => default_window(&res.b),
            };
            match fit_alpha(&res, window) {
                Ok(fit) => rec.fit = Some(fit),
                Err(e) => {
                    rec.status = classify_lanczos(&e);
                    rec.message = Some(e.to_string());
                }
            }
        }
        Err(e) => {
            rec.status = Status::Failed;
            rec.message = Some(e.to_string());
        }
    }
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec
}

/// Excursion statistics for one observable and one seed. With the stability
/// diagnostic on, `2·n_target` crossings are collected and the summary is
/// taken from the first `n_target`.
pub fn ergodize_record(
    cfg: &RunConfig,
    x: f64,
    spec: &SpectrumData<f64>,
    kind: ObservableKind,
    seed: u64,
) -> ErgodizeRecord {
    let start = Instant::now();
    let mut rec = ErgodizeRecord {
        x,
        observable: kind,
        seed,
        t0: f64::NAN,
        summary: None,
        stability: None,
        status: Status::Ok,
        message: None,
        runtime_s: 0.0,
    };
    let e = &cfg.ergodize;
    let result = (|| -> Result<()> {
        let p = cfg.params_at(x)?;
        let o = build_observable(&ObservableSpec::new(kind, p)?)?;
        let state = random_state(seed, spec.dim(), e.state)?;
        let series = build_fluctuation(spec, &state, &o)?;
        rec.t0 = series.sample_step;
        let n_scan = if e.stability { 2 * e.n_target } else { e.n_target };
        let t_max = e.max_steps * series.sample_step;
        let stats = find_crossings_until(&series, n_scan, 0.0, t_max)?;
        let base = stats.prefix(e.n_target);
        rec.summary = Some(ExcursionSummary::from_stats(&base));
        if e.stability {
            rec.stability = Some(Stability::from_doubled(&stats));
        }
        Ok(())
    })();
    if let Err(err) = result {
        rec.status = match &err {
            Error::NoDynamics(_) => Status::NoDynamics,
            Error::Timeout { .. } => Status::Timeout,
            _ => Status::Failed,
        };
        if let Error::Timeout { partial_crossings, .. } = &err {
            rec.summary = Some(ExcursionSummary {
                n_crossings: partial_crossings.len(),
                mu_plus: f64::NAN,
                mu_minus: f64::NAN,
                var_plus: f64::NAN,
                var_minus: f64::NAN,
                te_plus: f64::NAN,
                te_minus: f64::NAN,
            });
        }
        rec.message = Some(err.to_string());
    }
    rec.runtime_s = start.elapsed().as_secs_f64();
    rec
}

/// Everything computed for one grid point and observable.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaskResult {
    pub lanczos: LanczosRecord,
    pub ergodize: Vec<ErgodizeRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointEntry {
    pub x: f64,
    pub observable: ObservableKind,
    pub lanczos_status: Status,
    pub lanczos_message: Option<String>,
    pub lanczos_runtime_s: f64,
    pub ergodize: Vec<SeedEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub status: Status,
    pub message: Option<String>,
    pub runtime_s: f64,
}

/// Provenance of a sweep: configuration, seeds, statuses, runtimes and the
/// hash of every file written.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub config: RunConfig,
    pub class: crate::analysis::NetworkClass,
    pub parameter: String,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub state_mode: crate::ergodization::StateMode,
    pub jobs: usize,
    pub total_runtime_s: f64,
    pub points: Vec<PointEntry>,
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn output_dir(&self) -> PathBuf {
        self.config.output.directory.clone()
    }
}

/// Runs every (grid point, observable) pair on `jobs` workers and writes the
/// tables and manifest to `cfg.output.directory`. Row order follows the grid
/// and observable order, independent of `jobs`.
pub fn run_sweep(cfg: &RunConfig, jobs: usize) -> Result<RunManifest> {
    let start = Instant::now();
    let grid = cfg.grid()?;
    let kinds = cfg.observables()?;
    let seeds = cfg.seeds();
    let jobs = jobs.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let results: Vec<TaskResult> = pool.install(|| {
        let spectra: Vec<Result<SpectrumData<f64>>> = grid
            .par_iter()
            .map(|&x| diagonalize(&build_hamiltonian(&cfg.params_at(x)?)?))
            .collect();
        let tasks: Vec<(usize, ObservableKind)> = (0..grid.len())
            .flat_map(|i| kinds.iter().map(move |&k| (i, k)))
            .collect();
        tasks
            .par_iter()
            .map(|&(i, kind)| {
                let x = grid[i];
                let lanczos = lanczos_record(cfg, x, kind);
                let ergodize = seeds
                    .iter()
                    .map(|&seed| match &spectra[i] {
                        Ok(spec) => ergodize_record(cfg, x, spec, kind, seed),
                        Err(e) => ErgodizeRecord {
                            x,
                            observable: kind,
                            seed,
                            t0: f64::NAN,
                            summary: None,
                            stability: None,
                            status: Status::Failed,
                            message: Some(e.to_string()),
                            runtime_s: 0.0,
                        },
                    })
                    .collect();
                TaskResult { lanczos, ergodize }
            })
            .collect()
    });

    let dir = ensure_dir(&cfg.output.directory)?;
    let files = write_tables(cfg, &dir, &results)?;
    let points = results
        .iter()
        .map(|r| PointEntry {
            x: r.lanczos.x,
            observable: r.lanczos.observable,
            lanczos_status: r.lanczos.status,
            lanczos_message: r.lanczos.message.clone(),
            lanczos_runtime_s: r.lanczos.runtime_s,
            ergodize: r
                .ergodize
                .iter()
                .map(|e| SeedEntry {
                    seed: e.seed,
                    status: e.status,
                    message: e.message.clone(),
                    runtime_s: e.runtime_s,
                })
                .collect(),
        })
        .collect();
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        class: cfg.sweep.parameter.class(),
        parameter: cfg.sweep.parameter.name().to_string(),
        grid,
        seeds,
        state_mode: cfg.ergodize.state,
        jobs,
        total_runtime_s: start.elapsed().as_secs_f64(),
        points,
        files: inventory(&dir, &files)?,
    };
    write_json(&dir.join(MANIFEST_JSON), &manifest)?;
    Ok(manifest)
}

pub const LYAPUNOV_HEADER: [&str; 9] = [
    "g_or_h",
    "k_or_site",
    "alpha",
    "T_lambda",
    "n_min",
    "n_max",
    "residual",
    "krylov_dim",
    "status",
];

pub const ERGODIZE_HEADER: [&str; 12] = [
    "g_or_h",
    "k_or_site",
    "seed",
    "n_crossings",
    "mu_plus",
    "mu_minus",
    "var_plus",
    "var_minus",
    "TE_plus",
    "TE_minus",
    "t0",
    "status",
];

pub const STABILITY_HEADER: [&str; 9] = [
    "g_or_h",
    "k_or_site",
    "seed",
    "TE_plus",
    "TE_minus",
    "TE_plus_doubled",
    "TE_minus_doubled",
    "rel_change_plus",
    "rel_change_minus",
];

pub fn lyapunov_row(r: &LanczosRecord) -> Vec<String> {
    let (alpha, tl, lo, hi, res) = match &r.fit {
        Some(f) => (
            f.alpha,
            f.t_lambda,
            f.window.0.to_string(),
            f.window.1.to_string(),
            f.residual,
        ),
        None => (f64::NAN, f64::NAN, String::new(), String::new(), f64::NAN),
    };
    vec![
        num(r.x),
        r.observable.index().to_string(),
        num(alpha),
        num(tl),
        lo,
        hi,
        num(res),
        r.krylov_dim.to_string(),
        r.status.as_str().into(),
    ]
}

pub fn ergodize_row(r: &ErgodizeRecord) -> Vec<String> {
    let s = r.summary.unwrap_or(ExcursionSummary {
        n_crossings: 0,
        mu_plus: f64::NAN,
        mu_minus: f64::NAN,
        var_plus: f64::NAN,
        var_minus: f64::NAN,
        te_plus: f64::NAN,
        te_minus: f64::NAN,
    });
    vec![
        num(r.x),
        r.observable.index().to_string(),
        r.seed.to_string(),
        s.n_crossings.to_string(),
        num(s.mu_plus),
        num(s.mu_minus),
        num(s.var_plus),
        num(s.var_minus),
        num(s.te_plus),
        num(s.te_minus),
        num(r.t0),
        r.status.as_str().into(),
    ]
}

fn write_tables(cfg: &RunConfig, dir: &Path, results: &[TaskResult]) -> Result<Vec<String>> {
    let mut b_rows = Vec::new();
    let mut fit_rows = Vec::new();
    let mut erg_rows = Vec::new();
    let mut stab_rows = Vec::new();
    for r in results {
        let l = &r.lanczos;
        for (n, b) in l.b.iter().enumerate() {
            b_rows.push(vec![
                num(l.x),
                l.observable.index().to_string(),
                (n + 1).to_string(),
                num(*b),
            ]);
        }
        fit_rows.push(lyapunov_row(l));
        for e in &r.ergodize {
            erg_rows.push(ergodize_row(e));
            if let Some(s) = &e.stability {
                stab_rows.push(vec![
                    num(e.x),
                    e.observable.index().to_string(),
                    e.seed.to_string(),
                    num(s.te_plus),
                    num(s.te_minus),
                    num(s.te_plus_doubled),
                    num(s.te_minus_doubled),
                    num(s.rel_change_plus),
                    num(s.rel_change_minus),
                ]);
            }
        }
    }
    write_csv(&dir.join(LANCZOS_CSV), &["g_or_h", "k_or_site", "n", "b_n"], &b_rows)?;
    write_csv(&dir.join(LYAPUNOV_CSV), &LYAPUNOV_HEADER, &fit_rows)?;
    write_csv(&dir.join(ERGODIZE_CSV), &ERGODIZE_HEADER, &erg_rows)?;
    let mut files = vec![
        LANCZOS_CSV.to_string(),
        LYAPUNOV_CSV.to_string(),
        ERGODIZE_CSV.to_string(),
    ];
    if cfg.ergodize.stability {
        write_csv(&dir.join(STABILITY_CSV), &STABILITY_HEADER, &stab_rows)?;
        files.push(STABILITY_CSV.into());
    }
    if cfg.wants_json() {
        write_json(&dir.join(RESULTS_JSON), &results)?;
        files.push(RESULTS_JSON.into());
    }
    Ok(files)
}
