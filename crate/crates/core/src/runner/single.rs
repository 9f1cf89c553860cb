//! Single-point commands: `qic lanczos` and `qic ergodize` at the fixed
//! `model.g`, `model.h` of a configuration.

use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use super::output::{ensure_dir, num, write_csv, write_json};
use super::sweep::{ergodize_record, ergodize_row, lanczos_record, Status, ERGODIZE_HEADER};
use crate::ergodization::diagonalize;
use crate::error::{Error, Result};
use crate::krylov::{lanczos, propagate_wave, uniform_grid};
use crate::model::{build_hamiltonian, build_observable, ObservableKind, ObservableSpec};

/// Time points used to locate `τ*` from `K(t)`.
const WAVE_POINTS: usize = 2001;
/// The wave is followed up to `WAVE_SPAN / b_1`.
const WAVE_SPAN: f64 = 50.0;

#[derive(Clone, Debug, Serialize)]
pub struct LanczosSidecar {
    pub observable: ObservableKind,
    pub g: f64,
    pub h: f64,
    pub n_sites: usize,
    pub alpha: Option<f64>,
    #[serde(rename = "T_lambda")]
    pub t_lambda: Option<f64>,
    pub window: Option<[usize; 2]>,
    pub residual: Option<f64>,
    pub krylov_dim: usize,
    pub exhausted: bool,
    /// Time at which `K(t)` reaches half the Krylov dimension.
    pub tau_star: Option<f64>,
    pub status: Status,
    pub message: Option<String>,
}

fn stem(kind: ObservableKind) -> String {
    match kind {
        ObservableKind::SrnSum | ObservableKind::Parity => kind.name().to_string(),
        _ => format!("{}_{}", kind.name(), kind.index()),
    }
}

/// Writes `lanczos_<obs>.csv` (`n,b_n`) and a JSON sidecar per observable.
/// With `dump_operator` the Hamiltonian and observables are also written as
/// Pauli-term text. Returns the paths written.
pub fn run_lanczos(cfg: &RunConfig, dump_operator: bool) -> Result<Vec<PathBuf>> {
    let p = cfg.params()?;
    let dir = ensure_dir(&cfg.output.directory)?;
    let mut written = Vec::new();
    let h = build_hamiltonian(&p)?;
    if dump_operator {
        let path = dir.join("hamiltonian.txt");
        std::fs::write(&path, h.to_text())?;
        written.push(path);
    }
    // The fixed-point commands reuse the sweep machinery at x = g or h.
    let x = match cfg.sweep.parameter {
        super::SweepParameter::G => p.g,
        super::SweepParameter::H => p.h,
    };
    let mut failures = Vec::new();
    for kind in cfg.observables()? {
        let o = build_observable(&ObservableSpec::new(kind, p)?)?;
        if dump_operator {
            let path = dir.join(format!("operator_{}.txt", stem(kind)));
            std::fs::write(&path, o.to_text())?;
            written.push(path);
        }
        let rec = lanczos_record(cfg, x, kind);
        let tau_star = match rec.b.first() {
            Some(&b1) if b1 > 0.0 => {
                let res = lanczos(&h, &o, &cfg.lanczos_options())?;
                let t = uniform_grid(0.0, WAVE_SPAN / b1 / (WAVE_POINTS - 1) as f64, WAVE_POINTS);
                propagate_wave(&res, &t).tau_star()
            }
            _ => None,
        };
        let rows: Vec<Vec<String>> = rec
            .b
            .iter()
            .enumerate()
            .map(|(n, &b)| vec![(n + 1).to_string(), num(b)])
            .collect();
        let csv = dir.join(format!("lanczos_{}.csv", stem(kind)));
        write_csv(&csv, &["n", "b_n"], &rows)?;
        let side = LanczosSidecar {
            observable: kind,
            g: p.g,
            h: p.h,
            n_sites: p.n_sites,
            alpha: rec.fit.map(|f| f.alpha),
            t_lambda: rec.fit.map(|f| f.t_lambda),
            window: rec.fit.map(|f| [f.window.0, f.window.1]),
            residual: rec.fit.map(|f| f.residual),
            krylov_dim: rec.krylov_dim,
            exhausted: rec.exhausted,
            tau_star,
            status: rec.status,
            message: rec.message.clone(),
        };
        let json = dir.join(format!("lanczos_{}.json", stem(kind)));
        write_json(&json, &side)?;
        written.push(csv);
        written.push(json);
        if rec.status == Status::Failed {
            failures.push(rec.message.unwrap_or_default());
        }
    }
    if !failures.is_empty() {
        return Err(Error::Numerical(failures.join("; ")));
    }
    Ok(written)
}

/// Writes `ergodize.csv` with one row per observable and seed, including the
/// wall time of each run. Fails with the first non-`ok` status after all rows
/// are written.
pub fn run_ergodize(cfg: &RunConfig) -> Result<PathBuf> {
    let p = cfg.params()?;
    let x = match cfg.sweep.parameter {
        super::SweepParameter::G => p.g,
        super::SweepParameter::H => p.h,
    };
    let start = Instant::now();
    let spec = diagonalize(&build_hamiltonian(&p)?)?;
    let diag_s = start.elapsed().as_secs_f64();
    let mut rows = Vec::new();
    let mut first_error = None;
    for kind in cfg.observables()? {
        for seed in cfg.seeds() {
            let rec = ergodize_record(cfg, x, &spec, kind, seed);
            let mut row = ergodize_row(&rec);
            let status = row.pop().unwrap_or_default();
            row.push(num(rec.runtime_s + diag_s));
            row.push(status);
            if rec.status != Status::Ok && first_error.is_none() {
                first_error = Some((rec.status, rec.message.clone().unwrap_or_default()));
            }
            rows.push(row);
        }
    }
    let dir = ensure_dir(&cfg.output.directory)?;
    let path = dir.join("ergodize.csv");
    let mut header: Vec<&str> = ERGODIZE_HEADER[..ERGODIZE_HEADER.len() - 1].to_vec();
    header.extend(["runtime_s", "status"]);
    write_csv(&path, &header, &rows)?;
    match first_error {
        None => Ok(path),
        Some((status, m)) => Err(Error::Numerical(format!("{}: {m}", status.as_str()))),
    }
}
