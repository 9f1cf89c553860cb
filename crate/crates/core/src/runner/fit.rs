//! Power-law fits over a finished sweep directory (`qic fit`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::output::{read_json, write_json, Table};
use super::sweep::{Status, ERGODIZE_CSV, LYAPUNOV_CSV, MANIFEST_JSON, STABILITY_CSV};
use super::RunManifest;
use crate::analysis::{
    family_average, loglog_fit, ratio_curve, ratio_exponent, AverageMode, NetworkClass, PowerLawFit, RatioScale,
    ScalingSeries, SeriesLabel, TimescaleKind,
};
use crate::error::{Error, Result};

pub const FIT_REPORT_JSON: &str = "fit_report.json";

/// A series together with its log-log fit, or the reason it has none.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesFit {
    pub series: ScalingSeries<f64>,
    pub fit: Option<PowerLawFit<f64>>,
    pub error: Option<String>,
    pub inversions: usize,
}

impl SeriesFit {
    pub fn new(series: ScalingSeries<f64>) -> Self {
        let (fit, error) = match loglog_fit(&series) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        SeriesFit {
            inversions: series.inversions(),
            series,
            fit,
            error,
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorFits {
    pub operator: String,
    pub t_lambda: SeriesFit,
    pub te_plus: SeriesFit,
    pub te_minus: SeriesFit,
    /// `T_E±/T_λ` against `T_λ/T*_λ`.
    pub ratio_plus: RatioFit,
    pub ratio_minus: RatioFit,
}

impl OperatorFits {
    fn new(
        operator: String,
        tl: ScalingSeries<f64>,
        tp: ScalingSeries<f64>,
        tm: ScalingSeries<f64>,
        cutoff: f64,
    ) -> Self {
        OperatorFits {
            operator,
            ratio_plus: RatioFit::new(&tp, &tl, cutoff),
            ratio_minus: RatioFit::new(&tm, &tl, cutoff),
            t_lambda: SeriesFit::new(tl),
            te_plus: SeriesFit::new(tp),
            te_minus: SeriesFit::new(tm),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioFit {
    pub curve: ScalingSeries<f64>,
    pub cutoff: f64,
    pub log_linear: Option<PowerLawFit<f64>>,
    pub log_log: Option<PowerLawFit<f64>>,
    pub error: Option<String>,
}

impl RatioFit {
    fn new(te: &ScalingSeries<f64>, tl: &ScalingSeries<f64>, cutoff: f64) -> Self {
        let curve = match ratio_curve(te, tl) {
            Ok(c) => c,
            Err(e) => {
                return RatioFit {
                    curve: ScalingSeries::with_divergent(Vec::new(), Vec::new(), te.label.clone()).unwrap(),
                    cutoff,
                    log_linear: None,
                    log_log: None,
                    error: Some(e.to_string()),
                }
            }
        };
        let cut = (cutoff > 0.0).then_some(cutoff);
        let lin = ratio_exponent(&curve, cut, RatioScale::LogLinear);
        let log = ratio_exponent(&curve, cut, RatioScale::LogLog);
        RatioFit {
            error: lin.as_ref().err().map(|e| e.to_string()),
            log_linear: lin.ok(),
            log_log: log.ok(),
            curve,
            cutoff,
        }
    }
}

/// Per-point diagnostics pooled over operators and seeds.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub x: f64,
    /// Mean of `σ²/μ²` over both signs, operators and seeds.
    pub relative_variance: f64,
    /// Largest relative change of `T_E±` when the crossing count doubles.
    pub max_stability_change: Option<f64>,
    pub statuses: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub class: NetworkClass,
    pub parameter: String,
    pub average: AverageMode,
    /// Grid values left out because a log axis cannot hold them (`x ≤ 0`).
    pub excluded_x: Vec<f64>,
    pub operators: Vec<OperatorFits>,
    pub family: OperatorFits,
    pub points: Vec<PointDiagnostics>,
}

fn parse_status(t: &Table, row: usize, col: usize) -> Result<Status> {
    Status::parse(t.str(row, col))
}

fn operator_name(class: NetworkClass, index: usize) -> String {
    match class {
        NetworkClass::Srn => format!("site={index}"),
        NetworkClass::Lrn => format!("k={index}"),
    }
}

/// Reads `lyapunov.csv`, `ergodize.csv` (and `stability.csv` when present)
/// from `dir`, fits every series and writes `fit_report.json` there.
pub fn fit_run(dir: &Path) -> Result<FitReport> {
    let report = analyse_run(dir)?;
    write_json(&dir.join(FIT_REPORT_JSON), &report)?;
    Ok(report)
}

/// Same as [`fit_run`] without writing anything.
pub fn analyse_run(dir: &Path) -> Result<FitReport> {
    let manifest_path = dir.join(MANIFEST_JSON);
    if !manifest_path.is_file() {
        return Err(Error::MissingDependency {
            what: format!("{} has no {MANIFEST_JSON}", dir.display()),
            hint: "run `qic sweep --config <file>` first".into(),
        });
    }
    let manifest: RunManifest = read_json(&manifest_path)?;
    fit_tables(&manifest, dir)
}

/// Per-operator values keyed by (operator index, grid index).
type Cell = BTreeMap<(usize, usize), Vec<Option<f64>>>;

fn fit_tables(manifest: &RunManifest, dir: &Path) -> Result<FitReport> {
    let class = manifest.class;
    let cutoff = manifest.config.analysis.ratio_cutoff;
    let average = manifest.config.analysis.average;
    let grid = &manifest.grid;
    let grid_index = |x: f64| -> Result<usize> {
        grid.iter()
            .position(|&g| (g - x).abs() <= 1e-12 * g.abs().max(1e-300))
            .ok_or_else(|| Error::Alignment(format!("value {x} is not on the sweep grid")))
    };

    let mut statuses: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new(); grid.len()];
    let mut tl: Cell = BTreeMap::new();
    let lyap = Table::read(&dir.join(LYAPUNOV_CSV))?;
    let (cx, ck, ct, cs) = (
        lyap.column("g_or_h")?,
        lyap.column("k_or_site")?,
        lyap.column("T_lambda")?,
        lyap.column("status")?,
    );
    for r in 0..lyap.rows.len() {
        let i = grid_index(lyap.f64(r, cx)?)?;
        let status = parse_status(&lyap, r, cs)?;
        *statuses[i].entry(format!("lanczos_{}", status.as_str())).or_default() += 1;
        let v = (status == Status::Ok).then(|| lyap.f64(r, ct)).transpose()?;
        tl.entry((lyap.usize(r, ck)?, i)).or_default().push(v);
    }

    let mut te_p: Cell = BTreeMap::new();
    let mut te_m: Cell = BTreeMap::new();
    let mut relvar: Vec<Vec<f64>> = vec![Vec::new(); grid.len()];
    let erg = Table::read(&dir.join(ERGODIZE_CSV))?;
    let col = |n| erg.column(n);
    let (ex, ek, es) = (col("g_or_h")?, col("k_or_site")?, col("status")?);
    let (mp, mm, vp, vm) = (col("mu_plus")?, col("mu_minus")?, col("var_plus")?, col("var_minus")?);
    for r in 0..erg.rows.len() {
        let i = grid_index(erg.f64(r, ex)?)?;
        let k = erg.usize(r, ek)?;
        let status = parse_status(&erg, r, es)?;
        *statuses[i].entry(format!("ergodize_{}", status.as_str())).or_default() += 1;
        let ok = status == Status::Ok;
        let stat = |mu_c, var_c| -> Result<Option<(f64, f64)>> {
            Ok(if ok {
                Some((erg.f64(r, mu_c)?, erg.f64(r, var_c)?))
            } else {
                None
            })
        };
        let plus = stat(mp, vp)?;
        let minus = stat(mm, vm)?;
        te_p.entry((k, i)).or_default().push(plus.map(|(m, v)| v / m));
        te_m.entry((k, i)).or_default().push(minus.map(|(m, v)| v / m));
        for (m, v) in plus.into_iter().chain(minus) {
            relvar[i].push(v / (m * m));
        }
    }

    let mut stab: Vec<Option<f64>> = vec![None; grid.len()];
    let stab_path = dir.join(STABILITY_CSV);
    if stab_path.is_file() {
        let t = Table::read(&stab_path)?;
        let (sx, sp, sm) = (
            t.column("g_or_h")?,
            t.column("rel_change_plus")?,
            t.column("rel_change_minus")?,
        );
        for r in 0..t.rows.len() {
            let i = grid_index(t.f64(r, sx)?)?;
            let c = t.f64(r, sp)?.max(t.f64(r, sm)?);
            let c = if c.is_nan() { f64::INFINITY } else { c };
            stab[i] = Some(stab[i].map_or(c, |s: f64| s.max(c)));
        }
    }

    // Log axes need x > 0.
    let keep: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] > 0.0).collect();
    let excluded_x = (0..grid.len()).filter(|&i| grid[i] <= 0.0).map(|i| grid[i]).collect();
    let xs: Vec<f64> = keep.iter().map(|&i| grid[i]).collect();

    // Seed average: any seed without a value makes the point divergent.
    let mean = |vals: Option<&Vec<Option<f64>>>| -> Option<f64> {
        let vals = vals?;
        let v: Option<Vec<f64>> = vals.iter().copied().collect();
        let v = v?;
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mut indices: Vec<usize> = tl.keys().map(|&(k, _)| k).collect();
    indices.dedup();
    let series = |cell: &Cell, k: usize, kind| {
        let y = keep.iter().map(|&i| mean(cell.get(&(k, i)))).collect();
        ScalingSeries::with_divergent(xs.clone(), y, SeriesLabel::new(class, operator_name(class, k), kind))
    };
    let mut operators = Vec::new();
    let mut raw: [Vec<ScalingSeries<f64>>; 3] = Default::default();
    for &k in &indices {
        let s = [
            series(&tl, k, TimescaleKind::Lyapunov)?,
            series(&te_p, k, TimescaleKind::ErgodizationPlus)?,
            series(&te_m, k, TimescaleKind::ErgodizationMinus)?,
        ];
        for (dst, src) in raw.iter_mut().zip(&s) {
            dst.push(src.clone());
        }
        let [a, b, c] = s;
        operators.push(OperatorFits::new(operator_name(class, k), a, b, c, cutoff));
    }
    if operators.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let [f_tl, f_tp, f_tm] = [
        family_average(&raw[0], average)?,
        family_average(&raw[1], average)?,
        family_average(&raw[2], average)?,
    ];
    let family = OperatorFits::new("family".into(), f_tl, f_tp, f_tm, cutoff);
    let points = (0..grid.len())
        .map(|i| PointDiagnostics {
            x: grid[i],
            relative_variance: if relvar[i].is_empty() {
                f64::NAN
            } else {
                relvar[i].iter().sum::<f64>() / relvar[i].len() as f64
            },
            max_stability_change: stab[i],
            statuses: statuses[i].clone(),
        })
        .collect();
    Ok(FitReport {
        class,
        parameter: manifest.parameter.clone(),
        average,
        excluded_x,
        operators,
        family,
        points,
    })
}
