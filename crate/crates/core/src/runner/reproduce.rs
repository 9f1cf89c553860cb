//! Plot-ready tables built from finished SRN and LRN sweeps (`qic reproduce`).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::fit::{analyse_run, FitReport, OperatorFits, RatioFit, SeriesFit};
use super::output::{ensure_dir, num, write_csv};
use super::sweep::MANIFEST_JSON;
use crate::analysis::{NetworkClass, PowerLawFit, ScalingSeries};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// `T_λ` against the breaking parameter.
    Fig1,
    /// `T_E±` against the breaking parameter.
    Fig2,
    /// `T_E/T_λ` against `T_λ/T*_λ`.
    Fig4,
    /// Power-law coefficients per operator.
    TablePwlaw,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig4 => "fig4",
            Figure::TablePwlaw => "table_pwlaw",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fig1" => Figure::Fig1,
            "fig2" => Figure::Fig2,
            "fig4" => Figure::Fig4,
            "table_pwlaw" => Figure::TablePwlaw,
            other => {
                return Err(Error::Config(format!(
                    "unknown report {other:?} (fig1|fig2|fig4|table_pwlaw)"
                )))
            }
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReproduceOptions {
    /// Output of `qic sweep --config configs/srn.conf`.
    pub srn_dir: PathBuf,
    /// Output of `qic sweep --config configs/lrn.conf`.
    pub lrn_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            srn_dir: PathBuf::from("runs/srn"),
            lrn_dir: PathBuf::from("runs/lrn"),
            out_dir: PathBuf::from("runs/reproduce"),
        }
    }
}

fn load(dir: &Path, config: &str) -> Result<FitReport> {
    if !dir.join(MANIFEST_JSON).is_file() {
        return Err(Error::MissingDependency {
            what: format!("sweep data in {}", dir.display()),
            hint: format!("run `qic sweep --config {config}` first"),
        });
    }
    analyse_run(dir)
}

const SERIES_HEADER: [&str; 6] = ["series", "class", "operator", "x", "y", "divergent"];
const FIT_HEADER: [&str; 9] = [
    "series",
    "class",
    "operator",
    "slope",
    "intercept",
    "slope_stderr",
    "intercept_stderr",
    "n_points",
    "n_excluded",
];

fn series_rows(name: &str, s: &ScalingSeries<f64>, out: &mut Vec<Vec<String>>) {
    for i in 0..s.len() {
        out.push(vec![
            name.into(),
            s.label.class.to_string(),
            s.label.operator.clone(),
            num(s.x[i]),
            num(s.y[i]),
            s.divergent[i].to_string(),
        ]);
    }
}

fn fit_row(name: &str, class: NetworkClass, operator: &str, fit: Option<&PowerLawFit<f64>>) -> Vec<String> {
    let mut row = vec![name.to_string(), class.to_string(), operator.to_string()];
    match fit {
        Some(f) => row.extend([
            num(f.slope),
            num(f.intercept),
            num(f.slope_stderr),
            num(f.intercept_stderr),
            f.n_points.to_string(),
            f.n_excluded.to_string(),
        ]),
        None => row.extend(["nan", "nan", "nan", "nan", "0", ""].map(String::from)),
    }
    row
}

fn all_operators(r: &FitReport) -> impl Iterator<Item = &OperatorFits> {
    r.operators.iter().chain(std::iter::once(&r.family))
}

/// Writes the report's files into `opts.out_dir` and returns their paths.
pub fn reproduce(what: Figure, opts: &ReproduceOptions) -> Result<Vec<PathBuf>> {
    let srn = load(&opts.srn_dir, "configs/srn.conf")?;
    let lrn = load(&opts.lrn_dir, "configs/lrn.conf")?;
    let dir = ensure_dir(&opts.out_dir)?;
    let reports = [&srn, &lrn];
    let mut data = Vec::new();
    let mut fits = Vec::new();
    let push_series = |name: &str, sf: &SeriesFit, data: &mut Vec<Vec<String>>, fits: &mut Vec<Vec<String>>| {
        series_rows(name, &sf.series, data);
        fits.push(fit_row(
            name,
            sf.series.label.class,
            &sf.series.label.operator,
            sf.fit.as_ref(),
        ));
    };
    match what {
        Figure::Fig1 => {
            for r in reports {
                for op in all_operators(r) {
                    push_series("T_lambda", &op.t_lambda, &mut data, &mut fits);
                }
            }
        }
        Figure::Fig2 => {
            for r in reports {
                for op in all_operators(r) {
                    push_series("TE_plus", &op.te_plus, &mut data, &mut fits);
                    push_series("TE_minus", &op.te_minus, &mut data, &mut fits);
                }
            }
        }
        Figure::Fig4 => {
            // Log-linear slopes; the log-log slope is listed as a second series.
            let mut ratio = |name: &str, rf: &RatioFit, class: NetworkClass, op: &str| {
                series_rows(name, &rf.curve, &mut data);
                fits.push(fit_row(name, class, op, rf.log_linear.as_ref()));
                fits.push(fit_row(&format!("{name}_loglog"), class, op, rf.log_log.as_ref()));
            };
            for r in reports {
                for op in all_operators(r) {
                    ratio("TE_plus_over_TL", &op.ratio_plus, r.class, &op.operator);
                    ratio("TE_minus_over_TL", &op.ratio_minus, r.class, &op.operator);
                }
            }
        }
        Figure::TablePwlaw => return table(&srn, &lrn, &dir),
    }
    let data_path = dir.join(format!("{what}.csv"));
    let fit_path = dir.join(format!("{what}_fits.csv"));
    write_csv(&data_path, &SERIES_HEADER, &data)?;
    write_csv(&fit_path, &FIT_HEADER, &fits)?;
    Ok(vec![data_path, fit_path])
}

/// One row per LRN `I^(k)` and one for the SRN family:
/// `log₁₀ T = α log₁₀ x + δ` for `T_E+` and `T_λ`.
fn table(srn: &FitReport, lrn: &FitReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let coeffs = |f: Option<PowerLawFit<f64>>| match f {
        Some(f) => [num(f.slope), num(f.intercept / std::f64::consts::LN_10)],
        None => ["nan".into(), "nan".into()],
    };
    let mut rows = Vec::new();
    let mut row = |class: NetworkClass, op: &OperatorFits| {
        let [ae, de] = coeffs(op.te_plus.fit);
        let [al, dl] = coeffs(op.t_lambda.fit);
        rows.push(vec![class.to_string(), op.operator.clone(), ae, de, al, dl]);
    };
    for op in &lrn.operators {
        row(NetworkClass::Lrn, op);
    }
    row(NetworkClass::Srn, &srn.family);
    let path = dir.join("table_pwlaw.csv");
    write_csv(
        &path,
        &[
            "class",
            "operator",
            "alpha_E_plus",
            "delta_E_plus",
            "alpha_lambda",
            "delta_lambda",
        ],
        &rows,
    )?;
    Ok(vec![path])
}
