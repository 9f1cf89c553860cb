//! Power-law fits of timescales against the integrability-breaking parameter,
//! operator-family averages and the `T_E/T_λ` ratio curves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::least_squares_line;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkClass {
    /// Broken by `h`; local conserved quantities (`σ^z` sites).
    Srn,
    /// Broken by `g`; the nonlocal `I^(k)` family.
    Lrn,
}

impl fmt::Display for NetworkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetworkClass::Srn => "SRN",
            NetworkClass::Lrn => "LRN",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimescaleKind {
    Lyapunov,
    ErgodizationPlus,
    ErgodizationMinus,
    /// `T_E/T_λ` against `T_λ/T*_λ`.
    Ratio,
}

impl fmt::Display for TimescaleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimescaleKind::Lyapunov => "T_lambda",
            TimescaleKind::ErgodizationPlus => "TE_plus",
            TimescaleKind::ErgodizationMinus => "TE_minus",
            TimescaleKind::Ratio => "TE_over_TL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesLabel {
    pub class: NetworkClass,
    /// Operator id such as `k=3`, `site=1` or `family`.
    pub operator: String,
    pub kind: TimescaleKind,
}

impl SeriesLabel {
    pub fn new(class: NetworkClass, operator: impl Into<String>, kind: TimescaleKind) -> Self {
        SeriesLabel {
            class,
            operator: operator.into(),
            kind,
        }
    }
}

/// Timescale against control parameter. Points whose timescale diverges (or
/// could not be measured) are kept but flagged, never given a stand-in value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries<T: Real> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub divergent: Vec<bool>,
    pub label: SeriesLabel,
}

impl<T: Real> ScalingSeries<T> {
    /// All points finite. Fails on non-positive `x` or `y`.
    pub fn new(x: Vec<T>, y: Vec<T>, label: SeriesLabel) -> Result<Self> {
        let y: Vec<Option<T>> = y.into_iter().map(Some).collect();
        let s = Self::with_divergent(x, y, label)?;
        if let Some(i) = s.divergent.iter().position(|&d| d) {
            return Err(Error::DegenerateInput(format!(
                "timescale at x = {} is not positive",
                s.x[i]
            )));
        }
        Ok(s)
    }

    /// `None` or a non-positive, non-finite value marks a divergent point.
    pub fn with_divergent(x: Vec<T>, y: Vec<Option<T>>, label: SeriesLabel) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Alignment(format!(
                "{} x values but {} y values",
                x.len(),
                y.len()
            )));
        }
        if let Some(bad) = x.iter().find(|&&v| !(v > T::zero() && v.is_finite())) {
            return Err(Error::DegenerateInput(format!("x must be positive, got {bad}")));
        }
        let divergent = y
            .iter()
            .map(|v| !matches!(v, Some(v) if *v > T::zero() && v.is_finite()))
            .collect::<Vec<_>>();
        let y = y
            .into_iter()
            .zip(&divergent)
            .map(|(v, &d)| if d { T::infinity() } else { v.unwrap() })
            .collect();
        Ok(ScalingSeries { x, y, divergent, label })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Finite points only.
    pub fn finite_points(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.divergent)
            .filter(|(_, &d)| !d)
            .map(|((&x, &y), _)| (x, y))
    }

    /// Counts increases of `y` as `x` decreases towards the integrable point,
    /// i.e. the number of adjacent pairs (in ascending `x`) that break a
    /// monotone divergence. Divergent points count as `+∞`.
    pub fn inversions(&self) -> usize {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.x[a].partial_cmp(&self.x[b]).unwrap());
        idx.windows(2).filter(|w| self.y[w[1]] > self.y[w[0]]).count()
    }
}

/// `log y = slope · log x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit<T: Real> {
    pub slope: T,
    pub intercept: T,
    pub slope_stderr: T,
    pub intercept_stderr: T,
    pub n_points: usize,
    /// Divergent or cut points left out of the fit.
    pub n_excluded: usize,
}

impl<T: Real> PowerLawFit<T> {
    pub fn predict(&self, x: T) -> T {
        (self.slope * x.ln() + self.intercept).exp()
    }
}

fn fit_line<T: Real>(xs: &[T], ys: &[T], n_excluded: usize) -> Result<PowerLawFit<T>> {
    if xs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: xs.len(),
        });
    }
    let line = least_squares_line(xs, ys);
    Ok(PowerLawFit {
        slope: line.slope,
        intercept: line.intercept,
        slope_stderr: line.slope_stderr,
        intercept_stderr: line.intercept_stderr,
        n_points: xs.len(),
        n_excluded,
    })
}

/// Unweighted least squares on `(ln x, ln y)` over the finite points.
pub fn loglog_fit<T: Real>(series: &ScalingSeries<T>) -> Result<PowerLawFit<T>> {
    let (xs, ys): (Vec<T>, Vec<T>) = series.finite_points().map(|(x, y)| (x.ln(), y.ln())).unzip();
    fit_line(&xs, &ys, series.len() - xs.len())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AverageMode {
    #[default]
    Arithmetic,
    Geometric,
}

impl FromStr for AverageMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "arithmetic" => Ok(AverageMode::Arithmetic),
            "geometric" => Ok(AverageMode::Geometric),
            other => Err(Error::Config(format!(
                "unknown average mode `{other}` (arithmetic|geometric)"
            ))),
        }
    }
}

fn check_aligned<T: Real>(a: &ScalingSeries<T>, b: &ScalingSeries<T>) -> Result<()> {
    let same = a.len() == b.len()
        && a.x
            .iter()
            .zip(&b.x)
            .all(|(&p, &q)| (p - q).abs() <= T::lit(1e-12) * p.abs().max(q.abs()));
    if same {
        Ok(())
    } else {
        Err(Error::Alignment(format!(
            "grids of {}/{} and {}/{} differ",
            a.label.operator, a.label.kind, b.label.operator, b.label.kind
        )))
    }
}

/// Pointwise mean over a family of series sharing one grid. A point is
/// divergent if any member diverges there.
pub fn family_average<T: Real>(members: &[ScalingSeries<T>], mode: AverageMode) -> Result<ScalingSeries<T>> {
    let first = members.first().ok_or(Error::InsufficientData { needed: 1, got: 0 })?;
    for m in &members[1..] {
        check_aligned(first, m)?;
        if m.label.kind != first.label.kind {
            return Err(Error::Alignment(format!(
                "cannot average {} with {}",
                first.label.kind, m.label.kind
            )));
        }
    }
    let count = T::from_usize(members.len()).unwrap();
    let y = (0..first.len())
        .map(|i| {
            if members.iter().any(|m| m.divergent[i]) {
                return None;
            }
            Some(match mode {
                AverageMode::Arithmetic => members.iter().map(|m| m.y[i]).sum::<T>() / count,
                AverageMode::Geometric => (members.iter().map(|m| m.y[i].ln()).sum::<T>() / count).exp(),
            })
        })
        .collect();
    let label = SeriesLabel::new(first.label.class, "family", first.label.kind);
    ScalingSeries::with_divergent(first.x.clone(), y, label)
}

/// Points `(T_λ/T*_λ, T_E/T_λ)` with `T*_λ` the largest finite `T_λ`.
pub fn ratio_curve<T: Real>(te: &ScalingSeries<T>, tl: &ScalingSeries<T>) -> Result<ScalingSeries<T>> {
    check_aligned(te, tl)?;
    let t_star = tl.finite_points().map(|(_, y)| y).fold(T::neg_infinity(), T::max);
    if !(t_star > T::zero()) {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    // Points without a finite T_λ have no abscissa and are dropped.
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..tl.len() {
        if tl.divergent[i] {
            continue;
        }
        x.push(tl.y[i] / t_star);
        y.push((!te.divergent[i]).then(|| te.y[i] / tl.y[i]));
    }
    let label = SeriesLabel::new(te.label.class, te.label.operator.clone(), TimescaleKind::Ratio);
    ScalingSeries::with_divergent(x, y, label)
}

/// Axis scaling for the ratio-curve fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioScale {
    /// `ln(T_E/T_λ)` against `T_λ/T*_λ`; the slope equals the power-law
    /// exponent near `T_λ/T*_λ = 1`.
    #[default]
    LogLinear,
    /// `ln(T_E/T_λ)` against `ln(T_λ/T*_λ)`.
    LogLog,
}

/// Exponent `α` of `T_E/T_λ ∼ T_λ^α`, fitted over points with
/// `T_λ/T*_λ ≥ lower_cutoff`.
pub fn ratio_exponent<T: Real>(
    curve: &ScalingSeries<T>,
    lower_cutoff: Option<T>,
    scale: RatioScale,
) -> Result<PowerLawFit<T>> {
    let cut = lower_cutoff.unwrap_or(T::zero());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (x, y) in curve.finite_points() {
        if x >= cut {
            xs.push(match scale {
                RatioScale::LogLinear => x,
                RatioScale::LogLog => x.ln(),
            });
            ys.push(y.ln());
        }
    }
    fit_line(&xs, &ys, curve.len() - xs.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(kind: TimescaleKind) -> SeriesLabel {
        SeriesLabel::new(NetworkClass::Lrn, "k=1", kind)
    }

    fn series(x: &[f64], y: &[f64]) -> ScalingSeries<f64> {
        ScalingSeries::new(x.to_vec(), y.to_vec(), label(TimescaleKind::Lyapunov)).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let x = [0.02, 0.05, 0.1, 0.3, 0.5];
        let y: Vec<f64> = x.iter().map(|v: &f64| 2.0 * v.powf(-1.5)).collect();
        let fit = loglog_fit(&series(&x, &y)).unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-12);
        assert!((fit.intercept - 2f64.ln()).abs() < 1e-12);
        assert_eq!(fit.n_points, 5);
        assert!(fit.slope_stderr < 1e-12);
    }

    #[test]
    fn too_few_points() {
        let s = series(&[0.1], &[3.0]);
        assert!(matches!(
            loglog_fit(&s),
            Err(Error::InsufficientData { needed: 3, got: 1 })
        ));
    }

    #[test]
    fn divergent_points_are_excluded() {
        let s = ScalingSeries::with_divergent(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![None, Some(4.0), Some(3.0), Some(2.0)],
            label(TimescaleKind::ErgodizationPlus),
        )
        .unwrap();
        let fit = loglog_fit(&s).unwrap();
        assert_eq!((fit.n_points, fit.n_excluded), (3, 1));
        assert_eq!(s.inversions(), 0);
        assert!(ScalingSeries::new(vec![0.0, 1.0], vec![1.0, 1.0], label(TimescaleKind::Lyapunov)).is_err());
    }

    #[test]
    fn averages() {
        let x = [0.1, 0.2, 0.3];
        let a = series(&x, &[1.0, 2.0, 3.0]);
        let b = series(&x, &[3.0, 6.0, 9.0]);
        let avg = family_average(&[a.clone(), b.clone()], AverageMode::Arithmetic).unwrap();
        assert_eq!(avg.y, vec![2.0, 4.0, 6.0]);
        let same = family_average(&[a.clone(), a.clone()], AverageMode::Arithmetic).unwrap();
        assert_eq!(same.y, a.y);
        let geo = family_average(&[a.clone(), b], AverageMode::Geometric).unwrap();
        assert!((geo.y[0] - 3f64.sqrt()).abs() < 1e-12);
        let c = series(&[0.1, 0.2, 0.4], &[1.0, 1.0, 1.0]);
        assert!(matches!(
            family_average(&[a, c], AverageMode::Arithmetic),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn ratio_of_cubic_has_slope_two() {
        let x = [0.02, 0.05, 0.1, 0.2];
        let tl = [4.0, 3.0, 2.0, 1.5];
        let te: Vec<f64> = tl.iter().map(|t: &f64| t.powi(3)).collect();
        let curve = ratio_curve(&series(&x, &te), &series(&x, &tl)).unwrap();
        assert_eq!(curve.x[0], 1.0);
        for i in 0..4 {
            assert!((curve.y[i] - te[i] / tl[i]).abs() < 1e-12);
        }
        let fit = ratio_exponent(&curve, None, RatioScale::LogLog).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);

        let flat = ratio_curve(&series(&x, &tl), &series(&x, &tl)).unwrap();
        assert!(flat.y.iter().all(|&r| r == 1.0));
        let cut = ratio_exponent(&flat, Some(0.45), RatioScale::LogLinear).unwrap();
        assert_eq!((cut.n_points, cut.n_excluded), (3, 1));
        assert!(cut.slope.abs() < 1e-12);
    }
}
