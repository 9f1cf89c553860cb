//! Run configuration. Files are TOML restricted to dotted `section.key = value`
//! lines; see `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{AverageMode, NetworkClass};
use crate::ergodization::StateMode;
use crate::error::{Error, Result};
use crate::krylov::{LanczosOptions, ReorthMode};
use crate::model::{Boundary, ModelParams, ObservableKind};

/// Environment variable that replaces `ergodize.seed`.
pub const SEED_ENV: &str = "QIC_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "J")]
    pub j: f64,
    pub g: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub boundary: Boundary,
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            j: 1.0,
            g: 0.5,
            h: 1.0,
            n: 8,
            boundary: Boundary::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "h")]
    H,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::G => "g",
            SweepParameter::H => "h",
        }
    }

    /// Sweeping `h` breaks the local (SRN) limit, sweeping `g` the nonlocal one.
    pub fn class(self) -> NetworkClass {
        match self {
            SweepParameter::G => NetworkClass::Lrn,
            SweepParameter::H => NetworkClass::Srn,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    /// Explicit grid. Takes precedence over the log-spaced grid when present.
    pub grid: Option<Vec<f64>>,
    pub log_min: f64,
    pub log_max: f64,
    pub log_points: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            parameter: SweepParameter::H,
            grid: None,
            log_min: 0.02,
            log_max: 0.5,
            log_points: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservableBlock {
    /// `srn_site`, `srn_sum`, `lrn_ik` or `parity`.
    pub kind: String,
    /// Single site or `k`; shorthand for a one-element `indices`.
    pub index: Option<usize>,
    /// Sites (1-based) or `k` values. Empty means every valid index.
    pub indices: Vec<usize>,
}

impl Default for ObservableBlock {
    fn default() -> Self {
        ObservableBlock {
            kind: "srn_site".into(),
            index: None,
            indices: vec![1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KrylovBlock {
    pub max_steps: usize,
    pub tol: f64,
    pub reorth: ReorthMode,
    /// Fit window `[n_min, n_max]`; the automatic rule is used when absent.
    pub window: Option<[usize; 2]>,
}

impl Default for KrylovBlock {
    fn default() -> Self {
        let d = LanczosOptions::<f64>::default();
        KrylovBlock {
            max_steps: d.max_steps,
            tol: d.tol,
            reorth: d.reorth,
            window: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErgodizeBlock {
    pub n_target: usize,
    /// First seed; `QIC_SEED` overrides it.
    pub seed: u64,
    /// Number of consecutive seeds per point.
    pub n_seeds: usize,
    pub state: StateMode,
    /// Also collect `2·n_target` crossings and report the change in `T_E`.
    pub stability: bool,
    /// Scan budget in sample steps.
    pub max_steps: f64,
}

impl Default for ErgodizeBlock {
    fn default() -> Self {
        ErgodizeBlock {
            n_target: 10_000,
            seed: 1,
            n_seeds: 1,
            state: StateMode::Complex,
            stability: true,
            max_steps: crate::ergodization::DEFAULT_MAX_STEPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub directory: PathBuf,
    /// Subset of `csv`, `json`. CSV tables are always written.
    pub formats: Vec<String>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: PathBuf::from("runs/out"),
            formats: vec!["csv".into(), "json".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisBlock {
    pub average: AverageMode,
    /// Lower cutoff on `T_λ/T*_λ` for the ratio fit.
    pub ratio_cutoff: f64,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        AnalysisBlock {
            average: AverageMode::Arithmetic,
            ratio_cutoff: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub sweep: SweepBlock,
    pub observable: ObservableBlock,
    pub krylov: KrylovBlock,
    pub ergodize: ErgodizeBlock,
    pub output: OutputBlock,
    pub analysis: AnalysisBlock,
}

impl RunConfig {
    /// Parses and validates. Relative output paths stay relative to the
    /// working directory.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies `QIC_SEED` when set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.ergodize.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        ModelParams::new(m.j, m.g, m.h, m.n, m.boundary)?;
        let grid = self.grid()?;
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("sweep grid must be strictly increasing".into()));
        }
        if grid.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::Config(
                "sweep grid values must be finite and non-negative".into(),
            ));
        }
        for kind in self.observables()? {
            kind.validate(m.n).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some([lo, hi]) = self.krylov.window {
            if lo < 1 || hi < lo + 3 {
                return Err(Error::Config(format!(
                    "fit window [{lo}, {hi}] needs 1 ≤ n_min and at least 4 points"
                )));
            }
        }
        if self.krylov.max_steps == 0 || !(self.krylov.tol > 0.0) {
            return Err(Error::Config("krylov.max_steps and krylov.tol must be positive".into()));
        }
        if self.ergodize.n_target < 2 || self.ergodize.n_seeds == 0 {
            return Err(Error::Config(
                "ergodize.n_target ≥ 2 and ergodize.n_seeds ≥ 1 required".into(),
            ));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("unknown output format {f:?} (csv|json)")));
            }
        }
        Ok(())
    }

    /// Sweep values, ascending.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let s = &self.sweep;
        if let Some(g) = &s.grid {
            return Ok(g.clone());
        }
        if !(s.log_min > 0.0 && s.log_max >= s.log_min) {
            return Err(Error::Config("log-spaced grid needs 0 < log_min ≤ log_max".into()));
        }
        Ok(match s.log_points {
            0 => Vec::new(),
            1 => vec![s.log_min],
            n => {
                let (a, b) = (s.log_min.ln(), s.log_max.ln());
                (0..n)
                    .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                    .collect()
            }
        })
    }

    pub fn observables(&self) -> Result<Vec<ObservableKind>> {
        let o = &self.observable;
        let n = self.model.n;
        let indices: Vec<usize> = if let Some(i) = o.index {
            vec![i]
        } else if o.indices.is_empty() {
            match o.kind.as_str() {
                "srn_site" => (1..=n).collect(),
                "lrn_ik" => (1..n).collect(),
                _ => vec![0],
            }
        } else {
            o.indices.clone()
        };
        let mut kinds = Vec::new();
        for i in indices {
            let k = ObservableKind::parse(&o.kind, i)?;
            if !kinds.contains(&k) {
                kinds.push(k);
            }
        }
        Ok(kinds)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.ergodize.n_seeds as u64)
            .map(|i| self.ergodize.seed.wrapping_add(i))
            .collect()
    }

    /// Model at one sweep value.
    pub fn params_at(&self, x: f64) -> Result<ModelParams<f64>> {
        let m = &self.model;
        let (g, h) = match self.sweep.parameter {
            SweepParameter::G => (x, m.h),
            SweepParameter::H => (m.g, x),
        };
        ModelParams::new(m.j, g, h, m.n, m.boundary)
    }

    /// Model at the fixed `model.g`, `model.h`.
    pub fn params(&self) -> Result<ModelParams<f64>> {
        let m = &self.model;
        ModelParams::new(m.j, m.g, m.h, m.n, m.boundary)
    }

    pub fn lanczos_options(&self) -> LanczosOptions<f64> {
        LanczosOptions {
            max_steps: self.krylov.max_steps,
            tol: self.krylov.tol,
            reorth: self.krylov.reorth,
            keep_basis: false,
        }
    }

    pub fn wants_json(&self) -> bool {
        self.output.formats.iter().any(|f| f == "json")
    }
}
