//! Exact time evolution of expectation values and excursion statistics.
//!
//! With `|ψ⟩ = Σ c_n |n⟩` in the energy eigenbasis, the fluctuation of an
//! observable around its diagonal-ensemble mean is
//!
//! ```text
//! f(t) = Σ'_{m,n} c*_m c_n e^{i(E_n − E_m) t} ⟨m|O|n⟩
//! ```
//!
//! where the primed sum skips every pair with `E_m = E_n`. The zeros of `f`
//! split the time axis into excursions above and below the mean, and the
//! ergodization time is `T_E = σ²/μ` of the excursion lengths.

use std::ops::Range;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliSum, MAX_DENSE_SITES};
use crate::scalar::{adjoint, Real};
use crate::trig_sum::{GridPlan, TrigSum};

/// Relative tolerance for grouping degenerate levels, in units of the
/// spectral width.
pub const DEGENERACY_RTOL: f64 = 1e-10;

/// Maximum bisection steps when refining a crossing.
pub const MAX_BISECTIONS: usize = 40;

/// Default scan budget for [`find_crossings`], in units of the sample step.
pub const DEFAULT_MAX_STEPS: f64 = 1e9;

/// Grid points per transform block in the fast scan.
pub const SCAN_BLOCK: usize = 65536;

/// Full eigendecomposition of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct SpectrumData<T: Real> {
    /// Ascending eigenvalues.
    pub energies: Vec<T>,
    /// Eigenvectors as columns, in the order of `energies`.
    pub eigenvectors: DMatrix<Complex<T>>,
    /// Contiguous index ranges of (numerically) degenerate levels.
    pub degeneracy_groups: Vec<Range<usize>>,
}

impl<T: Real> SpectrumData<T> {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn width(&self) -> T {
        match (self.energies.first(), self.energies.last()) {
            (Some(&lo), Some(&hi)) => hi - lo,
            _ => T::zero(),
        }
    }

    /// Absolute tolerance under which two levels count as degenerate.
    ///
    /// The relative floor of `100 ε` only matters in single precision, where
    /// `1e-10` is below the eigensolver's round-off.
    pub fn degeneracy_tolerance(&self) -> T {
        let rtol = T::lit(DEGENERACY_RTOL).max(T::lit(100.0) * T::EPS);
        rtol * self.width()
    }

    /// Group index of every level.
    pub fn group_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (g, r) in self.degeneracy_groups.iter().enumerate() {
            for i in r.clone() {
                out[i] = g;
            }
        }
        out
    }

    /// Largest `‖H v_n − E_n v_n‖` over all eigenpairs.
    pub fn eigen_residual(&self, h: &DMatrix<Complex<T>>) -> T {
        let hv = h * &self.eigenvectors;
        let mut worst = T::zero();
        for (n, &e) in self.energies.iter().enumerate() {
            let col = hv.column(n) - self.eigenvectors.column(n).map(|c| c * e);
            let norm = col.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt();
            worst = worst.max(norm);
        }
        worst
    }

    /// Largest entry of `|U†U − 1|`.
    pub fn unitarity_defect(&self) -> T {
        let gram = adjoint(&self.eigenvectors) * &self.eigenvectors;
        let mut worst = T::zero();
        for ((i, j), c) in gram
            .iter()
            .enumerate()
            .map(|(k, c)| ((k % self.dim(), k / self.dim()), c))
        {
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((*c - Complex::new(target, T::zero())).norm());
        }
        worst
    }

    /// Matrix elements `⟨m|O|n⟩` in the eigenbasis.
    pub fn to_eigenbasis(&self, o: &PauliSum<T>) -> Result<DMatrix<Complex<T>>> {
        let dense = o.to_dense()?;
        if dense.dim() != self.dim() {
            return Err(Error::SizeMismatch {
                left: dense.dim(),
                right: self.dim(),
            });
        }
        let u = &self.eigenvectors;
        Ok(adjoint(u) * dense.matrix * u)
    }
}

pub fn diagonalize<T: Real>(h: &PauliSum<T>) -> Result<SpectrumData<T>> {
    if h.n_sites() > MAX_DENSE_SITES {
        return Err(Error::Capacity {
            what: "diagonalize",
            max: MAX_DENSE_SITES,
            got: h.n_sites(),
        });
    }
    if !h.is_hermitian(T::lit(1e3) * T::EPS) {
        return Err(Error::NonHermitian("Hamiltonian".into()));
    }
    let dense = h.to_dense()?;
    let (energies, eigenvectors) = T::hermitian_eigen(dense.matrix);
    let mut spec = SpectrumData {
        energies,
        eigenvectors,
        degeneracy_groups: Vec::new(),
    };
    spec.degeneracy_groups = group_levels(&spec.energies, spec.degeneracy_tolerance());
    Ok(spec)
}

/// Groups sorted levels. A level joins the current group while it stays
/// within `tol` of the group's first member, so groups never chain.
fn group_levels<T: Real>(energies: &[T], tol: T) -> Vec<Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=energies.len() {
        if i == energies.len() || energies[i] - energies[start] > tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

/// How the random amplitudes are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateMode {
    /// Real and imaginary parts independently uniform in (−1, 1).
    #[default]
    Complex,
    /// Real parts uniform in (−1, 1), imaginary parts zero.
    Real,
}

impl FromStr for StateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complex" => Ok(StateMode::Complex),
            "real" => Ok(StateMode::Real),
            other => Err(Error::Config(format!("unknown state mode `{other}` (complex|real)"))),
        }
    }
}

/// Normalised random amplitudes in the energy eigenbasis.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomState<T: Real> {
    pub coeffs: Vec<Complex<T>>,
    pub seed: u64,
    pub mode: StateMode,
}

impl<T: Real> RandomState<T> {
    pub fn norm(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }
}

/// Draws amplitudes with ChaCha8 seeded from `seed`. Sampling and
/// normalisation happen in `f64` so both precisions see the same state.
pub fn random_state<T: Real>(seed: u64, dim: usize, mode: StateMode) -> Result<RandomState<T>> {
    if dim == 0 {
        return Err(Error::DegenerateInput("random state of dimension 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(f64, f64)> = (0..dim)
        .map(|_| {
            let re = rng.random_range(-1.0..1.0);
            let im = match mode {
                StateMode::Complex => rng.random_range(-1.0..1.0),
                StateMode::Real => 0.0,
            };
            (re, im)
        })
        .collect();
    let norm = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    let coeffs = raw
        .into_iter()
        .map(|(a, b)| Complex::new(T::lit(a / norm), T::lit(b / norm)))
        .collect();
    Ok(RandomState { coeffs, seed, mode })
}

/// `f(t)` for one observable and one state, plus its sampling step.
#[derive(Clone, Debug)]
pub struct FluctuationSeries<T: Real> {
    /// Full matrix `⟨m|O|n⟩` in the eigenbasis.
    pub o_matrix: DMatrix<Complex<T>>,
    /// Diagonal-ensemble mean, degenerate coherences included.
    pub mean: T,
    /// Scan step `1/(4 max|E_m − E_n|)`.
    pub sample_step: T,
    energies: Vec<T>,
    coeffs: Vec<Complex<T>>,
    /// Row-packed upper triangle of the real symmetric form `M` with
    /// `f = wᵀ M w`, `w = (Re v, Im v)`. Off-diagonal entries are pre-doubled.
    packed: Vec<T>,
    /// The same signal as one term per level pair, for block scans.
    pairs: TrigSum,
    plan: GridPlan,
}

pub fn build_fluctuation<T: Real>(
    spec: &SpectrumData<T>,
    state: &RandomState<T>,
    o: &PauliSum<T>,
) -> Result<FluctuationSeries<T>> {
    let d = spec.dim();
    if state.coeffs.len() != d {
        return Err(Error::SizeMismatch {
            left: state.coeffs.len(),
            right: d,
        });
    }
    let o_matrix = spec.to_eigenbasis(o)?;
    if spec.degeneracy_groups.len() < 2 {
        return Err(Error::NoDynamics("spectrum is fully degenerate".into()));
    }
    let group = spec.group_of();
    let c = &state.coeffs;

    let mut mean = Complex::new(T::zero(), T::zero());
    let mut scale = T::zero();
    let mut off_max = T::zero();
    // O' = A + iB with the degenerate blocks removed.
    let mut a = DMatrix::<T>::zeros(d, d);
    let mut b = DMatrix::<T>::zeros(d, d);
    for n in 0..d {
        for m in 0..d {
            let om = o_matrix[(m, n)];
            scale = scale.max(om.norm());
            if group[m] == group[n] {
                mean += c[m].conj() * om * c[n];
            } else {
                off_max = off_max.max(om.norm());
                a[(m, n)] = om.re;
                b[(m, n)] = om.im;
            }
        }
    }
    if !(off_max > T::lit(1e-9) * scale) {
        return Err(Error::NoDynamics(
            "observable has no matrix elements between distinct energies".into(),
        ));
    }

    // M = [[A, −B], [B, A]]
    let dd = 2 * d;
    let entry = |i: usize, j: usize| -> T {
        match (i < d, j < d) {
            (true, true) => a[(i, j)],
            (true, false) => -b[(i, j - d)],
            (false, true) => b[(i - d, j)],
            (false, false) => a[(i - d, j - d)],
        }
    };
    let mut packed = Vec::with_capacity(dd * (dd + 1) / 2);
    for i in 0..dd {
        packed.push(entry(i, i));
        for j in i + 1..dd {
            packed.push(T::lit(2.0) * entry(i, j));
        }
    }

    // Pair m < n carries 2 c*_m O_mn c_n at frequency E_n − E_m > 0.
    let mut omega = Vec::new();
    let mut amp = Vec::new();
    for n in 0..d {
        for m in 0..n {
            if group[m] == group[n] {
                continue;
            }
            let a = c[m].conj() * o_matrix[(m, n)] * c[n];
            if a.norm() == T::zero() {
                continue;
            }
            omega.push((spec.energies[n] - spec.energies[m]).to_f64_lossy());
            amp.push(Complex::new(2.0 * a.re.to_f64_lossy(), 2.0 * a.im.to_f64_lossy()));
        }
    }
    let sample_step = T::one() / (T::lit(4.0) * spec.width());

    Ok(FluctuationSeries {
        o_matrix,
        mean: mean.re,
        sample_step,
        energies: spec.energies.clone(),
        coeffs: c.clone(),
        packed,
        pairs: TrigSum::new(omega, amp),
        plan: GridPlan::new(sample_step.to_f64_lossy(), SCAN_BLOCK),
    })
}

impl<T: Real> FluctuationSeries<T> {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    fn phased(&self, t: T) -> Vec<T> {
        let d = self.dim();
        let mut w = vec![T::zero(); 2 * d];
        for n in 0..d {
            let (s, c) = (self.energies[n] * t).sin_cos();
            let v = self.coeffs[n] * Complex::new(c, s);
            w[n] = v.re;
            w[n + d] = v.im;
        }
        w
    }

    /// `f(t)`.
    pub fn eval(&self, t: T) -> T {
        let w = self.phased(t);
        let dd = w.len();
        let mut total = T::zero();
        let mut offset = 0;
        for i in 0..dd {
            let row = &self.packed[offset..offset + dd - i];
            total += w[i] * dot(row, &w[i..]);
            offset += dd - i;
        }
        total
    }

    /// Upper bound on `|f|`.
    pub fn scale(&self) -> T {
        T::lit(self.pairs.amplitude_sum())
    }

    /// Number of level pairs contributing to `f`.
    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// `⟨O(t)⟩` from the full matrix, without using the precomputed mean.
    pub fn expectation_direct(&self, t: T) -> T {
        let w = self.phased(t);
        let d = self.dim();
        let v: Vec<Complex<T>> = (0..d).map(|n| Complex::new(w[n], w[n + d])).collect();
        let mut acc = Complex::new(T::zero(), T::zero());
        for n in 0..d {
            for m in 0..d {
                acc += v[m].conj() * self.o_matrix[(m, n)] * v[n];
            }
        }
        acc.re
    }
}

/// Eight independent partial sums so the loop vectorises.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in ra.iter().zip(rb) {
        tail += *x * *y;
    }
    (acc[0] + acc[4]) + (acc[1] + acc[5]) + (acc[2] + acc[6]) + (acc[3] + acc[7]) + tail
}

/// Anything that can be scanned for mean crossings.
pub trait Signal<T: Real> {
    fn value(&self, t: T) -> T;
    fn step(&self) -> T;

    /// Preferred number of grid points per [`Signal::fill_grid`] call.
    fn grid_block(&self) -> usize {
        256
    }

    /// Values at `t_first + k·step`. May be approximate within
    /// [`Signal::grid_error`]; the scan re-evaluates anything closer to zero.
    fn fill_grid(&self, t_first: T, out: &mut [T]) {
        let step = self.step();
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.value(t_first + step * T::from_usize(k).unwrap());
        }
    }

    fn grid_error(&self) -> T {
        T::zero()
    }
}

impl<T: Real> Signal<T> for FluctuationSeries<T> {
    fn value(&self, t: T) -> T {
        self.eval(t)
    }

    fn step(&self) -> T {
        self.sample_step
    }

    fn grid_block(&self) -> usize {
        self.plan.block()
    }

    fn fill_grid(&self, t_first: T, out: &mut [T]) {
        let mut buf = vec![0.0; out.len()];
        self.plan.fill(&self.pairs, t_first.to_f64_lossy(), &mut buf);
        for (o, v) in out.iter_mut().zip(buf) {
            *o = T::lit(v);
        }
    }

    fn grid_error(&self) -> T {
        // Gridding error is near 1e-12 of the amplitude sum; keep a wide
        // margin, plus room for single-precision rounding.
        T::lit(1e-9 * self.pairs.amplitude_sum()).max(T::lit(1e3) * T::EPS * self.scale())
    }
}

/// Closure-backed signal, mainly for synthetic tests.
pub struct FnSignal<F> {
    pub f: F,
    pub step: f64,
}

impl<T: Real, F: Fn(T) -> T> Signal<T> for FnSignal<F> {
    fn value(&self, t: T) -> T {
        (self.f)(t)
    }
    fn step(&self) -> T {
        T::lit(self.step)
    }
}

/// Crossing times and the excursion statistics derived from them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionStats<T: Real> {
    pub crossings: Vec<T>,
    /// Sign of `f` inside each interval between consecutive crossings.
    pub positive: Vec<bool>,
    pub tau_plus: Vec<T>,
    pub tau_minus: Vec<T>,
    pub mu_plus: T,
    pub mu_minus: T,
    pub var_plus: T,
    pub var_minus: T,
    pub te_plus: T,
    pub te_minus: T,
    pub n_target: usize,
}

fn mean_var<T: Real>(xs: &[T]) -> (T, T) {
    if xs.is_empty() {
        return (T::nan(), T::nan());
    }
    let n = T::from_usize(xs.len()).unwrap();
    let mu = xs.iter().copied().sum::<T>() / n;
    let var = xs.iter().map(|&x| (x - mu) * (x - mu)).sum::<T>() / n;
    (mu, var)
}

impl<T: Real> ExcursionStats<T> {
    /// Builds statistics from ascending crossings. `first_positive` is the sign
    /// of `f` right after the first crossing; later intervals alternate.
    pub fn from_crossings(crossings: Vec<T>, first_positive: bool, n_target: usize) -> Self {
        let mut positive = Vec::new();
        let mut tau_plus = Vec::new();
        let mut tau_minus = Vec::new();
        for (i, w) in crossings.windows(2).enumerate() {
            let pos = first_positive == (i % 2 == 0);
            positive.push(pos);
            if pos {
                tau_plus.push(w[1] - w[0]);
            } else {
                tau_minus.push(w[1] - w[0]);
            }
        }
        let (mu_plus, var_plus) = mean_var(&tau_plus);
        let (mu_minus, var_minus) = mean_var(&tau_minus);
        ExcursionStats {
            crossings,
            positive,
            tau_plus,
            tau_minus,
            mu_plus,
            mu_minus,
            var_plus,
            var_minus,
            te_plus: var_plus / mu_plus,
            te_minus: var_minus / mu_minus,
            n_target,
        }
    }

    /// Statistics of the first `n` crossings only.
    pub fn prefix(&self, n: usize) -> Self {
        let n = n.min(self.crossings.len());
        let first_positive = self.positive.first().copied().unwrap_or(true);
        Self::from_crossings(self.crossings[..n].to_vec(), first_positive, n)
    }

    /// `σ²/μ²` of all excursions regardless of sign.
    pub fn relative_variance(&self) -> T {
        let all: Vec<T> = self.crossings.windows(2).map(|w| w[1] - w[0]).collect();
        let (mu, var) = mean_var(&all);
        var / (mu * mu)
    }
}

/// Collects `n_target` mean crossings after `t_start` with the default budget.
pub fn find_crossings<T: Real, S: Signal<T>>(signal: &S, n_target: usize, t_start: T) -> Result<ExcursionStats<T>> {
    let t_max = t_start + T::lit(DEFAULT_MAX_STEPS) * signal.step();
    find_crossings_until(signal, n_target, t_start, t_max)
}

/// Scans the grid `t_start + k·step` for sign changes and refines each one to
/// a bracket no wider than `1e-6` steps.
pub fn find_crossings_until<T: Real, S: Signal<T>>(
    signal: &S,
    n_target: usize,
    t_start: T,
    t_max: T,
) -> Result<ExcursionStats<T>> {
    if n_target == 0 {
        return Err(Error::DegenerateInput("n_target must be at least 1".into()));
    }
    let step = signal.step();
    if !(step > T::zero()) || !step.is_finite() {
        return Err(Error::NoDynamics("sample step is not positive".into()));
    }
    let width = step * T::lit(1e-6);
    let guard = signal.grid_error();
    let block = signal.grid_block().max(1);
    let mut buf = vec![T::zero(); block];
    let mut crossings: Vec<T> = Vec::with_capacity(n_target);
    let mut first_positive = true;
    // Grid points come from the step index, so no drift accumulates.
    let at = |k: u64| t_start + step * T::from_u64(k).unwrap();
    let mut k: u64 = 0;
    let mut t = t_start;
    let mut f = signal.value(t);
    'scan: while crossings.len() < n_target {
        signal.fill_grid(at(k + 1), &mut buf);
        for &approx in &buf {
            k += 1;
            let t_next = at(k);
            if t_next > t_max {
                return Err(Error::Timeout {
                    found: crossings.len(),
                    target: n_target,
                    t_reached: t.to_f64_lossy(),
                    partial_crossings: crossings.iter().map(|c| c.to_f64_lossy()).collect(),
                });
            }
            let f_next = if approx.abs() <= guard {
                signal.value(t_next)
            } else {
                approx
            };
            if (f > T::zero()) != (f_next > T::zero()) {
                if crossings.is_empty() {
                    first_positive = f_next > T::zero();
                }
                crossings.push(refine(signal, t, t_next, f, f_next, width));
                if crossings.len() == n_target {
                    break 'scan;
                }
            }
            t = t_next;
            f = f_next;
        }
    }
    Ok(ExcursionStats::from_crossings(crossings, first_positive, n_target))
}

/// Shrinks a sign-change bracket below `width`.
///
/// Each round tries the false-position point and a probe `width/2` beyond it
/// on the side where the root must lie. A round that fails to halve the
/// bracket is followed by a bisection step, so the bracket at least halves per
/// round and [`MAX_BISECTIONS`] rounds always suffice.
fn refine<T: Real, S: Signal<T>>(signal: &S, lo: T, hi: T, f_lo: T, f_hi: T, width: T) -> T {
    let (mut lo, mut hi, mut f_lo, mut f_hi) = (lo, hi, f_lo, f_hi);
    let lo_positive = f_lo > T::zero();
    let half = T::lit(0.5);
    for _ in 0..MAX_BISECTIONS {
        let span = hi - lo;
        if span <= width {
            break;
        }
        let update = |x: T, lo: &mut T, hi: &mut T, f_lo: &mut T, f_hi: &mut T| {
            let fx = signal.value(x);
            if (fx > T::zero()) == lo_positive {
                *lo = x;
                *f_lo = fx;
            } else {
                *hi = x;
                *f_hi = fx;
            }
        };
        let margin = width * T::lit(0.25);
        let mut x = lo - f_lo * span / (f_hi - f_lo);
        if !x.is_finite() || x <= lo + margin || x >= hi - margin {
            x = lo + span * half;
        }
        update(x, &mut lo, &mut hi, &mut f_lo, &mut f_hi);
        if hi - lo > width {
            let probe = if lo == x { x + width * half } else { x - width * half };
            if probe > lo && probe < hi {
                update(probe, &mut lo, &mut hi, &mut f_lo, &mut f_hi);
            }
        }
        if hi - lo > span * half {
            let mid = lo + (hi - lo) * half;
            update(mid, &mut lo, &mut hi, &mut f_lo, &mut f_hi);
        }
    }
    lo + (hi - lo) * half
}

/// Relative change of `T_E±` when the crossing count is doubled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stability<T: Real> {
    pub te_plus: T,
    pub te_minus: T,
    pub te_plus_doubled: T,
    pub te_minus_doubled: T,
    pub rel_change_plus: T,
    pub rel_change_minus: T,
}

impl<T: Real> Stability<T> {
    /// Compares the first half of `doubled` with all of it.
    pub fn from_doubled(doubled: &ExcursionStats<T>) -> Self {
        let base = doubled.prefix(doubled.crossings.len() / 2);
        let rel = |a: T, b: T| ((b - a) / a).abs();
        Stability {
            te_plus: base.te_plus,
            te_minus: base.te_minus,
            te_plus_doubled: doubled.te_plus,
            te_minus_doubled: doubled.te_minus,
            rel_change_plus: rel(base.te_plus, doubled.te_plus),
            rel_change_minus: rel(base.te_minus, doubled.te_minus),
        }
    }

    pub fn max_rel_change(&self) -> T {
        self.rel_change_plus.max(self.rel_change_minus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, ModelParams};
    use crate::pauli::Pauli;

    #[test]
    fn two_site_classical_chain_spectrum() {
        let p = ModelParams::<f64>::periodic(1.0, 0.0, 0.0, 2).unwrap();
        let spec = diagonalize(&build_hamiltonian(&p).unwrap()).unwrap();
        let want = [-2.0, -2.0, 2.0, 2.0];
        for (e, w) in spec.energies.iter().zip(want) {
            assert!((e - w).abs() < 1e-12);
        }
        assert_eq!(spec.degeneracy_groups, vec![0..2, 2..4]);
    }

    #[test]
    fn zero_hamiltonian_is_one_group() {
        let h = PauliSum::<f64>::zero(3).unwrap();
        let spec = diagonalize(&h).unwrap();
        assert!(spec.energies.iter().all(|&e| e == 0.0));
        assert_eq!(spec.degeneracy_groups, vec![0..8]);
        let state = random_state(1, 8, StateMode::Complex).unwrap();
        let o = PauliSum::single(3, 0, Pauli::X, 1.0).unwrap();
        assert!(matches!(
            build_fluctuation(&spec, &state, &o),
            Err(Error::NoDynamics(_))
        ));
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let h = PauliSum::single(2, 0, Pauli::X, 1.0)
            .unwrap()
            .scale(Complex::new(0.0, 1.0));
        assert!(matches!(diagonalize(&h), Err(Error::NonHermitian(_))));
        let big = PauliSum::<f64>::single(13, 0, Pauli::Z, 1.0).unwrap();
        assert!(matches!(diagonalize(&big), Err(Error::Capacity { .. })));
    }

    #[test]
    fn grouping_does_not_chain() {
        let e = [0.0, 0.6, 1.2, 5.0];
        assert_eq!(group_levels(&e, 1.0), vec![0..2, 2..3, 3..4]);
    }

    #[test]
    fn random_state_is_seeded_and_normalised() {
        let a = random_state::<f64>(7, 64, StateMode::Complex).unwrap();
        let b = random_state::<f64>(7, 64, StateMode::Complex).unwrap();
        let c = random_state::<f64>(8, 64, StateMode::Complex).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.coeffs, c.coeffs);
        assert!((a.norm() - 1.0).abs() < 1e-12);
        let r = random_state::<f64>(7, 64, StateMode::Real).unwrap();
        assert!(r.coeffs.iter().all(|c| c.im == 0.0));
        assert!(random_state::<f64>(1, 0, StateMode::Real).is_err());
    }

    #[test]
    fn excursions_of_a_cosine() {
        let sig = FnSignal {
            f: |t: f64| (2.0 * t).cos(),
            step: 0.1,
        };
        let st = find_crossings(&sig, 50, 0.0).unwrap();
        let half_period = std::f64::consts::PI / 2.0;
        assert!((st.crossings[0] - half_period / 2.0).abs() < 1e-6);
        assert!((st.mu_plus - half_period).abs() < 1e-6);
        assert!((st.mu_minus - half_period).abs() < 1e-6);
        assert!(st.var_plus <= 1e-12 * st.mu_plus * st.mu_plus);
        assert_eq!(st.te_plus, st.var_plus / st.mu_plus);
        assert!(!st.positive[0]);
        assert!(st.positive.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn timeout_carries_partial_crossings() {
        let sig = FnSignal {
            f: |t: f64| t.cos(),
            step: 0.1,
        };
        match find_crossings_until(&sig, 10, 0.0, 5.0) {
            Err(Error::Timeout {
                found,
                partial_crossings,
                ..
            }) => {
                assert_eq!(found, 2);
                assert_eq!(partial_crossings.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn prefix_matches_shorter_run() {
        let sig = FnSignal {
            f: |t: f64| t.cos() + 0.7 * (2.3 * t).sin(),
            step: 0.05,
        };
        let long = find_crossings(&sig, 40, 0.0).unwrap();
        let short = find_crossings(&sig, 20, 0.0).unwrap();
        assert_eq!(long.prefix(20), short);
    }

    #[test]
    fn packed_form_matches_direct_sum() {
        let p = ModelParams::<f64>::periodic(1.0, 0.4, 0.7, 4).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let spec = diagonalize(&h).unwrap();
        let state = random_state(3, 16, StateMode::Complex).unwrap();
        let o = PauliSum::single(4, 1, Pauli::Z, 1.0).unwrap();
        let fs = build_fluctuation(&spec, &state, &o).unwrap();
        for &t in &[0.0, 0.3, 1.7, 12.5] {
            let direct = fs.expectation_direct(t) - fs.mean;
            assert!((fs.eval(t) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_toy_signal() {
        // E = (0, ω), ⟨0|O|1⟩ = a, c = (1, 1)/√2 ⇒ f = Re(a e^{iωt})
        let omega = 1.3;
        let a = Complex::new(0.4, -0.3);
        let spec = SpectrumData {
            energies: vec![0.0, omega],
            eigenvectors: DMatrix::identity(2, 2),
            degeneracy_groups: vec![0..1, 1..2],
        };
        let mut o = PauliSum::<f64>::zero(1).unwrap();
        // Build O = [[0, a], [a*, 0]] = Re(a) X − Im(a) Y
        o.add_term(crate::pauli::PauliString::single(0, Pauli::X), Complex::new(a.re, 0.0));
        o.add_term(crate::pauli::PauliString::single(0, Pauli::Y), Complex::new(-a.im, 0.0));
        let s = 0.5f64.sqrt();
        let state = RandomState {
            coeffs: vec![Complex::new(s, 0.0), Complex::new(s, 0.0)],
            seed: 0,
            mode: StateMode::Real,
        };
        let fs = build_fluctuation(&spec, &state, &o).unwrap();
        assert!(fs.mean.abs() < 1e-15);
        for &t in &[0.0, 0.5, 2.0, 9.0] {
            let want = (a * Complex::new(0.0, omega * t).exp()).re;
            assert!((fs.eval(t) - want).abs() < 1e-14);
        }
        assert!((fs.sample_step - 1.0 / (4.0 * omega)).abs() < 1e-15);
    }
}
