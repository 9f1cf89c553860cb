//! Operator-space Lanczos recursion and Krylov complexity.
//!
//! The Liouvillian `L = [H, ·]` is tridiagonalised in the Hilbert–Schmidt
//! geometry starting from a normalised operator `O_0`:
//!
//! ```text
//! A_n = [H, O_{n-1}] − b_{n-1} O_{n-2},   b_n = ‖A_n‖,   O_n = A_n / b_n
//! ```
//!
//! The Krylov wavefunctions obey `∂t ψ_k = −b_{k+1} ψ_{k+1} + b_k ψ_{k-1}`
//! with `ψ_k(0) = δ_{k0}`. They are obtained here by exact exponentiation of
//! the Jacobi matrix, never by time stepping.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::pauli::{DenseOperator, PauliSum};
use crate::scalar::{adjoint, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReorthMode {
    /// Gram–Schmidt against every previous Krylov vector at each step.
    Full,
    /// Plain three-term recursion.
    None,
}

impl std::str::FromStr for ReorthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ReorthMode::Full),
            "none" => Ok(ReorthMode::None),
            other => Err(Error::Config(format!("unknown reorthogonalization mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions<T: Real> {
    /// Maximum number of coefficients `b_n` to compute.
    pub max_steps: usize,
    /// Relative termination tolerance: the recursion stops once
    /// `b_n < tol · max(b_1, 1)`.
    pub tol: T,
    pub reorth: ReorthMode,
    /// Return the Krylov basis alongside the coefficients.
    pub keep_basis: bool,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        LanczosOptions {
            max_steps: 200,
            tol: T::lit(1e-8),
            reorth: ReorthMode::Full,
            keep_basis: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LanczosResult<T: Real> {
    /// `b_1 … b_{K-1}`, all above the termination threshold.
    pub b: Vec<T>,
    /// Krylov dimension `K` (number of basis operators generated).
    pub krylov_dim: usize,
    pub basis: Option<Vec<PauliSum<T>>>,
    pub reorth_mode: ReorthMode,
    /// `true` when `max_steps` ran out before the recursion terminated.
    pub exhausted: bool,
}

impl<T: Real> LanczosResult<T> {
    /// Result for a bare coefficient sequence (no basis), e.g. from an
    /// oracle or a file.
    pub fn from_coefficients(b: Vec<T>) -> Self {
        LanczosResult {
            krylov_dim: b.len() + 1,
            b,
            basis: None,
            reorth_mode: ReorthMode::Full,
            exhausted: false,
        }
    }
}

fn one<T: Real>() -> Complex<T> {
    Complex::new(T::one(), T::zero())
}

/// Lanczos recursion of `[H, ·]` on the symbolic Pauli backend.
pub fn lanczos<T: Real>(h: &PauliSum<T>, o: &PauliSum<T>, opts: &LanczosOptions<T>) -> Result<LanczosResult<T>> {
    if h.n_sites() != o.n_sites() {
        return Err(Error::SizeMismatch {
            left: h.n_sites(),
            right: o.n_sites(),
        });
    }
    let norm = o.hs_norm();
    if norm <= T::PRUNE {
        return Err(Error::DegenerateInput("initial operator has zero norm".into()));
    }
    let retain_all = opts.reorth == ReorthMode::Full || opts.keep_basis;
    // `basis` holds every Krylov vector when `retain_all`, otherwise only the
    // last two (`offset` counts the dropped ones).
    let mut basis = vec![o.scale_real(norm.recip())];
    let mut offset = 0usize;
    let mut b: Vec<T> = Vec::new();
    let mut threshold = T::zero();
    let mut terminated = false;

    for n in 1..=opts.max_steps {
        let mut a = h.commutator(&basis[n - 1 - offset])?;
        if n >= 2 {
            a.axpy(Complex::new(-b[n - 2], T::zero()), &basis[n - 2 - offset])?;
        }
        if opts.reorth == ReorthMode::Full {
            for k in (0..n).rev() {
                let overlap = basis[k].hs_inner(&a)?;
                if overlap.norm() > T::zero() {
                    a.axpy(-overlap, &basis[k])?;
                }
            }
        }
        let bn = a.hs_norm();
        if n == 1 {
            threshold = opts.tol * bn.max(T::one());
        }
        if bn < threshold || bn <= T::PRUNE {
            terminated = true;
            break;
        }
        b.push(bn);
        basis.push(a.scale_real(bn.recip()));
        if !retain_all && basis.len() > 2 {
            basis.remove(0);
            offset += 1;
        }
    }

    let krylov_dim = b.len() + 1;
    Ok(LanczosResult {
        krylov_dim,
        b,
        basis: if opts.keep_basis { Some(basis) } else { None },
        reorth_mode: opts.reorth,
        exhausted: !terminated,
    })
}

/// The same recursion carried out on dense `D × D` matrices.
///
/// Independent of the Pauli algebra; used to cross-check [`lanczos`].
pub fn lanczos_dense<T: Real>(h: &DenseOperator<T>, o: &DenseOperator<T>, max_steps: usize, tol: T) -> Result<Vec<T>> {
    let norm = o.hs_norm();
    if norm <= T::PRUNE {
        return Err(Error::DegenerateInput("initial operator has zero norm".into()));
    }
    let scale = |m: &DenseOperator<T>, s: Complex<T>| DenseOperator {
        matrix: m.matrix.map(|c| c * s),
    };
    let mut basis = vec![scale(o, Complex::new(norm.recip(), T::zero()))];
    let mut b: Vec<T> = Vec::new();
    let mut threshold = T::zero();
    for n in 1..=max_steps {
        let mut a = h.commutator(&basis[n - 1])?;
        if n >= 2 {
            a.matrix -= basis[n - 2].matrix.map(|c| c * b[n - 2]);
        }
        for k in (0..n).rev() {
            let overlap = basis[k].hs_inner(&a)?;
            a.matrix -= basis[k].matrix.map(|c| c * overlap);
        }
        let bn = a.hs_norm();
        if n == 1 {
            threshold = tol * bn.max(T::one());
        }
        if bn < threshold {
            break;
        }
        b.push(bn);
        basis.push(scale(&a, Complex::new(bn.recip(), T::zero())));
    }
    Ok(b)
}

/// Largest `|(O_m|O_n) − δ_mn|` over a retained Krylov basis.
pub fn orthonormality_defect<T: Real>(basis: &[PauliSum<T>]) -> Result<T> {
    let mut worst = T::zero();
    for (m, om) in basis.iter().enumerate() {
        for (n, on) in basis.iter().enumerate().skip(m) {
            let target = if m == n { one() } else { Complex::default() };
            worst = worst.max((om.hs_inner(on)? - target).norm());
        }
    }
    Ok(worst)
}

/// Even moments `μ_{2k} = (O|L^{2k} O) = ‖L^k O‖²`, `k = 0..=k_max`, of the
/// normalised operator, from nested commutators.
pub fn liouvillian_moments<T: Real>(h: &PauliSum<T>, o: &PauliSum<T>, k_max: usize) -> Result<Vec<T>> {
    let norm = o.hs_norm();
    if norm <= T::PRUNE {
        return Err(Error::DegenerateInput("initial operator has zero norm".into()));
    }
    let mut current = o.scale_real(norm.recip());
    let mut mu = vec![T::one()];
    for _ in 0..k_max {
        current = h.commutator(&current)?;
        let m = current.hs_norm();
        mu.push(m * m);
    }
    Ok(mu)
}

fn determinant<T: Real>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(row);
            for (dst, &v) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= f * v;
            }
        }
    }
    det
}

/// Lanczos coefficients from even moments via Hankel determinants.
///
/// `mu[k]` holds `μ_{2k}` (odd moments vanish); `mu[0]` must be 1. With
/// `D_n = det(μ_{i+j})_{0≤i,j≤n}` the coefficients follow from
/// `(b_1 ⋯ b_n)² = D_n / D_{n−1}`. Moments are rescaled by `μ_2` before the
/// determinants are formed. Intended for small `n` only: the Hankel matrix
/// is exponentially ill-conditioned.
pub fn moments_to_lanczos<T: Real>(mu: &[T]) -> Result<Vec<T>> {
    if mu.is_empty() || (mu[0] - T::one()).abs() > T::lit(1e-10) {
        return Err(Error::DegenerateInput(
            "moment sequence must start with mu_0 = 1".into(),
        ));
    }
    let k_max = mu.len() - 1;
    if k_max == 0 || mu[1] <= T::zero() {
        return Ok(Vec::new());
    }
    let s2 = mu[1];
    // Scaled moments m_j = μ_j / s2^{j/2} over all orders j (odd ones zero).
    let moment = |j: usize| -> T {
        if j % 2 == 1 {
            T::zero()
        } else {
            mu[j / 2] / s2.powi((j / 2) as i32)
        }
    };
    let tiny = T::lit(1e-12);
    let mut b = Vec::new();
    let mut prev_det = T::one(); // D_0 = μ_0
    let mut prev_prod = T::one(); // (b_1 ⋯ b_{n-1})², scaled
    for n in 1..=k_max {
        let hankel: Vec<Vec<T>> = (0..=n).map(|i| (0..=n).map(|j| moment(i + j)).collect()).collect();
        let det = determinant(hankel);
        let prod = det / prev_det;
        let bn2 = prod / prev_prod;
        if bn2 < -tiny.sqrt() {
            return Err(Error::MomentInconsistency {
                order: n,
                value: det.to_f64_lossy(),
            });
        }
        if bn2 <= tiny {
            break;
        }
        b.push((bn2 * s2).sqrt());
        prev_det = det;
        prev_prod = prod;
    }
    Ok(b)
}

/// Least-squares line `b_n ≈ α n + c` over a window of Lanczos indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovFit<T: Real> {
    pub alpha: T,
    pub intercept: T,
    /// Inclusive 1-based window `(n_min, n_max)`.
    pub window: (usize, usize),
    pub t_lambda: T,
    /// RMS deviation of the fitted points from the line.
    pub residual: T,
}

/// Default fit window: starts at `n = 3` to skip the short-`n` transient and
/// ends just before the local slope of `b_n` falls below half of its running
/// maximum (onset of the finite-size plateau).
///
/// The local slope at `n` is a least-squares slope over `n ± 8`, clipped to the
/// sequence. Near-integrable sequences alternate between small and large
/// entries, so a shorter stencil trips the plateau test early. The drop must
/// also persist for three consecutive `n` before it counts.
pub fn default_window<T: Real>(b: &[T]) -> (usize, usize) {
    const N_MIN: usize = 3;
    const HALF_WIDTH: usize = 8;
    const PERSIST: usize = 3;
    let len = b.len();
    if len < N_MIN + 3 {
        return (N_MIN.min(len.max(1)), len);
    }
    let local_slope = |n: usize| {
        let lo = n.saturating_sub(HALF_WIDTH).max(1);
        let hi = (n + HALF_WIDTH).min(len);
        let xs: Vec<T> = (lo..=hi).map(|k| T::from_usize(k).unwrap()).collect();
        least_squares_line(&xs, &b[lo - 1..hi]).slope
    };
    let mut running_max = T::neg_infinity();
    let mut below = 0;
    let mut n_max = len;
    for n in N_MIN..=len {
        let s = local_slope(n);
        running_max = running_max.max(s);
        if running_max > T::zero() && s < T::lit(0.5) * running_max {
            below += 1;
            if below >= PERSIST {
                n_max = n - PERSIST;
                break;
            }
        } else {
            below = 0;
        }
    }
    (N_MIN, n_max.max(N_MIN + 3))
}

pub fn fit_alpha<T: Real>(res: &LanczosResult<T>, window: (usize, usize)) -> Result<LyapunovFit<T>> {
    let (n_min, n_max) = window;
    if n_min < 1 || n_max > res.b.len() || n_max < n_min || n_max - n_min + 1 < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: if n_min >= 1 && n_max <= res.b.len() && n_max >= n_min {
                n_max - n_min + 1
            } else {
                0
            },
        });
    }
    let xs: Vec<T> = (n_min..=n_max).map(|n| T::from_usize(n).unwrap()).collect();
    let ys: Vec<T> = (n_min..=n_max).map(|n| res.b[n - 1]).collect();
    let line = least_squares_line(&xs, &ys);
    if !(line.slope > T::zero()) {
        return Err(Error::NoGrowth {
            alpha: line.slope.to_f64_lossy(),
            n_min,
            n_max,
        });
    }
    Ok(LyapunovFit {
        alpha: line.slope,
        intercept: line.intercept,
        window,
        t_lambda: line.slope.recip(),
        residual: line.rms,
    })
}

/// Ordinary least-squares line through `(x, y)` with standard errors.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Line<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_stderr: T,
    pub intercept_stderr: T,
    pub rms: T,
}

pub(crate) fn least_squares_line<T: Real>(xs: &[T], ys: &[T]) -> Line<T> {
    let n = T::from_usize(xs.len()).unwrap();
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: T = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    let dof = n - T::lit(2.0);
    let sigma2 = if dof > T::zero() { sse / dof } else { T::zero() };
    let sumx2: T = xs.iter().map(|&x| x * x).sum();
    Line {
        slope,
        intercept,
        slope_stderr: (sigma2 / sxx).sqrt(),
        intercept_stderr: (sigma2 * sumx2 / (n * sxx)).sqrt(),
        rms: (sse / n).sqrt(),
    }
}

/// Krylov wavefunctions on a time grid.
#[derive(Clone, Debug)]
pub struct KrylovWave<T: Real> {
    pub t_grid: Vec<T>,
    /// `psi[t][n] = ψ_n(t)`; real for Hermitian `H` and `O`.
    pub psi: Vec<Vec<T>>,
    /// Krylov complexity `K(t) = Σ_n n |ψ_n(t)|²`.
    pub k_t: Vec<T>,
}

impl<T: Real> KrylovWave<T> {
    pub fn krylov_dim(&self) -> usize {
        self.psi.first().map_or(0, Vec::len)
    }

    pub fn psi0(&self) -> Vec<T> {
        self.psi.iter().map(|p| p[0]).collect()
    }

    /// `Σ_n |ψ_n(t)|²` at every grid time.
    pub fn total_probability(&self) -> Vec<T> {
        self.psi.iter().map(|p| p.iter().map(|&x| x * x).sum()).collect()
    }

    /// First grid time at which `K(t)` reaches half the largest Krylov
    /// index, an alternative operator-growth time; `None` if never reached.
    pub fn tau_star(&self) -> Option<T> {
        let target = T::from_usize(self.krylov_dim().saturating_sub(1)).unwrap() / T::lit(2.0);
        if target <= T::zero() {
            return None;
        }
        self.t_grid
            .iter()
            .zip(&self.k_t)
            .find(|(_, &k)| k >= target)
            .map(|(&t, _)| t)
    }
}

/// Exact Krylov wavefunctions from the Lanczos coefficients.
///
/// With `T` the symmetric tridiagonal matrix of off-diagonals `b_n`, the
/// recursion generator is `S (−iT) S⁻¹`, `S = diag(iⁿ)`, hence
/// `ψ_n(t) = Re(iⁿ [e^{−iTt}]_{n0})`.
pub fn propagate_wave<T: Real>(res: &LanczosResult<T>, t_grid: &[T]) -> KrylovWave<T> {
    let k = res.b.len() + 1;
    let mut jac = DMatrix::<T>::zeros(k, k);
    for (n, &bn) in res.b.iter().enumerate() {
        jac[(n, n + 1)] = bn;
        jac[(n + 1, n)] = bn;
    }
    let (lambda, v) = T::symmetric_eigen(jac);
    let mut psi = Vec::with_capacity(t_grid.len());
    let mut k_t = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        // phase_j = e^{−iλ_j t} V_{0j}
        let phase: Vec<Complex<T>> = lambda
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                let (s, c) = (l * t).sin_cos();
                Complex::new(c, -s) * v[(0, j)]
            })
            .collect();
        let row: Vec<T> = (0..k)
            .map(|n| {
                let mut amp = Complex::<T>::default();
                for (j, ph) in phase.iter().enumerate() {
                    amp += ph * v[(n, j)];
                }
                // multiply by i^n and keep the real part
                match n % 4 {
                    0 => amp.re,
                    1 => -amp.im,
                    2 => -amp.re,
                    _ => amp.im,
                }
            })
            .collect();
        k_t.push(
            row.iter()
                .enumerate()
                .map(|(n, &x)| T::from_usize(n).unwrap() * x * x)
                .sum(),
        );
        psi.push(row);
    }
    KrylovWave {
        t_grid: t_grid.to_vec(),
        psi,
        k_t,
    }
}

/// Autocorrelation `(O(t)|O)` of the normalised operator by exact
/// diagonalisation of `H` (dense backend).
///
/// In the energy eigenbasis this is `Σ_{mn} |O_mn|² cos((E_m − E_n) t) / D`.
pub fn autocorrelation_direct<T: Real>(h: &PauliSum<T>, o: &PauliSum<T>, t_grid: &[T]) -> Result<Vec<T>> {
    let hd = h.to_dense()?;
    let norm = o.hs_norm();
    if norm <= T::PRUNE {
        return Err(Error::DegenerateInput("initial operator has zero norm".into()));
    }
    let od = o.scale_real(norm.recip()).to_dense()?;
    let (energies, v) = T::hermitian_eigen(hd.matrix);
    let o_eig = adjoint(&v) * od.matrix * &v;
    let dim = energies.len();
    let d = T::from_usize(dim).unwrap();
    // Collect (ω, weight) pairs once; the grid loop is then a cosine sum.
    let mut weights: Vec<(T, T)> = Vec::with_capacity(dim * (dim + 1) / 2);
    let mut constant = T::zero();
    for m in 0..dim {
        constant += o_eig[(m, m)].norm_sqr() / d;
        for n in m + 1..dim {
            let w = T::lit(2.0) * o_eig[(m, n)].norm_sqr() / d;
            if w > T::zero() {
                weights.push((energies[m] - energies[n], w));
            }
        }
    }
    Ok(t_grid
        .iter()
        .map(|&t| constant + weights.iter().map(|&(w, a)| a * (w * t).cos()).sum::<T>())
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Window<T> {
    None,
    /// `exp(−t² / 2σ²)`.
    Gaussian {
        sigma: T,
    },
}

#[derive(Clone, Debug)]
pub struct SpectralFunction<T: Real> {
    pub omega: Vec<T>,
    pub phi: Vec<T>,
    pub window: Window<T>,
    /// Set when `|ψ_0|` had not decayed below `1e-3` by the end of the grid.
    pub insufficient_decay: bool,
}

impl<T: Real> SpectralFunction<T> {
    /// Growth rate implied by an exponential tail `Φ ∼ e^{−π|ω|/2α}`, from a
    /// log-linear fit over `[omega_min, omega_max]`. Points where `Φ` is not
    /// positive are skipped.
    pub fn decay_alpha(&self, omega_min: T, omega_max: T) -> Option<T> {
        let (xs, ys): (Vec<T>, Vec<T>) = self
            .omega
            .iter()
            .zip(&self.phi)
            .filter(|(&w, &p)| w >= omega_min && w <= omega_max && p > T::zero())
            .map(|(&w, &p)| (w, p.ln()))
            .unzip();
        if xs.len() < 3 {
            return None;
        }
        let line = least_squares_line(&xs, &ys);
        if line.slope >= T::zero() {
            return None;
        }
        Some(-T::PI() / (T::lit(2.0) * line.slope))
    }

    pub fn peak(&self) -> Option<(T, T)> {
        self.omega
            .iter()
            .zip(&self.phi)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(&w, &p)| (w, p))
    }
}

/// `Φ(ω) = ∫ ψ_0(t) e^{iωt} dt` for an even real autocorrelation sampled on
/// a uniform grid starting at `t = 0`.
///
/// Computed as `2 ∫_0^T w(t) ψ_0(t) cos(ωt) dt` with the trapezoid rule.
/// When `window` is `None` and the signal has not decayed, a Gaussian window
/// with `σ = T/4` is applied and the result flagged.
pub fn spectral_function<T: Real>(
    psi0: &[T],
    t_grid: &[T],
    omega: &[T],
    window: Option<Window<T>>,
) -> Result<SpectralFunction<T>> {
    if psi0.len() != t_grid.len() || psi0.len() < 2 {
        return Err(Error::Alignment(
            "autocorrelation and time grid differ in length".into(),
        ));
    }
    let dt = t_grid[1] - t_grid[0];
    let t_end = *t_grid.last().unwrap();
    let insufficient_decay = psi0[psi0.len() - 1].abs() > T::lit(1e-3);
    let window = window.unwrap_or(if insufficient_decay {
        Window::Gaussian {
            sigma: t_end / T::lit(4.0),
        }
    } else {
        Window::None
    });
    let weighted: Vec<T> = t_grid
        .iter()
        .zip(psi0)
        .enumerate()
        .map(|(i, (&t, &p))| {
            let w = match window {
                Window::None => T::one(),
                Window::Gaussian { sigma } => (-(t * t) / (T::lit(2.0) * sigma * sigma)).exp(),
            };
            let trap = if i == 0 || i + 1 == t_grid.len() {
                T::lit(0.5)
            } else {
                T::one()
            };
            p * w * trap * dt
        })
        .collect();
    let phi = omega
        .iter()
        .map(|&w| {
            T::lit(2.0)
                * t_grid
                    .iter()
                    .zip(&weighted)
                    .map(|(&t, &p)| p * (w * t).cos())
                    .sum::<T>()
        })
        .collect();
    Ok(SpectralFunction {
        omega: omega.to_vec(),
        phi,
        window,
        insufficient_decay,
    })
}

/// Uniform grid `start, start + step, …` with `len` points.
pub fn uniform_grid<T: Real>(start: T, step: T, len: usize) -> Vec<T> {
    (0..len).map(|i| start + step * T::from_usize(i).unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, build_observable, ModelParams, ObservableKind, ObservableSpec};
    use crate::pauli::Pauli;

    fn free_spin(h: f64, n: usize) -> (PauliSum<f64>, PauliSum<f64>) {
        let p = ModelParams::<f64>::periodic(0.0, 0.0, h, n).unwrap();
        (
            build_hamiltonian(&p).unwrap(),
            PauliSum::single(n, 0, Pauli::Z, 1.0).unwrap(),
        )
    }

    #[test]
    fn free_spin_closes_after_one_step() {
        let (h, o) = free_spin(0.7, 4);
        let res = lanczos(&h, &o, &LanczosOptions::default()).unwrap();
        assert_eq!(res.krylov_dim, 2);
        assert!(!res.exhausted);
        assert!((res.b[0] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn conserved_operator_has_trivial_krylov_space() {
        let p = ModelParams::<f64>::periodic(1.0, 0.0, 0.9, 6).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let o = build_observable(&ObservableSpec::new(ObservableKind::LrnIk(2), p).unwrap()).unwrap();
        let res = lanczos(&h, &o, &LanczosOptions::default()).unwrap();
        assert!(res.b.is_empty());
        assert_eq!(res.krylov_dim, 1);
        let wave = propagate_wave(&res, &uniform_grid::<f64>(0.0, 0.5, 20));
        assert!(wave.psi0().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(wave.k_t.iter().all(|&k| k == 0.0));
    }

    #[test]
    fn zero_operator_rejected() {
        let (h, _) = free_spin(1.0, 2);
        let zero = PauliSum::zero(2).unwrap();
        assert!(matches!(
            lanczos(&h, &zero, &LanczosOptions::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn max_steps_flags_exhaustion() {
        let p = ModelParams::<f64>::periodic(1.0, 0.5, 1.0, 5).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let o = PauliSum::single(5, 0, Pauli::Z, 1.0).unwrap();
        let opts = LanczosOptions {
            max_steps: 5,
            ..Default::default()
        };
        let res = lanczos(&h, &o, &opts).unwrap();
        assert_eq!(res.b.len(), 5);
        assert!(res.exhausted);
    }

    #[test]
    fn no_reorth_matches_full_at_small_n() {
        let p = ModelParams::<f64>::periodic(1.0, 0.5, 1.0, 5).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let o = PauliSum::single(5, 0, Pauli::Z, 1.0).unwrap();
        let full = lanczos(
            &h,
            &o,
            &LanczosOptions {
                max_steps: 8,
                ..Default::default()
            },
        )
        .unwrap();
        let plain = lanczos(
            &h,
            &o,
            &LanczosOptions {
                max_steps: 8,
                reorth: ReorthMode::None,
                ..Default::default()
            },
        )
        .unwrap();
        for (&a, &b) in full.b.iter().zip(&plain.b) {
            assert!((a - b).abs() < 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn two_level_wave() {
        let h: f64 = 0.35;
        let res = LanczosResult::from_coefficients(vec![2.0 * h]);
        let grid = uniform_grid::<f64>(0.0, 0.1, 100);
        let wave = propagate_wave(&res, &grid);
        for (i, &t) in grid.iter().enumerate() {
            let (s, c) = (2.0 * h * t).sin_cos();
            assert!((wave.psi[i][0] - c).abs() < 1e-12);
            assert!((wave.psi[i][1] - s).abs() < 1e-12);
            assert!((wave.k_t[i] - s * s).abs() < 1e-12);
        }
    }

    #[test]
    fn wave_initial_condition_and_unitarity() {
        let b: Vec<f64> = (1..40).map(|n| 0.4 * n as f64 + 0.3 * ((n * 7) % 5) as f64).collect();
        let wave = propagate_wave(
            &LanczosResult::from_coefficients(b),
            &uniform_grid::<f64>(0.0, 0.05, 200),
        );
        assert!((wave.psi[0][0] - 1.0).abs() < 1e-12);
        assert!(wave.k_t[0].abs() < 1e-12);
        for p in wave.total_probability() {
            assert!((p - 1.0).abs() < 1e-10);
        }
    }

    /// ψ_k from a forward-Euler-free reference: RK4 on the recursion with a
    /// tiny step.
    #[test]
    fn wave_matches_ode_integration() {
        let b = vec![1.0, 1.7, 2.2, 2.9, 3.1];
        let k = b.len() + 1;
        let rhs = |psi: &[f64]| -> Vec<f64> {
            (0..k)
                .map(|n| {
                    let up = if n + 1 < k { -b[n] * psi[n + 1] } else { 0.0 };
                    let down = if n > 0 { b[n - 1] * psi[n - 1] } else { 0.0 };
                    up + down
                })
                .collect()
        };
        let mut psi = vec![0.0; k];
        psi[0] = 1.0;
        let dt = 1e-4;
        for _ in 0..20000 {
            let k1 = rhs(&psi);
            let s2: Vec<f64> = psi.iter().zip(&k1).map(|(p, d)| p + 0.5 * dt * d).collect();
            let k2 = rhs(&s2);
            let s3: Vec<f64> = psi.iter().zip(&k2).map(|(p, d)| p + 0.5 * dt * d).collect();
            let k3 = rhs(&s3);
            let s4: Vec<f64> = psi.iter().zip(&k3).map(|(p, d)| p + dt * d).collect();
            let k4 = rhs(&s4);
            for (n, p) in psi.iter_mut().enumerate().take(k) {
                *p += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
            }
        }
        let wave = propagate_wave(&LanczosResult::from_coefficients(b.clone()), &[2.0]);
        for (n, (a, b)) in wave.psi[0].iter().zip(&psi).enumerate() {
            assert!((a - b).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn moments_of_cosine() {
        let h: f64 = 0.6;
        let mu: Vec<f64> = (0..6).map(|k| (2.0 * h).powi(2 * k)).collect();
        let b = moments_to_lanczos(&mu).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b[0] - 2.0 * h).abs() < 1e-12);
        assert!(moments_to_lanczos(&[1.0, 0.0, 0.0]).unwrap().is_empty());
        assert!(moments_to_lanczos(&[2.0, 1.0]).is_err());
    }

    #[test]
    fn moments_recover_known_chain() {
        // Moments of the Jacobi chain b = (1, 2, 3): μ_2k = [T^{2k}]_00.
        let b = [1.0, 2.0, 3.0];
        let mut t = DMatrix::<f64>::zeros(4, 4);
        for (n, &x) in b.iter().enumerate() {
            t[(n, n + 1)] = x;
            t[(n + 1, n)] = x;
        }
        let t2 = &t * &t;
        let mut p = DMatrix::<f64>::identity(4, 4);
        let mut mu = vec![1.0];
        for _ in 0..5 {
            p = &p * &t2;
            mu.push(p[(0, 0)]);
        }
        let rec = moments_to_lanczos(&mu).unwrap();
        assert_eq!(rec.len(), 3);
        for (a, e) in rec.iter().zip(&b) {
            assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_line_fit() {
        let b: Vec<f64> = (1..=20).map(|n| 0.5 * n as f64).collect();
        let res = LanczosResult::from_coefficients(b);
        let fit = fit_alpha(&res, (3, 12)).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12);
        assert!((fit.t_lambda - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.t_lambda, 1.0 / fit.alpha);
    }

    #[test]
    fn fit_rejects_flat_and_short_windows() {
        let res = LanczosResult::from_coefficients(vec![1.0; 10]);
        assert!(matches!(fit_alpha(&res, (3, 9)), Err(Error::NoGrowth { .. })));
        assert!(matches!(fit_alpha(&res, (3, 5)), Err(Error::InsufficientData { .. })));
        assert!(matches!(fit_alpha(&res, (3, 11)), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn window_stops_at_plateau() {
        let mut b: Vec<f64> = (1..=15).map(|n| 0.8 * n as f64).collect();
        b.extend(std::iter::repeat_n(12.0, 20));
        let (n_min, n_max) = default_window(&b);
        assert_eq!(n_min, 3);
        assert!((13..=17).contains(&n_max), "n_max = {n_max}");
    }

    #[test]
    fn spectral_function_of_cosine_peaks_at_frequency() {
        let grid = uniform_grid::<f64>(0.0, 0.02, 5000);
        let psi0: Vec<f64> = grid.iter().map(|&t| (1.5 * t).cos()).collect();
        let omega = uniform_grid::<f64>(0.0, 0.01, 400);
        let sf = spectral_function(&psi0, &grid, &omega, None).unwrap();
        assert!(sf.insufficient_decay);
        let (w, _) = sf.peak().unwrap();
        assert!((w - 1.5).abs() < 0.02);
    }

    #[test]
    fn spectral_function_of_gaussian_is_gaussian() {
        // ψ0 = e^{−t²/2} ⇒ Φ(ω) = √(2π) e^{−ω²/2}
        let grid = uniform_grid::<f64>(0.0, 0.01, 1500);
        let psi0: Vec<f64> = grid.iter().map(|&t| (-t * t / 2.0).exp()).collect();
        let omega = uniform_grid::<f64>(0.0, 0.1, 40);
        let sf = spectral_function(&psi0, &grid, &omega, None).unwrap();
        assert!(!sf.insufficient_decay);
        for (&w, &p) in sf.omega.iter().zip(&sf.phi) {
            let exact = (2.0 * std::f64::consts::PI).sqrt() * (-w * w / 2.0).exp();
            assert!((p - exact).abs() < 1e-6, "ω = {w}");
        }
    }

    #[test]
    fn exponential_tail_recovers_alpha() {
        // ψ0 = sech(αt)^{…}: the Lorentzian-like pair ψ0 = 1/cosh(αt) has
        // Φ(ω) = (π/α) sech(πω/2α), tail e^{−π|ω|/2α}.
        let alpha: f64 = 0.8;
        let grid = uniform_grid::<f64>(0.0, 0.01, 5000);
        let psi0: Vec<f64> = grid.iter().map(|&t| 1.0 / (alpha * t).cosh()).collect();
        let omega = uniform_grid::<f64>(0.0, 0.05, 200);
        let sf = spectral_function(&psi0, &grid, &omega, None).unwrap();
        let est = sf.decay_alpha(3.0, 8.0).unwrap();
        assert!((est - alpha).abs() / alpha < 0.02, "estimate {est}");
    }
}
