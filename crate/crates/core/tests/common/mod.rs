//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex;
use qic_core::pauli::{PauliString, PauliSum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex<f64>;
pub type M = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// 2×2 matrix of one label character, with |0⟩ = spin up.
fn pauli_matrix(ch: char) -> M {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match ch {
        'I' => M::from_row_slice(2, 2, &[l, o, o, l]),
        'X' => M::from_row_slice(2, 2, &[o, l, l, o]),
        'Y' => M::from_row_slice(2, 2, &[o, -i, i, o]),
        'Z' => M::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => panic!("bad label {ch}"),
    }
}

/// Kronecker product of the label's factors; site `j` is bit `j` of the
/// basis index, so the last site is the leftmost factor.
pub fn kron_string(label: &str) -> M {
    label.chars().fold(M::from_element(1, 1, c(1.0, 0.0)), |acc, ch| {
        pauli_matrix(ch).kronecker(&acc)
    })
}

/// Dense matrix built from the text of each term, not from the bit masks.
pub fn oracle_dense(a: &PauliSum<f64>) -> M {
    let n = a.n_sites();
    let d = 1 << n;
    let mut m = M::zeros(d, d);
    for (s, coef) in a.iter() {
        m += kron_string(&s.label(n)) * coef;
    }
    m
}

pub fn hs(a: &M, b: &M) -> C64 {
    (a.adjoint() * b).trace() / a.nrows() as f64
}

pub fn max_diff(a: &M, b: &M) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random operator with `terms` strings on `n` sites and complex
/// coefficients uniform in the unit square.
pub fn random_sum(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> PauliSum<f64> {
    let mut s = PauliSum::zero(n).unwrap();
    let mask = (1u32 << n) - 1;
    for _ in 0..terms {
        let p = PauliString::from_masks(rng.random::<u32>() & mask, rng.random::<u32>() & mask);
        s.add_term(p, c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    }
    s
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix exponential `e^{-iHt}` of a Hermitian matrix via its eigenbasis.
pub fn unitary(h: &M, t: f64) -> M {
    let eig = h.clone().symmetric_eigen();
    let phases = M::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// `b_1 … b_n` from even moments through Hankel determinants:
/// `(b_1⋯b_k)² = Δ_k / Δ_{k−1}`, `Δ_k = det(μ_{i+j})_{0≤i,j≤k}`.
pub fn hankel_lanczos(even_moments: &[f64], n: usize) -> Vec<f64> {
    let mu = |k: usize| if k % 2 == 1 { 0.0 } else { even_moments[k / 2] };
    let det = |k: usize| DMatrix::<f64>::from_fn(k + 1, k + 1, |i, j| mu(i + j)).determinant();
    let mut out = Vec::new();
    let mut prev_prod = 1.0;
    let mut prev_det = det(0);
    for k in 1..=n {
        let d = det(k);
        let prod = (d / prev_det).sqrt();
        out.push(prod / prev_prod);
        prev_prod = prod;
        prev_det = d;
    }
    out
}

/// `μ_{2k} = ‖L^k O‖²` with dense commutators, `O` normalised first.
pub fn dense_moments(h: &M, o: &M, k_max: usize) -> Vec<f64> {
    let mut cur = o * c(1.0 / hs(o, o).re.sqrt(), 0.0);
    let mut out = vec![1.0];
    for _ in 0..k_max {
        cur = h * &cur - &cur * h;
        out.push(hs(&cur, &cur).re);
    }
    out
}
