mod common;

use common::*;
use qic_core::ergodization::{
    build_fluctuation, diagonalize, find_crossings, find_crossings_until, random_state, FluctuationSeries, FnSignal,
    Signal, StateMode,
};
use qic_core::model::{build_hamiltonian, build_observable, ModelParams, ObservableKind, ObservableSpec};

/// Sign changes on a fine grid, each bisected to machine precision.
fn oracle_crossings(f: impl Fn(f64) -> f64, t_end: f64, n: usize) -> Vec<f64> {
    let h = 1e-3;
    let mut out = Vec::new();
    let mut t = 0.0;
    let mut prev = f(t);
    while t < t_end && out.len() < n {
        let next = f(t + h);
        if (prev > 0.0) != (next > 0.0) {
            let (mut lo, mut hi) = (t, t + h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == (prev > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push(0.5 * (lo + hi));
        }
        prev = next;
        t += h;
    }
    out
}

type Harmonics = fn(f64) -> f64;

#[test]
fn crossings_of_harmonic_sums_match_oracle() {
    let signals: [(Harmonics, f64); 3] = [
        (|t| t.cos() + 0.5 * (3.0 * t).cos(), 0.05),
        (
            |t| (1.3 * t).sin() + 0.3 * (4.1 * t + 0.2).cos() + 0.2 * (7.7 * t).cos(),
            0.02,
        ),
        (
            |t| 0.9 * (0.7 * t).cos() - 0.6 * (2.3 * t + 1.0).sin() + 0.45 * (2.9 * t).cos(),
            0.05,
        ),
    ];
    for (i, (f, step)) in signals.into_iter().enumerate() {
        let stats = find_crossings(&FnSignal { f, step }, 200, 0.0).unwrap();
        let want = oracle_crossings(f, 1e4, 200);
        assert_eq!(stats.crossings.len(), 200, "signal {i}");
        for (k, (a, b)) in stats.crossings.iter().zip(&want).enumerate() {
            assert!((a - b).abs() < 1e-6, "signal {i}, crossing {k}: {a} vs {b}");
        }
    }
}

#[test]
fn single_harmonic_has_no_excursion_spread() {
    let sig = FnSignal {
        f: |t: f64| (2.0 * t + 0.3).cos(),
        step: 0.1,
    };
    let s = find_crossings(&sig, 2000, 0.0).unwrap();
    let half = std::f64::consts::FRAC_PI_2;
    assert!((s.mu_plus - half).abs() < 1e-6 && (s.mu_minus - half).abs() < 1e-6);
    assert!(s.var_plus <= 1e-12 * s.mu_plus * s.mu_plus);
    assert!(s.var_minus <= 1e-12 * s.mu_minus * s.mu_minus);
}

fn chain_series(n: usize, g: f64, h: f64, kind: ObservableKind, seed: u64) -> (FluctuationSeries<f64>, M, M, Vec<C64>) {
    let p = ModelParams::periodic(1.0, g, h, n).unwrap();
    let ham = build_hamiltonian(&p).unwrap();
    let o = build_observable(&ObservableSpec::new(kind, p).unwrap()).unwrap();
    let spec = diagonalize(&ham).unwrap();
    let state = random_state(seed, spec.dim(), StateMode::Complex).unwrap();
    // Computational-basis state with the drawn eigenbasis amplitudes.
    let psi: Vec<C64> = (0..spec.dim())
        .map(|r| {
            (0..spec.dim())
                .map(|k| spec.eigenvectors[(r, k)] * state.coeffs[k])
                .sum()
        })
        .collect();
    let series = build_fluctuation(&spec, &state, &o).unwrap();
    (series, oracle_dense(&ham), oracle_dense(&o), psi)
}

fn expectation(o: &M, psi: &[C64]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(psi);
    (v.adjoint() * o * &v)[(0, 0)].re
}

/// Diagonal ensemble from projectors onto eigenspaces of the test's own
/// eigendecomposition.
fn diagonal_ensemble(h: &M, o: &M, psi: &[C64]) -> (f64, f64) {
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..h.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let v = &eig.eigenvectors;
    let amp: Vec<C64> = (0..h.nrows())
        .map(|k| (0..h.nrows()).map(|r| v[(r, k)].conj() * psi[r]).sum())
        .collect();
    let o_eig = v.adjoint() * o * v;
    let (mut with, mut naive) = (0.0, 0.0);
    for &m in &idx {
        naive += amp[m].norm_sqr() * o_eig[(m, m)].re;
        for &n in &idx {
            if (eig.eigenvalues[m] - eig.eigenvalues[n]).abs() < 1e-8 {
                with += (amp[m].conj() * o_eig[(m, n)] * amp[n]).re;
            }
        }
    }
    (with, naive)
}

#[test]
fn mean_includes_degenerate_coherences() {
    let (series, h, o, psi) = chain_series(6, 0.4, 0.8, ObservableKind::SrnSite(1), 3);
    let (with, naive) = diagonal_ensemble(&h, &o, &psi);
    assert!((series.mean - with).abs() < 1e-10, "{} vs {with}", series.mean);
    // The periodic chain is degenerate, so dropping coherences matters here.
    assert!((with - naive).abs() > 1e-6);
}

#[test]
fn fluctuation_matches_dense_time_evolution() {
    let (series, h, o, psi) = chain_series(5, 0.6, 0.9, ObservableKind::SrnSite(2), 8);
    let psi_v = nalgebra::DVector::from_column_slice(&psi);
    for &t in &[0.0, 0.37, 2.5, 41.0, 777.7] {
        // f(t) carries amplitudes c_n e^{+iE_n t}, i.e. the state at −t.
        let evolved = unitary(&h, -t) * &psi_v;
        let want = expectation(&o, evolved.as_slice()) - series.mean;
        assert!((series.eval(t) - want).abs() < 1e-10, "t = {t}");
        assert!((series.expectation_direct(t) - series.mean - want).abs() < 1e-10);
    }
}

#[test]
fn long_time_average_of_fluctuation_vanishes() {
    let (series, ..) = chain_series(5, 0.6, 0.9, ObservableKind::SrnSite(1), 4);
    let n = 200_000;
    let dt = 0.37;
    let avg: f64 = (0..n).map(|k| series.eval(k as f64 * dt)).sum::<f64>() / n as f64;
    assert!(avg.abs() < 1e-3 * series.scale(), "average {avg}");
}

/// Same signal scanned ten times more finely with exact evaluation.
struct Finer<'a>(&'a FluctuationSeries<f64>);

impl Signal<f64> for Finer<'_> {
    fn value(&self, t: f64) -> f64 {
        self.0.eval(t)
    }
    fn step(&self) -> f64 {
        self.0.sample_step / 10.0
    }
}

#[test]
fn finer_scan_finds_the_same_crossings() {
    let (series, ..) = chain_series(6, 0.5, 0.3, ObservableKind::SrnSite(1), 5);
    let coarse = find_crossings(&series, 400, 0.0).unwrap();
    let t_end = coarse.crossings.last().unwrap() + series.sample_step;
    let fine = find_crossings_until(&Finer(&series), 400, 0.0, t_end + 1.0).unwrap();
    assert_eq!(coarse.crossings.len(), fine.crossings.len());
    for (a, b) in coarse.crossings.iter().zip(&fine.crossings) {
        assert!((a - b).abs() < 1e-5 * series.sample_step, "{a} vs {b}");
    }
    assert_eq!(coarse.positive, fine.positive);
}

#[test]
fn excursions_alternate_and_tile_the_crossings() {
    let (series, ..) = chain_series(6, 0.5, 0.6, ObservableKind::SrnSite(1), 9);
    let s = find_crossings(&series, 1001, 0.0).unwrap();
    assert_eq!(s.crossings.len(), 1001);
    assert!(s.positive.windows(2).all(|w| w[0] != w[1]));
    let total: f64 = s.tau_plus.iter().chain(&s.tau_minus).sum();
    let span = s.crossings.last().unwrap() - s.crossings[0];
    assert!((total - span).abs() < 1e-9 * span);
    assert_eq!(s.tau_plus.len() + s.tau_minus.len(), 1000);
    assert!((s.te_plus - s.var_plus / s.mu_plus).abs() < 1e-12 * s.te_plus);
    // The sign inside each interval is the recorded one.
    for (w, &pos) in s.crossings.windows(2).zip(&s.positive).take(50) {
        assert_eq!(series.eval(0.5 * (w[0] + w[1])) > 0.0, pos);
    }
}

#[test]
fn seeds_reproduce_bitwise() {
    let (a, ..) = chain_series(5, 0.5, 0.6, ObservableKind::SrnSite(1), 77);
    let (b, ..) = chain_series(5, 0.5, 0.6, ObservableKind::SrnSite(1), 77);
    let sa = find_crossings(&a, 300, 0.0).unwrap();
    let sb = find_crossings(&b, 300, 0.0).unwrap();
    assert_eq!(sa.crossings, sb.crossings);
}

#[test]
fn conserved_observable_has_no_dynamics() {
    let p = ModelParams::periodic(1.0, 0.0, 0.9, 6).unwrap();
    let ham = build_hamiltonian(&p).unwrap();
    let o = build_observable(&ObservableSpec::new(ObservableKind::LrnIk(2), p).unwrap()).unwrap();
    let spec = diagonalize(&ham).unwrap();
    let state = random_state(1, spec.dim(), StateMode::Complex).unwrap();
    let err = build_fluctuation(&spec, &state, &o).unwrap_err();
    assert!(matches!(err, qic_core::Error::NoDynamics(_)), "{err}");
}
