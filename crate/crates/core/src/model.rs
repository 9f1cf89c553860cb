//! Quantum Ising chain Hamiltonian and the conserved-quantity families of
//! its two integrable limits.
//!
//! Sites are 1-based in the public types of this module, matching the usual
//! physics labelling `σ_1 … σ_N`; the Pauli layer underneath is 0-based.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum, MAX_SITES};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Open,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "open" => Ok(Boundary::Open),
            other => Err(Error::Config(format!("unknown boundary {other:?}"))),
        }
    }
}

/// Couplings of `H = −Σ_i (J σz_i σz_{i+1} + g σz_i + h σx_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T: Real> {
    pub j: T,
    pub g: T,
    pub h: T,
    pub n_sites: usize,
    pub boundary: Boundary,
}

impl<T: Real> ModelParams<T> {
    pub fn new(j: T, g: T, h: T, n_sites: usize, boundary: Boundary) -> Result<Self> {
        let p = ModelParams {
            j,
            g,
            h,
            n_sites,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn periodic(j: T, g: T, h: T, n_sites: usize) -> Result<Self> {
        ModelParams::new(j, g, h, n_sites, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites > MAX_SITES {
            return Err(Error::Config(format!(
                "chain length must lie in 2..={MAX_SITES}, got {}",
                self.n_sites
            )));
        }
        if !(self.j.is_finite() && self.g.is_finite() && self.h.is_finite()) {
            return Err(Error::Config("couplings must be finite".into()));
        }
        Ok(())
    }

    /// Nearest-neighbour bonds as 0-based site pairs.
    fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n_sites;
        match self.boundary {
            Boundary::Periodic => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            Boundary::Open => (0..n - 1).map(|i| (i, i + 1)).collect(),
        }
    }
}

/// Observables studied near the two integrable limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum ObservableKind {
    /// `σz_i`, conserved at `h = 0`.
    SrnSite(usize),
    /// `Σ_i σz_i`.
    SrnSum,
    /// `I^(k)`, conserved at `g = 0`.
    LrnIk(usize),
    /// `Π_i σx_i`.
    Parity,
}

impl ObservableKind {
    /// Site or `k` index, 0 for the index-free kinds.
    pub fn index(&self) -> usize {
        match *self {
            ObservableKind::SrnSite(i) | ObservableKind::LrnIk(i) => i,
            ObservableKind::SrnSum | ObservableKind::Parity => 0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObservableKind::SrnSite(_) => "srn_site",
            ObservableKind::SrnSum => "srn_sum",
            ObservableKind::LrnIk(_) => "lrn_ik",
            ObservableKind::Parity => "parity",
        }
    }

    pub fn parse(kind: &str, index: usize) -> Result<Self> {
        match kind {
            "srn_site" => Ok(ObservableKind::SrnSite(index)),
            "srn_sum" => Ok(ObservableKind::SrnSum),
            "lrn_ik" => Ok(ObservableKind::LrnIk(index)),
            "parity" => Ok(ObservableKind::Parity),
            other => Err(Error::Config(format!("unknown observable kind {other:?}"))),
        }
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        match *self {
            ObservableKind::SrnSite(i) if i < 1 || i > n_sites => Err(Error::IndexOutOfRange {
                what: "srn_site",
                index: i,
                min: 1,
                max: n_sites,
            }),
            ObservableKind::LrnIk(k) if k < 1 || k + 1 > n_sites => Err(Error::IndexOutOfRange {
                what: "lrn_ik",
                index: k,
                min: 1,
                max: n_sites - 1,
            }),
            _ => Ok(()),
        }
    }
}

/// An observable bound to the model it lives in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSpec<T: Real> {
    pub kind: ObservableKind,
    pub params: ModelParams<T>,
}

impl<T: Real> ObservableSpec<T> {
    pub fn new(kind: ObservableKind, params: ModelParams<T>) -> Result<Self> {
        params.validate()?;
        kind.validate(params.n_sites)?;
        Ok(ObservableSpec { kind, params })
    }
}

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

pub fn build_hamiltonian<T: Real>(p: &ModelParams<T>) -> Result<PauliSum<T>> {
    p.validate()?;
    let n = p.n_sites;
    let mut h = PauliSum::zero(n)?;
    for (a, b) in p.bonds() {
        let zz = PauliString::from_factors(&[(a, Pauli::Z), (b, Pauli::Z)]);
        h.add_term(zz, real(-p.j));
    }
    for i in 0..n {
        h.add_term(PauliString::single(i, Pauli::Z), real(-p.g));
        h.add_term(PauliString::single(i, Pauli::X), real(-p.h));
    }
    Ok(h)
}

/// `σ^α_j (Π_{n=1}^{l−1} σx_{j+n}) σ^β_{j+l}` with 0-based `j` and periodic
/// wrap of the site index.
fn capped_string(n_sites: usize, j: usize, l: usize, alpha: Pauli, beta: Pauli) -> PauliString {
    let mut s = PauliString::single(j % n_sites, alpha);
    for m in 1..l {
        s = s.with((j + m) % n_sites, Pauli::X);
    }
    s.with((j + l) % n_sites, beta)
}

pub fn build_observable<T: Real>(spec: &ObservableSpec<T>) -> Result<PauliSum<T>> {
    let p = &spec.params;
    let n = p.n_sites;
    spec.kind.validate(n)?;
    match spec.kind {
        ObservableKind::SrnSite(i) => PauliSum::single(n, i - 1, Pauli::Z, T::one()),
        ObservableKind::SrnSum => {
            let mut o = PauliSum::zero(n)?;
            for i in 0..n {
                o.add_term(PauliString::single(i, Pauli::Z), real(T::one()));
            }
            Ok(o)
        }
        ObservableKind::LrnIk(k) => {
            // Written with Hermitian σy, the TFIM charge reads
            // J Σ_j (S^{zy} − S^{yz}); the usual `iJ` prefactor belongs to the
            // real-matrix convention σy → σz σx.
            let mut o = PauliSum::zero(n)?;
            let last = match p.boundary {
                Boundary::Periodic => n,
                Boundary::Open => n - k,
            };
            for j in 0..last {
                o.add_term(capped_string(n, j, k, Pauli::Z, Pauli::Y), real(p.j));
                o.add_term(capped_string(n, j, k, Pauli::Y, Pauli::Z), real(-p.j));
            }
            Ok(o)
        }
        ObservableKind::Parity => {
            let s = (0..n).fold(PauliString::IDENTITY, |s, i| s.with(i, Pauli::X));
            PauliSum::from_string(n, s, real(T::one()))
        }
    }
}

/// `‖[H, O]‖` in the Hilbert–Schmidt norm; zero exactly for conserved `O`.
pub fn conservation_residual<T: Real>(o: &PauliSum<T>, h: &PauliSum<T>) -> Result<T> {
    let c = h.commutator(o)?;
    Ok(c.hs_inner(&c)?.re.max(T::zero()).sqrt())
}
