//! Symbolic algebra of N-site Pauli strings.
//!
//! A string is stored as a pair of bit masks: bit `j` of `x` marks an X
//! factor on site `j`, bit `j` of `z` a Z factor, both bits together a Y.
//! The canonical operator for a mask pair is the Hermitian tensor product of
//! I, X, Y, Z. Products are tracked with integer phase exponents of `i`
//! using `Y = i X Z`, so the algebra never accumulates floating phase drift.
//!
//! Sites are 0-based in this module.

use std::collections::hash_map::Entry;
use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use num_complex::Complex;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::scalar::{i_pow, Real};

/// Largest chain length representable by the bit-mask encoding.
pub const MAX_SITES: usize = 16;

/// Largest chain length accepted by the dense backend.
pub const MAX_DENSE_SITES: usize = 12;

/// Single-site Pauli factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// Phase-free Pauli string (the canonical Hermitian operator for its masks).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    x: u32,
    z: u32,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn from_masks(x: u32, z: u32) -> Self {
        PauliString { x, z }
    }

    /// String with a single non-identity factor on `site`.
    pub fn single(site: usize, op: Pauli) -> Self {
        PauliString::IDENTITY.with(site, op)
    }

    /// Builds a string from `(site, factor)` pairs. Later pairs overwrite
    /// earlier ones on the same site.
    pub fn from_factors(factors: &[(usize, Pauli)]) -> Self {
        factors
            .iter()
            .fold(PauliString::IDENTITY, |s, &(site, op)| s.with(site, op))
    }

    /// Returns a copy with the factor on `site` replaced by `op`.
    pub fn with(self, site: usize, op: Pauli) -> Self {
        let bit = 1u32 << site;
        let (x, z) = op.bits();
        PauliString {
            x: if x { self.x | bit } else { self.x & !bit },
            z: if z { self.z | bit } else { self.z & !bit },
        }
    }

    pub fn x_mask(self) -> u32 {
        self.x
    }

    pub fn z_mask(self) -> u32 {
        self.z
    }

    pub fn factor(self, site: usize) -> Pauli {
        Pauli::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    /// Number of non-identity factors.
    pub fn weight(self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of Y factors; the canonical string equals `i^y_count X^x Z^z`.
    #[inline]
    fn y_count(self) -> u32 {
        (self.x & self.z).count_ones()
    }

    #[inline]
    pub fn commutes_with(self, other: PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// Product of canonical strings: `self · other = i^e · result`.
    #[inline]
    pub fn product(self, other: PauliString) -> (u8, PauliString) {
        let result = PauliString {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // i^{y1} X^{x1} Z^{z1} · i^{y2} X^{x2} Z^{z2}
        //   = i^{y1+y2} (-1)^{z1·x2} X^{x3} Z^{z3}
        //   = i^{y1+y2+2(z1·x2)-y3} P3
        let e = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4 - result.y_count() % 4;
        ((e % 4) as u8, result)
    }

    /// Action on a computational basis state `b` (bit `j` set means site `j`
    /// is spin down): `P|b> = phase · |b ^ x>`, phase as a power of `i`.
    #[inline]
    pub fn act_on_basis(self, b: usize) -> (u8, usize) {
        let minus = ((self.z as usize) & b).count_ones() % 2;
        let e = (self.y_count() + 2 * minus) % 4;
        (e as u8, b ^ self.x as usize)
    }

    pub fn label(self, n_sites: usize) -> String {
        (0..n_sites).map(|j| self.factor(j).to_char()).collect()
    }

    /// Parses an `N`-character label over `{I, X, Y, Z}`; character `j` is
    /// site `j`.
    pub fn parse_label(label: &str) -> Result<(usize, PauliString)> {
        let mut s = PauliString::IDENTITY;
        let mut n = 0;
        for (j, c) in label.chars().enumerate() {
            let op =
                Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("invalid Pauli factor {c:?} in {label:?}")))?;
            if j >= MAX_SITES {
                return Err(Error::Capacity {
                    what: "Pauli string",
                    max: MAX_SITES,
                    got: label.chars().count(),
                });
            }
            s = s.with(j, op);
            n += 1;
        }
        if n == 0 {
            return Err(Error::Parse("empty Pauli label".into()));
        }
        Ok((n, s))
    }
}

/// A Pauli string with an exact phase `i^phase_exp`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliTerm {
    pub string: PauliString,
    pub phase_exp: u8,
    pub n_sites: usize,
}

impl PauliTerm {
    pub fn new(n_sites: usize, string: PauliString, phase_exp: u8) -> Result<Self> {
        check_sites(n_sites)?;
        if (string.x | string.z) >> n_sites != 0 {
            return Err(Error::IndexOutOfRange {
                what: "Pauli string site",
                index: 31 - (string.x | string.z).leading_zeros() as usize,
                min: 0,
                max: n_sites - 1,
            });
        }
        Ok(PauliTerm {
            string,
            phase_exp: phase_exp % 4,
            n_sites,
        })
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        PauliTerm::new(n_sites, PauliString::IDENTITY, 0)
    }

    /// Exact product `self · other`.
    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        same_sites(self.n_sites, other.n_sites)?;
        let (e, string) = self.string.product(other.string);
        Ok(PauliTerm {
            string,
            phase_exp: (self.phase_exp + other.phase_exp + e) % 4,
            n_sites: self.n_sites,
        })
    }

    pub fn coefficient<T: Real>(&self) -> Complex<T> {
        i_pow(self.phase_exp)
    }
}

/// Linear combination of Pauli strings with complex coefficients.
///
/// Coefficients with magnitude at or below [`Real::PRUNE`] are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum<T: Real> {
    n_sites: usize,
    terms: FxHashMap<PauliString, Complex<T>>,
}

impl<T: Real> PauliSum<T> {
    /// Empty (zero) operator on `n_sites` sites.
    pub fn zero(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        Ok(PauliSum {
            n_sites,
            terms: FxHashMap::default(),
        })
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        let mut s = PauliSum::zero(n_sites)?;
        s.add_term(PauliString::IDENTITY, Complex::new(T::one(), T::zero()));
        Ok(s)
    }

    /// `coef · string`.
    pub fn from_string(n_sites: usize, string: PauliString, coef: Complex<T>) -> Result<Self> {
        let term = PauliTerm::new(n_sites, string, 0)?;
        let mut s = PauliSum::zero(n_sites)?;
        s.add_term(term.string, coef);
        Ok(s)
    }

    pub fn from_term(term: &PauliTerm, coef: Complex<T>) -> Result<Self> {
        PauliSum::from_string(term.n_sites, term.string, coef * term.coefficient::<T>())
    }

    /// Real multiple of a single Pauli factor on `site`.
    pub fn single(n_sites: usize, site: usize, op: Pauli, coef: T) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::IndexOutOfRange {
                what: "site",
                index: site,
                min: 0,
                max: n_sites.saturating_sub(1),
            });
        }
        PauliSum::from_string(n_sites, PauliString::single(site, op), Complex::new(coef, T::zero()))
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, string: PauliString) -> Complex<T> {
        self.terms.get(&string).copied().unwrap_or_default()
    }

    /// Unordered iteration over `(string, coefficient)`.
    pub fn iter(&self) -> impl Iterator<Item = (PauliString, Complex<T>)> + '_ {
        self.terms.iter().map(|(&s, &c)| (s, c))
    }

    /// Terms sorted by string, for reproducible output.
    pub fn sorted_terms(&self) -> Vec<(PauliString, Complex<T>)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|&(s, _)| s);
        v
    }

    /// Accumulates `coef · string`, pruning the entry if it cancels.
    pub fn add_term(&mut self, string: PauliString, coef: Complex<T>) {
        match self.terms.entry(string) {
            Entry::Occupied(mut e) => {
                let c = *e.get() + coef;
                if c.norm() <= T::PRUNE {
                    e.remove();
                } else {
                    *e.get_mut() = c;
                }
            }
            Entry::Vacant(e) => {
                if coef.norm() > T::PRUNE {
                    e.insert(coef);
                }
            }
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.norm() > T::PRUNE);
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        let mut out = PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(&s, &c)| (s, c * factor)).collect(),
        };
        out.prune();
        out
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    /// In-place `self += factor · other`.
    pub fn axpy(&mut self, factor: Complex<T>, other: &PauliSum<T>) -> Result<()> {
        same_sites(self.n_sites, other.n_sites)?;
        self.terms.reserve(other.terms.len());
        for (&s, &c) in &other.terms {
            self.add_term(s, factor * c);
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum<T>) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex::new(T::one(), T::zero()), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum<T>) -> Result<Self> {
        let mut out = self.clone();
        out.axpy(Complex::new(-T::one(), T::zero()), other)?;
        Ok(out)
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliSum<T>) -> Result<Self> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut out = PauliSum::zero(self.n_sites)?;
        for (&sa, &ca) in &self.terms {
            for (&sb, &cb) in &other.terms {
                let (e, s) = sa.product(sb);
                out.accumulate(s, ca * cb * i_pow::<T>(e));
            }
        }
        out.prune();
        Ok(out)
    }

    /// Commutator `[self, other] = self·other − other·self`.
    ///
    /// Only anticommuting string pairs contribute, each as `2·P·Q`.
    pub fn commutator(&self, other: &PauliSum<T>) -> Result<Self> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut out = PauliSum::zero(self.n_sites)?;
        out.terms.reserve(other.terms.len().max(self.terms.len()) * 2);
        let two = T::lit(2.0);
        let left: Vec<_> = self.sorted_terms();
        for (&sb, &cb) in &other.terms {
            for &(sa, ca) in &left {
                if !sa.commutes_with(sb) {
                    let (e, s) = sa.product(sb);
                    out.accumulate(s, ca * cb * i_pow::<T>(e) * two);
                }
            }
        }
        out.prune();
        Ok(out)
    }

    #[inline]
    fn accumulate(&mut self, string: PauliString, coef: Complex<T>) {
        *self.terms.entry(string).or_default() += coef;
    }

    /// Infinite-temperature Hilbert–Schmidt inner product `Tr(a† b) / D`.
    pub fn hs_inner(&self, other: &PauliSum<T>) -> Result<Complex<T>> {
        same_sites(self.n_sites, other.n_sites)?;
        let mut acc = Complex::default();
        if self.terms.len() <= other.terms.len() {
            for (s, ca) in &self.terms {
                if let Some(cb) = other.terms.get(s) {
                    acc += ca.conj() * cb;
                }
            }
        } else {
            for (s, cb) in &other.terms {
                if let Some(ca) = self.terms.get(s) {
                    acc += ca.conj() * cb;
                }
            }
        }
        Ok(acc)
    }

    /// `sqrt((a|a))`.
    pub fn hs_norm(&self) -> T {
        self.terms.values().map(|c| c.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        PauliSum {
            n_sites: self.n_sites,
            terms: self.terms.iter().map(|(&s, c)| (s, c.conj())).collect(),
        }
    }

    /// Hermitian iff every coefficient of a canonical string is real.
    pub fn is_hermitian(&self, tol: T) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Returns a copy with every site index shifted by `shift` (mod N).
    pub fn translate(&self, shift: usize) -> Self {
        let n = self.n_sites;
        let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
        let rot = |m: u32| {
            let k = (shift % n) as u32;
            if k == 0 {
                m
            } else {
                ((m << k) | (m >> (n as u32 - k))) & full
            }
        };
        PauliSum {
            n_sites: n,
            terms: self
                .terms
                .iter()
                .map(|(&s, &c)| (PauliString::from_masks(rot(s.x), rot(s.z)), c))
                .collect(),
        }
    }

    /// Largest coefficient magnitude of `self − other`.
    pub fn max_abs_diff(&self, other: &PauliSum<T>) -> Result<T> {
        let d = self.sub(other)?;
        Ok(d.terms.values().map(|c| c.norm()).fold(T::zero(), T::max))
    }

    /// Applies the operator to a state vector in the computational basis.
    pub fn apply(&self, psi: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let dim = 1usize << self.n_sites;
        if psi.len() != dim {
            return Err(Error::DegenerateInput(format!(
                "state of length {} for {} sites",
                psi.len(),
                self.n_sites
            )));
        }
        let mut out = vec![Complex::default(); dim];
        for (&s, &c) in &self.terms {
            for (b, &amp) in psi.iter().enumerate() {
                let (e, row) = s.act_on_basis(b);
                out[row] += c * i_pow::<T>(e) * amp;
            }
        }
        Ok(out)
    }

    /// Dense matrix in the computational basis (`D = 2^N`).
    pub fn to_dense(&self) -> Result<DenseOperator<T>> {
        if self.n_sites > MAX_DENSE_SITES {
            return Err(Error::Capacity {
                what: "dense backend",
                max: MAX_DENSE_SITES,
                got: self.n_sites,
            });
        }
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::<Complex<T>>::zeros(dim, dim);
        for (s, c) in self.sorted_terms() {
            for b in 0..dim {
                let (e, row) = s.act_on_basis(b);
                m[(row, b)] += c * i_pow::<T>(e);
            }
        }
        Ok(DenseOperator { matrix: m })
    }

    /// One term per line: `<coef_re> <coef_im> <string>`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in self.sorted_terms() {
            let _ = writeln!(
                out,
                "{:.16e} {:.16e} {}",
                c.re.to_f64_lossy(),
                c.im.to_f64_lossy(),
                s.label(self.n_sites)
            );
        }
        out
    }

    /// Inverse of [`to_text`](Self::to_text). Blank lines and `#` comments
    /// are skipped; `n_sites` is needed to type an empty operator.
    pub fn from_text(n_sites: usize, text: &str) -> Result<Self> {
        let mut out = PauliSum::zero(n_sites)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: expected `<re> <im> <string>`", lineno + 1));
            let mut fields = line.split_whitespace();
            let re: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let im: f64 = fields.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let label = fields.next().ok_or_else(bad)?;
            if fields.next().is_some() {
                return Err(bad());
            }
            let (n, s) = PauliString::parse_label(label)?;
            same_sites(n_sites, n)?;
            out.add_term(s, Complex::new(T::lit(re), T::lit(im)));
        }
        Ok(out)
    }
}

impl<T: Real> fmt::Display for PauliSum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Dense `D × D` operator, used as an independent oracle for the symbolic
/// backend.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator<T: Real> {
    pub matrix: DMatrix<Complex<T>>,
}

impl<T: Real> DenseOperator<T> {
    pub fn from_matrix(matrix: DMatrix<Complex<T>>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DegenerateInput("dense operator must be square".into()));
        }
        Ok(DenseOperator { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::SizeMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(DenseOperator {
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(DenseOperator {
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// `Tr(a† b) / D`.
    pub fn hs_inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_dim(other)?;
        let mut acc = Complex::default();
        for (a, b) in self.matrix.iter().zip(other.matrix.iter()) {
            acc += a.conj() * b;
        }
        Ok(acc / T::from_usize(self.dim()).unwrap())
    }

    pub fn hs_norm(&self) -> T {
        let s: T = self.matrix.iter().map(|c| c.norm_sqr()).sum();
        (s / T::from_usize(self.dim()).unwrap()).sqrt()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let d = self.dim();
        (0..d).all(|i| (i..d).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_dim(other)?;
        Ok(self
            .matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max))
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites == 0 || n_sites > MAX_SITES {
        return Err(Error::Capacity {
            what: "Pauli algebra",
            max: MAX_SITES,
            got: n_sites,
        });
    }
    Ok(())
}

fn same_sites(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::SizeMismatch { left, right });
    }
    Ok(())
}
