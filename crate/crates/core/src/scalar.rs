//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f32` and `f64`. The trait carries the few hooks that cannot be expressed
//! through `num-traits` alone (dense eigensolvers), so generic code never
//! needs to name the linear-algebra backend's own scalar traits.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar used throughout the crate.
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + Default + Sum + Debug + Display + Send + Sync + 'static
{
    /// Absolute magnitude below which Pauli coefficients are dropped.
    const PRUNE: Self;

    /// Machine epsilon, as a constant.
    const EPS: Self;

    /// Converts an `f64` literal. Never fails for the supported types.
    fn lit(x: f64) -> Self;

    /// Lossy conversion used at I/O boundaries.
    fn to_f64_lossy(self) -> f64;

    /// Eigendecomposition of a real symmetric matrix.
    ///
    /// Eigenvalues are returned in ascending order together with the matching
    /// orthonormal eigenvectors (as columns).
    fn symmetric_eigen(matrix: DMatrix<Self>) -> (Vec<Self>, DMatrix<Self>);

    /// Eigendecomposition of a complex Hermitian matrix, ascending order.
    fn hermitian_eigen(matrix: DMatrix<Complex<Self>>) -> (Vec<Self>, DMatrix<Complex<Self>>);
}

macro_rules! impl_real {
    ($t:ty, $prune:expr) => {
        impl Real for $t {
            const PRUNE: Self = $prune;
            const EPS: Self = <$t>::EPSILON;

            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn to_f64_lossy(self) -> f64 {
                self as f64
            }

            fn symmetric_eigen(matrix: DMatrix<Self>) -> (Vec<Self>, DMatrix<Self>) {
                let eig = matrix.symmetric_eigen();
                sort_eigenpairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
            }

            fn hermitian_eigen(matrix: DMatrix<Complex<Self>>) -> (Vec<Self>, DMatrix<Complex<Self>>) {
                let eig = matrix.symmetric_eigen();
                sort_eigenpairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
            }
        }
    };
}

impl_real!(f64, 1e-14);
// f32 round-off sits near 1e-7, so ghosts are pruned at a matching scale.
impl_real!(f32, 1e-6);

fn sort_eigenpairs<R: Real, S: nalgebra::Scalar + Copy>(values: &[R], vectors: &DMatrix<S>) -> (Vec<R>, DMatrix<S>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("NaN eigenvalue"));
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = vectors.select_columns(order.iter());
    (sorted_values, sorted_vectors)
}

/// `i^k` for an integer phase exponent.
#[inline]
pub fn i_pow<T: Real>(k: u8) -> Complex<T> {
    match k & 3 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), -T::one()),
    }
}

/// Conjugate transpose of a complex matrix.
pub fn adjoint<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    m.transpose().map(|c| c.conj())
}
