use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::PureState;
use crate::model::HermitianOperator;
use crate::scalar::{Complex, Real};

/// Cached eigendecomposition `H = V diag(E) V†` giving `exp(−iHt)` for any `t`.
#[derive(Clone, Debug)]
pub struct Propagator<T: Real> {
    eigenvectors: DMatrix<Complex<T>>,
    eigenvalues: DVector<T>,
    n_sites: usize,
}

impl<T: Real> Propagator<T> {
    pub fn new(h: &HermitianOperator<T>) -> Self {
        let eig = SymmetricEigen::new(h.matrix().clone());
        Self { eigenvectors: eig.eigenvectors, eigenvalues: eig.eigenvalues, n_sites: h.n_sites() }
    }

    pub fn eigenvalues(&self) -> &DVector<T> {
        &self.eigenvalues
    }

    /// `exp(−iHt)|ψ⟩`.
    pub fn evolve(&self, state: &PureState<T>, t: T) -> Result<PureState<T>> {
        if state.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch { expected: self.n_sites, got: state.n_sites() });
        }
        if t == T::zero() {
            return Ok(state.clone());
        }
        let mut coeffs = self.eigenvectors.ad_mul(state.amplitudes());
        for (c, e) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            let phi = -*e * t;
            *c *= Complex::new(Float::cos(phi), Float::sin(phi));
        }
        Ok(PureState::from_raw(self.n_sites, &self.eigenvectors * coeffs))
    }

    /// Dense `exp(−iHt)`.
    pub fn unitary(&self, t: T) -> DMatrix<Complex<T>> {
        let phases = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|e| {
                let phi = -*e * t;
                Complex::new(Float::cos(phi), Float::sin(phi))
            }),
        );
        let scaled = DMatrix::from_fn(self.eigenvectors.nrows(), self.eigenvectors.ncols(), |i, j| {
            self.eigenvectors[(i, j)] * phases[j]
        });
        scaled * self.eigenvectors.adjoint()
    }
}

/// `exp(−iH·duration)|ψ⟩` via Hermitian eigendecomposition.
pub fn evolve_unitary<T: Real>(state: &PureState<T>, h: &HermitianOperator<T>, duration: T) -> Result<PureState<T>> {
    if h.n_sites() != state.n_sites() {
        return Err(Error::DimensionMismatch { expected: h.n_sites(), got: state.n_sites() });
    }
    if duration < T::zero() {
        return Err(Error::NonPositiveInput("duration"));
    }
    Propagator::new(h).evolve(state, duration)
}
