//! Rotating-frame pulse Hamiltonians.
//!
//! During a pulse with laser detuning `Δ` the chain evolves under the
//! time-independent operator
//!
//! ```text
//! H̃ = −Δ Σ_j n_j + (Ω/2) Σ_j σˣ_j + Σ_j V_j n_j n_{j+1} + Σ_j V'_j n_j n_{j+2}
//! ```
//!
//! obtained by moving into the frame that rotates with the laser phase
//! `e^{−iΔt}`. Between pulses of different detuning the frame changes, which
//! is accounted for by [`frame_switch_phase`].

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use super::geometry::{disordered_couplings, ideal_couplings, ideal_nnn, ChainGeometry, CouplingTable};
use super::params::ModelParams;
use crate::error::{Error, Result};
use crate::hilbert::{hilbert_dim, max_hermiticity_error, site_mask, DensityMatrix, PureState};
use crate::scalar::{cr, Complex, Real};

/// Dense Hermitian operator on the `2^N` occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator<T: Real> {
    matrix: DMatrix<Complex<T>>,
    n_sites: usize,
    detuning: T,
}

impl<T: Real> HermitianOperator<T> {
    pub fn new(n_sites: usize, matrix: DMatrix<Complex<T>>, detuning: T) -> Result<Self> {
        let dim = hilbert_dim(n_sites);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let herm = max_hermiticity_error(&matrix);
        if herm > Float::max(T::lit(1e-12), T::epsilon() * T::lit(64.0)) {
            return Err(Error::NonHermitianInput(herm.as_f64()));
        }
        Ok(Self { matrix, n_sites, detuning })
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Frame detuning the operator was built for.
    pub fn detuning(&self) -> T {
        self.detuning
    }
}

/// Coupling table the Hamiltonian uses: ideal values for an undisplaced
/// chain, otherwise recomputed from the displaced positions.
pub fn chain_couplings<T: Real>(geometry: &ChainGeometry<T>, params: &ModelParams<T>) -> Result<CouplingTable<T>> {
    let c6 = params.c6_for(geometry.r1());
    if geometry.is_clean() {
        let nnn = ideal_nnn(geometry.r1(), geometry.r2(), c6);
        Ok(ideal_couplings(geometry.n_sites(), params.v1, params.v2, nnn))
    } else {
        disordered_couplings(geometry, c6)
    }
}

/// Hamiltonian of pulse type `pulse_index` (1 or 2) with the mismatch
/// from `params`.
pub fn build_pulse_hamiltonian<T: Real>(
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    pulse_index: u8,
) -> Result<HermitianOperator<T>> {
    if pulse_index != 1 && pulse_index != 2 {
        return Err(Error::InvalidParams(format!("pulse index {pulse_index} is not 1 or 2")));
    }
    let couplings = chain_couplings(geometry, params)?;
    Ok(hamiltonian_with_detuning(geometry.n_sites(), params, &couplings, params.detuning(pulse_index)))
}

/// Hamiltonian for an arbitrary frame detuning `delta`.
pub fn hamiltonian_with_detuning<T: Real>(
    n: usize,
    params: &ModelParams<T>,
    couplings: &CouplingTable<T>,
    delta: T,
) -> HermitianOperator<T> {
    let dim = hilbert_dim(n);
    let half_omega = cr(params.omega / T::lit(2.0));
    let mut h = DMatrix::<Complex<T>>::zeros(dim, dim);
    for i in 0..dim {
        let occ = |site: usize| i & site_mask(n, site) != 0;
        let m = T::from_usize_lossy(i.count_ones() as usize);
        let mut diag = -delta * m;
        for (j, v) in couplings.nn.iter().enumerate() {
            if occ(j + 1) && occ(j + 2) {
                diag += *v;
            }
        }
        if params.include_nnn {
            for (j, v) in couplings.nnn.iter().enumerate() {
                if occ(j + 1) && occ(j + 3) {
                    diag += *v;
                }
            }
        }
        h[(i, i)] = cr(diag);
        for site in 1..=n {
            h[(i ^ site_mask(n, site), i)] = half_omega;
        }
    }
    HermitianOperator { matrix: h, n_sites: n, detuning: delta }
}

/// Diagonal unitary `exp(i (Δ_next − Δ_prev) t_switch m)` on sectors of
/// total excitation number `m`, mapping a state from the frame rotating at
/// `Δ_prev` into the one rotating at `Δ_next` at absolute time `t_switch`.
#[derive(Clone, Debug, PartialEq)]
pub struct FramePhase<T: Real> {
    phases: DVector<Complex<T>>,
}

impl<T: Real> FramePhase<T> {
    pub fn phases(&self) -> &DVector<Complex<T>> {
        &self.phases
    }

    pub fn is_identity(&self) -> bool {
        self.phases.iter().all(|z| z.re == T::one() && z.im == T::zero())
    }

    pub fn apply_pure(&self, state: &PureState<T>) -> PureState<T> {
        let amps = state.amplitudes().component_mul(&self.phases);
        PureState::from_raw(state.n_sites(), amps)
    }

    pub fn apply_density(&self, rho: &DensityMatrix<T>) -> DensityMatrix<T> {
        let mut m = rho.matrix().clone();
        let dim = m.nrows();
        for j in 0..dim {
            let pj = self.phases[j].conj();
            for i in 0..dim {
                m[(i, j)] = self.phases[i] * m[(i, j)] * pj;
            }
        }
        DensityMatrix::from_raw(rho.n_sites(), m)
    }
}

pub fn frame_switch_phase<T: Real>(n: usize, delta_prev: T, delta_next: T, t_switch: T) -> FramePhase<T> {
    let dim = hilbert_dim(n);
    let rate = (delta_next - delta_prev) * t_switch;
    let by_sector: Vec<Complex<T>> = (0..=n)
        .map(|m| {
            let phi = rate * T::from_usize_lossy(m);
            Complex::new(Float::cos(phi), Float::sin(phi))
        })
        .collect();
    let phases = if delta_prev == delta_next {
        DVector::from_element(dim, cr(T::one()))
    } else {
        DVector::from_iterator(dim, (0..dim).map(|i| by_sector[i.count_ones() as usize]))
    };
    FramePhase { phases }
}
