//! Occupation-basis bookkeeping for an `N`-site chain of two-level atoms.
//!
//! Basis states are labelled by occupation patterns `b_1 b_2 … b_N`
//! (`0` = ground, `1` = Rydberg). Site 1 is the most significant bit of the
//! basis index, so a pattern prints in the same left-to-right order as the
//! chain. Sites are numbered from 1 in every public API.

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::{cr, Complex, Real};

/// Classical occupation of every site, site 1 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupationPattern {
    bits: Vec<u8>,
}

impl OccupationPattern {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidPattern("empty pattern".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidPattern(format!("occupation {b} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    /// Parse a ket string such as `"00010000"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidPattern(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }

    /// All-ground pattern of `n` sites.
    pub fn vacuum(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    /// Single Rydberg excitation at `site` (1-based).
    pub fn single_excitation(n: usize, site: usize) -> Result<Self> {
        if site == 0 || site > n {
            return Err(Error::IndexOutOfRange(format!("site {site} in a chain of {n}")));
        }
        let mut bits = vec![0; n];
        bits[site - 1] = 1;
        Self::new(bits)
    }

    /// Inverse of [`basis_index`].
    pub fn from_index(index: usize, n: usize) -> Self {
        let bits = (0..n).map(|j| ((index >> (n - 1 - j)) & 1) as u8).collect();
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn excitation_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

impl fmt::Display for OccupationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Position of `pattern` in the `2^N` occupation basis.
pub fn basis_index(pattern: &OccupationPattern) -> usize {
    pattern
        .bits
        .iter()
        .fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Bit mask selecting `site` (1-based) in a basis index of an `n`-site chain.
#[inline]
pub fn site_mask(n: usize, site: usize) -> usize {
    1 << (n - site)
}

#[inline]
pub(crate) fn hilbert_dim(n: usize) -> usize {
    1usize << n
}

/// Normalized state vector over the occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    amplitudes: DVector<Complex<T>>,
    n_sites: usize,
}

impl<T: Real> PureState<T> {
    /// Wrap an amplitude vector; it must already be normalized.
    pub fn new(n_sites: usize, amplitudes: DVector<Complex<T>>) -> Result<Self> {
        let dim = hilbert_dim(n_sites);
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if Float::abs(norm - T::one()) > T::state_tol() {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, n_sites })
    }

    pub(crate) fn from_raw(n_sites: usize, amplitudes: DVector<Complex<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), hilbert_dim(n_sites));
        Self { amplitudes, n_sites }
    }

    /// Computational basis state.
    pub fn basis(pattern: &OccupationPattern) -> Self {
        let n = pattern.len();
        let mut amplitudes = DVector::zeros(hilbert_dim(n));
        amplitudes[basis_index(pattern)] = cr(T::one());
        Self { amplitudes, n_sites: n }
    }

    /// `(|…1_a 0_b…⟩ + |…0_a 1_b…⟩)/√2` on an otherwise empty chain.
    pub fn bell_pair(n: usize, a: usize, b: usize) -> Result<Self> {
        if a == b || a == 0 || b == 0 || a > n || b > n {
            return Err(Error::InvalidSites { a, b, n });
        }
        let pa = OccupationPattern::single_excitation(n, a)?;
        let pb = OccupationPattern::single_excitation(n, b)?;
        make_pure(&[pa, pb], &[cr(T::one()), cr(T::one())])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex<T>> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<Complex<T>> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    pub fn probability(&self, pattern: &OccupationPattern) -> T {
        self.amplitudes[basis_index(pattern)].norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityMatrix::from_raw(self.n_sites, m)
    }

    pub fn site_populations(&self) -> Vec<T> {
        let n = self.n_sites;
        let mut pops = vec![T::zero(); n];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if p == T::zero() {
                continue;
            }
            for (s, pop) in pops.iter_mut().enumerate() {
                if i & site_mask(n, s + 1) != 0 {
                    *pop += p;
                }
            }
        }
        pops
    }

    pub fn partial_trace(&self, a: usize, b: usize) -> Result<ReducedTwoAtomState<T>> {
        let n = self.n_sites;
        let (ma, mb) = pair_masks(n, a, b)?;
        let psi = &self.amplitudes;
        let mut out = Matrix4::<Complex<T>>::zeros();
        for rest in (0..hilbert_dim(n)).filter(|i| i & (ma | mb) == 0) {
            let idx = slot_indices(rest, ma, mb);
            for x in 0..4 {
                let ax = psi[idx[x]];
                if ax == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for y in 0..4 {
                    out[(x, y)] += ax * psi[idx[y]].conj();
                }
            }
        }
        Ok(ReducedTwoAtomState { matrix: out, sites: (a, b) })
    }
}

/// Density matrix of an `N`-site chain.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: DMatrix<Complex<T>>,
    n_sites: usize,
}

impl<T: Real> DensityMatrix<T> {
    /// Validated constructor: Hermitian, unit trace and positive semidefinite.
    pub fn new(n_sites: usize, matrix: DMatrix<Complex<T>>) -> Result<Self> {
        let dim = hilbert_dim(n_sites);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let rho = Self { matrix, n_sites };
        rho.check()?;
        Ok(rho)
    }

    pub(crate) fn from_raw(n_sites: usize, matrix: DMatrix<Complex<T>>) -> Self {
        debug_assert_eq!(matrix.nrows(), hilbert_dim(n_sites));
        Self { matrix, n_sites }
    }

    /// Re-run the invariant checks (used on integrator outputs).
    pub fn check(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > T::state_tol() {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
        }
        let tr = self.trace();
        if Float::abs(tr - T::one()) > T::trace_tol() {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -T::trace_tol() {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.matrix
    }

    pub fn trace(&self) -> T {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    /// Largest elementwise `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> T {
        max_hermiticity_error(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> T {
        let sym = hermitian_part(&self.matrix);
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(T::infinity(), Float::min)
    }

    pub fn site_populations(&self) -> Vec<T> {
        let n = self.n_sites;
        let mut pops = vec![T::zero(); n];
        for i in 0..self.dim() {
            let p = self.matrix[(i, i)].re;
            for (s, pop) in pops.iter_mut().enumerate() {
                if i & site_mask(n, s + 1) != 0 {
                    *pop += p;
                }
            }
        }
        pops
    }

    pub fn partial_trace(&self, a: usize, b: usize) -> Result<ReducedTwoAtomState<T>> {
        let n = self.n_sites;
        let (ma, mb) = pair_masks(n, a, b)?;
        let mut out = Matrix4::<Complex<T>>::zeros();
        for rest in (0..hilbert_dim(n)).filter(|i| i & (ma | mb) == 0) {
            let idx = slot_indices(rest, ma, mb);
            for x in 0..4 {
                for y in 0..4 {
                    out[(x, y)] += self.matrix[(idx[x], idx[y])];
                }
            }
        }
        Ok(ReducedTwoAtomState { matrix: out, sites: (a, b) })
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let diff = hermitian_part(&(&self.matrix - &other.matrix));
        let eig = diff.symmetric_eigenvalues();
        Ok(eig.iter().map(|e| Float::abs(*e)).sum::<T>() * T::lit(0.5))
    }
}

/// Either representation; dynamics dispatch on the variant.
#[derive(Clone, Debug, PartialEq)]
pub enum QuantumState<T: Real> {
    Pure(PureState<T>),
    Mixed(DensityMatrix<T>),
}

impl<T: Real> QuantumState<T> {
    pub fn n_sites(&self) -> usize {
        match self {
            Self::Pure(s) => s.n_sites(),
            Self::Mixed(r) => r.n_sites(),
        }
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        match self {
            Self::Pure(s) => s.to_density(),
            Self::Mixed(r) => r.clone(),
        }
    }
}

impl<T: Real> From<PureState<T>> for QuantumState<T> {
    fn from(s: PureState<T>) -> Self {
        Self::Pure(s)
    }
}

impl<T: Real> From<DensityMatrix<T>> for QuantumState<T> {
    fn from(r: DensityMatrix<T>) -> Self {
        Self::Mixed(r)
    }
}

/// Two-site reduced density matrix in the basis `|00⟩, |01⟩, |10⟩, |11⟩`
/// with site `a` in the left slot.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedTwoAtomState<T: Real> {
    matrix: Matrix4<Complex<T>>,
    sites: (usize, usize),
}

impl<T: Real> ReducedTwoAtomState<T> {
    pub fn new(matrix: Matrix4<Complex<T>>, sites: (usize, usize)) -> Self {
        Self { matrix, sites }
    }

    pub fn matrix(&self) -> &Matrix4<Complex<T>> {
        &self.matrix
    }

    pub fn sites(&self) -> (usize, usize) {
        self.sites
    }

    pub fn trace(&self) -> T {
        (0..4).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                worst = Float::max(worst, (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> T {
        let sym = (self.matrix + self.matrix.adjoint()) * cr(T::lit(0.5));
        sym.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(T::infinity(), Float::min)
    }
}

/// Build a normalized superposition `Σ c_k |pattern_k⟩`.
pub fn make_pure<T: Real>(
    patterns: &[OccupationPattern],
    amplitudes: &[Complex<T>],
) -> Result<PureState<T>> {
    if patterns.len() != amplitudes.len() {
        return Err(Error::LengthMismatch { patterns: patterns.len(), amplitudes: amplitudes.len() });
    }
    let Some(first) = patterns.first() else {
        return Err(Error::ZeroVector);
    };
    let n = first.len();
    let mut psi = DVector::<Complex<T>>::zeros(hilbert_dim(n));
    let mut seen = std::collections::HashSet::new();
    for (p, &c) in patterns.iter().zip(amplitudes) {
        if p.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: p.len() });
        }
        if !seen.insert(basis_index(p)) {
            return Err(Error::DuplicatePattern(p.to_string()));
        }
        psi[basis_index(p)] = c;
    }
    let norm = psi.norm();
    if norm == T::zero() {
        return Err(Error::ZeroVector);
    }
    psi.unscale_mut(norm);
    Ok(PureState::from_raw(n, psi))
}

pub fn partial_trace<T: Real>(state: &QuantumState<T>, a: usize, b: usize) -> Result<ReducedTwoAtomState<T>> {
    match state {
        QuantumState::Pure(s) => s.partial_trace(a, b),
        QuantumState::Mixed(r) => r.partial_trace(a, b),
    }
}

pub fn site_populations<T: Real>(state: &QuantumState<T>) -> Vec<T> {
    match state {
        QuantumState::Pure(s) => s.site_populations(),
        QuantumState::Mixed(r) => r.site_populations(),
    }
}

/// `⟨target|ρ|target⟩` for a two-atom target state.
pub fn state_fidelity<T: Real>(reduced: &ReducedTwoAtomState<T>, target: &PureState<T>) -> Result<T> {
    if target.n_sites() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: target.n_sites() });
    }
    let herm = reduced.hermiticity_error();
    if herm > T::state_tol() {
        return Err(Error::NonHermitianInput(herm.as_f64()));
    }
    let t = Vector4::from_iterator(target.amplitudes().iter().copied());
    let value = (t.adjoint() * reduced.matrix() * t)[(0, 0)];
    if Float::abs(value.im) > T::state_tol() {
        return Err(Error::NonHermitianInput(value.im.as_f64()));
    }
    Ok(value.re)
}

/// Symmetric Bell state `(|01⟩ + |10⟩)/√2` of two atoms.
pub fn psi_plus<T: Real>() -> PureState<T> {
    PureState::bell_pair(2, 1, 2).expect("two-site Bell pair")
}

fn pair_masks(n: usize, a: usize, b: usize) -> Result<(usize, usize)> {
    if a == 0 || a >= b || b > n {
        return Err(Error::InvalidSites { a, b, n });
    }
    Ok((site_mask(n, a), site_mask(n, b)))
}

#[inline]
fn slot_indices(rest: usize, ma: usize, mb: usize) -> [usize; 4] {
    [rest, rest | mb, rest | ma, rest | ma | mb]
}

pub(crate) fn max_hermiticity_error<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for j in 0..n {
        for i in j..n {
            worst = Float::max(worst, (m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part<T: Real>(m: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    (m + m.adjoint()) * cr(T::lit(0.5))
}
