//! Lindblad master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ]
//!       + (Γ/2) Σ_k (2 σ⁻_k ρ σ⁺_k − σ⁺_k σ⁻_k ρ − ρ σ⁺_k σ⁻_k)
//!       + (γ/2) Σ_k (σᶻ_k ρ σᶻ_k − ρ)
//! ```
//!
//! integrated on the full density matrix with an adaptive Dormand–Prince
//! 5(4) pair. All diagonal contributions (the diagonal of `H`, the
//! anticommutator of the decay term and the whole dephasing term) act
//! elementwise on `ρ` and are folded into one precomputed factor; the
//! off-diagonal part of `H` is applied as a sparse operator, and the quantum
//! jumps `σ⁻ρσ⁺` are index shifts.

use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::hilbert::{hermitian_part, site_mask, DensityMatrix};
use crate::model::HermitianOperator;
use crate::scalar::{Complex, Real};

/// Re-Hermitization corrections above this magnitude are logged as warnings.
pub const HERMITIZATION_WARN: f64 = 1e-7;

/// Off-diagonal part of `H`.
#[derive(Clone, Debug)]
enum Coupling<T: Real> {
    /// `H_{i⊕b, i} = c_b` for every `i`: a uniform transverse drive.
    Flips(Vec<(usize, T)>),
    /// Row `i`: off-diagonal `(k, H_ik)`.
    Sparse(Vec<Vec<(usize, Complex<T>)>>),
}

/// Right-hand side of the master equation for a fixed Hamiltonian and rates.
#[derive(Clone, Debug)]
pub struct LindbladGenerator<T: Real> {
    n_sites: usize,
    dim: usize,
    coupling: Coupling<T>,
    /// Column-major elementwise factor multiplying `ρ_ij`.
    elementwise: Vec<Complex<T>>,
    gamma_decay: T,
}

fn detect_flips<T: Real>(m: &DMatrix<Complex<T>>, n: usize) -> Option<Vec<(usize, T)>> {
    let dim = m.nrows();
    let zero = Complex::new(T::zero(), T::zero());
    let flips: Vec<(usize, T)> = (1..=n)
        .map(|site| site_mask(n, site))
        .filter(|&b| m[(b, 0)] != zero)
        .map(|b| (b, m[(b, 0)].re))
        .collect();
    if flips.iter().any(|&(b, _)| m[(b, 0)].im != T::zero()) {
        return None;
    }
    for j in 0..dim {
        let mut expected = 0;
        for i in (0..dim).filter(|&i| i != j) {
            if m[(i, j)] == zero {
                continue;
            }
            match flips.iter().find(|&&(b, _)| b == i ^ j) {
                Some(&(_, c)) if m[(i, j)] == Complex::new(c, T::zero()) => expected += 1,
                _ => return None,
            }
        }
        if expected != flips.len() {
            return None;
        }
    }
    Some(flips)
}

impl<T: Real> LindbladGenerator<T> {
    pub fn new(h: &HermitianOperator<T>, gamma_decay: T, gamma_deph: T) -> Result<Self> {
        if gamma_decay < T::zero() || gamma_deph < T::zero() {
            return Err(Error::InvalidParams("dissipation rates must be non-negative".into()));
        }
        let m = h.matrix();
        let dim = m.nrows();
        let n = h.n_sites();
        let coupling = match detect_flips(m, n) {
            Some(flips) => Coupling::Flips(flips),
            None => {
                let zero = Complex::new(T::zero(), T::zero());
                let mut rows = vec![Vec::new(); dim];
                for j in 0..dim {
                    for (i, row) in rows.iter_mut().enumerate() {
                        let v = m[(i, j)];
                        if i != j && v != zero {
                            row.push((j, v));
                        }
                    }
                }
                Coupling::Sparse(rows)
            }
        };
        let half = T::lit(0.5);
        let mut elementwise = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            let dj = m[(j, j)].re;
            let mj = T::from_usize_lossy(j.count_ones() as usize);
            for i in 0..dim {
                let di = m[(i, i)].re;
                let mi = T::from_usize_lossy(i.count_ones() as usize);
                let flips = T::from_usize_lossy((i ^ j).count_ones() as usize);
                let re = -gamma_decay * half * (mi + mj) - gamma_deph * flips;
                // −i (d_i − d_j)
                elementwise.push(Complex::new(re, dj - di));
            }
        }
        Ok(Self { n_sites: n, dim, coupling, elementwise, gamma_decay })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = L(ρ)` for column-major Hermitian `ρ`. Only the upper triangle
    /// is evaluated; the lower one is filled by conjugation.
    pub fn apply(&self, rho: &[Complex<T>], out: &mut [Complex<T>]) {
        let d = self.dim;
        let n = self.n_sites;
        for j in 0..d {
            let base = j * d;
            let rows = j + 1;
            let col = &mut out[base..base + rows];
            let rho_col = &rho[base..base + d];
            for ((o, f), r) in col.iter_mut().zip(&self.elementwise[base..base + rows]).zip(rho_col) {
                *o = *f * *r;
            }
            match &self.coupling {
                Coupling::Flips(flips) => {
                    // −i Σ_b c_b ρ[i⊕b, j]
                    for (i, o) in col.iter_mut().enumerate() {
                        let mut s = Complex::new(T::zero(), T::zero());
                        for &(b, c) in flips {
                            s += rho_col[i ^ b] * c;
                        }
                        *o += Complex::new(s.im, -s.re);
                    }
                    // +i Σ_b c_b ρ[i, j⊕b]
                    for &(b, c) in flips {
                        let src = &rho[(j ^ b) * d..(j ^ b) * d + rows];
                        let cp = Complex::new(T::zero(), c);
                        for (o, r) in col.iter_mut().zip(src) {
                            *o += cp * *r;
                        }
                    }
                }
                Coupling::Sparse(h_rows) => {
                    for (i, o) in col.iter_mut().enumerate() {
                        let mut s = Complex::new(T::zero(), T::zero());
                        for &(k, h) in &h_rows[i] {
                            s += h * rho_col[k];
                        }
                        *o += Complex::new(s.im, -s.re);
                    }
                    // (ρH)_ij = Σ_k ρ_ik H_kj with H_kj = conj(H_jk)
                    for &(k, h_jk) in &h_rows[j] {
                        let c = h_jk.conj();
                        let cp = Complex::new(-c.im, c.re);
                        let src = &rho[k * d..k * d + rows];
                        for (o, r) in col.iter_mut().zip(src) {
                            *o += cp * *r;
                        }
                    }
                }
            }
            if self.gamma_decay > T::zero() {
                // Γ ρ[i|b, j|b] for b clear in both i and j
                for site in 1..=n {
                    let b = site_mask(n, site);
                    if j & b != 0 {
                        continue;
                    }
                    let src = &rho[(j | b) * d..(j | b) * d + d];
                    for (i, o) in col.iter_mut().enumerate() {
                        if i & b == 0 {
                            *o += src[i | b] * self.gamma_decay;
                        }
                    }
                }
            }
        }
        for j in 0..d {
            for i in 0..j {
                out[i * d + j] = out[j * d + i].conj();
            }
        }
    }
}

// Dormand–Prince 5(4) tableau (autonomous, so the nodes are not needed)
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Adaptive integrator state; reuse across calls to keep the step size and
/// scratch buffers.
#[derive(Clone, Debug)]
pub struct LindbladSolver<T: Real> {
    generator: LindbladGenerator<T>,
    k: Vec<Vec<Complex<T>>>,
    stage: Vec<Complex<T>>,
    err: Vec<Complex<T>>,
    fsal: bool,
    h: T,
    accepted: usize,
    rejected: usize,
}

impl<T: Real> LindbladSolver<T> {
    pub fn new(generator: LindbladGenerator<T>) -> Self {
        let len = generator.dim() * generator.dim();
        let zero = Complex::new(T::zero(), T::zero());
        Self {
            generator,
            k: vec![vec![zero; len]; 7],
            stage: vec![zero; len],
            err: vec![zero; len],
            fsal: false,
            h: T::zero(),
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Call after modifying the state outside the solver.
    pub fn invalidate(&mut self) {
        self.fsal = false;
    }

    /// Advance column-major `rho` by `duration`, keeping the per-step error
    /// estimate (max-norm) at or below `tol`.
    pub fn integrate(&mut self, rho: &mut [Complex<T>], duration: T, tol: T) -> Result<()> {
        if duration <= T::zero() {
            return Ok(());
        }
        let mut t = T::zero();
        if self.h <= T::zero() {
            self.h = Float::min(T::lit(1e-3), duration);
        }
        let min_h = T::epsilon() * T::lit(64.0) * Float::max(T::one(), duration);
        let a: Vec<Vec<T>> = A.iter().map(|row| row.iter().map(|&x| T::lit(x)).collect()).collect();
        let e: Vec<T> = E.iter().map(|&x| T::lit(x)).collect();

        while t < duration {
            let remaining = duration - t;
            let h = Float::min(self.h, remaining);
            if !self.fsal {
                let (k0, _) = self.k.split_at_mut(1);
                self.generator.apply(rho, &mut k0[0]);
                self.fsal = true;
            }
            for s in 1..7 {
                self.stage.copy_from_slice(rho);
                for (j, aj) in a[s].iter().enumerate().take(s) {
                    if *aj != T::zero() {
                        axpy(&mut self.stage, &self.k[j], *aj * h);
                    }
                }
                let (_, tail) = self.k.split_at_mut(s);
                self.generator.apply(&self.stage, &mut tail[0]);
            }
            // stage now holds the fifth-order solution (row 7 of A = b)
            self.err.fill(Complex::new(T::zero(), T::zero()));
            for (j, ej) in e.iter().enumerate() {
                if *ej != T::zero() {
                    axpy(&mut self.err, &self.k[j], *ej * h);
                }
            }
            let err = self.err.iter().fold(T::zero(), |m, z| Float::max(m, z.norm_sqr()));
            let err = Float::sqrt(err);
            let err_ok = err <= tol;
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                let f = T::lit(0.9) * Float::powf(tol / err, T::lit(0.2));
                Float::min(T::lit(5.0), Float::max(T::lit(0.2), f))
            };
            if err_ok {
                rho.copy_from_slice(&self.stage);
                self.k.swap(0, 6);
                t = if h == remaining { duration } else { t + h };
                self.accepted += 1;
                // do not let a short final step shrink the carried step size
                if h == self.h || factor < T::one() {
                    self.h = h * factor;
                }
            } else {
                self.rejected += 1;
                self.h = h * factor;
                if self.h < min_h {
                    return Err(Error::ToleranceNotMet { t: t.as_f64(), h: self.h.as_f64() });
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn axpy<T: Real>(y: &mut [Complex<T>], x: &[Complex<T>], a: T) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += *xi * a;
    }
}

/// Replace `ρ` by `(ρ + ρ†)/2` in place; returns the largest correction.
pub fn rehermitize<T: Real>(m: &mut DMatrix<Complex<T>>) -> T {
    let sym = hermitian_part(m);
    let mut worst = T::zero();
    for (a, b) in m.iter().zip(sym.iter()) {
        worst = Float::max(worst, (*a - *b).norm());
    }
    *m = sym;
    worst
}

/// Integrate the master equation over `duration` from a valid `rho`.
pub fn evolve_lindblad<T: Real>(
    rho: &DensityMatrix<T>,
    h: &HermitianOperator<T>,
    gamma_decay: T,
    gamma_deph: T,
    duration: T,
    tol: T,
) -> Result<DensityMatrix<T>> {
    rho.check()?;
    if h.n_sites() != rho.n_sites() {
        return Err(Error::DimensionMismatch { expected: h.n_sites(), got: rho.n_sites() });
    }
    if !(tol > T::zero()) {
        return Err(Error::NonPositiveInput("tol"));
    }
    if duration < T::zero() {
        return Err(Error::NonPositiveInput("duration"));
    }
    let mut solver = LindbladSolver::new(LindbladGenerator::new(h, gamma_decay, gamma_deph)?);
    let mut m = rho.matrix().clone();
    solver.integrate(m.as_mut_slice(), duration, tol)?;
    let fix = rehermitize(&mut m);
    if fix.as_f64() > HERMITIZATION_WARN {
        log::warn!("re-Hermitization correction {fix:e} exceeds {HERMITIZATION_WARN:e}");
    }
    Ok(DensityMatrix::from_raw(rho.n_sites(), m))
}
