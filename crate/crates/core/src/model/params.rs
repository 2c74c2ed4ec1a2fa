use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Drive and interaction parameters, all in units of the Rabi frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T: Real> {
    /// Drive Rabi frequency `Ω` (the frequency unit; 1 unless rescaled).
    pub omega: T,
    /// Nearest-neighbor interaction across an `r1` gap.
    pub v1: T,
    /// Nearest-neighbor interaction across an `r2` gap.
    pub v2: T,
    /// Detuning mismatch added on top of `v1` for pulses of type 1.
    pub d_delta1: T,
    /// Detuning mismatch added on top of `v2` for pulses of type 2.
    pub d_delta2: T,
    pub include_nnn: bool,
    /// Van der Waals coefficient; defaults to `v1 · r1⁶`.
    pub c6: Option<T>,
    pub gamma_decay: T,
    pub gamma_deph: T,
    /// Pulse length expressed as `Ω̃T/(2π)`; 0.5 is an exact π pulse.
    pub period_scale: T,
}

impl<T: Real> ModelParams<T> {
    /// Closed-system parameters with an exact π-pulse period and NNN included.
    pub fn new(v1: T, v2: T, d_delta1: T, d_delta2: T) -> Self {
        Self {
            omega: T::one(),
            v1,
            v2,
            d_delta1,
            d_delta2,
            include_nnn: true,
            c6: None,
            gamma_decay: T::zero(),
            gamma_deph: T::zero(),
            period_scale: T::lit(0.5),
        }
    }

    pub fn with_rates(mut self, gamma_decay: T, gamma_deph: T) -> Self {
        self.gamma_decay = gamma_decay;
        self.gamma_deph = gamma_deph;
        self
    }

    pub fn with_nnn(mut self, include_nnn: bool) -> Self {
        self.include_nnn = include_nnn;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.omega > T::zero()) {
            return bad(format!("omega must be positive (got {})", self.omega));
        }
        if !(Float::abs(self.v1) > Float::abs(self.v2) && Float::abs(self.v2) > T::zero()) {
            return bad(format!("need |v1| > |v2| > 0 (got v1 = {}, v2 = {})", self.v1, self.v2));
        }
        if Float::signum(self.v1) != Float::signum(self.v2) {
            return bad("v1 and v2 must share a sign".into());
        }
        if let Some(c6) = self.c6 {
            if Float::signum(c6) != Float::signum(self.v1) || c6 == T::zero() {
                return bad("c6 must be nonzero with the sign of v1".into());
            }
        }
        if self.gamma_decay < T::zero() || self.gamma_deph < T::zero() {
            return bad("dissipation rates must be non-negative".into());
        }
        if !(self.period_scale > T::zero()) {
            return bad("period_scale must be positive".into());
        }
        let finite = [self.omega, self.v1, self.v2, self.d_delta1, self.d_delta2, self.gamma_decay, self.gamma_deph]
            .iter()
            .all(|x| Float::is_finite(*x));
        if !finite {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }

    /// Laser detuning of pulse type `index` (1 or 2): `V_{r_i} + δΔ_i`.
    pub fn detuning(&self, index: u8) -> T {
        match index {
            1 => self.v1 + self.d_delta1,
            _ => self.v2 + self.d_delta2,
        }
    }

    /// Resonant coupling of pulse type `index` without the mismatch.
    pub fn coupling(&self, index: u8) -> T {
        match index {
            1 => self.v1,
            _ => self.v2,
        }
    }

    pub fn mismatch(&self, index: u8) -> T {
        match index {
            1 => self.d_delta1,
            _ => self.d_delta2,
        }
    }

    /// Van der Waals coefficient given the ideal `r1` spacing.
    pub fn c6_for(&self, r1: T) -> T {
        self.c6.unwrap_or_else(|| self.v1 * Float::powi(r1, 6))
    }

    /// Duration of one schedule unit: `2π · period_scale / Ω̃`.
    pub fn pulse_period(&self) -> T {
        let (omega_tilde, _) = effective_rabi(self.omega);
        T::two_pi() * self.period_scale / omega_tilde
    }

    pub fn is_dissipative(&self) -> bool {
        self.gamma_decay > T::zero() || self.gamma_deph > T::zero()
    }
}

/// Two-atom effective hopping frequency `Ω̃ = √2 Ω / 2` and the hop time
/// `T = π / Ω̃`.
pub fn effective_rabi<T: Real>(omega: T) -> (T, T) {
    let omega_tilde = Float::sqrt(T::lit(2.0)) * omega / T::lit(2.0);
    (omega_tilde, T::pi() / omega_tilde)
}
