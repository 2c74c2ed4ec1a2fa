//! Conversion between dimensionless quantities (`Ω = 1`, lengths in `r1`)
//! and laboratory units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::effective_rabi;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalUnits {
    /// `Ω / 2π` in MHz.
    pub rabi_mhz: f64,
    /// Short spacing `r1` in µm.
    pub r1_um: f64,
}

impl PhysicalUnits {
    pub fn new(rabi_mhz: f64, r1_um: f64) -> Result<Self> {
        let u = Self { rabi_mhz, r1_um };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi_mhz > 0.0) {
            return Err(Error::NonPositiveInput("rabi_mhz"));
        }
        if !(self.r1_um > 0.0) {
            return Err(Error::NonPositiveInput("r1_um"));
        }
        Ok(())
    }

    /// Angular Rabi frequency in rad/µs.
    pub fn omega_per_us(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.rabi_mhz
    }

    /// Duration of one time unit `1/Ω` in µs.
    pub fn time_unit_us(&self) -> f64 {
        1.0 / self.omega_per_us()
    }

    pub fn to_us(&self, t: f64) -> f64 {
        t * self.time_unit_us()
    }

    pub fn to_um(&self, x: f64) -> f64 {
        x * self.r1_um
    }

    /// Length in nm expressed in units of `r1`.
    pub fn from_nm(&self, nm: f64) -> f64 {
        nm * 1e-3 / self.r1_um
    }

    /// Interaction `v` (units of `Ω`) in units of `2π·MHz`.
    pub fn to_mhz(&self, v: f64) -> f64 {
        v * self.rabi_mhz
    }

    /// `C₆` in `2π·MHz·µm⁶` for a dimensionless coefficient.
    pub fn c6_mhz_um6(&self, c6: f64) -> f64 {
        c6 * self.rabi_mhz * self.r1_um.powi(6)
    }

    /// π-pulse hop time `T = π/Ω̃` in µs.
    pub fn hop_time_us(&self) -> f64 {
        self.to_us(effective_rabi(1.0).1)
    }

    /// Time for `hops` consecutive π pulses in µs.
    pub fn transport_time_us(&self, hops: usize) -> f64 {
        hops as f64 * self.hop_time_us()
    }

    /// Mean distance covered per µs by a monotone route with gaps `r1, r2`
    /// taken alternately.
    pub fn transport_speed_um_per_us(&self, r2: f64) -> f64 {
        self.to_um((1.0 + r2) / 2.0) / self.hop_time_us()
    }

    /// Distance between sites `a` and `b` (1-based) of an ideal chain.
    pub fn site_separation_um(&self, r2: f64, a: usize, b: usize) -> f64 {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let gaps: f64 = (a..b).map(|s| if s % 2 == 1 { 1.0 } else { r2 }).sum();
        self.to_um(gaps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hop_time_at_three_mhz() {
        let u = PhysicalUnits::new(3.0, 11.4).unwrap();
        assert_relative_eq!(u.hop_time_us(), 0.2357, max_relative = 1e-3);
        assert_relative_eq!(u.transport_time_us(3), 0.7071, max_relative = 1e-3);
    }

    #[test]
    fn lengths() {
        let u = PhysicalUnits::new(3.0, 11.4).unwrap();
        let r2 = 12.8 / 11.4;
        assert_relative_eq!(u.site_separation_um(r2, 1, 8), 84.0, max_relative = 1e-12);
        assert_relative_eq!(u.site_separation_um(r2, 8, 1), 84.0, max_relative = 1e-12);
        assert_relative_eq!(u.from_nm(114.0), 0.01, max_relative = 1e-12);
        assert_relative_eq!(u.transport_speed_um_per_us(r2), 12.1 / 0.235702, max_relative = 1e-5);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(PhysicalUnits::new(0.0, 1.0).is_err());
        assert!(PhysicalUnits::new(1.0, -1.0).is_err());
    }
}
