use serde::{Deserialize, Serialize};

use super::geometry::ChainGeometry;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One constant-detuning pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseToken<T: Real> {
    /// Which detuning to drive at: 1 (`V_{r1} + δΔ₁`) or 2 (`V_{r2} + δΔ₂`).
    pub detuning: u8,
    /// Length in units of the pulse period.
    pub duration: T,
    /// Per-pulse replacement for the shared mismatch `δΔ_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<T>,
}

impl<T: Real> PulseToken<T> {
    pub fn new(detuning: u8) -> Self {
        Self { detuning, duration: T::one(), mismatch: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule<T: Real> {
    pub tokens: Vec<PulseToken<T>>,
}

impl<T: Real> PulseSchedule<T> {
    pub fn new(tokens: Vec<PulseToken<T>>) -> Result<Self> {
        let s = Self { tokens };
        s.validate()?;
        Ok(s)
    }

    /// Unit-length π pulses with the given detuning indices.
    pub fn from_indices(indices: &[u8]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| PulseToken::new(i)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::InvalidParams("empty pulse schedule".into()));
        }
        for (k, t) in self.tokens.iter().enumerate() {
            if t.detuning != 1 && t.detuning != 2 {
                return Err(Error::InvalidParams(format!("token {k}: detuning index {} is not 1 or 2", t.detuning)));
            }
            if !(t.duration > T::zero()) {
                return Err(Error::InvalidParams(format!("token {k}: duration must be positive")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn indices(&self) -> Vec<u8> {
        self.tokens.iter().map(|t| t.detuning).collect()
    }
}

/// Pulse sequence that walks an excitation from `start_site` through each
/// waypoint by unit hops. Every hop is driven at the detuning resonant with
/// the gap it crosses, so a reversal produces two identical tokens in a row.
pub fn plan_route<T: Real>(
    geometry: &ChainGeometry<T>,
    start_site: usize,
    waypoints: &[usize],
) -> Result<PulseSchedule<T>> {
    let n = geometry.n_sites();
    if start_site == 0 || start_site > n {
        return Err(Error::IndexOutOfRange(format!("start site {start_site} in a chain of {n}")));
    }
    let mut at = start_site;
    let mut tokens = Vec::new();
    for &w in waypoints {
        if w == 0 || w > n || w == at {
            return Err(Error::UnreachableWaypoint { from: at, waypoint: w });
        }
        while at != w {
            let next = if w > at { at + 1 } else { at - 1 };
            tokens.push(PulseToken::new(ChainGeometry::<T>::gap_kind(at.min(next))));
            at = next;
        }
    }
    PulseSchedule::new(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> ChainGeometry<f64> {
        ChainGeometry::matched(n, 20.0, 10.0).unwrap()
    }

    #[test]
    fn rightward_five_hops() {
        let s = plan_route(&chain(7), 1, &[6]).unwrap();
        assert_eq!(s.indices(), vec![1, 2, 1, 2, 1]);
    }

    #[test]
    fn leftward_from_four() {
        let s = plan_route(&chain(8), 4, &[1]).unwrap();
        assert_eq!(s.indices(), vec![1, 2, 1]);
        // the same tokens carry site 5 to site 8
        let t = plan_route(&chain(8), 5, &[8]).unwrap();
        assert_eq!(s.indices(), t.indices());
    }

    #[test]
    fn reversal_repeats_token() {
        let s = plan_route(&chain(7), 1, &[3, 1]).unwrap();
        assert_eq!(s.indices(), vec![1, 2, 2, 1]);
    }

    #[test]
    fn unreachable_waypoints() {
        assert!(matches!(plan_route(&chain(7), 1, &[1]), Err(Error::UnreachableWaypoint { .. })));
        assert!(matches!(plan_route(&chain(7), 1, &[3, 3]), Err(Error::UnreachableWaypoint { .. })));
        assert!(matches!(plan_route(&chain(7), 1, &[8]), Err(Error::UnreachableWaypoint { .. })));
        assert!(plan_route(&chain(7), 0, &[3]).is_err());
        assert!(plan_route(&chain(7), 1, &[]).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(PulseSchedule::<f64>::from_indices(&[]).is_err());
        assert!(PulseSchedule::<f64>::from_indices(&[1, 3]).is_err());
        let mut bad = PulseSchedule::<f64>::from_indices(&[1]).unwrap();
        bad.tokens[0].duration = 0.0;
        assert!(bad.validate().is_err());
    }
}
