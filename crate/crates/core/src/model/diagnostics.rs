use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::geometry::{ideal_nnn, ChainGeometry};
use super::params::ModelParams;
use crate::scalar::Real;

/// `Ω/|V_{r2}|` above which the facilitation hierarchy is flagged as weak.
pub const HIERARCHY_WARNING_THRESHOLD: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport<T: Real> {
    pub omega_over_v2: T,
    pub omega_over_v1_minus_v2: T,
    /// `V_{r1+r2} / V_{r2}` evaluated on the ideal geometry.
    pub nnn_ratio: T,
    /// Upper estimate `V_{r1} / (2⁶ V_{r2})` for the NNN ratio.
    pub nnn_bound: T,
    pub warning: bool,
    pub messages: Vec<String>,
}

pub fn hierarchy_diagnostics<T: Real>(params: &ModelParams<T>, geometry: &ChainGeometry<T>) -> HierarchyReport<T> {
    let omega = params.omega;
    let omega_over_v2 = omega / Float::abs(params.v2);
    let omega_over_v1_minus_v2 = omega / Float::abs(params.v1 - params.v2);
    let c6 = params.c6_for(geometry.r1());
    let nnn_ratio = ideal_nnn(geometry.r1(), geometry.r2(), c6) / params.v2;
    let nnn_bound = params.v1 / (T::lit(64.0) * params.v2);

    let mut messages = Vec::new();
    let threshold = T::lit(HIERARCHY_WARNING_THRESHOLD);
    if omega_over_v2 > threshold {
        messages.push(format!("Omega/|V_r2| = {omega_over_v2:.4} exceeds {HIERARCHY_WARNING_THRESHOLD}"));
    }
    if omega_over_v1_minus_v2 > threshold {
        messages.push(format!(
            "Omega/|V_r1 - V_r2| = {omega_over_v1_minus_v2:.4} exceeds {HIERARCHY_WARNING_THRESHOLD}"
        ));
    }
    if geometry.r2() <= T::lit(2.0) * geometry.r1() && nnn_ratio > nnn_bound {
        messages.push(format!("NNN ratio {nnn_ratio:.4} above the bound {nnn_bound:.4}"));
    }
    HierarchyReport {
        omega_over_v2,
        omega_over_v1_minus_v2,
        nnn_ratio,
        nnn_bound,
        warning: !messages.is_empty(),
        messages,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn strong_interaction_working_point() {
        let p = ModelParams::new(20.0, 10.0, -0.133, -0.033);
        let g = ChainGeometry::matched(7, 20.0, 10.0).unwrap();
        let r = hierarchy_diagnostics(&p, &g);
        assert_abs_diff_eq!(r.omega_over_v2, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.omega_over_v1_minus_v2, 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(r.nnn_bound, 0.03125, epsilon = 1e-12);
        assert!(r.nnn_ratio <= r.nnn_bound);
        assert!(!r.warning);
    }

    #[test]
    fn weak_interaction_working_point() {
        let p = ModelParams::new(8.4, 4.2, -0.293, -0.267);
        let g = ChainGeometry::matched(7, 8.4, 4.2).unwrap();
        let r = hierarchy_diagnostics(&p, &g);
        assert_abs_diff_eq!(r.omega_over_v2, 0.238095, epsilon = 1e-6);
        assert!(!r.warning);
    }

    #[test]
    fn warns_when_drive_too_strong() {
        let p = ModelParams::new(4.0, 2.0, 0.0, 0.0);
        let g = ChainGeometry::matched(5, 4.0, 2.0).unwrap();
        let r = hierarchy_diagnostics(&p, &g);
        assert!(r.warning);
        assert!(!r.messages.is_empty());
    }
}
