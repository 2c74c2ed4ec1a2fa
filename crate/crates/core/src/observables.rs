//! Figures of merit computed from schedule runs.

use serde::{Deserialize, Serialize};

use crate::dynamics::{run_schedule, RunOptions, Trajectory};
use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, psi_plus, state_fidelity, OccupationPattern, PureState, QuantumState};
use crate::model::{ChainGeometry, ModelParams, PulseSchedule};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellFidelity<T: Real> {
    pub pulse: usize,
    pub sites: (usize, usize),
    pub fidelity: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport<T: Real> {
    pub truth_table: Option<T>,
    /// Rows of the truth table (`p0`, `p1`) when it was evaluated.
    pub truth_table_rows: Option<(T, T)>,
    pub transfer_site: usize,
    pub transfer_population: T,
    pub bell_fidelities: Vec<BellFidelity<T>>,
    /// Site populations after the final pulse.
    pub final_populations: Vec<T>,
    pub schedule: Vec<u8>,
    pub seed: Option<u64>,
}

/// Population of `site` (1-based) after pulse `at_pulse` (0 = input).
pub fn transfer_population<T: Real>(trajectory: &Trajectory<T>, site: usize, at_pulse: usize) -> Result<T> {
    let pops = trajectory
        .boundary_populations(at_pulse)
        .ok_or_else(|| Error::IndexOutOfRange(format!("pulse {at_pulse} of {}", trajectory.n_pulses())))?;
    if site == 0 || site > pops.len() {
        return Err(Error::IndexOutOfRange(format!("site {site} of {}", pops.len())));
    }
    Ok(pops[site - 1])
}

/// Both rows of the classical truth table: `(P(out=0 | in=0), P(out=1 | in=1))`.
pub fn truth_table_rows<T: Real>(
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    schedule: &PulseSchedule<T>,
    in_site: usize,
    out_site: usize,
    options: &RunOptions<T>,
) -> Result<(T, T)> {
    let n = geometry.n_sites();
    if out_site == 0 || out_site > n {
        return Err(Error::IndexOutOfRange(format!("output site {out_site} of {n}")));
    }
    let one: QuantumState<T> = PureState::basis(&OccupationPattern::single_excitation(n, in_site)?).into();
    let zero: QuantumState<T> = PureState::basis(&OccupationPattern::vacuum(n)?).into();
    // boundary populations are all that matter here
    let opts = RunOptions { samples_per_pulse: 1, ..options.clone() };
    let last = schedule.len();
    let t1 = run_schedule(&one, schedule, geometry, params, &opts)?;
    let t0 = run_schedule(&zero, schedule, geometry, params, &opts)?;
    let p1 = transfer_population(&t1, out_site, last)?;
    let p0 = T::one() - transfer_population(&t0, out_site, last)?;
    Ok((p0, p1))
}

/// Unweighted average of the 0→0 and 1→1 rows.
pub fn truth_table_fidelity<T: Real>(
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    schedule: &PulseSchedule<T>,
    in_site: usize,
    out_site: usize,
    options: &RunOptions<T>,
) -> Result<T> {
    let (p0, p1) = truth_table_rows(geometry, params, schedule, in_site, out_site, options)?;
    Ok((p0 + p1) / T::lit(2.0))
}

/// Sites holding the pair after `pulse` outward hops from `(a, a+1)`.
pub fn bell_sites(a: usize, pulse: usize, n: usize) -> Result<(usize, usize)> {
    if pulse >= a || a + 1 + pulse > n {
        return Err(Error::IndexOutOfRange(format!("pair ({a},{}) moved {pulse} steps leaves the chain of {n}", a + 1)));
    }
    Ok((a - pulse, a + 1 + pulse))
}

/// `F_i = ⟨Ψ⁺|ρ_i|Ψ⁺⟩` on sites `(a−i, a+1+i)` for every boundary state of a
/// trajectory, starting with `i = 0`.
pub fn bell_fidelities_from_trajectory<T: Real>(trajectory: &Trajectory<T>, a: usize) -> Result<Vec<BellFidelity<T>>> {
    let target = psi_plus::<T>();
    let n = trajectory.final_state().n_sites();
    trajectory
        .boundary_states
        .iter()
        .enumerate()
        .map(|(i, state)| {
            let sites = bell_sites(a, i, n)?;
            let rho = partial_trace(state, sites.0, sites.1)?;
            Ok(BellFidelity { pulse: i, sites, fidelity: state_fidelity(&rho, &target)? })
        })
        .collect()
}

/// Prepare `Ψ⁺` on `(a, a+1)`, run the schedule and return `F_i` for
/// `i = 1 … len(schedule)`.
pub fn bell_fidelity_sequence<T: Real>(
    a: usize,
    schedule: &PulseSchedule<T>,
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    options: &RunOptions<T>,
) -> Result<Vec<BellFidelity<T>>> {
    let n = geometry.n_sites();
    bell_sites(a, schedule.len(), n)?;
    let input: QuantumState<T> = PureState::bell_pair(n, a, a + 1)?.into();
    let traj = run_schedule(&input, schedule, geometry, params, options)?;
    let mut seq = bell_fidelities_from_trajectory(&traj, a)?;
    seq.remove(0);
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn seven_site() -> (ChainGeometry<f64>, ModelParams<f64>, PulseSchedule<f64>) {
        (
            ChainGeometry::matched(7, 20.0, 10.0).unwrap(),
            ModelParams::new(20.0, 10.0, -0.133, -0.033),
            PulseSchedule::from_indices(&[1, 2, 1, 2, 1]).unwrap(),
        )
    }

    #[test]
    fn transfer_population_indices() {
        let (g, p, s) = seven_site();
        let input: QuantumState<f64> = PureState::basis(&OccupationPattern::single_excitation(7, 1).unwrap()).into();
        let tr = run_schedule(&input, &s, &g, &p, &RunOptions::default().with_samples(2)).unwrap();
        assert_eq!(transfer_population(&tr, 1, 0).unwrap(), 1.0);
        assert!(transfer_population(&tr, 8, 0).is_err());
        assert!(transfer_population(&tr, 0, 0).is_err());
        assert!(transfer_population(&tr, 1, 6).is_err());
    }

    #[test]
    fn frozen_drive_gives_one_half() {
        let (g, mut p, s) = seven_site();
        p.omega = 1e-300;
        let f = truth_table_fidelity(&g, &p, &s, 1, 6, &RunOptions::default()).unwrap();
        assert_abs_diff_eq!(f, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_mismatch_is_worse() {
        let (g, p, s) = seven_site();
        let opt = truth_table_fidelity(&g, &p, &s, 1, 6, &RunOptions::default()).unwrap();
        let zero = truth_table_fidelity(&g, &ModelParams::new(20.0, 10.0, 0.0, 0.0), &s, 1, 6, &RunOptions::default())
            .unwrap();
        assert!(zero < opt, "{zero} vs {opt}");
    }

    #[test]
    fn bell_sites_bounds() {
        assert_eq!(bell_sites(4, 3, 8).unwrap(), (1, 8));
        assert!(bell_sites(4, 4, 8).is_err());
        assert!(bell_sites(4, 2, 6).is_err());
    }

    #[test]
    fn bell_input_has_unit_fidelity() {
        let g = ChainGeometry::matched(8, 20.0, 10.0).unwrap();
        let p = ModelParams::new(20.0, 10.0, -0.133, -0.033);
        let s = PulseSchedule::from_indices(&[1]).unwrap();
        let input: QuantumState<f64> = PureState::bell_pair(8, 4, 5).unwrap().into();
        let tr = run_schedule(&input, &s, &g, &p, &RunOptions::default().with_samples(1)).unwrap();
        let f = bell_fidelities_from_trajectory(&tr, 4).unwrap();
        assert_abs_diff_eq!(f[0].fidelity, 1.0, epsilon = 1e-12);
        assert_eq!(f[1].sites, (3, 6));
    }
}
