use serde::{Deserialize, Serialize};

use super::lindblad::{rehermitize, LindbladGenerator, LindbladSolver, HERMITIZATION_WARN};
use super::unitary::Propagator;
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, PureState, QuantumState};
use crate::model::{
    chain_couplings, frame_switch_phase, hamiltonian_with_detuning, ChainGeometry, CouplingTable, HermitianOperator,
    ModelParams, PulseSchedule,
};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions<T: Real> {
    /// Uniform interior samples recorded per pulse (boundaries are always recorded).
    pub samples_per_pulse: usize,
    /// Per-step error bound of the master-equation integrator.
    pub lindblad_tol: T,
    /// Apply the rotating-frame phase at every pulse boundary.
    pub frame_correction: bool,
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        Self { samples_per_pulse: 50, lindblad_tol: T::lit(1e-8), frame_correction: true }
    }
}

impl<T: Real> RunOptions<T> {
    pub fn with_samples(mut self, samples_per_pulse: usize) -> Self {
        self.samples_per_pulse = samples_per_pulse;
        self
    }
}

/// Time-sampled site populations of one schedule run.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    /// Sample times in units of `1/Ω`, starting at 0.
    pub times: Vec<T>,
    /// Pulse each sample belongs to (0 for the initial sample).
    pub pulse_index: Vec<usize>,
    pub populations: Vec<Vec<T>>,
    /// Sample index of the state after pulse `k` (`boundaries[0] = 0`).
    pub boundaries: Vec<usize>,
    /// State after pulse `k` (`boundary_states[0]` is the input).
    pub boundary_states: Vec<QuantumState<T>>,
    /// Largest re-Hermitization correction per pulse (zero on the unitary path).
    pub hermitization: Vec<T>,
    pub used_lindblad: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn n_pulses(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn final_state(&self) -> &QuantumState<T> {
        self.boundary_states.last().expect("trajectory has an initial state")
    }

    pub fn boundary_times(&self) -> Vec<T> {
        self.boundaries.iter().map(|&i| self.times[i]).collect()
    }

    pub fn boundary_populations(&self, pulse: usize) -> Option<&[T]> {
        self.boundaries.get(pulse).map(|&i| self.populations[i].as_slice())
    }
}

/// Per-detuning cache of propagators or master-equation solvers.
struct PulseCache<V> {
    entries: Vec<(u64, V)>,
}

impl<V> PulseCache<V> {
    fn new() -> Self {
        Self { entries: Vec::new() }
    }

    fn get_or_try_insert(&mut self, key: u64, make: impl FnOnce() -> Result<V>) -> Result<&mut V> {
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            return Ok(&mut self.entries[pos].1);
        }
        self.entries.push((key, make()?));
        Ok(&mut self.entries.last_mut().expect("just pushed").1)
    }
}

enum Evolving<T: Real> {
    Pure(PureState<T>),
    Mixed(nalgebra::DMatrix<crate::scalar::Complex<T>>),
}

/// Execute `schedule` from `initial`, recording site populations.
///
/// A pure input with zero dissipation rates is propagated exactly through
/// cached eigendecompositions; anything else is integrated as a density
/// matrix. Deterministic for given inputs.
pub fn run_schedule<T: Real>(
    initial: &QuantumState<T>,
    schedule: &PulseSchedule<T>,
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    options: &RunOptions<T>,
) -> Result<Trajectory<T>> {
    params.validate()?;
    schedule.validate()?;
    if options.samples_per_pulse == 0 {
        return Err(Error::InvalidParams("samples_per_pulse must be at least 1".into()));
    }
    let n = geometry.n_sites();
    if initial.n_sites() != n {
        return Err(Error::DimensionMismatch { expected: n, got: initial.n_sites() });
    }
    let couplings = chain_couplings(geometry, params)?;
    let period = params.pulse_period();
    let use_lindblad = matches!(initial, QuantumState::Mixed(_)) || params.is_dissipative();

    let mut state = match initial {
        QuantumState::Pure(p) if !use_lindblad => Evolving::Pure(p.clone()),
        other => Evolving::Mixed(other.to_density().into_matrix()),
    };

    let mut traj = Trajectory {
        times: vec![T::zero()],
        pulse_index: vec![0],
        populations: vec![crate::hilbert::site_populations(initial)],
        boundaries: vec![0],
        boundary_states: vec![initial.clone()],
        hermitization: Vec::new(),
        used_lindblad: use_lindblad,
    };

    let mut propagators: PulseCache<Propagator<T>> = PulseCache::new();
    let mut solvers: PulseCache<LindbladSolver<T>> = PulseCache::new();
    let samples = options.samples_per_pulse;
    let mut t0 = T::zero();
    let mut prev_delta: Option<T> = None;

    for (k, token) in schedule.tokens.iter().enumerate() {
        let pulse = k + 1;
        let mismatch = token.mismatch.unwrap_or_else(|| params.mismatch(token.detuning));
        let delta = params.coupling(token.detuning) + mismatch;
        let duration = token.duration * period;
        let key = delta.as_f64().to_bits();

        if let (Some(prev), true) = (prev_delta, options.frame_correction) {
            if prev != delta {
                let phase = frame_switch_phase(n, prev, delta, t0);
                state = match state {
                    Evolving::Pure(p) => Evolving::Pure(phase.apply_pure(&p)),
                    Evolving::Mixed(m) => {
                        Evolving::Mixed(phase.apply_density(&DensityMatrix::from_raw(n, m)).into_matrix())
                    }
                };
            }
        }

        let offsets: Vec<T> = (1..=samples + 1)
            .map(|s| duration * T::from_usize_lossy(s) / T::from_usize_lossy(samples + 1))
            .collect();

        match &mut state {
            Evolving::Pure(psi0) => {
                let prop = propagators.get_or_try_insert(key, || {
                    Ok(Propagator::new(&pulse_hamiltonian(n, params, &couplings, delta)))
                })?;
                let start = psi0.clone();
                for (s, dt) in offsets.iter().enumerate() {
                    let psi = if s == samples {
                        prop.evolve(&start, duration)?
                    } else {
                        prop.evolve(&start, *dt)?
                    };
                    traj.times.push(t0 + *dt);
                    traj.pulse_index.push(pulse);
                    traj.populations.push(psi.site_populations());
                    if s == samples {
                        *psi0 = psi;
                    }
                }
                traj.hermitization.push(T::zero());
                traj.boundary_states.push(QuantumState::Pure(psi0.clone()));
            }
            Evolving::Mixed(rho) => {
                let solver = solvers.get_or_try_insert(key, || {
                    let h = pulse_hamiltonian(n, params, &couplings, delta);
                    Ok(LindbladSolver::new(LindbladGenerator::new(&h, params.gamma_decay, params.gamma_deph)?))
                })?;
                solver.invalidate();
                let mut elapsed = T::zero();
                for dt in &offsets {
                    solver.integrate(rho.as_mut_slice(), *dt - elapsed, options.lindblad_tol)?;
                    elapsed = *dt;
                    traj.times.push(t0 + *dt);
                    traj.pulse_index.push(pulse);
                    traj.populations.push(DensityMatrix::from_raw(n, rho.clone()).site_populations());
                }
                let fix = rehermitize(rho);
                if fix.as_f64() > HERMITIZATION_WARN {
                    log::warn!("pulse {pulse}: re-Hermitization correction {fix:e}");
                } else {
                    log::debug!("pulse {pulse}: re-Hermitization correction {fix:e}");
                }
                traj.hermitization.push(fix);
                traj.boundary_states.push(QuantumState::Mixed(DensityMatrix::from_raw(n, rho.clone())));
            }
        }
        traj.boundaries.push(traj.times.len() - 1);
        t0 += duration;
        prev_delta = Some(delta);
    }
    Ok(traj)
}

fn pulse_hamiltonian<T: Real>(
    n: usize,
    params: &ModelParams<T>,
    couplings: &CouplingTable<T>,
    delta: T,
) -> HermitianOperator<T> {
    hamiltonian_with_detuning(n, params, couplings, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::OccupationPattern;
    use approx::assert_abs_diff_eq;

    fn fig2() -> (ChainGeometry<f64>, ModelParams<f64>) {
        (ChainGeometry::matched(7, 20.0, 10.0).unwrap(), ModelParams::new(20.0, 10.0, -0.133, -0.033))
    }

    fn single(n: usize, site: usize) -> QuantumState<f64> {
        PureState::basis(&OccupationPattern::single_excitation(n, site).unwrap()).into()
    }

    #[test]
    fn trajectory_layout() {
        let (g, p) = fig2();
        let s = PulseSchedule::from_indices(&[1, 2, 1]).unwrap();
        let tr = run_schedule(&single(7, 1), &s, &g, &p, &RunOptions::default().with_samples(4)).unwrap();
        assert_eq!(tr.times.len(), 1 + 3 * 5);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(tr.boundaries, vec![0, 5, 10, 15]);
        let period = p.pulse_period();
        for (k, t) in tr.boundary_times().iter().enumerate() {
            assert_abs_diff_eq!(*t, k as f64 * period, epsilon = 1e-12);
        }
        assert_eq!(tr.pulse_index[5], 1);
        assert_eq!(tr.pulse_index[6], 2);
        assert!(!tr.used_lindblad);
        assert_eq!(tr.boundary_populations(0).unwrap()[0], 1.0);
    }

    #[test]
    fn excitation_moves_right() {
        let (g, p) = fig2();
        let s = PulseSchedule::from_indices(&[1, 2, 1, 2, 1]).unwrap();
        let tr = run_schedule(&single(7, 1), &s, &g, &p, &RunOptions::default().with_samples(2)).unwrap();
        for k in 1..=5 {
            let pops = tr.boundary_populations(k).unwrap();
            let argmax = (0..7).max_by(|&a, &b| pops[a].partial_cmp(&pops[b]).unwrap()).unwrap();
            assert_eq!(argmax, k, "after pulse {k}: {pops:?}");
        }
    }

    #[test]
    fn frozen_without_drive() {
        let (g, mut p) = fig2();
        p.omega = 1e-300;
        let s = PulseSchedule::from_indices(&[1, 2]).unwrap();
        let tr = run_schedule(&single(7, 3), &s, &g, &p, &RunOptions::default().with_samples(3)).unwrap();
        for pops in &tr.populations {
            assert_abs_diff_eq!(pops[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (g, p) = fig2();
        let s = PulseSchedule::from_indices(&[1]).unwrap();
        assert!(run_schedule(&single(6, 1), &s, &g, &p, &RunOptions::default()).is_err());
        assert!(run_schedule(&single(7, 1), &s, &g, &p, &RunOptions::default().with_samples(0)).is_err());
    }
}
