//! Frozen thermal position disorder and seeded ensemble averaging.

use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_schedule, RunOptions};
use crate::error::{Error, Result};
use crate::hilbert::QuantumState;
use crate::model::{ChainGeometry, ModelParams, PulseSchedule, Vec3};
use crate::scalar::Real;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Mass of a ⁸⁷Rb atom in kg.
pub const RB87_MASS: f64 = 1.44316e-25;
/// Realizations with an NN or NNN separation below this fraction of `r1`
/// are resampled.
pub const MIN_SEPARATION_FRACTION: f64 = 0.1;
const MAX_ATTEMPTS: usize = 1000;

/// `σ = √(k_B T / (m ω²))` in metres.
pub fn thermal_sigma(temperature: f64, mass: f64, trap_frequency: f64) -> Result<f64> {
    for (name, v) in [("temperature", temperature), ("mass", mass), ("trap_frequency", trap_frequency)] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveInput(name));
        }
    }
    Ok((BOLTZMANN * temperature / (mass * trap_frequency * trap_frequency)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec<T: Real> {
    /// Per-axis standard deviations `(σx, σy, σz)` in units of `r1`; `x`
    /// runs along the chain.
    pub sigma: Vec3<T>,
    pub n_realizations: usize,
    pub base_seed: u64,
}

impl<T: Real> DisorderSpec<T> {
    pub fn new(sigma: Vec3<T>, n_realizations: usize, base_seed: u64) -> Result<Self> {
        let spec = Self { sigma, n_realizations, base_seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.iter().any(|s| !(*s >= T::zero()) || !Float::is_finite(*s)) {
            return Err(Error::InvalidParams("sigma components must be finite and non-negative".into()));
        }
        if self.n_realizations == 0 {
            return Err(Error::InvalidParams("n_realizations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma.iter().all(|s| *s == T::zero())
    }
}

/// Generator for realization `index`: ChaCha20 keyed by `base_seed`, one
/// stream per realization.
pub fn realization_rng(base_seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    rng.set_stream(index as u64);
    rng
}

fn draw<T: Real>(n: usize, sigma: &Vec3<T>, rng: &mut ChaCha20Rng) -> Vec<Vec3<T>> {
    (0..n)
        .map(|_| {
            let mut d = [T::zero(); 3];
            for (x, s) in d.iter_mut().zip(sigma) {
                *x = *s * T::standard_normal(rng);
            }
            d
        })
        .collect()
}

/// First draw of realization `index`: `N` independent Gaussian 3-vectors.
pub fn sample_displacements<T: Real>(n: usize, spec: &DisorderSpec<T>, index: usize) -> Result<Vec<Vec3<T>>> {
    spec.validate()?;
    if index >= spec.n_realizations {
        return Err(Error::IndexOutOfRange(format!("realization {index} of {}", spec.n_realizations)));
    }
    Ok(draw(n, &spec.sigma, &mut realization_rng(spec.base_seed, index)))
}

/// Disordered chain of realization `index`.
#[derive(Clone, Debug)]
pub struct Realization<T: Real> {
    pub geometry: ChainGeometry<T>,
    /// Draws rejected before this one (crossings or near-collisions).
    pub resamples: usize,
}

/// Draw displacements for realization `index`, continuing the realization's
/// stream until the chain stays ordered with every NN/NNN separation at
/// least `0.1 r1`.
pub fn sample_realization<T: Real>(
    geometry: &ChainGeometry<T>,
    spec: &DisorderSpec<T>,
    index: usize,
) -> Result<Realization<T>> {
    spec.validate()?;
    let clean = geometry.clone().with_displacements(vec![[T::zero(); 3]; geometry.n_sites()])?;
    if spec.is_degenerate() {
        return Ok(Realization { geometry: clean, resamples: 0 });
    }
    let mut rng = realization_rng(spec.base_seed, index);
    let floor = T::lit(MIN_SEPARATION_FRACTION) * geometry.r1();
    for attempt in 0..MAX_ATTEMPTS {
        let d = draw(geometry.n_sites(), &spec.sigma, &mut rng);
        if let Ok(g) = clean.clone().with_displacements(d) {
            if g.min_separation() >= floor {
                if attempt > 0 {
                    log::info!("realization {index}: resampled {attempt} time(s)");
                }
                return Ok(Realization { geometry: g, resamples: attempt });
            }
        }
    }
    Err(Error::Realization {
        index,
        seed: spec.base_seed,
        source: Box::new(Error::InvalidParams(format!("no valid draw in {MAX_ATTEMPTS} attempts"))),
    })
}

/// Linearized interaction deviation `6 |v|^{7/6} √2 σx / |C₆|^{1/6}`.
pub fn interaction_deviation_estimate<T: Real>(v: T, sigma_x: T, c6: T) -> Result<T> {
    if v == T::zero() || c6 == T::zero() {
        return Err(Error::ZeroCoupling);
    }
    if sigma_x < T::zero() {
        return Err(Error::NonPositiveInput("sigma_x"));
    }
    let seven_sixths = T::lit(7.0 / 6.0);
    let sixth = T::lit(1.0 / 6.0);
    Ok(T::lit(6.0) * Float::powf(Float::abs(v), seven_sixths) * Float::sqrt(T::lit(2.0)) * sigma_x
        / Float::powf(Float::abs(c6), sixth))
}

/// Sampled statistics of `δV = C₆/|r + δx₂ − δx₁|⁶ − C₆/r⁶` with both atoms
/// displaced along the chain by independent `N(0, σx)` draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSample {
    pub draws: usize,
    pub mean_abs: f64,
    pub rms: f64,
}

pub fn sample_interaction_deviation(r: f64, sigma_x: f64, c6: f64, draws: usize, seed: u64) -> Result<DeviationSample> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveInput("r"));
    }
    if draws == 0 {
        return Err(Error::InvalidParams("draws must be at least 1".into()));
    }
    let v = c6 / r.powi(6);
    let mut rng = realization_rng(seed, 0);
    let (mut abs, mut sq) = (0.0, 0.0);
    for _ in 0..draws {
        let a = sigma_x * f64::standard_normal(&mut rng);
        let b = sigma_x * f64::standard_normal(&mut rng);
        let dist = (r + b - a).abs();
        if dist == 0.0 {
            return Err(Error::ZeroDistance);
        }
        let dv = c6 / dist.powi(6) - v;
        abs += dv.abs();
        sq += dv * dv;
    }
    let n = draws as f64;
    Ok(DeviationSample { draws, mean_abs: abs / n, rms: (sq / n).sqrt() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord<T: Real> {
    pub index: usize,
    pub base_seed: u64,
    pub resamples: usize,
    pub final_populations: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderEnsembleResult<T: Real> {
    pub times: Vec<T>,
    pub pulse_index: Vec<usize>,
    /// `mean[t][site]`.
    pub mean: Vec<Vec<T>>,
    /// Standard error of the mean (`n − 1` variance), zero for one realization.
    pub stderr: Vec<Vec<T>>,
    pub realizations: Vec<RealizationRecord<T>>,
}

impl<T: Real> DisorderEnsembleResult<T> {
    pub fn final_mean(&self) -> &[T] {
        self.mean.last().expect("ensemble has samples")
    }

    pub fn final_stderr(&self) -> &[T] {
        self.stderr.last().expect("ensemble has samples")
    }

    pub fn total_resamples(&self) -> usize {
        self.realizations.iter().map(|r| r.resamples).sum()
    }
}

/// Thread pool with `workers` threads (0 means all available).
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))
}

/// Run the schedule once per realization and average the trajectories.
///
/// Detunings stay at their ideal values; only the couplings see the
/// displaced positions. The reduction runs in realization order, so the
/// result does not depend on `workers`.
pub fn disorder_average<T: Real>(
    geometry: &ChainGeometry<T>,
    params: &ModelParams<T>,
    schedule: &PulseSchedule<T>,
    initial: &QuantumState<T>,
    spec: &DisorderSpec<T>,
    options: &RunOptions<T>,
    workers: usize,
) -> Result<DisorderEnsembleResult<T>> {
    spec.validate()?;
    let run_one = |index: usize| -> Result<_> {
        let wrap = |e: Error| Error::Realization { index, seed: spec.base_seed, source: Box::new(e) };
        let real = sample_realization(geometry, spec, index).map_err(wrap)?;
        let traj = run_schedule(initial, schedule, &real.geometry, params, options).map_err(wrap)?;
        Ok((real.resamples, traj))
    };
    let runs: Vec<Result<_>> =
        worker_pool(workers)?.install(|| (0..spec.n_realizations).into_par_iter().map(run_one).collect());
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let (_, first) = &runs[0];
    let n = T::from_usize_lossy(runs.len());
    let n_sites = geometry.n_sites();
    let mut mean = Vec::with_capacity(first.times.len());
    let mut stderr = Vec::with_capacity(first.times.len());
    for (t, anchor) in first.populations.iter().enumerate() {
        let mut m = vec![T::zero(); n_sites];
        let mut se = vec![T::zero(); n_sites];
        for site in 0..n_sites {
            // shifted sums keep the degenerate ensemble exact
            let x0 = anchor[site];
            let (mut s1, mut s2) = (T::zero(), T::zero());
            for (_, traj) in &runs {
                let dx = traj.populations[t][site] - x0;
                s1 += dx;
                s2 += dx * dx;
            }
            m[site] = x0 + s1 / n;
            if runs.len() > 1 {
                let var = Float::max(T::zero(), (s2 - s1 * s1 / n) / (n - T::one()));
                se[site] = Float::sqrt(var / n);
            }
        }
        mean.push(m);
        stderr.push(se);
    }
    let realizations = runs
        .iter()
        .enumerate()
        .map(|(index, (resamples, traj))| RealizationRecord {
            index,
            base_seed: spec.base_seed,
            resamples: *resamples,
            final_populations: traj.populations.last().expect("non-empty").clone(),
        })
        .collect::<Vec<_>>();
    let resampled: usize = realizations.iter().map(|r| r.resamples).sum();
    if resampled > 0 {
        log::info!("{resampled} disorder draw(s) rejected and resampled");
    }
    Ok(DisorderEnsembleResult {
        times: first.times.clone(),
        pulse_index: first.pulse_index.clone(),
        mean,
        stderr,
        realizations,
    })
}
