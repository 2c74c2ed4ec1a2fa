//! Objective scans over detuning mismatches and pulse length, and
//! Nelder–Mead refinement.

use num_traits::Float;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disorder::worker_pool;
use crate::dynamics::{run_schedule, RunOptions};
use crate::error::{Error, Result};
use crate::hilbert::{OccupationPattern, PureState, QuantumState};
use crate::model::{ChainGeometry, ModelParams, PulseSchedule};
use crate::observables::{transfer_population, truth_table_fidelity};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScanParameter {
    #[serde(rename = "dDelta1")]
    DDelta1,
    #[serde(rename = "dDelta2")]
    DDelta2,
    #[serde(rename = "period_scale")]
    PeriodScale,
}

impl ScanParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::DDelta1 => "dDelta1",
            Self::DDelta2 => "dDelta2",
            Self::PeriodScale => "period_scale",
        }
    }

    pub fn set<T: Real>(self, params: &mut ModelParams<T>, value: T) {
        match self {
            Self::DDelta1 => params.d_delta1 = value,
            Self::DDelta2 => params.d_delta2 = value,
            Self::PeriodScale => params.period_scale = value,
        }
    }

    pub fn get<T: Real>(self, params: &ModelParams<T>) -> T {
        match self {
            Self::DDelta1 => params.d_delta1,
            Self::DDelta2 => params.d_delta2,
            Self::PeriodScale => params.period_scale,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    TruthTable,
    TransferPopulation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanAxis<T: Real> {
    pub parameter: ScanParameter,
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Real> ScanAxis<T> {
    pub fn new(parameter: ScanParameter, min: T, max: T, count: usize) -> Self {
        Self { parameter, min, max, count }
    }

    /// A single point; `min == max`.
    pub fn fixed(parameter: ScanParameter, value: T) -> Self {
        Self { parameter, min: value, max: value, count: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.count {
            0 => false,
            1 => self.min == self.max,
            _ => self.min < self.max,
        };
        if !ok || !Float::is_finite(self.min) || !Float::is_finite(self.max) {
            return Err(Error::InvalidParams(format!(
                "axis {}: need count >= 2 with min < max, or count = 1 with min = max",
                self.parameter.name()
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<T> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = T::from_usize_lossy(self.count - 1);
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.max
                } else {
                    self.min + (self.max - self.min) * T::from_usize_lossy(k) / last
                }
            })
            .collect()
    }

    pub fn step(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.max - self.min) / T::from_usize_lossy(self.count - 1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid<T: Real> {
    pub axes: Vec<ScanAxis<T>>,
    #[serde(default)]
    pub objective: Objective,
}

impl<T: Real> ScanGrid<T> {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(Error::InvalidParams(format!("scan needs 1 to 3 axes (got {})", self.axes.len())));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.parameter == a.parameter) {
                return Err(Error::InvalidParams(format!("axis {} listed twice", a.parameter.name())));
            }
        }
        Ok(())
    }

    /// All grid points, first axis varying slowest.
    pub fn points(&self) -> Vec<Vec<T>> {
        let values: Vec<Vec<T>> = self.axes.iter().map(ScanAxis::values).collect();
        let mut out = vec![Vec::new()];
        for vals in &values {
            out = out.iter().flat_map(|p| vals.iter().map(move |v| [p.as_slice(), &[*v]].concat())).collect();
        }
        out
    }
}

/// Everything an objective evaluation needs besides the scanned values.
#[derive(Clone, Debug)]
pub struct Problem<T: Real> {
    pub geometry: ChainGeometry<T>,
    pub params: ModelParams<T>,
    pub schedule: PulseSchedule<T>,
    pub in_site: usize,
    pub out_site: usize,
    pub objective: Objective,
    pub options: RunOptions<T>,
}

impl<T: Real> Problem<T> {
    pub fn evaluate(&self, parameters: &[ScanParameter], values: &[T]) -> Result<T> {
        let mut params = self.params.clone();
        for (p, v) in parameters.iter().zip(values) {
            p.set(&mut params, *v);
        }
        self.evaluate_params(&params)
    }

    pub fn evaluate_params(&self, params: &ModelParams<T>) -> Result<T> {
        match self.objective {
            Objective::TruthTable => {
                truth_table_fidelity(&self.geometry, params, &self.schedule, self.in_site, self.out_site, &self.options)
            }
            Objective::TransferPopulation => {
                let n = self.geometry.n_sites();
                let input: QuantumState<T> =
                    PureState::basis(&OccupationPattern::single_excitation(n, self.in_site)?).into();
                let opts = RunOptions { samples_per_pulse: 1, ..self.options.clone() };
                let traj = run_schedule(&input, &self.schedule, &self.geometry, params, &opts)?;
                transfer_population(&traj, self.out_site, self.schedule.len())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSurface<T: Real> {
    pub parameters: Vec<ScanParameter>,
    pub points: Vec<Vec<T>>,
    pub values: Vec<T>,
}

impl<T: Real> ScanSurface<T> {
    /// First point attaining the maximum.
    pub fn argmax(&self) -> (usize, T) {
        let mut best = (0, self.values[0]);
        for (i, v) in self.values.iter().enumerate().skip(1) {
            if *v > best.1 {
                best = (i, *v);
            }
        }
        best
    }

    pub fn best_point(&self) -> &[T] {
        &self.points[self.argmax().0]
    }
}

/// Evaluate the objective at every grid point on `workers` threads (0 means
/// all available). The surface is assembled in grid order.
pub fn scan<T: Real>(grid: &ScanGrid<T>, problem: &Problem<T>, workers: usize) -> Result<ScanSurface<T>> {
    grid.validate()?;
    let parameters: Vec<ScanParameter> = grid.axes.iter().map(|a| a.parameter).collect();
    let problem = Problem { objective: grid.objective, ..problem.clone() };
    let points = grid.points();
    let values: Vec<Result<T>> = worker_pool(workers)?.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, p)| {
                problem.evaluate(&parameters, p).map_err(|e| Error::GridPoint { index, source: Box::new(e) })
            })
            .collect()
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ScanSurface { parameters, points, values })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadOptions<T: Real> {
    pub max_iterations: usize,
    /// Stop once the simplex objective values span less than this.
    pub spread_tol: T,
    /// ... and its vertices lie within this fraction of each bound range.
    pub size_tol: T,
    /// Initial simplex edge as a fraction of each bound range.
    pub initial_fraction: T,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self { max_iterations: 200, spread_tol: T::lit(1e-5), size_tol: T::lit(1e-4), initial_fraction: T::lit(0.02) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult<T: Real> {
    pub best: Vec<T>,
    pub best_value: T,
    pub start_value: T,
    pub iterations: usize,
    pub evaluations: usize,
    /// Stopped at the iteration cap rather than on the spread criterion.
    pub max_iterations_reached: bool,
    /// Some coordinate of `best` sits on a bound.
    pub on_boundary: bool,
    /// Running maximum after every evaluation.
    pub trace: Vec<T>,
}

/// Maximize `f` inside the box `bounds` with a Nelder–Mead simplex
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5). Trial points
/// are clamped to the box.
pub fn nelder_mead<T: Real, F>(
    mut f: F,
    start: &[T],
    bounds: &[(T, T)],
    options: &NelderMeadOptions<T>,
) -> Result<NelderMeadResult<T>>
where
    F: FnMut(&[T]) -> Result<T>,
{
    let dim = start.len();
    if dim == 0 || bounds.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: bounds.len() });
    }
    for (x, (lo, hi)) in start.iter().zip(bounds) {
        if !(lo < hi) || *x < *lo || *x > *hi {
            return Err(Error::InvalidParams(format!("start {x} outside bounds [{lo}, {hi}]")));
        }
    }
    let clamp = |p: &mut Vec<T>| {
        for (x, (lo, hi)) in p.iter_mut().zip(bounds) {
            *x = Float::min(Float::max(*x, *lo), *hi);
        }
    };
    let mut trace = Vec::new();
    let mut best: (Vec<T>, T) = (start.to_vec(), T::neg_infinity());
    let mut eval = |p: &[T], trace: &mut Vec<T>, best: &mut (Vec<T>, T)| -> Result<T> {
        let v = f(p)?;
        if v > best.1 {
            *best = (p.to_vec(), v);
        }
        trace.push(best.1);
        Ok(v)
    };

    let start_value = eval(start, &mut trace, &mut best)?;
    let mut simplex: Vec<(Vec<T>, T)> = Vec::new();
    let mut restart_from = T::neg_infinity();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let mut iterations = 0;
    let mut capped = true;
    while iterations < options.max_iterations {
        if simplex.is_empty() {
            // fresh simplex around the best point so far
            restart_from = best.1;
            let center = best.0.clone();
            simplex.push((center.clone(), best.1));
            for k in 0..dim {
                let (lo, hi) = bounds[k];
                let edge = (hi - lo) * options.initial_fraction;
                let mut p = center.clone();
                p[k] = if p[k] + edge <= hi { p[k] + edge } else { p[k] - edge };
                let v = eval(&p, &mut trace, &mut best)?;
                simplex.push((p, v));
            }
        }
        // descending by objective; stable so ties keep insertion order
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        let size = (0..dim)
            .map(|k| {
                let (lo, hi) = bounds[k];
                simplex.iter().map(|(p, _)| Float::abs(p[k] - simplex[0].0[k])).fold(T::zero(), Float::max) / (hi - lo)
            })
            .fold(T::zero(), Float::max);
        if simplex[0].1 - simplex[dim].1 < options.spread_tol && size < options.size_tol {
            // a flat simplex can straddle a contour away from the optimum;
            // restart until a cycle stops improving
            if best.1 - restart_from < options.spread_tol {
                capped = false;
                break;
            }
            simplex.clear();
            continue;
        }
        iterations += 1;
        let centroid: Vec<T> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(p, _)| p[k]).sum::<T>() / T::from_usize_lossy(dim))
            .collect();
        let along = |t: T, from: &[T]| -> Vec<T> {
            let mut p: Vec<T> = centroid.iter().zip(from).map(|(c, w)| *c + t * (*c - *w)).collect();
            clamp(&mut p);
            p
        };
        let worst = simplex[dim].0.clone();
        let xr = along(alpha, &worst);
        let fr = eval(&xr, &mut trace, &mut best)?;
        if fr > simplex[0].1 {
            let xe = along(gamma, &worst);
            let fe = eval(&xe, &mut trace, &mut best)?;
            simplex[dim] = if fe > fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr > simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        if fr > simplex[dim].1 {
            // outside contraction toward the reflected point
            let xc = along(alpha * rho, &worst);
            let fc = eval(&xc, &mut trace, &mut best)?;
            if fc >= fr {
                simplex[dim] = (xc, fc);
                continue;
            }
        } else {
            let xc = along(-rho, &worst);
            let fc = eval(&xc, &mut trace, &mut best)?;
            if fc > simplex[dim].1 {
                simplex[dim] = (xc, fc);
                continue;
            }
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<T> = anchor.iter().zip(&vertex.0).map(|(a, x)| *a + sigma * (*x - *a)).collect();
            clamp(&mut p);
            let v = eval(&p, &mut trace, &mut best)?;
            *vertex = (p, v);
        }
    }
    if capped {
        log::warn!("Nelder-Mead stopped after {} iterations", options.max_iterations);
    }
    let on_boundary = best.0.iter().zip(bounds).any(|(x, (lo, hi))| {
        let slack = (*hi - *lo) * T::lit(1e-9);
        *x <= *lo + slack || *x >= *hi - slack
    });
    Ok(NelderMeadResult {
        best: best.0,
        best_value: best.1,
        start_value,
        iterations,
        evaluations: trace.len(),
        max_iterations_reached: capped,
        on_boundary,
        trace,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport<T: Real> {
    pub parameters: Vec<ScanParameter>,
    pub best: Vec<T>,
    pub best_objective: T,
    pub start: Vec<T>,
    pub start_objective: T,
    pub iterations: usize,
    pub max_iterations_reached: bool,
    pub on_boundary: bool,
    pub trace: Vec<T>,
    pub surface: Option<ScanSurface<T>>,
}

/// Refine the objective from `start` within `bounds` (one per parameter).
pub fn refine<T: Real>(
    problem: &Problem<T>,
    parameters: &[ScanParameter],
    start: &[T],
    bounds: &[(T, T)],
    options: &NelderMeadOptions<T>,
) -> Result<OptimumReport<T>> {
    if parameters.len() != start.len() {
        return Err(Error::DimensionMismatch { expected: parameters.len(), got: start.len() });
    }
    let nm = nelder_mead(|x| problem.evaluate(parameters, x), start, bounds, options)?;
    Ok(OptimumReport {
        parameters: parameters.to_vec(),
        best: nm.best,
        best_objective: nm.best_value,
        start: start.to_vec(),
        start_objective: nm.start_value,
        iterations: nm.iterations,
        max_iterations_reached: nm.max_iterations_reached,
        on_boundary: nm.on_boundary,
        trace: nm.trace,
        surface: None,
    })
}

/// Grid scan followed by refinement from the grid argmax, bounded by the
/// grid extent.
pub fn scan_and_refine<T: Real>(
    grid: &ScanGrid<T>,
    problem: &Problem<T>,
    options: &NelderMeadOptions<T>,
    workers: usize,
) -> Result<OptimumReport<T>> {
    let surface = scan(grid, problem, workers)?;
    let problem = Problem { objective: grid.objective, ..problem.clone() };
    let free: Vec<usize> = (0..grid.axes.len()).filter(|&k| grid.axes[k].count > 1).collect();
    let best_point = surface.best_point().to_vec();
    let mut base = problem.params.clone();
    for (a, v) in grid.axes.iter().zip(&best_point) {
        a.parameter.set(&mut base, *v);
    }
    let problem = Problem { params: base, ..problem };
    let parameters: Vec<ScanParameter> = free.iter().map(|&k| grid.axes[k].parameter).collect();
    let start: Vec<T> = free.iter().map(|&k| best_point[k]).collect();
    let bounds: Vec<(T, T)> = free.iter().map(|&k| (grid.axes[k].min, grid.axes[k].max)).collect();
    let (_, grid_best) = surface.argmax();
    let mut report = if parameters.is_empty() {
        OptimumReport {
            parameters: vec![],
            best: vec![],
            best_objective: grid_best,
            start: vec![],
            start_objective: grid_best,
            iterations: 0,
            max_iterations_reached: false,
            on_boundary: false,
            trace: vec![grid_best],
            surface: None,
        }
    } else {
        refine(&problem, &parameters, &start, &bounds, options)?
    };
    report.surface = Some(surface);
    Ok(report)
}
