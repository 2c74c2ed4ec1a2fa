//! One function per subcommand. Each validates the whole configuration
//! before running anything, so configuration errors never leave partial
//! output behind.

use std::fs;
use std::path::Path;

use facilitrans::disorder::{
    disorder_average, interaction_deviation_estimate, sample_interaction_deviation, DeviationSample,
    DisorderEnsembleResult,
};
use facilitrans::dynamics::{run_schedule, Trajectory};
use facilitrans::hilbert::partial_trace;
use facilitrans::hilbert::{psi_plus, state_fidelity, QuantumState};
use facilitrans::model::{hierarchy_diagnostics, HierarchyReport};
use facilitrans::observables::{bell_sites, transfer_population, truth_table_rows, BellFidelity, FidelityReport};
use facilitrans::optimize::{scan, scan_and_refine, OptimumReport, ScanSurface};
use log::info;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};
use crate::output::{num, sha256_hex, write_csv, write_json, Heatmap};
use crate::CliError;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings that come from flags rather than the config document.
#[derive(Clone, Debug)]
pub struct Invocation {
    pub workers: usize,
    pub svg: bool,
}

#[derive(Serialize)]
struct Diagnostics {
    hierarchy: HierarchyReport<f64>,
    used_lindblad: bool,
    /// Largest re-Hermitization correction applied at a pulse boundary.
    max_hermitization: f64,
    /// Norm (pure) or trace (mixed) of the final state minus one.
    final_norm_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_min_eigenvalue: Option<f64>,
}

#[derive(Serialize)]
struct PhysicalSummary {
    time_unit_us: f64,
    pulse_period_us: f64,
    total_time_us: f64,
    r2_um: f64,
    transport_speed_um_per_us: f64,
    c6_mhz_um6: f64,
}

#[derive(Serialize)]
struct ScanSummary {
    parameters: Vec<&'static str>,
    points: usize,
    best_point: Vec<f64>,
    best_value: f64,
}

#[derive(Serialize)]
struct DeviationRow {
    bond: &'static str,
    v: f64,
    sigma_x: f64,
    estimate: f64,
    monte_carlo: DeviationSample,
}

#[derive(Serialize)]
struct DisorderSummary {
    sigma: [f64; 3],
    n_realizations: usize,
    base_seed: u64,
    transfer_site: usize,
    mean_transfer: f64,
    stderr_transfer: f64,
    final_mean: Vec<f64>,
    final_stderr: Vec<f64>,
    total_resamples: usize,
    deviation: Vec<DeviationRow>,
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    config_sha256: String,
    config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<FidelityReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    physical: Option<PhysicalSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<ScanSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimum: Option<OptimumReport<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disorder: Option<DisorderSummary>,
}

impl<'a> ResultDocument<'a> {
    fn new(command: &'static str, config: &'a RunConfig, seed: u64) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command,
            seed,
            config_sha256: sha256_hex(&config.to_json()),
            config,
            report: None,
            diagnostics: None,
            physical: None,
            scan: None,
            optimum: None,
            disorder: None,
        }
    }
}

fn prepare(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Output(format!("{}: {e}", out.display())))
}

fn physical_summary(config: &RunConfig, r: &Resolved, total_time: f64) -> Option<PhysicalSummary> {
    let u = config.physical_units.as_ref()?;
    // times are in units of 1/Ω; rescale when Ω itself is not 1
    let t = |x: f64| u.to_us(x * r.params.omega);
    Some(PhysicalSummary {
        time_unit_us: u.time_unit_us(),
        pulse_period_us: t(r.params.pulse_period()),
        total_time_us: t(total_time),
        r2_um: u.to_um(r.geometry.r2()),
        transport_speed_um_per_us: u.transport_speed_um_per_us(r.geometry.r2()),
        c6_mhz_um6: u.c6_mhz_um6(r.params.c6_for(r.geometry.r1())),
    })
}

fn site_header(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn boundary_rules(times: &[f64], boundaries: &[f64]) -> Vec<f64> {
    let (t0, t1) = (times[0], *times.last().expect("non-empty"));
    if t1 <= t0 {
        return vec![];
    }
    boundaries.iter().filter(|&&b| b > t0 && b < t1).map(|b| (b - t0) / (t1 - t0)).collect()
}

/// Site × time raster; column `k` shows sample `k`.
fn population_heatmap(
    out: &Path,
    title: &str,
    times: &[f64],
    boundaries: &[f64],
    populations: &[Vec<f64>],
    hash: &str,
) -> Result<(), CliError> {
    let n = populations[0].len();
    let cells: Vec<Vec<f64>> = (0..n).map(|site| populations.iter().map(|p| p[site]).collect()).collect();
    Heatmap {
        title,
        x_label: "time (1/Omega)",
        y_label: "site",
        cells: &cells,
        row_labels: (1..=n).map(|i| i.to_string()).collect(),
        rules: boundary_rules(times, boundaries),
        config_hash: hash,
    }
    .write(&out.join("heatmap.svg"))
}

fn write_trajectory(out: &Path, config: &RunConfig, r: &Resolved, traj: &Trajectory<f64>) -> Result<(), CliError> {
    let n = r.geometry.n_sites();
    let units = config.physical_units.as_ref();
    let mut header = vec!["time".to_string()];
    if units.is_some() {
        header.push("time_us".into());
    }
    header.push("pulse_index".into());
    header.extend(site_header("pop_site_", n));
    let rows = traj.times.iter().zip(&traj.pulse_index).zip(&traj.populations).map(|((t, k), pops)| {
        let mut row = vec![num(*t)];
        if let Some(u) = units {
            row.push(num(u.to_us(*t * r.params.omega)));
        }
        row.push(k.to_string());
        row.extend(pops.iter().map(|p| num(*p)));
        row
    });
    write_csv(&out.join("trajectory.csv"), &header, rows)
}

/// `F_i` on `(a−i, a+1+i)` for every pulse `i ≥ 1` that keeps the pair
/// inside the chain.
fn bell_sequence(traj: &Trajectory<f64>, a: usize, n: usize) -> Result<Vec<BellFidelity<f64>>, CliError> {
    let target = psi_plus::<f64>();
    let mut seq = Vec::new();
    for (i, state) in traj.boundary_states.iter().enumerate().skip(1) {
        let Ok(sites) = bell_sites(a, i, n) else { break };
        let rho = partial_trace(state, sites.0, sites.1)?;
        seq.push(BellFidelity { pulse: i, sites, fidelity: state_fidelity(&rho, &target)? });
    }
    Ok(seq)
}

fn diagnostics(r: &Resolved, traj: &Trajectory<f64>) -> Diagnostics {
    let state = traj.final_state();
    let (drift, min_eig) = match state {
        QuantumState::Pure(psi) => (psi.norm() - 1.0, None),
        QuantumState::Mixed(rho) => (rho.trace() - 1.0, Some(rho.min_eigenvalue())),
    };
    Diagnostics {
        hierarchy: hierarchy_diagnostics(&r.params, &r.geometry),
        used_lindblad: traj.used_lindblad,
        max_hermitization: traj.hermitization.iter().copied().fold(0.0, f64::max),
        final_norm_drift: drift,
        final_min_eigenvalue: min_eig,
    }
}

pub fn simulate(config: &RunConfig, out: &Path, inv: &Invocation) -> Result<(), CliError> {
    let r = config.resolve()?;
    prepare(out)?;
    let n = r.geometry.n_sites();
    let hier = hierarchy_diagnostics(&r.params, &r.geometry);
    for m in &hier.messages {
        log::warn!("{m}");
    }
    let traj = run_schedule(&r.initial, &r.schedule, &r.geometry, &r.params, &r.options)?;
    let last = r.schedule.len();
    let rows = match (r.truth_table, r.input_site) {
        (true, Some(site)) => {
            Some(truth_table_rows(&r.geometry, &r.params, &r.schedule, site, r.transfer_site, &r.options)?)
        }
        _ => None,
    };
    let bell = match r.bell_left {
        Some(a) => bell_sequence(&traj, a, n)?,
        None => vec![],
    };
    let report = FidelityReport {
        truth_table: rows.map(|(p0, p1)| (p0 + p1) / 2.0),
        truth_table_rows: rows,
        transfer_site: r.transfer_site,
        transfer_population: transfer_population(&traj, r.transfer_site, last)?,
        bell_fidelities: bell,
        final_populations: traj.populations.last().expect("non-empty").clone(),
        schedule: r.schedule.indices(),
        seed: Some(r.seed),
    };
    info!("P_{} = {:.6}", report.transfer_site, report.transfer_population);
    if let Some(f) = report.truth_table {
        info!("truth table fidelity {f:.6}");
    }
    let mut doc = ResultDocument::new("simulate", config, r.seed);
    doc.physical = physical_summary(config, &r, *traj.times.last().expect("non-empty"));
    doc.diagnostics = Some(diagnostics(&r, &traj));
    doc.report = Some(report);

    write_trajectory(out, config, &r, &traj)?;
    write_json(&out.join("result.json"), &doc)?;
    if inv.svg {
        population_heatmap(out, "site populations", &traj.times, &traj.boundary_times(), &traj.populations, &doc.config_sha256)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PlanDocument<'a> {
    tool: &'static str,
    version: &'static str,
    tokens: Vec<u8>,
    schedule: &'a facilitrans::model::PulseSchedule<f64>,
    diagnostics: HierarchyReport<f64>,
}

pub fn plan(config: &RunConfig, out: &Path) -> Result<(), CliError> {
    let r = config.resolve()?;
    prepare(out)?;
    let doc = PlanDocument {
        tool: TOOL,
        version: VERSION,
        tokens: r.schedule.indices(),
        schedule: &r.schedule,
        diagnostics: hierarchy_diagnostics(&r.params, &r.geometry),
    };
    for m in &doc.diagnostics.messages {
        log::warn!("{m}");
    }
    info!("schedule {:?}", doc.tokens);
    write_json(&out.join("schedule.json"), &doc)
}

fn write_surface(out: &Path, surface: &ScanSurface<f64>) -> Result<(), CliError> {
    let mut header: Vec<String> = surface.parameters.iter().map(|p| p.name().to_string()).collect();
    header.push("objective".into());
    let rows = surface.points.iter().zip(&surface.values).map(|(p, v)| {
        let mut row: Vec<String> = p.iter().map(|x| num(*x)).collect();
        row.push(num(*v));
        row
    });
    write_csv(&out.join("surface.csv"), &header, rows)
}

/// Objective raster for two-axis grids: first axis down, second across.
fn surface_heatmap(out: &Path, surface: &ScanSurface<f64>, hash: &str) -> Result<(), CliError> {
    if surface.parameters.len() != 2 {
        return Ok(());
    }
    let mut row_keys: Vec<f64> = Vec::new();
    for p in &surface.points {
        if row_keys.last() != Some(&p[0]) {
            row_keys.push(p[0]);
        }
    }
    let cols = surface.points.len() / row_keys.len();
    let cells: Vec<Vec<f64>> = surface.values.chunks(cols).map(<[f64]>::to_vec).collect();
    let x = surface.parameters[1].name();
    let y = surface.parameters[0].name();
    Heatmap {
        title: "objective",
        x_label: x,
        y_label: y,
        cells: &cells,
        row_labels: row_keys.iter().map(|v| format!("{v:.3}")).collect(),
        rules: vec![],
        config_hash: hash,
    }
    .write(&out.join("surface.svg"))
}

fn summarize(surface: &ScanSurface<f64>) -> ScanSummary {
    let (k, best) = surface.argmax();
    ScanSummary {
        parameters: surface.parameters.iter().map(|p| p.name()).collect(),
        points: surface.points.len(),
        best_point: surface.points[k].clone(),
        best_value: best,
    }
}

fn scan_inputs(config: &RunConfig) -> Result<(Resolved, facilitrans::optimize::ScanGrid<f64>), CliError> {
    let r = config.resolve()?;
    let grid = config.scan_grid()?.ok_or_else(|| CliError::Config("scan: block is required".into()))?;
    r.problem(grid.objective)?;
    Ok((r, grid))
}

pub fn scan_cmd(config: &RunConfig, out: &Path, inv: &Invocation) -> Result<(), CliError> {
    let (r, grid) = scan_inputs(config)?;
    let problem = r.problem(grid.objective)?;
    prepare(out)?;
    let surface = scan(&grid, &problem, inv.workers)?;
    let mut doc = ResultDocument::new("scan", config, r.seed);
    let summary = summarize(&surface);
    info!("best {:?} at {:?}", summary.best_value, summary.best_point);
    doc.scan = Some(summary);
    write_surface(out, &surface)?;
    write_json(&out.join("result.json"), &doc)?;
    if inv.svg {
        surface_heatmap(out, &surface, &doc.config_sha256)?;
    }
    Ok(())
}

pub fn optimize_cmd(config: &RunConfig, out: &Path, inv: &Invocation) -> Result<(), CliError> {
    let (r, grid) = scan_inputs(config)?;
    let problem = r.problem(grid.objective)?;
    let nm = config.nelder_mead_options()?;
    prepare(out)?;
    let mut report = scan_and_refine(&grid, &problem, &nm, inv.workers)?;
    let surface = report.surface.take().expect("scan_and_refine keeps the surface");
    if report.max_iterations_reached {
        log::warn!("refinement stopped at the iteration cap ({})", nm.max_iterations);
    }
    if report.on_boundary {
        log::warn!("optimum sits on the scan boundary");
    }
    info!("optimum {:.6} at {:?}", report.best_objective, report.best);
    let mut doc = ResultDocument::new("optimize", config, r.seed);
    doc.scan = Some(summarize(&surface));
    doc.optimum = Some(report);
    write_surface(out, &surface)?;
    write_json(&out.join("result.json"), &doc)?;
    if inv.svg {
        surface_heatmap(out, &surface, &doc.config_sha256)?;
    }
    Ok(())
}

fn write_ensemble(out: &Path, ens: &DisorderEnsembleResult<f64>, n: usize) -> Result<(), CliError> {
    let mut header = vec!["time".to_string(), "pulse_index".to_string()];
    header.extend(site_header("mean_site_", n));
    header.extend(site_header("stderr_site_", n));
    let rows = (0..ens.times.len()).map(|k| {
        let mut row = vec![num(ens.times[k]), ens.pulse_index[k].to_string()];
        row.extend(ens.mean[k].iter().map(|x| num(*x)));
        row.extend(ens.stderr[k].iter().map(|x| num(*x)));
        row
    });
    write_csv(&out.join("disorder_mean.csv"), &header, rows)?;

    let mut header = vec!["realization".to_string(), "base_seed".into(), "stream".into(), "resamples".into()];
    header.extend(site_header("final_site_", n));
    let rows = ens.realizations.iter().map(|rec| {
        let mut row = vec![rec.index.to_string(), rec.base_seed.to_string(), rec.index.to_string(), rec.resamples.to_string()];
        row.extend(rec.final_populations.iter().map(|x| num(*x)));
        row
    });
    write_csv(&out.join("realizations.csv"), &header, rows)
}

fn deviation_rows(r: &Resolved, sigma_x: f64, draws: usize, seed: u64) -> Result<Vec<DeviationRow>, CliError> {
    let c6 = r.params.c6_for(r.geometry.r1());
    [("r1", r.geometry.r1()), ("r2", r.geometry.r2())]
        .into_iter()
        .map(|(bond, dist)| {
            let v = c6 / dist.powi(6);
            Ok(DeviationRow {
                bond,
                v,
                sigma_x,
                estimate: interaction_deviation_estimate(v, sigma_x, c6)?,
                monte_carlo: sample_interaction_deviation(dist, sigma_x, c6, draws, seed)?,
            })
        })
        .collect()
}

pub fn disorder_cmd(config: &RunConfig, out: &Path, inv: &Invocation) -> Result<(), CliError> {
    let r = config.resolve()?;
    let spec = config.disorder_spec(r.seed)?.ok_or_else(|| CliError::Config("disorder: block is required".into()))?;
    let draws = config.disorder.as_ref().map_or(0, |d| d.deviation_draws);
    prepare(out)?;
    let ens = disorder_average(&r.geometry, &r.params, &r.schedule, &r.initial, &spec, &r.options, inv.workers)?;
    let n = r.geometry.n_sites();
    let deviation = deviation_rows(&r, spec.sigma[0], draws, r.seed)?;
    let site = r.transfer_site;
    let summary = DisorderSummary {
        sigma: spec.sigma,
        n_realizations: spec.n_realizations,
        base_seed: spec.base_seed,
        transfer_site: site,
        mean_transfer: ens.final_mean()[site - 1],
        stderr_transfer: ens.final_stderr()[site - 1],
        final_mean: ens.final_mean().to_vec(),
        final_stderr: ens.final_stderr().to_vec(),
        total_resamples: ens.total_resamples(),
        deviation,
    };
    info!("mean P_{site} = {:.6} ± {:.6}", summary.mean_transfer, summary.stderr_transfer);

    write_ensemble(out, &ens, n)?;
    let header: Vec<String> =
        ["bond", "v", "sigma_x", "estimate", "mc_mean_abs", "mc_rms", "draws"].iter().map(|s| s.to_string()).collect();
    let rows = summary.deviation.iter().map(|d| {
        vec![
            d.bond.to_string(),
            num(d.v),
            num(d.sigma_x),
            num(d.estimate),
            num(d.monte_carlo.mean_abs),
            num(d.monte_carlo.rms),
            d.monte_carlo.draws.to_string(),
        ]
    });
    write_csv(&out.join("deviation.csv"), &header, rows)?;

    let mut doc = ResultDocument::new("disorder", config, r.seed);
    doc.physical = physical_summary(config, &r, *ens.times.last().expect("non-empty"));
    let boundaries: Vec<f64> = {
        let mut b = Vec::new();
        let mut t = 0.0;
        for tok in &r.schedule.tokens {
            t += tok.duration * r.params.pulse_period();
            b.push(t);
        }
        b
    };
    let hash = doc.config_sha256.clone();
    doc.disorder = Some(summary);
    write_json(&out.join("result.json"), &doc)?;
    if inv.svg {
        population_heatmap(out, "mean site populations", &ens.times, &boundaries, &ens.mean, &hash)?;
    }
    Ok(())
}
