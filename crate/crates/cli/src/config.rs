//! JSON run configuration and its translation into core types.

use std::path::{Path, PathBuf};

use facilitrans::disorder::DisorderSpec;
use facilitrans::dynamics::RunOptions;
use facilitrans::hilbert::{make_pure, OccupationPattern, PureState, QuantumState};
use facilitrans::model::{plan_route, ChainGeometry, ModelParams, PulseSchedule, PulseToken};
use facilitrans::optimize::{NelderMeadOptions, Objective, Problem, ScanAxis, ScanGrid, ScanParameter};
use facilitrans::units::PhysicalUnits;
use facilitrans::Complex;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}
fn default_samples() -> usize {
    50
}
fn default_tol() -> f64 {
    1e-8
}
fn default_draws() -> usize {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_sites: usize,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    /// Explicit pulse list; mutually exclusive with `route`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<TokenConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<RouteConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub physical_units: Option<PhysicalUnits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub v1: f64,
    pub v2: f64,
    #[serde(default)]
    pub d_delta1: f64,
    #[serde(default)]
    pub d_delta2: f64,
    #[serde(default = "one")]
    pub omega: f64,
    #[serde(default = "yes")]
    pub include_nnn: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c6: Option<f64>,
    #[serde(default)]
    pub gamma_decay: f64,
    #[serde(default)]
    pub gamma_deph: f64,
    #[serde(default = "half")]
    pub period_scale: f64,
}

/// Spacings in units of `r1`; omitted means `r1 = 1` with `r2` matched to
/// `v2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TokenConfig {
    Index(u8),
    Full(FullToken),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullToken {
    pub detuning: u8,
    #[serde(default = "one")]
    pub duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mismatch: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteConfig {
    pub start: usize,
    pub waypoints: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// One excitation on the given site.
    Single(usize),
    /// `Ψ⁺` on two sites.
    Bell([usize; 2]),
    Pattern(Vec<PatternTerm>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternTerm {
    pub bits: String,
    #[serde(default = "one")]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    /// Defaults to the last site.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_site: Option<usize>,
    /// Evaluate the truth table for single-excitation input (default true).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_table: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default = "default_samples")]
    pub samples_per_pulse: usize,
    #[serde(default = "default_tol")]
    pub lindblad_tol: f64,
    #[serde(default = "yes")]
    pub frame_correction: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self { samples_per_pulse: default_samples(), lindblad_tol: default_tol(), frame_correction: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    /// Standard deviations `(σx, σy, σz)` in units of `r1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<[f64; 3]>,
    /// Standard deviations in nm; needs `physical_units`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_nm: Option<[f64; 3]>,
    pub n_realizations: usize,
    /// Monte-Carlo draws for the interaction-deviation check.
    #[serde(default = "default_draws")]
    pub deviation_draws: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub parameter: ScanParameter,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axes: Vec<AxisConfig>,
    #[serde(default)]
    pub objective: Objective,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_fraction: Option<f64>,
}

/// Everything a command needs, validated.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub geometry: ChainGeometry<f64>,
    pub params: ModelParams<f64>,
    pub schedule: PulseSchedule<f64>,
    pub initial: QuantumState<f64>,
    /// Site of a single-excitation input.
    pub input_site: Option<usize>,
    /// Left site `a` of a Bell input on `(a, a+1)`.
    pub bell_left: Option<usize>,
    pub transfer_site: usize,
    pub truth_table: bool,
    pub options: RunOptions<f64>,
    pub seed: u64,
}

fn invalid(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parse a config document; schema errors name the offending key path.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("at `{path}`: {}", e.into_inner()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn model_params(&self) -> Result<ModelParams<f64>, CliError> {
        let m = &self.model;
        let params = ModelParams {
            omega: m.omega,
            v1: m.v1,
            v2: m.v2,
            d_delta1: m.d_delta1,
            d_delta2: m.d_delta2,
            include_nnn: m.include_nnn,
            c6: m.c6,
            gamma_decay: m.gamma_decay,
            gamma_deph: m.gamma_deph,
            period_scale: m.period_scale,
        };
        params.validate().map_err(|e| invalid("model", e))?;
        Ok(params)
    }

    pub fn geometry(&self) -> Result<ChainGeometry<f64>, CliError> {
        match &self.geometry {
            Some(g) => ChainGeometry::new(self.n_sites, g.r1, g.r2),
            None => ChainGeometry::matched(self.n_sites, self.model.v1, self.model.v2),
        }
        .map_err(|e| invalid("geometry", e))
    }

    pub fn pulse_schedule(&self, geometry: &ChainGeometry<f64>) -> Result<PulseSchedule<f64>, CliError> {
        match (&self.schedule, &self.route) {
            (Some(_), Some(_)) => Err(invalid("schedule", "give either `schedule` or `route`, not both")),
            (None, None) => Err(invalid("schedule", "missing `schedule` or `route`")),
            (Some(tokens), None) => {
                let tokens = tokens
                    .iter()
                    .map(|t| match t {
                        TokenConfig::Index(i) => PulseToken::new(*i),
                        TokenConfig::Full(f) => {
                            PulseToken { detuning: f.detuning, duration: f.duration, mismatch: f.mismatch }
                        }
                    })
                    .collect();
                PulseSchedule::new(tokens).map_err(|e| invalid("schedule", e))
            }
            (None, Some(r)) => plan_route(geometry, r.start, &r.waypoints).map_err(|e| invalid("route", e)),
        }
    }

    pub fn run_options(&self) -> Result<RunOptions<f64>, CliError> {
        let r = &self.run;
        if r.samples_per_pulse == 0 {
            return Err(invalid("run.samples_per_pulse", "must be at least 1"));
        }
        if !(r.lindblad_tol > 0.0) {
            return Err(invalid("run.lindblad_tol", "must be positive"));
        }
        Ok(RunOptions {
            samples_per_pulse: r.samples_per_pulse,
            lindblad_tol: r.lindblad_tol,
            frame_correction: r.frame_correction,
        })
    }

    fn initial_state(&self) -> Result<(QuantumState<f64>, Option<usize>, Option<usize>), CliError> {
        let n = self.n_sites;
        let default = InitialState::Single(self.route.as_ref().map_or(1, |r| r.start));
        let init = self.initial.as_ref().unwrap_or(&default);
        match init {
            InitialState::Single(site) => {
                let p = OccupationPattern::single_excitation(n, *site).map_err(|e| invalid("initial.single", e))?;
                Ok((PureState::basis(&p).into(), Some(*site), None))
            }
            InitialState::Bell([a, b]) => {
                let psi = PureState::bell_pair(n, *a, *b).map_err(|e| invalid("initial.bell", e))?;
                let left = if *b == *a + 1 { Some(*a) } else { None };
                Ok((psi.into(), None, left))
            }
            InitialState::Pattern(terms) => {
                let patterns = terms
                    .iter()
                    .map(|t| OccupationPattern::parse(&t.bits))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid("initial.pattern", e))?;
                if let Some(p) = patterns.iter().find(|p| p.len() != n) {
                    return Err(invalid("initial.pattern", format!("pattern {p} does not have {n} sites")));
                }
                let amps: Vec<Complex<f64>> = terms.iter().map(|t| Complex::new(t.re, t.im)).collect();
                let psi = make_pure(&patterns, &amps).map_err(|e| invalid("initial.pattern", e))?;
                Ok((psi.into(), None, None))
            }
        }
    }

    /// Disorder spread in units of `r1`.
    pub fn disorder_spec(&self, seed: u64) -> Result<Option<DisorderSpec<f64>>, CliError> {
        let Some(d) = &self.disorder else { return Ok(None) };
        let sigma = match (d.sigma, d.sigma_nm) {
            (Some(s), None) => s,
            (None, Some(nm)) => {
                let units = self
                    .physical_units
                    .as_ref()
                    .ok_or_else(|| invalid("disorder.sigma_nm", "requires a `physical_units` block"))?;
                nm.map(|x| units.from_nm(x))
            }
            _ => return Err(invalid("disorder", "give exactly one of `sigma` or `sigma_nm`")),
        };
        if d.deviation_draws == 0 {
            return Err(invalid("disorder.deviation_draws", "must be at least 1"));
        }
        DisorderSpec::new(sigma, d.n_realizations, seed).map(Some).map_err(|e| invalid("disorder", e))
    }

    pub fn scan_grid(&self) -> Result<Option<ScanGrid<f64>>, CliError> {
        let Some(s) = &self.scan else { return Ok(None) };
        let grid = ScanGrid {
            axes: s.axes.iter().map(|a| ScanAxis::new(a.parameter, a.min, a.max, a.count)).collect(),
            objective: s.objective,
        };
        grid.validate().map_err(|e| invalid("scan", e))?;
        Ok(Some(grid))
    }

    pub fn nelder_mead_options(&self) -> Result<NelderMeadOptions<f64>, CliError> {
        let mut o = NelderMeadOptions::default();
        if let Some(c) = &self.optimize {
            if let Some(v) = c.max_iterations {
                o.max_iterations = v;
            }
            if let Some(v) = c.spread_tol {
                o.spread_tol = v;
            }
            if let Some(v) = c.size_tol {
                o.size_tol = v;
            }
            if let Some(v) = c.initial_fraction {
                o.initial_fraction = v;
            }
        }
        if o.max_iterations == 0 || !(o.spread_tol > 0.0) || !(o.size_tol > 0.0) || !(o.initial_fraction > 0.0) {
            return Err(invalid("optimize", "iteration cap and tolerances must be positive"));
        }
        Ok(o)
    }

    /// Validate every block and build the core inputs.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if let Some(u) = &self.physical_units {
            u.validate().map_err(|e| invalid("physical_units", e))?;
        }
        let params = self.model_params()?;
        let geometry = self.geometry()?;
        let schedule = self.pulse_schedule(&geometry)?;
        let options = self.run_options()?;
        let (initial, input_site, bell_left) = self.initial_state()?;
        let transfer_site = self.observables.transfer_site.unwrap_or(self.n_sites);
        if transfer_site == 0 || transfer_site > self.n_sites {
            return Err(invalid(
                "observables.transfer_site",
                format!("site {transfer_site} outside 1..={}", self.n_sites),
            ));
        }
        let seed = self.seed.unwrap_or(0);
        self.disorder_spec(seed)?;
        self.scan_grid()?;
        self.nelder_mead_options()?;
        Ok(Resolved {
            geometry,
            params,
            schedule,
            initial,
            input_site,
            bell_left,
            transfer_site,
            truth_table: self.observables.truth_table.unwrap_or(true) && input_site.is_some(),
            options,
            seed,
        })
    }
}

impl Resolved {
    /// Objective problem for scans; needs a single-excitation input.
    pub fn problem(&self, objective: Objective) -> Result<Problem<f64>, CliError> {
        let in_site = self
            .input_site
            .ok_or_else(|| invalid("initial", "scans and optimization need a single-excitation input"))?;
        Ok(Problem {
            geometry: self.geometry.clone(),
            params: self.params.clone(),
            schedule: self.schedule.clone(),
            in_site,
            out_site: self.transfer_site,
            objective,
            options: self.options.clone(),
        })
    }
}
