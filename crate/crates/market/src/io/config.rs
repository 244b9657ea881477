//! TOML run configuration: schema, validation, defaults.

use serde::{Deserialize, Serialize};

use crate::analysis::{PerturbParam, Scheme};
use crate::calibrate::CalibrationTargets;
use crate::error::{Error, Result};
use crate::params::{LevySide, ModelParams, Policy};
use crate::solver::SolverConfig;

/// The bundled San Francisco default configuration.
pub fn sf_default_toml() -> &'static str {
    include_str!("sf_default.toml")
}

/// The bundled San Francisco default, parsed and validated.
pub fn sf_default_spec() -> RunSpec {
    parse_config_str(sf_default_toml()).expect("bundled default config must parse")
}

/// Everything one run needs, with defaults applied and units converted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub params: ModelParams,
    pub policy: Policy,
    pub solver: SolverConfig,
    pub sweep: SweepSpec,
    pub compare: CompareSpec,
    pub sensitivity: SensitivitySpec,
    pub calibration: Option<CalibrationTargets>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub scheme: Scheme,
    /// Explicit grid bounds and size; `None` means the scheme default.
    pub grid: Option<(f64, f64, usize)>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::Trip,
            grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSpec {
    /// Trip-charge levels at which to run the equal-revenue comparison.
    pub p_trip_levels: Vec<f64>,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            p_trip_levels: crate::analysis::linear_grid(0.2, 2.0, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivitySpec {
    pub perturbations: Vec<(PerturbParam, f64)>,
    pub grid: Option<(f64, f64, usize)>,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        Self {
            perturbations: vec![
                (PerturbParam::Lambda0, 0.05),
                (PerturbParam::Lambda0, -0.05),
                (PerturbParam::N0, 0.05),
                (PerturbParam::N0, -0.05),
                (PerturbParam::Alpha, 0.05),
                (PerturbParam::Alpha, -0.05),
            ],
            grid: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (expected 'csv' or 'json')"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec![OutputFormat::Csv],
        }
    }
}

// ---------------------------------------------------------------------------
// Raw on-disk schema. Field names are the config keys; units live in the
// names. `deny_unknown_fields` turns a mis-united key into a parse error
// that names the offender and lists what was expected.
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: Option<RawParams>,
    policy: Option<RawPolicy>,
    solver: Option<RawSolver>,
    sweep: Option<RawSweep>,
    compare: Option<RawCompare>,
    sensitivity: Option<RawSensitivity>,
    calibration: Option<RawCalibration>,
    output: Option<RawOutput>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    lambda0_per_min: f64,
    n0_drivers: f64,
    m_pickup: f64,
    trip_len_mi: f64,
    v_free_mph: f64,
    kappa_mph_per_driver: f64,
    alpha_usd_per_min: f64,
    beta_usd_per_min: f64,
    eps_per_usd: f64,
    c_out_usd: f64,
    sigma_per_usd_hr: f64,
    w_res_usd_hr: f64,
}

const REQUIRED_PARAM_KEYS: &str = "lambda0_per_min (passengers/min), n0_drivers (count), \
m_pickup (mi/min x min x sqrt(drivers)), trip_len_mi (miles), v_free_mph (mph), \
kappa_mph_per_driver (mph per driver), alpha_usd_per_min ($/min), beta_usd_per_min ($/min), \
eps_per_usd (1/$), c_out_usd ($/trip), sigma_per_usd_hr (1/($/hr)), w_res_usd_hr ($/hr)";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    w_min_usd_hr: Option<f64>,
    #[serde(default)]
    p_trip_usd: f64,
    #[serde(default)]
    p_time_usd_hr: f64,
    levy_side: Option<LevySide>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    foc_tol_usd: Option<f64>,
    n_grid: Option<usize>,
    n_refine_tol_drivers: Option<f64>,
    lam_bracket_margin: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    scheme: Option<Scheme>,
    grid_lo: Option<f64>,
    grid_hi: Option<f64>,
    grid_n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    p_trip_levels_usd: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensitivity {
    perturbations: Option<Vec<RawPerturbation>>,
    grid_lo: Option<f64>,
    grid_hi: Option<f64>,
    grid_n: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturbation {
    param: PerturbParam,
    rel_delta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    lam_star_per_min: f64,
    n_star_drivers: f64,
    p_f_star_usd: f64,
    w_star_usd_hr: f64,
    tp_star_min: f64,
    tnc_share: f64,
    driver_share: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    formats: Option<Vec<OutputFormat>>,
}

fn resolve_grid(
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
    section: &str,
) -> Result<Option<(f64, f64, usize)>> {
    match (lo, hi, n) {
        (None, None, None) => Ok(None),
        (Some(lo), Some(hi), Some(n)) => {
            if !(hi > lo) || n < 2 {
                return Err(Error::Config(format!(
                    "[{section}] grid must satisfy grid_hi > grid_lo and grid_n >= 2"
                )));
            }
            Ok(Some((lo, hi, n)))
        }
        _ => Err(Error::Config(format!(
            "[{section}] grid needs all of grid_lo, grid_hi, grid_n (or none)"
        ))),
    }
}

/// Parse and validate a configuration string.
pub fn parse_config_str(text: &str) -> Result<RunSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;

    let Some(rp) = raw.params else {
        return Err(Error::Config(format!(
            "config is missing the required [params] section; required keys: {REQUIRED_PARAM_KEYS}"
        )));
    };
    let params = ModelParams {
        lambda0: rp.lambda0_per_min,
        n0: rp.n0_drivers,
        m_const: rp.m_pickup,
        trip_len: rp.trip_len_mi,
        v_free: rp.v_free_mph,
        kappa: rp.kappa_mph_per_driver,
        alpha: rp.alpha_usd_per_min,
        beta: rp.beta_usd_per_min,
        eps: rp.eps_per_usd,
        c_out: rp.c_out_usd,
        sigma: rp.sigma_per_usd_hr,
        w_res: rp.w_res_usd_hr,
    };
    params.validate()?;

    let policy = match raw.policy {
        Some(p) => Policy {
            w_min: p.w_min_usd_hr,
            p_trip: p.p_trip_usd,
            p_time: p.p_time_usd_hr,
            levy_side: p.levy_side.unwrap_or_default(),
        },
        None => Policy::default(),
    };
    policy.validate()?;

    let defaults = SolverConfig::default();
    let solver = match raw.solver {
        Some(s) => SolverConfig {
            foc_tol: s.foc_tol_usd.unwrap_or(defaults.foc_tol),
            n_grid: s.n_grid.unwrap_or(defaults.n_grid),
            n_refine_tol: s.n_refine_tol_drivers.unwrap_or(defaults.n_refine_tol),
            lam_bracket_margin: s.lam_bracket_margin.unwrap_or(defaults.lam_bracket_margin),
        },
        None => defaults,
    };
    solver.validate()?;

    let sweep = match raw.sweep {
        Some(s) => SweepSpec {
            scheme: s.scheme.unwrap_or(Scheme::Trip),
            grid: resolve_grid(s.grid_lo, s.grid_hi, s.grid_n, "sweep")?,
        },
        None => SweepSpec::default(),
    };

    let compare = match raw.compare {
        Some(c) => {
            if c.p_trip_levels_usd.is_empty() {
                return Err(Error::Config(
                    "[compare] p_trip_levels_usd must not be empty".into(),
                ));
            }
            CompareSpec {
                p_trip_levels: c.p_trip_levels_usd,
            }
        }
        None => CompareSpec::default(),
    };

    let sensitivity = match raw.sensitivity {
        Some(s) => SensitivitySpec {
            perturbations: s
                .perturbations
                .map(|v| v.into_iter().map(|p| (p.param, p.rel_delta)).collect())
                .unwrap_or_else(|| SensitivitySpec::default().perturbations),
            grid: resolve_grid(s.grid_lo, s.grid_hi, s.grid_n, "sensitivity")?,
        },
        None => SensitivitySpec::default(),
    };

    let calibration = match raw.calibration {
        Some(c) => {
            let t = CalibrationTargets {
                lam_star: c.lam_star_per_min,
                n_star: c.n_star_drivers,
                p_f_star: c.p_f_star_usd,
                w_star: c.w_star_usd_hr,
                tp_star: c.tp_star_min,
                tnc_share: c.tnc_share,
                driver_share: c.driver_share,
            };
            t.validate()?;
            Some(t)
        }
        None => None,
    };

    let output = match raw.output {
        Some(o) => OutputSpec {
            dir: o.dir.unwrap_or_else(|| OutputSpec::default().dir),
            formats: o.formats.unwrap_or_else(|| OutputSpec::default().formats),
        },
        None => OutputSpec::default(),
    };
    if output.formats.is_empty() {
        return Err(Error::Config("[output] formats must not be empty".into()));
    }

    Ok(RunSpec {
        params,
        policy,
        solver,
        sweep,
        compare,
        sensitivity,
        calibration,
        output,
    })
}

/// Read and parse a configuration file.
pub fn parse_config(path: &std::path::Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text)
}
