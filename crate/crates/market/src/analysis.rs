//! Experiment layer: tax sweeps, regime thresholds, equal-revenue
//! comparison of the two charge schemes, incidence and sensitivity reports.
//!
//! Sweep rows are independent solves and are evaluated in parallel; tables
//! are assembled in grid order regardless of execution order, so output is
//! deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::params::{LevySide, ModelParams, Policy};
use crate::solver::{self, Equilibrium, SolverConfig};

/// Congestion-charge scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Per-trip charge, $/trip.
    Trip,
    /// Per-vehicle-hour charge, $/hour.
    Time,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Trip => "trip",
            Scheme::Time => "time",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trip" => Ok(Scheme::Trip),
            "time" => Ok(Scheme::Time),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected 'trip' or 'time')"
            ))),
        }
    }
}

/// One solved grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tax_level: f64,
    pub eq: Equilibrium,
}

/// A grid point whose solve failed; the sweep continues without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepFailure {
    pub tax_level: f64,
    pub message: String,
}

/// Ordered equilibria over a tax grid, the unit every report is built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub scheme: Scheme,
    pub w_min: f64,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<SweepFailure>,
}

impl SweepTable {
    pub fn row_at(&self, tax_level: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.tax_level - tax_level).abs() < 1e-12)
    }
}

/// Evenly spaced grid including both endpoints.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 1);
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Default grids for the case-study charge ranges.
pub fn default_grid(scheme: Scheme) -> Vec<f64> {
    match scheme {
        Scheme::Trip => linear_grid(0.0, 3.0, 100),
        Scheme::Time => linear_grid(0.0, 10.0, 100),
    }
}

fn policy_for(scheme: Scheme, w_min: f64, level: f64, levy_side: LevySide) -> Policy {
    let mut p = match scheme {
        Scheme::Trip => Policy::trip_tax(w_min, level),
        Scheme::Time => Policy::time_tax(w_min, level),
    };
    p.levy_side = levy_side;
    p
}

/// Solve one equilibrium per grid point under a fixed wage floor.
pub fn sweep(
    params: &ModelParams,
    w_min: f64,
    scheme: Scheme,
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<SweepTable> {
    sweep_with_levy_side(
        params,
        w_min,
        scheme,
        grid,
        LevySide::PassengerOrDriver,
        cfg,
    )
}

/// [`sweep`] with the reported fares expressed under a chosen levy side.
pub fn sweep_with_levy_side(
    params: &ModelParams,
    w_min: f64,
    scheme: Scheme,
    grid: &[f64],
    levy_side: LevySide,
    cfg: &SolverConfig,
) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::Domain("sweep grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    let solved: Vec<(f64, Result<Equilibrium>)> = grid
        .par_iter()
        .map(|&level| {
            let pol = policy_for(scheme, w_min, level, levy_side);
            (level, solver::solve(params, &pol, cfg))
        })
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (tax_level, res) in solved {
        match res {
            Ok(eq) => rows.push(SweepRow { tax_level, eq }),
            Err(e) => failures.push(SweepFailure {
                tax_level,
                message: e.to_string(),
            }),
        }
    }
    Ok(SweepTable {
        scheme,
        w_min,
        rows,
        failures,
    })
}

/// Largest charge at which the fleet stays on the full-hire plateau
/// `N₀·F_d(w_min)` (within 0.1%), refined by bisection between the last
/// on-plateau and first off-plateau grid levels.
pub fn detect_threshold(
    params: &ModelParams,
    table: &SweepTable,
    cfg: &SolverConfig,
) -> Result<f64> {
    let plateau = model::supply(params, table.w_min);
    let on_plateau = |n: f64| (n - plateau).abs() <= 1e-3 * plateau;
    let first_off = table
        .rows
        .iter()
        .position(|r| !on_plateau(r.eq.outcome.n_drivers));
    let Some(idx) = first_off else {
        return Err(Error::ThresholdNotFound(format!(
            "fleet stays on the plateau over the whole grid (max level {})",
            table.rows.last().map(|r| r.tax_level).unwrap_or(f64::NAN)
        )));
    };
    if idx == 0 {
        return Err(Error::ThresholdNotFound(
            "fleet is off the plateau already at the lowest grid level".into(),
        ));
    }
    let lo = table.rows[idx - 1].tax_level;
    let hi = table.rows[idx].tax_level;
    let scheme = table.scheme;
    let w_min = table.w_min;
    crate::numeric::bisect_predicate(lo, hi, cfg.n_refine_tol, |level| {
        let pol = policy_for(scheme, w_min, level, LevySide::PassengerOrDriver);
        let eq = solver::solve(params, &pol, cfg)?;
        Ok(on_plateau(eq.outcome.n_drivers))
    })
}

/// Profit-maximizing wage in the absence of regulation.
pub fn tilde_wage(params: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    Ok(solver::solve_unregulated(params, cfg)?.outcome.wage_hr)
}

/// Wage floor above which full hire stops being optimal even with no
/// charge: the root in `w` of the marginal profit of hiring at the cap,
/// `60·∂Γ(N₀F_d(w), 0)/∂N − w`.
pub fn wage_threshold_w1(params: &ModelParams, cfg: &SolverConfig) -> Result<f64> {
    let w_tilde = tilde_wage(params, cfg)?;
    let slack = |w: f64| -> Result<f64> {
        let cap = model::supply(params, w);
        Ok(60.0 * solver::dgamma_dn(params, cap, 0.0, cfg)? - w)
    };
    let (lo, hi) = (w_tilde, w_tilde + 30.0);
    if slack(lo)? <= 0.0 {
        return Err(Error::ThresholdNotFound(format!(
            "marginal profit of hiring is not positive at the unregulated wage {w_tilde}"
        )));
    }
    if slack(hi)? > 0.0 {
        return Err(Error::ThresholdNotFound(format!(
            "no sign change of the hiring margin in [{lo}, {hi}]"
        )));
    }
    crate::numeric::bisect_predicate(lo, hi, 1e-7, |w| Ok(slack(w)? > 0.0))
}

/// Result of inverting a revenue target into a charge level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedRevenue {
    pub tax_level: f64,
    pub tax_hr: f64,
    /// Set when a non-monotone revenue curve forced grid inversion.
    pub used_grid_fallback: bool,
}

/// Matching tolerance on a revenue target, $/hr.
const REVENUE_MATCH_TOL: f64 = 0.1;

fn tax_at(
    params: &ModelParams,
    w_min: f64,
    scheme: Scheme,
    level: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    let pol = policy_for(scheme, w_min, level, LevySide::PassengerOrDriver);
    Ok(solver::solve(params, &pol, cfg)?.outcome.tax_hr)
}

/// Charge level at which the scheme collects `target_tax_hr`, found by
/// bracket growth plus bisection on the (monotone) revenue curve. Falls
/// back to grid inversion when monotonicity breaks.
pub fn match_revenue(
    params: &ModelParams,
    w_min: f64,
    target_tax_hr: f64,
    scheme: Scheme,
    cfg: &SolverConfig,
) -> Result<MatchedRevenue> {
    if target_tax_hr < 0.0 {
        return Err(Error::Domain(format!(
            "revenue target must be non-negative, got {target_tax_hr}"
        )));
    }
    if target_tax_hr <= REVENUE_MATCH_TOL {
        return Ok(MatchedRevenue {
            tax_level: 0.0,
            tax_hr: 0.0,
            used_grid_fallback: false,
        });
    }
    let (seed, cap) = match scheme {
        Scheme::Trip => (1.0, 64.0),
        Scheme::Time => (2.0, 512.0),
    };
    let mut lo = 0.0;
    let mut tax_lo = 0.0;
    let mut hi = seed;
    let mut tax_hi = tax_at(params, w_min, scheme, hi, cfg)?;
    let mut monotone = true;
    while tax_hi < target_tax_hr {
        if tax_hi < tax_lo {
            monotone = false; // passed the revenue peak while growing
            break;
        }
        if hi >= cap {
            monotone = false;
            break;
        }
        lo = hi;
        tax_lo = tax_hi;
        hi = (hi * 2.0).min(cap);
        tax_hi = tax_at(params, w_min, scheme, hi, cfg)?;
    }

    if monotone {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let tax_mid = tax_at(params, w_min, scheme, mid, cfg)?;
            if (tax_mid - target_tax_hr).abs() < REVENUE_MATCH_TOL {
                return Ok(MatchedRevenue {
                    tax_level: mid,
                    tax_hr: tax_mid,
                    used_grid_fallback: false,
                });
            }
            if tax_mid < target_tax_hr {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi) {
                break; // revenue jump steeper than the tolerance; fall back
            }
        }
    }

    // Grid inversion: scan the full range, honor the first upward crossing.
    let grid = linear_grid(0.0, cap, 2048);
    let mut max_tax = 0.0f64;
    let mut crossing: Option<(f64, f64)> = None;
    let mut prev = (0.0, 0.0);
    for &level in &grid[1..] {
        let t = tax_at(params, w_min, scheme, level, cfg)?;
        if t > max_tax {
            max_tax = t;
        }
        if crossing.is_none() && prev.1 < target_tax_hr && t >= target_tax_hr {
            crossing = Some((prev.0, level));
        }
        prev = (level, t);
    }
    let Some((c_lo, c_hi)) = crossing else {
        return Err(Error::RevenueRange {
            target: target_tax_hr,
            max_achievable: max_tax,
        });
    };
    let level = crate::numeric::bisect_predicate(c_lo, c_hi, 1e-10 * (1.0 + c_hi), |x| {
        Ok(tax_at(params, w_min, scheme, x, cfg)? < target_tax_hr)
    })?;
    let tax_hr = tax_at(params, w_min, scheme, level, cfg)?;
    if (tax_hr - target_tax_hr).abs() >= REVENUE_MATCH_TOL {
        return Err(Error::RevenueRange {
            target: target_tax_hr,
            max_achievable: max_tax,
        });
    }
    Ok(MatchedRevenue {
        tax_level: level,
        tax_hr,
        used_grid_fallback: true,
    })
}

/// Relative ordering of one quantity between the two schemes at equal revenue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityOrder {
    TimeHigher,
    Equal,
    TimeLower,
}

fn order_of(time_val: f64, trip_val: f64) -> QuantityOrder {
    let scale = time_val.abs().max(trip_val.abs()).max(1e-12);
    if (time_val - trip_val).abs() <= 1e-9 * scale {
        QuantityOrder::Equal
    } else if time_val > trip_val {
        QuantityOrder::TimeHigher
    } else {
        QuantityOrder::TimeLower
    }
}

/// Per-quantity ordering flags of the time-based scheme against the
/// trip-based one at matched revenue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParetoFlags {
    pub lambda: QuantityOrder,
    pub cost: QuantityOrder,
    pub profit: QuantityOrder,
    pub n_drivers: QuantityOrder,
    pub wage: QuantityOrder,
}

/// Both equilibria at one matched revenue target, with ordering flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub target_tax_hr: f64,
    pub p_trip: f64,
    pub p_time: f64,
    pub trip: Equilibrium,
    pub time: Equilibrium,
    pub flags: ParetoFlags,
}

/// Solve the trip-based equilibrium at `p_t`, match its revenue with a
/// time-based charge, and compare the two outcomes.
pub fn pareto_compare(
    params: &ModelParams,
    w_min: f64,
    p_t: f64,
    cfg: &SolverConfig,
) -> Result<ComparisonRow> {
    let trip = solver::solve_trip_tax(params, w_min, p_t, cfg)?;
    let target = trip.outcome.tax_hr;
    let matched = match_revenue(params, w_min, target, Scheme::Time, cfg)?;
    let time = solver::solve_time_tax(params, w_min, matched.tax_level, cfg)?;
    let flags = ParetoFlags {
        lambda: order_of(time.outcome.lam, trip.outcome.lam),
        cost: order_of(time.outcome.cost, trip.outcome.cost),
        profit: order_of(time.outcome.profit_hr, trip.outcome.profit_hr),
        n_drivers: order_of(time.outcome.n_drivers, trip.outcome.n_drivers),
        wage: order_of(time.outcome.wage_hr, trip.outcome.wage_hr),
    };
    Ok(ComparisonRow {
        target_tax_hr: target,
        p_trip: p_t,
        p_time: matched.tax_level,
        trip,
        time,
        flags,
    })
}

/// Percentage changes against the zero-charge baseline under the same floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncidenceDeltas {
    pub d_cost_pct: f64,
    pub d_wage_pct: f64,
    pub d_profit_pct: f64,
}

/// Tax incidence of a charge: who bears it, measured as percentage changes
/// of passenger cost, driver wage and platform profit from the no-charge
/// baseline.
pub fn incidence_report(
    params: &ModelParams,
    w_min: f64,
    scheme: Scheme,
    level: f64,
    cfg: &SolverConfig,
) -> Result<IncidenceDeltas> {
    let base = solver::solve_min_wage(params, w_min, cfg)?.outcome;
    let pol = policy_for(scheme, w_min, level, LevySide::PassengerOrDriver);
    let taxed = solver::solve(params, &pol, cfg)?.outcome;
    let pct = |from: f64, to: f64| 100.0 * (to - from) / from;
    Ok(IncidenceDeltas {
        d_cost_pct: pct(base.cost, taxed.cost),
        d_wage_pct: pct(base.wage_hr, taxed.wage_hr),
        d_profit_pct: pct(base.profit_hr, taxed.profit_hr),
    })
}

/// Parameter perturbed by the sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbParam {
    Lambda0,
    N0,
    Alpha,
}

impl std::fmt::Display for PerturbParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PerturbParam::Lambda0 => "lambda0",
            PerturbParam::N0 => "n0",
            PerturbParam::Alpha => "alpha",
        })
    }
}

impl std::str::FromStr for PerturbParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda0" => Ok(PerturbParam::Lambda0),
            "n0" => Ok(PerturbParam::N0),
            "alpha" => Ok(PerturbParam::Alpha),
            other => Err(Error::Config(format!(
                "unknown sensitivity parameter '{other}' (expected lambda0, n0 or alpha)"
            ))),
        }
    }
}

fn perturbed_params(params: &ModelParams, which: PerturbParam, rel_delta: f64) -> ModelParams {
    let mut p = params.clone();
    match which {
        PerturbParam::Lambda0 => p.lambda0 *= 1.0 + rel_delta,
        PerturbParam::N0 => p.n0 *= 1.0 + rel_delta,
        PerturbParam::Alpha => p.alpha *= 1.0 + rel_delta,
    }
    p
}

/// One perturbed sweep inside a sensitivity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedTable {
    pub param: PerturbParam,
    pub rel_delta: f64,
    pub table: SweepTable,
}

/// Checkable qualitative facts of the sensitivity analysis. A flag is
/// `None` when the perturbation list does not exercise it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SensitivityFlags {
    /// Fleet size in the shared first regime does not react to λ₀.
    pub first_regime_n_invariant_to_lambda0: Option<bool>,
    pub profit_increasing_in_lambda0: Option<bool>,
    pub profit_increasing_in_n0: Option<bool>,
    pub profit_decreasing_in_alpha: Option<bool>,
}

/// Nested time-charge sweeps under perturbed parameter sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub nominal: SweepTable,
    pub perturbed: Vec<PerturbedTable>,
    pub flags: SensitivityFlags,
}

/// Re-run the time-charge sweep for each perturbed parameter set and report
/// the qualitative comparisons as flags.
pub fn sensitivity_sweep(
    params: &ModelParams,
    w_min: f64,
    perturbations: &[(PerturbParam, f64)],
    grid: &[f64],
    cfg: &SolverConfig,
) -> Result<SensitivityReport> {
    let nominal = sweep(params, w_min, Scheme::Time, grid, cfg)?;
    let mut perturbed = Vec::with_capacity(perturbations.len());
    for &(which, delta) in perturbations {
        let p = perturbed_params(params, which, delta);
        p.validate()?;
        let table = sweep(&p, w_min, Scheme::Time, grid, cfg)?;
        perturbed.push(PerturbedTable {
            param: which,
            rel_delta: delta,
            table,
        });
    }

    let nominal_first = nominal.rows.first();
    let mut flags = SensitivityFlags::default();
    let profit0 = |t: &SweepTable| t.rows.first().map(|r| r.eq.outcome.profit_hr);
    let check_profit = |which: PerturbParam, increasing: bool| -> Option<bool> {
        let mut any = false;
        let mut ok = true;
        for pt in perturbed.iter().filter(|pt| pt.param == which) {
            let (Some(p_nom), Some(p_pert)) = (profit0(&nominal), profit0(&pt.table)) else {
                continue;
            };
            any = true;
            let expect_higher = (pt.rel_delta > 0.0) == increasing;
            ok &= if expect_higher {
                p_pert > p_nom
            } else {
                p_pert < p_nom
            };
        }
        any.then_some(ok)
    };
    flags.profit_increasing_in_lambda0 = check_profit(PerturbParam::Lambda0, true);
    flags.profit_increasing_in_n0 = check_profit(PerturbParam::N0, true);
    flags.profit_decreasing_in_alpha = check_profit(PerturbParam::Alpha, false);

    // λ₀ does not enter the full-hire fleet size at all, so in the shared
    // first regime the perturbed fleets must coincide with the nominal one.
    let lambda0_tables: Vec<&PerturbedTable> = perturbed
        .iter()
        .filter(|pt| pt.param == PerturbParam::Lambda0)
        .collect();
    if !lambda0_tables.is_empty() {
        if let Some(first) = nominal_first {
            let n_ref = first.eq.outcome.n_drivers;
            let mut ok = true;
            for pt in &lambda0_tables {
                for (nr, pr) in nominal.rows.iter().zip(pt.table.rows.iter()) {
                    let both_full_hire = nr.eq.regime == crate::solver::Regime::WageFloorFullHire
                        && pr.eq.regime == crate::solver::Regime::WageFloorFullHire;
                    if both_full_hire {
                        ok &= (pr.eq.outcome.n_drivers - n_ref).abs() <= 1e-9 * n_ref;
                    }
                }
            }
            flags.first_regime_n_invariant_to_lambda0 = Some(ok);
        }
    }

    Ok(SensitivityReport {
        nominal,
        perturbed,
        flags,
    })
}
