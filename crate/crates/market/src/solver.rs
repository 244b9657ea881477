//! Profit maximization, structured as the nested problem the model admits:
//! for a fixed fleet size the revenue problem in the arrival rate is
//! strictly concave (its first-order condition is strictly decreasing), so
//! the inner optimum is found by bisection on [`inner_foc`]; the outer
//! problem enumerates the fleet size with a coarse log-spaced scan followed
//! by golden-section refinement.
//!
//! Regulation enters two ways. A per-trip charge shifts the demand curve
//! seen by the inner problem (`p_eff`); a per-vehicle-hour charge and the
//! wage floor enter the outer cost term. Both levy sides of each charge are
//! solved in the passenger/driver normalization — the equivalent
//! formulation where the platform remits the charge differs only in how
//! the fare and payment are posted — and re-expressed on assembly.
//!
//! Branch logic for the wage floor is by explicit enumeration: the
//! floor-active branch maximizes over fleets the floor can sustain, the
//! floor-slack branch maximizes with the wage read off the supply curve and
//! is feasible only when that wage clears the floor. The feasible branch
//! with the higher profit wins.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, MarketOutcome};
use crate::numeric;
use crate::params::{ModelParams, Policy};

/// Tolerances and grid sizes for the nested solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute tolerance on the inner first-order condition, $/trip.
    pub foc_tol: f64,
    /// Points in the coarse outer scan over the fleet size.
    pub n_grid: usize,
    /// Absolute tolerance on the refined fleet size, drivers.
    pub n_refine_tol: f64,
    /// Relative margin keeping the arrival rate strictly inside its bracket.
    pub lam_bracket_margin: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            foc_tol: 1e-9,
            n_grid: 200,
            n_refine_tol: 1e-4,
            lam_bracket_margin: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.foc_tol > 0.0 && self.n_refine_tol > 0.0 && self.lam_bracket_margin > 0.0) {
            return Err(Error::InvalidParams(
                "solver tolerances must be strictly positive".into(),
            ));
        }
        if self.n_grid < 50 {
            return Err(Error::InvalidParams(format!(
                "n_grid must be at least 50, got {}",
                self.n_grid
            )));
        }
        Ok(())
    }
}

/// Solution branch the equilibrium landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Wage floor absent or slack; the supply curve holds with equality.
    Unconstrained,
    /// Floor active and every willing driver hired: N = N₀·F_d(w_min).
    WageFloorFullHire,
    /// Floor active but hiring stops short of the willing pool.
    WageFloorPartialHire,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Unconstrained => "unconstrained",
            Regime::WageFloorFullHire => "wage_floor_full_hire",
            Regime::WageFloorPartialHire => "wage_floor_partial_hire",
        };
        f.write_str(s)
    }
}

/// Which constraints of the pricing problem bind at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ActiveConstraints {
    pub min_wage: bool,
    pub supply_cap: bool,
}

/// Solver health indicators carried alongside the outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The coarse outer scan saw more than one local maximum.
    pub outer_multimodal: bool,
    /// The inner bracket contained a sign change (false means a boundary
    /// point was returned).
    pub inner_bracketed: bool,
    /// Best achievable profit is negative under this policy.
    pub unprofitable: bool,
}

/// A market outcome tagged with how the solver arrived at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub outcome: MarketOutcome,
    pub regime: Regime,
    pub active_constraints: ActiveConstraints,
    pub iterations: usize,
    /// Magnitude of the inner first-order condition at the solution, $/trip.
    pub residual: f64,
    pub diagnostics: Diagnostics,
}

/// Derivative of per-minute fare revenue with respect to the arrival rate,
/// net of a per-trip effective charge; strictly decreasing on its domain.
pub fn inner_foc(params: &ModelParams, n: f64, lam: f64, p_eff: f64) -> Result<f64> {
    let v = model::traffic_speed(params, n)?;
    let t0 = model::trip_duration(params, v)?;
    let n_idle = n - lam * t0;
    if n_idle <= 0.0 {
        return Err(Error::Bracket(format!(
            "lam = {lam} leaves no idle fleet at n = {n}"
        )));
    }
    let tp = model::pickup_time(params, n_idle, v)?;
    let cost = model::demand_inverse(params, lam)?;
    let p_f = cost - params.alpha * tp - params.beta * t0 - p_eff;
    // λ·d(cost)/dλ for the logit demand curve.
    let logit_term = -(1.0 + lam / (params.lambda0 - lam)) / params.eps;
    // λ·α·t₀·∂t_p/∂N_I with ∂t_p/∂N_I = −t_p/(2·N_I).
    let pickup_term = -lam * params.alpha * t0 * tp / (2.0 * n_idle);
    Ok(p_f + logit_term + pickup_term)
}

/// Inner solve at a fixed fleet size.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolution {
    /// Profit-maximizing arrival rate, per minute.
    pub lam: f64,
    /// First-order-condition value at `lam`, $/trip.
    pub residual: f64,
    pub iterations: usize,
    /// False when the first-order condition did not change sign inside the
    /// bracket and a boundary point was returned.
    pub bracketed: bool,
}

/// Unique revenue-maximizing arrival rate at fleet size `n` under a
/// per-trip effective charge, by bisection on the strictly decreasing
/// first-order condition.
pub fn optimal_lambda(
    params: &ModelParams,
    n: f64,
    p_eff: f64,
    cfg: &SolverConfig,
) -> Result<InnerSolution> {
    let v = model::traffic_speed(params, n)?;
    let t0 = model::trip_duration(params, v)?;
    let m = cfg.lam_bracket_margin;
    let lo = m * params.lambda0;
    let hi = (1.0 - m) * (params.lambda0.min(n / t0));
    if !(lo < hi) {
        return Err(Error::Bracket(format!(
            "empty arrival-rate bracket at n = {n}: [{lo}, {hi}]"
        )));
    }
    let r = numeric::bisect_decreasing(lo, hi, cfg.foc_tol, 200, |lam| {
        inner_foc(params, n, lam, p_eff)
    })?;
    Ok(InnerSolution {
        lam: r.x,
        residual: r.f_x,
        iterations: r.iterations,
        bracketed: r.bracketed,
    })
}

/// Maximal fare revenue per minute at fleet size `n`: the value
/// `λ*·p_f(λ*, n)` of the inner problem.
pub fn revenue_gamma(params: &ModelParams, n: f64, p_eff: f64, cfg: &SolverConfig) -> Result<f64> {
    let inner = optimal_lambda(params, n, p_eff, cfg)?;
    revenue_at(params, n, inner.lam, p_eff)
}

/// Fare revenue per minute at an explicit `(λ, n)` point.
fn revenue_at(params: &ModelParams, n: f64, lam: f64, p_eff: f64) -> Result<f64> {
    let v = model::traffic_speed(params, n)?;
    let t0 = model::trip_duration(params, v)?;
    let n_idle = n - lam * t0;
    if n_idle <= 0.0 {
        return Err(Error::WildGooseChase { n_idle });
    }
    let tp = model::pickup_time(params, n_idle, v)?;
    let p_f = model::demand_inverse(params, lam)? - params.alpha * tp - params.beta * t0 - p_eff;
    Ok(lam * p_f)
}

/// Numerical derivative of the inner value function with respect to the
/// fleet size, $/minute per driver (central differences, relative step 1e-5).
pub fn dgamma_dn(params: &ModelParams, n: f64, p_eff: f64, cfg: &SolverConfig) -> Result<f64> {
    numeric::central_diff(n, 1e-5, |x| revenue_gamma(params, x, p_eff, cfg))
}

/// Outcome of the outer fleet-size search.
struct OuterSolution {
    n: f64,
    value: f64,
    at_upper_bound: bool,
    multimodal: bool,
    evaluations: usize,
}

/// Coarse log-spaced scan over `[n_lo, n_hi]` followed by golden-section
/// refinement of the bracketing triple. Points where the objective is
/// undefined (no feasible arrival rate) are treated as unboundedly bad.
fn maximize_over_fleet(
    n_lo: f64,
    n_hi: f64,
    cfg: &SolverConfig,
    mut obj: impl FnMut(f64) -> Result<f64>,
) -> Result<OuterSolution> {
    if !(n_lo < n_hi) {
        return Err(Error::Bracket(format!(
            "empty fleet interval [{n_lo}, {n_hi}]"
        )));
    }
    let n_pts = cfg.n_grid.max(3);
    let log_lo = n_lo.ln();
    let step = (n_hi.ln() - log_lo) / (n_pts - 1) as f64;
    let mut grid = Vec::with_capacity(n_pts);
    let mut values = Vec::with_capacity(n_pts);
    let mut evaluations = 0;
    for i in 0..n_pts {
        let n = if i + 1 == n_pts {
            n_hi
        } else {
            (log_lo + step * i as f64).exp()
        };
        let v = obj(n).unwrap_or(f64::NEG_INFINITY);
        evaluations += 1;
        grid.push(n);
        values.push(v);
    }
    let (best_idx, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if best_val == f64::NEG_INFINITY {
        return Err(Error::Bracket(
            "outer objective undefined on the whole fleet grid".into(),
        ));
    }

    // Count distinct local maxima on the coarse scan (diagnostic only).
    let prominence = 1e-9 * (1.0 + best_val.abs());
    let mut peaks = 0;
    for i in 0..n_pts {
        let left_ok = i == 0 || values[i] > values[i - 1] + prominence;
        let right_ok = i + 1 == n_pts || values[i] > values[i + 1] + prominence;
        if left_ok && right_ok && values[i].is_finite() {
            peaks += 1;
        }
    }

    let lo_bracket = grid[best_idx.saturating_sub(1)];
    let hi_bracket = grid[(best_idx + 1).min(n_pts - 1)];
    let (mut n_star, mut v_star, g_evals) =
        numeric::golden_section_max(lo_bracket, hi_bracket, cfg.n_refine_tol, &mut obj)?;
    evaluations += g_evals;

    // The maximum may sit on the upper boundary (the hire cap); golden
    // section only converges to interior points, so compare directly.
    let v_hi = obj(n_hi).unwrap_or(f64::NEG_INFINITY);
    evaluations += 1;
    let at_upper_bound = v_hi >= v_star;
    if at_upper_bound {
        n_star = n_hi;
        v_star = v_hi;
    }

    Ok(OuterSolution {
        n: n_star,
        value: v_star,
        at_upper_bound,
        multimodal: peaks > 1,
        evaluations,
    })
}

/// Smallest fleet size the outer scan starts from: keeps the inner bracket
/// nonempty with room to spare while staying economically negligible.
fn fleet_scan_floor(params: &ModelParams, cfg: &SolverConfig, n_hi: f64) -> Result<f64> {
    let v_hi = model::traffic_speed(params, n_hi)?;
    let t0_max = model::trip_duration(params, v_hi)?;
    let bracket_floor = 4.0 * cfg.lam_bracket_margin * params.lambda0 * t0_max;
    Ok(bracket_floor.max(1e-6 * n_hi))
}

struct Branch {
    n: f64,
    profit_hr: f64,
    regime: Regime,
    active: ActiveConstraints,
    multimodal: bool,
    evaluations: usize,
}

/// Solve the platform's pricing problem under an arbitrary policy.
///
/// Dispatches to the wage-floor branch enumeration described in the module
/// docs; with no floor this reduces to the unregulated problem. The
/// returned outcome is expressed under `policy.levy_side`.
pub fn solve(params: &ModelParams, policy: &Policy, cfg: &SolverConfig) -> Result<Equilibrium> {
    params.validate()?;
    policy.validate()?;
    cfg.validate()?;
    let p_eff = policy.p_trip;
    let p_h = policy.p_time;

    let mut branches: Vec<Branch> = Vec::with_capacity(2);

    // Floor-slack branch: wage read off the supply curve.
    {
        let n_hi = (1.0 - 1e-9) * params.n0;
        let n_lo = fleet_scan_floor(params, cfg, n_hi)?;
        let outer = maximize_over_fleet(n_lo, n_hi, cfg, |n| {
            let gamma = revenue_gamma(params, n, p_eff, cfg)?;
            let wage = model::supply_inverse(params, n)?;
            Ok(60.0 * gamma - n * (wage + p_h))
        })?;
        let wage = model::supply_inverse(params, outer.n)?;
        let feasible = match policy.w_min {
            Some(w_min) => wage >= w_min - 1e-9,
            None => true,
        };
        if feasible {
            branches.push(Branch {
                n: outer.n,
                profit_hr: outer.value,
                regime: Regime::Unconstrained,
                active: ActiveConstraints {
                    min_wage: false,
                    supply_cap: true,
                },
                multimodal: outer.multimodal,
                evaluations: outer.evaluations,
            });
        }
    }

    // Floor-active branch: the platform pays exactly the floor and can hire
    // at most the pool willing to work at it.
    if let Some(w_min) = policy.w_min {
        let n_cap = model::supply(params, w_min);
        let n_lo = fleet_scan_floor(params, cfg, n_cap)?;
        let outer = maximize_over_fleet(n_lo, n_cap, cfg, |n| {
            let gamma = revenue_gamma(params, n, p_eff, cfg)?;
            Ok(60.0 * gamma - n * (w_min + p_h))
        })?;
        let (regime, active) = if outer.at_upper_bound {
            (
                Regime::WageFloorFullHire,
                ActiveConstraints {
                    min_wage: true,
                    supply_cap: true,
                },
            )
        } else {
            (
                Regime::WageFloorPartialHire,
                ActiveConstraints {
                    min_wage: true,
                    supply_cap: false,
                },
            )
        };
        branches.push(Branch {
            n: outer.n,
            profit_hr: outer.value,
            regime,
            active,
            multimodal: outer.multimodal,
            evaluations: outer.evaluations,
        });
    }

    let total_evals: usize = branches.iter().map(|b| b.evaluations).sum();
    let best_profit = branches
        .iter()
        .map(|b| b.profit_hr)
        .fold(f64::NEG_INFINITY, f64::max);
    // At a just-binding floor (w_min = w̃) both branches describe the same
    // point; prefer the unconstrained labeling on profit ties.
    let tie_tol = 1e-7 * (1.0 + best_profit.abs());
    let best = branches
        .into_iter()
        .filter(|b| b.profit_hr >= best_profit - tie_tol)
        .min_by_key(|b| match b.regime {
            Regime::Unconstrained => 0u8,
            Regime::WageFloorFullHire => 1,
            Regime::WageFloorPartialHire => 2,
        })
        .ok_or_else(|| {
            Error::Domain("no feasible branch: wage floor above any attainable wage".into())
        })?;

    let inner = optimal_lambda(params, best.n, p_eff, cfg)?;
    let outcome = model::market_outcome(params, inner.lam, best.n, policy)?;
    Ok(Equilibrium {
        diagnostics: Diagnostics {
            outer_multimodal: best.multimodal,
            inner_bracketed: inner.bracketed,
            unprofitable: outcome.profit_hr < 0.0,
        },
        regime: best.regime,
        active_constraints: best.active,
        iterations: total_evals + inner.iterations,
        residual: inner.residual.abs(),
        outcome,
    })
}

/// Profit maximization with no regulation at all.
pub fn solve_unregulated(params: &ModelParams, cfg: &SolverConfig) -> Result<Equilibrium> {
    solve(params, &Policy::unregulated(), cfg)
}

/// Profit maximization under a wage floor only.
pub fn solve_min_wage(params: &ModelParams, w_min: f64, cfg: &SolverConfig) -> Result<Equilibrium> {
    solve(params, &Policy::min_wage(w_min), cfg)
}

/// Wage floor plus a per-trip congestion charge (passenger/driver levy).
pub fn solve_trip_tax(
    params: &ModelParams,
    w_min: f64,
    p_trip: f64,
    cfg: &SolverConfig,
) -> Result<Equilibrium> {
    solve(params, &Policy::trip_tax(w_min, p_trip), cfg)
}

/// Wage floor plus a per-vehicle-hour congestion charge (driver levy).
pub fn solve_time_tax(
    params: &ModelParams,
    w_min: f64,
    p_time: f64,
    cfg: &SolverConfig,
) -> Result<Equilibrium> {
    solve(params, &Policy::time_tax(w_min, p_time), cfg)
}

/// Re-express an equilibrium under the other levy side of the same policy.
///
/// The market quantities `(λ, N, net wage, profit, tax)` are preserved;
/// only the posted fare and the gross per-trip payment change (the fare by
/// exactly the trip charge, the payment by the driver-remitted share of the
/// time charge).
pub fn levy_side_transform(
    params: &ModelParams,
    eq: &Equilibrium,
    policy: &Policy,
) -> Result<Equilibrium> {
    let outcome = model::market_outcome(params, eq.outcome.lam, eq.outcome.n_drivers, policy)?;
    Ok(Equilibrium {
        outcome,
        ..eq.clone()
    })
}
