//! Inverse-solving the model from observed market anchors.
//!
//! The recipe runs in stages, each pinning part of the parameter vector:
//!
//! 1. pool sizes from market shares (`λ₀ = λ*/share`, `N₀ = N*/share`),
//! 2. the pickup constant `M` from the observed pickup time ([`derive_m`]),
//! 3. the speed-density line from two observations ([`fit_greenshield`]),
//! 4. the four logit constants by requiring that the observed operating
//!    point is the unregulated profit-maximizing optimum
//!    ([`calibrate_logit`]): the demand anchor and the inner first-order
//!    condition pin `(ε, c₀)` in closed form; the supply anchor and the
//!    outer first-order condition (with a numerical revenue derivative)
//!    pin `(σ, w_res)` via a bracketed one-dimensional root find.
//!
//! [`verify_calibration`] closes the loop: it re-solves the unregulated
//! problem under the fitted parameters and reports the relative error on
//! every anchor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::params::ModelParams;
use crate::solver::{self, Equilibrium, SolverConfig};

/// Observed anchors the fit must reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// Observed ride arrival rate λ*, per minute.
    pub lam_star: f64,
    /// Observed fleet size N*, drivers.
    pub n_star: f64,
    /// Observed average fare, $/trip.
    pub p_f_star: f64,
    /// Observed average hourly wage, $/hour.
    pub w_star: f64,
    /// Observed average pickup time, minutes.
    pub tp_star: f64,
    /// Market share of rides at the optimum (pins λ₀).
    pub tnc_share: f64,
    /// Participation share of the driver pool (pins N₀).
    pub driver_share: f64,
}

impl CalibrationTargets {
    /// San Francisco anchor set.
    pub fn san_francisco() -> Self {
        Self {
            lam_star: 157.4,
            n_star: 3000.0,
            p_f_star: 11.8,
            w_star: 21.55,
            tp_star: 5.0,
            tnc_share: 0.15,
            driver_share: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lam_star", self.lam_star),
            ("n_star", self.n_star),
            ("p_f_star", self.p_f_star),
            ("w_star", self.w_star),
            ("tp_star", self.tp_star),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "calibration target {name} must be positive, got {v}"
                )));
            }
        }
        for (name, s) in [
            ("tnc_share", self.tnc_share),
            ("driver_share", self.driver_share),
        ] {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "calibration share {name} must lie in (0, 1), got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// The non-logit part of the parameter vector, known before the logit fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBase {
    pub lambda0: f64,
    pub n0: f64,
    pub m_const: f64,
    pub trip_len: f64,
    pub v_free: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The four logit constants produced by the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub eps: f64,
    pub c_out: f64,
    pub sigma: f64,
    pub w_res: f64,
    /// Residual of the outer first-order condition at the returned σ, $/hr.
    pub sigma_residual: f64,
}

/// Pickup constant from one observation of speed, pickup time and idle fleet.
pub fn derive_m(v_mph: f64, tp_min: f64, n_idle: f64) -> f64 {
    (v_mph / 60.0) * tp_min * n_idle.sqrt()
}

/// Exact speed-density line through two `(fleet, speed)` observations;
/// returns `(v_free, kappa)`.
pub fn fit_greenshield(pt1: (f64, f64), pt2: (f64, f64)) -> Result<(f64, f64)> {
    let (n1, v1) = pt1;
    let (n2, v2) = pt2;
    if n1 == n2 {
        return Err(Error::Calibration(format!(
            "degenerate speed fit: both observations at fleet {n1}"
        )));
    }
    let kappa = (v1 - v2) / (n2 - n1);
    let v_free = v1 + kappa * n1;
    Ok((v_free, kappa))
}

/// Reverse-engineer `(ε, c₀, σ, w_res)` so that the anchors are the
/// unregulated optimum under `base`.
pub fn calibrate_logit(
    base: &CalibrationBase,
    targets: &CalibrationTargets,
    cfg: &SolverConfig,
) -> Result<LogitFit> {
    targets.validate()?;
    if targets.lam_star >= base.lambda0 {
        return Err(Error::Calibration(format!(
            "lam_star {} must be below lambda0 {}",
            targets.lam_star, base.lambda0
        )));
    }
    let v_star = base.v_free - base.kappa * targets.n_star;
    if v_star <= 0.0 {
        return Err(Error::Calibration(format!(
            "speed non-positive at the anchor fleet: {v_star}"
        )));
    }
    let t0_star = 60.0 * base.trip_len / v_star;
    let n_idle_star = targets.n_star - targets.lam_star * t0_star;
    if n_idle_star <= 0.0 {
        return Err(Error::Calibration(format!(
            "anchor point has no idle fleet: {n_idle_star}"
        )));
    }

    // Inner first-order condition at the anchor pins 1/ε; the demand anchor
    // then gives c₀ in closed form.
    let pickup_term =
        targets.lam_star * base.alpha * t0_star * targets.tp_star / (2.0 * n_idle_star);
    let share_factor = 1.0 + targets.lam_star / (base.lambda0 - targets.lam_star);
    let inv_eps = (targets.p_f_star - pickup_term) / share_factor;
    if inv_eps <= 0.0 {
        return Err(Error::Calibration(format!(
            "inner first-order condition yields non-positive 1/eps = {inv_eps}"
        )));
    }
    let eps = 1.0 / inv_eps;
    let c_star = base.alpha * targets.tp_star + base.beta * t0_star + targets.p_f_star;
    let c_out = c_star - inv_eps * (base.lambda0 / targets.lam_star - 1.0).ln();

    // Outer first-order condition: the marginal hourly revenue of one more
    // driver at the anchor must cover the wage plus the supply markup
    // N·dw/dN = 1/(σ(1−y)). The revenue derivative does not depend on the
    // supply side, so the residual is monotone in σ and brackets cleanly.
    let probe = ModelParams {
        lambda0: base.lambda0,
        n0: base.n0,
        m_const: base.m_const,
        trip_len: base.trip_len,
        v_free: base.v_free,
        kappa: base.kappa,
        alpha: base.alpha,
        beta: base.beta,
        eps,
        c_out,
        sigma: 0.1,  // unused by the revenue side
        w_res: 30.0, // unused by the revenue side
    };
    let marginal_revenue_hr = 60.0 * solver::dgamma_dn(&probe, targets.n_star, 0.0, cfg)?;
    let share = targets.driver_share;
    let residual =
        |sigma: f64| marginal_revenue_hr - targets.w_star - 1.0 / (sigma * (1.0 - share));
    let (mut lo, mut hi) = (1e-3, 1.0);
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    if r_lo > 0.0 || r_hi < 0.0 {
        return Err(Error::Calibration(format!(
            "outer first-order condition has no root for sigma in [{lo}, {hi}]: residuals ({r_lo:.6}, {r_hi:.6}), marginal revenue {marginal_revenue_hr:.4} $/hr"
        )));
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    let w_res = targets.w_star - (share / (1.0 - share)).ln() / sigma;

    Ok(LogitFit {
        eps,
        c_out,
        sigma,
        w_res,
        sigma_residual: residual(sigma),
    })
}

/// Residuals of the calibration conditions evaluated at the anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResiduals {
    /// Inner first-order condition at `(λ*, N*)`, $/trip.
    pub inner_foc: f64,
    /// Outer first-order condition at `N*`, $/hr per driver.
    pub outer_foc: f64,
    /// Relative error of the demand curve through the anchor cost.
    pub demand_anchor_rel: f64,
    /// Relative error of the supply curve through the anchor wage.
    pub supply_anchor_rel: f64,
    /// Relative error of the model pickup time at the anchor fleet.
    pub tp_anchor_rel: f64,
}

/// Relative errors of the re-solved unregulated optimum against the anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetErrors {
    pub lam_rel: f64,
    pub n_rel: f64,
    pub p_f_rel: f64,
    pub wage_rel: f64,
    pub tp_rel: f64,
    pub t0_rel: f64,
    pub occupancy_rel: f64,
}

impl TargetErrors {
    /// Largest error among the four primary anchors.
    pub fn max_primary(&self) -> f64 {
        self.lam_rel
            .max(self.n_rel)
            .max(self.p_f_rel)
            .max(self.wage_rel)
    }
}

/// Full calibration output: the parameter vector, the per-condition
/// residuals, and the closed-loop match against the anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub fitted: ModelParams,
    pub residuals: CalibrationResiduals,
    pub match_errors: TargetErrors,
    pub solved: Equilibrium,
}

/// Re-solve the unregulated problem under `params` and report how well it
/// reproduces the anchors.
pub fn verify_calibration(
    params: &ModelParams,
    targets: &CalibrationTargets,
    cfg: &SolverConfig,
) -> Result<CalibrationReport> {
    targets.validate()?;
    let eq = solver::solve_unregulated(params, cfg)?;
    let m = &eq.outcome;

    let rel = |got: f64, want: f64| ((got - want) / want).abs();
    // Anchor-implied kinematics at the observed fleet.
    let v_anchor = model::traffic_speed(params, targets.n_star)?;
    let t0_anchor = model::trip_duration(params, v_anchor)?;
    let occ_anchor = targets.lam_star * t0_anchor / targets.n_star;

    let match_errors = TargetErrors {
        lam_rel: rel(m.lam, targets.lam_star),
        n_rel: rel(m.n_drivers, targets.n_star),
        p_f_rel: rel(m.p_f, targets.p_f_star),
        wage_rel: rel(m.wage_hr, targets.w_star),
        tp_rel: rel(m.tp_min, targets.tp_star),
        t0_rel: rel(m.t0_min, t0_anchor),
        occupancy_rel: rel(m.occupancy, occ_anchor),
    };

    let inner_foc = solver::inner_foc(params, targets.n_star, targets.lam_star, 0.0)?;
    let y = targets.n_star / params.n0;
    let outer_foc = 60.0 * solver::dgamma_dn(params, targets.n_star, 0.0, cfg)?
        - targets.w_star
        - 1.0 / (params.sigma * (1.0 - y));
    let c_star = params.alpha * targets.tp_star + params.beta * t0_anchor + targets.p_f_star;
    let demand_anchor_rel = rel(model::demand(params, c_star), targets.lam_star);
    let supply_anchor_rel = rel(model::supply(params, targets.w_star), targets.n_star);
    let n_idle_anchor = targets.n_star - targets.lam_star * t0_anchor;
    let tp_anchor_rel = if n_idle_anchor > 0.0 {
        rel(
            model::pickup_time(params, n_idle_anchor, v_anchor)?,
            targets.tp_star,
        )
    } else {
        f64::INFINITY
    };

    Ok(CalibrationReport {
        fitted: params.clone(),
        residuals: CalibrationResiduals {
            inner_foc,
            outer_foc,
            demand_anchor_rel,
            supply_anchor_rel,
            tp_anchor_rel,
        },
        match_errors,
        solved: eq,
    })
}

/// Physical constants that are read from published sources rather than fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalBase {
    pub trip_len: f64,
    pub v_free: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// End-to-end recipe: pool sizes and `M` from the anchors, then the logit
/// fit, then closed-loop verification.
pub fn run_calibration(
    phys: &PhysicalBase,
    targets: &CalibrationTargets,
    cfg: &SolverConfig,
) -> Result<CalibrationReport> {
    targets.validate()?;
    let lambda0 = targets.lam_star / targets.tnc_share;
    let n0 = targets.n_star / targets.driver_share;
    let v_star = phys.v_free - phys.kappa * targets.n_star;
    if v_star <= 0.0 {
        return Err(Error::Calibration(format!(
            "speed non-positive at the anchor fleet: {v_star}"
        )));
    }
    let t0_star = 60.0 * phys.trip_len / v_star;
    let n_idle_star = targets.n_star - targets.lam_star * t0_star;
    if n_idle_star <= 0.0 {
        return Err(Error::Calibration(format!(
            "anchor point has no idle fleet: {n_idle_star}"
        )));
    }
    let m_const = derive_m(v_star, targets.tp_star, n_idle_star);
    let base = CalibrationBase {
        lambda0,
        n0,
        m_const,
        trip_len: phys.trip_len,
        v_free: phys.v_free,
        kappa: phys.kappa,
        alpha: phys.alpha,
        beta: phys.beta,
    };
    let fit = calibrate_logit(&base, targets, cfg)?;
    let params = ModelParams {
        lambda0,
        n0,
        m_const,
        trip_len: phys.trip_len,
        v_free: phys.v_free,
        kappa: phys.kappa,
        alpha: phys.alpha,
        beta: phys.beta,
        eps: fit.eps,
        c_out: fit.c_out,
        sigma: fit.sigma,
        w_res: fit.w_res,
    };
    params.validate()?;
    verify_calibration(&params, targets, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;
    use approx::assert_relative_eq;

    fn sf_base() -> CalibrationBase {
        let p = ModelParams::san_francisco();
        CalibrationBase {
            lambda0: p.lambda0,
            n0: p.n0,
            m_const: p.m_const,
            trip_len: p.trip_len,
            v_free: p.v_free,
            kappa: p.kappa,
            alpha: p.alpha,
            beta: p.beta,
        }
    }

    #[test]
    fn derive_m_anchor() {
        let m = derive_m(14.0, 5.0, 1246.6);
        assert!((m - 41.18).abs() < 0.02, "m = {m}");
        assert_eq!(derive_m(14.0, 0.0, 1246.6), 0.0);
    }

    #[test]
    fn derive_m_round_trips_through_pickup_time() {
        let mut p = ModelParams::san_francisco();
        p.m_const = derive_m(14.0, 5.0, 1246.114);
        let tp = model::pickup_time(&p, 1246.114, 14.0).unwrap();
        assert_relative_eq!(tp, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn greenshield_two_point_fits() {
        let (vf, k) = fit_greenshield((3000.0, 14.1), (0.0, 15.0)).unwrap();
        assert_relative_eq!(vf, 15.0, max_relative = 1e-12);
        assert_relative_eq!(k, 0.0003, max_relative = 1e-12);
        // Collinear pair gives the same line.
        let (vf2, k2) = fit_greenshield((3000.0, 14.1), (6000.0, 13.2)).unwrap();
        assert_relative_eq!(vf2, 15.0, max_relative = 1e-12);
        assert_relative_eq!(k2, 0.0003, max_relative = 1e-12);
        // Flat observations give zero slope.
        let (_, k3) = fit_greenshield((1000.0, 14.0), (2000.0, 14.0)).unwrap();
        assert_eq!(k3, 0.0);
        assert!(fit_greenshield((3000.0, 14.1), (3000.0, 15.0)).is_err());
    }

    #[test]
    fn logit_fit_matches_published_values() {
        let fit = calibrate_logit(
            &sf_base(),
            &CalibrationTargets::san_francisco(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!((fit.eps - 0.33).abs() < 0.01, "eps = {}", fit.eps);
        assert!((fit.c_out - 31.18).abs() < 0.15, "c_out = {}", fit.c_out);
        assert!((fit.sigma - 0.089).abs() < 0.002, "sigma = {}", fit.sigma);
        assert!((fit.w_res - 31.04).abs() < 0.25, "w_res = {}", fit.w_res);
        assert!(fit.sigma_residual.abs() < 1e-9);
        // Hand check of the inner condition: 1/eps comes out near 3.06.
        assert!((1.0 / fit.eps - 3.06).abs() < 0.01);
    }

    #[test]
    fn fare_perturbation_moves_eps_down() {
        let mut t = CalibrationTargets::san_francisco();
        let base_fit = calibrate_logit(&sf_base(), &t, &SolverConfig::default()).unwrap();
        t.p_f_star *= 1.10;
        let fit = calibrate_logit(&sf_base(), &t, &SolverConfig::default()).unwrap();
        assert!(fit.eps < base_fit.eps);
    }

    #[test]
    fn verify_on_published_params_is_within_one_percent() {
        let report = verify_calibration(
            &ModelParams::san_francisco(),
            &CalibrationTargets::san_francisco(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(
            report.match_errors.max_primary() < 0.01,
            "errors: {:?}",
            report.match_errors
        );
    }

    #[test]
    fn fit_is_idempotent_on_solver_output() {
        // Calibrating against anchors produced by the solver itself must
        // recover the generating parameters.
        let truth = ModelParams::san_francisco();
        let cfg = SolverConfig::default();
        let eq = crate::solver::solve_unregulated(&truth, &cfg).unwrap();
        let m = &eq.outcome;
        let targets = CalibrationTargets {
            lam_star: m.lam,
            n_star: m.n_drivers,
            p_f_star: m.p_f,
            w_star: m.wage_hr,
            tp_star: m.tp_min,
            tnc_share: m.lam / truth.lambda0,
            driver_share: m.n_drivers / truth.n0,
        };
        let fit = calibrate_logit(&sf_base(), &targets, &cfg).unwrap();
        assert_relative_eq!(fit.eps, truth.eps, max_relative = 1e-6);
        assert_relative_eq!(fit.c_out, truth.c_out, max_relative = 1e-6);
        assert_relative_eq!(fit.sigma, truth.sigma, max_relative = 1e-6);
        assert_relative_eq!(fit.w_res, truth.w_res, max_relative = 1e-6);
    }

    #[test]
    fn end_to_end_recipe_reproduces_anchors() {
        let p = ModelParams::san_francisco();
        let phys = PhysicalBase {
            trip_len: p.trip_len,
            v_free: p.v_free,
            kappa: p.kappa,
            alpha: p.alpha,
            beta: p.beta,
        };
        let report = run_calibration(
            &phys,
            &CalibrationTargets::san_francisco(),
            &SolverConfig::default(),
        )
        .unwrap();
        // Fitted params must make the anchors the optimum almost exactly.
        assert!(
            report.match_errors.max_primary() < 1e-3,
            "errors: {:?}",
            report.match_errors
        );
        assert!(report.residuals.inner_foc.abs() < 1e-6);
        assert!(report.residuals.demand_anchor_rel < 1e-9);
        assert!(report.residuals.supply_anchor_rel < 1e-9);
        // Pool sizes from shares.
        assert_relative_eq!(report.fitted.lambda0, 157.4 / 0.15, max_relative = 1e-12);
        assert_relative_eq!(report.fitted.n0, 10_000.0, max_relative = 1e-12);
    }

    #[test]
    fn corrupted_kappa_shows_up_in_kinematics_not_wage() {
        let mut p = ModelParams::san_francisco();
        p.kappa *= 1.15;
        let report = verify_calibration(
            &p,
            &CalibrationTargets::san_francisco(),
            &SolverConfig::default(),
        )
        .unwrap();
        // The supply side does not involve kappa: its anchor residual is
        // unchanged from the uncorrupted run while the kinematics anchors
        // are flagged.
        let nominal = verify_calibration(
            &ModelParams::san_francisco(),
            &CalibrationTargets::san_francisco(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(
            report.residuals.supply_anchor_rel,
            nominal.residuals.supply_anchor_rel
        );
        assert!(
            report.residuals.tp_anchor_rel > 10.0 * nominal.residuals.tp_anchor_rel
                && report.residuals.tp_anchor_rel > 0.005,
            "tp anchor residual {} (nominal {})",
            report.residuals.tp_anchor_rel,
            nominal.residuals.tp_anchor_rel
        );
        // The re-solved wage moves less than ridership does.
        assert!(
            report.match_errors.wage_rel < report.match_errors.lam_rel,
            "wage error should be dominated: {:?}",
            report.match_errors
        );
    }
}
