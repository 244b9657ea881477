//! Primitive curves of the market model and assembly of a full operating
//! point from the decision pair `(λ, N)`.
//!
//! The primitives are, in evaluation order:
//!
//! | function            | relation                                    |
//! |---------------------|---------------------------------------------|
//! | [`traffic_speed`]   | `v = v_free − κ·N` (mph)                    |
//! | [`trip_duration`]   | `t₀ = 60·L / v` (min)                       |
//! | [`pickup_time`]     | `t_p = M / ((v/60)·√N_I)` (min)             |
//! | [`generalized_cost`]| `c = α·t_p + β·t₀ + fare`                   |
//! | [`demand`]          | logit share of λ₀ at cost `c`               |
//! | [`supply`]          | logit share of N₀ at hourly wage `w`        |
//! | [`driver_wage`]     | `w = 60·λ·p_d / N` ($/hr)                   |
//!
//! The idle fleet is `N_I = N − λ·t₀`: a vehicle counts as busy for the
//! on-trip time only. The speed inside the pickup law is in miles per
//! minute, which is what makes the constant `M` dimensionally consistent
//! with its calibrated value.
//!
//! All functions are pure and deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{LevySide, ModelParams, Policy};

/// Traffic speed (mph) at fleet size `n` under the linear speed-density law.
pub fn traffic_speed(params: &ModelParams, n: f64) -> Result<f64> {
    debug_assert!(n >= 0.0);
    let v = params.v_free - params.kappa * n;
    if v <= 0.0 {
        return Err(Error::InfeasibleFleet {
            n_drivers: n,
            speed_mph: v,
        });
    }
    Ok(v)
}

/// Average trip duration (minutes) at traffic speed `v` (mph).
pub fn trip_duration(params: &ModelParams, v: f64) -> Result<f64> {
    if v <= 0.0 {
        return Err(Error::InfeasibleFleet {
            n_drivers: f64::NAN,
            speed_mph: v,
        });
    }
    Ok(60.0 * params.trip_len / v)
}

/// Average pickup time (minutes): inversely proportional to speed and to
/// the square root of the idle fleet.
pub fn pickup_time(params: &ModelParams, n_idle: f64, v: f64) -> Result<f64> {
    if n_idle <= 0.0 {
        return Err(Error::WildGooseChase { n_idle });
    }
    if v <= 0.0 {
        return Err(Error::InfeasibleFleet {
            n_drivers: f64::NAN,
            speed_mph: v,
        });
    }
    Ok(params.m_const / ((v / 60.0) * n_idle.sqrt()))
}

/// Passenger generalized cost ($/trip): monetized waiting and in-vehicle
/// time plus the out-of-pocket fare.
pub fn generalized_cost(params: &ModelParams, tp_min: f64, t0_min: f64, fare: f64) -> f64 {
    params.alpha * tp_min + params.beta * t0_min + fare
}

/// Passenger arrival rate (per minute) at generalized cost `c` under the
/// binary logit against the outside option.
pub fn demand(params: &ModelParams, c: f64) -> f64 {
    // λ₀ · e^{−εc} / (e^{−εc} + e^{−εc₀}), written in the overflow-safe form.
    params.lambda0 / (1.0 + (params.eps * (c - params.c_out)).exp())
}

/// Generalized cost at which the demand curve passes through `lam`.
pub fn demand_inverse(params: &ModelParams, lam: f64) -> Result<f64> {
    if !(lam > 0.0 && lam < params.lambda0) {
        return Err(Error::Domain(format!(
            "demand_inverse requires 0 < lam < lambda0, got lam = {lam}"
        )));
    }
    Ok(params.c_out + (params.lambda0 / lam - 1.0).ln() / params.eps)
}

/// Number of participating drivers at hourly wage `w` under the supply logit.
pub fn supply(params: &ModelParams, w: f64) -> f64 {
    params.n0 / (1.0 + (params.sigma * (params.w_res - w)).exp())
}

/// Hourly wage at which the supply curve passes through `n`.
pub fn supply_inverse(params: &ModelParams, n: f64) -> Result<f64> {
    if !(n > 0.0 && n < params.n0) {
        return Err(Error::Domain(format!(
            "supply_inverse requires 0 < n < n0, got n = {n}"
        )));
    }
    let share = n / params.n0;
    Ok(params.w_res + (share / (1.0 - share)).ln() / params.sigma)
}

/// Average hourly driver earnings before any time charge: total per-trip
/// payments spread over the fleet.
pub fn driver_wage(lam: f64, p_d: f64, n: f64) -> Result<f64> {
    if n <= 0.0 {
        return Err(Error::Domain(format!(
            "driver_wage requires n > 0, got {n}"
        )));
    }
    Ok(60.0 * lam * p_d / n)
}

/// Fraction of fleet time spent carrying passengers.
pub fn occupancy(params: &ModelParams, lam: f64, n: f64) -> Result<f64> {
    let v = traffic_speed(params, n)?;
    let t0 = trip_duration(params, v)?;
    if lam * t0 >= n {
        return Err(Error::Domain(format!(
            "occupancy requires lam*t0 < n, got lam*t0 = {} with n = {n}",
            lam * t0
        )));
    }
    Ok(lam * t0 / n)
}

/// Magnitude of the passenger price elasticity of demand, waiting time held
/// fixed: `ε·p_f·(1 − λ/λ₀)` for the logit.
pub fn passenger_price_elasticity(params: &ModelParams, lam: f64, p_f: f64) -> Result<f64> {
    if !(lam > 0.0 && lam < params.lambda0) {
        return Err(Error::Domain(format!(
            "elasticity requires 0 < lam < lambda0, got {lam}"
        )));
    }
    Ok(params.eps * p_f * (1.0 - lam / params.lambda0))
}

/// Magnitude of the driver wage elasticity of supply: `σ·w·(1 − N/N₀)`.
pub fn driver_wage_elasticity(params: &ModelParams, n: f64, w: f64) -> Result<f64> {
    if !(n > 0.0 && n < params.n0) {
        return Err(Error::Domain(format!(
            "elasticity requires 0 < n < n0, got {n}"
        )));
    }
    Ok(params.sigma * w * (1.0 - n / params.n0))
}

/// Every endogenous quantity at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    /// Realized passenger arrival rate, per minute.
    pub lam: f64,
    /// Fleet size, drivers.
    pub n_drivers: f64,
    /// Posted ride fare, $/trip (excludes a passenger-levied trip charge;
    /// includes a platform-levied one).
    pub p_f: f64,
    /// Per-trip driver payment, $/trip (gross of a driver-remitted time charge).
    pub p_d: f64,
    /// Driver hourly wage net of any driver-borne time charge, $/hour.
    pub wage_hr: f64,
    /// Traffic speed, mph.
    pub v_mph: f64,
    /// Average trip duration, minutes.
    pub t0_min: f64,
    /// Average pickup time, minutes.
    pub tp_min: f64,
    /// Passenger generalized cost including any passenger-borne charge, $/trip.
    pub cost: f64,
    /// Fraction of fleet time spent on trips, in (0, 1).
    pub occupancy: f64,
    /// Platform profit, $/hour.
    pub profit_hr: f64,
    /// City tax revenue, $/hour.
    pub tax_hr: f64,
    /// Set when the implied fare came out negative (extreme taxes); the
    /// outcome is still reported so sweeps remain total.
    pub negative_fare: bool,
}

/// Assemble a full [`MarketOutcome`] from the decision pair `(λ, N)` under
/// the given policy.
///
/// The fare is read off the demand curve, the payment off the binding wage
/// (the floor when active, the supply curve otherwise), and the charge is
/// attributed according to `policy.levy_side`. The two levy sides produce
/// the same `(λ, N, net wage, profit, tax)` by construction; only `p_f`
/// and `p_d` are re-expressed.
pub fn market_outcome(
    params: &ModelParams,
    lam: f64,
    n: f64,
    policy: &Policy,
) -> Result<MarketOutcome> {
    let v = traffic_speed(params, n)?;
    let t0 = trip_duration(params, v)?;
    let n_idle = n - lam * t0;
    if n_idle <= 0.0 {
        return Err(Error::WildGooseChase { n_idle });
    }
    let tp = pickup_time(params, n_idle, v)?;
    let cost = demand_inverse(params, lam)?;

    // Fare decomposition of the generalized cost. Under a passenger levy the
    // trip charge is part of what the rider pays on top of the fare.
    let base_fare = cost - params.alpha * tp - params.beta * t0;
    let p_f = match policy.levy_side {
        LevySide::PassengerOrDriver => base_fare - policy.p_trip,
        LevySide::Platform => base_fare,
    };

    // Binding hourly wage: the floor when it exceeds what the supply curve
    // requires to field n drivers.
    let supply_wage = supply_inverse(params, n)?;
    let wage_hr = match policy.w_min {
        Some(w_min) if w_min > supply_wage => w_min,
        _ => supply_wage,
    };

    // Gross per-trip payment. When drivers remit the time charge themselves
    // the platform must pay it on top of the net wage.
    let p_d = match policy.levy_side {
        LevySide::PassengerOrDriver => n * (wage_hr + policy.p_time) / (60.0 * lam),
        LevySide::Platform => n * wage_hr / (60.0 * lam),
    };

    let profit_hr = match policy.levy_side {
        LevySide::PassengerOrDriver => 60.0 * lam * (p_f - p_d),
        LevySide::Platform => {
            60.0 * lam * (p_f - p_d) - 60.0 * lam * policy.p_trip - n * policy.p_time
        }
    };
    let tax_hr = 60.0 * lam * policy.p_trip + n * policy.p_time;

    Ok(MarketOutcome {
        lam,
        n_drivers: n,
        p_f,
        p_d,
        wage_hr,
        v_mph: v,
        t0_min: t0,
        tp_min: tp,
        cost,
        occupancy: lam * t0 / n,
        profit_hr,
        tax_hr,
        negative_fare: p_f < 0.0,
    })
}
