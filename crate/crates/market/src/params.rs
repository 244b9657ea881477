//! Exogenous model parameters and regulatory policy levers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All exogenous constants of the market model.
///
/// Unit conventions: arrival rates per minute, times in minutes, distances
/// in miles, speeds in miles per hour, money in dollars, wages in dollars
/// per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Potential passenger arrival rate λ₀, passengers/minute.
    pub lambda0: f64,
    /// Potential driver pool size N₀, drivers.
    pub n0: f64,
    /// Pickup-law constant M, mile·√drivers (speed in mi/min × time in min × √count).
    pub m_const: f64,
    /// Average trip distance L, miles.
    pub trip_len: f64,
    /// Free-flow traffic speed, miles/hour.
    pub v_free: f64,
    /// Speed-density slope κ, (miles/hour) per vehicle.
    pub kappa: f64,
    /// Passenger value of waiting time α, $/minute.
    pub alpha: f64,
    /// Passenger value of in-vehicle time β, $/minute.
    pub beta: f64,
    /// Demand logit sensitivity ε, 1/$.
    pub eps: f64,
    /// Outside-option generalized cost c₀, $/trip.
    pub c_out: f64,
    /// Supply logit sensitivity σ, 1/($/hour).
    pub sigma: f64,
    /// Supply logit reservation wage, $/hour.
    pub w_res: f64,
}

impl ModelParams {
    /// San Francisco case-study parameterization.
    ///
    /// The speed law is anchored at the observed operating point (14 mph at
    /// a fleet of 3000 with κ = 0.0003, hence a 14.9 mph free-flow
    /// intercept); the logit constants are the published fit for that
    /// anchor set.
    pub fn san_francisco() -> Self {
        Self {
            lambda0: 1049.0,
            n0: 10_000.0,
            m_const: 41.18,
            trip_len: 2.6,
            v_free: 14.9,
            kappa: 0.0003,
            alpha: 2.33,
            beta: 70.0 / 60.0,
            eps: 0.33,
            c_out: 31.18,
            sigma: 0.089,
            w_res: 31.04,
        }
    }

    /// Check the structural invariants the rest of the crate relies on.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda0", self.lambda0),
            ("n0", self.n0),
            ("m_const", self.m_const),
            ("trip_len", self.trip_len),
            ("v_free", self.v_free),
            ("kappa", self.kappa),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("eps", self.eps),
            ("sigma", self.sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        if !self.c_out.is_finite() || !self.w_res.is_finite() {
            return Err(Error::InvalidParams(
                "c_out and w_res must be finite".into(),
            ));
        }
        if self.alpha < self.beta {
            return Err(Error::InvalidParams(format!(
                "waiting-time value alpha ({}) must be at least the in-vehicle value beta ({})",
                self.alpha, self.beta
            )));
        }
        if self.v_free - self.kappa * self.n0 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "speed collapses within the admissible fleet range: v_free - kappa*n0 = {}",
                self.v_free - self.kappa * self.n0
            )));
        }
        Ok(())
    }
}

/// Which side of the market the congestion charge is levied on.
///
/// The two formulations lead to the same market outcome (only the posted
/// fare and the gross per-trip payment are re-expressed), so solvers work
/// in the passenger/driver normalization and convert on assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevySide {
    /// Trip charge added to the passenger's bill; time charge remitted by drivers.
    #[default]
    PassengerOrDriver,
    /// The platform remits the accumulated charge to the city.
    Platform,
}

/// Regulatory levers applied to the platform's pricing problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    /// Driver minimum hourly wage, $/hour. `None` leaves the wage unregulated.
    pub w_min: Option<f64>,
    /// Trip-based congestion charge, $/trip.
    pub p_trip: f64,
    /// Time-based congestion charge, $/hour per active vehicle.
    pub p_time: f64,
    /// Side of the market the charge is levied on.
    pub levy_side: LevySide,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            w_min: None,
            p_trip: 0.0,
            p_time: 0.0,
            levy_side: LevySide::default(),
        }
    }
}

impl Policy {
    pub fn unregulated() -> Self {
        Self::default()
    }

    pub fn min_wage(w_min: f64) -> Self {
        Self {
            w_min: Some(w_min),
            ..Self::default()
        }
    }

    pub fn trip_tax(w_min: f64, p_trip: f64) -> Self {
        Self {
            w_min: Some(w_min),
            p_trip,
            ..Self::default()
        }
    }

    pub fn time_tax(w_min: f64, p_time: f64) -> Self {
        Self {
            w_min: Some(w_min),
            p_time,
            ..Self::default()
        }
    }

    pub fn with_levy_side(mut self, side: LevySide) -> Self {
        self.levy_side = side;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_trip < 0.0 || self.p_time < 0.0 {
            return Err(Error::InvalidParams(
                "congestion charges must be non-negative".into(),
            ));
        }
        if self.p_trip > 0.0 && self.p_time > 0.0 {
            return Err(Error::InvalidParams(
                "at most one of p_trip, p_time may be nonzero in a single scenario".into(),
            ));
        }
        if let Some(w) = self.w_min {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "w_min must be strictly positive, got {w}"
                )));
            }
        }
        Ok(())
    }
}
