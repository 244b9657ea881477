//! Shared oracles for the integration suites.
//!
//! Everything here re-derives the model from the closed forms, on purpose:
//! these paths must stay independent of the library's solver internals so
//! they can serve as cross-checks.

// Each test binary compiles this module separately and uses a subset of it.
#![allow(dead_code)]

use tnc_market::ModelParams;

/// Deterministic 64-bit LCG (Knuth constants); good enough for test jitter.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Lcg(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Hourly platform profit at an explicit `(λ, N)` point, written from the
/// closed forms in the platform-levied normalization. `None` when the point
/// is infeasible.
pub fn oracle_profit_hr(
    p: &ModelParams,
    lam: f64,
    n: f64,
    w_min: Option<f64>,
    p_trip: f64,
    p_time: f64,
) -> Option<f64> {
    if !(lam > 0.0 && lam < p.lambda0 && n > 0.0 && n < p.n0) {
        return None;
    }
    let v = p.v_free - p.kappa * n;
    if v <= 0.0 {
        return None;
    }
    let t0 = 60.0 * p.trip_len / v;
    let n_idle = n - lam * t0;
    if n_idle <= 0.0 {
        return None;
    }
    let tp = p.m_const / ((v / 60.0) * n_idle.sqrt());
    let cost = p.c_out + (p.lambda0 / lam - 1.0).ln() / p.eps;
    let fare = cost - p.alpha * tp - p.beta * t0;
    let share = n / p.n0;
    let supply_wage = p.w_res + (share / (1.0 - share)).ln() / p.sigma;
    let wage = match w_min {
        Some(w) => supply_wage.max(w),
        None => supply_wage,
    };
    Some(60.0 * lam * (fare - p_trip) - n * (wage + p_time))
}

fn golden_max(mut a: f64, mut b: f64, x_tol: f64, f: &dyn Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > x_tol && c < d {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// What the independent solve reports.
#[derive(Debug, Clone, Copy)]
pub struct OracleSolution {
    pub lam: f64,
    pub n: f64,
    pub profit_hr: f64,
    pub tax_hr: f64,
    pub net_wage_hr: f64,
}

/// Independent profit maximization in the platform-levied formulation:
/// nested golden-section search (over λ inside, over N outside on a dense
/// linear scan), with the wage taken as `max(w_min, supply wage)` pointwise
/// instead of branch enumeration.
pub fn oracle_solve(
    p: &ModelParams,
    w_min: Option<f64>,
    p_trip: f64,
    p_time: f64,
) -> OracleSolution {
    let margin = 1e-9;
    let best_lam_at = |n: f64| -> (f64, f64) {
        let v = p.v_free - p.kappa * n;
        let t0 = 60.0 * p.trip_len / v;
        let hi = (1.0 - margin) * (p.lambda0.min(n / t0));
        let lo = margin * p.lambda0;
        let g = |lam: f64| {
            let n_idle = n - lam * t0;
            let tp = p.m_const / ((v / 60.0) * n_idle.sqrt());
            let cost = p.c_out + (p.lambda0 / lam - 1.0).ln() / p.eps;
            lam * (cost - p.alpha * tp - p.beta * t0 - p_trip)
        };
        golden_max(lo, hi, 1e-9, &g)
    };
    let wage_at = |n: f64| {
        let share = n / p.n0;
        let supply_wage = p.w_res + (share / (1.0 - share)).ln() / p.sigma;
        match w_min {
            Some(w) => supply_wage.max(w),
            None => supply_wage,
        }
    };
    let profit_at = |n: f64| {
        let (_, revenue_min) = best_lam_at(n);
        60.0 * revenue_min - n * (wage_at(n) + p_time)
    };

    let n_hi = (1.0 - 1e-9) * p.n0;
    let scan = 2000usize;
    let mut best_i = 1;
    let mut best_v = f64::NEG_INFINITY;
    for i in 1..=scan {
        let n = n_hi * i as f64 / scan as f64;
        let v = profit_at(n);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = n_hi * (best_i.saturating_sub(1).max(1)) as f64 / scan as f64;
    let hi = n_hi * ((best_i + 1).min(scan)) as f64 / scan as f64;
    let (n_star, profit) = golden_max(lo, hi, 1e-7, &profit_at);
    let (lam_star, _) = best_lam_at(n_star);
    OracleSolution {
        lam: lam_star,
        n: n_star,
        profit_hr: profit,
        tax_hr: 60.0 * lam_star * p_trip + n_star * p_time,
        net_wage_hr: wage_at(n_star),
    }
}

/// Brute-force maximum profit over a `resolution x resolution` grid of
/// `(λ, N)` points, plus a discretization bound taken from the profit drop
/// to the argmax's grid neighbors.
pub fn brute_force_grid_max(
    p: &ModelParams,
    w_min: Option<f64>,
    p_trip: f64,
    p_time: f64,
    resolution: usize,
) -> (f64, f64) {
    let n_hi = (1.0 - 1e-9) * p.n0;
    let profit = |li: usize, ni: usize| -> f64 {
        let n = n_hi * ni as f64 / resolution as f64;
        let v = p.v_free - p.kappa * n;
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let t0 = 60.0 * p.trip_len / v;
        let lam_hi = (1.0 - 1e-9) * (p.lambda0.min(n / t0));
        let lam = lam_hi * li as f64 / resolution as f64;
        oracle_profit_hr(p, lam, n, w_min, p_trip, p_time).unwrap_or(f64::NEG_INFINITY)
    };
    let mut best = f64::NEG_INFINITY;
    let mut arg = (1, 1);
    for ni in 1..=resolution {
        for li in 1..resolution {
            let v = profit(li, ni);
            if v > best {
                best = v;
                arg = (li, ni);
            }
        }
    }
    // Neighbor-based resolution bound: for a smooth unimodal objective the
    // off-grid optimum lies within one cell of the argmax, so the local
    // profit variation bounds what the grid can miss.
    let (li, ni) = arg;
    let mut drop = 0.0f64;
    for (dl, dn) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
        let lj = (li as i64 + dl).max(1) as usize;
        let nj = (ni as i64 + dn).clamp(1, resolution as i64) as usize;
        let v = profit(lj.min(resolution - 1), nj);
        if v.is_finite() {
            drop = drop.max(best - v);
        }
    }
    (best, 2.0 * drop + 1e-9 * (1.0 + best.abs()))
}
