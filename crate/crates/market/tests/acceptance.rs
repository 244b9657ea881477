//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line with the measured values next to their targets.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::sync::OnceLock;

use common::{brute_force_grid_max, oracle_solve, Lcg};
use tnc_market::analysis::{
    default_grid, detect_threshold, incidence_report, linear_grid, pareto_compare, sweep,
    tilde_wage, wage_threshold_w1, QuantityOrder, Scheme, SweepTable,
};
use tnc_market::calibrate::{run_calibration, CalibrationTargets, PhysicalBase};
use tnc_market::model;
use tnc_market::solver::{self, Regime};
use tnc_market::{ModelParams, Policy, SolverConfig};

fn sf() -> ModelParams {
    ModelParams::san_francisco()
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn within(label: &str, value: f64, target: f64, tol: f64) -> (String, bool) {
    let ok = (value - target).abs() <= tol;
    (format!("{label}={value:.4} (target {target}±{tol})"), ok)
}

fn exact_zero(label: &str, value: f64) -> (String, bool) {
    (format!("{label}={value} (target exactly 0)"), value == 0.0)
}

fn flag(label: &str, ok: bool) -> (String, bool) {
    (
        format!("{label}={}", if ok { "ok" } else { "VIOLATED" }),
        ok,
    )
}

fn report(id: u32, name: &str, checks: &[(String, bool)]) {
    let ok = checks.iter().all(|c| c.1);
    let details: Vec<&str> = checks.iter().map(|c| c.0.as_str()).collect();
    println!(
        "acceptance {id:02} ({name}): {} — {}",
        if ok { "PASS" } else { "FAIL" },
        details.join("; ")
    );
    assert!(
        ok,
        "acceptance {id:02} ({name}) failed: {}",
        details.join("; ")
    );
}

fn default_sweeps() -> &'static (SweepTable, SweepTable) {
    static SWEEPS: OnceLock<(SweepTable, SweepTable)> = OnceLock::new();
    SWEEPS.get_or_init(|| {
        let p = sf();
        let trip = sweep(&p, 26.35, Scheme::Trip, &default_grid(Scheme::Trip), &cfg()).unwrap();
        let time = sweep(&p, 26.35, Scheme::Time, &default_grid(Scheme::Time), &cfg()).unwrap();
        (trip, time)
    })
}

#[test]
fn criterion_01_calibration_reproduction() {
    let p = sf();
    let phys = PhysicalBase {
        trip_len: p.trip_len,
        v_free: p.v_free,
        kappa: p.kappa,
        alpha: p.alpha,
        beta: p.beta,
    };
    let rep = run_calibration(&phys, &CalibrationTargets::san_francisco(), &cfg()).unwrap();
    let f = &rep.fitted;
    report(
        1,
        "calibration reproduction",
        &[
            within("eps", f.eps, 0.33, 0.01),
            within("c_out", f.c_out, 31.18, 0.15),
            within("sigma", f.sigma, 0.089, 0.002),
            within("w_res", f.w_res, 31.04, 0.25),
        ],
    );
}

#[test]
fn criterion_02_unregulated_baseline() {
    let eq = solver::solve_unregulated(&sf(), &cfg()).unwrap();
    let m = &eq.outcome;
    report(
        2,
        "unregulated baseline",
        &[
            within("lambda", m.lam, 157.4, 1.5),
            within("n_drivers", m.n_drivers, 3000.0, 30.0),
            within("p_f", m.p_f, 11.8, 0.15),
            within("w_tilde", m.wage_hr, 21.55, 0.25),
        ],
    );
}

#[test]
fn criterion_03_regulated_baseline() {
    let eq = solver::solve_min_wage(&sf(), 26.35, &cfg()).unwrap();
    let m = &eq.outcome;
    report(
        3,
        "regulated baseline w_min=26.35",
        &[
            within("lambda", m.lam, 208.46, 2.0),
            within("n_drivers", m.n_drivers, 3968.0, 20.0),
            within("p_f", m.p_f, 11.628, 0.1),
            within("p_d", m.p_d, 8.360, 0.1),
            within("profit_hr", m.profit_hr, 40878.0, 400.0),
            within("cost", m.cost, 35.43, 0.4),
            within("pickup_min", m.tp_min, 4.51, 0.1),
            within("occupancy", m.occupancy, 0.598, 0.02 * 0.598),
        ],
    );
}

#[test]
fn criterion_04_trip_tax_incidence() {
    let d = incidence_report(&sf(), 26.35, Scheme::Trip, 2.0, &cfg()).unwrap();
    report(
        4,
        "trip-tax incidence at p_t=2",
        &[
            within("d_cost_pct", d.d_cost_pct, 0.6, 0.1),
            exact_zero("d_wage_pct", d.d_wage_pct),
            within("d_profit_pct", d.d_profit_pct, -59.5, 1.0),
        ],
    );
}

#[test]
fn criterion_05_regime_thresholds() {
    let p = sf();
    let (trip_table, time_table) = default_sweeps();
    let p_t_bar = detect_threshold(&p, trip_table, &cfg()).unwrap();
    let p_h_bar = detect_threshold(&p, time_table, &cfg()).unwrap();
    let w1 = wage_threshold_w1(&p, &cfg()).unwrap();
    report(
        5,
        "regime thresholds",
        &[
            within("p_t_bar", p_t_bar, 2.1, 0.1),
            within("p_h_bar", p_h_bar, 6.2, 0.2),
            within("w1", w1, 29.20, 0.3),
        ],
    );
}

#[test]
fn criterion_06_sweep_endpoints() {
    let (trip_table, time_table) = default_sweeps();
    let trip_end = &trip_table.rows.last().unwrap().eq.outcome;
    let time_end = &time_table.rows.last().unwrap().eq.outcome;
    report(
        6,
        "sweep endpoints",
        &[
            within("trip@3 n_drivers", trip_end.n_drivers, 3417.0, 30.0),
            within("trip@3 lambda", trip_end.lam, 163.8, 2.0),
            within("time@10 n_drivers", time_end.n_drivers, 3245.0, 30.0),
            within("time@10 lambda", time_end.lam, 170.7, 2.0),
            within("time@10 tax_hr", time_end.tax_hr, 32451.0, 300.0),
        ],
    );
}

#[test]
fn criterion_07_flatness_and_linear_transfer() {
    let p = sf();
    let plateau = model::supply(&p, 26.35);
    let trip = sweep(&p, 26.35, Scheme::Trip, &linear_grid(0.0, 2.0, 21), &cfg()).unwrap();
    let time = sweep(&p, 26.35, Scheme::Time, &linear_grid(0.0, 6.0, 21), &cfg()).unwrap();

    let n_dev_trip = trip
        .rows
        .iter()
        .map(|r| ((r.eq.outcome.n_drivers - plateau) / plateau).abs())
        .fold(0.0f64, f64::max);
    let n_dev_time = time
        .rows
        .iter()
        .map(|r| ((r.eq.outcome.n_drivers - plateau) / plateau).abs())
        .fold(0.0f64, f64::max);
    let lam0 = time.rows[0].eq.outcome.lam;
    let lam_dev_time = time
        .rows
        .iter()
        .map(|r| ((r.eq.outcome.lam - lam0) / lam0).abs())
        .fold(0.0f64, f64::max);

    // Affine transfer: every successive profit slope equals -plateau.
    let mut slope_err: f64 = 0.0;
    for w in time.rows.windows(2) {
        let slope = (w[1].eq.outcome.profit_hr - w[0].eq.outcome.profit_hr)
            / (w[1].tax_level - w[0].tax_level);
        slope_err = slope_err.max(((slope + plateau) / plateau).abs());
    }

    report(
        7,
        "first-regime flatness and linear transfer",
        &[
            (
                format!("max |N/plateau-1| trip [0,2] = {n_dev_trip:.2e} (<0.1%)"),
                n_dev_trip < 1e-3,
            ),
            (
                format!("max |N/plateau-1| time [0,6] = {n_dev_time:.2e} (<0.1%)"),
                n_dev_time < 1e-3,
            ),
            (
                format!("max |lambda drift| time [0,6] = {lam_dev_time:.2e} (<0.1%)"),
                lam_dev_time < 1e-3,
            ),
            (
                format!("profit slope error vs -N_hat = {slope_err:.2e} (<0.5%)"),
                slope_err < 5e-3,
            ),
        ],
    );
}

#[test]
fn criterion_08_pareto_property() {
    let p = sf();
    let mut checks = Vec::new();
    for &p_t in &linear_grid(0.2, 2.0, 10) {
        let row = pareto_compare(&p, 26.35, p_t, &cfg()).unwrap();
        let ok = row.flags.lambda == QuantityOrder::TimeHigher
            && row.flags.cost == QuantityOrder::TimeLower
            && row.flags.profit == QuantityOrder::TimeHigher
            && row.flags.n_drivers == QuantityOrder::Equal
            && row.flags.wage == QuantityOrder::Equal;
        checks.push((
            format!(
                "p_t={p_t:.2}: lam {:?}, cost {:?}, profit {:?}, N {:?}, wage {:?}",
                row.flags.lambda,
                row.flags.cost,
                row.flags.profit,
                row.flags.n_drivers,
                row.flags.wage
            ),
            ok,
        ));
    }
    report(8, "pareto ordering at matched revenue", &checks);
}

#[test]
fn criterion_09_levy_side_equivalence() {
    let p = sf();
    let w_min = 26.35;
    let mut rng = Lcg::new(0x5eed_0009);
    let mut checks = Vec::new();
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-9);
    for k in 0..20 {
        let (policy, label) = if k < 10 {
            let p_t = rng.uniform(0.0, 3.2);
            (Policy::trip_tax(w_min, p_t), format!("trip p_t={p_t:.3}"))
        } else {
            let p_h = rng.uniform(0.0, 9.0);
            (Policy::time_tax(w_min, p_h), format!("time p_h={p_h:.3}"))
        };
        let eq = solver::solve(&p, &policy, &cfg()).unwrap();
        let oracle = oracle_solve(&p, policy.w_min, policy.p_trip, policy.p_time);
        let worst = rel(eq.outcome.lam, oracle.lam)
            .max(rel(eq.outcome.n_drivers, oracle.n))
            .max(rel(eq.outcome.profit_hr, oracle.profit_hr))
            .max(rel(eq.outcome.tax_hr, oracle.tax_hr))
            .max(rel(eq.outcome.wage_hr, oracle.net_wage_hr));
        checks.push((format!("{label}: max rel dev {worst:.2e}"), worst < 1e-6));
    }
    report(9, "levy-side dual-formulation equivalence", &checks);
}

#[test]
fn criterion_10_brute_force_equivalence() {
    let base = sf();
    let mut rng = Lcg::new(0x5eed_0010);
    let mut checks = Vec::new();
    for set in 0..5 {
        let mut p = base.clone();
        p.lambda0 *= rng.uniform(0.9, 1.1);
        p.n0 *= rng.uniform(0.9, 1.1);
        p.m_const *= rng.uniform(0.9, 1.1);
        p.alpha *= rng.uniform(0.95, 1.1);
        p.eps *= rng.uniform(0.9, 1.1);
        p.sigma *= rng.uniform(0.9, 1.1);
        p.validate().unwrap();
        let w_tilde = tilde_wage(&p, &cfg()).unwrap();
        let w_min = w_tilde * rng.uniform(1.05, 1.25);
        let p_t = rng.uniform(0.2, 2.8);
        let p_h = rng.uniform(0.5, 8.0);

        let policies = [
            ("floor", Policy::min_wage(w_min)),
            ("trip", Policy::trip_tax(w_min, p_t)),
            ("time", Policy::time_tax(w_min, p_h)),
        ];
        for (name, policy) in policies {
            let eq = solver::solve(&p, &policy, &cfg()).unwrap();
            let (grid_max, bound) =
                brute_force_grid_max(&p, policy.w_min, policy.p_trip, policy.p_time, 400);
            let solver_profit = eq.outcome.profit_hr;
            let no_grid_point_beats =
                grid_max <= solver_profit + 1e-6 * (1.0 + solver_profit.abs());
            let within_resolution = solver_profit <= grid_max + bound;
            checks.push((
                format!(
                    "set {set} {name}: solver {solver_profit:.2} vs grid {grid_max:.2} (bound {bound:.2})"
                ),
                no_grid_point_beats && within_resolution,
            ));
        }
    }
    report(10, "brute-force grid equivalence", &checks);
}

#[test]
fn criterion_11_numerical_hygiene() {
    let p = sf();
    // Logit inverses round-trip.
    let mut inv_err: f64 = 0.0;
    for i in 1..100 {
        let lam = p.lambda0 * i as f64 / 100.0;
        let c = model::demand_inverse(&p, lam).unwrap();
        inv_err = inv_err.max(((model::demand(&p, c) - lam) / lam).abs());
        let n = p.n0 * i as f64 / 100.0;
        let w = model::supply_inverse(&p, n).unwrap();
        inv_err = inv_err.max(((model::supply(&p, w) - n) / n).abs());
    }

    // Closed-form elasticities against central differences.
    let mut el_err: f64 = 0.0;
    let h = 1e-6;
    for &(lam, p_f) in &[(157.4, 11.8), (208.456, 11.628), (500.0, 9.0)] {
        let c = model::demand_inverse(&p, lam).unwrap();
        let dlam = (model::demand(&p, c + h) - model::demand(&p, c - h)) / (2.0 * h);
        let numeric = (dlam * p_f / lam).abs();
        let closed = model::passenger_price_elasticity(&p, lam, p_f).unwrap();
        el_err = el_err.max(((numeric - closed) / closed).abs());
    }
    for &n in &[3000.0, 3968.147, 7000.0] {
        let w = model::supply_inverse(&p, n).unwrap();
        let dn = (model::supply(&p, w + h) - model::supply(&p, w - h)) / (2.0 * h);
        let numeric = (dn * w / n).abs();
        let closed = model::driver_wage_elasticity(&p, n, w).unwrap();
        el_err = el_err.max(((numeric - closed) / closed).abs());
    }

    // Inner first-order condition strictly decreasing on sampled grids.
    let mut monotone = true;
    for &n in &[1200.0, 3000.0, 3968.147, 6500.0] {
        let v = model::traffic_speed(&p, n).unwrap();
        let t0 = model::trip_duration(&p, v).unwrap();
        let hi = 0.999 * (p.lambda0.min(n / t0));
        let mut prev = f64::INFINITY;
        for i in 1..=100 {
            let lam = hi * i as f64 / 101.0;
            let f = solver::inner_foc(&p, n, lam, 0.0).unwrap();
            monotone &= f < prev;
            prev = f;
        }
    }

    report(
        11,
        "numerical hygiene",
        &[
            (
                format!("max inverse round-trip rel err {inv_err:.2e} (<1e-10)"),
                inv_err < 1e-10,
            ),
            (
                format!("max elasticity vs FD rel err {el_err:.2e} (<1e-6)"),
                el_err < 1e-6,
            ),
            flag("inner FOC strictly decreasing", monotone),
        ],
    );
}

#[test]
fn regimes_along_default_sweeps_are_consistent() {
    // Companion sanity for criteria 5-7: regimes flip exactly once.
    let (trip_table, time_table) = default_sweeps();
    for table in [trip_table, time_table] {
        let mut seen_partial = false;
        for r in &table.rows {
            match r.eq.regime {
                Regime::WageFloorFullHire => {
                    assert!(!seen_partial, "full hire after partial in {}", table.scheme)
                }
                Regime::WageFloorPartialHire => seen_partial = true,
                Regime::Unconstrained => panic!("unconstrained regime under a binding floor"),
            }
        }
        assert!(
            seen_partial,
            "{} sweep never left the plateau",
            table.scheme
        );
    }
}
