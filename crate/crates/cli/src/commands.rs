//! Command bodies: resolve flag overrides, run the analysis, write
//! artifacts, print a short summary.

use serde_json::json;
use tnc_market::analysis::{self, default_grid, linear_grid, pareto_compare, Scheme, SweepTable};
use tnc_market::calibrate::{run_calibration, PhysicalBase};
use tnc_market::io::{
    comparison_csv, comparison_records, records_csv, table_csv, table_json, OutputFormat, RunSpec,
    TableRecord,
};
use tnc_market::solver;
use tnc_market::{Error, Policy};

use crate::manifest::{Overrides, RunContext};

fn require_w_min(spec: &RunSpec, flag: Option<f64>, command: &str) -> Result<f64, Error> {
    flag.or(spec.policy.w_min).ok_or_else(|| {
        Error::Config(format!(
            "{command} needs a wage floor: set [policy] w_min_usd_hr or pass --w-min"
        ))
    })
}

fn grid_vec(bounds: (f64, f64, usize)) -> Vec<f64> {
    linear_grid(bounds.0, bounds.1, bounds.2)
}

fn write_table(
    ctx: &mut RunContext,
    base: &str,
    table: &SweepTable,
    formats: &[OutputFormat],
) -> Result<(), Error> {
    for fmt in formats {
        match fmt {
            OutputFormat::Csv => ctx.write_artifact(&format!("{base}.csv"), &table_csv(table))?,
            OutputFormat::Json => {
                ctx.write_artifact(&format!("{base}.json"), &table_json(table))?
            }
        }
    }
    Ok(())
}

pub fn calibrate(spec: RunSpec, source: &str, overrides: Overrides) -> Result<(), Error> {
    let Some(targets) = spec.calibration.clone() else {
        return Err(Error::Config(
            "calibrate needs a [calibration] section with the observed anchors".into(),
        ));
    };
    let mut ctx = RunContext::new("calibrate", &spec, source, overrides);
    let phys = PhysicalBase {
        trip_len: spec.params.trip_len,
        v_free: spec.params.v_free,
        kappa: spec.params.kappa,
        alpha: spec.params.alpha,
        beta: spec.params.beta,
    };
    let report = run_calibration(&phys, &targets, &spec.solver)?;

    let json_text = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Config(format!("report serialization: {e}")))?
        + "\n";
    ctx.write_artifact("calibration.json", &json_text)?;

    // Fitted parameter vector as a drop-in [params] section.
    let f = &report.fitted;
    let toml_text = format!(
        "[params]\nlambda0_per_min = {}\nn0_drivers = {}\nm_pickup = {}\ntrip_len_mi = {}\n\
         v_free_mph = {}\nkappa_mph_per_driver = {}\nalpha_usd_per_min = {}\nbeta_usd_per_min = {}\n\
         eps_per_usd = {}\nc_out_usd = {}\nsigma_per_usd_hr = {}\nw_res_usd_hr = {}\n",
        f.lambda0,
        f.n0,
        f.m_const,
        f.trip_len,
        f.v_free,
        f.kappa,
        f.alpha,
        f.beta,
        f.eps,
        f.c_out,
        f.sigma,
        f.w_res
    );
    ctx.write_artifact("calibrated_params.toml", &toml_text)?;

    println!(
        "calibrated: eps={:.6} c_out={:.4} sigma={:.6} w_res={:.4}",
        f.eps, f.c_out, f.sigma, f.w_res
    );
    println!(
        "closed loop: max primary anchor error {:.3e} (lam {:.2e}, n {:.2e}, p_f {:.2e}, wage {:.2e})",
        report.match_errors.max_primary(),
        report.match_errors.lam_rel,
        report.match_errors.n_rel,
        report.match_errors.p_f_rel,
        report.match_errors.wage_rel,
    );
    ctx.finish(&spec)
}

pub fn solve(
    spec: RunSpec,
    source: &str,
    mut overrides: Overrides,
    w_min: Option<f64>,
    tax: Option<f64>,
    scheme: Option<Scheme>,
) -> Result<(), Error> {
    let mut policy: Policy = spec.policy.clone();
    if let Some(w) = w_min {
        policy.w_min = Some(w);
        overrides.insert("w_min", w.to_string());
    }
    if let Some(level) = tax {
        let scheme = scheme.unwrap_or(spec.sweep.scheme);
        match scheme {
            Scheme::Trip => {
                policy.p_trip = level;
                policy.p_time = 0.0;
            }
            Scheme::Time => {
                policy.p_time = level;
                policy.p_trip = 0.0;
            }
        }
        overrides.insert("tax", level.to_string());
        overrides.insert("scheme", scheme.to_string());
    }
    policy.validate()?;

    let mut ctx = RunContext::new("solve", &spec, source, overrides);
    let eq = solver::solve(&spec.params, &policy, &spec.solver)?;
    let tax_level = policy.p_trip + policy.p_time;
    let record = TableRecord::from_equilibrium(tax_level, &eq);

    for fmt in &spec.output.formats {
        match fmt {
            OutputFormat::Csv => {
                ctx.write_artifact("solve.csv", &records_csv(std::slice::from_ref(&record)))?
            }
            OutputFormat::Json => {
                let doc = json!({
                    "policy": policy,
                    "tax_level": tax_level,
                    "row": record,
                    "equilibrium": eq,
                });
                let text = serde_json::to_string_pretty(&doc)
                    .map_err(|e| Error::Config(format!("serialization: {e}")))?
                    + "\n";
                ctx.write_artifact("solve.json", &text)?;
            }
        }
    }

    let m = &eq.outcome;
    println!(
        "regime={} lambda={:.4}/min n_drivers={:.3} p_f={:.5} p_d={:.5} wage_hr={:.4} \
         cost={:.4} occupancy={:.5} profit_hr={:.2} tax_hr={:.2} residual={:.2e}",
        eq.regime,
        m.lam,
        m.n_drivers,
        m.p_f,
        m.p_d,
        m.wage_hr,
        m.cost,
        m.occupancy,
        m.profit_hr,
        m.tax_hr,
        eq.residual
    );
    ctx.finish(&spec)
}

pub fn sweep(
    spec: RunSpec,
    source: &str,
    mut overrides: Overrides,
    scheme: Option<Scheme>,
    grid_flag: Option<(f64, f64, usize)>,
    w_min: Option<f64>,
) -> Result<(), Error> {
    let scheme = scheme.unwrap_or(spec.sweep.scheme);
    if let Some(s) = &grid_flag {
        overrides.insert("grid", format!("{}:{}:{}", s.0, s.1, s.2));
    }
    let grid = grid_flag
        .or(spec.sweep.grid)
        .map(grid_vec)
        .unwrap_or_else(|| default_grid(scheme));
    let w_min = require_w_min(&spec, w_min, "sweep")?;
    if w_min != spec.policy.w_min.unwrap_or(f64::NAN) {
        overrides.insert("w_min", w_min.to_string());
    }
    overrides.insert("scheme", scheme.to_string());

    let mut ctx = RunContext::new("sweep", &spec, source, overrides);
    let table = analysis::sweep_with_levy_side(
        &spec.params,
        w_min,
        scheme,
        &grid,
        spec.policy.levy_side,
        &spec.solver,
    )?;
    write_table(
        &mut ctx,
        &format!("sweep_{scheme}"),
        &table,
        &spec.output.formats,
    )?;

    println!(
        "sweep {scheme}: {} rows ({} failures), levels [{:.4}, {:.4}]",
        table.rows.len(),
        table.failures.len(),
        grid.first().unwrap(),
        grid.last().unwrap()
    );
    if let (Some(first), Some(last)) = (table.rows.first(), table.rows.last()) {
        println!(
            "profit_hr {:.2} -> {:.2}; n_drivers {:.2} -> {:.2}; tax_hr {:.2} -> {:.2}",
            first.eq.outcome.profit_hr,
            last.eq.outcome.profit_hr,
            first.eq.outcome.n_drivers,
            last.eq.outcome.n_drivers,
            first.eq.outcome.tax_hr,
            last.eq.outcome.tax_hr
        );
    }
    ctx.finish(&spec)
}

pub fn compare(
    spec: RunSpec,
    source: &str,
    mut overrides: Overrides,
    tax: Option<f64>,
    w_min: Option<f64>,
) -> Result<(), Error> {
    let w_min = require_w_min(&spec, w_min, "compare")?;
    let levels: Vec<f64> = match tax {
        Some(t) => {
            overrides.insert("tax", t.to_string());
            vec![t]
        }
        None => spec.compare.p_trip_levels.clone(),
    };
    let mut ctx = RunContext::new("compare", &spec, source, overrides);
    let mut rows = Vec::with_capacity(levels.len());
    for level in levels {
        rows.push(pareto_compare(&spec.params, w_min, level, &spec.solver)?);
    }

    for fmt in &spec.output.formats {
        match fmt {
            OutputFormat::Csv => ctx.write_artifact("compare.csv", &comparison_csv(&rows))?,
            OutputFormat::Json => {
                let text = serde_json::to_string_pretty(&comparison_records(&rows))
                    .map_err(|e| Error::Config(format!("serialization: {e}")))?
                    + "\n";
                ctx.write_artifact("compare.json", &text)?;
            }
        }
    }

    for r in &rows {
        println!(
            "p_t={:.3} -> p_h={:.4} (tax {:.2} $/hr): lambda {:?}, cost {:?}, profit {:?} \
             ({:.2} vs {:.2} $/hr)",
            r.p_trip,
            r.p_time,
            r.target_tax_hr,
            r.flags.lambda,
            r.flags.cost,
            r.flags.profit,
            r.time.outcome.profit_hr,
            r.trip.outcome.profit_hr
        );
    }
    ctx.finish(&spec)
}

pub fn thresholds(
    spec: RunSpec,
    source: &str,
    mut overrides: Overrides,
    w_min: Option<f64>,
) -> Result<(), Error> {
    let w_min = require_w_min(&spec, w_min, "thresholds")?;
    if Some(w_min) != spec.policy.w_min {
        overrides.insert("w_min", w_min.to_string());
    }
    let mut ctx = RunContext::new("thresholds", &spec, source, overrides);

    let w_tilde = analysis::tilde_wage(&spec.params, &spec.solver)?;
    let w1 = analysis::wage_threshold_w1(&spec.params, &spec.solver)?;
    let mut by_scheme = serde_json::Map::new();
    for scheme in [Scheme::Trip, Scheme::Time] {
        let table = analysis::sweep(
            &spec.params,
            w_min,
            scheme,
            &default_grid(scheme),
            &spec.solver,
        )?;
        let bar = analysis::detect_threshold(&spec.params, &table, &spec.solver)?;
        by_scheme.insert(scheme.to_string(), json!(bar));
    }

    let doc = json!({
        "w_min_hr": w_min,
        "w_tilde_hr": w_tilde,
        // The full-hire wage ceiling; the equal-revenue comparison uses the
        // same ceiling in this model, so it is reported under both names.
        "w1_hr": w1,
        "w3_hr": w1,
        "charge_threshold": by_scheme,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?
        + "\n";
    ctx.write_artifact("thresholds.json", &text)?;

    println!(
        "w_tilde={w_tilde:.4} $/hr; w1={w1:.4} $/hr; p_t_bar={:.4} $/trip; p_h_bar={:.4} $/hr",
        doc["charge_threshold"]["trip"].as_f64().unwrap(),
        doc["charge_threshold"]["time"].as_f64().unwrap()
    );
    ctx.finish(&spec)
}

pub fn sensitivity(
    spec: RunSpec,
    source: &str,
    mut overrides: Overrides,
    grid_flag: Option<(f64, f64, usize)>,
    w_min: Option<f64>,
) -> Result<(), Error> {
    let w_min = require_w_min(&spec, w_min, "sensitivity")?;
    if let Some(s) = &grid_flag {
        overrides.insert("grid", format!("{}:{}:{}", s.0, s.1, s.2));
    }
    let grid = grid_flag
        .or(spec.sensitivity.grid)
        .map(grid_vec)
        .unwrap_or_else(|| default_grid(Scheme::Time));
    let mut ctx = RunContext::new("sensitivity", &spec, source, overrides);

    let report = analysis::sensitivity_sweep(
        &spec.params,
        w_min,
        &spec.sensitivity.perturbations,
        &grid,
        &spec.solver,
    )?;

    write_table(
        &mut ctx,
        "sensitivity/nominal",
        &report.nominal,
        &spec.output.formats,
    )?;
    for pt in &report.perturbed {
        let base = format!("sensitivity/{}_{:+}", pt.param, pt.rel_delta);
        write_table(&mut ctx, &base, &pt.table, &spec.output.formats)?;
    }
    let flags_text = serde_json::to_string_pretty(&report.flags)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?
        + "\n";
    ctx.write_artifact("sensitivity/flags.json", &flags_text)?;

    println!(
        "sensitivity over {} perturbed sets: {:?}",
        report.perturbed.len(),
        report.flags
    );
    ctx.finish(&spec)
}
