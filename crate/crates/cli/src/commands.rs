use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use qfridge::entanglement::{
    biseparable_radius, entanglement_report, ghz_noise_state, ghz_noise_thresholds,
    separability_certificate,
};
use qfridge::io::{density_from_json, steady_state_to_json, EntanglementJson, WitnessJson};
use qfridge::model::steady_state;
use qfridge::optimize::sweep::{solve_cell, ENTANGLEMENT_THRESHOLD, ZETA_TOLERANCE};
use qfridge::optimize::{
    curve_fig3, sweep_fig2, table1_reproduce, CoolingResult, SweepConfig, SweepResult,
    DEFAULT_BUDGET,
};
use qfridge::FridgeError;

use crate::config::{self, emit};
use crate::{CliError, OptimizeArgs, SteadyArgs, SweepArgs, WitnessArgs};

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))
}

pub fn steady(args: SteadyArgs) -> Result<(), CliError> {
    let params = config::fridge_params(&args.params)?;
    let ss = steady_state(&params)?;
    emit(args.out.as_deref(), &steady_state_to_json(&params, &ss)?)
}

pub fn witness(args: WitnessArgs) -> Result<(), CliError> {
    let rho = if let Some(path) = &args.rho {
        density_from_json(&config::read(path)?).map_err(|e| match e {
            FridgeError::InvalidState(_) => CliError::Numerical(format!("{path}: {e}")),
            other => CliError::Config(format!("{path}: {other}")),
        })?
    } else if let Some(p) = args.ghz_noise {
        ghz_noise_state(p)?
    } else {
        steady_state(&config::fridge_params(&args.params)?)?.rho
    };
    let report = entanglement_report(&rho);
    let certificate = separability_certificate(&rho);
    let mut out = serde_json::to_value(WitnessJson {
        report: EntanglementJson::from(&report),
        certificate,
    })
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    if args.ghz_noise.is_some() {
        let t = ghz_noise_thresholds();
        out["ghz_noise"] = json!({
            "bipartite_witness_zero": t.bipartite_witness_zero,
            "gme_witness_zero": t.gme_witness_zero,
            "quoted_separable_bound": t.quoted_separable_bound,
            "in_tension": t.in_tension(),
            "note": t.describe(),
        });
    }
    if args.probe_trials > 0 {
        let eps = biseparable_radius(&rho, args.probe_trials, args.seed, 30)?;
        out["biseparable_radius"] = json!({ "epsilon": eps, "trials": args.probe_trials, "seed": args.seed });
    }
    emit(args.out.as_deref(), &to_json(&out)?)
}

#[derive(Serialize)]
struct SearchJson {
    params: qfridge::FridgeParams,
    #[serde(rename = "TS")]
    ts: f64,
    report: EntanglementJson,
    feasible: bool,
    evaluations: usize,
    feasible_evaluations: usize,
    failures: usize,
}

impl From<&CoolingResult> for SearchJson {
    fn from(r: &CoolingResult) -> Self {
        Self {
            params: r.params,
            ts: r.ts,
            report: EntanglementJson::from(&r.report),
            feasible: r.feasible,
            evaluations: r.evaluations,
            feasible_evaluations: r.feasible_evaluations,
            failures: r.failures,
        }
    }
}

pub fn optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let problem = config::problem(&args.problem)?;
    problem.validate()?;
    let budget = args.budget.unwrap_or(DEFAULT_BUDGET);
    let cfg = SweepConfig {
        template: problem,
        tr_values: vec![problem.tr],
        th_values: vec![problem.th],
        e3_max_fraction: problem.e3_max / problem.th,
        budget,
        seed: args.seed,
    };
    let row = solve_cell(&cfg, 0, 0)?;
    let (unc, con) = (row.unconstrained.expect("set"), row.constrained.expect("set"));
    let out = json!({
        "problem": problem,
        "budget": budget,
        "seed": args.seed,
        "unconstrained": SearchJson::from(&unc),
        "constrained": SearchJson::from(&con),
        "TS": row.ts,
        "TS_star": row.ts_star,
        "zeta": row.zeta,
        "cooling": row.cooling,
    });
    emit(args.out.as_deref(), &to_json(&out)?)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn sweep_summary(result: &SweepResult) -> serde_json::Value {
    let entangled: Vec<_> = result.rows.iter().filter(|r| r.entangled()).collect();
    let r_dominant = entangled
        .iter()
        .filter(|r| r.c_r_ch >= r.c_c_rh.max(r.c_cr_h))
        .count();
    let min_zeta = result.rows.iter().map(|r| r.zeta).fold(f64::INFINITY, f64::min);
    json!({
        "cells": result.tr_values.len() * result.th_values.len(),
        "solved": result.rows.len(),
        "failed": result.failed,
        "failure_fraction": result.failure_fraction(),
        "max_zeta": result.max_zeta(),
        "min_zeta": min_zeta,
        "advantage_cells": result.rows.iter().filter(|r| r.zeta > 1.0 + ZETA_TOLERANCE).count(),
        "entangled_cells": entangled.len(),
        "r_ch_dominant_cells": r_dominant,
        "no_cooling_cells": result.rows.iter().filter(|r| !r.cooling).map(|r| json!({"TR": r.tr, "TH": r.th})).collect::<Vec<_>>(),
        "entanglement_threshold": ENTANGLEMENT_THRESHOLD,
        "boundary": result.boundary,
    })
}

fn check_failures(result: &SweepResult) -> Result<(), CliError> {
    if result.failure_fraction() >= 0.01 {
        return Err(CliError::Numerical(format!(
            "{} of {} cells failed",
            result.failed.len(),
            result.tr_values.len() * result.th_values.len()
        )));
    }
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let dir = Path::new(&args.out);
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;

    if args.kind.table1 {
        let rows = table1_reproduce()?;
        let out = json!({
            "rows": rows,
            "all_pass": rows.iter().all(|r| r.pass),
        });
        return write(dir, "table1.json", &to_json(&out)?);
    }

    let res = args.res.unwrap_or(20);
    if res == 0 {
        return Err(CliError::Config("--res must be positive".into()));
    }
    let budget = args.budget.unwrap_or(DEFAULT_BUDGET);
    let template = config::problem(&args.problem)?;
    let tr = (args.tr_min.unwrap_or(1.01), args.tr_max);
    if args.kind.fig2 {
        let mut cfg = SweepConfig::fig2(res, budget, args.seed);
        cfg = SweepConfig::grid(
            (tr.0, tr.1.unwrap_or(5.0)),
            (args.th_min.unwrap_or(10.0), args.th_max.unwrap_or(1e4)),
            res,
            cfg.budget,
            cfg.seed,
        );
        cfg.template = template;
        let result = sweep_fig2(&cfg)?;
        write(dir, "fig2.csv", &result.to_csv())?;
        let mut summary = sweep_summary(&result);
        summary["config"] = serde_json::to_value(&cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
        write(dir, "fig2_summary.json", &to_json(&summary)?)?;
        return check_failures(&result);
    }

    let slices = args.slices.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let mut cfg = SweepConfig::slices(&slices, res, budget, args.seed);
    if args.tr_min.is_some() || tr.1.is_some() {
        let hi = tr.1.unwrap_or(*cfg.tr_values.last().expect("res > 0"));
        cfg.tr_values = qfridge::optimize::sweep::logspace(tr.0, hi, res);
    }
    cfg.template = template;
    let result = sweep_fig2(&cfg)?;
    let collapse = curve_fig3(&result)?;
    write(dir, "fig3_sweep.csv", &result.to_csv())?;
    write(dir, "fig3.csv", &collapse.to_csv())?;
    let mut summary = sweep_summary(&result);
    summary["config"] = serde_json::to_value(&cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
    summary["collapse"] = json!({
        "slices": collapse.slices,
        "shared_bins": collapse.shared_bins,
        "max_relative_spread": collapse.max_relative_spread,
        "separable_zeta_deviation": collapse.separable_zeta_deviation,
        "monotone": collapse.monotone(0.99),
    });
    write(dir, "fig3_summary.json", &to_json(&summary)?)?;
    check_failures(&result)
}
