use proptest::prelude::*;

use qfridge::model::steady_state;
use qfridge::optimize::sweep::solve_cell;
use qfridge::optimize::{optimize, zeta, OptimizationProblem, SweepConfig};

fn problem(tr: f64, th: f64, constrained: bool) -> OptimizationProblem {
    let mut p = OptimizationProblem::new(tr, th, constrained);
    p.e3_max = 0.5 * th;
    p
}

#[test]
fn reference_point_matches_known_optimum() {
    let cfg = SweepConfig::grid((1.01, 1.01), (1e4, 1e4), 1, 60_000, 0);
    let row = solve_cell(&cfg, 0, 0).unwrap();
    assert!((row.ts_star - 0.41919503).abs() < 1e-7, "TS* = {}", row.ts_star);
    assert!(row.ts < row.ts_star);
    assert!(row.zeta > 1.0 && row.zeta < 1.01);
    let unc = row.unconstrained.unwrap();
    assert!(unc.report.c_r_ch > unc.report.c_c_rh.max(unc.report.c_cr_h));
}

#[test]
fn reported_optimum_is_reproduced_by_the_full_solver() {
    let res = optimize(&problem(1.5, 1e3, false), 3000, 1).unwrap();
    let ss = steady_state(&res.params).unwrap();
    assert!((ss.ts.unwrap() - res.ts).abs() < 1e-10);
}

#[test]
fn constrained_optimum_is_biseparable() {
    let res = optimize(&problem(1.01, 1e4, true), 5000, 2).unwrap();
    assert!(res.feasible);
    assert!(res.report.worst_bipartite_witness() <= 1e-9);
}

#[test]
fn window_without_cooling_gives_unit_zeta() {
    let cfg = SweepConfig::grid((5.0, 5.0), (10.0, 10.0), 1, 2000, 0);
    let row = solve_cell(&cfg, 0, 0).unwrap();
    assert!(!row.cooling);
    assert_eq!(row.zeta, 1.0);
    assert!((row.ts - 1.0).abs() < 1e-9);
}

fn th_strategy() -> impl Strategy<Value = f64> {
    (1.5f64..4.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn searches_are_deterministic(tr in 1.01f64..4.0, th in th_strategy(), seed in 0u64..1000, constrained: bool) {
        let p = problem(tr, th, constrained);
        let a = optimize(&p, 1500, seed).unwrap();
        let b = optimize(&p, 1500, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn more_budget_never_hurts(tr in 1.01f64..4.0, th in th_strategy(), seed in 0u64..1000, constrained: bool) {
        let p = problem(tr, th, constrained);
        let small = optimize(&p, 1000, seed).unwrap();
        let large = optimize(&p, 2000, seed).unwrap();
        prop_assert!(large.ts <= small.ts);
        prop_assert!(small.evaluations <= 1000 && large.evaluations <= 2000);
    }

    #[test]
    fn entanglement_never_costs_cooling(tr in 1.01f64..4.0, th in th_strategy(), seed in 0u64..1000) {
        let cfg = SweepConfig::grid((tr, tr), (th, th), 1, 2500, seed);
        let row = solve_cell(&cfg, 0, 0).unwrap();
        prop_assert!(row.ts <= row.ts_star + 1e-12);
        prop_assert!(row.ts_star <= 1.0 + 1e-12);
        prop_assert!(row.zeta >= 1.0);
        if row.cooling {
            prop_assert_eq!(row.zeta, zeta(1.0, row.ts, row.ts_star).unwrap());
        }
    }
}
