//! Best-cooling searches with and without the separability constraint.
//!
//! The free parameters are `x = (E3, p2, p3, g)`; `E1`, `p1` and the bath
//! temperatures are fixed. Each search is a log-spaced grid scan followed by
//! restarted Nelder–Mead refinement. Box constraints are handled by the
//! change of variables `log x = lo + (hi - lo)(1 + sin y)/2`, which keeps
//! every iterate inside the box without stalling on its faces.
//!
//! The constrained search rejects any point with `W1, W2` or `W3 > 0`.
//! Rejected simplex points are first repaired by bisecting `g` downwards
//! (weaker coupling always restores separability), and each refinement
//! round ends with a bisection between the best feasible and best
//! infeasible points, since the constrained optimum lies on the witness
//! boundary.
//!
//! Every steady-state solve counts against the budget. The sequence of
//! solves does not depend on the budget, so a larger budget only extends
//! the same stream and the incumbent can only improve.

pub mod nelder_mead;
pub mod sweep;
pub mod table1;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::entanglement::{entanglement_report, EntanglementReport, WitnessSet};
use crate::error::{FridgeError, Result};
use crate::model::{steady_state, xblock_steady_state, FridgeParams};
use nelder_mead::{NelderMeadOptions, Stop};
use sweep::logspace;

pub use sweep::{curve_fig3, sweep_fig2, CollapseReport, SweepConfig, SweepResult, SweepRow};
pub use table1::{table1_reproduce, Table1Row};

/// Slack on `W_i` when re-checking an accepted optimum with the full solver.
pub const POST_HOC_SLACK: f64 = 1e-9;

/// Number of free parameters.
const DIMS: usize = 4;

/// One cooling task: fixed cold-side data plus the search box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationProblem {
    pub e1: f64,
    pub p1: f64,
    pub tc: f64,
    pub tr: f64,
    pub th: f64,
    pub p2_max: f64,
    pub p3_max: f64,
    pub g_max: f64,
    pub e3_min: f64,
    pub e3_max: f64,
    /// Lower bound of each rate as a fraction of its upper bound.
    pub rate_floor: f64,
    /// Impose `W1, W2, W3 <= 0`.
    pub constrained: bool,
}

impl OptimizationProblem {
    /// `TC = 1, E1 = 1, p1 = 1e-5`, rates and coupling at most `1e-4`,
    /// `E3` in `[E1 + 1e-3, TH/2]`.
    pub fn new(tr: f64, th: f64, constrained: bool) -> Self {
        let e1 = 1.0;
        Self {
            e1,
            p1: 1e-5,
            tc: 1.0,
            tr,
            th,
            p2_max: 1e-4,
            p3_max: 1e-4,
            g_max: 1e-4,
            e3_min: e1 + 1e-3,
            e3_max: 0.5 * th,
            rate_floor: 1e-3,
            constrained,
        }
    }

    pub fn with_constraint(mut self, constrained: bool) -> Self {
        self.constrained = constrained;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(FridgeError::InvalidParams(m.to_string()));
        let all = [
            self.e1, self.p1, self.tc, self.tr, self.th, self.p2_max, self.p3_max, self.g_max,
            self.e3_min, self.e3_max, self.rate_floor,
        ];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("problem data and bounds must be finite and strictly positive");
        }
        if !(self.tc < self.tr && self.tr < self.th) {
            return bad("bath temperatures must satisfy TC < TR < TH");
        }
        if self.e3_min >= self.e3_max {
            return bad("empty E3 window");
        }
        if self.e3_min <= self.e1 && self.e3_max >= self.e1 {
            return bad("E3 window must exclude E1");
        }
        if self.rate_floor >= 1.0 {
            return bad("rate floor must be below 1");
        }
        Ok(())
    }

    /// Box on `(E3, p2, p3, g)`.
    pub fn bounds(&self) -> ([f64; DIMS], [f64; DIMS]) {
        let hi = [self.e3_max, self.p2_max, self.p3_max, self.g_max];
        let lo = [
            self.e3_min,
            self.p2_max * self.rate_floor,
            self.p3_max * self.rate_floor,
            self.g_max * self.rate_floor,
        ];
        (lo, hi)
    }

    fn log_bounds(&self) -> ([f64; DIMS], [f64; DIMS]) {
        let (lo, hi) = self.bounds();
        (lo.map(f64::ln), hi.map(f64::ln))
    }

    pub fn params(&self, x: &[f64; DIMS]) -> FridgeParams<f64> {
        FridgeParams::new(
            self.e1,
            x[0],
            x[3],
            [self.p1, x[1], x[2]],
            [self.tc, self.tr, self.th],
        )
    }
}

/// Outcome of one search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoolingResult {
    pub params: FridgeParams<f64>,
    pub ts: f64,
    /// Witnesses of the optimum, from the full solver.
    pub report: EntanglementReport<f64>,
    /// `W1, W2, W3 <= 1e-9` at the optimum.
    pub feasible: bool,
    pub evaluations: usize,
    /// Evaluations that satisfied the constraint (all of them when unconstrained).
    pub feasible_evaluations: usize,
    /// Solves that failed and were skipped.
    pub failures: usize,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    x: [f64; DIMS],
    ts: f64,
    w: f64,
}

impl Candidate {
    fn feasible(&self) -> bool {
        self.w <= 0.0
    }
}

struct Search<'a> {
    problem: &'a OptimizationProblem,
    budget: usize,
    used: usize,
    failures: usize,
    feasible_count: usize,
    best: Option<Candidate>,
    best_infeasible: Option<Candidate>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a OptimizationProblem, budget: usize) -> Self {
        Self {
            problem,
            budget,
            used: 0,
            failures: 0,
            feasible_count: 0,
            best: None,
            best_infeasible: None,
        }
    }

    /// One steady-state solve; `None` when the solve failed.
    fn eval(&mut self, x: &[f64; DIMS]) -> std::result::Result<Option<Candidate>, Stop> {
        if self.used >= self.budget {
            return Err(Stop);
        }
        self.used += 1;
        let params = self.problem.params(x);
        let solved = xblock_steady_state(&params).map(|s| {
            let ts = s.temperature(params.e1).unwrap_or(f64::INFINITY);
            let r = EntanglementReport::from_parts(&s.populations, s.coherence.norm(), true);
            (ts, r.worst_bipartite_witness())
        });
        let (ts, w) = match solved {
            Ok(v) if !v.0.is_nan() => v,
            _ => {
                self.failures += 1;
                return Ok(None);
            }
        };
        let c = Candidate { x: *x, ts, w };
        let accepted = !self.problem.constrained || c.feasible();
        if accepted {
            self.feasible_count += 1;
            if self.best.is_none_or(|b| c.ts < b.ts) {
                self.best = Some(c);
            }
        } else if self.best_infeasible.is_none_or(|b| c.ts < b.ts) {
            self.best_infeasible = Some(c);
        }
        Ok(Some(c))
    }

    /// Objective seen by the simplex.
    fn objective(&mut self, y: &[f64; DIMS]) -> std::result::Result<f64, Stop> {
        let x = to_box(self.problem, y);
        let c = match self.eval(&x)? {
            Some(c) => c,
            None => return Ok(f64::INFINITY),
        };
        if !self.problem.constrained || c.feasible() {
            return Ok(c.ts);
        }
        self.repair(&x)
    }

    /// Lowers `g` until the point is separable; returns the repaired `TS`.
    fn repair(&mut self, x: &[f64; DIMS]) -> std::result::Result<f64, Stop> {
        let (lo, _) = self.problem.log_bounds();
        let mut a = lo[3];
        let mut b = x[3].ln();
        let at = |g: f64, s: &mut Self| -> std::result::Result<Option<Candidate>, Stop> {
            let mut y = *x;
            y[3] = g.exp();
            s.eval(&y)
        };
        let base = match at(a, self)? {
            Some(c) if c.feasible() => c,
            _ => return Ok(f64::INFINITY),
        };
        let mut best = base.ts;
        for _ in 0..REPAIR_STEPS {
            let mid = 0.5 * (a + b);
            match at(mid, self)? {
                Some(c) if c.feasible() => {
                    best = best.min(c.ts);
                    a = mid;
                }
                _ => b = mid,
            }
        }
        Ok(best)
    }

    /// Bisects between the best feasible and best infeasible points in log space.
    fn boundary_bisection(&mut self) -> std::result::Result<(), Stop> {
        let (Some(f), Some(i)) = (self.best, self.best_infeasible) else {
            return Ok(());
        };
        if i.ts >= f.ts || f.x[3] <= 0.0 {
            return Ok(());
        }
        let (mut a, mut b) = (f.x.map(f64::ln), i.x.map(f64::ln));
        for _ in 0..BOUNDARY_STEPS {
            let mid: [f64; DIMS] = std::array::from_fn(|k| 0.5 * (a[k] + b[k]));
            match self.eval(&mid.map(f64::exp))? {
                Some(c) if c.feasible() => a = mid,
                _ => b = mid,
            }
        }
        Ok(())
    }
}

const REPAIR_STEPS: usize = 40;
const BOUNDARY_STEPS: usize = 40;
const RESTARTS: usize = 16;
/// Rounds without improvement before the search stops.
const PATIENCE: usize = 3;
const GRID_E3: usize = 24;
const GRID_RATE: usize = 6;

fn to_box(problem: &OptimizationProblem, y: &[f64; DIMS]) -> [f64; DIMS] {
    let (lo, hi) = problem.log_bounds();
    std::array::from_fn(|k| (lo[k] + (hi[k] - lo[k]) * 0.5 * (1.0 + y[k].sin())).exp())
}

fn from_box(problem: &OptimizationProblem, x: &[f64; DIMS]) -> [f64; DIMS] {
    let (lo, hi) = problem.log_bounds();
    std::array::from_fn(|k| {
        let u = ((x[k].ln() - lo[k]) / (hi[k] - lo[k])).clamp(0.0, 1.0);
        (2.0 * u - 1.0).asin()
    })
}

/// Default number of steady-state solves per search.
pub const DEFAULT_BUDGET: usize = 60_000;

/// Runs one search. Deterministic in `(problem, budget, seed)`.
pub fn optimize(problem: &OptimizationProblem, budget: usize, seed: u64) -> Result<CoolingResult> {
    optimize_with_starts(problem, budget, seed, &[])
}

/// As [`optimize`], with extra candidate points evaluated right after the grid.
pub fn optimize_with_starts(
    problem: &OptimizationProblem,
    budget: usize,
    seed: u64,
    starts: &[[f64; DIMS]],
) -> Result<CoolingResult> {
    problem.validate()?;
    let mut search = Search::new(problem, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // the stream ends either by convergence or by the budget; both are fine
    let _ = run(&mut search, starts, &mut rng);
    finish(problem, &search)
}

fn run(
    search: &mut Search<'_>,
    starts: &[[f64; DIMS]],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<(), Stop> {
    let problem = *search.problem;
    // the uncoupled machine: TS = TC, always separable
    search.eval(&[problem.e3_max, problem.p2_max, problem.p3_max, 0.0])?;

    let (lo, hi) = problem.bounds();
    let e3s = logspace(lo[0], hi[0], GRID_E3);
    let p2s = logspace(lo[1], hi[1], GRID_RATE);
    let p3s = logspace(lo[2], hi[2], GRID_RATE);
    let gs = logspace(lo[3], hi[3], GRID_RATE);
    for &e3 in &e3s {
        for &p2 in &p2s {
            for &p3 in &p3s {
                for &g in &gs {
                    search.eval(&[e3, p2, p3, g])?;
                }
            }
        }
    }
    for s in starts {
        if s.iter().all(|v| v.is_finite() && *v > 0.0) {
            let clamped: [f64; DIMS] =
                std::array::from_fn(|k| s[k].clamp(lo[k], hi[k]));
            search.eval(&clamped)?;
        }
    }

    let mut previous = f64::INFINITY;
    let mut stale = 0;
    for round in 0..RESTARTS {
        let Some(best) = search.best.filter(|b| b.x[3] > 0.0) else {
            break;
        };
        let mut y0 = from_box(&problem, &best.x);
        if round > 0 {
            let scale = 0.1 * 0.8f64.powi(round as i32 - 1);
            for v in y0.iter_mut() {
                *v += scale * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        let step = 0.3 * 0.7f64.powi(round as i32);
        nelder_mead::minimize(
            |y| search.objective(y),
            y0,
            step,
            NelderMeadOptions::default(),
        )?;
        if problem.constrained {
            search.boundary_bisection()?;
        }
        let now = search.best.map_or(f64::INFINITY, |b| b.ts);
        if previous - now <= 1e-14 * now.abs() {
            stale += 1;
            if stale >= PATIENCE {
                break;
            }
        } else {
            stale = 0;
        }
        previous = now;
    }
    Ok(())
}

fn finish(problem: &OptimizationProblem, search: &Search<'_>) -> Result<CoolingResult> {
    let best = search.best.ok_or(FridgeError::Infeasible)?;
    let params = problem.params(&best.x);
    let full = steady_state(&params)?;
    let report = entanglement_report(&full.rho);
    let feasible = report.biseparable_all(POST_HOC_SLACK);
    if problem.constrained && !feasible {
        return Err(FridgeError::Solver(format!(
            "accepted optimum fails the witness re-check (max W = {:.3e})",
            report.worst_bipartite_witness()
        )));
    }
    Ok(CoolingResult {
        params,
        ts: best.ts,
        report,
        feasible,
        evaluations: search.used,
        feasible_evaluations: search.feasible_count,
        failures: search.failures,
    })
}

/// `ζ = (TC - TS)/(TC - TS*)`.
pub fn zeta(tc: f64, ts: f64, ts_star: f64) -> Result<f64> {
    if !(ts_star < tc) {
        return Err(FridgeError::Undefined(format!(
            "no cooling at the constrained optimum (TS* = {ts_star}, TC = {tc})"
        )));
    }
    if ts > tc {
        return Err(FridgeError::InvalidParams(format!("TS = {ts} exceeds TC = {tc}")));
    }
    Ok((tc - ts) / (tc - ts_star))
}

/// Witness set enforced by the constrained search.
pub fn constraint_set() -> [WitnessSet; 3] {
    [WitnessSet::ONE, WitnessSet::TWO, WitnessSet::THREE]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(1.0, 0.9, 0.9).unwrap(), 1.0);
        assert!((zeta(1.0, 0.98, 0.99).unwrap() - 2.0).abs() < 1e-12);
        assert!(zeta(1.0, 0.9, 1.0).is_err());
        assert!(zeta(1.0, 1.1, 0.9).is_err());
    }

    #[test]
    fn box_transform_round_trip() {
        let p = OptimizationProblem::new(1.1, 1e4, false);
        let x = [300.0, 3e-5, 1e-6, 1e-4];
        let back = to_box(&p, &from_box(&p, &x));
        for k in 0..4 {
            assert!((back[k] / x[k] - 1.0).abs() < 1e-10);
        }
        for y in [[-10.0, 0.0, 3.0, 100.0], [1.0; 4]] {
            let (lo, hi) = p.log_bounds();
            let x = to_box(&p, &y);
            for k in 0..4 {
                assert!(x[k].ln() >= lo[k] - 1e-12 && x[k].ln() <= hi[k] + 1e-12);
            }
        }
    }

    #[test]
    fn problem_validation() {
        assert!(OptimizationProblem::new(1.1, 1e4, true).validate().is_ok());
        assert!(OptimizationProblem::new(0.5, 1e4, true).validate().is_err());
        let mut p = OptimizationProblem::new(1.1, 1e4, true);
        p.e3_max = 0.5;
        assert!(p.validate().is_err());
    }
}
