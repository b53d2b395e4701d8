//! Bath-temperature sweeps and the concurrence collapse.

use rayon::prelude::*;
use serde::Serialize;

use super::{optimize, optimize_with_starts, zeta, CoolingResult, OptimizationProblem};
use crate::error::{FridgeError, Result};
use crate::io::{csv_table, sig12};

/// Concurrence below which a cell counts as separable.
pub const ENTANGLEMENT_THRESHOLD: f64 = 1e-6;
/// Tolerance when comparing `ζ` with 1.
pub const ZETA_TOLERANCE: f64 = 1e-6;
/// A cell cools only if `TS* < TC - 1e-12`; the uncoupled machine sits at
/// `TC` up to round-off.
pub const COOLING_MARGIN: f64 = 1e-12;

pub const SWEEP_HEADER: [&str; 10] = [
    "TR",
    "TH",
    "TS",
    "TS_star",
    "zeta",
    "C_C_RH",
    "C_R_CH",
    "C_CR_H",
    "C_GME",
    "feasible_evals",
];

/// Grid and search settings for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Problem data; `tr`, `th`, `e3_max` and `constrained` are set per cell.
    pub template: OptimizationProblem,
    pub tr_values: Vec<f64>,
    pub th_values: Vec<f64>,
    /// `E3` upper bound as a fraction of `TH`.
    pub e3_max_fraction: f64,
    pub budget: usize,
    pub seed: u64,
}

impl SweepConfig {
    /// `TR` and `TH` log-spaced over the given ranges, `res` points each.
    pub fn grid(tr: (f64, f64), th: (f64, f64), res: usize, budget: usize, seed: u64) -> Self {
        Self {
            template: OptimizationProblem::new(tr.0, th.1, false),
            tr_values: logspace(tr.0, tr.1, res),
            th_values: logspace(th.0, th.1, res),
            e3_max_fraction: 0.5,
            budget,
            seed,
        }
    }

    /// The desk-scale advantage map: `TR ∈ [1.01, 5]`, `TH ∈ [10, 1e4]`.
    pub fn fig2(res: usize, budget: usize, seed: u64) -> Self {
        Self::grid((1.01, 5.0), (10.0, 1e4), res, budget, seed)
    }

    /// Fixed-`TH` slices with `TR` log-spaced over `[1.01, 0.8 min TH]`.
    ///
    /// The wide `TR` range lets slices with different `TH` reach the same
    /// concurrences, which is what the collapse compares.
    pub fn slices(th_values: &[f64], res: usize, budget: usize, seed: u64) -> Self {
        let th_min = th_values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut c = Self::fig2(res, budget, seed);
        c.tr_values = logspace(1.01, 0.8 * th_min, res);
        c.th_values = th_values.to_vec();
        c
    }

    fn problem(&self, tr: f64, th: f64, constrained: bool) -> OptimizationProblem {
        let mut p = self.template;
        p.tr = tr;
        p.th = th;
        p.e3_max = self.e3_max_fraction * th;
        p.constrained = constrained;
        p
    }

    fn validate(&self) -> Result<()> {
        if self.tr_values.is_empty() || self.th_values.is_empty() {
            return Err(FridgeError::InvalidParams("sweep grid is empty".into()));
        }
        for &tr in &self.tr_values {
            for &th in &self.th_values {
                self.problem(tr, th, false).validate()?;
            }
        }
        Ok(())
    }
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n)
            .map(|k| {
                if k == 0 {
                    lo
                } else if k + 1 == n {
                    hi
                } else {
                    (lo.ln() + (hi / lo).ln() * k as f64 / (n - 1) as f64).exp()
                }
            })
            .collect(),
    }
}

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "TR")]
    pub tr: f64,
    #[serde(rename = "TH")]
    pub th: f64,
    /// Unconstrained optimum.
    #[serde(rename = "TS")]
    pub ts: f64,
    /// Separable optimum.
    #[serde(rename = "TS_star")]
    pub ts_star: f64,
    /// 1 when the window admits no cooling at all.
    pub zeta: f64,
    #[serde(rename = "C_C_RH")]
    pub c_c_rh: f64,
    #[serde(rename = "C_R_CH")]
    pub c_r_ch: f64,
    #[serde(rename = "C_CR_H")]
    pub c_cr_h: f64,
    #[serde(rename = "C_GME")]
    pub c_gme: f64,
    pub feasible_evals: usize,
    /// False when neither search found `TS < TC`.
    pub cooling: bool,
    pub failures: usize,
    #[serde(skip)]
    pub unconstrained: Option<CoolingResult>,
    #[serde(skip)]
    pub constrained: Option<CoolingResult>,
}

impl SweepRow {
    pub fn max_bipartite(&self) -> f64 {
        self.c_c_rh.max(self.c_r_ch).max(self.c_cr_h)
    }

    pub fn entangled(&self) -> bool {
        self.max_bipartite() > ENTANGLEMENT_THRESHOLD
    }

    fn csv_fields(&self) -> Vec<String> {
        let mut v: Vec<String> = [
            self.tr,
            self.th,
            self.ts,
            self.ts_star,
            self.zeta,
            self.c_c_rh,
            self.c_r_ch,
            self.c_cr_h,
            self.c_gme,
        ]
        .iter()
        .map(|&x| sig12(x))
        .collect();
        v.push(self.feasible_evals.to_string());
        v
    }
}

/// Point where the max bipartite concurrence crosses [`ENTANGLEMENT_THRESHOLD`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    #[serde(rename = "TR")]
    pub tr: f64,
    #[serde(rename = "TH")]
    pub th: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    #[serde(rename = "TR")]
    pub tr: f64,
    #[serde(rename = "TH")]
    pub th: f64,
    pub error: String,
}

/// Sweep output, rows ordered by `TH` then `TR`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub tr_values: Vec<f64>,
    pub th_values: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub failed: Vec<CellFailure>,
    pub boundary: Vec<BoundaryPoint>,
}

impl SweepResult {
    pub fn row(&self, i_tr: usize, j_th: usize) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.tr == self.tr_values[i_tr] && r.th == self.th_values[j_th])
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self.rows.iter().map(SweepRow::csv_fields).collect();
        csv_table(&SWEEP_HEADER, &rows)
    }

    pub fn failure_fraction(&self) -> f64 {
        let total = self.tr_values.len() * self.th_values.len();
        self.failed.len() as f64 / total.max(1) as f64
    }

    pub fn max_zeta(&self) -> f64 {
        self.rows.iter().map(|r| r.zeta).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Seed of cell `(i, j)`, independent of evaluation order.
fn cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    let mut z = seed ^ ((i as u64) << 32 | j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unconstrained and constrained optimum of one cell.
pub fn solve_cell(config: &SweepConfig, i: usize, j: usize) -> Result<SweepRow> {
    let (tr, th) = (config.tr_values[i], config.th_values[j]);
    let seed = cell_seed(config.seed, i, j);
    let free = config.problem(tr, th, false);
    let mut unc = optimize(&free, config.budget, seed)?;
    let x_unc = [
        unc.params.e3,
        unc.params.p[1],
        unc.params.p[2],
        unc.params.g,
    ];
    let con = optimize_with_starts(&free.with_constraint(true), config.budget, seed, &[x_unc])?;
    // a separable point is also a candidate for the free search
    if con.ts < unc.ts {
        let evaluations = unc.evaluations;
        unc = CoolingResult {
            evaluations,
            ..con
        };
    }
    let tc = free.tc;
    let cooling = con.ts < tc - COOLING_MARGIN;
    let z = if cooling { zeta(tc, unc.ts, con.ts)? } else { 1.0 };
    let r = unc.report;
    Ok(SweepRow {
        tr,
        th,
        ts: unc.ts,
        ts_star: con.ts,
        zeta: z,
        c_c_rh: r.c_c_rh,
        c_r_ch: r.c_r_ch,
        c_cr_h: r.c_cr_h,
        c_gme: r.c_gme,
        feasible_evals: con.feasible_evaluations,
        cooling,
        failures: unc.failures + con.failures,
        unconstrained: Some(unc),
        constrained: Some(con),
    })
}

/// Optimizes every cell of the grid; cells run in parallel.
pub fn sweep_fig2(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = (0..config.th_values.len())
        .flat_map(|j| (0..config.tr_values.len()).map(move |i| (i, j)))
        .collect();
    let solved: Vec<Result<SweepRow>> = cells
        .par_iter()
        .map(|&(i, j)| solve_cell(config, i, j))
        .collect();
    let mut rows = Vec::with_capacity(cells.len());
    let mut failed = Vec::new();
    for (&(i, j), r) in cells.iter().zip(solved) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failed.push(CellFailure {
                tr: config.tr_values[i],
                th: config.th_values[j],
                error: e.to_string(),
            }),
        }
    }
    let mut result = SweepResult {
        tr_values: config.tr_values.clone(),
        th_values: config.th_values.clone(),
        rows,
        failed,
        boundary: Vec::new(),
    };
    result.boundary = entanglement_boundary(&result);
    Ok(result)
}

/// Threshold crossings between neighbouring cells, interpolated in log temperature.
pub fn entanglement_boundary(result: &SweepResult) -> Vec<BoundaryPoint> {
    let (nr, nh) = (result.tr_values.len(), result.th_values.len());
    let value = |i: usize, j: usize| result.row(i, j).map(|r| r.max_bipartite() - ENTANGLEMENT_THRESHOLD);
    let lerp = |a: f64, b: f64, fa: f64, fb: f64| {
        let t = fa / (fa - fb);
        (a.ln() + t * (b.ln() - a.ln())).exp()
    };
    let mut out = Vec::new();
    for j in 0..nh {
        for i in 0..nr {
            let Some(f0) = value(i, j) else { continue };
            if i + 1 < nr {
                if let Some(f1) = value(i + 1, j) {
                    if (f0 > 0.0) != (f1 > 0.0) {
                        out.push(BoundaryPoint {
                            tr: lerp(result.tr_values[i], result.tr_values[i + 1], f0, f1),
                            th: result.th_values[j],
                        });
                    }
                }
            }
            if j + 1 < nh {
                if let Some(f1) = value(i, j + 1) {
                    if (f0 > 0.0) != (f1 > 0.0) {
                        out.push(BoundaryPoint {
                            tr: result.tr_values[i],
                            th: lerp(result.th_values[j], result.th_values[j + 1], f0, f1),
                        });
                    }
                }
            }
        }
    }
    out
}

/// A `(C_R|CH, ζ)` point of the collapse plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapsePoint {
    /// `TH` of the slice the point came from.
    pub slice: f64,
    #[serde(rename = "TR")]
    pub tr: f64,
    #[serde(rename = "C_R_CH")]
    pub c_r_ch: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceDiagnostic {
    #[serde(rename = "TH")]
    pub th: f64,
    pub points: usize,
    pub entangled: usize,
    /// Spearman correlation of `ζ` against `C_R|CH`.
    pub rank_correlation: f64,
    /// The slice has no spread in `C`; it passes iff `ζ` is also flat.
    pub degenerate: bool,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinDiagnostic {
    pub c_lo: f64,
    pub c_hi: f64,
    /// Slices contributing points to this bin.
    pub slices: Vec<f64>,
    pub zeta_min: f64,
    pub zeta_max: f64,
    /// `(ζmax - ζmin)/ζmean`.
    pub relative_spread: f64,
    /// Same spread measured on `ζ - 1`.
    pub excess_spread: f64,
}

/// `ζ` against `C_R|CH` across slices, with collapse diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseReport {
    /// Sorted by concurrence.
    pub points: Vec<CollapsePoint>,
    pub slices: Vec<SliceDiagnostic>,
    /// Bins populated by at least two slices.
    pub shared_bins: Vec<BinDiagnostic>,
    pub max_relative_spread: f64,
    /// Largest `|ζ - 1|` among points with `C <= 1e-6`.
    pub separable_zeta_deviation: f64,
}

impl CollapseReport {
    pub fn monotone(&self, min_correlation: f64) -> bool {
        self.slices.iter().all(|s| {
            if s.degenerate {
                s.monotone
            } else {
                s.rank_correlation > min_correlation
            }
        })
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| vec![sig12(p.slice), sig12(p.tr), sig12(p.c_r_ch), sig12(p.zeta)])
            .collect();
        csv_table(&["slice_TH", "TR", "C_R_CH", "zeta"], &rows)
    }
}

pub const COLLAPSE_BINS: usize = 10;

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut k = 0;
    while k < idx.len() {
        let mut m = k;
        while m + 1 < idx.len() && v[idx[m + 1]] == v[idx[k]] {
            m += 1;
        }
        let avg = 0.5 * (k + m) as f64 + 1.0;
        for &i in &idx[k..=m] {
            r[i] = avg;
        }
        k = m + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` if either
/// input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let (a, b) = (rx[k] - mean, ry[k] - mean);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Groups the sweep by `TH` slice and measures how well `ζ(C_R|CH)` collapses.
pub fn curve_fig3(sweep: &SweepResult) -> Result<CollapseReport> {
    let mut slice_values: Vec<f64> = sweep.rows.iter().map(|r| r.th).collect();
    slice_values.sort_by(f64::total_cmp);
    slice_values.dedup();
    if slice_values.len() < 2 {
        return Err(FridgeError::InvalidParams(
            "the collapse needs at least two TH slices".into(),
        ));
    }
    let mut points: Vec<CollapsePoint> = sweep
        .rows
        .iter()
        .map(|r| CollapsePoint {
            slice: r.th,
            tr: r.tr,
            c_r_ch: r.c_r_ch,
            zeta: r.zeta,
        })
        .collect();
    points.sort_by(|a, b| {
        a.c_r_ch
            .total_cmp(&b.c_r_ch)
            .then(a.slice.total_cmp(&b.slice))
            .then(a.tr.total_cmp(&b.tr))
    });

    let slices = slice_values
        .iter()
        .map(|&th| {
            let pts: Vec<&CollapsePoint> = points.iter().filter(|p| p.slice == th).collect();
            let c: Vec<f64> = pts.iter().map(|p| p.c_r_ch).collect();
            let z: Vec<f64> = pts.iter().map(|p| p.zeta).collect();
            let c_flat = c.iter().all(|&v| (v - c[0]).abs() <= ENTANGLEMENT_THRESHOLD);
            let z_flat = z.iter().all(|&v| (v - z[0]).abs() <= ZETA_TOLERANCE);
            let rho = spearman(&c, &z);
            let degenerate = c_flat || rho.is_none();
            SliceDiagnostic {
                th,
                points: pts.len(),
                entangled: c.iter().filter(|&&v| v > ENTANGLEMENT_THRESHOLD).count(),
                rank_correlation: rho.unwrap_or(f64::NAN),
                degenerate,
                monotone: if degenerate { c_flat && z_flat } else { rho.unwrap() > 0.0 },
            }
        })
        .collect();

    let entangled: Vec<&CollapsePoint> =
        points.iter().filter(|p| p.c_r_ch > ENTANGLEMENT_THRESHOLD).collect();
    let mut shared_bins = Vec::new();
    if let Some(c_max) = entangled.iter().map(|p| p.c_r_ch).reduce(f64::max) {
        let width = c_max / COLLAPSE_BINS as f64;
        for b in 0..COLLAPSE_BINS {
            let (lo, hi) = (b as f64 * width, (b + 1) as f64 * width);
            let inside: Vec<&&CollapsePoint> = entangled
                .iter()
                .filter(|p| p.c_r_ch > lo && (p.c_r_ch <= hi || b + 1 == COLLAPSE_BINS))
                .collect();
            let mut from: Vec<f64> = inside.iter().map(|p| p.slice).collect();
            from.sort_by(f64::total_cmp);
            from.dedup();
            if from.len() < 2 {
                continue;
            }
            let zs: Vec<f64> = inside.iter().map(|p| p.zeta).collect();
            let zmin = zs.iter().copied().fold(f64::INFINITY, f64::min);
            let zmax = zs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let zmean = zs.iter().sum::<f64>() / zs.len() as f64;
            let excess_mean = zmean - 1.0;
            shared_bins.push(BinDiagnostic {
                c_lo: lo,
                c_hi: hi,
                slices: from,
                zeta_min: zmin,
                zeta_max: zmax,
                relative_spread: (zmax - zmin) / zmean,
                excess_spread: if excess_mean > 0.0 { (zmax - zmin) / excess_mean } else { f64::NAN },
            });
        }
    }
    let max_relative_spread = shared_bins
        .iter()
        .map(|b| b.relative_spread)
        .fold(0.0, f64::max);
    let separable_zeta_deviation = points
        .iter()
        .filter(|p| p.c_r_ch <= ENTANGLEMENT_THRESHOLD)
        .map(|p| (p.zeta - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CollapseReport {
        points,
        slices,
        shared_bins,
        max_relative_spread,
        separable_zeta_deviation,
    })
}
