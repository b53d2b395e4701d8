//! Nonlinear witnesses for the `|010> <-> |101>` coherence.
//!
//! For a state whose only coherence is `ρ_{3,6}`, entanglement across a
//! bipartition is decided by comparing `|ρ_{3,6}|` with the geometric mean
//! of the two populations reached by flipping one side of the cut:
//!
//! | witness | cut    | flipped qubit | populations |
//! |---------|--------|---------------|-------------|
//! | `W1`    | R\|CH  | 2 (room)      | (1, 8)      |
//! | `W2`    | C\|RH  | 1 (cold)      | (2, 7)      |
//! | `W3`    | CR\|H  | 3 (hot)       | (4, 5)      |
//!
//! `W_S = 2(|ρ_{3,6}| - Σ_{k∈S} √(ρ_aa ρ_bb))`; a positive value is the
//! concurrence of the cut (or the genuine multipartite concurrence for
//! `S = {1,2,3}`).

use nalgebra::{ComplexField, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{FridgeError, Result};
use crate::model::{PAIR_A, PAIR_B};
use crate::scalar::{cplx, creal, lit, to_f64, ComplexMatrix, Real};
use crate::state::{
    self, frobenius_distance, shift_of, trace_norm, DensityMatrix, DIM,
};

/// Purity below which a Carnot-point state has a fully separable ball around it.
pub const PURITY_BALL: f64 = 19.0 / 24.0;
/// Frobenius radius of the fully separable ball around `I/8` for three qubits.
pub fn gurvits_radius() -> f64 {
    (2.0f64 / 3.0).sqrt()
}

/// Nonempty subset of the witness labels `{1, 2, 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WitnessSet(u8);

impl WitnessSet {
    /// R|CH.
    pub const ONE: Self = Self(0b001);
    /// C|RH.
    pub const TWO: Self = Self(0b010);
    /// CR|H.
    pub const THREE: Self = Self(0b100);
    /// Genuine multipartite.
    pub const ALL: Self = Self(0b111);

    pub fn new(labels: &[usize]) -> Result<Self> {
        let mut bits = 0u8;
        for &k in labels {
            if !(1..=3).contains(&k) {
                return Err(FridgeError::InvalidQubit(k));
            }
            bits |= 1 << (k - 1);
        }
        if bits == 0 {
            return Err(FridgeError::InvalidParams("witness set must be nonempty".into()));
        }
        Ok(Self(bits))
    }

    pub fn contains(&self, label: usize) -> bool {
        (1..=3).contains(&label) && self.0 & (1 << (label - 1)) != 0
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=3).filter(move |&k| self.contains(k))
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.0 & !other.0 == 0
    }
}

/// Qubit flipped by witness `label`.
fn flipped_qubit(label: usize) -> usize {
    match label {
        1 => 2,
        2 => 1,
        _ => 3,
    }
}

/// 0-based population pair compared against the coherence by witness `label`.
pub fn witness_pair(label: usize) -> (usize, usize) {
    let s = shift_of(flipped_qubit(label));
    let a = PAIR_A ^ (1 << s);
    (a, a ^ (DIM - 1))
}

fn witness_from_parts<T: Real>(populations: &[T; 8], coherence: T, set: WitnessSet) -> T {
    let sub = set.labels().fold(T::zero(), |acc, k| {
        let (a, b) = witness_pair(k);
        acc + (populations[a].max(T::zero()) * populations[b].max(T::zero())).sqrt()
    });
    lit::<T>(2.0) * (coherence - sub)
}

fn diagonal<T: Real>(rho: &DensityMatrix<T>) -> [T; 8] {
    std::array::from_fn(|k| rho.matrix()[(k, k)].re)
}

/// `W_S(ρ)`.
pub fn witness_value<T: Real>(rho: &DensityMatrix<T>, set: WitnessSet) -> T {
    let coh = rho.matrix()[(PAIR_A, PAIR_B)].modulus();
    witness_from_parts(&diagonal(rho), coh, set)
}

/// All witness values and the concurrences they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport<T> {
    /// `[W1, W2, W3, W123]`.
    pub witnesses: [T; 4],
    pub c_c_rh: T,
    pub c_r_ch: T,
    pub c_cr_h: T,
    pub c_gme: T,
    /// False when other coherences are present; values are then lower bounds.
    pub x_form: bool,
}

impl<T: Real> EntanglementReport<T> {
    pub fn from_parts(populations: &[T; 8], coherence: T, x_form: bool) -> Self {
        let w = [
            WitnessSet::ONE,
            WitnessSet::TWO,
            WitnessSet::THREE,
            WitnessSet::ALL,
        ]
        .map(|s| witness_from_parts(populations, coherence, s));
        let pos = |x: T| x.max(T::zero());
        Self {
            witnesses: w,
            c_r_ch: pos(w[0]),
            c_c_rh: pos(w[1]),
            c_cr_h: pos(w[2]),
            c_gme: pos(w[3]),
            x_form,
        }
    }

    /// Largest of the three bipartite concurrences.
    pub fn max_bipartite(&self) -> T {
        self.c_c_rh.max(self.c_r_ch).max(self.c_cr_h)
    }

    /// Largest of `W1, W2, W3`.
    pub fn worst_bipartite_witness(&self) -> T {
        self.witnesses[0].max(self.witnesses[1]).max(self.witnesses[2])
    }

    /// True when `W1, W2, W3 <= tol`.
    pub fn biseparable_all(&self, tol: T) -> bool {
        self.worst_bipartite_witness() <= tol
    }
}

/// Evaluates the full witness family.
pub fn entanglement_report<T: Real>(rho: &DensityMatrix<T>) -> EntanglementReport<T> {
    let coh = rho.matrix()[(PAIR_A, PAIR_B)].modulus();
    EntanglementReport::from_parts(&diagonal(rho), coh, rho.is_x_form(lit(1e-10)))
}

/// `(|010> + i|101>)/√2`.
pub fn ghz_state<T: Real>() -> DensityMatrix<T> {
    let mut m = DMatrix::zeros(DIM, DIM);
    let half = lit::<T>(0.5);
    m[(PAIR_A, PAIR_A)] = creal(half);
    m[(PAIR_B, PAIR_B)] = creal(half);
    m[(PAIR_A, PAIR_B)] = cplx(T::zero(), -half);
    m[(PAIR_B, PAIR_A)] = cplx(T::zero(), half);
    DensityMatrix::new(m).expect("GHZ projector is a state")
}

/// `p |GHZ><GHZ| + (1-p) I/8`.
pub fn ghz_noise_state<T: Real>(p: T) -> Result<DensityMatrix<T>> {
    if !(p >= T::zero() && p <= T::one()) {
        return Err(FridgeError::InvalidParams(format!(
            "mixing weight {} outside [0, 1]",
            to_f64(p)
        )));
    }
    let g = ghz_state::<T>().into_matrix();
    let mm = DensityMatrix::<T>::maximally_mixed().into_matrix();
    Ok(DensityMatrix::from_trusted(g * creal(p) + mm * creal(T::one() - p)))
}

/// `ρ = w |GHZ'><GHZ'| + (1-w) σ_diag`, with `|GHZ'>` phase-matched to `ρ_{3,6}`.
#[derive(Debug, Clone)]
pub struct GhzDecomposition<T: Real> {
    pub weight: T,
    pub sigma_diag: ComplexMatrix<T>,
    /// `σ_diag` is diagonal and positive to `1e-10`.
    pub valid: bool,
}

pub fn ghz_decomposition<T: Real>(rho: &DensityMatrix<T>) -> Result<GhzDecomposition<T>> {
    let coh = rho.matrix()[(PAIR_A, PAIR_B)];
    let weight = lit::<T>(2.0) * coh.modulus();
    if weight >= T::one() {
        return Err(FridgeError::NoDecomposition(to_f64(weight)));
    }
    let mut projector = DMatrix::zeros(DIM, DIM);
    let half = lit::<T>(0.5);
    projector[(PAIR_A, PAIR_A)] = creal(half);
    projector[(PAIR_B, PAIR_B)] = creal(half);
    let phase = if coh.modulus() > T::zero() {
        coh / creal(coh.modulus())
    } else {
        cplx(T::zero(), -T::one())
    };
    projector[(PAIR_A, PAIR_B)] = phase * creal(half);
    projector[(PAIR_B, PAIR_A)] = phase.conjugate() * creal(half);
    let sigma_diag =
        (rho.matrix() - projector * creal(weight)).unscale(T::one() - weight);
    let tol = lit::<T>(1e-10);
    let mut valid = true;
    for j in 0..DIM {
        for k in 0..DIM {
            let z = sigma_diag[(j, k)];
            if j == k {
                valid &= z.re > -tol && z.im.abs() < tol;
            } else {
                valid &= z.modulus() < tol;
            }
        }
    }
    Ok(GhzDecomposition {
        weight,
        sigma_diag,
        valid,
    })
}

/// Purity and ball tests for full separability, plus the biseparability check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparabilityCertificate<T> {
    pub purity: T,
    /// `Tr ρ² < 19/24`.
    pub purity_ball: bool,
    pub frobenius_to_maximally_mixed: T,
    /// `‖ρ - I/8‖₂ < √(2/3)`.
    pub gurvits_ball: bool,
    /// `W1, W2, W3 <= 1e-12`.
    pub biseparable_all: bool,
}

pub fn separability_certificate<T: Real>(rho: &DensityMatrix<T>) -> SeparabilityCertificate<T> {
    let purity = rho.purity();
    let mm = DensityMatrix::<T>::maximally_mixed();
    let frob = frobenius_distance(rho.matrix(), mm.matrix()).expect("both 8x8");
    let report = entanglement_report(rho);
    SeparabilityCertificate {
        purity,
        purity_ball: purity < lit(PURITY_BALL),
        frobenius_to_maximally_mixed: frob,
        gurvits_ball: frob < lit(gurvits_radius()),
        biseparable_all: report.biseparable_all(lit(1e-12)),
    }
}

/// Thresholds for the GHZ-noise family `ρ(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GhzNoiseThresholds {
    /// Zero of `W2(ρ(p))`; by symmetry also of `W1` and `W3`.
    pub bipartite_witness_zero: f64,
    /// Zero of `W123(ρ(p))`.
    pub gme_witness_zero: f64,
    /// Full-separability bound quoted from the literature for this family.
    pub quoted_separable_bound: f64,
}

impl GhzNoiseThresholds {
    /// The bipartite witness certifies entanglement below the quoted
    /// separability bound, so at least one of the two cannot hold as stated.
    pub fn in_tension(&self) -> bool {
        self.bipartite_witness_zero < self.quoted_separable_bound
    }

    pub fn describe(&self) -> String {
        format!(
            "W2(rho(p)) > 0 for p > {:.12}, yet rho(p) is quoted as fully separable for p <= {:.12}; \
             the window ({:.6}, {:.6}] is contested",
            self.bipartite_witness_zero,
            self.quoted_separable_bound,
            self.bipartite_witness_zero,
            self.quoted_separable_bound
        )
    }
}

/// Locates `p` where `W_S(ρ(p))` changes sign, by bisection on `[0, 1]`.
pub fn ghz_noise_witness_zero(set: WitnessSet) -> f64 {
    let w = |p: f64| witness_value(&ghz_noise_state(p).expect("p in [0,1]"), set);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    debug_assert!(w(lo) < 0.0 && w(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if w(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn ghz_noise_thresholds() -> GhzNoiseThresholds {
    GhzNoiseThresholds {
        bipartite_witness_zero: ghz_noise_witness_zero(WitnessSet::TWO),
        gme_witness_zero: ghz_noise_witness_zero(WitnessSet::ALL),
        quoted_separable_bound: 3.0 / 11.0,
    }
}

/// Outcome of sampling X-form perturbations around a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallProbe<T> {
    pub all_biseparable: bool,
    /// Largest of `W1, W2, W3` over all samples; `<= 0` means every sample
    /// was biseparable.
    pub worst_witness: T,
    /// Largest trace distance actually sampled.
    pub max_distance: T,
    pub trials: usize,
}

const PROBE_RETRIES: usize = 100;

/// Samples `trials` X-form states within trace distance `epsilon` of `rho`
/// and checks `W1, W2, W3 <= 0` on each.
///
/// Perturbations combine a random `(3,6)` coherence with traceless diagonal
/// jitter; samples are clipped back to positive semidefinite and
/// renormalized. A sample whose projection lands outside the ball is
/// redrawn.
pub fn biseparable_ball_probe<T: Real>(
    rho: &DensityMatrix<T>,
    epsilon: T,
    trials: usize,
    seed: u64,
) -> Result<BallProbe<T>> {
    if !rho.is_x_form(lit(1e-12)) {
        return Err(FridgeError::InvalidState(
            "ball probe needs an X-form centre".into(),
        ));
    }
    if rho.eigenvalues().into_iter().any(|e| e <= T::zero()) {
        return Err(FridgeError::InvalidState("ball probe needs a full-rank centre".into()));
    }
    if epsilon < T::zero() {
        return Err(FridgeError::ProbeRadius("negative radius".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = entanglement_report(rho).worst_bipartite_witness();
    let mut max_distance = T::zero();
    let slack = epsilon * lit(1e-12);
    for _ in 0..trials {
        let mut accepted = None;
        for _ in 0..PROBE_RETRIES {
            let sample = perturb(rho, epsilon, &mut rng);
            let d = trace_norm(&(sample.matrix() - rho.matrix()));
            if d <= epsilon + slack {
                accepted = Some((sample, d));
                break;
            }
        }
        let (sample, d) = accepted.ok_or_else(|| {
            FridgeError::ProbeRadius(format!(
                "positivity projection leaves the ball at epsilon = {}",
                to_f64(epsilon)
            ))
        })?;
        max_distance = max_distance.max(d);
        worst = worst.max(entanglement_report(&sample).worst_bipartite_witness());
    }
    Ok(BallProbe {
        all_biseparable: worst <= T::zero(),
        worst_witness: worst,
        max_distance,
        trials,
    })
}

fn perturb<T: Real, R: Rng>(rho: &DensityMatrix<T>, epsilon: T, rng: &mut R) -> DensityMatrix<T> {
    if epsilon == T::zero() {
        return rho.clone();
    }
    let mut delta: ComplexMatrix<T> = DMatrix::zeros(DIM, DIM);
    let jitter: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
    let mean = jitter.iter().sum::<f64>() / DIM as f64;
    for (k, j) in jitter.iter().enumerate() {
        delta[(k, k)] = creal(lit(j - mean));
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let c = cplx(lit::<T>(re), lit::<T>(im));
    delta[(PAIR_A, PAIR_B)] = c;
    delta[(PAIR_B, PAIR_A)] = c.conjugate();
    let radius = epsilon * lit(rng.random_range(0.0..=1.0));
    let scale = radius / trace_norm(&delta);
    let candidate = rho.matrix() + delta * creal(scale);
    DensityMatrix::from_trusted(project_psd(&candidate))
}

/// Clips negative eigenvalues to zero and renormalizes the trace.
pub fn project_psd<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    let h = state::hermitian_part(m);
    let eig = h.clone().symmetric_eigen();
    if eig.eigenvalues.iter().all(|&e| e >= T::zero()) {
        return h;
    }
    let clipped = eig.eigenvalues.map(|e| e.max(T::zero()));
    let total = clipped.iter().fold(T::zero(), |a, &b| a + b);
    let d = DMatrix::from_diagonal(&clipped.map(|e| creal(e / total)));
    let v = &eig.eigenvectors;
    state::hermitian_part(&(v * d * v.adjoint()))
}

/// Bisects on the probe radius and returns the largest `ε` for which every
/// sampled perturbation stayed biseparable.
pub fn biseparable_radius<T: Real>(
    rho: &DensityMatrix<T>,
    trials: usize,
    seed: u64,
    iterations: usize,
) -> Result<T> {
    let ok = |eps: T| -> Result<bool> {
        match biseparable_ball_probe(rho, eps, trials, seed) {
            Ok(p) => Ok(p.all_biseparable),
            Err(FridgeError::ProbeRadius(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if !ok(T::zero())? {
        return Ok(T::zero());
    }
    let (mut lo, mut hi) = (T::zero(), lit::<T>(2.0));
    if ok(hi)? {
        return Ok(hi);
    }
    for _ in 0..iterations {
        let mid = (lo + hi) * lit(0.5);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
