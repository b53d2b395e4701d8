//! The three-qubit absorption refrigerator under the reset master equation
//!
//! ```text
//! dρ/dt = -i[H0 + Hint, ρ] + Σ_i p_i (τ_i ⊗ Tr_i ρ - ρ)
//! ```
//!
//! with `H0 = E1 Π1 + (E1+E3) Π2 + E3 Π3` and `Hint = g(|010><101| + h.c.)`.
//! Qubit 1 is the object being cooled (bath `TC`), qubit 2 the room qubit
//! (bath `TR`) and qubit 3 the hot qubit (bath `TH`). Units have `k_B = ħ = 1`.

use nalgebra::{Complex, ComplexField, DMatrix, DVector, SMatrix, SVector, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{FridgeError, Result};
use crate::scalar::{cplx, creal, lit, to_f64, ComplexMatrix, Real, Tolerances};
use crate::state::{
    self, embed_qubit, partial_trace_matrix, shift_of, unvectorize, vectorize, DensityMatrix,
    DIM,
};

/// 0-based offsets of the degenerate pair `|010>` and `|101>`.
pub(crate) const PAIR_A: usize = 2;
pub(crate) const PAIR_B: usize = 5;

/// Ratio between the two smallest singular values required for a unique kernel.
pub const KERNEL_RATIO_THRESHOLD: f64 = 100.0;
/// Default cap on `g/min(E)` and `max(p)/min(E)` for the weak-coupling flag.
pub const WEAK_COUPLING_THRESHOLD: f64 = 1e-2;

/// Physical configuration of the refrigerator.
///
/// `E2 = E1 + E3` is derived and never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FridgeParams<T> {
    #[serde(rename = "E1")]
    pub e1: T,
    #[serde(rename = "E3")]
    pub e3: T,
    pub g: T,
    /// Reset rates `[p1, p2, p3]`.
    pub p: [T; 3],
    /// Bath temperatures `[TC, TR, TH]`.
    #[serde(rename = "T")]
    pub temps: [T; 3],
}

/// Weak-coupling diagnostics; recorded, never enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCoupling<T> {
    pub g_ratio: T,
    pub p_ratio: T,
    pub within: bool,
}

impl<T: Real> FridgeParams<T> {
    pub fn new(e1: T, e3: T, g: T, p: [T; 3], temps: [T; 3]) -> Self {
        Self { e1, e3, g, p, temps }
    }

    pub fn e2(&self) -> T {
        self.e1 + self.e3
    }

    /// `[E1, E2, E3]`.
    pub fn energies(&self) -> [T; 3] {
        [self.e1, self.e2(), self.e3]
    }

    pub fn tc(&self) -> T {
        self.temps[0]
    }
    pub fn tr(&self) -> T {
        self.temps[1]
    }
    pub fn th(&self) -> T {
        self.temps[2]
    }

    /// Checks positivity, bath ordering and `E1 != E3`.
    ///
    /// `g = 0` is accepted: it is the uncoupled limit used as a reference.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(FridgeError::InvalidParams(what.to_string()));
        let finite = |x: T| x.is_finite();
        let all = [
            self.e1,
            self.e3,
            self.g,
            self.p[0],
            self.p[1],
            self.p[2],
            self.temps[0],
            self.temps[1],
            self.temps[2],
        ];
        if !all.iter().all(|&x| finite(x)) {
            return bad("all parameters must be finite");
        }
        if !(self.e1 > T::zero() && self.e3 > T::zero()) {
            return bad("energies must be strictly positive");
        }
        if self.g < T::zero() {
            return bad("coupling g must be nonnegative");
        }
        if !self.p.iter().all(|&p| p > T::zero()) {
            return bad("reset rates must be strictly positive");
        }
        if !self.temps.iter().all(|&t| t > T::zero()) {
            return bad("temperatures must be strictly positive");
        }
        if !(self.tc() < self.tr() && self.tr() < self.th()) {
            return bad("bath temperatures must satisfy TC < TR < TH");
        }
        if self.e1 == self.e3 {
            return bad("E1 and E3 must differ");
        }
        Ok(())
    }

    pub fn weak_coupling(&self, threshold: T) -> WeakCoupling<T> {
        let emin = self.e1.min(self.e3);
        let pmax = self.p[0].max(self.p[1]).max(self.p[2]);
        let g_ratio = self.g / emin;
        let p_ratio = pmax / emin;
        WeakCoupling {
            g_ratio,
            p_ratio,
            within: g_ratio <= threshold && p_ratio <= threshold,
        }
    }

    /// Ground-state populations `r_i` of the three bath thermal states.
    pub fn thermal_ground_populations(&self) -> [T; 3] {
        let e = self.energies();
        [0, 1, 2].map(|i| ground_population(e[i], self.temps[i]))
    }

    /// Bath thermal state of qubit `label`.
    pub fn bath_state(&self, label: usize) -> Result<ComplexMatrix<T>> {
        state::check_label(label)?;
        thermal_qubit(self.energies()[label - 1], self.temps[label - 1])
    }

    /// `τ1 ⊗ τ2 ⊗ τ3`.
    pub fn product_thermal_state(&self) -> Result<DensityMatrix<T>> {
        DensityMatrix::product(
            &self.bath_state(1)?,
            &self.bath_state(2)?,
            &self.bath_state(3)?,
        )
    }
}

/// `r = 1 / (1 + exp(-E/T))`.
pub fn ground_population<T: Real>(energy: T, temperature: T) -> T {
    T::one() / (T::one() + (-energy / temperature).exp())
}

/// `1 - r`, computed without cancellation.
pub fn excited_population<T: Real>(energy: T, temperature: T) -> T {
    let x = (-energy / temperature).exp();
    x / (T::one() + x)
}

/// Thermal qubit state `diag(r, 1-r)`.
pub fn thermal_qubit<T: Real>(energy: T, temperature: T) -> Result<ComplexMatrix<T>> {
    if !(energy > T::zero() && temperature > T::zero()) {
        return Err(FridgeError::InvalidParams(format!(
            "thermal state needs E > 0 and T > 0 (got E={}, T={})",
            to_f64(energy),
            to_f64(temperature)
        )));
    }
    Ok(state::diag(&[
        ground_population(energy, temperature),
        excited_population(energy, temperature),
    ]))
}

/// `H0`, diagonal with entry `q1 E1 + q2 E2 + q3 E3` on `|q1 q2 q3>`.
pub fn free_hamiltonian<T: Real>(params: &FridgeParams<T>) -> ComplexMatrix<T> {
    let e = params.energies();
    let d: Vec<T> = (0..DIM)
        .map(|x| {
            (1..=3).fold(T::zero(), |acc, label| {
                if (x >> shift_of(label)) & 1 == 1 {
                    acc + e[label - 1]
                } else {
                    acc
                }
            })
        })
        .collect();
    state::diag(&d)
}

/// `Hint = g(|010><101| + |101><010|)`.
pub fn interaction_hamiltonian<T: Real>(params: &FridgeParams<T>) -> ComplexMatrix<T> {
    let mut h = DMatrix::zeros(DIM, DIM);
    h[(PAIR_A, PAIR_B)] = creal(params.g);
    h[(PAIR_B, PAIR_A)] = creal(params.g);
    h
}

/// Right-hand side of the master equation evaluated directly on a matrix.
pub fn master_rhs<T: Real>(
    rho: &ComplexMatrix<T>,
    params: &FridgeParams<T>,
) -> Result<ComplexMatrix<T>> {
    let h = free_hamiltonian(params) + interaction_hamiltonian(params);
    let minus_i = cplx(T::zero(), -T::one());
    let mut out = (&h * rho - rho * &h) * minus_i;
    for label in 1..=3 {
        let tau = params.bath_state(label)?;
        let reset = embed_qubit(&tau, &partial_trace_matrix(rho, label)?, label)?;
        out += (reset - rho) * creal(params.p[label - 1]);
    }
    Ok(out)
}

/// Master-equation generator acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> Liouvillian<T> {
    /// Assembles the 64x64 superoperator element by element.
    pub fn build(params: &FridgeParams<T>) -> Result<Self> {
        params.validate()?;
        let n = DIM;
        let h = free_hamiltonian(params) + interaction_hamiltonian(params);
        let mut l: ComplexMatrix<T> = DMatrix::zeros(n * n, n * n);
        let minus_i = cplx(T::zero(), -T::one());
        let col = |i: usize, j: usize| i + n * j;

        // -i(H ρ - ρ H): (Hρ)_xy = Σ_k H_xk ρ_ky, (ρH)_xy = Σ_k ρ_xk H_ky
        for x in 0..n {
            for y in 0..n {
                for k in 0..n {
                    if h[(x, k)] != creal(T::zero()) {
                        l[(col(x, y), col(k, y))] += minus_i * h[(x, k)];
                    }
                    if h[(k, y)] != creal(T::zero()) {
                        l[(col(x, y), col(x, k))] -= minus_i * h[(k, y)];
                    }
                }
            }
        }

        // p_i (τ_i ⊗ Tr_i ρ - ρ)
        for label in 1..=3 {
            let p = creal(params.p[label - 1]);
            let tau = params.bath_state(label)?;
            let s = shift_of(label);
            let mask = !(1usize << s);
            for x in 0..n {
                for y in 0..n {
                    let t = tau[((x >> s) & 1, (y >> s) & 1)];
                    for a in 0..2 {
                        let xs = (x & mask) | (a << s);
                        let ys = (y & mask) | (a << s);
                        l[(col(x, y), col(xs, ys))] += p * t;
                    }
                    l[(col(x, y), col(x, y))] -= p;
                }
            }
        }
        Ok(Self { matrix: l })
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// `unvec(L vec(ρ))`.
    pub fn apply(&self, rho: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        unvectorize(&(&self.matrix * vectorize(rho)), DIM)
    }

    /// Eigenvalues, sorted by decreasing real part.
    pub fn eigenvalues(&self) -> Result<Vec<Complex<T>>> {
        let (_, t) = schur(&self.matrix)?;
        let mut ev: Vec<Complex<T>> = (0..t.nrows()).map(|k| t[(k, k)]).collect();
        ev.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap_or(std::cmp::Ordering::Equal));
        Ok(ev)
    }

    /// Right eigenvectors from the complex Schur form.
    ///
    /// The generator is trace preserving, so the eigenvalue nearest zero is
    /// set to exactly zero; its Schur round-off would otherwise drift the
    /// trace as `exp(δ t)`.
    pub fn eigendecomposition(&self) -> Result<Spectral<T>> {
        let mut spectral = Spectral::new(&self.matrix)?;
        let stationary = (0..spectral.values.len())
            .min_by(|&a, &b| {
                spectral.values[a]
                    .modulus()
                    .partial_cmp(&spectral.values[b].modulus())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty spectrum");
        spectral.values[stationary] = creal(T::zero());
        Ok(spectral)
    }
}

fn schur<T: Real>(m: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let eps: T = lit(1e-15);
    nalgebra::Schur::try_new(m.clone(), eps, 100_000)
        .map(|s| s.unpack())
        .ok_or_else(|| FridgeError::Solver("Schur decomposition did not converge".into()))
}

/// Eigendecomposition `L = V Λ V⁻¹` used for closed-form propagation.
#[derive(Debug, Clone)]
pub struct Spectral<T: Real> {
    pub values: Vec<Complex<T>>,
    pub vectors: ComplexMatrix<T>,
    /// `σ_max / σ_min` of the eigenvector matrix.
    pub condition: T,
    lu: nalgebra::LU<Complex<T>, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Largest eigenvector condition number accepted by [`Spectral::new`].
pub const MAX_EIGENBASIS_CONDITION: f64 = 1e12;

impl<T: Real> Spectral<T> {
    pub fn new(m: &ComplexMatrix<T>) -> Result<Self> {
        let (q, t) = schur(m)?;
        let n = t.nrows();
        let tnorm = t.norm();
        let smin = (T::default_epsilon() * tnorm).max(T::default_epsilon() * T::default_epsilon());
        let mut y: ComplexMatrix<T> = DMatrix::zeros(n, n);
        for k in 0..n {
            let lambda = t[(k, k)];
            y[(k, k)] = creal(T::one());
            for j in (0..k).rev() {
                let mut s = creal(T::zero());
                for m in (j + 1)..=k {
                    s += t[(j, m)] * y[(m, k)];
                }
                let mut denom = t[(j, j)] - lambda;
                if denom.modulus() < smin {
                    denom = creal(smin);
                }
                y[(j, k)] = -s / denom;
            }
        }
        let mut vectors = q * y;
        for k in 0..n {
            let nrm = vectors.column(k).norm();
            vectors.column_mut(k).unscale_mut(nrm);
        }
        let sv = vectors.singular_values();
        let (mut smax, mut smin_v) = (T::zero(), T::max_value().unwrap_or_else(T::one));
        for &s in sv.iter() {
            smax = smax.max(s);
            smin_v = smin_v.min(s);
        }
        let condition = if smin_v > T::zero() {
            smax / smin_v
        } else {
            T::max_value().unwrap_or_else(T::one)
        };
        if !(condition < lit(MAX_EIGENBASIS_CONDITION)) {
            return Err(FridgeError::Solver(format!(
                "eigenvector basis is ill-conditioned (condition {:.3e})",
                to_f64(condition)
            )));
        }
        let values = (0..n).map(|k| t[(k, k)]).collect();
        let lu = vectors.clone().lu();
        Ok(Self {
            values,
            vectors,
            condition,
            lu,
        })
    }

    /// `exp(L t) v`.
    pub fn propagate(&self, v: &DVector<Complex<T>>, t: T) -> Result<DVector<Complex<T>>> {
        let coeffs = self
            .lu
            .solve(v)
            .ok_or_else(|| FridgeError::Solver("singular eigenvector basis".into()))?;
        let scaled = DVector::from_fn(coeffs.len(), |k, _| {
            coeffs[k] * (self.values[k] * creal(t)).exp()
        });
        Ok(&self.vectors * scaled)
    }
}

/// Heat flows `(QC, QR, QH)` from each bath into the machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatCurrents<T> {
    #[serde(rename = "QC")]
    pub cold: T,
    #[serde(rename = "QR")]
    pub room: T,
    #[serde(rename = "QH")]
    pub hot: T,
}

impl<T: Real> HeatCurrents<T> {
    pub fn total(&self) -> T {
        self.cold + self.room + self.hot
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.cold, self.room, self.hot]
    }

    /// Coefficient of performance `QC / QH`; undefined when `|QH| <= floor`.
    pub fn efficiency(&self, floor: T) -> Result<T> {
        if self.hot.abs() <= floor {
            return Err(FridgeError::Undefined(
                "efficiency at vanishing hot-bath current".into(),
            ));
        }
        Ok(self.cold / self.hot)
    }
}

/// `Q_i = p_i Tr[H0 (τ_i ⊗ Tr_i ρ - ρ)]`.
pub fn heat_currents<T: Real>(
    rho: &DensityMatrix<T>,
    params: &FridgeParams<T>,
) -> Result<HeatCurrents<T>> {
    let h0 = free_hamiltonian(params);
    let m = rho.matrix();
    let mut q = [T::zero(); 3];
    for label in 1..=3 {
        let tau = params.bath_state(label)?;
        let d = embed_qubit(&tau, &partial_trace_matrix(m, label)?, label)? - m;
        q[label - 1] = params.p[label - 1] * (&h0 * d).trace().re;
    }
    Ok(HeatCurrents {
        cold: q[0],
        room: q[1],
        hot: q[2],
    })
}

/// Carnot coefficient of performance `TC (TH - TR) / (TH (TR - TC))`.
pub fn carnot_cop<T: Real>(tc: T, tr: T, th: T) -> T {
    tc * (th - tr) / (th * (tr - tc))
}

/// Hot-qubit energy at which the product thermal state is stationary:
/// `E2/TR = E1/TC + E3/TH`.
pub fn carnot_e3<T: Real>(e1: T, tc: T, tr: T, th: T) -> Result<T> {
    if !(tc > T::zero() && tc < tr && tr < th) {
        return Err(FridgeError::InvalidParams(
            "carnot point needs 0 < TC < TR < TH".into(),
        ));
    }
    let e3 = e1 * (T::one() / tc - T::one() / tr) / (T::one() / tr - T::one() / th);
    if (e3 - e1).abs() <= lit::<T>(1e-12) * e1 {
        return Err(FridgeError::InvalidParams(
            "carnot E3 coincides with E1; perturb the temperatures".into(),
        ));
    }
    Ok(e3)
}

/// Temperature of qubit 1 read off its reduced populations.
pub fn qubit_temperature<T: Real>(rho: &DensityMatrix<T>, e1: T) -> Result<T> {
    let r = rho.reduced_qubit(1)?;
    if r[(0, 1)].modulus() > lit(1e-8) {
        return Err(FridgeError::UndefinedTemperature(
            "reduced state of qubit 1 is not diagonal".into(),
        ));
    }
    temperature_from_populations(r[(0, 0)].re, r[(1, 1)].re, e1)
}

pub(crate) fn temperature_from_populations<T: Real>(ground: T, excited: T, e1: T) -> Result<T> {
    if !(excited < ground) || excited <= T::zero() {
        return Err(FridgeError::UndefinedTemperature(format!(
            "populations ({}, {}) admit no positive temperature",
            to_f64(ground),
            to_f64(excited)
        )));
    }
    Ok(e1 / (ground / excited).ln())
}

/// Cooling proxy: excess ground population of qubit 1 over its bath value.
/// Positive exactly when qubit 1 is colder than its bath.
pub fn gamma_hat<T: Real>(rho: &DensityMatrix<T>, params: &FridgeParams<T>) -> Result<T> {
    let r = rho.reduced_qubit(1)?;
    Ok(r[(0, 0)].re - params.thermal_ground_populations()[0])
}

/// `TS` within this of `TC` counts as `TS = TC`.
pub const TEMPERATURE_RESOLUTION: f64 = 1e-10;

/// Sign of `TC - TS`, zero within [`TEMPERATURE_RESOLUTION`]. Inverted
/// qubit-1 populations are hotter than any bath.
pub fn cooling_sign<T: Real>(ss: &SteadyState<T>, params: &FridgeParams<T>) -> i8 {
    match ss.ts {
        None => -1,
        Some(ts) => {
            let d = params.tc() - ts;
            if d.abs() <= lit(TEMPERATURE_RESOLUTION) {
                0
            } else if d > T::zero() {
                1
            } else {
                -1
            }
        }
    }
}

/// Sign of `γ̂`, zero within the population shift produced by moving `TS`
/// by [`TEMPERATURE_RESOLUTION`] around `TC`.
pub fn gamma_sign<T: Real>(ss: &SteadyState<T>, params: &FridgeParams<T>) -> i8 {
    let (e, t) = (params.e1, params.tc());
    let slope = ground_population(e, t) * excited_population(e, t) * e / (t * t);
    let tol = slope * lit(TEMPERATURE_RESOLUTION);
    if ss.gamma_hat.abs() <= tol {
        0
    } else if ss.gamma_hat > T::zero() {
        1
    } else {
        -1
    }
}

/// Solved stationary state with its observables.
#[derive(Debug, Clone)]
pub struct SteadyState<T: Real> {
    pub rho: DensityMatrix<T>,
    /// `‖L vec(ρ)‖₂`.
    pub residual: T,
    /// Second-smallest over smallest singular value of `L`.
    pub kernel_ratio: T,
    /// Qubit-1 temperature; `None` when its populations are inverted.
    pub ts: Option<T>,
    pub gamma_hat: T,
    pub heat_currents: HeatCurrents<T>,
    pub efficiency: Option<T>,
}

/// Options for [`steady_state_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<T> {
    pub tolerances: Tolerances<T>,
    /// Correction sweeps applied to the raw singular vector.
    pub refinement_steps: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            refinement_steps: 2,
        }
    }
}

/// Stationary state from the null space of the full Liouvillian.
pub fn steady_state<T: Real>(params: &FridgeParams<T>) -> Result<SteadyState<T>> {
    steady_state_with(params, &SolveOptions::default())
}

pub fn steady_state_with<T: Real>(
    params: &FridgeParams<T>,
    opts: &SolveOptions<T>,
) -> Result<SteadyState<T>> {
    let liou = Liouvillian::build(params)?;
    let (vec_rho, kernel_ratio) = null_vector(liou.matrix(), opts.refinement_steps)?;
    if !(kernel_ratio > lit(KERNEL_RATIO_THRESHOLD)) {
        return Err(FridgeError::DegenerateKernel {
            ratio: to_f64(kernel_ratio),
        });
    }
    let raw = unvectorize(&vec_rho, DIM);
    let tr = raw.trace();
    if tr.modulus() <= T::zero() {
        return Err(FridgeError::Solver("null vector has zero trace".into()));
    }
    let rho = state::hermitian_part(&raw.map(|z| z / tr));
    let rho = DensityMatrix::with_tolerance(rho, opts.tolerances.physical)
        .map_err(|e| FridgeError::Solver(format!("null vector is not a state: {e}")))?;
    let residual = (liou.matrix() * vectorize(rho.matrix())).norm();
    finish(rho, residual, kernel_ratio, params)
}

fn finish<T: Real>(
    rho: DensityMatrix<T>,
    residual: T,
    kernel_ratio: T,
    params: &FridgeParams<T>,
) -> Result<SteadyState<T>> {
    let ts = qubit_temperature(&rho, params.e1).ok();
    let gamma_hat = gamma_hat(&rho, params)?;
    let heat_currents = heat_currents(&rho, params)?;
    // QH carries round-off of order eps * p3 * E3 from the trace
    let floor = T::default_epsilon() * lit(64.0) * params.p[2] * params.e3;
    let efficiency = heat_currents.efficiency(floor).ok();
    Ok(SteadyState {
        rho,
        residual,
        kernel_ratio,
        ts,
        gamma_hat,
        heat_currents,
        efficiency,
    })
}

/// Right-singular vector of the smallest singular value, polished by
/// correction sweeps on the complementary singular subspace.
fn null_vector<T: Real>(
    l: &ComplexMatrix<T>,
    refinement_steps: usize,
) -> Result<(DVector<Complex<T>>, T)> {
    let svd = SVD::try_new(l.clone(), true, true, T::default_epsilon(), 0)
        .ok_or_else(|| FridgeError::Solver("SVD did not converge".into()))?;
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^H");
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap_or(std::cmp::Ordering::Equal));
    let (k0, k1) = (order[0], order[1]);
    let ratio = if s[k0] > T::zero() {
        s[k1] / s[k0]
    } else {
        T::max_value().unwrap_or_else(T::one)
    };
    let mut x: DVector<Complex<T>> = v_t.row(k0).adjoint();
    let v = v_t.adjoint();
    for _ in 0..refinement_steps {
        let r = l * &x;
        let mut c = u.adjoint() * r;
        for k in 0..c.len() {
            c[k] = if k == k0 { creal(T::zero()) } else { c[k] / creal(s[k]) };
        }
        x -= &v * c;
    }
    Ok((x, ratio))
}

/// X-block stationary state: the eight populations and the (3,6) coherence.
///
/// The X-form subspace is invariant under the generator, so the steady
/// state follows from an 8-state rate equation in which the coherent swap
/// acts as a transfer rate `2g²/Σp` between `|010>` and `|101>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XBlockState<T> {
    /// Diagonal of ρ in basis order.
    pub populations: [T; 8],
    /// `ρ_{3,6}`.
    pub coherence: Complex<T>,
}

impl<T: Real> XBlockState<T> {
    pub fn to_density_matrix(&self) -> DensityMatrix<T> {
        let mut m = DMatrix::zeros(DIM, DIM);
        for (k, &p) in self.populations.iter().enumerate() {
            m[(k, k)] = creal(p);
        }
        m[(PAIR_A, PAIR_B)] = self.coherence;
        m[(PAIR_B, PAIR_A)] = self.coherence.conjugate();
        DensityMatrix::from_trusted(m)
    }

    /// Qubit-1 ground and excited populations.
    pub fn cold_populations(&self) -> (T, T) {
        let ground = self.populations[..4].iter().fold(T::zero(), |a, &b| a + b);
        let excited = self.populations[4..].iter().fold(T::zero(), |a, &b| a + b);
        (ground, excited)
    }

    pub fn temperature(&self, e1: T) -> Result<T> {
        let (g, e) = self.cold_populations();
        temperature_from_populations(g, e, e1)
    }
}

/// Solves the X-block rate equation for the stationary state.
pub fn xblock_steady_state<T: Real>(params: &FridgeParams<T>) -> Result<XBlockState<T>> {
    params.validate()?;
    let energies = params.energies();
    let thermal = |label: usize, v: usize| {
        let (e, t) = (energies[label - 1], params.temps[label - 1]);
        if v == 0 {
            ground_population(e, t)
        } else {
            excited_population(e, t)
        }
    };
    let psum = params.p[0] + params.p[1] + params.p[2];
    let mut m = SMatrix::<T, 8, 8>::zeros();
    for x in 0..DIM {
        for label in 1..=3 {
            let s = shift_of(label);
            let p = params.p[label - 1];
            for v in 0..2usize {
                let y = (x & !(1 << s)) | (v << s);
                m[(y, x)] += p * thermal(label, v);
            }
            m[(x, x)] -= p;
        }
    }
    let kappa = lit::<T>(2.0) * params.g * params.g / psum;
    m[(PAIR_A, PAIR_A)] -= kappa;
    m[(PAIR_B, PAIR_A)] += kappa;
    m[(PAIR_B, PAIR_B)] -= kappa;
    m[(PAIR_A, PAIR_B)] += kappa;
    for k in 0..DIM {
        m[(0, k)] = T::one();
    }
    let mut rhs = SVector::<T, 8>::zeros();
    rhs[0] = T::one();
    let pops = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| FridgeError::Solver("singular population balance".into()))?;
    let populations: [T; 8] = std::array::from_fn(|k| pops[k]);
    let coherence = cplx(
        T::zero(),
        params.g * (populations[PAIR_A] - populations[PAIR_B]) / psum,
    );
    Ok(XBlockState {
        populations,
        coherence,
    })
}

/// Stationary state via the X-block solver, with the same observables as
/// [`steady_state`]. The residual is measured against the full generator.
pub fn steady_state_xblock<T: Real>(params: &FridgeParams<T>) -> Result<SteadyState<T>> {
    let x = xblock_steady_state(params)?;
    let rho = x.to_density_matrix();
    DensityMatrix::new(rho.matrix().clone())
        .map_err(|e| FridgeError::Solver(format!("X-block state invalid: {e}")))?;
    let liou = Liouvillian::build(params)?;
    let residual = (liou.matrix() * vectorize(rho.matrix())).norm();
    finish(rho, residual, T::max_value().unwrap_or_else(T::one), params)
}

/// Random valid configuration for sampling tests: `TC ∈ [0.5, 2)`, the
/// temperature and energy ratios log-uniform, `g` and the `p_i` log-uniform
/// in `[1e-6, 1e-4)`.
pub fn random_params<R: rand::Rng + ?Sized>(rng: &mut R) -> FridgeParams<f64> {
    let tc = rng.random_range(0.5..2.0);
    let tr = tc * rng.random_range(1.05..3.0);
    let th = tr * 10f64.powf(rng.random_range(0.1..3.0));
    let e1 = rng.random_range(0.5..5.0);
    let e3 = e1 * 10f64.powf(rng.random_range(0.05..2.0));
    let g = 10f64.powf(rng.random_range(-6.0..-4.0));
    let p = [0; 3].map(|_| 10f64.powf(rng.random_range(-6.0..-4.0)));
    FridgeParams::new(e1, e3, g, p, [tc, tr, th])
}

/// `exp(L t)` applied to `rho0`, via the eigendecomposition of `L`.
pub fn evolve<T: Real>(
    rho0: &DensityMatrix<T>,
    params: &FridgeParams<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    let spectral = Liouvillian::build(params)?.eigendecomposition()?;
    evolve_with(&spectral, rho0, t)
}

/// As [`evolve`] with a precomputed decomposition.
pub fn evolve_with<T: Real>(
    spectral: &Spectral<T>,
    rho0: &DensityMatrix<T>,
    t: T,
) -> Result<DensityMatrix<T>> {
    if t < T::zero() {
        return Err(FridgeError::InvalidParams("evolution time must be >= 0".into()));
    }
    let out = spectral.propagate(&vectorize(rho0.matrix()), t)?;
    // the trace is conserved exactly; drift here is eigenbasis round-off
    let m = unvectorize(&out, DIM);
    let tr = m.trace();
    let m = state::hermitian_part(&m.unscale(tr.re));
    DensityMatrix::new(m).map_err(|e| FridgeError::Solver(format!("propagated state invalid: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table1_row1() -> FridgeParams<f64> {
        FridgeParams::new(2.0, 300.0, 1e-4, [1e-5, 1e-3, 1e-5], [1.0, 1.1, 1e4])
    }

    fn carnot_params(g: f64) -> FridgeParams<f64> {
        let e3 = carnot_e3(1.0, 1.0, 2.0, 4.0).unwrap();
        FridgeParams::new(1.0, e3, g, [1e-5, 1e-4, 1e-4], [1.0, 2.0, 4.0])
    }

    fn max_abs(m: &ComplexMatrix<f64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn free_hamiltonian_entries() {
        let p = FridgeParams::new(1.0, 2.0, 1e-4, [1e-5; 3], [1.0, 2.0, 4.0]);
        let h = free_hamiltonian(&p);
        assert_eq!(h[(0, 0)].re, 0.0);
        assert_eq!(h[(PAIR_A, PAIR_A)], h[(PAIR_B, PAIR_B)]);
        assert_eq!(h[(PAIR_A, PAIR_A)].re, 3.0);
        assert_eq!(h[(7, 7)].re, 6.0);
        let off_diagonal = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .all(|(i, j)| h[(i, j)].norm() == 0.0);
        assert!(off_diagonal);
    }

    #[test]
    fn interaction_hamiltonian_entries() {
        let mut p = table1_row1();
        let h = interaction_hamiltonian(&p);
        assert_eq!(h[(2, 5)].re, 1e-4);
        assert_eq!(h[(5, 2)].re, 1e-4);
        assert_eq!(h.iter().filter(|z| z.norm() > 0.0).count(), 2);
        assert_eq!(state::hermiticity_defect(&h), 0.0);
        p.g = 0.0;
        assert_eq!(max_abs(&interaction_hamiltonian(&p)), 0.0);
    }

    #[test]
    fn thermal_qubit_values() {
        let t = thermal_qubit(1.0, 1e12).unwrap();
        assert!((t[(0, 0)].re - 0.5).abs() < 1e-10);
        let r = thermal_qubit(1.0, 1.0).unwrap()[(0, 0)].re;
        assert!((r - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((r - 0.731059).abs() < 1e-6);
        let mut last = 1.0;
        for k in 1..200 {
            let r = ground_population(1.0, 0.05 * k as f64);
            assert!(r < last);
            last = r;
        }
        assert!(thermal_qubit(0.0, 1.0).is_err());
        assert!(thermal_qubit(1.0, -1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(table1_row1().validate().is_ok());
        let mut p = table1_row1();
        p.e3 = p.e1;
        assert!(p.validate().is_err());
        let mut p = table1_row1();
        p.temps = [1.0, 0.9, 2.0];
        assert!(p.validate().is_err());
        let mut p = table1_row1();
        p.p[1] = 0.0;
        assert!(p.validate().is_err());
        let mut p = table1_row1();
        p.g = -1.0;
        assert!(p.validate().is_err());
        let wc = table1_row1().weak_coupling(1e-2);
        assert!((wc.p_ratio - 5e-4).abs() < 1e-15);
        assert!(wc.within);
        assert!(!table1_row1().weak_coupling(1e-5).within);
    }

    #[test]
    fn liouvillian_matches_direct_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let params = random_params(&mut rng);
            let l = Liouvillian::build(&params).unwrap();
            let rho = state::random_matrix::<f64, _>(&mut rng, 8);
            let d = max_abs(&(l.apply(&rho) - master_rhs(&rho, &params).unwrap()));
            assert!(d < 1e-12, "{d:e}");
        }
    }

    #[test]
    fn liouvillian_is_trace_preserving_and_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = table1_row1();
        let l = Liouvillian::build(&params).unwrap();
        for _ in 0..20 {
            let a: DensityMatrix<f64> = state::random_density_matrix(&mut rng);
            let b: DensityMatrix<f64> = state::random_density_matrix(&mut rng);
            assert!(l.apply(a.matrix()).trace().norm() < 1e-12);
            let (x, y) = (Complex::new(0.3, -1.2), Complex::new(-2.0, 0.5));
            let lhs = l.apply(&(a.matrix() * x + b.matrix() * y));
            let rhs = l.apply(a.matrix()) * x + l.apply(b.matrix()) * y;
            assert!(max_abs(&(lhs - rhs)) < 1e-12);
        }
    }

    #[test]
    fn product_state_is_fixed_point() {
        let mut p = table1_row1();
        p.g = 0.0;
        let l = Liouvillian::build(&p).unwrap();
        let tau = p.product_thermal_state().unwrap();
        assert!(max_abs(&l.apply(tau.matrix())) < 1e-15);

        let c = carnot_params(1e-4);
        let l = Liouvillian::build(&c).unwrap();
        let tau = c.product_thermal_state().unwrap();
        assert!(max_abs(&l.apply(tau.matrix())) < 1e-15);
        for f in [0.99, 1.01] {
            let mut off = c;
            off.e3 *= f;
            let l = Liouvillian::build(&off).unwrap();
            let tau = off.product_thermal_state().unwrap();
            assert!(max_abs(&l.apply(tau.matrix())) > 1e-12);
        }
    }

    #[test]
    fn spectrum_is_dissipative() {
        let l = Liouvillian::build(&table1_row1()).unwrap();
        let ev = l.eigenvalues().unwrap();
        assert!(ev[0].norm() < 1e-10);
        assert!(ev.iter().all(|z| z.re <= 1e-10));
    }

    #[test]
    fn steady_state_uncoupled() {
        let mut p = table1_row1();
        p.g = 0.0;
        let ss = steady_state(&p).unwrap();
        let tau = p.product_thermal_state().unwrap();
        assert!(max_abs(&(ss.rho.matrix() - tau.matrix())) < 1e-10);
        assert!((ss.ts.unwrap() - p.tc()).abs() < 1e-10);
        assert!(ss.gamma_hat.abs() < 1e-10);
        for q in ss.heat_currents.as_array() {
            assert!(q.abs() < 1e-12);
        }
        assert!(ss.efficiency.is_none());
    }

    #[test]
    fn steady_state_at_carnot_point() {
        let c = carnot_params(1e-4);
        let ss = steady_state(&c).unwrap();
        let tau = c.product_thermal_state().unwrap();
        assert!(max_abs(&(ss.rho.matrix() - tau.matrix())) < 1e-10);
        assert!((ss.ts.unwrap() - 1.0).abs() < 1e-10);
        assert!(ss.gamma_hat.abs() < 1e-10);
        for q in ss.heat_currents.as_array() {
            assert!(q.abs() < 1e-12);
        }
    }

    #[test]
    fn steady_state_table1_row1_cools() {
        let p = table1_row1();
        let ss = steady_state(&p).unwrap();
        assert!(ss.residual < 1e-9);
        assert!(ss.kernel_ratio > KERNEL_RATIO_THRESHOLD);
        assert!(ss.rho.is_x_form(1e-10));
        assert!(ss.gamma_hat > 0.0);
        assert!(ss.ts.unwrap() < p.tc());
        let q = ss.heat_currents;
        assert!(q.cold > 0.0 && q.hot > 0.0 && q.room < 0.0);
        assert!(q.total().abs() < 1e-10);
        let r1 = ss.rho.reduced_qubit(1).unwrap();
        assert!(r1[(0, 1)].norm() < 1e-10);
    }

    #[test]
    fn xblock_matches_full_solver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = random_params(&mut rng);
            let full = steady_state(&p).unwrap();
            let fast = xblock_steady_state(&p).unwrap().to_density_matrix();
            assert!(max_abs(&(full.rho.matrix() - fast.matrix())) < 1e-12);
        }
        let p = table1_row1();
        let fast = steady_state_xblock(&p).unwrap();
        assert!(fast.residual < 1e-12);
    }

    #[test]
    fn carnot_e3_formula() {
        let e3 = carnot_e3(1.0, 1.0, 2.0, 4.0).unwrap();
        assert!((e3 - 2.0).abs() < 1e-15);
        assert!((1.0 / e3 - carnot_cop(1.0, 2.0, 4.0)).abs() < 1e-12);
        assert!((carnot_cop(1.0, 2.0, 4.0) - 0.5).abs() < 1e-15);
        // 1/TC - 1/TR = 1/TR - 1/TH gives E3 = E1
        assert!(carnot_e3(1.0, 1.0, 4.0 / 3.0, 2.0).is_err());
        assert!(carnot_e3(1.0, 2.0, 1.0, 4.0).is_err());
    }

    #[test]
    fn qubit_temperature_inverts_thermal_map() {
        let p = FridgeParams::new(1.5, 7.0, 0.0, [1e-5; 3], [0.8, 2.0, 4.0]);
        let rho = p.product_thermal_state().unwrap();
        assert!((qubit_temperature(&rho, 1.5).unwrap() - 0.8).abs() < 1e-10);
        let mm = DensityMatrix::<f64>::maximally_mixed();
        assert!(matches!(
            qubit_temperature(&mm, 1.0),
            Err(FridgeError::UndefinedTemperature(_))
        ));
    }

    #[test]
    fn efficiency_definition() {
        let q = HeatCurrents { cold: 1.0, room: -3.0, hot: 2.0 };
        assert_eq!(q.efficiency(0.0).unwrap(), 0.5);
        let z = HeatCurrents { cold: 0.0, room: 0.0, hot: 0.0 };
        assert!(z.efficiency(0.0).is_err());
    }

    #[test]
    fn cooling_signs_agree_at_fixed_points_and_row1() {
        let row1 = table1_row1();
        let ss = steady_state(&row1).unwrap();
        assert_eq!((cooling_sign(&ss, &row1), gamma_sign(&ss, &row1)), (1, 1));
        for p in [carnot_params(1e-4), carnot_params(0.0)] {
            let ss = steady_state(&p).unwrap();
            assert_eq!((cooling_sign(&ss, &p), gamma_sign(&ss, &p)), (0, 0));
        }
        let mut hot = row1;
        hot.e3 = 0.1;
        let ss = steady_state(&hot).unwrap();
        assert_eq!((cooling_sign(&ss, &hot), gamma_sign(&ss, &hot)), (-1, -1));
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = table1_row1();
        let rho0: DensityMatrix<f64> = state::random_density_matrix(&mut rng);
        let out = evolve(&rho0, &p, 0.0).unwrap();
        assert!(max_abs(&(out.matrix() - rho0.matrix())) < 1e-8);
        assert!(evolve(&rho0, &p, -1.0).is_err());
    }

    #[test]
    fn evolve_preserves_trace_and_relaxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let p = table1_row1();
        let spectral = Liouvillian::build(&p).unwrap().eigendecomposition().unwrap();
        let rho0: DensityMatrix<f64> = state::random_density_matrix(&mut rng);
        for t in [1.0, 1e2, 1e4, 1e5, 1e6] {
            let raw = spectral.propagate(&vectorize(rho0.matrix()), t).unwrap();
            let tr = unvectorize(&raw, DIM).trace();
            assert!((tr.re - 1.0).abs() < 1e-8 && tr.im.abs() < 1e-8);
            let out = evolve_with(&spectral, &rho0, t).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-12);
        }
        let ss = steady_state(&p).unwrap();
        let late = evolve_with(&spectral, &rho0, 50.0 / 1e-5).unwrap();
        assert!(max_abs(&(late.matrix() - ss.rho.matrix())) < 1e-6);
    }
}
