//! Three-qubit state algebra.
//!
//! Basis convention: qubit 1 (cold) is the most significant bit, so the
//! 1-based index of `|q1 q2 q3>` is `4*q1 + 2*q2 + q3 + 1`. Under this
//! ordering `|010>` is index 3 and `|101>` is index 6, and the machine's
//! single coherence lives at element (3, 6).

use nalgebra::{Complex, ComplexField, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FridgeError, Result};
use crate::scalar::{cplx, creal, lit, to_f64, ComplexMatrix, Real, Tolerances};

/// Number of qubits in the refrigerator.
pub const QUBITS: usize = 3;
/// Hilbert-space dimension of the refrigerator.
pub const DIM: usize = 8;

/// A computational basis state `|q1 q2 q3>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    bits: [u8; 3],
}

impl BasisIndex {
    pub fn new(q1: u8, q2: u8, q3: u8) -> Result<Self> {
        if q1 > 1 || q2 > 1 || q3 > 1 {
            return Err(FridgeError::InvalidState(format!(
                "basis bits must be 0 or 1, got ({q1},{q2},{q3})"
            )));
        }
        Ok(Self { bits: [q1, q2, q3] })
    }

    /// Builds from a 1-based index in `1..=8`.
    pub fn from_index(index: usize) -> Result<Self> {
        if !(1..=DIM).contains(&index) {
            return Err(FridgeError::InvalidState(format!(
                "basis index {index} outside 1..=8"
            )));
        }
        let z = index - 1;
        Ok(Self {
            bits: [(z >> 2) as u8 & 1, (z >> 1) as u8 & 1, z as u8 & 1],
        })
    }

    pub fn bits(&self) -> [u8; 3] {
        self.bits
    }

    /// Bit of qubit `label` (1, 2 or 3).
    pub fn bit(&self, label: usize) -> u8 {
        self.bits[label - 1]
    }

    /// 1-based index, as used when quoting matrix elements.
    pub fn index(&self) -> usize {
        self.offset() + 1
    }

    /// 0-based row/column offset into an 8x8 matrix.
    pub fn offset(&self) -> usize {
        4 * self.bits[0] as usize + 2 * self.bits[1] as usize + self.bits[2] as usize
    }
}

/// Bit position of qubit `label` inside a 0-based basis offset.
#[inline]
pub(crate) fn shift_of(label: usize) -> usize {
    QUBITS - label
}

pub(crate) fn check_label(label: usize) -> Result<()> {
    if (1..=QUBITS).contains(&label) {
        Ok(())
    } else {
        Err(FridgeError::InvalidQubit(label))
    }
}

/// Reinserts bit `a` at the position of qubit `label` into a 2-qubit offset.
#[inline]
fn insert_bit(rest: usize, a: usize, label: usize) -> usize {
    let s = shift_of(label);
    let low = rest & ((1 << s) - 1);
    let high = rest >> s;
    (high << (s + 1)) | (a << s) | low
}

/// Removes the bit of qubit `label` from a 3-qubit offset.
#[inline]
fn remove_bit(x: usize, label: usize) -> usize {
    let s = shift_of(label);
    let low = x & ((1 << s) - 1);
    let high = x >> (s + 1);
    (high << s) | low
}

pub(crate) fn ensure_square<T: Real>(m: &ComplexMatrix<T>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(FridgeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Tensor product `a ⊗ b`.
pub fn kron<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kronecker(b)
}

/// Identity of the given dimension.
pub fn identity<T: Real>(dim: usize) -> ComplexMatrix<T> {
    DMatrix::identity(dim, dim)
}

/// Diagonal matrix from real entries.
pub fn diag<T: Real>(entries: &[T]) -> ComplexMatrix<T> {
    let n = entries.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            creal(entries[i])
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Partial trace over qubit `discard` of an arbitrary 8x8 operator.
///
/// The two remaining qubits keep their relative order.
pub fn partial_trace_matrix<T: Real>(
    rho: &ComplexMatrix<T>,
    discard: usize,
) -> Result<ComplexMatrix<T>> {
    check_label(discard)?;
    let n = ensure_square(rho)?;
    if n != DIM {
        return Err(FridgeError::DimensionMismatch {
            expected: DIM,
            got: n,
        });
    }
    Ok(DMatrix::from_fn(4, 4, |r, c| {
        (0..2).fold(creal(T::zero()), |acc, a| {
            acc + rho[(insert_bit(r, a, discard), insert_bit(c, a, discard))]
        })
    }))
}

/// Places the single-qubit operator `tau` on slot `label` and the two-qubit
/// operator `rest` on the remaining slots: the `τ_i ⊗ Tr_i(ρ)` embedding.
pub fn embed_qubit<T: Real>(
    tau: &ComplexMatrix<T>,
    rest: &ComplexMatrix<T>,
    label: usize,
) -> Result<ComplexMatrix<T>> {
    check_label(label)?;
    if tau.shape() != (2, 2) {
        return Err(FridgeError::DimensionMismatch {
            expected: 2,
            got: tau.nrows(),
        });
    }
    if rest.shape() != (4, 4) {
        return Err(FridgeError::DimensionMismatch {
            expected: 4,
            got: rest.nrows(),
        });
    }
    let s = shift_of(label);
    Ok(DMatrix::from_fn(DIM, DIM, |x, y| {
        tau[((x >> s) & 1, (y >> s) & 1)] * rest[(remove_bit(x, label), remove_bit(y, label))]
    }))
}

/// Single-qubit marginal of an arbitrary 8x8 operator.
pub fn reduced_qubit_matrix<T: Real>(
    rho: &ComplexMatrix<T>,
    keep: usize,
) -> Result<ComplexMatrix<T>> {
    check_label(keep)?;
    let n = ensure_square(rho)?;
    if n != DIM {
        return Err(FridgeError::DimensionMismatch {
            expected: DIM,
            got: n,
        });
    }
    let s = shift_of(keep);
    let mut out = DMatrix::zeros(2, 2);
    for x in 0..DIM {
        for y in 0..DIM {
            if remove_bit(x, keep) == remove_bit(y, keep) {
                out[((x >> s) & 1, (y >> s) & 1)] += rho[(x, y)];
            }
        }
    }
    Ok(out)
}

/// Hilbert-Schmidt distance `sqrt(Tr[(a-b)†(a-b)])`.
pub fn frobenius_distance<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<T> {
    if a.shape() != b.shape() {
        return Err(FridgeError::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    Ok((a - b).norm())
}

/// Trace of a square matrix.
pub fn trace<T: Real>(m: &ComplexMatrix<T>) -> Complex<T> {
    m.trace()
}

/// Eigenvalues of a Hermitian matrix (the Hermitian part is used).
pub fn hermitian_eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Vec<T> {
    let h = hermitian_part(m);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// `(m + m†) / 2`.
pub fn hermitian_part<T: Real>(m: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    (m + m.adjoint()).scale(lit(0.5))
}

/// Trace norm `‖m‖₁` of a Hermitian matrix.
pub fn trace_norm<T: Real>(m: &ComplexMatrix<T>) -> T {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(T::zero(), |acc, e| acc + e.abs())
}

/// Largest `|m_jk - conj(m_kj)|`.
pub fn hermiticity_defect<T: Real>(m: &ComplexMatrix<T>) -> T {
    let mut worst = T::zero();
    for j in 0..m.nrows() {
        for k in 0..m.ncols() {
            let d = (m[(j, k)] - m[(k, j)].conjugate()).modulus();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Validated 8x8 density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: ComplexMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity at the default
    /// physical tolerance.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self> {
        Self::with_tolerance(matrix, Tolerances::default().physical)
    }

    pub fn with_tolerance(matrix: ComplexMatrix<T>, tol: T) -> Result<Self> {
        let n = ensure_square(&matrix)?;
        if n != DIM {
            return Err(FridgeError::DimensionMismatch {
                expected: DIM,
                got: n,
            });
        }
        let herm = hermiticity_defect(&matrix);
        if !(herm < tol) {
            return Err(FridgeError::InvalidState(format!(
                "not Hermitian (defect {:.3e})",
                to_f64(herm)
            )));
        }
        let tr = matrix.trace();
        if !((tr - creal(T::one())).modulus() < tol) {
            return Err(FridgeError::InvalidState(format!(
                "trace {:.12} != 1",
                to_f64(tr.re)
            )));
        }
        let min_eig = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b));
        if !(min_eig > -tol) {
            return Err(FridgeError::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {:.3e})",
                to_f64(min_eig)
            )));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller already knows to be a valid state.
    pub(crate) fn from_trusted(matrix: ComplexMatrix<T>) -> Self {
        debug_assert_eq!(matrix.shape(), (DIM, DIM));
        Self { matrix }
    }

    /// Normalized projector onto `psi` (need not be normalized).
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        if psi.len() != DIM {
            return Err(FridgeError::DimensionMismatch {
                expected: DIM,
                got: psi.len(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        let norm2 = v.norm_squared();
        if norm2 <= T::zero() {
            return Err(FridgeError::InvalidState("zero vector".into()));
        }
        let m = (&v * v.adjoint()).unscale(norm2);
        Self::new(m)
    }

    /// The maximally mixed state `I/8`.
    pub fn maximally_mixed() -> Self {
        Self::from_trusted(identity::<T>(DIM).unscale(lit(8.0)))
    }

    /// `|q1 q2 q3><q1 q2 q3|`.
    pub fn basis_projector(b: BasisIndex) -> Self {
        let mut m = DMatrix::zeros(DIM, DIM);
        m[(b.offset(), b.offset())] = creal(T::one());
        Self::from_trusted(m)
    }

    /// Product state `a ⊗ b ⊗ c` of single-qubit density matrices.
    pub fn product(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>, c: &ComplexMatrix<T>) -> Result<Self> {
        for m in [a, b, c] {
            if m.shape() != (2, 2) {
                return Err(FridgeError::DimensionMismatch {
                    expected: 2,
                    got: m.nrows(),
                });
            }
        }
        Self::new(kron(&kron(a, b), c))
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    /// Element at 1-based `(row, col)`.
    pub fn element(&self, row: usize, col: usize) -> Complex<T> {
        self.matrix[(row - 1, col - 1)]
    }

    /// Real diagonal entry at 1-based `index`.
    pub fn population(&self, index: usize) -> T {
        self.matrix[(index - 1, index - 1)].re
    }

    pub fn partial_trace(&self, discard: usize) -> Result<ComplexMatrix<T>> {
        partial_trace_matrix(&self.matrix, discard)
    }

    pub fn reduced_qubit(&self, keep: usize) -> Result<ComplexMatrix<T>> {
        reduced_qubit_matrix(&self.matrix, keep)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        self.matrix.iter().fold(T::zero(), |acc, z| acc + z.modulus_squared())
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Largest off-diagonal magnitude outside the (3,6)/(6,3) pair.
    pub fn x_form_defect(&self) -> T {
        let (a, b) = (2, 5);
        let mut worst = T::zero();
        for j in 0..DIM {
            for k in 0..DIM {
                if j == k || (j, k) == (a, b) || (j, k) == (b, a) {
                    continue;
                }
                let v = self.matrix[(j, k)].modulus();
                if v > worst {
                    worst = v;
                }
            }
        }
        worst
    }

    /// True when the only coherence is at (3,6), within `tol`.
    pub fn is_x_form(&self, tol: T) -> bool {
        self.x_form_defect() < tol
    }
}

/// Random state `A A† / Tr(A A†)` with complex-Gaussian `A` (Ginibre ensemble).
pub fn random_density_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix<T> {
    let a: ComplexMatrix<T> = DMatrix::from_fn(DIM, DIM, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cplx(lit(re), lit(im))
    });
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(hermitian_part(&m.unscale(tr)))
}

/// Random complex matrix with entries uniform in the unit disk's square.
pub fn random_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix<T> {
    DMatrix::from_fn(dim, dim, |_, _| {
        cplx(lit(rng.random_range(-1.0..1.0)), lit(rng.random_range(-1.0..1.0)))
    })
}

/// Column-stacking vectorization `vec(ρ)`; entry `i + n*j` holds `ρ_ij`.
pub fn vectorize<T: Real>(m: &ComplexMatrix<T>) -> nalgebra::DVector<Complex<T>> {
    nalgebra::DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`].
pub fn unvectorize<T: Real>(v: &nalgebra::DVector<Complex<T>>, dim: usize) -> ComplexMatrix<T> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn ghz() -> DensityMatrix<f64> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![c(0.0); 8];
        psi[2] = Complex::new(s, 0.0);
        psi[5] = Complex::new(0.0, s);
        DensityMatrix::pure(&psi).unwrap()
    }

    fn assert_close(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        let d = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < tol, "max deviation {d:e} >= {tol:e}");
    }

    #[test]
    fn basis_index_convention() {
        assert_eq!(BasisIndex::new(0, 1, 0).unwrap().index(), 3);
        assert_eq!(BasisIndex::new(1, 0, 1).unwrap().index(), 6);
        assert_eq!(BasisIndex::new(0, 0, 0).unwrap().index(), 1);
        assert_eq!(BasisIndex::new(1, 1, 1).unwrap().index(), 8);
        for i in 1..=8 {
            assert_eq!(BasisIndex::from_index(i).unwrap().index(), i);
        }
        assert!(BasisIndex::from_index(0).is_err());
        assert!(BasisIndex::new(2, 0, 0).is_err());
    }

    #[test]
    fn kron_identities() {
        let i2 = identity::<f64>(2);
        assert_close(&kron(&i2, &i2), &identity(4), 0.0 + 1e-300);
        let r = 0.3;
        let k = kron(&diag(&[r, 1.0 - r]), &i2);
        let d: Vec<f64> = (0..4).map(|i| k[(i, i)].re).collect();
        assert_eq!(d, vec![r, r, 1.0 - r, 1.0 - r]);
    }

    #[test]
    fn kron_thermal_product_entry() {
        let (r1, r2, r3) = (0.7, 0.6, 0.55);
        let t = kron(
            &kron(&diag(&[r1, 1.0 - r1]), &diag(&[r2, 1.0 - r2])),
            &diag(&[r3, 1.0 - r3]),
        );
        let idx = BasisIndex::new(0, 1, 0).unwrap().offset();
        assert!((t[(idx, idx)].re - r1 * (1.0 - r2) * r3).abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = diag(&[0.7, 0.3]);
        let b = diag(&[0.6, 0.4]);
        let cc = diag(&[0.9, 0.1]);
        let rho = DensityMatrix::product(&a, &b, &cc).unwrap();
        assert_close(&rho.partial_trace(1).unwrap(), &kron(&b, &cc), 1e-15);
        assert_close(&rho.partial_trace(2).unwrap(), &kron(&a, &cc), 1e-15);
        assert_close(&rho.partial_trace(3).unwrap(), &kron(&a, &b), 1e-15);
        assert_close(&rho.reduced_qubit(1).unwrap(), &a, 1e-15);
        assert_close(&rho.reduced_qubit(2).unwrap(), &b, 1e-15);
        assert_close(&rho.reduced_qubit(3).unwrap(), &cc, 1e-15);
    }

    #[test]
    fn partial_trace_of_ghz() {
        let g = ghz();
        // (|10><10| + |01><01|)/2 on qubits (2,3)
        let expected = diag(&[0.0, 0.5, 0.5, 0.0]);
        assert_close(&g.partial_trace(1).unwrap(), &expected, 1e-15);
        for q in 1..=3 {
            assert_close(&g.reduced_qubit(q).unwrap(), &diag(&[0.5, 0.5]), 1e-15);
        }
    }

    #[test]
    fn invalid_labels() {
        let rho = DensityMatrix::<f64>::maximally_mixed();
        assert_eq!(rho.partial_trace(0), Err(FridgeError::InvalidQubit(0)));
        assert_eq!(rho.reduced_qubit(4), Err(FridgeError::InvalidQubit(4)));
        assert!(embed_qubit(&identity::<f64>(2), &identity(4), 5).is_err());
    }

    #[test]
    fn embed_inverts_partial_trace_on_products() {
        let a = diag(&[0.7, 0.3]);
        let b = diag(&[0.6, 0.4]);
        let cc = diag(&[0.9, 0.1]);
        let rho = DensityMatrix::product(&a, &b, &cc).unwrap();
        for (label, tau) in [(1, &a), (2, &b), (3, &cc)] {
            let rest = rho.partial_trace(label).unwrap();
            assert_close(&embed_qubit(tau, &rest, label).unwrap(), rho.matrix(), 1e-15);
        }
    }

    #[test]
    fn frobenius_examples() {
        let rho = DensityMatrix::<f64>::basis_projector(BasisIndex::new(0, 0, 0).unwrap());
        let mm = DensityMatrix::<f64>::maximally_mixed();
        assert_eq!(frobenius_distance(rho.matrix(), rho.matrix()).unwrap(), 0.0);
        let d = frobenius_distance(rho.matrix(), mm.matrix()).unwrap();
        assert!((d - (7.0f64 / 8.0).sqrt()).abs() < 1e-15);
        assert!(frobenius_distance(rho.matrix(), &identity(4)).is_err());
    }

    #[test]
    fn validation_rejects_bad_states() {
        let mut m = identity::<f64>(8).unscale(8.0);
        m[(0, 1)] = c(0.01);
        assert!(matches!(DensityMatrix::new(m), Err(FridgeError::InvalidState(_))));
        assert!(DensityMatrix::new(identity::<f64>(8)).is_err());
        let neg = diag(&[1.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(identity::<f64>(4).unscale(4.0)).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let rho: DensityMatrix<f64> = random_density_matrix(&mut rng);
            DensityMatrix::new(rho.matrix().clone()).unwrap();
        }
    }

    #[test]
    fn purity_identity_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mm = DensityMatrix::<f64>::maximally_mixed();
        for _ in 0..100 {
            let rho: DensityMatrix<f64> = random_density_matrix(&mut rng);
            let d = frobenius_distance(rho.matrix(), mm.matrix()).unwrap();
            assert!((d * d - (rho.purity() - 0.125)).abs() < 1e-12);
        }
    }

    #[test]
    fn vectorization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m: ComplexMatrix<f64> = random_matrix(&mut rng, 8);
        let v = vectorize(&m);
        assert_eq!(v[1 + 8 * 2], m[(1, 2)]);
        assert_eq!(unvectorize(&v, 8), m);
    }

    #[test]
    fn works_in_single_precision() {
        let rho = DensityMatrix::<f32>::maximally_mixed();
        assert!((rho.purity() - 0.125).abs() < 1e-6);
        let r = rho.reduced_qubit(2).unwrap();
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn kron_is_associative(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let norm = |m: ComplexMatrix<f64>| { let n = m.norm(); m.unscale(n) };
                let a = norm(random_matrix::<f64, _>(&mut rng, 2));
                let b = norm(random_matrix::<f64, _>(&mut rng, 2));
                let cc = norm(random_matrix::<f64, _>(&mut rng, 2));
                let lhs = kron(&kron(&a, &b), &cc);
                let rhs = kron(&a, &kron(&b, &cc));
                let d = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(d < 1e-14);
            }

            #[test]
            fn double_partial_trace_matches_marginal(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rho: DensityMatrix<f64> = random_density_matrix(&mut rng);
                // discard qubit 3 then qubit 2 (of the remaining pair) -> qubit 1
                let pair = rho.partial_trace(3).unwrap();
                let one = DMatrix::from_fn(2, 2, |r, cc| pair[(2 * r, 2 * cc)] + pair[(2 * r + 1, 2 * cc + 1)]);
                let direct = rho.reduced_qubit(1).unwrap();
                let d = (one - direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(d < 1e-12);
                // trace and Hermiticity survive every partial trace
                for q in 1..=3 {
                    let pt = rho.partial_trace(q).unwrap();
                    prop_assert!((pt.trace().re - 1.0).abs() < 1e-12);
                    prop_assert!(hermiticity_defect(&pt) < 1e-12);
                }
            }
        }
    }
}
