//! Tensor-product operator algebra on the composite space.
//!
//! Subsystems are ordered `[cavity, spin_1, ..., spin_N, catalyst]` everywhere in
//! the crate, with the first subsystem the most significant digit of a composite
//! basis index. Two-level systems are ordered ground-first, so `sigma^dagger
//! sigma = diag(0, 1)`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use faer::{c64, Mat, Side};

use crate::error::{Error, Result};

/// Default bound on the composite Hilbert-space dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Ordered list of subsystem dimensions identifying a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSignature {
    dims: Vec<usize>,
}

impl HilbertSignature {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIMENSION_CAP)
    }

    /// Like [`HilbertSignature::new`], with an explicit bound on the total dimension.
    pub fn with_cap(dims: Vec<usize>, cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSignature("no subsystems".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidSignature(format!(
                "subsystem dimension {d} is below 2"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= cap)
            .ok_or_else(|| {
                Error::InvalidSignature(format!(
                    "total dimension of {dims:?} exceeds the cap {cap}"
                ))
            })?;
        debug_assert!(total >= 1);
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Concatenation `self ⊗ other`. The cap is not re-applied here; callers
    /// that build composites go through [`HilbertSignature::with_cap`].
    pub fn concat(&self, other: &HilbertSignature) -> HilbertSignature {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        HilbertSignature { dims }
    }

    /// Composite index of a product basis state given per-subsystem levels.
    pub fn index_of(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                found: levels.len(),
            });
        }
        let mut idx = 0;
        for (&l, &d) in levels.iter().zip(&self.dims) {
            if l >= d {
                return Err(Error::InvalidState(format!(
                    "level {l} out of range for subsystem of dimension {d}"
                )));
            }
            idx = idx * d + l;
        }
        Ok(idx)
    }

    /// Per-subsystem levels of a composite index (inverse of [`index_of`](Self::index_of)).
    pub fn levels_of(&self, mut index: usize) -> Vec<usize> {
        let mut levels = vec![0; self.dims.len()];
        for (slot, &d) in levels.iter_mut().zip(&self.dims).rev() {
            *slot = index % d;
            index /= d;
        }
        levels
    }
}

impl fmt::Display for HilbertSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.dims)
    }
}

/// Dense complex square matrix tagged with the space it acts on.
#[derive(Clone)]
pub struct Operator {
    matrix: Mat<c64>,
    signature: HilbertSignature,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Operator")
            .field("signature", &self.signature)
            .field("matrix", &self.matrix)
            .finish()
    }
}

impl Operator {
    pub fn new(matrix: Mat<c64>, signature: HilbertSignature) -> Result<Self> {
        let d = signature.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if matrix.nrows() != d {
                    matrix.nrows()
                } else {
                    matrix.ncols()
                },
            });
        }
        Ok(Self { matrix, signature })
    }

    /// Operator on a single subsystem of dimension `dim`.
    pub fn local(matrix: Mat<c64>) -> Result<Self> {
        let sig = HilbertSignature::new(vec![matrix.nrows()])?;
        Self::new(matrix, sig)
    }

    pub fn zeros(signature: &HilbertSignature) -> Self {
        let d = signature.total_dim();
        Self {
            matrix: Mat::zeros(d, d),
            signature: signature.clone(),
        }
    }

    pub fn identity(signature: &HilbertSignature) -> Self {
        let d = signature.total_dim();
        Self {
            matrix: Mat::identity(d, d),
            signature: signature.clone(),
        }
    }

    /// Diagonal operator with the given real entries.
    pub fn diagonal(signature: &HilbertSignature, entries: &[f64]) -> Result<Self> {
        let d = signature.total_dim();
        if entries.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: entries.len(),
            });
        }
        let matrix = Mat::from_fn(d, d, |i, j| {
            if i == j {
                c64::new(entries[i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        Ok(Self {
            matrix,
            signature: signature.clone(),
        })
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn signature(&self) -> &HilbertSignature {
        &self.signature
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.matrix[(row, col)]
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            matrix: self.matrix.adjoint().to_owned(),
            signature: self.signature.clone(),
        }
    }

    pub fn transpose(&self) -> Operator {
        Operator {
            matrix: self.matrix.transpose().to_owned(),
            signature: self.signature.clone(),
        }
    }

    pub fn scale(&self, factor: c64) -> Operator {
        Operator {
            matrix: Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * factor),
            signature: self.signature.clone(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Operator {
        self.scale(c64::new(factor, 0.0))
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Operator) -> c64 {
        let d = self.dim();
        let mut acc = c64::new(0.0, 0.0);
        for j in 0..d {
            for i in 0..d {
                acc += self.matrix[(i, j)] * other.matrix[(j, i)];
            }
        }
        acc
    }

    /// `self * other - other * self`
    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// `self * other + other * self`
    pub fn anticommutator(&self, other: &Operator) -> Operator {
        &(self * other) + &(other * self)
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..d {
            for i in 0..d {
                m = m.max(self.matrix[(i, j)].norm());
            }
        }
        m
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (self - other).max_abs()
    }

    /// `max |A - A^dagger|`
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                m = m.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `(A + A^dagger) / 2`
    pub fn hermitian_part(&self) -> Operator {
        let d = self.dim();
        Operator {
            matrix: Mat::from_fn(d, d, |i, j| {
                (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5
            }),
            signature: self.signature.clone(),
        }
    }

    /// Ascending eigenvalues, treating the operator as Hermitian (lower triangle read).
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.matrix
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::SolverFailure {
                reason: format!("Hermitian eigensolver: {e:?}"),
                residuals: vec![],
            })
    }

    /// Ascending eigenvalues and the matching orthonormal eigenvectors (columns).
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, Mat<c64>)> {
        let evd = self
            .matrix
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::SolverFailure {
                reason: format!("Hermitian eigensolver: {e:?}"),
                residuals: vec![],
            })?;
        let vals = (0..self.dim()).map(|i| evd.S()[i].re).collect();
        Ok((vals, evd.U().to_owned()))
    }

    fn check_same_space(&self, other: &Operator) {
        assert_eq!(
            self.dim(),
            other.dim(),
            "operator dimensions differ ({} vs {})",
            self.signature,
            other.signature
        );
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.check_same_space(rhs);
        Operator {
            matrix: &self.matrix * &rhs.matrix,
            signature: self.signature.clone(),
        }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.check_same_space(rhs);
        Operator {
            matrix: &self.matrix + &rhs.matrix,
            signature: self.signature.clone(),
        }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.check_same_space(rhs);
        Operator {
            matrix: &self.matrix - &rhs.matrix,
            signature: self.signature.clone(),
        }
    }
}

/// Normalized pure state on a composite space.
#[derive(Debug, Clone)]
pub struct StateVector {
    amplitudes: Vec<c64>,
    signature: HilbertSignature,
}

impl StateVector {
    /// Builds a state from raw amplitudes, normalizing them.
    pub fn new(amplitudes: Vec<c64>, signature: HilbertSignature) -> Result<Self> {
        if amplitudes.len() != signature.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: signature.total_dim(),
                found: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            amplitudes,
            signature,
        })
    }

    /// Product basis state with the given per-subsystem levels.
    pub fn basis(signature: &HilbertSignature, levels: &[usize]) -> Result<Self> {
        let idx = signature.index_of(levels)?;
        let mut amps = vec![c64::new(0.0, 0.0); signature.total_dim()];
        amps[idx] = c64::new(1.0, 0.0);
        Self::new(amps, signature.clone())
    }

    pub fn amplitudes(&self) -> &[c64] {
        &self.amplitudes
    }

    pub fn signature(&self) -> &HilbertSignature {
        &self.signature
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> c64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `<self|op|self>`
    pub fn expectation(&self, op: &Operator) -> c64 {
        let v = apply(op, &self.amplitudes);
        self.amplitudes
            .iter()
            .zip(&v)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|self><self|`
    pub fn projector(&self) -> Operator {
        let d = self.amplitudes.len();
        let m = Mat::from_fn(d, d, |i, j| self.amplitudes[i] * self.amplitudes[j].conj());
        Operator {
            matrix: m,
            signature: self.signature.clone(),
        }
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.amplitudes.len() * other.amplitudes.len());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        StateVector {
            amplitudes: amps,
            signature: self.signature.concat(&other.signature),
        }
    }
}

/// Matrix-vector product `op * v` on raw amplitudes.
pub fn apply(op: &Operator, v: &[c64]) -> Vec<c64> {
    let d = op.dim();
    assert_eq!(v.len(), d, "vector length does not match operator");
    let mut out = vec![c64::new(0.0, 0.0); d];
    for (j, &vj) in v.iter().enumerate() {
        if vj == c64::new(0.0, 0.0) {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += op.matrix[(i, j)] * vj;
        }
    }
    out
}

/// Truncated bosonic annihilation operator on `cutoff + 1` Fock levels.
pub fn annihilation(cutoff: usize) -> Result<Operator> {
    if cutoff == 0 {
        return Err(Error::InvalidParameter {
            field: "photon_cutoff",
            reason: "must be at least 1".into(),
        });
    }
    let d = cutoff + 1;
    let m = Mat::from_fn(d, d, |i, j| {
        if j == i + 1 {
            c64::new((j as f64).sqrt(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    Operator::local(m)
}

/// Two-level lowering operator `|g><e|`, ground state first.
pub fn sigma_lowering() -> Operator {
    let mut m = Mat::zeros(2, 2);
    m[(0, 1)] = c64::new(1.0, 0.0);
    Operator::local(m).expect("2x2 is a valid local operator")
}

/// `sigma_z = diag(-1, +1)` in the ground-first basis.
pub fn sigma_z() -> Operator {
    let s = sigma_lowering();
    s.dagger().commutator(&s)
}

/// Kronecker product of `ops` in list order.
pub fn tensor(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidSignature("tensor of an empty operator list".into()))?;
    let mut acc = first.clone();
    for op in rest {
        acc = kron(&acc, op);
    }
    Ok(acc)
}

fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    let m = Mat::from_fn(da * db, da * db, |i, j| {
        a.matrix[(i / db, j / db)] * b.matrix[(i % db, j % db)]
    });
    Operator {
        matrix: m,
        signature: a.signature.concat(&b.signature),
    }
}

/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` acting on subsystem `index`.
pub fn embed(op: &Operator, index: usize, sig: &HilbertSignature) -> Result<Operator> {
    let local = *sig.dims().get(index).ok_or_else(|| {
        Error::InvalidSignature(format!(
            "subsystem index {index} out of range for {sig}"
        ))
    })?;
    if op.dim() != local {
        return Err(Error::DimensionMismatch {
            expected: local,
            found: op.dim(),
        });
    }
    let left: usize = sig.dims()[..index].iter().product();
    let right: usize = sig.dims()[index + 1..].iter().product();
    let d = sig.total_dim();
    let mut m = Mat::zeros(d, d);
    // Only the nonzero pattern of `op` is visited.
    for c in 0..local {
        for r in 0..local {
            let v = op.matrix[(r, c)];
            if v == c64::new(0.0, 0.0) {
                continue;
            }
            for l in 0..left {
                for k in 0..right {
                    let row = (l * local + r) * right + k;
                    let col = (l * local + c) * right + k;
                    m[(row, col)] = v;
                }
            }
        }
    }
    Operator::new(m, sig.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> c64 {
        c64::new(re, im)
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    }

    fn random_local(d: usize, seed: &mut u64) -> Operator {
        Operator::local(Mat::from_fn(d, d, |_, _| c(lcg(seed), lcg(seed)))).unwrap()
    }

    #[test]
    fn annihilation_two_level_truncation() {
        let a = annihilation(1).unwrap();
        assert_eq!(a.get(0, 1), c(1.0, 0.0));
        assert_eq!(a.get(0, 0), c(0.0, 0.0));
        assert_eq!(a.get(1, 0), c(0.0, 0.0));
        assert_eq!(a.get(1, 1), c(0.0, 0.0));
    }

    #[test]
    fn number_operator_is_diagonal_ladder() {
        for cutoff in 1..8 {
            let a = annihilation(cutoff).unwrap();
            let n = &a.dagger() * &a;
            for m in 0..=cutoff {
                for k in 0..=cutoff {
                    let expect = if m == k { m as f64 } else { 0.0 };
                    assert!((n.get(m, k) - c(expect, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn truncated_commutator_defect() {
        let a = annihilation(5).unwrap();
        let comm = a.commutator(&a.dagger());
        for i in 0..6 {
            let expect = if i == 5 { -5.0 } else { 1.0 };
            assert!((comm.get(i, i) - c(expect, 0.0)).norm() < 1e-12);
        }
        let off: f64 = (0..6)
            .flat_map(|i| (0..6).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| comm.get(i, j).norm())
            .fold(0.0, f64::max);
        assert!(off < 1e-12);
    }

    #[test]
    fn zero_cutoff_rejected() {
        assert!(matches!(
            annihilation(0),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn pauli_algebra() {
        let s = sigma_lowering();
        assert_eq!(s.get(0, 1), c(1.0, 0.0));
        let anti = s.dagger().anticommutator(&s);
        assert!(anti.max_abs_diff(&Operator::identity(s.signature())) < 1e-15);
        let z = sigma_z();
        assert_eq!(z.get(0, 0), c(-1.0, 0.0));
        assert_eq!(z.get(1, 1), c(1.0, 0.0));
        let n = &s.dagger() * &s;
        assert_eq!(n.get(1, 1), c(1.0, 0.0));
        assert_eq!(n.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn embed_identity_and_commuting_supports() {
        let sig = HilbertSignature::new(vec![2, 2, 2]).unwrap();
        let id = Operator::identity(&HilbertSignature::new(vec![2]).unwrap());
        for i in 0..3 {
            let e = embed(&id, i, &sig).unwrap();
            assert!(e.max_abs_diff(&Operator::identity(&sig)) < 1e-15);
        }
        let s1 = embed(&sigma_lowering(), 1, &sig).unwrap();
        let s2 = embed(&sigma_lowering(), 2, &sig).unwrap();
        assert!(s1.commutator(&s2).max_abs() < 1e-15);
    }

    #[test]
    fn embed_trace_scales_with_complement() {
        let mut seed = 7;
        let sig = HilbertSignature::new(vec![3, 2, 2]).unwrap();
        let op = random_local(2, &mut seed);
        let e = embed(&op, 1, &sig).unwrap();
        let expect = op.trace() * 6.0;
        assert!((e.trace() - expect).norm() < 1e-12);
    }

    #[test]
    fn embed_dimension_mismatch_reports_both() {
        let sig = HilbertSignature::new(vec![3, 2]).unwrap();
        let err = embed(&sigma_lowering(), 0, &sig).unwrap_err();
        match err {
            Error::DimensionMismatch { expected, found } => {
                assert_eq!((expected, found), (3, 2));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn tensor_basics() {
        let mut seed = 11;
        let a = random_local(2, &mut seed);
        assert!(tensor(std::slice::from_ref(&a)).unwrap().max_abs_diff(&a) < 1e-15);
        let i2 = Operator::identity(&HilbertSignature::new(vec![2]).unwrap());
        let i3 = Operator::identity(&HilbertSignature::new(vec![3]).unwrap());
        let i6 = tensor(&[i2, i3]).unwrap();
        assert_eq!(i6.signature().dims(), &[2, 3]);
        assert!(i6.max_abs_diff(&Operator::identity(i6.signature())) < 1e-15);
        let b = random_local(2, &mut seed);
        let ab = tensor(&[a.clone(), b.clone()]).unwrap();
        assert!((ab.trace() - a.trace() * b.trace()).norm() < 1e-12);
        assert!(tensor(&[]).is_err());
    }

    #[test]
    fn kronecker_mixed_product() {
        let mut seed = 3;
        for _ in 0..10 {
            let (a, c_) = (random_local(2, &mut seed), random_local(2, &mut seed));
            let (b, d) = (random_local(3, &mut seed), random_local(3, &mut seed));
            let lhs = &tensor(&[a.clone(), b.clone()]).unwrap()
                * &tensor(&[c_.clone(), d.clone()]).unwrap();
            let rhs = tensor(&[&a * &c_, &b * &d]).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn signature_validation() {
        assert!(HilbertSignature::new(vec![]).is_err());
        assert!(HilbertSignature::new(vec![2, 1]).is_err());
        assert!(HilbertSignature::new(vec![64, 64, 2]).is_err());
        assert!(HilbertSignature::with_cap(vec![64, 64, 2], 10_000).is_ok());
        let sig = HilbertSignature::new(vec![6, 2, 2, 2, 2]).unwrap();
        assert_eq!(sig.total_dim(), 96);
        let idx = sig.index_of(&[3, 1, 0, 1, 1]).unwrap();
        assert_eq!(sig.levels_of(idx), vec![3, 1, 0, 1, 1]);
    }

    #[test]
    fn state_vector_normalizes() {
        let sig = HilbertSignature::new(vec![2]).unwrap();
        let v = StateVector::new(vec![c(3.0, 0.0), c(0.0, 4.0)], sig.clone()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!(StateVector::new(vec![c(0.0, 0.0); 2], sig).is_err());
    }
}
