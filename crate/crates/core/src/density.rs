use faer::c64;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSignature, Operator, StateVector};

/// Tolerance used when validating user-supplied density matrices.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive-semidefinite operator on the full system.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validates `op` with [`VALIDATION_TOL`].
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, VALIDATION_TOL)
    }

    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > tol {
            return Err(Error::NotHermitian {
                what: "density matrix",
                deviation: herm,
            });
        }
        let tr = op.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidState(format!(
                "trace is {tr}, expected 1"
            )));
        }
        let min = op.hermitian_eigenvalues()?[0];
        if min < -tol {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self { op })
    }

    /// Wraps an operator produced by trusted numerics without re-validating it.
    pub fn from_operator_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self {
            op: psi.projector(),
        }
    }

    /// `I / d`
    pub fn maximally_mixed(sig: &HilbertSignature) -> Self {
        let d = sig.total_dim();
        Self {
            op: Operator::identity(sig).scale_re(1.0 / d as f64),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn signature(&self) -> &HilbertSignature {
        self.op.signature()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// `Tr[rho * obs]`, real part.
    pub fn expectation(&self, obs: &Operator) -> f64 {
        self.op.trace_product(obs).re
    }

    pub fn trace_error(&self) -> f64 {
        (self.op.trace() - c64::new(1.0, 0.0)).norm()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.op.hermitian_eigenvalues()?[0])
    }

    /// Tensor product of factor states in list order.
    pub fn product(factors: &[DensityMatrix]) -> Result<Self> {
        let ops: Vec<Operator> = factors.iter().map(|f| f.op.clone()).collect();
        Ok(Self {
            op: crate::hilbert::tensor(&ops)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn rejects_bad_states() {
        let sig = HilbertSignature::new(vec![2]).unwrap();
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = c64::new(1.5, 0.0);
        m[(1, 1)] = c64::new(-0.5, 0.0);
        let op = Operator::new(m.clone(), sig.clone()).unwrap();
        assert!(matches!(DensityMatrix::new(op), Err(Error::InvalidState(_))));

        m[(1, 1)] = c64::new(0.5, 0.0);
        let op = Operator::new(m.clone(), sig.clone()).unwrap();
        assert!(DensityMatrix::new(op).is_err());

        m[(0, 0)] = c64::new(0.5, 0.0);
        m[(0, 1)] = c64::new(0.1, 0.0);
        let op = Operator::new(m, sig.clone()).unwrap();
        assert!(matches!(
            DensityMatrix::new(op),
            Err(Error::NotHermitian { .. })
        ));

        let mm = DensityMatrix::maximally_mixed(&sig);
        assert!(mm.trace_error() < 1e-15);
    }
}
