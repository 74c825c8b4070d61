//! Lindblad generator of the battery model, its vectorized superoperator, and
//! Liouvillian spectral diagnostics.

mod spectrum;
mod superop;

pub use spectrum::{
    liouvillian_spectrum, liouvillian_spectrum_with, spectral_gap, SpectrumOptions,
    SpectrumResult, ZERO_MODE_TOL,
};
pub use superop::{
    build_liouvillian, build_liouvillian_with_cap, unvectorize, vectorize, SectorBlock,
    SuperOperator, SUPEROPERATOR_BLOCK_CAP,
};

use std::sync::OnceLock;

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSignature, Operator};
use crate::model::{excitation_charges, h0_from, hint_from, ModelOperators, ModelParams};
use crate::sparse::SparseOp;

/// Bose-Einstein occupation `1 / (exp(omega_c / (k_B T)) - 1)`; zero at `T = 0`.
pub fn thermal_occupation(omega_c: f64, temperature: f64, k_b: f64) -> Result<f64> {
    if !(omega_c > 0.0 && omega_c.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "omega_c",
            reason: "thermal occupation needs a positive cavity frequency".into(),
        });
    }
    if !(k_b > 0.0 && k_b.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "k_b",
            reason: "must be positive".into(),
        });
    }
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "temperature",
            reason: "must be finite and nonnegative".into(),
        });
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega_c / (k_b * temperature)).exp_m1())
}

/// Which cavity dissipator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipatorMode {
    /// Detailed-balance thermal Lindbladian `kappa (n+1) D[a] + kappa n D[a^dagger]`.
    #[default]
    Standard,
    /// `kappa [(n+1) a rho a^dagger - (n/2) {a^dagger a, rho}]`. Not trace preserving;
    /// kept for auditing only.
    PaperLiteral,
}

impl std::str::FromStr for DissipatorMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard" => Ok(Self::Standard),
            "paper-literal" | "paper_literal" => Ok(Self::PaperLiteral),
            other => Err(format!(
                "unknown dissipator mode `{other}` (expected standard or paper-literal)"
            )),
        }
    }
}

/// A jump operator with its rate.
#[derive(Debug, Clone)]
pub struct DissipatorSpec {
    pub jump_operator: Operator,
    pub rate: f64,
}

impl DissipatorSpec {
    pub fn new(jump_operator: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "rate",
                reason: format!("dissipator rate {rate} must be finite and nonnegative"),
            });
        }
        Ok(Self {
            jump_operator,
            rate,
        })
    }
}

fn same_dim(a: &Operator, b: &Operator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `D[L] rho = L rho L^dagger - (L^dagger L rho + rho L^dagger L) / 2`
pub fn standard_dissipator(jump: &Operator, rho: &Operator) -> Result<Operator> {
    same_dim(jump, rho)?;
    let ld = jump.dagger();
    let ldl = &ld * jump;
    let gain = &(jump * rho) * &ld;
    let loss = ldl.anticommutator(rho).scale_re(0.5);
    Ok(&gain - &loss)
}

/// Cavity loss plus thermal fluctuations acting on `rho`.
pub fn cavity_thermal_dissipator(
    a: &Operator,
    kappa: f64,
    n: f64,
    rho: &Operator,
    mode: DissipatorMode,
) -> Result<Operator> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "kappa",
            reason: "must be finite and nonnegative".into(),
        });
    }
    if !(n >= 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "n",
            reason: "thermal occupation must be finite and nonnegative".into(),
        });
    }
    same_dim(a, rho)?;
    match mode {
        DissipatorMode::Standard => {
            let down = standard_dissipator(a, rho)?.scale_re(kappa * (n + 1.0));
            let up = standard_dissipator(&a.dagger(), rho)?.scale_re(kappa * n);
            Ok(&down + &up)
        }
        DissipatorMode::PaperLiteral => {
            let ad = a.dagger();
            let gain = (&(a * rho) * &ad).scale_re(n + 1.0);
            let loss = (&ad * a).anticommutator(rho).scale_re(0.5 * n);
            Ok((&gain - &loss).scale_re(kappa))
        }
    }
}

/// Time-independent Lindblad-type generator
/// `L rho = -i [H, rho] + sum_k r_k J_k rho J_k^dagger - sum_m (c_m / 2) {M_m, rho}`.
///
/// A standard dissipator `r D[J]` contributes the gain `(r, J)` and the loss
/// `(r, J^dagger J)`; unbalanced gains and losses express non-trace-preserving
/// forms.
#[derive(Debug, Clone)]
pub struct Generator {
    signature: HilbertSignature,
    hamiltonian: Operator,
    gains: Vec<(f64, Operator)>,
    losses: Vec<(f64, Operator)>,
    charges: Option<Vec<i64>>,
    compiled: OnceLock<Compiled>,
}

#[derive(Debug, Clone)]
struct Compiled {
    /// `H - (i/2) sum_m c_m M_m`
    effective: SparseOp,
    gains: Vec<(f64, SparseOp)>,
}

impl Generator {
    pub fn new(hamiltonian: Operator) -> Self {
        Self {
            signature: hamiltonian.signature().clone(),
            hamiltonian,
            gains: Vec::new(),
            losses: Vec::new(),
            charges: None,
            compiled: OnceLock::new(),
        }
    }

    pub fn with_dissipator(mut self, spec: DissipatorSpec) -> Result<Self> {
        same_dim(&self.hamiltonian, &spec.jump_operator)?;
        if spec.rate > 0.0 {
            let l = spec.jump_operator;
            let ldl = &l.dagger() * &l;
            self.gains.push((spec.rate, l));
            self.losses.push((spec.rate, ldl));
        }
        self.compiled = OnceLock::new();
        Ok(self)
    }

    /// Adds `rate * J rho J^dagger` alone.
    pub fn with_gain(mut self, rate: f64, jump: Operator) -> Result<Self> {
        same_dim(&self.hamiltonian, &jump)?;
        if rate != 0.0 {
            self.gains.push((rate, jump));
        }
        self.compiled = OnceLock::new();
        Ok(self)
    }

    /// Adds `-(coef/2) {m, rho}` alone. `m` must be Hermitian.
    pub fn with_loss(mut self, coef: f64, m: Operator) -> Result<Self> {
        same_dim(&self.hamiltonian, &m)?;
        let dev = m.hermiticity_error();
        if dev > 1e-12 * m.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                what: "anticommutator operator",
                deviation: dev,
            });
        }
        if coef != 0.0 {
            self.losses.push((coef, m));
        }
        self.compiled = OnceLock::new();
        Ok(self)
    }

    /// Integer charge per basis state conserved by every term, used to split the
    /// superoperator into independent sectors.
    pub fn with_charges(mut self, charges: Vec<i64>) -> Result<Self> {
        if charges.len() != self.signature.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.signature.total_dim(),
                found: charges.len(),
            });
        }
        self.charges = Some(charges);
        Ok(self)
    }

    pub fn signature(&self) -> &HilbertSignature {
        &self.signature
    }

    pub fn dim(&self) -> usize {
        self.signature.total_dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn charges(&self) -> Option<&[i64]> {
        self.charges.as_deref()
    }

    pub(crate) fn gains(&self) -> &[(f64, Operator)] {
        &self.gains
    }

    pub(crate) fn losses(&self) -> &[(f64, Operator)] {
        &self.losses
    }

    fn compiled(&self) -> &Compiled {
        self.compiled.get_or_init(|| {
            let mut k = self.hamiltonian.clone();
            for (c, m) in &self.losses {
                k = &k - &m.scale(c64::new(0.0, 0.5 * c));
            }
            Compiled {
                effective: SparseOp::from_dense(k.matrix()),
                gains: self
                    .gains
                    .iter()
                    .map(|(r, j)| (*r, SparseOp::from_dense(j.matrix())))
                    .collect(),
            }
        })
    }

    /// Applies the generator to a column-major `d x d` buffer: `out = L(x)`.
    /// `scratch` must have the same length.
    pub(crate) fn apply_into(&self, x: &[c64], out: &mut [c64], scratch: &mut [c64]) {
        let comp = self.compiled();
        out.iter_mut().for_each(|o| *o = c64::new(0.0, 0.0));
        comp.effective.left_mul_acc(c64::new(0.0, -1.0), x, out);
        comp.effective.right_mul_adjoint_acc(c64::new(0.0, 1.0), x, out);
        for (rate, j) in &comp.gains {
            j.sandwich_acc(c64::new(*rate, 0.0), x, scratch, out);
        }
    }

    /// Matrix-form application `L(rho)` through the sparse effective-Hamiltonian route.
    pub fn apply(&self, rho: &Operator) -> Result<Operator> {
        same_dim(&self.hamiltonian, rho)?;
        let d = self.dim();
        let x = to_col_major(rho);
        let mut out = vec![c64::new(0.0, 0.0); d * d];
        let mut scratch = vec![c64::new(0.0, 0.0); d * d];
        self.apply_into(&x, &mut out, &mut scratch);
        Ok(from_col_major(&out, &self.signature))
    }

    /// Literal dense evaluation of every term; slow, used as a cross-check.
    pub fn apply_dense(&self, rho: &Operator) -> Result<Operator> {
        same_dim(&self.hamiltonian, rho)?;
        let mut acc = self.hamiltonian.commutator(rho).scale(c64::new(0.0, -1.0));
        for (r, j) in &self.gains {
            acc = &acc + &(&(j * rho) * &j.dagger()).scale_re(*r);
        }
        for (c, m) in &self.losses {
            acc = &acc - &m.anticommutator(rho).scale_re(0.5 * c);
        }
        Ok(acc)
    }

    /// Vectorized superoperator, split into charge sectors when charges are set.
    pub fn superoperator(&self) -> Result<SuperOperator> {
        SuperOperator::from_generator(self, SUPEROPERATOR_BLOCK_CAP)
    }
}

pub(crate) fn to_col_major(op: &Operator) -> Vec<c64> {
    let d = op.dim();
    let m = op.matrix();
    let mut v = Vec::with_capacity(d * d);
    for c in 0..d {
        for r in 0..d {
            v.push(m[(r, c)]);
        }
    }
    v
}

pub(crate) fn from_col_major(v: &[c64], sig: &HilbertSignature) -> Operator {
    let d = sig.total_dim();
    let m = faer::Mat::from_fn(d, d, |r, c| v[r + c * d]);
    Operator::new(m, sig.clone()).expect("buffer matches signature")
}

/// Generator of the full model: `H0 + H_int`, cavity loss and thermal
/// fluctuations per `mode`, zero-temperature decay of every spin.
pub fn build_generator(p: &ModelParams, mode: DissipatorMode) -> Result<Generator> {
    let ops = ModelOperators::new(p)?;
    build_generator_from(&ops, p, mode)
}

pub(crate) fn build_generator_from(
    ops: &ModelOperators,
    p: &ModelParams,
    mode: DissipatorMode,
) -> Result<Generator> {
    let h = &h0_from(ops, p) + &hint_from(ops, p);
    let mut gen = Generator::new(h);
    if p.kappa > 0.0 {
        let n = thermal_occupation(p.omega_c, p.temperature, p.k_b)?;
        match mode {
            DissipatorMode::Standard => {
                gen = gen
                    .with_dissipator(DissipatorSpec::new(ops.a.clone(), p.kappa * (n + 1.0))?)?
                    .with_dissipator(DissipatorSpec::new(ops.a.dagger(), p.kappa * n)?)?;
            }
            DissipatorMode::PaperLiteral => {
                gen = gen
                    .with_gain(p.kappa * (n + 1.0), ops.a.clone())?
                    .with_loss(p.kappa * n, ops.number())?;
            }
        }
    }
    for (i, s) in ops.sigma.iter().enumerate() {
        gen = gen.with_dissipator(DissipatorSpec::new(s.clone(), p.spin_gamma(i))?)?;
    }
    gen.with_charges(excitation_charges(&ops.signature))
}
