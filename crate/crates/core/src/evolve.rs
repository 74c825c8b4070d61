//! Time propagation of the density matrix and steady-state extraction.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{tensor, HilbertSignature, Operator, StateVector};
use crate::lindblad::{build_generator, thermal_occupation, DissipatorMode, Generator, SuperOperator};
use crate::model::ModelParams;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fourth-order Runge-Kutta with a fixed step.
    #[default]
    Rk4Fixed,
    /// Krylov exponential of the vectorized superoperator over each snapshot
    /// interval. Reference oracle for small cutoffs.
    ExpmKrylovReference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    /// Steps between stored snapshots.
    pub snapshot_stride: usize,
    /// Divide by the trace after every step.
    pub renormalize: bool,
    /// Largest `|Tr rho - 1|` tolerated before aborting.
    pub trace_tolerance: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4Fixed,
            dt: 0.005,
            snapshot_stride: 100,
            renormalize: false,
            trace_tolerance: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "dt",
                reason: format!("step {} must be positive", self.dt),
            });
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter {
                field: "snapshot_stride",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.trace_tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                field: "trace_tolerance",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Health of one stored state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    pub fn of(rho: &Operator) -> Result<Self> {
        Ok(Self {
            trace_error: (rho.trace() - c64::new(1.0, 0.0)).norm(),
            hermiticity_error: rho.hermiticity_error(),
            min_eigenvalue: rho.hermitian_part().hermitian_eigenvalues()?[0],
        })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.trace_error).fold(0.0, f64::max)
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.hermiticity_error).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.diagnostics
            .iter()
            .map(|d| d.min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Standard-mode propagation of `rho0` under the model generator.
pub fn propagate(
    rho0: &DensityMatrix,
    p: &ModelParams,
    cfg: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    let gen = build_generator(p, DissipatorMode::Standard)?;
    propagate_generator(&gen, rho0, cfg, t_end)
}

/// Propagates under an arbitrary generator, storing every snapshot.
pub fn propagate_generator(
    gen: &Generator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        diagnostics: Vec::new(),
    };
    propagate_with(gen, rho0, cfg, t_end, |t, rho, diag| {
        traj.times.push(t);
        traj.states.push(DensityMatrix::from_operator_unchecked(rho.clone()));
        traj.diagnostics.push(*diag);
        Ok(())
    })?;
    Ok(traj)
}

fn trace_of(x: &[c64], d: usize) -> c64 {
    (0..d).map(|i| x[i + i * d]).sum()
}

/// Propagates from `t = 0` to `t_end`, handing every snapshot (including the
/// initial state and the final time) to `observer` instead of storing it.
pub fn propagate_with<F>(
    gen: &Generator,
    rho0: &DensityMatrix,
    cfg: &IntegratorConfig,
    t_end: f64,
    mut observer: F,
) -> Result<()>
where
    F: FnMut(f64, &Operator, &Diagnostics) -> Result<()>,
{
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "t_end",
            reason: format!("{t_end} must be positive"),
        });
    }
    if rho0.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            found: rho0.dim(),
        });
    }
    let sig = gen.signature().clone();
    let d = gen.dim();
    let n_steps = ((t_end / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut x = crate::lindblad::vectorize(rho0.operator());
    let mut t = 0.0;

    let emit = |t: f64, x: &[c64], observer: &mut F| -> Result<()> {
        let op = crate::lindblad::unvectorize(x, &sig)?;
        let diag = Diagnostics::of(&op)?;
        observer(t, &op, &diag)
    };
    emit(0.0, &x, &mut observer)?;

    let check = |t: f64, x: &[c64]| -> Result<()> {
        if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::PhysicsAbort {
                time: t,
                reason: "non-finite density-matrix entries".into(),
            });
        }
        let err = (trace_of(x, d) - c64::new(1.0, 0.0)).norm();
        if err > cfg.trace_tolerance {
            return Err(Error::PhysicsAbort {
                time: t,
                reason: format!("trace error {err:e} exceeds {:e}", cfg.trace_tolerance),
            });
        }
        Ok(())
    };
    let renorm = |x: &mut [c64]| {
        if cfg.renormalize {
            let tr = trace_of(x, d);
            x.iter_mut().for_each(|v| *v /= tr);
        }
    };

    match cfg.method {
        Method::Rk4Fixed => {
            let n = d * d;
            let mut k = vec![ZERO; n];
            let mut acc = vec![ZERO; n];
            let mut stage = vec![ZERO; n];
            let mut scratch = vec![ZERO; n];
            for step in 1..=n_steps {
                let h = if step == n_steps { t_end - t } else { cfg.dt };
                // k1
                gen.apply_into(&x, &mut k, &mut scratch);
                for i in 0..n {
                    acc[i] = k[i];
                    stage[i] = x[i] + k[i] * (0.5 * h);
                }
                // k2
                gen.apply_into(&stage, &mut k, &mut scratch);
                for i in 0..n {
                    acc[i] += k[i] * 2.0;
                    stage[i] = x[i] + k[i] * (0.5 * h);
                }
                // k3
                gen.apply_into(&stage, &mut k, &mut scratch);
                for i in 0..n {
                    acc[i] += k[i] * 2.0;
                    stage[i] = x[i] + k[i] * h;
                }
                // k4
                gen.apply_into(&stage, &mut k, &mut scratch);
                for i in 0..n {
                    x[i] += (acc[i] + k[i]) * (h / 6.0);
                }
                t = if step == n_steps { t_end } else { step as f64 * cfg.dt };
                check(t, &x)?;
                renorm(&mut x);
                if step % cfg.snapshot_stride == 0 || step == n_steps {
                    emit(t, &x, &mut observer)?;
                }
            }
        }
        Method::ExpmKrylovReference => {
            let sup = gen.superoperator()?;
            let interval = cfg.dt * cfg.snapshot_stride as f64;
            while t < t_end - 1e-12 * t_end.max(1.0) {
                let span = interval.min(t_end - t);
                x = expm_krylov(&sup, &x, span)?;
                t = if t_end - (t + span) < 1e-12 * t_end.max(1.0) { t_end } else { t + span };
                check(t, &x)?;
                renorm(&mut x);
                emit(t, &x, &mut observer)?;
            }
        }
    }
    Ok(())
}

fn norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(A)` for a small dense matrix by scaling and squaring a Taylor series.
fn expm_small(a: &Mat<c64>) -> Mat<c64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let b = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let mut result = Mat::<c64>::identity(n, n);
    let mut term = Mat::<c64>::identity(n, n);
    for k in 1..=20 {
        term = &term * &b;
        let inv = 1.0 / k as f64;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] * inv);
        result = &result + &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(t S) v` by restarted Arnoldi with adaptive substeps.
pub(crate) fn expm_krylov(sup: &SuperOperator, v: &[c64], t: f64) -> Result<Vec<c64>> {
    const M: usize = 30;
    const TOL: f64 = 1e-13;
    let mut w = v.to_vec();
    let mut done = 0.0;
    let mut tau = t;
    let mut rejects = 0;
    while done < t {
        tau = tau.min(t - done);
        let beta = norm(&w);
        if beta == 0.0 {
            return Ok(w);
        }
        let mut basis: Vec<Vec<c64>> = vec![w.iter().map(|x| x / beta).collect()];
        let mut h = Mat::<c64>::zeros(M + 1, M);
        let mut m = M;
        let mut happy = false;
        for j in 0..M {
            let mut u = sup.apply(&basis[j]);
            for _ in 0..2 {
                for (i, b) in basis.iter().enumerate() {
                    let c: c64 = b.iter().zip(&u).map(|(x, y)| x.conj() * y).sum();
                    h[(i, j)] += c;
                    for (ux, bx) in u.iter_mut().zip(b) {
                        *ux -= c * bx;
                    }
                }
            }
            let hn = norm(&u);
            h[(j + 1, j)] = c64::new(hn, 0.0);
            if hn < 1e-12 * beta.max(1.0) {
                m = j + 1;
                happy = true;
                break;
            }
            basis.push(u.iter().map(|x| x / hn).collect());
        }
        loop {
            let hm = Mat::from_fn(m, m, |i, j| h[(i, j)] * tau);
            let e = expm_small(&hm);
            let err = if happy {
                0.0
            } else {
                beta * h[(m, m - 1)].norm() * tau * e[(m - 1, 0)].norm()
            };
            if err <= TOL * tau / t * beta.max(1e-300) || err < 1e-15 {
                let mut next = vec![ZERO; w.len()];
                for (k, b) in basis.iter().take(m).enumerate() {
                    let coef = e[(k, 0)] * beta;
                    for (nx, bx) in next.iter_mut().zip(b) {
                        *nx += coef * bx;
                    }
                }
                w = next;
                done += tau;
                tau *= 1.5;
                break;
            }
            tau *= 0.5;
            rejects += 1;
            if rejects > 200 {
                return Err(Error::SolverFailure {
                    reason: "Krylov exponential failed to reach tolerance".into(),
                    residuals: vec![err],
                });
            }
        }
    }
    Ok(w)
}

/// Unique steady state of the standard-mode generator.
pub fn steady_state(p: &ModelParams) -> Result<DensityMatrix> {
    steady_state_with(p, DissipatorMode::Standard)
}

pub fn steady_state_with(p: &ModelParams, mode: DissipatorMode) -> Result<DensityMatrix> {
    let gen = build_generator(p, mode)?;
    steady_state_of(&gen)
}

/// Null vector of the generator. A unique steady state commutes with the
/// conserved charge, so only the neutral sector is solved.
pub fn steady_state_of(gen: &Generator) -> Result<DensityMatrix> {
    let sup = gen.superoperator()?;
    let sig = gen.signature().clone();
    let d = gen.dim();
    let block = sup.neutral_block();
    let n = block.indices.len();
    let eig = block.matrix.eigenvalues().map_err(|e| Error::SolverFailure {
        reason: format!("eigensolver failed on the neutral sector: {e:?}"),
        residuals: vec![],
    })?;
    let null: Vec<c64> = eig.iter().copied().filter(|l| l.norm() < 1e-10).collect();
    if null.len() > 1 {
        let evd = faer::linalg::solvers::Eigen::new(block.matrix.as_ref()).map_err(|e| {
            Error::SolverFailure {
                reason: format!("eigenvector solve failed: {e:?}"),
                residuals: vec![],
            }
        })?;
        let mut basis = Vec::new();
        for k in 0..n {
            if evd.S()[k].norm() < 1e-10 {
                let mut v = vec![ZERO; d * d];
                for (pos, &idx) in block.indices.iter().enumerate() {
                    v[idx] = evd.U()[(pos, k)];
                }
                basis.push(crate::lindblad::unvectorize(&v, &sig)?);
            }
        }
        return Err(Error::DegenerateSteadyState {
            basis,
            eigenvalues: null,
        });
    }

    // Replace the first equation by the trace condition.
    let diag_pos: Vec<usize> = block
        .indices
        .iter()
        .enumerate()
        .filter(|(_, &idx)| idx % d == idx / d)
        .map(|(pos, _)| pos)
        .collect();
    let mut a = block.matrix.clone();
    for j in 0..n {
        a[(0, j)] = ZERO;
    }
    for &pos in &diag_pos {
        a[(0, pos)] = c64::new(1.0, 0.0);
    }
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs[(0, 0)] = c64::new(1.0, 0.0);
    let sol = a.partial_piv_lu().solve(&rhs);
    let mut v = vec![ZERO; d * d];
    for (pos, &idx) in block.indices.iter().enumerate() {
        v[idx] = sol[(pos, 0)];
    }
    let raw = crate::lindblad::unvectorize(&v, &sig)?.hermitian_part();
    let tr = raw.trace().re;
    let rho = raw.scale_re(1.0 / tr);
    let res = gen.apply(&rho)?;
    let residual = res.matrix().norm_l2();
    let min = rho.hermitian_eigenvalues()?[0];
    if !(residual < 1e-9) || min < -1e-9 {
        return Err(Error::SolverFailure {
            reason: format!("steady state rejected (min eigenvalue {min:e})"),
            residuals: vec![residual],
        });
    }
    Ok(DensityMatrix::from_operator_unchecked(rho))
}

/// Initial battery register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryInit {
    #[default]
    AllExcited,
    AllGround,
    /// Symmetric single excitation.
    WState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityInit {
    #[default]
    Vacuum,
    Fock(usize),
    /// Gibbs state of `omega_c a^dagger a` at the model temperature, truncated.
    Thermal,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalystInit {
    /// `(|g> + |e>) / sqrt(2)`
    #[default]
    Plus,
    Ground,
    Excited,
    /// Bloch vector `(x, y, z)` with `+z` excited and `+x` the plus state.
    Bloch([f64; 3]),
}

/// Product initial state `cavity ⊗ battery ⊗ catalyst`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialState {
    pub battery: BatteryInit,
    pub cavity: CavityInit,
    pub catalyst: CatalystInit,
}

fn local(m: Mat<c64>) -> Operator {
    Operator::local(m).expect("local factor is square")
}

impl InitialState {
    pub fn build(&self, p: &ModelParams) -> Result<DensityMatrix> {
        p.validate()?;
        let c = p.photon_cutoff;
        let cavity = match self.cavity {
            CavityInit::Vacuum | CavityInit::Fock(_) => {
                let k = if let CavityInit::Fock(k) = self.cavity { k } else { 0 };
                if k > c {
                    return Err(Error::InvalidParameter {
                        field: "initial_state.cavity",
                        reason: format!("Fock level {k} exceeds the photon cutoff {c}"),
                    });
                }
                local(Mat::from_fn(c + 1, c + 1, |i, j| {
                    c64::new(if i == k && j == k { 1.0 } else { 0.0 }, 0.0)
                }))
            }
            CavityInit::Thermal => {
                let n = thermal_occupation(p.omega_c, p.temperature, p.k_b)?;
                let x = if n > 0.0 { n / (n + 1.0) } else { 0.0 };
                let w: Vec<f64> = (0..=c).map(|m| x.powi(m as i32)).collect();
                let z: f64 = w.iter().sum();
                local(Mat::from_fn(c + 1, c + 1, |i, j| {
                    c64::new(if i == j { w[i] / z } else { 0.0 }, 0.0)
                }))
            }
        };
        let spin_sig = HilbertSignature::new(vec![2; p.n_spins])?;
        let battery = match self.battery {
            BatteryInit::AllExcited => StateVector::basis(&spin_sig, &vec![1; p.n_spins])?.projector(),
            BatteryInit::AllGround => StateVector::basis(&spin_sig, &vec![0; p.n_spins])?.projector(),
            BatteryInit::WState => {
                let amps = (0..spin_sig.total_dim())
                    .map(|idx| {
                        if spin_sig.levels_of(idx).iter().sum::<usize>() == 1 {
                            c64::new(1.0, 0.0)
                        } else {
                            ZERO
                        }
                    })
                    .collect();
                StateVector::new(amps, spin_sig.clone())?.projector()
            }
        };
        let [x, y, z] = match self.catalyst {
            CatalystInit::Plus => [1.0, 0.0, 0.0],
            CatalystInit::Ground => [0.0, 0.0, -1.0],
            CatalystInit::Excited => [0.0, 0.0, 1.0],
            CatalystInit::Bloch(r) => r,
        };
        let len = (x * x + y * y + z * z).sqrt();
        if !(len <= 1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                field: "initial_state.catalyst",
                reason: format!("Bloch vector length {len} exceeds 1"),
            });
        }
        // Basis (g, e): rho = (I + x sx + y sy + z sz) / 2 with sz = diag(-1, 1).
        let cat = local(Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c64::new((1.0 - z) / 2.0, 0.0),
            (1, 1) => c64::new((1.0 + z) / 2.0, 0.0),
            (0, 1) => c64::new(x / 2.0, y / 2.0),
            _ => c64::new(x / 2.0, -y / 2.0),
        }));
        let full = tensor(&[cavity, battery, cat])?;
        let full = Operator::new(full.into_matrix(), p.signature()?)?;
        DensityMatrix::new(full)
    }
}
