use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::Serialize;

use super::SuperOperator;
use crate::error::{Error, Result};

/// Eigenvalues below this modulus count as steady modes.
pub const ZERO_MODE_TOL: f64 = 1e-8;

/// Liouvillian eigenvalues with the steady mode and relaxation gap identified.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// Sorted by descending real part (ties by ascending imaginary part).
    #[serde(serialize_with = "as_pairs")]
    pub eigenvalues: Vec<c64>,
    /// Index of the eigenvalue with the smallest modulus.
    pub steady_index: usize,
    /// `-Re` of the slowest mode with `|Lambda| >= ZERO_MODE_TOL`, clamped at 0.
    pub gap: f64,
    /// `false` when some sectors were only partially resolved by the iterative path.
    pub complete: bool,
    /// Ritz residuals of iteratively computed modes (empty for dense sectors).
    pub residuals: Vec<f64>,
}

fn as_pairs<S: serde::Serializer>(v: &[c64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| [x.re, x.im]))
}

impl SpectrumResult {
    pub fn from_eigenvalues(mut eigenvalues: Vec<c64>, complete: bool, residuals: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
        });
        let steady_index = eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map_or(0, |(i, _)| i);
        let gap = eigenvalues
            .iter()
            .find(|l| l.norm() >= ZERO_MODE_TOL)
            .map_or(0.0, |l| (-l.re).max(0.0));
        Self {
            eigenvalues,
            steady_index,
            gap,
            complete,
            residuals,
        }
    }

    pub fn steady_eigenvalue(&self) -> c64 {
        self.eigenvalues[self.steady_index]
    }

    /// Number of eigenvalues with `|Lambda| < tol`.
    pub fn count_near_zero(&self, tol: f64) -> usize {
        self.eigenvalues.iter().filter(|l| l.norm() < tol).count()
    }

    /// Slowest eigenvalue with `|Lambda| >= ZERO_MODE_TOL`, so every steady mode
    /// of a degenerate manifold is skipped.
    pub fn slowest_mode(&self) -> Option<c64> {
        self.eigenvalues.iter().find(|l| l.norm() >= ZERO_MODE_TOL).copied()
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumOptions {
    /// Sector blocks up to this size are diagonalized densely.
    pub dense_block_cap: usize,
    /// Modes per oversized sector extracted by shift-invert Arnoldi.
    pub slow_modes: usize,
    /// Real shift used for the inversion; kept slightly off the steady eigenvalue.
    pub shift: f64,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Relative Ritz residual accepted for convergence.
    pub tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            dense_block_cap: 2048,
            slow_modes: 20,
            shift: 1e-6,
            krylov_dim: 60,
            max_restarts: 60,
            tol: 1e-10,
        }
    }
}

pub fn liouvillian_spectrum(l: &SuperOperator) -> Result<SpectrumResult> {
    liouvillian_spectrum_with(l, &SpectrumOptions::default())
}

pub fn liouvillian_spectrum_with(
    l: &SuperOperator,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let mut eigenvalues = Vec::with_capacity(l.dim());
    let mut residuals = Vec::new();
    let mut complete = true;
    for block in l.blocks() {
        let n = block.matrix.nrows();
        if n <= opts.dense_block_cap {
            let ev = block.matrix.eigenvalues().map_err(|e| Error::SolverFailure {
                reason: format!("dense eigensolver failed on sector q = {}: {e:?}", block.charge),
                residuals: vec![],
            })?;
            eigenvalues.extend(ev);
        } else {
            let (ev, res) = shift_invert_arnoldi(&block.matrix, opts)?;
            eigenvalues.extend(ev);
            residuals.extend(res);
            complete = false;
        }
    }
    Ok(SpectrumResult::from_eigenvalues(eigenvalues, complete, residuals))
}

/// Relaxation gap of a computed spectrum.
pub fn spectral_gap(s: &SpectrumResult) -> Result<f64> {
    if s.eigenvalues.len() < 2 {
        return Err(Error::InvalidState(
            "spectral gap needs at least two eigenvalues".into(),
        ));
    }
    Ok(s.gap)
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[c64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of `matrix` nearest `opts.shift`, via Arnoldi on `(A - shift)^{-1}`
/// with explicit restarts. Returns eigenvalues and relative Ritz residuals.
pub(crate) fn shift_invert_arnoldi(
    matrix: &Mat<c64>,
    opts: &SpectrumOptions,
) -> Result<(Vec<c64>, Vec<f64>)> {
    let n = matrix.nrows();
    let k = opts.slow_modes.min(n);
    let m = opts.krylov_dim.max(2 * k + 1).min(n);
    let shifted = Mat::from_fn(n, n, |i, j| {
        if i == j {
            matrix[(i, j)] - c64::new(opts.shift, 0.0)
        } else {
            matrix[(i, j)]
        }
    });
    let lu = shifted.partial_piv_lu();
    let op = |x: &[c64]| -> Vec<c64> {
        let rhs = Mat::from_fn(n, 1, |i, _| x[i]);
        let sol = lu.solve(&rhs);
        (0..n).map(|i| sol[(i, 0)]).collect()
    };

    // Deterministic start vector.
    let mut start: Vec<c64> = (0..n)
        .map(|i| c64::new(1.0 + (i as f64 * 0.618_033_988_75).fract(), 0.0))
        .collect();
    let mut last_res = vec![f64::INFINITY; k];
    for _ in 0..opts.max_restarts {
        let s = norm(&start);
        let mut basis: Vec<Vec<c64>> = vec![start.iter().map(|x| x / s).collect()];
        let mut h = Mat::<c64>::zeros(m + 1, m);
        let mut steps = m;
        for j in 0..m {
            let mut w = op(&basis[j]);
            // Two passes of modified Gram-Schmidt.
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(v, &w);
                    h[(i, j)] += c;
                    for (wx, vx) in w.iter_mut().zip(v) {
                        *wx -= c * vx;
                    }
                }
            }
            let beta = norm(&w);
            h[(j + 1, j)] = c64::new(beta, 0.0);
            if beta < 1e-300 {
                steps = j + 1;
                break;
            }
            basis.push(w.iter().map(|x| x / beta).collect());
        }
        let hm = Mat::from_fn(steps, steps, |i, j| h[(i, j)]);
        let evd = faer::linalg::solvers::Eigen::new(hm.as_ref()).map_err(|e| {
            Error::SolverFailure {
                reason: format!("Hessenberg eigensolver: {e:?}"),
                residuals: vec![],
            }
        })?;
        let theta: Vec<c64> = (0..steps).map(|i| evd.S()[i]).collect();
        let mut order: Vec<usize> = (0..steps).collect();
        order.sort_by(|&a, &b| theta[b].norm().partial_cmp(&theta[a].norm()).unwrap());
        let wanted: Vec<usize> = order.into_iter().take(k).collect();
        let beta = if steps < m { 0.0 } else { h[(m, m - 1)].norm() };
        let res: Vec<f64> = wanted
            .iter()
            .map(|&i| beta * evd.U()[(steps - 1, i)].norm() / theta[i].norm().max(1e-300))
            .collect();
        last_res = res.clone();
        if res.iter().all(|&r| r < opts.tol) {
            let eig = wanted
                .iter()
                .map(|&i| c64::new(opts.shift, 0.0) + theta[i].inv())
                .collect();
            return Ok((eig, res));
        }
        // Restart from the sum of the wanted Ritz vectors.
        start = vec![c64::new(0.0, 0.0); n];
        for &i in &wanted {
            for (j, v) in basis.iter().take(steps).enumerate() {
                let y = evd.U()[(j, i)];
                for (s, x) in start.iter_mut().zip(v) {
                    *s += y * x;
                }
            }
        }
    }
    Err(Error::SolverFailure {
        reason: format!("shift-invert Arnoldi did not converge for a sector of size {n}"),
        residuals: last_res,
    })
}
