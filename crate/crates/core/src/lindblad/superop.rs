use std::collections::BTreeMap;

use faer::{c64, Mat};

use super::{build_generator, DissipatorMode, Generator};
use crate::error::{Error, Result};
use crate::hilbert::{HilbertSignature, Operator};
use crate::model::{excitation_charges, ModelParams};
use crate::sparse::SparseOp;

/// Largest dense sector block a superoperator may hold.
pub const SUPEROPERATOR_BLOCK_CAP: usize = 4096;

/// Column-stacking vectorization: `vec(rho)[r + c*d] = rho[r, c]`.
pub fn vectorize(op: &Operator) -> Vec<c64> {
    super::to_col_major(op)
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[c64], sig: &HilbertSignature) -> Result<Operator> {
    let d = sig.total_dim();
    if v.len() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: v.len(),
        });
    }
    Ok(super::from_col_major(v, sig))
}

/// Dense block of the superoperator acting within one charge sector
/// `q = charge(row) - charge(col)` of the vectorized density matrix.
#[derive(Debug, Clone)]
pub struct SectorBlock {
    pub charge: i64,
    /// Vectorized indices spanned by the block, ascending.
    pub indices: Vec<usize>,
    pub matrix: Mat<c64>,
}

/// Liouvillian acting on column-stacked density matrices, stored as a direct sum
/// of dense sector blocks. Without charges it is a single `d^2 x d^2` block.
#[derive(Debug, Clone)]
pub struct SuperOperator {
    signature: HilbertSignature,
    blocks: Vec<SectorBlock>,
    /// `(block, position)` of every vectorized index.
    locate: Vec<(usize, usize)>,
}

fn sector_layout(d: usize, charges: Option<&[i64]>) -> BTreeMap<i64, Vec<usize>> {
    let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for c in 0..d {
        for r in 0..d {
            let q = charges.map_or(0, |ch| ch[r] - ch[c]);
            sectors.entry(q).or_default().push(r + c * d);
        }
    }
    for idx in sectors.values_mut() {
        idx.sort_unstable();
    }
    sectors
}

fn largest_block(d: usize, charges: Option<&[i64]>) -> usize {
    match charges {
        None => d * d,
        Some(ch) => {
            let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
            for &x in ch {
                *counts.entry(x).or_default() += 1;
            }
            let mut per_q: BTreeMap<i64, usize> = BTreeMap::new();
            for (&a, &na) in &counts {
                for (&b, &nb) in &counts {
                    *per_q.entry(a - b).or_default() += na * nb;
                }
            }
            per_q.values().copied().max().unwrap_or(0)
        }
    }
}

impl SuperOperator {
    /// Single-block superoperator from an explicit `d^2 x d^2` matrix.
    pub fn from_dense(matrix: Mat<c64>, signature: HilbertSignature) -> Result<Self> {
        let d = signature.total_dim();
        if matrix.nrows() != d * d || matrix.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            signature,
            blocks: vec![SectorBlock {
                charge: 0,
                indices: (0..d * d).collect(),
                matrix,
            }],
            locate: (0..d * d).map(|i| (0, i)).collect(),
        })
    }

    /// Accumulates `sum_t coef_t A_t rho B_t` through `vec(A rho B) = (B^T ⊗ A) vec(rho)`.
    fn from_sandwich_terms(
        signature: &HilbertSignature,
        charges: Option<&[i64]>,
        terms: &[(c64, SparseOp, SparseOp)],
        cap: usize,
    ) -> Result<Self> {
        let d = signature.total_dim();
        let big = largest_block(d, charges);
        if big > cap {
            return Err(Error::CapExceeded {
                block: big,
                cap,
                hint: String::new(),
            });
        }
        let layout = sector_layout(d, charges);
        let mut locate = vec![(0, 0); d * d];
        let mut blocks = Vec::with_capacity(layout.len());
        for (b, (q, indices)) in layout.into_iter().enumerate() {
            for (pos, &v) in indices.iter().enumerate() {
                locate[v] = (b, pos);
            }
            let n = indices.len();
            blocks.push(SectorBlock {
                charge: q,
                indices,
                matrix: Mat::zeros(n, n),
            });
        }
        for (coef, a, bop) in terms {
            for (r, i, av) in a.entries() {
                for (j, c, bv) in bop.entries() {
                    // S[(r, c), (i, j)] += coef * A[r, i] * B[j, c]
                    let (row_b, row_p) = locate[r + c * d];
                    let (col_b, col_p) = locate[i + j * d];
                    if row_b != col_b {
                        return Err(Error::SectorViolation);
                    }
                    blocks[row_b].matrix[(row_p, col_p)] += coef * av * bv;
                }
            }
        }
        Ok(Self {
            signature: signature.clone(),
            blocks,
            locate,
        })
    }

    pub(crate) fn from_generator(gen: &Generator, cap: usize) -> Result<Self> {
        let d = gen.dim();
        let id = SparseOp::identity(d);
        let h = SparseOp::from_dense(gen.hamiltonian().matrix());
        let mut terms = vec![
            (c64::new(0.0, -1.0), h.clone(), id.clone()),
            (c64::new(0.0, 1.0), id.clone(), h),
        ];
        for (r, j) in gen.gains() {
            terms.push((
                c64::new(*r, 0.0),
                SparseOp::from_dense(j.matrix()),
                SparseOp::from_dense(j.dagger().matrix()),
            ));
        }
        for (c, m) in gen.losses() {
            let ms = SparseOp::from_dense(m.matrix());
            terms.push((c64::new(-0.5 * c, 0.0), ms.clone(), id.clone()));
            terms.push((c64::new(-0.5 * c, 0.0), id.clone(), ms));
        }
        Self::from_sandwich_terms(gen.signature(), gen.charges(), &terms, cap)
    }

    pub fn signature(&self) -> &HilbertSignature {
        &self.signature
    }

    /// `d^2`
    pub fn dim(&self) -> usize {
        self.locate.len()
    }

    pub fn blocks(&self) -> &[SectorBlock] {
        &self.blocks
    }

    /// Block holding the `q = 0` sector (populations and same-charge coherences).
    pub fn neutral_block(&self) -> &SectorBlock {
        self.blocks
            .iter()
            .find(|b| b.charge == 0)
            .expect("every layout contains the neutral sector")
    }

    /// Matrix element `S[row, col]` in vectorized indices.
    pub fn get(&self, row: usize, col: usize) -> c64 {
        let (rb, rp) = self.locate[row];
        let (cb, cp) = self.locate[col];
        if rb == cb {
            self.blocks[rb].matrix[(rp, cp)]
        } else {
            c64::new(0.0, 0.0)
        }
    }

    /// `S * v`
    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        assert_eq!(v.len(), self.dim(), "vector length does not match superoperator");
        let mut out = vec![c64::new(0.0, 0.0); v.len()];
        for b in &self.blocks {
            let n = b.indices.len();
            for (cp, &ci) in b.indices.iter().enumerate() {
                let x = v[ci];
                if x == c64::new(0.0, 0.0) {
                    continue;
                }
                let col = b.matrix.col_as_slice(cp);
                for rp in 0..n {
                    out[b.indices[rp]] += col[rp] * x;
                }
            }
        }
        out
    }

    /// `unvec(S vec(rho))`
    pub fn apply_operator(&self, rho: &Operator) -> Result<Operator> {
        let v = vectorize(rho);
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        unvectorize(&self.apply(&v), &self.signature)
    }

    /// `u^dagger S` as a row vector, for left-eigenvector checks.
    pub fn left_apply(&self, u: &[c64]) -> Vec<c64> {
        let mut out = vec![c64::new(0.0, 0.0); self.dim()];
        for b in &self.blocks {
            for (cp, &ci) in b.indices.iter().enumerate() {
                let col = b.matrix.col_as_slice(cp);
                out[ci] = b
                    .indices
                    .iter()
                    .zip(col)
                    .map(|(&ri, s)| u[ri].conj() * s)
                    .sum();
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> SuperOperator {
        let mut out = self.clone();
        for b in &mut out.blocks {
            let n = b.matrix.nrows();
            b.matrix = Mat::from_fn(n, n, |i, j| b.matrix[(i, j)] * factor);
        }
        out
    }

    /// Full dense matrix; only sensible for small spaces.
    pub fn to_dense(&self) -> Mat<c64> {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for b in &self.blocks {
            for (cp, &ci) in b.indices.iter().enumerate() {
                for (rp, &ri) in b.indices.iter().enumerate() {
                    m[(ri, ci)] = b.matrix[(rp, cp)];
                }
            }
        }
        m
    }
}

/// Liouvillian of the model, sector-blocked by excitation-number difference.
pub fn build_liouvillian(p: &ModelParams, mode: DissipatorMode) -> Result<SuperOperator> {
    build_liouvillian_with_cap(p, mode, SUPEROPERATOR_BLOCK_CAP)
}

pub fn build_liouvillian_with_cap(
    p: &ModelParams,
    mode: DissipatorMode,
    cap: usize,
) -> Result<SuperOperator> {
    let sig = p.signature()?;
    let d = sig.total_dim();
    let big = largest_block(d, Some(&excitation_charges(&sig)));
    if big > cap {
        let fits = (1..p.photon_cutoff).rev().find(|&c| {
            let q = ModelParams {
                photon_cutoff: c,
                ..p.clone()
            };
            q.signature()
                .map(|s| largest_block(s.total_dim(), Some(&excitation_charges(&s))) <= cap)
                .unwrap_or(false)
        });
        let hint = match fits {
            Some(c) => format!("; reduce photon_cutoff from {} to at most {c}", p.photon_cutoff),
            None => "; no photon cutoff fits at this spin count".into(),
        };
        return Err(Error::CapExceeded {
            block: big,
            cap,
            hint,
        });
    }
    let gen = build_generator(p, mode)?;
    SuperOperator::from_generator(&gen, cap)
}
