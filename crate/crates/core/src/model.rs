//! Hamiltonians of the cavity + spin-chain battery + catalyst qubit model and
//! the collective objects used to analyse its protected subspace.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    annihilation, embed, sigma_lowering, sigma_z, HilbertSignature, Operator, StateVector,
    DEFAULT_DIMENSION_CAP,
};

/// Physical parameters of the model (hbar = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Number of battery spins.
    pub n_spins: usize,
    pub omega_c: f64,
    pub omega_a: f64,
    pub omega_cat: f64,
    /// Nearest-neighbour exchange along the open chain.
    pub j: f64,
    /// Cavity-spin coupling.
    pub g: f64,
    /// Catalyst-spin coupling; the sign relative to `g` sets the interference phase.
    pub lambda: f64,
    pub kappa: f64,
    /// Uniform spin relaxation rate.
    pub gamma: f64,
    /// Optional per-spin relaxation rates overriding `gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_per_spin: Option<Vec<f64>>,
    pub temperature: f64,
    pub k_b: f64,
    pub photon_cutoff: usize,
}

impl Default for ModelParams {
    /// Catalyst-assisted baseline: `N = 3`, `g = 0.3`, `J = 1.6`, `kappa = 0.15`,
    /// `T = 0.8`, `lambda = 1.5`, with `gamma = 0.01` and cutoff 5.
    fn default() -> Self {
        Self {
            n_spins: 3,
            omega_c: 0.5,
            omega_a: 2.0,
            omega_cat: 0.06,
            j: 1.6,
            g: 0.3,
            lambda: 1.5,
            kappa: 0.15,
            gamma: 0.01,
            gamma_per_spin: None,
            temperature: 0.8,
            k_b: 1.0,
            photon_cutoff: 5,
        }
    }
}

fn require(cond: bool, field: &'static str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field,
            reason: reason.into(),
        })
    }
}

impl ModelParams {
    /// All parameters zeroed except structure (`N`, cutoff) and `k_B`.
    pub fn zero(n_spins: usize, photon_cutoff: usize) -> Self {
        Self {
            n_spins,
            omega_c: 0.0,
            omega_a: 0.0,
            omega_cat: 0.0,
            j: 0.0,
            g: 0.0,
            lambda: 0.0,
            kappa: 0.0,
            gamma: 0.0,
            gamma_per_spin: None,
            temperature: 0.0,
            k_b: 1.0,
            photon_cutoff,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.n_spins >= 1, "n_spins", "must be at least 1")?;
        require(self.photon_cutoff >= 1, "photon_cutoff", "must be at least 1")?;
        let nonneg = [
            ("omega_c", self.omega_c),
            ("omega_a", self.omega_a),
            ("omega_cat", self.omega_cat),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("temperature", self.temperature),
            ("k_b", self.k_b),
        ];
        for (field, v) in nonneg {
            require(v.is_finite() && v >= 0.0, field, "must be finite and nonnegative")?;
        }
        for (field, v) in [("j", self.j), ("g", self.g), ("lambda", self.lambda)] {
            require(v.is_finite(), field, "must be finite")?;
        }
        if let Some(rates) = &self.gamma_per_spin {
            require(
                rates.len() == self.n_spins,
                "gamma_per_spin",
                "needs one rate per spin",
            )?;
            require(
                rates.iter().all(|r| r.is_finite() && *r >= 0.0),
                "gamma_per_spin",
                "rates must be finite and nonnegative",
            )?;
        }
        Ok(())
    }

    /// Relaxation rate of spin `i` (0-based).
    pub fn spin_gamma(&self, i: usize) -> f64 {
        self.gamma_per_spin
            .as_ref()
            .map_or(self.gamma, |r| r[i])
    }

    /// `[cavity, spin_1 .. spin_N, catalyst]`
    pub fn signature(&self) -> Result<HilbertSignature> {
        self.signature_with_cap(DEFAULT_DIMENSION_CAP)
    }

    pub fn signature_with_cap(&self, cap: usize) -> Result<HilbertSignature> {
        self.validate()?;
        let mut dims = vec![self.photon_cutoff + 1];
        dims.extend(std::iter::repeat(2).take(self.n_spins));
        dims.push(2);
        HilbertSignature::with_cap(dims, cap)
    }

    pub fn catalyst_index(&self) -> usize {
        self.n_spins + 1
    }

    /// Subsystem indices of the battery spins.
    pub fn battery_indices(&self) -> Vec<usize> {
        (1..=self.n_spins).collect()
    }
}

/// Embedded ladder operators of the composite space, built once per parameter set.
#[derive(Debug, Clone)]
pub struct ModelOperators {
    pub signature: HilbertSignature,
    /// Cavity annihilation operator.
    pub a: Operator,
    /// Spin lowering operators, one per site.
    pub sigma: Vec<Operator>,
    /// Catalyst lowering operator.
    pub cat_lower: Operator,
    /// Catalyst `sigma_z`.
    pub cat_z: Operator,
}

impl ModelOperators {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let sig = p.signature()?;
        let a = embed(&annihilation(p.photon_cutoff)?, 0, &sig)?;
        let s = sigma_lowering();
        let sigma = (1..=p.n_spins)
            .map(|i| embed(&s, i, &sig))
            .collect::<Result<Vec<_>>>()?;
        let cat_lower = embed(&s, p.catalyst_index(), &sig)?;
        let cat_z = embed(&sigma_z(), p.catalyst_index(), &sig)?;
        Ok(Self {
            signature: sig,
            a,
            sigma,
            cat_lower,
            cat_z,
        })
    }

    pub fn number(&self) -> Operator {
        &self.a.dagger() * &self.a
    }

    /// `sum_i sigma_i^dagger sigma_i`
    pub fn spin_excitations(&self) -> Operator {
        self.sigma
            .iter()
            .fold(Operator::zeros(&self.signature), |acc, s| {
                &acc + &(&s.dagger() * s)
            })
    }

    /// `J sum_{i<N} (sigma_i^dagger sigma_{i+1} + h.c.)`, open chain.
    pub fn exchange(&self, j: f64) -> Operator {
        let mut acc = Operator::zeros(&self.signature);
        for pair in self.sigma.windows(2) {
            let hop = &pair[0].dagger() * &pair[1];
            acc = &acc + &(&hop + &hop.dagger());
        }
        acc.scale_re(j)
    }

    /// `g sum_i (a^dagger sigma_i + h.c.)`
    pub fn cavity_coupling(&self, g: f64) -> Operator {
        let ad = self.a.dagger();
        let mut acc = Operator::zeros(&self.signature);
        for s in &self.sigma {
            let t = &ad * s;
            acc = &acc + &(&t + &t.dagger());
        }
        acc.scale_re(g)
    }

    /// `lambda sum_i (sigma_+^cat sigma_i + h.c.)`
    pub fn catalyst_coupling(&self, lambda: f64) -> Operator {
        let up = self.cat_lower.dagger();
        let mut acc = Operator::zeros(&self.signature);
        for s in &self.sigma {
            let t = &up * s;
            acc = &acc + &(&t + &t.dagger());
        }
        acc.scale_re(lambda)
    }

    /// Total excitation number `a^dagger a + sum sigma^dagger sigma + sigma_+^cat sigma_-^cat`.
    pub fn excitation_number(&self) -> Operator {
        let cat = &self.cat_lower.dagger() * &self.cat_lower;
        &(&self.number() + &self.spin_excitations()) + &cat
    }
}

/// Excitation number of every product basis state, in composite-index order.
pub fn excitation_charges(sig: &HilbertSignature) -> Vec<i64> {
    (0..sig.total_dim())
        .map(|idx| sig.levels_of(idx).iter().map(|&l| l as i64).sum())
        .collect()
}

/// Free Hamiltonian `Omega_c a^dagger a + Omega_a sum sigma^dagger sigma + (Omega_cat/2) sigma_z^cat`.
pub fn build_h0(p: &ModelParams) -> Result<Operator> {
    let ops = ModelOperators::new(p)?;
    Ok(h0_from(&ops, p))
}

pub(crate) fn h0_from(ops: &ModelOperators, p: &ModelParams) -> Operator {
    let cav = ops.number().scale_re(p.omega_c);
    let spins = ops.spin_excitations().scale_re(p.omega_a);
    let cat = ops.cat_z.scale_re(p.omega_cat / 2.0);
    &(&cav + &spins) + &cat
}

/// Exchange + cavity-spin + catalyst-spin interaction.
pub fn build_hint(p: &ModelParams) -> Result<Operator> {
    let ops = ModelOperators::new(p)?;
    Ok(hint_from(&ops, p))
}

pub(crate) fn hint_from(ops: &ModelOperators, p: &ModelParams) -> Operator {
    &(&ops.exchange(p.j) + &ops.cavity_coupling(p.g)) + &ops.catalyst_coupling(p.lambda)
}

/// `H0 + H_int`
pub fn build_hamiltonian(p: &ModelParams) -> Result<Operator> {
    let ops = ModelOperators::new(p)?;
    Ok(&h0_from(&ops, p) + &hint_from(&ops, p))
}

/// `S^- = N^{-1/2} sum_i sigma_i^-` on the composite space.
pub fn collective_lowering(p: &ModelParams) -> Result<Operator> {
    let ops = ModelOperators::new(p)?;
    Ok(collective_lowering_from(&ops))
}

fn collective_lowering_from(ops: &ModelOperators) -> Operator {
    let n = ops.sigma.len() as f64;
    ops.sigma
        .iter()
        .fold(Operator::zeros(&ops.signature), |acc, s| &acc + s)
        .scale_re(1.0 / n.sqrt())
}

/// Collective form `sqrt(N) g (a^dagger S^- + a S^+) + sqrt(N) lambda (sigma_+^cat S^- + sigma_-^cat S^+)`.
///
/// Equals [`build_hint`] without the exchange term.
pub fn collective_hint(p: &ModelParams) -> Result<Operator> {
    let ops = ModelOperators::new(p)?;
    let s = collective_lowering_from(&ops);
    let rt = (p.n_spins as f64).sqrt();
    let cav = &ops.a.dagger() * &s;
    let cat = &ops.cat_lower.dagger() * &s;
    let cav = (&cav + &cav.dagger()).scale_re(rt * p.g);
    let cat = (&cat + &cat.dagger()).scale_re(rt * p.lambda);
    Ok(&cav + &cat)
}

/// Amplitude-matching catalyst coupling `-g / sqrt(N)`.
pub fn interference_lambda(g: f64, n_spins: usize) -> f64 {
    -g / (n_spins as f64).sqrt()
}

/// Symmetric single-excitation spin state `|W>` in the spin register alone.
fn w_amplitude(n: usize, spin_levels: &[usize]) -> f64 {
    if spin_levels.iter().sum::<usize>() == 1 {
        1.0 / (n as f64).sqrt()
    } else {
        0.0
    }
}

/// Quasi-dark dressed state
/// `(sqrt(N) lambda |W, cat=g> - g |0_spin, cat=e>) ⊗ |0_cav> / sqrt(N lambda^2 + g^2)`.
pub fn quasi_dark_state(p: &ModelParams) -> Result<StateVector> {
    let n = p.n_spins as f64;
    let weight = n * p.lambda * p.lambda + p.g * p.g;
    if weight <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "lambda",
            reason: "quasi-dark state undefined when g = lambda = 0".into(),
        });
    }
    let sig = p.signature()?;
    let cat = p.catalyst_index();
    let amps = (0..sig.total_dim())
        .map(|idx| {
            let lv = sig.levels_of(idx);
            if lv[0] != 0 {
                return c64::new(0.0, 0.0);
            }
            let spins = &lv[1..=p.n_spins];
            let amp = match lv[cat] {
                0 => n.sqrt() * p.lambda * w_amplitude(p.n_spins, spins),
                _ if spins.iter().all(|&s| s == 0) => -p.g,
                _ => 0.0,
            };
            c64::new(amp, 0.0)
        })
        .collect();
    StateVector::new(amps, sig)
}

/// `|| P_{n_cav >= 1} H_int |psi_QD> ||`: how strongly the quasi-dark state still
/// feeds the lossy cavity.
pub fn cavity_leak_residual(p: &ModelParams) -> Result<f64> {
    let psi = quasi_dark_state(p)?;
    let hint = build_hint(p)?;
    let v = crate::hilbert::apply(&hint, psi.amplitudes());
    let sig = psi.signature();
    Ok(v
        .iter()
        .enumerate()
        .filter(|(idx, _)| sig.levels_of(*idx)[0] > 0)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;

    fn small(n: usize) -> ModelParams {
        ModelParams {
            n_spins: n,
            photon_cutoff: 2,
            ..ModelParams::default()
        }
    }

    #[test]
    fn h0_ground_and_excited_energies() {
        let p = small(3);
        let h0 = build_h0(&p).unwrap();
        let sig = p.signature().unwrap();
        let ground = StateVector::basis(&sig, &[0, 0, 0, 0, 0]).unwrap();
        assert!((ground.expectation(&h0).re + 0.03).abs() < 1e-14);
        let charged = StateVector::basis(&sig, &[0, 1, 1, 1, 0]).unwrap();
        assert!((charged.expectation(&h0).re - (6.0 - 0.03)).abs() < 1e-14);
        assert!(h0.hermiticity_error() < 1e-15);
    }

    #[test]
    fn h0_is_diagonal_on_product_basis() {
        let p = small(2);
        let h0 = build_h0(&p).unwrap();
        let sig = p.signature().unwrap();
        for idx in 0..sig.total_dim() {
            let lv = sig.levels_of(idx);
            let k = (lv[1] + lv[2]) as f64;
            let sz = if lv[3] == 1 { 1.0 } else { -1.0 };
            let e = lv[0] as f64 * p.omega_c + k * p.omega_a + sz * p.omega_cat / 2.0;
            assert!((h0.get(idx, idx).re - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_parameters_give_zero_hamiltonians() {
        let p = ModelParams::zero(2, 2);
        assert_eq!(build_h0(&p).unwrap().max_abs(), 0.0);
        assert_eq!(build_hint(&p).unwrap().max_abs(), 0.0);
        assert_eq!(collective_hint(&p).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn exchange_matrix_element_two_spins() {
        let p = ModelParams {
            j: 1.0,
            g: 0.0,
            lambda: 0.0,
            ..small(2)
        };
        let h = build_hint(&p).unwrap();
        let sig = p.signature().unwrap();
        let ud = sig.index_of(&[0, 1, 0, 0]).unwrap();
        let du = sig.index_of(&[0, 0, 1, 0]).unwrap();
        assert!((h.get(ud, du) - c64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn open_chain_has_no_wraparound() {
        let p = ModelParams {
            j: 1.0,
            g: 0.0,
            lambda: 0.0,
            ..small(3)
        };
        let h = build_hint(&p).unwrap();
        let sig = p.signature().unwrap();
        let first = sig.index_of(&[0, 1, 0, 0, 0]).unwrap();
        let last = sig.index_of(&[0, 0, 0, 1, 0]).unwrap();
        assert_eq!(h.get(first, last), c64::new(0.0, 0.0));
    }

    #[test]
    fn hint_conserves_excitations() {
        let p = small(3);
        let ops = ModelOperators::new(&p).unwrap();
        let h = &h0_from(&ops, &p) + &hint_from(&ops, &p);
        assert!(h.hermiticity_error() < 1e-12);
        assert!(h.commutator(&ops.excitation_number()).max_abs() < 1e-12);
    }

    #[test]
    fn collective_form_matches_sitewise_sum() {
        let p = ModelParams {
            g: 0.3,
            lambda: 1.5,
            ..small(3)
        };
        let coll = collective_hint(&p).unwrap();
        let sitewise = build_hint(&ModelParams { j: 0.0, ..p.clone() }).unwrap();
        assert!(coll.max_abs_diff(&sitewise) < 1e-12);
        let ops = ModelOperators::new(&p).unwrap();
        let rebuilt = &coll + &ops.exchange(p.j);
        assert!(rebuilt.max_abs_diff(&build_hint(&p).unwrap()) < 1e-12);
    }

    #[test]
    fn collective_lowering_single_spin_and_w_state() {
        let p1 = small(1);
        let ops1 = ModelOperators::new(&p1).unwrap();
        assert!(collective_lowering(&p1).unwrap().max_abs_diff(&ops1.sigma[0]) < 1e-15);

        let p = small(3);
        let sig = p.signature().unwrap();
        let s = collective_lowering(&p).unwrap();
        let ops = ModelOperators::new(&p).unwrap();
        let vac = StateVector::basis(&sig, &[0, 0, 0, 0, 0]).unwrap();
        let mut w = vec![c64::new(0.0, 0.0); sig.total_dim()];
        for sp in &ops.sigma {
            let up = crate::hilbert::apply(&sp.dagger(), vac.amplitudes());
            for (x, y) in w.iter_mut().zip(up) {
                *x += y;
            }
        }
        let w = StateVector::new(w, sig.clone()).unwrap();
        let lowered = crate::hilbert::apply(&s, w.amplitudes());
        let overlap: c64 = vac
            .amplitudes()
            .iter()
            .zip(&lowered)
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap - c64::new(1.0, 0.0)).norm() < 1e-12);
        let sds = &s.dagger() * &s;
        assert!((w.expectation(&sds) - c64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn interference_condition_values() {
        assert_eq!(interference_lambda(0.0, 3), 0.0);
        assert!((interference_lambda(0.3, 3) + 0.173_205_080_756_887_7).abs() < 1e-15);
        assert_eq!(interference_lambda(0.3, 1), -0.3);
    }

    #[test]
    fn quasi_dark_limits_and_ratio() {
        let sig_of = |p: &ModelParams| p.signature().unwrap();
        let p = ModelParams {
            g: 0.0,
            lambda: 1.0,
            ..small(3)
        };
        let psi = quasi_dark_state(&p).unwrap();
        let sig = sig_of(&p);
        for k in 1..=3 {
            let mut lv = vec![0; 5];
            lv[k] = 1;
            let amp = psi.amplitudes()[sig.index_of(&lv).unwrap()];
            assert!((amp.re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }

        let p = ModelParams {
            g: 0.3,
            lambda: 0.0,
            ..small(3)
        };
        let psi = quasi_dark_state(&p).unwrap();
        let up = sig.index_of(&[0, 0, 0, 0, 1]).unwrap();
        assert!((psi.amplitudes()[up].norm() - 1.0).abs() < 1e-15);

        let p = ModelParams {
            g: 0.3,
            lambda: 1.5,
            ..small(3)
        };
        let psi = quasi_dark_state(&p).unwrap();
        let w_total = 3f64.sqrt() * psi.amplitudes()[sig.index_of(&[0, 1, 0, 0, 0]).unwrap()].re;
        let cat = psi.amplitudes()[up].re;
        assert!((w_total / cat + 8.660_254_037_844_386).abs() < 1e-12);
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        for (idx, a) in psi.amplitudes().iter().enumerate() {
            if sig.levels_of(idx)[0] > 0 {
                assert_eq!(*a, c64::new(0.0, 0.0));
            }
        }

        assert!(quasi_dark_state(&ModelParams::zero(3, 2)).is_err());
    }

    #[test]
    fn leak_residual_matches_hand_algebra() {
        // H_int only reaches the cavity through g a^dagger sigma_i acting on the
        // W branch: amplitude N |lambda g| / sqrt(N lambda^2 + g^2).
        for &lambda in &[-0.173_205_080_756_887_7, 0.5, 1.5] {
            let p = ModelParams {
                g: 0.3,
                lambda,
                ..small(3)
            };
            let expect = 3.0 * (lambda * 0.3).abs() / (3.0 * lambda * lambda + 0.09).sqrt();
            assert!((cavity_leak_residual(&p).unwrap() - expect).abs() < 1e-12);
        }
        let p = ModelParams {
            g: 0.3,
            lambda: 0.0,
            ..small(3)
        };
        assert_eq!(cavity_leak_residual(&p).unwrap(), 0.0);
    }

    #[test]
    fn validation_errors_name_the_field() {
        let p = ModelParams {
            kappa: -1.0,
            ..ModelParams::default()
        };
        match p.validate() {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "kappa"),
            other => panic!("{other:?}"),
        }
        let p = ModelParams {
            n_spins: 0,
            ..ModelParams::default()
        };
        assert!(p.validate().is_err());
    }
}
