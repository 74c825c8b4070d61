//! Figures of merit extracted from states: reduced states, subsystem energies,
//! ergotropy, quasi-dark overlap and purity.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::hilbert::{embed, sigma_lowering, sigma_z, HilbertSignature, Operator};
use crate::model::{quasi_dark_state, ModelParams};

/// Reduced state on the subsystems in `keep`, in their original order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let sig = rho.signature();
    let dims = sig.dims();
    if keep.is_empty() {
        return Err(Error::InvalidParameter {
            field: "keep",
            reason: "at least one subsystem must be kept".into(),
        });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::InvalidParameter {
            field: "keep",
            reason: format!("subsystem {bad} out of range for {sig}"),
        });
    }
    let reduced_sig = HilbertSignature::new(kept.iter().map(|&k| dims[k]).collect())?;
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let d = sig.total_dim();
    let levels: Vec<Vec<usize>> = (0..d).map(|i| sig.levels_of(i)).collect();
    let reduced_index = |lv: &[usize]| kept.iter().fold(0, |acc, &k| acc * dims[k] + lv[k]);
    let traced_index = |lv: &[usize]| traced.iter().fold(0, |acc, &k| acc * dims[k] + lv[k]);
    let rd = reduced_sig.total_dim();
    let mut m = Mat::<c64>::zeros(rd, rd);
    let full = rho.operator().matrix();
    for c in 0..d {
        let (lc, tc) = (reduced_index(&levels[c]), traced_index(&levels[c]));
        for r in 0..d {
            if traced_index(&levels[r]) == tc {
                m[(reduced_index(&levels[r]), lc)] += full[(r, c)];
            }
        }
    }
    Ok(DensityMatrix::from_operator_unchecked(Operator::new(
        m,
        reduced_sig,
    )?))
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgotropyReport {
    /// `Tr[rho H]`
    pub energy: f64,
    /// Energy of the passive state.
    pub passive_energy: f64,
    pub ergotropy: f64,
    /// Eigenvalues of `rho`, descending.
    pub eigen_occupations: Vec<f64>,
    /// Eigenvalues of `H`, ascending.
    pub eigen_energies: Vec<f64>,
}

const HERMITIAN_TOL: f64 = 1e-10;

/// Maximum work extractable by cyclic unitaries: `Tr[rho H] - sum_k r_k eps_k`
/// with occupations descending against energies ascending.
pub fn ergotropy(rho: &DensityMatrix, h: &Operator) -> Result<ErgotropyReport> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: h.dim(),
        });
    }
    for (what, op) in [("state", rho.operator()), ("battery Hamiltonian", h)] {
        let dev = op.hermiticity_error();
        if dev > HERMITIAN_TOL * op.max_abs().max(1.0) {
            return Err(Error::NotHermitian {
                what,
                deviation: dev,
            });
        }
    }
    let mut occ = rho.operator().hermitian_part().hermitian_eigenvalues()?;
    occ.reverse();
    let energies = h.hermitian_part().hermitian_eigenvalues()?;
    let energy = rho.expectation(h);
    let passive_energy: f64 = occ.iter().zip(&energies).map(|(r, e)| r * e).sum();
    Ok(ErgotropyReport {
        energy,
        passive_energy,
        ergotropy: energy - passive_energy,
        eigen_occupations: occ,
        eigen_energies: energies,
    })
}

/// Which terms make up the battery Hamiltonian in the work functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryHamiltonianMode {
    /// `Omega_a sum_i sigma_i^dagger sigma_i`
    LocalOnly,
    /// Local terms plus the open-chain exchange `J`.
    #[default]
    LocalPlusExchange,
}

impl std::str::FromStr for BatteryHamiltonianMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "local" | "local_only" => Ok(Self::LocalOnly),
            "local+J" | "local+j" | "local_plus_exchange" => Ok(Self::LocalPlusExchange),
            other => Err(format!(
                "unknown battery Hamiltonian `{other}` (expected local or local+J)"
            )),
        }
    }
}

/// Battery Hamiltonian on the `N`-spin register alone.
pub fn battery_hamiltonian(p: &ModelParams, mode: BatteryHamiltonianMode) -> Result<Operator> {
    p.validate()?;
    let sig = HilbertSignature::new(vec![2; p.n_spins])?;
    let s = sigma_lowering();
    let sigma = (0..p.n_spins)
        .map(|i| embed(&s, i, &sig))
        .collect::<Result<Vec<_>>>()?;
    let mut h = Operator::zeros(&sig);
    for si in &sigma {
        h = &h + &(&si.dagger() * si).scale_re(p.omega_a);
    }
    if mode == BatteryHamiltonianMode::LocalPlusExchange {
        for w in sigma.windows(2) {
            let hop = &w[0].dagger() * &w[1];
            h = &h + &(&hop + &hop.dagger()).scale_re(p.j);
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Battery,
    Catalyst,
    Cavity,
}

/// Subsystem Hamiltonian embedded in the composite space.
pub fn subsystem_hamiltonian(
    which: Subsystem,
    p: &ModelParams,
    mode: BatteryHamiltonianMode,
) -> Result<Operator> {
    let sig = p.signature()?;
    match which {
        Subsystem::Battery => {
            let hb = battery_hamiltonian(p, mode)?;
            let ident_cav = Operator::identity(&HilbertSignature::new(vec![p.photon_cutoff + 1])?);
            let ident_cat = Operator::identity(&HilbertSignature::new(vec![2])?);
            let full = crate::hilbert::tensor(&[ident_cav, hb, ident_cat])?;
            Operator::new(full.into_matrix(), sig)
        }
        Subsystem::Catalyst => Ok(embed(&sigma_z(), p.catalyst_index(), &sig)?.scale_re(p.omega_cat / 2.0)),
        Subsystem::Cavity => {
            let a = embed(&crate::hilbert::annihilation(p.photon_cutoff)?, 0, &sig)?;
            Ok((&a.dagger() * &a).scale_re(p.omega_c))
        }
    }
}

/// `Tr[rho H_sub]`
pub fn subsystem_energy(
    rho: &DensityMatrix,
    which: Subsystem,
    p: &ModelParams,
    mode: BatteryHamiltonianMode,
) -> Result<f64> {
    let h = subsystem_hamiltonian(which, p, mode)?;
    if h.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    Ok(rho.expectation(&h))
}

/// Population of the quasi-dark dressed state.
pub fn dark_state_overlap(rho: &DensityMatrix, p: &ModelParams) -> Result<f64> {
    let psi = quasi_dark_state(p)?;
    if psi.signature().total_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.signature().total_dim(),
            found: rho.dim(),
        });
    }
    Ok(psi.expectation(rho.operator()).re.clamp(0.0, 1.0))
}

/// `Tr[rho^2]`
pub fn purity(rho: &DensityMatrix) -> f64 {
    let op = rho.operator();
    op.trace_product(op).re
}

/// Observables of one parameter set, prepared once and evaluated per snapshot.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    battery_h: Operator,
    h_batt: Operator,
    h_cat: Operator,
    h_cav: Operator,
    dark: Option<crate::hilbert::StateVector>,
    n_spins: usize,
    omega_a: f64,
}

/// One row of observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableRow {
    pub ergotropy: f64,
    pub ergotropy_per_spin: f64,
    pub ergotropy_per_capacity: f64,
    pub battery_energy: f64,
    pub catalyst_energy: f64,
    pub cavity_energy: f64,
    pub purity: f64,
    /// `NaN` when the quasi-dark state is undefined.
    pub dark_overlap: f64,
}

impl ObservableSet {
    pub fn new(p: &ModelParams, mode: BatteryHamiltonianMode) -> Result<Self> {
        Ok(Self {
            battery_h: battery_hamiltonian(p, mode)?,
            h_batt: subsystem_hamiltonian(Subsystem::Battery, p, mode)?,
            h_cat: subsystem_hamiltonian(Subsystem::Catalyst, p, mode)?,
            h_cav: subsystem_hamiltonian(Subsystem::Cavity, p, mode)?,
            dark: quasi_dark_state(p).ok(),
            n_spins: p.n_spins,
            omega_a: p.omega_a,
        })
    }

    pub fn battery_hamiltonian(&self) -> &Operator {
        &self.battery_h
    }

    pub fn evaluate(&self, rho: &DensityMatrix) -> Result<ObservableRow> {
        let keep: Vec<usize> = (1..=self.n_spins).collect();
        let reduced = partial_trace(rho, &keep)?;
        let w = ergotropy(&reduced, &self.battery_h)?.ergotropy;
        let n = self.n_spins as f64;
        Ok(ObservableRow {
            ergotropy: w,
            ergotropy_per_spin: w / n,
            ergotropy_per_capacity: w / (n * self.omega_a),
            battery_energy: rho.expectation(&self.h_batt),
            catalyst_energy: rho.expectation(&self.h_cat),
            cavity_energy: rho.expectation(&self.h_cav),
            purity: purity(rho),
            dark_overlap: self
                .dark
                .as_ref()
                .map_or(f64::NAN, |psi| psi.expectation(rho.operator()).re.clamp(0.0, 1.0)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{tensor, StateVector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> Mat<c64> {
        Mat::from_fn(d, d, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn random_state(rng: &mut ChaCha8Rng, sig: &HilbertSignature) -> DensityMatrix {
        let d = sig.total_dim();
        let a = Operator::new(random_matrix(rng, d), sig.clone()).unwrap();
        let p = &a * &a.dagger();
        let tr = p.trace().re;
        DensityMatrix::from_operator_unchecked(p.scale_re(1.0 / tr))
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, sig: &HilbertSignature) -> Operator {
        Operator::new(random_matrix(rng, sig.total_dim()), sig.clone())
            .unwrap()
            .hermitian_part()
    }

    fn random_unitary(rng: &mut ChaCha8Rng, sig: &HilbertSignature) -> Operator {
        let (_, u) = random_hermitian(rng, sig).hermitian_eigen().unwrap();
        Operator::new(u, sig.clone()).unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Minimum over every pairing of state eigenvalues with energy levels.
    fn brute_force_ergotropy(rho: &DensityMatrix, h: &Operator) -> f64 {
        let occ = rho.operator().hermitian_eigenvalues().unwrap();
        let eps = h.hermitian_eigenvalues().unwrap();
        let min = permutations(occ.len())
            .into_iter()
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| occ[i] * eps[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        rho.expectation(h) - min
    }

    #[test]
    fn sorted_formula_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..200 {
            let d = 2 + k % 5;
            let sig = HilbertSignature::new(vec![d]).unwrap();
            let rho = random_state(&mut rng, &sig);
            let h = random_hermitian(&mut rng, &sig);
            let w = ergotropy(&rho, &h).unwrap().ergotropy;
            assert!((w - brute_force_ergotropy(&rho, &h)).abs() < 1e-10);
            assert!(w > -1e-10);
        }
    }

    #[test]
    fn passive_and_inverted_states() {
        let sig = HilbertSignature::new(vec![2]).unwrap();
        let omega = 1.3;
        let h = Operator::diagonal(&sig, &[0.0, omega]).unwrap();
        let excited = DensityMatrix::new(Operator::diagonal(&sig, &[0.0, 1.0]).unwrap()).unwrap();
        let rep = ergotropy(&excited, &h).unwrap();
        assert_eq!(rep.ergotropy, omega);
        assert_eq!(rep.eigen_occupations, vec![1.0, 0.0]);
        let ground = DensityMatrix::new(Operator::diagonal(&sig, &[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(ergotropy(&ground, &h).unwrap().ergotropy, 0.0);
    }

    #[test]
    fn gibbs_states_are_passive() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in 2..=6 {
            let sig = HilbertSignature::new(vec![d]).unwrap();
            let h = random_hermitian(&mut rng, &sig);
            let (e, u) = h.hermitian_eigen().unwrap();
            let temp = rng.gen_range(0.3..3.0);
            let w: Vec<f64> = e.iter().map(|x| (-x / temp).exp()).collect();
            let z: f64 = w.iter().sum();
            let diag = Operator::diagonal(&sig, &w.iter().map(|x| x / z).collect::<Vec<_>>()).unwrap();
            let uo = Operator::new(u, sig.clone()).unwrap();
            let gibbs = DensityMatrix::from_operator_unchecked(&(&uo * &diag) * &uo.dagger());
            assert!(ergotropy(&gibbs, &h).unwrap().ergotropy.abs() < 1e-12);
        }
    }

    #[test]
    fn ergotropy_rejects_bad_inputs() {
        let sig = HilbertSignature::new(vec![2]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&sig);
        let bad = Operator::new(
            Mat::from_fn(2, 2, |i, j| c64::new(if i < j { 1.0 } else { 0.0 }, 0.0)),
            sig.clone(),
        )
        .unwrap();
        assert!(matches!(ergotropy(&rho, &bad), Err(Error::NotHermitian { .. })));
        let h3 = Operator::identity(&HilbertSignature::new(vec![3]).unwrap());
        assert!(ergotropy(&rho, &h3).is_err());
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sa = HilbertSignature::new(vec![2]).unwrap();
        let sb = HilbertSignature::new(vec![3]).unwrap();
        let ra = random_state(&mut rng, &sa);
        let rb = random_state(&mut rng, &sb);
        let prod = DensityMatrix::product(&[ra.clone(), rb.clone()]).unwrap();
        let back_a = partial_trace(&prod, &[0]).unwrap();
        let back_b = partial_trace(&prod, &[1]).unwrap();
        assert!(back_a.operator().max_abs_diff(ra.operator()) < 1e-14);
        assert!(back_b.operator().max_abs_diff(rb.operator()) < 1e-14);

        let sig = HilbertSignature::new(vec![2, 2]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(
            vec![c64::new(s, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(s, 0.0)],
            sig,
        )
        .unwrap();
        let red = partial_trace(&DensityMatrix::from_pure(&bell), &[1]).unwrap();
        let half = Operator::diagonal(red.signature(), &[0.5, 0.5]).unwrap();
        assert!(red.operator().max_abs_diff(&half) < 1e-15);

        assert!(partial_trace(&red, &[]).is_err());
        assert!(partial_trace(&red, &[1]).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let sig = HilbertSignature::new(vec![2, 3, 2]).unwrap();
        for _ in 0..100 {
            let rho = random_state(&mut rng, &sig);
            let keep: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.5)).collect();
            let keep = if keep.is_empty() { vec![1] } else { keep };
            let red = partial_trace(&rho, &keep).unwrap();
            assert!((red.operator().trace().re - 1.0).abs() < 1e-12);
            assert!(red.operator().hermiticity_error() < 1e-14);
        }
        let rho = random_state(&mut rng, &sig);
        let stepwise = partial_trace(&partial_trace(&rho, &[0, 1]).unwrap(), &[0]).unwrap();
        let direct = partial_trace(&rho, &[0]).unwrap();
        assert!(stepwise.operator().max_abs_diff(direct.operator()) < 1e-14);
    }

    #[test]
    fn unitary_relabeling_leaves_ergotropy_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sig = HilbertSignature::new(vec![4]).unwrap();
        for _ in 0..20 {
            let rho = random_state(&mut rng, &sig);
            let h = random_hermitian(&mut rng, &sig);
            let u = random_unitary(&mut rng, &sig);
            let rho2 = DensityMatrix::from_operator_unchecked(&(&u * rho.operator()) * &u.dagger());
            let h2 = &(&u * &h) * &u.dagger();
            let a = ergotropy(&rho, &h).unwrap().ergotropy;
            let b = ergotropy(&rho2, &h2.hermitian_part()).unwrap().ergotropy;
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn product_states_are_superadditive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let sa = HilbertSignature::new(vec![2]).unwrap();
        let sb = HilbertSignature::new(vec![3]).unwrap();
        let local = |ha: &Operator, hb: &Operator| {
            &tensor(&[ha.clone(), Operator::identity(&sb)]).unwrap()
                + &tensor(&[Operator::identity(&sa), hb.clone()]).unwrap()
        };
        for _ in 0..20 {
            let (ra, rb) = (random_state(&mut rng, &sa), random_state(&mut rng, &sb));
            let (ha, hb) = (random_hermitian(&mut rng, &sa), random_hermitian(&mut rng, &sb));
            let h = local(&ha, &hb);
            let joint = DensityMatrix::product(&[ra.clone(), rb.clone()]).unwrap();
            let w = ergotropy(&joint, &h).unwrap().ergotropy;
            let parts = ergotropy(&ra, &ha).unwrap().ergotropy + ergotropy(&rb, &hb).unwrap().ergotropy;
            assert!(w >= parts - 1e-12, "{w} < {parts}");
        }
        // pure products are additive: the passive state is the ground state
        for _ in 0..20 {
            let pure = |rng: &mut ChaCha8Rng, sig: &HilbertSignature| {
                let amps = (0..sig.total_dim())
                    .map(|_| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect::<Vec<_>>();
                let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                let v = StateVector::new(amps.iter().map(|a| a / n).collect(), sig.clone()).unwrap();
                DensityMatrix::from_pure(&v)
            };
            let (ra, rb) = (pure(&mut rng, &sa), pure(&mut rng, &sb));
            let (ha, hb) = (random_hermitian(&mut rng, &sa), random_hermitian(&mut rng, &sb));
            let joint = DensityMatrix::product(&[ra.clone(), rb.clone()]).unwrap();
            let w = ergotropy(&joint, &local(&ha, &hb)).unwrap().ergotropy;
            let parts = ergotropy(&ra, &ha).unwrap().ergotropy + ergotropy(&rb, &hb).unwrap().ergotropy;
            assert!((w - parts).abs() < 1e-10, "{w} vs {parts}");
        }
    }

    fn small() -> ModelParams {
        ModelParams {
            n_spins: 2,
            photon_cutoff: 2,
            ..ModelParams::default()
        }
    }

    #[test]
    fn subsystem_energy_examples() {
        let p = small();
        let sig = p.signature().unwrap();
        let mode = BatteryHamiltonianMode::LocalPlusExchange;
        let ground = DensityMatrix::from_pure(&StateVector::basis(&sig, &[0, 0, 0, 0]).unwrap());
        assert_eq!(subsystem_energy(&ground, Subsystem::Battery, &p, mode).unwrap(), 0.0);
        assert!(
            (subsystem_energy(&ground, Subsystem::Catalyst, &p, mode).unwrap() + p.omega_cat / 2.0).abs()
                < 1e-15
        );
        let plus = crate::evolve::InitialState {
            battery: crate::evolve::BatteryInit::AllGround,
            ..Default::default()
        }
        .build(&p)
        .unwrap();
        assert!(subsystem_energy(&plus, Subsystem::Catalyst, &p, mode).unwrap().abs() < 1e-15);
        let fock = DensityMatrix::from_pure(&StateVector::basis(&sig, &[2, 1, 0, 0]).unwrap());
        let e = subsystem_energy(&fock, Subsystem::Cavity, &p, mode).unwrap();
        assert!((e - 2.0 * p.omega_c).abs() < 1e-14);
        let eb = subsystem_energy(&fock, Subsystem::Battery, &p, mode).unwrap();
        assert!((eb - p.omega_a).abs() < 1e-14);
    }

    #[test]
    fn battery_hamiltonian_modes() {
        let p = small();
        let local = battery_hamiltonian(&p, BatteryHamiltonianMode::LocalOnly).unwrap();
        let full = battery_hamiltonian(&p, BatteryHamiltonianMode::LocalPlusExchange).unwrap();
        assert_eq!(local.dim(), 4);
        // |10> and |01> split by 2J.
        let ev = full.hermitian_eigenvalues().unwrap();
        let expect = [0.0, p.omega_a - p.j, p.omega_a + p.j, 2.0 * p.omega_a];
        for (x, y) in ev.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(local.is_hermitian(0.0));
        assert_eq!("local+J".parse::<BatteryHamiltonianMode>().unwrap(), BatteryHamiltonianMode::LocalPlusExchange);
        assert_eq!("local".parse::<BatteryHamiltonianMode>().unwrap(), BatteryHamiltonianMode::LocalOnly);
        assert!("global".parse::<BatteryHamiltonianMode>().is_err());
    }

    #[test]
    fn dark_overlap_examples() {
        let p = small();
        let psi = quasi_dark_state(&p).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!((dark_state_overlap(&rho, &p).unwrap() - 1.0).abs() < 1e-14);
        let sig = p.signature().unwrap();
        let two = DensityMatrix::from_pure(&StateVector::basis(&sig, &[0, 1, 1, 0]).unwrap());
        assert_eq!(dark_state_overlap(&two, &p).unwrap(), 0.0);
        let undefined = ModelParams {
            g: 0.0,
            lambda: 0.0,
            ..p
        };
        assert!(dark_state_overlap(&two, &undefined).is_err());
    }

    #[test]
    fn purity_bounds() {
        let sig = HilbertSignature::new(vec![2, 3]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(&sig);
        assert!((purity(&mixed) - 1.0 / 6.0).abs() < 1e-15);
        let pure = DensityMatrix::from_pure(&StateVector::basis(&sig, &[1, 2]).unwrap());
        assert_eq!(purity(&pure), 1.0);
        // Depolarizing with growing strength never raises purity.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_state(&mut rng, &sig);
        let mut last = purity(&rho);
        for k in 1..=10 {
            let q = k as f64 / 10.0;
            let mix = &rho.operator().scale_re(1.0 - q) + &mixed.operator().scale_re(q);
            let now = purity(&DensityMatrix::from_operator_unchecked(mix));
            assert!(now <= last + 1e-15);
            last = now;
        }
    }

    #[test]
    fn observable_set_matches_free_functions() {
        let p = small();
        let mode = BatteryHamiltonianMode::LocalPlusExchange;
        let rho = crate::evolve::InitialState::default().build(&p).unwrap();
        let set = ObservableSet::new(&p, mode).unwrap();
        let row = set.evaluate(&rho).unwrap();
        let reduced = partial_trace(&rho, &p.battery_indices()).unwrap();
        let w = ergotropy(&reduced, &battery_hamiltonian(&p, mode).unwrap()).unwrap().ergotropy;
        assert_eq!(row.ergotropy, w);
        assert!((row.ergotropy_per_capacity - w / (2.0 * p.omega_a)).abs() < 1e-15);
        assert_eq!(row.battery_energy, subsystem_energy(&rho, Subsystem::Battery, &p, mode).unwrap());
        assert!(row.catalyst_energy.abs() < 1e-15);
        assert_eq!(row.purity, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ergotropy_is_bounded(seed in any::<u64>(), d in 2usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sig = HilbertSignature::new(vec![d]).unwrap();
            let rho = random_state(&mut rng, &sig);
            let h = random_hermitian(&mut rng, &sig);
            let rep = ergotropy(&rho, &h).unwrap();
            prop_assert!(rep.ergotropy >= -1e-10);
            prop_assert!(rep.ergotropy <= rep.energy - rep.eigen_energies[0] + 1e-10);
            prop_assert!(rep.eigen_occupations.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn dark_overlap_is_a_probability(seed in any::<u64>(), lambda in -2.0f64..2.0) {
            let p = ModelParams { lambda, ..small() };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_state(&mut rng, &p.signature().unwrap());
            let x = dark_state_overlap(&rho, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }
}
