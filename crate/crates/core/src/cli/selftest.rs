//! Quick oracle checks runnable from the command line.

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::DensityMatrix;
use crate::evolve::{propagate_generator, IntegratorConfig};
use crate::hilbert::{annihilation, sigma_lowering, HilbertSignature, Operator};
use crate::lindblad::{
    build_generator, build_liouvillian, cavity_thermal_dissipator, liouvillian_spectrum, vectorize,
    DissipatorMode, DissipatorSpec, Generator,
};
use crate::model::ModelParams;
use crate::observables::ergotropy;

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_state(rng: &mut ChaCha8Rng, sig: &HilbertSignature) -> Operator {
    let d = sig.total_dim();
    let m = Mat::from_fn(d, d, |_, _| c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let a = Operator::new(m, sig.clone()).expect("square");
    let p = &a * &a.dagger();
    let tr = p.trace().re;
    p.scale_re(1.0 / tr)
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

fn ergotropy_oracle(rng: &mut ChaCha8Rng) -> crate::Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let sig = HilbertSignature::new(vec![2 + k % 4])?;
        let rho = DensityMatrix::from_operator_unchecked(random_state(rng, &sig));
        let h = random_state(rng, &sig).hermitian_part();
        let occ = rho.operator().hermitian_eigenvalues()?;
        let eps = h.hermitian_eigenvalues()?;
        let min = permutations(occ.len())
            .iter()
            .map(|perm| perm.iter().enumerate().map(|(i, &j)| occ[i] * eps[j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let w = ergotropy(&rho, &h)?.ergotropy;
        worst = worst.max((w - (rho.expectation(&h) - min)).abs());
    }
    Ok(worst)
}

fn qubit_decay() -> crate::Result<f64> {
    let s = sigma_lowering();
    let gen = Generator::new((&s.dagger() * &s).scale_re(1.0))
        .with_dissipator(DissipatorSpec::new(s.clone(), 0.1)?)?;
    let rho = DensityMatrix::new(Operator::diagonal(s.signature(), &[0.0, 1.0])?)?;
    let cfg = IntegratorConfig {
        dt: 0.001,
        snapshot_stride: 1000,
        ..IntegratorConfig::default()
    };
    let traj = propagate_generator(&gen, &rho, &cfg, 10.0)?;
    Ok(traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, st)| (st.operator().get(1, 1).re - (-0.1 * t).exp()).abs())
        .fold(0.0, f64::max))
}

fn routes_agree(rng: &mut ChaCha8Rng) -> crate::Result<f64> {
    let p = ModelParams {
        n_spins: 2,
        photon_cutoff: 2,
        ..ModelParams::default()
    };
    let gen = build_generator(&p, DissipatorMode::Standard)?;
    let sup = gen.superoperator()?;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let rho = random_state(rng, gen.signature());
        let a = gen.apply(&rho)?;
        worst = worst.max(a.max_abs_diff(&gen.apply_dense(&rho)?));
        worst = worst.max(a.max_abs_diff(&sup.apply_operator(&rho)?));
    }
    Ok(worst)
}

fn trace_functional() -> crate::Result<f64> {
    let p = ModelParams {
        photon_cutoff: 2,
        ..ModelParams::default()
    };
    let l = build_liouvillian(&p, DissipatorMode::Standard)?;
    let id = vectorize(&Operator::identity(l.signature()));
    Ok(l.left_apply(&id).iter().map(|x| x.norm()).fold(0.0, f64::max))
}

fn literal_witness() -> crate::Result<f64> {
    let a = annihilation(3)?;
    let one = Operator::diagonal(a.signature(), &[0.0, 1.0, 0.0, 0.0])?;
    Ok(cavity_thermal_dissipator(&a, 0.15, 1.0, &one, DissipatorMode::PaperLiteral)?
        .trace()
        .re)
}

fn qubit_spectrum() -> crate::Result<f64> {
    let s = sigma_lowering();
    let gen = Generator::new((&s.dagger() * &s).scale_re(1.7))
        .with_dissipator(DissipatorSpec::new(s, 0.3)?)?;
    let spec = liouvillian_spectrum(&gen.superoperator()?)?;
    let expect = [
        c64::new(0.0, 0.0),
        c64::new(-0.15, -1.7),
        c64::new(-0.15, 1.7),
        c64::new(-0.3, 0.0),
    ];
    Ok(spec
        .eigenvalues
        .iter()
        .zip(expect)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// Runs every check with randomness drawn from `seed`.
pub fn run(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut push = |name: &'static str, value: crate::Result<f64>, ok: &dyn Fn(f64) -> bool| {
        let (passed, detail) = match value {
            Ok(v) => (ok(v), format!("{v:e}")),
            Err(e) => (false, e.to_string()),
        };
        out.push(Check {
            name,
            passed,
            detail,
        });
    };
    push("ergotropy vs permutation oracle", ergotropy_oracle(&mut rng), &|v| v < 1e-10);
    push("qubit decay vs exp(-gamma t)", qubit_decay(), &|v| v < 1e-8);
    push("qubit Liouvillian spectrum", qubit_spectrum(), &|v| v < 1e-9);
    push("generator routes agree", routes_agree(&mut rng), &|v| v < 1e-12);
    push("trace functional is left null", trace_functional(), &|v| v < 1e-10);
    push("literal dissipator trace on |1><1|", literal_witness(), &|v| {
        (v - 0.15).abs() < 1e-14
    });
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run(1) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
