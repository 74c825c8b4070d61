use catbattery::cli::config::RunConfig;
use catbattery::cli::run::simulate_params;
use catbattery::evolve::steady_state;
use catbattery::observables::{BatteryHamiltonianMode, ObservableSet};
use catbattery::ModelParams;

fn ergotropy_series(dt: f64, stride: usize, dir: &std::path::Path) -> Vec<(f64, f64)> {
    let mut cfg = RunConfig::default();
    cfg.integrator.dt = dt;
    cfg.integrator.snapshot_stride = stride;
    let path = dir.join(format!("dt={dt}.csv"));
    simulate_params(&cfg, &cfg.params, Some(&path)).unwrap();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(&path).unwrap();
    reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn baseline_step_halving() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = ergotropy_series(0.005, 100, dir.path());
    let fine = ergotropy_series(0.0025, 200, dir.path());
    assert_eq!(coarse.len(), fine.len());
    let mut worst: f64 = 0.0;
    for ((t1, w1), (t2, w2)) in coarse.iter().zip(&fine) {
        assert!((t1 - t2).abs() < 1e-9);
        worst = worst.max((w1 - w2).abs());
    }
    println!("max ergotropy difference dt 0.005 vs 0.0025 to t=500: {worst:.3e}");
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn steady_ergotropy_converges_in_photon_cutoff() {
    let w: Vec<f64> = (5..=7)
        .map(|cutoff| {
            let p = ModelParams {
                photon_cutoff: cutoff,
                ..ModelParams::default()
            };
            let rho = steady_state(&p).unwrap();
            let obs = ObservableSet::new(&p, BatteryHamiltonianMode::LocalPlusExchange).unwrap();
            obs.evaluate(&rho).unwrap().ergotropy
        })
        .collect();
    println!("steady ergotropy at cutoff 5, 6, 7: {w:?}");
    assert!((w[2] - w[1]).abs() < (w[1] - w[0]).abs(), "{w:?}");
}
