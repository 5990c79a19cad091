use ftmav::run_simulation;
use ftmav::scenarios::fdi_recovery;

const ONSET: f64 = 5.0;

fn isolation_time(noise: f64, seed: u64) -> Option<f64> {
    let mut c = fdi_recovery();
    c.sim.duration = 8.0;
    c.sim.gyro_noise_std = noise;
    c.sim.seed = seed;
    let log = run_simulation(&c).unwrap();
    assert!(!log.partial);
    log.rows.iter().filter(|r| r.t >= ONSET).find(|r| r.theta_hat[2] < 0.05).map(|r| r.t)
}

#[test]
fn estimator_stays_healthy_before_onset() {
    let mut c = fdi_recovery();
    c.sim.duration = ONSET;
    let log = run_simulation(&c).unwrap();
    assert!(log.rows.iter().all(|r| r.theta_hat.iter().all(|v| *v > 0.95)));
}

#[test]
fn isolation_survives_small_gyro_noise() {
    let clean = isolation_time(0.0, 0).expect("noiseless isolation");
    assert!(clean - ONSET <= 1.0);
    for seed in [1, 2, 3] {
        let t = isolation_time(1e-3, seed).expect("noisy isolation");
        assert!(t - ONSET <= 1.0, "seed {seed}: {t}");
    }
}
