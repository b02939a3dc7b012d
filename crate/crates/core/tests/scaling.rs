//! Kept in its own binary so no other test competes for the cores while
//! timing.

use toral_core::harness::{run_campaign, CampaignConfig, CheckName};
use toral_core::system::SystemConfig;

fn u2() -> SystemConfig {
    SystemConfig::linear(vec![vec![0, 1, 0], vec![-1, 0, 1], vec![1, 0, 0]])
}

#[test]
fn runtime_scales_linearly_in_samples_and_disks() {
    let run = |n: usize, k: usize| {
        let mut cfg = CampaignConfig::new(u2(), 3, vec![CheckName::Theorem2]);
        cfg.estimators.integrated.samples = n;
        cfg.estimators.families.disks = k;
        // Best of two damps scheduler noise.
        (0..2).map(|_| run_campaign(&cfg).unwrap().timing.total_seconds).fold(f64::INFINITY, f64::min)
    };
    let small = run(500, 12);
    let large = run(1000, 24);
    assert!(large <= 2.5 * small, "{small} s → {large} s");
}
