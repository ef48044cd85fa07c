//! Estimates the probability that a random qutrit behavior is certified against qubits,
//! with a Wilson interval and a visibility histogram.

use seqdim::basis::{build_basis_seeded, BasisConfig};
use seqdim::certify::RobustnessProgram;
use seqdim::experiments::{
    estimate_probability, run_campaign, visibility_distribution, CampaignSpec,
};
use seqdim::sdp::InteriorPoint;
use seqdim::Scenario;

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .map_or(200, |s| s.parse().expect("sample count"));
    let scenario: Scenario = "3-2-2".parse().unwrap();
    let basis = build_basis_seeded(scenario, 2, 1, 1, &BasisConfig::default()).unwrap();
    let program = RobustnessProgram::new(&basis).unwrap();
    let spec = CampaignSpec::new(scenario, 3, 2, 1, n, 1);
    let campaign = run_campaign(&spec, &program, &InteriorPoint::default(), &|_| {});

    let est = estimate_probability(&campaign);
    println!(
        "P(certified) = {:.3}  95% CI [{:.3}, {:.3}]  ({} failures)",
        est.p_hat, est.lower, est.upper, est.failures
    );
    let dist = visibility_distribution(&campaign);
    println!("ν mean {:.4}, std {:.4}", dist.mean, dist.std_dev);
    let peak = dist.histogram.iter().copied().max().unwrap_or(0).max(1);
    for (i, &count) in dist.histogram.iter().enumerate().filter(|(_, &c)| c > 0) {
        let bar = "#".repeat((40 * count).div_ceil(peak));
        println!(
            "  [{:.2}, {:.2})  {bar} {count}",
            i as f64 / 50.0,
            (i + 1) as f64 / 50.0
        );
    }
}
