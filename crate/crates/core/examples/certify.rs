//! Certifies that a random qutrit behavior has no qubit realization, then checks the
//! extracted witness against fresh qubit behaviors.

use seqdim::basis::{build_basis_seeded, BasisConfig};
use seqdim::certify::{robustness, verify_witness};
use seqdim::experiments::{sample_realization, sample_seed};
use seqdim::Scenario;

fn main() {
    let scenario: Scenario = "3-2-2".parse().unwrap();
    let basis = build_basis_seeded(scenario, 2, 1, 1, &BasisConfig::default()).unwrap();

    let (_, _, behavior) = sample_realization(scenario, 3, sample_seed(1, 0)).unwrap();
    let result = robustness(&behavior, &basis).unwrap();
    println!(
        "visibility ν = {:.6} ({:?}, {} iterations)",
        result.nu, result.status, result.iterations
    );
    println!("certified: {}", result.certified());

    let witness = &result.witness;
    println!(
        "witness value on the behavior: {:.6}",
        witness.value(&behavior).unwrap()
    );
    let qubits: Vec<_> = (0..200)
        .map(|i| {
            sample_realization(scenario, 2, sample_seed(7, i))
                .unwrap()
                .2
        })
        .collect();
    let report = verify_witness(witness, &qubits);
    println!(
        "{} qubit behaviors, {} violations, smallest margin {:.3e}",
        report.checked, report.violations, report.min_margin
    );
}
