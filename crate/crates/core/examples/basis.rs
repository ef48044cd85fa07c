//! Builds sampled bases of finite-dimensional moment matrices and compares their
//! cardinalities across dimensions, cross-checked against the rank oracle.

use rand::SeedableRng;
use seqdim::basis::{build_basis_seeded, classify, rank_oracle, BasisConfig};
use seqdim::Scenario;

fn main() {
    let cfg = BasisConfig::default();
    let scenario: Scenario = "3-2-2".parse().unwrap();

    let basis = build_basis_seeded(scenario, 2, 1, 1, &cfg).unwrap();
    let log = basis.norm_log();
    println!(
        "{scenario}, d=2: {} elements after {} candidates, separation {:.2e}",
        basis.cardinality(),
        log.len(),
        basis.separation()
    );
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let oracle = rank_oracle(scenario, 2, 1, 2 * basis.cardinality() + 20, &mut rng).unwrap();
    println!("rank oracle: {oracle}");

    let scenarios: Vec<Scenario> = ["2-2-2", "3-2-2", "2-3-2"]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let table = classify(&scenarios, &[2, 3, 4], 1, 1, &cfg, false);
    for row in &table.rows {
        let cells: Vec<String> = row
            .cells
            .iter()
            .map(|c| {
                format!(
                    "d={}: {}",
                    c.d,
                    c.cardinality.map_or("-".into(), |n| n.to_string())
                )
            })
            .collect();
        println!("{:>6}  {}", row.scenario.to_string(), cells.join("  "));
    }
}
