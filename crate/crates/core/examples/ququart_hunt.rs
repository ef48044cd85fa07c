//! Searches 2-3-3 behaviors sampled in dimension four for one with no qutrit
//! realization, printing the behavior and its witness.

use seqdim::basis::{build_basis_seeded, BasisConfig};
use seqdim::certify::RobustnessProgram;
use seqdim::experiments::ququart_hunt;
use seqdim::sdp::InteriorPoint;
use seqdim::Scenario;

fn main() {
    let scenario: Scenario = "2-3-3".parse().unwrap();
    let basis = build_basis_seeded(scenario, 3, 1, 1, &BasisConfig::default()).unwrap();
    println!("qutrit basis: {} elements", basis.cardinality());
    let program = RobustnessProgram::new(&basis).unwrap();
    let outcome = ququart_hunt(&program, 4, 50, 1, &InteriorPoint::default());
    println!(
        "tried {} samples ({} solver failures)",
        outcome.tried, outcome.failures
    );
    match outcome.hit {
        Some(hit) => {
            println!(
                "sample {} (seed {}) certified with ν = {:.6}",
                hit.index, hit.seed, hit.nu
            );
            println!("{}", serde_json::to_string_pretty(&hit.witness).unwrap());
        }
        None => println!("no certified sample"),
    }
}
