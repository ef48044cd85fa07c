//! Samples a random projective realization and prints its behavior as JSON.
//!
//! `cargo run --example simulate -- 3-2-2 3 0` samples a qutrit realization of the
//! 3-2-2 scenario from master seed 1, sample index 0.

use seqdim::experiments::{sample_realization, sample_seed};
use seqdim::quantum::{BehaviorJson, RealizationJson};
use seqdim::{moment_matrix, Scenario};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let scenario: Scenario = args
        .first()
        .map_or("3-2-2", String::as_str)
        .parse()
        .expect("scenario");
    let d: usize = args.get(1).map_or(Ok(3), |s| s.parse()).expect("dimension");
    let index: u64 = args
        .get(2)
        .map_or(Ok(0), |s| s.parse())
        .expect("sample index");

    let seed = sample_seed(1, index);
    let (state, measurements, behavior) = sample_realization(scenario, d, seed).expect("sampling");
    eprintln!(
        "purity {:.6}, projector defect {:.2e}",
        state.purity(),
        measurements.max_defect()
    );

    let index = scenario.enumerate_words(1).expect("words");
    let moments = moment_matrix(&state, &measurements, &index).expect("moments");
    let lambda_min = seqdim::linalg::min_eigenvalue(moments.entries());
    eprintln!(
        "moment matrix {}x{}, smallest eigenvalue {lambda_min:.2e}",
        index.len(),
        index.len()
    );

    if std::env::var_os("SEQDIM_REALIZATION").is_some() {
        let r = RealizationJson::new(&state, &measurements);
        println!("{}", serde_json::to_string_pretty(&r).unwrap());
    } else {
        println!(
            "{}",
            serde_json::to_string_pretty(&BehaviorJson::from(&behavior)).unwrap()
        );
    }
}
