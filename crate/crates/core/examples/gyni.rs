//! Guess-your-neighbour's-input expression: maxima over unrestricted sequential
//! correlations, over qubit realizations at level 1, and over classical strategies.

use seqdim::basis::{build_basis_seeded, BasisConfig};
use seqdim::certify::{max_finite, max_unrestricted, Objective};
use seqdim::experiments::classical_gyni_max;

fn main() {
    let objective = Objective::gyni();
    let scenario = objective.scenario();
    let unrestricted = max_unrestricted(scenario, &objective).unwrap();
    println!(
        "unrestricted  {:.6}  ({} variables, {} iterations)",
        unrestricted.value, unrestricted.variables, unrestricted.iterations
    );

    let basis = build_basis_seeded(scenario, 2, 1, 1, &BasisConfig::default()).unwrap();
    let qubit = max_finite(&basis, &objective).unwrap();
    println!(
        "qubit, k=1    {:.6}  (basis of {})",
        qubit.value,
        basis.cardinality()
    );
    println!("classical     {:.6}", classical_gyni_max());
}
