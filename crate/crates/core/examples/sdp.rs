//! The conic solver on a small problem with a known answer: the largest eigenvalue of a
//! symmetric matrix as `min t  s.t.  t·I - A ⪰ 0`.

use seqdim::linalg::{symmetric_min_eigenvalue, RMat};
use seqdim::sdp::{solve, ConicProblem, LmiBlock, Tolerances};

fn main() {
    let a = RMat::from_row_slice(3, 3, &[2.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, 1.0]);
    // maximize -t subject to -A + t·I ⪰ 0
    let mut problem = ConicProblem::new(vec![-1.0]);
    problem
        .add_block(LmiBlock::new(-a.clone(), vec![Some(RMat::identity(3, 3))]).unwrap())
        .unwrap();
    let sol = solve(&problem, &Tolerances::default());
    let exact = -symmetric_min_eigenvalue(&(-a));
    println!(
        "status {:?} after {} iterations",
        sol.status, sol.iterations
    );
    println!("λ_max by SDP   {:.10}", -sol.objective);
    println!("λ_max by eigen {exact:.10}");
    println!("duality gap    {:.2e}", sol.gap);
}
