//! Dense semidefinite programs with block-diagonal linear matrix inequalities and
//! affine equalities.
//!
//! The standard form is
//!
//! ```text
//! maximize    cᵀx
//! subject to  F0_b + Σ_i x_i F_{b,i} ⪰ 0   for every block b
//!             E x = f
//! ```
//!
//! with dual
//!
//! ```text
//! minimize    Σ_b Tr(F0_b Z_b) + fᵀy
//! subject to  c_i + Σ_b Tr(F_{b,i} Z_b) = (Eᵀy)_i,   Z_b ⪰ 0.
//! ```

mod ipm;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_defect, CMat, RMat};

pub use ipm::InteriorPoint;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdpError {
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not symmetric (defect {0:e})")]
    NotSymmetric(f64),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// `F0 + Σ x_i F_i ⪰ 0` over real symmetric matrices. Absent coefficients are zero.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    constant: RMat,
    coefficients: Vec<Option<RMat>>,
}

fn symmetric_defect(a: &RMat) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

impl LmiBlock {
    pub fn new(constant: RMat, coefficients: Vec<Option<RMat>>) -> Result<Self, SdpError> {
        let s = constant.nrows();
        if constant.ncols() != s {
            return Err(SdpError::Shape("constant term is not square".into()));
        }
        for m in std::iter::once(&constant).chain(coefficients.iter().flatten()) {
            if m.nrows() != s || m.ncols() != s {
                return Err(SdpError::Shape(format!("expected {s}x{s} coefficients")));
            }
            let defect = symmetric_defect(m);
            if defect > 1e-10 {
                return Err(SdpError::NotSymmetric(defect));
            }
        }
        Ok(Self {
            constant,
            coefficients,
        })
    }

    /// Hermitian LMI, imposed through its real embedding.
    pub fn hermitian(constant: &CMat, coefficients: &[Option<CMat>]) -> Result<Self, SdpError> {
        let constant = embed_hermitian(constant)?;
        let coefficients = coefficients
            .iter()
            .map(|c| c.as_ref().map(embed_hermitian).transpose())
            .collect::<Result<_, _>>()?;
        Self::new(constant, coefficients)
    }

    /// `f0 + Σ x_i f_i ≥ 0`.
    pub fn scalar(constant: f64, coefficients: &[f64]) -> Self {
        let one = |v: f64| RMat::from_element(1, 1, v);
        Self {
            constant: one(constant),
            coefficients: coefficients
                .iter()
                .map(|&v| (v != 0.0).then(|| one(v)))
                .collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.constant.nrows()
    }

    pub fn constant(&self) -> &RMat {
        &self.constant
    }

    pub fn coefficients(&self) -> &[Option<RMat>] {
        &self.coefficients
    }

    /// `F0 + Σ x_i F_i`.
    pub fn value(&self, x: &[f64]) -> RMat {
        let mut v = self.constant.clone();
        for (f, &xi) in self.coefficients.iter().zip(x) {
            if let Some(f) = f {
                v += f * xi;
            }
        }
        v
    }
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn embed_hermitian(h: &CMat) -> Result<RMat, SdpError> {
    if !h.is_square() {
        return Err(SdpError::Shape("Hermitian matrix must be square".into()));
    }
    let defect = hermitian_defect(h);
    if defect > 1e-10 {
        return Err(SdpError::NotHermitian(defect));
    }
    let n = h.nrows();
    Ok(RMat::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

#[derive(Debug, Clone)]
pub struct ConicProblem {
    objective: Vec<f64>,
    blocks: Vec<LmiBlock>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
}

impl ConicProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            blocks: Vec::new(),
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    pub fn equalities(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.eq_rows, &self.eq_rhs)
    }

    pub fn add_block(&mut self, mut block: LmiBlock) -> Result<(), SdpError> {
        let n = self.num_vars();
        if block.coefficients.len() > n {
            return Err(SdpError::Shape(format!(
                "block has {} coefficients for {n} variables",
                block.coefficients.len()
            )));
        }
        block.coefficients.resize(n, None);
        self.blocks.push(block);
        Ok(())
    }

    pub fn add_equality(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), SdpError> {
        if row.len() != self.num_vars() {
            return Err(SdpError::Shape(format!(
                "equality row has {} entries for {} variables",
                row.len(),
                self.num_vars()
            )));
        }
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        Ok(())
    }

    /// Self-describing text form for cross-checking with other conic solvers.
    ///
    /// Lines: `vars n`, `objective c…`, then per block `block b size s`, `constant`
    /// followed by `s` rows, and `coef i` followed by `s` rows for every nonzero
    /// coefficient; finally `equalities p` followed by `p` lines `e… = f`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, v: &mut dyn Iterator<Item = f64>| {
            let cells: Vec<String> = v.map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        };
        let _ = writeln!(
            out,
            "# maximize c'x s.t. F0_b + sum_i x_i F_bi psd, E x = f"
        );
        let _ = writeln!(out, "vars {}", self.num_vars());
        out.push_str("objective ");
        row(&mut out, &mut self.objective.iter().copied());
        for (b, block) in self.blocks.iter().enumerate() {
            let s = block.size();
            let _ = writeln!(out, "block {b} size {s}");
            let _ = writeln!(out, "constant");
            for i in 0..s {
                row(&mut out, &mut block.constant.row(i).iter().copied());
            }
            for (i, f) in block.coefficients.iter().enumerate() {
                if let Some(f) = f {
                    let _ = writeln!(out, "coef {i}");
                    for r in 0..s {
                        row(&mut out, &mut f.row(r).iter().copied());
                    }
                }
            }
        }
        let _ = writeln!(out, "equalities {}", self.eq_rows.len());
        for (e, f) in self.eq_rows.iter().zip(&self.eq_rhs) {
            let cells: Vec<String> = e.iter().map(|x| format!("{x:e}")).collect();
            let _ = writeln!(out, "{} = {f:e}", cells.join(" "));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub gap: f64,
    pub max_iterations: usize,
    pub max_block_size: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            gap: 1e-8,
            max_iterations: 200,
            max_block_size: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    /// Primal variables.
    pub x: Vec<f64>,
    /// `cᵀx`.
    pub objective: f64,
    pub dual_objective: f64,
    /// Dual matrix per block.
    pub z: Vec<RMat>,
    /// Equality multipliers, in the sign convention of the module docs.
    pub y: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub message: Option<String>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub(crate) fn failed(status: Status, n: usize, message: impl Into<String>) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            objective: f64::NAN,
            dual_objective: f64::NAN,
            z: Vec::new(),
            y: Vec::new(),
            gap: f64::NAN,
            iterations: 0,
            trace: Vec::new(),
            message: Some(message.into()),
        }
    }
}

/// A conic backend. Implementations must be deterministic and reentrant.
pub trait ConicSolver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &ConicProblem) -> Solution;
}

/// Solves with the bundled interior-point method.
pub fn solve(problem: &ConicProblem, tolerances: &Tolerances) -> Solution {
    InteriorPoint::new(*tolerances).solve(problem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, symmetric_min_eigenvalue};
    use num_complex::Complex64;

    fn two_by_two() -> ConicProblem {
        let mut p = ConicProblem::new(vec![1.0]);
        let off = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        p.add_block(LmiBlock::new(RMat::identity(2, 2), vec![Some(off)]).unwrap())
            .unwrap();
        p
    }

    #[test]
    fn maximize_off_diagonal() {
        let sol = solve(&two_by_two(), &Tolerances::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-6, "{}", sol.x[0]);
    }

    #[test]
    fn equality_pins_value() {
        let mut p = two_by_two();
        p.add_equality(vec![1.0], 0.3).unwrap();
        let sol = solve(&p, &Tolerances::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective - 0.3).abs() < 1e-7);
    }

    #[test]
    fn embedding_examples() {
        let id = CMat::identity(2, 2);
        assert_eq!(embed_hermitian(&id).unwrap(), RMat::identity(4, 4));
        let i = Complex64::new(0.0, 1.0);
        let y = CMat::from_row_slice(
            2,
            2,
            &[Complex64::new(0.0, 0.0), i, -i, Complex64::new(0.0, 0.0)],
        );
        let mut ev: Vec<f64> = embed_hermitian(&y)
            .unwrap()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let h = CMat::from_fn(3, 3, |r, c| {
            Complex64::new((r + c) as f64, r as f64 - c as f64)
        });
        let lo = hermitian_eigenvalues(&h)[0];
        assert!((symmetric_min_eigenvalue(&embed_hermitian(&h).unwrap()) - lo).abs() < 1e-10);
        let bad = CMat::from_fn(2, 2, |r, _| Complex64::new(r as f64, 0.0));
        assert!(embed_hermitian(&bad).is_err());
    }

    #[test]
    fn shape_checks() {
        let mut p = ConicProblem::new(vec![1.0]);
        assert!(p.add_equality(vec![1.0, 2.0], 0.0).is_err());
        let too_many = LmiBlock::scalar(1.0, &[1.0, 1.0]);
        assert!(p.add_block(too_many).is_err());
        let asym = RMat::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(LmiBlock::new(asym, vec![]).is_err());
    }

    #[test]
    fn dump_lists_every_part() {
        let mut p = two_by_two();
        p.add_equality(vec![1.0], 0.3).unwrap();
        let text = p.dump();
        assert!(text.contains("vars 1"));
        assert!(text.contains("block 0 size 2"));
        assert!(text.contains("coef 0"));
        assert!(text.contains("equalities 1"));
    }
}
