//! Optimization over moment-matrix relaxations and dimension certification by
//! generalized robustness.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{hermitian_coordinates, Basis};
use crate::linalg::{symmetric_eigen, CMat, RMat};
use crate::quantum::{sequence_operator, Behavior, MeasurementSet, MomentMatrix, StatePrep};
use crate::scenario::{product_unchecked, Letter, Scenario, Word, WordError, WordIndex};
use crate::sdp::{
    embed_hermitian, ConicProblem, ConicSolver, InteriorPoint, LmiBlock, SdpError, Solution,
    Status, Tolerances,
};

/// Verdict margin: a behavior is certified when `ν < 1 − CERTIFY_MARGIN`.
pub const CERTIFY_MARGIN: f64 = 1e-4;

const RANGE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CertifyError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Quantum(#[from] crate::quantum::QuantumError),
    #[error("scenario mismatch: expected {expected}, got {found}")]
    ScenarioMismatch { expected: Scenario, found: Scenario },
    #[error("objective word `{0}` is longer than the scenario allows")]
    WordTooLong(Word),
    #[error("solver ended with {status:?} after {iterations} iterations: {message}")]
    Solver {
        status: Status,
        iterations: usize,
        message: String,
    },
}

fn solver_error(sol: &Solution) -> CertifyError {
    CertifyError::Solver {
        status: sol.status,
        iterations: sol.iterations,
        message: sol.message.clone().unwrap_or_default(),
    }
}

/// Linear functional `Σ c · Re M_{u,v}` on moment matrices, with words of length at
/// most `l`. A diagonal objective `Σ γ_w M_{w,w}` is the usual Bell-type expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    scenario: Scenario,
    terms: Vec<(f64, Word, Word)>,
}

impl Objective {
    /// `Σ γ_w P(w)` for canonical words of length at most `l`.
    pub fn diagonal(scenario: Scenario, gammas: &[(Word, f64)]) -> Result<Self, CertifyError> {
        let terms = gammas
            .iter()
            .map(|(w, g)| (*g, w.clone(), w.clone()))
            .collect();
        Self::from_terms(scenario, terms)
    }

    pub fn from_terms(
        scenario: Scenario,
        terms: Vec<(f64, Word, Word)>,
    ) -> Result<Self, CertifyError> {
        for (c, u, v) in &terms {
            for w in [u, v] {
                scenario.validate(w)?;
                if w.len() > scenario.length() {
                    return Err(CertifyError::WordTooLong(w.clone()));
                }
            }
            if !c.is_finite() {
                return Err(CertifyError::Sdp(SdpError::Shape(
                    "non-finite objective coefficient".into(),
                )));
            }
        }
        Ok(Self { scenario, terms })
    }

    /// `Σ c_e P(e)` over events written with full outcomes `0..o` in measurement order.
    /// Each event operator is expanded by completeness into `Σ a_i Π_{u_i}`, so that
    /// `P(e) = Σ_ij a_i a_j Re M_{u_i,u_j}`.
    pub fn from_events(
        scenario: Scenario,
        events: &[(f64, Vec<Letter>)],
    ) -> Result<Self, CertifyError> {
        let mut terms = Vec::new();
        for (c, event) in events {
            let expansion = scenario.expand_event(event)?;
            for (a, u) in &expansion {
                for (b, v) in &expansion {
                    terms.push((c * a * b, u.clone(), v.clone()));
                }
            }
        }
        Self::from_terms(scenario, terms)
    }

    /// Sequential guess-your-neighbor's-input expression in 2-3-2:
    /// `P(000|000) + P(110|011) + P(011|101) + P(101|110)`.
    pub fn gyni() -> Self {
        let scenario = Scenario::new(2, 3, 2).expect("valid scenario");
        let event = |r: [usize; 3], s: [usize; 3]| -> (f64, Vec<Letter>) {
            (1.0, (0..3).map(|i| Letter::new(r[i], s[i])).collect())
        };
        let events = [
            event([0, 0, 0], [0, 0, 0]),
            event([1, 1, 0], [0, 1, 1]),
            event([0, 1, 1], [1, 0, 1]),
            event([1, 0, 1], [1, 1, 0]),
        ];
        Self::from_events(scenario, &events).expect("events are valid for 2-3-2")
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn terms(&self) -> &[(f64, Word, Word)] {
        &self.terms
    }

    /// `γ_w` per word when every term is diagonal.
    pub fn as_diagonal(&self) -> Option<BTreeMap<Word, f64>> {
        let mut out = BTreeMap::new();
        for (c, u, v) in &self.terms {
            if u != v {
                return None;
            }
            *out.entry(u.clone()).or_insert(0.0) += c;
        }
        Some(out)
    }

    /// Symmetric `C` with objective value `Σ_ab C_ab Re M_ab` over `index`.
    pub fn coefficient_matrix(&self, index: &WordIndex) -> Result<RMat, CertifyError> {
        if index.scenario() != self.scenario {
            return Err(CertifyError::ScenarioMismatch {
                expected: self.scenario,
                found: index.scenario(),
            });
        }
        let n = index.len();
        let mut c = RMat::zeros(n, n);
        for (coef, u, v) in &self.terms {
            let (Some(i), Some(j)) = (index.position(u), index.position(v)) else {
                return Err(CertifyError::WordTooLong(u.clone()));
            };
            c[(i, j)] += 0.5 * coef;
            c[(j, i)] += 0.5 * coef;
        }
        Ok(c)
    }

    pub fn value_on_moments(&self, moments: &MomentMatrix) -> Result<f64, CertifyError> {
        let c = self.coefficient_matrix(moments.index())?;
        Ok(weighted_real_sum(&c, moments.entries()))
    }

    /// Objective value on a quantum realization, from the Born rule directly.
    pub fn value_on_realization(&self, state: &StatePrep, measurements: &MeasurementSet) -> f64 {
        let mut cache: HashMap<&Word, CMat> = HashMap::new();
        let mut total = 0.0;
        for (c, u, v) in &self.terms {
            for w in [u, v] {
                cache
                    .entry(w)
                    .or_insert_with(|| sequence_operator(measurements, w));
            }
            let m = cache[u].adjoint() * &cache[v] * state.rho();
            total += c * m.trace().re;
        }
        total
    }

    /// Value on a behavior; only defined for diagonal objectives without the identity.
    pub fn value_on_behavior(&self, behavior: &Behavior) -> Option<f64> {
        let mut total = 0.0;
        for (c, u, v) in &self.terms {
            if u != v {
                return None;
            }
            total += c * if u.is_identity() {
                1.0
            } else {
                behavior.get(u)?
            };
        }
        Some(total)
    }
}

fn weighted_real_sum(c: &RMat, m: &CMat) -> f64 {
    c.iter().zip(m.iter()).map(|(a, z)| a * z.re).sum()
}

/// Result of a relaxation maximization.
#[derive(Debug, Clone)]
pub struct OptimumReport {
    pub value: f64,
    pub moments: CMat,
    pub status: Status,
    pub iterations: usize,
    pub gap: f64,
    pub variables: usize,
}

/// Maximizes `objective` over level-1 moment matrices of unrestricted dimension.
pub fn max_unrestricted(
    scenario: Scenario,
    objective: &Objective,
) -> Result<OptimumReport, CertifyError> {
    max_unrestricted_with(scenario, objective, 1, &InteriorPoint::default())
}

/// Unrestricted-dimension relaxation at level `k`: one variable per symbolic product
/// class, with `M_{u,v}` and `M_{v,u}` conjugate, zero products set to 0 and the
/// identity class fixed to 1.
pub fn max_unrestricted_with(
    scenario: Scenario,
    objective: &Objective,
    k: usize,
    solver: &dyn ConicSolver,
) -> Result<OptimumReport, CertifyError> {
    if objective.scenario() != scenario {
        return Err(CertifyError::ScenarioMismatch {
            expected: scenario,
            found: objective.scenario(),
        });
    }
    let index = scenario.enumerate_words(k)?;
    let n = index.len();
    let words = index.words();

    // Each class owns a real part and, unless it is its own reverse, an imaginary part.
    enum Entry {
        Zero,
        One,
        Class { re: usize, im: Option<(usize, f64)> },
    }
    let mut classes: HashMap<Word, (usize, Option<usize>)> = HashMap::new();
    let mut nvars = 0;
    let mut entries = Vec::with_capacity(n * n);
    for a in words {
        for b in words {
            let s = product_unchecked(a, b);
            let entry = if s.is_zero() {
                Entry::Zero
            } else if s.is_identity() {
                Entry::One
            } else {
                let rev = s.reversed();
                let (key, sign) = if s <= rev {
                    (s.clone(), 1.0)
                } else {
                    (rev.clone(), -1.0)
                };
                let palindrome = s == rev;
                let (re, im) = *classes.entry(key).or_insert_with(|| {
                    let re = nvars;
                    nvars += 1;
                    let im = (!palindrome).then(|| {
                        nvars += 1;
                        nvars - 1
                    });
                    (re, im)
                });
                Entry::Class {
                    re,
                    im: im.map(|i| (i, sign)),
                }
            };
            entries.push(entry);
        }
    }

    let mut f0 = CMat::zeros(n, n);
    let mut fs: Vec<CMat> = vec![CMat::zeros(n, n); nvars];
    for (pos, e) in entries.iter().enumerate() {
        let (i, j) = (pos / n, pos % n);
        match e {
            Entry::Zero => {}
            Entry::One => f0[(i, j)] = Complex64::new(1.0, 0.0),
            Entry::Class { re, im } => {
                fs[*re][(i, j)] += Complex64::new(1.0, 0.0);
                if let Some((v, sign)) = im {
                    fs[*v][(i, j)] += Complex64::new(0.0, *sign);
                }
            }
        }
    }
    let c = objective.coefficient_matrix(&index)?;
    let cost: Vec<f64> = fs.iter().map(|f| weighted_real_sum(&c, f)).collect();
    let constant = weighted_real_sum(&c, &f0);

    let mut problem = ConicProblem::new(cost);
    let coeffs: Vec<Option<CMat>> = fs.iter().cloned().map(Some).collect();
    problem.add_block(LmiBlock::hermitian(&f0, &coeffs)?)?;
    let sol = solver.solve(&problem);
    if !sol.is_optimal() {
        return Err(solver_error(&sol));
    }
    let mut moments = f0;
    for (f, &x) in fs.iter().zip(&sol.x) {
        moments += f * Complex64::new(x, 0.0);
    }
    Ok(OptimumReport {
        value: sol.objective + constant,
        moments,
        status: sol.status,
        iterations: sol.iterations,
        gap: sol.gap,
        variables: nvars,
    })
}

/// Basis elements restricted to the joint range of the span and embedded as real
/// symmetric matrices.
fn compressed_elements(basis: &Basis) -> Result<Vec<RMat>, CertifyError> {
    let q = basis.common_range(RANGE_TOL);
    basis
        .elements()
        .iter()
        .map(|e| {
            let mut r = q.adjoint() * e * &q;
            for i in 0..r.nrows() {
                for j in 0..i {
                    let avg = 0.5 * (r[(i, j)] + r[(j, i)].conj());
                    r[(i, j)] = avg;
                    r[(j, i)] = avg.conj();
                }
                r[(i, i)].im = 0.0;
            }
            Ok(embed_hermitian(&r)?)
        })
        .collect()
}

/// Maximizes `objective` over `M = Σ α_i M_i ⪰ 0` with `M_{1,1} = 1`.
pub fn max_finite(basis: &Basis, objective: &Objective) -> Result<OptimumReport, CertifyError> {
    max_finite_with(basis, objective, &InteriorPoint::default())
}

pub fn max_finite_with(
    basis: &Basis,
    objective: &Objective,
    solver: &dyn ConicSolver,
) -> Result<OptimumReport, CertifyError> {
    let c = objective.coefficient_matrix(basis.index())?;
    let cost: Vec<f64> = basis
        .elements()
        .iter()
        .map(|e| weighted_real_sum(&c, e))
        .collect();
    let blocks = compressed_elements(basis)?;
    let size = blocks.first().map_or(0, |b| b.nrows());
    let mut problem = ConicProblem::new(cost);
    problem.add_block(LmiBlock::new(
        RMat::zeros(size, size),
        blocks.into_iter().map(Some).collect(),
    )?)?;
    let corner: Vec<f64> = basis.elements().iter().map(|e| e[(0, 0)].re).collect();
    problem.add_equality(corner, 1.0)?;
    let sol = solver.solve(&problem);
    if !sol.is_optimal() {
        return Err(solver_error(&sol));
    }
    let n = basis.index().len();
    let mut moments = CMat::zeros(n, n);
    for (e, &a) in basis.elements().iter().zip(&sol.x) {
        moments += e * Complex64::new(a, 0.0);
    }
    Ok(OptimumReport {
        value: sol.objective,
        moments,
        status: sol.status,
        iterations: sol.iterations,
        gap: sol.gap,
        variables: basis.cardinality(),
    })
}

/// Linear dimension witness `Σ γ_w P(w) ≥ −x`, valid on `Q_d^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub scenario: Scenario,
    pub d: usize,
    pub k: usize,
    pub gamma: Vec<(Word, f64)>,
    pub x: f64,
    pub r: f64,
    pub nu: f64,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub basis_id: String,
    pub code_version: String,
}

impl Witness {
    /// `Σ γ_w P(w)`; `None` when the behavior lacks a witness word.
    pub fn value(&self, behavior: &Behavior) -> Option<f64> {
        self.gamma
            .iter()
            .map(|(w, g)| behavior.get(w).map(|p| g * p))
            .sum()
    }

    /// `Σ γ P + x`; negative means the behavior violates the witness.
    pub fn margin(&self, behavior: &Behavior) -> Option<f64> {
        self.value(behavior).map(|v| v + self.x)
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            gamma: self
                .gamma
                .iter()
                .map(|(w, g)| (w.clone(), g * lambda))
                .collect(),
            x: self.x * lambda,
            r: self.r * lambda,
            ..self.clone()
        }
    }
}

/// Serialized witness: the artifact carried to an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessJson {
    pub scenario: Scenario,
    pub d: usize,
    pub k: usize,
    pub gamma: BTreeMap<String, f64>,
    pub x: f64,
    pub r: f64,
    pub nu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl From<&Witness> for WitnessJson {
    fn from(w: &Witness) -> Self {
        Self {
            scenario: w.scenario,
            d: w.d,
            k: w.k,
            gamma: w.gamma.iter().map(|(k, g)| (k.to_string(), *g)).collect(),
            x: w.x,
            r: w.r,
            nu: w.nu,
            provenance: w.provenance.clone(),
        }
    }
}

impl TryFrom<WitnessJson> for Witness {
    type Error = CertifyError;

    fn try_from(j: WitnessJson) -> Result<Self, Self::Error> {
        let mut gamma = j
            .gamma
            .iter()
            .map(|(k, g)| {
                let w: Word = k.parse()?;
                j.scenario.validate(&w)?;
                Ok((w, *g))
            })
            .collect::<Result<Vec<_>, WordError>>()?;
        gamma.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self {
            scenario: j.scenario,
            d: j.d,
            k: j.k,
            gamma,
            x: j.x,
            r: j.r,
            nu: j.nu,
            provenance: j.provenance,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RobustnessResult {
    pub nu: f64,
    pub eta: f64,
    pub witness: Witness,
    pub status: Status,
    pub iterations: usize,
    pub gap: f64,
}

impl RobustnessResult {
    pub fn certified(&self) -> bool {
        self.nu < 1.0 - CERTIFY_MARGIN
    }
}

/// Prebuilt robustness program for one basis; solving for a behavior only adds the
/// equality rows.
#[derive(Debug, Clone)]
pub struct RobustnessProgram {
    scenario: Scenario,
    d: usize,
    k: usize,
    behavior_words: Vec<(usize, Word)>,
    /// `diagonals[i][w]`: diagonal entry of element `i` at behavior word `w`.
    diagonals: Vec<Vec<f64>>,
    corner: Vec<f64>,
    template: ConicProblem,
    basis_id: String,
    seed: Option<u64>,
}

impl RobustnessProgram {
    pub fn new(basis: &Basis) -> Result<Self, CertifyError> {
        let index = basis.index();
        let n = basis.cardinality();
        let behavior_words: Vec<(usize, Word)> = index
            .behavior_positions()
            .into_iter()
            .map(|p| (p, index.words()[p].clone()))
            .collect();
        let diagonals = basis
            .elements()
            .iter()
            .map(|e| behavior_words.iter().map(|(p, _)| e[(*p, *p)].re).collect())
            .collect();
        let corner = basis.elements().iter().map(|e| e[(0, 0)].re).collect();
        let blocks = compressed_elements(basis)?;
        let size = blocks.first().map_or(0, |b| b.nrows());

        // Variables: α (n), β (n), η.
        let mut cost = vec![0.0; 2 * n + 1];
        cost[2 * n] = 1.0;
        let mut template = ConicProblem::new(cost);
        let mut x_coeffs: Vec<Option<RMat>> = blocks.iter().cloned().map(Some).collect();
        x_coeffs.resize(2 * n + 1, None);
        let mut r_coeffs: Vec<Option<RMat>> = vec![None; n];
        r_coeffs.extend(blocks.into_iter().map(Some));
        r_coeffs.push(None);
        template.add_block(LmiBlock::new(RMat::zeros(size, size), x_coeffs)?)?;
        template.add_block(LmiBlock::new(RMat::zeros(size, size), r_coeffs)?)?;

        Ok(Self {
            scenario: basis.scenario(),
            d: basis.dim(),
            k: basis.level(),
            behavior_words,
            diagonals,
            corner,
            template,
            basis_id: format!(
                "{}-d{}-k{}-s{}",
                basis.scenario(),
                basis.dim(),
                basis.level(),
                basis.seed().map_or("none".to_string(), |s| s.to_string())
            ),
            seed: basis.seed(),
        })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// Builds the full conic problem for `behavior`.
    pub fn problem(&self, behavior: &Behavior) -> Result<ConicProblem, CertifyError> {
        if behavior.scenario() != self.scenario {
            return Err(CertifyError::ScenarioMismatch {
                expected: self.scenario,
                found: behavior.scenario(),
            });
        }
        let n = self.corner.len();
        let mut problem = self.template.clone();
        for (wi, (_, w)) in self.behavior_words.iter().enumerate() {
            let p = behavior
                .get(w)
                .ok_or_else(|| CertifyError::ScenarioMismatch {
                    expected: self.scenario,
                    found: behavior.scenario(),
                })?;
            let mut row = vec![0.0; 2 * n + 1];
            for i in 0..n {
                let v = self.diagonals[i][wi];
                row[i] = -v;
                row[n + i] = v;
            }
            row[2 * n] = p;
            problem.add_equality(row, 0.0)?;
        }
        let mut row = vec![0.0; 2 * n + 1];
        row[..n].copy_from_slice(&self.corner);
        problem.add_equality(row, 1.0)?;
        let mut row = vec![0.0; 2 * n + 1];
        row[n..2 * n].copy_from_slice(&self.corner);
        row[2 * n] = 1.0;
        problem.add_equality(row, 1.0)?;
        Ok(problem)
    }

    pub fn solve(
        &self,
        behavior: &Behavior,
        solver: &dyn ConicSolver,
    ) -> Result<RobustnessResult, CertifyError> {
        let problem = self.problem(behavior)?;
        let sol = solver.solve(&problem);
        if !sol.is_optimal() {
            return Err(solver_error(&sol));
        }
        let nb = self.behavior_words.len();
        let gamma = self
            .behavior_words
            .iter()
            .zip(&sol.y)
            .map(|((_, w), l)| (w.clone(), -l))
            .collect();
        let x = sol.y[nb];
        let r = sol.y[nb + 1];
        let nu = sol.dual_objective;
        Ok(RobustnessResult {
            nu,
            eta: sol.objective,
            witness: Witness {
                scenario: self.scenario,
                d: self.d,
                k: self.k,
                gamma,
                x,
                r,
                nu,
                provenance: Some(Provenance {
                    seed: self.seed,
                    basis_id: self.basis_id.clone(),
                    code_version: crate::basis::CODE_VERSION.to_string(),
                }),
            },
            status: sol.status,
            iterations: sol.iterations,
            gap: sol.gap,
        })
    }
}

/// Visibility of `behavior` against `Q_d^k` spanned by `basis`, with the witness read
/// off the equality multipliers.
pub fn robustness(behavior: &Behavior, basis: &Basis) -> Result<RobustnessResult, CertifyError> {
    robustness_with(behavior, basis, &InteriorPoint::default())
}

pub fn robustness_with(
    behavior: &Behavior,
    basis: &Basis,
    solver: &dyn ConicSolver,
) -> Result<RobustnessResult, CertifyError> {
    RobustnessProgram::new(basis)?.solve(behavior, solver)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessReport {
    pub checked: usize,
    pub violations: usize,
    pub min_margin: f64,
    /// Index of the first violating behavior.
    pub first_violator: Option<usize>,
}

/// Checks `Σ γ P ≥ −x − 1e-6` on every behavior.
pub fn verify_witness(witness: &Witness, behaviors: &[Behavior]) -> WitnessReport {
    let mut report = WitnessReport {
        checked: 0,
        violations: 0,
        min_margin: f64::INFINITY,
        first_violator: None,
    };
    for (i, b) in behaviors.iter().enumerate() {
        let Some(m) = witness.margin(b) else { continue };
        report.checked += 1;
        report.min_margin = report.min_margin.min(m);
        if m < -1e-6 {
            report.violations += 1;
            report.first_violator.get_or_insert(i);
        }
    }
    report
}

/// Orthonormal basis of the orthogonal complement of the span within `Herm(N)`.
fn complement_basis(basis: &Basis) -> Vec<CMat> {
    let n = basis.index().len();
    let dim = n * n;
    let card = basis.cardinality();
    let mut proj = RMat::identity(dim, dim);
    for e in basis.elements() {
        let v = nalgebra::DVector::from_vec(hermitian_coordinates(e));
        proj -= &v * v.transpose();
    }
    let (_, vectors) = symmetric_eigen(&proj);
    // Eigenvalues ascend; the complement has eigenvalue one.
    (card..dim)
        .map(|i| from_hermitian_coordinates(vectors.column(i).as_slice(), n))
        .collect()
}

fn from_hermitian_coordinates(v: &[f64], n: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut p = n;
    for j in 0..n {
        for i in 0..j {
            let z = Complex64::new(s * v[p], s * v[p + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            p += 2;
        }
    }
    m
}

/// Solves the dual of the robustness program explicitly:
/// minimize `x + r` subject to `r = 1 + Σ γ P`, `D(γ) + x E₀₀ − A ⪰ 0`,
/// `r E₀₀ − D(γ) − B ⪰ 0`, with `A`, `B` orthogonal to every basis element.
///
/// The complement of the span is parametrized densely, so this is meant for small
/// index sets.
pub fn dual_direct(behavior: &Behavior, basis: &Basis) -> Result<Witness, CertifyError> {
    dual_direct_with(behavior, basis, &InteriorPoint::new(Tolerances::default()))
}

pub fn dual_direct_with(
    behavior: &Behavior,
    basis: &Basis,
    solver: &dyn ConicSolver,
) -> Result<Witness, CertifyError> {
    if behavior.scenario() != basis.scenario() {
        return Err(CertifyError::ScenarioMismatch {
            expected: basis.scenario(),
            found: behavior.scenario(),
        });
    }
    let index = basis.index();
    let n = index.len();
    let words: Vec<(usize, Word)> = index
        .behavior_positions()
        .into_iter()
        .map(|p| (p, index.words()[p].clone()))
        .collect();
    let nb = words.len();
    let comp = complement_basis(basis);
    let nc = comp.len();
    // Variables: γ (nb), x, r, a (nc), b (nc).
    let nv = nb + 2 + 2 * nc;
    let mut cost = vec![0.0; nv];
    cost[nb] = -1.0;
    cost[nb + 1] = -1.0;
    let unit = |i: usize| {
        let mut m = CMat::zeros(n, n);
        m[(i, i)] = Complex64::new(1.0, 0.0);
        m
    };
    let zero = CMat::zeros(n, n);

    let mut lower: Vec<Option<CMat>> = vec![None; nv];
    let mut upper: Vec<Option<CMat>> = vec![None; nv];
    for (wi, (p, _)) in words.iter().enumerate() {
        lower[wi] = Some(unit(*p));
        upper[wi] = Some(-unit(*p));
    }
    lower[nb] = Some(unit(0));
    upper[nb + 1] = Some(unit(0));
    for (j, c) in comp.iter().enumerate() {
        lower[nb + 2 + j] = Some(-c);
        upper[nb + 2 + nc + j] = Some(-c);
    }
    let mut problem = ConicProblem::new(cost);
    problem.add_block(LmiBlock::hermitian(&zero, &lower)?)?;
    problem.add_block(LmiBlock::hermitian(&zero, &upper)?)?;
    let mut row = vec![0.0; nv];
    for (wi, (_, w)) in words.iter().enumerate() {
        row[wi] = -behavior.get(w).ok_or(CertifyError::ScenarioMismatch {
            expected: basis.scenario(),
            found: behavior.scenario(),
        })?;
    }
    row[nb + 1] = 1.0;
    problem.add_equality(row, 1.0)?;
    let sol = solver.solve(&problem);
    if !sol.is_optimal() {
        return Err(solver_error(&sol));
    }
    let gamma = words
        .iter()
        .zip(&sol.x)
        .map(|((_, w), g)| (w.clone(), *g))
        .collect();
    Ok(Witness {
        scenario: basis.scenario(),
        d: basis.dim(),
        k: basis.level(),
        gamma,
        x: sol.x[nb],
        r: sol.x[nb + 1],
        nu: -sol.objective,
        provenance: None,
    })
}
