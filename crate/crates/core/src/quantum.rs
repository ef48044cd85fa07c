//! Random qudit realizations, Born-rule statistics and moment matrices.
//!
//! States are sampled as `U|0⟩⟨0|U†` with Haar-random `U`. Each setting `s` gets its
//! own Haar-random unitary `U_s`, and the projector for outcome `r` is the sum of
//! `U_s|j⟩⟨j|U_s†` over the indices `j` binned to `r`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_defect, min_eigenvalue, trace, CMat, ONE, ZERO};
use crate::scenario::{Letter, Scenario, Word, WordIndex};

const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("dimension mismatch: state is {state}-dimensional, measurements are {measurements}-dimensional")]
    DimensionMismatch { state: usize, measurements: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid measurements: {0}")]
    InvalidMeasurements(String),
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("moment matrix does not match its word index: {0}")]
    InvalidMomentMatrix(String),
}

/// Haar-random `d × d` unitary from the QR factorization of a complex Ginibre matrix,
/// with column phases fixed so that `R` has a positive real diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMat, QuantumError> {
    if d == 0 {
        return Err(QuantumError::ZeroDimension);
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            ONE
        };
        q.column_mut(j).scale_mut(1.0);
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// A density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePrep {
    rho: CMat,
}

impl StatePrep {
    /// Validates trace one, hermiticity and positivity within `1e-10`.
    pub fn new(rho: CMat) -> Result<Self, QuantumError> {
        if !rho.is_square() || rho.nrows() == 0 {
            return Err(QuantumError::InvalidState(
                "not a non-empty square matrix".into(),
            ));
        }
        let defect = hermitian_defect(&rho);
        if defect > STATE_TOL {
            return Err(QuantumError::InvalidState(format!(
                "not Hermitian ({defect:e})"
            )));
        }
        let tr = trace(&rho);
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(QuantumError::InvalidState(format!("trace {tr} != 1")));
        }
        let lo = min_eigenvalue(&rho);
        if lo < -STATE_TOL {
            return Err(QuantumError::InvalidState(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(Self { rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized `ψ`.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self, QuantumError> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(QuantumError::InvalidState(format!(
                "vector norm {norm} != 1"
            )));
        }
        Self::new(psi * psi.adjoint())
    }

    /// `|j⟩⟨j|` in dimension `d`.
    pub fn basis_state(d: usize, j: usize) -> Result<Self, QuantumError> {
        if d == 0 {
            return Err(QuantumError::ZeroDimension);
        }
        let mut psi = DVector::from_element(d, ZERO);
        psi[j] = ONE;
        Self::pure(&psi)
    }

    pub fn maximally_mixed(d: usize) -> Result<Self, QuantumError> {
        if d == 0 {
            return Err(QuantumError::ZeroDimension);
        }
        Self::new(CMat::identity(d, d) / Complex64::new(d as f64, 0.0))
    }

    pub fn rho(&self) -> &CMat {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn purity(&self) -> f64 {
        trace(&(&self.rho * &self.rho)).re
    }
}

/// Haar-random pure state `U|0⟩⟨0|U†`.
pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<StatePrep, QuantumError> {
    let u = haar_unitary(d, rng)?;
    let psi = u.column(0).into_owned();
    Ok(StatePrep {
        rho: &psi * psi.adjoint(),
    })
}

/// Projective measurements for every setting of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    scenario: Scenario,
    dim: usize,
    /// `projectors[s][r]` for the full outcome range `0..o`.
    projectors: Vec<Vec<CMat>>,
    /// `bins[s][r]` lists the basis indices assigned to outcome `r`, when known.
    bins: Option<Vec<Vec<Vec<usize>>>>,
}

impl MeasurementSet {
    /// Builds `Π_{r|s} = Σ_{j ∈ B_{r|s}} U_s|j⟩⟨j|U_s†`.
    pub fn from_unitaries(
        scenario: Scenario,
        unitaries: &[CMat],
        bins: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self, QuantumError> {
        let m = scenario.settings();
        let o = scenario.outcomes();
        if unitaries.len() != m || bins.len() != m {
            return Err(QuantumError::InvalidMeasurements(format!(
                "expected {m} unitaries and bin partitions"
            )));
        }
        let d = unitaries[0].nrows();
        if d == 0 {
            return Err(QuantumError::ZeroDimension);
        }
        let mut projectors = Vec::with_capacity(m);
        for (u, partition) in unitaries.iter().zip(&bins) {
            if u.nrows() != d || u.ncols() != d {
                return Err(QuantumError::InvalidMeasurements("unitary shape".into()));
            }
            if partition.len() != o {
                return Err(QuantumError::InvalidMeasurements(format!(
                    "expected {o} bins per setting"
                )));
            }
            let mut seen = vec![false; d];
            for &j in partition.iter().flatten() {
                if j >= d || seen[j] {
                    return Err(QuantumError::InvalidMeasurements(
                        "bins must partition 0..d".into(),
                    ));
                }
                seen[j] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(QuantumError::InvalidMeasurements(
                    "bins must cover 0..d".into(),
                ));
            }
            let per_outcome = partition
                .iter()
                .map(|bin| {
                    let mut p = CMat::zeros(d, d);
                    for &j in bin {
                        let col = u.column(j);
                        p += col * col.adjoint();
                    }
                    p
                })
                .collect();
            projectors.push(per_outcome);
        }
        Ok(Self {
            scenario,
            dim: d,
            projectors,
            bins: Some(bins),
        })
    }

    /// Wraps explicit projectors `projectors[s][r]`, checking completeness,
    /// orthogonality and idempotency within `1e-10`.
    pub fn from_projectors(
        scenario: Scenario,
        projectors: Vec<Vec<CMat>>,
    ) -> Result<Self, QuantumError> {
        let m = scenario.settings();
        let o = scenario.outcomes();
        if projectors.len() != m || projectors.iter().any(|p| p.len() != o) {
            return Err(QuantumError::InvalidMeasurements(format!(
                "expected {m} settings with {o} projectors each"
            )));
        }
        let d = projectors[0][0].nrows();
        if d == 0 {
            return Err(QuantumError::ZeroDimension);
        }
        let set = Self {
            scenario,
            dim: d,
            projectors,
            bins: None,
        };
        let worst = set.max_defect();
        if worst > 1e-10 {
            return Err(QuantumError::InvalidMeasurements(format!(
                "projective measurement conditions violated by {worst:e}"
            )));
        }
        Ok(set)
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn projector(&self, outcome: usize, setting: usize) -> &CMat {
        &self.projectors[setting][outcome]
    }

    pub fn projectors(&self) -> &[Vec<CMat>] {
        &self.projectors
    }

    pub fn bins(&self) -> Option<&[Vec<Vec<usize>>]> {
        self.bins.as_deref()
    }

    /// True when some outcome has a zero projector (possible only for `d < o`).
    pub fn has_empty_outcomes(&self) -> bool {
        self.projectors
            .iter()
            .flatten()
            .any(|p| p.iter().all(|z| z.norm() == 0.0))
    }

    /// Largest violation of completeness, orthogonality or idempotency.
    pub fn max_defect(&self) -> f64 {
        let d = self.dim;
        let id = CMat::identity(d, d);
        let mut worst: f64 = 0.0;
        for per_setting in &self.projectors {
            let total: CMat = per_setting.iter().fold(CMat::zeros(d, d), |acc, p| acc + p);
            worst = worst.max((total - &id).norm());
            for (a, pa) in per_setting.iter().enumerate() {
                if pa.nrows() != d || pa.ncols() != d {
                    return f64::INFINITY;
                }
                worst = worst.max((pa * pa - pa).norm());
                worst = worst.max(hermitian_defect(pa));
                for pb in per_setting.iter().skip(a + 1) {
                    worst = worst.max((pa * pb).norm());
                }
            }
        }
        worst
    }
}

/// One Haar unitary per setting with a random binning of the basis indices.
///
/// For `d >= o` every index is assigned uniformly to an outcome and the assignment is
/// redrawn until no bin is empty. For `d < o` index `j` goes to outcome `j`, so the
/// outcomes `d..o` carry zero projectors.
pub fn random_measurements<R: Rng + ?Sized>(
    scenario: Scenario,
    d: usize,
    rng: &mut R,
) -> Result<MeasurementSet, QuantumError> {
    if d == 0 {
        return Err(QuantumError::ZeroDimension);
    }
    let o = scenario.outcomes();
    let mut unitaries = Vec::with_capacity(scenario.settings());
    let mut bins = Vec::with_capacity(scenario.settings());
    for _ in 0..scenario.settings() {
        unitaries.push(haar_unitary(d, rng)?);
        bins.push(random_bins(d, o, rng));
    }
    MeasurementSet::from_unitaries(scenario, &unitaries, bins)
}

fn random_bins<R: Rng + ?Sized>(d: usize, o: usize, rng: &mut R) -> Vec<Vec<usize>> {
    if d < o {
        return (0..o)
            .map(|r| if r < d { vec![r] } else { Vec::new() })
            .collect();
    }
    loop {
        let mut bins = vec![Vec::new(); o];
        for j in 0..d {
            bins[rng.random_range(0..o)].push(j);
        }
        if bins.iter().all(|b| !b.is_empty()) {
            return bins;
        }
    }
}

/// `Π_w = Π_{r_l|s_l} ⋯ Π_{r_1|s_1}`; the identity word maps to the identity and
/// `Zero` to the zero matrix.
pub fn sequence_operator(measurements: &MeasurementSet, word: &Word) -> CMat {
    let d = measurements.dim();
    if word.is_zero() {
        return CMat::zeros(d, d);
    }
    let mut op = CMat::identity(d, d);
    for &Letter { outcome, setting } in word.letters() {
        op = measurements.projector(outcome, setting) * op;
    }
    op
}

/// `Tr[Π_w ρ Π_w†]`.
pub fn born_probability(state: &StatePrep, measurements: &MeasurementSet, word: &Word) -> f64 {
    let op = sequence_operator(measurements, word);
    trace(&(&op * state.rho() * op.adjoint())).re
}

/// Post-measurement state after observing `word`, or `None` when its probability is
/// below `1e-14`.
pub fn luders_update(
    state: &StatePrep,
    measurements: &MeasurementSet,
    word: &Word,
) -> Option<StatePrep> {
    let op = sequence_operator(measurements, word);
    let unnorm = &op * state.rho() * op.adjoint();
    let p = trace(&unnorm).re;
    (p > 1e-14).then(|| StatePrep {
        rho: unnorm / Complex64::new(p, 0.0),
    })
}

/// Hermitian matrix of `Tr[Π_w† Π_{w'} ρ]` over a word index.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    index: WordIndex,
    entries: CMat,
}

impl MomentMatrix {
    pub fn new(index: WordIndex, entries: CMat) -> Result<Self, QuantumError> {
        let n = index.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(QuantumError::InvalidMomentMatrix(format!(
                "expected {n}x{n} entries"
            )));
        }
        Ok(Self { index, entries })
    }

    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    pub fn entries(&self) -> &CMat {
        &self.entries
    }

    pub fn into_entries(self) -> CMat {
        self.entries
    }

    pub fn entry(&self, row: &Word, col: &Word) -> Option<Complex64> {
        Some(self.entries[(self.index.position(row)?, self.index.position(col)?)])
    }
}

pub fn moment_matrix(
    state: &StatePrep,
    measurements: &MeasurementSet,
    index: &WordIndex,
) -> Result<MomentMatrix, QuantumError> {
    if state.dim() != measurements.dim() {
        return Err(QuantumError::DimensionMismatch {
            state: state.dim(),
            measurements: measurements.dim(),
        });
    }
    let ops: Vec<CMat> = index
        .words()
        .iter()
        .map(|w| sequence_operator(measurements, w))
        .collect();
    let right: Vec<CMat> = ops.iter().map(|op| op * state.rho()).collect();
    let n = ops.len();
    let mut entries = CMat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            // Tr[A† B] = Σ conj(A_kl) B_kl
            let v: Complex64 = ops[i]
                .iter()
                .zip(right[j].iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            entries[(i, j)] = v;
            entries[(j, i)] = v.conj();
        }
    }
    for i in 0..n {
        entries[(i, i)].im = 0.0;
    }
    Ok(MomentMatrix {
        index: index.clone(),
        entries,
    })
}

/// Probabilities of the observable words (length `1..=l`, reduced outcomes).
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    values: Vec<(Word, f64)>,
}

impl Behavior {
    /// Validates that `values` covers exactly the observable words of the scenario and
    /// that every probability lies in `[0, 1]` (within `1e-9`).
    pub fn new(scenario: Scenario, values: Vec<(Word, f64)>) -> Result<Self, QuantumError> {
        let index = scenario
            .enumerate_words(1)
            .map_err(|e| QuantumError::InvalidBehavior(e.to_string()))?;
        let expected: Vec<&Word> = index
            .behavior_positions()
            .into_iter()
            .map(|i| &index.words()[i])
            .collect();
        let mut by_word: BTreeMap<Word, f64> = BTreeMap::new();
        for (w, p) in values {
            if !p.is_finite() || !(-1e-9..=1.0 + 1e-9).contains(&p) {
                return Err(QuantumError::InvalidBehavior(format!(
                    "probability {p} for `{w}` outside [0, 1]"
                )));
            }
            if by_word.insert(w.clone(), p).is_some() {
                return Err(QuantumError::InvalidBehavior(format!(
                    "duplicate word `{w}`"
                )));
            }
        }
        if by_word.len() != expected.len() {
            return Err(QuantumError::InvalidBehavior(format!(
                "expected {} words for {scenario}, got {}",
                expected.len(),
                by_word.len()
            )));
        }
        let values = expected
            .into_iter()
            .map(|w| {
                by_word
                    .get(w)
                    .map(|&p| (w.clone(), p))
                    .ok_or_else(|| QuantumError::InvalidBehavior(format!("missing word `{w}`")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { scenario, values })
    }

    /// Born-rule statistics of a realization, computed directly.
    pub fn from_realization(
        state: &StatePrep,
        measurements: &MeasurementSet,
    ) -> Result<Self, QuantumError> {
        if state.dim() != measurements.dim() {
            return Err(QuantumError::DimensionMismatch {
                state: state.dim(),
                measurements: measurements.dim(),
            });
        }
        let scenario = measurements.scenario();
        let index = scenario
            .enumerate_words(1)
            .map_err(|e| QuantumError::InvalidBehavior(e.to_string()))?;
        let values = index
            .behavior_positions()
            .into_iter()
            .map(|i| {
                let w = index.words()[i].clone();
                let p = born_probability(state, measurements, &w);
                (w, p)
            })
            .collect();
        Ok(Self { scenario, values })
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn values(&self) -> &[(Word, f64)] {
        &self.values
    }

    pub fn get(&self, word: &Word) -> Option<f64> {
        self.values.iter().find(|(w, _)| w == word).map(|(_, p)| *p)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Diagonal entries for words of length `1..=l`.
pub fn behavior_of(moment: &MomentMatrix) -> Behavior {
    let index = moment.index();
    let values = index
        .behavior_positions()
        .into_iter()
        .map(|i| (index.words()[i].clone(), moment.entries()[(i, i)].re))
        .collect();
    Behavior {
        scenario: index.scenario(),
        values,
    }
}

/// JSON form of a complex matrix: rows of `[re, im]` pairs.
pub fn cmat_to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn cmat_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMat, String> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err("ragged matrix".into());
    }
    Ok(CMat::from_fn(n, c, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Serialized moment matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentMatrixJson {
    pub scenario: Scenario,
    pub level: usize,
    pub words: Vec<Word>,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl From<&MomentMatrix> for MomentMatrixJson {
    fn from(m: &MomentMatrix) -> Self {
        Self {
            scenario: m.index.scenario(),
            level: m.index.level(),
            words: m.index.words().to_vec(),
            entries: cmat_to_rows(&m.entries),
        }
    }
}

impl TryFrom<MomentMatrixJson> for MomentMatrix {
    type Error = QuantumError;

    fn try_from(j: MomentMatrixJson) -> Result<Self, Self::Error> {
        let index = j
            .scenario
            .enumerate_words(j.level)
            .map_err(|e| QuantumError::InvalidMomentMatrix(e.to_string()))?;
        if index.words() != j.words.as_slice() {
            return Err(QuantumError::InvalidMomentMatrix(
                "word list differs from the canonical index".into(),
            ));
        }
        let entries = cmat_from_rows(&j.entries).map_err(QuantumError::InvalidMomentMatrix)?;
        MomentMatrix::new(index, entries)
    }
}

/// Serialized behavior: scenario header plus a word-string to probability map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorJson {
    pub scenario: Scenario,
    pub probabilities: BTreeMap<String, f64>,
}

impl From<&Behavior> for BehaviorJson {
    fn from(b: &Behavior) -> Self {
        Self {
            scenario: b.scenario,
            probabilities: b.values.iter().map(|(w, p)| (w.to_string(), *p)).collect(),
        }
    }
}

impl TryFrom<BehaviorJson> for Behavior {
    type Error = QuantumError;

    fn try_from(j: BehaviorJson) -> Result<Self, Self::Error> {
        let values = j
            .probabilities
            .into_iter()
            .map(|(k, p)| {
                k.parse::<Word>()
                    .map(|w| (w, p))
                    .map_err(|e| QuantumError::InvalidBehavior(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Behavior::new(j.scenario, values)
    }
}

/// A full realization: state plus projectors, as carried in result files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizationJson {
    pub scenario: Scenario,
    pub dim: usize,
    pub rho: Vec<Vec<[f64; 2]>>,
    /// `projectors[s][r]`
    pub projectors: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<Vec<Vec<usize>>>>,
}

impl RealizationJson {
    pub fn new(state: &StatePrep, measurements: &MeasurementSet) -> Self {
        Self {
            scenario: measurements.scenario(),
            dim: measurements.dim(),
            rho: cmat_to_rows(state.rho()),
            projectors: measurements
                .projectors()
                .iter()
                .map(|ps| ps.iter().map(cmat_to_rows).collect())
                .collect(),
            bins: measurements.bins.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn computational(scenario: Scenario, d: usize) -> MeasurementSet {
        let ids = vec![CMat::identity(d, d); scenario.settings()];
        let o = scenario.outcomes();
        let bins = (0..scenario.settings())
            .map(|_| {
                (0..o)
                    .map(|r| if r < d { vec![r] } else { vec![] })
                    .collect()
            })
            .collect();
        MeasurementSet::from_unitaries(scenario, &ids, bins).unwrap()
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for d in 1..6 {
            let u = haar_unitary(d, &mut rng(3)).unwrap();
            let err = (u.adjoint() * &u - CMat::identity(d, d)).norm();
            assert!(err < 1e-12, "d={d} err={err}");
            assert_eq!(u, haar_unitary(d, &mut rng(3)).unwrap());
        }
        let u1 = haar_unitary(1, &mut rng(9)).unwrap();
        assert!((u1[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert_eq!(
            haar_unitary(0, &mut rng(0)),
            Err(QuantumError::ZeroDimension)
        );
    }

    #[test]
    fn haar_first_moment() {
        let mut r = rng(11);
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|_| haar_unitary(3, &mut r).unwrap()[(0, 0)].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn random_state_is_pure() {
        let s1 = random_state(1, &mut rng(1)).unwrap();
        assert!((s1.rho()[(0, 0)] - ONE).norm() < 1e-14);
        let mut r = rng(2);
        for d in 2..6 {
            let s = random_state(d, &mut r).unwrap();
            let ev = crate::linalg::hermitian_eigenvalues(s.rho());
            assert!((ev[d - 1] - 1.0).abs() < 1e-10);
            assert!(ev[..d - 1].iter().all(|e| e.abs() < 1e-10));
            assert!((s.purity() - 1.0).abs() < 1e-10);
            StatePrep::new(s.rho().clone()).unwrap();
        }
        let n = 1000;
        let mean: f64 = (0..n)
            .map(|_| random_state(4, &mut r).unwrap().rho()[(0, 0)].re)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.25).abs() < 0.05);
    }

    #[test]
    fn measurement_bins() {
        let sc = Scenario::new(4, 2, 3).unwrap();
        let mut r = rng(5);
        for _ in 0..50 {
            let ms = random_measurements(sc, 4, &mut r).unwrap();
            assert!(ms.max_defect() < 1e-10);
            for partition in ms.bins().unwrap() {
                let mut sizes: Vec<usize> = partition.iter().map(Vec::len).collect();
                sizes.sort();
                assert_eq!(sizes, vec![1, 1, 2]);
            }
            for s in 0..4 {
                for (rr, bin) in ms.bins().unwrap()[s].iter().enumerate() {
                    let rank = trace(ms.projector(rr, s)).re;
                    assert!((rank - bin.len() as f64).abs() < 1e-10);
                }
            }
        }
        let sq = Scenario::new(2, 2, 3).unwrap();
        let ms = random_measurements(sq, 3, &mut r).unwrap();
        for s in 0..2 {
            for rr in 0..3 {
                assert!((trace(ms.projector(rr, s)).re - 1.0).abs() < 1e-10);
            }
        }
        let small = random_measurements(sq, 2, &mut r).unwrap();
        assert!(small.has_empty_outcomes());
        assert!(small.max_defect() < 1e-10);
    }

    #[test]
    fn identity_unitary_gives_computational_projectors() {
        let sc = Scenario::new(2, 2, 2).unwrap();
        let ms = computational(sc, 2);
        let p0 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let p1 = CMat::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]);
        for s in 0..2 {
            assert_eq!(ms.projector(0, s), &p0);
            assert_eq!(ms.projector(1, s), &p1);
        }
    }

    #[test]
    fn from_projectors_rejects_incomplete_sets() {
        let sc = Scenario::new(1, 1, 2).unwrap();
        let p0 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let bad = MeasurementSet::from_projectors(sc, vec![vec![p0.clone(), p0]]);
        assert!(bad.is_err());
    }

    #[test]
    fn sequence_operator_examples() {
        let sc = Scenario::new(2, 2, 2).unwrap();
        let ms = computational(sc, 2);
        assert_eq!(
            sequence_operator(&ms, &Word::identity()),
            CMat::identity(2, 2)
        );
        let w = Word::from_pairs(&[(0, 1)]);
        assert_eq!(&sequence_operator(&ms, &w), ms.projector(0, 1));
        let w2 = Word::from_pairs(&[(0, 0), (0, 1)]);
        assert_eq!(
            sequence_operator(&ms, &w2),
            ms.projector(0, 1) * ms.projector(0, 0)
        );
        assert_eq!(sequence_operator(&ms, &Word::Zero), CMat::zeros(2, 2));
    }

    #[test]
    fn born_probability_examples() {
        let sc = Scenario::new(2, 2, 2).unwrap();
        let ket0 = StatePrep::basis_state(2, 0).unwrap();
        let ms = computational(sc, 2);
        let w = Word::from_pairs(&[(0, 0), (0, 1)]);
        assert!((born_probability(&ket0, &ms, &w) - 1.0).abs() < 1e-14);

        let flipped = MeasurementSet::from_unitaries(
            sc,
            &[CMat::identity(2, 2), CMat::identity(2, 2)],
            vec![vec![vec![1], vec![0]], vec![vec![1], vec![0]]],
        )
        .unwrap();
        assert!(born_probability(&ket0, &flipped, &w).abs() < 1e-14);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            CMat::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)]);
        let minus = CMat::identity(2, 2) - &plus;
        let p0 = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let ms = MeasurementSet::from_projectors(
            sc,
            vec![
                vec![p0.clone(), CMat::identity(2, 2) - &p0],
                vec![plus, minus],
            ],
        )
        .unwrap();
        let p = born_probability(&ket0, &ms, &Word::from_pairs(&[(0, 1)]));
        assert!((p - h * h).abs() < 1e-14);
    }

    #[test]
    fn moment_matrix_all_ones() {
        let sc = Scenario::new(3, 2, 2).unwrap();
        let idx = sc.enumerate_words(1).unwrap();
        let ms = computational(sc, 2);
        let ket0 = StatePrep::basis_state(2, 0).unwrap();
        let mm = moment_matrix(&ket0, &ms, &idx).unwrap();
        assert_eq!(mm.entries().nrows(), 10);
        assert!(mm.entries().iter().all(|z| (z - ONE).norm() < 1e-14));
        let b = behavior_of(&mm);
        assert_eq!(b.len(), 9);
        assert!(b
            .values()
            .iter()
            .all(|(w, p)| !w.is_identity() && (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn maximally_mixed_single_letters() {
        let sc = Scenario::new(3, 2, 2).unwrap();
        let idx = sc.enumerate_words(1).unwrap();
        let ms = computational(sc, 2);
        let mixed = StatePrep::maximally_mixed(2).unwrap();
        let b = behavior_of(&moment_matrix(&mixed, &ms, &idx).unwrap());
        for (w, p) in b.values() {
            if w.len() == 1 {
                assert!((p - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn moment_matrix_dimension_mismatch() {
        let sc = Scenario::new(2, 2, 2).unwrap();
        let idx = sc.enumerate_words(1).unwrap();
        let ms = random_measurements(sc, 3, &mut rng(1)).unwrap();
        let st = random_state(2, &mut rng(1)).unwrap();
        assert!(matches!(
            moment_matrix(&st, &ms, &idx),
            Err(QuantumError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn behavior_validation() {
        let sc = Scenario::new(1, 1, 2).unwrap();
        let w = Word::from_pairs(&[(0, 0)]);
        assert!(Behavior::new(sc, vec![(w.clone(), 0.4)]).is_ok());
        assert!(Behavior::new(sc, vec![(w.clone(), 1.2)]).is_err());
        assert!(Behavior::new(sc, vec![]).is_err());
        assert!(Behavior::new(sc, vec![(w.clone(), 0.4), (w, 0.4)]).is_err());
    }

    #[test]
    fn json_round_trips() {
        let sc = Scenario::new(2, 2, 3).unwrap();
        let mut r = rng(4);
        let st = random_state(3, &mut r).unwrap();
        let ms = random_measurements(sc, 3, &mut r).unwrap();
        let idx = sc.enumerate_words(1).unwrap();
        let mm = moment_matrix(&st, &ms, &idx).unwrap();
        let text = serde_json::to_string(&MomentMatrixJson::from(&mm)).unwrap();
        let back: MomentMatrix = serde_json::from_str::<MomentMatrixJson>(&text)
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(back.entries(), mm.entries());
        let b = behavior_of(&mm);
        let text = serde_json::to_string(&BehaviorJson::from(&b)).unwrap();
        let back: Behavior = serde_json::from_str::<BehaviorJson>(&text)
            .unwrap()
            .try_into()
            .unwrap();
        assert_eq!(back, b);
    }
}
