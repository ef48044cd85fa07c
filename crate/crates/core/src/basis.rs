//! Randomized construction of an orthonormal basis for the span of `d`-dimensional
//! moment matrices, with a rank cross-check and cardinality classification.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{axpy, hermitian_eigen, hs_inner, hs_norm, CMat, RMat};
use crate::quantum::{
    cmat_from_rows, cmat_to_rows, moment_matrix, random_measurements, random_state, QuantumError,
};
use crate::scenario::{Scenario, Word, WordError, WordIndex};

/// Version string embedded in cache keys and result files.
pub const CODE_VERSION: &str = env!("SEQDIM_CODE_VERSION");

#[derive(Debug, Error)]
pub enum BasisError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("no norm drop after {} candidates (last residual {:e})", .norm_log.len(), .norm_log.last().copied().unwrap_or(f64::NAN))]
    NoNormDrop { norm_log: Vec<f64> },
    #[error("invalid basis configuration: {0}")]
    Config(String),
    #[error("basis file {path}: {reason}")]
    File { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    /// Residual norm (of a unit-normalized candidate) below which it counts as spanned.
    pub drop_threshold: f64,
    /// Consecutive spanned candidates that end the build.
    pub stop_window: usize,
    /// Candidate budget; `None` means `N² + 4·stop_window` for an `N`-word index.
    pub max_candidates: Option<usize>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            drop_threshold: 1e-7,
            stop_window: 20,
            max_candidates: None,
        }
    }
}

/// Orthonormal basis of span(M_d^k).
#[derive(Debug, Clone)]
pub struct Basis {
    index: WordIndex,
    dim: usize,
    elements: Vec<CMat>,
    norm_log: Vec<f64>,
    config: BasisConfig,
    seed: Option<u64>,
}

impl Basis {
    pub fn scenario(&self) -> Scenario {
        self.index.scenario()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> usize {
        self.index.level()
    }

    pub fn index(&self) -> &WordIndex {
        &self.index
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn cardinality(&self) -> usize {
        self.elements.len()
    }

    /// Residual norm of every processed candidate, in order.
    pub fn norm_log(&self) -> &[f64] {
        &self.norm_log
    }

    pub fn config(&self) -> BasisConfig {
        self.config
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `min(retained residuals) / max(rejected residuals)`; infinite if nothing was rejected
    /// or every rejected residual is exactly zero.
    pub fn separation(&self) -> f64 {
        let t = self.config.drop_threshold;
        let kept = self
            .norm_log
            .iter()
            .copied()
            .filter(|&r| r >= t)
            .fold(f64::INFINITY, f64::min);
        let dropped = self
            .norm_log
            .iter()
            .copied()
            .filter(|&r| r < t)
            .fold(0.0, f64::max);
        kept / dropped
    }

    /// Real coordinates of `m` in the basis and the norm of the part outside the span.
    pub fn project(&self, m: &CMat) -> (Vec<f64>, f64) {
        let mut rest = m.clone();
        let coeffs: Vec<f64> = self
            .elements
            .iter()
            .map(|e| {
                let c = hs_inner(e, m);
                axpy(&mut rest, -c, e);
                c
            })
            .collect();
        (coeffs, hs_norm(&rest))
    }

    /// Orthonormal basis (columns) of the joint range of all elements. Every matrix in
    /// the span has the form `Q K Q†`, so PSD conditions can be imposed on `Q† M Q`.
    pub fn common_range(&self, rel_tol: f64) -> CMat {
        let n = self.index.len();
        let mut gram = CMat::zeros(n, n);
        for e in &self.elements {
            gram += e * e;
        }
        let (values, vectors) = hermitian_eigen(&gram);
        let top = values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..n).filter(|&i| values[i] > rel_tol * top).collect();
        let mut q = CMat::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            q.set_column(c, &vectors.column(i));
        }
        q
    }

    pub fn to_file(&self) -> BasisFile {
        BasisFile {
            scenario: self.scenario(),
            d: self.dim,
            k: self.level(),
            seed: self.seed,
            code_version: CODE_VERSION.to_string(),
            config: self.config,
            cardinality: self.cardinality(),
            words: self.index.words().to_vec(),
            norm_log: self.norm_log.clone(),
            elements: self.elements.iter().map(cmat_to_rows).collect(),
        }
    }

    pub fn from_file(file: BasisFile) -> Result<Self, BasisError> {
        let index = file.scenario.enumerate_words(file.k)?;
        let bad = |reason: &str| BasisError::Config(reason.to_string());
        if index.words() != file.words.as_slice() {
            return Err(bad("word list differs from the canonical index"));
        }
        if file.elements.len() != file.cardinality {
            return Err(bad("element count differs from cardinality"));
        }
        let n = index.len();
        let elements = file
            .elements
            .iter()
            .map(|rows| {
                let m = cmat_from_rows(rows).map_err(|e| bad(&e))?;
                if m.nrows() != n || m.ncols() != n {
                    return Err(bad("element shape differs from the word index"));
                }
                Ok(m)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            index,
            dim: file.d,
            elements,
            norm_log: file.norm_log,
            config: file.config,
            seed: file.seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), BasisError> {
        let io = |e: &dyn std::fmt::Display| BasisError::File {
            path: path.to_path_buf(),
            reason: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io(&e))?;
        }
        let text = serde_json::to_string(&self.to_file()).map_err(|e| io(&e))?;
        fs::write(path, text).map_err(|e| io(&e))
    }

    pub fn load(path: &Path) -> Result<Self, BasisError> {
        let io = |e: &dyn std::fmt::Display| BasisError::File {
            path: path.to_path_buf(),
            reason: e.to_string(),
        };
        let text = fs::read_to_string(path).map_err(|e| io(&e))?;
        let file: BasisFile = serde_json::from_str(&text).map_err(|e| io(&e))?;
        Self::from_file(file)
    }
}

/// On-disk form of a [`Basis`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisFile {
    pub scenario: Scenario,
    pub d: usize,
    pub k: usize,
    pub seed: Option<u64>,
    pub code_version: String,
    pub config: BasisConfig,
    pub cardinality: usize,
    pub words: Vec<Word>,
    pub norm_log: Vec<f64>,
    pub elements: Vec<Vec<Vec<[f64; 2]>>>,
}

fn sample_moment(index: &WordIndex, d: usize, seed: u64) -> Result<CMat, QuantumError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = random_measurements(index.scenario(), d, &mut rng)?;
    let state = random_state(d, &mut rng)?;
    Ok(moment_matrix(&state, &measurements, index)?.into_entries())
}

const BATCH: usize = 16;

/// Gram-Schmidt over randomly sampled moment matrices until `stop_window`
/// consecutive candidates fall below `drop_threshold`.
///
/// Candidates are drawn in batches from per-candidate seeds taken from `rng`, and
/// consumed in generation order, so the result depends only on `rng`.
pub fn build_basis<R: Rng + ?Sized>(
    scenario: Scenario,
    d: usize,
    k: usize,
    rng: &mut R,
    config: &BasisConfig,
) -> Result<Basis, BasisError> {
    if d == 0 {
        return Err(QuantumError::ZeroDimension.into());
    }
    if config.stop_window == 0 || !(config.drop_threshold > 0.0 && config.drop_threshold < 1.0) {
        return Err(BasisError::Config(
            "stop_window must be positive and drop_threshold in (0, 1)".into(),
        ));
    }
    let index = scenario.enumerate_words(k)?;
    let n = index.len();
    let budget = config
        .max_candidates
        .unwrap_or(n * n + 4 * config.stop_window);

    let mut elements: Vec<CMat> = Vec::new();
    let mut norm_log = Vec::new();
    let mut misses = 0;
    while misses < config.stop_window {
        if norm_log.len() >= budget {
            return Err(BasisError::NoNormDrop { norm_log });
        }
        let seeds: Vec<u64> = (0..BATCH).map(|_| rng.random()).collect();
        let candidates = seeds
            .par_iter()
            .map(|&s| sample_moment(&index, d, s))
            .collect::<Result<Vec<_>, _>>()?;
        for mut v in candidates {
            if misses >= config.stop_window || norm_log.len() >= budget {
                break;
            }
            let norm = hs_norm(&v);
            v /= num_complex::Complex64::new(norm, 0.0);
            for _ in 0..2 {
                for e in &elements {
                    let c = hs_inner(e, &v);
                    axpy(&mut v, -c, e);
                }
            }
            let residual = hs_norm(&v);
            norm_log.push(residual);
            if residual >= config.drop_threshold {
                v /= num_complex::Complex64::new(residual, 0.0);
                elements.push(v);
                misses = 0;
            } else {
                misses += 1;
            }
        }
    }
    Ok(Basis {
        index,
        dim: d,
        elements,
        norm_log,
        config: *config,
        seed: None,
    })
}

/// [`build_basis`] with a ChaCha8 generator seeded from `seed`; the seed is recorded.
pub fn build_basis_seeded(
    scenario: Scenario,
    d: usize,
    k: usize,
    seed: u64,
    config: &BasisConfig,
) -> Result<Basis, BasisError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis = build_basis(scenario, d, k, &mut rng, config)?;
    basis.seed = Some(seed);
    Ok(basis)
}

/// Cache file name for a seeded basis.
pub fn cache_path(dir: &Path, scenario: Scenario, d: usize, k: usize, seed: u64) -> PathBuf {
    let version: String = CODE_VERSION
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    dir.join(format!("basis_{scenario}_d{d}_k{k}_s{seed}_{version}.json"))
}

/// Loads the cached basis for `(scenario, d, k, seed)` if present, else builds and
/// stores it.
pub fn load_or_build(
    dir: &Path,
    scenario: Scenario,
    d: usize,
    k: usize,
    seed: u64,
    config: &BasisConfig,
) -> Result<Basis, BasisError> {
    let path = cache_path(dir, scenario, d, k, seed);
    if path.exists() {
        let basis = Basis::load(&path)?;
        if basis.scenario() == scenario
            && basis.dim() == d
            && basis.level() == k
            && basis.seed() == Some(seed)
            && basis.config() == *config
        {
            return Ok(basis);
        }
    }
    let basis = build_basis_seeded(scenario, d, k, seed, config)?;
    basis.save(&path)?;
    Ok(basis)
}

/// Isometric real coordinates of a Hermitian matrix: diagonal, then `√2·Re` and `√2·Im`
/// of the strict upper triangle.
pub fn hermitian_coordinates(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    out.extend((0..n).map(|i| m[(i, i)].re));
    for j in 0..n {
        for i in 0..j {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
    out
}

/// Numerical rank of `n_samples` stacked, unit-normalized moment matrices (singular
/// values above `1e-7 × σ_max`).
pub fn rank_oracle<R: Rng + ?Sized>(
    scenario: Scenario,
    d: usize,
    k: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<usize, BasisError> {
    let index = scenario.enumerate_words(k)?;
    let seeds: Vec<u64> = (0..n_samples).map(|_| rng.random()).collect();
    let rows = seeds
        .par_iter()
        .map(|&s| {
            let m = sample_moment(&index, d, s)?;
            let mut v = hermitian_coordinates(&m);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            Ok(v)
        })
        .collect::<Result<Vec<_>, QuantumError>>()?;
    let cols = index.len() * index.len();
    // Columns are samples so the SVD runs on the thin side.
    let a = RMat::from_fn(cols, n_samples, |i, j| rows[j][i]);
    Ok(numerical_rank(a, 1e-7))
}

pub(crate) fn numerical_rank(a: DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = a.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// One `(scenario, d)` cell of a classification table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardinalityCell {
    pub d: usize,
    pub cardinality: Option<usize>,
    pub oracle_rank: Option<usize>,
    pub separation: Option<f64>,
    pub error: Option<String>,
}

impl CardinalityCell {
    pub fn oracle_agrees(&self) -> bool {
        match (self.cardinality, self.oracle_rank) {
            (Some(c), Some(r)) => c == r,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub scenario: Scenario,
    pub cells: Vec<CardinalityCell>,
    /// `cardinality(d=3) / cardinality(d=2)` when both were computed.
    pub ratio_3_2: Option<f64>,
    /// Consecutive dimension pairs `(d, d')` with strictly larger cardinality at `d'`.
    pub strict_increases: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub k: usize,
    pub rows: Vec<ClassificationRow>,
}

/// Builds a basis for every `(scenario, d)` pair; failures are recorded per cell.
/// With `with_oracle`, every cell is cross-checked by [`rank_oracle`] using twice the
/// observed cardinality plus 20 samples.
pub fn classify(
    scenarios: &[Scenario],
    dims: &[usize],
    k: usize,
    seed: u64,
    config: &BasisConfig,
    with_oracle: bool,
) -> ClassificationTable {
    let mut dims = dims.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let rows = scenarios
        .iter()
        .map(|&scenario| {
            let cells: Vec<CardinalityCell> = dims
                .iter()
                .map(|&d| classify_cell(scenario, d, k, seed, config, with_oracle))
                .collect();
            let card = |d: usize| cells.iter().find(|c| c.d == d).and_then(|c| c.cardinality);
            let ratio_3_2 = match (card(2), card(3)) {
                (Some(a), Some(b)) if a > 0 => Some(b as f64 / a as f64),
                _ => None,
            };
            let strict_increases = cells
                .windows(2)
                .filter_map(|w| match (w[0].cardinality, w[1].cardinality) {
                    (Some(a), Some(b)) if b > a => Some((w[0].d, w[1].d)),
                    _ => None,
                })
                .collect();
            ClassificationRow {
                scenario,
                cells,
                ratio_3_2,
                strict_increases,
            }
        })
        .collect();
    ClassificationTable { k, rows }
}

fn classify_cell(
    scenario: Scenario,
    d: usize,
    k: usize,
    seed: u64,
    config: &BasisConfig,
    with_oracle: bool,
) -> CardinalityCell {
    match build_basis_seeded(scenario, d, k, seed, config) {
        Ok(basis) => {
            let oracle_rank = with_oracle.then(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
                rank_oracle(scenario, d, k, 2 * basis.cardinality() + 20, &mut rng).ok()
            });
            CardinalityCell {
                d,
                cardinality: Some(basis.cardinality()),
                oracle_rank: oracle_rank.flatten(),
                separation: Some(basis.separation()),
                error: None,
            }
        }
        Err(e) => CardinalityCell {
            d,
            cardinality: None,
            oracle_rank: None,
            separation: None,
            error: Some(e.to_string()),
        },
    }
}
