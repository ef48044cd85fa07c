//! Monte Carlo campaigns: certification probabilities, visibility distributions,
//! GYNI optima and the search for a certified ququart behavior.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_basis_seeded, Basis, BasisConfig, BasisError, CODE_VERSION};
use crate::certify::{
    max_finite, max_unrestricted, verify_witness, CertifyError, Objective, RobustnessProgram,
    RobustnessResult, WitnessJson, WitnessReport, CERTIFY_MARGIN,
};
use crate::quantum::{
    random_measurements, random_state, Behavior, BehaviorJson, MeasurementSet, QuantumError,
    RealizationJson, StatePrep,
};
use crate::scenario::Scenario;
use crate::sdp::ConicSolver;

/// Per-sample seed, independent of evaluation order.
pub fn sample_seed(master: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(master ^ mix(index))
}

/// A random `d`-dimensional realization and its behavior, from one seed.
pub fn sample_realization(
    scenario: Scenario,
    d: usize,
    seed: u64,
) -> Result<(StatePrep, MeasurementSet, Behavior), QuantumError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measurements = random_measurements(scenario, d, &mut rng)?;
    let state = random_state(d, &mut rng)?;
    let behavior = Behavior::from_realization(&state, &measurements)?;
    Ok((state, measurements, behavior))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub scenario: Scenario,
    /// Dimension the behaviors are drawn from.
    pub d_sample: usize,
    /// Dimension of the tested set `Q_{d_test}^k`.
    pub d_test: usize,
    pub k: usize,
    pub n_samples: usize,
    pub master_seed: u64,
    pub margin: f64,
}

impl CampaignSpec {
    pub fn new(
        scenario: Scenario,
        d_sample: usize,
        d_test: usize,
        k: usize,
        n_samples: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            scenario,
            d_sample,
            d_test,
            k,
            n_samples,
            master_seed,
            margin: CERTIFY_MARGIN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Inside,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub seed: u64,
    pub nu: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Campaign {
    pub spec: CampaignSpec,
    pub records: Vec<SampleRecord>,
    /// True when `d_sample < o`, so some sampled projectors are zero.
    pub empty_outcomes: bool,
}

/// Draws and certifies `spec.n_samples` behaviors in parallel against `program`.
/// `on_sample` is called once per finished sample.
pub fn run_campaign(
    spec: &CampaignSpec,
    program: &RobustnessProgram,
    solver: &dyn ConicSolver,
    on_sample: &(dyn Fn(&SampleRecord) + Sync),
) -> Campaign {
    let records = (0..spec.n_samples)
        .into_par_iter()
        .map(|index| {
            let seed = sample_seed(spec.master_seed, index as u64);
            let outcome = sample_realization(spec.scenario, spec.d_sample, seed)
                .map_err(CertifyError::from)
                .and_then(|(_, _, b)| program.solve(&b, solver));
            let record = match outcome {
                Ok(res) => SampleRecord {
                    index,
                    seed,
                    nu: Some(res.nu),
                    verdict: if res.nu < 1.0 - spec.margin {
                        Verdict::Certified
                    } else {
                        Verdict::Inside
                    },
                    error: None,
                },
                Err(e) => SampleRecord {
                    index,
                    seed,
                    nu: None,
                    verdict: Verdict::Failed,
                    error: Some(e.to_string()),
                },
            };
            on_sample(&record);
            record
        })
        .collect();
    Campaign {
        spec: *spec,
        records,
        empty_outcomes: spec.d_sample < spec.scenario.outcomes(),
    }
}

impl Campaign {
    pub fn nus(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.nu).collect()
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.records.iter().filter(|r| r.verdict == verdict).count()
    }

    /// `index,seed,nu,verdict` per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,seed,nu,verdict\n");
        for r in &self.records {
            let nu = r.nu.map_or(String::new(), |v| format!("{v:.10}"));
            let verdict = match r.verdict {
                Verdict::Certified => "certified",
                Verdict::Inside => "inside",
                Verdict::Failed => "failed",
            };
            let _ = writeln!(out, "{},{},{nu},{verdict}", r.index, r.seed);
        }
        out
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub lower: f64,
    pub upper: f64,
    pub certified: usize,
    pub total: usize,
    pub failures: usize,
    pub failure_rate: f64,
}

/// `N(ν < 1 − margin) / N_tot` with a 95% Wilson interval; failed solves are excluded
/// from both counts.
pub fn estimate_probability(campaign: &Campaign) -> ProbabilityEstimate {
    let certified = campaign.count(Verdict::Certified);
    let failures = campaign.count(Verdict::Failed);
    let total = campaign.records.len() - failures;
    let (lower, upper) = wilson_interval(certified, total, 1.959_963_984_540_054);
    ProbabilityEstimate {
        p_hat: if total > 0 {
            certified as f64 / total as f64
        } else {
            0.0
        },
        lower,
        upper,
        certified,
        total,
        failures,
        failure_rate: if campaign.records.is_empty() {
            0.0
        } else {
            failures as f64 / campaign.records.len() as f64
        },
    }
}

pub const HISTOGRAM_BINS: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityDistribution {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// Counts over 50 equal bins of `[0, 1]`; values outside are clamped to the end bins.
    pub histogram: Vec<usize>,
}

pub fn visibility_distribution(campaign: &Campaign) -> VisibilityDistribution {
    let nus = campaign.nus();
    let count = nus.len();
    let mean = if count > 0 {
        nus.iter().sum::<f64>() / count as f64
    } else {
        f64::NAN
    };
    let std_dev = if count > 1 {
        (nus.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for v in &nus {
        let bin = (v * HISTOGRAM_BINS as f64)
            .floor()
            .clamp(0.0, (HISTOGRAM_BINS - 1) as f64);
        histogram[bin as usize] += 1;
    }
    VisibilityDistribution {
        count,
        mean,
        std_dev,
        histogram,
    }
}

impl VisibilityDistribution {
    /// `bin_lo,bin_hi,count` rows.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        let w = 1.0 / HISTOGRAM_BINS as f64;
        for (i, c) in self.histogram.iter().enumerate() {
            let _ = writeln!(out, "{:.2},{:.2},{c}", i as f64 * w, (i + 1) as f64 * w);
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub scenario: Scenario,
    pub estimate: ProbabilityEstimate,
    pub mean_nu: f64,
}

/// Probability and mean visibility per scenario. Every field of `template` except the
/// scenario is shared; each basis is built from the template's master seed.
pub fn probability_curve(
    scenarios: &[Scenario],
    template: &CampaignSpec,
    config: &BasisConfig,
    solver: &dyn ConicSolver,
) -> Result<Vec<CurvePoint>, ExperimentError> {
    scenarios
        .iter()
        .map(|&scenario| {
            let spec = CampaignSpec {
                scenario,
                ..*template
            };
            let basis =
                build_basis_seeded(scenario, spec.d_test, spec.k, spec.master_seed, config)?;
            let program = RobustnessProgram::new(&basis)?;
            let campaign = run_campaign(&spec, &program, solver, &|_| {});
            Ok(CurvePoint {
                scenario,
                estimate: estimate_probability(&campaign),
                mean_nu: visibility_distribution(&campaign).mean,
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GyniReport {
    pub unrestricted: f64,
    pub unrestricted_iterations: usize,
    pub unrestricted_gap: f64,
    pub qubit_level1: f64,
    pub qubit_level1_iterations: usize,
    pub qubit_level1_gap: f64,
    pub basis_cardinality: usize,
    pub classical: f64,
}

/// Both GYNI optima plus the best deterministic assignment.
pub fn gyni_report(seed: u64) -> Result<GyniReport, ExperimentError> {
    let objective = Objective::gyni();
    let scenario = objective.scenario();
    let unrestricted = max_unrestricted(scenario, &objective)?;
    let basis = build_basis_seeded(scenario, 2, 1, seed, &BasisConfig::default())?;
    let finite = max_finite(&basis, &objective)?;
    Ok(GyniReport {
        unrestricted: unrestricted.value,
        unrestricted_iterations: unrestricted.iterations,
        unrestricted_gap: unrestricted.gap,
        qubit_level1: finite.value,
        qubit_level1_iterations: finite.iterations,
        qubit_level1_gap: finite.gap,
        basis_cardinality: basis.cardinality(),
        classical: classical_gyni_max(),
    })
}

/// GYNI events as `(outcomes, settings)` in measurement order.
pub const GYNI_EVENTS: [([usize; 3], [usize; 3]); 4] = [
    ([0, 0, 0], [0, 0, 0]),
    ([1, 1, 0], [0, 1, 1]),
    ([0, 1, 1], [1, 0, 1]),
    ([1, 0, 1], [1, 1, 0]),
];

/// Maximum GYNI value over deterministic strategies in which the outcome at step `t`
/// is a fixed function of the setting chosen at step `t`.
pub fn classical_gyni_max() -> f64 {
    // Strategy bits: outcome at step t for setting s is bit (2t + s).
    (0u32..64)
        .map(|f| {
            GYNI_EVENTS
                .iter()
                .filter(|(r, s)| (0..3).all(|t| ((f >> (2 * t + s[t])) & 1) as usize == r[t]))
                .count() as f64
        })
        .fold(0.0, f64::max)
}

/// A certified behavior together with everything needed to reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HuntHit {
    pub index: usize,
    pub seed: u64,
    pub nu: f64,
    pub behavior: BehaviorJson,
    pub realization: RealizationJson,
    pub witness: WitnessJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HuntOutcome {
    pub tried: usize,
    pub failures: usize,
    pub nus: Vec<f64>,
    pub hit: Option<HuntHit>,
}

type Solved = (Behavior, StatePrep, MeasurementSet, RobustnessResult);

/// Samples `d_sample`-dimensional behaviors in order until one is certified against
/// `program`, or `n_max` samples are exhausted. Samples are evaluated in parallel
/// chunks; the first hit in sample order is reported.
pub fn ququart_hunt(
    program: &RobustnessProgram,
    d_sample: usize,
    n_max: usize,
    master_seed: u64,
    solver: &dyn ConicSolver,
) -> HuntOutcome {
    let scenario = program.scenario();
    let chunk = rayon::current_num_threads().max(1) * 2;
    let mut outcome = HuntOutcome {
        tried: 0,
        failures: 0,
        nus: Vec::new(),
        hit: None,
    };
    let mut start = 0;
    while start < n_max {
        let end = (start + chunk).min(n_max);
        let results: Vec<(usize, u64, Option<Solved>)> = (start..end)
            .into_par_iter()
            .map(|index| {
                let seed = sample_seed(master_seed, index as u64);
                let res = sample_realization(scenario, d_sample, seed)
                    .ok()
                    .and_then(|(st, ms, b)| program.solve(&b, solver).ok().map(|r| (b, st, ms, r)));
                (index, seed, res)
            })
            .collect();
        for (index, seed, res) in results {
            outcome.tried += 1;
            match res {
                None => outcome.failures += 1,
                Some((b, st, ms, r)) => {
                    outcome.nus.push(r.nu);
                    if r.certified() {
                        outcome.hit = Some(HuntHit {
                            index,
                            seed,
                            nu: r.nu,
                            behavior: BehaviorJson::from(&b),
                            realization: RealizationJson::new(&st, &ms),
                            witness: WitnessJson::from(&r.witness),
                        });
                        return outcome;
                    }
                }
            }
        }
        start = end;
    }
    outcome
}

/// Checks a witness against `n` fresh behaviors sampled from dimension `d`.
pub fn check_witness_on_samples(
    witness: &crate::certify::Witness,
    d: usize,
    n: usize,
    master_seed: u64,
) -> Result<WitnessReport, QuantumError> {
    let behaviors = (0..n)
        .into_par_iter()
        .map(|i| {
            sample_realization(witness.scenario, d, sample_seed(master_seed, i as u64))
                .map(|(_, _, b)| b)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(verify_witness(witness, &behaviors))
}

/// Summary written next to campaign CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub spec: CampaignSpec,
    pub estimate: ProbabilityEstimate,
    pub distribution: VisibilityDistribution,
    pub empty_outcomes: bool,
    pub code_version: String,
    pub basis_cardinality: usize,
}

impl CampaignSummary {
    pub fn new(campaign: &Campaign, basis: &Basis) -> Self {
        Self {
            spec: campaign.spec,
            estimate: estimate_probability(campaign),
            distribution: visibility_distribution(campaign),
            empty_outcomes: campaign.empty_outcomes,
            code_version: CODE_VERSION.to_string(),
            basis_cardinality: basis.cardinality(),
        }
    }
}
