//! End-to-end paths through basis construction, certification and sampling.

use seqdim::basis::{build_basis_seeded, load_or_build, Basis, BasisConfig};
use seqdim::certify::{dual_direct, robustness, verify_witness, Witness, WitnessJson};
use seqdim::experiments::{run_campaign, sample_realization, sample_seed, CampaignSpec};
use seqdim::quantum::BehaviorJson;
use seqdim::sdp::InteriorPoint;
use seqdim::{Behavior, Scenario};

fn scenario(s: &str) -> Scenario {
    s.parse().unwrap()
}

#[test]
fn basis_files_round_trip_and_rebuilds_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BasisConfig::default();
    let a = load_or_build(dir.path(), scenario("3-2-2"), 2, 1, 7, &cfg).unwrap();
    let path = dir.path().join("copy.json");
    a.save(&path).unwrap();
    let b = Basis::load(&path).unwrap();
    assert_eq!(a.cardinality(), b.cardinality());
    for (x, y) in a.elements().iter().zip(b.elements()) {
        assert_eq!(x, y);
    }
    let rebuilt = build_basis_seeded(scenario("3-2-2"), 2, 1, 7, &cfg).unwrap();
    let again = dir.path().join("again.json");
    rebuilt.save(&again).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn behavior_and_witness_json_round_trip() {
    let s = scenario("3-2-2");
    let (_, _, behavior) = sample_realization(s, 3, sample_seed(1, 0)).unwrap();
    let text = serde_json::to_string(&BehaviorJson::from(&behavior)).unwrap();
    let back: Behavior = serde_json::from_str::<BehaviorJson>(&text)
        .unwrap()
        .try_into()
        .unwrap();
    assert_eq!(back.values(), behavior.values());

    let basis = build_basis_seeded(s, 2, 1, 1, &BasisConfig::default()).unwrap();
    let res = robustness(&behavior, &basis).unwrap();
    let text = serde_json::to_string(&WitnessJson::from(&res.witness)).unwrap();
    let w: Witness = serde_json::from_str::<WitnessJson>(&text)
        .unwrap()
        .try_into()
        .unwrap();
    assert_eq!(w.gamma, res.witness.gamma);
    assert_eq!(w.x, res.witness.x);
}

#[test]
fn truncated_behavior_is_rejected() {
    let s = scenario("3-2-2");
    let (_, _, behavior) = sample_realization(s, 2, 3).unwrap();
    let mut json = BehaviorJson::from(&behavior);
    let first = json.probabilities.keys().next().unwrap().clone();
    json.probabilities.remove(&first);
    assert!(Behavior::try_from(json).is_err());
}

#[test]
fn certified_qutrit_witness_separates_qubits() {
    let s = scenario("3-2-2");
    let basis = build_basis_seeded(s, 2, 1, 1, &BasisConfig::default()).unwrap();
    let (_, _, behavior) = sample_realization(s, 3, sample_seed(1, 0)).unwrap();
    let res = robustness(&behavior, &basis).unwrap();
    assert!(res.certified());
    assert!(res.witness.margin(&behavior).unwrap() < 0.0);

    let qubits: Vec<Behavior> = (0..100)
        .map(|i| sample_realization(s, 2, sample_seed(99, i)).unwrap().2)
        .collect();
    let report = verify_witness(&res.witness, &qubits);
    assert_eq!(report.violations, 0);

    // Positive rescaling keeps the verdict of every behavior.
    let scaled = res.witness.scaled(3.5);
    assert_eq!(verify_witness(&scaled, &qubits).violations, 0);
    assert!(scaled.margin(&behavior).unwrap() < 0.0);

    let direct = dual_direct(&behavior, &basis).unwrap();
    assert!((direct.nu - res.nu).abs() < 1e-5);
}

#[test]
fn campaigns_do_not_depend_on_thread_count() {
    let s = scenario("3-2-2");
    let basis = build_basis_seeded(s, 2, 1, 1, &BasisConfig::default()).unwrap();
    let program = seqdim::certify::RobustnessProgram::new(&basis).unwrap();
    let spec = CampaignSpec::new(s, 3, 2, 1, 12, 5);
    let solver = InteriorPoint::default();
    let wide = run_campaign(&spec, &program, &solver, &|_| {});
    let narrow = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_campaign(&spec, &program, &solver, &|_| {}));
    assert_eq!(wide.to_csv(), narrow.to_csv());
}

#[test]
fn gyni_maxima_bound_sampled_qubits() {
    use seqdim::certify::{max_finite, max_unrestricted, Objective};
    let objective = Objective::gyni();
    let s = objective.scenario();
    let basis = build_basis_seeded(s, 2, 1, 1, &BasisConfig::default()).unwrap();
    let finite = max_finite(&basis, &objective).unwrap().value;
    let unrestricted = max_unrestricted(s, &objective).unwrap().value;
    let best = (0..1000)
        .map(|i| {
            let (st, ms, _) = sample_realization(s, 2, sample_seed(11, i)).unwrap();
            objective.value_on_realization(&st, &ms)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        best > 1.0,
        "sampled qubits should beat the classical bound, best {best}"
    );
    assert!(best <= finite + 1e-6, "{best} > {finite}");
    assert!(best <= unrestricted + 1e-6, "{best} > {unrestricted}");
}

/// Rank-one qubit projector along the Bloch direction `(θ, φ)`.
fn bloch_projector(theta: f64, phi: f64) -> seqdim::linalg::CMat {
    use num_complex::Complex64;
    let v = nalgebra::DVector::from_vec(vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]);
    &v * v.adjoint()
}

#[test]
fn explicit_qubit_reaches_the_level_one_gyni_value() {
    use seqdim::certify::{max_unrestricted, Objective};
    use seqdim::{MeasurementSet, StatePrep};
    // Found by local search over Bloch angles of both settings and of the state.
    let settings = [
        (6.261261873451804, 2.8619567973435682),
        (5.019274900255452, 0.4330901211078735),
    ];
    let (theta, phi) = (6.095792300548741, 0.503860461233463);

    let objective = Objective::gyni();
    let s = objective.scenario();
    let id = seqdim::linalg::CMat::identity(2, 2);
    let projectors = settings
        .iter()
        .map(|&(t, p)| {
            let p0 = bloch_projector(t, p);
            vec![p0.clone(), &id - p0]
        })
        .collect();
    let ms = MeasurementSet::from_projectors(s, projectors).unwrap();
    let psi = bloch_projector(theta, phi).column(0).into_owned();
    let psi = &psi / num_complex::Complex64::new(psi.norm(), 0.0);
    let state = StatePrep::pure(&psi).unwrap();

    let value = objective.value_on_realization(&state, &ms);
    assert!((value - 1.158834).abs() < 1e-6, "{value}");
    let unrestricted = max_unrestricted(s, &objective).unwrap().value;
    assert!(value <= unrestricted + 1e-6);
}
