use analogy_core::analogy::VerdictStatus;
use analogy_core::data_io::config::{PredicateSpec, Predicates, SemanticsChoice};
use analogy_core::data_io::{
    generate_class_blobs, generate_gaussian, load_dataset, write_sample_csv, BlobSpec, DatasetFile, LabelColumn,
    RunConfig, SeededStream, Spread, TransformerSpec, X0Spec,
};
use analogy_core::pipeline::{run_check, run_estimate, run_hoare, run_wasserstein, simulate_data};
use analogy_core::{EmpiricalSample, Error, LabeledSample};

fn gaussian(n: usize, mean: &[f64], seed: u64, stream: u64) -> EmpiricalSample {
    generate_gaussian(
        n,
        mean.len(),
        mean,
        &Spread::Isotropic(1.0),
        SeededStream::new(seed, stream),
    )
    .unwrap()
}

fn blobs(offset: f64, seed: u64) -> LabeledSample {
    let blob = |mean: Vec<f64>| BlobSpec {
        n: 30,
        mean,
        scale: Spread::Isotropic(0.5),
    };
    generate_class_blobs(&[blob(vec![0.0, 0.0]), blob(vec![offset, 0.0])], seed).unwrap()
}

fn base_config() -> RunConfig {
    RunConfig {
        bootstrap: 100,
        seed: Some(1),
        ..RunConfig::default()
    }
}

#[test]
fn check_without_delta_or_labels_is_an_error() {
    let x = gaussian(20, &[0.0, 0.0], 1, 0);
    let err = run_check(&base_config(), &x, &x, None).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("δ requires labels or explicit value"), "{err}");
}

#[test]
fn check_without_seed_is_an_error() {
    let x = gaussian(20, &[0.0, 0.0], 1, 0);
    let cfg = RunConfig {
        seed: None,
        delta: Some(2.0),
        ..base_config()
    };
    assert!(run_check(&cfg, &x, &x, None)
        .unwrap_err()
        .to_string()
        .contains("--seed"));
}

#[test]
fn table_parameters_verify_and_a_far_target_does_not() {
    let x = gaussian(60, &[0.0, 0.0], 2, 0);
    let near = gaussian(60, &[0.0, 0.0], 2, 1);
    let far = near.translated(&[6.0, 8.0]).unwrap();
    let cfg = RunConfig {
        epsilon: Some(0.5),
        delta: Some(2.0),
        gamma: Some(0.05),
        estimator: analogy_core::data_io::config::EstimatorKind::Sliced,
        ..base_config()
    };
    let same = run_check(&cfg, &x, &x, None).unwrap();
    assert!(same.verified);
    assert_eq!(
        same.report.verdict.as_ref().unwrap().verdict.status,
        VerdictStatus::Verified
    );

    let shifted = run_check(&cfg, &x, &far, None).unwrap();
    let v = shifted.report.verdict.as_ref().unwrap();
    assert!(!shifted.verified);
    assert!(!v.within_epsilon);
    assert_eq!(v.verdict.status, VerdictStatus::NotVerified);
    assert!(v.verdict.threshold > 0.05, "the threshold alone would pass");
}

#[test]
fn overlapping_classes_are_not_certifiable() {
    let x = gaussian(40, &[0.0, 0.0], 3, 0);
    let run = run_check(&base_config(), &x, &x, Some(&blobs(0.0, 3))).unwrap();
    let p = run.report.parameters.as_ref().unwrap();
    assert!(p.delta.unwrap() <= 0.0);
    assert_eq!(p.separable, Some(false));
    assert!(!run.verified);
    assert_eq!(
        run.report.verdict.unwrap().verdict.status,
        VerdictStatus::NotCertifiable
    );
    assert!(run.report.notes.iter().any(|n| n.contains("not separable")));
}

#[test]
fn changing_the_seed_changes_the_bootstrap() {
    let x = gaussian(30, &[0.0, 0.0], 4, 0);
    let y = gaussian(30, &[0.5, 0.0], 4, 1);
    let (_, a) = run_estimate(&base_config(), &x, &y, None).unwrap();
    let (_, b) = run_estimate(
        &RunConfig {
            seed: Some(2),
            ..base_config()
        },
        &x,
        &y,
        None,
    )
    .unwrap();
    let (_, again) = run_estimate(&base_config(), &x, &y, None).unwrap();
    assert_ne!(a.replicates, b.replicates);
    assert_eq!(a.replicates, again.replicates);
}

#[test]
fn estimate_reports_sources() {
    let x = gaussian(30, &[0.0, 0.0], 5, 0);
    let cfg = RunConfig {
        gamma: Some(0.3),
        ..base_config()
    };
    let (report, _) = run_estimate(&cfg, &x, &x, Some(&blobs(8.0, 5))).unwrap();
    let p = report.parameters.unwrap();
    assert_eq!(p.gamma, 0.3);
    assert!(p.separable.unwrap());
    let json = serde_json::to_value(&p.sources).unwrap();
    assert_eq!(json["gamma"], "explicit");
    assert_eq!(json["epsilon"], "estimated");
    assert_eq!(json["delta"], "estimated");
}

#[test]
fn wasserstein_of_identical_samples_is_zero() {
    let x = gaussian(25, &[1.0, -1.0, 0.0], 6, 0);
    let report = run_wasserstein(&base_config(), &x, &x.select(&(0..25).rev().collect::<Vec<_>>())).unwrap();
    assert_eq!(report.wasserstein.unwrap().estimate, 0.0);
}

#[test]
fn hoare_identity_world_passes_and_a_long_jump_fails() {
    let states = gaussian(80, &[0.0, 0.0], 7, 0);
    let cfg = RunConfig {
        epsilon: Some(1.0),
        gamma: Some(0.1),
        delta: Some(2.0),
        x0: X0Spec::Point(vec![0.0, 0.0]),
        predicates: Some(Predicates {
            f: PredicateSpec::Constant { value: 1.0 },
            l: PredicateSpec::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
        }),
        ..base_config()
    };
    let ok = run_hoare(&cfg, &states).unwrap();
    assert!(ok.passed);

    let jumping = RunConfig {
        transformer: TransformerSpec::Translation { vector: vec![0.6, 0.8] },
        ..cfg.clone()
    };
    let bad = run_hoare(&jumping, &states).unwrap();
    assert!(!bad.passed);
    let c1 = bad.report.hoare.iter().find(|t| t.triple.to_string() == "C1").unwrap();
    assert!(!c1.holds);
    assert_eq!(c1.counterexamples.len(), 80);
}

#[test]
fn hoare_reports_both_semantics_for_nondeterministic_programs() {
    let states = gaussian(40, &[0.0, 0.0], 8, 0);
    let cfg = RunConfig {
        epsilon: Some(1.0),
        gamma: Some(0.1),
        delta: Some(3.0),
        semantics: SemanticsChoice::Both,
        transformer: TransformerSpec::Jump {
            vector: vec![0.05, 0.0],
        },
        ..base_config()
    };
    let run = run_hoare(&cfg, &states).unwrap();
    let u2: Vec<_> = run
        .report
        .hoare
        .iter()
        .filter(|t| t.triple.to_string().starts_with("U2"))
        .collect();
    assert_eq!(u2.len(), 2);
}

#[test]
fn dataset_round_trip_preserves_values_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("blobs.csv");
    let data = blobs(4.0, 9);
    write_sample_csv(&path, data.sample(), Some(&data)).unwrap();
    let loaded = load_dataset(&DatasetFile::new(&path).with_labels(Some(LabelColumn::Index(2)))).unwrap();
    let back = loaded.labeled().unwrap();
    assert_eq!(back.sample().as_flat(), data.sample().as_flat());
    assert_eq!(back.labels(), data.labels());
}

#[test]
fn simulation_streams_are_reproducible() {
    let cfg = RunConfig {
        seed: Some(3),
        ..RunConfig::simulation_default()
    };
    let a = simulate_data(&cfg).unwrap();
    let b = simulate_data(&cfg).unwrap();
    assert_eq!(a.source, b.source);
    assert_eq!(a.target, b.target);
    assert_ne!(a.source, a.target);
    let other = simulate_data(&RunConfig { seed: Some(4), ..cfg }).unwrap();
    assert_ne!(a.source, other.source);
}
