use cycle_census::analytic::Count;
use cycle_census::ensembles::{
    records_jsonl, run_rigid_subrun, run_slln, run_theorem_a, run_theorem_b_tail, ExperimentConfig, ExperimentKind,
};
use cycle_census::family::{FamilySpec, SequenceSpec};
use cycle_census::io::parse_sample_record;
use cycle_census::poincare::SolverConfig;

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn rigid_three_root_subrun_finds_three_cycles() {
    let records = run_rigid_subrun(&[0.04, 0.09, 0.16], 7, 10, 11, &SolverConfig::default(), 0.5).unwrap();
    assert_eq!(records.len(), 10);
    for r in &records {
        assert_eq!(r.real_cycles, Some(Count::Finite(3)), "{r:?}");
    }
}

#[test]
fn theorem_a_output_is_independent_of_thread_count() {
    let cfg = ExperimentConfig { samples: 12, seed: 99, ..Default::default() };
    let one = in_pool(1, || records_jsonl(&run_theorem_a(&cfg).unwrap().records));
    let four = in_pool(4, || records_jsonl(&run_theorem_a(&cfg).unwrap().records));
    assert_eq!(one, four);
}

#[test]
fn records_round_trip_through_jsonl() {
    let cfg = ExperimentConfig { samples: 4, seed: 3, ..Default::default() };
    let report = run_theorem_a(&cfg).unwrap();
    let text = records_jsonl(&report.records);
    let parsed: Vec<_> = text.lines().map(|l| parse_sample_record(l).unwrap()).collect();
    assert_eq!(parsed, report.records);
    assert!(!text.contains("wall_time"));
}

#[test]
fn real_cycles_never_exceed_complex_count() {
    let cfg = ExperimentConfig { samples: 60, seed: 5, ..Default::default() };
    let report = run_theorem_a(&cfg).unwrap();
    for r in &report.records {
        if let (Some(real), Some(complex)) = (r.real_cycles, r.complex_zero_count) {
            assert!(real <= complex, "{r:?}");
        }
    }
    assert!(report.complex_tail.is_nonincreasing());
    assert!(report.complex_tail.inclusion_rule.contains("solver failures excluded"));
}

#[test]
fn doubling_samples_shrinks_standard_error() {
    let spec = FamilySpec::Bernoulli { s: 0.5, p: 0.5 };
    let run = |samples| {
        let cfg = ExperimentConfig {
            experiment: ExperimentKind::TheoremBTail,
            family: Some(spec.clone()),
            samples,
            seed: 21,
            ..Default::default()
        };
        run_theorem_b_tail(&cfg).unwrap().2.unwrap().standard_error
    };
    let ratio = run(4000) / run(8000);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn theorem_a_standard_error_scales() {
    let run = |samples| {
        let cfg = ExperimentConfig { samples, seed: 8, ..Default::default() };
        run_theorem_a(&cfg).unwrap().complex_stats.unwrap().standard_error
    };
    let ratio = run(300) / run(600);
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn slln_limits_agree_across_seeds() {
    let spec = SequenceSpec::Hyperplane { c: 0.5, period: 4, s: 0.5 };
    let a = run_slln(&spec, 4000, 1).unwrap();
    let b = run_slln(&spec, 4000, 2).unwrap();
    let la = *a.running_means.last().unwrap();
    let lb = *b.running_means.last().unwrap();
    let se = (a.standard_error.powi(2) + b.standard_error.powi(2)).sqrt();
    assert!((la - lb).abs() < 3.0 * se, "{la} vs {lb}, se {se}");
    assert!(a.stabilized && b.stabilized);
    assert!(a.envelope_constant.is_finite() && a.envelope_constant > 0.0);
}
