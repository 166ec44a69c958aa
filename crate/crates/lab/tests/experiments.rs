use ergolab::{run_experiment, ExperimentConfig};

fn run(text: &str) -> ergolab::ReportBundle {
    run_experiment(&ExperimentConfig::parse(text).unwrap()).unwrap()
}

#[test]
fn every_experiment_dispatches() {
    let cases = [
        "experiment = entropy\nsystem = tent\nn_range = 1, 6\ngrid = 5000\nexpect.h_top_estimate = > 0.3",
        "experiment = stable-class\nsamples = 5000\nanchors = 3\nexpect.max_mass = < 0.01",
        "experiment = wandering\nsystem = tent\ninterval = 0.4, 0.45\nhorizon = 20\nexpect.verdict = not-wandering",
        "experiment = recurrence\nsystem = north-south\nsamples = 2000\nexpect.recurrence_fraction = <= 0.01",
        "experiment = lyapunov\nsystem = north-south\npoints = 0, 0.5\nexpect.violation_density = 0",
        "experiment = scrambled\nhorizon = 300\npairs = 5\ncandidates = 5",
    ];
    for c in cases {
        let b = run(c);
        assert!(b.passed(), "{c}: {:?}", b.diff());
        assert!(b.files.is_empty());
    }
}

#[test]
fn missing_metric_fails_expectation() {
    let b =
        run("experiment = entropy\nsystem = tent\nn_range = 1, 4\ngrid = 2000\nexpect.no_such = 1");
    assert!(!b.passed());
    assert!(b.diff()[0].contains("<missing>"));
}

#[test]
fn wandering_without_interval_is_an_error() {
    assert!(run_experiment(&ExperimentConfig::parse("experiment = wandering").unwrap()).is_err());
    assert!(run_experiment(
        &ExperimentConfig::parse("experiment = denjoy-suite\nsystem = tent").unwrap()
    )
    .is_err());
}
