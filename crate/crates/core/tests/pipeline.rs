use fracflow::config::{example, Command, RunSpec};
use fracflow::output::parse_sweep_csv;
use fracflow::pipeline::execute;
use fracflow::Error;

fn small(command: Command) -> RunSpec {
    let mut s = example(command);
    if let Some(d) = s.domain.as_mut() {
        d.resolution = 8.0;
    }
    s.sweep.l_values = vec![10.0, 20.0, 30.0];
    s.sweep.beta_values = vec![1e-4, 1e-2];
    s.validate.resolution = 1.0 / 16.0;
    s
}

#[test]
fn sweep_outputs_are_byte_identical_across_thread_counts() {
    let spec = small(Command::Sweep);
    let a = execute(&spec, 1).unwrap();
    let b = execute(&spec, 3).unwrap();
    assert_eq!(a, b);
    let (l, beta, j) = parse_sweep_csv(a.artifact("sweep.csv").unwrap()).unwrap();
    assert_eq!(l, vec![10.0, 20.0, 30.0]);
    assert_eq!(beta, vec![1e-4, 1e-2]);
    assert!(j.iter().flatten().all(|v| *v > 0.0));
    assert!(a.artifact("trend.json").is_some());
}

#[test]
fn artifacts_written_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = execute(&small(Command::Validate), 0).unwrap();
    out.write_to(dir.path().join("nested")).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("nested/validate.csv")).unwrap();
    assert_eq!(csv, out.artifact("validate.csv").unwrap());
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, fracflow::output::REPORT_COLUMNS);
    // three isotropic scalings, their refinements, three thicknesses
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 9);
    assert!(!out.check_failed);
}

#[test]
fn config_json_round_trip_reproduces_run() {
    let spec = small(Command::Inverse);
    let again = RunSpec::from_json(&spec.to_json()).unwrap();
    assert_eq!(execute(&spec, 0).unwrap(), execute(&again, 0).unwrap());
}

#[test]
fn invalid_spec_rejected_before_work() {
    let mut spec = small(Command::Sweep);
    spec.sweep.beta_values = vec![-1.0];
    assert!(matches!(execute(&spec, 0), Err(Error::Config(_)) | Err(Error::Domain(_))));
}
