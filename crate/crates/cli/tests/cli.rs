use nlpkit::profile::{read_profile_csv, read_records_csv};
use nlpkit_cli::{parse_and_run, parse_args, UsageError, EXIT_FAILURE, EXIT_SUCCESS, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = parse_and_run(args, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn filtersqp_solves_booth() {
    let (code, out, _) = run(&["-preset", "filtersqp", "booth"]);
    assert_eq!(code, EXIT_SUCCESS);
    assert!(out.contains("FeasibleKKT"));
}

#[test]
fn byrd_with_trust_region_runs() {
    let (code, out, _) = run(&["-preset", "byrd", "-globalization_mechanism", "TR", "hs021"]);
    assert_eq!(code, EXIT_SUCCESS, "{out}");
    // The radius column is filled in on every iteration row.
    let rows: Vec<&str> = out.lines().skip(1).take_while(|l| !l.starts_with("FeasibleKKT")).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.split_whitespace().nth(3) != Some("-")));
}

#[test]
fn interior_point_with_trust_region_is_a_usage_error() {
    let (code, _, err) = run(&["-subproblem", "primal_dual_IPM", "-globalization_mechanism", "TR", "booth"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("prohibited"));
}

#[test]
fn infeasible_problem_is_a_success_when_certified() {
    let (code, out, _) = run(&["-preset", "ipopt", "infeasible1"]);
    assert_eq!(code, EXIT_SUCCESS);
    assert!(out.contains("InfeasibleStationary"));
}

#[test]
fn iteration_limit_exits_with_failure() {
    let (code, out, _) = run(&["-preset", "filtersqp", "-option", "max_iterations=2", "hs001"]);
    assert_eq!(code, EXIT_FAILURE);
    assert!(out.contains("IterationLimit"));
}

#[test]
fn usage_errors() {
    assert_eq!(parse_args::<&str>(&[]), Err(UsageError::NoProblem));
    assert_eq!(parse_args(&["-preset"]), Err(UsageError::MissingValue("-preset".into())));
    assert_eq!(parse_args(&["-option", "tolerance"]), Err(UsageError::BadOption("tolerance".into())));
    assert_eq!(parse_args(&["-colour", "x", "booth"]), Err(UsageError::UnknownFlag("-colour".into())));
    assert_eq!(parse_args(&["booth", "hs021"]), Err(UsageError::ExtraArgument("hs021".into())));
    assert_eq!(run(&["nosuchproblem"]).0, EXIT_USAGE);
    let (code, _, err) = run(&["-option", "tolerence=1e-3", "booth"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("tolerance"));
}

#[test]
fn command_line_beats_file_beats_preset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("opts.txt");
    std::fs::write(&path, "# test\nglobalization_mechanism LS\nmax_iterations 3\n").unwrap();
    let p = path.to_str().unwrap();
    let inv = parse_args(&["-preset", "filtersqp", "-options_file", p, "-option", "max_iterations=7", "hs001"]).unwrap();
    let o = nlpkit_cli::invocation_options(&inv).unwrap();
    assert_eq!(o.get("globalization_mechanism"), "LS");
    assert_eq!(o.get("max_iterations"), "7");
    assert_eq!(o.get("subproblem"), "QP");
}

#[test]
fn profile_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.csv");
    let records = dir.path().join("runs.csv");
    let (code, out, err) = run(&[
        "--profile",
        profile.to_str().unwrap(),
        "--records",
        records.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_SUCCESS, "{err}");
    assert_eq!(out.lines().count(), 4);
    let table = read_profile_csv(std::fs::File::open(&profile).unwrap()).unwrap();
    assert_eq!(table.curves.len(), 4);
    assert_eq!(table.taus.len(), 64);
    for (_, curve) in &table.curves {
        assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        assert!(curve.iter().all(|&f| (0.0..=1.0).contains(&f)));
    }
    let runs = read_records_csv(std::fs::File::open(&records).unwrap()).unwrap();
    assert_eq!(runs.len(), 4 * nlpkit::model::corpus_names().len());
}

#[test]
fn all_runs_are_in_corpus_order() {
    let (code, out, _) = run(&["--all", "-preset", "filtersqp"]);
    assert_eq!(code, EXIT_SUCCESS);
    let names: Vec<&str> = out.lines().filter_map(|l| l.split_whitespace().next()).collect();
    let corpus = nlpkit::model::corpus_names();
    assert_eq!(&names[..corpus.len()], &corpus[..]);
}
