use nlpkit_wasm::{corpus, filter_trace, profile, trajectory};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn corpus_lists_every_problem() {
    let v = parse(&corpus());
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, nlpkit::model::corpus_names());
}

#[test]
fn trajectory_ends_at_the_solution() {
    let v = parse(&trajectory("hs021", "byrd", "TR"));
    assert_eq!(v["status"], "FeasibleKKT");
    let its = v["iterates"].as_array().unwrap();
    assert!(!its.is_empty());
    assert!(its.iter().all(|i| i["radius"].is_number()));
    let x = v["x"].as_array().unwrap();
    assert!((x[0].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn filter_trace_of_a_filter_method() {
    let v = parse(&filter_trace("hs071", "filtersqp", ""));
    assert_eq!(v["status"], "FeasibleKKT");
    assert_eq!(v["path"].as_array().unwrap().len(), v["filter_sizes"].as_array().unwrap().len());
}

#[test]
fn errors_come_back_as_json() {
    assert!(parse(&trajectory("nosuch", "filtersqp", ""))["error"].is_string());
    assert!(parse(&trajectory("booth", "nosuch", ""))["error"].is_string());
    assert!(parse(&trajectory("booth", "ipopt", "TR"))["error"].as_str().unwrap().contains("prohibited"));
}

#[test]
fn profile_curves_are_monotone() {
    let v = parse(&profile(1e-6));
    assert_eq!(v["taus"].as_array().unwrap().len(), 64);
    for c in v["curves"].as_array().unwrap() {
        let f: Vec<f64> = c["fractions"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(f.windows(2).all(|w| w[0] <= w[1]));
        assert!(*f.last().unwrap() <= 1.0);
    }
}
