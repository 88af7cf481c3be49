//! One line per acceptance criterion; exits nonzero if any fails.

mod common;

use common::*;
use nlpkit::driver::options::{resolve_options, Options, OptionsError, RESTORATION_MERIT_WARNING};
use nlpkit::driver::{solve, SolveError, SolveResult, Status};
use nlpkit::globalization::Filter;
use nlpkit::linalg::{ldlt_factorize, qp_solve, Inertia, Matrix, QpData, QpStatus};
use nlpkit::model::{check_derivatives, corpus_entries, corpus_get, CorpusEntry, Model};
use nlpkit::reformulation::to_equality_form;
use nlpkit::relaxation::{error_measure, l1_sign_residual, lagrangian_gradient};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const EPS: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(failures: Vec<String>, summary: String) -> Outcome {
    let pass = failures.is_empty();
    let detail = if pass {
        summary
    } else {
        let shown: Vec<&str> = failures.iter().take(6).map(String::as_str).collect();
        format!("{summary}; {} failure(s): {}", failures.len(), shown.join("; "))
    };
    Outcome { pass, detail }
}

fn options(preset: &str, extra: &[(&str, &str)]) -> Options {
    let mut cli = vec![("tolerance".to_string(), EPS.to_string())];
    cli.extend(extra.iter().map(|(k, v)| (k.to_string(), v.to_string())));
    resolve_options(Some(preset), &[], &cli).unwrap()
}

struct Run {
    entry: CorpusEntry,
    config: &'static str,
    result: Result<SolveResult, SolveError>,
    elapsed: Duration,
}

const CONFIGS: [(&str, &str, &[(&str, &str)]); 4] = [
    ("filtersqp", "filtersqp", &[]),
    ("ipopt", "ipopt", &[]),
    ("byrd", "byrd", &[]),
    ("byrd TR", "byrd", &[("globalization_mechanism", "TR")]),
];

fn run_corpus() -> Vec<Run> {
    let mut runs = Vec::new();
    for (config, preset, extra) in CONFIGS {
        let opts = options(preset, extra);
        for entry in corpus_entries() {
            let start = Instant::now();
            let result = solve(corpus_get(entry.name).unwrap(), &opts);
            runs.push(Run {
                entry,
                config,
                result,
                elapsed: start.elapsed(),
            });
        }
    }
    runs
}

fn corpus_outcomes(runs: &[Run]) -> Outcome {
    let mut failures = Vec::new();
    let mut feasible = 0;
    for r in runs {
        let Ok(res) = &r.result else {
            failures.push(format!("{} {}: error", r.config, r.entry.name));
            continue;
        };
        if res.iterations > 1000 {
            failures.push(format!("{} {}: {} iterations", r.config, r.entry.name, res.iterations));
        }
        if r.entry.infeasible {
            let required = r.config == "filtersqp" || r.config == "ipopt";
            if required && res.status != Status::InfeasibleStationary {
                failures.push(format!("{} {}: {}", r.config, r.entry.name, res.status));
            }
        } else {
            if r.config == "filtersqp" {
                feasible += 1;
            }
            if !matches!(res.status, Status::FeasibleKkt | Status::LooseToleranceKkt) {
                failures.push(format!("{} {}: {}", r.config, r.entry.name, res.status));
            }
        }
    }
    let total: Duration = runs.iter().map(|r| r.elapsed).sum();
    if feasible < 25 {
        failures.push(format!("only {feasible} feasible problems"));
    }
    if total.as_secs_f64() >= 60.0 {
        failures.push(format!("runtime {:.1}s", total.as_secs_f64()));
    }
    outcome(
        failures,
        format!("{feasible} feasible problems, {} runs in {:.2}s", runs.len(), total.as_secs_f64()),
    )
}

fn booth_evaluations() -> Outcome {
    let mut failures = Vec::new();
    let mut counts = Vec::new();
    for (preset, limit) in [("filtersqp", 3), ("byrd", 4)] {
        match solve(corpus_get("booth").unwrap(), &options(preset, &[])) {
            Ok(r) => {
                counts.push(format!("{preset} {}", r.counts.objective));
                if r.status != Status::FeasibleKkt || r.counts.objective > limit {
                    failures.push(format!("{preset}: {} with {} evaluations", r.status, r.counts.objective));
                }
            }
            Err(e) => failures.push(format!("{preset}: {e}")),
        }
    }
    outcome(failures, counts.join(", "))
}

fn solved(r: &Run) -> bool {
    r.result.as_ref().is_ok_and(|res| res.status.is_success(r.entry.infeasible))
}

fn trust_region_success(runs: &[Run]) -> Outcome {
    let count = |config: &str| runs.iter().filter(|r| r.config == config && solved(r)).count();
    let (ls, tr) = (count("byrd"), count("byrd TR"));
    let failures = if tr >= ls {
        vec![]
    } else {
        vec![format!("TR {tr} < LS {ls}")]
    };
    outcome(failures, format!("TR solved {tr}, LS solved {ls}"))
}

fn qp_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    for case in 0..200 {
        let c = random_convex_qp(&mut rng);
        let Some((d_ref, f_ref)) = enumerate_qp(&c) else {
            failures.push(format!("case {case}: oracle found no feasible face"));
            continue;
        };
        let qp = QpData {
            w: c.w.clone(),
            g: c.g.clone(),
            a: c.a.clone(),
            b: c.b.clone(),
            lower: c.lower.clone(),
            upper: c.upper.clone(),
        };
        match qp_solve(&qp, None) {
            Ok(s) if s.status == QpStatus::Optimal => {
                let dx = s.d.iter().zip(&d_ref).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let df = (s.objective_value - f_ref).abs();
                worst = (worst.0.max(dx), worst.1.max(df));
                if dx > 1e-6 || df > 1e-8 {
                    failures.push(format!("case {case}: |dx| {dx:.1e}, |df| {df:.1e}"));
                }
            }
            Ok(s) => failures.push(format!("case {case}: {:?}", s.status)),
            Err(e) => failures.push(format!("case {case}: {e}")),
        }
    }
    outcome(failures, format!("200 QPs, max |dx| {:.1e}, max |df| {:.1e}", worst.0, worst.1))
}

fn sign_counts(vals: &[f64]) -> Inertia {
    let scale = vals.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let tol = 1e-10 * scale;
    Inertia::new(
        vals.iter().filter(|&&v| v > tol).count(),
        vals.iter().filter(|&&v| v < -tol).count(),
        vals.iter().filter(|&&v| v.abs() <= tol).count(),
    )
}

fn inertia_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let mut singular = 0;
    for case in 0..200 {
        let n = rng.gen_range(1..=12);
        let m = if case % 4 == 0 {
            // Rank-deficient: Bᵀ D B with B of rank k < n.
            let k = rng.gen_range(0..n);
            let b = Matrix::from_row_major(k, n, (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let d: Vec<f64> = (0..k).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            singular += 1;
            b.transpose().matmul(&Matrix::from_diagonal(&d)).matmul(&b)
        } else {
            random_symmetric(&mut rng, n)
        };
        let got = ldlt_factorize(&m).inertia();
        let want = sign_counts(&jacobi_eigenvalues(&m));
        if got != want {
            failures.push(format!("case {case} (n={n}): {got:?} vs {want:?}"));
        }
    }
    outcome(failures, format!("200 matrices up to 12x12, {singular} rank-deficient"))
}

fn filter_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    let point = |rng: &mut ChaCha8Rng| (rng.gen_range(0.0..10.0), rng.gen_range(-10.0..10.0));
    for seq in 0..1000 {
        let mut f = Filter::new(0.99, 1e-5, 8.0);
        let queries: Vec<(f64, f64)> = (0..20).map(|_| point(&mut rng)).collect();
        let len = rng.gen_range(1..60);
        for _ in 0..len {
            let before: Vec<bool> = queries.iter().map(|q| f.is_acceptable(q.0, q.1)).collect();
            let (eta, phi) = point(&mut rng);
            if rng.gen_bool(0.5) && !f.is_acceptable(eta, phi) {
                continue;
            }
            f.add(eta, phi);
            let e = f.entries();
            let dominated = (0..e.len()).any(|i| (0..e.len()).any(|j| i != j && e[i].0 <= e[j].0 && e[i].1 <= e[j].1));
            if dominated {
                failures.push(format!("sequence {seq}: dominated entry after inserting ({eta}, {phi})"));
                break;
            }
            if queries.iter().zip(&before).any(|(q, was)| !was && f.is_acceptable(q.0, q.1)) {
                failures.push(format!("sequence {seq}: insertion enlarged the acceptable region"));
                break;
            }
        }
        // Dropping entries never rejects more.
        let mut sub = Filter::new(0.99, 1e-5, 8.0);
        for e in f.entries().iter().filter(|_| rng.gen_bool(0.5)) {
            sub.add(e.0, e.1);
        }
        if queries.iter().any(|q| f.is_acceptable(q.0, q.1) && !sub.is_acceptable(q.0, q.1)) {
            failures.push(format!("sequence {seq}: smaller filter rejected more"));
        }
    }
    outcome(failures, "1000 insert/query sequences".into())
}

fn barrier_invariants(runs: &[Run]) -> Outcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut worst = 0.0f64;
    for r in runs.iter().filter(|r| r.config == "ipopt") {
        let Ok(res) = &r.result else { continue };
        for b in &res.diagnostics.barrier_checks {
            checks += 1;
            worst = worst.max(b.complementarity_residual);
            if !b.holds(1e-10) {
                failures.push(format!("{} iteration {}: {b:?}", r.entry.name, b.iteration));
            }
        }
    }
    if checks == 0 {
        failures.push("no interior-point iterates recorded".into());
    }
    outcome(
        failures,
        format!("{checks} accepted iterates, max complementarity residual {worst:.1e}"),
    )
}

fn derivative_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let entries = corpus_entries();
    for e in &entries {
        let m = corpus_get(e.name).unwrap();
        let (l, u) = m.variable_bounds();
        for _ in 0..10 {
            let x: Vec<f64> = (0..m.num_variables())
                .map(|i| rng.gen_range(-2.0..2.0f64).clamp(l[i], u[i]))
                .collect();
            match check_derivatives(m.as_ref(), &x, 1e-6) {
                Ok(rep) => {
                    worst = worst.max(rep.max_error());
                    if rep.max_error() > 1e-5 {
                        failures.push(format!("{} at {x:?}: {rep:?}", e.name));
                    }
                }
                Err(err) => failures.push(format!("{}: {err}", e.name)),
            }
        }
    }
    outcome(failures, format!("{} models x 10 points, max relative error {worst:.1e}", entries.len()))
}

fn steering(runs: &[Run]) -> Outcome {
    let mut failures = Vec::new();
    let mut checks = 0;
    for r in runs.iter().filter(|r| r.config.starts_with("byrd")) {
        let Ok(res) = &r.result else { continue };
        for (k, s) in res.diagnostics.steering_checks.iter().enumerate() {
            checks += 1;
            if !s.holds() {
                failures.push(format!("{} {} check {k}: {s:?}", r.config, r.entry.name));
            }
        }
    }
    if checks == 0 {
        failures.push("no steering checks recorded".into());
    }
    outcome(failures, format!("{checks} steering post-conditions"))
}

/// Recomputes the optimality or infeasibility measures from the returned
/// primal-dual point and the unscaled model.
fn certificates(runs: &[Run]) -> Outcome {
    let mut failures = Vec::new();
    let (mut kkt, mut infeasible) = (0, 0);
    for r in runs {
        let Ok(res) = &r.result else { continue };
        if !matches!(res.status, Status::FeasibleKkt | Status::InfeasibleStationary) {
            continue;
        }
        let eq = to_equality_form(corpus_get(r.entry.name).unwrap()).unwrap();
        let mut v = res.x.clone();
        v.extend(&res.slacks);
        let c = eq.constraints(&v);
        let zl: Vec<f64> = res.z.iter().map(|z| z.max(0.0)).collect();
        let zu: Vec<f64> = res.z.iter().map(|z| (-z).max(0.0)).collect();
        let lag = lagrangian_gradient(&eq.objective_gradient(&v), &eq.constraint_jacobian(&v), res.rho, &res.y, &zl, &zu);
        let name = format!("{} {}", r.config, r.entry.name);
        if res.status == Status::FeasibleKkt {
            kkt += 1;
            let e = error_measure(&lag, &res.y, &c);
            if e > 10.0 * EPS {
                failures.push(format!("{name}: E = {e:.2e}"));
            }
        } else {
            infeasible += 1;
            let eta: f64 = c.iter().map(|v| v.abs()).sum();
            let sign = l1_sign_residual(&res.y, &c);
            if eta <= EPS || sign > 10.0 * EPS {
                failures.push(format!("{name}: eta {eta:.2e}, sign residual {sign:.2e}"));
            }
        }
    }
    outcome(failures, format!("{kkt} KKT and {infeasible} infeasibility certificates"))
}

fn configuration_rules() -> Outcome {
    let mut failures = Vec::new();
    let tr = options("ipopt", &[("globalization_mechanism", "TR")]);
    match solve(corpus_get("hs071").unwrap(), &tr) {
        Err(SolveError::Options(OptionsError::Prohibited(_))) => {}
        other => failures.push(format!("IPM with TR: {:?}", other.map(|r| r.status))),
    }
    let merit = options("filtersqp", &[("globalization_strategy", "l1_merit")]);
    match solve(corpus_get("hs071").unwrap(), &merit) {
        Ok(r) => {
            if r.diagnostics.warnings != [RESTORATION_MERIT_WARNING] {
                failures.push(format!("restoration with merit warnings: {:?}", r.diagnostics.warnings));
            }
            if r.iterations == 0 {
                failures.push("restoration with merit did not run".into());
            }
        }
        Err(e) => failures.push(format!("restoration with merit: {e}")),
    }
    outcome(failures, "IPM+TR rejected, restoration+merit warns once".into())
}

fn main() {
    let runs = run_corpus();
    let results: Vec<(&str, Outcome)> = vec![
        ("corpus solved by every preset", corpus_outcomes(&runs)),
        ("Booth-class evaluation counts", booth_evaluations()),
        ("byrd TR succeeds at least as often as LS", trust_region_success(&runs)),
        ("QP solver matches enumeration", qp_oracle()),
        ("LDLT inertia matches eigenvalues", inertia_oracle()),
        ("filter dominance and envelope", filter_invariants()),
        ("barrier iterate invariants", barrier_invariants(&runs)),
        ("finite-difference derivative checks", derivative_checks()),
        ("steering post-conditions", steering(&runs)),
        ("independent KKT and infeasibility measures", certificates(&runs)),
        ("configuration rules", configuration_rules()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}  {name}: {}", k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
