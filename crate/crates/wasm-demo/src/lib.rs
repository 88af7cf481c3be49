//! Browser bindings: solve a corpus problem and return its trajectory, trace
//! the filter, or compute a performance profile. Every entry point takes and
//! returns plain strings (JSON) so the same functions run natively in tests.

use nlpkit::driver::options::{resolve_options, Options};
use nlpkit::driver::{solve, SolveResult};
use nlpkit::model::{corpus_entries, corpus_get};
use nlpkit::profile::{performance_profile, RunRecord};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Iterate {
    iteration: usize,
    restoration: bool,
    x: Vec<f64>,
    eta: f64,
    objective: Option<f64>,
    step: f64,
    radius: Option<f64>,
    rho: f64,
    mu: Option<f64>,
}

#[derive(Serialize)]
struct Trajectory {
    problem: String,
    status: String,
    objective: f64,
    infeasibility: f64,
    x: Vec<f64>,
    objective_evaluations: usize,
    warnings: Vec<String>,
    iterates: Vec<Iterate>,
}

#[derive(Serialize)]
struct FilterTrace {
    problem: String,
    status: String,
    /// `(η, objective)` of each iterate with an evaluated objective.
    path: Vec<(f64, f64)>,
    /// Filter entries when the solve stopped.
    filter: Vec<(f64, f64)>,
    filter_sizes: Vec<usize>,
}

#[derive(Serialize)]
struct Profile {
    taus: Vec<f64>,
    curves: Vec<Curve>,
}

#[derive(Serialize)]
struct Curve {
    config: String,
    fractions: Vec<f64>,
    solved: usize,
    problems: usize,
}

#[derive(Serialize)]
struct ProblemInfo {
    name: &'static str,
    infeasible: bool,
}

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// Options for `preset` with an optional globalization mechanism override
/// (empty string keeps the preset's).
fn options(preset: &str, mechanism: &str) -> Result<Options, String> {
    let cli: Vec<(String, String)> = if mechanism.is_empty() {
        Vec::new()
    } else {
        vec![("globalization_mechanism".into(), mechanism.into())]
    };
    resolve_options(Some(preset), &[], &cli).map_err(|e| e.to_string())
}

fn run(problem: &str, preset: &str, mechanism: &str) -> Result<SolveResult, String> {
    let opts = options(preset, mechanism)?;
    let model = corpus_get(problem).map_err(|e| e.to_string())?;
    solve(model, &opts).map_err(|e| e.to_string())
}

/// Corpus problem names as a JSON array of `{name, infeasible}`.
#[wasm_bindgen]
pub fn corpus() -> String {
    let list: Vec<ProblemInfo> = corpus_entries()
        .into_iter()
        .map(|e| ProblemInfo {
            name: e.name,
            infeasible: e.infeasible,
        })
        .collect();
    serde_json::to_string(&list).unwrap()
}

/// Solves `problem` and returns the iterate sequence.
#[wasm_bindgen]
pub fn trajectory(problem: &str, preset: &str, mechanism: &str) -> String {
    let r = match run(problem, preset, mechanism) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let iterates = r
        .diagnostics
        .history
        .iter()
        .map(|h| Iterate {
            iteration: h.iteration,
            restoration: h.phase == nlpkit::relaxation::Phase::Restoration,
            x: h.x.clone(),
            eta: h.eta,
            objective: h.objective,
            step: h.step_norm,
            radius: h.radius,
            rho: h.rho,
            mu: h.mu,
        })
        .collect();
    let t = Trajectory {
        problem: problem.into(),
        status: r.status.to_string(),
        objective: r.objective,
        infeasibility: r.infeasibility,
        x: r.x,
        objective_evaluations: r.counts.objective,
        warnings: r.diagnostics.warnings,
        iterates,
    };
    serde_json::to_string(&t).unwrap()
}

/// Solves `problem` and returns the `(η, objective)` path with the final
/// filter.
#[wasm_bindgen]
pub fn filter_trace(problem: &str, preset: &str, mechanism: &str) -> String {
    let r = match run(problem, preset, mechanism) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let h = &r.diagnostics.history;
    let t = FilterTrace {
        problem: problem.into(),
        status: r.status.to_string(),
        path: h.iter().filter_map(|h| h.objective.map(|f| (h.eta, f))).collect(),
        filter: r.diagnostics.filter.clone(),
        filter_sizes: h.iter().map(|h| h.filter_size).collect(),
    };
    serde_json::to_string(&t).unwrap()
}

/// Runs the corpus under the three presets and the trust-region `byrd`
/// variant at tolerance `tolerance` and returns the performance profile.
#[wasm_bindgen]
pub fn profile(tolerance: f64) -> String {
    let configs: [(&str, &str, &str); 4] = [
        ("filtersqp", "filtersqp", ""),
        ("ipopt", "ipopt", ""),
        ("byrd", "byrd", ""),
        ("byrd TR", "byrd", "TR"),
    ];
    let mut records = Vec::new();
    for (label, preset, mechanism) in configs {
        let mut opts = match options(preset, mechanism) {
            Ok(o) => o,
            Err(e) => return error_json(e),
        };
        if let Err(e) = opts.set("tolerance", &tolerance.to_string()) {
            return error_json(e);
        }
        for e in corpus_entries() {
            let model = match corpus_get(e.name) {
                Ok(m) => m,
                Err(err) => return error_json(err),
            };
            let r = match solve(model, &opts) {
                Ok(r) => r,
                Err(err) => return error_json(err),
            };
            records.push(RunRecord {
                problem: e.name.into(),
                config: label.into(),
                status: r.status,
                expected_infeasible: e.infeasible,
                objective_evaluations: r.counts.objective,
                iterations: r.iterations,
                objective: r.objective,
                infeasibility: r.infeasibility,
                wall_time: 0.0,
            });
        }
    }
    let table = performance_profile(&records);
    let curves = table
        .curves
        .into_iter()
        .map(|(config, fractions)| {
            let own: Vec<&RunRecord> = records.iter().filter(|r| r.config == config).collect();
            Curve {
                solved: own.iter().filter(|r| r.solved()).count(),
                problems: own.len(),
                config,
                fractions,
            }
        })
        .collect();
    serde_json::to_string(&Profile {
        taus: table.taus,
        curves,
    })
    .unwrap()
}
