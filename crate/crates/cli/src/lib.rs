//! Command-line front end: argument parsing, single and batch runs, and
//! performance-profile output.

use nlpkit::driver::options::{parse_option_file, resolve_options, Options, OptionsError};
use nlpkit::driver::{solve, SolveError, SolveResult};
use nlpkit::model::{corpus_entries, corpus_get, CorpusEntry};
use nlpkit::profile::{performance_profile, write_profile_csv, write_records_csv, RunRecord};
use nlpkit::relaxation::Phase;
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const SELECTORS: [&str; 4] = [
    "constraint_relaxation_strategy",
    "subproblem",
    "globalization_strategy",
    "globalization_mechanism",
];

/// Configurations compared by `--profile`.
pub const PROFILE_CONFIGS: [(&str, &str, &[(&str, &str)]); 4] = [
    ("filtersqp", "filtersqp", &[]),
    ("ipopt", "ipopt", &[]),
    ("byrd", "byrd", &[]),
    ("byrd TR", "byrd", &[("globalization_mechanism", "TR")]),
];

#[derive(Debug, Error, PartialEq)]
pub enum UsageError {
    #[error("missing value for `{0}`")]
    MissingValue(String),
    #[error("unknown flag `{0}`")]
    UnknownFlag(String),
    #[error("`-option` expects KEY=VALUE, got `{0}`")]
    BadOption(String),
    #[error("expected one problem name or --all")]
    NoProblem,
    #[error("unexpected argument `{0}`")]
    ExtraArgument(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("cannot read `{path}`: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Options(#[from] OptionsError),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Invocation {
    pub preset: Option<String>,
    /// `(key, value)` pairs from the selector flags and `-option`, in order.
    pub options: Vec<(String, String)>,
    pub options_file: Option<PathBuf>,
    pub problem: Option<String>,
    pub all: bool,
    pub profile: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub help: bool,
}

pub const USAGE: &str = "\
usage: nlpkit [flags] PROBLEM
       nlpkit [flags] --all
       nlpkit [-option KEY=VALUE]... --profile OUT.csv [--records RUNS.csv]

flags:
  -preset NAME                          filtersqp | ipopt | byrd
  -constraint_relaxation_strategy S     feasibility_restoration | l1_relaxation
  -subproblem S                         QP | LP | primal_dual_IPM
  -globalization_strategy S             leyffer_filter_method | waechter_filter_method | l1_merit
  -globalization_mechanism S            LS | TR
  -option KEY=VALUE                     any solver option (repeatable)
  -options_file PATH                    `key value` lines, # comments
  --all                                 solve every corpus problem
  --profile PATH                        benchmark the presets and write a performance profile
  --records PATH                        with --profile, also write the raw run records
  --list                                print the corpus problem names
";

pub fn parse_args<S: AsRef<str>>(args: &[S]) -> Result<Invocation, UsageError> {
    let mut inv = Invocation::default();
    let mut it = args.iter().map(AsRef::as_ref);
    while let Some(arg) = it.next() {
        let mut value = |flag: &str| it.next().map(str::to_string).ok_or_else(|| UsageError::MissingValue(flag.into()));
        match arg {
            "-h" | "--help" => inv.help = true,
            "--all" => inv.all = true,
            "-preset" => inv.preset = Some(value(arg)?),
            "-option" => {
                let kv = value(arg)?;
                let (k, v) = kv.split_once('=').ok_or_else(|| UsageError::BadOption(kv.clone()))?;
                inv.options.push((k.trim().into(), v.trim().into()));
            }
            "-options_file" => inv.options_file = Some(value(arg)?.into()),
            "--profile" => inv.profile = Some(value(arg)?.into()),
            "--records" => inv.records = Some(value(arg)?.into()),
            flag if flag.starts_with('-') => {
                let key = &flag[1..];
                if SELECTORS.contains(&key) {
                    inv.options.push((key.into(), value(flag)?));
                } else {
                    return Err(UsageError::UnknownFlag(flag.into()));
                }
            }
            name => {
                if inv.problem.is_some() {
                    return Err(UsageError::ExtraArgument(name.into()));
                }
                inv.problem = Some(name.into());
            }
        }
    }
    if inv.help {
        return Ok(inv);
    }
    match (&inv.problem, inv.all, &inv.profile) {
        (Some(_), false, None) | (None, true, None) | (None, false, Some(_)) => Ok(inv),
        (Some(p), _, _) => Err(UsageError::ExtraArgument(p.clone())),
        (None, true, Some(_)) => Err(UsageError::ExtraArgument("--all".into())),
        (None, false, None) => Err(UsageError::NoProblem),
    }
}

fn read_file_options(inv: &Invocation) -> Result<Vec<(String, String)>, UsageError> {
    let Some(path) = &inv.options_file else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| UsageError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(parse_option_file(&text)?)
}

/// Options with precedence command line > file > preset > defaults.
pub fn invocation_options(inv: &Invocation) -> Result<Options, UsageError> {
    let file = read_file_options(inv)?;
    let opts = resolve_options(inv.preset.as_deref(), &file, &inv.options)?;
    nlpkit::driver::options::validate(&opts)?;
    Ok(opts)
}

fn entry(name: &str) -> Result<CorpusEntry, UsageError> {
    corpus_entries()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| UsageError::UnknownProblem(name.into()))
}

pub fn run_record(entry: &CorpusEntry, config: &str, options: &Options) -> Result<(RunRecord, SolveResult), SolveError> {
    let model = corpus_get(entry.name)?;
    let start = Instant::now();
    let result = solve(model, options)?;
    let record = RunRecord {
        problem: entry.name.into(),
        config: config.into(),
        status: result.status,
        expected_infeasible: entry.infeasible,
        objective_evaluations: result.counts.objective,
        iterations: result.iterations,
        objective: result.objective,
        infeasibility: result.infeasibility,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((record, result))
}

/// Runs every corpus problem under one option set; records come back in
/// corpus order.
pub fn run_corpus(config: &str, options: &Options) -> Result<Vec<RunRecord>, SolveError> {
    corpus_entries()
        .par_iter()
        .map(|e| run_record(e, config, options).map(|(r, _)| r))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.3e}"))
}

pub fn write_iteration_log(result: &SolveResult, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>5}  {:<11}  {:>10}  {:>10}  {:>11}  {:>10}  {:>9}  {:>10}",
        "iter", "phase", "step", "radius", "eta", "objective", "rho", "mu"
    )?;
    for h in &result.diagnostics.history {
        let phase = match h.phase {
            Phase::Optimality => "optimality",
            Phase::Restoration => "restoration",
        };
        writeln!(
            out,
            "{:>5}  {:<11}  {:>10.3e}  {:>10}  {:>11.4e}  {:>10}  {:>9.2e}  {:>10}",
            h.iteration,
            phase,
            h.step_norm,
            fmt_opt(h.radius),
            h.eta,
            fmt_opt(h.objective),
            h.rho,
            fmt_opt(h.mu)
        )?;
    }
    Ok(())
}

pub fn write_summary(result: &SolveResult, out: &mut dyn Write) -> std::io::Result<()> {
    for w in &result.diagnostics.warnings {
        writeln!(out, "warning: {w}")?;
    }
    writeln!(
        out,
        "{}  objective {:.10e}  infeasibility {:.3e}  iterations {}  objective evaluations {}",
        result.status, result.objective, result.infeasibility, result.iterations, result.counts.objective
    )?;
    writeln!(out, "x = {:?}", result.x)
}

fn create(path: &PathBuf) -> Result<std::fs::File, UsageError> {
    std::fs::File::create(path).map_err(|e| UsageError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn execute(inv: &Invocation, out: &mut dyn Write) -> Result<i32, UsageError> {
    let io = |e: std::io::Error| UsageError::File {
        path: "<stdout>".into(),
        message: e.to_string(),
    };
    if let Some(path) = &inv.profile {
        let file = read_file_options(inv)?;
        let mut records = Vec::new();
        for (label, preset, extra) in PROFILE_CONFIGS {
            let mut cli: Vec<(String, String)> = extra.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            cli.extend(inv.options.iter().cloned());
            let opts = resolve_options(Some(preset), &file, &cli)?;
            let rs = run_corpus(label, &opts).map_err(|e| UsageError::File {
                path: label.into(),
                message: e.to_string(),
            })?;
            let solved = rs.iter().filter(|r| r.solved()).count();
            writeln!(out, "{label}: solved {solved}/{}", rs.len()).map_err(io)?;
            records.extend(rs);
        }
        let table = performance_profile(&records);
        write_profile_csv(&table, create(path)?).map_err(|e| UsageError::File {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if let Some(rpath) = &inv.records {
            write_records_csv(&records, create(rpath)?).map_err(|e| UsageError::File {
                path: rpath.display().to_string(),
                message: e.to_string(),
            })?;
        }
        return Ok(EXIT_SUCCESS);
    }

    let opts = invocation_options(inv)?;
    if inv.all {
        let rs = run_corpus("cli", &opts).map_err(|e| UsageError::File {
            path: "corpus".into(),
            message: e.to_string(),
        })?;
        for r in &rs {
            writeln!(
                out,
                "{:<12} {:<22} iterations {:>4}  objective evaluations {:>4}  objective {:.10e}",
                r.problem, r.status, r.iterations, r.objective_evaluations, r.objective
            )
            .map_err(io)?;
        }
        let solved = rs.iter().filter(|r| r.solved()).count();
        writeln!(out, "solved {solved}/{}", rs.len()).map_err(io)?;
        return Ok(if solved == rs.len() { EXIT_SUCCESS } else { EXIT_FAILURE });
    }

    let name = inv.problem.as_deref().ok_or(UsageError::NoProblem)?;
    let e = entry(name)?;
    let (record, result) = run_record(&e, "cli", &opts).map_err(|err| UsageError::File {
        path: name.into(),
        message: err.to_string(),
    })?;
    write_iteration_log(&result, out).map_err(io)?;
    write_summary(&result, out).map_err(io)?;
    Ok(if record.solved() { EXIT_SUCCESS } else { EXIT_FAILURE })
}

/// Parses `args` (without the program name), runs, and returns the exit code.
pub fn parse_and_run<S: AsRef<str>>(args: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.iter().any(|a| a.as_ref() == "--list") {
        for e in corpus_entries() {
            let _ = writeln!(out, "{}", e.name);
        }
        return EXIT_SUCCESS;
    }
    let inv = match parse_args(args) {
        Ok(inv) => inv,
        Err(e) => {
            let _ = writeln!(err, "error: {e}\n\n{USAGE}");
            return EXIT_USAGE;
        }
    };
    if inv.help {
        let _ = write!(out, "{USAGE}");
        return EXIT_SUCCESS;
    }
    match execute(&inv, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
