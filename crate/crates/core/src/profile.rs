//! Benchmark records and performance profiles over objective evaluations.

use crate::driver::Status;
use std::io;
use thiserror::Error;

/// Outcome of one solver configuration on one problem.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub problem: String,
    pub config: String,
    pub status: Status,
    pub expected_infeasible: bool,
    pub objective_evaluations: usize,
    pub iterations: usize,
    pub objective: f64,
    pub infeasibility: f64,
    /// Seconds.
    pub wall_time: f64,
}

impl RunRecord {
    pub fn solved(&self) -> bool {
        self.status.is_success(self.expected_infeasible)
    }
}

/// Fraction of problems solved within each ratio of the best effort.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    pub taus: Vec<f64>,
    /// One curve per configuration, in order of first appearance.
    pub curves: Vec<(String, Vec<f64>)>,
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Field { line: u64, message: String },
}

pub const TAU_POINTS: usize = 64;
pub const TAU_MAX: f64 = 1024.0;

/// `TAU_POINTS` log-spaced ratios from 1 to `TAU_MAX`.
pub fn tau_grid() -> Vec<f64> {
    let top = TAU_MAX.log2();
    (0..TAU_POINTS)
        .map(|k| (top * k as f64 / (TAU_POINTS - 1) as f64).exp2())
        .collect()
}

/// Evaluation ratios against the best solving configuration, one row per
/// problem. Failures, and problems nobody solved, get an infinite ratio.
fn ratios(records: &[RunRecord], configs: &[String]) -> Vec<Vec<f64>> {
    let mut problems: Vec<&str> = records.iter().map(|r| r.problem.as_str()).collect();
    problems.sort_unstable();
    problems.dedup();
    problems
        .iter()
        .map(|p| {
            let effort = |c: &String| {
                records
                    .iter()
                    .find(|r| r.problem == *p && r.config == *c && r.solved())
                    .map(|r| r.objective_evaluations.max(1) as f64)
            };
            let efforts: Vec<Option<f64>> = configs.iter().map(effort).collect();
            let best = efforts.iter().flatten().fold(f64::INFINITY, |a, &b| a.min(b));
            efforts
                .iter()
                .map(|e| e.map_or(f64::INFINITY, |e| e / best))
                .collect()
        })
        .collect()
}

pub fn performance_profile(records: &[RunRecord]) -> ProfileTable {
    let mut configs: Vec<String> = Vec::new();
    for r in records {
        if !configs.contains(&r.config) {
            configs.push(r.config.clone());
        }
    }
    let rows = ratios(records, &configs);
    let taus = tau_grid();
    let n = rows.len().max(1) as f64;
    let curves = configs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let curve = taus
                .iter()
                .map(|&t| rows.iter().filter(|row| row[k] <= t).count() as f64 / n)
                .collect();
            (c.clone(), curve)
        })
        .collect();
    ProfileTable { taus, curves }
}

/// Scientific notation with 17 significant digits.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_float(s: &str, line: u64) -> Result<f64, CsvError> {
    s.parse().map_err(|_| CsvError::Field {
        line,
        message: format!("bad number `{s}`"),
    })
}

fn writer<W: io::Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

pub fn write_profile_csv<W: io::Write>(table: &ProfileTable, out: W) -> Result<(), CsvError> {
    let mut w = writer(out);
    w.write_record(["config", "tau", "fraction"])?;
    for (config, curve) in &table.curves {
        for (t, f) in table.taus.iter().zip(curve) {
            w.write_record([config.as_str(), &float(*t), &float(*f)])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_profile_csv<R: io::Read>(input: R) -> Result<ProfileTable, CsvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut taus: Vec<f64> = Vec::new();
    let mut curves: Vec<(String, Vec<f64>)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(CsvError::Field {
                line,
                message: "expected 3 fields".into(),
            });
        }
        let (config, tau, fraction) = (&rec[0], parse_float(&rec[1], line)?, parse_float(&rec[2], line)?);
        if curves.last().is_none_or(|(c, _)| c != config) {
            curves.push((config.to_string(), Vec::new()));
        }
        let first = curves.len() == 1;
        let curve = &mut curves.last_mut().unwrap().1;
        if first {
            taus.push(tau);
        } else if taus.get(curve.len()) != Some(&tau) {
            return Err(CsvError::Field {
                line,
                message: "configurations use different tau grids".into(),
            });
        }
        curve.push(fraction);
    }
    if curves.iter().any(|(_, c)| c.len() != taus.len()) {
        return Err(CsvError::Field {
            line: 0,
            message: "truncated curve".into(),
        });
    }
    Ok(ProfileTable { taus, curves })
}

const RECORD_HEADER: [&str; 9] = [
    "problem",
    "config",
    "status",
    "expected_infeasible",
    "objective_evaluations",
    "iterations",
    "objective",
    "infeasibility",
    "wall_time",
];

pub fn write_records_csv<W: io::Write>(records: &[RunRecord], out: W) -> Result<(), CsvError> {
    let mut w = writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.problem.clone(),
            r.config.clone(),
            r.status.to_string(),
            r.expected_infeasible.to_string(),
            r.objective_evaluations.to_string(),
            r.iterations.to_string(),
            float(r.objective),
            float(r.infeasibility),
            float(r.wall_time),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records_csv<R: io::Read>(input: R) -> Result<Vec<RunRecord>, CsvError> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| CsvError::Field { line, message };
        if rec.len() != RECORD_HEADER.len() {
            return Err(bad(format!("expected {} fields", RECORD_HEADER.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count `{s}`")));
        out.push(RunRecord {
            problem: rec[0].to_string(),
            config: rec[1].to_string(),
            status: rec[2].parse().map_err(bad)?,
            expected_infeasible: rec[3].parse().map_err(|_| bad(format!("bad flag `{}`", &rec[3])))?,
            objective_evaluations: int(&rec[4])?,
            iterations: int(&rec[5])?,
            objective: parse_float(&rec[6], line)?,
            infeasibility: parse_float(&rec[7], line)?,
            wall_time: parse_float(&rec[8], line)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(problem: &str, config: &str, status: Status, evals: usize) -> RunRecord {
        RunRecord {
            problem: problem.into(),
            config: config.into(),
            status,
            expected_infeasible: false,
            objective_evaluations: evals,
            iterations: 1,
            objective: 0.1,
            infeasibility: 0.0,
            wall_time: 1e-3,
        }
    }

    #[test]
    fn grid_endpoints() {
        let t = tau_grid();
        assert_eq!(t.len(), 64);
        assert_eq!(t[0], 1.0);
        assert_eq!(t[63], 1024.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn two_configs_one_problem() {
        let p = performance_profile(&[
            rec("p", "A", Status::FeasibleKkt, 2),
            rec("p", "B", Status::FeasibleKkt, 4),
        ]);
        let at = |k: usize, tau: f64| {
            let i = p.taus.iter().position(|&t| t >= tau).unwrap();
            p.curves[k].1[i]
        };
        assert_eq!((at(0, 1.0), at(1, 1.0)), (1.0, 0.0));
        assert_eq!((at(0, 2.0), at(1, 2.0)), (1.0, 1.0));
    }

    #[test]
    fn failure_plateau() {
        let mut rs: Vec<RunRecord> = (0..9).map(|i| rec(&format!("p{i}"), "A", Status::FeasibleKkt, 3)).collect();
        rs.push(rec("p9", "A", Status::IterationLimit, 3));
        let p = performance_profile(&rs);
        assert!(p.curves[0].1.iter().all(|&f| f == 0.9));
    }

    #[test]
    fn csv_round_trips() {
        let rs = vec![
            rec("p", "filtersqp", Status::FeasibleKkt, 2),
            rec("p", "byrd TR", Status::StepFailure, 9),
            rec("q", "filtersqp", Status::LooseToleranceKkt, 7),
        ];
        let table = performance_profile(&rs);
        let mut buf = Vec::new();
        write_profile_csv(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(!text.contains('\r'));
        assert_eq!(read_profile_csv(buf.as_slice()).unwrap(), table);

        let mut buf = Vec::new();
        write_records_csv(&rs, &mut buf).unwrap();
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), rs);
    }
}
