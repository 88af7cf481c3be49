//! Built-in analytic test problems (Hock–Schittkowski and CUTEst-style).

use super::{FnModel, Model, ModelError};
use crate::linalg::Matrix;
use std::sync::Arc;

const INF: f64 = f64::INFINITY;

/// Registry entry with known reference data.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    /// Known optimal objective value, when the problem is feasible.
    pub optimal_objective: Option<f64>,
    /// Known minimizer, when unique and available in closed form.
    pub solution: Option<Vec<f64>>,
    /// The constraints are inconsistent; solvers should certify infeasibility.
    pub infeasible: bool,
}

macro_rules! entry {
    ($name:expr, $f:expr) => {
        CorpusEntry {
            name: $name,
            optimal_objective: $f,
            solution: None,
            infeasible: false,
        }
    };
    ($name:expr, $f:expr, $x:expr) => {
        CorpusEntry {
            name: $name,
            optimal_objective: $f,
            solution: Some($x),
            infeasible: false,
        }
    };
}

pub fn corpus_entries() -> Vec<CorpusEntry> {
    let s7 = 7f64.sqrt();
    vec![
        entry!("booth", Some(0.0), vec![1.0, 3.0]),
        entry!("bt3", Some(176.0 / 43.0)),
        entry!("extrasim", Some(1.0), vec![0.0, 1.0]),
        entry!("genhs28", None),
        entry!("hs001", Some(0.0), vec![1.0, 1.0]),
        entry!("hs003", Some(0.0), vec![0.0, 0.0]),
        entry!("hs006", Some(0.0), vec![1.0, 1.0]),
        entry!("hs007", Some(-3f64.sqrt()), vec![0.0, 3f64.sqrt()]),
        entry!("hs010", Some(-1.0), vec![0.0, 1.0]),
        entry!("hs011", Some(-8.498_464_223)),
        entry!("hs012", Some(-30.0), vec![2.0, 3.0]),
        entry!("hs014", Some(9.0 - 2.875 * s7), vec![0.5 * (s7 - 1.0), 0.25 * (s7 + 1.0)]),
        entry!("hs021", Some(-99.96), vec![2.0, 0.0]),
        entry!("hs028", Some(0.0), vec![0.5, -0.5, 0.5]),
        entry!("hs035", Some(1.0 / 9.0), vec![4.0 / 3.0, 7.0 / 9.0, 4.0 / 9.0]),
        entry!("hs039", Some(-1.0), vec![1.0, 1.0, 0.0, 0.0]),
        entry!("hs040", Some(-0.25)),
        entry!("hs043", Some(-44.0), vec![0.0, 1.0, 2.0, -1.0]),
        entry!("hs048", Some(0.0), vec![1.0; 5]),
        entry!("hs051", Some(0.0), vec![1.0; 5]),
        entry!("hs071", Some(17.014_017_3)),
        entry!("hs076", Some(-4.681_818_181)),
        entry!("hs078", Some(-2.919_700_41)),
        CorpusEntry {
            name: "infeasible1",
            optimal_objective: None,
            solution: Some(vec![0.0]),
            infeasible: true,
        },
        CorpusEntry {
            name: "infeasible2",
            optimal_objective: None,
            solution: Some(vec![0.5f64.sqrt(), 0.5f64.sqrt()]),
            infeasible: true,
        },
        entry!("lp2", Some(-2.8), vec![1.6, 1.2]),
        entry!("maratos", Some(-1.0), vec![1.0, 0.0]),
        entry!("rosendisk", Some(0.045_674_808_9)),
        entry!("zangwil3", Some(0.0), vec![0.0, 0.0, 0.0]),
    ]
}

/// Names of all corpus problems in sorted order.
pub fn corpus_names() -> Vec<&'static str> {
    corpus_entries().into_iter().map(|e| e.name).collect()
}

pub fn corpus_get(name: &str) -> Result<Arc<dyn Model>, ModelError> {
    build(name)
        .map(|m| Arc::new(m) as Arc<dyn Model>)
        .ok_or_else(|| ModelError::UnknownProblem(name.to_string()))
}

fn sym(n: usize, entries: &[(usize, usize, f64)]) -> Matrix {
    let mut h = Matrix::zeros(n, n);
    for &(i, j, v) in entries {
        h[(i, j)] += v;
        if i != j {
            h[(j, i)] += v;
        }
    }
    h
}

fn rows(r: &[&[f64]]) -> Matrix {
    Matrix::from_rows(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>())
}

fn zero_f(_: &[f64]) -> f64 {
    0.0
}

fn no_c(_: &[f64]) -> Vec<f64> {
    Vec::new()
}

#[allow(clippy::too_many_arguments)]
fn model(
    name: &str,
    x0: Vec<f64>,
    bounds: (Vec<f64>, Vec<f64>),
    cbounds: (Vec<f64>, Vec<f64>),
    linear: Vec<bool>,
    f: fn(&[f64]) -> f64,
    grad: fn(&[f64]) -> Vec<f64>,
    c: fn(&[f64]) -> Vec<f64>,
    jac: fn(&[f64]) -> Matrix,
    hess: fn(&[f64], f64, &[f64]) -> Matrix,
) -> FnModel {
    FnModel {
        name: name.to_string(),
        lower: bounds.0,
        upper: bounds.1,
        c_lower: cbounds.0,
        c_upper: cbounds.1,
        x0,
        linear,
        f,
        grad,
        c,
        jac,
        hess,
    }
}

fn free(n: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![-INF; n], vec![INF; n])
}

fn eq(m: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![0.0; m], vec![0.0; m])
}

fn rosenbrock(x: &[f64]) -> f64 {
    100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
}

fn rosenbrock_grad(x: &[f64]) -> Vec<f64> {
    vec![
        -400.0 * x[0] * (x[1] - x[0] * x[0]) - 2.0 * (1.0 - x[0]),
        200.0 * (x[1] - x[0] * x[0]),
    ]
}

fn rosenbrock_hess(x: &[f64], rho: f64) -> Matrix {
    sym(
        2,
        &[
            (0, 0, rho * (1200.0 * x[0] * x[0] - 400.0 * x[1] + 2.0)),
            (0, 1, rho * -400.0 * x[0]),
            (1, 1, rho * 200.0),
        ],
    )
}

/// Objective shared by `bt3` and `hs051`.
fn hs051_f(x: &[f64]) -> f64 {
    (x[0] - x[1]).powi(2) + (x[1] + x[2] - 2.0).powi(2) + (x[3] - 1.0).powi(2) + (x[4] - 1.0).powi(2)
}

fn hs051_grad(x: &[f64]) -> Vec<f64> {
    let a = 2.0 * (x[0] - x[1]);
    let b = 2.0 * (x[1] + x[2] - 2.0);
    vec![a, -a + b, b, 2.0 * (x[3] - 1.0), 2.0 * (x[4] - 1.0)]
}

fn hs051_hess(_: &[f64], rho: f64, _: &[f64]) -> Matrix {
    sym(
        5,
        &[
            (0, 0, 2.0 * rho),
            (0, 1, -2.0 * rho),
            (1, 1, 4.0 * rho),
            (1, 2, 2.0 * rho),
            (2, 2, 2.0 * rho),
            (3, 3, 2.0 * rho),
            (4, 4, 2.0 * rho),
        ],
    )
}

fn hs051_jac(_: &[f64]) -> Matrix {
    rows(&[
        &[1.0, 3.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 1.0, 1.0, -2.0],
        &[0.0, 1.0, 0.0, 0.0, -1.0],
    ])
}

const GENHS28_N: usize = 10;

pub(crate) fn build(name: &str) -> Option<FnModel> {
    let m = match name {
        "booth" => model(
            "booth",
            vec![0.0, 0.0],
            free(2),
            eq(2),
            vec![true; 2],
            zero_f,
            |_| vec![0.0, 0.0],
            |x| vec![x[0] + 2.0 * x[1] - 7.0, 2.0 * x[0] + x[1] - 5.0],
            |_| rows(&[&[1.0, 2.0], &[2.0, 1.0]]),
            |_, _, _| Matrix::zeros(2, 2),
        ),
        "zangwil3" => model(
            "zangwil3",
            vec![100.0, -1.0, 2.5],
            free(3),
            eq(3),
            vec![true; 3],
            zero_f,
            |_| vec![0.0; 3],
            |x| vec![x[0] - x[1] + x[2], -x[0] + x[1] + x[2], x[0] + x[1] - x[2]],
            |_| rows(&[&[1.0, -1.0, 1.0], &[-1.0, 1.0, 1.0], &[1.0, 1.0, -1.0]]),
            |_, _, _| Matrix::zeros(3, 3),
        ),
        "extrasim" => model(
            "extrasim",
            vec![0.0, 0.0],
            (vec![0.0, -INF], vec![INF, INF]),
            eq(1),
            vec![true],
            |x| x[0] + 1.0,
            |_| vec![1.0, 0.0],
            |x| vec![x[0] + 2.0 * x[1] - 2.0],
            |_| rows(&[&[1.0, 2.0]]),
            |_, _, _| Matrix::zeros(2, 2),
        ),
        "lp2" => model(
            "lp2",
            vec![0.0, 0.0],
            (vec![0.0, 0.0], vec![INF, INF]),
            (vec![-INF, -INF], vec![4.0, 6.0]),
            vec![true; 2],
            |x| -x[0] - x[1],
            |_| vec![-1.0, -1.0],
            |x| vec![x[0] + 2.0 * x[1], 3.0 * x[0] + x[1]],
            |_| rows(&[&[1.0, 2.0], &[3.0, 1.0]]),
            |_, _, _| Matrix::zeros(2, 2),
        ),
        "hs001" => model(
            "hs001",
            vec![-2.0, 1.0],
            (vec![-INF, -1.5], vec![INF, INF]),
            eq(0),
            vec![],
            rosenbrock,
            rosenbrock_grad,
            no_c,
            |_| Matrix::zeros(0, 2),
            |x, rho, _| rosenbrock_hess(x, rho),
        ),
        "hs003" => model(
            "hs003",
            vec![10.0, 1.0],
            (vec![-INF, 0.0], vec![INF, INF]),
            eq(0),
            vec![],
            |x| x[1] + 1e-5 * (x[1] - x[0]).powi(2),
            |x| vec![-2e-5 * (x[1] - x[0]), 1.0 + 2e-5 * (x[1] - x[0])],
            no_c,
            |_| Matrix::zeros(0, 2),
            |_, rho, _| sym(2, &[(0, 0, 2e-5 * rho), (0, 1, -2e-5 * rho), (1, 1, 2e-5 * rho)]),
        ),
        "hs006" => model(
            "hs006",
            vec![-1.2, 1.0],
            free(2),
            eq(1),
            vec![false],
            |x| (1.0 - x[0]).powi(2),
            |x| vec![-2.0 * (1.0 - x[0]), 0.0],
            |x| vec![10.0 * (x[1] - x[0] * x[0])],
            |x| rows(&[&[-20.0 * x[0], 10.0]]),
            |_, rho, y| sym(2, &[(0, 0, 2.0 * rho + 20.0 * y[0])]),
        ),
        "hs007" => model(
            "hs007",
            vec![2.0, 2.0],
            free(2),
            eq(1),
            vec![false],
            |x| (1.0 + x[0] * x[0]).ln() - x[1],
            |x| vec![2.0 * x[0] / (1.0 + x[0] * x[0]), -1.0],
            |x| vec![(1.0 + x[0] * x[0]).powi(2) + x[1] * x[1] - 4.0],
            |x| rows(&[&[4.0 * x[0] * (1.0 + x[0] * x[0]), 2.0 * x[1]]]),
            |x, rho, y| {
                let s = 1.0 + x[0] * x[0];
                let f11 = (2.0 - 2.0 * x[0] * x[0]) / (s * s);
                let c11 = 4.0 + 12.0 * x[0] * x[0];
                sym(2, &[(0, 0, rho * f11 - y[0] * c11), (1, 1, -2.0 * y[0])])
            },
        ),
        "hs010" => model(
            "hs010",
            vec![-10.0, 10.0],
            free(2),
            (vec![0.0], vec![INF]),
            vec![false],
            |x| x[0] - x[1],
            |_| vec![1.0, -1.0],
            |x| vec![-3.0 * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[1] + 1.0],
            |x| rows(&[&[-6.0 * x[0] + 2.0 * x[1], 2.0 * x[0] - 2.0 * x[1]]]),
            |_, _, y| sym(2, &[(0, 0, 6.0 * y[0]), (0, 1, -2.0 * y[0]), (1, 1, 2.0 * y[0])]),
        ),
        "hs011" => model(
            "hs011",
            vec![4.9, 0.1],
            free(2),
            (vec![0.0], vec![INF]),
            vec![false],
            |x| (x[0] - 5.0).powi(2) + x[1] * x[1] - 25.0,
            |x| vec![2.0 * (x[0] - 5.0), 2.0 * x[1]],
            |x| vec![-x[0] * x[0] + x[1]],
            |x| rows(&[&[-2.0 * x[0], 1.0]]),
            |_, rho, y| sym(2, &[(0, 0, 2.0 * rho + 2.0 * y[0]), (1, 1, 2.0 * rho)]),
        ),
        "hs012" => model(
            "hs012",
            vec![0.0, 0.0],
            free(2),
            (vec![0.0], vec![INF]),
            vec![false],
            |x| 0.5 * x[0] * x[0] + x[1] * x[1] - x[0] * x[1] - 7.0 * x[0] - 7.0 * x[1],
            |x| vec![x[0] - x[1] - 7.0, 2.0 * x[1] - x[0] - 7.0],
            |x| vec![25.0 - 4.0 * x[0] * x[0] - x[1] * x[1]],
            |x| rows(&[&[-8.0 * x[0], -2.0 * x[1]]]),
            |_, rho, y| sym(2, &[(0, 0, rho + 8.0 * y[0]), (0, 1, -rho), (1, 1, 2.0 * rho + 2.0 * y[0])]),
        ),
        "hs014" => model(
            "hs014",
            vec![2.0, 2.0],
            free(2),
            (vec![0.0, 0.0], vec![0.0, INF]),
            vec![true, false],
            |x| (x[0] - 2.0).powi(2) + (x[1] - 1.0).powi(2),
            |x| vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] - 1.0)],
            |x| vec![x[0] - 2.0 * x[1] + 1.0, -0.25 * x[0] * x[0] - x[1] * x[1] + 1.0],
            |x| rows(&[&[1.0, -2.0], &[-0.5 * x[0], -2.0 * x[1]]]),
            |_, rho, y| sym(2, &[(0, 0, 2.0 * rho + 0.5 * y[1]), (1, 1, 2.0 * rho + 2.0 * y[1])]),
        ),
        "hs021" => model(
            "hs021",
            vec![-1.0, -1.0],
            (vec![2.0, -50.0], vec![50.0, 50.0]),
            (vec![10.0], vec![INF]),
            vec![true],
            |x| 0.01 * x[0] * x[0] + x[1] * x[1] - 100.0,
            |x| vec![0.02 * x[0], 2.0 * x[1]],
            |x| vec![10.0 * x[0] - x[1]],
            |_| rows(&[&[10.0, -1.0]]),
            |_, rho, _| sym(2, &[(0, 0, 0.02 * rho), (1, 1, 2.0 * rho)]),
        ),
        "hs028" => model(
            "hs028",
            vec![-4.0, 1.0, 1.0],
            free(3),
            eq(1),
            vec![true],
            |x| (x[0] + x[1]).powi(2) + (x[1] + x[2]).powi(2),
            |x| {
                let a = 2.0 * (x[0] + x[1]);
                let b = 2.0 * (x[1] + x[2]);
                vec![a, a + b, b]
            },
            |x| vec![x[0] + 2.0 * x[1] + 3.0 * x[2] - 1.0],
            |_| rows(&[&[1.0, 2.0, 3.0]]),
            |_, rho, _| sym(3, &[(0, 0, 2.0 * rho), (0, 1, 2.0 * rho), (1, 1, 4.0 * rho), (1, 2, 2.0 * rho), (2, 2, 2.0 * rho)]),
        ),
        "hs035" => model(
            "hs035",
            vec![0.5, 0.5, 0.5],
            (vec![0.0; 3], vec![INF; 3]),
            (vec![-INF], vec![3.0]),
            vec![true],
            |x| {
                9.0 - 8.0 * x[0] - 6.0 * x[1] - 4.0 * x[2]
                    + 2.0 * x[0] * x[0]
                    + 2.0 * x[1] * x[1]
                    + x[2] * x[2]
                    + 2.0 * x[0] * x[1]
                    + 2.0 * x[0] * x[2]
            },
            |x| {
                vec![
                    -8.0 + 4.0 * x[0] + 2.0 * x[1] + 2.0 * x[2],
                    -6.0 + 4.0 * x[1] + 2.0 * x[0],
                    -4.0 + 2.0 * x[2] + 2.0 * x[0],
                ]
            },
            |x| vec![x[0] + x[1] + 2.0 * x[2]],
            |_| rows(&[&[1.0, 1.0, 2.0]]),
            |_, rho, _| sym(3, &[(0, 0, 4.0 * rho), (0, 1, 2.0 * rho), (0, 2, 2.0 * rho), (1, 1, 4.0 * rho), (2, 2, 2.0 * rho)]),
        ),
        "bt3" => model(
            "bt3",
            vec![20.0; 5],
            free(5),
            eq(3),
            vec![true; 3],
            hs051_f,
            hs051_grad,
            |x| vec![x[0] + 3.0 * x[1], x[2] + x[3] - 2.0 * x[4], x[1] - x[4]],
            hs051_jac,
            hs051_hess,
        ),
        "hs051" => model(
            "hs051",
            vec![2.5, 0.5, 2.0, -1.0, 0.5],
            free(5),
            eq(3),
            vec![true; 3],
            hs051_f,
            hs051_grad,
            |x| vec![x[0] + 3.0 * x[1] - 4.0, x[2] + x[3] - 2.0 * x[4], x[1] - x[4]],
            hs051_jac,
            hs051_hess,
        ),
        "hs048" => model(
            "hs048",
            vec![3.0, 5.0, -3.0, 2.0, -2.0],
            free(5),
            eq(2),
            vec![true; 2],
            |x| (x[0] - 1.0).powi(2) + (x[1] - x[2]).powi(2) + (x[3] - x[4]).powi(2),
            |x| {
                let a = 2.0 * (x[1] - x[2]);
                let b = 2.0 * (x[3] - x[4]);
                vec![2.0 * (x[0] - 1.0), a, -a, b, -b]
            },
            |x| vec![x.iter().sum::<f64>() - 5.0, x[2] - 2.0 * (x[3] + x[4]) + 3.0],
            |_| rows(&[&[1.0; 5], &[0.0, 0.0, 1.0, -2.0, -2.0]]),
            |_, rho, _| {
                sym(
                    5,
                    &[
                        (0, 0, 2.0 * rho),
                        (1, 1, 2.0 * rho),
                        (1, 2, -2.0 * rho),
                        (2, 2, 2.0 * rho),
                        (3, 3, 2.0 * rho),
                        (3, 4, -2.0 * rho),
                        (4, 4, 2.0 * rho),
                    ],
                )
            },
        ),
        "genhs28" => {
            let n = GENHS28_N;
            let mut x0 = vec![1.0; n];
            x0[0] = -4.0;
            model(
                "genhs28",
                x0,
                free(n),
                eq(n - 2),
                vec![true; n - 2],
                |x| x.windows(2).map(|w| (w[0] + w[1]).powi(2)).sum(),
                |x| {
                    let mut g = vec![0.0; x.len()];
                    for i in 0..x.len() - 1 {
                        let t = 2.0 * (x[i] + x[i + 1]);
                        g[i] += t;
                        g[i + 1] += t;
                    }
                    g
                },
                |x| x.windows(3).map(|w| w[0] + 2.0 * w[1] + 3.0 * w[2] - 1.0).collect(),
                |x| {
                    let n = x.len();
                    let mut j = Matrix::zeros(n - 2, n);
                    for i in 0..n - 2 {
                        j[(i, i)] = 1.0;
                        j[(i, i + 1)] = 2.0;
                        j[(i, i + 2)] = 3.0;
                    }
                    j
                },
                |x, rho, _| {
                    let n = x.len();
                    let mut h = Matrix::zeros(n, n);
                    for i in 0..n - 1 {
                        h[(i, i)] += 2.0 * rho;
                        h[(i + 1, i + 1)] += 2.0 * rho;
                        h[(i, i + 1)] += 2.0 * rho;
                        h[(i + 1, i)] += 2.0 * rho;
                    }
                    h
                },
            )
        }
        "hs039" => model(
            "hs039",
            vec![2.0; 4],
            free(4),
            eq(2),
            vec![false; 2],
            |x| -x[0],
            |_| vec![-1.0, 0.0, 0.0, 0.0],
            |x| vec![x[1] - x[0].powi(3) - x[2] * x[2], x[0] * x[0] - x[1] - x[3] * x[3]],
            |x| rows(&[&[-3.0 * x[0] * x[0], 1.0, -2.0 * x[2], 0.0], &[2.0 * x[0], -1.0, 0.0, -2.0 * x[3]]]),
            |x, _, y| sym(4, &[(0, 0, 6.0 * x[0] * y[0] - 2.0 * y[1]), (2, 2, 2.0 * y[0]), (3, 3, 2.0 * y[1])]),
        ),
        "hs040" => model(
            "hs040",
            vec![0.8; 4],
            free(4),
            eq(3),
            vec![false; 3],
            |x| -x[0] * x[1] * x[2] * x[3],
            |x| {
                vec![
                    -x[1] * x[2] * x[3],
                    -x[0] * x[2] * x[3],
                    -x[0] * x[1] * x[3],
                    -x[0] * x[1] * x[2],
                ]
            },
            |x| vec![x[0].powi(3) + x[1] * x[1] - 1.0, x[0] * x[0] * x[3] - x[2], x[3] * x[3] - x[1]],
            |x| {
                rows(&[
                    &[3.0 * x[0] * x[0], 2.0 * x[1], 0.0, 0.0],
                    &[2.0 * x[0] * x[3], 0.0, -1.0, x[0] * x[0]],
                    &[0.0, -1.0, 0.0, 2.0 * x[3]],
                ])
            },
            |x, rho, y| {
                sym(
                    4,
                    &[
                        (0, 1, -rho * x[2] * x[3]),
                        (0, 2, -rho * x[1] * x[3]),
                        (0, 3, -rho * x[1] * x[2] - y[1] * 2.0 * x[0]),
                        (1, 2, -rho * x[0] * x[3]),
                        (1, 3, -rho * x[0] * x[2]),
                        (2, 3, -rho * x[0] * x[1]),
                        (0, 0, -y[0] * 6.0 * x[0] - y[1] * 2.0 * x[3]),
                        (1, 1, -y[0] * 2.0),
                        (3, 3, -y[2] * 2.0),
                    ],
                )
            },
        ),
        "hs043" => model(
            "hs043",
            vec![0.0; 4],
            free(4),
            (vec![0.0; 3], vec![INF; 3]),
            vec![false; 3],
            |x| {
                x[0] * x[0] + x[1] * x[1] + 2.0 * x[2] * x[2] + x[3] * x[3] - 5.0 * x[0] - 5.0 * x[1] - 21.0 * x[2]
                    + 7.0 * x[3]
            },
            |x| vec![2.0 * x[0] - 5.0, 2.0 * x[1] - 5.0, 4.0 * x[2] - 21.0, 2.0 * x[3] + 7.0],
            |x| {
                vec![
                    8.0 - x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - x[3] * x[3] - x[0] + x[1] - x[2] + x[3],
                    10.0 - x[0] * x[0] - 2.0 * x[1] * x[1] - x[2] * x[2] - 2.0 * x[3] * x[3] + x[0] + x[3],
                    5.0 - 2.0 * x[0] * x[0] - x[1] * x[1] - x[2] * x[2] - 2.0 * x[0] + x[1] + x[3],
                ]
            },
            |x| {
                rows(&[
                    &[-2.0 * x[0] - 1.0, -2.0 * x[1] + 1.0, -2.0 * x[2] - 1.0, -2.0 * x[3] + 1.0],
                    &[-2.0 * x[0] + 1.0, -4.0 * x[1], -2.0 * x[2], -4.0 * x[3] + 1.0],
                    &[-4.0 * x[0] - 2.0, -2.0 * x[1] + 1.0, -2.0 * x[2], 1.0],
                ])
            },
            |_, rho, y| {
                sym(
                    4,
                    &[
                        (0, 0, 2.0 * rho + 2.0 * y[0] + 2.0 * y[1] + 4.0 * y[2]),
                        (1, 1, 2.0 * rho + 2.0 * y[0] + 4.0 * y[1] + 2.0 * y[2]),
                        (2, 2, 4.0 * rho + 2.0 * y[0] + 2.0 * y[1] + 2.0 * y[2]),
                        (3, 3, 2.0 * rho + 2.0 * y[0] + 4.0 * y[1]),
                    ],
                )
            },
        ),
        "hs071" => model(
            "hs071",
            vec![1.0, 5.0, 5.0, 1.0],
            (vec![1.0; 4], vec![5.0; 4]),
            (vec![25.0, 40.0], vec![INF, 40.0]),
            vec![false; 2],
            |x| x[0] * x[3] * (x[0] + x[1] + x[2]) + x[2],
            |x| {
                vec![
                    x[3] * (2.0 * x[0] + x[1] + x[2]),
                    x[0] * x[3],
                    x[0] * x[3] + 1.0,
                    x[0] * (x[0] + x[1] + x[2]),
                ]
            },
            |x| vec![x[0] * x[1] * x[2] * x[3], x.iter().map(|v| v * v).sum()],
            |x| {
                rows(&[
                    &[x[1] * x[2] * x[3], x[0] * x[2] * x[3], x[0] * x[1] * x[3], x[0] * x[1] * x[2]],
                    &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3]],
                ])
            },
            |x, rho, y| {
                let (a, b) = (y[0], y[1]);
                sym(
                    4,
                    &[
                        (0, 0, rho * 2.0 * x[3] - 2.0 * b),
                        (0, 1, rho * x[3] - a * x[2] * x[3]),
                        (0, 2, rho * x[3] - a * x[1] * x[3]),
                        (0, 3, rho * (2.0 * x[0] + x[1] + x[2]) - a * x[1] * x[2]),
                        (1, 1, -2.0 * b),
                        (1, 2, -a * x[0] * x[3]),
                        (1, 3, rho * x[0] - a * x[0] * x[2]),
                        (2, 2, -2.0 * b),
                        (2, 3, rho * x[0] - a * x[0] * x[1]),
                        (3, 3, -2.0 * b),
                    ],
                )
            },
        ),
        "hs076" => model(
            "hs076",
            vec![0.5; 4],
            (vec![0.0; 4], vec![INF; 4]),
            (vec![-INF, -INF, 1.5], vec![5.0, 4.0, INF]),
            vec![true; 3],
            |x| {
                x[0] * x[0] + 0.5 * x[1] * x[1] + x[2] * x[2] + 0.5 * x[3] * x[3] - x[0] * x[2] + x[2] * x[3]
                    - x[0]
                    - 3.0 * x[1]
                    + x[2]
                    - x[3]
            },
            |x| {
                vec![
                    2.0 * x[0] - x[2] - 1.0,
                    x[1] - 3.0,
                    2.0 * x[2] - x[0] + x[3] + 1.0,
                    x[3] + x[2] - 1.0,
                ]
            },
            |x| {
                vec![
                    x[0] + 2.0 * x[1] + x[2] + x[3],
                    3.0 * x[0] + x[1] + 2.0 * x[2] - x[3],
                    x[1] + 4.0 * x[2],
                ]
            },
            |_| rows(&[&[1.0, 2.0, 1.0, 1.0], &[3.0, 1.0, 2.0, -1.0], &[0.0, 1.0, 4.0, 0.0]]),
            |_, rho, _| {
                sym(
                    4,
                    &[
                        (0, 0, 2.0 * rho),
                        (0, 2, -rho),
                        (1, 1, rho),
                        (2, 2, 2.0 * rho),
                        (2, 3, rho),
                        (3, 3, rho),
                    ],
                )
            },
        ),
        "hs078" => model(
            "hs078",
            vec![-2.0, 1.5, 2.0, -1.0, -1.0],
            free(5),
            eq(3),
            vec![false; 3],
            |x| x.iter().product(),
            |x| (0..5).map(|i| (0..5).filter(|&k| k != i).map(|k| x[k]).product()).collect(),
            |x| {
                vec![
                    x.iter().map(|v| v * v).sum::<f64>() - 10.0,
                    x[1] * x[2] - 5.0 * x[3] * x[4],
                    x[0].powi(3) + x[1].powi(3) + 1.0,
                ]
            },
            |x| {
                rows(&[
                    &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2], 2.0 * x[3], 2.0 * x[4]],
                    &[0.0, x[2], x[1], -5.0 * x[4], -5.0 * x[3]],
                    &[3.0 * x[0] * x[0], 3.0 * x[1] * x[1], 0.0, 0.0, 0.0],
                ])
            },
            |x, rho, y| {
                let mut entries = Vec::with_capacity(15);
                for i in 0..5 {
                    for j in i + 1..5 {
                        let p: f64 = (0..5).filter(|&k| k != i && k != j).map(|k| x[k]).product();
                        entries.push((i, j, rho * p));
                    }
                    entries.push((i, i, -2.0 * y[0]));
                }
                entries.push((1, 2, -y[1]));
                entries.push((3, 4, 5.0 * y[1]));
                entries.push((0, 0, -6.0 * x[0] * y[2]));
                entries.push((1, 1, -6.0 * x[1] * y[2]));
                sym(5, &entries)
            },
        ),
        "rosendisk" => model(
            "rosendisk",
            vec![0.0, 0.0],
            free(2),
            (vec![-INF], vec![1.0]),
            vec![false],
            rosenbrock,
            rosenbrock_grad,
            |x| vec![x[0] * x[0] + x[1] * x[1]],
            |x| rows(&[&[2.0 * x[0], 2.0 * x[1]]]),
            |x, rho, y| {
                let mut h = rosenbrock_hess(x, rho);
                h.add_diagonal(-2.0 * y[0]);
                h
            },
        ),
        "maratos" => model(
            "maratos",
            vec![0.8, 0.6],
            free(2),
            eq(1),
            vec![false],
            |x| 2.0 * (x[0] * x[0] + x[1] * x[1] - 1.0) - x[0],
            |x| vec![4.0 * x[0] - 1.0, 4.0 * x[1]],
            |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0],
            |x| rows(&[&[2.0 * x[0], 2.0 * x[1]]]),
            |_, rho, y| sym(2, &[(0, 0, 4.0 * rho - 2.0 * y[0]), (1, 1, 4.0 * rho - 2.0 * y[0])]),
        ),
        "infeasible1" => model(
            "infeasible1",
            vec![2.0],
            free(1),
            eq(2),
            vec![false; 2],
            |x| (x[0] - 1.0).powi(2),
            |x| vec![2.0 * (x[0] - 1.0)],
            |x| vec![x[0] * x[0], x[0] * x[0] + 1.0],
            |x| rows(&[&[2.0 * x[0]], &[2.0 * x[0]]]),
            |_, rho, y| sym(1, &[(0, 0, 2.0 * rho - 2.0 * y[0] - 2.0 * y[1])]),
        ),
        "infeasible2" => model(
            "infeasible2",
            vec![1.0, 0.0],
            free(2),
            eq(2),
            vec![false, true],
            |x| x[0] * x[0] + x[1] * x[1],
            |x| vec![2.0 * x[0], 2.0 * x[1]],
            |x| vec![x[0] * x[0] + x[1] * x[1] - 1.0, x[0] + x[1] - 3.0],
            |x| rows(&[&[2.0 * x[0], 2.0 * x[1]], &[1.0, 1.0]]),
            |_, rho, y| sym(2, &[(0, 0, 2.0 * rho - 2.0 * y[0]), (1, 1, 2.0 * rho - 2.0 * y[0])]),
        ),
        _ => return None,
    };
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_consistent() {
        let names = corpus_names();
        assert!(names.iter().filter(|n| !n.starts_with("infeasible")).count() >= 25);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, names);
        for n in names {
            let m = corpus_get(n).unwrap();
            assert_eq!(m.name(), n);
            let (l, u) = m.variable_bounds();
            assert!(l.iter().zip(&u).all(|(a, b)| a <= b));
            let (cl, cu) = m.constraint_bounds();
            assert_eq!(cl.len(), m.num_constraints());
            assert!(cl.iter().zip(&cu).all(|(a, b)| a <= b));
            assert_eq!(m.linear_constraints().len(), m.num_constraints());
        }
        assert!(matches!(corpus_get("unknown"), Err(ModelError::UnknownProblem(_))));
    }

    #[test]
    fn hs071_initial_objective() {
        let m = corpus_get("hs071").unwrap();
        let x0 = m.initial_point();
        assert_eq!(m.objective(&x0), 16.0);
        assert_eq!(m.constraints(&x0), vec![25.0, 52.0]);
    }

    #[test]
    fn reference_solutions_are_feasible_with_stated_objective() {
        for e in corpus_entries() {
            let (Some(x), Some(f)) = (&e.solution, e.optimal_objective) else { continue };
            let m = corpus_get(e.name).unwrap();
            assert!((m.objective(x) - f).abs() < 1e-8, "{}", e.name);
            let (cl, cu) = m.constraint_bounds();
            for (j, cj) in m.constraints(x).iter().enumerate() {
                assert!(*cj >= cl[j] - 1e-9 && *cj <= cu[j] + 1e-9, "{} row {j}", e.name);
            }
        }
    }
}
