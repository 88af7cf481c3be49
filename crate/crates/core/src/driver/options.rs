//! Solver options: a string map with defaults, presets, option files and
//! validation into a typed configuration.

use crate::globalization::FilterConstants;
use crate::linalg::RegularizationSchedule;
use crate::mechanism::{LineSearchConfig, TrustRegionConfig};
use crate::relaxation::SteeringState;
use crate::subproblem::{BarrierSchedule, Regularization};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Built-in defaults: key, value, description.
pub const DEFAULTS: &[(&str, &str, &str)] = &[
    ("preset", "none", "named ingredient combination"),
    ("constraint_relaxation_strategy", "feasibility_restoration", "feasibility_restoration | l1_relaxation"),
    ("subproblem", "QP", "QP | LP | primal_dual_IPM"),
    ("globalization_strategy", "leyffer_filter_method", "leyffer_filter_method | waechter_filter_method | l1_merit"),
    ("globalization_mechanism", "TR", "LS | TR"),
    ("tolerance", "1e-6", "termination tolerance ε"),
    ("max_iterations", "1000", "outer iteration limit"),
    ("loose_tolerance_factor", "100", "loose tolerance as a multiple of ε"),
    ("loose_tolerance_iterations", "15", "consecutive iterations at the loose tolerance"),
    ("residual_scaling_cap", "100", "multiplier size above which stationarity is scaled down"),
    ("y_max", "1e3", "largest accepted least-squares multiplier estimate"),
    ("scale_functions", "yes", "gradient-based scaling at the initial point"),
    ("function_scaling_max", "100", "s_max of the gradient-based scaling"),
    ("project_initial_point", "yes", "project x⁰ onto the linear constraints"),
    ("hessian_regularization", "reduced", "none | primal | reduced (optimality QP)"),
    ("regularization_initial", "1e-4", "first nonzero δ_w"),
    ("regularization_min", "1e-20", "smallest nonzero δ_w"),
    ("regularization_decrease", "0.3333333333333333", "factor on the last δ_w for the first trial"),
    ("regularization_increase", "8", "δ_w growth factor"),
    ("regularization_max", "1e40", "largest δ_w"),
    ("merit_sigma", "1e-4", "Armijo fraction of the merit function"),
    ("filter_sigma", "1e-8", "Armijo fraction of the filter objective"),
    ("filter_delta", "1", "switching condition constant"),
    ("filter_beta", "0.999", "filter envelope factor on η"),
    ("filter_gamma", "1e-3", "filter envelope slope"),
    ("filter_theta_min_factor", "1e-4", "θ_min relative to max(1, η⁰)"),
    ("filter_eta_max_factor", "1e4", "upper bound on η relative to max(1, η)"),
    ("filter_capacity", "1000", "maximum number of filter entries"),
    ("ls_backtrack_factor", "0.5", "step length reduction factor"),
    ("ls_alpha_min", "1e-7", "smallest step length"),
    ("ls_max_inner", "50", "trials per line search"),
    ("tr_radius", "10", "initial trust-region radius"),
    ("tr_radius_min", "1e-16", "smallest trust-region radius"),
    ("tr_radius_max", "1e30", "largest trust-region radius"),
    ("tr_increase_factor", "2", "radius growth after an active accepted step"),
    ("tr_decrease_factor", "0.5", "radius reduction after a rejection"),
    ("tr_activity_tolerance", "1e-10", "relative tolerance for an active trust region"),
    ("tr_max_inner", "100", "attempts per trust-region iteration"),
    ("barrier_mu_initial", "0.1", "initial barrier parameter"),
    ("barrier_kappa_epsilon", "10", "barrier subproblem tolerance factor"),
    ("barrier_kappa_mu", "0.2", "linear barrier decrease factor"),
    ("barrier_theta_mu", "1.5", "superlinear barrier decrease exponent"),
    ("barrier_tau_min", "0.99", "lower bound on the fraction-to-boundary parameter"),
    ("barrier_push", "1e-2", "relative distance of x⁰ from its bounds"),
    ("barrier_z_initial", "1", "initial bound multipliers"),
    ("restoration_kappa", "0.9", "infeasibility reduction required to leave restoration"),
    ("l1_rho_initial", "1", "initial objective multiplier"),
    ("l1_epsilon1", "0.1", "steering fraction of linearized feasibility"),
    ("l1_epsilon2", "0.1", "steering fraction of the merit model"),
    ("l1_rho_decrease_factor", "0.1", "objective multiplier reduction factor"),
    ("l1_rho_min", "1e-14", "smallest objective multiplier"),
];

pub const PRESETS: &[&str] = &["filtersqp", "ipopt", "byrd"];

fn preset_values(name: &str) -> Option<&'static [(&'static str, &'static str)]> {
    match name {
        "filtersqp" => Some(&[
            ("constraint_relaxation_strategy", "feasibility_restoration"),
            ("subproblem", "QP"),
            ("globalization_strategy", "leyffer_filter_method"),
            ("globalization_mechanism", "TR"),
            ("tr_radius", "10"),
        ]),
        "ipopt" => Some(&[
            ("constraint_relaxation_strategy", "feasibility_restoration"),
            ("subproblem", "primal_dual_IPM"),
            ("globalization_strategy", "waechter_filter_method"),
            ("globalization_mechanism", "LS"),
            ("filter_beta", "0.99999"),
            ("filter_gamma", "1e-8"),
            ("filter_sigma", "1e-8"),
        ]),
        "byrd" => Some(&[
            ("constraint_relaxation_strategy", "l1_relaxation"),
            ("subproblem", "QP"),
            ("globalization_strategy", "l1_merit"),
            ("globalization_mechanism", "LS"),
            ("merit_sigma", "1e-4"),
        ]),
        _ => None,
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum OptionsError {
    #[error("unknown option `{key}`{}", suggestion_text(.suggestions))]
    UnknownOption { key: String, suggestions: Vec<String> },
    #[error("invalid value `{value}` for option `{key}` (expected {expected})")]
    InvalidValue { key: String, value: String, expected: String },
    #[error("unknown preset `{0}` (available: filtersqp, ipopt, byrd)")]
    UnknownPreset(String),
    #[error("prohibited combination: {0}")]
    Prohibited(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn suggestion_text(s: &[String]) -> String {
    if s.is_empty() {
        String::new()
    } else {
        format!(" (did you mean {}?)", s.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", "))
    }
}

/// Known keys within edit distance 3 of `key`, closest first.
pub fn near_misses(key: &str) -> Vec<String> {
    let mut scored: Vec<(usize, &str)> = DEFAULTS
        .iter()
        .map(|(k, _, _)| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 3)
        .collect();
    scored.sort();
    scored.into_iter().take(3).map(|(_, k)| k.to_string()).collect()
}

/// String-valued options over the defaults table.
#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    values: BTreeMap<String, String>,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            values: DEFAULTS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

impl fmt::Display for Options {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.values {
            writeln!(f, "{k} {v}")?;
        }
        Ok(())
    }
}

impl Options {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), OptionsError> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(OptionsError::UnknownOption {
                key: key.to_string(),
                suggestions: near_misses(key),
            }),
        }
    }

    pub fn get(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("option `{key}` missing from the defaults table"))
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), OptionsError> {
        let values = preset_values(name).ok_or_else(|| OptionsError::UnknownPreset(name.to_string()))?;
        self.set("preset", name)?;
        for (k, v) in values {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, OptionsError> {
        let v = self.get(key);
        v.parse::<f64>().ok().filter(|x| !x.is_nan()).ok_or_else(|| invalid(key, v, "a number"))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize, OptionsError> {
        let v = self.get(key);
        v.parse::<usize>().map_err(|_| invalid(key, v, "a nonnegative integer"))
    }

    pub fn get_bool(&self, key: &str) -> Result<bool, OptionsError> {
        match self.get(key) {
            "yes" | "true" | "1" => Ok(true),
            "no" | "false" | "0" => Ok(false),
            v => Err(invalid(key, v, "yes or no")),
        }
    }
}

fn invalid(key: &str, value: &str, expected: &str) -> OptionsError {
    OptionsError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        expected: expected.to_string(),
    }
}

/// Parses an option file: one `key value` pair per line, `#` starts a comment.
pub fn parse_option_file(contents: &str) -> Result<Vec<(String, String)>, OptionsError> {
    let mut pairs = Vec::new();
    for (i, raw) in contents.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap();
        let value = parts.next().ok_or_else(|| OptionsError::Parse {
            line: i + 1,
            message: format!("missing value for `{key}`"),
        })?;
        if parts.next().is_some() {
            return Err(OptionsError::Parse {
                line: i + 1,
                message: "expected `key value`".to_string(),
            });
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Options of a named preset.
pub fn preset_options(name: &str) -> Result<Options, OptionsError> {
    let mut o = Options::default();
    o.apply_preset(name)?;
    Ok(o)
}

/// Merges the option sources with precedence command line > file > preset > defaults.
///
/// The preset comes from the command line if given there, otherwise from the file.
pub fn resolve_options(
    preset: Option<&str>,
    file: &[(String, String)],
    command_line: &[(String, String)],
) -> Result<Options, OptionsError> {
    let mut o = Options::default();
    let from_pairs = |pairs: &[(String, String)]| pairs.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.clone());
    let preset = preset
        .map(str::to_string)
        .or_else(|| from_pairs(command_line))
        .or_else(|| from_pairs(file));
    if let Some(p) = preset.as_deref().filter(|p| *p != "none") {
        o.apply_preset(p)?;
    }
    for (k, v) in file.iter().chain(command_line) {
        if k != "preset" {
            o.set(k, v)?;
        }
    }
    Ok(o)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelaxationKind {
    FeasibilityRestoration,
    L1Relaxation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubproblemKind {
    Qp,
    Lp,
    PrimalDualIpm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrategyKind {
    LeyfferFilter,
    WaechterFilter,
    L1Merit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MechanismKind {
    LineSearch,
    TrustRegion,
}

/// Validated, typed solver configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub relaxation: RelaxationKind,
    pub subproblem: SubproblemKind,
    pub strategy: StrategyKind,
    pub mechanism: MechanismKind,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub loose_tolerance_factor: f64,
    pub loose_tolerance_iterations: usize,
    pub residual_scaling_cap: f64,
    pub y_max: f64,
    pub scale_functions: bool,
    pub function_scaling_max: f64,
    pub project_initial_point: bool,
    pub hessian_regularization: Regularization,
    pub regularization: RegularizationSchedule,
    pub merit_sigma: f64,
    pub filter: FilterConstants,
    pub filter_beta: f64,
    pub filter_gamma: f64,
    pub filter_theta_min_factor: f64,
    pub filter_eta_max_factor: f64,
    pub filter_capacity: usize,
    pub line_search: LineSearchConfig,
    pub trust_region: TrustRegionConfig,
    pub barrier_mu_initial: f64,
    pub barrier: BarrierSchedule,
    pub barrier_push: f64,
    pub barrier_z_initial: f64,
    pub restoration_kappa: f64,
    pub steering: SteeringState,
}

fn selector<T: Copy>(o: &Options, key: &str, table: &[(&str, T)]) -> Result<T, OptionsError> {
    let v = o.get(key);
    table.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
        invalid(key, v, &names.join(" | "))
    })
}

fn positive(o: &Options, key: &str) -> Result<f64, OptionsError> {
    let v = o.get_f64(key)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, o.get(key), "a positive number"))
    }
}

fn fraction(o: &Options, key: &str) -> Result<f64, OptionsError> {
    let v = o.get_f64(key)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(invalid(key, o.get(key), "a number in (0, 1)"))
    }
}

/// Warning issued for feasibility restoration combined with the ℓ1 merit function.
pub const RESTORATION_MERIT_WARNING: &str =
    "feasibility restoration combined with the l1 merit function may fail to converge";

/// Checks the options and builds the typed configuration; also returns
/// configuration warnings.
pub fn validate(o: &Options) -> Result<(SolverConfig, Vec<String>), OptionsError> {
    let relaxation = selector(
        o,
        "constraint_relaxation_strategy",
        &[
            ("feasibility_restoration", RelaxationKind::FeasibilityRestoration),
            ("l1_relaxation", RelaxationKind::L1Relaxation),
        ],
    )?;
    let subproblem = selector(
        o,
        "subproblem",
        &[
            ("QP", SubproblemKind::Qp),
            ("LP", SubproblemKind::Lp),
            ("primal_dual_IPM", SubproblemKind::PrimalDualIpm),
        ],
    )?;
    let strategy = selector(
        o,
        "globalization_strategy",
        &[
            ("leyffer_filter_method", StrategyKind::LeyfferFilter),
            ("waechter_filter_method", StrategyKind::WaechterFilter),
            ("l1_merit", StrategyKind::L1Merit),
        ],
    )?;
    let mechanism = selector(
        o,
        "globalization_mechanism",
        &[("LS", MechanismKind::LineSearch), ("TR", MechanismKind::TrustRegion)],
    )?;
    let preset = o.get("preset");
    if preset != "none" && preset_values(preset).is_none() {
        return Err(OptionsError::UnknownPreset(preset.to_string()));
    }

    if subproblem == SubproblemKind::PrimalDualIpm && mechanism == MechanismKind::TrustRegion {
        return Err(OptionsError::Prohibited(
            "the interior-point subproblem cannot be combined with a trust region".to_string(),
        ));
    }
    if subproblem == SubproblemKind::PrimalDualIpm && relaxation == RelaxationKind::L1Relaxation {
        return Err(OptionsError::Unsupported(
            "l1 relaxation with the interior-point subproblem".to_string(),
        ));
    }
    if subproblem == SubproblemKind::Lp && mechanism == MechanismKind::LineSearch {
        return Err(OptionsError::Unsupported(
            "the LP subproblem needs a trust region to be bounded".to_string(),
        ));
    }
    let mut warnings = Vec::new();
    if relaxation == RelaxationKind::FeasibilityRestoration && strategy == StrategyKind::L1Merit {
        warnings.push(RESTORATION_MERIT_WARNING.to_string());
    }

    let hessian_regularization = selector(
        o,
        "hessian_regularization",
        &[
            ("none", Regularization::None),
            ("primal", Regularization::Primal),
            ("reduced", Regularization::Reduced),
        ],
    )?;
    let config = SolverConfig {
        relaxation,
        subproblem,
        strategy,
        mechanism,
        tolerance: positive(o, "tolerance")?,
        max_iterations: o.get_usize("max_iterations")?,
        loose_tolerance_factor: positive(o, "loose_tolerance_factor")?,
        loose_tolerance_iterations: o.get_usize("loose_tolerance_iterations")?,
        residual_scaling_cap: positive(o, "residual_scaling_cap")?,
        y_max: positive(o, "y_max")?,
        scale_functions: o.get_bool("scale_functions")?,
        function_scaling_max: positive(o, "function_scaling_max")?,
        project_initial_point: o.get_bool("project_initial_point")?,
        hessian_regularization,
        regularization: RegularizationSchedule {
            initial: positive(o, "regularization_initial")?,
            minimum: positive(o, "regularization_min")?,
            decrease: fraction(o, "regularization_decrease")?,
            increase: positive(o, "regularization_increase")?,
            maximum: positive(o, "regularization_max")?,
        },
        merit_sigma: fraction(o, "merit_sigma")?,
        filter: FilterConstants {
            sigma: fraction(o, "filter_sigma")?,
            delta: positive(o, "filter_delta")?,
        },
        filter_beta: fraction(o, "filter_beta")?,
        filter_gamma: positive(o, "filter_gamma")?,
        filter_theta_min_factor: positive(o, "filter_theta_min_factor")?,
        filter_eta_max_factor: positive(o, "filter_eta_max_factor")?,
        filter_capacity: o.get_usize("filter_capacity")?.max(1),
        line_search: LineSearchConfig {
            backtrack_factor: fraction(o, "ls_backtrack_factor")?,
            alpha_min: positive(o, "ls_alpha_min")?.max(f64::EPSILON),
            max_inner: o.get_usize("ls_max_inner")?,
        },
        trust_region: TrustRegionConfig {
            radius: positive(o, "tr_radius")?,
            radius_min: positive(o, "tr_radius_min")?,
            radius_max: positive(o, "tr_radius_max")?,
            increase_factor: positive(o, "tr_increase_factor")?,
            decrease_factor: fraction(o, "tr_decrease_factor")?,
            activity_tolerance: positive(o, "tr_activity_tolerance")?,
            max_inner: o.get_usize("tr_max_inner")?,
        },
        barrier_mu_initial: positive(o, "barrier_mu_initial")?,
        barrier: BarrierSchedule {
            kappa_epsilon: positive(o, "barrier_kappa_epsilon")?,
            kappa_mu: fraction(o, "barrier_kappa_mu")?,
            theta_mu: positive(o, "barrier_theta_mu")?,
            tau_min: fraction(o, "barrier_tau_min")?,
        },
        barrier_push: fraction(o, "barrier_push")?,
        barrier_z_initial: positive(o, "barrier_z_initial")?,
        restoration_kappa: fraction(o, "restoration_kappa")?,
        steering: SteeringState {
            rho: positive(o, "l1_rho_initial")?,
            epsilon1: fraction(o, "l1_epsilon1")?,
            epsilon2: fraction(o, "l1_epsilon2")?,
            rho_decrease_factor: fraction(o, "l1_rho_decrease_factor")?,
            rho_min: positive(o, "l1_rho_min")?,
        },
    };
    Ok((config, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_select_ingredients() {
        let f = preset_options("filtersqp").unwrap();
        assert_eq!(f.get("constraint_relaxation_strategy"), "feasibility_restoration");
        assert_eq!(f.get("globalization_mechanism"), "TR");
        let i = preset_options("ipopt").unwrap();
        assert_eq!(i.get("subproblem"), "primal_dual_IPM");
        assert_eq!(i.get("globalization_strategy"), "waechter_filter_method");
        let b = preset_options("byrd").unwrap();
        assert_eq!(b.get("globalization_strategy"), "l1_merit");
        assert_eq!(b.get("globalization_mechanism"), "LS");
        assert_eq!(preset_options("unknown").unwrap_err(), OptionsError::UnknownPreset("unknown".into()));
    }

    #[test]
    fn override_keeps_rest_of_preset() {
        let o = resolve_options(Some("byrd"), &[], &[("globalization_mechanism".into(), "TR".into())]).unwrap();
        assert_eq!(o.get("globalization_mechanism"), "TR");
        assert_eq!(o.get("constraint_relaxation_strategy"), "l1_relaxation");
        assert_eq!(o.get("subproblem"), "QP");
    }

    #[test]
    fn precedence() {
        let file = parse_option_file("# comment\ntolerance 1e-8\nmerit_sigma 0.01 # trailing\n").unwrap();
        let cli = vec![("tolerance".to_string(), "1e-5".to_string())];
        let o = resolve_options(Some("byrd"), &file, &cli).unwrap();
        assert_eq!(o.get("tolerance"), "1e-5");
        assert_eq!(o.get("merit_sigma"), "0.01");
        let file = parse_option_file("preset ipopt\n").unwrap();
        assert_eq!(resolve_options(None, &file, &[]).unwrap().get("subproblem"), "primal_dual_IPM");
    }

    #[test]
    fn unknown_key_lists_near_misses() {
        let err = Options::default().set("tolerence", "1").unwrap_err();
        match &err {
            OptionsError::UnknownOption { suggestions, .. } => assert_eq!(suggestions[0], "tolerance"),
            e => panic!("{e:?}"),
        }
        assert!(err.to_string().contains("did you mean `tolerance`"));
        assert!(parse_option_file("tolerance\n").is_err());
    }

    #[test]
    fn combinations() {
        let mut o = Options::default();
        o.set("subproblem", "primal_dual_IPM").unwrap();
        o.set("globalization_mechanism", "TR").unwrap();
        assert!(matches!(validate(&o), Err(OptionsError::Prohibited(_))));

        let mut o = Options::default();
        o.set("globalization_strategy", "l1_merit").unwrap();
        let (_, warnings) = validate(&o).unwrap();
        assert_eq!(warnings, vec![RESTORATION_MERIT_WARNING.to_string()]);

        for p in PRESETS {
            let (_, w) = validate(&preset_options(p).unwrap()).unwrap();
            assert!(w.is_empty());
        }
    }

    #[test]
    fn bad_values() {
        let mut o = Options::default();
        o.set("subproblem", "SQP").unwrap();
        assert!(matches!(validate(&o), Err(OptionsError::InvalidValue { .. })));
        let mut o = Options::default();
        o.set("tolerance", "-1").unwrap();
        assert!(validate(&o).is_err());
    }
}
