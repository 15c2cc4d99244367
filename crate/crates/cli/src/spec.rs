//! Lattice specs: the JSON input document, builtin instances, and
//! resolution into validated pipeline inputs.

use std::path::Path;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use theta_relations::lattice::{CosetRep, GramLattice};
use theta_relations::relations::{admissible_alphas, beta_admissible};
use theta_relations::{Integer, Rational};

use crate::CliError;

/// The single input document of every subcommand. Rationals are strings of
/// the form `"n"` or `"n/d"`; vectors are coordinate lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Even symmetric positive definite Gram matrix, row major.
    pub gram: Vec<Vec<i64>>,
    /// The power `N'` of the theta series; must divide the lattice level.
    pub power: u32,
    /// Explicit alpha representatives; the admissible dual cosets are
    /// generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_reps: Option<Vec<Vec<String>>>,
    /// Explicit beta representatives; generated when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_reps: Option<Vec<Vec<String>>>,
    /// Enumeration box constant override; certified before use and rejected
    /// when the certificate fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_bound: Option<String>,
    /// Weight cap for the index search (default 10). With `n_cap` set this
    /// instead caps the weight of the fixed index ball.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sum: Option<u32>,
    /// Truncation for `verify` (default 10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<String>,
    /// When set, skip the separating-set search and index every multi-index
    /// of weight `<= max_sum` with coefficients `n <= n_cap`. Full rank on
    /// such a slice still certifies independence; relations found on a
    /// slice are candidates only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cap: Option<u32>,
}

/// A spec after validation: the lattice is constructed, representative
/// lists are resolved and admissible, and defaults are applied.
pub struct ResolvedSpec {
    pub gram: Vec<Vec<i64>>,
    pub lattice: GramLattice,
    pub power: u32,
    pub alphas: Vec<CosetRep>,
    pub betas: Vec<CosetRep>,
    pub max_sum: u32,
    pub truncation: Rational,
    pub n_cap: Option<u32>,
    pub c_bound: Option<Rational>,
}

const BUILTIN_SPECS: &[(&str, &str)] = &[
    ("d4", include_str!("../specs/d4.json")),
    ("a2", include_str!("../specs/a2.json")),
    ("a3", include_str!("../specs/a3.json")),
    ("2a2", include_str!("../specs/2a2.json")),
    ("disc15-cubes", include_str!("../specs/disc15-cubes.json")),
    ("disc15-fifth", include_str!("../specs/disc15-fifth.json")),
];

pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN_SPECS.iter().map(|(name, _)| *name).collect()
}

pub fn builtin_spec(name: &str) -> Option<LatticeSpec> {
    BUILTIN_SPECS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| serde_json::from_str(text).expect("builtin specs parse"))
}

/// Loads a spec from a file path, falling back to the builtin of the same
/// name when no such file exists.
pub fn load_spec(arg: &str) -> Result<LatticeSpec, CliError> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {arg}: {e}")))?;
        return serde_json::from_str(&text)
            .map_err(|e| CliError::Input(format!("malformed spec {arg}: {e}")));
    }
    builtin_spec(arg).ok_or_else(|| {
        CliError::Input(format!(
            "no spec file or builtin named '{arg}' (builtins: {})",
            builtin_names().join(", ")
        ))
    })
}

/// Parses `"n"` or `"n/d"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let bad = || CliError::Input(format!("malformed rational '{s}'"));
    let n: Integer = num.trim().parse().map_err(|_| bad())?;
    let d: Integer = den.trim().parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(CliError::Input(format!("zero denominator in '{s}'")));
    }
    Ok(Rational::new(n, d))
}

fn parse_reps(rows: &[Vec<String>], dim: usize, what: &str) -> Result<Vec<CosetRep>, CliError> {
    rows.iter()
        .map(|row| {
            if row.len() != dim {
                return Err(CliError::Input(format!(
                    "{what} entry has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            let coords = row
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CosetRep::new(coords))
        })
        .collect()
}

pub fn resolve(
    spec: &LatticeSpec,
    trunc_override: Option<&str>,
    max_sum_override: Option<u32>,
) -> Result<ResolvedSpec, CliError> {
    let lattice = GramLattice::new(spec.gram.clone())?;
    if spec.power == 0 || lattice.level() % spec.power != 0 {
        return Err(CliError::Input(format!(
            "power {} must be a positive divisor of the lattice level {}",
            spec.power,
            lattice.level()
        )));
    }
    let c_bound = spec
        .c_bound
        .as_deref()
        .map(parse_rational)
        .transpose()?;
    let lattice = match &c_bound {
        Some(c) => lattice.with_enumeration_constant(c.clone())?,
        None => lattice,
    };
    let alphas = match &spec.alpha_reps {
        Some(rows) => {
            let reps = parse_reps(rows, lattice.dim(), "alpha_reps")?;
            for rep in &reps {
                let ok = lattice.validate_alpha(rep, spec.power).map_err(|_| {
                    CliError::Input(format!("alpha {rep} is not a dual vector"))
                })?;
                if !ok {
                    return Err(CliError::Input(format!(
                        "alpha {rep} is not admissible for power {}",
                        spec.power
                    )));
                }
            }
            reps
        }
        None => admissible_alphas(&lattice, spec.power)?,
    };
    let betas = match &spec.beta_reps {
        Some(rows) => {
            let reps = parse_reps(rows, lattice.dim(), "beta_reps")?;
            for rep in &reps {
                if !beta_admissible(&lattice, rep, spec.power) {
                    return Err(CliError::Input(format!(
                        "beta {rep} is not admissible for power {}",
                        spec.power
                    )));
                }
            }
            reps
        }
        None => lattice.beta_reps(spec.power)?,
    };
    if alphas.is_empty() || betas.is_empty() {
        return Err(CliError::Input(
            "representative lists must be nonempty".to_string(),
        ));
    }
    let truncation = match trunc_override.or(spec.truncation.as_deref()) {
        Some(s) => parse_rational(s)?,
        None => Rational::from_integer(Integer::from(10)),
    };
    if !truncation.is_positive() {
        return Err(CliError::Input(format!(
            "truncation must be positive, got {truncation}"
        )));
    }
    Ok(ResolvedSpec {
        gram: spec.gram.clone(),
        lattice,
        power: spec.power,
        alphas,
        betas,
        max_sum: max_sum_override.or(spec.max_sum).unwrap_or(10),
        truncation,
        n_cap: spec.n_cap,
        c_bound,
    })
}
