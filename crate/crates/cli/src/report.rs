//! Report documents and their renderings. Each subcommand emits one struct
//! from this module: serialized as JSON for machines, rendered as text for
//! the terminal. Field order is fixed, so serialization is deterministic.

use serde::{Deserialize, Serialize};
use theta_relations::lattice::CosetRep;
use theta_relations::CyclotomicElement;

use crate::spec::parse_rational;
use crate::CliError;

/// Exact power-basis coordinates of an element of `Q(zeta_order)`, with the
/// entry at position `j` standing for `zeta_order^j`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct CycJson {
    pub order: u32,
    pub coeffs: Vec<String>,
}

impl CycJson {
    pub fn from_element(e: &CyclotomicElement) -> Self {
        CycJson {
            order: e.order(),
            coeffs: e.coeffs().iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn to_element(&self) -> Result<CyclotomicElement, CliError> {
        if self.order == 0 {
            return Err(CliError::Input("cyclotomic order must be positive".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CyclotomicElement::from_coeffs(self.order, coeffs))
    }
}

pub fn rep_strings(rep: &CosetRep) -> Vec<String> {
    rep.coords().iter().map(|c| c.to_string()).collect()
}

fn vec_display(coords: &[String]) -> String {
    format!("({})", coords.join(", "))
}

#[derive(Serialize)]
pub struct InfoReport {
    pub gram: Vec<Vec<i64>>,
    pub power: u32,
    pub dim: usize,
    pub det: String,
    pub level: u32,
    pub delta_n: u32,
    pub safe_c_bound: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_bound: Option<String>,
    pub dual_coset_reps: Vec<Vec<String>>,
    pub admissible_alphas: Vec<Vec<String>>,
    pub beta_reps: Vec<Vec<String>>,
}

pub fn render_info(r: &InfoReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("dim {}\n", r.dim));
    out.push_str(&format!("det {}\n", r.det));
    out.push_str(&format!("level {}\n", r.level));
    out.push_str(&format!("delta_N {}\n", r.delta_n));
    out.push_str(&format!("power {}\n", r.power));
    out.push_str(&format!("safe c bound {}\n", r.safe_c_bound));
    if let Some(c) = &r.c_bound {
        out.push_str(&format!("c bound override {c} (certified)\n"));
    }
    let list = |name: &str, rows: &[Vec<String>]| {
        let mut s = format!("{name} ({}):\n", rows.len());
        for row in rows {
            s.push_str(&format!("  {}\n", vec_display(row)));
        }
        s
    };
    out.push_str(&list("dual coset reps", &r.dual_coset_reps));
    out.push_str(&list(
        &format!("admissible alphas for power {}", r.power),
        &r.admissible_alphas,
    ));
    out.push_str(&list("beta reps", &r.beta_reps));
    out
}

#[derive(Serialize)]
pub struct P0Report {
    pub gram: Vec<Vec<i64>>,
    pub power: u32,
    pub level: u32,
    /// Determinant of the rescaled lattice, the rank the search must reach.
    pub rescaled_det: String,
    pub max_sum: u32,
    pub p0: Vec<Vec<u32>>,
    pub p0_len: usize,
    pub hat_len: usize,
    pub index_len: usize,
    pub max_n: u32,
}

pub fn render_find_p0(r: &P0Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "rescaled by power {}: determinant {} = needed rank\n",
        r.power, r.rescaled_det
    ));
    out.push_str(&format!(
        "P0 found: {} indices of weight <= {}\n",
        r.p0_len, r.max_sum
    ));
    out.push_str(&format!("hat closure: {}\n", r.hat_len));
    out.push_str(&format!(
        "index pairs: {} (max n = {})\n",
        r.index_len, r.max_n
    ));
    out.push_str("P0:\n");
    for p in &r.p0 {
        out.push_str(&format!("  {p:?}\n"));
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct LabelJson {
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
}

impl LabelJson {
    pub fn new(alpha: &CosetRep, beta: &CosetRep) -> Self {
        LabelJson {
            alpha: rep_strings(alpha),
            beta: rep_strings(beta),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct IndexPairJson {
    pub p: Vec<u32>,
    pub n: u32,
}

#[derive(Serialize)]
pub struct VectorJson {
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    pub values: Vec<CycJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationTermJson {
    pub alpha: Vec<String>,
    pub beta: Vec<String>,
    pub coeff: CycJson,
}

/// One relation: the dependent series equals the sum of the terms.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct RelationJson {
    pub dependent: LabelJson,
    pub terms: Vec<RelationTermJson>,
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IndexPolicy {
    /// The index set is the hat closure of a searched separating set; full
    /// rank and relations are both certified.
    SeparatingSet { max_sum: u32 },
    /// The index set is a fixed slice; full rank certifies independence,
    /// relations are candidates only.
    WeightBall { weight_cap: u32, n_cap: u32 },
}

#[derive(Serialize)]
pub struct RelationsJson {
    pub gram: Vec<Vec<i64>>,
    pub power: u32,
    pub level: u32,
    pub lattice_hash: String,
    pub normalization: String,
    pub index_policy: IndexPolicy,
    pub p0: Vec<Vec<u32>>,
    pub index: Vec<IndexPairJson>,
    pub alpha_reps: Vec<Vec<String>>,
    pub beta_reps: Vec<Vec<String>>,
    pub vectors: Vec<VectorJson>,
    pub rank: usize,
    pub independent: Vec<LabelJson>,
    pub relations: Vec<RelationJson>,
}

fn theta_name(power: u32, alpha: &[String], beta: &[String]) -> String {
    format!(
        "theta^{power}_{{{}, {}}}",
        vec_display(alpha),
        vec_display(beta)
    )
}

/// Renders `dependent = c_1 term_1 + ...`, eliding unit coefficients.
pub fn render_relation(power: u32, relation: &RelationJson) -> Result<String, CliError> {
    let mut rhs: Vec<String> = Vec::new();
    for term in &relation.terms {
        let coeff = term.coeff.to_element()?;
        let name = theta_name(power, &term.alpha, &term.beta);
        let one = CyclotomicElement::one(coeff.order());
        rhs.push(if coeff == one {
            name
        } else if coeff == -one {
            format!("-{name}")
        } else {
            format!("({coeff})*{name}")
        });
    }
    let mut joined = String::new();
    for (i, piece) in rhs.iter().enumerate() {
        if i == 0 {
            joined.push_str(piece);
        } else if let Some(rest) = piece.strip_prefix('-') {
            joined.push_str(&format!(" - {rest}"));
        } else {
            joined.push_str(&format!(" + {piece}"));
        }
    }
    if rhs.is_empty() {
        joined.push('0');
    }
    Ok(format!(
        "{} = {joined}",
        theta_name(power, &relation.dependent.alpha, &relation.dependent.beta)
    ))
}

pub fn render_relations(r: &RelationsJson) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "lattice: dim {}, level {}, power {}\n",
        r.gram.len(),
        r.level,
        r.power
    ));
    match r.index_policy {
        IndexPolicy::SeparatingSet { max_sum } => {
            let distinct: std::collections::BTreeSet<&Vec<u32>> =
                r.index.iter().map(|pair| &pair.p).collect();
            out.push_str(&format!(
                "index: separating set of {} multi-indices (weight <= {max_sum}), hat closure {}, {} (p, n) pairs\n",
                r.p0.len(),
                distinct.len(),
                r.index.len()
            ));
        }
        IndexPolicy::WeightBall { weight_cap, n_cap } => {
            out.push_str(&format!(
                "index: fixed slice, weight <= {weight_cap} and n <= {n_cap}, {} (p, n) pairs\n",
                r.index.len()
            ));
            out.push_str(
                "note: on a fixed slice full rank certifies independence; relations are candidates only\n",
            );
        }
    }
    out.push_str(&format!(
        "labels: {} alphas x {} betas = {} series\n",
        r.alpha_reps.len(),
        r.beta_reps.len(),
        r.vectors.len()
    ));
    out.push_str(&format!(
        "rank {}; {} relations\n",
        r.rank,
        r.relations.len()
    ));
    for (i, relation) in r.relations.iter().enumerate() {
        let line = render_relation(r.power, relation)
            .expect("coefficients serialized by this process parse back");
        out.push_str(&format!("({}) {line}\n", i + 1));
    }
    out
}

/// The subset of a relations report that `verify` consumes. Unknown fields
/// are ignored, so both full reports and hand-written files parse.
#[derive(Deserialize)]
pub struct VerifyInput {
    #[serde(default)]
    pub power: Option<u32>,
    #[serde(default)]
    pub lattice_hash: Option<String>,
    pub relations: Vec<RelationJson>,
}

#[derive(Serialize)]
pub struct VerifyResult {
    /// 1-based position in the input file.
    pub relation: usize,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_residual_exponent: Option<String>,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub power: u32,
    pub truncation: String,
    pub results: Vec<VerifyResult>,
    pub failed: usize,
}

pub fn render_verify(r: &VerifyReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "verifying {} relations to truncation {} (exclusive)\n",
        r.results.len(),
        r.truncation
    ));
    for result in &r.results {
        if result.passed {
            out.push_str(&format!("relation {}: PASS\n", result.relation));
        } else {
            let at = result
                .first_residual_exponent
                .as_deref()
                .unwrap_or("unknown");
            out.push_str(&format!(
                "relation {}: FAIL (first residual term at q^{at})\n",
                result.relation
            ));
        }
    }
    out.push_str(&format!(
        "{} of {} relations failed\n",
        r.failed,
        r.results.len()
    ));
    out
}
