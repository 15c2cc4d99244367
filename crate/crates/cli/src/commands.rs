//! The four subcommand pipelines, as report-producing functions that are
//! also callable from tests.

use std::collections::BTreeMap;

use theta_relations::enumeration::safe_c_bound;
use theta_relations::lattice::CosetRep;
use theta_relations::p0search::find_p0;
use theta_relations::qseries::{evaluate_relation, series_pow, theta_qexp, JacobiQSeries};
use theta_relations::relations::{
    beta_admissible, find_relations, index_set, lattice_hash, theta_vectors_threaded, IndexPair,
    ReportMetadata,
};
use theta_relations::taylor::hat_closure;
use theta_relations::taylor::multi_indices_with_sum;
use theta_relations::{CyclotomicElement, Rational};

use crate::report::{
    rep_strings, CycJson, IndexPairJson, IndexPolicy, InfoReport, LabelJson, P0Report,
    RelationJson, RelationsJson, VectorJson, VerifyInput, VerifyReport, VerifyResult,
};
use crate::spec::{parse_rational, ResolvedSpec};
use crate::CliError;

pub fn cmd_info(spec: &ResolvedSpec) -> InfoReport {
    let lat = &spec.lattice;
    InfoReport {
        gram: spec.gram.clone(),
        power: spec.power,
        dim: lat.dim(),
        det: lat.det().to_string(),
        level: lat.level(),
        delta_n: if lat.level() <= 2 { 2 } else { 1 },
        safe_c_bound: safe_c_bound(lat).to_string(),
        c_bound: spec.c_bound.as_ref().map(|c| c.to_string()),
        dual_coset_reps: lat.dual_coset_reps().iter().map(rep_strings).collect(),
        admissible_alphas: spec.alphas.iter().map(rep_strings).collect(),
        beta_reps: spec.betas.iter().map(rep_strings).collect(),
    }
}

pub fn cmd_find_p0(spec: &ResolvedSpec) -> Result<P0Report, CliError> {
    let lat = &spec.lattice;
    let rescaled = lat.rescale(spec.power);
    let p0 = find_p0(&rescaled, spec.max_sum)?;
    let hat = hat_closure(&p0);
    let index = index_set(&hat, lat.level(), spec.power, lat.dim());
    Ok(P0Report {
        gram: spec.gram.clone(),
        power: spec.power,
        level: lat.level(),
        rescaled_det: rescaled.det().to_string(),
        max_sum: spec.max_sum,
        p0: p0.iter().map(|p| p.parts().to_vec()).collect(),
        p0_len: p0.len(),
        hat_len: hat.len(),
        index_len: index.len(),
        max_n: index.iter().map(|pair| pair.n).max().unwrap_or(0),
    })
}

pub fn cmd_relations(spec: &ResolvedSpec, threads: usize) -> Result<RelationsJson, CliError> {
    let lat = &spec.lattice;
    let (p0, index, policy) = match spec.n_cap {
        Some(cap) => {
            let mut index = Vec::new();
            for s in 0..=spec.max_sum {
                for p in multi_indices_with_sum(lat.dim(), s) {
                    for n in 0..=cap {
                        index.push(IndexPair { p: p.clone(), n });
                    }
                }
            }
            let policy = IndexPolicy::WeightBall {
                weight_cap: spec.max_sum,
                n_cap: cap,
            };
            (Vec::new(), index, policy)
        }
        None => {
            let rescaled = lat.rescale(spec.power);
            let p0 = find_p0(&rescaled, spec.max_sum)?;
            let hat = hat_closure(&p0);
            let index = index_set(&hat, lat.level(), spec.power, lat.dim());
            let policy = IndexPolicy::SeparatingSet {
                max_sum: spec.max_sum,
            };
            (p0, index, policy)
        }
    };
    let vectors =
        theta_vectors_threaded(lat, &spec.alphas, &spec.betas, spec.power, &index, threads)?;
    let report = find_relations(&vectors, ReportMetadata::new(lat, spec.power, p0));
    Ok(RelationsJson {
        gram: spec.gram.clone(),
        power: spec.power,
        level: lat.level(),
        lattice_hash: report.metadata.lattice_hash.clone(),
        normalization: report.metadata.normalization.clone(),
        index_policy: policy,
        p0: report
            .metadata
            .p0
            .iter()
            .map(|p| p.parts().to_vec())
            .collect(),
        index: index
            .iter()
            .map(|pair| IndexPairJson {
                p: pair.p.parts().to_vec(),
                n: pair.n,
            })
            .collect(),
        alpha_reps: spec.alphas.iter().map(rep_strings).collect(),
        beta_reps: spec.betas.iter().map(rep_strings).collect(),
        vectors: vectors
            .iter()
            .map(|v| VectorJson {
                alpha: rep_strings(&v.alpha),
                beta: rep_strings(&v.beta),
                values: v.values.iter().map(CycJson::from_element).collect(),
            })
            .collect(),
        rank: report.rank,
        independent: report
            .independent
            .iter()
            .map(|(a, b)| LabelJson::new(a, b))
            .collect(),
        relations: report
            .relations
            .iter()
            .map(|relation| RelationJson {
                dependent: LabelJson::new(&relation.dependent.0, &relation.dependent.1),
                terms: relation
                    .coefficients
                    .iter()
                    .map(|((a, b), c)| crate::report::RelationTermJson {
                        alpha: rep_strings(a),
                        beta: rep_strings(b),
                        coeff: CycJson::from_element(c),
                    })
                    .collect(),
            })
            .collect(),
    })
}

/// Parses and admissibility-checks one label from a relations file.
fn parse_label(
    spec: &ResolvedSpec,
    alpha: &[String],
    beta: &[String],
) -> Result<(CosetRep, CosetRep), CliError> {
    let lat = &spec.lattice;
    let parse = |coords: &[String], what: &str| -> Result<CosetRep, CliError> {
        if coords.len() != lat.dim() {
            return Err(CliError::Input(format!(
                "{what} has {} coordinates, expected {}",
                coords.len(),
                lat.dim()
            )));
        }
        Ok(CosetRep::new(
            coords
                .iter()
                .map(|s| parse_rational(s))
                .collect::<Result<Vec<_>, _>>()?,
        ))
    };
    let alpha = parse(alpha, "alpha")?;
    let beta = parse(beta, "beta")?;
    let ok = lat
        .validate_alpha(&alpha, spec.power)
        .map_err(|_| CliError::Input(format!("alpha {alpha} is not a dual vector")))?;
    if !ok {
        return Err(CliError::Input(format!(
            "alpha {alpha} is not admissible for power {}",
            spec.power
        )));
    }
    if !beta_admissible(lat, &beta, spec.power) {
        return Err(CliError::Input(format!(
            "beta {beta} is not admissible for power {}",
            spec.power
        )));
    }
    Ok((alpha, beta))
}

/// Re-checks every relation of a report by expanding the named theta powers
/// as multivariate q-series and cancelling them term by term, up to the
/// spec truncation. This route shares no code with the sweep that found the
/// relations.
pub fn cmd_verify(spec: &ResolvedSpec, file_text: &str) -> Result<VerifyReport, CliError> {
    let input: VerifyInput = serde_json::from_str(file_text)
        .map_err(|e| CliError::Input(format!("malformed relations file: {e}")))?;
    if let Some(power) = input.power {
        if power != spec.power {
            return Err(CliError::Input(format!(
                "relations file is for power {power}, spec has power {}",
                spec.power
            )));
        }
    }
    if let Some(hash) = &input.lattice_hash {
        if *hash != lattice_hash(&spec.lattice) {
            return Err(CliError::Input(
                "relations file was produced for a different gram matrix".to_string(),
            ));
        }
    }
    if input.relations.is_empty() {
        return Err(CliError::Input(
            "relations file contains no relations".to_string(),
        ));
    }
    // Parse everything before expanding any series, so malformed input
    // fails fast.
    struct Parsed {
        labels: Vec<(CosetRep, CosetRep)>,
        coeffs: Vec<CyclotomicElement>,
    }
    let mut parsed = Vec::with_capacity(input.relations.len());
    for relation in &input.relations {
        let mut labels = vec![parse_label(
            spec,
            &relation.dependent.alpha,
            &relation.dependent.beta,
        )?];
        let mut coeffs = vec![CyclotomicElement::one(spec.power)];
        for term in &relation.terms {
            labels.push(parse_label(spec, &term.alpha, &term.beta)?);
            coeffs.push(-term.coeff.to_element()?);
        }
        parsed.push(Parsed { labels, coeffs });
    }
    let lat = &spec.lattice;
    let trunc = &spec.truncation;
    let mut cache: BTreeMap<(Vec<Rational>, Vec<Rational>), JacobiQSeries> = BTreeMap::new();
    let mut results = Vec::with_capacity(parsed.len());
    let mut failed = 0;
    for (i, relation) in parsed.iter().enumerate() {
        let series: Vec<JacobiQSeries> = relation
            .labels
            .iter()
            .map(|(alpha, beta)| {
                cache
                    .entry((alpha.coords().to_vec(), beta.coords().to_vec()))
                    .or_insert_with(|| {
                        series_pow(&theta_qexp(lat, alpha, beta, trunc), spec.power)
                    })
                    .clone()
            })
            .collect();
        let residual = evaluate_relation(&relation.coeffs, &series);
        let passed = residual.is_zero();
        if !passed {
            failed += 1;
        }
        results.push(VerifyResult {
            relation: i + 1,
            passed,
            first_residual_exponent: residual.leading().map(|(e, _)| e.to_string()),
        });
    }
    Ok(VerifyReport {
        power: spec.power,
        truncation: trunc.to_string(),
        results,
        failed,
    })
}
