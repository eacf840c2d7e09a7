use serde::Serialize;

use crate::ebg::{ExplanationTree, Theory};
use crate::factorization::{evaluate_coverage, Activity, CoverageReport};

use super::{cut, generalize, generate_model_with, ContentBinding, FrontierSpec, GenerateOptions, OperationalizeError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperationalityRow {
    pub spec: FrontierSpec,
    pub personable_ratio: f64,
    pub complete_only_ratio: f64,
    pub model_size: usize,
    pub coverage: CoverageReport,
}

/// Ranks frontier choices by how well the model each produces serves the
/// probe activities: personable ratio first, then smaller models.
pub fn assess_operationality(
    theory: &Theory,
    tree: &ExplanationTree,
    specs: &[FrontierSpec],
    probes: &[Activity],
    bindings: &ContentBinding,
    opts: GenerateOptions,
) -> Result<Vec<OperationalityRow>, OperationalizeError> {
    if specs.is_empty() {
        return Err(OperationalizeError::Invalid("no frontiers to assess".into()));
    }
    let general = generalize(tree, theory)?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let op = cut(&general, spec)?;
        let model = generate_model_with(theory, &[op], bindings, opts)?.program;
        let coverage = evaluate_coverage(&model, probes);
        rows.push(OperationalityRow {
            spec: spec.clone(),
            personable_ratio: coverage.personable_ratio(),
            complete_only_ratio: coverage.complete_only_ratio(),
            model_size: model.size(),
            coverage,
        });
    }
    rows.sort_by(|a, b| {
        b.personable_ratio
            .total_cmp(&a.personable_ratio)
            .then(a.model_size.cmp(&b.model_size))
    });
    Ok(rows)
}
