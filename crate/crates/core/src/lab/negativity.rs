use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::DtnOperator;
use crate::json::{sci, sci_opt};
use crate::problems::{DiscreteProblem, ProblemKind};

#[derive(Debug, Clone, Serialize)]
pub struct DtnEntry {
    #[serde(serialize_with = "sci")]
    pub lambda: f64,
    /// `None` when the shift is resonant.
    #[serde(serialize_with = "sci_opt")]
    pub min_eigenvalue: Option<f64>,
    pub negative_count: Option<usize>,
    pub resonance_flag: bool,
    #[serde(serialize_with = "sci")]
    pub dirichlet_distance: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DtnNegativityReport {
    pub kind: ProblemKind,
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
    pub entries: Vec<DtnEntry>,
    /// Every evaluated positive shift has a negative DtN eigenvalue.
    pub all_negative: bool,
}

/// Smallest eigenvalue of `N_λ°` per shift. Resonant shifts are skipped
/// with a note instead of failing the whole report.
pub fn dtn_negativity(p: &DiscreteProblem, lambdas: &[f64], tol: f64) -> Result<DtnNegativityReport> {
    if let Some(&bad) = lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::BadParameter(format!("shift {bad} must be finite and nonnegative")));
    }
    let op = DtnOperator::new(p.form_system()?)?;
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let distance = op.nearest_dirichlet(lambda).map_or(f64::INFINITY, |(_, d)| d);
        let entry = match op.evaluate(lambda, tol) {
            Ok(r) => {
                let neg_tol = 1e-10 * lambda.abs().max(1.0);
                DtnEntry {
                    lambda,
                    min_eigenvalue: r.min_eigenvalue(),
                    negative_count: Some(r.negative_count(neg_tol)),
                    resonance_flag: r.resonance_flag,
                    dirichlet_distance: distance,
                    note: None,
                }
            }
            Err(Error::DirichletResonance { nearest, .. }) => DtnEntry {
                lambda,
                min_eigenvalue: None,
                negative_count: None,
                resonance_flag: true,
                dirichlet_distance: distance,
                note: Some(format!("skipped: resonant with Dirichlet eigenvalue {nearest:e}")),
            },
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    let all_negative = entries
        .iter()
        .filter(|e| e.lambda > 0.0)
        .all(|e| e.min_eigenvalue.map_or(true, |m| m < 0.0));
    Ok(DtnNegativityReport {
        kind: p.kind(),
        alpha: p.alpha(),
        entries,
        all_negative,
    })
}
