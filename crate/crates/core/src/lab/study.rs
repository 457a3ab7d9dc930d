use serde::Serialize;

use super::{friedlander_tables, square_dirichlet_exact, square_neumann_exact};
use crate::error::{Error, Result};
use crate::json::{sci_opt_seq, sci_seq};
use crate::mesh::{generate, Domain};
use crate::problems::{assemble, ProblemKind};

/// Observed orders `log(d_k / d_{k+1}) / log(h_k / h_{k+1})` from
/// successive differences `d_k = |v_k - v_{k+1}|` of a sequence computed on
/// meshes `h`.
pub fn observed_orders(h: &[f64], values: &[f64]) -> Vec<Option<f64>> {
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    diffs
        .windows(2)
        .zip(h.windows(2))
        .map(|(d, hh)| {
            let p = (d[0] / d[1]).ln() / (hh[0] / hh[1]).ln();
            p.is_finite().then_some(p)
        })
        .collect()
}

/// Orders from errors against a reference: `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
fn error_orders(h: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .zip(h.windows(2))
        .map(|(e, hh)| {
            let p = (e[0] / e[1]).ln() / (hh[0] / hh[1]).ln();
            p.is_finite().then_some(p)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Sequence {
    /// One value per mesh.
    #[serde(serialize_with = "sci_seq")]
    pub values: Vec<f64>,
    /// Orders from successive differences.
    #[serde(serialize_with = "sci_opt_seq")]
    pub orders: Vec<Option<f64>>,
    /// Errors against the closed form, when one is known.
    #[serde(serialize_with = "sci_seq")]
    pub errors: Vec<f64>,
    #[serde(serialize_with = "sci_opt_seq")]
    pub error_orders: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub domain: Domain,
    pub kind: ProblemKind,
    #[serde(serialize_with = "crate::json::sci")]
    pub alpha: f64,
    #[serde(serialize_with = "sci_seq")]
    pub h: Vec<f64>,
    /// `dirichlet[i]` follows `λ_{i+1}^D` across the meshes.
    pub dirichlet: Vec<Sequence>,
    pub neumann: Vec<Sequence>,
}

fn sequences(h: &[f64], table: &[Vec<f64>], exact: Option<Vec<f64>>) -> Vec<Sequence> {
    let count = table[0].len();
    (0..count)
        .map(|i| {
            let values: Vec<f64> = table.iter().map(|t| t[i]).collect();
            let (errors, eo) = match &exact {
                Some(ex) => {
                    let e: Vec<f64> = values.iter().map(|v| (v - ex[i]).abs()).collect();
                    let o = error_orders(h, &e);
                    (e, o)
                }
                None => (vec![], vec![]),
            };
            Sequence {
                orders: observed_orders(h, &values),
                values,
                errors,
                error_orders: eo,
            }
        })
        .collect()
}

/// First `n` Neumann and Dirichlet eigenvalues on each mesh of `h_list`.
pub fn convergence_study(
    domain: Domain,
    kind: ProblemKind,
    alpha: f64,
    h_list: &[f64],
    n: usize,
    sides: Option<usize>,
) -> Result<ConvergenceReport> {
    if h_list.len() < 3 {
        return Err(Error::BadParameter("a convergence study needs at least three mesh sizes".into()));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::BadParameter("mesh sizes must be strictly decreasing".into()));
    }
    if n == 0 {
        return Err(Error::BadParameter("need at least one eigenvalue".into()));
    }
    let mut neumann = Vec::new();
    let mut dirichlet = Vec::new();
    for &h in h_list {
        let mesh = generate(domain, h, sides)?;
        let p = assemble(&mesh, kind, alpha)?;
        let (mut nv, dv) = friedlander_tables(&p, n)?;
        nv.truncate(n);
        neumann.push(nv);
        dirichlet.push(dv);
    }
    let closed = domain == Domain::Square && kind == ProblemKind::Laplacian;
    Ok(ConvergenceReport {
        domain,
        kind,
        alpha: if kind == ProblemKind::Laplacian { 0.0 } else { alpha },
        h: h_list.to_vec(),
        dirichlet: sequences(h_list, &dirichlet, closed.then(|| square_dirichlet_exact(n))),
        neumann: sequences(h_list, &neumann, closed.then(|| square_neumann_exact(n))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_of_a_model_sequence() {
        let h = [0.4, 0.2, 0.1];
        let v: Vec<f64> = h.iter().map(|x: &f64| 1.0 + x.powi(4)).collect();
        let o = observed_orders(&h, &v);
        assert!((o[0].unwrap() - 4.0).abs() < 1e-10);
        assert_eq!(observed_orders(&h, &[1.0, 1.0, 1.0]), vec![None]);
    }

    #[test]
    fn rejects_bad_lists() {
        assert!(convergence_study(Domain::Square, ProblemKind::Laplacian, 0.0, &[0.5, 0.25], 1, None).is_err());
        assert!(convergence_study(Domain::Square, ProblemKind::Laplacian, 0.0, &[0.25, 0.5, 0.125], 1, None).is_err());
    }
}
