//! Numerical experiments on the interlacing `λ_{n+1}^N < λ_n^D`.

mod negativity;
mod study;
mod witness;

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::framework::{dirichlet_eigenvalues, neumann_eigenvalues};
use crate::json::{fmt_f64, sci, sci_opt, sci_seq};
use crate::mesh::{generate, Domain};
use crate::problems::{assemble, DiscreteProblem, ProblemKind};

pub use negativity::{dtn_negativity, DtnEntry, DtnNegativityReport};
pub use study::{convergence_study, observed_orders, ConvergenceReport};
pub use witness::{boundary_identity, witness_rayleigh, WitnessResult, WitnessSolver};

/// Default safety factor between a gap and its error estimate.
pub const DEFAULT_MARGIN: f64 = 5.0;
/// Assumed convergence order of the Richardson estimate.
pub const DEFAULT_ORDER: f64 = 2.0;

/// `|λ_h - λ_{2h}| / (2^p - 1)`: error estimate for `λ_h` from two meshes
/// whose sizes differ by a factor of two.
pub fn richardson_estimate(fine: f64, coarse: f64, order: f64) -> f64 {
    (fine - coarse).abs() / (2f64.powf(order) - 1.0)
}

/// The first `count` values of `π²(m² + n²)` over `m, n ≥ start`.
fn square_values(count: usize, start: u32) -> Vec<f64> {
    let top = start + count as u32 + 1;
    let mut v: Vec<f64> = (start..top)
        .flat_map(|m| (start..top).map(move |n| (m * m + n * n) as f64))
        .collect();
    v.sort_by(f64::total_cmp);
    v.truncate(count);
    v.into_iter().map(|x| x * std::f64::consts::PI.powi(2)).collect()
}

/// Dirichlet Laplacian eigenvalues of the unit square.
pub fn square_dirichlet_exact(count: usize) -> Vec<f64> {
    square_values(count, 1)
}

/// Neumann Laplacian eigenvalues of the unit square.
pub fn square_neumann_exact(count: usize) -> Vec<f64> {
    square_values(count, 0)
}

#[derive(Debug, Clone, Serialize)]
pub struct FriedlanderConfig {
    pub domain: Domain,
    pub kind: ProblemKind,
    #[serde(serialize_with = "sci")]
    pub alpha: f64,
    /// Fine mesh size; the estimate also uses `2h`.
    #[serde(serialize_with = "sci")]
    pub h: f64,
    pub n_max: usize,
    pub sides: Option<usize>,
    #[serde(serialize_with = "sci")]
    pub margin: f64,
    #[serde(serialize_with = "sci")]
    pub order: f64,
}

impl FriedlanderConfig {
    pub fn new(domain: Domain, kind: ProblemKind, alpha: f64, h: f64, n_max: usize) -> Self {
        FriedlanderConfig {
            domain,
            kind,
            alpha: if kind == ProblemKind::Laplacian { 0.0 } else { alpha },
            h,
            n_max,
            sides: None,
            margin: DEFAULT_MARGIN,
            order: DEFAULT_ORDER,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_max == 0 {
            return Err(Error::BadParameter("n_max must be at least 1".into()));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::BadParameter(format!("margin {} must be nonnegative", self.margin)));
        }
        if !(self.order.is_finite() && self.order > 0.0) {
            return Err(Error::BadParameter(format!("order {} must be positive", self.order)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: FriedlanderConfig,
    /// Velocity (or scalar) dofs on the fine mesh.
    pub ndof: usize,
    #[serde(serialize_with = "sci")]
    pub h_coarse: f64,
    /// `λ_1^N ..= λ_{n_max+1}^N` on the fine mesh.
    #[serde(serialize_with = "sci_seq")]
    pub neumann: Vec<f64>,
    /// `λ_1^D ..= λ_{n_max}^D` on the fine mesh.
    #[serde(serialize_with = "sci_seq")]
    pub dirichlet: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    pub neumann_coarse: Vec<f64>,
    #[serde(serialize_with = "sci_seq")]
    pub dirichlet_coarse: Vec<f64>,
    /// `λ_n^D - λ_{n+1}^N`.
    #[serde(serialize_with = "sci_seq")]
    pub gaps: Vec<f64>,
    /// Richardson estimate of the error in each gap.
    #[serde(serialize_with = "sci_seq")]
    pub error_estimates: Vec<f64>,
    pub verdicts: Vec<bool>,
    pub pass: bool,
    #[serde(serialize_with = "sci_opt")]
    pub runtime_seconds: Option<f64>,
    pub policy: &'static str,
}

const POLICY: &str = "a gap counts as strictly positive when it exceeds margin times its Richardson error estimate";

impl ExperimentReport {
    fn from_tables(
        config: FriedlanderConfig,
        ndof: usize,
        h_coarse: f64,
        fine: (Vec<f64>, Vec<f64>),
        coarse: (Vec<f64>, Vec<f64>),
    ) -> Self {
        let mut r = ExperimentReport {
            config,
            ndof,
            h_coarse,
            neumann: fine.0,
            dirichlet: fine.1,
            neumann_coarse: coarse.0,
            dirichlet_coarse: coarse.1,
            gaps: vec![],
            error_estimates: vec![],
            verdicts: vec![],
            pass: false,
            runtime_seconds: None,
            policy: POLICY,
        };
        let (gaps, errs, verdicts) = r.evaluate();
        r.gaps = gaps;
        r.error_estimates = errs;
        r.pass = verdicts.iter().all(|&v| v);
        r.verdicts = verdicts;
        r
    }

    fn evaluate(&self) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        let p = self.config.order;
        let mut gaps = vec![];
        let mut errs = vec![];
        let mut verdicts = vec![];
        for n in 0..self.config.n_max {
            let gap = self.dirichlet[n] - self.neumann[n + 1];
            let e = richardson_estimate(self.dirichlet[n], self.dirichlet_coarse[n], p)
                + richardson_estimate(self.neumann[n + 1], self.neumann_coarse[n + 1], p);
            gaps.push(gap);
            errs.push(e);
            verdicts.push(gap > self.config.margin * e);
        }
        (gaps, errs, verdicts)
    }

    /// Recomputes gaps, estimates and verdict from the stored tables and
    /// compares them with the stored values.
    pub fn is_consistent(&self) -> bool {
        let (gaps, errs, verdicts) = self.evaluate();
        gaps == self.gaps && errs == self.error_estimates && verdicts == self.verdicts && self.pass == verdicts.iter().all(|&v| v)
    }

    /// 1-based indices `n` whose gap fails the margin rule.
    pub fn failures(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .enumerate()
            .filter(|(_, &v)| !v)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Table with columns `index, lambda_N, lambda_D, gap, error_estimate`,
    /// one row per `n` pairing `λ_{n+1}^N` with `λ_n^D`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,lambda_N,lambda_D,gap,error_estimate\n");
        for n in 0..self.gaps.len() {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                n + 1,
                fmt_f64(self.neumann[n + 1]),
                fmt_f64(self.dirichlet[n]),
                fmt_f64(self.gaps[n]),
                fmt_f64(self.error_estimates[n])
            ));
        }
        s
    }
}

/// First `n_max + 1` Neumann and `n_max` Dirichlet eigenvalues.
pub fn friedlander_tables(p: &DiscreteProblem, n_max: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let fs = p.form_system()?;
    let mut n = neumann_eigenvalues(fs)?;
    let mut d = dirichlet_eigenvalues(fs)?;
    if n.len() < n_max + 1 {
        return Err(Error::InsufficientEigenvalues { needed: n_max + 1, available: n.len() });
    }
    if d.len() < n_max {
        return Err(Error::InsufficientEigenvalues { needed: n_max, available: d.len() });
    }
    n.truncate(n_max + 1);
    d.truncate(n_max);
    Ok((n, d))
}

/// Interlacing experiment at `h` with a Richardson estimate from `2h`.
pub fn run_friedlander(domain: Domain, kind: ProblemKind, alpha: f64, h: f64, n_max: usize) -> Result<ExperimentReport> {
    run_friedlander_with(&FriedlanderConfig::new(domain, kind, alpha, h, n_max))
}

pub fn run_friedlander_with(config: &FriedlanderConfig) -> Result<ExperimentReport> {
    let alphas = [config.alpha];
    Ok(run_friedlander_alphas(config, &alphas)?.remove(0))
}

/// One report per `α`, sharing meshes and the divergence-free bases.
pub fn run_friedlander_alphas(config: &FriedlanderConfig, alphas: &[f64]) -> Result<Vec<ExperimentReport>> {
    config.validate()?;
    let start = Instant::now();
    let coarse_h = 2.0 * config.h;
    let mut coarse_tables = Vec::new();
    {
        let mesh = generate(config.domain, coarse_h, config.sides)?;
        let base = assemble(&mesh, config.kind, alphas.first().copied().unwrap_or(0.0))?;
        for &alpha in alphas {
            let p = problem_with_alpha(&base, config.kind, alpha)?;
            coarse_tables.push(friedlander_tables(&p, config.n_max)?);
        }
    }
    let mesh = generate(config.domain, config.h, config.sides)?;
    let base = assemble(&mesh, config.kind, alphas.first().copied().unwrap_or(0.0))?;
    let mut out = Vec::new();
    for (&alpha, coarse) in alphas.iter().zip(coarse_tables) {
        let p = problem_with_alpha(&base, config.kind, alpha)?;
        let fine = friedlander_tables(&p, config.n_max)?;
        let mut cfg = config.clone();
        cfg.alpha = p.alpha();
        let mut report = ExperimentReport::from_tables(cfg, p.num_dofs(), coarse_h, fine, coarse);
        report.runtime_seconds = Some(start.elapsed().as_secs_f64());
        out.push(report);
    }
    Ok(out)
}

fn problem_with_alpha(base: &DiscreteProblem, kind: ProblemKind, alpha: f64) -> Result<DiscreteProblem> {
    match kind {
        ProblemKind::Laplacian => Ok(base.clone()),
        ProblemKind::Stokes if alpha == base.alpha() => Ok(base.clone()),
        ProblemKind::Stokes => base.with_alpha(alpha),
    }
}
