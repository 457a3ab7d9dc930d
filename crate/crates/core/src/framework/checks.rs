use faer::Side;
use rayon::prelude::*;

use super::{dirichlet_spectrum, robin_spectrum, DtnOperator, FormSystem, Spectrum};
use super::dtn::DEFAULT_RESONANCE_TOL;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsDirection {
    /// `λ ∈ σ(A_μ)` ⇒ `μ ∈ σ(N_λ)`.
    RobinToDtn,
    /// `μ ∈ σ(N_λ)` ⇒ `λ ∈ σ(A_μ)`.
    DtnToRobin,
}

#[derive(Debug, Clone)]
pub struct BsEntry {
    pub direction: BsDirection,
    pub lambda: f64,
    pub mu: f64,
    /// Relative distance to the partner spectrum; `None` when skipped.
    pub defect: Option<f64>,
    /// `λ` lies in the flagged band around `σ(A^D)`, where `μ` as a function
    /// of `λ` has slope `~ 1/‖Jx‖²`; the defect is reported but not judged.
    pub near_resonant: bool,
    pub note: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct BirmanSchwingerReport {
    pub mu: f64,
    pub tol: f64,
    pub entries: Vec<BsEntry>,
}

impl BirmanSchwingerReport {
    /// Largest defect over the judged entries.
    pub fn max_defect(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| !e.near_resonant)
            .filter_map(|e| e.defect)
            .fold(0.0, f64::max)
    }

    pub fn checked(&self) -> usize {
        self.entries.iter().filter(|e| e.defect.is_some() && !e.near_resonant).count()
    }

    pub fn passed(&self) -> bool {
        self.max_defect() <= self.tol
    }
}

fn min_relative_distance(x: f64, set: &[f64]) -> f64 {
    set.iter()
        .map(|&s| (s - x).abs())
        .fold(f64::INFINITY, f64::min)
        / x.abs().max(1.0)
}

/// Checks `λ ∈ σ(A_μ) ⇔ μ ∈ σ(N_λ)` in both directions.
///
/// Robin eigenvectors whose trace norm is at most `tol` are skipped: they
/// are eigenvectors living in `ker J`, where the equivalence does not apply.
pub fn birman_schwinger_check(fs: &FormSystem, mu: f64, tol: f64) -> Result<BirmanSchwingerReport> {
    let op = DtnOperator::new(fs)?;
    let robin = robin_spectrum(fs, mu, fs.n())?;
    let mut entries = Vec::new();
    let mut samples = Vec::new();

    for (i, &lambda) in robin.eigenvalues.iter().enumerate() {
        let mut entry = BsEntry {
            direction: BsDirection::RobinToDtn,
            lambda,
            mu,
            defect: None,
            near_resonant: false,
            note: None,
        };
        if fs.trace_norm(&robin.vector(i)) <= tol {
            entry.note = Some("eigenvector in ker J");
        } else {
            match op.evaluate(lambda, DEFAULT_RESONANCE_TOL) {
                Ok(dtn) => {
                    entry.defect = Some(min_relative_distance(mu, &dtn.eigenvalues));
                    if dtn.resonance_flag {
                        entry.near_resonant = true;
                        entry.note = Some("near-resonant shift");
                    }
                    samples.push(lambda);
                }
                Err(Error::DirichletResonance { .. }) => entry.note = Some("resonant shift"),
                Err(e) => return Err(e),
            }
        }
        entries.push(entry);
    }

    let dvals = op.dirichlet_values();
    if let Some(&first) = dvals.first() {
        samples.push(first - 1.0);
    }
    samples.extend(dvals.windows(2).take(8).map(|w| 0.5 * (w[0] + w[1])));

    for lambda in samples {
        let dtn = match op.evaluate(lambda, DEFAULT_RESONANCE_TOL) {
            Ok(d) => d,
            Err(Error::DirichletResonance { .. }) => continue,
            Err(e) => return Err(e),
        };
        for &mu_k in &dtn.eigenvalues {
            let a_mu = fs.robin_matrix(mu_k);
            let vals = linalg::sym_generalized_eigenvalues(a_mu.as_ref(), fs.m())?;
            entries.push(BsEntry {
                direction: BsDirection::DtnToRobin,
                lambda,
                mu: mu_k,
                defect: Some(min_relative_distance(lambda, &vals)),
                near_resonant: false,
                note: None,
            });
        }
    }
    Ok(BirmanSchwingerReport { mu, tol, entries })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepViolation {
    /// `λ_n` decreased when `μ` decreased.
    Decrease {
        index: usize,
        step: usize,
        before: f64,
        after: f64,
    },
    /// Trace-carrying eigenvector but `λ_n` did not strictly move.
    NotStrict {
        index: usize,
        step: usize,
        value: f64,
        trace_norm: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RobinSweep {
    pub grid: Vec<f64>,
    pub spectra: Vec<Spectrum>,
    pub limit_reference: Option<Spectrum>,
    pub violations: Vec<SweepViolation>,
    /// `|λ_n(μ_last) - λ_n^D| / max(1, λ_n^D)` per index.
    pub terminal_gaps: Vec<f64>,
}

impl RobinSweep {
    pub fn eigenvalue_path(&self, index: usize) -> Vec<f64> {
        self.spectra.iter().map(|s| s.eigenvalues[index]).collect()
    }

    pub fn max_terminal_gap(&self) -> f64 {
        self.terminal_gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Robin spectra along a strictly decreasing grid of `μ ≤ 0`, with the
/// monotonicity and Dirichlet-limit checks.
///
/// Strict increase of `λ_n` from `μ_i` to `μ_{i+1}` is demanded only when the
/// eigenvector at `μ_{i+1}` has trace norm above `strict_tol`.
pub fn robin_sweep(
    fs: &FormSystem,
    grid: &[f64],
    m: usize,
    strict_tol: f64,
    parallel: bool,
) -> Result<RobinSweep> {
    if grid.is_empty() {
        return Err(Error::BadParameter("empty mu grid".into()));
    }
    if grid.iter().any(|&g| !(g <= 0.0)) {
        return Err(Error::BadParameter("mu grid must be <= 0".into()));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::BadParameter("mu grid must be strictly decreasing".into()));
    }
    let spectra: Vec<Spectrum> = if parallel {
        grid.par_iter()
            .map(|&mu| robin_spectrum(fs, mu, m))
            .collect::<Result<_>>()?
    } else {
        grid.iter()
            .map(|&mu| robin_spectrum(fs, mu, m))
            .collect::<Result<_>>()?
    };

    let mut violations = Vec::new();
    for step in 0..grid.len() - 1 {
        let (cur, next) = (&spectra[step], &spectra[step + 1]);
        for index in 0..m {
            let (before, after) = (cur.eigenvalues[index], next.eigenvalues[index]);
            if after < before - 1e-10 * before.abs().max(1.0) {
                violations.push(SweepViolation::Decrease {
                    index,
                    step,
                    before,
                    after,
                });
                continue;
            }
            let trace_norm = fs.trace_norm(&next.vector(index));
            if trace_norm > strict_tol && !(after > before) {
                violations.push(SweepViolation::NotStrict {
                    index,
                    step,
                    value: after,
                    trace_norm,
                });
            }
        }
    }

    let nd = fs.dirichlet_dim()?;
    let (limit_reference, terminal_gaps) = if nd > 0 {
        let d = dirichlet_spectrum(fs, m.min(nd))?;
        let last = spectra.last().expect("grid is nonempty");
        let gaps = d
            .eigenvalues
            .iter()
            .zip(&last.eigenvalues)
            .map(|(&ld, &lr)| (lr - ld).abs() / ld.abs().max(1.0))
            .collect();
        (Some(d), gaps)
    } else {
        (None, vec![])
    };

    Ok(RobinSweep {
        grid: grid.to_vec(),
        spectra,
        limit_reference,
        violations,
        terminal_gaps,
    })
}

/// `points` values of `μ`: zero followed by `-10^t` for `t` evenly spaced
/// from `-2` to `log10(-mu_min)`.
pub fn robin_grid(mu_min: f64, points: usize) -> Result<Vec<f64>> {
    if !(mu_min < -1e-2 && mu_min.is_finite()) || points < 2 {
        return Err(Error::BadParameter(format!(
            "robin grid needs mu_min < -0.01 and at least 2 points (got {mu_min}, {points})"
        )));
    }
    let top = (-mu_min).log10();
    let steps = points - 1;
    let mut grid = vec![0.0];
    for i in 0..steps {
        let t = if steps == 1 { top } else { -2.0 + (top + 2.0) * i as f64 / (steps - 1) as f64 };
        grid.push(-(10f64.powf(t)));
    }
    *grid.last_mut().expect("nonempty") = mu_min;
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedlanderReport {
    pub margin: f64,
    /// `λ_n^D - λ_{n+1}^N` for `n = 1..=n_max`.
    pub gaps: Vec<f64>,
    /// 1-based indices with `gap <= margin`.
    pub failures: Vec<usize>,
    pub pass: bool,
}

/// Checks `λ_{n+1}^N + margin < λ_n^D` for `n = 1..=n_max` (1-based, as in
/// the usual numbering of eigenvalues).
pub fn friedlander_check(
    neumann: &[f64],
    dirichlet: &[f64],
    n_max: usize,
    margin: f64,
) -> Result<FriedlanderReport> {
    if neumann.len() < n_max + 1 {
        return Err(Error::InsufficientEigenvalues {
            needed: n_max + 1,
            available: neumann.len(),
        });
    }
    if dirichlet.len() < n_max {
        return Err(Error::InsufficientEigenvalues {
            needed: n_max,
            available: dirichlet.len(),
        });
    }
    let gaps: Vec<f64> = (0..n_max).map(|i| dirichlet[i] - neumann[i + 1]).collect();
    let failures: Vec<usize> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| !(g > margin))
        .map(|(i, _)| i + 1)
        .collect();
    Ok(FriedlanderReport {
        margin,
        pass: failures.is_empty(),
        gaps,
        failures,
    })
}

/// `‖(I + A_μ)⁻¹ - (I + A^D)⁻¹ ⊕ 0‖` in the operator norm induced by `M`.
pub fn resolvent_gap(fs: &FormSystem, mu: f64) -> Result<f64> {
    let l = linalg::cholesky_lower(fs.m()).map_err(|_| Error::GramNotPd)?;
    let mut shifted = fs.robin_matrix(mu);
    shifted += fs.m();
    let robin = linalg::sym_solve(shifted.as_ref(), l.as_ref())?;
    let mut t = l.transpose() * &robin;

    let zd = fs.dirichlet_basis()?;
    if zd.ncols() > 0 {
        let mut plus = fs.a().to_owned();
        plus += fs.m();
        let sd = linalg::congruence(plus.as_ref(), zd.as_ref());
        let proj = zd.transpose() * &l;
        let solved = linalg::sym_solve(sd.as_ref(), proj.as_ref())?;
        t -= proj.transpose() * &solved;
    }
    let t = linalg::symmetrize(t.as_ref());
    let vals = t
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    Ok(vals.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::super::tests::hand_system;
    use super::*;

    #[test]
    fn friedlander_hand_lists() {
        let r = friedlander_check(&[0.0, 1.0], &[2.0], 1, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.gaps, vec![1.0]);
        let r = friedlander_check(&[0.0, 3.0], &[2.0], 1, 0.0).unwrap();
        assert!(!r.pass);
        assert_eq!(r.failures, vec![1]);
        assert!(matches!(
            friedlander_check(&[0.0], &[2.0], 1, 0.0),
            Err(Error::InsufficientEigenvalues { .. })
        ));
    }

    #[test]
    fn hand_system_sweep() {
        let fs = hand_system();
        let s = robin_sweep(&fs, &[0.0, -1.0, -10.0, -1e4], 2, 1e-8, false).unwrap();
        let path = s.eigenvalue_path(0);
        for (v, e) in path.iter().zip([1.0, 2.0, 2.0, 2.0]) {
            assert!((v - e).abs() < 1e-12, "{path:?}");
        }
        assert!(s.violations.is_empty(), "{:?}", s.violations);
        assert!(s.max_terminal_gap() < 1e-12);
    }

    #[test]
    fn single_point_sweep_is_neumann() {
        let s = robin_sweep(&hand_system(), &[0.0], 2, 1e-8, false).unwrap();
        assert!((s.spectra[0].eigenvalues[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let fs = hand_system();
        assert!(robin_sweep(&fs, &[0.0, 0.0], 1, 1e-8, false).is_err());
        assert!(robin_sweep(&fs, &[1.0, 0.0], 1, 1e-8, false).is_err());
        assert!(robin_sweep(&fs, &[], 1, 1e-8, false).is_err());
    }

    #[test]
    fn hand_system_birman_schwinger() {
        let r = birman_schwinger_check(&hand_system(), 0.5, 1e-8).unwrap();
        let fwd: Vec<_> = r
            .entries
            .iter()
            .filter(|e| e.direction == BsDirection::RobinToDtn)
            .collect();
        assert_eq!(fwd.len(), 2);
        // λ = 0.5 pairs with N_0.5 = 0.5
        assert!((fwd[0].lambda - 0.5).abs() < 1e-12);
        assert!(fwd[0].defect.unwrap() < 1e-14);
        // e2 is trace free and skipped
        assert!(fwd[1].defect.is_none());
        assert!(r.passed());
    }

    #[test]
    fn resolvent_gap_shrinks() {
        let fs = hand_system();
        let g1 = resolvent_gap(&fs, -10.0).unwrap();
        let g2 = resolvent_gap(&fs, -1e4).unwrap();
        // (1 + 1 - μ)^{-1} on e1
        assert!((g1 - 1.0 / 12.0).abs() < 1e-13);
        assert!(g2 < g1);
    }
}
