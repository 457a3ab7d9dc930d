//! End-to-end acceptance suite. Each test prints one line
//! `ACCEPTANCE <n> PASS|FAIL <runtime> <details>` to stderr (bypassing
//! output capture) and then asserts the criterion. The tests share a lock so
//! that runtimes are measured one at a time.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use interlace::framework::{
    birman_schwinger_check, dirichlet_eigenvalues, dtn_spectrum, neumann_eigenvalues, robin_grid, robin_spectrum,
    robin_sweep, FormSystem, DEFAULT_RESONANCE_TOL,
};
use interlace::lab::{
    dtn_negativity, run_friedlander, run_friedlander_alphas, square_dirichlet_exact, square_neumann_exact,
    witness_rayleigh, FriedlanderConfig,
};
use interlace::mesh::{generate, Domain};
use interlace::problems::{
    build_laplacian, build_stokes, build_stokes_oracle_mini, divergence_free_extension, natural_boundary_residual,
    stokes_eigenfunctions, weak_normal_derivative, BoundaryCondition, HelmholtzProjector, ProblemKind,
};
use interlace::Error;

static LOCK: Mutex<()> = Mutex::new(());

struct Outcome {
    checks: Vec<(String, bool)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    fn finish(self, id: u32, start: Instant, budget: Duration) {
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let failed: Vec<&str> = self.checks.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
        let pass = failed.is_empty() && in_budget;
        let detail = if failed.is_empty() {
            format!("{} checks", self.checks.len())
        } else {
            format!("failed: {}", failed.join("; "))
        };
        let line = format!(
            "ACCEPTANCE {id} {} {:.1}s (budget {}s) {detail}\n",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        let _ = std::io::stderr().write_all(line.as_bytes());
        assert!(failed.is_empty(), "criterion {id}: {detail}");
        assert!(in_budget, "criterion {id}: runtime {elapsed:?} over budget {budget:?}");
    }
}

fn lock() -> std::sync::MutexGuard<'static, ()> {
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Mat<f64> {
    let g = Mat::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let mut s = g.transpose() * &g;
    for i in 0..n {
        s[(i, i)] += 0.5;
    }
    s
}

fn random_system(rng: &mut ChaCha8Rng) -> FormSystem {
    let n = rng.gen_range(2..=12);
    let k = rng.gen_range(1..=4.min(n - 1));
    let rows = rng.gen_range(1..=n);
    let g = Mat::from_fn(rows, n, |_, _| rng.gen_range(-1.0..1.0));
    let a = g.transpose() * &g;
    let m = random_spd(rng, n);
    let j = Mat::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
    let mb = random_spd(rng, k);
    FormSystem::new(a, m, j, mb).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn criterion_1_matrix_suite() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
    let grid = robin_grid(-1e8, 20).unwrap();
    let (mut bs_max, mut gap_max, mut violations) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..100 {
        let fs = random_system(&mut rng);
        for mu in [-5.0, -0.3, 0.8] {
            let r = birman_schwinger_check(&fs, mu, 1e-8).unwrap();
            bs_max = bs_max.max(r.max_defect());
        }
        let sweep = robin_sweep(&fs, &grid, fs.n(), 1e-8, false).unwrap();
        violations += sweep.violations.len();
        gap_max = gap_max.max(sweep.max_terminal_gap());
    }
    out.check(format!("Birman-Schwinger defect {bs_max:.2e} <= 1e-8"), bs_max <= 1e-8);
    out.check(format!("{violations} monotonicity/strictness violations"), violations == 0);
    out.check(format!("Dirichlet limit gap {gap_max:.2e} <= 1e-4"), gap_max <= 1e-4);
    out.finish(1, start, Duration::from_secs(30));
}

#[test]
fn criterion_2_hand_system() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let mut a = Mat::zeros(2, 2);
    a[(0, 0)] = 1.0;
    a[(1, 1)] = 2.0;
    let mut j = Mat::zeros(1, 2);
    j[(0, 0)] = 1.0;
    let fs = FormSystem::new(a, Mat::identity(2, 2), j, Mat::identity(1, 1)).unwrap();
    let n = neumann_eigenvalues(&fs).unwrap();
    out.check("sigma(A^N) = {1, 2}", (n[0] - 1.0).abs() < 1e-12 && (n[1] - 2.0).abs() < 1e-12);
    let d = dirichlet_eigenvalues(&fs).unwrap();
    out.check("sigma(A^D) = {2}", d.len() == 1 && (d[0] - 2.0).abs() < 1e-12);
    for mu in [0.5, -3.0] {
        let r = robin_spectrum(&fs, mu, 2).unwrap();
        let mut expect = [1.0 - mu, 2.0];
        expect.sort_by(f64::total_cmp);
        let ok = (r.eigenvalues[0] - expect[0]).abs() < 1e-12 && (r.eigenvalues[1] - expect[1]).abs() < 1e-12;
        out.check(format!("sigma(A_mu) = {{1 - mu, 2}} at mu = {mu}"), ok);
    }
    for lambda in [0.0, 0.5, 3.0] {
        let r = dtn_spectrum(&fs, lambda, DEFAULT_RESONANCE_TOL).unwrap();
        out.check(
            format!("N_lambda = 1 - lambda at {lambda}"),
            r.eigenvalues.len() == 1 && (r.eigenvalues[0] - (1.0 - lambda)).abs() < 1e-12,
        );
    }
    let res = dtn_spectrum(&fs, 2.0, DEFAULT_RESONANCE_TOL);
    out.check("resonance at lambda = 2", matches!(res, Err(Error::DirichletResonance { .. })));
    out.finish(2, start, Duration::from_secs(1));
}

#[test]
fn criterion_3_classical_square() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let r = run_friedlander(Domain::Square, ProblemKind::Laplacian, 0.0, 1.0 / 16.0, 10).unwrap();
    let en = square_neumann_exact(11);
    let ed = square_dirichlet_exact(10);
    // the zero Neumann eigenvalue is compared absolutely
    let nerr = r
        .neumann
        .iter()
        .zip(&en)
        .map(|(v, e)| if *e == 0.0 { v.abs() } else { rel(*v, *e) })
        .fold(0.0, f64::max);
    let derr = r.dirichlet.iter().zip(&ed).map(|(v, e)| rel(*v, *e)).fold(0.0, f64::max);
    out.check(format!("11 Neumann eigenvalues within 0.5% (max {nerr:.2e})"), nerr < 5e-3);
    out.check(format!("10 Dirichlet eigenvalues within 0.5% (max {derr:.2e})"), derr < 5e-3);
    out.check("interlacing verdict for n <= 10", r.pass);
    let mut worst = 0.0f64;
    for n in 0..10 {
        let exact_gap = ed[n] - en[n + 1];
        worst = worst.max((r.gaps[n] - exact_gap).abs() / r.error_estimates[n]);
    }
    out.check(format!("gaps match closed form within Richardson estimate (worst ratio {worst:.2})"), worst <= 1.0);
    out.finish(3, start, Duration::from_secs(120));
}

#[test]
fn criterion_4_stokes_kernels() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    for domain in [Domain::Square, Domain::Lshape] {
        let mesh = generate(domain, 1.0 / 16.0, None).unwrap();
        let p0 = build_stokes(&mesh, 0.0).unwrap();
        for (alpha, expect) in [(0.0, 2usize), (1.0, 3usize)] {
            let p = p0.with_alpha(alpha).unwrap();
            let n = neumann_eigenvalues(p.form_system().unwrap()).unwrap();
            let zeros = n.iter().take_while(|v| v.abs() <= 1e-9).count();
            out.check(
                format!(
                    "{} alpha={alpha}: {zeros} zero eigenvalues (expect {expect}), next {:.3e} > 1e-2",
                    domain.name(),
                    n[zeros]
                ),
                zeros == expect && n[zeros] > 1e-2,
            );
        }
    }
    out.finish(4, start, Duration::from_secs(120));
}

#[test]
fn criterion_5_stokes_interlacing() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let h = 1.0 / 16.0;
    let mut th_lambda1 = None;
    for domain in [Domain::Square, Domain::Lshape, Domain::DiskPolygon] {
        let cfg = FriedlanderConfig::new(domain, ProblemKind::Stokes, 0.0, h, 8);
        let reports = run_friedlander_alphas(&cfg, &[0.0, 1.0]).unwrap();
        for r in &reports {
            let worst = r
                .gaps
                .iter()
                .zip(&r.error_estimates)
                .map(|(g, e)| g / e)
                .fold(f64::INFINITY, f64::min);
            out.check(
                format!(
                    "{} alpha={}: gaps > 5x Richardson for n <= 8 (min ratio {worst:.1})",
                    domain.name(),
                    r.config.alpha
                ),
                r.pass && r.is_consistent(),
            );
        }
        if domain == Domain::Square {
            th_lambda1 = Some(reports[0].dirichlet[0]);
        }
    }
    let mesh = generate(Domain::Square, h, None).unwrap();
    let mini = build_stokes_oracle_mini(&mesh, 0.0).unwrap();
    let mini_lambda1 = dirichlet_eigenvalues(mini.form_system().unwrap()).unwrap()[0];
    let th = th_lambda1.unwrap();
    let diff = (th - mini_lambda1).abs() / th;
    // diagnostic only: MINI converges at O(h²), its (2h, h) extrapolation shows the limit
    let coarse = build_stokes_oracle_mini(&generate(Domain::Square, 2.0 * h, None).unwrap(), 0.0).unwrap();
    let mini_coarse = dirichlet_eigenvalues(coarse.form_system().unwrap()).unwrap()[0];
    let extrapolated = (4.0 * mini_lambda1 - mini_coarse) / 3.0;
    out.check(
        format!(
            "Taylor-Hood {th:.4} vs MINI {mini_lambda1:.4} lambda_1^D within 1% ({:.2}%; MINI extrapolated {extrapolated:.4})",
            100.0 * diff
        ),
        diff < 0.01,
    );
    out.finish(5, start, Duration::from_secs(600));
}

#[test]
fn criterion_6_dtn_negativity() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let mesh = generate(Domain::Square, 1.0 / 16.0, None).unwrap();
    let lap = build_laplacian(&mesh).unwrap();
    let r = dtn_negativity(&lap, &[10.0, 30.0, 60.0], DEFAULT_RESONANCE_TOL).unwrap();
    for e in &r.entries {
        let m = e.min_eigenvalue.unwrap_or(f64::NAN);
        out.check(format!("laplacian lambda={}: min {m:.3e} < 0", e.lambda), m < 0.0);
    }
    let stokes = build_stokes(&generate(Domain::Square, 1.0 / 8.0, None).unwrap(), 0.0).unwrap();
    let r = dtn_negativity(&stokes, &[40.0], DEFAULT_RESONANCE_TOL).unwrap();
    let m = r.entries[0].min_eigenvalue.unwrap_or(f64::NAN);
    out.check(format!("stokes lambda=40: min {m:.3e} < 0"), m < 0.0);
    for (name, p) in [("laplacian", &lap), ("stokes", &stokes)] {
        let r = dtn_spectrum(p.form_system().unwrap(), 0.0, DEFAULT_RESONANCE_TOL).unwrap();
        let m = r.eigenvalues[0];
        out.check(format!("{name} lambda=0: min {m:.3e} >= -1e-10"), m >= -1e-10);
    }
    out.finish(6, start, Duration::from_secs(120));
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", items.join(", "))
}

fn orders(h: &[f64], v: &[f64]) -> Vec<f64> {
    v.windows(2)
        .zip(h.windows(2))
        .map(|(v, h)| (v[0] / v[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

#[test]
fn criterion_7_witness_families() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();
    let pi = std::f64::consts::PI;
    let omega = [pi, pi];
    let b = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
    let hs = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0];
    let meshes: Vec<_> = hs.iter().map(|&h| generate(Domain::Square, h, None).unwrap()).collect();

    let values: Vec<f64> = meshes
        .iter()
        .map(|m| witness_rayleigh(&build_laplacian(m).unwrap(), omega, b).unwrap().normalized)
        .collect();
    let o = orders(&hs, &values);
    out.check(
        format!("laplacian: values {}, orders {} >= 1.5", list(&values), list(&o)),
        o.iter().all(|&x| x >= 1.5),
    );
    for alpha in [0.0, 1.0] {
        let values: Vec<f64> = meshes
            .iter()
            .map(|m| witness_rayleigh(&build_stokes(m, alpha).unwrap(), omega, b).unwrap().normalized)
            .collect();
        let o = orders(&hs, &values);
        out.check(
            format!("stokes alpha={alpha}: values {}, orders {} >= 1.5", list(&values), list(&o)),
            o.iter().all(|&x| x >= 1.5),
        );
    }
    out.finish(7, start, Duration::from_secs(300));
}

#[test]
fn criterion_8_structure_suite() {
    let _g = lock();
    let start = Instant::now();
    let mut out = Outcome::new();

    // shift identity
    let p = build_stokes(&generate(Domain::Square, 1.0 / 8.0, None).unwrap(), 0.0).unwrap();
    let ef = &stokes_eigenfunctions(&p, BoundaryCondition::Neumann, 3).unwrap()[2];
    let f: Vec<f64> = ef.u.iter().map(|x| ef.lambda * x).collect();
    let c = 0.7;
    let shifted: Vec<f64> = ef.pi.iter().map(|x| x + c).collect();
    let f0 = weak_normal_derivative(&p, &ef.u, &ef.pi, &f).unwrap();
    let f1 = weak_normal_derivative(&p, &ef.u, &shifted, &f).unwrap();
    let r = p.nu_riesz().unwrap();
    let defect = f1
        .iter()
        .zip(&f0)
        .zip(&r)
        .map(|((a, b), nu)| (a - (b - c * nu)).abs())
        .fold(0.0, f64::max)
        / f0.iter().chain(&r).fold(1.0f64, |m, x| m.max(x.abs()));
    out.check(format!("shift identity defect {defect:.2e} <= 1e-12"), defect <= 1e-12);

    // natural-boundary residual under refinement
    let mut res = Vec::new();
    for h in [0.25, 0.125, 0.0625] {
        let p = build_stokes(&generate(Domain::Square, h, None).unwrap(), 0.0).unwrap();
        let efs = stokes_eigenfunctions(&p, BoundaryCondition::Neumann, 3).unwrap();
        res.push(natural_boundary_residual(&p, &efs[2]).unwrap());
    }
    out.check(
        format!("natural-boundary residual decreasing {}", list(&res)),
        res.windows(2).all(|w| w[1] < w[0]),
    );

    // Helmholtz orthogonality
    let mesh = generate(Domain::Lshape, 0.25, None).unwrap();
    let hp = HelmholtzProjector::new(&mesh).unwrap();
    let nd = hp.velocity_dofs().num_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f: Vec<f64> = (0..nd).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let fnorm = hp.inner(&f, &f).sqrt();
    let ps = hp.project_sigma(&f).unwrap();
    let pv = hp.project_v(&f).unwrap();
    let nodes = hp.velocity_dofs().num_nodes();
    let interior = hp.interior_scalar_nodes();
    let mut worst_s = 0.0f64;
    let mut worst_v = 0.0f64;
    for j in 0..nodes {
        let g = hp.gradient_of_node(j);
        let gn = hp.inner(&g, &g).sqrt();
        worst_s = worst_s.max(hp.inner(&ps, &g).abs() / (fnorm * gn));
        if interior.binary_search(&j).is_ok() {
            worst_v = worst_v.max(hp.inner(&pv, &g).abs() / (fnorm * gn));
        }
    }
    out.check(format!("sigma-projection orthogonality {worst_s:.2e} <= 1e-9"), worst_s <= 1e-9);
    out.check(format!("V-projection orthogonality {worst_v:.2e} <= 1e-9"), worst_v <= 1e-9);

    // rank identity
    for domain in [Domain::Square, Domain::Lshape, Domain::DiskPolygon] {
        for h in [0.5, 0.25, 0.125] {
            let p = build_stokes(&generate(domain, h, None).unwrap(), 0.0).unwrap();
            let (rank, k) = p.trace_rank().unwrap();
            out.check(format!("rank(JZ) = k - 1 on {} h={h}: {rank} vs {k}", domain.name()), rank + 1 == k);
        }
    }

    // divergence-free extension
    let p = build_stokes(&generate(Domain::Square, 0.25, None).unwrap(), 0.0).unwrap();
    let dm = p.velocity_dofs();
    let rot = dm.interpolate(|x| [-(x[1] - 0.5), x[0] - 0.5]);
    let phi = p.boundary().j.mul_vec(&rot);
    let ext = divergence_free_extension(&p, &phi).unwrap();
    out.check(
        format!(
            "zero-flux trace extends (div {:.1e}, trace {:.1e})",
            ext.divergence_residual, ext.trace_residual
        ),
        ext.divergence_residual <= 1e-10 && ext.trace_residual <= 1e-10,
    );
    let nu = p.normal_interpolant().unwrap();
    out.check(
        "trace with nonzero flux is rejected",
        matches!(divergence_free_extension(&p, &nu), Err(Error::FluxNotZero { .. })),
    );
    out.finish(8, start, Duration::from_secs(180));
}
