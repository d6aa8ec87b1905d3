//! End to end: classify, assemble, solve, measure.

use std::sync::Arc;

use phifem::linalg::{solve, SolverMethod, SolverOptions};
use phifem::{assemble_system, compute_errors, ActiveDomain, AnalyticField, BackgroundMesh, BoundingBox, LevelSetField, ProductSolution};

/// Disk of radius 0.3 centered at (½, ½) with `u = −φ (1 + sin(x) y)`.
fn problem() -> (AnalyticField, AnalyticField, AnalyticField) {
    fn phi(p: [f64; 2]) -> (f64, [f64; 2]) {
        let (dx, dy) = (p[0] - 0.5, p[1] - 0.5);
        (dx * dx + dy * dy - 0.09, [2.0 * dx, 2.0 * dy])
    }
    fn g(p: [f64; 2]) -> (f64, [f64; 2], f64) {
        let (s, c) = p[0].sin_cos();
        (1.0 + s * p[1], [c * p[1], s], -s * p[1])
    }
    let exact = AnalyticField::with_gradient(
        |p| -phi(p).0 * g(p).0,
        |p| {
            let ((v, gv), (w, gw, _)) = (phi(p), g(p));
            [-(gv[0] * w + v * gw[0]), -(gv[1] * w + v * gw[1])]
        },
    );
    // Δ(φ g) = 4 g + 2 ∇φ·∇g + φ Δg, so f = −Δu = Δ(φ g)
    let f = AnalyticField::new(|p| {
        let ((v, gv), (w, gw, lw)) = (phi(p), g(p));
        4.0 * w + 2.0 * (gv[0] * gw[0] + gv[1] * gw[1]) + v * lw
    });
    (AnalyticField::with_gradient(|p| phi(p).0, |p| phi(p).1), f, exact)
}

fn solve_on(n: usize, k: usize, opts: &SolverOptions) -> (ProductSolution, ActiveDomain, SolverMethod) {
    let (phi, f, _) = problem();
    let mesh = Arc::new(BackgroundMesh::new(BoundingBox::unit_square(), n, n).unwrap());
    let phi_h = LevelSetField::interpolate(&phi, mesh, k).unwrap();
    let domain = ActiveDomain::classify(&phi_h).unwrap();
    let sys = assemble_system(&domain, &phi_h, &f, k, 20.0).unwrap();
    let report = solve(&sys.matrix, &sys.rhs, opts).unwrap();
    (ProductSolution::new(phi_h, sys.dofs, report.solution).unwrap(), domain, report.method)
}

#[test]
fn errors_fall_at_the_expected_rates() {
    let (_, _, exact) = problem();
    for (k, min_h1_rate) in [(1, 0.8), (2, 1.7)] {
        let reports: Vec<_> = [8, 16, 32]
            .into_iter()
            .map(|n| {
                let (sol, domain, _) = solve_on(n, k, &SolverOptions::default());
                compute_errors(&sol, &exact, &domain).unwrap()
            })
            .collect();
        let orders = phifem::estimated_orders(&reports).unwrap();
        let (_, h1) = orders[orders.len() - 1];
        assert!(h1 > min_h1_rate, "k={k}: H1 order {h1}");
        assert!(reports[2].rel_l2 < reports[0].rel_l2 / 4.0);
    }
}

#[test]
fn krylov_and_dense_paths_agree() {
    let dense = solve_on(24, 1, &SolverOptions::default());
    let mut opts = SolverOptions::with_tol(1e-12);
    opts.dense_threshold = 0;
    let krylov = solve_on(24, 1, &opts);
    assert_eq!(dense.2, SolverMethod::DenseLu);
    assert_ne!(krylov.2, SolverMethod::DenseLu);
    let (a, b) = (dense.0.w(), krylov.0.w());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(diff / norm < 1e-8, "{}", diff / norm);
}
