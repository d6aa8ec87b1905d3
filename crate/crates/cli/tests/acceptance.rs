//! Acceptance gate. Each criterion prints one PASS/FAIL line followed by the
//! individual checks; the process exits non-zero when any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use phifem::assembly::{assemble_terms, Terms};
use phifem::fem::quadrature::{edge_quadrature, triangle_quadrature, MAX_EXACTNESS};
use phifem::fem::ReferenceElement;
use phifem::linalg::{dense_condition_number, estimate_condition_number, ConditionOptions, CsrMatrix};
use phifem::{compute_errors, ActiveDomain, BackgroundMesh, BoundingBox, LevelSetField};
use phifem_cli::runner::solve_level;
use phifem_cli::{conditioning_study, csv_string, run_case, sigma_sweep, CaseId, Row, RunConfig, TestCase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    label: String,
    ok: bool,
}

fn check(label: impl Into<String>, ok: bool) -> Check {
    Check { label: label.into(), ok }
}

fn in_range(label: &str, v: Option<f64>, lo: f64, hi: f64) -> Check {
    match v {
        Some(v) => check(format!("{label} = {v:.4} in [{lo}, {hi}]"), (lo..=hi).contains(&v)),
        None => check(format!("{label} missing"), false),
    }
}

fn within_factor(label: &str, v: Option<f64>, reference: f64, factor: f64) -> Check {
    match v {
        Some(v) => {
            let r = v / reference;
            check(format!("{label} = {v:.4e} vs {reference:.4e} (ratio {r:.3}, factor {factor})"), r <= factor && r >= 1.0 / factor)
        }
        None => check(format!("{label} missing"), false),
    }
}

fn all_ok(label: &str, rows: &[Row]) -> Check {
    let bad: Vec<&str> = rows.iter().filter(|r| !r.is_ok()).map(|r| r.status.as_str()).collect();
    check(format!("{label}: every level solved {bad:?}"), bad.is_empty())
}

fn config(case: CaseId, k: usize, sigma: f64, n_start: usize, levels: usize) -> RunConfig {
    RunConfig { case, k, sigma, n_start, levels, ..RunConfig::default() }
}

fn at_n(rows: &[Row], n: usize) -> Option<&Row> {
    rows.iter().find(|r| r.n_cells == Some(n))
}

fn convergence_orders() -> Vec<Check> {
    let start = Instant::now();
    let mut out = Vec::new();
    let windows = [(1, 5, (0.8, 1.2), (1.7, 2.3)), (2, 4, (1.7, 2.3), (2.6, 3.4)), (3, 4, (2.6, 3.4), (3.5, 4.5))];
    for (k, levels, h1, l2) in windows {
        let rows = run_case(&config(CaseId::Circle, k, 20.0, 10, levels));
        out.push(all_ok(&format!("k={k}"), &rows));
        let last = rows.last();
        out.push(in_range(&format!("k={k} finest-pair H1 eoc"), last.and_then(|r| r.eoc_h1), h1.0, h1.1));
        out.push(in_range(&format!("k={k} finest-pair L2 eoc"), last.and_then(|r| r.eoc_l2), l2.0, l2.1));
    }
    let secs = start.elapsed().as_secs_f64();
    out.push(check(format!("runtime {secs:.1} s <= 300 s"), secs <= 300.0));
    out
}

fn absolute_errors() -> Vec<Check> {
    let mut out = Vec::new();
    for (k, l2, h1) in [(1, 0.04614, 0.08877), (2, 3.20e-5, 7.32e-4)] {
        let rows = run_case(&config(CaseId::Circle, k, 20.0, 40, 1));
        out.push(all_ok(&format!("k={k}"), &rows));
        out.push(within_factor(&format!("k={k} rel L2 at h=sqrt2/40"), rows[0].err_l2_rel, l2, 3.0));
        out.push(within_factor(&format!("k={k} rel H1 at h=sqrt2/40"), rows[0].err_h1_rel, h1, 3.0));
    }
    out
}

fn stabilization_necessity() -> Vec<Check> {
    let naive = run_case(&config(CaseId::Circle, 1, 0.0, 10, 5));
    let stable = run_case(&config(CaseId::Circle, 1, 20.0, 160, 1));
    let mut out = vec![all_ok("sigma=0", &naive), all_ok("sigma=20", &stable)];
    let l2: Vec<f64> = naive.iter().filter_map(|r| r.err_l2_rel).collect();
    let increases = l2.windows(2).filter(|w| w[1] > w[0]).count();
    let listed: Vec<String> = l2.iter().map(|e| format!("{e:.3e}")).collect();
    out.push(check(format!("sigma=0 L2 errors [{}] increase at least once", listed.join(", ")), increases >= 1));
    match (at_n(&naive, 160).and_then(|r| r.err_l2_rel), stable[0].err_l2_rel) {
        (Some(a), Some(b)) => {
            out.push(check(format!("h=sqrt2/160: sigma=0 L2 {a:.3e} >= 10 x sigma=20 L2 {b:.3e} (ratio {:.1})", a / b), a >= 10.0 * b))
        }
        _ => out.push(check("h=sqrt2/160 errors missing", false)),
    }
    out
}

fn slope_of(rows: &[Row]) -> Option<f64> {
    rows.iter().find(|r| r.status == "loglog-slope").and_then(|r| r.kappa)
}

fn conditioning() -> Vec<Check> {
    let stable = conditioning_study(&config(CaseId::Circle, 1, 20.0, 10, 4));
    let naive = conditioning_study(&config(CaseId::Circle, 1, 0.0, 10, 4));
    let levels = |rows: &[Row]| rows.iter().filter(|r| r.status != "loglog-slope").cloned().collect::<Vec<_>>();
    let mut out = vec![all_ok("sigma=20", &levels(&stable)), all_ok("sigma=0", &levels(&naive))];
    out.push(in_range("sigma=20 log-log slope of kappa vs h", slope_of(&stable), -2.6, -1.4));
    for (n, reference) in [(10, 472.7), (20, 1113.3), (40, 1801.4), (80, 4840.5)] {
        out.push(within_factor(&format!("sigma=20 kappa n={n}"), at_n(&stable, n).and_then(|r| r.kappa), reference, 3.0));
    }
    let s0 = slope_of(&naive);
    out.push(check(format!("sigma=0 slope {s0:.3?} has magnitude >= 3"), s0.is_some_and(|s| s.abs() >= 3.0)));
    out
}

fn sigma_robustness() -> Vec<Check> {
    let mut cfg = config(CaseId::Circle, 1, 20.0, 20, 1);
    cfg.sigmas = vec![0.1, 1.0, 10.0, 100.0];
    let sweep = sigma_sweep(&cfg);
    let mut out = vec![all_ok("h=sqrt2/20 sweep", &sweep)];
    let h1: Vec<f64> = sweep.iter().filter_map(|r| r.err_h1_rel).collect();
    let (lo, hi) = h1.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    out.push(check(format!("h=sqrt2/20 H1 errors {h1:.4?} within 2x (spread {:.2})", hi / lo), h1.len() == 4 && hi <= 2.0 * lo));

    cfg.n_start = 40;
    cfg.sigmas = vec![1e-4, 0.1];
    let small = sigma_sweep(&cfg);
    out.push(all_ok("h=sqrt2/40 sweep", &small));
    match (small[0].err_l2_rel, small[1].err_l2_rel) {
        (Some(a), Some(b)) => out.push(check(
            format!("h=sqrt2/40 L2 at sigma=1e-4 {a:.3e} >= 100 x sigma=0.1 {b:.3e} (ratio {:.2})", a / b),
            a >= 100.0 * b,
        )),
        _ => out.push(check("h=sqrt2/40 errors missing", false)),
    }
    out
}

fn circle_system(n: usize, k: usize, terms: Terms) -> (CsrMatrix, usize) {
    let case = TestCase::get(CaseId::Circle);
    let mesh = Arc::new(BackgroundMesh::new(case.default_box, n, n).unwrap());
    let phi = LevelSetField::interpolate(&case.phi, mesh, k).unwrap();
    let domain = ActiveDomain::classify(&phi).unwrap();
    let system = assemble_terms(&domain, &phi, &case.f, k, 20.0, terms).unwrap();
    let n = system.n_dofs();
    (system.matrix, n)
}

fn random_vectors(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect()
}

fn property_suite() -> Vec<Check> {
    let mut out = Vec::new();

    // patch test: the planted solution lies in the discrete space
    let planted = TestCase::get(CaseId::Planted);
    for k in 1..=3 {
        let worst = solve_level(&planted, planted.default_box, 8, k, k.max(2), 20.0)
            .and_then(|lv| compute_errors(&lv.solution, planted.exact.as_ref().unwrap(), &lv.domain))
            .map(|r| r.rel_l2.max(r.rel_h1_semi))
            .unwrap_or(f64::INFINITY);
        out.push(check(format!("patch test k={k}: rel error {worst:.2e} <= 1e-9"), worst <= 1e-9));
    }

    let (ghost, n) = circle_system(20, 1, Terms::GHOST);
    let t = ghost.transpose();
    let symmetric = ghost.row_ptr() == t.row_ptr() && ghost.col_idx() == t.col_idx() && ghost.values() == t.values();
    out.push(check("ghost matrix exactly symmetric", symmetric));
    let scale = ghost.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_ghost = random_vectors(n, 1000, 1)
        .iter()
        .map(|v| ghost.quadratic_form(v) / v.iter().map(|x| x * x).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    out.push(check(format!("ghost PSD on 1000 vectors: min Rayleigh {min_ghost:.3e}"), min_ghost >= -1e-13 * scale));

    let (full, n) = circle_system(20, 1, Terms::ALL);
    let min_full =
        random_vectors(n, 1000, 2).iter().map(|v| full.quadratic_form(v)).fold(f64::INFINITY, f64::min);
    out.push(check(format!("v'Av > 0 on 1000 vectors, sigma=20: min {min_full:.3e}"), min_full > 0.0));

    let mut worst_quad = 0.0f64;
    for e in 0..=MAX_EXACTNESS {
        let tri = triangle_quadrature(e).unwrap();
        let edge = edge_quadrature(e).unwrap();
        for p in 0..=e {
            let exact_edge = 1.0 / (p + 1) as f64;
            let got: f64 = edge.points.iter().zip(&edge.weights).map(|(s, w)| w * s[1].powi(p as i32)).sum();
            worst_quad = worst_quad.max(((got - exact_edge) / exact_edge).abs());
            for q in 0..=e - p {
                let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
                let exact = fact(p) * fact(q) / fact(p + q + 2);
                let got: f64 = tri
                    .points
                    .iter()
                    .zip(&tri.weights)
                    .map(|(b, w)| w * b[1].powi(p as i32) * b[2].powi(q as i32))
                    .sum();
                worst_quad = worst_quad.max(((got - exact) / exact).abs());
            }
        }
    }
    out.push(check(format!("quadrature monomials up to degree {MAX_EXACTNESS}: worst rel {worst_quad:.2e} <= 1e-12"), worst_quad <= 1e-12));

    let mut worst_basis = 0.0f64;
    let samples = random_vectors(2, 50, 3);
    for k in 1..=3 {
        let el = ReferenceElement::new(k).unwrap();
        for s in &samples {
            let (a, b) = ((s[0] + 1.0) / 2.0, (s[1] + 1.0) / 2.0 * (1.0 - (s[0] + 1.0) / 2.0));
            let bary = [1.0 - a - b, a, b];
            let (mut sum, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for i in 0..el.n_basis() {
                let (v, g, _) = el.eval_basis(i, bary);
                sum += v;
                gx += g[0];
                gy += g[1];
            }
            worst_basis = worst_basis.max((sum - 1.0).abs()).max(gx.abs()).max(gy.abs());
        }
        for i in 0..el.n_basis() {
            for j in 0..el.n_basis() {
                let v = el.eval_basis(i, el.node_barycentric(j)).0;
                worst_basis = worst_basis.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
    }
    out.push(check(format!("partition of unity and Kronecker property, k=1..3: worst {worst_basis:.2e} <= 1e-13"), worst_basis <= 1e-13));

    // 2x2 unit square, phi = x - 0.51: the right column is cut, the left inside
    let mesh = Arc::new(BackgroundMesh::new(BoundingBox::unit_square(), 2, 2).unwrap());
    let field = LevelSetField::interpolate(&phifem::AnalyticField::new(|p| p[0] - 0.51), mesh.clone(), 1).unwrap();
    let domain = ActiveDomain::classify(&field).unwrap();
    let cut = [2, 3, 6, 7];
    let expected_ghost: Vec<usize> = (0..mesh.facets().len())
        .filter(|&e| mesh.facets()[e].is_interior() && mesh.facets()[e].triangles.iter().any(|t| cut.contains(t)))
        .collect();
    let oracle = domain.active_triangles() == [0, 1, 2, 3, 4, 5, 6, 7]
        && domain.cut_triangles() == cut
        && domain.ghost_facets() == expected_ghost.as_slice()
        && expected_ghost.len() == 5;
    out.push(check("classification hand oracle on the 2x2 mesh", oracle));

    for (n, k) in [(10, 1), (20, 1), (40, 1), (10, 2), (20, 2)] {
        let (a, dofs) = circle_system(n, k, Terms::ALL);
        let est = estimate_condition_number(&a, &ConditionOptions::default()).map(|e| e.kappa);
        let svd = dense_condition_number(&a);
        match (est, svd) {
            (Ok(e), Ok(s)) => out.push(check(
                format!("kappa n={n} k={k} ({dofs} dofs): power {e:.2} vs svd {s:.2}"),
                dofs <= 2000 && ((e - s) / s).abs() <= 0.05,
            )),
            _ => out.push(check(format!("kappa n={n} k={k} failed"), false)),
        }
    }

    let cfg = config(CaseId::Circle, 1, 20.0, 10, 3);
    let (a, b) = (csv_string(&run_case(&cfg)), csv_string(&run_case(&cfg)));
    let (c, d) = (csv_string(&conditioning_study(&cfg)), csv_string(&conditioning_study(&cfg)));
    out.push(check("byte-identical CSV across repeated runs", a == b && c == d));
    out
}

fn rectangle_orders() -> Vec<Check> {
    let p1 = run_case(&config(CaseId::Rectangle, 1, 20.0, 40, 3));
    let p2 = run_case(&config(CaseId::Rectangle, 2, 20.0, 20, 3));
    vec![
        all_ok("k=1", &p1),
        all_ok("k=2", &p2),
        in_range("k=1 finest-pair H1 eoc", p1.last().and_then(|r| r.eoc_h1), 0.7, 1.3),
        in_range("k=2 finest-pair L2 eoc", p2.last().and_then(|r| r.eoc_l2), 2.3, 3.4),
    ]
}

fn main() {
    let criteria: [(&str, fn() -> Vec<Check>); 7] = [
        ("convergence orders, circle, sigma=20", convergence_orders),
        ("absolute errors at h=sqrt2/40", absolute_errors),
        ("ghost penalty necessity", stabilization_necessity),
        ("conditioning", conditioning),
        ("sigma robustness", sigma_robustness),
        ("property suite", property_suite),
        ("rectangle orders against finer reference", rectangle_orders),
    ];
    let results: Vec<Vec<Check>> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| vec![check("panicked", false)])).collect()
    });

    let mut passed = 0;
    for (i, ((name, _), checks)) in criteria.iter().zip(&results).enumerate() {
        let ok = checks.iter().all(|c| c.ok);
        passed += ok as usize;
        println!("criterion {} ({name}): {}", i + 1, if ok { "PASS" } else { "FAIL" });
        for c in checks {
            println!("    [{}] {}", if c.ok { "ok" } else { "FAIL" }, c.label);
        }
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
