//! Mesh-refinement, sigma and conditioning studies producing CSV rows.

use std::io::{self, Write};
use std::sync::Arc;

use phifem::analysis::{compute_errors_against, compute_errors_on, eoc, ErrorReport, ProductSolution};
use phifem::assembly::{assemble_system, SparseSystem};
use phifem::linalg::{estimate_condition_number, solve, ConditionOptions, CsrMatrix, SolverOptions};
use phifem::{ActiveDomain, BackgroundMesh, BoundingBox, LevelSetField, PhiFemError};

use crate::cases::TestCase;
use crate::config::{CaseId, RunConfig, Task};

pub const CSV_HEADER: &str = "h,n_cells,dofs,k,l,sigma,err_l2_rel,err_h1_rel,eoc_l2,eoc_h1,kappa,status";

/// Relative residual required of every linear solve. Sparse LU on the
/// finest meshes bottoms out near 1e-12 from rounding alone.
pub const SOLVER_TOL: f64 = 1e-10;

/// Refinement levels between the finest mesh and the reference solution for
/// cases without a closed-form solution.
pub const REFERENCE_LEVELS: usize = 2;

/// One CSV row. `status` is `ok`, an error name, or `loglog-slope` for the
/// conditioning summary row, whose slope sits in the `kappa` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub h: Option<f64>,
    pub n_cells: Option<usize>,
    pub dofs: Option<usize>,
    pub k: usize,
    pub l: usize,
    pub sigma: f64,
    pub err_l2_rel: Option<f64>,
    pub err_h1_rel: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub eoc_h1: Option<f64>,
    pub kappa: Option<f64>,
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == "ok" || self.status == "loglog-slope"
    }

    fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            opt(&self.h),
            opt(&self.n_cells),
            opt(&self.dofs),
            self.k,
            self.l,
            self.sigma,
            opt(&self.err_l2_rel),
            opt(&self.err_h1_rel),
            opt(&self.eoc_l2),
            opt(&self.eoc_h1),
            opt(&self.kappa),
            self.status
        )
    }
}

pub fn write_csv<W: Write>(rows: &[Row], mut w: W) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Discrete problem and solution on one mesh.
pub struct Level {
    pub n: usize,
    pub domain: ActiveDomain,
    pub system: SparseSystem,
    pub solution: ProductSolution,
}

/// Builds, assembles and solves the case on an `n × n` background mesh.
pub fn solve_level(case: &TestCase, bbox: BoundingBox, n: usize, k: usize, l: usize, sigma: f64) -> Result<Level, PhiFemError> {
    let system = assemble_level(case, bbox, n, k, l, sigma)?;
    let report = solve(&system.1.matrix, &system.1.rhs, &SolverOptions::with_tol(SOLVER_TOL))?;
    let (phi, system, domain) = (system.0, system.1, system.2);
    let solution = ProductSolution::new(phi, system.dofs.clone(), report.solution)?;
    Ok(Level { n, domain, system, solution })
}

fn assemble_level(
    case: &TestCase,
    bbox: BoundingBox,
    n: usize,
    k: usize,
    l: usize,
    sigma: f64,
) -> Result<(LevelSetField, SparseSystem, ActiveDomain), PhiFemError> {
    let mesh = Arc::new(BackgroundMesh::new(bbox, n, n)?);
    let phi = LevelSetField::interpolate(&case.phi, mesh, l)?;
    let domain = ActiveDomain::classify(&phi)?;
    let system = assemble_system(&domain, &phi, &case.f, k, sigma)?;
    Ok((phi, system, domain))
}

/// Errors of a level against the case's exact solution, or against a finer
/// discrete reference on the uncut active triangles.
fn level_errors(case: &TestCase, level: &Level, reference: Option<&ProductSolution>) -> Result<ErrorReport, PhiFemError> {
    match (&case.exact, reference) {
        (Some(exact), _) => compute_errors_on(&level.solution, exact, level.domain.active_triangles()),
        (None, Some(r)) => compute_errors_against(&level.solution, &level.domain.interior_triangles(), |p| {
            Ok(r.eval_at_point(p).unwrap_or((0.0, [0.0, 0.0])))
        }),
        (None, None) => Err(PhiFemError::InvalidArgument("no exact or reference solution".into())),
    }
}

fn fill_eoc(rows: &mut [Row]) {
    for i in 1..rows.len() {
        let (a, b) = (&rows[i - 1], &rows[i]);
        if let (Some(l0), Some(l1), Some(h0), Some(h1)) = (a.err_l2_rel, b.err_l2_rel, a.err_h1_rel, b.err_h1_rel) {
            rows[i].eoc_l2 = Some(eoc(l0, l1));
            rows[i].eoc_h1 = Some(eoc(h0, h1));
        }
    }
}

fn kappa_of(matrix: &CsrMatrix) -> Result<f64, PhiFemError> {
    let e = estimate_condition_number(matrix, &ConditionOptions::default())?;
    if e.converged {
        Ok(e.kappa)
    } else {
        Err(PhiFemError::NoConvergence { iterations: e.iterations_max.max(e.iterations_min), residual: e.change_max.max(e.change_min) })
    }
}

fn bbox_of(cfg: &RunConfig, case: &TestCase) -> BoundingBox {
    cfg.bbox.map(Into::into).unwrap_or(case.default_box)
}

fn base_row(cfg: &RunConfig, sigma: f64) -> Row {
    Row {
        h: None,
        n_cells: None,
        dofs: None,
        k: cfg.k,
        l: cfg.l(),
        sigma,
        err_l2_rel: None,
        err_h1_rel: None,
        eoc_l2: None,
        eoc_h1: None,
        kappa: None,
        status: "ok".into(),
    }
}

/// Refinement study for one sigma: one row per level.
fn refinement_rows(cfg: &RunConfig, case: &TestCase, sigma: f64) -> Vec<Row> {
    let bbox = bbox_of(cfg, case);
    let (k, l) = (cfg.k, cfg.l());
    let sizes = cfg.level_sizes();
    let want_errors = cfg.has_task(Task::Errors);
    let reference = if want_errors && case.exact.is_none() {
        let n_ref = sizes.last().expect("levels >= 1") << REFERENCE_LEVELS;
        Some(solve_level(case, bbox, n_ref, k, l, sigma).map(|lv| lv.solution))
    } else {
        None
    };

    let mut rows: Vec<Row> = sizes
        .iter()
        .map(|&n| {
            let mut row = base_row(cfg, sigma);
            row.n_cells = Some(n);
            if let Ok(mesh) = BackgroundMesh::new(bbox, n, n) {
                row.h = Some(mesh.h());
            }
            let outcome = (|| -> Result<(), PhiFemError> {
                let level = solve_level(case, bbox, n, k, l, sigma)?;
                row.dofs = Some(level.system.n_dofs());
                if cfg.has_task(Task::Conditioning) {
                    row.kappa = Some(kappa_of(&level.system.matrix)?);
                }
                if want_errors {
                    let r = match &reference {
                        Some(Err(e)) => return Err(e.clone()),
                        Some(Ok(r)) => level_errors(case, &level, Some(r))?,
                        None => level_errors(case, &level, None)?,
                    };
                    row.err_l2_rel = Some(r.rel_l2);
                    row.err_h1_rel = Some(r.rel_h1_semi);
                }
                Ok(())
            })();
            if let Err(e) = outcome {
                row.status = e.name().to_string();
            }
            row
        })
        .collect();
    fill_eoc(&mut rows);
    rows
}

/// Errors (and κ when requested) on every level at the configured sigma.
pub fn run_case(cfg: &RunConfig) -> Vec<Row> {
    refinement_rows(cfg, &TestCase::get(cfg.case), cfg.sigma)
}

/// One refinement study per sigma in `cfg.sigmas`, concatenated.
pub fn sigma_sweep(cfg: &RunConfig) -> Vec<Row> {
    let case = TestCase::get(cfg.case);
    cfg.sigmas.iter().flat_map(|&s| refinement_rows(cfg, &case, s)).collect()
}

/// κ on every level plus a least-squares log-log slope row.
pub fn conditioning_study(cfg: &RunConfig) -> Vec<Row> {
    conditioning_study_with(cfg, |n| {
        let case = TestCase::get(cfg.case);
        let (_, system, _) = assemble_level(&case, bbox_of(cfg, &case), n, cfg.k, cfg.l(), cfg.sigma)?;
        let h = system.h;
        Ok((h, system.matrix))
    })
}

/// Conditioning study with the matrix of each level supplied by `matrix_of(n) -> (h, A)`.
pub fn conditioning_study_with(
    cfg: &RunConfig,
    mut matrix_of: impl FnMut(usize) -> Result<(f64, CsrMatrix), PhiFemError>,
) -> Vec<Row> {
    let mut rows: Vec<Row> = cfg
        .level_sizes()
        .into_iter()
        .map(|n| {
            let mut row = base_row(cfg, cfg.sigma);
            row.n_cells = Some(n);
            match matrix_of(n).and_then(|(h, a)| {
                row.h = Some(h);
                row.dofs = Some(a.n_rows());
                kappa_of(&a)
            }) {
                Ok(kappa) => row.kappa = Some(kappa),
                Err(e) => row.status = e.name().to_string(),
            }
            row
        })
        .collect();
    let points: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| Some((r.h?.ln(), r.kappa?.ln()))).collect();
    if points.len() >= 2 {
        let mut summary = base_row(cfg, cfg.sigma);
        summary.kappa = Some(loglog_slope(&points));
        summary.status = "loglog-slope".into();
        rows.push(summary);
    }
    rows
}

/// Least-squares slope of `y` against `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Default background box of a case.
pub fn default_box(case: CaseId) -> BoundingBox {
    TestCase::get(case).default_box
}
