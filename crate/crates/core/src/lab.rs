//! Search and verification campaigns: neutral-parameter root finding, the
//! shear infeasibility sweep, the rigidity experiment for perturbed shapes,
//! and numerical checks of the Cauchy transform machinery.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use argmin::core::{CostFunction, Error as ArgminError, Executor};
use argmin::solver::brent::{BrentOpt, BrentRoot};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bem::{
    default_gap_radii, neutrality_gap, solve_transmission, trig_upsample, BemError,
    TransmissionProblem,
};
use crate::elasticity::{
    far_field, sample_annulus, sample_disk, solve_coated_disk_elasticity, verify_core_linearity,
    verify_shell_properties, CoreLinearityReport, ElasticityError, FarFieldReport,
    LaurentPotentials, ShellReport, DEFAULT_ORDER,
};
use crate::model::{
    check_hypotheses, neutrality_constants, CoatedDisks, ElasticPhase, HypothesisReport,
    ModelError, NeutralityConstants, Phases, Region, SmoothCurve, UniformLoad,
};

/// Samples taken across a bracket before root finding.
pub const SCAN_SAMPLES: usize = 64;
/// Required `|objective|` at an accepted root.
pub const ROOT_TOL: f64 = 1e-12;
/// Relative tolerance when comparing against frozen floors.
pub const FLOOR_REL_TOL: f64 = 0.2;
/// Environment variable overriding the frozen-floor fixtures path.
pub const FIXTURES_ENV: &str = "NEUTRAL_LAME_FIXTURES";

#[derive(Debug, Error)]
pub enum LabError {
    #[error("objective does not change sign on the scanned bracket")]
    NoSignChange { scan: Vec<(f64, f64)> },
    #[error("root {value} of {parameter:?} is not physical")]
    NonPhysicalRoot {
        parameter: FreeParameter,
        value: f64,
    },
    #[error("objective is identically zero")]
    DegenerateObjective,
    #[error("evaluation point is {distance:e} from the curve, need at least {required:e}")]
    TooCloseToCurve { distance: f64, required: f64 },
    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),
    #[error("root finder failed: {0}")]
    Solver(String),
    #[error("fixtures: {0}")]
    Fixture(String),
    #[error(transparent)]
    Elasticity(#[from] ElasticityError),
    #[error(transparent)]
    Bem(#[from] BemError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Concentric coated disks with their phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskTemplate {
    pub geometry: CoatedDisks,
    pub phases: Phases<ElasticPhase>,
}

impl DiskTemplate {
    /// `μc=2, κc=1, μs=1, κs=2, μm=1, κm=3, r1=1, r2=2`.
    pub fn standard() -> Self {
        let phase = |mu, kappa| ElasticPhase::new(mu, kappa).expect("positive moduli");
        Self {
            geometry: CoatedDisks::centered(1.0, 2.0).expect("r1 < r2"),
            phases: Phases::new(phase(2.0, 1.0), phase(1.0, 2.0), phase(1.0, 3.0)),
        }
    }
}

/// Scalar that a campaign varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeParameter {
    MuCore,
    KappaCore,
    MuShell,
    KappaShell,
    MuMatrix,
    KappaMatrix,
    /// `r1` with `r2` fixed.
    R1,
    /// `r1 / r2` with `r2` fixed.
    RadiusRatio,
}

impl FreeParameter {
    pub fn name(&self) -> &'static str {
        match self {
            Self::MuCore => "mu_c",
            Self::KappaCore => "kappa_c",
            Self::MuShell => "mu_s",
            Self::KappaShell => "kappa_s",
            Self::MuMatrix => "mu_m",
            Self::KappaMatrix => "kappa_m",
            Self::R1 => "r1",
            Self::RadiusRatio => "r1_over_r2",
        }
    }

    pub fn get(&self, t: &DiskTemplate) -> f64 {
        let p = &t.phases;
        match self {
            Self::MuCore => p.core.mu(),
            Self::KappaCore => p.core.kappa(),
            Self::MuShell => p.shell.mu(),
            Self::KappaShell => p.shell.kappa(),
            Self::MuMatrix => p.matrix.mu(),
            Self::KappaMatrix => p.matrix.kappa(),
            Self::R1 => t.geometry.r1(),
            Self::RadiusRatio => t.geometry.r1() / t.geometry.r2(),
        }
    }

    pub fn apply(&self, t: &DiskTemplate, value: f64) -> Result<DiskTemplate, ModelError> {
        let mut out = *t;
        let p = &mut out.phases;
        match self {
            Self::MuCore => p.core = p.core.with_mu(value)?,
            Self::KappaCore => p.core = p.core.with_kappa(value)?,
            Self::MuShell => p.shell = p.shell.with_mu(value)?,
            Self::KappaShell => p.shell = p.shell.with_kappa(value)?,
            Self::MuMatrix => p.matrix = p.matrix.with_mu(value)?,
            Self::KappaMatrix => p.matrix = p.matrix.with_kappa(value)?,
            Self::R1 => {
                out.geometry = CoatedDisks::new(value, t.geometry.r2(), t.geometry.center())?
            }
            Self::RadiusRatio => {
                let r2 = t.geometry.r2();
                out.geometry = CoatedDisks::new(value * r2, r2, t.geometry.center())?
            }
        }
        Ok(out)
    }

    fn is_radius(&self) -> bool {
        matches!(self, Self::R1 | Self::RadiusRatio)
    }
}

struct Scalar<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Scalar<F> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> Result<f64, ArgminError> {
        Ok((self.0)(*x))
    }
}

/// Brent root on a bracket whose endpoints have opposite signs.
pub fn brent_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64, LabError> {
    let res = Executor::new(Scalar(f), BrentRoot::new(lo, hi, 0.0))
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(|e| LabError::Solver(e.to_string()))?;
    res.state
        .best_param
        .ok_or_else(|| LabError::Solver("no iterate".into()))
}

/// Brent minimizer on `[lo, hi]`; returns `(argmin, min)`.
pub fn brent_minimize(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    rel: f64,
    abs: f64,
) -> Result<(f64, f64), LabError> {
    let res = Executor::new(Scalar(f), BrentOpt::new(lo, hi).set_tolerance(rel, abs))
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(|e| LabError::Solver(e.to_string()))?;
    let x = res
        .state
        .best_param
        .ok_or_else(|| LabError::Solver("no iterate".into()))?;
    Ok((x, res.state.best_cost))
}

/// Scan points across `[lo, hi]`, geometric when both ends are positive.
pub fn scan_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let geometric = lo > 0.0 && hi > 0.0 && hi / lo > 10.0;
    (0..count)
        .map(|i| {
            let t = i as f64 / (count - 1) as f64;
            if geometric {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect()
}

/// Root of a scalar objective after a mandatory pre-scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootFindTask {
    pub parameter: FreeParameter,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    /// Scan the bracket for a sign change instead of requiring one at the
    /// endpoints.
    pub scan_first: bool,
}

impl RootFindTask {
    /// Scan-first task over `[v/100, 100 v]`, `v` the template value; radius
    /// parameters scan the open interval they are valid on.
    pub fn around(template: &DiskTemplate, parameter: FreeParameter) -> Self {
        let v = parameter.get(template);
        let bracket = match parameter {
            FreeParameter::R1 => (
                1e-3 * template.geometry.r2(),
                0.999 * template.geometry.r2(),
            ),
            FreeParameter::RadiusRatio => (1e-3, 0.999),
            _ => (v / 100.0, v * 100.0),
        };
        Self {
            parameter,
            bracket,
            tolerance: ROOT_TOL,
            scan_first: true,
        }
    }
}

/// `Re(c)/r2²` for the `z/|z|²` coefficient `c` of `u − h` under the bulk
/// load: the exterior bulk perturbation.
pub fn bulk_objective(template: &DiskTemplate) -> Result<f64, LabError> {
    let p = solve_coated_disk_elasticity(
        &template.geometry,
        &template.phases,
        &UniformLoad::bulk(),
        DEFAULT_ORDER,
    )?;
    let b = p.psi_coefficient(Region::Matrix, -1);
    let c = -b.conj() / (2.0 * template.phases.matrix.mu());
    Ok(c.re / template.geometry.r2().powi(2))
}

/// Evidence that a found root is bulk-neutral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralCertificate {
    pub far_field: FarFieldReport,
    /// `max(|a1 − κm|, |a_n|, |b_n|)` over the other matrix coefficients.
    pub matrix_potential_residual: f64,
    pub shell: ShellReport,
    pub core: CoreLinearityReport,
    pub constants: NeutralityConstants,
    pub hypotheses: HypothesisReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutralRoot {
    pub parameter: FreeParameter,
    pub value: f64,
    pub objective: f64,
    pub template: DiskTemplate,
    pub scan: Vec<(f64, f64)>,
    pub certificate: NeutralCertificate,
}

/// Shell and core sample sizes of the certificate.
pub const CERTIFICATE_POINTS: usize = 200;

/// Re-solves at `template` and collects the neutrality evidence.
pub fn certify_bulk(template: &DiskTemplate) -> Result<NeutralCertificate, LabError> {
    let g = &template.geometry;
    let p = solve_coated_disk_elasticity(g, &template.phases, &UniformLoad::bulk(), DEFAULT_ORDER)?;
    let radii = crate::elasticity::default_radii(g);
    let far = far_field(&p, radii)?;
    let constants = neutrality_constants(&template.phases);
    let shell = verify_shell_properties(
        &p,
        &constants,
        &sample_annulus(g.r1(), g.r2(), CERTIFICATE_POINTS, 11),
    )?;
    let core = verify_core_linearity(&p, &sample_disk(g.r1(), CERTIFICATE_POINTS, 12))?;
    Ok(NeutralCertificate {
        far_field: far,
        matrix_potential_residual: matrix_potential_residual(&p),
        shell,
        core,
        constants,
        hypotheses: check_hypotheses(&template.phases),
    })
}

fn matrix_potential_residual(p: &LaurentPotentials) -> f64 {
    let order = p.order() as i32;
    let km = p.phases().matrix.kappa();
    let mut worst = (p.phi_coefficient(Region::Matrix, 1) - km).norm();
    for n in -order..=1 {
        if n != 1 {
            worst = worst.max(p.phi_coefficient(Region::Matrix, n).norm());
        }
        worst = worst.max(p.psi_coefficient(Region::Matrix, n).norm());
    }
    worst
}

/// Root, objective at the root, and the scan table.
type ScanSolution = (f64, f64, Vec<(f64, f64)>);

/// Scans, brackets and solves `objective(parameter) = 0`.
fn scan_and_solve(
    task: &RootFindTask,
    objective: impl Fn(f64) -> Result<f64, LabError> + Sync,
) -> Result<ScanSolution, LabError> {
    let (lo, hi) = task.bracket;
    let xs = if task.scan_first {
        scan_points(lo, hi, SCAN_SAMPLES)
    } else {
        vec![lo, hi]
    };
    let scan = xs
        .par_iter()
        .map(|&x| objective(x).map(|f| (x, f)))
        .collect::<Result<Vec<_>, _>>()?;
    let scale = scan.iter().map(|(_, f)| f.abs()).fold(0.0, f64::max);
    if scale <= 1e-14 {
        return Err(LabError::DegenerateObjective);
    }
    let Some(k) = scan.windows(2).position(|w| w[0].1 * w[1].1 <= 0.0) else {
        return Err(LabError::NoSignChange { scan });
    };
    let (a, b) = (scan[k].0, scan[k + 1].0);
    let root = if scan[k].1 == 0.0 {
        a
    } else if scan[k + 1].1 == 0.0 {
        b
    } else {
        let f = |x: f64| objective(x).unwrap_or(f64::NAN);
        brent_root(f, a, b)?
    };
    let value = objective(root)?;
    if !(value.abs() <= task.tolerance) {
        return Err(LabError::Solver(format!(
            "|objective| = {:e} at the root exceeds {:e}",
            value.abs(),
            task.tolerance
        )));
    }
    Ok((root, value, scan))
}

/// Finds a bulk-neutral value of `task.parameter` for the template.
pub fn find_neutral_bulk(
    template: &DiskTemplate,
    task: &RootFindTask,
) -> Result<NeutralRoot, LabError> {
    if template.phases.is_homogeneous() {
        return Err(LabError::DegenerateObjective);
    }
    let objective = |x: f64| bulk_objective(&task.parameter.apply(template, x)?);
    let (value, objective_value, scan) = scan_and_solve(task, objective)?;
    let invalid = !(value > 0.0) || (task.parameter.is_radius() && value >= template.geometry.r2());
    let at_root = match task.parameter.apply(template, value) {
        Ok(t) if !invalid => t,
        _ => {
            return Err(LabError::NonPhysicalRoot {
                parameter: task.parameter,
                value,
            })
        }
    };
    Ok(NeutralRoot {
        parameter: task.parameter,
        value,
        objective: objective_value,
        template: at_root,
        scan,
        certificate: certify_bulk(&at_root)?,
    })
}

/// One axis of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: FreeParameter,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Geometric instead of linear spacing.
    pub log: bool,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                if self.log {
                    self.lo * (self.hi / self.lo).powf(t)
                } else {
                    self.lo + (self.hi - self.lo) * t
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<SweepAxis>,
    pub template: DiskTemplate,
    pub seed: u64,
}

impl SweepGrid {
    /// `r1/r2 ∈ [0.1, 0.9]`, `μc, μm ∈ [0.1, 10]` (geometric), 20 values each,
    /// on the standard template.
    pub fn default_shear() -> Self {
        Self {
            axes: vec![
                SweepAxis {
                    parameter: FreeParameter::RadiusRatio,
                    lo: 0.1,
                    hi: 0.9,
                    count: 20,
                    log: false,
                },
                SweepAxis {
                    parameter: FreeParameter::MuCore,
                    lo: 0.1,
                    hi: 10.0,
                    count: 20,
                    log: true,
                },
                SweepAxis {
                    parameter: FreeParameter::MuMatrix,
                    lo: 0.1,
                    hi: 10.0,
                    count: 20,
                    log: true,
                },
            ],
            template: DiskTemplate::standard(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.axes.is_empty() {
            return Err(LabError::InvalidGrid("no axes".into()));
        }
        for a in &self.axes {
            if a.count < 2 {
                return Err(LabError::InvalidGrid(format!(
                    "{} has fewer than 2 values",
                    a.parameter.name()
                )));
            }
            let ok = match a.parameter {
                FreeParameter::RadiusRatio => a.lo > 0.0 && a.hi < 1.0 && a.lo < a.hi,
                FreeParameter::R1 => {
                    a.lo > 0.0 && a.hi < self.template.geometry.r2() && a.lo < a.hi
                }
                _ => a.lo > 0.0 && a.lo < a.hi,
            };
            if !ok {
                return Err(LabError::InvalidGrid(format!(
                    "{} range is not physical",
                    a.parameter.name()
                )));
            }
        }
        Ok(())
    }

    /// Grid points in lexicographic axis order (last axis fastest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(SweepAxis::values).collect();
        let total: usize = values.iter().map(Vec::len).product();
        (0..total)
            .map(|mut idx| {
                let mut p = vec![0.0; values.len()];
                for (k, v) in values.iter().enumerate().rev() {
                    p[k] = v[idx % v.len()];
                    idx /= v.len();
                }
                p
            })
            .collect()
    }

    pub fn instantiate(&self, point: &[f64]) -> Result<DiskTemplate, LabError> {
        let mut t = self.template;
        for (a, &v) in self.axes.iter().zip(point) {
            t = a.parameter.apply(&t, v)?;
        }
        Ok(t)
    }
}

/// `|x|⁻¹` and `|x|⁻³` content of `u − h` under the shear load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShearMultipoles {
    pub c1: Complex64,
    pub c3: Complex64,
}

pub fn shear_multipoles(template: &DiskTemplate) -> Result<ShearMultipoles, LabError> {
    let p = solve_coated_disk_elasticity(
        &template.geometry,
        &template.phases,
        &UniformLoad::shear(),
        DEFAULT_ORDER,
    )?;
    let r = far_field(&p, crate::elasticity::default_radii(&template.geometry))?;
    Ok(ShearMultipoles { c1: r.c1, c3: r.c3 })
}

/// `c1` projected on the load direction `q`, normalized by `r2²`.
fn signed_shear_c1(template: &DiskTemplate) -> Result<f64, LabError> {
    let (_, q) = UniformLoad::shear().complex_form();
    let m = shear_multipoles(template)?;
    Ok((m.c1 * q.conj()).re / q.norm() / template.geometry.r2().powi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub c1: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCurvePoint {
    pub slice: f64,
    pub root: f64,
    pub c1: f64,
    pub c3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearSweepReport {
    pub axes: Vec<String>,
    pub rows: Vec<SweepRow>,
    /// `min over the grid of max(|c1|, |c3|)`.
    pub min_max: f64,
    pub argmin: Vec<f64>,
    /// Points where `c1 = 0` for a root in the last axis, one search per
    /// value of the first axis (other axes at their template values).
    pub root_curve: Vec<RootCurvePoint>,
    /// `min |c3|` along the root curve.
    pub root_curve_min_c3: f64,
}

/// Evaluates `(|c1|, |c3|)` under the shear load at every grid point and
/// traces the `c1 = 0` curve.
pub fn shear_infeasibility_sweep(grid: &SweepGrid) -> Result<ShearSweepReport, LabError> {
    grid.validate()?;
    let points = grid.points();
    let rows = points
        .par_iter()
        .map(|p| {
            let t = grid.instantiate(p)?;
            if t.phases.core == t.phases.shell {
                return Err(LabError::InvalidGrid(
                    "core and shell coincide at a grid point".into(),
                ));
            }
            let m = shear_multipoles(&t)?;
            Ok(SweepRow {
                values: p.clone(),
                c1: m.c1.norm(),
                c3: m.c3.norm(),
            })
        })
        .collect::<Result<Vec<_>, LabError>>()?;
    let mut best = (f64::INFINITY, Vec::new());
    for r in &rows {
        let v = r.c1.max(r.c3);
        if v < best.0 {
            best = (v, r.values.clone());
        }
    }

    let mut root_curve = Vec::new();
    if grid.axes.len() >= 2 {
        let (slice_axis, root_axis) = (grid.axes[0], grid.axes[grid.axes.len() - 1]);
        for s in slice_axis.values() {
            let base = slice_axis.parameter.apply(&grid.template, s)?;
            let task = RootFindTask {
                parameter: root_axis.parameter,
                bracket: (root_axis.lo / 100.0, root_axis.hi * 100.0),
                tolerance: ROOT_TOL,
                scan_first: true,
            };
            let objective = |x: f64| signed_shear_c1(&root_axis.parameter.apply(&base, x)?);
            match scan_and_solve(&task, objective) {
                Ok((root, _, _)) => {
                    let m = shear_multipoles(&root_axis.parameter.apply(&base, root)?)?;
                    root_curve.push(RootCurvePoint {
                        slice: s,
                        root,
                        c1: m.c1.norm(),
                        c3: m.c3.norm(),
                    });
                }
                Err(LabError::NoSignChange { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let root_curve_min_c3 = root_curve
        .iter()
        .map(|p| p.c3)
        .fold(f64::INFINITY, f64::min);
    Ok(ShearSweepReport {
        axes: grid
            .axes
            .iter()
            .map(|a| a.parameter.name().to_string())
            .collect(),
        rows,
        min_max: best.0,
        argmin: best.1,
        root_curve,
        root_curve_min_c3,
    })
}

/// Shape perturbation of the concentric template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ShapeFamily {
    /// `r2 (1 + ε cos mθ)` for ∂Ω.
    Outer { m: u32 },
    /// `r1 (1 + ε cos mθ)` for ∂D.
    Inner { m: u32 },
    /// Core translated by `ε r2` along the x axis.
    EccentricCore,
}

impl ShapeFamily {
    pub fn label(&self) -> String {
        match self {
            Self::Outer { m } => format!("outer_m{m}"),
            Self::Inner { m } => format!("inner_m{m}"),
            Self::EccentricCore => "eccentric".into(),
        }
    }

    pub fn curves(
        &self,
        geometry: &CoatedDisks,
        eps: f64,
    ) -> Result<(SmoothCurve, SmoothCurve), ModelError> {
        let c = geometry.center();
        let (r1, r2) = (geometry.r1(), geometry.r2());
        Ok(match *self {
            Self::Outer { m } => (
                SmoothCurve::circle(c, r1),
                SmoothCurve::radial_perturbation(c, r2, eps, m)?,
            ),
            Self::Inner { m } => (
                SmoothCurve::radial_perturbation(c, r1, eps, m)?,
                SmoothCurve::circle(c, r2),
            ),
            Self::EccentricCore => (
                SmoothCurve::circle(c + Complex64::new(eps * r2, 0.0), r1),
                SmoothCurve::circle(c, r2),
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityConfig {
    pub template: DiskTemplate,
    pub families: Vec<ShapeFamily>,
    pub epsilons: Vec<f64>,
    pub nodes: usize,
    /// Parameter re-optimized for every shape.
    pub parameter: FreeParameter,
    /// Search interval as factors of the concentric neutral value.
    pub search: (f64, f64),
}

impl Default for RigidityConfig {
    fn default() -> Self {
        Self {
            template: DiskTemplate::standard(),
            families: vec![
                ShapeFamily::Outer { m: 2 },
                ShapeFamily::Outer { m: 3 },
                ShapeFamily::EccentricCore,
            ],
            epsilons: vec![0.0, 0.01, 0.05],
            nodes: 128,
            parameter: FreeParameter::KappaMatrix,
            search: (0.8, 1.25),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityEntry {
    pub family: String,
    pub epsilon: f64,
    /// Minimizing value of the free parameter.
    pub value: f64,
    /// Smallest gap found.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub parameter: FreeParameter,
    /// Bulk-neutral value for the concentric template (series root).
    pub neutral_value: f64,
    /// BEM gap of the concentric template at `neutral_value`.
    pub neutral_gap: f64,
    pub entries: Vec<RigidityEntry>,
}

impl RigidityReport {
    pub fn floors(&self, family: &str) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter(|e| e.family == family)
            .map(|e| (e.epsilon, e.floor))
            .collect()
    }

    /// Floors strictly increase with ε and every nonzero ε exceeds ten times
    /// the ε = 0 floor.
    pub fn family_is_rigid(&self, family: &str) -> bool {
        let mut f = self.floors(family);
        f.sort_by(|a, b| a.0.total_cmp(&b.0));
        let base = f.iter().find(|(e, _)| *e == 0.0).map(|(_, v)| *v);
        let increasing = f.windows(2).all(|w| w[1].1 > w[0].1);
        increasing
            && base.is_some_and(|b| {
                f.iter()
                    .filter(|(e, _)| *e > 0.0)
                    .all(|(_, v)| *v > 10.0 * b)
            })
    }
}

/// BEM gap on the default radii for a shape with the given template.
pub fn shape_gap(
    template: &DiskTemplate,
    inner: &SmoothCurve,
    outer: &SmoothCurve,
    nodes: usize,
) -> Result<f64, LabError> {
    let problem = TransmissionProblem {
        inner: inner.clone(),
        outer: outer.clone(),
        phases: template.phases,
        load: UniformLoad::bulk(),
        nodes,
    };
    let sol = solve_transmission(&problem)?;
    Ok(neutrality_gap(&sol, default_gap_radii(&problem))?.gap)
}

/// Minimizes the gap over `config.parameter` for every family and ε.
pub fn rigidity_experiment(config: &RigidityConfig) -> Result<RigidityReport, LabError> {
    let task = RootFindTask::around(&config.template, config.parameter);
    let neutral = find_neutral_bulk(&config.template, &task)?;
    let v0 = neutral.value;
    let (inner0, outer0) = config.template.geometry.to_curves();
    let neutral_gap = shape_gap(&neutral.template, &inner0, &outer0, config.nodes)?;

    let minimize = |inner: &SmoothCurve, outer: &SmoothCurve| -> Result<(f64, f64), LabError> {
        let f = |x: f64| match config.parameter.apply(&config.template, x) {
            Ok(t) => shape_gap(&t, inner, outer, config.nodes).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        };
        let (lo, hi) = (v0 * config.search.0, v0 * config.search.1);
        let (x, fx) = brent_minimize(f, lo, hi, 1e-10, 1e-12 * v0)?;
        // The neutral value is itself a candidate for the concentric shape.
        let at_neutral = f(v0);
        Ok(if at_neutral < fx {
            (v0, at_neutral)
        } else {
            (x, fx)
        })
    };

    let base = minimize(&inner0, &outer0)?;
    let mut entries = Vec::new();
    for family in &config.families {
        for &eps in &config.epsilons {
            let (value, floor) = if eps == 0.0 {
                base
            } else {
                let (inner, outer) = family.curves(&config.template.geometry, eps)?;
                minimize(&inner, &outer)?
            };
            entries.push(RigidityEntry {
                family: family.label(),
                epsilon: eps,
                value,
                floor,
            });
        }
    }
    Ok(RigidityReport {
        parameter: config.parameter,
        neutral_value: v0,
        neutral_gap,
        entries,
    })
}

/// Boundary values sampled at the `values.len()` equispaced nodes of `curve`.
fn upsampled(
    curve: &SmoothCurve,
    values: &[Complex64],
    factor: usize,
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let n = values.len() * factor;
    let nodes = curve.nodes(n);
    let g = trig_upsample(values, n);
    (nodes.points, nodes.d1, g)
}

fn cauchy_sum(points: &[Complex64], d1: &[Complex64], g: &[Complex64], w: Complex64) -> Complex64 {
    let h = 2.0 * PI / points.len() as f64;
    let s: Complex64 = points
        .iter()
        .zip(d1)
        .zip(g)
        .map(|((z, dz), gv)| gv * dz / (z - w))
        .sum();
    s * h / Complex64::new(0.0, 2.0 * PI)
}

/// Largest arc-length spacing of `n` nodes on `curve`.
fn node_spacing(curve: &SmoothCurve, n: usize) -> f64 {
    let nodes = curve.nodes(n);
    (0..n).map(|j| nodes.weight(j)).fold(0.0, f64::max)
}

/// `(1/2πi) ∫ g(z)/(z − w) dz` by the trapezoidal rule, `g` sampled at the
/// nodes of `curve`. `w` must be at least five node spacings off the curve.
pub fn cauchy_transform(
    g: &[Complex64],
    curve: &SmoothCurve,
    w: Complex64,
) -> Result<Complex64, LabError> {
    let required = 5.0 * node_spacing(curve, g.len());
    let distance = curve.distance_to(w);
    if distance < required {
        return Err(LabError::TooCloseToCurve { distance, required });
    }
    let nodes = curve.nodes(g.len());
    Ok(cauchy_sum(&nodes.points, &nodes.d1, g, w))
}

/// Trigonometric upsampling used for one-sided limits.
pub const PLEMELJ_UPSAMPLING: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlemeljReport {
    /// Limits from inside the curve at each node.
    pub interior: Vec<Complex64>,
    /// Limits from outside.
    pub exterior: Vec<Complex64>,
    /// `|C[g]− − C[g]+ − g|` per node.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// One-sided limits of the Cauchy transform at every node, by quadratic
/// extrapolation from normal offsets `h, 2h, 4h` with `h` one eighth of the
/// node spacing, on a 64× trigonometric upsampling of `g`.
pub fn plemelj_jump_check(g: &[Complex64], curve: &SmoothCurve) -> PlemeljReport {
    let n = g.len();
    let coarse = curve.nodes(n);
    let (points, d1, fine) = upsampled(curve, g, PLEMELJ_UPSAMPLING);
    let limit = |j: usize, sign: f64| -> Complex64 {
        let h = coarse.weight(j) / 8.0;
        let at = |d: f64| {
            cauchy_sum(
                &points,
                &d1,
                &fine,
                coarse.points[j] + coarse.normal[j] * (sign * d),
            )
        };
        (at(h) * 8.0 - at(2.0 * h) * 6.0 + at(4.0 * h)) / 3.0
    };
    let (interior, exterior): (Vec<_>, Vec<_>) = (0..n)
        .into_par_iter()
        .map(|j| (limit(j, -1.0), limit(j, 1.0)))
        .unzip();
    let residuals: Vec<f64> = (0..n)
        .map(|j| (interior[j] - exterior[j] - g[j]).norm())
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    PlemeljReport {
        interior,
        exterior,
        residuals,
        max_residual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionTest {
    pub analytic: bool,
    /// Largest probe integral relative to `∫|g| |dz|`.
    pub max_probe: f64,
    /// `(w, C[g](w))` at interior points: the candidate extension `G`.
    pub witness: Vec<(Complex64, Complex64)>,
}

/// Relative tolerance on the probe integrals.
pub const EXTENSION_TOL: f64 = 1e-8;

/// Decides whether `g` extends analytically into the curve's interior by
/// testing `∫ g f′ dz = 0` for `f′ = zⁿ` (`n < probes`) and `f′ = 1/(z − w)`
/// with `w` on a circle outside the curve.
pub fn analytic_extension_test(
    g: &[Complex64],
    curve: &SmoothCurve,
    probes: usize,
) -> ExtensionTest {
    let n = g.len();
    let nodes = curve.nodes(n);
    let h = 2.0 * PI / n as f64;
    let centroid: Complex64 = nodes.points.iter().sum::<Complex64>() / n as f64;
    let reach = curve.max_radius_about(centroid);
    let scale: f64 = (0..n)
        .map(|j| g[j].norm() * nodes.speed[j] * h)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let integral = |f: &dyn Fn(Complex64) -> Complex64| -> Complex64 {
        (0..n)
            .map(|j| g[j] * f(nodes.points[j] - centroid) * nodes.d1[j] * h)
            .sum()
    };
    let mut max_probe = 0.0f64;
    for k in 0..probes {
        let v = integral(&|z| (z / reach).powi(k as i32));
        max_probe = max_probe.max(v.norm() / scale);
    }
    for k in 0..8 {
        let w = Complex64::from_polar(1.5 * reach, 2.0 * PI * k as f64 / 8.0);
        let v = integral(&|z| reach / (z - w));
        max_probe = max_probe.max(v.norm() / scale);
    }
    let witness = (0..4)
        .map(|k| {
            let w = centroid
                + Complex64::from_polar(
                    0.3 * curve.min_radius_about(centroid),
                    PI * k as f64 / 2.0,
                );
            (w, cauchy_sum(&nodes.points, &nodes.d1, g, w))
        })
        .collect();
    ExtensionTest {
        analytic: max_probe < EXTENSION_TOL,
        max_probe,
        witness,
    }
}

/// `z·conj(φc′) + conj(ψc)` at `n` nodes of the core boundary.
pub fn core_trace(potentials: &LaurentPotentials, n: usize) -> (SmoothCurve, Vec<Complex64>) {
    let g = potentials.geometry();
    let curve = SmoothCurve::circle(g.center(), g.r1());
    let values = curve
        .nodes(n)
        .points
        .iter()
        .map(|&z| {
            z * potentials.phi(Region::Core, z, 1).conj()
                + potentials.psi(Region::Core, z, 0).conj()
        })
        .collect();
    (curve, values)
}

/// Measured strictly-positive floors with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenFloors {
    pub provenance: String,
    pub shear_min_max: f64,
    /// Family label to (ε label to floor).
    pub rigidity: BTreeMap<String, BTreeMap<String, f64>>,
}

impl FrozenFloors {
    pub fn rigidity_floor(&self, family: &str, eps: f64) -> Option<f64> {
        self.rigidity.get(family)?.get(&epsilon_key(eps)).copied()
    }
}

pub fn epsilon_key(eps: f64) -> String {
    format!("{eps}")
}

/// Fixtures path: the environment override, else the crate's bundled file.
pub fn fixtures_path() -> PathBuf {
    std::env::var_os(FIXTURES_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/floors.json"))
}

pub fn load_floors(path: &Path) -> Result<FrozenFloors, LabError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Fixture(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| LabError::Fixture(format!("{}: {e}", path.display())))
}

/// `|measured − frozen| ≤ 20% · frozen`.
pub fn matches_floor(measured: f64, frozen: f64) -> bool {
    (measured - frozen).abs() <= FLOOR_REL_TOL * frozen.abs()
}
