//! Command dispatch: each command maps a scenario to a record and tables.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use super::record::{Cell, ResultRecord, Status, Table};
use super::scenario::{Geometry, Material, Scenario};
use crate::bem::{
    check_divdiv_identity, check_divergence_identity, neutrality_gap, solve_transmission, BemError,
    KelvinKernel, TransmissionProblem, FD_STEP,
};
use crate::conductivity::{
    is_neutral, neutrality_residual, solve_disk_conductivity, solve_for_sigma_m,
    transmission_neutral_sigma_m, transmission_residual, ConductivityError, NEUTRALITY_TOL,
};
use crate::elasticity::{far_field, solve_coated_disk_elasticity, ElasticityError};
use crate::lab::{
    analytic_extension_test, certify_bulk, core_trace, epsilon_key, find_neutral_bulk, load_floors,
    matches_floor, plemelj_jump_check, rigidity_experiment, shear_infeasibility_sweep, LabError,
    RootFindTask, ROOT_TOL,
};
use crate::model::{Region, SmoothCurve, UniformLoad};

/// Tolerance for the kernel divergence identity.
pub const DIVGG_TOL: f64 = 1e-8;
/// Tolerance for the volume divergence identity.
pub const DIVDIV_TOL: f64 = 1e-3;
/// Tolerance for the Plemelj jump residual.
pub const PLEMELJ_TOL: f64 = 1e-6;
/// Random configurations in `verify-identities`.
pub const IDENTITY_SAMPLES: usize = 100;
/// Tolerance on a solved root's objective and on the bulk certificate.
pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveDisk,
    SolveBem,
    CheckNeutral,
    FindNeutral,
    ShearSweep,
    Rigidity,
    VerifyIdentities,
    PlemeljCheck,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Self::SolveDisk,
        Self::SolveBem,
        Self::CheckNeutral,
        Self::FindNeutral,
        Self::ShearSweep,
        Self::Rigidity,
        Self::VerifyIdentities,
        Self::PlemeljCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::SolveDisk => "solve-disk",
            Self::SolveBem => "solve-bem",
            Self::CheckNeutral => "check-neutral",
            Self::FindNeutral => "find-neutral",
            Self::ShearSweep => "shear-sweep",
            Self::Rigidity => "rigidity",
            Self::VerifyIdentities => "verify-identities",
            Self::PlemeljCheck => "plemelj-check",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CommandError {
    /// The scenario does not suit the command.
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Numerical(String),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Unsupported(_) => EXIT_VALIDATION,
            Self::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

macro_rules! numerical_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CommandError {
            fn from(e: $t) -> Self {
                Self::Numerical(e.to_string())
            }
        }
    )*};
}
numerical_from!(ElasticityError, BemError, ConductivityError, LabError);

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub timestamp: Option<u64>,
    /// Frozen floors; the bundled file when `None`.
    pub fixtures: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: ResultRecord,
    pub tables: Vec<Table>,
    pub exit_code: i32,
    /// Human-readable lines for stderr.
    pub diagnostics: Vec<String>,
}

struct Run {
    record: ResultRecord,
    tables: Vec<Table>,
    diagnostics: Vec<String>,
    /// Set when a check ran but did not meet its tolerance.
    failed: Vec<String>,
}

impl Run {
    fn note(&mut self, line: String) {
        self.diagnostics.push(line);
    }

    fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        self.record.put_checked(name, value, tolerance);
        if !(value.abs() <= tolerance) {
            self.failed
                .push(format!("{name} = {value:e} exceeds {tolerance:e}"));
        }
    }
}

/// Runs `command` on `scenario`. Failures become records with an error
/// status and a nonzero exit code.
pub fn run_command(command: Command, scenario: &Scenario, options: &RunOptions) -> RunOutcome {
    let mut run = Run {
        record: ResultRecord::new(command.name(), &scenario.digest(), options.timestamp),
        tables: Vec::new(),
        diagnostics: Vec::new(),
        failed: Vec::new(),
    };
    let result = match command {
        Command::SolveDisk => solve_disk(scenario, &mut run),
        Command::SolveBem => solve_bem(scenario, &mut run),
        Command::CheckNeutral => check_neutral(scenario, &mut run),
        Command::FindNeutral => find_neutral(scenario, &mut run),
        Command::ShearSweep => shear_sweep(scenario, options, &mut run),
        Command::Rigidity => rigidity(scenario, options, &mut run),
        Command::VerifyIdentities => verify_identities(scenario, &mut run),
        Command::PlemeljCheck => plemelj_check(scenario, &mut run),
    };
    let exit_code = match result {
        Ok(()) if run.failed.is_empty() => EXIT_OK,
        Ok(()) => {
            let message = run.failed.join("; ");
            run.record.status = Status::Error;
            run.record.error = Some(message.clone());
            run.note(message);
            EXIT_NUMERICAL
        }
        Err(e) => {
            run.record.status = Status::Error;
            run.record.error = Some(e.to_string());
            run.note(format!("{command}: {e}"));
            e.exit_code()
        }
    };
    RunOutcome {
        record: run.record,
        tables: run.tables,
        exit_code,
        diagnostics: run.diagnostics,
    }
}

fn need_template(
    scenario: &Scenario,
    command: &str,
) -> Result<crate::lab::DiskTemplate, CommandError> {
    scenario.disk_template().ok_or_else(|| {
        CommandError::Unsupported(format!("{command} needs elastic phases on disk geometry"))
    })
}

fn complex(z: Complex64) -> serde_json::Value {
    json!([z.re, z.im])
}

fn solve_disk(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    let n = &scenario.numerics;
    match scenario.material {
        Material::Conductor(_) => {
            let config = scenario.conductivity_config().ok_or_else(|| {
                CommandError::Unsupported("solve-disk needs disk geometry".into())
            })??;
            let sol = solve_disk_conductivity(&config)?;
            let r2 = config.geometry.r2();
            run.record
                .put_checked("dipole", sol.exterior_dipole, NEUTRALITY_TOL * r2 * r2);
            run.record.put("profile", sol.profile);
            run.record.put("applied_field", config.applied_field());
            run.note(format!("exterior dipole {:e}", sol.exterior_dipole));
        }
        Material::Elastic(phases) => {
            let Geometry::Disks(disks) = &scenario.geometry else {
                return Err(CommandError::Unsupported(
                    "solve-disk needs disk geometry".into(),
                ));
            };
            if disks.center() != Complex64::new(0.0, 0.0) {
                return Err(CommandError::Unsupported(
                    "series solver needs disks centred at the origin".into(),
                ));
            }
            let p = solve_coated_disk_elasticity(disks, &phases, &scenario.load.load, n.order)?;
            let report = far_field(&p, n.radii)?;
            run.record.put_checked("gap", report.gap, n.tolerance);
            run.record.put("c1", complex(report.c1));
            run.record.put("c3", complex(report.c3));
            run.record
                .put_checked("fit_discrepancy", report.fit_discrepancy, n.tolerance);
            run.record.put("radii", report.radii);
            run.record.put("order", n.order);
            run.record.put(
                "matrix_phi_a1",
                complex(p.phi_coefficient(Region::Matrix, 1)),
            );
            run.note(format!(
                "gap {:e}, |c1| {:e}, |c3| {:e}",
                report.gap,
                report.c1.norm(),
                report.c3.norm()
            ));
            let mut table = Table::new("solve_disk_modes", &["order", "mode", "re", "im"]);
            for (order, modes) in [(1.0, &report.order1_modes), (3.0, &report.order3_modes)] {
                for &(m, c) in modes.iter() {
                    table.push(vec![
                        order.into(),
                        (m as f64).into(),
                        c.re.into(),
                        c.im.into(),
                    ]);
                }
            }
            run.tables.push(table);
        }
    }
    Ok(())
}

fn transmission_problem(scenario: &Scenario) -> Result<TransmissionProblem, CommandError> {
    let phases = scenario
        .elastic_phases()
        .ok_or_else(|| CommandError::Unsupported("solve-bem needs elastic phases".into()))?;
    let (inner, outer) = scenario.geometry.curves();
    Ok(TransmissionProblem {
        inner,
        outer,
        phases,
        load: scenario.load.load,
        nodes: scenario.numerics.nodes,
    })
}

fn solve_bem(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    let problem = transmission_problem(scenario)?;
    let sol = solve_transmission(&problem)?;
    let report = neutrality_gap(&sol, scenario.numerics.radii)?;
    let tol = scenario.numerics.tolerance;
    run.record.put_checked("gap", report.gap, tol);
    run.record.put("c1", complex(report.c1));
    run.record.put("c3", complex(report.c3));
    run.record.put("fit_discrepancy", report.fit_discrepancy);
    run.record
        .put_checked("system_residual", sol.residual, 1e-12);
    run.record.put("radii", report.radii);
    run.record.put("nodes", problem.nodes);
    run.note(format!(
        "gap {:e}, system residual {:e}",
        report.gap, sol.residual
    ));
    let names = ["core_inner", "shell_inner", "shell_outer", "matrix_outer"];
    let mut table = Table::new("solve_bem_densities", &["node", "density", "re", "im"]);
    for (name, density) in names.iter().zip(&sol.densities) {
        for (j, s) in density.iter().enumerate() {
            table.push(vec![
                (j as f64).into(),
                (*name).into(),
                s.re.into(),
                s.im.into(),
            ]);
        }
    }
    run.tables.push(table);
    Ok(())
}

fn check_neutral(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    if let Some(config) = scenario.conductivity_config() {
        let config = config?;
        let scale = config.residual_scale();
        let residual = neutrality_residual(&config);
        run.record
            .put_checked("residual", residual / scale, NEUTRALITY_TOL);
        run.record.put("residual_raw", residual);
        run.record.put("neutral", is_neutral(&config));
        run.record.put(
            "transmission_residual",
            transmission_residual(&config) / scale,
        );
        let sol = solve_disk_conductivity(&config)?;
        run.record.put("dipole", sol.exterior_dipole);
        let g = &config.geometry;
        let (c, s) = (&config.phases.core, &config.phases.shell);
        run.record
            .put("sigma_m_relation", solve_for_sigma_m(g, c, s).ok());
        run.record.put(
            "sigma_m_transmission",
            transmission_neutral_sigma_m(g, c, s).ok(),
        );
        run.note(format!(
            "normalized residual {:e}, dipole {:e}",
            residual / scale,
            sol.exterior_dipole
        ));
        return Ok(());
    }
    let template = need_template(scenario, "check-neutral")?;
    let cert = certify_bulk(&template)?;
    let tol = scenario.numerics.tolerance;
    run.record.put_checked("gap", cert.far_field.gap, tol);
    run.record.put_checked(
        "matrix_potential_residual",
        cert.matrix_potential_residual,
        tol,
    );
    run.record.put("shell_divergence", cert.shell.divergence);
    run.record
        .put("shell_antisymmetry", cert.shell.antisymmetry);
    run.record.put("shell_laplacian", cert.shell.laplacian);
    run.record.put("shell_phi_prime", cert.shell.phi_prime);
    run.record.put("core_linearity", cert.core.residual);
    run.record.put("k_star", cert.constants.k_star);
    run.record.put("constants", cert.constants);
    run.record.put("hypotheses", cert.hypotheses);
    run.note(format!(
        "gap {:e}, k* {}",
        cert.far_field.gap, cert.constants.k_star
    ));
    Ok(())
}

fn find_neutral(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    if let Some(config) = scenario.conductivity_config() {
        let config = config?;
        let g = &config.geometry;
        let (c, s) = (&config.phases.core, &config.phases.shell);
        let sigma_m = solve_for_sigma_m(g, c, s)?;
        run.record.put("parameter", "sigma_m");
        run.record.put("root", sigma_m);
        run.record.put(
            "transmission_root",
            transmission_neutral_sigma_m(g, c, s).ok(),
        );
        return Ok(());
    }
    let template = need_template(scenario, "find-neutral")?;
    let search = scenario.search.unwrap_or(super::scenario::SearchSpec {
        parameter: crate::lab::FreeParameter::KappaMatrix,
        bracket: None,
        scan: true,
    });
    let mut task = RootFindTask::around(&template, search.parameter);
    if let Some(b) = search.bracket {
        task.bracket = b;
    }
    task.scan_first = search.scan;
    run.record.put("parameter", search.parameter.name());
    run.record.put("bracket", [task.bracket.0, task.bracket.1]);
    let name = search.parameter.name();
    let scan_table = |scan: &[(f64, f64)]| {
        let mut t = Table::new("find_neutral_scan", &[name, "objective"]);
        for &(x, f) in scan {
            t.push(vec![x.into(), f.into()]);
        }
        t
    };
    match find_neutral_bulk(&template, &task) {
        Ok(root) => {
            run.record.put("root", root.value);
            run.record
                .put_checked("objective", root.objective, task.tolerance.max(ROOT_TOL));
            run.record.put_checked(
                "gap",
                root.certificate.far_field.gap,
                scenario.numerics.tolerance,
            );
            run.record.put("certificate", &root.certificate);
            run.record.put("scan", &root.scan);
            run.tables.push(scan_table(&root.scan));
            run.note(format!("{name} = {}", root.value));
            Ok(())
        }
        Err(LabError::NoSignChange { scan }) => {
            run.record.put("scan", &scan);
            run.tables.push(scan_table(&scan));
            Err(CommandError::Numerical(
                LabError::NoSignChange { scan }.to_string(),
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn floors_path(options: &RunOptions) -> PathBuf {
    options
        .fixtures
        .clone()
        .unwrap_or_else(crate::lab::fixtures_path)
}

fn shear_sweep(
    scenario: &Scenario,
    options: &RunOptions,
    run: &mut Run,
) -> Result<(), CommandError> {
    let grid = scenario.sweep_grid().ok_or_else(|| {
        CommandError::Unsupported("shear-sweep needs elastic phases on disk geometry".into())
    })?;
    let report = shear_infeasibility_sweep(&grid)?;
    run.record.put("axes", &report.axes);
    run.record.put("points", report.rows.len());
    run.record.put("min_max", report.min_max);
    run.record.put("argmin", &report.argmin);
    run.record
        .put("root_curve_min_c3", report.root_curve_min_c3);
    run.record.put("root_curve_points", report.root_curve.len());
    if grid.axes == crate::lab::SweepGrid::default_shear().axes
        && grid.template == crate::lab::DiskTemplate::standard()
    {
        let floors = load_floors(&floors_path(options))?;
        run.record.put_checked(
            "frozen_min_max",
            floors.shear_min_max,
            crate::lab::FLOOR_REL_TOL,
        );
        run.record.put(
            "floor_matches",
            matches_floor(report.min_max, floors.shear_min_max),
        );
    }
    run.note(format!(
        "min max(|c1|,|c3|) = {:e} over {} points",
        report.min_max,
        report.rows.len()
    ));

    let mut header: Vec<&str> = report.axes.iter().map(String::as_str).collect();
    header.extend(["c1", "c3"]);
    let mut table = Table::new("shear_sweep", &header);
    for row in &report.rows {
        let mut cells: Vec<Cell> = row.values.iter().map(|&v| v.into()).collect();
        cells.extend([row.c1.into(), row.c3.into()]);
        table.push(cells);
    }
    run.tables.push(table);

    let first = report.axes.first().map_or("slice", String::as_str);
    let last = report.axes.last().map_or("root", String::as_str);
    let mut curve = Table::new("shear_root_curve", &[first, last, "c1", "c3"]);
    for p in &report.root_curve {
        curve.push(vec![
            p.slice.into(),
            p.root.into(),
            p.c1.into(),
            p.c3.into(),
        ]);
    }
    run.tables.push(curve);
    Ok(())
}

fn rigidity(scenario: &Scenario, options: &RunOptions, run: &mut Run) -> Result<(), CommandError> {
    let config = scenario.rigidity_config().ok_or_else(|| {
        CommandError::Unsupported("rigidity needs elastic phases on disk geometry".into())
    })?;
    let report = rigidity_experiment(&config)?;
    run.record.put("parameter", report.parameter.name());
    run.record.put("neutral_value", report.neutral_value);
    run.record.put("neutral_gap", report.neutral_gap);
    let floors = (config == crate::lab::RigidityConfig::default())
        .then(|| load_floors(&floors_path(options)))
        .transpose()?;
    let mut rigid = serde_json::Map::new();
    let mut matches = serde_json::Map::new();
    for family in &config.families {
        let label = family.label();
        rigid.insert(label.clone(), json!(report.family_is_rigid(&label)));
        if let Some(f) = &floors {
            let ok = report
                .entries
                .iter()
                .filter(|e| e.family == label && e.epsilon > 0.0)
                .all(|e| {
                    f.rigidity_floor(&label, e.epsilon)
                        .is_some_and(|v| matches_floor(e.floor, v))
                });
            matches.insert(label, json!(ok));
        }
    }
    run.record.put("rigid", rigid);
    if floors.is_some() {
        run.record.put("floor_matches", matches);
        run.record
            .tolerances
            .insert("floor_matches".into(), crate::lab::FLOOR_REL_TOL);
    }
    let mut table = Table::new(
        "rigidity",
        &["family", "epsilon", report.parameter.name(), "floor"],
    );
    for e in &report.entries {
        table.push(vec![
            e.family.clone().into(),
            e.epsilon.into(),
            e.value.into(),
            e.floor.into(),
        ]);
        run.note(format!(
            "{} eps={}: floor {:e}",
            e.family,
            epsilon_key(e.epsilon),
            e.floor
        ));
    }
    run.tables.push(table);
    Ok(())
}

fn verify_identities(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    let phases = scenario.elastic_phases().ok_or_else(|| {
        CommandError::Unsupported("verify-identities needs elastic phases".into())
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.numerics.seed);
    let mut table = Table::new(
        "verify_identities",
        &["phase", "check", "x_re", "x_im", "residual"],
    );
    let mut worst_divgg = 0.0f64;
    let mut worst_divdiv = 0.0f64;
    for (name, phase) in [
        ("core", phases.core),
        ("shell", phases.shell),
        ("matrix", phases.matrix),
    ] {
        let kernel = KelvinKernel::new(phase);
        for _ in 0..IDENTITY_SAMPLES {
            let x = Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let y = x + Complex64::from_polar(
                rng.random_range(0.3..3.0),
                rng.random_range(0.0..2.0 * PI),
            );
            let r = check_divergence_identity(&kernel, x, y, FD_STEP);
            worst_divgg = worst_divgg.max(r);
            table.push(vec![
                name.into(),
                "divgg".into(),
                x.re.into(),
                x.im.into(),
                r.into(),
            ]);
        }
        let points = [
            Complex64::new(0.3, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(3.0, 0.0),
        ];
        for c in check_divdiv_identity(&kernel, Complex64::new(0.0, 0.0), 1.0, &points) {
            worst_divdiv = worst_divdiv.max(c.residual);
            table.push(vec![
                name.into(),
                "divdiv".into(),
                c.point.re.into(),
                c.point.im.into(),
                c.residual.into(),
            ]);
        }
    }
    run.check("divgg_max_residual", worst_divgg, DIVGG_TOL);
    run.check("divdiv_max_residual", worst_divdiv, DIVDIV_TOL);
    run.record.put("samples_per_phase", IDENTITY_SAMPLES);
    run.tables.push(table);
    Ok(())
}

fn plemelj_check(scenario: &Scenario, run: &mut Run) -> Result<(), CommandError> {
    let n = scenario.numerics.nodes;
    let circle = SmoothCurve::circle(Complex64::new(0.0, 0.0), 1.0);
    let points = circle.nodes(n).points;
    type Case = (&'static str, fn(Complex64) -> Complex64);
    let cases: [Case; 3] = [
        ("z2", |z| z * z),
        ("zero", |_| Complex64::new(0.0, 0.0)),
        ("conj_z", |z| z.conj()),
    ];
    let mut table = Table::new("plemelj_check", &["node", "z2", "zero", "conj_z"]);
    let mut residuals = Vec::new();
    for (name, f) in cases {
        let g: Vec<Complex64> = points.iter().map(|&z| f(z)).collect();
        let report = plemelj_jump_check(&g, &circle);
        run.check(&format!("plemelj_{name}"), report.max_residual, PLEMELJ_TOL);
        residuals.push(report.residuals);
    }
    for (j, ((a, b), c)) in residuals[0]
        .iter()
        .zip(&residuals[1])
        .zip(&residuals[2])
        .enumerate()
    {
        table.push(vec![
            (j as f64).into(),
            (*a).into(),
            (*b).into(),
            (*c).into(),
        ]);
    }
    run.tables.push(table);

    let conj: Vec<Complex64> = points.iter().map(|z| z.conj()).collect();
    let t = analytic_extension_test(&conj, &circle, 16);
    run.record.put("extension_conj_z", t.analytic);
    run.record.put("extension_conj_z_probe", t.max_probe);
    if let Some(template) = scenario.disk_template() {
        let p = solve_coated_disk_elasticity(
            &template.geometry,
            &template.phases,
            &UniformLoad::bulk(),
            scenario.numerics.order,
        )?;
        let (curve, g) = core_trace(&p, n);
        let t = analytic_extension_test(&g, &curve, 16);
        run.record.put("extension_core_trace", t.analytic);
        run.record.put_checked(
            "extension_core_trace_probe",
            t.max_probe,
            crate::lab::EXTENSION_TOL,
        );
    }
    Ok(())
}
