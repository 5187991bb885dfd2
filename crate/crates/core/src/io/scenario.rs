//! Scenario documents: TOML parsing with full violation lists, defaults and
//! a canonical serialized form.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conductivity::{ConductivityConfig, ConductivityError};
use crate::lab::{DiskTemplate, FreeParameter, RigidityConfig, ShapeFamily, SweepAxis, SweepGrid};
use crate::model::{CoatedDisks, ConductorPhase, ElasticPhase, Phases, SmoothCurve, UniformLoad};

pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const ORDER_RANGE: (usize, usize) = (3, 64);
pub const NODES_RANGE: (usize, usize) = (8, 4096);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Dotted field path, e.g. `geometry.disks.r1`.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
}

impl ScenarioError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            Self::Validation(v) => v,
            Self::Parse { .. } => &[],
        }
    }
}

// Raw document, every field optional so that all violations can be listed.

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    geometry: Option<RawGeometry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<RawPhases>,
    #[serde(skip_serializing_if = "Option::is_none")]
    load: Option<RawLoad>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numerics: Option<RawNumerics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<RawSearch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<RawSweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rigidity: Option<RawRigidity>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    #[serde(skip_serializing_if = "Option::is_none")]
    disks: Option<RawDisks>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curves: Option<RawCurves>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisks {
    r1: Option<f64>,
    r2: Option<f64>,
    center: Option<[f64; 2]>,
}

/// Fourier coefficients as `[k, re, im]` triples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurves {
    inner: Option<Vec<[f64; 3]>>,
    outer: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhases {
    core: Option<RawPhase>,
    shell: Option<RawPhase>,
    matrix: Option<RawPhase>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    #[serde(skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoad {
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    matrix: Option<[[f64; 2]; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    order: Option<i64>,
    nodes: Option<i64>,
    radii: Option<[f64; 2]>,
    tolerance: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    parameter: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bracket: Option<[f64; 2]>,
    scan: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    axes: Option<Vec<RawAxis>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    parameter: String,
    lo: f64,
    hi: f64,
    count: i64,
    #[serde(default)]
    log: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRigidity {
    families: Option<Vec<String>>,
    epsilons: Option<Vec<f64>>,
    search: Option<[f64; 2]>,
    nodes: Option<i64>,
    parameter: Option<String>,
}

// Validated scenario.

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Disks(CoatedDisks),
    Curves {
        inner: SmoothCurve,
        outer: SmoothCurve,
    },
}

impl Geometry {
    /// Largest distance from the origin to the outer boundary.
    pub fn reach(&self) -> f64 {
        match self {
            Self::Disks(d) => d.center().norm() + d.r2(),
            Self::Curves { outer, .. } => outer.max_radius_about(Complex64::new(0.0, 0.0)),
        }
    }

    pub fn curves(&self) -> (SmoothCurve, SmoothCurve) {
        match self {
            Self::Disks(d) => d.to_curves(),
            Self::Curves { inner, outer } => (inner.clone(), outer.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Material {
    Elastic(Phases<ElasticPhase>),
    Conductor(Phases<ConductorPhase>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    Bulk,
    Shear,
    Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSpec {
    pub kind: LoadKind,
    pub load: UniformLoad,
    /// Direction of the applied field for conductor scenarios.
    pub field: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub order: usize,
    pub nodes: usize,
    pub radii: [f64; 2],
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpec {
    pub parameter: FreeParameter,
    pub bracket: Option<(f64, f64)>,
    pub scan: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: Geometry,
    pub material: Material,
    pub load: LoadSpec,
    pub numerics: Numerics,
    pub search: Option<SearchSpec>,
    pub sweep: Option<Vec<SweepAxis>>,
    pub rigidity: Option<RigidityConfig>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

fn parameter_from_name(name: &str) -> Option<FreeParameter> {
    use FreeParameter::*;
    [
        MuCore,
        KappaCore,
        MuShell,
        KappaShell,
        MuMatrix,
        KappaMatrix,
        R1,
        RadiusRatio,
    ]
    .into_iter()
    .find(|p| p.name() == name)
}

fn family_from_label(label: &str) -> Option<ShapeFamily> {
    if label == "eccentric" {
        return Some(ShapeFamily::EccentricCore);
    }
    let (kind, m) = label.split_once("_m")?;
    let m: u32 = m.parse().ok().filter(|&m| m >= 2)?;
    match kind {
        "outer" => Some(ShapeFamily::Outer { m }),
        "inner" => Some(ShapeFamily::Inner { m }),
        _ => None,
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.0.push(Violation {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn positive(&mut self, path: &str, v: Option<f64>) -> Option<f64> {
        match v {
            None => {
                self.push(path, "missing");
                None
            }
            Some(x) if !(x.is_finite() && x > 0.0) => {
                self.push(path, format!("must be positive and finite, got {x}"));
                None
            }
            Some(x) => Some(x),
        }
    }
}

fn coefficients(raw: &[[f64; 3]]) -> Result<Vec<(i32, Complex64)>, String> {
    raw.iter()
        .map(|&[k, re, im]| {
            if k.fract() != 0.0 || k.abs() > 1e6 {
                Err(format!("wavenumber {k} is not an integer"))
            } else if !(re.is_finite() && im.is_finite()) {
                Err("coefficient is not finite".into())
            } else {
                Ok((k as i32, Complex64::new(re, im)))
            }
        })
        .collect()
}

/// Parses and validates a scenario document. All violations are reported.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    validate(raw)
}

fn validate(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let mut v = Collector(Vec::new());

    let geometry = match raw.geometry {
        None => {
            v.push("geometry", "missing");
            None
        }
        Some(RawGeometry {
            disks: Some(_),
            curves: Some(_),
        }) => {
            v.push(
                "geometry",
                "exactly one of geometry.disks and geometry.curves is allowed",
            );
            None
        }
        Some(RawGeometry {
            disks: None,
            curves: None,
        }) => {
            v.push(
                "geometry",
                "one of geometry.disks or geometry.curves is required",
            );
            None
        }
        Some(RawGeometry { disks: Some(d), .. }) => {
            let r1 = v.positive("geometry.disks.r1", d.r1);
            let r2 = v.positive("geometry.disks.r2", d.r2);
            let [cx, cy] = d.center.unwrap_or([0.0, 0.0]);
            if !(cx.is_finite() && cy.is_finite()) {
                v.push("geometry.disks.center", "must be finite");
            }
            match (r1, r2) {
                (Some(r1), Some(r2)) if r1 >= r2 => {
                    v.push(
                        "geometry.disks.r1",
                        format!("must be smaller than r2 = {r2}, got {r1}"),
                    );
                    None
                }
                (Some(r1), Some(r2)) => CoatedDisks::new(r1, r2, Complex64::new(cx, cy))
                    .ok()
                    .map(Geometry::Disks),
                _ => None,
            }
        }
        Some(RawGeometry {
            curves: Some(c), ..
        }) => {
            let mut curve = |path: &str, raw: Option<Vec<[f64; 3]>>| -> Option<SmoothCurve> {
                let Some(raw) = raw else {
                    v.push(path, "missing");
                    return None;
                };
                match coefficients(&raw)
                    .map_err(|e| e.to_string())
                    .and_then(|c| SmoothCurve::from_coefficients(c).map_err(|e| e.to_string()))
                {
                    Ok(c) => Some(c),
                    Err(e) => {
                        v.push(path, e);
                        None
                    }
                }
            };
            let inner = curve("geometry.curves.inner", c.inner);
            let outer = curve("geometry.curves.outer", c.outer);
            match (inner, outer) {
                (Some(inner), Some(outer)) => {
                    if outer.strictly_contains_curve(&inner) {
                        Some(Geometry::Curves { inner, outer })
                    } else {
                        v.push(
                            "geometry.curves.inner",
                            "must lie strictly inside geometry.curves.outer",
                        );
                        None
                    }
                }
                _ => None,
            }
        }
    };

    let material = match raw.phases {
        None => {
            v.push("phases", "missing");
            None
        }
        Some(p) => {
            let entries = [("core", p.core), ("shell", p.shell), ("matrix", p.matrix)];
            let mut elastic = Vec::new();
            let mut conductor = Vec::new();
            for (name, phase) in &entries {
                let path = format!("phases.{name}");
                match phase {
                    None => v.push(&path, "missing"),
                    Some(RawPhase {
                        mu,
                        kappa,
                        sigma: None,
                    }) if mu.is_some() || kappa.is_some() => {
                        elastic.push(*name);
                        let mu = v.positive(&format!("{path}.mu"), *mu);
                        let kappa = v.positive(&format!("{path}.kappa"), *kappa);
                        let _ = (mu, kappa);
                    }
                    Some(RawPhase {
                        mu: None,
                        kappa: None,
                        sigma: Some(s),
                    }) => {
                        conductor.push(*name);
                        v.positive(&format!("{path}.sigma"), Some(*s));
                    }
                    Some(RawPhase {
                        mu: None,
                        kappa: None,
                        sigma: None,
                    }) => v.push(&path, "needs {mu, kappa} or {sigma}"),
                    Some(_) => v.push(
                        &path,
                        "mixes elastic (mu, kappa) and conductor (sigma) fields",
                    ),
                }
            }
            if !elastic.is_empty() && !conductor.is_empty() {
                let (minority, kind) = if elastic.len() >= conductor.len() {
                    (&conductor, "conductor")
                } else {
                    (&elastic, "elastic")
                };
                for name in minority.iter() {
                    v.push(
                        &format!("phases.{name}"),
                        format!("is {kind} while the other phases are not"),
                    );
                }
                None
            } else {
                let get = |name: &str| {
                    entries
                        .iter()
                        .find(|(n, _)| *n == name)
                        .and_then(|(_, p)| p.clone())
                };
                if elastic.len() == 3 {
                    let ph = |n| {
                        let p = get(n)?;
                        ElasticPhase::new(p.mu?, p.kappa?).ok()
                    };
                    match (ph("core"), ph("shell"), ph("matrix")) {
                        (Some(c), Some(s), Some(m)) => {
                            Some(Material::Elastic(Phases::new(c, s, m)))
                        }
                        _ => None,
                    }
                } else if conductor.len() == 3 {
                    let ph = |n| ConductorPhase::new(get(n)?.sigma?).ok();
                    match (ph("core"), ph("shell"), ph("matrix")) {
                        (Some(c), Some(s), Some(m)) => {
                            Some(Material::Conductor(Phases::new(c, s, m)))
                        }
                        _ => None,
                    }
                } else {
                    None
                }
            }
        }
    };

    let raw_load = raw.load.unwrap_or_default();
    let field = raw_load.field.unwrap_or([1.0, 0.0]);
    if !(field[0].is_finite() && field[1].is_finite()) || field[0].hypot(field[1]) == 0.0 {
        v.push("load.field", "must be a nonzero finite vector");
    }
    let load = match raw_load.kind.as_deref().unwrap_or("bulk") {
        "bulk" => {
            if raw_load.matrix.is_some() {
                v.push("load.matrix", "only allowed with kind = \"matrix\"");
            }
            Some(LoadSpec {
                kind: LoadKind::Bulk,
                load: UniformLoad::bulk(),
                field,
            })
        }
        "shear" => {
            if raw_load.matrix.is_some() {
                v.push("load.matrix", "only allowed with kind = \"matrix\"");
            }
            Some(LoadSpec {
                kind: LoadKind::Shear,
                load: UniformLoad::shear(),
                field,
            })
        }
        "matrix" => match raw_load.matrix {
            None => {
                v.push("load.matrix", "missing");
                None
            }
            Some([[a, b], [c, d]]) => match UniformLoad::new(Matrix2::new(a, b, c, d)) {
                Ok(load) => Some(LoadSpec {
                    kind: LoadKind::Matrix,
                    load,
                    field,
                }),
                Err(e) => {
                    v.push("load.matrix", e.to_string());
                    None
                }
            },
        },
        other => {
            v.push(
                "load.kind",
                format!("unknown load kind {other:?}; use bulk, shear or matrix"),
            );
            None
        }
    };

    let n = raw.numerics.unwrap_or_default();
    let int_in =
        |v: &mut Collector, path: &str, x: Option<i64>, default: usize, range: (usize, usize)| {
            let x = x.unwrap_or(default as i64);
            if x < range.0 as i64 || x > range.1 as i64 {
                v.push(
                    path,
                    format!("must lie in [{}, {}], got {x}", range.0, range.1),
                );
            }
            x.max(0) as usize
        };
    let order = int_in(
        &mut v,
        "numerics.order",
        n.order,
        DEFAULT_ORDER,
        ORDER_RANGE,
    );
    let nodes = int_in(
        &mut v,
        "numerics.nodes",
        n.nodes,
        DEFAULT_NODES,
        NODES_RANGE,
    );
    if nodes % 2 != 0 {
        v.push("numerics.nodes", "must be even");
    }
    let tolerance = n.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance.is_finite() && tolerance > 0.0) {
        v.push("numerics.tolerance", "must be positive");
    }
    let reach = geometry.as_ref().map(Geometry::reach);
    let radii = n
        .radii
        .unwrap_or_else(|| reach.map_or([2.0, 4.0], |r| [2.0 * r, 4.0 * r]));
    if let Some(reach) = reach {
        if !(radii[0] > reach && radii[1] > reach)
            || radii[0] == radii[1]
            || !radii.iter().all(|r| r.is_finite())
        {
            v.push(
                "numerics.radii",
                format!("need two distinct radii beyond the inclusion (reach {reach})"),
            );
        }
    }

    let search = raw.search.map(|s| {
        let parameter = match s.parameter.as_deref() {
            None => Some(FreeParameter::KappaMatrix),
            Some(name) => parameter_from_name(name).or_else(|| {
                v.push("search.parameter", format!("unknown parameter {name:?}"));
                None
            }),
        };
        if let Some([lo, hi]) = s.bracket {
            if !(lo < hi) {
                v.push("search.bracket", "must satisfy lo < hi");
            }
        }
        parameter.map(|parameter| SearchSpec {
            parameter,
            bracket: s.bracket.map(|[a, b]| (a, b)),
            scan: s.scan.unwrap_or(true),
        })
    });

    let sweep = raw.sweep.map(|s| {
        let axes = s.axes.unwrap_or_default();
        if axes.is_empty() {
            v.push("sweep.axes", "at least one axis is required");
        }
        axes.iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let path = format!("sweep.axes[{i}]");
                let parameter = parameter_from_name(&a.parameter).or_else(|| {
                    v.push(
                        &format!("{path}.parameter"),
                        format!("unknown parameter {:?}", a.parameter),
                    );
                    None
                })?;
                if a.count < 2 {
                    v.push(&format!("{path}.count"), "must be at least 2");
                    return None;
                }
                if !(a.lo > 0.0 && a.lo < a.hi) {
                    v.push(&format!("{path}.lo"), "need 0 < lo < hi");
                    return None;
                }
                if parameter == FreeParameter::RadiusRatio && a.hi >= 1.0 {
                    v.push(&format!("{path}.hi"), "radius ratio must stay below 1");
                    return None;
                }
                Some(SweepAxis {
                    parameter,
                    lo: a.lo,
                    hi: a.hi,
                    count: a.count as usize,
                    log: a.log,
                })
            })
            .collect::<Vec<_>>()
    });

    let rigidity = raw.rigidity.map(|r| {
        let mut config = RigidityConfig::default();
        if let Some(labels) = &r.families {
            config.families = labels
                .iter()
                .enumerate()
                .filter_map(|(i, l)| {
                    family_from_label(l).or_else(|| {
                        v.push(
                            &format!("rigidity.families[{i}]"),
                            format!("unknown family {l:?}"),
                        );
                        None
                    })
                })
                .collect();
        }
        if let Some(eps) = &r.epsilons {
            if eps
                .iter()
                .any(|e| !(e.is_finite() && *e >= 0.0 && *e < 0.5))
            {
                v.push("rigidity.epsilons", "must lie in [0, 0.5)");
            }
            config.epsilons = eps.clone();
        }
        if let Some([lo, hi]) = r.search {
            if !(lo > 0.0 && lo < 1.0 && hi > 1.0) {
                v.push("rigidity.search", "need 0 < lo < 1 < hi");
            }
            config.search = (lo, hi);
        }
        config.nodes = int_in(&mut v, "rigidity.nodes", r.nodes, config.nodes, NODES_RANGE);
        if let Some(name) = &r.parameter {
            match parameter_from_name(name) {
                Some(p) => config.parameter = p,
                None => v.push("rigidity.parameter", format!("unknown parameter {name:?}")),
            }
        }
        config
    });

    if !v.0.is_empty() {
        return Err(ScenarioError::Validation(v.0));
    }
    let (Some(geometry), Some(material), Some(load)) = (geometry, material, load) else {
        unreachable!("missing sections are reported as violations")
    };
    Ok(Scenario {
        geometry,
        material,
        load,
        numerics: Numerics {
            order,
            nodes,
            radii,
            tolerance,
            seed: n.seed.unwrap_or(0),
        },
        search: search.flatten(),
        sweep,
        rigidity,
    })
}

fn phase_raw_elastic(p: &ElasticPhase) -> RawPhase {
    RawPhase {
        mu: Some(p.mu()),
        kappa: Some(p.kappa()),
        sigma: None,
    }
}

fn phase_raw_conductor(p: &ConductorPhase) -> RawPhase {
    RawPhase {
        mu: None,
        kappa: None,
        sigma: Some(p.sigma()),
    }
}

fn family_label(f: &ShapeFamily) -> String {
    f.label()
}

impl Scenario {
    fn to_raw(&self) -> RawScenario {
        let geometry = match &self.geometry {
            Geometry::Disks(d) => RawGeometry {
                disks: Some(RawDisks {
                    r1: Some(d.r1()),
                    r2: Some(d.r2()),
                    center: Some([d.center().re, d.center().im]),
                }),
                curves: None,
            },
            Geometry::Curves { inner, outer } => {
                let list = |c: &SmoothCurve| {
                    c.coefficients()
                        .iter()
                        .map(|(k, z)| [*k as f64, z.re, z.im])
                        .collect()
                };
                RawGeometry {
                    disks: None,
                    curves: Some(RawCurves {
                        inner: Some(list(inner)),
                        outer: Some(list(outer)),
                    }),
                }
            }
        };
        let phases = match &self.material {
            Material::Elastic(p) => RawPhases {
                core: Some(phase_raw_elastic(&p.core)),
                shell: Some(phase_raw_elastic(&p.shell)),
                matrix: Some(phase_raw_elastic(&p.matrix)),
            },
            Material::Conductor(p) => RawPhases {
                core: Some(phase_raw_conductor(&p.core)),
                shell: Some(phase_raw_conductor(&p.shell)),
                matrix: Some(phase_raw_conductor(&p.matrix)),
            },
        };
        let m = self.load.load.matrix();
        let load = RawLoad {
            kind: Some(
                match self.load.kind {
                    LoadKind::Bulk => "bulk",
                    LoadKind::Shear => "shear",
                    LoadKind::Matrix => "matrix",
                }
                .into(),
            ),
            matrix: (self.load.kind == LoadKind::Matrix)
                .then(|| [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]),
            field: Some(self.load.field),
        };
        let n = &self.numerics;
        RawScenario {
            geometry: Some(geometry),
            phases: Some(phases),
            load: Some(load),
            numerics: Some(RawNumerics {
                order: Some(n.order as i64),
                nodes: Some(n.nodes as i64),
                radii: Some(n.radii),
                tolerance: Some(n.tolerance),
                seed: Some(n.seed),
            }),
            search: self.search.map(|s| RawSearch {
                parameter: Some(s.parameter.name().into()),
                bracket: s.bracket.map(|(a, b)| [a, b]),
                scan: Some(s.scan),
            }),
            sweep: self.sweep.as_ref().map(|axes| RawSweep {
                axes: Some(
                    axes.iter()
                        .map(|a| RawAxis {
                            parameter: a.parameter.name().into(),
                            lo: a.lo,
                            hi: a.hi,
                            count: a.count as i64,
                            log: a.log,
                        })
                        .collect(),
                ),
            }),
            rigidity: self.rigidity.as_ref().map(|r| RawRigidity {
                families: Some(r.families.iter().map(family_label).collect()),
                epsilons: Some(r.epsilons.clone()),
                search: Some([r.search.0, r.search.1]),
                nodes: Some(r.nodes as i64),
                parameter: Some(r.parameter.name().into()),
            }),
        }
    }

    /// Canonical TOML text: every default filled in, fixed section order.
    pub fn canonical(&self) -> String {
        toml::to_string(&self.to_raw()).expect("scenario serializes")
    }

    /// SHA-256 of [`Scenario::canonical`], hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.canonical().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(
        &self,
        order: Option<usize>,
        nodes: Option<usize>,
        seed: Option<u64>,
    ) -> Result<Scenario, ScenarioError> {
        let mut raw = self.to_raw();
        let n = raw.numerics.get_or_insert_with(Default::default);
        if let Some(o) = order {
            n.order = Some(o as i64);
        }
        if let Some(k) = nodes {
            n.nodes = Some(k as i64);
        }
        if let Some(s) = seed {
            n.seed = Some(s);
        }
        validate(raw)
    }

    pub fn elastic_phases(&self) -> Option<Phases<ElasticPhase>> {
        match self.material {
            Material::Elastic(p) => Some(p),
            Material::Conductor(_) => None,
        }
    }

    pub fn disks(&self) -> Option<CoatedDisks> {
        match self.geometry {
            Geometry::Disks(d) => Some(d),
            Geometry::Curves { .. } => None,
        }
    }

    /// Concentric elastic template, when the scenario is one.
    pub fn disk_template(&self) -> Option<DiskTemplate> {
        Some(DiskTemplate {
            geometry: self.disks()?,
            phases: self.elastic_phases()?,
        })
    }

    pub fn conductivity_config(&self) -> Option<Result<ConductivityConfig, ConductivityError>> {
        match (self.geometry.clone(), self.material) {
            (Geometry::Disks(d), Material::Conductor(p)) => {
                Some(ConductivityConfig::new(d, p, self.load.field))
            }
            _ => None,
        }
    }

    pub fn sweep_grid(&self) -> Option<SweepGrid> {
        let template = self.disk_template()?;
        let mut grid = SweepGrid::default_shear();
        grid.template = template;
        grid.seed = self.numerics.seed;
        if let Some(axes) = &self.sweep {
            grid.axes = axes.clone();
        }
        Some(grid)
    }

    pub fn rigidity_config(&self) -> Option<RigidityConfig> {
        let template = self.disk_template()?;
        let mut config = self.rigidity.clone().unwrap_or_default();
        config.template = template;
        Some(config)
    }
}
