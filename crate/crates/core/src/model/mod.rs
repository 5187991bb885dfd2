//! Material, geometry, and load types shared by every solver, plus the
//! closed-form constants attached to a coated inclusion.
//!
//! Points of the plane are carried as [`Complex64`] (`z = x + iy`) throughout
//! the crate; 2×2 tensors use `nalgebra::Matrix2`.

mod curve;

pub use curve::{CoatedDisks, CurveNodes, SmoothCurve};

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Symmetry tolerance used when validating strains and load matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("core radius {r1} must be smaller than outer radius {r2}")]
    RadiiOrder { r1: f64, r2: f64 },
    #[error("matrix is not symmetric (off-diagonal mismatch {mismatch:e})")]
    NotSymmetric { mismatch: f64 },
    #[error("curve has vanishing speed at node {node}")]
    ZeroSpeed { node: usize },
    #[error("curve is not simple: segments {first} and {second} intersect")]
    SelfIntersecting { first: usize, second: usize },
    #[error("curve must be counterclockwise")]
    Clockwise,
    #[error("curve has no Fourier coefficients")]
    EmptyCurve,
}

fn positive(name: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ModelError::NonPositive { name, value })
    }
}

/// Isotropic elastic phase described by its shear modulus μ and 2D bulk
/// modulus κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticPhase {
    shear_modulus: f64,
    bulk_modulus: f64,
}

impl ElasticPhase {
    pub fn new(shear_modulus: f64, bulk_modulus: f64) -> Result<Self, ModelError> {
        Ok(Self {
            shear_modulus: positive("shear modulus", shear_modulus)?,
            bulk_modulus: positive("bulk modulus", bulk_modulus)?,
        })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.shear_modulus
    }

    #[inline]
    pub fn kappa(&self) -> f64 {
        self.bulk_modulus
    }

    /// Same phase with both moduli multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.shear_modulus * factor, self.bulk_modulus * factor)
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self, ModelError> {
        Self::new(mu, self.bulk_modulus)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self, ModelError> {
        Self::new(self.shear_modulus, kappa)
    }
}

/// Isotropic conductor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductorPhase {
    sigma: f64,
}

impl ConductorPhase {
    pub fn new(sigma: f64) -> Result<Self, ModelError> {
        Ok(Self {
            sigma: positive("conductivity", sigma)?,
        })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// One value per region of a coated inclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phases<P> {
    pub core: P,
    pub shell: P,
    pub matrix: P,
}

impl<P> Phases<P> {
    pub fn new(core: P, shell: P, matrix: P) -> Self {
        Self {
            core,
            shell,
            matrix,
        }
    }

    pub fn get(&self, region: Region) -> &P {
        match region {
            Region::Core => &self.core,
            Region::Shell => &self.shell,
            Region::Matrix => &self.matrix,
        }
    }
}

impl Phases<ElasticPhase> {
    /// All three phases identical.
    pub fn uniform(phase: ElasticPhase) -> Self {
        Self::new(phase, phase, phase)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.core == self.shell && self.shell == self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Ok(Self::new(
            self.core.scaled(factor)?,
            self.shell.scaled(factor)?,
            self.matrix.scaled(factor)?,
        ))
    }
}

/// The three regions of a coated inclusion: core D, shell Ω∖D̄ and matrix ℝ²∖Ω̄.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Core,
    Shell,
    Matrix,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Core, Region::Shell, Region::Matrix];
}

/// Kolosov constant `k = 1 + 2μ/κ`; always greater than one.
pub fn kolosov_constant(phase: &ElasticPhase) -> f64 {
    1.0 + 2.0 * phase.mu() / phase.kappa()
}

/// `C : strain = (κ − μ) tr(strain) I + 2μ strain` for an isotropic phase.
pub fn apply_elasticity_tensor(
    phase: &ElasticPhase,
    strain: &Matrix2<f64>,
) -> Result<Matrix2<f64>, ModelError> {
    check_symmetric(strain)?;
    let trace = strain.trace();
    Ok(Matrix2::identity() * ((phase.kappa() - phase.mu()) * trace) + strain * (2.0 * phase.mu()))
}

fn check_symmetric(m: &Matrix2<f64>) -> Result<(), ModelError> {
    let mismatch = (m[(0, 1)] - m[(1, 0)]).abs();
    let scale = m.abs().max().max(1.0);
    if mismatch > SYMMETRY_TOL * scale {
        return Err(ModelError::NotSymmetric { mismatch });
    }
    Ok(())
}

/// Coefficients (α1, α2) of the Kelvin matrix for the Lamé operator.
pub fn kelvin_params(phase: &ElasticPhase) -> (f64, f64) {
    let inv_mu = 1.0 / phase.mu();
    let inv_sum = 1.0 / (phase.mu() + phase.kappa());
    (0.5 * (inv_mu + inv_sum), 0.5 * (inv_mu - inv_sum))
}

/// Constants that a bulk-neutral coated inclusion must exhibit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralityConstants {
    /// Value of `div u` in the shell.
    pub alpha: f64,
    /// Value of `φs′` in the shell.
    pub beta: f64,
    pub gamma: f64,
    pub k_star: f64,
    /// Kolosov constants of core, shell and matrix.
    pub kolosov: Phases<f64>,
}

/// Tolerance on the `κm − β` closed-form identity.
pub const KM_BETA_IDENTITY_TOL: f64 = 1e-12;

pub fn neutrality_constants(phases: &Phases<ElasticPhase>) -> NeutralityConstants {
    let (c, s, m) = (&phases.core, &phases.shell, &phases.matrix);
    let alpha = 2.0 - 2.0 * (m.kappa() - s.kappa()) / (s.mu() + s.kappa());
    let beta = s.kappa() * alpha / 2.0;
    let gamma = c.mu() / (2.0 * s.kappa() + s.mu());
    let kolosov = Phases::new(
        kolosov_constant(c),
        kolosov_constant(s),
        kolosov_constant(m),
    );
    let k_star = (kolosov.core - gamma) / (1.0 + gamma);

    let lhs = m.kappa() - beta;
    let rhs = (m.kappa() - s.kappa()) * (2.0 * s.kappa() + s.mu()) / (s.kappa() + s.mu());
    let scale = m.kappa().abs().max(beta.abs()).max(1.0);
    debug_assert!(
        (lhs - rhs).abs() <= KM_BETA_IDENTITY_TOL * scale,
        "κm − β identity violated: {lhs} vs {rhs}"
    );

    NeutralityConstants {
        alpha,
        beta,
        gamma,
        k_star,
        kolosov,
    }
}

/// `κm − β` evaluated through its closed form in the shell moduli.
pub fn km_minus_beta_closed_form(phases: &Phases<ElasticPhase>) -> f64 {
    let (s, m) = (&phases.shell, &phases.matrix);
    (m.kappa() - s.kappa()) * (2.0 * s.kappa() + s.mu()) / (s.kappa() + s.mu())
}

/// Moduli hypotheses under which a bulk-neutral inclusion is forced to be a
/// pair of concentric disks. Comparisons are exact on the stored floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// μc ≠ μs
    pub shear_differs: bool,
    /// κm ≠ κs
    pub bulk_differs: bool,
    /// κc < 2κs + μs
    pub core_bulk_bounded: bool,
}

impl HypothesisReport {
    pub fn all(&self) -> bool {
        self.shear_differs && self.bulk_differs && self.core_bulk_bounded
    }
}

#[allow(clippy::float_cmp)]
pub fn check_hypotheses(phases: &Phases<ElasticPhase>) -> HypothesisReport {
    let (c, s, m) = (&phases.core, &phases.shell, &phases.matrix);
    HypothesisReport {
        shear_differs: c.mu() != s.mu(),
        bulk_differs: m.kappa() != s.kappa(),
        core_bulk_bounded: c.kappa() < 2.0 * s.kappa() + s.mu(),
    }
}

/// Classification of a uniform load `h(x) = A x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadKind {
    Bulk,
    Shear,
    General,
}

/// Uniform far-field load `h(x) = A x` with `A` symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformLoad {
    matrix: Matrix2<f64>,
}

impl UniformLoad {
    pub fn new(matrix: Matrix2<f64>) -> Result<Self, ModelError> {
        check_symmetric(&matrix)?;
        let sym = (matrix + matrix.transpose()) * 0.5;
        Ok(Self { matrix: sym })
    }

    /// `h(x) = x`.
    pub fn bulk() -> Self {
        Self {
            matrix: Matrix2::identity(),
        }
    }

    /// `h(x) = (y, x)`.
    pub fn shear() -> Self {
        Self {
            matrix: Matrix2::new(0.0, 1.0, 1.0, 0.0),
        }
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.matrix
    }

    #[allow(clippy::float_cmp)]
    pub fn kind(&self) -> LoadKind {
        if self.matrix == Matrix2::identity() {
            LoadKind::Bulk
        } else if self.matrix.trace() == 0.0 {
            LoadKind::Shear
        } else {
            LoadKind::General
        }
    }

    /// Complex form `h = p z + q z̄`; `p` is real for symmetric `A`.
    pub fn complex_form(&self) -> (f64, Complex64) {
        let a = &self.matrix;
        let p = 0.5 * (a[(0, 0)] + a[(1, 1)]);
        let q = Complex64::new(0.5 * (a[(0, 0)] - a[(1, 1)]), a[(0, 1)]);
        (p, q)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let (p, q) = self.complex_form();
        z * p + q * z.conj()
    }

    /// Load rotated by `angle`: `R A Rᵀ`.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let r = Matrix2::new(c, -s, s, c);
        Self {
            matrix: r * self.matrix * r.transpose(),
        }
    }
}
