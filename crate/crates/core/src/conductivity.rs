//! Conductivity transmission problem for concentric coated disks.
//!
//! A uniform applied field `a` excites only the first angular harmonic, so
//! the potential is `u = f(r) (a · x̂)` with
//! `f = A_c r` in the core, `A_s r + B_s / r` in the shell and
//! `r + B_m / r` in the matrix.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoatedDisks, ConductorPhase, ModelError, Phases, Region};

/// Absolute tolerance on the scale-normalized neutrality residual.
pub const NEUTRALITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConductivityError {
    #[error("no positive matrix conductivity makes the inclusion neutral (solution {value})")]
    NonPositiveSolution { value: f64 },
    #[error("neutrality relation is degenerate in σm (zero denominator)")]
    DegenerateRelation,
    #[error("transmission system is singular")]
    SingularSystem,
    #[error("applied field must be a nonzero finite vector")]
    InvalidField,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConductivityConfig {
    pub geometry: CoatedDisks,
    pub phases: Phases<ConductorPhase>,
    /// Unit vector of the applied field.
    applied_field: [f64; 2],
}

impl ConductivityConfig {
    /// The applied field is normalized to unit length.
    pub fn new(
        geometry: CoatedDisks,
        phases: Phases<ConductorPhase>,
        applied_field: [f64; 2],
    ) -> Result<Self, ConductivityError> {
        let norm = applied_field[0].hypot(applied_field[1]);
        if !norm.is_finite() || norm == 0.0 {
            return Err(ConductivityError::InvalidField);
        }
        Ok(Self {
            geometry,
            phases,
            applied_field: [applied_field[0] / norm, applied_field[1] / norm],
        })
    }

    pub fn applied_field(&self) -> [f64; 2] {
        self.applied_field
    }

    fn sigmas(&self) -> (f64, f64, f64) {
        (
            self.phases.core.sigma(),
            self.phases.shell.sigma(),
            self.phases.matrix.sigma(),
        )
    }

    /// Scale used to normalize the neutrality residual: `r2² σs max(σ)`.
    pub fn residual_scale(&self) -> f64 {
        let (c, s, m) = self.sigmas();
        self.geometry.r2().powi(2) * s * c.max(s).max(m)
    }
}

/// `r2²(σs+σc)(σm−σs) − r1²(σs−σc)(σm+σs)`; zero exactly when the coated
/// disk is neutral to uniform fields.
pub fn neutrality_residual(config: &ConductivityConfig) -> f64 {
    let (c, s, m) = config.sigmas();
    let (r1, r2) = (config.geometry.r1(), config.geometry.r2());
    r2 * r2 * (s + c) * (m - s) - r1 * r1 * (s - c) * (m + s)
}

/// `true` when the normalized residual is below [`NEUTRALITY_TOL`].
pub fn is_neutral(config: &ConductivityConfig) -> bool {
    neutrality_residual(config).abs() / config.residual_scale() < NEUTRALITY_TOL
}

/// Matrix conductivity that zeroes [`neutrality_residual`] for the given
/// core, shell and radii.
pub fn solve_for_sigma_m(
    geometry: &CoatedDisks,
    core: &ConductorPhase,
    shell: &ConductorPhase,
) -> Result<f64, ConductivityError> {
    let (c, s) = (core.sigma(), shell.sigma());
    let (r1sq, r2sq) = (geometry.r1().powi(2), geometry.r2().powi(2));
    // residual = σm [r2²(σs+σc) − r1²(σs−σc)] − σs [r2²(σs+σc) + r1²(σs−σc)]
    let slope = r2sq * (s + c) - r1sq * (s - c);
    if slope == 0.0 {
        return Err(ConductivityError::DegenerateRelation);
    }
    let value = s * (r2sq * (s + c) + r1sq * (s - c)) / slope;
    if !(value > 0.0 && value.is_finite()) {
        return Err(ConductivityError::NonPositiveSolution { value });
    }
    Ok(value)
}

/// `r2²(σs+σc)(σm−σs) − r1²(σc−σs)(σm+σs)`: the relation under which the
/// mode-1 transmission solution has no exterior dipole. It differs from
/// [`neutrality_residual`] in the sign of the core contrast term.
pub fn transmission_residual(config: &ConductivityConfig) -> f64 {
    let (c, s, m) = config.sigmas();
    let (r1, r2) = (config.geometry.r1(), config.geometry.r2());
    r2 * r2 * (s + c) * (m - s) - r1 * r1 * (c - s) * (m + s)
}

/// Matrix conductivity that zeroes [`transmission_residual`]; the
/// effective conductivity of the coated-disk assemblage.
pub fn transmission_neutral_sigma_m(
    geometry: &CoatedDisks,
    core: &ConductorPhase,
    shell: &ConductorPhase,
) -> Result<f64, ConductivityError> {
    let (c, s) = (core.sigma(), shell.sigma());
    let f = (geometry.r1() / geometry.r2()).powi(2);
    let slope = (s + c) - f * (c - s);
    if slope == 0.0 {
        return Err(ConductivityError::DegenerateRelation);
    }
    let value = s * ((s + c) + f * (c - s)) / slope;
    if !(value > 0.0 && value.is_finite()) {
        return Err(ConductivityError::NonPositiveSolution { value });
    }
    Ok(value)
}

/// Radial profile coefficients of the mode-1 solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub core_a: f64,
    pub shell_a: f64,
    pub shell_b: f64,
    pub matrix_b: f64,
}

/// Harmonic expansion of the potential. Every region carries the four
/// mode-1 coefficients of `r cosθ, r sinθ, r⁻¹ cosθ, r⁻¹ sinθ`; higher
/// modes vanish identically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSeriesSolution {
    pub config: ConductivityConfig,
    pub profile: RadialProfile,
    /// Coefficient `b1` of the `r⁻¹` mode outside Ω (per unit applied field).
    pub exterior_dipole: f64,
}

/// Coefficients of `[r cosθ, r sinθ, r⁻¹ cosθ, r⁻¹ sinθ]` in one region.
pub type ModeCoefficients = [f64; 4];

impl HarmonicSeriesSolution {
    pub fn region_of(&self, x: Complex64) -> Region {
        let r = (x - self.config.geometry.center()).norm();
        if r < self.config.geometry.r1() {
            Region::Core
        } else if r < self.config.geometry.r2() {
            Region::Shell
        } else {
            Region::Matrix
        }
    }

    fn radial(&self, region: Region) -> (f64, f64) {
        let p = &self.profile;
        match region {
            Region::Core => (p.core_a, 0.0),
            Region::Shell => (p.shell_a, p.shell_b),
            Region::Matrix => (1.0, p.matrix_b),
        }
    }

    /// Coefficients of angular mode `n` in `region`; zero for `n ≠ 1`.
    pub fn mode_coefficients(&self, region: Region, n: u32) -> ModeCoefficients {
        if n != 1 {
            return [0.0; 4];
        }
        let (a, b) = self.radial(region);
        let [ax, ay] = self.config.applied_field;
        [a * ax, a * ay, b * ax, b * ay]
    }

    /// Potential evaluated with the expansion of `region` (which may be
    /// used slightly outside the region to take one-sided limits).
    pub fn potential_in(&self, region: Region, x: Complex64) -> f64 {
        let rel = x - self.config.geometry.center();
        let r2 = rel.norm_sqr();
        let (a, b) = self.radial(region);
        let [ax, ay] = self.config.applied_field;
        let dot = ax * rel.re + ay * rel.im;
        if b == 0.0 {
            a * dot
        } else {
            (a + b / r2) * dot
        }
    }

    pub fn potential(&self, x: Complex64) -> f64 {
        self.potential_in(self.region_of(x), x)
    }

    /// Gradient `∇u` (as `u_x + i u_y`) using the expansion of `region`.
    pub fn gradient_in(&self, region: Region, x: Complex64) -> Complex64 {
        let rel = x - self.config.geometry.center();
        let r2 = rel.norm_sqr();
        let (a, b) = self.radial(region);
        let av = Complex64::new(self.config.applied_field[0], self.config.applied_field[1]);
        // ∇[(a + b/r²)(a·x)] = (a + b/r²) a − 2b (a·x) x / r⁴
        let dot = av.re * rel.re + av.im * rel.im;
        if b == 0.0 {
            av * a
        } else {
            av * (a + b / r2) - rel * (2.0 * b * dot / (r2 * r2))
        }
    }

    /// `σ ∂u/∂n` with the outward radial normal, from the side of `region`.
    pub fn normal_flux_in(&self, region: Region, x: Complex64) -> f64 {
        let rel = x - self.config.geometry.center();
        let n = rel / rel.norm();
        let g = self.gradient_in(region, x);
        self.config.phases.get(region).sigma() * (g.re * n.re + g.im * n.im)
    }
}

/// Solves the 4×4 mode-1 transmission system.
pub fn solve_disk_conductivity(
    config: &ConductivityConfig,
) -> Result<HarmonicSeriesSolution, ConductivityError> {
    let (sc, ss, sm) = config.sigmas();
    let (r1, r2) = (config.geometry.r1(), config.geometry.r2());
    // Unknowns [A_c, A_s, B_s, B_m].
    #[rustfmt::skip]
    let m = Matrix4::new(
        r1,       -r1,  -1.0 / r1,             0.0,
        sc,       -ss,   ss / (r1 * r1),       0.0,
        0.0,       r2,   1.0 / r2,            -1.0 / r2,
        0.0,       ss,  -ss / (r2 * r2),       sm / (r2 * r2),
    );
    let rhs = Vector4::new(0.0, 0.0, r2, sm);
    let sol = m
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(ConductivityError::SingularSystem)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(ConductivityError::SingularSystem);
    }
    let profile = RadialProfile {
        core_a: sol[0],
        shell_a: sol[1],
        shell_b: sol[2],
        matrix_b: sol[3],
    };
    Ok(HarmonicSeriesSolution {
        config: *config,
        profile,
        exterior_dipole: profile.matrix_b,
    })
}
