//! Kelvin-matrix single-layer Nyström solver for the elasticity transmission
//! problem on smooth coated shapes, and quadrature checks of the Kelvin
//! matrix identities.
//!
//! Field representations (`S_P` is the single layer with the kernel of
//! phase `P`, `h` the applied field):
//!
//! ```text
//! core:   u = h + S_c[σ1 on ∂D] + c_c
//! shell:  u = h + S_s[σ2 on ∂D] + S_s[σ3 on ∂Ω] + c_s
//! matrix: u = h + S_m[σ4 on ∂Ω]
//! ```
//!
//! The constants and the constraints `∫σ1 = ∫σ3 = 0` keep the system
//! invertible at every curve scale. Tractions of a single layer on its own
//! curve are `(±½ I + K*)σ`, `+` on the side the normal points to.
//!
//! Vectors of the plane are carried as `Complex64`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::elasticity::{circle_fit, FarFieldReport};
use crate::model::{
    apply_elasticity_tensor, kelvin_params, ElasticPhase, ModelError, Phases, Region, SmoothCurve,
    UniformLoad,
};

/// Relative disagreement tolerated between `N`- and `2N`-node quadratures.
pub const QUADRATURE_TOL: f64 = 1e-8;
/// Central difference step used by the identity checks.
pub const FD_STEP: f64 = 1e-5;
pub const DEFAULT_NODES: usize = 256;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BemError {
    #[error("Kelvin matrix evaluated at the origin")]
    EvaluationAtOrigin,
    #[error("quadrature under-resolved: node doubling changed the result by {disagreement:e}")]
    QuadratureUnderResolved { disagreement: f64 },
    #[error("transmission system is singular")]
    SingularSystem,
    #[error("inner curve is not strictly inside the outer curve")]
    GeometryOverlap,
    #[error("point {0} lies on an interface")]
    PointOnBoundary(Complex64),
    #[error("node count must be even and at least 8, got {0}")]
    BadNodeCount(usize),
    #[error("density has {got} samples, expected {expected}")]
    DensityLength { got: usize, expected: usize },
    #[error("node index {index} out of range for {len} nodes")]
    NodeIndex { index: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Kelvin matrix `Γ(x) = A log|x| I − B x xᵀ/|x|²` with `A = α1/2π`,
/// `B = α2/2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KelvinKernel {
    phase: ElasticPhase,
    alpha1: f64,
    alpha2: f64,
}

fn vec2(z: Complex64) -> Vector2<f64> {
    Vector2::new(z.re, z.im)
}

fn cplx(v: Vector2<f64>) -> Complex64 {
    Complex64::new(v[0], v[1])
}

fn outer(a: Complex64, b: Complex64) -> Matrix2<f64> {
    Matrix2::new(a.re * b.re, a.re * b.im, a.im * b.re, a.im * b.im)
}

/// `[[0, 1], [−1, 0]]`
fn rot() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

impl KelvinKernel {
    pub fn new(phase: ElasticPhase) -> Self {
        let (alpha1, alpha2) = kelvin_params(&phase);
        Self {
            phase,
            alpha1,
            alpha2,
        }
    }

    pub fn phase(&self) -> &ElasticPhase {
        &self.phase
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    fn a(&self) -> f64 {
        self.alpha1 / (2.0 * PI)
    }

    fn b(&self) -> f64 {
        self.alpha2 / (2.0 * PI)
    }

    /// `Γ(x)` without the origin check.
    pub fn gamma(&self, x: Complex64) -> Matrix2<f64> {
        let rho2 = x.norm_sqr();
        Matrix2::identity() * (0.5 * self.a() * rho2.ln()) - outer(x, x) * (self.b() / rho2)
    }

    /// Traction `σ(Γ e_j) n` at `x` of the field generated at `y`, with
    /// `r = x − y` and `n` the unit normal at `x`.
    pub fn traction(&self, r: Complex64, n: Complex64) -> Matrix2<f64> {
        let (mu, lambda) = (self.phase.mu(), self.phase.kappa() - self.phase.mu());
        let (a, b) = (self.a(), self.b());
        let rho2 = r.norm_sqr();
        let rn = r.re * n.re + r.im * n.im;
        let nr = outer(n, r);
        let rr = outer(r, r);
        (nr * (lambda * (a - b))
            + (Matrix2::identity() * ((a - b) * rn) + outer(r, n) * (a - b) - nr * (2.0 * b)
                + rr * (4.0 * b * rn / rho2))
                * mu)
            / rho2
    }
}

/// `Γ(x)`; fails at the origin.
pub fn kelvin_matrix(kernel: &KelvinKernel, x: Complex64) -> Result<Matrix2<f64>, BemError> {
    if x.norm_sqr() == 0.0 {
        return Err(BemError::EvaluationAtOrigin);
    }
    Ok(kernel.gamma(x))
}

/// Max component of `div_y Γ(x−y) + ∇_x log|x−y| / 2π(μ+κ)`, the divergence
/// taken by central differences with `step`.
pub fn check_divergence_identity(
    kernel: &KelvinKernel,
    x: Complex64,
    y: Complex64,
    step: f64,
) -> f64 {
    let g = |yy: Complex64| kernel.gamma(x - yy);
    let dx = (g(y + step) - g(y - step)) / (2.0 * step);
    let dy = (g(y + Complex64::new(0.0, step)) - g(y - Complex64::new(0.0, step))) / (2.0 * step);
    let div = Vector2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)]);
    let r = x - y;
    let expected =
        vec2(r / r.norm_sqr()) * (-1.0 / (2.0 * PI * (kernel.phase.mu() + kernel.phase.kappa())));
    (div - expected).amax()
}

/// Outcome of the `div ∫_Ω div_y Γ` check at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivDivCheck {
    pub point: Complex64,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
}

/// Angular and radial node counts of the polar quadrature used by
/// [`check_divdiv_identity`].
pub const DIVDIV_ANGULAR: usize = 128;
pub const DIVDIV_RADIAL: usize = 32;

/// `div_x ∫_Ω div_y Γ(x−y) dy` over the disk `|y − center| < radius`,
/// compared with `−1/(μ+κ)` inside and `0` outside.
///
/// The inner divergence is a central difference of [`KelvinKernel::gamma`]
/// with a step proportional to `|x−y|`. Interior points are integrated in
/// polar coordinates about `x`, which cancels the `1/|x−y|` singularity;
/// exterior points about the disk centre. The outer divergence is a central
/// difference with [`FD_STEP`].
pub fn check_divdiv_identity(
    kernel: &KelvinKernel,
    center: Complex64,
    radius: f64,
    points: &[Complex64],
) -> Vec<DivDivCheck> {
    let rule = GaussLegendre::new(NonZeroUsize::new(DIVDIV_RADIAL).unwrap());
    let pairs = rule.as_node_weight_pairs();
    let div_y = |x: Complex64, y: Complex64, h: f64| -> Complex64 {
        let g = |yy: Complex64| kernel.gamma(x - yy);
        let dx = (g(y + h) - g(y - h)) / (2.0 * h);
        let dy = (g(y + Complex64::new(0.0, h)) - g(y - Complex64::new(0.0, h))) / (2.0 * h);
        Complex64::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)])
    };
    let inside = |x: Complex64| (x - center).norm() < radius;
    let volume = |x: Complex64, about_x: bool| -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let dt = 2.0 * PI / DIVDIV_ANGULAR as f64;
        for k in 0..DIVDIV_ANGULAR {
            let e = Complex64::from_polar(1.0, k as f64 * dt);
            let (origin, rmax) = if about_x {
                let d = x - center;
                let de = d.re * e.re + d.im * e.im;
                (x, -de + (de * de - d.norm_sqr() + radius * radius).sqrt())
            } else {
                (center, radius)
            };
            for &(node, weight) in pairs {
                let rho = 0.5 * rmax * (node + 1.0);
                let y = origin + e * rho;
                let h = FD_STEP * (y - x).norm().max(1e-300);
                sum += div_y(x, y, h) * (rho * weight * 0.5 * rmax * dt);
            }
        }
        sum
    };
    points
        .iter()
        .map(|&x| {
            let about_x = inside(x);
            let h = FD_STEP;
            let vx = (volume(x + h, about_x).re - volume(x - h, about_x).re) / (2.0 * h);
            let ih = Complex64::new(0.0, h);
            let vy = (volume(x + ih, about_x).im - volume(x - ih, about_x).im) / (2.0 * h);
            let value = vx + vy;
            let expected = if about_x {
                -1.0 / (kernel.phase.mu() + kernel.phase.kappa())
            } else {
                0.0
            };
            DivDivCheck {
                point: x,
                value,
                expected,
                residual: (value - expected).abs(),
            }
        })
        .collect()
}

/// Trigonometric interpolation of `values` (samples at `2πj/n`) onto `m ≥ n`
/// equispaced nodes. The Nyquist mode of even `n` is split evenly.
pub fn trig_upsample(values: &[Complex64], m: usize) -> Vec<Complex64> {
    let n = values.len();
    assert!(m >= n, "cannot downsample");
    let mut planner = FftPlanner::<f64>::new();
    let mut spec = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..n {
        let v = spec[k] / n as f64;
        if n.is_multiple_of(2) && k == half {
            padded[half] += v * 0.5;
            padded[m - half] += v * 0.5;
        } else if k < half || (n % 2 == 1 && k == half) {
            padded[k] = v;
        } else {
            padded[m - (n - k)] = v;
        }
    }
    planner.plan_fft_inverse(m).process(&mut padded);
    padded
}

/// Nodes of one discretized curve with the periodic quadrature weights.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub points: Vec<Complex64>,
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
    pub speed: Vec<f64>,
    pub normal: Vec<Complex64>,
    /// Kress log weights `R(t_i − t_j)`, indexed by `(i − j) mod n`.
    log_weights: Vec<f64>,
    /// Hilbert weights for `PV ∫ cot((t_i − τ)/2) f(τ) dτ`, same indexing.
    hilbert_weights: Vec<f64>,
}

impl Discretization {
    pub fn new(curve: &SmoothCurve, n: usize) -> Result<Self, BemError> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(BemError::BadNodeCount(n));
        }
        let nodes = curve.nodes(n);
        let nf = n as f64;
        let half = n / 2;
        // Cosine and sine sums over 1 ≤ m < n/2 by one FFT each.
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(n);
        let mut inv_m = vec![Complex64::new(0.0, 0.0); n];
        let mut ones = vec![Complex64::new(0.0, 0.0); n];
        for m in 1..half {
            inv_m[m] = Complex64::new(1.0 / m as f64, 0.0);
            ones[m] = Complex64::new(1.0, 0.0);
        }
        fft.process(&mut inv_m);
        fft.process(&mut ones);
        let log_weights = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                -4.0 * PI / nf * inv_m[k].re - 4.0 * PI / (nf * nf) * sign
            })
            .collect();
        let hilbert_weights = ones.iter().map(|v| -4.0 * PI / nf * v.im).collect();
        Ok(Self {
            points: nodes.points,
            d1: nodes.d1,
            d2: nodes.d2,
            speed: nodes.speed,
            normal: nodes.normal,
            log_weights,
            hilbert_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn step(&self) -> f64 {
        2.0 * PI / self.len() as f64
    }

    /// Arc-length weight of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        self.step() * self.speed[j]
    }

    fn param(&self, j: usize) -> f64 {
        self.step() * j as f64
    }

    fn diff_index(&self, i: usize, j: usize) -> usize {
        (i + self.len() - j) % self.len()
    }

    /// Single-layer block `S_ij` for a target node on the same curve.
    fn single_self(&self, k: &KelvinKernel, i: usize, j: usize) -> Matrix2<f64> {
        let h = self.step();
        let g = self.speed[j];
        let log_part = 0.5 * self.log_weights[self.diff_index(i, j)];
        if i == j {
            let t = self.d1[i] / g;
            Matrix2::identity() * (k.a() * (log_part + h * g.ln()) * g)
                - outer(t, t) * (k.b() * h * g)
        } else {
            let r = self.points[i] - self.points[j];
            let rho2 = r.norm_sqr();
            let d = self.param(i) - self.param(j);
            let smooth = 0.5 * rho2.ln() - 0.5 * (4.0 * (0.5 * d).sin().powi(2)).ln();
            Matrix2::identity() * (k.a() * (log_part + h * smooth) * g)
                - outer(r, r) * (k.b() * h * g / rho2)
        }
    }

    /// Single-layer block for an off-curve target.
    fn single_cross(&self, k: &KelvinKernel, x: Complex64, j: usize) -> Matrix2<f64> {
        k.gamma(x - self.points[j]) * self.weight(j)
    }

    /// Block `K*_ij` of the adjoint traction operator on the same curve.
    fn adjoint_self(&self, k: &KelvinKernel, i: usize, j: usize) -> Matrix2<f64> {
        let mu = k.phase.mu();
        let (a, b) = (k.a(), k.b());
        let h = self.step();
        if i == j {
            let g = self.speed[i];
            let t = self.d1[i] / g;
            let n = self.normal[i];
            let q = self.d1[i].re * self.d2[i].re + self.d1[i].im * self.d2[i].im;
            let curv = self.d2[i].re * n.re + self.d2[i].im * n.im;
            rot() * (mu * (a - b) * h * q / (2.0 * g * g))
                + (Matrix2::identity() * (mu * (a - b)) + outer(t, t) * (4.0 * mu * b))
                    * (-h * curv / (2.0 * g))
        } else {
            let r = self.points[i] - self.points[j];
            let d = self.param(i) - self.param(j);
            let w = self.hilbert_weights[self.diff_index(i, j)];
            k.traction(r, self.normal[i]) * (h * self.speed[j])
                + rot() * (mu * (a - b) * (-0.5 * w + 0.5 * h / (0.5 * d).tan()))
        }
    }

    /// Traction block for an off-curve target with normal `n`.
    fn adjoint_cross(
        &self,
        k: &KelvinKernel,
        x: Complex64,
        n: Complex64,
        j: usize,
    ) -> Matrix2<f64> {
        k.traction(x - self.points[j], n) * self.weight(j)
    }
}

fn apply(block: Matrix2<f64>, v: Complex64) -> Complex64 {
    cplx(block * vec2(v))
}

fn check_density(disc: &Discretization, density: &[Complex64]) -> Result<(), BemError> {
    if density.len() != disc.len() {
        return Err(BemError::DensityLength {
            got: density.len(),
            expected: disc.len(),
        });
    }
    Ok(())
}

/// Where a layer potential is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerTarget {
    /// Off-curve point, plain trapezoidal rule.
    Point(Complex64),
    /// Quadrature node of the source curve, singular quadrature.
    Node(usize),
}

fn single_layer_raw(
    k: &KelvinKernel,
    disc: &Discretization,
    density: &[Complex64],
    target: LayerTarget,
) -> Complex64 {
    (0..disc.len())
        .map(|j| {
            let block = match target {
                LayerTarget::Point(x) => disc.single_cross(k, x, j),
                LayerTarget::Node(i) => disc.single_self(k, i, j),
            };
            apply(block, density[j])
        })
        .sum()
}

fn doubled(target: LayerTarget) -> LayerTarget {
    match target {
        LayerTarget::Node(i) => LayerTarget::Node(2 * i),
        other => other,
    }
}

fn doubling_check(coarse: Complex64, fine: Complex64, scale: f64) -> Result<Complex64, BemError> {
    let disagreement = (coarse - fine).norm() / scale.max(coarse.norm()).max(f64::MIN_POSITIVE);
    if disagreement > QUADRATURE_TOL {
        return Err(BemError::QuadratureUnderResolved { disagreement });
    }
    Ok(coarse)
}

fn density_scale(k: &KelvinKernel, disc: &Discretization, density: &[Complex64]) -> f64 {
    let total: f64 = density
        .iter()
        .enumerate()
        .map(|(j, s)| s.norm() * disc.weight(j))
        .sum();
    total * (k.a() + k.b())
}

/// `∫ Γ(x−y) σ(y) ds(y)` for `σ` sampled at the `density.len()` nodes of
/// `curve`. The result is cross-checked against the `2N`-node quadrature of
/// the trigonometric interpolant of `σ`.
pub fn single_layer(
    kernel: &KelvinKernel,
    curve: &SmoothCurve,
    density: &[Complex64],
    target: LayerTarget,
) -> Result<Complex64, BemError> {
    let disc = Discretization::new(curve, density.len())?;
    if let LayerTarget::Node(i) = target {
        if i >= disc.len() {
            return Err(BemError::NodeIndex {
                index: i,
                len: disc.len(),
            });
        }
    }
    let coarse = single_layer_raw(kernel, &disc, density, target);
    let fine_disc = Discretization::new(curve, 2 * density.len())?;
    let fine_density = trig_upsample(density, 2 * density.len());
    let fine = single_layer_raw(kernel, &fine_disc, &fine_density, doubled(target));
    doubling_check(coarse, fine, density_scale(kernel, &disc, density))
}

/// Side of a curve from which a traction limit is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The side the outward normal points into.
    Exterior,
    Interior,
}

fn adjoint_raw(
    k: &KelvinKernel,
    disc: &Discretization,
    density: &[Complex64],
    node: usize,
) -> Complex64 {
    (0..disc.len())
        .map(|j| apply(disc.adjoint_self(k, node, j), density[j]))
        .sum()
}

/// `(±½ I + K*)σ` at `node`: the traction of the single layer on its own
/// curve, `+` from the exterior.
pub fn traction_of_single_layer(
    kernel: &KelvinKernel,
    curve: &SmoothCurve,
    density: &[Complex64],
    node: usize,
    side: Side,
) -> Result<Complex64, BemError> {
    let disc = Discretization::new(curve, density.len())?;
    check_density(&disc, density)?;
    if node >= disc.len() {
        return Err(BemError::NodeIndex {
            index: node,
            len: disc.len(),
        });
    }
    let half = match side {
        Side::Exterior => 0.5,
        Side::Interior => -0.5,
    };
    let coarse = adjoint_raw(kernel, &disc, density, node) + density[node] * half;
    let fine_disc = Discretization::new(curve, 2 * density.len())?;
    let fine_density = trig_upsample(density, 2 * density.len());
    let fine =
        adjoint_raw(kernel, &fine_disc, &fine_density, 2 * node) + fine_density[2 * node] * half;
    let scale = density_scale(kernel, &disc, density) * kernel.phase.mu() + density[node].norm();
    doubling_check(coarse, fine, scale)
}

/// Coated inclusion with arbitrary smooth interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionProblem {
    pub inner: SmoothCurve,
    pub outer: SmoothCurve,
    pub phases: Phases<ElasticPhase>,
    pub load: UniformLoad,
    /// Quadrature nodes per curve.
    pub nodes: usize,
}

impl TransmissionProblem {
    pub fn rotated(&self, angle: f64) -> Self {
        Self {
            inner: self.inner.rotated(angle),
            outer: self.outer.rotated(angle),
            phases: self.phases,
            load: self.load.rotated(angle),
            nodes: self.nodes,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BemSolution {
    pub problem: TransmissionProblem,
    pub inner: Discretization,
    pub outer: Discretization,
    /// `σ1` (core, on ∂D), `σ2` (shell, on ∂D), `σ3` (shell, on ∂Ω),
    /// `σ4` (matrix, on ∂Ω).
    pub densities: [Vec<Complex64>; 4],
    pub core_shift: Complex64,
    pub shell_shift: Complex64,
    /// `‖Ax − b‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)` of the discrete system.
    pub residual: f64,
    /// Upsampled copies of the curves and densities for near-curve targets,
    /// built on demand, `[inner, outer][level]` at `2^level` times the nodes.
    refined: [[OnceLock<Refined>; MAX_REFINE_LEVEL + 1]; 2],
}

/// Largest near-field refinement, as a power of two.
const MAX_REFINE_LEVEL: usize = 6;

#[derive(Debug, Clone)]
struct Refined {
    points: Vec<Complex64>,
    weights: Vec<f64>,
    densities: [Vec<Complex64>; 2],
}

fn load_traction(phase: &ElasticPhase, load: &UniformLoad, n: Complex64) -> Complex64 {
    let stress = apply_elasticity_tensor(phase, load.matrix()).expect("load matrix is symmetric");
    cplx(stress * vec2(n))
}

/// Assembles and solves the `(8N+4)`-unknown transmission system.
pub fn solve_transmission(problem: &TransmissionProblem) -> Result<BemSolution, BemError> {
    problem.inner.validate(4 * problem.nodes.max(64))?;
    problem.outer.validate(4 * problem.nodes.max(64))?;
    if !problem.outer.strictly_contains_curve(&problem.inner) {
        return Err(BemError::GeometryOverlap);
    }
    let n = problem.nodes;
    let inner = Discretization::new(&problem.inner, n)?;
    let outer = Discretization::new(&problem.outer, n)?;
    let kc = KelvinKernel::new(problem.phases.core);
    let ks = KelvinKernel::new(problem.phases.shell);
    let km = KelvinKernel::new(problem.phases.matrix);
    let size = 8 * n + 4;
    let (s1, s2, s3, s4, cc, cs) = (0, 2 * n, 4 * n, 6 * n, 8 * n, 8 * n + 2);
    let id = Matrix2::identity();
    let half = id * 0.5;

    // Each node contributes two rows for every equation group.
    let mut data = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    data.par_chunks_mut(2 * size)
        .zip(rhs.par_chunks_mut(2))
        .enumerate()
        .for_each(|(pair, (rows, b))| {
            let group = pair / n;
            let i = pair % n;
            let mut put = |col: usize, m: Matrix2<f64>| {
                rows[col] += m[(0, 0)];
                rows[col + 1] += m[(0, 1)];
                rows[size + col] += m[(1, 0)];
                rows[size + col + 1] += m[(1, 1)];
            };
            let set_rhs = |b: &mut [f64], v: Complex64| {
                b[0] = v.re;
                b[1] = v.im;
            };
            match group {
                0 => {
                    let x = inner.points[i];
                    for j in 0..n {
                        put(s1 + 2 * j, inner.single_self(&kc, i, j));
                        put(s2 + 2 * j, -inner.single_self(&ks, i, j));
                        put(s3 + 2 * j, -outer.single_cross(&ks, x, j));
                    }
                    put(cc, id);
                    put(cs, -id);
                }
                1 => {
                    let (x, nx) = (inner.points[i], inner.normal[i]);
                    for j in 0..n {
                        put(s1 + 2 * j, inner.adjoint_self(&kc, i, j));
                        put(s2 + 2 * j, -inner.adjoint_self(&ks, i, j));
                        put(s3 + 2 * j, -outer.adjoint_cross(&ks, x, nx, j));
                    }
                    put(s1 + 2 * i, -half);
                    put(s2 + 2 * i, -half);
                    set_rhs(
                        b,
                        load_traction(&problem.phases.shell, &problem.load, nx)
                            - load_traction(&problem.phases.core, &problem.load, nx),
                    );
                }
                2 => {
                    let x = outer.points[i];
                    for j in 0..n {
                        put(s2 + 2 * j, inner.single_cross(&ks, x, j));
                        put(s3 + 2 * j, outer.single_self(&ks, i, j));
                        put(s4 + 2 * j, -outer.single_self(&km, i, j));
                    }
                    put(cs, id);
                }
                3 => {
                    let (x, nx) = (outer.points[i], outer.normal[i]);
                    for j in 0..n {
                        put(s2 + 2 * j, inner.adjoint_cross(&ks, x, nx, j));
                        put(s3 + 2 * j, outer.adjoint_self(&ks, i, j));
                        put(s4 + 2 * j, -outer.adjoint_self(&km, i, j));
                    }
                    put(s3 + 2 * i, -half);
                    put(s4 + 2 * i, -half);
                    set_rhs(
                        b,
                        load_traction(&problem.phases.matrix, &problem.load, nx)
                            - load_traction(&problem.phases.shell, &problem.load, nx),
                    );
                }
                _ => {
                    // Zero-mean constraints on σ1 and σ3.
                    let (disc, col) = if i == 0 { (&inner, s1) } else { (&outer, s3) };
                    if i < 2 {
                        for j in 0..n {
                            put(col + 2 * j, id * disc.weight(j));
                        }
                    }
                }
            }
        });
    // The last chunk pairs beyond the constraint rows do not exist: the
    // constraint group has exactly two row pairs (i = 0, 1).
    let a = DMatrix::from_row_slice(size, size, &data);
    let b = DVector::from_vec(rhs);
    let lu = a.clone().lu();
    let diag = lu.u().diagonal().map(f64::abs);
    if diag.min() <= 1e-14 * diag.max() {
        return Err(BemError::SingularSystem);
    }
    let x = lu.solve(&b).ok_or(BemError::SingularSystem)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(BemError::SingularSystem);
    }
    let res = (&a * &x - &b).amax();
    let a_norm = a
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let residual = res / (a_norm * x.amax() + b.amax()).max(f64::MIN_POSITIVE);
    let take = |start: usize| {
        (0..n)
            .map(|j| Complex64::new(x[start + 2 * j], x[start + 2 * j + 1]))
            .collect()
    };
    Ok(BemSolution {
        problem: problem.clone(),
        densities: [take(s1), take(s2), take(s3), take(s4)],
        core_shift: Complex64::new(x[cc], x[cc + 1]),
        shell_shift: Complex64::new(x[cs], x[cs + 1]),
        inner,
        outer,
        residual,
        refined: Default::default(),
    })
}

impl BemSolution {
    /// Region of `x`, or an error on (or numerically at) an interface.
    pub fn region_of(&self, x: Complex64) -> Result<Region, BemError> {
        let scale = self
            .problem
            .outer
            .max_radius_about(Complex64::new(0.0, 0.0))
            .max(1.0);
        let near = |c: &SmoothCurve| c.distance_to(x) <= 1e-9 * scale;
        if near(&self.problem.inner) || near(&self.problem.outer) {
            return Err(BemError::PointOnBoundary(x));
        }
        Ok(if self.problem.inner.contains(x) {
            Region::Core
        } else if self.problem.outer.contains(x) {
            Region::Shell
        } else {
            Region::Matrix
        })
    }

    fn refined(&self, curve: usize, level: usize) -> &Refined {
        self.refined[curve][level].get_or_init(|| {
            let (shape, pair) = if curve == 0 {
                (
                    &self.problem.inner,
                    [&self.densities[0], &self.densities[1]],
                )
            } else {
                (
                    &self.problem.outer,
                    [&self.densities[2], &self.densities[3]],
                )
            };
            let n = self.problem.nodes << level;
            let nodes = shape.nodes(n);
            Refined {
                weights: (0..n).map(|j| nodes.weight(j)).collect(),
                points: nodes.points,
                densities: pair.map(|d| trig_upsample(d, n)),
            }
        })
    }

    /// Refinement keeping the target at least five node spacings away.
    fn level_for(&self, curve: usize, x: Complex64) -> usize {
        let (shape, disc) = if curve == 0 {
            (&self.problem.inner, &self.inner)
        } else {
            (&self.problem.outer, &self.outer)
        };
        let spacing = (0..disc.len()).map(|j| disc.weight(j)).fold(0.0, f64::max);
        let ratio = 5.0 * spacing / shape.distance_to(x);
        if ratio <= 1.0 {
            0
        } else {
            (ratio.log2().ceil() as usize).min(MAX_REFINE_LEVEL)
        }
    }

    fn layer(&self, curve: usize, which: usize, phase: &ElasticPhase, x: Complex64) -> Complex64 {
        let k = KelvinKernel::new(*phase);
        let r = self.refined(curve, self.level_for(curve, x));
        r.points
            .iter()
            .zip(&r.weights)
            .zip(&r.densities[which])
            .map(|((y, w), s)| apply(k.gamma(x - y), *s) * *w)
            .sum()
    }

    /// Displacement from the representation of `region` (no containment check).
    pub fn field_in(&self, region: Region, x: Complex64) -> Complex64 {
        let phases = &self.problem.phases;
        let h = self.problem.load.eval(x);
        match region {
            Region::Core => h + self.layer(0, 0, &phases.core, x) + self.core_shift,
            Region::Shell => {
                h + self.layer(0, 1, &phases.shell, x)
                    + self.layer(1, 0, &phases.shell, x)
                    + self.shell_shift
            }
            Region::Matrix => h + self.layer(1, 1, &phases.matrix, x),
        }
    }
}

/// Displacements at `points` (evaluated in parallel, order preserved).
pub fn evaluate_field(
    solution: &BemSolution,
    points: &[Complex64],
) -> Result<Vec<Complex64>, BemError> {
    points
        .par_iter()
        .map(|&x| {
            let region = solution.region_of(x)?;
            Ok(solution.field_in(region, x))
        })
        .collect()
}

/// Far-field report of `u − h` from samples on two circles about the origin
/// (both outside Ω); the gap is taken on the larger one.
pub fn neutrality_gap(solution: &BemSolution, radii: [f64; 2]) -> Result<FarFieldReport, BemError> {
    let reach = solution
        .problem
        .outer
        .max_radius_about(Complex64::new(0.0, 0.0));
    for &r in &radii {
        if !(r > reach) {
            return Err(BemError::PointOnBoundary(Complex64::new(r, 0.0)));
        }
    }
    let f = |z: Complex64| solution.field_in(Region::Matrix, z) - solution.problem.load.eval(z);
    Ok(circle_fit(f, radii))
}

/// Measurement radii `2R` and `4R`, `R` the largest radius of ∂Ω.
pub fn default_gap_radii(problem: &TransmissionProblem) -> [f64; 2] {
    let reach = problem.outer.max_radius_about(Complex64::new(0.0, 0.0));
    [2.0 * reach, 4.0 * reach]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::{displacement_at, far_field, solve_coated_disk_elasticity};
    use crate::model::CoatedDisks;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phase(mu: f64, kappa: f64) -> ElasticPhase {
        ElasticPhase::new(mu, kappa).unwrap()
    }

    fn unit_kernel() -> KelvinKernel {
        KelvinKernel::new(phase(1.0, 1.0))
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn wavy() -> SmoothCurve {
        SmoothCurve::radial_perturbation(c(0.1, -0.2), 1.0, 0.1, 3).unwrap()
    }

    fn smooth_density(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                c(
                    1.0 + 0.5 * (2.0 * t).cos(),
                    0.3 * t.sin() - 0.2 * (3.0 * t).cos(),
                )
            })
            .collect()
    }

    /// Hashin bulk modulus of the coated-disk assemblage.
    fn assemblage_kappa(f: f64, core: ElasticPhase, shell: ElasticPhase) -> f64 {
        let (kc, ks, ms) = (core.kappa(), shell.kappa(), shell.mu());
        ks + f * (kc - ks) * (ks + ms) / ((ks + ms) + (1.0 - f) * (kc - ks))
    }

    fn disks_problem(
        phases: Phases<ElasticPhase>,
        load: UniformLoad,
        nodes: usize,
    ) -> TransmissionProblem {
        let (inner, outer) = CoatedDisks::centered(1.0, 2.0).unwrap().to_curves();
        TransmissionProblem {
            inner,
            outer,
            phases,
            load,
            nodes,
        }
    }

    fn neutral_phases() -> Phases<ElasticPhase> {
        let (core, shell) = (phase(2.0, 1.0), phase(1.0, 2.0));
        Phases::new(core, shell, phase(1.0, assemblage_kappa(0.25, core, shell)))
    }

    #[test]
    fn kernel_examples() {
        let k = unit_kernel();
        let g = kelvin_matrix(&k, c(1.0, 0.0)).unwrap();
        assert!((g[(0, 0)] + 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((g[(0, 0)] + 0.039_788_7).abs() < 1e-7);
        assert_eq!(g[(0, 1)], 0.0);
        assert_eq!(g[(1, 0)], 0.0);
        assert!(g[(1, 1)].abs() < 1e-16);
        let g = kelvin_matrix(&k, c(0.0, 2.0)).unwrap();
        let l = 0.75 / (2.0 * PI) * 2f64.ln();
        assert!((g[(0, 0)] - l).abs() < 1e-15);
        assert!((g[(1, 1)] - (l - 0.25 / (2.0 * PI))).abs() < 1e-15);
        assert_eq!(
            kelvin_matrix(&k, c(0.0, 0.0)),
            Err(BemError::EvaluationAtOrigin)
        );
    }

    #[test]
    fn kernel_symmetric_and_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k = KelvinKernel::new(phase(1.3, 0.7));
        for _ in 0..1000 {
            let x = c(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let g = kelvin_matrix(&k, x).unwrap();
            assert_eq!(g[(0, 1)], g[(1, 0)]);
            assert_eq!(g, kelvin_matrix(&k, -x).unwrap());
        }
    }

    #[test]
    fn divergence_identity() {
        let k = unit_kernel();
        assert!(check_divergence_identity(&k, c(0.0, 0.0), c(1.0, 1.0), FD_STEP) < 1e-8);
        for j in 0..16 {
            let y = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 16.0);
            assert!(check_divergence_identity(&k, c(0.0, 0.0), y, FD_STEP) < 1e-8);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let k = KelvinKernel::new(phase(
                rng.random_range(0.2..5.0),
                rng.random_range(0.2..5.0),
            ));
            let x = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let y = x + Complex64::from_polar(
                rng.random_range(0.3..3.0),
                rng.random_range(0.0..2.0 * PI),
            );
            assert!(check_divergence_identity(&k, x, y, FD_STEP) < 1e-8);
        }
    }

    #[test]
    fn divergence_identity_scales_with_moduli() {
        // Doubling μ+κ halves div_y Γ; compare FD divergences directly.
        let (x, y) = (c(0.2, 0.1), c(1.0, -0.4));
        let div = |k: &KelvinKernel| {
            let g = |yy: Complex64| k.gamma(x - yy);
            let h = FD_STEP;
            let dx = (g(y + h) - g(y - h)) / (2.0 * h);
            let dy = (g(y + c(0.0, h)) - g(y - c(0.0, h))) / (2.0 * h);
            Vector2::new(dx[(0, 0)] + dy[(0, 1)], dx[(1, 0)] + dy[(1, 1)])
        };
        let one = div(&KelvinKernel::new(phase(1.0, 1.0)));
        let two = div(&KelvinKernel::new(phase(2.0, 2.0)));
        assert!((one - two * 2.0).amax() < 1e-8);
    }

    #[test]
    fn divdiv_identity() {
        let k = unit_kernel();
        let r = check_divdiv_identity(
            &k,
            c(0.0, 0.0),
            1.0,
            &[c(0.3, 0.0), c(0.0, 0.3), c(3.0, 0.0)],
        );
        assert!((r[0].value + 0.5).abs() < 1e-3, "{:?}", r[0]);
        assert!((r[1].value + 0.5).abs() < 1e-3);
        assert!((r[0].value - r[1].value).abs() < 1e-6);
        assert!(r[2].value.abs() < 1e-3, "{:?}", r[2]);
        let k = KelvinKernel::new(phase(0.5, 2.5));
        let r = check_divdiv_identity(&k, c(1.0, 1.0), 0.5, &[c(1.2, 0.8), c(2.0, 2.0)]);
        assert!(r.iter().all(|d| d.residual < 1e-3), "{r:?}");
    }

    #[test]
    fn trig_upsample_is_exact_for_band_limited_data() {
        let f = |t: f64| c(t.cos() + 0.3 * (5.0 * t).sin(), (2.0 * t).cos());
        let n = 16;
        let coarse: Vec<_> = (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect();
        let fine = trig_upsample(&coarse, 64);
        for (j, v) in fine.iter().enumerate() {
            assert!((v - f(2.0 * PI * j as f64 / 64.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn single_layer_examples() {
        let k = unit_kernel();
        let circle = SmoothCurve::circle(c(0.0, 0.0), 1.0);
        let zero = vec![c(0.0, 0.0); 64];
        assert_eq!(
            single_layer(&k, &circle, &zero, LayerTarget::Point(c(3.0, 1.0))).unwrap(),
            c(0.0, 0.0)
        );
        assert_eq!(
            single_layer(&k, &circle, &zero, LayerTarget::Node(3)).unwrap(),
            c(0.0, 0.0)
        );

        let ones = vec![c(1.0, 0.5); 64];
        let x = c(10.0, 0.0);
        let got = single_layer(&k, &circle, &ones, LayerTarget::Point(x)).unwrap();
        let expected = apply(k.gamma(x), c(1.0, 0.5) * (2.0 * PI));
        assert!((got - expected).norm() < 1e-2 * expected.norm());

        let curve = wavy();
        for target in [
            LayerTarget::Point(c(2.5, 0.3)),
            LayerTarget::Point(c(0.0, 0.1)),
        ] {
            let a = single_layer_raw(
                &k,
                &Discretization::new(&curve, 128).unwrap(),
                &smooth_density(128),
                target,
            );
            let b = single_layer_raw(
                &k,
                &Discretization::new(&curve, 256).unwrap(),
                &smooth_density(256),
                target,
            );
            assert!((a - b).norm() < 1e-10, "{target:?}");
        }
        let a = single_layer(&k, &curve, &smooth_density(128), LayerTarget::Node(5)).unwrap();
        let b = single_layer(&k, &curve, &smooth_density(256), LayerTarget::Node(10)).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn under_resolved_quadrature_is_reported() {
        let k = unit_kernel();
        let circle = SmoothCurve::circle(c(0.0, 0.0), 1.0);
        let near = c(1.02, 0.0);
        let err = single_layer(&k, &circle, &smooth_density(16), LayerTarget::Point(near));
        assert!(
            matches!(err, Err(BemError::QuadratureUnderResolved { .. })),
            "{err:?}"
        );
    }

    /// Off-curve values at `x ± δn`, extrapolated to `δ → 0` from three
    /// distances, with a heavily upsampled trapezoidal rule.
    fn off_curve_limit(
        eval: impl Fn(Complex64) -> Complex64,
        x: Complex64,
        n: Complex64,
        sign: f64,
    ) -> Complex64 {
        let d = 1e-3;
        let f1 = eval(x + n * (sign * d));
        let f2 = eval(x + n * (sign * 2.0 * d));
        let f4 = eval(x + n * (sign * 4.0 * d));
        // Quadratic extrapolation through δ, 2δ, 4δ.
        (f1 * 8.0 - f2 * 6.0 + f4) / 3.0
    }

    #[test]
    fn single_layer_on_curve_matches_off_curve_limit() {
        let k = KelvinKernel::new(phase(1.2, 0.8));
        let curve = wavy();
        let n = 64;
        let sigma = smooth_density(n);
        let fine = Discretization::new(&curve, n * 512).unwrap();
        let fine_sigma = trig_upsample(&sigma, n * 512);
        let disc = Discretization::new(&curve, n).unwrap();
        for i in [0, 7, 20, 41] {
            let on = single_layer_raw(&k, &disc, &sigma, LayerTarget::Node(i));
            let eval = |x| single_layer_raw(&k, &fine, &fine_sigma, LayerTarget::Point(x));
            for sign in [1.0, -1.0] {
                let lim = off_curve_limit(eval, disc.points[i], disc.normal[i], sign);
                assert!((on - lim).norm() < 1e-6, "node {i}: {on} vs {lim}");
            }
        }
    }

    #[test]
    fn traction_limits_match_off_curve_values() {
        let k = KelvinKernel::new(phase(1.2, 0.8));
        let curve = wavy();
        let n = 64;
        let sigma = smooth_density(n);
        let fine = Discretization::new(&curve, n * 512).unwrap();
        let fine_sigma = trig_upsample(&sigma, n * 512);
        let disc = Discretization::new(&curve, n).unwrap();
        for i in [0, 7, 20, 41] {
            let nx = disc.normal[i];
            let eval = |x: Complex64| -> Complex64 {
                (0..fine.len())
                    .map(|j| apply(fine.adjoint_cross(&k, x, nx, j), fine_sigma[j]))
                    .sum()
            };
            for (side, sign) in [(Side::Exterior, 1.0), (Side::Interior, -1.0)] {
                let on = traction_of_single_layer(&k, &curve, &sigma, i, side).unwrap();
                let lim = off_curve_limit(eval, disc.points[i], nx, sign);
                assert!((on - lim).norm() < 1e-6, "node {i} {side:?}: {on} vs {lim}");
            }
        }
    }

    #[test]
    fn traction_jump_and_equilibrium() {
        let k = KelvinKernel::new(phase(0.7, 1.9));
        let circle = SmoothCurve::circle(c(0.0, 0.0), 1.0);
        let n = 256;
        let sigma = smooth_density(n);
        let disc = Discretization::new(&circle, n).unwrap();
        let mut ext_total = c(0.0, 0.0);
        let mut int_total = c(0.0, 0.0);
        let mut sigma_total = c(0.0, 0.0);
        for i in 0..n {
            let plus = traction_of_single_layer(&k, &circle, &sigma, i, Side::Exterior).unwrap();
            let minus = traction_of_single_layer(&k, &circle, &sigma, i, Side::Interior).unwrap();
            assert!((plus - minus - sigma[i]).norm() < 1e-8);
            ext_total += plus * disc.weight(i);
            int_total += minus * disc.weight(i);
            sigma_total += sigma[i] * disc.weight(i);
        }
        assert!(int_total.norm() < 1e-8, "{int_total}");
        assert!((ext_total - sigma_total).norm() < 1e-8);
        let zero = vec![c(0.0, 0.0); 32];
        assert_eq!(
            traction_of_single_layer(&k, &circle, &zero, 4, Side::Exterior).unwrap(),
            c(0.0, 0.0)
        );
        assert!(matches!(
            traction_of_single_layer(&k, &circle, &zero, 40, Side::Exterior),
            Err(BemError::NodeIndex { .. })
        ));
    }

    #[test]
    fn homogeneous_problem_has_no_densities() {
        let p = phase(1.3, 2.1);
        let problem = disks_problem(Phases::uniform(p), UniformLoad::shear(), 64);
        let sol = solve_transmission(&problem).unwrap();
        assert!(sol.residual < 1e-10);
        for d in &sol.densities {
            assert!(d.iter().all(|s| s.norm() < 1e-9));
        }
        let report = neutrality_gap(&sol, default_gap_radii(&problem)).unwrap();
        assert!(report.gap < 1e-12);
        let pts = [c(0.5, 0.1), c(1.5, 0.0), c(3.0, -1.0)];
        let u = evaluate_field(&sol, &pts).unwrap();
        for (x, v) in pts.iter().zip(u) {
            assert!((v - problem.load.eval(*x)).norm() < 1e-9);
        }
    }

    #[test]
    fn matches_series_on_concentric_disks() {
        let phases = Phases::new(phase(2.0, 1.0), phase(1.0, 2.0), phase(1.0, 3.0));
        let g = CoatedDisks::centered(1.0, 2.0).unwrap();
        let load = UniformLoad::new(Matrix2::new(1.0, 0.3, 0.3, -0.4)).unwrap();
        let series = solve_coated_disk_elasticity(&g, &phases, &load, 8).unwrap();
        let sol = solve_transmission(&disks_problem(phases, load, 128)).unwrap();
        assert!(sol.residual < 1e-10, "{}", sol.residual);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let z =
                Complex64::from_polar(rng.random_range(0.05..5.0), rng.random_range(0.0..2.0 * PI));
            if (z.norm() - 1.0).abs() < 0.01 || (z.norm() - 2.0).abs() < 0.01 {
                continue;
            }
            let a = evaluate_field(&sol, &[z]).unwrap()[0];
            let b = displacement_at(&series, z);
            assert!((a - b).norm() < 1e-6 * b.norm().max(1.0), "{z}: {a} vs {b}");
        }
        let bem = neutrality_gap(&sol, [4.0, 8.0]).unwrap();
        let ser = far_field(&series, [4.0, 8.0]).unwrap();
        assert!((bem.c1 - ser.c1).norm() < 1e-6);
        assert!((bem.gap - ser.gap).abs() < 1e-6);
    }

    #[test]
    fn neutral_disks_have_no_gap() {
        let problem = disks_problem(neutral_phases(), UniformLoad::bulk(), 128);
        let sol = solve_transmission(&problem).unwrap();
        let report = neutrality_gap(&sol, default_gap_radii(&problem)).unwrap();
        assert!(report.gap < 1e-8, "{report:?}");
        assert!(report.c1.norm() < 1e-8 && report.c3.norm() < 1e-8);
    }

    #[test]
    fn perturbed_shell_breaks_neutrality_and_converges() {
        let mut problem = disks_problem(neutral_phases(), UniformLoad::bulk(), 192);
        problem.outer = SmoothCurve::radial_perturbation(c(0.0, 0.0), 2.0, 0.05, 3).unwrap();
        let coarse = neutrality_gap(&solve_transmission(&problem).unwrap(), [4.2, 8.4]).unwrap();
        problem.nodes = 256;
        let fine = neutrality_gap(&solve_transmission(&problem).unwrap(), [4.2, 8.4]).unwrap();
        assert!(fine.gap > 1e-4, "{fine:?}");
        assert!((coarse.gap - fine.gap).abs() < 1e-9);
    }

    #[test]
    fn rotation_equivariance() {
        let phases = Phases::new(phase(2.0, 1.0), phase(1.0, 2.0), phase(0.8, 3.0));
        let mut problem = disks_problem(
            phases,
            UniformLoad::new(Matrix2::new(0.6, 0.2, 0.2, -0.1)).unwrap(),
            96,
        );
        problem.inner = SmoothCurve::radial_perturbation(c(0.1, 0.0), 0.9, 0.05, 2).unwrap();
        let angle = PI / 4.0;
        let a = solve_transmission(&problem).unwrap();
        let b = solve_transmission(&problem.rotated(angle)).unwrap();
        let e = Complex64::from_polar(1.0, angle);
        for x in [c(0.1, 0.2), c(1.5, 0.1), c(-0.3, 1.6), c(3.0, 2.0)] {
            let ua = evaluate_field(&a, &[x]).unwrap()[0];
            let ub = evaluate_field(&b, &[x * e]).unwrap()[0];
            assert!((ub - ua * e).norm() < 1e-8, "{x}");
        }
        let ga = neutrality_gap(&a, [4.0, 8.0]).unwrap().gap;
        let gb = neutrality_gap(&b, [4.0, 8.0]).unwrap().gap;
        assert!((ga - gb).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut problem = disks_problem(neutral_phases(), UniformLoad::bulk(), 64);
        problem.inner = SmoothCurve::circle(c(1.5, 0.0), 1.0);
        assert_eq!(
            solve_transmission(&problem).unwrap_err(),
            BemError::GeometryOverlap
        );
        let problem = disks_problem(neutral_phases(), UniformLoad::bulk(), 7);
        assert_eq!(
            solve_transmission(&problem).unwrap_err(),
            BemError::BadNodeCount(7)
        );
        let problem = disks_problem(neutral_phases(), UniformLoad::bulk(), 32);
        let sol = solve_transmission(&problem).unwrap();
        assert!(matches!(
            evaluate_field(&sol, &[c(2.0, 0.0)]),
            Err(BemError::PointOnBoundary(_))
        ));
    }

    #[test]
    fn assembly_is_deterministic() {
        let problem = disks_problem(neutral_phases(), UniformLoad::shear(), 48);
        let a = solve_transmission(&problem).unwrap();
        let b = solve_transmission(&problem).unwrap();
        assert_eq!(a.densities, b.densities);
    }
}
