use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{positive, ModelError};

/// Concentric disks `D = {|x − c| < r1}` inside `Ω = {|x − c| < r2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoatedDisks {
    r1: f64,
    r2: f64,
    center: Complex64,
}

impl CoatedDisks {
    pub fn new(r1: f64, r2: f64, center: Complex64) -> Result<Self, ModelError> {
        positive("r1", r1)?;
        positive("r2", r2)?;
        if r1 >= r2 {
            return Err(ModelError::RadiiOrder { r1, r2 });
        }
        Ok(Self { r1, r2, center })
    }

    pub fn centered(r1: f64, r2: f64) -> Result<Self, ModelError> {
        Self::new(r1, r2, Complex64::new(0.0, 0.0))
    }

    #[inline]
    pub fn r1(&self) -> f64 {
        self.r1
    }

    #[inline]
    pub fn r2(&self) -> f64 {
        self.r2
    }

    #[inline]
    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.r1 * factor, self.r2 * factor, self.center * factor)
    }

    /// Inner and outer boundary as trigonometric curves.
    pub fn to_curves(&self) -> (SmoothCurve, SmoothCurve) {
        (
            SmoothCurve::circle(self.center, self.r1),
            SmoothCurve::circle(self.center, self.r2),
        )
    }
}

/// Closed counterclockwise curve `z(θ) = Σ c_k e^{ikθ}` with finitely many
/// Fourier coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothCurve {
    coefficients: Vec<(i32, Complex64)>,
}

/// Samples of a curve and its first two derivatives at `n` equispaced
/// parameter nodes `θ_j = 2πj/n`.
#[derive(Debug, Clone)]
pub struct CurveNodes {
    pub points: Vec<Complex64>,
    pub d1: Vec<Complex64>,
    pub d2: Vec<Complex64>,
    /// `|z'(θ_j)|`
    pub speed: Vec<f64>,
    /// Outward unit normal `−i z'/|z'|`.
    pub normal: Vec<Complex64>,
}

impl CurveNodes {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Trapezoidal arc-length weights `2π|z'|/n`.
    pub fn weight(&self, j: usize) -> f64 {
        2.0 * PI / self.len() as f64 * self.speed[j]
    }

    pub fn param(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.len() as f64
    }
}

impl SmoothCurve {
    /// Builds a curve from `(k, c_k)` pairs, merging repeated wavenumbers and
    /// dropping exact zeros. Validity is checked with [`SmoothCurve::validate`].
    pub fn from_coefficients(
        coefficients: impl IntoIterator<Item = (i32, Complex64)>,
    ) -> Result<Self, ModelError> {
        let mut merged: Vec<(i32, Complex64)> = Vec::new();
        for (k, c) in coefficients {
            match merged.iter_mut().find(|(kk, _)| *kk == k) {
                Some(entry) => entry.1 += c,
                None => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| c.norm() != 0.0);
        merged.sort_by_key(|(k, _)| *k);
        if merged.is_empty() {
            return Err(ModelError::EmptyCurve);
        }
        let curve = Self {
            coefficients: merged,
        };
        curve.validate(256)?;
        Ok(curve)
    }

    pub fn circle(center: Complex64, radius: f64) -> Self {
        let mut coefficients = vec![(1, Complex64::new(radius, 0.0))];
        if center.norm() != 0.0 {
            coefficients.insert(0, (0, center));
        }
        Self { coefficients }
    }

    /// `z(θ) = c + r (1 + ε cos mθ) e^{iθ}`.
    pub fn radial_perturbation(
        center: Complex64,
        radius: f64,
        eps: f64,
        m: u32,
    ) -> Result<Self, ModelError> {
        let m = m as i32;
        let half = Complex64::new(radius * eps / 2.0, 0.0);
        Self::from_coefficients([
            (0, center),
            (1, Complex64::new(radius, 0.0)),
            (1 + m, half),
            (1 - m, half),
        ])
    }

    pub fn coefficients(&self) -> &[(i32, Complex64)] {
        &self.coefficients
    }

    pub fn max_wavenumber(&self) -> i32 {
        self.coefficients
            .iter()
            .map(|(k, _)| k.abs())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        self.coefficients
            .iter()
            .map(|&(k, c)| c * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    pub fn derivative(&self, theta: f64) -> Complex64 {
        self.coefficients
            .iter()
            .map(|&(k, c)| {
                c * Complex64::new(0.0, k as f64) * Complex64::from_polar(1.0, k as f64 * theta)
            })
            .sum()
    }

    pub fn second_derivative(&self, theta: f64) -> Complex64 {
        self.coefficients
            .iter()
            .map(|&(k, c)| c * (-(k as f64).powi(2)) * Complex64::from_polar(1.0, k as f64 * theta))
            .sum()
    }

    pub fn nodes(&self, n: usize) -> CurveNodes {
        let thetas = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64);
        let points: Vec<_> = thetas.clone().map(|t| self.eval(t)).collect();
        let d1: Vec<_> = thetas.clone().map(|t| self.derivative(t)).collect();
        let d2: Vec<_> = thetas.map(|t| self.second_derivative(t)).collect();
        let speed: Vec<_> = d1.iter().map(|d| d.norm()).collect();
        let normal = d1
            .iter()
            .zip(&speed)
            .map(|(d, s)| Complex64::new(d.im, -d.re) / *s)
            .collect();
        CurveNodes {
            points,
            d1,
            d2,
            speed,
            normal,
        }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        let mut out = self.coefficients.clone();
        match out.iter_mut().find(|(k, _)| *k == 0) {
            Some(entry) => entry.1 += shift,
            None => out.insert(0, (0, shift)),
        }
        out.retain(|(_, c)| c.norm() != 0.0);
        out.sort_by_key(|(k, _)| *k);
        Self { coefficients: out }
    }

    /// Curve rotated about the origin by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        Self {
            coefficients: self.coefficients.iter().map(|&(k, c)| (k, c * r)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coefficients: self
                .coefficients
                .iter()
                .map(|&(k, c)| (k, c * factor))
                .collect(),
        }
    }

    fn sample_count(&self, at_least: usize) -> usize {
        at_least.max(16 * self.max_wavenumber() as usize)
    }

    /// Checks nonvanishing speed, counterclockwise orientation and simplicity
    /// on a polygon of at least `samples` vertices.
    pub fn validate(&self, samples: usize) -> Result<(), ModelError> {
        let n = self.sample_count(samples);
        let nodes = self.nodes(n);
        let scale = nodes.speed.iter().cloned().fold(0.0, f64::max);
        if let Some(node) = nodes
            .speed
            .iter()
            .position(|s| *s <= 1e-12 * scale.max(1e-300))
        {
            return Err(ModelError::ZeroSpeed { node });
        }
        if signed_area(&nodes.points) <= 0.0 {
            return Err(ModelError::Clockwise);
        }
        let pts = &nodes.points;
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(ModelError::SelfIntersecting {
                        first: i,
                        second: j,
                    });
                }
            }
        }
        Ok(())
    }

    /// Winding-number containment test on a fine polygon.
    pub fn contains(&self, p: Complex64) -> bool {
        let nodes = self.nodes(self.sample_count(512));
        winding_number(&nodes.points, p) != 0
    }

    /// Smallest distance from `p` to the sampled curve.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        let nodes = self.nodes(self.sample_count(1024));
        nodes
            .points
            .iter()
            .map(|q| (q - p).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|z(θ) − origin|` over a fine sample.
    pub fn max_radius_about(&self, origin: Complex64) -> f64 {
        let nodes = self.nodes(self.sample_count(1024));
        nodes
            .points
            .iter()
            .map(|q| (q - origin).norm())
            .fold(0.0, f64::max)
    }

    pub fn min_radius_about(&self, origin: Complex64) -> f64 {
        let nodes = self.nodes(self.sample_count(1024));
        nodes
            .points
            .iter()
            .map(|q| (q - origin).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `true` if every sample of `inner` lies strictly inside `self`
    /// and the curves do not touch.
    pub fn strictly_contains_curve(&self, inner: &SmoothCurve) -> bool {
        let outer_nodes = self.nodes(self.sample_count(512));
        let inner_nodes = inner.nodes(inner.sample_count(512));
        inner_nodes
            .points
            .iter()
            .all(|p| winding_number(&outer_nodes.points, *p) != 0)
            && inner_nodes.points.iter().all(|p| {
                outer_nodes
                    .points
                    .iter()
                    .map(|q| (q - p).norm())
                    .fold(f64::INFINITY, f64::min)
                    > 0.0
            })
    }
}

fn signed_area(pts: &[Complex64]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.re * b.im - a.im * b.re
        })
        .sum::<f64>()
        / 2.0
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

fn winding_number(pts: &[Complex64], p: Complex64) -> i32 {
    let n = pts.len();
    let mut wn = 0;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        if a.im <= p.im {
            if b.im > p.im && cross(b - a, p - a) > 0.0 {
                wn += 1;
            }
        } else if b.im <= p.im && cross(b - a, p - a) < 0.0 {
            wn -= 1;
        }
    }
    wn
}
