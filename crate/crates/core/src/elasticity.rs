//! Laurent-series solution of the coated-disk elasticity transmission
//! problem in Kolosov–Muskhelishvili form.
//!
//! In every region `U = (kφ − z·conj(φ′) − conj(ψ)) / 2μ` and the traction
//! potential is `F = φ + z·conj(φ′) + conj(ψ)`. On a circle of radius `r`
//! the angular harmonic `h` of each reads
//!
//! ```text
//! 2μ U_h = k a_h r^h − (2−h) conj(a_{2−h}) r^{2−h} − conj(b_{−h}) r^{−h}
//!    F_h =   a_h r^h + (2−h) conj(a_{2−h}) r^{2−h} + conj(b_{−h}) r^{−h}
//! ```
//!
//! so harmonics `m` and `2−m` couple only to each other. Block `m ≥ 1` holds
//! the coefficients `a_m, a_{2−m}, b_{−m}, b_{m−2}` of all three regions and
//! is solved as a small real-linear system. Continuity of `dF` leaves the
//! constant harmonic of `F` free, so its equations are dropped; the rigid
//! gauge is fixed by pinning the constant of `φ` in every region together
//! with zero translation at infinity, which also forces `ψm(0) = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    kolosov_constant, CoatedDisks, ElasticPhase, NeutralityConstants, Phases, Region, UniformLoad,
};

pub const DEFAULT_ORDER: usize = 8;
/// Quadrature points on the measurement circle used for the gap.
pub const GAP_POINTS: usize = 256;
/// Relative slack used to accept points on an interface as belonging to
/// either adjacent region.
const REGION_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElasticityError {
    #[error("point {point} lies outside the {region:?} region")]
    PointOutsideRegion { point: Complex64, region: Region },
    #[error("harmonic block {harmonic} is singular")]
    SingularBlock { harmonic: usize },
    #[error("truncation order must be at least 3, got {0}")]
    OrderTooSmall(usize),
    #[error("series solver requires disks centred at the origin, got {0}")]
    OffCenter(Complex64),
    #[error("measurement radius {radius} does not exceed r2 = {r2}")]
    RadiusInsideInclusion { radius: f64, r2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Phi,
    Psi,
}

/// Coefficients `a_n` of φ and `b_n` of ψ for `n = −N..=N` in one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSeries {
    pub phi: Vec<Complex64>,
    pub psi: Vec<Complex64>,
}

impl RegionSeries {
    fn zeros(order: usize) -> Self {
        Self {
            phi: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
            psi: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPotentials {
    order: usize,
    geometry: CoatedDisks,
    phases: Phases<ElasticPhase>,
    load: UniformLoad,
    regions: Phases<RegionSeries>,
}

fn allowed(region: Region, n: i32, order: usize) -> bool {
    if n.unsigned_abs() as usize > order {
        return false;
    }
    match region {
        Region::Core => n >= 0,
        Region::Shell => true,
        Region::Matrix => n <= 1,
    }
}

fn laurent(coeffs: &[Complex64], order: usize, z: Complex64, derivative: u32) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for (idx, c) in coeffs.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let n = idx as i32 - order as i32;
        let mut factor = 1.0;
        for j in 0..derivative as i32 {
            factor *= (n - j) as f64;
        }
        if factor == 0.0 {
            continue;
        }
        sum += c * factor * z.powi(n - derivative as i32);
    }
    sum
}

impl LaurentPotentials {
    /// Potentials with every coefficient zero, to be filled by hand.
    pub fn zeros(
        order: usize,
        geometry: CoatedDisks,
        phases: Phases<ElasticPhase>,
        load: UniformLoad,
    ) -> Self {
        Self {
            order,
            geometry,
            phases,
            load,
            regions: Phases::new(
                RegionSeries::zeros(order),
                RegionSeries::zeros(order),
                RegionSeries::zeros(order),
            ),
        }
    }

    /// Sets `a_n` of φ in `region`. Panics if `|n|` exceeds the order.
    pub fn set_phi(&mut self, region: Region, n: i32, value: Complex64) {
        let idx = self.index(n);
        self.series_mut(region).phi[idx] = value;
    }

    /// Sets `b_n` of ψ in `region`. Panics if `|n|` exceeds the order.
    pub fn set_psi(&mut self, region: Region, n: i32, value: Complex64) {
        let idx = self.index(n);
        self.series_mut(region).psi[idx] = value;
    }

    fn index(&self, n: i32) -> usize {
        assert!(
            n.unsigned_abs() as usize <= self.order,
            "index {n} beyond order {}",
            self.order
        );
        (n + self.order as i32) as usize
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn geometry(&self) -> &CoatedDisks {
        &self.geometry
    }

    pub fn phases(&self) -> &Phases<ElasticPhase> {
        &self.phases
    }

    pub fn load(&self) -> &UniformLoad {
        &self.load
    }

    pub fn series(&self, region: Region) -> &RegionSeries {
        self.regions.get(region)
    }

    fn series_mut(&mut self, region: Region) -> &mut RegionSeries {
        match region {
            Region::Core => &mut self.regions.core,
            Region::Shell => &mut self.regions.shell,
            Region::Matrix => &mut self.regions.matrix,
        }
    }

    /// `a_n` of φ in `region`; zero outside the truncation.
    pub fn phi_coefficient(&self, region: Region, n: i32) -> Complex64 {
        self.coefficient(region, Kind::Phi, n)
    }

    /// `b_n` of ψ in `region`; zero outside the truncation.
    pub fn psi_coefficient(&self, region: Region, n: i32) -> Complex64 {
        self.coefficient(region, Kind::Psi, n)
    }

    fn coefficient(&self, region: Region, kind: Kind, n: i32) -> Complex64 {
        let idx = n + self.order as i32;
        if idx < 0 || idx as usize > 2 * self.order {
            return Complex64::new(0.0, 0.0);
        }
        let s = self.series(region);
        match kind {
            Kind::Phi => s.phi[idx as usize],
            Kind::Psi => s.psi[idx as usize],
        }
    }

    /// `φ^(d)(z)` in `region` for `d ≤ 2`.
    pub fn phi(&self, region: Region, z: Complex64, derivative: u32) -> Complex64 {
        laurent(&self.series(region).phi, self.order, z, derivative)
    }

    /// `ψ^(d)(z)` in `region` for `d ≤ 2`.
    pub fn psi(&self, region: Region, z: Complex64, derivative: u32) -> Complex64 {
        laurent(&self.series(region).psi, self.order, z, derivative)
    }

    /// Region containing `z`; interface points go to the inner region.
    pub fn region_of(&self, z: Complex64) -> Region {
        let r = z.norm();
        if r <= self.geometry.r1() {
            Region::Core
        } else if r <= self.geometry.r2() {
            Region::Shell
        } else {
            Region::Matrix
        }
    }

    /// Whether `z` lies in the closure of `region` (up to a tiny slack).
    pub fn contains(&self, region: Region, z: Complex64) -> bool {
        let r = z.norm();
        let (r1, r2) = (self.geometry.r1(), self.geometry.r2());
        match region {
            Region::Core => r <= r1 * (1.0 + REGION_SLACK),
            Region::Shell => r >= r1 * (1.0 - REGION_SLACK) && r <= r2 * (1.0 + REGION_SLACK),
            Region::Matrix => r >= r2 * (1.0 - REGION_SLACK),
        }
    }

    fn check(&self, region: Region, z: Complex64) -> Result<(), ElasticityError> {
        if self.contains(region, z) {
            Ok(())
        } else {
            Err(ElasticityError::PointOutsideRegion { point: z, region })
        }
    }

    /// Adds `c` to φ and `k·conj(c)` to ψ in `region`, which leaves `U`
    /// unchanged and shifts `F` by a constant.
    pub fn gauge_shifted(&self, region: Region, c: Complex64) -> Self {
        let mut out = self.clone();
        let k = kolosov_constant(self.phases.get(region));
        let zero = self.order;
        let s = out.series_mut(region);
        s.phi[zero] += c;
        s.psi[zero] += c.conj() * k;
        out
    }

    /// Largest coefficient modulus in `block`, across all regions.
    pub fn block_magnitude(&self, block: usize) -> f64 {
        let m = block as i32;
        let mut best = 0.0f64;
        for region in Region::ALL {
            for n in [m, 2 - m] {
                best = best.max(self.phi_coefficient(region, n).norm());
            }
            for n in [-m, m - 2] {
                best = best.max(self.psi_coefficient(region, n).norm());
            }
        }
        best
    }
}

/// `U(z) = u1 + i u2` evaluated with the potentials of `region`.
pub fn displacement(
    potentials: &LaurentPotentials,
    region: Region,
    z: Complex64,
) -> Result<Complex64, ElasticityError> {
    potentials.check(region, z)?;
    Ok(displacement_unchecked(potentials, region, z))
}

fn displacement_unchecked(p: &LaurentPotentials, region: Region, z: Complex64) -> Complex64 {
    let phase = p.phases.get(region);
    let k = kolosov_constant(phase);
    let phi = p.phi(region, z, 0);
    let dphi = p.phi(region, z, 1);
    let psi = p.psi(region, z, 0);
    (phi * k - z * dphi.conj() - psi.conj()) / (2.0 * phase.mu())
}

/// Displacement at `z` using whichever region contains it.
pub fn displacement_at(potentials: &LaurentPotentials, z: Complex64) -> Complex64 {
    displacement_unchecked(potentials, potentials.region_of(z), z)
}

/// `DU = (φ′ + conj φ′) dz + (z conj φ″ + conj ψ′) dz̄` along `dz`.
pub fn traction_differential(
    potentials: &LaurentPotentials,
    region: Region,
    z: Complex64,
    dz: Complex64,
) -> Result<Complex64, ElasticityError> {
    potentials.check(region, z)?;
    let dphi = potentials.phi(region, z, 1);
    let d2phi = potentials.phi(region, z, 2);
    let dpsi = potentials.psi(region, z, 1);
    Ok((dphi + dphi.conj()) * dz + (z * d2phi.conj() + dpsi.conj()) * dz.conj())
}

/// Wirtinger derivatives `(∂U/∂z, ∂U/∂z̄)`. `div u = 2 Re ∂U/∂z` and
/// `∂u2/∂x1 − ∂u1/∂x2 = 2 Im ∂U/∂z`.
pub fn displacement_derivatives(
    potentials: &LaurentPotentials,
    region: Region,
    z: Complex64,
) -> Result<(Complex64, Complex64), ElasticityError> {
    potentials.check(region, z)?;
    let phase = potentials.phases.get(region);
    let k = kolosov_constant(phase);
    let dphi = potentials.phi(region, z, 1);
    let d2phi = potentials.phi(region, z, 2);
    let dpsi = potentials.psi(region, z, 1);
    let two_mu = 2.0 * phase.mu();
    Ok((
        (dphi * k - dphi.conj()) / two_mu,
        -(z * d2phi.conj() + dpsi.conj()) / two_mu,
    ))
}

/// `Δu` as `Δu1 + iΔu2 = −(2/μ) conj(φ″)`.
pub fn displacement_laplacian(
    potentials: &LaurentPotentials,
    region: Region,
    z: Complex64,
) -> Result<Complex64, ElasticityError> {
    potentials.check(region, z)?;
    let mu = potentials.phases.get(region).mu();
    Ok(-potentials.phi(region, z, 2).conj() * (2.0 / mu))
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Unknown(usize),
    Known(Complex64),
    Absent,
}

/// `Σ α x + β conj(x)` over slots, equated to `rhs`.
struct ComplexRow {
    terms: Vec<(Complex64, Complex64, Slot)>,
    rhs: Complex64,
}

impl ComplexRow {
    fn new() -> Self {
        Self {
            terms: Vec::new(),
            rhs: Complex64::new(0.0, 0.0),
        }
    }

    fn push(&mut self, alpha: Complex64, beta: Complex64, slot: Slot) {
        self.terms.push((alpha, beta, slot));
    }
}

struct Block<'a> {
    m: usize,
    order: usize,
    phases: &'a Phases<ElasticPhase>,
    pinned_phi1: Complex64,
    pinned_psi1: Complex64,
    unknowns: Vec<(Region, Kind, i32)>,
}

impl<'a> Block<'a> {
    fn new(m: usize, order: usize, phases: &'a Phases<ElasticPhase>, load: &UniformLoad) -> Self {
        let (p, q) = load.complex_form();
        let mi = m as i32;
        let mut unknowns = Vec::new();
        for region in Region::ALL {
            for (kind, ns) in [(Kind::Phi, [mi, 2 - mi]), (Kind::Psi, [-mi, mi - 2])] {
                for n in ns {
                    let pinned = region == Region::Matrix && n == 1;
                    if allowed(region, n, order)
                        && !pinned
                        && !unknowns.contains(&(region, kind, n))
                    {
                        unknowns.push((region, kind, n));
                    }
                }
            }
        }
        Self {
            m,
            order,
            phases,
            pinned_phi1: Complex64::new(phases.matrix.kappa() * p, 0.0),
            pinned_psi1: -q.conj() * (2.0 * phases.matrix.mu()),
            unknowns,
        }
    }

    fn slot(&self, region: Region, kind: Kind, n: i32) -> Slot {
        if region == Region::Matrix && n == 1 {
            return Slot::Known(match kind {
                Kind::Phi => self.pinned_phi1,
                Kind::Psi => self.pinned_psi1,
            });
        }
        if !allowed(region, n, self.order) {
            return Slot::Absent;
        }
        match self.unknowns.iter().position(|u| *u == (region, kind, n)) {
            Some(i) => Slot::Unknown(i),
            None => Slot::Absent,
        }
    }

    fn harmonics(&self) -> Vec<i32> {
        let m = self.m as i32;
        if m == 1 {
            vec![1]
        } else {
            vec![m, 2 - m]
        }
    }

    /// Adds `sign · 2μ U_h / 2μ` (or `sign · F_h`) of `region` at radius `r`.
    fn add_harmonic(
        &self,
        row: &mut ComplexRow,
        region: Region,
        r: f64,
        h: i32,
        sign: f64,
        traction: bool,
    ) {
        let phase = self.phases.get(region);
        let (ka, s) = if traction {
            (1.0, 1.0)
        } else {
            (kolosov_constant(phase), -1.0)
        };
        let scale = if traction {
            1.0
        } else {
            1.0 / (2.0 * phase.mu())
        };
        let zero = Complex64::new(0.0, 0.0);
        let c = |v: f64| Complex64::new(sign * scale * v, 0.0);
        row.push(c(ka * r.powi(h)), zero, self.slot(region, Kind::Phi, h));
        if h != 2 {
            row.push(
                zero,
                c(s * (2 - h) as f64 * r.powi(2 - h)),
                self.slot(region, Kind::Phi, 2 - h),
            );
        }
        row.push(zero, c(s * r.powi(-h)), self.slot(region, Kind::Psi, -h));
    }

    fn rows(&self, geometry: &CoatedDisks) -> Vec<ComplexRow> {
        let mut rows = Vec::new();
        let circles = [
            (geometry.r1(), Region::Core, Region::Shell),
            (geometry.r2(), Region::Shell, Region::Matrix),
        ];
        for (r, inner, outer) in circles {
            for h in self.harmonics() {
                for traction in [false, true] {
                    if traction && h == 0 {
                        continue;
                    }
                    let mut row = ComplexRow::new();
                    self.add_harmonic(&mut row, inner, r, h, 1.0, traction);
                    self.add_harmonic(&mut row, outer, r, h, -1.0, traction);
                    rows.push(row);
                }
            }
        }
        if self.m == 2 {
            let one = Complex64::new(1.0, 0.0);
            let zero = Complex64::new(0.0, 0.0);
            for region in Region::ALL {
                let mut row = ComplexRow::new();
                row.push(one, zero, self.slot(region, Kind::Phi, 0));
                rows.push(row);
            }
            // k_m φm(0) − conj ψm(0) = 0: no translation at infinity.
            let km = kolosov_constant(&self.phases.matrix);
            let mut row = ComplexRow::new();
            row.push(
                Complex64::new(km, 0.0),
                zero,
                self.slot(Region::Matrix, Kind::Phi, 0),
            );
            row.push(zero, -one, self.slot(Region::Matrix, Kind::Psi, 0));
            rows.push(row);
        }
        rows
    }

    fn solve(&self, geometry: &CoatedDisks) -> Result<Vec<Complex64>, ElasticityError> {
        let rows = self.rows(geometry);
        let n = self.unknowns.len();
        debug_assert_eq!(rows.len(), n, "block {} is not square", self.m);
        let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
        let mut b = DVector::<f64>::zeros(2 * n);
        for (i, row) in rows.iter().enumerate() {
            let mut rhs = row.rhs;
            for &(alpha, beta, slot) in &row.terms {
                match slot {
                    Slot::Absent => {}
                    Slot::Known(x) => rhs -= alpha * x + beta * x.conj(),
                    Slot::Unknown(j) => {
                        a[(2 * i, 2 * j)] += alpha.re + beta.re;
                        a[(2 * i, 2 * j + 1)] += -alpha.im + beta.im;
                        a[(2 * i + 1, 2 * j)] += alpha.im + beta.im;
                        a[(2 * i + 1, 2 * j + 1)] += alpha.re - beta.re;
                    }
                }
            }
            b[2 * i] = rhs.re;
            b[2 * i + 1] = rhs.im;
        }
        let singular = ElasticityError::SingularBlock { harmonic: self.m };
        // Powers r^±n spread the entries over many decades: equilibrate rows,
        // then columns, before judging the pivots.
        for i in 0..2 * n {
            let s = a.row(i).amax();
            if s > 0.0 {
                a.row_mut(i).scale_mut(1.0 / s);
                b[i] /= s;
            }
        }
        let col_scale = DVector::from_fn(2 * n, |j, _| {
            let s = a.column(j).amax();
            if s > 0.0 {
                1.0 / s
            } else {
                1.0
            }
        });
        for j in 0..2 * n {
            a.column_mut(j).scale_mut(col_scale[j]);
        }
        let lu = a.full_piv_lu();
        let diag = lu.u().diagonal().map(f64::abs);
        if diag.min() <= 1e-13 * diag.max() {
            return Err(singular);
        }
        let x = lu
            .solve(&b)
            .ok_or(singular.clone())?
            .component_mul(&col_scale);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(singular);
        }
        Ok((0..n)
            .map(|j| Complex64::new(x[2 * j], x[2 * j + 1]))
            .collect())
    }
}

/// Solves every harmonic block `1..=order` and assembles the potentials.
pub fn solve_coated_disk_elasticity(
    geometry: &CoatedDisks,
    phases: &Phases<ElasticPhase>,
    load: &UniformLoad,
    order: usize,
) -> Result<LaurentPotentials, ElasticityError> {
    if order < 3 {
        return Err(ElasticityError::OrderTooSmall(order));
    }
    if geometry.center() != Complex64::new(0.0, 0.0) {
        return Err(ElasticityError::OffCenter(geometry.center()));
    }
    let mut out = LaurentPotentials::zeros(order, *geometry, *phases, *load);
    for m in 1..=order {
        let block = Block::new(m, order, phases, load);
        let values = block.solve(geometry)?;
        for (&(region, kind, n), v) in block.unknowns.iter().zip(values) {
            let idx = (n + order as i32) as usize;
            let s = out.series_mut(region);
            match kind {
                Kind::Phi => s.phi[idx] = v,
                Kind::Psi => s.psi[idx] = v,
            }
        }
        if m == 1 {
            out.regions.matrix.phi[order + 1] = block.pinned_phi1;
            out.regions.matrix.psi[order + 1] = block.pinned_psi1;
        }
    }
    Ok(out)
}

/// Far-field multipole content of `u − h` outside the inclusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    /// Dominant angular coefficient of the `|x|⁻¹` term.
    pub c1: Complex64,
    /// Dominant angular coefficient of the `|x|⁻³` term.
    pub c3: Complex64,
    /// `(∫ |u − h|² ds)^{1/2}` on the larger measurement circle.
    pub gap: f64,
    /// `(mode, coefficient)` pairs of the `|x|⁻¹` term, `e^{i·mode·θ}`.
    pub order1_modes: Vec<(i32, Complex64)>,
    /// `(mode, coefficient)` pairs of the `|x|⁻³` term.
    pub order3_modes: Vec<(i32, Complex64)>,
    /// Largest difference between coefficients read from the series and
    /// those fitted from samples on the two measurement circles.
    pub fit_discrepancy: f64,
    pub radii: [f64; 2],
}

fn dominant(modes: &[(i32, Complex64)]) -> Complex64 {
    let mut best = Complex64::new(0.0, 0.0);
    for &(_, c) in modes {
        if c.norm() > best.norm() {
            best = c;
        }
    }
    best
}

/// Reads the `r⁻¹` and `r⁻³` coefficients of `u − h` from the matrix series,
/// checks them against a two-radius circle fit and evaluates the gap.
pub fn far_field(
    potentials: &LaurentPotentials,
    radii: [f64; 2],
) -> Result<FarFieldReport, ElasticityError> {
    let r2 = potentials.geometry.r2();
    for &radius in &radii {
        if !(radius > r2) {
            return Err(ElasticityError::RadiusInsideInclusion { radius, r2 });
        }
    }
    let (r_small, r_large) = if radii[0] <= radii[1] {
        (radii[0], radii[1])
    } else {
        (radii[1], radii[0])
    };
    let m = &potentials.phases.matrix;
    let (k, two_mu) = (kolosov_constant(m), 2.0 * m.mu());
    let a = |n| potentials.phi_coefficient(Region::Matrix, n);
    let b = |n| potentials.psi_coefficient(Region::Matrix, n);
    // Order r^n (n < 0): modes n (k a_n), 2−n (−n conj a_n) and −n (−conj b_n).
    let order_modes = |n: i32| {
        vec![
            (-n, -b(n).conj() / two_mu),
            (n, a(n) * k / two_mu),
            (2 - n, a(n).conj() * (-n) as f64 / two_mu),
        ]
    };
    let order1_modes = order_modes(-1);
    let order3_modes = order_modes(-3);

    let f = |z: Complex64| {
        displacement_unchecked(potentials, Region::Matrix, z) - potentials.load.eval(z)
    };
    let inner = sample_circle(&f, r_small);
    let outer = sample_circle(&f, r_large);
    let read = |mode: i32, list: &[(i32, Complex64)]| {
        list.iter()
            .filter(|(m, _)| *m == mode)
            .fold(Complex64::new(0.0, 0.0), |acc, (_, c)| acc + c)
    };
    let mut fit_discrepancy = 0.0f64;
    for mode in [-3, -1, 1, 3, 5] {
        let (fit_a, fit_b) = two_radius_fit(dft(&inner, mode), dft(&outer, mode), r_small, r_large);
        fit_discrepancy = fit_discrepancy
            .max((fit_a - read(mode, &order1_modes)).norm())
            .max((fit_b - read(mode, &order3_modes)).norm());
    }
    Ok(FarFieldReport {
        c1: dominant(&order1_modes),
        c3: dominant(&order3_modes),
        gap: circle_norm(&outer, r_large),
        order1_modes,
        order3_modes,
        fit_discrepancy,
        radii: [r_small, r_large],
    })
}

fn sample_circle(f: &impl Fn(Complex64) -> Complex64, radius: f64) -> Vec<Complex64> {
    (0..GAP_POINTS)
        .map(|j| {
            f(Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * j as f64 / GAP_POINTS as f64,
            ))
        })
        .collect()
}

fn dft(values: &[Complex64], mode: i32) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (j, v) in values.iter().enumerate() {
        let t = 2.0 * std::f64::consts::PI * j as f64 / values.len() as f64;
        s += v * Complex64::from_polar(1.0, -(mode as f64) * t);
    }
    s / values.len() as f64
}

/// Solves `c(R) = A/R + B/R³` from the mode coefficients at two radii.
fn two_radius_fit(
    ci: Complex64,
    co: Complex64,
    r_small: f64,
    r_large: f64,
) -> (Complex64, Complex64) {
    let det = 1.0 / (r_small * r_large.powi(3)) - 1.0 / (r_large * r_small.powi(3));
    let fit_a = (ci / r_large.powi(3) - co / r_small.powi(3)) / det;
    let fit_b = (co / r_small - ci / r_large) / det;
    (fit_a, fit_b)
}

fn circle_norm(values: &[Complex64], radius: f64) -> f64 {
    let weight = 2.0 * std::f64::consts::PI * radius / values.len() as f64;
    (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * weight).sqrt()
}

/// Far-field report of an arbitrary exterior field `f = u − h` from samples on
/// two circles about the origin. Coefficients come from the two-radius fit;
/// `fit_discrepancy` is the misfit of that model on the middle circle.
pub(crate) fn circle_fit(f: impl Fn(Complex64) -> Complex64, radii: [f64; 2]) -> FarFieldReport {
    let (r_small, r_large) = (radii[0].min(radii[1]), radii[0].max(radii[1]));
    let r_mid = 0.5 * (r_small + r_large);
    let inner = sample_circle(&f, r_small);
    let middle = sample_circle(&f, r_mid);
    let outer = sample_circle(&f, r_large);
    let mut order1_modes = Vec::new();
    let mut order3_modes = Vec::new();
    let mut fit_discrepancy = 0.0f64;
    for mode in [-3, -1, 1, 3, 5] {
        let (a, b) = two_radius_fit(dft(&inner, mode), dft(&outer, mode), r_small, r_large);
        if matches!(mode, -1 | 1 | 3) {
            order1_modes.push((mode, a));
        }
        if matches!(mode, -3 | 3 | 5) {
            order3_modes.push((mode, b));
        }
        let predicted = a / r_mid + b / r_mid.powi(3);
        fit_discrepancy = fit_discrepancy.max((predicted - dft(&middle, mode)).norm());
    }
    FarFieldReport {
        c1: dominant(&order1_modes),
        c3: dominant(&order3_modes),
        gap: circle_norm(&outer, r_large),
        order1_modes,
        order3_modes,
        fit_discrepancy,
        radii: [r_small, r_large],
    }
}

/// Default measurement radii `2 r2` and `4 r2`.
pub fn default_radii(geometry: &CoatedDisks) -> [f64; 2] {
    [2.0 * geometry.r2(), 4.0 * geometry.r2()]
}

/// Uniformly distributed points (by area) in the open annulus `r_in < |z| < r_out`.
pub fn sample_annulus(r_in: f64, r_out: f64, count: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let s: f64 = rng.random_range(r_in * r_in..r_out * r_out);
            let t: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            Complex64::from_polar(s.sqrt().max(r_in * (1.0 + 1e-12)), t)
        })
        .collect()
}

/// Uniformly distributed points in the open disk `|z| < r`.
pub fn sample_disk(r: f64, count: usize, seed: u64) -> Vec<Complex64> {
    sample_annulus(0.0, r, count, seed)
}

/// Worst-case residuals of the shell properties over the sample points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    /// `max |div u − α|`
    pub divergence: f64,
    /// `max |(∂u2/∂x1 − ∂u1/∂x2) / 2|`
    pub antisymmetry: f64,
    /// `max |Δu|`
    pub laplacian: f64,
    /// `max |φs′ − β|`
    pub phi_prime: f64,
    /// Mean of `div u` over the sample points.
    pub divergence_mean: f64,
    /// `max div u − min div u` over the sample points.
    pub divergence_spread: f64,
    pub points: usize,
}

impl ShellReport {
    pub fn max_residual(&self) -> f64 {
        self.divergence
            .max(self.antisymmetry)
            .max(self.laplacian)
            .max(self.phi_prime)
    }
}

pub fn verify_shell_properties(
    potentials: &LaurentPotentials,
    constants: &NeutralityConstants,
    points: &[Complex64],
) -> Result<ShellReport, ElasticityError> {
    let mut report = ShellReport {
        divergence: 0.0,
        antisymmetry: 0.0,
        laplacian: 0.0,
        phi_prime: 0.0,
        divergence_mean: 0.0,
        divergence_spread: 0.0,
        points: points.len(),
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &z in points {
        let (dz, _) = displacement_derivatives(potentials, Region::Shell, z)?;
        let lap = displacement_laplacian(potentials, Region::Shell, z)?;
        let dphi = potentials.phi(Region::Shell, z, 1);
        report.divergence = report.divergence.max((2.0 * dz.re - constants.alpha).abs());
        report.antisymmetry = report.antisymmetry.max(dz.im.abs());
        report.laplacian = report.laplacian.max(lap.norm());
        report.phi_prime = report.phi_prime.max((dphi - constants.beta).norm());
        let div = 2.0 * dz.re;
        report.divergence_mean += div;
        lo = lo.min(div);
        hi = hi.max(div);
    }
    if !points.is_empty() {
        report.divergence_mean /= points.len() as f64;
        report.divergence_spread = hi - lo;
    }
    Ok(report)
}

/// `div u = 2(κm + μs)/(κs + μs)` in the shell of a bulk-neutral pair of
/// concentric disks, from `u_r = A r + B/r` with `u = x` and radial
/// traction `2κm` on the outer circle.
pub fn concentric_shell_dilatation(phases: &Phases<ElasticPhase>) -> f64 {
    let (s, m) = (&phases.shell, &phases.matrix);
    2.0 * (m.kappa() + s.mu()) / (s.kappa() + s.mu())
}

/// Least-squares fit `u(x) ≈ a x + b` in the core.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreLinearityReport {
    pub a: f64,
    pub b: Complex64,
    /// `max |u(x) − a x − b|` over the sample points.
    pub residual: f64,
    /// `max |a_n|` of φc over `n ≥ 2`.
    pub phi_tail: f64,
    /// `max |b_n|` of ψc over `n ≥ 1`.
    pub psi_tail: f64,
    /// `(kc − 1) Re a_1 / 2μc`, the slope implied by a linear φc.
    pub predicted_a: f64,
}

pub fn verify_core_linearity(
    potentials: &LaurentPotentials,
    points: &[Complex64],
) -> Result<CoreLinearityReport, ElasticityError> {
    let mut values = Vec::with_capacity(points.len());
    for &z in points {
        values.push(displacement(potentials, Region::Core, z)?);
    }
    let n = points.len();
    let mut a = DMatrix::<f64>::zeros(2 * n, 3);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (i, (z, u)) in points.iter().zip(&values).enumerate() {
        a[(2 * i, 0)] = z.re;
        a[(2 * i, 1)] = 1.0;
        a[(2 * i + 1, 0)] = z.im;
        a[(2 * i + 1, 2)] = 1.0;
        rhs[2 * i] = u.re;
        rhs[2 * i + 1] = u.im;
    }
    let fit = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(3));
    let (slope, shift) = (fit[0], Complex64::new(fit[1], fit[2]));
    let residual = points
        .iter()
        .zip(&values)
        .map(|(z, u)| (u - (z * slope + shift)).norm())
        .fold(0.0, f64::max);
    let order = potentials.order as i32;
    let phi_tail = (2..=order)
        .map(|n| potentials.phi_coefficient(Region::Core, n).norm())
        .fold(0.0, f64::max);
    let psi_tail = (1..=order)
        .map(|n| potentials.psi_coefficient(Region::Core, n).norm())
        .fold(0.0, f64::max);
    let core = &potentials.phases.core;
    let predicted_a = (kolosov_constant(core) - 1.0)
        * potentials.phi_coefficient(Region::Core, 1).re
        / (2.0 * core.mu());
    Ok(CoreLinearityReport {
        a: slope,
        b: shift,
        residual,
        phi_tail,
        psi_tail,
        predicted_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::neutrality_constants;
    use nalgebra::{Matrix2, Matrix4, Vector4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn phase(mu: f64, kappa: f64) -> ElasticPhase {
        ElasticPhase::new(mu, kappa).unwrap()
    }

    fn template() -> (CoatedDisks, Phases<ElasticPhase>) {
        (
            CoatedDisks::centered(1.0, 2.0).unwrap(),
            Phases::new(phase(2.0, 1.0), phase(1.0, 2.0), phase(1.0, 3.0)),
        )
    }

    /// Axisymmetric plane-strain oracle: `u_r = A r + B / r`,
    /// `σ_rr = 2κA − 2μB / r²`, with `A = 1` in the matrix. Returns
    /// `[A_c, A_s, B_s, B_m]`.
    fn radial_bulk_oracle(geometry: &CoatedDisks, phases: &Phases<ElasticPhase>) -> Vector4<f64> {
        let (r1, r2) = (geometry.r1(), geometry.r2());
        let (pc, ps, pm) = (phases.core, phases.shell, phases.matrix);
        #[rustfmt::skip]
        let m = Matrix4::new(
            r1, -r1, -1.0 / r1, 0.0,
            2.0 * pc.kappa(), -2.0 * ps.kappa(), 2.0 * ps.mu() / (r1 * r1), 0.0,
            0.0, r2, 1.0 / r2, -1.0 / r2,
            0.0, 2.0 * ps.kappa(), -2.0 * ps.mu() / (r2 * r2), 2.0 * pm.mu() / (r2 * r2),
        );
        let rhs = Vector4::new(0.0, 0.0, r2, 2.0 * pm.kappa());
        m.lu().solve(&rhs).unwrap()
    }

    /// Matrix bulk modulus at which the radial oracle has no exterior term.
    fn oracle_neutral_kappa_m(
        geometry: &CoatedDisks,
        core: ElasticPhase,
        shell: ElasticPhase,
    ) -> f64 {
        let b = |km: f64| {
            let phases = Phases::new(core, shell, phase(1.0, km));
            radial_bulk_oracle(geometry, &phases)[3]
        };
        let (mut lo, mut hi) = (1e-3, 1e3);
        assert!(b(lo) * b(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if b(lo) * b(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn scratch(mu: f64, kappa: f64) -> LaurentPotentials {
        let p = phase(mu, kappa);
        LaurentPotentials::zeros(
            4,
            CoatedDisks::centered(1.0, 2.0).unwrap(),
            Phases::uniform(p),
            UniformLoad::bulk(),
        )
    }

    #[test]
    fn displacement_examples() {
        for (mu, kappa) in [(1.0, 2.0), (0.3, 7.0), (4.0, 0.5)] {
            let mut p = scratch(mu, kappa);
            for region in Region::ALL {
                p.set_phi(region, 1, c(kappa, 0.0));
            }
            for z in [c(0.3, 0.2), c(1.5, -0.7), c(-3.0, 4.0)] {
                assert!((displacement_at(&p, z) - z).norm() < 1e-14);
            }
        }
        let mut p = scratch(0.5, 2.0);
        p.set_psi(Region::Shell, 0, c(1.0, 2.0));
        let u = displacement(&p, Region::Shell, c(1.5, 0.0)).unwrap();
        assert!((u - c(-1.0, 2.0)).norm() < 1e-15);

        let mut p = scratch(1.0, 2.0);
        p.set_phi(Region::Core, 2, c(1.0, 0.0));
        p.set_psi(Region::Core, 1, c(1.0, 0.0));
        let z = c(0.5, 0.5);
        // (2 z² − z·conj(2z) − conj z) / 2
        let expected = (z * z * 2.0 - z * (z * 2.0).conj() - z.conj()) / 2.0;
        let u = displacement(&p, Region::Core, z).unwrap();
        assert!((u - expected).norm() < 1e-15);
    }

    #[test]
    fn displacement_hand_value_at_one_plus_i() {
        let mut p = LaurentPotentials::zeros(
            4,
            CoatedDisks::centered(2.0, 3.0).unwrap(),
            Phases::uniform(phase(1.0, 2.0)),
            UniformLoad::bulk(),
        );
        p.set_phi(Region::Core, 2, c(1.0, 0.0));
        p.set_psi(Region::Core, 1, c(1.0, 0.0));
        let u = displacement(&p, Region::Core, c(1.0, 1.0)).unwrap();
        assert!((u - c(-2.5, 2.5)).norm() < 1e-15, "{u}");
    }

    #[test]
    fn traction_differential_examples() {
        let km = 3.0;
        let mut p = scratch(1.0, km);
        p.set_phi(Region::Matrix, 1, c(km, 0.0));
        for dz in [c(1.0, 0.0), c(0.3, -0.8)] {
            let du = traction_differential(&p, Region::Matrix, c(2.5, 1.0), dz).unwrap();
            assert!((du - dz * (2.0 * km)).norm() < 1e-14);
        }
        let mut p = scratch(1.0, 1.0);
        p.set_phi(Region::Shell, 0, c(0.4, 0.1));
        p.set_psi(Region::Shell, 0, c(-2.0, 0.3));
        let du = traction_differential(&p, Region::Shell, c(1.5, 0.0), c(0.0, 1.0)).unwrap();
        assert_eq!(du, c(0.0, 0.0));

        let mut p = scratch(1.0, 1.0);
        p.set_phi(Region::Core, 2, c(1.0, 0.0));
        p.set_psi(Region::Core, 1, c(1.0, 0.0));
        // (2i − 2i)·1 + (i·2 + 1)·1
        let du = traction_differential(&p, Region::Core, c(0.0, 1.0), c(1.0, 0.0)).unwrap();
        assert!((du - c(1.0, 2.0)).norm() < 1e-15, "{du}");
    }

    #[test]
    fn evaluation_outside_region_is_rejected() {
        let p = scratch(1.0, 1.0);
        assert!(matches!(
            displacement(&p, Region::Core, c(1.5, 0.0)),
            Err(ElasticityError::PointOutsideRegion {
                region: Region::Core,
                ..
            })
        ));
        assert!(displacement(&p, Region::Shell, c(0.5, 0.0)).is_err());
        assert!(traction_differential(&p, Region::Matrix, c(1.0, 0.0), c(1.0, 0.0)).is_err());
        // Interface points belong to both neighbours.
        assert!(displacement(&p, Region::Core, c(0.0, 1.0)).is_ok());
        assert!(displacement(&p, Region::Shell, c(0.0, 1.0)).is_ok());
    }

    #[test]
    fn homogeneous_bulk_is_identity() {
        let kappa = 2.5;
        let g = CoatedDisks::centered(0.7, 1.3).unwrap();
        let p = solve_coated_disk_elasticity(
            &g,
            &Phases::uniform(phase(1.2, kappa)),
            &UniformLoad::bulk(),
            8,
        )
        .unwrap();
        for region in Region::ALL {
            for n in -8..=8 {
                let expected = if n == 1 { c(kappa, 0.0) } else { c(0.0, 0.0) };
                assert!(
                    (p.phi_coefficient(region, n) - expected).norm() < 1e-13,
                    "{region:?} a{n}"
                );
                assert!(
                    p.psi_coefficient(region, n).norm() < 1e-13,
                    "{region:?} b{n}"
                );
            }
        }
        for z in [c(0.1, 0.2), c(1.0, 0.5), c(-4.0, 2.0)] {
            assert!((displacement_at(&p, z) - z).norm() < 1e-13);
        }
        let ff = far_field(&p, default_radii(&g)).unwrap();
        assert!(ff.gap < 1e-13);
    }

    #[test]
    fn homogeneous_gap_vanishes_for_any_load() {
        let g = CoatedDisks::centered(1.0, 2.0).unwrap();
        let load = UniformLoad::new(Matrix2::new(0.3, -1.2, -1.2, 2.0)).unwrap();
        let p =
            solve_coated_disk_elasticity(&g, &Phases::uniform(phase(0.7, 4.0)), &load, 6).unwrap();
        let ff = far_field(&p, [3.0, 5.0]).unwrap();
        assert!(ff.gap < 1e-13 && ff.c1.norm() < 1e-14 && ff.c3.norm() < 1e-14);
    }

    #[test]
    fn block_structure_follows_the_load() {
        let (g, phases) = template();
        let bulk = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 8).unwrap();
        assert!(bulk.block_magnitude(1) > 1e-3);
        for m in 2..=8 {
            assert!(bulk.block_magnitude(m) < 1e-14, "bulk block {m}");
        }
        let shear = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::shear(), 8).unwrap();
        assert!(shear.block_magnitude(3) > 1e-3);
        for m in (1..=8).filter(|&m| m != 3) {
            assert!(shear.block_magnitude(m) < 1e-14, "shear block {m}");
        }
        for p in [&bulk, &shear] {
            assert_eq!(p.phi_coefficient(Region::Core, 0), c(0.0, 0.0));
            assert_eq!(p.psi_coefficient(Region::Matrix, 0), c(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_bad_order_and_offset_disks() {
        let (_, phases) = template();
        let g = CoatedDisks::centered(1.0, 2.0).unwrap();
        assert_eq!(
            solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 2),
            Err(ElasticityError::OrderTooSmall(2))
        );
        let off = CoatedDisks::new(1.0, 2.0, c(0.1, 0.0)).unwrap();
        assert!(matches!(
            solve_coated_disk_elasticity(&off, &phases, &UniformLoad::bulk(), 8),
            Err(ElasticityError::OffCenter(_))
        ));
    }

    #[test]
    fn bulk_solution_matches_radial_oracle() {
        let (g, phases) = template();
        let p = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 8).unwrap();
        let oracle = radial_bulk_oracle(&g, &phases);
        let bm = -p.psi_coefficient(Region::Matrix, -1) / (2.0 * phases.matrix.mu());
        assert!(
            (bm - c(oracle[3], 0.0)).norm() < 1e-12,
            "{bm} vs {}",
            oracle[3]
        );
        assert!(oracle[3].abs() > 1e-3);
        for z in [c(0.3, 0.4), c(1.2, -0.9), c(3.0, 1.0)] {
            let r = z.norm();
            let (a, b) = match p.region_of(z) {
                Region::Core => (oracle[0], 0.0),
                Region::Shell => (oracle[1], oracle[2]),
                Region::Matrix => (1.0, oracle[3]),
            };
            let expected = z * (a + b / (r * r));
            assert!((displacement_at(&p, z) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn transmission_conditions_hold_on_both_circles() {
        let g = CoatedDisks::centered(0.8, 1.7).unwrap();
        let phases = Phases::new(phase(3.0, 0.4), phase(0.6, 2.2), phase(1.4, 1.1));
        let load = UniformLoad::new(Matrix2::new(0.8, 0.35, 0.35, -0.2)).unwrap();
        let p = solve_coated_disk_elasticity(&g, &phases, &load, 8).unwrap();
        for (r, inner, outer) in [
            (0.8, Region::Core, Region::Shell),
            (1.7, Region::Shell, Region::Matrix),
        ] {
            for j in 0..64 {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 64.0;
                let z = Complex64::from_polar(r, t);
                let dz = z * c(0.0, 1.0);
                let du = displacement(&p, inner, z).unwrap() - displacement(&p, outer, z).unwrap();
                let dt = traction_differential(&p, inner, z, dz).unwrap()
                    - traction_differential(&p, outer, z, dz).unwrap();
                assert!(du.norm() < 1e-12 && dt.norm() < 1e-12, "{du} {dt}");
            }
        }
        // u − h decays like |x|⁻¹.
        for dir in [c(1.0, 0.0), c(0.6, -0.8)] {
            let gap = |r: f64| (displacement_at(&p, dir * r) - load.eval(dir * r)).norm();
            let ratio = gap(200.0) / gap(100.0);
            assert!((ratio - 0.5).abs() < 1e-3, "{ratio}");
        }
    }

    #[test]
    fn far_field_read_matches_circle_fit() {
        let (g, phases) = template();
        for load in [
            UniformLoad::bulk(),
            UniformLoad::shear(),
            UniformLoad::new(Matrix2::new(1.0, 0.4, 0.4, -0.3)).unwrap(),
        ] {
            let p = solve_coated_disk_elasticity(&g, &phases, &load, 8).unwrap();
            let ff = far_field(&p, default_radii(&g)).unwrap();
            assert!(ff.fit_discrepancy < 1e-8, "{}", ff.fit_discrepancy);
            assert!(ff.gap > 1e-3 && ff.c1.norm() > 1e-3);
        }
        let p = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::shear(), 8).unwrap();
        let ff = far_field(&p, default_radii(&g)).unwrap();
        assert!(ff.c3.norm() > 1e-3);
        assert!(far_field(&p, [1.5, 4.0]).is_err());
    }

    #[test]
    fn neutral_bulk_chain() {
        let (g, phases) = template();
        let km = oracle_neutral_kappa_m(&g, phases.core, phases.shell);
        let phases = Phases::new(phases.core, phases.shell, phase(phases.matrix.mu(), km));
        let p = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 8).unwrap();
        assert!((p.phi_coefficient(Region::Matrix, 1) - km).norm() < 1e-15);
        for n in -8..=1 {
            if n != 1 {
                assert!(p.phi_coefficient(Region::Matrix, n).norm() < 1e-12, "a{n}");
            }
            assert!(p.psi_coefficient(Region::Matrix, n).norm() < 1e-12, "b{n}");
        }
        let ff = far_field(&p, default_radii(&g)).unwrap();
        assert!(ff.gap < 1e-10 && ff.c1.norm() < 1e-12 && ff.c3.norm() < 1e-12);

        let constants = neutrality_constants(&phases);
        let shell = sample_annulus(g.r1(), g.r2(), 200, 11);
        let report = verify_shell_properties(&p, &constants, &shell).unwrap();
        assert!(
            report.antisymmetry < 1e-10 && report.laplacian < 1e-10,
            "{report:?}"
        );
        assert!(report.divergence_spread < 1e-10);
        let observed = concentric_shell_dilatation(&phases);
        assert!((report.divergence_mean - observed).abs() < 1e-10);
        let oracle = radial_bulk_oracle(&g, &phases);
        assert!((2.0 * oracle[1] - observed).abs() < 1e-10);
        // The stated α misses the observed dilatation by 4(κm − κs)/(μs + κs).
        let (s_, m_) = (phases.shell, phases.matrix);
        let offset = 4.0 * (m_.kappa() - s_.kappa()) / (s_.mu() + s_.kappa());
        assert!((report.divergence - offset.abs()).abs() < 1e-10);

        let core = sample_disk(g.r1(), 200, 12);
        let lin = verify_core_linearity(&p, &core).unwrap();
        assert!(lin.residual < 1e-10 && lin.phi_tail < 1e-10 && lin.psi_tail < 1e-10);
        assert!((lin.a - lin.predicted_a).abs() < 1e-12);
        let oracle = radial_bulk_oracle(&g, &phases);
        assert!((lin.a - oracle[0]).abs() < 1e-10);
        assert!(lin.b.norm() < 1e-12);
    }

    #[test]
    fn non_neutral_shell_divergence_is_not_constant() {
        let (g, phases) = template();
        let p = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 8).unwrap();
        let constants = neutrality_constants(&phases);
        let report =
            verify_shell_properties(&p, &constants, &sample_annulus(1.0, 2.0, 50, 3)).unwrap();
        assert!(report.divergence > 1e-3);
    }

    #[test]
    fn homogeneous_shell_and_core_checks() {
        let g = CoatedDisks::centered(1.0, 2.0).unwrap();
        let phases = Phases::uniform(phase(1.0, 2.0));
        let p = solve_coated_disk_elasticity(&g, &phases, &UniformLoad::bulk(), 8).unwrap();
        let constants = neutrality_constants(&phases);
        assert_eq!(constants.alpha, 2.0);
        let report =
            verify_shell_properties(&p, &constants, &sample_annulus(1.0, 2.0, 50, 5)).unwrap();
        assert!(report.max_residual() < 1e-13);
        let lin = verify_core_linearity(&p, &sample_disk(1.0, 50, 6)).unwrap();
        assert!((lin.a - 1.0).abs() < 1e-13 && lin.b.norm() < 1e-13);
    }

    #[test]
    fn gauge_shift_leaves_displacement_unchanged() {
        let (g, phases) = template();
        let load = UniformLoad::new(Matrix2::new(0.2, 0.9, 0.9, 1.1)).unwrap();
        let p = solve_coated_disk_elasticity(&g, &phases, &load, 6).unwrap();
        for (region, z) in [
            (Region::Core, c(0.2, 0.5)),
            (Region::Shell, c(-1.1, 0.9)),
            (Region::Matrix, c(2.0, 3.0)),
        ] {
            let shifted = p.gauge_shifted(region, c(0.7, -1.3));
            let du =
                displacement(&shifted, region, z).unwrap() - displacement(&p, region, z).unwrap();
            assert!(du.norm() < 1e-13);
            let dz = c(0.3, 0.4);
            let dt = traction_differential(&shifted, region, z, dz).unwrap()
                - traction_differential(&p, region, z, dz).unwrap();
            assert!(dt.norm() < 1e-13);
        }
    }

    #[test]
    fn laplacian_matches_finite_differences() {
        let (g, phases) = template();
        let load = UniformLoad::new(Matrix2::new(0.5, 0.3, 0.3, -0.9)).unwrap();
        let p = solve_coated_disk_elasticity(&g, &phases, &load, 8).unwrap();
        let h = 1e-3;
        for (region, z) in [(Region::Shell, c(1.2, 0.6)), (Region::Matrix, c(2.5, -1.0))] {
            let u = |w: Complex64| displacement(&p, region, w).unwrap();
            let fd =
                (u(z + h) + u(z - h) + u(z + c(0.0, h)) + u(z - c(0.0, h)) - u(z) * 4.0) / (h * h);
            let exact = displacement_laplacian(&p, region, z).unwrap();
            assert!(
                (fd - exact).norm() < 1e-5 * (1.0 + exact.norm()),
                "{fd} vs {exact}"
            );
            let (dz, dzb) = displacement_derivatives(&p, region, z).unwrap();
            let ux = (u(z + h) - u(z - h)) / (2.0 * h);
            let uy = (u(z + c(0.0, h)) - u(z - c(0.0, h))) / (2.0 * h);
            assert!(((ux - c(0.0, 1.0) * uy) / 2.0 - dz).norm() < 1e-6);
            assert!(((ux + c(0.0, 1.0) * uy) / 2.0 - dzb).norm() < 1e-6);
        }
    }
}
