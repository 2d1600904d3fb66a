//! Receive array geometries, propagation delays, steering vectors, and
//! eigen-beamformer design.
//!
//! The per-element delay for a source at azimuth φ and elevation θ follows
//! the direction-cosine form
//! `φ_l = (cosφ cosθ x_l + sinφ cosθ y_l + sinθ z_l) / c`,
//! with φ measured from the +x axis. Positive delay means the wavefront
//! arrives later at that element.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{JrcError, Result, SPEED_OF_LIGHT};

/// Array geometry as explicit element coordinates in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    positions: Vec<[f64; 3]>,
    kind: ArrayKind,
}

/// What the geometry was constructed as; `Custom` for free-form layouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrayKind {
    Ula { spacing: f64 },
    Uca { radius: f64 },
    Custom,
}

/// Direction of arrival: azimuth φ ∈ [-π, π) from the +x axis, elevation
/// θ ∈ [-π/2, π/2] from the x-y plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionOfArrival {
    pub azimuth: f64,
    pub elevation: f64,
}

impl DirectionOfArrival {
    pub fn new(azimuth: f64, elevation: f64) -> Result<Self> {
        if !(-PI..PI).contains(&azimuth) {
            return Err(JrcError::invalid(format!(
                "azimuth {azimuth} outside [-pi, pi)"
            )));
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&elevation) {
            return Err(JrcError::invalid(format!(
                "elevation {elevation} outside [-pi/2, pi/2]"
            )));
        }
        Ok(DirectionOfArrival { azimuth, elevation })
    }

    /// Unit direction cosines of the source.
    pub fn direction_cosines(&self) -> [f64; 3] {
        let (sa, ca) = self.azimuth.sin_cos();
        let (se, ce) = self.elevation.sin_cos();
        [ca * ce, sa * ce, se]
    }
}

impl ArrayGeometry {
    /// Uniform linear array of `n` elements along the x axis, centered at
    /// the origin.
    pub fn ula(n: usize, spacing: f64) -> Result<Self> {
        if n == 0 {
            return Err(JrcError::invalid("array needs at least one element"));
        }
        if !(spacing > 0.0) {
            return Err(JrcError::invalid("element spacing must be positive"));
        }
        let mid = (n as f64 - 1.0) / 2.0;
        let positions = (0..n)
            .map(|l| [(l as f64 - mid) * spacing, 0.0, 0.0])
            .collect();
        Ok(ArrayGeometry {
            positions,
            kind: ArrayKind::Ula { spacing },
        })
    }

    /// Uniform circular array of `n` elements in the x-y plane, centered at
    /// the origin.
    pub fn uca(n: usize, radius: f64) -> Result<Self> {
        if n == 0 {
            return Err(JrcError::invalid("array needs at least one element"));
        }
        if !(radius > 0.0) {
            return Err(JrcError::invalid("array radius must be positive"));
        }
        let positions = (0..n)
            .map(|l| {
                let ang = 2.0 * PI * l as f64 / n as f64;
                [radius * ang.cos(), radius * ang.sin(), 0.0]
            })
            .collect();
        Ok(ArrayGeometry {
            positions,
            kind: ArrayKind::Uca { radius },
        })
    }

    /// Free-form geometry from explicit coordinates.
    pub fn custom(positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.is_empty() {
            return Err(JrcError::invalid("array needs at least one element"));
        }
        if positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(JrcError::invalid("element positions must be finite"));
        }
        Ok(ArrayGeometry {
            positions,
            kind: ArrayKind::Custom,
        })
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    pub fn num_elements(&self) -> usize {
        self.positions.len()
    }

    /// Per-element propagation delays in seconds for a plane wave from
    /// `doa`: `φ_l = p_k · p_l / c`.
    pub fn element_delays(&self, doa: DirectionOfArrival) -> Vec<f64> {
        let p = doa.direction_cosines();
        self.positions
            .iter()
            .map(|pos| (p[0] * pos[0] + p[1] * pos[1] + p[2] * pos[2]) / SPEED_OF_LIGHT)
            .collect()
    }

    /// Partial derivative of each element delay with respect to azimuth,
    /// seconds per radian: `Φ_l = cosθ (y_l cosφ - x_l sinφ) / c`.
    pub fn delay_azimuth_gradient(&self, doa: DirectionOfArrival) -> Vec<f64> {
        let (sa, ca) = doa.azimuth.sin_cos();
        let ce = doa.elevation.cos();
        self.positions
            .iter()
            .map(|pos| ce * (pos[1] * ca - pos[0] * sa) / SPEED_OF_LIGHT)
            .collect()
    }

    /// Steering vector at frequency `f`: entries `exp(-j 2π f φ_l)`.
    pub fn steering_vector(&self, doa: DirectionOfArrival, f: f64) -> Vec<Complex64> {
        self.element_delays(doa)
            .iter()
            .map(|&d| Complex64::from_polar(1.0, -2.0 * PI * f * d))
            .collect()
    }

    /// Normalized steering-vector correlation `|a^H(doa1) a(doa2)| / L`.
    pub fn array_correlation(
        &self,
        doa1: DirectionOfArrival,
        doa2: DirectionOfArrival,
        f: f64,
    ) -> f64 {
        let a1 = self.steering_vector(doa1, f);
        let a2 = self.steering_vector(doa2, f);
        let acc: Complex64 = a1.iter().zip(&a2).map(|(x, y)| x.conj() * y).sum();
        acc.norm() / self.num_elements() as f64
    }
}

/// Amplitude taper applied to designed beam weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Taper {
    None,
    /// Taylor window with `nbar` near-in sidelobes held at `sll_db` (a
    /// positive number; sidelobes sit at -sll_db).
    Taylor { nbar: usize, sll_db: f64 },
}

/// Bank of beamformer weight vectors for a field of view.
#[derive(Debug, Clone)]
pub struct BeamformerBank {
    /// Final (possibly tapered) weights, one length-L vector per beam,
    /// ordered by descending eigenvalue of the FoV covariance.
    pub weights: Vec<Vec<Complex64>>,
    /// Pre-taper orthonormal eigenvector weights.
    pub raw_weights: Vec<Vec<Complex64>>,
    /// Eigenvalues matching `raw_weights`.
    pub eigenvalues: Vec<f64>,
    pub fov: (f64, f64),
    pub taper: Taper,
}

impl BeamformerBank {
    pub fn num_beams(&self) -> usize {
        self.weights.len()
    }

    pub fn num_elements(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Beam response magnitude `|w^H a(θ)|` of beam `m` at `doa`.
    pub fn response(&self, geom: &ArrayGeometry, m: usize, doa: DirectionOfArrival, f: f64) -> f64 {
        let a = geom.steering_vector(doa, f);
        let acc: Complex64 = self.weights[m]
            .iter()
            .zip(&a)
            .map(|(w, s)| w.conj() * s)
            .sum();
        acc.norm()
    }
}

/// Designs an eigen-beamformer for the field of view `fov = (θ1, θ2)`
/// (azimuth, radians) at frequency `f`.
///
/// The FoV covariance `Q = ∫ w(θ) a(θ) a^H(θ) dθ` is computed by a
/// composite trapezoid rule, starting at 721 nodes and doubling until every
/// eigenvalue moves by less than 1e-8 relative. The bank is the top-M
/// eigenvectors ordered by eigenvalue, each phase-normalized so its first
/// non-negligible entry is real positive; the taper multiplies elementwise
/// afterwards.
pub fn design_beamformer<W: Fn(f64) -> f64>(
    geom: &ArrayGeometry,
    fov: (f64, f64),
    num_beams: usize,
    weight_fn: W,
    taper: Taper,
    f: f64,
) -> Result<BeamformerBank> {
    let l = geom.num_elements();
    if num_beams > l {
        return Err(JrcError::invalid(format!(
            "requested {num_beams} beams from {l} elements"
        )));
    }
    if fov.0 > fov.1 {
        return Err(JrcError::invalid("FoV bounds must satisfy θ1 ≤ θ2"));
    }

    let q = if fov.0 == fov.1 {
        // Degenerate FoV: point covariance a(θ1) a^H(θ1).
        let a = steering_doa(geom, fov.0, f)?;
        DMatrix::from_fn(l, l, |r, c| a[r] * a[c].conj())
    } else {
        let mut nodes = 721usize;
        let mut q = integrate_fov(geom, fov, &weight_fn, f, nodes)?;
        let mut eig_prev = hermitian_eigenvalues(&q);
        loop {
            nodes *= 2;
            let q_next = integrate_fov(geom, fov, &weight_fn, f, nodes)?;
            let eig_next = hermitian_eigenvalues(&q_next);
            let scale = eig_next.iter().cloned().fold(f64::MIN, f64::max).abs();
            let converged = eig_prev
                .iter()
                .zip(&eig_next)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * scale.max(1e-300));
            q = q_next;
            if converged || nodes > 100_000 {
                break;
            }
            eig_prev = eig_next;
        }
        q
    };

    // Hermitian sanity check before the eigensolve.
    let herm_err = (0..l)
        .flat_map(|r| (0..l).map(move |c| (r, c)))
        .map(|(r, c)| (q[(r, c)] - q[(c, r)].conj()).norm())
        .fold(0.0f64, f64::max);
    let trace: f64 = (0..l).map(|i| q[(i, i)].re).sum();
    if herm_err > 1e-10 * (trace / l as f64).max(1e-300) {
        return Err(JrcError::Internal(format!(
            "FoV covariance lost Hermitian symmetry: err {herm_err:e}"
        )));
    }

    let sym = nalgebra::SymmetricEigen::new(q);
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[b].partial_cmp(&sym.eigenvalues[a]).unwrap());

    let mut raw_weights = Vec::with_capacity(num_beams);
    let mut eigenvalues = Vec::with_capacity(num_beams);
    for &idx in order.iter().take(num_beams) {
        let col = sym.eigenvectors.column(idx);
        let mut w: Vec<Complex64> = col.iter().cloned().collect();
        phase_normalize(&mut w);
        raw_weights.push(w);
        eigenvalues.push(sym.eigenvalues[idx]);
    }

    let weights = match taper {
        Taper::None => raw_weights.clone(),
        Taper::Taylor { nbar, sll_db } => {
            let win = taylor_window(l, nbar, sll_db);
            raw_weights
                .iter()
                .map(|w| w.iter().zip(&win).map(|(c, t)| c * t).collect())
                .collect()
        }
    };

    Ok(BeamformerBank {
        weights,
        raw_weights,
        eigenvalues,
        fov,
        taper,
    })
}

/// Designs a bank of beam-pointing weights on the orthogonal direction
/// grid of a ULA.
///
/// Each beam is the dominant eigenvector of a degenerate (single-angle)
/// FoV covariance, i.e. the normalized steering vector, placed at
/// direction-cosine spacing `λ/(d·L)` centered on the FoV. On that grid
/// the pre-taper weights are exactly orthogonal, and the tapered response
/// of every beam carries the taper's own sidelobe level.
pub fn design_grid_beams(
    geom: &ArrayGeometry,
    fov: (f64, f64),
    num_beams: usize,
    taper: Taper,
    f: f64,
) -> Result<BeamformerBank> {
    let l = geom.num_elements();
    if num_beams > l {
        return Err(JrcError::invalid(format!(
            "requested {num_beams} beams from {l} elements"
        )));
    }
    let spacing = match geom.kind() {
        ArrayKind::Ula { spacing } => spacing,
        _ => {
            return Err(JrcError::invalid(
                "grid beam banks require a uniform linear array",
            ))
        }
    };
    if fov.0 > fov.1 {
        return Err(JrcError::invalid("FoV bounds must satisfy θ1 ≤ θ2"));
    }

    // FoV is azimuth relative to broadside (+y); the element axis is x, so
    // the direction cosine along the array is u = cos(az) = -sin(θ).
    let u_edges = (-(fov.1.sin()), -(fov.0.sin()));
    let center = (u_edges.0 + u_edges.1) / 2.0;
    let lambda = SPEED_OF_LIGHT / f;
    let du = lambda / (spacing * l as f64);

    let mut raw_weights = Vec::with_capacity(num_beams);
    for m in 0..num_beams {
        let u = center + (m as f64 - (num_beams as f64 - 1.0) / 2.0) * du;
        if u.abs() > 1.0 {
            return Err(JrcError::invalid(format!(
                "beam grid leaves visible space (u = {u}); reduce beams or FoV"
            )));
        }
        // u = cos(az_abs) = -sin(θ) for the x-axis ULA with broadside +y
        let theta = -(u.asin());
        let mut w: Vec<Complex64> = steering_doa(geom, theta, f)?
            .iter()
            .map(|c| c / (l as f64).sqrt())
            .collect();
        phase_normalize(&mut w);
        raw_weights.push(w);
    }

    let weights = match taper {
        Taper::None => raw_weights.clone(),
        Taper::Taylor { nbar, sll_db } => {
            let win = taylor_window(l, nbar, sll_db);
            raw_weights
                .iter()
                .map(|w| w.iter().zip(&win).map(|(c, t)| c * t).collect())
                .collect()
        }
    };
    Ok(BeamformerBank {
        weights,
        raw_weights,
        eigenvalues: vec![l as f64; num_beams],
        fov,
        taper,
    })
}

/// Steering vector for an azimuth measured from broadside (+y axis, i.e.
/// absolute azimuth π/2 + θ), which is how beamformer FoV angles are given.
fn steering_doa(geom: &ArrayGeometry, theta: f64, f: f64) -> Result<Vec<Complex64>> {
    Ok(geom.steering_vector(broadside_doa(theta)?, f))
}

/// Maps a broadside-relative azimuth to a `DirectionOfArrival`.
pub fn broadside_doa(theta: f64) -> Result<DirectionOfArrival> {
    let mut az = PI / 2.0 + theta;
    if az >= PI {
        az -= 2.0 * PI;
    } else if az < -PI {
        az += 2.0 * PI;
    }
    DirectionOfArrival::new(az, 0.0)
}

fn integrate_fov<W: Fn(f64) -> f64>(
    geom: &ArrayGeometry,
    fov: (f64, f64),
    weight_fn: &W,
    f: f64,
    nodes: usize,
) -> Result<DMatrix<Complex64>> {
    let l = geom.num_elements();
    let h = (fov.1 - fov.0) / (nodes - 1) as f64;
    let mut q = DMatrix::from_element(l, l, Complex64::new(0.0, 0.0));
    for i in 0..nodes {
        let theta = fov.0 + h * i as f64;
        let w = weight_fn(theta);
        if w < 0.0 {
            return Err(JrcError::invalid("FoV weight function must be nonnegative"));
        }
        let coeff = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        let a = steering_doa(geom, theta, f)?;
        for r in 0..l {
            for c in 0..l {
                q[(r, c)] += (w * coeff * h) * (a[r] * a[c].conj());
            }
        }
    }
    Ok(q)
}

fn hermitian_eigenvalues(q: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(q.clone())
        .eigenvalues
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// Rotates the vector's global phase so the first entry with magnitude
/// above 1e-9 of the peak becomes real positive. Makes eigenvector output
/// deterministic across solvers.
fn phase_normalize(w: &mut [Complex64]) {
    let peak = w.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if let Some(first) = w.iter().find(|c| c.norm() > 1e-9 * peak) {
        let rot = first.conj() / first.norm();
        for c in w.iter_mut() {
            *c *= rot;
        }
    }
}

/// Taylor window of length `n` with `nbar` controlled sidelobes at
/// `-sll_db` dB.
pub fn taylor_window(n: usize, nbar: usize, sll_db: f64) -> Vec<f64> {
    let r = 10f64.powf(sll_db / 20.0);
    let a = r.acosh() / PI;
    let sigma2 = nbar as f64 * nbar as f64 / (a * a + (nbar as f64 - 0.5).powi(2));

    let coeff = |m: usize| -> f64 {
        let mf = m as f64;
        let mut num = 1.0;
        for k in 1..nbar {
            num *= 1.0 - mf * mf / (sigma2 * (a * a + (k as f64 - 0.5).powi(2)));
        }
        let mut den = 1.0;
        for k in 1..nbar {
            if k != m {
                den *= 1.0 - mf * mf / (k as f64 * k as f64);
            }
        }
        let sign = if m % 2 == 0 { -1.0 } else { 1.0 };
        sign * num / (2.0 * den)
    };

    let fm: Vec<f64> = (1..nbar).map(coeff).collect();
    (0..n)
        .map(|i| {
            let x = (i as f64 - (n as f64 - 1.0) / 2.0) / n as f64;
            let mut w = 1.0;
            for (m, f) in fm.iter().enumerate() {
                w += 2.0 * f * (2.0 * PI * (m as f64 + 1.0) * x).cos();
            }
            w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const F24: f64 = 24e9;

    fn lambda(f: f64) -> f64 {
        SPEED_OF_LIGHT / f
    }

    fn doa(az_deg: f64, el_deg: f64) -> DirectionOfArrival {
        DirectionOfArrival::new(az_deg.to_radians(), el_deg.to_radians()).unwrap()
    }

    #[test]
    fn broadside_ula_delays_vanish() {
        let geom = ArrayGeometry::ula(8, 0.00625).unwrap();
        let d = geom.element_delays(doa(90.0, 0.0));
        assert!(d.iter().all(|&v| v.abs() < 1e-18));
    }

    #[test]
    fn single_element_at_origin_has_zero_delay() {
        let geom = ArrayGeometry::custom(vec![[0.0, 0.0, 0.0]]).unwrap();
        for az in [-170.0, 0.0, 45.0, 120.0] {
            assert_eq!(geom.element_delays(doa(az, 30.0))[0], 0.0);
        }
    }

    #[test]
    fn ula_delays_match_dot_product_oracle() {
        // 16-element ULA at λ/2 for 24 GHz, φ = 0, θ = π/4. Oracle is the
        // per-element p_k · p_l / c evaluated longhand.
        let spacing = lambda(F24) / 2.0;
        let geom = ArrayGeometry::ula(16, spacing).unwrap();
        let d = geom.element_delays(doa(0.0, 45.0));
        for (l, pos) in geom.positions().iter().enumerate() {
            let expected = pos[0] * (PI / 4.0).cos() / SPEED_OF_LIGHT;
            assert_relative_eq!(d[l], expected, epsilon = 1e-24);
        }
    }

    #[test]
    fn delay_scales_linearly_with_positions() {
        let geom = ArrayGeometry::ula(5, 0.01).unwrap();
        let scaled = ArrayGeometry::custom(
            geom.positions().iter().map(|p| [3.0 * p[0], 3.0 * p[1], 3.0 * p[2]]).collect(),
        )
        .unwrap();
        let look = doa(25.0, 10.0);
        let d1 = geom.element_delays(look);
        let d2 = scaled.element_delays(look);
        for (a, b) in d1.iter().zip(&d2) {
            assert_relative_eq!(3.0 * a, *b, epsilon = 1e-24);
        }
    }

    #[test]
    fn steering_vector_is_unit_modulus_with_norm_l() {
        let geom = ArrayGeometry::uca(12, 0.05).unwrap();
        let a = geom.steering_vector(doa(33.0, 5.0), F24);
        for c in &a {
            assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-12);
        }
        let self_corr: Complex64 = a.iter().map(|c| c.conj() * c).sum();
        assert_relative_eq!(self_corr.re, 12.0, epsilon = 1e-12);
        assert_relative_eq!(
            geom.array_correlation(doa(33.0, 5.0), doa(33.0, 5.0), F24),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_delay_direction_gives_all_ones() {
        let geom = ArrayGeometry::ula(6, 0.01).unwrap();
        let a = geom.steering_vector(doa(90.0, 0.0), F24);
        for c in &a {
            assert_relative_eq!(c.re, 1.0, epsilon = 1e-12);
            assert!(c.im.abs() < 1e-12);
        }
    }

    #[test]
    fn half_wavelength_ula_correlation_matches_dirichlet_form() {
        // For a centered λ/2 ULA, a^H(90°)a(az)/L is the Dirichlet kernel in
        // u = sin-offset space (geometric series oracle).
        let l = 16usize;
        let spacing = lambda(F24) / 2.0;
        let geom = ArrayGeometry::ula(l, spacing).unwrap();
        let broadside = doa(90.0, 0.0);
        for az_deg in [60.0, 75.0, 100.0] {
            let other = doa(az_deg, 0.0);
            let got = geom.array_correlation(broadside, other, F24);
            // geometric series: |Σ exp(jπ k cos(az))| / L
            let psi = PI * (az_deg as f64).to_radians().cos();
            let acc: Complex64 = (0..l)
                .map(|k| Complex64::from_polar(1.0, psi * k as f64))
                .sum();
            assert_relative_eq!(got, acc.norm() / l as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn correlation_vanishes_at_first_dirichlet_null() {
        // First null of the L-point kernel: cos(az) = 2/L away from
        // broadside in u-space.
        let l = 16usize;
        let geom = ArrayGeometry::ula(l, lambda(F24) / 2.0).unwrap();
        let u_null = 2.0 / l as f64;
        let az = u_null.acos();
        let got =
            geom.array_correlation(doa(90.0, 0.0), DirectionOfArrival::new(az, 0.0).unwrap(), F24);
        assert!(got < 1e-10, "correlation at first null = {got}");
    }

    #[test]
    fn rotating_geometry_and_doa_preserves_correlation() {
        let geom = ArrayGeometry::ula(10, 0.007).unwrap();
        let rot = 0.7f64;
        let rotated = ArrayGeometry::custom(
            geom.positions()
                .iter()
                .map(|p| {
                    [
                        p[0] * rot.cos() - p[1] * rot.sin(),
                        p[0] * rot.sin() + p[1] * rot.cos(),
                        p[2],
                    ]
                })
                .collect(),
        )
        .unwrap();
        let (az1, az2) = (0.3f64, 0.9f64);
        let base = geom.array_correlation(
            DirectionOfArrival::new(az1, 0.1).unwrap(),
            DirectionOfArrival::new(az2, 0.1).unwrap(),
            F24,
        );
        let moved = rotated.array_correlation(
            DirectionOfArrival::new(az1 + rot, 0.1).unwrap(),
            DirectionOfArrival::new(az2 + rot, 0.1).unwrap(),
            F24,
        );
        assert_relative_eq!(base, moved, epsilon = 1e-10);
    }

    #[test]
    fn uca_has_higher_out_of_beam_correlation_than_ula() {
        // ULA at λ/2 vs UCA with πλ/2 arc spacing (radius 4λ), L = 16,
        // reference steered broadside at 45° elevation; average correlation
        // over azimuth offsets outside the main beam.
        let l = 16usize;
        let lam = 0.0125;
        let f = SPEED_OF_LIGHT / lam;
        let ula = ArrayGeometry::ula(l, lam / 2.0).unwrap();
        let uca = ArrayGeometry::uca(l, 4.0 * lam).unwrap();
        let reference = doa(90.0, 45.0);
        let mean_corr = |geom: &ArrayGeometry| -> f64 {
            let mut acc = 0.0;
            let mut count = 0usize;
            let mut off = -60.0f64;
            while off <= 60.0 {
                if off.abs() > 10.0 {
                    acc += geom.array_correlation(reference, doa(90.0 + off, 45.0), f);
                    count += 1;
                }
                off += 1.0;
            }
            acc / count as f64
        };
        assert!(
            mean_corr(&uca) > mean_corr(&ula),
            "UCA {} vs ULA {}",
            mean_corr(&uca),
            mean_corr(&ula)
        );
    }

    #[test]
    fn degenerate_fov_returns_normalized_steering_vector() {
        let geom = ArrayGeometry::ula(8, 0.00625).unwrap();
        let az = 0.4f64;
        let bank = design_beamformer(&geom, (az, az), 1, |_| 1.0, Taper::None, F24).unwrap();
        let a = geom.steering_vector(broadside_doa(az).unwrap(), F24);
        let l = geom.num_elements() as f64;
        // dominant eigenvector equals a(θ)/√L up to unit phase
        let w = &bank.raw_weights[0];
        let inner: Complex64 = w.iter().zip(&a).map(|(x, y)| x.conj() * y).sum();
        assert_relative_eq!(inner.norm(), l.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn grid_beams_are_exactly_orthogonal_and_taylor_tapered() {
        // Rehearsal of the beam bank used by the receiver: beams on the
        // orthogonal direction grid, -35 dB Taylor taper.
        let l = 12usize;
        let geom = ArrayGeometry::ula(l, lambda(F24) / 2.0).unwrap();
        let fov = (-(50f64.to_radians()), 48f64.to_radians());
        let bank =
            design_grid_beams(&geom, fov, 8, Taper::Taylor { nbar: 4, sll_db: 35.0 }, F24)
                .unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let inner: Complex64 = bank.raw_weights[i]
                    .iter()
                    .zip(&bank.raw_weights[j])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((inner.norm() - expected).abs() < 1e-12);
            }
        }
        // Every beam's peak sidelobe (beyond its first nulls) stays below
        // -30 dB across visible space.
        for m in 0..8 {
            let resp = |theta: f64| bank.response(&geom, m, broadside_doa(theta).unwrap(), F24);
            let scan: Vec<f64> = (0..2881)
                .map(|i| -PI / 2.0 + PI * i as f64 / 2880.0)
                .map(resp)
                .collect();
            let (pk_i, pk) = scan
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, v)| (i, *v))
                .unwrap();
            let mut li = pk_i;
            while li > 0 && scan[li - 1] < scan[li] {
                li -= 1;
            }
            let mut ri = pk_i;
            while ri + 1 < scan.len() && scan[ri + 1] < scan[ri] {
                ri += 1;
            }
            let side = scan[..li]
                .iter()
                .chain(&scan[ri + 1..])
                .fold(0.0f64, |m, &v| m.max(v));
            let level = 20.0 * (side / pk).log10();
            assert!(level <= -30.0, "beam {m} sidelobe {level} dB");
        }
    }

    #[test]
    fn beam_weights_are_orthonormal_before_taper() {
        let geom = ArrayGeometry::ula(12, 0.0078).unwrap();
        let bank = design_beamformer(
            &geom,
            (-(50f64.to_radians()), 48f64.to_radians()),
            8,
            |_| 1.0,
            Taper::Taylor { nbar: 4, sll_db: 35.0 },
            F24,
        )
        .unwrap();
        for i in 0..bank.raw_weights.len() {
            for j in 0..bank.raw_weights.len() {
                let inner: Complex64 = bank.raw_weights[i]
                    .iter()
                    .zip(&bank.raw_weights[j])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (inner.norm() - expected).abs() < 1e-10,
                    "beams {i},{j}: {inner}"
                );
            }
        }
    }

    #[test]
    fn covariance_eigenvalues_are_nonnegative_and_sum_to_trace() {
        let geom = ArrayGeometry::ula(12, 0.0078).unwrap();
        let fov = (-(50f64.to_radians()), 48f64.to_radians());
        let bank = design_beamformer(&geom, fov, 12, |_| 1.0, Taper::None, F24).unwrap();
        // trace of Q = L × FoV width for unit weight and unit-modulus entries
        let trace = 12.0 * (fov.1 - fov.0);
        let sum: f64 = bank.eigenvalues.iter().sum();
        assert_relative_eq!(sum, trace, max_relative = 1e-8);
        let top = bank.eigenvalues[0];
        for ev in &bank.eigenvalues {
            assert!(*ev >= -1e-10 * top, "negative eigenvalue {ev}");
        }
    }

    #[test]
    fn too_many_beams_is_rejected() {
        let geom = ArrayGeometry::ula(4, 0.01).unwrap();
        assert!(design_beamformer(&geom, (0.0, 1.0), 5, |_| 1.0, Taper::None, F24).is_err());
    }

    #[test]
    fn taylor_window_matches_reference_values() {
        // Frozen oracle: scipy.signal.windows.taylor(16, nbar=4, sll=35,
        // norm=False).
        let win = taylor_window(16, 4, 35.0);
        let expected = [
            0.29543333, 0.42142284, 0.63889674, 0.8984517, 1.15696806, 1.38405887, 1.55562154,
            1.64914692,
        ];
        for (i, e) in expected.iter().enumerate() {
            assert_relative_eq!(win[i], *e, max_relative = 1e-7);
            assert_relative_eq!(win[15 - i], *e, max_relative = 1e-7);
        }
    }

    #[test]
    fn taylor_window_tapers_uniform_array_sidelobes() {
        // Conventional steered beam with the -35 dB / nbar 4 window: peak
        // sidelobe beyond the first pattern null must sit near the design
        // level.
        let l = 16usize;
        let win = taylor_window(l, 4, 35.0);
        let pattern = |u: f64| -> f64 {
            let acc: Complex64 = (0..l)
                .map(|k| {
                    Complex64::from_polar(win[k], PI * u * (k as f64 - (l as f64 - 1.0) / 2.0))
                })
                .sum();
            acc.norm()
        };
        let peak = pattern(0.0);
        // Walk out of the mainlobe to the first local minimum.
        let du = 5e-4;
        let mut u = du;
        while pattern(u + du) < pattern(u) {
            u += du;
        }
        let mut worst_sidelobe = 0.0f64;
        let mut s = u + du;
        while s <= 1.0 {
            worst_sidelobe = worst_sidelobe.max(pattern(s));
            s += du;
        }
        let level_db = 20.0 * (worst_sidelobe / peak).log10();
        assert!(level_db < -30.0, "taylor sidelobe at {level_db} dB");
    }
}
