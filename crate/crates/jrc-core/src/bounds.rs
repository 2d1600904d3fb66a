//! Target ambiguity functions, Fisher information, and Cramér-Rao bounds.
//!
//! The per-target receive mean is `μ = a_i b_ki γ α² ζ · x(T·u)` with
//! `u = ξ - 2τ - φ_l`, so the parameter derivatives weight the waveform
//! samples elementwise:
//!
//! * range:    `∂μ/∂r = +C_r · (x ∘ t) · A`,  `C_r = 4π²T²/(β²c)`
//! * velocity: `∂μ/∂v = -C_v · (x ∘ t ∘ t) · A`, `C_v = 4π²c/(β²(c-2v)²)`
//! * azimuth:  `∂μ/∂φ = +C_φ · (x ∘ t ∘ Φ) · A`, `C_φ = 2π²T²/β²`
//!
//! where `Φ` is the azimuth gradient of the element delays and `A` the
//! amplitude factor. Fisher information entries are the noise-weighted
//! inner products of these vectors summed over pulses and samples; the
//! closed forms assume the Gaussian envelope (its log-derivative is linear
//! in time). Non-Gaussian envelopes fall back to a finite-difference
//! information matrix built from the same receive mean.

use nalgebra::{DMatrix, Matrix3};
use std::f64::consts::PI;

use crate::scenario::{doppler_compression, Scenario};
use crate::waveform::EnvelopeFamily;
use crate::{JrcError, Result, SPEED_OF_LIGHT};

/// Noise covariance `R_n` with its inverse cached.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCov {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl NoiseCov {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(JrcError::invalid("noise covariance must be square"));
        }
        let sym_err = (&matrix - matrix.transpose()).abs().max();
        if sym_err > 1e-10 * matrix.abs().max().max(1e-300) {
            return Err(JrcError::invalid("noise covariance must be symmetric"));
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| JrcError::invalid("noise covariance is singular"))?;
        Ok(NoiseCov { matrix, inverse })
    }

    /// `σ² I_L`.
    pub fn white(dim: usize, variance: f64) -> Result<Self> {
        if variance <= 0.0 {
            return Err(JrcError::invalid("noise variance must be positive"));
        }
        NoiseCov::new(DMatrix::from_diagonal_element(dim, dim, variance))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Weighted inner product `aᵀ R_n⁻¹ b`.
    pub fn weighted_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let l = self.dim();
        let mut acc = 0.0;
        for r in 0..l {
            let mut row = 0.0;
            for c in 0..l {
                row += self.inverse[(r, c)] * b[c];
            }
            acc += a[r] * row;
        }
        acc
    }
}

/// Per-antenna sample vectors for one target at one observation instant.
#[derive(Debug, Clone)]
pub struct TafInputs {
    /// Waveform samples x across the array.
    pub waveform: Vec<f64>,
    /// Relative arrival times t (s).
    pub arrival_times: Vec<f64>,
    /// Azimuth derivative of the element delays Φ (s/rad).
    pub angle_gradient: Vec<f64>,
    /// Noise covariance shared by the TAF pair.
    pub noise: NoiseCov,
}

impl TafInputs {
    fn check_pair(&self, other: &TafInputs) -> Result<()> {
        let l = self.waveform.len();
        if l != self.arrival_times.len()
            || l != self.angle_gradient.len()
            || other.waveform.len() != l
            || other.arrival_times.len() != l
            || other.angle_gradient.len() != l
        {
            return Err(JrcError::invalid("TAF inputs must share the antenna count"));
        }
        if self.noise.dim() != l {
            return Err(JrcError::invalid("noise covariance does not match antennas"));
        }
        Ok(())
    }
}

/// Which parameter's ambiguity weighting to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TafKind {
    Range,
    Velocity,
    Angle,
}

fn weight_vector(kind: TafKind, inp: &TafInputs) -> Vec<f64> {
    match kind {
        TafKind::Range => inp
            .waveform
            .iter()
            .zip(&inp.arrival_times)
            .map(|(x, t)| x * t)
            .collect(),
        TafKind::Velocity => inp
            .waveform
            .iter()
            .zip(&inp.arrival_times)
            .map(|(x, t)| x * t * t)
            .collect(),
        TafKind::Angle => inp
            .waveform
            .iter()
            .zip(inp.arrival_times.iter().zip(&inp.angle_gradient))
            .map(|(x, (t, p))| x * t * p)
            .collect(),
    }
}

fn taf(kind: TafKind, m: &TafInputs, n: &TafInputs) -> Result<f64> {
    m.check_pair(n)?;
    let wm = weight_vector(kind, m);
    let wn = weight_vector(kind, n);
    Ok(m.noise.weighted_inner(&wn, &wm))
}

/// Range TAF `[x_n ∘ t_n]ᵀ R_n⁻¹ [x_m ∘ t_m]`.
pub fn taf_range(m: &TafInputs, n: &TafInputs) -> Result<f64> {
    taf(TafKind::Range, m, n)
}

/// Velocity TAF with `x ∘ t ∘ t` weighting.
pub fn taf_velocity(m: &TafInputs, n: &TafInputs) -> Result<f64> {
    taf(TafKind::Velocity, m, n)
}

/// Azimuth TAF with `x ∘ t ∘ Φ` weighting.
pub fn taf_angle(m: &TafInputs, n: &TafInputs) -> Result<f64> {
    taf(TafKind::Angle, m, n)
}

/// Full kinematic tuple for the generalized TAF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams {
    pub range: f64,
    pub velocity: f64,
    pub azimuth: f64,
    pub elevation: f64,
}

/// Builds TAF input vectors from a scenario's envelope, geometry, and
/// noise model.
pub struct TafBuilder<'a> {
    scn: &'a Scenario,
    noise: NoiseCov,
}

impl<'a> TafBuilder<'a> {
    pub fn new(scn: &'a Scenario) -> Result<Self> {
        let noise = NoiseCov::white(scn.geometry.num_elements(), scn.noise_variance.max(1e-300))?;
        Ok(TafBuilder { scn, noise })
    }

    pub fn with_noise(scn: &'a Scenario, noise: NoiseCov) -> Result<Self> {
        if noise.dim() != scn.geometry.num_elements() {
            return Err(JrcError::invalid("noise covariance does not match geometry"));
        }
        Ok(TafBuilder { scn, noise })
    }

    /// Inputs for a target with parameters `p` observed at pulse-local
    /// time `xi` (seconds; the pulse of a target at range r is centered
    /// at `ξ = 2r/c`).
    pub fn inputs(&self, p: TargetParams, xi: f64) -> Result<TafInputs> {
        let doa = crate::array::DirectionOfArrival::new(p.azimuth, p.elevation)?;
        let compression = doppler_compression(p.velocity)?;
        let tau2 = 2.0 * p.range / SPEED_OF_LIGHT;
        let delays = self.scn.geometry.element_delays(doa);
        let gradient = self.scn.geometry.delay_azimuth_gradient(doa);
        let times: Vec<f64> = delays.iter().map(|d| xi - tau2 - d).collect();
        let waveform = times
            .iter()
            .map(|&u| self.scn.envelope.eval(u * compression))
            .collect();
        Ok(TafInputs {
            waveform,
            arrival_times: times,
            angle_gradient: gradient,
            noise: self.noise.clone(),
        })
    }

    /// Generalized TAF between two parameter tuples at one observation
    /// instant; reduces to the azimuth TAF when the tuples share range and
    /// velocity.
    pub fn taf_generalized(&self, p1: TargetParams, p2: TargetParams, xi: f64) -> Result<f64> {
        let a = self.inputs(p1, xi)?;
        let b = self.inputs(p2, xi)?;
        taf_angle(&a, &b)
    }

    /// TAF integrated over the pulse support (sum over the envelope's
    /// sample grid centered between the two targets).
    pub fn taf_integrated(&self, kind: TafKind, p1: TargetParams, p2: TargetParams) -> Result<f64> {
        let center = (p1.range + p2.range) / SPEED_OF_LIGHT; // mean of 2r/c
        let mut acc = 0.0;
        for t in self.scn.envelope.times() {
            let a = self.inputs(p1, center + t)?;
            let b = self.inputs(p2, center + t)?;
            acc += taf(kind, &a, &b)?;
        }
        Ok(acc)
    }

    /// Expectation of a TAF over a uniform prior on one parameter axis
    /// (Range → range interval, Velocity → velocity interval, Angle →
    /// azimuth interval), tensor-grid quadrature with `grid_n` points per
    /// axis, excluding the diagonal where the two draws coincide.
    pub fn expected_taf(
        &self,
        kind: TafKind,
        base: TargetParams,
        interval: (f64, f64),
        grid_n: usize,
    ) -> Result<f64> {
        if grid_n < 2 {
            return Err(JrcError::invalid("expectation grid needs ≥ 2 points"));
        }
        if interval.1 <= interval.0 {
            return Err(JrcError::invalid("expectation interval must be increasing"));
        }
        let h = (interval.1 - interval.0) / (grid_n - 1) as f64;
        let at = |v: f64| -> TargetParams {
            let mut p = base;
            match kind {
                TafKind::Range => p.range = v,
                TafKind::Velocity => p.velocity = v,
                TafKind::Angle => p.azimuth = v,
            }
            p
        };
        // Precompute the noise-weighted waveform matrices per grid point.
        let times: Vec<f64> = self.scn.envelope.times().collect();
        let l = self.scn.geometry.num_elements();
        let mut mats: Vec<Vec<f64>> = Vec::with_capacity(grid_n);
        let center_tau = |p: &TargetParams| 2.0 * p.range / SPEED_OF_LIGHT;
        let common_center: f64 = {
            // shared observation grid spanning the whole interval
            let lo = at(interval.0);
            let hi = at(interval.1);
            (center_tau(&lo) + center_tau(&hi)) / 2.0
        };
        for g in 0..grid_n {
            let p = at(interval.0 + h * g as f64);
            let mut w = vec![0.0; l * times.len()];
            for (s, &t) in times.iter().enumerate() {
                let inp = self.inputs(p, common_center + t)?;
                let wv = weight_vector(kind, &inp);
                for (li, v) in wv.iter().enumerate() {
                    w[s * l + li] = *v;
                }
            }
            mats.push(w);
        }
        // apply R⁻¹ once per grid point
        let rinv_mats: Vec<Vec<f64>> = mats
            .iter()
            .map(|w| {
                let mut out = vec![0.0; w.len()];
                for s in 0..times.len() {
                    let seg = &w[s * l..(s + 1) * l];
                    for r in 0..l {
                        let mut acc = 0.0;
                        for c in 0..l {
                            acc += self.noise.inverse[(r, c)] * seg[c];
                        }
                        out[s * l + r] = acc;
                    }
                }
                out
            })
            .collect();
        let quad_w = |i: usize| if i == 0 || i == grid_n - 1 { 0.5 } else { 1.0 };
        let width = interval.1 - interval.0;
        let density = 1.0 / (width * width);
        let mut acc = 0.0;
        for i in 0..grid_n {
            for j in 0..grid_n {
                if i == j {
                    continue;
                }
                let dot: f64 = mats[i]
                    .iter()
                    .zip(&rinv_mats[j])
                    .map(|(a, b)| a * b)
                    .sum();
                acc += quad_w(i) * quad_w(j) * h * h * density * dot;
            }
        }
        Ok(acc)
    }
}

/// Per-target Fisher information and Cramér-Rao bounds.
#[derive(Debug, Clone)]
pub struct CrbReport {
    /// 3×3 information matrix over (range, velocity, azimuth), cross
    /// terms included.
    pub fim: Matrix3<f64>,
    /// CRBs from the full block inverse, m² / (m/s)² / rad².
    pub crb_range: f64,
    pub crb_velocity: f64,
    pub crb_azimuth: f64,
    /// Reciprocal-diagonal bounds (cross terms ignored).
    pub crb_range_nc: f64,
    pub crb_velocity_nc: f64,
    pub crb_azimuth_nc: f64,
    /// True when the block inverse exists; otherwise the CRBs are +∞.
    pub invertible: bool,
    pub with_cross_terms: bool,
}

/// Hadamard-weight sums over the envelope grid and antennas for one
/// target: `S_ab = Σ_s w_aᵀ R⁻¹ w_b`.
struct WeightSums {
    rr: f64,
    vv: f64,
    pp: f64,
    rv: f64,
    rp: f64,
    vp: f64,
    /// `Σ xᵀR⁻¹x`, `Σ (x∘t)ᵀR⁻¹x`, `Σ (x∘t∘t)ᵀR⁻¹x`, and
    /// `Σ (x∘t∘Φ)ᵀR⁻¹x`, used by the symbol extension.
    xx: f64,
    xt_x: f64,
    xtt_x: f64,
    xtp_x: f64,
}

fn weight_sums(scn: &Scenario, k: usize, noise: &NoiseCov) -> Result<WeightSums> {
    let target = &scn.targets[k];
    let compression = doppler_compression(target.velocity)?;
    let delays = scn.geometry.element_delays(target.doa());
    let gradient = scn.geometry.delay_azimuth_gradient(target.doa());
    let l = scn.geometry.num_elements();
    let mut sums = WeightSums {
        rr: 0.0,
        vv: 0.0,
        pp: 0.0,
        rv: 0.0,
        rp: 0.0,
        vp: 0.0,
        xx: 0.0,
        xt_x: 0.0,
        xtt_x: 0.0,
        xtp_x: 0.0,
    };
    let mut wr = vec![0.0; l];
    let mut wv = vec![0.0; l];
    let mut wp = vec![0.0; l];
    let mut wx = vec![0.0; l];
    for t in scn.envelope.times() {
        for li in 0..l {
            let u = t - delays[li];
            let x = scn.envelope.eval(u * compression);
            wx[li] = x;
            wr[li] = x * u;
            wv[li] = x * u * u;
            wp[li] = x * u * gradient[li];
        }
        sums.rr += noise.weighted_inner(&wr, &wr);
        sums.vv += noise.weighted_inner(&wv, &wv);
        sums.pp += noise.weighted_inner(&wp, &wp);
        sums.rv += noise.weighted_inner(&wr, &wv);
        sums.rp += noise.weighted_inner(&wr, &wp);
        sums.vp += noise.weighted_inner(&wv, &wp);
        sums.xx += noise.weighted_inner(&wx, &wx);
        sums.xt_x += noise.weighted_inner(&wr, &wx);
        sums.xtt_x += noise.weighted_inner(&wv, &wx);
        sums.xtp_x += noise.weighted_inner(&wp, &wx);
    }
    Ok(sums)
}

fn gaussian_beta(scn: &Scenario) -> Result<f64> {
    match scn.envelope.family() {
        EnvelopeFamily::Gaussian { beta } => Ok(beta),
        _ => Err(JrcError::invalid(
            "closed-form information matrix assumes a Gaussian envelope",
        )),
    }
}

/// Derivative scale constants for target `k`.
struct Chain {
    c_r: f64,
    c_v: f64,
    c_p: f64,
    /// Σ_i (a_i b_ki)² · (γ α² ζ_eff)², the squared amplitude over the
    /// frame.
    amp2: f64,
}

fn chain_constants(scn: &Scenario, k: usize, beta: f64) -> Result<Chain> {
    let target = &scn.targets[k];
    let compression = doppler_compression(target.velocity)?;
    let c = SPEED_OF_LIGHT;
    let b2 = beta * beta;
    let c_r = 4.0 * PI * PI * compression * compression / (b2 * c);
    let c_v = {
        let d = c - 2.0 * target.velocity;
        4.0 * PI * PI * c / (b2 * d * d)
    };
    let c_p = 2.0 * PI * PI * compression * compression / b2;
    let mut amp2 = 0.0;
    for i in 0..scn.num_pulses {
        let a = scn.amplitude(i) * scn.backscatter(k, i);
        amp2 += a * a;
    }
    let gain = target.rcs * target.rcs
        * scn.pathloss.alpha(target.range).powi(4)
        * target.tap_energy();
    Ok(Chain {
        c_r,
        c_v,
        c_p,
        amp2: amp2 * gain,
    })
}

/// Closed-form 3×3 Fisher information for target `k` (Gaussian envelope).
pub fn closed_form_fim(scn: &Scenario, k: usize) -> Result<Matrix3<f64>> {
    let beta = gaussian_beta(scn)?;
    let noise = NoiseCov::white(scn.geometry.num_elements(), scn.noise_variance)?;
    closed_form_fim_with_noise(scn, k, &noise, beta)
}

fn closed_form_fim_with_noise(
    scn: &Scenario,
    k: usize,
    noise: &NoiseCov,
    beta: f64,
) -> Result<Matrix3<f64>> {
    if k >= scn.targets.len() {
        return Err(JrcError::invalid(format!("no target {k}")));
    }
    let s = weight_sums(scn, k, noise)?;
    let ch = chain_constants(scn, k, beta)?;
    let f_rr = ch.amp2 * ch.c_r * ch.c_r * s.rr;
    let f_vv = ch.amp2 * ch.c_v * ch.c_v * s.vv;
    let f_pp = ch.amp2 * ch.c_p * ch.c_p * s.pp;
    let f_rv = -ch.amp2 * ch.c_r * ch.c_v * s.rv;
    let f_rp = ch.amp2 * ch.c_r * ch.c_p * s.rp;
    let f_vp = -ch.amp2 * ch.c_v * ch.c_p * s.vp;
    Ok(Matrix3::new(
        f_rr, f_rv, f_rp, //
        f_rv, f_vv, f_vp, //
        f_rp, f_vp, f_pp,
    ))
}

/// Numeric information matrix: central-difference Jacobian of the
/// target-centered receive mean. Used for envelope families without a
/// closed form.
pub fn numeric_fim(scn: &Scenario, k: usize) -> Result<Matrix3<f64>> {
    if k >= scn.targets.len() {
        return Err(JrcError::invalid(format!("no target {k}")));
    }
    let t = &scn.targets[k];
    let beta_scale = scn.envelope.duration() / 4.0;
    let steps = [
        1e-4 * beta_scale * SPEED_OF_LIGHT,
        1e-6 * SPEED_OF_LIGHT,
        1e-4,
    ];
    let base = [t.range, t.velocity, t.azimuth];
    let mut jac: Vec<Vec<f64>> = Vec::with_capacity(3);
    for (pi, h) in steps.iter().enumerate() {
        let mut hi = base;
        let mut lo = base;
        hi[pi] += h;
        lo[pi] -= h;
        let m_hi = target_centered_mean(scn, k, hi[0], hi[1], hi[2])?;
        let m_lo = target_centered_mean(scn, k, lo[0], lo[1], lo[2])?;
        jac.push(
            m_hi.iter()
                .zip(&m_lo)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect(),
        );
    }
    let inv_sigma = 1.0 / scn.noise_variance;
    let mut fim = Matrix3::zeros();
    for a in 0..3 {
        for b in 0..3 {
            let dot: f64 = jac[a].iter().zip(&jac[b]).map(|(x, y)| x * y).sum();
            fim[(a, b)] = dot * inv_sigma;
        }
    }
    Ok(fim)
}

/// Noise-free receive mean of target `k` over all pulses, with the sample
/// grid locked to the target's unperturbed delay so parameter
/// perturbations move the pulse inside a fixed window.
pub fn target_centered_mean(
    scn: &Scenario,
    k: usize,
    range: f64,
    velocity: f64,
    azimuth: f64,
) -> Result<Vec<f64>> {
    let target = &scn.targets[k];
    let doa = crate::array::DirectionOfArrival::new(azimuth, target.elevation)?;
    let compression = doppler_compression(velocity)?;
    let delays = scn.geometry.element_delays(doa);
    let (eps, e) = scn.pathloss.scale_exponent();
    let alpha2 = eps * eps * range.powf(-2.0 * e);
    let zeta = target.tap_amplitude_sum();
    // pulse delay relative to the unperturbed target
    let dshift = 2.0 * (range - target.range) / SPEED_OF_LIGHT;
    let l = scn.geometry.num_elements();
    let times: Vec<f64> = scn.envelope.times().collect();
    let mut mean = Vec::with_capacity(scn.num_pulses * l * times.len());
    for i in 0..scn.num_pulses {
        let a = scn.amplitude(i) * scn.backscatter(k, i);
        let gain = a * target.rcs * alpha2 * zeta;
        for li in 0..l {
            for &t in &times {
                let u = t - dshift - delays[li];
                mean.push(gain * scn.envelope.eval(u * compression));
            }
        }
    }
    Ok(mean)
}

/// Computes the information block and CRBs for target `k`, choosing the
/// closed form for Gaussian envelopes and the numeric path otherwise.
pub fn crb_block(scn: &Scenario, k: usize) -> Result<CrbReport> {
    let fim = match scn.envelope.family() {
        EnvelopeFamily::Gaussian { .. } => closed_form_fim(scn, k)?,
        _ => numeric_fim(scn, k)?,
    };
    Ok(report_from_fim(fim))
}

fn report_from_fim(fim: Matrix3<f64>) -> CrbReport {
    let nc = |d: f64| if d > 0.0 { 1.0 / d } else { f64::INFINITY };
    match fim.try_inverse() {
        Some(inv) => CrbReport {
            fim,
            crb_range: inv[(0, 0)],
            crb_velocity: inv[(1, 1)],
            crb_azimuth: inv[(2, 2)],
            crb_range_nc: nc(fim[(0, 0)]),
            crb_velocity_nc: nc(fim[(1, 1)]),
            crb_azimuth_nc: nc(fim[(2, 2)]),
            invertible: true,
            with_cross_terms: true,
        },
        None => CrbReport {
            fim,
            crb_range: f64::INFINITY,
            crb_velocity: f64::INFINITY,
            crb_azimuth: f64::INFINITY,
            crb_range_nc: nc(fim[(0, 0)]),
            crb_velocity_nc: nc(fim[(1, 1)]),
            crb_azimuth_nc: nc(fim[(2, 2)]),
            invertible: false,
            with_cross_terms: true,
        },
    }
}

/// Reverse-channel extension: information carried by the backscatter
/// symbols `b_ki` and their coupling into the kinematic block.
#[derive(Debug, Clone)]
pub struct ReverseFimExtension {
    /// Per-symbol information `F_bb[i]` (the symbol block is diagonal).
    pub symbol_information: Vec<f64>,
    /// Cross information rows `F_{θ,b}` for θ = range, velocity, azimuth.
    pub cross: [Vec<f64>; 3],
    /// Radar-only CRB for range (reference).
    pub crb_range_radar_only: f64,
    /// Range CRB after accounting for the unknown symbols (Schur
    /// complement of the symbol block).
    pub crb_range_extended: f64,
    /// `crb_range_extended / crb_range_radar_only` (≥ 1).
    pub inflation_factor: f64,
}

/// Builds the reverse-channel FIM extension for target `k`.
pub fn jrc_reverse_fim_extension(scn: &Scenario, k: usize) -> Result<ReverseFimExtension> {
    let beta = gaussian_beta(scn)?;
    let noise = NoiseCov::white(scn.geometry.num_elements(), scn.noise_variance)?;
    let fim = closed_form_fim_with_noise(scn, k, &noise, beta)?;
    let s = weight_sums(scn, k, &noise)?;
    let ch = chain_constants(scn, k, beta)?;
    let target = &scn.targets[k];
    let gain = target.rcs * target.rcs
        * scn.pathloss.alpha(target.range).powi(4)
        * target.tap_energy();

    let n = scn.num_pulses;
    let mut symbol_information = Vec::with_capacity(n);
    let mut cross = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for i in 0..n {
        let a2 = scn.amplitude(i) * scn.amplitude(i);
        let b = scn.backscatter(k, i);
        symbol_information.push(a2 * gain * s.xx);
        // ∂μ/∂b ∝ x, ∂μ/∂r ∝ +C_r b (x∘t), etc.
        cross[0].push(a2 * b * gain * ch.c_r * s.xt_x);
        cross[1].push(-a2 * b * gain * ch.c_v * s.xtt_x);
        cross[2].push(a2 * b * gain * ch.c_p * s.xtp_x);
    }

    // Schur complement: F_kin - C D⁻¹ Cᵀ with D the diagonal symbol block.
    let mut correction = Matrix3::zeros();
    for i in 0..n {
        let d = symbol_information[i];
        if d <= 0.0 {
            continue;
        }
        for a in 0..3 {
            for bidx in 0..3 {
                correction[(a, bidx)] += cross[a][i] * cross[bidx][i] / d;
            }
        }
    }
    let effective = fim - correction;
    let radar_only = report_from_fim(fim);
    let extended = report_from_fim(effective);
    let inflation = if radar_only.crb_range > 0.0 && radar_only.crb_range.is_finite() {
        extended.crb_range / radar_only.crb_range
    } else {
        f64::NAN
    };
    Ok(ReverseFimExtension {
        symbol_information,
        cross,
        crb_range_radar_only: radar_only.crb_range,
        crb_range_extended: extended.crb_range,
        inflation_factor: inflation,
    })
}
