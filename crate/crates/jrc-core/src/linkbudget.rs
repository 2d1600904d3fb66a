//! SINR, inter-target interference suppression, and data-rate bounds for
//! the forward and reverse channels.
//!
//! Rates are reported in bits per frame of N pulses as
//! `(N/2)·log2(1 + SINR)`; the unlabeled logarithm of the rate bounds is
//! taken base 2 throughout.

use crate::array::{broadside_doa, ArrayGeometry};
use crate::scenario::{doppler_compression, Scenario};
use crate::{JrcError, Result, SPEED_OF_LIGHT};

/// FFT/sampling context for the three-dimensional suppression product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionParams {
    pub range_fft: usize,
    pub doppler_fft: usize,
    /// Fast-time sampling rate, Hz.
    pub range_rate: f64,
    /// Slow-time (Doppler) sampling rate, Hz; the pulse repetition
    /// frequency for one-chirp-per-pulse processing.
    pub doppler_rate: f64,
    /// Sweep bandwidth, Hz.
    pub bandwidth: f64,
    /// Chirp duration, s.
    pub chirp_duration: f64,
    /// Keep the bin offsets integer (floor) as in the reference model;
    /// `false` evaluates the kernels at fractional offsets for sensitivity
    /// studies.
    pub floor_bins: bool,
}

impl SuppressionParams {
    pub fn new(
        range_fft: usize,
        doppler_fft: usize,
        range_rate: f64,
        doppler_rate: f64,
        bandwidth: f64,
        chirp_duration: f64,
    ) -> Result<Self> {
        if range_fft < 2 || doppler_fft < 2 {
            return Err(JrcError::invalid("FFT sizes must be ≥ 2"));
        }
        if range_rate <= 0.0 || doppler_rate <= 0.0 {
            return Err(JrcError::invalid("sampling rates must be positive"));
        }
        Ok(SuppressionParams {
            range_fft,
            doppler_fft,
            range_rate,
            doppler_rate,
            bandwidth,
            chirp_duration,
            floor_bins: true,
        })
    }

    /// The Table-II style context: 4096/512 FFTs at 40 MHz / PRF.
    pub fn for_scenario(scn: &Scenario) -> Result<Self> {
        SuppressionParams::new(
            4096,
            512,
            scn.envelope.sample_rate(),
            1.0 / scn.pulse_period(),
            scn.carrier.sweep_bandwidth,
            scn.pulse_period(),
        )
    }
}

/// Dirichlet kernel magnitude `|sin(π δ n) / (n sin(π δ))|` with the
/// removable singularity at integer δ resolved to 1.
pub fn dsinc(delta_norm: f64, n: usize) -> f64 {
    assert!(n >= 1, "kernel order must be ≥ 1");
    let frac = delta_norm - delta_norm.round();
    if frac.abs() < 1e-14 {
        // at integer δ the kernel magnitude is exactly 1
        return 1.0;
    }
    let num = (std::f64::consts::PI * delta_norm * n as f64).sin();
    let den = n as f64 * (std::f64::consts::PI * delta_norm).sin();
    (num / den).abs()
}

/// Total suppression `Dsinc(Δr)·Dsinc(Δv)·Dsinc(Δθ)` between two targets
/// separated by `delta_r` (m), `delta_v` (m/s), and `delta_theta` (rad).
///
/// Bin offsets follow `Δn = ⌊2 Δr B N_R / (c F_r T_s)⌋` and
/// `Δk = ⌊Δf N_D / F_d⌋` with `Δf = 2 Δv f_c / c`; the angle factor is the
/// steering-vector correlation `|a^H(0) a(Δθ)| / L`.
pub fn pairwise_suppression(
    params: &SuppressionParams,
    geom: &ArrayGeometry,
    f_c: f64,
    delta_r: f64,
    delta_v: f64,
    delta_theta: f64,
) -> Result<f64> {
    if delta_r < 0.0 || delta_v < 0.0 || delta_theta < 0.0 {
        return Err(JrcError::invalid("separations must be nonnegative"));
    }
    let c = SPEED_OF_LIGHT;
    let dn_raw = 2.0 * delta_r * params.bandwidth * params.range_fft as f64
        / (c * params.range_rate * params.chirp_duration);
    let df = 2.0 * delta_v * f_c / c;
    let dk_raw = df * params.doppler_fft as f64 / params.doppler_rate;
    let (dn, dk) = if params.floor_bins {
        (dn_raw.floor(), dk_raw.floor())
    } else {
        (dn_raw, dk_raw)
    };
    let range_factor = dsinc(dn / params.range_fft as f64, params.range_fft);
    let doppler_factor = dsinc(dk / params.doppler_fft as f64, params.doppler_fft);
    let angle_factor =
        geom.array_correlation(broadside_doa(0.0)?, broadside_doa(delta_theta)?, f_c);
    Ok(range_factor * doppler_factor * angle_factor)
}

/// Spectral gain factor 𝔾 of the target response: the energy of the
/// Doppler-scaled, response-filtered spectrum relative to the unfiltered
/// one, `∫|X(f/T)G(f)|² df / ∫|X(f)|² df` over `[-B, B]` (trapezoid).
pub fn response_gain<G: Fn(f64) -> f64>(scn: &Scenario, velocity: f64, filter: G) -> Result<f64> {
    let compression = doppler_compression(velocity)?;
    let b = scn.carrier.sweep_bandwidth;
    let nodes = 801usize;
    let h = 2.0 * b / (nodes - 1) as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..nodes {
        let f = -b + h * i as f64;
        let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        let x_scaled = scn.envelope.spectrum_magnitude(f / compression) * filter(f);
        let x_plain = scn.envelope.spectrum_magnitude(f);
        num += w * h * x_scaled * x_scaled;
        den += w * h * x_plain * x_plain;
    }
    if den == 0.0 {
        return Err(JrcError::Internal("envelope spectrum has no energy".into()));
    }
    Ok(num / den)
}

/// Forward SINR at target `k` with the excluded-neighbor diagnostic.
#[derive(Debug, Clone)]
pub struct SinrBreakdown {
    pub sinr: f64,
    /// Neighbor indices dropped because they share the target's range
    /// (the proximity model is singular there).
    pub excluded_neighbors: Vec<usize>,
}

/// SINR of the forward link to target `k`, with free-space proximity
/// weights `λ²𝔾_j α_j γ_j / (16π²(r_k - r_j)²)` for the neighbor
/// interference and per-target response gains `gk` (1 for a flat target
/// response).
pub fn forward_sinr_detailed(scn: &Scenario, k: usize, gk: &[f64]) -> Result<SinrBreakdown> {
    let target = scn
        .targets
        .get(k)
        .ok_or_else(|| JrcError::invalid(format!("no target {k}")))?;
    if gk.len() != scn.targets.len() {
        return Err(JrcError::invalid("response gain per target required"));
    }
    let lambda = SPEED_OF_LIGHT / scn.carrier_frequency();
    let rho_t = scn.tx_power / target.rx_noise_variance;
    let alpha_k = scn.pathloss.alpha(target.range);
    let mut interference = 0.0;
    let mut excluded = Vec::new();
    for (j, other) in scn.targets.iter().enumerate() {
        if j == k {
            continue;
        }
        let dr = target.range - other.range;
        if dr == 0.0 {
            excluded.push(j);
            continue;
        }
        let alpha_j = scn.pathloss.alpha(other.range);
        interference += lambda * lambda * gk[j] * alpha_j * other.effective_rcs()
            / (16.0 * std::f64::consts::PI * std::f64::consts::PI * dr * dr);
    }
    let denom = 1.0 + target.jammer_variance / target.rx_noise_variance + rho_t * interference;
    Ok(SinrBreakdown {
        sinr: rho_t * alpha_k * target.effective_rcs() * gk[k] / denom,
        excluded_neighbors: excluded,
    })
}

/// Convenience wrapper with flat target responses.
pub fn forward_sinr(scn: &Scenario, k: usize) -> Result<f64> {
    let gk = vec![1.0; scn.targets.len()];
    Ok(forward_sinr_detailed(scn, k, &gk)?.sinr)
}

/// SINR of the reverse (backscatter) link from target `k`: round-trip
/// pathloss in the numerator and suppression-weighted interference; jammer
/// terms are omitted on this channel.
pub fn reverse_sinr(
    scn: &Scenario,
    k: usize,
    params: &SuppressionParams,
    gk: &[f64],
) -> Result<f64> {
    let target = scn
        .targets
        .get(k)
        .ok_or_else(|| JrcError::invalid(format!("no target {k}")))?;
    if gk.len() != scn.targets.len() {
        return Err(JrcError::invalid("response gain per target required"));
    }
    let rho_t = scn.tx_snr();
    let alpha_k = scn.pathloss.alpha(target.range);
    let f_c = scn.carrier_frequency();
    let mut interference = 0.0;
    for (j, other) in scn.targets.iter().enumerate() {
        if j == k {
            continue;
        }
        let suppression = pairwise_suppression(
            params,
            &scn.geometry,
            f_c,
            (target.range - other.range).abs(),
            (target.velocity - other.velocity).abs(),
            (target.azimuth - other.azimuth).abs(),
        )?;
        let alpha_j = scn.pathloss.alpha(other.range);
        interference += suppression * alpha_j * alpha_j * other.effective_rcs() * gk[j];
    }
    let denom = 1.0 + rho_t * interference;
    Ok(rho_t * alpha_k * alpha_k * target.effective_rcs() * gk[k] / denom)
}

/// Link direction of a rate bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// Lower bound on the data rate of one link, bits per frame of N pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBound {
    pub target: usize,
    pub direction: Direction,
    pub sinr: f64,
    pub rate_bits: f64,
}

fn rate_from_sinr(n: usize, sinr: f64) -> f64 {
    n as f64 / 2.0 * (1.0 + sinr).log2()
}

/// Forward-channel rate bound `(N/2)·log2(1 + ρ_f)`.
pub fn forward_rate(scn: &Scenario, k: usize) -> Result<RateBound> {
    let sinr = forward_sinr(scn, k)?;
    Ok(RateBound {
        target: k,
        direction: Direction::Forward,
        sinr,
        rate_bits: rate_from_sinr(scn.num_pulses, sinr),
    })
}

/// Reverse-channel rate bound `(N/2)·log2(1 + ρ_r)`.
pub fn reverse_rate(scn: &Scenario, k: usize, params: &SuppressionParams) -> Result<RateBound> {
    let gk = vec![1.0; scn.targets.len()];
    let sinr = reverse_sinr(scn, k, params, &gk)?;
    Ok(RateBound {
        target: k,
        direction: Direction::Reverse,
        sinr,
        rate_bits: rate_from_sinr(scn.num_pulses, sinr),
    })
}

/// One row of the range-sweep rate table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub range_m: f64,
    pub target: usize,
    pub forward_bits: f64,
    pub reverse_bits: f64,
    pub sinr_fwd_db: f64,
    pub sinr_rev_db: f64,
}

/// Two static unit-RCS targets forming a right angle at target 1: target 1
/// at range `r1`, target 2 at `sqrt(r1² + sep²)`. Single antenna at both
/// ends, free-space pathloss, transmit SNR `rho_t_db`.
pub fn right_angle_scenario(r1: f64, separation: f64, rho_t_db: f64, num_pulses: usize) -> Scenario {
    use crate::scenario::Target;
    use crate::waveform::{EnvelopeFamily, FmcwCarrier, PulseEnvelope};

    let ts = 100e-6;
    let bandwidth = 100e6;
    let fc = 24e9;
    let beta = (2f64.ln() / 2.0).sqrt() / 100e3;
    let carrier = FmcwCarrier::new(fc - bandwidth / 2.0, bandwidth, ts, 0.0).unwrap();
    let envelope =
        PulseEnvelope::make(EnvelopeFamily::Gaussian { beta }, ts, 40e6).unwrap();
    let geometry = ArrayGeometry::ula(1, 1.0).unwrap();
    let r2 = (r1 * r1 + separation * separation).sqrt();
    let theta2 = (separation / r2).asin();
    let targets = vec![
        Target::new(r1, 0.0, 0.0, 0.0, 1.0).unwrap(),
        Target::new(r2, 0.0, theta2, 0.0, 1.0).unwrap(),
    ];
    Scenario::new(
        carrier,
        envelope,
        num_pulses,
        10f64.powf(rho_t_db / 10.0),
        1.0,
        geometry,
        targets,
        0,
    )
    .unwrap()
}

/// Rate bounds for the right-angle layout over a range grid.
pub fn right_angle_rates(
    r_grid: &[f64],
    separation: f64,
    rho_t_db: f64,
    num_pulses: usize,
) -> Result<Vec<RateRow>> {
    let mut rows = Vec::with_capacity(r_grid.len() * 2);
    for &r in r_grid {
        let scn = right_angle_scenario(r, separation, rho_t_db, num_pulses);
        let params = SuppressionParams::for_scenario(&scn)?;
        for k in 0..2 {
            let fwd = forward_rate(&scn, k)?;
            let rev = reverse_rate(&scn, k, &params)?;
            rows.push(RateRow {
                range_m: scn.targets[k].range,
                target: k,
                forward_bits: fwd.rate_bits,
                reverse_bits: rev.rate_bits,
                sinr_fwd_db: 10.0 * fwd.sinr.log10(),
                sinr_rev_db: 10.0 * rev.sinr.log10(),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn dsinc_limit_and_zeros() {
        assert_eq!(dsinc(0.0, 64), 1.0);
        assert_eq!(dsinc(3.0, 64), 1.0); // periodic peak
        for k in [1usize, 5, 31] {
            let v = dsinc(k as f64 / 64.0, 64);
            assert!(v < 1e-12, "kernel zero at {k}/64 gave {v}");
        }
    }

    #[test]
    fn dsinc_matches_exponential_sum_oracle() {
        let n = 48usize;
        for delta in [1.0 / (2.0 * n as f64), 0.013, 0.31] {
            let acc: Complex64 = (0..n)
                .map(|m| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 * delta))
                .sum();
            assert_relative_eq!(dsinc(delta, n), acc.norm() / n as f64, epsilon = 1e-12);
        }
    }

    fn table_params() -> SuppressionParams {
        SuppressionParams::new(4096, 512, 40e6, 1e4, 100e6, 100e-6).unwrap()
    }

    #[test]
    fn zero_separation_means_no_suppression() {
        let geom = ArrayGeometry::ula(12, 0.00625).unwrap();
        let s = pairwise_suppression(&table_params(), &geom, 24e9, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(s, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integer_bin_offsets_suppress_completely() {
        let geom = ArrayGeometry::ula(1, 1.0).unwrap();
        // 10 m → bin offset 6 (integer) → range kernel sits on a zero
        let s = pairwise_suppression(&table_params(), &geom, 24e9, 10.0, 0.0, 0.0).unwrap();
        assert!(s < 1e-12, "suppression {s}");
    }

    #[test]
    fn suppression_factors_match_componentwise_oracle() {
        // Table-II two-target geometry at frame start
        let scn = crate::scenario::presets::table2(64, 0);
        let params = SuppressionParams::for_scenario(&scn).unwrap();
        let t1 = &scn.targets[0];
        let t2 = &scn.targets[1];
        let dr = (t1.range - t2.range).abs();
        let dv = (t1.velocity - t2.velocity).abs();
        let dth = (t1.azimuth - t2.azimuth).abs();
        let got =
            pairwise_suppression(&params, &scn.geometry, scn.carrier_frequency(), dr, dv, dth)
                .unwrap();
        // oracle: three kernels computed independently
        let c = SPEED_OF_LIGHT;
        let dn = (2.0 * dr * 100e6 * 4096.0 / (c * 40e6 * 1e-4)).floor();
        let df = 2.0 * dv * 24e9 / c;
        let dk = (df * 512.0 / 1e4).floor();
        let f1 = dsinc(dn / 4096.0, 4096);
        let f2 = dsinc(dk / 512.0, 512);
        let f3 = scn.geometry.array_correlation(
            broadside_doa(0.0).unwrap(),
            broadside_doa(dth).unwrap(),
            scn.carrier_frequency(),
        );
        assert_relative_eq!(got, f1 * f2 * f3, epsilon = 1e-12);
    }

    #[test]
    fn unfloored_bins_expose_fractional_leakage() {
        let geom = ArrayGeometry::ula(1, 1.0).unwrap();
        let mut p = table_params();
        // 0.5 m → 0.34 raw bins: floored to 0 (no suppression Dsinc = 1)
        let floored = pairwise_suppression(&p, &geom, 24e9, 0.5, 0.0, 0.0).unwrap();
        assert_relative_eq!(floored, 1.0, epsilon = 1e-12);
        p.floor_bins = false;
        let fractional = pairwise_suppression(&p, &geom, 24e9, 0.5, 0.0, 0.0).unwrap();
        assert!(fractional < 1.0);
    }

    #[test]
    fn forward_sinr_collapses_to_closed_form() {
        // single target, no jammer, flat response: ρ_T κA / (4π r²)
        let mut scn = right_angle_scenario(30.0, 10.0, 100.0, 64);
        scn.targets.truncate(1);
        scn.targets[0].rcs_decomposition = Some((0.8, 1.25));
        let rho_t = scn.tx_power / scn.targets[0].rx_noise_variance;
        let expected = rho_t * 0.8 * 1.25 / (4.0 * std::f64::consts::PI * 30.0 * 30.0);
        assert_relative_eq!(forward_sinr(&scn, 0).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn infinite_jammer_kills_the_forward_link() {
        let mut scn = right_angle_scenario(30.0, 10.0, 100.0, 64);
        scn.targets[0].jammer_variance = 1e30;
        assert!(forward_sinr(&scn, 0).unwrap() < 1e-15);
    }

    #[test]
    fn coincident_neighbor_is_excluded_with_diagnostic() {
        let mut scn = right_angle_scenario(30.0, 10.0, 100.0, 64);
        scn.targets[1].range = scn.targets[0].range;
        let gk = vec![1.0; 2];
        let detail = forward_sinr_detailed(&scn, 0, &gk).unwrap();
        assert_eq!(detail.excluded_neighbors, vec![1]);
        assert!(detail.sinr.is_finite());
    }

    #[test]
    fn rate_endpoints_are_exact() {
        assert_eq!(rate_from_sinr(64, 0.0), 0.0);
        assert_relative_eq!(rate_from_sinr(64, 1.0), 32.0, epsilon = 1e-12);
    }

    #[test]
    fn reverse_rate_trails_forward_rate_at_distance() {
        let scn = right_angle_scenario(40.0, 10.0, 100.0, 64);
        let params = SuppressionParams::for_scenario(&scn).unwrap();
        for k in 0..2 {
            let f = forward_rate(&scn, k).unwrap();
            let r = reverse_rate(&scn, k, &params).unwrap();
            assert!(
                r.rate_bits < f.rate_bits,
                "target {k}: reverse {} ≥ forward {}",
                r.rate_bits,
                f.rate_bits
            );
        }
    }

    #[test]
    fn forward_rate_of_near_target_declines_with_range() {
        let grid: Vec<f64> = (0..19).map(|i| 10.0 + 5.0 * i as f64).collect();
        let rows = right_angle_rates(&grid, 10.0, 100.0, 64).unwrap();
        let t1: Vec<&RateRow> = rows.iter().filter(|r| r.target == 0).collect();
        for w in t1.windows(2) {
            assert!(
                w[1].forward_bits <= w[0].forward_bits + 1e-9,
                "forward rate rose between {} m and {} m",
                w[0].range_m,
                w[1].range_m
            );
        }
    }

    #[test]
    fn sinr_is_monotone_in_interference_terms() {
        let mut scn = right_angle_scenario(25.0, 8.0, 100.0, 64);
        let base = forward_sinr(&scn, 0).unwrap();
        scn.targets[0].jammer_variance = 5.0;
        let jammed = forward_sinr(&scn, 0).unwrap();
        assert!(jammed < base);
        scn.targets[1].rcs = 100.0;
        let crowded = forward_sinr(&scn, 0).unwrap();
        assert!(crowded < jammed);
    }

    #[test]
    fn flat_response_gain_is_unity() {
        let scn = right_angle_scenario(25.0, 8.0, 100.0, 64);
        let g = response_gain(&scn, 0.0, |_| 1.0).unwrap();
        assert_relative_eq!(g, 1.0, epsilon = 1e-6);
        // and the Doppler-scaled version stays within the tolerance for
        // terrestrial speeds
        let g_moving = response_gain(&scn, 30.0, |_| 1.0).unwrap();
        assert_relative_eq!(g_moving, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn suppression_lives_in_unit_interval() {
        let geom = ArrayGeometry::ula(12, 0.00625).unwrap();
        let p = table_params();
        let mut x = 0.05f64;
        while x < 40.0 {
            let s = pairwise_suppression(&p, &geom, 24e9, x, x / 10.0, x / 100.0).unwrap();
            assert!((0.0..=1.0 + 1e-12).contains(&s), "B_s = {s} at {x}");
            x *= 1.7;
        }
    }
}
