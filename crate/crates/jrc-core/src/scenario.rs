//! Canonical description of radar, channel, and targets, plus received
//! signal synthesis.
//!
//! A [`Scenario`] is the single source of truth for a run. Echoes can be
//! synthesized two ways: [`Scenario::synthesize_rx`] produces the plain
//! delayed/compressed-envelope receive model used by the estimation-bound
//! oracles, and [`Scenario::synthesize_rx_rf`] produces the FMCW-modulated
//! complex baseband (carrier Doppler and steering phases included) that the
//! receiver pipeline consumes.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{ArrayGeometry, DirectionOfArrival};
use crate::waveform::{FmcwCarrier, PulseEnvelope};
use crate::{JrcError, Result, SPEED_OF_LIGHT};

/// Two-way pathloss model: amplitude factor `α = ε · r^{-e}` per traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pathloss {
    /// `α = 1 / (4π r²)`.
    FreeSpace,
    /// General `α = scale · r^{-exponent}`.
    Exponent { scale: f64, exponent: f64 },
}

impl Pathloss {
    /// One-way amplitude factor at range `r`.
    pub fn alpha(&self, r: f64) -> f64 {
        match *self {
            Pathloss::FreeSpace => 1.0 / (4.0 * std::f64::consts::PI * r * r),
            Pathloss::Exponent { scale, exponent } => scale * r.powf(-exponent),
        }
    }

    /// The `(ε, e)` pair of the `α = ε r^{-e}` form.
    pub fn scale_exponent(&self) -> (f64, f64) {
        match *self {
            Pathloss::FreeSpace => (1.0 / (4.0 * std::f64::consts::PI), 2.0),
            Pathloss::Exponent { scale, exponent } => (scale, exponent),
        }
    }
}

/// How extended-target taps enter the synthesized echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapMode {
    /// All tap energy collapses into one point reflection (coherent sum of
    /// tap amplitudes at zero extra delay).
    SinglePoint,
    /// Each tap contributes at its own delay; sub-sample delays are
    /// realized by the envelope's band-limited interpolation.
    ExplicitTaps,
}

/// One radar target with kinematics, reflectivity, and backscatter data.
#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    /// Slant range, m.
    pub range: f64,
    /// Radial velocity, m/s, positive receding.
    pub velocity: f64,
    /// Azimuth, rad, measured from the +x axis.
    pub azimuth: f64,
    /// Elevation, rad.
    pub elevation: f64,
    /// Reflection coefficient γ (includes RCS), m².
    pub rcs: f64,
    /// Optional κ·A decomposition of the RCS: (aperture efficiency, area).
    pub rcs_decomposition: Option<(f64, f64)>,
    /// Tap-delay response entries (ζ_p, t_p seconds). Never empty.
    pub taps: Vec<(f64, f64)>,
    /// Per-pulse backscatter amplitudes b_ki; empty means no modulation
    /// (all ones).
    pub backscatter_amplitudes: Vec<f64>,
    /// Data bits the target wants to send on the reverse channel.
    pub data_bits: Vec<u8>,
    /// Jammer variance near this target, W.
    pub jammer_variance: f64,
    /// Receiver noise variance at the target (forward link budget), W.
    pub rx_noise_variance: f64,
}

impl Target {
    pub fn new(range: f64, velocity: f64, azimuth: f64, elevation: f64, rcs: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(JrcError::invalid(format!(
                "target range must be > 0, got {range}"
            )));
        }
        if velocity.abs() >= SPEED_OF_LIGHT / 2.0 {
            return Err(JrcError::invalid(format!(
                "target speed {velocity} exceeds c/2"
            )));
        }
        DirectionOfArrival::new(azimuth, elevation)?;
        Ok(Target {
            range,
            velocity,
            azimuth,
            elevation,
            rcs,
            rcs_decomposition: None,
            taps: vec![(1.0, 0.0)],
            backscatter_amplitudes: Vec::new(),
            data_bits: Vec::new(),
            jammer_variance: 0.0,
            rx_noise_variance: 1.0,
        })
    }

    /// Builds a target from Cartesian ground position/velocity seen from a
    /// radar at `(0, 0, height)`. Slant range includes the height; radial
    /// velocity is the projection of the ground velocity on the line of
    /// sight (positive receding).
    pub fn from_cartesian(
        position: [f64; 2],
        velocity: [f64; 2],
        rcs: f64,
        radar_height: f64,
    ) -> Result<Self> {
        let rel = [position[0], position[1], -radar_height];
        let range = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        if !(range > 0.0) {
            return Err(JrcError::invalid("target is collocated with the radar"));
        }
        let azimuth = rel[1].atan2(rel[0]);
        let elevation = (rel[2] / range).asin();
        let v_radial = (rel[0] * velocity[0] + rel[1] * velocity[1]) / range;
        Target::new(range, v_radial, azimuth, elevation, rcs)
    }

    pub fn doa(&self) -> DirectionOfArrival {
        DirectionOfArrival {
            azimuth: self.azimuth,
            elevation: self.elevation,
        }
    }

    /// RCS used by link budgets: κ·A when the decomposition is present.
    pub fn effective_rcs(&self) -> f64 {
        match self.rcs_decomposition {
            Some((kappa, area)) => kappa * area,
            None => self.rcs,
        }
    }

    /// Σζ_p (coherent single-point amplitude).
    pub fn tap_amplitude_sum(&self) -> f64 {
        self.taps.iter().map(|(z, _)| z).sum()
    }

    /// ‖ζ‖² as used by the information bounds.
    pub fn tap_energy(&self) -> f64 {
        self.taps.iter().map(|(z, _)| z * z).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(JrcError::invalid("target needs at least one tap (D ≥ 1)"));
        }
        if !self.tap_energy().is_finite() {
            return Err(JrcError::invalid("tap energies must be finite"));
        }
        if let Some((kappa, _)) = self.rcs_decomposition {
            if !(0.0..=1.0).contains(&kappa) {
                return Err(JrcError::invalid("aperture efficiency κ must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Exact Doppler time-compression factor `T = sqrt((c+2v)/(c-2v))`.
pub fn doppler_compression(v: f64) -> Result<f64> {
    if v.abs() >= SPEED_OF_LIGHT / 2.0 {
        return Err(JrcError::invalid(format!(
            "|v| = {} must be below c/2",
            v.abs()
        )));
    }
    Ok(((SPEED_OF_LIGHT + 2.0 * v) / (SPEED_OF_LIGHT - 2.0 * v)).sqrt())
}

/// First-order approximation `(c+v)/(c-v)` of the compression factor.
pub fn doppler_compression_approx(v: f64) -> Result<f64> {
    if v.abs() >= SPEED_OF_LIGHT / 2.0 {
        return Err(JrcError::invalid(format!(
            "|v| = {} must be below c/2",
            v.abs()
        )));
    }
    Ok((SPEED_OF_LIGHT + v) / (SPEED_OF_LIGHT - v))
}

/// Full radar/channel/target description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier: FmcwCarrier,
    pub envelope: PulseEnvelope,
    pub num_pulses: usize,
    /// Average transmit power σ_x², W.
    pub tx_power: f64,
    /// Receiver noise variance σ_n² per sample per antenna, W.
    pub noise_variance: f64,
    pub pathloss: Pathloss,
    pub geometry: ArrayGeometry,
    pub targets: Vec<Target>,
    /// Optional explicit code amplitudes a_i (length N); `None` means the
    /// constant radar-only amplitude σ_x.
    pub amplitudes: Option<Vec<f64>>,
    /// Antenna height above the target plane, m.
    pub radar_height: f64,
    /// Antenna grazing angle, rad (bookkeeping from the scenario file).
    pub grazing_angle: f64,
    pub tap_mode: TapMode,
    pub rng_seed: u64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        carrier: FmcwCarrier,
        envelope: PulseEnvelope,
        num_pulses: usize,
        tx_power: f64,
        noise_variance: f64,
        geometry: ArrayGeometry,
        targets: Vec<Target>,
        rng_seed: u64,
    ) -> Result<Self> {
        if num_pulses == 0 {
            return Err(JrcError::invalid("scenario needs N ≥ 1 pulses"));
        }
        if tx_power < 0.0 || noise_variance < 0.0 {
            return Err(JrcError::invalid("powers and variances must be ≥ 0"));
        }
        for t in &targets {
            t.validate()?;
        }
        Ok(Scenario {
            carrier,
            envelope,
            num_pulses,
            tx_power,
            noise_variance,
            pathloss: Pathloss::FreeSpace,
            geometry,
            targets,
            amplitudes: None,
            radar_height: 0.0,
            grazing_angle: 0.0,
            tap_mode: TapMode::ExplicitTaps,
            rng_seed,
        })
    }

    /// Pulse period T_s, s.
    pub fn pulse_period(&self) -> f64 {
        self.carrier.chirp_duration
    }

    /// Carrier center frequency, Hz.
    pub fn carrier_frequency(&self) -> f64 {
        self.carrier.center_frequency()
    }

    /// Code amplitude of pulse `i` (σ_x when no explicit code is set).
    pub fn amplitude(&self, i: usize) -> f64 {
        match &self.amplitudes {
            Some(a) => a[i % a.len()],
            None => self.tx_power.sqrt(),
        }
    }

    /// Transmit SNR ρ_T = E[a_i²] / σ_n².
    pub fn tx_snr(&self) -> f64 {
        let mean_sq = match &self.amplitudes {
            Some(a) => a.iter().map(|x| x * x).sum::<f64>() / a.len() as f64,
            None => self.tx_power,
        };
        mean_sq / self.noise_variance
    }

    /// Backscatter amplitude of target `k` on pulse `i` (1 when the target
    /// sends no data).
    pub fn backscatter(&self, k: usize, i: usize) -> f64 {
        let b = &self.targets[k].backscatter_amplitudes;
        if b.is_empty() {
            1.0
        } else {
            b[i % b.len()]
        }
    }

    /// Round-trip amplitude factor `γ_k · α_k²` for target `k`.
    pub fn round_trip_gain(&self, k: usize) -> f64 {
        let t = &self.targets[k];
        let alpha = self.pathloss.alpha(t.range);
        t.rcs * alpha * alpha
    }

    /// Number of receive samples per pulse.
    pub fn samples_per_pulse(&self) -> usize {
        (self.pulse_period() * self.envelope.sample_rate()).round() as usize
    }

    /// Pulse-local sample time relative to the pulse center, s.
    pub fn sample_time(&self, s: usize) -> f64 {
        (s as f64 - (self.samples_per_pulse() / 2) as f64) / self.envelope.sample_rate()
    }

    /// Plain receive model of pulse `i`: for each antenna `l` and target
    /// `k`, the delayed/compressed envelope `x([ξ - 2τ_k - φ_l(k)]·T_k)`
    /// scaled by `a_i b_ki γ_k α_k² ζ`, plus white Gaussian noise of
    /// variance σ_n². Noise is seeded with `rng_seed ⊕ i` so pulses are
    /// independently reproducible.
    pub fn synthesize_rx(&self, i: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = self.synthesize_rx_noiseless(i)?;
        if self.noise_variance > 0.0 {
            let std = self.noise_variance.sqrt();
            let mut rng = ChaCha20Rng::seed_from_u64(self.rng_seed ^ i as u64);
            for row in &mut out {
                for v in row.iter_mut() {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    *v += std * n;
                }
            }
        }
        Ok(out)
    }

    /// Noise-free part of [`Scenario::synthesize_rx`].
    pub fn synthesize_rx_noiseless(&self, i: usize) -> Result<Vec<Vec<f64>>> {
        if i >= self.num_pulses {
            return Err(JrcError::invalid(format!(
                "pulse index {i} out of range for N = {}",
                self.num_pulses
            )));
        }
        let l = self.geometry.num_elements();
        let s_count = self.samples_per_pulse();
        let a_i = self.amplitude(i);
        let mut out = vec![vec![0.0f64; s_count]; l];
        for (k, target) in self.targets.iter().enumerate() {
            let compression = doppler_compression(target.velocity)?;
            let tau2 = 2.0 * target.range / SPEED_OF_LIGHT;
            let gain = a_i * self.backscatter(k, i) * self.round_trip_gain(k);
            let delays = self.geometry.element_delays(target.doa());
            let taps = self.effective_taps(target);
            for (l_idx, row) in out.iter_mut().enumerate() {
                let base_delay = tau2 + delays[l_idx];
                for (s, v) in row.iter_mut().enumerate() {
                    let xi = self.sample_time(s);
                    let mut acc = 0.0;
                    for &(zeta, tp) in &taps {
                        acc += zeta * self.envelope.eval((xi - base_delay - tp) * compression);
                    }
                    *v += gain * acc;
                }
            }
        }
        Ok(out)
    }

    fn effective_taps(&self, target: &Target) -> Vec<(f64, f64)> {
        match self.tap_mode {
            TapMode::SinglePoint => vec![(target.tap_amplitude_sum(), 0.0)],
            TapMode::ExplicitTaps => target.taps.clone(),
        }
    }

    /// FMCW-modulated complex baseband receive matrix for pulse `i`.
    ///
    /// Per antenna and target the reference pulse (envelope × chirp) is
    /// delayed by `2τ_k(i) + φ_l` with the pulse-center range
    /// `r_k(i) = r_k + v_k (i + 1/2) T_s`, and rotated by the carrier phase
    /// `exp(-j 2π f_c [2τ_k(i) + φ_l])`, which carries both the
    /// pulse-to-pulse Doppler rotation and the steering phases. Complex
    /// white noise of per-sample variance σ_n² is added (seeded
    /// `rng_seed ⊕ i`).
    pub fn synthesize_rx_rf(&self, i: usize) -> Result<Vec<Vec<Complex64>>> {
        let mut out = self.synthesize_rx_rf_noiseless(i)?;
        if self.noise_variance > 0.0 {
            // σ_n² split evenly across I and Q
            let std = (self.noise_variance / 2.0).sqrt();
            let mut rng = ChaCha20Rng::seed_from_u64(self.rng_seed ^ i as u64);
            for row in &mut out {
                for v in row.iter_mut() {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    *v += Complex64::new(std * re, std * im);
                }
            }
        }
        Ok(out)
    }

    /// Noise-free part of [`Scenario::synthesize_rx_rf`].
    pub fn synthesize_rx_rf_noiseless(&self, i: usize) -> Result<Vec<Vec<Complex64>>> {
        if i >= self.num_pulses {
            return Err(JrcError::invalid(format!(
                "pulse index {i} out of range for N = {}",
                self.num_pulses
            )));
        }
        let l = self.geometry.num_elements();
        let s_count = self.samples_per_pulse();
        let ts = self.pulse_period();
        let fc = self.carrier_frequency();
        let a_i = self.amplitude(i);
        let mut out = vec![vec![Complex64::new(0.0, 0.0); s_count]; l];

        for (k, target) in self.targets.iter().enumerate() {
            let compression = doppler_compression(target.velocity)?;
            // range at the center of pulse i
            let r_i = target.range + target.velocity * (i as f64 + 0.5) * ts;
            let tau2 = 2.0 * r_i / SPEED_OF_LIGHT;
            let gain = a_i * self.backscatter(k, i) * self.round_trip_gain(k);
            let delays = self.geometry.element_delays(target.doa());
            let taps = self.effective_taps(target);
            for (l_idx, row) in out.iter_mut().enumerate() {
                let delay = tau2 + delays[l_idx];
                let carrier_rot =
                    Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * fc * delay);
                for (s, v) in row.iter_mut().enumerate() {
                    let xi = self.sample_time(s);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for &(zeta, tp) in &taps {
                        let arg = (xi - delay - tp) * compression;
                        let env = self.envelope.eval(arg);
                        if env != 0.0 {
                            // chirp phase over pulse-local time from the
                            // pulse start
                            let phase = self.carrier.baseband_phase(arg + ts / 2.0);
                            acc += zeta * env * Complex64::from_polar(1.0, phase);
                        }
                    }
                    *v += gain * carrier_rot * acc;
                }
            }
        }
        Ok(out)
    }

    /// Baseband reference pulse (unit amplitude) on the receive sample
    /// grid; the matched-filter template for pulse compression.
    pub fn reference_pulse(&self) -> Vec<Complex64> {
        let s_count = self.samples_per_pulse();
        let ts = self.pulse_period();
        (0..s_count)
            .map(|s| {
                let xi = self.sample_time(s);
                let env = self.envelope.eval(xi);
                Complex64::from_polar(env, self.carrier.baseband_phase(xi + ts / 2.0))
            })
            .collect()
    }
}

/// Canned scenarios used by tests, benches, and the bundled config files.
pub mod presets {
    use super::*;
    use crate::waveform::EnvelopeFamily;

    /// The two-target 24 GHz FMCW setup of the JRC simulation study, with a
    /// configurable chirp count (512 full scale, 64 desk scale).
    pub fn table2(num_pulses: usize, seed: u64) -> Scenario {
        let ts = 100e-6;
        let bandwidth = 100e6;
        let fc = 24e9;
        let sample_rate = 40e6;
        // envelope bandwidth 100 kHz → β = sqrt(ln 2 / 2) / B_3dB
        let beta = (2f64.ln() / 2.0).sqrt() / 100e3;
        let carrier = FmcwCarrier::new(fc - bandwidth / 2.0, bandwidth, ts, 0.0).unwrap();
        let envelope =
            PulseEnvelope::make(EnvelopeFamily::Gaussian { beta }, ts, sample_rate).unwrap();
        let geometry = ArrayGeometry::ula(12, 0.0078).unwrap();
        let height = 8.0;
        let targets = vec![
            Target::from_cartesian([25.0, 25.0], [0.5, 1.0], 1.0, height).unwrap(),
            Target::from_cartesian([25.0, 35.0], [5.0, -10.0], 1.0, height).unwrap(),
        ];
        let tx_snr_db = 110.0;
        let noise_variance = 1.0;
        let mut scn = Scenario::new(
            carrier,
            envelope,
            num_pulses,
            10f64.powf(tx_snr_db / 10.0) * noise_variance,
            noise_variance,
            geometry,
            targets,
            seed,
        )
        .unwrap();
        scn.radar_height = height;
        scn.grazing_angle = 6.38f64.to_radians();
        scn
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::EnvelopeFamily;
    use approx::assert_relative_eq;

    fn small_scenario(targets: Vec<Target>, noise: f64, seed: u64) -> Scenario {
        let ts = 10e-6;
        let fs = 20e6;
        let carrier = FmcwCarrier::new(0.0, 2e6, ts, 0.0).unwrap();
        let envelope =
            PulseEnvelope::make(EnvelopeFamily::Gaussian { beta: 2e-6 }, ts, fs).unwrap();
        let geometry = ArrayGeometry::ula(4, 0.00625).unwrap();
        Scenario::new(carrier, envelope, 4, 1.0, noise, geometry, targets, seed).unwrap()
    }

    fn static_target(range: f64) -> Target {
        Target::new(range, 0.0, 0.9, 0.0, 1.0).unwrap()
    }

    #[test]
    fn doppler_compression_identity_at_rest() {
        assert_eq!(doppler_compression(0.0).unwrap(), 1.0);
    }

    #[test]
    fn doppler_compression_at_c_over_six_is_sqrt_two() {
        let v = SPEED_OF_LIGHT / 6.0;
        assert_relative_eq!(
            doppler_compression(v).unwrap(),
            2.0f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn doppler_exact_and_approx_agree_at_low_speed() {
        let exact = doppler_compression(1.0).unwrap();
        let approx = doppler_compression_approx(1.0).unwrap();
        assert_relative_eq!(exact, approx, max_relative = 1e-8);
    }

    #[test]
    fn doppler_compression_rejects_superluminal_halves() {
        assert!(doppler_compression(SPEED_OF_LIGHT / 2.0).is_err());
        assert!(doppler_compression(-SPEED_OF_LIGHT / 2.0).is_err());
    }

    #[test]
    fn doppler_compression_is_strictly_increasing() {
        let mut prev = doppler_compression(-1.4e8).unwrap();
        let mut v = -1.3e8;
        while v < 1.45e8 {
            let t = doppler_compression(v).unwrap();
            assert!(t > prev, "T not increasing at v = {v}");
            prev = t;
            v += 1e7;
        }
    }

    #[test]
    fn empty_noiseless_scenario_is_silent() {
        let scn = small_scenario(vec![], 0.0, 1);
        let rx = scn.synthesize_rx(0).unwrap();
        assert!(rx.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn matched_filter_peak_sits_at_round_trip_delay() {
        // single static target, no noise: correlation of any antenna row
        // with the envelope peaks at lag = round(2r/c · fs)
        let range = 120.0;
        let scn = small_scenario(vec![static_target(range)], 0.0, 1);
        let rx = scn.synthesize_rx(0).unwrap();
        let env: Vec<f64> = scn.envelope.samples().to_vec();
        let row = &rx[0];
        let mut best = (0usize, f64::MIN);
        let s = row.len();
        for lag in 0..s / 2 {
            let mut acc = 0.0;
            for i in 0..s - lag {
                acc += row[i + lag] * env[i];
            }
            if acc > best.1 {
                best = (lag, acc);
            }
        }
        let expected = (2.0 * range / SPEED_OF_LIGHT * scn.envelope.sample_rate()).round() as usize;
        assert_eq!(best.0, expected);
    }

    #[test]
    fn identical_seeds_give_bit_identical_noise() {
        let scn = small_scenario(vec![static_target(80.0)], 2.0, 42);
        let a = scn.synthesize_rx(1).unwrap();
        let b = scn.synthesize_rx(1).unwrap();
        assert_eq!(a, b);
        let c = scn.synthesize_rx(2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn echoes_are_linear_in_targets() {
        let t1 = static_target(60.0);
        let t2 = Target::new(90.0, 20.0, -0.4, 0.1, 2.0).unwrap();
        let noise = 1.5;
        let seed = 7;
        let both = small_scenario(vec![t1.clone(), t2.clone()], noise, seed);
        let only_noise = small_scenario(vec![], noise, seed);
        let s1 = small_scenario(vec![t1], 0.0, seed);
        let s2 = small_scenario(vec![t2], 0.0, seed);
        let zb = both.synthesize_rx(0).unwrap();
        let zn = only_noise.synthesize_rx(0).unwrap();
        let z1 = s1.synthesize_rx(0).unwrap();
        let z2 = s2.synthesize_rx(0).unwrap();
        for l in 0..zb.len() {
            for s in 0..zb[0].len() {
                let lhs = zb[l][s];
                let rhs = z1[l][s] + z2[l][s] + zn[l][s];
                assert_relative_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rf_synthesis_carries_steering_phase() {
        // noise-free single target: the per-antenna phase difference at the
        // pulse peak matches exp(-j2πf_c Δφ_l).
        let mut scn = small_scenario(vec![static_target(75.0)], 0.0, 3);
        scn.carrier = FmcwCarrier::new(24e9 - 1e6, 2e6, scn.pulse_period(), 0.0).unwrap();
        let rx = scn.synthesize_rx_rf_noiseless(0).unwrap();
        let delays = scn.geometry.element_delays(scn.targets[0].doa());
        let fc = scn.carrier_frequency();
        let peak = rx[0]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        for l in 1..rx.len() {
            let measured = (rx[l][peak] * rx[0][peak].conj()).arg();
            let expected = -2.0 * std::f64::consts::PI * fc * (delays[l] - delays[0]);
            let wrapped = (expected - measured + std::f64::consts::PI)
                .rem_euclid(2.0 * std::f64::consts::PI)
                - std::f64::consts::PI;
            assert!(wrapped.abs() < 2e-2, "antenna {l}: phase error {wrapped}");
        }
    }

    #[test]
    fn table2_preset_matches_published_parameters() {
        let scn = presets::table2(512, 0);
        assert_eq!(scn.num_pulses, 512);
        assert_relative_eq!(scn.pulse_period(), 1e-4, max_relative = 1e-12);
        assert_relative_eq!(scn.carrier_frequency(), 24e9, max_relative = 1e-12);
        assert_eq!(scn.geometry.num_elements(), 12);
        assert_eq!(scn.targets.len(), 2);
        let t1 = &scn.targets[0];
        assert_relative_eq!(
            t1.range,
            (25.0f64 * 25.0 + 625.0 + 64.0).sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(t1.azimuth, 45f64.to_radians(), max_relative = 1e-12);
        assert!(t1.velocity > 0.0, "target 1 recedes");
        assert!(scn.targets[1].velocity < 0.0, "target 2 approaches");
    }

    #[test]
    fn two_target_power_matches_per_target_bookkeeping() {
        // Noise-free modulated synthesis with independent random codes:
        // mean per-antenna power over pulses ≈ sum of per-target powers.
        use rand::Rng;
        let mut scn = presets::table2(100, 11);
        scn.noise_variance = 0.0;
        scn.tx_power = 1.0;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for t in &mut scn.targets {
            t.backscatter_amplitudes = (0..100)
                .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                .collect();
        }
        let mut single = Vec::new();
        for k in 0..2 {
            let mut s = scn.clone();
            let keep = s.targets[k].clone();
            s.targets = vec![keep];
            single.push(s);
        }
        let mut p_both = 0.0;
        let mut p_sum = 0.0;
        for i in 0..scn.num_pulses {
            let z = scn.synthesize_rx_rf_noiseless(i).unwrap();
            p_both += z.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>();
            for s in &single {
                let zs = s.synthesize_rx_rf_noiseless(i).unwrap();
                p_sum += zs.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>();
            }
        }
        let rel = (p_both - p_sum).abs() / p_sum;
        assert!(rel < 0.02, "power bookkeeping off by {rel}");
    }
}
