//! Transmit pulse envelopes and FMCW-modulated pulse trains.
//!
//! Envelopes live on the symmetric support `t ∈ [-T_s/2, T_s/2]` with the
//! peak at `t = 0`; the shifted-convention forms (half-sine on `[0, T_s]`)
//! are mapped onto this support so all correlation math shares one time
//! axis. Every family-generated envelope is normalized to unit energy under
//! the trapezoidal rule.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::{JrcError, Result};

/// Envelope family. `Gaussian` carries the width parameter β (seconds) of
/// the shape `exp(-(πt/β)²)`; β sets the 3 dB bandwidth as
/// `B_3dB = sqrt(ln 2 / 2) / β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeFamily {
    Gaussian { beta: f64 },
    CubicSpline,
    HalfSine,
    Custom,
}

/// Sampled baseband pulse envelope on `[-T_s/2, T_s/2)`.
///
/// The sample grid is `t_i = (i - n/2) / sample_rate` so that `t = 0` falls
/// exactly on a grid point (the peak sample for all families).
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnvelope {
    samples: Vec<f64>,
    sample_rate: f64,
    duration: f64,
    family: EnvelopeFamily,
    /// Scale applied to the analytic shape during normalization; 1.0 for
    /// `Custom` envelopes (their samples are authoritative).
    scale: f64,
}

impl PulseEnvelope {
    /// Generates a family envelope, energy-normalized to 1 (trapezoidal).
    pub fn make(family: EnvelopeFamily, duration: f64, sample_rate: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(JrcError::invalid(format!(
                "envelope duration must be positive, got {duration}"
            )));
        }
        if !(sample_rate >= 4.0 / duration) || !sample_rate.is_finite() {
            return Err(JrcError::invalid(format!(
                "sample rate {sample_rate} Hz below minimum {} Hz for duration {duration} s",
                4.0 / duration
            )));
        }
        if let EnvelopeFamily::Gaussian { beta } = family {
            if !(beta > 0.0) {
                return Err(JrcError::invalid(format!(
                    "Gaussian envelope requires beta > 0, got {beta}"
                )));
            }
        }
        if matches!(family, EnvelopeFamily::Custom) {
            return Err(JrcError::invalid(
                "Custom envelopes are built with from_samples, not make",
            ));
        }

        let n = (duration * sample_rate).round() as usize;
        debug_assert!(n >= 2);
        let dt = 1.0 / sample_rate;
        let center = (n / 2) as f64;
        let shape: Vec<f64> = (0..n)
            .map(|i| family_shape(family, (i as f64 - center) * dt, duration))
            .collect();
        let energy = trapezoid_energy(&shape, dt);
        if energy <= 0.0 {
            return Err(JrcError::invalid("envelope has zero energy"));
        }
        let scale = 1.0 / energy.sqrt();
        let samples = shape.iter().map(|s| s * scale).collect();
        Ok(PulseEnvelope {
            samples,
            sample_rate,
            duration,
            family,
            scale,
        })
    }

    /// Wraps caller-supplied samples as a `Custom` envelope. The samples are
    /// taken as-is; call [`PulseEnvelope::renormalized`] to force unit energy.
    pub fn from_samples(samples: Vec<f64>, sample_rate: f64, duration: f64) -> Result<Self> {
        if samples.len() < 2 {
            return Err(JrcError::invalid("envelope needs at least 2 samples"));
        }
        if !(sample_rate > 0.0) || !(duration > 0.0) {
            return Err(JrcError::invalid("sample rate and duration must be positive"));
        }
        Ok(PulseEnvelope {
            samples,
            sample_rate,
            duration,
            family: EnvelopeFamily::Custom,
            scale: 1.0,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn family(&self) -> EnvelopeFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i`, seconds relative to the pulse center.
    pub fn time_at(&self, i: usize) -> f64 {
        (i as f64 - (self.len() / 2) as f64) / self.sample_rate
    }

    /// Sample times for the whole grid.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time_at(i))
    }

    /// Trapezoidal energy ∫|y(t)|² dt.
    pub fn energy(&self) -> f64 {
        trapezoid_energy(&self.samples, 1.0 / self.sample_rate)
    }

    /// Returns a copy rescaled to unit trapezoidal energy.
    pub fn renormalized(&self) -> Self {
        let e = self.energy();
        let mut out = self.clone();
        if e > 0.0 {
            let s = 1.0 / e.sqrt();
            for v in &mut out.samples {
                *v *= s;
            }
            out.scale *= s;
        }
        out
    }

    /// Envelope value at arbitrary time `t` (seconds from pulse center).
    ///
    /// Families evaluate their closed form; `Custom` envelopes use a
    /// 32-tap Hann-windowed sinc interpolator, which realizes sub-sample
    /// delays without leaving the band of the sampled data.
    pub fn eval(&self, t: f64) -> f64 {
        if t < -self.duration / 2.0 - 0.5 / self.sample_rate
            || t > self.duration / 2.0 + 0.5 / self.sample_rate
        {
            return 0.0;
        }
        match self.family {
            EnvelopeFamily::Custom => self.interp(t),
            f => self.scale * family_shape(f, t, self.duration),
        }
    }

    fn interp(&self, t: f64) -> f64 {
        const HALF_TAPS: isize = 16;
        let x = t * self.sample_rate + (self.len() / 2) as f64;
        let i0 = x.floor() as isize;
        let frac = x - i0 as f64;
        if frac == 0.0 && i0 >= 0 && (i0 as usize) < self.len() {
            return self.samples[i0 as usize];
        }
        let mut acc = 0.0;
        for k in (i0 - HALF_TAPS + 1)..=(i0 + HALF_TAPS) {
            if k < 0 || k as usize >= self.len() {
                continue;
            }
            let u = x - k as f64;
            let w = 0.5 * (1.0 + (PI * u / HALF_TAPS as f64).cos());
            acc += self.samples[k as usize] * sinc(u) * w;
        }
        acc
    }

    /// Spectrum magnitude at frequency `f`, normalized so the peak (f = 0)
    /// is 1. Gaussian envelopes use the closed form `exp(-β²f²)`; all others
    /// go through a direct discrete Fourier sum of the samples.
    pub fn spectrum_magnitude(&self, f: f64) -> f64 {
        if let EnvelopeFamily::Gaussian { beta } = self.family {
            return (-beta * beta * f * f).exp();
        }
        let dft = |freq: f64| -> f64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &y) in self.samples.iter().enumerate() {
                let t = self.time_at(i);
                acc += y * Complex64::from_polar(1.0, -2.0 * PI * freq * t);
            }
            acc.norm()
        };
        let peak = dft(0.0);
        if peak == 0.0 {
            0.0
        } else {
            dft(f) / peak
        }
    }

    /// Central-difference derivative (one-sided at the boundaries); same
    /// length and sample rate as the input.
    pub fn derivative(&self) -> Result<PulseEnvelope> {
        if self.len() < 3 {
            return Err(JrcError::invalid(
                "derivative needs at least 3 samples",
            ));
        }
        let n = self.len();
        let dt = 1.0 / self.sample_rate;
        let y = &self.samples;
        let mut d = vec![0.0; n];
        d[0] = (y[1] - y[0]) / dt;
        d[n - 1] = (y[n - 1] - y[n - 2]) / dt;
        for i in 1..n - 1 {
            d[i] = (y[i + 1] - y[i - 1]) / (2.0 * dt);
        }
        Ok(PulseEnvelope {
            samples: d,
            sample_rate: self.sample_rate,
            duration: self.duration,
            family: EnvelopeFamily::Custom,
            scale: 1.0,
        })
    }

    /// Normalized autocorrelation of the first derivative at an integer
    /// sample lag: `(1/E) Σ ẏ(t) ẏ(t+δ)` with `E = Σ ẏ²`. Lag 0 returns
    /// exactly 1; the value always lies in [-1, 1].
    pub fn normalized_derivative_autocorr(&self, lag: isize) -> Result<f64> {
        let n = self.len() as isize;
        if lag.unsigned_abs() >= n as usize {
            return Err(JrcError::invalid(format!(
                "lag {lag} out of range for {n} samples"
            )));
        }
        let d = self.derivative()?;
        Ok(derivative_autocorr_of(&d.samples, lag))
    }

    /// Writes the envelope as CSV (`t_seconds,amplitude`) at 17 significant
    /// digits so optimized envelopes round-trip bit-exactly.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_seconds,amplitude")?;
        for (i, &y) in self.samples.iter().enumerate() {
            writeln!(w, "{:.16e},{:.16e}", self.time_at(i), y)?;
        }
        Ok(())
    }

    /// Reads an envelope from the CSV format written by [`Self::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<PulseEnvelope> {
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line.map_err(|e| JrcError::invalid(format!("read error: {e}")))?;
            let line = line.trim();
            if lineno == 0 {
                if line != "t_seconds,amplitude" {
                    return Err(JrcError::invalid(format!(
                        "expected header 't_seconds,amplitude', got '{line}'"
                    )));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut it = line.split(',');
            let t: f64 = parse_field(it.next(), lineno, "t_seconds")?;
            let y: f64 = parse_field(it.next(), lineno, "amplitude")?;
            times.push(t);
            samples.push(y);
        }
        if samples.len() < 2 {
            return Err(JrcError::invalid("envelope CSV has fewer than 2 rows"));
        }
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(JrcError::invalid("envelope CSV times must increase"));
        }
        let sample_rate = 1.0 / dt;
        let duration = (samples.len() as f64) * dt;
        PulseEnvelope::from_samples(samples, sample_rate, duration)
    }
}

fn parse_field(field: Option<&str>, lineno: usize, name: &str) -> Result<f64> {
    field
        .ok_or_else(|| JrcError::invalid(format!("line {}: missing {name}", lineno + 1)))?
        .trim()
        .parse()
        .map_err(|e| JrcError::invalid(format!("line {}: bad {name}: {e}", lineno + 1)))
}

/// Autocorrelation of a derivative sample sequence, normalized by its
/// zero-lag energy.
pub(crate) fn derivative_autocorr_of(d: &[f64], lag: isize) -> f64 {
    if lag == 0 {
        return 1.0;
    }
    let n = d.len() as isize;
    let energy: f64 = d.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return 0.0;
    }
    let k = lag.unsigned_abs();
    let mut acc = 0.0;
    for i in 0..(n as usize - k) {
        acc += d[i] * d[i + k];
    }
    (acc / energy).clamp(-1.0, 1.0)
}

/// Un-normalized family shape at time `t` from the pulse center.
fn family_shape(family: EnvelopeFamily, t: f64, duration: f64) -> f64 {
    let half = duration / 2.0;
    if t < -half || t > half {
        return 0.0;
    }
    match family {
        EnvelopeFamily::Gaussian { beta } => {
            let u = PI * t / beta;
            (-u * u).exp()
        }
        EnvelopeFamily::CubicSpline => {
            // Cubic B-spline with t' = 4t/T_s so the support |t'| < 2 maps
            // onto [-T_s/2, T_s/2].
            let tp = (4.0 * t / duration).abs();
            if tp < 1.0 {
                2.0 / 3.0 - tp * tp + tp * tp * tp / 2.0
            } else if tp < 2.0 {
                let u = 2.0 - tp;
                u * u * u / 6.0
            } else {
                0.0
            }
        }
        EnvelopeFamily::HalfSine => (PI * (t + half) / duration).sin(),
        EnvelopeFamily::Custom => 0.0,
    }
}

fn trapezoid_energy(y: &[f64], dt: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let sum: f64 = y.iter().map(|v| v * v).sum();
    let ends = (y[0] * y[0] + y[y.len() - 1] * y[y.len() - 1]) / 2.0;
    (sum - ends) * dt
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Linear FMCW sweep description. `f_start` is the instantaneous frequency
/// at the start of a pulse; the sweep center `f_start + B/2` is the carrier
/// frequency used for Doppler throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FmcwCarrier {
    pub f_start: f64,
    pub sweep_bandwidth: f64,
    pub chirp_duration: f64,
    pub phase0: f64,
}

impl FmcwCarrier {
    pub fn new(f_start: f64, sweep_bandwidth: f64, chirp_duration: f64, phase0: f64) -> Result<Self> {
        if !(sweep_bandwidth > 0.0) {
            return Err(JrcError::invalid("sweep bandwidth must be positive"));
        }
        if !(chirp_duration > 0.0) {
            return Err(JrcError::invalid("chirp duration must be positive"));
        }
        Ok(FmcwCarrier {
            f_start,
            sweep_bandwidth,
            chirp_duration,
            phase0,
        })
    }

    /// Carrier center frequency, `f_start + B/2`.
    pub fn center_frequency(&self) -> f64 {
        self.f_start + self.sweep_bandwidth / 2.0
    }

    /// Chirp phase at pulse-local time `xi ∈ [0, T_s)`.
    pub fn phase(&self, xi: f64) -> f64 {
        self.phase0
            + 2.0 * PI * (self.f_start * xi + self.sweep_bandwidth * xi * xi / (2.0 * self.chirp_duration))
    }

    /// Instantaneous frequency at pulse-local time `xi`.
    pub fn instantaneous_frequency(&self, xi: f64) -> f64 {
        self.f_start + self.sweep_bandwidth * xi / self.chirp_duration
    }

    /// Chirp phase after downconversion by the center frequency: the
    /// baseband sweep runs `-B/2 → +B/2` over the pulse, independent of
    /// where the RF sweep starts.
    pub fn baseband_phase(&self, xi: f64) -> f64 {
        self.phase0
            + 2.0
                * PI
                * (-self.sweep_bandwidth / 2.0 * xi
                    + self.sweep_bandwidth * xi * xi / (2.0 * self.chirp_duration))
    }
}

/// A train of `N` FMCW pulses amplitude-coded by `a_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxPulseTrain {
    pub envelope: PulseEnvelope,
    pub carrier: FmcwCarrier,
    pub amplitudes: Vec<f64>,
}

impl TxPulseTrain {
    pub fn new(envelope: PulseEnvelope, carrier: FmcwCarrier, amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(JrcError::invalid("pulse train needs at least one amplitude"));
        }
        Ok(TxPulseTrain {
            envelope,
            carrier,
            amplitudes,
        })
    }

    pub fn num_pulses(&self) -> usize {
        self.amplitudes.len()
    }

    /// Complex baseband samples of pulse `i` over pulse-local time
    /// `xi ∈ [0, T_s)`: `a_i · y(xi - T_s/2) · exp(j·phase(xi))`.
    pub fn modulate(&self, i: usize) -> Result<Vec<Complex64>> {
        if i >= self.num_pulses() {
            return Err(JrcError::invalid(format!(
                "pulse index {i} out of range for N = {}",
                self.num_pulses()
            )));
        }
        let a = self.amplitudes[i];
        let fs = self.envelope.sample_rate();
        let ts = self.carrier.chirp_duration;
        let n = (ts * fs).round() as usize;
        let half = ts / 2.0;
        Ok((0..n)
            .map(|s| {
                let xi = s as f64 / fs;
                let y = self.envelope.eval(xi - half);
                Complex64::from_polar(a * y, self.carrier.phase(xi))
            })
            .collect())
    }
}
