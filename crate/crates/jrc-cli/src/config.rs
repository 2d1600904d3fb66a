//! Scenario configuration file: a TOML schema mirroring the simulation
//! parameter table, with strict unknown-key reporting.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use jrc_core::array::ArrayGeometry;
use jrc_core::scenario::{Pathloss, Scenario, TapMode, Target};
use jrc_core::waveform::{EnvelopeFamily, FmcwCarrier, PulseEnvelope};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub radar: RadarSection,
    pub envelope: EnvelopeSection,
    #[serde(default)]
    pub code: Option<CodeSection>,
    #[serde(default)]
    pub pathloss: Option<PathlossSection>,
    pub targets: Vec<TargetSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RadarSection {
    #[serde(default = "one")]
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    /// "ula" or "uca".
    #[serde(default = "ula")]
    pub array_geometry: String,
    pub antenna_spacing_m: f64,
    #[serde(default)]
    pub antenna_height_m: f64,
    #[serde(default)]
    pub grazing_angle_deg: f64,
    pub carrier_frequency_hz: f64,
    pub fmcw_bandwidth_hz: f64,
    pub chirps_per_frame: usize,
    pub chirp_duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    #[serde(default = "default_tx_snr")]
    pub tx_snr_db: f64,
    #[serde(default = "one_f")]
    pub noise_variance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSection {
    /// "gaussian", "cubic_spline", or "half_sine".
    pub family: String,
    /// 3 dB bandwidth of the Gaussian envelope; β = sqrt(ln 2 / 2) / B.
    #[serde(default)]
    pub bandwidth_3db_hz: Option<f64>,
    /// Direct width parameter β (seconds); overrides the bandwidth key.
    #[serde(default)]
    pub beta_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub block_length: usize,
    pub rate_bits: usize,
    #[serde(default)]
    pub target_data_rate_bps: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathlossSection {
    /// "free_space" or "exponent".
    pub model: String,
    #[serde(default)]
    pub scale: Option<f64>,
    #[serde(default)]
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
    #[serde(default = "one_f")]
    pub rcs_m2: f64,
    #[serde(default)]
    pub jammer_variance: f64,
    #[serde(default = "one_f")]
    pub rx_noise_variance: f64,
    #[serde(default)]
    pub data_bits: Vec<u8>,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn ula() -> String {
    "ula".into()
}
fn default_sample_rate() -> f64 {
    40e6
}
fn default_tx_snr() -> f64 {
    110.0
}

/// Recursively lists key paths present in `value` but absent from the
/// schema-generated reference document.
fn unknown_keys(value: &toml::Value, reference: &toml::Value, prefix: &str, out: &mut Vec<String>) {
    if let (toml::Value::Table(v), toml::Value::Table(r)) = (value, reference) {
        for (k, sub) in v {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match r.get(k) {
                None => out.push(path),
                Some(rsub) => {
                    if let (toml::Value::Array(va), toml::Value::Array(ra)) = (sub, rsub) {
                        if let (Some(v0), Some(r0)) = (va.first(), ra.first()) {
                            unknown_keys(v0, r0, &format!("{path}[0]"), out);
                        }
                    } else {
                        unknown_keys(sub, rsub, &path, out);
                    }
                }
            }
        }
    }
}

/// Parses a scenario file, reporting every unknown key at once.
pub fn parse_scenario_file(text: &str) -> anyhow::Result<ScenarioFile> {
    let value: toml::Value = toml::from_str(text).context("scenario file is not valid TOML")?;
    // reference document containing every legal key
    let reference: toml::Value = toml::from_str(REFERENCE_TOML).expect("reference schema");
    let mut unknown = Vec::new();
    unknown_keys(&value, &reference, "", &mut unknown);
    if !unknown.is_empty() {
        bail!("unknown scenario keys: {}", unknown.join(", "));
    }
    let file: ScenarioFile = toml::from_str(text).context("scenario file schema violation")?;
    if file.targets.is_empty() {
        log::warn!("scenario has no targets");
    }
    Ok(file)
}

const REFERENCE_TOML: &str = r#"
seed = 0
[radar]
num_tx_antennas = 1
num_rx_antennas = 1
array_geometry = "ula"
antenna_spacing_m = 0.0
antenna_height_m = 0.0
grazing_angle_deg = 0.0
carrier_frequency_hz = 0.0
fmcw_bandwidth_hz = 0.0
chirps_per_frame = 1
chirp_duration_s = 0.0
sample_rate_hz = 0.0
tx_snr_db = 0.0
noise_variance = 0.0
[envelope]
family = ""
bandwidth_3db_hz = 0.0
beta_s = 0.0
[code]
block_length = 0
rate_bits = 0
target_data_rate_bps = 0.0
[pathloss]
model = ""
scale = 0.0
exponent = 0.0
[[targets]]
position_m = [0.0, 0.0]
velocity_mps = [0.0, 0.0]
rcs_m2 = 0.0
jammer_variance = 0.0
rx_noise_variance = 0.0
data_bits = []
"#;

impl ScenarioFile {
    /// Builds the runtime scenario. `seed_override` replaces the file seed
    /// when the CLI received an explicit `--seed`.
    pub fn build(&self, seed_override: Option<u64>) -> anyhow::Result<Scenario> {
        let r = &self.radar;
        let fc = r.carrier_frequency_hz;
        let carrier = FmcwCarrier::new(
            fc - r.fmcw_bandwidth_hz / 2.0,
            r.fmcw_bandwidth_hz,
            r.chirp_duration_s,
            0.0,
        )
        .map_err(anyhow::Error::msg)?;
        let beta = match (self.envelope.beta_s, self.envelope.bandwidth_3db_hz) {
            (Some(b), _) => b,
            (None, Some(bw)) => (2f64.ln() / 2.0).sqrt() / bw,
            (None, None) => bail!("envelope needs beta_s or bandwidth_3db_hz"),
        };
        let family = match self.envelope.family.as_str() {
            "gaussian" => EnvelopeFamily::Gaussian { beta },
            "cubic_spline" => EnvelopeFamily::CubicSpline,
            "half_sine" => EnvelopeFamily::HalfSine,
            other => bail!("unknown envelope family '{other}'"),
        };
        let envelope = PulseEnvelope::make(family, r.chirp_duration_s, r.sample_rate_hz)
            .map_err(anyhow::Error::msg)?;
        let geometry = match r.array_geometry.as_str() {
            "ula" => ArrayGeometry::ula(r.num_rx_antennas, r.antenna_spacing_m),
            "uca" => ArrayGeometry::uca(r.num_rx_antennas, r.antenna_spacing_m),
            other => bail!("unknown array geometry '{other}'"),
        }
        .map_err(anyhow::Error::msg)?;
        let mut targets = Vec::new();
        for t in &self.targets {
            let mut target =
                Target::from_cartesian(t.position_m, t.velocity_mps, t.rcs_m2, r.antenna_height_m)
                    .map_err(anyhow::Error::msg)?;
            target.jammer_variance = t.jammer_variance;
            target.rx_noise_variance = t.rx_noise_variance;
            target.data_bits = t.data_bits.clone();
            targets.push(target);
        }
        let tx_power = 10f64.powf(r.tx_snr_db / 10.0) * r.noise_variance;
        let mut scn = Scenario::new(
            carrier,
            envelope,
            r.chirps_per_frame,
            tx_power,
            r.noise_variance,
            geometry,
            targets,
            seed_override.unwrap_or(self.seed),
        )
        .map_err(anyhow::Error::msg)?;
        scn.radar_height = r.antenna_height_m;
        scn.grazing_angle = r.grazing_angle_deg.to_radians();
        scn.tap_mode = TapMode::ExplicitTaps;
        if let Some(p) = &self.pathloss {
            scn.pathloss = match p.model.as_str() {
                "free_space" => Pathloss::FreeSpace,
                "exponent" => Pathloss::Exponent {
                    scale: p.scale.context("pathloss.scale required")?,
                    exponent: p.exponent.context("pathloss.exponent required")?,
                },
                other => bail!("unknown pathloss model '{other}'"),
            };
        }
        Ok(scn)
    }
}
