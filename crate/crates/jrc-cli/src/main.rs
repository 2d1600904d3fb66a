//! `jrc` — design and simulation front end.
//!
//! Subcommands: `optimize-waveform`, `design-beamformer`,
//! `design-codebook`, `bounds`, `rates`, `simulate`. Every run writes its
//! CSV outputs plus a `manifest.json` snapshot into `--out`. Exit codes:
//! 0 success, 2 configuration error, 1 runtime failure.

mod csvio;
mod manifest;

use jrc_cli::config;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use config::parse_scenario_file;
use csvio::{create, full, write_rows};
use manifest::RunManifest;

use jrc_core::array::{design_beamformer, design_grid_beams, Taper};
use jrc_core::bounds::crb_block;
use jrc_core::codebook::{awgn_ber_curve, design};
use jrc_core::linkbudget::right_angle_rates;
use jrc_core::optimizer::{optimize, CovConfig};
use jrc_core::simulator::{aggregate_reports, range_doppler_map, run_frame, Mode, ReceiverConfig};
use jrc_core::waveform::{EnvelopeFamily, PulseEnvelope};

#[derive(Parser)]
#[command(name = "jrc", version, about = "Joint radar-communication design toolkit")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only warnings and errors.
    #[arg(long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Debug-level logging.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a transmit envelope by correlation descent.
    OptimizeWaveform(OptimizeArgs),
    /// Design receive beamformer weights.
    DesignBeamformer(BeamformerArgs),
    /// Design a Gaussian spherical codebook (optionally with a BER sweep).
    DesignCodebook(CodebookArgs),
    /// Cramér-Rao bounds for each scenario target.
    Bounds(BoundsArgs),
    /// Forward/reverse data-rate bounds over a range sweep.
    Rates(RatesArgs),
    /// Run the end-to-end receiver over Monte Carlo frames.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    /// Pulse duration, seconds.
    #[arg(long, default_value_t = 100e-6)]
    ts: f64,
    #[arg(long, default_value_t = 40e6)]
    sample_rate: f64,
    /// Gaussian width parameter β, seconds.
    #[arg(long, default_value_t = 75e-6)]
    beta: f64,
    /// Bandwidth cap, Hz.
    #[arg(long, default_value_t = 1e6)]
    bandwidth_cap: f64,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Correlation lags as start:end (samples).
    #[arg(long, default_value = "2:20")]
    lags: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BeamformerArgs {
    #[arg(long, default_value_t = 12)]
    elements: usize,
    #[arg(long, default_value_t = 0.00625)]
    spacing_m: f64,
    /// Element coordinates from a CSV file (`x_m,y_m,z_m`); overrides the
    /// ULA flags.
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// FoV bounds in degrees relative to broadside.
    #[arg(long, default_value_t = -50.0)]
    fov_min_deg: f64,
    #[arg(long, default_value_t = 48.0)]
    fov_max_deg: f64,
    #[arg(long, default_value_t = 8)]
    beams: usize,
    #[arg(long, default_value_t = 24e9)]
    carrier_hz: f64,
    /// "taylor" or "none".
    #[arg(long, default_value = "taylor")]
    taper: String,
    /// "eigen" (FoV covariance eigenvectors) or "grid" (orthogonal
    /// pointing grid).
    #[arg(long, default_value = "eigen")]
    bank: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CodebookArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    rate: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 200)]
    iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional SNR sweep "start:stop:step" (dB) for a BER table.
    #[arg(long)]
    ber_snr: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long, default_value_t = 5.0)]
    r_min: f64,
    #[arg(long, default_value_t = 100.0)]
    r_max: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Inter-target separation, meters.
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 100.0)]
    rho_t_db: f64,
    #[arg(long, default_value_t = 64)]
    pulses: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 10)]
    frames: usize,
    /// radar | jrc-fwd | jrc-rev
    #[arg(long, default_value = "radar")]
    mode: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Dump range-Doppler magnitude maps for the first N frames.
    #[arg(long, default_value_t = 0)]
    dump_rd: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet {
        "warn"
    } else if cli.verbose {
        "debug"
    } else {
        "info"
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    if let Some(threads) = cli.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .is_err()
        {
            log::warn!("thread pool already initialized; --threads ignored");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let config_error = e.is::<ConfigError>();
            eprintln!("error: {e:#}");
            if config_error {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

/// Marker for errors that should exit with status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl std::error::Error for ConfigError {}

fn config_err(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(ConfigError(format!("{e:#}")))
}

fn load_scenario(path: &Path, seed: Option<u64>) -> anyhow::Result<jrc_core::scenario::Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {}", path.display()))
        .map_err(config_err)?;
    let file = parse_scenario_file(&text).map_err(config_err)?;
    file.build(seed).map_err(config_err)
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    let start = Instant::now();
    match cmd {
        Command::OptimizeWaveform(args) => {
            let lags = parse_lags(&args.lags).map_err(config_err)?;
            let env0 = PulseEnvelope::make(
                EnvelopeFamily::Gaussian { beta: args.beta },
                args.ts,
                args.sample_rate,
            )
            .map_err(|e| config_err(anyhow::Error::msg(e)))?;
            let mut cfg =
                CovConfig::new(args.bandwidth_cap).map_err(|e| config_err(anyhow::Error::msg(e)))?;
            cfg.max_iters = args.iters;
            cfg.lag_set = lags;
            log::info!(
                "optimizing {} samples over {} iterations (cap {} Hz)",
                env0.len(),
                cfg.max_iters,
                args.bandwidth_cap
            );
            let (optimized, trace) = optimize(&env0, &cfg)?;
            std::fs::create_dir_all(&args.out)?;
            let env_path = args.out.join("envelope.csv");
            optimized.write_csv(create(&env_path)?)?;
            let trace_path = args.out.join("trace.csv");
            write_rows(
                create(&trace_path)?,
                "iter,cost,bandwidth_hz,accepted",
                trace.iterations.iter().map(|r| {
                    format!("{},{},{},{}", r.iter, full(r.cost), full(r.bandwidth_hz), r.accepted as u8)
                }),
            )?;
            let mut m = RunManifest::new(
                "optimize-waveform",
                None,
                serde_json::json!({
                    "ts": args.ts, "sample_rate": args.sample_rate, "beta": args.beta,
                    "bandwidth_cap": args.bandwidth_cap, "iters": args.iters, "lags": args.lags,
                }),
            );
            m.outputs = vec!["envelope.csv".into(), "trace.csv".into()];
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
        Command::DesignBeamformer(args) => {
            let geom = match &args.geometry {
                Some(path) => read_geometry(path).map_err(config_err)?,
                None => jrc_core::array::ArrayGeometry::ula(args.elements, args.spacing_m)
                    .map_err(|e| config_err(anyhow::Error::msg(e)))?,
            };
            let taper = match args.taper.as_str() {
                "taylor" => Taper::Taylor { nbar: 4, sll_db: 35.0 },
                "none" => Taper::None,
                other => {
                    return Err(config_err(anyhow::anyhow!("unknown taper '{other}'")));
                }
            };
            let fov = (args.fov_min_deg.to_radians(), args.fov_max_deg.to_radians());
            let bank = match args.bank.as_str() {
                "eigen" => design_beamformer(&geom, fov, args.beams, |_| 1.0, taper, args.carrier_hz),
                "grid" => design_grid_beams(&geom, fov, args.beams, taper, args.carrier_hz),
                other => {
                    return Err(config_err(anyhow::anyhow!("unknown bank '{other}'")));
                }
            }
            .map_err(|e| config_err(anyhow::Error::msg(e)))?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("beams.csv");
            write_rows(
                create(&path)?,
                "beam_index,element_index,re,im",
                bank.weights.iter().enumerate().flat_map(|(b, w)| {
                    w.iter()
                        .enumerate()
                        .map(move |(l, c)| format!("{b},{l},{},{}", full(c.re), full(c.im)))
                        .collect::<Vec<_>>()
                }),
            )?;
            let mut m = RunManifest::new(
                "design-beamformer",
                None,
                serde_json::json!({
                    "elements": args.elements, "spacing_m": args.spacing_m,
                    "fov_deg": [args.fov_min_deg, args.fov_max_deg],
                    "beams": args.beams, "carrier_hz": args.carrier_hz,
                    "taper": args.taper, "bank": args.bank,
                }),
            );
            m.outputs = vec!["beams.csv".into()];
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
        Command::DesignCodebook(args) => {
            log::info!(
                "designing ({}, {}) codebook from {} samples",
                args.n,
                args.rate,
                args.samples
            );
            let cb = design(args.n, args.rate, args.samples, args.iters, args.tol, args.seed)
                .map_err(|e| config_err(anyhow::Error::msg(e)))?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("codebook.csv");
            let header: String = (0..args.n)
                .map(|d| format!("c{d}"))
                .collect::<Vec<_>>()
                .join(",");
            write_rows(
                create(&path)?,
                &header,
                cb.codewords().iter().map(|cw| {
                    cw.iter().map(|v| full(*v)).collect::<Vec<_>>().join(",")
                }),
            )?;
            let mut outputs = vec!["codebook.csv".into()];
            if let Some(sweep) = &args.ber_snr {
                let grid = parse_sweep(sweep).map_err(config_err)?;
                let curve = awgn_ber_curve(&cb, &grid, args.trials, args.seed)?;
                let ber_path = args.out.join("ber.csv");
                write_rows(
                    create(&ber_path)?,
                    "snr_db,ber,ser,trials",
                    curve.iter().map(|p| {
                        format!("{},{},{},{}", full(p.snr_db), full(p.ber), full(p.ser), p.trials)
                    }),
                )?;
                outputs.push("ber.csv".into());
            }
            let mut m = RunManifest::new(
                "design-codebook",
                Some(args.seed),
                serde_json::json!({
                    "n": args.n, "rate": args.rate, "samples": args.samples,
                    "iters": args.iters, "tol": args.tol,
                    "ber_snr": args.ber_snr, "trials": args.trials,
                }),
            );
            m.outputs = outputs;
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
        Command::Bounds(args) => {
            let scn = load_scenario(&args.scenario, args.seed)?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("crb.csv");
            let mut rows = Vec::new();
            for k in 0..scn.targets.len() {
                let report = crb_block(&scn, k)?;
                rows.push(format!(
                    "{k},{},{},{},{}",
                    full(report.crb_range),
                    full(report.crb_velocity),
                    full(report.crb_azimuth),
                    report.with_cross_terms as u8
                ));
            }
            write_rows(
                create(&path)?,
                "target,crb_range_m2,crb_vel_m2s2,crb_az_rad2,with_cross_terms",
                rows.into_iter(),
            )?;
            let mut m = RunManifest::new(
                "bounds",
                args.seed,
                serde_json::json!({"scenario": args.scenario.display().to_string()}),
            );
            m.outputs = vec!["crb.csv".into()];
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
        Command::Rates(args) => {
            if args.steps < 2 || args.r_max <= args.r_min {
                return Err(config_err(anyhow::anyhow!("invalid range sweep")));
            }
            let grid: Vec<f64> = (0..args.steps)
                .map(|i| {
                    args.r_min + (args.r_max - args.r_min) * i as f64 / (args.steps - 1) as f64
                })
                .collect();
            let rows = right_angle_rates(&grid, args.separation, args.rho_t_db, args.pulses)?;
            std::fs::create_dir_all(&args.out)?;
            let path = args.out.join("rates.csv");
            write_rows(
                create(&path)?,
                "range_m,target,forward_bits,reverse_bits,sinr_fwd_db,sinr_rev_db",
                rows.iter().map(|r| {
                    format!(
                        "{},{},{},{},{},{}",
                        full(r.range_m),
                        r.target,
                        full(r.forward_bits),
                        full(r.reverse_bits),
                        full(r.sinr_fwd_db),
                        full(r.sinr_rev_db)
                    )
                }),
            )?;
            let mut m = RunManifest::new(
                "rates",
                None,
                serde_json::json!({
                    "r_min": args.r_min, "r_max": args.r_max, "steps": args.steps,
                    "separation": args.separation, "rho_t_db": args.rho_t_db,
                    "pulses": args.pulses,
                }),
            );
            m.outputs = vec!["rates.csv".into()];
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
        Command::Simulate(args) => {
            let mode = match args.mode.as_str() {
                "radar" => Mode::RadarOnly,
                "jrc-fwd" => Mode::JrcForward,
                "jrc-rev" => Mode::JrcReverse,
                other => {
                    return Err(config_err(anyhow::anyhow!("unknown mode '{other}'")));
                }
            };
            let scn = load_scenario(&args.scenario, args.seed)?;
            let cfg = ReceiverConfig::default();
            std::fs::create_dir_all(&args.out)?;
            log::info!("simulating {} frames in {:?} mode", args.frames, mode);

            let mut detections_rows = Vec::new();
            let mut reports = Vec::with_capacity(args.frames);
            for frame in 0..args.frames {
                let report = run_frame(&scn, &cfg, frame, mode)?;
                for (di, d) in report.detections.iter().enumerate() {
                    let (truth, err) = match (d.truth, d.errors) {
                        (Some(t), Some(e)) => (
                            t.to_string(),
                            format!("{},{},{}", full(e[0]), full(e[1]), full(e[2])),
                        ),
                        _ => ("".into(), ",,".into()),
                    };
                    let bits: String = d
                        .decoded_bits
                        .iter()
                        .map(|b| char::from(b'0' + *b))
                        .collect();
                    detections_rows.push(format!(
                        "{frame},{di},{},{},{},{},{truth},{err},{bits}",
                        full(d.est_range),
                        full(d.est_velocity),
                        full(d.est_azimuth),
                        full(d.snr_db),
                    ));
                }
                if frame < args.dump_rd {
                    let map = range_doppler_map(&scn, &cfg, frame, mode)?;
                    let rd_path = args.out.join(format!("rd_frame{frame}.csv"));
                    let header: String = (0..map.first().map_or(0, Vec::len))
                        .map(|d| format!("doppler{d}"))
                        .collect::<Vec<_>>()
                        .join(",");
                    write_rows(
                        create(&rd_path)?,
                        &header,
                        map.iter().map(|row| {
                            row.iter()
                                .map(|v| format!("{v:.6e}"))
                                .collect::<Vec<_>>()
                                .join(",")
                        }),
                    )?;
                }
                reports.push(report);
            }
            write_rows(
                create(&args.out.join("detections.csv"))?,
                "frame,detection,est_range_m,est_velocity_mps,est_azimuth_rad,snr_db,truth,\
                 err_range_m,err_velocity_mps,err_azimuth_rad,decoded_bits",
                detections_rows.into_iter(),
            )?;

            let summary = aggregate_reports(&scn, &reports)?;
            let ber = summary.ber().map_or(String::new(), |b| full(b));
            write_rows(
                create(&args.out.join("aggregate.csv"))?,
                "target,frames,detections,rmse_range_m,rmse_velocity_mps,rmse_azimuth_rad,\
                 crb_range_m2,crb_velocity_m2s2,crb_azimuth_rad2,ber,false_alarm_rate",
                summary.per_target.iter().map(|t| {
                    format!(
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        t.target,
                        summary.frames,
                        t.detections,
                        full(t.rmse_range),
                        full(t.rmse_velocity),
                        full(t.rmse_azimuth),
                        full(t.crb_range),
                        full(t.crb_velocity),
                        full(t.crb_azimuth),
                        ber,
                        full(summary.false_alarm_rate()),
                    )
                }),
            )?;
            let mut outputs = vec!["detections.csv".into(), "aggregate.csv".into()];
            for k in 0..args.dump_rd.min(args.frames) {
                outputs.push(format!("rd_frame{k}.csv"));
            }
            let mut m = RunManifest::new(
                "simulate",
                args.seed,
                serde_json::json!({
                    "scenario": args.scenario.display().to_string(),
                    "frames": args.frames, "mode": args.mode, "dump_rd": args.dump_rd,
                }),
            );
            m.outputs = outputs;
            m.wall_clock_seconds = start.elapsed().as_secs_f64();
            m.write(&args.out)?;
        }
    }
    Ok(())
}

/// Reads an element-coordinate CSV with header `x_m,y_m,z_m`.
fn read_geometry(path: &Path) -> anyhow::Result<jrc_core::array::ArrayGeometry> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read geometry file {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("geometry file is empty")?;
    anyhow::ensure!(
        header.trim() == "x_m,y_m,z_m",
        "expected header 'x_m,y_m,z_m', got '{header}'"
    );
    let mut positions = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        anyhow::ensure!(fields.len() == 3, "line {}: expected 3 fields", i + 2);
        let mut p = [0.0; 3];
        for (j, f) in fields.iter().enumerate() {
            p[j] = f
                .trim()
                .parse()
                .with_context(|| format!("line {}: bad number '{f}'", i + 2))?;
        }
        positions.push(p);
    }
    jrc_core::array::ArrayGeometry::custom(positions).map_err(anyhow::Error::msg)
}

fn parse_lags(text: &str) -> anyhow::Result<Vec<usize>> {
    let (a, b) = text
        .split_once(':')
        .context("lags must be start:end")?;
    let start: usize = a.trim().parse().context("bad lag start")?;
    let end: usize = b.trim().parse().context("bad lag end")?;
    anyhow::ensure!(start >= 1 && end >= start, "lags must satisfy 1 ≤ start ≤ end");
    Ok((start..=end).collect())
}

fn parse_sweep(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    anyhow::ensure!(parts.len() == 3, "sweep must be start:stop:step");
    let start: f64 = parts[0].parse().context("bad sweep start")?;
    let stop: f64 = parts[1].parse().context("bad sweep stop")?;
    let step: f64 = parts[2].parse().context("bad sweep step")?;
    anyhow::ensure!(step > 0.0 && stop >= start, "sweep must increase");
    let mut grid = Vec::new();
    let mut v = start;
    while v <= stop + 1e-9 {
        grid.push(v);
        v += step;
    }
    Ok(grid)
}
