//! Hot-path benchmarks: pulse synthesis/compression, information blocks,
//! beamformer design, codebook iterations, and one optimizer step.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use jrc_core::array::{design_grid_beams, ArrayGeometry, Taper};
use jrc_core::bounds::crb_block;
use jrc_core::codebook::design;
use jrc_core::optimizer::{cov_step, CovConfig};
use jrc_core::scenario::{presets, Scenario, Target};
use jrc_core::simulator::{run_frame, Mode, ReceiverConfig};
use jrc_core::waveform::{EnvelopeFamily, FmcwCarrier, PulseEnvelope};

fn small_scenario() -> Scenario {
    let carrier = FmcwCarrier::new(0.0, 2e6, 12e-6, 0.0).unwrap();
    let envelope =
        PulseEnvelope::make(EnvelopeFamily::Gaussian { beta: 2e-6 }, 12e-6, 20e6).unwrap();
    let geometry = ArrayGeometry::ula(4, 0.05).unwrap();
    let target = Target::new(600.0, 25.0, 0.5, 0.1, 1.0).unwrap();
    Scenario::new(carrier, envelope, 8, 1.0, 1.0, geometry, vec![target], 1).unwrap()
}

fn bench_synthesis(c: &mut Criterion) {
    let scn = presets::table2(64, 1);
    c.bench_function("synthesize_rx_rf_table2_pulse", |b| {
        b.iter(|| black_box(scn.synthesize_rx_rf(3).unwrap()))
    });
}

fn bench_crb(c: &mut Criterion) {
    let scn = small_scenario();
    c.bench_function("crb_block_small", |b| {
        b.iter(|| black_box(crb_block(&scn, 0).unwrap()))
    });
}

fn bench_beamformer(c: &mut Criterion) {
    let geom = ArrayGeometry::ula(12, 0.00625).unwrap();
    c.bench_function("design_grid_beams_12x8", |b| {
        b.iter(|| {
            black_box(
                design_grid_beams(
                    &geom,
                    (-0.8, 0.8),
                    8,
                    Taper::Taylor { nbar: 4, sll_db: 35.0 },
                    24e9,
                )
                .unwrap(),
            )
        })
    });
}

fn bench_codebook(c: &mut Criterion) {
    c.bench_function("codebook_design_16x4_2000", |b| {
        b.iter(|| black_box(design(16, 4, 2000, 20, 1e-6, 3).unwrap()))
    });
}

fn bench_optimizer_step(c: &mut Criterion) {
    let env = PulseEnvelope::make(EnvelopeFamily::Gaussian { beta: 15e-6 }, 20e-6, 4e6).unwrap();
    let mut cfg = CovConfig::new(1e6).unwrap();
    cfg.lag_set = (2..=10).collect();
    cfg.max_shifts = 16;
    cfg.alpha_count = 4;
    c.bench_function("cov_step_80_samples", |b| {
        b.iter(|| black_box(cov_step(&env, &cfg, 1.0).unwrap()))
    });
}

fn bench_frame(c: &mut Criterion) {
    let scn = small_scenario();
    let cfg = ReceiverConfig {
        range_fft: 512,
        doppler_fft: 64,
        angle_fft: 256,
        num_beams: 4,
        fov: (-0.5, 0.5),
        ..ReceiverConfig::default()
    };
    c.bench_function("run_frame_small", |b| {
        b.iter(|| black_box(run_frame(&scn, &cfg, 0, Mode::RadarOnly).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_synthesis,
    bench_crb,
    bench_beamformer,
    bench_codebook,
    bench_optimizer_step,
    bench_frame
);
criterion_main!(benches);
