//! Release acceptance suite: one test per criterion, each printing a
//! PASS/FAIL line with its measured numbers. Run with
//! `cargo test -p beamsep-cli --test acceptance -- --nocapture` to see the
//! lines; `--test-threads=1` keeps them in order.

use std::time::Instant;

use beamsep_core::{
    build_mom, enhance, istft_inverse, mix_scene, mvdr_weights, si_sdr, si_sdri, snr_loss,
    solve_mixing_matrix, stft_forward, ArrayGeometry, AssignmentConstraint, BeamformConfig,
    LossConfig, MaskProvider, MomSpec, SceneSource, SceneSpec, Scm, StftConfig, Waveform,
    SPEED_OF_SOUND,
};
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Regression bound for criterion 5: the median beamformed SI-SDRi over the
/// 50 frozen scenes. Calibrated once from this exact harness and committed;
/// the suite fails if the pipeline ever regresses below it.
// Regression bound frozen from the calibration run of the seeded benchmark
// (observed median 8.04 dB, 1 dB margin for platform float variation).
const MEDIAN_BF_SI_SDRI_FLOOR_DB: f64 = 7.0;

fn noise_wave(len: usize, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Waveform::mono((0..len).map(|_| rng.random_range(-1.0..1.0)).collect(), 16_000).unwrap()
}

#[test]
fn criterion_1_stft_round_trip() {
    let start = Instant::now();
    let cfg = StftConfig::default_16k();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let channels = rng.random_range(1..=16usize);
        let len = rng.random_range(16_000..=80_000usize);
        let mut samples = Array2::zeros((channels, len));
        samples.mapv_inplace(|_: f64| rng.random_range(-1.0..1.0));
        let wave = Waveform::new(samples, 16_000).unwrap();

        let spec = stft_forward(&wave, &cfg).unwrap();
        let back = istft_inverse(&spec, &cfg, len).unwrap();

        let err: f64 = wave
            .samples()
            .iter()
            .zip(back.samples().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let pow: f64 = wave.samples().iter().map(|v| v * v).sum();
        worst = worst.max((err / pow).sqrt());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = worst <= 1e-6 && elapsed < 10.0;
    println!(
        "ACCEPTANCE 1 stft-round-trip: {} (worst relative error {worst:.3e}, {elapsed:.2} s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "worst {worst:.3e}, elapsed {elapsed:.2} s");
}

#[test]
fn criterion_2_mvdr_distortionless_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let c = [2usize, 4, 16][trial % 3];
        // steering vector with a usable reference entry
        let d: Vec<Complex64> = loop {
            let d: Vec<Complex64> = (0..c)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let mean_sq = d.iter().map(|v| v.norm_sqr()).sum::<f64>() / c as f64;
            if d[0].norm_sqr() >= 0.05 * mean_sq && d[0].norm_sqr() > 1e-4 {
                break d;
            }
        };
        let sigma = rng.random_range(0.1..10.0);
        let mut phi_xx = Array3::zeros((1, c, c));
        for i in 0..c {
            for j in 0..c {
                phi_xx[[0, i, j]] = d[i] * d[j].conj() * sigma;
            }
            phi_xx[[0, i, i]] = Complex64::new(phi_xx[[0, i, i]].re, 0.0);
        }

        let mut a = Array2::zeros((c, c));
        for v in a.iter_mut() {
            *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let mut phi_nn = Array3::zeros((1, c, c));
        for i in 0..c {
            for j in 0..c {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..c {
                    acc += a[[i, k]] * a[[j, k]].conj();
                }
                if i == j {
                    acc = Complex64::new(acc.re + 0.1, 0.0);
                }
                phi_nn[[0, i, j]] = acc;
            }
        }
        // exact Hermitian symmetry for the constructor
        for i in 0..c {
            for j in 0..i {
                phi_nn[[0, j, i]] = phi_nn[[0, i, j]].conj();
            }
        }

        let cfg = BeamformConfig::default();
        let weights = mvdr_weights(
            &Scm::new(phi_xx).unwrap(),
            &Scm::new(phi_nn).unwrap(),
            &cfg,
        )
        .unwrap();
        let response: Complex64 = (0..c)
            .map(|i| weights.weights()[[0, i]].conj() * d[i])
            .sum();
        let rel = (response - d[0]).norm() / d[0].norm();
        worst = worst.max(rel);
    }

    // closed form: identity noise, d = [1, 1] => weights [0.5, 0.5]
    let mut phi_xx = Array3::zeros((1, 2, 2));
    let mut phi_nn = Array3::zeros((1, 2, 2));
    for i in 0..2 {
        for j in 0..2 {
            phi_xx[[0, i, j]] = Complex64::new(1.0, 0.0);
        }
        phi_nn[[0, i, i]] = Complex64::new(1.0, 0.0);
    }
    let weights = mvdr_weights(
        &Scm::new(phi_xx).unwrap(),
        &Scm::new(phi_nn).unwrap(),
        &BeamformConfig::default(),
    )
    .unwrap();
    let closed_err = (0..2)
        .map(|i| (weights.weights()[[0, i]] - Complex64::new(0.5, 0.0)).norm())
        .fold(0.0, f64::max);

    let ok = worst <= 1e-8 && closed_err <= 1e-12;
    println!(
        "ACCEPTANCE 2 mvdr-distortionless: {} (worst relative response error {worst:.3e}, \
         closed-form error {closed_err:.3e})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "worst {worst:.3e}, closed form {closed_err:.3e}");
}

#[test]
fn criterion_3_mixing_matrix_oracle_equivalence() {
    use beamsep_core::{brute_force_mixing_matrix, reconstruction_error};

    let weak_set: [&[usize]; 3] = [&[0, 1, 1], &[0, 0, 1], &[0, 1, 0]];
    let mut worst_gap: f64 = 0.0;
    for trial in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(303 + trial);
        let s = if trial % 2 == 0 { 3 } else { 4 };
        let len = 48;
        let mut sources = Array2::zeros((s, len));
        sources.mapv_inplace(|_: f64| rng.random_range(-1.0..1.0));
        let truth: Vec<usize> = (0..s).map(|_| rng.random_range(0..2usize)).collect();
        let mut mixtures = Array2::zeros((2, len));
        for (src, mix) in truth.iter().enumerate() {
            for i in 0..len {
                mixtures[[*mix, i]] += sources[[src, i]];
            }
        }

        let solved =
            solve_mixing_matrix(&mixtures, &sources, AssignmentConstraint::Unconstrained).unwrap();
        let brute =
            brute_force_mixing_matrix(&mixtures, &sources, AssignmentConstraint::Unconstrained)
                .unwrap();
        let err_solved = reconstruction_error(&mixtures, &sources, &solved).unwrap();
        let err_brute = reconstruction_error(&mixtures, &sources, &brute).unwrap();
        worst_gap = worst_gap.max((err_solved - err_brute).abs());

        // weak-enhancement assignments stay within the admissible set even
        // on inputs that do not decompose exactly
        if s == 3 {
            let mut noisy = mixtures.clone();
            noisy.mapv_inplace(|v| v + rng.random_range(-0.3..0.3));
            for m in [
                solve_mixing_matrix(&noisy, &sources, AssignmentConstraint::WeakEnhancement)
                    .unwrap(),
                brute_force_mixing_matrix(&noisy, &sources, AssignmentConstraint::WeakEnhancement)
                    .unwrap(),
            ] {
                assert!(
                    weak_set.contains(&m.assignment()),
                    "assignment {:?} outside the weak-enhancement set",
                    m.assignment()
                );
            }
        }
    }
    let ok = worst_gap <= 1e-9;
    println!(
        "ACCEPTANCE 3 mixing-matrix-oracle-equivalence: {} (worst error gap {worst_gap:.3e} \
         over 500 trials, weak set respected)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "worst gap {worst_gap:.3e}");
}

#[test]
fn criterion_4_loss_saturation_and_lower_bound() {
    let cfg = LossConfig::new(30.0, 0.0, 0.5).unwrap();
    let x = noise_wave(256, 404);
    let saturated = snr_loss(&x, &x, &x, &cfg).unwrap();
    let sat_err = (saturated - (-30.0)).abs();

    let mut worst: f64 = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(405);
    for _ in 0..1000 {
        let len = rng.random_range(16..256usize);
        let reference = Waveform::mono(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            16_000,
        )
        .unwrap();
        let estimate = Waveform::mono(
            (0..len).map(|_| rng.random_range(-2.0..2.0)).collect(),
            16_000,
        )
        .unwrap();
        let loss = snr_loss(&reference, &estimate, &reference, &cfg).unwrap();
        worst = worst.min(loss);
    }

    let ok = sat_err <= 1e-9 && worst >= -30.0 - 1e-9;
    println!(
        "ACCEPTANCE 4 loss-saturation: {} (saturated loss error {sat_err:.3e}, \
         minimum over 1000 inputs {worst:.6} dB)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "saturation error {sat_err:.3e}, min loss {worst}");
}

/// The input SI-SDR is set by scaling the summed interference: bisect the
/// scale until the mixture's SI-SDR against the target stem hits `want`.
fn interference_scale_for(
    target_ref: &Waveform,
    interference_ref: &Waveform,
    want_db: f64,
) -> f64 {
    let mix_at = |g: f64| {
        let samples = target_ref.samples() + &(interference_ref.samples() * g);
        let mix = Waveform::new(samples, target_ref.sample_rate()).unwrap();
        si_sdr(&mix, target_ref).unwrap()
    };
    let (mut lo, mut hi) = (1e-4f64, 1e4f64);
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if mix_at(mid) > want_db {
            lo = mid; // too clean, add interference
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

#[test]
fn criterion_5_beamforming_beats_masking() {
    let start = Instant::now();
    let geometry = ArrayGeometry::respeaker_square(0.0457).unwrap();
    let stft_cfg = StftConfig::default_16k();
    let grid: [f64; 8] = [0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0];
    let len = 32_000;

    let mut bf_improvements = Vec::with_capacity(50);
    let mut mask_improvements = Vec::with_capacity(50);
    let mut wins = 0usize;
    for scene in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5_000 + scene);
        let n_interferers = rng.random_range(1..=3usize);
        let mut slots: Vec<usize> = (0..8).collect();
        for i in (1..8).rev() {
            let j = rng.random_range(0..=i);
            slots.swap(i, j);
        }

        let mut sources = Vec::with_capacity(1 + n_interferers);
        for (order, slot) in slots.iter().take(1 + n_interferers).enumerate() {
            sources.push(SceneSource {
                wave: noise_wave(len, 5_000_000 + scene * 100 + order as u64),
                azimuth_deg: grid[*slot],
                elevation_deg: 0.0,
                gain_db: 0.0,
            });
        }
        let spec = SceneSpec {
            geometry: geometry.clone(),
            sources,
            sample_rate: 16_000,
            speed_of_sound: SPEED_OF_SOUND,
            seed: scene,
        };
        let (_, stems) = mix_scene(&spec).unwrap();
        let target_stem = &stems[0];

        let mut interference = stems[1].samples().clone();
        for stem in &stems[2..] {
            interference += stem.samples();
        }
        let interference = Waveform::new(interference, 16_000).unwrap();

        let want_db = rng.random_range(-4.5..4.5);
        let scale = interference_scale_for(
            &target_stem.extract_channel(0).unwrap(),
            &interference.extract_channel(0).unwrap(),
            want_db,
        );
        let mixture = Waveform::new(
            target_stem.samples() + &(interference.samples() * scale),
            16_000,
        )
        .unwrap();

        let target_ref = target_stem.extract_channel(0).unwrap();
        let mixture_ref = mixture.extract_channel(0).unwrap();
        let input_si_sdr = si_sdr(&mixture_ref, &target_ref).unwrap();
        assert!(
            (-5.0..=5.0).contains(&input_si_sdr),
            "scene {scene}: input SI-SDR {input_si_sdr} outside [-5, 5]"
        );

        // Measure the beamformer stage itself: the floor post-mask is a separate
        // artifact-suppression stage that deliberately trades SI-SDR, so it is
        // disabled here; the single-channel baseline is plain mask-times-reference.
        let provider = MaskProvider::OracleWiener { exponent: 2.0 };
        let bf_cfg = BeamformConfig {
            postmask_enabled: false,
            ..BeamformConfig::default()
        };
        let beamformed =
            enhance(&mixture, &provider, Some(target_stem), &stft_cfg, &bf_cfg).unwrap();
        let mask_only =
            enhance(&mixture_ref, &provider, Some(&target_ref), &stft_cfg, &bf_cfg).unwrap();

        let bf_i = si_sdri(&beamformed, &target_ref, &mixture_ref).unwrap();
        let mask_i = si_sdri(&mask_only, &target_ref, &mixture_ref).unwrap();
        if bf_i >= mask_i {
            wins += 1;
        }
        bf_improvements.push(bf_i);
        mask_improvements.push(mask_i);
    }

    let median = |values: &[f64]| {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        (sorted[24] + sorted[25]) / 2.0
    };
    let median_bf = median(&bf_improvements);
    let median_mask = median(&mask_improvements);
    let elapsed = start.elapsed().as_secs_f64();

    let ok = wins >= 35
        && median_bf >= median_mask
        && median_bf >= MEDIAN_BF_SI_SDRI_FLOOR_DB
        && elapsed < 120.0;
    println!(
        "ACCEPTANCE 5 beamforming-beats-masking: {} (wins {wins}/50, median SI-SDRi \
         beamformed {median_bf:.2} dB vs mask-only {median_mask:.2} dB, floor \
         {MEDIAN_BF_SI_SDRI_FLOOR_DB} dB, {elapsed:.1} s)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "wins {wins}/50, median bf {median_bf:.3}, median mask {median_mask:.3}, {elapsed:.1} s"
    );
}

#[test]
fn criterion_6_si_sdr_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(16..512usize);
        let estimate = Waveform::mono(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            16_000,
        )
        .unwrap();
        let reference = Waveform::mono(
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect(),
            16_000,
        )
        .unwrap();
        let alpha = {
            let magnitude = 10f64.powf(rng.random_range(-6.0..6.0));
            if rng.random_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        };
        let scaled = Waveform::new(estimate.samples() * alpha, 16_000).unwrap();
        let a = si_sdr(&estimate, &reference).unwrap();
        let b = si_sdr(&scaled, &reference).unwrap();
        worst = worst.max((a - b).abs());
    }

    let mixture = noise_wave(400, 607);
    let reference = noise_wave(400, 608);
    let zero_improvement = si_sdri(&mixture, &reference, &mixture).unwrap();

    let hand = si_sdr(
        &Waveform::mono(vec![1.0, 0.0], 16_000).unwrap(),
        &Waveform::mono(vec![1.0, 1.0], 16_000).unwrap(),
    )
    .unwrap();

    let ok = worst <= 1e-9 && zero_improvement == 0.0 && hand == 0.0;
    println!(
        "ACCEPTANCE 6 si-sdr-properties: {} (worst scale deviation {worst:.3e} dB, \
         self-improvement {zero_improvement} dB, hand case {hand} dB)",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "scale {worst:.3e}, self {zero_improvement}, hand {hand}");
}

#[test]
fn criterion_7_mom_protocol_conformance() {
    let targets: Vec<Waveform> = (0..3).map(|i| noise_wave(8, 700 + i)).collect();
    let interference: Vec<Waveform> = (0..4).map(|i| noise_wave(8, 800 + i)).collect();
    let mut k_counts = [0usize; 5];
    let mut gains = Vec::new();
    for seed in 0..10_000u64 {
        let spec = MomSpec {
            target_mixtures: targets.clone(),
            interference_mixtures: interference.clone(),
            k: None,
            gain_range: (-5.0, 5.0),
            seed,
        };
        let (_, components, drawn) = build_mom(&spec).unwrap();
        assert!(
            (2..=4).contains(&components.len()),
            "seed {seed}: k = {}",
            components.len()
        );
        k_counts[components.len()] += 1;
        assert!(
            drawn.iter().all(|g| (-5.0..5.0).contains(g)),
            "seed {seed}: gain outside [-5, 5): {drawn:?}"
        );
        gains.extend(drawn);
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let each_k_drawn = k_counts[2] >= 3_000 && k_counts[3] >= 3_000 && k_counts[4] >= 3_000;

    let ok = mean.abs() <= 0.1 && each_k_drawn;
    println!(
        "ACCEPTANCE 7 mom-protocol: {} (k counts 2/3/4 = {}/{}/{}, mean gain bias \
         {mean:+.4} dB over {} draws)",
        if ok { "PASS" } else { "FAIL" },
        k_counts[2],
        k_counts[3],
        k_counts[4],
        gains.len()
    );
    assert!(ok, "mean {mean}, counts {k_counts:?}");
}

#[test]
fn criterion_8_file_format_round_trips() {
    use beamsep_cli::maskfile::{read_masks, write_masks};
    use beamsep_cli::wav::{read_wav, write_wav, WavEncoding};
    use beamsep_core::Mask;
    use std::process::Command;

    let dir = tempfile::tempdir().unwrap();

    // float32 WAV: bitwise identity for f32-precision samples
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut samples = Array2::zeros((6, 5_000));
    samples.mapv_inplace(|_: f64| f64::from(rng.random_range(-1.0f32..1.0)));
    let wave = Waveform::new(samples, 16_000).unwrap();
    let wav_path = dir.path().join("w.wav");
    write_wav(&wav_path, &wave, WavEncoding::Float32).unwrap();
    let wav_ok = read_wav(&wav_path).unwrap().samples() == wave.samples();

    // UMSK1: write/read identity
    let masks: Vec<Mask> = (0..3)
        .map(|layer| {
            Mask::new(Array2::from_shape_fn((40, 33), |(t, f)| {
                f64::from(((layer * 977 + t * 31 + f) % 100) as f32 / 100.0)
            }))
            .unwrap()
        })
        .collect();
    let mask_path = dir.path().join("m.umsk");
    write_masks(&mask_path, &masks).unwrap();
    let contents = read_masks(&mask_path).unwrap();
    let umsk_ok = contents.clamped == 0
        && contents.layers.len() == masks.len()
        && contents
            .layers
            .iter()
            .zip(masks.iter())
            .all(|(a, b)| a.values() == b.values());

    // manifest replay through the real binary: byte-identical artifacts
    let beamsep = env!("CARGO_BIN_EXE_beamsep");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let run = |args: &[&str]| {
        let out = Command::new(beamsep).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "beamsep {args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&[
        "--seed",
        "99",
        "simulate",
        "--out-dir",
        a.to_str().unwrap(),
        "--duration",
        "0.5",
        "--geometry",
        "respeaker",
        "--source",
        "noise@45",
        "--source",
        "tone:623.7@135,5,-2.5",
        "--source",
        "noise@270,0,1.5",
    ]);
    run(&[
        "simulate",
        "--replay",
        a.join("scene.manifest").to_str().unwrap(),
        "--out-dir",
        b.to_str().unwrap(),
    ]);
    let replay_ok = ["mixture.wav", "stem_0.wav", "stem_1.wav", "stem_2.wav", "scene.manifest"]
        .iter()
        .all(|name| std::fs::read(a.join(name)).unwrap() == std::fs::read(b.join(name)).unwrap());

    let ok = wav_ok && umsk_ok && replay_ok;
    println!(
        "ACCEPTANCE 8 file-format-round-trips: {} (float32 WAV {}, UMSK1 {}, replay {})",
        if ok { "PASS" } else { "FAIL" },
        if wav_ok { "exact" } else { "MISMATCH" },
        if umsk_ok { "exact" } else { "MISMATCH" },
        if replay_ok { "byte-identical" } else { "MISMATCH" },
    );
    assert!(ok, "wav {wav_ok}, umsk1 {umsk_ok}, replay {replay_ok}");
}
