//! Multichannel WAV I/O. Reads RIFF PCM16 or IEEE float32 at any channel
//! count; writes either encoding. Float32 round-trips samples exactly
//! (working precision is truncated to f32 on write); PCM16 scales by 32768
//! and clamps.

use std::path::Path;

use anyhow::{bail, Context, Result};
use beamsep_core::Waveform;
use ndarray::Array2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Float32,
    Pcm16,
}

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let mut reader =
        hound::WavReader::open(path).with_context(|| format!("open {}", path.display()))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        bail!("{}: zero-channel file", path.display());
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("read {}", path.display()))?,
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("read {}", path.display()))?,
        (fmt, bits) => bail!(
            "{}: unsupported encoding {fmt:?}/{bits}-bit, expected PCM16 or float32",
            path.display()
        ),
    };
    if interleaved.is_empty() {
        bail!("{}: no samples", path.display());
    }
    if interleaved.len() % channels != 0 {
        bail!("{}: sample count is not a multiple of the channel count", path.display());
    }
    let frames = interleaved.len() / channels;
    let mut samples = Array2::zeros((channels, frames));
    for (i, v) in interleaved.iter().enumerate() {
        samples[[i % channels, i / channels]] = *v;
    }
    Ok(Waveform::new(samples, spec.sample_rate)?)
}

pub fn write_wav(path: &Path, wave: &Waveform, encoding: WavEncoding) -> Result<()> {
    if wave.channels() > u16::MAX as usize {
        bail!("{} channels exceed the WAV limit", wave.channels());
    }
    let spec = hound::WavSpec {
        channels: wave.channels() as u16,
        sample_rate: wave.sample_rate(),
        bits_per_sample: match encoding {
            WavEncoding::Float32 => 32,
            WavEncoding::Pcm16 => 16,
        },
        sample_format: match encoding {
            WavEncoding::Float32 => hound::SampleFormat::Float,
            WavEncoding::Pcm16 => hound::SampleFormat::Int,
        },
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .with_context(|| format!("create {}", path.display()))?;
    for i in 0..wave.num_samples() {
        for c in 0..wave.channels() {
            let v = wave.samples()[[c, i]];
            match encoding {
                WavEncoding::Float32 => writer.write_sample(v as f32)?,
                WavEncoding::Pcm16 => {
                    let q = (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer.write_sample(q)?;
                }
            }
        }
    }
    writer
        .finalize()
        .with_context(|| format!("finalize {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_wave(channels: usize, len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut samples = Array2::zeros((channels, len));
        // generate at f32 precision so float32 files round-trip exactly
        samples.mapv_inplace(|_: f64| rng.random_range(-1.0f32..1.0) as f64);
        Waveform::new(samples, 16_000).unwrap()
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let wave = random_wave(3, 777, 1);
        write_wav(&path, &wave, WavEncoding::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 16_000);
        assert_eq!(back.samples(), wave.samples());
    }

    #[test]
    fn sixteen_channels_keep_their_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let mut samples = Array2::zeros((16, 10));
        for c in 0..16 {
            samples[[c, 0]] = c as f64 / 16.0;
        }
        let wave = Waveform::new(samples, 48_000).unwrap();
        write_wav(&path, &wave, WavEncoding::Float32).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.samples(), wave.samples());
    }

    #[test]
    fn pcm16_error_is_within_quantization_bound() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let sine: Vec<f64> = (0..2_000)
            .map(|n| (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 16_000.0).sin() * 0.999)
            .collect();
        let wave = Waveform::mono(sine, 16_000).unwrap();
        write_wav(&path, &wave, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        for (a, b) in back.channel(0).iter().zip(wave.channel(0).iter()) {
            assert!((a - b).abs() <= 2f64.powi(-15));
        }
    }

    #[test]
    fn pcm16_clamps_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let wave = Waveform::mono(vec![2.0, -2.0, 0.0], 16_000).unwrap();
        write_wav(&path, &wave, WavEncoding::Pcm16).unwrap();
        let back = read_wav(&path).unwrap();
        assert!((back.channel(0)[0] - 32767.0 / 32768.0).abs() < 1e-12);
        assert!((back.channel(0)[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_wav(Path::new("/nonexistent/x.wav")).unwrap_err();
        assert!(format!("{err:#}").contains("/nonexistent/x.wav"));
    }
}
