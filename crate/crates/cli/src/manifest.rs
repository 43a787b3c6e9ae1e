//! Scene manifests: line-oriented `key=value` text that records everything
//! needed to rebuild a simulated scene bit-for-bit — sample rate, seed,
//! geometry, and per-source kind/direction/gain. Numeric values use Rust's
//! shortest round-trip float formatting, so parse(to_text(m)) == m.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use beamsep_core::{ArrayGeometry, SceneSource, SceneSpec, Waveform};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::wav::read_wav;

pub const MANIFEST_FORMAT: &str = "scene-manifest-v1";

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    /// Seeded uniform white noise; the seed derives from the scene seed and
    /// the source index.
    Noise,
    Tone { freq_hz: f64 },
    File { path: PathBuf },
}

impl SourceKind {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "noise" {
            return Ok(Self::Noise);
        }
        if let Some(freq) = text.strip_prefix("tone:") {
            let freq_hz: f64 = freq.parse().with_context(|| format!("bad tone frequency '{freq}'"))?;
            if !(freq_hz.is_finite() && freq_hz > 0.0) {
                bail!("tone frequency must be positive, got {freq_hz}");
            }
            return Ok(Self::Tone { freq_hz });
        }
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(Self::File { path: PathBuf::from(path) });
        }
        bail!("unknown source kind '{text}' (noise | tone:FREQ | file:PATH)")
    }

    fn to_text(&self) -> String {
        match self {
            Self::Noise => "noise".into(),
            Self::Tone { freq_hz } => format!("tone:{freq_hz}"),
            Self::File { path } => format!("file:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestSource {
    pub kind: SourceKind,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneManifest {
    pub sample_rate: u32,
    pub seed: u64,
    pub speed_of_sound: f64,
    pub duration_samples: usize,
    pub geometry: ArrayGeometry,
    pub sources: Vec<ManifestSource>,
}

/// Seed for the generated material of one source, spread so neighboring
/// scene seeds and source indices never collide.
pub fn source_material_seed(scene_seed: u64, index: usize) -> u64 {
    scene_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl SceneManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("format={MANIFEST_FORMAT}\n"));
        out.push_str(&format!("sample_rate={}\n", self.sample_rate));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("speed_of_sound={}\n", self.speed_of_sound));
        out.push_str(&format!("duration_samples={}\n", self.duration_samples));
        out.push_str(&format!("geometry.name={}\n", self.geometry.name()));
        for p in self.geometry.mic_positions() {
            out.push_str(&format!("geometry.mic={} {} {}\n", p[0], p[1], p[2]));
        }
        for (i, s) in self.sources.iter().enumerate() {
            out.push_str(&format!("source.{i}.kind={}\n", s.kind.to_text()));
            out.push_str(&format!("source.{i}.azimuth_deg={}\n", s.azimuth_deg));
            out.push_str(&format!("source.{i}.elevation_deg={}\n", s.elevation_deg));
            out.push_str(&format!("source.{i}.gain_db={}\n", s.gain_db));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: HashMap<String, String> = HashMap::new();
        let mut mics: Vec<[f64; 3]> = Vec::new();
        let mut saw_format = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected key=value", idx + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !saw_format {
                if key != "format" || value != MANIFEST_FORMAT {
                    bail!("line {}: expected format={MANIFEST_FORMAT} first", idx + 1);
                }
                saw_format = true;
                continue;
            }
            if key == "geometry.mic" {
                let coords: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .with_context(|| format!("line {}: bad coordinate", idx + 1))?;
                if coords.len() != 3 {
                    bail!("line {}: geometry.mic needs 3 coordinates", idx + 1);
                }
                mics.push([coords[0], coords[1], coords[2]]);
            } else if fields.insert(key.to_string(), value.to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", idx + 1);
            }
        }
        if !saw_format {
            bail!("not a scene manifest: missing format={MANIFEST_FORMAT}");
        }

        let mut take = |key: &str| -> Result<String> {
            fields.remove(key).with_context(|| format!("manifest missing {key}"))
        };
        let sample_rate: u32 = take("sample_rate")?.parse().context("bad sample_rate")?;
        let seed: u64 = take("seed")?.parse().context("bad seed")?;
        let speed_of_sound: f64 =
            take("speed_of_sound")?.parse().context("bad speed_of_sound")?;
        let duration_samples: usize =
            take("duration_samples")?.parse().context("bad duration_samples")?;
        let geometry = ArrayGeometry::new(take("geometry.name")?, mics)?;

        let mut sources = Vec::new();
        for i in 0.. {
            let prefix = format!("source.{i}.");
            if !fields.contains_key(&format!("{prefix}kind")) {
                break;
            }
            let mut take = |suffix: &str| -> Result<String> {
                fields
                    .remove(&format!("{prefix}{suffix}"))
                    .with_context(|| format!("manifest missing {prefix}{suffix}"))
            };
            sources.push(ManifestSource {
                kind: SourceKind::parse(&take("kind")?)?,
                azimuth_deg: take("azimuth_deg")?.parse().context("bad azimuth")?,
                elevation_deg: take("elevation_deg")?.parse().context("bad elevation")?,
                gain_db: take("gain_db")?.parse().context("bad gain")?,
            });
        }
        if let Some(key) = fields.keys().next() {
            bail!("unrecognized or out-of-sequence manifest key '{key}'");
        }
        if sources.is_empty() {
            bail!("manifest lists no sources");
        }
        Ok(Self {
            sample_rate,
            seed,
            speed_of_sound,
            duration_samples,
            geometry,
            sources,
        })
    }

    /// Materialize the source audio and assemble a renderable scene.
    /// Relative `file:` paths resolve against `base_dir`.
    pub fn realize(&self, base_dir: &Path) -> Result<SceneSpec> {
        if self.duration_samples == 0 {
            bail!("duration_samples must be positive");
        }
        let mut sources = Vec::with_capacity(self.sources.len());
        for (i, s) in self.sources.iter().enumerate() {
            let wave = match &s.kind {
                SourceKind::Noise => {
                    let mut rng = ChaCha8Rng::seed_from_u64(source_material_seed(self.seed, i));
                    let samples = (0..self.duration_samples)
                        .map(|_| rng.random_range(-0.5..0.5))
                        .collect();
                    Waveform::mono(samples, self.sample_rate)?
                }
                SourceKind::Tone { freq_hz } => {
                    if *freq_hz >= self.sample_rate as f64 / 2.0 {
                        bail!("source {i}: tone {freq_hz} Hz is at or above Nyquist");
                    }
                    let w = 2.0 * std::f64::consts::PI * freq_hz / self.sample_rate as f64;
                    let samples = (0..self.duration_samples)
                        .map(|n| 0.5 * (w * n as f64).sin())
                        .collect();
                    Waveform::mono(samples, self.sample_rate)?
                }
                SourceKind::File { path } => {
                    let resolved = if path.is_absolute() {
                        path.clone()
                    } else {
                        base_dir.join(path)
                    };
                    let wave = read_wav(&resolved)?;
                    if wave.channels() != 1 {
                        bail!("source {i}: {} is not mono", resolved.display());
                    }
                    if wave.sample_rate() != self.sample_rate {
                        bail!(
                            "source {i}: {} has rate {}, manifest says {}",
                            resolved.display(),
                            wave.sample_rate(),
                            self.sample_rate
                        );
                    }
                    if wave.num_samples() != self.duration_samples {
                        bail!(
                            "source {i}: {} has {} samples, manifest says {}",
                            resolved.display(),
                            wave.num_samples(),
                            self.duration_samples
                        );
                    }
                    wave
                }
            };
            sources.push(SceneSource {
                wave,
                azimuth_deg: s.azimuth_deg,
                elevation_deg: s.elevation_deg,
                gain_db: s.gain_db,
            });
        }
        Ok(SceneSpec {
            geometry: self.geometry.clone(),
            sources,
            sample_rate: self.sample_rate,
            speed_of_sound: self.speed_of_sound,
            seed: self.seed,
        })
    }
}
