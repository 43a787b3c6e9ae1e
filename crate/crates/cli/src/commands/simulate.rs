use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use beamsep_core::mix_scene;
use clap::Args;

use crate::geomfile::resolve_geometry;
use crate::manifest::{ManifestSource, SceneManifest, SourceKind};
use crate::wav::{write_wav, WavEncoding};
use crate::Cli;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Directory for mixture.wav, stem_N.wav, and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// One source as KIND@AZIMUTH[,ELEVATION[,GAIN_DB]]; KIND is noise,
    /// tone:FREQ, or file:PATH. Repeat per source.
    #[arg(long = "source")]
    pub sources: Vec<String>,
    /// Scene length in seconds.
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    /// Geometry preset (respeaker | kinect | 16sounds) or file:PATH.
    #[arg(long, default_value = "respeaker")]
    pub geometry: String,
    /// Speed of sound in m/s.
    #[arg(long, default_value_t = beamsep_core::SPEED_OF_SOUND)]
    pub speed_of_sound: f64,
    /// Rebuild the exact scene recorded in an existing manifest.
    #[arg(long, conflicts_with = "sources")]
    pub replay: Option<PathBuf>,
    /// Manifest file name within --out-dir.
    #[arg(long, default_value = "scene.manifest")]
    pub manifest_name: String,
}

/// `KIND@AZ[,EL[,GAIN]]` — the last `@` splits kind from direction so
/// `file:` paths may contain `@`.
pub fn parse_source_spec(text: &str) -> Result<ManifestSource> {
    let (kind_text, dir_text) = text
        .rsplit_once('@')
        .with_context(|| format!("source '{text}' is not KIND@AZ[,EL[,GAIN]]"))?;
    let kind = SourceKind::parse(kind_text)?;
    let parts: Vec<&str> = dir_text.split(',').collect();
    if parts.len() > 3 {
        bail!("source '{text}' has more than azimuth, elevation, gain");
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim().parse().with_context(|| format!("bad {what} '{s}' in '{text}'"))
    };
    Ok(ManifestSource {
        kind,
        azimuth_deg: num(parts[0], "azimuth")?,
        elevation_deg: parts.get(1).map(|s| num(s, "elevation")).transpose()?.unwrap_or(0.0),
        gain_db: parts.get(2).map(|s| num(s, "gain")).transpose()?.unwrap_or(0.0),
    })
}

pub fn run(args: &SimulateArgs, cli: &Cli) -> Result<()> {
    let (scene_manifest, base_dir) = match &args.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("read {}", path.display()))?;
            let m = SceneManifest::parse(&text)
                .with_context(|| format!("parse {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            (m, base)
        }
        None => {
            if args.sources.is_empty() {
                bail!("no --source given (KIND@AZ[,EL[,GAIN]])");
            }
            if !(args.duration.is_finite() && args.duration > 0.0) {
                bail!("duration must be positive seconds, got {}", args.duration);
            }
            let sources = args
                .sources
                .iter()
                .map(|s| parse_source_spec(s))
                .collect::<Result<Vec<_>>>()?;
            let m = SceneManifest {
                sample_rate: cli.sample_rate,
                seed: cli.seed,
                speed_of_sound: args.speed_of_sound,
                duration_samples: (args.duration * cli.sample_rate as f64).round() as usize,
                geometry: resolve_geometry(&args.geometry)?,
                sources,
            };
            (m, PathBuf::from("."))
        }
    };

    let spec = scene_manifest.realize(&base_dir)?;
    let (mixture, stems) = mix_scene(&spec)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("create {}", args.out_dir.display()))?;
    let manifest_path = args.out_dir.join(&args.manifest_name);
    std::fs::write(&manifest_path, scene_manifest.to_text())
        .with_context(|| format!("write {}", manifest_path.display()))?;
    println!("wrote={}", manifest_path.display());

    let mixture_path = args.out_dir.join("mixture.wav");
    write_wav(&mixture_path, &mixture, WavEncoding::Float32)?;
    println!("wrote={}", mixture_path.display());
    for (i, stem) in stems.iter().enumerate() {
        let path = args.out_dir.join(format!("stem_{i}.wav"));
        write_wav(&path, stem, WavEncoding::Float32)?;
        println!("wrote={}", path.display());
    }

    if cli.verbose {
        eprintln!(
            "scene: {} sources, {} mics, {} samples at {} Hz",
            spec.sources.len(),
            spec.geometry.num_mics(),
            scene_manifest.duration_samples,
            scene_manifest.sample_rate
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_specs_parse() {
        let s = parse_source_spec("noise@45").unwrap();
        assert_eq!(s.kind, SourceKind::Noise);
        assert_eq!((s.azimuth_deg, s.elevation_deg, s.gain_db), (45.0, 0.0, 0.0));

        let s = parse_source_spec("tone:440@90,10,-3.5").unwrap();
        assert_eq!(s.kind, SourceKind::Tone { freq_hz: 440.0 });
        assert_eq!((s.azimuth_deg, s.elevation_deg, s.gain_db), (90.0, 10.0, -3.5));

        let s = parse_source_spec("file:dir@2/a.wav@180,0").unwrap();
        assert_eq!(s.kind, SourceKind::File { path: "dir@2/a.wav".into() });
        assert_eq!(s.azimuth_deg, 180.0);

        assert!(parse_source_spec("noise").is_err());
        assert!(parse_source_spec("noise@x").is_err());
        assert!(parse_source_spec("noise@0,0,0,0").is_err());
        assert!(parse_source_spec("hum@45").is_err());
    }
}
