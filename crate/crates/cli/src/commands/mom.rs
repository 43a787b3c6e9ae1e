use std::path::PathBuf;

use anyhow::{Context, Result};
use beamsep_core::{build_mom, MomSpec};
use clap::Args;

use crate::wav::{read_wav, write_wav, WavEncoding};
use crate::Cli;

#[derive(Args, Debug)]
pub struct MomArgs {
    /// Target-class mixture WAV; repeat to build the target pool.
    #[arg(long = "target", required = true)]
    pub targets: Vec<PathBuf>,
    /// Interference mixture WAV; repeat to build the interference pool.
    #[arg(long = "interference")]
    pub interference: Vec<PathBuf>,
    /// Component count (2-4); drawn uniformly from {2,3,4} when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    /// Gain range low edge, dB.
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    pub gain_lo: f64,
    /// Gain range high edge, dB.
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub gain_hi: f64,
    /// Output directory for mom.wav, component_N.wav, and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &MomArgs, cli: &Cli) -> Result<()> {
    let load = |paths: &[PathBuf]| paths.iter().map(|p| read_wav(p)).collect::<Result<Vec<_>>>();
    let spec = MomSpec {
        target_mixtures: load(&args.targets)?,
        interference_mixtures: load(&args.interference)?,
        k: args.k,
        gain_range: (args.gain_lo, args.gain_hi),
        seed: cli.seed,
    };
    let (mom, components, gains) = build_mom(&spec)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("create {}", args.out_dir.display()))?;
    let mom_path = args.out_dir.join("mom.wav");
    write_wav(&mom_path, &mom, WavEncoding::Float32)?;
    println!("wrote={}", mom_path.display());
    for (i, c) in components.iter().enumerate() {
        let path = args.out_dir.join(format!("component_{i}.wav"));
        write_wav(&path, c, WavEncoding::Float32)?;
        println!("wrote={}", path.display());
    }

    let mut text = String::from("format=mom-manifest-v1\n");
    text.push_str(&format!("seed={}\n", cli.seed));
    text.push_str(&format!("k={}\n", components.len()));
    for (i, g) in gains.iter().enumerate() {
        text.push_str(&format!("gain.{i}={g}\n"));
    }
    let manifest_path = args.out_dir.join("mom.manifest");
    std::fs::write(&manifest_path, text)
        .with_context(|| format!("write {}", manifest_path.display()))?;
    println!("wrote={}", manifest_path.display());

    let joined: Vec<String> = gains.iter().map(|g| format!("{g:.4}")).collect();
    println!("k={} gains=[{}]", components.len(), joined.join(","));
    Ok(())
}
