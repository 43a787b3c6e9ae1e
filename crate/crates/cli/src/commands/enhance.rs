use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use beamsep_core::{
    enhance, si_sdr, si_sdri, BeamformConfig, MaskProvider, MetricReport, StftConfig, Waveform,
};
use clap::Args;

use crate::maskfile::read_masks;
use crate::report::{append_report, format_report, scene_id_from};
use crate::wav::{read_wav, write_wav, WavEncoding};
use crate::Cli;

#[derive(Args, Debug)]
pub struct EnhanceArgs {
    /// Input mixture WAV.
    #[arg(long)]
    pub input: PathBuf,
    /// Output mono WAV (float32).
    #[arg(long)]
    pub output: PathBuf,
    /// Mask source: unit | oracle-wiener | oracle-binary | file:PATH.
    #[arg(long, default_value = "oracle-wiener")]
    pub mask: String,
    /// Ground-truth target WAV, mono or the input's channel count;
    /// required by the oracle masks.
    #[arg(long)]
    pub target_stem: Option<PathBuf>,
    /// Reference channel index.
    #[arg(long, default_value_t = 0)]
    pub ref_mic: usize,
    /// Skip post-mask flooring after beamforming.
    #[arg(long)]
    pub no_postmask: bool,
    /// Post-mask floor gain in [0,1].
    #[arg(long, default_value_t = 0.3)]
    pub postmask_floor: f64,
    /// Diagonal loading relative to the mean noise-SCM diagonal.
    #[arg(long, default_value_t = 1e-6)]
    pub diag_load: f64,
    /// Analysis window in milliseconds (50% overlap).
    #[arg(long, default_value_t = 64.0)]
    pub window_ms: f64,
    /// Mask-only path: enhance the reference channel without beamforming.
    #[arg(long)]
    pub single_channel: bool,
    /// Wiener mask exponent (oracle-wiener).
    #[arg(long, default_value_t = 2.0)]
    pub wiener_exponent: f64,
    /// Binary mask threshold in dB (oracle-binary).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub binary_threshold_db: f64,
    /// Append the metric record to this file (needs --target-stem).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn parse_mask_arg(args: &EnhanceArgs, verbose: bool) -> Result<MaskProvider> {
    match args.mask.as_str() {
        "unit" => Ok(MaskProvider::Unit),
        "oracle-wiener" => Ok(MaskProvider::OracleWiener { exponent: args.wiener_exponent }),
        "oracle-binary" => {
            Ok(MaskProvider::OracleBinary { threshold_db: args.binary_threshold_db })
        }
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                bail!(
                    "unknown mask source '{other}' \
                     (unit | oracle-wiener | oracle-binary | file:PATH)"
                );
            };
            let contents = read_masks(Path::new(path))?;
            if contents.clamped > 0 {
                eprintln!("warning=clamped {} mask values into [0,1]", contents.clamped);
            }
            if verbose {
                eprintln!("mask file: {} layers, consuming layer 0", contents.layers.len());
            }
            let layer = contents.layers.into_iter().next().expect("reader rejects empty files");
            Ok(MaskProvider::External(layer))
        }
    }
}

pub fn run(args: &EnhanceArgs, cli: &Cli) -> Result<()> {
    let mixture = read_wav(&args.input)?;
    let stft_cfg = StftConfig::from_window_ms(args.window_ms, mixture.sample_rate())?;

    let provider = parse_mask_arg(args, cli.verbose)?;
    if provider.requires_stem() && args.target_stem.is_none() {
        bail!("--mask {} needs --target-stem with the ground-truth audio", args.mask);
    }
    let stem = args.target_stem.as_deref().map(read_wav).transpose()?;

    // a stem either matches the mixture layout or is the dry mono target
    let stem_channel = |stem: &Waveform| -> Result<usize> {
        if stem.channels() == 1 {
            Ok(0)
        } else if stem.channels() == mixture.channels() {
            Ok(args.ref_mic)
        } else {
            bail!(
                "target stem has {} channels, expected 1 or {}",
                stem.channels(),
                mixture.channels()
            )
        }
    };

    let bf_cfg = BeamformConfig {
        ref_mic: if args.single_channel { 0 } else { args.ref_mic },
        diagonal_loading: args.diag_load,
        postmask_floor: args.postmask_floor,
        postmask_enabled: !args.no_postmask,
    };
    let (pipe_input, pipe_stem) = if args.single_channel {
        let input = mixture.extract_channel(args.ref_mic)?;
        let stem_ref = match &stem {
            Some(s) => Some(s.extract_channel(stem_channel(s)?)?),
            None => None,
        };
        (input, stem_ref)
    } else {
        (mixture.clone(), stem.clone())
    };

    let enhanced = enhance(&pipe_input, &provider, pipe_stem.as_ref(), &stft_cfg, &bf_cfg)?;
    write_wav(&args.output, &enhanced, WavEncoding::Float32)?;
    println!("wrote={}", args.output.display());

    if let Some(stem) = &stem {
        let reference = stem.extract_channel(stem_channel(stem)?)?;
        let mixture_ref = mixture.extract_channel(args.ref_mic)?;
        let record = MetricReport {
            scene_id: scene_id_from(&args.output),
            si_sdr: si_sdr(&enhanced, &reference)?,
            si_sdri: Some(si_sdri(&enhanced, &reference, &mixture_ref)?),
        };
        let line = format_report(&record);
        println!("{line}");
        if let Some(path) = &args.report {
            append_report(path, &line)?;
        }
    }
    Ok(())
}
