use std::path::PathBuf;

use anyhow::Result;
use beamsep_core::{si_sdr, si_sdri, MetricReport, Waveform};
use clap::Args;

use crate::report::{append_report, format_report, scene_id_from};
use crate::wav::read_wav;
use crate::Cli;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Estimate WAV; multichannel inputs use the --ref-mic channel.
    #[arg(long)]
    pub estimate: PathBuf,
    /// Ground-truth reference WAV.
    #[arg(long)]
    pub reference: PathBuf,
    /// Unprocessed mixture WAV; enables the SI-SDRi field.
    #[arg(long)]
    pub mixture: Option<PathBuf>,
    /// Channel taken from multichannel inputs.
    #[arg(long, default_value_t = 0)]
    pub ref_mic: usize,
    /// Identifier for the record (default: estimate file stem).
    #[arg(long)]
    pub scene_id: Option<String>,
    /// Append the record to this file as well as stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: &EvalArgs, _cli: &Cli) -> Result<()> {
    let pick = |w: Waveform| -> Result<Waveform> {
        if w.channels() == 1 {
            Ok(w)
        } else {
            Ok(w.extract_channel(args.ref_mic)?)
        }
    };
    let estimate = pick(read_wav(&args.estimate)?)?;
    let reference = pick(read_wav(&args.reference)?)?;

    let record = MetricReport {
        scene_id: args
            .scene_id
            .clone()
            .unwrap_or_else(|| scene_id_from(&args.estimate)),
        si_sdr: si_sdr(&estimate, &reference)?,
        si_sdri: match &args.mixture {
            Some(path) => Some(si_sdri(&estimate, &reference, &pick(read_wav(path)?)?)?),
            None => None,
        },
    };
    let line = format_report(&record);
    println!("{line}");
    if let Some(path) = &args.report {
        append_report(path, &line)?;
    }
    Ok(())
}
