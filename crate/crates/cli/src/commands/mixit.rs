use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use beamsep_core::{
    mixit_total_loss, stft_forward, AssignmentConstraint, LossConfig, StftConfig, Waveform,
};
use clap::Args;
use ndarray::Array2;

use crate::wav::read_wav;
use crate::Cli;

#[derive(Args, Debug)]
pub struct MixitArgs {
    /// Input mixture WAV (mono); repeat N times.
    #[arg(long = "mixture", required = true)]
    pub mixtures: Vec<PathBuf>,
    /// Separated source WAV (mono); repeat S times, S >= N.
    #[arg(long = "source", required = true)]
    pub sources: Vec<PathBuf>,
    /// Assignment constraint.
    #[arg(long, value_enum, default_value_t = ConstraintArg::Unconstrained)]
    pub constraint: ConstraintArg,
    /// SNR saturation in dB.
    #[arg(long, default_value_t = 30.0)]
    pub snr_max: f64,
    /// Energy-penalty weight on the first (target) output.
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Energy-penalty magnitude exponent.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Analysis window for the penalty spectrogram, milliseconds.
    #[arg(long, default_value_t = 64.0)]
    pub window_ms: f64,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintArg {
    Unconstrained,
    WeakEnhancement,
}

fn load_rows(paths: &[PathBuf], what: &str) -> Result<(Array2<f64>, u32)> {
    let waves = paths.iter().map(|p| read_wav(p)).collect::<Result<Vec<_>>>()?;
    let first = &waves[0];
    let (rate, len) = (first.sample_rate(), first.num_samples());
    for (path, w) in paths.iter().zip(waves.iter()) {
        if w.channels() != 1 {
            bail!("{}: {what} must be mono", path.display());
        }
        if w.sample_rate() != rate || w.num_samples() != len {
            bail!("{}: {what} files must share rate and length", path.display());
        }
    }
    let mut rows = Array2::zeros((waves.len(), len));
    for (i, w) in waves.iter().enumerate() {
        rows.row_mut(i).assign(&w.channel(0));
    }
    Ok((rows, rate))
}

pub fn run(args: &MixitArgs, _cli: &Cli) -> Result<()> {
    let (mixtures, mix_rate) = load_rows(&args.mixtures, "mixture")?;
    let (sources, src_rate) = load_rows(&args.sources, "source")?;
    if mix_rate != src_rate {
        bail!("mixtures are {mix_rate} Hz but sources are {src_rate} Hz");
    }

    let cfg = LossConfig::new(args.snr_max, args.gamma, args.beta)?;
    // the penalty only inspects the first output's spectrogram
    let spectra = if args.gamma > 0.0 {
        let stft_cfg = StftConfig::from_window_ms(args.window_ms, src_rate)?;
        let target = Waveform::mono(sources.row(0).to_vec(), src_rate)?;
        vec![stft_forward(&target, &stft_cfg).context("penalty spectrogram")?]
    } else {
        Vec::new()
    };
    let constraint = match args.constraint {
        ConstraintArg::Unconstrained => AssignmentConstraint::Unconstrained,
        ConstraintArg::WeakEnhancement => AssignmentConstraint::WeakEnhancement,
    };

    let (loss, matrix) = mixit_total_loss(&mixtures, &sources, &spectra, constraint, &cfg)?;
    println!("assignment={matrix} loss={loss:.6}");
    Ok(())
}
