//! Scale-invariant SDR and its improvement over the unprocessed mixture.
//!
//! Convention fixed here and used everywhere: no mean removal before the
//! projection, and results clamp to ±100 dB so reports stay finite.

use crate::error::{Error, Result};
use crate::signal::Waveform;

pub const SI_SDR_CLAMP_DB: f64 = 100.0;

/// One evaluation record; `si_sdri` is present when a mixture reference was
/// available.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub scene_id: String,
    pub si_sdr: f64,
    pub si_sdri: Option<f64>,
}

fn mono_pair(estimate: &Waveform, reference: &Waveform) -> Result<()> {
    if estimate.channels() != 1 || reference.channels() != 1 {
        return Err(Error::InvalidArgument(
            "SI-SDR compares mono signals; extract a channel first".into(),
        ));
    }
    if estimate.num_samples() != reference.num_samples() {
        return Err(Error::ShapeMismatch(format!(
            "estimate has {} samples but reference has {}",
            estimate.num_samples(),
            reference.num_samples()
        )));
    }
    Ok(())
}

/// Scale-invariant SDR in dB: project the estimate onto the reference,
/// `α = ⟨e, r⟩ / ||r||²`, and return `10·log10(||αr||² / ||e - αr||²)`
/// clamped to ±100 dB. A zero projection (orthogonal or silent estimate)
/// clamps to -100.
pub fn si_sdr(estimate: &Waveform, reference: &Waveform) -> Result<f64> {
    mono_pair(estimate, reference)?;
    let e = estimate.channel(0);
    let r = reference.channel(0);

    let mut dot = 0.0;
    let mut ref_pow = 0.0;
    for (ev, rv) in e.iter().zip(r.iter()) {
        dot += ev * rv;
        ref_pow += rv * rv;
    }
    if ref_pow == 0.0 {
        return Err(Error::Degenerate("all-zero reference in SI-SDR".into()));
    }
    let alpha = dot / ref_pow;
    let signal_pow = alpha * alpha * ref_pow;
    if signal_pow == 0.0 {
        return Ok(-SI_SDR_CLAMP_DB);
    }
    let mut err_pow = 0.0;
    for (ev, rv) in e.iter().zip(r.iter()) {
        let d = ev - alpha * rv;
        err_pow += d * d;
    }
    if err_pow == 0.0 {
        return Ok(SI_SDR_CLAMP_DB);
    }
    Ok((10.0 * (signal_pow / err_pow).log10()).clamp(-SI_SDR_CLAMP_DB, SI_SDR_CLAMP_DB))
}

/// SI-SDR improvement over the unprocessed mixture's reference channel:
/// `si_sdr(estimate, reference) - si_sdr(mixture_ref_channel, reference)`.
pub fn si_sdri(
    estimate: &Waveform,
    reference: &Waveform,
    mixture_ref_channel: &Waveform,
) -> Result<f64> {
    Ok(si_sdr(estimate, reference)? - si_sdr(mixture_ref_channel, reference)?)
}
