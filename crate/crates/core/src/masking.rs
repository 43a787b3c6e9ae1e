//! Time-frequency masks: application to multichannel spectrograms and
//! oracle mask computation from ground-truth stems.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::signal::ComplexSpectrogram;

/// Real-valued magnitude mask, `[frames x freq_bins]`, entries in `[0, 1]`.
/// Applied multiplicatively to complex bins, so phase passes through.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    values: Array2<f64>,
}

impl Mask {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Empty("mask"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mask values"));
        }
        if values.iter().any(|v| *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument(
                "mask values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn ones(frames: usize, freq_bins: usize) -> Result<Self> {
        Self::new(Array2::ones((frames, freq_bins)))
    }

    pub fn zeros(frames: usize, freq_bins: usize) -> Result<Self> {
        Self::new(Array2::zeros((frames, freq_bins)))
    }

    pub fn frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn freq_bins(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Where the mask for the target source comes from. Oracle variants stand in
/// for a learned mask predictor and need the ground-truth target stem.
#[derive(Debug, Clone)]
pub enum MaskProvider {
    /// Wiener-style ratio mask `|X|^p / (|X|^p + |Y - X|^p)` from the
    /// ground-truth stem.
    OracleWiener { exponent: f64 },
    /// Ideal binary mask at the given local-SNR threshold.
    OracleBinary { threshold_db: f64 },
    /// A mask computed elsewhere, e.g. loaded from a mask tensor file.
    External(Mask),
    /// All-ones mask (pass-through).
    Unit,
}

impl MaskProvider {
    pub fn validate(&self) -> Result<()> {
        match self {
            MaskProvider::OracleWiener { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Wiener mask exponent must be positive, got {exponent}"
                    )));
                }
            }
            MaskProvider::OracleBinary { threshold_db } => {
                if !threshold_db.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "binary mask threshold must be finite, got {threshold_db}"
                    )));
                }
            }
            MaskProvider::External(_) | MaskProvider::Unit => {}
        }
        Ok(())
    }

    pub fn requires_stem(&self) -> bool {
        matches!(
            self,
            MaskProvider::OracleWiener { .. } | MaskProvider::OracleBinary { .. }
        )
    }

    /// Produce the target mask for a reference-channel mixture spectrogram.
    /// `target_ref` is the same channel of the ground-truth stem; oracle
    /// variants fail without it.
    pub fn provide(
        &self,
        mixture_ref: &ComplexSpectrogram,
        target_ref: Option<&ComplexSpectrogram>,
    ) -> Result<Mask> {
        match self {
            MaskProvider::OracleWiener { exponent } => {
                let target = target_ref.ok_or(Error::InvalidArgument(
                    "oracle mask provider requires a ground-truth target stem".into(),
                ))?;
                oracle_wiener_mask(target, mixture_ref, *exponent)
            }
            MaskProvider::OracleBinary { threshold_db } => {
                let target = target_ref.ok_or(Error::InvalidArgument(
                    "oracle mask provider requires a ground-truth target stem".into(),
                ))?;
                let noise = subtract_ref(mixture_ref, target)?;
                oracle_binary_mask(target, &noise, *threshold_db)
            }
            MaskProvider::External(mask) => {
                if mask.frames() != mixture_ref.frames()
                    || mask.freq_bins() != mixture_ref.freq_bins()
                {
                    return Err(Error::ShapeMismatch(format!(
                        "external mask is {}x{} but mixture is {}x{}",
                        mask.frames(),
                        mask.freq_bins(),
                        mixture_ref.frames(),
                        mixture_ref.freq_bins()
                    )));
                }
                Ok(mask.clone())
            }
            MaskProvider::Unit => Mask::ones(mixture_ref.frames(), mixture_ref.freq_bins()),
        }
    }
}

fn ensure_single_channel(spec: &ComplexSpectrogram, what: &'static str) -> Result<()> {
    if spec.channels() != 1 {
        return Err(Error::ShapeMismatch(format!(
            "{what} must be a single reference channel, got {} channels",
            spec.channels()
        )));
    }
    Ok(())
}

fn ensure_same_grid(a: &ComplexSpectrogram, b: &ComplexSpectrogram) -> Result<()> {
    if a.frames() != b.frames() || a.freq_bins() != b.freq_bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram grids differ: {}x{} vs {}x{}",
            a.frames(),
            a.freq_bins(),
            b.frames(),
            b.freq_bins()
        )));
    }
    Ok(())
}

fn subtract_ref(
    mixture: &ComplexSpectrogram,
    target: &ComplexSpectrogram,
) -> Result<ComplexSpectrogram> {
    ensure_single_channel(mixture, "mixture")?;
    ensure_single_channel(target, "target")?;
    ensure_same_grid(mixture, target)?;
    let bins = mixture.bins() - target.bins();
    Ok(ComplexSpectrogram::new(
        bins,
        *mixture.config(),
        mixture.sample_rate(),
    )?)
}

/// Mask application: `X̂(t,f,c) = M(t,f) · Y(t,f,c)` for every channel.
pub fn apply_mask(spec: &ComplexSpectrogram, mask: &Mask) -> Result<ComplexSpectrogram> {
    if spec.frames() != mask.frames() || spec.freq_bins() != mask.freq_bins() {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{} but spectrogram is {}x{}",
            mask.frames(),
            mask.freq_bins(),
            spec.frames(),
            spec.freq_bins()
        )));
    }
    let mut bins = spec.bins().clone();
    for ((t, f, _), v) in bins.indexed_iter_mut() {
        *v *= mask.values()[[t, f]];
    }
    Ok(ComplexSpectrogram::new(
        bins,
        *spec.config(),
        spec.sample_rate(),
    )?)
}

/// Wiener-style oracle mask from the reference channel of the ground-truth
/// target and the mixture: `M = |X|^p / (|X|^p + |Y - X|^p)`, with 0/0 -> 0.
///
/// Computed as `1 / (1 + (|N|/|X|)^p)` so large magnitude ratios saturate to
/// 0 or 1 instead of overflowing.
pub fn oracle_wiener_mask(
    target: &ComplexSpectrogram,
    mixture: &ComplexSpectrogram,
    exponent: f64,
) -> Result<Mask> {
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Wiener mask exponent must be positive, got {exponent}"
        )));
    }
    ensure_single_channel(target, "target")?;
    ensure_single_channel(mixture, "mixture")?;
    ensure_same_grid(target, mixture)?;

    let (t_len, f_len) = (target.frames(), target.freq_bins());
    let mut values = Array2::zeros((t_len, f_len));
    for t in 0..t_len {
        for f in 0..f_len {
            let x = target.bins()[[t, f, 0]].norm();
            let n = (mixture.bins()[[t, f, 0]] - target.bins()[[t, f, 0]]).norm();
            values[[t, f]] = if x == 0.0 {
                0.0
            } else {
                let ratio = (n / x).powf(exponent);
                if ratio.is_infinite() {
                    0.0
                } else {
                    1.0 / (1.0 + ratio)
                }
            };
        }
    }
    Mask::new(values)
}

/// Ideal binary mask: 1 where the local target-to-noise ratio exceeds
/// `threshold_db` (strictly), else 0. `|N| = 0` with `|X| > 0` counts as
/// infinite ratio.
pub fn oracle_binary_mask(
    target: &ComplexSpectrogram,
    mixture_minus_target: &ComplexSpectrogram,
    threshold_db: f64,
) -> Result<Mask> {
    if threshold_db.is_nan() {
        return Err(Error::InvalidArgument("binary mask threshold is NaN".into()));
    }
    ensure_single_channel(target, "target")?;
    ensure_single_channel(mixture_minus_target, "noise")?;
    ensure_same_grid(target, mixture_minus_target)?;

    // Multiplicative form of 20*log10(|X|/|N|) > threshold, valid for
    // zero magnitudes where the log form is undefined.
    let factor = 10f64.powf(threshold_db / 20.0);
    let (t_len, f_len) = (target.frames(), target.freq_bins());
    let mut values = Array2::zeros((t_len, f_len));
    for t in 0..t_len {
        for f in 0..f_len {
            let x = target.bins()[[t, f, 0]].norm();
            let n = mixture_minus_target.bins()[[t, f, 0]].norm();
            let on = if n == 0.0 { x > 0.0 } else { x > n * factor };
            values[[t, f]] = if on { 1.0 } else { 0.0 };
        }
    }
    Mask::new(values)
}
