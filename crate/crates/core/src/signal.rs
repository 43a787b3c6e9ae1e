//! Time-domain waveforms and the STFT/ISTFT conversion to and from the
//! time-frequency domain.
//!
//! DFT normalization is fixed once for the whole crate: the forward
//! transform is unnormalized and the inverse applies `1/fft_len`.

use ndarray::{Array2, Array3, ArrayView1};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Analysis/synthesis taper pair identifier. The same taper is used on both
/// sides, so the overlap-add denominator is the taper squared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Square-root of the periodic Hann window. Constant overlap-add at 50%
    /// (and 75%) overlap; the default for mask-based separation.
    SqrtHann,
    /// Periodic Hann. The squared sum is only constant at 75% overlap.
    Hann,
    /// Rectangular.
    Rect,
}

impl WindowKind {
    /// Taper values for a window of `len` samples (periodic convention).
    pub fn taper(&self, len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let hann = 0.5 * (1.0 - (2.0 * std::f64::consts::PI * n as f64 / len as f64).cos());
                match self {
                    WindowKind::SqrtHann => hann.sqrt(),
                    WindowKind::Hann => hann,
                    WindowKind::Rect => 1.0,
                }
            })
            .collect()
    }
}

/// Edge handling before framing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingMode {
    /// Reflect-pad `window_len / 2` samples at both ends so frame centers
    /// tile the signal and the first/last samples get full overlap coverage.
    Reflect,
    /// No padding; frames start at sample 0.
    None,
}

/// STFT framing parameters. Construction validates the sizes and that the
/// taper/hop pair satisfies constant overlap-add, so every config that
/// exists can be inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftConfig {
    window_len: usize,
    hop_len: usize,
    fft_len: usize,
    window: WindowKind,
    padding: PaddingMode,
}

impl StftConfig {
    pub fn new(
        window_len: usize,
        hop_len: usize,
        fft_len: usize,
        window: WindowKind,
        padding: PaddingMode,
    ) -> Result<Self> {
        if hop_len == 0 || hop_len > window_len || window_len > fft_len {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop ({hop_len}) <= window ({window_len}) <= fft ({fft_len})"
            )));
        }
        if fft_len % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "fft_len must be even for a one-sided spectrum, got {fft_len}"
            )));
        }
        let cfg = Self {
            window_len,
            hop_len,
            fft_len,
            window,
            padding,
        };
        if !cfg.is_cola() {
            return Err(Error::NonCola);
        }
        Ok(cfg)
    }

    /// 64 ms square-root Hann frames at 50% overlap for 16 kHz input:
    /// window 1024, hop 512, fft 1024.
    pub fn default_16k() -> Self {
        Self::new(1024, 512, 1024, WindowKind::SqrtHann, PaddingMode::Reflect)
            .expect("default config is COLA")
    }

    /// Square-root Hann config for a window of `window_ms` milliseconds at
    /// the given rate, 50% overlap, fft length equal to the (even) window.
    pub fn from_window_ms(window_ms: f64, sample_rate: u32) -> Result<Self> {
        if !(window_ms.is_finite() && window_ms > 0.0) || sample_rate == 0 {
            return Err(Error::InvalidConfig(format!(
                "bad window_ms {window_ms} or sample_rate {sample_rate}"
            )));
        }
        let mut window_len = (window_ms * sample_rate as f64 / 1000.0).round() as usize;
        if window_len % 2 != 0 {
            window_len += 1;
        }
        if window_len < 2 {
            window_len = 2;
        }
        Self::new(
            window_len,
            window_len / 2,
            window_len,
            WindowKind::SqrtHann,
            PaddingMode::Reflect,
        )
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop_len(&self) -> usize {
        self.hop_len
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn padding(&self) -> PaddingMode {
        self.padding
    }

    /// Number of one-sided frequency bins, `fft_len / 2 + 1`.
    pub fn freq_bins(&self) -> usize {
        self.fft_len / 2 + 1
    }

    fn pad_amount(&self) -> usize {
        match self.padding {
            PaddingMode::Reflect => self.window_len / 2,
            PaddingMode::None => 0,
        }
    }

    /// Overlap-add of the analysis*synthesis taper product over a span long
    /// enough to contain a steady-state region; constant there means the
    /// config is invertible.
    fn is_cola(&self) -> bool {
        let taper = self.window.taper(self.window_len);
        let prod: Vec<f64> = taper.iter().map(|w| w * w).collect();
        let span = 3 * self.window_len;
        let mut acc = vec![0.0; span];
        let mut start = 0;
        while start + self.window_len <= span {
            for (i, p) in prod.iter().enumerate() {
                acc[start + i] += p;
            }
            start += self.hop_len;
        }
        let region = &acc[self.window_len..2 * self.window_len];
        let max = region.iter().cloned().fold(f64::MIN, f64::max);
        let min = region.iter().cloned().fold(f64::MAX, f64::min);
        max > 0.0 && (max - min) <= 1e-8 * max
    }
}

/// Multichannel time-domain signal, `[channels x samples]` with a sample
/// rate. All channels share the same length and every sample is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Array2<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Array2<f64>, sample_rate: u32) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::Empty("waveform"));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample_rate must be positive".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("waveform samples"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let n = samples.len();
        let arr = Array2::from_shape_vec((1, n), samples)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(arr, sample_rate)
    }

    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    /// Samples per channel.
    pub fn num_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, f64> {
        self.samples.row(c)
    }

    /// A single channel as a new mono waveform.
    pub fn extract_channel(&self, c: usize) -> Result<Waveform> {
        if c >= self.channels() {
            return Err(Error::InvalidArgument(format!(
                "channel {c} out of range for {} channels",
                self.channels()
            )));
        }
        Waveform::mono(self.channel(c).to_vec(), self.sample_rate)
    }

    pub fn rms(&self) -> f64 {
        let n = (self.channels() * self.num_samples()) as f64;
        (self.samples.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
    }
}

/// One-sided complex spectrogram, `[frames x freq_bins x channels]`, carrying
/// the framing config that produced it.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    bins: Array3<Complex64>,
    config: StftConfig,
    sample_rate: u32,
}

impl ComplexSpectrogram {
    pub fn new(bins: Array3<Complex64>, config: StftConfig, sample_rate: u32) -> Result<Self> {
        let (t, f, c) = bins.dim();
        if t == 0 || c == 0 {
            return Err(Error::Empty("spectrogram"));
        }
        if f != config.freq_bins() {
            return Err(Error::ShapeMismatch(format!(
                "spectrogram has {f} bins but config implies {}",
                config.freq_bins()
            )));
        }
        if bins.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("spectrogram bins"));
        }
        Ok(Self {
            bins,
            config,
            sample_rate,
        })
    }

    pub(crate) fn from_parts_unchecked(
        bins: Array3<Complex64>,
        config: StftConfig,
        sample_rate: u32,
    ) -> Self {
        Self {
            bins,
            config,
            sample_rate,
        }
    }

    pub fn frames(&self) -> usize {
        self.bins.dim().0
    }

    pub fn freq_bins(&self) -> usize {
        self.bins.dim().1
    }

    pub fn channels(&self) -> usize {
        self.bins.dim().2
    }

    pub fn bins(&self) -> &Array3<Complex64> {
        &self.bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// One channel as a `[frames x freq_bins x 1]` spectrogram.
    pub fn extract_channel(&self, c: usize) -> Result<ComplexSpectrogram> {
        if c >= self.channels() {
            return Err(Error::InvalidArgument(format!(
                "channel {c} out of range for {} channels",
                self.channels()
            )));
        }
        let (t, f, _) = self.bins.dim();
        let mut out = Array3::zeros((t, f, 1));
        for ti in 0..t {
            for fi in 0..f {
                out[[ti, fi, 0]] = self.bins[[ti, fi, c]];
            }
        }
        Ok(Self::from_parts_unchecked(out, self.config, self.sample_rate))
    }
}

fn padded_read(ch: ArrayView1<'_, f64>, padded_idx: usize, pad: usize, len: usize) -> f64 {
    let i = padded_idx as isize - pad as isize;
    let i = if i < 0 {
        -i
    } else if i >= len as isize {
        2 * (len as isize - 1) - i
    } else {
        i
    };
    ch[i as usize]
}

/// Windowed one-sided DFT of each frame of each channel.
///
/// Frame count is `1 + floor((L_padded - window_len) / hop_len)` where
/// `L_padded` includes the config's padding.
pub fn stft_forward(wave: &Waveform, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    let len = wave.num_samples();
    let pad = cfg.pad_amount();
    if pad > 0 && pad + 1 > len {
        return Err(Error::InvalidArgument(format!(
            "waveform of {len} samples is too short to reflect-pad {pad} samples"
        )));
    }
    let padded_len = len + 2 * pad;
    if padded_len < cfg.window_len {
        return Err(Error::InvalidArgument(format!(
            "waveform of {len} samples (padded {padded_len}) is shorter than the {} sample window",
            cfg.window_len
        )));
    }

    let t_frames = 1 + (padded_len - cfg.window_len) / cfg.hop_len;
    let f_bins = cfg.freq_bins();
    let chans = wave.channels();
    let taper = cfg.window.taper(cfg.window_len);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.fft_len);
    let mut bins = Array3::zeros((t_frames, f_bins, chans));
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_len];

    for c in 0..chans {
        let ch = wave.channel(c);
        for t in 0..t_frames {
            let start = t * cfg.hop_len;
            for i in 0..cfg.window_len {
                let v = padded_read(ch, start + i, pad, len);
                buf[i] = Complex64::new(v * taper[i], 0.0);
            }
            for b in buf.iter_mut().take(cfg.fft_len).skip(cfg.window_len) {
                *b = Complex64::new(0.0, 0.0);
            }
            fft.process(&mut buf);
            for k in 0..f_bins {
                bins[[t, k, c]] = buf[k];
            }
        }
    }

    Ok(ComplexSpectrogram::from_parts_unchecked(
        bins,
        *cfg,
        wave.sample_rate(),
    ))
}

/// Overlap-add synthesis with the synthesis taper, normalized by the
/// accumulated taper product and trimmed to `out_len` samples.
pub fn istft_inverse(
    spec: &ComplexSpectrogram,
    cfg: &StftConfig,
    out_len: usize,
) -> Result<Waveform> {
    if spec.config != *cfg {
        return Err(Error::ConfigMismatch);
    }
    let (t_frames, f_bins, chans) = spec.bins.dim();
    let pad = cfg.pad_amount();
    let ola_len = (t_frames - 1) * cfg.hop_len + cfg.window_len;
    let avail = ola_len - pad;
    if out_len == 0 || out_len > avail {
        return Err(Error::InvalidArgument(format!(
            "out_len {out_len} outside reconstructible range 1..={avail}"
        )));
    }

    let taper = cfg.window.taper(cfg.window_len);
    let mut den = vec![0.0; ola_len];
    for t in 0..t_frames {
        for (i, w) in taper.iter().enumerate() {
            den[t * cfg.hop_len + i] += w * w;
        }
    }

    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(cfg.fft_len);
    let scale = 1.0 / cfg.fft_len as f64;
    let half = cfg.fft_len / 2;

    let mut out = Array2::zeros((chans, out_len));
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_len];
    let mut ola = vec![0.0; ola_len];

    for c in 0..chans {
        ola.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..t_frames {
            buf[0] = spec.bins[[t, 0, c]];
            for k in 1..half {
                buf[k] = spec.bins[[t, k, c]];
                buf[cfg.fft_len - k] = spec.bins[[t, k, c]].conj();
            }
            buf[half] = spec.bins[[t, f_bins - 1, c]];
            ifft.process(&mut buf);
            let base = t * cfg.hop_len;
            for i in 0..cfg.window_len {
                ola[base + i] += buf[i].re * scale * taper[i];
            }
        }
        for i in 0..out_len {
            let d = den[i + pad];
            out[[c, i]] = if d > 1e-8 { ola[i + pad] / d } else { 0.0 };
        }
    }

    Waveform::new(out, spec.sample_rate)
}
