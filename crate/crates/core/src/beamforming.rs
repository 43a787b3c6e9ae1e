//! Spatial covariance estimation, MVDR beamforming in the SCM-ratio form of
//! Souden et al. (2010), minimum-floor post-masking, and the end-to-end
//! mask-then-beamform enhancement pipeline.

use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::solve_hermitian;
use crate::masking::{apply_mask, Mask, MaskProvider};
use crate::signal::{istft_inverse, stft_forward, ComplexSpectrogram, StftConfig, Waveform};

/// Per-frequency spatial covariance matrices, `[freq_bins x C x C]`.
/// Every slice is Hermitian; slices produced by the estimators here are
/// positive semi-definite averages of outer products.
#[derive(Debug, Clone)]
pub struct Scm {
    matrices: Array3<Complex64>,
}

impl Scm {
    pub fn new(matrices: Array3<Complex64>) -> Result<Self> {
        let (f, c, c2) = matrices.dim();
        if f == 0 || c == 0 {
            return Err(Error::Empty("scm"));
        }
        if c != c2 {
            return Err(Error::ShapeMismatch(format!(
                "covariance slices must be square, got {c}x{c2}"
            )));
        }
        if matrices.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("scm entries"));
        }
        for fi in 0..f {
            for i in 0..c {
                for j in 0..i {
                    let d = matrices[[fi, i, j]] - matrices[[fi, j, i]].conj();
                    if d.norm() > 1e-10 {
                        return Err(Error::InvalidArgument(format!(
                            "slice {fi} is not Hermitian at ({i},{j})"
                        )));
                    }
                }
                if matrices[[fi, i, i]].im.abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "slice {fi} has a complex diagonal at {i}"
                    )));
                }
            }
        }
        Ok(Self { matrices })
    }

    pub fn freq_bins(&self) -> usize {
        self.matrices.dim().0
    }

    pub fn channels(&self) -> usize {
        self.matrices.dim().1
    }

    pub fn matrices(&self) -> &Array3<Complex64> {
        &self.matrices
    }
}

/// MVDR weights per frequency, `[freq_bins x C]`, with the reference channel
/// the one-hot steering vector pointed at.
#[derive(Debug, Clone)]
pub struct BeamformerWeights {
    weights: Array2<Complex64>,
    ref_mic: usize,
}

impl BeamformerWeights {
    pub fn new(weights: Array2<Complex64>, ref_mic: usize) -> Result<Self> {
        if weights.nrows() == 0 || weights.ncols() == 0 {
            return Err(Error::Empty("beamformer weights"));
        }
        if ref_mic >= weights.ncols() {
            return Err(Error::InvalidArgument(format!(
                "ref_mic {ref_mic} out of range for {} channels",
                weights.ncols()
            )));
        }
        if weights.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite("beamformer weights"));
        }
        Ok(Self { weights, ref_mic })
    }

    pub fn freq_bins(&self) -> usize {
        self.weights.nrows()
    }

    pub fn channels(&self) -> usize {
        self.weights.ncols()
    }

    pub fn ref_mic(&self) -> usize {
        self.ref_mic
    }

    pub fn weights(&self) -> &Array2<Complex64> {
        &self.weights
    }
}

/// Beamformer configuration. `diagonal_loading` is relative to the mean
/// diagonal of the noise SCM; `postmask_floor` is the minimum gain of the
/// post-masking filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamformConfig {
    pub ref_mic: usize,
    pub diagonal_loading: f64,
    pub postmask_floor: f64,
    pub postmask_enabled: bool,
}

impl Default for BeamformConfig {
    fn default() -> Self {
        Self {
            ref_mic: 0,
            diagonal_loading: 1e-6,
            postmask_floor: 0.3,
            postmask_enabled: true,
        }
    }
}

impl BeamformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.diagonal_loading.is_finite() && self.diagonal_loading >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "diagonal loading must be >= 0, got {}",
                self.diagonal_loading
            )));
        }
        if !(self.postmask_floor.is_finite() && (0.0..=1.0).contains(&self.postmask_floor)) {
            return Err(Error::InvalidConfig(format!(
                "post-mask floor must lie in [0, 1], got {}",
                self.postmask_floor
            )));
        }
        Ok(())
    }
}

/// Target spatial covariance: `Φ(f) = (1/T) Σ_t v(t,f) v(t,f)^H` over the
/// masked estimate's channel vectors.
pub fn scm_target(xhat: &ComplexSpectrogram) -> Result<Scm> {
    accumulate_scm(xhat, None)
}

/// Noise spatial covariance from the residual `N̂ = Y - X̂`, averaged the
/// same way as the target SCM.
pub fn scm_noise(mixture: &ComplexSpectrogram, xhat: &ComplexSpectrogram) -> Result<Scm> {
    if mixture.bins().dim() != xhat.bins().dim() {
        return Err(Error::ShapeMismatch(format!(
            "mixture {:?} vs estimate {:?}",
            mixture.bins().dim(),
            xhat.bins().dim()
        )));
    }
    accumulate_scm(mixture, Some(xhat))
}

fn accumulate_scm(a: &ComplexSpectrogram, subtract: Option<&ComplexSpectrogram>) -> Result<Scm> {
    let (t_len, f_len, c_len) = a.bins().dim();
    let mut out = Array3::<Complex64>::zeros((f_len, c_len, c_len));
    let scale = 1.0 / t_len as f64;
    let mut v = vec![Complex64::new(0.0, 0.0); c_len];
    for f in 0..f_len {
        for t in 0..t_len {
            for (c, vc) in v.iter_mut().enumerate() {
                *vc = match subtract {
                    Some(s) => a.bins()[[t, f, c]] - s.bins()[[t, f, c]],
                    None => a.bins()[[t, f, c]],
                };
            }
            // lower triangle only; the mirror below keeps slices exactly
            // Hermitian under accumulation rounding
            for i in 0..c_len {
                for j in 0..=i {
                    out[[f, i, j]] += v[i] * v[j].conj();
                }
            }
        }
        for i in 0..c_len {
            for j in 0..i {
                out[[f, i, j]] *= scale;
                out[[f, j, i]] = out[[f, i, j]].conj();
            }
            let d = out[[f, i, i]].re * scale;
            out[[f, i, i]] = Complex64::new(d, 0.0);
        }
    }
    Ok(Scm { matrices: out })
}

/// MVDR weights in the SCM-ratio form: per frequency
/// `F = (Φ_nn + εI)⁻¹ Φ_xx u / trace((Φ_nn + εI)⁻¹ Φ_xx)` with
/// `ε = diagonal_loading · trace(Φ_nn)/C`. Frequencies where the loaded
/// noise SCM cannot be factorized or the trace magnitude falls below
/// `1e-12·C` get pass-through (one-hot) weights instead, so silent bins
/// cannot poison the output.
pub fn mvdr_weights(phi_xx: &Scm, phi_nn: &Scm, cfg: &BeamformConfig) -> Result<BeamformerWeights> {
    cfg.validate()?;
    if phi_xx.matrices.dim() != phi_nn.matrices.dim() {
        return Err(Error::ShapeMismatch(format!(
            "target scm {:?} vs noise scm {:?}",
            phi_xx.matrices.dim(),
            phi_nn.matrices.dim()
        )));
    }
    let (f_len, c_len, _) = phi_xx.matrices.dim();
    if cfg.ref_mic >= c_len {
        return Err(Error::InvalidArgument(format!(
            "ref_mic {} out of range for {c_len} channels",
            cfg.ref_mic
        )));
    }

    let mut weights = Array2::<Complex64>::zeros((f_len, c_len));
    let passthrough = |w: &mut Array2<Complex64>, f: usize| {
        for c in 0..c_len {
            w[[f, c]] = Complex64::new(0.0, 0.0);
        }
        w[[f, cfg.ref_mic]] = Complex64::new(1.0, 0.0);
    };

    for f in 0..f_len {
        let mut loaded = phi_nn
            .matrices
            .index_axis(ndarray::Axis(0), f)
            .to_owned();
        let trace_nn: f64 = (0..c_len).map(|i| loaded[[i, i]].re).sum();
        let eps = cfg.diagonal_loading * trace_nn / c_len as f64;
        for i in 0..c_len {
            loaded[[i, i]] += Complex64::new(eps, 0.0);
        }

        let target = phi_xx.matrices.index_axis(ndarray::Axis(0), f).to_owned();
        let z = match solve_hermitian(&loaded, &target) {
            Some(z) => z,
            None => {
                passthrough(&mut weights, f);
                continue;
            }
        };
        let trace_z: Complex64 = (0..c_len).map(|i| z[[i, i]]).sum();
        if trace_z.norm() < 1e-12 * c_len as f64 {
            passthrough(&mut weights, f);
            continue;
        }
        for c in 0..c_len {
            weights[[f, c]] = z[[c, cfg.ref_mic]] / trace_z;
        }
    }

    BeamformerWeights::new(weights, cfg.ref_mic)
}

/// Beamformer application: `X̄(t,f) = F(f)^H Y(t,f)`, a single-channel
/// spectrogram.
pub fn mvdr_apply(
    weights: &BeamformerWeights,
    mixture: &ComplexSpectrogram,
) -> Result<ComplexSpectrogram> {
    let (t_len, f_len, c_len) = mixture.bins().dim();
    if weights.freq_bins() != f_len || weights.channels() != c_len {
        return Err(Error::ShapeMismatch(format!(
            "weights {}x{} vs mixture {f_len} bins x {c_len} channels",
            weights.freq_bins(),
            weights.channels()
        )));
    }
    let mut out = Array3::<Complex64>::zeros((t_len, f_len, 1));
    for t in 0..t_len {
        for f in 0..f_len {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..c_len {
                acc += weights.weights()[[f, c]].conj() * mixture.bins()[[t, f, c]];
            }
            out[[t, f, 0]] = acc;
        }
    }
    Ok(ComplexSpectrogram::new(
        out,
        *mixture.config(),
        mixture.sample_rate(),
    )?)
}

/// Minimum-floor post-mask: `X̄'(t,f) = max(M(t,f), floor) · X̄(t,f)`.
/// Keeps mask-driven attenuation from fully zeroing bins the beamformer
/// already cleaned (Erdogan et al. style).
pub fn post_mask(
    beamformed: &ComplexSpectrogram,
    mask: &Mask,
    floor: f64,
) -> Result<ComplexSpectrogram> {
    if !(floor.is_finite() && (0.0..=1.0).contains(&floor)) {
        return Err(Error::InvalidArgument(format!(
            "post-mask floor must lie in [0, 1], got {floor}"
        )));
    }
    if beamformed.frames() != mask.frames() || beamformed.freq_bins() != mask.freq_bins() {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{} but spectrogram is {}x{}",
            mask.frames(),
            mask.freq_bins(),
            beamformed.frames(),
            beamformed.freq_bins()
        )));
    }
    let mut bins = beamformed.bins().clone();
    for ((t, f, _), v) in bins.indexed_iter_mut() {
        *v *= mask.values()[[t, f]].max(floor);
    }
    Ok(ComplexSpectrogram::new(
        bins,
        *beamformed.config(),
        beamformed.sample_rate(),
    )?)
}

/// Full enhancement pipeline: STFT, mask estimation on the reference
/// channel, mask application to all channels, SCM estimation, MVDR, optional
/// post-masking, ISTFT. Single-channel input skips the spatial stages and
/// returns the masked reference channel. Output length equals input length.
///
/// Oracle mask providers need `target_stem`: the ground-truth target, either
/// mono or with the mixture's channel count.
pub fn enhance(
    mixture: &Waveform,
    provider: &MaskProvider,
    target_stem: Option<&Waveform>,
    stft_cfg: &StftConfig,
    bf_cfg: &BeamformConfig,
) -> Result<Waveform> {
    provider.validate()?;
    bf_cfg.validate()?;
    let channels = mixture.channels();
    if bf_cfg.ref_mic >= channels {
        return Err(Error::InvalidArgument(format!(
            "ref_mic {} out of range for {channels} channels",
            bf_cfg.ref_mic
        )));
    }

    let spec = stft_forward(mixture, stft_cfg)?;
    let spec_ref = spec.extract_channel(bf_cfg.ref_mic)?;

    let target_ref = match target_stem {
        Some(stem) => {
            let ch = if stem.channels() == channels {
                bf_cfg.ref_mic
            } else if stem.channels() == 1 {
                0
            } else {
                return Err(Error::ShapeMismatch(format!(
                    "target stem has {} channels, expected 1 or {channels}",
                    stem.channels()
                )));
            };
            let stem_spec = stft_forward(stem, stft_cfg)?;
            if stem_spec.frames() != spec.frames() {
                return Err(Error::ShapeMismatch(
                    "target stem length differs from mixture".into(),
                ));
            }
            Some(stem_spec.extract_channel(ch)?)
        }
        None => None,
    };

    let mask = provider.provide(&spec_ref, target_ref.as_ref())?;
    let xhat = apply_mask(&spec, &mask)?;

    let out_spec = if channels == 1 {
        xhat
    } else {
        let phi_xx = scm_target(&xhat)?;
        let phi_nn = scm_noise(&spec, &xhat)?;
        let weights = mvdr_weights(&phi_xx, &phi_nn, bf_cfg)?;
        let beamformed = mvdr_apply(&weights, &spec)?;
        if bf_cfg.postmask_enabled {
            post_mask(&beamformed, &mask, bf_cfg.postmask_floor)?
        } else {
            beamformed
        }
    };

    istft_inverse(&out_spec, stft_cfg, mixture.num_samples())
}
