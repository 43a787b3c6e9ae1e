//! Deterministic free-field scene synthesis for microphone arrays:
//! far-field steering delays, fractional-delay rendering, scene mixing,
//! mixture-of-mixtures construction, and RIR convolution for user-supplied
//! impulse responses.

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::Waveform;

pub const SPEED_OF_SOUND: f64 = 343.0;

/// Microphone positions in meters, arbitrary origin (steering is relative
/// to the centroid).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    name: String,
    mics: Vec<[f64; 3]>,
}

impl ArrayGeometry {
    pub fn new(name: impl Into<String>, mics: Vec<[f64; 3]>) -> Result<Self> {
        if mics.is_empty() {
            return Err(Error::Empty("array geometry"));
        }
        if mics.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("microphone coordinates"));
        }
        for i in 0..mics.len() {
            for j in 0..i {
                if mics[i] == mics[j] {
                    return Err(Error::InvalidArgument(format!(
                        "microphones {j} and {i} share a position"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            mics,
        })
    }

    /// Four microphones on the corners of a horizontal square (ReSpeaker
    /// style), counterclockwise from +x+y.
    pub fn respeaker_square(side_m: f64) -> Result<Self> {
        if !(side_m.is_finite() && side_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "square side must be positive, got {side_m}"
            )));
        }
        let h = side_m / 2.0;
        Self::new(
            "respeaker",
            vec![[h, h, 0.0], [-h, h, 0.0], [-h, -h, 0.0], [h, -h, 0.0]],
        )
    }

    /// Four microphones on a line along x (Kinect style), uniform spacing,
    /// centered on the origin.
    pub fn kinect_linear(spacing_m: f64) -> Result<Self> {
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {spacing_m}"
            )));
        }
        let mics = (0..4)
            .map(|i| [(i as f64 - 1.5) * spacing_m, 0.0, 0.0])
            .collect();
        Self::new("kinect", mics)
    }

    /// Sixteen microphones on two 47 x 36.5 cm rectangle perimeters spaced
    /// 3.5 cm apart: 8 per plane, corner-anchored and evenly spaced along
    /// the perimeter.
    pub fn sixteen_sounds_usb() -> Self {
        let (l, w, gap) = (0.47, 0.365, 0.035);
        let perimeter = 2.0 * (l + w);
        let step = perimeter / 8.0;
        let point = |s: f64| -> [f64; 2] {
            // walk counterclockwise from the (0,0) corner of an l x w box
            if s < l {
                [s, 0.0]
            } else if s < l + w {
                [l, s - l]
            } else if s < 2.0 * l + w {
                [l - (s - l - w), w]
            } else {
                [0.0, w - (s - 2.0 * l - w)]
            }
        };
        let mut mics = Vec::with_capacity(16);
        for &z in &[-gap / 2.0, gap / 2.0] {
            for i in 0..8 {
                let [x, y] = point(i as f64 * step);
                mics.push([x - l / 2.0, y - w / 2.0, z]);
            }
        }
        Self::new("16sounds", mics).expect("preset coordinates are distinct")
    }

    /// Geometry preset by name with default dimensions: "respeaker"
    /// (4.57 cm square), "kinect" (4 cm linear), "16sounds".
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "respeaker" => Some(Self::respeaker_square(0.0457).unwrap()),
            "kinect" => Some(Self::kinect_linear(0.04).unwrap()),
            "16sounds" => Some(Self::sixteen_sounds_usb()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mic_positions(&self) -> &[[f64; 3]] {
        &self.mics
    }

    pub fn num_mics(&self) -> usize {
        self.mics.len()
    }
}

/// One far-field source: a dry mono signal plus direction and gain.
#[derive(Debug, Clone)]
pub struct SceneSource {
    pub wave: Waveform,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub gain_db: f64,
}

/// A complete simulated scene. Rendering is a pure function of this value;
/// `seed` records the provenance of generated source material.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub geometry: ArrayGeometry,
    pub sources: Vec<SceneSource>,
    pub sample_rate: u32,
    pub speed_of_sound: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Empty("scene sources"));
        }
        if !(self.speed_of_sound.is_finite() && self.speed_of_sound > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "speed of sound must be positive, got {}",
                self.speed_of_sound
            )));
        }
        let len = self.sources[0].wave.num_samples();
        for (i, s) in self.sources.iter().enumerate() {
            if s.wave.channels() != 1 {
                return Err(Error::InvalidArgument(format!(
                    "source {i} must be mono, got {} channels",
                    s.wave.channels()
                )));
            }
            if s.wave.sample_rate() != self.sample_rate {
                return Err(Error::InvalidConfig(format!(
                    "source {i} sample rate {} differs from scene rate {}",
                    s.wave.sample_rate(),
                    self.sample_rate
                )));
            }
            if s.wave.num_samples() != len {
                return Err(Error::ShapeMismatch(format!(
                    "source {i} has {} samples, expected {len}",
                    s.wave.num_samples()
                )));
            }
            if !(0.0..360.0).contains(&s.azimuth_deg) {
                return Err(Error::InvalidArgument(format!(
                    "source {i} azimuth {} outside [0, 360)",
                    s.azimuth_deg
                )));
            }
            if !s.elevation_deg.is_finite() || s.elevation_deg.abs() > 90.0 {
                return Err(Error::InvalidArgument(format!(
                    "source {i} elevation {} outside [-90, 90]",
                    s.elevation_deg
                )));
            }
            if !s.gain_db.is_finite() || s.gain_db.abs() > 60.0 {
                return Err(Error::InvalidArgument(format!(
                    "source {i} gain {} outside +/-60 dB",
                    s.gain_db
                )));
            }
        }
        Ok(())
    }
}

/// Far-field plane-wave arrival delays in seconds, one per microphone,
/// mean-subtracted so the array centroid hears the source at time zero.
/// Azimuth counterclockwise from +x in the horizontal plane, elevation
/// upward.
pub fn steering_delays(
    geometry: &ArrayGeometry,
    azimuth_deg: f64,
    elevation_deg: f64,
    speed_of_sound: f64,
) -> Vec<f64> {
    let az = azimuth_deg.to_radians();
    let el = elevation_deg.to_radians();
    let k = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
    let mut delays: Vec<f64> = geometry
        .mic_positions()
        .iter()
        .map(|p| -(p[0] * k[0] + p[1] * k[1] + p[2] * k[2]) / speed_of_sound)
        .collect();
    let mean = delays.iter().sum::<f64>() / delays.len() as f64;
    delays.iter_mut().for_each(|d| *d -= mean);
    delays
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Spatialize a mono source: per-channel fractional delay applied as a
/// frequency-domain phase ramp, equal amplitude on every channel (far
/// field), scaled by `gain_db`. Circular wraparound is pushed into padding
/// beyond the output window.
pub fn render_source(
    wave: &Waveform,
    delays: &[f64],
    gain_db: f64,
    sample_rate: u32,
) -> Result<Waveform> {
    if wave.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "render_source takes a mono source, got {} channels",
            wave.channels()
        )));
    }
    if delays.is_empty() {
        return Err(Error::Empty("delays"));
    }
    if delays.iter().any(|d| !d.is_finite()) || !gain_db.is_finite() {
        return Err(Error::NonFinite("delays or gain"));
    }
    if sample_rate != wave.sample_rate() {
        return Err(Error::InvalidConfig(format!(
            "delay sample rate {sample_rate} differs from source rate {}",
            wave.sample_rate()
        )));
    }

    let len = wave.num_samples();
    let gain = 10f64.powf(gain_db / 20.0);
    let max_shift = delays
        .iter()
        .map(|d| (d * sample_rate as f64).abs())
        .fold(0.0, f64::max);
    let nfft = next_pow2(len + max_shift.ceil() as usize + 8);
    let half = nfft / 2;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let ifft = planner.plan_fft_inverse(nfft);

    let mut src = vec![Complex64::new(0.0, 0.0); nfft];
    for (i, v) in wave.channel(0).iter().enumerate() {
        src[i] = Complex64::new(v * gain, 0.0);
    }
    fft.process(&mut src);

    let mut out = Array2::zeros((delays.len(), len));
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for (c, delay) in delays.iter().enumerate() {
        let d = delay * sample_rate as f64;
        buf[0] = src[0];
        for k in 1..half {
            let rot = Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * k as f64 * d / nfft as f64,
            );
            buf[k] = src[k] * rot;
            buf[nfft - k] = buf[k].conj();
        }
        // the Nyquist bin has no conjugate partner; keep it real
        buf[half] = src[half] * (std::f64::consts::PI * d).cos();
        ifft.process(&mut buf);
        for i in 0..len {
            out[[c, i]] = buf[i].re / nfft as f64;
        }
    }
    Waveform::new(out, sample_rate)
}

/// Render every source and sum: returns the multichannel mixture and the
/// individual rendered stems (mixture = sum of stems exactly, in source
/// order).
pub fn mix_scene(spec: &SceneSpec) -> Result<(Waveform, Vec<Waveform>)> {
    spec.validate()?;
    let mut stems = Vec::with_capacity(spec.sources.len());
    for s in &spec.sources {
        let delays = steering_delays(
            &spec.geometry,
            s.azimuth_deg,
            s.elevation_deg,
            spec.speed_of_sound,
        );
        stems.push(render_source(&s.wave, &delays, s.gain_db, spec.sample_rate)?);
    }
    let mut mix = stems[0].samples().clone();
    for stem in &stems[1..] {
        mix += stem.samples();
    }
    Ok((Waveform::new(mix, spec.sample_rate)?, stems))
}

/// Mixture-of-mixtures recipe: which pools to draw from, how many component
/// mixtures (drawn uniformly from {2,3,4} when `k` is `None`), and the gain
/// range in dB.
#[derive(Debug, Clone)]
pub struct MomSpec {
    pub target_mixtures: Vec<Waveform>,
    pub interference_mixtures: Vec<Waveform>,
    pub k: Option<usize>,
    pub gain_range: (f64, f64),
    pub seed: u64,
}

/// Build one mixture of mixtures. Deterministic in `spec.seed`; the draw
/// order is fixed: k (only when unset), target index, k-1 interference
/// indices without replacement, then one gain per component in mixture
/// order (target first). A degenerate gain range (lo == hi) consumes no
/// draws. Returns the MoM, the gain-scaled components (their sum is the
/// MoM exactly), and the gains in dB.
pub fn build_mom(spec: &MomSpec) -> Result<(Waveform, Vec<Waveform>, Vec<f64>)> {
    if spec.target_mixtures.is_empty() {
        return Err(Error::Empty("target mixtures"));
    }
    let (lo, hi) = spec.gain_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidConfig(format!(
            "gain range [{lo}, {hi}] is not a valid interval"
        )));
    }
    if let Some(k) = spec.k {
        if !(2..=4).contains(&k) {
            return Err(Error::InvalidConfig(format!(
                "a mixture of mixtures has 2 to 4 components, got k = {k}"
            )));
        }
    }
    let dims = spec.target_mixtures[0].samples().dim();
    let rate = spec.target_mixtures[0].sample_rate();
    for w in spec
        .target_mixtures
        .iter()
        .chain(spec.interference_mixtures.iter())
    {
        if w.samples().dim() != dims || w.sample_rate() != rate {
            return Err(Error::ShapeMismatch(
                "all component mixtures must share shape and sample rate".into(),
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = match spec.k {
        Some(k) => k,
        None => rng.random_range(2..=4usize),
    };
    if spec.interference_mixtures.len() < k - 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} needs {} interference mixtures, got {}",
            k - 1,
            spec.interference_mixtures.len()
        )));
    }

    let target_idx = rng.random_range(0..spec.target_mixtures.len());
    let mut pool: Vec<usize> = (0..spec.interference_mixtures.len()).collect();
    let mut picks = Vec::with_capacity(k - 1);
    for _ in 0..k - 1 {
        let i = rng.random_range(0..pool.len());
        picks.push(pool.remove(i));
    }

    let mut gains = Vec::with_capacity(k);
    for _ in 0..k {
        gains.push(if lo == hi { lo } else { rng.random_range(lo..hi) });
    }

    let mut components = Vec::with_capacity(k);
    let chosen: Vec<&Waveform> = std::iter::once(&spec.target_mixtures[target_idx])
        .chain(picks.iter().map(|i| &spec.interference_mixtures[*i]))
        .collect();
    for (w, g) in chosen.iter().zip(gains.iter()) {
        let scale = 10f64.powf(g / 20.0);
        components.push(Waveform::new(w.samples() * scale, rate)?);
    }

    let mut mom = components[0].samples().clone();
    for c in &components[1..] {
        mom += c.samples();
    }
    Ok((Waveform::new(mom, rate)?, components, gains))
}

/// Per-channel convolution of a mono signal with a multichannel impulse
/// response, trimmed to the input length. Short kernels run directly; long
/// ones go through the FFT.
pub fn convolve_rir(wave: &Waveform, rirs: &Waveform) -> Result<Waveform> {
    if wave.channels() != 1 {
        return Err(Error::InvalidArgument(format!(
            "convolve_rir takes a mono source, got {} channels",
            wave.channels()
        )));
    }
    let len = wave.num_samples();
    let taps = rirs.num_samples();
    let chans = rirs.channels();
    let mut out = Array2::zeros((chans, len));

    if taps <= 32 {
        for c in 0..chans {
            for i in 0..len {
                let mut acc = 0.0;
                for k in 0..taps.min(i + 1) {
                    acc += rirs.samples()[[c, k]] * wave.channel(0)[i - k];
                }
                out[[c, i]] = acc;
            }
        }
    } else {
        let nfft = next_pow2(len + taps - 1);
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(nfft);
        let ifft = planner.plan_fft_inverse(nfft);

        let mut src = vec![Complex64::new(0.0, 0.0); nfft];
        for (i, v) in wave.channel(0).iter().enumerate() {
            src[i] = Complex64::new(*v, 0.0);
        }
        fft.process(&mut src);

        let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
        for c in 0..chans {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            for (i, v) in rirs.channel(c).iter().enumerate() {
                buf[i] = Complex64::new(*v, 0.0);
            }
            fft.process(&mut buf);
            for (b, s) in buf.iter_mut().zip(src.iter()) {
                *b *= s;
            }
            ifft.process(&mut buf);
            for i in 0..len {
                out[[c, i]] = buf[i].re / nfft as f64;
            }
        }
    }
    Waveform::new(out, wave.sample_rate())
}
