//! Multichannel sound enhancement built around time-frequency masking and
//! MVDR beamforming, with the training-side mathematics (mixture-invariant
//! assignment and SNR losses), scale-invariant SDR metrics, and a free-field
//! microphone-array scene simulator for end-to-end evaluation.

pub mod beamforming;
pub mod error;
mod linalg;
pub mod masking;
pub mod metrics;
pub mod mixit;
pub mod scene;
pub mod signal;

pub use beamforming::{
    enhance, mvdr_apply, mvdr_weights, post_mask, scm_noise, scm_target, BeamformConfig,
    BeamformerWeights, Scm,
};
pub use error::{Error, Result};
pub use masking::{apply_mask, oracle_binary_mask, oracle_wiener_mask, Mask, MaskProvider};
pub use metrics::{si_sdr, si_sdri, MetricReport, SI_SDR_CLAMP_DB};
pub use mixit::{
    brute_force_mixing_matrix, energy_penalty, mixit_total_loss, reconstruction_error,
    snr_loss, solve_mixing_matrix, AssignmentConstraint, LossConfig, MixingMatrix,
};
pub use scene::{
    build_mom, convolve_rir, mix_scene, render_source, steering_delays, ArrayGeometry,
    MomSpec, SceneSource, SceneSpec, SPEED_OF_SOUND,
};
pub use signal::{
    istft_inverse, stft_forward, ComplexSpectrogram, PaddingMode, StftConfig, Waveform, WindowKind,
};
