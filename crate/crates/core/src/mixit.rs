//! Mixture-invariant training mathematics as pure functions: binary
//! mixing-matrix estimation (least squares plus projection, with an
//! exhaustive baseline), the thresholded SNR loss, and the energy-weighted
//! total loss. Loss *values* only — no gradients, no training loop.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::solve_spd;
use crate::signal::{ComplexSpectrogram, Waveform};

/// Binary assignment of S separated sources to N mixtures; each source
/// (column) belongs to exactly one mixture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixingMatrix {
    n_mixtures: usize,
    assignment: Vec<usize>,
}

impl MixingMatrix {
    pub fn new(n_mixtures: usize, assignment: Vec<usize>) -> Result<Self> {
        if n_mixtures == 0 || assignment.is_empty() {
            return Err(Error::Empty("mixing matrix"));
        }
        if let Some(bad) = assignment.iter().find(|a| **a >= n_mixtures) {
            return Err(Error::InvalidArgument(format!(
                "column assigned to mixture {bad}, but there are only {n_mixtures} mixtures"
            )));
        }
        Ok(Self {
            n_mixtures,
            assignment,
        })
    }

    pub fn n_mixtures(&self) -> usize {
        self.n_mixtures
    }

    pub fn n_sources(&self) -> usize {
        self.assignment.len()
    }

    /// Mixture index each source column is assigned to.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Dense 0/1 matrix, `[N x S]`.
    pub fn entries(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n_mixtures, self.assignment.len()));
        for (s, a) in self.assignment.iter().enumerate() {
            m[[*a, s]] = 1.0;
        }
        m
    }
}

impl std::fmt::Display for MixingMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n_mixtures {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[")?;
            for (s, a) in self.assignment.iter().enumerate() {
                if s > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", if *a == i { 1 } else { 0 })?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

/// Loss hyperparameters: the SNR saturation point, the energy-penalty
/// weight, and the magnitude exponent of the penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub snr_max: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            snr_max: 30.0,
            gamma: 0.01,
            beta: 0.5,
        }
    }
}

impl LossConfig {
    pub fn new(snr_max: f64, gamma: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            snr_max,
            gamma,
            beta,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.snr_max.is_finite() && self.snr_max >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "snr_max must be a finite dB value >= 0, got {}",
                self.snr_max
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be > 0, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Soft-threshold weight `τ = 10^(-snr_max/10)`.
    pub fn tau(&self) -> f64 {
        10f64.powf(-self.snr_max / 10.0)
    }
}

/// Which binary matrices the assignment search may return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentConstraint {
    /// Any column-wise one-hot matrix.
    Unconstrained,
    /// N = 2 mixtures, S = 3 sources, with the target source always in the
    /// first output: mixture 0 is rebuilt from output 0 alone, outputs
    /// {0, 1}, or outputs {0, 2}; mixture 1 takes the rest.
    WeakEnhancement,
}

const WEAK_ENHANCEMENT_ASSIGNMENTS: [[usize; 3]; 3] = [[0, 1, 1], [0, 0, 1], [0, 1, 0]];

fn validate_inputs(mixtures: &Array2<f64>, sources: &Array2<f64>) -> Result<(usize, usize, usize)> {
    let (n, l) = mixtures.dim();
    let (s, ls) = sources.dim();
    if n == 0 || s == 0 || l == 0 {
        return Err(Error::Empty("mixing-matrix inputs"));
    }
    if l != ls {
        return Err(Error::ShapeMismatch(format!(
            "mixtures have {l} samples but sources have {ls}"
        )));
    }
    if s < n {
        return Err(Error::InvalidArgument(format!(
            "need at least as many sources as mixtures, got {s} sources for {n} mixtures"
        )));
    }
    if mixtures.iter().chain(sources.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("mixing-matrix inputs"));
    }
    Ok((n, s, l))
}

/// Squared L2 error of rebuilding every mixture from its assigned sources.
pub fn reconstruction_error(
    mixtures: &Array2<f64>,
    sources: &Array2<f64>,
    matrix: &MixingMatrix,
) -> Result<f64> {
    let (n, s, l) = validate_inputs(mixtures, sources)?;
    if matrix.n_mixtures() != n || matrix.n_sources() != s {
        return Err(Error::ShapeMismatch(format!(
            "matrix is {}x{} but inputs are {n}x{s}",
            matrix.n_mixtures(),
            matrix.n_sources()
        )));
    }
    let mut recon = Array2::<f64>::zeros((n, l));
    for (src, mix) in matrix.assignment().iter().enumerate() {
        for c in 0..l {
            recon[[*mix, c]] += sources[[src, c]];
        }
    }
    let mut err = 0.0;
    for (r, y) in recon.iter().zip(mixtures.iter()) {
        err += (r - y) * (r - y);
    }
    Ok(err)
}

fn best_of(
    mixtures: &Array2<f64>,
    sources: &Array2<f64>,
    candidates: impl Iterator<Item = Vec<usize>>,
    n: usize,
) -> Result<MixingMatrix> {
    let mut best: Option<(f64, MixingMatrix)> = None;
    for assignment in candidates {
        let m = MixingMatrix::new(n, assignment)?;
        let err = reconstruction_error(mixtures, sources, &m)?;
        if best.as_ref().map_or(true, |(e, _)| err < *e) {
            best = Some((err, m));
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| Error::Degenerate("no candidate assignments".into()))
}

/// Mixing-matrix estimate: real-valued least squares `argmin_A ||y - A x̂||²`
/// followed by the binary projection (per-column argmax, ties resolved to
/// the lowest mixture index). With the weak-enhancement constraint the three
/// admissible matrices are scored directly instead.
///
/// All-zero sources cannot be ranked, so every column falls back to
/// mixture 0.
pub fn solve_mixing_matrix(
    mixtures: &Array2<f64>,
    sources: &Array2<f64>,
    constraint: AssignmentConstraint,
) -> Result<MixingMatrix> {
    let (n, s, _) = validate_inputs(mixtures, sources)?;
    match constraint {
        AssignmentConstraint::WeakEnhancement => {
            require_weak_shape(n, s)?;
            best_of(
                mixtures,
                sources,
                WEAK_ENHANCEMENT_ASSIGNMENTS.iter().map(|a| a.to_vec()),
                n,
            )
        }
        AssignmentConstraint::Unconstrained => {
            // Normal equations of the row-decoupled least squares, with the
            // source Gram ridged relative to its trace so duplicate or
            // silent sources stay solvable.
            let gram = sources.dot(&sources.t());
            let trace: f64 = (0..s).map(|i| gram[[i, i]]).sum();
            if trace <= 0.0 {
                return MixingMatrix::new(n, vec![0; s]);
            }
            let mut ridged = gram;
            let ridge = 1e-10 * trace / s as f64;
            for i in 0..s {
                ridged[[i, i]] += ridge;
            }
            let rhs = sources.dot(&mixtures.t());
            let coeffs = match solve_spd(&ridged, &rhs) {
                Some(w) => w, // [S x N]: coefficient of source s in mixture i
                None => return MixingMatrix::new(n, vec![0; s]),
            };
            let assignment = (0..s)
                .map(|src| {
                    let mut best = 0usize;
                    for mix in 1..n {
                        if coeffs[[src, mix]] > coeffs[[src, best]] {
                            best = mix;
                        }
                    }
                    best
                })
                .collect();
            MixingMatrix::new(n, assignment)
        }
    }
}

/// Exhaustive minimizer over all column-wise one-hot matrices respecting the
/// constraint; the test oracle for [`solve_mixing_matrix`]. Ties resolve to
/// the first candidate in lexicographic assignment order.
pub fn brute_force_mixing_matrix(
    mixtures: &Array2<f64>,
    sources: &Array2<f64>,
    constraint: AssignmentConstraint,
) -> Result<MixingMatrix> {
    const GUARD: u64 = 4096;
    let (n, s, _) = validate_inputs(mixtures, sources)?;
    match constraint {
        AssignmentConstraint::WeakEnhancement => {
            require_weak_shape(n, s)?;
            best_of(
                mixtures,
                sources,
                WEAK_ENHANCEMENT_ASSIGNMENTS.iter().map(|a| a.to_vec()),
                n,
            )
        }
        AssignmentConstraint::Unconstrained => {
            let candidates = (n as u64).checked_pow(s as u32).unwrap_or(u64::MAX);
            if candidates > GUARD {
                return Err(Error::EnumerationGuard {
                    candidates,
                    guard: GUARD,
                });
            }
            let mut digits = vec![0usize; s];
            let mut done = false;
            let iter = std::iter::from_fn(move || {
                if done {
                    return None;
                }
                let out = digits.clone();
                // odometer: rightmost column counts fastest
                let mut i = s;
                loop {
                    if i == 0 {
                        done = true;
                        break;
                    }
                    i -= 1;
                    digits[i] += 1;
                    if digits[i] < n {
                        break;
                    }
                    digits[i] = 0;
                }
                Some(out)
            });
            best_of(mixtures, sources, iter, n)
        }
    }
}

fn require_weak_shape(n: usize, s: usize) -> Result<()> {
    if n != 2 || s != 3 {
        return Err(Error::InvalidConfig(format!(
            "weak-enhancement constraint needs 2 mixtures and 3 sources, got {n} and {s}"
        )));
    }
    Ok(())
}

fn snr_loss_sums(
    reference: impl Iterator<Item = f64>,
    estimate: impl Iterator<Item = f64>,
    anchor: impl Iterator<Item = f64>,
    tau: f64,
) -> (f64, f64, f64) {
    let mut ref_pow = 0.0;
    let mut err_pow = 0.0;
    let mut anchor_pow = 0.0;
    for ((x, xh), y) in reference.zip(estimate).zip(anchor) {
        ref_pow += x * x;
        err_pow += (x - xh) * (x - xh);
        anchor_pow += y * y;
    }
    (ref_pow, err_pow, tau * anchor_pow)
}

/// Thresholded SNR loss
/// `-10·log10( ||x||² / (||x - x̂||² + τ·||anchor||²) )`, saturating at
/// `-snr_max` when the anchor is the reference. The anchor is explicit
/// because reconstruction losses threshold on the mixture while per-source
/// losses threshold on the reference itself.
pub fn snr_loss(
    reference: &Waveform,
    estimate: &Waveform,
    threshold_anchor: &Waveform,
    cfg: &LossConfig,
) -> Result<f64> {
    cfg.validate()?;
    let dims = reference.samples().dim();
    if estimate.samples().dim() != dims || threshold_anchor.samples().dim() != dims {
        return Err(Error::ShapeMismatch(format!(
            "loss inputs disagree: reference {:?}, estimate {:?}, anchor {:?}",
            dims,
            estimate.samples().dim(),
            threshold_anchor.samples().dim()
        )));
    }
    let (ref_pow, err_pow, floor) = snr_loss_sums(
        reference.samples().iter().copied(),
        estimate.samples().iter().copied(),
        threshold_anchor.samples().iter().copied(),
        cfg.tau(),
    );
    if ref_pow == 0.0 {
        return Err(Error::Degenerate("all-zero reference in SNR loss".into()));
    }
    Ok(-10.0 * (ref_pow / (err_pow + floor)).log10())
}

/// Energy penalty `γ · mean(|X̂|^β)` over every bin of the target output's
/// spectrogram.
pub fn energy_penalty(xhat_spec: &ComplexSpectrogram, cfg: &LossConfig) -> f64 {
    let count = xhat_spec.bins().len() as f64;
    let sum: f64 = xhat_spec
        .bins()
        .iter()
        .map(|v| v.norm().powf(cfg.beta))
        .sum();
    cfg.gamma * sum / count
}

/// Total MixIT loss: estimate the assignment, rebuild each mixture from its
/// assigned sources, sum the per-mixture SNR losses (threshold anchored on
/// the mixture itself), and add the energy penalty of the first (target)
/// output. `source_spectra` may be empty when `gamma` is zero.
pub fn mixit_total_loss(
    mixtures: &Array2<f64>,
    sources: &Array2<f64>,
    source_spectra: &[ComplexSpectrogram],
    constraint: AssignmentConstraint,
    cfg: &LossConfig,
) -> Result<(f64, MixingMatrix)> {
    cfg.validate()?;
    let matrix = solve_mixing_matrix(mixtures, sources, constraint)?;
    let (n, _, l) = validate_inputs(mixtures, sources)?;

    let mut recon = Array2::<f64>::zeros((n, l));
    for (src, mix) in matrix.assignment().iter().enumerate() {
        for c in 0..l {
            recon[[*mix, c]] += sources[[src, c]];
        }
    }

    let mut total = 0.0;
    for i in 0..n {
        let (ref_pow, err_pow, floor) = snr_loss_sums(
            mixtures.row(i).iter().copied(),
            recon.row(i).iter().copied(),
            mixtures.row(i).iter().copied(),
            cfg.tau(),
        );
        if ref_pow == 0.0 {
            return Err(Error::Degenerate(format!(
                "mixture {i} is all-zero; its SNR loss is undefined"
            )));
        }
        total += -10.0 * (ref_pow / (err_pow + floor)).log10();
    }

    if cfg.gamma > 0.0 {
        let target = source_spectra.first().ok_or(Error::InvalidArgument(
            "energy penalty requires the target output's spectrogram".into(),
        ))?;
        total += energy_penalty(target, cfg);
    }

    Ok((total, matrix))
}
