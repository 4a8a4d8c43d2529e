//! Adaptive beamforming, null synthesis and the effective decoder channels.
//!
//! Two beamformers run side by side, one per desired propagation path. The
//! LMS variant adapts its weights from the pilot-subcarrier error and needs
//! no arrival angles; its converged pattern is then sharpened by null
//! deepening: sample the beam response on an angle grid, zero the samples
//! around each unwanted direction, and re-solve for the weights from the
//! edited pattern. The null-steering baseline instead solves the constraint
//! system directly from known arrival angles.

use num_complex::Complex64;

use crate::channel::{steering_vector, PathGains};
use crate::error::{Error, Result};
use crate::numerics::{cis, pilot_dft_matrix, solve_or_pinv_vec, CMat, CVec};
use crate::ofdm::PilotPlan;

/// Step-size policy for the LMS recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `mu = scale / (n_R * Q * K * mean input power per element)`,
    /// measured on the first training frame. The denominator estimates the
    /// trace of the pilot-error Hessian, so any `scale < 1` is stable
    /// regardless of the interference load.
    Auto { scale: f64 },
    Fixed(f64),
}

/// Weight initialization rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    /// First element one, rest zero; needs no angle knowledge.
    FirstElement,
    /// Conventional beam toward a coarse angle guess, `a(theta)/n_R`.
    Steer(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmsConfig {
    pub step: StepSize,
    pub max_frames: usize,
    /// Early-stop threshold on the per-frame MSE change, relative to the
    /// initial MSE. Zero disables early stopping.
    pub tolerance: f64,
    pub init: WeightInit,
}

impl Default for LmsConfig {
    fn default() -> Self {
        Self {
            step: StepSize::Auto { scale: 0.5 },
            max_frames: 200,
            tolerance: 0.0,
            init: WeightInit::FirstElement,
        }
    }
}

/// Which pilot reference drives each beamformer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotReference {
    /// Beamformer l tracks the pilot mixture arriving on path l,
    /// `h_l1 p1 + h_l2 p2` (delay-rotated for the late path), built from
    /// the receiver's channel knowledge. Drives the weights toward unit
    /// response on path l and nulls elsewhere.
    PathMixture,
    /// Beamformer l tracks antenna l's raw pilot sequence.
    AntennaPilot,
}

/// One pilot-bearing frame prepared for training: the prefix-stripped
/// received block and the per-beamformer pilot references.
#[derive(Debug, Clone)]
pub struct TrainingFrame {
    /// n_R x K received samples after prefix removal.
    pub body: CMat,
    /// Reference pilot values per beamformer, length Q each.
    pub refs: [CVec; 2],
}

/// Beamformer output `r = w^H V` as a column vector.
pub fn beamformer_output(w: &CVec, v: &CMat) -> CVec {
    (w.adjoint() * v).transpose()
}

/// One LMS update from one frame's pilot error.
///
/// The received pilots are the pilot-subcarrier DFT of the current
/// beamformer output; the weight moves along the pilot error transformed
/// back to the time domain,
/// `w' = w + 2 mu V F_Q^T (y_Q - y~_Q)^*`
/// (the error enters conjugated: in this forward-DFT convention that is
/// the exact gradient descent direction on the pilot MSE, and reduces to
/// the scalar recursion `w + 2 mu v e^*`).
pub fn lms_step(w: &CVec, body: &CMat, pilot_ref: &CVec, plan: &PilotPlan, mu: f64) -> Result<CVec> {
    let k = body.ncols();
    let fq = pilot_dft_matrix(k, &plan.pilot_indices)?;
    let m = body * fq.transpose();
    Ok(lms_step_cached(w, &m, pilot_ref, mu))
}

/// [`lms_step`] with the frame-constant matrix `M = V F_Q^T` precomputed.
fn lms_step_cached(w: &CVec, m: &CMat, pilot_ref: &CVec, mu: f64) -> CVec {
    let err = pilot_ref - received_pilots(w, m);
    let mut delta = m * err.conjugate();
    delta.scale_mut(2.0 * mu);
    w + delta
}

/// Pilot-subcarrier values of the current beamformer output,
/// `y~_Q = F_Q (w^H V)^T`.
fn received_pilots(w: &CVec, m: &CMat) -> CVec {
    (m.adjoint() * w).conjugate()
}

/// Converged weights plus the per-frame MSE trace.
#[derive(Debug, Clone)]
pub struct LmsOutcome {
    pub weights: CVec,
    pub mse_trace: Vec<f64>,
    pub mu: f64,
}

/// Iterate [`lms_step`] over a stream of pilot-bearing frames.
///
/// Stops after `max_frames`, or earlier once the frame-to-frame MSE change
/// falls below `tolerance` (relative to the initial MSE). Growth of the
/// MSE past 1e6 times its initial value aborts with a divergence error.
pub fn train_lms<'a, I>(
    cfg: &LmsConfig,
    frames: I,
    plan: &PilotPlan,
    branch: usize,
) -> Result<LmsOutcome>
where
    I: IntoIterator<Item = &'a TrainingFrame>,
{
    let mut w: Option<CVec> = None;
    let mut mu = match cfg.step {
        StepSize::Fixed(mu) => mu,
        StepSize::Auto { .. } => f64::NAN,
    };
    let mut trace = Vec::new();
    let mut fq: Option<CMat> = None;

    for (idx, frame) in frames.into_iter().take(cfg.max_frames).enumerate() {
        let n_rx = frame.body.nrows();
        let k = frame.body.ncols();
        let w_cur = w.get_or_insert_with(|| match cfg.init {
            WeightInit::FirstElement => {
                let mut e1 = CVec::zeros(n_rx);
                e1[0] = Complex64::new(1.0, 0.0);
                e1
            }
            WeightInit::Steer(theta) => {
                steering_vector(theta, n_rx).unscale(n_rx as f64)
            }
        });
        if mu.is_nan() {
            let mean_power = frame.body.iter().map(|z| z.norm_sqr()).sum::<f64>()
                / (n_rx * k) as f64;
            let scale = match cfg.step {
                StepSize::Auto { scale } => scale,
                StepSize::Fixed(_) => unreachable!(),
            };
            let q = plan.q().max(1);
            mu = scale
                / ((n_rx * q * k) as f64 * mean_power.max(f64::MIN_POSITIVE));
        }
        let fq_mat = match &fq {
            Some(f) => f,
            None => {
                fq = Some(pilot_dft_matrix(k, &plan.pilot_indices)?);
                fq.as_ref().unwrap()
            }
        };
        let m = &frame.body * fq_mat.transpose();
        let err = &frame.refs[branch] - received_pilots(w_cur, &m);
        let mse: f64 = err.iter().map(|z| z.norm_sqr()).sum();
        trace.push(mse);
        let mse0 = trace[0];
        if mse > 1e6 * mse0.max(f64::MIN_POSITIVE) {
            return Err(Error::LmsDiverged { mu, frame: idx });
        }
        if idx > 0 && cfg.tolerance > 0.0 {
            let change = (trace[idx - 1] - mse).abs();
            if change < cfg.tolerance * mse0 {
                break;
            }
        }
        let mut delta = &m * err.conjugate();
        delta.scale_mut(2.0 * mu);
        *w_cur += delta;
    }

    let weights = w.ok_or_else(|| Error::Config("empty training stream".into()))?;
    if weights.norm() == 0.0 {
        return Err(Error::Config("training produced all-zero weights".into()));
    }
    Ok(LmsOutcome {
        weights,
        mse_trace: trace,
        mu,
    })
}

/// Iterate the LMS recursion on a single frame's pilots (training and
/// decoding share one frame). Equivalent to [`train_lms`] over the frame
/// repeated `cfg.max_frames` times, with the frame-constant matrices
/// computed once.
pub fn train_lms_single_frame(
    cfg: &LmsConfig,
    frame: &TrainingFrame,
    plan: &PilotPlan,
    branch: usize,
) -> Result<LmsOutcome> {
    let n_rx = frame.body.nrows();
    let k = frame.body.ncols();
    let fq = pilot_dft_matrix(k, &plan.pilot_indices)?;
    let m = &frame.body * fq.transpose();
    let mut w = match cfg.init {
        WeightInit::FirstElement => {
            let mut e1 = CVec::zeros(n_rx);
            e1[0] = Complex64::new(1.0, 0.0);
            e1
        }
        WeightInit::Steer(theta) => steering_vector(theta, n_rx).unscale(n_rx as f64),
    };
    let mu = match cfg.step {
        StepSize::Fixed(mu) => mu,
        StepSize::Auto { scale } => {
            let mean_power =
                frame.body.iter().map(|z| z.norm_sqr()).sum::<f64>() / (n_rx * k) as f64;
            let q = plan.q().max(1);
            scale / ((n_rx * q * k) as f64 * mean_power.max(f64::MIN_POSITIVE))
        }
    };
    let mut trace = Vec::with_capacity(cfg.max_frames);
    for idx in 0..cfg.max_frames {
        let err = &frame.refs[branch] - received_pilots(&w, &m);
        let mse: f64 = err.iter().map(|z| z.norm_sqr()).sum();
        trace.push(mse);
        let mse0 = trace[0];
        if mse > 1e6 * mse0.max(f64::MIN_POSITIVE) {
            return Err(Error::LmsDiverged { mu, frame: idx });
        }
        if idx > 0 && cfg.tolerance > 0.0 {
            let change = (trace[idx - 1] - mse).abs();
            if change < cfg.tolerance * mse0 {
                break;
            }
        }
        let mut delta = &m * err.conjugate();
        delta.scale_mut(2.0 * mu);
        w += delta;
    }
    if w.norm() == 0.0 {
        return Err(Error::Config("training produced all-zero weights".into()));
    }
    Ok(LmsOutcome {
        weights: w,
        mse_trace: trace,
        mu,
    })
}

/// Complex beam response sampled on an angle grid.
#[derive(Debug, Clone)]
pub struct BeamPattern {
    pub angles: Vec<f64>,
    pub response: CVec,
}

impl BeamPattern {
    pub fn magnitude_db(&self, i: usize) -> f64 {
        20.0 * self.response[i].norm().max(1e-300).log10()
    }

    /// Response at the grid point nearest to `angle_deg`.
    pub fn nearest(&self, angle_deg: f64) -> Complex64 {
        let i = self
            .angles
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1 - angle_deg)
                    .abs()
                    .total_cmp(&(b.1 - angle_deg).abs())
            })
            .map(|(i, _)| i)
            .unwrap();
        self.response[i]
    }
}

/// Uniform angle grid over [-90, 90] degrees.
pub fn angle_grid(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| -90.0 + 180.0 * i as f64 / (n - 1) as f64)
        .collect()
}

/// N x n_R matrix whose n-th row is `a(theta_n)^T`; the beam response is
/// `b = D w^*`.
pub fn steering_matrix(angles: &[f64], n_rx: usize) -> CMat {
    CMat::from_fn(angles.len(), n_rx, |n, m| {
        cis(-std::f64::consts::PI * m as f64 * angles[n].to_radians().sin())
    })
}

/// Sample the beam response `b(theta) = w^H a(theta)` on the given angles.
pub fn beam_response(w: &CVec, angles: &[f64]) -> BeamPattern {
    let d = steering_matrix(angles, w.len());
    BeamPattern {
        angles: angles.to_vec(),
        response: d * w.conjugate(),
    }
}

/// Null centers and their common angular width.
#[derive(Debug, Clone)]
pub struct NullSpec {
    pub centers: Vec<f64>,
    pub width_deg: f64,
}

impl NullSpec {
    pub fn new(centers: Vec<f64>, width_deg: f64) -> Result<Self> {
        if width_deg <= 0.0 {
            return Err(Error::Config(format!(
                "null width must be positive, got {width_deg}"
            )));
        }
        Ok(Self { centers, width_deg })
    }
}

/// Weights applied to the zeroed rows of the dense-grid re-synthesis. The
/// imposed nulls are constraints, not suggestions: without the emphasis an
/// unweighted fit leaves the window nearly untouched, because the zeroed
/// samples are a small minority of the grid and the projection kernel of an
/// n_R-element pattern space is far wider than the null window. The sample
/// at each null center is pinned (effectively an equality constraint), the
/// rest of the window is pulled down to give the null its width.
const NULL_WINDOW_WEIGHT: f64 = 50.0;
const NULL_CENTER_WEIGHT: f64 = 1e6;

/// Re-synthesize weights from a beam response with zeros imposed around
/// each null center.
///
/// Sample the response on the grid, zero every sample within half a width
/// of a center, and recover the weights through the (pseudo-)inverse of the
/// steering matrix: exact when the grid has exactly n_R points; on a dense
/// grid a least-squares fit with the zeroed rows weighted so the prescribed
/// nulls dominate the trade-off.
pub fn deepen_nulls(w: &CVec, spec: &NullSpec, grid: &[f64]) -> Result<CVec> {
    if grid.len() < w.len() {
        return Err(Error::InvalidDimension {
            what: "deepening grid",
            expected: w.len(),
            got: grid.len(),
        });
    }
    let mut d = steering_matrix(grid, w.len());
    let mut b = &d * w.conjugate();
    let dense = grid.len() > w.len();
    let nearest = |c: f64| {
        grid.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - c).abs().total_cmp(&(b.1 - c).abs()))
            .map(|(i, _)| i)
            .unwrap()
    };
    let centers: Vec<usize> = spec.centers.iter().map(|&c| nearest(c)).collect();
    for (n, &theta) in grid.iter().enumerate() {
        let in_window = spec
            .centers
            .iter()
            .any(|&c| (theta - c).abs() <= spec.width_deg / 2.0);
        if in_window || centers.contains(&n) {
            b[n] = Complex64::default();
            if dense {
                let weight = if centers.contains(&n) {
                    NULL_CENTER_WEIGHT
                } else {
                    NULL_WINDOW_WEIGHT
                };
                d.row_mut(n).scale_mut(weight);
            }
        }
    }
    Ok(solve_or_pinv_vec(&d, &b)?.conjugate())
}

/// Null-steering weights for branch `l` (zero-based): unit response at
/// `doas[l]`, exact zeros at every other listed direction. Requires as
/// many directions as array elements.
pub fn null_steering_weights(doas: &[f64], branch: usize, n_rx: usize) -> Result<CVec> {
    if doas.len() != n_rx {
        return Err(Error::InvalidDimension {
            what: "null-steering DOA count",
            expected: n_rx,
            got: doas.len(),
        });
    }
    if branch >= doas.len() {
        return Err(Error::InvalidIndex(format!(
            "constraint index {branch} out of range"
        )));
    }
    // Columns of A are the steering vectors of every source; the weight
    // solves w^H A = c^T, i.e. A^H w = c.
    let a = CMat::from_fn(n_rx, doas.len(), |m, n| {
        steering_vector(doas[n], n_rx)[m]
    });
    let mut c = CVec::zeros(doas.len());
    c[branch] = Complex64::new(1.0, 0.0);
    solve_or_pinv_vec(&a.adjoint(), &c)
}

/// Rescale weights so the response at the strongest grid lobe is exactly
/// one (complex). The decoder's effective channel assumes a unity main
/// response.
pub fn normalize_to_main_lobe(w: &CVec, grid: &[f64]) -> CVec {
    let pattern = beam_response(w, grid);
    let peak = pattern
        .response
        .iter()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .copied()
        .unwrap_or_else(|| Complex64::new(1.0, 0.0));
    if peak.norm() == 0.0 {
        return w.clone();
    }
    w.scale_complex((1.0 / peak).conj())
}

trait ScaleComplex {
    fn scale_complex(&self, c: Complex64) -> Self;
}

impl ScaleComplex for CVec {
    fn scale_complex(&self, c: Complex64) -> Self {
        CVec::from_fn(self.len(), |i, _| self[i] * c)
    }
}

/// Which canceller produced the beamformer outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancellerKind {
    AdaptiveDeepening,
    NullSteering,
}

/// Effective 2x2 channel seen by the decoder at subcarrier `k`.
///
/// Row l pairs beamformer l with transmit antenna i. With unity main
/// responses the adaptive case keeps the residual cross-path gains
/// `rho = w1^H a(theta_2)` and `beta = w2^H a(theta_1)` and the delay
/// phase `omega = exp(-j 2 pi k tau / K)`:
///
/// `[[h11 + rho h21 w,  h12 + rho h22 w], [beta h11 + h21 w,  beta h12 + h22 w]]`
///
/// Null steering cancels the cross paths exactly, leaving the prompt path
/// on row 1 and the delayed path (with its phase ramp) on row 2.
pub fn effective_channel(
    kind: CancellerKind,
    w1: &CVec,
    w2: &CVec,
    gains: &PathGains,
    doas: [f64; 2],
    tau_samples: usize,
    k: usize,
    n_subcarriers: usize,
) -> [[Complex64; 2]; 2] {
    let omega = cis(
        -std::f64::consts::TAU * (k * tau_samples) as f64 / n_subcarriers as f64,
    );
    let h = &gains.h;
    match kind {
        CancellerKind::AdaptiveDeepening => {
            let a1 = steering_vector(doas[0], w1.len());
            let a2 = steering_vector(doas[1], w2.len());
            let rho = w1.dotc(&a2);
            let beta = w2.dotc(&a1);
            [
                [h[0][0] + rho * h[1][0] * omega, h[0][1] + rho * h[1][1] * omega],
                [beta * h[0][0] + h[1][0] * omega, beta * h[0][1] + h[1][1] * omega],
            ]
        }
        CancellerKind::NullSteering => [
            [h[0][0], h[0][1]],
            [h[1][0] * omega, h[1][1] * omega],
        ],
    }
}
