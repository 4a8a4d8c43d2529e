//! Two-ray Rayleigh fading array channel.
//!
//! Each mobile (desired or interfering) reaches the uniform linear array
//! over two paths with distinct arrival angles; path 1 is prompt, path 2 is
//! delayed by `tau` samples. Within one OFDM frame the fading gains are
//! constant; across frames they evolve with a Jakes Doppler spectrum.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{cis, CMat, CVec};

/// Arrival geometry and path layout for one experiment.
#[derive(Debug, Clone)]
pub struct DoaScenario {
    /// Arrival angles of the desired mobile's two paths, degrees from
    /// broadside.
    pub desired_doas: [f64; 2],
    /// Arrival angle pairs for each interfering mobile.
    pub interferer_doas: Vec<[f64; 2]>,
    /// Delay of the second path in samples (the first path is prompt).
    pub delay_samples: usize,
    /// Average power of each path, linear.
    pub path_powers: [f64; 2],
    pub n_rx: usize,
    pub n_tx: usize,
}

impl DoaScenario {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .desired_doas
            .iter()
            .chain(self.interferer_doas.iter().flatten());
        for &theta in all {
            if !(theta.abs() < 90.0) {
                return Err(Error::Config(format!(
                    "arrival angle {theta} deg outside (-90, 90)"
                )));
            }
        }
        if self.n_tx != 2 {
            return Err(Error::Config(format!(
                "two transmit antennas per mobile expected, got {}",
                self.n_tx
            )));
        }
        Ok(())
    }

    /// Angles of every impinging source: desired paths first, then the
    /// interferer paths in order.
    pub fn all_doas(&self) -> Vec<f64> {
        self.desired_doas
            .iter()
            .copied()
            .chain(self.interferer_doas.iter().flatten().copied())
            .collect()
    }
}

/// Array response `a(theta)` of a half-wavelength-spaced uniform linear
/// array: element m carries `exp(-j pi m sin(theta))`.
pub fn steering_vector(theta_deg: f64, n_rx: usize) -> CVec {
    let s = theta_deg.to_radians().sin();
    CVec::from_fn(n_rx, |m, _| cis(-std::f64::consts::PI * m as f64 * s))
}

/// Per-path complex gains of one mobile: `h[p][i]` is path `p` of transmit
/// antenna `i`, constant within a frame.
#[derive(Debug, Clone, Copy)]
pub struct PathGains {
    pub h: [[Complex64; 2]; 2],
}

impl PathGains {
    /// Independent Rayleigh draws with the configured per-path powers.
    pub fn random(rng: &mut ChaCha12Rng, path_powers: [f64; 2]) -> Self {
        let mut h = [[Complex64::default(); 2]; 2];
        for (p, row) in h.iter_mut().enumerate() {
            for g in row.iter_mut() {
                *g = complex_gaussian(rng, path_powers[p]);
            }
        }
        Self { h }
    }
}

pub(crate) fn complex_gaussian(rng: &mut ChaCha12Rng, power: f64) -> Complex64 {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Sum-of-sinusoids Rayleigh fading process with a Jakes Doppler spectrum.
///
/// `value_at(n)` is the gain of frame `n`; the ensemble autocorrelation over
/// realizations is `J0(2 pi f_d l dt)` at lag `l` and the average power is
/// one. A zero Doppler frequency collapses to a constant (static) gain.
#[derive(Debug, Clone)]
pub struct JakesFader {
    freqs: Vec<f64>,
    phases: Vec<f64>,
    dt: f64,
    scale: f64,
    power: f64,
}

pub const JAKES_OSCILLATORS: usize = 64;

impl JakesFader {
    pub fn new(doppler_hz: f64, frame_duration: f64, power: f64, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = JAKES_OSCILLATORS;
        let mut freqs = Vec::with_capacity(n);
        let mut phases = Vec::with_capacity(n);
        for _ in 0..n {
            let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
            freqs.push(doppler_hz * alpha.cos());
            phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
        }
        Self {
            freqs,
            phases,
            dt: frame_duration,
            scale: 1.0 / (n as f64).sqrt(),
            power,
        }
    }

    pub fn value_at(&self, frame: u64) -> Complex64 {
        let t = frame as f64 * self.dt;
        let mut acc = Complex64::default();
        for (f, p) in self.freqs.iter().zip(&self.phases) {
            acc += cis(std::f64::consts::TAU * f * t + p);
        }
        acc * self.scale * self.power.sqrt()
    }
}

/// Gain sequence over `n_frames` frames spaced `frame_duration` seconds.
pub fn jakes_process(
    doppler_hz: f64,
    n_frames: usize,
    frame_duration: f64,
    seed: u64,
) -> Vec<Complex64> {
    let fader = JakesFader::new(doppler_hz, frame_duration, 1.0, seed);
    (0..n_frames as u64).map(|n| fader.value_at(n)).collect()
}

/// Circular shift of a prefixed frame by `tau` samples. For `tau` within
/// the cyclic prefix this is exactly a path delay: after prefix removal it
/// becomes the per-subcarrier phase ramp `exp(-j 2 pi k tau / K)`.
pub fn delay_frame(frame: &CVec, tau: usize) -> CVec {
    let n = frame.len();
    CVec::from_fn(n, |i, _| frame[(i + n - tau % n) % n])
}

/// Time-domain noise variance for the given SNR: the average energy per
/// symbol divided by `10^(SNR/10)`.
pub fn snr_to_noise_var(snr_db: f64, symbol_energy: f64) -> f64 {
    if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        symbol_energy / 10f64.powf(snr_db / 10.0)
    }
}

/// Amplitude applied to interferer signals so the desired-to-interferer
/// per-symbol energy ratio is `10^(SIR/10)`. An infinite SIR disables the
/// interferers.
pub fn sir_to_cci_scale(sir_db: f64) -> f64 {
    if sir_db.is_infinite() && sir_db > 0.0 {
        0.0
    } else {
        10f64.powf(-sir_db / 20.0)
    }
}

/// One mobile's contribution to the array: its per-antenna frames and the
/// frame's path gains.
pub struct MobileSignal<'a> {
    pub frames: [&'a CVec; 2],
    pub gains: PathGains,
    pub doas: [f64; 2],
}

/// Received array matrix `V`: for every mobile, sum over paths of
/// (steering vector) x (gain-mixed, delayed frame row), plus white complex
/// Gaussian noise of per-element variance `noise_var`.
pub fn synthesize_received(
    desired: &MobileSignal,
    interferers: &[MobileSignal],
    scenario: &DoaScenario,
    cp_len: usize,
    noise_var: f64,
    rng: &mut ChaCha12Rng,
) -> Result<CMat> {
    scenario.validate()?;
    if scenario.delay_samples > cp_len {
        return Err(Error::Config(format!(
            "path delay {} exceeds the {}-sample cyclic prefix",
            scenario.delay_samples, cp_len
        )));
    }
    let n_samp = desired.frames[0].len();
    let mut v = CMat::zeros(scenario.n_rx, n_samp);
    for mobile in std::iter::once(desired).chain(interferers.iter()) {
        if mobile.frames.iter().any(|f| f.len() != n_samp) {
            return Err(Error::FrameSize(
                "all frames entering the array must have equal length".into(),
            ));
        }
        for p in 0..2 {
            let tau = if p == 0 { 0 } else { scenario.delay_samples };
            let mut row = CVec::zeros(n_samp);
            for i in 0..2 {
                let delayed = delay_frame(mobile.frames[i], tau);
                row += delayed.scale_complex(mobile.gains.h[p][i]);
            }
            let a = steering_vector(mobile.doas[p], scenario.n_rx);
            for r in 0..scenario.n_rx {
                for n in 0..n_samp {
                    v[(r, n)] += a[r] * row[n];
                }
            }
        }
    }
    if noise_var > 0.0 {
        for z in v.iter_mut() {
            *z += complex_gaussian(rng, noise_var);
        }
    }
    Ok(v)
}

trait ScaleComplex {
    fn scale_complex(self, c: Complex64) -> Self;
}

impl ScaleComplex for CVec {
    fn scale_complex(mut self, c: Complex64) -> Self {
        for z in self.iter_mut() {
            *z *= c;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bessel J0 by its power series; valid for the small arguments used
    /// here and independent of the fading implementation.
    pub fn bessel_j0(x: f64) -> f64 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..40 {
            term *= -q / (m * m) as f64;
            sum += term;
            if term.abs() < 1e-16 {
                break;
            }
        }
        sum
    }

    #[test]
    fn steering_broadside_and_magnitudes() {
        let a = steering_vector(0.0, 4);
        for z in a.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let a = steering_vector(10.0, 4);
        let want = cis(-std::f64::consts::PI * (10.0f64).to_radians().sin());
        assert!((a[1] - want).norm() < 1e-12);
        for z in a.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        // sin(90 deg) = 1 limit: element m = exp(-j pi m)
        let a = steering_vector(90.0, 4);
        for (m, z) in a.iter().enumerate() {
            assert!((z - cis(-std::f64::consts::PI * m as f64)).norm() < 1e-9);
        }
    }

    #[test]
    fn jakes_static_when_doppler_zero() {
        let seq = jakes_process(0.0, 50, 288e-6, 3);
        for z in &seq[1..] {
            assert!((z - seq[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn jakes_unit_average_power() {
        // Samples spaced well past the coherence time so the estimate
        // behaves like 1e5 independent draws.
        let mut acc = 0.0;
        let mut count = 0usize;
        for seed in 0..2000u64 {
            let fader = JakesFader::new(50.0, 288e-6, 1.0, seed);
            for n in 0..50 {
                acc += fader.value_at(n * 97).norm_sqr();
                count += 1;
            }
        }
        let mean = acc / count as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
    }

    #[test]
    fn jakes_autocorrelation_tracks_bessel() {
        // Ensemble-averaged autocorrelation against the series oracle.
        let fd = 50.0;
        let dt = 288e-6;
        let n_real = 150;
        let n_frames = 300u64;
        let max_lag = 34usize; // covers 0.5/f_d
        let mut corr = vec![Complex64::default(); max_lag + 1];
        let mut counts = vec![0usize; max_lag + 1];
        for seed in 0..n_real {
            let fader = JakesFader::new(fd, dt, 1.0, 1000 + seed);
            let seq: Vec<Complex64> = (0..n_frames).map(|n| fader.value_at(n)).collect();
            for lag in 0..=max_lag {
                for n in 0..(n_frames as usize - lag) {
                    corr[lag] += seq[n + lag] * seq[n].conj();
                    counts[lag] += 1;
                }
            }
        }
        let mut rms = 0.0;
        for lag in 0..=max_lag {
            let got = corr[lag].re / counts[lag] as f64;
            let want = bessel_j0(std::f64::consts::TAU * fd * lag as f64 * dt);
            rms += (got - want).powi(2);
        }
        rms = (rms / (max_lag + 1) as f64).sqrt();
        assert!(rms < 0.05, "autocorrelation RMS deviation {rms}");
    }

    #[test]
    fn transmit_antenna_gains_independent() {
        let a = JakesFader::new(50.0, 288e-6, 1.0, 11);
        let b = JakesFader::new(50.0, 288e-6, 1.0, 12);
        let n = 100_000u64;
        let mut acc = Complex64::default();
        for i in 0..n {
            acc += a.value_at(i) * b.value_at(i).conj();
        }
        let xc = (acc / n as f64).norm();
        assert!(xc < 0.05, "cross-correlation {xc}");
    }

    fn unit_frame(n: usize, seed: u64) -> CVec {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        CVec::from_fn(n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn test_scenario() -> DoaScenario {
        DoaScenario {
            desired_doas: [10.0, -20.0],
            interferer_doas: vec![],
            delay_samples: 15,
            path_powers: [0.5, 0.5],
            n_rx: 4,
            n_tx: 2,
        }
    }

    #[test]
    fn single_path_broadside_copies_frame() {
        let y1 = unit_frame(128, 1);
        let y2 = CVec::zeros(128);
        let mut scenario = test_scenario();
        scenario.desired_doas = [0.0, 30.0];
        scenario.delay_samples = 0;
        let gains = PathGains {
            h: [
                [Complex64::new(1.0, 0.0), Complex64::default()],
                [Complex64::default(), Complex64::default()],
            ],
        };
        let sig = MobileSignal {
            frames: [&y1, &y2],
            gains,
            doas: scenario.desired_doas,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let v = synthesize_received(&sig, &[], &scenario, 40, 0.0, &mut rng).unwrap();
        for r in 0..4 {
            for n in 0..128 {
                assert!((v[(r, n)] - y1[n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_gains_zero_output() {
        let y = unit_frame(64, 2);
        let scenario = test_scenario();
        let gains = PathGains {
            h: [[Complex64::default(); 2]; 2],
        };
        let sig = MobileSignal {
            frames: [&y, &y],
            gains,
            doas: scenario.desired_doas,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let v = synthesize_received(&sig, &[], &scenario, 40, 0.0, &mut rng).unwrap();
        assert!(v.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn superposition_in_the_input_frames() {
        let scenario = test_scenario();
        let gains = PathGains::random(&mut ChaCha12Rng::seed_from_u64(5), [0.5, 0.5]);
        let (a1, a2) = (unit_frame(96, 3), unit_frame(96, 4));
        let (b1, b2) = (unit_frame(96, 5), unit_frame(96, 6));
        let sum1 = CVec::from_fn(96, |i, _| a1[i] + b1[i]);
        let sum2 = CVec::from_fn(96, |i, _| a2[i] + b2[i]);

        let mk = |f1: &CVec, f2: &CVec| -> CMat {
            let sig = MobileSignal {
                frames: [&f1.clone(), &f2.clone()],
                gains,
                doas: scenario.desired_doas,
            };
            let mut rng = ChaCha12Rng::seed_from_u64(0);
            synthesize_received(&sig, &[], &scenario, 40, 0.0, &mut rng).unwrap()
        };
        let direct = mk(&sum1, &sum2);
        let parts = mk(&a1, &a2) + mk(&b1, &b2);
        assert!((direct - parts).norm() < 1e-10);
    }

    #[test]
    fn delay_beyond_prefix_rejected() {
        let y = unit_frame(64, 2);
        let mut scenario = test_scenario();
        scenario.delay_samples = 41;
        let sig = MobileSignal {
            frames: [&y, &y],
            gains: PathGains {
                h: [[Complex64::default(); 2]; 2],
            },
            doas: scenario.desired_doas,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(matches!(
            synthesize_received(&sig, &[], &scenario, 40, 0.0, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noise_covariance_near_identity() {
        let scenario = test_scenario();
        let zeros = CVec::zeros(64);
        let sig = MobileSignal {
            frames: [&zeros, &zeros],
            gains: PathGains {
                h: [[Complex64::default(); 2]; 2],
            },
            doas: scenario.desired_doas,
        };
        let var = 0.7;
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let mut cov = CMat::zeros(4, 4);
        let mut count = 0usize;
        for _ in 0..160 {
            let v = synthesize_received(&sig, &[], &scenario, 40, var, &mut rng).unwrap();
            for n in 0..64 {
                let col = v.column(n);
                for r in 0..4 {
                    for c in 0..4 {
                        cov[(r, c)] += col[r] * col[c].conj();
                    }
                }
                count += 1;
            }
        }
        cov /= Complex64::new(count as f64, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                if r == c {
                    assert!((cov[(r, c)].re - var).abs() < 0.05 * var);
                } else {
                    assert!(cov[(r, c)].norm() < 0.05 * var, "off-diagonal {}", cov[(r, c)]);
                }
            }
        }
    }

    #[test]
    fn snr_and_sir_conversions() {
        assert!((snr_to_noise_var(0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((snr_to_noise_var(10.0, 2.0) - 0.2).abs() < 1e-12);
        assert_eq!(sir_to_cci_scale(f64::INFINITY), 0.0);
        let s = sir_to_cci_scale(10.0);
        assert!((s * s - 0.1).abs() < 1e-12);
    }
}
