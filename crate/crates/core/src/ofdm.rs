//! Pilot/data multiplexing and OFDM modulation.
//!
//! A frame carries `K` subcarriers; `Q` of them are pilots known to the
//! receiver, the rest carry space-time coded data. Modulation applies the
//! inverse DFT (with the 1/K factor so that modulate -> demodulate is the
//! identity) and prepends a cyclic prefix; demodulation strips the prefix
//! and applies the forward DFT.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numerics::{cis, CVec};

/// One time-domain OFDM frame: cyclic prefix followed by the K-sample body.
///
/// At the simulated 1 MHz bandwidth one sample spans 1 us, so the default
/// 288 + 40 layout is a 288 us frame with a 40 us guard.
#[derive(Debug, Clone)]
pub struct OfdmFrame {
    pub k: usize,
    pub cp_len: usize,
    pub samples: CVec,
}

impl OfdmFrame {
    /// First `cp_len` samples must replicate the frame tail.
    pub fn cyclic_prefix_holds(&self, tol: f64) -> bool {
        let body = self.samples.rows(self.cp_len, self.k);
        (0..self.cp_len)
            .all(|i| (self.samples[i] - body[self.k - self.cp_len + i]).norm() <= tol)
    }
}

/// Pilot placement and the per-antenna pilot symbol sequences.
///
/// Pilots are unit-energy QPSK drawn from a seeded generator; the two
/// antennas use distinct sequences with normalized cross-correlation below
/// 0.2 so that each beamformer reference discriminates its branch.
#[derive(Debug, Clone)]
pub struct PilotPlan {
    pub pilot_indices: Vec<usize>,
    pub data_indices: Vec<usize>,
    pub pilots: [CVec; 2],
    pub seed: u64,
}

const PILOT_XCORR_LIMIT: f64 = 0.2;

fn qpsk(rng: &mut ChaCha12Rng) -> Complex64 {
    cis(std::f64::consts::FRAC_PI_2 * rng.gen_range(0..4) as f64)
}

impl PilotPlan {
    /// Plan with explicit pilot indices (each `< k`, distinct).
    pub fn new(k: usize, pilot_indices: Vec<usize>, seed: u64) -> Result<Self> {
        let q = pilot_indices.len();
        let mut taken = vec![false; k];
        for &idx in &pilot_indices {
            if idx >= k {
                return Err(Error::InvalidIndex(format!(
                    "pilot index {idx} out of range for K={k}"
                )));
            }
            if taken[idx] {
                return Err(Error::InvalidIndex(format!("duplicate pilot index {idx}")));
            }
            taken[idx] = true;
        }
        let data_indices = (0..k).filter(|i| !taken[*i]).collect();

        // Deterministic search: bump the stream until the two sequences
        // decorrelate enough. Very short sequences (Q < 8) cannot meet the
        // bound and are taken as drawn; Q = 0 needs no pilots at all.
        let mut pilots = [CVec::zeros(0), CVec::zeros(0)];
        if q > 0 {
            for attempt in 0..1024u64 {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                rng.set_stream(attempt);
                let a = CVec::from_fn(q, |_, _| qpsk(&mut rng));
                let b = CVec::from_fn(q, |_, _| qpsk(&mut rng));
                let xc = a.dotc(&b).norm() / q as f64;
                if xc < PILOT_XCORR_LIMIT || q < 8 {
                    pilots = [a, b];
                    break;
                }
                if attempt == 1023 {
                    return Err(Error::Config(
                        "could not find decorrelated pilot sequences".into(),
                    ));
                }
            }
        }

        Ok(Self {
            pilot_indices,
            data_indices,
            pilots,
            seed,
        })
    }

    /// Default placement: every (K/Q)-th subcarrier, {0, 9, ..., 279} for
    /// the 288/32 layout.
    pub fn evenly_spaced(k: usize, q: usize, seed: u64) -> Result<Self> {
        if q > k {
            return Err(Error::Config(format!(
                "cannot spread {q} pilots over {k} carriers"
            )));
        }
        let stride = if q == 0 { 0 } else { k / q };
        Self::new(k, (0..q).map(|i| i * stride).collect(), seed)
    }

    pub fn q(&self) -> usize {
        self.pilot_indices.len()
    }

    pub fn k(&self) -> usize {
        self.pilot_indices.len() + self.data_indices.len()
    }
}

/// OFDM modulator/demodulator for a fixed subcarrier count and prefix
/// length. Transform plans are reused across frames.
pub struct Ofdm {
    pub k: usize,
    pub cp_len: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Ofdm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ofdm")
            .field("k", &self.k)
            .field("cp_len", &self.cp_len)
            .finish()
    }
}

impl Ofdm {
    pub fn new(k: usize, cp_len: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDimension {
                what: "subcarrier count",
                expected: 1,
                got: 0,
            });
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            k,
            cp_len,
            fft: planner.plan_fft_forward(k),
            ifft: planner.plan_fft_inverse(k),
        })
    }

    /// Place data on the plan's data subcarriers and the given antenna's
    /// pilots on the pilot subcarriers.
    pub fn multiplex(&self, data: &CVec, plan: &PilotPlan, antenna: usize) -> Result<CVec> {
        if data.len() != plan.data_indices.len() {
            return Err(Error::FrameSize(format!(
                "expected {} data symbols, got {}",
                plan.data_indices.len(),
                data.len()
            )));
        }
        if plan.k() != self.k {
            return Err(Error::InvalidIndex(format!(
                "pilot plan covers {} carriers, modulator has {}",
                plan.k(),
                self.k
            )));
        }
        let mut x = CVec::zeros(self.k);
        for (q, &idx) in plan.pilot_indices.iter().enumerate() {
            x[idx] = plan.pilots[antenna][q];
        }
        for (d, &idx) in plan.data_indices.iter().enumerate() {
            x[idx] = data[d];
        }
        Ok(x)
    }

    /// Split a frequency-domain frame back into (pilots, data).
    pub fn demultiplex(&self, x: &CVec, plan: &PilotPlan) -> Result<(CVec, CVec)> {
        if x.len() != self.k || plan.k() != self.k {
            return Err(Error::InvalidIndex(format!(
                "frame length {} does not match plan/modulator K={}",
                x.len(),
                self.k
            )));
        }
        let pilots = CVec::from_fn(plan.pilot_indices.len(), |q, _| x[plan.pilot_indices[q]]);
        let data = CVec::from_fn(plan.data_indices.len(), |d, _| x[plan.data_indices[d]]);
        Ok((pilots, data))
    }

    /// Inverse DFT with the 1/K factor, then cyclic prefix.
    pub fn modulate(&self, x: &CVec) -> Result<OfdmFrame> {
        if x.len() != self.k {
            return Err(Error::FrameSize(format!(
                "expected {} subcarriers, got {}",
                self.k,
                x.len()
            )));
        }
        let mut body: Vec<Complex64> = x.iter().copied().collect();
        self.ifft.process(&mut body);
        let scale = 1.0 / self.k as f64;
        for z in &mut body {
            *z *= scale;
        }
        let mut samples = CVec::zeros(self.k + self.cp_len);
        for i in 0..self.cp_len {
            samples[i] = body[self.k - self.cp_len + i];
        }
        for i in 0..self.k {
            samples[self.cp_len + i] = body[i];
        }
        Ok(OfdmFrame {
            k: self.k,
            cp_len: self.cp_len,
            samples,
        })
    }

    /// Strip the prefix and apply the forward DFT to the K-sample body.
    pub fn demodulate(&self, r: &[Complex64]) -> Result<CVec> {
        if r.len() < self.k + self.cp_len {
            return Err(Error::FrameSize(format!(
                "received sequence has {} samples, need {}",
                r.len(),
                self.k + self.cp_len
            )));
        }
        let mut body: Vec<Complex64> = r[self.cp_len..self.cp_len + self.k].to_vec();
        self.fft.process(&mut body);
        Ok(CVec::from_vec(body))
    }
}
