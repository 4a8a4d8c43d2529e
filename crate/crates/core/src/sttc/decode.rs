//! Maximum-likelihood decoding of space-time trellis codewords.
//!
//! The branch metric follows the post-beamformer decoder: for every
//! observation port l (a beamformer output, or a raw antenna for the
//! conventional receiver) the squared residual against the effective
//! channel is scaled by that port's real weight-energy factor and summed,
//!
//! `sum_l scale_l * | r_l[k] - h_l1[k] x1 - h_l2[k] x2 |^2`.
//!
//! A brute-force enumerator over all valid terminated codewords serves as
//! the exact-ML oracle for short frames.

use num_complex::Complex64;

use super::{qpsk_point, TrellisCode, BITS_PER_SYMBOL, MOD_ORDER, N_TX};
use crate::error::{Error, Result};
use crate::numerics::CVec;

/// Per-port observations for one frame of `n` trellis steps.
#[derive(Debug, Clone)]
pub struct DecoderInput {
    /// Received frequency-domain symbol per port per step.
    pub received: Vec<CVec>,
    /// Effective channel row per port per step: `[h_{l,1}, h_{l,2}]`.
    pub channel: Vec<Vec<[Complex64; 2]>>,
    /// Real metric scale per port (`w^H w` after beamforming, 1 otherwise).
    pub scale: Vec<f64>,
}

impl DecoderInput {
    fn validate(&self) -> Result<usize> {
        let ports = self.received.len();
        if ports == 0 || self.channel.len() != ports || self.scale.len() != ports {
            return Err(Error::InvalidDimension {
                what: "decoder ports",
                expected: ports.max(1),
                got: self.channel.len(),
            });
        }
        let n = self.received[0].len();
        for r in &self.received {
            if r.len() != n {
                return Err(Error::FrameSize(
                    "ports disagree on frame length".into(),
                ));
            }
        }
        for h in &self.channel {
            if h.len() != n {
                return Err(Error::IncompleteCsi(format!(
                    "channel known for {} of {} data subcarriers",
                    h.len(),
                    n
                )));
            }
        }
        Ok(n)
    }

    #[inline]
    fn branch_metric(&self, step: usize, outputs: [u8; N_TX]) -> f64 {
        let x0 = qpsk_point(outputs[0]);
        let x1 = qpsk_point(outputs[1]);
        let mut acc = 0.0;
        for (l, r) in self.received.iter().enumerate() {
            let h = &self.channel[l][step];
            let e = r[step] - h[0] * x0 - h[1] * x1;
            acc += self.scale[l] * e.norm_sqr();
        }
        acc
    }
}

/// Viterbi decoding of one terminated frame. Returns the decoded input
/// bits, two per trellis step, tail included. Path-metric ties resolve
/// toward the lower-numbered predecessor state.
pub fn viterbi_decode(code: &TrellisCode, input: &DecoderInput) -> Result<Vec<u8>> {
    let n = input.validate()?;
    if n < code.tail_len() {
        return Err(Error::FrameSize(format!(
            "frame of {n} steps cannot carry the {}-step tail",
            code.tail_len()
        )));
    }
    let n_states = code.n_states();
    let mut metric = vec![f64::INFINITY; n_states];
    metric[0] = 0.0;
    // (predecessor state, input) per step per state
    let mut decisions: Vec<Vec<(u16, u8)>> = Vec::with_capacity(n);

    for step in 0..n {
        let tail_steps_left = n - step;
        let constrained = tail_steps_left <= code.tail_len();
        let mut next_metric = vec![f64::INFINITY; n_states];
        let mut chosen = vec![(u16::MAX, 0u8); n_states];
        for s in 0..n_states {
            if !metric[s].is_finite() {
                continue;
            }
            let tail_choice;
            let inputs: &[u8] = if constrained {
                tail_choice = code.tail_input_raw(s, tail_steps_left);
                if tail_choice == u8::MAX {
                    continue; // no exact-length path back to state 0
                }
                std::slice::from_ref(&tail_choice)
            } else {
                &[0, 1, 2, 3]
            };
            for &u in inputs {
                let tr = code.transition(s, u);
                let cand = metric[s] + input.branch_metric(step, tr.outputs);
                let slot = tr.next as usize;
                if cand < next_metric[slot] {
                    next_metric[slot] = cand;
                    chosen[slot] = (s as u16, u);
                }
            }
        }
        decisions.push(chosen);
        metric = next_metric;
    }

    if !metric[0].is_finite() {
        return Err(Error::FrameSize(
            "no terminated path survives the trellis".into(),
        ));
    }

    let mut bits = vec![0u8; n * BITS_PER_SYMBOL];
    let mut state = 0usize;
    for step in (0..n).rev() {
        let (prev, u) = decisions[step][state];
        bits[2 * step] = u & 1;
        bits[2 * step + 1] = (u >> 1) & 1;
        state = prev as usize;
    }
    debug_assert_eq!(state, 0);
    Ok(bits)
}

/// Maximum frame length accepted by the brute-force oracle.
pub const BRUTE_FORCE_MAX_LEN: usize = 8;

/// Exact maximum-likelihood decoding by enumerating every valid terminated
/// codeword. Only for short frames; the candidate count is
/// `4^(n - tail_len)`.
pub fn ml_decode_bruteforce(code: &TrellisCode, input: &DecoderInput) -> Result<Vec<u8>> {
    let n = input.validate()?;
    if n > BRUTE_FORCE_MAX_LEN {
        return Err(Error::EnumerationRefused(
            (MOD_ORDER as u128).pow(n as u32),
        ));
    }
    if n < code.tail_len() {
        return Err(Error::FrameSize(format!(
            "frame of {n} steps cannot carry the {}-step tail",
            code.tail_len()
        )));
    }
    let info_len = n - code.tail_len();
    let candidates = (MOD_ORDER as u64).pow(info_len as u32);

    let mut best = (f64::INFINITY, 0u64);
    for cand in 0..candidates {
        let mut state = 0usize;
        let mut m = 0.0;
        for step in 0..n {
            let u = if step < info_len {
                ((cand >> (2 * step)) & 3) as u8
            } else {
                code.tail_input(state, n - step)
            };
            let tr = code.transition(state, u);
            m += input.branch_metric(step, tr.outputs);
            state = tr.next as usize;
            if m >= best.0 {
                break;
            }
        }
        if state == 0 && m < best.0 {
            best = (m, cand);
        }
    }

    // Expand the winning candidate back into the transmitted bit sequence.
    let mut bits = vec![0u8; n * BITS_PER_SYMBOL];
    let mut state = 0usize;
    for step in 0..n {
        let u = if step < info_len {
            ((best.1 >> (2 * step)) & 3) as u8
        } else {
            code.tail_input(state, n - step)
        };
        bits[2 * step] = u & 1;
        bits[2 * step + 1] = (u >> 1) & 1;
        state = code.transition(state, u).next as usize;
    }
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// Ideal single-port observation of a codeword: identity channel on
    /// antenna sums, i.e. r = x1 + 0.6 x2 with distinct coefficients so the
    /// two antennas stay distinguishable, plus optional noise.
    fn observe(
        code: &TrellisCode,
        bits: &[u8],
        noise: f64,
        rng: &mut ChaCha12Rng,
    ) -> (Vec<u8>, DecoderInput) {
        let effective = code.terminate_bits(bits).unwrap();
        let cw = code.encode(bits).unwrap();
        let n = cw.frame_len();
        let h = [
            Complex64::new(1.0, 0.2),
            Complex64::new(0.3, -0.6),
        ];
        let mut r = CVec::zeros(n);
        for t in 0..n {
            r[t] = h[0] * cw.symbols[(0, t)] + h[1] * cw.symbols[(1, t)];
            if noise > 0.0 {
                r[t] += Complex64::new(
                    noise * rng.gen_range(-1.0..1.0),
                    noise * rng.gen_range(-1.0..1.0),
                );
            }
        }
        let input = DecoderInput {
            received: vec![r],
            channel: vec![vec![h; n]],
            scale: vec![1.0],
        };
        (effective, input)
    }

    /// Two-port observation with independent random channels per step.
    fn observe_two_ports(
        code: &TrellisCode,
        bits: &[u8],
        noise: f64,
        rng: &mut ChaCha12Rng,
    ) -> (Vec<u8>, DecoderInput) {
        let effective = code.terminate_bits(bits).unwrap();
        let cw = code.encode(bits).unwrap();
        let n = cw.frame_len();
        let mut received = Vec::new();
        let mut channel = Vec::new();
        for _ in 0..2 {
            let h: Vec<[Complex64; 2]> = (0..n)
                .map(|_| {
                    [
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    ]
                })
                .collect();
            let mut r = CVec::zeros(n);
            for t in 0..n {
                r[t] = h[t][0] * cw.symbols[(0, t)]
                    + h[t][1] * cw.symbols[(1, t)]
                    + Complex64::new(
                        noise * rng.gen_range(-1.0..1.0),
                        noise * rng.gen_range(-1.0..1.0),
                    );
            }
            received.push(r);
            channel.push(h);
        }
        (
            effective,
            DecoderInput {
                received,
                channel,
                scale: vec![1.0, 1.0],
            },
        )
    }

    #[test]
    fn noiseless_roundtrip() {
        let code = TrellisCode::default_16_state();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..20 {
            let bits = super::super::tests::random_bits(512, &mut rng);
            let (effective, input) = observe(&code, &bits, 0.0, &mut rng);
            let decoded = viterbi_decode(&code, &input).unwrap();
            assert_eq!(decoded, effective);
        }
    }

    #[test]
    fn metric_scale_invariance() {
        // A common positive scale on every port leaves decisions unchanged.
        let code = TrellisCode::default_16_state();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let bits = super::super::tests::random_bits(64, &mut rng);
        let (_, mut input) = observe_two_ports(&code, &bits, 0.8, &mut rng);
        let base = viterbi_decode(&code, &input).unwrap();
        for s in input.scale.iter_mut() {
            *s *= 3.7;
        }
        assert_eq!(viterbi_decode(&code, &input).unwrap(), base);
    }

    #[test]
    fn viterbi_matches_bruteforce() {
        let code = TrellisCode::default_16_state();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for trial in 0..200 {
            let bits = super::super::tests::random_bits(12, &mut rng); // L = 6
            let (_, input) = observe_two_ports(&code, &bits, 1.5, &mut rng);
            let v = viterbi_decode(&code, &input).unwrap();
            let b = ml_decode_bruteforce(&code, &input).unwrap();
            assert_eq!(v, b, "disagreement on trial {trial}");
        }
    }

    #[test]
    fn bruteforce_refuses_long_frames() {
        let code = TrellisCode::default_16_state();
        let n = 9;
        let input = DecoderInput {
            received: vec![CVec::zeros(n)],
            channel: vec![vec![[Complex64::default(); 2]; n]],
            scale: vec![1.0],
        };
        assert!(matches!(
            ml_decode_bruteforce(&code, &input),
            Err(Error::EnumerationRefused(_))
        ));
    }

    #[test]
    fn bruteforce_single_step_code() {
        // With a tail-free code (one state), L = 1 enumerates the four
        // constellation candidates directly.
        let table = (0..MOD_ORDER as u8)
            .map(|u| super::super::Transition {
                next: 0,
                outputs: [u, (u + 1) % 4],
            })
            .collect();
        let code = TrellisCode::from_table(1, table).unwrap();
        let h = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let want = 2u8;
        let r = qpsk_point(want) + h[1] * qpsk_point((want + 1) % 4);
        let input = DecoderInput {
            received: vec![CVec::from_vec(vec![r])],
            channel: vec![vec![h]],
            scale: vec![1.0],
        };
        let bits = ml_decode_bruteforce(&code, &input).unwrap();
        assert_eq!(bits, vec![want & 1, (want >> 1) & 1]);
    }

    #[test]
    fn missing_csi_rejected() {
        let code = TrellisCode::default_16_state();
        let input = DecoderInput {
            received: vec![CVec::zeros(6)],
            channel: vec![vec![[Complex64::default(); 2]; 5]],
            scale: vec![1.0],
        };
        assert!(matches!(
            viterbi_decode(&code, &input),
            Err(Error::IncompleteCsi(_))
        ));
    }
}
