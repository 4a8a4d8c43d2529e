//! Space-time trellis coding over QPSK.
//!
//! A code is a fully defined transition table: every (state, input symbol)
//! pair maps to a next state and one output symbol per transmit antenna.
//! Codes are usually built from quaternary generator sequences over the two
//! binary input streams, but an explicit table can be loaded from a config
//! file. Frames are terminated: the trailing inputs of every frame are
//! forced to drive the encoder back to state zero so per-frame Viterbi
//! decoding is well defined.

mod decode;

pub use decode::{ml_decode_bruteforce, viterbi_decode, DecoderInput};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{cis, CMat, CVec};

/// QPSK modulation order.
pub const MOD_ORDER: usize = 4;
/// Bits per trellis step.
pub const BITS_PER_SYMBOL: usize = 2;
/// Transmit antennas per mobile.
pub const N_TX: usize = 2;

/// Unit-energy QPSK point for a quaternary symbol index.
#[inline]
pub fn qpsk_point(idx: u8) -> Complex64 {
    cis(std::f64::consts::FRAC_PI_2 * idx as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct Transition {
    pub next: u16,
    /// Quaternary output symbol index per transmit antenna.
    pub outputs: [u8; N_TX],
}

/// Trellis code over QPSK with two transmit antennas.
#[derive(Debug, Clone)]
pub struct TrellisCode {
    n_states: usize,
    /// `transitions[state * MOD_ORDER + input]`
    transitions: Vec<Transition>,
    /// `tail_inputs[r][state]`: input that moves `state` onto a path
    /// reaching state 0 in exactly `r` more steps (r >= 1).
    tail_inputs: Vec<Vec<u8>>,
    tail_len: usize,
}

/// One encoded frame: the n_T x L matrix of constellation points.
#[derive(Debug, Clone)]
pub struct SpaceTimeCodeword {
    pub symbols: CMat,
}

impl SpaceTimeCodeword {
    pub fn frame_len(&self) -> usize {
        self.symbols.ncols()
    }

    /// Symbol stream sent from one antenna.
    pub fn antenna_row(&self, i: usize) -> CVec {
        self.symbols.row(i).transpose()
    }
}

impl TrellisCode {
    /// Build a code from quaternary generator sequences, one per binary
    /// input stream. `gen[j] = (to antenna 1, to antenna 2)` is the
    /// coefficient pair applied to that stream's input delayed by `j`
    /// steps; antenna outputs are the mod-4 sums over both streams.
    pub fn from_generators(gen1: &[[u8; 2]], gen2: &[[u8; 2]]) -> Result<Self> {
        if gen1.is_empty() || gen2.is_empty() {
            return Err(Error::InvalidTrellis("empty generator sequence".into()));
        }
        let nu1 = gen1.len() - 1;
        let nu2 = gen2.len() - 1;
        let n_states = 1usize << (nu1 + nu2);
        // State packs the delayed bits of stream 1 (low bits, most recent
        // first) then stream 2.
        let bit = |state: usize, pos: usize| ((state >> pos) & 1) as u8;
        let mut transitions = Vec::with_capacity(n_states * MOD_ORDER);
        for state in 0..n_states {
            for input in 0..MOD_ORDER as u8 {
                let c1 = input & 1;
                let c2 = (input >> 1) & 1;
                let mut out = [0u16; 2];
                for (j, g) in gen1.iter().enumerate() {
                    let c = if j == 0 { c1 } else { bit(state, j - 1) };
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += (g[i] * c) as u16;
                    }
                }
                for (j, g) in gen2.iter().enumerate() {
                    let c = if j == 0 { c2 } else { bit(state, nu1 + j - 1) };
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += (g[i] * c) as u16;
                    }
                }
                let s1 = state & ((1 << nu1) - 1);
                let s2 = (state >> nu1) & ((1 << nu2) - 1);
                let s1 = if nu1 > 0 {
                    ((s1 << 1) | c1 as usize) & ((1 << nu1) - 1)
                } else {
                    0
                };
                let s2 = if nu2 > 0 {
                    ((s2 << 1) | c2 as usize) & ((1 << nu2) - 1)
                } else {
                    0
                };
                transitions.push(Transition {
                    next: (s1 | (s2 << nu1)) as u16,
                    outputs: [(out[0] % 4) as u8, (out[1] % 4) as u8],
                });
            }
        }
        Self::from_table(n_states, transitions)
    }

    /// Build a code from an explicit transition table,
    /// `table[state * 4 + input]`.
    pub fn from_table(n_states: usize, table: Vec<Transition>) -> Result<Self> {
        if n_states == 0 || table.len() != n_states * MOD_ORDER {
            return Err(Error::InvalidTrellis(format!(
                "table has {} entries, expected {}",
                table.len(),
                n_states * MOD_ORDER
            )));
        }
        for t in &table {
            if (t.next as usize) >= n_states {
                return Err(Error::InvalidTrellis(format!(
                    "next state {} out of range",
                    t.next
                )));
            }
            if t.outputs.iter().any(|&o| o as usize >= MOD_ORDER) {
                return Err(Error::InvalidTrellis("output symbol out of range".into()));
            }
        }

        // Reachability from state 0 within n_states steps.
        let mut reached = vec![false; n_states];
        reached[0] = true;
        let mut frontier = vec![0usize];
        for _ in 0..n_states {
            let mut next = Vec::new();
            for &s in &frontier {
                for u in 0..MOD_ORDER {
                    let ns = table[s * MOD_ORDER + u].next as usize;
                    if !reached[ns] {
                        reached[ns] = true;
                        next.push(ns);
                    }
                }
            }
            frontier = next;
        }
        if !reached.iter().all(|&r| r) {
            return Err(Error::InvalidTrellis(
                "state graph is not fully connected from state 0".into(),
            ));
        }

        // Termination: smallest r such that every state reaches state 0 in
        // exactly r steps, with the chosen input recorded per step count.
        let mut feasible = vec![false; n_states];
        feasible[0] = true;
        let mut tail_inputs: Vec<Vec<u8>> = Vec::new();
        let mut tail_len = 0usize;
        while !feasible.iter().all(|&f| f) {
            tail_len += 1;
            if tail_len > 2 * n_states {
                return Err(Error::InvalidTrellis(
                    "no termination tail drives all states to zero".into(),
                ));
            }
            let mut inputs = vec![u8::MAX; n_states];
            let mut now = vec![false; n_states];
            for s in 0..n_states {
                for u in 0..MOD_ORDER as u8 {
                    if feasible[table[s * MOD_ORDER + u as usize].next as usize] {
                        inputs[s] = u;
                        now[s] = true;
                        break;
                    }
                }
            }
            // push order matches "steps remaining": tail_inputs[r-1]
            tail_inputs.push(inputs);
            feasible = now;
        }

        Ok(Self {
            n_states,
            transitions: table,
            tail_inputs,
            tail_len,
        })
    }

    /// The shipped default: a 16-state QPSK code with transmit diversity
    /// two, checked by [`verify_rank_criterion`] at construction.
    pub fn default_16_state() -> Self {
        let code = Self::from_generators(&[[0, 2], [2, 0], [0, 2]], &[[0, 1], [1, 2], [2, 0]])
            .expect("default generators are well formed");
        let report = verify_rank_criterion(&code, 10);
        assert_eq!(
            report.min_rank, 2,
            "default 16-state code must achieve transmit diversity 2"
        );
        code
    }

    /// The classic two-antenna delay-diversity QPSK code (4 states).
    pub fn delay_diversity_4_state() -> Self {
        Self::from_generators(&[[0, 2], [2, 0]], &[[0, 1], [1, 0]])
            .expect("delay diversity generators are well formed")
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn tail_len(&self) -> usize {
        self.tail_len
    }

    #[inline]
    pub fn transition(&self, state: usize, input: u8) -> Transition {
        self.transitions[state * MOD_ORDER + input as usize]
    }

    /// Input forced at `state` when `remaining` tail steps are left. The
    /// state must lie on a path that can still terminate, which every
    /// encoder state does.
    pub fn tail_input(&self, state: usize, remaining: usize) -> u8 {
        let u = self.tail_input_raw(state, remaining);
        debug_assert_ne!(u, u8::MAX, "state {state} cannot terminate in {remaining} steps");
        u
    }

    /// As [`tail_input`](Self::tail_input) but `u8::MAX` marks a state with
    /// no exact-length path to zero (pruned by the decoder).
    pub(crate) fn tail_input_raw(&self, state: usize, remaining: usize) -> u8 {
        debug_assert!(remaining >= 1 && remaining <= self.tail_len);
        self.tail_inputs[remaining - 1][state]
    }

    /// The frame's effective input bits: the caller's bits with the final
    /// `2 * tail_len` positions overwritten by the termination inputs. The
    /// returned sequence is what [`encode`](Self::encode) transmits and what
    /// a decoder reproduces.
    pub fn terminate_bits(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() % BITS_PER_SYMBOL != 0 {
            return Err(Error::FrameSize(format!(
                "bit count {} is not a multiple of {BITS_PER_SYMBOL}",
                bits.len()
            )));
        }
        let frame_len = bits.len() / BITS_PER_SYMBOL;
        if frame_len < self.tail_len {
            return Err(Error::FrameSize(format!(
                "frame of {frame_len} symbols cannot hold the {}-symbol tail",
                self.tail_len
            )));
        }
        let info_len = frame_len - self.tail_len;
        let mut out = bits.to_vec();
        let mut state = 0usize;
        for t in 0..info_len {
            let u = bits[2 * t] | (bits[2 * t + 1] << 1);
            state = self.transition(state, u).next as usize;
        }
        for t in info_len..frame_len {
            let u = self.tail_input(state, frame_len - t);
            out[2 * t] = u & 1;
            out[2 * t + 1] = (u >> 1) & 1;
            state = self.transition(state, u).next as usize;
        }
        debug_assert_eq!(state, 0);
        Ok(out)
    }

    /// Encode a frame. `bits` supplies `2 L` bits for an `L`-symbol frame;
    /// the trailing tail positions are replaced by the termination inputs
    /// (see [`terminate_bits`](Self::terminate_bits)).
    pub fn encode(&self, bits: &[u8]) -> Result<SpaceTimeCodeword> {
        let effective = self.terminate_bits(bits)?;
        let frame_len = effective.len() / BITS_PER_SYMBOL;
        let mut symbols = CMat::zeros(N_TX, frame_len);
        let mut state = 0usize;
        for t in 0..frame_len {
            let u = effective[2 * t] | (effective[2 * t + 1] << 1);
            let tr = self.transition(state, u);
            for i in 0..N_TX {
                symbols[(i, t)] = qpsk_point(tr.outputs[i]);
            }
            state = tr.next as usize;
        }
        Ok(SpaceTimeCodeword { symbols })
    }
}

/// Result of the transmit-diversity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankReport {
    /// Minimum rank of the codeword-difference matrix over all path pairs
    /// that diverge and remerge within `depth` steps.
    pub min_rank: usize,
    pub depth: usize,
}

/// Exhaustive rank-criterion check of all diverging/remerging path pairs up
/// to `depth` steps.
///
/// Difference columns are tracked exactly: QPSK differences are Gaussian
/// integers, so rank-1 spans are detected with integer cross products. A
/// report of 2 certifies full transmit diversity within the horizon.
pub fn verify_rank_criterion(code: &TrellisCode, depth: usize) -> RankReport {
    // Exact complex integer: QPSK points scaled by 1 are in {1, j, -1, -j}.
    fn point(idx: u8) -> (i32, i32) {
        match idx {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    }
    fn diff(a: u8, b: u8) -> (i32, i32) {
        let (ar, ai) = point(a);
        let (br, bi) = point(b);
        (ar - br, ai - bi)
    }
    type Col = [(i32, i32); 2];
    fn col_is_zero(c: &Col) -> bool {
        c[0] == (0, 0) && c[1] == (0, 0)
    }
    // Complex cross product c0 * d1 - c1 * d0 == 0 <=> columns parallel.
    fn parallel(c: &Col, d: &Col) -> bool {
        let mul = |a: (i32, i32), b: (i32, i32)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
        let x = mul(c[0], d[1]);
        let y = mul(c[1], d[0]);
        x == y
    }

    #[derive(Clone, Copy, PartialEq, Eq, Hash)]
    enum Span {
        Empty,
        Line(Col),
    }

    let n_states = code.n_states();
    let mut min_rank = 2usize;
    let mut visited = std::collections::HashSet::new();
    let mut frontier: Vec<(usize, usize, Span)> = Vec::new();

    // All divergence points: same state, distinct inputs.
    for s in 0..n_states {
        for ua in 0..MOD_ORDER as u8 {
            for ub in (ua + 1)..MOD_ORDER as u8 {
                let ta = code.transition(s, ua);
                let tb = code.transition(s, ub);
                let col: Col = [
                    diff(ta.outputs[0], tb.outputs[0]),
                    diff(ta.outputs[1], tb.outputs[1]),
                ];
                let span = if col_is_zero(&col) {
                    Span::Empty
                } else {
                    Span::Line(col)
                };
                let (na, nb) = (ta.next as usize, tb.next as usize);
                if na == nb {
                    // Remerged immediately (parallel transitions).
                    min_rank = min_rank.min(match span {
                        Span::Empty => 0,
                        Span::Line(_) => 1,
                    });
                } else if visited.insert((na, nb, span)) {
                    frontier.push((na, nb, span));
                }
            }
        }
    }

    for _ in 1..depth {
        let mut next = Vec::new();
        for &(sa, sb, span) in &frontier {
            for ua in 0..MOD_ORDER as u8 {
                for ub in 0..MOD_ORDER as u8 {
                    let ta = code.transition(sa, ua);
                    let tb = code.transition(sb, ub);
                    let col: Col = [
                        diff(ta.outputs[0], tb.outputs[0]),
                        diff(ta.outputs[1], tb.outputs[1]),
                    ];
                    let new_span = match span {
                        _ if col_is_zero(&col) => span,
                        Span::Empty => Span::Line(col),
                        Span::Line(base) => {
                            if parallel(&base, &col) {
                                span
                            } else {
                                continue; // rank reached 2; pair is safe
                            }
                        }
                    };
                    let (na, nb) = (ta.next as usize, tb.next as usize);
                    if na == nb {
                        min_rank = min_rank.min(match new_span {
                            Span::Empty => 0,
                            Span::Line(_) => 1,
                        });
                        if min_rank == 0 {
                            return RankReport { min_rank, depth };
                        }
                    } else if visited.insert((na, nb, new_span)) {
                        next.push((na, nb, new_span));
                    }
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    RankReport { min_rank, depth }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    pub(crate) fn random_bits(n: usize, rng: &mut ChaCha12Rng) -> Vec<u8> {
        (0..n).map(|_| rng.gen_range(0..2u8)).collect()
    }

    #[test]
    fn default_code_shape() {
        let code = TrellisCode::default_16_state();
        assert_eq!(code.n_states(), 16);
        assert_eq!(code.tail_len(), 2);
    }

    #[test]
    fn all_zero_input_stays_on_zero_path() {
        let code = TrellisCode::default_16_state();
        let bits = vec![0u8; 512];
        let cw = code.encode(&bits).unwrap();
        assert_eq!(cw.frame_len(), 256);
        for t in 0..256 {
            for i in 0..2 {
                assert!((cw.symbols[(i, t)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            }
        }
        // zero state needs a zero tail, so the effective bits are unchanged
        assert_eq!(code.terminate_bits(&bits).unwrap(), bits);
    }

    #[test]
    fn paper_frame_dimensions() {
        let code = TrellisCode::default_16_state();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let bits = random_bits(512, &mut rng);
        let cw = code.encode(&bits).unwrap();
        assert_eq!(cw.symbols.nrows(), 2);
        assert_eq!(cw.symbols.ncols(), 256);
        for z in cw.symbols.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12, "non-PSK symbol {z}");
        }
    }

    #[test]
    fn every_frame_terminates_in_state_zero() {
        let code = TrellisCode::default_16_state();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..50 {
            let bits = random_bits(64, &mut rng);
            let effective = code.terminate_bits(&bits).unwrap();
            let mut state = 0usize;
            for t in 0..effective.len() / 2 {
                let u = effective[2 * t] | (effective[2 * t + 1] << 1);
                state = code.transition(state, u).next as usize;
            }
            assert_eq!(state, 0);
            // info portion untouched
            assert_eq!(&effective[..64 - 4], &bits[..64 - 4]);
        }
    }

    #[test]
    fn odd_bit_count_rejected() {
        let code = TrellisCode::default_16_state();
        assert!(matches!(
            code.encode(&vec![0u8; 511]),
            Err(Error::FrameSize(_))
        ));
    }

    #[test]
    fn repetition_code_has_rank_one() {
        // Both antennas transmit the same symbol: single state, four
        // parallel transitions, rank-1 difference matrices.
        let table = (0..MOD_ORDER as u8)
            .map(|u| Transition {
                next: 0,
                outputs: [u, u],
            })
            .collect();
        let code = TrellisCode::from_table(1, table).unwrap();
        assert_eq!(verify_rank_criterion(&code, 10).min_rank, 1);
    }

    #[test]
    fn delay_diversity_has_rank_two() {
        let code = TrellisCode::delay_diversity_4_state();
        assert_eq!(code.n_states(), 4);
        assert_eq!(verify_rank_criterion(&code, 10).min_rank, 2);
    }

    #[test]
    fn default_code_has_rank_two() {
        let code = TrellisCode::default_16_state();
        assert_eq!(verify_rank_criterion(&code, 10).min_rank, 2);
    }

    #[test]
    fn disconnected_table_rejected() {
        // Two states, but state 1 is unreachable.
        let table = (0..8)
            .map(|_| Transition {
                next: 0,
                outputs: [0, 0],
            })
            .collect();
        assert!(matches!(
            TrellisCode::from_table(2, table),
            Err(Error::InvalidTrellis(_))
        ));
    }
}
