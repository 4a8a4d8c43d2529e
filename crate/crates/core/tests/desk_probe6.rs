use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use stc_ofdm::numerics::{cis, CVec};
use stc_ofdm::sttc::{viterbi_decode, DecoderInput, TrellisCode};

fn cgauss(rng: &mut ChaCha12Rng, p: f64) -> Complex64 {
    use rand_distr::StandardNormal;
    let s = (p / 2.0).sqrt();
    Complex64::new(s * rng.sample::<f64,_>(StandardNormal), s * rng.sample::<f64,_>(StandardNormal))
}

/// Conventional STC-OFDM with iid per-antenna-pair two-ray channels,
/// CCI with its own iid channels, frequency-domain simulation.
fn trial(code: &TrellisCode, n_rx: usize, snr_db: f64, sir_db: f64, tau: usize, k_total: usize,
         es_per_antenna: f64, trial: u64) -> bool {
    let mut rng = ChaCha12Rng::seed_from_u64(trial.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(7));
    let n_data = 256usize;
    let bits: Vec<u8> = (0..2*n_data).map(|_| rng.gen_range(0..2u8)).collect();
    let effective = code.terminate_bits(&bits).unwrap();
    let cw = code.encode(&bits).unwrap();
    let amp = es_per_antenna.sqrt();
    let g = 10f64.powf(-sir_db / 20.0) * amp;
    let noise_var = es_per_antenna * 2.0 * 10f64.powf(-snr_db / 10.0); // per subcarrier; Es = total tx energy
    // iid 2-ray taps per (rx, tx): desired and one interferer
    let mut h1 = vec![[Complex64::default(); 2]; n_rx];
    let mut h2 = vec![[Complex64::default(); 2]; n_rx];
    let mut g1 = vec![[Complex64::default(); 2]; n_rx];
    let mut g2 = vec![[Complex64::default(); 2]; n_rx];
    for j in 0..n_rx { for i in 0..2 {
        h1[j][i] = cgauss(&mut rng, 0.5); h2[j][i] = cgauss(&mut rng, 0.5);
        g1[j][i] = cgauss(&mut rng, 0.5); g2[j][i] = cgauss(&mut rng, 0.5);
    }}
    // interferer data: random QPSK
    let z: Vec<[Complex64; 2]> = (0..n_data).map(|_| {
        [cis(std::f64::consts::FRAC_PI_2 * rng.gen_range(0..4) as f64) * g,
         cis(std::f64::consts::FRAC_PI_2 * rng.gen_range(0..4) as f64) * g]
    }).collect();
    let mut received = Vec::new();
    let mut channel = Vec::new();
    for j in 0..n_rx {
        let mut r = CVec::zeros(n_data);
        let mut hrow = Vec::with_capacity(n_data);
        for (d, kk) in (0..n_data).zip((0..k_total).filter(|k| k % 9 != 0)) {
            let om = cis(-std::f64::consts::TAU * (kk * tau) as f64 / k_total as f64);
            let h = [ (h1[j][0] + h2[j][0]*om) * amp, (h1[j][1] + h2[j][1]*om) * amp ];
            let gch = [ g1[j][0] + g2[j][0]*om, g1[j][1] + g2[j][1]*om ];
            r[d] = h[0]*cw.symbols[(0,d)] + h[1]*cw.symbols[(1,d)]
                 + gch[0]*z[d][0] + gch[1]*z[d][1]
                 + cgauss(&mut rng, noise_var);
            hrow.push(h);
        }
        received.push(r);
        channel.push(hrow);
    }
    let input = DecoderInput { received, channel, scale: vec![1.0; n_rx] };
    viterbi_decode(code, &input).unwrap() != effective
}

#[test]
fn probe_iid_conventional() {
    let code = TrellisCode::default_16_state();
    for es in [0.5f64] {
        for sir in [5.0, 10.0, 15.0, f64::INFINITY] {
            let mut line = format!("es {es} sir {sir:>3}: ");
            for snr in [8.0, 10.0, 12.0, 14.0, 16.0] {
                let errs = (0..300).filter(|&t| trial(&code, 4, snr, sir, 15, 288, es, t)).count();
                line.push_str(&format!("{snr:.0}dB:{:.3}  ", errs as f64 / 300.0));
            }
            eprintln!("{line}");
        }
    }
}
