use stc_ofdm::sim::*;

#[test]
fn probe_axis_offset() {
    // emulate an axis shift by lowering the snr values handed to run_point
    let base = SimConfig::default();
    for off in [6.0, 8.0, 10.0] {
        eprintln!("--- offset {off} dB ---");
        for (name, cfg) in [
            ("conv sir5 ", SimConfig { variant: CancellerVariant::Conventional, sir_db: 5.0, ..base.clone() }),
            ("conv sir10", SimConfig { variant: CancellerVariant::Conventional, sir_db: 10.0, ..base.clone() }),
            ("conv sir15", SimConfig { variant: CancellerVariant::Conventional, sir_db: 15.0, ..base.clone() }),
            ("nullsteer ", SimConfig { variant: CancellerVariant::NullSteering, ..base.clone() }),
            ("adaptive  ", SimConfig { ..base.clone() }),
        ] {
            let mut c = cfg.clone();
            c.frames_per_point = 300;
            c.snr_db = vec![8.0 - off, 12.0 - off, 16.0 - off];
            let pts = Simulator::new(c).unwrap().run_curve().unwrap();
            let s: Vec<String> = pts.iter().map(|p| format!("{:.3}", p.fer)).collect();
            eprintln!("  {name}: {}", s.join("  "));
        }
    }
}
