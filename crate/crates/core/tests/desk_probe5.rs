use stc_ofdm::sim::*;

#[test]
fn probe_strong_cci() {
    let base = SimConfig::default();
    for sir in [-20.0, -10.0, 0.0, 5.0] {
        let mut c = SimConfig { variant: CancellerVariant::Conventional, sir_db: sir, ..base.clone() };
        c.frames_per_point = 100;
        c.snr_db = vec![12.0];
        let p = &Simulator::new(c).unwrap().run_curve().unwrap()[0];
        eprintln!("conv sir {sir}: fer {:.2}", p.fer);
    }
    // adaptive under strong CCI should survive via nulling
    for sir in [-10.0, 0.0] {
        let mut c = SimConfig { sir_db: sir, ..base.clone() };
        c.frames_per_point = 100;
        c.snr_db = vec![12.0];
        let p = &Simulator::new(c).unwrap().run_curve().unwrap()[0];
        eprintln!("adaptive sir {sir}: fer {:.2}", p.fer);
    }
}
