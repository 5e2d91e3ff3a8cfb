use lossqng::counts_analyzer::{estimate_probabilities, CountSummary};
use lossqng::photon_statistics::{DetectionConfig, ModeEnsemble};
use lossqng::source_simulator::{
    contamination_for_g2, read_tags, simulate_multimode_tmsv, simulate_qd_pairs, simulate_single_photon_stream,
    write_tags, z_score, QdSourceConfig, SimRun, SinglePhotonSource, D_A1, D_B1,
};

/// Inclusion–exclusion over per-mode geometric no-click factors.
fn pair_oracle(mus: &[f64], eta: f64, t: f64) -> (f64, f64) {
    let q = |k: f64| mus.iter().map(|&m| (1.0 - m) / (1.0 - m * (1.0 - k))).product::<f64>();
    let q2 = |ka: f64, kb: f64| mus.iter().map(|&m| (1.0 - m) / (1.0 - m * (1.0 - ka) * (1.0 - kb))).product::<f64>();
    let k = eta * t;
    (1.0 - 2.0 * q(k) + q2(k, k), 1.0 - q(eta * t) - q(eta * (1.0 - t)) + q(eta))
}

#[test]
fn tmsv_counts_match_oracle() {
    let n = 2_000_000u64;
    for (mus, eta, seed) in [(vec![0.2], 0.7, 1u64), (vec![0.05, 0.1, 0.02, 0.08], 0.3, 2)] {
        let (ps, pe) = pair_oracle(&mus, eta, 0.5);
        let det = DetectionConfig::new(eta, 0.5).unwrap();
        let out = simulate_multimode_tmsv(&ModeEnsemble::new(mus).unwrap(), &det, &SimRun::new(n, seed)).unwrap();
        let c = &out.counts;
        for (count, p) in [(c.c_s, ps), (c.c_e_a, pe), (c.c_e_b, pe)] {
            let z = z_score(count, n as f64, p);
            assert!(z.abs() < 4.0, "z = {z}");
        }
        let (est_s, _) = estimate_probabilities(c).unwrap();
        assert!((est_s.value - c.c_s / n as f64).abs() < 1e-15);
    }
}

#[test]
fn single_photon_stream_matches_routing() {
    let n = 1_000_000u64;
    let (eta, t, e, c) = (0.8f64, 0.4f64, 0.7f64, 0.1f64);
    let src = SinglePhotonSource::new(e, c).unwrap();
    let out = simulate_single_photon_stream(&src, &DetectionConfig::new(eta, t).unwrap(), &SimRun::new(n, 4)).unwrap();
    let (k1, k2) = (eta * t, eta * (1.0 - t));
    let p1 = e * ((1.0 - c) * k1 + c * (1.0 - (1.0 - k1).powi(2)));
    let p2 = e * c * 2.0 * k1 * k2;
    let counts = &out.counts;
    assert!(z_score(counts.singles.as_ref().unwrap()[0], n as f64, p1).abs() < 4.0);
    assert!(z_score(counts.c_e_a, n as f64, p2).abs() < 4.0);
}

#[test]
fn qd_contamination_sets_g2() {
    let e = 0.5;
    let g2 = 0.05;
    let src = QdSourceConfig {
        emission_prob: e,
        blinking_on_fraction: 1.0,
        g2_contamination: contamination_for_g2(g2, e),
        coincidence_window_ps: 1e9,
        ..Default::default()
    };
    let n = 4_000_000u64;
    let out = simulate_qd_pairs(&src, &DetectionConfig::new(1.0, 0.5).unwrap(), &SimRun::new(n, 6).with_tags()).unwrap();
    let tags = out.tags.unwrap();
    // arm-a HBT: zero-delay coincidences over the product of singles per pulse
    let singles = out.counts.singles.as_ref().unwrap();
    let (s1, s2) = (singles[0] / n as f64, singles[1] / n as f64);
    let measured = out.counts.c_e_a / n as f64 / (s1 * s2);
    assert!((measured - g2).abs() < 0.01, "{measured}");
    assert!(tags.iter().any(|t| t.detector == D_A1) && tags.iter().any(|t| t.detector == D_B1));
}

#[test]
fn tags_round_trip_exactly() {
    let src = QdSourceConfig::default();
    let out = simulate_qd_pairs(&src, &DetectionConfig::new(0.4, 0.5).unwrap(), &SimRun::new(200_000, 8).with_tags()).unwrap();
    let tags = out.tags.unwrap();
    let mut buf = Vec::new();
    write_tags(&tags, &mut buf).unwrap();
    assert!(buf.starts_with(b"# lossqng.tags/1\n"));
    assert_eq!(read_tags(buf.as_slice()).unwrap(), tags);
    let err = read_tags("# x\n1 2\n".as_bytes()).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn counts_output_is_analyzer_ready() {
    let out = simulate_qd_pairs(&QdSourceConfig::default(), &DetectionConfig::new(0.2, 0.5).unwrap(), &SimRun::new(100_000, 1))
        .unwrap();
    let back = CountSummary::from_json(&out.counts.to_json().unwrap()).unwrap();
    assert_eq!(back, out.counts);
    assert!((back.generated() - 100_000.0 * 0.566 * 0.5).abs() < 1e-6);
}

#[test]
fn seeds_change_results() {
    let det = DetectionConfig::new(0.5, 0.5).unwrap();
    let ens = ModeEnsemble::new(vec![0.3]).unwrap();
    let a = simulate_multimode_tmsv(&ens, &det, &SimRun::new(100_000, 1)).unwrap();
    let b = simulate_multimode_tmsv(&ens, &det, &SimRun::new(100_000, 2)).unwrap();
    assert_ne!(a.counts, b.counts);
    assert_eq!(a, simulate_multimode_tmsv(&ens, &det, &SimRun::new(100_000, 1)).unwrap());
}
