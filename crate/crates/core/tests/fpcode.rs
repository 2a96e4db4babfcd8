use caf_core::fpcode::{
    gv_message_len, gv_rate_bound, gv_search, is_prime, md_decode, min_distance, p_ary_entropy, random_generator,
    GeneratorMatrix, PrimeField, DEFAULT_DECODE_BUDGET,
};
use caf_core::seed;
use proptest::prelude::*;
use rand::Rng;

/// Codeword by direct matrix product, without the library's encoder.
fn product(g: &GeneratorMatrix, w: &[u64]) -> Vec<u64> {
    let p = g.p();
    (0..g.t())
        .map(|r| (0..g.message_len()).map(|c| g.entry(r, c) * w[c]).sum::<u64>() % p)
        .collect()
}

fn messages(p: u64, n: usize) -> impl Iterator<Item = Vec<u64>> {
    let total = p.pow(n as u32);
    (0..total).map(move |mut idx| {
        (0..n)
            .map(|_| {
                let d = idx % p;
                idx /= p;
                d
            })
            .collect()
    })
}

fn brute_min_distance(g: &GeneratorMatrix) -> usize {
    messages(g.p(), g.message_len())
        .filter(|m| m.iter().any(|&x| x != 0))
        .map(|m| product(g, &m).iter().filter(|&&s| s != 0).count())
        .min()
        .unwrap()
}

#[test]
fn encoding_is_linear() {
    let mut rng = seed::rng(1);
    for p in [2u64, 3, 5, 7, 13] {
        let f = PrimeField::new(p).unwrap();
        let g = random_generator(p, 9, 4, p).unwrap();
        for _ in 0..100 {
            let a: Vec<u64> = (0..4).map(|_| rng.random_range(0..p)).collect();
            let b: Vec<u64> = (0..4).map(|_| rng.random_range(0..p)).collect();
            let c = rng.random_range(0..p);
            let sum: Vec<u64> = a.iter().zip(&b).map(|(&x, &y)| f.add(x, y)).collect();
            let lhs = g.encode(&sum).unwrap();
            let ea = g.encode(&a).unwrap();
            let eb = g.encode(&b).unwrap();
            let rhs: Vec<u64> = ea.iter().zip(&eb).map(|(&x, &y)| f.add(x, y)).collect();
            assert_eq!(lhs, rhs);
            let scaled: Vec<u64> = a.iter().map(|&x| f.mul(c, x)).collect();
            let es: Vec<u64> = ea.iter().map(|&x| f.mul(c, x)).collect();
            assert_eq!(g.encode(&scaled).unwrap(), es);
            assert_eq!(ea, product(&g, &a));
        }
    }
}

#[test]
fn min_distance_matches_brute_force() {
    for (p, t, n) in [(2u64, 10, 4), (3, 7, 3), (5, 6, 2), (7, 5, 2)] {
        for s in 0..10 {
            let g = random_generator(p, t, n, s).unwrap();
            assert_eq!(min_distance(&g, DEFAULT_DECODE_BUDGET).unwrap(), brute_min_distance(&g));
        }
    }
    assert_eq!(min_distance(&GeneratorMatrix::hamming_7_4(), DEFAULT_DECODE_BUDGET).unwrap(), 3);
    assert_eq!(min_distance(&GeneratorMatrix::repetition(5, 6).unwrap(), DEFAULT_DECODE_BUDGET).unwrap(), 6);
}

#[test]
fn gv_targets_are_met() {
    for ((p, t, d), want) in [((2u64, 7, 3), 1), ((3, 8, 3), 3), ((5, 6, 3), 2)] {
        assert_eq!(gv_message_len(p, t, d).unwrap(), want);
        let r = gv_search(p, t, d, 10_000, 42).unwrap();
        let g = &r.generator;
        assert_eq!(g.message_len(), want);
        assert!(brute_min_distance(g) >= d);
        let rate = g.message_len() as f64 * (p as f64).log2() / t as f64;
        assert!(rate >= gv_rate_bound(p, t, d).unwrap() - 1e-12);
        let again = gv_search(p, t, d, 10_000, 42).unwrap();
        assert_eq!(again, r);
    }
}

#[test]
fn binary_decoding_corrects_every_single_error() {
    for g in [gv_search(2, 7, 3, 10_000, 7).unwrap().generator, GeneratorMatrix::hamming_7_4()] {
        let radius = (brute_min_distance(&g) - 1) / 2;
        assert!(radius >= 1);
        for m in messages(2, g.message_len()) {
            let c = g.encode(&m).unwrap();
            let d = md_decode(&g, &c, DEFAULT_DECODE_BUDGET).unwrap();
            assert_eq!((d.message.clone(), d.corrections, d.ambiguous), (m.clone(), 0, false));
            for pos in 0..g.t() {
                let mut r = c.clone();
                r[pos] ^= 1;
                let d = md_decode(&g, &r, DEFAULT_DECODE_BUDGET).unwrap();
                assert_eq!(d.message, m);
                assert_eq!(d.corrections, 1);
                assert!(!d.ambiguous);
            }
        }
    }
}

#[test]
fn nonbinary_decoding_within_radius() {
    let mut rng = seed::rng(9);
    for (p, t, d) in [(3u64, 8, 3), (5, 6, 3), (7, 12, 5)] {
        let g = gv_search(p, t, d, 10_000, 3).unwrap().generator;
        let radius = (d - 1) / 2;
        for _ in 0..300 {
            let m: Vec<u64> = (0..g.message_len()).map(|_| rng.random_range(0..p)).collect();
            let mut r = g.encode(&m).unwrap();
            let mut pos: Vec<usize> = (0..t).collect();
            let e = rng.random_range(0..=radius);
            for j in 0..e {
                let k = rng.random_range(j..t);
                pos.swap(j, k);
                r[pos[j]] = (r[pos[j]] + rng.random_range(1..p)) % p;
            }
            let dec = md_decode(&g, &r, DEFAULT_DECODE_BUDGET).unwrap();
            assert_eq!(dec.message, m);
            assert_eq!(dec.corrections, e);
        }
    }
}

#[test]
fn entropy_shape() {
    for p in [2u64, 3, 5, 11] {
        assert_eq!(p_ary_entropy(p, 0.0).unwrap(), 0.0);
        let peak = 1.0 - 1.0 / p as f64;
        assert!((p_ary_entropy(p, peak).unwrap() - 1.0).abs() < 1e-12);
        let n = 200;
        let xs: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let hs: Vec<f64> = xs.iter().map(|&x| p_ary_entropy(p, x).unwrap()).collect();
        for i in 1..n {
            assert!(hs[i] >= 0.5 * (hs[i - 1] + hs[i + 1]) - 1e-12, "concavity at {}", xs[i]);
        }
        for i in 0..n {
            if xs[i + 1] <= peak {
                assert!(hs[i + 1] > hs[i]);
            }
        }
    }
    assert!((p_ary_entropy(2, 0.5).unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn inverse_is_inverse(p in prop::sample::select(vec![2u64, 3, 5, 7, 101, 7919, 1_000_000_007]), a in 1u64..u64::MAX) {
        let f = PrimeField::new(p).unwrap();
        let a = f.reduce(a);
        prop_assume!(a != 0);
        prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
    }

    #[test]
    fn primality_matches_trial_division(n in 0u64..100_000) {
        let slow = n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
        prop_assert_eq!(is_prime(n), slow);
    }

    #[test]
    fn text_round_trip(p in prop::sample::select(vec![2u64, 3, 5, 7]), t in 1usize..10, n in 1usize..5, s in any::<u64>()) {
        prop_assume!(n <= t);
        let g = random_generator(p, t, n, s).unwrap();
        prop_assert_eq!(GeneratorMatrix::from_text(&g.to_text()).unwrap(), g);
    }
}
