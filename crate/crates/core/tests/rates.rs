use caf_core::channel::db_to_linear;
use caf_core::rates::{
    best_coefficient_vector, dof_slope, lattice_rate_matrix, lattice_rate_single, lattice_sum_rate,
    loss_term, loss_tradeoff_check, mimo_upper_bound, normalized_rate_sweep, time_sharing_rate,
    top_coefficient_vectors, CoefficientMatrix, SearchConfig,
};
use caf_core::{seed, ChannelMatrix};
use num::{BigInt, BigRational, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::Rng;

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn qi(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn exact_loss(h: &[f64], p: f64, a: &[i64]) -> BigRational {
    let hn: BigRational = h.iter().map(|&x| q(x) * q(x)).fold(BigRational::zero(), |s, v| s + v);
    let an: BigRational = a.iter().map(|&x| qi(x * x)).fold(BigRational::zero(), |s, v| s + v);
    let dot: BigRational = h.iter().zip(a).map(|(&x, &y)| q(x) * qi(y)).fold(BigRational::zero(), |s, v| s + v);
    an.clone() + q(p) * (hn * an - dot.clone() * dot)
}

#[test]
fn rate_matches_exact_rational_evaluation() {
    let (h, p, a) = ([1.0, 0.7], 100.0, [1i64, 1]);
    let loss = exact_loss(&h, p, &a).to_f64().unwrap();
    let hn = (q(1.0) + q(0.7) * q(0.7)).to_f64().unwrap();
    let expect = 0.5 * (1.0 + p * hn).log2() - 0.5 * loss.log2();
    let got = lattice_rate_single(&h, p, &a).unwrap();
    assert!((got - expect.max(0.0)).abs() < 1e-12, "{got} vs {expect}");
    assert!((loss_term(&h, p, &a).unwrap() - loss).abs() <= 1e-12 * loss);
}

#[test]
fn loss_matches_rationals_on_random_inputs() {
    let mut rng = seed::rng(5);
    for _ in 0..200 {
        let k = rng.random_range(1..=4);
        let h: Vec<f64> = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut a: Vec<i64> = (0..k).map(|_| rng.random_range(-6..=6)).collect();
        if a.iter().all(|&v| v == 0) {
            a[0] = 1;
        }
        let p = 10f64.powf(rng.random_range(-1.0..5.0));
        let exact = exact_loss(&h, p, &a).to_f64().unwrap();
        let got = loss_term(&h, p, &a).unwrap();
        assert!((got - exact).abs() <= 1e-12 * exact, "{got} vs {exact}");
    }
}

/// Plain enumeration of the whole box, from the largest coordinates down.
fn brute_force_best(h: &[f64], p: f64) -> (Vec<i64>, f64) {
    let hn: f64 = h.iter().map(|x| x * x).sum();
    let bound = ((hn * p).ceil() as i64).max(1);
    let r = (bound as f64).sqrt().floor() as i64 + 1;
    let k = h.len();
    let mut best: Option<(f64, i64, Vec<i64>)> = None;
    let mut a = vec![r; k];
    loop {
        let norm: i64 = a.iter().map(|v| v * v).sum();
        let first = a.iter().find(|&&v| v != 0).copied().unwrap_or(0);
        if norm >= 1 && norm <= bound && first > 0 {
            let rate = lattice_rate_single(h, p, &a).unwrap();
            let better = match &best {
                None => true,
                Some((br, bn, ba)) => rate > *br || (rate == *br && (norm < *bn || (norm == *bn && a < *ba))),
            };
            if better {
                best = Some((rate, norm, a.clone()));
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                let (rate, _, a) = best.unwrap();
                return (a, rate);
            }
            i -= 1;
            if a[i] > -r {
                a[i] -= 1;
                break;
            }
            a[i] = r;
        }
    }
}

#[test]
fn best_vector_matches_brute_force() {
    let cfg = SearchConfig::default();
    let cases: Vec<(Vec<f64>, f64)> = vec![
        (vec![1.0, 0.618034], 1e4),
        (vec![1.0, 1.0], 10.0),
        (vec![1.0, 0.5], 1e3),
        (vec![0.3, -1.7], 300.0),
        (vec![1.0, 0.41, 0.73], 200.0),
        (vec![-0.8, 1.3, 0.2], 50.0),
    ];
    for (h, p) in cases {
        let (a, rate) = best_coefficient_vector(&h, p, &cfg).unwrap();
        let (ba, brate) = brute_force_best(&h, p);
        assert_eq!(a.0, ba, "h={h:?} P={p}");
        assert_eq!(rate, brate);
    }
}

#[test]
fn top_list_matches_brute_force_ranking() {
    let h = [1.0, 0.37];
    let p = 500.0;
    let top = top_coefficient_vectors(&h, p, 16, &SearchConfig::default()).unwrap();
    let bound = ((h[0] * h[0] + h[1] * h[1]) * p).ceil() as i64;
    let r = (bound as f64).sqrt() as i64 + 1;
    let mut all = Vec::new();
    for a0 in -r..=r {
        for a1 in -r..=r {
            let n = a0 * a0 + a1 * a1;
            if n >= 1 && n <= bound && (a0 > 0 || (a0 == 0 && a1 > 0)) {
                all.push((loss_term(&h, p, &[a0, a1]).unwrap(), n, vec![a0, a1]));
            }
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let expect: Vec<Vec<i64>> = all.into_iter().take(16).map(|x| x.2).collect();
    let got: Vec<Vec<i64>> = top.into_iter().map(|c| c.a.0).collect();
    assert_eq!(got, expect);
}

#[test]
fn sum_rate_dominates_random_integer_matrices() {
    let mut rng = seed::rng(77);
    let cfg = SearchConfig::default();
    for trial in 0..5 {
        let h = ChannelMatrix::new(2, (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let best = lattice_sum_rate(&h, 100.0, &cfg).unwrap();
        assert!(best.a.is_full_rank());
        let mut tested = 0;
        while tested < 100 {
            let rows: Vec<Vec<i64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(-5..=5)).collect()).collect();
            if rows.iter().any(|r| r.iter().all(|&v| v == 0)) {
                continue;
            }
            let a = CoefficientMatrix::from_rows(&rows).unwrap();
            if !a.is_full_rank() {
                continue;
            }
            tested += 1;
            let r = lattice_rate_matrix(&h, 100.0, &a).unwrap();
            assert!(best.rate_bits >= r - 1e-12, "trial {trial}: {} < {r} for {rows:?}", best.rate_bits);
        }
    }
}

#[test]
fn integer_channel_is_near_full_dof() {
    let h = ChannelMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
    let p = 1e6;
    let s = lattice_sum_rate(&h, p, &SearchConfig::default()).unwrap();
    assert!((s.rate_bits - p.log2()).abs() <= 3.0, "{}", s.rate_bits);
    let db: Vec<f64> = (0..5).map(|i| 40.0 + 10.0 * i as f64).collect();
    let rates: Vec<f64> = db
        .iter()
        .map(|&d| lattice_sum_rate(&h, db_to_linear(d), &SearchConfig::default()).unwrap().rate_bits)
        .collect();
    let slope = dof_slope(&rates, &db).unwrap();
    assert!((slope - 2.0).abs() <= 0.15, "slope {slope}");
}

fn grid_mimo(h: &ChannelMatrix, p: f64) -> f64 {
    let b = mimo_upper_bound(h, p).unwrap();
    let total = 2.0 * p;
    let f = |t: f64| {
        0.5 * (1.0 + b.gains[0] * t * total).log2() + 0.5 * (1.0 + b.gains[1] * (1.0 - t) * total).log2()
    };
    let n = 100_000;
    let mut best_t = 0.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let t = i as f64 / n as f64;
        if f(t) > best {
            best = f(t);
            best_t = t;
        }
    }
    // Golden-section refinement of the concave objective.
    let (mut lo, mut hi) = ((best_t - 1.0 / n as f64).max(0.0), (best_t + 1.0 / n as f64).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let c = lo + g * (hi - lo);
        if f(a) < f(c) {
            lo = a;
        } else {
            hi = c;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

#[test]
fn mimo_matches_grid_search() {
    let mut rng = seed::rng(3);
    for _ in 0..20 {
        let h = ChannelMatrix::new(2, (0..4).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        for p in [0.1, 1.0, 10.0, 1000.0] {
            let b = mimo_upper_bound(&h, p).unwrap();
            let g = grid_mimo(&h, p);
            assert!((b.rate_bits - g).abs() < 1e-6, "{} vs {g}", b.rate_bits);
        }
    }
}

#[test]
fn tradeoff_holds_on_random_vectors() {
    let mut rng = seed::rng(11);
    let h = [1.0, 0.7316, -0.2219];
    for _ in 0..1000 {
        let mut a: Vec<i64> = (0..3).map(|_| rng.random_range(-20..=20)).collect();
        if a.iter().all(|&v| v == 0) {
            a[1] = 1;
        }
        let p = 10f64.powf(rng.random_range(0.0..6.0));
        let rep = loss_tradeoff_check(&h, p, &a).unwrap();
        assert!(rep.holds, "{a:?} P={p}: {} < {}", rep.loss, rep.bound);
    }
}

#[test]
fn sweep_matches_direct_search() {
    let cfg = SearchConfig::default();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let rows = normalized_rate_sweep(&[golden, 0.5], &[50.0], &cfg).unwrap();
    let p = db_to_linear(50.0);
    let (_, r) = brute_force_best_2d(golden, p);
    let full = 0.5 * (1.0 + (1.0 + golden * golden) * p).log2();
    assert!((rows[0].normalized_rate - r / full).abs() < 1e-12);
    assert!(rows[0].normalized_rate < 0.6);
    assert!(rows[1].normalized_rate > rows[0].normalized_rate);
}

fn brute_force_best_2d(h2: f64, p: f64) -> (Vec<i64>, f64) {
    let h = [1.0, h2];
    let bound = ((1.0 + h2 * h2) * p).ceil() as i64;
    let r = (bound as f64).sqrt() as i64;
    let mut best = (f64::NEG_INFINITY, vec![]);
    for a0 in 0..=r {
        for a1 in -r..=r {
            let n = a0 * a0 + a1 * a1;
            if n >= 1 && n <= bound {
                let v = lattice_rate_single(&h, p, &[a0, a1]).unwrap();
                if v > best.0 {
                    best = (v, vec![a0, a1]);
                }
            }
        }
    }
    (best.1, best.0)
}

fn channel2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_at_least_norm(h in prop::collection::vec(-5.0f64..5.0, 1..4), seed_a in any::<u64>(), p in 0.01f64..1e6) {
        let mut rng = seed::rng(seed_a);
        let mut a: Vec<i64> = h.iter().map(|_| rng.random_range(-9..=9)).collect();
        if a.iter().all(|&v| v == 0) { a[0] = 1; }
        let norm: i64 = a.iter().map(|v| v * v).sum();
        prop_assert!(loss_term(&h, p, &a).unwrap() >= norm as f64);
    }

    #[test]
    fn collinear_integer_loss_is_exact(h in prop::collection::vec(-6i64..6, 2..4), c in 1i64..4, p in 0.5f64..1e5) {
        prop_assume!(h.iter().any(|&v| v != 0));
        let hf: Vec<f64> = h.iter().map(|&v| v as f64).collect();
        let a: Vec<i64> = h.iter().map(|&v| c * v).collect();
        let norm: i64 = a.iter().map(|v| v * v).sum();
        prop_assert_eq!(loss_term(&hf, p, &a).unwrap(), norm as f64);
    }

    #[test]
    fn rate_symmetries(h in prop::collection::vec(-3.0f64..3.0, 3), a in prop::collection::vec(-7i64..7, 3), p in 1.0f64..1e4) {
        prop_assume!(a.iter().any(|&v| v != 0));
        let r = lattice_rate_single(&h, p, &a).unwrap();
        let neg: Vec<i64> = a.iter().map(|v| -v).collect();
        prop_assert_eq!(lattice_rate_single(&h, p, &neg).unwrap(), r);
        let perm = [2usize, 0, 1];
        let hp: Vec<f64> = perm.iter().map(|&i| h[i]).collect();
        let ap: Vec<i64> = perm.iter().map(|&i| a[i]).collect();
        prop_assert!((lattice_rate_single(&hp, p, &ap).unwrap() - r).abs() < 1e-9);
    }

    #[test]
    fn best_vector_scale_invariant(h in prop::collection::vec(0.1f64..2.0, 2), c in 0.3f64..3.0, p in 10.0f64..2000.0) {
        let cfg = SearchConfig::default();
        let (a, _) = best_coefficient_vector(&h, p, &cfg).unwrap();
        let hc: Vec<f64> = h.iter().map(|v| c * v).collect();
        let (b, _) = best_coefficient_vector(&hc, p / (c * c), &cfg).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bounds_order(entries in channel2(), db in 0.0f64..40.0) {
        let h = ChannelMatrix::new(2, entries).unwrap();
        let p = db_to_linear(db);
        let cfg = SearchConfig::default();
        let mimo = mimo_upper_bound(&h, p).unwrap().rate_bits;
        let lat = lattice_sum_rate(&h, p, &cfg).unwrap().rate_bits;
        let ts = time_sharing_rate(&h, p).unwrap();
        prop_assert!(lat >= 0.0);
        prop_assert!(mimo >= lat - 1e-9);
        prop_assert!(mimo >= ts - 1e-9);
    }

    #[test]
    fn best_rate_monotone_in_power(h in prop::collection::vec(-2.0f64..2.0, 2)) {
        prop_assume!(h.iter().any(|v| v.abs() > 1e-3));
        let cfg = SearchConfig::default();
        let mut prev = 0.0;
        for db in [0.0, 5.0, 10.0, 15.0, 20.0, 30.0] {
            let (_, r) = best_coefficient_vector(&h, db_to_linear(db), &cfg).unwrap();
            prop_assert!(r >= prev - 1e-12);
            prev = r;
        }
    }

    #[test]
    fn sweep_values_in_unit_interval(h2 in 0.0f64..1.0, db in 0.0f64..40.0) {
        let rows = normalized_rate_sweep(&[h2], &[db], &SearchConfig::default()).unwrap();
        prop_assert!(rows[0].normalized_rate >= 0.0 && rows[0].normalized_rate <= 1.0 + 1e-9);
    }
}
