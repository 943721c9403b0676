use intsum::dist::{Dist, DistError, KlDivergence, PbdSpec};
use intsum::IntDist;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn delta_and_bernoulli() {
    let d = IntDist::delta(7);
    assert_eq!(d.offset(), 7);
    assert_eq!(d.len(), 1);
    assert_eq!(d.pmf_at(7), 1.0);
    let b: IntDist = Dist::bernoulli(0.3).unwrap();
    assert!(close(b.pmf_at(0), 0.7, 1e-15));
    assert!(close(b.pmf_at(1), 0.3, 1e-15));
    assert!(Dist::<f64>::bernoulli(1.5).is_err());
}

#[test]
fn convolution_oracle() {
    // Bern(.3) * Bern(.7): hand computation
    let a: IntDist = Dist::bernoulli(0.3).unwrap();
    let b: IntDist = Dist::bernoulli(0.7).unwrap();
    let c = a.convolve(&b).unwrap();
    assert!(close(c.pmf_at(0), 0.21, 1e-12));
    assert!(close(c.pmf_at(1), 0.58, 1e-12));
    assert!(close(c.pmf_at(2), 0.21, 1e-12));
}

#[test]
fn binomial_matches_recurrence_and_moments() {
    let b: IntDist = Dist::binomial(40, 0.37).unwrap();
    assert!(close(b.mean(), 40.0 * 0.37, 1e-9));
    assert!(close(b.variance(), 40.0 * 0.37 * 0.63, 1e-8));
    // the large-n path uses ln-gamma with tail truncation; cross-check
    let big: IntDist = Dist::binomial(100_000, 0.5).unwrap();
    assert!(close(big.total_mass(), 1.0, 1e-9));
    assert!(close(big.mean(), 50_000.0, 1e-3));
    assert!(close(big.variance(), 25_000.0, 1.0));
}

#[test]
fn tv_and_kolmogorov_oracles() {
    let a: IntDist = Dist::binomial(2, 0.5).unwrap();
    let b: IntDist = Dist::binomial(2, 0.25).unwrap();
    assert!(close(a.tv_distance(&b), 0.3125, 1e-12));
    assert!(a.kolmogorov_distance(&b) <= a.tv_distance(&b) + 1e-15);
    assert_eq!(a.tv_distance(&a), 0.0);
    // disjoint supports
    let d1 = IntDist::delta(0);
    let d2 = IntDist::delta(5);
    assert!(close(d1.tv_distance(&d2), 1.0, 1e-15));
}

#[test]
fn kl_oracle() {
    let p: IntDist = Dist::bernoulli(0.5).unwrap();
    let q: IntDist = Dist::bernoulli(0.25).unwrap();
    match p.kl_divergence(&q) {
        KlDivergence::Finite(v) => {
            let expect = 0.5 * (0.5f64 / 0.25).ln() + 0.5 * (0.5f64 / 0.75).ln();
            assert!(close(v, expect, 1e-12));
            assert!(close(v, 0.14384103622589045, 1e-12));
        }
        KlDivergence::Infinite => panic!("expected finite KL"),
    }
    // support mismatch is infinite
    let r = IntDist::delta(3);
    assert!(matches!(p.kl_divergence(&r), KlDivergence::Infinite));
}

#[test]
fn translated_poisson_oracle() {
    let tp: IntDist = Dist::translated_poisson(1.0, 1.0).unwrap();
    // floor(mu - var) = 0, lambda = 1: pmf(0) = e^-1
    assert!(close(tp.pmf_at(0), (-1f64).exp(), 1e-9));
    assert!(close(tp.mean(), 1.0, 1e-9));
    assert!(close(tp.total_mass(), 1.0, 1e-9));
    assert!(Dist::<f64>::translated_poisson(0.0, 0.0).is_err());
}

#[test]
fn discretized_gaussian_mass_and_moments() {
    let g: IntDist = Dist::discretized_gaussian(10.3, 25.0).unwrap();
    assert!(close(g.total_mass(), 1.0, 1e-9));
    assert!(close(g.mean(), 10.3, 0.05));
    assert!(close(g.variance(), 25.0, 0.3));
}

#[test]
fn scale_shift_mod() {
    let b: IntDist = Dist::binomial(3, 0.5).unwrap();
    let s = b.scale(5).unwrap();
    assert!(close(s.pmf_at(10), b.pmf_at(2), 1e-15));
    assert_eq!(s.mean(), 5.0 * b.mean());
    let neg = b.scale(-2).unwrap();
    assert!(close(neg.pmf_at(-4), b.pmf_at(2), 1e-15));
    let m = s.mod_reduce(7).unwrap();
    assert!(close(m.total_mass(), 1.0, 1e-12));
    assert!(m.offset() >= 0 && m.max() < 7);
    // uniform stays uniform under shift
    let u = IntDist::uniform(-2, 2).shift(10);
    assert_eq!(u.offset(), 8);
    assert!(close(u.pmf_at(10), 0.2, 1e-15));
}

#[test]
fn shift_distance_basics() {
    let b: IntDist = Dist::binomial(100, 0.5).unwrap();
    let d1 = b.shift_distance(1);
    let d5 = b.shift_distance(5);
    assert!(d1 > 0.0 && d1 < d5 && d5 < 1.0);
    assert_eq!(b.shift_distance(0), 0.0);
}

#[test]
fn pbd_pmf_matches_direct_convolution() {
    let spec = PbdSpec::unsigned(vec![0.1, 0.5, 0.9, 0.3]);
    spec.validate().unwrap();
    let pmf: IntDist = spec.pmf().unwrap();
    let mut direct: IntDist = Dist::bernoulli(0.1).unwrap();
    for p in [0.5, 0.9, 0.3] {
        direct = direct.convolve(&Dist::bernoulli(p).unwrap()).unwrap();
    }
    assert!(pmf.tv_distance(&direct) < 1e-12);
    assert!(close(spec.mean(), pmf.mean(), 1e-9));
    assert!(close(spec.variance(), pmf.variance(), 1e-9));
}

#[test]
fn signed_pbd_mean_flips() {
    let spec = PbdSpec { probs: vec![0.5, 0.5], signs: vec![1, -1] };
    spec.validate().unwrap();
    assert!(close(spec.mean(), 0.0, 1e-15));
    let pmf: IntDist = spec.pmf().unwrap();
    assert!(close(pmf.pmf_at(0), 0.5, 1e-12));
    assert!(close(pmf.pmf_at(1), 0.25, 1e-12));
    assert!(close(pmf.pmf_at(-1), 0.25, 1e-12));
}

#[test]
fn resource_cap_reported() {
    let wide = IntDist::uniform(0, 1_000_000);
    match wide.convolve_capped(&wide, 1000) {
        Err(DistError::ResourceCap { .. }) => {}
        other => panic!("expected cap error, got {other:?}"),
    }
}

#[test]
fn serde_round_trip_and_rejects_bad() {
    let d: IntDist = Dist::binomial(10, 0.3).unwrap();
    let s = serde_json::to_string(&d).unwrap();
    let back: IntDist = serde_json::from_str(&s).unwrap();
    assert_eq!(d.offset(), back.offset());
    assert!(d.tv_distance(&back) < 1e-15);
    let bad = r#"{"offset":0,"pmf":[0.5,0.2]}"#;
    assert!(serde_json::from_str::<IntDist>(bad).is_err());
}

#[test]
fn sampler_hits_dkw_bound() {
    let d: IntDist = Dist::binomial(30, 0.4).unwrap();
    let sampler = d.sampler();
    let mut rng = intsum::rng::stream(11, "dkw-smoke");
    let m = 20_000usize;
    let draws = sampler.draw_n(&mut rng, m);
    let emp = intsum::kernel::empirical_dist(&draws).unwrap();
    assert!(d.kolmogorov_distance(&emp) < 0.02);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_mean_and_variance_add(n1 in 1u64..40, n2 in 1u64..40,
                                  p1 in 0.05f64..0.95, p2 in 0.05f64..0.95) {
        let a: IntDist = Dist::binomial(n1, p1).unwrap();
        let b: IntDist = Dist::binomial(n2, p2).unwrap();
        let c = a.convolve(&b).unwrap();
        prop_assert!(close(c.mean(), a.mean() + b.mean(), 1e-7));
        prop_assert!(close(c.variance(), a.variance() + b.variance(), 1e-6));
        prop_assert!(close(c.total_mass(), 1.0, 1e-9));
    }

    #[test]
    fn tv_is_a_metric_sample(n in 1u64..25, p in 0.1f64..0.9, q in 0.1f64..0.9, r in 0.1f64..0.9) {
        let a: IntDist = Dist::binomial(n, p).unwrap();
        let b: IntDist = Dist::binomial(n, q).unwrap();
        let c: IntDist = Dist::binomial(n, r).unwrap();
        let ab = a.tv_distance(&b);
        prop_assert!(close(ab, b.tv_distance(&a), 1e-15));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!(ab <= a.tv_distance(&c) + c.tv_distance(&b) + 1e-12);
    }

    #[test]
    fn kolmogorov_below_tv(n in 1u64..30, p in 0.05f64..0.95, shift in -3i64..3) {
        let a: IntDist = Dist::binomial(n, p).unwrap();
        let b = a.shift(shift);
        prop_assert!(a.kolmogorov_distance(&b) <= a.tv_distance(&b) + 1e-12);
    }

    #[test]
    fn mod_reduce_preserves_mass(n in 1u64..60, p in 0.1f64..0.9, m in 2i64..50) {
        let a: IntDist = Dist::binomial(n, p).unwrap();
        let r = a.mod_reduce(m).unwrap();
        prop_assert!(close(r.total_mass(), 1.0, 1e-9));
        prop_assert!(r.offset() >= 0 && r.max() < m);
    }

    #[test]
    fn kl_nonnegative(n in 1u64..20, p in 0.2f64..0.8, q in 0.2f64..0.8) {
        let a: IntDist = Dist::binomial(n, p).unwrap();
        let b: IntDist = Dist::binomial(n, q).unwrap();
        if let KlDivergence::Finite(v) = a.kl_divergence(&b) {
            prop_assert!(v >= -1e-12);
        }
    }
}
