use intsum::dist::Dist;
use intsum::eval::{self, BoxCounter, HypothesisEvaluator};
use intsum::kernel::{build_kernel_hypothesis, empirical_dist, KernelHypothesis, SmootherSpec};
use intsum::rng::stream;
use intsum::IntDist;
use proptest::prelude::*;

/// Brute-force pmf of atoms + sum of scaled discrete uniforms.
fn brute_pmf(h: &KernelHypothesis, x: i64) -> f64 {
    let weights = &h.smoother().weights;
    let radii = &h.smoother().radii;
    let mut total = 0.0;
    for &a in h.atoms() {
        // enumerate the box of uniform choices
        let mut partials: Vec<(i64, f64)> = vec![(a, 1.0)];
        for (w, c) in weights.iter().zip(radii) {
            let mut next = Vec::new();
            let width = (2 * c + 1) as f64;
            for &(v, pr) in &partials {
                for u in -c..=*c {
                    next.push((v + w * u, pr / width));
                }
            }
            partials = next;
        }
        total += partials.iter().filter(|&&(v, _)| v == x).map(|&(_, p)| p).sum::<f64>();
    }
    total / h.atoms().len() as f64
}

#[test]
fn smoother_radius_rule() {
    assert_eq!(SmootherSpec::radius(0.1, 50.0, 2), 3); // ceil(.1*50/2)
    assert_eq!(SmootherSpec::radius(0.5, 1.0, 1), 1);
    assert!(SmootherSpec::radius(0.1, 0.0, 1) >= 0);
}

#[test]
fn eval_matches_brute_force_grid() {
    let mut rng = stream(3, "kernel-grid");
    for (weights, radii) in [
        (vec![1], vec![2]),
        (vec![1, 3], vec![1, 2]),
        (vec![2, 5, 7], vec![1, 1, 2]),
        (vec![1, 4], vec![0, 3]),
    ] {
        let atoms: Vec<i64> = (0..8)
            .map(|_| rand::Rng::gen_range(&mut rng, -20i64..20))
            .collect();
        let smoother = SmootherSpec::new(weights, radii).unwrap();
        let h = KernelHypothesis::new(atoms, smoother).unwrap();
        let ev = HypothesisEvaluator::new(&h).unwrap();
        let mut sum = 0.0;
        for x in -80..=80 {
            let fast = ev.eval(x);
            let slow = brute_pmf(&h, x);
            assert!((fast - slow).abs() < 1e-12, "x={x}: {fast} vs {slow}");
            sum += fast;
        }
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn materialize_agrees_with_eval() {
    let smoother = SmootherSpec::new(vec![1, 5], vec![2, 3]).unwrap();
    let h = KernelHypothesis::new(vec![0, 4, 9, 9, -3], smoother).unwrap();
    let ev = HypothesisEvaluator::new(&h).unwrap();
    let dense = ev.materialize(1_000_000).unwrap();
    for x in dense.offset()..=dense.max() {
        assert!((dense.pmf_at(x) - ev.eval(x)).abs() < 1e-12);
    }
    assert!((dense.total_mass() - 1.0).abs() < 1e-9);
}

#[test]
fn box_counter_examples() {
    // single weight 1, radius 2: counts lattice points u in [-2,2] with u = s
    let bc = BoxCounter::new(&[1], &[2]).unwrap();
    assert_eq!(bc.count(0), 1);
    assert_eq!(bc.count(3), 0);
    // weights (1,2), radii (1,1): |{(u,v) in [-1,1]^2 : u + 2v = 0}| = 1... u=0,v=0; u=-2? no
    let bc = BoxCounter::new(&[1, 2], &[1, 1]).unwrap();
    let direct = |s: i64| -> i128 {
        let mut n = 0;
        for u in -1i64..=1 {
            for v in -1i64..=1 {
                if u + 2 * v == s {
                    n += 1;
                }
            }
        }
        n
    };
    for s in -4..=4 {
        assert_eq!(bc.count(s), direct(s), "s={s}");
        assert_eq!(eval::count_weighted_box(&[1, 2], &[1, 1], s).unwrap(), direct(s));
    }
}

#[test]
fn empirical_dist_frequencies() {
    let d = empirical_dist(&[3, 3, 5, 7]).unwrap();
    assert!((d.pmf_at(3) - 0.5).abs() < 1e-15);
    assert!((d.pmf_at(5) - 0.25).abs() < 1e-15);
    assert!((d.pmf_at(7) - 0.25).abs() < 1e-15);
    assert!(empirical_dist(&[]).is_err());
}

#[test]
fn kernel_serde_round_trip() {
    let smoother = SmootherSpec::new(vec![1, 7], vec![2, 0]).unwrap();
    let h = KernelHypothesis::new(vec![1, 2, 2, -5], smoother).unwrap();
    let s = serde_json::to_string(&h).unwrap();
    assert!(s.contains("atoms") && s.contains("weights") && s.contains("radii"));
    let back: KernelHypothesis = serde_json::from_str(&s).unwrap();
    assert_eq!(back.atoms(), h.atoms());
    assert_eq!(back.smoother().weights, h.smoother().weights);
    // negative radii rejected at the boundary
    assert!(serde_json::from_str::<KernelHypothesis>(
        r#"{"atoms":[0],"weights":[1],"radii":[-1]}"#
    )
    .is_err());
}

#[test]
fn build_retains_atoms_verbatim() {
    let samples = vec![5, -2, 5, 9];
    let h = build_kernel_hypothesis(&samples, SmootherSpec::new(vec![1], vec![1]).unwrap())
        .unwrap();
    assert_eq!(h.atoms(), &samples[..]);
}

/// Mixture property: smoothing a mixture equals the mixture of smoothings.
#[test]
fn mixture_commutes_with_smoothing() {
    let sm = SmootherSpec::new(vec![1], vec![3]).unwrap();
    let h1 = KernelHypothesis::new(vec![0, 1, 2, 3], sm.clone()).unwrap();
    let h2 = KernelHypothesis::new(vec![10, 11, 12, 13], sm.clone()).unwrap();
    let hmix = KernelHypothesis::new(vec![0, 1, 2, 3, 10, 11, 12, 13], sm).unwrap();
    let e1 = HypothesisEvaluator::new(&h1).unwrap();
    let e2 = HypothesisEvaluator::new(&h2).unwrap();
    let em = HypothesisEvaluator::new(&hmix).unwrap();
    for x in -5..=20 {
        let mixed = 0.5 * e1.eval(x) + 0.5 * e2.eval(x);
        assert!((em.eval(x) - mixed).abs() < 1e-12);
    }
}

/// Robustness: perturbing atoms by at most d moves the smoothed law by at
/// most O(d / c) in TV (each uniform window of width 2c+1 shifts by <= d).
#[test]
fn smoothing_is_robust_to_atom_jitter() {
    let mut rng = stream(17, "robustness");
    let atoms: Vec<i64> = (0..500)
        .map(|_| rand::Rng::gen_range(&mut rng, 0i64..200))
        .collect();
    let jittered: Vec<i64> = atoms
        .iter()
        .map(|&a| a + rand::Rng::gen_range(&mut rng, -2i64..=2))
        .collect();
    let c = 40i64;
    let sm = SmootherSpec::new(vec![1], vec![c]).unwrap();
    let d1 = HypothesisEvaluator::new(&KernelHypothesis::new(atoms, sm.clone()).unwrap())
        .unwrap()
        .materialize(1_000_000)
        .unwrap();
    let d2 = HypothesisEvaluator::new(&KernelHypothesis::new(jittered, sm).unwrap())
        .unwrap()
        .materialize(1_000_000)
        .unwrap();
    assert!(d1.tv_distance(&d2) <= 2.0 * 2.0 / (2.0 * c as f64 + 1.0) + 0.01);
}

/// Multidimensional bound: the smoothed empirical law of a two-scale target
/// approaches the smoothed truth as the sample count grows.
#[test]
fn smoothed_empirical_converges() {
    let p = 7i64;
    let truth: IntDist = Dist::binomial(400, 0.5)
        .unwrap()
        .scale(p)
        .unwrap()
        .convolve(&Dist::binomial(12, 0.5).unwrap())
        .unwrap();
    let sm = SmootherSpec::new(vec![1, p], vec![2, 6]).unwrap();
    let truth_smoothed = truth.convolve(&sm.pmf().unwrap()).unwrap();
    let sampler = truth.sampler();
    let mut rng = stream(23, "mdkernel");
    let mut prev = f64::INFINITY;
    for m in [200usize, 20_000] {
        let atoms = sampler.draw_n(&mut rng, m);
        let h = KernelHypothesis::new(atoms, sm.clone()).unwrap();
        let dense = HypothesisEvaluator::new(&h).unwrap().materialize(10_000_000).unwrap();
        let tv = dense.tv_distance(&truth_smoothed);
        assert!(tv < prev);
        prev = tv;
    }
    assert!(prev < 0.1, "smoothed empirical TV {prev}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eval_normalizes(seed in 0u64..1000, c1 in 0i64..4, c2 in 0i64..4, w2 in 2i64..9) {
        let mut rng = stream(seed, "prop-kernel");
        let atoms: Vec<i64> = (0..6).map(|_| rand::Rng::gen_range(&mut rng, -30i64..30)).collect();
        let h = KernelHypothesis::new(
            atoms,
            SmootherSpec::new(vec![1, w2], vec![c1, c2]).unwrap(),
        ).unwrap();
        let ev = HypothesisEvaluator::new(&h).unwrap();
        let mut sum = 0.0;
        for x in -100..=100 {
            let p = ev.eval(x);
            prop_assert!(p >= 0.0);
            sum += p;
        }
        prop_assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn box_count_matches_enumeration(w1 in 1i64..5, w2 in 1i64..7, c1 in 0i64..4, c2 in 0i64..4, s in -20i64..20) {
        let fast = eval::count_weighted_box(&[w1, w2], &[c1, c2], s).unwrap();
        let mut slow = 0i128;
        for u in -c1..=c1 {
            for v in -c2..=c2 {
                if w1 * u + w2 * v == s { slow += 1; }
            }
        }
        prop_assert_eq!(fast, slow);
    }
}
