use intsum::asum::{self, ASumSpec, Profile};
use intsum::dist::Dist;
use intsum::rng::stream;
use intsum::IntDist;
use proptest::prelude::*;
use rand::Rng;

/// Brute-force oracle: enumerate all k^N outcomes.
fn enumerate_pmf(spec: &ASumSpec) -> IntDist {
    let support = spec.support();
    let rows = spec.rows();
    let mut acc: Vec<(i64, f64)> = vec![(0, 1.0)];
    for row in rows {
        let mut next = Vec::with_capacity(acc.len() * support.len());
        for &(v, pr) in &acc {
            for (j, &a) in support.iter().enumerate() {
                if row[j] > 0.0 {
                    next.push((v + a, pr * row[j]));
                }
            }
        }
        acc = next;
    }
    let lo = acc.iter().map(|&(v, _)| v).min().unwrap();
    let hi = acc.iter().map(|&(v, _)| v).max().unwrap();
    let mut pmf = vec![0.0; (hi - lo + 1) as usize];
    for (v, pr) in acc {
        pmf[(v - lo) as usize] += pr;
    }
    Dist::new(lo, pmf).unwrap()
}

#[test]
fn trivial_examples() {
    // A={0,1}, N=2, uniform rows
    let spec = ASumSpec::new(vec![0, 1], vec![vec![0.5, 0.5]; 2]).unwrap();
    let pmf = spec.exact_pmf().unwrap();
    assert!((pmf.pmf_at(0) - 0.25).abs() < 1e-12);
    assert!((pmf.pmf_at(1) - 0.5).abs() < 1e-12);
    assert!((pmf.pmf_at(2) - 0.25).abs() < 1e-12);
    // A={0,2}, N=1, row=(0,1) -> delta(2)
    let spec = ASumSpec::new(vec![0, 2], vec![vec![0.0, 1.0]]).unwrap();
    let pmf = spec.exact_pmf().unwrap();
    assert_eq!(pmf.len(), 1);
    assert!((pmf.pmf_at(2) - 1.0).abs() < 1e-12);
}

#[test]
fn oracle_matches_enumeration_randomized() {
    let mut rng = stream(2024, "asum-oracle");
    for trial in 0..60 {
        let k = rng.gen_range(2..=4);
        let n = rng.gen_range(1..=10);
        let amax = rng.gen_range(3..=30);
        let profile = [Profile::Uniform, Profile::SparseHeavy, Profile::TwoCluster]
            [trial % 3];
        let spec = ASumSpec::generate(k, n, amax, profile, &mut rng);
        let fast = spec.exact_pmf().unwrap();
        let slow = enumerate_pmf(&spec);
        assert!(
            fast.tv_distance(&slow) < 1e-12,
            "trial {trial}: oracle mismatch {}",
            fast.tv_distance(&slow)
        );
    }
}

#[test]
fn windowed_path_matches_dense_path() {
    // large a3 forces the joint-counts path; compare on a scaled-down twin
    let mut rng = stream(5, "window-check");
    let spec = ASumSpec::generate(3, 300, 1500, Profile::SparseHeavy, &mut rng);
    let dense = spec.exact_pmf_capped(u64::MAX, u64::MAX).unwrap();
    let windowed = spec.exact_pmf_capped(u64::MAX, 1).unwrap();
    assert!(dense.tv_distance(&windowed) < 1e-9);
}

#[test]
fn sampler_agrees_with_pmf() {
    let mut rng = stream(7, "spec-sampling");
    let spec = ASumSpec::generate(3, 3, 5, Profile::Uniform, &mut rng);
    let pmf = spec.exact_pmf().unwrap();
    let sampler = spec.sampler();
    let m = 200_000;
    let draws: Vec<i64> = (0..m).map(|_| sampler.draw(&mut rng)).collect();
    let emp = intsum::kernel::empirical_dist(&draws).unwrap();
    // DKW at eps=.005 is comfortable at this m
    assert!(pmf.kolmogorov_distance(&emp) < 0.005);
}

#[test]
fn zero_mode_worked_example() {
    // N=2, rows uniform on {6,10,15}
    let spec = ASumSpec::new(
        vec![6, 10, 15],
        vec![vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]],
    )
    .unwrap();
    let z = spec.zero_mode_decompose();
    assert_eq!(z.v, 12); // mode tie resolved to the smallest value, 6 + 6
    assert_eq!(z.q_values, vec![4, 5, 9]);
    let w: std::collections::HashMap<i64, f64> =
        z.q_values.iter().copied().zip(z.weights.iter().copied()).collect();
    assert!((w[&4] - 2.0 / 3.0).abs() < 1e-12);
    assert!((w[&9] - 2.0 / 3.0).abs() < 1e-12);
    assert!(w[&5].abs() < 1e-12);
    for row in &z.moded_rows {
        assert!(row.pmf_at(0) >= 1.0 / 3.0 - 1e-12);
    }
}

#[test]
fn zero_mode_degenerate_rows() {
    let spec = ASumSpec::new(vec![0, 3], vec![vec![0.0, 1.0]]).unwrap();
    let z = spec.zero_mode_decompose();
    assert_eq!(z.v, 3);
    assert!(z.weights.iter().all(|&c| c.abs() < 1e-12));
    let spec = ASumSpec::new(vec![0, 3], vec![vec![0.4, 0.6]]).unwrap();
    let z = spec.zero_mode_decompose();
    assert_eq!(z.v, 3);
    assert!((z.weights[0] - 0.4).abs() < 1e-12);
}

#[test]
fn largeness_index_examples() {
    assert_eq!(asum::largeness_index(&[0.0, 0.0, 0.0], &[1.0, 10.0, 100.0]).unwrap(), 4);
    assert_eq!(asum::largeness_index(&[5.0, 5.0, 5.0], &[1.0, 10.0, 100.0]).unwrap(), 1);
    assert_eq!(asum::largeness_index(&[0.5, 20.0, 20.0], &[1.0, 10.0, 100.0]).unwrap(), 2);
    assert!(asum::largeness_index(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn schedules_grow() {
    let g = asum::general_schedule(0.1, 3);
    assert!((g[0] - 100.0).abs() < 1e-9);
    assert!(g[1] > g[0] && g[2] > g[1]);
    let k3 = asum::k3_schedule(0.1, 8.0, 2);
    assert!((k3[0] - 1e8).abs() / 1e8 < 1e-12);
}

#[test]
fn bad_specs_rejected() {
    assert!(ASumSpec::new(vec![1, 1], vec![vec![0.5, 0.5]]).is_err());
    assert!(ASumSpec::new(vec![0, 1], vec![vec![0.7, 0.7]]).is_err());
    assert!(ASumSpec::new(vec![2, 1], vec![vec![0.5, 0.5]]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oracle_mass_and_mean(seed in 0u64..5000, k in 2usize..5, n in 1usize..9) {
        let mut rng = stream(seed, "prop-oracle");
        let spec = ASumSpec::generate(k, n, 25, Profile::Uniform, &mut rng);
        let pmf = spec.exact_pmf().unwrap();
        prop_assert!((pmf.total_mass() - 1.0).abs() < 1e-9);
        let mean_expect: f64 = (0..n).map(|i| spec.row_dist(i).mean()).sum();
        prop_assert!((pmf.mean() - mean_expect).abs() < 1e-6);
    }

    #[test]
    fn zero_mode_reassembles(seed in 0u64..5000) {
        let mut rng = stream(seed, "prop-zeromode");
        let spec = ASumSpec::generate(3, 4, 12, Profile::SparseHeavy, &mut rng);
        let z = spec.zero_mode_decompose();
        let mut s: IntDist = IntDist::delta(z.v);
        for row in &z.moded_rows {
            s = s.convolve(row).unwrap();
        }
        let direct = spec.exact_pmf().unwrap();
        prop_assert!(s.tv_distance(&direct) < 1e-10);
    }
}
