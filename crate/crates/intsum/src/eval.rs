//! Exact pmf evaluation and sampling for kernel hypotheses. The polytope
//! counting the analysis calls for reduces, for this hypothesis class, to
//! counting lattice points of a box sliced by one hyperplane; an integer DP
//! over partial weighted sums does that exactly.

use crate::dist::{Dist, DistError, DEFAULT_CELL_CAP};
use crate::kernel::KernelHypothesis;
use crate::IntDist;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("weights and radii have different lengths ({weights} vs {radii})")]
    LengthMismatch { weights: usize, radii: usize },
    #[error("count DP needs {cells} cells, above the cap of {cap}")]
    ResourceCap { cells: u128, cap: u64 },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Number of integer vectors `y` with `|y_a| <= gamma_a` and
/// `sum_a p_a * y_a = s`. Exact via a dense DP over partial weighted sums.
pub fn count_weighted_box(p: &[i64], gamma: &[i64], s: i64) -> Result<i128, EvalError> {
    let table = BoxCounter::new(p, gamma)?;
    Ok(table.count(s))
}

/// Memoized counts for one `(weights, radii)` pair: the DP table answers all
/// target sums `s` at once and is reused across queries.
#[derive(Debug, Clone)]
pub struct BoxCounter {
    reach: i64,
    counts: Vec<i128>,
}

impl BoxCounter {
    pub fn new(p: &[i64], gamma: &[i64]) -> Result<Self, EvalError> {
        Self::new_capped(p, gamma, DEFAULT_CELL_CAP)
    }

    pub fn new_capped(p: &[i64], gamma: &[i64], cap: u64) -> Result<Self, EvalError> {
        if p.len() != gamma.len() {
            return Err(EvalError::LengthMismatch { weights: p.len(), radii: gamma.len() });
        }
        let reach: i64 = p.iter().zip(gamma).map(|(&w, &g)| w.abs() * g.max(0)).sum();
        let cells = 2 * reach as u128 + 1;
        if cells > cap as u128 {
            return Err(EvalError::ResourceCap { cells, cap });
        }
        let mut counts = vec![0i128; cells as usize];
        counts[reach as usize] = 1; // partial sum 0
        for (&w, &g) in p.iter().zip(gamma) {
            let mut next = vec![0i128; counts.len()];
            for (i, &c) in counts.iter().enumerate() {
                if c != 0 {
                    for y in -g..=g {
                        let j = i as i64 + w * y;
                        next[j as usize] += c;
                    }
                }
            }
            counts = next;
        }
        Ok(BoxCounter { reach, counts })
    }

    pub fn count(&self, s: i64) -> i128 {
        if s < -self.reach || s > self.reach {
            0
        } else {
            self.counts[(s + self.reach) as usize]
        }
    }
}

/// One-time-built evaluator for a kernel hypothesis. Immutable after
/// construction, so concurrent use is safe by construction.
///
/// The smoother law is kept sparsely: only its support entries, computed by
/// exact box counting, so two-scale smoothers with wide but mostly-empty
/// spans stay cheap to hold.
#[derive(Debug, Clone)]
pub struct HypothesisEvaluator {
    /// distinct atom values with multiplicities
    atoms: Vec<(i64, u64)>,
    total_atoms: f64,
    /// smoother support, sorted by value; probabilities are exact rationals
    /// `count / prod(2 c_a + 1)` in floating point
    z_entries: Vec<(i64, f64)>,
    z_lo: i64,
    z_hi: i64,
}

/// Sparse smoother support via direct enumeration of the component box when
/// it is small, dense convolution otherwise.
fn smoother_entries(
    weights: &[i64],
    radii: &[i64],
) -> Result<Vec<(i64, f64)>, EvalError> {
    let combos: u128 = radii.iter().map(|&c| (2 * c + 1) as u128).product();
    if combos <= 4_000_000 {
        let mut counts: std::collections::HashMap<i64, u64> = std::collections::HashMap::new();
        fn rec(
            weights: &[i64],
            radii: &[i64],
            depth: usize,
            sum: i64,
            counts: &mut std::collections::HashMap<i64, u64>,
        ) {
            if depth == weights.len() {
                *counts.entry(sum).or_insert(0) += 1;
                return;
            }
            for y in -radii[depth]..=radii[depth] {
                rec(weights, radii, depth + 1, sum + weights[depth] * y, counts);
            }
        }
        rec(weights, radii, 0, 0, &mut counts);
        let total = combos as f64;
        let mut entries: Vec<(i64, f64)> =
            counts.into_iter().map(|(v, c)| (v, c as f64 / total)).collect();
        entries.sort_unstable_by_key(|&(v, _)| v);
        Ok(entries)
    } else {
        let spec = crate::kernel::SmootherSpec::new(weights.to_vec(), radii.to_vec())
            .expect("validated smoother");
        let z = spec.pmf().map_err(|e| match e {
            crate::kernel::KernelError::Dist(d) => EvalError::Dist(d),
            other => panic!("validated smoother failed: {other}"),
        })?;
        Ok(z.entries().collect())
    }
}

impl HypothesisEvaluator {
    pub fn new(h: &KernelHypothesis) -> Result<Self, EvalError> {
        let z_entries = smoother_entries(&h.smoother().weights, &h.smoother().radii)?;
        let z_lo = z_entries.first().map(|&(v, _)| v).unwrap_or(0);
        let z_hi = z_entries.last().map(|&(v, _)| v).unwrap_or(0);
        let mut sorted = h.atoms().to_vec();
        sorted.sort_unstable();
        let mut atoms: Vec<(i64, u64)> = Vec::new();
        for v in sorted {
            match atoms.last_mut() {
                Some((last, n)) if *last == v => *n += 1,
                _ => atoms.push((v, 1)),
            }
        }
        let total_atoms = h.atoms().len() as f64;
        Ok(HypothesisEvaluator { atoms, total_atoms, z_entries, z_lo, z_hi })
    }

    fn z_at(&self, v: i64) -> f64 {
        match self.z_entries.binary_search_by_key(&v, |&(val, _)| val) {
            Ok(i) => self.z_entries[i].1,
            Err(_) => 0.0,
        }
    }

    /// Exact `Pr[H = x]`: average of the smoother pmf over the atoms.
    pub fn eval(&self, x: i64) -> f64 {
        let mut acc = 0.0;
        for &(a, n) in &self.atoms {
            acc += n as f64 * self.z_at(x - a);
        }
        acc / self.total_atoms
    }

    /// Full exact pmf as an `IntDist` when its span fits `cap`.
    pub fn materialize(&self, cap: u64) -> Result<IntDist, EvalError> {
        let lo = self.atoms[0].0 + self.z_lo;
        let hi = self.atoms[self.atoms.len() - 1].0 + self.z_hi;
        let cells = (hi - lo) as u128 + 1;
        if cells > cap as u128 {
            return Err(EvalError::ResourceCap { cells, cap });
        }
        let mut pmf = vec![0.0f64; cells as usize];
        for &(a, n) in &self.atoms {
            let w = n as f64 / self.total_atoms;
            for &(zv, zp) in &self.z_entries {
                pmf[(a + zv - lo) as usize] += w * zp;
            }
        }
        Ok(Dist::new_unnormalized(lo, pmf)?)
    }

    pub fn support_span(&self) -> u128 {
        let lo = self.atoms[0].0 + self.z_lo;
        let hi = self.atoms[self.atoms.len() - 1].0 + self.z_hi;
        (hi - lo) as u128 + 1
    }
}

/// Exact `Pr[H = x]`. Convenience wrapper; hot paths should build a
/// [`HypothesisEvaluator`] once and reuse it.
pub fn eval_pmf(h: &KernelHypothesis, x: i64) -> Result<f64, EvalError> {
    Ok(HypothesisEvaluator::new(h)?.eval(x))
}

/// Draw from the hypothesis: uniform atom plus the smoother, component by
/// component. No tables needed, exact by construction.
pub fn sample_hypothesis<R: Rng>(h: &KernelHypothesis, rng: &mut R, n: usize) -> Vec<i64> {
    let atoms = h.atoms();
    let spec = h.smoother();
    (0..n)
        .map(|_| {
            let mut v = atoms[rng.gen_range(0..atoms.len())];
            for (&w, &c) in spec.weights.iter().zip(&spec.radii) {
                v += w * rng.gen_range(-c..=c);
            }
            v
        })
        .collect()
}
