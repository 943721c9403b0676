//! Ground-truth generators for sums of independent integer random variables
//! with shared finite support, plus the structural decomposition the learners
//! rest on: zero-moding, q-values, weights, and the largeness index.

use crate::dist::{Dist, DistError, DEFAULT_CELL_CAP};
use crate::IntDist;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on multiply-add operations for the exact oracle.
pub const DEFAULT_COST_CAP: u64 = 4_000_000_000;

/// Mass threshold used when pruning DP window edges; the discarded total is
/// tracked and stays far below the 1e-9 normalization tolerance.
const WINDOW_EPS: f64 = 1e-17;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("support must be nonempty")]
    EmptySupport,
    #[error("support must be strictly increasing and non-negative")]
    BadSupport,
    #[error("row {row} has length {len}, expected {k}")]
    RowLength { row: usize, len: usize, k: usize },
    #[error("row {row} sums to {sum}; expected 1 within 1e-12")]
    RowMass { row: usize, sum: f64 },
    #[error("row {row} entry {col} is {value}; entries must be finite and >= 0")]
    RowEntry { row: usize, col: usize, value: f64 },
    #[error("exact pmf needs ~{cost} operations, above the cap of {cap}")]
    CostCap { cost: u128, cap: u64 },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Sum specification: common support `a_1 < .. < a_k` and one pmf row per
/// summand. The target is `S = sum_i X_i` with `Pr[X_i = a_j] = rows[i][j]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ASumSpec {
    support: Vec<i64>,
    rows: Vec<Vec<f64>>,
}

/// Row-generation profile for the random spec generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Flat Dirichlet rows: every support value gets non-trivial mass.
    Uniform,
    /// Half the rows are near point masses, half flat.
    SparseHeavy,
    /// Each row splits its mass between two support values.
    TwoCluster,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Profile::Uniform),
            "sparse-heavy" => Ok(Profile::SparseHeavy),
            "two-cluster" => Ok(Profile::TwoCluster),
            other => Err(format!("unknown profile '{other}'")),
        }
    }
}

impl ASumSpec {
    pub fn new(support: Vec<i64>, rows: Vec<Vec<f64>>) -> Result<Self, SpecError> {
        if support.is_empty() {
            return Err(SpecError::EmptySupport);
        }
        if support[0] < 0 || support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpecError::BadSupport);
        }
        let k = support.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != k {
                return Err(SpecError::RowLength { row, len: r.len(), k });
            }
            let mut sum = 0.0;
            for (col, &value) in r.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(SpecError::RowEntry { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(SpecError::RowMass { row, sum });
            }
        }
        Ok(ASumSpec { support, rows })
    }

    /// Random spec: `k` distinct support points in `[0, amax]` and `n` rows
    /// drawn per `profile`.
    pub fn generate<R: Rng>(k: usize, n: usize, amax: i64, profile: Profile, rng: &mut R) -> Self {
        assert!(k >= 1 && amax + 1 >= k as i64, "need amax + 1 >= k");
        let mut support = Vec::with_capacity(k);
        while support.len() < k {
            let v = rng.gen_range(0..=amax);
            if !support.contains(&v) {
                support.push(v);
            }
        }
        support.sort_unstable();
        let dirichlet = |rng: &mut R| -> Vec<f64> {
            let raw: Vec<f64> = (0..k).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        };
        let rows = (0..n)
            .map(|_| match profile {
                Profile::Uniform => dirichlet(rng),
                Profile::SparseHeavy => {
                    if rng.gen_bool(0.5) {
                        let j = rng.gen_range(0..k);
                        let mut r = vec![0.02 / (k as f64 - 1.0).max(1.0); k];
                        r[j] = 0.0;
                        let rest: f64 = r.iter().sum();
                        r[j] = 1.0 - rest;
                        r
                    } else {
                        dirichlet(rng)
                    }
                }
                Profile::TwoCluster => {
                    let mut r = vec![0.0; k];
                    let j = rng.gen_range(0..k);
                    let j2 = if k == 1 { 0 } else { (j + 1) % k };
                    let w = rng.gen_range(0.2..0.8);
                    r[j] += w;
                    r[j2] += 1.0 - w;
                    r
                }
            })
            .collect();
        ASumSpec { support, rows }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Distribution of summand `i` as an `IntDist`.
    pub fn row_dist(&self, i: usize) -> IntDist {
        let a1 = self.support[0];
        let span = (self.support[self.k() - 1] - a1) as usize + 1;
        let mut pmf = vec![0.0f64; span];
        for (j, &a) in self.support.iter().enumerate() {
            pmf[(a - a1) as usize] += self.rows[i][j];
        }
        Dist::new(a1, pmf).expect("valid row")
    }

    /// Exact pmf of the sum under the default resource caps.
    pub fn exact_pmf(&self) -> Result<IntDist, SpecError> {
        self.exact_pmf_capped(DEFAULT_CELL_CAP, DEFAULT_COST_CAP)
    }

    /// Exact pmf of the sum. Two exact strategies: a dense sequential
    /// convolution when its estimated cost fits `cost_cap`, otherwise (for
    /// k <= 3, e.g. huge `a_k` with modest N) a windowed DP over the joint
    /// counts of the upper support values, scattered into the final span.
    pub fn exact_pmf_capped(&self, cell_cap: u64, cost_cap: u64) -> Result<IntDist, SpecError> {
        let n = self.n() as u128;
        let span = (self.support[self.k() - 1] - self.support[0]) as u128;
        let dense_cost = self.k() as u128 * span * n * n / 2 + n;
        if dense_cost <= cost_cap as u128 {
            return self.dense_pmf(cell_cap);
        }
        if self.k() <= 3 {
            return self.joint_counts_pmf(cell_cap);
        }
        Err(SpecError::CostCap { cost: dense_cost, cap: cost_cap })
    }

    fn dense_pmf(&self, cell_cap: u64) -> Result<IntDist, SpecError> {
        let mut acc: IntDist = Dist::delta(0);
        for i in 0..self.n() {
            acc = acc.convolve_capped(&self.row_dist(i), cell_cap)?.prune_tails(WINDOW_EPS);
        }
        Ok(acc)
    }

    /// Windowed DP over `(n_2, n_3)`, the counts of summands landing on the
    /// second and third support values. Exact up to edge pruning below the
    /// per-line [`WINDOW_EPS`] mass.
    fn joint_counts_pmf(&self, cell_cap: u64) -> Result<IntDist, SpecError> {
        let k = self.k();
        let joint = self.joint_counts(usize::MAX)?;
        // scatter into the value span
        let d2 = if k >= 2 { self.support[1] - self.support[0] } else { 0 };
        let d3 = if k >= 3 { self.support[2] - self.support[0] } else { 0 };
        let base = self.n() as i64 * self.support[0];
        let (b0, c0, table) = (joint.b0 as i64, joint.c0 as i64, &joint.table);
        let nb = table.len() as i64;
        let nc = if nb > 0 { table[0].len() as i64 } else { 0 };
        let lo = base + d2 * b0 + d3 * c0;
        let hi = base + d2 * (b0 + nb - 1) + d3 * (c0 + nc - 1);
        let cells = (hi - lo + 1) as u128;
        if cells > cell_cap as u128 {
            return Err(DistError::ResourceCap { cells, cap: cell_cap }.into());
        }
        let mut out = vec![0.0f64; cells as usize];
        for (bi, row) in table.iter().enumerate() {
            for (ci, &p) in row.iter().enumerate() {
                let v = d2 * (b0 + bi as i64) + d3 * (c0 + ci as i64);
                out[(base + v - lo) as usize] += p;
            }
        }
        Ok(Dist::new_unnormalized(lo, out)?)
    }

    /// Joint distribution of the counts `(n_2, n_3)` over a pruned window.
    /// Public because audits at huge `a_k` compare against hypotheses in this
    /// compact form. `max_cells` bounds the window area.
    pub fn joint_counts(&self, max_cells: usize) -> Result<JointCounts, SpecError> {
        let k = self.k();
        assert!(k <= 3, "joint counts path is for k <= 3");
        let mut table = vec![vec![1.0f64]];
        let (mut b0, mut c0) = (0usize, 0usize);
        let mut pruned = 0.0f64;
        for row in &self.rows {
            let p1 = row[0];
            let p2 = if k >= 2 { row[1] } else { 0.0 };
            let p3 = if k >= 3 { row[2] } else { 0.0 };
            let nb = table.len();
            let nc = table[0].len();
            let mut next = vec![vec![0.0f64; nc + 1]; nb + 1];
            for (bi, r) in table.iter().enumerate() {
                for (ci, &v) in r.iter().enumerate() {
                    if v > 0.0 {
                        next[bi][ci] += p1 * v;
                        next[bi + 1][ci] += p2 * v;
                        next[bi][ci + 1] += p3 * v;
                    }
                }
            }
            table = next;
            // trim negligible edge lines to keep the window near the bulk
            loop {
                let nb = table.len();
                let nc = table[0].len();
                if nb > 1 && table[0].iter().sum::<f64>() < WINDOW_EPS {
                    pruned += table.remove(0).iter().sum::<f64>();
                    b0 += 1;
                } else if nb > 1 && table[nb - 1].iter().sum::<f64>() < WINDOW_EPS {
                    pruned += table.pop().unwrap().iter().sum::<f64>();
                } else if nc > 1 && table.iter().map(|r| r[0]).sum::<f64>() < WINDOW_EPS {
                    pruned += table.iter_mut().map(|r| r.remove(0)).sum::<f64>();
                    c0 += 1;
                } else if nc > 1 && table.iter().map(|r| r[nc - 1]).sum::<f64>() < WINDOW_EPS {
                    pruned += table.iter_mut().map(|r| r.pop().unwrap()).sum::<f64>();
                } else {
                    break;
                }
            }
            let cells = table.len() * table[0].len();
            if cells > max_cells {
                return Err(DistError::ResourceCap { cells: cells as u128, cap: max_cells as u64 }.into());
            }
        }
        Ok(JointCounts { b0, c0, table, pruned })
    }

    /// Direct per-row sampler; usable when the exact pmf is out of reach.
    pub fn sampler(&self) -> SpecSampler {
        let cdfs = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = 0.0;
                r.iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();
        SpecSampler { support: self.support.clone(), cdfs }
    }

    /// Zero-moding: shift each summand by its mode (ties to the smallest
    /// support value) so 0 becomes a most likely outcome.
    pub fn zero_mode_decompose(&self) -> ZeroModeDecomposition {
        let k = self.k();
        let mut v = 0i64;
        let mut moded_rows = Vec::with_capacity(self.n());
        // distinct pairwise support differences
        let mut q_values: Vec<i64> = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let q = self.support[j] - self.support[i];
                if !q_values.contains(&q) {
                    q_values.push(q);
                }
            }
        }
        q_values.sort_unstable();
        let mut weights = vec![0.0f64; q_values.len()];
        for row in &self.rows {
            let mut mode = 0usize;
            for j in 1..k {
                if row[j] > row[mode] {
                    mode = j;
                }
            }
            let m = self.support[mode];
            v += m;
            let shifted: Vec<(i64, f64)> =
                self.support.iter().zip(row).map(|(&a, &p)| (a - m, p)).collect();
            for &(val, p) in &shifted {
                if val != 0 {
                    let idx = q_values.binary_search(&val.abs()).expect("difference is a q-value");
                    weights[idx] += p;
                }
            }
            let lo = shifted.iter().map(|&(x, _)| x).min().unwrap();
            let hi = shifted.iter().map(|&(x, _)| x).max().unwrap();
            let mut pmf = vec![0.0f64; (hi - lo) as usize + 1];
            for &(val, p) in &shifted {
                pmf[(val - lo) as usize] += p;
            }
            moded_rows.push(Dist::new(lo, pmf).expect("valid moded row"));
        }
        ZeroModeDecomposition { v, q_values, weights, moded_rows }
    }
}

/// Joint law of the counts of the second and third support values over a
/// pruned rectangular window; `pruned` is the discarded edge mass.
#[derive(Debug, Clone)]
pub struct JointCounts {
    pub b0: usize,
    pub c0: usize,
    pub table: Vec<Vec<f64>>,
    pub pruned: f64,
}

/// Per-row inverse-cdf sampler over the common support.
#[derive(Debug, Clone)]
pub struct SpecSampler {
    support: Vec<i64>,
    cdfs: Vec<Vec<f64>>,
}

impl SpecSampler {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> i64 {
        let mut total = 0i64;
        for cdf in &self.cdfs {
            let u: f64 = rng.gen();
            let j = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
            total += self.support[j];
        }
        total
    }
}

/// Output of zero-moding: `S = S' + V` with each summand of `S'` having its
/// mode at 0; `weights[a]` is the total probability of `+-q_values[a]` across
/// summands.
#[derive(Debug, Clone)]
pub struct ZeroModeDecomposition {
    pub v: i64,
    pub q_values: Vec<i64>,
    pub weights: Vec<f64>,
    pub moded_rows: Vec<IntDist>,
}

/// First position (1-based) where the ascending-sorted weights exceed the
/// schedule, or `K + 1` when none does.
pub fn largeness_index(sorted_weights: &[f64], schedule: &[f64]) -> Result<usize, SpecError> {
    if sorted_weights.len() != schedule.len() {
        return Err(SpecError::RowLength {
            row: 0,
            len: schedule.len(),
            k: sorted_weights.len(),
        });
    }
    for (i, (&c, &t)) in sorted_weights.iter().zip(schedule).enumerate() {
        if c > t {
            return Ok(i + 1);
        }
    }
    Ok(sorted_weights.len() + 1)
}

/// General-k threshold schedule `t_a = (1/eps)^(2^a)`, `a = 1..=len`.
pub fn general_schedule(eps: f64, len: usize) -> Vec<f64> {
    (1..=len as u32).map(|a| (1.0 / eps).powf(2f64.powi(a as i32))).collect()
}

/// k=3 threshold schedule `t_l = (1/eps)^(C^l)`, `l = 1..=len`.
pub fn k3_schedule(eps: f64, c: f64, len: usize) -> Vec<f64> {
    (1..=len as u32).map(|l| (1.0 / eps).powf(c.powi(l as i32))).collect()
}
