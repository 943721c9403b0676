//! Lower-bound instance families: the Fibonacci modular family and the
//! scaled-binomial-mod-prime family, with exact diagnostics (pairwise TV/KL,
//! flatness, spacing, equidistribution counts) and an empirical
//! distinguishing experiment.

use crate::dist::{Dist, DistError};
use crate::IntDist;
use rand::seq::index::sample as index_sample;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HardError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("fibonacci({0}) overflows i64")]
    FibOverflow(u32),
    #[error("no prime at most {0}")]
    NoPrime(i64),
    #[error("need count {count} < a3 - 1 = {limit}")]
    TooManyMultipliers { count: usize, limit: i64 },
    #[error("bad family parameters: {0}")]
    BadParams(String),
}

/// f_0 = f_1 = 1, f_2 = 2, ...
pub fn fibonacci(n: u32) -> Result<i64, HardError> {
    let (mut a, mut b) = (1i64, 1i64);
    for _ in 0..n {
        let next = a.checked_add(b).ok_or(HardError::FibOverflow(n))?;
        a = b;
        b = next;
    }
    Ok(a)
}

/// Centered binomial `W(a) = Bin(2a^2, 1/2) - a^2`.
pub fn w_dist(a: i64) -> Result<IntDist, HardError> {
    if a <= 0 {
        return Err(HardError::BadParams(format!("w_dist needs a >= 1, got {a}")));
    }
    let n = 2 * (a as u64) * (a as u64);
    let d: IntDist = Dist::binomial(n, 0.5)?;
    Ok(d.shift(-(a * a)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FibMember {
    pub t: u32,
    /// `floor(p / (c5 * f_t))`, the U-scale parameter; 0 means degenerate.
    pub a_u: i64,
    pub dist: Option<IntDist>,
}

/// Members `S_t = (U_t + p V_t) mod q` over residues `{0..q-1}`, with
/// `p = f_L`, `q = f_{L+1}`, `U_t = W(floor(p / (c5 f_t)))`, `V_t = W(f_t)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FibFamily {
    pub l: u32,
    pub p: i64,
    pub q: i64,
    pub c5: i64,
    pub t_range: (u32, u32),
    pub members: Vec<FibMember>,
}

pub fn build_fib_family(l: u32, t_lo: u32, t_hi: u32, c5: i64) -> Result<FibFamily, HardError> {
    if !(1 <= t_lo && t_lo <= t_hi && t_hi <= l) || c5 <= 0 {
        return Err(HardError::BadParams(format!(
            "need 1 <= t_lo <= t_hi <= L and c5 > 0, got L={l} t=[{t_lo},{t_hi}] c5={c5}"
        )));
    }
    let p = fibonacci(l)?;
    let q = fibonacci(l + 1)?;
    let mut members = Vec::new();
    for t in t_lo..=t_hi {
        let f_t = fibonacci(t)?;
        let a_u = p / (c5 * f_t);
        let dist = if a_u == 0 {
            None
        } else {
            let u = w_dist(a_u)?;
            let v = w_dist(f_t)?;
            let s = u.convolve_capped(&v.scale_capped(p, u64::MAX)?, u64::MAX)?;
            Some(s.mod_reduce(q)?)
        };
        members.push(FibMember { t, a_u, dist });
    }
    Ok(FibFamily { l, p, q, c5, t_range: (t_lo, t_hi), members })
}

impl FibFamily {
    pub fn valid_members(&self) -> Vec<&IntDist> {
        self.members.iter().filter_map(|m| m.dist.as_ref()).collect()
    }
}

/// Members `S'_r = (r * S_2 mod a3)` for distinct random multipliers `r`,
/// with `S_2 = Bin(N', 1/2) + a3 - (N'/2 - X/2)` where `N' = ceil((a3/(cK))^2)`
/// and `X = ceil(c sqrt(N'))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModFamily {
    pub a3: i64,
    pub n_prime: u64,
    pub x: i64,
    pub k_const: i64,
    pub c: i64,
    pub base: IntDist,
    pub multipliers: Vec<i64>,
    pub members: Vec<IntDist>,
}

fn is_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

pub fn largest_prime_at_most(n: i64) -> Result<i64, HardError> {
    (2..=n).rev().find(|&m| is_prime(m)).ok_or(HardError::NoPrime(n))
}

/// `(r * d) mod m` folded exactly onto `{0..m-1}`.
fn scaled_mod(d: &IntDist, r: i64, m: i64) -> Result<IntDist, HardError> {
    let mut pmf = vec![0.0f64; m as usize];
    for (v, pr) in d.entries() {
        let idx = ((r as i128 * v as i128).rem_euclid(m as i128)) as usize;
        pmf[idx] += pr;
    }
    Ok(Dist::new(0, pmf)?)
}

pub fn build_mod_family(
    a_max: i64,
    k_const: i64,
    c: i64,
    count: usize,
    seed: u64,
) -> Result<ModFamily, HardError> {
    if k_const <= 0 || c <= 0 {
        return Err(HardError::BadParams(format!("k_const={k_const}, c={c}")));
    }
    let a3 = largest_prime_at_most(a_max)?;
    if count as i64 >= a3 - 1 {
        return Err(HardError::TooManyMultipliers { count, limit: a3 - 1 });
    }
    let n_prime = ((a3 as f64 / (c * k_const) as f64).powi(2)).ceil() as u64;
    let x = (c as f64 * (n_prime as f64).sqrt()).ceil() as i64;
    let shift = a3 - (n_prime as i64 / 2 - x / 2);
    let base: IntDist = Dist::binomial(n_prime, 0.5)?.shift(shift);
    let mut rng = crate::rng::stream(seed, "mod-family/multipliers");
    let mut multipliers: Vec<i64> = index_sample(&mut rng, (a3 - 1) as usize, count)
        .into_iter()
        .map(|i| i as i64 + 1)
        .collect();
    multipliers.sort_unstable();
    let members = multipliers
        .iter()
        .map(|&r| scaled_mod(&base, r, a3))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ModFamily { a3, n_prime, x, k_const, c, base, multipliers, members })
}

impl ModFamily {
    /// The idealized member `U'_r`: uniform on `{r * x mod a3 : x in 1..=X}`.
    pub fn idealized_member(&self, r: i64) -> Result<IntDist, HardError> {
        let mut pmf = vec![0.0f64; self.a3 as usize];
        for xv in 1..=self.x {
            let idx = ((r as i128 * xv as i128).rem_euclid(self.a3 as i128)) as usize;
            pmf[idx] += 1.0 / self.x as f64;
        }
        Ok(Dist::new(0, pmf)?)
    }
}

/// `|{(x, y) in X_set x [Z+1, Z+Y] : r x = y mod p}|` by direct loop.
pub fn n_rp_count(r: i64, p: i64, x_set: &[i64], y: i64, z: i64) -> u64 {
    assert!(p >= 2, "modulus must be >= 2");
    let mut count = 0u64;
    for &x in x_set {
        let rx = ((r as i128 * x as i128).rem_euclid(p as i128)) as i64;
        for yy in (z + 1)..=(z + y) {
            if yy.rem_euclid(p) == rx {
                count += 1;
            }
        }
    }
    count
}

/// Exhaustive tail census for the equidistribution bound: how many
/// multipliers `r` have `N_{r,X} >= 2 X^2 / a3`, with `X_set = {1..X}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquidistributionTail {
    pub a3: i64,
    pub n_prime: u64,
    pub x: i64,
    pub threshold: f64,
    pub violating: u64,
    pub total: u64,
}

pub fn equidistribution_tail(a_max: i64, k_const: i64, c: i64) -> Result<EquidistributionTail, HardError> {
    let a3 = largest_prime_at_most(a_max)?;
    let n_prime = ((a3 as f64 / (c * k_const) as f64).powi(2)).ceil() as u64;
    let x = (c as f64 * (n_prime as f64).sqrt()).ceil() as i64;
    let threshold = 2.0 * (x * x) as f64 / a3 as f64;
    let mut violating = 0u64;
    // N_{r,X} = |{(xv, yv) in [1,X]^2 : r xv = yv mod a3}|, counted by
    // residue membership rather than the full double loop
    for r in 1..a3 {
        let mut n_rx = 0u64;
        for xv in 1..=x {
            let res = ((r as i128 * xv as i128).rem_euclid(a3 as i128)) as i64;
            if res >= 1 && res <= x {
                n_rx += 1;
            }
        }
        if (n_rx as f64) >= threshold {
            violating += 1;
        }
    }
    Ok(EquidistributionTail { a3, n_prime, x, threshold, violating, total: (a3 - 1) as u64 })
}

/// Lee metric on Z_q: min |j| with a = b + j mod q.
pub fn lee_metric(a: i64, b: i64, q: i64) -> i64 {
    let r = (a - b).rem_euclid(q);
    r.min(q - r)
}

/// Minimum of `rho_q(p v, p v') * max(|v|,|v'|) / q` over distinct
/// `v, v' in [-v_max, v_max]` — the fitted spacing constant c1.
pub fn min_spacing_ratio(l: u32, v_max: i64) -> Result<f64, HardError> {
    let p = fibonacci(l)?;
    let q = fibonacci(l + 1)?;
    let mut min_ratio = f64::INFINITY;
    for v in -v_max..=v_max {
        for vp in (v + 1)..=v_max {
            let rho = lee_metric((p as i128 * v as i128).rem_euclid(q as i128) as i64,
                                 (p as i128 * vp as i128).rem_euclid(q as i128) as i64,
                                 q);
            let denom = v.abs().max(vp.abs()).max(1);
            let ratio = rho as f64 * denom as f64 / q as f64;
            if ratio < min_ratio {
                min_ratio = ratio;
            }
        }
    }
    Ok(min_ratio)
}

/// Exact pairwise diagnostics over a family's members, all on the shared
/// residue domain `{0..domain-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyDiagnostics {
    pub labels: Vec<String>,
    pub domain: i64,
    pub tv: Vec<Vec<f64>>,
    /// `None` marks a pair with a zero cell under the second argument.
    pub kl: Vec<Vec<Option<f64>>>,
    pub min_pmf: Vec<f64>,
    pub max_pmf: Vec<f64>,
    /// max over members of (max pmf) / (min pmf); infinite if any cell is 0.
    pub flatness_ratio: f64,
}

pub fn family_diagnostics(members: &[&IntDist], labels: &[String], domain: i64) -> FamilyDiagnostics {
    let n = members.len();
    let mut tv = vec![vec![0.0; n]; n];
    let mut kl = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                kl[i][j] = Some(0.0);
                continue;
            }
            tv[i][j] = members[i].tv_distance(members[j]);
            kl[i][j] = match members[i].kl_divergence(members[j]) {
                crate::dist::KlDivergence::Finite(v) => Some(v),
                crate::dist::KlDivergence::Infinite => None,
            };
        }
    }
    let mut min_pmf = Vec::with_capacity(n);
    let mut max_pmf = Vec::with_capacity(n);
    let mut flatness_ratio: f64 = 1.0;
    for m in members {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for x in 0..domain {
            let p = m.pmf_at(x);
            lo = lo.min(p);
            hi = hi.max(p);
        }
        flatness_ratio = flatness_ratio.max(if lo > 0.0 { hi / lo } else { f64::INFINITY });
        min_pmf.push(lo);
        max_pmf.push(hi);
    }
    FamilyDiagnostics { labels: labels.to_vec(), domain, tv, kl, min_pmf, max_pmf, flatness_ratio }
}

impl FamilyDiagnostics {
    /// Rows `pair_i,pair_j,tv,kl` (kl empty when undefined).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,tv,kl\n");
        for i in 0..self.labels.len() {
            for j in (i + 1)..self.labels.len() {
                let kl = self.kl[i][j].map(|v| format!("{v}")).unwrap_or_default();
                out.push_str(&format!("{},{},{},{kl}\n", self.labels[i], self.labels[j], self.tv[i][j]));
            }
        }
        out
    }

    pub fn min_pairwise_tv(&self) -> f64 {
        let n = self.labels.len();
        let mut m = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                m = m.min(self.tv[i][j]);
            }
        }
        m
    }

    pub fn max_pairwise_kl(&self) -> Option<f64> {
        let n = self.labels.len();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                m = m.max(self.kl[i][j]?);
            }
        }
        Some(m)
    }
}

/// Maximum-likelihood identification error per sample budget: a random
/// member is drawn, `m` i.i.d. samples are taken, the classifier picks the
/// member with the highest log-likelihood (lowest index on ties).
pub fn distinguishing_experiment(
    members: &[&IntDist],
    ms: &[usize],
    trials: usize,
    rng: &mut ChaCha12Rng,
) -> Vec<(usize, f64)> {
    assert!(members.len() >= 2, "need at least two members");
    let samplers: Vec<_> = members.iter().map(|m| m.sampler()).collect();
    let mut table = Vec::with_capacity(ms.len());
    for &m in ms {
        let mut errors = 0usize;
        for _ in 0..trials {
            let truth = rng.gen_range(0..members.len());
            let draws = samplers[truth].draw_n(rng, m);
            let mut best = 0usize;
            let mut best_ll = f64::NEG_INFINITY;
            for (i, cand) in members.iter().enumerate() {
                let ll: f64 = draws.iter().map(|&x| cand.pmf_at(x).max(1e-300).ln()).sum();
                if ll > best_ll {
                    best_ll = ll;
                    best = i;
                }
            }
            if best != truth {
                errors += 1;
            }
        }
        table.push((m, errors as f64 / trials as f64));
    }
    table
}
