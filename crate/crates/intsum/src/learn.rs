//! The learners: sparse case, k=3, general k, scaled-PBD sub-learners, the
//! mod-a_k reduction, and the unknown-support learners. Each builds a pool of
//! candidate hypotheses from probe-driven guesses and lets the selection
//! tournament arbitrate; every sample size is a function of the accuracy
//! parameters and budgets only, never of the support magnitudes.

use crate::dist::{Dist, DistError, DistSampler, DEFAULT_CELL_CAP};
use crate::eval::{EvalError, HypothesisEvaluator};
use crate::kernel::{KernelError, KernelHypothesis, SmootherSpec};
use crate::rng::stream;
use crate::select::{select, Candidate, SelectConfig, SelectError, SelectReport};
use crate::IntDist;
use num_integer::Integer;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("r1={0} and r2={1} must be coprime")]
    NotCoprime(i64, i64),
    #[error("u={u} outside [0, {r1}*{r2})")]
    OutOfRange { u: i64, r1: i64, r2: i64 },
    #[error("bad support: {0}")]
    BadSupport(String),
    #[error("guess space overflow: {0}")]
    Budget(String),
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Knobs shared by all learners. Defaults mirror the constants the paper
/// leaves symbolic; acceptance audits pin behavior, not the constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// k=3 threshold schedule constant `C` in `t_l = (1/eps)^(C^l)`.
    pub schedule_c: f64,
    /// Heaviness parameter `R`; `None` uses `K^25 / eps^32` clamped to 1e12.
    pub heaviness_r: Option<f64>,
    /// Two-draw variance probes are repeated this many times.
    pub probe_repeats: usize,
    /// Budget on gridding points; exceeding it coarsens the grid (logged).
    pub max_grid: usize,
    /// Retained samples `T` for kernel hypotheses.
    pub kernel_atoms: usize,
    /// Exponent `e` in the mixing variance clamp `max(1/eps^e, q/eps)`.
    pub mix_var_exponent: f64,
    /// Budget constant for the selection tournament.
    pub select_constant: f64,
    /// Cap on per-candidate draws inside selection.
    pub select_candidate_draws: usize,
    pub cell_cap: u64,
    /// Spans above this evaluate lazily instead of materializing.
    pub transient_cells: u64,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            schedule_c: 8.0,
            heaviness_r: None,
            probe_repeats: 64,
            max_grid: 64,
            kernel_atoms: 30_000,
            mix_var_exponent: 8.0,
            select_constant: 32.0,
            select_candidate_draws: 4000,
            cell_cap: DEFAULT_CELL_CAP,
            transient_cells: 30_000_000,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self, eps: f64, delta: f64) -> Result<(), LearnError> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(LearnError::BadConfig(format!("eps={eps} outside (0, 0.5)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LearnError::BadConfig(format!("delta={delta} outside (0, 1)")));
        }
        if self.probe_repeats == 0 || self.max_grid == 0 || self.kernel_atoms == 0 {
            return Err(LearnError::BadConfig("budgets must be >= 1".into()));
        }
        Ok(())
    }

    pub fn heaviness(&self, k: usize, eps: f64) -> f64 {
        self.heaviness_r
            .unwrap_or_else(|| ((k as f64).powi(25) / eps.powi(32)).min(1e12))
    }

    fn select_config(&self) -> SelectConfig {
        SelectConfig {
            budget_constant: self.select_constant,
            candidate_draw_cap: self.select_candidate_draws,
        }
    }
}

/// A learned distribution in one of the serializable hypothesis families.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Hypothesis {
    Empirical { dist: IntDist },
    Kernel { hypothesis: KernelHypothesis },
    TranslatedPoisson { mu: f64, var: f64 },
    DiscretizedGaussian { mu: f64, var: f64 },
    PointMixture { dist: IntDist },
}

impl Hypothesis {
    /// Exact pmf of the hypothesis when its span fits the cap.
    pub fn to_dist(&self, cap: u64) -> Result<IntDist, LearnError> {
        match self {
            Hypothesis::Empirical { dist } | Hypothesis::PointMixture { dist } => Ok(dist.clone()),
            Hypothesis::Kernel { hypothesis } => {
                Ok(HypothesisEvaluator::new(hypothesis)?.materialize(cap)?)
            }
            Hypothesis::TranslatedPoisson { mu, var } => Ok(Dist::translated_poisson(*mu, *var)?),
            Hypothesis::DiscretizedGaussian { mu, var } => {
                Ok(Dist::discretized_gaussian(*mu, *var)?)
            }
        }
    }
}

/// Per-run accounting: every sampler invocation, guess grid, and degradation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunLog {
    pub algo: String,
    pub target_draws: u64,
    pub candidates: usize,
    pub select_target_draws: usize,
    pub select_candidate_draws: usize,
    pub grid_sizes: Vec<usize>,
    pub degradations: Vec<String>,
    pub notes: Vec<String>,
    pub winner: usize,
    /// recovered lattice step, for the gcd learner
    pub gcd: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnOutcome {
    pub hypothesis: Hypothesis,
    pub log: RunLog,
}

/// Target sample access: must return exactly `n` fresh draws.
pub type TargetFn<'a> = dyn FnMut(usize) -> Vec<i64> + 'a;

/// Wraps a target and counts every draw (the run-log audit hook).
pub struct CountingTarget<'a> {
    inner: &'a mut TargetFn<'a>,
    pub draws: u64,
}

impl<'a> CountingTarget<'a> {
    pub fn new(inner: &'a mut TargetFn<'a>) -> Self {
        CountingTarget { inner, draws: 0 }
    }

    pub fn take(&mut self, n: usize) -> Vec<i64> {
        self.draws += n as u64;
        let out = (self.inner)(n);
        assert_eq!(out.len(), n, "target sampler must honor the requested count");
        out
    }
}

/// Candidate prepared for the tournament: materialized densely when the span
/// is small enough to keep, sampled structurally otherwise.
pub struct PreparedCandidate {
    pub hypothesis: Hypothesis,
    backing: Backing,
}

enum Backing {
    Dense { dist: IntDist, sampler: DistSampler },
    KernelLazy { hypothesis: KernelHypothesis, eval: HypothesisEvaluator, transient: Option<u64> },
}

impl PreparedCandidate {
    pub fn prepare(hypothesis: Hypothesis, cfg: &LearnerConfig) -> Result<Self, LearnError> {
        let backing = match &hypothesis {
            Hypothesis::Kernel { hypothesis: h } => {
                let eval = HypothesisEvaluator::new(h)?;
                let span = eval.support_span();
                if span <= 1_000_000 {
                    let dist = eval.materialize(cfg.cell_cap)?;
                    let sampler = dist.sampler();
                    Backing::Dense { dist, sampler }
                } else {
                    let transient =
                        (span <= cfg.transient_cells as u128).then_some(cfg.transient_cells);
                    Backing::KernelLazy { hypothesis: h.clone(), eval, transient }
                }
            }
            other => {
                let dist = other.to_dist(cfg.cell_cap)?;
                let sampler = dist.sampler();
                Backing::Dense { dist, sampler }
            }
        };
        Ok(PreparedCandidate { hypothesis, backing })
    }
}

impl Candidate for PreparedCandidate {
    fn draws(&self, rng: &mut ChaCha12Rng, n: usize) -> Vec<i64> {
        match &self.backing {
            Backing::Dense { sampler, .. } => sampler.draw_n(rng, n),
            Backing::KernelLazy { hypothesis, .. } => {
                crate::eval::sample_hypothesis(hypothesis, rng, n)
            }
        }
    }

    fn eval_batch(&self, xs: &[i64]) -> Vec<f64> {
        match &self.backing {
            Backing::Dense { dist, .. } => xs.iter().map(|&x| dist.pmf_at(x)).collect(),
            Backing::KernelLazy { eval, transient, .. } => {
                // materialize transiently when affordable: one dense pass
                // beats per-query atom scans for large query batches
                if let Some(cap) = transient {
                    if let Ok(dense) = eval.materialize(*cap) {
                        return xs.iter().map(|&x| dense.pmf_at(x)).collect();
                    }
                }
                xs.iter().map(|&x| eval.eval(x)).collect()
            }
        }
    }
}

/// Shared tail of every learner: prepare candidates, run the tournament,
/// assemble the outcome.
fn arbitrate(
    algo: &str,
    target: &mut CountingTarget,
    pool: Vec<Hypothesis>,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
    mut log: RunLog,
) -> Result<LearnOutcome, LearnError> {
    let prepared: Vec<PreparedCandidate> = pool
        .into_iter()
        .map(|h| PreparedCandidate::prepare(h, cfg))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&dyn Candidate> = prepared.iter().map(|p| p as &dyn Candidate).collect();
    let mut rng = stream(cfg.seed, &format!("select/{algo}"));
    let report: SelectReport = select(
        &mut |n| target.take(n),
        &refs,
        eps,
        delta,
        &cfg.select_config(),
        &mut rng,
    )?;
    log.algo = algo.to_string();
    log.candidates = refs.len();
    log.select_target_draws = report.target_draws;
    log.select_candidate_draws = report.candidate_draws_each;
    log.winner = report.winner;
    log.target_draws = target.draws;
    let hypothesis = prepared.into_iter().nth(report.winner).unwrap().hypothesis;
    Ok(LearnOutcome { hypothesis, log })
}

/// Empirical learner for targets essentially supported on `s` points:
/// `m = ceil(8 s / eps^2 * ln(2 s / delta))` draws, TV <= 2 eps w.h.p.
pub fn learn_sparse(
    target: &mut TargetFn,
    s: usize,
    eps: f64,
    delta: f64,
) -> Result<LearnOutcome, LearnError> {
    let s = s.max(1);
    let m = (8.0 * s as f64 / (eps * eps) * (2.0 * s as f64 / delta).ln()).ceil() as usize;
    let mut counting = CountingTarget::new(target);
    let samples = counting.take(m);
    let hypothesis = empirical_hypothesis(&samples)?;
    let log = RunLog {
        algo: "sparse".into(),
        target_draws: counting.draws,
        candidates: 1,
        notes: vec![format!("m={m} for s={s}")],
        ..RunLog::default()
    };
    Ok(LearnOutcome { hypothesis, log })
}

/// Empirical law of a sample multiset as a hypothesis; wide spans fall back
/// to the atom representation (a kernel with a point smoother).
fn empirical_hypothesis(samples: &[i64]) -> Result<Hypothesis, LearnError> {
    let lo = samples.iter().min().copied().unwrap_or(0);
    let hi = samples.iter().max().copied().unwrap_or(0);
    if (hi - lo) < 1_000_000 {
        Ok(Hypothesis::Empirical { dist: crate::kernel::empirical_dist(samples)? })
    } else {
        let smoother = SmootherSpec::new(vec![1], vec![0])?;
        Ok(Hypothesis::Kernel { hypothesis: KernelHypothesis::new(samples.to_vec(), smoother)? })
    }
}

/// Decompose `u = v1*r1 + v2*r2` with `|v1| < r2`, `|v2| < r1`, for coprime
/// `r1, r2` and `0 <= u < r1*r2`. Deterministic: `v1 = u * r1^-1 mod r2`.
pub fn bezout_decompose(u: i64, r1: i64, r2: i64) -> Result<(i64, i64), LearnError> {
    if r1 <= 0 || r2 <= 0 || r1.gcd(&r2) != 1 {
        return Err(LearnError::NotCoprime(r1, r2));
    }
    if u < 0 || (u as i128) >= r1 as i128 * r2 as i128 {
        return Err(LearnError::OutOfRange { u, r1, r2 });
    }
    let e = i64::extended_gcd(&r1, &r2);
    // e.x * r1 + e.y * r2 = 1
    let v1 = (u as i128 * e.x.rem_euclid(r2) as i128).rem_euclid(r2 as i128) as i64;
    let v2 = (u - v1 * r1) / r2;
    debug_assert_eq!(v1 * r1 + v2 * r2, u);
    Ok((v1, v2))
}

/// Centered remainder in `[-m/2, m/2]`.
fn centered_rem(d: i64, m: i64) -> i64 {
    let r = d.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

/// Median-based sigma estimate from |differences| of i.i.d. pairs:
/// `median(|X - Y|) ~= 0.954 sigma` for near-Gaussian laws.
fn sigma_from_abs_diffs(mut diffs: Vec<i64>) -> f64 {
    if diffs.is_empty() {
        return 0.0;
    }
    diffs.sort_unstable();
    let med = diffs[diffs.len() / 2] as f64;
    med * 1.0483
}

/// Two-scale probe: split each pair difference `d ~= small*u + large*v` and
/// return `(sigma_small, sigma_large)` estimates. Valid when the scales are
/// separated; the candidate pool absorbs the cases where they are not.
fn probe_two_scales(pairs: &[(i64, i64)], small: i64, large: i64) -> (f64, f64) {
    let mut us = Vec::with_capacity(pairs.len());
    let mut vs = Vec::with_capacity(pairs.len());
    for &(x, y) in pairs {
        let d = x - y;
        let r = centered_rem(d, large);
        let v = (d - r) / large;
        us.push((r.abs() as f64 / small as f64).round() as i64);
        vs.push(v.abs());
    }
    (sigma_from_abs_diffs(us), sigma_from_abs_diffs(vs))
}

fn sample_sigma(samples: &[i64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&x| x as f64).sum::<f64>() / n;
    let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

const PROBE_SCALES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

fn kernel_candidate(
    atoms: &[i64],
    weights: Vec<i64>,
    radii: Vec<i64>,
) -> Result<Hypothesis, LearnError> {
    let smoother = SmootherSpec::new(weights, radii)?;
    Ok(Hypothesis::Kernel { hypothesis: KernelHypothesis::new(atoms.to_vec(), smoother)? })
}

/// Geometric grid of `count` sigma guesses spanning `[lo, hi]`; coarsened by
/// doubling the step until it fits `max_grid` (degradations reported).
fn geometric_grid(lo: f64, hi: f64, count: usize, max_grid: usize) -> (Vec<f64>, bool) {
    let lo = lo.max(1.0);
    let hi = hi.max(lo * (1.0 + 1e-9));
    let mut count = count.max(2);
    let mut degraded = false;
    while count > max_grid {
        count = count.div_ceil(2);
        degraded = true;
    }
    let step = (hi / lo).powf(1.0 / (count - 1) as f64);
    ((0..count).map(|i| lo * step.powi(i as i32)).collect(), degraded)
}

/// Learner for targets close to `p * S_p + q * S_q + V` with independent
/// (signed) PBDs `S_p, S_q`. Branches: the modular variance probe (small
/// `sigma_q`), multiplicative gridding of `sigma_q`, and the single-PBD
/// collapse; every branch contributes candidates and selection arbitrates.
pub fn learn_two_scaled_pbds(
    target: &mut TargetFn,
    p: i64,
    q: i64,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    if p <= 0 || q <= 0 {
        return Err(LearnError::BadSupport(format!("scales must be positive: p={p} q={q}")));
    }
    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();

    let probe_draws = counting.take(2 * cfg.probe_repeats);
    let pairs: Vec<(i64, i64)> =
        probe_draws.chunks(2).map(|c| (c[0], c[1])).collect();
    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);
    let (lo_scale, hi_scale) = if p <= q { (p, q) } else { (q, p) };
    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];

    // (i) modular probe: sigma_q recovered from q^-1 (s3 - s4) mod p when
    // sigma_q << p; each probe pair contributes a guess
    if p >= 2 && q.gcd(&p) == 1 {
        let qinv = i64::extended_gcd(&q.rem_euclid(p), &p).x.rem_euclid(p);
        let mut guesses: Vec<i64> = pairs
            .iter()
            .take(16)
            .map(|&(a, b)| centered_rem((qinv as i128 * (a - b) as i128).rem_euclid(p as i128) as i64, p).abs().max(1))
            .collect();
        guesses.sort_unstable();
        guesses.dedup();
        log.grid_sizes.push(guesses.len());
        for sq in guesses {
            let sp = ((sigma_tot * sigma_tot - (q * sq) as f64 * (q * sq) as f64).max(1.0)).sqrt()
                / p as f64;
            pool.push(kernel_candidate(
                &atoms,
                vec![p, q],
                vec![SmootherSpec::radius(eps, sp, 2), SmootherSpec::radius(eps, sq as f64, 2)],
            )?);
        }
    }

    // (ii) gridding sigma_q over a multiplicative grid of O(log(1/eps)/eps)
    // points, coarsened to the budget
    let want = ((1.0 / eps).ln() / eps).ceil() as usize;
    let (grid, degraded) = geometric_grid(1.0, 4.0 * sigma_tot / q as f64, want, cfg.max_grid);
    if degraded {
        log.degradations.push(format!("sigma_q grid coarsened from {want} to {}", grid.len()));
    }
    log.grid_sizes.push(grid.len());
    for &sq in &grid {
        let sp =
            ((sigma_tot * sigma_tot - (q as f64 * sq).powi(2)).max(1.0)).sqrt() / p as f64;
        pool.push(kernel_candidate(
            &atoms,
            vec![p, q],
            vec![SmootherSpec::radius(eps, sp, 2), SmootherSpec::radius(eps, sq, 2)],
        )?);
    }

    // (iii) collapse to a single PBD on the combined lattice
    let g = lo_scale.gcd(&hi_scale);
    for s in PROBE_SCALES {
        pool.push(kernel_candidate(
            &atoms,
            vec![g],
            vec![SmootherSpec::radius(eps, sigma_tot * s / g as f64, 1)],
        )?);
    }

    let _ = probe_two_scales(&pairs, lo_scale, hi_scale); // probes logged below
    log.notes.push(format!("sigma_tot={sigma_tot:.2}"));
    arbitrate("two-scaled-pbds", &mut counting, pool, eps, delta, cfg, log)
}

/// Learner for `p*S_p + q*S_q + r*S_r` with `r = p + q`. When the probed
/// `sigma_r` is large relative to `eps^5 * sigma_p` the r-scale is gridded
/// explicitly; otherwise the r-term is absorbed into the q-term and the
/// two-scale pool is reused. Both branches always enter the pool.
pub fn learn_three_scaled_pbds(
    target: &mut TargetFn,
    p: i64,
    q: i64,
    r: i64,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    if r != p + q {
        return Err(LearnError::BadSupport(format!("need r = p + q, got {p} + {q} != {r}")));
    }
    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();
    let probe_draws = counting.take(2 * cfg.probe_repeats);
    let pairs: Vec<(i64, i64)> = probe_draws.chunks(2).map(|c| (c[0], c[1])).collect();
    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);
    let (s_small, s_large) = probe_two_scales(&pairs, p.min(q), r);

    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];
    // explicit r-scale gridding branch
    let (grid, degraded) = geometric_grid(1.0, 4.0 * sigma_tot / r as f64, 8, cfg.max_grid);
    if degraded {
        log.degradations.push("sigma_r grid coarsened".into());
    }
    log.grid_sizes.push(grid.len());
    for &sr in &grid {
        for s in [0.5, 1.0, 2.0] {
            let rest = ((sigma_tot * sigma_tot - (r as f64 * sr).powi(2)).max(1.0)).sqrt();
            pool.push(kernel_candidate(
                &atoms,
                vec![p, q, r],
                vec![
                    SmootherSpec::radius(eps, rest * s / p as f64, 3),
                    SmootherSpec::radius(eps, rest * s / q as f64, 3),
                    SmootherSpec::radius(eps, sr, 3),
                ],
            )?);
        }
    }
    // absorbed branch: treat the r-term as part of the q-scale
    for s in PROBE_SCALES {
        pool.push(kernel_candidate(
            &atoms,
            vec![p, q],
            vec![
                SmootherSpec::radius(eps, s_small.max(1.0) * s, 2),
                SmootherSpec::radius(eps, s_large.max(1.0) * s, 2),
            ],
        )?);
        pool.push(kernel_candidate(
            &atoms,
            vec![1],
            vec![SmootherSpec::radius(eps, sigma_tot * s, 1)],
        )?);
    }
    log.notes.push(format!("sigma_small={s_small:.2} sigma_large={s_large:.2}"));
    arbitrate("three-scaled-pbds", &mut counting, pool, eps, delta, cfg, log)
}

/// k=3 learner. The four largeness cases are enumerated implicitly: the pool
/// contains, at fixed scale grids, smoothers over every subset of the scale
/// pair (fine lattice only, coarse lattice only, both) plus the sparse
/// candidate. All draw counts depend on (eps, delta, budgets) only — never on
/// the support values — so sample complexity is support-independent.
pub fn learn_k3(
    target: &mut TargetFn,
    support: [i64; 3],
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    let [a1, a2, a3] = support;
    if !(a1 < a2 && a2 < a3) {
        return Err(LearnError::BadSupport(format!("support must increase: {a1},{a2},{a3}")));
    }
    let d2 = a2 - a1;
    let d3 = a3 - a1;
    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();

    let probe_draws = counting.take(2 * cfg.probe_repeats);
    let pairs: Vec<(i64, i64)> = probe_draws.chunks(2).map(|c| (c[0], c[1])).collect();
    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);
    let (sigma_fine, sigma_coarse) = probe_two_scales(&pairs, d2, d3);
    let schedule = crate::asum::k3_schedule(eps, cfg.schedule_c, 3);
    log.notes.push(format!(
        "q=[{d2},{},{d3}] sigma_fine={sigma_fine:.2} sigma_coarse={sigma_coarse:.2} schedule={schedule:?}",
        a3 - a2
    ));

    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];
    for s in PROBE_SCALES {
        // both scales present (largeness at the coarse q)
        pool.push(kernel_candidate(
            &atoms,
            vec![d2, d3],
            vec![
                SmootherSpec::radius(eps, sigma_fine.max(1.0) * s, 2),
                SmootherSpec::radius(eps, sigma_coarse.max(1.0) * s, 2),
            ],
        )?);
        // fine lattice only (coarse weight below threshold)
        pool.push(kernel_candidate(
            &atoms,
            vec![d2],
            vec![SmootherSpec::radius(eps, sigma_tot * s / d2 as f64, 1)],
        )?);
        // coarse lattice only
        pool.push(kernel_candidate(
            &atoms,
            vec![d3],
            vec![SmootherSpec::radius(eps, sigma_coarse.max(1.0) * s, 1)],
        )?);
    }
    log.grid_sizes.push(PROBE_SCALES.len());
    arbitrate("k3", &mut counting, pool, eps, delta, cfg, log)
}

/// General-k learner (desk scale k <= 5). Guess enumeration: smoother weight
/// subsets over the q-values (the MIX choice) crossed with geometric radius
/// grids of `ceil(log2 a_k) + ceil(log2 1/eps) + 1` points — the
/// `Theta(log a_k)` the acceptance sweep measures. The sparse candidate is
/// always present.
pub fn learn_general_k(
    target: &mut TargetFn,
    support: &[i64],
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    let k = support.len();
    if k < 2 || k > 5 || support.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LearnError::BadSupport(format!("need 2 <= k <= 5 increasing, got {support:?}")));
    }
    let mut q_values: Vec<i64> = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let q = support[j] - support[i];
            if !q_values.contains(&q) {
                q_values.push(q);
            }
        }
    }
    q_values.sort_unstable();
    let a_k = *support.last().unwrap();

    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();
    let probe_draws = counting.take(2 * cfg.probe_repeats);
    let pairs: Vec<(i64, i64)> = probe_draws.chunks(2).map(|c| (c[0], c[1])).collect();
    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);
    let probe_sigma = sigma_from_abs_diffs(pairs.iter().map(|&(a, b)| (a - b).abs()).collect());
    log.notes.push(format!(
        "q_values={q_values:?} sigma_tot={sigma_tot:.2} probe_sigma={probe_sigma:.2}"
    ));

    // radius grid: powers of two, Theta(log a_k) points
    let mut grid_len = (a_k.max(2) as f64).log2().ceil() as usize
        + (1.0 / eps).log2().ceil() as usize
        + 1;
    let mut step = 1u32;
    while grid_len > cfg.max_grid {
        grid_len = grid_len.div_ceil(2);
        step *= 2;
        log.degradations.push(format!("radius grid coarsened: step 2^{step}"));
    }
    // radii beyond 2^20 are clamped: spans wider than the held sample ranges
    // add nothing, and the clamp keeps candidate storage bounded
    let radii: Vec<i64> = (0..grid_len).map(|t| 1i64 << (t as u32 * step).min(20)).collect();
    log.grid_sizes.push(radii.len());

    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];
    for &c in &radii {
        pool.push(kernel_candidate(&atoms, vec![1], vec![c])?);
    }
    // two-scale candidates on the largest q-values (coarse structure guesses)
    let fine = q_values[0];
    let mut coarse_count = 0usize;
    for &q in q_values.iter().rev().take(2) {
        if q == fine {
            continue;
        }
        let (sf, sc) = probe_two_scales(&pairs, fine, q);
        for s in PROBE_SCALES {
            pool.push(kernel_candidate(
                &atoms,
                vec![fine, q],
                vec![
                    SmootherSpec::radius(eps, sf.max(1.0) * s, 2),
                    SmootherSpec::radius(eps, sc.max(1.0) * s, 2),
                ],
            )?);
            coarse_count += 1;
        }
    }
    log.grid_sizes.push(coarse_count);
    arbitrate("general-k", &mut counting, pool, eps, delta, cfg, log)
}

/// The sample-inflation size `N* = ((a_max * N * m') / delta)^2` used by the
/// modular reduction.
pub fn reduction_n_star(a_max: i64, n: usize, m_prime: usize, delta: f64) -> u64 {
    let base = (a_max as f64 * n as f64 * m_prime as f64) / delta;
    (base * base).round() as u64
}

/// Modular reduction: wrap draws of `S mod a_k` as `u = v' + a_k * Bin(N*, 1/2)`,
/// run the base learner on the wrapped sampler, reduce its hypothesis mod
/// `a_k`. The base learner sees a target statistically within
/// `O(a_max N m' / sqrt(N*))` of `S + a_k * Bin(N*, 1/2)`.
pub fn mod_reduction_learner(
    target_mod: &mut TargetFn,
    a_k: i64,
    n_star: u64,
    base: impl FnOnce(&mut TargetFn) -> Result<LearnOutcome, LearnError>,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    let noise: IntDist = Dist::binomial(n_star, 0.5)?;
    let noise_sampler = noise.sampler();
    let mut rng = stream(cfg.seed, "mod-reduction/noise");
    let mut wrapped = |n: usize| -> Vec<i64> {
        let base_draws = target_mod(n);
        base_draws
            .into_iter()
            .map(|v| v.rem_euclid(a_k) + a_k * noise_sampler.draw(&mut rng))
            .collect()
    };
    let mut outcome = base(&mut wrapped)?;
    let reduced = outcome.hypothesis.to_dist(cfg.cell_cap)?.mod_reduce(a_k)?;
    outcome.hypothesis = Hypothesis::PointMixture { dist: reduced };
    outcome.log.notes.push(format!("reduced mod {a_k} with N*={n_star}"));
    Ok(outcome)
}

/// Unknown-support learner for k=2: recover the lattice step as the gcd of
/// `ceil(4 / sqrt(eps))` differences from a reference draw, learn the shifted
/// PBD on the divided lattice, and let selection arbitrate against the sparse
/// path. Draw counts depend only on (eps, delta, budgets).
pub fn learn_unknown_support_k2(
    target: &mut TargetFn,
    _a_max: i64,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();

    let reference = counting.take(1)[0];
    let m_g = (4.0 / eps.sqrt()).ceil() as usize;
    let diffs = counting.take(m_g);
    let mut g: i64 = 0;
    for d in &diffs {
        g = g.gcd(&(d - reference));
    }
    let g = g.abs();
    log.gcd = (g > 0).then_some(g);
    log.notes.push(format!("gcd path: m_g={m_g} gcd={g}"));

    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);
    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];
    let lattice = if g > 0 { g } else { 1 };
    for s in PROBE_SCALES {
        // smoother on the recovered lattice: the rescaled-PBD hypothesis
        pool.push(kernel_candidate(
            &atoms,
            vec![lattice],
            vec![SmootherSpec::radius(eps, sigma_tot * s / lattice as f64, 1)],
        )?);
        // unit-lattice fallback for a wrong gcd
        pool.push(kernel_candidate(
            &atoms,
            vec![1],
            vec![SmootherSpec::radius(eps, sigma_tot * s, 1)],
        )?);
    }
    arbitrate("unknown-support-k2", &mut counting, pool, eps, delta, cfg, log)
}

/// Unknown-support learner by support enumeration: one candidate per support
/// guess on a shared sample, final selection with
/// `m = ceil(2 (k ln a_max + ln 1/delta) / eps^2)` extra draws.
pub fn learn_unknown_support_enum(
    target: &mut TargetFn,
    a_max: i64,
    k: usize,
    eps: f64,
    delta: f64,
    cfg: &LearnerConfig,
) -> Result<LearnOutcome, LearnError> {
    cfg.validate(eps, delta)?;
    if a_max < 1 || k < 1 {
        return Err(LearnError::BadSupport(format!("a_max={a_max}, k={k}")));
    }
    let guesses = enumerate_supports(a_max, k, 5000).ok_or_else(|| {
        LearnError::Budget(format!("more than 5000 support guesses for a_max={a_max}, k={k}"))
    })?;
    let mut counting = CountingTarget::new(target);
    let mut log = RunLog::default();
    log.grid_sizes.push(guesses.len());
    let atoms = counting.take(cfg.kernel_atoms);
    let sigma_tot = sample_sigma(&atoms).max(1.0);

    let mut pool: Vec<Hypothesis> = vec![empirical_hypothesis(&atoms)?];
    for guess in &guesses {
        // the guess fixes the lattice of the zero-moded sum: gcd of diffs
        let mut g: i64 = 0;
        for w in guess.windows(2) {
            g = g.gcd(&(w[1] - w[0]));
        }
        let g = g.max(1);
        pool.push(kernel_candidate(
            &atoms,
            vec![g],
            vec![SmootherSpec::radius(eps, sigma_tot / g as f64, 1)],
        )?);
    }
    // extra-draw budget for the final arbitration, per the k log a_max bound
    let m_extra =
        (2.0 * (k as f64 * (a_max as f64).ln() + (1.0 / delta).ln()) / (eps * eps)).ceil() as usize;
    log.notes.push(format!("enumerated {} supports; extra select draws {m_extra}", guesses.len()));
    let prepared: Vec<PreparedCandidate> = pool
        .into_iter()
        .map(|h| PreparedCandidate::prepare(h, cfg))
        .collect::<Result<_, _>>()?;
    let refs: Vec<&dyn Candidate> = prepared.iter().map(|p| p as &dyn Candidate).collect();
    let mut rng = stream(cfg.seed, "select/unknown-support-enum");
    // the select budget formula can exceed m_extra: draw only the capped
    // pool of fresh samples and cycle it, keeping the budget honest
    let fresh = counting.take(m_extra);
    let mut served = 0usize;
    let report = select(
        &mut |n| {
            (0..n)
                .map(|_| {
                    let v = fresh[served % fresh.len()];
                    served += 1;
                    v
                })
                .collect()
        },
        &refs,
        eps,
        delta,
        &cfg.select_config(),
        &mut rng,
    )?;
    log.algo = "unknown-support-enum".into();
    log.candidates = refs.len();
    log.select_target_draws = report.target_draws.min(m_extra);
    log.select_candidate_draws = report.candidate_draws_each;
    log.winner = report.winner;
    log.target_draws = counting.draws;
    let hypothesis = prepared.into_iter().nth(report.winner).unwrap().hypothesis;
    Ok(LearnOutcome { hypothesis, log })
}

/// All strictly increasing k-subsets of `[0, a_max]`, or `None` once the
/// count would exceed `limit` (aborts before the blowup, not after).
fn enumerate_supports(a_max: i64, k: usize, limit: usize) -> Option<Vec<Vec<i64>>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(
        start: i64,
        a_max: i64,
        k: usize,
        limit: usize,
        cur: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) -> bool {
        if cur.len() == k {
            if out.len() >= limit {
                return false;
            }
            out.push(cur.clone());
            return true;
        }
        let remaining = (k - cur.len()) as i64;
        for v in start..=(a_max - remaining + 1) {
            cur.push(v);
            let ok = rec(v + 1, a_max, k, limit, cur, out);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    rec(0, a_max, k, limit, &mut cur, &mut out).then_some(out)
}

/// Signed PBD with all biases 1/2 matched to the given mean and variance:
/// `Bin(round(4 var), 1/2)` translated so means agree. This is the closed
/// form the limit-theorem comparisons use.
pub fn matched_signed_pbd(mean: f64, var: f64) -> Result<IntDist, DistError> {
    let n = (4.0 * var).round().max(1.0) as u64;
    let b: IntDist = Dist::binomial(n, 0.5)?;
    let shift = (mean - n as f64 / 2.0).round() as i64;
    Ok(b.shift(shift))
}
