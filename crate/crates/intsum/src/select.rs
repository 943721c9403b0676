//! Hypothesis selection: a pairwise Scheffé tournament over candidates that
//! can be sampled and exactly evaluated. With a candidate within `eps` of the
//! target among the entries, the winner is within `6 * eps` with probability
//! `1 - delta`.

use rand_chacha::ChaCha12Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("no candidates")]
    NoCandidates,
    #[error("candidate {index} returned invalid probability {value} at x={x}")]
    BadEval { index: usize, value: f64, x: i64 },
}

/// A candidate distribution: sampleable and exactly evaluable. `eval_batch`
/// must return `Pr[D = x]` for each query; implementations typically back it
/// with a materialized pmf or a kernel evaluator.
pub trait Candidate {
    fn draws(&self, rng: &mut ChaCha12Rng, n: usize) -> Vec<i64>;
    fn eval_batch(&self, xs: &[i64]) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub struct SelectConfig {
    /// Constant in the target-draw budget `m = ceil(C * eps^-2 * (ln M + ln 1/delta))`.
    pub budget_constant: f64,
    /// Per-candidate draw count used to estimate candidate masses on Scheffé
    /// sets (capped so the eval matrix stays small).
    pub candidate_draw_cap: usize,
}

impl Default for SelectConfig {
    fn default() -> Self {
        SelectConfig { budget_constant: 32.0, candidate_draw_cap: 4000 }
    }
}

/// Exact target-draw budget for `M` candidates.
pub fn target_budget(eps: f64, delta: f64, m_candidates: usize, c: f64) -> usize {
    (c * eps.powi(-2) * ((m_candidates as f64).ln() + (1.0 / delta).ln())).ceil() as usize
}

#[derive(Debug, Clone)]
pub struct SelectReport {
    pub winner: usize,
    pub target_draws: usize,
    pub candidate_draws_each: usize,
    pub wins: Vec<usize>,
}

/// Run the tournament. `target` must return exactly `n` fresh draws per call;
/// it is called once with the full budget (deterministic accounting).
///
/// Per pair `(i, j)` the Scheffé set is `W = {x : D_i(x) > D_j(x)}`,
/// membership decided lazily through the two evaluators. The target's mass on
/// `W` is estimated from the shared target draws; each candidate's own mass
/// from its seeded draws. `i` beats `j` when its estimated mass is closer to
/// the target's. Winner by most wins, ties to the lowest index.
pub fn select(
    target: &mut dyn FnMut(usize) -> Vec<i64>,
    candidates: &[&dyn Candidate],
    eps: f64,
    delta: f64,
    cfg: &SelectConfig,
    rng: &mut ChaCha12Rng,
) -> Result<SelectReport, SelectError> {
    let m_cand = candidates.len();
    if m_cand == 0 {
        return Err(SelectError::NoCandidates);
    }
    if m_cand == 1 {
        // validity probe only: one self-draw, one eval
        let y = candidates[0].draws(rng, 1);
        let v = candidates[0].eval_batch(&y);
        check(0, &y, &v)?;
        return Ok(SelectReport { winner: 0, target_draws: 0, candidate_draws_each: 1, wins: vec![0] });
    }

    let m = target_budget(eps, delta, m_cand, cfg.budget_constant);
    let mc = m.min(cfg.candidate_draw_cap).max(1);
    let xs = target(m);
    assert_eq!(xs.len(), m, "target sampler must honor the requested count");
    let ys: Vec<Vec<i64>> = candidates.iter().map(|c| c.draws(rng, mc)).collect();

    // flat query list: target draws then each candidate's draws
    let mut queries = xs.clone();
    for y in &ys {
        queries.extend_from_slice(y);
    }
    // evals[i] holds candidate i's pmf over every query point
    let mut evals: Vec<Vec<f64>> = Vec::with_capacity(m_cand);
    for (i, c) in candidates.iter().enumerate() {
        let v = c.eval_batch(&queries);
        check(i, &queries, &v)?;
        evals.push(v);
    }

    let seg = |i: usize| (m + i * mc)..(m + (i + 1) * mc);
    let mut wins = vec![0usize; m_cand];
    for i in 0..m_cand {
        for j in (i + 1)..m_cand {
            let on_target =
                (0..m).filter(|&t| evals[i][t] > evals[j][t]).count() as f64 / m as f64;
            let mass = |span: std::ops::Range<usize>| {
                span.filter(|&t| evals[i][t] > evals[j][t]).count() as f64 / mc as f64
            };
            let pi = mass(seg(i));
            let pj = mass(seg(j));
            if (pi - on_target).abs() <= (pj - on_target).abs() {
                wins[i] += 1;
            } else {
                wins[j] += 1;
            }
        }
    }
    let winner = (0..m_cand).max_by(|&a, &b| wins[a].cmp(&wins[b]).then(b.cmp(&a))).unwrap();
    Ok(SelectReport { winner, target_draws: m, candidate_draws_each: mc, wins })
}

fn check(index: usize, xs: &[i64], vals: &[f64]) -> Result<(), SelectError> {
    for (&x, &value) in xs.iter().zip(vals) {
        if !value.is_finite() || value < 0.0 {
            return Err(SelectError::BadEval { index, value, x });
        }
    }
    Ok(())
}
