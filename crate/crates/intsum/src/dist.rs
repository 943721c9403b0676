//! Finitely supported integer distributions: dense pmf plus offset, with the
//! exact operations and distance functionals everything else is built from.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;
use std::ops::AddAssign;
use thiserror::Error;

/// Scalar type for pmf entries. Constructors do their arithmetic in `f64`
/// and convert, so `f32` instantiation trades precision for memory.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + AddAssign + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
}
impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + AddAssign + std::iter::Sum + std::fmt::Debug + Send + Sync + 'static
{
}

/// Default cap on the number of pmf cells an operation may produce.
pub const DEFAULT_CELL_CAP: u64 = 100_000_000;

/// Absolute tolerance for "sums to 1" checks.
pub const MASS_TOL: f64 = 1e-9;

/// Truncation width, in standard deviations, for infinite-support families.
pub const TRUNCATION_SIGMAS: f64 = 12.0;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("pmf has no positive mass")]
    Empty,
    #[error("pmf entry {index} is {value}; entries must be finite and >= 0")]
    BadEntry { index: usize, value: f64 },
    #[error("pmf sums to {sum}; expected 1 within {MASS_TOL}")]
    NotNormalized { sum: f64 },
    #[error("result would need {cells} cells, above the cap of {cap}")]
    ResourceCap { cells: u128, cap: u64 },
    #[error("modulus must be >= 2, got {0}")]
    BadModulus(i64),
    #[error("scale factor must be nonzero")]
    ZeroScale,
    #[error("variance must be positive, got {0}")]
    BadVariance(f64),
    #[error("probability {0} outside [0,1]")]
    BadProbability(f64),
    #[error("probs and signs have different lengths ({probs} vs {signs})")]
    SignLength { probs: usize, signs: usize },
    #[error("sign entries must be +1 or -1, got {0}")]
    BadSign(i8),
}

/// Exact distribution over the integers. `pmf[i]` is `Pr[X = offset + i]`;
/// the first and last entries are positive (canonical trimming), interior
/// zeros are allowed and skipped where profitable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist<F>")]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned + Scalar"))]
pub struct Dist<F> {
    offset: i64,
    pmf: Vec<F>,
}

#[derive(Deserialize)]
struct RawDist<F> {
    offset: i64,
    pmf: Vec<F>,
}

impl<F: Scalar> TryFrom<RawDist<F>> for Dist<F> {
    type Error = DistError;
    fn try_from(raw: RawDist<F>) -> Result<Self, DistError> {
        Dist::new(raw.offset, raw.pmf)
    }
}

impl<F: Scalar> Dist<F> {
    /// Validate and canonicalize a pmf: entries finite and nonnegative,
    /// total mass 1 within [`MASS_TOL`], zero tails trimmed.
    pub fn new(offset: i64, pmf: Vec<F>) -> Result<Self, DistError> {
        let mut sum = 0.0f64;
        for (index, &v) in pmf.iter().enumerate() {
            let value = v.to_f64().unwrap_or(f64::NAN);
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::BadEntry { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(DistError::NotNormalized { sum });
        }
        Self::trimmed(offset, pmf)
    }

    /// Validate entries and canonicalize, but skip the unit-mass check.
    /// For mass-preserving pipelines whose inputs were already validated
    /// (pruned DP windows, conditional restrictions, and the like).
    pub fn new_unnormalized(offset: i64, pmf: Vec<F>) -> Result<Self, DistError> {
        for (index, &v) in pmf.iter().enumerate() {
            let value = v.to_f64().unwrap_or(f64::NAN);
            if !value.is_finite() || value < 0.0 {
                return Err(DistError::BadEntry { index, value });
            }
        }
        Self::trimmed(offset, pmf)
    }

    /// Canonicalize without the mass check; for internal mass-preserving ops.
    fn trimmed(offset: i64, mut pmf: Vec<F>) -> Result<Self, DistError> {
        let first = pmf.iter().position(|v| *v > F::zero()).ok_or(DistError::Empty)?;
        let last = pmf.iter().rposition(|v| *v > F::zero()).unwrap();
        pmf.truncate(last + 1);
        pmf.drain(..first);
        Ok(Dist { offset: offset + first as i64, pmf })
    }

    /// Point mass at `v`.
    pub fn delta(v: i64) -> Self {
        Dist { offset: v, pmf: vec![F::one()] }
    }

    pub fn bernoulli(p: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(DistError::BadProbability(p));
        }
        Self::trimmed(0, vec![F::from_f64(1.0 - p).unwrap(), F::from_f64(p).unwrap()])
    }

    /// Uniform over the integer interval `[lo, hi]`.
    pub fn uniform(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "uniform needs lo <= hi");
        let n = (hi - lo + 1) as usize;
        let w = F::from_f64(1.0 / n as f64).unwrap();
        Dist { offset: lo, pmf: vec![w; n] }
    }

    /// Exact binomial pmf. Small `n` uses the multiplicative recurrence;
    /// large `n` uses the log-gamma closed form truncated at
    /// [`TRUNCATION_SIGMAS`] standard deviations and renormalized.
    pub fn binomial(n: u64, p: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(DistError::BadProbability(p));
        }
        if p == 0.0 {
            return Ok(Self::delta(0));
        }
        if p == 1.0 {
            return Ok(Self::delta(n as i64));
        }
        let nf = n as f64;
        let out: Vec<f64>;
        let lo: i64;
        if n <= 1 << 14 {
            // pmf(k+1) = pmf(k) * (n-k)/(k+1) * p/(1-p), from pmf(0) = (1-p)^n,
            // run in log space to survive large n * extreme p
            let mut v = vec![0.0f64; n as usize + 1];
            let lr = p.ln() - (1.0 - p).ln();
            let mut lw = nf * (1.0 - p).ln();
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = lw.exp();
                lw += ((nf - k as f64).ln() - (k as f64 + 1.0).ln()) + lr;
            }
            out = v;
            lo = 0;
        } else {
            let mean = nf * p;
            let sd = (nf * p * (1.0 - p)).sqrt();
            let a = ((mean - TRUNCATION_SIGMAS * sd).floor().max(0.0)) as u64;
            let b = ((mean + TRUNCATION_SIGMAS * sd).ceil().min(nf)) as u64;
            let lgn = ln_gamma(nf + 1.0);
            let mut v = Vec::with_capacity((b - a + 1) as usize);
            for k in a..=b {
                let kf = k as f64;
                let l = lgn - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0)
                    + kf * p.ln()
                    + (nf - kf) * (1.0 - p).ln();
                v.push(l.exp());
            }
            let total: f64 = v.iter().sum();
            for x in &mut v {
                *x /= total;
            }
            out = v;
            lo = a as i64;
        }
        Self::trimmed(lo, out.into_iter().map(|x| F::from_f64(x).unwrap()).collect())
    }

    /// Gaussian discretized by rounding to the nearest integer: cell `j` gets
    /// `Phi((j + 1/2 - mu)/sigma) - Phi((j - 1/2 - mu)/sigma)`, truncated at
    /// [`TRUNCATION_SIGMAS`] standard deviations and renormalized.
    pub fn discretized_gaussian(mu: f64, var: f64) -> Result<Self, DistError> {
        if !(var > 0.0) || !var.is_finite() || !mu.is_finite() {
            return Err(DistError::BadVariance(var));
        }
        let sd = var.sqrt();
        let lo = (mu - TRUNCATION_SIGMAS * sd).floor() as i64;
        let hi = (mu + TRUNCATION_SIGMAS * sd).ceil() as i64;
        let phi = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
        let mut v = Vec::with_capacity((hi - lo + 1) as usize);
        let mut prev = phi((lo as f64 - 0.5 - mu) / sd);
        for j in lo..=hi {
            let cur = phi((j as f64 + 0.5 - mu) / sd);
            v.push(cur - prev);
            prev = cur;
        }
        let total: f64 = v.iter().sum();
        Self::trimmed(lo, v.into_iter().map(|x| F::from_f64(x / total).unwrap()).collect())
    }

    /// Translated Poisson: `floor(mu - var) + Poisson(var + frac(mu - var))`,
    /// truncated and renormalized like the Gaussian above.
    pub fn translated_poisson(mu: f64, var: f64) -> Result<Self, DistError> {
        if !(var > 0.0) || !var.is_finite() || !mu.is_finite() {
            return Err(DistError::BadVariance(var));
        }
        let base = (mu - var).floor();
        let lambda = var + (mu - var - base);
        let sd = lambda.sqrt();
        let a = ((lambda - TRUNCATION_SIGMAS * sd).floor().max(0.0)) as u64;
        let b = (lambda + TRUNCATION_SIGMAS * sd).ceil() as u64;
        let mut v = Vec::with_capacity((b - a + 1) as usize);
        for k in a..=b {
            let kf = k as f64;
            v.push((-lambda + kf * lambda.ln() - ln_gamma(kf + 1.0)).exp());
        }
        let total: f64 = v.iter().sum();
        Self::trimmed(
            base as i64 + a as i64,
            v.into_iter().map(|x| F::from_f64(x / total).unwrap()).collect(),
        )
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Largest support point.
    pub fn max(&self) -> i64 {
        self.offset + self.pmf.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        false // canonical distributions always carry mass
    }

    pub fn pmf(&self) -> &[F] {
        &self.pmf
    }

    pub fn pmf_at(&self, x: i64) -> F {
        if x < self.offset || x > self.max() {
            F::zero()
        } else {
            self.pmf[(x - self.offset) as usize]
        }
    }

    /// `Pr[X <= x]`.
    pub fn cdf_at(&self, x: i64) -> f64 {
        if x < self.offset {
            return 0.0;
        }
        let hi = ((x - self.offset) as usize).min(self.pmf.len() - 1);
        self.pmf[..=hi].iter().map(|v| v.to_f64().unwrap()).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().map(|v| v.to_f64().unwrap()).sum()
    }

    pub fn mean(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, v)| (self.offset + i as i64) as f64 * v.to_f64().unwrap())
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.pmf
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let d = (self.offset + i as i64) as f64 - m;
                d * d * v.to_f64().unwrap()
            })
            .sum()
    }

    /// Smallest support value of maximal probability.
    pub fn mode(&self) -> i64 {
        let mut best = 0usize;
        for (i, v) in self.pmf.iter().enumerate() {
            if *v > self.pmf[best] {
                best = i;
            }
        }
        self.offset + best as i64
    }

    /// Nonzero cells as `(value, probability)`.
    pub fn entries(&self) -> impl Iterator<Item = (i64, F)> + '_ {
        self.pmf
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > F::zero())
            .map(move |(i, v)| (self.offset + i as i64, *v))
    }

    fn nonzero_count(&self) -> usize {
        self.pmf.iter().filter(|v| **v > F::zero()).count()
    }

    /// Exact pmf of the sum of independent draws, under the default cap.
    pub fn convolve(&self, other: &Self) -> Result<Self, DistError> {
        self.convolve_capped(other, DEFAULT_CELL_CAP)
    }

    /// Direct convolution. Iterates over the nonzero cells of the sparser
    /// operand so that scaled (lattice-sparse) inputs cost what their real
    /// support costs, not their dense span.
    pub fn convolve_capped(&self, other: &Self, cap: u64) -> Result<Self, DistError> {
        let cells = self.pmf.len() as u128 + other.pmf.len() as u128 - 1;
        if cells > cap as u128 {
            return Err(DistError::ResourceCap { cells, cap });
        }
        let (outer, inner) = if self.nonzero_count() <= other.nonzero_count() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = vec![F::zero(); cells as usize];
        for (i, &p) in outer.pmf.iter().enumerate() {
            if p > F::zero() {
                for (j, &q) in inner.pmf.iter().enumerate() {
                    out[i + j] += p * q;
                }
            }
        }
        Self::trimmed(self.offset + other.offset, out)
    }

    /// Pmf of `c * X` for nonzero integer `c`, dense over the stretched span.
    pub fn scale(&self, c: i64) -> Result<Self, DistError> {
        self.scale_capped(c, DEFAULT_CELL_CAP)
    }

    pub fn scale_capped(&self, c: i64, cap: u64) -> Result<Self, DistError> {
        if c == 0 {
            return Err(DistError::ZeroScale);
        }
        if c == 1 {
            return Ok(self.clone());
        }
        let cells = (self.pmf.len() as u128 - 1) * c.unsigned_abs() as u128 + 1;
        if cells > cap as u128 {
            return Err(DistError::ResourceCap { cells, cap });
        }
        let mut out = vec![F::zero(); cells as usize];
        let step = c.unsigned_abs() as usize;
        if c > 0 {
            for (i, &p) in self.pmf.iter().enumerate() {
                out[i * step] = p;
            }
            Self::trimmed(c * self.offset, out)
        } else {
            for (i, &p) in self.pmf.iter().enumerate() {
                out[(self.pmf.len() - 1 - i) * step] = p;
            }
            Self::trimmed(c * (self.offset + self.pmf.len() as i64 - 1), out)
        }
    }

    /// Pmf of `X + v`.
    pub fn shift(&self, v: i64) -> Self {
        Dist { offset: self.offset + v, pmf: self.pmf.clone() }
    }

    /// Pmf of `X mod m` over `{0, .., m-1}`.
    pub fn mod_reduce(&self, m: i64) -> Result<Self, DistError> {
        if m < 2 {
            return Err(DistError::BadModulus(m));
        }
        let mut out = vec![F::zero(); m as usize];
        for (i, &p) in self.pmf.iter().enumerate() {
            let r = (self.offset + i as i64).rem_euclid(m);
            out[r as usize] += p;
        }
        Self::trimmed(0, out)
    }

    /// Exact total variation distance, `(1/2) * sum |a(x) - b(x)|`.
    pub fn tv_distance(&self, other: &Self) -> F {
        let lo = self.offset.min(other.offset);
        let hi = self.max().max(other.max());
        let mut acc = F::zero();
        for x in lo..=hi {
            acc += (self.pmf_at(x) - other.pmf_at(x)).abs();
        }
        acc / F::from_f64(2.0).unwrap()
    }

    /// Exact Kolmogorov distance, `max_j |Pr[X <= j] - Pr[Y <= j]|`.
    pub fn kolmogorov_distance(&self, other: &Self) -> F {
        let lo = self.offset.min(other.offset);
        let hi = self.max().max(other.max());
        let mut ca = F::zero();
        let mut cb = F::zero();
        let mut best = F::zero();
        for x in lo..=hi {
            ca += self.pmf_at(x);
            cb += other.pmf_at(x);
            let d = (ca - cb).abs();
            if d > best {
                best = d;
            }
        }
        best
    }

    /// `sum_x a(x) ln(a(x)/b(x))`, or the infinite-divergence signal when
    /// the support of `a` is not contained in the support of `b`.
    pub fn kl_divergence(&self, other: &Self) -> KlDivergence<F> {
        let mut acc = F::zero();
        for (x, p) in self.entries() {
            let q = other.pmf_at(x);
            if q <= F::zero() {
                return KlDivergence::Infinite;
            }
            acc += p * (p / q).ln();
        }
        KlDivergence::Finite(acc)
    }

    /// Shift-invariance: `d_TV(X, X + k)`.
    pub fn shift_distance(&self, k: i64) -> F {
        self.tv_distance(&self.shift(k))
    }

    /// Drop leading/trailing cells totalling at most `per_tail` mass on each
    /// side. Used by long sequential convolutions to keep windows tight; the
    /// discarded mass stays far below every stated tolerance.
    pub fn prune_tails(&self, per_tail: f64) -> Self {
        let t = F::from_f64(per_tail).unwrap();
        let mut lo = 0usize;
        let mut acc = F::zero();
        while lo + 1 < self.pmf.len() && acc + self.pmf[lo] <= t {
            acc += self.pmf[lo];
            lo += 1;
        }
        let mut hi = self.pmf.len();
        acc = F::zero();
        while hi > lo + 1 && acc + self.pmf[hi - 1] <= t {
            acc += self.pmf[hi - 1];
            hi -= 1;
        }
        Dist { offset: self.offset + lo as i64, pmf: self.pmf[lo..hi].to_vec() }
    }

    /// Inverse-cdf sampler with a precomputed table.
    pub fn sampler(&self) -> DistSampler {
        let mut cdf = Vec::with_capacity(self.pmf.len());
        let mut acc = 0.0f64;
        for v in &self.pmf {
            acc += v.to_f64().unwrap();
            cdf.push(acc);
        }
        DistSampler { offset: self.offset, cdf }
    }
}

/// KL divergence result; the infinite case is a distinct signal, not a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KlDivergence<F> {
    Finite(F),
    Infinite,
}

impl<F: Scalar> KlDivergence<F> {
    pub fn finite(self) -> Option<F> {
        match self {
            KlDivergence::Finite(v) => Some(v),
            KlDivergence::Infinite => None,
        }
    }
}

/// Precomputed inverse-cdf table; draws are `O(log n)` and deterministic for
/// a fixed RNG stream.
#[derive(Debug, Clone)]
pub struct DistSampler {
    offset: i64,
    cdf: Vec<f64>,
}

impl DistSampler {
    pub fn draw<R: Rng>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.gen::<f64>() * self.cdf[self.cdf.len() - 1];
        let idx = self.cdf.partition_point(|&c| c < u);
        self.offset + idx.min(self.cdf.len() - 1) as i64
    }

    pub fn draw_n<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<i64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}

/// Parameters of a (signed) Poisson binomial distribution: independent
/// summands on `{0, +1}` (sign +1) or `{0, -1}` (sign -1) with biases `probs`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PbdSpec {
    pub probs: Vec<f64>,
    pub signs: Vec<i8>,
}

impl PbdSpec {
    pub fn unsigned(probs: Vec<f64>) -> Self {
        let signs = vec![1; probs.len()];
        PbdSpec { probs, signs }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        if self.probs.len() != self.signs.len() {
            return Err(DistError::SignLength { probs: self.probs.len(), signs: self.signs.len() });
        }
        for &p in &self.probs {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(DistError::BadProbability(p));
            }
        }
        for &s in &self.signs {
            if s != 1 && s != -1 {
                return Err(DistError::BadSign(s));
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().zip(&self.signs).map(|(p, &s)| p * s as f64).sum()
    }

    pub fn variance(&self) -> f64 {
        self.probs.iter().map(|p| p * (1.0 - p)).sum()
    }

    /// Exact pmf by sequential convolution, with per-step tail pruning at
    /// mass 1e-18 per side (total discard < 1e-12 up to a million summands).
    pub fn pmf<F: Scalar>(&self) -> Result<Dist<F>, DistError> {
        self.validate()?;
        let mut acc: Dist<F> = Dist::delta(0);
        for (&p, &s) in self.probs.iter().zip(&self.signs) {
            let step: Dist<F> = if s == 1 {
                Dist::bernoulli(p)?
            } else {
                Dist::bernoulli(p)?.scale(-1)?
            };
            acc = acc.convolve(&step)?.prune_tails(1e-18);
        }
        Ok(acc)
    }
}
