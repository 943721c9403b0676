//! Kernel hypotheses: retained samples convolved with a weighted sum of
//! uniform integer intervals (the smoother `Z = sum_a p_a * U[-c_a, c_a]`).

use crate::dist::{Dist, DistError, DEFAULT_CELL_CAP};
use crate::IntDist;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("empty sample set")]
    EmptySamples,
    #[error("smoother needs matching nonempty weight/radius vectors (got {weights} and {radii})")]
    BadSmoother { weights: usize, radii: usize },
    #[error("smoother weights must be nonzero")]
    ZeroWeight,
    #[error("smoother radii must be >= 0, got {0}")]
    NegativeRadius(i64),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// Smoother shape: `Z = sum_a weights[a] * Uniform[-radii[a], radii[a]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmootherSpec {
    pub weights: Vec<i64>,
    pub radii: Vec<i64>,
}

impl SmootherSpec {
    pub fn new(weights: Vec<i64>, radii: Vec<i64>) -> Result<Self, KernelError> {
        if weights.is_empty() || weights.len() != radii.len() {
            return Err(KernelError::BadSmoother { weights: weights.len(), radii: radii.len() });
        }
        if weights.iter().any(|&w| w == 0) {
            return Err(KernelError::ZeroWeight);
        }
        if let Some(&r) = radii.iter().find(|&&r| r < 0) {
            return Err(KernelError::NegativeRadius(r));
        }
        Ok(SmootherSpec { weights, radii })
    }

    /// Radius rule used by the learners: `c = ceil(eps * gamma / k)`,
    /// clamped to >= 0 (constant 1; end-to-end audits validate the choice).
    pub fn radius(eps: f64, gamma: f64, k: usize) -> i64 {
        ((eps * gamma / k as f64).ceil().max(0.0)) as i64
    }

    /// Exact pmf of the smoother via convolution of scaled uniforms.
    pub fn pmf(&self) -> Result<IntDist, KernelError> {
        self.pmf_capped(DEFAULT_CELL_CAP)
    }

    pub fn pmf_capped(&self, cap: u64) -> Result<IntDist, KernelError> {
        let mut acc: IntDist = Dist::delta(0);
        for (&w, &c) in self.weights.iter().zip(&self.radii) {
            let u: IntDist = Dist::uniform(-c, c);
            acc = acc.convolve_capped(&u.scale_capped(w, cap)?, cap)?;
        }
        Ok(acc)
    }
}

/// Learned object: multiset of retained samples plus a smoother. The law is
/// `Uniform(atoms) * Z` (convolution); atoms are kept verbatim, no fitting.
///
/// JSON form: `{"atoms":[..], "weights":[..], "radii":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHypothesis", into = "RawHypothesis")]
pub struct KernelHypothesis {
    atoms: Vec<i64>,
    smoother: SmootherSpec,
}

#[derive(Serialize, Deserialize)]
struct RawHypothesis {
    atoms: Vec<i64>,
    weights: Vec<i64>,
    radii: Vec<i64>,
}

impl TryFrom<RawHypothesis> for KernelHypothesis {
    type Error = String;
    fn try_from(raw: RawHypothesis) -> Result<Self, String> {
        let smoother = SmootherSpec::new(raw.weights, raw.radii).map_err(|e| e.to_string())?;
        KernelHypothesis::new(raw.atoms, smoother).map_err(|e| e.to_string())
    }
}

impl From<KernelHypothesis> for RawHypothesis {
    fn from(h: KernelHypothesis) -> Self {
        RawHypothesis { atoms: h.atoms, weights: h.smoother.weights, radii: h.smoother.radii }
    }
}

impl KernelHypothesis {
    pub fn new(atoms: Vec<i64>, smoother: SmootherSpec) -> Result<Self, KernelError> {
        if atoms.is_empty() {
            return Err(KernelError::EmptySamples);
        }
        Ok(KernelHypothesis { atoms, smoother })
    }

    pub fn atoms(&self) -> &[i64] {
        &self.atoms
    }

    pub fn smoother(&self) -> &SmootherSpec {
        &self.smoother
    }
}

/// Frequency distribution of a sample multiset.
pub fn empirical_dist(samples: &[i64]) -> Result<IntDist, KernelError> {
    if samples.is_empty() {
        return Err(KernelError::EmptySamples);
    }
    let lo = *samples.iter().min().unwrap();
    let hi = *samples.iter().max().unwrap();
    let cells = (hi - lo) as u128 + 1;
    if cells > DEFAULT_CELL_CAP as u128 {
        return Err(DistError::ResourceCap { cells, cap: DEFAULT_CELL_CAP }.into());
    }
    let w = 1.0 / samples.len() as f64;
    let mut pmf = vec![0.0f64; cells as usize];
    for &s in samples {
        pmf[(s - lo) as usize] += w;
    }
    Ok(Dist::new_unnormalized(lo, pmf)?)
}

/// Stores the samples verbatim with the given smoother; no fitting happens.
pub fn build_kernel_hypothesis(
    samples: &[i64],
    smoother: SmootherSpec,
) -> Result<KernelHypothesis, KernelError> {
    KernelHypothesis::new(samples.to_vec(), smoother)
}
