//! Absorbing Markov chain model of a priority-ordered carrier search.
//!
//! A search probes carriers one at a time. Transient state `j` means "about
//! to probe the carrier in search position `j`"; absorbing state `j` means
//! "user found at position `j`". With per-position success masses
//! `p_1..p_n`, state `j` absorbs with the conditional hazard
//! `q_j = p_j / (p_j + ... + p_n)` and otherwise moves on to `j + 1`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Row-sum and probability-range tolerance used when constructing chains.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

/// Ordered per-position success probabilities of a search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDistribution {
    probs: Vec<f64>,
}

impl SearchDistribution {
    /// Every entry must lie in `(0, 1]` and the entries must sum to one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 || value > 1.0 {
                return Err(Error::InvalidProbability {
                    index,
                    value,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// Normalizes positive weights (e.g. carrier populations) into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.is_empty() {
            return Err(Error::EmptyDistribution);
        }
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NotNormalized { sum: total });
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `sum_j j * p_j` with 1-based positions: the expected number of probes.
    pub fn mean_position(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, p)| (j + 1) as f64 * p)
            .sum()
    }
}

/// Canonical-form absorbing chain: `P = [[Q, R], [0, I]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain {
    q_block: DMatrix<f64>,
    r_block: DMatrix<f64>,
}

impl AbsorbingChain {
    pub fn new(q_block: DMatrix<f64>, r_block: DMatrix<f64>) -> Result<Self> {
        let t = q_block.nrows();
        if t == 0 {
            return Err(Error::MalformedChain("no transient states".into()));
        }
        if q_block.ncols() != t {
            return Err(Error::MalformedChain(format!(
                "Q must be square, got {}x{}",
                t,
                q_block.ncols()
            )));
        }
        if r_block.nrows() != t {
            return Err(Error::MalformedChain(format!(
                "R has {} rows, Q has {}",
                r_block.nrows(),
                t
            )));
        }
        for (i, v) in q_block.iter().chain(r_block.iter()).enumerate() {
            if !v.is_finite() || *v < -CONSTRUCTION_TOL || *v > 1.0 + CONSTRUCTION_TOL {
                return Err(Error::MalformedChain(format!(
                    "entry {i} = {v} is outside [0, 1]"
                )));
            }
        }
        for row in 0..t {
            let sum = q_block.row(row).sum() + r_block.row(row).sum();
            if (sum - 1.0).abs() > CONSTRUCTION_TOL {
                return Err(Error::MalformedChain(format!("row {row} sums to {sum}")));
            }
        }
        Ok(Self { q_block, r_block })
    }

    pub fn transient_count(&self) -> usize {
        self.q_block.nrows()
    }

    pub fn absorbing_count(&self) -> usize {
        self.r_block.ncols()
    }

    pub fn q_block(&self) -> &DMatrix<f64> {
        &self.q_block
    }

    pub fn r_block(&self) -> &DMatrix<f64> {
        &self.r_block
    }

    /// True when `Q` has only zeros on and below the diagonal.
    pub fn is_strictly_upper_triangular(&self) -> bool {
        let t = self.transient_count();
        (0..t).all(|i| (0..=i).all(|j| self.q_block[(i, j)] == 0.0))
    }
}

/// Linear search chain over positions with conditional hazards.
pub fn build_paging_chain(dist: &SearchDistribution) -> Result<AbsorbingChain> {
    let hazards = conditional_hazards(dist)?;
    let n = hazards.len();
    let mut q = DMatrix::zeros(n, n);
    let mut r = DMatrix::zeros(n, n);
    for (j, &h) in hazards.iter().enumerate() {
        r[(j, j)] = h;
        if j + 1 < n {
            q[(j, j + 1)] = 1.0 - h;
        }
    }
    AbsorbingChain::new(q, r)
}

/// `q_j = p_j / (p_j + ... + p_n)`; the last hazard is exactly one.
///
/// The remaining mass is accumulated from the tail rather than as
/// `1 - prefix`, so each hazard stays in `[0, 1]` without clamping.
pub fn conditional_hazards(dist: &SearchDistribution) -> Result<Vec<f64>> {
    let probs = dist.probs();
    if probs.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut remaining = vec![0.0; probs.len()];
    let mut acc = 0.0;
    for j in (0..probs.len()).rev() {
        acc += probs[j];
        remaining[j] = acc;
    }
    let last = probs.len() - 1;
    probs
        .iter()
        .zip(&remaining)
        .enumerate()
        .map(|(j, (&p, &rest))| {
            if rest <= 0.0 {
                Err(Error::ZeroRemainingMass { position: j + 1 })
            } else if j == last {
                Ok(1.0)
            } else {
                Ok(p / rest)
            }
        })
        .collect()
}

/// `N = (I - Q)^-1`.
pub fn fundamental_matrix(chain: &AbsorbingChain) -> Result<DMatrix<f64>> {
    let t = chain.transient_count();
    let i_minus_q = DMatrix::identity(t, t) - chain.q_block();
    let n = if chain.is_strictly_upper_triangular() {
        // unit upper-triangular: back substitution is exact and never singular
        i_minus_q
            .solve_upper_triangular(&DMatrix::identity(t, t))
            .ok_or(Error::NonAbsorbing)?
    } else {
        i_minus_q.try_inverse().ok_or(Error::NonAbsorbing)?
    };
    if n.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonAbsorbing);
    }
    Ok(n)
}

/// Expected number of steps before absorption from each transient state.
pub fn expected_steps(chain: &AbsorbingChain) -> Result<DVector<f64>> {
    let n = fundamental_matrix(chain)?;
    let ones = DVector::from_element(chain.transient_count(), 1.0);
    Ok(n * ones)
}

/// `B = N R`: probability of ending in each absorbing state.
pub fn absorption_probabilities(chain: &AbsorbingChain) -> Result<DMatrix<f64>> {
    let n = fundamental_matrix(chain)?;
    Ok(n * chain.r_block())
}
