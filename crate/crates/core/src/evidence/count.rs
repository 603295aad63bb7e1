use serde::{Deserialize, Serialize};

use super::{EvidenceError, Result};

/// Largest support a count prior may expand to.
pub const COUNT_SUPPORT_LIMIT: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountQuantity {
    OssuaryCount,
    PopulationSize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CountPrior {
    Point {
        value: u64,
    },
    /// Uniform over the integers `lo..=hi`.
    Uniform {
        lo: u64,
        hi: u64,
    },
    /// Poisson over `1..=floor(mean + 10·sqrt(mean))`, renormalized.
    Poisson {
        mean: f64,
    },
}

impl CountPrior {
    /// `(n, P(n))` pairs with the probabilities summing to one.
    pub fn support(&self) -> Result<Vec<(u64, f64)>> {
        match *self {
            CountPrior::Point { value } => {
                if value == 0 {
                    return Err(EvidenceError::EmptySupport);
                }
                Ok(vec![(value, 1.0)])
            }
            CountPrior::Uniform { lo, hi } => {
                if lo == 0 || lo > hi {
                    return Err(EvidenceError::EmptySupport);
                }
                let size = hi - lo + 1;
                check_size(size)?;
                let p = 1.0 / size as f64;
                Ok((lo..=hi).map(|n| (n, p)).collect())
            }
            CountPrior::Poisson { mean } => {
                if !(mean.is_finite() && mean > 0.0) {
                    return Err(EvidenceError::Parameter(format!(
                        "Poisson mean must be positive, got {mean}"
                    )));
                }
                let upper = (mean + 10.0 * mean.sqrt()).floor() as u64;
                if upper == 0 {
                    return Err(EvidenceError::EmptySupport);
                }
                check_size(upper)?;
                let ln_mean = mean.ln();
                let mut logs = Vec::with_capacity(upper as usize);
                let mut lp = -mean;
                for n in 1..=upper {
                    lp += ln_mean - (n as f64).ln();
                    logs.push(lp);
                }
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
                let total: f64 = weights.iter().sum();
                Ok((1..=upper)
                    .zip(weights)
                    .map(|(n, w)| (n, w / total))
                    .collect())
            }
        }
    }
}

fn check_size(size: u64) -> Result<()> {
    if size > COUNT_SUPPORT_LIMIT {
        return Err(EvidenceError::Parameter(format!(
            "count support of {size} values exceeds the limit of {COUNT_SUPPORT_LIMIT}"
        )));
    }
    Ok(())
}

/// `E[f(n)]` under the prior.
pub fn integrate_over_count(prior: &CountPrior, f: impl Fn(u64) -> f64) -> Result<f64> {
    if let CountPrior::Point { value } = *prior {
        if value == 0 {
            return Err(EvidenceError::EmptySupport);
        }
        return Ok(f(value));
    }
    Ok(prior.support()?.into_iter().map(|(n, p)| p * f(n)).sum())
}
