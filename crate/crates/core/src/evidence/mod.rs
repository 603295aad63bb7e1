//! Likelihood-ratio combination and the corrections applied around it.
//!
//! Orientation is fixed throughout: the alternative hypothesis H1 is in the
//! numerator, `LR = P(E | H1) / P(E | H0)`.

mod count;
mod lr;
mod network;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use count::{integrate_over_count, CountPrior, CountQuantity, COUNT_SUPPORT_LIMIT};
pub use lr::Lr;
pub use network::{item_lrs, network_lr};
pub use sweep::{sweep, SweepAxis, SweepRow, SWEEP_LIMIT};

use crate::factor::FactorError;

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("count prior has empty support")]
    EmptySupport,
    #[error("items are not flagged conditionally independent; a joint network model is required to combine them")]
    NotIndependent,
    #[error(transparent)]
    Network(#[from] FactorError),
}

pub type Result<T> = std::result::Result<T, EvidenceError>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisPair {
    pub null_label: String,
    pub alt_label: String,
    /// Odds of H1 against H0.
    pub prior_odds: f64,
}

impl HypothesisPair {
    pub fn new(null_label: &str, alt_label: &str, prior_odds: f64) -> Result<Self> {
        if !(prior_odds.is_finite() && prior_odds > 0.0) {
            return Err(EvidenceError::Parameter(format!(
                "prior odds must be positive and finite, got {prior_odds}"
            )));
        }
        Ok(HypothesisPair {
            null_label: null_label.to_string(),
            alt_label: alt_label.to_string(),
            prior_odds,
        })
    }
}

impl Default for HypothesisPair {
    fn default() -> Self {
        HypothesisPair {
            null_label: "Tomb=NTped".into(),
            alt_label: "Tomb≠NTped".into(),
            prior_odds: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Onomasticon,
    Dna,
    #[default]
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvidenceItem {
    pub id: String,
    pub kind: ItemKind,
    pub lr: Lr,
    pub provenance: String,
}

impl EvidenceItem {
    pub fn new(id: &str, kind: ItemKind, lr: Lr, provenance: &str) -> Self {
        EvidenceItem {
            id: id.to_string(),
            kind,
            lr,
            provenance: provenance.to_string(),
        }
    }
}

/// Product of LRs under the flag algebra: any infinite factor with no zero
/// gives infinity, any zero with no infinity gives zero, both give undefined.
/// The empty product is 1.
pub fn combine_lrs(lrs: &[Lr]) -> Lr {
    if lrs.contains(&Lr::Undefined) {
        return Lr::Undefined;
    }
    let zero = lrs.iter().any(|l| l.is_zero());
    let inf = lrs.contains(&Lr::Infinite);
    match (zero, inf) {
        (true, true) => return Lr::Undefined,
        (false, true) => return Lr::Infinite,
        (true, false) => return Lr::Finite(0.0),
        (false, false) => {}
    }
    let finite: Vec<f64> = lrs.iter().filter_map(|l| l.value()).collect();
    let direct: f64 = finite.iter().product();
    if direct.is_finite() && direct > 0.0 {
        return Lr::Finite(direct);
    }
    // Intermediate overflow or underflow; the log-space sum is order independent.
    Lr::from_value(finite.iter().map(|x| x.ln()).sum::<f64>().exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Posterior {
    pub odds: Lr,
    /// `None` when the LR is undefined.
    pub prob_alt: Option<f64>,
}

pub fn posterior_from_lr(h: &HypothesisPair, overall: Lr) -> Posterior {
    match overall {
        Lr::Undefined => Posterior {
            odds: Lr::Undefined,
            prob_alt: None,
        },
        Lr::Infinite => Posterior {
            odds: Lr::Infinite,
            prob_alt: Some(1.0),
        },
        Lr::Finite(x) => {
            let odds = Lr::from_value(h.prior_odds * x);
            let prob = match odds {
                Lr::Finite(o) => o / (1.0 + o),
                _ => 1.0,
            };
            Posterior {
                odds,
                prob_alt: Some(prob),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CombinedResult {
    pub per_item: Vec<(String, Lr)>,
    pub overall_lr: Lr,
    pub posterior_odds: Lr,
    pub posterior_prob_alt: Option<f64>,
}

/// Combines items by the product rule and converts to posterior odds.
/// Refuses when the items are not declared conditionally independent given
/// the hypotheses.
pub fn combine(
    h: &HypothesisPair,
    items: &[EvidenceItem],
    conditionally_independent: bool,
) -> Result<CombinedResult> {
    if !conditionally_independent && items.len() > 1 {
        return Err(EvidenceError::NotIndependent);
    }
    let lrs: Vec<Lr> = items.iter().map(|i| i.lr).collect();
    let overall_lr = combine_lrs(&lrs);
    let post = posterior_from_lr(h, overall_lr);
    Ok(CombinedResult {
        per_item: items.iter().map(|i| (i.id.clone(), i.lr)).collect(),
        overall_lr,
        posterior_odds: post.odds,
        posterior_prob_alt: post.prob_alt,
    })
}

/// Probability that at least one of `trials` independent trials shows an
/// event of per-trial probability `p`: `1 - (1 - p)^T`.
pub fn selection_adjust(p: f64, trials: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EvidenceError::Parameter(format!(
            "p must lie in [0, 1], got {p}"
        )));
    }
    if trials == 0 {
        return Err(EvidenceError::Parameter("T must be at least 1".into()));
    }
    if p == 1.0 {
        return Ok(1.0);
    }
    Ok(-(trials as f64 * (-p).ln_1p()).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(xs: &[f64]) -> Vec<Lr> {
        xs.iter().map(|&x| Lr::Finite(x)).collect()
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine_lrs(&f(&[2.0, 3.0, 0.5])), Lr::Finite(3.0));
        assert_eq!(combine_lrs(&[]), Lr::ONE);
        assert_eq!(combine_lrs(&[Lr::Finite(0.5), Lr::Infinite]), Lr::Infinite);
        assert_eq!(
            combine_lrs(&[Lr::Finite(0.0), Lr::Finite(9.0)]),
            Lr::Finite(0.0)
        );
        assert_eq!(combine_lrs(&[Lr::Finite(0.0), Lr::Infinite]), Lr::Undefined);
        assert_eq!(
            combine_lrs(&[Lr::Undefined, Lr::Finite(1.0)]),
            Lr::Undefined
        );
    }

    #[test]
    fn combine_survives_intermediate_overflow() {
        let lr = combine_lrs(&f(&[1e200, 1e200, 1e-300]));
        assert!((lr.value().unwrap() / 1e100 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn posterior_examples() {
        let h = HypothesisPair::default();
        assert_eq!(posterior_from_lr(&h, Lr::ONE).prob_alt, Some(0.5));
        assert_eq!(posterior_from_lr(&h, Lr::Finite(3.0)).prob_alt, Some(0.75));
        assert_eq!(posterior_from_lr(&h, Lr::Infinite).prob_alt, Some(1.0));
        assert_eq!(posterior_from_lr(&h, Lr::Finite(0.0)).prob_alt, Some(0.0));
        assert_eq!(posterior_from_lr(&h, Lr::Undefined).prob_alt, None);
        let h4 = HypothesisPair::new("a", "b", 4.0).unwrap();
        assert_eq!(
            posterior_from_lr(&h4, Lr::Finite(0.5)).odds,
            Lr::Finite(2.0)
        );
    }

    #[test]
    fn prior_odds_must_be_positive() {
        assert!(HypothesisPair::new("a", "b", 0.0).is_err());
        assert!(HypothesisPair::new("a", "b", f64::INFINITY).is_err());
    }

    #[test]
    fn combine_respects_independence_flag() {
        let h = HypothesisPair::default();
        let items = vec![
            EvidenceItem::new("names", ItemKind::Onomasticon, Lr::Finite(2.0), "x"),
            EvidenceItem::new("dna", ItemKind::Dna, Lr::Finite(0.25), "y"),
        ];
        let r = combine(&h, &items, true).unwrap();
        assert_eq!(r.overall_lr, Lr::Finite(0.5));
        assert!(matches!(
            combine(&h, &items, false),
            Err(EvidenceError::NotIndependent)
        ));
        assert!(combine(&h, &items[..1], false).is_ok());
    }

    #[test]
    fn selection_examples() {
        assert_eq!(selection_adjust(0.3, 1).unwrap(), 0.3);
        assert!((selection_adjust(0.001, 1000).unwrap() - 0.632305).abs() < 1e-6);
        assert_eq!(selection_adjust(0.0, 50).unwrap(), 0.0);
        assert_eq!(selection_adjust(1.0, 50).unwrap(), 1.0);
        assert!(selection_adjust(1.5, 2).is_err());
        assert!(selection_adjust(0.5, 0).is_err());
    }

    #[test]
    fn selection_is_monotone() {
        let mut last = 0.0;
        for t in 1..200 {
            let v = selection_adjust(0.01, t).unwrap();
            assert!(v > last);
            last = v;
        }
        let mut last = 0.0;
        for i in 1..100 {
            let v = selection_adjust(i as f64 / 100.0, 7).unwrap();
            assert!(v > last);
            last = v;
        }
    }
}
