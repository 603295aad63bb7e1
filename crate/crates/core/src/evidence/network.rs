use super::{EvidenceError, Lr, Result};
use crate::factor::{evidence_likelihood, Evidence, Network, VarId};

/// `P(e | H = state)`, via `P(e, H = state) / P(H = state)`.
fn conditional(net: &Network, hyp: VarId, state: usize, e: &Evidence) -> Result<f64> {
    if e.contains(hyp) {
        return Err(EvidenceError::Parameter(format!(
            "evidence observes the hypothesis node `{}`",
            net.variable(hyp).name
        )));
    }
    let clamp = Evidence::from_pairs([(hyp, state)])?;
    let prior = evidence_likelihood(net, &clamp)?;
    if prior <= 0.0 {
        return Err(EvidenceError::Parameter(format!(
            "hypothesis state {} of `{}` has zero prior probability",
            state,
            net.variable(hyp).name
        )));
    }
    Ok(evidence_likelihood(net, &e.merged(&clamp)?)? / prior)
}

/// LR of all evidence together, clamping the hypothesis node to the
/// alternative and null states in turn.
pub fn network_lr(net: &Network, hyp: VarId, alt: usize, null: usize, e: &Evidence) -> Result<Lr> {
    let num = conditional(net, hyp, alt, e)?;
    let den = conditional(net, hyp, null, e)?;
    Ok(Lr::from_likelihoods(num, den))
}

/// One LR per evidence item, each computed with only that item observed.
pub fn item_lrs(
    net: &Network,
    hyp: VarId,
    alt: usize,
    null: usize,
    items: &[Evidence],
) -> Result<Vec<Lr>> {
    items
        .iter()
        .map(|e| network_lr(net, hyp, alt, null, e))
        .collect()
}
