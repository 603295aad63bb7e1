//! Variable elimination.

use std::collections::{BTreeSet, HashSet};

use super::{Evidence, Factor, FactorError, Network, Result, VarId};

/// Partial results whose largest entry falls below this are rescaled and the
/// scale is carried in log space.
const RESCALE_BELOW: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub enum QueryOutcome {
    Posterior {
        /// Normalized distribution over the targets, in the order they were requested.
        posterior: Factor,
        evidence_prob: f64,
        log_evidence_prob: f64,
    },
    /// The evidence has probability zero under the network.
    ImpossibleEvidence,
}

impl QueryOutcome {
    pub fn evidence_prob(&self) -> f64 {
        match self {
            QueryOutcome::Posterior { evidence_prob, .. } => *evidence_prob,
            QueryOutcome::ImpossibleEvidence => 0.0,
        }
    }

    pub fn posterior(&self) -> Option<&Factor> {
        match self {
            QueryOutcome::Posterior { posterior, .. } => Some(posterior),
            QueryOutcome::ImpossibleEvidence => None,
        }
    }

    pub fn is_impossible(&self) -> bool {
        matches!(self, QueryOutcome::ImpossibleEvidence)
    }
}

/// Greedy min-degree order on the moral graph over every variable not in `keep`.
/// Ties go to the lexicographically smallest variable name.
pub fn elimination_order(net: &Network, keep: &[VarId]) -> Vec<VarId> {
    let n = net.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut link = |a: usize, b: usize| {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    };
    for v in 0..n {
        let ps = net.parents(VarId(v));
        for (i, p) in ps.iter().enumerate() {
            link(v, p.0);
            for q in &ps[i + 1..] {
                link(p.0, q.0);
            }
        }
    }
    let keep: HashSet<usize> = keep.iter().map(|v| v.0).collect();
    let mut remaining: BTreeSet<usize> = (0..n).filter(|v| !keep.contains(v)).collect();
    let mut order = Vec::with_capacity(remaining.len());
    while !remaining.is_empty() {
        let &pick = remaining
            .iter()
            .min_by(|&&a, &&b| {
                adj[a].len().cmp(&adj[b].len()).then_with(|| {
                    net.variable(VarId(a))
                        .name
                        .cmp(&net.variable(VarId(b)).name)
                })
            })
            .expect("nonempty");
        let neighbours: Vec<usize> = adj[pick].iter().copied().collect();
        for (i, &a) in neighbours.iter().enumerate() {
            adj[a].remove(&pick);
            for &b in &neighbours[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj[pick].clear();
        remaining.remove(&pick);
        order.push(VarId(pick));
    }
    order
}

struct Eliminated {
    factor: Factor,
    log_scale: f64,
}

fn rescale(f: Factor, log_scale: &mut f64) -> Factor {
    let m = f.max();
    if m > 0.0 && m < RESCALE_BELOW {
        *log_scale += m.ln();
        f.scaled(1.0 / m)
    } else {
        f
    }
}

fn eliminate(net: &Network, e: &Evidence, order: &[VarId]) -> Result<Eliminated> {
    let mut pool: Vec<Factor> = net
        .cpts()
        .iter()
        .map(|f| f.reduce(e))
        .collect::<Result<_>>()?;
    let mut log_scale = 0.0;
    for &v in order {
        let (with_v, rest): (Vec<Factor>, Vec<Factor>) = pool
            .into_iter()
            .partition(|f| f.cardinality_of(v).is_some());
        pool = rest;
        if with_v.is_empty() {
            continue;
        }
        let mut prod = Factor::scalar(1.0);
        for f in &with_v {
            prod = rescale(prod.product(f)?, &mut log_scale);
        }
        pool.push(rescale(prod.marginalize(v)?, &mut log_scale));
    }
    let mut result = Factor::scalar(1.0);
    for f in &pool {
        result = rescale(result.product(f)?, &mut log_scale);
    }
    Ok(Eliminated {
        factor: result,
        log_scale,
    })
}

fn check_order(net: &Network, e: &Evidence, keep: &[VarId], order: &[VarId]) -> Result<()> {
    let mut seen = vec![false; net.len()];
    for &v in order {
        if v.0 >= net.len() {
            return Err(FactorError::UnknownVariable(v.to_string()));
        }
        if seen[v.0] {
            return Err(FactorError::InvalidOrder(format!(
                "{} listed twice",
                net.variable(v).name
            )));
        }
        seen[v.0] = true;
    }
    for (v, &listed) in seen.iter().enumerate() {
        let id = VarId(v);
        let kept = e.contains(id) || keep.contains(&id);
        if kept && listed {
            return Err(FactorError::InvalidOrder(format!(
                "{} is observed or queried",
                net.variable(id).name
            )));
        }
        if !kept && !listed {
            return Err(FactorError::InvalidOrder(format!(
                "{} is never eliminated",
                net.variable(id).name
            )));
        }
    }
    Ok(())
}

fn observed(e: &Evidence) -> Vec<VarId> {
    e.iter().map(|(v, _)| v).collect()
}

/// Natural log of P(e); `-inf` when the evidence is impossible.
pub fn log_evidence_likelihood(net: &Network, e: &Evidence) -> Result<f64> {
    net.check_evidence(e)?;
    let order = elimination_order(net, &observed(e));
    let out = eliminate(net, e, &order)?;
    let p = out.factor.sum();
    Ok(if p > 0.0 {
        p.ln() + out.log_scale
    } else {
        f64::NEG_INFINITY
    })
}

/// P(e), summing every unobserved variable out.
pub fn evidence_likelihood(net: &Network, e: &Evidence) -> Result<f64> {
    Ok(log_evidence_likelihood(net, e)?.exp())
}

/// P(e) using a caller-supplied elimination order over all unobserved variables.
pub fn evidence_likelihood_with_order(net: &Network, e: &Evidence, order: &[VarId]) -> Result<f64> {
    net.check_evidence(e)?;
    check_order(net, e, &[], order)?;
    let out = eliminate(net, e, order)?;
    let p = out.factor.sum();
    Ok(if p > 0.0 {
        (p.ln() + out.log_scale).exp()
    } else {
        0.0
    })
}

/// Posterior over `targets` given `e`, plus the evidence probability.
pub fn query(net: &Network, targets: &[VarId], e: &Evidence) -> Result<QueryOutcome> {
    if targets.is_empty() {
        return Err(FactorError::EmptyTargets);
    }
    net.check_evidence(e)?;
    for (i, &t) in targets.iter().enumerate() {
        if t.0 >= net.len() {
            return Err(FactorError::UnknownVariable(t.to_string()));
        }
        if targets[..i].contains(&t) {
            return Err(FactorError::DuplicateInScope(t));
        }
        if e.contains(t) {
            return Err(FactorError::TargetObserved(net.variable(t).name.clone()));
        }
    }
    let mut keep = observed(e);
    keep.extend_from_slice(targets);
    let order = elimination_order(net, &keep);
    let out = eliminate(net, e, &order)?;

    // Targets that never met a factor (impossible in a well-formed network) still
    // need to appear in the posterior scope.
    let mut joint = out.factor;
    for &t in targets {
        if joint.cardinality_of(t).is_none() {
            let k = net.cardinality(t);
            joint = joint.product(&Factor::new(vec![(t, k)], vec![1.0; k])?)?;
        }
    }
    let joint = joint.permuted(targets)?;
    let total = joint.sum();
    if total <= 0.0 {
        return Ok(QueryOutcome::ImpossibleEvidence);
    }
    let log_evidence_prob = total.ln() + out.log_scale;
    Ok(QueryOutcome::Posterior {
        posterior: joint.scaled(1.0 / total),
        evidence_prob: log_evidence_prob.exp(),
        log_evidence_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::NetworkBuilder;

    fn two_node() -> (Network, VarId, VarId) {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        let bb = b.add_variable("B", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.7, 0.3]).unwrap();
        b.set_cpt(bb, &[a], vec![0.8, 0.2, 0.1, 0.9]).unwrap();
        (b.build().unwrap(), a, bb)
    }

    #[test]
    fn marginal_of_b() {
        let (net, _, b) = two_node();
        let q = query(&net, &[b], &Evidence::new()).unwrap();
        let post = q.posterior().unwrap();
        // 0.3 * 0.9 + 0.7 * 0.2
        assert!((post.values()[1] - 0.41).abs() < 1e-12);
        assert!((q.evidence_prob() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bayes_inversion() {
        let (net, a, b) = two_node();
        let e = Evidence::from_pairs([(b, 1)]).unwrap();
        let q = query(&net, &[a], &e).unwrap();
        assert!((q.posterior().unwrap().values()[1] - 0.27 / 0.41).abs() < 1e-12);
        assert!((q.evidence_prob() - 0.41).abs() < 1e-12);
    }

    #[test]
    fn querying_an_observed_variable_is_rejected() {
        let (net, a, _) = two_node();
        let e = Evidence::from_pairs([(a, 1)]).unwrap();
        assert!(matches!(
            query(&net, &[a], &e),
            Err(FactorError::TargetObserved(_))
        ));
        assert!(matches!(
            query(&net, &[], &e),
            Err(FactorError::EmptyTargets)
        ));
    }

    #[test]
    fn evidence_likelihood_cases() {
        let (net, _, b) = two_node();
        assert!((evidence_likelihood(&net, &Evidence::new()).unwrap() - 1.0).abs() < 1e-12);
        let e = Evidence::from_pairs([(b, 1)]).unwrap();
        assert!((evidence_likelihood(&net, &e).unwrap() - 0.41).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_evidence() {
        let mut bld = NetworkBuilder::new();
        let a = bld.add_variable("A", &["0", "1"]).unwrap();
        let b = bld.add_variable("B", &["0", "1"]).unwrap();
        bld.set_cpt(a, &[], vec![0.5, 0.5]).unwrap();
        bld.set_cpt(b, &[a], vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let net = bld.build().unwrap();
        let e = Evidence::from_pairs([(b, 1)]).unwrap();
        assert_eq!(evidence_likelihood(&net, &e).unwrap(), 0.0);
        assert_eq!(
            log_evidence_likelihood(&net, &e).unwrap(),
            f64::NEG_INFINITY
        );
        let q = query(&net, &[a], &e).unwrap();
        assert!(q.is_impossible());
        assert_eq!(q.evidence_prob(), 0.0);
    }

    #[test]
    fn chain_order_contains_exactly_the_eliminated() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        let bb = b.add_variable("B", &["0", "1"]).unwrap();
        let c = b.add_variable("C", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.5, 0.5]).unwrap();
        b.set_cpt(bb, &[a], vec![0.5; 4]).unwrap();
        b.set_cpt(c, &[bb], vec![0.5; 4]).unwrap();
        let net = b.build().unwrap();
        let mut order = elimination_order(&net, &[c]);
        order.sort();
        assert_eq!(order, vec![a, bb]);
        assert!(elimination_order(&net, &[a, bb, c]).is_empty());
    }

    #[test]
    fn star_leaves_before_hub() {
        let mut b = NetworkBuilder::new();
        let h = b.add_variable("H", &["0", "1"]).unwrap();
        b.set_cpt(h, &[], vec![0.5, 0.5]).unwrap();
        let mut leaves = Vec::new();
        for name in ["A", "B", "C", "D"] {
            let l = b.add_variable(name, &["0", "1"]).unwrap();
            b.set_cpt(l, &[h], vec![0.5; 4]).unwrap();
            leaves.push(l);
        }
        let net = b.build().unwrap();
        let order = elimination_order(&net, &[]);
        assert_eq!(order.len(), 5);
        assert_eq!(*order.last().unwrap(), h);
    }

    #[test]
    fn custom_order_is_validated() {
        let (net, a, b) = two_node();
        let e = Evidence::from_pairs([(b, 1)]).unwrap();
        assert!(evidence_likelihood_with_order(&net, &e, &[a, b]).is_err());
        assert!(evidence_likelihood_with_order(&net, &e, &[]).is_err());
        let p = evidence_likelihood_with_order(&net, &e, &[a]).unwrap();
        assert!((p - 0.41).abs() < 1e-12);
    }

    #[test]
    fn tiny_likelihoods_survive_in_log_space() {
        // 400 independent observations of probability 0.1 each: 1e-400 underflows f64.
        let mut b = NetworkBuilder::new();
        let root = b.add_variable("root", &["0", "1"]).unwrap();
        b.set_cpt(root, &[], vec![0.5, 0.5]).unwrap();
        let mut e = Evidence::new();
        for i in 0..400 {
            let v = b.add_variable(&format!("x{i:03}"), &["0", "1"]).unwrap();
            b.set_cpt(v, &[root], vec![0.9, 0.1, 0.9, 0.1]).unwrap();
            e.observe(v, 1).unwrap();
        }
        let net = b.build().unwrap();
        let ll = log_evidence_likelihood(&net, &e).unwrap();
        assert!((ll - 400.0 * 0.1f64.ln()).abs() < 1e-9);
    }
}
