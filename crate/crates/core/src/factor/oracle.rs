//! Random small networks and an enumeration-based cross-check of variable
//! elimination. Used by the `oracle` command and by the property tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    enumerate_joint, evidence_likelihood, query, Evidence, Network, NetworkBuilder, QueryOutcome,
    Result, VarId,
};

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub max_variables: usize,
    pub min_cardinality: usize,
    pub max_cardinality: usize,
    pub max_parents: usize,
    /// Upper bound on the joint table size of a generated network.
    pub max_joint_size: usize,
    /// Probability that a CPT row puts all its mass on one state.
    pub deterministic_row_prob: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            max_variables: 12,
            min_cardinality: 2,
            max_cardinality: 4,
            max_parents: 3,
            max_joint_size: 1 << 16,
            deterministic_row_prob: 0.1,
        }
    }
}

/// One generated test case: a network, evidence on some variables and query targets.
#[derive(Clone, Debug)]
pub struct OracleCase {
    pub network: Network,
    pub evidence: Evidence,
    pub targets: Vec<VarId>,
}

pub fn random_network<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> Network {
    let n = rng.random_range(1..=cfg.max_variables);
    let mut cards = Vec::with_capacity(n);
    let mut joint = 1usize;
    for _ in 0..n {
        let hi = (cfg.max_joint_size / joint).min(cfg.max_cardinality);
        if hi < cfg.min_cardinality {
            break;
        }
        let c = rng.random_range(cfg.min_cardinality..=hi);
        joint *= c;
        cards.push(c);
    }
    // Names are shuffled relative to ids so the lexicographic tie-break is exercised.
    let mut names: Vec<String> = (0..cards.len()).map(|i| format!("v{i:02}")).collect();
    names.shuffle(rng);

    let mut b = NetworkBuilder::new();
    let ids: Vec<VarId> = cards
        .iter()
        .zip(&names)
        .map(|(&c, name)| {
            let states: Vec<String> = (0..c).map(|s| format!("s{s}")).collect();
            b.add_variable(name, &states)
                .expect("generated names are unique")
        })
        .collect();

    for (i, &child) in ids.iter().enumerate() {
        let mut pool: Vec<VarId> = ids[..i].to_vec();
        pool.shuffle(rng);
        let k = rng.random_range(0..=cfg.max_parents.min(i));
        let parents: Vec<VarId> = pool.into_iter().take(k).collect();
        let rows: usize = parents.iter().map(|p| cards[p.0]).product();
        let c = cards[i];
        let mut values = Vec::with_capacity(rows * c);
        for _ in 0..rows {
            if rng.random_bool(cfg.deterministic_row_prob) {
                let hot = rng.random_range(0..c);
                values.extend((0..c).map(|s| if s == hot { 1.0 } else { 0.0 }));
            } else {
                let raw: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                values.extend(raw.iter().map(|x| x / total));
            }
        }
        b.set_cpt(child, &parents, values)
            .expect("valid generated CPT");
    }
    b.build()
        .expect("generated networks are acyclic and normalized")
}

pub fn random_case<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> OracleCase {
    let network = random_network(rng, cfg);
    let mut order: Vec<VarId> = (0..network.len()).map(VarId).collect();
    order.shuffle(rng);
    let observed = rng.random_range(0..network.len());
    let mut evidence = Evidence::new();
    for &v in &order[..observed] {
        let s = rng.random_range(0..network.cardinality(v));
        evidence.observe(v, s).expect("each variable observed once");
    }
    let free = &order[observed..];
    let t = rng.random_range(1..=free.len().min(2));
    OracleCase {
        targets: free[..t].to_vec(),
        network,
        evidence,
    }
}

/// Enumeration-side answer for a case: P(e) and the unnormalized joint of the
/// targets with e, both by direct summation over the joint table.
pub struct EnumeratedAnswer {
    pub evidence_prob: f64,
    /// Row-major over `targets`, unnormalized.
    pub target_mass: Vec<f64>,
}

pub fn enumerate_answer(case: &OracleCase) -> Result<EnumeratedAnswer> {
    let net = &case.network;
    let joint = enumerate_joint(net)?;
    let cards: Vec<usize> = net.variables().iter().map(|v| v.cardinality()).collect();
    let target_cards: Vec<usize> = case.targets.iter().map(|t| cards[t.0]).collect();
    let mut target_mass = vec![0.0; target_cards.iter().product()];
    let mut evidence_prob = 0.0;
    let mut assign = vec![0usize; cards.len()];
    for &p in joint.values() {
        if case.evidence.iter().all(|(v, s)| assign[v.0] == s) {
            evidence_prob += p;
            let mut idx = 0;
            for (t, &c) in case.targets.iter().zip(&target_cards) {
                idx = idx * c + assign[t.0];
            }
            target_mass[idx] += p;
        }
        for i in (0..assign.len()).rev() {
            assign[i] += 1;
            if assign[i] < cards[i] {
                break;
            }
            assign[i] = 0;
        }
    }
    Ok(EnumeratedAnswer {
        evidence_prob,
        target_mass,
    })
}

/// Description of the first disagreement found by [`check_case`].
#[derive(Clone, Debug)]
pub struct Mismatch {
    pub what: String,
    pub elimination: f64,
    pub enumeration: f64,
}

/// Compares variable elimination against enumeration for one case.
pub fn check_case(case: &OracleCase, tol: f64) -> Result<Option<Mismatch>> {
    let truth = enumerate_answer(case)?;
    let ve_pe = evidence_likelihood(&case.network, &case.evidence)?;
    if (ve_pe - truth.evidence_prob).abs() > tol {
        return Ok(Some(Mismatch {
            what: "evidence likelihood".into(),
            elimination: ve_pe,
            enumeration: truth.evidence_prob,
        }));
    }
    match query(&case.network, &case.targets, &case.evidence)? {
        QueryOutcome::ImpossibleEvidence => {
            if truth.evidence_prob > 0.0 {
                return Ok(Some(Mismatch {
                    what: "impossible-evidence verdict".into(),
                    elimination: 0.0,
                    enumeration: truth.evidence_prob,
                }));
            }
        }
        QueryOutcome::Posterior {
            posterior,
            evidence_prob,
            ..
        } => {
            if truth.evidence_prob == 0.0 || (evidence_prob - truth.evidence_prob).abs() > tol {
                return Ok(Some(Mismatch {
                    what: "query evidence probability".into(),
                    elimination: evidence_prob,
                    enumeration: truth.evidence_prob,
                }));
            }
            for (i, (&got, &mass)) in posterior
                .values()
                .iter()
                .zip(&truth.target_mass)
                .enumerate()
            {
                let want = mass / truth.evidence_prob;
                if (got - want).abs() > tol {
                    return Ok(Some(Mismatch {
                        what: format!("posterior entry {i}"),
                        elimination: got,
                        enumeration: want,
                    }));
                }
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generated_networks_respect_limits() {
        let cfg = GeneratorConfig::default();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let net = random_network(&mut rng, &cfg);
            assert!(!net.is_empty() && net.len() <= cfg.max_variables);
            let size: usize = net.variables().iter().map(|v| v.cardinality()).product();
            assert!(size <= cfg.max_joint_size);
            for v in net.variables() {
                assert!((2..=4).contains(&v.cardinality()));
                assert!(net.parents(v.id).len() <= cfg.max_parents);
            }
        }
    }

    #[test]
    fn same_seed_same_cases() {
        let cfg = GeneratorConfig::default();
        let mut a = rand::rngs::StdRng::seed_from_u64(42);
        let mut b = rand::rngs::StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let ca = random_case(&mut a, &cfg);
            let cb = random_case(&mut b, &cfg);
            assert_eq!(ca.evidence, cb.evidence);
            assert_eq!(ca.targets, cb.targets);
            assert_eq!(ca.network.cpts(), cb.network.cpts());
        }
    }
}
