//! Brute-force joint enumeration, the reference every other inference path is
//! checked against. Deliberately independent of [`Factor::product`].

use super::{Factor, FactorError, Network, Result, VarId};

/// Largest joint table [`enumerate_joint`] will materialize.
pub const ENUMERATION_LIMIT: u128 = 1 << 22;

/// Full joint distribution as a factor over every variable, in id order.
pub fn enumerate_joint(net: &Network) -> Result<Factor> {
    let cards: Vec<usize> = net.variables().iter().map(|v| v.cardinality()).collect();
    let size = cards.iter().map(|&c| c as u128).product::<u128>();
    if size > ENUMERATION_LIMIT {
        return Err(FactorError::EnumerationTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    // For each CPT, the variables it reads in scope order and their strides.
    let lookups: Vec<(Vec<usize>, Vec<usize>)> = net
        .cpts()
        .iter()
        .map(|cpt| {
            let vars: Vec<usize> = cpt.scope().iter().map(|v| v.0).collect();
            let mut strides = vec![1; vars.len()];
            for i in (0..vars.len().saturating_sub(1)).rev() {
                strides[i] = strides[i + 1] * cpt.cardinalities()[i + 1];
            }
            (vars, strides)
        })
        .collect();

    let size = size as usize;
    let mut values = Vec::with_capacity(size);
    let mut assign = vec![0usize; cards.len()];
    for _ in 0..size {
        let mut p = 1.0;
        for (cpt, (vars, strides)) in net.cpts().iter().zip(&lookups) {
            let idx: usize = vars.iter().zip(strides).map(|(&v, &s)| assign[v] * s).sum();
            p *= cpt.values()[idx];
        }
        values.push(p);
        for i in (0..assign.len()).rev() {
            assign[i] += 1;
            if assign[i] < cards[i] {
                break;
            }
            assign[i] = 0;
        }
    }
    let scope = (0..cards.len()).map(VarId).zip(cards).collect();
    Factor::new(scope, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::NetworkBuilder;

    #[test]
    fn single_variable() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.3, 0.7]).unwrap();
        let j = enumerate_joint(&b.build().unwrap()).unwrap();
        assert_eq!(j.values(), &[0.3, 0.7]);
    }

    #[test]
    fn two_node_joint() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        let bb = b.add_variable("B", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.7, 0.3]).unwrap();
        b.set_cpt(bb, &[a], vec![0.8, 0.2, 0.1, 0.9]).unwrap();
        let j = enumerate_joint(&b.build().unwrap()).unwrap();
        for (got, want) in j.values().iter().zip([0.56, 0.14, 0.03, 0.27]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!((j.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn guard_trips() {
        let mut b = NetworkBuilder::new();
        let states = ["a", "b", "c", "d"];
        for i in 0..12 {
            let v = b.add_variable(&format!("v{i}"), &states).unwrap();
            b.set_cpt(v, &[], vec![0.25; 4]).unwrap();
        }
        // 4^12 = 2^24 > 2^22
        assert!(matches!(
            enumerate_joint(&b.build().unwrap()),
            Err(FactorError::EnumerationTooLarge { .. })
        ));
    }
}
