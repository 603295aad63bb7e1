//! Discrete factors and exact inference.
//!
//! A [`Factor`] is a dense, row-major table of nonnegative reals over an ordered
//! scope of discrete variables (the last variable in the scope varies fastest).
//! [`Network`] holds one conditional probability table per variable; queries run
//! by variable elimination, and [`enumerate_joint`] provides the brute-force
//! reference used to check it.

mod enumerate;
mod inference;
mod network;
pub mod oracle;

use std::fmt;

use thiserror::Error;

pub use enumerate::{enumerate_joint, ENUMERATION_LIMIT};
pub use inference::{
    elimination_order, evidence_likelihood, evidence_likelihood_with_order,
    log_evidence_likelihood, query, QueryOutcome,
};
pub use network::{Evidence, Network, NetworkBuilder, Variable};

/// Index of a variable inside its [`Network`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FactorError {
    #[error("variable {var} has cardinality {left} in one factor and {right} in the other")]
    CardinalityMismatch {
        var: VarId,
        left: usize,
        right: usize,
    },
    #[error("variable {0} is not in the factor scope")]
    NotInScope(VarId),
    #[error("variable {0} appears twice in a scope")]
    DuplicateInScope(VarId),
    #[error("state {state} out of range for variable {var} with cardinality {cardinality}")]
    StateOutOfRange {
        var: VarId,
        state: usize,
        cardinality: usize,
    },
    #[error("table has {actual} entries but the scope requires {expected}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("factor entries must be finite and nonnegative (found {0})")]
    InvalidValue(f64),
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("variable `{0}` is declared twice")]
    DuplicateVariable(String),
    #[error("variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },
    #[error("variable `{0}` has no conditional probability table")]
    MissingCpt(String),
    #[error("conditional table of `{var}` sums to {sum} for parent configuration {row}")]
    NotNormalized { var: String, row: usize, sum: f64 },
    #[error("the parent relation contains a cycle through `{0}`")]
    Cycle(String),
    #[error("query targets must be nonempty")]
    EmptyTargets,
    #[error("target `{0}` is also observed")]
    TargetObserved(String),
    #[error("variable {0} is observed twice")]
    DuplicateObservation(VarId),
    #[error("joint table would have {size} entries (limit {limit})")]
    EnumerationTooLarge { size: u128, limit: u128 },
    #[error("elimination order is invalid: {0}")]
    InvalidOrder(String),
}

pub type Result<T> = std::result::Result<T, FactorError>;

/// Dense table over an ordered scope, row-major (last scope variable fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut out = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * cards[i + 1];
    }
    out
}

/// Advances a mixed-radix counter; returns `false` after the last assignment.
fn advance(assign: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..assign.len()).rev() {
        assign[i] += 1;
        if assign[i] < cards[i] {
            return true;
        }
        assign[i] = 0;
    }
    false
}

impl Factor {
    /// Builds a factor over `scope`, where each entry pairs a variable with its cardinality.
    pub fn new(scope: Vec<(VarId, usize)>, values: Vec<f64>) -> Result<Self> {
        let mut ids = Vec::with_capacity(scope.len());
        let mut cards = Vec::with_capacity(scope.len());
        for (v, c) in scope {
            if ids.contains(&v) {
                return Err(FactorError::DuplicateInScope(v));
            }
            ids.push(v);
            cards.push(c);
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(FactorError::ShapeMismatch {
                expected,
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(FactorError::InvalidValue(bad));
        }
        Ok(Factor {
            scope: ids,
            cards,
            values,
        })
    }

    pub fn scalar(value: f64) -> Self {
        Factor {
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_scalar(&self) -> bool {
        self.scope.is_empty()
    }

    /// The single entry of an empty-scope factor.
    pub fn scalar_value(&self) -> Option<f64> {
        self.is_scalar().then(|| self.values[0])
    }

    pub fn cardinality_of(&self, v: VarId) -> Option<usize> {
        self.position(v).map(|i| self.cards[i])
    }

    fn position(&self, v: VarId) -> Option<usize> {
        self.scope.iter().position(|&s| s == v)
    }

    /// Entry at a full assignment given in scope order.
    pub fn value(&self, assignment: &[usize]) -> Option<f64> {
        if assignment.len() != self.scope.len() {
            return None;
        }
        let mut idx = 0;
        for ((&a, &c), s) in assignment.iter().zip(&self.cards).zip(strides(&self.cards)) {
            if a >= c {
                return None;
            }
            idx += a * s;
        }
        Some(self.values[idx])
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Pointwise product over the union of both scopes (this factor's variables first).
    pub fn product(&self, other: &Factor) -> Result<Factor> {
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (&v, &c) in other.scope.iter().zip(&other.cards) {
            match self.position(v) {
                Some(i) if self.cards[i] != c => {
                    return Err(FactorError::CardinalityMismatch {
                        var: v,
                        left: self.cards[i],
                        right: c,
                    })
                }
                Some(_) => {}
                None => {
                    scope.push(v);
                    cards.push(c);
                }
            }
        }
        let stride_a = strides(&self.cards);
        let stride_b = strides(&other.cards);
        let step_a: Vec<usize> = scope
            .iter()
            .map(|&v| self.position(v).map_or(0, |i| stride_a[i]))
            .collect();
        let step_b: Vec<usize> = scope
            .iter()
            .map(|&v| other.position(v).map_or(0, |i| stride_b[i]))
            .collect();

        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut assign = vec![0; scope.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        loop {
            values.push(self.values[ia] * other.values[ib]);
            // Odometer step with incremental offsets.
            let mut i = assign.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                assign[i] += 1;
                ia += step_a[i];
                ib += step_b[i];
                if assign[i] < cards[i] {
                    done = false;
                    break;
                }
                ia -= step_a[i] * cards[i];
                ib -= step_b[i] * cards[i];
                assign[i] = 0;
            }
            if done {
                break;
            }
        }
        Ok(Factor {
            scope,
            cards,
            values,
        })
    }

    /// Sums `v` out of the factor.
    pub fn marginalize(&self, v: VarId) -> Result<Factor> {
        let pos = self.position(v).ok_or(FactorError::NotInScope(v))?;
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        let out_strides = strides(&cards);
        let step: Vec<usize> = (0..self.scope.len())
            .map(|i| match i.cmp(&pos) {
                std::cmp::Ordering::Less => out_strides[i],
                std::cmp::Ordering::Equal => 0,
                std::cmp::Ordering::Greater => out_strides[i - 1],
            })
            .collect();
        let mut values = vec![0.0; cards.iter().product()];
        let mut assign = vec![0; self.scope.len()];
        for &x in &self.values {
            let idx: usize = assign.iter().zip(&step).map(|(a, s)| a * s).sum();
            values[idx] += x;
            advance(&mut assign, &self.cards);
        }
        Ok(Factor {
            scope,
            cards,
            values,
        })
    }

    /// Sums out every variable in `vars` that is in scope.
    pub fn marginalize_all(&self, vars: &[VarId]) -> Result<Factor> {
        let mut f = self.clone();
        for &v in vars {
            f = f.marginalize(v)?;
        }
        Ok(f)
    }

    /// Slices the table at the observed states; observed variables leave the scope.
    /// Observations on variables outside the scope are ignored.
    pub fn reduce(&self, evidence: &Evidence) -> Result<Factor> {
        let mut fixed = vec![None; self.scope.len()];
        for (i, (&v, &c)) in self.scope.iter().zip(&self.cards).enumerate() {
            if let Some(state) = evidence.get(v) {
                if state >= c {
                    return Err(FactorError::StateOutOfRange {
                        var: v,
                        state,
                        cardinality: c,
                    });
                }
                fixed[i] = Some(state);
            }
        }
        if fixed.iter().all(Option::is_none) {
            return Ok(self.clone());
        }
        let in_strides = strides(&self.cards);
        let base: usize = fixed
            .iter()
            .zip(&in_strides)
            .map(|(f, s)| f.map_or(0, |x| x * s))
            .sum();
        let free: Vec<usize> = (0..self.scope.len())
            .filter(|&i| fixed[i].is_none())
            .collect();
        let scope: Vec<VarId> = free.iter().map(|&i| self.scope[i]).collect();
        let cards: Vec<usize> = free.iter().map(|&i| self.cards[i]).collect();
        let step: Vec<usize> = free.iter().map(|&i| in_strides[i]).collect();
        let size: usize = cards.iter().product();
        let mut values = Vec::with_capacity(size);
        let mut assign = vec![0; free.len()];
        for _ in 0..size {
            let idx: usize = base + assign.iter().zip(&step).map(|(a, s)| a * s).sum::<usize>();
            values.push(self.values[idx]);
            advance(&mut assign, &cards);
        }
        Ok(Factor {
            scope,
            cards,
            values,
        })
    }

    /// Reorders the table so that its scope follows `order` (a permutation of the scope).
    pub fn permuted(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(FactorError::ShapeMismatch {
                expected: self.scope.len(),
                actual: order.len(),
            });
        }
        let mut positions = Vec::with_capacity(order.len());
        for &v in order {
            let p = self.position(v).ok_or(FactorError::NotInScope(v))?;
            if positions.contains(&p) {
                return Err(FactorError::DuplicateInScope(v));
            }
            positions.push(p);
        }
        let in_strides = strides(&self.cards);
        let cards: Vec<usize> = positions.iter().map(|&p| self.cards[p]).collect();
        let step: Vec<usize> = positions.iter().map(|&p| in_strides[p]).collect();
        let mut values = Vec::with_capacity(self.values.len());
        let mut assign = vec![0; order.len()];
        for _ in 0..self.values.len() {
            let idx: usize = assign.iter().zip(&step).map(|(a, s)| a * s).sum();
            values.push(self.values[idx]);
            advance(&mut assign, &cards);
        }
        Ok(Factor {
            scope: order.to_vec(),
            cards,
            values,
        })
    }

    pub(crate) fn scaled(mut self, by: f64) -> Factor {
        for v in &mut self.values {
            *v *= by;
        }
        self
    }

    /// Divides every entry by the total; `None` when the total is zero.
    pub fn normalized(&self) -> Option<Factor> {
        let total = self.sum();
        (total > 0.0).then(|| self.clone().scaled(1.0 / total))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);
    const Z: VarId = VarId(2);

    fn f(scope: &[(VarId, usize)], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), values.to_vec()).unwrap()
    }

    #[test]
    fn scalar_one_is_unit() {
        let g = f(&[(X, 2), (Y, 3)], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let p = Factor::scalar(1.0).product(&g).unwrap();
        assert_eq!(p, g);
    }

    #[test]
    fn pointwise_product_on_shared_scope() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(X, 2)], &[0.5, 0.5]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.scope(), &[X]);
        assert!((p.values()[0] - 0.15).abs() < 1e-15);
        assert!((p.values()[1] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn outer_product_matches_hand_table() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(Y, 2)], &[0.4, 0.6]);
        let p = a.product(&b).unwrap();
        assert_eq!(p.scope(), &[X, Y]);
        // (x0,y0) (x0,y1) (x1,y0) (x1,y1)
        let expected = [0.12, 0.18, 0.28, 0.42];
        for (got, want) in p.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn product_rejects_cardinality_mismatch() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        let b = f(&[(X, 3)], &[0.2, 0.3, 0.5]);
        assert!(matches!(
            a.product(&b),
            Err(FactorError::CardinalityMismatch { .. })
        ));
    }

    #[test]
    fn marginalize_cases() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        assert!((a.marginalize(X).unwrap().scalar_value().unwrap() - 1.0).abs() < 1e-15);

        let xy = f(&[(X, 2), (Y, 2)], &[0.1, 0.2, 0.3, 0.4]);
        let m = xy.marginalize(Y).unwrap();
        assert_eq!(m.scope(), &[X]);
        assert!((m.values()[0] - 0.3).abs() < 1e-15);
        assert!((m.values()[1] - 0.7).abs() < 1e-15);

        let all = xy.marginalize_all(&[X, Y]).unwrap();
        assert!((all.scalar_value().unwrap() - 1.0).abs() < 1e-15);

        assert_eq!(a.marginalize(Z), Err(FactorError::NotInScope(Z)));
    }

    #[test]
    fn reduce_cases() {
        let a = f(&[(X, 2)], &[0.3, 0.7]);
        assert_eq!(a.reduce(&Evidence::new()).unwrap(), a);
        let r = a.reduce(&Evidence::from_pairs([(X, 1)]).unwrap()).unwrap();
        assert_eq!(r.scalar_value(), Some(0.7));

        let xy = f(&[(X, 2), (Y, 2)], &[0.1, 0.2, 0.3, 0.4]);
        let col = xy.reduce(&Evidence::from_pairs([(Y, 0)]).unwrap()).unwrap();
        assert_eq!(col.scope(), &[X]);
        assert_eq!(col.values(), &[0.1, 0.3]);

        let bad = a.reduce(&Evidence::from_pairs([(X, 2)]).unwrap());
        assert!(matches!(bad, Err(FactorError::StateOutOfRange { .. })));
    }

    #[test]
    fn permute_round_trip() {
        let xyz = f(
            &[(X, 2), (Y, 3), (Z, 2)],
            &(0..12).map(|i| i as f64).collect::<Vec<_>>(),
        );
        let p = xyz.permuted(&[Z, X, Y]).unwrap();
        assert_eq!(p.value(&[1, 0, 2]), xyz.value(&[0, 2, 1]));
        assert_eq!(p.permuted(&[X, Y, Z]).unwrap(), xyz);
    }

    #[test]
    fn constructor_rejects_bad_tables() {
        assert!(Factor::new(vec![(X, 2)], vec![0.5]).is_err());
        assert!(Factor::new(vec![(X, 2)], vec![0.5, -0.1]).is_err());
        assert!(Factor::new(vec![(X, 2)], vec![0.5, f64::NAN]).is_err());
        assert!(Factor::new(vec![(X, 2), (X, 2)], vec![0.0; 4]).is_err());
    }
}
