use std::collections::{BTreeMap, HashMap};

use super::{Factor, FactorError, Result, VarId};

/// Tolerance on each conditional row of a network CPT.
pub const CPT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub id: VarId,
    pub name: String,
    pub states: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s == label)
    }
}

/// Observed states keyed by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence(BTreeMap<VarId, usize>);

impl Evidence {
    pub fn new() -> Self {
        Evidence(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Result<Self> {
        let mut e = Evidence::new();
        for (v, s) in pairs {
            e.observe(v, s)?;
        }
        Ok(e)
    }

    /// Records an observation; a variable may be observed only once.
    pub fn observe(&mut self, var: VarId, state: usize) -> Result<()> {
        if self.0.insert(var, state).is_some() {
            return Err(FactorError::DuplicateObservation(var));
        }
        Ok(())
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.0.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().map(|(&v, &s)| (v, s))
    }

    /// Union of two assignments; fails if a variable is observed in both.
    pub fn merged(&self, other: &Evidence) -> Result<Evidence> {
        let mut out = self.clone();
        for (v, s) in other.iter() {
            out.observe(v, s)?;
        }
        Ok(out)
    }
}

/// Immutable Bayesian network: one CPT per variable, scope `(parents…, child)`.
#[derive(Clone, Debug)]
pub struct Network {
    variables: Vec<Variable>,
    parents: Vec<Vec<VarId>>,
    cpts: Vec<Factor>,
    by_name: HashMap<String, VarId>,
}

impl Network {
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn parents(&self, id: VarId) -> &[VarId] {
        &self.parents[id.0]
    }

    pub fn cpt(&self, id: VarId) -> &Factor {
        &self.cpts[id.0]
    }

    pub fn cpts(&self) -> &[Factor] {
        &self.cpts
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id.0].cardinality()
    }

    /// Resolves name/label pairs into an [`Evidence`] assignment.
    pub fn evidence_by_name<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<Evidence> {
        let mut e = Evidence::new();
        for (name, label) in pairs {
            let id = self
                .var_id(name)
                .ok_or_else(|| FactorError::UnknownVariable(name.to_string()))?;
            let state = self.variables[id.0].state_index(label).ok_or_else(|| {
                FactorError::UnknownVariable(format!("{name}={label} (no such state)"))
            })?;
            e.observe(id, state)?;
        }
        Ok(e)
    }

    /// Checks that every observation names a known variable and an in-range state.
    pub fn check_evidence(&self, e: &Evidence) -> Result<()> {
        for (v, s) in e.iter() {
            if v.0 >= self.len() {
                return Err(FactorError::UnknownVariable(v.to_string()));
            }
            let c = self.cardinality(v);
            if s >= c {
                return Err(FactorError::StateOutOfRange {
                    var: v,
                    state: s,
                    cardinality: c,
                });
            }
        }
        Ok(())
    }
}

struct PendingCpt {
    parents: Vec<VarId>,
    values: Vec<f64>,
}

/// Incremental construction of a [`Network`]; [`NetworkBuilder::build`] checks the
/// parent relation for cycles and every CPT row for normalization.
#[derive(Default)]
pub struct NetworkBuilder {
    variables: Vec<Variable>,
    by_name: HashMap<String, VarId>,
    cpts: Vec<Option<PendingCpt>>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable<S: AsRef<str>>(&mut self, name: &str, states: &[S]) -> Result<VarId> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_string()).collect();
        if states.len() < 2 {
            return Err(FactorError::InvalidVariable {
                name: name.to_string(),
                reason: "needs at least two states".into(),
            });
        }
        for (i, s) in states.iter().enumerate() {
            if s.is_empty() {
                return Err(FactorError::InvalidVariable {
                    name: name.to_string(),
                    reason: "empty state label".into(),
                });
            }
            if states[..i].contains(s) {
                return Err(FactorError::InvalidVariable {
                    name: name.to_string(),
                    reason: format!("state `{s}` listed twice"),
                });
            }
        }
        if self.by_name.contains_key(name) {
            return Err(FactorError::DuplicateVariable(name.to_string()));
        }
        let id = VarId(self.variables.len());
        self.variables.push(Variable {
            id,
            name: name.to_string(),
            states,
        });
        self.by_name.insert(name.to_string(), id);
        self.cpts.push(None);
        Ok(id)
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn cardinality(&self, id: VarId) -> Option<usize> {
        self.variables.get(id.0).map(Variable::cardinality)
    }

    /// Sets the CPT of `child`. `values` lists one distribution over the child's
    /// states per parent configuration, configurations in row-major parent order.
    pub fn set_cpt(&mut self, child: VarId, parents: &[VarId], values: Vec<f64>) -> Result<()> {
        for &v in parents.iter().chain(std::iter::once(&child)) {
            if v.0 >= self.variables.len() {
                return Err(FactorError::UnknownVariable(v.to_string()));
            }
        }
        self.cpts[child.0] = Some(PendingCpt {
            parents: parents.to_vec(),
            values,
        });
        Ok(())
    }

    pub fn build(self) -> Result<Network> {
        let n = self.variables.len();
        let mut parents = Vec::with_capacity(n);
        let mut cpts = Vec::with_capacity(n);
        for (var, pending) in self.variables.iter().zip(self.cpts) {
            let pending = pending.ok_or_else(|| FactorError::MissingCpt(var.name.clone()))?;
            let mut scope: Vec<(VarId, usize)> = pending
                .parents
                .iter()
                .map(|&p| (p, self.variables[p.0].cardinality()))
                .collect();
            scope.push((var.id, var.cardinality()));
            let factor = Factor::new(scope, pending.values)?;
            let k = var.cardinality();
            for (row, chunk) in factor.values().chunks(k).enumerate() {
                let sum: f64 = chunk.iter().sum();
                if (sum - 1.0).abs() > CPT_TOLERANCE {
                    return Err(FactorError::NotNormalized {
                        var: var.name.clone(),
                        row,
                        sum,
                    });
                }
            }
            parents.push(pending.parents);
            cpts.push(factor);
        }
        check_acyclic(&self.variables, &parents)?;
        Ok(Network {
            variables: self.variables,
            parents,
            cpts,
            by_name: self.by_name,
        })
    }
}

fn check_acyclic(vars: &[Variable], parents: &[Vec<VarId>]) -> Result<()> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; vars.len()];
    for start in 0..vars.len() {
        if state[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        state[start] = 1;
        while let Some((node, next)) = stack.pop() {
            if let Some(&p) = parents[node].get(next) {
                stack.push((node, next + 1));
                match state[p.0] {
                    0 => {
                        state[p.0] = 1;
                        stack.push((p.0, 0));
                    }
                    1 => return Err(FactorError::Cycle(vars[p.0].name.clone())),
                    _ => {}
                }
            } else {
                state[node] = 2;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_two_node_network() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        let c = b.add_variable("B", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.7, 0.3]).unwrap();
        b.set_cpt(c, &[a], vec![0.8, 0.2, 0.1, 0.9]).unwrap();
        let net = b.build().unwrap();
        assert_eq!(net.len(), 2);
        assert_eq!(net.parents(c), &[a]);
        assert_eq!(net.var_id("B"), Some(c));
    }

    #[test]
    fn rejects_unnormalized_row() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        b.set_cpt(a, &[], vec![0.7, 0.2]).unwrap();
        assert!(matches!(b.build(), Err(FactorError::NotNormalized { .. })));
    }

    #[test]
    fn rejects_cycle() {
        let mut b = NetworkBuilder::new();
        let a = b.add_variable("A", &["0", "1"]).unwrap();
        let c = b.add_variable("B", &["0", "1"]).unwrap();
        b.set_cpt(a, &[c], vec![0.5; 4]).unwrap();
        b.set_cpt(c, &[a], vec![0.5; 4]).unwrap();
        assert!(matches!(b.build(), Err(FactorError::Cycle(_))));
    }

    #[test]
    fn rejects_bad_variables() {
        let mut b = NetworkBuilder::new();
        assert!(b.add_variable("A", &["only"]).is_err());
        assert!(b.add_variable("A", &["x", "x"]).is_err());
        assert!(b.add_variable("A", &["x", ""]).is_err());
        b.add_variable("A", &["x", "y"]).unwrap();
        assert!(matches!(
            b.add_variable("A", &["x", "y"]),
            Err(FactorError::DuplicateVariable(_))
        ));
    }

    #[test]
    fn missing_cpt_is_an_error() {
        let mut b = NetworkBuilder::new();
        b.add_variable("A", &["x", "y"]).unwrap();
        assert!(matches!(b.build(), Err(FactorError::MissingCpt(_))));
    }

    #[test]
    fn evidence_rejects_double_observation() {
        let mut e = Evidence::new();
        e.observe(VarId(0), 1).unwrap();
        assert!(e.observe(VarId(0), 0).is_err());
    }
}
