use std::collections::HashMap;

use super::ast::*;
use super::OobnError;
use crate::factor::{FactorError, Network, NetworkBuilder};
use crate::pedigree::transmission_rows;

fn qualify(path: &str, name: &str) -> String {
    if path.is_empty() {
        name.to_string()
    } else {
        format!("{path}.{name}")
    }
}

/// Input name → qualified name of the outer variable bound to it.
type Env = HashMap<String, String>;

enum CptSpec {
    Rows(Vec<Vec<f64>>),
    Transmit(f64),
}

struct Pending {
    name: String,
    parents: Vec<String>,
    cpt: CptSpec,
}

struct Flattener<'a> {
    doc: &'a ModelDocument,
    builder: NetworkBuilder,
    pending: Vec<Pending>,
}

fn malformed(msg: String) -> OobnError {
    OobnError::Network(FactorError::UnknownVariable(msg))
}

impl<'a> Flattener<'a> {
    fn class(&self, name: &str) -> Result<&'a NetworkClass, OobnError> {
        self.doc
            .class(name)
            .ok_or_else(|| malformed(format!("class `{name}`")))
    }

    fn instance_env(
        &self,
        class: &NetworkClass,
        path: &str,
        env: &Env,
        inst: &InstanceDecl,
    ) -> Result<Env, OobnError> {
        inst.bindings
            .iter()
            .map(|b| Ok((b.input.clone(), self.resolve(class, path, env, &b.target)?)))
            .collect()
    }

    /// Qualified name of the flattened variable a reference denotes.
    fn resolve(
        &self,
        class: &NetworkClass,
        path: &str,
        env: &Env,
        r: &NodeRef,
    ) -> Result<String, OobnError> {
        match &r.instance {
            None => {
                let node = class
                    .node(&r.node)
                    .ok_or_else(|| malformed(qualify(path, &r.node)))?;
                match &node.body {
                    NodeBody::Input => env.get(&node.name).cloned().ok_or_else(|| {
                        malformed(format!("unbound input {}", qualify(path, &node.name)))
                    }),
                    NodeBody::Alias(target) => self.resolve(class, path, env, target),
                    _ => Ok(qualify(path, &node.name)),
                }
            }
            Some(inst_name) => {
                let inst = class
                    .instance(inst_name)
                    .ok_or_else(|| malformed(qualify(path, inst_name)))?;
                let inner = self.class(&inst.class)?;
                let inner_env = self.instance_env(class, path, env, inst)?;
                self.resolve(
                    inner,
                    &qualify(path, inst_name),
                    &inner_env,
                    &NodeRef::local(&r.node),
                )
            }
        }
    }

    fn walk(&mut self, class: &'a NetworkClass, path: &str, env: &Env) -> Result<(), OobnError> {
        for node in &class.nodes {
            let cpt = match &node.body {
                NodeBody::Table { rows, .. } => CptSpec::Rows(rows.clone()),
                NodeBody::Transmit { rate, .. } => CptSpec::Transmit(*rate),
                NodeBody::Input | NodeBody::Alias(_) => continue,
                NodeBody::Missing => return Err(malformed(format!("{} has no cpt", node.name))),
            };
            let name = qualify(path, &node.name);
            self.builder.add_variable(&name, &node.states)?;
            let parents = node
                .parents
                .iter()
                .map(|p| self.resolve(class, path, env, p))
                .collect::<Result<_, _>>()?;
            self.pending.push(Pending { name, parents, cpt });
        }
        for inst in &class.instances {
            let inner = self.class(&inst.class)?;
            let inner_env = self.instance_env(class, path, env, inst)?;
            self.walk(inner, &qualify(path, &inst.name), &inner_env)?;
        }
        Ok(())
    }
}

/// Flattens without running validation first; used by validation itself to
/// detect cycles that only appear once instances are expanded.
pub(crate) fn flatten_unchecked(doc: &ModelDocument) -> Result<Network, OobnError> {
    let mut f = Flattener {
        doc,
        builder: NetworkBuilder::new(),
        pending: Vec::new(),
    };
    let root = f.class(&doc.root)?;
    f.walk(root, "", &Env::new())?;
    let Flattener {
        mut builder,
        pending,
        ..
    } = f;
    for p in pending {
        let child = builder.var_id(&p.name).expect("declared during walk");
        let parents = p
            .parents
            .iter()
            .map(|n| builder.var_id(n).ok_or_else(|| malformed(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let k = builder.cardinality(child).expect("declared");
        let values = match p.cpt {
            CptSpec::Rows(rows) => rows
                .into_iter()
                .flat_map(|row| {
                    let total: f64 = row.iter().sum();
                    row.into_iter().map(move |x| x / total)
                })
                .collect(),
            CptSpec::Transmit(rate) => {
                transmission_rows(rate, k).map_err(|e| malformed(format!("{}: {e}", p.name)))?
            }
        };
        builder.set_cpt(child, &parents, values)?;
    }
    Ok(builder.build()?)
}

#[cfg(test)]
mod tests {
    use super::super::{flatten, parse};
    use crate::factor::{query, Evidence};

    #[test]
    fn single_node_keeps_its_name() {
        let doc = parse("class M { node a : [x, y] cpt { 0.4, 0.6 }; } network M;").unwrap();
        let net = flatten(&doc).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.variables()[0].name, "a");
    }

    #[test]
    fn instance_nodes_are_qualified() {
        let src = r#"
            class Two { node x : [a, b] cpt {0.5, 0.5}; node y : [a, b] parents (x) cpt {0.9,0.1;0.2,0.8}; }
            class R { instance ped : Two (); }
            network R;"#;
        let net = flatten(&parse(src).unwrap()).unwrap();
        let names: Vec<_> = net.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["ped.x", "ped.y"]);
    }

    #[test]
    fn bound_inputs_share_the_outer_variable() {
        let src = r#"
            class Leaf { input node f : [a, b]; output node o : [a, b] parents (f) cpt {0.9,0.1;0.3,0.7}; }
            class R {
              node freq : [a, b] cpt {0.2, 0.8};
              instance one : Leaf (f = freq);
              instance two : Leaf (f = freq);
            }
            network R;"#;
        let net = flatten(&parse(src).unwrap()).unwrap();
        let names: Vec<_> = net.variables().iter().map(|v| v.name.as_str()).collect();
        assert_eq!(names, ["freq", "one.o", "two.o"]);
        let freq = net.var_id("freq").unwrap();
        assert_eq!(net.parents(net.var_id("one.o").unwrap()), &[freq]);
        assert_eq!(net.parents(net.var_id("two.o").unwrap()), &[freq]);
    }

    #[test]
    fn aliases_and_nested_outputs_resolve() {
        let src = r#"
            class Leaf { input node h : [a, b]; output node o : [a, b] parents (h) cpt transmit(0); }
            class Mid { input node h : [a, b]; instance l : Leaf (h = h); output node o = l.o; }
            class R {
              node h : [a, b] cpt {0.25, 0.75};
              instance m : Mid (h = h);
              node tail : [a, b] parents (m.o) cpt {1, 0; 0, 1};
            }
            network R;"#;
        let net = flatten(&parse(src).unwrap()).unwrap();
        let tail = net.var_id("tail").unwrap();
        let leaf = net.var_id("m.l.o").unwrap();
        assert_eq!(net.parents(tail), &[leaf]);
        let q = query(&net, &[tail], &Evidence::new()).unwrap();
        assert!((q.posterior().unwrap().values()[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn literal_rows_are_renormalized_exactly() {
        let doc = parse(
            "class M { node a : [x, y, z] cpt { 0.3333333, 0.3333333, 0.3333333 }; } network M;",
        )
        .unwrap();
        let net = flatten(&doc).unwrap();
        let v = net.cpt(net.var_id("a").unwrap()).values();
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
