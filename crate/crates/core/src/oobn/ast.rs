use crate::diag::Location;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    Input,
    Output,
    Internal,
}

/// A node reference, either local (`x`) or an output of a nested instance (`inst.x`).
#[derive(Clone, Debug, PartialEq)]
pub struct NodeRef {
    pub instance: Option<String>,
    pub node: String,
    pub loc: Location,
}

impl NodeRef {
    pub fn local(node: &str) -> Self {
        NodeRef {
            instance: None,
            node: node.to_string(),
            loc: Location::default(),
        }
    }

    pub fn qualified(instance: &str, node: &str) -> Self {
        NodeRef {
            instance: Some(instance.to_string()),
            node: node.to_string(),
            loc: Location::default(),
        }
    }
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.instance {
            Some(i) => write!(f, "{}.{}", i, self.node),
            None => f.write_str(&self.node),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeBody {
    /// Bound from outside at instantiation.
    Input,
    /// Literal table: one row per parent configuration, row-major in parent order.
    Table { rows: Vec<Vec<f64>>, loc: Location },
    /// Built-in haplotype transmission CPT with mutation rate μ.
    Transmit { rate: f64, loc: Location },
    /// Re-exports an instance's output under a local name.
    Alias(NodeRef),
    /// No CPT given; rejected by validation.
    Missing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeDecl {
    pub name: String,
    pub role: NodeRole,
    /// Empty for aliases, whose states come from their target.
    pub states: Vec<String>,
    pub parents: Vec<NodeRef>,
    pub body: NodeBody,
    pub loc: Location,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binding {
    pub input: String,
    pub target: NodeRef,
    pub loc: Location,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceDecl {
    pub name: String,
    pub class: String,
    pub bindings: Vec<Binding>,
    pub loc: Location,
    pub class_loc: Location,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkClass {
    pub name: String,
    pub nodes: Vec<NodeDecl>,
    pub instances: Vec<InstanceDecl>,
    pub loc: Location,
}

impl NetworkClass {
    pub fn node(&self, name: &str) -> Option<&NodeDecl> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn instance(&self, name: &str) -> Option<&InstanceDecl> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &NodeDecl> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &NodeDecl> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Output)
    }

    pub fn internals(&self) -> impl Iterator<Item = &NodeDecl> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Internal)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDocument {
    pub classes: Vec<NetworkClass>,
    pub root: String,
    pub root_loc: Location,
}

impl ModelDocument {
    pub fn class(&self, name: &str) -> Option<&NetworkClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Copy with every source location zeroed, for structural comparison.
    pub fn without_locations(&self) -> ModelDocument {
        let z = Location::default();
        let strip_ref = |r: &NodeRef| NodeRef {
            loc: z,
            ..r.clone()
        };
        ModelDocument {
            root: self.root.clone(),
            root_loc: z,
            classes: self
                .classes
                .iter()
                .map(|c| NetworkClass {
                    name: c.name.clone(),
                    loc: z,
                    nodes: c
                        .nodes
                        .iter()
                        .map(|n| NodeDecl {
                            name: n.name.clone(),
                            role: n.role,
                            states: n.states.clone(),
                            parents: n.parents.iter().map(strip_ref).collect(),
                            body: match &n.body {
                                NodeBody::Table { rows, .. } => NodeBody::Table {
                                    rows: rows.clone(),
                                    loc: z,
                                },
                                NodeBody::Transmit { rate, .. } => NodeBody::Transmit {
                                    rate: *rate,
                                    loc: z,
                                },
                                NodeBody::Alias(r) => NodeBody::Alias(strip_ref(r)),
                                other => other.clone(),
                            },
                            loc: z,
                        })
                        .collect(),
                    instances: c
                        .instances
                        .iter()
                        .map(|i| InstanceDecl {
                            name: i.name.clone(),
                            class: i.class.clone(),
                            loc: z,
                            class_loc: z,
                            bindings: i
                                .bindings
                                .iter()
                                .map(|b| Binding {
                                    input: b.input.clone(),
                                    target: strip_ref(&b.target),
                                    loc: z,
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}
