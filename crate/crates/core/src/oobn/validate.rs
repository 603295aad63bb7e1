use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::MAX_DEPTH;
use crate::diag::{sort_diagnostics, Diagnostic};
use crate::factor::FactorError;

/// Tolerance on literal CPT rows as typed in a document.
pub const LITERAL_TOLERANCE: f64 = 1e-6;

/// Name-level checks run at parse time: duplicate names, unknown classes and an
/// unknown root.
pub fn name_diagnostics(doc: &ModelDocument) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen_classes = HashSet::new();
    for class in &doc.classes {
        if !seen_classes.insert(class.name.as_str()) {
            out.push(Diagnostic::error(
                class.loc,
                "E_DUPLICATE_NAME",
                format!("class `{}` is declared more than once", class.name),
            ));
        }
        let mut seen = HashSet::new();
        let members = class
            .nodes
            .iter()
            .map(|n| (n.name.as_str(), n.loc))
            .chain(class.instances.iter().map(|i| (i.name.as_str(), i.loc)));
        for (name, loc) in members {
            if !seen.insert(name) {
                out.push(Diagnostic::error(
                    loc,
                    "E_DUPLICATE_NAME",
                    format!(
                        "`{name}` is declared more than once in class `{}`",
                        class.name
                    ),
                ));
            }
        }
        for inst in &class.instances {
            if doc.class(&inst.class).is_none() {
                out.push(Diagnostic::error(
                    inst.loc,
                    "E_UNKNOWN_CLASS",
                    format!(
                        "instance `{}` refers to undeclared class `{}`",
                        inst.name, inst.class
                    ),
                ));
            }
        }
    }
    if doc.class(&doc.root).is_none() {
        out.push(Diagnostic::error(
            doc.root_loc,
            "E_UNKNOWN_ROOT",
            format!("root class `{}` is not declared", doc.root),
        ));
    }
    out
}

/// Every structural check on a parsed document. Empty iff the document can be flattened.
pub fn validate(doc: &ModelDocument) -> Vec<Diagnostic> {
    let mut out = name_diagnostics(doc);
    let cyclic = class_cycles(doc, &mut out);
    if !cyclic {
        if let Some(root) = doc.class(&doc.root) {
            let depth = instantiation_depth(doc, &root.name, &mut HashMap::new());
            if depth > MAX_DEPTH {
                out.push(Diagnostic::error(
                    doc.root_loc,
                    "E_DEPTH_EXCEEDED",
                    format!("instantiation depth {depth} exceeds the limit of {MAX_DEPTH}"),
                ));
            }
            if let Some(input) = root.inputs().next() {
                out.push(Diagnostic::error(
                    input.loc,
                    "E_ROOT_INPUT",
                    format!(
                        "root class `{}` declares input `{}`; the root has nothing to bind it to",
                        root.name, input.name
                    ),
                ));
            }
        }
    }
    let checker = Checker { doc, cyclic };
    for class in &doc.classes {
        checker.class(class, &mut out);
    }
    if out.iter().all(|d| !d.is_error()) {
        if let Err(e) = super::flatten::flatten_unchecked(doc) {
            let code = match &e {
                super::OobnError::Network(FactorError::Cycle(_)) => "E_NODE_CYCLE",
                // Two references that resolve to the same flattened variable.
                super::OobnError::Network(FactorError::DuplicateInScope(_)) => "E_DUPLICATE_PARENT",
                _ => "E_FLATTEN",
            };
            out.push(Diagnostic::error(doc.root_loc, code, e.to_string()));
        }
    }
    sort_diagnostics(&mut out);
    out
}

fn class_cycles(doc: &ModelDocument, out: &mut Vec<Diagnostic>) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    fn visit(
        doc: &ModelDocument,
        name: &str,
        state: &mut HashMap<String, u8>,
        out: &mut Vec<Diagnostic>,
    ) -> bool {
        state.insert(name.to_string(), 1);
        let mut found = false;
        if let Some(class) = doc.class(name) {
            for inst in &class.instances {
                if doc.class(&inst.class).is_none() {
                    continue;
                }
                match state.get(inst.class.as_str()).copied().unwrap_or(0) {
                    0 => found |= visit(doc, &inst.class, state, out),
                    1 => {
                        found = true;
                        out.push(Diagnostic::error(
                            inst.loc,
                            "E_CLASS_CYCLE",
                            format!(
                                "class `{}` instantiates `{}`, which leads back to itself",
                                class.name, inst.class
                            ),
                        ));
                    }
                    _ => {}
                }
            }
        }
        state.insert(name.to_string(), 2);
        found
    }
    let mut state = HashMap::new();
    let mut found = false;
    for class in &doc.classes {
        if state.get(class.name.as_str()).copied().unwrap_or(0) == 0 {
            found |= visit(doc, &class.name, &mut state, out);
        }
    }
    found
}

/// Longest chain of nested classes starting at `name`, counting `name` itself.
fn instantiation_depth(
    doc: &ModelDocument,
    name: &str,
    memo: &mut HashMap<String, usize>,
) -> usize {
    if let Some(&d) = memo.get(name) {
        return d;
    }
    let d = 1 + doc
        .class(name)
        .map(|c| {
            c.instances
                .iter()
                .filter(|i| doc.class(&i.class).is_some())
                .map(|i| instantiation_depth(doc, &i.class, memo))
                .max()
                .unwrap_or(0)
        })
        .unwrap_or(0);
    memo.insert(name.to_string(), d);
    d
}

struct Checker<'a> {
    doc: &'a ModelDocument,
    cyclic: bool,
}

impl Checker<'_> {
    /// Cardinality of the node a reference points at, following aliases.
    fn lookup(&self, class: &NetworkClass, r: &NodeRef, hops: usize) -> Result<usize, Diagnostic> {
        if hops > 64 {
            return Err(Diagnostic::error(
                r.loc,
                "E_BAD_ALIAS",
                "alias chain does not terminate",
            ));
        }
        let (owner, node) = match &r.instance {
            None => {
                let node = class.node(&r.node).ok_or_else(|| {
                    Diagnostic::error(
                        r.loc,
                        "E_UNKNOWN_NODE",
                        format!("class `{}` has no node `{}`", class.name, r.node),
                    )
                })?;
                (class, node)
            }
            Some(inst_name) => {
                let inst = class.instance(inst_name).ok_or_else(|| {
                    Diagnostic::error(
                        r.loc,
                        "E_UNKNOWN_NODE",
                        format!("class `{}` has no instance `{inst_name}`", class.name),
                    )
                })?;
                let target = self.doc.class(&inst.class).ok_or_else(|| {
                    Diagnostic::error(
                        r.loc,
                        "E_UNKNOWN_CLASS",
                        format!("instance `{inst_name}` has an undeclared class"),
                    )
                })?;
                let node = target.node(&r.node).ok_or_else(|| {
                    Diagnostic::error(
                        r.loc,
                        "E_UNKNOWN_NODE",
                        format!("class `{}` has no node `{}`", target.name, r.node),
                    )
                })?;
                if node.role != NodeRole::Output {
                    return Err(Diagnostic::error(
                        r.loc,
                        "E_NOT_OUTPUT",
                        format!("`{}` is not an output of class `{}`", r.node, target.name),
                    ));
                }
                (target, node)
            }
        };
        match &node.body {
            NodeBody::Alias(target) => {
                if self.cyclic {
                    return Err(Diagnostic::error(
                        r.loc,
                        "E_BAD_ALIAS",
                        "alias inside a class cycle",
                    ));
                }
                let mut t = target.clone();
                t.loc = r.loc;
                self.lookup(owner, &t, hops + 1)
            }
            _ => Ok(node.states.len()),
        }
    }

    fn class(&self, class: &NetworkClass, out: &mut Vec<Diagnostic>) {
        for node in &class.nodes {
            self.node(class, node, out);
        }
        for inst in &class.instances {
            self.instance(class, inst, out);
        }
    }

    fn states(&self, node: &NodeDecl, out: &mut Vec<Diagnostic>) {
        if node.states.len() < 2 {
            out.push(Diagnostic::error(
                node.loc,
                "E_CARDINALITY",
                format!("node `{}` needs at least two states", node.name),
            ));
        }
        for (i, s) in node.states.iter().enumerate() {
            if s.is_empty() || node.states[..i].contains(s) {
                out.push(Diagnostic::error(
                    node.loc,
                    "E_DUPLICATE_LABEL",
                    format!(
                        "node `{}` has an empty or repeated state label `{s}`",
                        node.name
                    ),
                ));
            }
        }
    }

    fn node(&self, class: &NetworkClass, node: &NodeDecl, out: &mut Vec<Diagnostic>) {
        if let NodeBody::Alias(target) = &node.body {
            if target.instance.is_none() {
                out.push(Diagnostic::error(
                    target.loc,
                    "E_BAD_ALIAS",
                    format!(
                        "alias `{}` must name an instance output (`instance.node`)",
                        node.name
                    ),
                ));
            } else if let Err(d) = self.lookup(class, target, 0) {
                out.push(d);
            }
            return;
        }
        self.states(node, out);
        if node.body == NodeBody::Input {
            return;
        }

        let mut parent_cards = Vec::with_capacity(node.parents.len());
        for (i, p) in node.parents.iter().enumerate() {
            if node.parents[..i]
                .iter()
                .any(|q| q.instance == p.instance && q.node == p.node)
            {
                out.push(Diagnostic::error(
                    p.loc,
                    "E_DUPLICATE_PARENT",
                    format!("`{p}` is listed twice as a parent of `{}`", node.name),
                ));
            }
            match self.lookup(class, p, 0) {
                Ok(c) => parent_cards.push(Some(c)),
                Err(d) => {
                    out.push(d);
                    parent_cards.push(None);
                }
            }
        }
        let k = node.states.len();
        match &node.body {
            NodeBody::Missing => out.push(Diagnostic::error(
                node.loc,
                "E_MISSING_CPT",
                format!("node `{}` has no `cpt`", node.name),
            )),
            NodeBody::Transmit { rate, loc } => {
                if !(0.0..1.0).contains(rate) {
                    out.push(Diagnostic::error(
                        *loc,
                        "E_TRANSMIT",
                        format!("mutation rate {rate} is outside [0, 1)"),
                    ));
                }
                if parent_cards.len() != 1 {
                    out.push(Diagnostic::error(
                        *loc,
                        "E_TRANSMIT",
                        format!(
                            "`transmit` needs exactly one parent, `{}` has {}",
                            node.name,
                            parent_cards.len()
                        ),
                    ));
                } else if let Some(c) = parent_cards[0] {
                    if c != k {
                        out.push(Diagnostic::error(
                            *loc,
                            "E_TRANSMIT",
                            format!(
                                "`transmit` parent has {c} states but `{}` has {k}",
                                node.name
                            ),
                        ));
                    }
                }
            }
            NodeBody::Table { rows, loc } => {
                if parent_cards.iter().any(Option::is_none) {
                    return;
                }
                let expected_rows: usize = parent_cards.iter().map(|c| c.unwrap_or(1)).product();
                if rows.len() != expected_rows {
                    out.push(Diagnostic::error(
                        *loc,
                        "E_CPT_SHAPE",
                        format!(
                            "table of `{}` has {} rows, expected {expected_rows} (one per parent configuration)",
                            node.name,
                            rows.len()
                        ),
                    ));
                }
                for (r, row) in rows.iter().enumerate() {
                    if row.len() != k {
                        out.push(Diagnostic::error(
                            *loc,
                            "E_CPT_SHAPE",
                            format!(
                                "row {} of `{}` has {} entries, expected {k}",
                                r + 1,
                                node.name,
                                row.len()
                            ),
                        ));
                        continue;
                    }
                    if row.iter().any(|&x| x < 0.0) {
                        out.push(Diagnostic::error(
                            *loc,
                            "E_CPT_NEGATIVE",
                            format!("row {} of `{}` has a negative entry", r + 1, node.name),
                        ));
                        continue;
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > LITERAL_TOLERANCE {
                        out.push(Diagnostic::error(
                            *loc,
                            "E_CPT_NOT_NORMALIZED",
                            format!("row {} of `{}` sums to {sum}", r + 1, node.name),
                        ));
                    }
                }
            }
            NodeBody::Input | NodeBody::Alias(_) => {}
        }
    }

    fn instance(&self, class: &NetworkClass, inst: &InstanceDecl, out: &mut Vec<Diagnostic>) {
        let Some(target) = self.doc.class(&inst.class) else {
            return;
        };
        let mut bound: HashSet<&str> = HashSet::new();
        for b in &inst.bindings {
            let Some(input) = target.node(&b.input).filter(|n| n.role == NodeRole::Input) else {
                out.push(Diagnostic::error(
                    b.loc,
                    "E_NOT_INPUT",
                    format!("class `{}` has no input `{}`", target.name, b.input),
                ));
                continue;
            };
            if !bound.insert(b.input.as_str()) {
                out.push(Diagnostic::error(
                    b.loc,
                    "E_DUPLICATE_BINDING",
                    format!("input `{}` of `{}` is bound twice", b.input, inst.name),
                ));
                continue;
            }
            match self.lookup(class, &b.target, 0) {
                Ok(c) if c != input.states.len() => out.push(Diagnostic::error(
                    b.loc,
                    "E_CARDINALITY_MISMATCH",
                    format!(
                        "input `{}` has {} states but `{}` has {c}",
                        b.input,
                        input.states.len(),
                        b.target
                    ),
                )),
                Ok(_) => {}
                Err(d) => out.push(d),
            }
        }
        for input in target.inputs() {
            if !bound.contains(input.name.as_str()) {
                out.push(Diagnostic::error(
                    inst.loc,
                    "E_UNBOUND_INPUT",
                    format!(
                        "instance `{}` does not bind input `{}`",
                        inst.name, input.name
                    ),
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    fn codes(src: &str) -> Vec<&'static str> {
        let doc = parse(src).unwrap();
        validate(&doc).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn minimal_valid_document() {
        assert!(codes("class M { node a : [x, y] cpt { 0.4, 0.6 }; } network M;").is_empty());
    }

    #[test]
    fn row_summing_to_point_nine() {
        assert_eq!(
            codes("class M { node a : [x, y] cpt { 0.4, 0.5 }; } network M;"),
            ["E_CPT_NOT_NORMALIZED"]
        );
    }

    #[test]
    fn literal_tolerance_is_one_in_a_million() {
        assert!(codes("class M { node a : [x, y] cpt { 0.4, 0.6000005 }; } network M;").is_empty());
        assert_eq!(
            codes("class M { node a : [x, y] cpt { 0.4, 0.600002 }; } network M;"),
            ["E_CPT_NOT_NORMALIZED"]
        );
    }

    #[test]
    fn mutual_instantiation_is_a_cycle() {
        let src = "class A { instance b : B (); } class B { instance a : A (); } network A;";
        assert!(codes(src).contains(&"E_CLASS_CYCLE"));
    }

    #[test]
    fn binding_errors() {
        let src = r#"
            class Leaf { input node h : [a, b]; output node o : [a, b] parents (h) cpt {1,0;0,1}; }
            class R {
              node t : [a, b, c] cpt {0.2, 0.3, 0.5};
              instance l1 : Leaf ();
              instance l2 : Leaf (h = t);
              instance l3 : Leaf (h = t, q = t);
            }
            network R;"#;
        let c = codes(src);
        assert!(c.contains(&"E_UNBOUND_INPUT"));
        assert!(c.contains(&"E_CARDINALITY_MISMATCH"));
        assert!(c.contains(&"E_NOT_INPUT"));
    }

    #[test]
    fn shape_and_reference_errors() {
        let src = r#"
            class Leaf { node hidden : [a, b] cpt {0.5,0.5}; output node o : [a, b] cpt {0.5,0.5}; }
            class R {
              instance l : Leaf ();
              node x : [a, b] parents (l.o) cpt {0.5, 0.5};
              node y : [a, b] parents (l.hidden) cpt {0.5, 0.5; 0.5, 0.5};
              node z : [a, b] parents (nowhere) cpt {0.5, 0.5};
              node w : [a, b];
              node v : [a, b, c] parents (x) cpt transmit(0.1);
              node u : [a] cpt {1};
            }
            network R;"#;
        let c = codes(src);
        for want in [
            "E_CPT_SHAPE",
            "E_NOT_OUTPUT",
            "E_UNKNOWN_NODE",
            "E_MISSING_CPT",
            "E_TRANSMIT",
            "E_CARDINALITY",
        ] {
            assert!(c.contains(&want), "missing {want} in {c:?}");
        }
    }

    #[test]
    fn node_level_cycle() {
        let src = "class R { node a : [x,y] parents (b) cpt {1,0;0,1}; node b : [x,y] parents (a) cpt {1,0;0,1}; } network R;";
        assert_eq!(codes(src), ["E_NODE_CYCLE"]);
    }

    #[test]
    fn depth_limit() {
        let mut src = String::new();
        for i in 0..17 {
            if i == 16 {
                src.push_str(&format!(
                    "class C{i} {{ node x : [a,b] cpt {{0.5,0.5}}; }}\n"
                ));
            } else {
                src.push_str(&format!("class C{i} {{ instance c : C{} (); }}\n", i + 1));
            }
        }
        src.push_str("network C0;");
        assert_eq!(codes(&src), ["E_DEPTH_EXCEEDED"]);
    }

    #[test]
    fn root_inputs_rejected() {
        let src = "class R { input node h : [a,b]; } network R;";
        assert_eq!(codes(src), ["E_ROOT_INPUT"]);
    }

    #[test]
    fn aliases() {
        let ok = r#"
            class Leaf { output node o : [a, b] cpt {0.5,0.5}; }
            class Mid { instance l : Leaf (); output node o = l.o; }
            class R { instance m : Mid (); node y : [a, b] parents (m.o) cpt {1,0;0,1}; }
            network R;"#;
        assert!(codes(ok).is_empty());
        let bad = "class R { node a : [x,y] cpt {0.5,0.5}; node b = a; } network R;";
        assert_eq!(codes(bad), ["E_BAD_ALIAS"]);
    }
}
