use std::fmt::Write;

use super::ast::*;
use super::lexer::{tokenize, TokenKind};
use crate::factor::Network;

fn label(s: &str) -> String {
    let (toks, diags) = tokenize(s);
    let plain = diags.is_empty()
        && toks.len() == 2
        && matches!(&toks[0].kind, TokenKind::Ident(t) | TokenKind::Number(_, t) if t == s);
    if plain {
        s.to_string()
    } else {
        format!("\"{s}\"")
    }
}

fn labels(states: &[String]) -> String {
    let inner: Vec<String> = states.iter().map(|s| label(s)).collect();
    format!("[{}]", inner.join(", "))
}

fn number(x: f64) -> String {
    // `{}` is the shortest representation that parses back to the same f64.
    format!("{x}")
}

fn rows(rows: &[Vec<f64>]) -> String {
    let body: Vec<String> = rows
        .iter()
        .map(|r| r.iter().map(|&x| number(x)).collect::<Vec<_>>().join(", "))
        .collect();
    format!("{{ {} }}", body.join("; "))
}

/// Prints a document in canonical layout. `parse(print(doc))` is structurally
/// equal to `doc`.
pub fn print(doc: &ModelDocument) -> String {
    let mut out = String::new();
    for class in &doc.classes {
        writeln!(out, "class {} {{", class.name).unwrap();
        for node in &class.nodes {
            let role = match node.role {
                NodeRole::Input => "input ",
                NodeRole::Output => "output ",
                NodeRole::Internal => "",
            };
            write!(out, "  {role}node {}", node.name).unwrap();
            match &node.body {
                NodeBody::Alias(target) => {
                    writeln!(out, " = {target};").unwrap();
                    continue;
                }
                _ => write!(out, " : {}", labels(&node.states)).unwrap(),
            }
            if !node.parents.is_empty() {
                let ps: Vec<String> = node.parents.iter().map(ToString::to_string).collect();
                write!(out, " parents ({})", ps.join(", ")).unwrap();
            }
            match &node.body {
                NodeBody::Table { rows: r, .. } => write!(out, " cpt {}", rows(r)).unwrap(),
                NodeBody::Transmit { rate, .. } => {
                    write!(out, " cpt transmit({})", number(*rate)).unwrap()
                }
                _ => {}
            }
            out.push_str(";\n");
        }
        for inst in &class.instances {
            let bs: Vec<String> = inst
                .bindings
                .iter()
                .map(|b| format!("{} = {}", b.input, b.target))
                .collect();
            writeln!(
                out,
                "  instance {} : {} ({});",
                inst.name,
                inst.class,
                bs.join(", ")
            )
            .unwrap();
        }
        out.push_str("}\n\n");
    }
    writeln!(out, "network {};", doc.root).unwrap();
    out
}

/// Wraps a flat network as a single-class document so it can be written out as
/// a loadable `.oobn` fixture. Dots in variable names become underscores.
pub fn document_from_network(net: &Network, class_name: &str) -> ModelDocument {
    let name = |i: usize| net.variables()[i].name.replace('.', "_");
    let nodes = net
        .variables()
        .iter()
        .map(|v| {
            let k = v.cardinality();
            NodeDecl {
                name: name(v.id.0),
                role: NodeRole::Internal,
                states: v.states.clone(),
                parents: net
                    .parents(v.id)
                    .iter()
                    .map(|p| NodeRef::local(&name(p.0)))
                    .collect(),
                body: NodeBody::Table {
                    rows: net
                        .cpt(v.id)
                        .values()
                        .chunks(k)
                        .map(<[f64]>::to_vec)
                        .collect(),
                    loc: Default::default(),
                },
                loc: Default::default(),
            }
        })
        .collect();
    ModelDocument {
        classes: vec![NetworkClass {
            name: class_name.to_string(),
            nodes,
            instances: Vec::new(),
            loc: Default::default(),
        }],
        root: class_name.to_string(),
        root_loc: Default::default(),
    }
}
