use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use crate::diag::{sort_diagnostics, Diagnostic, Location};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

fn syntax(loc: Location, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(loc, "E_SYNTAX", msg)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == kw)
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            let t = self.peek();
            Err(syntax(
                t.loc,
                format!("expected {}, found {}", kind.describe(), t.kind.describe()),
            ))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<Location> {
        if self.at_keyword(kw) {
            Ok(self.bump().loc)
        } else {
            let t = self.peek();
            Err(syntax(
                t.loc,
                format!("expected `{kw}`, found {}", t.kind.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Location)> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Ident(s) => {
                self.bump();
                Ok((s, t.loc))
            }
            other => Err(syntax(
                t.loc,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Number(v, _) => {
                self.bump();
                Ok(v)
            }
            other => Err(syntax(
                t.loc,
                format!("expected a number, found {}", other.describe()),
            )),
        }
    }

    fn document(&mut self) -> Option<ModelDocument> {
        let mut classes = Vec::new();
        let mut root: Option<(String, Location)> = None;
        loop {
            if self.at(&TokenKind::Eof) {
                break;
            }
            if self.at_keyword("class") {
                match self.class() {
                    Ok(c) => classes.push(c),
                    Err(d) => {
                        self.diags.push(d);
                        self.skip_to_top_level();
                    }
                }
            } else if self.at_keyword("network") {
                let loc = self.bump().loc;
                let decl = self
                    .ident("root class name")
                    .and_then(|r| self.expect(TokenKind::Semi).map(|_| r));
                match decl {
                    Ok((name, name_loc)) => {
                        if root.is_some() {
                            self.diags
                                .push(syntax(loc, "`network` is declared more than once"));
                        } else {
                            root = Some((name, name_loc));
                        }
                    }
                    Err(d) => {
                        self.diags.push(d);
                        self.skip_to_top_level();
                    }
                }
            } else {
                let t = self.bump();
                self.diags.push(syntax(
                    t.loc,
                    format!("expected `class` or `network`, found {}", t.kind.describe()),
                ));
                self.skip_to_top_level();
            }
        }
        match root {
            Some((root, root_loc)) => Some(ModelDocument {
                classes,
                root,
                root_loc,
            }),
            None => {
                let loc = self.peek().loc;
                self.diags
                    .push(syntax(loc, "missing `network <RootClass>;` declaration"));
                None
            }
        }
    }

    fn skip_to_top_level(&mut self) {
        while !self.at(&TokenKind::Eof) && !self.at_keyword("class") && !self.at_keyword("network")
        {
            self.bump();
        }
    }

    fn class(&mut self) -> PResult<NetworkClass> {
        let loc = self.expect_keyword("class")?;
        let (name, _) = self.ident("class name")?;
        self.expect(TokenKind::LBrace)?;
        let mut nodes = Vec::new();
        let mut instances = Vec::new();
        loop {
            if self.at(&TokenKind::RBrace) {
                self.bump();
                break;
            }
            if self.at(&TokenKind::Eof) {
                return Err(syntax(
                    self.peek().loc,
                    format!("class `{name}` is not closed with `}}`"),
                ));
            }
            let start = self.pos;
            match self.member() {
                Ok(Member::Node(n)) => nodes.push(n),
                Ok(Member::Instance(i)) => instances.push(i),
                Err(d) => {
                    self.diags.push(d);
                    self.pos = start;
                    self.skip_member();
                    if self.pos == start {
                        return Err(syntax(
                            self.peek().loc,
                            format!("class `{name}` is not closed with `}}`"),
                        ));
                    }
                }
            }
        }
        Ok(NetworkClass {
            name,
            nodes,
            instances,
            loc,
        })
    }

    /// Skips past the current member: to the `;` that ends it, or up to the `}`
    /// closing the class, whichever comes first at nesting depth zero.
    fn skip_member(&mut self) {
        let mut depth = 0i32;
        loop {
            match self.peek().kind {
                TokenKind::Eof => return,
                TokenKind::LBrace | TokenKind::LParen | TokenKind::LBracket => depth += 1,
                TokenKind::RBrace if depth == 0 => return,
                TokenKind::RParen | TokenKind::RBracket if depth == 0 => {}
                TokenKind::RBrace | TokenKind::RParen | TokenKind::RBracket => depth -= 1,
                TokenKind::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                _ if depth == 0 && (self.at_keyword("class") || self.at_keyword("network")) => {
                    return
                }
                _ => {}
            }
            self.bump();
        }
    }

    fn member(&mut self) -> PResult<Member> {
        let t = self.peek().clone();
        if self.at_keyword("instance") {
            return self.instance().map(Member::Instance);
        }
        let role = if self.at_keyword("input") {
            self.bump();
            NodeRole::Input
        } else if self.at_keyword("output") {
            self.bump();
            NodeRole::Output
        } else {
            NodeRole::Internal
        };
        if !self.at_keyword("node") {
            return Err(syntax(
                t.loc,
                format!(
                    "expected `node`, `input node`, `output node` or `instance`, found {}",
                    t.kind.describe()
                ),
            ));
        }
        let loc = self.bump().loc;
        let (name, _) = self.ident("node name")?;

        if role == NodeRole::Input {
            self.expect(TokenKind::Colon)?;
            let states = self.labels()?;
            self.expect(TokenKind::Semi)?;
            return Ok(Member::Node(NodeDecl {
                name,
                role,
                states,
                parents: Vec::new(),
                body: NodeBody::Input,
                loc,
            }));
        }

        if self.at(&TokenKind::Equals) {
            self.bump();
            let target = self.node_ref()?;
            self.expect(TokenKind::Semi)?;
            return Ok(Member::Node(NodeDecl {
                name,
                role,
                states: Vec::new(),
                parents: Vec::new(),
                body: NodeBody::Alias(target),
                loc,
            }));
        }

        self.expect(TokenKind::Colon)?;
        let states = self.labels()?;
        let mut parents = Vec::new();
        if self.at_keyword("parents") {
            self.bump();
            self.expect(TokenKind::LParen)?;
            if !self.at(&TokenKind::RParen) {
                parents.push(self.node_ref()?);
                while self.at(&TokenKind::Comma) {
                    self.bump();
                    parents.push(self.node_ref()?);
                }
            }
            self.expect(TokenKind::RParen)?;
        }
        let body = if self.at_keyword("cpt") {
            self.bump();
            self.cpt_body()?
        } else {
            NodeBody::Missing
        };
        self.expect(TokenKind::Semi)?;
        Ok(Member::Node(NodeDecl {
            name,
            role,
            states,
            parents,
            body,
            loc,
        }))
    }

    fn cpt_body(&mut self) -> PResult<NodeBody> {
        let loc = self.peek().loc;
        if self.at_keyword("transmit") {
            self.bump();
            self.expect(TokenKind::LParen)?;
            let rate = self.number()?;
            self.expect(TokenKind::RParen)?;
            return Ok(NodeBody::Transmit { rate, loc });
        }
        self.expect(TokenKind::LBrace)?;
        let mut rows = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let mut row = vec![self.number()?];
            while self.at(&TokenKind::Comma) {
                self.bump();
                row.push(self.number()?);
            }
            rows.push(row);
            if self.at(&TokenKind::Semi) {
                self.bump();
            } else if !self.at(&TokenKind::RBrace) {
                let t = self.peek();
                return Err(syntax(
                    t.loc,
                    format!(
                        "expected `,`, `;` or `}}` in table, found {}",
                        t.kind.describe()
                    ),
                ));
            }
        }
        self.bump();
        Ok(NodeBody::Table { rows, loc })
    }

    fn labels(&mut self) -> PResult<Vec<String>> {
        self.expect(TokenKind::LBracket)?;
        let mut out = vec![self.label()?];
        while self.at(&TokenKind::Comma) {
            self.bump();
            out.push(self.label()?);
        }
        self.expect(TokenKind::RBracket)?;
        Ok(out)
    }

    fn label(&mut self) -> PResult<String> {
        let t = self.bump();
        match t.kind {
            TokenKind::Ident(s) | TokenKind::Str(s) | TokenKind::Number(_, s) => Ok(s),
            other => Err(syntax(
                t.loc,
                format!("expected a state label, found {}", other.describe()),
            )),
        }
    }

    fn node_ref(&mut self) -> PResult<NodeRef> {
        let (first, loc) = self.ident("node reference")?;
        if self.at(&TokenKind::Dot) {
            self.bump();
            let (second, _) = self.ident("node name after `.`")?;
            if self.at(&TokenKind::Dot) {
                return Err(syntax(
                    self.peek().loc,
                    "references may name only a direct instance output (`instance.node`)",
                ));
            }
            Ok(NodeRef {
                instance: Some(first),
                node: second,
                loc,
            })
        } else {
            Ok(NodeRef {
                instance: None,
                node: first,
                loc,
            })
        }
    }

    fn instance(&mut self) -> PResult<InstanceDecl> {
        let loc = self.expect_keyword("instance")?;
        let (name, _) = self.ident("instance name")?;
        self.expect(TokenKind::Colon)?;
        let (class, class_loc) = self.ident("class name")?;
        self.expect(TokenKind::LParen)?;
        let mut bindings = Vec::new();
        if !self.at(&TokenKind::RParen) {
            bindings.push(self.binding()?);
            while self.at(&TokenKind::Comma) {
                self.bump();
                bindings.push(self.binding()?);
            }
        }
        self.expect(TokenKind::RParen)?;
        self.expect(TokenKind::Semi)?;
        Ok(InstanceDecl {
            name,
            class,
            bindings,
            loc,
            class_loc,
        })
    }

    fn binding(&mut self) -> PResult<Binding> {
        let (input, loc) = self.ident("input name")?;
        self.expect(TokenKind::Equals)?;
        let target = self.node_ref()?;
        Ok(Binding { input, target, loc })
    }
}

enum Member {
    Node(NodeDecl),
    Instance(InstanceDecl),
}

/// Parses a `.oobn` document. On failure every diagnostic is returned, sorted by
/// location. Besides syntax, parsing rejects duplicate names and references to
/// undeclared classes; the remaining checks live in [`super::validate`].
pub fn parse(source: &str) -> Result<ModelDocument, Vec<Diagnostic>> {
    let (toks, mut diags) = tokenize(source);
    let mut p = Parser {
        toks,
        pos: 0,
        diags: Vec::new(),
    };
    let doc = p.document();
    diags.append(&mut p.diags);
    if let Some(doc) = &doc {
        if diags.is_empty() {
            diags.extend(super::validate::name_diagnostics(doc));
        }
    }
    match doc {
        Some(doc) if diags.is_empty() => Ok(doc),
        _ => {
            sort_diagnostics(&mut diags);
            Err(diags)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document() {
        let doc = parse("class M { node a : [no, yes] cpt { 0.4, 0.6 }; } network M;").unwrap();
        assert_eq!(doc.classes.len(), 1);
        assert_eq!(doc.classes[0].instances.len(), 0);
        assert_eq!(doc.root, "M");
        let a = doc.classes[0].node("a").unwrap();
        assert_eq!(a.states, ["no", "yes"]);
        assert!(matches!(&a.body, NodeBody::Table { rows, .. } if rows == &vec![vec![0.4, 0.6]]));
    }

    #[test]
    fn full_member_forms() {
        let src = r#"
            class Pair {
              input node h : [t, f];
              node m : [a, b] cpt { 0.5, 0.5 };
              output node c : [a, b] parents (m) cpt transmit(0.01);
            }
            class Root {
              node h : [t, f] cpt {0.5, 0.5};
              instance p : Pair (h = h);
              output node out = p.c;
              node z : ["x y", 1] parents (p.c, h) cpt { 1,0; 0,1; 1,0; 0,1 };
            }
            network Root;
        "#;
        let doc = parse(src).unwrap();
        let root = doc.class("Root").unwrap();
        assert_eq!(root.instances[0].bindings[0].input, "h");
        assert!(
            matches!(&root.node("out").unwrap().body, NodeBody::Alias(r) if r.to_string() == "p.c")
        );
        let z = root.node("z").unwrap();
        assert_eq!(z.states, ["x y", "1"]);
        assert_eq!(z.parents[0].to_string(), "p.c");
        assert!(matches!(
            doc.class("Pair").unwrap().node("c").unwrap().body,
            NodeBody::Transmit { rate, .. } if rate == 0.01
        ));
    }

    #[test]
    fn unknown_class_is_located_at_instance() {
        let src = "class R {\n  instance x : Nope ();\n}\nnetwork R;";
        let d = parse(src).unwrap_err();
        assert_eq!(d[0].code, "E_UNKNOWN_CLASS");
        assert_eq!(d[0].location, Location::new(2, 3));
    }

    #[test]
    fn duplicate_names() {
        let src =
            "class R { node a : [x,y] cpt {0.5,0.5}; node a : [x,y] cpt {0.5,0.5}; } network R;";
        let d = parse(src).unwrap_err();
        assert!(d.iter().any(|d| d.code == "E_DUPLICATE_NAME"));
    }

    #[test]
    fn syntax_errors_recover_and_report_each_member() {
        let src = "class R {\n node a : [x,y] cpt {0.5 0.5};\n node b [x,y];\n node c : [x,y] cpt {0.5,0.5};\n}\nnetwork R;";
        let d = parse(src).unwrap_err();
        let lines: Vec<usize> = d.iter().map(|d| d.location.line).collect();
        assert_eq!(lines, vec![2, 3]);
        assert!(d.iter().all(|d| d.code == "E_SYNTAX"));
    }

    #[test]
    fn missing_network_declaration() {
        let d = parse("class R { }").unwrap_err();
        assert_eq!(d[0].code, "E_SYNTAX");
    }

    #[test]
    fn garbage_never_panics() {
        for src in [
            "",
            "}",
            "class",
            "class {",
            "network ;",
            "class A { node }",
            "\u{0}\u{1}",
            "class A { instance a : B ( x = ; }",
        ] {
            assert!(parse(src).is_err(), "{src:?}");
        }
    }
}
