//! The XML file format and DOT rendering.
//!
//! A document lists the nesting trees `G(0)..G(n)`, one `constellation`
//! element each. White dots are not stored: a childless dot of `G(k)` carries
//! a `ref` naming the element of `G(k-1)` just above its null-sphere, or the
//! next null-dot further from the root on the same edge.
//!
//! ```text
//! <opetope name="arrow" version="1">
//!   <constellation name="G0">
//!     <dot name="a">
//!       <leaf name="p"/>
//!     </dot>
//!   </constellation>
//!   ...
//! </opetope>
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::opetope::Opetope;
use crate::tree::{Kind, Name, RawNode, Tree, Whites};

pub const FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IoError {
    /// Markup that is not a document of this format at all.
    #[error("{0}")]
    Syntax(String),
    /// A well-formed document describing no opetope.
    #[error("{0}")]
    Invalid(String),
}

impl IoError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            IoError::Syntax(_) => 2,
            IoError::Invalid(_) => 1,
        }
    }
}

/// An opetope with the name it is stored under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub name: String,
    pub opetope: Opetope,
}

fn syntax<T>(s: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Syntax(s.into()))
}

fn invalid<T>(s: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Invalid(s.into()))
}

struct Parsed {
    raw: Vec<RawNode>,
    refs: BTreeMap<Name, Name>,
}

pub fn parse(text: &str) -> Result<Document, IoError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| IoError::Syntax(format!("malformed markup: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "opetope" {
        return syntax(format!("unknown tag `{}` at the top", root.tag_name().name()));
    }
    check_attrs(root, &["name", "version"])?;
    if let Some(v) = root.attribute("version") {
        if v != FORMAT_VERSION {
            return syntax(format!("unsupported format version `{v}`"));
        }
    }
    let name = required_name(root)?.to_string();
    let mut levels = Vec::new();
    for c in elements(root)? {
        if c.tag_name().name() != "constellation" {
            return syntax(format!("unknown tag `{}` inside `opetope`", c.tag_name().name()));
        }
        check_attrs(c, &["name"])?;
        let cname = required_name(c)?;
        let kids = elements(c)?;
        let [top] = kids.as_slice() else {
            return syntax(format!("constellation `{cname}` must hold exactly one tree"));
        };
        let mut p = Parsed { raw: Vec::new(), refs: BTreeMap::new() };
        read_node(*top, None, &mut p)?;
        levels.push(p);
    }
    if levels.is_empty() {
        return syntax("an opetope needs at least one constellation");
    }
    let mut trees = Vec::new();
    for (k, p) in levels.iter().enumerate() {
        let t = Tree::from_raw(&p.raw).map_err(|v| IoError::Invalid(format!("G{k}: {}", v[0])))?;
        trees.push(t);
    }
    let mut whites = Vec::new();
    for k in 1..trees.len() {
        whites.push(resolve_refs(k, &trees[k], &trees[k - 1], &levels[k].refs)?);
    }
    if let Some((r, _)) = levels[0].refs.iter().next() {
        return invalid(format!("G0: null-dot `{r}` has nothing to refer to"));
    }
    let opetope = Opetope::from_nestings(trees, whites).map_err(|v| IoError::Invalid(v[0].to_string()))?;
    Ok(Document { name, opetope })
}

fn elements<'a>(n: roxmltree::Node<'a, 'a>) -> Result<Vec<roxmltree::Node<'a, 'a>>, IoError> {
    let mut out = Vec::new();
    for c in n.children() {
        if c.is_element() {
            out.push(c);
        } else if c.is_text() && !c.text().unwrap_or("").trim().is_empty() {
            return syntax(format!("stray text inside `{}`", n.tag_name().name()));
        }
    }
    Ok(out)
}

fn check_attrs(n: roxmltree::Node, allowed: &[&str]) -> Result<(), IoError> {
    for a in n.attributes() {
        if !allowed.contains(&a.name()) || a.namespace().is_some() {
            return syntax(format!("unknown attribute `{}` on `{}`", a.name(), n.tag_name().name()));
        }
    }
    Ok(())
}

fn required_name<'a>(n: roxmltree::Node<'a, 'a>) -> Result<&'a str, IoError> {
    match n.attribute("name") {
        Some(s) if !s.is_empty() => Ok(s),
        _ => syntax(format!("`{}` element without name", n.tag_name().name())),
    }
}

fn read_node(n: roxmltree::Node, parent: Option<&str>, p: &mut Parsed) -> Result<(), IoError> {
    let name = required_name(n)?;
    match n.tag_name().name() {
        "leaf" => {
            check_attrs(n, &["name"])?;
            if !elements(n)?.is_empty() {
                return syntax(format!("leaf `{name}` has children"));
            }
            p.raw.push(RawNode::leaf(name, parent));
        }
        "dot" => {
            check_attrs(n, &["name", "ref"])?;
            let kids = elements(n)?;
            match (n.attribute("ref"), kids.is_empty()) {
                (Some(r), true) => {
                    p.refs.insert(name.to_string(), r.to_string());
                }
                (None, true) => return invalid(format!("null-dot without ref: `{name}`")),
                (Some(_), false) => return invalid(format!("dot `{name}` has children and a ref")),
                (None, false) => {}
            }
            p.raw.push(RawNode::dot(name, parent));
            for c in kids {
                read_node(c, Some(name), p)?;
            }
        }
        other => return syntax(format!("unknown tag `{other}` inside a tree")),
    }
    Ok(())
}

/// Turn the ref chains of `G(k)` into white dots on the edges of `G(k-1)`.
fn resolve_refs(k: usize, tree: &Tree, below: &Tree, refs: &BTreeMap<Name, Name>) -> Result<Whites, IoError> {
    // who refers to what; each target takes at most one null-dot
    let mut referrer: BTreeMap<&Name, &Name> = BTreeMap::new();
    for (x, r) in refs {
        let is_null = tree.get_kind(r) == Some(Kind::Dot) && tree.is_null_dot(r);
        if !is_null && !below.contains(r) {
            return invalid(format!("G{k}: ref `{r}` of null-dot `{x}` names nothing in G{} or among the null-dots", k - 1));
        }
        if r == x {
            return invalid(format!("G{k}: null-dot `{x}` refers to itself"));
        }
        if let Some(other) = referrer.insert(r, x) {
            return invalid(format!("G{k}: null-dots `{other}` and `{x}` both refer to `{r}`"));
        }
    }
    let mut whites = Whites::new();
    let mut placed = BTreeSet::new();
    for e in below.names() {
        let mut chain = Vec::new();
        let mut cur = e;
        while let Some(x) = referrer.get(cur) {
            chain.push((*x).clone());
            placed.insert(*x);
            cur = x;
        }
        if !chain.is_empty() {
            // the first null-dot found is the one farthest from the root
            chain.reverse();
            whites.insert(e.clone(), chain);
        }
    }
    if let Some(x) = refs.keys().find(|x| !placed.contains(x)) {
        return invalid(format!("G{k}: ref chain through null-dot `{x}` is cyclic"));
    }
    Ok(whites)
}

/// Deterministic text: children in canonical-code order, two-space
/// indentation, attributes `name` then `ref`.
pub fn serialize(name: &str, x: &Opetope) -> String {
    let z = x.complex();
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<opetope name=\"{}\" version=\"{FORMAT_VERSION}\">", esc(name));
    for k in 0..=x.dim() {
        let tree = z.nesting(k);
        let mut refs = BTreeMap::new();
        if k > 0 {
            for (e, ws) in z.whites(k) {
                for (i, w) in ws.iter().enumerate() {
                    refs.insert(w.clone(), ws.get(i + 1).unwrap_or(e).clone());
                }
            }
        }
        let codes = tree.all_codes();
        let _ = writeln!(out, "  <constellation name=\"G{k}\">");
        write_node(&mut out, tree, tree.root(), 2, &codes, &refs);
        out.push_str("  </constellation>\n");
    }
    out.push_str("</opetope>\n");
    out
}

fn write_node(out: &mut String, t: &Tree, x: &str, depth: usize, codes: &BTreeMap<Name, String>, refs: &BTreeMap<Name, Name>) {
    let pad = "  ".repeat(depth);
    if t.is_leaf(x) {
        let _ = writeln!(out, "{pad}<leaf name=\"{}\"/>", esc(x));
        return;
    }
    let kids = t.children(x);
    if kids.is_empty() {
        let _ = writeln!(out, "{pad}<dot name=\"{}\" ref=\"{}\"/>", esc(x), esc(&refs[x]));
        return;
    }
    let _ = writeln!(out, "{pad}<dot name=\"{}\">", esc(x));
    let mut kids: Vec<&Name> = kids.iter().collect();
    kids.sort_by(|a, b| (&codes[*a], a).cmp(&(&codes[*b], b)));
    for c in kids {
        write_node(out, t, c, depth + 1, codes, refs);
    }
    let _ = writeln!(out, "{pad}</dot>");
}

fn esc(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => o.push_str("&amp;"),
            '<' => o.push_str("&lt;"),
            '>' => o.push_str("&gt;"),
            '"' => o.push_str("&quot;"),
            _ => o.push(c),
        }
    }
    o
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// One `digraph` per constellation, or only `level`. Carrier dots are filled
/// circles, white dots open circles, leaves and the root point stubs, and
/// spheres nested `cluster_<name>` subgraphs.
pub fn to_dot(x: &Opetope, level: Option<usize>) -> String {
    let levels: Vec<usize> = match level {
        Some(k) => vec![k],
        None => (0..=x.dim()).collect(),
    };
    let mut out = String::new();
    for k in levels {
        render_level(x, k, &mut out);
    }
    out
}

fn render_level(x: &Opetope, k: usize, out: &mut String) {
    let c = x.complex().constellation(k);
    let _ = writeln!(out, "digraph X{k} {{");
    out.push_str("  rankdir=BT;\n  node [label=\"\", width=0.12, height=0.12];\n");
    let flat = c.subdivided().flatten();
    let white: BTreeSet<&Name> = c.whites.values().flatten().collect();
    let id = |n: &str| dot_id(&format!("n:{n}"));
    let _ = writeln!(out, "  {} [shape=point];", dot_id("root"));
    for n in flat.names() {
        if flat.is_leaf(n) {
            let _ = writeln!(out, "  {} [shape=point, xlabel={}];", dot_id(&format!("leaf:{n}")), dot_id(n));
        }
    }
    // spheres, outermost first
    fn cluster(c: &crate::constellation::Constellation, s: &str, depth: usize, white: &BTreeSet<&Name>, out: &mut String) {
        let pad = "  ".repeat(depth);
        let id = |n: &str| dot_id(&format!("n:{n}"));
        let t = &c.nesting;
        if t.is_leaf(s) {
            let _ = writeln!(out, "{pad}{} [shape=circle, style=filled, fillcolor=black, xlabel={}];", id(s), dot_id(s));
            return;
        }
        let _ = writeln!(out, "{pad}subgraph {} {{", dot_id(&format!("cluster_{s}")));
        let _ = writeln!(out, "{pad}  label={};", dot_id(s));
        if t.is_null_dot(s) && white.contains(&s.to_string()) {
            let _ = writeln!(out, "{pad}  {} [shape=circle, xlabel={}];", id(s), dot_id(s));
        }
        for ch in t.children(s) {
            cluster(c, ch, depth + 1, white, out);
        }
        let _ = writeln!(out, "{pad}}}");
    }
    if c.is_sphere_free() {
        let d = c.nesting.root();
        let _ = writeln!(out, "  {} [shape=circle, style=filled, fillcolor=black, xlabel={}];", id(d), dot_id(d));
    } else {
        cluster(&c, c.nesting.root(), 1, &white, out);
    }
    let _ = writeln!(out, "  {} -> {};", dot_id("root"), id(flat.root()));
    for n in flat.names() {
        if let Some(p) = flat.parent(n) {
            let head = if flat.is_leaf(n) { dot_id(&format!("leaf:{n}")) } else { id(n) };
            let _ = writeln!(out, "  {} -> {} [label={}];", id(p), head, dot_id(n));
        }
    }
    out.push_str("}\n");
}

/// Structural check of DOT text against the graph grammar. Returns the
/// number of graphs.
pub fn validate_dot(text: &str) -> Result<usize, String> {
    let toks = tokenize(text)?;
    let mut p = DotParser { toks, pos: 0, directed: false };
    let mut graphs = 0;
    while p.pos < p.toks.len() {
        p.graph()?;
        graphs += 1;
    }
    if graphs == 0 {
        return Err("no graph".into());
    }
    Ok(graphs)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Id(String),
    Punct(&'static str),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut v = String::new();
            i += 1;
            loop {
                match cs.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('\\') => {
                        v.push(*cs.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some(ch) => {
                        v.push(*ch);
                        i += 1;
                    }
                }
            }
            out.push(Tok::Id(v));
        } else if c == '-' && matches!(cs.get(i + 1), Some('>') | Some('-')) {
            out.push(Tok::Punct(if cs[i + 1] == '>' { "->" } else { "--" }));
            i += 2;
        } else if let Some(p) = ["{", "}", "[", "]", "=", ";", ",", ":"].iter().find(|p| p.starts_with(c)) {
            out.push(Tok::Punct(p));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '.') {
                i += 1;
            }
            if i == start {
                return Err(format!("unexpected `{c}`"));
            }
            out.push(Tok::Id(cs[start..i].iter().collect()));
        } else {
            return Err(format!("unexpected `{c}`"));
        }
    }
    Ok(out)
}

struct DotParser {
    toks: Vec<Tok>,
    pos: usize,
    directed: bool,
}

impl DotParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }
    fn keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(k))
    }
    fn expect(&mut self, p: &str) -> Result<(), String> {
        if self.is(p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(format!("expected `{p}` at token {}", self.pos))
        }
    }
    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(format!("expected an identifier at token {}", self.pos)),
        }
    }
    fn graph(&mut self) -> Result<(), String> {
        if self.keyword("strict") {
            self.pos += 1;
        }
        if self.keyword("digraph") {
            self.directed = true;
        } else if self.keyword("graph") {
            self.directed = false;
        } else {
            return Err("expected `graph` or `digraph`".into());
        }
        self.pos += 1;
        if !self.is("{") {
            self.id()?;
        }
        self.block()
    }
    fn block(&mut self) -> Result<(), String> {
        self.expect("{")?;
        while !self.is("}") {
            if self.peek().is_none() {
                return Err("unclosed `{`".into());
            }
            self.stmt()?;
            if self.is(";") {
                self.pos += 1;
            }
        }
        self.pos += 1;
        Ok(())
    }
    fn stmt(&mut self) -> Result<(), String> {
        if self.keyword("graph") || self.keyword("node") || self.keyword("edge") {
            self.pos += 1;
            return self.attr_lists(true);
        }
        if self.keyword("subgraph") || self.is("{") {
            self.subgraph()?;
        } else {
            self.id()?;
            if self.is("=") {
                self.pos += 1;
                self.id()?;
                return Ok(());
            }
            if self.is(":") {
                self.pos += 1;
                self.id()?;
            }
        }
        let mut edge = false;
        while self.is("->") || self.is("--") {
            if self.is("->") != self.directed {
                return Err(format!("wrong edge operator at token {}", self.pos));
            }
            self.pos += 1;
            edge = true;
            if self.keyword("subgraph") || self.is("{") {
                self.subgraph()?;
            } else {
                self.id()?;
            }
        }
        let _ = edge;
        self.attr_lists(false)
    }
    fn subgraph(&mut self) -> Result<(), String> {
        if self.keyword("subgraph") {
            self.pos += 1;
            if !self.is("{") {
                self.id()?;
            }
        }
        self.block()
    }
    fn attr_lists(&mut self, required: bool) -> Result<(), String> {
        if required && !self.is("[") {
            return Err(format!("expected an attribute list at token {}", self.pos));
        }
        while self.is("[") {
            self.pos += 1;
            while !self.is("]") {
                self.id()?;
                self.expect("=")?;
                self.id()?;
                if self.is(",") || self.is(";") {
                    self.pos += 1;
                }
            }
            self.pos += 1;
        }
        Ok(())
    }
}

/// Depth of nested `cluster_` subgraphs in one graph of DOT text.
pub fn cluster_depth(dot: &str) -> usize {
    let (mut depth, mut best, mut stack) = (0usize, 0usize, Vec::new());
    let mut pending = false;
    for line in dot.lines() {
        let l = line.trim();
        if l.starts_with("subgraph \"cluster_") {
            pending = true;
        }
        if l.ends_with('{') {
            stack.push(pending);
            if pending {
                depth += 1;
                best = best.max(depth);
            }
            pending = false;
        } else if l == "}" && stack.pop() == Some(true) {
            depth -= 1;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn arrow_round_trip() {
        let a = Opetope::arrow();
        let text = serialize("arrow", &a);
        let d = parse(&text).unwrap();
        assert_eq!(d.opetope, a);
        assert_eq!(d.name, "arrow");
        assert_eq!(serialize("arrow", &d.opetope), text);
        assert_eq!(text.matches("<constellation").count(), 2);
    }

    #[test]
    fn fixtures_round_trip() {
        let (r, _, s) = fixtures::gluing_pair();
        for x in [fixtures::five_cell(), r, s, fixtures::z_example()] {
            let text = serialize("x", &x);
            let back = parse(&text).unwrap().opetope;
            assert_eq!(back, x);
            assert_eq!(serialize("x", &back), text);
        }
    }

    #[test]
    fn whites_become_ref_chains() {
        let x = fixtures::five_cell();
        let text = serialize("X", &x);
        assert!(text.contains("<dot name=\"10\" ref=\"4\"/>"));
        assert!(text.contains("<dot name=\"16\" ref=\"12\"/>"));
        // two null-spheres on one edge chain through each other
        let z = crate::opetope::glob_over(&crate::opetope::drop_over(&Opetope::arrow()));
        let t = serialize("g", &z);
        assert_eq!(parse(&t).unwrap().opetope, z);
    }

    #[test]
    fn linear_has_m_dots_in_g2() {
        for m in 0..5 {
            let text = serialize("l", &Opetope::linear(m));
            let g2 = text.split("<constellation name=\"G2\">").nth(1).unwrap();
            assert_eq!(g2.split("</constellation>").next().unwrap().matches("<dot ").count(), m);
        }
    }

    fn corrupt(from: &str, to: &str) -> IoError {
        let text = serialize("X", &fixtures::five_cell()).replacen(from, to, 1);
        assert_ne!(text, serialize("X", &fixtures::five_cell()));
        parse(&text).unwrap_err()
    }

    #[test]
    fn designated_diagnostics() {
        let e = corrupt("<dot name=\"10\" ref=\"4\"/>", "<dot name=\"10\"/>");
        assert_eq!(e.to_string(), "null-dot without ref: `10`");
        assert_eq!(e.exit_code(), 1);
        let e = corrupt("<leaf name=\"2\"/>", "<leaf name=\"2x\"/>");
        assert!(e.to_string().contains("name bijection"), "{e}");
        let e = corrupt("ref=\"4\"", "ref=\"nowhere\"");
        assert!(e.to_string().contains("`nowhere`"), "{e}");
        assert!(matches!(parse("<opetope name=\"x\"><constellation"), Err(IoError::Syntax(_))));
        assert_eq!(parse("<opetope name=\"x\" colour=\"red\"/>").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn kernel_rule_is_reported() {
        // swapping two leaves of G3 makes sphere 6 enclose 2 and 4 but not 3
        let text = serialize("X", &fixtures::five_cell());
        let bad = text.replacen("<leaf name=\"3\"/>", "@", 1).replacen("<leaf name=\"4\"/>", "<leaf name=\"3\"/>", 1).replacen("@", "<leaf name=\"4\"/>", 1);
        let e = parse(&bad).unwrap_err();
        assert!(e.to_string().contains("kernel rule"), "{e}");
        assert!(e.to_string().contains("`6`"), "{e}");
    }

    #[test]
    fn dot_output() {
        let x = fixtures::five_cell();
        let all = to_dot(&x, None);
        assert_eq!(validate_dot(&all), Ok(6));
        let top = to_dot(&x, Some(5));
        assert_eq!(cluster_depth(&top), 2);
        assert!(top.contains("\"cluster_16\""));
        let a = to_dot(&Opetope::arrow(), None);
        assert_eq!(validate_dot(&a), Ok(2));
        assert_eq!(a.matches("fillcolor=black").count(), 2);
        assert!(validate_dot("digraph { a -- b }").is_err());
        assert!(validate_dot("digraph { a -> }").is_err());
    }
}
