//! Finite rooted non-planar trees with boundary.
//!
//! A tree is stored by node. Every node is the upper end of exactly one edge,
//! so an edge is identified with the node above it: a leaf node stands for a
//! leaf edge, a dot stands for its outgoing edge, and the root node stands for
//! the root edge. The unit tree is a single leaf node which is also the root.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub type Name = String;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Dot,
    Leaf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    kind: Kind,
    parent: Option<Name>,
    // kept sorted by name so that derived equality is order-insensitive
    children: Vec<Name>,
}

/// A named tree. Derived equality compares names too; use
/// [`Tree::canonical_code`] for equality up to renaming.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    root: Name,
    nodes: BTreeMap<Name, Node>,
}

/// One node of a tree given by parent pointers, prior to validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawNode {
    pub name: Name,
    pub kind: Kind,
    pub parent: Option<Name>,
}

impl RawNode {
    pub fn dot(name: &str, parent: Option<&str>) -> Self {
        RawNode { name: name.into(), kind: Kind::Dot, parent: parent.map(Into::into) }
    }
    pub fn leaf(name: &str, parent: Option<&str>) -> Self {
        RawNode { name: name.into(), kind: Kind::Leaf, parent: parent.map(Into::into) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeViolation {
    #[error("empty tree")]
    Empty,
    #[error("duplicate name `{0}`")]
    DuplicateName(Name),
    #[error("node `{node}` has unknown parent `{parent}`")]
    UnknownParent { node: Name, parent: Name },
    #[error("leaf `{leaf}` has child `{child}`")]
    LeafHasChildren { leaf: Name, child: Name },
    #[error("multiple root edges: {0:?}")]
    MultipleRoots(Vec<Name>),
    #[error("no root edge")]
    NoRoot,
    #[error("not acyclic: {0:?} never reach the root")]
    NotAcyclic(Vec<Name>),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("unknown node `{0}`")]
    UnknownNode(Name),
    #[error("`{0}` is not a dot")]
    NotADot(Name),
    #[error("name `{0}` already in use")]
    NameTaken(Name),
    #[error("cannot remove the root `{0}`")]
    RootRemoval(Name),
    #[error("term syntax: {0}")]
    Term(String),
}

/// Check a parent-pointer description against the tree invariants.
pub fn validate_tree(raw: &[RawNode]) -> Vec<TreeViolation> {
    let mut out = Vec::new();
    if raw.is_empty() {
        out.push(TreeViolation::Empty);
        return out;
    }
    let mut kinds: BTreeMap<&str, Kind> = BTreeMap::new();
    for n in raw {
        if kinds.insert(&n.name, n.kind).is_some() {
            out.push(TreeViolation::DuplicateName(n.name.clone()));
        }
    }
    let mut roots = Vec::new();
    for n in raw {
        match &n.parent {
            None => roots.push(n.name.clone()),
            Some(p) => match kinds.get(p.as_str()) {
                None => out.push(TreeViolation::UnknownParent { node: n.name.clone(), parent: p.clone() }),
                Some(Kind::Leaf) => {
                    out.push(TreeViolation::LeafHasChildren { leaf: p.clone(), child: n.name.clone() })
                }
                Some(Kind::Dot) => {}
            },
        }
    }
    match roots.len() {
        0 => out.push(TreeViolation::NoRoot),
        1 => {}
        _ => out.push(TreeViolation::MultipleRoots(roots)),
    }
    // every node must reach a parentless node without revisiting
    let parent: BTreeMap<&str, Option<&str>> =
        raw.iter().map(|n| (n.name.as_str(), n.parent.as_deref())).collect();
    let mut stuck = Vec::new();
    for n in raw {
        let mut seen = BTreeSet::new();
        let mut cur = n.name.as_str();
        loop {
            if !seen.insert(cur) {
                stuck.push(n.name.clone());
                break;
            }
            match parent.get(cur) {
                Some(Some(p)) if parent.contains_key(p) => cur = p,
                _ => break,
            }
        }
    }
    if !stuck.is_empty() {
        out.push(TreeViolation::NotAcyclic(stuck));
    }
    out
}

impl Tree {
    pub fn unit(name: &str) -> Tree {
        let mut nodes = BTreeMap::new();
        nodes.insert(name.to_string(), Node { kind: Kind::Leaf, parent: None, children: vec![] });
        Tree { root: name.to_string(), nodes }
    }

    /// One dot with the given leaves.
    pub fn corolla(dot: &str, leaves: &[&str]) -> Tree {
        let mut t = Tree::unit(dot);
        t.node_mut(dot).kind = Kind::Dot;
        for l in leaves {
            t.attach(dot, l, Kind::Leaf);
        }
        t
    }

    pub fn from_raw(raw: &[RawNode]) -> Result<Tree, Vec<TreeViolation>> {
        let v = validate_tree(raw);
        if !v.is_empty() {
            return Err(v);
        }
        let mut nodes: BTreeMap<Name, Node> = raw
            .iter()
            .map(|n| (n.name.clone(), Node { kind: n.kind, parent: n.parent.clone(), children: vec![] }))
            .collect();
        let mut root = String::new();
        for n in raw {
            match &n.parent {
                Some(p) => nodes.get_mut(p).unwrap().children.push(n.name.clone()),
                None => root = n.name.clone(),
            }
        }
        for n in nodes.values_mut() {
            n.children.sort();
        }
        Ok(Tree { root, nodes })
    }

    pub fn to_raw(&self) -> Vec<RawNode> {
        self.nodes
            .iter()
            .map(|(k, n)| RawNode { name: k.clone(), kind: n.kind, parent: n.parent.clone() })
            .collect()
    }

    /// Parse the compact term notation: `a(b c())` is a dot `a` over a leaf
    /// `b` and a null-dot `c`; a bare name is a leaf.
    pub fn from_term(s: &str) -> Result<Tree, TreeError> {
        let toks = tokenize(s)?;
        let mut pos = 0;
        let mut raw = Vec::new();
        parse_term(&toks, &mut pos, None, &mut raw)?;
        if pos != toks.len() {
            return Err(TreeError::Term(format!("trailing input after `{}`", raw[0].name)));
        }
        Tree::from_raw(&raw).map_err(|v| TreeError::Term(v[0].to_string()))
    }

    /// Inverse of [`Tree::from_term`], children in name order.
    pub fn to_term(&self) -> String {
        let mut s = String::new();
        self.write_term(&self.root, &mut s);
        s
    }

    fn write_term(&self, x: &str, s: &mut String) {
        s.push_str(x);
        if self.kind(x) == Kind::Dot {
            s.push('(');
            for (i, c) in self.children(x).iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                self.write_term(c, s);
            }
            s.push(')');
        }
    }

    fn node(&self, x: &str) -> &Node {
        self.nodes.get(x).unwrap_or_else(|| panic!("unknown node `{x}`"))
    }

    fn node_mut(&mut self, x: &str) -> &mut Node {
        self.nodes.get_mut(x).unwrap_or_else(|| panic!("unknown node `{x}`"))
    }

    pub fn root(&self) -> &str {
        &self.root
    }
    pub fn contains(&self, x: &str) -> bool {
        self.nodes.contains_key(x)
    }
    pub fn kind(&self, x: &str) -> Kind {
        self.node(x).kind
    }
    pub fn get_kind(&self, x: &str) -> Option<Kind> {
        self.nodes.get(x).map(|n| n.kind)
    }
    pub fn parent(&self, x: &str) -> Option<&str> {
        self.node(x).parent.as_deref()
    }
    pub fn children(&self, x: &str) -> &[Name] {
        &self.node(x).children
    }
    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.nodes.keys()
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dots(&self) -> impl Iterator<Item = &Name> {
        self.nodes.iter().filter(|(_, n)| n.kind == Kind::Dot).map(|(k, _)| k)
    }
    pub fn leaves(&self) -> impl Iterator<Item = &Name> {
        self.nodes.iter().filter(|(_, n)| n.kind == Kind::Leaf).map(|(k, _)| k)
    }
    pub fn dot_count(&self) -> usize {
        self.dots().count()
    }
    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }
    pub fn is_unit(&self) -> bool {
        self.kind(&self.root) == Kind::Leaf
    }
    pub fn is_dot(&self, x: &str) -> bool {
        self.get_kind(x) == Some(Kind::Dot)
    }
    pub fn is_leaf(&self, x: &str) -> bool {
        self.get_kind(x) == Some(Kind::Leaf)
    }
    pub fn is_null_dot(&self, x: &str) -> bool {
        self.nodes.get(x).is_some_and(|n| n.kind == Kind::Dot && n.children.is_empty())
    }
    pub fn null_dots(&self) -> impl Iterator<Item = &Name> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.kind == Kind::Dot && n.children.is_empty())
            .map(|(k, _)| k)
    }

    pub fn is_linear(&self) -> bool {
        self.nodes.values().all(|n| n.kind == Kind::Leaf || n.children.len() == 1)
    }

    pub fn depth(&self, x: &str) -> usize {
        let mut d = 0;
        let mut cur = x;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
        }
        d
    }

    /// `a <= b` iff `b` lies on the path from `a` to the root.
    pub fn leq(&self, a: &str, b: &str) -> bool {
        let mut cur = Some(a);
        while let Some(c) = cur {
            if c == b {
                return true;
            }
            cur = self.parent(c);
        }
        false
    }

    /// `x` and everything above it, in preorder.
    pub fn descendants(&self, x: &str) -> Vec<Name> {
        let mut out = Vec::new();
        let mut stack = vec![x.to_string()];
        while let Some(c) = stack.pop() {
            for ch in self.children(&c).iter().rev() {
                stack.push(ch.clone());
            }
            out.push(c);
        }
        out
    }

    pub fn leaves_under(&self, x: &str) -> Vec<Name> {
        self.descendants(x).into_iter().filter(|n| self.kind(n) == Kind::Leaf).collect()
    }

    pub fn null_dots_under(&self, x: &str) -> Vec<Name> {
        self.descendants(x).into_iter().filter(|n| self.is_null_dot(n)).collect()
    }

    /// Preorder from the root.
    pub fn preorder(&self) -> Vec<Name> {
        self.descendants(&self.root)
    }

    /// The subtree rooted at `x`.
    pub fn subtree(&self, x: &str) -> Tree {
        let mut nodes = BTreeMap::new();
        for n in self.descendants(x) {
            let mut node = self.node(&n).clone();
            if n == x {
                node.parent = None;
            }
            nodes.insert(n, node);
        }
        Tree { root: x.to_string(), nodes }
    }

    pub fn canonical_code(&self) -> String {
        self.code_at(&self.root)
    }

    fn code_at(&self, x: &str) -> String {
        match self.kind(x) {
            Kind::Leaf => "L".into(),
            Kind::Dot => {
                let mut cs: Vec<String> = self.children(x).iter().map(|c| self.code_at(c)).collect();
                cs.sort();
                format!("({})", cs.concat())
            }
        }
    }

    /// Codes of every node, computed bottom-up once.
    pub(crate) fn all_codes(&self) -> BTreeMap<Name, String> {
        let mut out = BTreeMap::new();
        for x in self.preorder().into_iter().rev() {
            let code = match self.kind(&x) {
                Kind::Leaf => "L".to_string(),
                Kind::Dot => {
                    let mut cs: Vec<&String> = self.children(&x).iter().map(|c| &out[c]).collect();
                    cs.sort();
                    let mut s = String::from("(");
                    for c in cs {
                        s.push_str(c);
                    }
                    s.push(')');
                    s
                }
            };
            out.insert(x, code);
        }
        out
    }

    /// A root- and leaf-preserving isomorphism, as a map on node names (hence
    /// on edges too, since edges are named by their upper node).
    pub fn find_isomorphism(a: &Tree, b: &Tree) -> Option<BTreeMap<Name, Name>> {
        let ca = a.all_codes();
        let cb = b.all_codes();
        if ca[&a.root] != cb[&b.root] {
            return None;
        }
        let mut map = BTreeMap::new();
        let mut stack = vec![(a.root.clone(), b.root.clone())];
        while let Some((x, y)) = stack.pop() {
            let mut xs: Vec<&Name> = a.children(&x).iter().collect();
            let mut ys: Vec<&Name> = b.children(&y).iter().collect();
            xs.sort_by(|p, q| ca[*p].cmp(&ca[*q]));
            ys.sort_by(|p, q| cb[*p].cmp(&cb[*q]));
            for (p, q) in xs.into_iter().zip(ys) {
                stack.push((p.clone(), q.clone()));
            }
            map.insert(x, y);
        }
        Some(map)
    }

    /// Every isomorphism `a -> b`.
    pub fn all_isomorphisms(a: &Tree, b: &Tree) -> Vec<BTreeMap<Name, Name>> {
        let ca = a.all_codes();
        let cb = b.all_codes();
        if ca[&a.root] != cb[&b.root] {
            return vec![];
        }
        let mut out = Vec::new();
        let start = BTreeMap::from([(a.root.clone(), b.root.clone())]);
        iso_search(a, b, &ca, &cb, vec![(a.root.clone(), b.root.clone())], start, &mut out);
        out
    }

    // ---- mutation, used by the calculus ----

    pub(crate) fn attach(&mut self, parent: &str, name: &str, kind: Kind) {
        assert!(!self.nodes.contains_key(name), "name `{name}` already in tree");
        self.nodes.insert(name.to_string(), Node { kind, parent: Some(parent.to_string()), children: vec![] });
        let p = self.node_mut(parent);
        p.kind = Kind::Dot;
        insert_sorted(&mut p.children, name.to_string());
    }

    pub(crate) fn rename(&mut self, old: &str, new: &str) -> Result<(), TreeError> {
        if old == new {
            return Ok(());
        }
        if self.nodes.contains_key(new) {
            return Err(TreeError::NameTaken(new.into()));
        }
        let node = self.nodes.remove(old).ok_or_else(|| TreeError::UnknownNode(old.into()))?;
        for c in &node.children {
            self.node_mut(c).parent = Some(new.to_string());
        }
        match &node.parent {
            Some(p) => {
                let ch = &mut self.node_mut(p).children;
                ch.retain(|c| c != old);
                insert_sorted(ch, new.to_string());
            }
            None => self.root = new.to_string(),
        }
        self.nodes.insert(new.to_string(), node);
        Ok(())
    }

    /// Remove a non-root dot, handing its children to its parent.
    pub(crate) fn splice_out(&mut self, x: &str) -> Result<(), TreeError> {
        let node = self.nodes.get(x).ok_or_else(|| TreeError::UnknownNode(x.into()))?.clone();
        if node.kind != Kind::Dot {
            return Err(TreeError::NotADot(x.into()));
        }
        let p = node.parent.clone().ok_or_else(|| TreeError::RootRemoval(x.into()))?;
        self.nodes.remove(x);
        for c in &node.children {
            self.node_mut(c).parent = Some(p.clone());
        }
        let ch = &mut self.node_mut(&p).children;
        ch.retain(|c| c != x);
        for c in node.children {
            insert_sorted(ch, c);
        }
        Ok(())
    }

    /// Cut everything above `x` and make `x` a leaf.
    pub(crate) fn prune_to_leaf(&mut self, x: &str) {
        for d in self.descendants(x).into_iter().skip(1) {
            self.nodes.remove(&d);
        }
        let n = self.node_mut(x);
        n.children.clear();
        n.kind = Kind::Leaf;
    }

    /// Insert a new dot on the edge below `x`.
    pub(crate) fn insert_below(&mut self, x: &str, name: &str) -> Result<(), TreeError> {
        if self.nodes.contains_key(name) {
            return Err(TreeError::NameTaken(name.into()));
        }
        let parent = self.nodes.get(x).ok_or_else(|| TreeError::UnknownNode(x.into()))?.parent.clone();
        match &parent {
            Some(p) => {
                let ch = &mut self.node_mut(p).children;
                ch.retain(|c| c != x);
                insert_sorted(ch, name.to_string());
            }
            None => self.root = name.to_string(),
        }
        self.node_mut(x).parent = Some(name.to_string());
        self.nodes.insert(name.to_string(), Node { kind: Kind::Dot, parent, children: vec![x.to_string()] });
        Ok(())
    }

    /// Replace node `x` by the tree `t`. Each leaf `l` of `t` with
    /// `graft[l] = c` is replaced by the child `c` of `x` (with its subtree);
    /// every child of `x` must be used exactly once. Names of `t` other than
    /// its grafted leaves must be fresh.
    pub(crate) fn substitute(&mut self, x: &str, t: &Tree, graft: &BTreeMap<Name, Name>) {
        let node = self.nodes.remove(x).expect("unknown node");
        let parent = node.parent.clone();
        // keep the subtrees of x's children
        let mut target_parent: BTreeMap<Name, Name> = BTreeMap::new();
        for (leaf, child) in graft {
            match t.parent(leaf) {
                Some(p) => {
                    target_parent.insert(child.clone(), p.to_string());
                }
                None => {
                    // t is a unit tree: the child takes x's place
                    self.node_mut(child).parent = parent.clone();
                    match &parent {
                        Some(p) => {
                            let ch = &mut self.node_mut(p).children;
                            ch.retain(|c| c != x);
                            insert_sorted(ch, child.clone());
                        }
                        None => self.root = child.clone(),
                    }
                    return;
                }
            }
        }
        for (name, n) in &t.nodes {
            if graft.contains_key(name) {
                continue;
            }
            assert!(!self.nodes.contains_key(name), "substitution clash on `{name}`");
            let mut nn = n.clone();
            nn.children = n.children.iter().map(|c| graft.get(c).cloned().unwrap_or_else(|| c.clone())).collect();
            nn.children.sort();
            if name == &t.root {
                nn.parent = parent.clone();
            }
            self.nodes.insert(name.clone(), nn);
        }
        for (child, p) in target_parent {
            self.node_mut(&child).parent = Some(p);
        }
        match &parent {
            Some(p) => {
                let ch = &mut self.node_mut(p).children;
                ch.retain(|c| c != x);
                insert_sorted(ch, t.root.clone());
            }
            None => self.root = t.root.clone(),
        }
    }
}

fn insert_sorted(v: &mut Vec<Name>, x: Name) {
    let i = v.binary_search(&x).unwrap_or_else(|i| i);
    v.insert(i, x);
}

/// Child pairs matched so far, with the indices of used children on the right.
type Matching = (Vec<(Name, Name)>, BTreeSet<usize>);

fn iso_search(
    a: &Tree,
    b: &Tree,
    ca: &BTreeMap<Name, String>,
    cb: &BTreeMap<Name, String>,
    mut todo: Vec<(Name, Name)>,
    map: BTreeMap<Name, Name>,
    out: &mut Vec<BTreeMap<Name, Name>>,
) {
    let Some((x, y)) = todo.pop() else {
        out.push(map);
        return;
    };
    let xs = a.children(&x);
    let ys = b.children(&y);
    // match children of x to children of y with equal codes, all ways
    let mut partial: Vec<Matching> = vec![(vec![], BTreeSet::new())];
    for xc in xs {
        let mut next = Vec::new();
        for (pairs, used) in &partial {
            for (j, yc) in ys.iter().enumerate() {
                if !used.contains(&j) && ca[xc] == cb[yc] {
                    let mut p = pairs.clone();
                    p.push((xc.clone(), yc.clone()));
                    let mut u = used.clone();
                    u.insert(j);
                    next.push((p, u));
                }
            }
        }
        partial = next;
    }
    for (pairs, _) in partial {
        let mut m = map.clone();
        let mut t = todo.clone();
        for (p, q) in pairs {
            m.insert(p.clone(), q.clone());
            t.push((p, q));
        }
        iso_search(a, b, ca, cb, t, m, out);
    }
}

fn tokenize(s: &str) -> Result<Vec<String>, TreeError> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for ch in s.chars() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
            if !ch.is_whitespace() {
                toks.push(ch.to_string());
            }
        } else {
            cur.push(ch);
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    if toks.is_empty() {
        return Err(TreeError::Term("empty term".into()));
    }
    Ok(toks)
}

fn parse_term(toks: &[String], pos: &mut usize, parent: Option<&str>, raw: &mut Vec<RawNode>) -> Result<(), TreeError> {
    let name = toks.get(*pos).ok_or_else(|| TreeError::Term("unexpected end".into()))?.clone();
    if name == "(" || name == ")" {
        return Err(TreeError::Term(format!("expected a name, found `{name}`")));
    }
    *pos += 1;
    if toks.get(*pos).map(String::as_str) == Some("(") {
        *pos += 1;
        raw.push(RawNode::dot(&name, parent));
        while toks.get(*pos).map(String::as_str) != Some(")") {
            if *pos >= toks.len() {
                return Err(TreeError::Term(format!("unclosed `(` after `{name}`")));
            }
            parse_term(toks, pos, Some(&name), raw)?;
        }
        *pos += 1;
    } else {
        raw.push(RawNode::leaf(&name, parent));
    }
    Ok(())
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_term())
    }
}

/// Hands out names not yet in use, as `prefix` followed by a counter.
#[derive(Clone, Debug)]
pub struct NameGen {
    taken: BTreeSet<Name>,
    prefix: String,
    next: usize,
}

impl NameGen {
    pub fn new<'a>(prefix: &str, taken: impl IntoIterator<Item = &'a Name>) -> Self {
        NameGen { taken: taken.into_iter().cloned().collect(), prefix: prefix.into(), next: 0 }
    }

    pub fn reserve(&mut self, n: &str) {
        self.taken.insert(n.to_string());
    }

    pub fn is_taken(&self, n: &str) -> bool {
        self.taken.contains(n)
    }

    /// `base` itself when free, otherwise a fresh suffixed variant.
    pub fn fresh_like(&mut self, base: &str) -> Name {
        if self.taken.insert(base.to_string()) {
            return base.to_string();
        }
        let mut k = 1;
        loop {
            let c = format!("{base}~{k}");
            if self.taken.insert(c.clone()) {
                return c;
            }
            k += 1;
        }
    }
}

impl Iterator for NameGen {
    type Item = Name;
    fn next(&mut self) -> Option<Name> {
        loop {
            let c = format!("{}{}", self.prefix, self.next);
            self.next += 1;
            if self.taken.insert(c.clone()) {
                return Some(c);
            }
        }
    }
}

/// White dots on edges, keyed by the edge's upper node, listed root-to-leaf.
pub type Whites = BTreeMap<Name, Vec<Name>>;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("unknown dot `{0}`")]
    UnknownDot(Name),
    #[error("not a kernel")]
    NotKernel,
}

/// A tree with white dots placed on its edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubdividedTree {
    pub base: Tree,
    pub whites: Whites,
}

impl SubdividedTree {
    /// Fails when an edge is unknown or a white name collides with the base.
    pub fn new(base: Tree, whites: Whites) -> Result<Self, TreeError> {
        let mut seen = BTreeSet::new();
        for (e, ws) in &whites {
            if !base.contains(e) {
                return Err(TreeError::UnknownNode(e.clone()));
            }
            for w in ws {
                if base.contains(w) || !seen.insert(w.clone()) {
                    return Err(TreeError::NameTaken(w.clone()));
                }
            }
        }
        let whites = whites.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        Ok(SubdividedTree { base, whites })
    }

    pub fn white_dots(&self) -> Vec<Name> {
        self.whites.values().flatten().cloned().collect()
    }

    pub fn black_dots(&self) -> Vec<Name> {
        self.base.dots().cloned().collect()
    }

    /// Where a white dot sits: its edge and index.
    pub fn white_position(&self, w: &str) -> Option<(&str, usize)> {
        self.whites.iter().find_map(|(e, ws)| ws.iter().position(|x| x == w).map(|i| (e.as_str(), i)))
    }

    /// The subdivided tree T' as a plain tree, whites becoming unary dots.
    pub fn flatten(&self) -> Tree {
        let mut t = self.base.clone();
        for (e, ws) in &self.whites {
            // insert from the leaf end down so each lands directly below the previous
            let mut above = e.clone();
            for w in ws.iter().rev() {
                t.insert_below(&above, w).expect("fresh white");
                above = w.clone();
            }
        }
        t
    }

    pub fn is_kernel(&self, k: &BTreeSet<Name>) -> Result<bool, KernelError> {
        let flat = self.flatten();
        for x in k {
            if !flat.is_dot(x) {
                return Err(KernelError::UnknownDot(x.clone()));
            }
        }
        Ok(is_connected_in(&flat, k))
    }

    /// The tree K‡ spanned by a kernel. Edges leaving K upward become leaves
    /// named after the element of T' directly above them.
    pub fn kernel_span(&self, k: &BTreeSet<Name>) -> Result<Tree, KernelError> {
        if !self.is_kernel(k)? {
            return Err(KernelError::NotKernel);
        }
        let flat = self.flatten();
        Ok(span_in(&flat, k))
    }

    /// Erase all white dots.
    pub fn erase_whites(&self) -> Tree {
        self.base.clone()
    }

    pub fn canonical_code(&self) -> String {
        self.code_at(self.base.root())
    }

    fn code_at(&self, x: &str) -> String {
        let inner = match self.base.kind(x) {
            Kind::Leaf => "L".to_string(),
            Kind::Dot => {
                let mut cs: Vec<String> = self.base.children(x).iter().map(|c| self.code_at(c)).collect();
                cs.sort();
                format!("({})", cs.concat())
            }
        };
        let n = self.whites.get(x).map_or(0, Vec::len);
        format!("{}{}", "w".repeat(n), inner)
    }
}

pub(crate) fn is_connected_in(flat: &Tree, k: &BTreeSet<Name>) -> bool {
    if k.is_empty() {
        return false;
    }
    // connected iff exactly one member has its parent outside K
    k.iter().filter(|x| flat.parent(x).is_none_or(|p| !k.contains(p))).count() == 1
}

pub(crate) fn span_in(flat: &Tree, k: &BTreeSet<Name>) -> Tree {
    let root = k.iter().find(|x| flat.parent(x).is_none_or(|p| !k.contains(p))).unwrap();
    let mut t = Tree::unit(root);
    t.node_mut(root).kind = Kind::Dot;
    let mut stack = vec![root.clone()];
    while let Some(x) = stack.pop() {
        for c in flat.children(&x) {
            if k.contains(c) {
                t.attach(&x, c, Kind::Dot);
                stack.push(c.clone());
            } else {
                t.attach(&x, c, Kind::Leaf);
            }
        }
    }
    t
}

/// All non-planar trees with at most `max_dots` dots and `max_leaves` leaves,
/// one per isomorphism class, with generated names.
pub fn enumerate_trees(max_dots: usize, max_leaves: usize) -> Vec<Tree> {
    // shapes as canonical codes, grown by multisets of child shapes
    let mut by_size: BTreeMap<(usize, usize), BTreeSet<String>> = BTreeMap::new();
    by_size.entry((0, 1)).or_default().insert("L".into());
    for d in 1..=max_dots {
        let mut new: BTreeSet<(usize, usize, String)> = BTreeSet::new();
        let pool: Vec<(usize, usize, String)> = by_size
            .iter()
            .flat_map(|(&(dd, ll), s)| s.iter().map(move |c| (dd, ll, c.clone())))
            .collect();
        // choose a multiset of children with total dots d-1 and leaves <= max
        let mut acc: Vec<(usize, usize, Vec<usize>)> = vec![(0, 0, vec![])];
        while let Some((dd, ll, picks)) = acc.pop() {
            if dd == d - 1 {
                let mut cs: Vec<&str> = picks.iter().map(|&i| pool[i].2.as_str()).collect();
                cs.sort();
                new.insert((d, ll, format!("({})", cs.concat())));
            }
            let start = picks.last().copied().unwrap_or(0);
            for (i, (pd, pl, _)) in pool.iter().enumerate().skip(start) {
                if dd + pd < d && ll + pl <= max_leaves && (*pd > 0 || *pl > 0) {
                    let mut p = picks.clone();
                    p.push(i);
                    acc.push((dd + pd, ll + pl, p));
                }
            }
        }
        for (dd, ll, c) in new {
            by_size.entry((dd, ll)).or_default().insert(c);
        }
    }
    let mut out = Vec::new();
    for ((_, l), codes) in &by_size {
        if *l <= max_leaves {
            for c in codes {
                out.push(tree_from_code(c));
            }
        }
    }
    out
}

/// Build a tree from a canonical code, naming nodes `n0, n1, ...` in preorder.
pub fn tree_from_code(code: &str) -> Tree {
    let chars: Vec<char> = code.chars().collect();
    let mut raw = Vec::new();
    let mut stack: Vec<String> = Vec::new();
    let mut counter = 0;
    for ch in chars {
        let parent = stack.last().cloned();
        match ch {
            '(' => {
                let n = format!("n{counter}");
                counter += 1;
                raw.push(RawNode::dot(&n, parent.as_deref()));
                stack.push(n);
            }
            ')' => {
                stack.pop();
            }
            'L' => {
                let n = format!("n{counter}");
                counter += 1;
                raw.push(RawNode::leaf(&n, parent.as_deref()));
            }
            _ => panic!("bad code"),
        }
    }
    Tree::from_raw(&raw).expect("code builds a tree")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Tree {
        Tree::from_term(s).unwrap()
    }

    fn brute_iso(a: &Tree, b: &Tree) -> bool {
        if a.len() != b.len() {
            return false;
        }
        let an: Vec<&Name> = a.names().collect();
        let bn: Vec<&Name> = b.names().collect();
        let mut perm: Vec<usize> = (0..bn.len()).collect();
        loop {
            let m: BTreeMap<&str, &str> = an.iter().zip(&perm).map(|(x, &j)| (x.as_str(), bn[j].as_str())).collect();
            let ok = an.iter().all(|x| {
                a.kind(x) == b.kind(m[x.as_str()]) && a.parent(x).map(|p| m[p]) == b.parent(m[x.as_str()])
            });
            if ok {
                return true;
            }
            if !next_perm(&mut perm) {
                return false;
            }
        }
    }

    fn next_perm(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn unit_tree_basics() {
        let u = Tree::unit("e");
        assert_eq!(u.dot_count(), 0);
        assert_eq!(u.leaves().collect::<Vec<_>>(), vec!["e"]);
        assert_eq!(u.root(), "e");
        assert!(u.is_linear());
        assert_eq!(Tree::unit("a").canonical_code(), Tree::unit("b").canonical_code());
    }

    #[test]
    fn validation_rules() {
        let chain = [RawNode::dot("a", None), RawNode::dot("b", Some("a")), RawNode::leaf("l", Some("b"))];
        assert!(validate_tree(&chain).is_empty());
        let cyc = [
            RawNode::dot("r", None),
            RawNode::dot("a", Some("c")),
            RawNode::dot("b", Some("a")),
            RawNode::dot("c", Some("b")),
        ];
        let v = validate_tree(&cyc);
        assert!(v.iter().any(|x| x.to_string().starts_with("not acyclic")), "{v:?}");
        let two = [RawNode::dot("a", None), RawNode::leaf("b", None)];
        assert!(validate_tree(&two).iter().any(|x| x.to_string().starts_with("multiple root edges")));
        let leafy = [RawNode::leaf("a", None), RawNode::leaf("b", Some("a"))];
        assert!(matches!(validate_tree(&leafy)[0], TreeViolation::LeafHasChildren { .. }));
    }

    #[test]
    fn codes_ignore_order_and_names() {
        assert_eq!(t("r(a b(c))").canonical_code(), t("x(y(z) w)").canonical_code());
        assert_ne!(t("a(b(l))").canonical_code(), t("a(l m)").canonical_code());
    }

    #[test]
    fn term_round_trip() {
        let x = t("13(14(8 10) 15(9 11) 16() 12)");
        assert_eq!(Tree::from_term(&x.to_term()).unwrap(), x);
        assert!(x.is_null_dot("16"));
        assert_eq!(x.dot_count(), 4);
    }

    #[test]
    fn linearity() {
        assert!(t("a(b(c(l)))").is_linear());
        assert!(!t("a(l m)").is_linear());
    }

    #[test]
    fn isomorphism_agrees_with_brute_force() {
        let all = enumerate_trees(3, 3);
        for a in &all {
            for b in &all {
                let fast = Tree::find_isomorphism(a, b).is_some();
                assert_eq!(fast, brute_iso(a, b));
                assert_eq!(fast, a.canonical_code() == b.canonical_code());
            }
        }
        // codes are pairwise distinct across the enumerated classes
        let codes: BTreeSet<String> = all.iter().map(Tree::canonical_code).collect();
        assert_eq!(codes.len(), all.len());
    }

    #[test]
    fn found_isomorphisms_preserve_structure() {
        let a = t("r(a(x y) b(z) l)");
        let b = t("R(B(Z) L A(Y X))");
        let m = Tree::find_isomorphism(&a, &b).unwrap();
        for x in a.names() {
            assert_eq!(a.kind(x), b.kind(&m[x]));
            assert_eq!(a.parent(x).map(|p| m[p].as_str()), b.parent(&m[x]));
        }
        assert!(Tree::find_isomorphism(&Tree::unit("u"), &t("d(l)")).is_none());
        assert_eq!(Tree::all_isomorphisms(&a, &a).len(), 2);
        assert_eq!(Tree::all_isomorphisms(&t("r(a(x) b(y z))"), &t("r(a(x) b(y z))")).len(), 2);
        assert_eq!(Tree::all_isomorphisms(&t("r(a b c)"), &t("r(a b c)")).len(), 6);
    }

    #[test]
    fn partial_order() {
        let x = t("r(a(b(l)) m)");
        assert!(x.leq("b", "r"));
        assert!(x.leq("l", "a"));
        assert!(!x.leq("a", "b"));
        assert!(!x.leq("m", "a"));
    }

    #[test]
    fn kernels_in_the_figure_tree() {
        // a tree with dots r,u,v,w: r the root, u and w children of r, v above u
        let base = t("r(u(v(l1) l2) w(l3))");
        let s = SubdividedTree::new(base, Whites::new()).unwrap();
        let k: BTreeSet<Name> = ["r", "u", "v"].iter().map(|x| x.to_string()).collect();
        assert!(s.is_kernel(&k).unwrap());
        let gap: BTreeSet<Name> = ["r", "v"].iter().map(|x| x.to_string()).collect();
        assert!(!s.is_kernel(&gap).unwrap());
        let unknown: BTreeSet<Name> = ["q".to_string()].into();
        assert_eq!(s.is_kernel(&unknown), Err(KernelError::UnknownDot("q".into())));
        let span = s.kernel_span(&k).unwrap();
        assert_eq!(span.to_term(), "r(u(l2 v(l1)) w)");
    }

    #[test]
    fn whites_break_and_join_kernels() {
        let base = t("a(b(l))");
        let s = SubdividedTree::new(base, Whites::from([("b".to_string(), vec!["x".to_string(), "y".to_string()])]))
            .unwrap();
        let ab: BTreeSet<Name> = ["a", "b"].iter().map(|x| x.to_string()).collect();
        assert!(!s.is_kernel(&ab).unwrap());
        let axyb: BTreeSet<Name> = ["a", "x", "y", "b"].iter().map(|x| x.to_string()).collect();
        assert!(s.is_kernel(&axyb).unwrap());
        let y: BTreeSet<Name> = ["y".to_string()].into();
        assert_eq!(s.kernel_span(&y).unwrap().to_term(), "y(b)");
        assert_eq!(s.erase_whites().canonical_code(), t("p(q(m))").canonical_code());
        assert_ne!(s.canonical_code(), SubdividedTree::new(t("p(q(m))"), Whites::new()).unwrap().canonical_code());
    }

    #[test]
    fn tree_counts_match_known_sequence() {
        // rooted trees with boundary, by dots, unbounded leaves small enough
        let all = enumerate_trees(2, 9);
        // 0 dots: unit; 1 dot: corollas with 0..=9 leaves; 2 dots: many
        assert_eq!(all.iter().filter(|t| t.dot_count() == 0).count(), 1);
        assert_eq!(all.iter().filter(|t| t.dot_count() == 1).count(), 10);
    }

    #[test]
    fn splice_and_insert_are_inverse() {
        let mut x = t("r(a(l) m)");
        let orig = x.clone();
        x.insert_below("a", "n").unwrap();
        assert_eq!(x.to_term(), "r(m n(a(l)))");
        x.splice_out("n").unwrap();
        assert_eq!(x, orig);
        x.rename("a", "z").unwrap();
        assert_eq!(x.to_term(), "r(m z(l))");
    }

    #[test]
    fn substitute_replaces_a_node() {
        let mut x = t("r(f(a b) l)");
        let s = t("s(p a2(b2))");
        let graft = BTreeMap::from([("p".to_string(), "a".to_string()), ("b2".to_string(), "b".to_string())]);
        x.substitute("f", &s, &graft);
        assert_eq!(x.to_term(), "r(l s(a a2(b)))");
        let mut y = t("r(f(a) l)");
        y.substitute("f", &Tree::unit("u"), &BTreeMap::from([("u".to_string(), "a".to_string())]));
        assert_eq!(y.to_term(), "r(a l)");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_tree() -> impl Strategy<Value = Tree> {
            let all = enumerate_trees(4, 4);
            (0..all.len()).prop_map(move |i| all[i].clone())
        }

        proptest! {
            #[test]
            fn single_dots_are_kernels(tr in arb_tree()) {
                let s = SubdividedTree::new(tr.clone(), Whites::new()).unwrap();
                for d in tr.dots() {
                    let k: BTreeSet<Name> = [d.clone()].into();
                    prop_assert!(s.is_kernel(&k).unwrap());
                }
            }

            #[test]
            fn overlapping_kernels_union(tr in arb_tree(), a in 0usize..8, b in 0usize..8) {
                let dots: Vec<Name> = tr.dots().cloned().collect();
                prop_assume!(!dots.is_empty());
                let x = &dots[a % dots.len()];
                let y = &dots[b % dots.len()];
                // two paths towards the root from x and y both contain their meet
                let s = SubdividedTree::new(tr.clone(), Whites::new()).unwrap();
                let path = |from: &Name| -> BTreeSet<Name> {
                    let mut out = BTreeSet::new();
                    let mut cur = Some(from.as_str());
                    while let Some(c) = cur { out.insert(c.to_string()); cur = tr.parent(c); }
                    out
                };
                let (px, py) = (path(x), path(y));
                prop_assert!(s.is_kernel(&px).unwrap() && s.is_kernel(&py).unwrap());
                let u: BTreeSet<Name> = px.union(&py).cloned().collect();
                prop_assert!(s.is_kernel(&u).unwrap());
            }

            #[test]
            fn span_leaves_are_upward_exits(tr in arb_tree(), mask in 0u32..256) {
                let s = SubdividedTree::new(tr.clone(), Whites::new()).unwrap();
                let dots: Vec<Name> = tr.dots().cloned().collect();
                let k: BTreeSet<Name> = dots.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, d)| d.clone()).collect();
                prop_assume!(!k.is_empty() && s.is_kernel(&k).unwrap());
                let span = s.kernel_span(&k).unwrap();
                // classify edges directly: upper end outside K, lower end inside
                let exits: BTreeSet<Name> = tr.names()
                    .filter(|e| !k.contains(*e) && tr.parent(e).is_some_and(|p| k.contains(p)))
                    .cloned().collect();
                let leaves: BTreeSet<Name> = span.leaves().cloned().collect();
                prop_assert_eq!(leaves, exits);
                let span_dots: BTreeSet<Name> = span.dots().cloned().collect();
                prop_assert_eq!(span_dots, k);
            }

            #[test]
            fn renaming_keeps_code(tr in arb_tree()) {
                let mut r = tr.clone();
                for n in tr.names() { r.rename(n, &format!("{n}'")).unwrap(); }
                prop_assert_eq!(r.canonical_code(), tr.canonical_code());
                prop_assert!(Tree::find_isomorphism(&tr, &r).is_some());
            }
        }
    }
}
