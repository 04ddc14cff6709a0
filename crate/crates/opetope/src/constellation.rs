//! Constellations: a carrier tree with white dots, and a nesting tree whose
//! leaves are the carrier's dots and whose null-dots are the white dots.
//!
//! Names carry the correspondences. A leaf of the nesting named `a` stands
//! for the carrier dot `a`, and a null-dot named `w` for the white dot `w`.
//! Dots of the nesting are the spheres.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::tree::{is_connected_in, Kind, Name, NameGen, RawNode, SubdividedTree, Tree, Whites};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constellation {
    pub carrier: Tree,
    pub whites: Whites,
    pub nesting: Tree,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("white dot `{white}` sits on unknown edge `{edge}`")]
    UnknownEdge { white: Name, edge: Name },
    #[error("white dot `{0}` reuses a carrier name")]
    WhiteClash(Name),
    #[error("white dot `{0}` placed twice")]
    WhiteTwice(Name),
    #[error("name bijection broken: nesting leaf `{0}` is not a carrier dot")]
    StrayLeaf(Name),
    #[error("name bijection broken: carrier dot `{0}` is not a nesting leaf")]
    MissingLeaf(Name),
    #[error("name bijection broken: null-dot `{0}` has no white dot")]
    StrayNullDot(Name),
    #[error("name bijection broken: white dot `{0}` has no null-dot")]
    MissingNullDot(Name),
    #[error("kernel rule violated: sphere `{0}` does not cut a subtree")]
    KernelRule(Name),
    #[error("a constellation without spheres needs exactly one carrier dot and no white dots")]
    SphereFree,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SphereError {
    #[error("sphere `{0}` does not cut a subtree")]
    NotSubtree(Name),
    #[error("crossing spheres at `{0}`")]
    Crossing(Name),
    #[error("missing outer sphere")]
    MissingOuter,
    #[error("unknown element `{0}`")]
    Unknown(Name),
    #[error("sphere `{0}` is empty and has no edge position")]
    Empty(Name),
    #[error("duplicate name `{0}`")]
    Duplicate(Name),
    #[error("{0}")]
    Invalid(Violation),
}

/// One sphere of the drawn presentation. A sphere with a position is a
/// null-sphere sitting on that carrier edge; cohabitants are ordered by the
/// second component, smallest nearest the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sphere {
    pub name: Name,
    pub parent: Option<Name>,
    pub position: Option<(Name, usize)>,
}

/// Spheres and dots drawn on a carrier, by immediate containment.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SphereFamily {
    pub spheres: Vec<Sphere>,
    /// innermost sphere around each carrier dot
    pub dot_parent: BTreeMap<Name, Name>,
}

impl Constellation {
    /// The constellation with no spheres on a one-dot carrier.
    pub fn trivial(carrier: Tree) -> Result<Self, Violation> {
        let dots: Vec<&Name> = carrier.dots().collect();
        if dots.len() != 1 {
            return Err(Violation::SphereFree);
        }
        let nesting = Tree::unit(dots[0]);
        Ok(Constellation { carrier, whites: Whites::new(), nesting })
    }

    pub fn subdivided(&self) -> SubdividedTree {
        SubdividedTree { base: self.carrier.clone(), whites: self.whites.clone() }
    }

    pub fn is_sphere_free(&self) -> bool {
        self.nesting.is_unit()
    }

    pub fn spheres(&self) -> Vec<Name> {
        self.nesting.dots().cloned().collect()
    }

    /// Elements of the subdivided carrier enclosed by sphere `x`.
    pub fn content(&self, x: &str) -> BTreeSet<Name> {
        self.nesting.descendants(x).into_iter().filter(|n| self.nesting.children(n).is_empty()).collect()
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (e, ws) in &self.whites {
            for w in ws {
                if !self.carrier.contains(e) {
                    out.push(Violation::UnknownEdge { white: w.clone(), edge: e.clone() });
                }
                if self.carrier.contains(w) {
                    out.push(Violation::WhiteClash(w.clone()));
                }
                if !seen.insert(w.clone()) {
                    out.push(Violation::WhiteTwice(w.clone()));
                }
            }
        }
        for l in self.nesting.leaves() {
            if !self.carrier.is_dot(l) {
                out.push(Violation::StrayLeaf(l.clone()));
            }
        }
        for d in self.carrier.dots() {
            if !self.nesting.is_leaf(d) {
                out.push(Violation::MissingLeaf(d.clone()));
            }
        }
        for n in self.nesting.null_dots() {
            if !seen.contains(n) {
                out.push(Violation::StrayNullDot(n.clone()));
            }
        }
        for w in &seen {
            if !self.nesting.is_null_dot(w) {
                out.push(Violation::MissingNullDot(w.clone()));
            }
        }
        if self.nesting.is_unit() && (self.carrier.dot_count() != 1 || !seen.is_empty()) {
            out.push(Violation::SphereFree);
        }
        if !out.is_empty() {
            return out;
        }
        let flat = self.subdivided().flatten();
        for x in self.nesting.dots() {
            if !is_connected_in(&flat, &self.content(x)) {
                out.push(Violation::KernelRule(x.clone()));
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn nesting_tree(&self) -> &Tree {
        &self.nesting
    }

    /// The layer of sphere `x`: its content with each child sphere shrunk to a
    /// dot. Dots are named after the children of `x`; leaves after the carrier
    /// edge leaving the layer.
    pub fn layer_content(&self, x: &str) -> Option<Tree> {
        if !self.nesting.is_dot(x) {
            return None;
        }
        if self.nesting.is_null_dot(x) {
            return Some(Tree::unit(&self.edge_key(x)));
        }
        let k = self.content(x);
        let flat = self.subdivided().flatten();
        let region: BTreeMap<&Name, Name> = k
            .iter()
            .map(|e| {
                let mut cur = e.as_str();
                while self.nesting.parent(cur) != Some(x) {
                    cur = self.nesting.parent(cur).unwrap();
                }
                (e, cur.to_string())
            })
            .collect();
        let root_elem = k.iter().find(|e| flat.parent(e).is_none_or(|p| !k.contains(p))).unwrap();
        let mut raw = vec![RawNode::dot(&region[root_elem], None)];
        let mut placed: BTreeSet<Name> = [region[root_elem].clone()].into();
        let mut stack = vec![root_elem.clone()];
        let mut visited = BTreeSet::new();
        while let Some(m) = stack.pop() {
            if !visited.insert(m.clone()) {
                continue;
            }
            for c in flat.children(&m) {
                if let Some(rc) = region.get(c) {
                    if *rc != region[&m] && placed.insert(rc.clone()) {
                        raw.push(RawNode::dot(rc, Some(&region[&m])));
                    }
                    stack.push(c.clone());
                } else {
                    raw.push(RawNode::leaf(&self.edge_key(c), Some(&region[&m])));
                }
            }
        }
        Some(Tree::from_raw(&raw).expect("layer of a valid constellation"))
    }

    /// The carrier edge an element of the subdivided carrier lies on or above.
    pub fn edge_key(&self, elem: &str) -> Name {
        if self.carrier.contains(elem) {
            return elem.to_string();
        }
        self.whites
            .iter()
            .find(|(_, ws)| ws.iter().any(|w| w == elem))
            .map(|(e, _)| e.clone())
            .expect("element of the subdivided carrier")
    }

    /// The drawn presentation.
    pub fn to_spheres(&self) -> SphereFamily {
        let mut fam = SphereFamily::default();
        if self.nesting.is_unit() {
            return fam;
        }
        let pos: BTreeMap<&Name, (Name, usize)> = self
            .whites
            .iter()
            .flat_map(|(e, ws)| ws.iter().enumerate().map(move |(i, w)| (w, (e.clone(), i))))
            .collect();
        for s in self.nesting.dots() {
            fam.spheres.push(Sphere {
                name: s.clone(),
                parent: self.nesting.parent(s).map(Into::into),
                position: pos.get(s).cloned(),
            });
        }
        for l in self.nesting.leaves() {
            fam.dot_parent.insert(l.clone(), self.nesting.parent(l).unwrap().to_string());
        }
        fam
    }

    /// Read a drawn presentation back into a constellation.
    pub fn from_spheres(carrier: Tree, fam: &SphereFamily) -> Result<Self, SphereError> {
        if fam.spheres.is_empty() {
            if !fam.dot_parent.is_empty() {
                let d = fam.dot_parent.values().next().unwrap();
                return Err(SphereError::Unknown(d.clone()));
            }
            return Constellation::trivial(carrier).map_err(SphereError::Invalid);
        }
        let mut names: BTreeMap<&str, &Sphere> = BTreeMap::new();
        for s in &fam.spheres {
            if carrier.contains(&s.name) || names.insert(&s.name, s).is_some() {
                return Err(SphereError::Duplicate(s.name.clone()));
            }
        }
        let mut has_children: BTreeSet<&str> = BTreeSet::new();
        for s in &fam.spheres {
            if let Some(p) = &s.parent {
                if !names.contains_key(p.as_str()) {
                    return Err(SphereError::Unknown(p.clone()));
                }
                has_children.insert(p);
            }
            if let Some((e, _)) = &s.position {
                if !carrier.contains(e) {
                    return Err(SphereError::Unknown(e.clone()));
                }
            }
        }
        for (d, p) in &fam.dot_parent {
            if !carrier.is_dot(d) {
                return Err(SphereError::Unknown(d.clone()));
            }
            if !names.contains_key(p.as_str()) {
                return Err(SphereError::Unknown(p.clone()));
            }
            has_children.insert(p);
        }
        for d in carrier.dots() {
            if !fam.dot_parent.contains_key(d) {
                return Err(SphereError::MissingOuter);
            }
        }
        let outer: Vec<&Sphere> = fam.spheres.iter().filter(|s| s.parent.is_none()).collect();
        if outer.len() != 1 {
            return Err(SphereError::MissingOuter);
        }
        for s in &fam.spheres {
            let full = has_children.contains(s.name.as_str());
            match (&s.position, full) {
                (Some(_), true) => return Err(SphereError::Crossing(s.name.clone())),
                (None, false) => return Err(SphereError::Empty(s.name.clone())),
                _ => {}
            }
        }
        let mut raw: Vec<RawNode> = fam
            .spheres
            .iter()
            .map(|s| RawNode { name: s.name.clone(), kind: Kind::Dot, parent: s.parent.clone() })
            .collect();
        for (d, p) in &fam.dot_parent {
            raw.push(RawNode::leaf(d, Some(p)));
        }
        let nesting = Tree::from_raw(&raw).map_err(|v| match &v[0] {
            crate::tree::TreeViolation::NotAcyclic(ns) => SphereError::Crossing(ns[0].clone()),
            other => SphereError::Crossing(other.to_string()),
        })?;
        let mut placed: BTreeMap<Name, Vec<(usize, Name)>> = BTreeMap::new();
        for s in &fam.spheres {
            if let Some((e, i)) = &s.position {
                placed.entry(e.clone()).or_default().push((*i, s.name.clone()));
            }
        }
        let whites: Whites = placed
            .into_iter()
            .map(|(e, mut v)| {
                v.sort();
                (e, v.into_iter().map(|(_, n)| n).collect())
            })
            .collect();
        let c = Constellation { carrier, whites, nesting };
        match c.validate().into_iter().next() {
            None => Ok(c),
            Some(Violation::KernelRule(x)) => Err(SphereError::NotSubtree(x)),
            Some(v) => Err(SphereError::Invalid(v)),
        }
    }
}

/// A nesting built during generation, before names are assigned.
#[derive(Clone, Debug)]
enum Item {
    Black(Name),
    White(Name),
    Sphere(Vec<Item>),
}

/// Every constellation on `carrier` whose nesting has at most `max_spheres`
/// dots (null-dots included). White dots and spheres get names from `names`.
/// The result may contain isomorphic duplicates when the carrier has symmetries.
pub fn enumerate_on(carrier: &Tree, max_spheres: usize, names: &mut NameGen) -> Vec<Constellation> {
    let mut out = Vec::new();
    let edges: Vec<Name> = carrier.names().cloned().collect();
    let blacks: Vec<Name> = carrier.dots().cloned().collect();
    if blacks.len() == 1 {
        out.push(Constellation::trivial(carrier.clone()).unwrap());
    }
    if max_spheres == 0 {
        return out;
    }
    for counts in white_counts(edges.len(), max_spheres) {
        let total: usize = counts.iter().sum();
        let mut whites = Whites::new();
        let mut all_whites = Vec::new();
        for (e, &c) in edges.iter().zip(&counts) {
            if c > 0 {
                let ws: Vec<Name> = (0..c).map(|_| names.next().unwrap()).collect();
                all_whites.extend(ws.iter().cloned());
                whites.insert(e.clone(), ws);
            }
        }
        let elems: Vec<Name> = blacks.iter().chain(&all_whites).cloned().collect();
        if elems.is_empty() {
            continue;
        }
        // a lone white can be the outer sphere itself
        if blacks.is_empty() && total == 1 {
            let nesting = Tree::corolla(&all_whites[0], &[]);
            out.push(Constellation { carrier: carrier.clone(), whites: whites.clone(), nesting });
        }
        if total >= max_spheres {
            continue;
        }
        let flat = SubdividedTree { base: carrier.clone(), whites: whites.clone() }.flatten();
        let is_white: BTreeSet<Name> = all_whites.iter().cloned().collect();
        let gen = Gen { flat: &flat, is_white: &is_white, memo: Default::default() };
        for (items, _) in gen.nestings(&elems, max_spheres - 1).iter() {
            let mut raw = Vec::new();
            let outer = names.next().unwrap();
            raw.push(RawNode::dot(&outer, None));
            emit(items, &outer, &mut raw, names);
            let nesting = Tree::from_raw(&raw).expect("generated nesting");
            out.push(Constellation { carrier: carrier.clone(), whites: whites.clone(), nesting });
        }
    }
    out
}

fn emit(items: &[Item], parent: &str, raw: &mut Vec<RawNode>, names: &mut NameGen) {
    for it in items {
        match it {
            Item::Black(b) => raw.push(RawNode::leaf(b, Some(parent))),
            Item::White(w) => raw.push(RawNode::dot(w, Some(parent))),
            Item::Sphere(inner) => {
                let s = names.next().unwrap();
                raw.push(RawNode::dot(&s, Some(parent)));
                emit(inner, &s, raw, names);
            }
        }
    }
}

/// Ways to put at most `max` indistinguishable whites on `n` edges.
fn white_counts(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
        cur[i] = 0;
    }
    rec(0, max, &mut cur, &mut out);
    out
}

type Options = Rc<Vec<(Vec<Item>, usize)>>;

struct Gen<'a> {
    flat: &'a Tree,
    is_white: &'a BTreeSet<Name>,
    memo: RefCell<HashMap<(Vec<Name>, usize), Options>>,
}

impl Gen<'_> {
    /// Children lists for a sphere with content `k`, using at most `budget`
    /// further nesting dots. Returns each option with its cost.
    fn nestings(&self, k: &[Name], budget: usize) -> Options {
        let key = (k.to_vec(), budget);
        if let Some(v) = self.memo.borrow().get(&key) {
            return v.clone();
        }
        let mut out = Vec::new();
        for blocks in self.partitions(k) {
            self.fill(&blocks, 0, budget, Vec::new(), 0, &mut out);
        }
        let out = Rc::new(out);
        self.memo.borrow_mut().insert(key, out.clone());
        out
    }

    fn fill(
        &self,
        blocks: &[Vec<Name>],
        i: usize,
        budget: usize,
        acc: Vec<Item>,
        cost: usize,
        out: &mut Vec<(Vec<Item>, usize)>,
    ) {
        if i == blocks.len() {
            out.push((acc, cost));
            return;
        }
        let b = &blocks[i];
        let left = budget - cost;
        let mut opts: Vec<(Item, usize)> = Vec::new();
        if b.len() == 1 {
            let e = &b[0];
            if self.is_white.contains(e) {
                if left >= 1 {
                    opts.push((Item::White(e.clone()), 1));
                }
            } else {
                opts.push((Item::Black(e.clone()), 0));
            }
        }
        if left >= 1 {
            for (inner, c) in self.nestings(b, left - 1).iter() {
                opts.push((Item::Sphere(inner.clone()), c + 1));
            }
        }
        for (it, c) in opts {
            if c <= left {
                let mut a = acc.clone();
                a.push(it);
                self.fill(blocks, i + 1, budget, a, cost + c, out);
            }
        }
    }

    /// Partitions of `k` into connected blocks.
    fn partitions(&self, k: &[Name]) -> Vec<Vec<Vec<Name>>> {
        if k.is_empty() {
            return vec![vec![]];
        }
        let first = &k[0];
        let rest = &k[1..];
        let mut out = Vec::new();
        for mask in 0u32..(1 << rest.len()) {
            let block: Vec<Name> = std::iter::once(first.clone())
                .chain(rest.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x.clone()))
                .collect();
            let set: BTreeSet<Name> = block.iter().cloned().collect();
            if !is_connected_in(self.flat, &set) {
                continue;
            }
            let remaining: Vec<Name> =
                rest.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, x)| x.clone()).collect();
            for mut p in self.partitions(&remaining) {
                p.insert(0, block.clone());
                out.push(p);
            }
        }
        out
    }
}
