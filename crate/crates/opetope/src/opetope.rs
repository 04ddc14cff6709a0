//! Zoom complexes and opetopes.
//!
//! A complex of degree `n` is stored as the trees `G(-1), G(0), ..., G(n)`
//! together with the white dots of each constellation. Constellation `X(k)`
//! has carrier `G(k-1)`, nesting `G(k)` and white dots `W(k)` on edges of
//! `G(k-1)`. Consecutive constellations share their middle tree, and the
//! zoom bijections are identity on names.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::constellation::{Constellation, Violation};
use crate::tree::{Name, NameGen, Tree, Whites};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZoomComplex {
    /// `trees[k + 1]` is `G(k)`
    pub(crate) trees: Vec<Tree>,
    /// `whites[k]` belongs to `X(k)`
    pub(crate) whites: Vec<Whites>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ZoomViolation {
    #[error("a complex needs at least one constellation")]
    Empty,
    #[error("constellation {level}: {violation}")]
    Level { level: usize, violation: Violation },
    #[error("constellations {0} and {1} are not in zoom relation")]
    NotZoom(usize, usize),
    #[error("initial condition: {0}")]
    Initial(String),
    #[error("name `{0}` is used at two levels")]
    Reused(Name),
}

impl ZoomComplex {
    pub fn from_parts(trees: Vec<Tree>, whites: Vec<Whites>) -> Result<Self, Vec<ZoomViolation>> {
        if whites.is_empty() || trees.len() != whites.len() + 1 {
            return Err(vec![ZoomViolation::Empty]);
        }
        let z = ZoomComplex { trees, whites };
        let v = z.validate();
        if v.is_empty() {
            Ok(z)
        } else {
            Err(v)
        }
    }

    /// Chain constellations whose nestings match the next carriers exactly.
    pub fn from_constellations(cs: Vec<Constellation>) -> Result<Self, Vec<ZoomViolation>> {
        if cs.is_empty() {
            return Err(vec![ZoomViolation::Empty]);
        }
        for i in 1..cs.len() {
            if cs[i - 1].nesting != cs[i].carrier {
                return Err(vec![ZoomViolation::NotZoom(i - 1, i)]);
            }
        }
        let mut trees = vec![cs[0].carrier.clone()];
        let mut whites = Vec::new();
        for c in cs {
            trees.push(c.nesting);
            whites.push(c.whites);
        }
        ZoomComplex::from_parts(trees, whites)
    }

    pub fn degree(&self) -> usize {
        self.whites.len() - 1
    }

    pub fn constellation(&self, k: usize) -> Constellation {
        Constellation { carrier: self.trees[k].clone(), whites: self.whites[k].clone(), nesting: self.trees[k + 1].clone() }
    }

    pub fn constellations(&self) -> Vec<Constellation> {
        (0..=self.degree()).map(|k| self.constellation(k)).collect()
    }

    /// `G(k)`, the nesting of `X(k)`.
    pub fn nesting(&self, k: usize) -> &Tree {
        &self.trees[k + 1]
    }

    /// `G(k-1)`, the carrier of `X(k)`.
    pub fn carrier(&self, k: usize) -> &Tree {
        &self.trees[k]
    }

    pub fn whites(&self, k: usize) -> &Whites {
        &self.whites[k]
    }

    pub fn top(&self) -> &Tree {
        self.trees.last().unwrap()
    }

    pub fn validate(&self) -> Vec<ZoomViolation> {
        let mut out = Vec::new();
        for k in 0..=self.degree() {
            for v in self.constellation(k).validate() {
                out.push(ZoomViolation::Level { level: k, violation: v });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Keep `X(0)..X(k)`.
    pub fn truncate(&self, k: usize) -> ZoomComplex {
        ZoomComplex { trees: self.trees[..k + 2].to_vec(), whites: self.whites[..k + 1].to_vec() }
    }

    /// Every name used anywhere in the complex.
    pub fn all_names(&self) -> BTreeSet<Name> {
        self.trees.iter().flat_map(|t| t.names().cloned()).collect()
    }

    /// All isomorphisms `a -> b`, each given as one name map per tree.
    pub fn isomorphisms(a: &ZoomComplex, b: &ZoomComplex) -> Vec<Vec<BTreeMap<Name, Name>>> {
        if a.trees.len() != b.trees.len() {
            return vec![];
        }
        let mut out = Vec::new();
        'outer: for base in Tree::all_isomorphisms(&a.trees[0], &b.trees[0]) {
            let mut maps = vec![base];
            for j in 1..a.trees.len() {
                match extend_iso(a, b, j, &maps[j - 1]) {
                    Some(m) => maps.push(m),
                    None => continue 'outer,
                }
            }
            out.push(maps);
        }
        out
    }

    pub fn automorphisms(&self) -> Vec<Vec<BTreeMap<Name, Name>>> {
        ZoomComplex::isomorphisms(self, self)
    }
}

/// Extend an isomorphism of `trees[j-1]` to `trees[j]`, if possible.
fn extend_iso(a: &ZoomComplex, b: &ZoomComplex, j: usize, prev: &BTreeMap<Name, Name>) -> Option<BTreeMap<Name, Name>> {
    let (ta, tb) = (&a.trees[j], &b.trees[j]);
    let (wa, wb) = (&a.whites[j - 1], &b.whites[j - 1]);
    if ta.len() != tb.len() {
        return None;
    }
    let mut m: BTreeMap<Name, Name> = BTreeMap::new();
    for x in ta.preorder().into_iter().rev() {
        let y = if ta.is_leaf(&x) {
            let y = prev.get(&x)?.clone();
            if !tb.is_leaf(&y) {
                return None;
            }
            y
        } else if ta.is_null_dot(&x) {
            let (e, i) = wa.iter().find_map(|(e, ws)| ws.iter().position(|w| *w == x).map(|i| (e, i)))?;
            let y = wb.get(prev.get(e)?)?.get(i)?.clone();
            if wa[e].len() != wb[&prev[e]].len() || !tb.is_null_dot(&y) {
                return None;
            }
            y
        } else {
            let kids = ta.children(&x);
            let y = tb.parent(&m[&kids[0]])?.to_string();
            if kids.iter().any(|c| tb.parent(&m[c]) != Some(y.as_str())) || tb.children(&y).len() != kids.len() {
                return None;
            }
            y
        };
        m.insert(x, y);
    }
    if m[ta.root()] != tb.root() {
        return None;
    }
    let image: BTreeSet<&Name> = m.values().collect();
    (image.len() == m.len()).then_some(m)
}

/// Canonical per-level description of a complex: equal keys iff isomorphic
/// (for complexes whose bottom tree is a one-leaf corolla, which covers all
/// opetopes and their faces).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonKey(Vec<Key>);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    Leaf(usize),
    Null(usize, usize),
    Inner(Vec<Key>),
}

/// Canonical ranks of the nodes of every tree.
fn canonical_ranks(z: &ZoomComplex) -> (Vec<Key>, Vec<BTreeMap<Name, usize>>) {
    let mut roots = Vec::new();
    let mut ranks: Vec<BTreeMap<Name, usize>> = Vec::new();
    for j in 0..z.trees.len() {
        let t = &z.trees[j];
        let mut keys: BTreeMap<Name, Key> = BTreeMap::new();
        for x in t.preorder().into_iter().rev() {
            let k = if t.is_leaf(&x) {
                Key::Leaf(if j == 0 { 0 } else { ranks[j - 1][&x] })
            } else if t.is_null_dot(&x) && j > 0 {
                let (e, i) = z.whites[j - 1]
                    .iter()
                    .find_map(|(e, ws)| ws.iter().position(|w| *w == x).map(|i| (e, i)))
                    .expect("null-dot has a white position");
                Key::Null(ranks[j - 1][e], i)
            } else {
                let mut cs: Vec<Key> = t.children(&x).iter().map(|c| keys[c].clone()).collect();
                cs.sort();
                Key::Inner(cs)
            };
            keys.insert(x, k);
        }
        roots.push(keys[t.root()].clone());
        let mut order: Vec<(&Key, &Name)> = keys.iter().map(|(n, k)| (k, n)).collect();
        order.sort();
        ranks.push(order.into_iter().enumerate().map(|(i, (_, n))| (n.clone(), i)).collect());
    }
    (roots, ranks)
}

impl ZoomComplex {
    pub fn canonical_key(&self) -> CanonKey {
        CanonKey(canonical_ranks(self).0)
    }

    /// A renamed copy whose names depend only on the isomorphism class.
    pub fn canonical(&self) -> ZoomComplex {
        let (_, ranks) = canonical_ranks(self);
        let mut names: Vec<BTreeMap<Name, Name>> = Vec::new();
        for (j, t) in self.trees.iter().enumerate() {
            let mut dots: Vec<(usize, &Name)> = t.dots().map(|d| (ranks[j][d], d)).collect();
            dots.sort();
            let mut m: BTreeMap<Name, Name> = BTreeMap::new();
            for (i, (_, d)) in dots.into_iter().enumerate() {
                let new = if j == 0 { "p".to_string() } else { format!("{}.{}", j - 1, i) };
                m.insert(d.clone(), if j == 0 && i > 0 { format!("p{i}") } else { new });
            }
            if j == 0 {
                for (i, l) in t.leaves().enumerate() {
                    m.insert(l.clone(), if i == 0 { "in".into() } else { format!("in{i}") });
                }
            } else {
                for l in t.leaves() {
                    m.insert(l.clone(), names[j - 1][l].clone());
                }
            }
            names.push(m);
        }
        let trees = self.trees.iter().zip(&names).map(|(t, m)| rename_tree(t, m)).collect();
        let whites = self
            .whites
            .iter()
            .enumerate()
            .map(|(k, w)| {
                w.iter()
                    .map(|(e, ws)| (names[k][e].clone(), ws.iter().map(|x| names[k + 1][x].clone()).collect()))
                    .collect()
            })
            .collect();
        ZoomComplex { trees, whites }
    }
}

pub(crate) fn rename_tree(t: &Tree, m: &BTreeMap<Name, Name>) -> Tree {
    let raw: Vec<_> = t
        .to_raw()
        .into_iter()
        .map(|mut r| {
            r.name = m[&r.name].clone();
            r.parent = r.parent.map(|p| m[&p].clone());
            r
        })
        .collect();
    Tree::from_raw(&raw).expect("renaming is injective")
}

/// A valid zoom complex with the initial condition of an opetope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Opetope(pub(crate) ZoomComplex);

/// Reserved name of the leaf of the bottom tree when it is generated.
pub const BOTTOM_LEAF: &str = "in";

pub fn validate_opetope(z: &ZoomComplex) -> Vec<ZoomViolation> {
    let mut out = z.validate();
    let one_one = |t: &Tree| t.dot_count() == 1 && t.leaf_count() == 1;
    let init = |m: &str| ZoomViolation::Initial(m.to_string());
    if !one_one(&z.trees[0]) {
        out.push(init("X0 must have one dot and one leaf"));
    }
    if !one_one(&z.trees[1]) || !z.whites[0].is_empty() {
        out.push(init("X0 must have exactly one sphere"));
    }
    if z.degree() >= 1 && (!one_one(&z.trees[2]) || !z.whites[1].is_empty()) {
        out.push(init("X1 must have exactly one sphere"));
    }
    if z.degree() >= 2 && !z.trees[3].is_linear() {
        out.push(init("X2 must have linearly nested spheres"));
    }
    let mut seen: BTreeMap<&Name, usize> = BTreeMap::new();
    for (j, t) in z.trees.iter().enumerate() {
        for d in t.dots() {
            if let Some(prev) = seen.insert(d, j) {
                if prev != j {
                    out.push(ZoomViolation::Reused(d.clone()));
                }
            }
        }
    }
    out
}

impl Opetope {
    pub fn new(z: ZoomComplex) -> Result<Opetope, Vec<ZoomViolation>> {
        let v = validate_opetope(&z);
        if v.is_empty() {
            Ok(Opetope(z))
        } else {
            Err(v)
        }
    }

    /// Build from nestings `G(0)..G(n)` and the white dots of `X(1)..X(n)`.
    /// The bottom tree is generated: one dot named after the leaf of `G(0)`.
    pub fn from_nestings(nestings: Vec<Tree>, whites: Vec<Whites>) -> Result<Opetope, Vec<ZoomViolation>> {
        if nestings.is_empty() || whites.len() + 1 != nestings.len() {
            return Err(vec![ZoomViolation::Empty]);
        }
        let g0 = &nestings[0];
        let leaves: Vec<&Name> = g0.leaves().collect();
        if leaves.len() != 1 || g0.dot_count() != 1 {
            return Err(vec![ZoomViolation::Initial("X0 must have one dot and one leaf".into())]);
        }
        let mut gen = NameGen::new(BOTTOM_LEAF, nestings.iter().flat_map(|t| t.names()));
        let leaf = gen.fresh_like(BOTTOM_LEAF);
        let bottom = Tree::corolla(leaves[0], &[&leaf]);
        let mut trees = vec![bottom];
        trees.extend(nestings);
        let mut ws = vec![Whites::new()];
        ws.extend(whites);
        Opetope::new(ZoomComplex { trees, whites: ws })
    }

    pub fn point() -> Opetope {
        Opetope::from_nestings(vec![Tree::corolla("0.0", &["p"])], vec![]).unwrap()
    }

    pub fn arrow() -> Opetope {
        Opetope::from_nestings(vec![Tree::corolla("0.0", &["p"]), Tree::corolla("1.0", &["0.0"])], vec![Whites::new()])
            .unwrap()
    }

    /// The 2-opetope with `m` nested spheres around one dot.
    pub fn linear(m: usize) -> Opetope {
        let mut raw = Vec::new();
        for i in 0..m {
            let parent = (i > 0).then(|| format!("2.{}", i - 1));
            raw.push(crate::tree::RawNode::dot(&format!("2.{i}"), parent.as_deref()));
        }
        let last = (m > 0).then(|| format!("2.{}", m - 1));
        raw.push(crate::tree::RawNode::leaf("1.0", last.as_deref()));
        let g2 = Tree::from_raw(&raw).unwrap();
        Opetope::from_nestings(
            vec![Tree::corolla("0.0", &["p"]), Tree::corolla("1.0", &["0.0"]), g2],
            vec![Whites::new(), Whites::new()],
        )
        .unwrap()
    }

    pub fn complex(&self) -> &ZoomComplex {
        &self.0
    }

    pub fn into_complex(self) -> ZoomComplex {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.degree()
    }

    /// Nesting tree of the top constellation.
    pub fn composition_tree(&self) -> &Tree {
        self.0.top()
    }

    pub fn canonical_key(&self) -> CanonKey {
        self.0.canonical_key()
    }

    pub fn canonical(&self) -> Opetope {
        Opetope(self.0.canonical())
    }

    pub fn equals(&self, other: &Opetope) -> bool {
        self.canonical_key() == other.canonical_key()
    }

    pub fn is_glob(&self) -> bool {
        self.0.top().dot_count() == 1
    }

    pub fn is_drop(&self) -> bool {
        self.dim() >= 2 && self.0.top().is_unit()
    }

    pub fn suspend(&self) -> Opetope {
        let z = &self.0;
        let old_leaf = z.trees[0].leaves().next().unwrap().clone();
        let mut gen = NameGen::new(BOTTOM_LEAF, &z.all_names());
        let leaf = gen.fresh_like(BOTTOM_LEAF);
        let mut trees = vec![Tree::corolla(&old_leaf, &[&leaf])];
        trees.extend(z.trees.iter().cloned());
        let mut whites = vec![Whites::new()];
        whites.extend(z.whites.iter().cloned());
        Opetope::new(ZoomComplex { trees, whites }).expect("suspension of an opetope")
    }

    /// Drop the bottom constellation while the rest is still an opetope.
    pub fn stable_representative(&self) -> Opetope {
        let mut cur = self.clone();
        while let Some(d) = cur.desuspend() {
            cur = d;
        }
        cur
    }

    pub fn desuspend(&self) -> Option<Opetope> {
        if self.dim() == 0 {
            return None;
        }
        let z = ZoomComplex { trees: self.0.trees[1..].to_vec(), whites: self.0.whites[1..].to_vec() };
        Opetope::new(z).ok()
    }
}

impl fmt::Display for Opetope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.0.constellations().iter().enumerate() {
            write!(f, "X{k}: {}", c.nesting)?;
            for (e, ws) in &c.whites {
                write!(f, " [{e}: {}]", ws.join(" "))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// The glob whose target is `f`: one sphere around the whole top nesting of `f`.
pub fn glob_over(f: &Opetope) -> Opetope {
    let z = &f.0;
    let mut gen = NameGen::new("g", &z.all_names());
    let g = gen.fresh_like(&format!("{}.glob", z.degree() + 1));
    let top = z.top();
    let mut whites = Whites::new();
    let nesting = if top.is_unit() {
        whites.insert(top.root().to_string(), vec![g.clone()]);
        Tree::corolla(&g, &[])
    } else {
        let dots: Vec<&str> = top.dots().map(String::as_str).collect();
        Tree::corolla(&g, &dots)
    };
    let mut trees = z.trees.clone();
    trees.push(nesting);
    let mut ws = z.whites.clone();
    ws.push(whites);
    Opetope::new(ZoomComplex { trees, whites: ws }).expect("glob is valid")
}

/// The drop whose target is the glob over `g`.
pub fn drop_over(g: &Opetope) -> Opetope {
    let glob = glob_over(g);
    let sphere = glob.0.top().root().to_string();
    let mut z = glob.0;
    z.trees.push(Tree::unit(&sphere));
    z.whites.push(Whites::new());
    Opetope::new(z).expect("drop is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn t(s: &str) -> Tree {
        Tree::from_term(s).unwrap()
    }

    #[test]
    fn small_opetopes_are_valid() {
        assert_eq!(Opetope::point().dim(), 0);
        assert_eq!(Opetope::arrow().dim(), 1);
        for m in 0..4 {
            let l = Opetope::linear(m);
            assert_eq!(l.dim(), 2);
            assert_eq!(l.composition_tree().dot_count(), m);
        }
        assert!(Opetope::linear(0).is_drop());
        assert!(Opetope::linear(1).is_glob());
    }

    #[test]
    fn renaming_keeps_equality() {
        let x = fixtures::five_cell();
        let c = x.canonical();
        assert!(c.equals(&x));
        assert_ne!(c.complex(), x.complex());
        assert_eq!(c.canonical().complex(), c.complex());
        assert!(!x.equals(&Opetope::linear(2)));
        assert!(!Opetope::linear(2).equals(&Opetope::linear(3)));
    }

    #[test]
    fn globs_and_drops() {
        let a = Opetope::arrow();
        assert!(glob_over(&a).equals(&Opetope::linear(1)));
        assert!(drop_over(&Opetope::point()).equals(&Opetope::linear(0)));
        let d = drop_over(&Opetope::linear(2));
        assert!(d.is_drop());
        assert_eq!(d.dim(), 4);
        let g = glob_over(&Opetope::linear(0));
        assert!(g.is_glob());
        assert_eq!(g.complex().top().null_dots().count(), 1);
    }

    #[test]
    fn suspension() {
        assert!(Opetope::point().suspend().equals(&Opetope::arrow()));
        assert!(Opetope::arrow().suspend().equals(&glob_over(&Opetope::arrow())));
        let x = fixtures::five_cell();
        assert_eq!(x.suspend().dim(), 6);
        assert!(x.suspend().desuspend().unwrap().equals(&x));
        assert!(x.suspend().suspend().stable_representative().equals(&x));
        assert!(Opetope::arrow().stable_representative().equals(&Opetope::point()));
        assert!(x.desuspend().is_none());
        assert_eq!(Opetope::linear(3).stable_representative().dim(), 2);
    }

    #[test]
    fn two_branch_automorphism() {
        let z = fixtures::two_branch();
        assert!(z.is_valid());
        assert_eq!(z.automorphisms().len(), 2);
        assert!(Opetope::new(z).is_err());
        assert_eq!(fixtures::five_cell().complex().automorphisms().len(), 1);
    }

    #[test]
    fn initial_conditions() {
        let three = Opetope::from_nestings(
            vec![t("a(p)"), t("b(a)"), t("c(d(b))"), t("e(c d)")],
            vec![Whites::new(), Whites::new(), Whites::new()],
        );
        assert!(three.is_ok(), "{three:?}");
        let branching = ZoomComplex::from_parts(
            vec![t("r(in)"), t("a(r)"), t("b(a)"), t("c(b)"), t("e(c)")],
            vec![Whites::new(), Whites::new(), Whites::new(), Whites::new()],
        )
        .unwrap();
        assert!(Opetope::new(branching).is_ok());
        let reused = Opetope::from_nestings(vec![t("a(p)"), t("b(a)"), t("a(b)")], vec![Whites::new(), Whites::new()]);
        assert!(reused.is_err());
    }

    #[test]
    fn canonical_round_trip_of_constellations() {
        let x = fixtures::five_cell().into_complex();
        let back = ZoomComplex::from_constellations(x.constellations()).unwrap();
        assert_eq!(back, x);
        assert_eq!(x.truncate(2).degree(), 2);
    }
}
