//! Polynomial functors and monads over finite index sets, trees decorated by
//! them, and the Baez-Dolan construction.
//!
//! Infinite sets are truncated: every monad here carries a finite set of
//! operations and partial composition returns `None` when the result falls
//! outside it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::calculus::{compose_recipe, CalcError, Recipe};
use crate::constellation::{enumerate_on, Constellation};
use crate::opetope::{drop_over, Opetope};
use crate::tree::{enumerate_trees, Name, NameGen, RawNode, SubdividedTree, Tree, Whites};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("index mismatch: {0} input types against {1} output types")]
    IndexMismatch(usize, usize),
    #[error("map is not total: {0}")]
    NotTotal(String),
    #[error("outside the truncation: {0}")]
    OutOfBound(String),
    #[error(transparent)]
    Calc(#[from] CalcError),
}

/// `I <- E -> B -> J` with `E` stored as one explicit fibre per operation:
/// `fibres[b]` lists `s(e)` for the inputs `e` of `b` in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyFunctor {
    pub in_types: usize,
    pub out_types: usize,
    pub fibres: Vec<Vec<usize>>,
    pub target: Vec<usize>,
}

/// An operation with its inputs filled by elements of a typed set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bouquet {
    pub op: usize,
    pub inputs: Vec<usize>,
}

impl PolyFunctor {
    pub fn new(in_types: usize, out_types: usize, fibres: Vec<Vec<usize>>, target: Vec<usize>) -> Result<Self, PolyError> {
        if fibres.len() != target.len() {
            return Err(PolyError::NotTotal("t must be defined on every operation".into()));
        }
        if let Some(t) = target.iter().find(|t| **t >= out_types) {
            return Err(PolyError::NotTotal(format!("target {t} is not an output type")));
        }
        if let Some(s) = fibres.iter().flatten().find(|s| **s >= in_types) {
            return Err(PolyError::NotTotal(format!("source {s} is not an input type")));
        }
        Ok(PolyFunctor { in_types, out_types, fibres, target })
    }

    /// One type, one unary operation.
    pub fn identity() -> Self {
        PolyFunctor { in_types: 1, out_types: 1, fibres: vec![vec![0]], target: vec![0] }
    }

    /// One type, an operation of each arity up to `max_arity`.
    pub fn free_monoid(max_arity: usize) -> Self {
        PolyFunctor { in_types: 1, out_types: 1, fibres: (0..=max_arity).map(|n| vec![0; n]).collect(), target: vec![0; max_arity + 1] }
    }

    pub fn ops(&self) -> usize {
        self.fibres.len()
    }

    pub fn arity(&self, b: usize) -> usize {
        self.fibres[b].len()
    }

    /// Bouquets over `x`, where `x[k]` is the type of element `k`.
    pub fn evaluate(&self, x: &[usize]) -> Vec<Bouquet> {
        let mut out = Vec::new();
        for (b, fib) in self.fibres.iter().enumerate() {
            let choices: Vec<Vec<usize>> =
                fib.iter().map(|s| (0..x.len()).filter(|k| x[*k] == *s).collect()).collect();
            for inputs in product(&choices) {
                out.push(Bouquet { op: b, inputs });
            }
        }
        out
    }

    /// Output type of a bouquet.
    pub fn output(&self, b: &Bouquet) -> usize {
        self.target[b.op]
    }

    /// Bouquets of bouquets: `self` on top, `q` feeding its inputs.
    pub fn compose(&self, q: &PolyFunctor) -> Result<Composed, PolyError> {
        if self.in_types != q.out_types {
            return Err(PolyError::IndexMismatch(self.in_types, q.out_types));
        }
        let mut two_level = Vec::new();
        let mut fibres = Vec::new();
        let mut target = Vec::new();
        for (b, fib) in self.fibres.iter().enumerate() {
            let choices: Vec<Vec<usize>> = fib.iter().map(|s| (0..q.ops()).filter(|c| q.target[*c] == *s).collect()).collect();
            for cs in product(&choices) {
                fibres.push(cs.iter().flat_map(|c| q.fibres[*c].iter().copied()).collect());
                target.push(self.target[b]);
                two_level.push((b, cs));
            }
        }
        Ok(Composed { functor: PolyFunctor { in_types: q.in_types, out_types: self.out_types, fibres, target }, two_level })
    }

    /// Equal up to renumbering the operations.
    pub fn is_isomorphic(&self, other: &PolyFunctor) -> bool {
        let key = |p: &PolyFunctor| {
            let mut v: Vec<(usize, Vec<usize>)> = p.target.iter().copied().zip(p.fibres.iter().cloned()).collect();
            v.sort();
            v
        };
        self.in_types == other.in_types && self.out_types == other.out_types && key(self) == key(other)
    }
}

fn product(choices: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for c in choices {
        out = out.into_iter().flat_map(|pre| c.iter().map(move |x| [pre.clone(), vec![*x]].concat())).collect();
    }
    out
}

#[derive(Clone, Debug)]
pub struct Composed {
    pub functor: PolyFunctor,
    /// `(b, c_e for each input e of b)` for each operation of the composite
    pub two_level: Vec<(usize, Vec<usize>)>,
}

/// Where an input of a composite operation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    /// input of the outer operation
    Outer(usize),
    /// input of the operation substituted in
    Inner(usize),
}

/// A polynomial monad with `I = J`, given by units and partial composition.
pub trait Monad: Send + Sync {
    fn functor(&self) -> &PolyFunctor;
    fn unit(&self, i: usize) -> usize;
    /// Substitute `c` into input `e` of `b`, listing the inputs of the result
    /// by origin. `None` when types clash or the result is out of bounds.
    fn substitute(&self, b: usize, e: usize, c: usize) -> Option<(usize, Vec<Slot>)>;
}

fn spliced(n: usize, e: usize, m: usize) -> Vec<Slot> {
    (0..e).map(Slot::Outer).chain((0..m).map(Slot::Inner)).chain((e + 1..n).map(Slot::Outer)).collect()
}

pub struct IdentityMonad {
    functor: PolyFunctor,
}

impl Default for IdentityMonad {
    fn default() -> Self {
        IdentityMonad { functor: PolyFunctor::identity() }
    }
}

impl Monad for IdentityMonad {
    fn functor(&self) -> &PolyFunctor {
        &self.functor
    }
    fn unit(&self, _: usize) -> usize {
        0
    }
    fn substitute(&self, b: usize, e: usize, c: usize) -> Option<(usize, Vec<Slot>)> {
        (b == 0 && e == 0 && c == 0).then(|| (0, vec![Slot::Inner(0)]))
    }
}

/// Lists with concatenation, arities capped.
pub struct FreeMonoid {
    functor: PolyFunctor,
}

impl FreeMonoid {
    pub fn new(max_arity: usize) -> Self {
        FreeMonoid { functor: PolyFunctor::free_monoid(max_arity) }
    }
}

impl Monad for FreeMonoid {
    fn functor(&self) -> &PolyFunctor {
        &self.functor
    }
    fn unit(&self, _: usize) -> usize {
        1
    }
    fn substitute(&self, b: usize, e: usize, c: usize) -> Option<(usize, Vec<Slot>)> {
        if e >= b || c >= self.functor.ops() {
            return None;
        }
        let r = b - 1 + c;
        (r < self.functor.ops()).then(|| (r, spliced(b, e, c)))
    }
}

/// A monad whose composition has two outputs swapped; used to show the law
/// checker finds faults.
pub struct Swapped<M> {
    pub inner: M,
    pub a: usize,
    pub b: usize,
}

impl<M: Monad> Monad for Swapped<M> {
    fn functor(&self) -> &PolyFunctor {
        self.inner.functor()
    }
    fn unit(&self, i: usize) -> usize {
        self.inner.unit(i)
    }
    fn substitute(&self, b: usize, e: usize, c: usize) -> Option<(usize, Vec<Slot>)> {
        let (r, s) = self.inner.substitute(b, e, c)?;
        let r = if r == self.a {
            self.b
        } else if r == self.b {
            self.a
        } else {
            r
        };
        Some((r, s))
    }
}

/// First failure found by [`check_monad_laws`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample(pub String);

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Unit and associativity laws over all operations with index below `limit`.
pub fn check_monad_laws(m: &dyn Monad, limit: usize) -> Result<(), Counterexample> {
    let f = m.functor();
    let ops = f.ops().min(limit);
    let fail = |s: String| Err(Counterexample(s));
    for b in 0..ops {
        let n = f.arity(b);
        let id: Vec<Slot> = (0..n).map(Slot::Inner).collect();
        match m.substitute(m.unit(f.target[b]), 0, b) {
            Some((r, s)) if r == b && s == id => {}
            other => return fail(format!("left unit fails at {b}: {other:?}")),
        }
        for e in 0..n {
            let id = spliced(n, e, 1);
            match m.substitute(b, e, m.unit(f.fibres[b][e])) {
                Some((r, s)) if r == b && s == id => {}
                other => return fail(format!("right unit fails at {b}, input {e}: {other:?}")),
            }
        }
    }
    for b in 0..ops {
        for e in 0..f.arity(b) {
            for c in (0..ops).filter(|c| f.target[*c] == f.fibres[b][e]) {
                let Some((bc, s1)) = m.substitute(b, e, c) else { continue };
                if f.target[bc] != f.target[b] {
                    return fail(format!("{b} o_{e} {c} changes the output type"));
                }
                for (k, sl) in s1.iter().enumerate() {
                    let want = match sl {
                        Slot::Outer(j) => f.fibres[b][*j],
                        Slot::Inner(j) => f.fibres[c][*j],
                    };
                    if f.fibres[bc][k] != want {
                        return fail(format!("{b} o_{e} {c} mistypes input {k}"));
                    }
                }
                for (k, sl) in s1.iter().enumerate() {
                    for d in (0..ops).filter(|d| f.target[*d] == f.fibres[bc][k]) {
                        let Some((lhs, sl_l)) = m.substitute(bc, k, d) else { continue };
                        let left: Vec<(u8, usize)> = sl_l
                            .iter()
                            .map(|x| match *x {
                                Slot::Inner(i) => (2, i),
                                Slot::Outer(o) => match s1[o] {
                                    Slot::Outer(j) => (0, j),
                                    Slot::Inner(j) => (1, j),
                                },
                            })
                            .collect();
                        let right = match *sl {
                            // d lands on c
                            Slot::Inner(j) => m.substitute(c, j, d).and_then(|(cd, s2)| {
                                let (r, s3) = m.substitute(b, e, cd)?;
                                let o = s3
                                    .iter()
                                    .map(|x| match *x {
                                        Slot::Outer(o) => (0, o),
                                        Slot::Inner(i) => match s2[i] {
                                            Slot::Outer(q) => (1, q),
                                            Slot::Inner(q) => (2, q),
                                        },
                                    })
                                    .collect::<Vec<_>>();
                                Some((r, o))
                            }),
                            // d lands beside c
                            Slot::Outer(j) => m.substitute(b, j, d).and_then(|(bd, s2)| {
                                let pos = s2.iter().position(|x| *x == Slot::Outer(e))?;
                                let (r, s3) = m.substitute(bd, pos, c)?;
                                let o = s3
                                    .iter()
                                    .map(|x| match *x {
                                        Slot::Inner(i) => (1, i),
                                        Slot::Outer(o) => match s2[o] {
                                            Slot::Outer(q) => (0, q),
                                            Slot::Inner(q) => (2, q),
                                        },
                                    })
                                    .collect::<Vec<_>>();
                                Some((r, o))
                            }),
                        };
                        // the other bracketing may leave the truncation
                        let Some((r, right)) = right else { continue };
                        if r != lhs {
                            return fail(format!("associativity fails: ({b} o_{e} {c}) o_{k} {d} = {lhs}, other bracketing {r}"));
                        }
                        if left != right {
                            return fail(format!("associativity permutes inputs at ({b} o_{e} {c}) o_{k} {d}"));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// A tree decorated by a polynomial functor. Children follow the fibre order
/// of their parent's operation, so derived equality is isomorphism.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PTree {
    /// an edge of the given type with nothing on it
    Leaf(usize),
    Node(usize, Vec<PTree>),
}

impl PTree {
    pub fn dots(&self) -> usize {
        match self {
            PTree::Leaf(_) => 0,
            PTree::Node(_, k) => 1 + k.iter().map(PTree::dots).sum::<usize>(),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, PTree::Leaf(_))
    }

    pub fn root_type(&self, f: &PolyFunctor) -> usize {
        match self {
            PTree::Leaf(i) => *i,
            PTree::Node(b, _) => f.target[*b],
        }
    }

    /// Incoming edges carry the source types of the fibre they plug into.
    pub fn is_well_typed(&self, f: &PolyFunctor) -> bool {
        match self {
            PTree::Leaf(i) => *i < f.in_types,
            PTree::Node(b, kids) => {
                *b < f.ops()
                    && kids.len() == f.arity(*b)
                    && kids.iter().zip(&f.fibres[*b]).all(|(k, s)| k.root_type(f) == *s && k.is_well_typed(f))
            }
        }
    }

    /// Decorations of the dots in preorder.
    pub fn dot_decorations(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk(&mut |t| {
            if let PTree::Node(b, _) = t {
                out.push(*b);
            }
        });
        out
    }

    fn walk(&self, f: &mut dyn FnMut(&PTree)) {
        f(self);
        if let PTree::Node(_, k) = self {
            for c in k {
                c.walk(f);
            }
        }
    }

    /// The subtree at a path of child indices.
    pub fn at(&self, path: &[usize]) -> &PTree {
        match (self, path.split_first()) {
            (_, None) => self,
            (PTree::Node(_, k), Some((h, rest))) => k[*h].at(rest),
            (PTree::Leaf(_), Some(_)) => panic!("path runs past a leaf"),
        }
    }

    /// The underlying tree: dots `d<k>` in preorder, leaves `l<k>`.
    pub fn shape(&self) -> Tree {
        let mut raw = Vec::new();
        let (mut d, mut l) = (0, 0);
        fn go(t: &PTree, parent: Option<&str>, raw: &mut Vec<RawNode>, d: &mut usize, l: &mut usize) {
            match t {
                PTree::Leaf(_) => {
                    raw.push(RawNode::leaf(&format!("l{l}"), parent));
                    *l += 1;
                }
                PTree::Node(_, kids) => {
                    let name = format!("d{d}");
                    *d += 1;
                    raw.push(RawNode::dot(&name, parent));
                    for k in kids {
                        go(k, Some(&name), raw, d, l);
                    }
                }
            }
        }
        go(self, None, &mut raw, &mut d, &mut l);
        Tree::from_raw(&raw).expect("tree shape")
    }
}

/// All P-trees with at most `max_dots` dots, unit trees included.
pub fn p_trees(f: &PolyFunctor, max_dots: usize) -> Vec<PTree> {
    p_trees_bounded(f, max_dots, usize::MAX)
}

/// P-trees with at most `max_dots` dots and `max_leaves` leaves.
pub fn p_trees_bounded(f: &PolyFunctor, max_dots: usize, max_leaves: usize) -> Vec<PTree> {
    // a tree with d dots has at most the sum of d arities as leaves
    let widest = (0..f.ops()).map(|b| f.arity(b)).max().unwrap_or(0);
    let max_leaves = max_leaves.min(1 + max_dots * widest);
    let mut g = Gen { f, memo: HashMap::new() };
    let mut out = Vec::new();
    for i in 0..f.out_types.max(f.in_types) {
        for d in 0..=max_dots {
            for l in 0..=max_leaves {
                out.extend(g.trees(i, d, l).iter().cloned());
            }
        }
    }
    out.sort();
    out
}

struct Gen<'a> {
    f: &'a PolyFunctor,
    memo: HashMap<(usize, usize, usize), std::rc::Rc<Vec<PTree>>>,
}

impl Gen<'_> {
    /// Trees rooted at type `i` with exactly `d` dots and `l` leaves.
    fn trees(&mut self, i: usize, d: usize, l: usize) -> std::rc::Rc<Vec<PTree>> {
        if let Some(v) = self.memo.get(&(i, d, l)) {
            return v.clone();
        }
        let f = self.f;
        let mut out = Vec::new();
        if d == 0 {
            if l == 1 && i < f.in_types {
                out.push(PTree::Leaf(i));
            }
        } else {
            for b in (0..f.ops()).filter(|b| f.target[*b] == i) {
                for kids in self.forests(&f.fibres[b], d - 1, l) {
                    out.push(PTree::Node(b, kids));
                }
            }
        }
        let out = std::rc::Rc::new(out);
        self.memo.insert((i, d, l), out.clone());
        out
    }

    fn forests(&mut self, types: &[usize], d: usize, l: usize) -> Vec<Vec<PTree>> {
        let Some((first, rest)) = types.split_first() else {
            return if d == 0 && l == 0 { vec![vec![]] } else { vec![] };
        };
        let mut out = Vec::new();
        for k in 0..=d {
            for m in 0..=l {
                let heads = self.trees(*first, k, m);
                if heads.is_empty() {
                    continue;
                }
                for tail in self.forests(rest, d - k, l - m) {
                    for h in heads.iter() {
                        let mut v = Vec::with_capacity(types.len());
                        v.push(h.clone());
                        v.extend(tail.iter().cloned());
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

/// Contract all inner edges: the composite operation and, for each of its
/// inputs, the path of the leaf it comes from.
pub fn composite(m: &dyn Monad, t: &PTree) -> Option<(usize, Vec<Vec<usize>>)> {
    match t {
        PTree::Leaf(i) => Some((m.unit(*i), vec![vec![]])),
        PTree::Node(b, kids) => {
            let mut op = *b;
            let mut cur: Vec<Vec<usize>> = (0..kids.len()).map(|j| vec![j]).collect();
            // nullary pieces first, so a truncated monad never overflows midway
            let mut pieces = Vec::new();
            for (j, k) in kids.iter().enumerate() {
                if !k.is_unit() {
                    let (c, cl) = composite(m, k)?;
                    pieces.push((cl.len(), j, c, cl));
                }
            }
            pieces.sort_by_key(|p| (p.0, p.1));
            for (_, j, c, cl) in pieces {
                let pos = cur.iter().position(|p| p.len() == 1 && p[0] == j)?;
                let (r, slots) = m.substitute(op, pos, c)?;
                cur = slots
                    .iter()
                    .map(|s| match *s {
                        Slot::Outer(q) => cur[q].clone(),
                        Slot::Inner(q) => [vec![j], cl[q].clone()].concat(),
                    })
                    .collect();
                op = r;
            }
            Some((op, cur))
        }
    }
}

/// Dots tagged by where they came from during substitution.
#[derive(Clone, Debug)]
enum Tagged {
    Leaf(usize),
    Node(usize, Slot, Vec<Tagged>),
}

fn tag(t: &PTree, mk: fn(usize) -> Slot, counter: &mut usize) -> Tagged {
    match t {
        PTree::Leaf(i) => Tagged::Leaf(*i),
        PTree::Node(b, kids) => {
            let s = mk(*counter);
            *counter += 1;
            Tagged::Node(*b, s, kids.iter().map(|k| tag(k, mk, counter)).collect())
        }
    }
}

fn graft(t: &Tagged, path: &mut Vec<usize>, at: &HashMap<Vec<usize>, Tagged>) -> Tagged {
    match t {
        Tagged::Leaf(i) => at.get(path.as_slice()).cloned().unwrap_or(Tagged::Leaf(*i)),
        Tagged::Node(b, s, kids) => {
            let mut out = Vec::new();
            for (j, k) in kids.iter().enumerate() {
                path.push(j);
                out.push(graft(k, path, at));
                path.pop();
            }
            Tagged::Node(*b, *s, out)
        }
    }
}

fn untag(t: &Tagged, slots: &mut Vec<Slot>) -> PTree {
    match t {
        Tagged::Leaf(i) => PTree::Leaf(*i),
        Tagged::Node(b, s, kids) => {
            slots.push(*s);
            PTree::Node(*b, kids.iter().map(|k| untag(k, slots)).collect())
        }
    }
}

/// Replace dot `k` (preorder) of `t` by `inner`, whose leaves in `order`
/// receive the children of that dot.
fn substitute_tree(t: &PTree, k: usize, inner: &PTree, order: &[Vec<usize>]) -> Option<(PTree, Vec<Slot>)> {
    let mut n = 0;
    let outer = tag(t, Slot::Outer, &mut n);
    let mut n = 0;
    let inner = tag(inner, Slot::Inner, &mut n);
    fn go(t: &Tagged, k: usize, inner: &Tagged, order: &[Vec<usize>]) -> Tagged {
        match t {
            Tagged::Node(_, Slot::Outer(j), kids) if *j == k => {
                let kids: Vec<Tagged> = kids.iter().map(|c| go(c, k, inner, order)).collect();
                let at: HashMap<Vec<usize>, Tagged> = order.iter().cloned().zip(kids).collect();
                graft(inner, &mut vec![], &at)
            }
            Tagged::Node(b, s, kids) => Tagged::Node(*b, *s, kids.iter().map(|c| go(c, k, inner, order)).collect()),
            Tagged::Leaf(i) => Tagged::Leaf(*i),
        }
    }
    let mut slots = Vec::new();
    let r = untag(&go(&outer, k, &inner, order), &mut slots);
    Some((r, slots))
}

/// `P+` truncated: operations are the P-trees with at most `bound` dots
/// whose composite exists, typed by the operations of P.
pub struct BaezDolan {
    functor: PolyFunctor,
    pub trees: Vec<PTree>,
    index: HashMap<PTree, usize>,
    /// leaf order of each tree under contraction
    orders: Vec<Vec<Vec<usize>>>,
    units: Vec<usize>,
    pub bound: usize,
}

impl BaezDolan {
    pub fn new(m: &dyn Monad, bound: usize) -> Self {
        let f = m.functor();
        let mut trees = Vec::new();
        let mut orders = Vec::new();
        let mut target = Vec::new();
        let widest = (0..f.ops()).map(|b| f.arity(b)).max().unwrap_or(0);
        for t in p_trees_bounded(f, bound, widest) {
            if let Some((op, order)) = composite(m, &t) {
                trees.push(t);
                orders.push(order);
                target.push(op);
            }
        }
        let fibres = trees.iter().map(PTree::dot_decorations).collect();
        let index: HashMap<PTree, usize> = trees.iter().cloned().enumerate().map(|(k, t)| (t, k)).collect();
        let units = (0..f.ops())
            .map(|b| {
                let corolla = PTree::Node(b, f.fibres[b].iter().map(|s| PTree::Leaf(*s)).collect());
                index.get(&corolla).copied().unwrap_or(usize::MAX)
            })
            .collect();
        BaezDolan { functor: PolyFunctor { in_types: f.ops(), out_types: f.ops(), fibres, target }, trees, index, orders, units, bound }
    }

    pub fn index_of(&self, t: &PTree) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// The operations that are unit trees: exactly the nullary ones.
    pub fn nullary(&self) -> Vec<usize> {
        (0..self.trees.len()).filter(|k| self.functor.fibres[*k].is_empty()).collect()
    }
}

impl Monad for BaezDolan {
    fn functor(&self) -> &PolyFunctor {
        &self.functor
    }
    fn unit(&self, b: usize) -> usize {
        self.units[b]
    }
    fn substitute(&self, b: usize, e: usize, c: usize) -> Option<(usize, Vec<Slot>)> {
        let f = &self.functor;
        if e >= f.arity(b) || f.fibres[b][e] != f.target[c] {
            return None;
        }
        let (t, slots) = substitute_tree(&self.trees[b], e, &self.trees[c], &self.orders[c])?;
        Some((self.index_of(&t)?, slots))
    }
}

pub fn baez_dolan(m: &dyn Monad, bound: usize) -> BaezDolan {
    BaezDolan::new(m, bound)
}

/// `P0 ..= Pk`, starting from the identity monad.
pub struct OpetopeTower {
    pub id: IdentityMonad,
    /// `stages[j]` is `P(j + 1)`
    pub stages: Vec<BaezDolan>,
    pub bound: usize,
}

pub fn opetope_tower(k: usize, bound: usize) -> OpetopeTower {
    let id = IdentityMonad::default();
    let mut stages: Vec<BaezDolan> = Vec::new();
    for j in 1..=k {
        let next = {
            let base: &dyn Monad = if j == 1 { &id } else { &stages[j - 2] };
            BaezDolan::new(base, bound)
        };
        stages.push(next);
    }
    OpetopeTower { id, stages, bound }
}

impl OpetopeTower {
    pub fn monad(&self, j: usize) -> &dyn Monad {
        if j == 0 {
            &self.id
        } else {
            &self.stages[j - 1]
        }
    }

    /// Highest `n` with `Z(n)` available.
    pub fn top_dim(&self) -> usize {
        self.stages.len() + 1
    }

    /// `|Z(n)|`: types of `P(n)` or operations of `P(n - 1)`.
    pub fn size(&self, n: usize) -> usize {
        if n == 0 {
            self.id.functor().in_types
        } else {
            self.monad(n - 1).functor().ops()
        }
    }

    /// Target of an element of `Z(n)`, `n >= 1`, in `Z(n - 1)`.
    pub fn target(&self, n: usize, z: usize) -> usize {
        self.monad(n - 1).functor().target[z]
    }

    /// Sources of an element of `Z(n)`, in fibre order.
    pub fn sources(&self, n: usize, z: usize) -> &[usize] {
        &self.monad(n - 1).functor().fibres[z]
    }

    /// The P-tree behind an element of `Z(n)`, `n >= 2`.
    pub fn tree(&self, n: usize, z: usize) -> &PTree {
        &self.stages[n - 2].trees[z]
    }

    /// The element of `Z(n)` for an opetope, with the names of its top
    /// spheres in fibre order.
    pub fn to_z(&self, x: &Opetope) -> Result<(usize, Vec<Name>), PolyError> {
        let n = x.dim();
        match n {
            0 => Ok((0, vec![])),
            1 => Ok((0, x.complex().top().dots().cloned().collect())),
            _ if n > self.top_dim() => Err(PolyError::OutOfBound(format!("dimension {n}"))),
            _ => {
                let ct = x.composition_tree();
                let (tree, names) = if ct.is_unit() {
                    let below = x.target()?.target()?;
                    (PTree::Leaf(self.to_z(&below)?.0), vec![])
                } else {
                    let mut names = Vec::new();
                    let t = self.build(x, ct.root(), n, &mut names)?;
                    (t, names)
                };
                let idx = self.stages[n - 2].index_of(&tree).ok_or_else(|| PolyError::OutOfBound(format!("{x}")))?;
                Ok((idx, names))
            }
        }
    }

    fn build(&self, x: &Opetope, d: &str, n: usize, names: &mut Vec<Name>) -> Result<PTree, PolyError> {
        names.push(d.to_string());
        let (dec, fibre_names) = self.to_z(&x.source(d)?)?;
        let ct = x.composition_tree();
        let src = self.sources(n - 1, dec).to_vec();
        let mut kids = Vec::new();
        for (j, c) in fibre_names.iter().enumerate() {
            if ct.is_dot(c) {
                kids.push(self.build(x, c, n, names)?);
            } else {
                kids.push(PTree::Leaf(src[j]));
            }
        }
        Ok(PTree::Node(dec, kids))
    }

    /// The opetope for an element of `Z(n)`, with its top spheres in fibre order.
    pub fn from_z(&self, n: usize, z: usize) -> Result<(Opetope, Vec<Name>), PolyError> {
        match n {
            0 => Ok((Opetope::point(), vec![])),
            1 => {
                let a = Opetope::arrow();
                let names = a.complex().top().dots().cloned().collect();
                Ok((a, names))
            }
            _ => match self.tree(n, z) {
                PTree::Leaf(i) => Ok((drop_over(&self.from_z(n - 2, *i)?.0), vec![])),
                t => {
                    let mut order = Vec::new();
                    let recipe = self.recipe(t, n, &mut order)?;
                    let c = compose_recipe(&recipe)?;
                    let names = order.iter().map(|r| c.spheres[r].clone()).collect();
                    Ok((c.filler, names))
                }
            },
        }
    }

    fn recipe(&self, t: &PTree, n: usize, order: &mut Vec<Name>) -> Result<Recipe, PolyError> {
        let PTree::Node(dec, kids) = t else { unreachable!("leaves are not recipe nodes") };
        let name = format!("n{}", order.len());
        order.push(name.clone());
        let (decoration, fibre_names) = self.from_z(n - 1, *dec)?;
        let mut inputs = BTreeMap::new();
        for (j, k) in kids.iter().enumerate() {
            if !k.is_unit() {
                inputs.insert(fibre_names[j].clone(), self.recipe(k, n, order)?);
            }
        }
        Ok(Recipe::Node { name, decoration, inputs })
    }
}

/// Compare the tower against the calculus for `Z(2) ..= Z(k)`: both
/// directions of the correspondence, targets, and sources.
pub fn cross_check_sources_targets(k: usize, bound: usize) -> Result<(), Counterexample> {
    let tower = opetope_tower(k.saturating_sub(1), bound);
    let enumerated = crate::enumerate::tower(k, bound);
    let err = |s: String| Counterexample(s);
    for (n, level) in enumerated.iter().enumerate().skip(2) {
        let mut seen = BTreeSet::new();
        for z in 0..tower.size(n) {
            let (x, names) = tower.from_z(n, z).map_err(|e| err(format!("Z{n}[{z}] has no opetope: {e}")))?;
            let (back, back_names) = tower.to_z(&x).map_err(|e| err(format!("Z{n}[{z}]: {e}")))?;
            if back != z || back_names != names {
                return Err(err(format!("Z{n}[{z}] does not round-trip ({back})")));
            }
            let (t, _) = tower.to_z(&x.target().unwrap()).map_err(|e| err(e.to_string()))?;
            if t != tower.target(n, z) {
                return Err(err(format!("target of Z{n}[{z}] disagrees")));
            }
            for (j, s) in tower.sources(n, z).iter().enumerate() {
                let f = x.source(&names[j]).map_err(|e| err(e.to_string()))?;
                if tower.to_z(&f).map_err(|e| err(e.to_string()))?.0 != *s {
                    return Err(err(format!("source {j} of Z{n}[{z}] disagrees")));
                }
            }
            if x.sources().len() != tower.sources(n, z).len() {
                return Err(err(format!("Z{n}[{z}] has extra sources")));
            }
            seen.insert(x.canonical_key());
        }
        let expected: BTreeSet<_> = level.keys().cloned().collect();
        if seen != expected {
            return Err(err(format!("dimension {n}: {} from the tower, {} enumerated", seen.len(), expected.len())));
        }
    }
    Ok(())
}

/// A constellation drawn on a P-tree: the carrier is `base.shape()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PConstellation {
    pub base: PTree,
    pub constellation: Constellation,
}

/// Per-node data of a P-tree carrier.
struct Carrier {
    op: BTreeMap<Name, usize>,
    /// type of the edge below each node
    ty: BTreeMap<Name, usize>,
    /// children in fibre order
    kids: BTreeMap<Name, Vec<Name>>,
}

impl Carrier {
    fn new(base: &PTree, f: &PolyFunctor) -> Self {
        let mut c = Carrier { op: BTreeMap::new(), ty: BTreeMap::new(), kids: BTreeMap::new() };
        let (mut d, mut l) = (0, 0);
        fn go(t: &PTree, f: &PolyFunctor, c: &mut Carrier, d: &mut usize, l: &mut usize) -> Name {
            match t {
                PTree::Leaf(i) => {
                    let n = format!("l{l}");
                    *l += 1;
                    c.ty.insert(n.clone(), *i);
                    n
                }
                PTree::Node(b, kids) => {
                    let n = format!("d{d}");
                    *d += 1;
                    c.op.insert(n.clone(), *b);
                    c.ty.insert(n.clone(), f.target[*b]);
                    let ks = kids.iter().map(|k| go(k, f, c, d, l)).collect();
                    c.kids.insert(n.clone(), ks);
                    n
                }
            }
        }
        go(base, f, &mut c, &mut d, &mut l);
        c
    }
}

impl PConstellation {
    /// Canonical text: base tree, then the nesting with white dots named by position.
    pub fn encode(&self) -> String {
        let c = &self.constellation;
        let pos: BTreeMap<&Name, String> =
            c.whites.iter().flat_map(|(e, ws)| ws.iter().enumerate().map(move |(j, w)| (w, format!("{e}.{j}")))).collect();
        fn go(c: &Constellation, x: &str, pos: &BTreeMap<&Name, String>) -> String {
            let t = &c.nesting;
            if t.is_leaf(x) {
                return x.to_string();
            }
            if t.is_null_dot(x) {
                return format!("w{}", pos[&x.to_string()]);
            }
            let mut kids: Vec<String> = t.children(x).iter().map(|k| go(c, k, pos)).collect();
            kids.sort();
            format!("({})", kids.join(","))
        }
        format!("{:?}|{}", self.base, go(c, c.nesting.root(), &pos))
    }
}

/// All P-constellations on P-trees with at most `bound` dots and at most
/// `bound` spheres.
pub fn p_constellations(m: &dyn Monad, bound: usize) -> Vec<PConstellation> {
    let mut out = Vec::new();
    for base in p_trees(m.functor(), bound) {
        let shape = base.shape();
        let mut names = NameGen::new("s", shape.names());
        for c in enumerate_on(&shape, bound, &mut names) {
            out.push(PConstellation { base: base.clone(), constellation: c });
        }
    }
    out
}

/// From a P-constellation to a `P+`-tree: each sphere is decorated by its
/// layer. `None` when a layer falls outside the truncation.
pub fn constellation_to_tree(m: &dyn Monad, plus: &BaezDolan, pc: &PConstellation) -> Option<PTree> {
    let f = m.functor();
    let car = Carrier::new(&pc.base, f);
    let c = &pc.constellation;
    if c.is_sphere_free() {
        return Some(PTree::Leaf(car.op[c.carrier.root()]));
    }
    let flat = SubdividedTree { base: c.carrier.clone(), whites: c.whites.clone() }.flatten();
    let white_edge: BTreeMap<&Name, &Name> = c.whites.iter().flat_map(|(e, ws)| ws.iter().map(move |w| (w, e))).collect();
    let ty = |e: &Name| car.ty[white_edge.get(e).copied().unwrap_or(e)];
    // next element up along the edge towards `upper`
    let up_from = |x: &Name, upper: &Name| -> Name {
        let mut cur = upper.clone();
        while let Some(p) = flat.parent(&cur) {
            if p == x {
                return cur;
            }
            cur = p.to_string();
        }
        unreachable!("edge above {x}")
    };
    let kids_in_order = |x: &Name| -> Vec<Name> {
        if let Some(ks) = car.kids.get(x) {
            ks.iter().map(|k| up_from(x, k)).collect()
        } else {
            flat.children(x).to_vec()
        }
    };
    struct Ctx<'a> {
        m: &'a dyn Monad,
        c: &'a Constellation,
        car: &'a Carrier,
        ty: &'a dyn Fn(&Name) -> usize,
        kids: &'a dyn Fn(&Name) -> Vec<Name>,
    }
    // P-tree cut out by the elements `k`, exits listed in leaf preorder
    fn region(cx: &Ctx, k: &BTreeSet<Name>, e: &Name, exits: &mut Vec<Name>) -> PTree {
        if !k.contains(e) {
            exits.push(e.clone());
            return PTree::Leaf((cx.ty)(e));
        }
        let op = cx.car.op.get(e).copied().unwrap_or_else(|| cx.m.unit((cx.ty)(e)));
        PTree::Node(op, (cx.kids)(e).iter().map(|c| region(cx, k, c, exits)).collect())
    }
    fn content(c: &Constellation, x: &str) -> BTreeSet<Name> {
        c.nesting.descendants(x).into_iter().filter(|y| c.nesting.children(y).is_empty()).collect()
    }
    fn bottom(flat: &Tree, k: &BTreeSet<Name>) -> Name {
        k.iter().find(|e| flat.parent(e).is_none_or(|p| !k.contains(p))).unwrap().clone()
    }
    // layer of sphere x; also the child regions in dot preorder
    fn layer(cx: &Ctx, flat: &Tree, x: &str, regions: &mut Vec<Name>) -> Option<PTree> {
        if cx.c.nesting.is_null_dot(x) {
            return Some(PTree::Leaf((cx.ty)(&x.to_string())));
        }
        let k = content(cx.c, x);
        let region_of: BTreeMap<Name, Name> = k
            .iter()
            .map(|e| {
                let mut cur = e.clone();
                while cx.c.nesting.parent(&cur) != Some(x) {
                    cur = cx.c.nesting.parent(&cur).unwrap().to_string();
                }
                (e.clone(), cur)
            })
            .collect();
        fn node(cx: &Ctx, flat: &Tree, k: &BTreeSet<Name>, region_of: &BTreeMap<Name, Name>, e: &Name, regions: &mut Vec<Name>) -> Option<PTree> {
            if !k.contains(e) {
                return Some(PTree::Leaf((cx.ty)(e)));
            }
            let r = &region_of[e];
            let nest = &cx.c.nesting;
            if nest.is_dot(r) && !nest.children(r).is_empty() {
                // a child sphere, contracted
                let inner = content(cx.c, r);
                let mut exits = Vec::new();
                let t = region(cx, &inner, &bottom(flat, &inner), &mut exits);
                let (op, order) = composite(cx.m, &t)?;
                regions.push(r.clone());
                let exit_at: BTreeMap<Vec<usize>, Name> = leaf_paths(&t).into_iter().zip(exits).collect();
                let kids = order.iter().map(|p| node(cx, flat, k, region_of, &exit_at[p], regions)).collect::<Option<Vec<_>>>()?;
                Some(PTree::Node(op, kids))
            } else {
                regions.push(r.clone());
                let op = cx.car.op.get(e).copied().unwrap_or_else(|| cx.m.unit((cx.ty)(e)));
                let kids = (cx.kids)(e).iter().map(|c| node(cx, flat, k, region_of, c, regions)).collect::<Option<Vec<_>>>()?;
                Some(PTree::Node(op, kids))
            }
        }
        node(cx, flat, &k, &region_of, &bottom(flat, &k), regions)
    }
    fn to_tree(cx: &Ctx, plus: &BaezDolan, flat: &Tree, x: &str) -> Option<PTree> {
        let mut regions = Vec::new();
        let l = layer(cx, flat, x, &mut regions)?;
        let dec = plus.index_of(&l)?;
        let nest = &cx.c.nesting;
        let kids = regions
            .iter()
            .map(|r| if nest.is_dot(r) { to_tree(cx, plus, flat, r) } else { Some(PTree::Leaf(cx.car.op[r])) })
            .collect::<Option<Vec<_>>>()?;
        Some(PTree::Node(dec, kids))
    }
    let cx = Ctx { m, c, car: &car, ty: &ty, kids: &kids_in_order };
    to_tree(&cx, plus, &flat, c.nesting.root())
}

fn leaf_paths(t: &PTree) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(t: &PTree, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        match t {
            PTree::Leaf(_) => out.push(p.clone()),
            PTree::Node(_, k) => {
                for (j, c) in k.iter().enumerate() {
                    p.push(j);
                    go(c, p, out);
                    p.pop();
                }
            }
        }
    }
    go(t, &mut vec![], &mut out);
    out
}

/// A P-tree with each dot marked by the `P+` leaf it came from, and scars
/// where unit trees were substituted.
#[derive(Clone, Debug)]
enum Scarred {
    Leaf(usize),
    Dot(usize, Name, Vec<Scarred>),
    Scar(Name, Box<Scarred>),
}

impl Scarred {
    fn plain(&self, m: &dyn Monad, f: &PolyFunctor) -> PTree {
        match self {
            Scarred::Leaf(i) => PTree::Leaf(*i),
            Scarred::Dot(b, _, k) => PTree::Node(*b, k.iter().map(|c| c.plain(m, f)).collect()),
            Scarred::Scar(_, k) => PTree::Node(m.unit(k.root_type(f)), vec![k.plain(m, f)]),
        }
    }
    fn root_type(&self, f: &PolyFunctor) -> usize {
        match self {
            Scarred::Leaf(i) => *i,
            Scarred::Dot(b, _, _) => f.target[*b],
            Scarred::Scar(_, k) => k.root_type(f),
        }
    }
    fn replace_leaves(&self, p: &mut Vec<usize>, at: &HashMap<Vec<usize>, Scarred>) -> Scarred {
        match self {
            Scarred::Leaf(i) => at.get(p.as_slice()).cloned().unwrap_or(Scarred::Leaf(*i)),
            Scarred::Dot(b, n, k) => {
                let mut out = Vec::new();
                for (j, c) in k.iter().enumerate() {
                    p.push(j);
                    out.push(c.replace_leaves(p, at));
                    p.pop();
                }
                Scarred::Dot(*b, n.clone(), out)
            }
            Scarred::Scar(n, k) => {
                p.push(0);
                let r = k.replace_leaves(p, at);
                p.pop();
                Scarred::Scar(n.clone(), Box::new(r))
            }
        }
    }
}

/// From a `P+`-tree back to a P-constellation by substituting each
/// decoration into its parent, leaving a scar for every unit tree.
pub fn tree_to_constellation(m: &dyn Monad, plus: &BaezDolan, y: &PTree) -> Option<PConstellation> {
    let f = m.functor();
    // sphere names are paths in y
    fn psi(m: &dyn Monad, f: &PolyFunctor, plus: &BaezDolan, y: &PTree, path: &str, members: &mut BTreeMap<Name, Vec<Name>>) -> Option<Scarred> {
        match y {
            PTree::Leaf(b) => {
                let tag = format!("y{path}");
                Some(Scarred::Dot(*b, tag, f.fibres[*b].iter().map(|s| Scarred::Leaf(*s)).collect()))
            }
            PTree::Node(dec, kids) => {
                let layer = &plus.trees[*dec];
                let sphere = format!("S{path}");
                members.entry(sphere.clone()).or_default();
                if let PTree::Leaf(i) = layer {
                    return Some(Scarred::Scar(sphere, Box::new(Scarred::Leaf(*i))));
                }
                let mut subs = Vec::new();
                for (j, k) in kids.iter().enumerate() {
                    let sub = psi(m, f, plus, k, &format!("{path}.{j}"), members)?;
                    subs.push(sub);
                }
                let mut counter = 0;
                fn expand(m: &dyn Monad, f: &PolyFunctor, t: &PTree, subs: &[Scarred], counter: &mut usize) -> Option<Scarred> {
                    match t {
                        PTree::Leaf(i) => Some(Scarred::Leaf(*i)),
                        PTree::Node(_, kids) => {
                            let s = subs[*counter].clone();
                            *counter += 1;
                            let kids = kids.iter().map(|k| expand(m, f, k, subs, counter)).collect::<Option<Vec<_>>>()?;
                            let (_, order) = composite(m, &s.plain(m, f))?;
                            let at: HashMap<Vec<usize>, Scarred> = order.into_iter().zip(kids).collect();
                            Some(s.replace_leaves(&mut vec![], &at))
                        }
                    }
                }
                let r = expand(m, f, layer, &subs, &mut counter)?;
                Some(r)
            }
        }
    }
    let mut members = BTreeMap::new();
    let s = psi(m, f, plus, y, "", &mut members)?;
    // name the carrier the way `PTree::shape` does, whites by their edge
    let base = s.plain_without_scars();
    let mut dot_name: BTreeMap<Name, Name> = BTreeMap::new();
    let mut whites = Whites::new();
    let (mut d, mut l) = (0, 0);
    fn walk(s: &Scarred, pending: &mut Vec<Name>, dot_name: &mut BTreeMap<Name, Name>, whites: &mut Whites, d: &mut usize, l: &mut usize) {
        match s {
            Scarred::Leaf(_) => {
                let n = format!("l{l}");
                *l += 1;
                if !pending.is_empty() {
                    whites.insert(n, std::mem::take(pending));
                }
            }
            Scarred::Dot(_, tag, kids) => {
                let n = format!("d{d}");
                *d += 1;
                dot_name.insert(tag.clone(), n.clone());
                if !pending.is_empty() {
                    whites.insert(n, std::mem::take(pending));
                }
                for k in kids {
                    walk(k, &mut Vec::new(), dot_name, whites, d, l);
                }
            }
            Scarred::Scar(w, k) => {
                pending.push(w.clone());
                walk(k, pending, dot_name, whites, d, l);
            }
        }
    }
    walk(&s, &mut Vec::new(), &mut dot_name, &mut whites, &mut d, &mut l);
    // nesting: the shape of y, leaves renamed to carrier dots
    let mut raw = Vec::new();
    fn nest(y: &PTree, path: &str, parent: Option<&str>, dot_name: &BTreeMap<Name, Name>, raw: &mut Vec<RawNode>) {
        match y {
            PTree::Leaf(_) => raw.push(RawNode::leaf(&dot_name[&format!("y{path}")], parent)),
            PTree::Node(_, kids) => {
                let me = format!("S{path}");
                raw.push(RawNode::dot(&me, parent));
                for (j, k) in kids.iter().enumerate() {
                    nest(k, &format!("{path}.{j}"), Some(&me), dot_name, raw);
                }
            }
        }
    }
    nest(y, "", None, &dot_name, &mut raw);
    let nesting = if let PTree::Leaf(_) = y { Tree::unit(&dot_name["y"]) } else { Tree::from_raw(&raw).ok()? };
    let constellation = Constellation { carrier: base.shape(), whites, nesting };
    Some(PConstellation { base, constellation })
}

impl Scarred {
    fn plain_without_scars(&self) -> PTree {
        match self {
            Scarred::Leaf(i) => PTree::Leaf(*i),
            Scarred::Dot(b, _, k) => PTree::Node(*b, k.iter().map(Scarred::plain_without_scars).collect()),
            Scarred::Scar(_, k) => k.plain_without_scars(),
        }
    }
}

/// Statistics of a successful [`slice_twice_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceReport {
    pub constellations: usize,
    pub trees: usize,
}

/// `tr(P+) = const(P)` within `bound`: P-trees with at most `bound` dots,
/// at most `bound` spheres, every layer inside the truncation.
pub fn slice_twice_check(m: &dyn Monad, bound: usize) -> Result<SliceReport, Counterexample> {
    let plus = BaezDolan::new(m, bound);
    let plus2 = BaezDolan::new(&plus, bound);
    let f = m.functor();
    let widest = (0..f.ops()).map(|b| f.arity(b)).max().unwrap_or(0);
    // the outer layer contracts to the whole base, so wider bases never qualify
    let bases = p_trees_bounded(f, bound, widest);
    let per_base = |base: &PTree| -> Result<Vec<(PTree, String)>, Counterexample> {
        let shape = base.shape();
        let mut names = NameGen::new("s", shape.names());
        let mut found = Vec::new();
        for c in enumerate_on(&shape, bound, &mut names) {
            let pc = PConstellation { base: base.clone(), constellation: c };
            if let Some(y) = check_one(m, &plus, &plus2, &pc)? {
                found.push((y, pc.encode()));
            }
        }
        Ok(found)
    };
    #[cfg(feature = "parallel")]
    let found: Vec<_> = {
        use rayon::prelude::*;
        bases.par_iter().map(per_base).collect::<Result<Vec<_>, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let found: Vec<_> = bases.iter().map(per_base).collect::<Result<Vec<_>, _>>()?;
    let mut from_const: BTreeMap<PTree, String> = BTreeMap::new();
    for (y, code) in found.into_iter().flatten() {
        if let Some(other) = from_const.insert(y.clone(), code.clone()) {
            return Err(Counterexample(format!("{code} and {other} both give {y:?}")));
        }
    }
    // every tree of P+ within the bounds comes from a constellation
    if let Some(y) = plus2.trees.iter().find(|y| y.dots() <= bound && !from_const.contains_key(*y)) {
        return Err(Counterexample(format!("{y:?} is missed by the constellations")));
    }
    Ok(SliceReport { constellations: from_const.len(), trees: plus2.trees.len() })
}

/// Round trip one constellation and check the structure maps on its tree.
fn check_one(m: &dyn Monad, plus: &BaezDolan, plus2: &BaezDolan, pc: &PConstellation) -> Result<Option<PTree>, Counterexample> {
    let err = |s: String| Err(Counterexample(s));
    if !pc.constellation.is_valid() {
        return err(format!("generated an invalid constellation {:?}", pc.constellation));
    }
    let Some(y) = constellation_to_tree(m, plus, pc) else { return Ok(None) };
    let code = pc.encode();
    let Some(back) = tree_to_constellation(m, plus, &y) else {
        return err(format!("{y:?} has no constellation"));
    };
    if !back.constellation.is_valid() {
        return err(format!("{y:?} gives an invalid constellation"));
    }
    if back.encode() != code {
        return err(format!("round trip changes {code} into {}", back.encode()));
    }
    // target is the underlying tree, leaves are its dots
    let Some(t) = plus2.index_of(&y) else {
        return err(format!("{code}: tree {y:?} is outside P++"));
    };
    if plus.trees[plus2.functor().target[t]] != pc.base {
        return err(format!("{code}: target is not the underlying tree"));
    }
    let mut leaves = Vec::new();
    y.walk(&mut |n| {
        if let PTree::Leaf(b) = n {
            leaves.push(*b);
        }
    });
    let mut dots = pc.base.dot_decorations();
    leaves.sort();
    dots.sort();
    if leaves != dots {
        return err(format!("{code}: leaves do not match dots"));
    }
    if y.dots() != pc.constellation.nesting.dot_count() {
        return err(format!("{code}: dots do not match spheres"));
    }
    Ok(Some(y))
}

/// Whether an abstract tree shape carries some decoration by `m`.
pub fn admits_decoration(m: &dyn Monad, shape: &Tree, bound: usize) -> bool {
    let code = shape.canonical_code();
    p_trees(m.functor(), bound).iter().any(|t| t.shape().canonical_code() == code)
}

/// Abstract trees with at most `dots` dots and `leaves` leaves that admit no
/// decoration. Nodes wider than every operation are ruled out by truncation
/// alone, so such trees are skipped.
pub fn undecorable(m: &dyn Monad, dots: usize, leaves: usize) -> Vec<Tree> {
    let f = m.functor();
    let widest = (0..f.ops()).map(|b| f.arity(b)).max().unwrap_or(0);
    let codes: BTreeSet<String> = p_trees(f, dots).iter().map(|t| t.shape().canonical_code()).collect();
    enumerate_trees(dots, leaves)
        .into_iter()
        .filter(|t| t.dots().all(|d| t.children(d).len() <= widest))
        .filter(|t| !codes.contains(&t.canonical_code()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluate_identity_and_free_monoid() {
        let x = [0, 0, 0];
        assert_eq!(PolyFunctor::identity().evaluate(&x).len(), 3);
        // tuples of length 0..=2 over three letters
        assert_eq!(PolyFunctor::free_monoid(2).evaluate(&x).len(), 1 + 3 + 9);
    }

    #[test]
    fn evaluate_matches_sum_of_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let ni = rng.gen_range(1..4);
            let ops = rng.gen_range(1..5);
            let fibres: Vec<Vec<usize>> = (0..ops).map(|_| (0..rng.gen_range(0..4)).map(|_| rng.gen_range(0..ni)).collect()).collect();
            let target = (0..ops).map(|_| rng.gen_range(0..2)).collect();
            let p = PolyFunctor::new(ni, 2, fibres, target).unwrap();
            let x: Vec<usize> = (0..rng.gen_range(0..5)).map(|_| rng.gen_range(0..ni)).collect();
            let per_type = |i: usize| x.iter().filter(|t| **t == i).count();
            let formula: usize = p.fibres.iter().map(|f| f.iter().map(|s| per_type(*s)).product::<usize>()).sum();
            assert_eq!(p.evaluate(&x).len(), formula);
        }
    }

    #[test]
    fn composition() {
        let id = PolyFunctor::identity();
        let p = PolyFunctor::free_monoid(3);
        assert!(id.compose(&p).unwrap().functor.is_isomorphic(&p));
        assert!(p.compose(&id).unwrap().functor.is_isomorphic(&p));
        // tuples of tuples: sum over n of 4^n
        let pp = p.compose(&p).unwrap();
        assert_eq!(pp.functor.ops(), 1 + 4 + 16 + 64);
        let two = PolyFunctor::new(2, 1, vec![vec![0, 1]], vec![0]).unwrap();
        assert!(matches!(two.compose(&two), Err(PolyError::IndexMismatch(2, 1))));
    }

    #[test]
    fn evaluate_composite_is_nested_evaluation() {
        let p = PolyFunctor::free_monoid(2);
        let q = PolyFunctor::new(2, 1, vec![vec![], vec![0, 1], vec![1]], vec![0, 0, 0]).unwrap();
        let x = [0, 1, 1];
        let c = p.compose(&q).unwrap();
        let direct = c.functor.evaluate(&x);
        let inner = q.evaluate(&x);
        let inner_types: Vec<usize> = inner.iter().map(|b| q.output(b)).collect();
        let nested = p.evaluate(&inner_types);
        // explicit bijection: flatten nested bouquets
        let mut flat: Vec<Bouquet> = nested
            .iter()
            .map(|outer| {
                let cs: Vec<usize> = outer.inputs.iter().map(|k| inner[*k].op).collect();
                let op = c.two_level.iter().position(|(b, v)| *b == outer.op && *v == cs).unwrap();
                Bouquet { op, inputs: outer.inputs.iter().flat_map(|k| inner[*k].inputs.clone()).collect() }
            })
            .collect();
        let mut direct = direct;
        flat.sort();
        direct.sort();
        assert_eq!(flat, direct);
    }

    #[test]
    fn monad_laws() {
        assert_eq!(check_monad_laws(&IdentityMonad::default(), usize::MAX), Ok(()));
        assert_eq!(check_monad_laws(&FreeMonoid::new(5), usize::MAX), Ok(()));
        let bad = Swapped { inner: FreeMonoid::new(4), a: 2, b: 3 };
        assert!(check_monad_laws(&bad, usize::MAX).is_err());
    }

    #[test]
    fn truncation_is_monotone() {
        let fm = FreeMonoid::new(2);
        for b in 0..3 {
            let small = BaezDolan::new(&fm, b);
            let big = BaezDolan::new(&fm, b + 1);
            for (k, t) in small.trees.iter().enumerate() {
                let j = big.index_of(t).unwrap();
                assert_eq!(small.functor().target[k], big.functor().target[j]);
            }
        }
    }

    #[test]
    fn p_trees_of_identity_are_linear() {
        for k in 0..6 {
            assert_eq!(p_trees(&PolyFunctor::identity(), k).len(), k + 1);
        }
        let t = p_trees(&PolyFunctor::identity(), 4);
        assert_eq!(t.len(), 5);
        assert!(t.iter().all(|t| t.shape().is_linear() || t.is_unit()));
    }

    #[test]
    fn p_trees_counted_by_fixpoint() {
        // (I + P)^k(empty) for P = lists of length at most 2, counted by dots
        let f = PolyFunctor::free_monoid(2);
        let mut by_dots: Vec<u64> = vec![1];
        for d in 1..=3usize {
            // trees with exactly d dots: root arity a, split d-1 among a subtrees
            let mut n = 0u64;
            for a in 0..=2usize {
                n += compositions(&by_dots, d - 1, a);
            }
            by_dots.push(n);
        }
        let total: u64 = by_dots.iter().sum();
        assert_eq!(p_trees(&f, 3).len() as u64, total);
    }

    fn compositions(by_dots: &[u64], d: usize, parts: usize) -> u64 {
        if parts == 0 {
            return (d == 0) as u64;
        }
        (0..=d).map(|k| by_dots.get(k).copied().unwrap_or(0) * compositions(by_dots, d - k, parts - 1)).sum()
    }

    #[test]
    fn baez_dolan_of_identity_is_the_free_monoid() {
        let bd = BaezDolan::new(&IdentityMonad::default(), 5);
        assert!(bd.functor().is_isomorphic(&PolyFunctor::free_monoid(5)));
        assert_eq!(check_monad_laws(&bd, usize::MAX), Ok(()));
        assert_eq!(bd.nullary().len(), 1);
        assert!(bd.trees[bd.nullary()[0]].is_unit());
    }

    #[test]
    fn baez_dolan_laws_and_units() {
        let fm = FreeMonoid::new(2);
        let bd = BaezDolan::new(&fm, 2);
        assert_eq!(check_monad_laws(&bd, usize::MAX), Ok(()));
        let nullary = bd.nullary();
        assert_eq!(nullary.len(), 1);
        assert!(nullary.iter().all(|k| bd.trees[*k].is_unit()));
        // one-dot trees are units
        for b in 0..fm.functor().ops() {
            assert_eq!(bd.trees[bd.unit(b)].dots(), 1);
        }
    }

    #[test]
    fn tower_sizes() {
        let t = opetope_tower(2, 3);
        assert_eq!(t.size(0), 1);
        assert_eq!(t.size(1), 1);
        assert_eq!(t.size(2), 4);
        assert_eq!(t.size(3), 97);
        assert_eq!(t.size(3), crate::enumerate::enumerate(3, 3).len());
    }

    #[test]
    fn cross_check_small() {
        assert_eq!(cross_check_sources_targets(4, 2), Ok(()));
    }

    #[test]
    fn slice_twice_identity() {
        let r = slice_twice_check(&IdentityMonad::default(), 3).unwrap();
        assert!(r.constellations > 0);
    }

    #[test]
    fn unit_tree_is_sphere_free() {
        let id = IdentityMonad::default();
        let plus = BaezDolan::new(&id, 2);
        let pc = tree_to_constellation(&id, &plus, &PTree::Leaf(0)).unwrap();
        assert!(pc.constellation.is_sphere_free());
        assert_eq!(pc.base.dots(), 1);
    }

    #[test]
    fn decorations() {
        let id = IdentityMonad::default();
        let plus = BaezDolan::new(&id, 3);
        let u = undecorable(&plus, 3, 3);
        assert!(u.is_empty(), "{:?}", u.iter().map(|t| t.to_term()).collect::<Vec<_>>());
        let branching = undecorable(&id, 3, 3);
        assert!(!branching.is_empty());
        assert!(branching.iter().all(|t| !t.is_linear()));
        let fm = FreeMonoid::new(3);
        assert!(undecorable(&BaezDolan::new(&fm, 3), 3, 3).is_empty());
        assert!(admits_decoration(&fm, &Tree::from_term("a(b(x y) z)").unwrap(), 2));
    }
}
