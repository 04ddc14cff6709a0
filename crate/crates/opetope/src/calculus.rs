//! Faces, sphere operations, gluing and fillers.
//!
//! Sphere operations act on one constellation and propagate downwards so
//! that the complex stays in zoom relation. Levels above the one operated on
//! are not kept by the public operations: a complex truncated at the level of
//! the operation is returned.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::opetope::{glob_over, drop_over, Opetope, ZoomComplex, ZoomViolation};
use crate::tree::{is_connected_in, Name, NameGen, SubdividedTree, Tree, Whites};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CalcError {
    #[error("unknown sphere `{name}` in constellation {level}")]
    UnknownSphere { level: usize, name: Name },
    #[error("unknown element `{name}` in constellation {level}")]
    UnknownElement { level: usize, name: Name },
    #[error("`{0}` is the outer sphere")]
    OuterSphere(Name),
    #[error("level {level} exceeds degree {degree}")]
    Level { level: usize, degree: usize },
    #[error("a 0-opetope has no target")]
    NoTarget,
    #[error("unknown facet `{0}`")]
    UnknownFacet(Name),
    #[error("target/source mismatch at facet `{0}`")]
    Mismatch(Name),
    #[error("dimension mismatch: {0} against {1}")]
    Dimension(usize, usize),
    #[error("recipe: {0}")]
    Recipe(String),
    #[error("result is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ZoomViolation>),
}

/// The kind of a sphere operation, with its subject.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SphereOp {
    Erase(Name),
    /// draw a sphere immediately around a dot or sphere
    Draw(Name),
    Contract(Name),
    Restrict(Name),
}

fn check_level(z: &ZoomComplex, i: usize) -> Result<(), CalcError> {
    if i > z.degree() {
        return Err(CalcError::Level { level: i, degree: z.degree() });
    }
    Ok(())
}

fn check_sphere(z: &ZoomComplex, i: usize, s: &str) -> Result<(), CalcError> {
    check_level(z, i)?;
    if !z.trees[i + 1].is_dot(s) {
        return Err(CalcError::UnknownSphere { level: i, name: s.into() });
    }
    Ok(())
}

fn finish(z: ZoomComplex) -> Result<ZoomComplex, CalcError> {
    let v = z.validate();
    if v.is_empty() {
        Ok(z)
    } else {
        Err(CalcError::Invalid(v))
    }
}

fn fresh_gen(z: &ZoomComplex) -> NameGen {
    NameGen::new("s", &z.all_names())
}

/// Apply one sphere operation to `X(i)`, returning `X(0)..X(i)`.
pub fn apply(z: &ZoomComplex, i: usize, op: &SphereOp) -> Result<ZoomComplex, CalcError> {
    match op {
        SphereOp::Erase(s) => erase_sphere(z, i, s),
        SphereOp::Draw(a) => draw_sphere(z, i, a),
        SphereOp::Contract(s) => contract_sphere(z, i, s),
        SphereOp::Restrict(s) => restrict_to_sphere(z, i, s),
    }
}

pub fn erase_sphere(z: &ZoomComplex, i: usize, s: &str) -> Result<ZoomComplex, CalcError> {
    check_sphere(z, i, s)?;
    let mut out = z.truncate(i);
    if out.trees[i + 1].root() == s {
        return Err(CalcError::OuterSphere(s.into()));
    }
    erase_in(&mut out, i, s);
    finish(out)
}

fn erase_in(z: &mut ZoomComplex, i: usize, s: &str) {
    let parent = z.trees[i + 1].parent(s).map(str::to_string);
    let only_child = parent.as_ref().is_some_and(|p| z.trees[i + 1].children(p).len() == 1);
    if z.trees[i + 1].is_null_dot(s) {
        match parent.filter(|_| only_child) {
            // the enclosing sphere now surrounds the white dot directly
            Some(p) => rename_white(&mut z.whites[i], s, &p),
            None => remove_white(&mut z.whites[i], s),
        }
    }
    z.trees[i + 1].splice_out(s).expect("non-root dot");
}

pub fn draw_sphere(z: &ZoomComplex, i: usize, around: &str) -> Result<ZoomComplex, CalcError> {
    check_level(z, i)?;
    if !z.trees[i + 1].contains(around) {
        return Err(CalcError::UnknownElement { level: i, name: around.into() });
    }
    let mut out = z.truncate(i);
    let name = fresh_gen(z).next().unwrap();
    out.trees[i + 1].insert_below(around, &name).expect("fresh name");
    finish(out)
}

pub fn contract_sphere(z: &ZoomComplex, i: usize, s: &str) -> Result<ZoomComplex, CalcError> {
    check_sphere(z, i, s)?;
    let mut out = z.truncate(i);
    let mut gen = fresh_gen(z);
    contract(&mut out, i, s, &mut gen);
    finish(out)
}

pub fn restrict_to_sphere(z: &ZoomComplex, i: usize, s: &str) -> Result<ZoomComplex, CalcError> {
    check_sphere(z, i, s)?;
    let mut out = z.truncate(i);
    let mut gen = fresh_gen(z);
    restrict(&mut out, i, s, &mut gen);
    finish(out)
}

fn remove_white(w: &mut Whites, x: &str) {
    for ws in w.values_mut() {
        ws.retain(|y| y != x);
    }
    w.retain(|_, ws| !ws.is_empty());
}

fn rename_white(w: &mut Whites, old: &str, new: &str) {
    for ws in w.values_mut() {
        for y in ws.iter_mut() {
            if y == old {
                *y = new.to_string();
            }
        }
    }
}

fn white_position<'a>(w: &'a Whites, x: &str) -> Option<(&'a Name, usize)> {
    w.iter().find_map(|(e, ws)| ws.iter().position(|y| y == x).map(|i| (e, i)))
}

/// Split the content of sphere `s` of `X(i)` into carrier dots and white dots.
fn content(z: &ZoomComplex, i: usize, s: &str) -> (Vec<Name>, Vec<Name>) {
    let n = &z.trees[i + 1];
    let mut blacks = Vec::new();
    let mut whites = Vec::new();
    for x in n.descendants(s) {
        if n.is_leaf(&x) {
            blacks.push(x);
        } else if n.is_null_dot(&x) {
            whites.push(x);
        }
    }
    (blacks, whites)
}

fn root_most(t: &Tree, xs: &[Name]) -> Name {
    xs.iter().min_by_key(|x| (t.depth(x), (*x).clone())).unwrap().clone()
}

/// Contract sphere `s` of `X(i)` to a dot, keeping lower levels in zoom
/// relation. Returns the name of the new dot.
fn contract(z: &mut ZoomComplex, i: usize, s: &str, gen: &mut NameGen) -> Name {
    let (blacks, whites) = content(z, i, s);
    let wset: BTreeSet<&Name> = whites.iter().collect();
    let dotless = blacks.is_empty();
    // locate the segment before the whites go away
    let segment = if dotless {
        let (e, _) = white_position(&z.whites[i], &whites[0]).expect("white dot on an edge");
        let e = e.clone();
        let list = z.whites[i][&e].clone();
        let first = list.iter().position(|w| wset.contains(w)).unwrap();
        let last = list.iter().rposition(|w| wset.contains(w)).unwrap();
        Some((e, list[..first].to_vec(), list[last + 1..].to_vec()))
    } else {
        None
    };
    z.trees[i + 1].prune_to_leaf(s);
    for w in &whites {
        remove_white(&mut z.whites[i], w);
    }
    let name = if z.trees[i].contains(s) { gen.fresh_like(s) } else { s.to_string() };
    if name != s {
        z.trees[i + 1].rename(s, &name).expect("fresh name");
    }
    match segment {
        None => {
            let r = root_most(&z.trees[i], &blacks);
            let mut lost: Vec<Name> = blacks.iter().filter(|d| **d != r && z.trees[i].is_null_dot(d)).cloned().collect();
            for d in &blacks {
                if *d == r {
                    continue;
                }
                z.whites[i].remove(d);
                z.trees[i].splice_out(d).expect("non-root dot of the cut tree");
            }
            if i > 0 {
                // a merged dot left without inputs takes over one white below
                let became_null = z.trees[i].children(&r).is_empty() && white_position(&z.whites[i - 1], &r).is_none();
                lost.sort_by_key(|x| white_position(&z.whites[i - 1], x).map(|(_, k)| k));
                for (j, x) in lost.iter().enumerate() {
                    if j == 0 && became_null {
                        rename_white(&mut z.whites[i - 1], x, &r);
                    } else {
                        remove_white(&mut z.whites[i - 1], x);
                    }
                }
            }
            z.trees[i].rename(&r, &name).expect("fresh name");
            if let Some(ws) = z.whites[i].remove(&r) {
                z.whites[i].insert(name.clone(), ws);
            }
            if i > 0 {
                rename_white(&mut z.whites[i - 1], &r, &name);
            }
        }
        Some((e, below, above)) => {
            z.trees[i].insert_below(&e, &name).expect("fresh name");
            z.whites[i].remove(&e);
            if !below.is_empty() {
                z.whites[i].insert(name.clone(), below);
            }
            if !above.is_empty() {
                z.whites[i].insert(e, above);
            }
        }
    }
    name
}

/// Make a dot of the bottom tree a leaf.
fn contract_bottom(z: &mut ZoomComplex, c: &str) {
    z.trees[0].prune_to_leaf(c);
}

/// Restrict `X(i)` to sphere `s`, propagating downwards.
fn restrict(z: &mut ZoomComplex, i: usize, s: &str, gen: &mut NameGen) {
    let (blacks, whites) = content(z, i, s);
    let wset: BTreeSet<Name> = whites.iter().cloned().collect();
    let edge = if blacks.is_empty() {
        Some(white_position(&z.whites[i], &whites[0]).unwrap().0.clone())
    } else {
        None
    };
    z.trees[i + 1] = z.trees[i + 1].subtree(s);
    for ws in z.whites[i].values_mut() {
        ws.retain(|w| wset.contains(w));
    }
    z.whites[i].retain(|_, ws| !ws.is_empty());
    match edge {
        None => {
            let bset: BTreeSet<&Name> = blacks.iter().collect();
            let r = root_most(&z.trees[i], &blacks);
            let mut outside: Vec<Name> = Vec::new();
            for d in &blacks {
                for c in z.trees[i].children(d) {
                    if !bset.contains(c) && z.trees[i].is_dot(c) {
                        outside.push(c.clone());
                    }
                }
            }
            for c in outside {
                if i == 0 {
                    contract_bottom(z, &c);
                } else {
                    contract(z, i - 1, &c, gen);
                }
            }
            if i == 0 {
                z.trees[0] = z.trees[0].subtree(&r);
            } else {
                restrict(z, i - 1, &r, gen);
            }
        }
        Some(u) => {
            if z.trees[i].is_dot(&u) {
                if i == 0 {
                    contract_bottom(z, &u);
                } else {
                    contract(z, i - 1, &u, gen);
                }
            }
            if i == 0 {
                z.trees[0] = Tree::unit(&u);
            } else {
                restrict_to_dot(z, i - 1, &u, gen);
            }
        }
    }
}

/// Make `X(j)` the sphere-free constellation on the bouquet of dot `c`.
fn restrict_to_dot(z: &mut ZoomComplex, j: usize, c: &str, gen: &mut NameGen) {
    z.trees[j + 1] = Tree::unit(c);
    z.whites[j].clear();
    let kids: Vec<Name> = z.trees[j].children(c).iter().filter(|y| z.trees[j].is_dot(y)).cloned().collect();
    for y in kids {
        if j == 0 {
            contract_bottom(z, &y);
        } else {
            contract(z, j - 1, &y, gen);
        }
    }
    if j == 0 {
        z.trees[0] = z.trees[0].subtree(c);
    } else {
        restrict(z, j - 1, c, gen);
    }
}

impl Opetope {
    pub fn target(&self) -> Result<Opetope, CalcError> {
        if self.dim() == 0 {
            return Err(CalcError::NoTarget);
        }
        Ok(Opetope(self.0.truncate(self.dim() - 1)))
    }

    /// The source facet for sphere `s` of the top constellation.
    pub fn source(&self, s: &str) -> Result<Opetope, CalcError> {
        let n = self.dim();
        if n == 0 || !self.0.top().is_dot(s) {
            return Err(CalcError::UnknownFacet(s.into()));
        }
        let mut z = self.0.clone();
        let mut gen = fresh_gen(&z);
        restrict(&mut z, n, s, &mut gen);
        let mut kids: Vec<Name> = z.trees[n + 1].children(s).iter().filter(|c| z.trees[n + 1].is_dot(c)).cloned().collect();
        kids.sort();
        for c in kids {
            contract(&mut z, n, &c, &mut gen);
        }
        z.trees.pop();
        z.whites.pop();
        Opetope::new(z).map_err(CalcError::Invalid)
    }

    /// All source facets, by sphere name.
    pub fn sources(&self) -> Vec<(Name, Opetope)> {
        if self.dim() == 0 {
            return vec![];
        }
        self.0.top().dots().map(|s| (s.clone(), self.source(s).expect("facet of a valid opetope"))).collect()
    }
}

/// The result of gluing, with bookkeeping on the composition tree.
struct Glued {
    result: Opetope,
    /// names of the top nesting of the glued-in opetope inside the result
    renamed: BTreeMap<Name, Name>,
    /// leaves of that top nesting, matched with children of the facet
    graft: BTreeMap<Name, Name>,
}

/// Where a white dot has to go to sit right below a node of the layer of `f`.
fn layer_slots(r: &ZoomComplex, f: &str) -> BTreeMap<Name, (Name, usize)> {
    let n = r.degree();
    let top = &r.trees[n + 1];
    let whites = &r.whites[n];
    let sub = SubdividedTree { base: r.trees[n].clone(), whites: whites.clone() };
    let flat = sub.flatten();
    let k: BTreeSet<Name> = top.descendants(f).into_iter().filter(|x| top.children(x).is_empty()).collect();
    let pos_of = |x: &str| -> (Name, usize) {
        match white_position(whites, x) {
            Some((e, i)) => (e.clone(), i),
            None => (x.to_string(), whites.get(x).map_or(0, Vec::len)),
        }
    };
    let mut out = BTreeMap::new();
    for g in top.children(f) {
        let content: BTreeSet<Name> = top.descendants(g).into_iter().filter(|x| top.children(x).is_empty()).collect();
        let bottom = content.iter().find(|e| flat.parent(e).is_none_or(|p| !content.contains(p))).unwrap();
        out.insert(g.clone(), pos_of(bottom));
    }
    // exits: carrier edges leaving the content of f
    for m in &k {
        for c in flat.children(m) {
            if k.contains(c) {
                continue;
            }
            let u = if r.trees[n].contains(c) { c.clone() } else { white_position(whites, c).unwrap().0.clone() };
            let idx = whites
                .get(&u)
                .map_or(0, |ws| ws.iter().rposition(|w| k.contains(w)).map_or(0, |p| p + 1));
            out.insert(u.clone(), (u, idx));
        }
    }
    debug_assert!(is_connected_in(&flat, &k));
    out
}

fn glue_core(r: &Opetope, f: &str, s: &Opetope) -> Result<Glued, CalcError> {
    let n = r.dim();
    if s.dim() != n {
        return Err(CalcError::Dimension(r.dim(), s.dim()));
    }
    if n == 0 || !r.0.top().is_dot(f) {
        return Err(CalcError::UnknownFacet(f.into()));
    }
    let facet = r.source(f)?;
    let st = s.target()?;
    let iso = ZoomComplex::isomorphisms(&st.0, &facet.0)
        .into_iter()
        .next()
        .ok_or_else(|| CalcError::Mismatch(f.into()))?;
    let layer_iso = &iso[n];
    let slots = layer_slots(&r.0, f);
    let mut gen = NameGen::new("s", &r.0.all_names());
    let s_top = s.0.top();
    for l in s_top.leaves() {
        gen.reserve(l);
    }
    let mut renamed = BTreeMap::new();
    let mut graft = BTreeMap::new();
    for x in s_top.names() {
        if s_top.is_leaf(x) {
            graft.insert(x.clone(), layer_iso[x].clone());
        } else {
            renamed.insert(x.clone(), gen.fresh_like(x));
        }
    }
    // the inserted tree keeps leaf names so the graft can find them
    let mut names = renamed.clone();
    for l in graft.keys() {
        names.insert(l.clone(), l.clone());
    }
    let mut piece = crate::opetope::rename_tree(s_top, &names);
    // leaves may collide with names of the host; rename those out of the way
    let mut graft2 = BTreeMap::new();
    for (l, c) in &graft {
        let tmp = format!("{l}\u{1}");
        piece.rename(l, &tmp).expect("temporary name");
        graft2.insert(tmp, c.clone());
    }
    let mut top = r.0.top().clone();
    top.substitute(f, &piece, &graft2);
    // white dots of the top constellation
    let old = &r.0.whites[n];
    let mut inserts: BTreeMap<Name, BTreeMap<usize, Vec<Name>>> = BTreeMap::new();
    for (v, ws) in &s.0.whites[n] {
        let g = &layer_iso[v];
        let (e, idx) = slots[g].clone();
        let slot = inserts.entry(e).or_default().entry(idx).or_default();
        slot.extend(ws.iter().map(|w| renamed[w].clone()));
    }
    let mut whites = Whites::new();
    let keys: BTreeSet<Name> = old.keys().chain(inserts.keys()).cloned().collect();
    for e in keys {
        let orig = old.get(&e).cloned().unwrap_or_default();
        let ins = inserts.remove(&e).unwrap_or_default();
        let mut list = Vec::new();
        for idx in 0..=orig.len() {
            if let Some(v) = ins.get(&idx) {
                list.extend(v.iter().cloned());
            }
            if idx < orig.len() && orig[idx] != f {
                list.push(orig[idx].clone());
            }
        }
        if !list.is_empty() {
            whites.insert(e, list);
        }
    }
    let mut z = r.0.clone();
    *z.trees.last_mut().unwrap() = top;
    *z.whites.last_mut().unwrap() = whites;
    let result = Opetope::new(z).map_err(CalcError::Invalid)?;
    Ok(Glued { result, renamed, graft })
}

/// Glue `s` onto the source facet `f` of `r`.
pub fn glue(r: &Opetope, f: &str, s: &Opetope) -> Result<Opetope, CalcError> {
    Ok(glue_core(r, f, s)?.result)
}

/// A composition tree decorated by opetopes.
#[derive(Clone, Debug)]
pub enum Recipe {
    /// the unit tree, typed by an opetope one dimension lower
    Unit(Opetope),
    Node { name: Name, decoration: Opetope, inputs: BTreeMap<Name, Recipe> },
}

impl Recipe {
    pub fn leaf(name: &str, decoration: Opetope) -> Recipe {
        Recipe::Node { name: name.into(), decoration, inputs: BTreeMap::new() }
    }
}

#[derive(Clone, Debug)]
pub struct Composite {
    pub composite: Opetope,
    pub filler: Opetope,
    /// sphere of the filler's top constellation for each recipe node
    pub spheres: BTreeMap<Name, Name>,
}

struct Tracked {
    op: Opetope,
    /// white dots on edges of the composition tree, named by recipe nodes
    scars: Whites,
    /// recipe node owning each dot of the composition tree
    origin: BTreeMap<Name, Name>,
    /// recipe nodes with their parents
    parents: BTreeMap<Name, Option<Name>>,
}

fn track(recipe: &Recipe) -> Result<Tracked, CalcError> {
    let Recipe::Node { name, decoration, inputs } = recipe else {
        return Err(CalcError::Recipe("unit tree below a node".into()));
    };
    let ct = decoration.0.top();
    let mut scars = Whites::new();
    if ct.is_unit() {
        scars.insert(ct.root().to_string(), vec![name.clone()]);
    }
    let mut t = Tracked {
        op: decoration.clone(),
        scars,
        origin: ct.dots().map(|d| (d.clone(), name.clone())).collect(),
        parents: [(name.clone(), None)].into(),
    };
    for (f, sub) in inputs {
        if !decoration.0.top().is_dot(f) {
            return Err(CalcError::UnknownFacet(f.clone()));
        }
        if let Recipe::Unit(ty) = sub {
            if !ty.equals(&decoration.source(f)?) {
                return Err(CalcError::Mismatch(f.clone()));
            }
            continue;
        }
        let c = track(sub)?;
        let g = glue_core(&t.op, f, &c.op)?;
        let ct_c = c.op.0.top();
        let mut scars = t.scars.clone();
        let below_f = scars.remove(f).unwrap_or_default();
        if ct_c.is_unit() {
            let leaf = ct_c.root();
            let child = &g.graft[leaf];
            let mut list = below_f;
            list.extend(c.scars.get(leaf).cloned().unwrap_or_default());
            list.extend(scars.remove(child).unwrap_or_default());
            if !list.is_empty() {
                scars.insert(child.clone(), list);
            }
        } else {
            let root = &g.renamed[ct_c.root()];
            let mut list = below_f;
            list.extend(c.scars.get(ct_c.root()).cloned().unwrap_or_default());
            if !list.is_empty() {
                scars.insert(root.clone(), list);
            }
            for (e, ws) in &c.scars {
                if e == ct_c.root() {
                    continue;
                }
                if let Some(child) = g.graft.get(e) {
                    let mut list = ws.clone();
                    list.extend(scars.remove(child).unwrap_or_default());
                    scars.insert(child.clone(), list);
                } else {
                    scars.insert(g.renamed[e].clone(), ws.clone());
                }
            }
        }
        t.origin.remove(f);
        for (d, o) in &c.origin {
            t.origin.insert(g.renamed[d].clone(), o.clone());
        }
        for (k, p) in c.parents {
            t.parents.insert(k, p.or_else(|| Some(name.clone())));
        }
        t.scars = scars;
        t.op = g.result;
    }
    Ok(t)
}

/// Glue along every inner edge of a decorated composition tree and fill.
pub fn compose_recipe(recipe: &Recipe) -> Result<Composite, CalcError> {
    if let Recipe::Unit(ty) = recipe {
        return Ok(Composite { composite: glob_over(ty), filler: drop_over(ty), spheres: BTreeMap::new() });
    }
    check_names(recipe, &mut BTreeSet::new())?;
    let t = track(recipe)?;
    let mut z = t.op.0.clone();
    let n = t.op.dim();
    let ct = z.trees[n + 1].clone();
    // recipe node names become sphere names; keep them clear of the carrier
    let mut gen = NameGen::new("s", &z.all_names());
    let mut sphere: BTreeMap<Name, Name> = BTreeMap::new();
    for k in t.parents.keys() {
        sphere.insert(k.clone(), gen.fresh_like(k));
    }
    let mut raw = Vec::new();
    for (k, p) in &t.parents {
        raw.push(crate::tree::RawNode::dot(&sphere[k], p.as_ref().map(|p| sphere[p].as_str())));
    }
    for (d, o) in &t.origin {
        raw.push(crate::tree::RawNode::leaf(d, Some(&sphere[o])));
    }
    let nesting = Tree::from_raw(&raw).map_err(|v| CalcError::Recipe(v[0].to_string()))?;
    let scars: Whites = t
        .scars
        .iter()
        .map(|(e, ws)| (e.clone(), ws.iter().map(|w| sphere[w].clone()).collect()))
        .collect();
    debug_assert!(ct.names().all(|x| z.trees[n + 1].contains(x)));
    z.trees.push(nesting);
    z.whites.push(scars);
    let filler = Opetope::new(z).map_err(CalcError::Invalid)?;
    Ok(Composite { composite: t.op, filler, spheres: sphere })
}

fn check_names(r: &Recipe, seen: &mut BTreeSet<Name>) -> Result<(), CalcError> {
    if let Recipe::Node { name, inputs, decoration } = r {
        if !seen.insert(name.clone()) {
            return Err(CalcError::Recipe(format!("node name `{name}` used twice")));
        }
        let dims: BTreeSet<usize> = inputs
            .values()
            .filter_map(|s| match s {
                Recipe::Node { decoration, .. } => Some(decoration.dim()),
                Recipe::Unit(_) => None,
            })
            .collect();
        if let Some(d) = dims.into_iter().find(|d| *d != decoration.dim()) {
            return Err(CalcError::Dimension(decoration.dim(), d));
        }
        for s in inputs.values() {
            check_names(s, seen)?;
        }
    }
    Ok(())
}

/// The filler with target `glue(r, f, s)` and sources `r` and `s`.
pub fn fill(r: &Opetope, f: &str, s: &Opetope) -> Result<Opetope, CalcError> {
    fill_named(r, f, s, "R", "S")
}

pub fn fill_named(r: &Opetope, f: &str, s: &Opetope, r_name: &str, s_name: &str) -> Result<Opetope, CalcError> {
    if r_name == s_name {
        return Err(CalcError::Recipe("the two spheres need distinct names".into()));
    }
    let recipe = Recipe::Node {
        name: r_name.into(),
        decoration: r.clone(),
        inputs: [(f.to_string(), Recipe::leaf(s_name, s.clone()))].into(),
    };
    Ok(compose_recipe(&recipe)?.filler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opetope::Opetope;

    fn t(s: &str) -> Tree {
        Tree::from_term(s).unwrap()
    }

    fn w(v: &[(&str, &[&str])]) -> Whites {
        v.iter().map(|(e, ws)| (e.to_string(), ws.iter().map(|x| x.to_string()).collect())).collect()
    }

    #[test]
    fn contracting_a_lone_sphere() {
        let x = Opetope::linear(1);
        let c = contract_sphere(x.complex(), 2, "2.0").unwrap();
        assert!(c.constellation(2).is_sphere_free());
        assert_eq!(c.truncate(1).canonical_key(), x.complex().truncate(1).canonical_key());
        assert!(c.carrier(2).is_dot("2.0"));
    }

    #[test]
    fn erase_and_draw() {
        let x = Opetope::linear(2);
        let e = erase_sphere(x.complex(), 2, "2.1").unwrap();
        assert_eq!(e.nesting(2).dot_count(), 1);
        assert_eq!(erase_sphere(x.complex(), 2, "2.0"), Err(CalcError::OuterSphere("2.0".into())));
        let d = draw_sphere(&e, 2, "1.0").unwrap();
        assert!(Opetope::new(d).unwrap().equals(&x));
        let free = contract_sphere(Opetope::linear(1).complex(), 2, "2.0").unwrap();
        let back = draw_sphere(&free, 2, "2.0").unwrap();
        assert!(Opetope::new(back).unwrap().equals(&Opetope::linear(1)));
    }

    #[test]
    fn erase_inside_a_null_sphere() {
        let d = crate::opetope::glob_over(&crate::opetope::drop_over(&Opetope::arrow()));
        let top = d.dim();
        let inner = d.composition_tree().root().to_string();
        let wrapped = draw_sphere(d.complex(), top, &inner).unwrap();
        let back = erase_sphere(&wrapped, top, &inner).unwrap();
        assert!(Opetope::new(back).unwrap().equals(&d));
    }

    #[test]
    fn restricting_to_the_outer_sphere_is_identity() {
        let x = Opetope::linear(3);
        assert_eq!(restrict_to_sphere(x.complex(), 2, "2.0").unwrap(), *x.complex());
    }

    #[test]
    fn glob_faces() {
        let f = Opetope::linear(2);
        let g = glob_over(&f);
        assert!(g.target().unwrap().equals(&f));
        let s = g.sources();
        assert_eq!(s.len(), 1);
        assert!(s[0].1.equals(&f));
    }

    #[test]
    fn drop_faces() {
        let d = drop_over(&Opetope::arrow());
        assert!(d.sources().is_empty());
        assert!(d.target().unwrap().is_glob());
        assert!(d.target().unwrap().equals(&glob_over(&Opetope::arrow())));
    }

    #[test]
    fn gluing_a_glob_is_identity() {
        let r = Opetope::linear(3);
        for (f, face) in r.sources() {
            let g = glue(&r, &f, &glob_over(&face)).unwrap();
            assert!(g.equals(&r));
        }
    }

    #[test]
    fn gluing_2_opetopes_adds_spheres() {
        // in dimension 2 gluing composes linear nestings
        let r = Opetope::linear(2);
        let s = Opetope::linear(3);
        let g = glue(&r, "2.1", &s);
        // the facet 2.1 of r is an arrow, the target of s is an arrow
        let g = g.unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.complex().top().dot_count(), 4);
    }

    #[test]
    fn unit_recipe_gives_a_drop() {
        let c = compose_recipe(&Recipe::Unit(Opetope::arrow())).unwrap();
        assert!(c.filler.is_drop());
        assert!(c.composite.equals(&glob_over(&Opetope::arrow())));
    }

    #[test]
    fn one_node_recipe_gives_a_glob() {
        let f = Opetope::linear(2);
        let c = compose_recipe(&Recipe::leaf("a", f.clone())).unwrap();
        assert!(c.composite.equals(&f));
        assert!(c.filler.equals(&glob_over(&f)));
    }

    #[test]
    fn filling_with_a_drop_leaves_a_scar() {
        let r = Opetope::linear(2);
        let x = fill(&r, "2.1", &drop_over(&Opetope::point())).unwrap();
        let top = x.complex().top();
        assert_eq!(top.dot_count(), 2);
        assert_eq!(x.complex().whites(x.dim()).values().flatten().count(), 1);
    }

    #[test]
    fn mismatched_gluing_fails() {
        let r = glob_over(&Opetope::linear(2));
        let s = glob_over(&Opetope::linear(3));
        let f = r.complex().top().root().to_string();
        assert_eq!(glue(&r, &f, &s).unwrap_err(), CalcError::Mismatch(f));
    }

    #[test]
    fn z_like_null_sphere_complex() {
        // a 3-opetope with a null-sphere: carrier a line with dots u1,u2
        let x = Opetope::from_nestings(
            vec![t("z0(p)"), t("z1(z0)"), t("u1(u2(z1))"), t("b(a(u1) u2 n())")],
            vec![Whites::new(), Whites::new(), w(&[("u2", &["n"])])],
        )
        .unwrap();
        let sn = x.source("n").unwrap();
        assert!(sn.is_drop());
        let sb = x.source("b").unwrap();
        assert_eq!(sb.complex().top().dot_count(), 3);
        assert_eq!(x.sources().len(), 3);
    }

    fn levels(o: &Opetope) -> Vec<String> {
        o.complex().trees[1..].iter().map(Tree::to_term).collect()
    }

    #[test]
    fn five_cell_sources() {
        let x = crate::fixtures::five_cell();
        let s13 = x.source("13").unwrap();
        let want = |v: &[&str]| v.iter().map(|s| Tree::from_term(s).unwrap().to_term()).collect::<Vec<_>>();
        assert_eq!(levels(&s13), want(&["x0(p)", "1(x0)", "2(3(4(1)))", "5(6(7(3) 2) 4)", "14(15(5 16(12(6 7))))"]));
        assert!(s13.complex().whites(4).is_empty());
        let s14 = x.source("14").unwrap();
        assert_eq!(levels(&s14), want(&["x0(p)", "1(x0)", "2(3(4(1)))", "9(2 3 4)", "8(9 10())"]));
        assert_eq!(s14.complex().whites(4), &w(&[("4", &["10"])]));
        let s15 = x.source("15").unwrap();
        assert_eq!(levels(&s15), want(&["x0(p)", "1(x0)", "2(3(4(1)))", "5(12(2 3) 4)", "9(11(5) 12)"]));
        let s16 = x.source("16").unwrap();
        assert_eq!(levels(&s16), want(&["x0(p)", "4(x0)", "2(3(4))", "12(2 3)", "12"]));
        assert!(s16.is_drop());
        assert_eq!(x.sources().len(), 4);
        for (name, fixture) in crate::fixtures::five_cell_sources() {
            assert!(x.source(name).unwrap().equals(&fixture), "{name}");
        }
        assert_eq!(x.composition_tree().to_term(), t("13(14(8 10) 15(9 11) 16() 12)").to_term());
    }

    #[test]
    fn gluing_example() {
        let (r, f, s) = crate::fixtures::gluing_pair();
        let g = glue(&r, f, &s).unwrap();
        assert_eq!(*g.composition_tree(), crate::fixtures::glued_composition_tree());
        assert_eq!(g.complex().whites(5), &w(&[("d1", &["sN1"]), ("d4", &["sN2"]), ("e", &["z"]), ("k", &["b"])]));
        assert!(g.target().unwrap().equals(&r.target().unwrap()));
        let x = fill(&r, f, &s).unwrap();
        assert!(x.target().unwrap().equals(&g));
        let srcs: Vec<Opetope> = x.sources().into_iter().map(|(_, o)| o).collect();
        assert_eq!(srcs.len(), 2);
        assert!(srcs.iter().any(|o| o.equals(&r)) && srcs.iter().any(|o| o.equals(&s)));
    }
}
