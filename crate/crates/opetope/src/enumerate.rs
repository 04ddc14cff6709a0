//! Exhaustive enumeration of opetopes up to a size bound.
//!
//! `O(n, B)` holds the n-opetopes whose top nesting has at most `B` dots and
//! whose target and sources all lie in `O(n - 1, B)`. The bound therefore
//! applies to every face, which is what makes the sets closed under the
//! face maps.

use std::collections::{BTreeMap, BTreeSet};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::constellation::enumerate_on;
use crate::opetope::{CanonKey, Opetope};
use crate::tree::NameGen;

/// Environment variable capping the bound accepted by [`enumerate`] callers.
pub const MAX_DOTS_VAR: &str = "OPETOPE_MAX_DOTS";

/// All n-opetopes within `bound`, in canonical form, sorted by canonical key.
pub fn enumerate(n: usize, bound: usize) -> Vec<Opetope> {
    tower(n, bound).pop().unwrap().into_values().collect()
}

/// `O(0, B) ..= O(n, B)`, each keyed by canonical key.
pub fn tower(n: usize, bound: usize) -> Vec<BTreeMap<CanonKey, Opetope>> {
    let mut out: Vec<BTreeMap<CanonKey, Opetope>> = Vec::new();
    for k in 0..=n {
        let level = match k {
            0 => vec![Opetope::point()],
            1 => vec![Opetope::arrow()],
            2 => (0..=bound).map(Opetope::linear).collect(),
            _ => next_level(&out[k - 1], bound),
        };
        out.push(level.into_iter().map(|o| o.canonical()).map(|o| (o.canonical_key(), o)).collect());
    }
    out
}

fn next_level(prev: &BTreeMap<CanonKey, Opetope>, bound: usize) -> Vec<Opetope> {
    let keys: BTreeSet<&CanonKey> = prev.keys().collect();
    let over = |w: &Opetope| -> Vec<Opetope> {
        let mut names = NameGen::new("t", &w.complex().all_names());
        let mut found = Vec::new();
        for c in enumerate_on(w.complex().top(), bound, &mut names) {
            let mut z = w.complex().clone();
            z.trees.push(c.nesting);
            z.whites.push(c.whites);
            let Ok(x) = Opetope::new(z) else { continue };
            if x.sources().iter().all(|(_, s)| keys.contains(&s.canonical_key())) {
                found.push(x.canonical());
            }
        }
        found
    };
    #[cfg(feature = "parallel")]
    let all: Vec<Opetope> = prev.par_iter().flat_map_iter(|(_, w)| over(w)).collect();
    #[cfg(not(feature = "parallel"))]
    let all: Vec<Opetope> = prev.values().flat_map(over).collect();
    let mut seen = BTreeMap::new();
    for x in all {
        seen.entry(x.canonical_key()).or_insert(x);
    }
    seen.into_values().collect()
}

/// Planar structure of a 3-opetope: its top nesting with children ordered
/// along the linear carrier below. Leaves print as `l`.
pub fn planar_code(x: &Opetope) -> Option<String> {
    if x.dim() != 3 {
        return None;
    }
    let z = x.complex();
    let line = z.carrier(3);
    let whites = z.whites(3);
    let nest = z.top();
    let pos = |e: &str| -> (usize, usize, usize) {
        if line.contains(e) {
            (line.depth(e), 1, 0)
        } else {
            let (k, i) = whites.iter().find_map(|(k, ws)| ws.iter().position(|w| w == e).map(|i| (k, i))).unwrap();
            (line.depth(k), 0, i)
        }
    };
    fn go(t: &crate::tree::Tree, x: &str, pos: &dyn Fn(&str) -> (usize, usize, usize)) -> ((usize, usize, usize), String) {
        if t.is_leaf(x) {
            return (pos(x), "l".into());
        }
        if t.children(x).is_empty() {
            return (pos(x), "()".into());
        }
        let mut kids: Vec<_> = t.children(x).iter().map(|c| go(t, c, pos)).collect();
        kids.sort();
        let first = kids[0].0;
        (first, format!("({})", kids.into_iter().map(|k| k.1).collect::<String>()))
    }
    Some(go(nest, nest.root(), &pos).1)
}
